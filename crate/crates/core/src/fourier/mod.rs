//! Uniform periodic grids, discrete Fourier synthesis, and the field file format.
//!
//! Conventions: space sample `j` sits at `x_j = -L + j h` with `h = 2L/N`; frequency
//! index `m` (FFT order, `m >= N/2` meaning `m - N`) sits at `xi_m = m pi / L`. The
//! forward transform approximates `int f(x) e^{-i <x, xi>} dx` and the inverse
//! `(2 pi)^{-n} int g(xi) e^{i <x, xi>} d xi`; for a band-limited multiplier the
//! synthesized kernel is exactly the `2L`-periodization of the continuous one.

mod fft;
mod io;
pub mod kernels;

pub use io::{decode as decode_field, encode as encode_field, read_field, write_field, FIELD_MAGIC, FIELD_VERSION};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Largest number of complex samples a single field may hold (2^26, 1 GiB).
pub const MAX_SAMPLES: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub n_side: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Space,
    Frequency,
}

impl GridSpec {
    pub fn new(n: usize, n_side: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Domain(format!("grids support n = 1..=3 (got {n})")));
        }
        if n_side < 4 || !n_side.is_power_of_two() {
            return Err(Error::Domain(format!("N_side = {n_side} must be a power of two >= 4")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain("half-width must be positive".into()));
        }
        let total = n_side
            .checked_pow(n as u32)
            .filter(|t| *t <= MAX_SAMPLES)
            .ok_or_else(|| {
                let suggest = (MAX_SAMPLES as f64).powf(1.0 / n as f64).log2().floor().exp2();
                Error::Domain(format!(
                    "N_side = {n_side} in n = {n} exceeds the memory bound of {MAX_SAMPLES} samples; use N_side <= {suggest}"
                ))
            })?;
        debug_assert!(total > 0);
        Ok(Self { n, n_side, half_width })
    }

    /// Same spacing, physical box scaled by `n_side / self.n_side`.
    pub fn with_side(&self, n_side: usize) -> Result<Self> {
        Self::new(self.n, n_side, self.half_width * n_side as f64 / self.n_side as f64)
    }

    pub fn len(&self) -> usize {
        self.n_side.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_side as f64
    }

    pub fn freq_spacing(&self) -> f64 {
        PI / self.half_width
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Signed frequency index in FFT order.
    pub fn freq_index(&self, m: usize) -> isize {
        if m < self.n_side / 2 {
            m as isize
        } else {
            m as isize - self.n_side as isize
        }
    }

    pub fn freq(&self, m: usize) -> f64 {
        self.freq_index(m) as f64 * self.freq_spacing()
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.n).rev() {
            out[a] = idx % self.n_side;
            idx /= self.n_side;
        }
        out
    }

    pub fn flatten(&self, ix: &[usize]) -> usize {
        ix.iter().take(self.n).fold(0, |acc, i| acc * self.n_side + i)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let ix = self.unflatten(idx);
        (0..self.n).map(|a| self.coord(ix[a])).collect()
    }

    pub fn freq_point(&self, idx: usize) -> Vec<f64> {
        let ix = self.unflatten(idx);
        (0..self.n).map(|a| self.freq(ix[a])).collect()
    }

    /// Flat index of the sample at `x = 0`.
    pub fn origin(&self) -> usize {
        let c = [self.n_side / 2; 3];
        self.flatten(&c[..self.n])
    }

    /// Checks that a multiplier with finest scale `finest` and support extent `extent`
    /// (max |xi_i|) is resolved; otherwise reports the `N_side` that would be needed.
    pub fn check_resolves(&self, finest: f64, extent: f64) -> Result<()> {
        if self.freq_spacing() > finest * (1.0 + 1e-12) {
            // keep the spacing h, grow the box until xi-spacing <= finest
            let needed_l = PI / finest;
            let side = (2.0 * needed_l / self.spacing()).ceil() as usize;
            return Err(Error::UnderResolved {
                reason: format!(
                    "frequency spacing {:.3e} exceeds the finest multiplier scale {finest:.3e}",
                    self.freq_spacing()
                ),
                required_n_side: side.next_power_of_two(),
            });
        }
        if extent >= self.nyquist() {
            let side = (2.0 * self.half_width * extent / PI).ceil() as usize + 1;
            return Err(Error::UnderResolved {
                reason: format!("multiplier extent {extent:.3e} reaches the Nyquist frequency {:.3e}", self.nyquist()),
                required_n_side: side.next_power_of_two(),
            });
        }
        Ok(())
    }
}

/// Complex samples on a grid, in space or frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: GridSpec,
    pub domain: Domain,
    pub data: Vec<Complex64>,
}

fn parity_sign(grid: &GridSpec, idx: usize) -> f64 {
    let ix = grid.unflatten(idx);
    let s: usize = ix.iter().take(grid.n).sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SampledField {
    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        Self { grid, domain, data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_space_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let data = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        Self { grid, domain: Domain::Space, data }
    }

    pub fn from_real_space_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        Self::from_space_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_freq_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let data = (0..grid.len()).into_par_iter().map(|i| f(&grid.freq_point(i))).collect();
        Self { grid, domain: Domain::Frequency, data }
    }

    /// Space to frequency.
    pub fn forward(&self) -> Result<SampledField> {
        if self.domain != Domain::Space {
            return Err(Error::Usage("forward transform expects a space-domain field".into()));
        }
        let mut data = self.data.clone();
        fft::transform(&mut data, self.grid.n, self.grid.n_side, false);
        let scale = self.grid.cell_volume();
        for (i, v) in data.iter_mut().enumerate() {
            *v *= scale * parity_sign(&self.grid, i);
        }
        Ok(Self { grid: self.grid, domain: Domain::Frequency, data })
    }

    /// Frequency to space.
    pub fn inverse(&self) -> Result<SampledField> {
        if self.domain != Domain::Frequency {
            return Err(Error::Usage("inverse transform expects a frequency-domain field".into()));
        }
        let mut data: Vec<Complex64> = self
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v * parity_sign(&self.grid, i))
            .collect();
        fft::transform(&mut data, self.grid.n, self.grid.n_side, true);
        let scale = (self.grid.freq_spacing() / (2.0 * PI)).powi(self.grid.n as i32);
        for v in data.iter_mut() {
            *v *= scale;
        }
        Ok(Self { grid: self.grid, domain: Domain::Space, data })
    }

    /// `int |f|^2 dx` (space) or `(2 pi)^{-n} int |f|^2 d xi` (frequency).
    pub fn energy(&self) -> f64 {
        let s: f64 = self.data.iter().map(|v| v.norm_sqr()).sum();
        match self.domain {
            Domain::Space => s * self.grid.cell_volume(),
            Domain::Frequency => s * (self.grid.freq_spacing() / (2.0 * PI)).powi(self.grid.n as i32),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |Im| / max |f|`.
    pub fn imag_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / m
    }

    pub fn value_at_origin(&self) -> Complex64 {
        self.data[self.grid.origin()]
    }

    /// Periodic multilinear interpolation at a physical point.
    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.n;
        let ns = g.n_side as isize;
        let mut base = [0isize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..n {
            let u = (x[a] + g.half_width) / h;
            let f = u.floor();
            base[a] = f as isize;
            frac[a] = u - f;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut ix = [0usize; 3];
            for a in 0..n {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                ix[a] = (base[a] + bit as isize).rem_euclid(ns) as usize;
            }
            if w != 0.0 {
                acc += self.data[g.flatten(&ix[..n])] * w;
            }
        }
        acc
    }

    /// Samples `|f|` along a ray from the origin, every `step` up to `r_max`.
    pub fn ray_extract(&self, direction: &[f64], r_max: f64, step: f64) -> Vec<(f64, f64)> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        let count = (r_max / step).floor() as usize;
        (0..=count)
            .map(|i| {
                let r = i as f64 * step;
                let x: Vec<f64> = direction.iter().map(|v| v / norm * r).collect();
                (r, self.interpolate(&x).norm())
            })
            .collect()
    }

    /// Largest modulus on the outer layer `|x|_inf >= 7L/8` relative to the overall max;
    /// a proxy for wrap-around contamination.
    pub fn boundary_ratio(&self) -> f64 {
        let g = &self.grid;
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let edge = (0..g.len())
            .filter(|&i| g.point(i).iter().any(|x| x.abs() >= 0.875 * g.half_width))
            .map(|i| self.data[i].norm())
            .fold(0.0, f64::max);
        edge / m
    }
}

/// Inverse transform of a real multiplier sampled on the frequency grid.
///
/// `finest` is the smallest frequency scale the multiplier varies on and `extent`
/// bounds `max |xi_i|` over its support; both are checked against the grid.
pub fn synthesize(
    grid: &GridSpec,
    finest: f64,
    extent: f64,
    multiplier: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<SampledField> {
    grid.check_resolves(finest, extent)?;
    SampledField::from_freq_fn(*grid, |xi| Complex64::new(multiplier(xi), 0.0)).inverse()
}
