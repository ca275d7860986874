//! Kernels of multiplier pieces and their decay diagnostics: anisotropic decay of
//! piece kernels, the `P_{kl}` envelope, envelope asymptotics of the full kernel along
//! rays, and decay of the low-frequency kernel.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{synthesize, GridSpec, SampledField};
use crate::decomp::{PieceMultiplier, RadialPiece};
use crate::fit::{fit_loglog, LineFit};
use crate::gauge::{auxiliary_index, Gauge};
use crate::surface::ConvexSurface;
use crate::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kernel of one piece `Phi_k^delta Pi_{kl}` with its frame.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    pub k: u32,
    pub l: usize,
    pub delta: f64,
    pub frame: Vec<Vec<f64>>,
    pub kernel: SampledField,
    /// `2^{-k(delta + 1 + (n-1)/2)}`.
    pub predicted_scale: f64,
}

impl KernelBundle {
    pub fn synthesize(piece: &PieceMultiplier, gauge: &Gauge, grid: &GridSpec) -> Result<Self> {
        let k = piece.radial.k;
        let n = grid.n as f64;
        let extent = gauge.coordinate_extent().into_iter().fold(0.0, f64::max);
        let kernel = synthesize(grid, 2f64.powi(-(k as i32) - 3), extent, |xi| {
            let rho = gauge.evaluate(xi);
            if rho >= 1.0 {
                0.0
            } else {
                piece.eval_with_rho(xi, rho)
            }
        })?;
        Ok(Self {
            k,
            l: piece.l,
            delta: piece.radial.delta,
            frame: piece.frame().to_vec(),
            kernel,
            predicted_scale: 2f64.powf(-(k as f64) * (piece.radial.delta + 1.0 + (n - 1.0) / 2.0)),
        })
    }

    /// `(1 + 2^{-k}|<x,e^0>|) prod_j (1 + 2^{-k/2}|<x,e^j>|)`.
    fn anisotropic_weight(&self, x: &[f64]) -> f64 {
        let k = self.k as f64;
        self.frame
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let s = if j == 0 { 2f64.powf(-k) } else { 2f64.powf(-k / 2.0) };
                1.0 + s * dot(x, e).abs()
            })
            .product()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub k: u32,
    pub order: u32,
    pub sup_abs: f64,
    pub predicted_scale: f64,
    /// `sup |H| w^N / 2^{-k(delta+1+(n-1)/2)}`.
    pub normalized_sup: f64,
    pub argmax: Vec<f64>,
    /// The weighted sup sits in the outer half of the box, where wrap-around dominates.
    pub inconclusive: bool,
}

/// Normalized weighted sup of a piece kernel for probe order `order` in `1..=3`.
pub fn decay_check(bundle: &KernelBundle, order: u32) -> Result<DecayReport> {
    if !(1..=3).contains(&order) {
        return Err(Error::Domain("decay probe order must be 1, 2 or 3".into()));
    }
    let g = &bundle.kernel.grid;
    let (best, idx) = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let x = g.point(i);
            (bundle.kernel.data[i].norm() * bundle.anisotropic_weight(&x).powi(order as i32), i)
        })
        .reduce(|| (0.0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let argmax = g.point(idx);
    let inconclusive = argmax.iter().any(|x| x.abs() > 0.5 * g.half_width);
    Ok(DecayReport {
        k: bundle.k,
        order,
        sup_abs: bundle.kernel.max_abs(),
        predicted_scale: bundle.predicted_scale,
        normalized_sup: best / bundle.predicted_scale,
        argmax,
        inconclusive,
    })
}

/// Half-maximum distance of `|H|` from the origin along each frame vector.
pub fn half_max_widths(bundle: &KernelBundle) -> Vec<f64> {
    let g = &bundle.kernel.grid;
    let peak = bundle.kernel.value_at_origin().norm();
    let step = 0.125 * g.spacing();
    bundle
        .frame
        .iter()
        .map(|e| {
            let mut r = 0.0;
            let mut prev = peak;
            while r < g.half_width {
                let next = r + step;
                let x: Vec<f64> = e.iter().map(|v| v * next).collect();
                let v = bundle.kernel.interpolate(&x).norm();
                if v < 0.5 * peak {
                    // linear interpolation of the crossing
                    return r + step * (prev - 0.5 * peak) / (prev - v);
                }
                prev = v;
                r = next;
            }
            g.half_width
        })
        .collect()
}

/// `P(x) = prod_j (1 + |<x, e^j>|)^{-1/p'}`.
pub fn envelope_p(frame: &[Vec<f64>], p_aux: f64, x: &[f64]) -> f64 {
    frame
        .iter()
        .map(|e| (1.0 + dot(x, e).abs()).powf(-1.0 / p_aux))
        .product()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub k: u32,
    pub p: f64,
    pub p_aux: f64,
    /// `sup (|H| + |grad H|) / (2^{-k(n-1)/(2p')} P)` on `|x|_inf <= L/2`.
    pub constant: f64,
    /// The same with `|H|` alone, unnormalized: `sup |H| / P`.
    pub value_sup: f64,
    /// `sup |grad H| / P`.
    pub gradient_sup: f64,
}

/// Envelope comparison of a piece kernel; needs `delta > delta(p)`, i.e. `p' < p`.
pub fn envelope_check(bundle: &KernelBundle, p: f64) -> Result<EnvelopeReport> {
    let g = &bundle.kernel.grid;
    let n = g.n;
    let p_aux = auxiliary_index(bundle.delta, n)?;
    if p_aux >= p {
        return Err(Error::Precondition(format!(
            "envelope needs delta > delta(p): delta = {} gives p' = {p_aux} >= p = {p}",
            bundle.delta
        )));
    }
    let h = g.spacing();
    let side = g.n_side;
    let data = &bundle.kernel.data;
    let (vs, gs) = (0..g.len())
        .into_par_iter()
        .filter_map(|i| {
            let x = g.point(i);
            if x.iter().any(|v| v.abs() > 0.5 * g.half_width) {
                return None;
            }
            let ix = g.unflatten(i);
            let mut grad2 = 0.0;
            for a in 0..n {
                let mut up = ix;
                let mut dn = ix;
                up[a] = (ix[a] + 1) % side;
                dn[a] = (ix[a] + side - 1) % side;
                let d: Complex64 = (data[g.flatten(&up[..n])] - data[g.flatten(&dn[..n])]) / (2.0 * h);
                grad2 += d.norm_sqr();
            }
            let env = envelope_p(&bundle.frame, p_aux, &x);
            Some((data[i].norm() / env, grad2.sqrt() / env))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let scale = 2f64.powf(-(bundle.k as f64) * (n as f64 - 1.0) / (2.0 * p_aux));
    Ok(EnvelopeReport {
        k: bundle.k,
        p,
        p_aux,
        constant: (vs + gs) / scale,
        value_sup: vs,
        gradient_sup: gs,
    })
}

/// Discrete `||P(. - x0)||_{L^p}^p` over the grid box.
pub fn envelope_norm_p(grid: &GridSpec, frame: &[Vec<f64>], p_aux: f64, p: f64, x0: &[f64]) -> f64 {
    let s: f64 = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x: Vec<f64> = grid.point(i).iter().zip(x0).map(|(a, b)| a - b).collect();
            envelope_p(frame, p_aux, &x).powf(p)
        })
        .sum();
    s * grid.cell_volume()
}

#[derive(Debug, Clone, Serialize)]
pub struct RayWindow {
    pub radius: f64,
    pub envelope: f64,
    /// `envelope (1+|x|)^{n/p-(n-1)/2} / sigma[B(xi(x), 1/|x|)]`.
    pub ratio: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub direction: Vec<f64>,
    pub p: f64,
    pub slope: LineFit,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub excluded: usize,
    pub windows: Vec<RayWindow>,
}

/// Envelope of `|H|` along a ray over consecutive windows of width `2 pi`, its log-log
/// slope on `r_range`, and the normalized ratio against cap measures. Windows whose
/// max falls below `1e-3` of the fitted envelope are excluded and the fit repeated.
pub fn kernel_asymptotics(
    kernel: &SampledField,
    surface: &ConvexSurface,
    p: f64,
    direction: &[f64],
    r_range: (f64, f64),
) -> Result<AsymptoticsReport> {
    let g = &kernel.grid;
    let n = g.n as f64;
    let width = 2.0 * std::f64::consts::PI;
    let step = 0.25 * g.spacing();
    let norm = dot(direction, direction).sqrt();
    let dir: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    let mut windows = Vec::new();
    let mut r0 = r_range.0;
    while r0 + width <= r_range.1 {
        let mut m = 0.0f64;
        let mut r = r0;
        while r < r0 + width {
            let x: Vec<f64> = dir.iter().map(|v| v * r).collect();
            m = m.max(kernel.interpolate(&x).norm());
            r += step;
        }
        let rc = r0 + 0.5 * width;
        let cap = surface.direction_cap(&dir, rc)?;
        let ratio = m * (1.0 + rc).powf(n / p - (n - 1.0) / 2.0) / cap;
        windows.push(RayWindow { radius: rc, envelope: m, ratio, excluded: false });
        r0 += width;
    }
    let fit_of = |ws: &[RayWindow]| {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            ws.iter().filter(|w| !w.excluded).map(|w| (w.radius, w.envelope)).unzip();
        fit_loglog(&xs, &ys).ok_or_else(|| Error::Numerical("too few windows on the ray".into()))
    };
    let first = fit_of(&windows)?;
    for w in windows.iter_mut() {
        let predicted = (first.intercept + first.slope * w.radius.ln()).exp();
        w.excluded = w.envelope < 1e-3 * predicted;
    }
    let slope = fit_of(&windows)?;
    let kept = windows.iter().filter(|w| !w.excluded);
    let ratio_min = kept.clone().map(|w| w.ratio).fold(f64::INFINITY, f64::min);
    let ratio_max = kept.map(|w| w.ratio).fold(0.0, f64::max);
    Ok(AsymptoticsReport {
        direction: dir,
        p,
        slope,
        ratio_min,
        ratio_max,
        excluded: windows.iter().filter(|w| w.excluded).count(),
        windows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowFrequencyDecay {
    pub order: u32,
    /// `sup |H_0| (1+|x|)^order / |H_0(0)|` on `|x| <= L/4`.
    pub normalized_sup: f64,
    /// `(r, exponent)`: log2 ratio of annulus RMS between consecutive octaves `[r, 2r)`.
    pub octave_exponents: Vec<(f64, f64)>,
    /// The last octave exponent is steeper than the first by at least one: decay is
    /// not a fixed power law.
    pub steepening: bool,
}

/// Kernel of the `k = 0` piece for the smooth power of `gauge`.
pub fn low_frequency_kernel(gauge: &Gauge, delta: f64, grid: &GridSpec) -> Result<SampledField> {
    let smooth = gauge.smooth_power()?;
    let piece = RadialPiece { k: 0, delta };
    let extent = gauge.coordinate_extent().into_iter().fold(0.0, f64::max);
    synthesize(grid, 0.125, extent, |xi| piece.at_rho(smooth.evaluate(xi)))
}

pub fn low_frequency_decay(kernel: &SampledField, order: u32) -> LowFrequencyDecay {
    let g = &kernel.grid;
    let quarter = 0.25 * g.half_width;
    let octaves = (quarter.log2().floor() as i32 - 2).max(0) as usize;
    let (sup, sums, counts) = (0..g.len())
        .into_par_iter()
        .fold(
            || (0.0f64, vec![0.0f64; octaves], vec![0usize; octaves]),
            |(mut m, mut s, mut c), i| {
                let x = g.point(i);
                let r = dot(&x, &x).sqrt();
                if r <= quarter {
                    let v = kernel.data[i].norm();
                    m = m.max(v * (1.0 + r).powi(order as i32));
                    if r >= 4.0 {
                        let j = (r / 4.0).log2().floor() as usize;
                        if j < octaves {
                            s[j] += v * v;
                            c[j] += 1;
                        }
                    }
                }
                (m, s, c)
            },
        )
        .reduce(
            || (0.0, vec![0.0; octaves], vec![0; octaves]),
            |a, b| {
                let s = a.1.iter().zip(&b.1).map(|(x, y)| x + y).collect();
                let c = a.2.iter().zip(&b.2).map(|(x, y)| x + y).collect();
                (a.0.max(b.0), s, c)
            },
        );
    let rms: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| (s / c.max(1) as f64).sqrt()).collect();
    let octave_exponents: Vec<(f64, f64)> = rms
        .windows(2)
        .enumerate()
        .map(|(j, w)| (4.0 * 2f64.powi(j as i32), (w[1] / w[0]).log2()))
        .collect();
    let steepening = match (octave_exponents.first(), octave_exponents.last()) {
        (Some(a), Some(b)) if octave_exponents.len() >= 2 => b.1 < a.1 - 1.0,
        _ => false,
    };
    let h0 = kernel.value_at_origin().norm();
    LowFrequencyDecay { order, normalized_sup: sup / h0, octave_exponents, steepening }
}
