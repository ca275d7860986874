//! Riesz means `F^{-1}[(1 - rho/t)_+^delta f^]`, their maximal function over a dyadic
//! `t`-grid, per-piece maximal functions, and the atom experiments built on them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{AngularPartition, PieceMultiplier, RadialPiece};
use crate::fit::{fit_log2_vs, LineFit};
use crate::fourier::kernels::envelope_p;
use crate::fourier::{synthesize, Domain, GridSpec, SampledField};
use crate::gauge::{auxiliary_index, critical_index, Gauge};
use crate::hardy::{lp_norm_p, make_atom, weak_quasinorm, Atom, AtomCertificate, AtomSpec};
use crate::surface::{ConvexSurface, OmegaProfile};
use crate::{Error, Result};

/// Dyadic `t`-grid `2^{log2_min + j/J}`, `j = 0, 1, ...` up to `2^{log2_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TGrid {
    pub log2_min: f64,
    pub log2_max: f64,
    pub per_octave: u32,
}

impl TGrid {
    pub const MIN_PER_OCTAVE: u32 = 8;
    /// Octaves covered on each side of the atom scale `1/s`.
    pub const SPAN: f64 = 6.0;

    pub fn new(log2_min: f64, log2_max: f64, per_octave: u32) -> Result<Self> {
        if per_octave < Self::MIN_PER_OCTAVE {
            return Err(Error::Domain(format!(
                "t-grid needs at least {} points per octave, got {per_octave}",
                Self::MIN_PER_OCTAVE
            )));
        }
        if !(log2_max > log2_min) || !log2_min.is_finite() || !log2_max.is_finite() {
            return Err(Error::Domain(format!("empty t-range [2^{log2_min}, 2^{log2_max}]")));
        }
        Ok(Self { log2_min, log2_max, per_octave })
    }

    /// `[2^{-6}/s, min(2^6/s, t_cap)]`: the scales that see an atom of radius `s`,
    /// clipped where the multiplier support leaves the grid's frequency box.
    pub fn for_atom(s: f64, t_cap: f64, per_octave: u32) -> Result<Self> {
        let centre = -s.log2();
        Self::new(centre - Self::SPAN, (centre + Self::SPAN).min(t_cap.log2()), per_octave)
    }

    pub fn points(&self) -> Vec<f64> {
        let j = self.per_octave as f64;
        let count = ((self.log2_max - self.log2_min) * j + 1e-9).floor() as usize + 1;
        (0..count).map(|i| 2f64.powf(self.log2_min + i as f64 / j)).collect()
    }

    /// Twice the density; contains every point of `self`.
    pub fn refined(&self) -> Self {
        Self { per_octave: 2 * self.per_octave, ..*self }
    }

    /// Grid for `f(A_s x)`: every `t` divided by `s`.
    pub fn dilated(&self, s: f64) -> Self {
        let d = s.log2();
        Self { log2_min: self.log2_min - d, log2_max: self.log2_max - d, ..*self }
    }
}

/// Spectrum of a space-domain field with the gauge tabulated on the frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub gauge: Gauge,
    pub f_hat: SampledField,
    rho: Vec<f64>,
    t_cap: f64,
}

impl Spectrum {
    pub fn new(f: &SampledField, gauge: &Gauge) -> Result<Self> {
        if f.domain != Domain::Space {
            return Err(Error::Usage("spectrum of a frequency-domain field".into()));
        }
        let g = f.grid;
        if gauge.dim() != g.n {
            return Err(Error::Usage(format!("gauge in dimension {} on an n = {} grid", gauge.dim(), g.n)));
        }
        let rho = (0..g.len()).into_par_iter().map(|i| gauge.evaluate(&g.freq_point(i))).collect();
        let nyquist = g.nyquist();
        let t_cap = gauge
            .coordinate_extent()
            .iter()
            .zip(gauge.dilation.generator())
            .map(|(e, d)| (nyquist / e).powf(1.0 / d))
            .fold(f64::INFINITY, f64::min);
        Ok(Self { gauge: gauge.clone(), f_hat: f.forward()?, rho, t_cap })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.f_hat.grid
    }

    /// Largest `t` whose ball `{rho < t}` fits in the frequency box.
    pub fn t_cap(&self) -> f64 {
        self.t_cap
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("t = {t} must be positive")));
        }
        if t > self.t_cap * (1.0 + 1e-12) {
            let g = self.grid();
            let factor = (t / self.t_cap).powf(self.gauge.dilation.generator().iter().cloned().fold(0.0, f64::max));
            let side = ((g.n_side as f64) * factor).ceil() as usize;
            return Err(Error::UnderResolved {
                reason: format!("t = {t:.4e} exceeds the grid's largest resolved t = {:.4e}", self.t_cap),
                required_n_side: side.next_power_of_two(),
            });
        }
        Ok(())
    }

    /// Inverse transform of `m(i, rho_i / t) f^_i`.
    pub fn filtered(&self, t: f64, m: impl Fn(usize, f64) -> f64 + Sync) -> Result<SampledField> {
        self.check_t(t)?;
        let data: Vec<Complex64> = self
            .f_hat
            .data
            .par_iter()
            .zip(self.rho.par_iter())
            .enumerate()
            .map(|(i, (z, r))| {
                let u = r / t;
                if u >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    z * m(i, u)
                }
            })
            .collect();
        SampledField { grid: self.f_hat.grid, domain: Domain::Frequency, data }.inverse()
    }

    pub fn riesz_mean(&self, delta: f64, t: f64) -> Result<SampledField> {
        check_delta(delta)?;
        self.filtered(t, |_, u| (1.0 - u).powf(delta))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta = {delta} must be positive")))
    }
}

/// One-shot Riesz mean of `f` at scale `t`.
pub fn riesz_mean(f: &SampledField, gauge: &Gauge, delta: f64, t: f64) -> Result<SampledField> {
    Spectrum::new(f, gauge)?.riesz_mean(delta, t)
}

/// Pointwise max over a `t`-grid with the index of the maximizing `t` per cell.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalField {
    #[serde(skip)]
    pub grid: GridSpec,
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub argmax: Vec<u32>,
    pub t_points: Vec<f64>,
}

impl MaximalField {
    /// `t` at which cell `i` attains its max.
    pub fn provenance(&self, i: usize) -> f64 {
        self.t_points[self.argmax[i] as usize]
    }

    pub fn to_field(&self) -> SampledField {
        SampledField {
            grid: self.grid,
            domain: Domain::Space,
            data: self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        }
    }
}

fn maximal_over(
    grid: GridSpec,
    ts: Vec<f64>,
    mut per_t: impl FnMut(f64) -> Result<SampledField>,
) -> Result<MaximalField> {
    let mut values = vec![0.0f64; grid.len()];
    let mut argmax = vec![0u32; grid.len()];
    for (j, &t) in ts.iter().enumerate() {
        let r = per_t(t)?;
        values
            .par_iter_mut()
            .zip(argmax.par_iter_mut())
            .zip(r.data.par_iter())
            .for_each(|((v, a), z)| {
                let m = z.norm();
                if m > *v {
                    *v = m;
                    *a = j as u32;
                }
            });
    }
    Ok(MaximalField { grid, values, argmax, t_points: ts })
}

/// `sup_t |R_t f|` over the grid.
pub fn maximal(spec: &Spectrum, delta: f64, tgrid: &TGrid) -> Result<MaximalField> {
    check_delta(delta)?;
    maximal_over(*spec.grid(), tgrid.points(), |t| spec.riesz_mean(delta, t))
}

/// `sup_t |F^{-1}[Phi_k(rho/t) Pi_{kl}(A_{1/t} xi) f^]|`.
pub fn piece_maximal(spec: &Spectrum, piece: &PieceMultiplier, tgrid: &TGrid) -> Result<MaximalField> {
    let g = *spec.grid();
    let dil = &spec.gauge.dilation;
    maximal_over(g, tgrid.points(), |t| {
        spec.filtered(t, |i, u| {
            if piece.radial.at_rho(u) == 0.0 {
                return 0.0;
            }
            piece.eval_with_rho(&dil.apply(1.0 / t, &g.freq_point(i)), u)
        })
    })
}

/// `||F^{-1}[(1 - rho)_+^delta]||_{L^1}` by grid summation.
pub fn kernel_l1_norm(gauge: &Gauge, delta: f64, grid: &GridSpec) -> Result<f64> {
    check_delta(delta)?;
    let extent = gauge.coordinate_extent().into_iter().fold(0.0, f64::max);
    let k = synthesize(grid, grid.freq_spacing() * 4.0, extent, |xi| {
        let r = gauge.evaluate(xi);
        if r >= 1.0 {
            0.0
        } else {
            (1.0 - r).powf(delta)
        }
    })?;
    Ok(k.data.par_iter().map(|z| z.norm()).sum::<f64>() * grid.cell_volume())
}

/// `mu = ceil(n (1/q - 1))`, the moment order used with exponent `q`.
pub fn moment_order(n: usize, q: f64) -> u32 {
    let v = n as f64 * (1.0 / q - 1.0);
    (v - 1e-12).ceil().max(0.0) as u32
}

/// Seeded atom of radius `s` with a center offset in `[-s/2, s/2]^n`.
pub fn seeded_atom_spec(n: usize, p: f64, mu: u32, s: f64, seed: u64) -> AtomSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a70b);
    let center = (0..n).map(|_| rng.gen_range(-0.5..0.5) * s).collect();
    AtomSpec { p, mu, center, radius: s, seed }
}

/// Grid with half-width `radii * s` and `n_side` points per axis.
pub fn atom_grid(n: usize, n_side: usize, s: f64, radii: f64) -> Result<GridSpec> {
    GridSpec::new(n, n_side, radii * s)
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Split of a maximal field into the double ball `B(x0; 2s)` and its complement.
fn split_values(m: &MaximalField, atom: &Atom) -> (Vec<f64>, Vec<f64>) {
    let g = &m.grid;
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let inside = distance(&g.point(i), &atom.center) < 2.0 * atom.radius;
            let v = m.values[i];
            if inside {
                (v, 0.0)
            } else {
                (0.0, v)
            }
        })
        .unzip()
}

/// Fixed parameters of an atom experiment.
#[derive(Debug, Clone, Serialize)]
pub struct AtomSetup {
    pub gauge: Gauge,
    pub p: f64,
    pub delta: f64,
    pub mu: u32,
    pub n_side: usize,
    /// Box half-width in units of the atom radius.
    pub radii: f64,
    pub per_octave: u32,
}

impl AtomSetup {
    fn grid(&self, s: f64) -> Result<GridSpec> {
        atom_grid(self.gauge.dim(), self.n_side, s, self.radii)
    }

    fn prepare(&self, spec: &AtomSpec) -> Result<(Atom, Spectrum, TGrid)> {
        let grid = self.grid(spec.radius)?;
        let atom = make_atom(&grid, spec)?;
        let spectrum = Spectrum::new(&atom.sample(&grid), &self.gauge)?;
        let tgrid = TGrid::for_atom(spec.radius, spectrum.t_cap(), self.per_octave)?;
        Ok((atom, spectrum, tgrid))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakAtomReport {
    pub seed: u64,
    pub scale: f64,
    pub center: Vec<f64>,
    pub certificate: AtomCertificate,
    /// `||M a||_{p,inf}^p`.
    pub quasinorm_p: f64,
    /// The same restricted to `B(x0; 2s)` and to its complement.
    pub inside_p: f64,
    pub outside_p: f64,
    /// `sup_{B(x0;2s)} M a / (||H||_1 |B|^{-1/p})`; at most one up to sup discretization.
    pub inside_sup_ratio: f64,
    /// `sup M a(x) s^{n/p} (1 + |x - x0|/s)^{n/p} / Omega((x - x0)/|x - x0|)` outside the
    /// double ball, within the central half of the box.
    pub envelope_constant: Option<f64>,
    pub t_points: usize,
}

/// Weak-type data of one atom at the critical-type experiment's `delta`.
pub fn weak_type_atom(
    setup: &AtomSetup,
    omega: Option<&OmegaProfile>,
    kernel_l1: f64,
    spec: &AtomSpec,
) -> Result<(WeakAtomReport, MaximalField)> {
    weak_type_atom_with(setup, omega, kernel_l1, spec, None)
}

fn weak_type_atom_with(
    setup: &AtomSetup,
    omega: Option<&OmegaProfile>,
    kernel_l1: f64,
    spec: &AtomSpec,
    tgrid_override: Option<TGrid>,
) -> Result<(WeakAtomReport, MaximalField)> {
    let (atom, spectrum, tgrid) = setup.prepare(spec)?;
    let tgrid = tgrid_override.unwrap_or(tgrid);
    let m = maximal(&spectrum, setup.delta, &tgrid)?;
    let g = m.grid;
    let p = setup.p;
    let cv = g.cell_volume();
    let (inside, outside) = split_values(&m, &atom);
    let quasinorm_p = weak_quasinorm(&m.values, p, cv).quasinorm.powf(p);
    let inside_p = weak_quasinorm(&inside, p, cv).quasinorm.powf(p);
    let outside_p = weak_quasinorm(&outside, p, cv).quasinorm.powf(p);
    let inside_sup = inside.iter().cloned().fold(0.0, f64::max);
    let inside_sup_ratio = inside_sup / (kernel_l1 * atom.certificate.sup_bound);
    let n = g.n as f64;
    let s = atom.radius;
    let envelope_constant = match omega {
        Some(profile) => {
            let mut best = 0.0f64;
            for i in 0..g.len() {
                let x = g.point(i);
                if x.iter().any(|v| v.abs() > 0.5 * g.half_width) {
                    continue;
                }
                let d: Vec<f64> = x.iter().zip(&atom.center).map(|(a, b)| a - b).collect();
                let r = distance(&x, &atom.center);
                if r < 2.0 * s {
                    continue;
                }
                let om = profile.interpolate(&d)?;
                let v = m.values[i] * s.powf(n / p) * (1.0 + r / s).powf(n / p) / om;
                best = best.max(v);
            }
            Some(best)
        }
        None => None,
    };
    let report = WeakAtomReport {
        seed: spec.seed,
        scale: s,
        center: atom.center.clone(),
        certificate: atom.certificate,
        quasinorm_p,
        inside_p,
        outside_p,
        inside_sup_ratio,
        envelope_constant,
        t_points: m.t_points.len(),
    };
    Ok((report, m))
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakTypeEnsemble {
    pub p: f64,
    pub delta: f64,
    pub mu: u32,
    pub kernel_l1: f64,
    pub atoms: Vec<WeakAtomReport>,
    pub max_p: f64,
    pub min_p: f64,
    /// `max_p / min_p`.
    pub spread: f64,
    pub max_inside_p: f64,
    pub max_outside_p: f64,
    pub max_envelope: Option<f64>,
}

/// Weak quasinorms of `M^delta a` over seeded atoms at each scale.
pub fn weak_type_ensemble(
    setup: &AtomSetup,
    omega: Option<&OmegaProfile>,
    kernel_l1: f64,
    scales: &[f64],
    seeds: &[u64],
) -> Result<WeakTypeEnsemble> {
    let n = setup.gauge.dim();
    let mut atoms = Vec::with_capacity(scales.len() * seeds.len());
    for &s in scales {
        for &seed in seeds {
            let spec = seeded_atom_spec(n, setup.p, setup.mu, s, seed);
            atoms.push(weak_type_atom(setup, omega, kernel_l1, &spec)?.0);
        }
    }
    let max_of = |f: &dyn Fn(&WeakAtomReport) -> f64| atoms.iter().map(f).fold(0.0, f64::max);
    let max_p = max_of(&|a| a.quasinorm_p);
    let min_p = atoms.iter().map(|a| a.quasinorm_p).fold(f64::INFINITY, f64::min);
    let max_envelope = atoms.iter().filter_map(|a| a.envelope_constant).reduce(f64::max);
    Ok(WeakTypeEnsemble {
        p: setup.p,
        delta: setup.delta,
        mu: setup.mu,
        kernel_l1,
        max_p,
        min_p,
        spread: max_p / min_p,
        max_inside_p: max_of(&|a| a.inside_p),
        max_outside_p: max_of(&|a| a.outside_p),
        max_envelope,
        atoms,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RefinementDrift {
    pub base: f64,
    pub refined_t: f64,
    pub refined_grid: f64,
    /// `|refined / base - 1|` for `J -> 2J` and for `N_side -> 2 N_side` at fixed box.
    pub drift_t: f64,
    pub drift_grid: f64,
}

/// Stability of `||M a||_{p,inf}^p` under `t`-grid and spatial refinement.
pub fn weak_type_drift(setup: &AtomSetup, kernel_l1: f64, spec: &AtomSpec) -> Result<RefinementDrift> {
    let base = weak_type_atom(setup, None, kernel_l1, spec)?.0.quasinorm_p;
    let (_, spectrum, tgrid) = setup.prepare(spec)?;
    drop(spectrum);
    let refined_t = weak_type_atom_with(setup, None, kernel_l1, spec, Some(tgrid.refined()))?.0.quasinorm_p;
    let fine = AtomSetup { n_side: 2 * setup.n_side, radii: setup.radii, ..setup.clone() };
    // keep the t-range of the coarse grid so only the spatial resolution changes
    let refined_grid = weak_type_atom_with(&fine, None, kernel_l1, spec, Some(tgrid))?.0.quasinorm_p;
    Ok(RefinementDrift {
        base,
        refined_t,
        refined_grid,
        drift_t: (refined_t / base - 1.0).abs(),
        drift_grid: (refined_grid / base - 1.0).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LpAtomReport {
    pub seed: u64,
    pub scale: f64,
    pub center: Vec<f64>,
    /// `||M a||_p^p`.
    pub norm_p: f64,
    pub inside_p: f64,
    pub outside_p: f64,
    /// `||M a||_{p,inf}^p`, never above `norm_p`.
    pub weak_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomicSumReport {
    pub coefficients: Vec<f64>,
    /// `||M f||_p^p` for `f = sum c_j a_j`.
    pub norm_p: f64,
    /// `sum |c_j|^p * max_j ||M a_j||_p^p`.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpEnsemble {
    pub p: f64,
    pub delta: f64,
    pub p_aux: f64,
    pub mu: u32,
    pub atoms: Vec<LpAtomReport>,
    pub max_p: f64,
    /// Max over seeds at each scale.
    pub per_scale_max: Vec<(f64, f64)>,
    /// Largest over smallest of `per_scale_max`.
    pub scale_spread: f64,
    pub atomic_sum: Option<AtomicSumReport>,
}

/// `delta` must exceed `delta(p)`; returns `p'`.
pub fn check_supercritical(p: f64, n: usize, delta: f64) -> Result<f64> {
    let crit = critical_index(p, n)?;
    if !(p < 1.0) {
        return Err(Error::Domain(format!("p = {p} must lie in (0, 1)")));
    }
    if delta <= crit.delta {
        return Err(Error::Precondition(format!(
            "strong-type bound requires delta > delta(p) = {}, got {delta}",
            crit.delta
        )));
    }
    auxiliary_index(delta, n)
}

/// `||M^delta a||_p^p` over seeded atoms, with an atomic-sum check at the first scale.
pub fn lp_bound_ensemble(setup: &AtomSetup, scales: &[f64], seeds: &[u64], sum_terms: usize) -> Result<LpEnsemble> {
    let n = setup.gauge.dim();
    let p_aux = check_supercritical(setup.p, n, setup.delta)?;
    let p = setup.p;
    let mut atoms = Vec::new();
    let mut per_scale_max = Vec::new();
    for &s in scales {
        let mut best = 0.0f64;
        for &seed in seeds {
            let spec = seeded_atom_spec(n, p, setup.mu, s, seed);
            let (atom, spectrum, tgrid) = setup.prepare(&spec)?;
            let m = maximal(&spectrum, setup.delta, &tgrid)?;
            let cv = m.grid.cell_volume();
            let (inside, outside) = split_values(&m, &atom);
            let r = LpAtomReport {
                seed,
                scale: s,
                center: atom.center.clone(),
                norm_p: lp_norm_p(&m.values, p, cv),
                inside_p: lp_norm_p(&inside, p, cv),
                outside_p: lp_norm_p(&outside, p, cv),
                weak_p: weak_quasinorm(&m.values, p, cv).quasinorm.powf(p),
            };
            best = best.max(r.norm_p);
            atoms.push(r);
        }
        per_scale_max.push((s, best));
    }
    let max_p = per_scale_max.iter().map(|x| x.1).fold(0.0, f64::max);
    let min_scale = per_scale_max.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let atomic_sum = match (scales.first(), sum_terms) {
        (Some(&s), k) if k > 0 => Some(atomic_sum_check(setup, s, &seeds[..k.min(seeds.len())], max_p)?),
        _ => None,
    };
    Ok(LpEnsemble {
        p,
        delta: setup.delta,
        p_aux,
        mu: setup.mu,
        atoms,
        max_p,
        scale_spread: max_p / min_scale,
        per_scale_max,
        atomic_sum,
    })
}

fn atomic_sum_check(setup: &AtomSetup, s: f64, seeds: &[u64], per_atom: f64) -> Result<AtomicSumReport> {
    let n = setup.gauge.dim();
    let grid = setup.grid(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.iter().fold(0x5u64, |a, b| a.rotate_left(7) ^ b));
    let mut coefficients = Vec::new();
    let mut data = vec![0.0f64; grid.len()];
    for &seed in seeds {
        let mut spec = seeded_atom_spec(n, setup.p, setup.mu, s, seed);
        // spread the atoms over the inner box
        for c in spec.center.iter_mut() {
            *c += rng.gen_range(-0.25..0.25) * grid.half_width;
        }
        let a = make_atom(&grid, &spec)?;
        let c: f64 = rng.gen_range(-1.0..1.0);
        coefficients.push(c);
        let f = a.sample(&grid);
        data.par_iter_mut().zip(&f.data).for_each(|(d, z)| *d += c * z.re);
    }
    let f = SampledField {
        grid,
        domain: Domain::Space,
        data: data.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    };
    let spectrum = Spectrum::new(&f, &setup.gauge)?;
    let tgrid = TGrid::for_atom(s, spectrum.t_cap(), setup.per_octave)?;
    let m = maximal(&spectrum, setup.delta, &tgrid)?;
    let norm_p = lp_norm_p(&m.values, setup.p, grid.cell_volume());
    let bound = coefficients.iter().map(|c| c.abs().powf(setup.p)).sum::<f64>() * per_atom;
    Ok(AtomicSumReport { coefficients, norm_p, bound })
}

#[derive(Debug, Clone, Serialize)]
pub struct PieceMass {
    pub k: u32,
    pub windows: usize,
    /// `sum_l ||M_{kl} a chi_{B(x0;2s)^c}||_p^p`.
    pub outside_p: f64,
    /// Max over `l` of `sup M_{kl} a / (s^{-n/p} 2^{-k(n-1)/(2p')} P_{kl}((x-x0)/s))`
    /// outside the double ball, within the central half of the box.
    pub envelope_constant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PieceDecayReport {
    pub p: f64,
    pub p_aux: f64,
    pub masses: Vec<PieceMass>,
    /// log2 of the per-k mass against `k`.
    pub fit: LineFit,
    /// `-(p/p' - 1)(n-1)/2`.
    pub predicted_slope: f64,
}

/// Per-`k` outside-ball `L^p` masses of the piece maximal functions of one atom.
pub fn piece_decay(
    setup: &AtomSetup,
    surface: &ConvexSurface,
    spec: &AtomSpec,
    ks: &[u32],
) -> Result<PieceDecayReport> {
    let n = setup.gauge.dim();
    let p = setup.p;
    let p_aux = check_supercritical(p, n, setup.delta)?;
    let (atom, spectrum, tgrid) = setup.prepare(spec)?;
    let g = *spectrum.grid();
    let s = atom.radius;
    let cv = g.cell_volume();
    let mut masses = Vec::new();
    for &k in ks {
        let partition = AngularPartition::build(surface, k)?;
        let radial = RadialPiece { k, delta: setup.delta };
        let scale = s.powf(-(n as f64) / p) * 2f64.powf(-(k as f64) * (n as f64 - 1.0) / (2.0 * p_aux));
        let mut outside_p = 0.0;
        let mut envelope_constant = 0.0f64;
        for l in 0..partition.count() {
            let piece = PieceMultiplier::new(radial, &partition, l)?;
            let m = piece_maximal(&spectrum, &piece, &tgrid)?;
            let (_, outside) = split_values(&m, &atom);
            outside_p += lp_norm_p(&outside, p, cv);
            let frame = piece.frame();
            let env = (0..g.len())
                .into_par_iter()
                .filter_map(|i| {
                    let x = g.point(i);
                    if outside[i] == 0.0 || x.iter().any(|v| v.abs() > 0.5 * g.half_width) {
                        return None;
                    }
                    let y: Vec<f64> = x.iter().zip(&atom.center).map(|(a, c)| (a - c) / s).collect();
                    Some(outside[i] / (scale * envelope_p(frame, p_aux, &y)))
                })
                .reduce(|| 0.0, f64::max);
            envelope_constant = envelope_constant.max(env);
        }
        masses.push(PieceMass { k, windows: partition.count(), outside_p, envelope_constant });
    }
    let xs: Vec<f64> = masses.iter().map(|m| m.k as f64).collect();
    let ys: Vec<f64> = masses.iter().map(|m| m.outside_p).collect();
    let fit = fit_log2_vs(&xs, &ys).ok_or_else(|| Error::Numerical("need two positive per-k masses".into()))?;
    Ok(PieceDecayReport {
        p,
        p_aux,
        masses,
        fit,
        predicted_slope: -(p / p_aux - 1.0) * (n as f64 - 1.0) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceReport {
    pub scale: f64,
    /// `max |M a(x) - s^{-nu/p} M b(A_{1/s} x)| / max M a` on the central half of the box.
    pub max_rel_error: f64,
}

/// Compares `M a` for `a(x) = s^{-nu/p} b(A_{1/s} x)` against the rescaled `M b`, with
/// `nu` the trace of the dilation generator. The two grids need not be aligned.
pub fn dilation_covariance(
    gauge: &Gauge,
    delta: f64,
    unit: &Atom,
    unit_grid: &GridSpec,
    scaled_grid: &GridSpec,
    s: f64,
    per_octave: u32,
) -> Result<CovarianceReport> {
    let nu: f64 = gauge.dilation.generator().iter().sum();
    let p = unit.p;
    let norm = s.powf(-nu / p);
    let dil = &gauge.dilation;
    let spec_b = Spectrum::new(&unit.sample(unit_grid), gauge)?;
    let tg_b = TGrid::for_atom(unit.radius, spec_b.t_cap(), per_octave)?;
    let mb = maximal(&spec_b, delta, &tg_b)?;
    let a = SampledField::from_real_space_fn(*scaled_grid, |x| norm * unit.eval(&dil.apply(1.0 / s, x)));
    let spec_a = Spectrum::new(&a, gauge)?;
    let ma = maximal(&spec_a, delta, &tg_b.dilated(s))?;
    let mb_field = mb.to_field();
    let g = scaled_grid;
    let peak = ma.values.iter().cloned().fold(0.0, f64::max);
    let err = (0..g.len())
        .into_par_iter()
        .filter_map(|i| {
            let x = g.point(i);
            if x.iter().any(|v| v.abs() > 0.5 * g.half_width) {
                return None;
            }
            let y = dil.apply(1.0 / s, &x);
            if y.iter().any(|v| v.abs() > 0.5 * unit_grid.half_width) {
                return None;
            }
            Some((ma.values[i] - norm * mb_field.interpolate(&y).re).abs())
        })
        .reduce(|| 0.0, f64::max);
    Ok(CovarianceReport { scale: s, max_rel_error: err / peak })
}
