//! Atoms of Hardy spaces, weak and strong `L^p` quasinorms on sampled fields, and the
//! summing inequality for weak `L^p` with `p < 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::fourier::{Domain, GridSpec, SampledField};
use crate::{Error, Result};

/// Lebesgue measure of the euclidean ball of radius `s` in dimension `n`.
pub fn ball_volume(n: usize, s: f64) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0 * s,
        2 => PI * s * s,
        3 => 4.0 / 3.0 * PI * s.powi(3),
        _ => unreachable!("dimension checked by GridSpec"),
    }
}

/// Multi-indices of total degree at most `d`, graded.
pub fn multi_indices(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=d {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, axis: usize, left: u32) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[axis] = e;
        fill(out, cur, axis + 1, left - e);
    }
}

fn monomial(y: &[f64], alpha: &[u32]) -> f64 {
    y.iter().zip(alpha).map(|(v, &e)| v.powi(e as i32)).product()
}

/// `exp(-1/(1-|y|^2))` on the open unit ball.
fn bump(y: &[f64]) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomCertificate {
    /// Max sampled `|a|`.
    pub sup: f64,
    /// `|B|^{-1/p}`.
    pub sup_bound: f64,
    /// Max over `|alpha| <= mu` of `|int a (x - x0)^alpha| / (|B|^{1-1/p} s^{|alpha|})`.
    pub moment_residual: f64,
}

/// Smooth `(p, mu)`-atom `a(x) = scale * eta(y) q(y)`, `y = (x - x0)/s`.
#[derive(Debug, Clone, Serialize)]
pub struct Atom {
    pub p: f64,
    pub mu: u32,
    pub center: Vec<f64>,
    pub radius: f64,
    /// `(alpha, coefficient)` of `q` in the rescaled variable.
    pub poly: Vec<(Vec<u32>, f64)>,
    pub scale: f64,
    pub certificate: AtomCertificate,
}

impl Atom {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn rescaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) / self.radius).collect()
    }

    fn shape(&self, y: &[f64]) -> f64 {
        let e = bump(y);
        if e == 0.0 {
            return 0.0;
        }
        e * self.poly.iter().map(|(a, c)| c * monomial(y, a)).sum::<f64>()
    }

    /// Closed-form value.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.scale * self.shape(&self.rescaled(x))
    }

    pub fn sample(&self, grid: &GridSpec) -> SampledField {
        SampledField::from_real_space_fn(*grid, |x| self.eval(x))
    }

    /// `|B(x0; s)|`.
    pub fn ball_volume(&self) -> f64 {
        ball_volume(self.dim(), self.radius)
    }

    /// Support, sup and moment conditions re-measured on `grid`.
    pub fn certify(&self, grid: &GridSpec) -> AtomCertificate {
        let field = self.sample(grid);
        certify_samples(&field, &self.center, self.radius, self.p, self.mu)
    }
}

fn certify_samples(field: &SampledField, center: &[f64], s: f64, p: f64, mu: u32) -> AtomCertificate {
    let g = &field.grid;
    let n = g.n;
    let vol = ball_volume(n, s);
    let alphas = multi_indices(n, mu);
    let cv = g.cell_volume();
    let sums = (0..g.len())
        .into_par_iter()
        .filter(|&i| field.data[i].re != 0.0)
        .fold(
            || vec![0.0f64; alphas.len()],
            |mut acc, i| {
                let y: Vec<f64> = g.point(i).iter().zip(center).map(|(a, c)| a - c).collect();
                for (m, a) in acc.iter_mut().zip(&alphas) {
                    *m += field.data[i].re * monomial(&y, a);
                }
                acc
            },
        )
        .reduce(
            || vec![0.0; alphas.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    let moment_residual = sums
        .iter()
        .zip(&alphas)
        .map(|(m, a)| {
            let deg: u32 = a.iter().sum();
            (m * cv).abs() / (vol.powf(1.0 - 1.0 / p) * s.powi(deg as i32))
        })
        .fold(0.0, f64::max);
    AtomCertificate { sup: field.max_abs(), sup_bound: vol.powf(-1.0 / p), moment_residual }
}

/// Parameters of [`make_atom`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomSpec {
    pub p: f64,
    pub mu: u32,
    pub center: Vec<f64>,
    pub radius: f64,
    pub seed: u64,
}

/// Builds an atom whose moments of order `<= mu` vanish under the quadrature of `grid`.
///
/// The polynomial has degree `mu + 1` with seeded coefficients; its projection onto
/// degree `<= mu` under the weight `eta` is removed by a Gram solve. The sup is scaled
/// to half the atom bound.
pub fn make_atom(grid: &GridSpec, spec: &AtomSpec) -> Result<Atom> {
    let n = grid.n;
    if !(spec.p > 0.0 && spec.p <= 1.0) {
        return Err(Error::Domain(format!("atom exponent p = {} outside (0, 1]", spec.p)));
    }
    if !(spec.radius > 0.0 && spec.radius.is_finite()) {
        return Err(Error::Domain(format!("atom radius {} must be positive", spec.radius)));
    }
    if spec.center.len() != n {
        return Err(Error::Usage(format!("atom center has {} coordinates, grid has n = {n}", spec.center.len())));
    }
    let h = grid.spacing();
    let needed = 2.0 * (spec.mu as f64 + 2.0);
    if spec.radius / h < needed {
        let side = (2.0 * grid.half_width * needed / spec.radius).ceil() as usize;
        return Err(Error::UnderResolved {
            reason: format!(
                "atom radius {} spans {:.1} cells; moment order {} needs {needed}",
                spec.radius,
                spec.radius / h,
                spec.mu
            ),
            required_n_side: side.next_power_of_two(),
        });
    }
    if spec.center.iter().any(|c| c.abs() + spec.radius > 0.5 * grid.half_width) {
        return Err(Error::Domain("atom ball must lie in the central half of the box".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let top = multi_indices(n, spec.mu + 1);
    let low = multi_indices(n, spec.mu);
    let mut poly: Vec<(Vec<u32>, f64)> = top.iter().map(|a| (a.clone(), rng.gen_range(-1.0..1.0))).collect();
    // keep the leading degree honestly present
    let lead = poly.iter().position(|(a, _)| a.iter().sum::<u32>() == spec.mu + 1).unwrap();
    poly[lead].1 = if poly[lead].1 >= 0.0 { 1.0 } else { -1.0 };

    // quadrature nodes inside the ball
    let nodes: Vec<(Vec<f64>, f64)> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let y: Vec<f64> = grid.point(i).iter().zip(&spec.center).map(|(a, c)| (a - c) / spec.radius).collect();
            let e = bump(&y);
            (e > 0.0).then_some((y, e))
        })
        .collect();
    let m = low.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (y, e) in &nodes {
        let basis: Vec<f64> = low.iter().map(|a| monomial(y, a)).collect();
        let pv: f64 = poly.iter().map(|(a, c)| c * monomial(y, a)).sum();
        for i in 0..m {
            rhs[i] += e * pv * basis[i];
            for j in 0..m {
                gram[(i, j)] += e * basis[i] * basis[j];
            }
        }
    }
    let proj = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular moment Gram system".into()))?;
    for (i, a) in low.iter().enumerate() {
        let slot = poly.iter_mut().find(|(b, _)| b == a).unwrap();
        slot.1 -= proj[i];
    }

    let mut atom = Atom {
        p: spec.p,
        mu: spec.mu,
        center: spec.center.clone(),
        radius: spec.radius,
        poly,
        scale: 1.0,
        certificate: AtomCertificate { sup: 0.0, sup_bound: 0.0, moment_residual: 0.0 },
    };
    let raw_sup = nodes.iter().map(|(y, _)| atom.shape(y).abs()).fold(0.0, f64::max);
    if raw_sup == 0.0 {
        return Err(Error::Numerical("atom vanished on the grid".into()));
    }
    atom.scale = 0.5 * atom.ball_volume().powf(-1.0 / spec.p) / raw_sup;
    atom.certificate = atom.certify(grid);
    Ok(atom)
}

/// Distribution function and weak quasinorm `sup_lambda lambda |{|g| > lambda}|^{1/p}`.
#[derive(Debug, Clone, Serialize)]
pub struct WeakTypeReport {
    pub p: f64,
    pub quasinorm: f64,
    /// Level at which the sup is approached from below.
    pub argmax_lambda: f64,
    /// `(lambda, |{|g| >= lambda}|)` thinned to at most `CURVE_POINTS` levels.
    pub distribution: Vec<(f64, f64)>,
}

const CURVE_POINTS: usize = 256;

/// Exact weak quasinorm of sampled magnitudes: the sup over all distinct sample
/// values, where `|{|g| > lambda}|` is a cell count times `cell_volume`.
pub fn weak_quasinorm(values: &[f64], p: f64, cell_volume: f64) -> WeakTypeReport {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    v.par_sort_unstable_by(|a, b| b.total_cmp(a));
    let mut best = (0.0, 0.0);
    let mut levels = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let measure = (j + 1) as f64 * cell_volume;
        let q = v[i] * measure.powf(1.0 / p);
        if q > best.0 {
            best = (q, v[i]);
        }
        levels.push((v[i], measure));
        i = j + 1;
    }
    let stride = levels.len().div_ceil(CURVE_POINTS).max(1);
    let mut distribution: Vec<(f64, f64)> = levels.iter().step_by(stride).copied().collect();
    if let Some(last) = levels.last() {
        if distribution.last() != Some(last) {
            distribution.push(*last);
        }
    }
    WeakTypeReport { p, quasinorm: best.0, argmax_lambda: best.1, distribution }
}

/// `sum |g|^p * cell_volume`, the `p`-th power of the discrete `L^p` norm.
pub fn lp_norm_p(values: &[f64], p: f64, cell_volume: f64) -> f64 {
    values.par_iter().map(|x| x.abs().powf(p)).sum::<f64>() * cell_volume
}

/// Discrete `(sum |g|^p * cell_volume)^{1/p}`.
pub fn lp_norm(values: &[f64], p: f64, cell_volume: f64) -> f64 {
    lp_norm_p(values, p, cell_volume).powf(1.0 / p)
}

/// Real parts of a space-domain field.
pub fn real_values(field: &SampledField) -> Result<Vec<f64>> {
    if field.domain != Domain::Space {
        return Err(Error::Usage("expected a space-domain field".into()));
    }
    Ok(field.data.iter().map(|z: &Complex64| z.re).collect())
}

/// `((2-p)/(1-p))^{1/p}`.
pub fn summing_constant(p: f64) -> f64 {
    ((2.0 - p) / (1.0 - p)).powf(1.0 / p)
}

#[derive(Debug, Clone, Serialize)]
pub struct SummingReport {
    pub p: f64,
    pub constant: f64,
    pub quasinorms: Vec<f64>,
    pub coefficient_norm: f64,
    /// `||sum c_k g_k||_{p,inf}`.
    pub combined: f64,
    /// `constant * ||c||_{l^p}`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `||sum c_k g_k||_{p,inf} <= ((2-p)/(1-p))^{1/p} ||c||_{l^p}` for fields with
/// unit weak quasinorm at most one.
pub fn summing_check(fields: &[Vec<f64>], coeffs: &[f64], p: f64, cell_volume: f64) -> Result<SummingReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("summing inequality needs 0 < p < 1, got {p}")));
    }
    if fields.len() != coeffs.len() || fields.is_empty() {
        return Err(Error::Usage("one coefficient per field required".into()));
    }
    let len = fields[0].len();
    let mut quasinorms = Vec::with_capacity(fields.len());
    for (k, f) in fields.iter().enumerate() {
        if f.len() != len {
            return Err(Error::Usage(format!("field {k} has a different sample count")));
        }
        let q = weak_quasinorm(f, p, cell_volume).quasinorm;
        if q > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!("field {k} has weak quasinorm {q} > 1")));
        }
        quasinorms.push(q);
    }
    let combined_values: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| fields.iter().zip(coeffs).map(|(f, c)| c * f[i]).sum())
        .collect();
    let combined = weak_quasinorm(&combined_values, p, cell_volume).quasinorm;
    let constant = summing_constant(p);
    let coefficient_norm = coeffs.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let bound = constant * coefficient_norm;
    Ok(SummingReport { p, constant, quasinorms, coefficient_norm, combined, bound, holds: combined <= bound })
}
