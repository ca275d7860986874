//! Quantitative checks on caps: contact order, doubling and comparability of cap
//! measures, the angle-height relation for `b t^m + c`, and the two pair inequalities
//! relating `xi(x - y)` to `xi(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use super::{ConvexSurface, OmegaProfile, Param, SurfacePoint};
use crate::{Error, Result};

/// Estimated order of contact of a tangent line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContactOrder {
    Order(u32),
    ExceedsBound(u32),
}

impl ContactOrder {
    pub fn order(self) -> Option<u32> {
        match self {
            ContactOrder::Order(m) => Some(m),
            ContactOrder::ExceedsBound(_) => None,
        }
    }
}

const PROBE_SCALES: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// Inward height `h(t)` of the surface below the tangent line `xi0 + t e`.
fn graph_height(surface: &ConvexSurface, p0: &[f64], n0: &[f64], e: &[f64], t: f64) -> f64 {
    let g = surface.gauge();
    let at = |h: f64| {
        let q: Vec<f64> = (0..p0.len()).map(|i| p0[i] + t * e[i] - h * n0[i]).collect();
        g.evaluate(&q) - 1.0
    };
    if at(0.0) <= 0.0 {
        return 0.0;
    }
    let mut hi = 1e-30;
    while at(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return f64::NAN;
        }
    }
    let mut lo = 0.5 * hi;
    if at(lo) <= 0.0 {
        lo = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-17 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Order of contact of the tangent line through `point` in direction `tangent`.
///
/// Uses the symmetrized height `H(tau) = (h(tau) + h(-tau))/2` and the ratios
/// `log2 H(2 tau) / H(tau)` at successive scales; the order is accepted once two
/// consecutive rounded estimates agree.
pub fn finite_type_order(
    surface: &ConvexSurface,
    point: &SurfacePoint,
    tangent: &[f64],
    bound: u32,
) -> Result<(ContactOrder, Vec<f64>)> {
    let n = surface.dim();
    if tangent.len() != n {
        return Err(Error::Domain("tangent has the wrong dimension".into()));
    }
    let norm = tangent.iter().map(|x| x * x).sum::<f64>().sqrt();
    let e: Vec<f64> = tangent.iter().map(|x| x / norm).collect();
    let along: f64 = e.iter().zip(&point.normal).map(|(a, b)| a * b).sum();
    if along.abs() > 1e-8 {
        return Err(Error::Domain("probe direction is not tangent".into()));
    }
    let sym: Vec<f64> = PROBE_SCALES
        .iter()
        .map(|&t| {
            0.5 * (graph_height(surface, &point.position, &point.normal, &e, t)
                + graph_height(surface, &point.position, &point.normal, &e, -t))
        })
        .collect();
    let estimates: Vec<f64> = sym.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    if sym.iter().any(|h| *h <= 0.0) || estimates.iter().any(|x| !x.is_finite()) {
        return Ok((ContactOrder::ExceedsBound(bound), estimates));
    }
    let rounded: Vec<u32> = estimates.iter().map(|x| x.round().max(1.0) as u32).collect();
    for w in rounded.windows(2).rev() {
        if w[0] == w[1] {
            let m = w[1];
            return Ok((
                if m > bound { ContactOrder::ExceedsBound(bound) } else { ContactOrder::Order(m) },
                estimates,
            ));
        }
    }
    let last = *rounded.last().unwrap();
    Ok((
        if last > bound { ContactOrder::ExceedsBound(bound) } else { ContactOrder::Order(last) },
        estimates,
    ))
}

/// Orthonormal tangent basis at a unit normal (Gram–Schmidt against the coordinate axes).
pub fn tangent_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    let mut basis: Vec<Vec<f64>> = vec![normal.to_vec()];
    let mut axes: Vec<usize> = (0..n).collect();
    // least aligned axes first, for conditioning
    axes.sort_by(|a, b| normal[*a].abs().total_cmp(&normal[*b].abs()));
    for ax in axes {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[ax] = 1.0;
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 {
            basis.push(v.iter().map(|x| x / len).collect());
        }
    }
    basis.remove(0);
    basis
}

impl ConvexSurface {
    /// Largest contact order at the degenerate points (2 when there are none).
    pub fn surface_type(&self, bound: u32) -> Result<u32> {
        let mut reps: Vec<Vec<f64>> = Vec::new();
        for v in self.degenerate_normals() {
            let fresh = reps
                .iter()
                .all(|r| r.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-4);
            if fresh {
                reps.push(v.clone());
            }
            if reps.len() >= 64 {
                break;
            }
        }
        let mut k = 2;
        for v in reps {
            let p = self.support_point(&v)?;
            for e in tangent_basis(&p.normal) {
                match finite_type_order(self, &p, &e, bound)?.0 {
                    ContactOrder::Order(m) => k = k.max(m),
                    ContactOrder::ExceedsBound(b) => k = k.max(b + 1),
                }
            }
        }
        Ok(k)
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> SurfacePoint {
        match self.dim() {
            2 => self.point_at(Param::Angle(rng.gen_range(0.0..2.0 * PI))),
            _ => {
                let z: f64 = rng.gen_range(-1.0..1.0);
                self.point_at(Param::Sphere { theta: z.acos(), phi: rng.gen_range(0.0..2.0 * PI) })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub samples: usize,
    pub type_k: u32,
    /// `sup cap(gamma s) / (gamma^{(n-1)/2} cap(s))` over `gamma >= 1`.
    pub upper_ge1: f64,
    /// `sup cap(gamma s) / (gamma^{(n-1)/k} cap(s))` over `gamma < 1`.
    pub upper_lt1: f64,
    /// `inf` of the same ratio over `gamma < 1`.
    pub lower_lt1: f64,
}

/// Randomized sweep over centers, heights `s in [1e-4, 1]` and `gamma in [1/64, 64]`.
pub fn doubling_check(surface: &ConvexSurface, samples: usize, type_k: u32, seed: u64) -> Result<DoublingReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = surface.dim() as f64 - 1.0;
    let mut rep = DoublingReport {
        samples,
        type_k,
        upper_ge1: 0.0,
        upper_lt1: 0.0,
        lower_lt1: f64::INFINITY,
    };
    for _ in 0..samples {
        let c = surface.random_point(&mut rng);
        let s = 10f64.powf(rng.gen_range(-4.0..0.0));
        let gamma = 2f64.powf(rng.gen_range(-6.0..6.0));
        let base = surface.cap(&c, s)?.measure;
        let scaled = surface.cap(&c, gamma * s)?.measure;
        if base <= 0.0 {
            continue;
        }
        if gamma >= 1.0 {
            rep.upper_ge1 = rep.upper_ge1.max(scaled / (gamma.powf(n1 / 2.0) * base));
        } else {
            let r = scaled / (gamma.powf(n1 / type_k as f64) * base);
            rep.upper_lt1 = rep.upper_lt1.max(r);
            rep.lower_lt1 = rep.lower_lt1.min(r);
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparabilityReport {
    pub samples: usize,
    /// `max sigma[B(xi, s)] / sigma[B(xi0, s)]` over `xi in B(xi0, s)`.
    pub max_ratio: f64,
    /// `max sigma[B(xi0, s)] / sigma[B(xi, s)]`.
    pub max_inverse_ratio: f64,
}

/// Ratios of cap measures at a center and at a random member of its cap. With `centers`
/// given, those are used (cycled); otherwise centers are random.
pub fn cap_comparability_check(
    surface: &ConvexSurface,
    samples: usize,
    centers: Option<&[SurfacePoint]>,
    seed: u64,
) -> Result<ComparabilityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ComparabilityReport { samples, max_ratio: 0.0, max_inverse_ratio: 0.0 };
    for j in 0..samples {
        let c = match centers {
            Some(cs) if !cs.is_empty() => cs[j % cs.len()].clone(),
            _ => surface.random_point(&mut rng),
        };
        let s = 10f64.powf(rng.gen_range(-4.0..0.0));
        let cap = surface.cap(&c, s)?;
        if cap.empty {
            continue;
        }
        let pick = rng.gen_range(0..cap.members.len());
        let idx = cap.members.iter().nth(pick).expect("member in range");
        let other = surface.support_point(&surface.normal(idx))?;
        let m = surface.cap(&other, s)?.measure;
        if m > 0.0 {
            rep.max_ratio = rep.max_ratio.max(m / cap.measure);
            rep.max_inverse_ratio = rep.max_inverse_ratio.max(cap.measure / m);
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct AngleHeightReport {
    pub b: f64,
    pub m: u32,
    pub theta0: f64,
    pub t0: f64,
    pub height: f64,
    pub predicted: f64,
    pub ratio: f64,
}

/// For `g(t) = b t^m + c` on `[-d, d]`, solves `arctan g'(t0) = theta0` and compares
/// `|g(t0) - c|` with `|b|^{-1/(m-1)} m^{-m/(m-1)} theta0^{m/(m-1)}`.
pub fn angle_height_check(b: f64, m: u32, theta0: f64, d: f64) -> Result<AngleHeightReport> {
    if m < 2 || m % 2 == 1 || !(b > 0.0) {
        return Err(Error::Domain("need b > 0 and even m >= 2 for a convex g".into()));
    }
    let mf = m as f64;
    let slope = |t: f64| b * mf * t.powi(m as i32 - 1);
    let max_angle = slope(d).atan();
    if !(theta0 > 0.0 && theta0 <= max_angle) {
        return Err(Error::Domain(format!(
            "angle {theta0} not attained on [-{d}, {d}] (max {max_angle})"
        )));
    }
    let (mut lo, mut hi) = (0.0, d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid).atan() < theta0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-17 * hi {
            break;
        }
    }
    let t0 = 0.5 * (lo + hi);
    let height = b * t0.powi(m as i32);
    let predicted = b.powf(-1.0 / (mf - 1.0)) * mf.powf(-mf / (mf - 1.0)) * theta0.powf(mf / (mf - 1.0));
    Ok(AngleHeightReport { b, m, theta0, t0, height, predicted, ratio: height / predicted })
}

/// `|(x - y)/|x - y| - x/|x||` and its bound `2|y|/|x|`.
pub fn direction_inequality(x: &[f64], y: &[f64]) -> (f64, f64) {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let lhs = d.iter().zip(x).map(|(a, b)| (a / nd - b / nx).powi(2)).sum::<f64>().sqrt();
    (lhs, 2.0 * ny / nx)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCheckReport {
    pub pairs: usize,
    /// Largest measured constant.
    pub max_constant: f64,
    /// Largest `|(x-y)/|x-y| - x/|x|| / (2|y|/|x|)` (at most 1 when the direction
    /// inequality holds).
    pub max_direction_ratio: f64,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(ny < 1.0 && nx > 2.0 * ny && nx > 0.0) {
        return Err(Error::Domain(format!(
            "pair needs |y| < 1 and |x| > 2|y| (|x| = {nx}, |y| = {ny})"
        )));
    }
    Ok(())
}

/// `max |x| d(xi(x - y), T_{xi(x)})` over the pairs, with the direction inequality as
/// a sub-check.
pub fn tangent_distance_check(surface: &ConvexSurface, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<PairCheckReport> {
    let mut rep = PairCheckReport { pairs: pairs.len(), max_constant: 0.0, max_direction_ratio: 0.0 };
    for (x, y) in pairs {
        check_pair(x, y)?;
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let px = surface.support_point(x)?;
        let pd = surface.support_point(&d)?;
        let dist: f64 = px
            .position
            .iter()
            .zip(&pd.position)
            .zip(&px.normal)
            .map(|((a, b), n)| (a - b) * n)
            .sum();
        rep.max_constant = rep.max_constant.max(dist * nx);
        let (lhs, bound) = direction_inequality(x, y);
        if bound > 0.0 {
            rep.max_direction_ratio = rep.max_direction_ratio.max(lhs / bound);
        }
    }
    Ok(rep)
}

/// `max Omega((x - y)/|x - y|) / Omega(x/|x|)` with `Omega` interpolated from a uniform
/// planar profile.
pub fn omega_shift_check(profile: &OmegaProfile, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<PairCheckReport> {
    let mut rep = PairCheckReport { pairs: pairs.len(), max_constant: 0.0, max_direction_ratio: 0.0 };
    for (x, y) in pairs {
        check_pair(x, y)?;
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let ratio = profile.interpolate(&d)? / profile.interpolate(x)?;
        rep.max_constant = rep.max_constant.max(ratio);
        let (lhs, bound) = direction_inequality(x, y);
        if bound > 0.0 {
            rep.max_direction_ratio = rep.max_direction_ratio.max(lhs / bound);
        }
    }
    Ok(rep)
}

/// Random admissible pairs: `|y| < 1` uniform in the unit ball and `x` in the given
/// direction (or uniform) with `|x|` in `x_norm` (which must exceed 2).
pub fn sample_pairs(
    n: usize,
    count: usize,
    x_norm: (f64, f64),
    direction: Option<&[f64]>,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r < 1.0 {
            break v.iter().map(|x| x / r).collect::<Vec<f64>>();
        }
    };
    (0..count)
        .map(|_| {
            let u = match direction {
                Some(d) => d.to_vec(),
                None => unit(&mut rng),
            };
            let r = rng.gen_range(x_norm.0..x_norm.1);
            let x: Vec<f64> = u.iter().map(|v| v * r).collect();
            let w = unit(&mut rng);
            let rho: f64 = rng.gen_range(0.0..0.999);
            let y: Vec<f64> = w.iter().map(|v| v * rho).collect();
            (x, y)
        })
        .collect()
}
