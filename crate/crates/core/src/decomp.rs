//! Dyadic radial pieces of `(1 - rho)_+^delta` and the angular partition of unity on
//! the unit sphere at scale `2^{-k/2}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;

use crate::gauge::Gauge;
use crate::surface::ConvexSurface;
use crate::{Error, Result};

/// `psi(t) = exp(-1/((t - 1/2)(2 - t)))` on `(1/2, 2)` and its dyadic normalization
/// `phi(t) = psi(t) / sum_j psi(2^j t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DyadicBump;

impl DyadicBump {
    pub fn psi(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 2.0 {
            0.0
        } else {
            (-1.0 / ((t - 0.5) * (2.0 - t))).exp()
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        let num = self.psi(t);
        if num == 0.0 {
            return 0.0;
        }
        // only |j| <= 1 can meet (1/2, 2) when t does
        let den: f64 = (-2..=2).map(|j| self.psi(t * 2f64.powi(j))).sum();
        num / den
    }

    /// `sum_k phi(2^k t)`, summing only the (at most three) nonzero terms.
    pub fn partition_sum(&self, t: f64) -> f64 {
        let k0 = (-t.log2()).floor() as i32;
        (k0 - 2..=k0 + 2).map(|k| self.phi(t * 2f64.powi(k))).sum()
    }
}

/// `Phi_k^delta` as a function of `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialPiece {
    pub k: u32,
    pub delta: f64,
}

impl RadialPiece {
    /// Value at a point with gauge value `rho`.
    pub fn at_rho(&self, rho: f64) -> f64 {
        let u = 1.0 - rho;
        if u <= 0.0 {
            return 0.0;
        }
        let b = DyadicBump;
        let w = if self.k == 0 {
            // 1 - sum_{k>=1} phi(2^{k+1} u); only these terms survive for u <= 1
            b.phi(0.5 * u) + b.phi(u) + b.phi(2.0 * u)
        } else {
            b.phi(2f64.powi(self.k as i32 + 1) * u)
        };
        if w == 0.0 {
            0.0
        } else {
            w * u.powf(self.delta)
        }
    }

    pub fn eval(&self, gauge: &Gauge, xi: &[f64]) -> f64 {
        self.at_rho(gauge.evaluate(xi))
    }

    /// Open interval of `1 - rho` where a `k >= 1` piece can be nonzero.
    pub fn shell(&self) -> (f64, f64) {
        if self.k == 0 {
            (0.25, 1.0)
        } else {
            (2f64.powi(-(self.k as i32) - 2), 2f64.powi(-(self.k as i32)))
        }
    }
}

/// Pieces `k = 0..=k_max`.
pub fn radial_pieces(delta: f64, k_max: u32) -> Result<Vec<RadialPiece>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    Ok((0..=k_max).map(|k| RadialPiece { k, delta }).collect())
}

/// Smooth step from 0 (x <= 0) to 1 (x >= 1).
fn smooth_step(x: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = f(x);
        a / (a + f(1.0 - x))
    }
}

/// Window geometry in units of the partition radius `r = 2^{-k/2}`.
const CORE: f64 = 1.0;
const CORE_EDGE: f64 = 1.2;
const SEPARATION: f64 = 2.5;
const OUTER_FLAT: f64 = 2.6;
/// Support radius of every window, `c_1`.
pub const SUPPORT_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct Window {
    pub center: Vec<f64>,
    /// `e^0` (outer normal) followed by the tangent basis.
    pub frame: Vec<Vec<f64>>,
}

/// Partition of unity `Xi_l` on the unit sphere, centers a maximal `2.5 r`-separated
/// net of surface samples. Each window is 1 on its core ball of radius `r`, and the
/// core balls (radius `1.2 r` including their transition) are pairwise disjoint.
#[derive(Debug, Clone)]
pub struct AngularPartition {
    pub k: u32,
    pub radius: f64,
    pub windows: Vec<Window>,
    gauge: Gauge,
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionSummary {
    pub k: u32,
    pub count: usize,
    pub support_radius: f64,
    /// `count / 2^{(n-1)k/2}`.
    pub count_constant: f64,
    pub max_overlap: usize,
    pub max_partition_error: f64,
}

impl AngularPartition {
    pub fn build(surface: &ConvexSurface, k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain("angular partitions start at k = 1".into()));
        }
        let n = surface.dim();
        let radius = 2f64.powf(-(k as f64) / 2.0);
        let sep = SEPARATION * radius;
        let cell = SUPPORT_RADIUS * radius;
        let mut part = Self {
            k,
            radius,
            windows: Vec::new(),
            gauge: surface.gauge().clone(),
            cell,
            buckets: HashMap::new(),
        };
        let cap = 10 * surface.sample_count();
        for i in 0..surface.sample_count() {
            let p = surface.position(i);
            if part.nearest_within(&p, sep).is_none() {
                let normal = surface.normal(i);
                let mut frame = vec![normal.clone()];
                frame.extend(crate::surface::tangent_basis(&normal));
                part.insert(Window { center: p, frame });
                if part.windows.len() > cap {
                    return Err(Error::Numerical("covering did not terminate".into()));
                }
            }
        }
        debug_assert!(part.windows.iter().all(|w| w.center.len() == n));
        Ok(part)
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|x| (x / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, w: Window) {
        let key = self.key(&w.center);
        self.buckets.entry(key).or_default().push(self.windows.len());
        self.windows.push(w);
    }

    /// Window indices whose centers lie within `3 r` of `p`.
    pub fn neighbors(&self, p: &[f64]) -> Vec<(usize, f64)> {
        let key = self.key(p);
        let n = p.len();
        let mut out = Vec::new();
        let offsets = 3i64.pow(n as u32);
        for code in 0..offsets {
            let mut k = key.clone();
            let mut c = code;
            for ki in k.iter_mut() {
                *ki += c % 3 - 1;
                c /= 3;
            }
            if let Some(ids) = self.buckets.get(&k) {
                for &id in ids {
                    let d = dist(&self.windows[id].center, p);
                    if d < self.cell {
                        out.push((id, d));
                    }
                }
            }
        }
        out.sort_by_key(|x| x.0);
        out
    }

    fn nearest_within(&self, p: &[f64], r: f64) -> Option<usize> {
        self.neighbors(p).into_iter().find(|(_, d)| *d < r).map(|x| x.0)
    }

    pub fn count(&self) -> usize {
        self.windows.len()
    }

    fn core(&self, d: f64) -> f64 {
        let r = self.radius;
        1.0 - smooth_step((d - CORE * r) / ((CORE_EDGE - CORE) * r))
    }

    fn outer(&self, d: f64) -> f64 {
        let r = self.radius;
        1.0 - smooth_step((d - OUTER_FLAT * r) / ((SUPPORT_RADIUS - OUTER_FLAT) * r))
    }

    /// Unnormalized weights of the windows near a sphere point.
    fn weights(&self, zeta: &[f64]) -> Vec<(usize, f64)> {
        let near = self.neighbors(zeta);
        // at most one core ball reaches any point
        let core = near
            .iter()
            .find(|(_, d)| *d < CORE_EDGE * self.radius)
            .map(|&(id, d)| (id, self.core(d)));
        near.iter()
            .map(|&(id, d)| {
                let damp = match core {
                    Some((c, v)) if c != id => 1.0 - v,
                    _ => 1.0,
                };
                (id, self.outer(d) * damp)
            })
            .filter(|(_, w)| *w > 0.0)
            .collect()
    }

    /// `Xi_l(zeta)` for a point on the sphere.
    pub fn window_on_sphere(&self, l: usize, zeta: &[f64]) -> f64 {
        if dist(&self.windows[l].center, zeta) >= SUPPORT_RADIUS * self.radius {
            return 0.0;
        }
        let w = self.weights(zeta);
        let total: f64 = w.iter().map(|x| x.1).sum();
        w.iter().find(|x| x.0 == l).map_or(0.0, |x| x.1 / total)
    }

    /// All nonzero `(l, Xi_l(zeta))`.
    pub fn windows_at(&self, zeta: &[f64]) -> Vec<(usize, f64)> {
        let w = self.weights(zeta);
        let total: f64 = w.iter().map(|x| x.1).sum();
        w.into_iter().map(|(l, v)| (l, v / total)).collect()
    }

    /// Homogeneous extension `Pi_l(xi) = Xi_l(xi / rho(xi))`.
    pub fn window(&self, l: usize, xi: &[f64]) -> f64 {
        let rho = self.gauge.evaluate(xi);
        if rho == 0.0 {
            return 0.0;
        }
        let zeta = self.gauge.dilation.apply(1.0 / rho, xi);
        self.window_on_sphere(l, &zeta)
    }

    /// Random sphere point within `spread * r` (tangentially) of window `l`.
    fn sample_near(&self, l: usize, spread: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let w = &self.windows[l];
        let mut p = w.center.clone();
        for e in &w.frame[1..] {
            let a = rng.gen_range(-spread..spread) * self.radius;
            for (pi, ei) in p.iter_mut().zip(e) {
                *pi += a * ei;
            }
        }
        self.gauge.to_unit_sphere(&p)
    }

    /// Checks (i), (iii), bounded overlap and reports (v) at `samples` random sphere points.
    pub fn summary(&self, samples: usize, seed: u64) -> PartitionSummary {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_err = 0.0f64;
        let mut overlap = 0usize;
        for _ in 0..samples {
            let l = rng.gen_range(0..self.count());
            let z = self.sample_near(l, 3.5, &mut rng);
            let ws = self.windows_at(&z);
            let s: f64 = ws.iter().map(|x| x.1).sum();
            max_err = max_err.max((s - 1.0).abs());
            overlap = overlap.max(ws.len());
        }
        let n = self.windows[0].center.len() as f64;
        PartitionSummary {
            k: self.k,
            count: self.count(),
            support_radius: SUPPORT_RADIUS,
            count_constant: self.count() as f64 / 2f64.powf((n - 1.0) * self.k as f64 / 2.0),
            max_overlap: overlap,
            max_partition_error: max_err,
        }
    }

    /// Largest finite-difference directional derivative of order `order` (1..=3) of
    /// `Pi_l` in the shell `1/2 <= rho <= 2`, sampled around random windows.
    pub fn max_derivative(&self, order: u32, samples: usize, seed: u64) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::Domain("derivative probes use orders 1..=3".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 0.01 * self.radius;
        let n = self.windows[0].center.len();
        let mut best = 0.0f64;
        for _ in 0..samples {
            let l = rng.gen_range(0..self.count());
            let z = self.sample_near(l, 3.2, &mut rng);
            let t: f64 = rng.gen_range(0.5..2.0);
            let x: Vec<f64> = z.iter().map(|v| v * t).collect();
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
            v.iter_mut().for_each(|a| *a /= len);
            let f = |s: f64| {
                let p: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + s * h * b).collect();
                self.window(l, &p)
            };
            let d = match order {
                1 => (f(1.0) - f(-1.0)) / (2.0 * h),
                2 => (f(1.0) - 2.0 * f(0.0) + f(-1.0)) / (h * h),
                _ => (f(2.0) - 2.0 * f(1.0) + 2.0 * f(-1.0) - f(-2.0)) / (2.0 * h * h * h),
            };
            best = best.max(d.abs());
        }
        Ok(best)
    }

    pub fn centers_csv(&self) -> String {
        let mut out = String::from("index");
        let n = self.windows.first().map_or(0, |w| w.center.len());
        for j in 0..n {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for (i, w) in self.windows.iter().enumerate() {
            out.push_str(&i.to_string());
            for c in &w.center {
                out.push_str(&format!(",{c:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `Phi_k^delta * Pi_{kl}`.
#[derive(Debug, Clone, Copy)]
pub struct PieceMultiplier<'a> {
    pub radial: RadialPiece,
    pub partition: &'a AngularPartition,
    pub l: usize,
}

impl<'a> PieceMultiplier<'a> {
    pub fn new(radial: RadialPiece, partition: &'a AngularPartition, l: usize) -> Result<Self> {
        if radial.k != partition.k {
            return Err(Error::Usage(format!(
                "radial piece k = {} does not match partition k = {}",
                radial.k, partition.k
            )));
        }
        if l >= partition.count() {
            return Err(Error::Usage(format!("window {l} out of range")));
        }
        Ok(Self { radial, partition, l })
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.partition.windows[self.l].frame
    }

    /// Value from a precomputed gauge value.
    pub fn eval_with_rho(&self, xi: &[f64], rho: f64) -> f64 {
        let r = self.radial.at_rho(rho);
        if r == 0.0 {
            return 0.0;
        }
        let zeta = self.partition.gauge.dilation.apply(1.0 / rho, xi);
        r * self.partition.window_on_sphere(self.l, &zeta)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.eval_with_rho(xi, self.partition.gauge.evaluate(xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_log2_vs;
    use proptest::prelude::{prop_assert, proptest};

    #[test]
    fn bump_partition_identity() {
        let b = DyadicBump;
        assert!((b.partition_sum(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(b.phi(0.4), 0.0);
        assert!((b.phi(0.8) + b.phi(0.4) - 1.0).abs() > 0.0);
        assert!((b.phi(0.4) + b.phi(0.8) + b.phi(1.6) - 1.0).abs() < 1e-15);
        let m = 100_000;
        let worst = (0..m)
            .map(|i| {
                let t = (-20.0 + 40.0 * i as f64 / (m - 1) as f64).exp2();
                // direct summation oracle over a wide index range
                let s: f64 = (-30..=30).map(|k| b.phi(t * 2f64.powi(k))).sum();
                (s - 1.0).abs().max((b.partition_sum(t) - 1.0).abs())
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn bump_derivatives_stay_bounded() {
        // difference quotients of each order converge under step halving
        let b = DyadicBump;
        let maxima = |h: f64| {
            let mut vals: Vec<f64> = (0..=(3.0 / h) as usize).map(|i| b.phi(0.4 + h * i as f64)).collect();
            let mut out = Vec::new();
            for _ in 1..=6 {
                vals = vals.windows(2).map(|w| (w[1] - w[0]) / h).collect();
                out.push(vals.iter().map(|v| v.abs()).fold(0.0, f64::max));
            }
            out
        };
        let coarse = maxima(1e-3);
        let fine = maxima(5e-4);
        for (order, (a, b)) in coarse.iter().zip(&fine).enumerate() {
            assert!(a.is_finite() && (a / b - 1.0).abs() < 0.1, "order {}: {a} vs {b}", order + 1);
        }
    }

    #[test]
    fn radial_piece_examples() {
        let pieces = radial_pieces(1.5, 12).unwrap();
        let s: f64 = pieces.iter().map(|p| p.at_rho(0.5)).sum();
        assert!((s - 0.5f64.powf(1.5)).abs() < 1e-15);
        assert!(pieces.iter().all(|p| p.at_rho(1.0) == 0.0 && p.at_rho(1.3) == 0.0));
        assert!(radial_pieces(0.0, 3).is_err());
        for p in &pieces[1..] {
            let (lo, hi) = p.shell();
            for i in 0..2000 {
                let u = i as f64 / 2000.0;
                let v = p.at_rho(1.0 - u);
                if v != 0.0 {
                    assert!(u > lo && u < hi);
                }
                assert!(v <= 2f64.powf(-(p.k as f64) * 1.5));
            }
        }
    }

    proptest! {
        #[test]
        fn partial_sums_reconstruct(rho in 0.0f64..1.2, kk in 1u32..14, delta in 0.1f64..4.0) {
            let pieces = radial_pieces(delta, kk).unwrap();
            let s: f64 = pieces.iter().map(|p| p.at_rho(rho)).sum();
            let exact = (1.0 - rho).max(0.0).powf(delta);
            prop_assert!((s - exact).abs() <= 2f64.powf(-(kk as f64) * delta) + 1e-14);
            // piece K+1 lives on (2^{-K-3}, 2^{-K-1}), so exactness starts at 2^{-K-1}
            if 1.0 - rho >= 2f64.powi(-(kk as i32) - 1) {
                prop_assert!((s - exact).abs() <= 1e-14);
            }
        }
    }

    fn circle() -> ConvexSurface {
        ConvexSurface::planar(&Gauge::euclidean(2), 1 << 14).unwrap()
    }

    #[test]
    fn partition_properties_on_circle() {
        let s = circle();
        for k in [2, 5, 8] {
            let p = AngularPartition::build(&s, k).unwrap();
            let sum = p.summary(2000, 1);
            assert!(sum.max_partition_error < 1e-12);
            assert!(sum.max_overlap <= 3);
            // (ii): each window is exactly 1 on its core ball
            let w = &p.windows[0];
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..200 {
                let a = rng.gen_range(-1.0..1.0) * 0.99 * p.radius;
                let q: Vec<f64> = w.center.iter().zip(&w.frame[1]).map(|(c, e)| c + a * e).collect();
                let z = s.gauge().to_unit_sphere(&q);
                if dist(&z, &w.center) < p.radius {
                    assert_eq!(p.window_on_sphere(0, &z), 1.0);
                }
            }
            // (iii)
            for _ in 0..200 {
                let z = p.sample_near(0, 6.0, &mut rng);
                if p.window_on_sphere(0, &z) > 0.0 {
                    assert!(dist(&z, &w.center) < SUPPORT_RADIUS * p.radius);
                }
            }
        }
    }

    #[test]
    fn first_center_is_on_the_first_axis() {
        let p = AngularPartition::build(&circle(), 4).unwrap();
        assert_eq!(p.windows[0].center, vec![1.0, 0.0]);
        assert_eq!(p.windows[0].frame[0], vec![1.0, 0.0]);
    }

    #[test]
    fn count_grows_like_half_power() {
        let s = circle();
        let ks: Vec<f64> = (2..=10).map(|k| k as f64).collect();
        let ns: Vec<f64> = (2..=10)
            .map(|k| AngularPartition::build(&s, k).unwrap().count() as f64)
            .collect();
        let fit = fit_log2_vs(&ks, &ns).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn pieces_sum_to_the_radial_piece() {
        let s = circle();
        let p = AngularPartition::build(&s, 3).unwrap();
        let radial = RadialPiece { k: 3, delta: 1.5 };
        let pieces: Vec<PieceMultiplier> =
            (0..p.count()).map(|l| PieceMultiplier::new(radial, &p, l).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r: f64 = rng.gen_range(0.85..1.0);
            let xi = [r * a.cos(), r * a.sin()];
            let total: f64 = pieces.iter().map(|m| m.eval(&xi)).sum();
            assert!((total - radial.eval(s.gauge(), &xi)).abs() < 1e-12);
        }
        assert!(PieceMultiplier::new(RadialPiece { k: 2, delta: 1.5 }, &p, 0).is_err());
        // inner cap value: window is 1 there
        let c = &p.windows[1].center;
        let rho = 1.0 - 3.0 * 2f64.powi(-5);
        let xi: Vec<f64> = c.iter().map(|x| x * rho).collect();
        assert!((pieces[1].eval(&xi) - radial.at_rho(rho)).abs() < 1e-15);
        assert_eq!(pieces[1].eval(&[0.1, 0.0]), 0.0);
    }

    #[test]
    fn derivative_growth_rate() {
        let s = circle();
        let ks: Vec<f64> = (2..=8).map(|k| k as f64).collect();
        let d: Vec<f64> = (2..=8)
            .map(|k| AngularPartition::build(&s, k).unwrap().max_derivative(1, 3000, 4).unwrap())
            .collect();
        let fit = fit_log2_vs(&ks, &d).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.15, "{fit:?} {d:?}");
    }
}
