//! Homogeneous distance functions and critical-index arithmetic.
//!
//! A [`Gauge`] is a continuous `rho: R^n -> [0, inf)` with `rho(A_t xi) = t rho(xi)`
//! for a diagonal dilation group `A_t = exp(M log t)`. Every gauge is described by a
//! *base function* `Q` whose level set `{Q = 1}` is the unit sphere `Sigma_rho`;
//! `rho(xi)` is the unique `t` with `Q(A_{1/t} xi) = 1`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Diagonal dilation group `A_t = diag(t^{d_1}, ..., t^{d_n})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationGroup {
    generator: Vec<f64>,
}

impl DilationGroup {
    /// `A_t = t I`.
    pub fn isotropic(n: usize) -> Self {
        Self {
            generator: vec![1.0; n],
        }
    }

    pub fn diagonal(generator: Vec<f64>) -> Result<Self> {
        if generator.len() < 2 {
            return Err(Error::Domain("dilation group needs dimension n >= 2".into()));
        }
        if generator.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Domain(
                "generator eigenvalues must have positive real part".into(),
            ));
        }
        Ok(Self { generator })
    }

    pub fn dim(&self) -> usize {
        self.generator.len()
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    /// All diagonal entries equal (`A_t = t^c I`).
    pub fn scalar(&self) -> Option<f64> {
        let c = self.generator[0];
        self.generator.iter().all(|d| *d == c).then_some(c)
    }

    pub fn is_identity_generator(&self) -> bool {
        self.scalar() == Some(1.0)
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.generator)
            .map(|(xi, d)| xi * t.powf(*d))
            .collect()
    }
}

/// Shape of the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeKind {
    Euclidean,
    /// `sum |xi_i|^m = 1`, `m` even.
    EllM { m: u32 },
    /// `sum |xi_i / a_i|^{m_i} = 1`, every `m_i` even.
    Superellipsoid {
        semi_axes: Vec<f64>,
        exponents: Vec<u32>,
    },
    /// Planar star body with boundary radius
    /// `r(theta) = cos[0] + sum_{j>=1} (cos[j] cos(j theta) + sin[j] sin(j theta))`.
    Polar { cos: Vec<f64>, sin: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub kind: GaugeKind,
    pub dilation: DilationGroup,
}

impl Gauge {
    pub fn new(kind: GaugeKind, dilation: DilationGroup) -> Result<Self> {
        let g = Self { kind, dilation };
        g.validate()?;
        Ok(g)
    }

    pub fn euclidean(n: usize) -> Self {
        Self {
            kind: GaugeKind::Euclidean,
            dilation: DilationGroup::isotropic(n),
        }
    }

    pub fn ell_m(n: usize, m: u32) -> Result<Self> {
        Self::new(GaugeKind::EllM { m }, DilationGroup::isotropic(n))
    }

    pub fn superellipsoid(semi_axes: Vec<f64>, exponents: Vec<u32>) -> Result<Self> {
        let n = semi_axes.len();
        Self::new(
            GaugeKind::Superellipsoid {
                semi_axes,
                exponents,
            },
            DilationGroup::isotropic(n),
        )
    }

    pub fn polar(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(GaugeKind::Polar { cos, sin }, DilationGroup::isotropic(2))
    }

    pub fn dim(&self) -> usize {
        self.dilation.dim()
    }

    /// Short human-readable label, e.g. `ell_4`.
    pub fn label(&self) -> String {
        let base = match &self.kind {
            GaugeKind::Euclidean => "euclidean".to_string(),
            GaugeKind::EllM { m } => format!("ell_{m}"),
            GaugeKind::Superellipsoid { exponents, .. } => {
                let e: Vec<String> = exponents.iter().map(|m| m.to_string()).collect();
                format!("superellipsoid_{}", e.join("_"))
            }
            GaugeKind::Polar { .. } => "polar".to_string(),
        };
        match self.dilation.scalar() {
            Some(c) if c == 1.0 => base,
            _ => format!("{base}@{:?}", self.dilation.generator()),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Domain("dimension must be >= 2".into()));
        }
        match &self.kind {
            GaugeKind::Euclidean => {}
            GaugeKind::EllM { m } => {
                if *m < 2 || m % 2 == 1 {
                    return Err(Error::InvalidGauge(format!(
                        "ell_{m}: unit sphere not smooth/convex as required (need even m >= 2)"
                    )));
                }
            }
            GaugeKind::Superellipsoid {
                semi_axes,
                exponents,
            } => {
                if semi_axes.len() != n || exponents.len() != n {
                    return Err(Error::InvalidGauge(
                        "superellipsoid parameters must have one entry per axis".into(),
                    ));
                }
                if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::InvalidGauge("semi-axes must be positive".into()));
                }
                if exponents.iter().any(|m| *m < 2 || m % 2 == 1) {
                    return Err(Error::InvalidGauge(
                        "superellipsoid exponents must be even and >= 2 (smooth convex sphere)"
                            .into(),
                    ));
                }
            }
            GaugeKind::Polar { cos, sin } => {
                if n != 2 {
                    return Err(Error::InvalidGauge("polar profiles are planar".into()));
                }
                if !self.dilation.is_identity_generator() {
                    return Err(Error::InvalidGauge(
                        "polar profiles support only A_t = t I".into(),
                    ));
                }
                if cos.is_empty() {
                    return Err(Error::InvalidGauge("polar profile needs a constant term".into()));
                }
                // r > 0 and r^2 + 2 r'^2 - r r'' >= 0 (nonnegative curvature)
                let m = 4096;
                for i in 0..m {
                    let th = 2.0 * PI * i as f64 / m as f64;
                    let (r, r1, r2) = polar_radius(cos, sin, th);
                    if r <= 0.0 {
                        return Err(Error::InvalidGauge(
                            "polar profile must be positive (0 interior)".into(),
                        ));
                    }
                    if r * r + 2.0 * r1 * r1 - r * r2 < -1e-12 {
                        return Err(Error::InvalidGauge(format!(
                            "polar profile is not convex near theta = {th:.4}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Homogeneity degree of the base function, when it has one.
    fn base_degree(&self) -> Option<f64> {
        match &self.kind {
            GaugeKind::Euclidean => Some(2.0),
            GaugeKind::EllM { m } => Some(*m as f64),
            GaugeKind::Superellipsoid { exponents, .. } => {
                let m0 = exponents[0];
                exponents.iter().all(|m| *m == m0).then_some(m0 as f64)
            }
            GaugeKind::Polar { .. } => Some(1.0),
        }
    }

    /// Base function `Q(eta)` and its gradient (written into `grad`).
    fn base(&self, eta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match &self.kind {
            GaugeKind::Euclidean => {
                if let Some(g) = grad {
                    for (gi, e) in g.iter_mut().zip(eta) {
                        *gi = 2.0 * e;
                    }
                }
                eta.iter().map(|e| e * e).sum()
            }
            GaugeKind::EllM { m } => {
                let m = *m as i32;
                if let Some(g) = grad {
                    for (gi, e) in g.iter_mut().zip(eta) {
                        *gi = m as f64 * e.powi(m - 1);
                    }
                }
                eta.iter().map(|e| e.powi(m)).sum()
            }
            GaugeKind::Superellipsoid {
                semi_axes,
                exponents,
            } => {
                let mut q = 0.0;
                let mut g = grad;
                for i in 0..eta.len() {
                    let m = exponents[i] as i32;
                    let u = eta[i] / semi_axes[i];
                    q += u.powi(m);
                    if let Some(g) = g.as_deref_mut() {
                        g[i] = m as f64 * u.powi(m - 1) / semi_axes[i];
                    }
                }
                q
            }
            GaugeKind::Polar { cos, sin } => {
                let rr = eta[0].hypot(eta[1]);
                if rr == 0.0 {
                    if let Some(g) = grad {
                        g[0] = 0.0;
                        g[1] = 0.0;
                    }
                    return 0.0;
                }
                let th = eta[1].atan2(eta[0]);
                let (r, r1, _) = polar_radius(cos, sin, th);
                if let Some(g) = grad {
                    let (c, s) = (th.cos(), th.sin());
                    // (1/r) e_R - (r'/r^2) e_theta
                    let a = 1.0 / r;
                    let b = -r1 / (r * r);
                    g[0] = a * c - b * s;
                    g[1] = a * s + b * c;
                }
                rr / r
            }
        }
    }

    /// `rho(xi)`.
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim());
        if xi.iter().all(|x| *x == 0.0) {
            return 0.0;
        }
        if let (Some(c), Some(h)) = (self.dilation.scalar(), self.base_degree()) {
            let q = self.base(xi, None);
            return match (c == 1.0, h) {
                (true, 2.0) => q.sqrt(),
                (true, 1.0) => q,
                _ => q.powf(1.0 / (c * h)),
            };
        }
        self.solve_dilation(xi)
    }

    /// Newton iteration on `tau = ln t` for `ln Q(A_{e^{-tau}} xi) = 0`.
    fn solve_dilation(&self, xi: &[f64]) -> f64 {
        let d = self.dilation.generator();
        let n = xi.len();
        let mut eta = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let eval = |tau: f64, eta: &mut [f64], grad: &mut [f64]| {
            for i in 0..n {
                eta[i] = xi[i] * (-tau * d[i]).exp();
            }
            let q = self.base(eta, Some(grad));
            let dq: f64 = (0..n).map(|i| -d[i] * eta[i] * grad[i]).sum();
            (q.ln(), dq / q)
        };
        // bracket: g decreasing in tau
        let mut lo = xi
            .iter()
            .zip(d)
            .filter(|(x, _)| **x != 0.0)
            .map(|(x, di)| x.abs().ln() / di)
            .fold(f64::INFINITY, f64::min);
        let mut hi = lo;
        while eval(lo, &mut eta, &mut grad).0 < 0.0 {
            lo -= 1.0;
        }
        while eval(hi, &mut eta, &mut grad).0 > 0.0 {
            hi += 1.0;
        }
        let mut tau = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (g, dg) = eval(tau, &mut eta, &mut grad);
            if g > 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            let mut next = tau - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - tau).abs() <= 1e-16 * (1.0 + tau.abs()) || hi - lo < 1e-15 {
                tau = next;
                break;
            }
            tau = next;
        }
        tau.exp()
    }

    /// `grad rho(xi)` for `xi != 0`.
    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        let n = xi.len();
        let t = self.evaluate(xi);
        let d = self.dilation.generator();
        let eta: Vec<f64> = (0..n).map(|i| xi[i] * t.powf(-d[i])).collect();
        let mut g = vec![0.0; n];
        self.base(&eta, Some(&mut g));
        let denom: f64 = (0..n).map(|i| d[i] * eta[i] * g[i]).sum::<f64>() / t;
        (0..n).map(|i| t.powf(-d[i]) * g[i] / denom).collect()
    }

    /// Radius `R` with `R u` on the unit sphere, for a unit direction `u`.
    pub fn ray_radius(&self, u: &[f64]) -> f64 {
        if let Some(h) = self.base_degree() {
            let q = self.base(u, None);
            return q.powf(-1.0 / h);
        }
        // Newton on ln Q(e^s u) = 0.
        let n = u.len();
        let mut grad = vec![0.0; n];
        let mut s = 0.0f64;
        let mut v = vec![0.0; n];
        let (mut lo, mut hi) = (-60.0f64, 60.0f64);
        for _ in 0..200 {
            let r = s.exp();
            for i in 0..n {
                v[i] = r * u[i];
            }
            let q = self.base(&v, Some(&mut grad));
            let g = q.ln();
            let dg = (0..n).map(|i| v[i] * grad[i]).sum::<f64>() / q;
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() < 1e-16 {
                s = next;
                break;
            }
            s = next;
        }
        s.exp()
    }

    /// Outer unit normal of `Sigma_rho` at a point on it.
    pub fn unit_normal(&self, point: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; point.len()];
        self.base(point, Some(&mut g));
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        g.iter().map(|x| x / norm).collect()
    }

    /// Projection of a nonzero `xi` onto the unit sphere along its dilation orbit.
    pub fn to_unit_sphere(&self, xi: &[f64]) -> Vec<f64> {
        let r = self.evaluate(xi);
        self.dilation.apply(1.0 / r, xi)
    }

    /// `max |xi_i|` over the unit ball, per coordinate.
    pub fn coordinate_extent(&self) -> Vec<f64> {
        let n = self.dim();
        match &self.kind {
            GaugeKind::Euclidean | GaugeKind::EllM { .. } => vec![1.0; n],
            GaugeKind::Superellipsoid { semi_axes, .. } => semi_axes.clone(),
            GaugeKind::Polar { .. } => {
                let mut ext = [0.0f64; 2];
                let m = 8192;
                for i in 0..m {
                    let th = 2.0 * PI * i as f64 / m as f64;
                    let u = [th.cos(), th.sin()];
                    let r = self.ray_radius(&u);
                    ext[0] = ext[0].max((r * u[0]).abs());
                    ext[1] = ext[1].max((r * u[1]).abs());
                }
                // sampling can only underestimate
                ext.iter().map(|e| e * 1.001).collect()
            }
        }
    }

    /// The same unit sphere described by the smooth power `Q` of the gauge, which is
    /// homogeneous for `A_t = t^{c/h} I`. For euclidean and `ell_m` gauges this is a
    /// polynomial, hence smooth at the origin as well.
    pub fn smooth_power(&self) -> Result<Gauge> {
        let h = self.base_degree().ok_or_else(|| {
            Error::Domain("base function has no homogeneity degree".into())
        })?;
        let gen = self.dilation.generator().iter().map(|d| d / h).collect();
        Gauge::new(self.kind.clone(), DilationGroup::diagonal(gen)?)
    }

    /// Sampled convexity of planar sections: every boundary polygon through two
    /// coordinate axes turns consistently (nonnegative discrete curvature).
    pub fn sampled_convexity_defect(&self, samples: usize) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                let pts: Vec<(f64, f64)> = (0..samples)
                    .map(|i| {
                        let th = 2.0 * PI * i as f64 / samples as f64;
                        let mut u = vec![0.0; n];
                        u[a] = th.cos();
                        u[b] = th.sin();
                        let r = self.ray_radius(&u);
                        (r * u[a], r * u[b])
                    })
                    .collect();
                for i in 0..samples {
                    let p0 = pts[(i + samples - 1) % samples];
                    let p1 = pts[i];
                    let p2 = pts[(i + 1) % samples];
                    let cross = (p1.0 - p0.0) * (p2.1 - p1.1) - (p1.1 - p0.1) * (p2.0 - p1.0);
                    worst = worst.min(cross);
                }
            }
        }
        -worst
    }
}

/// `r(theta)`, `r'(theta)`, `r''(theta)` of a polar Fourier profile.
pub(crate) fn polar_radius(cos: &[f64], sin: &[f64], th: f64) -> (f64, f64, f64) {
    let mut r = cos[0];
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    let terms = cos.len().max(sin.len());
    for j in 1..terms {
        let a = cos.get(j).copied().unwrap_or(0.0);
        let b = sin.get(j).copied().unwrap_or(0.0);
        let jf = j as f64;
        let (s, c) = (jf * th).sin_cos();
        r += a * c + b * s;
        r1 += jf * (-a * s + b * c);
        r2 += -jf * jf * (a * c + b * s);
    }
    (r, r1, r2)
}

/// `delta(p) = n (1/p - 1/2) - 1/2` together with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalIndex {
    pub p: f64,
    pub n: usize,
    pub delta: f64,
}

pub fn critical_index(p: f64, n: usize) -> Result<CriticalIndex> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1]")));
    }
    let nf = n as f64;
    Ok(CriticalIndex {
        p,
        n,
        delta: nf * (1.0 / p - 0.5) - 0.5,
    })
}

/// The `p'` with `delta = n (1/p' - 1/2) - 1/2`, i.e. `p' = n / (delta + 1/2 + n/2)`.
pub fn auxiliary_index(delta: f64, n: usize) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    let nf = n as f64;
    let pp = nf / (delta + 0.5 + 0.5 * nf);
    if !(pp > 0.0 && pp < 1.0) {
        return Err(Error::Domain(format!(
            "delta = {delta} gives p' = {pp} outside (0, 1); raise delta above (n-1)/2"
        )));
    }
    Ok(pp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(Gauge::euclidean(2).evaluate(&[3.0, 4.0]), 5.0);
        let g = Gauge::ell_m(2, 4).unwrap();
        assert!((g.evaluate(&[1.0, 1.0]) - 2f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(g.evaluate(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn critical_index_examples() {
        assert_eq!(critical_index(1.0, 2).unwrap().delta, 0.5);
        assert!((critical_index(2.0 / 3.0, 2).unwrap().delta - 1.5).abs() < 1e-15);
        assert_eq!(critical_index(0.5, 3).unwrap().delta, 4.0);
        assert!(critical_index(0.0, 2).is_err());
        assert!(critical_index(1.2, 2).is_err());
    }

    #[test]
    fn auxiliary_index_examples() {
        assert!((auxiliary_index(1.5, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((auxiliary_index(1.75, 2).unwrap() - 8.0 / 13.0).abs() < 1e-15);
        assert!(auxiliary_index(0.5, 2).is_err());
        assert!(auxiliary_index(-1.0, 2).is_err());
    }

    #[test]
    fn odd_exponent_is_rejected() {
        assert!(matches!(Gauge::ell_m(2, 3), Err(Error::InvalidGauge(_))));
        assert!(Gauge::superellipsoid(vec![1.0, 1.0, 1.0], vec![4, 3, 2]).is_err());
    }

    #[test]
    fn nonconvex_polar_profile_is_rejected() {
        // strong 3-fold modulation gives inward dents
        assert!(Gauge::polar(vec![1.0, 0.0, 0.0, 0.5], vec![]).is_err());
        assert!(Gauge::polar(vec![1.0, 0.0, 0.0, 0.05], vec![]).is_ok());
    }

    #[test]
    fn ell_m_spheres_are_convex() {
        for m in [2, 4, 6, 8] {
            let g = Gauge::ell_m(2, m).unwrap();
            assert!(g.sampled_convexity_defect(2048) <= 1e-14, "m = {m}");
        }
        let g = Gauge::superellipsoid(vec![1.0, 1.0, 1.0], vec![4, 4, 2]).unwrap();
        assert!(g.sampled_convexity_defect(1024) <= 1e-14);
    }

    #[test]
    fn smooth_power_is_polynomial() {
        let g = Gauge::euclidean(2).smooth_power().unwrap();
        assert!((g.evaluate(&[3.0, 4.0]) - 25.0).abs() < 1e-12);
        let g = Gauge::ell_m(2, 4).unwrap().smooth_power().unwrap();
        assert!((g.evaluate(&[1.0, 2.0]) - 17.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let gauges = vec![
            Gauge::euclidean(2),
            Gauge::ell_m(2, 4).unwrap(),
            Gauge::superellipsoid(vec![1.0, 2.0, 1.5], vec![4, 2, 6]).unwrap(),
            Gauge::polar(vec![1.0, 0.1, 0.0, 0.02], vec![0.0, 0.05]).unwrap(),
            Gauge::new(
                GaugeKind::EllM { m: 4 },
                DilationGroup::diagonal(vec![1.0, 2.0]).unwrap(),
            )
            .unwrap(),
        ];
        for g in gauges {
            let n = g.dim();
            let x: Vec<f64> = (0..n).map(|i| 0.7 - 0.45 * i as f64).collect();
            let grad = g.gradient(&x);
            for i in 0..n {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (g.evaluate(&xp) - g.evaluate(&xm)) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-7, "{} axis {i}: {fd} vs {}", g.label(), grad[i]);
            }
        }
    }

    #[test]
    fn ray_radius_lands_on_sphere() {
        let g = Gauge::superellipsoid(vec![1.0, 2.0, 1.0], vec![4, 4, 2]).unwrap();
        let u = [0.6, 0.0, 0.8];
        let r = g.ray_radius(&u);
        let p: Vec<f64> = u.iter().map(|x| x * r).collect();
        assert!((g.evaluate(&p) - 1.0).abs() < 1e-14);
        let g = Gauge::superellipsoid(vec![1.0, 2.0, 1.0], vec![4, 2, 6]).unwrap();
        let r = g.ray_radius(&u);
        let p: Vec<f64> = u.iter().map(|x| x * r).collect();
        assert!((g.evaluate(&p) - 1.0).abs() < 1e-13);
    }

    fn gauges() -> Vec<Gauge> {
        vec![
            Gauge::euclidean(2),
            Gauge::euclidean(3),
            Gauge::ell_m(2, 4).unwrap(),
            Gauge::ell_m(3, 6).unwrap(),
            Gauge::superellipsoid(vec![1.0, 0.5, 2.0], vec![4, 2, 8]).unwrap(),
            Gauge::polar(vec![1.0, 0.1, 0.0, 0.02], vec![0.0, 0.05]).unwrap(),
            Gauge::new(
                GaugeKind::Euclidean,
                DilationGroup::diagonal(vec![1.0, 0.5]).unwrap(),
            )
            .unwrap(),
            Gauge::new(
                GaugeKind::EllM { m: 4 },
                DilationGroup::diagonal(vec![0.5, 1.5, 1.0]).unwrap(),
            )
            .unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn homogeneity(idx in 0usize..8, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, lt in -4.0f64..4.0) {
            let g = &gauges()[idx];
            let x: Vec<f64> = [a, b, c][..g.dim()].to_vec();
            prop_assume!(x.iter().map(|v| v.abs()).sum::<f64>() > 1e-3);
            let t = lt.exp();
            let lhs = g.evaluate(&g.dilation.apply(t, &x));
            let rhs = t * g.evaluate(&x);
            prop_assert!(rhs > 0.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{}: {lhs} vs {rhs}", g.label());
        }

        #[test]
        fn dilation_group_law(s in 0.1f64..10.0, t in 0.1f64..10.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let d = DilationGroup::diagonal(vec![1.0, 0.25]).unwrap();
            let x = [a, b];
            let lhs = d.apply(s, &d.apply(t, &x));
            let rhs = d.apply(s * t, &x);
            for i in 0..2 {
                prop_assert!((lhs[i] - rhs[i]).abs() <= 1e-12 * (1.0 + rhs[i].abs()));
            }
            prop_assert_eq!(d.apply(1.0, &x), x.to_vec());
        }

        #[test]
        fn index_round_trip(d in 0.51f64..20.0, n in 2usize..4) {
            let nf = n as f64;
            prop_assume!(d > (nf - 1.0) / 2.0 + 1e-9);
            let pp = auxiliary_index(d, n).unwrap();
            let back = critical_index(pp, n).unwrap().delta;
            prop_assert!((back - d).abs() <= 1e-14 * d.max(1.0) * 4.0);
        }
    }
}
