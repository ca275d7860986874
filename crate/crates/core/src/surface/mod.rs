//! Convex hypersurface geometry on the unit sphere of a gauge: support points,
//! tangent-plane caps and their measures, curvature degeneracy, the cap-decay
//! profile `Omega`, and finite-type probing.

mod lemmas;
mod omega;

pub use lemmas::{
    angle_height_check, cap_comparability_check, direction_inequality, doubling_check,
    finite_type_order, tangent_distance_check, omega_shift_check, sample_pairs, tangent_basis, AngleHeightReport, ComparabilityReport,
    ContactOrder, DoublingReport, PairCheckReport,
};
pub use omega::{OmegaProfile, RGrid};

use serde::Serialize;
use std::f64::consts::PI;

use crate::gauge::Gauge;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

const TAU: f64 = 2.0 * PI;

/// Default planar sample count.
pub const PLANAR_SAMPLES: usize = 1 << 16;
/// Default spatial grid (polar x azimuth).
pub const SPATIAL_SAMPLES: (usize, usize) = (1 << 10, 1 << 10);

/// A point on the surface together with its parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub position: Vec<f64>,
    pub normal: Vec<f64>,
    pub param: Param,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Param {
    /// Polar angle of the ray through the point.
    Angle(f64),
    /// Polar and azimuthal angle of the ray through the point.
    Sphere { theta: f64, phi: f64 },
}

/// Sample indices of a cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Members {
    /// `len` consecutive samples starting at `start`, wrapping around `total`.
    Cyclic { start: usize, len: usize, total: usize },
    List(Vec<usize>),
}

impl Members {
    pub fn len(&self) -> usize {
        match self {
            Members::Cyclic { len, .. } => *len,
            Members::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            Members::Cyclic { start, len, total } => {
                Box::new((0..*len).map(move |j| (start + j) % total))
            }
            Members::List(v) => Box::new(v.iter().copied()),
        }
    }
}

/// `{xi on the surface : d(xi, tangent plane at center) < height}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cap {
    pub center: SurfacePoint,
    pub height: f64,
    #[serde(skip)]
    pub members: Members,
    pub measure: f64,
    /// No sample satisfies the membership inequality; the measure is reported as 0.
    pub empty: bool,
}

#[derive(Debug, Clone)]
struct Planar {
    m: usize,
    dphi: f64,
    points: Vec<[f64; 2]>,
    normals: Vec<[f64; 2]>,
    /// Unwrapped normal angle per sample, increasing.
    psi: Vec<f64>,
    /// Arc length from sample 0 to sample i (length m + 1).
    cum: Vec<f64>,
    weights: Vec<f64>,
    curvature: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone)]
struct Spatial {
    nt: usize,
    np: usize,
    thetas: Vec<f64>,
    points: Vec<[f64; 3]>,
    normals: Vec<[f64; 3]>,
    weights: Vec<f64>,
    curvature: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Geometry {
    Planar(Planar),
    Spatial(Spatial),
}

/// Boundary quadrature of the unit sphere `{rho = 1}` of a gauge with `A_t = t I`.
#[derive(Debug, Clone)]
pub struct ConvexSurface {
    gauge: Gauge,
    geom: Geometry,
    total: f64,
    degenerate_normals: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

impl ConvexSurface {
    /// Builds the default-resolution quadrature for dimension 2 or 3.
    pub fn new(gauge: &Gauge) -> Result<Self> {
        match gauge.dim() {
            2 => Self::planar(gauge, PLANAR_SAMPLES),
            3 => Self::spatial(gauge, SPATIAL_SAMPLES.0, SPATIAL_SAMPLES.1),
            n => Err(Error::Domain(format!("surfaces are implemented for n = 2, 3 (got {n})"))),
        }
    }

    fn check_gauge(gauge: &Gauge, n: usize) -> Result<()> {
        if gauge.dim() != n {
            return Err(Error::Domain(format!("gauge has dimension {}, expected {n}", gauge.dim())));
        }
        if !gauge.dilation.is_identity_generator() {
            return Err(Error::Domain(
                "surface geometry needs A_t = t I (the unit sphere is then a level set)".into(),
            ));
        }
        Ok(())
    }

    pub fn planar(gauge: &Gauge, m: usize) -> Result<Self> {
        Self::check_gauge(gauge, 2)?;
        if m < 64 {
            return Err(Error::Domain("need at least 64 boundary samples".into()));
        }
        let dphi = TAU / m as f64;
        let gl = gauss_legendre(8);
        let mut points = Vec::with_capacity(m);
        let mut normals = Vec::with_capacity(m);
        for i in 0..m {
            let (p, nrm) = planar_point(gauge, i as f64 * dphi);
            points.push(p);
            normals.push(nrm);
        }
        let mut psi = Vec::with_capacity(m);
        let mut prev = normals[0][1].atan2(normals[0][0]);
        psi.push(prev);
        for nrm in &normals[1..] {
            let a = nrm[1].atan2(nrm[0]);
            prev += wrap_pi(a - prev);
            psi.push(prev);
        }
        let mut cells = Vec::with_capacity(m);
        for i in 0..m {
            let a = i as f64 * dphi;
            cells.push(gl_integral(&gl, |phi| planar_speed(gauge, phi), a, a + dphi));
        }
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(0.0);
        for c in &cells {
            cum.push(cum.last().unwrap() + c);
        }
        let weights: Vec<f64> = (0..m).map(|i| 0.5 * (cells[(i + m - 1) % m] + cells[i])).collect();
        let curvature: Vec<f64> = (0..m)
            .map(|i| {
                let next = if i + 1 < m { psi[i + 1] } else { psi[0] + TAU };
                let prev = if i > 0 { psi[i - 1] } else { psi[m - 1] - TAU };
                (next - prev) / (cells[(i + m - 1) % m] + cells[i])
            })
            .collect();
        let total = cum[m];
        let med = median(&curvature);
        let degenerate_normals = (0..m)
            .filter(|&i| curvature[i] < 1e-6 * med)
            .map(|i| normals[i].to_vec())
            .collect();
        Ok(Self {
            gauge: gauge.clone(),
            geom: Geometry::Planar(Planar {
                m,
                dphi,
                points,
                normals,
                psi,
                cum,
                weights,
                curvature,
                gl,
            }),
            total,
            degenerate_normals,
        })
    }

    /// Gauss–Legendre in `cos(theta)` times a uniform azimuth grid.
    pub fn spatial(gauge: &Gauge, nt: usize, np: usize) -> Result<Self> {
        Self::check_gauge(gauge, 3)?;
        if nt < 8 || np < 8 {
            return Err(Error::Domain("spatial grid too small".into()));
        }
        let (x, w) = gauss_legendre(nt);
        // cos(theta) decreasing in the polar index
        let thetas: Vec<f64> = x.iter().rev().map(|c| c.acos()).collect();
        let wts: Vec<f64> = w.iter().rev().copied().collect();
        let dp = TAU / np as f64;
        let count = nt * np;
        let mut points = Vec::with_capacity(count);
        let mut normals = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for it in 0..nt {
            for ip in 0..np {
                let (p, nrm) = spatial_point(gauge, thetas[it], ip as f64 * dp);
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let u = [p[0] / r, p[1] / r, p[2] / r];
                // star-shaped area element R^2 / <u, n> d(omega)
                weights.push(wts[it] * dp * r * r / dot(&u, &nrm));
                points.push(p);
                normals.push(nrm);
            }
        }
        let curvature = spatial_curvature(&points, &normals, nt, np);
        let total = weights.iter().sum();
        let med = median(&curvature);
        let degenerate_normals = (0..count)
            .filter(|&i| curvature[i] < 1e-6 * med)
            .map(|i| normals[i].to_vec())
            .collect();
        Ok(Self {
            gauge: gauge.clone(),
            geom: Geometry::Spatial(Spatial {
                nt,
                np,
                thetas,
                points,
                normals,
                weights,
                curvature,
            }),
            total,
            degenerate_normals,
        })
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn dim(&self) -> usize {
        self.gauge.dim()
    }

    pub fn sample_count(&self) -> usize {
        match &self.geom {
            Geometry::Planar(p) => p.m,
            Geometry::Spatial(s) => s.nt * s.np,
        }
    }

    /// `sigma(Sigma)`.
    pub fn total_measure(&self) -> f64 {
        self.total
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        match &self.geom {
            Geometry::Planar(p) => p.points[i].to_vec(),
            Geometry::Spatial(s) => s.points[i].to_vec(),
        }
    }

    pub fn normal(&self, i: usize) -> Vec<f64> {
        match &self.geom {
            Geometry::Planar(p) => p.normals[i].to_vec(),
            Geometry::Spatial(s) => s.normals[i].to_vec(),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.geom {
            Geometry::Planar(p) => p.weights[i],
            Geometry::Spatial(s) => s.weights[i],
        }
    }

    /// Discrete curvature (planar) or Gaussian curvature (spatial) at sample `i`.
    pub fn curvature(&self, i: usize) -> f64 {
        match &self.geom {
            Geometry::Planar(p) => p.curvature[i],
            Geometry::Spatial(s) => s.curvature[i],
        }
    }

    /// Normals at samples whose curvature falls below `1e-6` of the median.
    pub fn degenerate_normals(&self) -> &[Vec<f64>] {
        &self.degenerate_normals
    }

    /// Euclidean distance from a unit vector to the degenerate normal set
    /// (`inf` when that set is empty).
    pub fn distance_to_degenerate(&self, theta: &[f64]) -> f64 {
        self.degenerate_normals
            .iter()
            .map(|v| v.iter().zip(theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Surface point at a continuous parameter.
    pub fn point_at(&self, param: Param) -> SurfacePoint {
        match param {
            Param::Angle(phi) => {
                let (p, n) = planar_point(&self.gauge, phi);
                SurfacePoint { position: p.to_vec(), normal: n.to_vec(), param }
            }
            Param::Sphere { theta, phi } => {
                let (p, n) = spatial_point(&self.gauge, theta, phi);
                SurfacePoint { position: p.to_vec(), normal: n.to_vec(), param }
            }
        }
    }

    /// The point of the surface maximizing `<xi, direction>`.
    pub fn support_point(&self, direction: &[f64]) -> Result<SurfacePoint> {
        if direction.len() != self.dim() {
            return Err(Error::Domain("direction has the wrong dimension".into()));
        }
        let norm = dot(direction, direction).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("direction must be a nonzero finite vector".into()));
        }
        let dir: Vec<f64> = direction.iter().map(|x| x / norm).collect();
        Ok(match &self.geom {
            Geometry::Planar(p) => {
                let phi = self.planar_support_param(p, &dir);
                self.point_at(Param::Angle(phi))
            }
            Geometry::Spatial(s) => self.spatial_support(s, &dir),
        })
    }

    fn planar_support_param(&self, p: &Planar, dir: &[f64]) -> f64 {
        let alpha = dir[1].atan2(dir[0]);
        let a = p.psi[0] + (alpha - p.psi[0]).rem_euclid(TAU);
        let i = p.psi.partition_point(|x| *x <= a).saturating_sub(1);
        let (mut lo, mut hi) = (i as f64 * p.dphi, (i + 1) as f64 * p.dphi);
        let base = p.psi[i];
        // continuous normal angle, unwrapped near psi[i]
        let angle = |phi: f64| {
            let (_, n) = planar_point(&self.gauge, phi);
            base + wrap_pi(n[1].atan2(n[0]) - base)
        };
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if angle(mid) < a {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn spatial_support(&self, s: &Spatial, dir: &[f64]) -> SurfacePoint {
        let best = (0..s.points.len())
            .max_by(|&a, &b| dot(&s.points[a], dir).total_cmp(&dot(&s.points[b], dir)))
            .expect("non-empty grid");
        let mut theta = s.thetas[best / s.np];
        let mut phi = (best % s.np) as f64 * TAU / s.np as f64;
        let value = |t: f64, f: f64| dot(&spatial_point(&self.gauge, t, f).0, dir);
        let mut cur = value(theta, phi);
        // compass search; the objective is smooth and concave near the maximizer
        let mut step = PI / s.nt as f64;
        while step > 1e-13 {
            let mut moved = false;
            for (dt, df) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let t = (theta + dt).clamp(0.0, PI);
                let f = phi + df / theta.sin().max(1e-3);
                let v = value(t, f);
                if v > cur {
                    cur = v;
                    theta = t;
                    phi = f;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        self.point_at(Param::Sphere { theta, phi })
    }

    /// Cap of height `height` about `center`.
    pub fn cap(&self, center: &SurfacePoint, height: f64) -> Result<Cap> {
        if !(height > 0.0) {
            return Err(Error::Domain(format!("cap height must be positive (got {height})")));
        }
        match &self.geom {
            Geometry::Planar(p) => {
                let opposite = self.planar_support_param(p, &[-center.normal[0], -center.normal[1]]);
                Ok(self.planar_cap(p, center, height, opposite))
            }
            Geometry::Spatial(s) => Ok(self.spatial_cap(s, center, height)),
        }
    }

    /// Planar cap with the antipodal support parameter precomputed.
    fn planar_cap(&self, p: &Planar, center: &SurfacePoint, height: f64, opposite: f64) -> Cap {
        let phi0 = match center.param {
            Param::Angle(a) => a,
            Param::Sphere { .. } => unreachable!("planar surface"),
        };
        let n0 = [center.normal[0], center.normal[1]];
        let p0 = [center.position[0], center.position[1]];
        let dist = |q: &[f64; 2]| (p0[0] - q[0]) * n0[0] + (p0[1] - q[1]) * n0[1];
        let dist_at = |phi: f64| dist(&planar_point(&self.gauge, phi).0);
        let opp = phi0 + (opposite - phi0).rem_euclid(TAU);
        let width = dist_at(opp);
        if height >= width {
            return Cap {
                center: center.clone(),
                height,
                members: Members::Cyclic { start: 0, len: p.m, total: p.m },
                measure: self.total,
                empty: false,
            };
        }
        // d increases on [phi0, opp] and decreases on [opp, phi0 + 2 pi]
        let crossing = |mut lo: f64, mut hi: f64, rising: bool| {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (dist_at(mid) < height) == rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        let plus = crossing(phi0, opp, true);
        let minus = crossing(opp - TAU, phi0, false);
        let measure = self.arc_length_to(p, plus) - self.arc_length_to(p, minus);

        // sample-level membership, matching d < height exactly
        let m = p.m as isize;
        let idx = |j: isize| j.rem_euclid(m) as usize;
        let first_fwd = (phi0 / p.dphi).ceil() as isize;
        let last_fwd = (opp / p.dphi).floor() as isize;
        let fwd = partition(first_fwd, last_fwd, |j| dist(&p.points[idx(j)]) < height);
        let first_back = first_fwd - 1;
        let last_back = ((opp - TAU) / p.dphi).ceil() as isize;
        let back = partition_desc(first_back, last_back, |j| dist(&p.points[idx(j)]) < height);
        let len = ((fwd + back) as usize).min(p.m);
        let start = idx(first_fwd - back as isize);
        let empty = len == 0;
        Cap {
            center: center.clone(),
            height,
            members: Members::Cyclic { start, len, total: p.m },
            measure: if empty { 0.0 } else { measure },
            empty,
        }
    }

    fn spatial_cap(&self, s: &Spatial, center: &SurfacePoint, height: f64) -> Cap {
        let n0 = &center.normal;
        let p0 = &center.position;
        let mut members = Vec::new();
        let mut measure = 0.0;
        for (i, q) in s.points.iter().enumerate() {
            let d = (p0[0] - q[0]) * n0[0] + (p0[1] - q[1]) * n0[1] + (p0[2] - q[2]) * n0[2];
            if d < height {
                members.push(i);
                measure += s.weights[i];
            }
        }
        let empty = members.is_empty();
        Cap { center: center.clone(), height, members: Members::List(members), measure, empty }
    }

    /// Signed distance from sample `i` to the tangent plane at `center`, measured inward.
    pub fn tangent_distance(&self, center: &SurfacePoint, i: usize) -> f64 {
        let q = self.position(i);
        center.position.iter().zip(&q).zip(&center.normal).map(|((a, b), n)| (a - b) * n).sum()
    }

    /// Arc length from parameter 0 to `phi` (any real, counted with winding).
    fn arc_length_to(&self, p: &Planar, phi: f64) -> f64 {
        let turns = (phi / TAU).floor();
        let r = phi - turns * TAU;
        let i = ((r / p.dphi).floor() as usize).min(p.m - 1);
        let a = i as f64 * p.dphi;
        turns * self.total + p.cum[i] + gl_integral(&p.gl, |x| planar_speed(&self.gauge, x), a, r)
    }

    /// Cap measure `sigma[B(xi(theta), 1/r)]` for a direction `theta`.
    pub fn direction_cap(&self, theta: &[f64], r: f64) -> Result<f64> {
        let center = self.support_point(theta)?;
        Ok(self.cap(&center, 1.0 / r)?.measure)
    }
}

/// Number of consecutive `j = first, first+1, ..` (up to `last`) with `pred(j)`,
/// assuming `pred` is true on a prefix.
fn partition(first: isize, last: isize, pred: impl Fn(isize) -> bool) -> usize {
    if last < first {
        return 0;
    }
    let (mut lo, mut hi) = (0usize, (last - first + 1) as usize);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(first + mid as isize) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Same as [`partition`] walking downward from `first` to `last`.
fn partition_desc(first: isize, last: isize, pred: impl Fn(isize) -> bool) -> usize {
    if first < last {
        return 0;
    }
    let (mut lo, mut hi) = (0usize, (first - last + 1) as usize);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(first - mid as isize) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

fn gl_integral(gl: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    gl.0.iter().zip(&gl.1).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

fn planar_point(gauge: &Gauge, phi: f64) -> ([f64; 2], [f64; 2]) {
    let u = [phi.cos(), phi.sin()];
    let r = gauge.ray_radius(&u);
    let p = [r * u[0], r * u[1]];
    let n = gauge.unit_normal(&p);
    (p, [n[0], n[1]])
}

fn planar_speed(gauge: &Gauge, phi: f64) -> f64 {
    let u = [phi.cos(), phi.sin()];
    let r = gauge.ray_radius(&u);
    let n = gauge.unit_normal(&[r * u[0], r * u[1]]);
    r / (u[0] * n[0] + u[1] * n[1])
}

fn spatial_point(gauge: &Gauge, theta: f64, phi: f64) -> ([f64; 3], [f64; 3]) {
    let (st, ct) = theta.sin_cos();
    let u = [st * phi.cos(), st * phi.sin(), ct];
    let r = gauge.ray_radius(&u);
    let p = [r * u[0], r * u[1], r * u[2]];
    let n = gauge.unit_normal(&p);
    (p, [n[0], n[1], n[2]])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Gaussian curvature as the ratio of the normal-map and position-map area
/// elements, both by differences in grid index.
fn spatial_curvature(points: &[[f64; 3]], normals: &[[f64; 3]], nt: usize, np: usize) -> Vec<f64> {
    let mut out = vec![0.0; nt * np];
    for it in 0..nt {
        let (a, b) = if it == 0 {
            (0, 1)
        } else if it == nt - 1 {
            (nt - 2, nt - 1)
        } else {
            (it - 1, it + 1)
        };
        for ip in 0..np {
            let (l, r) = ((ip + np - 1) % np, (ip + 1) % np);
            let i = it * np + ip;
            let pt = sub(points[b * np + ip], points[a * np + ip]);
            let pp = sub(points[it * np + r], points[it * np + l]);
            let nt_ = sub(normals[b * np + ip], normals[a * np + ip]);
            let np_ = sub(normals[it * np + r], normals[it * np + l]);
            let area = dot(&cross(pt, pp), &normals[i]);
            let gauss = dot(&cross(nt_, np_), &normals[i]);
            out[i] = if area.abs() > 0.0 { gauss / area } else { f64::NAN };
        }
    }
    out
}
