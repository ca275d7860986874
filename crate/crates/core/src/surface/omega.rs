//! The cap-decay profile `Omega(theta) = sup_r sigma[B(xi(theta), 1/r)] (1 + r)^{(n-1)/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{ConvexSurface, SurfacePoint};
use crate::fit::{fit_loglog, LineFit};
use crate::{Error, Result};

/// Log-uniform grid of `r` values, `per_octave` points per doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    pub log2_min: f64,
    pub log2_max: f64,
    pub per_octave: usize,
}

impl Default for RGrid {
    fn default() -> Self {
        Self {
            log2_min: -4.0,
            log2_max: 12.0,
            per_octave: 8,
        }
    }
}

impl RGrid {
    pub fn validate(&self) -> Result<()> {
        if self.log2_min > -4.0 || self.log2_max < 12.0 {
            return Err(Error::Domain(
                "r-grid must span at least [2^-4, 2^12]".into(),
            ));
        }
        if self.per_octave < 1 {
            return Err(Error::Domain("r-grid needs at least one point per octave".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let steps = ((self.log2_max - self.log2_min) * self.per_octave as f64).round() as usize;
        (0..=steps)
            .map(|j| (self.log2_min + j as f64 / self.per_octave as f64).exp2())
            .collect()
    }

    pub fn refined(&self) -> Self {
        Self {
            per_octave: 2 * self.per_octave,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaProfile {
    pub directions: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Maximizing `r` per direction.
    pub argmax_r: Vec<f64>,
    pub dist_to_degenerate: Vec<f64>,
    /// The maximizer sits at the top of the r-grid, so the sup may be larger.
    pub clipped: Vec<bool>,
    /// Relative change of each value when the r-grid is doubled.
    pub refinement_delta: Vec<f64>,
    /// `refinement_delta > 2%`.
    pub unstable: Vec<bool>,
    pub r_grid: RGrid,
    /// Directions are `theta_j = (j + 1/2) 2 pi / m` on the circle.
    pub uniform_planar: bool,
}

struct Peak {
    value: f64,
    r: f64,
    clipped: bool,
}

impl ConvexSurface {
    fn omega_peak(&self, center: &SurfacePoint, opposite: Option<f64>, grid: &RGrid) -> Peak {
        let expo = 0.5 * (self.dim() as f64 - 1.0);
        let f = |r: f64| {
            let measure = match (&self.geom, opposite) {
                (super::Geometry::Planar(p), Some(opp)) => {
                    self.planar_cap(p, center, 1.0 / r, opp).measure
                }
                _ => self.cap(center, 1.0 / r).expect("positive height").measure,
            };
            measure * (1.0 + r).powf(expo)
        };
        let rs = grid.points();
        let vals: Vec<f64> = rs.iter().map(|r| f(*r)).collect();
        let (j, _) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        let mut best = Peak {
            value: vals[j],
            r: rs[j],
            clipped: j + 1 == rs.len(),
        };
        // golden-section search in log r around the grid maximizer
        let mut a = rs[j.saturating_sub(1)].ln();
        let mut b = rs[(j + 1).min(rs.len() - 1)].ln();
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = f(x1.exp());
        let mut f2 = f(x2.exp());
        for _ in 0..60 {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1.exp());
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2.exp());
            }
            if b - a < 1e-10 {
                break;
            }
        }
        for (v, x) in [(f1, x1), (f2, x2)] {
            if v > best.value {
                best.value = v;
                best.r = x.exp();
            }
        }
        best
    }

    fn opposite_param(&self, center: &SurfacePoint) -> Option<f64> {
        match &self.geom {
            super::Geometry::Planar(p) => {
                Some(self.planar_support_param(p, &[-center.normal[0], -center.normal[1]]))
            }
            super::Geometry::Spatial(_) => None,
        }
    }

    /// `Omega` at one direction together with its maximizing `r`.
    pub fn omega_at(&self, direction: &[f64], grid: &RGrid) -> Result<(f64, f64)> {
        grid.validate()?;
        let center = self.support_point(direction)?;
        let opp = self.opposite_param(&center);
        let peak = self.omega_peak(&center, opp, grid);
        Ok((peak.value, peak.r))
    }

    /// Samples `Omega` on the given directions; each value is recomputed on the doubled
    /// r-grid to report refinement stability.
    pub fn omega(&self, directions: &[Vec<f64>], grid: &RGrid) -> Result<OmegaProfile> {
        grid.validate()?;
        let fine = grid.refined();
        let rows: Vec<Result<(Peak, f64, f64)>> = directions
            .par_iter()
            .map(|d| {
                let center = self.support_point(d)?;
                let opp = self.opposite_param(&center);
                let coarse = self.omega_peak(&center, opp, grid);
                let refined = self.omega_peak(&center, opp, &fine);
                let delta = (refined.value - coarse.value).abs() / refined.value;
                Ok((coarse, delta, self.distance_to_degenerate(d)))
            })
            .collect();
        let mut profile = OmegaProfile {
            directions: directions.to_vec(),
            values: Vec::with_capacity(directions.len()),
            argmax_r: Vec::new(),
            dist_to_degenerate: Vec::new(),
            clipped: Vec::new(),
            refinement_delta: Vec::new(),
            unstable: Vec::new(),
            r_grid: *grid,
            uniform_planar: false,
        };
        for row in rows {
            let (peak, delta, dist) = row?;
            profile.values.push(peak.value);
            profile.argmax_r.push(peak.r);
            profile.clipped.push(peak.clipped);
            profile.refinement_delta.push(delta);
            profile.unstable.push(delta > 0.02);
            profile.dist_to_degenerate.push(dist);
        }
        Ok(profile)
    }

    /// `Omega` on `m` equally spaced directions of the circle.
    pub fn omega_uniform_planar(&self, m: usize, grid: &RGrid) -> Result<OmegaProfile> {
        if self.dim() != 2 {
            return Err(Error::Domain("uniform angular profile is planar only".into()));
        }
        let dirs: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let a = (j as f64 + 0.5) * 2.0 * PI / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let mut p = self.omega(&dirs, grid)?;
        p.uniform_planar = true;
        Ok(p)
    }

    /// Log-log fit of `Omega` against the distance to the degenerate normal set, along
    /// directions tilted from `normal` by the given angles. Only directions whose
    /// maximizing `r` is interior and above 1 enter the fit (the local blow-up regime).
    pub fn omega_blowup_fit(
        &self,
        normal_angle: f64,
        tilts: &[f64],
        grid: &RGrid,
    ) -> Result<(LineFit, OmegaProfile)> {
        let dirs: Vec<Vec<f64>> = tilts
            .iter()
            .map(|t| vec![(normal_angle + t).cos(), (normal_angle + t).sin()])
            .collect();
        let prof = self.omega(&dirs, grid)?;
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..dirs.len())
            .filter(|&i| !prof.clipped[i] && prof.argmax_r[i] > 1.0)
            .map(|i| (prof.dist_to_degenerate[i], prof.values[i]))
            .unzip();
        let fit = fit_loglog(&xs, &ys)
            .ok_or_else(|| Error::Numerical("no directions in the blow-up regime".into()))?;
        Ok((fit, prof))
    }
}

impl OmegaProfile {
    fn require_uniform(&self) -> Result<()> {
        if self.uniform_planar {
            Ok(())
        } else {
            Err(Error::Usage("needs a uniform planar profile".into()))
        }
    }

    /// Periodic linear interpolation in the polar angle.
    pub fn interpolate(&self, direction: &[f64]) -> Result<f64> {
        self.require_uniform()?;
        let m = self.values.len();
        let h = 2.0 * PI / m as f64;
        let a = direction[1].atan2(direction[0]).rem_euclid(2.0 * PI);
        let x = a / h - 0.5;
        let j = x.floor();
        let w = x - j;
        let i0 = (j as isize).rem_euclid(m as isize) as usize;
        let i1 = (i0 + 1) % m;
        Ok((1.0 - w) * self.values[i0] + w * self.values[i1])
    }

    /// Midpoint-rule `int_{S^1} Omega^p d theta`.
    pub fn integral_power(&self, p: f64) -> Result<f64> {
        self.require_uniform()?;
        let h = 2.0 * PI / self.values.len() as f64;
        Ok(self.values.iter().map(|v| v.powf(p)).sum::<f64>() * h)
    }

    pub fn max_refinement_delta(&self) -> f64 {
        self.refinement_delta.iter().copied().fold(0.0, f64::max)
    }

    /// CSV rows `theta,omega,dist_to_N` for planar profiles.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,omega,dist_to_N\n");
        for (d, (v, dist)) in self
            .directions
            .iter()
            .zip(self.values.iter().zip(&self.dist_to_degenerate))
        {
            let theta = d[1].atan2(d[0]);
            out.push_str(&format!("{theta:.17e},{v:.17e},{dist:.17e}\n"));
        }
        out
    }
}
