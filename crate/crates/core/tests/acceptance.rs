//! Acceptance suite: one PASS/FAIL line per criterion. Run a subset by listing the
//! criterion numbers, e.g. `cargo test --test acceptance -- 3 7`.

mod oracle;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use brlab_core::decomp::{AngularPartition, DyadicBump, PieceMultiplier, RadialPiece};
use brlab_core::fit::fit_log2_vs;
use brlab_core::fourier::kernels::{
    decay_check, envelope_check, envelope_norm_p, half_max_widths, kernel_asymptotics, low_frequency_decay,
    low_frequency_kernel, KernelBundle,
};
use brlab_core::fourier::{synthesize, Domain, GridSpec, SampledField};
use brlab_core::gauge::{auxiliary_index, critical_index, DilationGroup, Gauge};
use brlab_core::hardy::{make_atom, summing_check, summing_constant, weak_quasinorm, AtomSpec};
use brlab_core::harness::{execute, ExperimentConfig};
use brlab_core::riesz::{
    check_supercritical, dilation_covariance, kernel_l1_norm, lp_bound_ensemble, moment_order, piece_decay,
    seeded_atom_spec, weak_type_drift, weak_type_ensemble, AtomSetup,
};
use brlab_core::surface::{
    angle_height_check, cap_comparability_check, doubling_check, tangent_distance_check, omega_shift_check, sample_pairs,
    ConvexSurface, RGrid,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<Vec<(bool, String)>, brlab_core::Error>;

fn check(ok: bool, detail: impl Into<String>) -> (bool, String) {
    (ok, detail.into())
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn max_min(xs: &[f64]) -> (f64, f64) {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi, lo)
}

fn bochner_riesz(gauge: &Gauge, delta: f64, grid: &GridSpec) -> brlab_core::Result<SampledField> {
    let extent = gauge.coordinate_extent().into_iter().fold(0.0, f64::max);
    synthesize(grid, grid.freq_spacing() * 4.0, extent, |xi| {
        let r = gauge.evaluate(xi);
        if r >= 1.0 {
            0.0
        } else {
            (1.0 - r).powf(delta)
        }
    })
}

fn ell4() -> Gauge {
    Gauge::ell_m(2, 4).expect("ell_4 is a valid gauge")
}

/// Partition identities.
fn partition_identities() -> Outcome {
    const BUMP_TOL: f64 = 1e-12;
    const WINDOW_TOL: f64 = 1e-10;
    const K: u32 = 12;
    const DELTA: f64 = 1.5;

    let bump = DyadicBump;
    let bump_err = (0..=400_000)
        .map(|i| (-20.0 + 40.0 * i as f64 / 400_000.0).exp2())
        .map(|t| (bump.partition_sum(t) - 1.0).abs())
        .fold(0.0, f64::max);

    let gauge = Gauge::euclidean(2);
    let surface = ConvexSurface::new(&gauge)?;
    let partitions: Vec<AngularPartition> = (1..=K).map(|k| AngularPartition::build(&surface, k)).collect::<Result<_, _>>()?;
    let window_err = partitions[..10]
        .iter()
        .map(|p| p.summary(4000, 11).max_partition_error)
        .fold(0.0, f64::max);

    let grid = GridSpec::new(2, 1024, 1024.0)?;
    let recon_err = (0..grid.len())
        .map(|i| {
            let xi = grid.freq_point(i);
            let rho = gauge.evaluate(&xi);
            if rho >= 1.0 {
                return 0.0;
            }
            let zeta: Vec<f64> = xi.iter().map(|v| v / rho).collect();
            let mut sum = RadialPiece { k: 0, delta: DELTA }.at_rho(rho);
            for (j, part) in partitions.iter().enumerate() {
                let radial = RadialPiece { k: j as u32 + 1, delta: DELTA }.at_rho(rho);
                if radial != 0.0 {
                    sum += radial * part.windows_at(&zeta).iter().map(|w| w.1).sum::<f64>();
                }
            }
            (sum - (1.0 - rho).powf(DELTA)).abs()
        })
        .fold(0.0, f64::max);
    let recon_tol = 2f64.powf(-(K as f64) * DELTA) + 1e-10;
    Ok(vec![
        check(bump_err <= BUMP_TOL, format!("bump sum error {bump_err:.1e} (tol {BUMP_TOL:.0e})")),
        check(window_err <= WINDOW_TOL, format!("window sum error {window_err:.1e} for k <= 10 (tol {WINDOW_TOL:.0e})")),
        check(recon_err <= recon_tol, format!("reconstruction error {recon_err:.2e} on 1024^2 (tol {recon_tol:.2e})")),
    ])
}

/// Covering count growth.
fn covering_count() -> Outcome {
    const TOL: f64 = 0.1;
    let surface = ConvexSurface::new(&Gauge::euclidean(2))?;
    let ks: Vec<u32> = (2..=10).collect();
    let counts: Vec<f64> = ks
        .iter()
        .map(|&k| AngularPartition::build(&surface, k).map(|p| p.count() as f64))
        .collect::<Result<_, _>>()?;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let slope = fit_log2_vs(&xs, &counts).expect("positive counts").slope;
    Ok(vec![check(
        within(slope, 0.5, TOL),
        format!("log2 N_k slope {slope:.3} (target 0.5 +- {TOL}), N_k = {counts:?}"),
    )])
}

/// Kernel of `(1 - |xi|)_+^{3/2}` against the Hankel-transform oracle.
fn kernel_oracle() -> Outcome {
    const TOL: f64 = 1e-3;
    let reference = [(1.0, 0.765_197_686_557_966_6), (10.0, -0.245_935_764_451_348_3)];
    let j0_err = reference.iter().map(|&(z, v)| (oracle::bessel_j0(z) - v).abs()).fold(0.0, f64::max);

    let grid = GridSpec::new(2, 2048, 512.0)?;
    let kernel = bochner_riesz(&Gauge::euclidean(2), 1.5, &grid)?;
    let peak = kernel.max_abs();
    let mid = grid.n_side / 2;
    let mut err = 0.0f64;
    let mut points = 0;
    for j in 0..grid.n_side {
        let x = grid.coord(j);
        if x.abs() > 0.25 * grid.half_width {
            continue;
        }
        for (idx, r) in [([j, mid], x.abs()), ([j, j], x.abs() * 2f64.sqrt())] {
            let v = kernel.data[grid.flatten(&idx)];
            err = err.max((v.re - oracle::bochner_riesz_kernel_2d(1.5, r)).abs().max(v.im.abs()) / peak);
            points += 1;
        }
    }
    Ok(vec![
        check(j0_err < 1e-14, format!("oracle J0 error {j0_err:.1e} against tabulated values")),
        check(err <= TOL, format!("max |grid - oracle| / sup = {err:.2e} over {points} points on |x| <= L/4 (tol {TOL:.0e})")),
    ])
}

fn piece_bundle(surface: &ConvexSurface, k: u32, delta: f64, grid: &GridSpec) -> brlab_core::Result<KernelBundle> {
    let part = AngularPartition::build(surface, k)?;
    let piece = PieceMultiplier::new(RadialPiece { k, delta }, &part, 0)?;
    KernelBundle::synthesize(&piece, surface.gauge(), grid)
}

fn kernel_grid(k: u32) -> brlab_core::Result<GridSpec> {
    GridSpec::new(2, 2048, PI * 2f64.powi(k as i32 + 3))
}

/// Piece kernel scaling over k.
fn piece_kernel_scaling() -> Outcome {
    const SLOPE_TOL: f64 = 0.2;
    const C2_FACTOR: f64 = 4.0;
    const WIDTH_TOL: f64 = 0.3;
    let delta = 1.5;
    let surface = ConvexSurface::new(&Gauge::euclidean(2))?;
    let ks: Vec<u32> = (2..=6).collect();
    let (mut sups, mut c2, mut widths) = (Vec::new(), Vec::new(), Vec::new());
    for &k in &ks {
        let b = piece_bundle(&surface, k, delta, &kernel_grid(k)?)?;
        sups.push(b.kernel.max_abs());
        c2.push(decay_check(&b, 2)?.normalized_sup);
        let w = half_max_widths(&b);
        widths.push(w[0] / w[1] / 2f64.powf(k as f64 / 2.0));
    }
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let slope = fit_log2_vs(&xs, &sups).expect("positive sups").slope;
    let target = -(delta + 1.0 + 0.5);
    let (c2_hi, c2_lo) = max_min(&c2);
    let mean = widths.iter().sum::<f64>() / widths.len() as f64;
    let width_dev = widths.iter().map(|w| (w / mean - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![
        check(within(slope, target, SLOPE_TOL), format!("sup slope {slope:.3} (target {target} +- {SLOPE_TOL})")),
        check(
            c2_hi / c2_lo <= C2_FACTOR,
            format!("normalized C_2 in [{c2_lo:.1}, {c2_hi:.1}], ratio {:.2} (max {C2_FACTOR})", c2_hi / c2_lo),
        ),
        check(
            width_dev <= WIDTH_TOL,
            format!("width ratio / 2^(k/2) = {widths:.2?}, max deviation from mean {mean:.2} is {:.0}% (max 30%)", 100.0 * width_dev),
        ),
    ])
}

/// Envelope function: grid stability of its L^p mass and the k-scaling of sup |H| / P.
fn piece_envelope() -> Outcome {
    const DRIFT_TOL: f64 = 0.05;
    const SLOPE_TOL: f64 = 0.2;
    const GRADIENT_RATIO: f64 = 10.0;
    let (p, delta) = (2.0 / 3.0, 3.0);
    let p_aux = auxiliary_index(delta, 2)?;
    let surface = ConvexSurface::new(&Gauge::euclidean(2))?;
    let ks: Vec<u32> = (2..=6).collect();
    let coarse = GridSpec::new(2, 1024, 256.0)?;
    let doubled = GridSpec::new(2, 2048, 512.0)?;
    let (mut drift, mut shifted) = (0.0f64, 0.0f64);
    let (mut value_sups, mut grad_ratio) = (Vec::new(), 0.0f64);
    for &k in &ks {
        let b = piece_bundle(&surface, k, delta, &kernel_grid(k)?)?;
        let base = envelope_norm_p(&coarse, &b.frame, p_aux, p, &[0.0, 0.0]);
        drift = drift.max((envelope_norm_p(&doubled, &b.frame, p_aux, p, &[0.0, 0.0]) / base - 1.0).abs());
        for x0 in [[3.0, -1.0], [-20.0, 7.5]] {
            shifted = shifted.max(envelope_norm_p(&doubled, &b.frame, p_aux, p, &x0) / base);
        }
        let env = envelope_check(&b, p)?;
        value_sups.push(env.value_sup);
        grad_ratio = grad_ratio.max(env.gradient_sup / env.value_sup);
    }
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let slope = fit_log2_vs(&xs, &value_sups).expect("positive sups").slope;
    let target = -1.0 / (2.0 * p_aux);
    Ok(vec![
        check(drift <= DRIFT_TOL, format!("||P||_p^p drift L 256 -> 512: {:.2}% (max 5%)", 100.0 * drift)),
        check(shifted <= 1.1, format!("shifted envelope mass / centered = {shifted:.3}")),
        check(
            within(slope, target, SLOPE_TOL),
            format!("sup |H|/P slope {slope:.3} (target {target:.3} +- {SLOPE_TOL}, p = 2/3, delta = 3)"),
        ),
        check(grad_ratio <= GRADIENT_RATIO, format!("gradient / value envelope constant <= {grad_ratio:.2} (max 10)")),
    ])
}

/// Cap geometry, the Omega profile and the surface lemmas.
fn surface_suite() -> Outcome {
    let r_grid = RGrid::default();
    let circle = ConvexSurface::new(&Gauge::euclidean(2))?;
    let prof = circle.omega_uniform_planar(64, &r_grid)?;
    let (hi, lo) = max_min(&prof.values);
    let cap_limit = circle.direction_cap(&[1.0, 0.0], 4096.0)? * 64.0 / (2.0 * 2f64.sqrt());

    let l4 = ConvexSurface::new(&ell4())?;
    let tilts: Vec<f64> = (0..9).map(|i| 0.002 + 0.001 * i as f64).collect();
    let (blowup, _) = l4.omega_blowup_fit(0.0, &tilts, &r_grid)?;
    let omega = l4.omega_uniform_planar(512, &r_grid)?;
    let finer_dirs = l4.omega_uniform_planar(1024, &r_grid)?;
    let finer_r = l4.omega_uniform_planar(512, &r_grid.refined())?;
    let mut integral_lines = Vec::new();
    let mut integral_ok = true;
    for q in [0.6, 0.9] {
        let base = omega.integral_power(q)?;
        let drift = (finer_dirs.integral_power(q)? / base - 1.0)
            .abs()
            .max((finer_r.integral_power(q)? / base - 1.0).abs());
        integral_ok &= base.is_finite() && drift <= 0.02;
        integral_lines.push(format!("p={q}: {base:.4} drift {:.2}%", 100.0 * drift));
    }

    let type_k = l4.surface_type(32)?;
    let l4_fine = ConvexSurface::planar(&ell4(), 1 << 17)?;
    let d1 = doubling_check(&l4, 2000, type_k, 1)?;
    let d2 = doubling_check(&l4_fine, 2000, type_k, 1)?;
    let c1 = cap_comparability_check(&l4, 2000, None, 1)?;
    let c2 = cap_comparability_check(&l4_fine, 2000, None, 1)?;
    let stable = |a: f64, b: f64| (a / b - 1.0).abs() <= 0.1;
    let doubling_ok = stable(d1.upper_ge1, d2.upper_ge1)
        && stable(d1.upper_lt1, d2.upper_lt1)
        && stable(c1.max_ratio, c2.max_ratio)
        && stable(c1.max_inverse_ratio, c2.max_inverse_ratio);

    let mut angle = Vec::new();
    for (b, m) in [(1.0, 2u32), (0.5, 4), (2.0, 6), (1.0, 8)] {
        for theta in [1e-4, 1e-2, 0.3] {
            angle.push(angle_height_check(b, m, theta, 1.0)?.ratio);
        }
    }
    let (a_hi, a_lo) = max_min(&angle);
    let pairs = sample_pairs(2, 500, (2.5, 50.0), None, 3);
    let tangent = tangent_distance_check(&l4, &pairs)?;
    let shift = omega_shift_check(&omega, &pairs)?;
    Ok(vec![
        check(hi - lo <= 1e-6, format!("circle Omega spread {:.1e} (tol 1e-6)", hi - lo)),
        check(within(cap_limit, 1.0, 0.01), format!("circle cap * sqrt(r) / 2 sqrt 2 = {cap_limit:.5} at r = 4096")),
        check(
            within(blowup.slope, -1.0 / 3.0, 0.05),
            format!("ell_4 Omega blow-up exponent {:.4} (target -1/3 +- 0.05)", blowup.slope),
        ),
        check(integral_ok, format!("ell_4 int Omega^p {} (max 2%)", integral_lines.join(", "))),
        check(
            doubling_ok,
            format!(
                "type {type_k}; doubling sup {:.3}/{:.3} (gamma >= 1 / < 1), comparability {:.3}/{:.3}; 2^16 vs 2^17 samples within 10%",
                d1.upper_ge1, d1.upper_lt1, c1.max_ratio, c1.max_inverse_ratio
            ),
        ),
        check(a_lo >= 0.25 && a_hi <= 4.0, format!("angle/height ratios in [{a_lo:.3}, {a_hi:.3}] (need [1/4, 4])")),
        check(
            tangent.max_constant.is_finite() && tangent.max_direction_ratio <= 1.0 + 1e-9,
            format!("tangent-distance constant {:.3}, direction ratio {:.3}", tangent.max_constant, tangent.max_direction_ratio),
        ),
        check(shift.max_constant <= 4.0, format!("Omega shift constant {:.3}", shift.max_constant)),
    ])
}

/// Ray asymptotics of the full kernel and decay of the smooth low-frequency kernel.
fn kernel_asymptotics_suite() -> Outcome {
    const TOL: f64 = 0.2;
    let p = 2.0 / 3.0;
    let delta = critical_index(p, 2)?.delta;
    let grid = GridSpec::new(2, 4096, 1024.0)?;
    let range = (32.0, 0.25 * grid.half_width);
    let mut slopes = Vec::new();
    for gauge in [Gauge::euclidean(2), ell4()] {
        let surface = ConvexSurface::new(&gauge)?;
        let kernel = bochner_riesz(&gauge, delta, &grid)?;
        let a = kernel_asymptotics(&kernel, &surface, p, &[1.0, 0.0], range)?;
        slopes.push((a.slope.slope, a.ratio_min, a.ratio_max, a.excluded));
    }
    // (1+|x|)^{-(n/p - (n-1)/2)} times the cap measure: r^{-1/2} on the circle, r^{-1/4}
    // toward a flat point of ell_4
    let circle_target = -(2.0 / p - 0.5) - 0.5;
    let degenerate_target = -(2.0 / p - 0.5) - 0.25;

    let h0 = low_frequency_kernel(&Gauge::euclidean(2), delta, &GridSpec::new(2, 4096, 4096.0)?)?;
    let decay = low_frequency_decay(&h0, 6);
    let (last_r, last_exp) = *decay.octave_exponents.last().expect("octaves");
    let exps: Vec<String> = decay.octave_exponents.iter().map(|(r, e)| format!("{r}:{e:.2}")).collect();
    Ok(vec![
        check(
            within(slopes[0].0, circle_target, TOL),
            format!(
                "euclidean envelope slope {:.3} (target {circle_target} +- {TOL}), ratio in [{:.3}, {:.3}], {} windows excluded",
                slopes[0].0, slopes[0].1, slopes[0].2, slopes[0].3
            ),
        ),
        check(
            within(slopes[1].0, degenerate_target, TOL),
            format!(
                "ell_4 degenerate-ray slope {:.3} (target {degenerate_target} +- {TOL}), ratio in [{:.3}, {:.3}]",
                slopes[1].0, slopes[1].1, slopes[1].2
            ),
        ),
        check(
            decay.normalized_sup.is_finite() && decay.steepening && last_exp < -6.0,
            format!("H0 octave exponents [{}]; last octave from r = {last_r} decays faster than r^-6", exps.join(" ")),
        ),
    ])
}

fn seeds(count: u64) -> Vec<u64> {
    (0..count).collect()
}

const SCALES: [f64; 3] = [0.25, 1.0, 4.0];

/// Weak-type ensemble at the critical index.
fn weak_type_surrogate() -> Outcome {
    const SPREAD: f64 = 8.0;
    const DRIFT: f64 = 0.03;
    let p = 2.0 / 3.0;
    let delta = critical_index(p, 2)?.delta;
    let mut out = Vec::new();
    for gauge in [Gauge::euclidean(2), ell4()] {
        let label = gauge.label();
        let surface = ConvexSurface::new(&gauge)?;
        let omega = surface.omega_uniform_planar(512, &RGrid::default())?;
        let l1 = kernel_l1_norm(&gauge, delta, &GridSpec::new(2, 2048, 512.0)?)?;
        let setup = AtomSetup { gauge, p, delta, mu: moment_order(2, p), n_side: 512, radii: 32.0, per_octave: 8 };
        let ens = weak_type_ensemble(&setup, Some(&omega), l1, &SCALES, &seeds(20))?;
        let mut drift = (0.0f64, 0.0f64);
        for seed in [0, 7] {
            let d = weak_type_drift(&setup, l1, &seeded_atom_spec(2, p, setup.mu, 1.0, seed))?;
            drift = (drift.0.max(d.drift_t), drift.1.max(d.drift_grid));
        }
        let inside_ratio = ens.atoms.iter().map(|a| a.inside_sup_ratio).fold(0.0, f64::max);
        let envelope = ens.max_envelope.unwrap_or(f64::INFINITY);
        out.push(check(
            ens.max_p.is_finite() && ens.spread <= SPREAD,
            format!("{label}: {} atoms, quasinorm^p in [{:.4}, {:.4}], spread {:.2} (max {SPREAD})", ens.atoms.len(), ens.min_p, ens.max_p, ens.spread),
        ));
        out.push(check(
            drift.0 <= DRIFT && drift.1 <= DRIFT,
            format!("{label}: drift t-grid {:.2}%, N_side {:.2}% (max 3%)", 100.0 * drift.0, 100.0 * drift.1),
        ));
        out.push(check(
            inside_ratio <= 1.0 && ens.max_inside_p.is_finite() && ens.max_outside_p.is_finite() && envelope.is_finite(),
            format!(
                "{label}: inside^p <= {:.4} (sup ratio {inside_ratio:.3} <= 1), outside^p <= {:.4}, Omega envelope constant {envelope:.3e}",
                ens.max_inside_p, ens.max_outside_p
            ),
        ));
    }
    Ok(out)
}

/// Strong-type ensemble above the critical index and the per-k piece decay.
fn strong_type_surrogate() -> Outcome {
    const SPREAD: f64 = 2.0;
    const SLOPE_TOL: f64 = 0.2;
    let p = 2.0 / 3.0;
    let delta = critical_index(p, 2)?.delta + 0.25;
    let gauge = Gauge::euclidean(2);
    let mu = moment_order(2, check_supercritical(p, 2, delta)?);
    let setup = AtomSetup { gauge: gauge.clone(), p, delta, mu, n_side: 512, radii: 32.0, per_octave: 8 };
    let ens = lp_bound_ensemble(&setup, &SCALES, &seeds(20), 4)?;
    let sum = ens.atomic_sum.as_ref().expect("atomic sum requested");

    // the piece maximal functions spread over ~2^k s, so they need a wide box
    let wide = AtomSetup { n_side: 2048, radii: 128.0, ..setup };
    let surface = ConvexSurface::new(&gauge)?;
    let pieces = piece_decay(&wide, &surface, &seeded_atom_spec(2, p, mu, 1.0, 0), &[2, 3, 4])?;
    let masses: Vec<String> = pieces.masses.iter().map(|m| format!("k{}:{:.3}", m.k, m.outside_p)).collect();
    Ok(vec![
        check(
            ens.max_p.is_finite() && ens.scale_spread <= SPREAD,
            format!("max ||M a||_p^p {:.4}, scale spread {:.3} (max {SPREAD})", ens.max_p, ens.scale_spread),
        ),
        check(sum.norm_p <= sum.bound, format!("atomic sum {:.4} <= {:.4}", sum.norm_p, sum.bound)),
        check(
            within(pieces.fit.slope, pieces.predicted_slope, SLOPE_TOL),
            format!(
                "per-k mass slope {:.3} (target {:.3} +- {SLOPE_TOL}) [{}]",
                pieces.fit.slope,
                pieces.predicted_slope,
                masses.join(" ")
            ),
        ),
    ])
}

/// Weak-type summing inequality on indicator, power-profile and random stacks.
fn summing_lemma() -> Outcome {
    let cells = 4096;
    let cv = 1.0 / 64.0;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    let mut stacks = 0;
    let mut all_hold = true;
    for p in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
        let indicators: Vec<Vec<f64>> = (0..8)
            .map(|k| (0..cells).map(|i| if (k * 16..k * 16 + 64).contains(&i) { 1.0 } else { 0.0 }).collect())
            .collect();
        let profiles: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                let c = rng.gen_range(0..cells) as f64;
                (0..cells).map(|i| ((i as f64 - c).abs() * cv + cv).powf(-1.0 / p)).collect()
            })
            .collect();
        let noise: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..cells).map(|_| rng.gen_range(0.0f64..1.0).powi(6)).collect())
            .collect();
        for fields in [indicators, profiles, noise] {
            // the lemma is stated for fields of unit weak quasinorm
            let fields: Vec<Vec<f64>> = fields
                .into_iter()
                .map(|f| {
                    let q = weak_quasinorm(&f, p, cv).quasinorm;
                    f.into_iter().map(|v| v / q).collect()
                })
                .collect();
            let coeffs: Vec<f64> = (0..fields.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
            let r = summing_check(&fields, &coeffs, p, cv)?;
            all_hold &= r.holds;
            worst = worst.max(r.combined / r.bound);
            stacks += 1;
        }
    }
    let c = summing_constant(0.5);
    Ok(vec![
        check(all_hold, format!("{stacks} stacks, worst combined / bound = {worst:.3}")),
        check(c == 9.0, format!("constant at p = 1/2 is {c:?}")),
    ])
}

/// Plancherel, reproducibility and dilation covariance.
fn infrastructure() -> Outcome {
    const ROUND_TRIP: f64 = 1e-10;
    const COVARIANCE: f64 = 0.02;
    let grid = GridSpec::new(2, 256, 7.3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = SampledField {
        grid,
        domain: Domain::Space,
        data: (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
    };
    let fh = f.forward()?;
    let energy = (fh.energy() / f.energy() - 1.0).abs();
    let back = fh.inverse()?;
    let trip = f.data.iter().zip(&back.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / f.max_abs();

    let config = ExperimentConfig::parse(
        "experiment = weak-type\ngauge = ell_4\nn_side = 128\nradii = 8\nseeds = 2\nscales = 0.5, 2\ndirections = 64\nseed = 17\n",
    )?;
    let first = execute(&config)?;
    let second = execute(&config)?;
    let identical = first.paths().eq(second.paths()) && first.paths().all(|path| first.get(path) == second.get(path));

    let p = 2.0 / 3.0;
    let mut cov = Vec::new();
    let anisotropic = Gauge::new(ell4().kind, DilationGroup::diagonal(vec![1.0, 2.0])?)?;
    for (gauge, s, half_width) in [(Gauge::euclidean(2), 3.0, 45.0), (anisotropic, 2.0, 35.0)] {
        let unit_grid = GridSpec::new(2, 1024, 8.0)?;
        let atom = make_atom(&unit_grid, &AtomSpec { p, mu: 1, center: vec![0.3, -0.2], radius: 1.0, seed: 4 })?;
        let scaled_grid = GridSpec::new(2, 2048, half_width)?;
        let r = dilation_covariance(&gauge, 1.5, &atom, &unit_grid, &scaled_grid, s, 8)?;
        cov.push((gauge.label(), r.max_rel_error));
    }
    let cov_ok = cov.iter().all(|c| c.1 <= COVARIANCE);
    let cov_text: Vec<String> = cov.iter().map(|(l, e)| format!("{l}: {:.2}%", 100.0 * e)).collect();
    Ok(vec![
        check(
            energy <= ROUND_TRIP && trip <= ROUND_TRIP,
            format!("Plancherel {energy:.1e}, round trip {trip:.1e} (tol {ROUND_TRIP:.0e})"),
        ),
        check(identical, format!("{} artifacts byte-identical across reruns", first.paths().count())),
        check(cov_ok, format!("dilation covariance {} (max 2%)", cov_text.join(", "))),
    ])
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("partition identities", partition_identities),
        ("covering count", covering_count),
        ("kernel oracle", kernel_oracle),
        ("piece kernel scaling", piece_kernel_scaling),
        ("piece envelope", piece_envelope),
        ("surface suite", surface_suite),
        ("kernel asymptotics", kernel_asymptotics_suite),
        ("weak-type surrogate", weak_type_surrogate),
        ("strong-type surrogate", strong_type_surrogate),
        ("summing lemma", summing_lemma),
        ("infrastructure", infrastructure),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let (pass, lines) = match run() {
            Ok(checks) => (checks.iter().all(|c| c.0), checks),
            Err(e) => (false, vec![(false, format!("error: {e}"))]),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {number:>2} {}: {name} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for (ok, detail) in lines {
            println!("    [{}] {detail}", if ok { "ok" } else { "!!" });
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
