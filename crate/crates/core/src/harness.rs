//! Experiment configuration, validation, orchestration and reproducible artifacts.
//!
//! A run writes `report.json`, `curves/*.csv` and `fields/*.bin` under the output
//! directory, plus `run.json` with checksums of every artifact. Everything except the
//! wall time in `run.json` is a pure function of the config.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::decomp::{AngularPartition, DyadicBump, PieceMultiplier, RadialPiece};
use crate::fit::fit_log2_vs;
use crate::fourier::kernels::{decay_check, envelope_check, half_max_widths, KernelBundle};
use crate::fourier::{encode_field, GridSpec};
use crate::gauge::{auxiliary_index, critical_index, DilationGroup, Gauge, GaugeKind};
use crate::hardy::{make_atom, summing_check, summing_constant};
use crate::riesz::{
    check_supercritical, kernel_l1_norm, lp_bound_ensemble, moment_order, piece_decay, seeded_atom_spec,
    weak_type_drift, weak_type_ensemble, AtomSetup,
};
use crate::surface::{
    angle_height_check, cap_comparability_check, doubling_check, tangent_distance_check, omega_shift_check, sample_pairs,
    ConvexSurface, RGrid,
};
use crate::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Decompose,
    KernelDecay,
    Omega,
    Atoms,
    WeakType,
    LpBound,
    LemmaChecks,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Self::Decompose,
        Self::KernelDecay,
        Self::Omega,
        Self::Atoms,
        Self::WeakType,
        Self::LpBound,
        Self::LemmaChecks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Decompose => "decompose",
            Self::KernelDecay => "kernel-decay",
            Self::Omega => "omega",
            Self::Atoms => "atoms",
            Self::WeakType => "weak-type",
            Self::LpBound => "lp-bound",
            Self::LemmaChecks => "lemma-checks",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// `delta` as a number or relative to the critical index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DeltaSpec {
    Critical,
    CriticalPlus(f64),
    Value(f64),
}

impl DeltaSpec {
    pub fn resolve(self, p: f64, n: usize) -> Result<f64> {
        match self {
            Self::Value(d) => Ok(d),
            Self::Critical => Ok(critical_index(p, n)?.delta),
            Self::CriticalPlus(x) => Ok(critical_index(p, n)?.delta + x),
        }
    }
}

impl FromStr for DeltaSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "critical" {
            return Ok(Self::Critical);
        }
        if let Some(rest) = s.strip_prefix("critical+") {
            return parse_number(rest).map(Self::CriticalPlus);
        }
        parse_number(s).map(Self::Value)
    }
}

/// Accepts decimals and simple fractions such as `2/3`.
fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("bad number '{s}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Config(format!("bad number '{s}'")))?;
            a / b
        }
        None => s.parse().map_err(|_| Error::Config(format!("bad number '{s}'")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("non-finite number '{s}'")))
    }
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| f(x.trim())).collect()
}

/// Gauge descriptor of a config: `euclidean`, `ell_<m>`, `superellipsoid` (with
/// `semi_axes` and `exponents`) or `polar` (with `polar_cos` and `polar_sin`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeSpec {
    pub name: String,
    pub semi_axes: Vec<f64>,
    pub exponents: Vec<u32>,
    pub polar_cos: Vec<f64>,
    pub polar_sin: Vec<f64>,
    /// Diagonal dilation generator; empty means isotropic.
    pub dilation: Vec<f64>,
}

impl GaugeSpec {
    pub fn build(&self, n: usize) -> Result<Gauge> {
        let kind = if self.name == "euclidean" {
            GaugeKind::Euclidean
        } else if let Some(m) = self.name.strip_prefix("ell_") {
            let m = m.parse().map_err(|_| Error::Config(format!("bad gauge '{}'", self.name)))?;
            GaugeKind::EllM { m }
        } else if self.name == "superellipsoid" {
            GaugeKind::Superellipsoid { semi_axes: self.semi_axes.clone(), exponents: self.exponents.clone() }
        } else if self.name == "polar" {
            GaugeKind::Polar { cos: self.polar_cos.clone(), sin: self.polar_sin.clone() }
        } else {
            return Err(Error::Config(format!("unknown gauge '{}'", self.name)));
        };
        let dilation = if self.dilation.is_empty() {
            DilationGroup::isotropic(n)
        } else {
            DilationGroup::diagonal(self.dilation.clone())?
        };
        if dilation.dim() != n {
            return Err(Error::InvalidGauge(format!("dilation has dimension {}, config has n = {n}", dilation.dim())));
        }
        Gauge::new(kind, dilation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub gauge: GaugeSpec,
    pub n: usize,
    pub p: f64,
    pub delta: DeltaSpec,
    pub n_side: usize,
    /// Box half-width for kernel grids; `None` picks the per-`k` default.
    pub half_width: Option<f64>,
    /// Box half-width in atom radii for atom experiments.
    pub radii: f64,
    pub t_per_octave: u32,
    pub seeds: u32,
    pub seed: u64,
    pub scales: Vec<f64>,
    pub k_min: u32,
    pub k_max: u32,
    pub directions: usize,
    pub samples: usize,
    pub write_fields: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            gauge: GaugeSpec {
                name: "euclidean".into(),
                semi_axes: vec![],
                exponents: vec![],
                polar_cos: vec![],
                polar_sin: vec![],
                dilation: vec![],
            },
            n: 2,
            p: 2.0 / 3.0,
            delta: DeltaSpec::Critical,
            n_side: 512,
            half_width: None,
            radii: 32.0,
            t_per_octave: 8,
            seeds: 20,
            seed: 0,
            scales: vec![0.25, 1.0, 4.0],
            k_min: 2,
            k_max: 6,
            directions: 512,
            samples: 2000,
            write_fields: true,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), no + 1).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", no + 1)));
            }
            let ctx = |e: Error| Error::Config(format!("line {}: {key}: {e}", no + 1));
            let int = |v: &str| v.parse::<u64>().map_err(|_| Error::Config(format!("bad integer '{v}'")));
            match key {
                "experiment" => c.experiment = Some(value.parse().map_err(ctx)?),
                "gauge" => c.gauge.name = value.to_string(),
                "semi_axes" => c.gauge.semi_axes = parse_list(value, parse_number).map_err(ctx)?,
                "exponents" => c.gauge.exponents = parse_list(value, |v| int(v).map(|x| x as u32)).map_err(ctx)?,
                "polar_cos" => c.gauge.polar_cos = parse_list(value, parse_number).map_err(ctx)?,
                "polar_sin" => c.gauge.polar_sin = parse_list(value, parse_number).map_err(ctx)?,
                "dilation" => c.gauge.dilation = parse_list(value, parse_number).map_err(ctx)?,
                "n" => c.n = int(value).map_err(ctx)? as usize,
                "p" => c.p = parse_number(value).map_err(ctx)?,
                "delta" => c.delta = value.parse().map_err(ctx)?,
                "n_side" => c.n_side = int(value).map_err(ctx)? as usize,
                "half_width" => c.half_width = Some(parse_number(value).map_err(ctx)?),
                "radii" => c.radii = parse_number(value).map_err(ctx)?,
                "t_per_octave" => c.t_per_octave = int(value).map_err(ctx)? as u32,
                "seeds" => c.seeds = int(value).map_err(ctx)? as u32,
                "seed" => c.seed = int(value).map_err(ctx)?,
                "scales" => c.scales = parse_list(value, parse_number).map_err(ctx)?,
                "k_min" => c.k_min = int(value).map_err(ctx)? as u32,
                "k_max" => c.k_max = int(value).map_err(ctx)? as u32,
                "directions" => c.directions = int(value).map_err(ctx)? as usize,
                "samples" => c.samples = int(value).map_err(ctx)? as usize,
                "write_fields" => {
                    c.write_fields = value.parse().map_err(|_| ctx(Error::Config(format!("bad boolean '{value}'"))))?
                }
                "out" => c.out = Some(PathBuf::from(value)),
                _ => return Err(Error::Config(format!("line {}: unknown key '{key}'", no + 1))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Canonical JSON of every field that affects results.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }

    fn experiment(&self) -> Result<Experiment> {
        self.experiment.ok_or_else(|| Error::Config("no experiment given".into()))
    }

    fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }

    fn kernel_grid(&self, k: u32) -> Result<GridSpec> {
        let l = self.half_width.unwrap_or(std::f64::consts::PI * 2f64.powi(k as i32 + 3));
        GridSpec::new(self.n, self.n_side, l)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Violated hypotheses or resource bounds; empty iff the config is runnable.
pub fn validate(c: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    let Some(exp) = c.experiment else {
        v.push("no experiment given".into());
        return v;
    };
    if !(c.p > 0.0 && c.p < 1.0) {
        v.push(format!("p ∈ (0,1) required by both theorems (got p = {})", c.p));
    }
    if !(1..=3).contains(&c.n) {
        v.push(format!("dimension n = {} outside 1..=3", c.n));
    }
    let gauge = match c.gauge.build(c.n) {
        Ok(g) => Some(g),
        Err(e) => {
            v.push(format!("unit sphere not smooth/convex as required: {e}"));
            None
        }
    };
    if matches!(exp, Experiment::Omega | Experiment::LemmaChecks | Experiment::Decompose) && c.n != 2 && c.n != 3 {
        v.push(format!("{exp} needs n = 2 or 3"));
    }
    if matches!(exp, Experiment::LemmaChecks | Experiment::Omega) && c.n != 2 {
        v.push(format!("{exp} is implemented for planar curves only (n = 2)"));
    }
    if let Err(e) = GridSpec::new(c.n.clamp(1, 3), c.n_side, 1.0) {
        v.push(format!("grid resource bound: {e}"));
    }
    if c.t_per_octave < crate::riesz::TGrid::MIN_PER_OCTAVE {
        v.push(format!("t_per_octave must be at least {}", crate::riesz::TGrid::MIN_PER_OCTAVE));
    }
    if c.k_min > c.k_max || c.k_max > 12 {
        v.push(format!("k range {}..={} must be nonempty and at most 12", c.k_min, c.k_max));
    }
    if c.scales.iter().any(|s| !(*s > 0.0)) || c.scales.is_empty() {
        v.push("scales must be positive and nonempty".into());
    }
    if c.seeds == 0 {
        v.push("seeds must be at least 1".into());
    }
    if !(c.radii >= 8.0) {
        v.push("radii must be at least 8 atom radii".into());
    }
    if c.p > 0.0 && c.p < 1.0 && (1..=3).contains(&c.n) {
        match c.delta.resolve(c.p, c.n) {
            Ok(d) if !(d > 0.0) => v.push(format!("delta = {d} must be positive")),
            Ok(d) => {
                if exp == Experiment::LpBound {
                    if let Err(e) = check_supercritical(c.p, c.n, d) {
                        v.push(format!("lp-bound requires delta > delta(p): {e}"));
                    }
                }
            }
            Err(e) => v.push(e.to_string()),
        }
    }
    if let (Some(g), Experiment::WeakType | Experiment::LpBound | Experiment::Atoms) = (&gauge, exp) {
        // spatial resolution of the densest atom family member
        let delta = c.delta.resolve(c.p, c.n).unwrap_or(1.0);
        let q = if exp == Experiment::LpBound { auxiliary_index(delta, c.n).unwrap_or(c.p) } else { c.p };
        let mu = moment_order(c.n, q.clamp(1e-3, 1.0));
        let cells = c.n_side as f64 / (2.0 * c.radii);
        let needed = 2.0 * (mu as f64 + 2.0);
        if cells < needed {
            let side = (2.0 * c.radii * needed).ceil() as usize;
            v.push(format!(
                "atoms span {cells:.1} cells per radius, moment order {mu} needs {needed}; use N_side >= {}",
                side.next_power_of_two()
            ));
        }
        let _ = g;
    }
    v
}

/// Bytes of every artifact, keyed by relative path.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(path.into(), bytes);
    }

    pub fn add_csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) {
        let mut s = String::from(header);
        s.push('\n');
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        self.add(format!("curves/{name}.csv"), s.into_bytes());
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(|v| v.as_slice())
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(|s| s.as_str())
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ArtifactRecord {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub experiment: Experiment,
    pub config_hash: String,
    pub tool_version: String,
    pub artifacts: Vec<ArtifactRecord>,
    pub wall_time_s: f64,
}

/// Runs the experiment in memory.
pub fn execute(c: &ExperimentConfig) -> Result<Artifacts> {
    let violations = validate(c);
    if !violations.is_empty() {
        return Err(Error::Config(violations.join("; ")));
    }
    let exp = c.experiment()?;
    let gauge = c.gauge.build(c.n)?;
    let mut art = Artifacts::default();
    let body = match exp {
        Experiment::Decompose => run_decompose(c, &gauge, &mut art)?,
        Experiment::KernelDecay => run_kernel_decay(c, &gauge, &mut art)?,
        Experiment::Omega => run_omega(c, &gauge, &mut art)?,
        Experiment::Atoms => run_atoms(c, &gauge, &mut art)?,
        Experiment::WeakType => run_weak_type(c, &gauge, &mut art)?,
        Experiment::LpBound => run_lp_bound(c, &gauge, &mut art)?,
        Experiment::LemmaChecks => run_lemma_checks(c, &gauge, &mut art)?,
    };
    let report = json!({
        "experiment": exp,
        "tool_version": TOOL_VERSION,
        "config_hash": c.hash(),
        "config": c,
        "gauge": gauge.label(),
        "results": body,
    });
    art.add("report.json", serde_json::to_vec_pretty(&report)?);
    Ok(art)
}

/// Runs the experiment and writes its artifacts under `out`. Files are staged in a
/// sibling directory and moved into place only after the experiment succeeds.
pub fn run(c: &ExperimentConfig, out: &Path) -> Result<RunRecord> {
    let start = Instant::now();
    let art = execute(c)?;
    let staging = staging_dir(out);
    let written = write_staged(&art, &staging, out);
    if written.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    written?;
    let artifacts: Vec<ArtifactRecord> = art
        .files
        .iter()
        .map(|(p, b)| ArtifactRecord { path: p.clone(), bytes: b.len(), sha256: hex(&Sha256::digest(b)) })
        .collect();
    let record = RunRecord {
        experiment: c.experiment()?,
        config_hash: c.hash(),
        tool_version: TOOL_VERSION.into(),
        artifacts,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    fs::write(out.join("run.json"), serde_json::to_vec_pretty(&record)?)?;
    Ok(record)
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial"))
}

fn write_staged(art: &Artifacts, staging: &Path, out: &Path) -> Result<()> {
    if staging.exists() {
        fs::remove_dir_all(staging)?;
    }
    for (rel, bytes) in &art.files {
        let path = staging.join(rel);
        fs::create_dir_all(path.parent().expect("artifact paths are relative files"))?;
        fs::write(path, bytes)?;
    }
    fs::create_dir_all(out)?;
    for rel in art.files.keys() {
        let dest = out.join(rel);
        fs::create_dir_all(dest.parent().expect("artifact paths are relative files"))?;
        fs::rename(staging.join(rel), dest)?;
    }
    fs::remove_dir_all(staging)?;
    Ok(())
}

fn run_decompose(c: &ExperimentConfig, gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let bump = DyadicBump;
    let mut bump_err = 0.0f64;
    for i in 0..=4000 {
        let t = 2f64.powf(-20.0 + 40.0 * i as f64 / 4000.0);
        bump_err = bump_err.max((bump.partition_sum(t) - 1.0).abs());
    }
    let surface = ConvexSurface::new(gauge)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for k in c.k_min..=c.k_max {
        let part = AngularPartition::build(&surface, k)?;
        let s = part.summary(c.samples, c.seed);
        rows.push(format!("{},{},{},{},{},{:e}", s.k, s.count, s.support_radius, s.count_constant, s.max_overlap, s.max_partition_error));
        if k == c.k_min {
            art.add(format!("curves/centers_k{k}.csv"), part.centers_csv().into_bytes());
        }
        summaries.push(s);
    }
    art.add_csv("partition", "k,count,support_radius,count_constant,max_overlap,max_partition_error", rows);
    let xs: Vec<f64> = summaries.iter().map(|s| s.k as f64).collect();
    let ys: Vec<f64> = summaries.iter().map(|s| s.count as f64).collect();
    let fit = fit_log2_vs(&xs, &ys);
    Ok(json!({
        "bump_identity_max_error": bump_err,
        "partitions": summaries,
        "count_slope": fit,
        "count_slope_predicted": (c.n as f64 - 1.0) / 2.0,
    }))
}

fn run_kernel_decay(c: &ExperimentConfig, gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let delta = c.delta.resolve(c.p, c.n)?;
    let surface = ConvexSurface::new(gauge)?;
    let mut rows = Vec::new();
    let mut per_k = Vec::new();
    for k in c.k_min..=c.k_max {
        let part = AngularPartition::build(&surface, k)?;
        let piece = PieceMultiplier::new(RadialPiece { k, delta }, &part, 0)?;
        let grid = c.kernel_grid(k)?;
        let bundle = KernelBundle::synthesize(&piece, gauge, &grid)?;
        let decay: Vec<_> = (1..=3).map(|o| decay_check(&bundle, o)).collect::<Result<_>>()?;
        let widths = half_max_widths(&bundle);
        let envelope = if delta > critical_index(c.p, c.n)?.delta { Some(envelope_check(&bundle, c.p)?) } else { None };
        rows.push(format!(
            "{k},{:e},{:e},{:e},{}",
            bundle.kernel.max_abs(),
            bundle.predicted_scale,
            decay[1].normalized_sup,
            widths.iter().map(|w| format!("{w:e}")).collect::<Vec<_>>().join(",")
        ));
        if c.write_fields && k == c.k_min {
            art.add(format!("fields/kernel_k{k}.bin"), encode_field(&bundle.kernel));
        }
        per_k.push(json!({
            "k": k,
            "grid": grid,
            "sup": bundle.kernel.max_abs(),
            "decay": decay,
            "half_max_widths": widths,
            "envelope": envelope,
        }));
    }
    let widths_header: Vec<String> = (0..c.n).map(|j| format!("width_e{j}")).collect();
    art.add_csv("kernel_decay", &format!("k,sup,predicted_scale,c2,{}", widths_header.join(",")), rows);
    let xs: Vec<f64> = (c.k_min..=c.k_max).map(|k| k as f64).collect();
    let ys: Vec<f64> = per_k.iter().map(|v| v["sup"].as_f64().unwrap_or(0.0)).collect();
    Ok(json!({
        "delta": delta,
        "pieces": per_k,
        "sup_slope": fit_log2_vs(&xs, &ys),
        "sup_slope_predicted": -(delta + 1.0 + (c.n as f64 - 1.0) / 2.0),
    }))
}

fn run_omega(c: &ExperimentConfig, gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let surface = ConvexSurface::new(gauge)?;
    let grid = RGrid::default();
    let profile = surface.omega_uniform_planar(c.directions, &grid)?;
    let coarse = surface.omega_uniform_planar(c.directions / 2, &grid)?;
    art.add("curves/omega.csv", profile.to_csv().into_bytes());
    let integrals: Vec<Value> = [0.6, 0.9, c.p]
        .iter()
        .map(|&p| {
            let fine = profile.integral_power(p)?;
            let half = coarse.integral_power(p)?;
            Ok(json!({ "p": p, "integral": fine, "drift_vs_half_directions": (fine / half - 1.0).abs() }))
        })
        .collect::<Result<_>>()?;
    Ok(json!({
        "directions": c.directions,
        "max": profile.values.iter().cloned().fold(0.0, f64::max),
        "min": profile.values.iter().cloned().fold(f64::INFINITY, f64::min),
        "degenerate_normals": surface.degenerate_normals().len(),
        "max_refinement_delta": profile.max_refinement_delta(),
        "integrals": integrals,
    }))
}

fn atom_setup(c: &ExperimentConfig, gauge: &Gauge, delta: f64, q: f64) -> AtomSetup {
    AtomSetup {
        gauge: gauge.clone(),
        p: c.p,
        delta,
        mu: moment_order(c.n, q),
        n_side: c.n_side,
        radii: c.radii,
        per_octave: c.t_per_octave,
    }
}

fn run_atoms(c: &ExperimentConfig, _gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let mu = moment_order(c.n, c.p);
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for &s in &c.scales {
        let grid = GridSpec::new(c.n, c.n_side, c.radii * s)?;
        for seed in c.seed_list() {
            let spec = seeded_atom_spec(c.n, c.p, mu, s, seed);
            let atom = make_atom(&grid, &spec)?;
            let cert = atom.certificate;
            rows.push(format!("{s},{seed},{:e},{:e},{:e}", cert.sup, cert.sup_bound, cert.moment_residual));
            if c.write_fields && out.is_empty() {
                art.add("fields/atom_0.bin", encode_field(&atom.sample(&grid)));
            }
            out.push(atom);
        }
    }
    art.add_csv("atoms", "scale,seed,sup,sup_bound,moment_residual", rows);
    Ok(json!({ "mu": mu, "atoms": out }))
}

fn run_weak_type(c: &ExperimentConfig, gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let delta = c.delta.resolve(c.p, c.n)?;
    let setup = atom_setup(c, gauge, delta, c.p);
    let l1_grid = GridSpec::new(c.n, c.n_side.max(256), 64.0)?;
    let l1 = kernel_l1_norm(gauge, delta, &l1_grid)?;
    let omega = if c.n == 2 {
        let surface = ConvexSurface::new(gauge)?;
        Some(surface.omega_uniform_planar(c.directions, &RGrid::default())?)
    } else {
        None
    };
    let seeds = c.seed_list();
    let ens = weak_type_ensemble(&setup, omega.as_ref(), l1, &c.scales, &seeds)?;
    let drift = weak_type_drift(&setup, l1, &seeded_atom_spec(c.n, c.p, setup.mu, c.scales[0], seeds[0]))?;
    art.add_csv(
        "weak_type",
        "scale,seed,quasinorm_p,inside_p,outside_p,envelope_constant",
        ens.atoms.iter().map(|a| {
            format!(
                "{},{},{:e},{:e},{:e},{}",
                a.scale,
                a.seed,
                a.quasinorm_p,
                a.inside_p,
                a.outside_p,
                a.envelope_constant.map(|v| format!("{v:e}")).unwrap_or_default()
            )
        }),
    );
    // distribution curve of the worst atom
    let worst = ens.atoms.iter().max_by(|a, b| a.quasinorm_p.total_cmp(&b.quasinorm_p)).expect("nonempty ensemble");
    let spec = seeded_atom_spec(c.n, c.p, setup.mu, worst.scale, worst.seed);
    let (_, field) = crate::riesz::weak_type_atom(&setup, None, l1, &spec)?;
    let report = crate::hardy::weak_quasinorm(&field.values, c.p, field.grid.cell_volume());
    art.add_csv("distribution", "lambda,measure", report.distribution.iter().map(|(l, m)| format!("{l:e},{m:e}")));
    if c.write_fields {
        art.add("fields/maximal_worst.bin", encode_field(&field.to_field()));
    }
    Ok(json!({ "delta": delta, "ensemble": ens, "refinement": drift }))
}

fn run_lp_bound(c: &ExperimentConfig, gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let delta = c.delta.resolve(c.p, c.n)?;
    let p_aux = check_supercritical(c.p, c.n, delta)?;
    let setup = atom_setup(c, gauge, delta, p_aux);
    let seeds = c.seed_list();
    let ens = lp_bound_ensemble(&setup, &c.scales, &seeds, seeds.len().min(4))?;
    art.add_csv(
        "lp_bound",
        "scale,seed,norm_p,inside_p,outside_p,weak_p",
        ens.atoms.iter().map(|a| {
            format!("{},{},{:e},{:e},{:e},{:e}", a.scale, a.seed, a.norm_p, a.inside_p, a.outside_p, a.weak_p)
        }),
    );
    let pieces = if c.n >= 2 {
        let surface = ConvexSurface::new(gauge)?;
        let spec = seeded_atom_spec(c.n, c.p, setup.mu, 1.0, seeds[0]);
        let ks: Vec<u32> = (c.k_min..=c.k_max).collect();
        let r = piece_decay(&setup, &surface, &spec, &ks)?;
        art.add_csv(
            "piece_mass",
            "k,windows,outside_p,envelope_constant",
            r.masses.iter().map(|m| format!("{},{},{:e},{:e}", m.k, m.windows, m.outside_p, m.envelope_constant)),
        );
        Some(r)
    } else {
        None
    };
    Ok(json!({ "delta": delta, "p_aux": p_aux, "ensemble": ens, "pieces": pieces }))
}

fn run_lemma_checks(c: &ExperimentConfig, gauge: &Gauge, art: &mut Artifacts) -> Result<Value> {
    let surface = ConvexSurface::new(gauge)?;
    let type_k = surface.surface_type(32)?;
    if type_k > 32 {
        return Err(Error::Precondition("surface contact order exceeds 32".into()));
    }
    let doubling = doubling_check(&surface, c.samples, type_k, c.seed)?;
    let comparability = cap_comparability_check(&surface, c.samples, None, c.seed)?;
    let mut angle = Vec::new();
    for (b, m) in [(1.0, 2u32), (0.5, 4), (2.0, 6)] {
        for d in [1e-3, 1e-2, 1e-1] {
            if let Ok(r) = angle_height_check(b, m, 0.3, d) {
                angle.push(r);
            }
        }
    }
    let pairs = sample_pairs(c.n, c.samples.min(500), (2.5, 50.0), None, c.seed);
    let tangent = tangent_distance_check(&surface, &pairs)?;
    let profile = surface.omega_uniform_planar(c.directions, &RGrid::default())?;
    let shift = omega_shift_check(&profile, &pairs)?;
    art.add_csv(
        "angle_height",
        "b,m,theta0,t0,height,predicted,ratio",
        angle.iter().map(|r| format!("{},{},{},{:e},{:e},{:e},{:e}", r.b, r.m, r.theta0, r.t0, r.height, r.predicted, r.ratio)),
    );
    let mut stacks = Vec::new();
    for p in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
        let cells = 4096;
        let fields: Vec<Vec<f64>> = (0..8)
            .map(|k| {
                let mut v = vec![0.0; cells];
                for x in &mut v[k * 16..k * 16 + 64] {
                    *x = 1.0;
                }
                v
            })
            .collect();
        let coeffs: Vec<f64> = (0..8).map(|k| 2f64.powi(-k)).collect();
        stacks.push(summing_check(&fields, &coeffs, p, 1.0 / 64.0)?);
    }
    Ok(json!({
        "surface_type": type_k,
        "doubling": doubling,
        "comparability": comparability,
        "angle_height": angle,
        "tangent_distance": tangent,
        "omega_shift": shift,
        "summing": stacks,
        "summing_constant_half": summing_constant(0.5),
    }))
}
