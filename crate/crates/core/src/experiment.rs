//! Experiment orchestration: a JSON configuration, a deterministic parallel
//! run, CSV data plus a JSON report on disk, and merging of split runs.
//!
//! A run produces a [`Payload`] of raw per-trial data; every table, fit and
//! verdict in the [`RunReport`] is a pure function of `(config, payload)`.
//! Merging split runs therefore reproduces the monolithic report exactly.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuations::{
    critical_radius, fit_exponent, max_transversal_deviation, median, median_transversal_deviation,
    outside_cylinder_count, slab_distances, ExponentFit,
};
use crate::geodesic::{brute_force_passage_time, shortest_path, shortest_path_with, SearchOptions};
use crate::influence::{
    estimate_influence_range, influence_set, lp_sum, envelope_ratio, smooth_envelope_with_floor,
    trial_environment, trivial_count_bound_check_on, InfluenceField, DEFAULT_ENVELOPE_FLOOR,
};
use crate::lattice::{Point, MAX_DIM};
use crate::perturbation::{
    dyadic_level_search, run_couplings, tail_transfer_table, CouplingBounds, CouplingRecord, TailTransferTable,
    TauField,
};
use crate::rng::{mix64, stream_rng, trial_seed};
use crate::weights::{mw_event_battery, nice_set, verify_mw_inequality, GaussianRepresentation, WeightDistribution};

/// Environment variable consulted when no worker count is given explicitly.
pub const WORKERS_ENV: &str = "FPP_LAB_WORKERS";

/// Salt separating the pilot run that shapes `tau` from the main trials.
const PILOT_SALT: u64 = 0x7069_6c6f_7421;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Influence,
    Fluctuation,
    Coupling,
    Ratio,
    Validate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Influence => "influence",
            ExperimentKind::Fluctuation => "fluctuation",
            ExperimentKind::Coupling => "coupling",
            ExperimentKind::Ratio => "ratio",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "influence" => Ok(ExperimentKind::Influence),
            "fluctuation" => Ok(ExperimentKind::Fluctuation),
            "coupling" => Ok(ExperimentKind::Coupling),
            "ratio" => Ok(ExperimentKind::Ratio),
            "validate" => Ok(ExperimentKind::Validate),
            _ => Err(Error::config("kind", format!("unknown experiment kind `{s}`"))),
        }
    }
}

/// How the perturbation profile of a coupling run is built from a pilot
/// influence field over `pilot_trials` environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauSpec {
    /// `q / |q|` for the envelope generated by `A_epsilon`.
    Envelope { epsilon: f64, pilot_trials: u64 },
    /// `|A|^{-1/2} 1_A` with `A = A_epsilon`.
    Indicator { epsilon: f64, pilot_trials: u64 },
}

impl Default for TauSpec {
    fn default() -> Self {
        TauSpec::Envelope {
            epsilon: 0.05,
            pilot_trials: 1000,
        }
    }
}

/// Sizes of the property battery run by `kind = validate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSpec {
    pub oracle_seeds: u64,
    pub gplus_samples: u64,
    pub gplus_deltas: Vec<f64>,
    pub mw_samples: u64,
    pub mw_p_grid: Vec<f64>,
    pub mw_n_grid: Vec<usize>,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec {
            oracle_seeds: 20,
            gplus_samples: 100_000,
            gplus_deltas: vec![0.01, 0.05, 0.1],
            mw_samples: 100_000,
            mw_p_grid: vec![1.5, 2.0, 3.0],
            mw_n_grid: vec![1, 2, 5],
        }
    }
}

fn default_d() -> usize {
    2
}
fn default_epsilons() -> Vec<f64> {
    vec![0.3, 0.2, 0.1, 0.05, 0.02]
}
fn default_ells() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_radii() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0]
}
fn default_delta() -> f64 {
    0.05
}
fn default_floor() -> f64 {
    DEFAULT_ENVELOPE_FLOOR
}
fn default_out() -> PathBuf {
    PathBuf::from("fpp-out")
}

/// One experiment. `ell_grid` holds fractions of `|v|`; `r_grid` holds
/// multiples of `n^{1/(d+1)}`. Trials cover indices
/// `[first_trial, first_trial + trials)` relative to `master_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub v: Option<Vec<i64>>,
    #[serde(default)]
    pub n_grid: Vec<i64>,
    #[serde(default)]
    pub distribution: WeightDistribution,
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub first_trial: u64,
    #[serde(default = "default_epsilons")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_ells")]
    pub ell_grid: Vec<f64>,
    #[serde(default = "default_radii")]
    pub r_grid: Vec<f64>,
    #[serde(default)]
    pub h_grid: Vec<Vec<i64>>,
    #[serde(default)]
    pub tau: TauSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_floor")]
    pub envelope_floor: f64,
    #[serde(default)]
    pub validate: ValidateSpec,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// A config of the given kind with every optional field at its default.
    pub fn new(kind: ExperimentKind, trials: u64) -> Self {
        ExperimentConfig {
            kind,
            d: default_d(),
            v: None,
            n_grid: Vec::new(),
            distribution: WeightDistribution::default(),
            trials,
            master_seed: 0,
            first_trial: 0,
            epsilon_grid: default_epsilons(),
            ell_grid: default_ells(),
            r_grid: default_radii(),
            h_grid: Vec::new(),
            tau: TauSpec::default(),
            delta: default_delta(),
            envelope_floor: default_floor(),
            validate: ValidateSpec::default(),
            output_dir: default_out(),
        }
    }

    /// Parses and validates JSON; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |p: &str, m: String| Err(Error::config(p, m));
        if self.d < 2 || self.d > MAX_DIM {
            return bad("d", format!("dimension must lie in [2, {MAX_DIM}], got {}", self.d));
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.first_trial.checked_add(self.trials).is_none() {
            return bad("first_trial", "trial range overflows".into());
        }
        if let Err(e) = self.distribution.validate() {
            return bad("distribution", e.to_string());
        }
        let needs_v = matches!(self.kind, ExperimentKind::Influence | ExperimentKind::Coupling);
        let needs_n = matches!(self.kind, ExperimentKind::Fluctuation | ExperimentKind::Ratio);
        match &self.v {
            Some(v) => {
                if v.len() != self.d {
                    return bad("v", format!("expected {} coordinates, got {}", self.d, v.len()));
                }
                if v.iter().all(|&x| x == 0) {
                    return bad("v", "must be non-zero".into());
                }
                if v.iter().any(|x| x.unsigned_abs() > 1 << 20) {
                    return bad("v", "coordinates exceed the simulation box".into());
                }
            }
            None if needs_v => return bad("v", "required for this kind".into()),
            None => {}
        }
        if needs_n && self.n_grid.is_empty() {
            return bad("n_grid", "must be non-empty".into());
        }
        for (i, &n) in self.n_grid.iter().enumerate() {
            if !(3..=1 << 20).contains(&n) {
                return bad(&format!("n_grid[{i}]"), format!("must lie in [3, 2^20], got {n}"));
            }
        }
        if self.n_grid.iter().collect::<BTreeSet<_>>().len() != self.n_grid.len() {
            return bad("n_grid", "entries must be distinct".into());
        }
        let check_grid = |name: &str, g: &[f64], hi: f64| -> Result<()> {
            if g.is_empty() {
                return bad(name, "must be non-empty".into());
            }
            for (i, &x) in g.iter().enumerate() {
                if !(x > 0.0 && x <= hi) {
                    return bad(&format!("{name}[{i}]"), format!("must lie in (0, {hi}], got {x}"));
                }
            }
            Ok(())
        };
        check_grid("epsilon_grid", &self.epsilon_grid, 1.0)?;
        check_grid("ell_grid", &self.ell_grid, 1.0)?;
        check_grid("r_grid", &self.r_grid, f64::MAX)?;
        if self.kind == ExperimentKind::Coupling && self.h_grid.is_empty() {
            return bad("h_grid", "required for coupling runs".into());
        }
        for (i, h) in self.h_grid.iter().enumerate() {
            if h.len() != self.d {
                return bad(&format!("h_grid[{i}]"), format!("expected {} coordinates", self.d));
            }
        }
        let (eps, pilot) = match self.tau {
            TauSpec::Envelope { epsilon, pilot_trials } | TauSpec::Indicator { epsilon, pilot_trials } => {
                (epsilon, pilot_trials)
            }
        };
        if !(eps > 0.0 && eps <= 1.0) {
            return bad("tau.epsilon", format!("must lie in (0, 1], got {eps}"));
        }
        if pilot == 0 {
            return bad("tau.pilot_trials", "must be at least 1".into());
        }
        if !(self.delta > 0.0) {
            return bad("delta", "must be positive".into());
        }
        if !(self.envelope_floor > 0.0 && self.envelope_floor < 1.0) {
            return bad("envelope_floor", "must lie in (0, 1)".into());
        }
        let vs = &self.validate;
        if vs.oracle_seeds == 0 || vs.gplus_samples == 0 || vs.mw_samples == 0 {
            return bad("validate", "sample counts must be positive".into());
        }
        check_grid("validate.gplus_deltas", &vs.gplus_deltas, f64::MAX)?;
        if vs.mw_p_grid.is_empty() || vs.mw_p_grid.iter().any(|&p| !(p > 1.0)) {
            return bad("validate.mw_p_grid", "entries must exceed 1".into());
        }
        if vs.mw_n_grid.is_empty() || vs.mw_n_grid.contains(&0) {
            return bad("validate.mw_n_grid", "entries must be positive".into());
        }
        Ok(())
    }

    pub fn target(&self) -> Result<Point> {
        match &self.v {
            Some(v) => Point::new(v),
            None => Err(Error::config("v", "required for this kind")),
        }
    }

    fn axis_target(&self, n: i64) -> Result<Point> {
        Point::on_axis(self.d, n)
    }

    fn h_points(&self) -> Result<Vec<Point>> {
        self.h_grid.iter().map(|h| Point::new(h)).collect()
    }

    fn trial_range(&self) -> std::ops::Range<u64> {
        self.first_trial..self.first_trial + self.trials
    }

    /// True when `self` and `other` differ at most in their trial range.
    fn same_experiment(&self, other: &ExperimentConfig) -> bool {
        let mut a = self.clone();
        a.first_trial = other.first_trial;
        a.trials = other.trials;
        a.output_dir.clone_from(&other.output_dir);
        &a == other
    }
}

/// Worker count: an explicit value, else [`WORKERS_ENV`], else the available
/// parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(w) = explicit {
        return if w == 0 {
            Err(Error::config("workers", "must be at least 1"))
        } else {
            Ok(w)
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Per-trial data of a fluctuation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationTrial {
    pub trial: u64,
    pub seed: u64,
    pub n: i64,
    pub max_dev: f64,
    pub median_dev: f64,
    /// Outside counts, row-major over `(ell_grid, r_grid)`.
    pub counts: Vec<usize>,
    /// Transversal distances of slab vertices at `ell = n`.
    pub distances: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleOutcome {
    pub dim: usize,
    pub side: i64,
    pub seeds: u64,
    pub pairs: u64,
    pub mismatches: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainRow {
    pub delta: f64,
    pub checked: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GplusOutcome {
    pub samples: u64,
    pub bound_violations: u64,
    pub gains: Vec<GainRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MwRow {
    pub event: String,
    pub p: f64,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin_sigmas: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidateOutcome {
    pub oracle: Vec<OracleOutcome>,
    pub gplus: GplusOutcome,
    pub mw: Vec<MwRow>,
}

/// Raw data of a run, in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Influence(InfluenceField),
    Fluctuation(Vec<FluctuationTrial>),
    Coupling { bounds: CouplingBounds, records: Vec<CouplingRecord> },
    Ratio(Vec<InfluenceField>),
    Validate(ValidateOutcome),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub fit: ExponentFit,
}

/// One checked property. Deterministic verdicts must hold on every sample;
/// statistical ones are reported without affecting the exit status.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub deterministic: bool,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, deterministic: bool, passed: bool, detail: String) -> Self {
        Verdict {
            name: name.into(),
            deterministic,
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetRow {
    pub epsilon: f64,
    pub lower: usize,
    pub point: usize,
    pub upper: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceTables {
    pub total_influence: f64,
    pub target_l1: i64,
    pub edges_visited: usize,
    pub sets: Vec<SetRow>,
    /// `(beta, sum_e p_e^beta)`.
    pub lp_sums: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctuationRow {
    pub n: i64,
    pub trials: u64,
    pub median_max_dev: f64,
    pub median_median_dev: f64,
    /// `(ell, r, mean outside count)`.
    pub mean_counts: Vec<(f64, f64, f64)>,
    /// Largest `c` with mean outside count at `(n, c n^{1/(d+1)})` at least `n/2`.
    pub c_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub bounds: CouplingBounds,
    pub records: usize,
    /// `(invariant, violations)`.
    pub violations: Vec<(String, u64)>,
    pub mu_hat: f64,
    pub dyadic_level: Option<i32>,
    pub tail: Option<TailTransferTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: i64,
    pub trials: u64,
    pub generators: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tables {
    Influence(InfluenceTables),
    Fluctuation(Vec<FluctuationRow>),
    Coupling(CouplingSummary),
    Ratio { rows: Vec<RatioRow>, max_over_min: f64 },
    Validate(ValidateOutcome),
}

/// The result of [`run`]. Everything except `payload` and `wall_clock_secs`
/// is written to `report.json`; timing goes to `timing.json` so the report is
/// byte-identical across repeated runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub trials: u64,
    pub tables: Tables,
    pub fits: Vec<NamedFit>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip)]
    pub payload: Payload,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// True when some deterministic invariant failed.
    pub fn invariant_failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.deterministic && !v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&NamedFit> {
        self.fits.iter().find(|f| f.name == name)
    }
}

/// Runs the experiment on a pool of `workers` threads (see
/// [`resolve_workers`]) without touching the filesystem.
pub fn execute(config: &ExperimentConfig, workers: usize) -> Result<RunReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let payload = pool.install(|| collect_payload(config))?;
    let mut report = summarize(config.clone(), payload)?;
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// [`execute`] followed by [`write_outputs`] into `config.output_dir`.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<RunReport> {
    let report = execute(config, workers)?;
    write_outputs(&report, &config.output_dir)?;
    Ok(report)
}

fn collect_payload(cfg: &ExperimentConfig) -> Result<Payload> {
    let dist = cfg.distribution;
    match cfg.kind {
        ExperimentKind::Influence => {
            let v = cfg.target()?;
            estimate_influence_range(&dist, &v, cfg.master_seed, cfg.first_trial, cfg.trials).map(Payload::Influence)
        }
        ExperimentKind::Ratio => cfg
            .n_grid
            .iter()
            .map(|&n| {
                let v = cfg.axis_target(n)?;
                estimate_influence_range(&dist, &v, cfg.master_seed, cfg.first_trial, cfg.trials)
            })
            .collect::<Result<Vec<_>>>()
            .map(Payload::Ratio),
        ExperimentKind::Fluctuation => fluctuation_trials(cfg).map(Payload::Fluctuation),
        ExperimentKind::Coupling => {
            let rep = GaussianRepresentation::new(dist);
            let v = cfg.target()?;
            let tau = build_tau(cfg, &v)?;
            let records = run_couplings(&rep, &v, &cfg.h_points()?, &tau, cfg.master_seed, cfg.trial_range(), cfg.delta)?;
            let bounds = CouplingBounds {
                c0: rep.c0(),
                b: dist.b,
                delta: cfg.delta,
            };
            Ok(Payload::Coupling { bounds, records })
        }
        ExperimentKind::Validate => validate_battery(cfg).map(Payload::Validate),
    }
}

/// The perturbation profile of a coupling run, from its pilot field.
pub fn build_tau(cfg: &ExperimentConfig, v: &Point) -> Result<TauField> {
    let (eps, pilot) = match cfg.tau {
        TauSpec::Envelope { epsilon, pilot_trials } | TauSpec::Indicator { epsilon, pilot_trials } => {
            (epsilon, pilot_trials)
        }
    };
    let field = estimate_influence_range(&cfg.distribution, v, mix64(cfg.master_seed ^ PILOT_SALT), 0, pilot)?;
    let set = influence_set(&field, eps)?.point.edges;
    if set.is_empty() {
        return Err(Error::param(format!("pilot influence set at epsilon {eps} is empty")));
    }
    match cfg.tau {
        TauSpec::Indicator { .. } => TauField::indicator(&set),
        TauSpec::Envelope { .. } => {
            let q = smooth_envelope_with_floor(&set, v.l2_norm().max(3.0), cfg.envelope_floor)?;
            TauField::normalized(&q)
        }
    }
}

fn fluctuation_trials(cfg: &ExperimentConfig) -> Result<Vec<FluctuationTrial>> {
    let origin = Point::origin(cfg.d)?;
    let jobs: Vec<(i64, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.trial_range().map(move |i| (n, i)))
        .collect();
    let expo = 1.0 / (cfg.d as f64 + 1.0);
    jobs.into_par_iter()
        .map(|(n, i)| {
            let v = cfg.axis_target(n)?;
            let env = trial_environment(&cfg.distribution, cfg.master_seed, i);
            let g = shortest_path(&env, &origin, &v)?;
            let nf = n as f64;
            let mut counts = Vec::with_capacity(cfg.ell_grid.len() * cfg.r_grid.len());
            for &lf in &cfg.ell_grid {
                for &c in &cfg.r_grid {
                    counts.push(outside_cylinder_count(&g, &v, lf * nf, c * nf.powf(expo))?);
                }
            }
            Ok(FluctuationTrial {
                trial: i,
                seed: trial_seed(cfg.master_seed, i),
                n,
                max_dev: max_transversal_deviation(&g, &v)?,
                median_dev: median_transversal_deviation(&g, &v)?,
                counts,
                distances: slab_distances(&g, &v, nf)?,
            })
        })
        .collect()
}

/// Oracle check: every ordered pair of distinct vertices of the box
/// `[0, side)^dim`, Dijkstra clipped to the box against the brute-force
/// optimum over the same vertex set, compared for exact equality.
pub fn oracle_equivalence(
    dist: &WeightDistribution,
    dim: usize,
    side: i64,
    seeds: std::ops::Range<u64>,
) -> Result<OracleOutcome> {
    let lo = vec![0i64; dim];
    let hi = vec![side - 1; dim];
    let mut pts = Vec::new();
    let total = (side as usize).pow(dim as u32);
    for k in 0..total {
        let mut c = vec![0i64; dim];
        let mut r = k as i64;
        for x in c.iter_mut().rev() {
            *x = r % side;
            r /= side;
        }
        pts.push(Point::new(&c)?);
    }
    let opts = SearchOptions {
        clip: Some((lo, hi)),
        ..SearchOptions::default()
    };
    let nseeds = seeds.end.saturating_sub(seeds.start);
    let per_seed: Vec<(u64, u64)> = seeds
        .into_par_iter()
        .map(|s| {
            let env = crate::weights::EdgeEnvironment::new(*dist, s);
            let (mut pairs, mut bad) = (0, 0);
            for u in &pts {
                for v in &pts {
                    if u == v {
                        continue;
                    }
                    let fast = shortest_path_with(&env, u, v, &opts)?.time;
                    let (slow, _) = brute_force_passage_time(&env, u, v, &pts)?;
                    pairs += 1;
                    if fast != slow {
                        bad += 1;
                    }
                }
            }
            Ok((pairs, bad))
        })
        .collect::<Result<_>>()?;
    Ok(OracleOutcome {
        dim,
        side,
        seeds: nseeds,
        pairs: per_seed.iter().map(|p| p.0).sum(),
        mismatches: per_seed.iter().map(|p| p.1).sum(),
    })
}

/// Samples `(w, tau)` uniformly on `[a, b] x [0, 1]` and counts violations
/// of `w <= g(w) <= min(b, w + C0 tau)` and, for `w` in `B_delta`, of
/// `g(w) >= w + delta tau`.
pub fn gplus_contracts(rep: &GaussianRepresentation, samples: u64, deltas: &[f64], seed: u64) -> Result<GplusOutcome> {
    let dist = *rep.distribution();
    let nice = deltas.iter().map(|&d| nice_set(rep, d)).collect::<Result<Vec<_>>>()?;
    let mut rng = stream_rng(seed, 0);
    let mut bound_violations = 0;
    let mut gains: Vec<GainRow> = deltas
        .iter()
        .map(|&delta| GainRow {
            delta,
            checked: 0,
            violations: 0,
        })
        .collect();
    for _ in 0..samples {
        let w = dist.a + rng.random::<f64>() * (dist.b - dist.a);
        let tau: f64 = rng.random();
        let g = rep.map(tau)?.apply(w)?;
        if !(w <= g && g <= dist.b.min(w + rep.c0() * tau)) {
            bound_violations += 1;
        }
        for (row, b) in gains.iter_mut().zip(&nice) {
            if b.contains(w) {
                row.checked += 1;
                if g < w + row.delta * tau {
                    row.violations += 1;
                }
            }
        }
    }
    Ok(GplusOutcome {
        samples,
        bound_violations,
        gains,
    })
}

/// The probability-transfer battery: every event of [`mw_event_battery`]
/// for every `(p, n)`, with `tau_i = n^{-1/2}` (unit norm).
pub fn mw_battery(rep: &GaussianRepresentation, ps: &[f64], ns: &[usize], samples: u64, seed: u64) -> Result<Vec<MwRow>> {
    let mut rows = Vec::new();
    let mut k = 0u64;
    for &n in ns {
        let tau = vec![1.0 / (n as f64).sqrt(); n];
        for ev in mw_event_battery(rep.distribution(), n) {
            for &p in ps {
                let est = verify_mw_inequality(rep, &tau, &ev.predicate, p, samples, mix64(seed ^ k))?;
                k += 1;
                rows.push(MwRow {
                    event: ev.name.clone(),
                    p,
                    n,
                    lhs: est.lhs,
                    rhs: est.rhs,
                    margin_sigmas: est.margin_sigmas,
                    pass: est.holds_within(3.0),
                });
            }
        }
    }
    Ok(rows)
}

fn validate_battery(cfg: &ExperimentConfig) -> Result<ValidateOutcome> {
    let vs = &cfg.validate;
    let rep = GaussianRepresentation::new(cfg.distribution);
    let seeds = cfg.master_seed..cfg.master_seed.saturating_add(vs.oracle_seeds);
    let oracle = vec![
        oracle_equivalence(&cfg.distribution, 2, 4, seeds.clone())?,
        oracle_equivalence(&cfg.distribution, 3, 3, seeds)?,
    ];
    let gplus = gplus_contracts(&rep, vs.gplus_samples, &vs.gplus_deltas, cfg.master_seed)?;
    let mw = mw_battery(&rep, &vs.mw_p_grid, &vs.mw_n_grid, vs.mw_samples, cfg.master_seed)?;
    Ok(ValidateOutcome { oracle, gplus, mw })
}

fn named_fit(name: &str, pairs: &[(f64, f64)]) -> Result<NamedFit> {
    let fit = fit_exponent(pairs)?;
    Ok(NamedFit {
        name: name.into(),
        slope: fit.slope,
        slope_ci: fit.slope_ci(),
        fit,
    })
}

/// Builds tables, fits and verdicts from raw data.
pub fn summarize(config: ExperimentConfig, payload: Payload) -> Result<RunReport> {
    let mut verdicts = Vec::new();
    let tables = match &payload {
        Payload::Influence(field) => {
            let v = config.target()?;
            let total = field.total_influence();
            let l1 = v.l1_norm();
            let ratio = config.distribution.b / config.distribution.a;
            let mut sets = Vec::new();
            for &eps in &config.epsilon_grid {
                let s = influence_set(field, eps)?;
                sets.push(SetRow {
                    epsilon: eps,
                    lower: s.lower.len(),
                    point: s.point.len(),
                    upper: s.upper.len(),
                });
            }
            let slack = 1e-9 * total.max(1.0);
            verdicts.push(Verdict::new(
                "total influence within [|v|_1, (b/a)|v|_1]",
                true,
                total >= l1 as f64 - slack && total <= ratio * l1 as f64 + slack,
                format!("sum p = {total:.6}, |v|_1 = {l1}, b/a = {ratio}"),
            ));
            verdicts.push(Verdict::new(
                "|A_eps| <= sum p / eps",
                true,
                trivial_count_bound_check_on(field, &config.epsilon_grid),
                format!("checked on {} thresholds", config.epsilon_grid.len()),
            ));
            let lp_sums = [1.0, 1.5, 2.0]
                .iter()
                .map(|&b| Ok((b, lp_sum(field, b)?)))
                .collect::<Result<Vec<_>>>()?;
            Tables::Influence(InfluenceTables {
                total_influence: total,
                target_l1: l1,
                edges_visited: field.hits.len(),
                sets,
                lp_sums,
            })
        }
        Payload::Fluctuation(trials) => {
            let expo = 1.0 / (config.d as f64 + 1.0);
            let nr = config.r_grid.len();
            let mut monotone = true;
            let r_order = sorted_indices(&config.r_grid);
            let l_order = sorted_indices(&config.ell_grid);
            for t in trials {
                for &li in &l_order {
                    for w in r_order.windows(2) {
                        monotone &= t.counts[li * nr + w[0]] >= t.counts[li * nr + w[1]];
                    }
                }
                for &ri in &r_order {
                    for w in l_order.windows(2) {
                        monotone &= t.counts[w[0] * nr + ri] <= t.counts[w[1] * nr + ri];
                    }
                }
            }
            verdicts.push(Verdict::new(
                "outside count monotone in r and ell",
                true,
                monotone,
                format!("{} trials", trials.len()),
            ));
            let mut rows = Vec::new();
            for &n in &config.n_grid {
                let mine: Vec<&FluctuationTrial> = trials.iter().filter(|t| t.n == n).collect();
                let nf = n as f64;
                let k = mine.len() as f64;
                let mut mean_counts = Vec::new();
                for (li, &lf) in config.ell_grid.iter().enumerate() {
                    for (ri, &c) in config.r_grid.iter().enumerate() {
                        let s: usize = mine.iter().map(|t| t.counts[li * nr + ri]).sum();
                        mean_counts.push((lf * nf, c * nf.powf(expo), s as f64 / k));
                    }
                }
                let dists: Vec<Vec<f64>> = mine.iter().map(|t| t.distances.clone()).collect();
                rows.push(FluctuationRow {
                    n,
                    trials: mine.len() as u64,
                    median_max_dev: median(&mine.iter().map(|t| t.max_dev).collect::<Vec<_>>()),
                    median_median_dev: median(&mine.iter().map(|t| t.median_dev).collect::<Vec<_>>()),
                    mean_counts,
                    c_star: critical_radius(&dists, nf / 2.0) / nf.powf(expo),
                });
            }
            let positive = rows.iter().all(|r| r.c_star > 0.0);
            let cs: Vec<f64> = rows.iter().map(|r| r.c_star).collect();
            let spread = cs.iter().cloned().fold(0.0, f64::max) / cs.iter().cloned().fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict::new(
                "critical cylinder constant positive",
                false,
                positive,
                format!("c* = {cs:?}, max/min = {spread:.3}"),
            ));
            Tables::Fluctuation(rows)
        }
        Payload::Coupling { bounds, records } => {
            let names = [
                "t0_plus >= t0",
                "th_plus >= th",
                "|t0 - th| <= 2 b |h|_1",
                "th_plus <= th + c0 f(gamma_h)",
                "th_plus <= T+(gamma_h)",
                "t0_plus <= T+(gamma_0)",
                "T+(gamma_0) <= t0 + c0 f(gamma_0)",
                "t0_plus >= t0 + delta * nice_gain",
            ];
            let mut counts = vec![0u64; names.len()];
            for r in records {
                for v in r.violations(bounds) {
                    if let Some(k) = names.iter().position(|n| *n == v) {
                        counts[k] += 1;
                    }
                }
            }
            for (name, &c) in names.iter().zip(&counts) {
                verdicts.push(Verdict::new(
                    name,
                    true,
                    c == 0,
                    format!("{c} violations in {} records", records.len()),
                ));
            }
            let hs = config.h_points()?;
            let per_h: Vec<Vec<&CouplingRecord>> = hs
                .iter()
                .map(|h| records.iter().filter(|r| &r.h == h).collect())
                .collect();
            let f0: Vec<f64> = per_h.first().map(|g| g.iter().map(|r| r.f_gamma0).collect()).unwrap_or_default();
            let mu_hat = if f0.is_empty() { 0.0 } else { f0.iter().sum::<f64>() / f0.len() as f64 };
            let n = config.target()?.l2_norm();
            let (dyadic_level, tail) = if mu_hat > 0.0 {
                let k_max = n.ln().ceil() as i32;
                let fh: Vec<(Point, Vec<f64>)> = hs
                    .iter()
                    .zip(&per_h)
                    .map(|(h, g)| (h.clone(), g.iter().map(|r| r.f_gammah).collect()))
                    .collect();
                (dyadic_level_search(&f0, mu_hat, k_max)?, Some(tail_transfer_table(mu_hat, &f0, &fh)?))
            } else {
                (None, None)
            };
            verdicts.push(Verdict::new(
                "dyadic level exists",
                false,
                dyadic_level.is_some(),
                format!("mu_hat = {mu_hat:.6}, k = {dyadic_level:?}"),
            ));
            if let Some(t) = &tail {
                verdicts.push(Verdict::new(
                    "tail transfer passes for some c1",
                    false,
                    t.best_c1.is_some(),
                    format!("best c1 = {:?}, {} borderline cells", t.best_c1, t.borderline.len()),
                ));
            }
            Tables::Coupling(CouplingSummary {
                bounds: *bounds,
                records: records.len(),
                violations: names.iter().zip(counts).map(|(n, c)| (n.to_string(), c)).collect(),
                mu_hat,
                dyadic_level,
                tail,
            })
        }
        Payload::Ratio(fields) => {
            let eps = config.epsilon_grid.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut rows = Vec::new();
            for (&n, field) in config.n_grid.iter().zip(fields) {
                let set = influence_set(field, eps)?.point.edges;
                let ratio = if set.is_empty() {
                    f64::NAN
                } else {
                    let q = smooth_envelope_with_floor(&set, n as f64, config.envelope_floor)?;
                    envelope_ratio(&q, field, config.d)?
                };
                rows.push(RatioRow {
                    n,
                    trials: field.trials,
                    generators: set.len(),
                    ratio,
                });
            }
            let rs: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
            let max_over_min = rs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                / rs.iter().cloned().fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict::new(
                "ratio bounded across scales",
                false,
                max_over_min <= 3.0,
                format!("R = {rs:?}, max/min = {max_over_min:.4}"),
            ));
            Tables::Ratio { rows, max_over_min }
        }
        Payload::Validate(out) => {
            for o in &out.oracle {
                verdicts.push(Verdict::new(
                    &format!("oracle equivalence d={} side={}", o.dim, o.side),
                    true,
                    o.mismatches == 0,
                    format!("{} mismatches over {} pairs", o.mismatches, o.pairs),
                ));
            }
            let g = &out.gplus;
            verdicts.push(Verdict::new(
                "g+ bounds",
                true,
                g.bound_violations == 0,
                format!("{} violations over {} samples", g.bound_violations, g.samples),
            ));
            for row in &g.gains {
                verdicts.push(Verdict::new(
                    &format!("g+ gain on B_delta, delta={}", row.delta),
                    true,
                    row.violations == 0,
                    format!("{} violations over {} samples in B_delta", row.violations, row.checked),
                ));
            }
            let fails = out.mw.iter().filter(|r| !r.pass).count();
            let worst = out.mw.iter().map(|r| r.margin_sigmas).fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict::new(
                "probability transfer within 3 sigma",
                false,
                fails == 0,
                format!("{fails} of {} cases below -3 sigma, worst margin {worst:.3}", out.mw.len()),
            ));
            Tables::Validate(out.clone())
        }
    };
    let mut report = RunReport {
        trials: config.trials,
        config,
        tables,
        fits: Vec::new(),
        verdicts,
        payload,
        wall_clock_secs: 0.0,
    };
    report.fits = fit_and_summarize(&report).unwrap_or_default();
    Ok(report)
}

fn sorted_indices(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    idx
}

/// Power-law fits of the report's scale-indexed tables: `|A_eps|` against
/// `1/eps`, deviations and `R` against `n`, and outside counts against `r`
/// at the largest `n`. Fewer than three usable scales is an error.
pub fn fit_and_summarize(report: &RunReport) -> Result<Vec<NamedFit>> {
    let insufficient = |what: &str, k: usize| Err(Error::param(format!("{what}: need at least 3 scales, got {k}")));
    match &report.tables {
        Tables::Influence(t) => {
            let pairs: Vec<(f64, f64)> = t
                .sets
                .iter()
                .filter(|s| s.point > 0)
                .map(|s| (1.0 / s.epsilon, s.point as f64))
                .collect();
            if pairs.len() < 3 {
                return insufficient("influence sets", pairs.len());
            }
            Ok(vec![named_fit("influence set size vs 1/eps", &pairs)?])
        }
        Tables::Fluctuation(rows) => {
            if rows.len() < 3 {
                return insufficient("fluctuation", rows.len());
            }
            let mut fits: Vec<NamedFit> = [
                ("median max deviation vs n", rows.iter().map(|r| (r.n as f64, r.median_max_dev)).collect::<Vec<_>>()),
                ("median deviation vs n", rows.iter().map(|r| (r.n as f64, r.median_median_dev)).collect()),
            ]
            .iter()
            .filter_map(|(name, pairs)| named_fit(name, pairs).ok())
            .collect();
            if let Some(last) = rows.iter().max_by_key(|r| r.n) {
                let ell_max = last.mean_counts.iter().map(|c| c.0).fold(0.0, f64::max);
                let pairs: Vec<(f64, f64)> = last
                    .mean_counts
                    .iter()
                    .filter(|c| c.0 == ell_max && c.2 > 0.0)
                    .map(|c| (c.1, c.2))
                    .collect();
                if pairs.len() >= 3 {
                    fits.push(named_fit("outside count vs r", &pairs)?);
                }
            }
            Ok(fits)
        }
        Tables::Ratio { rows, .. } => {
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.ratio > 0.0)
                .map(|r| (r.n as f64, r.ratio))
                .collect();
            if pairs.len() < 3 {
                return insufficient("ratio", pairs.len());
            }
            Ok(vec![named_fit("ratio vs n", &pairs)?])
        }
        Tables::Coupling(_) | Tables::Validate(_) => insufficient("this kind has no scale table", 0),
    }
}

/// Combines reports of one experiment run over disjoint trial ranges. The
/// result equals the report of a single run over the union of the ranges.
pub fn merge(reports: &[RunReport]) -> Result<RunReport> {
    let Some(first) = reports.first() else {
        return Err(Error::Merge("nothing to merge".into()));
    };
    if reports.len() == 1 {
        return Ok(first.clone());
    }
    let base = &first.config;
    for r in &reports[1..] {
        if !r.config.same_experiment(base) {
            return Err(Error::Merge("configurations differ beyond their trial ranges".into()));
        }
    }
    let mut order: Vec<&RunReport> = reports.iter().collect();
    order.sort_by_key(|r| r.config.first_trial);
    for w in order.windows(2) {
        if w[0].config.first_trial + w[0].config.trials > w[1].config.first_trial {
            return Err(Error::Merge("trial ranges overlap".into()));
        }
    }
    let mut config = order[0].config.clone();
    config.trials = order.iter().map(|r| r.config.trials).sum();
    let payload = match &first.payload {
        Payload::Influence(_) => {
            let mut acc: Option<InfluenceField> = None;
            for r in &order {
                let Payload::Influence(f) = &r.payload else {
                    return Err(Error::Merge("payload kinds differ".into()));
                };
                acc = Some(match acc {
                    None => f.clone(),
                    Some(a) => a.merge(f)?,
                });
            }
            Payload::Influence(acc.expect("non-empty"))
        }
        Payload::Ratio(_) => {
            let mut acc: Option<Vec<InfluenceField>> = None;
            for r in &order {
                let Payload::Ratio(fs) = &r.payload else {
                    return Err(Error::Merge("payload kinds differ".into()));
                };
                acc = Some(match acc {
                    None => fs.clone(),
                    Some(a) => a.iter().zip(fs).map(|(x, y)| x.merge(y)).collect::<Result<_>>()?,
                });
            }
            Payload::Ratio(acc.expect("non-empty"))
        }
        Payload::Fluctuation(_) => {
            let mut all = Vec::new();
            for r in &order {
                let Payload::Fluctuation(ts) = &r.payload else {
                    return Err(Error::Merge("payload kinds differ".into()));
                };
                all.extend(ts.iter().cloned());
            }
            let pos = |n: i64| config.n_grid.iter().position(|&m| m == n);
            all.sort_by_key(|t| (pos(t.n), t.trial));
            Payload::Fluctuation(all)
        }
        Payload::Coupling { bounds, .. } => {
            let mut all = Vec::new();
            for r in &order {
                let Payload::Coupling { records, .. } = &r.payload else {
                    return Err(Error::Merge("payload kinds differ".into()));
                };
                all.extend(records.iter().cloned());
            }
            let hs = config.h_points()?;
            let pos = |h: &Point| hs.iter().position(|x| x == h);
            all.sort_by_key(|x| (pos(&x.h), x.seed));
            Payload::Coupling {
                bounds: *bounds,
                records: all,
            }
        }
        Payload::Validate(_) => return Err(Error::Merge("validation reports cannot be merged".into())),
    };
    let mut merged = summarize(config, payload)?;
    merged.wall_clock_secs = order.iter().map(|r| r.wall_clock_secs).sum();
    Ok(merged)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(io_err(path))
}

/// Writes the data CSVs, `report.json` and `timing.json` into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cfg = &report.config;
    match &report.payload {
        Payload::Influence(field) => {
            field.write_csv(create(&dir.join("influence.csv"))?)?;
            let meta = serde_json::to_string_pretty(&field.metadata(&cfg.distribution))?;
            fs::write(dir.join("influence.json"), meta + "\n").map_err(io_err(dir))?;
        }
        Payload::Ratio(fields) => {
            for (n, f) in cfg.n_grid.iter().zip(fields) {
                f.write_csv(create(&dir.join(format!("influence_n{n}.csv")))?)?;
            }
        }
        Payload::Fluctuation(trials) => {
            let mut w = csv::Writer::from_writer(create(&dir.join("fluctuation.csv"))?);
            w.write_record(["seed", "n", "ell", "r", "count", "max_dev"])?;
            let expo = 1.0 / (cfg.d as f64 + 1.0);
            let nr = cfg.r_grid.len();
            for t in trials {
                let nf = t.n as f64;
                for (li, lf) in cfg.ell_grid.iter().enumerate() {
                    for (ri, c) in cfg.r_grid.iter().enumerate() {
                        w.write_record([
                            t.seed.to_string(),
                            t.n.to_string(),
                            format!("{:.6}", lf * nf),
                            format!("{:.6}", c * nf.powf(expo)),
                            t.counts[li * nr + ri].to_string(),
                            format!("{:.10}", t.max_dev),
                        ])?;
                    }
                }
            }
            w.flush().map_err(io_err(dir))?;
        }
        Payload::Coupling { records, .. } => {
            let mut w = csv::Writer::from_writer(create(&dir.join("coupling.csv"))?);
            let mut header = Vec::new();
            for i in 0..cfg.d {
                header.push(format!("h_{i}"));
            }
            header.extend(
                [
                    "seed", "t0", "t0_plus", "th", "th_plus", "f_gamma0", "f_gamma0_plus", "f_gammah",
                ]
                .map(String::from),
            );
            w.write_record(&header)?;
            for r in records {
                let mut row: Vec<String> = r.h.coords().iter().map(|c| c.to_string()).collect();
                row.push(r.seed.to_string());
                for x in [r.t0, r.t0_plus, r.th, r.th_plus, r.f_gamma0, r.f_gamma0_plus, r.f_gammah] {
                    row.push(format!("{x:.12}"));
                }
                w.write_record(&row)?;
            }
            w.flush().map_err(io_err(dir))?;
        }
        Payload::Validate(out) => {
            let mut w = csv::Writer::from_writer(create(&dir.join("validate_mw.csv"))?);
            for row in &out.mw {
                w.serialize(row)?;
            }
            w.flush().map_err(io_err(dir))?;
        }
    }
    let mut f = create(&dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f).map_err(io_err(dir))?;
    let timing = serde_json::json!({
        "wall_clock_secs": report.wall_clock_secs,
        "trials": report.trials,
    });
    fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n").map_err(io_err(dir))?;
    Ok(())
}
