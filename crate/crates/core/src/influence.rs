//! Monte Carlo edge influences `p_e = P(e in gamma(0, v))` and the objects
//! built on top of them: influence sets, `l^beta` sums, smooth envelopes and
//! the smooth-function ratio.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{shortest_path, Geodesic};
use crate::lattice::{center_distance_unchecked, for_each_in_box, Edge, Point};
use crate::rng::trial_seed;
use crate::weights::{EdgeEnvironment, WeightDistribution};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Default epsilon grid for influence-set scans.
pub const DEFAULT_EPSILON_GRID: [f64; 5] = [0.3, 0.2, 0.1, 0.05, 0.02];

/// Default truncation floor for materialised envelopes.
pub const DEFAULT_ENVELOPE_FLOOR: f64 = 1e-6;

/// Wilson score interval for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// The environment of trial `index`.
pub fn trial_environment(dist: &WeightDistribution, master_seed: u64, index: u64) -> EdgeEnvironment {
    EdgeEnvironment::new(*dist, trial_seed(master_seed, index))
}

/// Runs `f` on the geodesic `gamma(0, v)` of each trial in `[first, first + count)`
/// (trial indices relative to `master_seed`), in parallel, returning results
/// in trial order.
pub fn map_geodesics<T, F>(
    dist: &WeightDistribution,
    v: &Point,
    master_seed: u64,
    first: u64,
    count: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &EdgeEnvironment, &Geodesic) -> T + Sync,
{
    let origin = Point::origin(v.dim())?;
    (first..first + count)
        .into_par_iter()
        .map(|i| {
            let env = trial_environment(dist, master_seed, i);
            let g = shortest_path(&env, &origin, v)?;
            Ok(f(i, &env, &g))
        })
        .collect()
}

/// Per-edge hit counts of `gamma(0, target)` over a set of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceField {
    pub target: Point,
    /// Half-open trial seed ranges covered, sorted and coalesced.
    pub seed_ranges: Vec<(u64, u64)>,
    pub trials: u64,
    pub hits: BTreeMap<Edge, u64>,
}

impl InfluenceField {
    pub fn empty(target: Point) -> Self {
        InfluenceField {
            target,
            seed_ranges: Vec::new(),
            trials: 0,
            hits: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn p_hat(&self, e: &Edge) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.hits.get(e).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn interval(&self, e: &Edge) -> (f64, f64) {
        wilson_interval(self.hits.get(e).copied().unwrap_or(0), self.trials, Z95)
    }

    /// `sum_e p_hat_e`, the mean geodesic length.
    pub fn total_influence(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.hits.values().sum::<u64>() as f64 / self.trials as f64
    }

    /// Adds one geodesic; `seed` is the trial seed it came from.
    pub fn record(&mut self, seed: u64, g: &Geodesic) {
        for e in &g.edges {
            *self.hits.entry(e.clone()).or_insert(0) += 1;
        }
        self.trials += 1;
        self.add_range(seed, seed + 1);
    }

    fn add_range(&mut self, lo: u64, hi: u64) {
        self.seed_ranges.push((lo, hi));
        self.seed_ranges.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::with_capacity(self.seed_ranges.len());
        for &(l, h) in &self.seed_ranges {
            match out.last_mut() {
                Some(last) if last.1 == l => last.1 = h,
                _ => out.push((l, h)),
            }
        }
        self.seed_ranges = out;
    }

    fn overlaps(&self, other: &InfluenceField) -> bool {
        self.seed_ranges
            .iter()
            .any(|&(a, b)| other.seed_ranges.iter().any(|&(c, d)| a < d && c < b))
    }

    /// Sums two fields over disjoint seed ranges.
    pub fn merge(&self, other: &InfluenceField) -> Result<InfluenceField> {
        if self.target != other.target {
            return Err(Error::Merge(format!(
                "targets differ: {} vs {}",
                self.target, other.target
            )));
        }
        if self.overlaps(other) {
            return Err(Error::Merge("overlapping seed ranges".into()));
        }
        let mut out = self.clone();
        for (e, h) in &other.hits {
            *out.hits.entry(e.clone()).or_insert(0) += h;
        }
        out.trials += other.trials;
        for &(l, h) in &other.seed_ranges {
            out.add_range(l, h);
        }
        Ok(out)
    }

    /// CSV with one row per visited edge, in canonical edge order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|i| format!("edge_base_{i}")).collect();
        header.extend(["axis", "hits", "trials", "p_hat", "ci_lo", "ci_hi"].map(String::from));
        w.write_record(&header)?;
        for (e, &h) in &self.hits {
            let (lo, hi) = wilson_interval(h, self.trials, Z95);
            let mut row: Vec<String> = e.base().coords().iter().map(|c| c.to_string()).collect();
            row.push(e.axis().to_string());
            row.push(h.to_string());
            row.push(self.trials.to_string());
            row.push(format!("{:.10}", h as f64 / self.trials as f64));
            row.push(format!("{lo:.10}"));
            row.push(format!("{hi:.10}"));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn metadata(&self, dist: &WeightDistribution) -> FieldMetadata {
        FieldMetadata {
            v: self.target.clone(),
            d: self.dim(),
            distribution: *dist,
            seeds: self.seed_ranges.clone(),
            trials: self.trials,
        }
    }
}

/// JSON sidecar accompanying an exported field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub v: Point,
    pub d: usize,
    pub distribution: WeightDistribution,
    pub seeds: Vec<(u64, u64)>,
    pub trials: u64,
}

/// Influence field of `gamma(0, v)` over trials `master_seed + i`, `i < trials`.
pub fn estimate_influence(
    dist: &WeightDistribution,
    v: &Point,
    trials: u64,
    master_seed: u64,
) -> Result<InfluenceField> {
    estimate_influence_range(dist, v, master_seed, 0, trials)
}

/// As [`estimate_influence`] for trial indices `[first, first + count)`.
pub fn estimate_influence_range(
    dist: &WeightDistribution,
    v: &Point,
    master_seed: u64,
    first: u64,
    count: u64,
) -> Result<InfluenceField> {
    if count == 0 {
        return Err(Error::param("trials must be positive"));
    }
    if v.is_zero() {
        return Err(Error::ZeroDirection);
    }
    let counts: Vec<HashMap<Edge, u64>> = map_geodesics(dist, v, master_seed, first, count, |_, _, g| {
        let mut m = HashMap::with_capacity(g.len());
        for e in &g.edges {
            *m.entry(e.clone()).or_insert(0) += 1;
        }
        m
    })?;
    let mut hits = BTreeMap::new();
    for m in counts {
        for (e, h) in m {
            *hits.entry(e).or_insert(0) += h;
        }
    }
    let lo = trial_seed(master_seed, first);
    Ok(InfluenceField {
        target: v.clone(),
        seed_ranges: vec![(lo, lo + count)],
        trials: count,
        hits,
    })
}

/// `A_eps = {e : p_e >= eps}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceSet {
    pub epsilon: f64,
    pub edges: BTreeSet<Edge>,
}

impl InfluenceSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Influence sets thresholded on the Wilson lower bound, the point estimate
/// and the Wilson upper bound; `lower ⊆ point ⊆ upper`. Only visited edges
/// are considered, so `upper` omits never-hit edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceSets {
    pub lower: InfluenceSet,
    pub point: InfluenceSet,
    pub upper: InfluenceSet,
}

pub fn influence_set(field: &InfluenceField, epsilon: f64) -> Result<InfluenceSets> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::OutOfRange {
            value: epsilon,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let mk = |edges| InfluenceSet { epsilon, edges };
    let (mut lo, mut pt, mut hi) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    for (e, &h) in &field.hits {
        let p = h as f64 / field.trials as f64;
        let (l, u) = wilson_interval(h, field.trials, Z95);
        if l >= epsilon {
            lo.insert(e.clone());
        }
        if p >= epsilon {
            pt.insert(e.clone());
        }
        if u >= epsilon {
            hi.insert(e.clone());
        }
    }
    Ok(InfluenceSets {
        lower: mk(lo),
        point: mk(pt),
        upper: mk(hi),
    })
}

/// `sum_e p_hat_e^beta` over visited edges.
pub fn lp_sum(field: &InfluenceField, beta: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::param(format!("beta must be at least 1, got {beta}")));
    }
    let n = field.trials as f64;
    Ok(field.hits.values().map(|&h| (h as f64 / n).powf(beta)).sum())
}

/// `q_e = max_{e' in generators} exp(-|e' - e| / log n)`, materialised on
/// edges where it is at least `floor`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothEnvelope {
    pub scale: f64,
    pub floor: f64,
    pub generators: Vec<Edge>,
    pub values: BTreeMap<Edge, f64>,
}

impl SmoothEnvelope {
    /// Exact (untruncated) value at `e`.
    pub fn q_at(&self, e: &Edge) -> f64 {
        let dmin = self
            .generators
            .iter()
            .map(|g| center_distance_unchecked(g, e))
            .fold(f64::INFINITY, f64::min);
        (-dmin / self.scale).exp()
    }

    /// Materialised value, zero below the floor.
    pub fn value(&self, e: &Edge) -> f64 {
        self.values.get(e).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.values.values().map(|q| q * q).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sum_sq().sqrt()
    }
}

pub fn smooth_envelope(generators: &BTreeSet<Edge>, n: f64) -> Result<SmoothEnvelope> {
    smooth_envelope_with_floor(generators, n, DEFAULT_ENVELOPE_FLOOR)
}

pub fn smooth_envelope_with_floor(generators: &BTreeSet<Edge>, n: f64, floor: f64) -> Result<SmoothEnvelope> {
    let Some(first) = generators.iter().next() else {
        return Err(Error::param("envelope needs at least one generator"));
    };
    if !(n >= 3.0) {
        return Err(Error::param(format!("envelope scale needs n >= 3, got {n}")));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::param(format!("floor must lie in (0, 1), got {floor}")));
    }
    let d = first.dim();
    let scale = n.ln();
    let reach = (scale * (1.0 / floor).ln()).ceil() as i64 + 1;
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for g in generators {
        for i in 0..d {
            lo[i] = lo[i].min(g.base().coords()[i] - reach);
            hi[i] = hi[i].max(g.base().coords()[i] + reach);
        }
    }
    let gens: Vec<Edge> = generators.iter().cloned().collect();
    let max_dist = -scale * floor.ln();
    let mut candidates = Vec::new();
    for_each_in_box(&lo, &hi, |c| {
        for axis in 0..d {
            candidates.push(Edge::from_raw(c, axis));
        }
    });
    let values: BTreeMap<Edge, f64> = candidates
        .into_par_iter()
        .filter_map(|e| {
            let dmin = gens
                .iter()
                .map(|g| center_distance_unchecked(g, &e))
                .fold(f64::INFINITY, f64::min);
            (dmin <= max_dist).then(|| {
                let q = (-dmin / scale).exp();
                (e, q)
            })
        })
        .filter(|(_, q)| *q >= floor)
        .collect();
    Ok(SmoothEnvelope {
        scale,
        floor,
        generators: gens,
        values,
    })
}

/// `R = (sum q p)^d / ((sum q^2)^((d-1)/2) * sum q)`.
pub fn envelope_ratio(q: &SmoothEnvelope, field: &InfluenceField, d: usize) -> Result<f64> {
    if q.generators.first().is_some_and(|g| g.dim() != field.dim()) || d != field.dim() {
        return Err(Error::Dimension("envelope and field dimensions differ".into()));
    }
    let sum_q = q.sum();
    if sum_q <= 0.0 {
        return Err(Error::param("envelope vanishes below its floor"));
    }
    let qp: f64 = field
        .hits
        .iter()
        .map(|(e, &h)| q.value(e) * h as f64 / field.trials as f64)
        .sum();
    let df = d as f64;
    Ok(qp.powf(df) / (q.sum_sq().powf((df - 1.0) / 2.0) * sum_q))
}

/// Markov check `|A_eps| <= (sum_e p_e) / eps` over the default grid.
pub fn trivial_count_bound_check(field: &InfluenceField) -> bool {
    trivial_count_bound_check_on(field, &DEFAULT_EPSILON_GRID)
}

pub fn trivial_count_bound_check_on(field: &InfluenceField, grid: &[f64]) -> bool {
    let total = field.total_influence();
    grid.iter().all(|&eps| {
        let count = field
            .hits
            .values()
            .filter(|&&h| h as f64 / field.trials as f64 >= eps)
            .count();
        count as f64 <= total / eps * (1.0 + 1e-12)
    })
}
