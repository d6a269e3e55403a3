//! Coupled runs of an environment and its monotone perturbation
//! `t_e^+ = g_{tau_e}(t_e)`, with the deterministic per-sample inequalities
//! linking the passage times of `gamma(0, v)` and its translate
//! `gamma(h, v + h)`, and the tail diagnostics built on `f(p) = sum_{e in p} tau_e`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{path_time, shortest_path, Geodesic};
use crate::influence::{trial_environment, InfluenceField, SmoothEnvelope};
use crate::lattice::{Edge, Point};
use crate::rng::trial_seed;
use crate::weights::{
    nice_set, perturb_environment, EdgeWeights, GaussianRepresentation, NiceSet, ShiftedEnvironment,
    WeightDistribution,
};

/// Absolute slack (relative to the magnitude of the times involved) for
/// comparisons between independently accumulated floating-point sums.
pub const FLOAT_SLACK: f64 = 1e-9;

/// A finitely supported perturbation profile `tau: E -> [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TauField {
    values: HashMap<Edge, f64>,
    norm: f64,
}

impl TauField {
    pub fn zero() -> Self {
        TauField {
            values: HashMap::new(),
            norm: 0.0,
        }
    }

    pub fn from_map(values: HashMap<Edge, f64>) -> Result<Self> {
        for &t in values.values() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfRange {
                    value: t,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        let norm = values.values().map(|t| t * t).sum::<f64>().sqrt();
        Ok(TauField { values, norm })
    }

    /// `|A|^{-1/2} 1{e in A}`.
    pub fn indicator(set: &BTreeSet<Edge>) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::param("indicator profile needs a non-empty set"));
        }
        let t = 1.0 / (set.len() as f64).sqrt();
        Self::from_map(set.iter().map(|e| (e.clone(), t)).collect())
    }

    /// `q / |q|_2`.
    pub fn normalized(q: &SmoothEnvelope) -> Result<Self> {
        let n = q.l2_norm();
        if n <= 0.0 {
            return Err(Error::param("envelope has zero norm"));
        }
        Self::from_map(q.values.iter().map(|(e, v)| (e.clone(), v / n)).collect())
    }

    pub fn get(&self, e: &Edge) -> f64 {
        self.values.get(e).copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_map(&self) -> &HashMap<Edge, f64> {
        &self.values
    }

    /// Entries in canonical edge order.
    pub fn sorted(&self) -> BTreeMap<Edge, f64> {
        self.values.iter().map(|(e, t)| (e.clone(), *t)).collect()
    }
}

/// `f(p) = sum_{e in p} tau_e`.
pub fn f_statistic(g: &Geodesic, tau: &TauField) -> f64 {
    g.edges.iter().map(|e| tau.get(e)).sum()
}

/// `mu = sum_e tau_e p_e`.
pub fn mu_estimate(field: &InfluenceField, tau: &TauField) -> f64 {
    if field.trials == 0 {
        return 0.0;
    }
    let n = field.trials as f64;
    field
        .hits
        .iter()
        .map(|(e, &h)| tau.get(e) * h as f64 / n)
        .sum()
}

/// One coupled sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub h: Point,
    pub seed: u64,
    pub t0: f64,
    pub t0_plus: f64,
    pub th: f64,
    pub th_plus: f64,
    pub f_gamma0: f64,
    pub f_gamma0_plus: f64,
    pub f_gammah: f64,
    /// `T^+(gamma_0)`: the original geodesic priced in the perturbed weights.
    pub t0_plus_along_gamma0: f64,
    /// `T^+(gamma_h)`.
    pub th_plus_along_gammah: f64,
    /// `sum_{e in gamma_0^+, t_e in B_delta} tau_e`.
    pub nice_gain: f64,
    pub delta: f64,
}

/// Constants the per-sample inequalities are checked against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingBounds {
    pub c0: f64,
    pub b: f64,
    pub delta: f64,
}

impl CouplingRecord {
    /// Names of the violated deterministic inequalities (empty when all hold).
    pub fn violations(&self, k: &CouplingBounds) -> Vec<&'static str> {
        let slack = FLOAT_SLACK * (1.0 + self.t0.abs().max(self.th.abs()));
        let h1 = self.h.l1_norm() as f64;
        let mut out = Vec::new();
        if self.t0_plus < self.t0 - slack {
            out.push("t0_plus >= t0");
        }
        if self.th_plus < self.th - slack {
            out.push("th_plus >= th");
        }
        if (self.t0 - self.th).abs() > 2.0 * k.b * h1 + slack {
            out.push("|t0 - th| <= 2 b |h|_1");
        }
        if self.th_plus > self.th + k.c0 * self.f_gammah + slack {
            out.push("th_plus <= th + c0 f(gamma_h)");
        }
        if self.th_plus > self.th_plus_along_gammah + slack {
            out.push("th_plus <= T+(gamma_h)");
        }
        if self.t0_plus > self.t0_plus_along_gamma0 + slack {
            out.push("t0_plus <= T+(gamma_0)");
        }
        if self.t0_plus_along_gamma0 > self.t0 + k.c0 * self.f_gamma0 + slack {
            out.push("T+(gamma_0) <= t0 + c0 f(gamma_0)");
        }
        if self.t0_plus < self.t0 + k.delta * self.nice_gain - slack {
            out.push("t0_plus >= t0 + delta * nice_gain");
        }
        out
    }
}

/// Smallest `delta` on a halving grid from 0.1 with `G(B_delta) >= target`.
pub fn default_delta0(rep: &GaussianRepresentation, target: f64) -> Result<f64> {
    let mut delta = 0.1;
    for _ in 0..60 {
        if nice_set(rep, delta)?.measure(rep.distribution()) >= target {
            return Ok(delta);
        }
        delta *= 0.5;
    }
    Err(Error::param(format!("no delta reaches G(B_delta) >= {target}")))
}

/// Samples one environment with the given trial seed and computes all
/// coupled quantities for the translate `h`.
pub fn run_coupling(
    rep: &GaussianRepresentation,
    v: &Point,
    h: &Point,
    tau: &TauField,
    seed: u64,
    nice: &NiceSet,
) -> Result<CouplingRecord> {
    let env = crate::weights::EdgeEnvironment::new(*rep.distribution(), seed);
    let plus = perturb_environment(&env, rep, tau.as_map())?;
    let origin = Point::origin(v.dim())?;
    let vh = v.add(h);
    let g0 = shortest_path(&env, &origin, v)?;
    let gh = shortest_path(&env, h, &vh)?;
    let g0p = shortest_path(&plus, &origin, v)?;
    let ghp = shortest_path(&plus, h, &vh)?;
    let nice_gain = g0p
        .edges
        .iter()
        .filter(|e| nice.contains(env.weight(e)))
        .map(|e| tau.get(e))
        .sum();
    Ok(CouplingRecord {
        h: h.clone(),
        seed,
        t0: g0.time,
        t0_plus: g0p.time,
        th: gh.time,
        th_plus: ghp.time,
        f_gamma0: f_statistic(&g0, tau),
        f_gamma0_plus: f_statistic(&g0p, tau),
        f_gammah: f_statistic(&gh, tau),
        t0_plus_along_gamma0: path_time(&plus, &g0.edges),
        th_plus_along_gammah: path_time(&plus, &gh.edges),
        nice_gain,
        delta: nice.delta,
    })
}

/// Coupled samples for every `h` in `h_grid` and trial seeds
/// `master_seed + i`, `i` in `trials`; the same environments are reused
/// across `h`. Output is ordered by `(h index, trial)`.
pub fn run_couplings(
    rep: &GaussianRepresentation,
    v: &Point,
    h_grid: &[Point],
    tau: &TauField,
    master_seed: u64,
    trials: Range<u64>,
    delta: f64,
) -> Result<Vec<CouplingRecord>> {
    let nice = nice_set(rep, delta)?;
    let jobs: Vec<(usize, u64)> = (0..h_grid.len())
        .flat_map(|k| trials.clone().map(move |i| (k, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(k, i)| run_coupling(rep, v, &h_grid[k], tau, trial_seed(master_seed, i), &nice))
        .collect()
}

/// Empirical check of `P(f >= 3^k mu) >= 4^{-k-3}`.
pub fn dyadic_level_holds(f_samples: &[f64], mu: f64, k: i32) -> bool {
    if f_samples.is_empty() {
        return false;
    }
    let thr = 3f64.powi(k) * mu;
    let tail = f_samples.iter().filter(|&&f| f >= thr).count() as f64 / f_samples.len() as f64;
    tail >= 4f64.powi(-k - 3)
}

/// Smallest `k` in `-1..=k_max` for which [`dyadic_level_holds`].
pub fn dyadic_level_search(f_samples: &[f64], mu: f64, k_max: i32) -> Result<Option<i32>> {
    if f_samples.is_empty() {
        return Err(Error::param("no samples"));
    }
    if !(mu > 0.0) {
        return Err(Error::param(format!("mu must be positive, got {mu}")));
    }
    Ok((-1..=k_max).find(|&k| dyadic_level_holds(f_samples, mu, k)))
}

/// Candidate constants `2^-1, ..., 2^-8`.
pub fn c1_grid() -> Vec<f64> {
    (1..=8).map(|j| 0.5f64.powi(j)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub h: Point,
    pub c1: f64,
    /// `P(f(gamma_h) >= c1 t)`.
    pub lhs: f64,
    /// `c1 P(f(gamma_0) >= t)^{3/2}`.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailTransferTable {
    pub t: f64,
    pub trials: u64,
    pub p0: f64,
    pub rows: Vec<TailRow>,
    /// Largest `c1` on the grid passing for every `h`.
    pub best_c1: Option<f64>,
    /// `(h, c1)` pairs where the two sides are within one binomial standard
    /// error of each other.
    pub borderline: Vec<(Point, f64)>,
}

/// Estimates `P(f(gamma_h) >= c1 t)` and `c1 P(f(gamma_0) >= t)^{3/2}` for each
/// `h` and each `c1` on [`c1_grid`], with shared environments across `h`. The
/// polynomially small additive slack of the bound is taken as zero.
pub fn tail_transfer_check(
    dist: &WeightDistribution,
    v: &Point,
    t: f64,
    h_grid: &[Point],
    tau: &TauField,
    trials: u64,
    master_seed: u64,
) -> Result<TailTransferTable> {
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let origin = Point::origin(v.dim())?;
    // per trial: f(gamma_0), then f(gamma_h) for each h
    let per_trial: Vec<(f64, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let env = trial_environment(dist, master_seed, i);
            let f0 = f_statistic(&shortest_path(&env, &origin, v)?, tau);
            let fh = h_grid
                .iter()
                .map(|h| Ok(f_statistic(&shortest_path(&env, h, &v.add(h))?, tau)))
                .collect::<Result<Vec<f64>>>()?;
            Ok((f0, fh))
        })
        .collect::<Result<_>>()?;
    let f0: Vec<f64> = per_trial.iter().map(|(f, _)| *f).collect();
    let fh: Vec<(Point, Vec<f64>)> = h_grid
        .iter()
        .enumerate()
        .map(|(k, h)| (h.clone(), per_trial.iter().map(|(_, fs)| fs[k]).collect()))
        .collect();
    tail_transfer_table(t, &f0, &fh)
}

/// Builds the tail-transfer table from paired samples: `f0[i]` is
/// `f(gamma_0)` and each `fh` entry holds `f(gamma_h)` on the same trials.
pub fn tail_transfer_table(t: f64, f0: &[f64], fh: &[(Point, Vec<f64>)]) -> Result<TailTransferTable> {
    if f0.is_empty() {
        return Err(Error::param("no samples"));
    }
    if fh.iter().any(|(_, s)| s.len() != f0.len()) {
        return Err(Error::param("samples for each h must pair with the unshifted samples"));
    }
    let n = f0.len() as f64;
    let p0 = f0.iter().filter(|&&f| f >= t).count() as f64 / n;
    let grid = c1_grid();
    let mut rows = Vec::new();
    let mut borderline = Vec::new();
    for (h, fs) in fh {
        for &c1 in &grid {
            let lhs = fs.iter().filter(|&&f| f >= c1 * t).count() as f64 / n;
            let rhs = c1 * p0.powf(1.5);
            let se = (lhs * (1.0 - lhs) / n).sqrt().max(1.0 / n);
            if (lhs - rhs).abs() <= se {
                borderline.push((h.clone(), c1));
            }
            rows.push(TailRow {
                h: h.clone(),
                c1,
                lhs,
                rhs,
                pass: lhs >= rhs,
            });
        }
    }
    let best_c1 = grid
        .iter()
        .copied()
        .find(|&c1| rows.iter().filter(|r| r.c1 == c1).all(|r| r.pass));
    Ok(TailTransferTable {
        t,
        trials: f0.len() as u64,
        p0,
        rows,
        best_c1,
        borderline,
    })
}

/// Checks that the geodesic from `h` to `v + h` in the environment translated
/// by `h` is exactly the translate of `gamma(0, v)`, with the same time.
pub fn translated_geodesic_matches<W: EdgeWeights>(env: &W, v: &Point, h: &Point) -> Result<bool> {
    let origin = Point::origin(v.dim())?;
    let g0 = shortest_path(env, &origin, v)?;
    let shifted = ShiftedEnvironment::new(env, h.clone());
    let gh = shortest_path(&shifted, h, &v.add(h))?;
    let moved: Vec<Point> = g0.vertices.iter().map(|x| x.add(h)).collect();
    Ok(moved == gh.vertices && g0.time == gh.time)
}
