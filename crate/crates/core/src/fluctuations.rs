//! Transversal fluctuations of point-to-point geodesics: counts of vertices
//! outside cylinders around the segment direction, maximal deviations,
//! log-log exponent fits, and the density of "nice" weights along paths.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::Geodesic;
use crate::lattice::{projection, transversal_distance, unit_vector, ConfinementRegion, Edge, Point};
use crate::rng;
use crate::weights::{nice_set, EdgeWeights, GaussianRepresentation};

/// Transversal distances `|u - (u, v^) v^|` of the geodesic vertices lying in
/// the slab `0 <= (u, v^) <= ell` (boundary included), in path order.
pub fn slab_distances(g: &Geodesic, v: &Point, ell: f64) -> Result<Vec<f64>> {
    let unit = unit_vector(v)?;
    Ok(g.vertices
        .iter()
        .filter_map(|u| {
            let t = projection(&unit, u.coords());
            (0.0..=ell)
                .contains(&t)
                .then(|| transversal_distance(&unit, u.coords()))
        })
        .collect())
}

fn check_slab(v: &Point, ell: f64, r: f64) -> Result<()> {
    if v.is_zero() {
        return Err(Error::ZeroDirection);
    }
    if !(ell > 0.0 && ell <= v.l2_norm() + 1e-9) {
        return Err(Error::param(format!("slab length {ell} outside (0, |v|]")));
    }
    if !(r >= 0.0) {
        return Err(Error::param(format!("radius must be non-negative, got {r}")));
    }
    Ok(())
}

/// Number of geodesic vertices in the slab `0 <= (u, v^) <= ell` lying
/// strictly farther than `r` from the line through `0` and `v`.
pub fn outside_cylinder_count(g: &Geodesic, v: &Point, ell: f64, r: f64) -> Result<usize> {
    check_slab(v, ell, r)?;
    Ok(slab_distances(g, v, ell)?.into_iter().filter(|&d| d > r).count())
}

/// Largest distance of a geodesic vertex from the line through `0` and `v`.
pub fn max_transversal_deviation(g: &Geodesic, v: &Point) -> Result<f64> {
    let unit = unit_vector(v)?;
    Ok(g.vertices
        .iter()
        .map(|u| transversal_distance(&unit, u.coords()))
        .fold(0.0, f64::max))
}

/// Median distance of the geodesic vertices from the line through `0` and `v`.
pub fn median_transversal_deviation(g: &Geodesic, v: &Point) -> Result<f64> {
    let unit = unit_vector(v)?;
    let d: Vec<f64> = g
        .vertices
        .iter()
        .map(|u| transversal_distance(&unit, u.coords()))
        .collect();
    Ok(median(&d))
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Outside-cylinder counts of one geodesic over a grid of radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSample {
    pub v: Point,
    pub ell: f64,
    pub radii: Vec<f64>,
    pub outside_counts: Vec<usize>,
}

pub fn fluctuation_sample(g: &Geodesic, v: &Point, ell: f64, radii: &[f64]) -> Result<FluctuationSample> {
    for &r in radii {
        check_slab(v, ell, r)?;
    }
    let dists = slab_distances(g, v, ell)?;
    let outside_counts = radii
        .iter()
        .map(|&r| dists.iter().filter(|&&d| d > r).count())
        .collect();
    Ok(FluctuationSample {
        v: v.clone(),
        ell,
        radii: radii.to_vec(),
        outside_counts,
    })
}

/// Supremum of radii `r` for which the mean (over trials) number of slab
/// vertices farther than `r` from the axis is at least `threshold`.
/// Zero when even `r = 0` fails.
pub fn critical_radius(per_trial_distances: &[Vec<f64>], threshold: f64) -> f64 {
    let trials = per_trial_distances.len();
    if trials == 0 {
        return 0.0;
    }
    let need = (threshold * trials as f64).ceil().max(1.0) as usize;
    let mut all: Vec<f64> = per_trial_distances.iter().flatten().copied().collect();
    if all.len() < need {
        return 0.0;
    }
    // mean count(r) >= threshold  <=>  r < need-th largest distance
    all.sort_by(|a, b| b.total_cmp(a));
    all[need - 1]
}

/// Least-squares fit of `log(statistic)` against `log(scale)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (zero for exact fits or three-point fits
    /// with no residual).
    pub slope_stderr: f64,
}

impl ExponentFit {
    /// Approximate 95% interval for the slope.
    pub fn slope_ci(&self) -> (f64, f64) {
        let h = 1.96 * self.slope_stderr;
        (self.slope - h, self.slope + h)
    }
}

pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if pairs.len() < 3 {
        return Err(Error::param(format!("need at least 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::param("exponent fit needs positive data"));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("exponent fit needs at least two distinct scales"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        pairs: pairs.to_vec(),
        slope,
        intercept,
        r_squared,
        slope_stderr,
    })
}

/// Fraction of `path` edges whose weight lies in `B_delta`.
pub fn path_density_check<W: EdgeWeights>(
    env: &W,
    rep: &GaussianRepresentation,
    path: &[Edge],
    delta: f64,
) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::param("path must contain at least one edge"));
    }
    let b = nice_set(rep, delta)?;
    let inside = path.iter().filter(|e| b.contains(env.weight(e))).count();
    Ok(inside as f64 / path.len() as f64)
}

/// Result of a sampled probe of the path-density event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaScan {
    pub samples: u64,
    pub violations: u64,
    pub nice_measure: f64,
}

/// Samples `samples` non-backtracking random walks inside `region`, each of a
/// length drawn uniformly from `[k_min, 2 k_min]`, and counts those with
/// fewer than half of their steps on `B_delta` weights. Walks are truncated if
/// they reach a vertex with no admissible continuation.
pub fn omega_violation_scan<W: EdgeWeights>(
    env: &W,
    rep: &GaussianRepresentation,
    region: &ConfinementRegion,
    k_min: usize,
    samples: u64,
    delta: f64,
    seed: u64,
) -> Result<OmegaScan> {
    if k_min == 0 {
        return Err(Error::param("k_min must be at least 1"));
    }
    let b = nice_set(rep, delta)?;
    let d = region.source.dim();
    let (lo, hi) = region.bounding_box();
    let mut rng = rng::stream_rng(seed, 0x0e9a);
    let mut violations = 0;
    let mut cur = vec![0i64; d];
    let mut moves: Vec<(usize, i64)> = Vec::with_capacity(2 * d);
    for _ in 0..samples {
        loop {
            for i in 0..d {
                cur[i] = rng.random_range(lo[i]..=hi[i]);
            }
            if region.contains_coords(&cur) {
                break;
            }
        }
        let len = rng.random_range(k_min..=2 * k_min);
        let mut last: Option<(usize, i64)> = None;
        let (mut steps, mut good) = (0usize, 0usize);
        for _ in 0..len {
            moves.clear();
            for axis in 0..d {
                for dir in [-1i64, 1] {
                    if last == Some((axis, -dir)) {
                        continue;
                    }
                    cur[axis] += dir;
                    if region.contains_coords(&cur) {
                        moves.push((axis, dir));
                    }
                    cur[axis] -= dir;
                }
            }
            if moves.is_empty() {
                break;
            }
            let (axis, dir) = moves[rng.random_range(0..moves.len())];
            let w = if dir > 0 {
                env.weight_raw(&cur, axis)
            } else {
                cur[axis] -= 1;
                let w = env.weight_raw(&cur, axis);
                cur[axis] += 1;
                w
            };
            cur[axis] += dir;
            last = Some((axis, dir));
            steps += 1;
            good += b.contains(w) as usize;
        }
        if 2 * good < steps {
            violations += 1;
        }
    }
    Ok(OmegaScan {
        samples,
        violations,
        nice_measure: b.measure(rep.distribution()),
    })
}
