//! Edge-weight distributions on `[a, b]` with a density bounded below, the
//! seeded i.i.d. environment built from them, and a monotone perturbation
//! obtained by shifting the Gaussian representation of each weight.
//!
//! Every admissible distribution `G` is written as `F(Z)` with `Z` standard
//! normal and `F = G^{-1} o Phi`. The perturbation `g_tau = F(F^{-1}(w) + tau)`
//! raises a weight by at most `C0 * tau`, gains at least `delta * tau` on the
//! set `B_delta`, and transports probabilities with the Gaussian shift bound
//! `P(g_tau(X) in A) >= exp(-p|tau|^2 / (2(p-1))) P(X in A)^p`.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};
use crate::lattice::{for_each_in_box, ConfinementRegion, Edge, Point};
use crate::rng;

/// Gaussian-space clamp for `F^{-1}`; beyond it `F` is flat in double precision.
pub const Z_CLAMP: f64 = 8.0;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uniform,
    /// Density proportional to `1 + tilt * (x - a)/(b - a)`, `tilt > -1`.
    TruncatedLinear { tilt: f64 },
}

/// An absolutely continuous law on `[a, b]` whose density is at least `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDistribution {
    pub a: f64,
    pub b: f64,
    #[serde(flatten)]
    pub family: Family,
}

impl Default for WeightDistribution {
    fn default() -> Self {
        WeightDistribution::uniform(1.0, 2.0).expect("valid default")
    }
}

impl WeightDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, Family::Uniform)
    }

    pub fn truncated_linear(a: f64, b: f64, tilt: f64) -> Result<Self> {
        Self::new(a, b, Family::TruncatedLinear { tilt })
    }

    pub fn new(a: f64, b: f64, family: Family) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::param(format!("support needs 0 < a < b, got [{a}, {b}]")));
        }
        if let Family::TruncatedLinear { tilt } = family {
            if !(tilt > -1.0 && tilt.is_finite()) {
                return Err(Error::param(format!("tilt must exceed -1, got {tilt}")));
            }
        }
        Ok(WeightDistribution { a, b, family })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.a, self.b, self.family).map(|_| ())
    }

    fn width(&self) -> f64 {
        self.b - self.a
    }

    fn tilt(&self) -> f64 {
        match self.family {
            Family::Uniform => 0.0,
            Family::TruncatedLinear { tilt } => tilt,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.a || x > self.b {
            return 0.0;
        }
        let k = self.tilt();
        let s = (x - self.a) / self.width();
        (1.0 + k * s) / (self.width() * (1.0 + 0.5 * k))
    }

    /// The density floor.
    pub fn alpha(&self) -> f64 {
        self.density(self.a).min(self.density(self.b))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        let k = self.tilt();
        let s = (x - self.a) / self.width();
        (s + 0.5 * k * s * s) / (1.0 + 0.5 * k)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let k = self.tilt();
        // root of k s^2/2 + s - c = 0 in the cancellation-free form
        let c = p * (1.0 + 0.5 * k);
        let s = 2.0 * c / (1.0 + (1.0 + 2.0 * k * c).max(0.0).sqrt());
        (self.a + s * self.width()).clamp(self.a, self.b)
    }

    pub fn mean(&self) -> f64 {
        let k = self.tilt();
        // E[s] = (1/2 + k/3) / (1 + k/2)
        self.a + self.width() * (0.5 + k / 3.0) / (1.0 + 0.5 * k)
    }

    /// Weight obtained from 64 random bits.
    #[inline]
    pub fn sample_bits(&self, bits: u64) -> f64 {
        match self.family {
            Family::Uniform => self.a + self.width() * rng::unit_f64(bits),
            _ => self.quantile(rng::unit_f64(bits)),
        }
    }
}

/// `G` written as the push-forward `F = G^{-1} o Phi` of a standard Gaussian,
/// together with a Lipschitz constant `C0` for `F`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianRepresentation {
    dist: WeightDistribution,
    c0: f64,
}

impl GaussianRepresentation {
    pub fn new(dist: WeightDistribution) -> Self {
        let mut sup = 0.0f64;
        let steps = 20_000;
        for i in 0..=steps {
            let z = -Z_CLAMP - 1.0 + (2.0 * Z_CLAMP + 2.0) * i as f64 / steps as f64;
            sup = sup.max(Self::derivative_of(&dist, z));
        }
        // sup phi / alpha dominates sup phi / rho(F) and is kept as a floor
        let c0 = (1.05 * sup).max(normal_pdf(0.0) / dist.alpha());
        GaussianRepresentation { dist, c0 }
    }

    pub fn distribution(&self) -> &WeightDistribution {
        &self.dist
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `F(z)`.
    pub fn push(&self, z: f64) -> f64 {
        self.dist.quantile(normal_cdf(z))
    }

    /// `F^{-1}(w)`, clamped to `[-Z_CLAMP, Z_CLAMP]`.
    pub fn pull(&self, w: f64) -> f64 {
        normal_quantile(self.dist.cdf(w)).clamp(-Z_CLAMP, Z_CLAMP)
    }

    /// `F'(z) = phi(z) / rho(F(z))`.
    pub fn derivative(&self, z: f64) -> f64 {
        Self::derivative_of(&self.dist, z)
    }

    fn derivative_of(dist: &WeightDistribution, z: f64) -> f64 {
        let rho = dist.density(dist.quantile(normal_cdf(z)));
        if rho > 0.0 {
            normal_pdf(z) / rho
        } else {
            0.0
        }
    }

    pub fn map(&self, tau: f64) -> Result<PerturbationMap<'_>> {
        check_tau(tau)?;
        Ok(PerturbationMap { rep: self, tau })
    }

    /// `g_tau(w)` without argument validation; results are clamped into
    /// `[w, min(b, w + C0 tau)]` to absorb rounding in the round trip.
    #[inline]
    pub fn gplus_unchecked(&self, tau: f64, w: f64) -> f64 {
        if tau == 0.0 {
            return w;
        }
        let raw = self.push(self.pull(w) + tau);
        let hi = self.dist.b.min(w + self.c0 * tau);
        raw.clamp(w, hi.max(w))
    }

    /// Inverse of `g_tau` on `[a, b]`.
    pub fn gplus_inverse(&self, tau: f64, y: f64) -> f64 {
        if tau == 0.0 {
            return y;
        }
        self.push(self.pull(y) - tau).clamp(self.dist.a, y)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange {
            value: tau,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// The increasing bijection `g_tau` for one fixed `tau`.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationMap<'a> {
    rep: &'a GaussianRepresentation,
    tau: f64,
}

impl PerturbationMap<'_> {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn c0(&self) -> f64 {
        self.rep.c0
    }

    pub fn apply(&self, w: f64) -> Result<f64> {
        let d = &self.rep.dist;
        if !(d.a..=d.b).contains(&w) {
            return Err(Error::OutOfRange {
                value: w,
                lo: d.a,
                hi: d.b,
            });
        }
        Ok(self.rep.gplus_unchecked(self.tau, w))
    }

    pub fn inverse(&self, y: f64) -> f64 {
        self.rep.gplus_inverse(self.tau, y)
    }
}

/// `g_tau(w)`.
pub fn gplus(map: &PerturbationMap<'_>, w: f64) -> Result<f64> {
    map.apply(w)
}

/// `B_delta`, a closed interval of weights on which `g_tau` gains at least
/// `delta * tau` for every `tau` in `[0, 1]`; possibly empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NiceSet {
    pub delta: f64,
    pub interval: Option<(f64, f64)>,
}

impl NiceSet {
    pub fn contains(&self, w: f64) -> bool {
        matches!(self.interval, Some((lo, hi)) if lo <= w && w <= hi)
    }

    pub fn is_empty(&self) -> bool {
        self.interval.is_none()
    }

    /// `G(B_delta)`.
    pub fn measure(&self, dist: &WeightDistribution) -> f64 {
        match self.interval {
            Some((lo, hi)) => dist.cdf(hi) - dist.cdf(lo),
            None => 0.0,
        }
    }
}

/// Computes `B_delta = F([l, r - 1])` where `[l, r] = {z : F'(z) >= delta}`.
///
/// Requires `F'` to be unimodal, so that its infimum over `[z, z + 1]` is
/// `min(F'(z), F'(z + 1))`; this holds for the built-in families.
pub fn nice_set(rep: &GaussianRepresentation, delta: f64) -> Result<NiceSet> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    let empty = NiceSet {
        delta,
        interval: None,
    };
    let span = Z_CLAMP + 1.0;
    // golden-section search for the mode of F'
    let (mut lo, mut hi) = (-span, span);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-12 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if rep.derivative(x1) < rep.derivative(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let mode = 0.5 * (lo + hi);
    if rep.derivative(mode) < delta {
        return Ok(empty);
    }
    let bisect = |mut inside: f64, mut outside: f64| {
        if rep.derivative(outside) >= delta {
            return outside;
        }
        while (inside - outside).abs() > 1e-13 {
            let mid = 0.5 * (inside + outside);
            if rep.derivative(mid) >= delta {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let left = bisect(mode, -span);
    let right = bisect(mode, span);
    if right - 1.0 < left {
        return Ok(empty);
    }
    Ok(NiceSet {
        delta,
        interval: Some((rep.push(left), rep.push(right - 1.0))),
    })
}

/// Read-only access to edge weights.
pub trait EdgeWeights: Sync {
    fn weight_raw(&self, base: &[i64], axis: usize) -> f64;

    /// Support `[a, b]` containing every weight.
    fn support(&self) -> (f64, f64);

    fn weight(&self, e: &Edge) -> f64 {
        self.weight_raw(e.base().coords(), e.axis())
    }
}

impl<W: EdgeWeights + ?Sized> EdgeWeights for &W {
    fn weight_raw(&self, base: &[i64], axis: usize) -> f64 {
        (**self).weight_raw(base, axis)
    }
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
}

/// The i.i.d. random environment `(t_e)`, realised lazily from a seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeEnvironment {
    pub distribution: WeightDistribution,
    pub master_seed: u64,
    /// Optional enumeration region; weights are defined on all of Z^d.
    pub region: Option<ConfinementRegion>,
}

impl EdgeEnvironment {
    pub fn new(distribution: WeightDistribution, master_seed: u64) -> Self {
        EdgeEnvironment {
            distribution,
            master_seed,
            region: None,
        }
    }

    pub fn with_region(mut self, region: ConfinementRegion) -> Self {
        self.region = Some(region);
        self
    }

    /// Edges with both endpoints in the region, canonically sorted.
    pub fn region_edges(&self) -> Vec<Edge> {
        let Some(region) = &self.region else {
            return Vec::new();
        };
        let (lo, hi) = region.bounding_box();
        let mut out = Vec::new();
        for_each_in_box(&lo, &hi, |c| {
            if region.contains_coords(c) {
                for axis in 0..c.len() {
                    let mut h = c.to_vec();
                    h[axis] += 1;
                    if region.contains_coords(&h) {
                        out.push(Edge::from_raw(c, axis));
                    }
                }
            }
        });
        out
    }
}

impl EdgeWeights for EdgeEnvironment {
    #[inline]
    fn weight_raw(&self, base: &[i64], axis: usize) -> f64 {
        self.distribution
            .sample_bits(rng::edge_hash(self.master_seed, base, axis))
    }

    fn support(&self) -> (f64, f64) {
        (self.distribution.a, self.distribution.b)
    }
}

/// `t_e`.
pub fn sample_weight(env: &EdgeEnvironment, e: &Edge) -> f64 {
    env.weight(e)
}

/// The environment `t_e^+ = g_{tau_e}(t_e)`, evaluated lazily over a base.
#[derive(Clone, Copy, Debug)]
pub struct PerturbedEnvironment<'a, W> {
    base: &'a W,
    rep: &'a GaussianRepresentation,
    tau: &'a HashMap<Edge, f64>,
}

impl<W: EdgeWeights> PerturbedEnvironment<'_, W> {
    pub fn tau_of(&self, e: &Edge) -> f64 {
        self.tau.get(e).copied().unwrap_or(0.0)
    }
}

impl<W: EdgeWeights> EdgeWeights for PerturbedEnvironment<'_, W> {
    #[inline]
    fn weight_raw(&self, base: &[i64], axis: usize) -> f64 {
        let w = self.base.weight_raw(base, axis);
        if self.tau.is_empty() {
            return w;
        }
        match self.tau.get(&Edge::from_raw(base, axis)) {
            Some(&t) => self.rep.gplus_unchecked(t, w),
            None => w,
        }
    }

    fn support(&self) -> (f64, f64) {
        self.base.support()
    }
}

/// Wraps `env` with the perturbation field `tau`; the base is untouched.
pub fn perturb_environment<'a, W: EdgeWeights>(
    env: &'a W,
    rep: &'a GaussianRepresentation,
    tau: &'a HashMap<Edge, f64>,
) -> Result<PerturbedEnvironment<'a, W>> {
    for &t in tau.values() {
        check_tau(t)?;
    }
    Ok(PerturbedEnvironment { base: env, rep, tau })
}

/// The environment translated by `shift`: `weight(e) = inner.weight(e - shift)`.
#[derive(Clone, Debug)]
pub struct ShiftedEnvironment<W> {
    inner: W,
    shift: Point,
}

impl<W: EdgeWeights> ShiftedEnvironment<W> {
    pub fn new(inner: W, shift: Point) -> Self {
        ShiftedEnvironment { inner, shift }
    }
}

impl<W: EdgeWeights> EdgeWeights for ShiftedEnvironment<W> {
    fn weight_raw(&self, base: &[i64], axis: usize) -> f64 {
        let mut c = [0i64; crate::lattice::MAX_DIM];
        for (i, (&x, &s)) in base.iter().zip(self.shift.coords()).enumerate() {
            c[i] = x - s;
        }
        self.inner.weight_raw(&c[..base.len()], axis)
    }

    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
}

/// Explicit weights for hand-built examples; unlisted edges get `default`.
#[derive(Clone, Debug)]
pub struct TableWeights {
    table: HashMap<Edge, f64>,
    default: f64,
    support: (f64, f64),
}

impl TableWeights {
    pub fn new(default: f64, support: (f64, f64)) -> Self {
        TableWeights {
            table: HashMap::new(),
            default,
            support,
        }
    }

    pub fn set(&mut self, e: Edge, w: f64) -> &mut Self {
        self.table.insert(e, w);
        self
    }
}

impl EdgeWeights for TableWeights {
    fn weight_raw(&self, base: &[i64], axis: usize) -> f64 {
        self.table
            .get(&Edge::from_raw(base, axis))
            .copied()
            .unwrap_or(self.default)
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// Outcome of one Monte Carlo check of the Gaussian-shift probability bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MwEstimate {
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs - rhs) / sigma`; infinite when the estimate has no variance.
    pub margin_sigmas: f64,
    pub prob_unperturbed: f64,
    pub samples: u64,
}

impl MwEstimate {
    pub fn holds_within(&self, sigmas: f64) -> bool {
        self.margin_sigmas >= -sigmas
    }
}

const MW_CHUNK: u64 = 1 << 15;

/// Estimates both sides of
/// `P((g_{tau_i}(X_i))_i in A) >= exp(-p|tau|^2/(2(p-1))) P(X in A)^p`
/// from one set of samples (common random numbers).
pub fn verify_mw_inequality<E>(
    rep: &GaussianRepresentation,
    tau: &[f64],
    event: E,
    p: f64,
    samples: u64,
    seed: u64,
) -> Result<MwEstimate>
where
    E: Fn(&[f64]) -> bool + Sync,
{
    if !(p > 1.0) {
        return Err(Error::param(format!("Hoelder exponent must exceed 1, got {p}")));
    }
    if samples == 0 {
        return Err(Error::param("samples must be positive"));
    }
    if tau.is_empty() {
        return Err(Error::param("tau must have at least one coordinate"));
    }
    for &t in tau {
        check_tau(t)?;
    }
    let n = tau.len();
    let chunks = samples.div_ceil(MW_CHUNK);
    let counts: Vec<[u64; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream_rng(seed, c);
            let len = MW_CHUNK.min(samples - c * MW_CHUNK);
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            let mut acc = [0u64; 3];
            for _ in 0..len {
                for i in 0..n {
                    x[i] = rep.dist.sample_bits(r.random::<u64>());
                    y[i] = rep.gplus_unchecked(tau[i], x[i]);
                }
                let ix = event(&x);
                let iy = event(&y);
                acc[0] += ix as u64;
                acc[1] += iy as u64;
                acc[2] += (ix && iy) as u64;
            }
            acc
        })
        .collect();
    let (nx, ny, nxy) = counts
        .iter()
        .fold((0u64, 0u64, 0u64), |s, c| (s.0 + c[0], s.1 + c[1], s.2 + c[2]));
    let nf = samples as f64;
    let px = nx as f64 / nf;
    let py = ny as f64 / nf;
    let pxy = nxy as f64 / nf;
    let tau_sq: f64 = tau.iter().map(|t| t * t).sum();
    let factor = (-p * tau_sq / (2.0 * (p - 1.0))).exp();
    let rhs = factor * px.powf(p);
    // delta method on D = 1{Y in A} - k 1{X in A}, k = d rhs / d px
    let k = factor * p * px.powf(p - 1.0);
    let var = py * (1.0 - py) + k * k * px * (1.0 - px) - 2.0 * k * (pxy - px * py);
    let sigma = (var.max(0.0) / nf).sqrt();
    let diff = py - rhs;
    let margin = if sigma > 0.0 {
        diff / sigma
    } else if diff >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(MwEstimate {
        lhs: py,
        rhs,
        margin_sigmas: margin,
        prob_unperturbed: px,
        samples,
    })
}

/// Indicator of an event on R^n.
pub type EventFn = Box<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A named event on R^n used by the inequality battery.
pub struct MwEvent {
    pub name: String,
    pub predicate: EventFn,
}

/// Twenty events over `[a, b]^n`: half-spaces in both directions, boxes,
/// unions, coordinate-wise and order-statistic conditions.
pub fn mw_event_battery(dist: &WeightDistribution, n: usize) -> Vec<MwEvent> {
    let (a, b) = (dist.a, dist.b);
    let w = b - a;
    let nf = n as f64;
    let q = move |t: f64| a + t * w;
    let mut ev: Vec<MwEvent> = Vec::new();
    let mut push = |name: String, f: EventFn| {
        ev.push(MwEvent { name, predicate: f })
    };
    for t in [0.3, 0.5, 0.7, 0.9] {
        push(format!("sum>={t}"), Box::new(move |x: &[f64]| x.iter().sum::<f64>() >= nf * q(t)));
    }
    for t in [0.2, 0.5, 0.8] {
        push(format!("sum<={t}"), Box::new(move |x: &[f64]| x.iter().sum::<f64>() <= nf * q(t)));
    }
    push("x0>=0.6".into(), Box::new(move |x: &[f64]| x[0] >= q(0.6)));
    push("x0<=0.3".into(), Box::new(move |x: &[f64]| x[0] <= q(0.3)));
    push(
        "box[0.2,0.6]".into(),
        Box::new(move |x: &[f64]| x.iter().all(|&v| v >= q(0.2) && v <= q(0.6))),
    );
    push(
        "box[0.5,1]".into(),
        Box::new(move |x: &[f64]| x.iter().all(|&v| v >= q(0.5))),
    );
    push(
        "box[0.4,0.45]".into(),
        Box::new(move |x: &[f64]| x.iter().all(|&v| v >= q(0.4) && v <= q(0.45))),
    );
    push(
        "union-corners".into(),
        Box::new(move |x: &[f64]| x.iter().all(|&v| v <= q(0.25)) || x.iter().all(|&v| v >= q(0.75))),
    );
    push(
        "union-bands".into(),
        Box::new(move |x: &[f64]| {
            let m = x.iter().sum::<f64>() / nf;
            (m >= q(0.1) && m <= q(0.2)) || (m >= q(0.6) && m <= q(0.7))
        }),
    );
    push("max>=0.95".into(), Box::new(move |x: &[f64]| x.iter().any(|&v| v >= q(0.95))));
    push("min<=0.05".into(), Box::new(move |x: &[f64]| x.iter().any(|&v| v <= q(0.05))));
    push(
        "alt-halfspace".into(),
        Box::new(move |x: &[f64]| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| if i % 2 == 0 { v - a } else { -(v - a) })
                .sum();
            s >= 0.1 * w
        }),
    );
    push(
        "first-dominates".into(),
        Box::new(move |x: &[f64]| x.iter().skip(1).all(|&v| x[0] >= v)),
    );
    push(
        "l2-ball".into(),
        Box::new(move |x: &[f64]| {
            x.iter().map(|&v| (v - q(0.5)).powi(2)).sum::<f64>() <= nf * (0.25 * w).powi(2)
        }),
    );
    push("full".into(), Box::new(|_: &[f64]| true));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> GaussianRepresentation {
        GaussianRepresentation::new(WeightDistribution::uniform(1.0, 2.0).unwrap())
    }

    #[test]
    fn distribution_round_trip() {
        for dist in [
            WeightDistribution::uniform(1.0, 2.0).unwrap(),
            WeightDistribution::truncated_linear(0.5, 3.0, 2.0).unwrap(),
            WeightDistribution::truncated_linear(1.0, 2.0, -0.7).unwrap(),
        ] {
            assert_eq!(dist.cdf(dist.a), 0.0);
            assert_eq!(dist.cdf(dist.b), 1.0);
            for i in 0..=1000 {
                let x = dist.a + (dist.b - dist.a) * i as f64 / 1000.0;
                assert!((dist.quantile(dist.cdf(x)) - x).abs() < 1e-12);
                assert!(dist.density(x) >= dist.alpha() - 1e-15);
            }
        }
    }

    #[test]
    fn truncated_linear_density_integrates_to_one() {
        let dist = WeightDistribution::truncated_linear(1.0, 2.0, 3.0).unwrap();
        let n = 100_000;
        let h = 1.0 / n as f64;
        let integral: f64 = (0..n).map(|i| dist.density(1.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((integral - 1.0).abs() < 1e-9);
        let mean: f64 = (0..n)
            .map(|i| {
                let x = 1.0 + (i as f64 + 0.5) * h;
                x * dist.density(x) * h
            })
            .sum();
        assert!((mean - dist.mean()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_supports() {
        assert!(WeightDistribution::uniform(0.0, 1.0).is_err());
        assert!(WeightDistribution::uniform(2.0, 1.0).is_err());
        assert!(WeightDistribution::truncated_linear(1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn gplus_examples() {
        let rep = uniform();
        let id = rep.map(0.0).unwrap();
        for w in [1.0, 1.3, 1.5, 2.0] {
            assert_eq!(gplus(&id, w).unwrap(), w);
        }
        let m = rep.map(0.5).unwrap();
        // 1 + Phi(0.5), Phi(0.5) = 0.691462461274013
        assert!((gplus(&m, 1.5).unwrap() - 1.691_462_461_274_013).abs() < 1e-12);
        assert_eq!(gplus(&m, 2.0).unwrap(), 2.0);
        assert!(gplus(&m, 2.5).is_err());
        assert!(rep.map(1.5).is_err());
    }

    #[test]
    fn c0_dominates_derivative() {
        let rep = uniform();
        assert!(rep.c0() >= normal_pdf(0.0) - 1e-15);
        for i in 0..2000 {
            let z = -9.0 + 18.0 * i as f64 / 2000.0;
            for s in [1e-3, 0.1, 0.5, 1.0] {
                assert!(rep.push(z + s) - rep.push(z) <= rep.c0() * s + 1e-15);
            }
        }
    }

    #[test]
    fn nice_set_uniform_value() {
        let rep = uniform();
        let b = nice_set(&rep, 0.1).unwrap();
        let (lo, hi) = b.interval.unwrap();
        // phi(z) = 0.1 at |z| = 1.663560..., interval [-z*, z* - 1] in Gaussian space
        let zs = (-2.0 * (0.1 * (2.0 * std::f64::consts::PI).sqrt()).ln()).sqrt();
        assert!((lo - (1.0 + normal_cdf(-zs))).abs() < 1e-9);
        assert!((hi - (1.0 + normal_cdf(zs - 1.0))).abs() < 1e-9);
        assert!((lo - 1.048).abs() < 1e-3 && (hi - 1.747).abs() < 1e-3);
        assert!((b.measure(rep.distribution()) - 0.699).abs() < 2e-3);
    }

    #[test]
    fn nice_set_limits() {
        let rep = uniform();
        let mut last = 0.0;
        for delta in [0.2, 0.1, 0.05, 0.01] {
            let g = nice_set(&rep, delta).unwrap().measure(rep.distribution());
            assert!(g >= last);
            last = g;
        }
        assert!(last > 0.95);
        assert!(nice_set(&rep, rep.c0() * 1.01).unwrap().is_empty());
        assert!(nice_set(&rep, 0.0).is_err());
    }

    #[test]
    fn perturbation_is_local_and_monotone() {
        let rep = uniform();
        let env = EdgeEnvironment::new(WeightDistribution::default(), 5);
        let empty = HashMap::new();
        let same = perturb_environment(&env, &rep, &empty).unwrap();
        let e = Edge::new(Point::new(&[0, 0]).unwrap(), 0).unwrap();
        let f = Edge::new(Point::new(&[1, 0]).unwrap(), 1).unwrap();
        assert_eq!(same.weight(&e), env.weight(&e));
        let mut tau = HashMap::new();
        tau.insert(e.clone(), 1.0);
        let pert = perturb_environment(&env, &rep, &tau).unwrap();
        let inc = pert.weight(&e) - env.weight(&e);
        assert!(inc >= 0.0 && inc <= rep.c0());
        assert_eq!(pert.weight(&f), env.weight(&f));
        tau.insert(f, 1.5);
        assert!(perturb_environment(&env, &rep, &tau).is_err());
    }

    #[test]
    fn environment_is_order_independent() {
        let o = Point::new(&[0, 0]).unwrap();
        let v = Point::new(&[4, 1]).unwrap();
        let region = crate::lattice::confinement_region(&o, &v, 1.0, 2.0).unwrap();
        let env = EdgeEnvironment::new(WeightDistribution::default(), 99).with_region(region);
        let edges = env.region_edges();
        let fwd: Vec<f64> = edges.iter().map(|e| env.weight(e)).collect();
        let mut rev: Vec<f64> = edges.iter().rev().map(|e| env.weight(e)).collect();
        rev.reverse();
        assert_eq!(fwd, rev);
        let bigger = EdgeEnvironment::new(WeightDistribution::default(), 99);
        assert!(edges.iter().all(|e| bigger.weight(e) == env.weight(e)));
    }

    #[test]
    fn shifted_environment_translates_keys() {
        let env = EdgeEnvironment::new(WeightDistribution::default(), 3);
        let h = Point::new(&[2, -1]).unwrap();
        let sh = ShiftedEnvironment::new(&env, h.clone());
        let e = Edge::new(Point::new(&[5, 7]).unwrap(), 1).unwrap();
        assert_eq!(sh.weight(&e.translate(&h)), env.weight(&e));
    }

    #[test]
    fn mw_trivial_cases() {
        let rep = uniform();
        let est = verify_mw_inequality(&rep, &[0.0, 0.0], |x: &[f64]| x[0] > 1.5, 2.0, 50_000, 1).unwrap();
        assert_eq!(est.lhs, est.prob_unperturbed);
        assert!(est.lhs >= est.rhs);
        let full = verify_mw_inequality(&rep, &[0.7], |_: &[f64]| true, 1.5, 1000, 2).unwrap();
        assert_eq!(full.lhs, 1.0);
        assert!(full.margin_sigmas.is_infinite() && full.margin_sigmas > 0.0);
        assert!(verify_mw_inequality(&rep, &[0.1], |_: &[f64]| true, 1.0, 10, 0).is_err());
        assert!(verify_mw_inequality(&rep, &[0.1], |_: &[f64]| true, 2.0, 0, 0).is_err());
    }

    #[test]
    fn battery_has_twenty_events() {
        assert_eq!(mw_event_battery(&WeightDistribution::default(), 3).len(), 20);
    }
}
