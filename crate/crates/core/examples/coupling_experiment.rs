//! Couples an environment with its perturbation along an envelope profile
//! and checks the per-sample passage-time inequalities, the dyadic level of
//! f(gamma_0) and the tail transfer to translated endpoints.

use fpp_lab::influence::{estimate_influence, influence_set, smooth_envelope};
use fpp_lab::lattice::Point;
use fpp_lab::perturbation::{
    default_delta0, dyadic_level_search, run_couplings, tail_transfer_table, CouplingBounds, TauField,
};
use fpp_lab::weights::{GaussianRepresentation, WeightDistribution};

fn main() -> fpp_lab::Result<()> {
    let dist = WeightDistribution::default();
    let rep = GaussianRepresentation::new(dist);
    let v = Point::new(&[32, 0])?;
    let hs = [Point::new(&[0, 1])?, Point::new(&[0, 3])?, Point::new(&[3, 0])?];

    let pilot = estimate_influence(&dist, &v, 500, 99)?;
    let a = influence_set(&pilot, 0.05)?.point.edges;
    let tau = TauField::normalized(&smooth_envelope(&a, 32.0)?)?;
    let delta = default_delta0(&rep, 0.95)?;
    println!("tau on {} edges, |tau| = {:.3}, delta0 = {delta}", tau.len(), tau.norm());

    let trials = 200;
    let recs = run_couplings(&rep, &v, &hs, &tau, 1, 0..trials, delta)?;
    let bounds = CouplingBounds {
        c0: rep.c0(),
        b: dist.b,
        delta,
    };
    let bad = recs.iter().filter(|r| !r.violations(&bounds).is_empty()).count();
    println!("{} coupled samples, {bad} violate an inequality", recs.len());
    let gain: f64 = recs.iter().map(|r| r.t0_plus - r.t0).sum::<f64>() / recs.len() as f64;
    println!("mean T0+ - T0 = {gain:.4}");

    let t = trials as usize;
    let f0: Vec<f64> = recs[..t].iter().map(|r| r.f_gamma0).collect();
    let mu = f0.iter().sum::<f64>() / f0.len() as f64;
    println!("mu = {mu:.4}, dyadic level {:?}", dyadic_level_search(&f0, mu, 4)?);

    let fh: Vec<(Point, Vec<f64>)> = hs
        .iter()
        .enumerate()
        .map(|(k, h)| (h.clone(), recs[k * t..(k + 1) * t].iter().map(|r| r.f_gammah).collect()))
        .collect();
    let table = tail_transfer_table(mu, &f0, &fh)?;
    println!("P(f(gamma_0) >= mu) = {:.3}, best c1 = {:?}", table.p0, table.best_c1);
    Ok(())
}
