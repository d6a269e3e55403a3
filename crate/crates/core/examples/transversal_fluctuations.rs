//! How far point-to-point geodesics wander from the straight segment, and
//! the critical cylinder radius that half their vertices escape.

use fpp_lab::fluctuations::{critical_radius, fit_exponent, max_transversal_deviation, median, slab_distances};
use fpp_lab::influence::map_geodesics;
use fpp_lab::lattice::Point;
use fpp_lab::weights::WeightDistribution;

fn main() -> fpp_lab::Result<()> {
    let dist = WeightDistribution::default();
    let trials = 40;
    let mut pairs = Vec::new();
    println!("n     median max dev   c*");
    for n in [32i64, 64, 128, 256] {
        let v = Point::on_axis(2, n)?;
        let per: Vec<(f64, Vec<f64>)> = map_geodesics(&dist, &v, 11, 0, trials, |_, _, g| {
            (
                max_transversal_deviation(g, &v).unwrap(),
                slab_distances(g, &v, n as f64).unwrap(),
            )
        })?;
        let devs: Vec<f64> = per.iter().map(|p| p.0).collect();
        let dists: Vec<Vec<f64>> = per.into_iter().map(|p| p.1).collect();
        let nf = n as f64;
        let c_star = critical_radius(&dists, nf / 2.0) / nf.cbrt();
        let m = median(&devs);
        println!("{n:<5} {m:<16.3} {c_star:.4}");
        pairs.push((nf, m));
    }
    let fit = fit_exponent(&pairs)?;
    let (lo, hi) = fit.slope_ci();
    println!("xi estimate {:.3}, 95% interval [{lo:.3}, {hi:.3}]", fit.slope);
    Ok(())
}
