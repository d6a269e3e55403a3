//! Estimates the edge influences of gamma(0, v), thresholds them into
//! influence sets and evaluates the smooth-envelope ratio.

use fpp_lab::fluctuations::fit_exponent;
use fpp_lab::influence::{
    estimate_influence, influence_set, lp_sum, envelope_ratio, smooth_envelope, DEFAULT_EPSILON_GRID,
};
use fpp_lab::lattice::Point;
use fpp_lab::weights::WeightDistribution;

fn main() -> fpp_lab::Result<()> {
    let dist = WeightDistribution::default();
    let v = Point::new(&[32, 0])?;
    let field = estimate_influence(&dist, &v, 2000, 7)?;
    println!(
        "sum of influences {:.3} (|v|_1 = {}), {} edges ever visited",
        field.total_influence(),
        v.l1_norm(),
        field.hits.len()
    );
    println!("sum p^2 = {:.4}", lp_sum(&field, 2.0)?);

    let mut pairs = Vec::new();
    println!("eps     lower  point  upper");
    for eps in DEFAULT_EPSILON_GRID {
        let s = influence_set(&field, eps)?;
        println!("{eps:<6} {:>6} {:>6} {:>6}", s.lower.len(), s.point.len(), s.upper.len());
        pairs.push((1.0 / eps, s.point.len() as f64));
    }
    let fit = fit_exponent(&pairs)?;
    println!("|A_eps| ~ eps^-{:.3} (se {:.3})", fit.slope, fit.slope_stderr);

    let a = influence_set(&field, 0.05)?.point.edges;
    let q = smooth_envelope(&a, 32.0)?;
    println!(
        "envelope on {} edges, |q|_2 = {:.3}, R = {:.4}",
        q.values.len(),
        q.l2_norm(),
        envelope_ratio(&q, &field, 2)?
    );

    let mut out = Vec::new();
    field.write_csv(&mut out)?;
    let text = String::from_utf8_lossy(&out);
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
