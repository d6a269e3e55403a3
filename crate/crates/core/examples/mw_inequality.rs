//! Monte Carlo check of the probability-transfer bound
//! P(g_tau(X) in A) >= exp(-p |tau|^2 / (2(p - 1))) P(X in A)^p.

use fpp_lab::weights::{mw_event_battery, verify_mw_inequality, GaussianRepresentation, WeightDistribution};

fn main() -> fpp_lab::Result<()> {
    let dist = WeightDistribution::default();
    let rep = GaussianRepresentation::new(dist);
    let n = 3;
    let tau = vec![1.0 / (n as f64).sqrt(); n];
    println!("{:<16} {:>4} {:>9} {:>9} {:>9}", "event", "p", "lhs", "rhs", "sigmas");
    for (k, ev) in mw_event_battery(&dist, n).iter().enumerate() {
        for p in [1.5, 3.0] {
            let est = verify_mw_inequality(&rep, &tau, &ev.predicate, p, 50_000, k as u64)?;
            println!(
                "{:<16} {p:>4} {:>9.5} {:>9.5} {:>9.2}",
                ev.name, est.lhs, est.rhs, est.margin_sigmas
            );
        }
    }
    Ok(())
}
