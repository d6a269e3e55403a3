//! The Gaussian push-forward of a weight law, the increasing maps g_tau and
//! the nice sets B_delta on which they gain at least delta * tau.

use fpp_lab::weights::{nice_set, GaussianRepresentation, WeightDistribution};

fn main() -> fpp_lab::Result<()> {
    for dist in [
        WeightDistribution::uniform(1.0, 2.0)?,
        WeightDistribution::truncated_linear(1.0, 3.0, 1.5)?,
    ] {
        let rep = GaussianRepresentation::new(dist);
        println!("{dist:?}");
        println!("  alpha = {:.4}, C0 = {:.4}", dist.alpha(), rep.c0());

        let g = rep.map(0.5)?;
        for w in [dist.a, 0.5 * (dist.a + dist.b), dist.b] {
            let up = g.apply(w)?;
            println!("  g_0.5({w:.3}) = {up:.6}, inverse back to {:.6}", g.inverse(up));
        }

        println!("  delta    B_delta              G(B_delta)");
        for delta in [0.01, 0.05, 0.1, 0.2, 0.4] {
            let b = nice_set(&rep, delta)?;
            match b.interval {
                Some((l, r)) => println!("  {delta:<8} [{l:.4}, {r:.4}]     {:.4}", b.measure(&dist)),
                None => println!("  {delta:<8} empty"),
            }
        }
    }
    Ok(())
}
