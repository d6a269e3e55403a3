//! Drives the orchestration layer: parse a JSON config, run it on a few
//! workers, write the artifacts, and merge two half-runs into the whole.

use fpp_lab::experiment::{execute, merge, run, ExperimentConfig};

const CONFIG: &str = r#"{
    "kind": "influence",
    "d": 2,
    "v": [24, 4],
    "trials": 400,
    "master_seed": 5,
    "epsilon_grid": [0.3, 0.2, 0.1, 0.05]
}"#;

fn main() -> fpp_lab::Result<()> {
    let mut cfg = ExperimentConfig::from_json(CONFIG)?;
    cfg.output_dir = std::env::temp_dir().join("fpp-lab-example");
    let whole = run(&cfg, 2)?;
    for v in &whole.verdicts {
        println!("{:<44} {}", v.name, if v.passed { "ok" } else { "FAILED" });
    }
    for f in &whole.fits {
        println!("{}: slope {:.3}", f.name, f.slope);
    }
    println!("artifacts in {}", cfg.output_dir.display());

    let mut first = cfg.clone();
    first.trials = 150;
    let mut second = cfg.clone();
    second.first_trial = 150;
    second.trials = 250;
    let merged = merge(&[execute(&second, 1)?, execute(&first, 1)?])?;
    println!("split-and-merge equals the single run: {}", merged.tables == whole.tables);

    match ExperimentConfig::from_json(r#"{"kind": "ratio", "trials": 10, "n_grid": [16, -4]}"#) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
