use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fpp_lab::experiment::{resolve_workers, run, ExperimentConfig, ExperimentKind};
use fpp_lab::Error;

/// Runs one first-passage-percolation experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "fpp-lab", version)]
struct Args {
    /// influence | fluctuation | coupling | ratio | validate
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to FPP_LAB_WORKERS, then all cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn load(args: &Args) -> Result<ExperimentConfig, Error> {
    let kind: ExperimentKind = args.kind.parse()?;
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut raw: serde_json::Value = serde_json::from_str(&text)?;
    let Some(obj) = raw.as_object_mut() else {
        return ExperimentConfig::from_json(&text);
    };
    obj.insert("kind".into(), kind.as_str().into());
    if let Some(s) = args.seed {
        obj.insert("master_seed".into(), s.into());
    }
    if let Some(t) = args.trials {
        obj.insert("trials".into(), t.into());
    }
    if let Some(o) = &args.out {
        obj.insert("output_dir".into(), o.to_string_lossy().into_owned().into());
    }
    ExperimentConfig::from_json(&raw.to_string())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let setup = load(&args).and_then(|cfg| Ok((resolve_workers(args.workers)?, cfg)));
    let (workers, cfg) = match setup {
        Ok(x) => x,
        Err(e) => {
            eprintln!("fpp-lab: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cfg, workers) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fpp-lab: {e}");
            return ExitCode::from(2);
        }
    };
    for v in &report.verdicts {
        let tag = match (v.passed, v.deterministic) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "warn",
        };
        println!("{tag}  {}  ({})", v.name, v.detail);
    }
    for f in &report.fits {
        println!("fit   {}: slope {:.4} [{:.4}, {:.4}]", f.name, f.slope, f.slope_ci.0, f.slope_ci.1);
    }
    println!(
        "{} trials in {:.2}s, output in {}",
        report.trials,
        report.wall_clock_secs,
        cfg.output_dir.display()
    );
    if report.invariant_failed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
