//! Acceptance battery. Runs every criterion at full size and prints one
//! PASS/FAIL line each; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- 3 7` runs only the listed criteria.

use std::collections::BTreeSet;
use std::time::Instant;

use fpp_lab::experiment::{
    execute, gplus_contracts, merge, mw_battery, oracle_equivalence, run, ExperimentConfig, ExperimentKind, Payload,
    Tables,
};
use fpp_lab::fluctuations::fit_exponent;
use fpp_lab::influence::{estimate_influence, influence_set, smooth_envelope};
use fpp_lab::lattice::{Edge, Point};
use fpp_lab::perturbation::{run_couplings, CouplingBounds, TauField};
use fpp_lab::weights::{GaussianRepresentation, WeightDistribution};
use fpp_lab::Result;

struct Check {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Result<Check> {
    Ok(Check { passed, detail })
}

fn dist() -> WeightDistribution {
    WeightDistribution::default()
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn oracle() -> Result<Check> {
    let t = Instant::now();
    let a = oracle_equivalence(&dist(), 2, 4, 0..100)?;
    let b = oracle_equivalence(&dist(), 3, 3, 0..100)?;
    let secs = t.elapsed().as_secs_f64();
    check(
        a.mismatches == 0 && b.mismatches == 0 && secs < 60.0,
        format!(
            "4x4: {}/{} mismatches, 3x3x3: {}/{} mismatches, {secs:.1}s",
            a.mismatches, a.pairs, b.mismatches, b.pairs
        ),
    )
}

fn gplus() -> Result<Check> {
    let t = Instant::now();
    let rep = GaussianRepresentation::new(dist());
    let out = gplus_contracts(&rep, 100_000, &[0.01, 0.05, 0.1], 17)?;
    let secs = t.elapsed().as_secs_f64();
    let gain_bad: u64 = out.gains.iter().map(|g| g.violations).sum();
    let checked: Vec<u64> = out.gains.iter().map(|g| g.checked).collect();
    check(
        out.bound_violations == 0 && gain_bad == 0 && secs < 10.0,
        format!(
            "{} bound and {gain_bad} gain violations over {} samples (in B_delta: {checked:?}), {secs:.1}s",
            out.bound_violations, out.samples
        ),
    )
}

fn mw() -> Result<Check> {
    let t = Instant::now();
    let rep = GaussianRepresentation::new(dist());
    let rows = mw_battery(&rep, &[1.5, 2.0, 3.0], &[1, 2, 5], 1_000_000, 23)?;
    let secs = t.elapsed().as_secs_f64();
    let fails: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} p={} n={}", r.event, r.p, r.n))
        .collect();
    let worst = rows.iter().map(|r| r.margin_sigmas).fold(f64::INFINITY, f64::min);
    check(
        fails.is_empty() && rows.len() == 180 && secs < 300.0,
        format!(
            "{} cases, {} below -3 sigma {fails:?}, worst margin {worst:.2} sigma, {secs:.1}s",
            rows.len(),
            fails.len()
        ),
    )
}

fn coupling() -> Result<Check> {
    let t = Instant::now();
    let rep = GaussianRepresentation::new(dist());
    let v = Point::new(&[64, 0])?;
    let pilot = estimate_influence(&dist(), &v, 2000, 0xC0FFEE)?;
    let a = influence_set(&pilot, 0.05)?.point.edges;
    let tau = TauField::normalized(&smooth_envelope(&a, 64.0)?)?;
    let hs = [Point::new(&[0, 1])?, Point::new(&[0, 4])?, Point::new(&[4, 0])?];
    let delta = 0.05;
    let recs = run_couplings(&rep, &v, &hs, &tau, 1, 0..1000, delta)?;
    let bounds = CouplingBounds {
        c0: rep.c0(),
        b: dist().b,
        delta,
    };
    let bad: Vec<_> = recs.iter().filter(|r| !r.violations(&bounds).is_empty()).collect();
    let secs = t.elapsed().as_secs_f64();
    let gains = recs.iter().filter(|r| r.nice_gain > 0.0).count();
    check(
        bad.is_empty() && recs.len() >= 1000 && secs < 600.0,
        format!(
            "{} records over 3 shifts, {} with a violation, {gains} with a positive B_delta gain, {secs:.1}s",
            recs.len(),
            bad.len()
        ),
    )
}

fn influence() -> Result<Check> {
    let t = Instant::now();
    let v = Point::new(&[64, 0])?;
    let field = estimate_influence(&dist(), &v, 10_000, 31)?;
    let total = field.total_influence();
    let diag = estimate_influence(&dist(), &Point::new(&[1, 1])?, 10_000, 37)?;
    let e = Edge::new(Point::origin(2)?, 0)?;
    let p = diag.p_hat(&e);
    let sigma = (0.25f64 / 10_000.0).sqrt();
    let secs = t.elapsed().as_secs_f64();
    check(
        (64.0..=128.0).contains(&total) && (p - 0.5).abs() <= 3.0 * sigma && secs < 600.0,
        format!("sum p = {total:.3} in [64, 128]; p((0,0)+e0 | v=(1,1)) = {p:.4} (3 sigma = {:.4}), {secs:.1}s", 3.0 * sigma),
    )
}

fn slope_guard() -> Result<Check> {
    let t = Instant::now();
    let v = Point::new(&[128, 0])?;
    let field = estimate_influence(&dist(), &v, 20_000, 41)?;
    let mut pairs = Vec::new();
    let mut sizes = Vec::new();
    for eps in [0.3, 0.2, 0.1, 0.05, 0.02] {
        let n = influence_set(&field, eps)?.point.len();
        sizes.push((eps, n));
        pairs.push((1.0 / eps, n as f64));
    }
    let fit = fit_exponent(&pairs)?;
    let secs = t.elapsed().as_secs_f64();
    check(
        (1.5..=4.5).contains(&fit.slope) && secs < 3600.0,
        format!(
            "slope {:.3} (se {:.3}), |A_eps| = {sizes:?}, {secs:.1}s",
            fit.slope, fit.slope_stderr
        ),
    )
}

struct FluctuationRun {
    rows: Vec<(i64, f64, f64)>,
    xi: f64,
    xi_se: f64,
    secs: f64,
}

fn fluctuation_run() -> Result<FluctuationRun> {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Fluctuation, 200);
    cfg.n_grid = vec![32, 64, 128, 256, 512];
    cfg.ell_grid = vec![1.0];
    cfg.master_seed = 53;
    let report = execute(&cfg, workers())?;
    let Tables::Fluctuation(rows) = &report.tables else {
        unreachable!()
    };
    let fit = report
        .fit("median max deviation vs n")
        .ok_or_else(|| fpp_lab::Error::InvalidParameter("no deviation fit".into()))?;
    Ok(FluctuationRun {
        rows: rows.iter().map(|r| (r.n, r.median_max_dev, r.c_star)).collect(),
        xi: fit.slope,
        xi_se: fit.fit.slope_stderr,
        secs: t.elapsed().as_secs_f64(),
    })
}

fn xi(run: &FluctuationRun) -> Result<Check> {
    let med: Vec<(i64, f64)> = run.rows.iter().map(|r| (r.0, r.1)).collect();
    check(
        (0.5..=0.8).contains(&run.xi) && run.secs < 7200.0,
        format!(
            "xi = {:.3} (se {:.3}), median max deviation {med:?}, {:.1}s",
            run.xi, run.xi_se, run.secs
        ),
    )
}

fn c_star(run: &FluctuationRun) -> Result<Check> {
    let cs: Vec<(i64, f64)> = run
        .rows
        .iter()
        .filter(|r| [64, 128, 256].contains(&r.0))
        .map(|r| (r.0, r.2))
        .collect();
    let hi = cs.iter().map(|c| c.1).fold(0.0, f64::max);
    let lo = cs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    check(
        lo > 0.0,
        format!("c* = {cs:?}, max/min = {:.3} (within x2: {})", hi / lo, hi / lo < 2.0),
    )
}

fn ratio() -> Result<Check> {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Ratio, 10_000);
    cfg.n_grid = vec![32, 64, 128];
    cfg.epsilon_grid = vec![0.05];
    cfg.master_seed = 61;
    let report = execute(&cfg, workers())?;
    let Tables::Ratio { rows, max_over_min } = &report.tables else {
        unreachable!()
    };
    let rs: Vec<(i64, f64)> = rows.iter().map(|r| (r.n, r.ratio)).collect();
    let secs = t.elapsed().as_secs_f64();
    check(
        *max_over_min <= 3.0 && secs < 3600.0,
        format!("R = {rs:?}, max/min = {max_over_min:.3}, {secs:.1}s"),
    )
}

fn determinism() -> Result<Check> {
    let t = Instant::now();
    let dir = tempfile::tempdir().map_err(|source| fpp_lab::Error::Io {
        path: std::env::temp_dir(),
        source,
    })?;
    let mut cfg = ExperimentConfig::new(ExperimentKind::Influence, 10_000);
    cfg.v = Some(vec![32, 0]);
    cfg.master_seed = 71;
    cfg.output_dir = dir.path().join("run");
    let files = ["influence.csv", "influence.json", "report.json"];
    let read = |f: &str| std::fs::read(cfg.output_dir.join(f)).unwrap_or_default();
    let whole = run(&cfg, 1)?;
    let first: Vec<Vec<u8>> = files.iter().map(|f| read(f)).collect();
    run(&cfg, 4)?;
    let identical = files.iter().zip(&first).all(|(f, bytes)| !bytes.is_empty() && read(f) == *bytes);
    let parts: Vec<_> = (0..4)
        .map(|k| {
            let mut c = cfg.clone();
            c.first_trial = 2500 * k;
            c.trials = 2500;
            execute(&c, 16)
        })
        .collect::<Result<_>>()?;
    let merged = merge(&parts)?;
    let mut reversed = parts.clone();
    reversed.reverse();
    let merged_rev = merge(&reversed)?;
    let same = merged.payload == whole.payload && merged.tables == whole.tables && merged.config == whole.config;
    let commutes = merged_rev.payload == merged.payload;
    let trials = match &merged.payload {
        Payload::Influence(f) => f.trials,
        _ => 0,
    };
    let secs = t.elapsed().as_secs_f64();
    check(
        identical && same && commutes && secs < 300.0,
        format!(
            "repeat byte-identical: {identical}; 4x2500 merge equals 10^4 run: {same} ({trials} trials); order-free: {commutes}; {secs:.1}s"
        ),
    )
}

fn main() {
    let wanted: BTreeSet<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let on = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let mut results: Vec<(usize, &str, Result<Check>)> = Vec::new();
    let mut report = |k: usize, name: &'static str, r: Result<Check>| {
        match &r {
            Ok(c) => println!(
                "criterion {k:>2} {} {name}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.detail
            ),
            Err(e) => println!("criterion {k:>2} FAIL {name}: error: {e}"),
        }
        results.push((k, name, r));
    };
    if on(1) {
        report(1, "oracle equivalence", oracle());
    }
    if on(2) {
        report(2, "g+ contracts", gplus());
    }
    if on(3) {
        report(3, "probability transfer battery", mw());
    }
    if on(4) {
        report(4, "deterministic coupling inequalities", coupling());
    }
    if on(5) {
        report(5, "influence field sanity", influence());
    }
    if on(6) {
        report(6, "influence set slope guard", slope_guard());
    }
    if on(7) || on(8) {
        match fluctuation_run() {
            Ok(run) => {
                if on(7) {
                    report(7, "transversal exponent", xi(&run));
                }
                if on(8) {
                    report(8, "critical cylinder constant", c_star(&run));
                }
            }
            Err(e) => {
                let msg = e.to_string();
                if on(7) {
                    report(7, "transversal exponent", Err(fpp_lab::Error::InvalidParameter(msg.clone())));
                }
                if on(8) {
                    report(8, "critical cylinder constant", Err(fpp_lab::Error::InvalidParameter(msg)));
                }
            }
        }
    }
    if on(9) {
        report(9, "envelope ratio boundedness", ratio());
    }
    if on(10) {
        report(10, "determinism and merge", determinism());
    }
    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, _, r)| !matches!(r, Ok(c) if c.passed))
        .map(|(k, _, _)| *k)
        .collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failed {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
