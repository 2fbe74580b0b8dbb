//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the lines always reach the console.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::Rational64;

use hyperfrac::hypermetric::RhoOracle;
use hyperfrac::operators::{t_gamma_apply, t_gamma_apply_fast, FunctionSpec};
use hyperfrac::space::SpaceConfig;
use hyperfrac::verify::{
    check_chains, check_decomposition, check_lemma11, check_lemma21, check_prop32a, check_prop32b, check_sandwich,
    check_theorem12, CheckRecord, Tolerances, TrialConfig,
};

type Outcome = Result<Vec<String>, String>;

fn spaces(list: &[&str]) -> Vec<hyperfrac::Space> {
    list.iter().map(|s| s.parse::<SpaceConfig>().unwrap().build::<f64>().unwrap()).collect()
}

fn require(records: &[CheckRecord]) -> Outcome {
    let mut notes = Vec::new();
    for r in records {
        if r.is_failure() {
            return Err(format!("{}: {}", r.name, r.witness.clone().unwrap_or_default()));
        }
        notes.push(format!("{} margin {:.3e}", r.name, r.worst_margin));
    }
    Ok(notes)
}

const MAIN_SPACES: [&str; 4] = ["grid1d:512", "grid2d:64", "snowflake:512,2", "cantor:9,0.3333333333333333"];

fn sandwich() -> Outcome {
    let tol = Tolerances::default();
    let mut recs = Vec::new();
    for (k, space) in spaces(&MAIN_SPACES).iter().enumerate() {
        let rec = check_sandwich(space, 10_000, 100 + k as u64, &tol).map_err(|e| e.to_string())?;
        if rec.trials < 10_000 {
            return Err(format!("{}: only {} trials", rec.name, rec.trials));
        }
        recs.push(rec);
    }
    require(&recs)
}

fn lemma21() -> Outcome {
    let tol = Tolerances::default();
    let mut recs = Vec::new();
    for space in spaces(&MAIN_SPACES) {
        let rec = check_lemma21(&space, 5, 6, &tol).map_err(|e| e.to_string())?;
        if rec.trials != 30 * 2 {
            return Err(format!("{}: expected 30 inclusion checks and 30 brackets, got {}", rec.name, rec.trials));
        }
        recs.push(rec);
    }
    require(&recs)
}

fn lemma11() -> Outcome {
    let space = &spaces(&["grid1d:256"])[0];
    let recs = check_lemma11(space, 5, &Tolerances::default()).map_err(|e| e.to_string())?;
    let growth = recs
        .iter()
        .find_map(|r| r.measurements.get("growth"))
        .ok_or("no divergence record")?;
    let mut notes = require(&recs)?;
    notes.push(format!("alpha = 2 eta growth {growth:.3}"));
    Ok(notes)
}

fn prop32a() -> Outcome {
    let tol = Tolerances::default();
    let mut recs = Vec::new();
    for (k, space) in spaces(&MAIN_SPACES).iter().enumerate() {
        for frac in [0.5, 1.0, 1.5] {
            let seed = 200 + k as u64;
            recs.push(check_prop32a(space, frac * space.eta(), 10_000, seed, &tol).map_err(|e| e.to_string())?);
        }
    }
    require(&recs)
}

fn prop32b() -> Outcome {
    let space = &spaces(&["grid1d:128"])[0];
    let rec = check_prop32b(space, space.eta(), 20, 300, &Tolerances::default()).map_err(|e| e.to_string())?;
    require(&[rec])
}

fn decomposition() -> Outcome {
    let mut recs = Vec::new();
    for sigma in [0.25, 0.5, 0.75] {
        let rec = check_decomposition(sigma, 1000, 1e-12).map_err(|e| e.to_string())?;
        let err = ["omega", "a", "b", "c"]
            .iter()
            .map(|k| (rec.measurements[&format!("area_{k}")] - rec.measurements[&format!("area_{k}_analytic")]).abs())
            .fold(0.0, f64::max);
        if err > 2e-3 || rec.measurements["exceptions"] != 0.0 {
            return Err(format!("{}: area error {err:.2e}", rec.name));
        }
        recs.push(rec);
    }
    require(&recs)
}

fn chains() -> Outcome {
    let rec = check_chains(Rational64::new(1, 2), 1000, 400).map_err(|e| e.to_string())?;
    for key in ["points_a", "points_b", "points_c"] {
        if rec.measurements[key] < 1000.0 {
            return Err(format!("{key} = {}", rec.measurements[key]));
        }
    }
    require(&[rec])
}

fn theorem12() -> Outcome {
    let config = TrialConfig::default();
    let recs = check_theorem12(&config, 1.0, [4.0 / 3.0, 4.0 / 3.0, 2.0], 500).map_err(|e| e.to_string())?;
    let mut notes = require(&recs)?;
    for r in &recs {
        let keys = ["drift", "pair0_slope", "pair0_shift_minus", "pair0_shift_plus"];
        let shown: Vec<String> =
            keys.iter().filter_map(|k| r.measurements.get(*k).map(|v| format!("{k}={v:.4}"))).collect();
        notes.push(shown.join(" "));
    }
    Ok(notes)
}

fn evaluator() -> Outcome {
    let space = &spaces(&["grid1d:128"])[0];
    let oracle = RhoOracle::new(space);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let f = FunctionSpec::Random { seed: 2 * case }.sample::<f64>(space).unwrap();
        let g = FunctionSpec::Random { seed: 2 * case + 1 }.sample::<f64>(space).unwrap();
        let gamma = [0.5, 1.0, 1.5][case as usize % 3];
        let reference = t_gamma_apply(&oracle, gamma, &f, &g).map_err(|e| e.to_string())?;
        let runs: Vec<Vec<f64>> = [1, 2, 4]
            .iter()
            .map(|&w| t_gamma_apply_fast(&oracle, gamma, &f, &g, w).map(|t| t.into_values()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        if runs[1] != runs[0] || runs[2] != runs[0] {
            return Err(format!("case {case}: results differ across worker counts"));
        }
        for (a, b) in reference.values().iter().zip(&runs[0]) {
            let rel = (a - b).abs() / a.abs();
            worst = worst.max(rel);
            if rel > 1e-12 {
                return Err(format!("case {case}: relative difference {rel:e}"));
            }
        }
    }
    Ok(vec![format!("worst relative difference {worst:.2e}")])
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_hyperfrac"))
            .args(["verify", "--suite", "all", "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("run {run} exited with {}", status.status));
        }
        bodies.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    if bodies[0] != bodies[1] {
        return Err("report bodies differ".into());
    }
    Ok(vec![format!("{} identical bytes", bodies[0].len())])
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("1 sandwich bounds", Duration::from_secs(30), sandwich),
        ("2 section inclusions and measure bracket", Duration::from_secs(60), lemma21),
        ("3 J(x) bracket and divergence", Duration::from_secs(120), lemma11),
        ("4 kernel bound", Duration::from_secs(30), prop32a),
        ("5 operator upper bounds", Duration::from_secs(120), prop32b),
        ("6 region decomposition and areas", Duration::from_secs(30), decomposition),
        ("7 exact HLS chains", Duration::from_secs(10), chains),
        ("8 norm inequality evidence", Duration::from_secs(300), theorem12),
        ("9 evaluator equivalence", Duration::from_secs(120), evaluator),
        ("10 report determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(notes) if elapsed > budget => Err(format!("took {elapsed:.1?}, budget {budget:?} ({})", notes.len())),
            other => other,
        };
        match outcome {
            Ok(notes) => {
                println!("PASS criterion {name} ({elapsed:.2?})");
                for n in notes {
                    println!("       {n}");
                }
            }
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
