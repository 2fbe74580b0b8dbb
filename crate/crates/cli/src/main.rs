use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperfrac::exponents::{lattice, region_classify, sigma_of, decomposition_check};
use hyperfrac::hypermetric::{RhoOracle, Triple, Witness};
use hyperfrac::operators::{riesz_apply, t_gamma_apply_fast, FunctionSpec, GridFunction};
use hyperfrac::space::{MetricMeasureSpace, SpaceConfig};
use hyperfrac::verify::{run_suite, Suite, TrialConfig};

#[derive(Parser, Debug)]
#[command(name = "hyperfrac", version, about = "Hypermetric fractional integrals on discretized metric measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Describe a space: size, constants, valid scale window.
    Space(SpaceArgs),
    /// Table of rho for seeded or explicit triples.
    Rho(RhoArgs),
    /// Apply T^gamma (or the Riesz potential with --alpha) to function specs.
    Apply(ApplyArgs),
    /// Lattice classification of the exponent regions, one CSV per sigma.
    Region(RegionArgs),
    /// Run verification suites and write a report.
    Verify(VerifyArgs),
    /// Summarize a report written by `verify`.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SpaceArgs {
    /// e.g. grid1d:256, grid:2,64,1, snowflake:512,2, cantor:9,0.3333
    #[arg(long)]
    space: SpaceConfig,
    /// Also list points and weights (CSV).
    #[arg(long)]
    points: bool,
}

#[derive(Args, Debug)]
struct RhoArgs {
    #[arg(long)]
    space: SpaceConfig,
    /// Number of seeded random triples.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Explicit triple `x,y,z` of point ids; repeatable. Replaces the random batch.
    #[arg(long = "triple", value_parser = parse_triple)]
    triples: Vec<Triple>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[arg(long)]
    space: SpaceConfig,
    /// Order of T^gamma, in (0, 2 eta).
    #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
    gamma: Option<f64>,
    /// Order of the Riesz potential, in (0, eta); applies to --f only.
    #[arg(long)]
    alpha: Option<f64>,
    /// constant:c, indicator:a,b, gaussian:center,width, random:seed or cell:id
    #[arg(long)]
    f: FunctionSpec,
    #[arg(long, default_value = "constant:1")]
    g: FunctionSpec,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Repeatable; each value in (0, 1).
    #[arg(long)]
    sigma: Vec<f64>,
    /// Derive sigma = (2 eta - gamma) / (2 eta) instead; needs --gamma.
    #[arg(long, requires = "gamma")]
    eta: Option<f64>,
    #[arg(long, requires = "eta")]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 400)]
    grid: usize,
    #[arg(long, default_value_t = 1e-12)]
    margin: f64,
    /// Output directory [env: HYPERFRAC_OUT, default: hyperfrac-out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// all, or a comma-separated list of sandwich, lemma21, lemma11, prop32, region, theorem12, search
    #[arg(long, default_value = "all")]
    suite: String,
    /// Overrides the seed from --config.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with trial parameters; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [env: HYPERFRAC_OUT, default: hyperfrac-out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A report.json, or the directory holding one.
    input: PathBuf,
    /// List every record, not only failures.
    #[arg(long)]
    all: bool,
}

/// Bad input, reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_triple(s: &str) -> Result<Triple, String> {
    let ids: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    match ids[..] {
        [x, y, z] => Ok(Triple::new(x, y, z)),
        _ => Err(format!("`{s}`: expected three ids x,y,z")),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("HYPERFRAC_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hyperfrac-out"))
}

fn build(config: &SpaceConfig) -> anyhow::Result<MetricMeasureSpace<f64>> {
    config.build::<f64>().map_err(|e| usage(format!("space `{config}`: {e}")))
}

fn emit(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn coords(p: &[f64]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_space(args: SpaceArgs) -> anyhow::Result<()> {
    let space = build(&args.space)?;
    let (lo, hi) = space.valid_window();
    let desc = serde_json::json!({
        "space": args.space,
        "points": space.len(),
        "dim": space.dim(),
        "kappa": space.kappa(),
        "eta": space.eta(),
        "ahlfors_lower": space.ahlfors_lower(),
        "ahlfors_upper": space.ahlfors_upper(),
        "diameter": space.diameter(),
        "min_distance": space.min_distance(),
        "total_measure": space.total_measure(),
        "valid_window": [lo, hi],
    });
    if args.points {
        let rows = (0..space.len()).map(|i| vec![i.to_string(), coords(space.point(i)), space.weight(i).to_string()]);
        emit(None, &to_csv(&["id", "coords", "weight"], rows)?)
    } else {
        emit(None, &format!("{}\n", serde_json::to_string_pretty(&desc)?))
    }
}

fn cmd_rho(args: RhoArgs) -> anyhow::Result<()> {
    let space = build(&args.space)?;
    let oracle = RhoOracle::new(&space);
    let triples = if args.triples.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let n = space.len();
        (0..args.count)
            .map(|_| Triple::new(rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)))
            .collect()
    } else {
        args.triples
    };
    let mut rows = Vec::with_capacity(triples.len());
    for t in triples {
        let res = oracle.evaluate(t).map_err(|e| usage(e.to_string()))?;
        let witness = match &res.witness {
            Witness::Point(id) => format!("point {id}"),
            Witness::Coords(c) => coords(c),
        };
        rows.push((t, res, witness));
    }
    let body = match args.format {
        Format::Csv => {
            let header = ["x", "y", "z", "x_coords", "y_coords", "z_coords", "rho", "witness", "max_pairwise", "method"];
            let rows = rows.iter().map(|(t, res, witness)| {
                vec![
                    t.x.to_string(),
                    t.y.to_string(),
                    t.z.to_string(),
                    coords(space.point(t.x)),
                    coords(space.point(t.y)),
                    coords(space.point(t.z)),
                    res.value.to_string(),
                    witness.clone(),
                    res.max_pairwise.to_string(),
                    res.method.as_str().to_string(),
                ]
            });
            to_csv(&header, rows)?
        }
        Format::Json => {
            let list: Vec<_> = rows
                .iter()
                .map(|(t, res, _)| serde_json::json!({ "triple": [t.x, t.y, t.z], "result": res }))
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&list)?)
        }
    };
    emit(args.out.as_deref(), &body)
}

fn cmd_apply(args: ApplyArgs) -> anyhow::Result<()> {
    let space = build(&args.space)?;
    let bad = |e: hyperfrac::Error| usage(e.to_string());
    let f = args.f.sample::<f64>(&space).map_err(bad)?;
    let out: GridFunction<f64> = match (args.gamma, args.alpha) {
        (Some(gamma), _) => {
            let g = args.g.sample::<f64>(&space).map_err(bad)?;
            t_gamma_apply_fast(&RhoOracle::new(&space), gamma, &f, &g, args.workers).map_err(bad)?
        }
        (None, Some(alpha)) => riesz_apply(&space, alpha, &f).map_err(bad)?,
        (None, None) => unreachable!("clap requires one of --gamma, --alpha"),
    };
    let body = match args.format {
        Format::Csv => {
            let rows = out.values().iter().enumerate().map(|(i, v)| vec![i.to_string(), coords(space.point(i)), v.to_string()]);
            to_csv(&["id", "coords", "value"], rows)?
        }
        Format::Json => format!("{}\n", serde_json::to_string_pretty(out.values())?),
    };
    emit(args.out.as_deref(), &body)
}

fn cmd_region(args: RegionArgs) -> anyhow::Result<()> {
    let mut sigmas = args.sigma.clone();
    if let (Some(eta), Some(gamma)) = (args.eta, args.gamma) {
        sigmas.push(sigma_of(eta, gamma).map_err(|e| usage(e.to_string()))?.sigma);
    }
    for &sigma in &sigmas {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(usage(format!("sigma must lie in (0, 1), got {sigma}")));
        }
    }
    let mut reports = Vec::new();
    for &sigma in &sigmas {
        reports.push(decomposition_check(sigma, args.grid, args.margin).map_err(|e| usage(e.to_string()))?);
    }
    if sigmas.is_empty() {
        return Ok(());
    }
    let dir = out_dir(args.out);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut ok = true;
    for (sigma, report) in sigmas.iter().zip(&reports) {
        let rows = lattice(args.grid)
            .map(|(r, s)| vec![r.to_string(), s.to_string(), region_classify(&r, &s, sigma, &0.0).tags.to_string()]);
        let csv = to_csv(&["r", "s", "tags"], rows)?;
        let path = dir.join(format!("region_sigma_{sigma}.csv"));
        fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
        ok &= report.holds();
        println!(
            "sigma={sigma} grid={} decomposition={} exceptions={} overlaps={} area omega={:.6} ({:.6}) A={:.6} ({:.6}) B={:.6} ({:.6}) C={:.6} ({:.6}) -> {}",
            report.grid_n,
            if report.holds() { "ok" } else { "FAILED" },
            report.exceptions,
            report.overlaps,
            report.areas.omega,
            report.analytic.omega,
            report.areas.a,
            report.analytic.a,
            report.areas.b,
            report.analytic.b,
            report.areas.c,
            report.analytic.c,
            path.display()
        );
    }
    let summary: Vec<_> = reports.iter().map(|r| serde_json::to_value(r)).collect::<Result<_, _>>()?;
    fs::write(dir.join("region_summary.json"), format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    if !ok {
        bail!(CheckFailure);
    }
    Ok(())
}

/// Some asserted check failed; exit code 1.
#[derive(Debug)]
struct CheckFailure;

impl std::fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("one or more checks failed")
    }
}

impl std::error::Error for CheckFailure {}

fn parse_suites(s: &str) -> anyhow::Result<Vec<Suite>> {
    if s.trim() == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    s.split(',').map(|name| name.trim().parse::<Suite>().map_err(|e| usage(e.to_string()))).collect()
}

fn load_config(path: Option<&Path>) -> anyhow::Result<TrialConfig> {
    let Some(path) = path else {
        return Ok(TrialConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<()> {
    let suites = parse_suites(&args.suite)?;
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    let dir = out_dir(args.out);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), toml::to_string(&config)?)?;

    let (report, timings) = run_suite(&config, &suites).map_err(|e| usage(e.to_string()))?;
    fs::write(dir.join("report.json"), format!("{}\n", report.to_json()))?;
    let rows = report.records.iter().map(|r| {
        vec![
            r.name.clone(),
            r.asserted.to_string(),
            r.passed.to_string(),
            r.worst_margin.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ]
    });
    let margins = to_csv(&["name", "asserted", "passed", "worst_margin", "trials", "seed"], rows)?;
    fs::write(dir.join("margins.csv"), margins)?;
    let rows = timings.iter().map(|t| vec![t.suite.to_string(), format!("{:.3}", t.seconds)]);
    fs::write(dir.join("timings.csv"), to_csv(&["suite", "seconds"], rows)?)?;

    for r in &report.records {
        let verdict = match (r.asserted, r.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("{verdict} {} (margin {:.3e}, {} trials)", r.name, r.worst_margin, r.trials);
        if r.is_failure() {
            if let Some(w) = &r.witness {
                println!("     witness: {w}");
            }
        }
    }
    let s = &report.summary;
    println!(
        "{} checks: {} passed, {} failed, {} evidence only; seed {}; report in {}",
        s.total,
        s.passed,
        s.failed,
        s.evidence_only,
        config.seed,
        dir.display()
    );
    if !report.all_passed() {
        bail!(CheckFailure);
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let path = if args.input.is_dir() { args.input.join("report.json") } else { args.input };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let report: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let records = report["records"].as_array().ok_or_else(|| usage(format!("{}: no records", path.display())))?;
    let mut failed = 0;
    for r in records {
        let asserted = r["asserted"].as_bool().unwrap_or(true);
        let passed = r["passed"].as_bool().unwrap_or(false);
        if asserted && !passed {
            failed += 1;
        }
        if args.all || (asserted && !passed) {
            let verdict = if !asserted { "INFO" } else if passed { "PASS" } else { "FAIL" };
            println!("{verdict} {}: {}", r["name"].as_str().unwrap_or("?"), r["statement"].as_str().unwrap_or(""));
            if let Some(w) = r["witness"].as_str() {
                println!("     witness: {w}");
            }
        }
    }
    println!("{} records, {failed} failed (seed {})", records.len(), report["config"]["seed"]);
    if failed > 0 {
        bail!(CheckFailure);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Space(a) => cmd_space(a),
        Command::Rho(a) => cmd_rho(a),
        Command::Apply(a) => cmd_apply(a),
        Command::Region(a) => cmd_region(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailure>() => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e:#}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
