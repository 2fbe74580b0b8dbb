//! Seeded verification suites that turn each inequality into a reportable
//! check with margins and reproducible witnesses.

mod bounds;
mod norms;
mod region;

pub use bounds::{check_lemma11, check_lemma21, check_prop32a, check_prop32b, check_sandwich};
pub use norms::{adversarial_ratio_search, check_hls_linear, check_theorem12, SearchOutcome};
pub use region::{check_chains, check_decomposition};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::FunctionSpec;
use crate::space::SpaceConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack for algebraic identities and kernel bounds.
    pub rel_eq: f64,
    /// Relative slack for pointwise operator bounds.
    pub pointwise: f64,
    pub fit: f64,
    /// Allowed relative drift of a ratio across refinements.
    pub ratio_stability: f64,
    /// Allowed deviation of a dilation slope.
    pub scaling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel_eq: 1e-12, pointwise: 1e-10, fit: 0.05, ratio_stability: 0.15, scaling: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DilationConfig {
    pub grid: usize,
    /// Bump width at `lambda = 1`.
    pub width: f64,
    pub lambdas: Vec<f64>,
    /// Perturbation of `1/p3`.
    pub delta: f64,
}

impl Default for DilationConfig {
    fn default() -> Self {
        DilationConfig { grid: 512, width: 0.05, lambdas: vec![1.0, 2.0, 4.0], delta: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub sigmas: Vec<f64>,
    pub grid: usize,
    pub margin: f64,
    /// Rational points drawn per region for the chain identities.
    pub chain_points: usize,
    /// `sigma` for the chain identities, as `[numerator, denominator]`.
    pub chain_sigma: [i64; 2],
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig { sigmas: vec![0.25, 0.5, 0.75], grid: 1000, margin: 1e-12, chain_points: 1000, chain_sigma: [1, 2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub seed: u64,
    /// Random triples or pairs per space.
    pub trial_count: usize,
    /// Spaces for the sandwich and kernel bounds.
    pub spaces: Vec<SpaceConfig>,
    /// Spaces for the section inclusions and measure bracket.
    pub section_spaces: Vec<SpaceConfig>,
    /// Spaces for the `J(x)` bracket.
    pub integral_spaces: Vec<SpaceConfig>,
    /// Space for the pointwise operator bounds.
    pub operator_space: SpaceConfig,
    /// `gamma / eta` values.
    pub gamma_fractions: Vec<f64>,
    pub function_pairs: usize,
    /// `gamma` for the norm inequality on 1-D grids (`eta = 1`).
    pub gamma: f64,
    /// `(p1, p2, p3)` triples for the norm inequality.
    pub exponent_triples: Vec<[f64; 3]>,
    /// 1-D grid sizes for refinement stability.
    pub resolutions: Vec<usize>,
    /// Riesz order and input exponent for the linear check.
    pub hls: [f64; 2],
    pub dilation: DilationConfig,
    pub search_grid: usize,
    pub search_iterations: usize,
    pub region: RegionConfig,
    pub tolerances: Tolerances,
}

impl Default for TrialConfig {
    fn default() -> Self {
        let grid = |dim, n| SpaceConfig::Grid { dim, n, extent: 1.0 };
        TrialConfig {
            seed: 7,
            trial_count: 10_000,
            spaces: vec![
                grid(1, 512),
                grid(2, 64),
                SpaceConfig::Snowflake { n: 512, beta: 2.0 },
                SpaceConfig::Cantor { level: 9, ratio: 1.0 / 3.0 },
            ],
            section_spaces: vec![
                grid(1, 512),
                grid(2, 64),
                SpaceConfig::Snowflake { n: 512, beta: 2.0 },
                SpaceConfig::Cantor { level: 9, ratio: 1.0 / 3.0 },
            ],
            integral_spaces: vec![grid(1, 256), SpaceConfig::Snowflake { n: 256, beta: 2.0 }],
            operator_space: grid(1, 128),
            gamma_fractions: vec![0.5, 1.0, 1.5],
            function_pairs: 20,
            gamma: 1.0,
            exponent_triples: vec![[4.0 / 3.0, 4.0 / 3.0, 2.0]],
            resolutions: vec![64, 128, 256],
            hls: [0.5, 4.0 / 3.0],
            dilation: DilationConfig::default(),
            search_grid: 64,
            search_iterations: 50,
            region: RegionConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trial_count == 0 {
            return Err(Error::param("trial_count", "need at least one trial"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("rel_eq", t.rel_eq),
            ("pointwise", t.pointwise),
            ("fit", t.fit),
            ("ratio_stability", t.ratio_stability),
            ("scaling", t.scaling),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("tolerance must be positive, got {v}")));
            }
        }
        if self.resolutions.len() < 2 {
            return Err(Error::param("resolutions", "need at least two grid sizes"));
        }
        if self.dilation.lambdas.len() < 2 {
            return Err(Error::param("lambdas", "need at least two dilation factors"));
        }
        if self.search_iterations == 0 {
            return Err(Error::param("search_iterations", "need at least one iteration"));
        }
        if self.region.chain_sigma[1] <= 0 {
            return Err(Error::param("chain_sigma", "denominator must be positive"));
        }
        Ok(())
    }
}

/// Groups of checks selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sandwich,
    Lemma21,
    Lemma11,
    Prop32,
    Region,
    Theorem12,
    Search,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Sandwich,
        Suite::Lemma21,
        Suite::Lemma11,
        Suite::Prop32,
        Suite::Region,
        Suite::Theorem12,
        Suite::Search,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Sandwich => "sandwich",
            Suite::Lemma21 => "lemma21",
            Suite::Lemma11 => "lemma11",
            Suite::Prop32 => "prop32",
            Suite::Region => "region",
            Suite::Theorem12 => "theorem12",
            Suite::Search => "search",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}`")))
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The inequality or identity being tested.
    pub statement: String,
    pub passed: bool,
    /// Evidence-only records are reported but never fail the suite.
    pub asserted: bool,
    /// Smallest relative slack seen; negative beyond tolerance means failure.
    pub worst_margin: f64,
    pub trials: usize,
    pub seed: u64,
    /// Inputs reproducing the worst case or the first failure.
    pub witness: Option<String>,
    pub measurements: BTreeMap<String, f64>,
}

impl CheckRecord {
    pub(crate) fn new(name: impl Into<String>, statement: &str, seed: u64) -> Self {
        CheckRecord {
            name: name.into(),
            statement: statement.to_string(),
            passed: true,
            asserted: true,
            worst_margin: f64::INFINITY,
            trials: 0,
            seed,
            witness: None,
            measurements: BTreeMap::new(),
        }
    }

    /// Folds in `lhs <= rhs` with relative tolerance `tol`.
    pub(crate) fn observe_le(&mut self, lhs: f64, rhs: f64, tol: f64, witness: impl FnOnce() -> String) {
        self.trials += 1;
        let margin = relative_margin(lhs, rhs);
        let failed = !(margin >= -tol);
        let worse = margin < self.worst_margin || margin.is_nan();
        if worse {
            self.worst_margin = margin;
        }
        if self.passed && (worse || failed) {
            self.witness = Some(witness());
            self.passed = !failed;
        }
    }

    pub(crate) fn fail(&mut self, witness: String) {
        if self.passed {
            self.passed = false;
            self.witness = Some(witness);
        }
    }

    pub(crate) fn measure(&mut self, key: &str, value: f64) {
        self.measurements.insert(key.to_string(), value);
    }

    pub(crate) fn evidence_only(mut self) -> Self {
        self.asserted = false;
        self
    }

    /// Counts against the suite verdict.
    pub fn is_failure(&self) -> bool {
        self.asserted && !self.passed
    }
}

/// `(rhs - lhs) / |rhs|`, with exact ties at zero counted as zero slack.
pub(crate) fn relative_margin(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        return 0.0;
    }
    let scale = rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
    (rhs - lhs) / scale
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub evidence_only: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suites: Vec<Suite>,
    pub config: TrialConfig,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Wall-clock time of one suite; kept out of the report body.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub suite: Suite,
    pub seconds: f64,
}

/// Sub-seed for a named cell, stable across runs and platforms.
pub(crate) fn cell_seed(seed: u64, label: &str) -> u64 {
    label.bytes().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3).rotate_left(5)
    })
}

/// A seeded test function. `kind` cycles through random, bump, interval,
/// constant and (when `cells` is given) single-cell inputs. Everything but the
/// single-cell kind is independent of the grid resolution.
pub(crate) fn random_spec(rng: &mut ChaCha8Rng, kind: usize, cells: Option<usize>) -> FunctionSpec {
    let kinds = if cells.is_some() { 5 } else { 4 };
    match kind % kinds {
        0 => FunctionSpec::Random { seed: rng.random() },
        1 => FunctionSpec::Gaussian { center: rng.random_range(0.25..0.75), width: rng.random_range(0.08..0.2) },
        2 => {
            let lo = rng.random_range(2..10) as f64 / 16.0;
            let len = rng.random_range(1..5) as f64 / 16.0;
            FunctionSpec::Indicator { lo, hi: lo + len }
        }
        3 => FunctionSpec::Constant { value: rng.random_range(0.5..2.0) },
        _ => FunctionSpec::Cell { id: rng.random_range(0..cells.expect("cell count")) },
    }
}

fn run_group(config: &TrialConfig, suite: Suite) -> Result<Vec<CheckRecord>> {
    let seed = config.seed;
    let tol = &config.tolerances;
    let mut records = Vec::new();
    match suite {
        Suite::Sandwich => {
            let out: Vec<Result<CheckRecord>> = config
                .spaces
                .par_iter()
                .map(|sc| {
                    let space = sc.build::<f64>()?;
                    check_sandwich(&space, config.trial_count, cell_seed(seed, &format!("sandwich/{sc}")), tol)
                })
                .collect();
            for r in out {
                records.push(r?);
            }
        }
        Suite::Lemma21 => {
            let out: Vec<Result<CheckRecord>> = config
                .section_spaces
                .par_iter()
                .map(|sc| {
                    let space = sc.build::<f64>()?;
                    check_lemma21(&space, 5, 6, tol)
                })
                .collect();
            for r in out {
                records.push(r?);
            }
        }
        Suite::Lemma11 => {
            for sc in &config.integral_spaces {
                let space = sc.build::<f64>()?;
                records.extend(check_lemma11(&space, 5, tol)?);
            }
        }
        Suite::Prop32 => {
            for sc in &config.spaces {
                let space = sc.build::<f64>()?;
                for &frac in &config.gamma_fractions {
                    let gamma = frac * space.eta();
                    let s = cell_seed(seed, &format!("prop32a/{sc}/{frac}"));
                    records.push(check_prop32a(&space, gamma, config.trial_count, s, tol)?);
                }
            }
            let space = config.operator_space.build::<f64>()?;
            let s = cell_seed(seed, &format!("prop32b/{}", config.operator_space));
            records.push(check_prop32b(&space, space.eta(), config.function_pairs, s, tol)?);
            let [alpha, p] = config.hls;
            let s = cell_seed(seed, "hls");
            records.push(check_hls_linear(&config.resolutions, alpha, p, config.function_pairs, s, tol)?);
        }
        Suite::Region => {
            for &sigma in &config.region.sigmas {
                records.push(check_decomposition(sigma, config.region.grid, config.region.margin)?);
            }
            let [num, den] = config.region.chain_sigma;
            let s = cell_seed(seed, "chains");
            records.push(check_chains(num_rational::Rational64::new(num, den), config.region.chain_points, s)?);
        }
        Suite::Theorem12 => {
            for triple in &config.exponent_triples {
                let s = cell_seed(seed, &format!("theorem12/{triple:?}"));
                records.extend(check_theorem12(config, config.gamma, *triple, s)?);
            }
        }
        Suite::Search => {
            for triple in &config.exponent_triples {
                let space = SpaceConfig::Grid { dim: 1, n: config.search_grid, extent: 1.0 }.build::<f64>()?;
                let s = cell_seed(seed, &format!("search/{triple:?}"));
                let outcome = adversarial_ratio_search(&space, config.gamma, *triple, config.search_iterations, s)?;
                records.push(outcome.record);
            }
        }
    }
    Ok(records)
}

/// Runs the selected suites in a fixed order. A failing check never aborts
/// the run; errors in setup (bad spaces or exponents) do.
pub fn run_suite(config: &TrialConfig, suites: &[Suite]) -> Result<(VerificationReport, Vec<Timing>)> {
    config.validate()?;
    let mut order: Vec<Suite> = suites.to_vec();
    order.sort();
    order.dedup();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for &suite in &order {
        let start = Instant::now();
        records.extend(run_group(config, suite)?);
        timings.push(Timing { suite, seconds: start.elapsed().as_secs_f64() });
    }
    let mut summary = Summary { total: records.len(), ..Summary::default() };
    for r in &records {
        if !r.asserted {
            summary.evidence_only += 1;
        } else if r.passed {
            summary.passed += 1;
        } else {
            summary.failed += 1;
        }
    }
    Ok((VerificationReport { suites: order, config: config.clone(), records, summary }, timings))
}
