//! The `permtest` command-line front end.
//!
//! Every subcommand prints exactly one JSON document on stdout and any prose
//! on stderr. Exit codes: 0 success, 1 usage or validation error, 2 runtime
//! infeasibility (for example a group too large to enumerate), 3 when
//! `verify-group` finds that the set is not a group.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ClassRepresentatives, Counts, FullGroupTest, TestReport};
use crate::group::{
    balanced_permutations, elements_from_json, enumerate, verify_group_axioms, DataVector,
    GroupSpec,
};
use crate::random::{
    coset_scheme_test, draw_transforms, random_test, randomized_exact_test, Population,
    SamplingMode, SamplingPlan,
};
use crate::simulation::{self, SimulationConfig};
use crate::statistics::StatisticSpec;
use crate::SCHEMA;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NOT_A_GROUP: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "permtest",
    version,
    about = "Exact and random-sampling permutation tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a test on a data file and print the report.
    Test(TestArgs),
    /// Compute the p-value for a data file.
    Pvalue(InputArgs),
    /// Run a calibration experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Check the group axioms on a set of transformations.
    VerifyGroup(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Full,
    WithRepl,
    WithoutRepl,
    ClassWithRepl,
    ClassWithoutRepl,
    Coset,
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("transforms").args(["group", "transforms_file"])))]
pub struct InputArgs {
    /// CSV file with one row or one column of reals.
    #[arg(long)]
    pub data: PathBuf,
    /// Statistic: diff-sum:n=<int>, mean, abs-mean or sum-first:k=<int>.
    #[arg(long)]
    pub stat: StatisticSpec,
    /// Group family, e.g. two-sample:3, full-symmetric:6, sign-flip:10, cyclic:7.
    #[arg(long)]
    pub group: Option<GroupSpec>,
    /// JSON array of elements (permutations, sign masks or shifts).
    #[arg(long)]
    pub transforms_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    pub scheme: Scheme,
    /// Number of drawn transformations, the identity included.
    #[arg(long)]
    pub w: Option<usize>,
    /// Required by every scheme that draws random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Randomize the decision at the boundary so the test is exact.
    #[arg(long, value_enum, default_value = "off")]
    pub randomized: Switch,
    /// Permit draws without the identity.
    #[arg(long)]
    pub allow_naive: bool,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Level, as a decimal or a fraction such as 1/3.
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Per-replication CSV of p-values and decisions.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["transforms_file", "group", "balanced"])))]
pub struct VerifyArgs {
    #[arg(long)]
    pub transforms_file: Option<PathBuf>,
    #[arg(long)]
    pub group: Option<GroupSpec>,
    /// Balanced permutations of a two-sample design with this many cases.
    #[arg(long)]
    pub balanced: Option<usize>,
}

/// Parses a decimal or a fraction `p/q`.
pub fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            num / den
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a number"))?,
    };
    if (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(format!("alpha must lie in [0, 1), got {s}"))
    }
}

/// Reads a single row or a single column of reals.
pub fn read_data(path: &Path) -> Result<DataVector> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let fields: Vec<String> = record?
            .iter()
            .filter(|f| !f.is_empty())
            .map(str::to_string)
            .collect();
        if !fields.is_empty() {
            rows.push(fields);
        }
    }
    if rows.len() > 1 && rows.iter().any(|r| r.len() > 1) {
        return Err(Error::InvalidData(
            "expected a single row or a single column of values".into(),
        ));
    }
    let values = rows
        .into_iter()
        .flatten()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::InvalidData(format!("`{f}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    DataVector::new(values)
}

fn usage(message: impl Into<String>) -> Error {
    Error::InvalidData(message.into())
}

fn read_transforms(path: &Path) -> Result<Vec<crate::GroupElement>> {
    elements_from_json(&std::fs::read_to_string(path)?)
}

impl InputArgs {
    fn needs_seed(&self) -> bool {
        self.scheme != Scheme::Full || self.randomized == Switch::On
    }

    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            let scheme = self
                .scheme
                .to_possible_value()
                .map(|v| v.get_name().to_string())
                .unwrap_or_default();
            usage(format!(
                "--seed is required with --scheme {scheme} or --randomized on"
            ))
        })
    }

    fn w(&self) -> Result<usize> {
        self.w
            .ok_or_else(|| usage("--w is required for random schemes"))
    }

    /// The group to test against: `--group`, or the transforms file read as
    /// an explicit group.
    fn group(&self) -> Result<GroupSpec> {
        match (&self.group, &self.transforms_file) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(path)) => GroupSpec::explicit(read_transforms(path)?),
            (None, None) => Err(usage("one of --group or --transforms-file is required")),
        }
    }

    fn check_dimension(&self, x: &DataVector, group: &GroupSpec) -> Result<()> {
        if group.dimension() != x.len() {
            return Err(Error::Dimension {
                expected: group.dimension(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Runs the configured procedure at level `alpha`.
    fn execute(&self, alpha: f64) -> Result<TestReport> {
        if self.needs_seed() {
            self.seed()?;
        }
        let x = read_data(&self.data)?;
        let stat = self.stat;
        let randomized = self.randomized == Switch::On;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or_default());

        if self.scheme == Scheme::Coset {
            let path = self
                .transforms_file
                .as_ref()
                .ok_or_else(|| usage("--scheme coset needs --transforms-file with the subset"))?;
            let subset = read_transforms(path)?;
            let mut report = coset_scheme_test(x.as_slice(), &subset, stat, alpha, &mut rng)?;
            report.seed = self.seed;
            return Ok(report);
        }

        let group = self.group()?;
        self.check_dimension(&x, &group)?;
        if self.scheme == Scheme::Full {
            let test = FullGroupTest::new(&group, stat)?;
            let mut report = if randomized {
                test.hoeffding(x.as_slice(), alpha, &mut rng)?
            } else {
                test.test(x.as_slice(), alpha)?
            };
            report.seed = self.seed;
            return Ok(report);
        }

        let (mode, naive) = match self.scheme {
            Scheme::WithRepl => (SamplingMode::WithReplacement, false),
            Scheme::WithoutRepl => (SamplingMode::WithoutReplacement, false),
            Scheme::ClassWithRepl => (SamplingMode::ClassWithReplacement, false),
            Scheme::ClassWithoutRepl => (SamplingMode::ClassWithoutReplacement, false),
            Scheme::Naive => (SamplingMode::WithReplacement, true),
            Scheme::Full | Scheme::Coset => unreachable!("handled above"),
        };
        if naive && !self.allow_naive {
            return Err(Error::RefusedNaivePlan);
        }
        let w = self.w()?;
        let plan = if naive {
            SamplingPlan::naive(mode, w)
        } else {
            SamplingPlan::new(mode, w)
        };
        let classes = match plan.mode {
            SamplingMode::ClassWithReplacement | SamplingMode::ClassWithoutReplacement => {
                Some(ClassRepresentatives::for_design(&group, &stat)?)
            }
            _ => None,
        };
        let population = classes
            .as_ref()
            .map_or(Population::Group(&group), Population::Classes);
        let mut draw = draw_transforms(&plan, population, &mut rng)?.with_seed(self.seed()?);
        if naive {
            draw = draw.allow_naive();
        }
        let mut report = if randomized {
            randomized_exact_test(x.as_slice(), &draw, stat, alpha, &mut rng)?
        } else {
            random_test(x.as_slice(), &draw, stat, alpha)?
        };
        report.group = Some(group.to_string());
        Ok(report)
    }
}

/// Output of the `pvalue` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PValueReport {
    pub schema: &'static str,
    pub procedure: String,
    pub statistic: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub observed: f64,
    pub reference_size: u128,
    pub counts: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
}

impl From<TestReport> for PValueReport {
    fn from(r: TestReport) -> Self {
        PValueReport {
            schema: SCHEMA,
            procedure: r.procedure,
            statistic: r.statistic,
            group: r.group,
            observed: r.observed,
            reference_size: r.reference_size,
            counts: r.counts,
            p_value: r.p_value,
            p_value_upper: r.p_value_upper,
            u: r.u,
            p_hat: r.p_hat,
            p_tilde: r.p_tilde,
            seed: r.seed,
            w: r.w,
        }
    }
}

fn run_test(args: &TestArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let report = args.input.execute(args.alpha)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    let p = report
        .p_value
        .or(report.p_hat)
        .map_or_else(|| "n/a".into(), |p| format!("{p:.6}"));
    writeln!(
        err,
        "{}: {:?} at alpha = {} (T(x) = {}, threshold T^({}) = {}, p = {p})",
        report.procedure,
        report.decision,
        report.alpha,
        report.observed,
        report.threshold_index,
        report.threshold_value
    )?;
    Ok(EXIT_OK)
}

fn run_pvalue(args: &InputArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if args.scheme == Scheme::Full && args.randomized == Switch::On {
        return Err(usage(
            "randomized p-values are available for random schemes only",
        ));
    }
    // The decision is irrelevant here; alpha = 0 only fixes the threshold.
    let report = PValueReport::from(args.execute(0.0)?);
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    let p = report
        .p_value
        .or(report.p_hat)
        .map_or_else(|| "n/a".into(), |p| format!("{p:.6}"));
    writeln!(err, "{}: p = {p}", report.procedure)?;
    Ok(EXIT_OK)
}

fn run_simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = SimulationConfig::from_path(&args.config)?;
    let report = simulation::run(&config, args.jobs)?;
    let json = report.to_json()?;
    match &args.out {
        Some(path) => std::fs::write(path, format!("{json}\n"))?,
        None => writeln!(out, "{json}")?,
    }
    if let Some(path) = &args.trace {
        report.write_trace(path)?;
    }
    writeln!(
        err,
        "{} replications: rejection rate {:.5} (SE {:.5}) in {:.2}s",
        report.replications, report.rejection_rate, report.standard_error, report.runtime_seconds
    )?;
    Ok(EXIT_OK)
}

fn run_verify_group(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let elements = if let Some(path) = &args.transforms_file {
        read_transforms(path)?
    } else if let Some(group) = &args.group {
        enumerate(group)?
    } else if let Some(cases) = args.balanced {
        balanced_permutations(cases)?
    } else {
        return Err(usage(
            "one of --transforms-file, --group or --balanced is required",
        ));
    };
    let report = verify_group_axioms(&elements);
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    if report.is_group {
        writeln!(err, "{} elements form a group", report.elements)?;
        Ok(EXIT_OK)
    } else {
        writeln!(
            err,
            "not a group: identity {}, closed under composition {}, closed under inverse {}",
            report.contains_identity, report.closed_under_composition, report.closed_under_inverse
        )?;
        Ok(EXIT_NOT_A_GROUP)
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Test(args) => run_test(args, out, err),
        Command::Pvalue(args) => run_pvalue(args, out, err),
        Command::Simulate(args) => run_simulate(args, out, err),
        Command::VerifyGroup(args) => run_verify_group(args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_infeasibility() {
                EXIT_INFEASIBLE
            } else {
                EXIT_USAGE
            }
        }
    }
}
