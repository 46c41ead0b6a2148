//! Seeded, parallel Monte Carlo calibration of the tests in this crate.
//!
//! Replication `i` draws everything (data, transformations, `u`) from a
//! ChaCha8 generator seeded with the master seed and positioned on stream
//! `i`, so the report does not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::exact::{check_alpha, locate, ClassRepresentatives, FullGroupTest};
use crate::group::{
    balanced_permutations, verify_group_axioms, AxiomReport, GroupElement, GroupSpec,
};
use crate::random::{
    coset_scheme_test, draw_transforms, estimate_pvalue, monte_carlo_test, random_test,
    randomized_exact_test, Population, RandomDraw, SamplingMode, SamplingPlan,
};
use crate::statistics::{transformed_values, Reference, Statistic, StatisticSpec};
use crate::SCHEMA;

/// Stream reserved for set-up randomness (the fixed subset of the coset
/// scheme); replications use streams `0..N`.
const SETUP_STREAM: u64 = u64::MAX;

const DEFAULT_CUTOFFS: [f64; 7] = [0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Type1,
    PvalueUniformity,
    BalancedDemo,
    BonferroniDemo,
}

/// I.i.d. null distributions; `dimension` is the length of the data vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NullModel {
    Normal {
        dimension: usize,
    },
    Binary {
        dimension: usize,
        p: f64,
    },
    /// A named built-in generator: `uniform` or `exponential`.
    Custom {
        id: String,
        dimension: usize,
    },
}

impl NullModel {
    pub fn dimension(&self) -> usize {
        match self {
            NullModel::Normal { dimension }
            | NullModel::Binary { dimension, .. }
            | NullModel::Custom { dimension, .. } => *dimension,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dimension() == 0 {
            return Err(Error::InvalidData(
                "null model dimension must be positive".into(),
            ));
        }
        match self {
            NullModel::Binary { p, .. } if !(0.0..=1.0).contains(p) => Err(Error::InvalidData(
                format!("success probability {p} is outside [0, 1]"),
            )),
            NullModel::Custom { id, .. } if id != "uniform" && id != "exponential" => {
                Err(Error::InvalidData(format!("unknown generator `{id}`")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            NullModel::Normal { dimension } => (0..*dimension)
                .map(|_| StandardNormal.sample(rng))
                .collect(),
            NullModel::Binary { dimension, p } => {
                let coin = Bernoulli::new(*p).expect("probability validated");
                (0..*dimension)
                    .map(|_| f64::from(u8::from(coin.sample(rng))))
                    .collect()
            }
            NullModel::Custom { id, dimension } => match id.as_str() {
                "uniform" => (0..*dimension).map(|_| rng.random::<f64>()).collect(),
                _ => (0..*dimension).map(|_| Exp1.sample(rng)).collect(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    /// Whole-group test, p-value `D / #G`.
    FullGroup,
    /// Whole-group test with the randomized boundary rule.
    Hoeffding,
    /// Random-draw test with the identity, p-value `B / w`.
    Random,
    /// Random-draw test with the randomized boundary rule, p-value `p'`.
    Randomized,
    /// Coset scheme over a fixed random subset of the group.
    Coset,
    /// Plain Monte Carlo test against fresh null samples.
    MonteCarlo,
    /// Draws without the identity; rejects iff `B / w <= alpha`.
    Naive,
    /// Draws without the identity; rejects iff `(B + 1) / (w + 1) <= alpha`.
    NaiveTilde,
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self).expect("unit variant");
        f.write_str(name.as_str().unwrap_or_default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    pub procedure: Procedure,
    /// Group family string such as `two-sample:3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Statistic string such as `diff-sum:n=3`.
    pub statistic: String,
    /// Sampling mode for random procedures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    /// Size of the fixed subset used by the coset scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub experiment: Experiment,
    pub null_model: NullModel,
    pub test: TestConfig,
    pub replications: u64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cutoffs: Vec<f64>,
    /// Number of hypotheses in the Bonferroni demo.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<usize>,
    /// Shift added to the case entries (or to every entry when the
    /// statistic has no case split); produces an alternative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

impl FromStr for SimulationConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let config: SimulationConfig =
            serde_json::from_str(s).map_err(|e| Error::InvalidData(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

impl SimulationConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn statistic(&self) -> Result<StatisticSpec> {
        self.test.statistic.parse()
    }

    pub fn group(&self) -> Result<Option<GroupSpec>> {
        self.test.group.as_deref().map(str::parse).transpose()
    }

    fn sampling_mode(&self) -> Result<SamplingMode> {
        self.test
            .scheme
            .as_deref()
            .ok_or_else(|| {
                Error::InvalidData(format!("procedure {} needs a scheme", self.test.procedure))
            })?
            .parse()
    }

    fn w(&self) -> Result<usize> {
        match self.test.w {
            Some(w) if w >= 1 => Ok(w),
            _ => Err(Error::InvalidData(format!(
                "procedure {} needs w >= 1",
                self.test.procedure
            ))),
        }
    }

    fn required_group(&self) -> Result<GroupSpec> {
        self.group()?.ok_or_else(|| {
            Error::InvalidData(format!("procedure {} needs a group", self.test.procedure))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidData("replications must be at least 1".into()));
        }
        check_alpha(self.test.alpha)?;
        self.null_model.validate()?;
        if let Some(c) = self.cutoffs.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidData(format!("cutoff {c} is outside [0, 1]")));
        }
        let dim = self.null_model.dimension();
        let stat = self.statistic()?;
        if let StatisticSpec::DiffSum { cases } = stat {
            if 2 * cases != dim {
                return Err(Error::Dimension {
                    expected: 2 * cases,
                    found: dim,
                });
            }
        }
        if let StatisticSpec::SumFirst { k } = stat {
            if k > dim {
                return Err(Error::InvalidData(format!(
                    "sum-first:k={k} exceeds dimension {dim}"
                )));
            }
        }
        if let Some(group) = self.group()? {
            if group.dimension() != dim {
                return Err(Error::Dimension {
                    expected: group.dimension(),
                    found: dim,
                });
            }
        }
        match self.experiment {
            Experiment::BalancedDemo => {
                if !matches!(stat, StatisticSpec::DiffSum { .. }) {
                    return Err(Error::InvalidData(
                        "the balanced demo needs a diff-sum statistic".into(),
                    ));
                }
                return Ok(());
            }
            Experiment::BonferroniDemo => {
                if !matches!(self.hypotheses, Some(h) if h >= 1) {
                    return Err(Error::InvalidData(
                        "the Bonferroni demo needs hypotheses >= 1".into(),
                    ));
                }
                if !matches!(
                    self.test.procedure,
                    Procedure::Naive | Procedure::NaiveTilde
                ) {
                    return Err(Error::InvalidData(
                        "the Bonferroni demo uses a naive procedure".into(),
                    ));
                }
            }
            Experiment::Type1 | Experiment::PvalueUniformity => {}
        }
        match self.test.procedure {
            Procedure::FullGroup | Procedure::Hoeffding => {
                self.required_group()?;
            }
            Procedure::Random
            | Procedure::Randomized
            | Procedure::Naive
            | Procedure::NaiveTilde => {
                self.required_group()?;
                self.sampling_mode()?;
                self.w()?;
            }
            Procedure::Coset => {
                self.required_group()?;
                if !matches!(self.test.subset_size, Some(s) if s >= 1) {
                    return Err(Error::InvalidData(
                        "the coset scheme needs subset_size >= 1".into(),
                    ));
                }
            }
            Procedure::MonteCarlo => {
                self.w()?;
            }
        }
        Ok(())
    }
}

/// Outcome of one replication.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Outcome {
    reject: bool,
    p_value: Option<f64>,
    control_reject: Option<bool>,
}

/// One row of the per-replication trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub replication: u64,
    pub p_value: Option<f64>,
    pub reject: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exceedance {
    pub cutoff: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlArm {
    pub description: String,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub standard_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub schema: &'static str,
    pub config: SimulationConfig,
    pub replications: u64,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub standard_error: f64,
    /// One-sided binomial p-value of the rejection count against `alpha`.
    pub excess_p_value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub exceedance: Vec<Exceedance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_distance: Option<f64>,
    /// Fraction of replications with a p-value of exactly zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlArm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomReport>,
    #[serde(skip)]
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl SimulationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `replication,p_value,decision` rows.
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["replication", "p_value", "decision"])?;
        for row in &self.trace {
            writer.write_record([
                row.replication.to_string(),
                row.p_value.map(|p| p.to_string()).unwrap_or_default(),
                if row.reject { "reject" } else { "retain" }.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub fn standard_error(rate: f64, n: u64) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

/// `P(Binomial(n, p) >= successes)`.
pub fn binomial_upper_tail(successes: u64, n: u64, p: f64) -> f64 {
    if successes == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    Binomial::new(p, n).map_or(f64::NAN, |b| b.sf(successes - 1))
}

/// Kolmogorov–Smirnov distance between the sample and Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let v = v.clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - v).max(v - i as f64 / n);
    }
    d
}

fn replication_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

enum Prepared {
    Full(FullGroupTest<StatisticSpec>),
    Hoeffding(FullGroupTest<StatisticSpec>),
    Draws {
        plan: SamplingPlan,
        population: OwnedPopulation,
        randomized: bool,
    },
    Naive {
        plan: SamplingPlan,
        population: OwnedPopulation,
        tilde: bool,
    },
    Coset(Vec<GroupElement>),
    MonteCarlo(usize),
}

enum OwnedPopulation {
    Group(GroupSpec),
    Classes(ClassRepresentatives),
}

impl OwnedPopulation {
    fn borrow(&self) -> Population<'_> {
        match self {
            OwnedPopulation::Group(g) => Population::Group(g),
            OwnedPopulation::Classes(c) => Population::Classes(c),
        }
    }
}

fn population(
    group: &GroupSpec,
    stat: StatisticSpec,
    mode: &SamplingMode,
) -> Result<OwnedPopulation> {
    match mode {
        SamplingMode::ClassWithReplacement | SamplingMode::ClassWithoutReplacement => Ok(
            OwnedPopulation::Classes(ClassRepresentatives::for_design(group, &stat)?),
        ),
        _ => Ok(OwnedPopulation::Group(group.clone())),
    }
}

struct Runner {
    config: SimulationConfig,
    stat: StatisticSpec,
    prepared: Prepared,
}

impl Runner {
    fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let stat = config.statistic()?;
        let prepared = match config.test.procedure {
            Procedure::FullGroup => {
                Prepared::Full(FullGroupTest::new(&config.required_group()?, stat)?)
            }
            Procedure::Hoeffding => {
                Prepared::Hoeffding(FullGroupTest::new(&config.required_group()?, stat)?)
            }
            Procedure::Random | Procedure::Randomized => {
                let mode = config.sampling_mode()?;
                Prepared::Draws {
                    population: population(&config.required_group()?, stat, &mode)?,
                    plan: SamplingPlan::new(mode, config.w()?),
                    randomized: config.test.procedure == Procedure::Randomized,
                }
            }
            Procedure::Naive | Procedure::NaiveTilde => {
                let mode = config.sampling_mode()?;
                Prepared::Naive {
                    population: population(&config.required_group()?, stat, &mode)?,
                    plan: SamplingPlan::naive(mode, config.w()?),
                    tilde: config.test.procedure == Procedure::NaiveTilde,
                }
            }
            Procedure::Coset => {
                let group = config.required_group()?;
                let size = config.test.subset_size.unwrap_or(1);
                let mut rng = replication_rng(config.master_seed, SETUP_STREAM);
                let plan = SamplingPlan::naive(SamplingMode::WithoutReplacement, size);
                let subset = draw_transforms(&plan, Population::Group(&group), &mut rng)?.elements;
                Prepared::Coset(subset)
            }
            Procedure::MonteCarlo => Prepared::MonteCarlo(config.w()?),
        };
        Ok(Runner {
            config: config.clone(),
            stat,
            prepared,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = self.config.null_model.sample(rng);
        if let Some(shift) = self.config.shift {
            let affected = self.stat.case_split().unwrap_or(x.len());
            x.iter_mut().take(affected).for_each(|v| *v += shift);
        }
        x
    }

    /// Decision and p-value for one data vector; naive procedures also
    /// report the identity-included control decision on the same draw.
    fn decide(&self, x: &[f64], alpha: f64, rng: &mut ChaCha8Rng) -> Result<Outcome> {
        let stat = self.stat;
        let outcome = |report: crate::exact::TestReport| Outcome {
            reject: report.rejects(),
            p_value: report.p_value,
            control_reject: None,
        };
        match &self.prepared {
            Prepared::Full(test) => Ok(outcome(test.test(x, alpha)?)),
            Prepared::Hoeffding(test) => Ok(outcome(test.hoeffding(x, alpha, rng)?)),
            Prepared::Draws {
                plan,
                population,
                randomized,
            } => {
                let draw = draw_transforms(plan, population.borrow(), rng)?;
                if *randomized {
                    Ok(outcome(randomized_exact_test(x, &draw, stat, alpha, rng)?))
                } else {
                    Ok(outcome(random_test(x, &draw, stat, alpha)?))
                }
            }
            Prepared::Naive {
                plan,
                population,
                tilde,
            } => {
                let draw = draw_transforms(plan, population.borrow(), rng)?;
                let estimate = estimate_pvalue(x, &draw, stat)?;
                let p = if *tilde {
                    estimate.p_tilde
                } else {
                    estimate.p_hat
                };
                let mut controlled = draw.elements;
                controlled[0] = controlled[0].identity_like();
                let control = random_test(x, &RandomDraw::explicit(controlled), stat, alpha)?;
                Ok(Outcome {
                    reject: p <= alpha,
                    p_value: Some(p),
                    control_reject: Some(control.rejects()),
                })
            }
            Prepared::Coset(subset) => Ok(outcome(coset_scheme_test(x, subset, stat, alpha, rng)?)),
            Prepared::MonteCarlo(w) => {
                let null = &self.config.null_model;
                let sampler = |r: &mut ChaCha8Rng| -> Result<Vec<f64>> { Ok(null.sample(r)) };
                Ok(outcome(monte_carlo_test(x, sampler, stat, *w, alpha, rng)?))
            }
        }
    }

    fn replicate(&self, index: u64) -> Result<Outcome> {
        let mut rng = replication_rng(self.config.master_seed, index);
        let alpha = self.config.test.alpha;
        match self.config.experiment {
            Experiment::Type1 | Experiment::PvalueUniformity => {
                let x = self.sample(&mut rng);
                self.decide(&x, alpha, &mut rng)
            }
            Experiment::BonferroniDemo => {
                let hypotheses = self.config.hypotheses.unwrap_or(1);
                let cutoff = alpha / hypotheses as f64;
                let Prepared::Naive {
                    plan, population, ..
                } = &self.prepared
                else {
                    unreachable!("validated");
                };
                let mut naive_hit = false;
                let mut tilde_hit = false;
                let mut smallest = f64::INFINITY;
                for _ in 0..hypotheses {
                    let x = self.sample(&mut rng);
                    let draw = draw_transforms(plan, population.borrow(), &mut rng)?;
                    let estimate = estimate_pvalue(&x, &draw, self.stat)?;
                    naive_hit |= estimate.p_hat <= cutoff;
                    tilde_hit |= estimate.p_tilde <= cutoff;
                    smallest = smallest.min(estimate.p_hat);
                }
                Ok(Outcome {
                    reject: naive_hit,
                    p_value: Some(smallest),
                    control_reject: Some(tilde_hit),
                })
            }
            Experiment::BalancedDemo => unreachable!("handled by the balanced runner"),
        }
    }
}

/// The balanced set plus the identity, collapsed by case subset.
struct BalancedRunner {
    config: SimulationConfig,
    stat: StatisticSpec,
    weighted: Vec<(GroupElement, u128)>,
    control: FullGroupTest<StatisticSpec>,
    axioms: AxiomReport,
}

impl BalancedRunner {
    fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let stat = config.statistic()?;
        let StatisticSpec::DiffSum { cases } = stat else {
            unreachable!("validated");
        };
        let balanced = balanced_permutations(cases)?;
        let axioms = verify_group_axioms(&balanced);
        let mut classes: BTreeMap<Vec<usize>, (GroupElement, u128)> = BTreeMap::new();
        let identity = GroupElement::identity_permutation(2 * cases);
        for g in std::iter::once(&identity).chain(&balanced) {
            let GroupElement::Permutation(perm) = g else {
                unreachable!("balanced sets are permutations");
            };
            let mut key = perm[..cases].to_vec();
            key.sort_unstable();
            classes.entry(key).or_insert_with(|| (g.clone(), 0)).1 += 1;
        }
        Ok(BalancedRunner {
            config: config.clone(),
            stat,
            weighted: classes.into_values().collect(),
            control: FullGroupTest::new(&GroupSpec::TwoSample { cases }, stat)?,
            axioms,
        })
    }

    fn replicate(&self, index: u64) -> Result<Outcome> {
        let mut rng = replication_rng(self.config.master_seed, index);
        let alpha = self.config.test.alpha;
        let x = self.config.null_model.sample(&mut rng);
        let reps: Vec<GroupElement> = self.weighted.iter().map(|(g, _)| g.clone()).collect();
        let values = transformed_values(&self.stat, &x, &reps)?;
        let reference = Reference::from_weighted(
            values
                .into_iter()
                .zip(self.weighted.iter().map(|(_, w)| *w)),
            self.stat.tie_tolerance(),
        );
        let observed = self.stat.evaluate(&x)?;
        let boundary = locate(&reference, observed, alpha);
        let p = reference.count_at_least(observed) as f64 / reference.total() as f64;
        Ok(Outcome {
            reject: boundary.above,
            p_value: Some(p),
            control_reject: Some(self.control.test(&x, alpha)?.rejects()),
        })
    }
}

fn run_parallel<F>(replications: u64, jobs: usize, f: F) -> Result<Vec<Outcome>>
where
    F: Fn(u64) -> Result<Outcome> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidData(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..replications).into_par_iter().map(&f).collect())
}

/// Runs the configured experiment on `jobs` worker threads (0 = all cores).
pub fn run(config: &SimulationConfig, jobs: usize) -> Result<SimulationReport> {
    let started = Instant::now();
    let (outcomes, axioms) = match config.experiment {
        Experiment::BalancedDemo => {
            let runner = BalancedRunner::new(config)?;
            (
                run_parallel(config.replications, jobs, |i| runner.replicate(i))?,
                Some(runner.axioms),
            )
        }
        _ => {
            let runner = Runner::new(config)?;
            (
                run_parallel(config.replications, jobs, |i| runner.replicate(i))?,
                None,
            )
        }
    };
    let mut report = summarize(config, &outcomes);
    report.axioms = axioms;
    report.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

pub fn type1_experiment(config: &SimulationConfig, jobs: usize) -> Result<SimulationReport> {
    expect_experiment(config, Experiment::Type1)?;
    run(config, jobs)
}

pub fn pvalue_uniformity(config: &SimulationConfig, jobs: usize) -> Result<SimulationReport> {
    expect_experiment(config, Experiment::PvalueUniformity)?;
    run(config, jobs)
}

pub fn balanced_permutation_demo(
    config: &SimulationConfig,
    jobs: usize,
) -> Result<SimulationReport> {
    expect_experiment(config, Experiment::BalancedDemo)?;
    run(config, jobs)
}

pub fn bonferroni_interaction_demo(
    config: &SimulationConfig,
    jobs: usize,
) -> Result<SimulationReport> {
    expect_experiment(config, Experiment::BonferroniDemo)?;
    run(config, jobs)
}

fn expect_experiment(config: &SimulationConfig, expected: Experiment) -> Result<()> {
    if config.experiment == expected {
        Ok(())
    } else {
        Err(Error::InvalidData(format!(
            "config describes a {:?} experiment, expected {expected:?}",
            config.experiment
        )))
    }
}

fn control_description(config: &SimulationConfig) -> Option<String> {
    match (config.experiment, config.test.procedure) {
        (Experiment::BalancedDemo, _) => Some("full-group test on the same data".into()),
        (Experiment::BonferroniDemo, _) => Some("family-wise error with (B + 1) / (w + 1)".into()),
        (_, Procedure::Naive | Procedure::NaiveTilde) => {
            Some("random test on the same draw with the identity in first position".into())
        }
        _ => None,
    }
}

fn summarize(config: &SimulationConfig, outcomes: &[Outcome]) -> SimulationReport {
    let n = outcomes.len() as u64;
    let rejections = outcomes.iter().filter(|o| o.reject).count() as u64;
    let rate = rejections as f64 / n as f64;
    let p_values: Vec<f64> = outcomes.iter().filter_map(|o| o.p_value).collect();

    let uniformity = config.experiment == Experiment::PvalueUniformity;
    let mut cutoffs = if config.cutoffs.is_empty() && uniformity {
        DEFAULT_CUTOFFS.to_vec()
    } else {
        config.cutoffs.clone()
    };
    cutoffs.sort_by(f64::total_cmp);
    cutoffs.dedup();
    let exceedance = if p_values.is_empty() {
        Vec::new()
    } else {
        let mut sorted = p_values.clone();
        sorted.sort_by(f64::total_cmp);
        cutoffs
            .iter()
            .map(|&c| Exceedance {
                cutoff: c,
                rate: sorted.partition_point(|&p| p <= c) as f64 / sorted.len() as f64,
            })
            .collect()
    };
    let has_p = uniformity && !p_values.is_empty();

    let control = control_description(config).map(|description| {
        let hits = outcomes
            .iter()
            .filter(|o| o.control_reject == Some(true))
            .count() as u64;
        let control_rate = hits as f64 / n as f64;
        ControlArm {
            description,
            rejections: hits,
            rejection_rate: control_rate,
            standard_error: standard_error(control_rate, n),
        }
    });

    let trace = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| TraceRow {
            replication: i as u64,
            p_value: o.p_value,
            reject: o.reject,
        })
        .collect();

    SimulationReport {
        schema: SCHEMA,
        config: config.clone(),
        replications: n,
        rejections,
        rejection_rate: rate,
        standard_error: standard_error(rate, n),
        excess_p_value: binomial_upper_tail(rejections, n, config.test.alpha),
        exceedance,
        ks_distance: has_p.then(|| ks_uniform(&p_values)),
        zero_mass: has_p
            .then(|| p_values.iter().filter(|&&p| p == 0.0).count() as f64 / p_values.len() as f64),
        control,
        axioms: None,
        runtime_seconds: 0.0,
        trace,
    }
}
