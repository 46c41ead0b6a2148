//! Tests and p-values based on randomly drawn transformations.
//!
//! A draw is the vector `(g_1, ..., g_w)`. Valid plans fix `g_1` to the
//! identity; plans without it ("naive" plans) are refused by the testing
//! functions unless the draw was explicitly marked with
//! [`RandomDraw::allow_naive`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::exact::{
    boundary_probability, check_alpha, draw_u, locate, ClassRepresentatives, Counts, Decision,
    PlanSummary, TestReport,
};
use crate::group::{enumerate, sample_uniform, GroupElement, GroupSpec, DEFAULT_ENUMERATION_CAP};
use crate::statistics::{transformed_values, Reference, Statistic};

/// How `g_2, ..., g_w` (or all `w` draws, for naive plans) are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum SamplingMode {
    /// Independent uniform draws from the group.
    WithReplacement,
    /// Distinct uniform draws from the group minus the identity.
    WithoutReplacement,
    /// Independent uniform draws from `{h_1, ..., h_m}`.
    ClassWithReplacement,
    /// Distinct draws from `{h_2, ..., h_m}`.
    ClassWithoutReplacement,
    /// The elements `g h^-1`, `g` in the subset, for one uniform `h` in it.
    Coset(Vec<GroupElement>),
    /// A fixed list, used as given.
    Explicit(Vec<GroupElement>),
}

impl SamplingMode {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingMode::WithReplacement => "with-replacement",
            SamplingMode::WithoutReplacement => "without-replacement",
            SamplingMode::ClassWithReplacement => "class-with-replacement",
            SamplingMode::ClassWithoutReplacement => "class-without-replacement",
            SamplingMode::Coset(_) => "coset",
            SamplingMode::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    /// Accepts the long names and the CLI short forms (`with-repl`, ...).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with-replacement" | "with-repl" => Ok(SamplingMode::WithReplacement),
            "without-replacement" | "without-repl" => Ok(SamplingMode::WithoutReplacement),
            "class-with-replacement" | "class-with-repl" => Ok(SamplingMode::ClassWithReplacement),
            "class-without-replacement" | "class-without-repl" => {
                Ok(SamplingMode::ClassWithoutReplacement)
            }
            other => Err(Error::Parse(format!("unknown sampling mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    pub mode: SamplingMode,
    /// Total number of draws, the identity included when it is forced.
    pub w: usize,
    pub include_identity: bool,
}

impl SamplingPlan {
    /// A plan with the identity forced into the first position.
    pub fn new(mode: SamplingMode, w: usize) -> Self {
        SamplingPlan {
            mode,
            w,
            include_identity: true,
        }
    }

    /// A plan whose `w` draws are all random; for demonstrations only.
    pub fn naive(mode: SamplingMode, w: usize) -> Self {
        SamplingPlan {
            mode,
            w,
            include_identity: false,
        }
    }

    pub fn summary(&self) -> PlanSummary {
        PlanSummary {
            mode: self.mode.name().to_string(),
            w: self.w,
            include_identity: self.include_identity,
        }
    }
}

/// What draws are taken from.
#[derive(Clone, Copy, Debug)]
pub enum Population<'a> {
    Group(&'a GroupSpec),
    Classes(&'a ClassRepresentatives),
}

/// A realised vector of transformations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomDraw {
    pub elements: Vec<GroupElement>,
    #[serde(skip)]
    pub plan: SamplingPlan,
    pub seed: Option<u64>,
    #[serde(skip)]
    naive_allowed: bool,
}

impl RandomDraw {
    /// Wraps an explicit list of elements.
    pub fn explicit(elements: Vec<GroupElement>) -> Self {
        let w = elements.len();
        let include_identity = elements.first().is_some_and(GroupElement::is_identity);
        RandomDraw {
            plan: SamplingPlan {
                mode: SamplingMode::Explicit(elements.clone()),
                w,
                include_identity,
            },
            elements,
            seed: None,
            naive_allowed: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Lets testing functions run on a draw that lacks the identity.
    pub fn allow_naive(mut self) -> Self {
        self.naive_allowed = true;
        self
    }

    pub fn w(&self) -> usize {
        self.elements.len()
    }

    pub fn contains_identity(&self) -> bool {
        self.elements.iter().any(GroupElement::is_identity)
    }

    fn require_identity(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::PlanInfeasible("draw is empty".into()));
        }
        if self.contains_identity() || self.naive_allowed {
            Ok(())
        } else {
            Err(Error::RefusedNaivePlan)
        }
    }
}

/// `count` distinct indices from `0..population`, uniformly ordered.
fn distinct_indices<R: Rng + ?Sized>(rng: &mut R, population: usize, count: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, population, count).into_vec();
    picked.shuffle(rng);
    picked
}

/// `count` distinct group elements, uniformly ordered, none equal to the
/// identity when `exclude_identity` holds.
fn distinct_group_elements<R: Rng + ?Sized>(
    group: &GroupSpec,
    count: usize,
    exclude_identity: bool,
    rng: &mut R,
) -> Result<Vec<GroupElement>> {
    let order = group.cardinality();
    let available = order.map(|o| o - u128::from(exclude_identity));
    if let Some(available) = available {
        if count as u128 > available {
            return Err(Error::PlanInfeasible(format!(
                "cannot draw {count} distinct elements from {available} candidates"
            )));
        }
    }
    // Enumerate when a large share of the group is needed; otherwise draw
    // with rejection of duplicates.
    let dense = available.is_some_and(|a| 2 * count as u128 > a && a <= DEFAULT_ENUMERATION_CAP);
    if dense {
        let mut pool = enumerate(group)?;
        if exclude_identity {
            pool.retain(|g| !g.is_identity());
        }
        return Ok(distinct_indices(rng, pool.len(), count)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect());
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = sample_uniform(group, rng);
        if exclude_identity && g.is_identity() {
            continue;
        }
        if seen.insert(g.clone()) {
            out.push(g);
        }
    }
    Ok(out)
}

/// Draws the transformation vector described by `plan`.
///
/// Plans that include the identity put it first and draw the remaining
/// `w - 1` elements; naive plans draw all `w`.
pub fn draw_transforms<R: Rng + ?Sized>(
    plan: &SamplingPlan,
    population: Population<'_>,
    rng: &mut R,
) -> Result<RandomDraw> {
    let w = plan.w;
    let fixed = usize::from(plan.include_identity);
    let random_count = w.checked_sub(fixed).ok_or_else(|| {
        Error::PlanInfeasible("w must be at least 1 when the identity is included".into())
    })?;
    if w == 0 {
        return Err(Error::PlanInfeasible("w must be at least 1".into()));
    }

    let elements = match (&plan.mode, population) {
        (SamplingMode::WithReplacement, Population::Group(group)) => {
            let mut out = Vec::with_capacity(w);
            if plan.include_identity {
                out.push(group.identity());
            }
            out.extend((0..random_count).map(|_| sample_uniform(group, rng)));
            out
        }
        (SamplingMode::WithoutReplacement, Population::Group(group)) => {
            let mut out = Vec::with_capacity(w);
            if plan.include_identity {
                out.push(group.identity());
            }
            out.extend(distinct_group_elements(
                group,
                random_count,
                plan.include_identity,
                rng,
            )?);
            out
        }
        (SamplingMode::ClassWithReplacement, Population::Classes(classes)) => {
            let mut out = Vec::with_capacity(w);
            if plan.include_identity {
                out.push(classes.reps[0].clone());
            }
            out.extend(
                (0..random_count).map(|_| classes.reps[rng.random_range(0..classes.m)].clone()),
            );
            out
        }
        (SamplingMode::ClassWithoutReplacement, Population::Classes(classes)) => {
            let offset = fixed;
            let available = classes.m - offset;
            if random_count > available {
                return Err(Error::PlanInfeasible(format!(
                    "w = {w} exceeds the {} available class representatives",
                    classes.m
                )));
            }
            let mut out = Vec::with_capacity(w);
            if plan.include_identity {
                out.push(classes.reps[0].clone());
            }
            out.extend(
                distinct_indices(rng, available, random_count)
                    .into_iter()
                    .map(|i| classes.reps[i + offset].clone()),
            );
            out
        }
        (SamplingMode::Coset(subset), _) => coset_elements(subset, rng)?.1,
        (SamplingMode::Explicit(list), _) => {
            if list.is_empty() {
                return Err(Error::PlanInfeasible("explicit draw list is empty".into()));
            }
            list.clone()
        }
        (mode, Population::Group(_)) => {
            return Err(Error::PlanInfeasible(format!(
                "{mode} sampling needs class representatives, not a group"
            )))
        }
        (mode, Population::Classes(_)) => {
            return Err(Error::PlanInfeasible(format!(
                "{mode} sampling needs a group, not class representatives"
            )))
        }
    };
    let plan = SamplingPlan {
        w: elements.len(),
        ..plan.clone()
    };
    Ok(RandomDraw {
        elements,
        plan,
        seed: None,
        naive_allowed: false,
    })
}

fn coset_elements<R: Rng + ?Sized>(
    subset: &[GroupElement],
    rng: &mut R,
) -> Result<(GroupElement, Vec<GroupElement>)> {
    if subset.is_empty() {
        return Err(Error::PlanInfeasible(
            "coset scheme needs a non-empty subset".into(),
        ));
    }
    let h = subset[rng.random_range(0..subset.len())].clone();
    let h_inv = h.inverse();
    let elements = subset
        .iter()
        .map(|g| g.compose(&h_inv))
        .collect::<Result<Vec<_>>>()?;
    Ok((h, elements))
}

struct Evaluated {
    reference: Reference,
    observed: f64,
    w: usize,
}

fn evaluate_draw<S: Statistic>(x: &[f64], draw: &RandomDraw, stat: &S) -> Result<Evaluated> {
    draw.require_identity()?;
    let observed = stat.evaluate(x)?;
    let values = transformed_values(stat, x, &draw.elements)?;
    Ok(Evaluated {
        reference: Reference::from_weighted(
            values.into_iter().map(|v| (v, 1)),
            stat.tie_tolerance(),
        ),
        observed,
        w: draw.w(),
    })
}

fn base_report<S: Statistic>(
    procedure: &str,
    draw: &RandomDraw,
    stat: &S,
    alpha: f64,
    eval: &Evaluated,
) -> TestReport {
    let boundary = locate(&eval.reference, eval.observed, alpha);
    let b = eval.reference.count_at_least(eval.observed);
    let mut report = TestReport::new(procedure, stat.describe(), alpha, eval.observed);
    report.reference_size = eval.w as u128;
    report.threshold_index = boundary.k;
    report.threshold_value = boundary.threshold;
    report.k_prime = Some(boundary.k);
    report.w = Some(eval.w);
    report.counts = Counts {
        m_plus: boundary.m_plus,
        m_zero: boundary.m_zero,
        d: None,
        b: Some(b),
    };
    report.decision = if boundary.above {
        Decision::Reject
    } else {
        Decision::Retain
    };
    let ratio = b as f64 / eval.w as f64;
    if draw.contains_identity() {
        report.p_value = Some(ratio);
    } else {
        report.p_hat = Some(ratio);
        report.p_tilde = Some((b as f64 + 1.0) / (eval.w as f64 + 1.0));
    }
    report.plan = Some(draw.plan.summary());
    report.seed = draw.seed;
    report.draws = Some(draw.elements.clone());
    report
}

/// Rejects iff `T(x) > T^(k')` over the `w` values `T(g_j x)`, with
/// `k' = ceil((1 - alpha) w)`. The p-value is `B / w`.
pub fn random_test<S: Statistic>(
    x: &[f64],
    draw: &RandomDraw,
    stat: S,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let eval = evaluate_draw(x, draw, &stat)?;
    Ok(base_report("random", draw, &stat, alpha, &eval))
}

/// `p' = #{T(g_j x) > T(x)} / w + u #{T(g_j x) = T(x)} / w`.
fn randomized_p(eval: &Evaluated, u: f64) -> f64 {
    let above = eval.reference.count_greater(eval.observed) as f64;
    let tied = eval.reference.count_equal(eval.observed) as f64;
    (above + u * tied) / eval.w as f64
}

/// The random-draw test with the boundary case `T(x) = T^(k')` rejected
/// with probability `a = (w alpha - M_plus) / M_zero`, realised by `u`.
///
/// At the boundary it rejects iff `p' <= alpha`, which is the event
/// `u <= a`; the report carries `p'` as its p-value and `B / w` as the
/// upper bound, so `p' <= alpha` holds exactly when the test rejects.
pub fn randomized_exact_test_with_u<S: Statistic>(
    x: &[f64],
    draw: &RandomDraw,
    stat: S,
    alpha: f64,
    u: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_u(u)?;
    let eval = evaluate_draw(x, draw, &stat)?;
    let mut report = base_report("randomized-exact", draw, &stat, alpha, &eval);
    let boundary = locate(&eval.reference, eval.observed, alpha);
    let a = boundary_probability(alpha, eval.w as u128, boundary.m_plus, boundary.m_zero);
    let p_prime = randomized_p(&eval, u);
    if !boundary.above && boundary.tied {
        report.decision = if p_prime <= alpha {
            Decision::Reject
        } else {
            Decision::Retain
        };
    }
    report.boundary_probability = Some(a);
    report.u = Some(u);
    report.p_value_upper = report.p_value.or(report.p_hat);
    report.p_value = Some(p_prime);
    Ok(report)
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidData(format!("u must lie in (0, 1], got {u}")))
    }
}

pub fn randomized_exact_test<S: Statistic, R: Rng + ?Sized>(
    x: &[f64],
    draw: &RandomDraw,
    stat: S,
    alpha: f64,
    rng: &mut R,
) -> Result<TestReport> {
    let u = draw_u(rng);
    randomized_exact_test_with_u(x, draw, stat, alpha, u)
}

/// The randomized p-value `p'` for a given `u` in `(0, 1]`.
pub fn randomized_pvalue_with_u<S: Statistic>(
    x: &[f64],
    draw: &RandomDraw,
    stat: S,
    u: f64,
) -> Result<f64> {
    check_u(u)?;
    let eval = evaluate_draw(x, draw, &stat)?;
    Ok(randomized_p(&eval, u))
}

pub fn randomized_pvalue<S: Statistic, R: Rng + ?Sized>(
    x: &[f64],
    draw: &RandomDraw,
    stat: S,
    rng: &mut R,
) -> Result<f64> {
    let u = draw_u(rng);
    randomized_pvalue_with_u(x, draw, stat, u)
}

/// `B / w`, an upper bound on `p'` for the same draw.
pub fn pvalue_upper_bound<S: Statistic>(x: &[f64], draw: &RandomDraw, stat: S) -> Result<f64> {
    let eval = evaluate_draw(x, draw, &stat)?;
    Ok(eval.reference.count_at_least(eval.observed) as f64 / eval.w as f64)
}

fn check_counts(b: u64, w: u64) -> Result<()> {
    if b > w {
        return Err(Error::InvalidData(format!("b = {b} exceeds w = {w}")));
    }
    Ok(())
}

/// `P(B <= b) = (b + 1) / (w + 1)` when the `w` draws come from distinct
/// equivalence classes other than the identity's.
pub fn pvalue_without_replacement(b: u64, w: u64) -> Result<f64> {
    check_counts(b, w)?;
    Ok((b as f64 + 1.0) / (w as f64 + 1.0))
}

/// `P(B <= b)` when the `w` draws are independent and uniform over `m`
/// equal-size classes: the rank `r` of the observed class from the top is
/// uniform on `1..=m` and each draw ties or exceeds with probability `r / m`,
/// so the answer is `(1/m) sum_r P(Binomial(w, r/m) <= b)`.
pub fn pvalue_with_replacement(b: u64, w: u64, m: u64) -> Result<f64> {
    check_counts(b, w)?;
    if m == 0 {
        return Err(Error::InvalidData("m must be at least 1".into()));
    }
    let mut total = 0.0;
    for r in 1..=m {
        let p = r as f64 / m as f64;
        let cdf = if r == m {
            // Binomial(w, 1) is a point mass at w.
            if b >= w {
                1.0
            } else {
                0.0
            }
        } else {
            Binomial::new(p, w)
                .map_err(|e| Error::InvalidData(e.to_string()))?
                .cdf(b)
        };
        total += cdf;
    }
    Ok((total / m as f64).min(1.0))
}

/// Naive estimates of the full-group p-value from draws that need not
/// include the identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PValueEstimate {
    pub b: u64,
    pub w: u64,
    /// `B / w`: unbiased for `D / #G` but not a valid p-value.
    pub p_hat: f64,
    /// `(B + 1) / (w + 1)`.
    pub p_tilde: f64,
}

pub fn estimate_pvalue<S: Statistic>(
    x: &[f64],
    draw: &RandomDraw,
    stat: S,
) -> Result<PValueEstimate> {
    if draw.elements.is_empty() {
        return Err(Error::PlanInfeasible("draw is empty".into()));
    }
    let observed = stat.evaluate(x)?;
    let values = transformed_values(&stat, x, &draw.elements)?;
    let reference =
        Reference::from_weighted(values.into_iter().map(|v| (v, 1)), stat.tie_tolerance());
    let b = reference.count_at_least(observed) as u64;
    let w = draw.w() as u64;
    Ok(PValueEstimate {
        b,
        w,
        p_hat: b as f64 / w as f64,
        p_tilde: (b as f64 + 1.0) / (w as f64 + 1.0),
    })
}

/// Coset scheme: draws `h` uniformly from the subset `G*` and compares
/// `T(x)` with the `k*`-th smallest of `T(g h^-1 x)`, `g` in `G*`.
pub fn coset_scheme_test<S: Statistic, R: Rng + ?Sized>(
    x: &[f64],
    subset: &[GroupElement],
    stat: S,
    alpha: f64,
    rng: &mut R,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let (_, elements) = coset_elements(subset, rng)?;
    let draw = RandomDraw {
        plan: SamplingPlan::new(SamplingMode::Coset(subset.to_vec()), elements.len()),
        elements,
        seed: None,
        naive_allowed: false,
    };
    let eval = evaluate_draw(x, &draw, &stat)?;
    let mut report = base_report("coset", &draw, &stat, alpha, &eval);
    report.k_prime = None;
    Ok(report)
}

/// Plain Monte Carlo test: `X_1 = x` and `X_2, ..., X_w` drawn by
/// `null_sampler` from the null law. Rejects iff `T(x) > T^(k')`; the
/// p-value is `B' / w`.
pub fn monte_carlo_test<S, R, F>(
    x: &[f64],
    mut null_sampler: F,
    stat: S,
    w: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<TestReport>
where
    S: Statistic,
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<Vec<f64>>,
{
    check_alpha(alpha)?;
    if w == 0 {
        return Err(Error::PlanInfeasible("w must be at least 1".into()));
    }
    let observed = stat.evaluate(x)?;
    let mut values = Vec::with_capacity(w);
    values.push(observed);
    for _ in 1..w {
        let sample = null_sampler(rng)?;
        values.push(stat.evaluate(&sample)?);
    }
    let reference =
        Reference::from_weighted(values.into_iter().map(|v| (v, 1)), stat.tie_tolerance());
    let boundary = locate(&reference, observed, alpha);
    let b = reference.count_at_least(observed);
    let mut report = TestReport::new("monte-carlo", stat.describe(), alpha, observed);
    report.reference_size = w as u128;
    report.threshold_index = boundary.k;
    report.threshold_value = boundary.threshold;
    report.k_prime = Some(boundary.k);
    report.w = Some(w);
    report.counts = Counts {
        m_plus: boundary.m_plus,
        m_zero: boundary.m_zero,
        d: None,
        b: Some(b),
    };
    report.p_value = Some(b as f64 / w as f64);
    report.decision = if boundary.above {
        Decision::Reject
    } else {
        Decision::Retain
    };
    Ok(report)
}
