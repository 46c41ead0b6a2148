//! Tests and p-values that use every element of the group.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{
    binomial, enumerate_with_cap, factorial, GroupElement, GroupSpec, DEFAULT_ENUMERATION_CAP,
};
use crate::statistics::{
    greater, orbit_statistics, ties, transformed_values, Reference, Statistic,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Reject,
    Retain,
    /// Boundary case of a randomized rule that has not been realised; the
    /// probability is in `boundary_probability`.
    RejectWithProbability,
}

impl Decision {
    pub fn rejects(self) -> bool {
        self == Decision::Reject
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Counts {
    /// Reference values strictly above the threshold value.
    #[serde(rename = "M_plus")]
    pub m_plus: u128,
    /// Reference values tied with the threshold value.
    #[serde(rename = "M_zero")]
    pub m_zero: u128,
    /// `#{g in G : T(g x) >= T(x)}` for full-group tests.
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<u128>,
    /// `#{j : T(g_j x) >= T(x)}` for tests on drawn transformations.
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<u128>,
}

/// Summary of the sampling plan behind a random-draw test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanSummary {
    pub mode: String,
    pub w: usize,
    pub include_identity: bool,
}

/// Outcome of a single test invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub schema: String,
    pub procedure: String,
    pub statistic: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub decision: Decision,
    pub alpha: f64,
    /// `T(x)`.
    pub observed: f64,
    /// Size of the reference multiset (`#G`, `w` or `#G*`).
    pub reference_size: u128,
    /// `k`, `k'` or `k*`.
    pub threshold_index: u128,
    /// The order statistic at `threshold_index`.
    pub threshold_value: f64,
    pub counts: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// `B / w`, the conservative bound reported next to a randomized p-value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_probability: Option<f64>,
    /// The uniform that realised the boundary decision.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_prime: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<Vec<GroupElement>>,
}

impl TestReport {
    pub(crate) fn new(procedure: &str, statistic: String, alpha: f64, observed: f64) -> Self {
        TestReport {
            schema: crate::SCHEMA.to_string(),
            procedure: procedure.to_string(),
            statistic,
            group: None,
            decision: Decision::Retain,
            alpha,
            observed,
            reference_size: 0,
            threshold_index: 0,
            threshold_value: observed,
            counts: Counts::default(),
            p_value: None,
            p_value_upper: None,
            boundary_probability: None,
            u: None,
            seed: None,
            w: None,
            k_prime: None,
            plan: None,
            p_hat: None,
            p_tilde: None,
            draws: None,
        }
    }

    pub fn rejects(&self) -> bool {
        self.decision.rejects()
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// `k = ceil((1 - alpha) * total)`, clamped to `[1, total]`.
///
/// Computed as `total - floor(alpha * total)`. A product within a relative
/// `1e-9` of an integer is snapped to it so that grid levels such as `j / m`
/// land on their intended index despite binary rounding.
pub fn threshold_index(alpha: f64, total: u128) -> u128 {
    let scaled = alpha * total as f64;
    let nearest = scaled.round();
    let floor = if (scaled - nearest).abs() <= 1e-9 * scaled.abs().max(1.0) {
        nearest
    } else {
        scaled.floor()
    };
    let k = total.saturating_sub(floor.max(0.0) as u128);
    k.clamp(1, total.max(1))
}

/// Position of `T(x)` relative to the `k`-th order statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Boundary {
    pub k: u128,
    pub threshold: f64,
    pub m_plus: u128,
    pub m_zero: u128,
    pub above: bool,
    pub tied: bool,
}

pub(crate) fn locate(reference: &Reference, observed: f64, alpha: f64) -> Boundary {
    let k = threshold_index(alpha, reference.total());
    let threshold = reference.order_statistic(k);
    Boundary {
        k,
        threshold,
        m_plus: reference.count_greater(threshold),
        m_zero: reference.count_equal(threshold),
        above: greater(observed, threshold, reference.tolerance()),
        tied: ties(observed, threshold, reference.tolerance()),
    }
}

/// `a = (alpha * N - M_plus) / M_zero`, clamped to `[0, 1]` against rounding.
pub fn boundary_probability(alpha: f64, total: u128, m_plus: u128, m_zero: u128) -> f64 {
    if m_zero == 0 {
        return 0.0;
    }
    ((alpha * total as f64 - m_plus as f64) / m_zero as f64).clamp(0.0, 1.0)
}

/// Uniform on `(0, 1]`.
pub(crate) fn draw_u<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// One representative per equivalence class of transformations that give
/// identical statistic values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassRepresentatives {
    /// `h_1 = id, h_2, ..., h_m`.
    pub reps: Vec<GroupElement>,
    pub m: usize,
    pub class_size: u128,
    #[serde(skip)]
    index: HashMap<Vec<usize>, usize>,
    #[serde(skip)]
    cases: Option<usize>,
}

impl ClassRepresentatives {
    /// Representatives for the two-sample design with `cases` cases and
    /// `cases` controls under the symmetric group on `2 * cases` indices,
    /// with the default cap on the number of classes.
    pub fn two_sample(cases: usize) -> Result<Self> {
        Self::two_sample_with_cap(cases, DEFAULT_ENUMERATION_CAP)
    }

    pub fn two_sample_with_cap(cases: usize, cap: u128) -> Result<Self> {
        if cases == 0 {
            return Err(Error::UnsupportedDesign(
                "two-sample design needs at least one case".into(),
            ));
        }
        Self::subsets(2 * cases, cases, cap)
    }

    /// Classes of the symmetric group on `dim` indices keyed by which indices
    /// land in the first `k` positions: `C(dim, k)` classes of size
    /// `k! (dim - k)!`.
    pub(crate) fn subsets(dim: usize, k: usize, cap: u128) -> Result<Self> {
        let m = binomial(dim as u128, k as u128);
        match m {
            Some(m) if m <= cap => {}
            _ => {
                return Err(Error::TooManyClasses {
                    classes: m.map_or_else(|| "more than 2^128".into(), |m| m.to_string()),
                    cap,
                })
            }
        }
        let class_size = factorial(k as u128)
            .zip(factorial((dim - k) as u128))
            .and_then(|(a, b)| a.checked_mul(b))
            .ok_or_else(|| Error::TooManyClasses {
                classes: "class size overflows".into(),
                cap,
            })?;

        let mut reps = Vec::new();
        let mut index = HashMap::new();
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            let mut in_subset = vec![false; dim];
            for &s in &subset {
                in_subset[s] = true;
            }
            let mut perm = subset.clone();
            perm.extend((0..dim).filter(|&i| !in_subset[i]));
            index.insert(subset.clone(), reps.len());
            reps.push(GroupElement::Permutation(perm));
            if !next_combination(&mut subset, dim) {
                break;
            }
        }
        Ok(ClassRepresentatives {
            m: reps.len(),
            reps,
            class_size,
            index,
            cases: Some(k),
        })
    }

    /// Caller-supplied representatives for a design where the caller vouches
    /// for the equal-size class structure. The first must be the identity.
    pub fn explicit(reps: Vec<GroupElement>, class_size: u128) -> Result<Self> {
        match reps.first() {
            Some(first) if first.is_identity() => {}
            _ => {
                return Err(Error::InvalidElement(
                    "the first class representative must be the identity".into(),
                ))
            }
        }
        Ok(ClassRepresentatives {
            m: reps.len(),
            reps,
            class_size,
            index: HashMap::new(),
            cases: None,
        })
    }

    /// Index of the class containing `g`, for subset-keyed representatives.
    pub fn class_of(&self, g: &GroupElement) -> Option<usize> {
        let k = self.cases?;
        let GroupElement::Permutation(p) = g else {
            return None;
        };
        let mut key = p.get(..k)?.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied()
    }

    pub fn group_order(&self) -> Option<u128> {
        (self.m as u128).checked_mul(self.class_size)
    }

    /// Representatives for a symmetric group and a statistic that only
    /// depends on which entries occupy its first `k` positions.
    pub fn for_design<S: Statistic>(group: &GroupSpec, stat: &S) -> Result<Self> {
        let dim = match group {
            GroupSpec::FullSymmetric(d) => *d,
            GroupSpec::TwoSample { cases } => 2 * cases,
            other => {
                return Err(Error::UnsupportedDesign(format!(
                    "class representatives are only available for symmetric groups, not {other}"
                )))
            }
        };
        let k = stat
            .case_split()
            .filter(|&k| k >= 1 && k < dim)
            .ok_or_else(|| {
                Error::UnsupportedDesign(format!("{} has no class structure", stat.describe()))
            })?;
        Self::subsets(dim, k, DEFAULT_ENUMERATION_CAP)
    }
}

/// Advances a sorted `k`-subset of `0..n` to its lexicographic successor.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Class representatives of the two-sample design, as used throughout the
/// crate.
pub fn class_representatives(cases: usize) -> Result<ClassRepresentatives> {
    ClassRepresentatives::two_sample(cases)
}

enum Orbit {
    Elements(Vec<GroupElement>),
    /// Symmetric group reduced to subset classes of equal size.
    Classes(ClassRepresentatives),
}

/// A full-group test with the group prepared once, for repeated use.
pub struct FullGroupTest<S> {
    group: GroupSpec,
    stat: S,
    orbit: Orbit,
}

impl<S: Statistic> FullGroupTest<S> {
    pub fn new(group: &GroupSpec, stat: S) -> Result<Self> {
        Self::with_cap(group, stat, DEFAULT_ENUMERATION_CAP)
    }

    /// Prepares the reference orbit. When the statistic only depends on which
    /// entries sit in its first `k` positions and the group is a symmetric
    /// group, the orbit is represented by one element per `k`-subset with
    /// weight `k! (d - k)!`; the resulting multiset is identical.
    pub fn with_cap(group: &GroupSpec, stat: S, cap: u128) -> Result<Self> {
        let symmetric_dim = match group {
            GroupSpec::FullSymmetric(d) => Some(*d),
            GroupSpec::TwoSample { cases } => Some(2 * cases),
            _ => None,
        };
        let orbit = match (symmetric_dim, stat.case_split()) {
            (Some(d), Some(k)) if k >= 1 && k < d => {
                Orbit::Classes(ClassRepresentatives::subsets(d, k, cap).map_err(|_| {
                    Error::GroupTooLarge {
                        cardinality: group
                            .cardinality()
                            .map_or_else(|| "more than 2^128".into(), |c| c.to_string()),
                        cap,
                    }
                })?)
            }
            _ => Orbit::Elements(enumerate_with_cap(group, cap)?),
        };
        Ok(FullGroupTest {
            group: group.clone(),
            stat,
            orbit,
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    fn check_dimension(&self, x: &[f64]) -> Result<()> {
        let dim = self.group.dimension();
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// The multiset `{T(g x) : g in G}` and `T(x)`.
    pub fn reference(&self, x: &[f64]) -> Result<(Reference, f64)> {
        self.check_dimension(x)?;
        let tolerance = self.stat.tie_tolerance();
        match &self.orbit {
            Orbit::Elements(elements) => {
                let orbit = orbit_statistics(&self.stat, x, elements)?;
                Ok((Reference::from_orbit(&orbit), orbit.original))
            }
            Orbit::Classes(classes) => {
                let values = transformed_values(&self.stat, x, &classes.reps)?;
                let reference = Reference::from_weighted(
                    values.into_iter().map(|v| (v, classes.class_size)),
                    tolerance,
                );
                Ok((reference, self.stat.evaluate(x)?))
            }
        }
    }

    fn report(
        &self,
        procedure: &str,
        x: &[f64],
        alpha: f64,
    ) -> Result<(TestReport, Boundary, Reference)> {
        check_alpha(alpha)?;
        let (reference, observed) = self.reference(x)?;
        let boundary = locate(&reference, observed, alpha);
        let d = reference.count_at_least(observed);
        let mut report = TestReport::new(procedure, self.stat.describe(), alpha, observed);
        report.group = Some(self.group.to_string());
        report.reference_size = reference.total();
        report.threshold_index = boundary.k;
        report.threshold_value = boundary.threshold;
        report.counts = Counts {
            m_plus: boundary.m_plus,
            m_zero: boundary.m_zero,
            d: Some(d),
            b: None,
        };
        report.p_value = Some(d as f64 / reference.total() as f64);
        report.decision = if boundary.above {
            Decision::Reject
        } else {
            Decision::Retain
        };
        Ok((report, boundary, reference))
    }

    /// Rejects iff `T(x) > T^(k)` with `k = ceil((1 - alpha) #G)`.
    pub fn test(&self, x: &[f64], alpha: f64) -> Result<TestReport> {
        Ok(self.report("full-group", x, alpha)?.0)
    }

    /// `D / #G`.
    pub fn pvalue(&self, x: &[f64]) -> Result<f64> {
        let (reference, observed) = self.reference(x)?;
        Ok(reference.count_at_least(observed) as f64 / reference.total() as f64)
    }

    /// The randomized boundary rule without realising it: the decision is
    /// `RejectWithProbability` when `T(x) = T^(k)`.
    pub fn hoeffding_rule(&self, x: &[f64], alpha: f64) -> Result<TestReport> {
        let (mut report, boundary, reference) = self.report("hoeffding", x, alpha)?;
        let a = boundary_probability(alpha, reference.total(), boundary.m_plus, boundary.m_zero);
        report.boundary_probability = Some(a);
        if !boundary.above && boundary.tied {
            report.decision = Decision::RejectWithProbability;
        }
        Ok(report)
    }

    /// The rule of [`Self::hoeffding_rule`] realised with `u`: at the
    /// boundary it rejects iff `u <= a`.
    pub fn hoeffding_with_u(&self, x: &[f64], alpha: f64, u: f64) -> Result<TestReport> {
        let mut report = self.hoeffding_rule(x, alpha)?;
        if report.decision == Decision::RejectWithProbability {
            let a = report.boundary_probability.unwrap_or(0.0);
            report.decision = if u <= a {
                Decision::Reject
            } else {
                Decision::Retain
            };
        }
        report.u = Some(u);
        Ok(report)
    }

    pub fn hoeffding<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        alpha: f64,
        rng: &mut R,
    ) -> Result<TestReport> {
        let u = draw_u(rng);
        self.hoeffding_with_u(x, alpha, u)
    }
}

/// Tests with the whole group: reject iff `T(x) > T^(k)`.
pub fn full_group_test<S: Statistic>(
    x: &[f64],
    group: &GroupSpec,
    stat: S,
    alpha: f64,
) -> Result<TestReport> {
    FullGroupTest::new(group, stat)?.test(x, alpha)
}

/// `D / #G` with `D = #{g : T(g x) >= T(x)}`.
pub fn full_group_pvalue<S: Statistic>(x: &[f64], group: &GroupSpec, stat: S) -> Result<f64> {
    FullGroupTest::new(group, stat)?.pvalue(x)
}

/// Full-group test made exact by rejecting with probability `a` at the
/// boundary, using a uniform drawn from `rng`.
pub fn hoeffding_randomized_test<S: Statistic, R: Rng + ?Sized>(
    x: &[f64],
    group: &GroupSpec,
    stat: S,
    alpha: f64,
    rng: &mut R,
) -> Result<TestReport> {
    FullGroupTest::new(group, stat)?.hoeffding(x, alpha, rng)
}
