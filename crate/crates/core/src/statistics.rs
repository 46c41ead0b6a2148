//! Test statistics and their values over sets of transformations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{DataVector, GroupElement};

/// Element lists at least this long are evaluated in parallel.
const PARALLEL_THRESHOLD: usize = 4096;

/// A real-valued test statistic `T`.
///
/// Implement this for in-process custom statistics.
pub trait Statistic: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    /// Absolute tolerance used when counting ties. Zero means exact equality.
    fn tie_tolerance(&self) -> f64 {
        0.0
    }

    /// `Some(n)` if the value depends on `x` only through the multiset of the
    /// first `n` entries and the multiset of the remaining ones.
    fn case_split(&self) -> Option<usize> {
        None
    }

    fn describe(&self) -> String;
}

impl<S: Statistic + ?Sized> Statistic for &S {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        (**self).evaluate(x)
    }

    fn tie_tolerance(&self) -> f64 {
        (**self).tie_tolerance()
    }

    fn case_split(&self) -> Option<usize> {
        (**self).case_split()
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Built-in statistics.
///
/// All of them sum in sorted order, so the result depends only on the
/// multiset of summed entries and ties within a relabeling class are
/// reproduced bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatisticSpec {
    /// Sum over the first `cases` entries minus the sum over the remaining
    /// `cases` entries; the data must have length `2 * cases`.
    DiffSum {
        cases: usize,
    },
    Mean,
    /// `|mean|`, for sign-flip designs.
    AbsMean,
    SumFirst {
        k: usize,
    },
}

fn sorted_sum(values: &[f64]) -> f64 {
    let mut buf = values.to_vec();
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

impl Statistic for StatisticSpec {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match *self {
            StatisticSpec::DiffSum { cases } => {
                if x.len() != 2 * cases {
                    return Err(Error::Dimension {
                        expected: 2 * cases,
                        found: x.len(),
                    });
                }
                Ok(sorted_sum(&x[..cases]) - sorted_sum(&x[cases..]))
            }
            StatisticSpec::Mean | StatisticSpec::AbsMean => {
                if x.is_empty() {
                    return Err(Error::Dimension {
                        expected: 1,
                        found: 0,
                    });
                }
                let mean = sorted_sum(x) / x.len() as f64;
                Ok(if *self == StatisticSpec::AbsMean {
                    mean.abs()
                } else {
                    mean
                })
            }
            StatisticSpec::SumFirst { k } => {
                if x.len() < k {
                    return Err(Error::Dimension {
                        expected: k,
                        found: x.len(),
                    });
                }
                Ok(sorted_sum(&x[..k]))
            }
        }
    }

    fn case_split(&self) -> Option<usize> {
        match *self {
            StatisticSpec::DiffSum { cases } => Some(cases),
            StatisticSpec::SumFirst { k } => Some(k),
            StatisticSpec::Mean | StatisticSpec::AbsMean => None,
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticSpec::DiffSum { cases } => write!(f, "diff-sum:n={cases}"),
            StatisticSpec::Mean => f.write_str("mean"),
            StatisticSpec::AbsMean => f.write_str("abs-mean"),
            StatisticSpec::SumFirst { k } => write!(f, "sum-first:k={k}"),
        }
    }
}

impl FromStr for StatisticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |prefix: &str, key: &str| -> Result<usize> {
            let rest = &s[prefix.len()..];
            let value = rest
                .strip_prefix(':')
                .and_then(|r| r.strip_prefix(key))
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "statistic `{s}` must look like {prefix}:{key}=<int>"
                    ))
                })?;
            let v: usize = value
                .parse()
                .map_err(|_| Error::Parse(format!("`{value}` is not a non-negative integer")))?;
            if v == 0 {
                return Err(Error::Parse(format!("statistic `{s}` needs {key} >= 1")));
            }
            Ok(v)
        };
        match s {
            "mean" => Ok(StatisticSpec::Mean),
            "abs-mean" => Ok(StatisticSpec::AbsMean),
            _ if s.starts_with("diff-sum") => Ok(StatisticSpec::DiffSum {
                cases: param("diff-sum", "n")?,
            }),
            _ if s.starts_with("sum-first") => Ok(StatisticSpec::SumFirst {
                k: param("sum-first", "k")?,
            }),
            _ => Err(Error::Parse(format!("unknown statistic `{s}`"))),
        }
    }
}

/// Wraps a statistic with a non-zero tie tolerance.
#[derive(Clone, Debug)]
pub struct WithTolerance<S> {
    pub inner: S,
    pub tolerance: f64,
}

impl<S: Statistic> Statistic for WithTolerance<S> {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.inner.evaluate(x)
    }

    fn tie_tolerance(&self) -> f64 {
        self.tolerance
    }

    fn case_split(&self) -> Option<usize> {
        self.inner.case_split()
    }

    fn describe(&self) -> String {
        format!(
            "{} (tie tolerance {})",
            self.inner.describe(),
            self.tolerance
        )
    }
}

/// `T(g x)` for every `g` in `elements`, in input order.
pub fn transformed_values<S: Statistic + ?Sized>(
    stat: &S,
    x: &[f64],
    elements: &[GroupElement],
) -> Result<Vec<f64>> {
    let eval = |g: &GroupElement, buf: &mut Vec<f64>| -> Result<f64> {
        buf.resize(x.len(), 0.0);
        g.apply_into(x, buf)?;
        stat.evaluate(buf)
    };
    if elements.len() >= PARALLEL_THRESHOLD {
        elements
            .par_iter()
            .map_init(Vec::new, |buf, g| eval(g, buf))
            .collect()
    } else {
        let mut buf = Vec::with_capacity(x.len());
        elements.iter().map(|g| eval(g, &mut buf)).collect()
    }
}

/// The orbit `{g x}` of a base point over a list of elements, with the
/// statistic value of each transformed point cached.
#[derive(Clone, Debug)]
pub struct OrbitView {
    pub base: DataVector,
    pub elements: Vec<GroupElement>,
    pub cache: Vec<f64>,
}

impl OrbitView {
    pub fn new<S: Statistic + ?Sized>(
        stat: &S,
        base: DataVector,
        elements: Vec<GroupElement>,
    ) -> Result<Self> {
        let cache = transformed_values(stat, base.as_slice(), &elements)?;
        Ok(OrbitView {
            base,
            elements,
            cache,
        })
    }

    pub fn points(&self) -> Result<Vec<DataVector>> {
        self.elements
            .iter()
            .map(|g| g.apply_vector(&self.base))
            .collect()
    }
}

/// Statistic values over a list of transformations.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitStatistics {
    /// `T(g_j x)` in draw order.
    pub raw: Vec<f64>,
    /// `raw` in ascending order; ties keep draw order.
    pub sorted: Vec<f64>,
    /// `T(x)`.
    pub original: f64,
    pub tolerance: f64,
}

impl OrbitStatistics {
    pub fn from_values(raw: Vec<f64>, original: f64, tolerance: f64) -> Self {
        let mut sorted = raw.clone();
        sorted.sort_by(f64::total_cmp);
        OrbitStatistics {
            raw,
            sorted,
            original,
            tolerance,
        }
    }

    /// The `k`-th smallest value, 1-based.
    pub fn order_statistic(&self, k: usize) -> f64 {
        self.sorted[k - 1]
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn count_greater(&self, t: f64) -> usize {
        self.raw
            .iter()
            .filter(|&&v| greater(v, t, self.tolerance))
            .count()
    }

    pub fn count_equal(&self, t: f64) -> usize {
        self.raw
            .iter()
            .filter(|&&v| ties(v, t, self.tolerance))
            .count()
    }

    pub fn count_at_least(&self, t: f64) -> usize {
        self.count_greater(t) + self.count_equal(t)
    }
}

/// Evaluates `T` on `x` and on every `g x`.
pub fn orbit_statistics<S: Statistic + ?Sized>(
    stat: &S,
    x: &[f64],
    elements: &[GroupElement],
) -> Result<OrbitStatistics> {
    if elements.is_empty() {
        return Err(Error::InvalidElement("no transformations given".into()));
    }
    let original = stat.evaluate(x)?;
    let raw = transformed_values(stat, x, elements)?;
    Ok(OrbitStatistics::from_values(
        raw,
        original,
        stat.tie_tolerance(),
    ))
}

pub(crate) fn greater(a: f64, b: f64, tolerance: f64) -> bool {
    a > b + tolerance
}

pub(crate) fn ties(a: f64, b: f64, tolerance: f64) -> bool {
    if tolerance == 0.0 {
        a == b
    } else {
        (a - b).abs() <= tolerance
    }
}

/// A weighted multiset of statistic values, the reference set a test
/// compares `T(x)` against.
///
/// Plain orbits have unit weights; relabeling classes carry their class size.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    /// Ascending values with multiplicities.
    entries: Vec<(f64, u128)>,
    total: u128,
    tolerance: f64,
}

impl Reference {
    pub fn from_orbit(orbit: &OrbitStatistics) -> Self {
        Self::from_weighted(orbit.raw.iter().map(|&v| (v, 1)), orbit.tolerance)
    }

    pub fn from_weighted(values: impl IntoIterator<Item = (f64, u128)>, tolerance: f64) -> Self {
        let mut entries: Vec<(f64, u128)> = values.into_iter().filter(|&(_, w)| w > 0).collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = entries.iter().map(|&(_, w)| w).sum();
        Reference {
            entries,
            total,
            tolerance,
        }
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    /// The `k`-th smallest value counting multiplicity, 1-based.
    pub fn order_statistic(&self, k: u128) -> f64 {
        assert!(
            k >= 1 && k <= self.total,
            "order statistic {k} out of range"
        );
        let mut seen = 0u128;
        for &(v, w) in &self.entries {
            seen += w;
            if seen >= k {
                return v;
            }
        }
        unreachable!("weights sum to total")
    }

    pub fn count_greater(&self, t: f64) -> u128 {
        self.entries
            .iter()
            .filter(|&&(v, _)| greater(v, t, self.tolerance))
            .map(|&(_, w)| w)
            .sum()
    }

    pub fn count_equal(&self, t: f64) -> u128 {
        self.entries
            .iter()
            .filter(|&&(v, _)| ties(v, t, self.tolerance))
            .map(|&(_, w)| w)
            .sum()
    }

    pub fn count_at_least(&self, t: f64) -> u128 {
        self.count_greater(t) + self.count_equal(t)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}
