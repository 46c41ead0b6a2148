//! Finite transformation groups acting on data vectors.
//!
//! Index permutations use one-line notation with the action
//! `y[i] = x[perm[i]]`. Under that convention `compose(g, h)` is the element
//! that applies `h` first and then `g`, and its one-line array is
//! `c[i] = h[g[i]]`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the number of elements [`enumerate`] will materialise.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Largest element list for which [`verify_group_axioms`] checks every pair.
pub const EXHAUSTIVE_AXIOM_LIMIT: usize = 10_000;

const SAMPLED_AXIOM_PAIRS: usize = 1_000_000;

/// An observed sample: a non-empty vector of finite reals.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DataVector(Vec<f64>);

impl DataVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData("data vector is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(DataVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for DataVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        DataVector::new(values).map_err(serde::de::Error::custom)
    }
}

impl AsRef<[f64]> for DataVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Permutation,
    SignMask,
    Shift,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Permutation => "index-permutation",
            ElementKind::SignMask => "sign-mask",
            ElementKind::Shift => "cyclic-shift",
        })
    }
}

/// A single transformation `g` of the sample space.
///
/// Values are immutable and compare by payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    /// One-line notation; acts as `y[i] = x[perm[i]]`.
    Permutation(Vec<usize>),
    /// Componentwise multiplication by `±1`.
    SignMask(Vec<i8>),
    /// Rotation `y[i] = x[(i + offset) mod n]`.
    Shift { n: usize, offset: usize },
}

impl GroupElement {
    pub fn permutation(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n == 0 {
            return Err(Error::InvalidElement("empty permutation".into()));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidElement(format!(
                    "{perm:?} is not a bijection of 0..{n}"
                )));
            }
            seen[p] = true;
        }
        Ok(GroupElement::Permutation(perm))
    }

    pub fn sign_mask(mask: Vec<i8>) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::InvalidElement("empty sign mask".into()));
        }
        if mask.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidElement(format!(
                "sign mask {mask:?} has entries outside {{-1, +1}}"
            )));
        }
        Ok(GroupElement::SignMask(mask))
    }

    pub fn shift(n: usize, offset: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidElement("cyclic shift on zero points".into()));
        }
        if offset >= n {
            return Err(Error::InvalidElement(format!(
                "shift offset {offset} outside 0..{n}"
            )));
        }
        Ok(GroupElement::Shift { n, offset })
    }

    pub fn identity_permutation(n: usize) -> Self {
        GroupElement::Permutation((0..n).collect())
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            GroupElement::Permutation(_) => ElementKind::Permutation,
            GroupElement::SignMask(_) => ElementKind::SignMask,
            GroupElement::Shift { .. } => ElementKind::Shift,
        }
    }

    /// Length of the data vectors this element acts on.
    pub fn dimension(&self) -> usize {
        match self {
            GroupElement::Permutation(p) => p.len(),
            GroupElement::SignMask(m) => m.len(),
            GroupElement::Shift { n, .. } => *n,
        }
    }

    /// The identity of the same kind and dimension.
    pub fn identity_like(&self) -> Self {
        match self {
            GroupElement::Permutation(p) => GroupElement::identity_permutation(p.len()),
            GroupElement::SignMask(m) => GroupElement::SignMask(vec![1; m.len()]),
            GroupElement::Shift { n, .. } => GroupElement::Shift { n: *n, offset: 0 },
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Permutation(p) => p.iter().enumerate().all(|(i, &v)| i == v),
            GroupElement::SignMask(m) => m.iter().all(|&s| s == 1),
            GroupElement::Shift { offset, .. } => *offset == 0,
        }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        let mismatch = || Error::InvalidComposition {
            left: format!("{} of dimension {}", self.kind(), self.dimension()),
            right: format!("{} of dimension {}", other.kind(), other.dimension()),
        };
        if self.dimension() != other.dimension() {
            return Err(mismatch());
        }
        match (self, other) {
            (GroupElement::Permutation(g), GroupElement::Permutation(h)) => Ok(
                GroupElement::Permutation(g.iter().map(|&gi| h[gi]).collect()),
            ),
            (GroupElement::SignMask(g), GroupElement::SignMask(h)) => Ok(GroupElement::SignMask(
                g.iter().zip(h).map(|(a, b)| a * b).collect(),
            )),
            (GroupElement::Shift { n, offset: a }, GroupElement::Shift { offset: b, .. }) => {
                Ok(GroupElement::Shift {
                    n: *n,
                    offset: (a + b) % n,
                })
            }
            _ => Err(mismatch()),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &pi) in p.iter().enumerate() {
                    inv[pi] = i;
                }
                GroupElement::Permutation(inv)
            }
            GroupElement::SignMask(m) => GroupElement::SignMask(m.clone()),
            GroupElement::Shift { n, offset } => GroupElement::Shift {
                n: *n,
                offset: (n - offset) % n,
            },
        }
    }

    /// `g x` as a new vector.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// `g x` written into `out`, which must have the same length as `x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dimension();
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: x.len(),
            });
        }
        if out.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: out.len(),
            });
        }
        match self {
            GroupElement::Permutation(p) => {
                for (o, &pi) in out.iter_mut().zip(p) {
                    *o = x[pi];
                }
            }
            GroupElement::SignMask(m) => {
                for ((o, &xi), &s) in out.iter_mut().zip(x).zip(m) {
                    *o = if s < 0 { -xi } else { xi };
                }
            }
            GroupElement::Shift { n, offset } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = x[(i + offset) % n];
                }
            }
        }
        Ok(())
    }

    pub fn apply_vector(&self, x: &DataVector) -> Result<DataVector> {
        self.apply(x.as_slice()).map(DataVector)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Permutation(p) => write!(f, "{p:?}"),
            GroupElement::SignMask(m) => write!(f, "{m:?}"),
            GroupElement::Shift { n, offset } => write!(f, "shift {offset} mod {n}"),
        }
    }
}

/// Wire form: permutations and sign masks are bare JSON integer arrays,
/// shifts are `{"shift": offset, "n": n}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireElement {
    Array(Vec<i64>),
    Shift { shift: usize, n: usize },
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = match self {
            GroupElement::Permutation(p) => {
                WireElement::Array(p.iter().map(|&v| v as i64).collect())
            }
            GroupElement::SignMask(m) => WireElement::Array(m.iter().map(|&v| v as i64).collect()),
            GroupElement::Shift { n, offset } => WireElement::Shift {
                shift: *offset,
                n: *n,
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = WireElement::deserialize(deserializer)?;
        element_from_wire(wire).map_err(serde::de::Error::custom)
    }
}

fn element_from_wire(wire: WireElement) -> Result<GroupElement> {
    match wire {
        WireElement::Shift { shift, n } => GroupElement::shift(n, shift),
        WireElement::Array(values) => {
            // A permutation of 0..n always contains 0; a sign mask never does.
            if values.contains(&0) {
                let perm = values
                    .iter()
                    .map(|&v| usize::try_from(v))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| {
                        Error::InvalidElement(format!("{values:?} has negative indices"))
                    })?;
                GroupElement::permutation(perm)
            } else {
                let mask = values
                    .iter()
                    .map(|&v| match v {
                        1 => Ok(1i8),
                        -1 => Ok(-1i8),
                        _ => Err(Error::InvalidElement(format!(
                            "{values:?} is neither a permutation nor a sign mask"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                GroupElement::sign_mask(mask)
            }
        }
    }
}

/// Reads an explicit list of elements from JSON text.
pub fn elements_from_json(text: &str) -> Result<Vec<GroupElement>> {
    let elements: Vec<GroupElement> = serde_json::from_str(text)?;
    Ok(elements)
}

/// A finite group of transformations.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupSpec {
    /// All permutations of `n` indices.
    FullSymmetric(usize),
    /// All permutations of `2 * cases` indices; the first `cases` positions
    /// are cases and the rest controls.
    TwoSample { cases: usize },
    /// All `2^n` sign masks.
    SignFlip(usize),
    /// The `n` cyclic shifts.
    Cyclic(usize),
    /// A caller-supplied list. Group axioms are not assumed.
    Explicit(Vec<GroupElement>),
}

impl GroupSpec {
    /// Validates an explicit list: non-empty, same kind and dimension, no
    /// duplicates.
    pub fn explicit(elements: Vec<GroupElement>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidElement("explicit element list is empty".into()))?;
        let (kind, dim) = (first.kind(), first.dimension());
        if let Some(bad) = elements
            .iter()
            .find(|e| e.kind() != kind || e.dimension() != dim)
        {
            return Err(Error::InvalidComposition {
                left: format!("{kind} of dimension {dim}"),
                right: format!("{} of dimension {}", bad.kind(), bad.dimension()),
            });
        }
        let mut seen = HashSet::with_capacity(elements.len());
        if let Some(dup) = elements.iter().find(|e| !seen.insert(*e)) {
            return Err(Error::InvalidElement(format!("duplicate element {dup}")));
        }
        Ok(GroupSpec::Explicit(elements))
    }

    pub fn dimension(&self) -> usize {
        match self {
            GroupSpec::FullSymmetric(n) | GroupSpec::SignFlip(n) | GroupSpec::Cyclic(n) => *n,
            GroupSpec::TwoSample { cases } => 2 * cases,
            GroupSpec::Explicit(list) => list.first().map_or(0, GroupElement::dimension),
        }
    }

    /// `#G`, or `None` if it does not fit in a `u128`.
    pub fn cardinality(&self) -> Option<u128> {
        match self {
            GroupSpec::FullSymmetric(n) => factorial(*n as u128),
            GroupSpec::TwoSample { cases } => factorial(2 * *cases as u128),
            GroupSpec::SignFlip(n) => 1u128.checked_shl(u32::try_from(*n).ok()?),
            GroupSpec::Cyclic(n) => Some(*n as u128),
            GroupSpec::Explicit(list) => Some(list.len() as u128),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupSpec::FullSymmetric(n) => GroupElement::identity_permutation(*n),
            GroupSpec::TwoSample { cases } => GroupElement::identity_permutation(2 * cases),
            GroupSpec::SignFlip(n) => GroupElement::SignMask(vec![1; *n]),
            GroupSpec::Cyclic(n) => GroupElement::Shift { n: *n, offset: 0 },
            GroupSpec::Explicit(list) => list[0].identity_like(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::Explicit(list) if list.is_empty() => Err(Error::InvalidElement(
                "explicit element list is empty".into(),
            )),
            GroupSpec::Explicit(_) => Ok(()),
            _ if self.dimension() == 0 => Err(Error::InvalidElement(format!(
                "group {self} acts on zero points"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::FullSymmetric(n) => write!(f, "full-symmetric:{n}"),
            GroupSpec::TwoSample { cases } => write!(f, "two-sample:{cases}"),
            GroupSpec::SignFlip(n) => write!(f, "sign-flip:{n}"),
            GroupSpec::Cyclic(n) => write!(f, "cyclic:{n}"),
            GroupSpec::Explicit(list) => write!(f, "explicit:{}", list.len()),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `full-symmetric:<n>`, `two-sample:<cases>`, `sign-flip:<n>` or
    /// `cyclic:<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, param) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("group `{s}` must look like <family>:<n>")))?;
        let n: usize = param
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("group size `{param}` is not an integer")))?;
        if n == 0 {
            return Err(Error::Parse("group size must be at least 1".into()));
        }
        match family.trim() {
            "full-symmetric" | "symmetric" => Ok(GroupSpec::FullSymmetric(n)),
            "two-sample" => Ok(GroupSpec::TwoSample { cases: n }),
            "sign-flip" => Ok(GroupSpec::SignFlip(n)),
            "cyclic" => Ok(GroupSpec::Cyclic(n)),
            other => Err(Error::Parse(format!("unknown group family `{other}`"))),
        }
    }
}

pub(crate) fn factorial(n: u128) -> Option<u128> {
    (1..=n).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

pub(crate) fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn check_cap(cardinality: Option<u128>, cap: u128) -> Result<u128> {
    match cardinality {
        Some(c) if c <= cap => Ok(c),
        Some(c) => Err(Error::GroupTooLarge {
            cardinality: c.to_string(),
            cap,
        }),
        None => Err(Error::GroupTooLarge {
            cardinality: "more than 2^128".into(),
            cap,
        }),
    }
}

/// Every element of `spec`, identity first, under the default cap.
pub fn enumerate(spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    enumerate_with_cap(spec, DEFAULT_ENUMERATION_CAP)
}

/// Every element of `spec`, identity first.
///
/// Permutations come in lexicographic order and sign masks in lexicographic
/// order with `+1` before `-1`. Explicit lists keep their order apart from
/// moving the identity (if present) to the front.
pub fn enumerate_with_cap(spec: &GroupSpec, cap: u128) -> Result<Vec<GroupElement>> {
    spec.validate()?;
    let count = check_cap(spec.cardinality(), cap)? as usize;
    let elements = match spec {
        GroupSpec::FullSymmetric(n) => lexicographic_permutations(*n, count),
        GroupSpec::TwoSample { cases } => lexicographic_permutations(2 * cases, count),
        GroupSpec::SignFlip(n) => (0..count)
            .map(|bits| {
                GroupElement::SignMask(
                    (0..*n)
                        .map(|i| if bits >> (n - 1 - i) & 1 == 1 { -1 } else { 1 })
                        .collect(),
                )
            })
            .collect(),
        GroupSpec::Cyclic(n) => (0..*n)
            .map(|offset| GroupElement::Shift { n: *n, offset })
            .collect(),
        GroupSpec::Explicit(list) => {
            let mut out = list.clone();
            if let Some(pos) = out.iter().position(GroupElement::is_identity) {
                let id = out.remove(pos);
                out.insert(0, id);
            }
            out
        }
    };
    Ok(elements)
}

fn lexicographic_permutations(n: usize, count: usize) -> Vec<GroupElement> {
    let mut out = Vec::with_capacity(count);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        out.push(GroupElement::Permutation(perm.clone()));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

/// Advances `perm` to its lexicographic successor; false once it was the last.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// One element drawn uniformly from `spec` without enumerating it.
pub fn sample_uniform<R: Rng + ?Sized>(spec: &GroupSpec, rng: &mut R) -> GroupElement {
    match spec {
        GroupSpec::FullSymmetric(n) => random_permutation(*n, rng),
        GroupSpec::TwoSample { cases } => random_permutation(2 * cases, rng),
        GroupSpec::SignFlip(n) => GroupElement::SignMask(
            (0..*n)
                .map(|_| if rng.random::<bool>() { -1 } else { 1 })
                .collect(),
        ),
        GroupSpec::Cyclic(n) => GroupElement::Shift {
            n: *n,
            offset: rng.random_range(0..*n),
        },
        GroupSpec::Explicit(list) => list[rng.random_range(0..list.len())].clone(),
    }
}

fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    GroupElement::Permutation(perm)
}

/// Outcome of checking the group axioms on a finite set of elements.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub schema: String,
    pub elements: usize,
    pub contains_identity: bool,
    pub closed_under_composition: bool,
    pub closed_under_inverse: bool,
    pub is_group: bool,
    /// Whether every ordered pair was composed (otherwise a seeded sample).
    pub exhaustive: bool,
    pub pairs_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition_witness: Option<(GroupElement, GroupElement)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse_witness: Option<GroupElement>,
}

/// Checks identity, closure under composition and closure under inverse.
///
/// Lists of up to [`EXHAUSTIVE_AXIOM_LIMIT`] elements are checked on every
/// ordered pair; larger lists on a fixed-seed sample of pairs. Mixed kinds or
/// dimensions count as a closure failure.
pub fn verify_group_axioms(elements: &[GroupElement]) -> AxiomReport {
    let set: HashSet<&GroupElement> = elements.iter().collect();
    let contains_identity = elements.iter().any(GroupElement::is_identity);

    let inverse_witness = elements
        .iter()
        .find(|g| !set.contains(&g.inverse()))
        .cloned();

    let not_closed = |g: &GroupElement, h: &GroupElement| match g.compose(h) {
        Ok(gh) => !set.contains(&gh),
        Err(_) => true,
    };

    let exhaustive = elements.len() <= EXHAUSTIVE_AXIOM_LIMIT;
    let mut composition_witness = None;
    let mut pairs_checked = 0u64;
    if exhaustive {
        'outer: for g in elements {
            for h in elements {
                pairs_checked += 1;
                if not_closed(g, h) {
                    composition_witness = Some((g.clone(), h.clone()));
                    break 'outer;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a710);
        for _ in 0..SAMPLED_AXIOM_PAIRS {
            let g = &elements[rng.random_range(0..elements.len())];
            let h = &elements[rng.random_range(0..elements.len())];
            pairs_checked += 1;
            if not_closed(g, h) {
                composition_witness = Some((g.clone(), h.clone()));
                break;
            }
        }
    }

    let closed_under_composition = composition_witness.is_none();
    let closed_under_inverse = inverse_witness.is_none();
    AxiomReport {
        schema: crate::SCHEMA.to_string(),
        elements: elements.len(),
        contains_identity,
        closed_under_composition,
        closed_under_inverse,
        is_group: contains_identity && closed_under_composition && closed_under_inverse,
        exhaustive,
        pairs_checked,
        composition_witness,
        inverse_witness,
    }
}

/// Number of control indices a permutation moves into the first `cases`
/// positions.
pub fn label_crossings(perm: &[usize], cases: usize) -> usize {
    perm[..cases].iter().filter(|&&p| p >= cases).count()
}

/// All permutations of `2 * cases` indices that exchange exactly `cases / 2`
/// cases with `cases / 2` controls, in lexicographic order.
///
/// This set is not a group (it lacks the identity) and exists for negative
/// demonstrations only.
pub fn balanced_permutations(cases: usize) -> Result<Vec<GroupElement>> {
    if cases < 2 || cases % 2 == 1 {
        return Err(Error::UnsupportedDesign(format!(
            "balanced permutations need an even number of cases >= 2, got {cases}"
        )));
    }
    let half = cases as u128 / 2;
    let per_side = binomial(cases as u128, half).and_then(|c| c.checked_mul(c));
    let arrangements = factorial(cases as u128).and_then(|f| f.checked_mul(f));
    let count = per_side
        .zip(arrangements)
        .and_then(|(a, b)| a.checked_mul(b));
    check_cap(count, DEFAULT_ENUMERATION_CAP)?;

    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..2 * cases).collect();
    loop {
        if label_crossings(&perm, cases) == cases / 2 {
            out.push(GroupElement::Permutation(perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}
