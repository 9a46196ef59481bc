//! Brute-force ground truth for tiny instances.
//!
//! Nothing here reuses the typicality or matcher code paths: joint types are
//! counted directly, typicality is decided in exact rational arithmetic, and
//! labelings are enumerated with Heap's algorithm rather than lexicographic
//! successors.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{theorem1_bound, BoundsError};
use crate::model::{CommunityLayout, JointDistribution};
use crate::permutation::{standard_permutation, Labeling, Permutation};
use crate::typicality::TYPICALITY_SLACK;

/// Largest outcome space `(|X| |X'|)^n` the probability oracle enumerates.
pub const OUTCOME_GUARD: u128 = 100_000_000;
/// Largest number of labelings `enumerate_labelings` produces.
pub const LABELING_GUARD: u128 = 10_000_000;

const MAX_DENOMINATOR: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{what} has {size} elements, above the guard of {guard}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        guard: u128,
    },
    #[error("permutation acts on {found} elements, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("alpha * n = {0} is not a whole number of fixed points")]
    FractionalFixedPoints(f64),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// A probability computed by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactProbability {
    /// Exact value when every model entry is a recognizable rational.
    #[serde(serialize_with = "rational_string")]
    pub exact: Option<BigRational>,
    pub value: f64,
    /// Bound on `|value - true value|`; zero beyond rendering when exact.
    pub error_bound: f64,
}

fn rational_string<S: serde::Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl ExactProbability {
    /// Equality in exact arithmetic when both sides are exact, otherwise
    /// within the combined error bounds.
    pub fn agrees_with(&self, other: &ExactProbability) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => (self.value - other.value).abs() <= self.error_bound + other.error_bound + 1e-12,
        }
    }
}

/// Smallest-denominator rational whose `f64` rendering is exactly `x`, if
/// one exists with denominator at most `MAX_DENOMINATOR`.
pub fn recover_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    // continued-fraction convergents
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > MAX_DENOMINATOR as i128 {
            return None;
        }
        if h2 as f64 / k2 as f64 == x {
            return Some(BigRational::new(BigInt::from(h2), BigInt::from(k2)));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn exact_of_float(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// `allowed[k][c]`: whether count `c` of cell `k` is within `eps` of `p_k`.
fn typical_counts(p: &[BigRational], n: usize, eps: &BigRational) -> Vec<Vec<bool>> {
    let nr = BigRational::from_integer(BigInt::from(n));
    p.iter()
        .map(|pk| {
            (0..=n)
                .map(|c| {
                    let freq = BigRational::from_integer(BigInt::from(c)) / &nr;
                    (freq - pk).abs() <= *eps
                })
                .collect()
        })
        .collect()
}

/// For each joint type of the unpermuted draw, how many draws with that type
/// have a typical permuted pair.
fn typical_draws_by_type(
    cells: usize,
    cols: usize,
    n: usize,
    first: &[usize],
    second: &[usize],
    allowed: &[Vec<bool>],
) -> BTreeMap<Vec<u8>, u64> {
    // split on the symbol of the first draw, merge in order
    let parts: Vec<BTreeMap<Vec<u8>, u64>> = (0..cells)
        .into_par_iter()
        .map(|lead| {
            let mut out = BTreeMap::new();
            let mut s = vec![0usize; n];
            s[0] = lead;
            let mut own = vec![0u8; cells];
            let mut moved = vec![0u8; cells];
            loop {
                own.iter_mut().for_each(|c| *c = 0);
                moved.iter_mut().for_each(|c| *c = 0);
                for &sym in &s {
                    own[sym] += 1;
                }
                for i in 0..n {
                    let x = s[first[i]] / cols;
                    let y = s[second[i]] % cols;
                    moved[x * cols + y] += 1;
                }
                if moved.iter().enumerate().all(|(k, &c)| allowed[k][c as usize]) {
                    *out.entry(own.clone()).or_insert(0) += 1;
                }
                // odometer over positions 1..n
                let mut pos = n;
                loop {
                    pos -= 1;
                    if pos == 0 {
                        return out;
                    }
                    s[pos] += 1;
                    if s[pos] < cells {
                        break;
                    }
                    s[pos] = 0;
                }
            }
        })
        .collect();
    let mut merged = BTreeMap::new();
    for part in parts {
        for (k, v) in part {
            *merged.entry(k).or_insert(0) += v;
        }
    }
    merged
}

fn neumaier_sum(terms: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs = 0.0f64;
    for t in terms {
        abs += t.abs();
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    (sum + comp, abs)
}

/// Probability that `(x_{first(i)}, y_{second(i)})_i` is ε-typical for `p`
/// when `(x_i, y_i)` are i.i.d. draws from `p`.
pub fn exact_permuted_typicality(
    p: &JointDistribution,
    first: &Permutation,
    second: &Permutation,
    eps: f64,
) -> Result<ExactProbability, OracleError> {
    let n = first.len();
    if second.len() != n {
        return Err(OracleError::LengthMismatch {
            expected: n,
            found: second.len(),
        });
    }
    let cells = p.rows() * p.cols();
    let size = (cells as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > OUTCOME_GUARD {
        return Err(OracleError::SizeGuard {
            what: "outcome space",
            size,
            guard: OUTCOME_GUARD,
        });
    }
    if n == 0 {
        return Ok(ExactProbability {
            exact: Some(BigRational::one()),
            value: 1.0,
            error_bound: 0.0,
        });
    }
    let recovered: Option<Vec<BigRational>> = p.as_slice().iter().map(|&x| recover_rational(x)).collect();
    // same slack as the main typicality test, added exactly
    let eps_r = exact_of_float(eps) + exact_of_float(TYPICALITY_SLACK);
    let targets: Vec<BigRational> = match &recovered {
        Some(r) => r.clone(),
        None => p.as_slice().iter().map(|&x| exact_of_float(x)).collect(),
    };
    let allowed = typical_counts(&targets, n, &eps_r);
    let by_type = typical_draws_by_type(cells, p.cols(), n, first.as_slice(), second.as_slice(), &allowed);

    if let Some(r) = recovered {
        let mut denom = BigInt::one();
        for q in &r {
            denom = denom.lcm(q.denom());
        }
        let nums: Vec<BigUint> = r
            .iter()
            .map(|q| (q.numer() * (&denom / q.denom())).to_biguint().expect("non-negative"))
            .collect();
        let mut total = BigUint::zero();
        for (t, count) in &by_type {
            let mut term = BigUint::from(*count);
            for (k, &c) in t.iter().enumerate() {
                term *= nums[k].pow(c as u32);
            }
            total += term;
        }
        let exact = BigRational::new(BigInt::from(total), denom.pow(n as u32));
        let value = exact.to_f64().expect("in [0, 1]");
        return Ok(ExactProbability {
            exact: Some(exact),
            value,
            error_bound: f64::EPSILON * value,
        });
    }

    let probs = p.as_slice();
    let (value, abs) = neumaier_sum(by_type.iter().map(|(t, &count)| {
        t.iter()
            .enumerate()
            .fold(count as f64, |acc, (k, &c)| acc * probs[k].powi(c as i32))
    }));
    let u = f64::EPSILON / 2.0;
    let error_bound = ((n + cells + 2) as f64 * u + 2.0 * u) * abs;
    Ok(ExactProbability {
        exact: None,
        value,
        error_bound,
    })
}

/// Probability that `(x^n, pi(y^n))` is ε-typical, with `pi(y)_i = y_{pi(i)}`.
pub fn exact_typicality_probability(
    p: &JointDistribution,
    pi: &Permutation,
    eps: f64,
) -> Result<ExactProbability, OracleError> {
    exact_permuted_typicality(p, &Permutation::identity(pi.len()), pi, eps)
}

/// Probability that `(pi(x^n), pi(y^n))` is ε-typical.
pub fn exact_joint_permuted_probability(
    p: &JointDistribution,
    pi: &Permutation,
    eps: f64,
) -> Result<ExactProbability, OracleError> {
    exact_permuted_typicality(p, pi, pi, eps)
}

/// `!k`, the number of permutations of `k` elements without fixed points.
pub fn derangement_count(k: usize) -> BigUint {
    let (mut prev, mut cur) = (BigUint::one(), BigUint::zero());
    if k == 0 {
        return prev;
    }
    for i in 2..=k {
        let next = BigUint::from(i - 1) * (&prev + &cur);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// All orderings of `items`, by Heap's algorithm.
fn heap_permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut a = items.to_vec();
    let n = a.len();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Every labeling of the layout's vertices, or only those that keep each
/// vertex's label inside its own community.
pub fn enumerate_labelings(layout: &CommunityLayout, community_preserving: bool) -> Result<Vec<Labeling>, OracleError> {
    let n = layout.n();
    let groups: Vec<Vec<usize>> = if community_preserving {
        (0..layout.c()).map(|i| layout.members(i)).collect()
    } else {
        vec![(0..n).collect()]
    };
    let size = groups
        .iter()
        .map(|g| factorial(g.len()))
        .fold(BigUint::one(), |a, b| a * b)
        .to_u128()
        .unwrap_or(u128::MAX);
    if size > LABELING_GUARD {
        return Err(OracleError::SizeGuard {
            what: "labeling space",
            size,
            guard: LABELING_GUARD,
        });
    }
    let mut out = vec![vec![0usize; n]];
    for g in &groups {
        let orders = heap_permutations(g);
        let mut next = Vec::with_capacity(out.len() * orders.len());
        for base in &out {
            for order in &orders {
                let mut lab = base.clone();
                for (&v, &label) in g.iter().zip(order) {
                    lab[v] = label;
                }
                next.push(lab);
            }
        }
        out = next;
    }
    Ok(out
        .into_iter()
        .map(|l| Labeling::from_vec(l).expect("bijection by construction"))
        .collect())
}

/// Partitions of `total` into parts of size at least two, each in
/// non-decreasing order.
pub fn cycle_length_partitions(total: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in min..=rem {
            if rem - part == 0 || rem - part >= part {
                cur.push(part);
                rec(rem - part, part, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(total, 2, &mut Vec::new(), &mut out);
    out
}

/// Every cycle structure `(m, lengths)` on `n` elements.
pub fn cycle_structures(n: usize) -> Vec<(usize, Vec<usize>)> {
    (0..=n)
        .rev()
        .flat_map(|m| cycle_length_partitions(n - m).into_iter().map(move |l| (m, l)))
        .collect()
}

/// A permutation with the same cycle structure as the standard one but
/// scattered over the index set: the standard permutation conjugated by a
/// seeded shuffle.
pub fn scattered_permutation(m: usize, lengths: &[usize], n: usize, seed: u64) -> Permutation {
    let std = standard_permutation(m, lengths, n).expect("valid cycle structure");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let tau = Permutation::from_vec(order).expect("shuffle is a bijection");
    tau.compose(&std).compose(&tau.inverse())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub m: usize,
    pub lengths: Vec<usize>,
    pub standard: f64,
    /// Both sequences permuted jointly agrees with no permutation.
    pub joint_matches_identity: bool,
    /// A scattered permutation agrees with the standard one.
    pub arbitrary_matches_standard: bool,
}

impl InvarianceRow {
    pub fn passed(&self) -> bool {
        self.joint_matches_identity && self.arbitrary_matches_standard
    }
}

/// Checks both permutation invariances of the typicality probability for
/// every cycle structure on `n` elements.
pub fn check_permutation_invariance(
    p: &JointDistribution,
    n: usize,
    eps: f64,
) -> Result<Vec<InvarianceRow>, OracleError> {
    let identity = exact_typicality_probability(p, &Permutation::identity(n), eps)?;
    cycle_structures(n)
        .into_iter()
        .enumerate()
        .map(|(k, (m, lengths))| {
            let std = standard_permutation(m, &lengths, n).expect("valid cycle structure");
            let scattered = scattered_permutation(m, &lengths, n, k as u64 + 1);
            let joint = exact_joint_permuted_probability(p, &scattered, eps)?;
            let a = exact_typicality_probability(p, &scattered, eps)?;
            let s = exact_typicality_probability(p, &std, eps)?;
            Ok(InvarianceRow {
                m,
                lengths,
                standard: s.value,
                joint_matches_identity: joint.agrees_with(&identity),
                arbitrary_matches_standard: a.agrees_with(&s),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCheckRow {
    pub alpha: f64,
    pub lengths: Vec<usize>,
    pub probability: f64,
    pub bound_log2: f64,
    pub holds: bool,
}

/// Compares the exact typicality probability of every permutation class with
/// `alpha n` fixed points against the exponent bound.
pub fn check_exponent_bound(
    p: &JointDistribution,
    n: usize,
    eps: f64,
    alphas: &[f64],
) -> Result<Vec<ExponentCheckRow>, OracleError> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        let mf = alpha * n as f64;
        let m = mf.round();
        if (mf - m).abs() > 1e-9 {
            return Err(OracleError::FractionalFixedPoints(mf));
        }
        let m = m as usize;
        let report = theorem1_bound(n, alpha, eps, p)?;
        for lengths in cycle_length_partitions(n - m) {
            let pi = standard_permutation(m, &lengths, n).expect("valid cycle structure");
            let prob = exact_typicality_probability(p, &pi, eps)?;
            let bound = report.bound_log2.exp2().min(1.0);
            let holds = match &prob.exact {
                Some(r) => *r <= exact_of_float(bound),
                None => prob.value <= bound + prob.error_bound,
            };
            rows.push(ExponentCheckRow {
                alpha,
                lengths,
                probability: prob.value,
                bound_log2: report.bound_log2,
                holds,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn two_symbol_pairs_uniform() {
        let p = JointDistribution::uniform(2, 2);
        let r = exact_typicality_probability(&p, &Permutation::identity(2), 0.3).unwrap();
        assert_eq!(r.exact, Some(ratio(12, 16)));
        assert_eq!(r.value, 0.75);
    }

    #[test]
    fn large_eps_is_certain() {
        let p = JointDistribution::dsbs(0.1);
        let pi = Permutation::from_one_based(&[2, 3, 1, 4]).unwrap();
        let r = exact_typicality_probability(&p, &pi, 1.0).unwrap();
        assert_eq!(r.exact, Some(BigRational::one()));
    }

    #[test]
    fn rational_recovery() {
        assert_eq!(recover_rational(0.45), Some(ratio(9, 20)));
        assert_eq!(recover_rational(0.25), Some(ratio(1, 4)));
        assert_eq!(recover_rational(0.0), Some(ratio(0, 1)));
        assert_eq!(recover_rational(1.0 / 3.0), Some(ratio(1, 3)));
        assert_eq!(recover_rational(std::f64::consts::PI - 3.0), None);
    }

    #[test]
    fn float_route_reports_error_bound() {
        let x = std::f64::consts::FRAC_1_PI;
        let p = JointDistribution::from_rows(&[vec![x / 2.0, 0.5 - x / 2.0], vec![0.25, 0.25]]).unwrap();
        let r = exact_typicality_probability(&p, &Permutation::identity(3), 2.0).unwrap();
        assert!(r.exact.is_none());
        assert!((r.value - 1.0).abs() <= r.error_bound);
        assert!(r.error_bound < 1e-13);
    }

    #[test]
    fn derangements() {
        let small: Vec<u64> = (0..8).map(|k| derangement_count(k).to_u64().unwrap()).collect();
        assert_eq!(small, vec![1, 0, 1, 2, 9, 44, 265, 1854]);
        let d10 = derangement_count(10).to_f64().unwrap() / factorial(10).to_f64().unwrap();
        assert!((d10 - (-1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn derangements_by_enumeration() {
        let layout = CommunityLayout::contiguous(&[4]).unwrap();
        let all = enumerate_labelings(&layout, false).unwrap();
        let none_fixed = all.iter().filter(|l| (0..4).all(|v| l.label_of(v) != v)).count();
        assert_eq!(none_fixed, 9);
    }

    #[test]
    fn labeling_counts() {
        let three = CommunityLayout::contiguous(&[3]).unwrap();
        assert_eq!(enumerate_labelings(&three, false).unwrap().len(), 6);
        let two_two = CommunityLayout::contiguous(&[2, 2]).unwrap();
        let kept = enumerate_labelings(&two_two, true).unwrap();
        assert_eq!(kept.len(), 4);
        let mut sorted = kept.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
        let big = CommunityLayout::contiguous(&[11]).unwrap();
        assert!(matches!(
            enumerate_labelings(&big, false),
            Err(OracleError::SizeGuard { .. })
        ));
    }

    #[test]
    fn fixed_point_counts_match_derangement_identity() {
        for n in 1..=6 {
            let layout = CommunityLayout::contiguous(&[n]).unwrap();
            let all = enumerate_labelings(&layout, false).unwrap();
            let mut by_m = vec![0u64; n + 1];
            for l in &all {
                by_m[(0..n).filter(|&v| l.label_of(v) == v).count()] += 1;
            }
            for (m, &count) in by_m.iter().enumerate() {
                let expected = binomial(n, m) * derangement_count(n - m);
                assert_eq!(BigUint::from(count), expected, "n = {n}, m = {m}");
            }
        }
    }

    #[test]
    fn cycle_structure_listing() {
        assert_eq!(cycle_length_partitions(4), vec![vec![2, 2], vec![4]]);
        assert_eq!(cycle_length_partitions(0), vec![Vec::<usize>::new()]);
        assert!(cycle_length_partitions(1).is_empty());
        // classes of S_4: id, (2), (3), (2,2), (4)
        assert_eq!(cycle_structures(4).len(), 5);
    }

    #[test]
    fn scattered_keeps_cycle_structure() {
        let p = scattered_permutation(2, &[2, 3], 7, 5);
        let cs = p.cycle_decomposition();
        assert_eq!(cs.m(), 2);
        assert_eq!(cs.lengths(), vec![2, 3]);
    }

    #[test]
    fn invariance_small() {
        let rows = check_permutation_invariance(&JointDistribution::dsbs(0.1), 4, 0.25).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(InvarianceRow::passed));
    }

    #[test]
    fn outcome_guard() {
        let p = JointDistribution::uniform(2, 2);
        assert!(matches!(
            exact_typicality_probability(&p, &Permutation::identity(14), 0.1),
            Err(OracleError::SizeGuard { .. })
        ));
    }
}
