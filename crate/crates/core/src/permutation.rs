//! Permutations of `[1, n]`, their cycle structure, and labelings.
//!
//! Stored 0-based. Serialized forms (one-line arrays) are 1-based.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermutationError {
    #[error("mapping is not a bijection of [1, {0}]")]
    NotBijection(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("cycle parameters do not fit n = {n}: m = {m}, lengths = {lengths:?}")]
    ParameterMismatch { m: usize, lengths: Vec<usize>, n: usize },
    #[error("labelings are defined on vertex sets of different sizes ({0} vs {1})")]
    DomainMismatch(usize, usize),
}

fn is_bijection(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    for &x in map {
        if x >= map.len() || std::mem::replace(&mut seen[x], true) {
            return false;
        }
    }
    true
}

/// Advances `items` to its next lexicographic arrangement. Returns `false`
/// (leaving `items` sorted ascending) after the last one.
pub fn next_lexicographic<T: Ord>(items: &mut [T]) -> bool {
    if items.len() < 2 {
        return false;
    }
    let mut i = items.len() - 1;
    while i > 0 && items[i - 1] >= items[i] {
        i -= 1;
    }
    if i == 0 {
        items.reverse();
        return false;
    }
    let mut j = items.len() - 1;
    while items[j] <= items[i - 1] {
        j -= 1;
    }
    items.swap(i - 1, j);
    items[i..].reverse();
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// From a 0-based one-line mapping `i -> map[i]`.
    pub fn from_vec(map: Vec<usize>) -> Result<Self, PermutationError> {
        if !is_bijection(&map) {
            return Err(PermutationError::NotBijection(map.len()));
        }
        Ok(Self { map })
    }

    /// From 1-based one-line notation.
    pub fn from_one_based(map: &[usize]) -> Result<Self, PermutationError> {
        let zero: Option<Vec<usize>> = map.iter().map(|&x| x.checked_sub(1)).collect();
        zero.map_or(Err(PermutationError::NotBijection(map.len())), Self::from_vec)
    }

    /// Builds from disjoint cycles given in 0-based indices.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self, PermutationError> {
        let mut map: Vec<usize> = (0..n).collect();
        let mut touched = vec![false; n];
        for cycle in cycles {
            for (k, &a) in cycle.iter().enumerate() {
                if a >= n || std::mem::replace(&mut touched[a], true) {
                    return Err(PermutationError::NotBijection(n));
                }
                map[a] = cycle[(k + 1) % cycle.len()];
            }
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.map.iter().map(|&x| x + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Self) -> Self {
        other.compose(self)
    }

    /// Reorders a sequence so that `out[i] = seq[π(i)]`.
    pub fn apply<T: Clone>(&self, seq: &[T]) -> Result<Vec<T>, PermutationError> {
        if seq.len() != self.len() {
            return Err(PermutationError::LengthMismatch {
                expected: self.len(),
                found: seq.len(),
            });
        }
        Ok(self.map.iter().map(|&j| seq[j].clone()).collect())
    }

    pub fn fixed_point_count(&self) -> usize {
        self.map.iter().enumerate().filter(|&(i, &j)| i == j).count()
    }

    /// `m / n`; 1 for the empty permutation.
    pub fn fixed_point_fraction(&self) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        self.fixed_point_count() as f64 / self.len() as f64
    }

    pub fn cycle_decomposition(&self) -> CycleStructure {
        let n = self.len();
        let mut visited = vec![false; n];
        let mut fixed_points = Vec::new();
        let mut cycles = Vec::new();
        // scanning upward makes each cycle start at its smallest element and
        // emits cycles ordered by that element
        for start in 0..n {
            if visited[start] {
                continue;
            }
            if self.map[start] == start {
                visited[start] = true;
                fixed_points.push(start);
                continue;
            }
            let mut cycle = Vec::new();
            let mut k = start;
            while !visited[k] {
                visited[k] = true;
                cycle.push(k);
                k = self.map[k];
            }
            cycles.push(cycle);
        }
        CycleStructure {
            n,
            fixed_points,
            cycles,
        }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = PermutationError;

    fn try_from(one_based: Vec<usize>) -> Result<Self, Self::Error> {
        Self::from_one_based(&one_based)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.to_one_based()
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation, 1-based; `()` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs = self.cycle_decomposition();
        if cs.cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in &cs.cycles {
            let parts: Vec<String> = cycle.iter().map(|&x| (x + 1).to_string()).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

/// Canonical cycle decomposition: fixed points plus non-trivial cycles, each
/// starting at its smallest element, cycles ordered by that element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleStructure {
    pub n: usize,
    pub fixed_points: Vec<usize>,
    pub cycles: Vec<Vec<usize>>,
}

impl CycleStructure {
    pub fn m(&self) -> usize {
        self.fixed_points.len()
    }

    pub fn r(&self) -> usize {
        self.cycles.len()
    }

    /// Cycle lengths in non-decreasing order.
    pub fn lengths(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.cycles.iter().map(Vec::len).collect();
        l.sort_unstable();
        l
    }

    pub fn alpha(&self) -> f64 {
        if self.n == 0 {
            1.0
        } else {
            self.m() as f64 / self.n as f64
        }
    }
}

/// The standard permutation with `m` fixed points and the given cycle lengths:
/// consecutive cycles `(1..i_1)(i_1+1..i_1+i_2)...` followed by the fixed
/// points `n-m+1..n`. Lengths are sorted ascending first.
pub fn standard_permutation(m: usize, lengths: &[usize], n: usize) -> Result<Permutation, PermutationError> {
    let total: usize = lengths.iter().sum();
    if lengths.iter().any(|&l| l < 2) || m + total != n {
        return Err(PermutationError::ParameterMismatch {
            m,
            lengths: lengths.to_vec(),
            n,
        });
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let mut map: Vec<usize> = (0..n).collect();
    let mut start = 0;
    for len in sorted {
        for k in 0..len {
            map[start + k] = start + (k + 1) % len;
        }
        start += len;
    }
    Ok(Permutation { map })
}

/// Bijection from vertices `0..n` to labels `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Labeling {
    labels: Vec<usize>,
}

impl Labeling {
    pub fn identity(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
        }
    }

    /// `labels[v]` is the 0-based label of vertex `v`.
    pub fn from_vec(labels: Vec<usize>) -> Result<Self, PermutationError> {
        if !is_bijection(&labels) {
            return Err(PermutationError::NotBijection(labels.len()));
        }
        Ok(Self { labels })
    }

    pub fn from_one_based(labels: &[usize]) -> Result<Self, PermutationError> {
        Permutation::from_one_based(labels).map(|p| Self { labels: p.map })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_of(&self, vertex: usize) -> usize {
        self.labels[vertex]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    /// Inverse map: `out[label] = vertex`.
    pub fn vertices_by_label(&self) -> Vec<usize> {
        let mut inv = vec![0; self.labels.len()];
        for (v, &a) in self.labels.iter().enumerate() {
            inv[a] = v;
        }
        inv
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&x| x + 1).collect()
    }

    pub fn as_permutation(&self) -> Permutation {
        Permutation {
            map: self.labels.clone(),
        }
    }

    /// Relabels through `p`: vertex `v` gets label `p(self(v))`.
    pub fn relabeled(&self, p: &Permutation) -> Self {
        Self {
            labels: self.labels.iter().map(|&a| p.image(a)).collect(),
        }
    }
}

impl TryFrom<Vec<usize>> for Labeling {
    type Error = PermutationError;

    fn try_from(one_based: Vec<usize>) -> Result<Self, Self::Error> {
        Self::from_one_based(&one_based)
    }
}

impl From<Labeling> for Vec<usize> {
    fn from(l: Labeling) -> Self {
        l.to_one_based()
    }
}

/// The permutation relating two labelings of one vertex set:
/// `π(i) = j` iff `σ'^{-1}(j) = σ^{-1}(i)`, i.e. `π = σ' ∘ σ^{-1}`.
pub fn from_labelings(sigma: &Labeling, sigma_prime: &Labeling) -> Result<Permutation, PermutationError> {
    if sigma.len() != sigma_prime.len() {
        return Err(PermutationError::DomainMismatch(sigma.len(), sigma_prime.len()));
    }
    let vertex_of = sigma.vertices_by_label();
    Ok(Permutation {
        map: vertex_of.iter().map(|&v| sigma_prime.label_of(v)).collect(),
    })
}
