//! The typicality matching scheme.
//!
//! A candidate labeling of the anonymized graph is kept when every
//! community-pair block of the two adjacency matrices is jointly ε-typical
//! with respect to that block's edge distribution. The scheme outputs a
//! uniformly random member of the resulting ambiguity set.
//!
//! Candidates are enumerated exhaustively. With side-information the search
//! is restricted by default to labelings that map each community of the
//! second graph onto the labels of the same community in the first graph.
//! Without side-information the scheme sweeps over hypothesized community
//! assignments for both graphs and takes the union of the per-hypothesis sets.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graphgen::{EdgeMatrix, MatchingInstance, Mode, SealedTruth};
use crate::model::PairedEdgeModel;
use crate::permutation::{next_lexicographic, Labeling};
use crate::typicality::{block_slots, TYPICALITY_SLACK};

/// Largest candidate space enumerated unless configured otherwise.
pub const DEFAULT_CANDIDATE_CAP: u64 = 10_000_000;
/// Largest `n` for which the unrestricted `c^n` assignment sweep is allowed.
pub const FULL_SWEEP_MAX_N: usize = 8;

const CHUNK: u64 = 2048;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("side-information matching needs community memberships")]
    MissingSideInfo,
    #[error("candidate space of {candidates} labelings exceeds the cap of {cap}")]
    SizeGuard { candidates: u128, cap: u64 },
    #[error("the unrestricted assignment sweep is limited to n <= {FULL_SWEEP_MAX_N}, got n = {0}")]
    FullSweepTooLarge(usize),
    #[error("community memberships do not have matching sizes in the two graphs")]
    InconsistentSideInfo,
    #[error("ambiguity set is empty; matching failed")]
    EmptyAmbiguitySet(Box<Diagnostics>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatcherConfig {
    pub candidate_cap: u64,
    /// Under side-information, only enumerate community-preserving labelings.
    pub community_preserving: bool,
    /// Without side-information, sweep every `c^n` assignment instead of only
    /// those with the known community sizes.
    pub full_sweep: bool,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            community_preserving: true,
            full_sweep: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    /// Sorted, duplicate-free.
    pub labelings: Vec<Labeling>,
    pub eps: f64,
    pub mode: Mode,
    /// Number of labelings tested.
    pub candidate_space: u128,
}

impl AmbiguitySet {
    pub fn len(&self) -> usize {
        self.labelings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labelings.is_empty()
    }

    pub fn contains(&self, labeling: &Labeling) -> bool {
        self.labelings.binary_search(labeling).is_ok()
    }

    pub fn is_subset_of(&self, other: &AmbiguitySet) -> bool {
        self.labelings.iter().all(|l| other.contains(l))
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

fn multinomial(sizes: &[usize]) -> u128 {
    let n: usize = sizes.iter().sum();
    let mut out = 1u128;
    let mut remaining = n;
    for &s in sizes {
        out = out.saturating_mul(binomial(remaining, s));
        remaining -= s;
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Labelings that send `vertices[t]` of each group to some arrangement of the
/// group's `labels`. One group with every vertex is the unrestricted space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSpace {
    n: usize,
    groups: Vec<(Vec<usize>, Vec<usize>)>,
}

impl CandidateSpace {
    pub fn unrestricted(n: usize) -> Self {
        Self {
            n,
            groups: vec![((0..n).collect(), (0..n).collect())],
        }
    }

    /// Community-preserving space: anonymous vertices of community `k` (per
    /// `vertex_communities`) take the labels of community `k` (per
    /// `label_communities`).
    pub fn community_preserving(
        label_communities: &[usize],
        vertex_communities: &[usize],
        communities: usize,
    ) -> Result<Self, MatchError> {
        let n = label_communities.len();
        if vertex_communities.len() != n {
            return Err(MatchError::InconsistentSideInfo);
        }
        let mut groups = vec![(Vec::new(), Vec::new()); communities];
        for (v, &k) in vertex_communities.iter().enumerate() {
            groups[k].0.push(v);
        }
        for (a, &k) in label_communities.iter().enumerate() {
            groups[k].1.push(a);
        }
        if groups.iter().any(|(vs, ls)| vs.len() != ls.len()) {
            return Err(MatchError::InconsistentSideInfo);
        }
        groups.retain(|(vs, _)| !vs.is_empty());
        Ok(Self { n, groups })
    }

    pub fn size(&self) -> u128 {
        self.groups
            .iter()
            .fold(1u128, |acc, (vs, _)| acc.saturating_mul(factorial(vs.len())))
    }

    /// Per-group arrangements of the candidate with the given rank. Group 0 is
    /// the most significant digit; within a group, arrangements are
    /// lexicographic.
    fn unrank(&self, mut rank: u128) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.groups.len()];
        for (g, (vs, labels)) in self.groups.iter().enumerate().rev() {
            let radix = factorial(vs.len());
            let mut digit = rank % radix;
            rank /= radix;
            let mut pool = labels.clone();
            let mut arrangement = Vec::with_capacity(pool.len());
            for k in (0..pool.len()).rev() {
                let f = factorial(k);
                let idx = (digit / f) as usize;
                digit %= f;
                arrangement.push(pool.remove(idx));
            }
            out[g] = arrangement;
        }
        out
    }

    /// Steps to the next candidate; false after the last.
    fn advance(arrangements: &mut [Vec<usize>]) -> bool {
        for arr in arrangements.iter_mut().rev() {
            if next_lexicographic(arr) {
                return true;
            }
        }
        false
    }

    fn fill_vertex_of(&self, arrangements: &[Vec<usize>], vertex_of: &mut [usize]) {
        for ((vs, _), arr) in self.groups.iter().zip(arrangements) {
            for (&v, &a) in vs.iter().zip(arr) {
                vertex_of[a] = v;
            }
        }
    }

    fn labeling_from(&self, vertex_of: &[usize]) -> Labeling {
        let mut labels = vec![0; self.n];
        for (a, &v) in vertex_of.iter().enumerate() {
            labels[v] = a;
        }
        Labeling::from_vec(labels).expect("candidate is a bijection")
    }

    /// Every candidate, in rank order. Intended for small spaces.
    pub fn labelings(&self) -> Vec<Labeling> {
        let mut out = Vec::new();
        self.scan(|_| true, &mut out);
        out
    }

    /// Visits candidates in rank order, collecting those `keep` accepts.
    /// `keep` receives the label-to-vertex map.
    fn scan(&self, mut keep: impl FnMut(&[usize]) -> bool, out: &mut Vec<Labeling>) {
        self.scan_range(0, self.size(), &mut keep, out)
    }

    fn scan_range(&self, start: u128, end: u128, keep: &mut impl FnMut(&[usize]) -> bool, out: &mut Vec<Labeling>) {
        if start >= end {
            return;
        }
        let mut arrangements = self.unrank(start);
        let mut vertex_of = vec![0; self.n];
        let mut rank = start;
        loop {
            self.fill_vertex_of(&arrangements, &mut vertex_of);
            if keep(&vertex_of) {
                out.push(self.labeling_from(&vertex_of));
            }
            rank += 1;
            if rank >= end || !Self::advance(&mut arrangements) {
                break;
            }
        }
    }
}

/// Precomputed typicality test for one hypothesis of label communities.
struct BlockTest {
    n: usize,
    l: usize,
    eps: f64,
    blocks: Vec<PreparedBlock>,
    second: Vec<u8>,
}

struct PreparedBlock {
    slots: Vec<(usize, usize)>,
    first: Vec<u8>,
    probs: Vec<f64>,
}

impl BlockTest {
    fn new(
        model: &PairedEdgeModel,
        first: &EdgeMatrix,
        second: &EdgeMatrix,
        label_communities: &[usize],
        communities: usize,
        eps: f64,
    ) -> Self {
        let blocks = block_slots(label_communities, communities)
            .into_iter()
            .filter(|b| !b.slots.is_empty())
            .map(|b| PreparedBlock {
                first: b.slots.iter().map(|&(a, c)| first.get(a, c)).collect(),
                probs: model.block_slice(b.i, b.j).to_vec(),
                slots: b.slots,
            })
            .collect();
        Self {
            n: first.n(),
            l: model.l(),
            eps,
            blocks,
            second: second.dense(),
        }
    }

    fn accepts(&self, vertex_of: &[usize], counts: &mut [u64]) -> bool {
        let n = self.n;
        let l = self.l;
        for block in &self.blocks {
            counts.iter_mut().for_each(|c| *c = 0);
            for (&(a, b), &x) in block.slots.iter().zip(&block.first) {
                let y = self.second[vertex_of[a] * n + vertex_of[b]];
                counts[x as usize * l + y as usize] += 1;
            }
            let len = block.slots.len() as f64;
            let ok = counts
                .iter()
                .zip(&block.probs)
                .all(|(&c, &p)| (c as f64 / len - p).abs() <= self.eps + TYPICALITY_SLACK);
            if !ok {
                return false;
            }
        }
        true
    }
}

fn typical_in_space(space: &CandidateSpace, test: &BlockTest) -> Vec<Labeling> {
    let total = space.size();
    let chunks: Vec<u128> = (0..total.div_ceil(CHUNK as u128)).collect();
    let l = test.l;
    chunks
        .into_par_iter()
        .map(|k| {
            let start = k * CHUNK as u128;
            let end = (start + CHUNK as u128).min(total);
            let mut counts = vec![0u64; l * l];
            let mut found = Vec::new();
            space.scan_range(
                start,
                end,
                &mut |vertex_of| test.accepts(vertex_of, &mut counts),
                &mut found,
            );
            found
        })
        .flatten()
        .collect()
}

fn guard(candidates: u128, cfg: &MatcherConfig) -> Result<(), MatchError> {
    if candidates > cfg.candidate_cap as u128 {
        return Err(MatchError::SizeGuard {
            candidates,
            cap: cfg.candidate_cap,
        });
    }
    Ok(())
}

/// Ambiguity set with complete side-information.
pub fn ambiguity_set_csi(inst: &MatchingInstance, eps: f64, cfg: &MatcherConfig) -> Result<AmbiguitySet, MatchError> {
    let side = inst.side_info.as_ref().ok_or(MatchError::MissingSideInfo)?;
    let c = inst.model.communities();
    let space = if cfg.community_preserving {
        CandidateSpace::community_preserving(&side.first, &side.second, c)?
    } else {
        CandidateSpace::unrestricted(inst.n())
    };
    let candidate_space = space.size();
    guard(candidate_space, cfg)?;
    let test = BlockTest::new(&inst.model, &inst.first, &inst.second, &side.first, c, eps);
    let mut labelings = typical_in_space(&space, &test);
    labelings.sort();
    Ok(AmbiguitySet {
        labelings,
        eps,
        mode: Mode::Csi,
        candidate_space,
    })
}

/// Every membership vector with the given community sizes, lexicographically.
pub fn assignments_with_sizes(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
        .collect();
    let mut out = vec![current.clone()];
    while next_lexicographic(&mut current) {
        out.push(current.clone());
    }
    out
}

fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Size vectors swept without side-information.
fn hypothesis_sizes(inst: &MatchingInstance, cfg: &MatcherConfig) -> Result<Vec<Vec<usize>>, MatchError> {
    if cfg.full_sweep {
        if inst.n() > FULL_SWEEP_MAX_N {
            return Err(MatchError::FullSweepTooLarge(inst.n()));
        }
        Ok(compositions(inst.n(), inst.model.communities()))
    } else {
        Ok(vec![inst.sizes.clone()])
    }
}

/// Number of candidate checks the sweep performs: per size vector, one
/// community-preserving space for each pair of hypothesized assignments.
pub fn wsi_candidate_count(inst: &MatchingInstance, cfg: &MatcherConfig) -> Result<u128, MatchError> {
    Ok(hypothesis_sizes(inst, cfg)?
        .iter()
        .map(|s| {
            let m = multinomial(s);
            let per: u128 = s.iter().fold(1u128, |acc, &k| acc.saturating_mul(factorial(k)));
            m.saturating_mul(m).saturating_mul(per)
        })
        .fold(0u128, u128::saturating_add))
}

/// Ambiguity set without side-information: the union over hypothesized
/// assignments `(Ĉ, Ĉ')` of the side-information set computed as if those
/// assignments were true. The typicality target for a hypothesized block is
/// the model block indexed by the hypothesized communities.
pub fn ambiguity_set_wsi(inst: &MatchingInstance, eps: f64, cfg: &MatcherConfig) -> Result<AmbiguitySet, MatchError> {
    let candidate_space = wsi_candidate_count(inst, cfg)?;
    guard(candidate_space, cfg)?;
    let c = inst.model.communities();
    let mut union = BTreeSet::new();
    for sizes in hypothesis_sizes(inst, cfg)? {
        let assignments = assignments_with_sizes(&sizes);
        for label_side in &assignments {
            let test = BlockTest::new(&inst.model, &inst.first, &inst.second, label_side, c, eps);
            for vertex_side in &assignments {
                let space = CandidateSpace::community_preserving(label_side, vertex_side, c)?;
                union.extend(typical_in_space(&space, &test));
            }
        }
    }
    Ok(AmbiguitySet {
        labelings: union.into_iter().collect(),
        eps,
        mode: Mode::Wsi,
        candidate_space,
    })
}

pub fn ambiguity_set(
    inst: &MatchingInstance,
    mode: Mode,
    eps: f64,
    cfg: &MatcherConfig,
) -> Result<AmbiguitySet, MatchError> {
    match mode {
        Mode::Csi => ambiguity_set_csi(inst, eps, cfg),
        Mode::Wsi => ambiguity_set_wsi(inst, eps, cfg),
    }
}

/// Uniformly random member, reproducible from `seed`.
pub fn select_labeling(set: &AmbiguitySet, seed: u64) -> Option<&Labeling> {
    if set.is_empty() {
        return None;
    }
    let k = ChaCha8Rng::seed_from_u64(seed).gen_range(0..set.len());
    Some(&set.labelings[k])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub mode: Mode,
    pub eps: f64,
    pub set_size: usize,
    /// Serialized as a string; may exceed `u64`.
    #[serde(serialize_with = "as_string")]
    pub candidate_space: u128,
    pub community_preserving: bool,
    pub truth_in_set: bool,
    pub elapsed_ms: f64,
}

fn as_string<S: serde::Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub labeling: Labeling,
    pub accuracy: f64,
    pub diagnostics: Diagnostics,
}

/// Builds the ambiguity set for `mode`, picks a member with `seed`, and
/// scores it. The truth is consulted only after selection.
pub fn run_matching(
    inst: &MatchingInstance,
    truth: &SealedTruth,
    mode: Mode,
    eps: f64,
    seed: u64,
    cfg: &MatcherConfig,
) -> Result<MatchOutcome, MatchError> {
    let started = Instant::now();
    let set = ambiguity_set(inst, mode, eps, cfg)?;
    let chosen = select_labeling(&set, seed).cloned();
    let diagnostics = Diagnostics {
        mode,
        eps,
        set_size: set.len(),
        candidate_space: set.candidate_space,
        community_preserving: mode == Mode::Wsi || cfg.community_preserving,
        truth_in_set: set.contains(truth.labeling()),
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let Some(labeling) = chosen else {
        return Err(MatchError::EmptyAmbiguitySet(Box::new(diagnostics)));
    };
    let accuracy = truth.accuracy(&labeling).expect("same vertex set");
    Ok(MatchOutcome {
        labeling,
        accuracy,
        diagnostics,
    })
}
