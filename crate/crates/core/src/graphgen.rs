//! Sampling correlated graph pairs and turning them into matching instances.
//!
//! Randomness is counter-based: the draw for a vertex pair depends only on
//! the seed, the community-pair block it falls in, and its position in that
//! block's canonical slot order. Concretely, block `b` uses ChaCha8 seeded
//! with `seed_from_u64(seed)` on stream `b`, and slot `k` consumes the `k`-th
//! `u64` of that stream. Blocks are numbered `(0,0), (0,1), .., (0,c-1),
//! (1,1), ..` and slots follow [`crate::typicality::block_slots`].

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_model, CommunityLayout, EdgeValue, ModelError, ModelFile, PairedEdgeModel};
use crate::permutation::{Labeling, Permutation, PermutationError};
use crate::typicality::block_slots;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Permutation(#[from] PermutationError),
    #[error("edge array has {found} entries, expected {expected} for n = {n}")]
    EdgeCount { n: usize, expected: usize, found: usize },
    #[error("edge value {value} outside the alphabet of size {l}")]
    EdgeValue { value: EdgeValue, l: usize },
    #[error("graph pair file is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Strict upper triangle of a symmetric `n x n` edge-value matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeMatrix {
    n: usize,
    ut: Vec<EdgeValue>,
}

impl EdgeMatrix {
    pub fn new(n: usize, ut: Vec<EdgeValue>) -> Result<Self, GraphError> {
        let expected = n * n.saturating_sub(1) / 2;
        if ut.len() != expected {
            return Err(GraphError::EdgeCount {
                n,
                expected,
                found: ut.len(),
            });
        }
        Ok(Self { n, ut })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            ut: vec![0; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        assert!(
            a != b && b < self.n,
            "no edge slot for ({a}, {b}) in a graph of {} vertices",
            self.n
        );
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    /// Edge value between `a` and `b`; symmetric in its arguments.
    pub fn get(&self, a: usize, b: usize) -> EdgeValue {
        self.ut[self.index(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, value: EdgeValue) {
        let k = self.index(a, b);
        self.ut[k] = value;
    }

    pub fn upper_triangle(&self) -> &[EdgeValue] {
        &self.ut
    }

    /// The same graph with index `k` renamed to `p(k)`.
    pub fn renamed(&self, p: &Permutation) -> Self {
        let mut out = Self::zeros(self.n);
        for a in 0..self.n {
            for b in a + 1..self.n {
                out.set(p.image(a), p.image(b), self.get(a, b));
            }
        }
        out
    }

    /// Dense row-major copy with zero diagonal, for fast lookups.
    pub fn dense(&self) -> Vec<EdgeValue> {
        let n = self.n;
        let mut d = vec![0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let v = self.get(a, b);
                d[a * n + b] = v;
                d[b * n + a] = v;
            }
        }
        d
    }
}

/// A graph with community structure and a labeling; edges indexed by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub layout: CommunityLayout,
    pub labeling: Labeling,
    pub edges: EdgeMatrix,
}

impl LabeledGraph {
    pub fn n(&self) -> usize {
        self.edges.n()
    }

    /// Edge value between the vertices labeled `a` and `b`.
    pub fn edge(&self, a: usize, b: usize) -> EdgeValue {
        self.edges.get(a, b)
    }

    /// Community of the vertex carrying each label.
    pub fn label_communities(&self) -> Vec<usize> {
        self.labeling
            .vertices_by_label()
            .iter()
            .map(|&v| self.layout.community_of(v))
            .collect()
    }

    /// Edges re-indexed by vertex instead of label.
    pub fn edges_by_vertex(&self) -> EdgeMatrix {
        self.edges.renamed(&self.labeling.as_permutation().inverse())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedPair {
    pub model: PairedEdgeModel,
    pub seed: u64,
    pub g1: LabeledGraph,
    /// Carries the ground-truth labeling; consumers other than scoring should
    /// go through [`anonymize`].
    pub g2: LabeledGraph,
}

impl CorrelatedPair {
    pub fn layout(&self) -> &CommunityLayout {
        &self.g1.layout
    }

    pub fn n(&self) -> usize {
        self.g1.n()
    }
}

fn cumulative(block: &[f64]) -> Vec<f64> {
    block
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn draw_cell(cum: &[f64], probs: &[f64], u: f64) -> usize {
    match cum.iter().position(|&c| u < c) {
        Some(k) => k,
        // u landed above the rounded total; fall back to the last cell with mass
        None => probs.iter().rposition(|&p| p > 0.0).unwrap_or(0),
    }
}

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws both graphs under the identity labelings `σ = σ' = id`. Each label
/// pair in communities `(i, j)` gets `(x, x')` from `joint[i][j]`.
pub fn sample_pair(model: &PairedEdgeModel, layout: &CommunityLayout, seed: u64) -> Result<CorrelatedPair, GraphError> {
    let report = validate_model(model, layout);
    if !report.is_ok() {
        return Err(ModelError::Invalid(report).into());
    }
    let n = layout.n();
    let l = model.l();
    let mut first = EdgeMatrix::zeros(n);
    let mut second = EdgeMatrix::zeros(n);
    for (block_id, block) in block_slots(layout.membership(), layout.c()).iter().enumerate() {
        let probs = model.block_slice(block.i, block.j);
        let cum = cumulative(probs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block_id as u64);
        for &(a, b) in &block.slots {
            let cell = draw_cell(&cum, probs, unit_interval(rng.next_u64()));
            first.set(a, b, (cell / l) as EdgeValue);
            second.set(a, b, (cell % l) as EdgeValue);
        }
    }
    let graph = |edges| LabeledGraph {
        layout: layout.clone(),
        labeling: Labeling::identity(n),
        edges,
    };
    Ok(CorrelatedPair {
        model: model.clone(),
        seed,
        g1: graph(first),
        g2: graph(second),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Complete side-information: community memberships in both graphs known.
    Csi,
    /// Without side-information.
    Wsi,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csi" => Ok(Mode::Csi),
            "wsi" => Ok(Mode::Wsi),
            other => Err(format!("unknown mode `{other}` (expected csi or wsi)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Csi => "csi",
            Mode::Wsi => "wsi",
        })
    }
}

/// Community memberships revealed to a side-information matcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideInfo {
    /// Community of each label in the first graph.
    pub first: Vec<usize>,
    /// Community of each (anonymous) vertex in the second graph.
    pub second: Vec<usize>,
}

/// What a matcher is allowed to see: the labeled first graph, the second
/// graph under anonymous vertex ids, the edge statistics and the community
/// sizes. Memberships only with side-information.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingInstance {
    pub model: PairedEdgeModel,
    pub sizes: Vec<usize>,
    pub first: EdgeMatrix,
    pub second: EdgeMatrix,
    pub side_info: Option<SideInfo>,
}

impl MatchingInstance {
    pub fn n(&self) -> usize {
        self.first.n()
    }
}

/// Ground truth for an instance: the correct label of every anonymous vertex.
/// Only scoring code should hold one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedTruth {
    labeling: Labeling,
}

impl SealedTruth {
    pub fn accuracy(&self, hat: &Labeling) -> Result<f64, PermutationError> {
        vertex_accuracy(&self.labeling, hat)
    }

    pub fn is(&self, candidate: &Labeling) -> bool {
        &self.labeling == candidate
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }
}

/// Anonymizes the second graph by renaming vertex `v` to `shuffle(v)`.
pub fn anonymize_with(pair: &CorrelatedPair, mode: Mode, shuffle: &Permutation) -> (MatchingInstance, SealedTruth) {
    let n = pair.n();
    assert_eq!(shuffle.len(), n, "shuffle must act on the pair's vertex set");
    let by_vertex = pair.g2.edges_by_vertex();
    let second = by_vertex.renamed(shuffle);
    let unshuffle = shuffle.inverse();
    let truth: Vec<usize> = (0..n).map(|u| pair.g2.labeling.label_of(unshuffle.image(u))).collect();
    let side_info = match mode {
        Mode::Csi => Some(SideInfo {
            first: pair.g1.label_communities(),
            second: (0..n)
                .map(|u| pair.g2.layout.community_of(unshuffle.image(u)))
                .collect(),
        }),
        Mode::Wsi => None,
    };
    let instance = MatchingInstance {
        model: pair.model.clone(),
        sizes: pair.layout().sizes().to_vec(),
        first: pair.g1.edges.clone(),
        second,
        side_info,
    };
    let truth = SealedTruth {
        labeling: Labeling::from_vec(truth).expect("composition of bijections"),
    };
    (instance, truth)
}

/// Anonymizes with a uniformly random shuffle drawn from `shuffle_seed`.
pub fn anonymize(pair: &CorrelatedPair, mode: Mode, shuffle_seed: u64) -> (MatchingInstance, SealedTruth) {
    let mut map: Vec<usize> = (0..pair.n()).collect();
    map.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
    let shuffle = Permutation::from_vec(map).expect("shuffled identity");
    anonymize_with(pair, mode, &shuffle)
}

/// Fraction of vertices on which two labelings agree.
pub fn vertex_accuracy(truth: &Labeling, hat: &Labeling) -> Result<f64, PermutationError> {
    if truth.len() != hat.len() {
        return Err(PermutationError::DomainMismatch(truth.len(), hat.len()));
    }
    if truth.is_empty() {
        return Ok(1.0);
    }
    let agree = truth
        .as_slice()
        .iter()
        .zip(hat.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    Ok(agree as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphRecord {
    labeling: Labeling,
    ut: Vec<EdgeValue>,
}

/// JSON form of a [`CorrelatedPair`]: the model file fields, the 1-based
/// community of every vertex, the seed, and per graph its labeling plus the
/// row-major strict upper triangle indexed by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    #[serde(flatten)]
    model: ModelFile,
    membership: Vec<usize>,
    seed: u64,
    g1: GraphRecord,
    g2: GraphRecord,
}

impl PairFile {
    pub fn from_pair(pair: &CorrelatedPair) -> Self {
        let record = |g: &LabeledGraph| GraphRecord {
            labeling: g.labeling.clone(),
            ut: g.edges.upper_triangle().to_vec(),
        };
        Self {
            model: ModelFile::from_parts(&pair.model, pair.layout()),
            membership: pair.layout().membership().iter().map(|&c| c + 1).collect(),
            seed: pair.seed,
            g1: record(&pair.g1),
            g2: record(&pair.g2),
        }
    }

    pub fn into_pair(self) -> Result<CorrelatedPair, GraphError> {
        let (model, sized) = self.model.into_parts()?;
        let membership: Option<Vec<usize>> = self.membership.iter().map(|&c| c.checked_sub(1)).collect();
        let membership = membership.ok_or_else(|| GraphError::Inconsistent("community indices are 1-based".into()))?;
        let layout = CommunityLayout::from_membership(membership, model.communities())?;
        if layout.sizes() != sized.sizes() {
            return Err(GraphError::Inconsistent(
                "membership disagrees with community sizes".into(),
            ));
        }
        let n = layout.n();
        let l = model.l();
        let graph = |rec: GraphRecord| -> Result<LabeledGraph, GraphError> {
            if rec.labeling.len() != n {
                return Err(GraphError::Inconsistent(
                    "labeling length differs from vertex count".into(),
                ));
            }
            if let Some(&value) = rec.ut.iter().find(|&&v| v as usize >= l) {
                return Err(GraphError::EdgeValue { value, l });
            }
            Ok(LabeledGraph {
                layout: layout.clone(),
                labeling: rec.labeling,
                edges: EdgeMatrix::new(n, rec.ut)?,
            })
        };
        Ok(CorrelatedPair {
            g1: graph(self.g1)?,
            g2: graph(self.g2)?,
            model,
            seed: self.seed,
        })
    }
}

pub fn pair_to_json(pair: &CorrelatedPair) -> String {
    serde_json::to_string(&PairFile::from_pair(pair)).expect("pair serializes")
}

pub fn pair_from_json(json: &str) -> Result<CorrelatedPair, GraphError> {
    serde_json::from_str::<PairFile>(json)?.into_pair()
}
