//! Joint types, ε-typicality, and the flattening of adjacency blocks into
//! aligned sequence pairs.
//!
//! Slot order within a community-pair block is fixed: for an intra-community
//! block `(i, i)` the label pairs `a < b` of community `i` in row-major order;
//! for `i < j` every `(a, b)` with `a` in community `i` and `b` in community
//! `j`, `a` outer, both ascending. Any fixed order leaves joint types
//! unchanged; this one keeps sequences reproducible.

use thiserror::Error;

use crate::graphgen::{CorrelatedPair, EdgeMatrix};
use crate::model::{EdgeValue, JointDistribution};
use crate::permutation::Labeling;

/// Absolute slack added to ε so that an exact boundary case is not lost to
/// rounding of `count / n`.
pub const TYPICALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypicalityError {
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("symbol {symbol} outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: EdgeValue, size: usize },
}

/// Counts of each `(a, b)` symbol pair in a paired sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointTypeMatrix {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl JointTypeMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            counts: vec![0; rows * cols],
        }
    }

    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), rows * cols);
        Self { rows, cols, counts }
    }

    pub fn count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.cols + b]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn add(&mut self, a: usize, b: usize) {
        self.counts[a * self.cols + b] += 1;
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    /// Sequence length.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Whether every normalized count is within `eps` of `p`. An empty
    /// sequence is vacuously typical.
    pub fn is_typical(&self, p: &JointDistribution, eps: f64) -> bool {
        debug_assert_eq!((p.rows(), p.cols()), (self.rows, self.cols));
        let n = self.n();
        if n == 0 {
            return true;
        }
        let n = n as f64;
        self.counts
            .iter()
            .zip(p.as_slice())
            .all(|(&c, &q)| (c as f64 / n - q).abs() <= eps + TYPICALITY_SLACK)
    }
}

pub fn joint_type(
    x: &[EdgeValue],
    y: &[EdgeValue],
    rows: usize,
    cols: usize,
) -> Result<JointTypeMatrix, TypicalityError> {
    if x.len() != y.len() {
        return Err(TypicalityError::LengthMismatch(x.len(), y.len()));
    }
    let mut t = JointTypeMatrix::zeros(rows, cols);
    for (&a, &b) in x.iter().zip(y) {
        if a as usize >= rows {
            return Err(TypicalityError::SymbolOutOfRange { symbol: a, size: rows });
        }
        if b as usize >= cols {
            return Err(TypicalityError::SymbolOutOfRange { symbol: b, size: cols });
        }
        t.add(a as usize, b as usize);
    }
    Ok(t)
}

/// Whether `(x, y)` lies in the ε-typical set of `p`.
pub fn is_jointly_typical(
    x: &[EdgeValue],
    y: &[EdgeValue],
    p: &JointDistribution,
    eps: f64,
) -> Result<bool, TypicalityError> {
    Ok(joint_type(x, y, p.rows(), p.cols())?.is_typical(p, eps))
}

/// How ε is chosen for an `n`-vertex instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    Fixed(f64),
    /// `ε_n = kappa * log2(n) / n`.
    LogOverN {
        kappa: f64,
    },
}

impl EpsilonSchedule {
    pub const DEFAULT_KAPPA: f64 = 2.0;

    pub fn at(&self, n: usize) -> f64 {
        match *self {
            EpsilonSchedule::Fixed(eps) => eps,
            EpsilonSchedule::LogOverN { kappa } => {
                let n = n.max(1) as f64;
                kappa * n.log2() / n
            }
        }
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::LogOverN {
            kappa: Self::DEFAULT_KAPPA,
        }
    }
}

/// Label pairs of one community-pair block, in canonical slot order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSlots {
    pub i: usize,
    pub j: usize,
    pub slots: Vec<(usize, usize)>,
}

/// Blocks `(i, j)`, `i <= j`, ordered `(0,0), (0,1), .., (1,1), ..`, given the
/// community of every label.
pub fn block_slots(label_communities: &[usize], communities: usize) -> Vec<BlockSlots> {
    let mut members = vec![Vec::new(); communities];
    for (label, &c) in label_communities.iter().enumerate() {
        members[c].push(label);
    }
    let mut blocks = Vec::with_capacity(communities * (communities + 1) / 2);
    for i in 0..communities {
        for j in i..communities {
            let mut slots = Vec::new();
            if i == j {
                for (k, &a) in members[i].iter().enumerate() {
                    for &b in &members[i][k + 1..] {
                        slots.push((a, b));
                    }
                }
            } else {
                for &a in &members[i] {
                    for &b in &members[j] {
                        slots.push((a, b));
                    }
                }
            }
            blocks.push(BlockSlots { i, j, slots });
        }
    }
    blocks
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedBlock {
    pub i: usize,
    pub j: usize,
    pub first: Vec<EdgeValue>,
    pub second: Vec<EdgeValue>,
}

/// Aligned sequences for every community-pair block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedBlockSequences {
    pub blocks: Vec<PairedBlock>,
}

impl PairedBlockSequences {
    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.first.len()).sum()
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&PairedBlock> {
        self.blocks.iter().find(|b| (b.i, b.j) == (i.min(j), i.max(j)))
    }
}

/// Flattens blocks: the first sequence reads the labeled graph at slot
/// `(a, b)`, the second reads the vertex-indexed graph at the vertices that
/// `sigma_hat` labels `a` and `b`.
pub fn extract_blocks(
    first: &EdgeMatrix,
    label_communities: &[usize],
    communities: usize,
    second: &EdgeMatrix,
    sigma_hat: &Labeling,
) -> PairedBlockSequences {
    let vertex_of = sigma_hat.vertices_by_label();
    let blocks = block_slots(label_communities, communities)
        .into_iter()
        .map(|b| PairedBlock {
            i: b.i,
            j: b.j,
            first: b.slots.iter().map(|&(a, c)| first.get(a, c)).collect(),
            second: b
                .slots
                .iter()
                .map(|&(a, c)| second.get(vertex_of[a], vertex_of[c]))
                .collect(),
        })
        .collect();
    PairedBlockSequences { blocks }
}

/// Block sequences of a sampled pair when the second graph is labeled by
/// `sigma_hat` (vertex to label) instead of its true labeling.
pub fn extract_paired_blocks(pair: &CorrelatedPair, sigma_hat: &Labeling) -> PairedBlockSequences {
    extract_blocks(
        &pair.g1.edges,
        &pair.g1.label_communities(),
        pair.layout().c(),
        &pair.g2.edges_by_vertex(),
        sigma_hat,
    )
}
