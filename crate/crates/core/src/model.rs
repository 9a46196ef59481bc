//! Edge alphabets, community layouts and the paired edge distribution.
//!
//! A [`PairedEdgeModel`] stores, for every ordered pair of communities
//! `(i, j)`, an `l x l` joint distribution over the edge values the two
//! graphs carry on the same vertex pair. Both graphs share one
//! [`CommunityLayout`], so the tensor is indexed by two community indices
//! rather than four.
//!
//! All indices are 0-based in memory. Anything rendered for humans or
//! written to disk uses 1-based community and vertex indices.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single edge value, `0..l`.
pub type EdgeValue = u8;

/// Tolerance used for every normalization and symmetry check.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("edge alphabet must have between 2 and 256 values, got {0}")]
    InvalidAlphabet(usize),
    #[error("community layout needs at least one community")]
    NoCommunities,
    #[error("community {0} is empty")]
    EmptyCommunity(usize),
    #[error("vertex {vertex} assigned to community {community}, but only {count} communities exist")]
    MembershipOutOfRange {
        vertex: usize,
        community: usize,
        count: usize,
    },
    #[error("cannot scale {communities} communities onto {n} vertices")]
    TooFewVertices { communities: usize, n: usize },
    #[error("tensor shape mismatch: expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeAlphabet {
    size: usize,
}

impl EdgeAlphabet {
    pub fn new(size: usize) -> Result<Self, ModelError> {
        if !(2..=256).contains(&size) {
            return Err(ModelError::InvalidAlphabet(size));
        }
        Ok(Self { size })
    }

    pub fn binary() -> Self {
        Self { size: 2 }
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Partition of the vertex set `0..n` into `c` non-empty communities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CommunityLayout {
    sizes: Vec<usize>,
    membership: Vec<usize>,
}

impl CommunityLayout {
    /// Layout where community 0 holds the first `sizes[0]` vertices, community
    /// 1 the next `sizes[1]`, and so on.
    pub fn contiguous(sizes: &[usize]) -> Result<Self, ModelError> {
        if sizes.is_empty() {
            return Err(ModelError::NoCommunities);
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(ModelError::EmptyCommunity(i));
        }
        let membership = sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &s)| std::iter::repeat_n(i, s))
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            membership,
        })
    }

    pub fn from_membership(membership: Vec<usize>, communities: usize) -> Result<Self, ModelError> {
        if communities == 0 {
            return Err(ModelError::NoCommunities);
        }
        let mut sizes = vec![0; communities];
        for (vertex, &community) in membership.iter().enumerate() {
            if community >= communities {
                return Err(ModelError::MembershipOutOfRange {
                    vertex,
                    community,
                    count: communities,
                });
            }
            sizes[community] += 1;
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(ModelError::EmptyCommunity(i));
        }
        Ok(Self { sizes, membership })
    }

    /// Contiguous layout on `n` vertices whose community proportions follow
    /// this layout's, apportioned by largest remainder. Every community keeps
    /// at least one vertex.
    pub fn scaled_to(&self, n: usize) -> Result<Self, ModelError> {
        if n == self.n() {
            return Self::contiguous(&self.sizes);
        }
        let c = self.c();
        if n < c {
            return Err(ModelError::TooFewVertices { communities: c, n });
        }
        let total = self.n() as f64;
        let quotas: Vec<f64> = self.sizes.iter().map(|&s| s as f64 * n as f64 / total).collect();
        let mut sizes: Vec<usize> = quotas.iter().map(|q| (q.floor() as usize).max(1)).collect();
        let mut assigned: usize = sizes.iter().sum();
        // hand out remaining vertices by largest fractional part, ties to the lower index
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        let mut k = 0;
        while assigned < n {
            sizes[order[k % c]] += 1;
            assigned += 1;
            k += 1;
        }
        // the max(1) floor can overshoot; take back from the largest communities
        while assigned > n {
            let largest = (0..c).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
            sizes[largest] -= 1;
            assigned -= 1;
        }
        Self::contiguous(&sizes)
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn c(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn community_of(&self, vertex: usize) -> usize {
        self.membership[vertex]
    }

    /// Vertices of community `i` in increasing order.
    pub fn members(&self, i: usize) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.membership[v] == i).collect()
    }
}

/// Row-major joint distribution over `rows x cols` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self, ModelError> {
        if p.len() != rows * cols {
            return Err(ModelError::Shape {
                expected: rows * cols,
                found: p.len(),
            });
        }
        Ok(Self { rows, cols, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let p: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(r, c, p)
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        let w = 1.0 / (rows * cols) as f64;
        Self {
            rows,
            cols,
            p: vec![w; rows * cols],
        }
    }

    /// Doubly symmetric binary source: uniform marginals, `P(x != x') = crossover`.
    pub fn dsbs(crossover: f64) -> Self {
        let same = (1.0 - crossover) / 2.0;
        let diff = crossover / 2.0;
        Self {
            rows: 2,
            cols: 2,
            p: vec![same, diff, diff, same],
        }
    }

    /// The coupling `X' = X` with `X` distributed as `marginal`.
    pub fn copy_of(marginal: &[f64]) -> Self {
        let l = marginal.len();
        let mut p = vec![0.0; l * l];
        for (x, &w) in marginal.iter().enumerate() {
            p[x * l + x] = w;
        }
        Self { rows: l, cols: l, p }
    }

    pub fn independent(first: &[f64], second: &[f64]) -> Self {
        let p = first.iter().flat_map(|&a| second.iter().map(move |&b| a * b)).collect();
        Self {
            rows: first.len(),
            cols: second.len(),
            p,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.cols + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|a| self.p[a * self.cols..(a + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|b| (0..self.rows).map(|a| self.get(a, b)).sum())
            .collect()
    }

    pub fn product_of_marginals(&self) -> Self {
        Self::independent(&self.first_marginal(), &self.second_marginal())
    }

    /// `(1 - weight) * P_X P_X' + weight * P`.
    pub fn mixture_with_product(&self, weight: f64) -> Self {
        let q = self.product_of_marginals();
        let p = self
            .p
            .iter()
            .zip(&q.p)
            .map(|(&pj, &pq)| (1.0 - weight) * pq + weight * pj)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Joint edge law of the two graphs, one `l x l` block per community pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedEdgeModel {
    alphabet: EdgeAlphabet,
    communities: usize,
    joint: Vec<f64>,
}

impl PairedEdgeModel {
    /// Builds from a flat `[c][c][l][l]` tensor. Shape only; see [`validate_model`].
    pub fn new(alphabet: EdgeAlphabet, communities: usize, joint: Vec<f64>) -> Result<Self, ModelError> {
        let l = alphabet.size();
        let expected = communities * communities * l * l;
        if joint.len() != expected {
            return Err(ModelError::Shape {
                expected,
                found: joint.len(),
            });
        }
        Ok(Self {
            alphabet,
            communities,
            joint,
        })
    }

    /// Every community pair uses the same block.
    pub fn homogeneous(communities: usize, block: &JointDistribution) -> Result<Self, ModelError> {
        Self::from_fn(communities, block.rows(), |_, _| block.clone())
    }

    pub fn from_fn(
        communities: usize,
        l: usize,
        mut block: impl FnMut(usize, usize) -> JointDistribution,
    ) -> Result<Self, ModelError> {
        let alphabet = EdgeAlphabet::new(l)?;
        let mut joint = Vec::with_capacity(communities * communities * l * l);
        for i in 0..communities {
            for j in 0..communities {
                let b = block(i, j);
                if b.rows() != l || b.cols() != l {
                    return Err(ModelError::Shape {
                        expected: l * l,
                        found: b.rows() * b.cols(),
                    });
                }
                joint.extend_from_slice(b.as_slice());
            }
        }
        Self::new(alphabet, communities, joint)
    }

    pub fn alphabet(&self) -> EdgeAlphabet {
        self.alphabet
    }

    pub fn l(&self) -> usize {
        self.alphabet.size()
    }

    pub fn communities(&self) -> usize {
        self.communities
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let l = self.l();
        (i * self.communities + j) * l * l
    }

    pub fn entry(&self, i: usize, j: usize, x: usize, xp: usize) -> f64 {
        self.joint[self.offset(i, j) + x * self.l() + xp]
    }

    pub fn block_slice(&self, i: usize, j: usize) -> &[f64] {
        let off = self.offset(i, j);
        let l = self.l();
        &self.joint[off..off + l * l]
    }

    pub fn block(&self, i: usize, j: usize) -> JointDistribution {
        JointDistribution {
            rows: self.l(),
            cols: self.l(),
            p: self.block_slice(i, j).to_vec(),
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.joint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    CommunityCount {
        model: usize,
        layout: usize,
    },
    NonFinite {
        i: usize,
        j: usize,
        x: usize,
        xp: usize,
    },
    OutOfRange {
        i: usize,
        j: usize,
        x: usize,
        xp: usize,
        value: f64,
    },
    Normalization {
        i: usize,
        j: usize,
        sum: f64,
    },
    Asymmetry {
        i: usize,
        j: usize,
        x: usize,
        xp: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::CommunityCount { model, layout } => {
                write!(f, "model has {model} communities but the layout has {layout}")
            }
            Violation::NonFinite { i, j, x, xp } => write!(
                f,
                "non-finite entry at communities ({}, {}), values ({x}, {xp})",
                i + 1,
                j + 1
            ),
            Violation::OutOfRange { i, j, x, xp, value } => write!(
                f,
                "entry {value} outside [0, 1] at communities ({}, {}), values ({x}, {xp})",
                i + 1,
                j + 1
            ),
            Violation::Normalization { i, j, sum } => {
                write!(f, "block for communities ({}, {}) sums to {sum}, not 1", i + 1, j + 1)
            }
            Violation::Asymmetry { i, j, x, xp } => write!(
                f,
                "undirectedness broken: communities ({}, {}) and ({}, {}) differ at values ({x}, {xp})",
                i + 1,
                j + 1,
                j + 1,
                i + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks entry range, per-block normalization and undirectedness.
pub fn validate_model(model: &PairedEdgeModel, layout: &CommunityLayout) -> ValidationReport {
    let mut violations = Vec::new();
    let c = model.communities();
    let l = model.l();
    if c != layout.c() {
        violations.push(Violation::CommunityCount {
            model: c,
            layout: layout.c(),
        });
    }
    for i in 0..c {
        for j in 0..c {
            for x in 0..l {
                for xp in 0..l {
                    let value = model.entry(i, j, x, xp);
                    if !value.is_finite() {
                        violations.push(Violation::NonFinite { i, j, x, xp });
                    } else if !(0.0..=1.0).contains(&value) {
                        violations.push(Violation::OutOfRange { i, j, x, xp, value });
                    }
                }
            }
            let sum: f64 = model.block_slice(i, j).iter().sum();
            if (sum - 1.0).abs() > PROB_TOL || !sum.is_finite() {
                violations.push(Violation::Normalization { i, j, sum });
            }
            if i < j {
                for x in 0..l {
                    for xp in 0..l {
                        let a = model.entry(i, j, x, xp);
                        let b = model.entry(j, i, x, xp);
                        if (a - b).abs() > PROB_TOL || a.is_nan() != b.is_nan() {
                            violations.push(Violation::Asymmetry { i, j, x, xp });
                        }
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Per-graph edge law `P(x | i, j)`, flat `[c][c][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMarginal {
    communities: usize,
    l: usize,
    p: Vec<f64>,
}

impl EdgeMarginal {
    pub fn get(&self, i: usize, j: usize, x: usize) -> f64 {
        self.p[(i * self.communities + j) * self.l + x]
    }

    pub fn distribution(&self, i: usize, j: usize) -> &[f64] {
        let off = (i * self.communities + j) * self.l;
        &self.p[off..off + self.l]
    }
}

pub fn marginal(model: &PairedEdgeModel, side: Side) -> EdgeMarginal {
    let c = model.communities();
    let l = model.l();
    let mut p = Vec::with_capacity(c * c * l);
    for i in 0..c {
        for j in 0..c {
            let block = model.block(i, j);
            match side {
                Side::First => p.extend(block.first_marginal()),
                Side::Second => p.extend(block.second_marginal()),
            }
        }
    }
    EdgeMarginal { communities: c, l, p }
}

/// The model in which the two graphs are independent with unchanged marginals.
pub fn product_coupling(model: &PairedEdgeModel) -> PairedEdgeModel {
    let first = marginal(model, Side::First);
    let second = marginal(model, Side::Second);
    let c = model.communities();
    let l = model.l();
    let mut joint = Vec::with_capacity(model.raw().len());
    for i in 0..c {
        for j in 0..c {
            let a = first.distribution(i, j);
            let b = second.distribution(i, j);
            for &ax in a.iter().take(l) {
                for &bx in b.iter().take(l) {
                    joint.push(ax * bx);
                }
            }
        }
    }
    PairedEdgeModel {
        alphabet: model.alphabet,
        communities: c,
        joint,
    }
}

/// On-disk model: `{ "l": int, "communities": [sizes], "joint": [c][c][l][l] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub l: usize,
    pub communities: Vec<usize>,
    pub joint: Vec<Vec<Vec<Vec<f64>>>>,
}

impl ModelFile {
    pub fn from_parts(model: &PairedEdgeModel, layout: &CommunityLayout) -> Self {
        let c = model.communities();
        let l = model.l();
        let joint = (0..c)
            .map(|i| {
                (0..c)
                    .map(|j| {
                        (0..l)
                            .map(|x| (0..l).map(|xp| model.entry(i, j, x, xp)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            l,
            communities: layout.sizes().to_vec(),
            joint,
        }
    }

    /// Builds and validates the model and its contiguous layout.
    pub fn into_parts(self) -> Result<(PairedEdgeModel, CommunityLayout), ModelError> {
        let alphabet = EdgeAlphabet::new(self.l)?;
        let layout = CommunityLayout::contiguous(&self.communities)?;
        let c = self.joint.len();
        let l = self.l;
        let mut flat = Vec::with_capacity(c * c * l * l);
        for row in &self.joint {
            if row.len() != c {
                return Err(ModelError::Shape {
                    expected: c,
                    found: row.len(),
                });
            }
            for block in row {
                if block.len() != l || block.iter().any(|r| r.len() != l) {
                    return Err(ModelError::Shape {
                        expected: l * l,
                        found: block.iter().map(Vec::len).sum(),
                    });
                }
                flat.extend(block.iter().flatten().copied());
            }
        }
        let model = PairedEdgeModel::new(alphabet, c, flat)?;
        let report = validate_model(&model, &layout);
        if !report.is_ok() {
            return Err(ModelError::Invalid(report));
        }
        Ok((model, layout))
    }
}

pub fn parse_model(json: &str) -> Result<(PairedEdgeModel, CommunityLayout), ModelError> {
    let file: ModelFile = serde_json::from_str(json)?;
    file.into_parts()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(PairedEdgeModel, CommunityLayout), ModelError> {
    parse_model(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_model(c: usize, block: JointDistribution) -> PairedEdgeModel {
        PairedEdgeModel::homogeneous(c, &block).unwrap()
    }

    #[test]
    fn uniform_single_community_is_valid() {
        let m = binary_model(1, JointDistribution::uniform(2, 2));
        let layout = CommunityLayout::contiguous(&[4]).unwrap();
        assert!(validate_model(&m, &layout).is_ok());
    }

    #[test]
    fn unnormalized_block_is_reported() {
        let m = PairedEdgeModel::new(EdgeAlphabet::binary(), 1, vec![0.3, 0.2, 0.2, 0.2]).unwrap();
        let layout = CommunityLayout::contiguous(&[3]).unwrap();
        let report = validate_model(&m, &layout);
        assert_eq!(report.violations.len(), 1);
        match report.violations[0] {
            Violation::Normalization { i: 0, j: 0, sum } => assert!((sum - 0.9).abs() < 1e-12),
            ref v => panic!("unexpected violation {v:?}"),
        }
        assert!(report.to_string().contains("(1, 1)"));
    }

    #[test]
    fn asymmetric_blocks_are_reported() {
        let m = PairedEdgeModel::from_fn(2, 2, |i, j| {
            if (i, j) == (0, 1) {
                JointDistribution::dsbs(0.2)
            } else {
                JointDistribution::uniform(2, 2)
            }
        })
        .unwrap();
        let layout = CommunityLayout::contiguous(&[2, 2]).unwrap();
        let report = validate_model(&m, &layout);
        assert!(!report.is_ok());
        assert!(report
            .violations
            .iter()
            .all(|v| matches!(v, Violation::Asymmetry { i: 0, j: 1, .. })));
    }

    #[test]
    fn negative_entries_and_community_mismatch() {
        let m = PairedEdgeModel::new(EdgeAlphabet::binary(), 1, vec![1.2, -0.2, 0.0, 0.0]).unwrap();
        let layout = CommunityLayout::contiguous(&[2, 2]).unwrap();
        let report = validate_model(&m, &layout);
        assert!(report
            .violations
            .contains(&Violation::CommunityCount { model: 1, layout: 2 }));
        assert_eq!(
            report
                .violations
                .iter()
                .filter(|v| matches!(v, Violation::OutOfRange { .. }))
                .count(),
            2
        );
    }

    #[test]
    fn marginals() {
        let uniform = binary_model(1, JointDistribution::uniform(2, 2));
        assert_eq!(marginal(&uniform, Side::First).distribution(0, 0), &[0.5, 0.5]);

        let m = binary_model(
            1,
            JointDistribution::from_rows(&[vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap(),
        );
        for side in [Side::First, Side::Second] {
            let d = marginal(&m, side);
            assert!((d.get(0, 0, 0) - 0.5).abs() < 1e-12);
            assert!((d.get(0, 0, 1) - 0.5).abs() < 1e-12);
        }

        let degenerate = binary_model(
            1,
            JointDistribution::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
        );
        assert_eq!(marginal(&degenerate, Side::Second).distribution(0, 0), &[1.0, 0.0]);
    }

    #[test]
    fn product_coupling_examples() {
        let copy = binary_model(1, JointDistribution::copy_of(&[0.5, 0.5]));
        let prod = product_coupling(&copy);
        for &v in prod.raw() {
            assert!((v - 0.25).abs() < 1e-12);
        }
        let again = product_coupling(&prod);
        for (a, b) in prod.raw().iter().zip(again.raw()) {
            assert!((a - b).abs() < 1e-12);
        }
        let layout = CommunityLayout::contiguous(&[2]).unwrap();
        assert!(validate_model(&prod, &layout).is_ok());
    }

    #[test]
    fn layout_scaling_keeps_proportions() {
        let layout = CommunityLayout::contiguous(&[5, 5]).unwrap();
        assert_eq!(layout.scaled_to(1000).unwrap().sizes(), &[500, 500]);
        assert_eq!(layout.scaled_to(7).unwrap().sizes(), &[4, 3]);
        let skewed = CommunityLayout::contiguous(&[1, 9]).unwrap();
        let s = skewed.scaled_to(3).unwrap();
        assert_eq!(s.sizes().iter().sum::<usize>(), 3);
        assert!(s.sizes().iter().all(|&x| x >= 1));
        assert!(layout.scaled_to(1).is_err());
    }

    #[test]
    fn model_file_round_trip_and_rejection() {
        let json = r#"{"l": 2, "communities": [2, 3],
            "joint": [[[[0.45,0.05],[0.05,0.45]], [[0.25,0.25],[0.25,0.25]]],
                      [[[0.25,0.25],[0.25,0.25]], [[0.5,0.0],[0.0,0.5]]]]}"#;
        let (m, layout) = parse_model(json).unwrap();
        assert_eq!(layout.sizes(), &[2, 3]);
        assert_eq!(m.entry(1, 1, 0, 0), 0.5);
        let back = ModelFile::from_parts(&m, &layout);
        assert_eq!(back.into_parts().unwrap().0, m);

        let bad = r#"{"l": 2, "communities": [2], "joint": [[[[0.5,0.5],[0.5,0.5]]]]}"#;
        match parse_model(bad) {
            Err(ModelError::Invalid(report)) => assert_eq!(report.violations.len(), 1),
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
