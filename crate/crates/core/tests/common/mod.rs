#![allow(dead_code)]

use commatch::model::{JointDistribution, PairedEdgeModel};
use proptest::prelude::*;

/// Normalized distribution from positive weights.
pub fn normalized(weights: &[f64], rows: usize, cols: usize) -> JointDistribution {
    let total: f64 = weights.iter().sum();
    let mut p: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // push rounding into the largest cell so the sum is 1 to within 1e-15
    let drift = 1.0 - p.iter().sum::<f64>();
    let k = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    p[k] += drift;
    JointDistribution::new(rows, cols, p).unwrap()
}

pub fn joint(l: usize) -> impl Strategy<Value = JointDistribution> {
    prop::collection::vec(0.01f64..1.0, l * l).prop_map(move |w| normalized(&w, l, l))
}

/// Symmetric model with `c` communities over an alphabet of size `l`.
pub fn model(c: usize, l: usize) -> impl Strategy<Value = PairedEdgeModel> {
    prop::collection::vec(joint(l), c * (c + 1) / 2).prop_map(move |blocks| {
        PairedEdgeModel::from_fn(c, l, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            let idx = a * c - a * (a + 1) / 2 + b;
            blocks[idx].clone()
        })
        .unwrap()
    })
}
