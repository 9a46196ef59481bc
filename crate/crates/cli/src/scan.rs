//! Phase table of the achievability and converse verdicts across `n`.

use commatch::bounds::{achievability_check, converse_check, BoundsError};
use commatch::model::{CommunityLayout, PairedEdgeModel};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub achievable: bool,
    pub achievability_margin: f64,
    pub worst_alpha: f64,
    pub impossible: bool,
    /// `rhs - lhs` of the converse condition.
    pub converse_margin: f64,
}

/// One row per `n`. With `grid = None` the α grid step is `1/n`.
pub fn scan_region(
    model: &PairedEdgeModel,
    layout: &CommunityLayout,
    ns: &[usize],
    delta: f64,
    grid: Option<f64>,
) -> Result<Vec<ScanRow>, BoundsError> {
    ns.iter()
        .map(|&n| {
            let step = grid.unwrap_or(1.0 / n as f64);
            let a = achievability_check(model, layout, n, delta, step)?;
            let c = converse_check(model, layout, n)?;
            Ok(ScanRow {
                n,
                achievable: a.satisfied,
                achievability_margin: a.margin,
                worst_alpha: a.worst_alpha,
                impossible: c.impossible,
                converse_margin: c.margin(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use commatch::model::JointDistribution;

    #[test]
    fn independent_model_rows() {
        let model = PairedEdgeModel::homogeneous(2, &JointDistribution::uniform(2, 2)).unwrap();
        let layout = CommunityLayout::contiguous(&[2, 2]).unwrap();
        for row in scan_region(&model, &layout, &[4, 10, 40], 0.1, None).unwrap() {
            assert!(!row.achievable && row.impossible);
        }
    }

    #[test]
    fn copy_model_becomes_achievable() {
        let model = PairedEdgeModel::homogeneous(1, &JointDistribution::copy_of(&[0.5, 0.5])).unwrap();
        let layout = CommunityLayout::contiguous(&[10]).unwrap();
        let rows = scan_region(&model, &layout, &[10, 100, 1000], 0.05, None).unwrap();
        assert!(!rows[0].achievable);
        assert!(rows[2].achievable);
        for w in rows.windows(2) {
            assert!(w[1].achievability_margin >= w[0].achievability_margin);
        }
    }
}
