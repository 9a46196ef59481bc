//! Information quantities and the finite-n forms of the matching bounds.
//!
//! Every quantity is in bits, including the `log n` terms.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graphgen::Mode;
use crate::model::{CommunityLayout, JointDistribution, ModelError, PairedEdgeModel};
use crate::typicality::TYPICALITY_SLACK;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("distributions have {0} and {1} outcomes")]
    DimensionMismatch(usize, usize),
    #[error("{0} must lie in [0, 1], got {1}")]
    OutOfUnitInterval(&'static str, f64),
    #[error("{0} must be positive, got {1}")]
    NotPositive(&'static str, f64),
    #[error("no allocation satisfies the constraints at alpha = {0}")]
    InfeasibleAllocation(f64),
    #[error("model has {model} communities but the layout has {layout}")]
    CommunityMismatch { model: usize, layout: usize },
    #[error("n must be at least 2, got {0}")]
    TooSmall(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `D(p || q)` in bits; `+inf` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, BoundsError> {
    if p.len() != q.len() {
        return Err(BoundsError::DimensionMismatch(p.len(), q.len()));
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Ok(f64::INFINITY);
        }
        d += a * (a / b).log2();
    }
    Ok(d.max(0.0))
}

/// `I(X; X')` in bits.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    kl_divergence(joint.as_slice(), joint.product_of_marginals().as_slice()).expect("same shape")
}

/// `D(P || (1 - w) P_X P_X' + w P)`.
pub fn mixture_divergence(joint: &JointDistribution, weight: f64) -> f64 {
    kl_divergence(joint.as_slice(), joint.mixture_with_product(weight).as_slice()).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentReport {
    pub n: usize,
    pub alpha: f64,
    pub eps: f64,
    /// Smallest divergence from the mixture over ε-typical joint types.
    pub divergence_term: f64,
    /// `|X| |X'| ε`.
    pub eps_penalty: f64,
    /// `4 |X| |X'| log2(n + 1)`.
    pub type_count_log: f64,
    /// log2 of the bound on the probability that a sequence pair whose
    /// alignment has `alpha n` fixed points is jointly typical.
    pub bound_log2: f64,
}

impl ExponentReport {
    pub fn bound(&self) -> f64 {
        self.bound_log2.exp2().min(1.0)
    }
}

/// Calls `visit` with every count vector of length `cells` summing to `n`
/// whose normalized counts are within `eps` of `p`.
fn for_each_typical_type(n: usize, p: &[f64], eps: f64, mut visit: impl FnMut(&[u64])) {
    let nf = n as f64;
    let lo: Vec<u64> = p.iter().map(|&q| (nf * (q - eps)).floor().max(0.0) as u64).collect();
    let hi: Vec<u64> = p
        .iter()
        .map(|&q| ((nf * (q + eps)).ceil() as u64).min(n as u64))
        .collect();
    let typical = |c: u64, q: f64| (c as f64 / nf - q).abs() <= eps + TYPICALITY_SLACK;
    let mut counts = vec![0u64; p.len()];

    fn rec(
        k: usize,
        remaining: u64,
        lo: &[u64],
        hi: &[u64],
        counts: &mut Vec<u64>,
        ok: &dyn Fn(usize, u64) -> bool,
        visit: &mut dyn FnMut(&[u64]),
    ) {
        let last = counts.len() - 1;
        if k == last {
            if remaining >= lo[k] && remaining <= hi[k] && ok(k, remaining) {
                counts[k] = remaining;
                visit(counts);
            }
            return;
        }
        let top = hi[k].min(remaining);
        for c in lo[k]..=top {
            if !ok(k, c) {
                continue;
            }
            counts[k] = c;
            rec(k + 1, remaining - c, lo, hi, counts, ok, visit);
        }
    }

    let ok = |k: usize, c: u64| typical(c, p[k]);
    rec(0, n as u64, &lo, &hi, &mut counts, &ok, &mut visit);
}

/// Finite-n exponent bound for a pair of length-`n` i.i.d. sequences drawn
/// from `p` and aligned by a permutation with `alpha n` fixed points.
pub fn theorem1_bound(n: usize, alpha: f64, eps: f64, p: &JointDistribution) -> Result<ExponentReport, BoundsError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(BoundsError::OutOfUnitInterval("alpha", alpha));
    }
    if eps <= 0.0 || !eps.is_finite() {
        return Err(BoundsError::NotPositive("eps", eps));
    }
    if n == 0 {
        return Err(BoundsError::TooSmall(n));
    }
    let mixture = p.mixture_with_product(alpha);
    let cells = p.as_slice().len();
    let mut best = f64::INFINITY;
    let mut q = vec![0.0; cells];
    for_each_typical_type(n, p.as_slice(), eps, |counts| {
        for (qk, &c) in q.iter_mut().zip(counts) {
            *qk = c as f64 / n as f64;
        }
        let d = kl_divergence(&q, mixture.as_slice()).expect("same shape");
        best = best.min(d);
    });
    let eps_penalty = cells as f64 * eps;
    let type_count_log = 4.0 * cells as f64 * ((n + 1) as f64).log2();
    let bound_log2 = if best.is_finite() {
        type_count_log - n as f64 / 4.0 * (best - eps_penalty)
    } else {
        f64::NEG_INFINITY
    };
    Ok(ExponentReport {
        n,
        alpha,
        eps,
        divergence_term: best,
        eps_penalty,
        type_count_log,
        bound_log2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Maximizing per-community fixed-point fractions; a single entry for
    /// the one-community form.
    pub allocation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub satisfied: bool,
    pub worst_alpha: f64,
    pub worst_allocation: Vec<f64>,
    /// Minimum over the α grid of `rhs - lhs`.
    pub margin: f64,
    pub rows: Vec<RegionRow>,
}

impl RegionVerdict {
    fn from_rows(rows: Vec<RegionRow>) -> Self {
        let worst = rows
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("alpha grid is never empty");
        Self {
            satisfied: worst.margin >= 0.0,
            worst_alpha: worst.alpha,
            worst_allocation: worst.allocation.clone(),
            margin: worst.margin,
            rows: rows.clone(),
        }
    }
}

fn alpha_grid(delta: f64, step: f64) -> Vec<(usize, f64)> {
    let top = ((1.0 - delta) / step + 1e-9).floor().max(0.0) as usize;
    (0..=top).map(|t| (t, t as f64 * step)).collect()
}

fn check_region_args(delta: f64, step: f64) -> Result<(), BoundsError> {
    if delta <= 0.0 || delta.is_nan() {
        return Err(BoundsError::NotPositive("delta", delta));
    }
    if step <= 0.0 || step.is_nan() {
        return Err(BoundsError::NotPositive("grid step", step));
    }
    Ok(())
}

/// Weighted divergence sum of the achievability condition for one
/// allocation of fixed-point fractions across communities.
fn allocation_objective(sizes: &[usize], alloc: &[f64], divergences: &BlockCache) -> f64 {
    let n = sizes.iter().sum::<usize>() as f64;
    let c = sizes.len();
    let mut total = 0.0;
    for i in 0..c {
        let ni = sizes[i] as f64;
        for j in i + 1..c {
            let nj = sizes[j] as f64;
            let beta = (n * n * alloc[i] * alloc[j] / (ni * nj)).clamp(0.0, 1.0);
            total += ni * nj / (n * n) * divergences.get(i, j, beta);
        }
        if sizes[i] > 1 {
            let a = n * alloc[i];
            let beta = (a * (a - 1.0) / (ni * (ni - 1.0))).clamp(0.0, 1.0);
            total += ni * (ni - 1.0) / (2.0 * n * n) * divergences.get(i, i, beta);
        }
    }
    total
}

struct BlockCache {
    blocks: Vec<JointDistribution>,
    c: usize,
}

impl BlockCache {
    fn new(model: &PairedEdgeModel) -> Self {
        let c = model.communities();
        let blocks = (0..c)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| model.block(i, j))
            .collect();
        Self { blocks, c }
    }

    fn get(&self, i: usize, j: usize, beta: f64) -> f64 {
        mixture_divergence(&self.blocks[i * self.c + j], beta)
    }
}

/// Integer allocations `k` with `k_i step <= n_i / n` and `sum k = t`.
fn allocations(caps: &[usize], t: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(
        k: usize,
        remaining: usize,
        caps: &[usize],
        suffix: &[usize],
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if k == caps.len() {
            if remaining == 0 {
                visit(cur);
            }
            return;
        }
        let low = remaining.saturating_sub(suffix[k + 1]);
        let high = caps[k].min(remaining);
        for v in low..=high {
            cur[k] = v;
            rec(k + 1, remaining - v, caps, suffix, cur, visit);
        }
    }
    let mut suffix = vec![0; caps.len() + 1];
    for k in (0..caps.len()).rev() {
        suffix[k] = suffix[k + 1] + caps[k];
    }
    let mut cur = vec![0; caps.len()];
    rec(0, t, caps, &suffix, &mut cur, &mut visit);
}

/// Achievability condition with community side-information, evaluated on
/// an α grid with step `grid_step`. The inner allocation search is a grid
/// search over per-community fractions with the same step. When `n`
/// differs from the layout's size, community sizes are scaled in
/// proportion.
pub fn achievability_check(
    model: &PairedEdgeModel,
    layout: &CommunityLayout,
    n: usize,
    delta: f64,
    grid_step: f64,
) -> Result<RegionVerdict, BoundsError> {
    check_region_args(delta, grid_step)?;
    if n < 2 {
        return Err(BoundsError::TooSmall(n));
    }
    if model.communities() != layout.c() {
        return Err(BoundsError::CommunityMismatch {
            model: model.communities(),
            layout: layout.c(),
        });
    }
    let layout = if layout.n() == n {
        layout.clone()
    } else {
        layout.scaled_to(n)?
    };
    let sizes = layout.sizes().to_vec();
    let nf = n as f64;
    let caps: Vec<usize> = sizes
        .iter()
        .map(|&s| ((s as f64 / nf + 1e-12) / grid_step).floor() as usize)
        .collect();
    let cache = BlockCache::new(model);
    let rows: Vec<Result<RegionRow, BoundsError>> = alpha_grid(delta, grid_step)
        .into_par_iter()
        .map(|(t, alpha)| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            allocations(&caps, t, |k| {
                let alloc: Vec<f64> = k.iter().map(|&v| v as f64 * grid_step).collect();
                let rhs = allocation_objective(&sizes, &alloc, &cache);
                if best.as_ref().is_none_or(|(b, _)| rhs > *b) {
                    best = Some((rhs, alloc));
                }
            });
            let (rhs, allocation) = best.ok_or(BoundsError::InfeasibleAllocation(alpha))?;
            let lhs = 4.0 * (1.0 - alpha) * nf.log2() / nf;
            Ok(RegionRow {
                alpha,
                lhs,
                rhs,
                margin: rhs - lhs,
                allocation,
            })
        })
        .collect();
    Ok(RegionVerdict::from_rows(rows.into_iter().collect::<Result<_, _>>()?))
}

/// The achievability condition is the same with or without side-information;
/// `mode` is accepted so callers can route both through one path.
pub fn achievability_check_for(
    _mode: Mode,
    model: &PairedEdgeModel,
    layout: &CommunityLayout,
    n: usize,
    delta: f64,
    grid_step: f64,
) -> Result<RegionVerdict, BoundsError> {
    achievability_check(model, layout, n, delta, grid_step)
}

/// One-community achievability condition on the α grid with step `1/n`.
pub fn er_achievability(joint: &JointDistribution, n: usize, delta: f64) -> Result<RegionVerdict, BoundsError> {
    if n < 2 {
        return Err(BoundsError::TooSmall(n));
    }
    let step = 1.0 / n as f64;
    check_region_args(delta, step)?;
    let nf = n as f64;
    let rows = alpha_grid(delta, step)
        .into_par_iter()
        .map(|(_, alpha)| {
            let lhs = 8.0 * (1.0 - alpha) * nf.log2() / nf;
            let rhs = mixture_divergence(joint, alpha);
            RegionRow {
                alpha,
                lhs,
                rhs,
                margin: rhs - lhs,
                allocation: vec![alpha],
            }
        })
        .collect();
    Ok(RegionVerdict::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConverseVerdict {
    pub lhs: f64,
    pub rhs: f64,
    /// Matching is impossible when `lhs > rhs`.
    pub impossible: bool,
}

impl ConverseVerdict {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Necessary condition `n log2 n <= sum of block sizes times block mutual
/// information`, given the mutual information of each block.
pub fn converse_from_information(sizes: &[usize], information: impl Fn(usize, usize) -> f64) -> ConverseVerdict {
    let n: usize = sizes.iter().sum();
    let nf = n as f64;
    let mut rhs = 0.0;
    for (i, &si) in sizes.iter().enumerate() {
        let ni = si as f64;
        for (j, &sj) in sizes.iter().enumerate().skip(i + 1) {
            rhs += ni * sj as f64 * information(i, j);
        }
        rhs += ni * (ni - 1.0) / 2.0 * information(i, i);
    }
    let lhs = if n > 0 { nf * nf.log2() } else { 0.0 };
    ConverseVerdict {
        lhs,
        rhs,
        impossible: lhs > rhs,
    }
}

pub fn converse_check(
    model: &PairedEdgeModel,
    layout: &CommunityLayout,
    n: usize,
) -> Result<ConverseVerdict, BoundsError> {
    if model.communities() != layout.c() {
        return Err(BoundsError::CommunityMismatch {
            model: model.communities(),
            layout: layout.c(),
        });
    }
    let layout = if layout.n() == n {
        layout.clone()
    } else {
        layout.scaled_to(n)?
    };
    Ok(converse_from_information(layout.sizes(), |i, j| {
        mutual_information(&model.block(i, j))
    }))
}

/// One-community form: `2 log2(n) / n <= I(X; X')`.
pub fn er_converse(joint: &JointDistribution, n: usize) -> ConverseVerdict {
    let nf = n as f64;
    let lhs = 2.0 * nf.log2() / nf;
    let rhs = mutual_information(joint);
    ConverseVerdict {
        lhs,
        rhs,
        impossible: lhs > rhs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BERN_KL: f64 = 0.207_518_749_639_421_9;
    const DSBS_011_MI: f64 = 0.500_084_041_835_472;

    fn copy_uniform() -> JointDistribution {
        JointDistribution::copy_of(&[0.5, 0.5])
    }

    #[test]
    fn kl_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap() - BERN_KL).abs() < 1e-15);
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), f64::INFINITY);
        assert!(matches!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(BoundsError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        assert!(mutual_information(&JointDistribution::independent(&[0.3, 0.7], &[0.6, 0.4])).abs() < 1e-15);
        assert!((mutual_information(&JointDistribution::dsbs(0.11)) - DSBS_011_MI).abs() < 1e-12);
        assert!((mutual_information(&copy_uniform()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_at_full_overlap_is_trivial() {
        let r = theorem1_bound(20, 1.0, 0.1, &JointDistribution::dsbs(0.2)).unwrap();
        assert!(r.divergence_term.abs() < 1e-2);
        assert!(r.bound() >= 1.0 - 1e-12);
    }

    #[test]
    fn exponent_approaches_mutual_information() {
        let p = JointDistribution::dsbs(0.11);
        let r = theorem1_bound(2000, 0.0, 0.002, &p).unwrap();
        assert!((r.divergence_term - DSBS_011_MI).abs() < 0.02, "{}", r.divergence_term);
        let coarse = theorem1_bound(2000, 0.0, 0.01, &p).unwrap();
        assert!(coarse.divergence_term <= r.divergence_term);
    }

    #[test]
    fn exponent_identity() {
        let r = theorem1_bound(8, 0.0, 0.25, &JointDistribution::dsbs(0.1)).unwrap();
        let expected = r.type_count_log - 2.0 * (r.divergence_term - 4.0 * 0.25);
        assert_eq!(r.bound_log2, expected);
        assert_eq!(r.type_count_log, 16.0 * 9f64.log2());
    }

    #[test]
    fn no_typical_type_gives_vacuous_exponent() {
        // one slot: frequencies are 0 or 1, never within 0.1 of 1/4
        let r = theorem1_bound(1, 0.0, 0.1, &JointDistribution::uniform(2, 2)).unwrap();
        assert_eq!(r.divergence_term, f64::INFINITY);
        assert_eq!(r.bound_log2, f64::NEG_INFINITY);
    }

    #[test]
    fn independent_model_is_never_achievable() {
        let model = PairedEdgeModel::homogeneous(2, &JointDistribution::uniform(2, 2)).unwrap();
        let layout = CommunityLayout::contiguous(&[3, 3]).unwrap();
        for n in [2, 6, 50] {
            assert!(
                !achievability_check(&model, &layout, n, 0.1, 1.0 / n as f64)
                    .unwrap()
                    .satisfied
            );
        }
        assert!(
            !er_achievability(&JointDistribution::uniform(2, 2), 1000, 0.1)
                .unwrap()
                .satisfied
        );
    }

    #[test]
    fn one_community_copy_model() {
        let p = copy_uniform();
        let small = er_achievability(&p, 10, 0.05).unwrap();
        assert!(!small.satisfied);
        let first = &small.rows[0];
        assert!((first.lhs - 2.657_542_475_909_89).abs() < 1e-9);
        assert!((first.rhs - 1.0).abs() < 1e-12);
        let large = er_achievability(&p, 1000, 0.05).unwrap();
        assert!(large.satisfied);
        for row in &large.rows {
            assert!((row.rhs - (2.0 / (1.0 + row.alpha)).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn allocation_form_agrees_with_one_community_form() {
        let model = PairedEdgeModel::homogeneous(1, &copy_uniform()).unwrap();
        let layout = CommunityLayout::contiguous(&[10]).unwrap();
        for n in [10, 20, 100, 1000] {
            let a = achievability_check(&model, &layout, n, 0.05, 1.0 / n as f64).unwrap();
            let b = er_achievability(&copy_uniform(), n, 0.05).unwrap();
            assert_eq!(a.satisfied, b.satisfied, "n = {n}");
            assert_eq!(a.rows.len(), b.rows.len());
        }
    }

    #[test]
    fn single_grid_point_when_delta_is_one() {
        let model = PairedEdgeModel::homogeneous(1, &copy_uniform()).unwrap();
        let layout = CommunityLayout::contiguous(&[100]).unwrap();
        let v = achievability_check(&model, &layout, 100, 1.0, 0.01).unwrap();
        assert_eq!(v.rows.len(), 1);
        assert_eq!(v.rows[0].alpha, 0.0);
        assert!((v.rows[0].lhs - 4.0 * 100f64.log2() / 100.0).abs() < 1e-15);
        assert!((v.rows[0].rhs - 99.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_allocation_is_reported() {
        let model = PairedEdgeModel::homogeneous(2, &copy_uniform()).unwrap();
        let layout = CommunityLayout::contiguous(&[5, 5]).unwrap();
        match achievability_check(&model, &layout, 10, 0.01, 0.3) {
            Err(BoundsError::InfeasibleAllocation(a)) => assert!((a - 0.9).abs() < 1e-12),
            other => panic!("expected infeasible allocation, got {other:?}"),
        }
    }

    #[test]
    fn allocation_search_respects_caps() {
        let model = PairedEdgeModel::homogeneous(2, &JointDistribution::dsbs(0.05)).unwrap();
        let layout = CommunityLayout::contiguous(&[2, 8]).unwrap();
        let v = achievability_check(&model, &layout, 10, 0.1, 0.1).unwrap();
        for row in &v.rows {
            assert!(row.allocation[0] <= 0.2 + 1e-12 && row.allocation[1] <= 0.8 + 1e-12);
            assert!((row.allocation.iter().sum::<f64>() - row.alpha).abs() < 1e-12);
        }
        assert_eq!(v.satisfied, v.margin >= 0.0);
    }

    #[test]
    fn converse_examples() {
        let v = converse_from_information(&[5, 5], |_, _| 0.2);
        assert!((v.rhs - 9.0).abs() < 1e-12);
        assert!((v.lhs - 33.219_280_948_873_62).abs() < 1e-9);
        assert!(v.impossible);

        let model = PairedEdgeModel::homogeneous(2, &JointDistribution::uniform(2, 2)).unwrap();
        let layout = CommunityLayout::contiguous(&[5, 5]).unwrap();
        for n in [2, 10, 1000] {
            let v = converse_check(&model, &layout, n).unwrap();
            assert_eq!(v.rhs, 0.0);
            assert!(v.impossible);
        }

        let c = converse_from_information(&[1000], |_, _| 0.5);
        assert!(!c.impossible);
        let rate = c.lhs / (1000.0 * 999.0 / 2.0);
        assert!(rate <= 0.5);
    }

    #[test]
    fn er_converse_example() {
        // MI of a binary symmetric channel at the crossover giving I = 0.5
        let p = JointDistribution::dsbs(0.110_027_864_438_359_55);
        let v = er_converse(&p, 1000);
        assert!((v.lhs - 0.019_931_568_569_324_17).abs() < 1e-12);
        assert!((v.rhs - 0.5).abs() < 1e-9);
        assert!(!v.impossible);
    }
}
