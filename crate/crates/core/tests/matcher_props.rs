use commatch::graphgen::{anonymize, anonymize_with, sample_pair, MatchingInstance, Mode};
use commatch::matcher::{ambiguity_set_csi, ambiguity_set_wsi, run_matching, AmbiguitySet, MatcherConfig};
use commatch::model::{CommunityLayout, JointDistribution, PairedEdgeModel};
use commatch::oracle::enumerate_labelings;
use commatch::permutation::{Labeling, Permutation};
use commatch::typicality::{extract_blocks, is_jointly_typical};
use proptest::prelude::*;

fn copy_model(c: usize) -> PairedEdgeModel {
    PairedEdgeModel::homogeneous(c, &JointDistribution::copy_of(&[0.5, 0.5])).unwrap()
}

fn mixed_model() -> PairedEdgeModel {
    let intra = JointDistribution::dsbs(0.1);
    let inter = JointDistribution::from_rows(&[vec![0.7, 0.1], vec![0.1, 0.1]]).unwrap();
    PairedEdgeModel::from_fn(2, 2, |i, j| if i == j { intra.clone() } else { inter.clone() }).unwrap()
}

/// Whether `hat` passes every block test under the given label communities.
fn recheck(inst: &MatchingInstance, label_communities: &[usize], hat: &Labeling, eps: f64) -> bool {
    let c = inst.model.communities();
    extract_blocks(&inst.first, label_communities, c, &inst.second, hat)
        .blocks
        .iter()
        .all(|b| is_jointly_typical(&b.first, &b.second, &inst.model.block(b.i, b.j), eps).unwrap())
}

/// Ambiguity set by testing every labeling from the oracle's enumeration.
fn brute_force_csi(inst: &MatchingInstance, eps: f64, preserving: bool) -> Vec<Labeling> {
    let side = inst.side_info.as_ref().unwrap();
    let layout = CommunityLayout::contiguous(&[inst.n()]).unwrap();
    let mut out: Vec<Labeling> = enumerate_labelings(&layout, false)
        .unwrap()
        .into_iter()
        .filter(|hat| !preserving || (0..inst.n()).all(|v| side.first[hat.label_of(v)] == side.second[v]))
        .filter(|hat| recheck(inst, &side.first, hat, eps))
        .collect();
    out.sort();
    out
}

fn instance(
    model: &PairedEdgeModel,
    sizes: &[usize],
    seed: u64,
    mode: Mode,
) -> (MatchingInstance, commatch::graphgen::SealedTruth) {
    let layout = CommunityLayout::contiguous(sizes).unwrap();
    let pair = sample_pair(model, &layout, seed).unwrap();
    anonymize(&pair, mode, seed ^ 0xabcdef)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csi_matches_brute_force(seed in any::<u64>(), eps in 0.05f64..0.5, split in 1usize..5) {
        let (inst, _) = instance(&mixed_model(), &[split, 6 - split], seed, Mode::Csi);
        let set = ambiguity_set_csi(&inst, eps, &MatcherConfig::default()).unwrap();
        prop_assert_eq!(&set.labelings, &brute_force_csi(&inst, eps, true));
        let side = inst.side_info.as_ref().unwrap();
        for hat in &set.labelings {
            prop_assert!(recheck(&inst, &side.first, hat, eps));
        }
    }

    #[test]
    fn unrestricted_search_is_a_superset(seed in any::<u64>(), eps in 0.05f64..0.5) {
        let (inst, _) = instance(&mixed_model(), &[3, 3], seed, Mode::Csi);
        let restricted = ambiguity_set_csi(&inst, eps, &MatcherConfig::default()).unwrap();
        let cfg = MatcherConfig { community_preserving: false, ..MatcherConfig::default() };
        let all = ambiguity_set_csi(&inst, eps, &cfg).unwrap();
        prop_assert!(restricted.is_subset_of(&all));
        prop_assert_eq!(&all.labelings, &brute_force_csi(&inst, eps, false));
        prop_assert_eq!(all.candidate_space, 720);
    }

    #[test]
    fn csi_is_contained_in_wsi(seed in any::<u64>(), eps in 0.05f64..0.6) {
        let (inst, _) = instance(&mixed_model(), &[2, 3], seed, Mode::Csi);
        let csi = ambiguity_set_csi(&inst, eps, &MatcherConfig::default()).unwrap();
        let wsi = ambiguity_set_wsi(&inst, eps, &MatcherConfig::default()).unwrap();
        prop_assert!(csi.is_subset_of(&wsi));
        let full = MatcherConfig { full_sweep: true, ..MatcherConfig::default() };
        let wider = ambiguity_set_wsi(&inst, eps, &full).unwrap();
        prop_assert!(wsi.is_subset_of(&wider));
    }

    #[test]
    fn one_community_modes_coincide(seed in any::<u64>(), eps in 0.05f64..0.6, n in 2usize..7) {
        let model = PairedEdgeModel::homogeneous(1, &JointDistribution::dsbs(0.15)).unwrap();
        let (inst, _) = instance(&model, &[n], seed, Mode::Csi);
        let csi = ambiguity_set_csi(&inst, eps, &MatcherConfig::default()).unwrap();
        let wsi = ambiguity_set_wsi(&inst, eps, &MatcherConfig::default()).unwrap();
        prop_assert_eq!(csi.labelings, wsi.labelings);
    }

    #[test]
    fn matching_ignores_thread_count(seed in any::<u64>()) {
        let (inst, truth) = instance(&mixed_model(), &[3, 4], seed, Mode::Csi);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let cfg = MatcherConfig::default();
        let a = one.install(|| run_matching(&inst, &truth, Mode::Csi, 0.3, seed, &cfg));
        let b = four.install(|| run_matching(&inst, &truth, Mode::Csi, 0.3, seed, &cfg));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.labeling, b.labeling),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "outcomes differ"),
        }
    }
}

#[test]
fn wsi_members_pass_some_hypothesis() {
    let (inst, _) = instance(&mixed_model(), &[2, 2], 17, Mode::Wsi);
    let eps = 0.4;
    let wsi = ambiguity_set_wsi(&inst, eps, &MatcherConfig::default()).unwrap();
    let hypotheses = commatch::matcher::assignments_with_sizes(&[2, 2]);
    for hat in &wsi.labelings {
        assert!(hypotheses.iter().any(|h| recheck(&inst, h, hat, eps)));
    }
}

#[test]
fn product_coupling_tiny_eps_set_sizes() {
    let model = PairedEdgeModel::homogeneous(2, &JointDistribution::uniform(2, 2)).unwrap();
    let mut sizes = Vec::new();
    for seed in 0..100 {
        let (inst, _) = instance(&model, &[3, 3], seed, Mode::Csi);
        let set = ambiguity_set_csi(&inst, 0.01, &MatcherConfig::default()).unwrap();
        assert_eq!(set.labelings, brute_force_csi(&inst, 0.01, true), "seed {seed}");
        sizes.push(set.len());
    }
    sizes.sort();
    // three-slot intra blocks can never sit within 0.01 of 1/4
    assert_eq!(sizes[50], 0);
}

#[test]
fn singleton_sets_under_copy_coupling_are_exact() {
    let layout = CommunityLayout::contiguous(&[4, 4]).unwrap();
    let mut singletons = 0;
    for seed in 0..200 {
        let pair = sample_pair(&copy_model(2), &layout, seed).unwrap();
        let (inst, truth) = anonymize(&pair, Mode::Csi, seed + 1000);
        if let Ok(out) = run_matching(&inst, &truth, Mode::Csi, 0.2, seed, &MatcherConfig::default()) {
            if out.diagnostics.set_size == 1 && out.diagnostics.truth_in_set {
                singletons += 1;
                assert_eq!(out.accuracy, 1.0);
            }
        }
    }
    assert!(singletons > 0);
}

#[test]
fn identity_shuffle_copy_coupling_keeps_truth() {
    // six slots: the identity reproduces the first graph, so it is typical
    // exactly when the share of 1-edges is within 0.3 of one half
    let layout = CommunityLayout::contiguous(&[4]).unwrap();
    let mut checked = 0;
    for seed in 0..40 {
        let pair = sample_pair(&copy_model(1), &layout, seed).unwrap();
        let (inst, truth) = anonymize_with(&pair, Mode::Csi, &Permutation::identity(4));
        assert_eq!(truth.labeling(), &Labeling::identity(4));
        let ones = pair.g1.edges.upper_triangle().iter().filter(|&&v| v == 1).count();
        let set = ambiguity_set_csi(&inst, 0.3, &MatcherConfig::default()).unwrap();
        let balanced = (2..=4).contains(&ones);
        assert_eq!(set.contains(&Labeling::identity(4)), balanced, "seed {seed}");
        checked += balanced as usize;
    }
    assert!(checked > 20);
}

#[test]
fn independent_coupling_is_at_chance() {
    let model = PairedEdgeModel::homogeneous(1, &JointDistribution::uniform(2, 2)).unwrap();
    let layout = CommunityLayout::contiguous(&[8]).unwrap();
    let trials = 100;
    let mut total = 0.0;
    for seed in 0..trials {
        let pair = sample_pair(&model, &layout, seed).unwrap();
        let (inst, truth) = anonymize(&pair, Mode::Csi, seed + 7);
        let eps = commatch::typicality::EpsilonSchedule::default().at(8);
        let out = run_matching(&inst, &truth, Mode::Csi, eps, seed, &MatcherConfig::default()).unwrap();
        total += out.accuracy;
    }
    // fixed points of a uniform permutation: mean 1, variance 1
    let mean = total / trials as f64;
    let sigma = (1.0 / 8.0) / (trials as f64).sqrt();
    assert!((mean - 1.0 / 8.0).abs() <= 3.0 * sigma, "mean accuracy {mean}");
}

#[test]
fn set_is_sorted_and_unique() {
    let (inst, _) = instance(&mixed_model(), &[3, 3], 4, Mode::Wsi);
    let set: AmbiguitySet = ambiguity_set_wsi(&inst, 0.5, &MatcherConfig::default()).unwrap();
    assert!(set.labelings.windows(2).all(|w| w[0] < w[1]));
}
