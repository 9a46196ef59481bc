use commatch::permutation::{from_labelings, next_lexicographic, standard_permutation, Labeling, Permutation};
use commatch::typicality::joint_type;
use proptest::prelude::*;

fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut v: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation::from_vec(v.clone()).unwrap()];
    while next_lexicographic(&mut v) {
        out.push(Permutation::from_vec(v.clone()).unwrap());
    }
    out
}

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_vec(v).unwrap())
}

#[test]
fn standard_form_round_trip_exhaustive() {
    for n in 0..=7 {
        for p in all_permutations(n) {
            let cs = p.cycle_decomposition();
            let std = standard_permutation(cs.m(), &cs.lengths(), n).unwrap();
            let back = std.cycle_decomposition();
            assert_eq!((back.m(), back.lengths()), (cs.m(), cs.lengths()), "{p}");
        }
    }
}

#[test]
fn inverse_undoes_apply_exhaustive() {
    for n in 0..=7 {
        let s: Vec<u32> = (0..n as u32).map(|k| k * 7 + 3).collect();
        for p in all_permutations(n) {
            let there = p.inverse().apply(&s).unwrap();
            assert_eq!(p.apply(&there).unwrap(), s);
        }
    }
}

#[test]
fn cycles_rebuild_the_permutation_exhaustive() {
    for n in 1..=6 {
        for p in all_permutations(n) {
            let cs = p.cycle_decomposition();
            let rebuilt = Permutation::from_cycles(n, &cs.cycles).unwrap();
            assert_eq!(rebuilt, p);
            for c in &cs.cycles {
                assert!(c.len() >= 2 && c[0] == *c.iter().min().unwrap());
            }
            assert!(cs.cycles.windows(2).all(|w| w[0][0] < w[1][0]));
        }
    }
}

proptest! {
    #[test]
    fn joint_type_survives_joint_relabeling(
        (p, x, y) in (1usize..12).prop_flat_map(|n| (
            permutation(n),
            prop::collection::vec(0u8..3, n),
            prop::collection::vec(0u8..3, n),
        ))
    ) {
        let base = joint_type(&x, &y, 3, 3).unwrap();
        let moved = joint_type(&p.apply(&x).unwrap(), &p.apply(&y).unwrap(), 3, 3).unwrap();
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn labelings_compose(
        (a, b, c) in (1usize..9).prop_flat_map(|n| (permutation(n), permutation(n), permutation(n)))
    ) {
        let s1 = Labeling::from_vec(a.as_slice().to_vec()).unwrap();
        let s2 = Labeling::from_vec(b.as_slice().to_vec()).unwrap();
        let s3 = Labeling::from_vec(c.as_slice().to_vec()).unwrap();
        let direct = from_labelings(&s1, &s2).unwrap();
        let via = from_labelings(&s1, &s3).unwrap().then(&from_labelings(&s3, &s2).unwrap());
        prop_assert_eq!(direct, via);
    }

    #[test]
    fn fixed_points_agree_with_decomposition(p in (0usize..10).prop_flat_map(permutation)) {
        let cs = p.cycle_decomposition();
        prop_assert_eq!(cs.m(), p.fixed_point_count());
        prop_assert_eq!(cs.m() + cs.lengths().iter().sum::<usize>(), p.len());
    }
}
