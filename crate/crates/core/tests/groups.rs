mod common;

use common::{evaluate, group, word, FAMILIES};
use proptest::prelude::*;
use surjlab_core::Group;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn group_axioms(i in 0usize..FAMILIES.len(), x in word(6), y in word(6), z in word(6)) {
        let g = group(i);
        let (a, b, c) = (evaluate(&g, &x), evaluate(&g, &y), evaluate(&g, &z));
        let e = g.identity();
        let ab_c = g.mul(&g.mul(&a, &b).unwrap(), &c).unwrap();
        let a_bc = g.mul(&a, &g.mul(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        prop_assert_eq!(g.mul(&a, &e).unwrap(), a.clone());
        prop_assert_eq!(g.mul(&e, &a).unwrap(), a.clone());
        let ai = g.inv(&a).unwrap();
        prop_assert!(g.is_identity(&g.mul(&a, &ai).unwrap()));
        prop_assert!(g.is_identity(&g.mul(&ai, &a).unwrap()));
    }

    #[test]
    fn format_parse_round_trip(i in 0usize..FAMILIES.len(), x in word(8)) {
        let g = group(i);
        let a = evaluate(&g, &x);
        prop_assert_eq!(g.parse_element(&g.format_element(&a)).unwrap(), a);
    }
}

fn radii(g: &Group) -> usize {
    match g.to_string().as_str() {
        "Z" | "Z^2" => 7,
        "Z^3" | "H3" | "F2" => 5,
        _ => 4,
    }
}

#[test]
fn balls_nest_and_close_under_inversion() {
    for i in 0..FAMILIES.len() {
        let g = group(i);
        let top = g.ball(radii(&g)).unwrap();
        for r in 0..radii(&g) {
            let small = g.ball(r).unwrap();
            let big = g.ball(r + 1).unwrap();
            assert_eq!(small.elements(), &big.elements()[..small.len()], "{g} r={r}");
            assert_eq!(big.prefix_len(r), small.len());
        }
        assert_eq!(top.identity_index(), 0);
        for (k, h) in top.elements().iter().enumerate() {
            let hi = g.inv(h).unwrap();
            let j = top.index_of(&hi).unwrap_or_else(|| panic!("{g}: inverse of {h:?} missing"));
            assert_eq!(top.layer_of(k), top.layer_of(j), "{g}: layer symmetry");
            assert_eq!(top.word_length(h), Some(top.layer_of(k)));
        }
    }
}

#[test]
fn known_ball_sizes() {
    let sizes = |d: &str, r: usize| -> Vec<usize> {
        let g = Group::parse(d).unwrap();
        (0..=r).map(|k| g.ball(k).unwrap().len()).collect()
    };
    // 1 + 4 * (3^r - 1) / 2
    assert_eq!(sizes("F2", 4), vec![1, 5, 17, 53, 161]);
    // 2r^2 + 2r + 1
    assert_eq!(sizes("Z^2", 3), vec![1, 5, 13, 25]);
    assert_eq!(sizes("C12", 7), vec![1, 3, 5, 7, 9, 11, 12, 12]);
    assert_eq!(*sizes("S4", 10).last().unwrap(), 24);
}
