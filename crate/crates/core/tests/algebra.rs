mod common;

use common::{element, evaluate, group, terms, FAMILIES};
use num_complex::Complex64;
use proptest::prelude::*;
use surjlab_core::{Exponent, GroupAlgebraElement};

fn close(a: &GroupAlgebraElement, b: &GroupAlgebraElement, tol: f64) -> bool {
    a.sub(b).unwrap().lp_coeff_norm(Exponent::INFINITY) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn convolution_is_associative(i in 0usize..FAMILIES.len(), x in terms(2), y in terms(2), z in terms(2)) {
        let g = group(i);
        let (a, b, c) = (element(&g, &x), element(&g, &y), element(&g, &z));
        let left = a.convolve(&b).unwrap().convolve(&c).unwrap();
        let right = a.convolve(&b.convolve(&c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-12));

        let (ea, eb, ec) = (a.to_exact().unwrap(), b.to_exact().unwrap(), c.to_exact().unwrap());
        let left = ea.convolve(&eb).unwrap().convolve(&ec).unwrap();
        let right = ea.convolve(&eb.convolve(&ec).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn l1_is_submultiplicative(i in 0usize..FAMILIES.len(), x in terms(3), y in terms(3)) {
        let g = group(i);
        let (a, b) = (element(&g, &x), element(&g, &y));
        let ab = a.convolve(&b).unwrap().lp_coeff_norm(Exponent::ONE);
        prop_assert!(ab <= a.lp_coeff_norm(Exponent::ONE) * b.lp_coeff_norm(Exponent::ONE) * (1.0 + 1e-12));
    }

    #[test]
    fn star_reverses_products(i in 0usize..FAMILIES.len(), x in terms(3), y in terms(3)) {
        let g = group(i);
        let (a, b) = (element(&g, &x), element(&g, &y));
        let lhs = a.convolve(&b).unwrap().star();
        let rhs = b.star().convolve(&a.star()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
        prop_assert_eq!(a.star().star(), a.clone());
    }

    #[test]
    fn flip_and_star_commute(i in 0usize..FAMILIES.len(), x in terms(4)) {
        let g = group(i);
        let a = element(&g, &x);
        let conj = a.map_coefficients(|c: &Complex64| c.conj());
        prop_assert_eq!(a.flip().star(), conj.clone());
        prop_assert_eq!(a.star().flip(), conj);
        prop_assert_eq!(a.flip().flip(), a);
    }

    #[test]
    fn delta_convolution_is_group_product(i in 0usize..FAMILIES.len(), x in common::word(5), y in common::word(5)) {
        let g = group(i);
        let (s, t) = (evaluate(&g, &x), evaluate(&g, &y));
        let ds = GroupAlgebraElement::<Complex64>::delta(&g, s.clone()).unwrap();
        let dt = GroupAlgebraElement::<Complex64>::delta(&g, t.clone()).unwrap();
        let expected = GroupAlgebraElement::<Complex64>::delta(&g, g.mul(&s, &t).unwrap()).unwrap();
        prop_assert_eq!(ds.convolve(&dt).unwrap(), expected);
    }

    #[test]
    fn json_terms_round_trip(i in 0usize..FAMILIES.len(), x in terms(4)) {
        let g = group(i);
        let a = element(&g, &x);
        let back = GroupAlgebraElement::from_json_terms(&g, &a.to_json_terms()).unwrap();
        prop_assert_eq!(back, a);
    }
}
