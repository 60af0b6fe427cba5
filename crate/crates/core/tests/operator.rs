mod common;

use std::sync::Arc;

use common::{element, group, matrix, sigma_max, terms, FAMILIES};
use num_complex::Complex64;
use proptest::prelude::*;
use surjlab_core::lp::{LinearProgram, LpBackend, Sense, VarKind};
use surjlab_core::operator::io::{read_binary, read_text, write_binary, write_text};
use surjlab_core::operator::{opnorm_bounds, pnorm_power_iteration, range_distance_l1_with, RangeOptions};
use surjlab_core::{
    assemble, assemble_extended, range_distance_l1, Error, Exponent, GroupAlgebraElement, Side, SparseMatrix,
};

fn exponents() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::ONE),
        Just(Exponent::TWO),
        Just(Exponent::INFINITY),
        (1.05f64..6.0).prop_map(|p| Exponent::new(p).unwrap()),
    ]
}

fn delta_e(op_rows: usize, at: usize, c: Complex64) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); op_rows];
    v[at] = c;
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn left_columns_are_translates(i in 0usize..FAMILIES.len(), x in terms(2), r in 0usize..=3) {
        let g = group(i);
        let a = element(&g, &x);
        let ball = Arc::new(g.ball(r).unwrap());
        let op = assemble(&a, &ball, Side::Left).unwrap();
        for (j, h) in ball.elements().iter().enumerate() {
            let image = a.convolve(&GroupAlgebraElement::delta(&g, h.clone()).unwrap()).unwrap();
            for (k, row) in ball.elements().iter().enumerate() {
                prop_assert_eq!(op.matrix().get(k, j), image.coeff(row));
            }
        }
        let ext = assemble_extended(&a, r).unwrap();
        for j in 0..ext.matrix().cols() {
            let col: f64 = ext.matrix().column(j).iter().map(|(_, c)| c.norm()).sum();
            prop_assert!((col - a.lp_coeff_norm(Exponent::ONE)).abs() <= 1e-12);
        }
    }

    #[test]
    fn norm_bounds_are_ordered(m in (1usize..=12, 1usize..=12).prop_flat_map(|(r, c)| matrix(r, c)), p in exponents()) {
        let t = SparseMatrix::from_dense(&m);
        let nb = opnorm_bounds(&t, p).unwrap();
        prop_assert!(nb.lower <= nb.upper * (1.0 + 1e-12), "{} > {}", nb.lower, nb.upper);
        let s = sigma_max(&m);
        if p == Exponent::TWO {
            prop_assert!((nb.lower - s).abs() <= 1e-10 * s.max(1.0));
            prop_assert!((t.max_col_sum() * t.max_row_sum()).sqrt() >= s * (1.0 - 1e-12));
        }
    }

    #[test]
    fn power_iteration_is_monotone_on_nonnegative(
        m in (2usize..=10).prop_flat_map(|n| matrix(n, n)),
        p in 1.1f64..5.0,
    ) {
        let nonneg = m.map(|z| Complex64::new(z.re.abs(), 0.0));
        let t = SparseMatrix::from_dense(&nonneg);
        let (value, history, _) = pnorm_power_iteration(&t, Exponent::new(p).unwrap(), 500, 1e-12);
        prop_assert!(history.windows(2).all(|w| w[1] >= w[0]), "{history:?}");
        prop_assert_eq!(history.last().copied(), Some(value));
        prop_assert!(value <= opnorm_bounds(&t, Exponent::new(p).unwrap()).unwrap().upper * (1.0 + 1e-12));
    }

    #[test]
    fn coordinate_formats_round_trip(m in (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let t = SparseMatrix::from_dense(&m);
        let mut text = Vec::new();
        write_text(&t, &mut text).unwrap();
        prop_assert_eq!(&read_text(&text[..]).unwrap(), &t);
        let mut bin = Vec::new();
        write_binary(&t, &mut bin).unwrap();
        prop_assert_eq!(read_binary(&bin[..]).unwrap(), t);
    }

    #[test]
    fn lp_strong_duality(
        costs in prop::collection::vec(0.1f64..3.0, 1..=6),
        rows in prop::collection::vec((prop::collection::vec(0.0f64..2.0, 6), 0.5f64..4.0), 1..=6),
    ) {
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = costs.iter().map(|c| lp.add_var(*c, VarKind::NonNegative)).collect();
        for (coefs, rhs) in &rows {
            let mut terms: Vec<(usize, f64)> = vars.iter().zip(coefs).map(|(v, a)| (*v, *a)).collect();
            terms[0].1 += 0.5;
            lp.add_constraint(terms, Sense::Ge, *rhs).unwrap();
        }
        let dense = lp.solve(LpBackend::DenseSimplex).unwrap();
        let sparse = lp.solve(LpBackend::Sparse).unwrap();
        let dual = lp.dual().solve(LpBackend::DenseSimplex).unwrap();
        let scale = dense.objective.abs().max(1.0);
        prop_assert!((dense.objective - sparse.objective).abs() <= 1e-9 * scale);
        prop_assert!((dense.objective + dual.objective).abs() <= 1e-9 * scale);
        prop_assert!(lp.max_violation(&dense.x) <= 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn range_distance_scales_with_target(
        i in prop::sample::select(vec![1usize, 3, 5]),
        x in terms(1),
        r in 1usize..=2,
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
    ) {
        prop_assume!(re.abs() + im.abs() > 0.1);
        let g = group(i);
        let a = element(&g, &x);
        let c = Complex64::new(re, im);
        let op = assemble_extended(&a, r).unwrap();
        let e = op.row_ball().identity_index();
        let base = range_distance_l1(&op, &delta_e(op.matrix().rows(), e, Complex64::new(1.0, 0.0))).unwrap();
        let scaled_op = assemble_extended(&a.scale(&c), r).unwrap();
        let scaled = range_distance_l1(&scaled_op, &delta_e(op.matrix().rows(), e, c)).unwrap();
        let expected = c.norm() * base.distance;
        prop_assert!((scaled.distance - expected).abs() <= 1e-8 * expected.max(1.0),
            "{} vs {}", scaled.distance, expected);
        for d in [&base, &scaled] {
            prop_assert!(d.lower_bound <= d.distance * (1.0 + 1e-9) + 1e-12);
            let gap = d.duality_gap.unwrap();
            prop_assert!(gap <= 1e-9 * d.distance.max(1.0), "gap {gap:e}");
        }
    }

    #[test]
    fn backends_agree(i in prop::sample::select(vec![1usize, 3, 5]), x in terms(1), r in 0usize..=2) {
        let g = group(i);
        let a = element(&g, &x);
        let op = assemble_extended(&a, r).unwrap();
        let target = delta_e(op.matrix().rows(), op.row_ball().identity_index(), Complex64::new(1.0, 0.0));
        let solve = |backend| range_distance_l1_with(&op, &target, &RangeOptions { backend, ..RangeOptions::default() });
        let sparse = solve(LpBackend::Sparse).unwrap();
        prop_assert!(sparse.duality_gap.unwrap() <= 1e-9 * sparse.distance.max(1.0));
        // the dense tableau either matches or reports that it lost accuracy
        match solve(LpBackend::DenseSimplex) {
            Ok(dense) => {
                prop_assert!(dense.duality_gap.unwrap() <= 1e-9 * dense.distance.max(1.0));
                prop_assert!((dense.distance - sparse.distance).abs() <= 1e-7 * sparse.distance.max(1.0),
                    "{} vs {}", dense.distance, sparse.distance);
            }
            Err(e) => prop_assert!(matches!(e, Error::LpUnstable(_)), "{e}"),
        }
    }

    #[test]
    fn larger_balls_never_do_worse(i in prop::sample::select(vec![1usize, 3, 5]), x in terms(1)) {
        let g = group(i);
        let a = element(&g, &x);
        let mut previous: Option<Vec<Complex64>> = None;
        let mut last = f64::INFINITY;
        for r in 0..=2 {
            let op = assemble_extended(&a, r).unwrap();
            let target = delta_e(op.matrix().rows(), op.row_ball().identity_index(), Complex64::new(1.0, 0.0));
            let warm_start = previous.take().map(|mut v| {
                v.resize(op.matrix().cols(), Complex64::new(0.0, 0.0));
                v
            });
            let d = range_distance_l1_with(&op, &target, &RangeOptions { warm_start, ..RangeOptions::default() }).unwrap();
            prop_assert!(d.distance <= last, "r={r}: {} > {last}", d.distance);
            last = d.distance;
            previous = Some(d.argmin);
        }
    }
}
