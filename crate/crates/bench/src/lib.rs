//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use num_complex::Complex64;
use surjlab_core::probe::{balanced_pair, willis_element};
use surjlab_core::{parse_element_expr, BallIndex, Group, GroupAlgebraElement};

pub fn free_group() -> Group {
    Group::parse("F2").expect("F2 parses")
}

pub fn willis() -> GroupAlgebraElement {
    let (a, b) = balanced_pair();
    willis_element(&free_group(), a, b).expect("unimodular pair")
}

/// Sum of the four generators of `F2` and their inverses.
pub fn adjacency(f2: &Group) -> GroupAlgebraElement {
    parse_element_expr(f2, "da + dA + db + dB").expect("adjacency parses")
}

pub fn ball(group: &Group, r: usize) -> Arc<BallIndex> {
    Arc::new(group.ball(r).expect("ball fits"))
}

/// `delta_e` on `rows` coordinates.
pub fn delta_e(rows: usize, e: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); rows];
    v[e] = Complex64::new(1.0, 0.0);
    v
}
