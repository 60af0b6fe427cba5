#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use surjlab_core::{Group, GroupAlgebraElement, GroupElement};

pub const FAMILIES: [&str; 8] = ["Z", "Z^2", "Z^3", "F2", "F3", "H3", "C12", "S4"];

pub fn group(i: usize) -> Group {
    Group::parse(FAMILIES[i % FAMILIES.len()]).unwrap()
}

/// A word in the generators: (generator index, inverted).
pub fn word(max_len: usize) -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..8, any::<bool>()), 0..=max_len)
}

pub fn evaluate(g: &Group, word: &[(usize, bool)]) -> GroupElement {
    let gens = g.generators();
    word.iter().fold(g.identity(), |acc, &(i, inv)| {
        let s = &gens[i % gens.len()];
        let s = if inv { g.inv(s).unwrap() } else { s.clone() };
        g.mul(&acc, &s).unwrap()
    })
}

/// A word as (generator index, inverted) letters, with a small integer coefficient.
pub type Term = (Vec<(usize, bool)>, i8, i8);

/// Terms (word, re, im) with small integer coefficients.
pub fn terms(max_len: usize) -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec((word(max_len), -4i8..=4, -4i8..=4), 1..=4)
}

pub fn element(g: &Group, terms: &[Term]) -> GroupAlgebraElement {
    GroupAlgebraElement::from_terms(
        g,
        terms
            .iter()
            .map(|(w, re, im)| (evaluate(g, w), Complex64::new(*re as f64, *im as f64))),
    )
    .unwrap()
}

pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| DMatrix::from_iterator(rows, cols, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

pub fn square() -> impl Strategy<Value = DMatrix<Complex64>> {
    (1usize..=8).prop_flat_map(|n| matrix(n, n))
}

pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn unitary(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.clone().qr().q()
}
