//! The group algebra: finitely supported complex functions on a group with
//! convolution, involution and flip.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::group::{Group, GroupElement};

/// Coefficients with modulus below this are dropped after float arithmetic.
pub const FLOAT_DROP_THRESHOLD: f64 = 1e-15;

/// Gaussian rationals, used for bit-exact identity checks.
pub type GaussianRational = Complex<BigRational>;

/// Scalar field of the group algebra.
pub trait Coefficient:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn conjugate(&self) -> Self;
    /// True if the value should not be stored in a canonical sparse form.
    fn is_negligible(&self) -> bool;
    fn to_c64(&self) -> Complex64;
}

impl Coefficient for Complex64 {
    fn conjugate(&self) -> Self {
        self.conj()
    }

    fn is_negligible(&self) -> bool {
        self.norm() < FLOAT_DROP_THRESHOLD
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl Coefficient for GaussianRational {
    fn conjugate(&self) -> Self {
        self.conj()
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn to_c64(&self) -> Complex64 {
        use num_traits::ToPrimitive;
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Gaussian rational `(re_num/den) + i (im_num/den)`.
pub fn gaussian(re_num: i64, im_num: i64, den: i64) -> GaussianRational {
    let d = BigInt::from(den);
    Complex::new(
        BigRational::new(BigInt::from(re_num), d.clone()),
        BigRational::new(BigInt::from(im_num), d),
    )
}

/// Exact conversion of a double-precision complex number (every finite double is dyadic).
pub fn exact_from_c64(z: Complex64) -> Option<GaussianRational> {
    Some(Complex::new(
        BigRational::from_float(z.re)?,
        BigRational::from_float(z.im)?,
    ))
}

/// A finitely supported function `Group -> C`, stored without zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlgebraElement<C: Coefficient = Complex64> {
    group: Group,
    terms: BTreeMap<GroupElement, C>,
}

impl<C: Coefficient> GroupAlgebraElement<C> {
    pub fn zero(group: &Group) -> Self {
        GroupAlgebraElement {
            group: group.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// The point mass at `g`.
    pub fn delta(group: &Group, g: GroupElement) -> Result<Self> {
        group.check(&g)?;
        let mut terms = BTreeMap::new();
        terms.insert(g, C::one());
        Ok(GroupAlgebraElement {
            group: group.clone(),
            terms,
        })
    }

    pub fn identity(group: &Group) -> Self {
        Self::delta(group, group.identity()).expect("identity is valid")
    }

    /// Sums the given terms; repeated elements accumulate.
    pub fn from_terms<I>(group: &Group, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, C)>,
    {
        let mut map: BTreeMap<GroupElement, C> = BTreeMap::new();
        for (g, c) in terms {
            group.check(&g)?;
            let entry = map.entry(g).or_insert_with(C::zero);
            *entry = entry.clone() + c;
        }
        map.retain(|_, c| !c.is_negligible());
        Ok(GroupAlgebraElement {
            group: group.clone(),
            terms: map,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, &C)> {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.keys()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient at `g` (zero off the support).
    pub fn coeff(&self, g: &GroupElement) -> C {
        self.terms.get(g).cloned().unwrap_or_else(C::zero)
    }

    fn same_group(&self, other: &Self) -> Result<()> {
        if self.group.family() == other.group.family() {
            Ok(())
        } else {
            Err(Error::GroupMismatch {
                left: self.group.to_string(),
                right: other.group.to_string(),
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        Self::from_terms(
            &self.group,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(g, c)| (g.clone(), c.clone())),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-C::one()))
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut terms = BTreeMap::new();
        for (g, a) in &self.terms {
            let v = a.clone() * c.clone();
            if !v.is_negligible() {
                terms.insert(g.clone(), v);
            }
        }
        GroupAlgebraElement {
            group: self.group.clone(),
            terms,
        }
    }

    /// Convolution `(a*b)(h) = sum_g a(g) b(g^-1 h)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let mut acc: BTreeMap<GroupElement, C> = BTreeMap::new();
        for (g, a) in &self.terms {
            for (k, b) in &other.terms {
                let h = self.group.mul_unchecked(g, k)?;
                let entry = acc.entry(h).or_insert_with(C::zero);
                *entry = entry.clone() + a.clone() * b.clone();
            }
        }
        acc.retain(|_, c| !c.is_negligible());
        Ok(GroupAlgebraElement {
            group: self.group.clone(),
            terms: acc,
        })
    }

    /// Involution `a*(g) = conj(a(g^-1))`.
    pub fn star(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(g, c)| {
                (
                    self.group.inv_unchecked(g).expect("inverse of a valid element"),
                    c.conjugate(),
                )
            })
            .collect();
        GroupAlgebraElement {
            group: self.group.clone(),
            terms,
        }
    }

    /// Flip `(t a)(h) = a(h^-1)`.
    pub fn flip(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(g, c)| {
                (
                    self.group.inv_unchecked(g).expect("inverse of a valid element"),
                    c.clone(),
                )
            })
            .collect();
        GroupAlgebraElement {
            group: self.group.clone(),
            terms,
        }
    }

    /// `p`-norm of the coefficient multiset.
    pub fn lp_coeff_norm(&self, p: Exponent) -> f64 {
        p.norm(self.terms.values().map(|c| c.to_c64().norm()))
    }

    /// Smallest radius whose ball contains the support.
    pub fn support_radius(&self) -> Result<usize> {
        let mut best = 0;
        let mut unknown = Vec::new();
        for g in self.terms.keys() {
            match self.group.word_length(g) {
                Some(l) => best = best.max(l),
                None => unknown.push(g),
            }
        }
        if unknown.is_empty() {
            return Ok(best);
        }
        // Grow balls until every remaining support element is found.
        let mut r = best;
        loop {
            let ball = self.group.ball(r)?;
            if unknown.iter().all(|g| ball.contains(g)) {
                return Ok(r);
            }
            if self.group.is_finite() && ball.len() == self.group.order().unwrap_or(0) {
                return Ok(r);
            }
            r += 1;
        }
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> GroupAlgebraElement<D> {
        let terms = self
            .terms
            .iter()
            .map(|(g, c)| (g.clone(), f(c)))
            .filter(|(_, c)| !c.is_negligible())
            .collect();
        GroupAlgebraElement {
            group: self.group.clone(),
            terms,
        }
    }

    pub fn to_c64(&self) -> GroupAlgebraElement<Complex64> {
        self.map_coefficients(|c| c.to_c64())
    }

    /// Serializable list of `{element, re, im}` entries in normal-form order.
    pub fn to_json_terms(&self) -> Vec<ElementTerm> {
        self.terms
            .iter()
            .map(|(g, c)| {
                let z = c.to_c64();
                ElementTerm {
                    element: self.group.format_element(g),
                    re: z.re,
                    im: z.im,
                }
            })
            .collect()
    }
}

impl GroupAlgebraElement<Complex64> {
    pub fn from_json_terms(group: &Group, terms: &[ElementTerm]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|t| Ok((group.parse_element(&t.element)?, Complex64::new(t.re, t.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(group, parsed)
    }

    /// Exact copy with Gaussian-rational coefficients.
    pub fn to_exact(&self) -> Result<GroupAlgebraElement<GaussianRational>> {
        let terms = self
            .terms
            .iter()
            .map(|(g, c)| {
                exact_from_c64(*c)
                    .map(|e| (g.clone(), e))
                    .ok_or_else(|| Error::Invalid("non-finite coefficient".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupAlgebraElement::from_terms(&self.group, terms)
    }
}

/// One entry of the JSON form of an element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementTerm {
    pub element: String,
    pub re: f64,
    pub im: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn z() -> Group {
        Group::parse("Z").unwrap()
    }

    fn d(g: &Group, text: &str) -> GroupAlgebraElement {
        GroupAlgebraElement::delta(g, g.parse_element(text).unwrap()).unwrap()
    }

    #[test]
    fn path_counting_square() {
        let g = z();
        let a = d(&g, "1").add(&d(&g, "-1")).unwrap();
        let sq = a.convolve(&a).unwrap();
        assert_eq!(sq.coeff(&g.parse_element("2").unwrap()), Complex64::new(1.0, 0.0));
        assert_eq!(sq.coeff(&g.parse_element("0").unwrap()), Complex64::new(2.0, 0.0));
        assert_eq!(sq.coeff(&g.parse_element("-2").unwrap()), Complex64::new(1.0, 0.0));
        assert_eq!(sq.support_len(), 3);
    }

    #[test]
    fn inverse_pair_cancels_to_identity() {
        let f2 = Group::parse("F2").unwrap();
        let p = d(&f2, "a").convolve(&d(&f2, "A")).unwrap();
        assert_eq!(p, GroupAlgebraElement::identity(&f2));
    }

    #[test]
    fn star_examples() {
        let f2 = Group::parse("F2").unwrap();
        let a = d(&f2, "a").scale(&Complex64::i());
        let s = a.star();
        assert_eq!(s.coeff(&f2.parse_element("A").unwrap()), -Complex64::i());
        let g = z();
        let sym = d(&g, "1").add(&d(&g, "-1")).unwrap();
        assert_eq!(sym.star(), sym);

        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let x = GroupAlgebraElement::from_terms(
            &f2,
            [
                (f2.identity(), Complex64::new(1.0, 0.0)),
                (f2.parse_element("a").unwrap(), w),
                (f2.parse_element("b").unwrap(), w.conj()),
            ],
        )
        .unwrap();
        let xs = x.star();
        assert_eq!(xs.coeff(&f2.parse_element("A").unwrap()), w.conj());
        assert_eq!(xs.coeff(&f2.parse_element("B").unwrap()), w);
        assert!((x.lp_coeff_norm(Exponent::ONE) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn norms_of_deltas() {
        let f2 = Group::parse("F2").unwrap();
        let e = GroupAlgebraElement::<Complex64>::identity(&f2);
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert_eq!(e.lp_coeff_norm(Exponent::new(p).unwrap()), 1.0);
        }
        assert_eq!(e.lp_coeff_norm(Exponent::INFINITY), 1.0);
        let two = d(&f2, "a").add(&d(&f2, "b")).unwrap();
        assert!((two.lp_coeff_norm(Exponent::TWO) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cancellation_drops_terms() {
        let g = z();
        let a = d(&g, "1");
        assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn mixed_groups_rejected() {
        let a = d(&z(), "1");
        let b = d(&Group::parse("F2").unwrap(), "a");
        assert!(matches!(a.convolve(&b), Err(Error::GroupMismatch { .. })));
    }

    #[test]
    fn json_round_trip() {
        let h = Group::parse("H3").unwrap();
        let a = GroupAlgebraElement::from_terms(
            &h,
            [
                (h.parse_element("xy").unwrap(), Complex64::new(0.5, -2.0)),
                (h.identity(), Complex64::new(3.0, 0.0)),
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&a.to_json_terms()).unwrap();
        let back: Vec<ElementTerm> = serde_json::from_str(&json).unwrap();
        assert_eq!(GroupAlgebraElement::from_json_terms(&h, &back).unwrap(), a);
    }

    #[test]
    fn support_radius_in_heisenberg() {
        let h = Group::parse("H3").unwrap();
        // the central generator [0,0,1] = xyXY has word length 4
        assert_eq!(d(&h, "z").support_radius().unwrap(), 4);
        assert_eq!(d(&h, "xy").support_radius().unwrap(), 2);
    }

    #[test]
    fn exact_mode_is_bit_exact() {
        let f2 = Group::parse("F2").unwrap();
        let a = GroupAlgebraElement::from_terms(
            &f2,
            [
                (f2.parse_element("a").unwrap(), gaussian(1, 2, 3)),
                (f2.parse_element("bA").unwrap(), gaussian(-5, 1, 7)),
            ],
        )
        .unwrap();
        let b = a.star().convolve(&a).unwrap();
        // a* a is self-adjoint
        assert_eq!(b.star(), b);
    }
}
