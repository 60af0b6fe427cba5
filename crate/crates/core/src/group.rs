//! Exact arithmetic for the finitely generated groups the workbench supports,
//! and enumeration of word-metric balls.
//!
//! Four families are available:
//!
//! * `Z^d`: integer lattices, normal form an integer `d`-tuple.
//! * `Fk`: free groups, normal form a freely reduced word.
//! * `H3`: the integer Heisenberg group of upper unitriangular 3x3 matrices,
//!   normal form the triple `(a, b, c)` standing for
//!   `[[1, a, c], [0, 1, b], [0, 0, 1]]`, so `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`.
//! * `Cn`, `Sn`: finite cyclic and symmetric groups, stored as full
//!   multiplication tables and addressed by canonical index.
//!
//! Within a word-metric layer, elements are ordered lexicographically on the
//! derived `Ord` of [`GroupElement`]: coordinate tuples compare
//! lexicographically, free words compare lexicographically on their signed
//! generator indices (`-2 < -1 < 1 < 2`, i.e. `B < A < a < b`), and finite group
//! elements compare by canonical index (residue for `Cn`, lexicographic rank of
//! the one-line notation for `Sn`).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest finite group for which a multiplication table is built.
pub const MAX_FINITE_ORDER: usize = 1024;

/// Default cap on the number of elements in an enumerated ball.
pub const DEFAULT_BALL_LIMIT: usize = 2_000_000;

/// Letters naming free generators, in generator order. `e`, `i`, `w` and `d`
/// are reserved by the element-expression grammar.
const FREE_LETTERS: &[u8] = b"abcfghjklmnopqrstuvxyz";

/// Normal form of a group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    /// Point of `Z^d`.
    Lattice(Vec<i64>),
    /// Reduced word over signed 1-based generator indices; `-i` is the inverse of `i`.
    Word(Vec<i32>),
    /// `(a, b, c)` in `H3(Z)`.
    Heisenberg([i64; 3]),
    /// Canonical index in a finite group; `0` is the identity.
    Finite(u32),
}

/// Group family and its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Lattice { rank: usize },
    Free { rank: usize },
    Heisenberg,
    Cyclic { order: usize },
    Symmetric { degree: usize },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Lattice { rank: 1 } => write!(f, "Z"),
            Family::Lattice { rank } => write!(f, "Z^{rank}"),
            Family::Free { rank } => write!(f, "F{rank}"),
            Family::Heisenberg => write!(f, "H3"),
            Family::Cyclic { order } => write!(f, "C{order}"),
            Family::Symmetric { degree } => write!(f, "S{degree}"),
        }
    }
}

#[derive(Debug)]
struct FiniteTable {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    /// One-line notation per index, only for symmetric groups.
    perms: Vec<Vec<u8>>,
    perm_index: HashMap<Vec<u8>, u32>,
}

impl FiniteTable {
    fn cyclic(order: usize) -> Self {
        let n = order as u32;
        let mut mul = Vec::with_capacity(order * order);
        for i in 0..n {
            for j in 0..n {
                mul.push((i + j) % n);
            }
        }
        let inv = (0..n).map(|i| (n - i) % n).collect();
        FiniteTable {
            order,
            mul,
            inv,
            perms: Vec::new(),
            perm_index: HashMap::new(),
        }
    }

    fn symmetric(degree: usize) -> Self {
        let mut perms = Vec::new();
        let mut current: Vec<u8> = (0..degree as u8).collect();
        loop {
            perms.push(current.clone());
            if !next_permutation(&mut current) {
                break;
            }
        }
        let order = perms.len();
        let perm_index: HashMap<Vec<u8>, u32> = perms
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        let mut mul = Vec::with_capacity(order * order);
        let mut composed = vec![0u8; degree];
        for g in &perms {
            for h in &perms {
                // (gh)(i) = g(h(i)): h acts first.
                for (i, slot) in composed.iter_mut().enumerate() {
                    *slot = g[h[i] as usize];
                }
                mul.push(perm_index[&composed]);
            }
        }
        let mut inv = vec![0u32; order];
        let mut inverse = vec![0u8; degree];
        for (idx, g) in perms.iter().enumerate() {
            for (i, &gi) in g.iter().enumerate() {
                inverse[gi as usize] = i as u8;
            }
            inv[idx] = perm_index[&inverse];
        }
        FiniteTable {
            order,
            mul,
            inv,
            perms,
            perm_index,
        }
    }
}

fn next_permutation(v: &mut [u8]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A finitely generated group together with its generating set.
///
/// Cheap to clone: the generating set and finite multiplication tables are shared.
#[derive(Clone, Debug)]
pub struct Group {
    family: Family,
    generators: Arc<[GroupElement]>,
    experimental: bool,
    table: Option<Arc<FiniteTable>>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.generators == other.generators
    }
}

impl Eq for Group {}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.family.fmt(f)
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::parse(s)
    }
}

impl Group {
    /// Builds a group with its standard symmetric generating set.
    pub fn new(family: Family) -> Result<Self> {
        let table = match family {
            Family::Lattice { rank } if rank == 0 || rank > 64 => {
                return Err(Error::BadDescriptor(format!("Z^{rank}")))
            }
            Family::Free { rank } if rank == 0 || rank > FREE_LETTERS.len() => {
                return Err(Error::BadDescriptor(format!("F{rank}")))
            }
            Family::Cyclic { order } => {
                if order == 0 || order > MAX_FINITE_ORDER {
                    return Err(Error::BadDescriptor(format!("C{order}")));
                }
                Some(Arc::new(FiniteTable::cyclic(order)))
            }
            Family::Symmetric { degree } => {
                // 6! = 720 is the largest factorial under MAX_FINITE_ORDER.
                if degree == 0 || degree > 6 {
                    return Err(Error::BadDescriptor(format!("S{degree}")));
                }
                Some(Arc::new(FiniteTable::symmetric(degree)))
            }
            _ => None,
        };
        let mut group = Group {
            family,
            generators: Arc::from(Vec::new()),
            experimental: false,
            table,
        };
        let gens = group.standard_generators();
        group.generators = Arc::from(group.close_under_inverse(gens)?);
        Ok(group)
    }

    /// Builds a group with a caller-chosen generating set. The set is closed
    /// under inversion and the group is flagged experimental.
    pub fn with_generators(family: Family, generators: Vec<GroupElement>) -> Result<Self> {
        let mut group = Group::new(family)?;
        for g in &generators {
            group.check(g)?;
        }
        group.generators = Arc::from(group.close_under_inverse(generators)?);
        group.experimental = true;
        Ok(group)
    }

    /// Parses `Z`, `Z^2`, `F2`, `H3`, `C12`, `S4` (an optional `_` after the
    /// family letter is accepted).
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::BadDescriptor(text.to_string());
        let t = text.trim();
        let mut chars = t.chars();
        let head = chars.next().ok_or_else(bad)?;
        let rest = chars.as_str();
        let rest = rest.strip_prefix('_').unwrap_or(rest);
        let number = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let family = match head.to_ascii_uppercase() {
            'Z' => {
                if rest.is_empty() {
                    Family::Lattice { rank: 1 }
                } else {
                    let r = rest.strip_prefix('^').unwrap_or(rest);
                    Family::Lattice { rank: number(r)? }
                }
            }
            'F' => Family::Free { rank: number(rest)? },
            'H' if rest == "3" => Family::Heisenberg,
            'C' => Family::Cyclic {
                order: number(rest)?,
            },
            'S' => Family::Symmetric {
                degree: number(rest)?,
            },
            _ => return Err(bad()),
        };
        Group::new(family).map_err(|_| bad())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    /// True when the generating set was supplied by the caller.
    pub fn is_experimental(&self) -> bool {
        self.experimental
    }

    /// Fixed by the family: only free groups of rank at least two are non-amenable.
    pub fn is_amenable(&self) -> bool {
        !matches!(self.family, Family::Free { rank } if rank >= 2)
    }

    pub fn is_finite(&self) -> bool {
        self.table.is_some()
    }

    pub fn order(&self) -> Option<usize> {
        self.table.as_ref().map(|t| t.order)
    }

    pub fn identity(&self) -> GroupElement {
        match self.family {
            Family::Lattice { rank } => GroupElement::Lattice(vec![0; rank]),
            Family::Free { .. } => GroupElement::Word(Vec::new()),
            Family::Heisenberg => GroupElement::Heisenberg([0; 3]),
            Family::Cyclic { .. } | Family::Symmetric { .. } => GroupElement::Finite(0),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    /// All elements of a finite group, in canonical order.
    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        self.order()
            .map(|n| (0..n as u32).map(GroupElement::Finite).collect())
    }

    /// Checks that `g` is a well-formed normal form for this group.
    pub fn check(&self, g: &GroupElement) -> Result<()> {
        let ok = match (self.family, g) {
            (Family::Lattice { rank }, GroupElement::Lattice(v)) => v.len() == rank,
            (Family::Free { rank }, GroupElement::Word(w)) => {
                w.iter()
                    .all(|&s| s != 0 && s.unsigned_abs() as usize <= rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (Family::Heisenberg, GroupElement::Heisenberg(_)) => true,
            (Family::Cyclic { .. } | Family::Symmetric { .. }, GroupElement::Finite(i)) => {
                (*i as usize) < self.order().unwrap_or(0)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ForeignElement {
                element: format!("{g:?}"),
                group: self.to_string(),
            })
        }
    }

    /// Group law; returns the normal form of `gh`.
    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        self.mul_unchecked(g, h)
    }

    /// Group law without membership checks, for elements already known to be valid.
    pub(crate) fn mul_unchecked(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        match (g, h) {
            (GroupElement::Lattice(x), GroupElement::Lattice(y)) => x
                .iter()
                .zip(y)
                .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow))
                .collect::<Result<Vec<_>>>()
                .map(GroupElement::Lattice),
            (GroupElement::Word(x), GroupElement::Word(y)) => {
                let mut w = x.clone();
                for &s in y {
                    if w.last() == Some(&-s) {
                        w.pop();
                    } else {
                        w.push(s);
                    }
                }
                Ok(GroupElement::Word(w))
            }
            (GroupElement::Heisenberg([a, b, c]), GroupElement::Heisenberg([a2, b2, c2])) => {
                let ov = || Error::Overflow;
                let cross = a.checked_mul(*b2).ok_or_else(ov)?;
                Ok(GroupElement::Heisenberg([
                    a.checked_add(*a2).ok_or_else(ov)?,
                    b.checked_add(*b2).ok_or_else(ov)?,
                    c.checked_add(*c2)
                        .and_then(|s| s.checked_add(cross))
                        .ok_or_else(ov)?,
                ]))
            }
            (GroupElement::Finite(i), GroupElement::Finite(j)) => {
                let t = self.table.as_ref().expect("finite element in infinite group");
                Ok(GroupElement::Finite(t.mul[*i as usize * t.order + *j as usize]))
            }
            _ => Err(Error::GroupMismatch {
                left: format!("{g:?}"),
                right: format!("{h:?}"),
            }),
        }
    }

    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.inv_unchecked(g)
    }

    pub(crate) fn inv_unchecked(&self, g: &GroupElement) -> Result<GroupElement> {
        Ok(match g {
            GroupElement::Lattice(v) => GroupElement::Lattice(
                v.iter()
                    .map(|a| a.checked_neg().ok_or(Error::Overflow))
                    .collect::<Result<_>>()?,
            ),
            GroupElement::Word(w) => GroupElement::Word(w.iter().rev().map(|s| -s).collect()),
            GroupElement::Heisenberg([a, b, c]) => {
                let ov = || Error::Overflow;
                GroupElement::Heisenberg([
                    a.checked_neg().ok_or_else(ov)?,
                    b.checked_neg().ok_or_else(ov)?,
                    a.checked_mul(*b)
                        .and_then(|ab| ab.checked_sub(*c))
                        .ok_or_else(ov)?,
                ])
            }
            GroupElement::Finite(i) => {
                let t = self.table.as_ref().expect("finite element in infinite group");
                GroupElement::Finite(t.inv[*i as usize])
            }
        })
    }

    /// `g^n` for any integer `n`, by repeated multiplication.
    pub fn pow(&self, g: &GroupElement, n: i64) -> Result<GroupElement> {
        let base = if n < 0 { self.inv(g)? } else { g.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.mul_unchecked(&acc, &base)?;
        }
        Ok(acc)
    }

    /// Word length of `g` with respect to the standard generators, where it has
    /// a closed form; `None` otherwise.
    pub fn word_length(&self, g: &GroupElement) -> Option<usize> {
        if self.experimental {
            return None;
        }
        match g {
            GroupElement::Lattice(v) => Some(v.iter().map(|a| a.unsigned_abs() as usize).sum()),
            GroupElement::Word(w) => Some(w.len()),
            _ => None,
        }
    }

    fn standard_generators(&self) -> Vec<GroupElement> {
        match self.family {
            Family::Lattice { rank } => (0..rank)
                .flat_map(|i| {
                    [1i64, -1].into_iter().map(move |s| {
                        let mut v = vec![0; rank];
                        v[i] = s;
                        GroupElement::Lattice(v)
                    })
                })
                .collect(),
            Family::Free { rank } => (1..=rank as i32)
                .flat_map(|i| [GroupElement::Word(vec![i]), GroupElement::Word(vec![-i])])
                .collect(),
            Family::Heisenberg => vec![
                GroupElement::Heisenberg([1, 0, 0]),
                GroupElement::Heisenberg([-1, 0, 0]),
                GroupElement::Heisenberg([0, 1, 0]),
                GroupElement::Heisenberg([0, -1, 0]),
            ],
            Family::Cyclic { order } => {
                if order == 1 {
                    Vec::new()
                } else {
                    vec![GroupElement::Finite(1)]
                }
            }
            Family::Symmetric { degree } => {
                let t = self.table.as_ref().expect("symmetric table");
                let mut gens = Vec::new();
                if degree >= 2 {
                    let mut swap: Vec<u8> = (0..degree as u8).collect();
                    swap.swap(0, 1);
                    gens.push(GroupElement::Finite(t.perm_index[&swap]));
                    let cycle: Vec<u8> = (0..degree as u8).map(|i| (i + 1) % degree as u8).collect();
                    gens.push(GroupElement::Finite(t.perm_index[&cycle]));
                }
                gens
            }
        }
    }

    fn close_under_inverse(&self, gens: Vec<GroupElement>) -> Result<Vec<GroupElement>> {
        let mut out: Vec<GroupElement> = Vec::new();
        for g in gens {
            let gi = self.inv_unchecked(&g)?;
            for x in [g, gi] {
                if !self.is_identity(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        Ok(out)
    }

    /// Renders the normal form as text.
    ///
    /// * lattice: `[x1,...,xd]`
    /// * free: `e` or runs `a^2B` (uppercase is the inverse generator)
    /// * Heisenberg: `[a,b,c]`
    /// * cyclic: `e`, `g`, `g^k`
    /// * symmetric: one-line notation `[p0,p1,...]` of images of `0..n`
    pub fn format_element(&self, g: &GroupElement) -> String {
        let tuple = |v: &[i64]| {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", parts.join(","))
        };
        match g {
            GroupElement::Lattice(v) => tuple(v),
            GroupElement::Heisenberg(v) => tuple(v),
            GroupElement::Word(w) => {
                if w.is_empty() {
                    return "e".into();
                }
                let mut out = String::new();
                let mut i = 0;
                while i < w.len() {
                    let mut j = i;
                    while j < w.len() && w[j] == w[i] {
                        j += 1;
                    }
                    let letter = FREE_LETTERS[w[i].unsigned_abs() as usize - 1] as char;
                    out.push(if w[i] > 0 {
                        letter
                    } else {
                        letter.to_ascii_uppercase()
                    });
                    if j - i > 1 {
                        out.push_str(&format!("^{}", j - i));
                    }
                    i = j;
                }
                out
            }
            GroupElement::Finite(i) => match self.family {
                Family::Symmetric { .. } => {
                    let t = self.table.as_ref().expect("symmetric table");
                    let parts: Vec<String> =
                        t.perms[*i as usize].iter().map(|x| x.to_string()).collect();
                    format!("[{}]", parts.join(","))
                }
                _ => match i {
                    0 => "e".into(),
                    1 => "g".into(),
                    k => format!("g^{k}"),
                },
            },
        }
    }

    /// Parses an element written either as a normal-form literal (see
    /// [`Group::format_element`]) or as a word in the family's generator
    /// letters with optional integer exponents (`x^-1`, `g2`, `aB^3`).
    ///
    /// Generator letters: free groups use `a, b, c, f, g, ...`; `H3` uses
    /// `x = [1,0,0]`, `y = [0,1,0]`, `z = [0,0,1]`; `Cn` uses `g`; `Sn` uses
    /// `s` (the transposition of 0 and 1) and `c` (the cycle `i -> i+1`).
    /// Uppercase letters denote inverses. For `Z`, a bare integer is accepted.
    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let t = text.trim();
        let err = |position: usize, message: &str| Error::Parse {
            input: t.to_string(),
            position,
            message: message.to_string(),
        };
        if t == "e" {
            return Ok(self.identity());
        }
        if t.starts_with('[') {
            let inner = t
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| err(0, "unterminated literal"))?;
            let nums: Vec<i64> = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|s| s.trim().parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(1, "expected integers"))?
            };
            let g = match self.family {
                Family::Lattice { .. } => GroupElement::Lattice(nums),
                Family::Heisenberg => {
                    if nums.len() != 3 {
                        return Err(err(0, "Heisenberg literal needs three integers"));
                    }
                    GroupElement::Heisenberg([nums[0], nums[1], nums[2]])
                }
                Family::Cyclic { order } => {
                    if nums.len() != 1 {
                        return Err(err(0, "cyclic literal needs one residue"));
                    }
                    GroupElement::Finite(nums[0].rem_euclid(order as i64) as u32)
                }
                Family::Symmetric { degree } => {
                    let perm: Vec<u8> = nums
                        .iter()
                        .map(|&x| u8::try_from(x).map_err(|_| err(1, "bad image")))
                        .collect::<Result<_>>()?;
                    if perm.len() != degree {
                        return Err(err(0, "permutation has wrong degree"));
                    }
                    let t = self.table.as_ref().expect("symmetric table");
                    GroupElement::Finite(
                        *t.perm_index
                            .get(&perm)
                            .ok_or_else(|| err(0, "not a permutation"))?,
                    )
                }
                Family::Free { .. } => return Err(err(0, "free group elements are words")),
            };
            self.check(&g)?;
            return Ok(g);
        }
        if let Family::Lattice { rank: 1 } = self.family {
            if let Ok(n) = t.parse::<i64>() {
                return Ok(GroupElement::Lattice(vec![n]));
            }
        }
        self.parse_word(t)
    }

    fn generator_for_letter(&self, letter: char) -> Option<GroupElement> {
        let lower = letter.to_ascii_lowercase();
        let base = match self.family {
            Family::Free { rank } => {
                let pos = FREE_LETTERS.iter().position(|&c| c as char == lower)?;
                (pos < rank).then(|| GroupElement::Word(vec![pos as i32 + 1]))?
            }
            Family::Heisenberg => match lower {
                'x' => GroupElement::Heisenberg([1, 0, 0]),
                'y' => GroupElement::Heisenberg([0, 1, 0]),
                'z' => GroupElement::Heisenberg([0, 0, 1]),
                _ => return None,
            },
            Family::Cyclic { order } if lower == 'g' => GroupElement::Finite(1 % order as u32),
            Family::Symmetric { degree } => {
                let t = self.table.as_ref()?;
                let perm: Vec<u8> = match lower {
                    's' => {
                        let mut p: Vec<u8> = (0..degree as u8).collect();
                        if degree >= 2 {
                            p.swap(0, 1);
                        }
                        p
                    }
                    'c' => (0..degree as u8).map(|i| (i + 1) % degree as u8).collect(),
                    _ => return None,
                };
                GroupElement::Finite(t.perm_index[&perm])
            }
            _ => return None,
        };
        if letter.is_ascii_uppercase() {
            self.inv_unchecked(&base).ok()
        } else {
            Some(base)
        }
    }

    fn parse_word(&self, t: &str) -> Result<GroupElement> {
        let err = |position: usize, message: &str| Error::Parse {
            input: t.to_string(),
            position,
            message: message.to_string(),
        };
        let bytes = t.as_bytes();
        let mut acc = self.identity();
        let mut i = 0;
        if bytes.is_empty() {
            return Err(err(0, "empty word"));
        }
        while i < bytes.len() {
            let c = bytes[i] as char;
            let gen = self
                .generator_for_letter(c)
                .ok_or_else(|| err(i, "unknown generator letter"))?;
            i += 1;
            let mut exponent: i64 = 1;
            let start = i;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
            }
            let num_start = i;
            if i < bytes.len() && bytes[i] == b'-' {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i > num_start {
                exponent = t[num_start..i]
                    .parse()
                    .map_err(|_| err(start, "bad exponent"))?;
            } else if i > start {
                return Err(err(start, "missing exponent after '^'"));
            }
            let power = self.pow(&gen, exponent)?;
            acc = self.mul_unchecked(&acc, &power)?;
        }
        Ok(acc)
    }

    /// Enumerates the word-metric ball of radius `radius`.
    pub fn ball(&self, radius: usize) -> Result<BallIndex> {
        self.ball_with_limit(radius, DEFAULT_BALL_LIMIT)
    }

    pub fn ball_with_limit(&self, radius: usize, limit: usize) -> Result<BallIndex> {
        BallIndex::build(self, radius, limit)
    }
}

/// Ordered enumeration of a word-metric ball with element/index lookup.
///
/// Elements are listed in breadth-first layers, each layer sorted by normal
/// form, so the ball of radius `r` is a prefix of the ball of radius `r + 1`.
/// The identity sits at index 0.
#[derive(Clone, Debug)]
pub struct BallIndex {
    group: Group,
    radius: usize,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    /// `layer_ends[k]` is the number of elements of word length at most `k`.
    layer_ends: Vec<usize>,
}

impl BallIndex {
    fn build(group: &Group, radius: usize, limit: usize) -> Result<Self> {
        let identity = group.identity();
        let mut elements = vec![identity.clone()];
        let mut index = HashMap::new();
        index.insert(identity, 0usize);
        let mut layer_ends = vec![1];
        let mut frontier = 0..1;
        for r in 1..=radius {
            let mut next = BTreeSet::new();
            for g in &elements[frontier.clone()] {
                for s in group.generators() {
                    let h = group.mul_unchecked(g, s)?;
                    if !index.contains_key(&h) {
                        next.insert(h);
                    }
                }
            }
            if elements.len() + next.len() > limit {
                return Err(Error::BallTooLarge { radius: r, limit });
            }
            let start = elements.len();
            for h in next {
                index.insert(h.clone(), elements.len());
                elements.push(h);
            }
            frontier = start..elements.len();
            layer_ends.push(elements.len());
        }
        Ok(BallIndex {
            group: group.clone(),
            radius,
            elements,
            index,
            layer_ends,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    /// Number of elements of word length at most `r` (clamped to the radius).
    pub fn prefix_len(&self, r: usize) -> usize {
        self.layer_ends[r.min(self.radius)]
    }

    /// Sizes of the spheres of radius `0..=radius`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut prev = 0;
        self.layer_ends
            .iter()
            .map(|&e| {
                let s = e - prev;
                prev = e;
                s
            })
            .collect()
    }

    /// Word length of the element at index `i`.
    pub fn layer_of(&self, i: usize) -> usize {
        self.layer_ends.partition_point(|&end| end <= i)
    }

    /// The ball of radius `r <= self.radius()`, taken as a prefix.
    pub fn prefix(&self, r: usize) -> BallIndex {
        let r = r.min(self.radius);
        let n = self.prefix_len(r);
        let elements = self.elements[..n].to_vec();
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        BallIndex {
            group: self.group.clone(),
            radius: r,
            elements,
            index,
            layer_ends: self.layer_ends[..=r].to_vec(),
        }
    }

    /// Word length of `g` if it lies in the ball.
    pub fn word_length(&self, g: &GroupElement) -> Option<usize> {
        self.index_of(g).map(|i| self.layer_of(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[i32]) -> GroupElement {
        GroupElement::Word(v.to_vec())
    }

    #[test]
    fn free_cancellation() {
        let f2 = Group::parse("F2").unwrap();
        // (x y^-1)(y x) = x^2
        assert_eq!(f2.mul(&w(&[1, -2]), &w(&[2, 1])).unwrap(), w(&[1, 1]));
        assert_eq!(f2.inv(&w(&[1, 2, -1])).unwrap(), w(&[1, -2, -1]));
    }

    #[test]
    fn heisenberg_products() {
        let h = Group::parse("H3").unwrap();
        let x = GroupElement::Heisenberg([1, 0, 0]);
        let y = GroupElement::Heisenberg([0, 1, 0]);
        assert_eq!(h.mul(&x, &y).unwrap(), GroupElement::Heisenberg([1, 1, 1]));
        assert_eq!(h.mul(&y, &x).unwrap(), GroupElement::Heisenberg([1, 1, 0]));
        assert_eq!(
            h.inv(&GroupElement::Heisenberg([2, 3, 5])).unwrap(),
            GroupElement::Heisenberg([-2, -3, 1])
        );
    }

    #[test]
    fn lattice_inverse_pair() {
        let z2 = Group::parse("Z^2").unwrap();
        let g = GroupElement::Lattice(vec![2, -1]);
        let h = GroupElement::Lattice(vec![-2, 1]);
        assert_eq!(z2.mul(&g, &h).unwrap(), z2.identity());
    }

    #[test]
    fn overflow_is_an_error() {
        let h = Group::parse("H3").unwrap();
        let big = GroupElement::Heisenberg([i64::MAX, 0, 0]);
        let y = GroupElement::Heisenberg([0, 2, 0]);
        assert_eq!(h.mul(&big, &y), Err(Error::Overflow));
        let z = Group::parse("Z").unwrap();
        assert_eq!(
            z.mul(&GroupElement::Lattice(vec![i64::MAX]), &GroupElement::Lattice(vec![1])),
            Err(Error::Overflow)
        );
    }

    #[test]
    fn mixed_operands_rejected() {
        let f2 = Group::parse("F2").unwrap();
        assert!(f2
            .mul(&w(&[1]), &GroupElement::Heisenberg([0, 0, 0]))
            .is_err());
        assert!(f2.mul(&w(&[3]), &w(&[1])).is_err());
        assert!(f2.check(&w(&[1, -1])).is_err());
    }

    #[test]
    fn ball_sizes() {
        let f2 = Group::parse("F2").unwrap();
        let sizes: Vec<usize> = (0..4).map(|r| f2.ball(r).unwrap().len()).collect();
        assert_eq!(sizes, vec![1, 5, 17, 53]);
        let z = Group::parse("Z").unwrap();
        for r in 0..6 {
            assert_eq!(z.ball(r).unwrap().len(), 2 * r + 1);
        }
        assert_eq!(Group::parse("H3").unwrap().ball(1).unwrap().len(), 5);
    }

    #[test]
    fn ball_limit() {
        let f2 = Group::parse("F2").unwrap();
        assert_eq!(
            f2.ball_with_limit(3, 20).unwrap_err(),
            Error::BallTooLarge { radius: 3, limit: 20 }
        );
    }

    #[test]
    fn finite_ball_saturates() {
        let s3 = Group::parse("S3").unwrap();
        let b = s3.ball(10).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.element(0), &GroupElement::Finite(0));
        let c4 = Group::parse("C4").unwrap();
        assert_eq!(c4.ball(2).unwrap().len(), 4);
    }

    #[test]
    fn amenability_is_fixed_by_family() {
        assert!(Group::parse("Z^3").unwrap().is_amenable());
        assert!(Group::parse("H3").unwrap().is_amenable());
        assert!(Group::parse("S4").unwrap().is_amenable());
        assert!(Group::parse("F1").unwrap().is_amenable());
        assert!(!Group::parse("F2").unwrap().is_amenable());
    }

    #[test]
    fn descriptor_parsing() {
        for (text, fam) in [
            ("Z", Family::Lattice { rank: 1 }),
            ("Z^2", Family::Lattice { rank: 2 }),
            ("F2", Family::Free { rank: 2 }),
            ("F_3", Family::Free { rank: 3 }),
            ("H3", Family::Heisenberg),
            ("C12", Family::Cyclic { order: 12 }),
            ("S4", Family::Symmetric { degree: 4 }),
        ] {
            let g = Group::parse(text).unwrap();
            assert_eq!(g.family(), fam);
            assert_eq!(Group::parse(&g.to_string()).unwrap(), g);
        }
        for bad in ["", "Q3", "F0", "S9", "C0", "H4", "Z^x"] {
            assert!(Group::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn element_text_round_trip() {
        for (desc, words) in [
            ("F2", vec!["e", "a", "aB^2", "b^-3a"]),
            ("H3", vec!["e", "x", "xy", "XYxy", "[1,-2,7]"]),
            ("C12", vec!["e", "g", "g5", "G"]),
            ("S4", vec!["e", "s", "c", "sc", "C^2"]),
            ("Z^2", vec!["[3,-4]"]),
            ("Z", vec!["-3", "[5]"]),
        ] {
            let g = Group::parse(desc).unwrap();
            for text in words {
                let el = g.parse_element(text).unwrap();
                let printed = g.format_element(&el);
                assert_eq!(g.parse_element(&printed).unwrap(), el, "{desc} {text}");
            }
        }
        let h = Group::parse("H3").unwrap();
        // x y X Y is the commutator, central (0,0,1)
        assert_eq!(
            h.parse_element("xyXY").unwrap(),
            GroupElement::Heisenberg([0, 0, 1])
        );
        let c12 = Group::parse("C12").unwrap();
        assert_eq!(c12.parse_element("G").unwrap(), GroupElement::Finite(11));
        assert!(c12.parse_element("q").is_err());
    }

    #[test]
    fn custom_generators_are_closed_and_flagged() {
        let z = Group::with_generators(
            Family::Lattice { rank: 1 },
            vec![GroupElement::Lattice(vec![2]), GroupElement::Lattice(vec![3])],
        )
        .unwrap();
        assert!(z.is_experimental());
        assert_eq!(z.generators().len(), 4);
        assert_eq!(z.ball(1).unwrap().len(), 5);
    }
}
