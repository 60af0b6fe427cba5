//! Experiment drivers: approximate-kernel sequences, the Willis element on a
//! free group, Herz majorization, finite-group surjunctivity and the
//! exploratory Heisenberg sweeps.

use std::ops::Div;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Coefficient, ElementTerm, GroupAlgebraElement};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::expr::{omega, parse_element_expr};
use crate::group::{Family, Group};
use crate::lp::LpBackend;
use crate::operator::{
    assemble, assemble_extended, injectivity_modulus_est, opnorm_est, range_distance_l1_with,
    ModulusMethod, RangeOptions, Side, DENSE_LIMIT,
};
use crate::spectral::{eig_herm, func_calc, singular_values, CLAMP_BELOW};

/// LP tolerance used by the plateau rule.
pub const LP_TOLERANCE: f64 = 1e-9;
/// Largest relative spread `(max - min) / max` of the last three distances
/// that still counts as a plateau.
pub const PLATEAU_SPREAD: f64 = 0.05;
pub const EVIDENCE_ONLY: &str = "evidence only, no theorem";
pub const OUTSIDE_SCOPE: &str = "outside proposition scope";
/// Largest ball on which the approximate-kernel experiment diagonalizes.
pub const APPROX_KERNEL_LIMIT: usize = 2500;

/// A named invariant and whether it held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariant {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Invariant {
    pub fn new(name: impl Into<String>, holds: bool) -> Self {
        Invariant {
            name: name.into(),
            holds,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Result of one probe run, serializable as one JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub group: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub element: Vec<ElementTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    pub radii: Vec<usize>,
    pub data: serde_json::Value,
    pub invariants: Vec<Invariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, element: &GroupAlgebraElement) -> Self {
        ExperimentRecord {
            experiment: experiment.to_string(),
            group: element.group().to_string(),
            label: None,
            element: element.to_json_terms(),
            p: None,
            radii: Vec::new(),
            data: serde_json::Value::Null,
            invariants: Vec::new(),
            note: None,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.invariants.iter().all(|i| i.holds)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.invariants
            .iter()
            .filter(|i| !i.holds)
            .map(|i| i.name.as_str())
            .collect()
    }

    pub fn to_json_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Invalid(e.to_string()))
    }
}

/// One `n` of the sequence `y_n = f_n(a* a)`, `f_n(t) = 1 / (1 + n sqrt t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxKernelRecord {
    pub n: usize,
    pub radius: usize,
    /// `max |f_n(lambda)|` over the truncated spectrum, i.e. `||y_n||_2`.
    pub ynorm: f64,
    /// `||L_a y_n||_2 / ||y_n||_2` as operators.
    pub ratio: f64,
    /// `||L_a y_n delta_e||_2 / ||y_n delta_e||_2`.
    pub column_ratio: f64,
    /// `max_lambda sqrt(lambda) f_n(lambda)`.
    pub certified_sup: f64,
    /// `1 / (1 + n)`.
    pub bound: f64,
    /// `sqrt(lambda) f_n(lambda) <= 1/(1+n)` for every truncated eigenvalue,
    /// up to a relative rounding slack of `1e-12`.
    pub certified: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// The element was divided by this before the run.
    pub scale: f64,
}

/// Relative slack for eigenvalues that land a few ulps above one after scaling.
const CERTIFY_ROUNDING: f64 = 1e-12;

fn f_n(n: usize, t: f64) -> f64 {
    1.0 / (1.0 + n as f64 * t.sqrt())
}

fn clamp(l: f64) -> f64 {
    if l < CLAMP_BELOW {
        0.0
    } else {
        l
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dense_sigma_max(m: &DMatrix<Complex64>) -> f64 {
    if m.ncols() <= DENSE_LIMIT {
        return singular_values(m).first().copied().unwrap_or(0.0);
    }
    let n = m.ncols();
    let mut x = nalgebra::DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut est = 0.0;
    for _ in 0..10_000 {
        let y = m * &x;
        let next = y.norm();
        let z = m.adjoint() * y;
        let nz = z.norm();
        if nz == 0.0 {
            return next;
        }
        x = z / Complex64::new(nz, 0.0);
        if (next - est).abs() <= 1e-12 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Approximate-kernel sequence on the ball of radius `r`.
///
/// `M` is the compression of `a* a` to `B_r`, equal to `E* E` for the
/// extended operator `E: l2(B_r) -> l2(B_{r+s})`. If the certified upper
/// bound for `||E||_2` exceeds one, `a` is divided by it so that the spectrum
/// of `M` lies in `[0, 1]`.
pub fn approx_kernel_sequence(a: &GroupAlgebraElement, ns: &[usize], r: usize) -> Result<Vec<ApproxKernelRecord>> {
    let extended = assemble_extended(a, r)?;
    let n_cols = extended.matrix().cols();
    if n_cols > APPROX_KERNEL_LIMIT {
        return Err(Error::TooLarge(n_cols));
    }
    let upper = opnorm_est(&extended, Exponent::TWO)?.upper;
    let scale = if upper > 1.0 { upper } else { 1.0 };
    let a = a.scale(&Complex64::new(1.0 / scale, 0.0));
    let extended = assemble_extended(&a, r)?;
    let e = extended.matrix();
    let positive = a.star().convolve(&a)?;
    let ball = extended.col_ball().clone();
    let m = assemble(&positive, &ball, Side::Left)?.matrix().to_dense();
    let d = eig_herm(&m)?;
    let lambda_min = clamp(d.min_eigenvalue());
    let lambda_max = d.max_eigenvalue();

    let mut records = Vec::with_capacity(ns.len());
    for &n in ns {
        let bound = 1.0 / (1.0 + n as f64);
        let mut certified = true;
        let mut certified_sup: f64 = 0.0;
        let mut ynorm: f64 = 0.0;
        for &l in d.eigenvalues() {
            let l = clamp(l);
            let v = l.sqrt() * f_n(n, l);
            certified_sup = certified_sup.max(v);
            certified &= v <= bound * (1.0 + CERTIFY_ROUNDING);
            ynorm = ynorm.max(f_n(n, l));
        }
        let f = move |t: f64| f_n(n, clamp(t));
        let y = func_calc(&d, &f)?;
        let mut ey = DMatrix::<Complex64>::zeros(e.rows(), n_cols);
        for j in 0..n_cols {
            let col: Vec<Complex64> = y.column(j).iter().copied().collect();
            let image = e.apply(&col);
            ey.column_mut(j).copy_from_slice(&image);
        }
        let ratio = dense_sigma_max(&ey) / ynorm;
        let e0: Vec<Complex64> = y.column(ball.identity_index()).iter().copied().collect();
        let column_ratio = l2(&e.apply(&e0)) / l2(&e0);
        records.push(ApproxKernelRecord {
            n,
            radius: r,
            ynorm,
            ratio,
            column_ratio,
            certified_sup,
            bound,
            certified,
            lambda_min,
            lambda_max,
            scale,
        });
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub restarts: usize,
    pub seed: u64,
    pub backend: LpBackend,
    /// Relative stopping tolerance of the LP refinement.
    pub rel_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            restarts: 4,
            seed: 0,
            backend: LpBackend::Auto,
            rel_tol: LP_TOLERANCE,
        }
    }
}

/// Range distance to `delta_e` and injectivity modulus at one radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub radius: usize,
    pub columns: usize,
    pub rows: usize,
    pub distance: f64,
    pub lower_bound: f64,
    pub duality_gap: Option<f64>,
    pub argmin_norm: f64,
    pub modulus: f64,
    pub modulus_method: ModulusMethod,
}

/// `dist_1(delta_e, L_a l1(B_r))` and the `l_p` modulus of `L_a` on
/// `l_p(B_r)`, for each radius in increasing order. The optimum of each
/// radius is offered as a starting candidate to the next.
pub fn range_modulus_sweep(
    a: &GroupAlgebraElement,
    p: Exponent,
    radii: &[usize],
    options: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    let mut radii = radii.to_vec();
    radii.sort_unstable();
    radii.dedup();
    let mut records = Vec::with_capacity(radii.len());
    let mut previous: Option<Vec<Complex64>> = None;
    for r in radii {
        let op = assemble_extended(a, r)?;
        let t = op.matrix();
        let mut target = vec![Complex64::new(0.0, 0.0); t.rows()];
        target[op.row_ball().identity_index()] = Complex64::new(1.0, 0.0);
        let warm_start = previous.take().map(|mut xi| {
            xi.resize(t.cols(), Complex64::new(0.0, 0.0));
            xi
        });
        let range = range_distance_l1_with(
            &op,
            &target,
            &RangeOptions {
                backend: options.backend,
                rel_tol: options.rel_tol,
                warm_start,
                ..RangeOptions::default()
            },
        )?;
        let modulus = injectivity_modulus_est(&op, p, options.restarts, options.seed)?;
        records.push(SweepRecord {
            radius: r,
            columns: t.cols(),
            rows: t.rows(),
            distance: range.distance,
            lower_bound: range.lower_bound,
            duality_gap: range.duality_gap,
            argmin_norm: range.argmin_norm,
            modulus: modulus.value,
            modulus_method: modulus.method,
        });
        previous = Some(range.argmin);
    }
    Ok(records)
}

/// Last three distances within [`PLATEAU_SPREAD`] relative spread and all
/// above `10 * LP_TOLERANCE`.
pub fn is_plateau(distances: &[f64]) -> bool {
    if distances.len() < 3 {
        return false;
    }
    let tail = &distances[distances.len() - 3..];
    let max = tail.iter().copied().fold(f64::MIN, f64::max);
    let min = tail.iter().copied().fold(f64::MAX, f64::min);
    min > 10.0 * LP_TOLERANCE && (max - min) <= PLATEAU_SPREAD * max
}

/// Nonincreasing up to `tol`.
pub fn is_nonincreasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WillisRecord {
    pub t_a: [f64; 2],
    pub t_b: [f64; 2],
    pub p: Exponent,
    pub radius: usize,
    pub distance: f64,
    pub lower_bound: f64,
    pub duality_gap: Option<f64>,
    pub argmin_norm: f64,
    pub modulus: f64,
    pub modulus_method: ModulusMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WillisRun {
    pub records: Vec<WillisRecord>,
    /// `|1 + t_a + t_b|`.
    pub balance: f64,
    pub monotone: bool,
    pub plateau: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
}

/// `delta_e + t_a delta_a + t_b delta_b` for the first two free generators.
pub fn willis_element(group: &Group, t_a: Complex64, t_b: Complex64) -> Result<GroupAlgebraElement> {
    match group.family() {
        Family::Free { rank } if rank >= 2 => {}
        other => {
            return Err(Error::Hypothesis(format!(
                "the Willis element needs a free group of rank at least 2, got {other}"
            )))
        }
    }
    for t in [t_a, t_b] {
        if (t.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Hypothesis(format!("|t| = {} is not 1", t.norm())));
        }
    }
    let a = group.generators()[0].clone();
    let b = group.parse_element("b")?;
    GroupAlgebraElement::from_terms(
        group,
        [(group.identity(), Complex64::new(1.0, 0.0)), (a, t_a), (b, t_b)],
    )
}

pub fn willis_experiment(
    group: &Group,
    t_a: Complex64,
    t_b: Complex64,
    p: Exponent,
    radii: &[usize],
    options: &SweepOptions,
) -> Result<WillisRun> {
    let x = willis_element(group, t_a, t_b)?;
    let sweep = range_modulus_sweep(&x, p, radii, options)?;
    let distances: Vec<f64> = sweep.iter().map(|s| s.distance).collect();
    let records = sweep
        .into_iter()
        .map(|s| WillisRecord {
            t_a: [t_a.re, t_a.im],
            t_b: [t_b.re, t_b.im],
            p,
            radius: s.radius,
            distance: s.distance,
            lower_bound: s.lower_bound,
            duality_gap: s.duality_gap,
            argmin_norm: s.argmin_norm,
            modulus: s.modulus,
            modulus_method: s.modulus_method,
        })
        .collect();
    Ok(WillisRun {
        records,
        balance: (Complex64::new(1.0, 0.0) + t_a + t_b).norm(),
        monotone: is_nonincreasing(&distances, 0.0),
        plateau: is_plateau(&distances),
        scope: (p.value() >= 2.0).then(|| OUTSIDE_SCOPE.to_string()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerzRecord {
    pub group: String,
    pub element: Vec<ElementTerm>,
    pub p: Exponent,
    pub radius: usize,
    pub norm_lower: f64,
    pub norm_upper: f64,
    pub samples: usize,
    /// `max ||L_a eta||_2 / ||eta||_2` over the samples.
    pub max_ratio: f64,
    /// Empirical floor `max_ratio / norm_upper` for the constant.
    pub floor: f64,
    pub c_p_candidate: f64,
    /// `max_ratio > c_p_candidate * norm_upper`.
    pub violation: bool,
}

/// Samples `||L_a eta||_2 / ||eta||_2` over deterministic pseudo-random
/// `eta` supported on `B_r` and compares it with the `p -> p` norm of `L_a`
/// restricted to `l_p(B_r)`.
pub fn herz_check(
    a: &GroupAlgebraElement,
    p: Exponent,
    r: usize,
    samples: usize,
    seed: u64,
    c_p_candidate: f64,
) -> Result<HerzRecord> {
    let group = a.group();
    if !group.is_amenable() {
        return Err(Error::Hypothesis(format!("{group} is not amenable")));
    }
    if samples < 100 {
        return Err(Error::Invalid(format!("{samples} samples, at least 100 required")));
    }
    let op = assemble_extended(a, r)?;
    let bounds = opnorm_est(&op, p)?;
    let t = op.matrix();
    let n = t.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for k in 0..samples {
        let mut eta = vec![Complex64::new(0.0, 0.0); n];
        if k < n.min(samples / 4) {
            eta[k] = Complex64::new(1.0, 0.0);
        } else {
            let dense = k % 2 == 0;
            for v in eta.iter_mut() {
                if dense || rng.random::<f64>() < 0.2 {
                    *v = Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
                }
            }
        }
        let norm = l2(&eta);
        if norm == 0.0 {
            continue;
        }
        max_ratio = max_ratio.max(l2(&t.apply(&eta)) / norm);
    }
    let floor = if bounds.upper > 0.0 { max_ratio / bounds.upper } else { 0.0 };
    Ok(HerzRecord {
        group: group.to_string(),
        element: a.to_json_terms(),
        p,
        radius: r,
        norm_lower: bounds.lower,
        norm_upper: bounds.upper,
        samples,
        max_ratio,
        floor,
        c_p_candidate,
        violation: max_ratio > c_p_candidate * bounds.upper * (1.0 + 1e-12),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSurjunctivity {
    pub order: usize,
    pub rank: usize,
    pub injective: bool,
    pub surjective: bool,
    /// Computed over Gaussian rationals rather than with a float tolerance.
    pub exact: bool,
}

impl FiniteSurjunctivity {
    pub fn consistent(&self) -> bool {
        self.injective == self.surjective
    }
}

const EXACT_ORDER_LIMIT: usize = 64;

fn is_dyadic(x: f64) -> bool {
    (x * 1_048_576.0).fract() == 0.0 && x.abs() < 1e12
}

/// Injectivity from the kernel dimension and surjectivity by solving
/// `T xi = delta_g` for every `g`, both read from one Gauss-Jordan
/// elimination of `[T | I]` on the full `|G| x |G|` left-convolution matrix.
pub fn finite_group_surjunctivity(a: &GroupAlgebraElement) -> Result<FiniteSurjunctivity> {
    let group = a.group();
    let order = group
        .order()
        .ok_or_else(|| Error::Hypothesis(format!("{group} is not finite")))?;
    let ball = Arc::new(group.ball(order)?);
    if ball.len() != order {
        return Err(Error::Invalid("ball does not exhaust the group".into()));
    }
    let simple = a.terms().all(|(_, c)| is_dyadic(c.re) && is_dyadic(c.im));
    if simple && order <= EXACT_ORDER_LIMIT {
        let exact = a.to_exact()?;
        let t = assemble(&exact, &ball, Side::Left)?;
        let dense = dense_rows(t.matrix().triplets().map(|(i, j, v)| (i, j, v.clone())), order);
        let (rank, solvable) = gauss_jordan(dense, 0.0);
        Ok(FiniteSurjunctivity {
            order,
            rank,
            injective: rank == order,
            surjective: solvable,
            exact: true,
        })
    } else {
        let t = assemble(a, &ball, Side::Left)?;
        let scale = t.matrix().max_abs().max(f64::MIN_POSITIVE);
        let dense = dense_rows(t.matrix().triplets().map(|(i, j, v)| (i, j, *v)), order);
        let (rank, solvable) = gauss_jordan(dense, 1e-10 * scale * order as f64);
        Ok(FiniteSurjunctivity {
            order,
            rank,
            injective: rank == order,
            surjective: solvable,
            exact: false,
        })
    }
}

fn dense_rows<C: Coefficient>(triplets: impl Iterator<Item = (usize, usize, C)>, n: usize) -> Vec<Vec<C>> {
    let mut rows = vec![vec![C::zero(); 2 * n]; n];
    for (i, j, v) in triplets {
        rows[i][j] = v;
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row[n + i] = C::one();
    }
    rows
}

/// Row-reduces `[T | I]`; returns the rank of `T` and whether every column
/// of `I` lies in the range of `T`.
fn gauss_jordan<C: Coefficient + Div<Output = C>>(mut m: Vec<Vec<C>>, tol: f64) -> (usize, bool) {
    let n = m.len();
    let negligible = |c: &C| c.is_negligible() || c.to_c64().norm() <= tol;
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot) = (rank..n)
            .filter(|&i| !negligible(&m[i][col]))
            .max_by(|&i, &j| m[i][col].to_c64().norm().total_cmp(&m[j][col].to_c64().norm()))
        else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for v in m[rank].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = m[rank].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == rank || negligible(&row[col]) {
                continue;
            }
            let f = row[col].clone();
            for (v, q) in row.iter_mut().zip(&pivot_row) {
                if !q.is_negligible() {
                    *v = v.clone() - f.clone() * q.clone();
                }
            }
        }
        rank += 1;
    }
    // rows without a pivot must read 0 = (combination of delta_g); any
    // nonzero right-hand side there is an unsolvable delta_g
    let solvable = m[rank..]
        .iter()
        .all(|row| row[n..].iter().all(negligible));
    (rank, solvable)
}

/// A named element expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialElement {
    pub name: String,
    pub expression: String,
}

fn trial(name: &str, expression: &str) -> TrialElement {
    TrialElement {
        name: name.to_string(),
        expression: expression.to_string(),
    }
}

/// The named elements shipped for a group family.
pub fn trial_elements(family: Family) -> Vec<TrialElement> {
    match family {
        Family::Free { rank } if rank >= 2 => vec![
            trial("willis", "1*e + w*a + w2*b"),
            trial("willis-conjugate", "1*e + w2*a + w*b"),
            trial("willis-unbalanced", "1*e + i*a - i*b"),
            trial("adjacency", "da + dA + db + dB"),
            trial("control", "3*de + da"),
        ],
        Family::Heisenberg => vec![
            trial("identity", "de"),
            trial("control", "3*de + dx + dy"),
            trial("cube-root", "de + w*dx + w2*dy"),
            trial("adjacency", "dx + dX + dy + dY"),
        ],
        Family::Lattice { rank: 1 } => vec![
            trial("half-adjacency", "(d1+d-1)/2"),
            trial("adjacency", "d1 + d-1"),
            trial("control", "3*de + d1"),
        ],
        Family::Lattice { .. } => vec![trial("identity", "de")],
        Family::Free { .. } => vec![trial("control", "3*de + da")],
        Family::Cyclic { .. } => vec![trial("identity", "de"), trial("antipodal", "de + dg2")],
        Family::Symmetric { .. } => vec![trial("identity", "de"), trial("transposition", "de + ds")],
    }
}

pub fn parse_trial(group: &Group, name_or_expr: &str) -> Result<GroupAlgebraElement> {
    match trial_elements(group.family()).into_iter().find(|t| t.name == name_or_expr) {
        Some(t) => parse_element_expr(group, &t.expression),
        None => parse_element_expr(group, name_or_expr),
    }
}

/// Range-distance and modulus sweeps on `H3` for each trial element, labelled
/// as evidence only.
pub fn heisenberg_survey(
    p: Exponent,
    radii: &[usize],
    trials: &[(String, GroupAlgebraElement)],
    options: &SweepOptions,
) -> Result<Vec<ExperimentRecord>> {
    let mut records = Vec::with_capacity(trials.len());
    for (name, a) in trials {
        if a.group().family() != Family::Heisenberg {
            return Err(Error::Hypothesis(format!("{name} is not an element of H3")));
        }
        if a.support_radius()? > 2 {
            return Err(Error::Hypothesis(format!("{name} is not supported in the ball of radius 2")));
        }
        let sweep = range_modulus_sweep(a, p, radii, options)?;
        let distances: Vec<f64> = sweep.iter().map(|s| s.distance).collect();
        let mut record = ExperimentRecord::new("heisenberg-survey", a);
        record.label = Some(name.clone());
        record.p = Some(p);
        record.radii = sweep.iter().map(|s| s.radius).collect();
        record.invariants.push(Invariant::new(
            "range distance nonincreasing in r",
            is_nonincreasing(&distances, 0.0),
        ));
        record.data = serde_json::to_value(&sweep).map_err(|e| Error::Invalid(e.to_string()))?;
        record.note = Some(EVIDENCE_ONLY.to_string());
        records.push(record);
    }
    records.sort_by(|x, y| x.label.cmp(&y.label));
    Ok(records)
}

/// `e^{2 pi i / 3}` and its conjugate, the balanced Willis pair.
pub fn balanced_pair() -> (Complex64, Complex64) {
    (omega(), omega().conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_kernel_identity_has_no_decay() {
        let z = Group::parse("Z").unwrap();
        let a = parse_element_expr(&z, "de").unwrap();
        let recs = approx_kernel_sequence(&a, &[1, 10], 3).unwrap();
        for r in &recs {
            assert!((r.lambda_min - 1.0).abs() < 1e-9);
            assert!(r.certified);
            assert!((r.ratio - 1.0).abs() < 1e-9, "{}", r.ratio);
            assert_eq!(r.bound, 1.0 / (1.0 + r.n as f64));
        }
    }

    #[test]
    fn approx_kernel_half_adjacency() {
        let z = Group::parse("Z").unwrap();
        let a = parse_element_expr(&z, "(d1+d-1)/2").unwrap();
        let recs = approx_kernel_sequence(&a, &[1, 10, 100], 16).unwrap();
        for r in &recs {
            assert!(r.certified);
            assert_eq!(r.scale, 1.0);
            assert!(r.ratio >= 0.0);
            assert!(r.certified_sup <= r.bound);
        }
        assert!(recs[2].ratio < recs[0].ratio);
    }

    #[test]
    fn plateau_rule() {
        assert!(is_plateau(&[2.0, 1.0, 1.0, 0.98]));
        assert!(!is_plateau(&[1.0, 0.5, 0.25]));
        assert!(!is_plateau(&[0.0, 0.0, 0.0]));
        assert!(!is_plateau(&[1.0, 1.0]));
    }

    #[test]
    fn willis_rejects_bad_input() {
        let f2 = Group::parse("F2").unwrap();
        let z = Group::parse("Z").unwrap();
        let (ta, tb) = balanced_pair();
        assert!(willis_element(&f2, Complex64::new(2.0, 0.0), tb).is_err());
        assert!(willis_element(&z, ta, tb).is_err());
        let x = willis_element(&f2, ta, tb).unwrap();
        assert!((x.lp_coeff_norm(Exponent::ONE) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn willis_small_radii() {
        let f2 = Group::parse("F2").unwrap();
        let (ta, tb) = balanced_pair();
        let run = willis_experiment(&f2, ta, tb, Exponent::ONE, &[1, 2, 3], &SweepOptions::default()).unwrap();
        assert!(run.balance < 1e-12);
        assert!(run.monotone);
        assert!(run.records.iter().all(|r| r.distance >= 0.05));
        let run2 = willis_experiment(&f2, ta, tb, Exponent::TWO, &[1], &SweepOptions::default()).unwrap();
        assert_eq!(run2.scope.as_deref(), Some(OUTSIDE_SCOPE));
    }

    #[test]
    fn control_decays() {
        let f2 = Group::parse("F2").unwrap();
        let a = parse_element_expr(&f2, "3*de + da").unwrap();
        let sweep = range_modulus_sweep(&a, Exponent::ONE, &[1, 2, 3], &SweepOptions::default()).unwrap();
        for s in &sweep {
            assert!(s.distance <= 2.0 * (1.0f64 / 3.0).powi(s.radius as i32 + 1), "{s:?}");
            assert!(s.argmin_norm <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn herz_examples() {
        let z2 = Group::parse("Z^2").unwrap();
        let g = parse_element_expr(&z2, "d[1,0]").unwrap();
        let rec = herz_check(&g, Exponent::new(1.5).unwrap(), 3, 100, 0, 1.0).unwrap();
        assert!((rec.max_ratio - 1.0).abs() < 1e-12);
        assert!(!rec.violation);
        let f2 = Group::parse("F2").unwrap();
        let a = parse_element_expr(&f2, "da").unwrap();
        assert!(herz_check(&a, Exponent::TWO, 1, 100, 0, 1.0).is_err());
        assert!(herz_check(&g, Exponent::TWO, 1, 10, 0, 1.0).is_err());
    }

    #[test]
    fn finite_examples() {
        let c4 = Group::parse("C4").unwrap();
        let r = finite_group_surjunctivity(&parse_element_expr(&c4, "de").unwrap()).unwrap();
        assert!(r.injective && r.surjective && r.exact);
        let r = finite_group_surjunctivity(&parse_element_expr(&c4, "de+dg2").unwrap()).unwrap();
        assert_eq!(r.rank, 2);
        assert!(!r.injective && !r.surjective);
        // 1 + w g + w2 g^2 on C3 kills the character at w^-1 ... rank 2
        let c3 = Group::parse("C3").unwrap();
        let r = finite_group_surjunctivity(&parse_element_expr(&c3, "de + w*dg + w2*dg2").unwrap()).unwrap();
        assert!(!r.exact);
        assert!(r.consistent());
        assert_eq!(r.rank, 1);
        let z = Group::parse("Z").unwrap();
        assert!(finite_group_surjunctivity(&parse_element_expr(&z, "de").unwrap()).is_err());
    }

    #[test]
    fn heisenberg_identity() {
        let h = Group::parse("H3").unwrap();
        let trials = vec![("identity".to_string(), parse_element_expr(&h, "de").unwrap())];
        let recs = heisenberg_survey(Exponent::ONE, &[1, 2], &trials, &SweepOptions::default()).unwrap();
        assert_eq!(recs[0].note.as_deref(), Some(EVIDENCE_ONLY));
        let sweep: Vec<SweepRecord> = serde_json::from_value(recs[0].data.clone()).unwrap();
        for s in sweep {
            assert!(s.distance < 1e-12);
            assert!((s.modulus - 1.0).abs() < 1e-9);
        }
    }
}
