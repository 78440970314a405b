//! Hermitian forms, the calibrations `V^L_{n+i,n+i}` and `Ṽ_{n,n}`, and comass.
//!
//! `V^L_{n+i,n+i}` is a fixed positive multiple of the top-weight part of
//! `ω_L^{n+i}`. Expanding `ω_L = aω_I + bω_J + cω_K` multinomially, the
//! projections of `ω_I^α ∧ ω_J^β ∧ ω_K^γ` are computed once, exactly, and
//! every `V^L` is a polynomial combination of them.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extalg::{mask_indices, pairing, type_component, Form, Polyvector};
use crate::linalg::Matrix;
use crate::qdc::{act_structure, holomorphic_symplectic, holomorphic_volume, kahler_form, proportionality, VMap};
use crate::quatspace::{InducedStructure, QuaternionSpace, Unit};
use crate::scalar::{factorial, i_pow, Cx, Rational, Scalar};
use crate::su2rep::project_top;

/// `ω_I, ω_J, ω_K`.
#[derive(Clone, Debug)]
pub struct HermitianTriple<S> {
    pub omega: [Form<S>; 3],
}

pub fn hermitian_forms<S: Scalar>(space: &QuaternionSpace) -> HermitianTriple<S> {
    HermitianTriple { omega: Unit::ALL.map(|u| kahler_form(space, &InducedStructure::unit(u))) }
}

impl<S: Scalar> HermitianTriple<S> {
    /// `ω_L = aω_I + bω_J + cω_K`.
    pub fn omega_l(&self, l: &InducedStructure<S>) -> Form<S> {
        let t = l.triple();
        self.omega
            .iter()
            .zip(t)
            .fold(Form::zero(self.omega[0].dim(), 2), |acc, (w, c)| acc.add(&w.scale_real(c)))
    }
}

/// `Φ_L = Ω_L^n / n!`.
pub fn phi<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<Form<S>> {
    holomorphic_volume(space, l)
}

/// Real-oriented span of complex coordinate lines for `I`.
///
/// Line `2l` is `A_l = span(e_{4l}, e_{4l+1})`, line `2l+1` is
/// `B_l = span(e_{4l+2}, e_{4l+3})`; each is spanned by `(v, Iv)`.
pub fn coordinate_plane(space: &QuaternionSpace, lines: &[usize]) -> Result<Matrix<f64>> {
    let d = space.real_dim();
    let mut cols = Vec::with_capacity(2 * lines.len());
    for &line in lines {
        if line >= 2 * space.n() {
            return Err(Error::Invalid(format!("complex coordinate line {line} out of range")));
        }
        for off in 0..2 {
            let mut v = vec![0.0; d];
            v[2 * line + off] = 1.0;
            cols.push(v);
        }
    }
    Ok(Matrix::from_columns(&cols))
}

/// Coordinate planes of complex dimension `n+i` containing, for every
/// quaternionic line, at least one of its two complex lines. These are the
/// coordinate planes coisotropic for `Ω_I`.
pub fn coisotropic_coordinate_planes(space: &QuaternionSpace, i: usize) -> Vec<Vec<usize>> {
    let n = space.n();
    crate::extalg::subsets(2 * n, n + i)
        .into_iter()
        .map(mask_indices)
        .filter(|lines| (0..n).all(|l| lines.contains(&(2 * l)) || lines.contains(&(2 * l + 1))))
        .collect()
}

/// `⟨f, v_1 ∧ … ∧ v_p⟩` for the columns of a real frame (real part).
pub fn evaluate(f: &Form<f64>, frame: &Matrix<f64>) -> f64 {
    pairing(f, &Polyvector::from_vectors(frame)).map(|z| z.re).unwrap_or(f64::NAN)
}

type ExactTable = BTreeMap<[usize; 3], Form<Rational>>;

/// Top-weight projections of `multinomial · ω_I^α ω_J^β ω_K^γ`, `α+β+γ = n+i`.
fn projected_powers(space: &QuaternionSpace, i: usize) -> Result<Arc<ExactTable>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<ExactTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (space.n(), i);
    if let Some(hit) = cache.read().expect("cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let m = space.n() + i;
    let h = hermitian_forms::<Rational>(space);
    let powers: Vec<Vec<Form<Rational>>> =
        h.omega.iter().map(|w| (0..=m).map(|k| w.power(k)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let mut table = BTreeMap::new();
    for a in 0..=m {
        for b in 0..=m - a {
            let c = m - a - b;
            let multinomial =
                factorial::<Rational>(m) / (factorial::<Rational>(a) * factorial::<Rational>(b) * factorial::<Rational>(c));
            let product = powers[0][a].wedge(&powers[1][b])?.wedge(&powers[2][c])?;
            let projected = project_top(space, &product.scale_real(&multinomial));
            if !projected.is_empty() {
                table.insert([a, b, c], projected);
            }
        }
    }
    let table = Arc::new(table);
    Ok(cache.write().expect("cache poisoned").entry(key).or_insert(table).clone())
}

/// `Π_top(ω_L^{n+i})`, assembled from the exact projected monomials.
pub fn projected_omega_power<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>, i: usize) -> Result<Form<S>> {
    let table = projected_powers(space, i)?;
    let t = l.triple();
    let pow = |x: &S, k: usize| (0..k).fold(S::one(), |acc, _| acc * x.clone());
    let mut out = Form::zero(space.real_dim(), 2 * (space.n() + i));
    for ([a, b, c], f) in table.iter() {
        let coef = pow(&t[0], *a) * pow(&t[1], *b) * pow(&t[2], *c);
        if !coef.is_zero() {
            out = out.add(&convert(f).scale_real(&coef));
        }
    }
    Ok(out.chop())
}

/// Terms `(α, β, γ) ↦ T` with `V^L = Σ a^α b^β c^γ T` for `L = aI + bJ + cK`.
pub fn calibration_terms(space: &QuaternionSpace, i: usize) -> Result<Vec<([usize; 3], Form<f64>)>> {
    let c = normalization(space, i)?;
    Ok(projected_powers(space, i)?.iter().map(|(e, f)| (*e, f.to_f64().scale_real(&c))).collect())
}

fn convert<S: Scalar>(f: &Form<Rational>) -> Form<S> {
    f.map_scalar(S::from_rational)
}

/// A normalized calibration `V^L_{n+i,n+i}`.
#[derive(Clone, Debug)]
pub struct CalibrationForm<S> {
    pub structure: InducedStructure<S>,
    pub level: usize,
    pub form: Form<S>,
    /// `V^L = normalization · Π_top(ω_L^{n+i})`.
    pub normalization: f64,
}

/// Positive constant making the largest value on the coisotropic coordinate planes equal to 1.
pub fn normalization(space: &QuaternionSpace, i: usize) -> Result<f64> {
    if i > space.n() {
        return Err(Error::Invalid(format!("level i = {i} exceeds n = {}", space.n())));
    }
    let base = projected_omega_power::<f64>(space, &InducedStructure::unit(Unit::I), i)?;
    let mut best = f64::NEG_INFINITY;
    for lines in coisotropic_coordinate_planes(space, i) {
        best = best.max(evaluate(&base, &coordinate_plane(space, &lines)?));
    }
    if best <= 0.0 {
        return Err(Error::Inconsistent(format!("top-weight part of ω^(n+i) is not positive on coisotropic planes ({best})")));
    }
    Ok(1.0 / best)
}

pub fn calibration<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>, i: usize) -> Result<CalibrationForm<S>> {
    let c = normalization(space, i)?;
    let raw = projected_omega_power(space, l, i)?;
    let scale = if S::EXACT { exact_normalization(space, i)? } else { S::from_f64(c) };
    Ok(CalibrationForm { structure: l.clone(), level: i, form: raw.scale_real(&scale).chop(), normalization: c })
}

/// The normalization as an exact rational: the reciprocal of the exact value on the best plane.
fn exact_normalization<S: Scalar>(space: &QuaternionSpace, i: usize) -> Result<S> {
    let base = projected_omega_power::<S>(space, &InducedStructure::unit(Unit::I), i)?;
    let mut best: Option<S> = None;
    for lines in coisotropic_coordinate_planes(space, i) {
        // Coordinate planes have a single monomial: the coefficient is the pairing.
        let mut mask = 0u32;
        for &line in &lines {
            mask |= 0b11 << (2 * line);
        }
        let v = base.coef(mask).re;
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    let best = best.filter(|b| *b > S::zero()).ok_or_else(|| Error::Inconsistent("no positive plane value".into()))?;
    Ok(S::one() / best)
}

/// `Φ̃_J`: `Φ_J` rescaled by a unit so that `I(Φ̃_J) = conj(Φ̃_J)`, with the sign making
/// `(Φ̃_J)^{n,n}_I` positive on `Ω_I`-Lagrangian coordinate planes.
pub fn phi_j_real<S: Scalar>(space: &QuaternionSpace) -> Result<Form<S>> {
    let n = space.n();
    let j = InducedStructure::unit(Unit::J);
    let i = InducedStructure::unit(Unit::I);
    let phi_j = phi(space, &j)?;
    for k in 0..4 {
        let cand = phi_j.scale(&i_pow(k));
        if act_structure(space, &i, &cand).sub(&cand.conj()).is_zero() {
            let part = type_component(&cand, space, &i, n, n)?;
            let lines: Vec<usize> = (0..n).map(|l| 2 * l).collect();
            let mut mask = 0u32;
            for &line in &lines {
                mask |= 0b11 << (2 * line);
            }
            if part.coef(mask).re > S::zero() {
                return Ok(cand);
            }
        }
    }
    Err(Error::Inconsistent("no unit rescaling of Φ_J is real for I with positive (n,n)-part".into()))
}

/// `Ṽ_{n,n} = (1/n!)(Re Φ̃_J)^{n,n}_I`.
pub fn lagrangian_calibration<S: Scalar>(space: &QuaternionSpace) -> Result<Form<S>> {
    let n = space.n();
    let i = InducedStructure::unit(Unit::I);
    let re = phi_j_real::<S>(space)?.re();
    Ok(type_component(&re, space, &i, n, n)?.scale_real(&(S::one() / factorial::<S>(n))))
}

/// The three constructions of `V^I_{n+i,n+i}` and their pairwise ratios.
#[derive(Clone, Debug)]
pub struct ConstructionComparison<S> {
    pub level: usize,
    /// `Π_top(ω_I^{n+i})`.
    pub projected: Form<S>,
    /// `(Φ̃_J)^{n,n}_I ∧ ω_I^i`.
    pub phi_part: Form<S>,
    /// `V_{i,i}(Ω_I^i)`.
    pub dolbeault: Form<S>,
    /// `phi_part = r₁ · projected`.
    pub ratio_phi: Option<Cx<S>>,
    /// `dolbeault = r₂ · projected`.
    pub ratio_dolbeault: Option<Cx<S>>,
}

impl<S: Scalar> ConstructionComparison<S> {
    /// Both ratios exist and are real and positive.
    pub fn consistent(&self) -> bool {
        let positive = |r: &Option<Cx<S>>| r.as_ref().is_some_and(|z| z.im.is_negligible() && z.re > S::zero());
        positive(&self.ratio_phi) && positive(&self.ratio_dolbeault)
    }
}

pub fn compare_constructions<S: Scalar>(space: &QuaternionSpace, i: usize) -> Result<ConstructionComparison<S>> {
    let n = space.n();
    if i > n {
        return Err(Error::Invalid(format!("level i = {i} exceeds n = {n}")));
    }
    let unit_i = InducedStructure::unit(Unit::I);
    let projected = projected_omega_power::<S>(space, &unit_i, i)?;
    let omega_i = kahler_form::<S>(space, &unit_i);
    let phi_part = type_component(&phi_j_real::<S>(space)?, space, &unit_i, n, n)?.wedge(&omega_i.power(i)?)?;
    let phi_i = phi::<S>(space, &unit_i)?;
    let big_omega = holomorphic_symplectic(space, &unit_i)?;
    let dolbeault = VMap::new(space, i, i, &phi_i)?.apply(&big_omega.power(i)?)?;
    let ratio_phi = proportionality(&phi_part, &projected);
    let ratio_dolbeault = proportionality(&dolbeault, &projected);
    Ok(ConstructionComparison { level: i, projected, phi_part, dolbeault, ratio_phi, ratio_dolbeault })
}

/// Best value of `⟨f, v_1 ∧ … ∧ v_p⟩` over orthonormal frames found by multi-start ascent.
#[derive(Clone, Debug)]
pub struct ComassEstimate {
    pub value: f64,
    pub frame: Matrix<f64>,
    pub restarts: usize,
    pub converged: usize,
    /// Always true: ascent only certifies a lower bound.
    pub lower_bound: bool,
}

/// Sparse real form prepared for repeated evaluation on frames.
struct FrameObjective {
    dim: usize,
    degree: usize,
    terms: Vec<(Vec<usize>, f64)>,
}

impl FrameObjective {
    fn new(f: &Form<f64>) -> Self {
        let terms = f
            .terms()
            .filter(|(_, c)| c.re != 0.0)
            .map(|(m, c)| (mask_indices(*m), c.re))
            .collect();
        Self { dim: f.dim(), degree: f.degree(), terms }
    }

    fn value(&self, v: &DMatrix<f64>) -> f64 {
        self.terms.iter().map(|(rows, c)| c * v.select_rows(rows.iter()).determinant()).sum()
    }

    /// Euclidean gradient: `Σ_S c_S · cof(V_S)` scattered into the rows `S`.
    fn gradient(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.degree;
        let mut g = DMatrix::zeros(self.dim, p);
        for (rows, c) in &self.terms {
            let sub = v.select_rows(rows.iter());
            for (a, &r) in rows.iter().enumerate() {
                for b in 0..p {
                    let minor = sub.clone().remove_row(a).remove_column(b);
                    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    let cof = if p == 1 { 1.0 } else { minor.determinant() };
                    g[(r, b)] += c * sign * cof;
                }
            }
        }
        g
    }
}

/// Orthonormalizes columns keeping orientation (`R` with positive diagonal).
fn retract(v: DMatrix<f64>) -> DMatrix<f64> {
    let qr = v.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..r.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn random_frame(rng: &mut ChaCha8Rng, d: usize, p: usize) -> DMatrix<f64> {
    retract(DMatrix::from_fn(d, p, |_, _| rng.sample(StandardNormal)))
}

fn tangent(v: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    // Projection onto the tangent space of the Stiefel manifold: G − V sym(VᵀG).
    let vtg = v.transpose() * g;
    let sym = (&vtg + vtg.transpose()) * 0.5;
    g - v * sym
}

fn ascend(obj: &FrameObjective, mut v: DMatrix<f64>, tol: f64, max_iter: usize) -> (f64, DMatrix<f64>, bool) {
    let mut f = obj.value(&v);
    let mut xi = tangent(&v, &obj.gradient(&v));
    let mut step = 0.5;
    for _ in 0..max_iter {
        let gnorm2 = xi.norm_squared();
        if gnorm2.sqrt() < tol {
            return (f, v, true);
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = retract(&v + &xi * t);
            let fc = obj.value(&cand);
            if fc >= f + 1e-4 * t * gnorm2 {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            return (f, v, true);
        };
        let next = tangent(&cand, &obj.gradient(&cand));
        // Barzilai–Borwein step for the next iteration, with tangent differences
        // standing in for the transported ones.
        let s = &cand - &v;
        let y = &xi - &next;
        let sy = s.dot(&y);
        step = if sy > 1e-300 { (s.norm_squared() / sy).clamp(1e-6, 1e3) } else { (t * 2.0).min(4.0) };
        v = cand;
        f = fc;
        xi = next;
    }
    (f, v, false)
}

fn to_matrix(v: &DMatrix<f64>) -> Matrix<f64> {
    Matrix::from_rows((0..v.nrows()).map(|r| (0..v.ncols()).map(|c| v[(r, c)]).collect()).collect())
}

/// Multi-start projected ascent; restart `k` is seeded with `(seed, k)`, results
/// reduced in restart order, so the answer does not depend on thread scheduling.
pub fn comass(f: &Form<f64>, restarts: usize, seed: u64, tol: f64) -> ComassEstimate {
    let obj = FrameObjective::new(f);
    let (d, p) = (obj.dim, obj.degree);
    if p == 0 {
        let value = f.coef(0).re.abs();
        return ComassEstimate { value, frame: Matrix::zeros(d, 0), restarts, converged: restarts, lower_bound: true };
    }
    let runs: Vec<(f64, DMatrix<f64>, bool)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let start = random_frame(&mut rng, d, p);
            ascend(&obj, start, tol, 5000)
        })
        .collect();
    let converged = runs.iter().filter(|r| r.2).count();
    let (value, frame, _) = runs
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one restart");
    ComassEstimate { value, frame: to_matrix(&frame), restarts: restarts.max(1), converged, lower_bound: true }
}

/// Largest pairing of `f` over `count` uniformly random orthonormal frames.
pub fn max_on_random_frames(f: &Form<f64>, count: usize, seed: u64) -> f64 {
    let obj = FrameObjective::new(f);
    let (d, p) = (obj.dim, obj.degree);
    const CHUNK: usize = 1024;
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let todo = CHUNK.min(count - c * CHUNK);
            (0..todo).map(|_| obj.value(&random_frame(&mut rng, d, p)).abs()).fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `a_i` with `V^I ∧ α = a_i Ω_I^i ∧ R(α) ∧ Φ̄_I`, i.e. `V^I = a_i V_{i,i}(Ω_I^i)`.
pub fn test_form_constant<S: Scalar>(space: &QuaternionSpace, v: &CalibrationForm<S>) -> Result<Cx<S>> {
    let i = InducedStructure::unit(Unit::I);
    let phi_i = phi::<S>(space, &i)?;
    let omega = holomorphic_symplectic(space, &i)?;
    let reference = VMap::new(space, v.level, v.level, &phi_i)?.apply(&omega.power(v.level)?)?;
    proportionality(&v.form, &reference)
        .ok_or_else(|| Error::Inconsistent("calibration is not a multiple of V_{i,i}(Ω_I^i)".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coisotropic_catalog_sizes() {
        let h = QuaternionSpace::new(2).unwrap();
        // i = 0: one line from each pair; i = 2: everything.
        assert_eq!(coisotropic_coordinate_planes(&h, 0).len(), 4);
        assert_eq!(coisotropic_coordinate_planes(&h, 1).len(), 4);
        assert_eq!(coisotropic_coordinate_planes(&h, 2).len(), 1);
    }

    #[test]
    fn comass_of_kahler_form_is_one() {
        let h = QuaternionSpace::new(1).unwrap();
        let w = kahler_form::<f64>(&h, &InducedStructure::unit(Unit::I));
        let est = comass(&w, 8, 7, 1e-10);
        assert!((est.value - 1.0).abs() < 1e-8, "{}", est.value);
    }

    #[test]
    fn comass_is_reproducible() {
        let h = QuaternionSpace::new(1).unwrap();
        let w = kahler_form::<f64>(&h, &InducedStructure::unit(Unit::J));
        let a = comass(&w, 4, 11, 1e-9);
        let b = comass(&w, 4, 11, 1e-9);
        assert_eq!(a.value, b.value);
    }
}
