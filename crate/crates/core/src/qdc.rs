//! Quaternionic Dolbeault maps `V_{p,q} : Λ^{p+q,0}_I → Λ^{n+p,n+q}_I`.
//!
//! `V_{p,q}(η)` is the unique form with
//! `V_{p,q}(η) ∧ α = η ∧ R(α) ∧ Φ̄_I` for every `α ∈ Λ^{n−p,n−q}_I`; it is
//! found by inverting the wedge pairing between the two monomial bases.
//! Polynomial-coefficient forms ([`PolyForm`]) carry `∂`, `∂̄` and `∂_J`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::extalg::{is_of_type, mask_indices, subsets, top_pairing, Form};
use crate::linalg::Matrix;
use crate::quatspace::{adapted_basis, InducedStructure, QuaternionSpace, Unit};
use crate::scalar::{cx_abs_f64, factorial, i_pow, imag_unit, real, Cx, Scalar};
use crate::su2rep::{lower, r_map};

/// Kähler form `ω_L(u, v) = g(Lu, v)`.
pub fn kahler_form<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>) -> Form<S> {
    let m = l.matrix(space);
    let d = space.real_dim();
    let mut f = Form::zero(d, 2);
    for r in 0..d {
        for s in r + 1..d {
            let c = m[(s, r)].clone();
            if !c.is_zero() {
                f.add_term(1 << r | 1 << s, real(c));
            }
        }
    }
    f
}

/// `Ω_L = ω_{L'} + i ω_{L''}` for the right-handed completion `(L, L', L'')`; of type `(2,0)` for `L`.
pub fn holomorphic_symplectic<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<Form<S>> {
    let (l1, l2) = l.completion()?;
    Ok(kahler_form(space, &l1).add(&kahler_form(space, &l2).scale(&imag_unit())))
}

/// `Φ_L = Ω_L^n / n!`, a nowhere-zero `(2n, 0)`-form.
pub fn holomorphic_volume<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<Form<S>> {
    let omega = holomorphic_symplectic(space, l)?;
    Ok(omega.power(space.n())?.scale_real(&(S::one() / factorial::<S>(space.n()))))
}

/// Pointwise action `L·f = (L⁻¹)^* f` of a unit structure (`L⁻¹ = −L`).
pub fn act_structure<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>, f: &Form<S>) -> Form<S> {
    f.act(&l.neg().matrix(space))
}

/// Whether `J(η) = η̄`.
pub fn is_j_real<S: Scalar>(space: &QuaternionSpace, eta: &Form<S>) -> bool {
    act_structure(space, &InducedStructure::unit(Unit::J), eta).sub(&eta.conj()).is_zero()
}

/// Monomial basis `θ_P ∧ θ̄_Q` (`|P| = a`, `|Q| = b`) of `Λ^{a,b}_L`.
pub fn type_basis<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>, a: usize, b: usize) -> Result<Vec<Form<S>>> {
    let ad = adapted_basis(space, l)?;
    let d = space.real_dim();
    let theta: Vec<Form<S>> = ad.covectors.iter().map(|c| Form::covector(c)).collect();
    let theta_bar: Vec<Form<S>> = theta.iter().map(Form::conj).collect();
    let wedge_all = |forms: &[Form<S>], mask| -> Result<Form<S>> {
        mask_indices(mask).into_iter().try_fold(Form::one(d), |acc, j| acc.wedge(&forms[j]))
    };
    let mut out = Vec::new();
    for p in subsets(theta.len(), a) {
        let hol = wedge_all(&theta, p)?;
        for q in subsets(theta.len(), b) {
            out.push(hol.wedge(&wedge_all(&theta_bar, q)?)?);
        }
    }
    Ok(out)
}

/// The linear map `V_{p,q}` for a fixed `Φ_I`, with the data needed to evaluate it.
#[derive(Clone, Debug)]
pub struct VMap<S> {
    space: QuaternionSpace,
    p: usize,
    q: usize,
    phi_bar: Form<S>,
    tests: Vec<Form<S>>,
    r_tests: Vec<Form<S>>,
    targets: Vec<Form<S>>,
    pairing_inverse: Matrix<Cx<S>>,
}

impl<S: Scalar> VMap<S> {
    pub fn new(space: &QuaternionSpace, p: usize, q: usize, phi: &Form<S>) -> Result<Self> {
        let n = space.n();
        if p > n || q > n {
            return Err(Error::Invalid(format!("V_{{{p},{q}}} needs p, q ≤ n = {n}")));
        }
        let i = InducedStructure::unit(Unit::I);
        if phi.degree() != 2 * n || !is_of_type(phi, space, &i, 2 * n, 0) || phi.is_zero() {
            return Err(Error::WrongType { p: 2 * n, q: 0 });
        }
        let tests = type_basis(space, &i, n - p, n - q)?;
        let r_tests = tests
            .iter()
            .map(|a| r_map(space, &i, a, n - p, n - q))
            .collect::<Result<Vec<_>>>()?;
        let targets = type_basis(space, &i, n + p, n + q)?;
        let size = targets.len();
        let mut pairing = Matrix::zeros(tests.len(), size);
        for (a, alpha) in tests.iter().enumerate() {
            for (b, beta) in targets.iter().enumerate() {
                pairing[(a, b)] = top_pairing(beta, alpha)?;
            }
        }
        let pairing_inverse = pairing
            .inverse()
            .ok_or_else(|| Error::Singular(format!("wedge pairing Λ^{{{},{}}} × Λ^{{{},{}}}", n + p, n + q, n - p, n - q)))?;
        Ok(Self { space: *space, p, q, phi_bar: phi.conj(), tests, r_tests, targets, pairing_inverse })
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn space(&self) -> &QuaternionSpace {
        &self.space
    }

    fn rhs(&self, eta: &Form<S>) -> Result<Vec<Cx<S>>> {
        self.r_tests
            .iter()
            .map(|r| top_pairing(&eta.wedge(r)?, &self.phi_bar))
            .collect()
    }

    /// `V_{p,q}(η)` for `η` of type `(p+q, 0)`.
    pub fn apply(&self, eta: &Form<S>) -> Result<Form<S>> {
        let i = InducedStructure::unit(Unit::I);
        if eta.degree() != self.p + self.q || !is_of_type(eta, &self.space, &i, self.p + self.q, 0) {
            return Err(Error::WrongType { p: self.p + self.q, q: 0 });
        }
        let coefs = self.pairing_inverse.mul_vec(&self.rhs(eta)?);
        let mut out = Form::zero(self.space.real_dim(), 2 * self.space.n() + self.p + self.q);
        for (c, t) in coefs.iter().zip(&self.targets) {
            if !c.is_zero() {
                out = out.add(&t.scale(c));
            }
        }
        Ok(out.chop())
    }

    /// Largest violation of the defining identity over the monomial test forms.
    pub fn identity_residual(&self, eta: &Form<S>, v: &Form<S>) -> Result<f64> {
        let rhs = self.rhs(eta)?;
        let mut worst = 0.0f64;
        for (alpha, r) in self.tests.iter().zip(&rhs) {
            let lhs = top_pairing(v, alpha)?;
            worst = worst.max(cx_abs_f64(&(lhs - r.clone())));
        }
        Ok(worst)
    }

    /// Source basis `θ_P` of `Λ^{p+q,0}_I` and the matrix of `V` in the target basis.
    pub fn matrix(&self) -> Result<Matrix<Cx<S>>> {
        let i = InducedStructure::unit(Unit::I);
        let sources = type_basis(&self.space, &i, self.p + self.q, 0)?;
        let mut m = Matrix::zeros(self.targets.len(), sources.len());
        for (j, eta) in sources.iter().enumerate() {
            let coefs = self.pairing_inverse.mul_vec(&self.rhs(eta)?);
            for (r, c) in coefs.into_iter().enumerate() {
                m[(r, j)] = c;
            }
        }
        Ok(m)
    }
}

/// `max |V_{p,q}(η) − R_{p,q}(η) ∧ V_{0,0}(1)|`.
pub fn factorization_residual<S: Scalar>(v: &VMap<S>, v00: &Form<S>, eta: &Form<S>) -> Result<f64> {
    let (p, q) = v.bidegree();
    let i = InducedStructure::unit(Unit::I);
    let lhs = v.apply(eta)?;
    let rhs = lower(v.space(), &i, eta, p, q)?.wedge(v00)?;
    Ok(lhs.sub(&rhs).max_abs())
}

/// `λ` with `V_{0,0}(1) = λ R_{n,n}(Φ_I)`; errors when the two are not proportional.
pub fn lambda<S: Scalar>(space: &QuaternionSpace, phi: &Form<S>) -> Result<Cx<S>> {
    let n = space.n();
    let i = InducedStructure::unit(Unit::I);
    let v00 = VMap::new(space, 0, 0, phi)?.apply(&Form::one(space.real_dim()))?;
    let r = lower(space, &i, phi, n, n)?;
    proportionality(&v00, &r).ok_or_else(|| Error::Inconsistent("V_{0,0}(1) is not a multiple of R_{n,n}(Φ_I)".into()))
}

/// `c` with `f = c·g`, if it exists and `g ≠ 0`.
pub fn proportionality<S: Scalar>(f: &Form<S>, g: &Form<S>) -> Option<Cx<S>> {
    let (mask, gc) = g.terms().max_by(|a, b| cx_abs_f64(a.1).total_cmp(&cx_abs_f64(b.1)))?;
    let c = f.coef(*mask) / gc.clone();
    let scale = f.max_abs().max(g.max_abs()).max(1.0);
    let resid = f.sub(&g.scale(&c)).max_abs();
    let ok = if S::EXACT { resid == 0.0 } else { resid <= 1e-9 * scale };
    ok.then_some(c)
}

/// Outcome of the reality test of `i^{(n−p)²} V_{p,p}(η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealityReport {
    pub eta_is_real: bool,
    pub scaled_is_real: bool,
    pub max_imaginary: f64,
}

pub fn reality<S: Scalar>(v: &VMap<S>, eta: &Form<S>) -> Result<RealityReport> {
    let (p, q) = v.bidegree();
    if p != q {
        return Err(Error::Invalid("reality is defined for V_{p,p}".into()));
    }
    let n = v.space().n() as i64;
    let scaled = v.apply(eta)?.scale(&i_pow((n - p as i64).pow(2)));
    let max_imaginary = scaled.terms().map(|(_, c)| c.im.to_f64().abs()).fold(0.0, f64::max);
    Ok(RealityReport { eta_is_real: is_j_real(v.space(), eta), scaled_is_real: scaled.is_real(), max_imaginary })
}

/// Exponent vector of a polynomial monomial in the flat coordinates.
pub type Exponents = Vec<u8>;

/// A form whose coefficients are polynomials in `x_0, …, x_{4n−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm<S> {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Exponents, Form<S>>,
}

impl<S: Scalar> PolyForm<S> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self { dim, degree, terms: BTreeMap::new() }
    }

    pub fn constant(f: Form<S>) -> Self {
        Self::monomial(vec![0; f.dim()], f)
    }

    /// `x^e · f`.
    pub fn monomial(exponents: Exponents, f: Form<S>) -> Self {
        assert_eq!(exponents.len(), f.dim());
        let mut out = Self::zero(f.dim(), f.degree());
        out.add_term(exponents, f);
        out
    }

    fn add_term(&mut self, e: Exponents, f: Form<S>) {
        if f.is_empty() {
            return;
        }
        let merged = match self.terms.remove(&e) {
            Some(old) => old.add(&f),
            None => f,
        };
        if !merged.is_empty() {
            self.terms.insert(e, merged);
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Form<S>)> {
        self.terms.iter()
    }

    /// Largest total polynomial degree.
    pub fn polynomial_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, f) in &other.terms {
            out.add_term(e.clone(), f.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.map_forms(|f| Ok(f.neg())).expect("negation"))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(Form::is_zero)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(Form::max_abs).fold(0.0, f64::max)
    }

    /// Applies a linear map to the form part of every term.
    pub fn map_forms(&self, op: impl Fn(&Form<S>) -> Result<Form<S>>) -> Result<Self> {
        let mut out: Option<Self> = None;
        for (e, f) in &self.terms {
            let g = op(f)?;
            let acc = out.get_or_insert_with(|| Self::zero(self.dim, g.degree()));
            acc.add_term(e.clone(), g);
        }
        Ok(out.unwrap_or_else(|| Self::zero(self.dim, self.degree)))
    }

    /// `Σ_r ε_r ∧ ∂f/∂x_r` for a family of 1-forms `ε_r`.
    fn differential(&self, eps: &[Form<S>]) -> Result<Self> {
        if self.degree + 1 > self.dim {
            return Err(Error::DegreeOverflow { left: self.degree, right: 1, dim: self.dim });
        }
        let mut out = Self::zero(self.dim, self.degree + 1);
        for (e, f) in &self.terms {
            for (r, er) in eps.iter().enumerate() {
                if e[r] == 0 {
                    continue;
                }
                let mut lowered = e.clone();
                lowered[r] -= 1;
                let g = er.wedge(f)?.scale_real(&S::from_int(e[r] as i64));
                out.add_term(lowered, g);
            }
        }
        Ok(out)
    }

    pub fn d(&self) -> Result<Self> {
        let eps: Vec<Form<S>> = (0..self.dim).map(|r| Form::monomial(self.dim, 1 << r, Cx::one())).collect();
        self.differential(&eps)
    }

    /// `(∂f, ∂̄f)` for the bigrading of `L`.
    pub fn dolbeault(&self, space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<(Self, Self)> {
        let m = l.matrix(space);
        let half = real(S::ratio(1, 2));
        let mut hol = Vec::with_capacity(self.dim);
        let mut anti = Vec::with_capacity(self.dim);
        for r in 0..self.dim {
            // dx_r∘L = Σ_s L_{rs} dx_s
            let dx = Form::monomial(self.dim, 1 << r, Cx::one());
            let coefs: Vec<Cx<S>> = (0..self.dim).map(|s| real(m[(r, s)].clone())).collect();
            let twisted = Form::covector(&coefs).scale(&imag_unit());
            hol.push(dx.sub(&twisted).scale(&half));
            anti.push(dx.add(&twisted).scale(&half));
        }
        Ok((self.differential(&hol)?, self.differential(&anti)?))
    }

    pub fn partial(&self, space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<Self> {
        Ok(self.dolbeault(space, l)?.0)
    }

    pub fn partial_bar(&self, space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<Self> {
        Ok(self.dolbeault(space, l)?.1)
    }

    /// `∂_J = i · J⁻¹ ∘ ∂̄_I ∘ J`, with `J` acting pointwise on the form part.
    pub fn partial_j(&self, space: &QuaternionSpace) -> Result<Self> {
        let j = InducedStructure::unit(Unit::J);
        let i = InducedStructure::unit(Unit::I);
        let forward = self.map_forms(|f| Ok(act_structure(space, &j, f)))?;
        let d = forward.partial_bar(space, &i)?;
        d.map_forms(|f| Ok(act_structure(space, &j.neg(), f).scale(&imag_unit::<S>())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extalg::bigrade;
    use crate::scalar::Rational;

    type Q = Rational;

    #[test]
    fn kahler_forms_in_coordinates() {
        let h = QuaternionSpace::new(1).unwrap();
        let w = |u| kahler_form::<Q>(&h, &InducedStructure::unit(u));
        let mono = |m: u32, s: i64| Form::<Q>::monomial(4, m, Cx::new(Q::from_int(s), Q::zero()));
        assert_eq!(w(Unit::I), mono(0b0011, 1).add(&mono(0b1100, 1)));
        assert_eq!(w(Unit::J), mono(0b0101, 1).add(&mono(0b1010, -1)));
        assert_eq!(w(Unit::K), mono(0b1001, 1).add(&mono(0b0110, 1)));
    }

    #[test]
    fn omega_types() {
        let h = QuaternionSpace::new(2).unwrap();
        let i = InducedStructure::<Q>::unit(Unit::I);
        let j = InducedStructure::<Q>::unit(Unit::J);
        let omega = holomorphic_symplectic(&h, &i).unwrap();
        assert!(is_of_type(&omega, &h, &i, 2, 0));
        let parts = bigrade(&omega, &h, &j);
        assert_eq!(parts.keys().copied().collect::<Vec<_>>(), vec![(0, 2), (1, 1), (2, 0)]);
        let total = parts.values().fold(Form::zero(8, 2), |a, b| a.add(b));
        assert_eq!(total, omega);
        assert!(is_j_real(&h, &omega));
        assert!(is_j_real(&h, &holomorphic_volume(&h, &i).unwrap()));
    }

    #[test]
    fn d_squares_to_zero() {
        let h = QuaternionSpace::new(1).unwrap();
        let i = InducedStructure::<Q>::unit(Unit::I);
        let f = PolyForm::monomial(vec![2, 0, 1, 0], Form::<Q>::monomial(4, 0b0010, Cx::one()))
            .add(&PolyForm::monomial(vec![1, 1, 0, 0], Form::monomial(4, 0b1000, imag_unit())));
        assert!(f.d().unwrap().d().unwrap().is_zero());
        let (del, delbar) = f.dolbeault(&h, &i).unwrap();
        assert_eq!(del.add(&delbar), f.d().unwrap());
        assert!(del.partial(&h, &i).unwrap().is_zero());
        assert!(delbar.partial_bar(&h, &i).unwrap().is_zero());
    }
}
