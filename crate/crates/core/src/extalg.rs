//! Sparse exterior algebra over the complexified dual of `R^{4n}`.
//!
//! A monomial `dx_{i1} ∧ … ∧ dx_{ik}` (`i1 < … < ik`) is stored as a bitmask;
//! products merge masks and pick up the sign of the interleaving
//! permutation. The oriented volume form is `dx_0 ∧ … ∧ dx_{4n−1}`.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{det, Matrix};
use crate::quatspace::{check_version, InducedStructure, QuaternionSpace, FORMAT_VERSION};
use crate::scalar::{cx_abs_f64, cx_negligible, cx_to_f64, i_pow, real, Cx, Scalar};

/// Index set of a monomial as a bitmask (bit `r` ⇔ `dx_r` present).
pub type Mask = u32;

pub fn mask_indices(mask: Mask) -> Vec<usize> {
    (0..32).filter(|r| mask >> r & 1 == 1).collect()
}

pub fn indices_mask(indices: &[usize]) -> Option<Mask> {
    let mut m: Mask = 0;
    for &i in indices {
        if i >= 32 || m >> i & 1 == 1 {
            return None;
        }
        m |= 1 << i;
    }
    Some(m)
}

/// Sign of `dx_a ∧ dx_b` relative to the sorted monomial, or `None` if they overlap.
pub fn wedge_sign(a: Mask, b: Mask) -> Option<i64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> j).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps % 2 == 0 { 1 } else { -1 })
}

/// All `k`-subsets of `0..d` as masks, in increasing numeric order.
pub fn subsets(d: usize, k: usize) -> Vec<Mask> {
    let mut out: Vec<Mask> = (0u64..1 << d).filter(|m| m.count_ones() as usize == k).map(|m| m as Mask).collect();
    out.sort_unstable();
    out
}

/// A homogeneous complex form with constant coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<S> {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Mask, Cx<S>>,
}

impl<S: Scalar> Form<S> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self { dim, degree, terms: BTreeMap::new() }
    }

    pub fn one(dim: usize) -> Self {
        Self::monomial(dim, 0, Cx::one())
    }

    pub fn monomial(dim: usize, mask: Mask, coef: Cx<S>) -> Self {
        let mut f = Self::zero(dim, mask.count_ones() as usize);
        f.add_term(mask, coef);
        f
    }

    /// The 1-form `Σ c_r dx_r`.
    pub fn covector(coefs: &[Cx<S>]) -> Self {
        let mut f = Self::zero(coefs.len(), 1);
        for (r, c) in coefs.iter().enumerate() {
            f.add_term(1 << r, c.clone());
        }
        f
    }

    pub fn volume(dim: usize) -> Self {
        Self::monomial(dim, full_mask(dim), Cx::one())
    }

    pub fn from_terms(dim: usize, degree: usize, terms: impl IntoIterator<Item = (Mask, Cx<S>)>) -> Result<Self> {
        let mut f = Self::zero(dim, degree);
        for (m, c) in terms {
            if m.count_ones() as usize != degree || (dim < 32 && m >> dim != 0) {
                return Err(Error::DegreeMismatch { expected: degree, found: m.count_ones() as usize });
            }
            f.add_term(m, c);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mask, &Cx<S>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coef(&self, mask: Mask) -> Cx<S> {
        self.terms.get(&mask).cloned().unwrap_or_else(Cx::zero)
    }

    pub fn add_term(&mut self, mask: Mask, coef: Cx<S>) {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        if coef.is_zero() {
            return;
        }
        match self.terms.entry(mask) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + coef;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    /// True when every coefficient is negligible for the scalar type.
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(cx_negligible)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(cx_abs_f64).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| cx_to_f64(c).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Drops coefficients that are negligible for the scalar type.
    pub fn chop(mut self) -> Self {
        self.terms.retain(|_, c| !cx_negligible(c));
        self
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "forms on different spaces");
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Cx::<S>::one())
    }

    pub fn scale(&self, s: &Cx<S>) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (m, c) in &self.terms {
            out.add_term(*m, c.clone() * s.clone());
        }
        out
    }

    pub fn scale_real(&self, s: &S) -> Self {
        self.scale(&real(s.clone()))
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, degree: self.degree, terms: self.terms.iter().map(|(m, c)| (*m, c.conj())).collect() }
    }

    /// Real part (coefficientwise).
    pub fn re(&self) -> Self {
        let terms = self.terms.iter().map(|(m, c)| (*m, real(c.re.clone())));
        Self::from_terms(self.dim, self.degree, terms).expect("same shape")
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.im.is_negligible())
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.dim, other.dim, "forms on different spaces");
        if self.degree + other.degree > self.dim {
            return Err(Error::DegreeOverflow { left: self.degree, right: other.degree, dim: self.dim });
        }
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(sign) = wedge_sign(*ma, *mb) {
                    let c = ca.clone() * cb.clone();
                    out.add_term(ma | mb, if sign < 0 { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// `self^k` (zero-th power is `1`).
    pub fn power(&self, k: usize) -> Result<Self> {
        let mut acc = Self::one(self.dim);
        for _ in 0..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// Applies the derivation extending `dx_r ↦ images[r]` (each image a 1-form).
    pub fn derive(&self, images: &[Vec<(usize, Cx<S>)>]) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (mask, c) in &self.terms {
            for r in mask_indices(*mask) {
                let rest = mask & !(1 << r);
                // Move dx_r to the front: sign (−1)^{#indices below r}.
                let lead = (mask & ((1 << r) - 1)).count_ones();
                for (s, v) in &images[r] {
                    if let Some(sign) = wedge_sign(1 << s, rest) {
                        let total = sign * if lead % 2 == 0 { 1 } else { -1 };
                        let term = c.clone() * v.clone();
                        out.add_term(rest | 1 << s, if total < 0 { -term } else { term });
                    }
                }
            }
        }
        out
    }

    /// Pullback `A^*η`, `(A^*η)(v_1, …) = η(Av_1, …)`.
    pub fn pullback(&self, a: &Matrix<S>) -> Self {
        assert_eq!(a.rows, self.dim);
        let mut out = Self::zero(self.dim, self.degree);
        let targets = subsets(self.dim, self.degree);
        for (mask, c) in &self.terms {
            let rows = mask_indices(*mask);
            for &t in &targets {
                let cols = mask_indices(t);
                let minor = Matrix::from_rows(
                    rows.iter().map(|&r| cols.iter().map(|&s| a[(r, s)].clone()).collect()).collect(),
                );
                let d = det(&minor);
                if !d.is_zero() {
                    out.add_term(t, c.clone() * real(d));
                }
            }
        }
        out
    }

    /// Group action `g·η = (g⁻¹)^*η`, given `g⁻¹`.
    pub fn act(&self, g_inverse: &Matrix<S>) -> Self {
        self.pullback(g_inverse)
    }

    /// Hodge star for the flat metric and the standard orientation.
    pub fn hodge_star(&self) -> Self {
        let full = full_mask(self.dim);
        let mut out = Self::zero(self.dim, self.dim - self.degree);
        for (m, c) in &self.terms {
            let comp = full & !m;
            let sign = wedge_sign(*m, comp).expect("disjoint");
            out.add_term(comp, if sign < 0 { -c.clone() } else { c.clone() });
        }
        out
    }

    /// Metric dual polyvector (identity on coefficients in the orthonormal basis).
    pub fn flat(&self) -> Polyvector<S> {
        Polyvector { dim: self.dim, degree: self.degree, terms: self.terms.clone() }
    }

    /// Evaluation on a tuple of real vectors: `det[dx_{i_a}(v_b)]` expansion.
    pub fn evaluate(&self, vectors: &Matrix<S>) -> Cx<S> {
        let xi = Polyvector::from_vectors(vectors);
        pairing(self, &xi).expect("matching degrees")
    }

    pub fn to_f64(&self) -> Form<f64> {
        Form { dim: self.dim, degree: self.degree, terms: self.terms.iter().map(|(m, c)| (*m, cx_to_f64(c))).collect() }
    }

    /// Coefficientwise change of scalar field.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Form<T> {
        let terms = self.terms.iter().map(|(m, c)| (*m, Complex::new(f(&c.re), f(&c.im))));
        Form::from_terms(self.dim, self.degree, terms).expect("same shape")
    }

    /// Versioned textual record `{version, n, degree, terms: [{indices, re, im}]}`.
    pub fn to_record(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(m, c)| json!({ "indices": mask_indices(*m), "re": c.re.to_json(), "im": c.im.to_json() }))
            .collect();
        json!({
            "version": FORMAT_VERSION,
            "n": self.dim / 4,
            "degree": self.degree,
            "exact": S::EXACT,
            "terms": terms,
        })
    }

    pub fn from_record(v: &Value) -> Result<Self> {
        check_version(v)?;
        let n = v["n"].as_u64().ok_or_else(|| Error::Format("missing n".into()))? as usize;
        let dim = QuaternionSpace::new(n)?.real_dim();
        let degree = v["degree"].as_u64().ok_or_else(|| Error::Format("missing degree".into()))? as usize;
        let terms = v["terms"].as_array().ok_or_else(|| Error::Format("missing terms".into()))?;
        let mut parsed = Vec::with_capacity(terms.len());
        for t in terms {
            let idx: Vec<usize> = t["indices"]
                .as_array()
                .ok_or_else(|| Error::Format("term without indices".into()))?
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| Error::Format("bad index".into())))
                .collect::<Result<_>>()?;
            if idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= dim) {
                return Err(Error::Format(format!("indices {idx:?} not strictly increasing within 0..{dim}")));
            }
            let mask = indices_mask(&idx).ok_or_else(|| Error::Format("bad indices".into()))?;
            parsed.push((mask, Complex::new(S::from_json(&t["re"])?, S::from_json(&t["im"])?)));
        }
        Self::from_terms(dim, degree, parsed)
    }
}

impl Form<f64> {
    pub fn to_scalar<S: Scalar>(&self) -> Form<S> {
        Form {
            dim: self.dim,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (*m, Complex::new(S::from_f64(c.re), S::from_f64(c.im)))).collect(),
        }
    }
}

pub fn full_mask(dim: usize) -> Mask {
    if dim == 32 {
        Mask::MAX
    } else {
        (1 << dim) - 1
    }
}

/// Coefficient of `f ∧ g` on the oriented volume form.
pub fn top_pairing<S: Scalar>(f: &Form<S>, g: &Form<S>) -> Result<Cx<S>> {
    if f.degree + g.degree != f.dim {
        return Err(Error::DegreeMismatch { expected: f.dim - f.degree, found: g.degree });
    }
    let full = full_mask(f.dim);
    let mut acc = Cx::<S>::zero();
    for (m, c) in &f.terms {
        let comp = full & !m;
        if let Some(d) = g.terms.get(&comp) {
            let sign = wedge_sign(*m, comp).expect("disjoint");
            let t = c.clone() * d.clone();
            acc = if sign < 0 { acc - t } else { acc + t };
        }
    }
    Ok(acc)
}

/// Constant polyvector over the standard basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyvector<S> {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Mask, Cx<S>>,
}

impl<S: Scalar> Polyvector<S> {
    /// `v_1 ∧ … ∧ v_k` for the columns of a real `d × k` matrix.
    pub fn from_vectors(vectors: &Matrix<S>) -> Self {
        let (d, k) = (vectors.rows, vectors.cols);
        let mut terms = BTreeMap::new();
        for s in subsets(d, k) {
            let rows = mask_indices(s);
            let minor = Matrix::from_rows(rows.iter().map(|&r| vectors.row(r).to_vec()).collect());
            let v = det(&minor);
            if !v.is_zero() {
                terms.insert(s, real(v));
            }
        }
        Self { dim: d, degree: k, terms }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mask, &Cx<S>)> {
        self.terms.iter()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| cx_to_f64(c).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: &Cx<S>) -> Self {
        Self { dim: self.dim, degree: self.degree, terms: self.terms.iter().map(|(m, c)| (*m, c.clone() * s.clone())).collect() }
    }

    /// Metric dual form.
    pub fn sharp(&self) -> Form<S> {
        Form { dim: self.dim, degree: self.degree, terms: self.terms.clone() }
    }

    pub fn to_f64(&self) -> Polyvector<f64> {
        Polyvector { dim: self.dim, degree: self.degree, terms: self.terms.iter().map(|(m, c)| (*m, cx_to_f64(c))).collect() }
    }
}

/// Determinant pairing `⟨η, v_1 ∧ … ∧ v_k⟩ = det[η_a(v_b)]`.
pub fn pairing<S: Scalar>(eta: &Form<S>, xi: &Polyvector<S>) -> Result<Cx<S>> {
    if eta.degree != xi.degree {
        return Err(Error::DegreeMismatch { expected: eta.degree, found: xi.degree });
    }
    let (small, large) = if eta.terms.len() <= xi.terms.len() { (&eta.terms, &xi.terms) } else { (&xi.terms, &eta.terms) };
    Ok(small
        .iter()
        .filter_map(|(m, c)| large.get(m).map(|d| c.clone() * d.clone()))
        .fold(Cx::<S>::zero(), |a, b| a + b))
}

/// The su(2) derivation `η ↦ −η∘L` on 1-forms, as sparse images of each `dx_r`.
///
/// `(η∘L)` for `η = dx_r` is `Σ_s L_{rs} dx_s`.
pub fn structure_images<S: Scalar>(l: &Matrix<S>) -> Vec<Vec<(usize, Cx<S>)>> {
    (0..l.rows)
        .map(|r| {
            (0..l.cols)
                .filter(|&s| !l[(r, s)].is_zero())
                .map(|s| (s, real(-l[(r, s)].clone())))
                .collect()
        })
        .collect()
}

/// Hodge components of `f` with respect to `L`, keyed by `(p, q)`.
///
/// On `Λ^{p,q}_L` the derivation `A_L` acts by `−i(p−q)`; components are the
/// eigenprojections, obtained as Lagrange polynomials in `A_L`.
pub fn bigrade<S: Scalar>(
    f: &Form<S>,
    space: &QuaternionSpace,
    l: &InducedStructure<S>,
) -> BTreeMap<(usize, usize), Form<S>> {
    let images = structure_images(&l.matrix(space));
    let k = f.degree as i64;
    let mut out = BTreeMap::new();
    for p in 0..=k {
        let q = k - p;
        let comp = eigen_component(f, &images, p - q, k);
        if !comp.is_zero() {
            out.insert((p as usize, q as usize), comp.chop());
        }
    }
    out
}

/// The `(p, q)` component of `f` for `L`.
pub fn type_component<S: Scalar>(
    f: &Form<S>,
    space: &QuaternionSpace,
    l: &InducedStructure<S>,
    p: usize,
    q: usize,
) -> Result<Form<S>> {
    if p + q != f.degree {
        return Err(Error::DegreeMismatch { expected: f.degree, found: p + q });
    }
    let images = structure_images(&l.matrix(space));
    Ok(eigen_component(f, &images, p as i64 - q as i64, f.degree as i64).chop())
}

/// Whether `f` is of pure type `(p, q)` for `L`.
pub fn is_of_type<S: Scalar>(f: &Form<S>, space: &QuaternionSpace, l: &InducedStructure<S>, p: usize, q: usize) -> bool {
    if p + q != f.degree {
        return f.is_zero();
    }
    let images = structure_images(&l.matrix(space));
    // A_L f = −i(p−q) f
    let lhs = f.derive(&images);
    let rhs = f.scale(&(-i_pow::<S>(1) * real(S::from_int(p as i64 - q as i64))));
    lhs.sub(&rhs).is_zero()
}

/// Projection onto the `A_L`-eigenvalue `−i·m` among `m ∈ {−k, −k+2, …, k}`.
fn eigen_component<S: Scalar>(f: &Form<S>, images: &[Vec<(usize, Cx<S>)>], m: i64, k: i64) -> Form<S> {
    let eig = |m: i64| -> Cx<S> { -i_pow::<S>(1) * real(S::from_int(m)) };
    let mut v = f.clone();
    let mut denom = Cx::<S>::one();
    let mut other = -k;
    while other <= k {
        if other != m {
            // (A − λ') v
            v = v.derive(images).sub(&v.scale(&eig(other)));
            denom = denom * (eig(m) - eig(other));
        }
        other += 2;
    }
    v.scale(&(Cx::<S>::one() / denom))
}

/// A complex subspace `W ⊂ R^{4n}` invariant under an induced structure,
/// carried by an orthonormal real basis.
#[derive(Clone, Debug)]
pub struct ComplexSubspace {
    pub space: QuaternionSpace,
    pub structure: InducedStructure<f64>,
    basis: Matrix<f64>,
}

/// Absolute tolerance for invariance checks on float subspaces.
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;

impl ComplexSubspace {
    /// Orthonormalizes the columns of `spanning` and checks `L`-invariance.
    pub fn new(space: QuaternionSpace, structure: InducedStructure<f64>, spanning: &Matrix<f64>) -> Result<Self> {
        if spanning.rows != space.real_dim() {
            return Err(Error::DimensionMismatch { expected: space.real_dim(), found: spanning.rows });
        }
        let basis = orthonormalize(spanning)?;
        let residual = crate::quatspace::invariance_residual(&structure.matrix(&space), &basis);
        if residual > INVARIANCE_TOLERANCE {
            return Err(Error::NotInvariant { residual });
        }
        if basis.cols % 2 != 0 {
            return Err(Error::Inconsistent("invariant subspace of odd real dimension".into()));
        }
        Ok(Self { space, structure, basis })
    }

    /// `span_R{v, Lv : v ∈ generators}`.
    pub fn from_generators(space: QuaternionSpace, structure: InducedStructure<f64>, generators: &[Vec<f64>]) -> Result<Self> {
        let l = structure.matrix(&space);
        let mut cols = Vec::new();
        for g in generators {
            cols.push(g.clone());
            cols.push(l.mul_vec(g));
        }
        Self::new(space, structure, &Matrix::from_columns(&cols))
    }

    pub fn basis(&self) -> &Matrix<f64> {
        &self.basis
    }

    pub fn complex_dim(&self) -> usize {
        self.basis.cols / 2
    }
}

/// Modified Gram–Schmidt; rejects rank-deficient input.
pub fn orthonormalize(m: &Matrix<f64>) -> Result<Matrix<f64>> {
    let rank = m.rank();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let scale = m.max_abs().max(1.0);
    for j in 0..m.cols {
        let mut v = m.column(j);
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-10 * scale {
            cols.push(v.into_iter().map(|x| x / nrm).collect());
        }
    }
    if cols.len() != rank || cols.len() != m.cols {
        return Err(Error::RankDeficient { expected: m.cols, found: cols.len().min(rank) });
    }
    Ok(Matrix::from_columns(&cols))
}

/// Volume polyvector `ξ_W` of an orthonormal basis and its dual `η_W = *(ξ_W^♯)`.
pub fn volume_data(w: &ComplexSubspace) -> (Polyvector<f64>, Form<f64>) {
    let xi = Polyvector::from_vectors(&w.basis);
    let eta = xi.sharp().hodge_star();
    (xi, eta)
}
