//! The su(2) action on forms, isotypic projectors and the lowering maps.
//!
//! `A_L` is the derivation extending `η ↦ −η∘L` on 1-forms. With this choice
//! `[A_I, A_J] = 2A_K` (cyclically), `A_L = −i(p−q)` on `Λ^{p,q}_L`, and the
//! Casimir `C = −(A_I² + A_J² + A_K²)` equals `s(s+2)` on weight `s`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_traits::One;

use crate::error::{Error, Result};
use crate::extalg::{is_of_type, mask_indices, structure_images, subsets, Form, Mask};
use crate::linalg::Matrix;
use crate::quatspace::{adapted_basis, InducedStructure, QuaternionSpace, Unit};
use crate::scalar::{factorial, imag_unit, real, Cx, Rational, Scalar};

type Images<S> = Vec<Vec<(usize, Cx<S>)>>;

/// Derivation images for the three unit structures.
fn unit_images<S: Scalar>(space: &QuaternionSpace) -> [Images<S>; 3] {
    Unit::ALL.map(|u| structure_images(&space.unit_matrix::<S>(u)))
}

/// `A_u f` for a unit structure.
pub fn generator<S: Scalar>(space: &QuaternionSpace, unit: Unit, f: &Form<S>) -> Form<S> {
    f.derive(&structure_images(&space.unit_matrix::<S>(unit)))
}

/// `A_L f` for an arbitrary induced structure.
pub fn structure_generator<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>, f: &Form<S>) -> Form<S> {
    f.derive(&structure_images(&l.matrix(space)))
}

/// `C f = −Σ A_u² f`.
pub fn casimir<S: Scalar>(space: &QuaternionSpace, f: &Form<S>) -> Form<S> {
    casimir_with(&unit_images(space), f)
}

fn casimir_with<S: Scalar>(images: &[Images<S>; 3], f: &Form<S>) -> Form<S> {
    let mut acc = Form::zero(f.dim(), f.degree());
    for im in images {
        acc = acc.sub(&f.derive(im).derive(im));
    }
    acc
}

/// Weights that can occur in degree `k`: `s ≡ k (mod 2)`, `0 ≤ s ≤ k`.
pub fn admissible_weights(k: usize) -> Vec<usize> {
    (0..=k).rev().step_by(2).collect::<Vec<_>>().into_iter().rev().collect()
}

fn casimir_value(s: usize) -> i64 {
    (s * (s + 2)) as i64
}

/// Component of `f` in the weight-`s` isotypic block.
pub fn isotypic_component<S: Scalar>(space: &QuaternionSpace, f: &Form<S>, s: usize) -> Form<S> {
    let weights = admissible_weights(f.degree());
    if !weights.contains(&s) {
        return Form::zero(f.dim(), f.degree());
    }
    let images = unit_images(space);
    let mut v = f.clone();
    let mut denom = S::one();
    for &t in &weights {
        if t != s {
            let shift = real(S::from_int(casimir_value(t)));
            v = casimir_with(&images, &v).sub(&v.scale(&shift));
            denom = denom * S::from_int(casimir_value(s) - casimir_value(t));
        }
    }
    v.scale_real(&(S::one() / denom)).chop()
}

/// All nonzero isotypic components of `f`, keyed by weight.
pub fn isotypic_split<S: Scalar>(space: &QuaternionSpace, f: &Form<S>) -> Vec<(usize, Form<S>)> {
    admissible_weights(f.degree())
        .into_iter()
        .map(|s| (s, isotypic_component(space, f, s)))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

/// `Π₊ f`, the weight-`deg f` component.
pub fn project_max<S: Scalar>(space: &QuaternionSpace, f: &Form<S>) -> Form<S> {
    isotypic_component(space, f, f.degree())
}

/// Largest weight present in degree `k`: `min(k, 4n − k)`.
pub fn top_weight(space: &QuaternionSpace, k: usize) -> usize {
    k.min(space.real_dim() - k)
}

/// Projection onto the largest weight occurring in the degree of `f`.
///
/// Agrees with [`project_max`] up to the middle degree `2n`.
pub fn project_top<S: Scalar>(space: &QuaternionSpace, f: &Form<S>) -> Form<S> {
    isotypic_component(space, f, top_weight(space, f.degree()))
}

/// Average of `f` over `SU(2)`: its trivial isotypic component.
pub fn su2_average<S: Scalar>(space: &QuaternionSpace, f: &Form<S>) -> Form<S> {
    if f.degree() % 2 == 1 {
        return Form::zero(f.dim(), f.degree());
    }
    isotypic_component(space, f, 0)
}

/// Integer matrices of `A_I, A_J, A_K` and `C` on the monomial basis of `Λ^k`.
#[derive(Clone, Debug)]
pub struct Su2Generators<S> {
    pub degree: usize,
    pub basis: Vec<Mask>,
    pub a: [Matrix<S>; 3],
    pub casimir: Matrix<S>,
}

/// Matrix of a linear map on `Λ^k`: column `j` holds the image of `basis[j]`.
fn operator_matrix<S: Scalar>(basis: &[Mask], dim: usize, op: impl Fn(&Form<S>) -> Form<S>) -> Matrix<Cx<S>> {
    let index: HashMap<Mask, usize> = basis.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut out = Matrix::zeros(basis.len(), basis.len());
    for (j, m) in basis.iter().enumerate() {
        let img = op(&Form::monomial(dim, *m, Cx::one()));
        for (mask, c) in img.terms() {
            out[(index[mask], j)] = c.clone();
        }
    }
    out
}

pub fn generators<S: Scalar>(space: &QuaternionSpace, k: usize) -> Result<Su2Generators<S>> {
    let d = space.real_dim();
    if k > d {
        return Err(Error::DegreeMismatch { expected: d, found: k });
    }
    let basis = subsets(d, k);
    let a = Unit::ALL.map(|u| {
        let images = structure_images(&space.unit_matrix::<S>(u));
        operator_matrix(&basis, d, |f| f.derive(&images)).map(|z| z.re.clone())
    });
    let sq = |m: &Matrix<S>| m.matmul(m);
    let casimir = sq(&a[0]).add(&sq(&a[1])).add(&sq(&a[2])).scale(&-S::one());
    Ok(Su2Generators { degree: k, basis, a, casimir })
}

/// One weight block of `Λ^k`.
#[derive(Clone, Debug)]
pub struct IsotypicBlock<S> {
    pub weight: usize,
    pub multiplicity: usize,
    pub projector: Matrix<S>,
}

impl<S> IsotypicBlock<S> {
    pub fn dimension(&self) -> usize {
        self.multiplicity * (self.weight + 1)
    }
}

#[derive(Clone, Debug)]
pub struct IsotypicDecomposition<S> {
    pub n: usize,
    pub degree: usize,
    pub basis: Vec<Mask>,
    pub blocks: Vec<IsotypicBlock<S>>,
}

impl<S: Scalar> IsotypicDecomposition<S> {
    /// `Π₊ = P_k` (zero matrix when weight `k` does not occur).
    pub fn max_projector(&self) -> Matrix<S> {
        self.blocks
            .iter()
            .find(|b| b.weight == self.degree)
            .map(|b| b.projector.clone())
            .unwrap_or_else(|| Matrix::zeros(self.basis.len(), self.basis.len()))
    }

    pub fn block(&self, weight: usize) -> Option<&IsotypicBlock<S>> {
        self.blocks.iter().find(|b| b.weight == weight)
    }

    /// Rows `(k, s, multiplicity, dimension)`.
    pub fn table(&self) -> Vec<[usize; 4]> {
        self.blocks.iter().map(|b| [self.degree, b.weight, b.multiplicity, b.dimension()]).collect()
    }
}

/// Exact projectors `P_s` as Lagrange polynomials in the Casimir.
pub fn isotypic<S: Scalar>(space: &QuaternionSpace, k: usize) -> Result<IsotypicDecomposition<S>> {
    let g = generators::<S>(space, k)?;
    let size = g.basis.len();
    let weights = admissible_weights(k);
    let shifted: Vec<Matrix<S>> = weights.iter().map(|&t| g.casimir.shift(&S::from_int(-casimir_value(t)))).collect();

    let product = shifted.iter().fold(Matrix::identity(size), |acc, m| acc.matmul(m));
    if !product.is_zero() {
        return Err(Error::Inconsistent(format!(
            "Casimir on degree {k} has eigenvalues outside {{s(s+2)}}: residual {:e}",
            product.max_abs()
        )));
    }

    let mut blocks = Vec::new();
    for (i, &s) in weights.iter().enumerate() {
        let mut p = Matrix::identity(size);
        let mut denom = S::one();
        for (j, &t) in weights.iter().enumerate() {
            if i != j {
                p = p.matmul(&shifted[j]);
                denom = denom * S::from_int(casimir_value(s) - casimir_value(t));
            }
        }
        let p = p.scale(&(S::one() / denom));
        let trace = p.trace().to_f64();
        let dim = trace.round() as usize;
        if (trace - dim as f64).abs() > 1e-6 || dim % (s + 1) != 0 {
            return Err(Error::Inconsistent(format!("weight {s} block has non-integral dimension {trace}")));
        }
        if dim > 0 {
            blocks.push(IsotypicBlock { weight: s, multiplicity: dim / (s + 1), projector: p });
        }
    }
    Ok(IsotypicDecomposition { n: space.n(), degree: k, basis: g.basis, blocks })
}

type ExactCache = RwLock<HashMap<(usize, usize), Arc<IsotypicDecomposition<Rational>>>>;

/// Exact decomposition of `Λ^k(H^n)`, computed once per `(n, k)`.
pub fn isotypic_exact(space: &QuaternionSpace, k: usize) -> Result<Arc<IsotypicDecomposition<Rational>>> {
    static CACHE: OnceLock<ExactCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.read().expect("cache poisoned").get(&(space.n(), k)) {
        return Ok(hit.clone());
    }
    let fresh = Arc::new(isotypic::<Rational>(space, k)?);
    Ok(cache.write().expect("cache poisoned").entry((space.n(), k)).or_insert(fresh).clone())
}

/// Multiplicities of each weight in `Λ^k(H^n)` from the character of `Λ^*`.
///
/// The Cartan element has weights `±1`, each with multiplicity `2n`, on `Λ¹`;
/// the number of `k`-subsets with total weight `w` gives the weight
/// multiplicities, and `m_s = N(s) − N(s+2)`.
pub fn multiplicities(n: usize, k: usize) -> Vec<(usize, usize)> {
    let half = 2 * n;
    let binom = |a: usize, b: usize| -> usize {
        if b > a {
            0
        } else {
            (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
        }
    };
    // weight w = plus − minus with plus + minus = k.
    let count = |w: usize| -> usize {
        if (k + w) % 2 != 0 || w > k {
            return 0;
        }
        let plus = (k + w) / 2;
        binom(half, plus) * binom(half, k - plus)
    };
    admissible_weights(k)
        .into_iter()
        .map(|s| (s, count(s) - count(s + 2)))
        .filter(|&(_, m)| m > 0)
        .collect()
}

/// The lowering operator `F_L = −(A_{L''} + i A_{L'}) / 2` for the completion `(L, L', L'')`.
///
/// `F_L` maps `Λ^{p,q}_L` to `Λ^{p−1,q+1}_L`.
pub struct Lowering<S> {
    plus: Images<S>,
    minus: Images<S>,
}

impl<S: Scalar> Lowering<S> {
    pub fn new(space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<Self> {
        let (l1, l2) = l.completion()?;
        Ok(Self { plus: structure_images(&l1.matrix(space)), minus: structure_images(&l2.matrix(space)) })
    }

    pub fn apply(&self, f: &Form<S>) -> Form<S> {
        f.derive(&self.minus).add(&f.derive(&self.plus).scale(&imag_unit())).scale_real(&S::ratio(-1, 2))
    }
}

/// `R_{p,q}(η) = p!/(p+q)! · F^q η` for `η ∈ Λ^{p+q,0}_L`.
pub fn lower<S: Scalar>(
    space: &QuaternionSpace,
    l: &InducedStructure<S>,
    eta: &Form<S>,
    p: usize,
    q: usize,
) -> Result<Form<S>> {
    if eta.degree() != p + q || !is_of_type(eta, space, l, p + q, 0) {
        return Err(Error::WrongType { p: p + q, q: 0 });
    }
    let f = Lowering::new(space, l)?;
    let mut v = eta.clone();
    for _ in 0..q {
        v = f.apply(&v);
    }
    Ok(v.scale_real(&(factorial::<S>(p) / factorial::<S>(p + q))).chop())
}

/// Wedge products `θ_P` of adapted `(1,0)`-covectors, `|P| = m`, in lexicographic order.
pub fn holomorphic_basis<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>, m: usize) -> Result<Vec<Form<S>>> {
    let ad = adapted_basis(space, l)?;
    let thetas: Vec<Form<S>> = ad.covectors.iter().map(|c| Form::covector(c)).collect();
    let mut out = Vec::new();
    for mask in subsets(thetas.len(), m) {
        let mut acc = Form::one(space.real_dim());
        for j in mask_indices(mask) {
            acc = acc.wedge(&thetas[j])?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `R = R_{p,q}^{-1} ∘ Π₊` on `Λ^{p,q}_L`, returning a form of type `(p+q, 0)`.
pub fn r_map<S: Scalar>(
    space: &QuaternionSpace,
    l: &InducedStructure<S>,
    alpha: &Form<S>,
    p: usize,
    q: usize,
) -> Result<Form<S>> {
    if alpha.degree() != p + q || !is_of_type(alpha, space, l, p, q) {
        return Err(Error::WrongType { p, q });
    }
    let target = project_max(space, alpha);
    let m = p + q;
    let basis = holomorphic_basis(space, l, m)?;
    if target.is_zero() || basis.is_empty() {
        return Ok(Form::zero(space.real_dim(), m));
    }
    let images: Vec<Form<S>> = basis.iter().map(|b| lower(space, l, b, p, q)).collect::<Result<_>>()?;
    let coefs = solve_in_span(&images, &target)?;
    let mut out = Form::zero(space.real_dim(), m);
    for (b, c) in basis.iter().zip(coefs) {
        out = out.add(&b.scale(&c));
    }
    Ok(out.chop())
}

/// Coefficients `c` with `Σ c_j spanning[j] = target`.
pub(crate) fn solve_in_span<S: Scalar>(spanning: &[Form<S>], target: &Form<S>) -> Result<Vec<Cx<S>>> {
    let mut masks: Vec<Mask> = spanning.iter().flat_map(|f| f.terms().map(|(m, _)| *m)).collect();
    masks.extend(target.terms().map(|(m, _)| *m));
    masks.sort_unstable();
    masks.dedup();
    let a = Matrix::from_rows(masks.iter().map(|m| spanning.iter().map(|f| f.coef(*m)).collect()).collect());
    let b: Vec<Cx<S>> = masks.iter().map(|m| target.coef(*m)).collect();
    if S::EXACT {
        return a.solve(&b).ok_or_else(|| Error::Singular("target outside the span".into()));
    }
    // Least squares through the normal equations; the spanning sets are small and well conditioned.
    let ah = a.transpose().map(|z| z.conj());
    let x = ah
        .matmul(&a)
        .solve(&ah.mul_vec(&b))
        .ok_or_else(|| Error::Singular("spanning set is degenerate".into()))?;
    let resid = a.mul_vec(&x).iter().zip(&b).map(|(u, v)| crate::scalar::cx_abs_f64(&(u.clone() - v.clone()))).fold(0.0, f64::max);
    if resid > 1e-8 * target.max_abs().max(1.0) {
        return Err(Error::Singular(format!("target outside the span (residual {resid:e})")));
    }
    Ok(x)
}
