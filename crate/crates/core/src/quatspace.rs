//! The flat quaternionic model space `H^n`, its induced complex structures
//! and adapted covector bases.
//!
//! Coordinates are ordered `(x, Ix, Jx, Kx)` on each quaternionic line and
//! `I, J, K` act by left multiplication, so all three are signed
//! permutation matrices and every downstream computation over rationals is
//! exact.

use num_complex::Complex;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{imag_unit, real, Cx, Scalar};

/// Schema version of serialized spaces, structures, forms and reports.
pub const FORMAT_VERSION: u32 = 1;

/// Validation tolerance for user-supplied unit triples.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// One of the three imaginary quaternion units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Unit {
    I,
    J,
    K,
}

impl Unit {
    pub const ALL: [Unit; 3] = [Unit::I, Unit::J, Unit::K];

    /// Image of basis vector `r` (within one quaternionic line) as `(index, sign)`.
    fn act(self, r: usize) -> (usize, i64) {
        const I: [(usize, i64); 4] = [(1, 1), (0, -1), (3, 1), (2, -1)];
        const J: [(usize, i64); 4] = [(2, 1), (3, -1), (0, -1), (1, 1)];
        const K: [(usize, i64); 4] = [(3, 1), (2, 1), (1, -1), (0, -1)];
        match self {
            Unit::I => I[r],
            Unit::J => J[r],
            Unit::K => K[r],
        }
    }

    pub fn triple<S: Scalar>(self) -> [S; 3] {
        let mut t = [S::zero(), S::zero(), S::zero()];
        t[self as usize] = S::one();
        t
    }
}

/// `H^n` with its standard hypercomplex structure and flat metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuaternionSpace {
    n: usize,
}

impl QuaternionSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if 4 * n > 32 {
            return Err(Error::Invalid(format!("n = {n} exceeds the supported real dimension 32")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        4 * self.n
    }

    /// `unit · e_r` as `(index, sign)`.
    pub fn apply_unit_basis(&self, unit: Unit, r: usize) -> (usize, i64) {
        let line = r / 4;
        let (t, s) = unit.act(r % 4);
        (4 * line + t, s)
    }

    /// Matrix of `I`, `J` or `K` in the standard basis (columns are images).
    pub fn unit_matrix<S: Scalar>(&self, unit: Unit) -> Matrix<S> {
        let d = self.real_dim();
        let mut m = Matrix::zeros(d, d);
        for r in 0..d {
            let (t, s) = self.apply_unit_basis(unit, r);
            m[(t, r)] = S::from_int(s);
        }
        m
    }

    /// Matrix of `aI + bJ + cK` for an arbitrary (not necessarily unit) triple.
    pub fn combination<S: Scalar>(&self, triple: &[S; 3]) -> Matrix<S> {
        let d = self.real_dim();
        let mut m: Matrix<S> = Matrix::zeros(d, d);
        for (unit, coef) in Unit::ALL.iter().zip(triple) {
            if coef.is_zero() {
                continue;
            }
            for r in 0..d {
                let (t, s) = self.apply_unit_basis(*unit, r);
                m[(t, r)] = m[(t, r)].clone() + coef.clone() * S::from_int(s);
            }
        }
        m
    }

    /// The flat metric: identity in the standard basis.
    pub fn metric<S: Scalar>(&self) -> Matrix<S> {
        Matrix::identity(self.real_dim())
    }

    /// Left multiplication by the unit quaternion `q0 + q1 i + q2 j + q3 k`.
    pub fn quaternion_matrix<S: Scalar>(&self, q: &[S; 4]) -> Matrix<S> {
        let im = [q[1].clone(), q[2].clone(), q[3].clone()];
        self.combination(&im).shift(&q[0])
    }

    pub fn to_record(&self) -> Value {
        json!({ "version": FORMAT_VERSION, "n": self.n })
    }
}

/// An induced complex structure `L = aI + bJ + cK` with `a² + b² + c² = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedStructure<S> {
    triple: [S; 3],
}

impl<S: Scalar> InducedStructure<S> {
    pub fn new(a: S, b: S, c: S) -> Result<Self> {
        let norm = a.clone() * a.clone() + b.clone() * b.clone() + c.clone() * c.clone();
        let defect = (norm - S::one()).to_f64().abs();
        let ok = if S::EXACT { defect == 0.0 } else { defect <= UNIT_TOLERANCE };
        if !ok {
            return Err(Error::NotUnit { defect });
        }
        Ok(Self { triple: [a, b, c] })
    }

    pub fn unit(u: Unit) -> Self {
        Self { triple: u.triple() }
    }

    pub fn triple(&self) -> &[S; 3] {
        &self.triple
    }

    pub fn matrix(&self, space: &QuaternionSpace) -> Matrix<S> {
        space.combination(&self.triple)
    }

    pub fn neg(&self) -> Self {
        Self { triple: self.triple.clone().map(|x| -x) }
    }

    /// A right-handed orthonormal completion `(L', L'')` with `L·L' = L''`.
    ///
    /// Coordinate axes complete cyclically (`I → (J, K)`); other points need
    /// a square root and fail for exact scalars when it is irrational.
    pub fn completion(&self) -> Result<(Self, Self)> {
        let t = &self.triple;
        for (k, _) in Unit::ALL.iter().enumerate() {
            let others_zero = (0..3).filter(|&j| j != k).all(|j| t[j].is_zero());
            if others_zero && (t[k].is_one() || (-t[k].clone()).is_one()) {
                let s = t[k].clone();
                let mut p = [S::zero(), S::zero(), S::zero()];
                let mut q = [S::zero(), S::zero(), S::zero()];
                p[(k + 1) % 3] = S::one();
                q[(k + 2) % 3] = s;
                return Ok((Self { triple: p }, Self { triple: q }));
            }
        }
        // Axis least aligned with L, Gram–Schmidt, then cross product.
        let axis = (0..3)
            .min_by(|&i, &j| t[i].to_f64().abs().total_cmp(&t[j].to_f64().abs()))
            .expect("three axes");
        let mut e = [S::zero(), S::zero(), S::zero()];
        e[axis] = S::one();
        let dot = t[axis].clone();
        let raw: [S; 3] = std::array::from_fn(|i| e[i].clone() - dot.clone() * t[i].clone());
        let nsq = raw.iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone());
        let norm = nsq
            .sqrt_opt()
            .ok_or_else(|| Error::NotRepresentable(format!("normalizing a completion of {:?}", self.triple)))?;
        let p: [S; 3] = raw.map(|x| x / norm.clone());
        let q = cross(t, &p);
        Ok((Self { triple: p }, Self { triple: q }))
    }

    pub fn to_record(&self, space: &QuaternionSpace) -> Value {
        json!({
            "version": FORMAT_VERSION,
            "n": space.n(),
            "triple": self.triple.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_record(v: &Value) -> Result<(QuaternionSpace, Self)> {
        check_version(v)?;
        let n = v["n"].as_u64().ok_or_else(|| Error::Format("missing n".into()))? as usize;
        let t = v["triple"]
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| Error::Format("triple must have three entries".into()))?;
        let space = QuaternionSpace::new(n)?;
        let l = Self::new(S::from_json(&t[0])?, S::from_json(&t[1])?, S::from_json(&t[2])?)?;
        Ok((space, l))
    }
}

impl InducedStructure<f64> {
    /// Parses `"a,b,c"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad triple {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(Error::Format(format!("expected a,b,c, got {s:?}"))),
        }
    }

    pub fn from_array(t: [f64; 3]) -> Result<Self> {
        Self::new(t[0], t[1], t[2])
    }
}

pub(crate) fn check_version(v: &Value) -> Result<()> {
    match v["version"].as_u64() {
        Some(x) if x == FORMAT_VERSION as u64 => Ok(()),
        other => Err(Error::Format(format!("unsupported version {other:?}"))),
    }
}

pub fn cross<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

/// Action of an invertible real operator `A` on covector coefficients:
/// `(A·η)(v) = η(A⁻¹v)`. For `A` in `{I, J, K}` (and any unit `L`) `A⁻¹ = −A`.
pub fn act_on_covector<S: Scalar>(a_inverse: &Matrix<S>, eta: &[Cx<S>]) -> Vec<Cx<S>> {
    // (η∘A⁻¹)_s = Σ_r η_r (A⁻¹)_{rs}
    let d = eta.len();
    (0..d)
        .map(|s| {
            (0..d).fold(Cx::<S>::zero(), |acc, r| {
                let m = &a_inverse[(r, s)];
                if m.is_zero() || eta[r].is_zero() {
                    acc
                } else {
                    acc + eta[r].clone() * real(m.clone())
                }
            })
        })
        .collect()
}

/// Orthogonal basis of `Λ^{1,0}_L` in pairs `(e_j*, conj(L'·e_j*))`.
#[derive(Clone, Debug)]
pub struct AdaptedBasis<S> {
    /// Covector coefficient vectors in the real `dx` basis, ordered
    /// `e_1*, Jē_1*, e_2*, Jē_2*, …`.
    pub covectors: Vec<Vec<Cx<S>>>,
    /// Hermitian squared norms; all ones for float scalars.
    pub norms_sq: Vec<S>,
}

/// Hermitian pairing `⟨u, v⟩ = Σ u_r v̄_r`.
pub fn hermitian<S: Scalar>(u: &[Cx<S>], v: &[Cx<S>]) -> Cx<S> {
    u.iter().zip(v).fold(Cx::<S>::zero(), |acc, (a, b)| acc + a.clone() * b.conj())
}

pub fn adapted_basis<S: Scalar>(space: &QuaternionSpace, l: &InducedStructure<S>) -> Result<AdaptedBasis<S>> {
    let d = space.real_dim();
    let lm = l.matrix(space);
    // η ∈ Λ^{1,0}_L  ⇔  η∘L = iη  ⇔  Lᵀc = ic.
    let mut sys: Matrix<Cx<S>> = lm.transpose().map(|x| real(x.clone()));
    sys = sys.shift(&(-imag_unit::<S>()));
    let eigen = sys.nullspace();
    if eigen.len() != 2 * space.n() {
        return Err(Error::Inconsistent(format!(
            "+i eigenspace of L has dimension {}, expected {}",
            eigen.len(),
            2 * space.n()
        )));
    }
    let (lp, _) = l.completion()?;
    // (L'·η) = η∘L'⁻¹ = −η∘L'
    let lp_inv = lp.matrix(space).scale(&-S::one());
    let mut covectors: Vec<Vec<Cx<S>>> = Vec::new();
    let mut norms_sq: Vec<S> = Vec::new();
    let project_out = |v: &mut Vec<Cx<S>>, basis: &[Vec<Cx<S>>], norms: &[S]| {
        for (b, nb) in basis.iter().zip(norms) {
            let coef = hermitian(v, b) / real(nb.clone());
            for (x, y) in v.iter_mut().zip(b) {
                *x = x.clone() - coef.clone() * y.clone();
            }
        }
    };
    for cand in eigen {
        if covectors.len() == 2 * space.n() {
            break;
        }
        let mut e = cand;
        project_out(&mut e, &covectors, &norms_sq);
        let ne = hermitian(&e, &e).re;
        if ne.is_negligible() {
            continue;
        }
        let partner: Vec<Cx<S>> = act_on_covector(&lp_inv, &e).into_iter().map(|z| z.conj()).collect();
        let np = hermitian(&partner, &partner).re;
        covectors.push(e);
        norms_sq.push(ne);
        covectors.push(partner);
        norms_sq.push(np);
    }
    if covectors.len() != 2 * space.n() {
        return Err(Error::RankDeficient { expected: 2 * space.n(), found: covectors.len() });
    }
    if !S::EXACT {
        for (c, nsq) in covectors.iter_mut().zip(norms_sq.iter_mut()) {
            let norm = nsq.sqrt_opt().expect("positive norm");
            for x in c.iter_mut() {
                *x = x.clone() / real(norm.clone());
            }
            *nsq = S::one();
        }
    }
    debug_assert!(covectors.iter().all(|c| c.len() == d));
    Ok(AdaptedBasis { covectors, norms_sq })
}

/// Hermitian Gram matrix of the adapted basis.
pub fn gram<S: Scalar>(basis: &AdaptedBasis<S>) -> Matrix<Cx<S>> {
    let m = basis.covectors.len();
    let mut g = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = hermitian(&basis.covectors[i], &basis.covectors[j]);
        }
    }
    g
}

/// Complex conjugate of a coefficient vector.
pub fn conj_vec<S: Scalar>(v: &[Cx<S>]) -> Vec<Cx<S>> {
    v.iter().map(Complex::conj).collect()
}

/// Whether `L` preserves the column span of `basis` (real `d × m` matrix);
/// returns the residual of projecting `L·basis` off the span.
pub fn invariance_residual(l: &Matrix<f64>, basis: &Matrix<f64>) -> f64 {
    let image = l.matmul(basis);
    // Residual: distance of each image column from span(basis), via least squares.
    let gram = basis.transpose().matmul(basis);
    let Some(ginv) = gram.inverse() else { return f64::INFINITY };
    let coef = ginv.matmul(&basis.transpose().matmul(&image));
    let proj = basis.matmul(&coef);
    image.sub(&proj).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_traits::One;

    #[test]
    fn quaternion_relations_exact() {
        for n in 1..=3 {
            let h = QuaternionSpace::new(n).unwrap();
            let i: Matrix<Rational> = h.unit_matrix(Unit::I);
            let j = h.unit_matrix(Unit::J);
            let k = h.unit_matrix(Unit::K);
            let minus_id = Matrix::<Rational>::identity(4 * n).scale(&-Rational::one());
            assert_eq!(i.matmul(&i), minus_id);
            assert_eq!(j.matmul(&j), minus_id);
            assert_eq!(k.matmul(&k), minus_id);
            assert_eq!(i.matmul(&j), k);
            assert_eq!(j.matmul(&i), k.scale(&-Rational::one()));
        }
    }

    #[test]
    fn make_space_examples() {
        assert!(matches!(QuaternionSpace::new(0), Err(Error::ZeroDimension)));
        let h = QuaternionSpace::new(3).unwrap();
        assert_eq!(h.real_dim(), 12);
        assert_eq!(h.metric::<Rational>(), Matrix::identity(12));
    }

    #[test]
    fn induced_examples() {
        let h = QuaternionSpace::new(1).unwrap();
        let i = InducedStructure::<Rational>::unit(Unit::I);
        assert_eq!(i.matrix(&h), h.unit_matrix(Unit::I));
        let k = InducedStructure::new(Rational::zero(), Rational::zero(), Rational::one()).unwrap();
        assert_eq!(k.matrix(&h), h.unit_matrix(Unit::K));
        let s = 1.0 / 3f64.sqrt();
        let l = InducedStructure::new(s, s, s).unwrap().matrix(&h);
        assert!(l.matmul(&l).add(&Matrix::identity(4)).max_abs() < 1e-12);
        match InducedStructure::new(1.0, 0.1, 0.0) {
            Err(Error::NotUnit { defect }) => assert!((defect - 0.01).abs() < 1e-12),
            other => panic!("expected NotUnit, got {other:?}"),
        }
    }

    #[test]
    fn completion_is_right_handed() {
        let l = InducedStructure::from_array([0.6, 0.0, 0.8]).unwrap();
        let (p, q) = l.completion().unwrap();
        let c = cross(l.triple(), p.triple());
        for k in 0..3 {
            assert!((c[k] - q.triple()[k]).abs() < 1e-14);
        }
        let (p, q) = InducedStructure::<Rational>::unit(Unit::J).completion().unwrap();
        assert_eq!(p, InducedStructure::unit(Unit::K));
        assert_eq!(q, InducedStructure::unit(Unit::I));
    }

    #[test]
    fn adapted_basis_orthonormal_float() {
        for n in 1..=2 {
            let h = QuaternionSpace::new(n).unwrap();
            for u in Unit::ALL {
                let b = adapted_basis(&h, &InducedStructure::<f64>::unit(u)).unwrap();
                let g = gram(&b);
                assert!(g.sub(&Matrix::identity(2 * n)).max_abs() < 1e-12, "{u:?} n={n}");
            }
        }
    }

    #[test]
    fn adapted_basis_lies_in_plus_i_eigenspace() {
        let h = QuaternionSpace::new(1).unwrap();
        let l = InducedStructure::<Rational>::unit(Unit::J);
        let b = adapted_basis(&h, &l).unwrap();
        let lt: Matrix<Cx<Rational>> = l.matrix(&h).transpose().map(|x| real(x.clone()));
        for c in &b.covectors {
            let img = lt.mul_vec(c);
            let expected: Vec<_> = c.iter().map(|z| z.clone() * imag_unit::<Rational>()).collect();
            assert_eq!(img, expected);
        }
    }
}
