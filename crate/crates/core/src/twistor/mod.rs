//! The function `ψ` on the twistor sphere, the polynomials `φ_Z`, and rational subtori of
//! flat tori.
//!
//! For an `L_0`-invariant `W` of complex dimension `n+i`, `ψ(g) = ⟨V^{L_0}, g ξ_W⟩` depends
//! only on `Ad_g L_0`, so it is sampled as the function `L ↦ ⟨V^L, ξ_W⟩` on `S^2`, with
//! the axis at `L_0`. Since `V^L` is a fixed combination of `a^α b^β c^γ`-terms, this
//! function is a homogeneous polynomial of degree `n+i`.

pub mod lattice;
pub mod poly;
pub mod sphere;
pub mod torus;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::calib::{calibration, calibration_terms, normalization};
use crate::error::{Error, Result};
use crate::extalg::{pairing, ComplexSubspace, Form, Polyvector};
use crate::linalg::Matrix;
use crate::qdc::kahler_form;
use crate::quatspace::{InducedStructure, QuaternionSpace, Unit, FORMAT_VERSION};
use crate::su2rep::project_top;

pub use poly::{fit_ascending, strict_extrema, ExtremaReport, Extremum, ExtremumKind, SpherePolynomial};
pub use sphere::{Point, Quaternion};
pub use torus::{scan_subtori, RationalSubtorus, ScanOptions, ScanReport};

use sphere::{adjoint, angle, fibonacci_grid, qconj, random_point, random_unit_quaternion, rotate_about};

/// `k` with `dim_C(W ∩ J W) = 2k`, where `J` is any structure anticommuting with the one of `W`.
pub fn intersection_rank(w: &ComplexSubspace) -> Result<usize> {
    let (j, _) = w.structure.completion()?;
    let jm = j.matrix(&w.space);
    let b = w.basis();
    let jb = jm.matmul(b);
    let mut cols: Vec<Vec<f64>> = (0..b.cols).map(|c| b.column(c)).collect();
    cols.extend((0..jb.cols).map(|c| jb.column(c)));
    let joint = nalgebra::DMatrix::from_fn(b.rows, cols.len(), |r, c| cols[c][r]);
    let rank = joint.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count();
    let common = 2 * b.cols - rank;
    if common % 4 != 0 {
        return Err(Error::Inconsistent(format!("W ∩ JW has real dimension {common}, not a multiple of 4")));
    }
    let k = common / 4;
    let n = w.space.n();
    let i = w.complex_dim().saturating_sub(n);
    if 2 * k < 2 * i {
        return Err(Error::Inconsistent(format!("dim_C(W ∩ JW) = {} is below 2i = {}", 2 * k, 2 * i)));
    }
    Ok(k)
}

/// Volume polyvector of `W` for its orthonormal basis, oriented so that `ω_L^m / m!` is positive on it.
pub fn oriented_volume(w: &ComplexSubspace) -> Result<Polyvector<f64>> {
    let xi = Polyvector::from_vectors(w.basis());
    let m = w.complex_dim();
    let kahler = kahler_form(&w.space, &w.structure).power(m)?;
    let s = pairing(&kahler, &xi)?.re;
    if s.abs() < 1e-9 {
        return Err(Error::Inconsistent("Kähler power vanishes on an invariant subspace".into()));
    }
    Ok(if s > 0.0 { xi } else { xi.scale(&num_complex::Complex::new(-1.0, 0.0)) })
}

/// `L ↦ ⟨V^L, ξ⟩` as a homogeneous polynomial in `(a, b, c)`.
pub fn pairing_polynomial(space: &QuaternionSpace, i: usize, xi: &Polyvector<f64>) -> Result<SpherePolynomial> {
    let mut terms = Vec::new();
    for (e, f) in calibration_terms(space, i)? {
        terms.push((e, pairing(&f, xi)?.re));
    }
    SpherePolynomial::new(space.n() + i, terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    IdenticallyZero,
    StrictExtremumAtAxis,
    Other,
}

impl Classification {
    pub fn tag(self) -> &'static str {
        match self {
            Classification::IdenticallyZero => "identically_zero",
            Classification::StrictExtremumAtAxis => "strict_extremum_at_axis",
            Classification::Other => "other",
        }
    }
}

/// Thresholds for the dichotomy.
pub const ZERO_TOLERANCE: f64 = 1e-12;
pub const EXTREMUM_MARGIN: f64 = 1e-10;
/// Angular radius of the punctured cap around the axis.
pub const CAP_RADIUS: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Clone, Debug)]
pub struct SphereSample {
    pub axis: Point,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub classification: Classification,
    pub max_abs: f64,
    /// `|V^{L_0}| · |ξ_W|`, an a priori bound on `|ψ|`.
    pub bound: f64,
    /// Signed gap between the axis value and the nearest cap value (positive for a strict extremum).
    pub margin: f64,
    pub invariance_residual: f64,
}

impl SphereSample {
    pub fn to_record(&self) -> Value {
        json!({
            "version": FORMAT_VERSION,
            "axis": self.axis,
            "grid": self.points.len(),
            "classification": self.classification.tag(),
            "max_abs": self.max_abs,
            "bound": self.bound,
            "margin": self.margin,
            "zero_tolerance": ZERO_TOLERANCE,
            "extremum_margin": EXTREMUM_MARGIN,
            "cap_radius": CAP_RADIUS,
            "invariance_residual": self.invariance_residual,
            "axis_value": self.values[0],
        })
    }
}

/// Samples `ψ` on a Fibonacci grid of `grid` points about the axis of `W` and classifies it.
pub fn psi(w: &ComplexSubspace, grid: usize) -> Result<SphereSample> {
    let space = w.space;
    let i = w
        .complex_dim()
        .checked_sub(space.n())
        .ok_or_else(|| Error::Invalid(format!("dim_C W = {} is below n = {}", w.complex_dim(), space.n())))?;
    let xi = oriented_volume(w)?;
    let p = pairing_polynomial(&space, i, &xi)?;
    let axis = *w.structure.triple();
    let points = fibonacci_grid(grid, &axis);
    let values: Vec<f64> = points.par_iter().map(|x| p.eval(x)).collect();
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let v_axis = calibration::<f64>(&space, &w.structure, i)?;
    let bound = v_axis.form.norm() * xi.norm();
    let centre = values[0];
    let cap: Vec<f64> = points.iter().zip(&values).skip(2).filter(|(x, _)| angle(x, &axis) <= CAP_RADIUS).map(|(_, v)| *v).collect();
    let below = cap.iter().fold(f64::INFINITY, |m, v| m.min(centre - v));
    let above = cap.iter().fold(f64::INFINITY, |m, v| m.min(v - centre));
    let margin = below.max(above);
    let invariance_residual = points
        .iter()
        .take(256)
        .map(|x| (p.eval(&rotate_about(&axis, 0.9, x)) - p.eval(x)).abs())
        .fold(0.0, f64::max);
    let classification = if max_abs <= ZERO_TOLERANCE * bound {
        Classification::IdenticallyZero
    } else if margin >= EXTREMUM_MARGIN * max_abs {
        Classification::StrictExtremumAtAxis
    } else {
        Classification::Other
    };
    Ok(SphereSample { axis, points, values, classification, max_abs, bound, margin, invariance_residual })
}

/// `V^L` computed from scratch: normalization times the top-weight part of `ω_L^{n+i}`.
pub fn direct_calibration(space: &QuaternionSpace, l: &InducedStructure<f64>, i: usize) -> Result<Form<f64>> {
    let omega = kahler_form(space, l).power(space.n() + i)?;
    Ok(project_top(space, &omega).scale_real(&normalization(space, i)?))
}

/// Samples `L ↦ ⟨V^L, ξ_Z⟩` with independently computed `V^L` and fits the
/// lowest-degree homogeneous polynomial within `tol`, trying `n+i, n+i+2, …, 2(n+i)`.
pub fn phi_fit(space: &QuaternionSpace, xi: &Polyvector<f64>, i: usize, grid: usize, tol: f64) -> Result<SpherePolynomial> {
    let m = space.n() + i;
    if xi.degree() != 2 * m {
        return Err(Error::DegreeMismatch { expected: 2 * m, found: xi.degree() });
    }
    let points = fibonacci_grid(grid, &[0.0, 0.0, 1.0]);
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| {
            let l = InducedStructure::from_array(*x)?;
            Ok(pairing(&direct_calibration(space, &l, i)?, xi)?.re)
        })
        .collect::<Result<_>>()?;
    fit_ascending(&points, &values, m, 2 * m, tol)
}

/// Largest `|⟨V^L, gξ⟩ − ⟨V^{Ad_g L}, ξ⟩|` over random `(g, L, ξ)`.
pub fn equivariance_residual(space: &QuaternionSpace, i: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = space.real_dim();
    let p = 2 * (space.n() + i);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let g = random_unit_quaternion(&mut rng);
        let l = random_point(&mut rng);
        let frame = Matrix::from_rows((0..d).map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect()).collect());
        let gm = space.quaternion_matrix(&g);
        let lhs = pairing(&calibration::<f64>(space, &InducedStructure::from_array(l)?, i)?.form, &Polyvector::from_vectors(&gm.matmul(&frame)))?;
        let rhs = pairing(&calibration::<f64>(space, &InducedStructure::from_array(adjoint(&g, &l))?, i)?.form, &Polyvector::from_vectors(&frame))?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// A subspace of the dichotomy catalog.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub label: String,
    pub subspace: ComplexSubspace,
    /// `k` by construction.
    pub designed_k: usize,
}

/// The two coordinate `u`-complex lines inside quaternionic line `l`, as index pairs.
fn coordinate_lines(space: &QuaternionSpace, u: Unit) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for l in 0..space.n() {
        for r in [4 * l, 4 * l + 1, 4 * l + 2, 4 * l + 3] {
            let (s, _) = space.apply_unit_basis(u, r);
            if r < s {
                out.push([r, s]);
            }
        }
    }
    out
}

fn unit_vector(d: usize, r: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[r] = 1.0;
    v
}

/// Every coordinate-aligned subspace of complex dimension `n+i` invariant under one of `I, J, K`.
pub fn coordinate_catalog(space: &QuaternionSpace, i: usize) -> Result<Vec<CatalogEntry>> {
    let m = space.n() + i;
    let d = space.real_dim();
    let mut out = Vec::new();
    for u in Unit::ALL {
        let lines = coordinate_lines(space, u);
        let structure = InducedStructure::unit(u);
        for mask in 0u32..(1 << lines.len()) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let chosen: Vec<usize> = (0..lines.len()).filter(|&k| mask & (1 << k) != 0).collect();
            let cols: Vec<Vec<f64>> = chosen.iter().flat_map(|&k| lines[k].map(|r| unit_vector(d, r))).collect();
            let subspace = ComplexSubspace::new(*space, structure.clone(), &Matrix::from_columns(&cols))?;
            let designed_k = (0..space.n()).filter(|l| chosen.contains(&(2 * l)) && chosen.contains(&(2 * l + 1))).count();
            out.push(CatalogEntry { label: format!("{u:?}{chosen:?}"), subspace, designed_k });
        }
    }
    Ok(out)
}

/// Right multiplication by `q` on one quaternionic line; commutes with `I, J, K`.
fn right_multiplication(q: &Quaternion) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (r, col) in (0..4).map(|r| {
        let mut e = [0.0; 4];
        e[r] = 1.0;
        (r, sphere::qmul(&e, q))
    }) {
        for s in 0..4 {
            m[s][r] = col[s];
        }
    }
    m
}

/// A random `GL(n, H)` element acting on `R^{4n}`.
fn random_quaternionic_map(space: &QuaternionSpace, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let n = space.n();
    let mut g = Matrix::zeros(4 * n, 4 * n);
    for a in 0..n {
        for b in 0..n {
            let q: Quaternion = std::array::from_fn(|_| StandardNormal.sample(rng));
            let block = right_multiplication(&q);
            for r in 0..4 {
                for s in 0..4 {
                    g[(4 * a + r, 4 * b + s)] = block[r][s];
                }
            }
        }
    }
    g
}

/// Random subspaces of complex dimension `n+i` with prescribed `k`, cycling through
/// `k = i, …, ⌊(n+i)/2⌋`, each invariant under a random induced structure.
pub fn random_catalog(space: &QuaternionSpace, i: usize, count: usize, seed: u64) -> Result<Vec<CatalogEntry>> {
    let n = space.n();
    let m = n + i;
    let ks: Vec<usize> = (i..=m / 2).filter(|k| m - 2 * k <= n - k).collect();
    if ks.is_empty() {
        return Err(Error::Invalid(format!("no admissible k for n = {n}, i = {i}")));
    }
    let d = space.real_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let k = ks[t % ks.len()];
        // k full quaternionic lines, then single I-lines from the next m − 2k lines.
        let mut cols = Vec::new();
        for l in 0..k {
            cols.extend((0..4).map(|r| unit_vector(d, 4 * l + r)));
        }
        for l in k..k + (m - 2 * k) {
            cols.extend([unit_vector(d, 4 * l), unit_vector(d, 4 * l + 1)]);
        }
        let g = random_unit_quaternion(&mut rng);
        let map = space.quaternion_matrix(&g).matmul(&random_quaternionic_map(space, &mut rng));
        let image = map.matmul(&Matrix::from_columns(&cols));
        let structure = InducedStructure::from_array(adjoint(&qconj(&g), &[1.0, 0.0, 0.0]))?;
        let subspace = ComplexSubspace::new(*space, structure, &image)?;
        out.push(CatalogEntry { label: format!("random#{t}"), subspace, designed_k: k });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> QuaternionSpace {
        QuaternionSpace::new(n).unwrap()
    }

    fn span(space: QuaternionSpace, u: Unit, cols: &[Vec<f64>]) -> ComplexSubspace {
        ComplexSubspace::new(space, InducedStructure::unit(u), &Matrix::from_columns(cols)).unwrap()
    }

    #[test]
    fn intersection_rank_examples() {
        let h2 = space(2);
        let e = |r| unit_vector(8, r);
        // A quaternionic line.
        assert_eq!(intersection_rank(&span(h2, Unit::I, &[e(0), e(1), e(2), e(3)])).unwrap(), 1);
        // A complex line in H.
        assert_eq!(intersection_rank(&span(space(1), Unit::I, &[unit_vector(4, 0), unit_vector(4, 1)])).unwrap(), 0);
        // A quaternionic line plus a complex line.
        assert_eq!(intersection_rank(&span(h2, Unit::I, &[e(0), e(1), e(2), e(3), e(4), e(5)])).unwrap(), 1);
    }

    #[test]
    fn non_invariant_subspace_is_rejected() {
        let h1 = space(1);
        let r = ComplexSubspace::new(h1, InducedStructure::unit(Unit::I), &Matrix::from_columns(&[unit_vector(4, 0), unit_vector(4, 2)]));
        assert!(r.is_err());
    }

    #[test]
    fn catalog_sizes() {
        // Three units, C(2n, n+i) coordinate choices each.
        assert_eq!(coordinate_catalog(&space(1), 0).unwrap().len(), 6);
        assert_eq!(coordinate_catalog(&space(2), 0).unwrap().len(), 18);
        assert_eq!(coordinate_catalog(&space(2), 1).unwrap().len(), 12);
    }

    #[test]
    fn random_catalog_has_designed_rank() {
        for (n, i) in [(1, 0), (2, 0), (2, 1)] {
            for entry in random_catalog(&space(n), i, 6, 3).unwrap() {
                assert_eq!(intersection_rank(&entry.subspace).unwrap(), entry.designed_k, "{}", entry.label);
            }
        }
    }

    #[test]
    fn right_multiplication_commutes_with_units() {
        let h = space(1);
        let q = [0.3, -1.2, 0.7, 2.0];
        let b = right_multiplication(&q);
        let rm = Matrix::from_rows(b.iter().map(|r| r.to_vec()).collect());
        for u in Unit::ALL {
            let um = h.unit_matrix::<f64>(u);
            assert!(rm.matmul(&um).sub(&um.matmul(&rm)).max_abs() < 1e-14);
        }
    }
}
