//! Homogeneous polynomials on `R^3` restricted to `S^2`: fitting and strict extrema.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::sphere::{angle, cross, dot, fibonacci_grid, normalize, rotate_about, tangent_frame, Point};
use crate::error::{Error, Result};
use crate::quatspace::FORMAT_VERSION;

/// Exponents `(α, β, γ)` with `α + β + γ = d`, `α` descending, then `β` descending.
pub fn monomials(d: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity((d + 1) * (d + 2) / 2);
    for a in (0..=d).rev() {
        for b in (0..=d - a).rev() {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

fn powi(x: f64, k: usize) -> f64 {
    x.powi(k as i32)
}

fn monomial_value(e: &[usize; 3], p: &Point) -> f64 {
    powi(p[0], e[0]) * powi(p[1], e[1]) * powi(p[2], e[2])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpherePolynomial {
    pub degree: usize,
    pub terms: Vec<([usize; 3], f64)>,
    /// Largest deviation from the samples it was fitted to; zero when built directly.
    pub residual: f64,
}

impl SpherePolynomial {
    pub fn new(degree: usize, terms: Vec<([usize; 3], f64)>) -> Result<Self> {
        if let Some((e, _)) = terms.iter().find(|(e, _)| e.iter().sum::<usize>() != degree) {
            return Err(Error::Invalid(format!("monomial {e:?} is not of degree {degree}")));
        }
        Ok(Self { degree, terms, residual: 0.0 })
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial_value(e, p)).sum()
    }

    /// Euclidean gradient in `R^3`.
    pub fn gradient(&self, p: &Point) -> Point {
        let mut g = [0.0; 3];
        for (e, c) in &self.terms {
            for r in 0..3 {
                if e[r] == 0 {
                    continue;
                }
                let mut d = *e;
                d[r] -= 1;
                g[r] += c * e[r] as f64 * monomial_value(&d, p);
            }
        }
        g
    }

    /// Euclidean Hessian in `R^3`.
    pub fn hessian(&self, p: &Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (e, c) in &self.terms {
            for r in 0..3 {
                for s in 0..3 {
                    let mut d = *e;
                    let f1 = d[r] as f64;
                    if d[r] == 0 {
                        continue;
                    }
                    d[r] -= 1;
                    let f2 = d[s] as f64;
                    if d[s] == 0 {
                        continue;
                    }
                    d[s] -= 1;
                    h[r][s] += c * f1 * f2 * monomial_value(&d, p);
                }
            }
        }
        h
    }

    /// Gradient of the restriction to the sphere at a unit `p`.
    pub fn sphere_gradient(&self, p: &Point) -> Point {
        let g = self.gradient(p);
        let radial = dot(&g, p);
        [g[0] - radial * p[0], g[1] - radial * p[1], g[2] - radial * p[2]]
    }

    /// Riemannian Hessian of the restriction in the tangent basis `(u, v)` at `p`.
    pub fn sphere_hessian(&self, p: &Point, u: &Point, v: &Point) -> Matrix2<f64> {
        let h = self.hessian(p);
        let radial = dot(&self.gradient(p), p);
        let form = |x: &Point, y: &Point| (0..3).map(|r| (0..3).map(|s| x[r] * h[r][s] * y[s]).sum::<f64>()).sum::<f64>();
        Matrix2::new(form(u, u) - radial, form(u, v), form(v, u), form(v, v) - radial)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.iter().all(|(_, c)| c.abs() <= tol)
    }

    /// `{version, degree, terms: [{exponents, coef}], residual}`.
    pub fn to_record(&self) -> Value {
        let terms: Vec<Value> = self.terms.iter().map(|(e, c)| json!({ "exponents": e, "coef": c })).collect();
        json!({ "version": FORMAT_VERSION, "degree": self.degree, "terms": terms, "residual": self.residual })
    }
}

/// Least-squares homogeneous fit of fixed degree; `residual` is the largest sample deviation.
pub fn fit_degree(points: &[Point], values: &[f64], degree: usize) -> Result<SpherePolynomial> {
    let basis = monomials(degree);
    if points.len() < basis.len() {
        return Err(Error::Invalid(format!("{} samples cannot determine {} coefficients", points.len(), basis.len())));
    }
    let a = DMatrix::from_fn(points.len(), basis.len(), |r, c| monomial_value(&basis[c], &points[r]));
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-13).map_err(|e| Error::Singular(e.to_string()))?;
    let fitted = &a * &x;
    let residual = (0..points.len()).map(|r| (fitted[r] - values[r]).abs()).fold(0.0, f64::max);
    let terms = basis.into_iter().zip(x.iter().copied()).collect();
    Ok(SpherePolynomial { degree, terms, residual })
}

/// Tries degrees `lo, lo+2, …, hi` and returns the first fit within `tol`.
pub fn fit_ascending(points: &[Point], values: &[f64], lo: usize, hi: usize, tol: f64) -> Result<SpherePolynomial> {
    let mut best = f64::INFINITY;
    let mut d = lo;
    while d <= hi {
        let p = fit_degree(points, values, d)?;
        if p.residual <= tol {
            return Ok(p);
        }
        best = best.min(p.residual);
        d += 2;
    }
    Err(Error::NoPolynomialFit { lo, hi, residual: best })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Clone, Debug)]
pub struct Extremum {
    pub point: Point,
    pub value: f64,
    pub kind: ExtremumKind,
    /// Smallest `|eigenvalue|` of the Riemannian Hessian; zero when strictness came from the ring test.
    pub hessian_margin: f64,
}

#[derive(Clone, Debug)]
pub struct ExtremaReport {
    pub extrema: Vec<Extremum>,
    pub seeds: usize,
    pub non_converged: usize,
    /// Critical points found that are not strict extrema.
    pub rejected: usize,
}

impl ExtremaReport {
    pub fn to_record(&self) -> Value {
        let list: Vec<Value> = self
            .extrema
            .iter()
            .map(|e| {
                json!({
                    "point": e.point,
                    "value": e.value,
                    "kind": match e.kind { ExtremumKind::Maximum => "maximum", ExtremumKind::Minimum => "minimum" },
                    "hessian_margin": e.hessian_margin,
                })
            })
            .collect();
        json!({ "extrema": list, "seeds": self.seeds, "non_converged": self.non_converged, "rejected": self.rejected })
    }
}

/// Step along the sphere from `p` in tangent direction `d`.
fn step(p: &Point, d: &Point, t: f64) -> Point {
    normalize(&[p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]])
}

/// Projected gradient ascent of `sign · P` with Armijo backtracking.
fn climb(poly: &SpherePolynomial, mut p: Point, sign: f64, gtol: f64) -> (Point, bool) {
    let f = |x: &Point| sign * poly.eval(x);
    let mut fp = f(&p);
    let mut t = 0.1;
    for _ in 0..4000 {
        let g = poly.sphere_gradient(&p);
        let g = [sign * g[0], sign * g[1], sign * g[2]];
        let g2 = dot(&g, &g);
        if g2.sqrt() <= gtol {
            return (p, true);
        }
        let mut accepted = false;
        for _ in 0..60 {
            let q = step(&p, &g, t);
            let fq = f(&q);
            if fq > fp && fq >= fp + 1e-4 * t * g2 {
                p = q;
                fp = fq;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No ascent possible at working precision.
            return (p, true);
        }
        t = (t * 2.5).min(1e3);
    }
    (p, false)
}

/// Strictness of a critical point: definite Hessian beyond `tol · scale`, or, when the
/// Hessian is only semidefinite, a strict comparison on small rings around `p`.
fn classify_critical(poly: &SpherePolynomial, p: &Point, tol: f64, scale: f64) -> Option<(ExtremumKind, f64)> {
    let (u, v) = tangent_frame(p);
    let eig = SymmetricEigen::new(poly.sphere_hessian(p, &u, &v)).eigenvalues;
    let (lo, hi) = (eig[0].min(eig[1]), eig[0].max(eig[1]));
    let margin = tol * scale;
    if hi < -margin {
        return Some((ExtremumKind::Maximum, -hi));
    }
    if lo > margin {
        return Some((ExtremumKind::Minimum, lo));
    }
    if lo < -margin && hi > margin {
        return None;
    }
    let center = poly.eval(p);
    let ring_margin = 1e-12 * scale;
    let mut above = true;
    let mut below = true;
    for radius in [1e-2, 3e-2, 1e-1] {
        for k in 0..48 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 48.0;
            let dir = [
                theta.cos() * u[0] + theta.sin() * v[0],
                theta.cos() * u[1] + theta.sin() * v[1],
                theta.cos() * u[2] + theta.sin() * v[2],
            ];
            let axis = normalize(&cross(p, &dir));
            let q = rotate_about(&axis, radius, p);
            let diff = poly.eval(&q) - center;
            above &= diff < -ring_margin;
            below &= diff > ring_margin;
        }
    }
    match (above, below) {
        (true, _) => Some((ExtremumKind::Maximum, 0.0)),
        (_, true) => Some((ExtremumKind::Minimum, 0.0)),
        _ => None,
    }
}

/// Strict local extrema of `P|_{S^2}`: ascent and descent from a Fibonacci seed set,
/// clustering of the limits, then a strictness test at each cluster.
pub fn strict_extrema(poly: &SpherePolynomial, seeds: usize, tol: f64) -> ExtremaReport {
    let grid = fibonacci_grid(seeds, &[0.0, 0.0, 1.0]);
    let scale = grid.iter().map(|p| poly.eval(p).abs()).fold(0.0, f64::max).max(poly.max_abs_coefficient());
    if scale == 0.0 {
        return ExtremaReport { extrema: Vec::new(), seeds: grid.len(), non_converged: 0, rejected: 0 };
    }
    let gtol = 1e-12 * scale;
    let limits: Vec<(Point, bool)> = grid
        .par_iter()
        .flat_map_iter(|p| [climb(poly, *p, 1.0, gtol), climb(poly, *p, -1.0, gtol)])
        .collect();
    let non_converged = limits.iter().filter(|(_, ok)| !ok).count();
    const CLUSTER_RADIUS: f64 = 1e-3;
    let mut clusters: Vec<Point> = Vec::new();
    for (p, ok) in &limits {
        if *ok && !clusters.iter().any(|c| angle(c, p) < CLUSTER_RADIUS) {
            clusters.push(*p);
        }
    }
    let mut extrema = Vec::new();
    let mut rejected = 0;
    for c in clusters {
        match classify_critical(poly, &c, tol, scale) {
            Some((kind, hessian_margin)) => extrema.push(Extremum { point: c, value: poly.eval(&c), kind, hessian_margin }),
            None => rejected += 1,
        }
    }
    extrema.sort_by(|a, b| a.point.partial_cmp(&b.point).expect("finite points"));
    ExtremaReport { extrema, seeds: grid.len(), non_converged, rejected }
}

/// Largest distance from a point of one list to the nearest point of the other.
pub fn extrema_drift(a: &[Extremum], b: &[Extremum]) -> f64 {
    let one_way = |x: &[Extremum], y: &[Extremum]| {
        x.iter().map(|e| y.iter().map(|f| angle(&e.point, &f.point)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_way(a, b).max(one_way(b, a))
}
