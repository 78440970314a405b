//! Rational subtori of the flat torus `H^n / Z^{4n}` invariant under an induced structure.
//!
//! For `L = aI + bJ + cK` let `q_1, …, q_r ∈ Z^3` span the integer vectors orthogonal to
//! every integer relation among `(a, b, c)`. Then `L = Σ t_j M_j` with
//! `M_j = q_j · (I, J, K)` and `t_j` linearly independent over `Q`, so a rational subspace
//! is `L`-invariant exactly when it is invariant under every `M_j`. The `M_j` generate a
//! division algebra `D` (an imaginary quadratic field or a quaternion algebra over `Q`),
//! the invariant subspaces are the `D`-subspaces, and each is a sum of lines `D·v`.

use std::collections::{BTreeSet, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use serde_json::{json, Value};

use super::lattice::{self, Row};
use crate::error::{Error, Result};
use crate::extalg::orthonormalize;
use crate::linalg::Matrix;
use crate::quatspace::{invariance_residual, InducedStructure, QuaternionSpace, Unit, FORMAT_VERSION};

/// Integer relations `r · (a, b, c) = 0` with `|r|∞ ≤ bound`.
#[derive(Clone, Debug)]
pub struct RelationReport {
    pub bound: i64,
    pub tolerance: f64,
    /// Saturated basis of the relation lattice.
    pub relations: Vec<[i64; 3]>,
    /// Smallest `|r · (a, b, c)| / |r|` over searched `r` outside the relation lattice.
    pub separation: f64,
}

pub fn detect_relations(t: &[f64; 3], bound: i64, tolerance: f64) -> Result<RelationReport> {
    let mut found: Vec<Row> = Vec::new();
    let mut candidates = Vec::new();
    for x in -bound..=bound {
        for y in -bound..=bound {
            for z in -bound..=bound {
                let r = [x, y, z];
                if r == [0, 0, 0] {
                    continue;
                }
                let len = ((x * x + y * y + z * z) as f64).sqrt();
                let v = (x as f64 * t[0] + y as f64 * t[1] + z as f64 * t[2]).abs() / len;
                candidates.push((r, v));
                if v <= tolerance {
                    found.push(r.iter().map(|&c| c as i128).collect());
                }
            }
        }
    }
    let basis = lattice::saturate(&found, 3)?;
    let relations: Vec<[i64; 3]> = basis.iter().map(|r| [r[0] as i64, r[1] as i64, r[2] as i64]).collect();
    let in_lattice = |r: &[i64; 3]| {
        let mut rows = basis.clone();
        rows.push(r.iter().map(|&c| c as i128).collect());
        lattice::rank(&rows, 3).map(|k| k == basis.len())
    };
    let mut separation = f64::INFINITY;
    for (r, v) in candidates {
        if v < separation && !in_lattice(&r)? {
            separation = v;
        }
    }
    Ok(RelationReport { bound, tolerance, relations, separation })
}

/// `q · (I, J, K)` as an integer matrix on `Z^{4n}`.
fn integer_structure(space: &QuaternionSpace, q: &[i128; 3]) -> Vec<Row> {
    let d = space.real_dim();
    let mut m = vec![vec![0i128; d]; d];
    for (u, coef) in Unit::ALL.iter().zip(q) {
        for col in 0..d {
            let (row, sign) = space.apply_unit_basis(*u, col);
            m[row][col] += coef * sign as i128;
        }
    }
    m
}

/// The integer generators `M_j` attached to a relation lattice.
pub fn generators(space: &QuaternionSpace, relations: &[[i64; 3]]) -> Result<Vec<Vec<Row>>> {
    let rows: Vec<Row> = relations.iter().map(|r| r.iter().map(|&c| c as i128).collect()).collect();
    let q = if rows.is_empty() { vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]] } else { lattice::integer_kernel(&rows, 3)? };
    Ok(q.iter().map(|q| integer_structure(space, &[q[0], q[1], q[2]])).collect())
}

/// A primitive rational subspace with its invariance data.
#[derive(Clone, Debug)]
pub struct RationalSubtorus {
    /// Hermite normal form of the saturated lattice.
    pub basis: Vec<Row>,
    pub height: i128,
    pub l_invariant: bool,
    /// Float invariance residual under the sampled structure.
    pub residual: f64,
    pub quaternionic: bool,
    pub complex_dim: usize,
}

impl RationalSubtorus {
    pub fn to_record(&self) -> Value {
        let basis: Vec<Vec<String>> = self.basis.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        json!({
            "basis": basis,
            "height": self.height.to_string(),
            "l_invariant": self.l_invariant,
            "residual": self.residual,
            "quaternionic": self.quaternionic,
            "complex_dim": self.complex_dim,
        })
    }
}

fn real_columns(basis: &[Row]) -> Matrix<f64> {
    Matrix::from_columns(&basis.iter().map(|r| r.iter().map(|&x| x as f64).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Primitive integer vectors with `|v|∞ ≤ h` and first nonzero entry positive.
pub fn primitive_vectors(d: usize, h: i128) -> Vec<Row> {
    let side = (2 * h + 1) as usize;
    let total = side.pow(d as u32);
    let mut out = Vec::new();
    let mut v = vec![0i128; d];
    for code in 0..total {
        let mut c = code;
        for x in v.iter_mut() {
            *x = (c % side) as i128 - h;
            c /= side;
        }
        let Some(first) = v.iter().find(|&&x| x != 0) else { continue };
        if *first < 0 {
            continue;
        }
        if v.iter().fold(0, |g, &x| lattice::gcd(g, x)) == 1 {
            out.push(v.clone());
        }
    }
    out
}

fn matmul(a: &[Row], b: &[Row]) -> Result<Vec<Row>> {
    let bt: Vec<Row> = (0..b[0].len()).map(|c| b.iter().map(|r| r[c]).collect()).collect();
    a.iter().map(|r| lattice::apply(&bt, r)).collect()
}

/// Matrices spanning, over `Q`, the algebra generated by `maps` (identity included).
pub fn algebra_basis(maps: &[Vec<Row>], d: usize) -> Result<Vec<Vec<Row>>> {
    let identity: Vec<Row> = (0..d).map(|r| (0..d).map(|c| i128::from(r == c)).collect()).collect();
    let flat = |m: &Vec<Row>| m.iter().flatten().copied().collect::<Row>();
    let mut basis = vec![identity];
    let mut frontier = basis.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for f in &frontier {
            for m in maps {
                let w = matmul(m, f)?;
                let mut rows: Vec<Row> = basis.iter().map(flat).collect();
                rows.push(flat(&w));
                if lattice::rank(&rows, d * d)? > basis.len() {
                    basis.push(w.clone());
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    Ok(basis)
}

type LineKey = (usize, i128, Vec<Row>);

/// Distinct lines `D·v` for primitive `v` of height `≤ h`, sorted by (height, basis).
fn lines(space: &QuaternionSpace, maps: &[Vec<Row>], h: i128) -> Result<Arc<Vec<Vec<Row>>>> {
    type Cache = Mutex<Vec<((usize, i128, Vec<Vec<Row>>), Arc<Vec<Vec<Row>>>)>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = (space.real_dim(), h, maps.to_vec());
    let cache = CACHE.get_or_init(Default::default);
    if let Some((_, hit)) = cache.lock().expect("cache poisoned").iter().find(|(k, _)| *k == key) {
        return Ok(hit.clone());
    }
    let d = space.real_dim();
    let algebra = algebra_basis(maps, d)?;
    let side = 2 * h + 1;
    let encode = |v: &Row| -> Option<u64> {
        let sign = if v.iter().find(|&&x| x != 0)? < &0 { -1 } else { 1 };
        v.iter().rev().try_fold(0u64, |acc, &x| (x.abs() <= h).then(|| acc * side as u64 + (sign * x + h) as u64))
    };
    let mut seen: HashSet<Vec<Row>> = HashSet::new();
    let mut covered: HashSet<u64> = HashSet::new();
    for v in primitive_vectors(d, h) {
        if covered.contains(&encode(&v).expect("bounded")) {
            continue;
        }
        let images: Vec<Row> = algebra.iter().map(|b| lattice::apply(b, &v)).collect::<Result<_>>()?;
        // Images of v generate the same line; the bounded ones need no closure of their own.
        for w in &images {
            let g = w.iter().fold(0, |g, &x| lattice::gcd(g, x));
            if g > 0 {
                let w: Row = w.iter().map(|x| x / g).collect();
                if let Some(code) = encode(&w) {
                    covered.insert(code);
                }
            }
        }
        seen.insert(lattice::saturate(&images, d)?);
    }
    let mut sorted: Vec<LineKey> = seen.into_iter().map(|l| (l.len(), lattice::height(&l), l)).collect();
    sorted.sort();
    let out = Arc::new(sorted.into_iter().map(|(_, _, l)| l).collect::<Vec<_>>());
    cache.lock().expect("cache poisoned").push((key, out.clone()));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub n: usize,
    pub i: usize,
    pub height: i128,
    pub structure: [f64; 3],
    pub relations: RelationReport,
    /// Rank over `Q` of the division algebra generated by the `M_j`.
    pub algebra_rank: usize,
    pub lines: usize,
    pub combinations: usize,
    pub budget: usize,
    pub truncated: bool,
    pub subtori: Vec<RationalSubtorus>,
}

impl ScanReport {
    pub fn non_quaternionic(&self) -> usize {
        self.subtori.iter().filter(|s| !s.quaternionic).count()
    }

    pub fn to_record(&self) -> Value {
        json!({
            "version": FORMAT_VERSION,
            "n": self.n,
            "i": self.i,
            "rank": 2 * (self.n + self.i),
            "height": self.height.to_string(),
            "triple": self.structure,
            "relations": {
                "bound": self.relations.bound,
                "tolerance": self.relations.tolerance,
                "basis": self.relations.relations,
                "separation": self.relations.separation,
            },
            "algebra_rank": self.algebra_rank,
            "lines": self.lines,
            "combinations": self.combinations,
            "budget": self.budget,
            "truncated": self.truncated,
            "found": self.subtori.len(),
            "non_quaternionic": self.non_quaternionic(),
            "subtori": self.subtori.iter().map(RationalSubtorus::to_record).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub height: i128,
    pub relation_bound: i64,
    pub relation_tolerance: f64,
    /// Maximal number of line combinations examined.
    pub budget: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { height: 3, relation_bound: 12, relation_tolerance: 1e-10, budget: 200_000 }
    }
}

fn describe(space: &QuaternionSpace, l: &InducedStructure<f64>, maps: &[Vec<Row>], basis: Vec<Row>) -> Result<RationalSubtorus> {
    let d = space.real_dim();
    let quaternionic_maps: Vec<Vec<Row>> =
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]].iter().map(|q| integer_structure(space, q)).collect();
    let residual = invariance_residual(&l.matrix(space), &orthonormalize(&real_columns(&basis))?);
    Ok(RationalSubtorus {
        height: lattice::height(&basis),
        l_invariant: lattice::is_invariant(&basis, maps, d)?,
        residual,
        quaternionic: lattice::is_invariant(&basis, &quaternionic_maps, d)?,
        complex_dim: basis.len() / 2,
        basis,
    })
}

/// Rational `L`-invariant subspaces of rank `2(n+i)` and height `≤ H`.
pub fn scan_subtori(space: &QuaternionSpace, l: &InducedStructure<f64>, i: usize, opts: &ScanOptions) -> Result<ScanReport> {
    let n = space.n();
    if i > n {
        return Err(Error::Invalid(format!("level i = {i} exceeds n = {n}")));
    }
    let d = space.real_dim();
    let target = 2 * (n + i);
    let relations = detect_relations(l.triple(), opts.relation_bound, opts.relation_tolerance)?;
    let maps = generators(space, &relations.relations)?;
    let all_lines = lines(space, &maps, opts.height)?;
    let algebra_rank = all_lines.first().map_or(0, |l| l.len());
    if all_lines.iter().any(|l| l.len() != algebra_rank) {
        return Err(Error::Inconsistent("lines of unequal rank: generators do not span a division algebra".into()));
    }
    let mut report = ScanReport {
        n,
        i,
        height: opts.height,
        structure: *l.triple(),
        relations,
        algebra_rank,
        lines: all_lines.len(),
        combinations: 0,
        budget: opts.budget,
        truncated: false,
        subtori: Vec::new(),
    };
    if algebra_rank == 0 || target % algebra_rank != 0 {
        return Ok(report);
    }
    let m = target / algebra_rank;
    let mut found: BTreeSet<Vec<Row>> = BTreeSet::new();
    // Depth-first over increasing line indices; partial sums must stay direct.
    let mut stack: Vec<(usize, Vec<Row>, usize)> = vec![(0, Vec::new(), 0)];
    while let Some((start, acc, depth)) = stack.pop() {
        if depth == m {
            if lattice::height(&acc) <= opts.height {
                found.insert(acc);
            }
            continue;
        }
        for (k, line) in all_lines.iter().enumerate().skip(start).rev() {
            if report.combinations >= opts.budget {
                report.truncated = true;
                break;
            }
            let next = if acc.is_empty() {
                line.clone()
            } else {
                report.combinations += 1;
                let mut rows = acc.clone();
                rows.extend(line.iter().cloned());
                let s = lattice::saturate(&rows, d)?;
                if s.len() != acc.len() + algebra_rank {
                    continue;
                }
                s
            };
            stack.push((k + 1, next, depth + 1));
        }
    }
    for basis in found {
        report.subtori.push(describe(space, l, &maps, basis)?);
    }
    Ok(report)
}

/// Every primitive rank-`r` sublattice of `Z^d` in Hermite normal form with entries `≤ h`.
pub fn hnf_catalog(d: usize, r: usize, h: i128) -> Result<Vec<Vec<Row>>> {
    let mut out = Vec::new();
    let mut rows: Vec<Row> = Vec::new();
    fn recurse(d: usize, r: usize, h: i128, from: usize, rows: &mut Vec<Row>, out: &mut Vec<Vec<Row>>) -> Result<()> {
        if rows.len() == r {
            if lattice::saturate(rows, d)? == *rows {
                out.push(rows.clone());
            }
            return Ok(());
        }
        for pivot in from..d {
            if d - pivot < r - rows.len() {
                break;
            }
            // Free entries: everything right of the pivot; entries above later pivots are
            // reduced when the later row is added.
            let free = d - pivot - 1;
            let side = (2 * h + 1) as usize;
            for p in 1..=h {
                for code in 0..side.pow(free as u32) {
                    let mut row = vec![0i128; d];
                    row[pivot] = p;
                    let mut c = code;
                    for x in row.iter_mut().skip(pivot + 1) {
                        *x = (c % side) as i128 - h;
                        c /= side;
                    }
                    if rows.iter().any(|prev: &Row| {
                        let col = prev.iter().position(|&x| x != 0).expect("pivot");
                        row[col] != 0 || prev[pivot] < 0 || prev[pivot] >= p
                    }) {
                        continue;
                    }
                    rows.push(row);
                    recurse(d, r, h, pivot + 1, rows, out)?;
                    rows.pop();
                }
            }
        }
        Ok(())
    }
    recurse(d, r, h, 0, &mut rows, &mut out)?;
    Ok(out)
}

/// Brute-force oracle: rank-`r` rational subspaces of height `≤ h` whose float invariance
/// residual under `L` is below `tol`.
pub fn brute_force_invariant(space: &QuaternionSpace, l: &InducedStructure<f64>, r: usize, h: i128, tol: f64) -> Result<Vec<Vec<Row>>> {
    let d = space.real_dim();
    let lm = l.matrix(space);
    let mut out = Vec::new();
    for basis in hnf_catalog(d, r, h)? {
        if invariance_residual(&lm, &orthonormalize(&real_columns(&basis))?) <= tol {
            out.push(basis);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations_of_special_points() {
        let r = detect_relations(&[1.0, 0.0, 0.0], 4, 1e-12).unwrap();
        assert_eq!(r.relations.len(), 2);
        let s = 0.5f64.sqrt();
        let r = detect_relations(&[s, s, 0.0], 4, 1e-12).unwrap();
        assert_eq!(r.relations.len(), 2);
        let r = detect_relations(&[0.48, 0.6, 0.64], 4, 1e-12).unwrap();
        assert_eq!(r.relations.len(), 2);
        let norm = 6f64.sqrt();
        let r = detect_relations(&[1.0 / norm, 2f64.sqrt() / norm, 3f64.sqrt() / norm], 12, 1e-10).unwrap();
        assert!(r.relations.is_empty());
        assert!(r.separation > 1e-4);
    }

    #[test]
    fn generators_for_i() {
        let space = QuaternionSpace::new(1).unwrap();
        let g = generators(&space, &[[0, 1, 0], [0, 0, 1]]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0][1][0], 1);
    }

    #[test]
    fn algebra_ranks() {
        let space = QuaternionSpace::new(1).unwrap();
        assert_eq!(algebra_basis(&generators(&space, &[]).unwrap(), 4).unwrap().len(), 4);
        assert_eq!(algebra_basis(&generators(&space, &[[0, 1, 0], [0, 0, 1]]).unwrap(), 4).unwrap().len(), 2);
        assert_eq!(algebra_basis(&generators(&space, &[[1, -1, 0]]).unwrap(), 4).unwrap().len(), 4);
    }

    #[test]
    fn hnf_catalog_is_canonical() {
        let cat = hnf_catalog(3, 1, 1).unwrap();
        // Primitive vectors of height ≤ 1 up to sign: (27 − 1) / 2.
        assert_eq!(cat.len(), 13);
        let two = hnf_catalog(3, 2, 1).unwrap();
        assert!(two.iter().all(|b| lattice::saturate(b, 3).unwrap() == *b));
    }
}
