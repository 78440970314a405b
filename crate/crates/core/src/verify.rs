//! Property suites behind `verify-all`: representation bookkeeping, the
//! Dolbeault-map identities, and the calibration constructions.
//!
//! Every check records its residual and tolerance. Exact scalars use tolerance
//! zero, so "passed" means the residual is literally zero.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::calib::{compare_constructions, phi};
use crate::error::Result;
use crate::extalg::{Form, Mask};
use crate::linalg::Matrix;
use crate::qdc::{factorization_residual, holomorphic_symplectic, lambda, reality, type_basis, PolyForm, VMap};
use crate::quatspace::{InducedStructure, QuaternionSpace, Unit};
use crate::scalar::{cx_abs_f64, cx_to_f64, imag_unit, Cx, Scalar};
use crate::su2rep::{generators, isotypic, multiplicities, project_max};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Recorded but not counted towards the suite outcome.
    pub informational: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }

    pub fn to_record(&self) -> Value {
        json!({
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed(),
            "informational": self.informational,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Suite {
    pub name: &'static str,
    pub checks: Vec<Check>,
    /// Measured values (tables, constants) that are not checks.
    pub data: Value,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self { name, checks: Vec::new(), data: json!({}) }
    }

    fn check(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.checks.push(Check { name: name.into(), residual, tolerance, informational: false });
    }

    fn observe(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.checks.push(Check { name: name.into(), residual, tolerance, informational: true });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| !c.informational).all(Check::passed)
    }

    pub fn worst_residual(&self) -> f64 {
        self.checks.iter().filter(|c| !c.informational).map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> Value {
        json!({
            "suite": self.name,
            "passed": self.passed(),
            "worst_residual": self.worst_residual(),
            "checks": self.checks.iter().map(Check::to_record).collect::<Vec<_>>(),
            "data": self.data,
        })
    }
}

fn tolerance<S: Scalar>(float_tol: f64) -> f64 {
    if S::EXACT {
        0.0
    } else {
        float_tol
    }
}

fn binomial(a: usize, b: usize) -> usize {
    if b > a {
        return 0;
    }
    (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
}

/// Rank of the span of a family of forms of one degree.
pub fn span_rank<S: Scalar>(forms: &[Form<S>]) -> usize {
    let mut masks: Vec<Mask> = forms.iter().flat_map(|f| f.terms().map(|(m, _)| *m)).collect();
    masks.sort_unstable();
    masks.dedup();
    if masks.is_empty() {
        return 0;
    }
    Matrix::from_rows(masks.iter().map(|m| forms.iter().map(|f| f.coef(*m)).collect()).collect()).rank()
}

/// Isotypic tables, projector algebra, equivariance and `dim Π₊Λ^{p,q}`, for every degree.
pub fn representation<S: Scalar>(space: &QuaternionSpace) -> Result<Suite> {
    let n = space.n();
    let d = space.real_dim();
    let tol = tolerance::<S>(1e-9);
    let mut suite = Suite::new("representation");
    let mut table = Vec::new();
    for k in 0..=d {
        let dec = isotypic::<S>(space, k)?;
        let gens = generators::<S>(space, k)?;
        let size = dec.basis.len();
        table.extend(dec.table().into_iter().map(|r| json!(r)));

        let total: usize = dec.blocks.iter().map(|b| b.dimension()).sum();
        suite.check(format!("k={k} sum m_s(s+1) = C({d},{k})"), total.abs_diff(binomial(d, k)) as f64, 0.0);
        let found: Vec<(usize, usize)> = dec.blocks.iter().map(|b| (b.weight, b.multiplicity)).collect();
        suite.check(format!("k={k} multiplicities match character"), f64::from(u8::from(found != multiplicities(n, k))), 0.0);

        let sum = dec.blocks.iter().fold(Matrix::<S>::zeros(size, size), |acc, b| acc.add(&b.projector));
        suite.check(format!("k={k} sum P_s = Id"), sum.sub(&Matrix::identity(size)).max_abs(), tol);
        let mut ortho = 0.0f64;
        let mut equiv = 0.0f64;
        for (x, a) in dec.blocks.iter().enumerate() {
            for (y, b) in dec.blocks.iter().enumerate() {
                let prod = a.projector.matmul(&b.projector);
                let expected = if x == y { a.projector.clone() } else { Matrix::zeros(size, size) };
                ortho = ortho.max(prod.sub(&expected).max_abs());
            }
            for g in &gens.a {
                equiv = equiv.max(a.projector.matmul(g).sub(&g.matmul(&a.projector)).max_abs());
            }
        }
        suite.check(format!("k={k} P_s P_t = delta P_s"), ortho, tol);
        suite.check(format!("k={k} [P_s, A_u] = 0"), equiv, tol);
    }

    let unit_i = InducedStructure::<S>::unit(Unit::I);
    let mut bigraded = Vec::new();
    for p in 0..=2 * n {
        for q in 0..=2 * n {
            let images: Vec<Form<S>> =
                type_basis(space, &unit_i, p, q)?.iter().map(|b| project_max(space, b)).collect();
            let rank = span_rank(&images);
            let expected = binomial(2 * n, p + q);
            suite.check(format!("dim P+ L^({p},{q}) = C({},{})", 2 * n, p + q), rank.abs_diff(expected) as f64, 0.0);
            bigraded.push(json!([p, q, rank]));
        }
    }
    suite.data = json!({ "isotypic_rows": table, "isotypic_columns": ["k", "s", "multiplicity", "dimension"], "max_weight_bigraded": bigraded });
    Ok(suite)
}

/// Monomial exponent vectors of total degree `≤ max_degree` in `d` variables.
fn exponents(d: usize, max_degree: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; d]];
    let mut frontier = out.clone();
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for e in &frontier {
            let start = e.iter().rposition(|&x| x > 0).unwrap_or(0);
            for r in start..d {
                let mut f = e.clone();
                f[r] += 1;
                next.push(f);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// A random polynomial `(m,0)`-form with small integer coefficients and polynomial degree `≤ max_degree`.
pub fn random_poly_form<S: Scalar>(
    space: &QuaternionSpace,
    m: usize,
    max_degree: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PolyForm<S>> {
    let d = space.real_dim();
    let basis = type_basis(space, &InducedStructure::<S>::unit(Unit::I), m, 0)?;
    let mut out = PolyForm::zero(d, m);
    for e in exponents(d, max_degree) {
        for b in &basis {
            let (re, im) = (rng.random_range(-3i64..=3), rng.random_range(-3i64..=3));
            if re == 0 && im == 0 {
                continue;
            }
            out = out.add(&PolyForm::monomial(e.clone(), b.scale(&Cx::new(S::from_int(re), S::from_int(im)))));
        }
    }
    Ok(out)
}

/// Properties of `V_{p,q}` for all `p, q ≤ n`.
///
/// The literal phase `i^{(n−p)²}` of the reality statement is recorded as an
/// informational check next to the gating check that `V_{p,p}` maps
/// `J`-real forms to real forms.
pub fn dolbeault<S: Scalar>(space: &QuaternionSpace, seed: u64) -> Result<Suite> {
    let n = space.n();
    let tol = tolerance::<S>(1e-9);
    let mut suite = Suite::new("dolbeault");
    let unit_i = InducedStructure::<S>::unit(Unit::I);
    let phi_i = phi::<S>(space, &unit_i)?;
    let one = Form::one(space.real_dim());
    let v00 = VMap::new(space, 0, 0, &phi_i)?.apply(&one)?;
    let mut maps: BTreeMap<(usize, usize), VMap<S>> = BTreeMap::new();
    for p in 0..=n {
        for q in 0..=n {
            maps.insert((p, q), VMap::new(space, p, q, &phi_i)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (&(p, q), v) in &maps {
        let sources = type_basis(space, &unit_i, p + q, 0)?;
        let mut defining = 0.0f64;
        let mut factor = 0.0f64;
        for eta in &sources {
            defining = defining.max(v.identity_residual(eta, &v.apply(eta)?)?);
            factor = factor.max(factorization_residual(v, &v00, eta)?);
        }
        suite.check(format!("({p},{q}) defining identity"), defining, tol);
        suite.check(format!("({p},{q}) factorization"), factor, tol);
        let rank = v.matrix()?.rank();
        suite.check(format!("({p},{q}) rank = {}", sources.len()), rank.abs_diff(sources.len()) as f64, 0.0);
    }

    let big_omega = holomorphic_symplectic(space, &unit_i)?;
    for p in 0..=n {
        let v = &maps[&(p, p)];
        let eta = big_omega.power(p)?;
        let real = reality(v, &eta)?;
        let plain_imag = v.apply(&eta)?.terms().map(|(_, c)| c.im.to_f64().abs()).fold(0.0, f64::max);
        suite.check(format!("({p},{p}) V maps J-real Omega^{p} to a real form"), if real.eta_is_real { plain_imag } else { f64::INFINITY }, tol);
        suite.observe(format!("({p},{p}) literal phase: i^(n-p)^2 V(Omega^{p}) is real"), real.max_imaginary, tol);
        let rotated = reality(v, &eta.scale(&imag_unit()))?;
        let rotated_imag = v.apply(&eta.scale(&imag_unit()))?.terms().map(|(_, c)| c.im.to_f64().abs()).fold(0.0, f64::max);
        let control = if rotated.eta_is_real || rotated_imag == 0.0 { 1.0 } else { 0.0 };
        suite.check(format!("({p},{p}) i*Omega^{p} is not J-real and its image is not real"), control, 0.0);
    }

    let lam = lambda(space, &phi_i)?;
    suite.check("lambda is real", lam.im.to_f64().abs(), tol);
    suite.check("lambda is positive", if lam.re.to_f64() > 0.0 { 0.0 } else { 1.0 }, 0.0);

    let mut intertwining = Vec::new();
    for (&(p, q), v) in &maps {
        if p >= 1 {
            let prev = &maps[&(p - 1, q)];
            let eta = random_poly_form::<S>(space, p + q - 1, 2, &mut rng)?;
            let lhs = eta.partial(space, &unit_i)?.map_forms(|f| v.apply(f))?;
            let rhs = eta.map_forms(|f| prev.apply(f))?.partial(space, &unit_i)?;
            let r = lhs.sub(&rhs).max_abs();
            suite.check(format!("({p},{q}) intertwining V(del eta) = del V(eta)"), r, tol);
            intertwining.push(json!({ "p": p, "q": q, "operator": "del", "residual": r }));
        }
        if q >= 1 {
            let prev = &maps[&(p, q - 1)];
            let eta = random_poly_form::<S>(space, p + q - 1, 2, &mut rng)?;
            let lhs = eta.partial_j(space)?.map_forms(|f| v.apply(f))?;
            let rhs = eta.map_forms(|f| prev.apply(f))?.partial_bar(space, &unit_i)?;
            let r = lhs.sub(&rhs).max_abs();
            suite.check(format!("({p},{q}) intertwining V(del_J eta) = delbar V(eta)"), r, tol);
            intertwining.push(json!({ "p": p, "q": q, "operator": "del_J", "residual": r }));
        }
    }
    let lam_f = cx_to_f64(&lam);
    suite.data = json!({
        "lambda": { "value": lam.re.to_json(), "approx": lam_f.re, "imaginary": lam_f.im },
        "intertwining": intertwining,
        "seed": seed,
    });
    Ok(suite)
}

/// The three constructions of `V^I_{n+i,n+i}` agree up to positive constants, for every level.
pub fn calibrations<S: Scalar>(space: &QuaternionSpace) -> Result<Suite> {
    let mut suite = Suite::new("calibrations");
    let mut ratios = Vec::new();
    for i in 0..=space.n() {
        let c = compare_constructions::<S>(space, i)?;
        suite.check(format!("i={i} projected form is nonzero"), if c.projected.is_zero() { 1.0 } else { 0.0 }, 0.0);
        for (label, r) in [("phi", &c.ratio_phi), ("dolbeault", &c.ratio_dolbeault)] {
            let residual = match r {
                Some(z) if z.re.to_f64() > 0.0 => z.im.to_f64().abs(),
                _ => f64::INFINITY,
            };
            suite.check(format!("i={i} {label} construction is a positive multiple"), residual, tolerance::<S>(1e-9));
            ratios.push(json!({
                "i": i,
                "construction": label,
                "ratio": r.as_ref().map(|z| json!({ "re": z.re.to_json(), "im": z.im.to_json(), "abs": cx_abs_f64(z) })),
            }));
        }
    }
    suite.data = json!({ "ratios": ratios });
    Ok(suite)
}

/// Every suite, in a fixed order.
pub fn all<S: Scalar>(space: &QuaternionSpace, seed: u64) -> Result<Vec<Suite>> {
    Ok(vec![representation::<S>(space)?, dolbeault::<S>(space, seed)?, calibrations::<S>(space)?])
}

