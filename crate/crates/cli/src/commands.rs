use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use quatcal::calib::{calibration, coisotropic_coordinate_planes, comass, coordinate_plane, evaluate, max_on_random_frames, CalibrationForm};
use quatcal::quatspace::{InducedStructure, QuaternionSpace, Unit};
use quatcal::su2rep::{isotypic, multiplicities};
use quatcal::twistor::poly::extrema_drift;
use quatcal::twistor::sphere::random_point;
use quatcal::twistor::{
    intersection_rank, phi_fit, psi, scan_subtori, strict_extrema, Classification, ScanOptions, EXTREMUM_MARGIN,
    ZERO_TOLERANCE,
};
use quatcal::{verify, Error, Rational, Scalar};

use crate::inputs::{parse_exact_triple, read_class, read_form, read_subspace};
use crate::report::{write_json, Report, Status};
use crate::{Arith, CalibrationArgs, ComassArgs, DecomposeArgs, Mode, PhiFitArgs, PsiScanArgs, TorusScanArgs, VerifyArgs};

pub enum Failure {
    Usage(String),
    Library(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

type Outcome = Result<Report, Failure>;

pub fn run(mode: &Mode) -> Outcome {
    match mode {
        Mode::Decompose(a) => match a.arith {
            Arith::Exact => decompose::<Rational>(a),
            Arith::Float => decompose::<f64>(a),
        },
        Mode::Calibration(a) => calibration_cmd(a),
        Mode::Comass(a) => float_only(a.arith, "comass").and_then(|_| comass_cmd(a)),
        Mode::PsiScan(a) => float_only(a.arith, "psi-scan").and_then(|_| psi_scan(a)),
        Mode::PhiFit(a) => float_only(a.arith, "phi-fit").and_then(|_| phi_fit_cmd(a)),
        Mode::TorusScan(a) => float_only(a.arith, "torus-scan").and_then(|_| torus_scan(a)),
        Mode::VerifyAll(a) => match a.arith {
            Arith::Exact => verify_all::<Rational>(a),
            Arith::Float => verify_all::<f64>(a),
        },
    }
}

fn float_only(arith: Arith, mode: &str) -> Result<(), Failure> {
    match arith {
        Arith::Float => Ok(()),
        Arith::Exact => Err(Failure::Usage(format!("{mode} is a floating-point computation; --arith exact is not available"))),
    }
}

fn space(n: usize) -> Result<QuaternionSpace, Failure> {
    QuaternionSpace::new(n).map_err(|e| Failure::Usage(e.to_string()))
}

fn level(space: &QuaternionSpace, i: usize) -> Result<(), Failure> {
    if i > space.n() {
        return Err(Failure::Usage(format!("--i {i} exceeds --n {}", space.n())));
    }
    Ok(())
}

fn decompose<S: Scalar>(a: &DecomposeArgs) -> Outcome {
    let h = space(a.n)?;
    let d = h.real_dim();
    let degrees: Vec<usize> = match a.k {
        Some(k) if k > d => return Err(Failure::Usage(format!("--k {k} exceeds 4n = {d}"))),
        Some(k) => vec![k],
        None => (0..=d).collect(),
    };
    let mut report = Report::new("decompose", json!({ "n": a.n, "k": a.k, "arith": a.arith.tag() }));
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for k in degrees {
        let dec = isotypic::<S>(&h, k)?;
        rows.extend(dec.table());
        let total: usize = dec.blocks.iter().map(|b| b.dimension()).sum();
        let expected = binomial(d, k);
        let found: Vec<(usize, usize)> = dec.blocks.iter().map(|b| (b.weight, b.multiplicity)).collect();
        let character = multiplicities(a.n, k);
        let ok = total == expected && found == character;
        if !ok {
            report.status = Status::PropertyFailure;
        }
        checks.push(json!({
            "k": k,
            "sum_dimensions": total,
            "binomial": expected,
            "dimension_residual": total.abs_diff(expected),
            "matches_character": found == character,
        }));
    }
    report.results = json!({ "columns": ["k", "s", "multiplicity", "dimension"], "rows": rows });
    report.residuals = json!({ "dimension_count": checks });
    report.tolerances = json!({ "dimension_count": 0 });
    Ok(report)
}

fn binomial(a: usize, b: usize) -> usize {
    if b > a {
        return 0;
    }
    (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
}

fn calibration_cmd(a: &CalibrationArgs) -> Outcome {
    let h = space(a.n)?;
    level(&h, a.i)?;
    let (record, summary) = match a.arith {
        Arith::Exact => {
            let l = parse_exact_triple(&a.l).map_err(|e| Failure::Usage(e.to_string()))?;
            let v = calibration::<Rational>(&h, &l, a.i)?;
            (v.form.to_record(), summarize(&h, &v, v.form.to_f64())?)
        }
        Arith::Float => {
            let l = InducedStructure::parse(&a.l).map_err(|e| Failure::Usage(e.to_string()))?;
            let v = calibration::<f64>(&h, &l, a.i)?;
            (v.form.to_record(), summarize(&h, &v, v.form.clone())?)
        }
    };
    write_json(&a.out, &record).map_err(|e| Failure::Library(e.into()))?;
    let mut report = Report::new(
        "calibration",
        json!({ "n": a.n, "i": a.i, "L": a.l, "arith": a.arith.tag(), "out": a.out.display().to_string() }),
    );
    report.results = json!({
        "form": { "path": a.out.display().to_string(), "degree": 2 * (a.n + a.i), "terms": record["terms"].as_array().map_or(0, Vec::len) },
        "summary": summary["summary"],
    });
    report.residuals = summary["residuals"].clone();
    report.tolerances = json!({ "unit_triple": quatcal::quatspace::UNIT_TOLERANCE, "coisotropic_value": 1e-12 });
    Ok(report)
}

/// Normalization and, for `L = I`, the values on the coisotropic coordinate planes.
fn summarize<S: Scalar>(h: &QuaternionSpace, v: &CalibrationForm<S>, f: quatcal::FloatForm) -> Result<Value, Failure> {
    let t: Vec<f64> = v.structure.triple().iter().map(Scalar::to_f64).collect();
    let defect = (t.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
    let is_i = InducedStructure::<S>::unit(Unit::I) == v.structure;
    let planes = if is_i {
        let mut vals = Vec::new();
        for lines in coisotropic_coordinate_planes(h, v.level) {
            vals.push(json!({ "lines": lines, "value": evaluate(&f, &coordinate_plane(h, &lines)?) }));
        }
        Some(vals)
    } else {
        None
    };
    let best = planes
        .as_ref()
        .map(|p| p.iter().filter_map(|x| x["value"].as_f64()).fold(f64::NEG_INFINITY, f64::max));
    Ok(json!({
        "summary": {
            "normalization": v.normalization,
            "structure": t,
            "coisotropic_coordinate_planes": planes,
        },
        "residuals": {
            "unit_triple": defect,
            "coisotropic_max_minus_one": best.map(|b| (b - 1.0).abs()),
        },
    }))
}

fn comass_cmd(a: &ComassArgs) -> Outcome {
    if a.restarts == 0 {
        return Err(Failure::Usage("--restarts must be positive".into()));
    }
    let f = read_form(&a.form)?;
    let est = comass(&f, a.restarts, a.seed, a.tol);
    let sampled = if a.frames > 0 { Some(max_on_random_frames(&f, a.frames, a.seed)) } else { None };
    let mut report = Report::new(
        "comass",
        json!({ "form": a.form.display().to_string(), "degree": f.degree(), "n": f.dim() / 4, "restarts": a.restarts, "frames": a.frames }),
    );
    report.seed = Some(a.seed);
    let frame: Vec<Vec<f64>> = (0..est.frame.cols).map(|c| est.frame.column(c)).collect();
    report.results = json!({
        "lower_bound": est.value,
        "converged_restarts": est.converged,
        "restarts": est.restarts,
        "best_frame": frame,
        "max_on_random_frames": sampled,
    });
    report.residuals = json!({ "sampled_minus_ascent": sampled.map(|s| s - est.value) });
    report.tolerances = json!({ "gradient": a.tol });
    if est.converged < est.restarts {
        report.warnings.push(format!("{} of {} restarts did not converge", est.restarts - est.converged, est.restarts));
    }
    Ok(report)
}

fn psi_scan(a: &PsiScanArgs) -> Outcome {
    let h = space(a.n)?;
    level(&h, a.i)?;
    let w = read_subspace(&a.subspace, a.n)?;
    if w.complex_dim() != a.n + a.i {
        return Err(Failure::Usage(format!("subspace has complex dimension {}, expected n+i = {}", w.complex_dim(), a.n + a.i)));
    }
    if a.grid < 100 {
        return Err(Failure::Usage("--grid must be at least 100".into()));
    }
    let k = intersection_rank(&w)?;
    let sample = psi(&w, a.grid)?;
    let mut report = Report::new(
        "psi-scan",
        json!({ "n": a.n, "i": a.i, "subspace": a.subspace.display().to_string(), "grid": a.grid, "structure": w.structure.triple() }),
    );
    let expected = if a.i == a.n {
        report.warnings.push("level i = n: V^L is a multiple of the volume form and ψ is constant".into());
        None
    } else if k > a.i {
        Some(Classification::IdenticallyZero)
    } else {
        Some(Classification::StrictExtremumAtAxis)
    };
    if expected.is_some_and(|e| e != sample.classification) {
        report.status = Status::PropertyFailure;
    }
    report.results = json!({
        "k": k,
        "classification": sample.classification.tag(),
        "expected": expected.map(Classification::tag),
        "sample": sample.to_record(),
    });
    report.residuals = json!({
        "max_abs_over_bound": sample.max_abs / sample.bound,
        "margin_over_max_abs": if sample.max_abs > 0.0 { sample.margin / sample.max_abs } else { 0.0 },
        "invariance": sample.invariance_residual,
    });
    report.tolerances = json!({ "zero": ZERO_TOLERANCE, "extremum_margin": EXTREMUM_MARGIN });
    Ok(report)
}

fn phi_fit_cmd(a: &PhiFitArgs) -> Outcome {
    let h = space(a.n)?;
    level(&h, a.i)?;
    let (basis, xi) = read_class(&a.class, a.n)?;
    if basis.len() != 2 * (a.n + a.i) {
        return Err(Failure::Usage(format!("class has rank {}, expected 2(n+i) = {}", basis.len(), 2 * (a.n + a.i))));
    }
    let mut report = Report::new(
        "phi-fit",
        json!({ "n": a.n, "i": a.i, "class": a.class.display().to_string(), "grid": a.grid, "seeds": a.seeds }),
    );
    report.tolerances = json!({ "fit": a.tol, "drift": a.drift, "extremum": 1e-8 });
    let poly = match phi_fit(&h, &xi, a.i, a.grid, a.tol) {
        Ok(p) => p,
        Err(Error::NoPolynomialFit { lo, hi, residual }) => {
            report.status = Status::PropertyFailure;
            report.results = json!({ "fit": null, "degrees_tried": [lo, hi] });
            report.residuals = json!({ "fit": residual });
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let coarse = strict_extrema(&poly, a.seeds, 1e-8);
    let fine = strict_extrema(&poly, 4 * a.seeds, 1e-8);
    let drift = extrema_drift(&coarse.extrema, &fine.extrema);
    let stable = coarse.extrema.len() == fine.extrema.len() && drift <= a.drift;
    if !stable {
        report.status = Status::PropertyFailure;
    }
    report.results = json!({
        "polynomial": poly.to_record(),
        "extrema": coarse.to_record(),
        "refined_extrema": fine.to_record(),
        "stable": stable,
    });
    report.residuals = json!({ "fit": poly.residual, "drift": drift });
    Ok(report)
}

fn torus_scan(a: &TorusScanArgs) -> Outcome {
    let h = space(a.n)?;
    level(&h, a.i)?;
    if a.height < 1 {
        return Err(Failure::Usage("--height must be positive".into()));
    }
    let l = if a.l == "random" {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        InducedStructure::from_array(random_point(&mut rng))?
    } else {
        InducedStructure::parse(&a.l).map_err(|e| Failure::Usage(e.to_string()))?
    };
    let opts = ScanOptions { height: i128::from(a.height), budget: a.budget, ..ScanOptions::default() };
    let scan = scan_subtori(&h, &l, a.i, &opts)?;
    let mut report = Report::new(
        "torus-scan",
        json!({ "n": a.n, "i": a.i, "height": a.height, "L": a.l, "budget": a.budget, "structure": l.triple() }),
    );
    report.seed = Some(a.seed);
    if scan.truncated {
        report.warnings.push(format!("enumeration truncated after {} line combinations; results are partial", scan.combinations));
    }
    let worst = scan.subtori.iter().map(|s| s.residual).fold(0.0, f64::max);
    report.results = scan.to_record();
    report.residuals = json!({ "relation_separation": scan.relations.separation, "worst_invariance": worst });
    report.tolerances = json!({ "relation": opts.relation_tolerance, "relation_bound": opts.relation_bound });
    Ok(report)
}

fn verify_all<S: Scalar>(a: &VerifyArgs) -> Outcome {
    let h = space(a.n)?;
    let suites = verify::all::<S>(&h, a.seed)?;
    let mut report = Report::new("verify-all", json!({ "n": a.n, "arith": a.arith.tag() }));
    report.seed = Some(a.seed);
    if !suites.iter().all(verify::Suite::passed) {
        report.status = Status::PropertyFailure;
    }
    let residuals: serde_json::Map<String, Value> =
        suites.iter().map(|s| (s.name.to_string(), json!(s.worst_residual()))).collect();
    report.results = json!({ "suites": suites.iter().map(verify::Suite::to_record).collect::<Vec<_>>() });
    report.residuals = Value::Object(residuals);
    report.tolerances = json!({ "exact": S::EXACT, "float": if S::EXACT { 0.0 } else { 1e-9 } });
    Ok(report)
}
