//! Input files and flag values.
//!
//! Subspace file: `{version, n, structure: [a, b, c], generators: [[x_0, …, x_{4n−1}], …]}`,
//! the complex span of the generators under `L = aI + bJ + cK`.
//!
//! Class file: `{version, n, basis: [[integers], …]}`, a rational subtorus given by
//! an integer basis of its lattice. The basis order fixes the orientation.

use std::path::Path;

use num_rational::BigRational;
use quatcal::extalg::{ComplexSubspace, Form, Polyvector};
use quatcal::linalg::Matrix;
use quatcal::quatspace::{InducedStructure, QuaternionSpace, FORMAT_VERSION};
use quatcal::{Error, Rational, Result};
use serde_json::Value;

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn check_version(v: &Value, what: &str) -> Result<()> {
    match v["version"].as_u64() {
        Some(x) if x == FORMAT_VERSION as u64 => Ok(()),
        other => Err(Error::Format(format!("{what}: unsupported version {other:?}"))),
    }
}

fn read_n(v: &Value, what: &str) -> Result<usize> {
    v["n"].as_u64().map(|n| n as usize).ok_or_else(|| Error::Format(format!("{what}: missing n")))
}

/// A form file written by `calibration`, exact or float, as `f64` coefficients.
pub fn read_form(path: &Path) -> Result<Form<f64>> {
    let v = read_json(path)?;
    if v["exact"].as_bool().unwrap_or(false) {
        Ok(Form::<Rational>::from_record(&v)?.to_f64())
    } else {
        Form::<f64>::from_record(&v)
    }
}

pub fn read_subspace(path: &Path, n: usize) -> Result<ComplexSubspace> {
    let v = read_json(path)?;
    check_version(&v, "subspace")?;
    let file_n = read_n(&v, "subspace")?;
    if file_n != n {
        return Err(Error::Format(format!("subspace file is for n = {file_n}, not n = {n}")));
    }
    let space = QuaternionSpace::new(n)?;
    let t: Vec<f64> = v["structure"]
        .as_array()
        .filter(|a| a.len() == 3)
        .and_then(|a| a.iter().map(Value::as_f64).collect())
        .ok_or_else(|| Error::Format("subspace: structure must be three numbers".into()))?;
    let structure = InducedStructure::new(t[0], t[1], t[2])?;
    let gens: Vec<Vec<f64>> = v["generators"]
        .as_array()
        .ok_or_else(|| Error::Format("subspace: missing generators".into()))?
        .iter()
        .map(|g| {
            g.as_array()
                .filter(|a| a.len() == space.real_dim())
                .and_then(|a| a.iter().map(Value::as_f64).collect())
                .ok_or_else(|| Error::Format(format!("subspace: each generator needs {} numbers", space.real_dim())))
        })
        .collect::<Result<_>>()?;
    ComplexSubspace::from_generators(space, structure, &gens)
}

/// The integer basis of a class file, with its fundamental polyvector.
pub fn read_class(path: &Path, n: usize) -> Result<(Vec<Vec<i64>>, Polyvector<f64>)> {
    let v = read_json(path)?;
    check_version(&v, "class")?;
    let file_n = read_n(&v, "class")?;
    if file_n != n {
        return Err(Error::Format(format!("class file is for n = {file_n}, not n = {n}")));
    }
    let d = 4 * n;
    let rows: Vec<Vec<i64>> = v["basis"]
        .as_array()
        .ok_or_else(|| Error::Format("class: missing basis".into()))?
        .iter()
        .map(|r| {
            r.as_array()
                .filter(|a| a.len() == d)
                .and_then(|a| a.iter().map(|x| x.as_i64().or_else(|| x.as_str()?.parse().ok())).collect())
                .ok_or_else(|| Error::Format(format!("class: each basis row needs {d} integers")))
        })
        .collect::<Result<_>>()?;
    let cols: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    let xi = Polyvector::from_vectors(&Matrix::from_columns(&cols));
    if xi.norm() == 0.0 {
        return Err(Error::Format("class: basis rows are linearly dependent".into()));
    }
    Ok((rows, xi))
}

/// `"a,b,c"` with each entry an integer or a fraction `p/q`.
pub fn parse_exact_triple(s: &str) -> Result<InducedStructure<Rational>> {
    let parts: Vec<BigRational> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<BigRational>()
                .map_err(|_| Error::Format(format!("exact mode needs rational entries like 3/5, got {p:?}")))
        })
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [a, b, c] => InducedStructure::new(a.clone(), b.clone(), c.clone()),
        _ => Err(Error::Format(format!("expected a,b,c, got {s:?}"))),
    }
}
