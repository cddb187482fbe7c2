//! Python bindings. Maps travel as JSON strings in the same format the CLI reads.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use gaprenorm_core::search::{bisect_b_with, Family, SearchOptions};
use gaprenorm_core::{block_report as report_of, renorm, tangent, Combinatorics, Error, GapMap};

create_exception!(gaprenorm_py, NotRenormalizable, PyException);
create_exception!(gaprenorm_py, NumericalError, PyException);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.root() {
        Error::NotRenormalizable(_) => NotRenormalizable::new_err(msg),
        Error::Domain(_)
        | Error::Parse(_)
        | Error::DegenerateInterval { .. }
        | Error::DegenerateGap { .. }
        | Error::NotDissipative { .. } => PyValueError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

fn parse(map_json: &str) -> PyResult<GapMap> {
    serde_json::from_str(map_json).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn dump(v: &serde_json::Value) -> String {
    serde_json::to_string(v).expect("json values always serialize")
}

/// `(k, sigma, b~, alpha~, beta~)` for the affine map with `α = β = 1/2`, `b = 0.3`.
#[pyfunction]
fn affine_demo() -> PyResult<(usize, String, f64, f64, f64)> {
    let f = GapMap::affine(0.5, 0.5, 0.3).map_err(to_py)?;
    let s = renorm::renormalize(&f).map_err(to_py)?;
    let g = &s.renormalized;
    Ok((s.k, s.sigma.to_string(), g.b(), g.alpha(), g.beta()))
}

#[pyfunction]
fn find_k(map_json: &str) -> PyResult<(usize, String)> {
    let (k, sigma) = renorm::find_k(&parse(map_json)?).map_err(to_py)?;
    Ok((k, sigma.to_string()))
}

/// One renormalization step; returns the renormalized map as JSON.
#[pyfunction]
fn renormalize(map_json: &str) -> PyResult<String> {
    let s = renorm::renormalize(&parse(map_json)?).map_err(to_py)?;
    Ok(serde_json::to_string(&s.renormalized).expect("gap maps serialize"))
}

/// Up to `depth` steps. Stops early instead of raising; the reason is in `stopped`.
#[pyfunction]
fn trajectory(map_json: &str, depth: usize) -> PyResult<String> {
    let t = renorm::renormalize_n(&parse(map_json)?, depth).map_err(to_py)?;
    Ok(dump(&json!({
        "gamma": t.gamma,
        "steps": t.steps,
        "stopped": t.stopped.as_ref().map(|e| e.to_string()),
    })))
}

fn jacobian_at(map_json: &str, depth: usize, m: usize, h: f64) -> PyResult<tangent::Jacobian> {
    let t = renorm::renormalize_n(&parse(map_json)?, depth).map_err(to_py)?;
    if let Some(e) = t.stopped {
        return Err(to_py(e));
    }
    let f = t.steps.last().map_or_else(|| parse(map_json), |s| Ok(s.renormalized.clone()))?;
    tangent::jacobian(&f, m, h).map_err(to_py)
}

/// Block quantities of the Jacobian at the `depth`-th renormalization, as JSON.
#[pyfunction]
#[pyo3(signature = (map_json, depth=0, m=8, h=1e-6))]
fn block_report(map_json: &str, depth: usize, m: usize, h: f64) -> PyResult<String> {
    let j = jacobian_at(map_json, depth, m, h)?;
    Ok(dump(&json!(report_of(&j))))
}

/// Eigenvalue moduli, decreasing.
#[pyfunction]
#[pyo3(signature = (map_json, depth=0, m=8, h=1e-6))]
fn spectrum(map_json: &str, depth: usize, m: usize, h: f64) -> PyResult<Vec<f64>> {
    let j = jacobian_at(map_json, depth, m, h)?;
    tangent::spectrum(&j).map_err(to_py)
}

/// Bisects `b` in the family through the given map for the target combinatorics.
#[pyfunction]
#[pyo3(signature = (map_json, target, depth=None, tol=1e-12))]
fn search(map_json: &str, target: &str, depth: Option<usize>, tol: f64) -> PyResult<String> {
    let f = parse(map_json)?;
    let gamma: Combinatorics = target.parse().map_err(to_py)?;
    let family = Family::new(f.alpha(), f.beta(), f.phi_l().clone(), f.phi_r().clone());
    let depth = depth.unwrap_or(gamma.len());
    let r = bisect_b_with(&family, &gamma, depth, tol, &SearchOptions::default()).map_err(to_py)?;
    Ok(dump(&json!(r)))
}

#[pymodule]
fn gaprenorm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NotRenormalizable", m.py().get_type::<NotRenormalizable>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(affine_demo, m)?)?;
    m.add_function(wrap_pyfunction!(find_k, m)?)?;
    m.add_function(wrap_pyfunction!(renormalize, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(block_report, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    Ok(())
}
