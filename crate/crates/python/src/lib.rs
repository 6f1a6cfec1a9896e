use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use stablefluct::checks::Suite;
use stablefluct::identities::{self, EntranceExitMode, LadderSide};
use stablefluct::montecarlo::{self, Experiment, SeedSpec};
use stablefluct::num_complex::Complex64;
use stablefluct::operators;
use stablefluct::{Error, Point};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Pole(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn point(p: &StableParams, name: &str, coords: Vec<f64>) -> PyResult<Point> {
    if coords.len() != p.inner.d() {
        return Err(PyValueError::new_err(format!("{name} has {} coordinates but d = {}", coords.len(), p.inner.d())));
    }
    Ok(Point::new(coords))
}

/// Dimension `d >= 2` and stability index `0 < alpha < 2`.
#[pyclass(frozen, module = "stablefluct_py")]
struct StableParams {
    inner: stablefluct::StableParams,
}

#[pymethods]
impl StableParams {
    #[new]
    fn new(d: usize, alpha: f64) -> PyResult<Self> {
        stablefluct::StableParams::new(d, alpha).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn __repr__(&self) -> String {
        format!("StableParams(d={}, alpha={})", self.inner.d(), self.inner.alpha())
    }
}

#[pyclass(frozen, module = "stablefluct_py", get_all)]
struct IdentityReport {
    name: String,
    params: BTreeMap<String, String>,
    lhs: f64,
    rhs: f64,
    abs_err: f64,
    rel_err: f64,
    tol: f64,
    passed: bool,
}

#[pymethods]
impl IdentityReport {
    fn __repr__(&self) -> String {
        format!(
            "IdentityReport(name={:?}, lhs={}, rhs={}, rel_err={:e}, passed={})",
            self.name,
            self.lhs,
            self.rhs,
            self.rel_err,
            if self.passed { "True" } else { "False" }
        )
    }
}

impl From<stablefluct::IdentityReport> for IdentityReport {
    fn from(r: stablefluct::IdentityReport) -> Self {
        Self {
            name: r.name,
            params: r.params.into_iter().collect(),
            lhs: r.lhs,
            rhs: r.rhs,
            abs_err: r.abs_err,
            rel_err: r.rel_err,
            tol: r.tol,
            passed: r.pass,
        }
    }
}

#[pyclass(frozen, module = "stablefluct_py", get_all)]
struct SimulationResult {
    experiment: String,
    estimate: f64,
    stderr: f64,
    n: u64,
    reference: f64,
    seed: u64,
    workers: usize,
    ks: Option<f64>,
}

#[pymethods]
impl SimulationResult {
    fn __repr__(&self) -> String {
        format!(
            "SimulationResult(experiment={:?}, estimate={}, stderr={}, reference={}, n={})",
            self.experiment, self.estimate, self.stderr, self.reference, self.n
        )
    }
}

#[pyfunction]
fn closest_reach_density(p: &StableParams, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    identities::closest_reach_density(&p.inner, &point(p, "x", x)?, &point(p, "y", y)?).map_err(to_py)
}

#[pyfunction]
fn closest_reach_radial_cdf(p: &StableParams, rho: f64) -> PyResult<f64> {
    identities::closest_reach_radial_cdf(&p.inner, rho).map_err(to_py)
}

#[pyfunction]
fn jump_density(p: &StableParams, w: Vec<f64>) -> PyResult<f64> {
    identities::jump_density(&p.inner, &point(p, "w", w)?).map_err(to_py)
}

#[pyfunction]
fn survival_probability(p: &StableParams, x: Vec<f64>, r: f64) -> PyResult<f64> {
    identities::survival_probability(&p.inner, &point(p, "x", x)?, r).map_err(to_py)
}

/// `mode` is `"entrance"` or `"exit"`.
#[pyfunction]
fn first_passage_density(p: &StableParams, x: Vec<f64>, r: f64, mode: &str, y: Vec<f64>) -> PyResult<f64> {
    let mode: EntranceExitMode = mode.parse().map_err(to_py)?;
    identities::first_passage_density(&p.inner, &point(p, "x", x)?, r, mode, &point(p, "y", y)?).map_err(to_py)
}

#[pyfunction]
fn resolvent_density(p: &StableParams, r: f64, mode: &str, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    let mode: EntranceExitMode = mode.parse().map_err(to_py)?;
    identities::resolvent_density(&p.inner, r, mode, &point(p, "x", x)?, &point(p, "y", y)?).map_err(to_py)
}

#[pyfunction]
fn expected_exit_time(p: &StableParams, x: Vec<f64>, r: f64) -> PyResult<f64> {
    identities::expected_exit_time(&p.inner, &point(p, "x", x)?, r).map_err(to_py)
}

/// `side` is `"minus"` or `"plus"`.
#[pyfunction]
fn ladder_potential_density(p: &StableParams, side: &str, x: Vec<f64>, z: Vec<f64>) -> PyResult<f64> {
    let side: LadderSide = side.parse().map_err(to_py)?;
    identities::ladder_potential_density(&p.inner, side, &point(p, "x", x)?, &point(p, "z", z)?).map_err(to_py)
}

#[pyfunction]
fn ladder_laplace_exponent(p: &StableParams, lam: f64) -> PyResult<f64> {
    identities::ladder_laplace_exponent(&p.inner, lam).map_err(to_py)
}

#[pyfunction]
fn stationary_density(p: &StableParams, w: Vec<f64>) -> PyResult<f64> {
    identities::stationary_density(&p.inner, &point(p, "w", w)?).map_err(to_py)
}

#[pyfunction]
fn stationary_radial_moment(p: &StableParams, gamma: f64) -> PyResult<f64> {
    identities::stationary_radial_moment(&p.inner, gamma).map_err(to_py)
}

#[pyfunction]
fn escape_limit(p: &StableParams) -> PyResult<f64> {
    identities::escape_limit(&p.inner).map_err(to_py)
}

#[pyfunction]
fn factorization_constant(p: &StableParams) -> PyResult<f64> {
    operators::factorization_constant(&p.inner).map_err(to_py)
}

/// `rho_z[1]` for real `z > 0`.
#[pyfunction]
fn rho_of_one(p: &StableParams, z: f64) -> PyResult<f64> {
    operators::rho_of_one(&p.inner, Complex64::new(z, 0.0)).map(|v| v.re).map_err(to_py)
}

/// `R_z[1]` for real `0 < z < d - alpha`.
#[pyfunction]
fn resolvent_of_one(p: &StableParams, z: f64) -> PyResult<f64> {
    operators::resolvent_of_one(&p.inner, Complex64::new(z, 0.0)).map(|v| v.re).map_err(to_py)
}

/// Residual report of the operator factorisation for `f = 1` (`coordinate = None`)
/// or the coordinate function `phi -> phi_k` (0-based `k`).
#[pyfunction]
#[pyo3(signature = (p, z, coordinate=None, tol=1e-6))]
fn factorization_residual(py: Python<'_>, p: &StableParams, z: f64, coordinate: Option<usize>, tol: f64) -> PyResult<IdentityReport> {
    let d = p.inner.d();
    let f = match coordinate {
        None => operators::SphereFunction::constant(1.0),
        Some(k) if k < d => operators::SphereFunction::coordinate(d, k),
        Some(k) => return Err(PyValueError::new_err(format!("coordinate {k} out of range for d = {d}"))),
    };
    py.detach(|| operators::factorization_residual(&p.inner, z, &f, tol)).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn kelvin_invert(x: Vec<f64>) -> PyResult<Vec<f64>> {
    stablefluct::kelvin_invert(&Point::new(x)).map(Point::into_coords).map_err(to_py)
}

/// Names of the identity suites accepted by [`run_check`].
#[pyfunction]
fn suites() -> Vec<&'static str> {
    Suite::ALL.iter().map(|s| s.name()).collect()
}

#[pyfunction]
#[pyo3(signature = (suite, p, tol=None))]
fn run_check(py: Python<'_>, suite: &str, p: &StableParams, tol: Option<f64>) -> PyResult<Vec<IdentityReport>> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let reports = py.detach(|| suite.run(&p.inner, tol)).map_err(to_py)?;
    Ok(reports.into_iter().map(Into::into).collect())
}

/// `n` draws of the one-sided stable law with `E exp(-l S) = exp(-l^beta)`.
#[pyfunction]
#[pyo3(signature = (beta, n, seed=0))]
fn sample_one_sided_stable(beta: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let mut rng = SeedSpec::new(seed, 0).rng();
    (0..n).map(|_| montecarlo::sample_one_sided_stable(beta, &mut rng).map_err(to_py)).collect()
}

/// Runs a Monte Carlo experiment. `experiment` takes the CLI names
/// (`survival`, `closest-reach-radial`, `first-entrance-position`,
/// `reflected-stationary`, `occupation`); parameters it does not use must be `None`.
#[pyfunction]
#[pyo3(signature = (p, experiment, x0, n, seed=0, workers=1, r=None, dt=None, lo=None, hi=None, doublings=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    p: &StableParams,
    experiment: &str,
    x0: Vec<f64>,
    n: u64,
    seed: u64,
    workers: usize,
    r: Option<f64>,
    dt: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    doublings: Option<u32>,
) -> PyResult<SimulationResult> {
    let x0 = point(p, "x0", x0)?;
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| PyValueError::new_err(format!("{experiment} requires {name}")));
    let unused = |name: &str, set: bool| {
        if set {
            Err(PyValueError::new_err(format!("{name} is not a parameter of {experiment}")))
        } else {
            Ok(())
        }
    };
    let step = dt.unwrap_or(1e-3);
    let exp = match experiment {
        "survival" | "closest-reach-radial" | "first-entrance-position" | "reflected-stationary" => {
            unused("lo", lo.is_some())?;
            unused("hi", hi.is_some())?;
            if experiment != "reflected-stationary" {
                unused("doublings", doublings.is_some())?;
            }
            match experiment {
                "survival" => Experiment::Survival { x0, r: need("r", r)?, dt: step },
                "closest-reach-radial" => {
                    unused("r", r.is_some())?;
                    Experiment::ClosestReachRadial { x0, dt: step }
                }
                "first-entrance-position" => Experiment::FirstEntrancePosition { x0, r: need("r", r)?, dt },
                _ => {
                    unused("r", r.is_some())?;
                    Experiment::ReflectedStationary { x0, dt: step, doublings: doublings.unwrap_or(8) }
                }
            }
        }
        "occupation" => {
            unused("doublings", doublings.is_some())?;
            Experiment::Occupation { x0, r: need("r", r)?, lo: need("lo", lo)?, hi: need("hi", hi)?, dt: step }
        }
        other => return Err(PyValueError::new_err(format!("unknown experiment '{other}'"))),
    };
    let out = py.detach(|| montecarlo::estimate(&p.inner, &exp, n, seed, workers)).map_err(to_py)?;
    Ok(SimulationResult {
        experiment: experiment.to_string(),
        estimate: out.estimate.mean,
        stderr: out.estimate.stderr,
        n: out.estimate.n,
        reference: out.reference,
        seed,
        workers,
        ks: out.ks,
    })
}

#[pymodule]
fn stablefluct_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<StableParams>()?;
    m.add_class::<IdentityReport>()?;
    m.add_class::<SimulationResult>()?;
    m.add_function(wrap_pyfunction!(closest_reach_density, m)?)?;
    m.add_function(wrap_pyfunction!(closest_reach_radial_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(jump_density, m)?)?;
    m.add_function(wrap_pyfunction!(survival_probability, m)?)?;
    m.add_function(wrap_pyfunction!(first_passage_density, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_density, m)?)?;
    m.add_function(wrap_pyfunction!(expected_exit_time, m)?)?;
    m.add_function(wrap_pyfunction!(ladder_potential_density, m)?)?;
    m.add_function(wrap_pyfunction!(ladder_laplace_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_density, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_radial_moment, m)?)?;
    m.add_function(wrap_pyfunction!(escape_limit, m)?)?;
    m.add_function(wrap_pyfunction!(factorization_constant, m)?)?;
    m.add_function(wrap_pyfunction!(rho_of_one, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_of_one, m)?)?;
    m.add_function(wrap_pyfunction!(factorization_residual, m)?)?;
    m.add_function(wrap_pyfunction!(kelvin_invert, m)?)?;
    m.add_function(wrap_pyfunction!(suites, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add_function(wrap_pyfunction!(sample_one_sided_stable, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
