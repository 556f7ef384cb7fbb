//! Python bindings for `moran_core`.
//!
//! Seeds are plain integers; every function that draws randomness takes one
//! and builds its own stream, so calls are reproducible from Python.

use std::collections::BTreeMap;

use moran_core::engine::{self, InitRule, Outcome};
use moran_core::{disorder, fw, observables, rate_law, seeding};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: moran_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn report(r: rate_law::ConditionReport) -> (bool, BTreeMap<String, f64>, String) {
    (r.satisfied, r.quantities, r.caveat)
}

/// Discrete law of resampling rates.
#[pyclass(name = "RateLaw", module = "moran_py", frozen)]
struct PyRateLaw(rate_law::RateLaw);

#[pymethods]
impl PyRateLaw {
    /// From `(rate, probability)` pairs summing to 1.
    #[staticmethod]
    fn finite(pairs: Vec<(f64, f64)>) -> PyResult<Self> {
        rate_law::make_finite_law(&pairs).map(Self).map_err(err)
    }

    /// `r_k = k`, `mu_k = p (1 - p)^(k - 1)`.
    #[staticmethod]
    #[pyo3(signature = (p, eps_trunc = rate_law::DEFAULT_EPS_TRUNC))]
    fn geometric(p: f64, eps_trunc: f64) -> PyResult<Self> {
        rate_law::make_geometric_law(p, eps_trunc)
            .map(Self)
            .map_err(err)
    }

    /// `r_k = k`, `mu_k` proportional to `k^-chi`.
    #[staticmethod]
    #[pyo3(signature = (chi, eps_trunc = rate_law::DEFAULT_EPS_TRUNC))]
    fn power(chi: f64, eps_trunc: f64) -> PyResult<Self> {
        rate_law::make_power_law(chi, eps_trunc)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn from_document(doc: &str) -> PyResult<Self> {
        rate_law::RateLaw::from_document(doc).map(Self).map_err(err)
    }

    fn to_document(&self) -> String {
        self.0.to_document()
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.0.atoms().iter().map(|a| (a.rate, a.prob)).collect()
    }

    #[getter]
    fn truncated_mass(&self) -> f64 {
        self.0.truncated_mass()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn diffusion_constant(&self) -> f64 {
        rate_law::diffusion_constant(&self.0)
    }

    /// `(value, diverges)` for `sum mu_k r_k^b`.
    fn moment(&self, b: f64) -> (f64, bool) {
        let m = rate_law::moment(&self.0, b);
        (m.value, m.diverges)
    }

    /// `(value, diverges)` for `sum mu_k r_k^-a`.
    fn inverse_moment(&self, a: f64) -> (f64, bool) {
        let m = rate_law::inverse_moment(&self.0, a);
        (m.value, m.diverges)
    }

    /// `(satisfied, quantities, caveat)`.
    fn check_condition_i(&self, alpha: f64, beta: f64) -> (bool, BTreeMap<String, f64>, String) {
        report(rate_law::check_condition_i(&self.0, alpha, beta))
    }

    fn check_condition_ii(
        &self,
        gamma: f64,
        delta: f64,
        eps_grid: Vec<f64>,
    ) -> PyResult<(bool, BTreeMap<String, f64>, String)> {
        rate_law::check_condition_ii(&self.0, gamma, delta, &eps_grid)
            .map(report)
            .map_err(err)
    }

    #[pyo3(signature = (residual_threshold = rate_law::DEFAULT_FIT_RESIDUAL))]
    fn check_condition_iii(
        &self,
        residual_threshold: f64,
    ) -> (bool, BTreeMap<String, f64>, String) {
        report(rate_law::check_condition_iii(&self.0, residual_threshold))
    }

    fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeding::stream(seed);
        (0..count)
            .map(|_| rate_law::sample_rate(&self.0, &mut rng))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "RateLaw(atoms={}, D={:.6})",
            self.0.len(),
            rate_law::diffusion_constant(&self.0)
        )
    }
}

/// Quenched assignment of rates to the `N` individuals, grouped by class.
#[pyclass(name = "Environment", module = "moran_py", frozen)]
struct PyEnvironment(disorder::Environment);

#[pymethods]
impl PyEnvironment {
    /// From `(rate, count)` pairs with distinct rates.
    #[staticmethod]
    fn from_counts(pairs: Vec<(f64, u64)>) -> PyResult<Self> {
        disorder::environment_from_counts(&pairs)
            .map(Self)
            .map_err(err)
    }

    /// `n` i.i.d. rates from `law`.
    #[staticmethod]
    fn draw(law: &PyRateLaw, n: u64, seed: u64) -> PyResult<Self> {
        disorder::draw_environment(&law.0, n, &mut seeding::stream(seed))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn from_document(doc: &str) -> PyResult<Self> {
        disorder::Environment::from_document(doc)
            .map(Self)
            .map_err(err)
    }

    fn to_document(&self) -> String {
        self.0.to_document()
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n()
    }

    #[getter]
    fn d_n(&self) -> f64 {
        self.0.d_n()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    #[getter]
    fn m_minus(&self) -> f64 {
        self.0.m_minus()
    }

    #[getter]
    fn m_plus(&self) -> f64 {
        self.0.m_plus()
    }

    fn classes(&self) -> Vec<(f64, u64)> {
        self.0.classes().iter().map(|c| (c.rate, c.count)).collect()
    }

    fn fractions(&self) -> Vec<f64> {
        self.0.fractions().to_vec()
    }

    fn key_ratio(&self) -> f64 {
        disorder::key_ratio(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.num_classes()
    }

    fn __repr__(&self) -> String {
        format!(
            "Environment(N={}, classes={}, D_N={:.6})",
            self.0.n(),
            self.0.num_classes(),
            self.0.d_n()
        )
    }
}

/// Exactly one of the keyword arguments selects the initial condition.
fn init_rule(
    s0: Option<f64>,
    fractions: Option<Vec<f64>>,
    classes: Option<Vec<usize>>,
    uniform: Option<f64>,
) -> PyResult<InitRule> {
    let rules: Vec<InitRule> = [
        s0.map(InitRule::SameFraction),
        fractions.map(InitRule::Fractions),
        classes.map(InitRule::WholeClasses),
        uniform.map(InitRule::Uniform),
    ]
    .into_iter()
    .flatten()
    .collect();
    match <[InitRule; 1]>::try_from(rules) {
        Ok([rule]) => Ok(rule),
        Err(_) => Err(PyValueError::new_err(
            "give exactly one of s0, fractions, classes, uniform",
        )),
    }
}

#[pyfunction]
fn expected_distinct(law: &PyRateLaw, n: u64) -> PyResult<(f64, bool)> {
    disorder::expected_distinct(&law.0, n)
        .map(|d| (d.value, d.lower_bound))
        .map_err(err)
}

/// `(S, S_check)` for a point `y` with `0 <= y_k <= n_k`.
#[pyfunction]
fn masses(y: Vec<f64>, env: &PyEnvironment) -> PyResult<(f64, f64)> {
    observables::masses(&y, &env.0).map_err(err)
}

#[pyfunction]
fn project_p(y: Vec<f64>, env: &PyEnvironment) -> Vec<f64> {
    observables::project_p(&y, &env.0)
}

#[pyfunction]
fn project_pcheck(y: Vec<f64>, env: &PyEnvironment) -> Vec<f64> {
    observables::project_pcheck(&y, &env.0)
}

#[pyfunction]
fn delta(y: Vec<f64>, env: &PyEnvironment) -> Vec<f64> {
    observables::delta(&y, &env.0)
}

#[pyfunction]
fn lyapunov_h(y: Vec<f64>, env: &PyEnvironment) -> f64 {
    observables::lyapunov_h(&y, &env.0)
}

#[pyfunction]
fn dist2_p(y: Vec<f64>, env: &PyEnvironment) -> f64 {
    observables::dist2_p(&y, &env.0)
}

#[pyfunction]
fn lyapunov_bound(env: &PyEnvironment, g0: f64, t: f64) -> f64 {
    observables::lyapunov_bound(&env.0, g0, t)
}

/// `(term1, term2, term3, term4)`; `term4` is `None` without `s_ref`.
#[pyfunction]
#[pyo3(signature = (y, env, law, s_ref = None))]
fn triangle_terms(
    y: Vec<f64>,
    env: &PyEnvironment,
    law: &PyRateLaw,
    s_ref: Option<f64>,
) -> PyResult<(f64, f64, f64, Option<f64>)> {
    observables::triangle_terms(&y, &env.0, &law.0, s_ref)
        .map(|t| (t.term1, t.term2, t.term3, t.term4))
        .map_err(err)
}

#[pyfunction]
fn mz_integral(grid: Vec<f64>, series: Vec<Vec<f64>>, a: f64, b: f64) -> PyResult<f64> {
    observables::mz_integral(&grid, &series, a, b).map_err(err)
}

/// Exact path observed on `grid`. Returns a dict of columns.
#[pyfunction]
#[pyo3(signature = (env, grid, seed, *, s0 = None, fractions = None, classes = None, uniform = None, snapshots = false))]
#[allow(clippy::too_many_arguments)]
fn simulate_path(
    py: Python<'_>,
    env: &PyEnvironment,
    grid: Vec<f64>,
    seed: u64,
    s0: Option<f64>,
    fractions: Option<Vec<f64>>,
    classes: Option<Vec<usize>>,
    uniform: Option<f64>,
    snapshots: bool,
) -> PyResult<Py<PyAny>> {
    let rule = init_rule(s0, fractions, classes, uniform)?;
    let env = &env.0;
    let rec = py
        .detach(|| engine::simulate_path(env, &rule, &grid, &mut seeding::stream(seed), snapshots))
        .map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", rec.times)?;
    d.set_item("S", rec.s)?;
    d.set_item("S_check", rec.s_check)?;
    d.set_item("h", rec.h)?;
    d.set_item("dist2_P", rec.dist2_p)?;
    d.set_item("absorbed", rec.absorbed)?;
    d.set_item("absorption_time", rec.absorption_time)?;
    d.set_item("snapshots", rec.snapshots)?;
    Ok(d.into_any().unbind())
}

/// Values of `S` at `grid` for `replicas` independent paths, seeded by
/// `mix64(master_seed, i)`. Runs in parallel; the result does not depend on
/// the thread count.
#[pyfunction]
#[pyo3(signature = (env, grid, replicas, master_seed, *, s0 = None, fractions = None, classes = None, uniform = None))]
#[allow(clippy::too_many_arguments)]
fn replicate_s(
    py: Python<'_>,
    env: &PyEnvironment,
    grid: Vec<f64>,
    replicas: usize,
    master_seed: u64,
    s0: Option<f64>,
    fractions: Option<Vec<f64>>,
    classes: Option<Vec<usize>>,
    uniform: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let rule = init_rule(s0, fractions, classes, uniform)?;
    let env = &env.0;
    py.detach(|| {
        seeding::replicate(replicas, master_seed, |_, rng| {
            engine::simulate_path(env, &rule, &grid, rng, false).map(|p| p.s)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
    })
    .map_err(err)
}

/// `("fixed_one" | "fixed_zero" | "timeout", time)`.
#[pyfunction]
#[pyo3(signature = (env, seed, t_max, *, s0 = None, fractions = None, classes = None, uniform = None))]
#[allow(clippy::too_many_arguments)]
fn run_to_absorption(
    py: Python<'_>,
    env: &PyEnvironment,
    seed: u64,
    t_max: f64,
    s0: Option<f64>,
    fractions: Option<Vec<f64>>,
    classes: Option<Vec<usize>>,
    uniform: Option<f64>,
) -> PyResult<(&'static str, f64)> {
    let rule = init_rule(s0, fractions, classes, uniform)?;
    let env = &env.0;
    let (outcome, t) = py
        .detach(|| engine::run_to_absorption(env, &rule, &mut seeding::stream(seed), t_max))
        .map_err(err)?;
    let tag = match outcome {
        Outcome::FixedOne => "fixed_one",
        Outcome::FixedZero => "fixed_zero",
        Outcome::Timeout => "timeout",
    };
    Ok((tag, t))
}

/// Euler-Maruyama path of `dS = sqrt(2 D S (1 - S)) dW` on `grid`.
#[pyfunction]
#[pyo3(signature = (d, s0, grid, seed, dt = fw::DEFAULT_DT))]
fn simulate_fw(d: f64, s0: f64, grid: Vec<f64>, seed: u64, dt: f64) -> PyResult<Vec<f64>> {
    let spec = fw::DiffusionSpec::new(d, s0, dt).map_err(err)?;
    fw::simulate_fw(&spec, &grid, &mut seeding::stream(seed)).map_err(err)
}

/// `(mean, variance, heterozygosity)` of the reference diffusion at `t`.
#[pyfunction]
fn moments_fw(d: f64, s0: f64, t: f64) -> PyResult<(f64, f64, f64)> {
    let spec = fw::DiffusionSpec::new(d, s0, fw::DEFAULT_DT).map_err(err)?;
    fw::moments_fw(&spec, t)
        .map(|m| (m.mean, m.variance, m.heterozygosity))
        .map_err(err)
}

#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    fw::ks_two_sample(&a, &b).map_err(err)
}

/// `(mean, variance, se_mean, se_variance)`.
#[pyfunction]
fn mean_var_ci(samples: Vec<f64>) -> PyResult<(f64, f64, f64, f64)> {
    fw::mean_var_ci(&samples)
        .map(|s| (s.mean, s.variance, s.se_mean, s.se_variance))
        .map_err(err)
}

/// `(slope, se, predicted)` for `Var S(t_small) / t_small`.
#[pyfunction]
fn short_time_variance_probe(
    py: Python<'_>,
    env: &PyEnvironment,
    s0: f64,
    t_small: f64,
    replicas: usize,
    master_seed: u64,
) -> PyResult<(f64, f64, f64)> {
    let env = &env.0;
    py.detach(|| fw::short_time_variance_probe(env, s0, t_small, replicas, master_seed))
        .map(|p| (p.slope, p.se, p.predicted))
        .map_err(err)
}

#[pyfunction]
fn mix64(master_seed: u64, index: u64) -> u64 {
    seeding::mix64(master_seed, index)
}

#[pymodule]
fn moran_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRateLaw>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_function(wrap_pyfunction!(expected_distinct, m)?)?;
    m.add_function(wrap_pyfunction!(masses, m)?)?;
    m.add_function(wrap_pyfunction!(project_p, m)?)?;
    m.add_function(wrap_pyfunction!(project_pcheck, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_h, m)?)?;
    m.add_function(wrap_pyfunction!(dist2_p, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_bound, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_terms, m)?)?;
    m.add_function(wrap_pyfunction!(mz_integral, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(replicate_s, m)?)?;
    m.add_function(wrap_pyfunction!(run_to_absorption, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_fw, m)?)?;
    m.add_function(wrap_pyfunction!(moments_fw, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(mean_var_ci, m)?)?;
    m.add_function(wrap_pyfunction!(short_time_variance_probe, m)?)?;
    m.add_function(wrap_pyfunction!(mix64, m)?)?;
    Ok(())
}
