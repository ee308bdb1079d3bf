//! Python bindings: local-projection estimation, greedy selection, the
//! long-run variance, simulation designs, true responses, coverage
//! experiments and LP-DiD. Inputs and outputs are plain lists and dicts.

use std::collections::BTreeMap;

use hdlp::dgp::{
    a_dense, a_sparse, build_section3_coefficients, simulate_var as simulate_var_core, true_reduced_form_irf,
    Section3Design, VarDgpSpec,
};
use hdlp::hac::{auto_bandwidth, newey_west as newey_west_core, Bandwidth, HacConfig};
use hdlp::lp::{estimate_irf as estimate_irf_core, LpEstimate, LpSpec, Method, TimeSeriesMatrix};
use hdlp::lpdid::{lpdid_estimate, LpDidSpec, PanelDataset, PanelVariance};
use hdlp::montecarlo::{run_monte_carlo, McDesign, McOptions};
use hdlp::oga::{select_columns, OgaConfig, ScoreNorm};
use hdlp::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::UnknownColumn(_)
        | Error::NonFinite(_)
        | Error::NonAbsorbingTreatment(_)
        | Error::NonStationarySpec(_)
        | Error::InsufficientSample { .. }
        | Error::BandwidthTooLarge { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    match name {
        "double_oga" => Ok(Method::DoubleOga),
        "conventional_lp" => Ok(Method::ConventionalLp),
        other => Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
}

fn oga_config(c_star: Option<f64>, score_norm: &str, fixed_steps: Option<usize>) -> PyResult<OgaConfig> {
    let mut cfg = match c_star {
        Some(c) => OgaConfig::with_c_star(c),
        None => OgaConfig::default(),
    };
    cfg.score_norm = match score_norm {
        "projected" => ScoreNorm::Projected,
        "original" => ScoreNorm::Original,
        other => return Err(PyValueError::new_err(format!("unknown score_norm {other:?}"))),
    };
    cfg.fixed_steps = fixed_steps;
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

fn hac_config(bandwidth: Option<usize>) -> HacConfig {
    HacConfig { bandwidth: bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed), ..HacConfig::default() }
}

fn loading(name: &str, n: usize) -> PyResult<Vec<f64>> {
    match name {
        "sparse" => Ok(a_sparse(n)),
        "dense" => Ok(a_dense(n)),
        other => Err(PyValueError::new_err(format!("loading must be 'sparse' or 'dense', got {other:?}"))),
    }
}

fn section3(rho: f64, loading_name: &str, t: usize, horizons: Option<Vec<usize>>) -> PyResult<Section3Design> {
    let mut d = Section3Design::sparse(rho);
    d.a = loading(loading_name, d.n)?;
    d.t = t;
    if let Some(h) = horizons {
        d.horizons = h;
    }
    d.validate().map_err(to_py)?;
    Ok(d)
}

fn columns_dict(data: &TimeSeriesMatrix) -> BTreeMap<String, Vec<f64>> {
    data.names().iter().map(|n| (n.clone(), data.series(n).expect("own column"))).collect()
}

/// One horizon of an impulse-response estimate.
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct IrfEstimate {
    pub horizon: usize,
    pub method: String,
    pub beta: f64,
    pub se: f64,
    /// `(level, low, high)` per requested level.
    pub intervals: Vec<(f64, f64, f64)>,
    pub selected_y: Vec<usize>,
    pub selected_x: Vec<usize>,
    pub union_set: Vec<usize>,
    pub sigma_sq: f64,
    pub bandwidth: usize,
    pub c_star_y: Option<f64>,
    pub c_star_x: Option<f64>,
    pub effective_t: usize,
}

#[pymethods]
impl IrfEstimate {
    fn __repr__(&self) -> String {
        format!("IrfEstimate(horizon={}, method={}, beta={}, se={})", self.horizon, self.method, self.beta, self.se)
    }
}

impl From<LpEstimate> for IrfEstimate {
    fn from(e: LpEstimate) -> Self {
        Self {
            horizon: e.horizon,
            method: e.method.to_string(),
            beta: e.beta,
            se: e.se,
            intervals: e.intervals.iter().map(|c| (c.level, c.low, c.high)).collect(),
            selected_y: e.selected_y,
            selected_x: e.selected_x,
            union_set: e.union_set,
            sigma_sq: e.sigma_sq,
            bandwidth: e.bandwidth,
            c_star_y: e.c_star_y,
            c_star_x: e.c_star_x,
            effective_t: e.effective_t,
        }
    }
}

fn collect_horizons(results: Vec<(usize, hdlp::Result<LpEstimate>)>) -> PyResult<Vec<IrfEstimate>> {
    let failures: Vec<String> =
        results.iter().filter_map(|(h, r)| r.as_ref().err().map(|e| format!("horizon {h}: {e}"))).collect();
    if !failures.is_empty() {
        return Err(PyRuntimeError::new_err(failures.join("; ")));
    }
    Ok(results.into_iter().map(|(_, r)| r.expect("checked").into()).collect())
}

/// Local-projection impulse responses. `data` maps series names to equally
/// long lists; `W` holds `contemporaneous` (dated t) and `lags + lag_augment`
/// lags of each `lagged` series, plus an intercept.
#[pyfunction]
#[pyo3(signature = (data, response, shock, horizons, lags, lagged, contemporaneous=Vec::new(), lag_augment=0,
    include_intercept=true, method="double_oga", levels=vec![0.95], c_star=None, bandwidth=None))]
#[allow(clippy::too_many_arguments)]
fn estimate_irf(
    data: BTreeMap<String, Vec<f64>>,
    response: String,
    shock: String,
    horizons: Vec<usize>,
    lags: usize,
    lagged: Vec<String>,
    contemporaneous: Vec<String>,
    lag_augment: usize,
    include_intercept: bool,
    method: &str,
    levels: Vec<f64>,
    c_star: Option<f64>,
    bandwidth: Option<usize>,
) -> PyResult<Vec<IrfEstimate>> {
    let (names, cols): (Vec<String>, Vec<Vec<f64>>) = data.into_iter().unzip();
    let ts = TimeSeriesMatrix::from_columns(names, &cols).map_err(to_py)?;
    let spec = LpSpec { response, shock, contemporaneous, lagged, lags, horizons, include_intercept, lag_augment };
    let oga = oga_config(c_star, "projected", None)?;
    let irf = estimate_irf_core(&ts, &spec, parse_method(method)?, &oga, &hac_config(bandwidth), &levels)
        .map_err(to_py)?;
    collect_horizons(irf.horizons.into_iter().map(|o| (o.horizon, o.result)).collect())
}

/// Greedy ordering truncated by the information criterion.
#[pyclass(frozen, get_all)]
pub struct SelectionPath {
    pub ordered_indices: Vec<usize>,
    pub sigma_sq_path: Vec<f64>,
    pub hdaic_path: Vec<f64>,
    pub chosen_m: usize,
    pub chosen_set: Vec<usize>,
    pub c_star_used: f64,
}

/// Selects among candidate `columns` (a list of equally long lists) for `y`.
/// `c_star=None` chooses the penalty by held-out prediction error.
#[pyfunction]
#[pyo3(signature = (columns, y, c_star=None, score_norm="projected", fixed_steps=None))]
fn oga_select(
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    c_star: Option<f64>,
    score_norm: &str,
    fixed_steps: Option<usize>,
) -> PyResult<SelectionPath> {
    if columns.iter().any(|c| c.len() != y.len()) {
        return Err(PyValueError::new_err("every column must have len(y) entries"));
    }
    if columns.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
        return Err(PyValueError::new_err("non-finite input"));
    }
    let p = select_columns(&columns, &y, &oga_config(c_star, score_norm, fixed_steps)?).map_err(to_py)?;
    Ok(SelectionPath {
        ordered_indices: p.ordered_indices,
        sigma_sq_path: p.sigma_sq_path,
        hdaic_path: p.hdaic_path,
        chosen_m: p.chosen_m,
        chosen_set: p.chosen_set,
        c_star_used: p.c_star_used,
    })
}

/// Bartlett long-run variance; `bandwidth=None` uses the automatic rule.
#[pyfunction]
#[pyo3(signature = (psi, bandwidth=None))]
fn newey_west(psi: Vec<f64>, bandwidth: Option<usize>) -> PyResult<f64> {
    newey_west_core(&psi, bandwidth.unwrap_or_else(|| auto_bandwidth(psi.len()))).map_err(to_py)
}

/// One draw of the persistent sparse/dense ten-variable design.
#[pyfunction]
#[pyo3(signature = (rho, loading="sparse", t=300, seed=0))]
fn simulate_section3(rho: f64, loading: &str, t: usize, seed: u64) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let (spec, _) = build_section3_coefficients(&section3(rho, loading, t, None)?).map_err(to_py)?;
    let data = simulate_var_core(&spec, t, &mut ChaCha20Rng::seed_from_u64(seed)).map_err(to_py)?;
    Ok(columns_dict(&data))
}

/// Gaussian VAR; `coefficients[l][i][j]` is entry (i, j) of `B_{l+1}`.
#[pyfunction]
#[pyo3(signature = (coefficients, sigma, t, seed=0, burn_in=500))]
fn simulate_var(
    coefficients: Vec<Vec<Vec<f64>>>,
    sigma: Vec<Vec<f64>>,
    t: usize,
    seed: u64,
    burn_in: usize,
) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let mut spec = VarDgpSpec::new(coefficients, sigma).map_err(to_py)?;
    spec.burn_in = burn_in;
    let data = simulate_var_core(&spec, t, &mut ChaCha20Rng::seed_from_u64(seed)).map_err(to_py)?;
    Ok(columns_dict(&data))
}

/// Reduced-form response of variable `response` to a unit innovation in
/// `innovation` (0-based) at each horizon.
#[pyfunction]
fn true_irf(
    coefficients: Vec<Vec<Vec<f64>>>,
    response: usize,
    innovation: usize,
    horizons: Vec<usize>,
) -> PyResult<Vec<f64>> {
    let n = coefficients.first().map_or(0, Vec::len);
    let sigma = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let spec = VarDgpSpec::new(coefficients, sigma).map_err(to_py)?;
    true_reduced_form_irf(&spec, response, innovation, &horizons).map_err(to_py)
}

/// True response of `y2` to the `y1` innovation in the persistent design.
#[pyfunction]
#[pyo3(signature = (rho, horizons, loading="sparse"))]
fn section3_true_irf(rho: f64, horizons: Vec<usize>, loading: &str) -> PyResult<Vec<f64>> {
    let (spec, _) = build_section3_coefficients(&section3(rho, loading, 300, None)?).map_err(to_py)?;
    true_reduced_form_irf(&spec, 1, 0, &horizons).map_err(to_py)
}

/// Aggregate for one (method, horizon, level).
#[pyclass(frozen, get_all)]
pub struct McCell {
    pub method: String,
    pub horizon: usize,
    pub level: f64,
    pub true_value: f64,
    pub coverage: f64,
    pub median_width: f64,
    pub n_success: usize,
    pub n_failed: usize,
}

#[pymethods]
impl McCell {
    fn __repr__(&self) -> String {
        format!(
            "McCell(method={}, horizon={}, level={}, coverage={}, median_width={})",
            self.method, self.horizon, self.level, self.coverage, self.median_width
        )
    }
}

/// Coverage experiment on the persistent design.
#[pyfunction]
#[pyo3(signature = (rho, n_reps, horizons, loading="sparse", methods=vec!["double_oga".to_string()],
    levels=vec![0.95], seed=0, threads=None))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo_section3(
    py: Python<'_>,
    rho: f64,
    n_reps: usize,
    horizons: Vec<usize>,
    loading: &str,
    methods: Vec<String>,
    levels: Vec<f64>,
    seed: u64,
    threads: Option<usize>,
) -> PyResult<Vec<McCell>> {
    let design = McDesign::section3(&section3(rho, loading, 300, Some(horizons))?).map_err(to_py)?;
    let methods = methods.iter().map(|m| parse_method(m)).collect::<PyResult<Vec<_>>>()?;
    let mut opts = McOptions::new(methods, n_reps, levels, seed);
    opts.threads = threads;
    let report = py.detach(|| run_monte_carlo(&design, &opts)).map_err(to_py)?;
    Ok(report
        .cells
        .into_iter()
        .map(|c| McCell {
            method: c.method.to_string(),
            horizon: c.horizon,
            level: c.level,
            true_value: c.true_value,
            coverage: c.coverage,
            median_width: c.median_width,
            n_success: c.n_success,
            n_failed: c.n_failed,
        })
        .collect())
}

/// LP-DiD on a long panel given as parallel lists.
#[pyfunction]
#[pyo3(signature = (units, times, outcome, treatment, horizons, outcome_lags=0, method="double_oga",
    levels=vec![0.95], cluster_by_unit=false))]
#[allow(clippy::too_many_arguments)]
fn lpdid(
    units: Vec<String>,
    times: Vec<i64>,
    outcome: Vec<f64>,
    treatment: Vec<f64>,
    horizons: Vec<usize>,
    outcome_lags: usize,
    method: &str,
    levels: Vec<f64>,
    cluster_by_unit: bool,
) -> PyResult<Vec<IrfEstimate>> {
    let panel = PanelDataset::new(units, times, outcome, treatment, vec![]).map_err(to_py)?;
    let mut spec = LpDidSpec::new(horizons);
    spec.outcome_lags = outcome_lags;
    spec.method = parse_method(method)?;
    spec.levels = levels;
    spec.variance = if cluster_by_unit { PanelVariance::ClusterUnit } else { PanelVariance::Hac };
    let est = lpdid_estimate(&panel, &spec, &OgaConfig::default(), &HacConfig::default()).map_err(to_py)?;
    collect_horizons(est)
}

#[pymodule]
mod hdlp_py {
    #[pymodule_export]
    use super::{
        estimate_irf, lpdid, monte_carlo_section3, newey_west, oga_select, section3_true_irf, simulate_section3,
        simulate_var, true_irf, IrfEstimate, McCell, SelectionPath,
    };
}
