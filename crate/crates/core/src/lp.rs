//! Local projections with double greedy selection of controls.
//!
//! For each horizon `h` the response `y_{t+h}` and the shock `x_t` are each
//! run through the greedy path over the controls `w_t`; the union of the two
//! selected sets enters the final least-squares regression, whose coefficient
//! on `x_t` is the impulse response estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hac::{cluster_variance, hac_variance, HacConfig, HacVariance, PsiSource, MIN_HAC_LEN};
use crate::linalg::{dot, norm, ols_columns, Matrix, OrthoBasis, RANK_TOL};
use crate::oga::{select_columns, OgaConfig};

/// Raw observations: one column per named series, one row per period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    names: Vec<String>,
    values: Matrix,
}

impl TimeSeriesMatrix {
    pub fn new(names: Vec<String>, values: Matrix) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                values.cols()
            )));
        }
        let values = values.with_column_names(names.clone())?;
        Ok(Self { names, values })
    }

    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        Self::new(names, Matrix::from_columns(rows, columns)?)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn n_periods(&self) -> usize {
        self.values.rows()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn series(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.values.column(self.index_of(name)?))
    }
}

/// Layout of one horizon-by-horizon regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSpec {
    pub response: String,
    pub shock: String,
    /// Controls entering at date `t`.
    #[serde(default)]
    pub contemporaneous: Vec<String>,
    /// Controls entering at dates `t-1, ..., t-L`.
    #[serde(default)]
    pub lagged: Vec<String>,
    #[serde(default)]
    pub lags: usize,
    pub horizons: Vec<usize>,
    #[serde(default = "default_true")]
    pub include_intercept: bool,
    /// Extra lags beyond `lags`.
    #[serde(default)]
    pub lag_augment: usize,
}

fn default_true() -> bool {
    true
}

impl LpSpec {
    pub fn total_lags(&self) -> usize {
        self.lags + self.lag_augment
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::InvalidArgument("no horizons requested".into()));
        }
        if self.contemporaneous.contains(&self.shock) {
            return Err(Error::InvalidArgument(format!(
                "shock `{}` also listed as a contemporaneous control",
                self.shock
            )));
        }
        Ok(())
    }
}

/// Where a control column comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnSource {
    Variable { name: String, lag: usize },
    Intercept,
}

/// Aligned arrays for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LpDataset {
    pub y_h: Vec<f64>,
    pub x: Vec<f64>,
    pub w: Matrix,
    /// Columns of `w` always kept in every regression and excluded from
    /// selection (the intercept, fixed effects).
    pub protected: Vec<usize>,
    pub column_map: Vec<ColumnSource>,
    pub effective_t: usize,
    pub horizon: usize,
}

impl LpDataset {
    /// Dataset from pre-aligned arrays; every column of `w` is selectable
    /// except the listed protected ones.
    pub fn from_arrays(
        y_h: Vec<f64>,
        x: Vec<f64>,
        w: Matrix,
        protected: Vec<usize>,
        horizon: usize,
    ) -> Result<Self> {
        let t = y_h.len();
        if x.len() != t || w.rows() != t {
            return Err(Error::DimensionMismatch(format!(
                "y has {t} rows, x has {}, W has {}",
                x.len(),
                w.rows()
            )));
        }
        if t < MIN_HAC_LEN {
            return Err(Error::InsufficientSample { needed: MIN_HAC_LEN, available: t });
        }
        if protected.iter().any(|&j| j >= w.cols()) {
            return Err(Error::DimensionMismatch("protected column out of range".into()));
        }
        let column_map = (0..w.cols())
            .map(|j| ColumnSource::Variable { name: format!("w{j}"), lag: 0 })
            .collect();
        Ok(Self { y_h, x, w, protected, column_map, effective_t: t, horizon })
    }

    pub fn selectable(&self) -> Vec<usize> {
        (0..self.w.cols()).filter(|j| !self.protected.contains(j)).collect()
    }
}

/// Aligns `y_{t+h}`, `x_t`, contemporaneous controls at `t` and lagged
/// controls at `t-1..t-L` (lag-major: all series at lag 1, then lag 2, ...).
/// The intercept, when requested, is the last column of `W` and is protected.
pub fn build_lp_dataset(data: &TimeSeriesMatrix, spec: &LpSpec, h: usize) -> Result<LpDataset> {
    spec.validate()?;
    let n = data.n_periods();
    let l = spec.total_lags();
    let needed = h + l + MIN_HAC_LEN;
    if n < needed {
        return Err(Error::InsufficientSample { needed, available: n });
    }
    let y = data.series(&spec.response)?;
    let x = data.series(&spec.shock)?;
    let contemp: Vec<(String, Vec<f64>)> = spec
        .contemporaneous
        .iter()
        .map(|c| data.series(c).map(|s| (c.clone(), s)))
        .collect::<Result<_>>()?;
    let lagged: Vec<(String, Vec<f64>)> = spec
        .lagged
        .iter()
        .map(|c| data.series(c).map(|s| (c.clone(), s)))
        .collect::<Result<_>>()?;

    let t_eff = n - h - l;
    let rows = l..l + t_eff;
    let y_h: Vec<f64> = rows.clone().map(|t| y[t + h]).collect();
    let x_t: Vec<f64> = rows.clone().map(|t| x[t]).collect();

    let mut columns = Vec::new();
    let mut column_map = Vec::new();
    for (name, s) in &contemp {
        columns.push(rows.clone().map(|t| s[t]).collect::<Vec<f64>>());
        column_map.push(ColumnSource::Variable { name: name.clone(), lag: 0 });
    }
    for lag in 1..=l {
        for (name, s) in &lagged {
            columns.push(rows.clone().map(|t| s[t - lag]).collect::<Vec<f64>>());
            column_map.push(ColumnSource::Variable { name: name.clone(), lag });
        }
    }
    let mut protected = Vec::new();
    if spec.include_intercept {
        protected.push(columns.len());
        columns.push(vec![1.0; t_eff]);
        column_map.push(ColumnSource::Intercept);
    }
    let w = Matrix::from_columns(t_eff, &columns)?;
    Ok(LpDataset { y_h, x: x_t, w, protected, column_map, effective_t: t_eff, horizon: h })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Double greedy selection with the information-criterion stop.
    DoubleOga,
    /// No selection: all controls enter.
    ConventionalLp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::DoubleOga => "double_oga",
            Method::ConventionalLp => "conventional_lp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpEstimate {
    pub horizon: usize,
    pub method: Method,
    pub beta: f64,
    /// `sigma_h / sqrt(T)`
    pub se: f64,
    pub intervals: Vec<ConfidenceInterval>,
    /// Indices into the dataset's `W`.
    pub selected_y: Vec<usize>,
    pub selected_x: Vec<usize>,
    pub union_set: Vec<usize>,
    pub tau_sq: f64,
    pub omega: f64,
    pub sigma_sq: f64,
    pub residuals_u: Vec<f64>,
    pub residuals_v: Vec<f64>,
    pub bandwidth: usize,
    pub c_star_y: Option<f64>,
    pub c_star_x: Option<f64>,
    pub effective_t: usize,
}

impl LpEstimate {
    pub fn interval(&self, level: f64) -> Option<&ConfidenceInterval> {
        self.intervals.iter().find(|c| (c.level - level).abs() < 1e-12)
    }
}

pub fn validate_levels(levels: &[f64]) -> Result<()> {
    match levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        Some(l) => Err(Error::InvalidArgument(format!("confidence level {l} outside (0, 1)"))),
        None => Ok(()),
    }
}

/// Two-sided normal critical value for coverage `level`.
pub fn normal_critical_value(level: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Response, shock and controls after partialling out the protected columns.
struct Partialled {
    y: Vec<f64>,
    x: Vec<f64>,
    /// `(original W index, partialled column)` for admissible controls.
    controls: Vec<(usize, Vec<f64>)>,
}

fn partial_out_protected(ds: &LpDataset) -> Partialled {
    let t = ds.effective_t;
    let mut basis = OrthoBasis::new(t);
    for &j in &ds.protected {
        basis.push(&ds.w.column(j));
    }
    let controls = ds
        .selectable()
        .into_iter()
        .filter_map(|j| {
            let c = ds.w.column(j);
            let r = basis.residual(&c);
            // Columns spanned by the protected set carry nothing to select.
            (norm(&r) > RANK_TOL * norm(&c)).then_some((j, r))
        })
        .collect();
    Partialled { y: basis.residual(&ds.y_h), x: basis.residual(&ds.x), controls }
}

/// Double greedy selection followed by post-selection least squares and HAC
/// inference on the shock coefficient.
pub fn double_oga_lp(
    ds: &LpDataset,
    oga: &OgaConfig,
    hac: &HacConfig,
    levels: &[f64],
) -> Result<LpEstimate> {
    estimate_dataset(ds, Method::DoubleOga, oga, hac, levels)
}

/// Least squares on every control with the same variance machinery.
pub fn conventional_lp(ds: &LpDataset, hac: &HacConfig, levels: &[f64]) -> Result<LpEstimate> {
    estimate_dataset(ds, Method::ConventionalLp, &OgaConfig::default(), hac, levels)
}

pub fn estimate_dataset(
    ds: &LpDataset,
    method: Method,
    oga: &OgaConfig,
    hac: &HacConfig,
    levels: &[f64],
) -> Result<LpEstimate> {
    estimate_dataset_with(ds, method, oga, hac, levels, None)
}

/// As [`estimate_dataset`]; with `clusters`, the long-run variance is
/// replaced by the cluster-robust one (scores summed within cluster ids).
pub(crate) fn estimate_dataset_with(
    ds: &LpDataset,
    method: Method,
    oga: &OgaConfig,
    hac: &HacConfig,
    levels: &[f64],
    clusters: Option<&[usize]>,
) -> Result<LpEstimate> {
    validate_levels(levels)?;
    if ds.y_h.iter().chain(&ds.x).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response or shock"));
    }
    let t = ds.effective_t;
    let part = partial_out_protected(ds);
    let x_ss = dot(&part.x, &part.x);
    if x_ss / t as f64 <= 1e-12 * (dot(&ds.x, &ds.x) / t as f64).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateShock(x_ss / t as f64));
    }
    let cols: Vec<Vec<f64>> = part.controls.iter().map(|(_, c)| c.clone()).collect();
    let to_w = |local: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = local.iter().map(|&k| part.controls[k].0).collect();
        v.sort_unstable();
        v
    };

    let (sel_y, sel_x, c_y, c_x) = match method {
        Method::DoubleOga if !cols.is_empty() => {
            let py = select_columns(&cols, &part.y, oga)?;
            let px = select_columns(&cols, &part.x, oga)?;
            (py.chosen_set, px.chosen_set, Some(py.c_star_used), Some(px.c_star_used))
        }
        Method::DoubleOga => (vec![], vec![], None, None),
        Method::ConventionalLp => {
            let all: Vec<usize> = (0..cols.len()).collect();
            (all.clone(), all, None, None)
        }
    };
    let mut union_local: Vec<usize> = sel_y.iter().chain(&sel_x).copied().collect();
    union_local.sort_unstable();
    union_local.dedup();

    let pick = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&k| cols[k].clone()).collect() };
    let union_cols = pick(&union_local);

    let mut union_basis = OrthoBasis::new(t);
    for c in &union_cols {
        union_basis.push(c);
    }
    let x_resid = union_basis.residual(&part.x);
    let x_resid_ms = dot(&x_resid, &x_resid) / t as f64;
    if x_resid_ms < 1e-12 * (x_ss / t as f64) {
        return Err(Error::DegenerateShock(x_resid_ms));
    }

    let mut design = Vec::with_capacity(union_cols.len() + 1);
    design.push(part.x.clone());
    design.extend(union_cols);
    let fin = ols_columns(&design, &part.y)?;
    let beta = fin.coefficients[0];

    let v_hat = ols_columns(&pick(&sel_x), &part.x)?.residuals;
    let other = match hac.psi_source {
        PsiSource::FinalU => fin.residuals.clone(),
        PsiSource::FirstStageE => ols_columns(&pick(&sel_y), &part.y)?.residuals,
    };
    let HacVariance { sigma_sq, tau_sq, omega, bandwidth } = match clusters {
        Some(g) => cluster_variance(&v_hat, &other, g)?,
        None => hac_variance(&v_hat, &other, hac.bandwidth)?,
    };
    let se = (sigma_sq / t as f64).sqrt();
    let intervals = levels
        .iter()
        .map(|&level| {
            let z = normal_critical_value(level);
            ConfidenceInterval { level, low: beta - z * se, high: beta + z * se }
        })
        .collect();

    Ok(LpEstimate {
        horizon: ds.horizon,
        method,
        beta,
        se,
        intervals,
        selected_y: to_w(&sel_y),
        selected_x: to_w(&sel_x),
        union_set: to_w(&union_local),
        tau_sq,
        omega,
        sigma_sq,
        residuals_u: fin.residuals,
        residuals_v: v_hat,
        bandwidth,
        c_star_y: c_y,
        c_star_x: c_x,
        effective_t: t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonOutcome {
    pub horizon: usize,
    pub result: Result<LpEstimate>,
}

/// Per-horizon estimates, in the order the horizons were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfResult {
    pub method: Method,
    pub horizons: Vec<HorizonOutcome>,
}

impl IrfResult {
    pub fn estimates(&self) -> impl Iterator<Item = &LpEstimate> {
        self.horizons.iter().filter_map(|h| h.result.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &Error)> {
        self.horizons.iter().filter_map(|h| h.result.as_ref().err().map(|e| (h.horizon, e)))
    }
}

/// Independent estimation at each horizon of `spec`; a failure at one horizon
/// does not stop the others.
pub fn estimate_irf(
    data: &TimeSeriesMatrix,
    spec: &LpSpec,
    method: Method,
    oga: &OgaConfig,
    hac: &HacConfig,
    levels: &[f64],
) -> Result<IrfResult> {
    spec.validate()?;
    validate_levels(levels)?;
    oga.validate()?;
    // Column lookups fail the same way at every horizon: surface them once.
    for c in std::iter::once(&spec.response)
        .chain(std::iter::once(&spec.shock))
        .chain(&spec.contemporaneous)
        .chain(&spec.lagged)
    {
        data.index_of(c)?;
    }
    let horizons = spec
        .horizons
        .par_iter()
        .map(|&h| HorizonOutcome {
            horizon: h,
            result: build_lp_dataset(data, spec, h)
                .and_then(|ds| estimate_dataset(&ds, method, oga, hac, levels)),
        })
        .collect();
    Ok(IrfResult { method, horizons })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn series(names: &[&str], cols: &[Vec<f64>]) -> TimeSeriesMatrix {
        TimeSeriesMatrix::from_columns(names.iter().map(|s| s.to_string()).collect(), cols).unwrap()
    }

    fn spec(resp: &str, shock: &str, lagged: &[&str], lags: usize, horizons: Vec<usize>) -> LpSpec {
        LpSpec {
            response: resp.into(),
            shock: shock.into(),
            contemporaneous: vec![],
            lagged: lagged.iter().map(|s| s.to_string()).collect(),
            lags,
            horizons,
            include_intercept: true,
            lag_augment: 0,
        }
    }

    #[test]
    fn univariate_counting() {
        let data = series(&["y"], &[(0..10).map(|v| v as f64).collect()]);
        let ds = build_lp_dataset(&data, &spec("y", "y", &["y"], 1, vec![1]), 1).unwrap();
        assert_eq!(ds.effective_t, 8);
        assert_eq!(ds.w.cols(), 2);
        assert_eq!(ds.protected, vec![1]);
        assert_eq!(ds.column_map[1], ColumnSource::Intercept);
        // first row: t = 1 -> y_{t+1} = 2, x_t = 1, y_{t-1} = 0
        assert_eq!((ds.y_h[0], ds.x[0], ds.w.get(0, 0)), (2.0, 1.0, 0.0));
    }

    #[test]
    fn lag_augmentation_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let data = series(&["a", "b"], &[gaussian(&mut rng, 80), gaussian(&mut rng, 80)]);
        let mut s = spec("a", "b", &["a", "b"], 12, vec![1]);
        s.lag_augment = 9;
        let ds = build_lp_dataset(&data, &s, 1).unwrap();
        let max_lag = ds
            .column_map
            .iter()
            .filter_map(|c| match c {
                ColumnSource::Variable { lag, .. } => Some(*lag),
                ColumnSource::Intercept => None,
            })
            .max();
        assert_eq!(max_lag, Some(21));
        assert_eq!(ds.w.cols(), 2 * 21 + 1);
        assert_eq!(ds.effective_t, 80 - 1 - 21);
    }

    #[test]
    fn shifted_data_aligns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = gaussian(&mut rng, 41);
        let b = gaussian(&mut rng, 41);
        let s = spec("a", "b", &["a", "b"], 2, vec![2]);
        let full = build_lp_dataset(&series(&["a", "b"], &[a.clone(), b.clone()]), &s, 2).unwrap();
        let shifted =
            build_lp_dataset(&series(&["a", "b"], &[a[1..].to_vec(), b[1..].to_vec()]), &s, 2)
                .unwrap();
        for i in 0..shifted.effective_t {
            assert_eq!(shifted.w.row(i), full.w.row(i + 1));
            assert_eq!(shifted.y_h[i], full.y_h[i + 1]);
        }
    }

    #[test]
    fn build_errors() {
        let data = series(&["y"], &[vec![0.0; 10]]);
        assert!(matches!(
            build_lp_dataset(&data, &spec("y", "y", &["y"], 2, vec![1]), 1),
            Err(Error::InsufficientSample { .. })
        ));
        assert_eq!(
            build_lp_dataset(&data, &spec("z", "y", &[], 0, vec![1]), 1),
            Err(Error::UnknownColumn("z".into()))
        );
        let mut s = spec("y", "y", &[], 0, vec![1]);
        s.contemporaneous = vec!["y".into()];
        assert!(build_lp_dataset(&data, &s, 1).is_err());
    }

    #[test]
    fn simple_regression_without_controls() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 60;
        let x = gaussian(&mut rng, n);
        let y: Vec<f64> = (0..n).map(|t| if t > 0 { 0.4 * x[t - 1] } else { 0.0 }).collect();
        let y: Vec<f64> = y.iter().zip(gaussian(&mut rng, n)).map(|(a, e)| a + 0.1 * e).collect();
        let data = series(&["y", "x"], &[y.clone(), x.clone()]);
        let est = estimate_irf(
            &data,
            &spec("y", "x", &[], 0, vec![1]),
            Method::DoubleOga,
            &OgaConfig::default(),
            &HacConfig::default(),
            &[0.95],
        )
        .unwrap();
        let e = est.estimates().next().unwrap();
        let xs = &x[..n - 1];
        let ys = &y[1..];
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let cov: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let var: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
        assert!((e.beta - cov / var).abs() < 1e-12);
        assert!(e.union_set.is_empty());
    }

    #[test]
    fn constant_shock_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ds = LpDataset::from_arrays(
            gaussian(&mut rng, 20),
            vec![3.0; 20],
            Matrix::from_columns(20, &[vec![1.0; 20]]).unwrap(),
            vec![0],
            0,
        )
        .unwrap();
        assert!(matches!(
            double_oga_lp(&ds, &OgaConfig::default(), &HacConfig::default(), &[0.95]),
            Err(Error::DegenerateShock(_))
        ));
    }

    #[test]
    fn forced_full_selection_equals_one_shot_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = 40;
        let w1 = gaussian(&mut rng, t);
        let w2 = gaussian(&mut rng, t);
        let x = gaussian(&mut rng, t);
        let y: Vec<f64> =
            (0..t).map(|i| 0.5 * x[i] + w1[i] - w2[i]).zip(gaussian(&mut rng, t)).map(|(a, e)| a + e).collect();
        let w = Matrix::from_columns(t, &[w1.clone(), w2.clone()]).unwrap();
        let ds = LpDataset::from_arrays(y.clone(), x.clone(), w, vec![], 0).unwrap();
        let cfg = OgaConfig { fixed_steps: Some(2), ..OgaConfig::with_c_star(2.0) };
        let est = double_oga_lp(&ds, &cfg, &HacConfig::default(), &[0.95]).unwrap();
        let ols = ols_columns(&[x, w1, w2], &y).unwrap();
        assert!((est.beta - ols.coefficients[0]).abs() < 1e-9);
        for (a, b) in est.residuals_u.iter().zip(&ols.residuals) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_nesting() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = 100;
        let x = gaussian(&mut rng, t);
        let y: Vec<f64> = x.iter().zip(gaussian(&mut rng, t)).map(|(a, e)| 0.7 * a + e).collect();
        let w = Matrix::from_columns(t, &[gaussian(&mut rng, t), vec![1.0; t]]).unwrap();
        let ds = LpDataset::from_arrays(y, x, w, vec![1], 0).unwrap();
        let est = double_oga_lp(&ds, &OgaConfig::default(), &HacConfig::default(), &[0.68, 0.9, 0.95])
            .unwrap();
        let (a, b, c) = (est.interval(0.68).unwrap(), est.interval(0.9).unwrap(), est.interval(0.95).unwrap());
        assert!(c.low <= b.low && b.low <= a.low && a.low <= est.beta);
        assert!(est.beta <= a.high && a.high <= b.high && b.high <= c.high);
        assert!(est.se > 0.0);
    }

    #[test]
    fn critical_values() {
        assert!((normal_critical_value(0.95) - 1.959963984540054).abs() < 1e-9);
        assert!((normal_critical_value(0.9) - 1.6448536269514722).abs() < 1e-9);
    }

    #[test]
    fn first_stage_psi_switch_changes_variance_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = 120;
        let x = gaussian(&mut rng, t);
        let z = gaussian(&mut rng, t);
        let y: Vec<f64> = (0..t).map(|i| 0.3 * x[i] + z[i]).zip(gaussian(&mut rng, t)).map(|(a, e)| a + e).collect();
        let w = Matrix::from_columns(t, &[z, vec![1.0; t]]).unwrap();
        let ds = LpDataset::from_arrays(y, x, w, vec![1], 0).unwrap();
        let oga = OgaConfig::with_c_star(2.0);
        let a = double_oga_lp(&ds, &oga, &HacConfig::default(), &[0.95]).unwrap();
        let b = double_oga_lp(
            &ds,
            &oga,
            &HacConfig { psi_source: PsiSource::FirstStageE, ..HacConfig::default() },
            &[0.95],
        )
        .unwrap();
        assert_eq!(a.beta, b.beta);
        assert!(a.sigma_sq > 0.0 && b.sigma_sq > 0.0);
    }
}
