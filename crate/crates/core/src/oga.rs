//! Orthogonal greedy ordering of candidate regressors with a high-dimensional
//! AIC stopping rule.
//!
//! The path is built incrementally: every candidate column is kept projected
//! off the span of the columns already chosen, so one greedy step costs
//! `O(p * T)` rather than a refit per candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, extend_columns, norm, ols_columns, Extension, Matrix, RANK_TOL};

pub const DEFAULT_C_STAR_CANDIDATES: [f64; 5] = [1.6, 1.8, 2.0, 2.2, 2.4];

/// Residual norm (relative to the response) below which the path stops: the
/// chosen columns already reproduce the response.
const PERFECT_FIT_TOL: f64 = 1e-12;

/// Penalty constant of the information criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CStar {
    Fixed(f64),
    /// Pick the candidate with the smallest held-out one-step prediction error.
    DataDriven { candidates: Vec<f64>, eval_fraction: f64 },
}

impl Default for CStar {
    fn default() -> Self {
        CStar::DataDriven { candidates: DEFAULT_C_STAR_CANDIDATES.to_vec(), eval_fraction: 0.2 }
    }
}

/// How the greedy score normalizes a candidate column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreNorm {
    /// Divide by the norm of the candidate after projecting off the chosen
    /// set. The argmax is then the candidate with the largest drop in RSS.
    #[default]
    Projected,
    /// Divide by the norm of the raw candidate column.
    Original,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OgaConfig {
    pub c_star: CStar,
    pub max_steps_override: Option<usize>,
    pub mbar_scale: f64,
    pub delta_assumed: f64,
    /// Bypass the criterion and keep exactly this many greedy steps
    /// (capped by the number of admissible columns).
    pub fixed_steps: Option<usize>,
    pub score_norm: ScoreNorm,
}

impl Default for OgaConfig {
    fn default() -> Self {
        Self {
            c_star: CStar::default(),
            max_steps_override: None,
            mbar_scale: 5.0,
            delta_assumed: 2.0,
            fixed_steps: None,
            score_norm: ScoreNorm::default(),
        }
    }
}

impl OgaConfig {
    pub fn with_c_star(c: f64) -> Self {
        Self { c_star: CStar::Fixed(c), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.c_star {
            CStar::Fixed(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidArgument(format!("c_star must be positive, got {c}")))
            }
            CStar::DataDriven { candidates, eval_fraction } => {
                if candidates.is_empty() {
                    return Err(Error::InvalidArgument("empty c_star candidate set".into()));
                }
                if let Some(c) = candidates.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
                    return Err(Error::InvalidArgument(format!("c_star candidate {c} not positive")));
                }
                if !(*eval_fraction > 0.0 && *eval_fraction < 0.5) {
                    return Err(Error::InvalidArgument(format!(
                        "eval_fraction must lie in (0, 0.5), got {eval_fraction}"
                    )));
                }
            }
            _ => {}
        }
        if self.mbar_scale.is_nan() || self.mbar_scale <= 0.0 {
            return Err(Error::InvalidArgument("mbar_scale must be positive".into()));
        }
        if self.delta_assumed.is_nan() || self.delta_assumed <= 1.0 {
            return Err(Error::InvalidArgument("delta_assumed must exceed 1".into()));
        }
        if self.max_steps_override == Some(0) || self.fixed_steps == Some(0) {
            return Err(Error::InvalidArgument("step counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Greedy ordering plus the criterion evaluated along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPath {
    /// Column indices in the order picked (0-based).
    pub ordered_indices: Vec<usize>,
    /// `sigma_sq_path[m-1]` is the residual variance after `m` steps.
    pub sigma_sq_path: Vec<f64>,
    pub hdaic_path: Vec<f64>,
    pub chosen_m: usize,
    pub chosen_set: Vec<usize>,
    pub c_star_used: f64,
}

/// Greedy order without the stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath {
    pub ordered_indices: Vec<usize>,
    pub sigma_sq_path: Vec<f64>,
}

/// Scaled correlation of a candidate column with the current residual:
/// `w'r / (sqrt(T) * ||w||)`.
pub fn mu_score(w_col: &[f64], residual: &[f64], t: usize) -> Result<f64> {
    if w_col.len() != t || residual.len() != t {
        return Err(Error::DimensionMismatch(format!(
            "column {} / residual {} / T {t}",
            w_col.len(),
            residual.len()
        )));
    }
    let wn = norm(w_col);
    if wn == 0.0 {
        return Err(Error::ZeroNormColumn(0));
    }
    Ok(dot(w_col, residual) / ((t as f64).sqrt() * wn))
}

/// Upper bound on the number of greedy steps for `t` observations and `p`
/// candidates: `ceil(mbar_scale * (T / max(log p, 1)^3)^(1/(2 delta)))`,
/// clipped to `[1, min(p, T-1, override)]`.
pub fn max_steps(t: usize, p: usize, config: &OgaConfig) -> usize {
    let logp = (p.max(1) as f64).ln().max(1.0);
    let rate = (t as f64 / logp.powi(3)).powf(1.0 / (2.0 * config.delta_assumed));
    let formula = (config.mbar_scale * rate).ceil();
    let formula = if formula.is_finite() && formula >= 1.0 { formula as usize } else { 1 };
    let mut m = formula.min(p).min(t.saturating_sub(1));
    if let Some(o) = config.max_steps_override {
        m = m.min(o);
    }
    m.max(1)
}

/// `(1 + c_star * m * log(p) / T) * sigma_sq`.
pub fn hdaic(sigma_sq: f64, m: usize, p: usize, t: usize, c_star: f64) -> f64 {
    (1.0 + c_star * m as f64 * (p.max(1) as f64).ln() / t as f64) * sigma_sq
}

/// Smallest `m` (1-based) minimizing the criterion along `sigma_sq_path`.
pub fn select_hdaic(sigma_sq_path: &[f64], p: usize, t: usize, c_star: f64) -> usize {
    assert!(!sigma_sq_path.is_empty(), "empty selection path");
    let mut best = (1, hdaic(sigma_sq_path[0], 1, p, t, c_star));
    for (k, s) in sigma_sq_path.iter().enumerate().skip(1) {
        let v = hdaic(*s, k + 1, p, t, c_star);
        if v < best.1 {
            best = (k + 1, v);
        }
    }
    best.0
}

fn check_inputs(cols: &[Vec<f64>], y: &[f64]) -> Result<()> {
    let t = y.len();
    if let Some(c) = cols.iter().find(|c| c.len() != t) {
        return Err(Error::DimensionMismatch(format!(
            "candidate column has {} rows, response has {t}",
            c.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    for (j, c) in cols.iter().enumerate() {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("candidate column"));
        }
        if norm(c) == 0.0 {
            return Err(Error::ZeroNormColumn(j));
        }
    }
    Ok(())
}

/// Greedy ordering of at most `m_max` columns of `W` for response `y`.
pub fn oga_order(w: &Matrix, y: &[f64], m_max: usize, score: ScoreNorm) -> Result<GreedyPath> {
    if w.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "W has {} rows, response has {}",
            w.rows(),
            y.len()
        )));
    }
    oga_order_columns(&w.columns(), y, m_max, score)
}

/// [`oga_order`] over column vectors.
pub fn oga_order_columns(
    cols: &[Vec<f64>],
    y: &[f64],
    m_max: usize,
    score: ScoreNorm,
) -> Result<GreedyPath> {
    check_inputs(cols, y)?;
    let t = y.len();
    let p = cols.len();
    if m_max > p {
        return Err(Error::InvalidArgument(format!("{m_max} steps requested with {p} columns")));
    }
    let tf = t as f64;
    let y_norm = norm(y);
    let orig_norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    // Candidates projected off the current span; `None` once chosen or spanned.
    let mut projected: Vec<Option<Vec<f64>>> = cols.iter().cloned().map(Some).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut resid = y.to_vec();
    let mut ordered = Vec::with_capacity(m_max);
    let mut sigma = Vec::with_capacity(m_max);

    while ordered.len() < m_max {
        if norm(&resid) <= PERFECT_FIT_TOL * y_norm {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, slot) in projected.iter_mut().enumerate() {
            let Some(c) = slot else { continue };
            let cn = norm(c);
            if cn < RANK_TOL * orig_norms[j] {
                *slot = None;
                continue;
            }
            let denom = match score {
                ScoreNorm::Projected => cn,
                ScoreNorm::Original => orig_norms[j],
            };
            let s = (dot(c, &resid) / (tf.sqrt() * denom)).abs();
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        let Some((j, _)) = best else { break };
        let q = match extend_columns(&basis, &cols[j]) {
            Extension::Added(q) => q,
            Extension::Degenerate => {
                projected[j] = None;
                continue;
            }
        };
        projected[j] = None;
        for c in projected.iter_mut().flatten() {
            let a = dot(&q, c);
            c.iter_mut().zip(&q).for_each(|(ci, qi)| *ci -= a * qi);
        }
        let a = dot(&q, &resid);
        resid.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= a * qi);
        basis.push(q);
        ordered.push(j);
        sigma.push(dot(&resid, &resid) / tf);
    }

    if ordered.is_empty() && m_max > 0 {
        if y_norm == 0.0 || norm(&resid) <= PERFECT_FIT_TOL * y_norm {
            // Nothing to explain: any column fits perfectly, take the first.
            return Ok(GreedyPath { ordered_indices: vec![0], sigma_sq_path: vec![0.0] });
        }
        return Err(Error::AllColumnsDegenerate);
    }
    Ok(GreedyPath { ordered_indices: ordered, sigma_sq_path: sigma })
}

/// Greedy path truncated at the information-criterion minimum.
pub fn oga_hdaic_select(w: &Matrix, y: &[f64], config: &OgaConfig) -> Result<SelectionPath> {
    if w.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "W has {} rows, response has {}",
            w.rows(),
            y.len()
        )));
    }
    select_columns(&w.columns(), y, config)
}

/// [`oga_hdaic_select`] over column vectors.
pub fn select_columns(cols: &[Vec<f64>], y: &[f64], config: &OgaConfig) -> Result<SelectionPath> {
    config.validate()?;
    let t = y.len();
    if t < 2 {
        return Err(Error::InsufficientSample { needed: 2, available: t });
    }
    if cols.is_empty() {
        return Err(Error::InvalidArgument("no candidate columns".into()));
    }
    let c_star = match &config.c_star {
        CStar::Fixed(c) => *c,
        CStar::DataDriven { candidates, eval_fraction } => {
            select_c_star_columns(cols, y, candidates, *eval_fraction, config)?
        }
    };
    path_with_c_star(cols, y, config, c_star)
}

fn path_with_c_star(
    cols: &[Vec<f64>],
    y: &[f64],
    config: &OgaConfig,
    c_star: f64,
) -> Result<SelectionPath> {
    let t = y.len();
    let p = cols.len();
    let m_max = match config.fixed_steps {
        Some(k) => k.min(p),
        None => max_steps(t, p, config),
    };
    let greedy = oga_order_columns(cols, y, m_max, config.score_norm)?;
    let hdaic_path: Vec<f64> = greedy
        .sigma_sq_path
        .iter()
        .enumerate()
        .map(|(k, s)| hdaic(*s, k + 1, p, t, c_star))
        .collect();
    let chosen_m = match config.fixed_steps {
        Some(_) => greedy.ordered_indices.len(),
        None => select_hdaic(&greedy.sigma_sq_path, p, t, c_star),
    };
    let chosen_set = greedy.ordered_indices[..chosen_m].to_vec();
    Ok(SelectionPath {
        ordered_indices: greedy.ordered_indices,
        sigma_sq_path: greedy.sigma_sq_path,
        hdaic_path,
        chosen_m,
        chosen_set,
        c_star_used: c_star,
    })
}

/// Held-out mean squared one-step prediction error for each candidate.
///
/// The first `(1 - eval_fraction) * T` rows train the greedy path; every
/// candidate truncates that path with its own criterion, refits by least
/// squares, and predicts the remaining rows.
pub fn c_star_prediction_errors(
    cols: &[Vec<f64>],
    y: &[f64],
    candidates: &[f64],
    eval_fraction: f64,
    config: &OgaConfig,
) -> Result<Vec<(f64, f64)>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty c_star candidate set".into()));
    }
    if !(eval_fraction > 0.0 && eval_fraction < 0.5) {
        return Err(Error::InvalidArgument(format!("eval_fraction {eval_fraction} outside (0, 0.5)")));
    }
    let t = y.len();
    let n_train = ((1.0 - eval_fraction) * t as f64).floor() as usize;
    if n_train < 2 || n_train >= t {
        return Err(Error::InsufficientSample { needed: 3, available: t });
    }
    let train_cols: Vec<Vec<f64>> = cols.iter().map(|c| c[..n_train].to_vec()).collect();
    let y_train = &y[..n_train];
    // A column can vanish on the training window; it is not admissible there.
    let admissible: Vec<usize> = (0..cols.len()).filter(|&j| norm(&train_cols[j]) > 0.0).collect();
    if admissible.is_empty() {
        return Err(Error::AllColumnsDegenerate);
    }
    let adm_cols: Vec<Vec<f64>> = admissible.iter().map(|&j| train_cols[j].clone()).collect();
    let p = adm_cols.len();
    let m_max = max_steps(n_train, p, config);
    let greedy = oga_order_columns(&adm_cols, y_train, m_max, config.score_norm)?;

    let mut cache: Vec<Option<f64>> = vec![None; greedy.ordered_indices.len() + 1];
    let mut out = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let m = select_hdaic(&greedy.sigma_sq_path, p, n_train, c);
        let mspe = match cache[m] {
            Some(v) => v,
            None => {
                let chosen: Vec<usize> =
                    greedy.ordered_indices[..m].iter().map(|&k| admissible[k]).collect();
                let design: Vec<Vec<f64>> = chosen.iter().map(|&j| train_cols[j].clone()).collect();
                let fit = ols_columns(&design, y_train)?;
                let mut sse = 0.0;
                for i in n_train..t {
                    let pred: f64 =
                        chosen.iter().zip(&fit.coefficients).map(|(&j, b)| cols[j][i] * b).sum();
                    sse += (y[i] - pred).powi(2);
                }
                let v = sse / (t - n_train) as f64;
                cache[m] = Some(v);
                v
            }
        };
        out.push((c, mspe));
    }
    Ok(out)
}

/// Data-driven penalty constant: the candidate with the smallest held-out
/// prediction error, ties going to the smaller constant.
pub fn select_c_star(
    w: &Matrix,
    y: &[f64],
    candidates: &[f64],
    eval_fraction: f64,
    config: &OgaConfig,
) -> Result<f64> {
    if w.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "W has {} rows, response has {}",
            w.rows(),
            y.len()
        )));
    }
    check_inputs(&w.columns(), y)?;
    select_c_star_columns(&w.columns(), y, candidates, eval_fraction, config)
}

fn select_c_star_columns(
    cols: &[Vec<f64>],
    y: &[f64],
    candidates: &[f64],
    eval_fraction: f64,
    config: &OgaConfig,
) -> Result<f64> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() == 1 {
        return Ok(sorted[0]);
    }
    let errs = c_star_prediction_errors(cols, y, &sorted, eval_fraction, config)?;
    let mut best = errs[0];
    for &(c, e) in &errs[1..] {
        if e < best.1 {
            best = (c, e);
        }
    }
    Ok(best.0)
}
