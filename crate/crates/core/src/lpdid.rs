//! Local-projection difference-in-differences on long panels.
//!
//! For horizon `h` the sample keeps newly treated rows (`dD_it = 1`) and clean
//! controls (`dD_it = 0` and `D_{i,t+h} = 0`). The long difference
//! `y_{i,t+h} - y_{i,t-1}` is regressed on `dD_it` with time effects (absorbed
//! by within-period demeaning) and optional controls (lagged outcomes and
//! covariates at `t`), which the double greedy selection may prune.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hac::HacConfig;
use crate::linalg::Matrix;
use crate::lp::{estimate_dataset_with, validate_levels, LpDataset, LpEstimate, Method};
use crate::oga::OgaConfig;

/// Long-format panel. Row order is irrelevant.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    units: Vec<String>,
    times: Vec<i64>,
    outcome: Vec<f64>,
    treatment: Vec<bool>,
    covariates: Vec<(String, Vec<f64>)>,
    index: HashMap<(String, i64), usize>,
}

impl PanelDataset {
    /// Validates unique `(unit, time)` keys, finite values, binary and
    /// absorbing treatment.
    pub fn new(
        units: Vec<String>,
        times: Vec<i64>,
        outcome: Vec<f64>,
        treatment: Vec<f64>,
        covariates: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let n = units.len();
        if times.len() != n || outcome.len() != n || treatment.len() != n || covariates.iter().any(|(_, c)| c.len() != n)
        {
            return Err(Error::DimensionMismatch("panel columns have different lengths".into()));
        }
        if outcome.iter().chain(covariates.iter().flat_map(|(_, c)| c)).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("panel values"));
        }
        let treatment = treatment
            .iter()
            .map(|&d| match d {
                0.0 => Ok(false),
                1.0 => Ok(true),
                d => Err(Error::InvalidArgument(format!("treatment must be 0 or 1, got {d}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        let mut index = HashMap::with_capacity(n);
        for (i, (u, t)) in units.iter().zip(&times).enumerate() {
            if index.insert((u.clone(), *t), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate observation for unit {u} at time {t}")));
            }
        }
        let mut by_unit: BTreeMap<&str, Vec<(i64, bool)>> = BTreeMap::new();
        for i in 0..n {
            by_unit.entry(&units[i]).or_default().push((times[i], treatment[i]));
        }
        for (u, mut path) in by_unit {
            path.sort_unstable();
            if path.windows(2).any(|w| w[0].1 && !w[1].1) {
                return Err(Error::NonAbsorbingTreatment(u.to_string()));
            }
        }
        Ok(Self { units, times, outcome, treatment, covariates, index })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    fn row(&self, unit: &str, time: i64) -> Option<usize> {
        self.index.get(&(unit.to_string(), time)).copied()
    }

    fn covariate(&self, name: &str) -> Result<&[f64]> {
        self.covariates
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowClass {
    NewlyTreated,
    CleanControl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRow {
    pub unit: String,
    pub time: i64,
    pub class: RowClass,
}

/// Rows entering the horizon-`h` regression, ordered by (time, unit). Rows
/// without observations at `t - 1` or `t + h` are dropped.
pub fn restrict_sample(panel: &PanelDataset, h: usize) -> Vec<SampleRow> {
    let h = h as i64;
    let mut rows: Vec<SampleRow> = (0..panel.len())
        .filter_map(|i| {
            let unit = &panel.units[i];
            let t = panel.times[i];
            let prev = panel.row(unit, t - 1)?;
            let lead = panel.row(unit, t + h)?;
            let d_prev = panel.treatment[prev];
            let d_now = panel.treatment[i];
            let class = if d_now && !d_prev {
                RowClass::NewlyTreated
            } else if d_now == d_prev && !panel.treatment[lead] {
                RowClass::CleanControl
            } else {
                return None;
            };
            Some(SampleRow { unit: unit.clone(), time: t, class })
        })
        .collect();
    rows.sort_by(|a, b| (a.time, &a.unit).cmp(&(b.time, &b.unit)));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelVariance {
    /// Newey–West over the stacked sample ordered by (time, unit).
    #[default]
    Hac,
    /// Cluster-robust by unit.
    ClusterUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpDidSpec {
    pub horizons: Vec<usize>,
    /// Lags `y_{t-1..t-p}` of the outcome used as controls.
    #[serde(default)]
    pub outcome_lags: usize,
    /// Covariates (dated `t`) used as controls.
    #[serde(default)]
    pub extra_controls: Vec<String>,
    #[serde(default = "default_true")]
    pub time_effects: bool,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub variance: PanelVariance,
}

fn default_true() -> bool {
    true
}
fn default_method() -> Method {
    Method::DoubleOga
}
fn default_levels() -> Vec<f64> {
    vec![0.95]
}

impl LpDidSpec {
    pub fn new(horizons: Vec<usize>) -> Self {
        Self {
            horizons,
            outcome_lags: 0,
            extra_controls: vec![],
            time_effects: true,
            method: default_method(),
            levels: default_levels(),
            variance: PanelVariance::Hac,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::InvalidArgument("no horizons".into()));
        }
        validate_levels(&self.levels)
    }
}

/// Stacked horizon-`h` regression arrays, before estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct LpDidSample {
    pub rows: Vec<SampleRow>,
    pub dataset: LpDataset,
    /// Unit index per row (for clustering).
    pub unit_ids: Vec<usize>,
}

fn demean_by_time(v: &mut [f64], times: &[i64]) {
    let mut acc: HashMap<i64, (f64, usize)> = HashMap::new();
    for (x, t) in v.iter().zip(times) {
        let e = acc.entry(*t).or_insert((0.0, 0));
        e.0 += x;
        e.1 += 1;
    }
    for (x, t) in v.iter_mut().zip(times) {
        let (s, n) = acc[t];
        *x -= s / n as f64;
    }
}

/// Builds the horizon-`h` regression; rows with missing lagged outcomes are
/// dropped listwise.
pub fn build_lpdid_sample(panel: &PanelDataset, spec: &LpDidSpec, h: usize) -> Result<LpDidSample> {
    let extra: Vec<&[f64]> = spec.extra_controls.iter().map(|c| panel.covariate(c)).collect::<Result<_>>()?;
    let mut kept = Vec::new();
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut controls: Vec<Vec<f64>> = vec![Vec::new(); spec.outcome_lags + extra.len()];
    'rows: for row in restrict_sample(panel, h) {
        let here = panel.row(&row.unit, row.time).expect("row exists");
        let prev = panel.row(&row.unit, row.time - 1).expect("checked by restriction");
        let lead = panel.row(&row.unit, row.time + h as i64).expect("checked by restriction");
        let mut lags = Vec::with_capacity(spec.outcome_lags);
        for j in 1..=spec.outcome_lags {
            match panel.row(&row.unit, row.time - j as i64) {
                Some(r) => lags.push(panel.outcome[r]),
                None => continue 'rows,
            }
        }
        y.push(panel.outcome[lead] - panel.outcome[prev]);
        x.push(if row.class == RowClass::NewlyTreated { 1.0 } else { 0.0 });
        for (c, v) in controls.iter_mut().zip(lags.into_iter().chain(extra.iter().map(|e| e[here]))) {
            c.push(v);
        }
        kept.push(row);
    }
    if !kept.iter().any(|r| r.class == RowClass::NewlyTreated) {
        return Err(Error::NoTreatedUnits(h));
    }
    if !kept.iter().any(|r| r.class == RowClass::CleanControl) {
        return Err(Error::NoCleanControls(h));
    }
    let times: Vec<i64> = kept.iter().map(|r| r.time).collect();
    let mut protected = Vec::new();
    if spec.time_effects {
        demean_by_time(&mut y, &times);
        demean_by_time(&mut x, &times);
        controls.iter_mut().for_each(|c| demean_by_time(c, &times));
    } else {
        protected.push(controls.len());
        controls.push(vec![1.0; kept.len()]);
    }
    let w = if controls.is_empty() { Matrix::empty(kept.len()) } else { Matrix::from_columns(kept.len(), &controls)? };
    let dataset = LpDataset::from_arrays(y, x, w, protected, h)?;
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for u in &panel.units {
        let next = ids.len();
        ids.entry(u).or_insert(next);
    }
    let unit_ids = kept.iter().map(|r| ids[r.unit.as_str()]).collect();
    Ok(LpDidSample { rows: kept, dataset, unit_ids })
}

/// Per-horizon LP-DiD estimates, in horizon order. Failures are reported per
/// horizon.
pub fn lpdid_estimate(
    panel: &PanelDataset,
    spec: &LpDidSpec,
    oga: &OgaConfig,
    hac: &HacConfig,
) -> Result<Vec<(usize, Result<LpEstimate>)>> {
    spec.validate()?;
    oga.validate()?;
    for c in &spec.extra_controls {
        panel.covariate(c)?;
    }
    Ok(spec
        .horizons
        .iter()
        .map(|&h| {
            let res = build_lpdid_sample(panel, spec, h).and_then(|s| {
                let clusters = match spec.variance {
                    PanelVariance::Hac => None,
                    PanelVariance::ClusterUnit => Some(s.unit_ids.as_slice()),
                };
                estimate_dataset_with(&s.dataset, spec.method, oga, hac, &spec.levels, clusters)
            });
            (h, res)
        })
        .collect())
}

/// Staggered-adoption panel with unit and period effects and a dynamic
/// treatment effect `effect_slope * (t - adoption)` from adoption onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaggeredPanelDesign {
    pub n_units: usize,
    pub n_periods: usize,
    /// Every `treat_every`-th unit is treated; adoption dates cycle through
    /// `first_adoption..=last_adoption`.
    pub treat_every: usize,
    pub first_adoption: i64,
    pub last_adoption: i64,
    pub effect_slope: f64,
    pub noise_sd: f64,
}

impl StaggeredPanelDesign {
    pub fn effect(&self, event_time: i64) -> f64 {
        if event_time < 0 {
            0.0
        } else {
            self.effect_slope * event_time as f64
        }
    }

    /// Periods are `1..=n_periods`; unit `i` (0-based) has fixed effect
    /// `0.1 i`, period effects are `0.05 t + sin(t)`.
    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PanelDataset> {
        if self.treat_every == 0 || self.first_adoption > self.last_adoption {
            return Err(Error::InvalidArgument("invalid staggered design".into()));
        }
        let span = (self.last_adoption - self.first_adoption + 1) as usize;
        let mut units = Vec::new();
        let mut times = Vec::new();
        let mut y = Vec::new();
        let mut d = Vec::new();
        for i in 0..self.n_units {
            let adoption =
                (i % self.treat_every == 0).then(|| self.first_adoption + ((i / self.treat_every) % span) as i64);
            for t in 1..=self.n_periods as i64 {
                let treated = adoption.is_some_and(|g| t >= g);
                let effect = adoption.map_or(0.0, |g| self.effect(t - g));
                let eps: f64 = StandardNormal.sample(rng);
                units.push(format!("u{i:04}"));
                times.push(t);
                y.push(0.1 * i as f64 + 0.05 * t as f64 + (t as f64).sin() + effect + self.noise_sd * eps);
                d.push(if treated { 1.0 } else { 0.0 });
            }
        }
        PanelDataset::new(units, times, y, d, vec![])
    }
}
