//! Coverage and interval-width experiments.
//!
//! Every replication draws from its own ChaCha20 stream (`seed`, stream =
//! replication index), so results do not depend on scheduling. Replications
//! run on a rayon pool in chunks; records are reduced in replication order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{build_section3_coefficients, simulate_var, true_reduced_form_irf, Section3Design, VarDgpSpec};
use crate::error::{Error, Result};
use crate::hac::HacConfig;
use crate::lp::{estimate_irf, validate_levels, LpSpec, Method};
use crate::oga::OgaConfig;

/// A simulated VAR, the local projection run on each draw, and the
/// (response, innovation) pair whose reduced-form response is the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McDesign {
    pub dgp: VarDgpSpec,
    /// Simulated sample length.
    pub t: usize,
    pub lp: LpSpec,
    pub response: usize,
    pub innovation: usize,
}

impl McDesign {
    /// The persistent sparse/dense design with the local projection that
    /// targets the response of `y2` to the innovation in `y1`.
    pub fn section3(design: &Section3Design) -> Result<Self> {
        let (dgp, _) = build_section3_coefficients(design)?;
        Ok(Self { dgp, t: design.t, lp: design.lp_spec(), response: 1, innovation: 0 })
    }

    /// Two independent white-noise series; the true response of `y2` to `y1`
    /// is zero at every horizon.
    pub fn null_iid(t: usize, horizons: Vec<usize>) -> Self {
        let dgp = VarDgpSpec {
            coefficients: vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]]],
            sigma: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            burn_in: 0,
            y1_rho: None,
            names: None,
        };
        let lp = LpSpec {
            response: "y2".into(),
            shock: "y1".into(),
            contemporaneous: vec![],
            lagged: vec!["y1".into(), "y2".into()],
            lags: 1,
            horizons,
            include_intercept: true,
            lag_augment: 0,
        };
        Self { dgp, t, lp, response: 1, innovation: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.lp.validate()?;
        let names = self.dgp.names();
        for col in std::iter::once(&self.lp.response)
            .chain(std::iter::once(&self.lp.shock))
            .chain(&self.lp.contemporaneous)
            .chain(&self.lp.lagged)
        {
            if !names.contains(col) {
                return Err(Error::UnknownColumn(col.clone()));
            }
        }
        if self.response >= names.len() || self.innovation >= names.len() {
            return Err(Error::InvalidArgument("response/innovation index out of range".into()));
        }
        Ok(())
    }

    pub fn true_irf(&self) -> Result<Vec<f64>> {
        true_reduced_form_irf(&self.dgp, self.response, self.innovation, &self.lp.horizons)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOptions {
    pub methods: Vec<Method>,
    pub n_reps: usize,
    pub levels: Vec<f64>,
    pub seed: u64,
    /// Worker count; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub oga: OgaConfig,
    pub hac: HacConfig,
    /// Replications per chunk between progress callbacks.
    pub chunk: usize,
}

impl McOptions {
    pub fn new(methods: Vec<Method>, n_reps: usize, levels: Vec<f64>, seed: u64) -> Self {
        Self {
            methods,
            n_reps,
            levels,
            seed,
            threads: None,
            oga: OgaConfig::default(),
            hac: HacConfig::default(),
            chunk: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods requested".into()));
        }
        if self.chunk == 0 {
            return Err(Error::InvalidArgument("chunk must be at least 1".into()));
        }
        validate_levels(&self.levels)?;
        self.oga.validate()
    }
}

/// Outcome of one method at one horizon in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRecord {
    pub horizon: usize,
    /// `[low, high]` per requested level, in level order.
    pub intervals: Option<Vec<[f64; 2]>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: Method,
    pub horizons: Vec<HorizonRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub methods: Vec<MethodRecord>,
}

impl RepRecord {
    pub fn failed(&self) -> bool {
        self.methods.iter().flat_map(|m| &m.horizons).any(|h| h.intervals.is_none())
    }
}

/// One (method, horizon, level) aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct McCell {
    pub method: Method,
    pub horizon: usize,
    pub level: f64,
    pub true_value: f64,
    /// Fraction of successful replications whose interval contains the
    /// truth; NaN if none succeeded.
    pub coverage: f64,
    /// NaN if none succeeded.
    pub median_width: f64,
    pub n_success: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n_reps: usize,
    pub seed: u64,
    /// Ordered by method (as requested), horizon, level.
    pub cells: Vec<McCell>,
    /// Replications with at least one failed (method, horizon).
    pub failed_reps: usize,
}

/// Floats in report files: 17 significant digits, `NaN` when undefined.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Header of [`McReport::to_csv`].
pub const REPORT_HEADER: &str = "method,horizon,level,true_irf,coverage,median_width,n_success,n_failed,n_reps";

impl McReport {
    /// Long format, one row per (method, horizon, level).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.method,
                c.horizon,
                format_float(c.level),
                format_float(c.true_value),
                format_float(c.coverage),
                format_float(c.median_width),
                c.n_success,
                c.n_failed,
                self.n_reps
            ));
        }
        out
    }

    pub fn cell(&self, method: Method, horizon: usize, level: f64) -> Option<&McCell> {
        self.cells.iter().find(|c| c.method == method && c.horizon == horizon && c.level == level)
    }
}

/// Generator for replication `rep`.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Simulates one sample and estimates every requested method on it.
pub fn run_replication(design: &McDesign, opts: &McOptions, rep: usize) -> RepRecord {
    let mut rng = replication_rng(opts.seed, rep);
    let data = simulate_var(&design.dgp, design.t, &mut rng);
    let methods = opts
        .methods
        .iter()
        .map(|&method| {
            let horizons = match &data {
                Err(e) => design
                    .lp
                    .horizons
                    .iter()
                    .map(|&h| HorizonRecord { horizon: h, intervals: None, error: Some(e.to_string()) })
                    .collect(),
                Ok(data) => match estimate_irf(data, &design.lp, method, &opts.oga, &opts.hac, &opts.levels) {
                    Err(e) => design
                        .lp
                        .horizons
                        .iter()
                        .map(|&h| HorizonRecord { horizon: h, intervals: None, error: Some(e.to_string()) })
                        .collect(),
                    Ok(irf) => irf
                        .horizons
                        .into_iter()
                        .map(|o| match o.result {
                            Ok(est) => HorizonRecord {
                                horizon: o.horizon,
                                intervals: Some(est.intervals.iter().map(|ci| [ci.low, ci.high]).collect()),
                                error: None,
                            },
                            Err(e) => HorizonRecord { horizon: o.horizon, intervals: None, error: Some(e.to_string()) },
                        })
                        .collect(),
                },
            };
            MethodRecord { method, horizons }
        })
        .collect();
    RepRecord { rep, methods }
}

pub fn run_monte_carlo(design: &McDesign, opts: &McOptions) -> Result<McReport> {
    run_monte_carlo_resumable(design, opts, Vec::new(), |_| Ok(()))
}

/// Runs the replications not already in `done` (which must be the prefix
/// `0..done.len()`), calling `on_chunk` with all records so far after each
/// chunk. The report is identical to an uninterrupted run.
pub fn run_monte_carlo_resumable<F>(
    design: &McDesign,
    opts: &McOptions,
    mut done: Vec<RepRecord>,
    mut on_chunk: F,
) -> Result<McReport>
where
    F: FnMut(&[RepRecord]) -> Result<()>,
{
    opts.validate()?;
    design.validate()?;
    if done.len() > opts.n_reps || done.iter().enumerate().any(|(i, r)| r.rep != i) {
        return Err(Error::InvalidArgument("resume records are not a prefix of this run".into()));
    }
    let truth = design.true_irf()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    while done.len() < opts.n_reps {
        let start = done.len();
        let end = (start + opts.chunk).min(opts.n_reps);
        let batch: Vec<RepRecord> =
            pool.install(|| (start..end).into_par_iter().map(|rep| run_replication(design, opts, rep)).collect());
        done.extend(batch);
        on_chunk(&done)?;
    }
    aggregate(design, opts, &truth, &done)
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Reduces replication records (in the given order) into a report.
pub fn aggregate(design: &McDesign, opts: &McOptions, truth: &[f64], records: &[RepRecord]) -> Result<McReport> {
    let horizons = &design.lp.horizons;
    if truth.len() != horizons.len() {
        return Err(Error::DimensionMismatch("truth length differs from horizons".into()));
    }
    let mut cells = Vec::new();
    for (mi, &method) in opts.methods.iter().enumerate() {
        for (hi, &h) in horizons.iter().enumerate() {
            for (li, &level) in opts.levels.iter().enumerate() {
                let mut hits = 0usize;
                let mut widths = Vec::with_capacity(records.len());
                let mut failed = 0usize;
                for r in records {
                    let rec = r
                        .methods
                        .get(mi)
                        .filter(|m| m.method == method)
                        .and_then(|m| m.horizons.get(hi))
                        .filter(|x| x.horizon == h)
                        .ok_or_else(|| Error::InvalidArgument(format!("record {} does not match the design", r.rep)))?;
                    match &rec.intervals {
                        Some(iv) => {
                            let [low, high] = *iv
                                .get(li)
                                .ok_or_else(|| Error::InvalidArgument("record has too few levels".into()))?;
                            if low <= truth[hi] && truth[hi] <= high {
                                hits += 1;
                            }
                            widths.push(high - low);
                        }
                        None => failed += 1,
                    }
                }
                let n_success = widths.len();
                let coverage = if n_success == 0 { f64::NAN } else { hits as f64 / n_success as f64 };
                cells.push(McCell {
                    method,
                    horizon: h,
                    level,
                    true_value: truth[hi],
                    coverage,
                    median_width: median(&mut widths),
                    n_success,
                    n_failed: failed,
                });
            }
        }
    }
    Ok(McReport {
        n_reps: records.len(),
        seed: opts.seed,
        cells,
        failed_reps: records.iter().filter(|r| r.failed()).count(),
    })
}
