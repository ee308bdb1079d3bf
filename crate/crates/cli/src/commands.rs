//! Subcommand drivers. Every command validates its configuration, computes
//! everything in memory, and only then writes its outputs atomically.

use std::fs;
use std::path::{Path, PathBuf};

use hdlp::dgp::{simulate_dfm, simulate_var, true_reduced_form_irf};
use hdlp::lp::{estimate_irf, validate_levels, LpEstimate};
use hdlp::lpdid::lpdid_estimate;
use hdlp::montecarlo::{run_monte_carlo_resumable, McOptions, RepRecord};
use hdlp::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::config::{self, EstimateConfig, LpDidConfig, MonteCarloConfig, SimulateConfig};
use crate::error::CliError;
use crate::io::{self, PanelColumns};

/// Flag overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

fn output_path(config_path: &Path, configured: &Path, ov: &Overrides) -> PathBuf {
    ov.out.clone().unwrap_or_else(|| config::resolve(config_path, configured))
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Writes the table, or, if any horizon failed, a log with per-horizon
/// detail (and no table).
fn finish_table(out: &Path, header: String, results: Vec<(String, usize, Result<LpEstimate, Error>)>) -> Result<(), CliError> {
    let failures: Vec<String> = results
        .iter()
        .filter_map(|(m, h, r)| r.as_ref().err().map(|e| format!("{m} horizon {h}: {e}")))
        .collect();
    if !failures.is_empty() {
        let log = io::sibling(out, "log");
        io::write_atomic(&log, (failures.join("\n") + "\n").as_bytes())?;
        return Err(CliError::Compute(format!(
            "{} horizon estimate(s) failed; details in {}",
            failures.len(),
            log.display()
        )));
    }
    let mut text = header + "\n";
    for (_, _, r) in results {
        text.push_str(&io::estimate_row(&r.expect("failures handled above")));
        text.push('\n');
    }
    io::write_atomic(out, text.as_bytes())
}

pub fn estimate(config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let cfg: EstimateConfig = config::load(config_path)?;
    cfg.lp.validate().map_err(CliError::config)?;
    cfg.oga.validate().map_err(CliError::config)?;
    validate_levels(&cfg.levels).map_err(CliError::config)?;
    if cfg.methods.is_empty() {
        return Err(CliError::Config("no methods requested".into()));
    }
    init_threads(ov.threads.or(cfg.threads))?;
    let out = output_path(config_path, &cfg.output, ov);
    let data = io::read_wide_csv(&config::resolve(config_path, &cfg.input))?;
    let mut results = Vec::new();
    for &method in &cfg.methods {
        let irf = estimate_irf(&data, &cfg.lp, method, &cfg.oga, &cfg.hac, &cfg.levels).map_err(CliError::from_run)?;
        for o in irf.horizons {
            results.push((method.to_string(), o.horizon, o.result));
        }
    }
    finish_table(&out, io::estimate_header(&cfg.levels), results)
}

pub fn lpdid(config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let cfg: LpDidConfig = config::load(config_path)?;
    cfg.spec.validate().map_err(CliError::config)?;
    cfg.oga.validate().map_err(CliError::config)?;
    init_threads(ov.threads.or(cfg.threads))?;
    let out = output_path(config_path, &cfg.output, ov);
    let cols = PanelColumns {
        unit: &cfg.unit_column,
        time: &cfg.time_column,
        outcome: &cfg.outcome_column,
        treatment: &cfg.treatment_column,
    };
    let panel = io::read_panel_csv(&config::resolve(config_path, &cfg.input), &cols)?;
    let est = lpdid_estimate(&panel, &cfg.spec, &cfg.oga, &cfg.hac).map_err(CliError::from_run)?;
    let method = cfg.spec.method.to_string();
    let results = est.into_iter().map(|(h, r)| (method.clone(), h, r)).collect();
    finish_table(&out, io::estimate_header(&cfg.spec.levels), results)
}

pub fn simulate(config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let cfg: SimulateConfig = config::load(config_path)?;
    let seed = ov.seed.unwrap_or(cfg.seed);
    let out = output_path(config_path, &cfg.output, ov);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let irf_horizons = |m: usize| (0..=m).collect::<Vec<usize>>();
    let (data, irf) = match (&cfg.section3, &cfg.var, &cfg.dfm) {
        (Some(s), None, None) => {
            let design = s.design()?;
            let (spec, rounds) = hdlp::dgp::build_section3_coefficients(&design).map_err(CliError::config)?;
            if rounds > 0 {
                eprintln!("simulate: coefficients damped by 0.95^{rounds} for stationarity");
            }
            let t = cfg.t.unwrap_or(design.t);
            let data = simulate_var(&spec, t, &mut rng).map_err(CliError::from_run)?;
            let (r, i, m) = cfg.true_irf.as_ref().map_or((1, 0, 60), |c| (c.response, c.innovation, c.max_horizon));
            let hs = irf_horizons(m);
            let irf = true_reduced_form_irf(&spec, r, i, &hs).map_err(CliError::config)?;
            (data, Some(hs.into_iter().zip(irf).collect::<Vec<_>>()))
        }
        (None, Some(spec), None) => {
            spec.validate().map_err(CliError::config)?;
            let t = cfg.t.ok_or_else(|| CliError::Config("t is required with [var]".into()))?;
            let data = simulate_var(spec, t, &mut rng).map_err(CliError::from_run)?;
            let irf = match &cfg.true_irf {
                Some(c) => {
                    let hs = irf_horizons(c.max_horizon);
                    let v = true_reduced_form_irf(spec, c.response, c.innovation, &hs).map_err(CliError::config)?;
                    Some(hs.into_iter().zip(v).collect())
                }
                None => None,
            };
            (data, irf)
        }
        (None, None, Some(spec)) => {
            spec.validate().map_err(CliError::config)?;
            if cfg.t.is_some() {
                return Err(CliError::Config("set the sample length inside [dfm]".into()));
            }
            let data = simulate_dfm(spec, &mut rng).map_err(CliError::from_run)?;
            let irf = match &cfg.true_irf {
                Some(c) => {
                    let hs = irf_horizons(c.max_horizon);
                    let v = spec.true_irf(c.response, c.innovation, &hs).map_err(CliError::config)?;
                    Some(hs.into_iter().zip(v).collect())
                }
                None => None,
            };
            (data, irf)
        }
        _ => return Err(CliError::Config("exactly one of [section3], [var] or [dfm] is required".into())),
    };
    let sidecar = irf.map(|v| (io::sibling(&out, "true_irf.csv"), io::horizon_csv(&v, "true_irf")));
    io::write_atomic(&out, io::wide_csv(&data).as_bytes())?;
    if let Some((path, text)) = sidecar {
        io::write_atomic(&path, text.as_bytes())?;
    }
    Ok(())
}

pub const CHECKPOINT_FORMAT: &str = "hdlp-mc-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Internal resume file. `fingerprint` is the JSON encoding of everything
/// that determines the replications (design, methods, levels, seed,
/// estimator settings); `records` are replications `0..records.len()`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub fingerprint: String,
    pub records: Vec<RepRecord>,
}

#[derive(Serialize)]
struct Fingerprint<'a> {
    design: &'a hdlp::montecarlo::McDesign,
    methods: &'a [hdlp::lp::Method],
    levels: &'a [f64],
    seed: u64,
    oga: &'a hdlp::oga::OgaConfig,
    hac: &'a hdlp::hac::HacConfig,
}

fn load_checkpoint(path: &Path, fingerprint: &str, n_reps: usize) -> Result<Vec<RepRecord>, CliError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("unreadable checkpoint {}: {e}", path.display())))?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(CliError::Config(format!("{} is not a version {CHECKPOINT_VERSION} checkpoint", path.display())));
    }
    if ck.fingerprint != fingerprint {
        return Err(CliError::Config(format!(
            "checkpoint {} belongs to a different run; remove it to start over",
            path.display()
        )));
    }
    let mut records = ck.records;
    records.truncate(n_reps);
    Ok(records)
}

pub fn montecarlo(config_path: &Path, ov: &Overrides) -> Result<(), CliError> {
    let cfg: MonteCarloConfig = config::load(config_path)?;
    let design = cfg.design()?;
    let mut opts = McOptions::new(cfg.methods.clone(), cfg.n_reps, cfg.levels.clone(), ov.seed.unwrap_or(cfg.seed));
    opts.threads = ov.threads.or(cfg.threads);
    opts.oga = cfg.oga.clone();
    opts.hac = cfg.hac;
    opts.chunk = cfg.checkpoint_every;
    opts.validate().map_err(CliError::config)?;
    let out = output_path(config_path, &cfg.output, ov);
    let ck_path = match &cfg.checkpoint {
        Some(p) if ov.out.is_none() => config::resolve(config_path, p),
        _ => io::sibling(&out, "checkpoint.json"),
    };
    let fingerprint = serde_json::to_string(&Fingerprint {
        design: &design,
        methods: &opts.methods,
        levels: &opts.levels,
        seed: opts.seed,
        oga: &opts.oga,
        hac: &opts.hac,
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    let done = load_checkpoint(&ck_path, &fingerprint, opts.n_reps)?;
    if !done.is_empty() {
        eprintln!("montecarlo: resuming after {} replications from {}", done.len(), ck_path.display());
    }
    let mut io_error = None;
    let n_reps = opts.n_reps;
    let report = run_monte_carlo_resumable(&design, &opts, done, |records| {
        eprintln!("montecarlo: {}/{n_reps} replications", records.len());
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            fingerprint: fingerprint.clone(),
            records: records.to_vec(),
        };
        let res = serde_json::to_vec(&ck)
            .map_err(|e| CliError::Io(e.to_string()))
            .and_then(|bytes| io::write_atomic(&ck_path, &bytes));
        res.map_err(|e| {
            let msg = e.to_string();
            io_error = Some(e);
            Error::InvalidArgument(msg)
        })
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let report = report.map_err(CliError::from_run)?;
    if report.failed_reps * 10 > report.n_reps {
        return Err(CliError::Compute(format!(
            "{} of {} replications had failed estimates (limit 10%)",
            report.failed_reps, report.n_reps
        )));
    }
    io::write_atomic(&out, report.to_csv().as_bytes())?;
    if !cfg.keep_checkpoint && ck_path.exists() {
        fs::remove_file(&ck_path).map_err(|e| CliError::Io(format!("{}: {e}", ck_path.display())))?;
    }
    Ok(())
}
