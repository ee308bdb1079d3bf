//! TOML run configurations, one schema per subcommand. Unknown keys are
//! rejected. Relative paths inside a config file resolve against the
//! directory containing that file.

use std::fs;
use std::path::{Path, PathBuf};

use hdlp::dgp::{a_dense, a_sparse, DfmDgpSpec, Section3Design, VarDgpSpec};
use hdlp::hac::HacConfig;
use hdlp::lp::{LpSpec, Method};
use hdlp::lpdid::LpDidSpec;
use hdlp::montecarlo::McDesign;
use hdlp::oga::OgaConfig;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Resolves `p` against the config file's directory unless absolute.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new("")).join(p)
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::DoubleOga]
}

fn default_levels() -> Vec<f64> {
    vec![0.95]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub threads: Option<usize>,
    pub lp: LpSpec,
    #[serde(default)]
    pub oga: OgaConfig,
    #[serde(default)]
    pub hac: HacConfig,
}

/// Named loading vectors of the persistent design.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingPreset {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Loading {
    Preset(LoadingPreset),
    Values(Vec<f64>),
}

/// The persistent sparse/dense design; every field except `rho` and `a`
/// defaults to the reference values.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section3Config {
    pub rho: f64,
    pub a: Loading,
    pub tau: Option<f64>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub lags_dgp: Option<usize>,
    pub lags_est: Option<usize>,
    pub horizons: Option<Vec<usize>>,
    pub burn_in: Option<usize>,
}

impl Section3Config {
    pub fn design(&self) -> Result<Section3Design, CliError> {
        let mut d = Section3Design::sparse(self.rho);
        if let Some(v) = self.tau {
            d.tau = v;
        }
        if let Some(v) = self.n {
            d.n = v;
        }
        if let Some(v) = self.t {
            d.t = v;
        }
        if let Some(v) = self.lags_dgp {
            d.lags_dgp = v;
        }
        if let Some(v) = self.lags_est {
            d.lags_est = v;
        }
        if let Some(v) = &self.horizons {
            d.horizons = v.clone();
        }
        if let Some(v) = self.burn_in {
            d.burn_in = v;
        }
        if d.n < 2 {
            return Err(CliError::Config("section3.n must be at least 2".into()));
        }
        d.a = match &self.a {
            Loading::Preset(LoadingPreset::Sparse) => a_sparse(d.n),
            Loading::Preset(LoadingPreset::Dense) => a_dense(d.n),
            Loading::Values(v) => v.clone(),
        };
        d.validate().map_err(CliError::config)?;
        Ok(d)
    }
}

/// Which (response, innovation) response path to record, 0-based.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueIrfConfig {
    pub response: usize,
    pub innovation: usize,
    #[serde(default = "default_max_horizon")]
    pub max_horizon: usize,
}

fn default_max_horizon() -> usize {
    60
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Sample length for `var` (and an override for `section3`).
    pub t: Option<usize>,
    pub section3: Option<Section3Config>,
    pub var: Option<VarDgpSpec>,
    pub dfm: Option<DfmDgpSpec>,
    pub true_irf: Option<TrueIrfConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub output: PathBuf,
    /// Defaults to `<output stem>.checkpoint.json`.
    pub checkpoint: Option<PathBuf>,
    pub n_reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    /// Keep the checkpoint after a successful run (it is removed otherwise).
    #[serde(default)]
    pub keep_checkpoint: bool,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    pub section3: Option<Section3Config>,
    pub var: Option<McDesign>,
    #[serde(default)]
    pub oga: OgaConfig,
    #[serde(default)]
    pub hac: HacConfig,
}

fn default_checkpoint_every() -> usize {
    50
}

impl MonteCarloConfig {
    pub fn design(&self) -> Result<McDesign, CliError> {
        match (&self.section3, &self.var) {
            (Some(s), None) => McDesign::section3(&s.design()?).map_err(CliError::config),
            (None, Some(v)) => {
                v.validate().map_err(CliError::config)?;
                Ok(v.clone())
            }
            _ => Err(CliError::Config("exactly one of [section3] or [var] is required".into())),
        }
    }
}

fn default_unit() -> String {
    "unit".into()
}
fn default_time() -> String {
    "time".into()
}
fn default_outcome() -> String {
    "y".into()
}
fn default_treatment() -> String {
    "d".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpDidConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default = "default_unit")]
    pub unit_column: String,
    #[serde(default = "default_time")]
    pub time_column: String,
    #[serde(default = "default_outcome")]
    pub outcome_column: String,
    #[serde(default = "default_treatment")]
    pub treatment_column: String,
    #[serde(default)]
    pub threads: Option<usize>,
    pub spec: LpDidSpec,
    #[serde(default)]
    pub oga: OgaConfig,
    #[serde(default)]
    pub hac: HacConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"
            input = "a.csv"
            output = "b.csv"
            bogus = 1
            [lp]
            response = "y"
            shock = "x"
            lags = 1
            horizons = [1]
        "#;
        assert!(toml::from_str::<EstimateConfig>(text).is_err());
    }

    #[test]
    fn section3_presets() {
        let c: Section3Config = toml::from_str("rho = 0.5\na = \"dense\"").unwrap();
        let d = c.design().unwrap();
        assert_eq!(d.a, a_dense(10));
        assert_eq!(d.horizons.len(), 60);
        let c: Section3Config = toml::from_str("rho = 0.5\na = [0.1]\nn = 2\nlags_dgp = 1\nlags_est = 2").unwrap();
        assert_eq!(c.design().unwrap().a, vec![0.1]);
        let c: Section3Config = toml::from_str("rho = 0.5\na = [0.1, 0.2]").unwrap();
        assert!(c.design().is_err());
    }

    #[test]
    fn c_star_forms() {
        let o: OgaConfig = toml::from_str("c_star = { fixed = 2.0 }").unwrap();
        assert_eq!(o, OgaConfig::with_c_star(2.0));
        let o: OgaConfig =
            toml::from_str("[c_star.data_driven]\ncandidates = [1.6, 2.0]\neval_fraction = 0.25").unwrap();
        o.validate().unwrap();
    }
}
