//! Simulation designs: Gaussian VAR(K), the persistent sparse/dense design
//! with an AR(1) shock variable, and a dynamic factor model. Also the
//! companion-form reduced-form impulse response used as ground truth.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lp::{LpSpec, TimeSeriesMatrix};

/// Spectral radius above which a VAR is rejected; exactly one is tolerated
/// (with a warning) for unit-root experiments.
const STATIONARITY_SLACK: f64 = 1e-9;

/// Damping applied per round when the sparse/dense construction is explosive.
pub const DAMPING_FACTOR: f64 = 0.95;
pub const MAX_DAMPING_ROUNDS: u32 = 20;

/// `Sigma[i][j] = tau^|i-j|`.
pub fn toeplitz_power_sigma(n: usize, tau: f64) -> Matrix {
    assert!(tau.abs() < 1.0, "|tau| must be below one");
    let mut m = Matrix::zeros(n.max(1), n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, tau.powi((i as i32 - j as i32).abs()));
        }
    }
    m
}

/// Gaussian VAR(K): `y_t = B_1 y_{t-1} + ... + B_K y_{t-K} + u_t`, `u_t ~ N(0, sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDgpSpec {
    /// `coefficients[l][i][j]` is entry `(i, j)` of `B_{l+1}`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// When set, the first variable is an autonomous AR(1) with this
    /// coefficient: row 1 of every `B_l` is overwritten.
    #[serde(default)]
    pub y1_rho: Option<f64>,
    /// Series names; defaults to `y1..yn`.
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

fn default_burn_in() -> usize {
    500
}

impl VarDgpSpec {
    pub fn new(coefficients: Vec<Vec<Vec<f64>>>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self { coefficients, sigma, burn_in: default_burn_in(), y1_rho: None, names: None };
        s.check_shapes()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn lags(&self) -> usize {
        self.coefficients.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.names.clone().unwrap_or_else(|| (1..=self.n()).map(|i| format!("y{i}")).collect())
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidArgument("VAR needs at least one variable".into()));
        }
        if self.coefficients.is_empty() {
            return Err(Error::InvalidArgument("VAR needs at least one lag".into()));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&self.sigma) || !self.coefficients.iter().all(square) {
            return Err(Error::DimensionMismatch(format!("VAR matrices must be {n}x{n}")));
        }
        if let Some(names) = &self.names {
            if names.len() != n {
                return Err(Error::DimensionMismatch(format!("{} names for {n} series", names.len())));
            }
        }
        let all = self.sigma.iter().chain(self.coefficients.iter().flatten()).flatten();
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("VAR specification"));
        }
        Ok(())
    }

    /// Coefficients with the AR(1) override applied.
    pub fn effective_coefficients(&self) -> Vec<Vec<Vec<f64>>> {
        let mut b = self.coefficients.clone();
        if let Some(rho) = self.y1_rho {
            for (l, bl) in b.iter_mut().enumerate() {
                bl[0].iter_mut().for_each(|v| *v = 0.0);
                if l == 0 {
                    bl[0][0] = rho;
                }
            }
        }
        b
    }

    /// `nK x nK` companion matrix.
    pub fn companion(&self) -> DMatrix<f64> {
        let n = self.n();
        let k = self.lags();
        let b = self.effective_coefficients();
        let mut c = DMatrix::zeros(n * k, n * k);
        for (l, bl) in b.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    c[(i, l * n + j)] = bl[i][j];
                }
            }
        }
        for i in n..n * k {
            c[(i, i - n)] = 1.0;
        }
        c
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.companion())
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        let s = DMatrix::from_fn(n, n, |i, j| self.sigma[i][j]);
        if (0..n).any(|i| (0..n).any(|j| (s[(i, j)] - s[(j, i)]).abs() > 1e-12)) {
            return Err(Error::InvalidArgument("innovation covariance is not symmetric".into()));
        }
        s.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::InvalidArgument("innovation covariance is not positive definite".into()))
    }

    /// Shapes, positive-definite covariance, and stationarity. A radius within
    /// `1 + 1e-9` is accepted; exactly one only logs a warning.
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        self.cholesky()?;
        let r = self.spectral_radius();
        if r >= 1.0 + STATIONARITY_SLACK {
            return Err(Error::NonStationarySpec(format!("companion spectral radius {r}")));
        }
        if r >= 1.0 - STATIONARITY_SLACK {
            log::warn!("VAR companion spectral radius {r} is at the unit circle");
        }
        Ok(())
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The persistent sparse/dense design: `y_1` is an AR(1) and the remaining
/// rows of every `B_l` load on the even-position variables through signed
/// powers of `a_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section3Design {
    pub rho: f64,
    /// Length `n - 1`.
    pub a: Vec<f64>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_lags_dgp")]
    pub lags_dgp: usize,
    #[serde(default = "default_lags_est")]
    pub lags_est: usize,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_tau() -> f64 {
    0.3
}
fn default_n() -> usize {
    10
}
fn default_t() -> usize {
    300
}
fn default_lags_dgp() -> usize {
    12
}
fn default_lags_est() -> usize {
    21
}
fn default_horizons() -> Vec<usize> {
    (1..=60).collect()
}

/// Sign-alternating vector whose magnitudes fall linearly from `first` to
/// `last`.
pub fn alternating_linear(first: f64, last: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let frac = if len > 1 { k as f64 / (len - 1) as f64 } else { 0.0 };
            let mag = first.abs() + (last.abs() - first.abs()) * frac;
            if k % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Sparse loading vector: `(0.4, -0.356, ..., -0.094, 0.05)` for `n = 10`.
pub fn a_sparse(n: usize) -> Vec<f64> {
    alternating_linear(0.4, 0.05, n - 1)
}

/// Dense loading vector: `(0.8, -0.725, ..., -0.275, 0.2)` for `n = 10`.
pub fn a_dense(n: usize) -> Vec<f64> {
    alternating_linear(0.8, 0.2, n - 1)
}

impl Section3Design {
    pub fn sparse(rho: f64) -> Self {
        Self::with_a(rho, a_sparse(default_n()))
    }

    pub fn dense(rho: f64) -> Self {
        Self::with_a(rho, a_dense(default_n()))
    }

    fn with_a(rho: f64, a: Vec<f64>) -> Self {
        Self {
            rho,
            a,
            tau: default_tau(),
            n: default_n(),
            t: default_t(),
            lags_dgp: default_lags_dgp(),
            lags_est: default_lags_est(),
            horizons: default_horizons(),
            burn_in: default_burn_in(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.abs() >= 1.0 || self.tau.abs() >= 1.0 {
            return Err(Error::InvalidArgument("|rho| and |tau| must be below one".into()));
        }
        if self.n < 2 || self.a.len() != self.n - 1 {
            return Err(Error::DimensionMismatch(format!(
                "a must have n - 1 = {} entries",
                self.n.saturating_sub(1)
            )));
        }
        if self.lags_dgp == 0 || self.lags_est < self.lags_dgp {
            return Err(Error::InvalidArgument("need 1 <= lags_dgp <= lags_est".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::InvalidArgument("no horizons".into()));
        }
        Ok(())
    }

    /// Local projection of `y_2` on `y_1` with `y_2..y_n` as contemporaneous
    /// controls and `lags_est` lags of every variable. The contemporaneous
    /// controls make the population coefficient the unit-innovation
    /// reduced-form response `[C^h]_{2,1}`.
    pub fn lp_spec(&self) -> LpSpec {
        let names: Vec<String> = (1..=self.n).map(|i| format!("y{i}")).collect();
        LpSpec {
            response: names[1].clone(),
            shock: names[0].clone(),
            contemporaneous: names[1..].to_vec(),
            lagged: names.clone(),
            lags: self.lags_dgp,
            horizons: self.horizons.clone(),
            include_intercept: true,
            lag_augment: self.lags_est - self.lags_dgp,
        }
    }
}

/// Coefficient tensor of the sparse/dense design.
///
/// Row 1 of `B_1` holds `rho`; every other entry of row 1 is zero. For rows
/// `j = 2..n` and lag `l`, the entries in columns `1, 3, 5, ...` (1-based) are
/// `(-1)^(l+1) a_{j-1}^l / l`; the others are zero. If the companion matrix
/// is not stable, rows `2..n` are scaled by `0.95^k` for the smallest `k`
/// (at most 20) that makes it stable. Returns the spec and `k`.
pub fn build_section3_coefficients(design: &Section3Design) -> Result<(VarDgpSpec, u32)> {
    design.validate()?;
    let n = design.n;
    let k = design.lags_dgp;
    let base: Vec<Vec<Vec<f64>>> = (1..=k)
        .map(|l| {
            let mut b = vec![vec![0.0; n]; n];
            for (j, row) in b.iter_mut().enumerate().skip(1) {
                let a = design.a[j - 1];
                let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
                let v = sign * a.powi(l as i32) / l as f64;
                for col in (0..n).step_by(2) {
                    row[col] = v;
                }
            }
            b
        })
        .collect();
    let sigma_m = toeplitz_power_sigma(n, design.tau);
    let sigma: Vec<Vec<f64>> = (0..n).map(|i| sigma_m.row(i).to_vec()).collect();

    let mut radius = f64::INFINITY;
    for round in 0..=MAX_DAMPING_ROUNDS {
        let d = DAMPING_FACTOR.powi(round as i32);
        let coefficients: Vec<Vec<Vec<f64>>> = base
            .iter()
            .map(|b| {
                b.iter()
                    .enumerate()
                    .map(|(j, row)| row.iter().map(|v| if j == 0 { *v } else { v * d }).collect())
                    .collect()
            })
            .collect();
        let spec = VarDgpSpec {
            coefficients,
            sigma: sigma.clone(),
            burn_in: design.burn_in,
            y1_rho: Some(design.rho),
            names: None,
        };
        radius = spec.spectral_radius();
        if radius < 1.0 {
            return Ok((spec, round));
        }
    }
    Err(Error::NonStationaryAfterDamping(radius))
}

/// Simulated series together with the innovations that generated them.
#[derive(Debug, Clone)]
pub struct VarSimulation {
    pub data: TimeSeriesMatrix,
    /// `t x n`, aligned with the returned rows.
    pub innovations: Vec<Vec<f64>>,
}

/// `t` periods of the VAR after discarding `burn_in`, from zero initial
/// conditions. Deterministic given the generator state.
pub fn simulate_var<R: Rng + ?Sized>(spec: &VarDgpSpec, t: usize, rng: &mut R) -> Result<TimeSeriesMatrix> {
    simulate_var_full(spec, t, rng).map(|s| s.data)
}

pub fn simulate_var_full<R: Rng + ?Sized>(spec: &VarDgpSpec, t: usize, rng: &mut R) -> Result<VarSimulation> {
    spec.validate()?;
    if t == 0 {
        return Err(Error::InvalidArgument("zero-length simulation".into()));
    }
    let n = spec.n();
    let k = spec.lags();
    let chol = spec.cholesky()?;
    let b = spec.effective_coefficients();
    let total = spec.burn_in + t;
    let mut y: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut innov = Vec::with_capacity(t);
    for step in 0..total {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let u = &chol * z;
        let mut yt: Vec<f64> = u.iter().copied().collect();
        for l in 1..=k.min(step) {
            let prev = &y[step - l];
            for (i, yi) in yt.iter_mut().enumerate() {
                *yi += b[l - 1][i].iter().zip(prev).map(|(c, p)| c * p).sum::<f64>();
            }
        }
        if step >= spec.burn_in {
            innov.push(u.iter().copied().collect());
        }
        y.push(yt);
    }
    let kept = &y[spec.burn_in..];
    let columns: Vec<Vec<f64>> = (0..n).map(|i| kept.iter().map(|r| r[i]).collect()).collect();
    let data = TimeSeriesMatrix::from_columns(spec.names(), &columns)?;
    Ok(VarSimulation { data, innovations: innov })
}

/// `[C^h]_{response, innovation}` for each horizon: the response of variable
/// `response` to a unit innovation in `innovation`, without orthogonalization.
pub fn true_reduced_form_irf(
    spec: &VarDgpSpec,
    response: usize,
    innovation: usize,
    horizons: &[usize],
) -> Result<Vec<f64>> {
    let n = spec.n();
    if response >= n || innovation >= n {
        return Err(Error::InvalidArgument(format!("variable index out of range for n = {n}")));
    }
    let c = spec.companion();
    let h_max = horizons.iter().copied().max().unwrap_or(0);
    let mut state = DVector::zeros(c.nrows());
    state[innovation] = 1.0;
    let mut path = Vec::with_capacity(h_max + 1);
    path.push(state[response]);
    for _ in 0..h_max {
        state = &c * state;
        path.push(state[response]);
    }
    Ok(horizons.iter().map(|&h| path[h]).collect())
}

/// Dynamic factor model:
///
/// ```text
/// f_t     = Phi f_{t-1} + H eps_t
/// x_t     = Lambda f_t + v_t
/// v_{i,t} = sum_j delta_{i,j} v_{i,t-j} + xi_i * e_{i,t}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfmDgpSpec {
    /// `r x r`
    pub phi: Vec<Vec<f64>>,
    /// `r x q`
    pub h_load: Vec<Vec<f64>>,
    /// `N x r`
    pub lambda: Vec<Vec<f64>>,
    /// Per-series AR coefficients `delta_{i,1..p_i}`.
    pub idio_ar: Vec<Vec<f64>>,
    pub idio_scale: Vec<f64>,
    pub t: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl DfmDgpSpec {
    pub fn n_factors(&self) -> usize {
        self.phi.len()
    }

    pub fn n_series(&self) -> usize {
        self.lambda.len()
    }

    pub fn n_shocks(&self) -> usize {
        self.h_load.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.n_factors();
        let n = self.n_series();
        let q = self.n_shocks();
        let shape_ok = self.phi.iter().all(|row| row.len() == r)
            && self.h_load.len() == r
            && self.h_load.iter().all(|row| row.len() == q)
            && self.lambda.iter().all(|row| row.len() == r)
            && self.idio_ar.len() == n
            && self.idio_scale.len() == n;
        if !shape_ok || n == 0 {
            return Err(Error::DimensionMismatch("inconsistent factor model dimensions".into()));
        }
        if self.t == 0 {
            return Err(Error::InvalidArgument("zero-length simulation".into()));
        }
        let phi = DMatrix::from_fn(r, r, |i, j| self.phi[i][j]);
        let rad = spectral_radius(&phi);
        if rad >= 1.0 {
            return Err(Error::NonStationarySpec(format!("factor VAR spectral radius {rad}")));
        }
        for (i, ar) in self.idio_ar.iter().enumerate() {
            let p = ar.len();
            if p == 0 {
                continue;
            }
            let mut c = DMatrix::zeros(p, p);
            for (j, d) in ar.iter().enumerate() {
                c[(0, j)] = *d;
            }
            for j in 1..p {
                c[(j, j - 1)] = 1.0;
            }
            let rad = spectral_radius(&c);
            if rad >= 1.0 {
                return Err(Error::NonStationarySpec(format!(
                    "idiosyncratic AR of series {i} has companion radius {rad}"
                )));
            }
        }
        Ok(())
    }
}

impl DfmDgpSpec {
    /// Response of observable `series` to a unit factor shock `shock`:
    /// `Lambda_i Phi^h H_{.,j}`.
    pub fn true_irf(&self, series: usize, shock: usize, horizons: &[usize]) -> Result<Vec<f64>> {
        self.validate()?;
        if series >= self.n_series() || shock >= self.n_shocks() {
            return Err(Error::InvalidArgument("series/shock index out of range".into()));
        }
        let r = self.n_factors();
        let phi = DMatrix::from_fn(r, r, |i, j| self.phi[i][j]);
        let lambda = DVector::from_fn(r, |k, _| self.lambda[series][k]);
        let mut state = DVector::from_fn(r, |k, _| self.h_load[k][shock]);
        let h_max = horizons.iter().copied().max().unwrap_or(0);
        let mut path = Vec::with_capacity(h_max + 1);
        path.push(lambda.dot(&state));
        for _ in 0..h_max {
            state = &phi * state;
            path.push(lambda.dot(&state));
        }
        Ok(horizons.iter().map(|&h| path[h]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct DfmSimulation {
    /// `t x N` observables.
    pub observables: Vec<Vec<f64>>,
    /// `t x r`
    pub factors: Vec<Vec<f64>>,
    /// `t x N`
    pub idiosyncratic: Vec<Vec<f64>>,
}

/// Draws per period: `q` factor shocks, then `N` idiosyncratic shocks.
pub fn simulate_dfm_full<R: Rng + ?Sized>(spec: &DfmDgpSpec, rng: &mut R) -> Result<DfmSimulation> {
    spec.validate()?;
    let r = spec.n_factors();
    let n = spec.n_series();
    let q = spec.n_shocks();
    let total = spec.burn_in + spec.t;
    let mut f_prev = vec![0.0; r];
    let mut v_hist: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut out = DfmSimulation {
        observables: Vec::with_capacity(spec.t),
        factors: Vec::with_capacity(spec.t),
        idiosyncratic: Vec::with_capacity(spec.t),
    };
    for step in 0..total {
        let eps: Vec<f64> = (0..q).map(|_| StandardNormal.sample(rng)).collect();
        let xi: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let f: Vec<f64> = (0..r)
            .map(|i| {
                let ar: f64 = spec.phi[i].iter().zip(&f_prev).map(|(a, b)| a * b).sum();
                let sh: f64 = spec.h_load[i].iter().zip(&eps).map(|(a, b)| a * b).sum();
                ar + sh
            })
            .collect();
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let ar: f64 = spec.idio_ar[i]
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j < step)
                    .map(|(j, d)| d * v_hist[step - 1 - j][i])
                    .sum();
                ar + spec.idio_scale[i] * xi[i]
            })
            .collect();
        if step >= spec.burn_in {
            let x: Vec<f64> = (0..n)
                .map(|i| spec.lambda[i].iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() + v[i])
                .collect();
            out.observables.push(x);
            out.factors.push(f.clone());
            out.idiosyncratic.push(v.clone());
        }
        v_hist.push(v);
        f_prev = f;
    }
    Ok(out)
}

/// Observables as a named matrix `x1..xN`.
pub fn simulate_dfm<R: Rng + ?Sized>(spec: &DfmDgpSpec, rng: &mut R) -> Result<TimeSeriesMatrix> {
    let sim = simulate_dfm_full(spec, rng)?;
    let n = spec.n_series();
    let names = (1..=n).map(|i| format!("x{i}")).collect();
    let columns: Vec<Vec<f64>> =
        (0..n).map(|i| sim.observables.iter().map(|r| r[i]).collect()).collect();
    TimeSeriesMatrix::from_columns(names, &columns)
}
