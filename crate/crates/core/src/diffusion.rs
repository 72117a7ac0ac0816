//! Skorohod reflection, reflected Brownian motion in the orthant and Monte
//! Carlo estimates of the HGI reference costs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::scalar::to_f64;
use crate::sim::derive_seed;
use crate::stats::Summary;
use crate::workload::WorkloadCost;

/// Reflected path `phi = psi + eta` on a grid, together with the pushing term.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectedPath {
    /// `phi[n][i]`: coordinate `i` at grid point `n`.
    pub phi: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
}

/// One-dimensional reflection `phi(t) = psi(t) + sup_{s <= t} (-psi(s))^+` on a grid.
pub fn skorohod_1d(psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(&first) = psi.first() {
        if first < 0.0 {
            return Err(Error::Parameter(format!("path must start in [0, inf), got {first}")));
        }
    }
    let mut push = 0.0f64;
    let mut phi = Vec::with_capacity(psi.len());
    let mut eta = Vec::with_capacity(psi.len());
    for &v in psi {
        push = push.max(-v);
        eta.push(push);
        phi.push(v + push);
    }
    Ok((phi, eta))
}

/// Coordinatewise reflection onto the nonnegative orthant.
pub fn skorohod_orthant(psi: &[Vec<f64>]) -> Result<ReflectedPath> {
    let dim = psi.first().map_or(0, Vec::len);
    if psi.iter().any(|p| p.len() != dim) {
        return Err(Error::Structure("path points have different dimensions".into()));
    }
    let mut phi = vec![vec![0.0; dim]; psi.len()];
    let mut eta = vec![vec![0.0; dim]; psi.len()];
    for i in 0..dim {
        let coordinate: Vec<f64> = psi.iter().map(|p| p[i]).collect();
        let (f, e) = skorohod_1d(&coordinate)?;
        for n in 0..psi.len() {
            phi[n][i] = f[n];
            eta[n][i] = e[n];
        }
    }
    Ok(ReflectedPath { phi, eta })
}

/// Settings of the reflected Brownian motion and its Euler scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmConfig {
    pub w0: Vec<f64>,
    /// Euler step in diffusion time.
    pub dt: f64,
    pub horizon: f64,
    /// Start of the averaging window; 10% of the horizon when `None`.
    pub burn_in: Option<f64>,
    pub seed: u64,
    /// Replaces the drift magnitude `v*` (testing hook).
    pub drift_override: Option<Vec<f64>>,
    /// Replaces the `I x J` diffusion matrix (testing hook).
    pub lambda_override: Option<Vec<Vec<f64>>>,
}

impl RbmConfig {
    pub fn new(w0: Vec<f64>, horizon: f64, seed: u64) -> Self {
        RbmConfig {
            w0,
            dt: 1e-3,
            horizon,
            burn_in: None,
            seed,
            drift_override: None,
            lambda_override: None,
        }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(0.1 * self.horizon)
    }
}

/// Drift magnitude `v* = K beta*` as floats.
pub fn drift(spec: &NetworkSpec) -> Vec<f64> {
    spec.v_star().iter().map(to_f64).collect()
}

/// `Lambda = K diag(zeta)^{1/2}` with `zeta_j = 2 rho_j / mu_j`.
pub fn diffusion_matrix(spec: &NetworkSpec) -> Vec<Vec<f64>> {
    let rho = spec.rho();
    let root: Vec<f64> = (0..spec.num_jobs())
        .map(|j| (2.0 * to_f64(&rho[j]) / to_f64(&spec.mu()[j])).sqrt())
        .collect();
    (0..spec.num_resources())
        .map(|i| (0..spec.num_jobs()).map(|j| if spec.incidence(i, j) { root[j] } else { 0.0 }).collect())
        .collect()
}

/// Euler scheme with coordinatewise projection after every step.
struct Euler {
    w: Vec<f64>,
    step_drift: Vec<f64>,
    // Lambda scaled by sqrt(dt), as (row, column, value) nonzeros.
    noise: Vec<(usize, usize, f64)>,
    columns: usize,
    xi: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Euler {
    fn new(spec: &NetworkSpec, config: &RbmConfig, seed: u64) -> Result<Self> {
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", config.dt)));
        }
        if !(config.horizon >= 0.0 && config.horizon.is_finite()) {
            return Err(Error::Parameter(format!("horizon must be finite and >= 0, got {}", config.horizon)));
        }
        let ni = spec.num_resources();
        if config.w0.len() != ni || config.w0.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Parameter(format!("w0 must be {ni} nonnegative numbers")));
        }
        let v = config.drift_override.clone().unwrap_or_else(|| drift(spec));
        let lambda = config.lambda_override.clone().unwrap_or_else(|| diffusion_matrix(spec));
        if v.len() != ni || lambda.len() != ni {
            return Err(Error::Structure("drift or diffusion matrix has the wrong size".into()));
        }
        let columns = lambda.first().map_or(0, Vec::len);
        if lambda.iter().flatten().any(|x| !x.is_finite()) || lambda.iter().any(|r| r.len() != columns) {
            return Err(Error::Parameter("diffusion matrix must be finite and rectangular".into()));
        }
        let sq = config.dt.sqrt();
        let mut noise = Vec::new();
        for (i, row) in lambda.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    noise.push((i, j, x * sq));
                }
            }
        }
        Ok(Euler {
            w: config.w0.clone(),
            step_drift: v.iter().map(|v| -v * config.dt).collect(),
            noise,
            columns,
            xi: vec![0.0; columns],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn step(&mut self) {
        let mut inc = self.step_drift.clone();
        if !self.noise.is_empty() {
            for x in self.xi.iter_mut().take(self.columns) {
                *x = StandardNormal.sample(&mut self.rng);
            }
            for &(i, j, v) in &self.noise {
                inc[i] += v * self.xi[j];
            }
        }
        for (w, d) in self.w.iter_mut().zip(inc) {
            *w = (*w + d).max(0.0);
        }
    }
}

fn steps(config: &RbmConfig) -> usize {
    (config.horizon / config.dt).round() as usize
}

/// Sampled RBM path with drift `-v*` and covariance `Lambda Lambda'`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmPath {
    pub times: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

pub fn rbm_simulate(spec: &NetworkSpec, config: &RbmConfig) -> Result<RbmPath> {
    let mut euler = Euler::new(spec, config, config.seed)?;
    let n = steps(config);
    let mut times = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    times.push(0.0);
    w.push(euler.w.clone());
    for k in 1..=n {
        euler.step();
        times.push(k as f64 * config.dt);
        w.push(euler.w.clone());
    }
    Ok(RbmPath { times, w })
}

/// Monte Carlo estimate of an HGI cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HgiEstimate {
    pub summary: Summary,
    pub samples: Vec<f64>,
    /// Estimated contribution beyond the horizon (discounted mode only).
    pub tail: f64,
}

impl HgiEstimate {
    pub fn mean(&self) -> f64 {
        self.summary.mean
    }

    pub fn stderr(&self) -> f64 {
        self.summary.stderr
    }
}

fn replicate<F>(config: &RbmConfig, reps: u64, stream: &str, one: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(u64) -> Result<(f64, f64)> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|rep| one(derive_seed(config.seed, stream, config.dt, rep)))
        .collect()
}

/// `E int_0^inf e^{-theta t} C(W(t)) dt` by trapezoid quadrature up to the horizon.
///
/// The reported tail is the mean of `e^{-theta H} C(W(H)) / theta`.
pub fn hgi_discounted(
    spec: &NetworkSpec,
    cost: &WorkloadCost,
    theta: f64,
    config: &RbmConfig,
    reps: u64,
) -> Result<HgiEstimate> {
    if !(theta > 0.0) {
        return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
    }
    if reps == 0 {
        return Err(Error::Parameter("at least one replication is needed".into()));
    }
    let n = steps(config);
    let pairs = replicate(config, reps, "hgi-discounted", |seed| {
        let mut euler = Euler::new(spec, config, seed)?;
        let decay = (-theta * config.dt).exp();
        let mut weight = 1.0;
        let mut prev = cost.cost(&euler.w);
        let mut total = 0.0;
        for _ in 0..n {
            euler.step();
            let next_weight = weight * decay;
            let value = cost.cost(&euler.w);
            total += 0.5 * config.dt * (weight * prev + next_weight * value);
            weight = next_weight;
            prev = value;
        }
        Ok((total, weight * prev / theta))
    })?;
    let samples: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tail = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    Ok(HgiEstimate { summary: Summary::of(&samples), samples, tail })
}

/// Long-run average of `C(W(t))` over `[burn_in, horizon]`, averaged over replications.
pub fn hgi_ergodic(
    spec: &NetworkSpec,
    cost: &WorkloadCost,
    config: &RbmConfig,
    reps: u64,
) -> Result<HgiEstimate> {
    if reps == 0 {
        return Err(Error::Parameter("at least one replication is needed".into()));
    }
    let n = steps(config);
    let first = (config.burn_in() / config.dt).round() as usize;
    if first >= n {
        return Err(Error::Parameter("burn-in must be shorter than the horizon".into()));
    }
    let pairs = replicate(config, reps, "hgi-ergodic", |seed| {
        let mut euler = Euler::new(spec, config, seed)?;
        let mut total = 0.0;
        for k in 1..=n {
            euler.step();
            if k > first {
                total += cost.cost(&euler.w);
            }
        }
        Ok((total / (n - first) as f64, 0.0))
    })?;
    let samples: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    Ok(HgiEstimate { summary: Summary::of(&samples), samples, tail: 0.0 })
}
