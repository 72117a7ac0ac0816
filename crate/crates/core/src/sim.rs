//! Event-driven simulation of the network under the threshold policy.
//!
//! Inter-arrival times and job sizes are exponential, so between events the
//! queue vector, the flags and the allocation are constant and every cost
//! integral is accumulated in closed form.

use std::collections::HashMap;
use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, ScaledParams};
use crate::policy::{update_hysteresis, Policy, PolicyParams, Thresholds};
use crate::scalar::{from_f64, to_f64, Rational};
use crate::stats::Summary;
use crate::workload::WorkloadCost;

/// Settings for one simulated run (shared by its replications).
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub r: f64,
    /// Horizon in diffusion time; the chain runs for `r^2 * horizon`.
    pub horizon: f64,
    /// Discount rate in diffusion time.
    pub theta: f64,
    /// Initial queue lengths; all zero when `None`.
    pub q0: Option<Vec<u64>>,
    /// Diffusion-time spacing of recorded trajectory points.
    pub record_every: Option<f64>,
    /// Also accumulate the workload cost of the scaled workload.
    pub track_workload_cost: bool,
    /// Record wall-clock time per run (makes reports non-reproducible).
    pub timing: bool,
}

impl SimConfig {
    pub fn new(r: f64, horizon: f64, theta: f64) -> Self {
        SimConfig {
            r,
            horizon,
            theta,
            q0: None,
            record_every: None,
            track_workload_cost: false,
            timing: false,
        }
    }

    fn check(&self, spec: &NetworkSpec) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parameter(format!("horizon must be finite and >= 0, got {}", self.horizon)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Parameter(format!("theta must be positive, got {}", self.theta)));
        }
        if let Some(q0) = &self.q0 {
            if q0.len() != spec.num_jobs() {
                return Err(Error::Structure(format!(
                    "initial state has {} entries, network has {} jobs",
                    q0.len(),
                    spec.num_jobs()
                )));
            }
        }
        if let Some(dt) = self.record_every {
            if !(dt > 0.0) {
                return Err(Error::Parameter("record interval must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Queue lengths at a diffusion time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub q: Vec<u64>,
}

/// Result of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub r: f64,
    pub rep: u64,
    pub seed: u64,
    pub j_e: f64,
    pub j_d: f64,
    /// Bound on the discounted cost beyond the horizon.
    pub j_d_tail: f64,
    pub events: u64,
    pub idleness: Vec<f64>,
    /// Time average of `C(KM Q/r)`, when tracked.
    pub mean_workload_cost: Option<f64>,
    pub wallclock_s: Option<f64>,
}

/// Final state of one replication with its bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub stats: RunStats,
    pub q: Vec<u64>,
    pub gated: Vec<bool>,
    pub arrivals: Vec<u64>,
    pub completions: Vec<u64>,
    /// Unscaled clock at the end of the run.
    pub t: f64,
    /// Cumulative work `B_j` allotted to each job.
    pub work: Vec<f64>,
    /// Cumulative unused capacity `I_i` per resource.
    pub idle: Vec<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Replicated estimates at one scale `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub r: f64,
    pub horizon: f64,
    pub theta: f64,
    pub runs: Vec<RunStats>,
    pub j_e: Summary,
    pub j_d: Summary,
    pub idleness: Vec<f64>,
    pub events: u64,
}

impl CostReport {
    pub fn from_runs(config: &SimConfig, runs: Vec<RunStats>) -> Self {
        let j_e = Summary::of(&runs.iter().map(|s| s.j_e).collect::<Vec<_>>());
        let j_d = Summary::of(&runs.iter().map(|s| s.j_d).collect::<Vec<_>>());
        let resources = runs.first().map_or(0, |s| s.idleness.len());
        let idleness = (0..resources)
            .map(|i| runs.iter().map(|s| s.idleness[i]).sum::<f64>() / runs.len() as f64)
            .collect();
        let events = runs.iter().map(|s| s.events).sum();
        CostReport { r: config.r, horizon: config.horizon, theta: config.theta, runs, j_e, j_d, idleness, events }
    }
}

/// Diffusion-scaled view of a queue vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledState {
    pub t: f64,
    pub q_hat: Vec<f64>,
    /// `G^r Q_hat`
    pub w_hat: Vec<f64>,
    /// `K M Q_hat`
    pub w_tilde: Vec<f64>,
}

/// `Q/r`, its workloads and the clock `t/r^2`.
pub fn diffusion_scaled(spec: &NetworkSpec, scaled: &ScaledParams, q: &[u64], t: f64) -> ScaledState {
    let r = scaled.r_f64();
    let q_hat: Vec<f64> = q.iter().map(|&v| v as f64 / r).collect();
    let apply = |mu: &[Rational]| -> Vec<f64> {
        (0..spec.num_resources())
            .map(|i| spec.jobs_at(i).iter().map(|j| q_hat[j] / to_f64(&mu[j])).sum())
            .collect()
    };
    ScaledState { t: t / (r * r), w_hat: apply(&scaled.mu_r), w_tilde: apply(spec.mu()), q_hat }
}

/// `c3 = 2 J c2 / min_j mu_j`.
pub fn idleness_constant(spec: &NetworkSpec, params: &PolicyParams) -> f64 {
    let min_mu = spec.mu().iter().map(to_f64).fold(f64::INFINITY, f64::min);
    2.0 * spec.num_jobs() as f64 * params.c2 / min_mu
}

/// Seed for stream `stream`, scale `r` and replication `rep` of a master seed.
pub fn derive_seed(master: u64, stream: &str, r: f64, rep: u64) -> u64 {
    let mut h = splitmix(master);
    for b in stream.bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    h = splitmix(h ^ r.to_bits());
    splitmix(h ^ rep)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Rates {
    service: Vec<f64>,
    x: Vec<f64>,
    total_service: f64,
    idle: Vec<f64>,
}

/// Simulator for one network, policy and scale.
pub struct Simulator {
    policy: Policy,
    config: SimConfig,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    inv_mu: Vec<f64>,
    h: Vec<f64>,
    total_arrival: f64,
    thresholds: Thresholds,
    idle_threshold: f64,
    workload_cost: Option<WorkloadCost>,
}

impl Simulator {
    pub fn new(policy: &Policy, workload_cost: Option<&WorkloadCost>, config: SimConfig) -> Result<Self> {
        let spec = policy.spec();
        config.check(spec)?;
        let r = from_f64(config.r).ok_or_else(|| Error::Parameter(format!("bad r {}", config.r)))?;
        let scaled = spec.scaled_params(&r)?;
        if config.track_workload_cost && workload_cost.is_none() {
            return Err(Error::Parameter("tracking the workload cost needs an evaluator".into()));
        }
        let lambda: Vec<f64> = scaled.lambda_r.iter().map(to_f64).collect();
        let mu: Vec<f64> = scaled.mu_r.iter().map(to_f64).collect();
        let params = policy.params();
        Ok(Simulator {
            total_arrival: lambda.iter().sum(),
            inv_mu: mu.iter().map(|m| 1.0 / m).collect(),
            h: spec.holding_cost().iter().map(to_f64).collect(),
            thresholds: params.thresholds(config.r),
            idle_threshold: idleness_constant(spec, params) * config.r.powf(params.alpha),
            workload_cost: if config.track_workload_cost { workload_cost.cloned() } else { None },
            policy: policy.clone(),
            lambda,
            mu,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn rates(&self, sigma: BitSet, gated: BitSet) -> Rates {
        let spec = self.policy.spec();
        let alloc = self.policy.allocate(sigma, gated);
        let load = spec.row_sums(&alloc.x);
        let idle = spec.capacity().iter().zip(&load).map(|(c, l)| to_f64(&(c - l))).collect();
        let x: Vec<f64> = alloc.x.iter().map(to_f64).collect();
        let service: Vec<f64> = x.iter().zip(&self.mu).map(|(x, m)| x * m).collect();
        Rates { total_service: service.iter().sum(), service, x, idle }
    }

    /// Runs replication `rep` with the given seed.
    pub fn run(&self, rep: u64, seed: u64) -> Run {
        let started = Instant::now();
        let spec = self.policy.spec();
        let (nj, ni) = (spec.num_jobs(), spec.num_resources());
        let r = self.config.r;
        let r2 = r * r;
        let horizon = r2 * self.config.horizon;
        let theta = self.config.theta / r2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut q = self.config.q0.clone().unwrap_or_else(|| vec![0; nj]);
        let th = self.thresholds;
        let mut gated: BitSet =
            q.iter().enumerate().filter(|(_, &v)| th.is_depleted(v)).map(|(j, _)| j).collect();
        let mut sigma: BitSet =
            q.iter().enumerate().filter(|(_, &v)| th.is_stocked(v)).map(|(j, _)| j).collect();
        let workload_at = |q: &[u64], i: usize| -> f64 {
            spec.jobs_at(i).iter().map(|j| q[j] as f64 * self.inv_mu[j]).sum()
        };
        let mut w: Vec<f64> = (0..ni).map(|i| workload_at(&q, i)).collect();
        let mut holding: f64 = q.iter().zip(&self.h).map(|(&v, h)| v as f64 * h).sum();
        let mut wcost = self.workload_cost.as_ref().map(|c| c.cost(&w));

        let mut cache: HashMap<(u64, u64), Rc<Rates>> = HashMap::new();
        let mut rates = Rc::clone(
            cache.entry((sigma.0, gated.0)).or_insert_with(|| Rc::new(self.rates(sigma, gated))),
        );

        let mut t = 0.0;
        let mut discount = 1.0;
        let mut acc_holding = 0.0;
        let mut acc_discounted = 0.0;
        let mut acc_wcost = 0.0;
        let mut acc_idleness = vec![0.0; ni];
        let mut work = vec![0.0; nj];
        let mut idle = vec![0.0; ni];
        let mut arrivals = vec![0u64; nj];
        let mut completions = vec![0u64; nj];
        let mut events = 0u64;
        let mut trajectory = Vec::new();
        let mut next_record = self.config.record_every.map(|_| 0.0);

        loop {
            let total = self.total_arrival + rates.total_service;
            let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
            let end = (t + dt).min(horizon);
            let span = end - t;

            if let (Some(every), Some(next)) = (self.config.record_every, next_record.as_mut()) {
                while *next * r2 <= end && *next <= self.config.horizon {
                    trajectory.push(TrajectoryPoint { t: *next, q: q.clone() });
                    *next += every;
                }
            }

            let end_discount = (-theta * end).exp();
            acc_holding += holding * span;
            acc_discounted += holding * (discount - end_discount) / theta;
            discount = end_discount;
            if let Some(c) = wcost {
                acc_wcost += c * span;
            }
            for (j, x) in rates.x.iter().enumerate() {
                work[j] += x * span;
            }
            for i in 0..ni {
                let unused = rates.idle[i] * span;
                idle[i] += unused;
                if w[i] >= self.idle_threshold {
                    acc_idleness[i] += unused;
                }
            }
            t = end;
            if t >= horizon {
                break;
            }

            let mut u = rng.random::<f64>() * total;
            let mut event = None;
            for j in 0..nj {
                if u < self.lambda[j] {
                    event = Some((j, true));
                    break;
                }
                u -= self.lambda[j];
            }
            if event.is_none() {
                let mut last = None;
                for j in 0..nj {
                    if rates.service[j] <= 0.0 {
                        continue;
                    }
                    last = Some(j);
                    if u < rates.service[j] {
                        event = Some((j, false));
                        break;
                    }
                    u -= rates.service[j];
                }
                // Rounding can leave u just past the last bucket.
                event = event.or(last.map(|j| (j, false)));
            }
            let (j, arrival) = event.unwrap_or((nj - 1, true));

            if arrival {
                q[j] += 1;
                arrivals[j] += 1;
                holding += self.h[j];
            } else {
                assert!(q[j] > 0, "completion drawn for empty queue {j}");
                q[j] -= 1;
                completions[j] += 1;
                holding -= self.h[j];
            }
            events += 1;
            for i in spec.resources_of(j).iter() {
                w[i] = workload_at(&q, i);
            }
            if let Some(c) = &self.workload_cost {
                wcost = Some(c.cost(&w));
            }
            let now_gated = update_hysteresis(gated.contains(j), q[j], &th);
            let now_stocked = th.is_stocked(q[j]);
            if now_gated != gated.contains(j) || now_stocked != sigma.contains(j) {
                gated = if now_gated { gated.with(j) } else { gated.without(j) };
                sigma = if now_stocked { sigma.with(j) } else { sigma.without(j) };
                rates = Rc::clone(
                    cache
                        .entry((sigma.0, gated.0))
                        .or_insert_with(|| Rc::new(self.rates(sigma, gated))),
                );
            }
        }

        let scale = r * r2;
        let per_time = |acc: f64| if self.config.horizon > 0.0 { acc / (scale * self.config.horizon) } else { 0.0 };
        let end_holding: f64 = q.iter().zip(&self.h).map(|(&v, h)| v as f64 * h).sum();
        let stats = RunStats {
            r,
            rep,
            seed,
            j_e: per_time(acc_holding),
            j_d: acc_discounted / scale,
            j_d_tail: end_holding / r * (-self.config.theta * self.config.horizon).exp() / self.config.theta,
            events,
            idleness: acc_idleness.iter().map(|v| v / r).collect(),
            mean_workload_cost: self.workload_cost.as_ref().map(|_| per_time(acc_wcost)),
            wallclock_s: self.config.timing.then(|| started.elapsed().as_secs_f64()),
        };
        Run {
            stats,
            gated: (0..nj).map(|j| gated.contains(j)).collect(),
            q,
            arrivals,
            completions,
            t,
            work,
            idle,
            trajectory,
        }
    }

    /// Runs `reps` replications in parallel with seeds derived from `master_seed`.
    pub fn replicate(&self, reps: u64, master_seed: u64) -> CostReport {
        let runs = (0..reps)
            .into_par_iter()
            .map(|rep| self.run(rep, derive_seed(master_seed, "simulate", self.config.r, rep)).stats)
            .collect();
        CostReport::from_runs(&self.config, runs)
    }
}

/// Convenience wrapper: replicated simulation of `policy` under `config`.
pub fn simulate(
    policy: &Policy,
    workload_cost: Option<&WorkloadCost>,
    config: SimConfig,
    reps: u64,
    master_seed: u64,
) -> Result<CostReport> {
    Ok(Simulator::new(policy, workload_cost, config)?.replicate(reps, master_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ranking::find_viable_ranking;
    use crate::scalar::int;
    use crate::workload::classify;

    fn policy_for(spec: &NetworkSpec) -> Policy {
        let cls = classify(spec).unwrap();
        let ranking = find_viable_ranking(spec, &cls).unwrap().unwrap();
        Policy::new(spec, &cls, &ranking, PolicyParams::default()).unwrap()
    }

    #[test]
    fn zero_horizon_is_empty() {
        let policy = policy_for(&fixtures::net_b());
        let mut config = SimConfig::new(8.0, 0.0, 1.0);
        config.q0 = Some(vec![3, 0, 1, 0, 0, 2, 0]);
        let run = Simulator::new(&policy, None, config).unwrap().run(0, 1);
        assert_eq!(run.stats.j_e, 0.0);
        assert_eq!(run.stats.j_d, 0.0);
        assert_eq!(run.stats.events, 0);
        assert_eq!(run.q, vec![3, 0, 1, 0, 0, 2, 0]);
        assert!(run.stats.idleness.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_report() {
        let policy = policy_for(&fixtures::net_b());
        let config = SimConfig::new(4.0, 2.0, 1.0);
        let a = simulate(&policy, None, config.clone(), 3, 99).unwrap();
        let b = simulate(&policy, None, config, 3, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.runs[0].seed, a.runs[1].seed);
    }

    #[test]
    fn conservation_and_idleness_bookkeeping() {
        let spec = fixtures::net_b();
        let policy = policy_for(&spec);
        let mut config = SimConfig::new(6.0, 3.0, 1.0);
        config.q0 = Some(vec![2, 0, 5, 1, 0, 0, 9]);
        let run = Simulator::new(&policy, None, config.clone()).unwrap().run(0, 5);
        let q0 = config.q0.unwrap();
        for j in 0..7 {
            assert_eq!(run.q[j] + run.completions[j], q0[j] + run.arrivals[j]);
        }
        assert!((run.t - 36.0 * 3.0).abs() < 1e-9);
        for i in 0..4 {
            let used: f64 = spec.jobs_at(i).iter().map(|j| run.work[j]).sum();
            let expected = run.t * to_f64(&spec.capacity()[i]) - used;
            assert!((run.idle[i] - expected).abs() < 1e-6 * run.t);
            assert!(run.idle[i] >= -1e-9);
        }
    }

    #[test]
    fn scaled_state() {
        let spec = fixtures::net_b_heavy_traffic();
        let scaled = spec.scaled_params(&int(7)).unwrap();
        let s = diffusion_scaled(&spec, &scaled, &[7, 0, 0, 0, 0, 0, 0], 49.0);
        assert_eq!(s.t, 1.0);
        assert_eq!(s.q_hat, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.w_hat, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.w_tilde, s.w_hat);
        let zero = diffusion_scaled(&spec, &scaled, &[0; 7], 0.0);
        assert!(zero.q_hat.iter().chain(&zero.w_hat).all(|&v| v == 0.0));
    }

    #[test]
    fn trajectory_is_thinned() {
        let policy = policy_for(&fixtures::mm1());
        let mut config = SimConfig::new(4.0, 2.0, 1.0);
        config.record_every = Some(0.5);
        let run = Simulator::new(&policy, None, config).unwrap().run(0, 3);
        let times: Vec<f64> = run.trajectory.iter().map(|p| p.t).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn seeds_differ_by_stream() {
        assert_ne!(derive_seed(1, "simulate", 4.0, 0), derive_seed(1, "hgi", 4.0, 0));
        assert_ne!(derive_seed(1, "simulate", 4.0, 0), derive_seed(1, "simulate", 8.0, 0));
        assert_eq!(derive_seed(1, "simulate", 4.0, 2), derive_seed(1, "simulate", 4.0, 2));
    }
}
