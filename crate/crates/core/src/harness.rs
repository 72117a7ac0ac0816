//! Experiment orchestration: r-sweeps, HGI reference rows, gap reports and CSV I/O.

use std::io::{Read, Write};

use crate::diffusion::{hgi_discounted, hgi_ergodic, HgiEstimate, RbmConfig};
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::policy::{Policy, PolicyParams};
use crate::ranking::require_viable_ranking;
use crate::scalar::to_f64;
use crate::sim::{derive_seed, CostReport, RunStats, SimConfig, Simulator};
use crate::stats::Summary;
use crate::workload::{classify, inefficiency_constant, WorkloadCost};

/// Environment variable that caps the number of worker threads.
pub const WORKERS_ENV: &str = "HGI_WORKERS";

/// Applies [`WORKERS_ENV`] to the global thread pool, if set.
pub fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Parameter(format!("{WORKERS_ENV} must be a positive integer, got {value:?}")))?;
    if n == 0 {
        return Err(Error::Parameter(format!("{WORKERS_ENV} must be positive")));
    }
    // A pool that is already built keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Settings of the diffusion reference computed alongside a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct HgiSettings {
    pub dt: f64,
    pub horizon: f64,
    pub reps: u64,
}

impl Default for HgiSettings {
    fn default() -> Self {
        HgiSettings { dt: 1e-3, horizon: 200.0, reps: 20 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub r_values: Vec<f64>,
    pub horizon: f64,
    pub theta: f64,
    pub reps: u64,
    pub seed: u64,
    pub params: PolicyParams,
    /// Scaled initial state; the chain starts from `round(r * q0_hat)`.
    pub q0_hat: Option<Vec<f64>>,
    pub track_gap: bool,
    pub timing: bool,
    /// Reference row settings; no reference row when `None`.
    pub hgi: Option<HgiSettings>,
}

impl SweepConfig {
    pub fn new(r_values: Vec<f64>, horizon: f64, reps: u64, seed: u64) -> Self {
        SweepConfig {
            r_values,
            horizon,
            theta: 1.0,
            reps,
            seed,
            params: PolicyParams::default(),
            q0_hat: None,
            track_gap: false,
            timing: false,
            hgi: Some(HgiSettings::default()),
        }
    }

    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        self.params.check()?;
        if self.r_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("r values must be strictly increasing".into()));
        }
        if self.reps == 0 {
            return Err(Error::Parameter("at least one replication is needed".into()));
        }
        if let Some(q) = &self.q0_hat {
            if q.len() != spec.num_jobs() || q.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::Parameter(format!("q0 must be {} nonnegative numbers", spec.num_jobs())));
            }
        }
        Ok(())
    }

    fn sim_config(&self, r: f64) -> SimConfig {
        let mut c = SimConfig::new(r, self.horizon, self.theta);
        c.q0 = self.q0_hat.as_ref().map(|q| q.iter().map(|v| (v * r).round() as u64).collect());
        c.track_workload_cost = self.track_gap;
        c.timing = self.timing;
        c
    }
}

/// HGI reference estimates reported next to a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct HgiRow {
    pub ergodic: Summary,
    pub discounted: Summary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub reports: Vec<CostReport>,
    pub hgi: Option<HgiRow>,
}

/// Simulates every `r` and computes the reference row.
pub fn run_sweep(spec: &NetworkSpec, config: &SweepConfig) -> Result<SweepResult> {
    spec.ensure_valid()?;
    config.check(spec)?;
    let classes = classify(spec)?;
    let ranking = require_viable_ranking(spec, &classes)?;
    let policy = Policy::new(spec, &classes, &ranking, config.params)?;
    let cost = WorkloadCost::new(spec, &classes, Some(&ranking));
    let reports = config
        .r_values
        .iter()
        .map(|&r| {
            let sim = Simulator::new(&policy, Some(&cost), config.sim_config(r))?;
            Ok(sim.replicate(config.reps, config.seed))
        })
        .collect::<Result<Vec<_>>>()?;
    let hgi = match &config.hgi {
        None => None,
        Some(settings) => Some(reference_row(spec, &cost, config, settings)?),
    };
    Ok(SweepResult { reports, hgi })
}

fn reference_row(
    spec: &NetworkSpec,
    cost: &WorkloadCost,
    config: &SweepConfig,
    settings: &HgiSettings,
) -> Result<HgiRow> {
    let seed = derive_seed(config.seed, "sweep-hgi", 0.0, 0);
    let w0: Vec<f64> = match &config.q0_hat {
        None => vec![0.0; spec.num_resources()],
        Some(q) => (0..spec.num_resources())
            .map(|i| spec.jobs_at(i).iter().map(|j| q[j] / to_f64(&spec.mu()[j])).sum())
            .collect(),
    };
    let mut rbm = RbmConfig::new(vec![0.0; spec.num_resources()], settings.horizon, seed);
    rbm.dt = settings.dt;
    let ergodic = hgi_ergodic(spec, cost, &rbm, settings.reps)?;
    rbm.w0 = w0;
    let discounted = hgi_discounted(spec, cost, config.theta, &rbm, settings.reps)?;
    Ok(HgiRow { ergodic: ergodic.summary, discounted: discounted.summary })
}

/// Empirical gap between holding cost and workload cost at one `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub r: f64,
    pub holding: f64,
    pub workload_cost: f64,
    pub gap: f64,
    pub bound: f64,
}

/// Gap `|avg h.Q_hat - avg C(W_tilde)|` per `r` with the bound `B r^(alpha-1/2) (1 + |q0|^2)`.
pub fn report_gap(
    spec: &NetworkSpec,
    reports: &[CostReport],
    params: &PolicyParams,
    q0_hat: Option<&[f64]>,
) -> Result<Vec<GapRow>> {
    let b = to_f64(&inefficiency_constant(spec));
    let norm2: f64 = q0_hat.map_or(0.0, |q| q.iter().map(|v| v * v).sum());
    reports
        .iter()
        .map(|rep| {
            let mut gaps = Vec::with_capacity(rep.runs.len());
            let (mut holding, mut wcost) = (0.0, 0.0);
            for run in &rep.runs {
                let c = run.mean_workload_cost.ok_or_else(|| {
                    Error::Parameter("run did not track the workload cost".into())
                })?;
                gaps.push((run.j_e - c).abs());
                holding += run.j_e;
                wcost += c;
            }
            let n = rep.runs.len().max(1) as f64;
            Ok(GapRow {
                r: rep.r,
                holding: holding / n,
                workload_cost: wcost / n,
                gap: gaps.iter().sum::<f64>() / n,
                bound: b * rep.r.powf(params.alpha - 0.5) * (1.0 + norm2),
            })
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

/// Per-replication CSV header for `resources` resources.
pub fn runs_header(resources: usize) -> Vec<String> {
    let mut h: Vec<String> = ["r", "rep", "seed", "J_E", "J_D", "J_D_tail", "events"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=resources).map(|i| format!("idleness_{i}")));
    h.push("workload_cost".into());
    h.push("wallclock_s".into());
    h
}

/// Writes one row per replication.
pub fn write_runs_csv<W: Write>(out: W, resources: usize, runs: &[RunStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(runs_header(resources))?;
    for s in runs {
        let mut rec = vec![
            s.r.to_string(),
            s.rep.to_string(),
            s.seed.to_string(),
            s.j_e.to_string(),
            s.j_d.to_string(),
            s.j_d_tail.to_string(),
            s.events.to_string(),
        ];
        rec.extend(s.idleness.iter().map(|v| v.to_string()));
        rec.push(fmt_opt(s.mean_workload_cost));
        rec.push(fmt_opt(s.wallclock_s));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunStats>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let resources = header.iter().filter(|h| h.starts_with("idleness_")).count();
    if header.iter().collect::<Vec<_>>() != runs_header(resources) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    let mut runs = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let int = |k: usize, what: &str| -> Result<u64> {
            rec[k].trim().parse().map_err(|_| Error::Parse(format!("bad {what}: {:?}", &rec[k])))
        };
        runs.push(RunStats {
            r: parse_f64(&rec[0], "r")?,
            rep: int(1, "rep")?,
            seed: int(2, "seed")?,
            j_e: parse_f64(&rec[3], "J_E")?,
            j_d: parse_f64(&rec[4], "J_D")?,
            j_d_tail: parse_f64(&rec[5], "J_D_tail")?,
            events: int(6, "events")?,
            idleness: (0..resources)
                .map(|i| parse_f64(&rec[7 + i], "idleness"))
                .collect::<Result<_>>()?,
            mean_workload_cost: parse_opt(&rec[7 + resources], "workload_cost")?,
            wallclock_s: parse_opt(&rec[8 + resources], "wallclock_s")?,
        });
    }
    Ok(runs)
}

/// One summary line of a sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// `"sim"` for a simulated scale, `"hgi"` for the reference row.
    pub kind: String,
    pub r: Option<f64>,
    pub j_e: f64,
    pub j_e_stderr: f64,
    pub j_d: f64,
    pub j_d_stderr: f64,
    pub reps: u64,
    pub events: u64,
    pub idleness: Vec<f64>,
}

impl SweepResult {
    pub fn rows(&self, resources: usize) -> Vec<SweepRow> {
        let mut rows: Vec<SweepRow> = self
            .reports
            .iter()
            .map(|rep| SweepRow {
                kind: "sim".into(),
                r: Some(rep.r),
                j_e: rep.j_e.mean,
                j_e_stderr: rep.j_e.stderr,
                j_d: rep.j_d.mean,
                j_d_stderr: rep.j_d.stderr,
                reps: rep.runs.len() as u64,
                events: rep.events,
                idleness: rep.idleness.clone(),
            })
            .collect();
        if let Some(h) = &self.hgi {
            rows.push(SweepRow {
                kind: "hgi".into(),
                r: None,
                j_e: h.ergodic.mean,
                j_e_stderr: h.ergodic.stderr,
                j_d: h.discounted.mean,
                j_d_stderr: h.discounted.stderr,
                reps: h.ergodic.n as u64,
                events: 0,
                idleness: vec![0.0; resources],
            });
        }
        rows
    }
}

pub fn sweep_header(resources: usize) -> Vec<String> {
    let mut h: Vec<String> = ["kind", "r", "J_E", "J_E_stderr", "J_D", "J_D_stderr", "reps", "events"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=resources).map(|i| format!("idleness_{i}")));
    h
}

pub fn write_sweep_csv<W: Write>(out: W, resources: usize, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(resources))?;
    for row in rows {
        let mut rec = vec![
            row.kind.clone(),
            fmt_opt(row.r),
            row.j_e.to_string(),
            row.j_e_stderr.to_string(),
            row.j_d.to_string(),
            row.j_d_stderr.to_string(),
            row.reps.to_string(),
            row.events.to_string(),
        ];
        rec.extend(row.idleness.iter().map(|v| v.to_string()));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let resources = header.iter().filter(|h| h.starts_with("idleness_")).count();
    if header.iter().collect::<Vec<_>>() != sweep_header(resources) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let int = |k: usize| -> Result<u64> {
            rec[k].trim().parse().map_err(|_| Error::Parse(format!("bad integer {:?}", &rec[k])))
        };
        rows.push(SweepRow {
            kind: rec[0].to_string(),
            r: parse_opt(&rec[1], "r")?,
            j_e: parse_f64(&rec[2], "J_E")?,
            j_e_stderr: parse_f64(&rec[3], "J_E_stderr")?,
            j_d: parse_f64(&rec[4], "J_D")?,
            j_d_stderr: parse_f64(&rec[5], "J_D_stderr")?,
            reps: int(6)?,
            events: int(7)?,
            idleness: (0..resources).map(|i| parse_f64(&rec[8 + i], "idleness")).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

/// Writes a replicated estimate of the reference cost.
pub fn write_hgi_csv<W: Write>(out: W, estimate: &HgiEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rep", "value"])?;
    for (k, v) in estimate.samples.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
