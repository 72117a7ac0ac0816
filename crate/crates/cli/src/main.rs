mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hgi_core::diffusion::{hgi_discounted, hgi_ergodic, RbmConfig};
use hgi_core::harness::{
    configure_workers, report_gap, run_sweep, write_hgi_csv, write_runs_csv, write_sweep_csv, HgiSettings,
    SweepConfig,
};
use hgi_core::policy::ControlState;
use hgi_core::ranking::{all_viable_rankings, search_viable_ranking};
use hgi_core::scalar::{format_rational, from_f64, Rational};
use hgi_core::sim::SimConfig;
use hgi_core::workload::lp_min_cost;
use hgi_core::{
    classify, simulate, BitSet, Error, NetworkSpec, Policy, PolicyParams, Ranking, WorkloadCost,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 3;
const EXIT_NO_RANKING: u8 = 4;
const EXIT_IO: u8 = 5;

/// Error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn invalid(error: anyhow::Error) -> Self {
        Failure { code: EXIT_INVALID, error }
    }

    pub fn io(error: anyhow::Error) -> Self {
        Failure { code: EXIT_IO, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Invalid(_) => EXIT_INVALID,
            Error::NoViableRanking { .. } => EXIT_NO_RANKING,
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            _ => EXIT_FAILURE,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_FAILURE, error }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Threshold rate allocation for resource-sharing networks.
///
/// `--net` takes a TOML network file or a built-in fixture name.
/// Worker threads can be capped with the HGI_WORKERS environment variable.
/// Exit status: 0 success, 1 other errors, 2 usage, 3 invalid network,
/// 4 no viable ranking, 5 I/O.
#[derive(Parser)]
#[command(name = "hgi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the modelling conditions of a network.
    Validate(NetArg),
    /// Split jobs into primary, secondary and single-resource jobs.
    Classify(NetArg),
    /// Find a viable ranking of the multi-resource secondary jobs.
    Rank {
        #[command(flatten)]
        net: NetArg,
        /// List every viable ranking.
        #[arg(long)]
        all: bool,
    },
    /// Workload cost and a minimizer for a workload vector.
    Cost {
        #[command(flatten)]
        net: NetArg,
        /// Workload per resource, e.g. "1,2/3,0.5".
        #[arg(long, allow_hyphen_values = true)]
        w: String,
    },
    /// Nominal and gated rates in one queue state.
    Rates {
        #[command(flatten)]
        net: NetArg,
        /// Queue lengths per job.
        #[arg(long)]
        q: String,
        /// Gate flags per job (0/1); derived from the thresholds when omitted.
        #[arg(long)]
        e: Option<String>,
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Replicated simulation at one scale.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of a diffusion reference cost.
    Hgi(HgiArgs),
    /// Simulations over several scales plus a reference row.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct NetArg {
    /// Network file or fixture name.
    #[arg(long)]
    net: String,
}

#[derive(Args, Clone, Copy)]
struct PolicyArgs {
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 2.0)]
    c2: f64,
}

impl PolicyArgs {
    fn params(self) -> Outcome<PolicyParams> {
        Ok(PolicyParams::new(self.alpha, self.c1, self.c2)?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    net: NetArg,
    #[arg(long)]
    r: f64,
    /// Horizon in diffusion time.
    #[arg(long = "T", alias = "horizon")]
    horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial queue lengths (unscaled); empty network by default.
    #[arg(long)]
    q0: Option<String>,
    /// Record wall-clock seconds per replication.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ergodic,
    Discounted,
}

#[derive(Args)]
struct HgiArgs {
    #[command(flatten)]
    net: NetArg,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Initial workload per resource; zero when omitted.
    #[arg(long, allow_hyphen_values = true)]
    w0: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 200.0)]
    horizon: f64,
    /// Start of the averaging window (ergodic mode); 10% of the horizon by default.
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long, default_value_t = 20)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    net: NetArg,
    /// Strictly increasing scales, e.g. "4,8,16,32"; may be empty.
    #[arg(long, allow_hyphen_values = true)]
    r: String,
    #[arg(long = "T", alias = "horizon")]
    horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 20)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scaled initial queue lengths, applied as round(r * q0) at every scale.
    #[arg(long)]
    q0: Option<String>,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long, default_value_t = 1e-3)]
    hgi_dt: f64,
    #[arg(long, default_value_t = 200.0)]
    hgi_horizon: f64,
    #[arg(long, default_value_t = 20)]
    hgi_reps: u64,
    /// Skip the reference row.
    #[arg(long)]
    no_hgi: bool,
    /// Print the holding-cost versus workload-cost gap per scale to stderr.
    #[arg(long)]
    gap: bool,
    #[arg(long)]
    timing: bool,
    /// Per-replication CSV.
    #[arg(long)]
    runs_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn valid_network(arg: &NetArg) -> Outcome<NetworkSpec> {
    let spec = input::network(&arg.net)?;
    spec.ensure_valid()?;
    Ok(spec)
}

fn policy_for(spec: &NetworkSpec, params: PolicyParams) -> Outcome<(Policy, WorkloadCost)> {
    let classes = classify(spec)?;
    let search = search_viable_ranking(spec, &classes)?;
    let ranking = search.ranking.ok_or_else(|| Error::NoViableRanking {
        stuck_prefix: prefix_names(spec, &search.stuck_prefix),
    })?;
    let cost = WorkloadCost::new(spec, &classes, Some(&ranking));
    Ok((Policy::new(spec, &classes, &ranking, params)?, cost))
}

fn prefix_names(spec: &NetworkSpec, prefix: &Option<Vec<usize>>) -> String {
    prefix.iter().flatten().map(|&j| spec.job_name(j)).collect::<Vec<_>>().join(", ")
}

fn set_names(set: BitSet, names: impl Fn(usize) -> String) -> String {
    let parts: Vec<String> = set.iter().map(names).collect();
    if parts.is_empty() {
        "(none)".into()
    } else {
        parts.join(", ")
    }
}

fn job_set(spec: &NetworkSpec, set: BitSet) -> String {
    set_names(set, |j| spec.job_name(j).to_string())
}

fn ranking_line(spec: &NetworkSpec, ranking: &Ranking) -> String {
    if ranking.is_empty() {
        "(empty ranking)".into()
    } else {
        ranking.names(spec).join(" > ")
    }
}

fn output(path: Option<&PathBuf>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(Failure::io)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn check_len<T>(what: &str, values: &[T], expected: usize) -> Outcome {
    if values.len() != expected {
        return Err(anyhow!("{what} needs {expected} entries, got {}", values.len()).into());
    }
    Ok(())
}

fn validate(arg: &NetArg) -> Outcome {
    let spec = input::network(&arg.net)?;
    let report = spec.validate();
    if report.is_valid() {
        println!("valid: {} resources, {} jobs", spec.num_resources(), spec.num_jobs());
        return Ok(());
    }
    for v in &report.violations {
        println!("{v}");
    }
    Err(Failure::invalid(anyhow!("network fails: {}", report.failed_checks().join(", "))))
}

fn classify_cmd(arg: &NetArg) -> Outcome {
    let spec = valid_network(arg)?;
    let c = classify(&spec)?;
    println!("primary:   {}", job_set(&spec, c.primary));
    println!("secondary: {}", job_set(&spec, c.secondary));
    println!("multi:     {}", job_set(&spec, c.multi));
    println!("singles:   {}", job_set(&spec, c.singles()));
    Ok(())
}

fn rank(arg: &NetArg, all: bool) -> Outcome {
    let spec = valid_network(arg)?;
    let classes = classify(&spec)?;
    if all {
        let rankings = all_viable_rankings(&spec, &classes)?;
        if rankings.is_empty() {
            println!("NONE");
        }
        for r in rankings {
            println!("{}", ranking_line(&spec, &r));
        }
        return Ok(());
    }
    let search = search_viable_ranking(&spec, &classes)?;
    match search.ranking {
        Some(r) => println!("{}", ranking_line(&spec, &r)),
        None => println!("NONE (stuck after [{}])", prefix_names(&spec, &search.stuck_prefix)),
    }
    Ok(())
}

fn cost(arg: &NetArg, w: &str) -> Outcome {
    let spec = valid_network(arg)?;
    let w = input::rationals(w)?;
    check_len("--w", &w, spec.num_resources())?;
    let sol = lp_min_cost(&spec, &w)?;
    println!("cost: {}", format_rational(&sol.value));
    for (j, q) in sol.q.iter().enumerate() {
        println!("q[{}] = {}", spec.job_name(j), format_rational(q));
    }
    Ok(())
}

fn rates(arg: &NetArg, q: &str, e: Option<&str>, r: f64, policy: PolicyArgs) -> Outcome {
    let spec = valid_network(arg)?;
    let params = policy.params()?;
    let (policy, _) = policy_for(&spec, params)?;
    let r_exact: Rational = from_f64(r).ok_or_else(|| anyhow!("bad r {r}"))?;
    spec.scaled_params(&r_exact)?;
    let q = input::counts(q)?;
    check_len("--q", &q, spec.num_jobs())?;
    let mut state = ControlState::new(q, r, &params);
    if let Some(e) = e {
        let flags = input::flags(e)?;
        check_len("--e", &flags, spec.num_jobs())?;
        state.gated = flags;
    }
    let alloc = policy.rate_vector(&state);
    println!("sigma: {}", job_set(&spec, alloc.sigma));
    println!("varpi: {}", set_names(alloc.varpi, |i| spec.resource_names()[i].clone()));
    println!("{:<10} {:>6} {:>5} {:>24} {:>24}", "job", "q", "E", "y", "x");
    for j in 0..spec.num_jobs() {
        println!(
            "{:<10} {:>6} {:>5} {:>24} {:>24}",
            spec.job_name(j),
            state.q[j],
            u8::from(state.gated[j]),
            format_rational(&alloc.y[j]),
            format_rational(&alloc.x[j])
        );
    }
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs) -> Outcome {
    let spec = valid_network(&a.net)?;
    let (policy, _) = policy_for(&spec, a.policy.params()?)?;
    let mut config = SimConfig::new(a.r, a.horizon, a.theta);
    config.timing = a.timing;
    if let Some(q0) = &a.q0 {
        let q0 = input::counts(q0)?;
        check_len("--q0", &q0, spec.num_jobs())?;
        config.q0 = Some(q0);
    }
    if a.reps == 0 {
        return Err(anyhow!("--reps must be positive").into());
    }
    let report = simulate(&policy, None, config, a.reps, a.seed)?;
    write_runs_csv(output(a.out.as_ref())?, spec.num_resources(), &report.runs)?;
    eprintln!(
        "r = {}: J_E = {:.6} +- {:.6}, J_D = {:.6} +- {:.6}, {} events",
        a.r, report.j_e.mean, report.j_e.stderr, report.j_d.mean, report.j_d.stderr, report.events
    );
    Ok(())
}

fn hgi_cmd(a: &HgiArgs) -> Outcome {
    let spec = valid_network(&a.net)?;
    let classes = classify(&spec)?;
    let ranking = search_viable_ranking(&spec, &classes)?.ranking;
    let cost = WorkloadCost::new(&spec, &classes, ranking.as_ref());
    let w0 = match &a.w0 {
        Some(text) => input::floats(text)?,
        None => vec![0.0; spec.num_resources()],
    };
    check_len("--w0", &w0, spec.num_resources())?;
    if w0.iter().any(|v| !(*v >= 0.0)) {
        return Err(anyhow!("--w0 must be nonnegative").into());
    }
    let mut config = RbmConfig::new(w0, a.horizon, a.seed);
    config.dt = a.dt;
    config.burn_in = a.burn_in;
    let estimate = match a.mode {
        Mode::Ergodic => hgi_ergodic(&spec, &cost, &config, a.reps)?,
        Mode::Discounted => hgi_discounted(&spec, &cost, a.theta, &config, a.reps)?,
    };
    write_hgi_csv(output(a.out.as_ref())?, &estimate)?;
    eprintln!("estimate = {:.6} +- {:.6} (tail {:.3e})", estimate.mean(), estimate.stderr(), estimate.tail);
    Ok(())
}

fn sweep(a: &SweepArgs) -> Outcome {
    let spec = valid_network(&a.net)?;
    let mut config = SweepConfig::new(input::floats(&a.r)?, a.horizon, a.reps, a.seed);
    config.theta = a.theta;
    config.params = a.policy.params()?;
    config.timing = a.timing;
    config.track_gap = a.gap;
    config.q0_hat = a.q0.as_deref().map(input::floats).transpose()?;
    config.hgi = (!a.no_hgi).then_some(HgiSettings { dt: a.hgi_dt, horizon: a.hgi_horizon, reps: a.hgi_reps });
    let result = run_sweep(&spec, &config)?;
    let resources = spec.num_resources();
    write_sweep_csv(output(a.out.as_ref())?, resources, &result.rows(resources))?;
    if let Some(path) = &a.runs_out {
        let runs: Vec<_> = result.reports.iter().flat_map(|r| r.runs.iter().cloned()).collect();
        write_runs_csv(output(Some(path))?, resources, &runs)?;
    }
    if a.gap {
        for row in report_gap(&spec, &result.reports, &config.params, config.q0_hat.as_deref())? {
            eprintln!(
                "r = {}: holding {:.6}, workload cost {:.6}, gap {:.6} (bound {:.3e})",
                row.r, row.holding, row.workload_cost, row.gap, row.bound
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_workers()?;
    match &cli.command {
        Command::Validate(net) => validate(net),
        Command::Classify(net) => classify_cmd(net),
        Command::Rank { net, all } => rank(net, *all),
        Command::Cost { net, w } => cost(net, w),
        Command::Rates { net, q, e, r, policy } => rates(net, q, e.as_deref(), *r, *policy),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Hgi(a) => hgi_cmd(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
