//! Small reference networks used throughout the tests, benches and CLI.
//!
//! Jobs are named `x` followed by the (1-based) resources they use, so `x12`
//! needs resources 1 and 2. Every fixture has nominal load 1 per job,
//! capacities equal to the number of jobs at each resource and `beta* = 1`,
//! which makes it critically loaded with positive workload drift.

use crate::network::{JobDef, NetworkSpec};
use crate::scalar::{int, ratio, Rational};

/// Job definition from integer data; `resources` are 0-based indices.
pub fn job(name: &str, resources: &[usize], lambda: i64, mu: i64, h: i64, beta_star: i64) -> JobDef {
    JobDef {
        name: name.to_string(),
        resources: resources.to_vec(),
        lambda: int(lambda),
        mu: int(mu),
        holding_cost: int(h),
        beta_star: int(beta_star),
    }
}

fn unit_job(name: &str, resources: &[usize], h: Rational) -> JobDef {
    JobDef {
        name: name.to_string(),
        resources: resources.to_vec(),
        lambda: int(1),
        mu: int(1),
        holding_cost: h,
        beta_star: int(1),
    }
}

/// Critically loaded network with unit rates: capacities are derived from the jobs.
fn unit_network(num_resources: usize, jobs: Vec<JobDef>) -> NetworkSpec {
    let resources = (0..num_resources)
        .map(|i| {
            let load = jobs.iter().filter(|j| j.resources.contains(&i)).count() as i64;
            ((i + 1).to_string(), int(load))
        })
        .collect();
    NetworkSpec::new_validated(resources, jobs).expect("fixture is valid")
}

/// Three resources where every multi-resource job is primary.
pub fn net_a() -> NetworkSpec {
    unit_network(
        3,
        vec![
            unit_job("x1", &[0], int(1)),
            unit_job("x2", &[1], int(1)),
            unit_job("x3", &[2], int(1)),
            unit_job("x12", &[0, 1], int(4)),
            unit_job("x23", &[1, 2], int(4)),
            unit_job("x123", &[0, 1, 2], int(4)),
        ],
    )
}

/// Four resources, seven jobs, exactly one viable ranking `(x1234, x12, x23)`.
pub fn net_b() -> NetworkSpec {
    unit_network(
        4,
        vec![
            unit_job("x1", &[0], int(4)),
            unit_job("x2", &[1], int(4)),
            unit_job("x3", &[2], int(4)),
            unit_job("x4", &[3], int(4)),
            unit_job("x12", &[0, 1], int(6)),
            unit_job("x23", &[1, 2], int(7)),
            unit_job("x1234", &[0, 1, 2, 3], int(13)),
        ],
    )
}

/// [`net_b`] as a heavy-traffic instance: `rho = 1`, `C = (3, 4, 3, 2)`, `beta* = 1`.
pub fn net_b_heavy_traffic() -> NetworkSpec {
    net_b()
}

/// Three resources with no viable ranking.
pub fn net_c() -> NetworkSpec {
    unit_network(
        3,
        vec![
            unit_job("x1", &[0], int(5)),
            unit_job("x2", &[1], int(5)),
            unit_job("x3", &[2], int(5)),
            unit_job("x12", &[0, 1], int(7)),
            unit_job("x23", &[1, 2], int(8)),
            unit_job("x123", &[0, 1, 2], int(11)),
        ],
    )
}

/// Six resources with multi-resource jobs `x123`, `x456`, `x36`.
///
/// Costs are chosen so that all three are secondary and the optimal set of
/// the multi-resource jobs is `{x123, x456}`.
pub fn net_d() -> NetworkSpec {
    let mut jobs: Vec<JobDef> = (0..6)
        .map(|i| unit_job(&format!("x{}", i + 1), &[i], int(1)))
        .collect();
    jobs.push(unit_job("x123", &[0, 1, 2], int(2)));
    jobs.push(unit_job("x456", &[3, 4, 5], int(2)));
    jobs.push(unit_job("x36", &[2, 5], ratio(3, 2)));
    unit_network(6, jobs)
}

/// Two resources with one secondary two-resource job.
pub fn net_e() -> NetworkSpec {
    unit_network(
        2,
        vec![
            unit_job("x1", &[0], int(1)),
            unit_job("x2", &[1], int(1)),
            unit_job("x12", &[0, 1], int(2)),
        ],
    )
}

/// Single-server queue: `lambda = mu = 1`, `h = 1`, `beta* = 1`, `C = 1`.
pub fn mm1() -> NetworkSpec {
    unit_network(1, vec![unit_job("x1", &[0], int(1))])
}

/// Every named fixture, for table-driven tests.
pub fn all() -> Vec<(&'static str, NetworkSpec)> {
    vec![
        ("NET-A", net_a()),
        ("NET-B", net_b()),
        ("NET-C", net_c()),
        ("NET-D", net_d()),
        ("NET-E", net_e()),
        ("MM1", mm1()),
    ]
}

/// Looks a fixture up by name (case-insensitive, `NET-B-HT` accepted).
pub fn by_name(name: &str) -> Option<NetworkSpec> {
    let upper = name.to_ascii_uppercase();
    match upper.as_str() {
        "NET-A" => Some(net_a()),
        "NET-B" | "NET-B-HT" => Some(net_b()),
        "NET-C" => Some(net_c()),
        "NET-D" => Some(net_d()),
        "NET-E" => Some(net_e()),
        "MM1" | "M/M/1" => Some(mm1()),
        _ => None,
    }
}

/// Copy of `spec` without job `j` (capacities unchanged, so usually invalid).
pub fn without_job(spec: &NetworkSpec, j: usize) -> NetworkSpec {
    let jobs = job_defs(spec).into_iter().enumerate().filter(|(k, _)| *k != j).map(|(_, d)| d).collect();
    NetworkSpec::new(resource_defs(spec), jobs).expect("structurally valid")
}

/// Copy of `spec` with new holding costs.
pub fn with_holding_cost(spec: &NetworkSpec, h: Vec<Rational>) -> NetworkSpec {
    let jobs = job_defs(spec)
        .into_iter()
        .zip(h)
        .map(|(mut d, h)| {
            d.holding_cost = h;
            d
        })
        .collect();
    NetworkSpec::new(resource_defs(spec), jobs).expect("structurally valid")
}

pub fn resource_defs(spec: &NetworkSpec) -> Vec<(String, Rational)> {
    spec.resource_names().iter().cloned().zip(spec.capacity().iter().cloned()).collect()
}

pub fn job_defs(spec: &NetworkSpec) -> Vec<JobDef> {
    (0..spec.num_jobs())
        .map(|j| JobDef {
            name: spec.job_name(j).to_string(),
            resources: spec.resources_of(j).iter().collect(),
            lambda: spec.lambda()[j].clone(),
            mu: spec.mu()[j].clone(),
            holding_cost: spec.holding_cost()[j].clone(),
            beta_star: spec.beta_star()[j].clone(),
        })
        .collect()
}
