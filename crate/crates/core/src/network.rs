//! Static network instance: topology, rates, costs and the heavy-traffic family.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::bitset::{BitSet, MAX_ELEMENTS};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, to_f64, Rational};

/// A resource-sharing network with exact rational parameters.
///
/// Job `j` needs simultaneous service from every resource in `resources_of(j)`
/// (the support of column `j` of the incidence matrix).
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    resource_names: Vec<String>,
    job_names: Vec<String>,
    resources_of: Vec<BitSet>,
    capacity: Vec<Rational>,
    lambda: Vec<Rational>,
    mu: Vec<Rational>,
    holding_cost: Vec<Rational>,
    beta_star: Vec<Rational>,
}

/// One job type in [`NetworkSpec::new`].
#[derive(Clone, Debug)]
pub struct JobDef {
    pub name: String,
    pub resources: Vec<usize>,
    pub lambda: Rational,
    pub mu: Rational,
    pub holding_cost: Rational,
    pub beta_star: Rational,
}

impl NetworkSpec {
    /// Builds a spec after structural checks only; call [`validate`](Self::validate)
    /// for the modelling conditions.
    pub fn new(resources: Vec<(String, Rational)>, jobs: Vec<JobDef>) -> Result<Self> {
        if resources.is_empty() || jobs.is_empty() {
            return Err(Error::Structure("need at least one resource and one job".into()));
        }
        if resources.len() > MAX_ELEMENTS || jobs.len() > MAX_ELEMENTS {
            return Err(Error::Structure(format!(
                "at most {MAX_ELEMENTS} resources and {MAX_ELEMENTS} jobs are supported"
            )));
        }
        check_unique_names(resources.iter().map(|(n, _)| n.as_str()), "resource")?;
        check_unique_names(jobs.iter().map(|j| j.name.as_str()), "job")?;
        let num_resources = resources.len();
        let mut spec = NetworkSpec {
            resource_names: Vec::with_capacity(num_resources),
            job_names: Vec::with_capacity(jobs.len()),
            resources_of: Vec::with_capacity(jobs.len()),
            capacity: Vec::with_capacity(num_resources),
            lambda: Vec::with_capacity(jobs.len()),
            mu: Vec::with_capacity(jobs.len()),
            holding_cost: Vec::with_capacity(jobs.len()),
            beta_star: Vec::with_capacity(jobs.len()),
        };
        for (name, cap) in resources {
            spec.resource_names.push(name);
            spec.capacity.push(cap);
        }
        for job in jobs {
            let mut set = BitSet::EMPTY;
            for &i in &job.resources {
                if i >= num_resources {
                    return Err(Error::Structure(format!(
                        "job {} references resource index {i}, but only {num_resources} exist",
                        job.name
                    )));
                }
                set.insert(i);
            }
            spec.job_names.push(job.name);
            spec.resources_of.push(set);
            spec.lambda.push(job.lambda);
            spec.mu.push(job.mu);
            spec.holding_cost.push(job.holding_cost);
            spec.beta_star.push(job.beta_star);
        }
        Ok(spec)
    }

    /// Like [`new`](Self::new) but also rejects specs that fail validation.
    pub fn new_validated(resources: Vec<(String, Rational)>, jobs: Vec<JobDef>) -> Result<Self> {
        let spec = Self::new(resources, jobs)?;
        spec.ensure_valid()?;
        Ok(spec)
    }

    pub fn num_resources(&self) -> usize {
        self.resource_names.len()
    }

    pub fn num_jobs(&self) -> usize {
        self.job_names.len()
    }

    pub fn resource_names(&self) -> &[String] {
        &self.resource_names
    }

    pub fn job_names(&self) -> &[String] {
        &self.job_names
    }

    pub fn job_name(&self, j: usize) -> &str {
        &self.job_names[j]
    }

    pub fn job_index(&self, name: &str) -> Option<usize> {
        self.job_names.iter().position(|n| n == name)
    }

    pub fn resource_index(&self, name: &str) -> Option<usize> {
        self.resource_names.iter().position(|n| n == name)
    }

    /// `N_j`: resources used by job `j`.
    pub fn resources_of(&self, j: usize) -> BitSet {
        self.resources_of[j]
    }

    /// Jobs that use resource `i` (row `i` of the incidence matrix).
    pub fn jobs_at(&self, i: usize) -> BitSet {
        (0..self.num_jobs()).filter(|&j| self.resources_of[j].contains(i)).collect()
    }

    pub fn all_jobs(&self) -> BitSet {
        BitSet::full(self.num_jobs())
    }

    pub fn incidence(&self, i: usize, j: usize) -> bool {
        self.resources_of[j].contains(i)
    }

    /// Incidence matrix as 0/1 rows.
    pub fn incidence_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.num_resources())
            .map(|i| (0..self.num_jobs()).map(|j| self.incidence(i, j) as u8).collect())
            .collect()
    }

    pub fn capacity(&self) -> &[Rational] {
        &self.capacity
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn mu(&self) -> &[Rational] {
        &self.mu
    }

    pub fn holding_cost(&self) -> &[Rational] {
        &self.holding_cost
    }

    pub fn beta_star(&self) -> &[Rational] {
        &self.beta_star
    }

    /// Nominal loads `lambda_j / mu_j`.
    pub fn rho(&self) -> Vec<Rational> {
        self.lambda.iter().zip(&self.mu).map(|(l, m)| l / m).collect()
    }

    /// Drift of the limiting workload, `K beta*`.
    pub fn v_star(&self) -> Vec<Rational> {
        self.row_sums(&self.beta_star)
    }

    /// `K v` for a job-indexed vector `v`.
    pub fn row_sums(&self, v: &[Rational]) -> Vec<Rational> {
        (0..self.num_resources())
            .map(|i| {
                self.jobs_at(i).iter().fold(Rational::zero(), |acc, j| acc + &v[j])
            })
            .collect()
    }

    /// Workload matrix `G = K M`, with `M = diag(1/mu)`, stored row-major.
    pub fn workload_matrix(&self) -> Vec<Vec<Rational>> {
        workload_matrix(self, &self.mu)
    }

    /// Column `g_j` of `G`.
    pub fn workload_column(&self, j: usize) -> Vec<Rational> {
        let inv = self.mu[j].recip();
        (0..self.num_resources())
            .map(|i| if self.incidence(i, j) { inv.clone() } else { Rational::zero() })
            .collect()
    }

    /// Checks every modelling condition and lists the ones that fail.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let (ni, nj) = (self.num_resources(), self.num_jobs());

        for j in 0..nj {
            if self.resources_of[j].is_empty() {
                violations.push(Violation::EmptyColumn { job: self.job_names[j].clone() });
            }
            for k in j + 1..nj {
                if self.resources_of[j] == self.resources_of[k] {
                    violations.push(Violation::DuplicateColumns {
                        first: self.job_names[j].clone(),
                        second: self.job_names[k].clone(),
                    });
                }
            }
        }

        for i in 0..ni {
            let singles = (0..nj)
                .filter(|&j| self.resources_of[j] == BitSet::singleton(i))
                .count();
            if singles == 0 {
                violations.push(Violation::MissingLocalTraffic {
                    resource: self.resource_names[i].clone(),
                });
            }
        }

        let positive_fields: [(&str, &[Rational], &[String]); 4] = [
            ("capacity", &self.capacity, &self.resource_names),
            ("lambda", &self.lambda, &self.job_names),
            ("mu", &self.mu, &self.job_names),
            ("h", &self.holding_cost, &self.job_names),
        ];
        for (field, values, names) in positive_fields {
            for (value, name) in values.iter().zip(names) {
                if !value.is_positive() {
                    violations.push(Violation::NonPositive {
                        field: field.to_string(),
                        name: name.clone(),
                        value: format_rational(value),
                    });
                }
            }
        }

        // Loads are only meaningful with positive service rates.
        if self.mu.iter().all(|m| !m.is_zero()) {
            let load = self.row_sums(&self.rho());
            for i in 0..ni {
                if load[i] != self.capacity[i] {
                    violations.push(Violation::NotCriticallyLoaded {
                        resource: self.resource_names[i].clone(),
                        capacity: format_rational(&self.capacity[i]),
                        load: format_rational(&load[i]),
                    });
                }
            }
        }

        for (i, v) in self.v_star().iter().enumerate() {
            if !v.is_positive() {
                violations.push(Violation::NonPositiveDrift {
                    resource: self.resource_names[i].clone(),
                    value: format_rational(v),
                });
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(report))
        }
    }

    /// Heavy-traffic parameters at scale `r`: `mu^r = mu`,
    /// `lambda^r_j = mu_j (rho_j - beta*_j / r)`.
    pub fn scaled_params(&self, r: &Rational) -> Result<ScaledParams> {
        if !r.is_positive() {
            return Err(Error::Parameter(format!("r must be positive, got {}", format_rational(r))));
        }
        let rho = self.rho();
        let mut lambda_r = Vec::with_capacity(self.num_jobs());
        for j in 0..self.num_jobs() {
            let rate = &self.mu[j] * (&rho[j] - &self.beta_star[j] / r);
            if !rate.is_positive() {
                return Err(Error::ScaleTooSmall {
                    r: format_rational(r),
                    job: self.job_names[j].clone(),
                    rate: format_rational(&rate),
                });
            }
            lambda_r.push(rate);
        }
        let mu_r = self.mu.clone();
        let rho_r: Vec<Rational> = lambda_r.iter().zip(&mu_r).map(|(l, m)| l / m).collect();
        let g_r = workload_matrix(self, &mu_r);
        Ok(ScaledParams { r: r.clone(), lambda_r, mu_r, rho_r, g_r })
    }

    /// `N_j`, the single-resource jobs and the maps between them.
    pub fn topology(&self) -> Result<Topology> {
        let ni = self.num_resources();
        let mut single_job_at = vec![None; ni];
        let mut resource_of_single = vec![None; self.num_jobs()];
        let mut singles = BitSet::EMPTY;
        for j in 0..self.num_jobs() {
            let set = self.resources_of[j];
            if set.len() == 1 {
                let i = set.iter().next().unwrap_or(0);
                if single_job_at[i].is_some() {
                    return Err(Error::Structure(format!(
                        "resource {} has two single-resource jobs",
                        self.resource_names[i]
                    )));
                }
                single_job_at[i] = Some(j);
                resource_of_single[j] = Some(i);
                singles.insert(j);
            }
        }
        let single_job_at = single_job_at
            .into_iter()
            .enumerate()
            .map(|(i, j)| {
                j.ok_or_else(|| {
                    Error::Structure(format!(
                        "resource {} has no single-resource job",
                        self.resource_names[i]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Topology {
            resources_of: self.resources_of.clone(),
            singles,
            single_job_at,
            resource_of_single,
        })
    }
}

fn check_unique_names<'a>(names: impl Iterator<Item = &'a str>, kind: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(Error::Structure(format!("duplicate {kind} name {name:?}")));
        }
    }
    Ok(())
}

fn workload_matrix(spec: &NetworkSpec, mu: &[Rational]) -> Vec<Vec<Rational>> {
    (0..spec.num_resources())
        .map(|i| {
            (0..spec.num_jobs())
                .map(|j| if spec.incidence(i, j) { mu[j].recip() } else { Rational::zero() })
                .collect()
        })
        .collect()
}

/// A failed modelling condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyColumn { job: String },
    DuplicateColumns { first: String, second: String },
    MissingLocalTraffic { resource: String },
    NonPositive { field: String, name: String, value: String },
    NotCriticallyLoaded { resource: String, capacity: String, load: String },
    NonPositiveDrift { resource: String, value: String },
}

impl Violation {
    /// Short machine-readable name of the failed check.
    pub fn check(&self) -> &'static str {
        match self {
            Violation::EmptyColumn { .. } => "nonempty-columns",
            Violation::DuplicateColumns { .. } => "distinct-columns",
            Violation::MissingLocalTraffic { .. } => "local-traffic",
            Violation::NonPositive { .. } => "positivity",
            Violation::NotCriticallyLoaded { .. } => "critical-load",
            Violation::NonPositiveDrift { .. } => "positive-drift",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyColumn { job } => write!(f, "{}: job {job} uses no resource", self.check()),
            Violation::DuplicateColumns { first, second } => {
                write!(f, "{}: jobs {first} and {second} use the same resources", self.check())
            }
            Violation::MissingLocalTraffic { resource } => {
                write!(f, "{}: resource {resource} has no single-resource job", self.check())
            }
            Violation::NonPositive { field, name, value } => {
                write!(f, "{}: {field} of {name} is {value}", self.check())
            }
            Violation::NotCriticallyLoaded { resource, capacity, load } => write!(
                f,
                "{}: resource {resource} has capacity {capacity} but nominal load {load}",
                self.check()
            ),
            Violation::NonPositiveDrift { resource, value } => {
                write!(f, "{}: (K beta*) at resource {resource} is {value}", self.check())
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failed_checks(&self) -> Vec<&'static str> {
        let mut checks: Vec<_> = self.violations.iter().map(Violation::check).collect();
        checks.dedup();
        checks
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Arrival/service data of the network at scale `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledParams {
    pub r: Rational,
    pub lambda_r: Vec<Rational>,
    pub mu_r: Vec<Rational>,
    pub rho_r: Vec<Rational>,
    /// `G^r = K M^r`, row-major `I x J`.
    pub g_r: Vec<Vec<Rational>>,
}

impl ScaledParams {
    pub fn r_f64(&self) -> f64 {
        to_f64(&self.r)
    }
}

/// Which resources each job uses and how single-resource jobs map to resources.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub resources_of: Vec<BitSet>,
    /// Jobs that use exactly one resource.
    pub singles: BitSet,
    /// For each resource, its unique single-resource job.
    pub single_job_at: Vec<usize>,
    /// For each single-resource job, its resource.
    pub resource_of_single: Vec<Option<usize>>,
}
