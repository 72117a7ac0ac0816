//! Workload cost `C(w) = min { h.q : G q = w, q >= 0 }`, its minimizers,
//! the primary/secondary split and the inefficiency bound.

use num_traits::Signed;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::network::{NetworkSpec, Topology};
use crate::ranking::Ranking;
use crate::scalar::{int, to_f64, Rational, Scalar};

/// Minimal holding cost for a workload together with a minimizing queue vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSolution<T> {
    pub value: T,
    pub q: Vec<T>,
}

/// Solves the workload LP directly (Bland vertex on ties).
pub fn lp_min_cost(spec: &NetworkSpec, w: &[Rational]) -> Result<CostSolution<Rational>> {
    lp_min_cost_in(spec, w)
}

/// Workload LP in either exact or floating-point arithmetic.
pub fn lp_min_cost_in<T: Scalar>(spec: &NetworkSpec, w: &[T]) -> Result<CostSolution<T>> {
    if w.len() != spec.num_resources() {
        return Err(Error::Structure(format!(
            "workload has length {}, network has {} resources",
            w.len(),
            spec.num_resources()
        )));
    }
    if w.iter().any(Scalar::is_negative) {
        return Err(Error::Parameter("workload must be nonnegative".into()));
    }
    let g: Vec<Vec<T>> = spec
        .workload_matrix()
        .iter()
        .map(|row| row.iter().map(T::from_rational).collect())
        .collect();
    let h: Vec<T> = spec.holding_cost().iter().map(T::from_rational).collect();
    match lp::solve(&g, w, &h) {
        LpOutcome::Optimal { x, value } => Ok(CostSolution { value, q: x }),
        LpOutcome::Infeasible => Err(Error::Infeasible(
            "no queue vector produces this workload; the network lacks local traffic".into(),
        )),
        LpOutcome::Unbounded => Err(Error::Infeasible("workload cost unbounded below".into())),
    }
}

/// Partition of jobs into primary / secondary, with the multi-resource secondaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobClassification {
    pub topology: Topology,
    /// Jobs with `C(g_j) < h_j`.
    pub primary: BitSet,
    pub secondary: BitSet,
    /// Secondary jobs that use more than one resource.
    pub multi: BitSet,
}

impl JobClassification {
    pub fn singles(&self) -> BitSet {
        self.topology.singles
    }
}

/// Classifies every job by comparing `C(g_j)` with `h_j` exactly.
pub fn classify(spec: &NetworkSpec) -> Result<JobClassification> {
    let topology = spec.topology()?;
    let mut primary = BitSet::EMPTY;
    for j in 0..spec.num_jobs() {
        if topology.singles.contains(j) {
            continue;
        }
        let cost = lp_min_cost(spec, &spec.workload_column(j))?;
        if cost.value < spec.holding_cost()[j] {
            primary.insert(j);
        }
    }
    let secondary = spec.all_jobs().difference(primary);
    let multi = secondary.difference(topology.singles);
    Ok(JobClassification { topology, primary, secondary, multi })
}

/// Greedy minimizer along a ranking: ranked jobs take as much residual workload
/// as all their resources allow, single-resource jobs absorb what is left.
fn greedy_minimizer<T: Scalar>(
    topology: &Topology,
    order: &[usize],
    mu: &[T],
    w: &[T],
) -> Vec<T> {
    let mut residual: Vec<T> = w.to_vec();
    let mut q = vec![T::zero(); mu.len()];
    for &j in order {
        let mut amount: Option<T> = None;
        for i in topology.resources_of[j].iter() {
            let r = &residual[i];
            amount = Some(match amount {
                Some(a) if a <= *r => a,
                _ => r.clone(),
            });
        }
        let amount = amount.unwrap_or_else(T::zero).clamp_nonnegative();
        for i in topology.resources_of[j].iter() {
            residual[i] = residual[i].clone() - amount.clone();
        }
        q[j] = amount * mu[j].clone();
    }
    for (i, &j) in topology.single_job_at.iter().enumerate() {
        q[j] = residual[i].clone().clamp_nonnegative() * mu[j].clone();
    }
    q
}

/// Minimizer `q*(w)` from a viable ranking, in exact arithmetic.
pub fn qstar(
    spec: &NetworkSpec,
    classes: &JobClassification,
    ranking: &Ranking,
    w: &[Rational],
) -> CostSolution<Rational> {
    qstar_in(spec, classes, ranking, w)
}

pub fn qstar_in<T: Scalar>(
    spec: &NetworkSpec,
    classes: &JobClassification,
    ranking: &Ranking,
    w: &[T],
) -> CostSolution<T> {
    assert_eq!(w.len(), spec.num_resources(), "workload length");
    let mu: Vec<T> = spec.mu().iter().map(T::from_rational).collect();
    let q = greedy_minimizer(&classes.topology, ranking.order(), &mu, w);
    let value = q
        .iter()
        .zip(spec.holding_cost())
        .fold(T::zero(), |acc, (qj, hj)| acc + qj.clone() * T::from_rational(hj));
    CostSolution { value, q }
}

/// `B = max h * max mu / min mu * J^2 * 2^J`.
pub fn inefficiency_constant(spec: &NetworkSpec) -> Rational {
    let max = |v: &[Rational]| v.iter().max().cloned().unwrap_or_else(|| int(0));
    let min = |v: &[Rational]| v.iter().min().cloned().unwrap_or_else(|| int(1));
    let jobs = spec.num_jobs() as i64;
    max(spec.holding_cost()) * max(spec.mu()) / min(spec.mu())
        * int(jobs * jobs)
        * Rational::from_integer(num_bigint::BigInt::from(2).pow(jobs as u32))
}

/// The two sides of the inefficiency inequality for a queue vector.
#[derive(Clone, Debug, PartialEq)]
pub struct InefficiencyGap {
    /// `|h.q - C(G q)|`
    pub lhs: Rational,
    /// `B * (sum_k min_{i in N_rho(k)} sum_{zeta_i^k} q + sum_i sum_{zeta_i^0} q)`
    pub rhs: Rational,
    pub constant: Rational,
}

impl InefficiencyGap {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Positional part of the inefficiency bound (without the constant `B`).
pub fn inefficiency_bound_term<T: Scalar>(
    spec: &NetworkSpec,
    classes: &JobClassification,
    ranking: &Ranking,
    q: &[T],
) -> T {
    let sum_over = |set: BitSet| set.iter().fold(T::zero(), |acc, j| acc + q[j].clone());
    let mut total = T::zero();
    for k in 0..ranking.len() {
        let job = ranking.order()[k];
        let smallest = spec
            .resources_of(job)
            .iter()
            .map(|i| sum_over(ranking.zeta(spec, k, i)))
            .reduce(|a, b| if b < a { b } else { a })
            .unwrap_or_else(T::zero);
        total = total + smallest;
    }
    for i in 0..spec.num_resources() {
        total = total + sum_over(spec.jobs_at(i).intersection(classes.primary));
    }
    total
}

pub fn inefficiency_gap(
    spec: &NetworkSpec,
    classes: &JobClassification,
    ranking: &Ranking,
    q: &[Rational],
) -> Result<InefficiencyGap> {
    if q.len() != spec.num_jobs() || q.iter().any(Signed::is_negative) {
        return Err(Error::Parameter("queue vector must be nonnegative with one entry per job".into()));
    }
    let w = apply_workload_matrix(spec, q);
    let cost = lp_min_cost(spec, &w)?;
    let holding = dot(spec.holding_cost(), q);
    let lhs = (holding - cost.value).abs();
    let constant = inefficiency_constant(spec);
    let rhs = &constant * inefficiency_bound_term(spec, classes, ranking, q);
    Ok(InefficiencyGap { lhs, rhs, constant })
}

/// `G q` in exact arithmetic.
pub fn apply_workload_matrix(spec: &NetworkSpec, q: &[Rational]) -> Vec<Rational> {
    (0..spec.num_resources())
        .map(|i| {
            spec.jobs_at(i).iter().fold(int(0), |acc, j| acc + &q[j] / &spec.mu()[j])
        })
        .collect()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(int(0), |acc, (x, y)| acc + x * y)
}

/// Floating-point evaluator of `C(w)` for simulation-time use.
///
/// With a viable ranking the greedy minimizer is used; otherwise each call
/// solves the LP in `f64`.
#[derive(Clone, Debug)]
pub struct WorkloadCost {
    spec: NetworkSpec,
    topology: Topology,
    order: Option<Vec<usize>>,
    mu: Vec<f64>,
    h: Vec<f64>,
}

impl WorkloadCost {
    pub fn new(spec: &NetworkSpec, classes: &JobClassification, ranking: Option<&Ranking>) -> Self {
        WorkloadCost {
            spec: spec.clone(),
            topology: classes.topology.clone(),
            order: ranking.map(|r| r.order().to_vec()),
            mu: spec.mu().iter().map(to_f64).collect(),
            h: spec.holding_cost().iter().map(to_f64).collect(),
        }
    }

    /// Evaluator that always solves the LP.
    pub fn lp_only(spec: &NetworkSpec) -> Result<Self> {
        let classes = classify(spec)?;
        Ok(Self::new(spec, &classes, None))
    }

    pub fn uses_ranking(&self) -> bool {
        self.order.is_some()
    }

    pub fn minimizer(&self, w: &[f64]) -> Vec<f64> {
        match &self.order {
            Some(order) => greedy_minimizer(&self.topology, order, &self.mu, w),
            None => {
                let clamped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
                lp_min_cost_in(&self.spec, &clamped)
                    .map(|s| s.q)
                    .expect("local traffic makes every workload feasible")
            }
        }
    }

    pub fn cost(&self, w: &[f64]) -> f64 {
        self.minimizer(w).iter().zip(&self.h).map(|(q, h)| q * h).sum()
    }
}
