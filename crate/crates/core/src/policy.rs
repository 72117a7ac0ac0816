//! Threshold work-allocation policy with hysteresis gating.

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::ranking::Ranking;
use crate::scalar::{int, to_f64, Rational};
use crate::workload::JobClassification;

/// Threshold exponent and the two threshold multipliers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyParams {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams { alpha: 0.4, c1: 1.0, c2: 2.0 }
    }
}

impl PolicyParams {
    pub fn new(alpha: f64, c1: f64, c2: f64) -> Result<Self> {
        let params = PolicyParams { alpha, c1, c2 };
        params.check()?;
        Ok(params)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1/2), got {}", self.alpha)));
        }
        if !(self.c1 > 0.0 && self.c1 < self.c2 && self.c2.is_finite()) {
            return Err(Error::Parameter(format!(
                "thresholds need 0 < c1 < c2, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    pub fn thresholds(&self, r: f64) -> Thresholds {
        let scale = r.powf(self.alpha);
        Thresholds { low: self.c1 * scale, high: self.c2 * scale }
    }
}

/// `c1 r^alpha` and `c2 r^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Thresholds {
    pub fn is_stocked(&self, q: u64) -> bool {
        q as f64 >= self.high
    }

    pub fn is_depleted(&self, q: u64) -> bool {
        (q as f64) < self.low
    }
}

/// `delta = min_j rho_j / (2J)`.
pub fn delta(spec: &NetworkSpec) -> Rational {
    let min = spec.rho().into_iter().min().unwrap_or_else(|| int(0));
    min / int(2 * spec.num_jobs() as i64)
}

/// Smallest `r` at which the drift lemmas apply under the default embedding:
/// `|rho_j - rho^r_j| <= 2^(-2m-6) delta / J` and `lambda^r_j >= lambda_j / 2`.
pub fn lemma_scale(spec: &NetworkSpec, ranked: usize) -> Rational {
    let slack = delta(spec)
        / (int(spec.num_jobs() as i64)
            * Rational::from_integer(num_bigint::BigInt::from(2).pow(2 * ranked as u32 + 6)));
    let rho = spec.rho();
    spec.beta_star()
        .iter()
        .zip(&rho)
        .map(|(b, p)| {
            let a = b / &slack;
            let c = int(2) * b / p;
            if a > c {
                a
            } else {
                c
            }
        })
        .max()
        .unwrap_or_else(|| int(1))
}

/// Hysteresis update of one flag: set below `c1 r^alpha`, cleared at `c2 r^alpha`.
pub fn update_hysteresis(gated: bool, q: u64, th: &Thresholds) -> bool {
    if gated {
        !th.is_stocked(q)
    } else {
        th.is_depleted(q)
    }
}

/// Flags at time zero: a job starts gated iff it starts below `c1 r^alpha`.
pub fn initial_flags(q: &[u64], th: &Thresholds) -> Vec<bool> {
    q.iter().map(|&v| th.is_depleted(v)).collect()
}

/// Queue lengths, hysteresis flags and the scale `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlState {
    pub q: Vec<u64>,
    pub gated: Vec<bool>,
    pub r: f64,
}

impl ControlState {
    /// State with flags initialized from the queue lengths.
    pub fn new(q: Vec<u64>, r: f64, params: &PolicyParams) -> Self {
        let gated = initial_flags(&q, &params.thresholds(r));
        ControlState { q, gated, r }
    }

    pub fn gated_set(&self) -> BitSet {
        self.gated.iter().enumerate().filter(|(_, &g)| g).map(|(j, _)| j).collect()
    }
}

/// Stocked jobs `sigma` and the resources `varpi` they use.
pub fn stocked_sets(spec: &NetworkSpec, state: &ControlState, params: &PolicyParams) -> (BitSet, BitSet) {
    let th = params.thresholds(state.r);
    let sigma: BitSet =
        state.q.iter().enumerate().filter(|(_, &q)| th.is_stocked(q)).map(|(j, _)| j).collect();
    (sigma, resources_of_jobs(spec, sigma))
}

fn resources_of_jobs(spec: &NetworkSpec, jobs: BitSet) -> BitSet {
    jobs.iter().fold(BitSet::EMPTY, |acc, j| acc.union(spec.resources_of(j)))
}

/// Nominal rates `y` and gated rates `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub y: Vec<Rational>,
    pub x: Vec<Rational>,
    pub sigma: BitSet,
    pub varpi: BitSet,
}

/// Policy bound to one network and ranking.
#[derive(Clone, Debug)]
pub struct Policy {
    spec: NetworkSpec,
    primary: BitSet,
    ranking: Ranking,
    single_job_at: Vec<usize>,
    resource_of_single: Vec<Option<usize>>,
    rho: Vec<Rational>,
    delta: Rational,
    params: PolicyParams,
    // zeta[p][i]: jobs at resource i that are not ranked at or before position p.
    zeta: Vec<Vec<BitSet>>,
}

impl Policy {
    pub fn new(
        spec: &NetworkSpec,
        classes: &JobClassification,
        ranking: &Ranking,
        params: PolicyParams,
    ) -> Result<Self> {
        params.check()?;
        let zeta = (0..ranking.len())
            .map(|p| (0..spec.num_resources()).map(|i| ranking.zeta(spec, p, i)).collect())
            .collect();
        Ok(Policy {
            spec: spec.clone(),
            primary: classes.primary,
            ranking: ranking.clone(),
            single_job_at: classes.topology.single_job_at.clone(),
            resource_of_single: classes.topology.resource_of_single.clone(),
            rho: spec.rho(),
            delta: delta(spec),
            params,
            zeta,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn ranking(&self) -> &Ranking {
        &self.ranking
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn num_ranked(&self) -> usize {
        self.ranking.len()
    }

    pub fn stocked_sets(&self, state: &ControlState) -> (BitSet, BitSet) {
        stocked_sets(&self.spec, state, &self.params)
    }

    /// `zeta_i^k` for 0-based ranking position `p` (so `k = p + 1`).
    pub fn zeta(&self, p: usize, i: usize) -> BitSet {
        self.zeta[p][i]
    }

    /// `zeta_i^0`: primary jobs at resource `i`.
    pub fn zeta_primary(&self, i: usize) -> BitSet {
        self.spec.jobs_at(i).intersection(self.primary)
    }

    /// Nominal rates for stocked set `sigma`, then gating by `gated`.
    pub fn allocate(&self, sigma: BitSet, gated: BitSet) -> Allocation {
        let jobs = self.spec.num_jobs();
        let m = self.ranking.len() as i32;
        let varpi = resources_of_jobs(&self.spec, sigma);
        let pow2 = |e: i32| -> Rational {
            let base = Rational::from_integer(num_bigint::BigInt::from(2).pow(e.unsigned_abs()));
            if e >= 0 {
                base
            } else {
                int(1) / base
            }
        };
        let mut y = vec![int(0); jobs];

        let primary_shortfall = &self.delta / (int(jobs as i64) * pow2(m + 3));
        for j in self.primary.iter() {
            y[j] = if sigma.contains(j) {
                &self.rho[j] + &self.delta
            } else {
                &self.rho[j] - &primary_shortfall
            };
        }

        for (p, &j) in self.ranking.order().iter().enumerate() {
            let k = p as i32 + 1;
            let covered = self.spec.resources_of(j).iter().all(|i| self.zeta[p][i].intersects(sigma));
            y[j] = if covered {
                &self.rho[j] - pow2(k - m - 2) * &self.delta
            } else if sigma.contains(j) {
                &self.rho[j] + pow2(k - m - 2) * &self.delta
            } else {
                &self.rho[j] - pow2(-k - m - 2) * &self.delta
            };
        }

        for (i, &j) in self.single_job_at.iter().enumerate() {
            debug_assert_eq!(self.resource_of_single[j], Some(i));
            y[j] = if varpi.contains(i) {
                self.spec
                    .jobs_at(i)
                    .without(j)
                    .iter()
                    .fold(self.spec.capacity()[i].clone(), |acc, l| acc - &y[l])
            } else {
                &self.rho[j] - &self.delta
            };
        }

        let x = y
            .iter()
            .enumerate()
            .map(|(j, v)| if gated.contains(j) { int(0) } else { v.clone() })
            .collect();
        Allocation { y, x, sigma, varpi }
    }

    pub fn rate_vector(&self, state: &ControlState) -> Allocation {
        let (sigma, _) = self.stocked_sets(state);
        self.allocate(sigma, state.gated_set())
    }

    /// Gated rates as `f64`.
    pub fn rates_f64(&self, sigma: BitSet, gated: BitSet) -> Vec<f64> {
        self.allocate(sigma, gated).x.iter().map(to_f64).collect()
    }
}

/// One-shot form of [`Policy::rate_vector`].
pub fn rate_vector(
    spec: &NetworkSpec,
    ranking: &Ranking,
    classes: &JobClassification,
    state: &ControlState,
    params: &PolicyParams,
) -> Result<Allocation> {
    Ok(Policy::new(spec, classes, ranking, *params)?.rate_vector(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use num_traits::Zero;
    use crate::ranking::find_viable_ranking;
    use crate::scalar::ratio;
    use crate::workload::classify;

    fn net_b_policy(params: PolicyParams) -> Policy {
        let spec = fixtures::net_b_heavy_traffic();
        let cls = classify(&spec).unwrap();
        let ranking = find_viable_ranking(&spec, &cls).unwrap().unwrap();
        Policy::new(&spec, &cls, &ranking, params).unwrap()
    }

    #[test]
    fn params_are_validated() {
        assert!(PolicyParams::new(0.5, 1.0, 2.0).is_err());
        assert!(PolicyParams::new(0.0, 1.0, 2.0).is_err());
        assert!(PolicyParams::new(0.3, 2.0, 2.0).is_err());
        assert!(PolicyParams::new(0.3, 0.0, 2.0).is_err());
        assert!(PolicyParams::new(0.3, 1.0, 2.0).is_ok());
    }

    #[test]
    fn stocked_sets_examples() {
        let spec = fixtures::net_b();
        let params = PolicyParams::new(0.25, 1.0, 2.0).unwrap();
        let empty = ControlState::new(vec![0; 7], 16.0, &params);
        assert_eq!(stocked_sets(&spec, &empty, &params), (BitSet::EMPTY, BitSet::EMPTY));

        let mut q = vec![0; 7];
        q[0] = 5;
        let state = ControlState::new(q, 16.0, &params);
        assert_eq!(stocked_sets(&spec, &state, &params), (BitSet::singleton(0), BitSet::singleton(0)));

        let full = ControlState::new(vec![4; 7], 16.0, &params);
        assert_eq!(stocked_sets(&spec, &full, &params), (BitSet::full(7), BitSet::full(4)));
    }

    #[test]
    fn hysteresis_rules() {
        let th = Thresholds { low: 4.0, high: 8.0 };
        assert!(update_hysteresis(false, 3, &th));
        assert!(!update_hysteresis(false, 4, &th));
        assert!(!update_hysteresis(true, 8, &th));
        assert!(update_hysteresis(true, 7, &th));
        assert!(!update_hysteresis(false, 6, &th));
        assert!(update_hysteresis(true, 5, &th));
        assert_eq!(initial_flags(&[0, 4, 9], &th), vec![true, false, false]);
    }

    #[test]
    fn delta_of_net_b() {
        assert_eq!(delta(&fixtures::net_b()), ratio(1, 14));
        assert_eq!(lemma_scale(&fixtures::net_b(), 3), int(401_408));
        assert_eq!(lemma_scale(&fixtures::mm1(), 0), int(128));
    }

    #[test]
    fn all_gated_means_no_service() {
        let policy = net_b_policy(PolicyParams::default());
        let alloc = policy.allocate(BitSet::full(7), BitSet::full(7));
        assert!(alloc.x.iter().all(Zero::is_zero));
    }

    #[test]
    fn everything_stocked() {
        let policy = net_b_policy(PolicyParams::default());
        let spec = policy.spec().clone();
        let d = ratio(1, 14);
        let alloc = policy.allocate(BitSet::full(7), BitSet::EMPTY);
        let at = |n: &str| alloc.x[spec.job_index(n).unwrap()].clone();
        assert_eq!(at("x1234"), int(1) - &d / int(16));
        assert_eq!(at("x12"), int(1) - &d / int(8));
        assert_eq!(at("x23"), int(1) - &d / int(4));
        assert_eq!(at("x1"), int(1) + int(3) * &d / int(16));
        let load = spec.row_sums(&alloc.x);
        assert_eq!(load, spec.capacity().to_vec());
    }

    #[test]
    fn only_x1_stocked() {
        let policy = net_b_policy(PolicyParams::default());
        let spec = policy.spec().clone();
        let x1 = spec.job_index("x1").unwrap();
        let d = ratio(1, 14);
        let alloc = policy.allocate(BitSet::singleton(x1), BitSet::full(7).without(x1));
        assert_eq!(alloc.y[spec.job_index("x1234").unwrap()], int(1) - &d / int(64));
        assert_eq!(alloc.y[spec.job_index("x12").unwrap()], int(1) - &d / int(128));
        for j in 0..7 {
            if j == x1 {
                assert_eq!(alloc.x[j], int(1) + int(3) * &d / int(128));
            } else {
                assert!(alloc.x[j].is_zero());
            }
        }
    }
}
