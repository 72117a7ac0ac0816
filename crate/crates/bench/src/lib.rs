//! Shared setup for the benchmarks.

use hgi_core::{classify, find_viable_ranking, NetworkSpec, Policy, PolicyParams, WorkloadCost};

/// Policy and ranked workload-cost evaluator with default parameters.
pub fn ranked_setup(spec: &NetworkSpec) -> (Policy, WorkloadCost) {
    let classes = classify(spec).expect("fixture classifies");
    let ranking = find_viable_ranking(spec, &classes).expect("search runs").expect("fixture is ranked");
    let policy = Policy::new(spec, &classes, &ranking, PolicyParams::default()).expect("default parameters");
    let cost = WorkloadCost::new(spec, &classes, Some(&ranking));
    (policy, cost)
}

/// Deterministic pseudo-random workloads in `[0, 4)`.
pub fn workloads(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0
                })
                .collect()
        })
        .collect()
}
