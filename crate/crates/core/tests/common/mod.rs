//! Independent brute-force references used by the integration tests.
#![allow(dead_code)]

use hgi_core::bitset::BitSet;
use hgi_core::fixtures;
use hgi_core::network::{JobDef, NetworkSpec};
use hgi_core::scalar::{int, ratio, Rational};
use num_traits::{Signed, Zero};
use rand::Rng;

/// Solves the square system `a x = b` by Gauss-Jordan elimination; `None` if singular.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let sub = &f * &a[col][c];
                    a[r][c] = &a[r][c] - sub;
                }
                b[r] = &b[r] - &f * &b[col];
            }
        }
    }
    Some(b)
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in start..n {
            cur.push(s);
            rec(s + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Minimum of `h.q` over every basic feasible solution of `G q = w, q >= 0`,
/// together with all minimizing vertices.
pub fn vertex_min_cost(spec: &NetworkSpec, w: &[Rational]) -> (Rational, Vec<Vec<Rational>>) {
    let g = spec.workload_matrix();
    let (ni, nj) = (spec.num_resources(), spec.num_jobs());
    let mut best: Option<Rational> = None;
    let mut argmins: Vec<Vec<Rational>> = Vec::new();
    for basis in subsets_of_size(nj, ni) {
        let a: Vec<Vec<Rational>> = (0..ni).map(|i| basis.iter().map(|&j| g[i][j].clone()).collect()).collect();
        let Some(x) = solve_square(a, w.to_vec()) else { continue };
        if x.iter().any(Signed::is_negative) {
            continue;
        }
        let mut q = vec![int(0); nj];
        for (k, &j) in basis.iter().enumerate() {
            q[j] = x[k].clone();
        }
        let value = q.iter().zip(spec.holding_cost()).fold(int(0), |acc, (a, b)| acc + a * b);
        match &best {
            Some(b) if value > *b => {}
            Some(b) if value == *b => {
                if !argmins.contains(&q) {
                    argmins.push(q);
                }
            }
            _ => {
                best = Some(value);
                argmins = vec![q];
            }
        }
    }
    (best.expect("local traffic makes the LP feasible"), argmins)
}

pub fn column_union(spec: &NetworkSpec, jobs: BitSet) -> BitSet {
    jobs.iter().fold(BitSet::EMPTY, |acc, j| acc.union(spec.resources_of(j)))
}

/// Minimal covers by plain enumeration of every subset of `allowed \ {k}`.
pub fn brute_covers(spec: &NetworkSpec, allowed: BitSet, k: usize) -> Vec<BitSet> {
    let pool: Vec<usize> = allowed.without(k).iter().collect();
    let target = spec.resources_of(k);
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << pool.len()) {
        let set: BitSet = pool.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &j)| j).collect();
        if !target.is_subset(column_union(spec, set)) {
            continue;
        }
        if set.iter().all(|j| !target.is_subset(column_union(spec, set.without(j)))) {
            out.push(set);
        }
    }
    out.sort_by_key(|s| s.0);
    out
}

pub fn counts(spec: &NetworkSpec, jobs: BitSet) -> Vec<Rational> {
    let mut c = vec![int(0); spec.num_resources()];
    for j in jobs.iter() {
        for i in spec.resources_of(j).iter() {
            c[i] = &c[i] + int(1);
        }
    }
    c
}

pub fn singles(spec: &NetworkSpec) -> BitSet {
    (0..spec.num_jobs()).filter(|&j| spec.resources_of(j).len() == 1).collect()
}

/// `S^p` and `S^m` from the vertex oracle.
pub fn brute_classes(spec: &NetworkSpec) -> (BitSet, BitSet) {
    let s1 = singles(spec);
    let mut primary = BitSet::EMPTY;
    for j in 0..spec.num_jobs() {
        if s1.contains(j) {
            continue;
        }
        if vertex_min_cost(spec, &spec.workload_column(j)).0 < spec.holding_cost()[j] {
            primary.insert(j);
        }
    }
    (primary, spec.all_jobs().difference(primary).difference(s1))
}

/// `O_F^E` computed from the brute-force covers and the vertex oracle.
pub fn brute_opt(spec: &NetworkSpec, e: BitSet, f: BitSet) -> BitSet {
    let allowed = e.union(singles(spec));
    let mut out = BitSet::EMPTY;
    for j in e.iter() {
        let ok = brute_covers(spec, allowed, j)
            .into_iter()
            .filter(|&m| f.iter().all(|l| !spec.resources_of(l).is_subset(column_union(spec, m))))
            .all(|m| {
                let full = counts(spec, m);
                let mut reduced = full.clone();
                for i in spec.resources_of(j).iter() {
                    reduced[i] = &reduced[i] - int(1);
                }
                &spec.mu()[j] * &spec.holding_cost()[j] + vertex_min_cost(spec, &reduced).0
                    <= vertex_min_cost(spec, &full).0
            });
        if ok {
            out.insert(j);
        }
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (k, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Every viable ranking by checking each permutation of `S^m`, in lexicographic order.
pub fn brute_rankings(spec: &NetworkSpec) -> Vec<Vec<usize>> {
    let (_, multi) = brute_classes(spec);
    let items: Vec<usize> = multi.iter().collect();
    permutations(&items)
        .into_iter()
        .filter(|p| {
            let mut prefix = BitSet::EMPTY;
            p.iter().all(|&j| {
                let ok = brute_opt(spec, multi.difference(prefix), prefix).contains(j);
                prefix.insert(j);
                ok
            })
        })
        .collect()
}

/// The closed-form workload cost and minimizer of NET-C
/// (jobs ordered x1, x2, x3, x12, x23, x123).
pub fn net_c_closed_form(w: &[Rational]) -> (Rational, Vec<Rational>) {
    let (w1, w2, w3) = (&w[0], &w[1], &w[2]);
    let min = |a: &Rational, b: &Rational| if a < b { a.clone() } else { b.clone() };
    let max = |a: &Rational, b: &Rational| if a > b { a.clone() } else { b.clone() };
    let w12 = min(w1, w2);
    let w23 = min(w2, w3);
    let w123 = min(&w12, w3);
    if *w2 >= w1 + w3 {
        let value = int(5) * w2 + int(2) * w1 + int(3) * w3;
        (value, vec![int(0), w2 - w1 - w3, int(0), w1.clone(), w3.clone(), int(0)])
    } else if *w2 >= max(w1, w3) {
        let value = int(3) * w1 + int(4) * w2 + int(4) * w3;
        (value, vec![int(0), int(0), int(0), w2 - w3, w2 - w1, w1 + w3 - w2])
    } else {
        let value = int(5) * (w1 + w2 + w3) + &w123 - int(3) * &w12 - int(2) * &w23;
        (
            value,
            vec![
                w1 - &w12,
                w2 + &w123 - &w12 - &w23,
                w3 - &w23,
                &w12 - &w123,
                &w23 - &w123,
                w123.clone(),
            ],
        )
    }
}

/// Random rational in `[0, max]` with denominator at most `den`.
pub fn random_rational<R: Rng>(rng: &mut R, max: i64, den: i64) -> Rational {
    let d = rng.random_range(1..=den);
    ratio(rng.random_range(0..=max * d), d)
}

/// Fixtures that admit a viable ranking.
pub fn ranked_fixtures() -> Vec<(&'static str, NetworkSpec)> {
    fixtures::all().into_iter().filter(|(n, _)| *n != "NET-C").collect()
}

/// Random critically loaded network with local traffic, distinct columns,
/// integer-ish rates and costs, for property tests.
pub fn random_network<R: Rng>(rng: &mut R, max_resources: usize, max_multi: usize) -> NetworkSpec {
    let ni = rng.random_range(2..=max_resources);
    let mut columns: Vec<BitSet> = (0..ni).map(BitSet::singleton).collect();
    let extra = rng.random_range(1..=max_multi);
    for _ in 0..extra * 4 {
        if columns.len() >= ni + extra {
            break;
        }
        let mask = rng.random_range(1u64..(1u64 << ni));
        let set = BitSet(mask);
        if set.len() >= 2 && !columns.contains(&set) {
            columns.push(set);
        }
    }
    let jobs: Vec<JobDef> = columns
        .iter()
        .map(|set| {
            let name = format!("x{}", set.iter().map(|i| (i + 1).to_string()).collect::<String>());
            let mu = int(rng.random_range(1..=3));
            let rho = ratio(rng.random_range(1..=4), 2);
            let h = ratio(rng.random_range(1..=12 * set.len() as i64), 2);
            JobDef {
                name,
                resources: set.iter().collect(),
                lambda: &rho * &mu,
                mu,
                holding_cost: h,
                beta_star: int(1),
            }
        })
        .collect();
    let resources = (0..ni)
        .map(|i| {
            let load = jobs
                .iter()
                .filter(|j| j.resources.contains(&i))
                .fold(int(0), |acc, j| acc + &j.lambda / &j.mu);
            ((i + 1).to_string(), load)
        })
        .collect();
    NetworkSpec::new_validated(resources, jobs).expect("generated network is valid")
}

/// Lemma violations found in one control state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LemmaViolations {
    pub admissibility: Vec<String>,
    pub full_utilization: Vec<String>,
    pub gating: Vec<String>,
    pub positive_drift: Vec<String>,
    pub pull_down: Vec<String>,
}

impl LemmaViolations {
    pub fn is_empty(&self) -> bool {
        self.admissibility.is_empty()
            && self.full_utilization.is_empty()
            && self.gating.is_empty()
            && self.positive_drift.is_empty()
            && self.pull_down.is_empty()
    }

    pub fn absorb(&mut self, other: LemmaViolations) {
        self.admissibility.extend(other.admissibility);
        self.full_utilization.extend(other.full_utilization);
        self.gating.extend(other.gating);
        self.positive_drift.extend(other.positive_drift);
        self.pull_down.extend(other.pull_down);
    }
}

fn pow2(e: i32) -> Rational {
    let base = Rational::from_integer(num_bigint::BigInt::from(2).pow(e.unsigned_abs()));
    if e >= 0 {
        base
    } else {
        int(1) / base
    }
}

/// Checks the structural allocation lemmas for one state; drift and pull-down
/// inequalities only when `check_drift` (they need `r` beyond the lemma scale).
pub fn check_lemmas(
    policy: &hgi_core::policy::Policy,
    r: &Rational,
    state: &hgi_core::policy::ControlState,
    check_drift: bool,
) -> LemmaViolations {
    let scaled = policy.spec().scaled_params(r).expect("admissible scale");
    let alloc = policy.rate_vector(state);
    check_lemmas_with(policy, &scaled, &alloc, state, check_drift)
}

/// [`check_lemmas`] with the scaled parameters and allocation supplied.
pub fn check_lemmas_with(
    policy: &hgi_core::policy::Policy,
    scaled: &hgi_core::ScaledParams,
    alloc: &hgi_core::policy::Allocation,
    state: &hgi_core::policy::ControlState,
    check_drift: bool,
) -> LemmaViolations {
    let spec = policy.spec();
    let th = policy.params().thresholds(state.r);
    let mut v = LemmaViolations::default();
    let load = spec.row_sums(&alloc.x);
    for j in 0..spec.num_jobs() {
        if alloc.x[j] < int(0) {
            v.admissibility.push(format!("x[{j}] < 0"));
        }
        if state.gated[j] && !alloc.x[j].is_zero() {
            v.gating.push(format!("gated job {j} served"));
        }
    }
    for i in 0..spec.num_resources() {
        if load[i] > spec.capacity()[i] {
            v.admissibility.push(format!("resource {i} overloaded"));
        }
        let any_gated = spec.jobs_at(i).iter().any(|j| state.gated[j]);
        if alloc.varpi.contains(i) && !any_gated && load[i] != spec.capacity()[i] {
            v.full_utilization.push(format!("resource {i} not fully used"));
        }
    }
    if !check_drift {
        return v;
    }
    let m = policy.num_ranked() as i32;
    let jobs = int(spec.num_jobs() as i64);
    let delta = policy.delta().clone();
    for j in 0..spec.num_jobs() {
        let q = state.q[j] as f64;
        if q >= th.low && q < th.high {
            let drift = &scaled.lambda_r[j] - &scaled.mu_r[j] * &alloc.x[j];
            let bound = &spec.mu()[j] * pow2(-2 * m - 5) * &delta / &jobs;
            if drift < bound {
                v.positive_drift.push(format!("job {j}: drift {drift} < {bound}"));
            }
        }
    }
    let sigma = alloc.sigma;
    let excess = |set: BitSet| -> Rational {
        set.iter().fold(int(0), |acc, j| acc + &scaled.rho_r[j] - &alloc.x[j])
    };
    for (p, &job) in policy.ranking().order().iter().enumerate() {
        let covered = spec.resources_of(job).iter().all(|i| policy.zeta(p, i).intersects(sigma));
        if !covered {
            continue;
        }
        for i in spec.resources_of(job).iter() {
            let z = policy.zeta(p, i);
            if z.iter().any(|j| state.gated[j]) {
                continue;
            }
            if excess(z) > -(pow2(-m - 2) * &delta) {
                v.pull_down.push(format!("rank {} resource {i}", p + 1));
            }
        }
    }
    for i in 0..spec.num_resources() {
        let z = policy.zeta_primary(i);
        if !z.intersects(sigma) || z.iter().any(|j| state.gated[j]) {
            continue;
        }
        if excess(z) > -(&delta / int(4)) {
            v.pull_down.push(format!("primary set at resource {i}"));
        }
    }
    v
}

/// Random reachable control state: flags respect the hysteresis band.
pub fn random_state<R: Rng>(
    rng: &mut R,
    jobs: usize,
    r: f64,
    params: &hgi_core::policy::PolicyParams,
) -> hgi_core::policy::ControlState {
    let th = params.thresholds(r);
    let top = (th.high * 1.5).ceil() as u64 + 2;
    let mut q = Vec::with_capacity(jobs);
    let mut gated = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        // Bias towards the interesting region around the two thresholds.
        let v = match rng.random_range(0..4) {
            0 => 0,
            1 => rng.random_range(th.low.floor() as u64..=th.high.ceil() as u64),
            _ => rng.random_range(0..=top),
        };
        let g = if th.is_depleted(v) {
            true
        } else if th.is_stocked(v) {
            false
        } else {
            rng.random_bool(0.5)
        };
        q.push(v);
        gated.push(g);
    }
    hgi_core::policy::ControlState { q, gated, r }
}

/// Random step driver starting at zero.
pub fn random_driver<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(len);
    let mut v = 0.0;
    f.push(v);
    for _ in 1..len {
        v += rng.random_range(-1.0..1.0);
        f.push(v);
    }
    f
}

/// `psi(t) + max_{s <= t} max(-psi(s), 0)` evaluated directly for every `t`.
pub fn naive_reflection(psi: &[f64]) -> Vec<f64> {
    (0..psi.len())
        .map(|t| psi[t] + psi[..=t].iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max))
        .collect()
}

/// Failure flags of one random trial: explicit formula, Lipschitz bound, comparison sandwich.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SkorohodTrial {
    pub explicit: bool,
    pub lipschitz: bool,
    pub comparison: bool,
}

pub fn skorohod_trial<R: Rng>(rng: &mut R) -> SkorohodTrial {
    use hgi_core::diffusion::skorohod_1d;
    let len = rng.random_range(2..200);
    let f = random_driver(rng, len);
    let (phi1, eta1) = skorohod_1d(&f).unwrap();
    let tol = 1e-9;

    let explicit = naive_reflection(&f).iter().zip(&phi1).any(|(a, b)| (a - b).abs() > tol);

    let start = rng.random_range(0.0..2.0);
    let psi: Vec<f64> = f.iter().map(|v| v + start).collect();
    let other: Vec<f64> = psi.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
    let other0 = other[0].max(0.0);
    let other: Vec<f64> = std::iter::once(other0).chain(other[1..].iter().copied()).collect();
    let input_gap = psi.iter().zip(&other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (p1, _) = skorohod_1d(&psi).unwrap();
    let (p2, _) = skorohod_1d(&other).unwrap();
    let output_gap = p1.iter().zip(&p2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let lipschitz = output_gap > 2.0 * input_gap + tol;

    // phi2 = f + h2 with h2 pushing only while phi2 <= 0.
    let mut h2 = 0.0;
    let mut phi2 = Vec::with_capacity(len);
    for &v in &f {
        let tentative = v + h2;
        if tentative <= 0.0 && rng.random_bool(0.5) {
            h2 += rng.random_range(0.0..=-tentative);
        }
        phi2.push(v + h2);
    }
    // phi3 = f + eta1 + a nondecreasing extra, so phi3 >= phi1 >= 0.
    let mut extra = 0.0;
    let phi3: Vec<f64> = f
        .iter()
        .zip(&eta1)
        .enumerate()
        .map(|(t, (v, e))| {
            if t > 0 && rng.random_bool(0.3) {
                extra += rng.random_range(0.0..0.5);
            }
            v + e + extra
        })
        .collect();
    let comparison = (0..len).any(|t| phi2[t] > phi1[t] + tol || phi1[t] > phi3[t] + tol);

    SkorohodTrial { explicit, lipschitz, comparison }
}

/// Stationary law of a finite generator by dense elimination, one balance
/// equation replaced with normalization.
pub fn stationary(generator: &[Vec<f64>]) -> Vec<f64> {
    let n = generator.len();
    // Rows of the transposed system pi Q = 0.
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| generator[j][i]).collect()).collect();
    let mut b = vec![0.0; n];
    a[n - 1] = vec![1.0; n];
    b[n - 1] = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Stationary mean of `Q / r` for the controlled single-server queue, on the
/// chain of (queue length, gate flag) truncated at `cap`.
pub fn single_queue_mean(policy: &hgi_core::policy::Policy, r: f64, cap: usize) -> f64 {
    use hgi_core::policy::update_hysteresis;
    let spec = policy.spec();
    assert_eq!(spec.num_jobs(), 1);
    let th = policy.params().thresholds(r);
    let scaled = spec.scaled_params(&hgi_core::scalar::from_f64(r).unwrap()).unwrap();
    let lambda = hgi_core::scalar::to_f64(&scaled.lambda_r[0]);
    let mu = hgi_core::scalar::to_f64(&scaled.mu_r[0]);
    let index = |q: usize, gated: bool| 2 * q + usize::from(gated);
    let n = 2 * (cap + 1);
    let mut gen = vec![vec![0.0; n]; n];
    for q in 0..=cap {
        for gated in [false, true] {
            let from = index(q, gated);
            let sigma = if th.is_stocked(q as u64) { BitSet::singleton(0) } else { BitSet::EMPTY };
            let gates = if gated { BitSet::singleton(0) } else { BitSet::EMPTY };
            let service = mu * policy.rates_f64(sigma, gates)[0];
            let mut moves = Vec::new();
            if update_hysteresis(gated, q as u64, &th) != gated {
                // Unreachable flag: send it straight to the consistent one.
                let to = index(q, !gated);
                gen[from][to] += 1.0;
                gen[from][from] -= 1.0;
                continue;
            }
            if q < cap {
                moves.push((q + 1, lambda));
            }
            if q > 0 && service > 0.0 {
                moves.push((q - 1, service));
            }
            for (to_q, rate) in moves {
                let to = index(to_q, update_hysteresis(gated, to_q as u64, &th));
                gen[from][to] += rate;
                gen[from][from] -= rate;
            }
        }
    }
    let pi = stationary(&gen);
    (0..=cap).map(|q| (pi[index(q, false)] + pi[index(q, true)]) * q as f64).sum::<f64>() / r
}
