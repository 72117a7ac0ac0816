//! Minimal covering sets, optimal-job sets and viable rankings of the
//! multi-resource secondary jobs.

use std::collections::HashMap;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::scalar::{int, Rational};
use crate::workload::{lp_min_cost, JobClassification};

fn union_of_resources(spec: &NetworkSpec, jobs: BitSet) -> BitSet {
    jobs.iter().fold(BitSet::EMPTY, |acc, j| acc.union(spec.resources_of(j)))
}

/// All minimal subsets of `allowed \ {k}` whose resources cover `N_k`.
///
/// Sets come out in increasing order of their bitmask.
pub fn minimal_covers(spec: &NetworkSpec, allowed: BitSet, k: usize) -> Vec<BitSet> {
    let target = spec.resources_of(k);
    // A job that misses N_k can never be part of a minimal cover.
    let candidates: Vec<usize> = allowed
        .without(k)
        .iter()
        .filter(|&j| spec.resources_of(j).intersects(target))
        .collect();
    let mut found = Vec::new();
    extend_cover(spec, target, &candidates, 0, BitSet::EMPTY, BitSet::EMPTY, &mut found);
    found.sort_by_key(|s| s.0);
    found
}

fn extend_cover(
    spec: &NetworkSpec,
    target: BitSet,
    candidates: &[usize],
    next: usize,
    chosen: BitSet,
    covered: BitSet,
    found: &mut Vec<BitSet>,
) {
    if target.is_subset(covered) {
        let minimal = chosen
            .iter()
            .all(|j| !target.is_subset(union_of_resources(spec, chosen.without(j))));
        if minimal {
            found.push(chosen);
        }
        return;
    }
    for (pos, &j) in candidates.iter().enumerate().skip(next) {
        let adds = spec.resources_of(j).intersection(target).difference(covered);
        if adds.is_empty() {
            continue;
        }
        extend_cover(
            spec,
            target,
            candidates,
            pos + 1,
            chosen.with(j),
            covered.union(spec.resources_of(j)),
            found,
        );
    }
}

/// Minimal covers whose resource union contains no `N_l` for `l` in `excluded`.
pub fn minimal_covers_excluding(
    spec: &NetworkSpec,
    allowed: BitSet,
    excluded: BitSet,
    k: usize,
) -> Vec<BitSet> {
    minimal_covers(spec, allowed, k)
        .into_iter()
        .filter(|&m| {
            let covered = union_of_resources(spec, m);
            excluded.iter().all(|l| !spec.resources_of(l).is_subset(covered))
        })
        .collect()
}

/// Memoized `C` over integer resource-count vectors.
#[derive(Default)]
struct CountCost {
    memo: HashMap<Vec<i64>, Rational>,
}

impl CountCost {
    fn cost(&mut self, spec: &NetworkSpec, counts: Vec<i64>) -> Result<Rational> {
        if let Some(v) = self.memo.get(&counts) {
            return Ok(v.clone());
        }
        let w: Vec<Rational> = counts.iter().map(|&c| int(c)).collect();
        let value = lp_min_cost(spec, &w)?.value;
        self.memo.insert(counts, value.clone());
        Ok(value)
    }
}

fn resource_counts(spec: &NetworkSpec, jobs: BitSet) -> Vec<i64> {
    let mut counts = vec![0i64; spec.num_resources()];
    for j in jobs.iter() {
        for i in spec.resources_of(j).iter() {
            counts[i] += 1;
        }
    }
    counts
}

/// Checks `mu_j h_j + C(sum K_M - K_j) <= C(sum K_M)` for every cover `M`.
fn dominates_covers(
    spec: &NetworkSpec,
    lp: &mut CountCost,
    j: usize,
    covers: &[BitSet],
) -> Result<bool> {
    let own = &spec.mu()[j] * &spec.holding_cost()[j];
    for &m in covers {
        let full = resource_counts(spec, m);
        let mut reduced = full.clone();
        for i in spec.resources_of(j).iter() {
            reduced[i] -= 1;
        }
        if &own + lp.cost(spec, reduced)? > lp.cost(spec, full)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Context shared by the ranking computations for one network.
struct Searcher<'a> {
    spec: &'a NetworkSpec,
    classes: &'a JobClassification,
    lp: CountCost,
    opt_memo: HashMap<u64, BitSet>,
}

impl<'a> Searcher<'a> {
    fn new(spec: &'a NetworkSpec, classes: &'a JobClassification) -> Self {
        Searcher { spec, classes, lp: CountCost::default(), opt_memo: HashMap::new() }
    }

    fn opt(&mut self, candidates: BitSet, excluded: BitSet) -> Result<BitSet> {
        let allowed = candidates.union(self.classes.singles());
        let mut out = BitSet::EMPTY;
        for j in candidates.iter() {
            let covers = minimal_covers_excluding(self.spec, allowed, excluded, j);
            if dominates_covers(self.spec, &mut self.lp, j, &covers)? {
                out.insert(j);
            }
        }
        Ok(out)
    }

    /// `O_{F}^{S^m \ F}` for a ranked prefix `F`.
    fn opt_after(&mut self, prefix: BitSet) -> Result<BitSet> {
        if let Some(&v) = self.opt_memo.get(&prefix.0) {
            return Ok(v);
        }
        let v = self.opt(self.classes.multi.difference(prefix), prefix)?;
        self.opt_memo.insert(prefix.0, v);
        Ok(v)
    }

    fn search(
        &mut self,
        prefix: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
        stuck: &mut Option<Vec<usize>>,
    ) -> Result<bool> {
        if prefix.len() == self.classes.multi.len() {
            return Ok(visit(prefix));
        }
        let set: BitSet = prefix.iter().copied().collect();
        let options = self.opt_after(set)?;
        if options.is_empty() && stuck.is_none() {
            *stuck = Some(prefix.clone());
        }
        for j in options.iter() {
            prefix.push(j);
            let stop = self.search(prefix, visit, stuck)?;
            prefix.pop();
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// `O_F^E`: jobs of `E` that dominate each of their minimal covers drawn from
/// `E` plus the single-resource jobs, ignoring covers that contain some `N_l`,
/// `l` in `F`. With `F` empty this is `O^E`.
pub fn opt_jobs(
    spec: &NetworkSpec,
    classes: &JobClassification,
    candidates: BitSet,
    excluded: BitSet,
) -> Result<BitSet> {
    Searcher::new(spec, classes).opt(candidates, excluded)
}

/// An ordering `rho(1..m)` of the multi-resource secondary jobs that has
/// passed the viability check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    order: Vec<usize>,
}

impl Ranking {
    /// Verifies viability from scratch before accepting `order`.
    pub fn new_viable(
        spec: &NetworkSpec,
        classes: &JobClassification,
        order: Vec<usize>,
    ) -> Result<Self> {
        let as_set: BitSet = order.iter().copied().collect();
        if order.len() != classes.multi.len() || as_set != classes.multi {
            return Err(Error::Structure(
                "a ranking must list every multi-resource secondary job exactly once".into(),
            ));
        }
        let mut prefix = BitSet::EMPTY;
        for (position, &j) in order.iter().enumerate() {
            let options = opt_jobs(spec, classes, classes.multi.difference(prefix), prefix)?;
            if !options.contains(j) {
                return Err(Error::RankingNotViable {
                    position: position + 1,
                    job: spec.job_name(j).to_string(),
                });
            }
            prefix.insert(j);
        }
        Ok(Ranking { order })
    }

    /// Builds a ranking from job names, checking viability.
    pub fn from_names(
        spec: &NetworkSpec,
        classes: &JobClassification,
        names: &[&str],
    ) -> Result<Self> {
        let order = names
            .iter()
            .map(|n| spec.job_index(n).ok_or_else(|| Error::Structure(format!("unknown job {n:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new_viable(spec, classes, order)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `F` for 0-based position `p`: the jobs ranked before it.
    pub fn prefix(&self, p: usize) -> BitSet {
        self.order[..p].iter().copied().collect()
    }

    /// `zeta_i` for 0-based position `p`: jobs at resource `i` not ranked at or before `p`.
    pub fn zeta(&self, spec: &NetworkSpec, p: usize, i: usize) -> BitSet {
        spec.jobs_at(i).difference(self.prefix(p + 1))
    }

    pub fn names<'a>(&self, spec: &'a NetworkSpec) -> Vec<&'a str> {
        self.order.iter().map(|&j| spec.job_name(j)).collect()
    }
}

/// Outcome of the depth-first ranking search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankingSearch {
    pub ranking: Option<Ranking>,
    /// First prefix (in search order) with no admissible continuation.
    pub stuck_prefix: Option<Vec<usize>>,
}

/// Depth-first search in lexicographic job order; returns the first viable ranking.
pub fn search_viable_ranking(
    spec: &NetworkSpec,
    classes: &JobClassification,
) -> Result<RankingSearch> {
    let mut searcher = Searcher::new(spec, classes);
    let mut found = None;
    let mut stuck = None;
    searcher.search(
        &mut Vec::new(),
        &mut |order| {
            found = Some(order.to_vec());
            true
        },
        &mut stuck,
    )?;
    Ok(RankingSearch { ranking: found.map(|order| Ranking { order }), stuck_prefix: stuck })
}

pub fn find_viable_ranking(
    spec: &NetworkSpec,
    classes: &JobClassification,
) -> Result<Option<Ranking>> {
    Ok(search_viable_ranking(spec, classes)?.ranking)
}

/// Like [`find_viable_ranking`] but reports a missing ranking as an error.
pub fn require_viable_ranking(
    spec: &NetworkSpec,
    classes: &JobClassification,
) -> Result<Ranking> {
    let search = search_viable_ranking(spec, classes)?;
    search.ranking.ok_or_else(|| {
        let prefix = search.stuck_prefix.unwrap_or_default();
        Error::NoViableRanking {
            stuck_prefix: prefix.iter().map(|&j| spec.job_name(j)).collect::<Vec<_>>().join(", "),
        }
    })
}

/// Every viable ranking, in lexicographic order.
pub fn all_viable_rankings(
    spec: &NetworkSpec,
    classes: &JobClassification,
) -> Result<Vec<Ranking>> {
    let mut searcher = Searcher::new(spec, classes);
    let mut all = Vec::new();
    searcher.search(
        &mut Vec::new(),
        &mut |order| {
            all.push(Ranking { order: order.to_vec() });
            false
        },
        &mut None,
    )?;
    Ok(all)
}

/// True when the resource sets of the multi-resource secondary jobs are
/// pairwise nested or disjoint.
pub fn check_subset_condition(spec: &NetworkSpec, classes: &JobClassification) -> bool {
    let multi: Vec<usize> = classes.multi.iter().collect();
    multi.iter().enumerate().all(|(a, &j)| {
        multi[a + 1..].iter().all(|&k| {
            let (nj, nk) = (spec.resources_of(j), spec.resources_of(k));
            nj.is_subset(nk) || nk.is_subset(nj) || !nj.intersects(nk)
        })
    })
}

/// True when every job `j` outside `O^{S^m}` has only covers `M` in
/// `M_O^{(S^m \ O) + S^1, j}` with `sum_{l in M} |N_l| = |N_j|`.
pub fn check_remove_condition(spec: &NetworkSpec, classes: &JobClassification) -> Result<bool> {
    let opt = opt_jobs(spec, classes, classes.multi, BitSet::EMPTY)?;
    let rest = classes.multi.difference(opt);
    let allowed = rest.union(classes.singles());
    for j in rest.iter() {
        for m in minimal_covers_excluding(spec, allowed, opt, j) {
            let total: usize = m.iter().map(|l| spec.resources_of(l).len()).sum();
            if total != spec.resources_of(j).len() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
