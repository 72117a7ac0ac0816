//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `min c.x  s.t.  A x = b, x >= 0`. The solver is generic over
//! [`Scalar`], so the same code runs in exact rational arithmetic and in
//! `f64` with a fixed tolerance.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn optimal(self) -> Option<(Vec<T>, T)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

// Bland's rule cannot cycle; the cap only guards against float trouble.
const MAX_PIVOTS: usize = 100_000;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    objective: Vec<T>,
    objective_rhs: T,
    basis: Vec<usize>,
}

enum Step {
    Optimal,
    Unbounded,
    Pivoted,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rhs[row] = self.rhs[row].clone() / p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, pv) in self.rows[r].iter_mut().zip(&pivot_row) {
                *v = v.clone() - factor.clone() * pv.clone();
            }
            self.rhs[r] = self.rhs[r].clone() - factor * pivot_rhs.clone();
        }
        let factor = self.objective[col].clone();
        if !factor.is_zero() {
            for (v, pv) in self.objective.iter_mut().zip(&pivot_row) {
                *v = v.clone() - factor.clone() * pv.clone();
            }
            self.objective_rhs = self.objective_rhs.clone() - factor * pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// One Bland step restricted to columns `< allowed`.
    fn step(&mut self, allowed: usize) -> Step {
        let Some(col) = (0..allowed).find(|&j| self.objective[j].is_negative()) else {
            return Step::Optimal;
        };
        let mut best: Option<(usize, T)> = None;
        for r in 0..self.rows.len() {
            let a = &self.rows[r][col];
            if !a.is_positive() {
                continue;
            }
            let ratio = self.rhs[r].clone() / a.clone();
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let better = ratio < bratio
                        || (!(bratio < ratio) && self.basis[r] < self.basis[br]);
                    if better {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        match best {
            None => Step::Unbounded,
            Some((row, _)) => {
                self.pivot(row, col);
                Step::Pivoted
            }
        }
    }

    fn run(&mut self, allowed: usize) -> Option<bool> {
        for _ in 0..MAX_PIVOTS {
            match self.step(allowed) {
                Step::Optimal => return Some(true),
                Step::Unbounded => return Some(false),
                Step::Pivoted => {}
            }
        }
        None
    }
}

/// Solves `min c.x` subject to `A x = b`, `x >= 0`.
///
/// Among multiple optima the result is the vertex reached by Bland's rule,
/// which is deterministic for given input order.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> LpOutcome<T> {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "rhs length");
    assert!(a.iter().all(|row| row.len() == n), "constraint row length");

    // Phase 1 with one artificial per row; rows are sign-normalized so b >= 0.
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (r, row) in a.iter().enumerate() {
        let flip = b[r].is_negative();
        let mut full: Vec<T> = row
            .iter()
            .map(|v| if flip { -v.clone() } else { v.clone() })
            .collect();
        full.extend((0..m).map(|k| if k == r { T::one() } else { T::zero() }));
        rows.push(full);
        rhs.push(if flip { -b[r].clone() } else { b[r].clone() });
    }
    let mut objective = vec![T::zero(); n + m];
    let mut objective_rhs = T::zero();
    for r in 0..m {
        for j in 0..n {
            objective[j] = objective[j].clone() - rows[r][j].clone();
        }
        objective_rhs = objective_rhs - rhs[r].clone();
    }
    let mut tab = Tableau { rows, rhs, objective, objective_rhs, basis: (n..n + m).collect() };
    if tab.run(n + m) != Some(true) {
        return LpOutcome::Infeasible;
    }
    // objective_rhs holds minus the phase-1 optimum.
    if tab.objective_rhs.is_negative() {
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| !tab.rows[r][j].is_zero()) {
                Some(col) => {
                    tab.pivot(r, col);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.rhs.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    // Phase 2.
    let mut objective: Vec<T> = c.iter().cloned().chain((0..m).map(|_| T::zero())).collect();
    let mut objective_rhs = T::zero();
    for (row, (&bj, rhs)) in tab.rows.iter().zip(tab.basis.iter().zip(&tab.rhs)) {
        let cb = c[bj].clone();
        if cb.is_zero() {
            continue;
        }
        for (o, v) in objective.iter_mut().zip(row) {
            *o = o.clone() - cb.clone() * v.clone();
        }
        objective_rhs = objective_rhs - cb * rhs.clone();
    }
    tab.objective = objective;
    tab.objective_rhs = objective_rhs;
    match tab.run(n) {
        Some(true) => {}
        Some(false) => return LpOutcome::Unbounded,
        None => return LpOutcome::Infeasible,
    }
    let mut x = vec![T::zero(); n];
    for (&bj, v) in tab.basis.iter().zip(&tab.rhs) {
        if bj < n {
            x[bj] = v.clone().clamp_nonnegative();
        }
    }
    let value = x.iter().zip(c).fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    LpOutcome::Optimal { x, value }
}
