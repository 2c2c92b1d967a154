//! Dense two-phase simplex over generic scalars.
//!
//! Solves `minimize c·x subject to A x = b, x ≥ 0`. Pivoting follows
//! Bland's rule (smallest eligible column; ties in the ratio test broken by
//! smallest basic variable), which makes the method finite under exact
//! arithmetic. All comparisons go through the scalar tolerance, so the same
//! code drives approximate runs on floats.

use crate::scalar::{sign_within, Scalar};
use std::cmp::Ordering;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpOutcome<T> {
    Optimal { x: Vec<T>, objective: T },
    Infeasible,
    Unbounded,
}

struct Tableau<T> {
    /// `m` rows of `width + 1` entries; the right-hand side sits last.
    rows: Vec<Vec<T>>,
    /// Reduced-cost row of `width + 1` entries; the last entry carries the
    /// negated objective value.
    cost: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    eps: T,
}

enum Step {
    Optimal,
    Pivoted,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    /// Gauss-Jordan pivot on `(row, col)`: the column becomes a unit vector
    /// and `col` enters the basis.
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        for e in self.rows[row].iter_mut() {
            *e = e.clone() / p.clone();
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col].clone();
            if sign_within(&f, &self.eps) == Ordering::Equal {
                continue;
            }
            for j in 0..=self.width {
                let delta = f.clone() * self.rows[row][j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - delta;
            }
        }
        let f = self.cost[col].clone();
        if sign_within(&f, &self.eps) != Ordering::Equal {
            for j in 0..=self.width {
                let delta = f.clone() * self.rows[row][j].clone();
                self.cost[j] = self.cost[j].clone() - delta;
            }
        }
        self.basis[row] = col;
    }

    /// Install the objective `costs` (one entry per column) as the reduced
    /// cost row, eliminating the current basic columns.
    fn price_out(&mut self, costs: &[T]) {
        self.cost = costs.to_vec();
        self.cost.push(T::zero());
        for r in 0..self.rows.len() {
            let f = self.cost[self.basis[r]].clone();
            if sign_within(&f, &self.eps) == Ordering::Equal {
                continue;
            }
            for j in 0..=self.width {
                let delta = f.clone() * self.rows[r][j].clone();
                self.cost[j] = self.cost[j].clone() - delta;
            }
        }
    }

    fn bland_step(&mut self) -> Step {
        let entering = (0..self.width).find(|&j| sign_within(&self.cost[j], &self.eps) == Ordering::Less);
        let Some(col) = entering else {
            return Step::Optimal;
        };
        let mut leave: Option<(usize, T)> = None;
        for r in 0..self.rows.len() {
            if sign_within(&self.rows[r][col], &self.eps) != Ordering::Greater {
                continue;
            }
            let ratio = self.rows[r][self.width].clone() / self.rows[r][col].clone();
            let replace = match &leave {
                None => true,
                Some((best_r, best)) => {
                    let d = ratio.clone() - best.clone();
                    match sign_within(&d, &self.eps) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[r] < self.basis[*best_r],
                        Ordering::Greater => false,
                    }
                }
            };
            if replace {
                leave = Some((r, ratio));
            }
        }
        match leave {
            Some((r, _)) => {
                self.pivot(r, col);
                Step::Pivoted
            }
            None => Step::Unbounded,
        }
    }

    fn objective(&self) -> T {
        T::zero() - self.cost[self.width].clone()
    }
}

/// Two-phase simplex for `minimize c·x, A x = b, x ≥ 0`.
///
/// Rows with negative right-hand side are sign-flipped; redundant rows
/// surviving phase one are dropped. Panics on dimension mismatch (internal
/// API — callers build the system themselves).
pub(crate) fn solve_standard<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> LpOutcome<T> {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "one right-hand side per row");
    let eps = T::default_eps();

    let mut rows = Vec::with_capacity(m);
    for (i, arow) in a.iter().enumerate() {
        assert_eq!(arow.len(), n, "row width must match the cost vector");
        let flip = sign_within(&b[i], &eps) == Ordering::Less;
        let mut row: Vec<T> = arow
            .iter()
            .map(|v| if flip { T::zero() - v.clone() } else { v.clone() })
            .collect();
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        row.push(if flip { T::zero() - b[i].clone() } else { b[i].clone() });
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        width: n + m,
        eps: eps.clone(),
    };

    // Phase one: minimize the artificial mass.
    let mut phase1 = vec![T::zero(); n];
    phase1.extend(std::iter::repeat(T::one()).take(m));
    t.price_out(&phase1);
    loop {
        match t.bland_step() {
            Step::Optimal => break,
            Step::Pivoted => {}
            // The artificial objective is bounded below by zero, so this
            // branch is unreachable under exact arithmetic.
            Step::Unbounded => return LpOutcome::Infeasible,
        }
    }
    if sign_within(&t.objective(), &eps) == Ordering::Greater {
        return LpOutcome::Infeasible;
    }

    // Drive leftover artificials out of the basis; a row with no structural
    // pivot left is redundant and gets dropped.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            match (0..n).find(|&j| sign_within(&t.rows[r][j], &eps) != Ordering::Equal) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Drop the artificial columns and run phase two on the real objective.
    for row in &mut t.rows {
        let rhs = row.pop().expect("rhs present");
        row.truncate(n);
        row.push(rhs);
    }
    t.width = n;
    t.price_out(c);
    loop {
        match t.bland_step() {
            Step::Optimal => break,
            Step::Pivoted => {}
            Step::Unbounded => return LpOutcome::Unbounded,
        }
    }

    let mut x = vec![T::zero(); n];
    for (r, &bv) in t.basis.iter().enumerate() {
        x[bv] = t.rows[r][n].clone();
    }
    LpOutcome::Optimal { x, objective: t.objective() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rat};

    fn r(n: i64, d: i64) -> Rat {
        rat(n, d)
    }

    #[test]
    fn solves_a_small_program() {
        // minimize -x - y  s.t.  x + 2y + s1 = 4,  3x + y + s2 = 6.
        let a = vec![
            vec![r(1, 1), r(2, 1), r(1, 1), r(0, 1)],
            vec![r(3, 1), r(1, 1), r(0, 1), r(1, 1)],
        ];
        let b = vec![r(4, 1), r(6, 1)];
        let c = vec![r(-1, 1), r(-1, 1), r(0, 1), r(0, 1)];
        match solve_standard(&a, &b, &c) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(x[0], r(8, 5));
                assert_eq!(x[1], r(6, 5));
                assert_eq!(objective, r(-14, 5));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1 and x + y = 2 cannot both hold.
        let a = vec![vec![r(1, 1), r(1, 1)], vec![r(1, 1), r(1, 1)]];
        let b = vec![r(1, 1), r(2, 1)];
        let c = vec![r(0, 1), r(0, 1)];
        assert_eq!(solve_standard(&a, &b, &c), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // minimize -x  s.t.  x - y = 1: push y (and x) to infinity.
        let a = vec![vec![r(1, 1), r(-1, 1)]];
        let b = vec![r(1, 1)];
        let c = vec![r(-1, 1), r(0, 1)];
        assert_eq!(solve_standard(&a, &b, &c), LpOutcome::Unbounded);
    }

    #[test]
    fn drops_redundant_rows_and_flips_negative_sides() {
        // Second row is -1 times the first; third repeats the first.
        let a = vec![
            vec![r(1, 1), r(1, 1)],
            vec![r(-1, 1), r(-1, 1)],
            vec![r(1, 1), r(1, 1)],
        ];
        let b = vec![r(1, 1), r(-1, 1), r(1, 1)];
        let c = vec![r(1, 1), r(2, 1)];
        match solve_standard(&a, &b, &c) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, r(1, 1));
                assert_eq!(x, vec![r(1, 1), r(0, 1)]);
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn handles_degenerate_vertices() {
        // Classic degeneracy: two constraints meet the optimum at the same
        // basic solution; Bland's rule must still terminate.
        let a = vec![
            vec![r(1, 1), r(1, 1), r(1, 1), r(0, 1)],
            vec![r(1, 1), r(2, 1), r(0, 1), r(1, 1)],
            vec![r(1, 1), r(0, 1), r(0, 1), r(0, 1)],
        ];
        let b = vec![r(2, 1), r(2, 1), r(2, 1)];
        let c = vec![r(-1, 1), r(-1, 1), r(0, 1), r(0, 1)];
        match solve_standard(&a, &b, &c) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, r(-2, 1));
                assert_eq!(x[0], r(2, 1));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn float_mode_matches_the_exact_answer() {
        let a = vec![
            vec![1.0, 2.0, 1.0, 0.0],
            vec![3.0, 1.0, 0.0, 1.0],
        ];
        let b = vec![4.0, 6.0];
        let c = vec![-1.0, -1.0, 0.0, 0.0];
        match solve_standard(&a, &b, &c) {
            LpOutcome::Optimal { objective, .. } => {
                assert!((objective - (-2.8)).abs() < 1e-9);
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }
}
