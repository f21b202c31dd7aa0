//! Dense two-phase simplex with Bland's rule.
//!
//! Solves maximize c.x subject to A x <= b, x >= 0, where b may be negative.
//! Problem sizes here are tiny (a handful of constraints over a few hundred
//! columns), so a dense tableau is the right tool; Bland's rule rules out
//! cycling on degenerate vertices.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Columns at or past this index are artificials and may never enter.
    art_start: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.rows[row][col];
        for v in &mut self.rows[row] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == 0.0 {
                continue;
            }
            let (pivot_row, rhs_pivot) = (self.rows[row].clone(), self.rhs[row]);
            for (v, p) in self.rows[r].iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            self.rhs[r] -= factor * rhs_pivot;
        }
        self.basis[row] = col;
    }

    /// Reduced costs and objective value for cost vector `c` at the current
    /// basis.
    fn price_out(&self, c: &[f64]) -> (Vec<f64>, f64) {
        let ncols = self.rows[0].len();
        let mut reduced = vec![0.0; ncols];
        reduced[..c.len()].copy_from_slice(c);
        let mut value = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < c.len() { c[b] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            value += cb * self.rhs[i];
            for (r, a) in reduced.iter_mut().zip(&self.rows[i]) {
                *r -= cb * a;
            }
        }
        (reduced, value)
    }

    /// Runs simplex iterations for cost vector `c`. Returns the objective
    /// value, or None when the LP is unbounded.
    fn optimize(&mut self, c: &[f64], allow_artificials: bool) -> Result<Option<f64>> {
        let limit = 200 * (self.rows[0].len() + self.rows.len()) + 10_000;
        for _ in 0..limit {
            let (reduced, value) = self.price_out(c);
            let enter_limit = if allow_artificials {
                reduced.len()
            } else {
                self.art_start
            };
            // Bland: smallest improving column index.
            let entering = (0..enter_limit).find(|&j| reduced[j] > PIVOT_TOL);
            let Some(col) = entering else {
                return Ok(Some(value));
            };
            // Ratio test; Bland tie-break on the leaving basic index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i] / a;
                let better = match leave {
                    None => true,
                    Some((best_row, best)) => {
                        ratio < best - PIVOT_TOL
                            || (ratio <= best + PIVOT_TOL && self.basis[i] < self.basis[best_row])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return Ok(None),
            }
        }
        Err(Error::LpIndeterminate(
            "simplex iteration limit exceeded".into(),
        ))
    }
}

/// Maximizes `objective . x` subject to `constraints[i].0 . x <= constraints[i].1`
/// and `x >= 0`.
pub fn maximize(objective: &[f64], constraints: &[(Vec<f64>, f64)]) -> Result<LpOutcome> {
    let n = objective.len();
    let m = constraints.len();
    if m == 0 {
        return Err(Error::EmptyInput("LP constraints"));
    }
    for (coeffs, _) in constraints {
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: coeffs.len(),
            });
        }
    }

    // Layout: structural     [0, n)
    //         slack          [n, n + m)
    //         artificial     [n + m, ...)
    let art_start = n + m;
    let negatives: Vec<usize> = constraints
        .iter()
        .enumerate()
        .filter(|(_, (_, b))| *b < 0.0)
        .map(|(i, _)| i)
        .collect();
    let ncols = art_start + negatives.len();

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art_start;
    for (i, (coeffs, b)) in constraints.iter().enumerate() {
        let mut row = vec![0.0; ncols];
        let flip = if *b < 0.0 { -1.0 } else { 1.0 };
        for (j, &a) in coeffs.iter().enumerate() {
            row[j] = flip * a;
        }
        row[n + i] = flip;
        if *b < 0.0 {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
        rhs.push(flip * b);
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        art_start,
    };

    // Phase 1: drive the artificials to zero.
    if ncols > art_start {
        let mut phase1 = vec![0.0; ncols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = -1.0;
        }
        match tab.optimize(&phase1, true)? {
            Some(value) if value < -FEAS_TOL => return Ok(LpOutcome::Infeasible),
            Some(_) => {}
            None => {
                return Err(Error::LpIndeterminate(
                    "phase-1 objective reported unbounded".into(),
                ))
            }
        }
        // Pivot leftover artificials out of the basis where possible.
        for i in 0..tab.rows.len() {
            if tab.basis[i] < art_start {
                continue;
            }
            if let Some(col) = (0..art_start).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                tab.pivot(i, col);
            }
        }
    }

    // Phase 2: the real objective over structural columns.
    let mut phase2 = vec![0.0; ncols];
    phase2[..n].copy_from_slice(objective);
    match tab.optimize(&phase2, false)? {
        Some(objective) => {
            let mut x = vec![0.0; n];
            for (i, &b) in tab.basis.iter().enumerate() {
                if b < n {
                    x[b] = tab.rhs[i];
                }
            }
            Ok(LpOutcome::Optimal { x, objective })
        }
        None => Ok(LpOutcome::Unbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_box() {
        let out = maximize(&[1.0, 1.0], &[(vec![1.0, 0.0], 2.0), (vec![0.0, 1.0], 3.0)]).unwrap();
        match out {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 5.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9);
                assert!((x[1] - 3.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn phase_one_needed() {
        // x >= 1 encoded as -x <= -1, maximize x with x <= 2.
        let out = maximize(&[1.0], &[(vec![-1.0], -1.0), (vec![1.0], 2.0)]).unwrap();
        match out {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 2.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible() {
        // x <= -1 contradicts x >= 0.
        let out = maximize(&[1.0], &[(vec![1.0], -1.0)]).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);

        // x >= 2 and x <= 1.
        let out = maximize(&[0.0], &[(vec![-1.0], -2.0), (vec![1.0], 1.0)]).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let out = maximize(&[1.0], &[(vec![-1.0], 0.0)]).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Three constraints meeting at the same vertex.
        let out = maximize(
            &[1.0, 1.0],
            &[
                (vec![1.0, 0.0], 1.0),
                (vec![0.0, 1.0], 1.0),
                (vec![1.0, 1.0], 2.0),
            ],
        )
        .unwrap();
        match out {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 2.0).abs() < 1e-9),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn equality_like_band() {
        // 1 <= x + y <= 1, maximize x: optimum 1 at (1, 0).
        let out = maximize(
            &[1.0, 0.0],
            &[(vec![1.0, 1.0], 1.0), (vec![-1.0, -1.0], -1.0)],
        )
        .unwrap();
        match out {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 1.0).abs() < 1e-9);
                assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
