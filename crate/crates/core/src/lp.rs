//! Dense two-phase simplex for small linear programs of the form
//! `max c.x + k` subject to `A x <= b`, `x >= 0` and optionally `x <= 1`.
//!
//! Pivoting follows Bland's rule, so the solver terminates on degenerate
//! programs and is deterministic for a fixed input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_VARIABLES: usize = 64;
pub const DEFAULT_ITERATION_LIMIT: usize = 50_000;

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    /// Right-hand side; strict rows already carry `-margin` here.
    pub bound: f64,
    /// Margin subtracted from a strict `< c` row, 0 for non-strict rows.
    pub margin: f64,
    pub label: String,
}

impl Constraint {
    pub fn le(coefficients: Vec<f64>, bound: f64) -> Self {
        Self {
            coefficients,
            bound,
            margin: 0.0,
            label: String::new(),
        }
    }

    /// `a.x < bound`, stored as `a.x <= bound - margin`.
    pub fn strict(coefficients: Vec<f64>, bound: f64, margin: f64) -> Self {
        Self {
            coefficients,
            bound: bound - margin,
            margin,
            label: String::new(),
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constant: f64,
    pub constraints: Vec<Constraint>,
    /// Adds `x_j <= 1` for every variable.
    pub unit_box: bool,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constant: 0.0,
            constraints: Vec::new(),
            unit_box: true,
        }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            worst = worst.max(c.lhs(x) - c.bound);
        }
        for v in x {
            worst = worst.max(-v);
            if self.unit_box {
                worst = worst.max(v - 1.0);
            }
        }
        worst
    }

    fn check_shape(&self) -> Result<()> {
        let m = self.variables();
        if m == 0 {
            return Err(Error::LpShape("no variables".into()));
        }
        if m > MAX_VARIABLES {
            return Err(Error::LpDimension(m));
        }
        if self.objective.iter().any(|v| !v.is_finite()) || !self.constant.is_finite() {
            return Err(Error::LpShape("objective has non-finite entries".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != m {
                return Err(Error::LpShape(format!(
                    "constraint {i} has {} coefficients, expected {m}",
                    c.coefficients.len()
                )));
            }
            if c.coefficients.iter().any(|v| !v.is_finite()) || !c.bound.is_finite() {
                return Err(Error::LpShape(format!("constraint {i} has non-finite entries")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "OPTIMAL",
            LpStatus::Infeasible => "INFEASIBLE",
            LpStatus::Unbounded => "UNBOUNDED",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless the status is optimal.
    pub x: Vec<f64>,
    /// Objective value including the constant; NaN unless optimal.
    pub value: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    columns: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f == 0.0 {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.rows[i][c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . z` over allowed columns. Returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize, iterations: &mut usize, limit: usize) -> Result<bool> {
        let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let z: f64 = self
                    .basis
                    .iter()
                    .zip(&self.rows)
                    .map(|(&b, row)| cost[b] * row[j])
                    .sum();
                if cost[j] - z > COST_TOL * scale {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leaving else {
                return Ok(false);
            };
            *iterations += 1;
            if *iterations > limit {
                return Err(Error::LpIterationLimit(limit));
            }
            self.pivot(r, c);
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with_limit(lp, DEFAULT_ITERATION_LIMIT)
}

pub fn solve_lp_with_limit(lp: &LinearProgram, limit: usize) -> Result<LpSolution> {
    lp.check_shape()?;
    let m = lp.variables();

    let mut raw: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coefficients.clone(), c.bound))
        .collect();
    if lp.unit_box {
        for j in 0..m {
            let mut a = vec![0.0; m];
            a[j] = 1.0;
            raw.push((a, 1.0));
        }
    }
    let rows = raw.len();
    let artificial_rows: Vec<usize> = (0..rows).filter(|&i| raw[i].1 < 0.0).collect();
    let slack0 = m;
    let art0 = m + rows;
    let columns = art0 + artificial_rows.len();

    let mut t = Tableau {
        rows: Vec::with_capacity(rows),
        rhs: Vec::with_capacity(rows),
        basis: Vec::with_capacity(rows),
        columns,
    };
    let mut next_art = art0;
    for (i, (a, b)) in raw.into_iter().enumerate() {
        let mut row = vec![0.0; columns];
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (j, v) in a.iter().enumerate() {
            row[j] = sign * v;
        }
        row[slack0 + i] = sign;
        if b < 0.0 {
            row[next_art] = 1.0;
            t.basis.push(next_art);
            next_art += 1;
        } else {
            t.basis.push(slack0 + i);
        }
        t.rows.push(row);
        t.rhs.push(sign * b);
    }

    let mut iterations = 0;
    if !artificial_rows.is_empty() {
        let mut cost = vec![0.0; columns];
        for c in cost.iter_mut().skip(art0) {
            *c = -1.0;
        }
        t.optimize(&cost, columns, &mut iterations, limit)?;
        let infeasibility: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(b, _)| **b >= art0)
            .map(|(_, v)| *v)
            .sum();
        let scale = t.rhs.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                value: f64::NAN,
                iterations,
            });
        }
        // drive remaining artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] < art0 {
                i += 1;
                continue;
            }
            match (0..art0).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        }
    }

    let mut cost = vec![0.0; t.columns];
    cost[..m].copy_from_slice(&lp.objective);
    if !t.optimize(&cost, art0, &mut iterations, limit)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            value: f64::NAN,
            iterations,
        });
    }

    let mut x = vec![0.0; m];
    for (b, v) in t.basis.iter().zip(&t.rhs) {
        if *b < m {
            x[*b] = *v;
        }
    }
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        if lp.unit_box && *v > 1.0 {
            *v = 1.0;
        }
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: lp.value_at(&x),
        x,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_cap() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.push(Constraint::le(vec![1.0], 0.5));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-12);
        assert!((s.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.push(Constraint::le(vec![1.0], 0.2));
        lp.push(Constraint::le(vec![-1.0], -0.5));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_without_box() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.unit_box = false;
        lp.push(Constraint::le(vec![1.0, -1.0], 1.0));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // max -x1 - x2  s.t. x1 + x2 >= 0.7, x1 - x2 <= 0.1
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]);
        lp.push(Constraint::le(vec![-1.0, -1.0], -0.7));
        lp.push(Constraint::le(vec![1.0, -1.0], 0.1));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 0.7).abs() < 1e-12);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        // x1 + x2 = 1 written twice as a pair of inequalities
        let mut lp = LinearProgram::new(vec![2.0, 1.0]);
        for _ in 0..2 {
            lp.push(Constraint::le(vec![1.0, 1.0], 1.0));
            lp.push(Constraint::le(vec![-1.0, -1.0], -1.0));
        }
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_limit() {
        let lp = LinearProgram::new(vec![0.0; MAX_VARIABLES + 1]);
        assert_eq!(solve_lp(&lp), Err(Error::LpDimension(MAX_VARIABLES + 1)));
    }

    #[test]
    fn shape_mismatch() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.push(Constraint::le(vec![1.0], 1.0));
        assert!(matches!(solve_lp(&lp), Err(Error::LpShape(_))));
    }

    #[test]
    fn strict_rows_record_margin() {
        let c = Constraint::strict(vec![1.0], 0.0, 1e-3);
        assert_eq!(c.bound, -1e-3);
        assert_eq!(c.margin, 1e-3);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // classic cycling example for the largest-coefficient rule
        let mut lp = LinearProgram::new(vec![0.75, -20.0, 0.5, -6.0]);
        lp.unit_box = false;
        lp.push(Constraint::le(vec![0.25, -8.0, -1.0, 9.0], 0.0));
        lp.push(Constraint::le(vec![0.5, -12.0, -0.5, 3.0], 0.0));
        lp.push(Constraint::le(vec![0.0, 0.0, 1.0, 0.0], 1.0));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.25).abs() < 1e-9);
    }
}
