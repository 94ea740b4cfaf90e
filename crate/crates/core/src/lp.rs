//! Dense two-phase simplex.
//!
//! Problems are stated as `maximize c^T v` subject to `<=` and `=` rows, with
//! each variable either nonnegative or free. Free variables are split into a
//! difference of two nonnegative columns so both phases see a uniform standard
//! form. Entering columns follow Dantzig's rule until the solve has made
//! `2 * (vars + constraints)` degenerate pivots, after which Bland's rule takes
//! over for the rest of the solve.
//!
//! Once an optimal basis is found the basic values are recomputed from the
//! original rows with a fresh partially pivoted elimination, so the reported
//! primal does not carry the round-off accumulated in the tableau.

use thiserror::Error;

/// Scaled feasibility tolerance: a row may be violated by at most
/// `TOL_FEAS * max(1, row scale)`.
pub const TOL_FEAS: f64 = 1e-9;
/// Largest reduced cost tolerated at optimality.
pub const TOL_OPT: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-9;
const ITERATION_FACTOR: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("simplex stalled: {iterations} pivots reached the cap of {cap}")]
    IterationLimit { iterations: usize, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// One row `coeffs . v (<= | =) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    bounds: Vec<VarBound>,
    inequalities: Vec<LinearConstraint>,
    equalities: Vec<LinearConstraint>,
}

impl LpProblem {
    /// A problem maximizing `objective . v` over nonnegative variables with no rows yet.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            bounds: vec![VarBound::NonNegative; n],
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = VarBound::Free;
    }

    /// `coeffs . v <= rhs`
    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.inequalities.push(LinearConstraint { coeffs, rhs });
    }

    /// `coeffs . v >= rhs`, stored as the negated `<=` row.
    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.add_le(coeffs.into_iter().map(|a| -a).collect(), -rhs);
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.equalities.push(LinearConstraint { coeffs, rhs });
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self) -> &[VarBound] {
        &self.bounds
    }

    pub fn inequalities(&self) -> &[LinearConstraint] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[LinearConstraint] {
        &self.equalities
    }

    pub fn constraint_count(&self) -> usize {
        self.inequalities.len() + self.equalities.len()
    }

    /// Worst violation of any row or bound, each divided by `max(1, row scale)`.
    /// A point is feasible when this is at most [`TOL_FEAS`].
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let scaled = |row: &LinearConstraint| -> (f64, f64) {
            let mut lhs = 0.0;
            let mut scale = row.rhs.abs().max(1.0);
            for (a, x) in row.coeffs.iter().zip(v) {
                lhs += a * x;
                scale = scale.max((a * x).abs());
            }
            (lhs - row.rhs, scale)
        };
        let ineq = self.inequalities.iter().map(|r| {
            let (d, s) = scaled(r);
            d.max(0.0) / s
        });
        let eq = self.equalities.iter().map(|r| {
            let (d, s) = scaled(r);
            d.abs() / s
        });
        let bounds = self.bounds.iter().zip(v).map(|(b, &x)| match b {
            VarBound::NonNegative => (-x).max(0.0) / x.abs().max(1.0),
            VarBound::Free => 0.0,
        });
        ineq.chain(eq).chain(bounds).fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.var_count();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("objective has non-finite coefficients".into()));
        }
        for (kind, rows) in [("inequality", &self.inequalities), ("equality", &self.equalities)] {
            for (i, row) in rows.iter().enumerate() {
                if row.coeffs.len() != n {
                    return Err(LpError::Malformed(format!(
                        "{kind} row {i} has {} coefficients for {n} variables",
                        row.coeffs.len()
                    )));
                }
                if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(LpError::Malformed(format!("{kind} row {i} is not finite")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub primal: Vec<f64>,
    /// `c^T primal` when optimal, `+inf` when unbounded, `-inf` when infeasible.
    pub objective_value: f64,
    /// Simplex pivots over both phases.
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Standard-form column layout for the original variables.
struct ColumnMap {
    /// For each original variable: (positive column, optional negative column).
    columns: Vec<(usize, Option<usize>)>,
    structural: usize,
}

impl ColumnMap {
    fn new(bounds: &[VarBound]) -> Self {
        let mut next = 0;
        let columns = bounds
            .iter()
            .map(|b| {
                let pos = next;
                next += 1;
                let neg = match b {
                    VarBound::NonNegative => None,
                    VarBound::Free => {
                        next += 1;
                        Some(next - 1)
                    }
                };
                (pos, neg)
            })
            .collect();
        Self {
            columns,
            structural: next,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 1)`, right-hand side in the last column.
    data: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    objective: f64,
}

impl Tableau {
    #[inline]
    fn stride(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride() + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.stride() + self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.stride();
        let inv = 1.0 / self.at(r, c);
        let mut prow: Vec<f64> = self.data[r * stride..(r + 1) * stride]
            .iter()
            .map(|v| v * inv)
            .collect();
        prow[c] = 1.0;
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let row = &mut self.data[i * stride..(i + 1) * stride];
            let factor = row[c];
            if factor == 0.0 {
                continue;
            }
            for (x, p) in row.iter_mut().zip(&prow) {
                *x -= factor * p;
            }
            row[c] = 0.0;
        }
        let d = self.reduced[c];
        if d != 0.0 {
            for (x, p) in self.reduced.iter_mut().zip(&prow) {
                *x -= d * p;
            }
            self.reduced[c] = 0.0;
            self.objective += d * prow[self.cols];
        }
        self.data[r * stride..(r + 1) * stride].copy_from_slice(&prow);
        self.basis[r] = c;
    }

    /// Recomputes reduced costs and objective for column costs `costs`.
    fn price(&mut self, costs: &[f64]) {
        self.reduced = costs.to_vec();
        self.objective = 0.0;
        for i in 0..self.rows {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                self.reduced[j] -= cb * self.at(i, j);
            }
            self.objective += cb * self.rhs(i);
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    fn remove_rows(&mut self, drop: &[bool]) {
        let stride = self.stride();
        let mut data = Vec::with_capacity(self.data.len());
        let mut basis = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            if !drop[i] {
                data.extend_from_slice(&self.data[i * stride..(i + 1) * stride]);
                basis.push(self.basis[i]);
            }
        }
        self.rows = basis.len();
        self.data = data;
        self.basis = basis;
    }
}

struct PivotRule {
    iterations: usize,
    cap: usize,
    degenerate: usize,
    bland_after: usize,
}

impl PivotRule {
    fn bland(&self) -> bool {
        self.degenerate >= self.bland_after
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

fn optimize(t: &mut Tableau, allowed: &[bool], rule: &mut PivotRule) -> Result<Outcome, LpError> {
    loop {
        let entering = if rule.bland() {
            (0..t.cols).find(|&j| allowed[j] && t.reduced[j] > TOL_OPT)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..t.cols {
                let d = t.reduced[j];
                if allowed[j] && d > TOL_OPT && best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(c) = entering else {
            return Ok(Outcome::Optimal);
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.rows {
            let a = t.at(i, c);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = t.rhs(i).max(0.0) / a;
            leave = match leave {
                None => Some((i, ratio)),
                Some((r, best)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                    let better = if tie {
                        if rule.bland() {
                            t.basis[i] < t.basis[r]
                        } else {
                            a > t.at(r, c)
                        }
                    } else {
                        ratio < best
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((r, best))
                    }
                }
            };
        }
        let Some((r, ratio)) = leave else {
            return Ok(Outcome::Unbounded);
        };
        if rule.iterations >= rule.cap {
            return Err(LpError::IterationLimit {
                iterations: rule.iterations,
                cap: rule.cap,
            });
        }
        if ratio <= 1e-12 {
            rule.degenerate += 1;
        }
        t.pivot(r, c);
        rule.iterations += 1;
    }
}

/// Solves `p` with the two-phase simplex method.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; only malformed input and pivot-cap exhaustion are
/// errors.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    let map = ColumnMap::new(&p.bounds);
    let n_ineq = p.inequalities.len();
    let rows = p.constraint_count();
    let slack0 = map.structural;
    let art0 = slack0 + n_ineq;

    // Sign-normalized rows (rhs >= 0) before artificials are appended.
    let mut needs_artificial = Vec::with_capacity(rows);
    let mut base_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for (k, row) in p.inequalities.iter().chain(&p.equalities).enumerate() {
        let mut std_row = vec![0.0; art0 + 1];
        for (v, &a) in row.coeffs.iter().enumerate() {
            let (pos, neg) = map.columns[v];
            std_row[pos] = a;
            if let Some(neg) = neg {
                std_row[neg] = -a;
            }
        }
        let is_ineq = k < n_ineq;
        if is_ineq {
            std_row[slack0 + k] = 1.0;
        }
        std_row[art0] = row.rhs;
        let flip = row.rhs < 0.0;
        if flip {
            std_row.iter_mut().for_each(|x| *x = -*x);
        }
        needs_artificial.push(!is_ineq || flip);
        base_rows.push(std_row);
    }
    let n_art = needs_artificial.iter().filter(|&&b| b).count();
    let cols = art0 + n_art;

    let mut data = Vec::with_capacity(rows * (cols + 1));
    let mut basis = Vec::with_capacity(rows);
    let mut next_art = art0;
    for (k, std_row) in base_rows.iter().enumerate() {
        data.extend_from_slice(&std_row[..art0]);
        let mut art = vec![0.0; n_art];
        if needs_artificial[k] {
            art[next_art - art0] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack0 + k);
        }
        data.extend_from_slice(&art);
        data.push(std_row[art0]);
    }
    let original = data.clone();

    let mut t = Tableau {
        rows,
        cols,
        data,
        basis,
        reduced: vec![0.0; cols],
        objective: 0.0,
    };
    let mut rule = PivotRule {
        iterations: 0,
        cap: ITERATION_FACTOR * (cols + rows),
        degenerate: 0,
        bland_after: 2 * (p.var_count() + rows),
    };

    let mut kept: Vec<usize> = (0..rows).collect();
    if n_art > 0 {
        let mut costs = vec![0.0; cols];
        costs[art0..].iter_mut().for_each(|c| *c = -1.0);
        t.price(&costs);
        let allowed = vec![true; cols];
        // Phase 1 is bounded above by zero, so it cannot report unbounded.
        optimize(&mut t, &allowed, &mut rule)?;
        let rhs_scale = base_rows.iter().map(|r| r[art0].abs()).fold(1.0, f64::max);
        if t.objective < -TOL_FEAS * rhs_scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                objective_value: f64::NEG_INFINITY,
                iterations: rule.iterations,
            });
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are redundant.
        let mut drop = vec![false; t.rows];
        for i in 0..t.rows {
            if t.basis[i] < art0 {
                continue;
            }
            let best =
                (0..art0)
                    .map(|j| (j, t.at(i, j).abs()))
                    .fold(None, |acc: Option<(usize, f64)>, (j, a)| match acc {
                        Some((_, ba)) if ba >= a => acc,
                        _ => Some((j, a)),
                    });
            match best {
                Some((j, a)) if a > PIVOT_TOL => t.pivot(i, j),
                _ => drop[i] = true,
            }
        }
        if drop.iter().any(|&d| d) {
            kept.retain(|&i| !drop[i]);
            t.remove_rows(&drop);
        }
    }

    let mut costs = vec![0.0; cols];
    for (v, &c) in p.objective.iter().enumerate() {
        let (pos, neg) = map.columns[v];
        costs[pos] = c;
        if let Some(neg) = neg {
            costs[neg] = -c;
        }
    }
    t.price(&costs);
    let allowed: Vec<bool> = (0..cols).map(|j| j < art0).collect();
    match optimize(&mut t, &allowed, &mut rule)? {
        Outcome::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: Vec::new(),
                objective_value: f64::INFINITY,
                iterations: rule.iterations,
            })
        }
        Outcome::Optimal => {}
    }

    let basic_values = refine_basic_values(&original, cols, &kept, &t.basis)
        .unwrap_or_else(|| (0..t.rows).map(|i| t.rhs(i)).collect());
    let mut x = vec![0.0; cols];
    for (&b, &v) in t.basis.iter().zip(&basic_values) {
        x[b] = v;
    }
    let primal: Vec<f64> = map
        .columns
        .iter()
        .map(|&(pos, neg)| x[pos] - neg.map_or(0.0, |n| x[n]))
        .collect();
    let objective_value = p.objective.iter().zip(&primal).map(|(c, v)| c * v).sum();
    debug_assert!(
        p.max_violation(&primal) <= TOL_FEAS,
        "optimal LP point violates constraints by {}",
        p.max_violation(&primal)
    );
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        objective_value,
        iterations: rule.iterations,
    })
}

/// Solves `B x_B = b` on the original rows for the final basis using Gaussian
/// elimination with partial pivoting. Returns `None` if the basis matrix is
/// numerically singular.
fn refine_basic_values(original: &[f64], cols: usize, kept: &[usize], basis: &[usize]) -> Option<Vec<f64>> {
    let k = kept.len();
    let stride = cols + 1;
    let mut m = vec![0.0; k * (k + 1)];
    for (r, &row) in kept.iter().enumerate() {
        let src = &original[row * stride..(row + 1) * stride];
        for (c, &b) in basis.iter().enumerate() {
            m[r * (k + 1) + c] = src[b];
        }
        m[r * (k + 1) + k] = src[cols];
    }
    solve_dense_in_place(&mut m, k)
}

/// Solves the augmented `k x (k+1)` system in place.
fn solve_dense_in_place(m: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let w = k + 1;
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[piv * w + col].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for j in 0..w {
                m.swap(piv * w + j, col * w + j);
            }
        }
        let inv = 1.0 / m[col * w + col];
        for r in col + 1..k {
            let f = m[r * w + col] * inv;
            if f == 0.0 {
                continue;
            }
            for j in col..w {
                m[r * w + j] -= f * m[col * w + j];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = m[r * w + k];
        for j in r + 1..k {
            s -= m[r * w + j] * x[j];
        }
        x[r] = s / m[r * w + r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn single_upper_bound() {
        let mut p = LpProblem::maximize(vec![1.0]);
        p.add_le(vec![1.0], 3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective_value, 3.0));
    }

    #[test]
    fn no_upper_bound_is_unbounded() {
        let p = LpProblem::maximize(vec![1.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        assert!(s.primal.is_empty());
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::maximize(vec![1.0, 1.0]);
        p.add_le(vec![1.0, 1.0], 1.0);
        p.add_ge(vec![1.0, 1.0], 2.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);

        let mut q = LpProblem::maximize(vec![0.0]);
        q.add_eq(vec![1.0], -1.0);
        assert_eq!(solve_lp(&q).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut p = LpProblem::maximize(vec![3.0, 5.0]);
        p.add_le(vec![1.0, 0.0], 4.0);
        p.add_le(vec![0.0, 2.0], 12.0);
        p.add_le(vec![3.0, 2.0], 18.0);
        let s = solve_lp(&p).unwrap();
        assert!(close(s.objective_value, 36.0));
        assert!(close(s.primal[0], 2.0) && close(s.primal[1], 6.0));
    }

    #[test]
    fn free_variable_goes_negative() {
        // max -z s.t. z >= -5 -> z = -5
        let mut p = LpProblem::maximize(vec![-1.0]);
        p.set_free(0);
        p.add_ge(vec![1.0], -5.0);
        let s = solve_lp(&p).unwrap();
        assert!(close(s.primal[0], -5.0));
        assert!(close(s.objective_value, 5.0));
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut p = LpProblem::maximize(vec![1.0, 2.0]);
        p.add_eq(vec![1.0, 1.0], 1.0);
        p.add_eq(vec![2.0, 2.0], 2.0);
        let s = solve_lp(&p).unwrap();
        assert!(close(s.objective_value, 2.0));
        assert!(close(s.primal[1], 1.0));
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Cycles under textbook Dantzig with lowest-index ties; optimum 1/20.
        let mut p = LpProblem::maximize(vec![0.75, -150.0, 0.02, -6.0]);
        p.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        p.add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        p.add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective_value, 0.05), "{}", s.objective_value);
    }

    #[test]
    fn malformed_rows_rejected() {
        let mut p = LpProblem::maximize(vec![1.0, 1.0]);
        p.add_le(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&p), Err(LpError::Malformed(_))));
        let mut q = LpProblem::maximize(vec![1.0]);
        q.add_le(vec![f64::NAN], 1.0);
        assert!(matches!(solve_lp(&q), Err(LpError::Malformed(_))));
    }

    #[test]
    fn violation_is_scaled() {
        let mut p = LpProblem::maximize(vec![1.0]);
        p.add_le(vec![1.0], 1000.0);
        assert_eq!(p.max_violation(&[1000.0]), 0.0);
        assert!((p.max_violation(&[1001.0]) - 1.0 / 1001.0).abs() < 1e-15);
        assert!(p.max_violation(&[-1.0]) > 0.5);
    }

    #[test]
    fn matching_pennies_victim_lp() {
        // max z s.t. z <= x^T A e_j, sum x = 1 with A = [[1,-1],[-1,1]]
        let mut p = LpProblem::maximize(vec![0.0, 0.0, 1.0]);
        p.set_free(2);
        p.add_le(vec![-1.0, 1.0, 1.0], 0.0);
        p.add_le(vec![1.0, -1.0, 1.0], 0.0);
        p.add_eq(vec![1.0, 1.0, 0.0], 1.0);
        let s = solve_lp(&p).unwrap();
        assert!(s.objective_value.abs() < 1e-12);
        assert!(close(s.primal[0], 0.5) && close(s.primal[1], 0.5));
    }
}
