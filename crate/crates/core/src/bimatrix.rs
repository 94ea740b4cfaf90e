//! VISER strategies for bimatrix games.
//!
//! The victim solves its maximin LP on `A` alone. The exploiter first
//! recomputes the victim's maximin value `z*` (it knows `A`), then solves the
//! dualized worst-case best-response LP
//!
//! ```text
//! max_{y, w >= 0, alpha}  z* 1^T w - alpha
//! s.t.  alpha + e_i^T B y - e_i^T A w >= 0   for every victim action i
//!       1^T y = 1, y >= 0
//! ```
//!
//! whose optimum is the exploiter's guaranteed payoff against every member of
//! the victim's maximin set.

use crate::error::{Error, Result};
use crate::game::BimatrixGame;
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::matrix::Matrix;
use crate::strategy::MixedStrategy;

/// Relative slack subtracted from `z*` in the exploiter LP so that a slightly
/// overestimated maximin value cannot empty the victim's set.
const MAXIMIN_SLACK: f64 = 1e-9;
const SLACK_RETRY_FACTOR: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct VictimSolution {
    pub strategy: MixedStrategy,
    /// Maximin value `z*`, the victim's guaranteed payoff.
    pub guaranteed_payoff: f64,
    pub lp_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExploiterSolution {
    pub strategy: MixedStrategy,
    /// Multipliers `w >= 0` on the victim's maximin constraints.
    pub dual_weights: Vec<f64>,
    /// Multiplier `alpha` on the victim's simplex constraint.
    pub dual_offset: f64,
    /// `(z* - epsilon - slack) 1^T w - alpha`: a lower bound on `x^T B y` over
    /// every `x` in the victim's epsilon-maximin set.
    pub guaranteed_payoff: f64,
    /// The victim's maximin value `z*`.
    pub maximin_value: f64,
    pub epsilon: f64,
    /// Numerical slack actually subtracted from `z* - epsilon`.
    pub slack: f64,
    pub lp_iterations: usize,
}

impl ExploiterSolution {
    /// The right-hand side the victim's set was relaxed to: `z* - epsilon - slack`.
    pub fn effective_threshold(&self) -> f64 {
        self.maximin_value - self.epsilon - self.slack
    }

    /// Checks the dual certificate `(y, w, alpha)` against the game: `w >= 0`,
    /// every row `alpha + B_i y - A_i w >= 0`, and the objective reproduces the
    /// guaranteed payoff, all within `tol`.
    pub fn certificate_holds(&self, a: &Matrix, b: &Matrix, tol: f64) -> bool {
        if self.dual_weights.len() != a.cols() || self.strategy.len() != a.cols() {
            return false;
        }
        if self.dual_weights.iter().any(|&w| w < -tol) {
            return false;
        }
        let by = b.right_mul(self.strategy.probs());
        let aw = a.right_mul(&self.dual_weights);
        let rows_ok = by
            .iter()
            .zip(&aw)
            .all(|(byi, awi)| self.dual_offset + byi - awi >= -tol);
        let objective = self.effective_threshold() * self.dual_weights.iter().sum::<f64>() - self.dual_offset;
        rows_ok && (objective - self.guaranteed_payoff).abs() <= tol
    }
}

fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidGame(format!("{what} payoffs are empty")));
    }
    if !m.is_finite() {
        return Err(Error::InvalidGame(format!("{what} payoffs must be finite")));
    }
    Ok(())
}

/// Victim maximin strategy: `max z s.t. z <= x^T A e_j for all j, x in simplex`.
pub fn solve_victim(a: &Matrix) -> Result<VictimSolution> {
    check_finite(a, "victim")?;
    let (n, m) = a.shape();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LpProblem::maximize(objective);
    lp.set_free(n);
    for j in 0..m {
        let mut row: Vec<f64> = (0..n).map(|i| -a.get(i, j)).collect();
        row.push(1.0);
        lp.add_le(row, 0.0);
    }
    let mut simplex = vec![1.0; n];
    simplex.push(0.0);
    lp.add_eq(simplex, 1.0);

    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::UnexpectedLpStatus(sol.status));
    }
    Ok(VictimSolution {
        strategy: MixedStrategy::new(sol.primal[..n].to_vec())?,
        guaranteed_payoff: sol.primal[n],
        lp_iterations: sol.iterations,
    })
}

/// Exploiter worst-case best response to the victim's epsilon-maximin set.
/// Recomputes the victim's maximin value from `a` itself.
pub fn solve_exploiter(a: &Matrix, b: &Matrix, epsilon: f64) -> Result<ExploiterSolution> {
    let victim = solve_victim(a)?;
    let mut sol = solve_exploiter_given_value(a, b, victim.guaranteed_payoff, epsilon)?;
    sol.lp_iterations += victim.lp_iterations;
    Ok(sol)
}

/// Exploiter LP for a known victim maximin value `maximin_value`. Used by the
/// Markov solver, which already has the stage values.
pub fn solve_exploiter_given_value(
    a: &Matrix,
    b: &Matrix,
    maximin_value: f64,
    epsilon: f64,
) -> Result<ExploiterSolution> {
    check_finite(a, "victim")?;
    check_finite(b, "exploiter")?;
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "victim payoffs are {:?}, exploiter payoffs are {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidGame(format!(
            "epsilon must be a finite nonnegative number, got {epsilon}"
        )));
    }
    let mut slack = MAXIMIN_SLACK * maximin_value.abs().max(1.0);
    let mut iterations = 0;
    for _ in 0..2 {
        let threshold = maximin_value - epsilon - slack;
        let lp = exploiter_lp(a, b, threshold);
        let sol = solve_lp(&lp)?;
        iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {
                let m = a.cols();
                let weights: Vec<f64> = sol.primal[m..2 * m].iter().map(|w| w.max(0.0)).collect();
                let offset = sol.primal[2 * m];
                return Ok(ExploiterSolution {
                    strategy: MixedStrategy::new(sol.primal[..m].to_vec())?,
                    // `+ 0.0` turns a -0.0 objective into 0.0.
                    guaranteed_payoff: threshold * weights.iter().sum::<f64>() - offset + 0.0,
                    dual_weights: weights,
                    dual_offset: offset,
                    maximin_value,
                    epsilon,
                    slack,
                    lp_iterations: iterations,
                });
            }
            LpStatus::Unbounded => slack *= SLACK_RETRY_FACTOR,
            LpStatus::Infeasible => return Err(Error::UnexpectedLpStatus(sol.status)),
        }
    }
    Err(Error::EmptyVictimSet)
}

/// Variables `[y (m) | w (m) | alpha]`.
fn exploiter_lp(a: &Matrix, b: &Matrix, threshold: f64) -> LpProblem {
    let (n, m) = a.shape();
    let mut objective = vec![0.0; 2 * m + 1];
    objective[m..2 * m].iter_mut().for_each(|c| *c = threshold);
    objective[2 * m] = -1.0;
    let mut lp = LpProblem::maximize(objective);
    lp.set_free(2 * m);
    for i in 0..n {
        // -(B_i y) + A_i w - alpha <= 0
        let mut row = Vec::with_capacity(2 * m + 1);
        row.extend(b.row(i).iter().map(|v| -v));
        row.extend_from_slice(a.row(i));
        row.push(-1.0);
        lp.add_le(row, 0.0);
    }
    let mut simplex = vec![0.0; 2 * m + 1];
    simplex[..m].iter_mut().for_each(|c| *c = 1.0);
    lp.add_eq(simplex, 1.0);
    lp
}

/// Solves both players' parts of a VISER pair independently.
pub fn solve_viser(game: &BimatrixGame) -> Result<(VictimSolution, ExploiterSolution)> {
    let b = game
        .exploiter_payoffs()
        .ok_or(Error::MissingInformation("exploiter payoffs are required"))?;
    let victim = solve_victim(game.victim_payoffs())?;
    let exploiter = solve_exploiter(game.victim_payoffs(), b, 0.0)?;
    Ok((victim, exploiter))
}

fn in_simplex(x: &[f64], len: usize, tol: f64) -> bool {
    x.len() == len && x.iter().all(|&p| p >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// Whether `x` lies in `{x in simplex : x^T A e_j >= maximin_value for all j}`, within `tol`.
pub fn in_victim_set(a: &Matrix, maximin_value: f64, x: &[f64], tol: f64) -> bool {
    in_simplex(x, a.rows(), tol) && a.left_mul(x).iter().all(|&col| col >= maximin_value - tol)
}

/// Whether `y` is a worst-case best response: some `w >= 0` satisfies
/// `B_i y + (threshold 1^T - A_i) w >= payoff` for every `i`, each row relaxed by `tol`.
///
/// `threshold` is the victim maximin value (minus epsilon for relaxed sets).
pub fn in_exploiter_set(a: &Matrix, b: &Matrix, threshold: f64, payoff: f64, y: &[f64], tol: f64) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(Error::Shape("payoff matrices differ in shape".into()));
    }
    if !in_simplex(y, a.cols(), tol) {
        return Ok(false);
    }
    let (n, m) = a.shape();
    let by = b.right_mul(y);
    let mut lp = LpProblem::maximize(vec![0.0; m]);
    for i in 0..n {
        // sum_j (A_ij - threshold) w_j <= B_i y - payoff + tol
        let row = (0..m).map(|j| a.get(i, j) - threshold).collect();
        lp.add_le(row, by[i] - payoff + tol);
    }
    Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
}

/// The exploiter's own security strategy, ignoring what it knows about the
/// victim: the maximin of `B` over columns, i.e. [`solve_victim`] on `B^T`.
pub fn exploiter_security(b: &Matrix) -> Result<VictimSolution> {
    solve_victim(&b.transpose())
}
