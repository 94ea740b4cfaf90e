//! Brute-force checks for small instances.
//!
//! None of these routines go through the maximin LP or the dualized exploiter
//! LP, so they can be used to verify both.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{MarkovGame, Player};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::matrix::Matrix;
use crate::policy::MarkovPolicy;

/// Largest victim action count the simplex grid accepts.
pub const GRID_MAX_ACTIONS: usize = 4;
/// Largest `n + m` accepted by vertex enumeration.
pub const VERTEX_MAX_DIM: usize = 16;
/// Largest trajectory count `(S n m)^H` accepted by exhaustive evaluation.
pub const TRAJECTORY_CAP: f64 = 1e7;
/// Feasibility and deduplication tolerance for enumerated vertices.
pub const VERTEX_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GridMaximin {
    pub value: f64,
    pub point: Vec<f64>,
}

/// `max_x min_j x^T A e_j` over the simplex grid with spacing `resolution`.
///
/// Exact at the returned grid point; within `L * resolution` of the true
/// maximin value, where `L` is the largest column range of `a`.
pub fn grid_maximin(a: &Matrix, resolution: f64) -> Result<GridMaximin> {
    let n = a.rows();
    if n > GRID_MAX_ACTIONS {
        return Err(Error::OracleTooLarge(format!(
            "grid search needs at most {GRID_MAX_ACTIONS} victim actions, got {n}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidGame(format!(
            "grid resolution {resolution} not in (0, 1]"
        )));
    }
    let total = (1.0 / resolution).round() as usize;
    if n == 1 {
        let value = a.row(0).iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(GridMaximin {
            value,
            point: vec![1.0],
        });
    }
    // Columns are accumulated in integer grid units and scaled once per point.
    let best = (0..=total)
        .into_par_iter()
        .map(|first| {
            let mut counts = vec![0usize; n];
            counts[0] = first;
            let partial: Vec<f64> = a.row(0).iter().map(|v| first as f64 * v).collect();
            let mut best = (f64::NEG_INFINITY, counts.clone());
            grid_search(a, 1, total - first, &partial, &mut counts, &mut best);
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            (f64::NEG_INFINITY, vec![0; n]),
            |acc, b| if b.0 > acc.0 { b } else { acc },
        );
    let scale = 1.0 / total as f64;
    Ok(GridMaximin {
        value: best.0 * scale,
        point: best.1.iter().map(|&c| c as f64 * scale).collect(),
    })
}

fn grid_search(
    a: &Matrix,
    depth: usize,
    remaining: usize,
    partial: &[f64],
    counts: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    let n = a.rows();
    if depth == n - 1 {
        counts[depth] = remaining;
        let last = a.row(depth);
        let value = partial
            .iter()
            .zip(last)
            .map(|(p, v)| p + remaining as f64 * v)
            .fold(f64::INFINITY, f64::min);
        if value > best.0 {
            *best = (value, counts.clone());
        }
        return;
    }
    let row = a.row(depth);
    let mut next = partial.to_vec();
    for c in 0..=remaining {
        for ((nx, p), v) in next.iter_mut().zip(partial).zip(row) {
            *nx = p + c as f64 * v;
        }
        counts[depth] = c;
        grid_search(a, depth + 1, remaining - c, &next, counts, best);
    }
    counts[depth] = 0;
}

/// `{x : rows_k . x >= rhs_k for all k, 1^T x = 1}` with its vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    pub dimension: usize,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub vertices: Vec<Vec<f64>>,
}

impl Polytope {
    /// The victim's maximin set `{x in simplex : x^T A e_j >= maximin_value}`.
    ///
    /// Vertices are found by trying every choice of `n - 1` active
    /// inequalities alongside the simplex equality.
    pub fn maximin_set(a: &Matrix, maximin_value: f64) -> Result<Polytope> {
        let (n, m) = a.shape();
        if n + m > VERTEX_MAX_DIM {
            return Err(Error::OracleTooLarge(format!(
                "vertex enumeration needs n + m <= {VERTEX_MAX_DIM}, got {}",
                n + m
            )));
        }
        let mut rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                (e, 0.0)
            })
            .collect();
        rows.extend((0..m).map(|j| ((0..n).map(|i| a.get(i, j)).collect(), maximin_value)));

        let mut vertices: Vec<Vec<f64>> = Vec::new();
        for active in (0..rows.len()).combinations(n - 1) {
            let mut system = Vec::with_capacity(n * (n + 1));
            for &k in &active {
                system.extend_from_slice(&rows[k].0);
                system.push(rows[k].1);
            }
            system.extend(std::iter::repeat_n(1.0, n));
            system.push(1.0);
            let Some(x) = gaussian_solve(system, n) else {
                continue;
            };
            let feasible = rows.iter().all(|(coeffs, rhs)| {
                let lhs: f64 = coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
                lhs >= rhs - VERTEX_TOL * rhs.abs().max(1.0)
            });
            if feasible
                && !vertices
                    .iter()
                    .any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= VERTEX_TOL))
            {
                vertices.push(x);
            }
        }
        Ok(Polytope {
            dimension: n,
            rows,
            vertices,
        })
    }
}

/// All vertices of the victim's maximin set for value `maximin_value`.
pub fn maximin_set_vertices(a: &Matrix, maximin_value: f64) -> Result<Vec<Vec<f64>>> {
    Polytope::maximin_set(a, maximin_value).map(|p| p.vertices)
}

/// Gaussian elimination with partial pivoting on an augmented `k x (k+1)` system.
fn gaussian_solve(mut m: Vec<f64>, k: usize) -> Option<Vec<f64>> {
    let w = k + 1;
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[piv * w + col].abs() < 1e-12 {
            return None;
        }
        for j in 0..w {
            m.swap(piv * w + j, col * w + j);
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = m[r * w + col] / m[col * w + col];
            for j in col..w {
                m[r * w + j] -= f * m[col * w + j];
            }
        }
    }
    Some((0..k).map(|r| m[r * w + k] / m[r * w + r]).collect())
}

/// `max_y min_k v_k^T B y` over a finite vertex set, built directly as
/// `max t s.t. t <= v_k^T B y, y in simplex`.
pub fn oracle_exploiter_value(b: &Matrix, vertices: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    if vertices.is_empty() {
        return Err(Error::InvalidGame("vertex list is empty".into()));
    }
    let m = b.cols();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LpProblem::maximize(objective);
    lp.set_free(m);
    for v in vertices {
        if v.len() != b.rows() {
            return Err(Error::Shape(format!(
                "vertex of length {} for {} victim actions",
                v.len(),
                b.rows()
            )));
        }
        let mut row: Vec<f64> = b.left_mul(v).into_iter().map(|c| -c).collect();
        row.push(1.0);
        lp.add_le(row, 0.0);
    }
    let mut simplex = vec![1.0; m];
    simplex.push(0.0);
    lp.add_eq(simplex, 1.0);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::UnexpectedLpStatus(sol.status));
    }
    Ok((sol.primal[m], sol.primal[..m].to_vec()))
}

/// Expected cumulative payoff of `player` by enumerating every trajectory
/// `(s_0, a_0, b_0, s_1, ...)` and weighting its reward sum by its probability.
pub fn exhaustive_policy_eval(
    game: &MarkovGame,
    victim_policy: &MarkovPolicy,
    exploiter_policy: &MarkovPolicy,
    player: Player,
) -> Result<f64> {
    let per_step = (game.states() * game.victim_actions() * game.exploiter_actions()) as f64;
    let trajectories = per_step.powi(game.horizon() as i32);
    if trajectories > TRAJECTORY_CAP {
        return Err(Error::OracleTooLarge(format!(
            "{trajectories:.3e} trajectories exceed the cap of {TRAJECTORY_CAP:.0e}"
        )));
    }
    if victim_policy.horizon() != game.horizon()
        || victim_policy.states() != game.states()
        || victim_policy.actions() != game.victim_actions()
        || exploiter_policy.horizon() != game.horizon()
        || exploiter_policy.states() != game.states()
        || exploiter_policy.actions() != game.exploiter_actions()
    {
        return Err(Error::Shape("policies do not match the game".into()));
    }
    // Fail early if the reward tensor is missing.
    game.reward(player, 0, 0)?;
    let mut total = 0.0;
    for (s, &p) in game.initial().iter().enumerate() {
        if p > 0.0 {
            total += walk(game, victim_policy, exploiter_policy, player, 0, s, p, 0.0);
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    game: &MarkovGame,
    pi: &MarkovPolicy,
    nu: &MarkovPolicy,
    player: Player,
    step: usize,
    state: usize,
    prob: f64,
    accumulated: f64,
) -> f64 {
    let reward = game.reward(player, step, state).expect("checked above");
    let x = pi.decision(step, state).probs();
    let y = nu.decision(step, state).probs();
    let last = step + 1 == game.horizon();
    let mut total = 0.0;
    for (a, &xa) in x.iter().enumerate() {
        for (b, &yb) in y.iter().enumerate() {
            let p = prob * xa * yb;
            if p == 0.0 {
                continue;
            }
            let acc = accumulated + reward.get(a, b);
            if last {
                total += p * acc;
                continue;
            }
            for (next, &pt) in game.transition(step, state, a, b).iter().enumerate() {
                if pt > 0.0 {
                    total += walk(game, pi, nu, player, step + 1, next, p * pt, acc);
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn motivating() -> (Matrix, Matrix) {
        let a = Matrix::from_rows(&[[10.0, 10.0], [10.0, 10.0], [-1.0, -1.0]]).unwrap();
        let b = Matrix::from_rows(&[[20.0, -1.0], [10.0, -1.0], [-1.0, 0.0]]).unwrap();
        (a, b)
    }

    #[test]
    fn grid_on_known_games() {
        let pennies = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let g = grid_maximin(&pennies, 1e-3).unwrap();
        assert!(g.value.abs() <= 2e-3);
        assert_eq!(grid_maximin(&Matrix::zeros(3, 2), 1e-2).unwrap().value, 0.0);
        let (a, _) = motivating();
        assert!((grid_maximin(&a, 1e-2).unwrap().value - 10.0).abs() < 1e-9);
        assert!(matches!(
            grid_maximin(&Matrix::zeros(5, 2), 0.1),
            Err(Error::OracleTooLarge(_))
        ));
    }

    #[test]
    fn vertices_of_known_sets() {
        let (a, _) = motivating();
        let mut v = maximin_set_vertices(&a, 10.0).unwrap();
        v.sort_by(|p, q| q.partial_cmp(p).unwrap());
        assert_eq!(v, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);

        let whole = maximin_set_vertices(&Matrix::zeros(3, 2), 0.0).unwrap();
        assert_eq!(whole.len(), 3);

        let pennies = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let v = maximin_set_vertices(&pennies, 0.0).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0][0] - 0.5).abs() < 1e-12);

        assert!(maximin_set_vertices(&Matrix::zeros(10, 7), 0.0).is_err());
    }

    #[test]
    fn exploiter_oracle_motivating() {
        let (a, b) = motivating();
        let v = maximin_set_vertices(&a, 10.0).unwrap();
        let (value, y) = oracle_exploiter_value(&b, &v).unwrap();
        assert!((value - 10.0).abs() < 1e-9);
        assert!((y[0] - 1.0).abs() < 1e-9);
        let (zero, _) = oracle_exploiter_value(&Matrix::zeros(3, 2), &v).unwrap();
        assert_eq!(zero, 0.0);
        assert!(oracle_exploiter_value(&b, &[]).is_err());
    }

    #[test]
    fn exhaustive_eval_respects_cap() {
        use crate::game::MarkovDims;
        let dims = MarkovDims {
            states: 10,
            victim_actions: 3,
            exploiter_actions: 3,
            horizon: 5,
        };
        let g = MarkovGame::new(dims, vec![Matrix::zeros(3, 3); 50], None, vec![0.1; 50 * 9 * 10], {
            let mut mu = vec![0.0; 10];
            mu[0] = 1.0;
            mu
        })
        .unwrap();
        let pi = MarkovPolicy::uniform(Player::Victim, 5, 10, 3);
        let nu = MarkovPolicy::uniform(Player::Exploiter, 5, 10, 3);
        assert!(matches!(
            exhaustive_policy_eval(&g, &pi, &nu, Player::Victim),
            Err(Error::OracleTooLarge(_))
        ));
    }
}
