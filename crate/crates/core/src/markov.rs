//! Markov-perfect VISER policies by backward induction.
//!
//! At each `(step, state)` the stage game adds the expected continuation value
//! to the immediate reward:
//!
//! ```text
//! Q_h(s)[a, b] = R_h(s)[a, b] + sum_{s'} P_h(s' | s, a, b) V_{h+1}(s')
//! ```
//!
//! The victim solves its maximin LP on `Q_hv(s)`; the exploiter additionally
//! solves the worst-case best-response LP on `(Q_hv(s), Q_he(s))`. States at
//! one step are independent given the next step's values and are solved in
//! parallel; steps run strictly backwards.

use rayon::prelude::*;

use crate::bimatrix::{in_exploiter_set, in_victim_set, solve_exploiter_given_value, solve_victim};
use crate::error::{Error, Result};
use crate::game::{MarkovGame, Player};
use crate::matrix::Matrix;
use crate::policy::{MarkovPolicy, ValueTable};
use crate::strategy::MixedStrategy;

/// The bimatrix game faced at one `(step, state)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StageGame {
    pub step: usize,
    pub state: usize,
    pub victim: Matrix,
    pub exploiter: Option<Matrix>,
}

/// Exploiter dual multipliers `(w, alpha)` for one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageDual {
    pub weights: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpviserResult {
    pub player: Player,
    pub policy: MarkovPolicy,
    /// Stage values of `player`.
    pub values: ValueTable,
    /// Victim stage values, present on exploiter runs.
    pub victim_values: Option<ValueTable>,
    /// `sum_s mu(s) V_0(s)`.
    pub guaranteed_payoff: f64,
    /// Step-major stage duals, present on exploiter runs.
    pub duals: Option<Vec<StageDual>>,
    pub lp_iterations: usize,
}

/// Certificate tolerance at `step`: `base * (H - step)`, since LP error
/// accumulates through the continuation values.
pub fn stage_tolerance(base: f64, horizon: usize, step: usize) -> f64 {
    base * (horizon - step) as f64
}

/// `Q_h(s)` for `player`. `values` must hold that player's values at `step + 1`;
/// it is not read at the final step.
pub fn stage_matrix(
    game: &MarkovGame,
    step: usize,
    state: usize,
    player: Player,
    values: &ValueTable,
) -> Result<Matrix> {
    let reward = game.reward(player, step, state)?;
    if step + 1 == game.horizon() {
        return Ok(reward.clone());
    }
    let next = values.step(step + 1);
    let (n, m) = (game.victim_actions(), game.exploiter_actions());
    let mut q = reward.clone();
    for a in 0..n {
        for b in 0..m {
            let cont: f64 = game
                .transition(step, state, a, b)
                .iter()
                .zip(next)
                .map(|(p, v)| p * v)
                .sum();
            q.set(a, b, q.get(a, b) + cont);
        }
    }
    Ok(q)
}

/// Both stage matrices at `(step, state)`; the exploiter one only when
/// `exploiter_values` is given.
pub fn stage_game(
    game: &MarkovGame,
    step: usize,
    state: usize,
    victim_values: &ValueTable,
    exploiter_values: Option<&ValueTable>,
) -> Result<StageGame> {
    let victim = stage_matrix(game, step, state, Player::Victim, victim_values)?;
    let exploiter = exploiter_values
        .map(|v| stage_matrix(game, step, state, Player::Exploiter, v))
        .transpose()?;
    Ok(StageGame {
        step,
        state,
        victim,
        exploiter,
    })
}

fn in_stage<T>(step: usize, state: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        step,
        state,
        source: Box::new(e),
    })
}

/// Victim backward induction. Reads only the victim's rewards.
pub fn solve_victim_markov(game: &MarkovGame) -> Result<MpviserResult> {
    let (horizon, states) = (game.horizon(), game.states());
    let mut values = ValueTable::zeros(Player::Victim, horizon, states);
    let mut decisions = vec![None; horizon * states];
    let mut iterations = 0;
    for h in (0..horizon).rev() {
        let stage: Vec<(MixedStrategy, f64, usize)> = (0..states)
            .into_par_iter()
            .map(|s| {
                in_stage(
                    h,
                    s,
                    (|| {
                        let q = stage_matrix(game, h, s, Player::Victim, &values)?;
                        let v = solve_victim(&q)?;
                        Ok((v.strategy, v.guaranteed_payoff, v.lp_iterations))
                    })(),
                )
            })
            .collect::<Result<_>>()?;
        for (s, (strategy, value, its)) in stage.into_iter().enumerate() {
            values.set(h, s, value);
            decisions[h * states + s] = Some(strategy);
            iterations += its;
        }
    }
    let policy = MarkovPolicy::new(
        Player::Victim,
        horizon,
        states,
        decisions.into_iter().map(|d| d.expect("every stage solved")).collect(),
    )?;
    Ok(MpviserResult {
        player: Player::Victim,
        guaranteed_payoff: values.expected_initial(game.initial()),
        policy,
        values,
        victim_values: None,
        duals: None,
        lp_iterations: iterations,
    })
}

struct ExploiterStage {
    victim_value: f64,
    strategy: MixedStrategy,
    value: f64,
    dual: StageDual,
    iterations: usize,
}

/// Exploiter backward induction: recomputes the victim's stage values and
/// best-responds to the victim's maximin set at every stage in one loop.
pub fn solve_exploiter_markov(game: &MarkovGame) -> Result<MpviserResult> {
    if !game.has_exploiter_rewards() {
        return Err(Error::MissingInformation("exploiter rewards are required"));
    }
    let (horizon, states) = (game.horizon(), game.states());
    let mut victim_values = ValueTable::zeros(Player::Victim, horizon, states);
    let mut values = ValueTable::zeros(Player::Exploiter, horizon, states);
    let mut decisions = vec![None; horizon * states];
    let mut duals = vec![None; horizon * states];
    let mut iterations = 0;
    for h in (0..horizon).rev() {
        let stage: Vec<ExploiterStage> = (0..states)
            .into_par_iter()
            .map(|s| {
                in_stage(
                    h,
                    s,
                    (|| {
                        let sg = stage_game(game, h, s, &victim_values, Some(&values))?;
                        let qe = sg.exploiter.as_ref().expect("exploiter stage requested");
                        let v = solve_victim(&sg.victim)?;
                        let e = solve_exploiter_given_value(&sg.victim, qe, v.guaranteed_payoff, 0.0)?;
                        Ok(ExploiterStage {
                            victim_value: v.guaranteed_payoff,
                            strategy: e.strategy,
                            value: e.guaranteed_payoff,
                            dual: StageDual {
                                weights: e.dual_weights,
                                offset: e.dual_offset,
                            },
                            iterations: v.lp_iterations + e.lp_iterations,
                        })
                    })(),
                )
            })
            .collect::<Result<_>>()?;
        for (s, st) in stage.into_iter().enumerate() {
            victim_values.set(h, s, st.victim_value);
            values.set(h, s, st.value);
            decisions[h * states + s] = Some(st.strategy);
            duals[h * states + s] = Some(st.dual);
            iterations += st.iterations;
        }
    }
    let policy = MarkovPolicy::new(
        Player::Exploiter,
        horizon,
        states,
        decisions.into_iter().map(|d| d.expect("every stage solved")).collect(),
    )?;
    Ok(MpviserResult {
        player: Player::Exploiter,
        guaranteed_payoff: values.expected_initial(game.initial()),
        policy,
        values,
        victim_values: Some(victim_values),
        duals: Some(duals.into_iter().map(|d| d.expect("every stage solved")).collect()),
        lp_iterations: iterations,
    })
}

/// Whether `strategy` is a victim maximin strategy of the stage game at
/// `(step, state)`, given the victim values of a [`solve_victim_markov`] run.
pub fn stage_membership(
    game: &MarkovGame,
    victim_result: &MpviserResult,
    step: usize,
    state: usize,
    strategy: &[f64],
    tol: f64,
) -> Result<bool> {
    let values = victim_result_values(victim_result)?;
    let q = stage_matrix(game, step, state, Player::Victim, values)?;
    Ok(in_victim_set(&q, values.get(step, state), strategy, tol))
}

/// Exploiter analogue of [`stage_membership`], given a [`solve_exploiter_markov`] run.
pub fn exploiter_stage_membership(
    game: &MarkovGame,
    exploiter_result: &MpviserResult,
    step: usize,
    state: usize,
    strategy: &[f64],
    tol: f64,
) -> Result<bool> {
    let victim_values = exploiter_result
        .victim_values
        .as_ref()
        .filter(|_| exploiter_result.player == Player::Exploiter)
        .ok_or(Error::MissingInformation("an exploiter run is required"))?;
    let sg = stage_game(game, step, state, victim_values, Some(&exploiter_result.values))?;
    let qe = sg.exploiter.as_ref().expect("exploiter stage requested");
    in_exploiter_set(
        &sg.victim,
        qe,
        victim_values.get(step, state),
        exploiter_result.values.get(step, state),
        strategy,
        tol,
    )
}

fn victim_result_values(r: &MpviserResult) -> Result<&ValueTable> {
    match r.player {
        Player::Victim => Ok(&r.values),
        Player::Exploiter => r
            .victim_values
            .as_ref()
            .ok_or(Error::MissingInformation("victim values are missing")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MarkovDims;

    fn uniform_game(rewards: Matrix, states: usize, horizon: usize) -> MarkovGame {
        let (n, m) = rewards.shape();
        let dims = MarkovDims {
            states,
            victim_actions: n,
            exploiter_actions: m,
            horizon,
        };
        let mut mu = vec![0.0; states];
        mu[0] = 1.0;
        MarkovGame::new(
            dims,
            vec![rewards.clone(); horizon * states],
            Some(vec![rewards.neg(); horizon * states]),
            vec![1.0 / states as f64; horizon * states * n * m * states],
            mu,
        )
        .unwrap()
    }

    #[test]
    fn final_step_is_reward() {
        let r = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let g = uniform_game(r.clone(), 2, 3);
        let v = ValueTable::zeros(Player::Victim, 3, 2);
        assert_eq!(stage_matrix(&g, 2, 1, Player::Victim, &v).unwrap(), r);
    }

    #[test]
    fn uniform_transitions_add_constant() {
        let r = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let g = uniform_game(r.clone(), 2, 3);
        let mut v = ValueTable::zeros(Player::Victim, 3, 2);
        v.step_mut(2).copy_from_slice(&[7.0, 7.0]);
        let q = stage_matrix(&g, 1, 0, Player::Victim, &v).unwrap();
        let expected = r.shift(7.0);
        for (x, y) in q.as_slice().iter().zip(expected.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_matches_bimatrix() {
        let r = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let g = uniform_game(r.clone(), 1, 1);
        let res = solve_victim_markov(&g).unwrap();
        let direct = solve_victim(&r).unwrap();
        assert!((res.guaranteed_payoff - direct.guaranteed_payoff).abs() < 1e-12);
    }

    #[test]
    fn exploiter_needs_rewards() {
        let r = Matrix::zeros(2, 2);
        let g = uniform_game(r, 1, 2).victim_view();
        assert!(matches!(solve_exploiter_markov(&g), Err(Error::MissingInformation(_))));
        assert!(solve_victim_markov(&g).is_ok());
    }

    #[test]
    fn own_policy_is_stage_optimal() {
        let r = Matrix::from_rows(&[[3.0, -1.0, 0.5], [-2.0, 1.0, 0.0]]).unwrap();
        let g = uniform_game(r, 3, 4);
        let v = solve_victim_markov(&g).unwrap();
        let e = solve_exploiter_markov(&g).unwrap();
        for h in 0..4 {
            for s in 0..3 {
                let tol = stage_tolerance(crate::TOL_VERIFY, 4, h);
                assert!(stage_membership(&g, &v, h, s, v.policy.decision(h, s).probs(), tol).unwrap());
                assert!(exploiter_stage_membership(&g, &e, h, s, e.policy.decision(h, s).probs(), tol).unwrap());
            }
        }
    }
}
