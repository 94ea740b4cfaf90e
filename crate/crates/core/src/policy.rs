//! Markov policies, value tables and exact payoff evaluation.

use crate::error::{Error, Result};
use crate::game::{MarkovGame, Player};
use crate::matrix::Matrix;
use crate::strategy::MixedStrategy;

/// Expected payoff `x^T M y`.
pub fn bimatrix_payoff(x: &MixedStrategy, payoffs: &Matrix, y: &MixedStrategy) -> Result<f64> {
    if x.len() != payoffs.rows() || y.len() != payoffs.cols() {
        return Err(Error::Shape(format!(
            "strategies of length {} and {} do not fit a {}x{} matrix",
            x.len(),
            y.len(),
            payoffs.rows(),
            payoffs.cols()
        )));
    }
    Ok(payoff_raw(x.probs(), payoffs, y.probs()))
}

pub(crate) fn payoff_raw(x: &[f64], payoffs: &Matrix, y: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .filter(|(_, &xi)| xi != 0.0)
        .map(|(i, &xi)| xi * payoffs.row(i).iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Per-`(step, state)` mixed strategies for one player.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovPolicy {
    owner: Player,
    horizon: usize,
    states: usize,
    decisions: Vec<MixedStrategy>,
}

impl MarkovPolicy {
    /// `decisions` is ordered by step, then state.
    pub fn new(owner: Player, horizon: usize, states: usize, decisions: Vec<MixedStrategy>) -> Result<Self> {
        if decisions.len() != horizon * states {
            return Err(Error::Shape(format!(
                "policy has {} decisions, expected {}",
                decisions.len(),
                horizon * states
            )));
        }
        if let Some(first) = decisions.first() {
            if decisions.iter().any(|d| d.len() != first.len()) {
                return Err(Error::Shape("policy decisions differ in length".into()));
            }
        }
        Ok(Self {
            owner,
            horizon,
            states,
            decisions,
        })
    }

    pub fn uniform(owner: Player, horizon: usize, states: usize, actions: usize) -> Self {
        Self {
            owner,
            horizon,
            states,
            decisions: vec![MixedStrategy::uniform(actions); horizon * states],
        }
    }

    pub fn owner(&self) -> Player {
        self.owner
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.decisions.first().map_or(0, MixedStrategy::len)
    }

    pub fn decision(&self, step: usize, state: usize) -> &MixedStrategy {
        &self.decisions[step * self.states + state]
    }

    pub fn set_decision(&mut self, step: usize, state: usize, strategy: MixedStrategy) {
        assert_eq!(strategy.len(), self.actions());
        self.decisions[step * self.states + state] = strategy;
    }

    pub fn decisions(&self) -> &[MixedStrategy] {
        &self.decisions
    }
}

/// Per-`(step, state)` values for one player.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    owner: Player,
    horizon: usize,
    states: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(owner: Player, horizon: usize, states: usize) -> Self {
        Self {
            owner,
            horizon,
            states,
            values: vec![0.0; horizon * states],
        }
    }

    pub fn owner(&self) -> Player {
        self.owner
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn get(&self, step: usize, state: usize) -> f64 {
        self.values[step * self.states + state]
    }

    pub fn set(&mut self, step: usize, state: usize, v: f64) {
        self.values[step * self.states + state] = v;
    }

    /// Values of every state at `step`.
    pub fn step(&self, step: usize) -> &[f64] {
        &self.values[step * self.states..(step + 1) * self.states]
    }

    pub fn step_mut(&mut self, step: usize) -> &mut [f64] {
        &mut self.values[step * self.states..(step + 1) * self.states]
    }

    /// `sum_s mu(s) V_0(s)`.
    pub fn expected_initial(&self, initial: &[f64]) -> f64 {
        initial.iter().zip(self.step(0)).map(|(p, v)| p * v).sum()
    }
}

fn check_policy(game: &MarkovGame, policy: &MarkovPolicy, owner: Player) -> Result<()> {
    let actions = match owner {
        Player::Victim => game.victim_actions(),
        Player::Exploiter => game.exploiter_actions(),
    };
    if policy.horizon() != game.horizon() || policy.states() != game.states() || policy.actions() != actions {
        return Err(Error::Shape(format!(
            "{owner} policy covers H={} S={} with {} actions, game has H={} S={} with {actions}",
            policy.horizon(),
            policy.states(),
            policy.actions(),
            game.horizon(),
            game.states()
        )));
    }
    Ok(())
}

/// Values `V_h(s)` of `player` under the fixed policy pair, by backward recursion.
pub fn evaluate_policies(
    game: &MarkovGame,
    victim_policy: &MarkovPolicy,
    exploiter_policy: &MarkovPolicy,
    player: Player,
) -> Result<ValueTable> {
    check_policy(game, victim_policy, Player::Victim)?;
    check_policy(game, exploiter_policy, Player::Exploiter)?;
    let (horizon, states) = (game.horizon(), game.states());
    let (n, m) = (game.victim_actions(), game.exploiter_actions());
    let mut table = ValueTable::zeros(player, horizon, states);
    for h in (0..horizon).rev() {
        for s in 0..states {
            let reward = game.reward(player, h, s)?;
            let x = victim_policy.decision(h, s).probs();
            let y = exploiter_policy.decision(h, s).probs();
            let mut v = 0.0;
            for a in 0..n {
                if x[a] == 0.0 {
                    continue;
                }
                for b in 0..m {
                    let p = x[a] * y[b];
                    if p == 0.0 {
                        continue;
                    }
                    let mut q = reward.get(a, b);
                    if h + 1 < horizon {
                        q += game
                            .transition(h, s, a, b)
                            .iter()
                            .zip(table.step(h + 1))
                            .map(|(pt, vn)| pt * vn)
                            .sum::<f64>();
                    }
                    v += p * q;
                }
            }
            table.set(h, s, v);
        }
    }
    Ok(table)
}
