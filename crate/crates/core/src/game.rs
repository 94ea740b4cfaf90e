//! Bimatrix and finite-horizon Markov game definitions.
//!
//! Steps are indexed from 0 (`0..horizon`), states from 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probability vectors (transitions, initial distribution) must sum to one
/// within this tolerance.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Victim,
    Exploiter,
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Player::Victim => "victim",
            Player::Exploiter => "exploiter",
        })
    }
}

/// Two-player game with victim payoffs `A` and, when known, exploiter payoffs `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BimatrixGame {
    victim: Matrix,
    exploiter: Option<Matrix>,
}

impl BimatrixGame {
    pub fn new(victim: Matrix, exploiter: Option<Matrix>) -> Result<Self> {
        let (n, m) = victim.shape();
        if n == 0 || m == 0 {
            return Err(Error::InvalidGame(format!("payoff matrix is {n}x{m}")));
        }
        if !victim.is_finite() {
            return Err(Error::InvalidGame("victim payoffs must be finite".into()));
        }
        if let Some(b) = &exploiter {
            if b.shape() != victim.shape() {
                return Err(Error::Shape(format!(
                    "exploiter payoffs are {:?}, victim payoffs are {:?}",
                    b.shape(),
                    victim.shape()
                )));
            }
            if !b.is_finite() {
                return Err(Error::InvalidGame("exploiter payoffs must be finite".into()));
            }
        }
        Ok(Self { victim, exploiter })
    }

    pub fn victim_actions(&self) -> usize {
        self.victim.rows()
    }

    pub fn exploiter_actions(&self) -> usize {
        self.victim.cols()
    }

    pub fn victim_payoffs(&self) -> &Matrix {
        &self.victim
    }

    pub fn exploiter_payoffs(&self) -> Option<&Matrix> {
        self.exploiter.as_ref()
    }

    /// The victim's view of the game: its own payoffs only.
    pub fn victim_view(&self) -> BimatrixGame {
        BimatrixGame {
            victim: self.victim.clone(),
            exploiter: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MarkovDims {
    pub states: usize,
    pub victim_actions: usize,
    pub exploiter_actions: usize,
    pub horizon: usize,
}

impl MarkovDims {
    /// `H * S * n * m`, the entry count used to size experiments.
    pub fn total_entries(&self) -> usize {
        self.horizon * self.states * self.victim_actions * self.exploiter_actions
    }

    fn stages(&self) -> usize {
        self.horizon * self.states
    }
}

/// Finite-horizon two-player Markov game.
///
/// Rewards are one `n x m` matrix per `(step, state)`, stored at
/// `step * states + state`. Transitions are a flat tensor indexed
/// `(step, state, victim action, exploiter action, next state)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovGame {
    dims: MarkovDims,
    rewards_v: Vec<Matrix>,
    rewards_e: Option<Vec<Matrix>>,
    transitions: Vec<f64>,
    initial: Vec<f64>,
}

impl MarkovGame {
    pub fn new(
        dims: MarkovDims,
        rewards_v: Vec<Matrix>,
        rewards_e: Option<Vec<Matrix>>,
        transitions: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let MarkovDims {
            states,
            victim_actions: n,
            exploiter_actions: m,
            horizon,
        } = dims;
        if states == 0 || n == 0 || m == 0 || horizon == 0 {
            return Err(Error::InvalidGame(format!(
                "need at least one state, action and step, got S={states} n={n} m={m} H={horizon}"
            )));
        }
        check_rewards(&rewards_v, dims, "victim")?;
        if let Some(re) = &rewards_e {
            check_rewards(re, dims, "exploiter")?;
        }
        let expected = dims.stages() * n * m * states;
        if transitions.len() != expected {
            return Err(Error::Shape(format!(
                "transition tensor has {} entries, expected {expected}",
                transitions.len()
            )));
        }
        for (k, dist) in transitions.chunks(states).enumerate() {
            check_distribution(dist).map_err(|msg| {
                let (rest, b) = (k / m, k % m);
                let (rest, a) = (rest / n, rest % n);
                let (h, s) = (rest / states, rest % states);
                Error::InvalidGame(format!("transition at step {h}, state {s}, actions ({a}, {b}): {msg}"))
            })?;
        }
        if initial.len() != states {
            return Err(Error::Shape(format!(
                "initial distribution has {} entries for {states} states",
                initial.len()
            )));
        }
        check_distribution(&initial).map_err(|msg| Error::InvalidGame(format!("initial distribution: {msg}")))?;
        Ok(Self {
            dims,
            rewards_v,
            rewards_e,
            transitions,
            initial,
        })
    }

    pub fn dims(&self) -> MarkovDims {
        self.dims
    }

    pub fn states(&self) -> usize {
        self.dims.states
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    pub fn victim_actions(&self) -> usize {
        self.dims.victim_actions
    }

    pub fn exploiter_actions(&self) -> usize {
        self.dims.exploiter_actions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn has_exploiter_rewards(&self) -> bool {
        self.rewards_e.is_some()
    }

    pub fn victim_reward(&self, step: usize, state: usize) -> &Matrix {
        &self.rewards_v[self.stage_index(step, state)]
    }

    pub fn exploiter_reward(&self, step: usize, state: usize) -> Option<&Matrix> {
        let idx = self.stage_index(step, state);
        self.rewards_e.as_ref().map(|r| &r[idx])
    }

    pub fn reward(&self, player: Player, step: usize, state: usize) -> Result<&Matrix> {
        match player {
            Player::Victim => Ok(self.victim_reward(step, state)),
            Player::Exploiter => self
                .exploiter_reward(step, state)
                .ok_or(Error::MissingInformation("game has no exploiter rewards")),
        }
    }

    /// Next-state distribution after `(victim_action, exploiter_action)` at `(step, state)`.
    pub fn transition(&self, step: usize, state: usize, victim_action: usize, exploiter_action: usize) -> &[f64] {
        let MarkovDims {
            states,
            victim_actions: n,
            exploiter_actions: m,
            ..
        } = self.dims;
        let k = (self.stage_index(step, state) * n + victim_action) * m + exploiter_action;
        &self.transitions[k * states..(k + 1) * states]
    }

    /// Flat transition tensor in `(step, state, a_v, a_e, next)` order.
    pub fn transition_tensor(&self) -> &[f64] {
        &self.transitions
    }

    /// The same game with exploiter rewards removed.
    pub fn victim_view(&self) -> MarkovGame {
        MarkovGame {
            rewards_e: None,
            ..self.clone()
        }
    }

    fn stage_index(&self, step: usize, state: usize) -> usize {
        debug_assert!(step < self.dims.horizon && state < self.dims.states);
        step * self.dims.states + state
    }
}

fn check_rewards(rewards: &[Matrix], dims: MarkovDims, who: &str) -> Result<()> {
    if rewards.len() != dims.stages() {
        return Err(Error::Shape(format!(
            "{who} rewards hold {} stage matrices, expected H*S = {}",
            rewards.len(),
            dims.stages()
        )));
    }
    for (k, r) in rewards.iter().enumerate() {
        if r.shape() != (dims.victim_actions, dims.exploiter_actions) {
            return Err(Error::Shape(format!(
                "{who} reward at step {}, state {} is {:?}, expected {}x{}",
                k / dims.states,
                k % dims.states,
                r.shape(),
                dims.victim_actions,
                dims.exploiter_actions
            )));
        }
        if !r.is_finite() {
            return Err(Error::InvalidGame(format!("{who} rewards must be finite")));
        }
    }
    Ok(())
}

fn check_distribution(p: &[f64]) -> std::result::Result<(), String> {
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {v} is not a probability"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}
