//! JSON game and solution files.

use serde::{Deserialize, Serialize};
use viser::bimatrix::{ExploiterSolution, VictimSolution};
use viser::lp::{TOL_FEAS, TOL_OPT};
use viser::markov::MpviserResult;
use viser::{BimatrixGame, MarkovDims, MarkovGame, Matrix, Player, ValueTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GameFile {
    Bimatrix {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<Vec<f64>>>,
    },
    Markov {
        #[serde(rename = "S")]
        states: usize,
        n: usize,
        m: usize,
        #[serde(rename = "H")]
        horizon: usize,
        mu: Vec<f64>,
        #[serde(rename = "R_v")]
        rewards_v: Vec<Vec<Vec<Vec<f64>>>>,
        #[serde(rename = "R_e", default, skip_serializing_if = "Option::is_none")]
        rewards_e: Option<Vec<Vec<Vec<Vec<f64>>>>>,
        #[serde(rename = "P")]
        transitions: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    },
}

pub enum Game {
    Bimatrix(BimatrixGame),
    Markov(MarkovGame),
}

fn stage_matrices(
    rewards: Vec<Vec<Vec<Vec<f64>>>>,
    horizon: usize,
    states: usize,
    who: &str,
) -> viser::Result<Vec<Matrix>> {
    if rewards.len() != horizon || rewards.iter().any(|step| step.len() != states) {
        return Err(viser::Error::Shape(format!("{who} must be indexed [H][S][n][m]")));
    }
    rewards.into_iter().flatten().map(|m| Matrix::from_rows(&m)).collect()
}

impl GameFile {
    pub fn into_game(self) -> viser::Result<Game> {
        match self {
            GameFile::Bimatrix { a, b } => {
                let b = b.map(|b| Matrix::from_rows(&b)).transpose()?;
                Ok(Game::Bimatrix(BimatrixGame::new(Matrix::from_rows(&a)?, b)?))
            }
            GameFile::Markov {
                states,
                n,
                m,
                horizon,
                mu,
                rewards_v,
                rewards_e,
                transitions,
            } => {
                let dims = MarkovDims {
                    states,
                    victim_actions: n,
                    exploiter_actions: m,
                    horizon,
                };
                let rewards_v = stage_matrices(rewards_v, horizon, states, "R_v")?;
                let rewards_e = rewards_e
                    .map(|r| stage_matrices(r, horizon, states, "R_e"))
                    .transpose()?;
                let mut flat = Vec::with_capacity(dims.total_entries() * states);
                let shape_ok = transitions.len() == horizon
                    && transitions.iter().flatten().count() == horizon * states
                    && transitions.iter().flatten().flatten().count() == horizon * states * n
                    && transitions.iter().flatten().flatten().flatten().count() == dims.total_entries();
                if !shape_ok {
                    return Err(viser::Error::Shape("P must be indexed [H][S][n][m][S]".into()));
                }
                for dist in transitions.into_iter().flatten().flatten().flatten() {
                    if dist.len() != states {
                        return Err(viser::Error::Shape("P must be indexed [H][S][n][m][S]".into()));
                    }
                    flat.extend(dist);
                }
                Ok(Game::Markov(MarkovGame::new(dims, rewards_v, rewards_e, flat, mu)?))
            }
        }
    }

    /// The file form of `game`, used by tests and tooling that generate games.
    pub fn from_markov(game: &MarkovGame) -> GameFile {
        let MarkovDims {
            states,
            victim_actions: n,
            exploiter_actions: m,
            horizon,
        } = game.dims();
        let nested = |f: &dyn Fn(usize, usize) -> Vec<Vec<f64>>| -> Vec<Vec<Vec<Vec<f64>>>> {
            (0..horizon).map(|h| (0..states).map(|s| f(h, s)).collect()).collect()
        };
        let transitions = (0..horizon)
            .map(|h| {
                (0..states)
                    .map(|s| {
                        (0..n)
                            .map(|a| (0..m).map(|b| game.transition(h, s, a, b).to_vec()).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GameFile::Markov {
            states,
            n,
            m,
            horizon,
            mu: game.initial().to_vec(),
            rewards_v: nested(&|h, s| game.victim_reward(h, s).to_rows()),
            rewards_e: game
                .has_exploiter_rewards()
                .then(|| nested(&|h, s| game.exploiter_reward(h, s).expect("checked").to_rows())),
            transitions,
        }
    }

    pub fn from_bimatrix(game: &BimatrixGame) -> GameFile {
        GameFile::Bimatrix {
            a: game.victim_payoffs().to_rows(),
            b: game.exploiter_payoffs().map(Matrix::to_rows),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub w: Vec<f64>,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Duals {
    Single(DualPair),
    /// Indexed `[h][s]`.
    Stages(Vec<Vec<DualPair>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tol_feas: f64,
    pub tol_opt: f64,
    pub lp_iterations: usize,
    /// Slack subtracted from the maximin value in the exploiter LP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximin_slack: Option<f64>,
}

impl Metadata {
    fn new(lp_iterations: usize, maximin_slack: Option<f64>) -> Self {
        Self {
            tol_feas: TOL_FEAS,
            tol_opt: TOL_OPT,
            lp_iterations,
            maximin_slack,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub player: Player,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Vec<f64>>,
    /// Markov policy indexed `[h][s][action]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<Vec<Vec<f64>>>>,
    pub guaranteed_payoff: f64,
    pub epsilon: f64,
    /// The victim maximin value the exploiter best-responded to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximin_value: Option<f64>,
    /// Markov stage values of `player`, indexed `[h][s]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duals: Option<Duals>,
    pub metadata: Metadata,
}

fn table_rows(t: &ValueTable) -> Vec<Vec<f64>> {
    (0..t.horizon()).map(|h| t.step(h).to_vec()).collect()
}

impl SolutionFile {
    pub fn from_victim(sol: &VictimSolution) -> Self {
        Self {
            player: Player::Victim,
            strategy: Some(sol.strategy.probs().to_vec()),
            policy: None,
            guaranteed_payoff: sol.guaranteed_payoff,
            epsilon: 0.0,
            maximin_value: None,
            values: None,
            duals: None,
            metadata: Metadata::new(sol.lp_iterations, None),
        }
    }

    pub fn from_exploiter(sol: &ExploiterSolution) -> Self {
        Self {
            player: Player::Exploiter,
            strategy: Some(sol.strategy.probs().to_vec()),
            policy: None,
            guaranteed_payoff: sol.guaranteed_payoff,
            epsilon: sol.epsilon,
            maximin_value: Some(sol.maximin_value),
            values: None,
            duals: Some(Duals::Single(DualPair {
                w: sol.dual_weights.clone(),
                alpha: sol.dual_offset,
            })),
            metadata: Metadata::new(sol.lp_iterations, Some(sol.slack)),
        }
    }

    pub fn from_markov(result: &MpviserResult) -> Self {
        let (horizon, states) = (result.policy.horizon(), result.policy.states());
        let policy = (0..horizon)
            .map(|h| {
                (0..states)
                    .map(|s| result.policy.decision(h, s).probs().to_vec())
                    .collect()
            })
            .collect();
        let duals = result.duals.as_ref().map(|d| {
            Duals::Stages(
                d.chunks(states)
                    .map(|step| {
                        step.iter()
                            .map(|sd| DualPair {
                                w: sd.weights.clone(),
                                alpha: sd.offset,
                            })
                            .collect()
                    })
                    .collect(),
            )
        });
        Self {
            player: result.player,
            strategy: None,
            policy: Some(policy),
            guaranteed_payoff: result.guaranteed_payoff,
            epsilon: 0.0,
            maximin_value: None,
            values: Some(table_rows(&result.values)),
            duals,
            metadata: Metadata::new(result.lp_iterations, None),
        }
    }
}

/// `viser solve --player both` writes an array; the other modes write one object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SolutionDocument {
    One(SolutionFile),
    Many(Vec<SolutionFile>),
}

impl SolutionDocument {
    pub fn into_vec(self) -> Vec<SolutionFile> {
        match self {
            SolutionDocument::One(s) => vec![s],
            SolutionDocument::Many(v) => v,
        }
    }
}
