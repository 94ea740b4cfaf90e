//! Game generators and experiment drivers.
//!
//! # Random games
//!
//! [`random_markov`] and [`random_bimatrix`] draw from a ChaCha8 stream seeded
//! with `ChaCha8Rng::seed_from_u64(seed)`. Each uniform `u` is
//! `rng.gen::<f64>()` in `[0, 1)`. Draw order for a Markov game:
//!
//! 1. victim rewards, stage by stage (step-major, then state), each matrix
//!    row-major, entry `2u - 1`;
//! 2. exploiter rewards in the same order;
//! 3. transitions for each `(step, state, a_v, a_e)`: `S` draws, weights
//!    `1 - u` normalized to sum to one.
//!
//! A bimatrix game draws `A` then `B`, row-major, entry `2u - 1`.

use std::io::{Read, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BimatrixGame, MarkovDims, MarkovGame, Player};
use crate::markov::{solve_exploiter_markov, solve_victim_markov};
use crate::matrix::Matrix;
use crate::policy::evaluate_policies;

/// Victim payoff in the secure rows of the base block (`x`).
pub const BLOCK_VICTIM_PAYOFF: f64 = 10.0;
/// Exploiter payoff scale of the base block (`y`).
pub const BLOCK_EXPLOITER_PAYOFF: f64 = 10.0;

/// Default states and horizon used by the experiments.
pub const DEFAULT_STATES: usize = 10;
pub const DEFAULT_HORIZON: usize = 10;

/// Seeds used per size when none are given.
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// The 3x2 base block: rows U, M, D and columns L, R.
pub fn base_block() -> (Matrix, Matrix) {
    let (x, y) = (BLOCK_VICTIM_PAYOFF, BLOCK_EXPLOITER_PAYOFF);
    let a = Matrix::from_rows(&[[x, x], [x, x], [-1.0, -1.0]]).expect("static shape");
    let b = Matrix::from_rows(&[[2.0 * y, -1.0], [y, -1.0], [-1.0, 0.0]]).expect("static shape");
    (a, b)
}

fn block_diagonal(block: &Matrix, r: usize) -> Matrix {
    let (bn, bm) = block.shape();
    let mut out = Matrix::zeros(bn * r, bm * r);
    for k in 0..r {
        for i in 0..bn {
            for j in 0..bm {
                out.set(k * bn + i, k * bm + j, block.get(i, j));
            }
        }
    }
    out
}

/// `r` copies of the base block on the diagonal, zeros elsewhere (`3r x 2r`).
pub fn block_bimatrix(r: usize) -> BimatrixGame {
    assert!(r >= 1, "need at least one block");
    let (a, b) = base_block();
    BimatrixGame::new(block_diagonal(&a, r), Some(block_diagonal(&b, r))).expect("valid block game")
}

/// Block rewards at every stage, uniform transitions, start in state 0.
pub fn block_markov(r: usize, states: usize, horizon: usize) -> MarkovGame {
    assert!(r >= 1 && states >= 1 && horizon >= 1);
    let g = block_bimatrix(r);
    let (a, b) = (g.victim_payoffs(), g.exploiter_payoffs().expect("block game has B"));
    let (n, m) = a.shape();
    let stages = horizon * states;
    let mut mu = vec![0.0; states];
    mu[0] = 1.0;
    MarkovGame::new(
        MarkovDims {
            states,
            victim_actions: n,
            exploiter_actions: m,
            horizon,
        },
        vec![a.clone(); stages],
        Some(vec![b.clone(); stages]),
        vec![1.0 / states as f64; stages * n * m * states],
        mu,
    )
    .expect("valid block Markov game")
}

/// Closed-form guaranteed payoff of both players on the block Markov game.
pub fn block_analytic(r: usize, horizon: usize) -> f64 {
    BLOCK_VICTIM_PAYOFF * horizon as f64 / r as f64
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
    Matrix::from_vec(rows, cols, data).expect("sized above")
}

/// Square `n x n` Markov game with `U[-1, 1]` rewards and random transitions.
/// Starts in state 0.
pub fn random_markov(n: usize, states: usize, horizon: usize, seed: u64) -> MarkovGame {
    assert!(n >= 1 && states >= 1 && horizon >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages = horizon * states;
    let rewards_v: Vec<Matrix> = (0..stages).map(|_| uniform_matrix(&mut rng, n, n)).collect();
    let rewards_e: Vec<Matrix> = (0..stages).map(|_| uniform_matrix(&mut rng, n, n)).collect();
    let mut transitions = Vec::with_capacity(stages * n * n * states);
    for _ in 0..stages * n * n {
        let weights: Vec<f64> = (0..states).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        transitions.extend(weights.iter().map(|w| w / total));
    }
    let mut mu = vec![0.0; states];
    mu[0] = 1.0;
    MarkovGame::new(
        MarkovDims {
            states,
            victim_actions: n,
            exploiter_actions: n,
            horizon,
        },
        rewards_v,
        Some(rewards_e),
        transitions,
        mu,
    )
    .expect("valid random game")
}

/// `n x m` game with both payoff matrices drawn from `U[-1, 1]`.
pub fn random_bimatrix(n: usize, m: usize, seed: u64) -> BimatrixGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = uniform_matrix(&mut rng, n, m);
    let b = uniform_matrix(&mut rng, n, m);
    BimatrixGame::new(a, Some(b)).expect("valid random game")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Block,
    Random,
}

/// One solved instance. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub kind: ExperimentKind,
    /// `r` for block games, `n` for random games.
    pub size_param: usize,
    pub total_entries: usize,
    pub p_v: f64,
    pub p_e: f64,
    pub payoff_v: f64,
    pub payoff_e: f64,
    pub analytic_v: Option<f64>,
    pub analytic_e: Option<f64>,
    pub time_victim_s: f64,
    pub time_exploiter_s: f64,
}

pub const CSV_HEADER: [&str; 11] = [
    "kind",
    "size_param",
    "total_entries",
    "p_v",
    "p_e",
    "payoff_v",
    "payoff_e",
    "analytic_v",
    "analytic_e",
    "time_victim_s",
    "time_exploiter_s",
];

/// Solves both players on `game`, times each, and evaluates the realized
/// payoffs of the resulting policy pair.
pub fn run_instance(
    kind: ExperimentKind,
    size_param: usize,
    game: &MarkovGame,
    analytic: Option<f64>,
) -> Result<ExperimentRow> {
    // Start the worker pool up front so the first timed solve is not charged for it.
    rayon::broadcast(|_| ());
    let start = Instant::now();
    let victim = solve_victim_markov(game)?;
    let time_victim_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let exploiter = solve_exploiter_markov(game)?;
    let time_exploiter_s = start.elapsed().as_secs_f64();

    let realized = |player| -> Result<f64> {
        Ok(evaluate_policies(game, &victim.policy, &exploiter.policy, player)?.expected_initial(game.initial()))
    };
    Ok(ExperimentRow {
        kind,
        size_param,
        total_entries: game.dims().total_entries(),
        p_v: victim.guaranteed_payoff,
        p_e: exploiter.guaranteed_payoff,
        payoff_v: realized(Player::Victim)?,
        payoff_e: realized(Player::Exploiter)?,
        analytic_v: analytic,
        analytic_e: analytic,
        time_victim_s,
        time_exploiter_s,
    })
}

pub fn run_block_experiment(r_values: &[usize], states: usize, horizon: usize) -> Result<Vec<ExperimentRow>> {
    r_values
        .iter()
        .map(|&r| {
            let game = block_markov(r, states, horizon);
            run_instance(ExperimentKind::Block, r, &game, Some(block_analytic(r, horizon)))
        })
        .collect()
}

/// One row per `(n, seed)`, sizes outermost.
pub fn run_random_experiment(
    n_values: &[usize],
    seeds: &[u64],
    states: usize,
    horizon: usize,
) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::with_capacity(n_values.len() * seeds.len());
    for &n in n_values {
        for &seed in seeds {
            let game = random_markov(n, states, horizon, seed);
            rows.push(run_instance(ExperimentKind::Random, n, &game, None)?);
        }
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidGame(format!("csv: {e}"))
}

/// Writes the header, then one record per row. Absent analytic values are empty fields.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidGame(format!("csv: {e}")))?;
    Ok(())
}

/// Parses rows written by [`write_csv`]; the header must match exactly.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidGame(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
