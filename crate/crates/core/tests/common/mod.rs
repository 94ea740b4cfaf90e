//! Games shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viser::bench::{block_bimatrix, block_markov, random_bimatrix, random_markov};
use viser::{BimatrixGame, MarkovGame, Matrix, MixedStrategy};

pub fn motivating() -> BimatrixGame {
    block_bimatrix(1)
}

pub fn pennies() -> Matrix {
    Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap()
}

/// Random general-sum game with `n, m` drawn from `lo..=hi`.
pub fn random_sized(lo: usize, hi: usize, seed: u64) -> BimatrixGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(lo..=hi);
    let m = rng.gen_range(lo..=hi);
    random_bimatrix(n, m, seed)
}

/// Every bimatrix game the suites sweep over.
pub fn bimatrix_corpus() -> Vec<BimatrixGame> {
    let mut games = vec![
        motivating(),
        BimatrixGame::new(pennies(), Some(pennies().neg())).unwrap(),
        BimatrixGame::new(Matrix::zeros(3, 4), Some(Matrix::zeros(3, 4))).unwrap(),
    ];
    games.extend((2..=5).map(block_bimatrix));
    games.extend((0..100).map(|seed| random_sized(2, 10, seed)));
    games
}

pub fn markov_corpus() -> Vec<MarkovGame> {
    let mut games = vec![block_markov(1, 3, 3), block_markov(2, 2, 4)];
    games.extend((0..10).map(|seed| random_markov(2 + (seed as usize % 3), 3, 3, seed)));
    games
}

/// A random point of the simplex with `len` entries.
pub fn random_strategy(rng: &mut impl Rng, len: usize) -> MixedStrategy {
    let w: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    MixedStrategy::new(w.into_iter().map(|v| v / total).collect()).unwrap()
}
