mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use viser::bench::random_markov;
use viser::bimatrix::{in_victim_set, solve_exploiter, solve_victim};
use viser::oracle::{exhaustive_policy_eval, grid_maximin, maximin_set_vertices, oracle_exploiter_value, Polytope};
use viser::{
    bimatrix_payoff, evaluate_policies, Error, MarkovDims, MarkovGame, MarkovPolicy, Matrix, MixedStrategy, Player,
};

#[test]
fn vertices_certify() {
    for seed in 0..40 {
        let game = common::random_sized(2, 6, 700 + seed);
        let a = game.victim_payoffs();
        let z = solve_victim(a).unwrap().guaranteed_payoff;
        let polytope = Polytope::maximin_set(a, z).unwrap();
        assert!(!polytope.vertices.is_empty(), "seed {seed}");
        for v in &polytope.vertices {
            assert!(in_victim_set(a, z, v, 1e-7), "seed {seed}: {v:?}");
        }
    }
}

#[test]
fn grid_and_vertex_oracles_agree_with_lp() {
    for seed in 0..10 {
        let game = common::random_sized(2, 3, 900 + seed);
        let (a, b) = (game.victim_payoffs(), game.exploiter_payoffs().unwrap());
        let v = solve_victim(a).unwrap();
        let grid = grid_maximin(a, 1e-2).unwrap();
        assert!((grid.value - v.guaranteed_payoff).abs() <= 2.0 * a.max_column_range() * 1e-2);
        let vertices = maximin_set_vertices(a, v.guaranteed_payoff).unwrap();
        let (value, y) = oracle_exploiter_value(b, &vertices).unwrap();
        assert!((solve_exploiter(a, b, 0.0).unwrap().guaranteed_payoff - value).abs() <= 1e-6);
        // The oracle's y really guarantees its value against every vertex.
        let y = MixedStrategy::new(y).unwrap();
        for x in &vertices {
            let x = MixedStrategy::new(x.clone()).unwrap();
            assert!(bimatrix_payoff(&x, b, &y).unwrap() >= value - 1e-7);
        }
    }
}

#[test]
fn oracle_caps() {
    assert!(matches!(
        grid_maximin(&Matrix::zeros(5, 2), 0.1),
        Err(Error::OracleTooLarge(_))
    ));
    assert!(matches!(
        maximin_set_vertices(&Matrix::zeros(9, 9), 0.0),
        Err(Error::OracleTooLarge(_))
    ));
    let game = random_markov(4, 4, 4, 0);
    let pi = MarkovPolicy::uniform(Player::Victim, 4, 4, 4);
    let nu = MarkovPolicy::uniform(Player::Exploiter, 4, 4, 4);
    assert!(matches!(
        exhaustive_policy_eval(&game, &pi, &nu, Player::Victim),
        Err(Error::OracleTooLarge(_))
    ));
}

#[test]
fn recursion_matches_trajectory_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..10 {
        let game = random_markov(3, 2, 3, 40 + seed);
        let decisions = |rng: &mut ChaCha8Rng| (0..6).map(|_| common::random_strategy(rng, 3)).collect();
        let pi = MarkovPolicy::new(Player::Victim, 3, 2, decisions(&mut rng)).unwrap();
        let nu = MarkovPolicy::new(Player::Exploiter, 3, 2, decisions(&mut rng)).unwrap();
        for player in [Player::Victim, Player::Exploiter] {
            let recursive = evaluate_policies(&game, &pi, &nu, player)
                .unwrap()
                .expected_initial(game.initial());
            let exhaustive = exhaustive_policy_eval(&game, &pi, &nu, player).unwrap();
            assert!((recursive - exhaustive).abs() <= 1e-9);
        }
    }
}

#[test]
fn deterministic_chain_sums_rewards() {
    // Two states; every action pair moves 0 -> 1 -> 0. Pure policies pick (0, 1).
    let dims = MarkovDims {
        states: 2,
        victim_actions: 2,
        exploiter_actions: 2,
        horizon: 3,
    };
    let rewards: Vec<Matrix> = (0..6)
        .map(|k| Matrix::from_vec(2, 2, vec![k as f64, 10.0 * k as f64, -1.0, 0.5]).unwrap())
        .collect();
    let mut transitions = Vec::new();
    for _h in 0..3 {
        for s in 0..2 {
            for _ in 0..4 {
                transitions.extend(if s == 0 { [0.0, 1.0] } else { [1.0, 0.0] });
            }
        }
    }
    let game = MarkovGame::new(dims, rewards, None, transitions, vec![1.0, 0.0]).unwrap();
    let pi = MarkovPolicy::new(Player::Victim, 3, 2, vec![MixedStrategy::pure(2, 0); 6]).unwrap();
    let nu = MarkovPolicy::new(Player::Exploiter, 3, 2, vec![MixedStrategy::pure(2, 1); 6]).unwrap();
    // Visits (h=0, s=0), (1, 1), (2, 0): stage indices 0, 3, 4, each paying 10k.
    let expected: f64 = [0.0, 3.0, 4.0].iter().map(|k| 10.0 * k).sum();
    assert_eq!(
        exhaustive_policy_eval(&game, &pi, &nu, Player::Victim).unwrap(),
        expected
    );
    assert_eq!(
        evaluate_policies(&game, &pi, &nu, Player::Victim).unwrap().get(0, 0),
        expected
    );
}
