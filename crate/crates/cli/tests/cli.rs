use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use viser::bench::{block_bimatrix, block_markov, random_bimatrix, random_markov};
use viser_cli::format::{GameFile, SolutionDocument, SolutionFile};

fn viser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viser")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn motivating(dir: &TempDir, with_b: bool) -> PathBuf {
    let mut game = json!({"type": "bimatrix", "A": [[10, 10], [10, 10], [-1, -1]]});
    if with_b {
        game["B"] = json!([[20, -1], [10, -1], [-1, 0]]);
    }
    write(dir, if with_b { "motivating.json" } else { "motivating_a.json" }, &game)
}

fn solve(game: &Path, player: &str, out: &Path) -> Output {
    viser(&["solve", s(game), "--player", player, "--out", s(out)])
}

fn read_solution(path: &Path) -> SolutionFile {
    match serde_json::from_slice::<SolutionDocument>(&std::fs::read(path).unwrap()).unwrap() {
        SolutionDocument::One(sol) => sol,
        SolutionDocument::Many(_) => panic!("expected a single solution"),
    }
}

#[test]
fn motivating_victim() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v.json");
    assert_eq!(code(&solve(&motivating(&dir, true), "victim", &out)), 0);
    let sol = read_solution(&out);
    assert!((sol.guaranteed_payoff - 10.0).abs() <= 1e-6);
    assert!(sol.strategy.unwrap()[2] <= 1e-6);
}

#[test]
fn motivating_exploiter() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.json");
    assert_eq!(code(&solve(&motivating(&dir, true), "exploiter", &out)), 0);
    let sol = read_solution(&out);
    assert!((sol.guaranteed_payoff - 10.0).abs() <= 1e-6);
    let y = sol.strategy.unwrap();
    assert!((y[0] - 1.0).abs() <= 1e-6 && y[1].abs() <= 1e-6);
    assert!(sol.duals.is_some());
}

#[test]
fn exploiter_without_b_is_an_information_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.json");
    assert_eq!(code(&solve(&motivating(&dir, false), "exploiter", &out)), 3);
}

#[test]
fn malformed_game_is_rejected() {
    let dir = TempDir::new().unwrap();
    let ragged = write(&dir, "bad.json", &json!({"type": "bimatrix", "A": [[1, 2], [3]]}));
    assert_eq!(code(&viser(&["solve", s(&ragged)])), 2);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(code(&viser(&["solve", s(&garbage)])), 2);
    assert_eq!(code(&viser(&["solve", s(&motivating(&dir, true)), "--epsilon", "-1"])), 2);
}

#[test]
fn victim_output_ignores_b() {
    let dir = TempDir::new().unwrap();
    let (with, without) = (dir.path().join("with.json"), dir.path().join("without.json"));
    assert_eq!(code(&solve(&motivating(&dir, true), "victim", &with)), 0);
    assert_eq!(code(&solve(&motivating(&dir, false), "victim", &without)), 0);
    assert_eq!(std::fs::read(&with).unwrap(), std::fs::read(&without).unwrap());

    let game = random_markov(3, 2, 3, 9);
    let full = write(&dir, "m.json", &GameFile::from_markov(&game));
    let stripped = write(&dir, "m_v.json", &GameFile::from_markov(&game.victim_view()));
    assert_eq!(code(&solve(&full, "victim", &with)), 0);
    assert_eq!(code(&solve(&stripped, "victim", &without)), 0);
    assert_eq!(std::fs::read(&with).unwrap(), std::fs::read(&without).unwrap());
}

#[test]
fn solve_then_verify_round_trips() {
    let dir = TempDir::new().unwrap();
    let mut games = vec![
        write(&dir, "b1.json", &GameFile::from_bimatrix(&block_bimatrix(3))),
        write(&dir, "m1.json", &GameFile::from_markov(&block_markov(2, 3, 4))),
        write(&dir, "m2.json", &GameFile::from_markov(&random_markov(3, 3, 3, 1))),
    ];
    for seed in 0..5 {
        games.push(write(
            &dir,
            &format!("r{seed}.json"),
            &GameFile::from_bimatrix(&random_bimatrix(4, 5, seed)),
        ));
    }
    let out = dir.path().join("both.json");
    for game in &games {
        assert_eq!(code(&solve(game, "both", &out)), 0, "{}", game.display());
        let verdict = viser(&["verify", s(game), s(&out)]);
        assert_eq!(code(&verdict), 0, "{}", String::from_utf8_lossy(&verdict.stdout));
    }
}

#[test]
fn verify_rejects_insecure_victim() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v.json");
    let game = motivating(&dir, true);
    assert_eq!(code(&solve(&game, "victim", &out)), 0);
    let mut sol = read_solution(&out);
    sol.strategy = Some(vec![0.0, 0.0, 1.0]);
    let bad = write(&dir, "d.json", &sol);
    assert_eq!(code(&viser(&["verify", s(&game), s(&bad)])), 5);
}

#[test]
fn verify_rejects_perturbed_markov_stage() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "block.json", &GameFile::from_markov(&block_markov(2, 3, 4)));
    let out = dir.path().join("v.json");
    assert_eq!(code(&solve(&game, "victim", &out)), 0);
    assert_eq!(code(&viser(&["verify", s(&game), s(&out)])), 0);
    let mut sol: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    // Move 0.1 mass onto the first D row at step 1, state 2.
    let stage = sol["policy"][1][2].as_array_mut().unwrap();
    let donor = (0..stage.len()).find(|&i| stage[i].as_f64().unwrap() >= 0.1).unwrap();
    stage[donor] = json!(stage[donor].as_f64().unwrap() - 0.1);
    stage[2] = json!(stage[2].as_f64().unwrap() + 0.1);
    let bad = write(&dir, "bad.json", &sol);
    let verdict = viser(&["verify", s(&game), s(&bad)]);
    assert_eq!(code(&verdict), 5);
    assert!(String::from_utf8_lossy(&verdict.stdout).contains("(h=1, s=2)"));
}

#[test]
fn bench_block_sweep() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("block.csv");
    let run = viser(&[
        "bench",
        "block",
        "--r-max",
        "10",
        "--states",
        "3",
        "--horizon",
        "4",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&run), 0);
    let rows = viser::bench::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    for (k, row) in rows.iter().enumerate() {
        let expected = 10.0 * 4.0 / (k + 1) as f64;
        assert!((row.p_v - expected).abs() <= 1e-5);
        assert_eq!(row.analytic_v, Some(expected));
    }
}

#[test]
fn bench_random_sweep_and_empty_sweep() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("random.csv");
    let run = viser(&[
        "bench",
        "random",
        "--sizes",
        "2,3",
        "--seeds",
        "2",
        "--states",
        "2",
        "--horizon",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&run), 0);
    let rows = viser::bench::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.analytic_v.is_none()));

    let empty = dir.path().join("empty.csv");
    assert_eq!(code(&viser(&["bench", "block", "--r-max", "0", "--out", s(&empty)])), 0);
    assert_eq!(
        std::fs::read_to_string(&empty).unwrap().trim_end(),
        "kind,size_param,total_entries,p_v,p_e,payoff_v,payoff_e,analytic_v,analytic_e,time_victim_s,time_exploiter_s"
    );
}

#[test]
fn oracle_reports_small_games() {
    let dir = TempDir::new().unwrap();
    let run = viser(&["oracle", s(&motivating(&dir, true))]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stdout));
    let zero = write(
        &dir,
        "zero.json",
        &json!({"type": "bimatrix", "A": [[0, 0], [0, 0]], "B": [[0, 0], [0, 0]]}),
    );
    let run = viser(&["oracle", s(&zero)]);
    assert_eq!(code(&run), 0);
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(
        text.lines().count() == 2 && text.lines().all(|l| l.contains("lp 0 oracle 0 delta 0.000e0")),
        "{text}"
    );
    let tiny = write(&dir, "tiny.json", &GameFile::from_markov(&random_markov(2, 2, 2, 3)));
    assert_eq!(code(&viser(&["oracle", s(&tiny)])), 0);
}

#[test]
fn oracle_refuses_large_games() {
    let dir = TempDir::new().unwrap();
    let big = write(
        &dir,
        "big.json",
        &GameFile::from_bimatrix(&random_bimatrix(100, 100, 0)),
    );
    assert_eq!(code(&viser(&["oracle", s(&big)])), 6);
    let long = write(&dir, "long.json", &GameFile::from_markov(&random_markov(3, 3, 6, 0)));
    assert_eq!(code(&viser(&["oracle", s(&long)])), 6);
}

#[test]
fn thread_count_is_validated() {
    let dir = TempDir::new().unwrap();
    let game = motivating(&dir, true);
    let run = Command::new(env!("CARGO_BIN_EXE_viser"))
        .args(["solve", s(&game)])
        .env("VISER_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&run), 2);
    let run = Command::new(env!("CARGO_BIN_EXE_viser"))
        .args(["solve", s(&game)])
        .env("VISER_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&run), 0);
}
