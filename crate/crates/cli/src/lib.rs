//! The `viser` command line: solve, verify, bench and oracle subcommands.

pub mod format;

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use viser::bench::{
    run_block_experiment, run_random_experiment, write_csv, DEFAULT_HORIZON, DEFAULT_SEEDS, DEFAULT_STATES,
};
use viser::bimatrix::{in_exploiter_set, in_victim_set, solve_exploiter, solve_victim};
use viser::markov::{
    exploiter_stage_membership, solve_exploiter_markov, solve_victim_markov, stage_membership, stage_tolerance,
};
use viser::oracle::{
    exhaustive_policy_eval, grid_maximin, maximin_set_vertices, oracle_exploiter_value, TRAJECTORY_CAP,
};
use viser::{evaluate_policies, BimatrixGame, Error, MarkovGame, MarkovPolicy, MixedStrategy, Player, TOL_VERIFY};

use format::{Duals, Game, GameFile, SolutionDocument, SolutionFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFORMATION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_CERTIFICATE: i32 = 5;
pub const EXIT_ORACLE_CAP: i32 = 6;

/// Tolerance for the exploiter oracle comparison.
pub const ORACLE_EXPLOITER_BOUND: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(
    name = "viser",
    version,
    about = "Victim and exploiter strategies for bimatrix and Markov games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a game file for one or both players.
    Solve {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = PlayerArg::Victim)]
        player: PlayerArg,
        /// Relax the victim's maximin set by this much (bimatrix games only).
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file against a game file.
    Verify {
        game: PathBuf,
        solution: PathBuf,
        /// Base tolerance; Markov stage `h` uses `tol * (H - h)`.
        #[arg(long, default_value_t = TOL_VERIFY)]
        tol: f64,
    },
    /// Run an experiment sweep and write CSV rows.
    Bench {
        #[arg(value_enum)]
        kind: BenchKind,
        /// Block sweep: r = 1..=r_max.
        #[arg(long, default_value_t = 10)]
        r_max: usize,
        /// Random sweep: comma-separated action counts.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32])]
        sizes: Vec<usize>,
        /// Random sweep: seeds per size.
        #[arg(long, default_value_t = DEFAULT_SEEDS.len())]
        seeds: usize,
        /// Random sweep: first seed.
        #[arg(long, default_value_t = DEFAULT_SEEDS[0])]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STATES)]
        states: usize,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare LP results with brute-force oracles on a small game.
    Oracle {
        game: PathBuf,
        /// Grid spacing for the victim maximin search.
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlayerArg {
    Victim,
    Exploiter,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    Block,
    Random,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Shape(_) | Error::InvalidStrategy(_) | Error::InvalidGame(_) => EXIT_INVALID,
            Error::MissingInformation(_) => EXIT_INFORMATION,
            Error::OracleTooLarge(_) => EXIT_ORACLE_CAP,
            Error::Lp(_) | Error::EmptyVictimSet | Error::UnexpectedLpStatus(_) | Error::Stage { .. } => EXIT_SOLVER,
        };
        Failure::new(code, e)
    }
}

type CliResult<T> = Result<T, Failure>;

/// Sizes the global rayon pool from `VISER_THREADS` (unset or 0 means automatic).
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("VISER_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::new(EXIT_INVALID, format!("VISER_THREADS must be a count, got {raw:?}")))?;
    if threads > 0 {
        // Fails only if a pool already exists, e.g. when called twice in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> i32 {
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve {
            game,
            player,
            epsilon,
            out,
        } => cmd_solve(&game, player, epsilon, out.as_deref()),
        Command::Verify { game, solution, tol } => cmd_verify(&game, &solution, tol),
        Command::Bench {
            kind,
            r_max,
            sizes,
            seeds,
            seed,
            states,
            horizon,
            out,
        } => cmd_bench(kind, r_max, &sizes, seed, seeds, states, horizon, out.as_deref()),
        Command::Oracle { game, resolution } => cmd_oracle(&game, resolution),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn load_game(path: &Path) -> CliResult<Game> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INVALID, format!("cannot read {}: {e}", path.display())))?;
    let file: GameFile =
        serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    Ok(file.into_game()?)
}

fn output(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Failure::new(EXIT_INVALID, format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(doc: &SolutionDocument, out: Option<&Path>) -> CliResult<()> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, doc)
        .map_err(|e| Failure::new(EXIT_INVALID, e))
        .and_then(|()| {
            writeln!(w)
                .and_then(|()| w.flush())
                .map_err(|e| Failure::new(EXIT_INVALID, e))
        })
}

fn players(arg: PlayerArg) -> Vec<Player> {
    match arg {
        PlayerArg::Victim => vec![Player::Victim],
        PlayerArg::Exploiter => vec![Player::Exploiter],
        PlayerArg::Both => vec![Player::Victim, Player::Exploiter],
    }
}

pub fn solve_bimatrix(game: &BimatrixGame, player: Player, epsilon: f64) -> CliResult<SolutionFile> {
    match player {
        Player::Victim => Ok(SolutionFile::from_victim(&solve_victim(game.victim_payoffs())?)),
        Player::Exploiter => {
            let b = game
                .exploiter_payoffs()
                .ok_or(Error::MissingInformation("exploiter payoffs B are required"))?;
            Ok(SolutionFile::from_exploiter(&solve_exploiter(
                game.victim_payoffs(),
                b,
                epsilon,
            )?))
        }
    }
}

pub fn solve_markov(game: &MarkovGame, player: Player) -> CliResult<SolutionFile> {
    let result = match player {
        Player::Victim => solve_victim_markov(game)?,
        Player::Exploiter => solve_exploiter_markov(game)?,
    };
    Ok(SolutionFile::from_markov(&result))
}

pub fn cmd_solve(path: &Path, player: PlayerArg, epsilon: f64, out: Option<&Path>) -> CliResult<i32> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Failure::new(
            EXIT_INVALID,
            format!("epsilon must be finite and nonnegative, got {epsilon}"),
        ));
    }
    let game = load_game(path)?;
    let solutions = players(player)
        .into_iter()
        .map(|p| match &game {
            Game::Bimatrix(g) => solve_bimatrix(g, p, epsilon),
            Game::Markov(_) if epsilon != 0.0 => Err(Failure::new(
                EXIT_INVALID,
                "epsilon is only supported for bimatrix games",
            )),
            Game::Markov(g) => solve_markov(g, p),
        })
        .collect::<CliResult<Vec<_>>>()?;
    let doc = if player == PlayerArg::Both {
        SolutionDocument::Many(solutions)
    } else {
        SolutionDocument::One(solutions.into_iter().next().expect("one player requested"))
    };
    write_json(&doc, out)?;
    Ok(EXIT_OK)
}

/// Collects named pass/fail checks and prints them as they are recorded.
struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: impl Display, ok: bool, detail: impl Display) {
        if ok {
            println!("ok    {name}: {detail}");
        } else {
            self.failures += 1;
            println!("FAIL  {name}: {detail}");
        }
    }
}

fn invalid(msg: impl Display) -> Failure {
    Failure::new(EXIT_INVALID, msg)
}

pub fn cmd_verify(game_path: &Path, solution_path: &Path, tol: f64) -> CliResult<i32> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be finite and nonnegative, got {tol}")));
    }
    let game = load_game(game_path)?;
    let text = std::fs::read_to_string(solution_path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", solution_path.display())))?;
    let doc: SolutionDocument =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", solution_path.display())))?;
    let mut report = Report { failures: 0 };
    for sol in doc.into_vec() {
        match &game {
            Game::Bimatrix(g) => verify_bimatrix(g, &sol, tol, &mut report)?,
            Game::Markov(g) => verify_markov(g, &sol, tol, &mut report)?,
        }
    }
    if report.failures > 0 {
        println!("{} check(s) failed", report.failures);
        Ok(EXIT_CERTIFICATE)
    } else {
        println!("all checks passed");
        Ok(EXIT_OK)
    }
}

fn verify_bimatrix(game: &BimatrixGame, sol: &SolutionFile, tol: f64, report: &mut Report) -> CliResult<()> {
    let strategy = sol
        .strategy
        .as_ref()
        .ok_or_else(|| invalid("bimatrix solutions need a strategy"))?;
    let a = game.victim_payoffs();
    let z = solve_victim(a)?.guaranteed_payoff;
    match sol.player {
        Player::Victim => {
            if strategy.len() != a.rows() {
                return Err(invalid(format!(
                    "victim strategy has {} entries, game has {}",
                    strategy.len(),
                    a.rows()
                )));
            }
            report.check(
                "victim maximin membership",
                in_victim_set(a, z, strategy, tol),
                format!("value {z}"),
            );
            report.check(
                "victim guaranteed payoff",
                (sol.guaranteed_payoff - z).abs() <= tol,
                format!("claimed {}, recomputed {z}", sol.guaranteed_payoff),
            );
        }
        Player::Exploiter => {
            let b = game
                .exploiter_payoffs()
                .ok_or(Error::MissingInformation("exploiter payoffs B are required"))?;
            if strategy.len() != a.cols() {
                return Err(invalid(format!(
                    "exploiter strategy has {} entries, game has {}",
                    strategy.len(),
                    a.cols()
                )));
            }
            let eps = sol.epsilon;
            let best = solve_exploiter(a, b, eps)?.guaranteed_payoff;
            let member = in_exploiter_set(a, b, z - eps, sol.guaranteed_payoff, strategy, tol)?;
            report.check(
                "exploiter best-response membership",
                member,
                format!("payoff {} against the victim set at {}", sol.guaranteed_payoff, z - eps),
            );
            report.check(
                "exploiter guaranteed payoff",
                sol.guaranteed_payoff >= best - tol,
                format!("claimed {}, recomputed {best}", sol.guaranteed_payoff),
            );
            if let Some(Duals::Single(d)) = &sol.duals {
                let threshold = sol.maximin_value.unwrap_or(z) - eps - sol.metadata.maximin_slack.unwrap_or(0.0);
                let by = b.right_mul(strategy);
                let aw = a.right_mul(&d.w);
                let rows_ok = d.w.len() == a.cols()
                    && d.w.iter().all(|&w| w >= -tol)
                    && by.iter().zip(&aw).all(|(byi, awi)| d.alpha + byi - awi >= -tol);
                let objective = threshold * d.w.iter().sum::<f64>() - d.alpha;
                report.check(
                    "exploiter dual certificate",
                    rows_ok && objective >= sol.guaranteed_payoff - tol,
                    format!("dual objective {objective}"),
                );
            }
        }
    }
    Ok(())
}

fn markov_policy(game: &MarkovGame, sol: &SolutionFile) -> CliResult<MarkovPolicy> {
    let rows = sol
        .policy
        .as_ref()
        .ok_or_else(|| invalid("Markov solutions need a policy"))?;
    let actions = match sol.player {
        Player::Victim => game.victim_actions(),
        Player::Exploiter => game.exploiter_actions(),
    };
    if rows.len() != game.horizon() || rows.iter().any(|step| step.len() != game.states()) {
        return Err(invalid("policy must be indexed [H][S][actions]"));
    }
    let decisions = rows
        .iter()
        .flatten()
        .map(|p| {
            if p.len() != actions {
                return Err(invalid(format!(
                    "{} decision has {} entries, expected {actions}",
                    sol.player,
                    p.len()
                )));
            }
            Ok(MixedStrategy::new(p.clone())?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MarkovPolicy::new(sol.player, game.horizon(), game.states(), decisions)?)
}

fn verify_markov(game: &MarkovGame, sol: &SolutionFile, tol: f64, report: &mut Report) -> CliResult<()> {
    if sol.epsilon != 0.0 {
        return Err(invalid("Markov solutions must have epsilon 0"));
    }
    let policy = markov_policy(game, sol)?;
    let horizon = game.horizon();
    let reference = match sol.player {
        Player::Victim => solve_victim_markov(game)?,
        Player::Exploiter => solve_exploiter_markov(game)?,
    };
    let mut failed = Vec::new();
    for h in 0..horizon {
        let stage_tol = stage_tolerance(tol, horizon, h);
        for s in 0..game.states() {
            let x = policy.decision(h, s).probs();
            let ok = match sol.player {
                Player::Victim => stage_membership(game, &reference, h, s, x, stage_tol)?,
                Player::Exploiter => exploiter_stage_membership(game, &reference, h, s, x, stage_tol)?,
            };
            if !ok {
                failed.push((h, s));
            }
        }
    }
    let stages = horizon * game.states();
    let detail = if failed.is_empty() {
        format!("{stages} of {stages} stages")
    } else {
        let shown: Vec<String> = failed.iter().take(10).map(|(h, s)| format!("(h={h}, s={s})")).collect();
        format!("{} of {stages} stages fail, first {}", failed.len(), shown.join(" "))
    };
    report.check(format!("{} stage membership", sol.player), failed.is_empty(), detail);
    let payoff_tol = stage_tolerance(tol, horizon, 0);
    report.check(
        format!("{} guaranteed payoff", sol.player),
        (sol.guaranteed_payoff - reference.guaranteed_payoff).abs() <= payoff_tol,
        format!(
            "claimed {}, recomputed {}",
            sol.guaranteed_payoff, reference.guaranteed_payoff
        ),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_bench(
    kind: BenchKind,
    r_max: usize,
    sizes: &[usize],
    first_seed: u64,
    seeds: usize,
    states: usize,
    horizon: usize,
    out: Option<&Path>,
) -> CliResult<i32> {
    if states == 0 || horizon == 0 {
        return Err(invalid("states and horizon must be positive"));
    }
    let rows = match kind {
        BenchKind::Block => {
            let r_values: Vec<usize> = (1..=r_max).collect();
            run_block_experiment(&r_values, states, horizon)?
        }
        BenchKind::Random => {
            if sizes.contains(&0) {
                return Err(invalid("sizes must be positive"));
            }
            let seed_list: Vec<u64> = (first_seed..).take(seeds).collect();
            run_random_experiment(sizes, &seed_list, states, horizon)?
        }
    };
    let w = output(out)?;
    write_csv(&rows, w)?;
    Ok(EXIT_OK)
}

pub fn cmd_oracle(path: &Path, resolution: f64) -> CliResult<i32> {
    let game = load_game(path)?;
    let mut report = Report { failures: 0 };
    match &game {
        Game::Bimatrix(g) => oracle_bimatrix(g, resolution, &mut report)?,
        Game::Markov(g) => oracle_markov(g, &mut report)?,
    }
    Ok(if report.failures > 0 { EXIT_CERTIFICATE } else { EXIT_OK })
}

fn compare(report: &mut Report, name: &str, lp: f64, oracle: f64, bound: f64) {
    let delta = lp - oracle;
    report.check(
        name,
        delta.abs() <= bound,
        format!("lp {lp} oracle {oracle} delta {delta:.3e} bound {bound:.3e}"),
    );
}

fn oracle_bimatrix(game: &BimatrixGame, resolution: f64, report: &mut Report) -> CliResult<()> {
    let a = game.victim_payoffs();
    // Check both caps before spending time on either oracle.
    let grid = grid_maximin(a, resolution)?;
    let victim = solve_victim(a)?;
    let vertices = maximin_set_vertices(a, victim.guaranteed_payoff)?;
    compare(
        report,
        "victim maximin (grid)",
        victim.guaranteed_payoff,
        grid.value,
        2.0 * a.max_column_range() * resolution,
    );
    if let Some(b) = game.exploiter_payoffs() {
        let exploiter = solve_exploiter(a, b, 0.0)?;
        let (value, _) = oracle_exploiter_value(b, &vertices)?;
        compare(
            report,
            "exploiter payoff (vertices)",
            exploiter.guaranteed_payoff,
            value,
            ORACLE_EXPLOITER_BOUND,
        );
    }
    Ok(())
}

fn oracle_markov(game: &MarkovGame, report: &mut Report) -> CliResult<()> {
    let per_step = (game.states() * game.victim_actions() * game.exploiter_actions()) as f64;
    if per_step.powi(game.horizon() as i32) > TRAJECTORY_CAP {
        return Err(Error::OracleTooLarge(format!("game has more than {TRAJECTORY_CAP:.0e} trajectories")).into());
    }
    let victim = solve_victim_markov(game)?;
    let exploiter_policy = if game.has_exploiter_rewards() {
        solve_exploiter_markov(game)?.policy
    } else {
        MarkovPolicy::uniform(
            Player::Exploiter,
            game.horizon(),
            game.states(),
            game.exploiter_actions(),
        )
    };
    let bound = 1e-9 * game.horizon() as f64;
    let mut roles = vec![Player::Victim];
    if game.has_exploiter_rewards() {
        roles.push(Player::Exploiter);
    }
    for player in roles {
        let exhaustive = exhaustive_policy_eval(game, &victim.policy, &exploiter_policy, player)?;
        let recursive =
            evaluate_policies(game, &victim.policy, &exploiter_policy, player)?.expected_initial(game.initial());
        compare(
            report,
            &format!("{player} realized payoff (trajectories)"),
            recursive,
            exhaustive,
            bound,
        );
    }
    Ok(())
}
