//! Security and worst-case best-response strategies for two-player games in
//! which only one player (the exploiter) knows both payoff matrices.
//!
//! The victim, knowing only its own payoffs, plays a maximin strategy. The
//! exploiter best-responds to the worst member of the victim's maximin set,
//! which it computes with a single LP obtained by dualizing the inner
//! minimization. Finite-horizon Markov games are solved stage by stage with
//! backward induction.

pub mod bench;
pub mod bimatrix;
pub mod error;
pub mod game;
pub mod lp;
pub mod markov;
pub mod matrix;
pub mod oracle;
pub mod policy;
pub mod strategy;

pub use error::{Error, Result};
pub use game::{BimatrixGame, MarkovDims, MarkovGame, Player};
pub use matrix::Matrix;
pub use policy::{bimatrix_payoff, evaluate_policies, MarkovPolicy, ValueTable};
pub use strategy::MixedStrategy;

/// Tolerance for all certificate checks (maximin guarantees, set membership).
pub const TOL_VERIFY: f64 = 1e-6;
