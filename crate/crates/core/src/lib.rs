//! Nonzero-sum noisy duels with discrete firing.
//!
//! Two players hold `m` and `n` action units on `[0, 1]`; each action of
//! player j at time t succeeds with probability `P_j(t)` and every action is
//! observed by the opponent. The crate solves the timing grid that drives
//! the ε-equilibrium strategies, evaluates expected payoffs of plays,
//! tabulates equilibrium values, verifies the equilibrium and maxmin
//! properties numerically, and checks Pareto properties of plays.

pub mod accuracy;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod pareto;
pub mod payoff;
pub mod tgrid;
pub mod verify;

pub use accuracy::AccuracyProfile;
pub use error::{DuelError, Result};
pub use payoff::{evaluate, DuelSpec, PayoffVector, Play, Player};
pub use tgrid::{solve_grid, TGrid};
