//! Numerical checks of the ε-equilibrium and ε-maxmin properties.
//!
//! Expected payoffs of the strategy pair come from Monte Carlo; deviations
//! are searched with the gridded dynamic program in [`dp`]. Every check is
//! an inequality `lhs ≤ rhs` whose right side carries the statistical and
//! discretization slack used.

pub mod dp;
pub mod plan;
pub mod sampling;

use serde::Serialize;

use crate::equilibrium::{epsilon_strategy, value_closed, BehavioralStrategy};
use crate::error::{DuelError, Result};
use crate::payoff::{DuelSpec, Player};
use crate::tgrid::{solve_grid, DEFAULT_TOL};

pub use dp::{best_response, payoff_floor, plan_search, PlanValue, Sense};
pub use plan::{PlanSchedule, PurePlan};
pub use sampling::{expected_payoff, sample_play, sample_play_seeded, sample_rng, Estimate, Method, Side};

pub const DEFAULT_SEED: u64 = 0x5eed_2c0f_fee1;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_GRID_POINTS: usize = 2000;
pub const DEFAULT_MAX_RESOURCES: usize = 3;

/// Work limits of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budgets {
    pub samples: usize,
    pub grid_points: usize,
    pub seed: u64,
    /// Largest `m` or `n` accepted.
    pub max_resources: usize,
    /// Tolerance for the timing grid.
    pub grid_tol: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            samples: DEFAULT_SAMPLES,
            grid_points: DEFAULT_GRID_POINTS,
            seed: DEFAULT_SEED,
            max_resources: DEFAULT_MAX_RESOURCES,
            grid_tol: DEFAULT_TOL,
        }
    }
}

impl Budgets {
    fn check(&self, spec: &DuelSpec) -> Result<()> {
        if spec.m > self.max_resources || spec.n > self.max_resources {
            return Err(DuelError::BudgetExceeded(format!(
                "m={}, n={} exceeds the resource budget {}",
                spec.m, spec.n, self.max_resources
            )));
        }
        if self.samples < 2 {
            return Err(DuelError::InvalidArgument(format!(
                "need at least 2 samples, got {}",
                self.samples
            )));
        }
        if self.grid_points < 4 {
            return Err(DuelError::InvalidArgument(format!(
                "need at least 4 grid points, got {}",
                self.grid_points
            )));
        }
        if self.grid_tol.is_nan() || self.grid_tol <= 0.0 {
            return Err(DuelError::InvalidArgument(format!(
                "grid tolerance must be positive, got {}",
                self.grid_tol
            )));
        }
        Ok(())
    }
}

/// One inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            lhs,
            rhs,
            passed: lhs <= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    EpsilonEquilibrium,
    Maxmin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub kind: ReportKind,
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    /// `(v¹_{mn}, v²_{mn})`.
    pub value: [f64; 2],
    /// `(K̄₁, K̄₂)` of the strategy pair, with standard errors.
    pub estimate: Option<[f64; 2]>,
    pub stderr: Option<[f64; 2]>,
    /// Best own payoff of each player over plans against the other's strategy.
    pub best_response: Option<[f64; 2]>,
    /// Lowest own payoff each player's strategy allows over opponent plans.
    pub maxmin_floor: Option<[f64; 2]>,
    /// DP refinement estimate per player.
    pub discretization: [f64; 2],
    /// Slack added to ε in every check for player j.
    pub slack: [f64; 2],
    pub samples: usize,
    pub grid_points: usize,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn equilibrium_pair(
    spec: &DuelSpec,
    epsilon: f64,
    budgets: &Budgets,
) -> Result<([f64; 2], BehavioralStrategy, BehavioralStrategy)> {
    spec.check()?;
    budgets.check(spec)?;
    let grid = solve_grid(&spec.p1, &spec.p2, spec.m.max(1), spec.n.max(1), budgets.grid_tol)?;
    let top = value_closed(spec, &grid)?.get(spec.m, spec.n);
    let (x, y, _) = epsilon_strategy(spec, &grid, epsilon)?;
    Ok(([top.v1, top.v2], x, y))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(DuelError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )))
    }
}

/// Check that the ε-strategy pair of `spec` is an ε-equilibrium.
pub fn verify_epsilon_equilibrium(spec: &DuelSpec, epsilon: f64, budgets: &Budgets) -> Result<VerificationReport> {
    let (value, x, y) = equilibrium_pair(spec, epsilon, budgets)?;
    run_equilibrium_checks(spec, epsilon, value, &x, &y, budgets)
}

/// Run the ε-equilibrium checks on an arbitrary strategy pair, measured
/// against the value of `spec`. Used for control experiments with
/// substituted strategies.
pub fn verify_strategies(
    spec: &DuelSpec,
    epsilon: f64,
    x: &BehavioralStrategy,
    y: &BehavioralStrategy,
    budgets: &Budgets,
) -> Result<VerificationReport> {
    let (value, _, _) = equilibrium_pair(spec, epsilon, budgets)?;
    run_equilibrium_checks(spec, epsilon, value, x, y, budgets)
}

fn run_equilibrium_checks(
    spec: &DuelSpec,
    epsilon: f64,
    value: [f64; 2],
    x: &BehavioralStrategy,
    y: &BehavioralStrategy,
    budgets: &Budgets,
) -> Result<VerificationReport> {
    check_epsilon(epsilon)?;
    if x.player != Player::One || y.player != Player::Two {
        return Err(DuelError::InvalidArgument(
            "expected a Player I and a Player II strategy".into(),
        ));
    }
    let est = expected_payoff(
        spec,
        x.into(),
        y.into(),
        Method::MonteCarlo {
            samples: budgets.samples,
            seed: budgets.seed,
        },
    )?;
    let br1 = best_response(spec, y, Player::One, budgets.grid_points)?;
    let br2 = best_response(spec, x, Player::Two, budgets.grid_points)?;
    let discretization = [br1.discretization, br2.discretization];
    let slack = [0, 1].map(|j| 3.0 * est.stderr[j] + discretization[j]);
    let best = [br1.value, br2.value];

    let mut checks = Vec::new();
    for j in 0..2 {
        let who = j + 1;
        checks.push(CheckOutcome::le(
            format!("best-response-{who}"),
            best[j],
            est.mean[j] + epsilon + slack[j],
        ));
    }
    for j in 0..2 {
        let who = j + 1;
        checks.push(CheckOutcome::le(
            format!("value-gap-{who}"),
            (est.mean[j] - value[j]).abs(),
            epsilon + slack[j],
        ));
    }
    push_bound_checks(&mut checks, spec, &est);
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        kind: ReportKind::EpsilonEquilibrium,
        m: spec.m,
        n: spec.n,
        epsilon,
        value,
        estimate: Some(est.mean),
        stderr: Some(est.stderr),
        best_response: Some(best),
        maxmin_floor: None,
        discretization,
        slack,
        samples: budgets.samples,
        grid_points: budgets.grid_points,
        seed: budgets.seed,
        checks,
        passed,
    })
}

/// Every sampled payoff of player j lies in `[−B_j, A_j]`.
fn push_bound_checks(checks: &mut Vec<CheckOutcome>, spec: &DuelSpec, est: &Estimate) {
    for j in 0..2 {
        let who = j + 1;
        checks.push(CheckOutcome::le(format!("sample-max-{who}"), est.max[j], spec.a[j]));
        checks.push(CheckOutcome::le(format!("sample-min-{who}"), -spec.b[j], est.min[j]));
    }
}

/// Check that each ε-strategy guarantees its owner at least `v − ε`.
pub fn verify_maxmin(spec: &DuelSpec, epsilon: f64, budgets: &Budgets) -> Result<VerificationReport> {
    let (value, x, y) = equilibrium_pair(spec, epsilon, budgets)?;
    run_maxmin_checks(spec, epsilon, value, &x, &y, budgets)
}

/// Maxmin checks on an arbitrary strategy pair.
pub fn verify_maxmin_strategies(
    spec: &DuelSpec,
    epsilon: f64,
    x: &BehavioralStrategy,
    y: &BehavioralStrategy,
    budgets: &Budgets,
) -> Result<VerificationReport> {
    let (value, _, _) = equilibrium_pair(spec, epsilon, budgets)?;
    run_maxmin_checks(spec, epsilon, value, x, y, budgets)
}

fn run_maxmin_checks(
    spec: &DuelSpec,
    epsilon: f64,
    value: [f64; 2],
    x: &BehavioralStrategy,
    y: &BehavioralStrategy,
    budgets: &Budgets,
) -> Result<VerificationReport> {
    check_epsilon(epsilon)?;
    if x.player != Player::One || y.player != Player::Two {
        return Err(DuelError::InvalidArgument(
            "expected a Player I and a Player II strategy".into(),
        ));
    }
    let f1 = payoff_floor(spec, x, budgets.grid_points)?;
    let f2 = payoff_floor(spec, y, budgets.grid_points)?;
    let floor = [f1.value, f2.value];
    let discretization = [f1.discretization, f2.discretization];
    let checks: Vec<CheckOutcome> = (0..2)
        .map(|j| {
            CheckOutcome::le(
                format!("maxmin-floor-{}", j + 1),
                value[j] - epsilon - discretization[j],
                floor[j],
            )
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        kind: ReportKind::Maxmin,
        m: spec.m,
        n: spec.n,
        epsilon,
        value,
        estimate: None,
        stderr: None,
        best_response: None,
        maxmin_floor: Some(floor),
        discretization,
        slack: discretization,
        samples: 0,
        grid_points: budgets.grid_points,
        seed: budgets.seed,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_budget() -> Budgets {
        Budgets {
            samples: 20_000,
            grid_points: 400,
            ..Budgets::default()
        }
    }

    #[test]
    fn equilibrium_passes_small() {
        let spec = DuelSpec::linear(1, 1, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let r = verify_epsilon_equilibrium(&spec, 0.05, &small_budget()).unwrap();
        assert!(r.passed, "{r:#?}");
        assert_eq!(r.checks.len(), 8);
    }

    #[test]
    fn early_opponent_is_caught() {
        let spec = DuelSpec::linear(1, 1, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let b = small_budget();
        let (_, x, _) = equilibrium_pair(&spec, 0.05, &b).unwrap();
        let y = BehavioralStrategy::constant(Player::Two, 1, 1, 0.25);
        let r = verify_strategies(&spec, 0.05, &x, &y, &b).unwrap();
        assert!(!r.passed);
        assert!(r.failures().any(|c| c.name == "best-response-2"));
    }

    #[test]
    fn no_opponent_resources() {
        let spec = DuelSpec::linear(2, 0, [1.5, 1.0], [1.0, 0.5]).unwrap();
        let r = verify_maxmin(&spec, 0.05, &small_budget()).unwrap();
        assert_eq!(r.maxmin_floor.unwrap()[0], 1.5);
        assert!(r.passed);
    }

    #[test]
    fn budget_enforced() {
        let spec = DuelSpec::linear(4, 1, [1.0, 1.0], [1.0, 1.0]).unwrap();
        assert!(matches!(
            verify_epsilon_equilibrium(&spec, 0.05, &Budgets::default()),
            Err(DuelError::BudgetExceeded(_))
        ));
        let spec = DuelSpec::linear(1, 1, [1.0, 1.0], [1.0, 1.0]).unwrap();
        assert!(verify_epsilon_equilibrium(&spec, 0.0, &small_budget()).is_err());
    }

    #[test]
    fn deterministic_reports() {
        let spec = DuelSpec::linear(2, 1, [1.0, 2.0], [0.5, 1.0]).unwrap();
        let b = Budgets {
            samples: 5_000,
            grid_points: 200,
            ..Budgets::default()
        };
        let r1 = verify_epsilon_equilibrium(&spec, 0.1, &b).unwrap();
        let r2 = verify_epsilon_equilibrium(&spec, 0.1, &b).unwrap();
        assert_eq!(r1, r2);
    }
}
