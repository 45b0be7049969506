//! Optimal pure plans against a fixed behavioral strategy.
//!
//! Backward induction over `(state, entry time)` on a time grid. In each
//! state the planner picks when to act next, knowing only the opponent's
//! conditional density for its own next action; whichever acts first moves
//! the duel to a sub-state whose value was computed earlier. The grid is
//! the uniform `G`-point grid merged with every breakpoint of the
//! opponent's rules, so support edges and atoms are represented exactly.

use serde::Serialize;

use crate::equilibrium::{BehavioralStrategy, Conditional};
use crate::error::{DuelError, Result};
use crate::payoff::{DuelSpec, Player};
use crate::verify::plan::{PlanSchedule, PurePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    #[inline]
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Maximize => candidate > incumbent,
            Sense::Minimize => candidate < incumbent,
        }
    }
}

/// Result of a plan search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanValue {
    /// Optimal value of the objective from the initial state at `t = 0`.
    pub value: f64,
    /// Same search on a grid with half as many uniform points.
    pub coarse_value: f64,
    /// `|value − coarse_value|`, reported as the discretization bound.
    pub discretization: f64,
    pub grid_points: usize,
    #[serde(skip)]
    pub plan: PurePlan,
}

struct Search<'a> {
    spec: &'a DuelSpec,
    planner: Player,
    opponent: &'a BehavioralStrategy,
    objective: Player,
    sense: Sense,
}

/// Best response of `for_player` to `opponent`: the plan maximizing
/// `for_player`'s own expected payoff.
pub fn best_response(
    spec: &DuelSpec,
    opponent: &BehavioralStrategy,
    for_player: Player,
    grid_points: usize,
) -> Result<PlanValue> {
    plan_search(spec, opponent, for_player, for_player, Sense::Maximize, grid_points)
}

/// The opponent plan minimizing `strategy`'s owner's expected payoff;
/// its value is the payoff floor the strategy guarantees.
pub fn payoff_floor(spec: &DuelSpec, strategy: &BehavioralStrategy, grid_points: usize) -> Result<PlanValue> {
    plan_search(
        spec,
        strategy,
        strategy.player.other(),
        strategy.player,
        Sense::Minimize,
        grid_points,
    )
}

/// Optimize `objective`'s payoff (in direction `sense`) over pure plans of
/// `planner` against the behavioral `opponent`.
pub fn plan_search(
    spec: &DuelSpec,
    opponent: &BehavioralStrategy,
    planner: Player,
    objective: Player,
    sense: Sense,
    grid_points: usize,
) -> Result<PlanValue> {
    if grid_points < 2 {
        return Err(DuelError::InvalidArgument(format!(
            "grid needs at least 2 points, got {grid_points}"
        )));
    }
    if opponent.player == planner {
        return Err(DuelError::InvalidArgument(
            "opponent strategy belongs to the planner".into(),
        ));
    }
    if opponent.m < spec.m || opponent.n < spec.n {
        return Err(DuelError::DimensionMismatch(format!(
            "opponent strategy covers {}x{} states, duel needs {}x{}",
            opponent.m, opponent.n, spec.m, spec.n
        )));
    }
    if let Some(t) = opponent.breakpoints().into_iter().find(|t| !(0.0..=1.0).contains(t)) {
        return Err(DuelError::InvalidArgument(format!(
            "opponent acts at {t}, outside [0, 1]"
        )));
    }
    let search = Search {
        spec,
        planner,
        opponent,
        objective,
        sense,
    };
    let (value, plan) = search.solve(grid_points);
    let coarse_points = (grid_points / 2).max(2);
    let (coarse_value, _) = search.solve(coarse_points);
    Ok(PlanValue {
        value,
        coarse_value,
        discretization: (value - coarse_value).abs(),
        grid_points,
        plan,
    })
}

impl Search<'_> {
    fn time_nodes(&self, grid_points: usize) -> Vec<f64> {
        let mut nodes: Vec<f64> = (0..grid_points).map(|k| k as f64 / (grid_points - 1) as f64).collect();
        nodes.extend(self.opponent.breakpoints());
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        nodes
    }

    /// Objective payoff when Player I (resp. II) alone succeeds.
    fn rewards(&self) -> (f64, f64) {
        let [a1, a2] = self.spec.a;
        let [b1, b2] = self.spec.b;
        match self.objective {
            Player::One => (a1, -b1),
            Player::Two => (-b2, a2),
        }
    }

    fn solve(&self, grid_points: usize) -> (f64, PurePlan) {
        let spec = self.spec;
        let (m, n) = (spec.m, spec.n);
        let nodes = self.time_nodes(grid_points);
        let len = nodes.len();
        let (win1, win2) = self.rewards();
        let at = |x: f64| {
            nodes
                .binary_search_by(|p| p.total_cmp(&x))
                .expect("conditional endpoints are grid nodes")
        };

        let state = |mu: usize, nu: usize| mu * (n + 1) + nu;
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); (m + 1) * (n + 1)];
        for mu in 0..=m {
            for nu in 0..=n {
                let terminal = match (mu, nu) {
                    (0, 0) => Some(0.0),
                    (_, 0) => Some(win1),
                    (0, _) => Some(win2),
                    _ => None,
                };
                if let Some(v) = terminal {
                    values[state(mu, nu)] = vec![v; len];
                }
            }
        }
        let mut schedules = vec![PlanSchedule::fixed(1.0); m * n];

        let p1: Vec<f64> = nodes.iter().map(|&t| spec.p1.value(t)).collect();
        let p2: Vec<f64> = nodes.iter().map(|&t| spec.p2.value(t)).collect();

        for diagonal in 2..=m + n {
            for mu in diagonal.saturating_sub(n).max(1)..=(diagonal - 1).min(m) {
                let nu = diagonal - mu;
                let after_one = &values[state(mu - 1, nu)];
                let after_two = &values[state(mu, nu - 1)];
                let after_both = &values[state(mu - 1, nu - 1)];

                let one_first: Vec<f64> = (0..len).map(|j| win1 * p1[j] + (1.0 - p1[j]) * after_one[j]).collect();
                let two_first: Vec<f64> = (0..len).map(|j| win2 * p2[j] + (1.0 - p2[j]) * after_two[j]).collect();
                let together: Vec<f64> = (0..len)
                    .map(|j| {
                        win1 * p1[j] * (1.0 - p2[j])
                            + win2 * (1.0 - p1[j]) * p2[j]
                            + (1.0 - p1[j]) * (1.0 - p2[j]) * after_both[j]
                    })
                    .collect();
                let (mine, theirs) = match self.planner {
                    Player::One => (&one_first, &two_first),
                    Player::Two => (&two_first, &one_first),
                };
                // running trapezoid integral of the opponent-first value
                let mut integral = vec![0.0; len];
                for j in 1..len {
                    integral[j] = integral[j - 1] + 0.5 * (theirs[j] + theirs[j - 1]) * (nodes[j] - nodes[j - 1]);
                }

                let rule = self.opponent.rule(mu, nu).expect("opponent holds resources here");
                let mut value = vec![0.0; len];
                let mut action = vec![0.0; len];
                for k in 0..len {
                    let now = nodes[k];
                    let (best, time) = match rule.conditional(now) {
                        Conditional::Uniform { lo, hi } => {
                            let (ic, ih) = (at(lo), at(hi));
                            let width = hi - lo;
                            let mut best = (f64::NAN, now);
                            for j in k..=ih {
                                let w = if j < ic {
                                    mine[j]
                                } else {
                                    (integral[j] - integral[ic] + (hi - nodes[j]) * mine[j]) / width
                                };
                                if best.0.is_nan() || self.sense.better(w, best.0) {
                                    best = (w, nodes[j]);
                                }
                            }
                            best
                        }
                        Conditional::Point(u) => {
                            let iu = at(u);
                            let mut best = (together[iu], u);
                            for j in k..iu {
                                if self.sense.better(mine[j], best.0) {
                                    best = (mine[j], nodes[j]);
                                }
                            }
                            if iu + 1 < len && self.sense.better(theirs[iu], best.0) {
                                best = (theirs[iu], nodes[iu + 1]);
                            }
                            best
                        }
                    };
                    value[k] = best;
                    action[k] = time;
                }
                values[state(mu, nu)] = value;
                schedules[(mu - 1) * n + (nu - 1)] = PlanSchedule::new(nodes.clone(), action);
            }
        }
        let top = values[state(m, n)][0];
        (top, PurePlan::from_schedules(self.planner, m, n, schedules))
    }
}
