use serde::Serialize;

use crate::payoff::Player;

/// Planned action time as a step function of the time the state was
/// entered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSchedule {
    /// Increasing entry times; the first is 0.
    entry: Vec<f64>,
    action: Vec<f64>,
}

impl PlanSchedule {
    pub fn fixed(time: f64) -> Self {
        PlanSchedule {
            entry: vec![0.0],
            action: vec![time],
        }
    }

    pub(crate) fn new(entry: Vec<f64>, action: Vec<f64>) -> Self {
        debug_assert_eq!(entry.len(), action.len());
        debug_assert!(entry.first() == Some(&0.0));
        PlanSchedule { entry, action }
    }

    /// Action time when the state is entered at `now`, never earlier than
    /// `now`.
    pub fn action_at(&self, now: f64) -> f64 {
        let k = self.entry.partition_point(|&e| e <= now).max(1) - 1;
        self.action[k].max(now)
    }
}

/// A pure contingent plan: one planned next-action time per state, which
/// may depend on when the state was entered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurePlan {
    player: Player,
    m: usize,
    n: usize,
    /// `(μ−1) * n + (ν−1)` for `μ, ν ≥ 1`.
    schedules: Vec<PlanSchedule>,
}

impl PurePlan {
    pub fn from_schedules(player: Player, m: usize, n: usize, schedules: Vec<PlanSchedule>) -> Self {
        assert_eq!(schedules.len(), m * n, "one schedule per interior state");
        PurePlan {
            player,
            m,
            n,
            schedules,
        }
    }

    /// Act at `time` in every state (immediately, once `time` has passed).
    pub fn constant(player: Player, m: usize, n: usize, time: f64) -> Self {
        Self::from_schedules(player, m, n, vec![PlanSchedule::fixed(time); m * n])
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Planned time at `(μ, ν)` entered at `now`; `None` when the planning
    /// player has no resources, `1` when the opponent has none.
    pub fn planned(&self, mu: usize, nu: usize, now: f64) -> Option<f64> {
        let (own, opp) = match self.player {
            Player::One => (mu, nu),
            Player::Two => (nu, mu),
        };
        if own == 0 || mu > self.m || nu > self.n {
            None
        } else if opp == 0 {
            Some(1.0_f64.max(now))
        } else {
            Some(self.schedules[(mu - 1) * self.n + (nu - 1)].action_at(now))
        }
    }
}
