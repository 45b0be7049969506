//! Equilibrium values of every sub-duel and the ε-equilibrium behavioral
//! strategies built on the timing grid.

use serde::Serialize;

use crate::error::{DuelError, Result};
use crate::payoff::{DuelSpec, Player};
use crate::tgrid::TGrid;

/// Agreement required between the different routes to the same value.
pub const VALUE_TOL: f64 = 1e-10;

const MAX_HALVINGS: usize = 1100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumValue {
    pub mu: usize,
    pub nu: usize,
    pub v1: f64,
    pub v2: f64,
}

/// `(v¹, v²)` for every state `0 ≤ μ ≤ m`, `0 ≤ ν ≤ n`. The `(0, 0)` entry
/// is the empty duel and holds zeros.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTable {
    pub m: usize,
    pub n: usize,
    v1: Vec<f64>,
    v2: Vec<f64>,
}

impl ValueTable {
    fn zeros(m: usize, n: usize) -> Self {
        let len = (m + 1) * (n + 1);
        ValueTable {
            m,
            n,
            v1: vec![0.0; len],
            v2: vec![0.0; len],
        }
    }

    #[inline]
    fn idx(&self, mu: usize, nu: usize) -> usize {
        assert!(mu <= self.m && nu <= self.n, "state ({mu}, {nu}) outside table");
        mu * (self.n + 1) + nu
    }

    pub fn get(&self, mu: usize, nu: usize) -> EquilibriumValue {
        let i = self.idx(mu, nu);
        EquilibriumValue {
            mu,
            nu,
            v1: self.v1[i],
            v2: self.v2[i],
        }
    }

    pub fn value(&self, player: Player, mu: usize, nu: usize) -> f64 {
        let i = self.idx(mu, nu);
        match player {
            Player::One => self.v1[i],
            Player::Two => self.v2[i],
        }
    }

    /// Value of the full duel, `v_{mn}`.
    pub fn top(&self) -> EquilibriumValue {
        self.get(self.m, self.n)
    }

    pub fn iter(&self) -> impl Iterator<Item = EquilibriumValue> + '_ {
        (0..=self.m).flat_map(move |mu| (0..=self.n).map(move |nu| self.get(mu, nu)))
    }

    /// Largest entrywise difference over states other than `(0, 0)`.
    pub fn max_difference(&self, other: &ValueTable) -> f64 {
        self.iter()
            .zip(other.iter())
            .filter(|(x, _)| (x.mu, x.nu) != (0, 0))
            .map(|(x, y)| (x.v1 - y.v1).abs().max((x.v2 - y.v2).abs()))
            .fold(0.0, f64::max)
    }
}

fn check_grid(spec: &DuelSpec, grid: &TGrid) -> Result<()> {
    if grid.m() < spec.m || grid.n() < spec.n {
        return Err(DuelError::DimensionMismatch(format!(
            "grid is {}x{}, spec needs {}x{}",
            grid.m(),
            grid.n(),
            spec.m,
            spec.n
        )));
    }
    Ok(())
}

/// Closed-form values from the two products of the grid equation. Both
/// product forms are computed and must agree to [`VALUE_TOL`].
pub fn value_closed(spec: &DuelSpec, grid: &TGrid) -> Result<ValueTable> {
    check_grid(spec, grid)?;
    let [a1, a2] = spec.a;
    let [b1, b2] = spec.b;
    let mut table = ValueTable::zeros(spec.m, spec.n);
    for mu in 0..=spec.m {
        for nu in 0..=spec.n {
            if mu == 0 && nu == 0 {
                continue;
            }
            let own: f64 = (1..=mu).map(|i| 1.0 - spec.p1.value(grid.get(i, nu))).product();
            let opp: f64 = (1..=nu).map(|j| 1.0 - spec.p2.value(grid.get(mu, j))).product();
            let v1 = a1 - (a1 + b1) * own;
            let v1_alt = (a1 + b1) * opp - b1;
            let v2 = (a2 + b2) * own - b2;
            let v2_alt = a2 - (a2 + b2) * opp;
            let gap = (v1 - v1_alt).abs().max((v2 - v2_alt).abs());
            if gap > VALUE_TOL {
                return Err(DuelError::Inconsistent {
                    mu,
                    nu,
                    detail: format!("product forms differ by {gap:e}; grid not solved for these profiles?"),
                });
            }
            let i = table.idx(mu, nu);
            table.v1[i] = v1;
            table.v2[i] = v2;
        }
    }
    Ok(table)
}

/// The four one-step recurrences: `v¹` stepping down Player I's resources
/// or Player II's, and likewise for `v²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceTables {
    pub v1_by_own_shots: Vec<f64>,
    pub v1_by_opponent_shots: Vec<f64>,
    pub v2_by_own_shots: Vec<f64>,
    pub v2_by_opponent_shots: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

impl RecurrenceTables {
    /// Largest disagreement between any two recurrence paths, or between a
    /// path and `closed`, over all states except `(0, 0)`.
    pub fn max_discrepancy(&self, closed: &ValueTable) -> f64 {
        let mut worst = 0.0_f64;
        for mu in 0..=self.m {
            for nu in 0..=self.n {
                if mu == 0 && nu == 0 {
                    continue;
                }
                let i = mu * (self.n + 1) + nu;
                let c = closed.get(mu, nu);
                for v in [self.v1_by_own_shots[i], self.v1_by_opponent_shots[i]] {
                    worst = worst.max((v - c.v1).abs());
                }
                for v in [self.v2_by_own_shots[i], self.v2_by_opponent_shots[i]] {
                    worst = worst.max((v - c.v2).abs());
                }
                worst = worst
                    .max((self.v1_by_own_shots[i] - self.v1_by_opponent_shots[i]).abs())
                    .max((self.v2_by_own_shots[i] - self.v2_by_opponent_shots[i]).abs());
            }
        }
        worst
    }

    /// Table holding the first `v¹` path and the first `v²` path.
    pub fn to_table(&self) -> ValueTable {
        ValueTable {
            m: self.m,
            n: self.n,
            v1: self.v1_by_own_shots.clone(),
            v2: self.v2_by_own_shots.clone(),
        }
    }
}

/// Values by the one-step recurrences, each anchored at its own boundary.
pub fn value_recurrence(spec: &DuelSpec, grid: &TGrid) -> Result<RecurrenceTables> {
    check_grid(spec, grid)?;
    let (m, n) = (spec.m, spec.n);
    let [a1, a2] = spec.a;
    let [b1, b2] = spec.b;
    let len = (m + 1) * (n + 1);
    let idx = |mu: usize, nu: usize| mu * (n + 1) + nu;
    let mut t = RecurrenceTables {
        v1_by_own_shots: vec![0.0; len],
        v1_by_opponent_shots: vec![0.0; len],
        v2_by_own_shots: vec![0.0; len],
        v2_by_opponent_shots: vec![0.0; len],
        m,
        n,
    };
    for mu in 0..=m {
        for nu in 0..=n {
            if mu == 0 && nu == 0 {
                continue;
            }
            let i = idx(mu, nu);
            if nu == 0 {
                t.v1_by_own_shots[i] = a1;
                t.v1_by_opponent_shots[i] = a1;
                t.v2_by_own_shots[i] = -b2;
                t.v2_by_opponent_shots[i] = -b2;
                continue;
            }
            if mu == 0 {
                t.v1_by_own_shots[i] = -b1;
                t.v1_by_opponent_shots[i] = -b1;
                t.v2_by_own_shots[i] = a2;
                t.v2_by_opponent_shots[i] = a2;
                continue;
            }
            let time = grid.get(mu, nu);
            let p = spec.p1.value(time);
            let q = spec.p2.value(time);
            t.v1_by_own_shots[i] = a1 * p + (1.0 - p) * t.v1_by_own_shots[idx(mu - 1, nu)];
            t.v1_by_opponent_shots[i] = -b1 * q + (1.0 - q) * t.v1_by_opponent_shots[idx(mu, nu - 1)];
            t.v2_by_own_shots[i] = a2 * q + (1.0 - q) * t.v2_by_own_shots[idx(mu, nu - 1)];
            t.v2_by_opponent_shots[i] = -b2 * p + (1.0 - p) * t.v2_by_opponent_shots[idx(mu - 1, nu)];
        }
    }
    Ok(t)
}

/// How a player picks the next action time in a given state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ActionRule {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Act at a fixed time.
    At { time: f64 },
}

/// An [`ActionRule`] restricted to times not before `now`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conditional {
    Uniform { lo: f64, hi: f64 },
    Point(f64),
}

impl ActionRule {
    /// Distribution of the next action given the state was entered at
    /// `now`: the part of the support after `now`, or an immediate action
    /// when the whole support has passed.
    pub fn conditional(&self, now: f64) -> Conditional {
        match *self {
            ActionRule::Uniform { lo, hi } => {
                let lo = lo.max(now);
                if hi > lo {
                    Conditional::Uniform { lo, hi }
                } else {
                    Conditional::Point(lo)
                }
            }
            ActionRule::At { time } => Conditional::Point(time.max(now)),
        }
    }

    /// Times where the rule's distribution has a kink or an atom.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ActionRule::Uniform { lo, hi } => vec![lo, hi],
            ActionRule::At { time } => vec![time],
        }
    }
}

/// A per-state rule for one player's next action time.
///
/// States where the opponent has no resources left map to an action at
/// `t = 1`; states where this player has none have no rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehavioralStrategy {
    pub player: Player,
    pub m: usize,
    pub n: usize,
    /// `(μ−1) * n + (ν−1)` for `μ, ν ≥ 1`.
    rules: Vec<ActionRule>,
}

impl BehavioralStrategy {
    /// Strategy from a rule per state with both players holding resources.
    pub fn from_fn(player: Player, m: usize, n: usize, mut rule: impl FnMut(usize, usize) -> ActionRule) -> Self {
        let mut rules = Vec::with_capacity(m * n);
        for mu in 1..=m {
            for nu in 1..=n {
                rules.push(rule(mu, nu));
            }
        }
        BehavioralStrategy { player, m, n, rules }
    }

    /// Always act at `time` (or immediately, if `time` has passed).
    pub fn constant(player: Player, m: usize, n: usize, time: f64) -> Self {
        Self::from_fn(player, m, n, |_, _| ActionRule::At { time })
    }

    /// Rule at state `(μ, ν)`, or `None` when this player has no
    /// resources left.
    pub fn rule(&self, mu: usize, nu: usize) -> Option<ActionRule> {
        let (own, opp) = match self.player {
            Player::One => (mu, nu),
            Player::Two => (nu, mu),
        };
        if own == 0 || mu > self.m || nu > self.n {
            None
        } else if opp == 0 {
            Some(ActionRule::At { time: 1.0 })
        } else {
            Some(self.rules[(mu - 1) * self.n + (nu - 1)])
        }
    }

    /// Every rule breakpoint, including the terminal action at 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.rules.iter().flat_map(|r| r.breakpoints()).collect();
        out.push(1.0);
        out
    }

    /// `(μ, ν, rule)` for every state with both players holding resources.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize, ActionRule)> + '_ {
        (1..=self.m).flat_map(move |mu| (1..=self.n).map(move |nu| (mu, nu, self.rules[(mu - 1) * self.n + (nu - 1)])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub m: usize,
    pub n: usize,
    /// Support length per state, `(μ−1) * n + (ν−1)`.
    delta: Vec<f64>,
}

impl EpsilonParams {
    pub fn delta(&self, mu: usize, nu: usize) -> f64 {
        assert!((1..=self.m).contains(&mu) && (1..=self.n).contains(&nu));
        self.delta[(mu - 1) * self.n + (nu - 1)]
    }
}

/// `min{1/(A₁+B₁), 1/(A₂+B₂)} / 2`.
pub fn lambda(spec: &DuelSpec) -> f64 {
    (1.0 / (spec.a[0] + spec.b[0])).min(1.0 / (spec.a[1] + spec.b[1])) / 2.0
}

/// Support length for state `(μ, ν)`: the largest `w / 2^k` (`k ≥ 1`, `w`
/// the corridor width) keeping both accuracies within `bound` of their
/// value at the grid time.
fn support_length(spec: &DuelSpec, grid: &TGrid, mu: usize, nu: usize, bound: f64) -> Result<f64> {
    let t = grid.get(mu, nu);
    let width = grid.corridor_upper(mu, nu) - t;
    let (p_at, q_at) = (spec.p1.value(t), spec.p2.value(t));
    let mut delta = width / 2.0;
    for _ in 0..MAX_HALVINGS {
        if delta <= 0.0 {
            break;
        }
        let end = t + delta;
        if spec.p1.value(end) < p_at + bound && spec.p2.value(end) < q_at + bound {
            return Ok(delta);
        }
        delta /= 2.0;
    }
    Err(DuelError::Inconsistent {
        mu,
        nu,
        detail: format!("no positive support length keeps accuracy growth below {bound:e}"),
    })
}

/// The ε-equilibrium pair: both players draw their next action uniformly
/// from `[t_{μν}, t_{μν} + δ_{μν}]` in every state.
pub fn epsilon_strategy(
    spec: &DuelSpec,
    grid: &TGrid,
    epsilon: f64,
) -> Result<(BehavioralStrategy, BehavioralStrategy, EpsilonParams)> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(DuelError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    check_grid(spec, grid)?;
    let (m, n) = (spec.m, spec.n);
    let lambda = lambda(spec);
    let mut delta = Vec::with_capacity(m * n);
    for mu in 1..=m {
        for nu in 1..=n {
            delta.push(support_length(spec, grid, mu, nu, lambda * epsilon)?);
        }
    }
    let params = EpsilonParams {
        epsilon,
        lambda,
        m,
        n,
        delta,
    };
    let support = |mu: usize, nu: usize| {
        let lo = grid.get(mu, nu);
        ActionRule::Uniform {
            lo,
            hi: lo + params.delta(mu, nu),
        }
    };
    let x = BehavioralStrategy::from_fn(Player::One, m, n, support);
    let y = BehavioralStrategy::from_fn(Player::Two, m, n, support);
    Ok((x, y, params))
}
