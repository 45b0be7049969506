//! Realizing plays from strategies, and expected payoffs of strategy pairs.

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{BehavioralStrategy, Conditional};
use crate::error::{DuelError, Result};
use crate::payoff::{evaluate_unchecked, DuelSpec, Play, Player};
use crate::verify::plan::PurePlan;

/// Largest `m + n` accepted by the quadrature estimator.
pub const MAX_QUADRATURE_ACTIONS: usize = 4;

/// One player's behavior: a behavioral strategy or a pure contingent plan.
#[derive(Debug, Clone, Copy)]
pub enum Side<'a> {
    Behavioral(&'a BehavioralStrategy),
    Plan(&'a PurePlan),
}

impl<'a> From<&'a BehavioralStrategy> for Side<'a> {
    fn from(s: &'a BehavioralStrategy) -> Self {
        Side::Behavioral(s)
    }
}

impl<'a> From<&'a PurePlan> for Side<'a> {
    fn from(p: &'a PurePlan) -> Self {
        Side::Plan(p)
    }
}

impl Side<'_> {
    pub fn player(&self) -> Player {
        match self {
            Side::Behavioral(s) => s.player,
            Side::Plan(p) => p.player(),
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Side::Behavioral(s) => (s.m, s.n),
            Side::Plan(p) => (p.m(), p.n()),
        }
    }

    /// Next-action distribution at `(μ, ν)` entered at `now`.
    pub fn conditional(&self, mu: usize, nu: usize, now: f64) -> Option<Conditional> {
        match self {
            Side::Behavioral(s) => s.rule(mu, nu).map(|r| r.conditional(now)),
            Side::Plan(p) => p.planned(mu, nu, now).map(Conditional::Point),
        }
    }
}

fn check_sides(spec: &DuelSpec, one: Side<'_>, two: Side<'_>) -> Result<()> {
    if one.player() != Player::One || two.player() != Player::Two {
        return Err(DuelError::InvalidArgument(
            "first side must belong to Player I and second to Player II".into(),
        ));
    }
    for side in [one, two] {
        let (m, n) = side.dims();
        if m < spec.m || n < spec.n {
            return Err(DuelError::DimensionMismatch(format!(
                "{:?} strategy covers {m}x{n} states, duel needs {}x{}",
                side.player(),
                spec.m,
                spec.n
            )));
        }
    }
    Ok(())
}

fn lookup(side: Side<'_>, mu: usize, nu: usize, now: f64) -> Result<Conditional> {
    side.conditional(mu, nu, now)
        .ok_or_else(|| DuelError::InvalidArgument(format!("{:?} has no rule for state ({mu}, {nu})", side.player())))
}

fn draw(c: Conditional, rng: &mut impl Rng) -> f64 {
    match c {
        Conditional::Point(t) => t,
        Conditional::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
    }
}

/// Realize the all-miss path of the duel. Both sides draw a next time in
/// every state; the earlier one acts (equal times act together) and the
/// state moves on from that moment. Once a side is out of resources the
/// survivor's remaining actions sit at `t = 1`.
pub fn sample_play(spec: &DuelSpec, one: Side<'_>, two: Side<'_>, rng: &mut impl Rng) -> Result<Play> {
    check_sides(spec, one, two)?;
    sample_unchecked(spec, one, two, rng)
}

/// [`sample_play`] with a generator seeded from `seed`.
pub fn sample_play_seeded(spec: &DuelSpec, one: Side<'_>, two: Side<'_>, seed: u64) -> Result<Play> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_play(spec, one, two, &mut rng)
}

fn sample_unchecked(spec: &DuelSpec, one: Side<'_>, two: Side<'_>, rng: &mut impl Rng) -> Result<Play> {
    let mut tau = vec![1.0; spec.m];
    let mut eta = vec![1.0; spec.n];
    let (mut mu, mut nu) = (spec.m, spec.n);
    let mut now = 0.0_f64;
    while mu > 0 && nu > 0 {
        let s = draw(lookup(one, mu, nu, now)?, rng);
        let u = draw(lookup(two, mu, nu, now)?, rng);
        if s < u {
            tau[mu - 1] = s;
            mu -= 1;
            now = s;
        } else if u < s {
            eta[nu - 1] = u;
            nu -= 1;
            now = u;
        } else {
            tau[mu - 1] = s;
            eta[nu - 1] = u;
            mu -= 1;
            nu -= 1;
            now = s;
        }
    }
    Ok(Play::new_unchecked(tau, eta))
}

/// Generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: [f64; 2],
    /// Zero for quadrature.
    pub stderr: [f64; 2],
    /// Smallest and largest per-sample payoff (equal to the mean for
    /// quadrature).
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub method: Method,
}

/// `(K̄₁, K̄₂)` for the pair of sides.
pub fn expected_payoff(spec: &DuelSpec, one: Side<'_>, two: Side<'_>, method: Method) -> Result<Estimate> {
    check_sides(spec, one, two)?;
    match method {
        Method::MonteCarlo { samples, seed } => monte_carlo(spec, one, two, samples, seed, method),
        Method::Quadrature { nodes } => {
            if spec.m + spec.n > MAX_QUADRATURE_ACTIONS {
                return Err(DuelError::BudgetExceeded(format!(
                    "quadrature supports m + n <= {MAX_QUADRATURE_ACTIONS}, got {}",
                    spec.m + spec.n
                )));
            }
            let rule =
                GaussLegendre::new(nodes).map_err(|e| DuelError::InvalidArgument(format!("quadrature nodes: {e}")))?;
            let rule: Vec<(f64, f64)> = rule.nodes().copied().zip(rule.weights().copied()).collect();
            let q = Quadrature { spec, one, two, rule };
            let mean = q.expect(spec.m, spec.n, 0.0)?;
            Ok(Estimate {
                mean,
                stderr: [0.0; 2],
                min: mean,
                max: mean,
                method,
            })
        }
    }
}

fn monte_carlo(
    spec: &DuelSpec,
    one: Side<'_>,
    two: Side<'_>,
    samples: usize,
    seed: u64,
    method: Method,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(DuelError::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let draws: Vec<[f64; 2]> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let play = sample_unchecked(spec, one, two, &mut rng)?;
            let k = evaluate_unchecked(spec, &play);
            Ok([k.k1, k.k2])
        })
        .collect::<Result<_>>()?;

    let mut est = Estimate {
        mean: [0.0; 2],
        stderr: [0.0; 2],
        min: [f64::INFINITY; 2],
        max: [f64::NEG_INFINITY; 2],
        method,
    };
    let count = samples as f64;
    for j in 0..2 {
        let column: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        let mean = pairwise_sum(&column) / count;
        let squares: Vec<f64> = column.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = pairwise_sum(&squares) / (count - 1.0);
        est.mean[j] = mean;
        est.stderr[j] = (variance / count).sqrt();
        est.min[j] = column.iter().copied().fold(f64::INFINITY, f64::min);
        est.max[j] = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(est)
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Nested Gauss–Legendre integration over each state's conditional
/// densities, splitting panels where the other side's distribution kinks.
struct Quadrature<'a> {
    spec: &'a DuelSpec,
    one: Side<'a>,
    two: Side<'a>,
    rule: Vec<(f64, f64)>,
}

type Pair = [f64; 2];

fn add(a: Pair, b: Pair, w: f64) -> Pair {
    [a[0] + w * b[0], a[1] + w * b[1]]
}

impl Quadrature<'_> {
    fn expect(&self, mu: usize, nu: usize, now: f64) -> Result<Pair> {
        let [a1, a2] = self.spec.a;
        let [b1, b2] = self.spec.b;
        match (mu, nu) {
            (0, 0) => return Ok([0.0, 0.0]),
            (_, 0) => return Ok([a1, -b2]),
            (0, _) => return Ok([-b1, a2]),
            _ => {}
        }
        let c1 = lookup(self.one, mu, nu, now)?;
        let c2 = lookup(self.two, mu, nu, now)?;
        match (c1, c2) {
            (Conditional::Point(s), Conditional::Point(u)) => {
                if s < u {
                    self.first_one(mu, nu, s)
                } else if u < s {
                    self.first_two(mu, nu, u)
                } else {
                    self.together(mu, nu, s)
                }
            }
            (Conditional::Uniform { lo, hi }, Conditional::Point(u)) => {
                let cut = u.clamp(lo, hi);
                let early = self.integrate(lo, cut, |s| self.first_one(mu, nu, s))?;
                let late = (hi - cut) / (hi - lo);
                let mut total = [early[0] / (hi - lo), early[1] / (hi - lo)];
                if late > 0.0 {
                    total = add(total, self.first_two(mu, nu, u)?, late);
                }
                Ok(total)
            }
            (Conditional::Point(s), Conditional::Uniform { lo, hi }) => {
                let cut = s.clamp(lo, hi);
                let early = self.integrate(lo, cut, |u| self.first_two(mu, nu, u))?;
                let late = (hi - cut) / (hi - lo);
                let mut total = [early[0] / (hi - lo), early[1] / (hi - lo)];
                if late > 0.0 {
                    total = add(total, self.first_one(mu, nu, s)?, late);
                }
                Ok(total)
            }
            (Conditional::Uniform { lo: l1, hi: h1 }, Conditional::Uniform { lo: l2, hi: h2 }) => {
                let later = |x: f64, lo: f64, hi: f64| ((hi - x.max(lo)) / (hi - lo)).clamp(0.0, 1.0);
                let part1 = self.integrate_split(l1, h1, &[l2, h2], |s| {
                    let w = later(s, l2, h2);
                    Ok(if w > 0.0 {
                        self.first_one(mu, nu, s)?.map(|v| v * w)
                    } else {
                        [0.0; 2]
                    })
                })?;
                let part2 = self.integrate_split(l2, h2, &[l1, h1], |u| {
                    let w = later(u, l1, h1);
                    Ok(if w > 0.0 {
                        self.first_two(mu, nu, u)?.map(|v| v * w)
                    } else {
                        [0.0; 2]
                    })
                })?;
                Ok([
                    part1[0] / (h1 - l1) + part2[0] / (h2 - l2),
                    part1[1] / (h1 - l1) + part2[1] / (h2 - l2),
                ])
            }
        }
    }

    fn first_one(&self, mu: usize, nu: usize, s: f64) -> Result<Pair> {
        let p = self.spec.p1.value(s);
        let c = self.expect(mu - 1, nu, s)?;
        Ok([
            self.spec.a[0] * p + (1.0 - p) * c[0],
            -self.spec.b[1] * p + (1.0 - p) * c[1],
        ])
    }

    fn first_two(&self, mu: usize, nu: usize, u: f64) -> Result<Pair> {
        let q = self.spec.p2.value(u);
        let c = self.expect(mu, nu - 1, u)?;
        Ok([
            -self.spec.b[0] * q + (1.0 - q) * c[0],
            self.spec.a[1] * q + (1.0 - q) * c[1],
        ])
    }

    fn together(&self, mu: usize, nu: usize, t: f64) -> Result<Pair> {
        let p = self.spec.p1.value(t);
        let q = self.spec.p2.value(t);
        let c = self.expect(mu - 1, nu - 1, t)?;
        let miss = (1.0 - p) * (1.0 - q);
        Ok([
            self.spec.a[0] * p * (1.0 - q) - self.spec.b[0] * (1.0 - p) * q + miss * c[0],
            self.spec.a[1] * q * (1.0 - p) - self.spec.b[1] * (1.0 - q) * p + miss * c[1],
        ])
    }

    /// `∫_lo^hi f` (unnormalized).
    fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> Result<Pair>) -> Result<Pair> {
        if hi <= lo {
            return Ok([0.0; 2]);
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = [0.0; 2];
        for &(x, w) in &self.rule {
            acc = add(acc, f(mid + half * x)?, w * half);
        }
        Ok(acc)
    }

    fn integrate_split(&self, lo: f64, hi: f64, cuts: &[f64], f: impl Fn(f64) -> Result<Pair>) -> Result<Pair> {
        let mut points = vec![lo, hi];
        points.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
        points.sort_by(f64::total_cmp);
        let mut acc = [0.0; 2];
        for w in points.windows(2) {
            acc = add(acc, self.integrate(w[0], w[1], &f)?, 1.0);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::epsilon_strategy;
    use crate::payoff::evaluate;
    use crate::tgrid::solve_grid;

    fn setup(m: usize, n: usize, eps: f64) -> (DuelSpec, BehavioralStrategy, BehavioralStrategy) {
        let spec = DuelSpec::linear(m, n, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let grid = solve_grid(&spec.p1, &spec.p2, m, n, 1e-13).unwrap();
        let (x, y, _) = epsilon_strategy(&spec, &grid, eps).unwrap();
        (spec, x, y)
    }

    #[test]
    fn equilibrium_play_lands_in_supports() {
        let (spec, x, y) = setup(1, 1, 0.05);
        let lo = 0.5;
        let hi = lo + 0.0078125; // corridor 0.5 halved until below λε = 0.0125
        for seed in 0..200 {
            let play = sample_play_seeded(&spec, (&x).into(), (&y).into(), seed).unwrap();
            let (s, u) = (play.tau(1), play.eta(1));
            assert!(s != u);
            let first = s.min(u);
            assert!((lo..=hi).contains(&first), "first action {first}");
            assert!(s.max(u) == 1.0, "survivor should wait for t = 1");
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let (spec, x, y) = setup(2, 2, 0.05);
        let a = sample_play_seeded(&spec, (&x).into(), (&y).into(), 7).unwrap();
        let b = sample_play_seeded(&spec, (&x).into(), (&y).into(), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn early_plan_always_acts_first() {
        let (spec, _, y) = setup(2, 2, 0.05);
        let plan = PurePlan::constant(Player::One, 2, 2, 0.0);
        for seed in 0..20 {
            let play = sample_play_seeded(&spec, (&plan).into(), (&y).into(), seed).unwrap();
            // Player I fires both units at t = 0 before II's first support.
            assert_eq!(play.tau_vec(), &[0.0, 0.0]);
            assert_eq!(play.eta_vec(), &[1.0, 1.0]);
        }
    }

    #[test]
    fn point_masses_match_direct_evaluation() {
        let spec = DuelSpec::linear(2, 1, [2.0, 1.0], [0.5, 3.0]).unwrap();
        let x = BehavioralStrategy::constant(Player::One, 2, 1, 0.3);
        let plan = PurePlan::constant(Player::Two, 2, 1, 0.6);
        let est = expected_payoff(&spec, (&x).into(), (&plan).into(), Method::Quadrature { nodes: 8 }).unwrap();
        // I acts at 0.3 twice (the second immediately), II never gets to act
        let play = Play::new(vec![0.3, 0.3], vec![1.0]).unwrap();
        let direct = evaluate(&spec, &play).unwrap();
        assert_eq!(est.mean, [direct.k1, direct.k2]);
        let mc = expected_payoff(
            &spec,
            (&x).into(),
            (&plan).into(),
            Method::MonteCarlo { samples: 16, seed: 1 },
        )
        .unwrap();
        assert!((mc.mean[0] - direct.k1).abs() < 1e-15 && (mc.mean[1] - direct.k2).abs() < 1e-15);
        assert!(mc.stderr[0] < 1e-15 && mc.stderr[1] < 1e-15);
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        for (m, n) in [(1, 1), (2, 1), (2, 2)] {
            let (spec, x, y) = setup(m, n, 0.2);
            let q = expected_payoff(&spec, (&x).into(), (&y).into(), Method::Quadrature { nodes: 12 }).unwrap();
            let mc = expected_payoff(
                &spec,
                (&x).into(),
                (&y).into(),
                Method::MonteCarlo {
                    samples: 20_000,
                    seed: 3,
                },
            )
            .unwrap();
            for j in 0..2 {
                assert!(
                    (q.mean[j] - mc.mean[j]).abs() <= 3.0 * mc.stderr[j] + 1e-12,
                    "({m},{n}) player {j}: quad {} mc {} ± {}",
                    q.mean[j],
                    mc.mean[j],
                    mc.stderr[j]
                );
            }
        }
    }

    #[test]
    fn rejects_mismatched_sides() {
        let (spec, x, y) = setup(1, 1, 0.05);
        assert!(sample_play_seeded(&spec, (&y).into(), (&x).into(), 0).is_err());
        let big = spec.with_resources(2, 1);
        assert!(matches!(
            sample_play_seeded(&big, (&x).into(), (&y).into(), 0),
            Err(DuelError::DimensionMismatch(_))
        ));
        let (spec3, x3, y3) = setup(3, 2, 0.05);
        assert!(matches!(
            expected_payoff(&spec3, (&x3).into(), (&y3).into(), Method::Quadrature { nodes: 4 }),
            Err(DuelError::BudgetExceeded(_))
        ));
        assert!(expected_payoff(
            &spec,
            (&x).into(),
            (&y).into(),
            Method::MonteCarlo { samples: 1, seed: 0 }
        )
        .is_err());
    }
}
