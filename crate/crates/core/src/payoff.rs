//! Duel parameters, plays, and the recursive expected payoff of a play.
//!
//! A play fixes every action time of both players along the all-miss path;
//! hit/miss randomness is integrated out exactly by the recursions here.

use serde::{Deserialize, Serialize};

use crate::accuracy::AccuracyProfile;
use crate::error::{DuelError, Result};

/// Absolute tolerance of the `K ↔ Q` consistency check.
pub const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelSpec {
    pub m: usize,
    pub n: usize,
    /// Profit on own success, `(A₁, A₂)`.
    pub a: [f64; 2],
    /// Loss on the opponent's success, `(B₁, B₂)`.
    pub b: [f64; 2],
    pub p1: AccuracyProfile,
    pub p2: AccuracyProfile,
}

impl DuelSpec {
    /// Build a spec, enforcing `A_j ≥ 0`, `B_j ≥ 0`, `A_j + B_j > 0`.
    pub fn new(m: usize, n: usize, a: [f64; 2], b: [f64; 2], p1: AccuracyProfile, p2: AccuracyProfile) -> Result<Self> {
        let spec = DuelSpec { m, n, a, b, p1, p2 };
        spec.check()?;
        Ok(spec)
    }

    /// Linear accuracy for both players.
    pub fn linear(m: usize, n: usize, a: [f64; 2], b: [f64; 2]) -> Result<Self> {
        Self::new(m, n, a, b, AccuracyProfile::linear(), AccuracyProfile::linear())
    }

    pub fn check(&self) -> Result<()> {
        for j in 0..2 {
            let (a, b) = (self.a[j], self.b[j]);
            if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 || a + b <= 0.0 {
                return Err(DuelError::InvalidSpec(format!(
                    "player {} needs A >= 0, B >= 0, A + B > 0; got A={a}, B={b}",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Same game with different resource counts.
    pub fn with_resources(&self, m: usize, n: usize) -> DuelSpec {
        DuelSpec { m, n, ..self.clone() }
    }

    pub fn is_antagonistic(&self) -> bool {
        self.a[0] == self.b[1] && self.a[1] == self.b[0]
    }

    #[inline]
    pub fn accuracy(&self, player: Player) -> &AccuracyProfile {
        match player {
            Player::One => &self.p1,
            Player::Two => &self.p2,
        }
    }
}

/// Action-time vectors of a play.
///
/// Index `i − 1` holds `τ_i`, the action taken with `i` units remaining, so
/// the *last* element is the first action and the vectors are
/// nonincreasing front to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Play {
    tau: Vec<f64>,
    eta: Vec<f64>,
}

impl Play {
    /// Build from `(τ_1, …, τ_m)` and `(η_1, …, η_n)`.
    pub fn new(tau: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        check_vector(&tau, "tau")?;
        check_vector(&eta, "eta")?;
        Ok(Play { tau, eta })
    }

    /// Build from times listed first action first.
    pub fn from_chronological(mut tau: Vec<f64>, mut eta: Vec<f64>) -> Result<Self> {
        tau.reverse();
        eta.reverse();
        Self::new(tau, eta)
    }

    pub(crate) fn new_unchecked(tau: Vec<f64>, eta: Vec<f64>) -> Self {
        debug_assert!(check_vector(&tau, "tau").is_ok() && check_vector(&eta, "eta").is_ok());
        Play { tau, eta }
    }

    pub fn m(&self) -> usize {
        self.tau.len()
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    /// `τ_i` for `1 ≤ i ≤ m`.
    #[inline]
    pub fn tau(&self, i: usize) -> f64 {
        self.tau[i - 1]
    }

    /// `η_j` for `1 ≤ j ≤ n`.
    #[inline]
    pub fn eta(&self, j: usize) -> f64 {
        self.eta[j - 1]
    }

    pub fn tau_vec(&self) -> &[f64] {
        &self.tau
    }

    pub fn eta_vec(&self) -> &[f64] {
        &self.eta
    }

    pub fn tau_chronological(&self) -> Vec<f64> {
        self.tau.iter().rev().copied().collect()
    }

    pub fn eta_chronological(&self) -> Vec<f64> {
        self.eta.iter().rev().copied().collect()
    }

    fn check_dims(&self, spec: &DuelSpec) -> Result<()> {
        if self.m() != spec.m || self.n() != spec.n {
            return Err(DuelError::DimensionMismatch(format!(
                "play has {}x{} actions, spec has m={}, n={}",
                self.m(),
                self.n(),
                spec.m,
                spec.n
            )));
        }
        Ok(())
    }
}

fn check_vector(v: &[f64], name: &str) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(DuelError::Ordering(format!("{name} contains {x}, outside [0, 1]")));
    }
    if let Some(i) = (1..v.len()).find(|&i| v[i] > v[i - 1]) {
        return Err(DuelError::Ordering(format!(
            "{name}_{} = {} exceeds {name}_{} = {}",
            i + 1,
            v[i],
            i,
            v[i - 1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffVector {
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
}

impl PayoffVector {
    pub fn get(&self, player: Player) -> f64 {
        match player {
            Player::One => self.k1,
            Player::Two => self.k2,
        }
    }
}

/// Probabilities of: nobody succeeds, only Player I, only Player II, both
/// at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    #[serde(rename = "Q0")]
    pub q0: f64,
    #[serde(rename = "Q1")]
    pub q1: f64,
    #[serde(rename = "Q2")]
    pub q2: f64,
    #[serde(rename = "Q3")]
    pub q3: f64,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.q0 + self.q1 + self.q2 + self.q3
    }
}

/// Expected payoffs `(K₁, K₂)` of a play.
pub fn evaluate(spec: &DuelSpec, play: &Play) -> Result<PayoffVector> {
    play.check_dims(spec)?;
    Ok(evaluate_unchecked(spec, play))
}

/// [`evaluate`] without the dimension check.
pub(crate) fn evaluate_unchecked(spec: &DuelSpec, play: &Play) -> PayoffVector {
    let (k1, k2) = payoff_from(spec, play, play.m(), play.n());
    PayoffVector { k1, k2 }
}

/// Backward recursion on the three orderings of the next two actions.
fn payoff_from(spec: &DuelSpec, play: &Play, mu: usize, nu: usize) -> (f64, f64) {
    let [a1, a2] = spec.a;
    let [b1, b2] = spec.b;
    match (mu, nu) {
        (0, 0) => (0.0, 0.0),
        (_, 0) => (a1, -b2),
        (0, _) => (-b1, a2),
        _ => {
            let s = play.tau(mu);
            let u = play.eta(nu);
            if s < u {
                let p = spec.p1.value(s);
                let (c1, c2) = payoff_from(spec, play, mu - 1, nu);
                (a1 * p + (1.0 - p) * c1, -b2 * p + (1.0 - p) * c2)
            } else if s > u {
                let q = spec.p2.value(u);
                let (c1, c2) = payoff_from(spec, play, mu, nu - 1);
                (-b1 * q + (1.0 - q) * c1, a2 * q + (1.0 - q) * c2)
            } else {
                let p = spec.p1.value(s);
                let q = spec.p2.value(s);
                let (c1, c2) = payoff_from(spec, play, mu - 1, nu - 1);
                let both_miss = (1.0 - p) * (1.0 - q);
                (
                    a1 * p * (1.0 - q) - b1 * (1.0 - p) * q + both_miss * c1,
                    a2 * q * (1.0 - p) - b2 * (1.0 - q) * p + both_miss * c2,
                )
            }
        }
    }
}

/// Probabilities of the four outcomes, computed forward along the
/// all-miss path. A player left alone with resources waits until `t = 1`
/// and succeeds with certainty.
pub fn outcome_distribution(spec: &DuelSpec, play: &Play) -> Result<OutcomeDistribution> {
    play.check_dims(spec)?;
    let mut out = OutcomeDistribution {
        q0: 0.0,
        q1: 0.0,
        q2: 0.0,
        q3: 0.0,
    };
    let mut alive = 1.0;
    let (mut mu, mut nu) = (play.m(), play.n());
    while mu > 0 && nu > 0 {
        let s = play.tau(mu);
        let u = play.eta(nu);
        if s < u {
            let p = spec.p1.value(s);
            out.q1 += alive * p;
            alive *= 1.0 - p;
            mu -= 1;
        } else if u < s {
            let q = spec.p2.value(u);
            out.q2 += alive * q;
            alive *= 1.0 - q;
            nu -= 1;
        } else {
            let p = spec.p1.value(s);
            let q = spec.p2.value(s);
            out.q1 += alive * p * (1.0 - q);
            out.q2 += alive * (1.0 - p) * q;
            out.q3 += alive * p * q;
            alive *= (1.0 - p) * (1.0 - q);
            mu -= 1;
            nu -= 1;
        }
    }
    match (mu, nu) {
        (0, 0) => out.q0 += alive,
        (_, 0) => out.q1 += alive,
        _ => out.q2 += alive,
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub payoff: PayoffVector,
    pub outcomes: OutcomeDistribution,
    /// `|K₁ − (A₁Q₁ − B₁Q₂)|`.
    pub gap1: f64,
    /// `|K₂ − (A₂Q₂ − B₂Q₁)|`.
    pub gap2: f64,
    /// `|ΣQ − 1|`.
    pub mass_gap: f64,
    pub passed: bool,
}

/// Cross-check the payoff recursion against the outcome probabilities.
pub fn check_consistency(spec: &DuelSpec, play: &Play) -> Result<ConsistencyReport> {
    let payoff = evaluate(spec, play)?;
    let outcomes = outcome_distribution(spec, play)?;
    let [a1, a2] = spec.a;
    let [b1, b2] = spec.b;
    let gap1 = (payoff.k1 - (a1 * outcomes.q1 - b1 * outcomes.q2)).abs();
    let gap2 = (payoff.k2 - (a2 * outcomes.q2 - b2 * outcomes.q1)).abs();
    let mass_gap = (outcomes.total() - 1.0).abs();
    Ok(ConsistencyReport {
        payoff,
        outcomes,
        gap1,
        gap2,
        mass_gap,
        passed: gap1 <= CONSISTENCY_TOL && gap2 <= CONSISTENCY_TOL && mass_gap <= CONSISTENCY_TOL,
    })
}
