//! Pareto analysis of plays: T-plays, the play set 𝒫 and its subset 𝒫′,
//! dominance, and quasi-antagonism.
//!
//! 𝒫 holds the plays in which a player whose opponent has run out of
//! resources waits until `t = 1`; 𝒫′ ⊂ 𝒫 the ones where the two players
//! never act at the same moment.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DuelError, Result};
use crate::payoff::{evaluate, evaluate_unchecked, outcome_distribution, DuelSpec, PayoffVector, Play, Player};
use crate::tgrid::TGrid;

/// Payoff differences within this margin are "equivalent", not dominance.
pub const DOMINANCE_TOL: f64 = 1e-12;
/// Tolerance for matching an action time against a grid entry.
pub const T_PLAY_TOL: f64 = 1e-12;
/// Tolerance of the affine relations between `K₁` and `K₂`.
pub const AFFINE_TOL: f64 = 1e-10;
/// Relative tolerance when comparing `A₁A₂` with `B₁B₂`.
pub const PRODUCT_RTOL: f64 = 1e-12;

pub const DEFAULT_RESOLUTION: usize = 50;
pub const DEFAULT_MAX_ACTIONS: usize = 4;
pub const MAX_ENUMERATED_PLAYS: usize = 50_000_000;

/// How the next step of a play resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    One,
    Two,
    Both,
}

type Walk = (Vec<(usize, usize, Step)>, (usize, usize));

/// States `(k, l)` with both players holding resources visited by `play`,
/// with the step taken in each, and the final state.
fn walk(play: &Play) -> Walk {
    let (mut k, mut l) = (play.m(), play.n());
    let mut steps = Vec::with_capacity(k + l);
    while k > 0 && l > 0 {
        let (s, u) = (play.tau(k), play.eta(l));
        let step = match s.partial_cmp(&u) {
            Some(Ordering::Less) => Step::One,
            Some(Ordering::Greater) => Step::Two,
            _ => Step::Both,
        };
        steps.push((k, l, step));
        match step {
            Step::One => k -= 1,
            Step::Two => l -= 1,
            Step::Both => {
                k -= 1;
                l -= 1;
            }
        }
    }
    (steps, (k, l))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayClass {
    pub play: Play,
    pub in_p: bool,
    pub in_p_prime: bool,
    pub is_t_play: bool,
}

/// Membership of `play` in 𝒫, 𝒫′ and the T-plays of `grid`.
pub fn classify_play(spec: &DuelSpec, grid: &TGrid, play: &Play) -> Result<PlayClass> {
    evaluate(spec, play)?;
    if grid.m() < spec.m || grid.n() < spec.n {
        return Err(DuelError::DimensionMismatch(format!(
            "{}x{} grid is too small for m={}, n={}",
            grid.m(),
            grid.n(),
            spec.m,
            spec.n
        )));
    }
    let (steps, (k, l)) = walk(play);
    let waits = (1..=k).all(|i| play.tau(i) == 1.0) && (1..=l).all(|j| play.eta(j) == 1.0);
    let in_p = waits;
    let coincide = play.tau_vec().iter().any(|s| play.eta_vec().contains(s));
    let in_p_prime = in_p && !coincide;
    let is_t_play = in_p
        && steps.iter().all(|&(k, l, _)| {
            let t = grid.get(k, l);
            (play.tau(k) - t).abs() <= T_PLAY_TOL || (play.eta(l) - t).abs() <= T_PLAY_TOL
        });
    Ok(PlayClass {
        play: play.clone(),
        in_p,
        in_p_prime,
        is_t_play,
    })
}

/// Which player carries the grid time in each state of a T-play, in
/// chronological order. Missing trailing entries are filled by whichever
/// player still has resources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TPlayVariant {
    pub carriers: Vec<Player>,
}

impl TPlayVariant {
    /// `τ_i = t_{i1}`, `η_j = t_{mj}` for `j ≥ 2`, `η₁ = 1`: Player II
    /// carries the first `n − 1` states, then Player I the rest.
    pub fn canonical(m: usize, n: usize) -> Self {
        let mut carriers = vec![Player::Two; n.saturating_sub(1)];
        carriers.extend(std::iter::repeat_n(Player::One, m));
        TPlayVariant { carriers }
    }

    /// Every carrier sequence for an `m × n` duel: lattice paths from
    /// `(m, n)` until one coordinate reaches 0.
    pub fn all(m: usize, n: usize) -> Vec<Self> {
        fn go(k: usize, l: usize, prefix: &mut Vec<Player>, out: &mut Vec<TPlayVariant>) {
            if k == 0 || l == 0 {
                out.push(TPlayVariant {
                    carriers: prefix.clone(),
                });
                return;
            }
            for p in [Player::One, Player::Two] {
                prefix.push(p);
                match p {
                    Player::One => go(k - 1, l, prefix, out),
                    Player::Two => go(k, l - 1, prefix, out),
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(m, n, &mut Vec::new(), &mut out);
        out
    }
}

/// Build the T-play of `variant`: in each visited state the carrier acts
/// at the grid time, the other player later; the survivor waits until 1.
pub fn t_play(grid: &TGrid, spec: &DuelSpec, variant: &TPlayVariant) -> Result<Play> {
    let (m, n) = (spec.m, spec.n);
    if grid.m() < m || grid.n() < n {
        return Err(DuelError::DimensionMismatch(format!(
            "{}x{} grid is too small for m={m}, n={n}",
            grid.m(),
            grid.n()
        )));
    }
    let mut tau = vec![1.0; m];
    let mut eta = vec![1.0; n];
    let (mut k, mut l) = (m, n);
    let mut carriers = variant.carriers.iter();
    while k > 0 && l > 0 {
        let carrier = match carriers.next() {
            Some(&p) => p,
            None => {
                return Err(DuelError::InvalidArgument(format!(
                    "variant ends at state ({k}, {l}) with both players holding resources"
                )))
            }
        };
        let t = grid.get(k, l);
        match carrier {
            Player::One => {
                tau[k - 1] = t;
                k -= 1;
            }
            Player::Two => {
                eta[l - 1] = t;
                l -= 1;
            }
        }
    }
    if carriers.next().is_some() {
        return Err(DuelError::InvalidArgument(format!(
            "variant has {} steps, more than the path from ({m}, {n}) allows",
            variant.carriers.len()
        )));
    }
    Play::new(tau, eta)
}

/// Outcome of comparing two payoff vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Dominates,
    Dominated,
    Equivalent,
    Incomparable,
}

/// Compare `a` with `b`; differences within [`DOMINANCE_TOL`] in both
/// components count as equivalence.
pub fn compare(a: PayoffVector, b: PayoffVector) -> Relation {
    let d1 = a.k1 - b.k1;
    let d2 = a.k2 - b.k2;
    if d1 >= 0.0 && d2 >= 0.0 {
        if d1.max(d2) > DOMINANCE_TOL {
            Relation::Dominates
        } else {
            Relation::Equivalent
        }
    } else if d1 <= 0.0 && d2 <= 0.0 {
        if d1.min(d2) < -DOMINANCE_TOL {
            Relation::Dominated
        } else {
            Relation::Equivalent
        }
    } else if d1.abs() <= DOMINANCE_TOL && d2.abs() <= DOMINANCE_TOL {
        Relation::Equivalent
    } else {
        Relation::Incomparable
    }
}

/// `K(p1) ≥ K(p2)` componentwise with at least one strict inequality,
/// compared exactly.
pub fn dominates(spec: &DuelSpec, p1: &Play, p2: &Play) -> Result<bool> {
    let a = evaluate(spec, p1)?;
    let b = evaluate(spec, p2)?;
    Ok(a.k1 >= b.k1 && a.k2 >= b.k2 && (a.k1 > b.k1 || a.k2 > b.k2))
}

/// Answers "is there a stored vector dominating this one?" in
/// `O(log N)`.
#[derive(Debug, Clone)]
pub struct DominanceIndex {
    /// Stored vectors sorted by `K₁` descending.
    k1: Vec<f64>,
    /// Position of the largest `K₂` among the first `i + 1` sorted entries.
    best_k2: Vec<usize>,
    k2: Vec<f64>,
    ids: Vec<usize>,
}

impl DominanceIndex {
    pub fn new(payoffs: impl IntoIterator<Item = (usize, PayoffVector)>) -> Self {
        let mut entries: Vec<(usize, PayoffVector)> = payoffs.into_iter().collect();
        entries.sort_by(|a, b| b.1.k1.total_cmp(&a.1.k1).then(a.0.cmp(&b.0)));
        let k1: Vec<f64> = entries.iter().map(|e| e.1.k1).collect();
        let k2: Vec<f64> = entries.iter().map(|e| e.1.k2).collect();
        let ids = entries.iter().map(|e| e.0).collect();
        let mut best_k2 = Vec::with_capacity(k2.len());
        for i in 0..k2.len() {
            let prev = if i == 0 { i } else { best_k2[i - 1] };
            best_k2.push(if k2[i] > k2[prev] { i } else { prev });
        }
        DominanceIndex { k1, best_k2, k2, ids }
    }

    pub fn len(&self) -> usize {
        self.k1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.is_empty()
    }

    /// Id of a stored vector that dominates `p` under [`compare`], if any.
    pub fn dominator(&self, p: PayoffVector) -> Option<usize> {
        let prefix = |bound: f64, strict: bool| {
            self.k1
                .partition_point(|&x| if strict { x > bound } else { x >= bound })
        };
        let at_least = prefix(p.k1, false);
        if at_least > 0 {
            let i = self.best_k2[at_least - 1];
            if self.k2[i] - p.k2 > DOMINANCE_TOL {
                return Some(self.ids[i]);
            }
        }
        let clearly_more = prefix(p.k1 + DOMINANCE_TOL, true);
        if clearly_more > 0 {
            let i = self.best_k2[clearly_more - 1];
            if self.k2[i] >= p.k2 {
                return Some(self.ids[i]);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn at_least_zero(self) -> bool {
        self != Sign::Negative
    }

    pub fn at_most_zero(self) -> bool {
        self != Sign::Positive
    }
}

/// Sign of `A₁A₂ − B₁B₂`, treating products equal within a relative
/// [`PRODUCT_RTOL`] as equal.
pub fn product_sign(spec: &DuelSpec) -> Sign {
    let a = spec.a[0] * spec.a[1];
    let b = spec.b[0] * spec.b[1];
    if (a - b).abs() <= PRODUCT_RTOL * a.max(b) {
        Sign::Zero
    } else if a > b {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// `x ≻ y` for two-component vectors.
fn vector_dominates(x: [f64; 2], y: [f64; 2]) -> bool {
    x[0] >= y[0] && x[1] >= y[1] && (x[0] > y[0] || x[1] > y[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameClassification {
    pub product_sign: Sign,
    /// `(A₁−B₁)(A₂−B₂) < 0`, or `A = B`.
    pub opposed_stakes: bool,
    pub a_dominates_b: bool,
    pub b_dominates_a: bool,
    /// `λ > 0` with `K₁ = −λK₂` on every play, when `A₁A₂ = B₁B₂`.
    pub affine_lambda: Option<f64>,
}

impl GameClassification {
    pub fn quasi_antagonistic(&self) -> bool {
        self.affine_lambda.is_some()
    }
}

pub fn classify_game(spec: &DuelSpec) -> GameClassification {
    let [a1, a2] = spec.a;
    let [b1, b2] = spec.b;
    let sign = product_sign(spec);
    let affine_lambda = (sign == Sign::Zero).then(|| {
        if a1 * a2 > 0.0 {
            a1 / b2
        } else if a1 == 0.0 {
            b1 / a2
        } else {
            a1 / b2
        }
    });
    GameClassification {
        product_sign: sign,
        opposed_stakes: (a1 - b1) * (a2 - b2) < 0.0 || spec.a == spec.b,
        a_dominates_b: vector_dominates(spec.a, spec.b),
        b_dominates_a: vector_dominates(spec.b, spec.a),
        affine_lambda,
    }
}

/// Intercept and slope of the line `K₂ = c − s·K₁` that payoffs of plays
/// in 𝒫′ lie on.
pub fn trade_off_line(spec: &DuelSpec) -> (f64, f64) {
    let [a1, a2] = spec.a;
    let [b1, b2] = spec.b;
    ((a1 * a2 - b1 * b2) / (a1 + b1), (a2 + b2) / (a1 + b1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiAntagonismReport {
    pub classification: GameClassification,
    pub plays: usize,
    pub p_prime_plays: usize,
    /// Largest `|K₂ − (c − s·K₁)|` over sampled plays in 𝒫′.
    pub max_line_gap: f64,
    /// Largest `|K₁ + λK₂|` over all sampled plays, when λ exists.
    pub max_lambda_gap: Option<f64>,
    /// Largest `|ΣQ − 1|` over sampled 𝒫′ plays, and largest `Q₀ + Q₃`.
    pub max_tie_or_miss: f64,
    pub passed: bool,
}

/// Check the affine relations between `K₁` and `K₂` on `plays`: the 𝒫′
/// line for every play in 𝒫′ and, for quasi-antagonistic games,
/// `K₁ = −λK₂` for every play.
pub fn verify_quasi_antagonism(spec: &DuelSpec, plays: &[Play]) -> Result<QuasiAntagonismReport> {
    let classification = classify_game(spec);
    let (c, s) = trade_off_line(spec);
    let mut max_line_gap: f64 = 0.0;
    let mut max_lambda_gap: f64 = 0.0;
    let mut max_tie_or_miss: f64 = 0.0;
    let mut p_prime_plays = 0;
    for play in plays {
        let k = evaluate(spec, play)?;
        if let Some(lambda) = classification.affine_lambda {
            max_lambda_gap = max_lambda_gap.max((k.k1 + lambda * k.k2).abs());
        }
        if in_p_prime(play) {
            p_prime_plays += 1;
            max_line_gap = max_line_gap.max((k.k2 - (c - s * k.k1)).abs());
            let q = outcome_distribution(spec, play)?;
            max_tie_or_miss = max_tie_or_miss.max(q.q0 + q.q3);
        }
    }
    let lambda_gap = classification.affine_lambda.map(|_| max_lambda_gap);
    let passed = max_line_gap <= AFFINE_TOL && lambda_gap.is_none_or(|g| g <= AFFINE_TOL);
    Ok(QuasiAntagonismReport {
        classification,
        plays: plays.len(),
        p_prime_plays,
        max_line_gap,
        max_lambda_gap: lambda_gap,
        max_tie_or_miss,
        passed,
    })
}

/// 𝒫′ membership without a grid.
fn in_p_prime(play: &Play) -> bool {
    let (_, (k, l)) = walk(play);
    (1..=k).all(|i| play.tau(i) == 1.0)
        && (1..=l).all(|j| play.eta(j) == 1.0)
        && !play.tau_vec().iter().any(|s| play.eta_vec().contains(s))
}

/// Random nonincreasing time vectors, uniform on `[0, 1]`.
pub fn random_play(m: usize, n: usize, rng: &mut impl Rng) -> Play {
    let mut draw = |len: usize| {
        let mut v: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let tau = draw(m);
    let eta = draw(n);
    Play::new_unchecked(tau, eta)
}

/// Random play in 𝒫: random times, after which the survivor's remaining
/// actions move to `t = 1`. With probability `tie_rate` per step, a
/// player's next action is copied onto the opponent's, producing
/// simultaneous actions.
pub fn random_p_play(m: usize, n: usize, tie_rate: f64, rng: &mut impl Rng) -> Play {
    let base = random_play(m, n, rng);
    let (mut tau, mut eta) = (base.tau_vec().to_vec(), base.eta_vec().to_vec());
    let (mut k, mut l) = (m, n);
    while k > 0 && l > 0 {
        if rng.random::<f64>() < tie_rate {
            let t = tau[k - 1].min(eta[l - 1]);
            tau[k - 1] = t;
            eta[l - 1] = t;
        }
        let (s, u) = (tau[k - 1], eta[l - 1]);
        if s <= u {
            k -= 1;
        }
        if u <= s {
            l -= 1;
        }
    }
    tau[..k].fill(1.0);
    eta[..l].fill(1.0);
    Play::new_unchecked(tau, eta)
}

/// Random play in 𝒫′.
pub fn random_p_prime_play(m: usize, n: usize, rng: &mut impl Rng) -> Play {
    loop {
        let play = random_p_play(m, n, 0.0, rng);
        if in_p_prime(&play) {
            return play;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TieSwapReport {
    /// `τ₁ = t₁₁`, `η₁ = 1`.
    pub p1: Play,
    /// `τ₁ = η₁ = t₁₁`.
    pub p2: Play,
    pub k_p1: PayoffVector,
    pub k_p2: PayoffVector,
    /// `K(p¹) − K(p²)` from the evaluator.
    pub observed: [f64; 2],
    /// `(A_j − B_j)·P₁(t₁₁)·P₂(t₁₁)·∏(1−P₁(τ_i))·∏(1−P₂(η_j))` over the tail.
    pub predicted: [f64; 2],
    pub max_gap: f64,
    pub relation: Relation,
    /// The relation the payoff vectors A and B imply, if they are
    /// comparable or equal.
    pub expected: Option<Relation>,
    pub passed: bool,
}

/// Common entries `τ_2..τ_m` and `η_2..η_n` of the two swap plays, in
/// index order (largest first).
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SharedTail {
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
}

impl SharedTail {
    /// The tail of the canonical T-play: `τ_i = t_{i1}`, `η_j = t_{mj}`.
    pub fn canonical(grid: &TGrid, m: usize, n: usize) -> Self {
        SharedTail {
            tau: (2..=m).map(|i| grid.get(i, 1)).collect(),
            eta: (2..=n).map(|j| grid.get(m, j)).collect(),
        }
    }
}

/// Build the plays `p¹`, `p²` that differ only in Player II's last action
/// and compare their payoff difference with the closed formula.
pub fn check_tie_swap(spec: &DuelSpec, grid: &TGrid, tail: &SharedTail) -> Result<TieSwapReport> {
    let (m, n) = (spec.m, spec.n);
    if m == 0 || n == 0 {
        return Err(DuelError::InvalidArgument("both players need at least one unit".into()));
    }
    if tail.tau.len() != m - 1 || tail.eta.len() != n - 1 {
        return Err(DuelError::DimensionMismatch(format!(
            "tail needs {} and {} entries, got {} and {}",
            m - 1,
            n - 1,
            tail.tau.len(),
            tail.eta.len()
        )));
    }
    let t11 = grid.get(1, 1);
    if let Some(x) = tail
        .tau
        .iter()
        .chain(&tail.eta)
        .find(|&&x| x.partial_cmp(&t11) != Some(Ordering::Less))
    {
        return Err(DuelError::Ordering(format!("tail entry {x} is not below t11 = {t11}")));
    }
    let build = |last_eta: f64| {
        let mut tau = vec![t11];
        tau.extend(&tail.tau);
        let mut eta = vec![last_eta];
        eta.extend(&tail.eta);
        Play::new(tau, eta)
    };
    let p1 = build(1.0)?;
    let p2 = build(t11)?;
    let k_p1 = evaluate(spec, &p1)?;
    let k_p2 = evaluate(spec, &p2)?;
    let survive: f64 = tail.tau.iter().map(|&t| 1.0 - spec.p1.value(t)).product::<f64>()
        * tail.eta.iter().map(|&t| 1.0 - spec.p2.value(t)).product::<f64>();
    let base = spec.p1.value(t11) * spec.p2.value(t11) * survive;
    let predicted = [(spec.a[0] - spec.b[0]) * base, (spec.a[1] - spec.b[1]) * base];
    let observed = [k_p1.k1 - k_p2.k1, k_p1.k2 - k_p2.k2];
    let max_gap = (observed[0] - predicted[0])
        .abs()
        .max((observed[1] - predicted[1]).abs());
    let relation = compare(k_p1, k_p2);
    let expected = if vector_dominates(spec.a, spec.b) {
        Some(Relation::Dominates)
    } else if vector_dominates(spec.b, spec.a) {
        Some(Relation::Dominated)
    } else if spec.a == spec.b {
        Some(Relation::Equivalent)
    } else {
        None
    };
    // the formula only fixes the relation when the product is not negligible
    let decisive = base * (spec.a[0] - spec.b[0]).abs().max((spec.a[1] - spec.b[1]).abs()) > DOMINANCE_TOL;
    let relation_ok = match expected {
        Some(Relation::Equivalent) => relation == Relation::Equivalent,
        Some(r) if decisive => relation == r,
        _ => true,
    };
    Ok(TieSwapReport {
        p1,
        p2,
        k_p1,
        k_p2,
        observed,
        predicted,
        max_gap,
        relation,
        expected,
        passed: max_gap <= AFFINE_TOL && relation_ok,
    })
}

/// A discretized part of 𝒫: every play whose action times lie on `times`.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub m: usize,
    pub n: usize,
    pub times: Vec<f64>,
    /// `m + n` time indices per play: `τ_1..τ_m` then `η_1..η_n`.
    indices: Vec<u16>,
    pub payoffs: Vec<PayoffVector>,
    /// Whether the play has no simultaneous actions, i.e. lies in 𝒫′.
    pub in_p_prime: Vec<bool>,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    pub fn play(&self, i: usize) -> Play {
        let stride = self.m + self.n;
        let row = &self.indices[i * stride..(i + 1) * stride];
        let tau = row[..self.m].iter().map(|&k| self.times[k as usize]).collect();
        let eta = row[self.m..].iter().map(|&k| self.times[k as usize]).collect();
        Play::new_unchecked(tau, eta)
    }
}

struct Enumerator<'a> {
    spec: &'a DuelSpec,
    last: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

#[derive(Clone)]
struct Node {
    k: usize,
    l: usize,
    /// Earliest index of each player's next action.
    lo: [usize; 2],
    alive: f64,
    acc: [f64; 2],
    row: Vec<u16>,
    tie: bool,
}

#[derive(Default)]
struct Batch {
    indices: Vec<u16>,
    payoffs: Vec<PayoffVector>,
    in_p_prime: Vec<bool>,
}

impl Enumerator<'_> {
    fn children(&self, node: &Node) -> Vec<Node> {
        let [a1, a2] = self.spec.a;
        let [b1, b2] = self.spec.b;
        let m = self.spec.m;
        let mut out = Vec::new();
        for a in node.lo[0]..self.last {
            let p = self.p1[a];
            let mut c = node.clone();
            c.acc[0] += node.alive * p * a1;
            c.acc[1] -= node.alive * p * b2;
            c.alive *= 1.0 - p;
            c.row[node.k - 1] = a as u16;
            c.k -= 1;
            c.lo = [a, node.lo[1].max(a + 1)];
            out.push(c);
        }
        for b in node.lo[1]..self.last {
            let q = self.p2[b];
            let mut c = node.clone();
            c.acc[0] -= node.alive * q * b1;
            c.acc[1] += node.alive * q * a2;
            c.alive *= 1.0 - q;
            c.row[m + node.l - 1] = b as u16;
            c.l -= 1;
            c.lo = [node.lo[0].max(b + 1), b];
            out.push(c);
        }
        for t in node.lo[0].max(node.lo[1])..=self.last {
            let (p, q) = (self.p1[t], self.p2[t]);
            let mut c = node.clone();
            c.acc[0] += node.alive * (a1 * p * (1.0 - q) - b1 * (1.0 - p) * q);
            c.acc[1] += node.alive * (a2 * q * (1.0 - p) - b2 * (1.0 - q) * p);
            c.alive *= (1.0 - p) * (1.0 - q);
            c.row[node.k - 1] = t as u16;
            c.row[m + node.l - 1] = t as u16;
            c.k -= 1;
            c.l -= 1;
            c.lo = [t, t];
            c.tie = true;
            out.push(c);
        }
        out
    }

    fn finish(&self, mut node: Node, batch: &mut Batch) {
        let [a1, a2] = self.spec.a;
        let [b1, b2] = self.spec.b;
        let m = self.spec.m;
        if node.k > 0 {
            node.acc[0] += node.alive * a1;
            node.acc[1] -= node.alive * b2;
            node.row[..node.k].fill(self.last as u16);
        } else if node.l > 0 {
            node.acc[0] -= node.alive * b1;
            node.acc[1] += node.alive * a2;
            node.row[m..m + node.l].fill(self.last as u16);
        }
        batch.indices.extend_from_slice(&node.row);
        batch.payoffs.push(PayoffVector {
            k1: node.acc[0],
            k2: node.acc[1],
        });
        batch.in_p_prime.push(!node.tie);
    }

    fn descend(&self, node: Node, batch: &mut Batch, limit: usize) -> Result<()> {
        if node.k == 0 || node.l == 0 {
            if batch.payoffs.len() >= limit {
                return Err(DuelError::BudgetExceeded(format!(
                    "more than {limit} plays in the enumeration"
                )));
            }
            self.finish(node, batch);
            return Ok(());
        }
        for child in self.children(&node) {
            self.descend(child, batch, limit)?;
        }
        Ok(())
    }
}

/// Enumerate every play of 𝒫 with action times on `times` (sorted,
/// containing 1 as the last element). Payoffs are accumulated along each
/// play rather than re-evaluated.
pub fn enumerate_plays(spec: &DuelSpec, times: &[f64], limit: usize) -> Result<Enumeration> {
    spec.check()?;
    if times.is_empty()
        || times.last() != Some(&1.0)
        || times
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        || times[0] < 0.0
    {
        return Err(DuelError::InvalidArgument(
            "enumeration times must increase strictly and end at 1".into(),
        ));
    }
    if times.len() > u16::MAX as usize {
        return Err(DuelError::BudgetExceeded(format!("{} enumeration times", times.len())));
    }
    let (m, n) = (spec.m, spec.n);
    let e = Enumerator {
        spec,
        last: times.len() - 1,
        p1: times.iter().map(|&t| spec.p1.value(t)).collect(),
        p2: times.iter().map(|&t| spec.p2.value(t)).collect(),
    };
    let root = Node {
        k: m,
        l: n,
        lo: [0, 0],
        alive: 1.0,
        acc: [0.0; 2],
        row: vec![0; m + n],
        tie: false,
    };
    let firsts = if m == 0 || n == 0 {
        vec![root]
    } else {
        e.children(&root)
    };
    let batches: Vec<Batch> = firsts
        .into_par_iter()
        .map(|node| {
            let mut batch = Batch::default();
            e.descend(node, &mut batch, limit)?;
            Ok(batch)
        })
        .collect::<Result<_>>()?;
    let total: usize = batches.iter().map(|b| b.payoffs.len()).sum();
    if total > limit {
        return Err(DuelError::BudgetExceeded(format!(
            "{total} plays exceed the limit {limit}"
        )));
    }
    let mut out = Enumeration {
        m,
        n,
        times: times.to_vec(),
        indices: Vec::with_capacity(total * (m + n)),
        payoffs: Vec::with_capacity(total),
        in_p_prime: Vec::with_capacity(total),
    };
    for b in batches {
        out.indices.extend(b.indices);
        out.payoffs.extend(b.payoffs);
        out.in_p_prime.extend(b.in_p_prime);
    }
    Ok(out)
}

/// `resolution` uniform points on `[0, 1]` merged with the grid entries.
pub fn enumeration_times(grid: &TGrid, m: usize, n: usize, resolution: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..resolution).map(|k| k as f64 / (resolution - 1) as f64).collect();
    for mu in 1..=m.min(grid.m()) {
        for nu in 1..=n.min(grid.n()) {
            times.push(grid.get(mu, nu));
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Noncoinciding T-plays are undominated when `A₁A₂ ≥ B₁B₂`.
    TPlayOptimal,
    /// When `B ≻ A` the canonical T-play is dominated by its
    /// simultaneous-ending twin.
    TPlayDominated,
    /// No play of 𝒫′ dominates another.
    PrimeIncomparable,
    /// Dominance between 𝒫′ and 𝒫∖𝒫′ only in the direction the sign of
    /// `A₁A₂ − B₁B₂` allows.
    MixedPairs,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::TPlayOptimal,
        Suite::TPlayDominated,
        Suite::PrimeIncomparable,
        Suite::MixedPairs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TPlayOptimal => "t-play-optimal",
            Suite::TPlayDominated => "t-play-dominated",
            Suite::PrimeIncomparable => "prime-incomparable",
            Suite::MixedPairs => "mixed-pairs",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = DuelError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| DuelError::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub dominating: Play,
    pub dominated: Play,
    pub k_dominating: PayoffVector,
    pub k_dominated: PayoffVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    /// False when the suite's hypothesis does not hold for this game.
    pub applicable: bool,
    pub comparisons: usize,
    pub violations: usize,
    /// Up to [`MAX_COUNTEREXAMPLES`] violating pairs.
    pub counterexamples: Vec<Counterexample>,
    /// For the suite that expects dominance: the dominating pair found.
    pub witness: Option<Counterexample>,
    pub passed: bool,
}

pub const MAX_COUNTEREXAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoOptions {
    pub resolution: usize,
    pub max_actions: usize,
    pub max_plays: usize,
    pub suites: Vec<Suite>,
}

impl Default for ParetoOptions {
    fn default() -> Self {
        ParetoOptions {
            resolution: DEFAULT_RESOLUTION,
            max_actions: DEFAULT_MAX_ACTIONS,
            max_plays: MAX_ENUMERATED_PLAYS,
            suites: Suite::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoReport {
    pub m: usize,
    pub n: usize,
    pub resolution: usize,
    pub classification: GameClassification,
    pub plays: usize,
    pub p_prime_plays: usize,
    pub t_plays: usize,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

/// Run the selected theorem suites on the plays of 𝒫 with times on a
/// `resolution`-point grid (plus the timing-grid entries).
pub fn check_pareto_theorems(spec: &DuelSpec, grid: &TGrid, options: &ParetoOptions) -> Result<ParetoReport> {
    spec.check()?;
    let (m, n) = (spec.m, spec.n);
    if m == 0 || n == 0 {
        return Err(DuelError::InvalidArgument("both players need at least one unit".into()));
    }
    if m + n > options.max_actions {
        return Err(DuelError::BudgetExceeded(format!(
            "m + n = {} exceeds the enumeration budget {}",
            m + n,
            options.max_actions
        )));
    }
    if options.resolution < 10 {
        return Err(DuelError::InvalidArgument(format!(
            "resolution must be at least 10, got {}",
            options.resolution
        )));
    }
    if grid.m() < m || grid.n() < n {
        return Err(DuelError::DimensionMismatch(format!(
            "{}x{} grid is too small for m={m}, n={n}",
            grid.m(),
            grid.n()
        )));
    }
    let classification = classify_game(spec);
    let times = enumeration_times(grid, m, n, options.resolution);
    let plays = enumerate_plays(spec, &times, options.max_plays)?;
    let t_plays: Vec<(Play, PayoffVector)> = TPlayVariant::all(m, n)
        .iter()
        .map(|v| {
            let p = t_play(grid, spec, v)?;
            let k = evaluate_unchecked(spec, &p);
            Ok((p, k))
        })
        .collect::<Result<_>>()?;

    let plays = &plays;
    let ids = |prime: bool| (0..plays.len()).filter(move |&i| plays.in_p_prime[i] == prime);
    let mut suites = Vec::new();
    let mut selected = options.suites.clone();
    selected.sort();
    selected.dedup();
    for suite in selected {
        let result = match suite {
            Suite::TPlayOptimal => {
                let applicable = classification.product_sign.at_least_zero();
                let index = DominanceIndex::new((0..plays.len()).map(|i| (i, plays.payoffs[i])));
                let mut r = SuiteResult::new(suite, applicable);
                if applicable {
                    for (p, k) in &t_plays {
                        r.comparisons += index.len();
                        if let Some(i) = index.dominator(*k) {
                            r.record(plays.play(i), plays.payoffs[i], p.clone(), *k);
                        }
                    }
                }
                r.finish()
            }
            Suite::TPlayDominated => {
                let applicable = classification.b_dominates_a;
                let mut r = SuiteResult::new(suite, applicable);
                if applicable {
                    let report = check_tie_swap(spec, grid, &SharedTail::canonical(grid, m, n))?;
                    r.comparisons = 1;
                    let found = report.relation == Relation::Dominated;
                    r.witness = Some(Counterexample {
                        dominating: report.p2.clone(),
                        dominated: report.p1.clone(),
                        k_dominating: report.k_p2,
                        k_dominated: report.k_p1,
                    });
                    if !found {
                        r.violations = 1;
                    }
                }
                r.finish()
            }
            Suite::PrimeIncomparable => {
                let members: Vec<(Play, PayoffVector)> = ids(true)
                    .map(|i| (plays.play(i), plays.payoffs[i]))
                    .chain(t_plays.iter().cloned())
                    .collect();
                let index = DominanceIndex::new(members.iter().enumerate().map(|(i, (_, k))| (i, *k)));
                let mut r = SuiteResult::new(suite, true);
                r.comparisons = members.len();
                let hits: Vec<(usize, usize)> = members
                    .par_iter()
                    .enumerate()
                    .filter_map(|(i, (_, k))| index.dominator(*k).map(|d| (d, i)))
                    .collect();
                for (d, i) in hits {
                    r.record(members[d].0.clone(), members[d].1, members[i].0.clone(), members[i].1);
                }
                r.finish()
            }
            Suite::MixedPairs => {
                let sign = classification.product_sign;
                let mut r = SuiteResult::new(suite, true);
                // prime plays must not dominate the rest when the sign is ≤ 0,
                // and the rest must not dominate prime plays when it is ≥ 0
                let mut directions = Vec::new();
                if sign.at_most_zero() {
                    directions.push(true);
                }
                if sign.at_least_zero() {
                    directions.push(false);
                }
                for dominators_prime in directions {
                    let index = DominanceIndex::new(ids(dominators_prime).map(|i| (i, plays.payoffs[i])));
                    let targets: Vec<usize> = ids(!dominators_prime).collect();
                    r.comparisons += targets.len();
                    let hits: Vec<(usize, usize)> = targets
                        .par_iter()
                        .filter_map(|&i| index.dominator(plays.payoffs[i]).map(|d| (d, i)))
                        .collect();
                    for (d, i) in hits {
                        r.record(plays.play(d), plays.payoffs[d], plays.play(i), plays.payoffs[i]);
                    }
                }
                r.finish()
            }
        };
        suites.push(result);
    }
    let passed = suites.iter().all(|s| s.passed);
    Ok(ParetoReport {
        m,
        n,
        resolution: options.resolution,
        classification,
        plays: plays.len(),
        p_prime_plays: plays.in_p_prime.iter().filter(|&&x| x).count(),
        t_plays: t_plays.len(),
        suites,
        passed,
    })
}

impl SuiteResult {
    fn new(suite: Suite, applicable: bool) -> Self {
        SuiteResult {
            suite,
            applicable,
            comparisons: 0,
            violations: 0,
            counterexamples: Vec::new(),
            witness: None,
            passed: true,
        }
    }

    fn record(&mut self, dominating: Play, k_dominating: PayoffVector, dominated: Play, k_dominated: PayoffVector) {
        self.violations += 1;
        if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.counterexamples.push(Counterexample {
                dominating,
                dominated,
                k_dominating,
                k_dominated,
            });
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.violations == 0;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::value_closed;
    use crate::tgrid::solve_grid;
    use crate::verify::sample_rng;

    fn linear(m: usize, n: usize, a: [f64; 2], b: [f64; 2]) -> (DuelSpec, TGrid) {
        let spec = DuelSpec::linear(m, n, a, b).unwrap();
        let grid = solve_grid(&spec.p1, &spec.p2, m.max(1), n.max(1), 1e-13).unwrap();
        (spec, grid)
    }

    #[test]
    fn canonical_t_play_small() {
        let (spec, grid) = linear(2, 1, [1.0, 1.0], [1.0, 1.0]);
        let p = t_play(&grid, &spec, &TPlayVariant::canonical(2, 1)).unwrap();
        assert!((p.tau(1) - 0.5).abs() < 1e-12 && (p.tau(2) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.eta_vec(), &[1.0]);
        let class = classify_play(&spec, &grid, &p).unwrap();
        assert!(class.in_p && class.in_p_prime && class.is_t_play);
    }

    #[test]
    fn t_play_variants_share_the_value() {
        let (spec, grid) = linear(3, 2, [2.0, 1.0], [0.5, 3.0]);
        let v = value_closed(&spec, &grid).unwrap().top();
        let variants = TPlayVariant::all(3, 2);
        assert_eq!(variants.len(), 10);
        for var in &variants {
            let p = t_play(&grid, &spec, var).unwrap();
            let class = classify_play(&spec, &grid, &p).unwrap();
            assert!(class.is_t_play && class.in_p_prime, "{var:?}");
            let k = evaluate(&spec, &p).unwrap();
            assert!((k.k1 - v.v1).abs() < 1e-9 && (k.k2 - v.v2).abs() < 1e-9);
        }
    }

    #[test]
    fn classification_examples() {
        let c = classify_game(&DuelSpec::linear(1, 1, [1.0, 1.0], [1.0, 1.0]).unwrap());
        assert_eq!(c.affine_lambda, Some(1.0));
        let c = classify_game(&DuelSpec::linear(1, 1, [2.0, 3.0], [2.0, 3.0]).unwrap());
        assert_eq!(c.affine_lambda, Some(2.0 / 3.0));
        assert!(c.opposed_stakes);
        let c = classify_game(&DuelSpec::linear(1, 1, [2.0, 2.0], [1.0, 1.0]).unwrap());
        assert!(c.a_dominates_b && !c.b_dominates_a);
        assert_eq!(c.product_sign, Sign::Positive);
        assert!(!c.quasi_antagonistic());
        let c = classify_game(&DuelSpec::linear(1, 1, [0.0, 2.0], [3.0, 0.0]).unwrap());
        assert_eq!(c.affine_lambda, Some(1.5));
    }

    #[test]
    fn tie_swap_single_shot() {
        let (spec, grid) = linear(1, 1, [2.0, 2.0], [1.0, 1.0]);
        let r = check_tie_swap(&spec, &grid, &SharedTail::default()).unwrap();
        assert!((r.observed[0] - 0.25).abs() < 1e-12);
        assert!(r.passed && r.relation == Relation::Dominates);
        assert!(dominates(&spec, &r.p1, &r.p2).unwrap());
        let (spec, grid) = linear(1, 1, [1.0, 1.0], [2.0, 2.0]);
        let r = check_tie_swap(&spec, &grid, &SharedTail::default()).unwrap();
        assert!(r.passed && dominates(&spec, &r.p2, &r.p1).unwrap());
        let (spec, grid) = linear(1, 1, [1.0, 1.0], [1.0, 1.0]);
        let r = check_tie_swap(&spec, &grid, &SharedTail::default()).unwrap();
        assert!(r.passed && r.relation == Relation::Equivalent);
    }

    #[test]
    fn tie_swap_tail_validation() {
        let (spec, grid) = linear(2, 2, [2.0, 2.0], [1.0, 1.0]);
        let t11 = grid.get(1, 1);
        assert!(check_tie_swap(
            &spec,
            &grid,
            &SharedTail {
                tau: vec![t11],
                eta: vec![0.1]
            }
        )
        .is_err());
        assert!(check_tie_swap(
            &spec,
            &grid,
            &SharedTail {
                tau: vec![0.2],
                eta: vec![]
            }
        )
        .is_err());
        let r = check_tie_swap(
            &spec,
            &grid,
            &SharedTail {
                tau: vec![0.2],
                eta: vec![0.2],
            },
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn index_matches_pairwise_scan() {
        let mut rng = sample_rng(3, 0);
        let pts: Vec<PayoffVector> = (0..300)
            .map(|_| PayoffVector {
                k1: (rng.random::<f64>() * 10.0).round() / 10.0,
                k2: (rng.random::<f64>() * 10.0).round() / 10.0,
            })
            .collect();
        let index = DominanceIndex::new(pts.iter().copied().enumerate());
        for p in &pts {
            let brute = pts.iter().any(|q| compare(*q, *p) == Relation::Dominates);
            let found = index.dominator(*p);
            assert_eq!(brute, found.is_some());
            if let Some(i) = found {
                assert_eq!(compare(pts[i], *p), Relation::Dominates);
            }
        }
    }

    #[test]
    fn enumeration_matches_evaluator() {
        let (spec, grid) = linear(2, 2, [2.0, 1.0], [1.0, 3.0]);
        let times = enumeration_times(&grid, 2, 2, 10);
        let e = enumerate_plays(&spec, &times, 1_000_000).unwrap();
        assert!(!e.is_empty());
        for i in 0..e.len() {
            let p = e.play(i);
            let class = classify_play(&spec, &grid, &p).unwrap();
            assert!(class.in_p);
            assert_eq!(class.in_p_prime, e.in_p_prime[i]);
            let k = evaluate(&spec, &p).unwrap();
            assert!((k.k1 - e.payoffs[i].k1).abs() < 1e-12 && (k.k2 - e.payoffs[i].k2).abs() < 1e-12);
        }
        // distinct plays
        let mut rows: Vec<(Vec<u64>, Vec<u64>)> = (0..e.len())
            .map(|i| {
                let p = e.play(i);
                (
                    p.tau_vec().iter().map(|x| x.to_bits()).collect(),
                    p.eta_vec().iter().map(|x| x.to_bits()).collect(),
                )
            })
            .collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), e.len());
    }

    #[test]
    fn enumeration_count_single_shots() {
        // one shot each on R points: I first (R−1 choices, II at 1), II
        // first (R−1), or a tie (R)
        let (spec, grid) = linear(1, 1, [1.0, 1.0], [1.0, 1.0]);
        let times: Vec<f64> = (0..12).map(|k| k as f64 / 11.0).collect();
        let e = enumerate_plays(&spec, &times, 1000).unwrap();
        assert_eq!(e.len(), 11 + 11 + 12);
        let _ = grid;
    }

    #[test]
    fn theorem_suites_small() {
        for (a, b) in [
            ([1.0, 1.0], [1.0, 1.0]),
            ([2.0, 2.0], [1.0, 1.0]),
            ([1.0, 1.0], [2.0, 2.0]),
            ([3.0, 0.5], [1.0, 2.0]),
        ] {
            for (m, n) in [(1, 1), (2, 1), (1, 2)] {
                let (spec, grid) = linear(m, n, a, b);
                let opts = ParetoOptions {
                    resolution: 20,
                    ..ParetoOptions::default()
                };
                let r = check_pareto_theorems(&spec, &grid, &opts).unwrap();
                assert!(r.passed, "{a:?} {b:?} ({m},{n}): {r:#?}");
            }
        }
    }

    #[test]
    fn b_over_a_dominates_t_play() {
        let (spec, grid) = linear(1, 1, [1.0, 1.0], [2.0, 2.0]);
        let r = check_pareto_theorems(&spec, &grid, &ParetoOptions::default()).unwrap();
        let s = r.suites.iter().find(|s| s.suite == Suite::TPlayDominated).unwrap();
        assert!(s.applicable && s.passed && s.witness.is_some());
        // the T-play suite does not apply: A₁A₂ < B₁B₂
        let t = r.suites.iter().find(|s| s.suite == Suite::TPlayOptimal).unwrap();
        assert!(!t.applicable);
    }

    #[test]
    fn quasi_antagonism_on_random_plays() {
        let spec = DuelSpec::linear(3, 2, [2.0, 3.0], [2.0, 3.0]).unwrap();
        let mut rng = sample_rng(11, 0);
        let plays: Vec<Play> = (0..100).map(|_| random_play(3, 2, &mut rng)).collect();
        let r = verify_quasi_antagonism(&spec, &plays).unwrap();
        assert!(r.passed && r.max_lambda_gap.unwrap() <= 1e-10);
        let primes: Vec<Play> = (0..100).map(|_| random_p_prime_play(3, 2, &mut rng)).collect();
        let spec = DuelSpec::linear(3, 2, [2.0, 0.0], [1.0, 5.0]).unwrap();
        let r = verify_quasi_antagonism(&spec, &primes).unwrap();
        assert!(r.passed && r.p_prime_plays == 100 && r.max_lambda_gap.is_none());
        assert!(r.max_tie_or_miss == 0.0);
    }

    #[test]
    fn random_p_plays_are_in_p() {
        let (spec, grid) = linear(3, 3, [1.0, 1.0], [1.0, 1.0]);
        let mut rng = sample_rng(5, 0);
        let mut ties = 0;
        for _ in 0..200 {
            let p = random_p_play(3, 3, 0.3, &mut rng);
            let c = classify_play(&spec, &grid, &p).unwrap();
            assert!(c.in_p);
            ties += usize::from(!c.in_p_prime);
        }
        assert!(ties > 0);
    }
}
