#![allow(dead_code)]

use noisy_duel::{AccuracyProfile, DuelSpec};
use rand::Rng;

/// Strictly increasing values from 0 to 1 built from positive increments.
fn increasing(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let steps: Vec<f64> = (0..len - 1).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = steps.iter().sum();
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for s in &steps[..steps.len() - 1] {
        acc += s;
        out.push(acc / total);
    }
    out.push(1.0);
    out
}

pub fn random_profile(rng: &mut impl Rng) -> AccuracyProfile {
    match rng.random_range(0..3) {
        0 => AccuracyProfile::power(rng.random_range(0.3..3.0)),
        1 => {
            let k = rng.random_range(3..8);
            let ts = increasing(k, rng);
            let ps = increasing(k, rng);
            AccuracyProfile::piecewise_linear(ts.into_iter().zip(ps).map(|(t, p)| [t, p]).collect())
        }
        _ => AccuracyProfile::tabulated(increasing(rng.random_range(4..30), rng)),
    }
}

pub fn random_coefficients(rng: &mut impl Rng) -> ([f64; 2], [f64; 2]) {
    let mut draw = || {
        if rng.random::<f64>() < 0.15 {
            0.0
        } else {
            rng.random_range(0.1..5.0)
        }
    };
    let mut a = [draw(), draw()];
    let b = [draw(), draw()];
    for j in 0..2 {
        if a[j] + b[j] == 0.0 {
            a[j] = 1.0;
        }
    }
    (a, b)
}

pub fn random_spec(m: usize, n: usize, rng: &mut impl Rng) -> DuelSpec {
    let (a, b) = random_coefficients(rng);
    DuelSpec::new(m, n, a, b, random_profile(rng), random_profile(rng)).unwrap()
}
