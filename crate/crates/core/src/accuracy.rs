//! Accuracy (effectiveness) profiles: the probability that a single action
//! taken at time `t` succeeds.
//!
//! A usable profile is continuous, strictly increasing, pinned to `P(0) = 0`
//! and `P(1) = 1`, and stays strictly inside `(0, 1)` on the open interval.
//! Profiles are plain data; [`AccuracyProfile::validate`] certifies the
//! conditions on a finite grid plus every knot.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DuelError, Result};

/// Default number of grid points used by [`AccuracyProfile::validate`].
pub const DEFAULT_VALIDATION_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AccuracyProfile {
    /// `P(t) = t^exponent`.
    Power { exponent: f64 },
    /// Linear interpolation through `(t, p)` knots; the first knot must sit
    /// at `t = 0` and the last at `t = 1`.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
    /// Values sampled on the uniform grid `i / (len - 1)`, linearly
    /// interpolated.
    Tabulated { samples: Vec<f64> },
}

impl AccuracyProfile {
    pub fn power(exponent: f64) -> Self {
        AccuracyProfile::Power { exponent }
    }

    /// The identity profile `P(t) = t`.
    pub fn linear() -> Self {
        AccuracyProfile::Power { exponent: 1.0 }
    }

    pub fn piecewise_linear(knots: Vec<[f64; 2]>) -> Self {
        AccuracyProfile::PiecewiseLinear { knots }
    }

    pub fn tabulated(samples: Vec<f64>) -> Self {
        AccuracyProfile::Tabulated { samples }
    }

    /// Evaluate `P(t)`, rejecting times outside `[0, 1]` and malformed
    /// profiles.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(DuelError::Domain(t));
        }
        if let Some(problem) = self.structural_problem() {
            return Err(DuelError::InvalidProfile(problem));
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation for hot loops. The caller guarantees
    /// `t ∈ [0, 1]` and a structurally sound profile.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&t), "time {t} outside [0, 1]");
        match self {
            AccuracyProfile::Power { exponent } => {
                if t == 0.0 {
                    0.0
                } else if t == 1.0 {
                    1.0
                } else {
                    t.powf(*exponent)
                }
            }
            AccuracyProfile::PiecewiseLinear { knots } => {
                // first knot with knot.t >= t
                let idx = knots.partition_point(|k| k[0] < t);
                if idx == 0 {
                    return knots[0][1];
                }
                if idx == knots.len() {
                    return knots[knots.len() - 1][1];
                }
                let [t0, p0] = knots[idx - 1];
                let [t1, p1] = knots[idx];
                if t == t1 {
                    return p1;
                }
                p0 + (p1 - p0) * (t - t0) / (t1 - t0)
            }
            AccuracyProfile::Tabulated { samples } => {
                let cells = (samples.len() - 1) as f64;
                let x = t * cells;
                let i = (x.floor() as usize).min(samples.len() - 2);
                let frac = x - i as f64;
                if frac == 0.0 {
                    return samples[i];
                }
                samples[i] + (samples[i + 1] - samples[i]) * frac
            }
        }
    }

    /// Abscissae where the interpolant changes slope.
    pub fn knot_times(&self) -> Vec<f64> {
        match self {
            AccuracyProfile::Power { .. } => vec![0.0, 1.0],
            AccuracyProfile::PiecewiseLinear { knots } => knots.iter().map(|k| k[0]).collect(),
            AccuracyProfile::Tabulated { samples } => {
                let cells = (samples.len().max(2) - 1) as f64;
                (0..samples.len()).map(|i| i as f64 / cells).collect()
            }
        }
    }

    fn structural_problem(&self) -> Option<String> {
        match self {
            AccuracyProfile::Power { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Some(format!("power exponent must be positive, got {exponent}"));
                }
            }
            AccuracyProfile::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Some("piecewise-linear profile needs at least two knots".into());
                }
                if knots.iter().flatten().any(|v| !v.is_finite()) {
                    return Some("piecewise-linear knots must be finite".into());
                }
                if knots[0][0] != 0.0 || knots[knots.len() - 1][0] != 1.0 {
                    return Some("piecewise-linear knots must start at t=0 and end at t=1".into());
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Some("piecewise-linear knot times must be strictly increasing".into());
                }
            }
            AccuracyProfile::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Some("tabulated profile needs at least two samples".into());
                }
                if samples.iter().any(|v| !v.is_finite()) {
                    return Some("tabulated samples must be finite".into());
                }
            }
        }
        None
    }

    /// Check every profile condition on a grid of [`DEFAULT_VALIDATION_POINTS`]
    /// points plus the knots.
    pub fn validate(&self) -> ValidationReport {
        self.validate_on(DEFAULT_VALIDATION_POINTS)
    }

    pub fn validate_on(&self, grid_points: usize) -> ValidationReport {
        let mut report = ValidationReport {
            grid_points,
            well_formed: true,
            zero_at_start: true,
            one_at_end: true,
            strictly_increasing: true,
            open_interior: true,
            failures: Vec::new(),
        };
        if let Some(problem) = self.structural_problem() {
            report.well_formed = false;
            report.zero_at_start = false;
            report.one_at_end = false;
            report.strictly_increasing = false;
            report.open_interior = false;
            report.failures.push(problem);
            return report;
        }

        let p0 = self.value(0.0);
        if p0 != 0.0 {
            report.zero_at_start = false;
            report.failures.push(format!("P(0) = {p0}, expected 0"));
        }
        let p1 = self.value(1.0);
        if p1 != 1.0 {
            report.one_at_end = false;
            report.failures.push(format!("P(1) = {p1}, expected 1"));
        }

        let n = grid_points.max(2);
        let mut ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        ts.extend(self.knot_times());
        ts.sort_by(f64::total_cmp);
        ts.dedup();

        let values: Vec<f64> = ts.iter().map(|&t| self.value(t)).collect();
        if let Some(i) = (1..ts.len()).find(|&i| values[i] <= values[i - 1]) {
            report.strictly_increasing = false;
            report.failures.push(format!(
                "not strictly increasing: P({}) = {} >= P({}) = {}",
                ts[i - 1],
                values[i - 1],
                ts[i],
                values[i]
            ));
        }
        if let Some(i) = (1..ts.len() - 1).find(|&i| !(values[i] > 0.0 && values[i] < 1.0)) {
            report.open_interior = false;
            report
                .failures
                .push(format!("P({}) = {} is not inside (0, 1)", ts[i], values[i]));
        }
        report
    }
}

impl fmt::Display for AccuracyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(",");
        match self {
            AccuracyProfile::Power { exponent } => write!(f, "power:{exponent}"),
            AccuracyProfile::PiecewiseLinear { knots } => {
                let body = knots
                    .iter()
                    .map(|k| format!("{},{}", k[0], k[1]))
                    .collect::<Vec<_>>()
                    .join(";");
                write!(f, "piecewise-linear:{body}")
            }
            AccuracyProfile::Tabulated { samples } => {
                write!(f, "tabulated:{}", join(&mut samples.iter().map(|s| s.to_string())))
            }
        }
    }
}

/// Parses the compact `KIND:PARAMS` form used on the command line:
/// `linear`, `power:2`, `piecewise-linear:0,0;0.5,0.3;1,1`,
/// `tabulated:0,0.2,0.6,1`.
impl FromStr for AccuracyProfile {
    type Err = DuelError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let number = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| DuelError::InvalidProfile(format!("bad number {x:?} in {s:?}")))
        };
        match kind {
            "linear" if params.is_empty() => Ok(AccuracyProfile::linear()),
            "power" => Ok(AccuracyProfile::power(number(params)?)),
            "piecewise-linear" | "pwl" => {
                let knots = params
                    .split(';')
                    .map(|pair| {
                        let (t, p) = pair
                            .split_once(',')
                            .ok_or_else(|| DuelError::InvalidProfile(format!("knot {pair:?} is not `t,p`")))?;
                        Ok([number(t)?, number(p)?])
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(AccuracyProfile::piecewise_linear(knots))
            }
            "tabulated" | "table" => {
                let samples = params.split(',').map(number).collect::<Result<Vec<_>>>()?;
                Ok(AccuracyProfile::tabulated(samples))
            }
            _ => Err(DuelError::InvalidProfile(format!(
                "unknown profile {s:?}; expected linear, power:K, piecewise-linear:T,P;... or tabulated:P,..."
            ))),
        }
    }
}

/// Outcome of [`AccuracyProfile::validate`]: one flag per condition plus
/// human-readable failure messages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub grid_points: usize,
    pub well_formed: bool,
    pub zero_at_start: bool,
    pub one_at_end: bool,
    pub strictly_increasing: bool,
    pub open_interior: bool,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.well_formed && self.zero_at_start && self.one_at_end && self.strictly_increasing && self.open_interior
    }
}
