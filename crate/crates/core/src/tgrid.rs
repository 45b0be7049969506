//! The equilibrium timing grid `t[μ][ν]`.
//!
//! Entry `(μ, ν)` solves
//!
//! ```text
//! ∏_{i=1..μ} (1 − P₁(t[i][ν])) + ∏_{j=1..ν} (1 − P₂(t[μ][j])) = 1
//! ```
//!
//! with the boundary convention `t[0][ν] = t[μ][0] = 1`. The equation for
//! `(μ, ν)` only involves entries with a smaller first or second index, so
//! filling anti-diagonals in order of `μ + ν` turns every entry into a
//! one-dimensional root find of a decreasing function.

use serde::Serialize;

use crate::accuracy::AccuracyProfile;
use crate::error::{DuelError, Result};

/// Default tolerance on `|G(t)|` for [`solve_grid`].
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TGrid {
    m: usize,
    n: usize,
    /// Row-major, `(μ−1) * n + (ν−1)`.
    t: Vec<f64>,
    tol: f64,
}

impl TGrid {
    /// Wrap precomputed interior entries (row-major, `μ = 1..=m` by
    /// `ν = 1..=n`). Entries are not re-solved.
    pub fn from_entries(m: usize, n: usize, entries: Vec<f64>, tol: f64) -> Result<Self> {
        if entries.len() != m * n {
            return Err(DuelError::DimensionMismatch(format!(
                "{m}x{n} grid needs {} entries, got {}",
                m * n,
                entries.len()
            )));
        }
        Ok(TGrid { m, n, t: entries, tol })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tolerance the grid was solved with.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `t[μ][ν]`, returning 1 on the boundary `μ = 0` or `ν = 0`.
    ///
    /// Panics if `μ > m` or `ν > n`.
    #[inline]
    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        assert!(
            mu <= self.m && nu <= self.n,
            "({mu}, {nu}) outside {}x{} grid",
            self.m,
            self.n
        );
        if mu == 0 || nu == 0 {
            1.0
        } else {
            self.t[(mu - 1) * self.n + (nu - 1)]
        }
    }

    /// `min(t[μ−1][ν], t[μ][ν−1])`, the upper end of the corridor entry
    /// `(μ, ν)` must lie in.
    #[inline]
    pub fn corridor_upper(&self, mu: usize, nu: usize) -> f64 {
        self.get(mu - 1, nu).min(self.get(mu, nu - 1))
    }

    /// Rows `μ = 1..=m` of the interior.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.t.chunks(self.n.max(1)).take(self.m)
    }

    /// Whether `0 < t[μ][ν] < min(t[μ−1][ν], t[μ][ν−1])` holds for every
    /// interior entry, compared exactly.
    pub fn corridor_holds(&self) -> bool {
        (1..=self.m).all(|mu| {
            (1..=self.n).all(|nu| {
                let t = self.get(mu, nu);
                t > 0.0 && t < self.corridor_upper(mu, nu)
            })
        })
    }

    fn set(&mut self, mu: usize, nu: usize, value: f64) {
        self.t[(mu - 1) * self.n + (nu - 1)] = value;
    }
}

/// Left-hand side of the grid equation at `(μ, ν)` split into its two
/// products, evaluated on the stored entries.
fn products(grid: &TGrid, p1: &AccuracyProfile, p2: &AccuracyProfile, mu: usize, nu: usize) -> (f64, f64) {
    let a: f64 = (1..=mu).map(|i| 1.0 - p1.value(grid.get(i, nu))).product();
    let b: f64 = (1..=nu).map(|j| 1.0 - p2.value(grid.get(mu, j))).product();
    (a, b)
}

fn ensure_valid(profile: &AccuracyProfile, which: &str) -> Result<()> {
    let report = profile.validate();
    if report.passed() {
        Ok(())
    } else {
        Err(DuelError::InvalidProfile(format!(
            "{which} ({profile}) failed validation: {}",
            report.failures.join("; ")
        )))
    }
}

/// Solve the `m × n` timing grid by anti-diagonal bisection, stopping each
/// root find once `|G(t)| ≤ tol` (or the bracket shrinks below `tol·1e-2`).
pub fn solve_grid(p1: &AccuracyProfile, p2: &AccuracyProfile, m: usize, n: usize, tol: f64) -> Result<TGrid> {
    if m == 0 || n == 0 {
        return Err(DuelError::InvalidArgument(format!(
            "grid needs m, n >= 1, got m={m}, n={n}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(DuelError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    ensure_valid(p1, "profile1")?;
    ensure_valid(p2, "profile2")?;

    let mut grid = TGrid {
        m,
        n,
        t: vec![f64::NAN; m * n],
        tol,
    };
    let width_cutoff = tol * 1e-2;

    for diagonal in 2..=m + n {
        let mu_lo = diagonal.saturating_sub(n).max(1);
        let mu_hi = (diagonal - 1).min(m);
        for mu in mu_lo..=mu_hi {
            let nu = diagonal - mu;
            let a: f64 = (1..mu).map(|i| 1.0 - p1.value(grid.get(i, nu))).product();
            let b: f64 = (1..nu).map(|j| 1.0 - p2.value(grid.get(mu, j))).product();
            let g = |t: f64| a * (1.0 - p1.value(t)) + b * (1.0 - p2.value(t)) - 1.0;

            let upper = grid.corridor_upper(mu, nu);
            let g_lo = a + b - 1.0;
            let g_hi = g(upper);
            if g_lo < 0.0 || g_hi > 0.0 {
                return Err(DuelError::NoSignChange {
                    mu,
                    nu,
                    upper,
                    g_lo,
                    g_hi,
                });
            }

            let (mut lo, mut hi) = (0.0_f64, upper);
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..MAX_BISECTIONS {
                mid = 0.5 * (lo + hi);
                let value = g(mid);
                if value.abs() <= tol || hi - lo <= width_cutoff {
                    break;
                }
                if value > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            grid.set(mu, nu, mid);
        }
    }
    Ok(grid)
}

/// Largest `|LHS − 1|` of the grid equation over all interior entries.
pub fn residual(grid: &TGrid, p1: &AccuracyProfile, p2: &AccuracyProfile) -> f64 {
    let mut worst = 0.0_f64;
    for mu in 1..=grid.m {
        for nu in 1..=grid.n {
            let (a, b) = products(grid, p1, p2, mu, nu);
            worst = worst.max((a + b - 1.0).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scan G on a fine grid and return the first sign change; independent
    /// of the bisection path.
    fn scan_root(g: impl Fn(f64) -> f64, upper: f64) -> f64 {
        let steps = 2_000_000;
        let mut prev = g(0.0);
        for k in 1..=steps {
            let t = upper * k as f64 / steps as f64;
            let v = g(t);
            if prev >= 0.0 && v <= 0.0 {
                return t;
            }
            prev = v;
        }
        panic!("no root");
    }

    #[test]
    fn linear_two_by_two() {
        let lin = AccuracyProfile::linear();
        let grid = solve_grid(&lin, &lin, 2, 2, 1e-12).unwrap();
        assert!((grid.get(1, 1) - 0.5).abs() < 1e-12);
        assert!((grid.get(2, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((grid.get(1, 2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((grid.get(2, 2) - 0.25).abs() < 1e-12);
        // scan oracle for t21: G(t) = 0.5 (1 - t) + (1 - t) - 1
        let scanned = scan_root(|t| 0.5 * (1.0 - t) + (1.0 - t) - 1.0, 0.5);
        assert!((scanned - grid.get(2, 1)).abs() < 1e-6);
    }

    #[test]
    fn golden_ratio_entry() {
        let grid = solve_grid(&AccuracyProfile::power(2.0), &AccuracyProfile::linear(), 1, 1, 1e-13).unwrap();
        let scanned = scan_root(|t| 1.0 - t * t - t, 1.0);
        let expected = (5f64.sqrt() - 1.0) / 2.0;
        assert!((scanned - expected).abs() < 1e-6);
        assert!((grid.get(1, 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn symmetric_single_entry_hits_half_probability() {
        let p = AccuracyProfile::piecewise_linear(vec![[0.0, 0.0], [0.3, 0.6], [1.0, 1.0]]);
        let grid = solve_grid(&p, &p, 1, 1, 1e-13).unwrap();
        assert!((p.value(grid.get(1, 1)) - 0.5).abs() < 1e-12);
        let r = residual(&grid, &p, &p);
        assert!((r - (2.0 * (1.0 - p.value(grid.get(1, 1))) - 1.0).abs()).abs() < 1e-15);
        assert!(r <= 1e-13);
    }

    #[test]
    fn perturbation_is_detected() {
        let p1 = AccuracyProfile::power(1.5);
        let p2 = AccuracyProfile::power(0.7);
        let grid = solve_grid(&p1, &p2, 3, 3, 1e-12).unwrap();
        assert!(residual(&grid, &p1, &p2) <= 1e-10);
        let mut entries: Vec<f64> = grid.rows().flatten().copied().collect();
        entries[4] += 0.01;
        let bumped = TGrid::from_entries(3, 3, entries, grid.tol()).unwrap();
        assert!(residual(&bumped, &p1, &p2) > 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let lin = AccuracyProfile::linear();
        assert!(matches!(
            solve_grid(&lin, &lin, 0, 2, 1e-12),
            Err(DuelError::InvalidArgument(_))
        ));
        assert!(matches!(
            solve_grid(&lin, &lin, 2, 2, 0.0),
            Err(DuelError::InvalidArgument(_))
        ));
        let flat = AccuracyProfile::tabulated(vec![0.0, 0.5, 0.5, 1.0]);
        assert!(matches!(
            solve_grid(&flat, &lin, 2, 2, 1e-12),
            Err(DuelError::InvalidProfile(_))
        ));
        assert!(matches!(
            TGrid::from_entries(2, 2, vec![0.5; 3], 1e-12),
            Err(DuelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn boundary_accessor() {
        let lin = AccuracyProfile::linear();
        let grid = solve_grid(&lin, &lin, 2, 3, 1e-12).unwrap();
        assert_eq!(grid.get(0, 3), 1.0);
        assert_eq!(grid.get(2, 0), 1.0);
        assert!(grid.corridor_holds());
    }
}
