//! Command-line front end.
//!
//! Settings come from an optional TOML file, overridden by flags. Every
//! setting is validated before any computation; problems are reported
//! against the config line or the flag they came from and exit with 2.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use toml::Spanned;

use crate::accuracy::AccuracyProfile;
use crate::equilibrium::{epsilon_strategy, value_closed, BehavioralStrategy};
use crate::error::DuelError;
use crate::pareto::{self, ParetoOptions, Suite};
use crate::payoff::{check_consistency, DuelSpec, Play, Player};
use crate::tgrid::{residual, solve_grid, TGrid, DEFAULT_TOL};
use crate::verify::{self, sample_play, sample_rng, Budgets, VerificationReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "noisy-duel",
    version,
    about = "Noisy duels with discrete firing: timing grids, values, equilibrium checks and Pareto analysis"
)]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Player I's resource.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Player II's resource.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "A1", global = true, allow_negative_numbers = true)]
    pub a1: Option<f64>,
    #[arg(long = "A2", global = true, allow_negative_numbers = true)]
    pub a2: Option<f64>,
    #[arg(long = "B1", global = true, allow_negative_numbers = true)]
    pub b1: Option<f64>,
    #[arg(long = "B2", global = true, allow_negative_numbers = true)]
    pub b2: Option<f64>,
    /// Player I's accuracy, e.g. `linear`, `power:2`, `pwl:0,0;0.5,0.3;1,1`.
    #[arg(long, global = true, value_name = "KIND:PARAMS")]
    pub profile1: Option<String>,
    #[arg(long, global = true, value_name = "KIND:PARAMS")]
    pub profile2: Option<String>,
    /// Grid solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Monte Carlo samples.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Time grid size of the best-response search.
    #[arg(long = "grid-points", global = true)]
    pub grid_points: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the timing grid.
    Grid,
    /// Equilibrium values for every state.
    Value,
    /// Expected payoffs of one play.
    Payoff {
        /// Player I's action times, first action first.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        tau: Vec<f64>,
        /// Player II's action times, first action first.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eta: Vec<f64>,
    },
    /// Supports of the ε-equilibrium strategies.
    Strategy,
    /// Check the ε-equilibrium and ε-maxmin properties.
    Verify {
        /// Replace this player's strategy by "act at t11/2 always".
        #[arg(long, value_enum)]
        adversary: Option<Adversary>,
    },
    /// Run the Pareto theorem suites on an enumerated play set.
    Pareto {
        /// Uniform time points per coordinate.
        #[arg(long)]
        resolution: Option<usize>,
        /// Comma-separated suites (default: all).
        #[arg(long, value_delimiter = ',')]
        suites: Vec<String>,
    },
    /// Sample plays from the ε-equilibrium strategies.
    Simulate {
        #[arg(long, default_value_t = 10)]
        plays: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Adversary {
    Player1,
    Player2,
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub spec: DuelSpec,
    pub tol: f64,
    pub epsilon: f64,
    pub budgets: Budgets,
    pub resolution: usize,
    pub suites: Vec<Suite>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    m: Option<Spanned<usize>>,
    n: Option<Spanned<usize>>,
    #[serde(rename = "A")]
    a: Option<Spanned<[f64; 2]>>,
    #[serde(rename = "B")]
    b: Option<Spanned<[f64; 2]>>,
    profile1: Option<Spanned<AccuracyProfile>>,
    profile2: Option<Spanned<AccuracyProfile>>,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    pareto: ParetoSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    tol: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifySection {
    epsilon: Option<Spanned<f64>>,
    samples: Option<Spanned<usize>>,
    grid_points: Option<Spanned<usize>>,
    seed: Option<Spanned<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParetoSection {
    resolution: Option<Spanned<usize>>,
    suites: Option<Spanned<Vec<String>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    format: Option<Format>,
    path: Option<PathBuf>,
}

/// Error in user input, already prefixed with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<DuelError> for InputError {
    fn from(e: DuelError) -> Self {
        InputError(e.to_string())
    }
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone)]
enum Origin {
    Default,
    Flag(&'static str),
    Line(String, usize),
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::Flag(name) => write!(f, "--{name}"),
            Origin::Line(path, line) => write!(f, "{path}:{line}"),
        }
    }
}

struct Source<'a> {
    path: String,
    text: &'a str,
}

impl Source<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn origin<T>(&self, s: &Spanned<T>) -> Origin {
        Origin::Line(self.path.clone(), self.line_of(s.span().start))
    }
}

/// Pick the flag value, else the file value, else the default.
fn pick<T: Clone>(
    flag: Option<T>,
    flag_name: &'static str,
    file: Option<&Spanned<T>>,
    src: &Source<'_>,
    default: T,
) -> (T, Origin) {
    match (flag, file) {
        (Some(v), _) => (v, Origin::Flag(flag_name)),
        (None, Some(s)) => (s.get_ref().clone(), src.origin(s)),
        (None, None) => (default, Origin::Default),
    }
}

fn fail<T>(origin: &Origin, msg: impl std::fmt::Display) -> Result<T, InputError> {
    Err(InputError(format!("{origin}: {msg}")))
}

impl RunConfig {
    /// Merge the config file named in `flags` (if any) with the flags.
    pub fn load(flags: &Overrides) -> Result<Self, InputError> {
        let (text, path) = match &flags.config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| InputError(format!("{}: cannot read config: {e}", p.display())))?;
                (text, p.display().to_string())
            }
            None => (String::new(), String::from("<none>")),
        };
        Self::from_parts(&text, &path, flags)
    }

    /// Build from config text (`path` is used in messages) and flags.
    pub fn from_parts(text: &str, path: &str, flags: &Overrides) -> Result<Self, InputError> {
        let file: FileConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            match line {
                Some(line) => InputError(format!("{path}:{line}: {}", e.message())),
                None => InputError(format!("{path}: {}", e.message())),
            }
        })?;
        let src = Source {
            path: path.to_string(),
            text,
        };

        let (m, _) = pick(flags.m, "m", file.m.as_ref(), &src, 1);
        let (n, _) = pick(flags.n, "n", file.n.as_ref(), &src, 1);
        let (mut a, a_origin) = pick(None, "A1", file.a.as_ref(), &src, [1.0, 1.0]);
        let (mut b, b_origin) = pick(None, "B1", file.b.as_ref(), &src, [1.0, 1.0]);
        let mut a_origins = [a_origin.clone(), a_origin];
        let mut b_origins = [b_origin.clone(), b_origin];
        for (j, (flag, name)) in [(flags.a1, "A1"), (flags.a2, "A2")].into_iter().enumerate() {
            if let Some(v) = flag {
                a[j] = v;
                a_origins[j] = Origin::Flag(name);
            }
        }
        for (j, (flag, name)) in [(flags.b1, "B1"), (flags.b2, "B2")].into_iter().enumerate() {
            if let Some(v) = flag {
                b[j] = v;
                b_origins[j] = Origin::Flag(name);
            }
        }
        for j in 0..2 {
            if !(a[j].is_finite() && a[j] >= 0.0) {
                return fail(
                    &a_origins[j],
                    format!("A{} must be finite and >= 0, got {}", j + 1, a[j]),
                );
            }
            if !(b[j].is_finite() && b[j] >= 0.0) {
                return fail(
                    &b_origins[j],
                    format!("B{} must be finite and >= 0, got {}", j + 1, b[j]),
                );
            }
            if a[j] + b[j] <= 0.0 {
                return fail(&a_origins[j], format!("A{0} + B{0} must be positive", j + 1));
            }
        }

        let mut profiles = Vec::new();
        for (flag, name, file_value) in [
            (&flags.profile1, "profile1", file.profile1.as_ref()),
            (&flags.profile2, "profile2", file.profile2.as_ref()),
        ] {
            let (profile, origin) = match (flag, file_value) {
                (Some(text), _) => {
                    let origin = Origin::Flag(name);
                    match AccuracyProfile::from_str(text) {
                        Ok(p) => (p, origin),
                        Err(e) => return fail(&origin, e),
                    }
                }
                (None, Some(s)) => (s.get_ref().clone(), src.origin(s)),
                (None, None) => (AccuracyProfile::linear(), Origin::Default),
            };
            let report = profile.validate();
            if !report.passed() {
                return fail(
                    &origin,
                    format!(
                        "{name} ({profile}) is not a valid accuracy function: {}",
                        report.failures.join("; ")
                    ),
                );
            }
            profiles.push(profile);
        }
        let p2 = profiles.pop().expect("two profiles");
        let p1 = profiles.pop().expect("two profiles");
        let spec = DuelSpec::new(m, n, a, b, p1, p2)?;

        let (tol, origin) = pick(flags.tol, "tol", file.solver.tol.as_ref(), &src, DEFAULT_TOL);
        if !(tol.is_finite() && tol > 0.0) {
            return fail(&origin, format!("tol must be positive, got {tol}"));
        }
        let (epsilon, origin) = pick(flags.epsilon, "epsilon", file.verify.epsilon.as_ref(), &src, 0.05);
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return fail(&origin, format!("epsilon must be positive, got {epsilon}"));
        }
        let (samples, origin) = pick(
            flags.samples,
            "samples",
            file.verify.samples.as_ref(),
            &src,
            verify::DEFAULT_SAMPLES,
        );
        if samples < 2 {
            return fail(&origin, format!("samples must be at least 2, got {samples}"));
        }
        let (grid_points, origin) = pick(
            flags.grid_points,
            "grid-points",
            file.verify.grid_points.as_ref(),
            &src,
            verify::DEFAULT_GRID_POINTS,
        );
        if grid_points < 4 {
            return fail(&origin, format!("grid-points must be at least 4, got {grid_points}"));
        }
        let (seed, _) = pick(
            flags.seed,
            "seed",
            file.verify.seed.as_ref(),
            &src,
            verify::DEFAULT_SEED,
        );
        let budgets = Budgets {
            samples,
            grid_points,
            seed,
            grid_tol: tol,
            ..Budgets::default()
        };

        let (resolution, origin) = pick(
            None,
            "resolution",
            file.pareto.resolution.as_ref(),
            &src,
            pareto::DEFAULT_RESOLUTION,
        );
        if resolution < 10 {
            return fail(&origin, format!("resolution must be at least 10, got {resolution}"));
        }
        let suites = match &file.pareto.suites {
            Some(s) => parse_suites(s.get_ref(), &src.origin(s))?,
            None => Suite::ALL.to_vec(),
        };

        Ok(RunConfig {
            spec,
            tol,
            epsilon,
            budgets,
            resolution,
            suites,
            format: flags.format.or(file.output.format).unwrap_or(Format::Csv),
            out: flags.out.clone().or(file.output.path),
        })
    }
}

fn parse_suites(names: &[String], origin: &Origin) -> Result<Vec<Suite>, InputError> {
    if names.is_empty() {
        return fail(origin, "at least one suite is required");
    }
    names
        .iter()
        .map(|s| Suite::from_str(s.trim()).or_else(|e| fail(origin, e)))
        .collect()
}

/// Text emitted by a subcommand and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub text: String,
    pub passed: bool,
}

impl Artifact {
    fn ok(text: String) -> Self {
        Artifact { text, passed: true }
    }
}

/// Fixed-precision rendering with 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000000000000".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exponent) {
        let decimals = (16 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: &[Cell]) {
        let parts: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Num(x) => format_number(*x),
                Cell::Text(s) => s.clone(),
            })
            .collect();
        let _ = writeln!(self.0, "{}", parts.join(","));
    }
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

fn times_field(ts: &[f64]) -> String {
    ts.iter().map(|&t| format_number(t)).collect::<Vec<_>>().join(" ")
}

/// Timing grid for the spec; zero resources still get a 1×1 grid so that
/// values and strategies are defined.
fn grid_for(config: &RunConfig) -> Result<TGrid, InputError> {
    let s = &config.spec;
    Ok(solve_grid(&s.p1, &s.p2, s.m.max(1), s.n.max(1), config.tol)?)
}

/// Run one subcommand.
pub fn run(command: &Command, config: &RunConfig) -> Result<Artifact, InputError> {
    let spec = &config.spec;
    let json = config.format == Format::Json;
    match command {
        Command::Grid => {
            if spec.m == 0 || spec.n == 0 {
                return Err(InputError("grid needs m >= 1 and n >= 1".into()));
            }
            let grid = grid_for(config)?;
            if json {
                let rows: Vec<Vec<f64>> = grid.rows().map(|r| r.to_vec()).collect();
                let res = residual(&grid, &spec.p1, &spec.p2);
                Ok(Artifact::ok(to_json(&json!({
                    "m": spec.m, "n": spec.n, "tol": config.tol, "residual": res, "t": rows,
                }))))
            } else {
                let mut csv = Csv::new(&["mu", "nu", "t"]);
                for mu in 1..=spec.m {
                    for nu in 1..=spec.n {
                        csv.row(&[Cell::Int(mu), Cell::Int(nu), Cell::Num(grid.get(mu, nu))]);
                    }
                }
                Ok(Artifact::ok(csv.0))
            }
        }
        Command::Value => {
            let grid = grid_for(config)?;
            let table = value_closed(spec, &grid)?;
            if json {
                let top = table.get(spec.m, spec.n);
                let states: Vec<_> = table.iter().collect();
                Ok(Artifact::ok(to_json(&json!({
                    "m": spec.m, "n": spec.n, "v1": top.v1, "v2": top.v2, "table": states,
                }))))
            } else {
                let mut csv = Csv::new(&["mu", "nu", "v1", "v2"]);
                for v in table.iter() {
                    csv.row(&[Cell::Int(v.mu), Cell::Int(v.nu), Cell::Num(v.v1), Cell::Num(v.v2)]);
                }
                Ok(Artifact::ok(csv.0))
            }
        }
        Command::Payoff { tau, eta } => {
            let play = Play::from_chronological(tau.clone(), eta.clone())
                .map_err(|e| InputError(format!("--tau/--eta: {e}")))?;
            let report = check_consistency(spec, &play).map_err(|e| InputError(format!("--tau/--eta: {e}")))?;
            let (k, q) = (report.payoff, report.outcomes);
            if json {
                Ok(Artifact::ok(to_json(&json!({
                    "tau": tau, "eta": eta, "K1": k.k1, "K2": k.k2,
                    "Q0": q.q0, "Q1": q.q1, "Q2": q.q2, "Q3": q.q3,
                }))))
            } else {
                let mut csv = Csv::new(&["K1", "K2", "Q0", "Q1", "Q2", "Q3"]);
                csv.row(&[k.k1, k.k2, q.q0, q.q1, q.q2, q.q3].map(Cell::Num));
                Ok(Artifact::ok(csv.0))
            }
        }
        Command::Strategy => {
            let grid = grid_for(config)?;
            let (_, _, params) = epsilon_strategy(spec, &grid, config.epsilon)?;
            let mut states = Vec::new();
            for mu in 1..=spec.m {
                for nu in 1..=spec.n {
                    let lo = grid.get(mu, nu);
                    let delta = params.delta(mu, nu);
                    states.push((mu, nu, lo, lo + delta, delta));
                }
            }
            if json {
                let rows: Vec<_> = states
                    .iter()
                    .map(|&(mu, nu, lo, hi, delta)| json!({"mu": mu, "nu": nu, "lo": lo, "hi": hi, "delta": delta}))
                    .collect();
                Ok(Artifact::ok(to_json(&json!({
                    "epsilon": params.epsilon, "lambda": params.lambda, "states": rows,
                }))))
            } else {
                let mut csv = Csv::new(&["mu", "nu", "lo", "hi", "delta"]);
                for (mu, nu, lo, hi, delta) in states {
                    csv.row(&[
                        Cell::Int(mu),
                        Cell::Int(nu),
                        Cell::Num(lo),
                        Cell::Num(hi),
                        Cell::Num(delta),
                    ]);
                }
                Ok(Artifact::ok(csv.0))
            }
        }
        Command::Verify { adversary } => {
            let grid = grid_for(config)?;
            let (mut x, mut y, _) = epsilon_strategy(spec, &grid, config.epsilon)?;
            let early = grid.get(1, 1) / 2.0;
            match adversary {
                Some(Adversary::Player1) => x = BehavioralStrategy::constant(Player::One, spec.m, spec.n, early),
                Some(Adversary::Player2) => y = BehavioralStrategy::constant(Player::Two, spec.m, spec.n, early),
                None => {}
            }
            let eq = verify::verify_strategies(spec, config.epsilon, &x, &y, &config.budgets)?;
            let mm = verify::verify_maxmin_strategies(spec, config.epsilon, &x, &y, &config.budgets)?;
            let passed = eq.passed && mm.passed;
            let text = if json {
                to_json(&json!({ "equilibrium": eq, "maxmin": mm, "passed": passed }))
            } else {
                verify_csv(&[&eq, &mm])
            };
            Ok(Artifact { text, passed })
        }
        Command::Pareto { resolution, suites } => {
            let grid = grid_for(config)?;
            let resolution = resolution.unwrap_or(config.resolution);
            if resolution < 10 {
                return Err(InputError(format!(
                    "--resolution: must be at least 10, got {resolution}"
                )));
            }
            let suites = if suites.is_empty() {
                config.suites.clone()
            } else {
                parse_suites(suites, &Origin::Flag("suites"))?
            };
            let options = ParetoOptions {
                resolution,
                suites,
                ..ParetoOptions::default()
            };
            let report = pareto::check_pareto_theorems(spec, &grid, &options)?;
            let text = if json {
                to_json(&report)
            } else {
                let mut csv = Csv::new(&["suite", "applicable", "comparisons", "violations", "passed"]);
                for s in &report.suites {
                    csv.row(&[
                        Cell::Text(s.suite.name().into()),
                        Cell::Text(s.applicable.to_string()),
                        Cell::Int(s.comparisons),
                        Cell::Int(s.violations),
                        Cell::Text(s.passed.to_string()),
                    ]);
                }
                csv.0
            };
            Ok(Artifact {
                text,
                passed: report.passed,
            })
        }
        Command::Simulate { plays } => {
            let grid = grid_for(config)?;
            let (x, y, _) = epsilon_strategy(spec, &grid, config.epsilon)?;
            let mut rows = Vec::with_capacity(*plays);
            for i in 0..*plays {
                let mut rng = sample_rng(config.budgets.seed, i as u64);
                let play = sample_play(spec, (&x).into(), (&y).into(), &mut rng)?;
                let k = crate::payoff::evaluate(spec, &play)?;
                rows.push((i, play, k));
            }
            if json {
                let out: Vec<_> = rows
                    .iter()
                    .map(|(i, p, k)| {
                        json!({
                            "sample": i, "tau": p.tau_chronological(), "eta": p.eta_chronological(),
                            "K1": k.k1, "K2": k.k2,
                        })
                    })
                    .collect();
                Ok(Artifact::ok(to_json(
                    &json!({ "seed": config.budgets.seed, "epsilon": config.epsilon, "plays": out }),
                )))
            } else {
                let mut csv = Csv::new(&["sample", "tau", "eta", "K1", "K2"]);
                for (i, p, k) in rows {
                    csv.row(&[
                        Cell::Int(i),
                        Cell::Text(times_field(&p.tau_chronological())),
                        Cell::Text(times_field(&p.eta_chronological())),
                        Cell::Num(k.k1),
                        Cell::Num(k.k2),
                    ]);
                }
                Ok(Artifact::ok(csv.0))
            }
        }
    }
}

fn verify_csv(reports: &[&VerificationReport]) -> String {
    let mut csv = Csv::new(&["kind", "check", "lhs", "rhs", "passed"]);
    for r in reports {
        let kind = match r.kind {
            verify::ReportKind::EpsilonEquilibrium => "epsilon-equilibrium",
            verify::ReportKind::Maxmin => "maxmin",
        };
        for c in &r.checks {
            csv.row(&[
                Cell::Text(kind.into()),
                Cell::Text(c.name.clone()),
                Cell::Num(c.lhs),
                Cell::Num(c.rhs),
                Cell::Text(c.passed.to_string()),
            ]);
        }
    }
    csv.0
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), InputError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| InputError(format!("{}: cannot write output: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| InputError(format!("stdout: {e}")))
        }
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::load(&cli.overrides).and_then(|config| {
        let artifact = run(&cli.command, &config)?;
        emit(&artifact.text, config.out.as_deref())?;
        Ok(artifact.passed)
    });
    match result {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(format_number(0.5), "0.50000000000000000");
        assert_eq!(format_number(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_number(-2.0), "-2.0000000000000000");
        assert_eq!(format_number(1e-7), "9.9999999999999995e-8");
        let digits = |s: &str| s.chars().filter(|c| c.is_ascii_digit()).count();
        assert!(digits(&format_number(0.25)) >= 15);
    }

    #[test]
    fn config_errors_name_the_line() {
        let text = "m = 2\nn = 1\nA = [1.0, -1.0]\n";
        let err = RunConfig::from_parts(text, "cfg.toml", &Overrides::default()).unwrap_err();
        assert!(err.0.starts_with("cfg.toml:3:"), "{}", err.0);
        let err = RunConfig::from_parts("m = 2\nbogus = 1\n", "cfg.toml", &Overrides::default()).unwrap_err();
        assert!(err.0.starts_with("cfg.toml:2:"), "{}", err.0);
        let text = "[profile1]\nkind = \"power\"\nexponent = -1.0\n";
        let err = RunConfig::from_parts(text, "cfg.toml", &Overrides::default()).unwrap_err();
        assert!(err.0.starts_with("cfg.toml:1:"), "{}", err.0);
    }

    #[test]
    fn flags_override_file() {
        let text = "m = 2\nn = 2\nA = [2.0, 1.0]\n[verify]\nepsilon = 0.1\n";
        let flags = Overrides {
            m: Some(3),
            a2: Some(4.0),
            ..Overrides::default()
        };
        let c = RunConfig::from_parts(text, "cfg.toml", &flags).unwrap();
        assert_eq!((c.spec.m, c.spec.n), (3, 2));
        assert_eq!(c.spec.a, [2.0, 4.0]);
        assert_eq!(c.epsilon, 0.1);
        let bad = Overrides {
            b1: Some(-1.0),
            ..Overrides::default()
        };
        let err = RunConfig::from_parts(text, "cfg.toml", &bad).unwrap_err();
        assert!(err.0.starts_with("--B1:"), "{}", err.0);
    }

    #[test]
    fn grid_csv_linear() {
        let flags = Overrides {
            m: Some(2),
            n: Some(2),
            ..Overrides::default()
        };
        let c = RunConfig::from_parts("", "-", &flags).unwrap();
        let a = run(&Command::Grid, &c).unwrap();
        let lines: Vec<&str> = a.text.lines().collect();
        assert_eq!(lines[0], "mu,nu,t");
        let expected = [(1, 1, 0.5), (1, 2, 1.0 / 3.0), (2, 1, 1.0 / 3.0), (2, 2, 0.25)];
        for (line, (mu, nu, t)) in lines[1..].iter().zip(expected) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!((cells[0], cells[1]), (mu.to_string().as_str(), nu.to_string().as_str()));
            assert!((cells[2].parse::<f64>().unwrap() - t).abs() < 1e-9, "{line}");
        }
        assert!(!a.text.contains('\r') && a.text.ends_with('\n'));
    }
}
