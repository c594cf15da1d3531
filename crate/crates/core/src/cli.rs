//! Command-line front end: `derive`, `eval`, `verify`, `simulate`, `figures`.
//!
//! Wave and grid settings are layered in increasing priority: preset, then
//! the `--config` file, then individual flags. The key-value file holds one
//! `key = value` per line; `#` starts a comment. Recognised keys are listed
//! in [`CONFIG_KEYS`]; anything else is rejected.
//!
//! Exit codes: 0 success, 2 configuration error, 3 verification failure or
//! poles, 4 numerical instability.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::expansion::{
    build_reduced_ode, extract_system, solve_system, verify_solution_substitution, Branch,
    ExpansionError,
};
use crate::gammaparse::parse_gamma;
use crate::solutions::{
    classify, presets, GammaSpec, LoadedWave, SolutionFamily, WaveParams, DEFAULT_PHASE_DT,
};
use crate::symkernel::balance_degree;
use crate::verifier::{
    convergence_order, residual, residual_with_cells, simulate_mol, Field, Grid, LoadingModel,
    MolConfig, MolWindow, Perturbed, RefinementLevel, VerifyError, WaveLoading,
    DEFAULT_STABILITY_FACTOR,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;
pub const EXIT_INSTABILITY: i32 = 4;

/// Default pass threshold for `verify`.
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("instability: {0}")]
    Instability(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Instability(_) => EXIT_INSTABILITY,
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::InvalidGrid(_) | VerifyError::InsufficientRefinements(_) => {
                CliError::Config(e.to_string())
            }
            VerifyError::Instability { .. } | VerifyError::StabilityViolation { .. } => {
                CliError::Instability(e.to_string())
            }
            _ => CliError::Verification(e.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "loaded-mkdv",
    version,
    about = "Exact travelling waves of the loaded mKdV equation and their numeric verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the symbolic (G'/G)-expansion derivation.
    Derive(DeriveArgs),
    /// Sample q(x,t) on a grid.
    Eval(EvalArgs),
    /// Finite-difference residual of the loaded equation as JSON.
    Verify(VerifyArgs),
    /// Method-of-lines run compared against the analytic solution.
    Simulate(SimulateArgs),
    /// Surface data for one of the three reference parameter sets.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchChoice {
    One(Branch),
    Both,
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    match s.trim() {
        "+1" | "1" | "plus" | "+" => Ok(Branch::Plus),
        "-1" | "minus" | "-" => Ok(Branch::Minus),
        other => Err(format!("branch must be +1 or -1, got '{other}'")),
    }
}

fn parse_branch_choice(s: &str) -> Result<BranchChoice, String> {
    if s.trim() == "both" {
        Ok(BranchChoice::Both)
    } else {
        parse_branch(s).map(BranchChoice::One)
    }
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Ansatz degree; only the balanced value 1 is supported.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Sign branch to solve: +1, -1 or both.
    #[arg(long, default_value = "both", value_parser = parse_branch_choice, allow_hyphen_values = true)]
    pub branch: BranchChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GammaVariant {
    /// Tailored loading for Δ > 0.
    Hyperbolic,
    /// Tailored loading for Δ < 0.
    Trigonometric,
    /// Tailored loading for Δ = 0.
    Rational,
    /// Expression given by gamma.expr.
    Custom,
    /// γ ≡ 0.
    None,
}

impl GammaVariant {
    fn parse(s: &str) -> Result<Self, CliError> {
        <GammaVariant as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| config_err(format!("unknown gamma.variant '{}'", s.trim())))
    }
}

/// Wave and loading settings shared by the sampling subcommands.
///
/// `--gamma-expr` grammar: numbers, `t`, `+ - * / ^` (right-associative,
/// numeric exponent), parentheses, unary minus and the functions
/// `sin cos tan tanh coth cot sqrt exp`.
#[derive(Debug, Clone, Default, Args)]
pub struct WaveArgs {
    /// Reference parameter set 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub preset: Option<u8>,
    /// Key-value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    /// Sign branch, +1 or -1.
    #[arg(long, value_parser = parse_branch, allow_hyphen_values = true)]
    pub branch: Option<Branch>,
    #[arg(long = "gamma-variant", value_enum)]
    pub gamma_variant: Option<GammaVariant>,
    /// Comma-separated polynomial coefficients α_0, α_1, ...
    #[arg(long = "gamma-alpha", allow_hyphen_values = true)]
    pub gamma_alpha: Option<String>,
    /// Expression in t for a custom loading.
    #[arg(long = "gamma-expr", allow_hyphen_values = true)]
    pub gamma_expr: Option<String>,
    /// Step of the numeric phase integrator.
    #[arg(long = "phase-dt")]
    pub phase_dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x1: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub nt: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum LoadingChoice {
    /// γ(t)·q(0,t) from the analytic trace.
    #[default]
    Derived,
    /// Alternative closed form: `k³` trigonometric term, no `1/k` in the rational case.
    Printed,
}

impl From<LoadingChoice> for LoadingModel {
    fn from(c: LoadingChoice) -> Self {
        match c {
            LoadingChoice::Derived => LoadingModel::Derived,
            LoadingChoice::Printed => LoadingModel::Printed,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Pass iff max_abs is at most this.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Add a constant to the solution before differencing.
    #[arg(long, allow_negative_numbers = true)]
    pub perturb: Option<f64>,
    /// Number of dyadically refined grids for an order estimate (at least 3).
    #[arg(long)]
    pub refinements: Option<usize>,
    #[arg(long, value_enum, default_value_t = LoadingChoice::Derived)]
    pub loading: LoadingChoice,
    /// Write per-cell residuals of the base grid as CSV.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Requested time step; shrunk to the stability bound unless --strict.
    #[arg(long)]
    pub ht: Option<f64>,
    /// Refuse a time step above the stability bound instead of shrinking it.
    #[arg(long)]
    pub strict: bool,
    /// c in ht ≤ c·hx³.
    #[arg(long = "stability-factor", default_value_t = DEFAULT_STABILITY_FACTOR)]
    pub stability_factor: f64,
    #[arg(long, value_enum, default_value_t = LoadingChoice::Derived)]
    pub loading: LoadingChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Parameter set 1, 2 or 3.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub which: u8,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

/// Keys accepted in a `--config` file.
pub const CONFIG_KEYS: [&str; 17] = [
    "k",
    "lambda",
    "mu",
    "c1",
    "c2",
    "omega0",
    "branch",
    "gamma.variant",
    "gamma.alpha",
    "gamma.expr",
    "phase.dt",
    "x0",
    "x1",
    "nx",
    "t0",
    "t1",
    "nt",
];

/// Partially specified settings; `None` means "not given at this layer".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub omega0: Option<f64>,
    pub branch: Option<Branch>,
    pub gamma_variant: Option<GammaVariant>,
    pub gamma_alpha: Option<Vec<f64>>,
    pub gamma_expr: Option<String>,
    pub phase_dt: Option<f64>,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    pub nx: Option<usize>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub nt: Option<usize>,
}

fn parse_real(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| config_err(format!("{key}: '{}' is not a number", v.trim())))?;
    if !x.is_finite() {
        return Err(config_err(format!("{key} must be finite")));
    }
    Ok(x)
}

fn parse_count(key: &str, v: &str) -> Result<usize, CliError> {
    v.trim()
        .parse()
        .map_err(|_| config_err(format!("{key}: '{}' is not a non-negative integer", v.trim())))
}

/// `"0, 1, 2"` → `[0, 1, 2]`.
pub fn parse_alpha(v: &str) -> Result<Vec<f64>, CliError> {
    let alpha = v
        .split(',')
        .map(|s| parse_real("gamma.alpha", s))
        .collect::<Result<Vec<_>, _>>()?;
    if alpha.is_empty() {
        return Err(config_err("gamma.alpha is empty"));
    }
    Ok(alpha)
}

impl Overrides {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "k" => self.k = Some(parse_real(key, value)?),
            "lambda" => self.lambda = Some(parse_real(key, value)?),
            "mu" => self.mu = Some(parse_real(key, value)?),
            "c1" => self.c1 = Some(parse_real(key, value)?),
            "c2" => self.c2 = Some(parse_real(key, value)?),
            "omega0" => self.omega0 = Some(parse_real(key, value)?),
            "branch" => self.branch = Some(parse_branch(value).map_err(config_err)?),
            "gamma.variant" => self.gamma_variant = Some(GammaVariant::parse(value)?),
            "gamma.alpha" => self.gamma_alpha = Some(parse_alpha(value)?),
            "gamma.expr" => self.gamma_expr = Some(value.trim().to_string()),
            "phase.dt" => self.phase_dt = Some(parse_real(key, value)?),
            "x0" => self.x0 = Some(parse_real(key, value)?),
            "x1" => self.x1 = Some(parse_real(key, value)?),
            "nx" => self.nx = Some(parse_count(key, value)?),
            "t0" => self.t0 = Some(parse_real(key, value)?),
            "t1" => self.t1 = Some(parse_real(key, value)?),
            "nt" => self.nt = Some(parse_count(key, value)?),
            _ => return Err(config_err(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// `top` wins wherever it is set.
    pub fn layer(self, top: Overrides) -> Overrides {
        Overrides {
            k: top.k.or(self.k),
            lambda: top.lambda.or(self.lambda),
            mu: top.mu.or(self.mu),
            c1: top.c1.or(self.c1),
            c2: top.c2.or(self.c2),
            omega0: top.omega0.or(self.omega0),
            branch: top.branch.or(self.branch),
            gamma_variant: top.gamma_variant.or(self.gamma_variant),
            gamma_alpha: top.gamma_alpha.or(self.gamma_alpha),
            gamma_expr: top.gamma_expr.or(self.gamma_expr),
            phase_dt: top.phase_dt.or(self.phase_dt),
            x0: top.x0.or(self.x0),
            x1: top.x1.or(self.x1),
            nx: top.nx.or(self.nx),
            t0: top.t0.or(self.t0),
            t1: top.t1.or(self.t1),
            nt: top.nt.or(self.nt),
        }
    }

    /// The settings of reference parameter set `id`.
    pub fn preset(id: u8) -> Result<Overrides, CliError> {
        let (p, gamma) =
            presets::figure(id).ok_or_else(|| config_err(format!("no preset {id}")))?;
        let (variant, alpha) = gamma.tailored_alpha().expect("presets use tailored loadings");
        Ok(Overrides {
            k: Some(p.k),
            lambda: Some(p.lambda),
            mu: Some(p.mu),
            c1: Some(p.c1),
            c2: Some(p.c2),
            omega0: Some(p.omega0),
            branch: Some(p.branch),
            gamma_variant: Some(match variant {
                SolutionFamily::Hyperbolic => GammaVariant::Hyperbolic,
                SolutionFamily::Trigonometric => GammaVariant::Trigonometric,
                SolutionFamily::Rational => GammaVariant::Rational,
            }),
            gamma_alpha: Some(alpha.to_vec()),
            ..Overrides::default()
        })
    }

    fn from_flags(wave: &WaveArgs, grid: &GridArgs) -> Result<Overrides, CliError> {
        Ok(Overrides {
            k: wave.k,
            lambda: wave.lambda,
            mu: wave.mu,
            c1: wave.c1,
            c2: wave.c2,
            omega0: wave.omega0,
            branch: wave.branch,
            gamma_variant: wave.gamma_variant,
            gamma_alpha: wave.gamma_alpha.as_deref().map(parse_alpha).transpose()?,
            gamma_expr: wave.gamma_expr.clone(),
            phase_dt: wave.phase_dt,
            x0: grid.x0,
            x1: grid.x1,
            nx: grid.nx,
            t0: grid.t0,
            t1: grid.t1,
            nt: grid.nt,
        })
    }
}

/// Parse a key-value configuration file.
pub fn parse_config(text: &str) -> Result<Overrides, CliError> {
    let mut out = Overrides::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", n + 1)))?;
        out.set(key.trim(), value)
            .map_err(|e| match e {
                CliError::Config(m) => config_err(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
    }
    Ok(out)
}

/// Rectangular space-time window; `nt` is unused by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

impl Window {
    pub const fn new(x0: f64, x1: f64, nx: usize, t0: f64, t1: f64, nt: usize) -> Self {
        Window {
            x0,
            x1,
            nx,
            t0,
            t1,
            nt,
        }
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.x0, self.x1, self.nx, self.t0, self.t1, self.nt)?)
    }

    pub fn mol(&self) -> MolWindow {
        MolWindow {
            x0: self.x0,
            x1: self.x1,
            nx: self.nx,
            t0: self.t0,
            t1: self.t1,
        }
    }

    fn overridden(self, o: &Overrides) -> Window {
        Window {
            x0: o.x0.unwrap_or(self.x0),
            x1: o.x1.unwrap_or(self.x1),
            nx: o.nx.unwrap_or(self.nx),
            t0: o.t0.unwrap_or(self.t0),
            t1: o.t1.unwrap_or(self.t1),
            nt: o.nt.unwrap_or(self.nt),
        }
    }
}

/// Default windows per reference parameter set.
pub mod defaults {
    use super::Window;

    /// Surface windows for `figures` and `eval`. Set 3 starts at x = 0.5 to
    /// stay clear of its pole at `x = −Σα_j t^j`.
    pub fn figure_window(id: Option<u8>) -> Window {
        match id {
            Some(3) => Window::new(0.5, 5.0, 101, 0.0, 1.0, 101),
            _ => Window::new(-5.0, 5.0, 101, 0.0, 1.0, 101),
        }
    }

    /// Pole-free base grid and level count of the convergence study.
    /// Finer levels hit the `ε/h³` roundoff floor of the third-derivative
    /// stencil before the truncation error drops below 1e-6.
    pub fn residual_study(id: u8) -> (Window, usize) {
        match id {
            2 => (Window::new(-1.0, 1.0, 101, 0.0, 0.1, 101), 4),
            3 => (Window::new(1.0, 5.0, 101, 0.0, 0.3, 201), 4),
            _ => (Window::new(-5.0, 5.0, 201, 0.0, 0.5, 201), 4),
        }
    }

    /// Single grid for `verify`; resolves the exact residual below 1e-5.
    pub fn verify_window(id: Option<u8>) -> Window {
        match id {
            Some(2) => Window::new(-1.0, 1.0, 401, 0.0, 0.1, 401),
            Some(3) => Window::new(1.0, 5.0, 401, 0.0, 0.3, 801),
            _ => Window::new(-5.0, 5.0, 801, 0.0, 0.5, 801),
        }
    }

    /// Method-of-lines window. nx = 513 on [−8, 8] keeps the deviation
    /// below 1e-5 for set 1; 257 points do not.
    pub fn mol_window(id: Option<u8>) -> Window {
        match id {
            Some(2) => Window::new(-1.0, 1.0, 129, 0.0, 0.05, 0),
            Some(3) => Window::new(1.0, 5.0, 257, 0.0, 0.05, 0),
            _ => Window::new(-8.0, 8.0, 513, 0.0, 0.05, 0),
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub wave: LoadedWave,
    pub window: Window,
}

/// Merge preset, config file text and flags, then validate.
pub fn resolve(
    preset: Option<u8>,
    config_text: Option<&str>,
    flags: Overrides,
    default_window: Window,
) -> Result<RunConfig, CliError> {
    let mut merged = match preset {
        Some(id) => Overrides::preset(id)?,
        None => Overrides::default(),
    };
    if let Some(text) = config_text {
        merged = merged.layer(parse_config(text)?);
    }
    let o = merged.layer(flags);

    let lambda = o
        .lambda
        .ok_or_else(|| config_err("lambda is required without a preset"))?;
    let mu = o.mu.ok_or_else(|| config_err("mu is required without a preset"))?;
    let mut params = WaveParams::new(o.k.unwrap_or(1.0), lambda, mu)
        .with_constants(o.c1.unwrap_or(1.0), o.c2.unwrap_or(0.0))
        .with_branch(o.branch.unwrap_or(Branch::Plus));
    params.validate().map_err(|e| config_err(e.to_string()))?;

    let variant = o.gamma_variant.unwrap_or(match (&o.gamma_expr, &o.gamma_alpha) {
        (Some(_), _) => GammaVariant::Custom,
        (None, Some(_)) => match classify(&params) {
            SolutionFamily::Hyperbolic => GammaVariant::Hyperbolic,
            SolutionFamily::Trigonometric => GammaVariant::Trigonometric,
            SolutionFamily::Rational => GammaVariant::Rational,
        },
        (None, None) => GammaVariant::None,
    });
    let tailored = |family| -> Result<GammaSpec, CliError> {
        let alpha = o
            .gamma_alpha
            .clone()
            .ok_or_else(|| config_err("gamma.alpha is required for a tailored loading"))?;
        GammaSpec::tailored(family, alpha).map_err(|e| config_err(e.to_string()))
    };
    let gamma = match variant {
        GammaVariant::Hyperbolic => tailored(SolutionFamily::Hyperbolic)?,
        GammaVariant::Trigonometric => tailored(SolutionFamily::Trigonometric)?,
        GammaVariant::Rational => tailored(SolutionFamily::Rational)?,
        GammaVariant::Custom => {
            let src = o
                .gamma_expr
                .as_deref()
                .ok_or_else(|| config_err("gamma.expr is required for a custom loading"))?;
            GammaSpec::Custom(parse_gamma(src).map_err(|e| config_err(format!("gamma.expr: {e}")))?)
        }
        GammaVariant::None => GammaSpec::none(),
    };
    let alpha0 = gamma
        .tailored_alpha()
        .map(|(_, a)| a.first().copied().unwrap_or(0.0));
    params = params.with_omega0(o.omega0.or(alpha0).unwrap_or(0.0));

    let phase_dt = o.phase_dt.unwrap_or(DEFAULT_PHASE_DT);
    if !(phase_dt > 0.0) {
        return Err(config_err("phase.dt must be positive"));
    }
    let wave = LoadedWave::new(params, gamma)
        .map_err(|e| config_err(e.to_string()))?
        .with_phase_dt(phase_dt);
    Ok(RunConfig {
        wave,
        window: default_window.overridden(&o),
    })
}

fn load_config(wave: &WaveArgs, grid: &GridArgs, default_window: Window) -> Result<RunConfig, CliError> {
    let text = match &wave.config {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    resolve(
        wave.preset,
        text.as_deref(),
        Overrides::from_flags(wave, grid)?,
        default_window,
    )
}

/// Full derivation transcript for the degree-`m` ansatz.
pub fn derivation_transcript(m: u32, branches: &[Branch]) -> Result<String, ExpansionError> {
    let ode = build_reduced_ode(m)?;
    let sys = extract_system(&ode);
    let mut s = String::new();
    let balance = balance_degree(3, 2).map_or_else(|e| e.to_string(), |b| b.to_string());
    s.push_str("Travelling wave: xi = k·x + Omega(t), W = Omega'(t), Gamma = gamma(t)·q(0,t)\n");
    s.push_str("Integrated ODE: C + W·q - 2·k·q^3 + k^3·q'' - k·Gamma·q = 0\n");
    s.push_str("Auxiliary equation: G'' + lambda·G' + mu·G = 0, (G'/G)' = -((G'/G)^2 + lambda·(G'/G) + mu)\n");
    s.push_str(&format!("Balance (q^3 against q''): m = {balance}\n\n"));
    s.push_str(&format!("Ansatz:\n  q = {}\n", ode.ansatz));
    s.push_str(&format!("Cube:\n  q^3 = {}\n", ode.cube));
    s.push_str(&format!("Second derivative:\n  q'' = {}\n", ode.second_derivative));
    s.push_str(&format!("Substituted ODE:\n  {} = 0\n\n", ode.poly));
    s.push_str("Coefficient equations:\n");
    for (p, eq) in sys.descending() {
        let note = if p == 1 { "   (common factor a1 removed)" } else { "" };
        s.push_str(&format!("  (G'/G)^{p}: {eq} = 0{note}\n"));
    }
    for &branch in branches {
        let sol = match solve_system(&sys, branch) {
            Ok(sol) => sol,
            Err(e) => return Err(e),
        };
        s.push_str(&format!("\nBranch {branch}:\n"));
        s.push_str(&format!("  a1 = {}\n", sol.a1.factored()));
        s.push_str(&format!("  a0 = {}\n", sol.a0.factored()));
        s.push_str(&format!("  C = {}\n", sol.c.factored()));
        s.push_str(&format!(
            "  W = {} + {}·Gamma\n",
            sol.phase_drift.factored(),
            sol.phase_load_factor.factored()
        ));
        s.push_str(&format!("  phase drift = {}\n", sol.phase_drift.factored()));
        let check = if verify_solution_substitution(&sys, &sol) {
            "all four equations vanish identically"
        } else {
            "FAILED"
        };
        s.push_str(&format!("  substitution check: {check}\n"));
    }
    Ok(s)
}

/// One sampled surface; `None` marks a cell within one x-step of a pole.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// `q[j][i]` at `(x[i], t[j])`.
    pub q: Vec<Vec<Option<f64>>>,
}

impl Surface {
    /// CSV with header `x,t,q`, t-major; pole cells have an empty q field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,t,q\n");
        for (t, row) in self.t.iter().zip(&self.q) {
            for (x, v) in self.x.iter().zip(row) {
                match v {
                    Some(v) => out.push_str(&format!("{x},{t},{v}\n")),
                    None => out.push_str(&format!("{x},{t},\n")),
                }
            }
        }
        out
    }

    pub fn excluded_cells(&self) -> usize {
        self.q.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Extremes over the included cells.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.q.iter().flatten().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

/// Sample `wave` over `window`, excluding cells within one x-step of a pole.
pub fn sample_surface(wave: &LoadedWave, window: &Window) -> Result<Surface, CliError> {
    let grid = window.grid()?;
    let xs = grid.xs();
    let ts = grid.ts();
    let guard = grid.hx();
    let q = ts
        .iter()
        .map(|&t| {
            Field::row(wave, t, &xs, guard)
                .map_err(|e| CliError::Verification(format!("at t = {t}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Surface { x: xs, t: ts, q })
}

fn render_surface(surface: &Surface, format: OutputFormat) -> Result<String, CliError> {
    Ok(match format {
        OutputFormat::Csv => surface.to_csv(),
        OutputFormat::Json => to_json(surface)?,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| config_err(format!("serialisation failed: {e}")))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| config_err(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| config_err(format!("cannot write output: {e}"))),
    }
}

/// JSON report of `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub max_abs: f64,
    pub l2: f64,
    pub order: Option<f64>,
    pub excluded_cells: usize,
    pub included_cells: usize,
    pub threshold: f64,
    pub pass: bool,
    pub loading: LoadingModel,
    pub grid: Grid,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<RefinementLevel>,
}

/// JSON report of `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub linf: f64,
    pub l2: f64,
    pub t1: f64,
    pub steps: usize,
    pub ht: f64,
    pub stability_bound: f64,
    pub shrunk: bool,
    pub loading: LoadingModel,
    pub window: MolWindow,
}

fn require_tailored(wave: &LoadedWave, loading: LoadingChoice) -> Result<(), CliError> {
    if loading == LoadingChoice::Printed && wave.gamma().tailored_alpha().is_none() {
        return Err(config_err("--loading printed needs a tailored gamma.variant"));
    }
    Ok(())
}

fn cmd_derive(args: &DeriveArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let branches = match args.branch {
        BranchChoice::Both => vec![Branch::Plus, Branch::Minus],
        BranchChoice::One(b) => vec![b],
    };
    let text = derivation_transcript(args.m, &branches).map_err(|e| config_err(e.to_string()))?;
    emit(&None, &text, stdout)
}

fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.wave, &args.grid, defaults::figure_window(args.wave.preset))?;
    let surface = sample_surface(&cfg.wave, &cfg.window)?;
    emit(&args.out, &render_surface(&surface, args.format)?, stdout)
}

fn cmd_figures(args: &FiguresArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let wave = WaveArgs {
        preset: Some(args.which),
        ..WaveArgs::default()
    };
    let cfg = load_config(&wave, &args.grid, defaults::figure_window(Some(args.which)))?;
    let surface = sample_surface(&cfg.wave, &cfg.window)?;
    emit(&args.out, &render_surface(&surface, args.format)?, stdout)
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.wave, &args.grid, defaults::verify_window(args.wave.preset))?;
    require_tailored(&cfg.wave, args.loading)?;
    if !(args.threshold >= 0.0) {
        return Err(config_err("threshold must be non-negative"));
    }
    let grid = cfg.window.grid()?;
    let loading = WaveLoading {
        wave: &cfg.wave,
        model: args.loading.into(),
    };
    let perturbed = Perturbed {
        inner: &cfg.wave,
        offset: args.perturb.unwrap_or(0.0),
    };
    let field: &dyn Field = if args.perturb.is_some() {
        &perturbed
    } else {
        &cfg.wave
    };

    let base = if args.dump.is_some() {
        residual_with_cells(field, &loading, &grid)?
    } else {
        residual(field, &loading, &grid)?
    };
    if let (Some(path), Some(csv)) = (&args.dump, base.to_csv()) {
        fs::write(path, csv).map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
    }

    let mut report = VerifyOutput {
        max_abs: base.max_abs,
        l2: base.l2,
        order: None,
        excluded_cells: base.excluded_pole_cells,
        included_cells: base.included_cells,
        threshold: args.threshold,
        pass: false,
        loading: loading.model,
        grid,
        levels: Vec::new(),
    };
    if let Some(n) = args.refinements {
        let study = convergence_order(field, &loading, &grid, n)?;
        let finest = study.finest();
        report.max_abs = finest.max_abs;
        report.l2 = finest.l2;
        report.excluded_cells = finest.excluded_cells;
        report.order = Some(study.order);
        report.levels = study.levels;
    }
    report.pass = report.max_abs <= args.threshold;
    emit(&args.out, &to_json(&report)?, stdout)?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "max_abs {:e} exceeds threshold {:e}",
            report.max_abs, report.threshold
        )))
    }
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.wave, &args.grid, defaults::mol_window(args.wave.preset))?;
    require_tailored(&cfg.wave, args.loading)?;
    if !(args.stability_factor > 0.0 && args.stability_factor.is_finite()) {
        return Err(config_err("stability factor must be positive"));
    }
    let window = cfg.window.mol();
    window.validate()?;
    let loading = WaveLoading {
        wave: &cfg.wave,
        model: args.loading.into(),
    };
    let mol = MolConfig {
        stability_factor: args.stability_factor,
        ht: args.ht,
        strict: args.strict,
    };
    let rep = simulate_mol(&cfg.wave, &loading, &window, &mol)?;
    let report = SimulateOutput {
        linf: rep.linf,
        l2: rep.l2,
        t1: rep.state.t,
        steps: rep.steps,
        ht: rep.ht,
        stability_bound: args.stability_factor * window.hx().powi(3),
        shrunk: rep.shrunk,
        loading: loading.model,
        window,
    };
    emit(&args.out, &to_json(&report)?, stdout)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Derive(a) => cmd_derive(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Figures(a) => cmd_figures(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["loaded-mkdv"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn config_file_layers_under_flags() {
        let text = "# comment\nk = 2\nlambda = 2\nmu = -1\ngamma.alpha = 0, 1, 2\n";
        let file = parse_config(text).unwrap();
        assert_eq!(file.k, Some(2.0));
        assert_eq!(file.gamma_alpha, Some(vec![0.0, 1.0, 2.0]));
        let flags = Overrides {
            k: Some(3.0),
            ..Overrides::default()
        };
        let merged = file.layer(flags);
        assert_eq!(merged.k, Some(3.0));
        assert_eq!(merged.lambda, Some(2.0));
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_lines() {
        assert!(parse_config("speed = 1").unwrap_err().to_string().contains("unknown key"));
        assert!(parse_config("k 1").is_err());
        assert!(parse_config("k = one").is_err());
        assert!(parse_config("gamma.variant = elliptic").is_err());
        for key in CONFIG_KEYS {
            let value = match key {
                "branch" => "-1",
                "gamma.variant" => "none",
                "gamma.expr" => "t",
                "nx" | "nt" => "10",
                _ => "1",
            };
            assert!(parse_config(&format!("{key} = {value}")).is_ok(), "{key}");
        }
    }

    #[test]
    fn preset_resolution_infers_omega0() {
        let cfg = resolve(Some(3), None, Overrides::default(), defaults::figure_window(Some(3))).unwrap();
        assert_eq!(cfg.wave.params().omega0, 0.0);
        assert_eq!(cfg.wave.params().c1, 0.0);
        assert_eq!(cfg.window.x0, 0.5);
        let missing = resolve(None, None, Overrides::default(), defaults::figure_window(None));
        assert!(matches!(missing, Err(CliError::Config(_))));
    }

    #[test]
    fn derive_reports_both_branches() {
        let (code, out, _) = run_capture(&["derive"]);
        assert_eq!(code, 0);
        assert!(out.contains("a0 = (k/2)·lambda"));
        assert!(out.contains("a1 = -k"));
        let (code, _, err) = run_capture(&["derive", "--m", "2"]);
        assert_ne!(code, 0);
        assert!(err.contains("UnsupportedBalance"));
    }

    #[test]
    fn usage_errors_exit_with_config_code() {
        let (code, _, _) = run_capture(&["eval", "--k", "abc"]);
        assert_eq!(code, EXIT_CONFIG);
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("derive"));
    }
}
