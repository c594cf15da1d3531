//! Evaluable travelling-wave solutions `q(x,t) = q̂(kx + Ω(t))`.
//!
//! The profile `q̂(ξ) = ±(k·G'/G + kλ/2)` is taken from the general solution
//! of `G'' + λG' + μG = 0`; its form depends on the sign of `Δ = λ² − 4μ`.
//! The phase `Ω(t)` is either known in closed form (for the three tailored
//! loading coefficients below) or integrated numerically from
//!
//! ```text
//! Ω'(t) = k³Δ/2 + k·γ(t)·q̂(Ω(t)),    Ω(0) = Ω⁰
//! ```
//!
//! which is the differentiated phase relation with `q(0,t) = q̂(Ω(t))`.

use std::fmt;

use thiserror::Error;

use crate::expansion::Branch;
use crate::gammaparse::{parse_gamma, ExprNode, GammaError};

/// Denominators smaller than this in magnitude are treated as poles.
pub const POLE_GUARD: f64 = 1e-8;

/// Default step for the numeric phase integrator.
pub const DEFAULT_PHASE_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolutionError {
    #[error("invalid wave parameters: {0}")]
    InvalidParams(String),
    #[error("PoleProximity: profile denominator {denominator:e} at xi = {xi}")]
    PoleProximity { xi: f64, denominator: f64 },
    #[error("FamilyMismatch: {variant} loading paired with a {family} wave")]
    FamilyMismatch {
        family: SolutionFamily,
        variant: SolutionFamily,
    },
    #[error("closed-form phase unavailable: {0}")]
    ClosedFormUnavailable(&'static str),
    #[error("omega0 = {omega0} must equal alpha_0 = {alpha0} for a tailored loading")]
    OmegaMismatch { omega0: f64, alpha0: f64 },
    #[error("a tailored (non-custom) loading is required")]
    NotTailoredVariant,
    #[error("GammaSingular: loading coefficient is singular at t = {t}")]
    GammaSingular { t: f64 },
    #[error("PoleCrossing: phase trajectory reached a profile pole at t = {t} (xi = {xi})")]
    PoleCrossing { t: f64, xi: f64 },
    #[error("GammaEvaluation: {0}")]
    GammaEvaluation(#[from] GammaError),
    #[error("invalid step: {0}")]
    InvalidStep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolutionFamily {
    /// Δ > 0
    Hyperbolic,
    /// Δ < 0
    Trigonometric,
    /// Δ = 0
    Rational,
}

impl fmt::Display for SolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionFamily::Hyperbolic => "hyperbolic",
            SolutionFamily::Trigonometric => "trigonometric",
            SolutionFamily::Rational => "rational",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveParams {
    pub k: f64,
    pub lambda: f64,
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
    pub omega0: f64,
    pub branch: Branch,
}

impl WaveParams {
    /// `c1 = 1, c2 = 0, Ω⁰ = 0`, plus branch.
    pub fn new(k: f64, lambda: f64, mu: f64) -> Self {
        WaveParams {
            k,
            lambda,
            mu,
            c1: 1.0,
            c2: 0.0,
            omega0: 0.0,
            branch: Branch::Plus,
        }
    }

    pub fn with_constants(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    pub fn discriminant(&self) -> f64 {
        self.lambda * self.lambda - 4.0 * self.mu
    }

    /// Δ as used by the formulas: exactly zero in the rational family.
    pub fn effective_discriminant(&self) -> f64 {
        match classify(self) {
            SolutionFamily::Rational => 0.0,
            _ => self.discriminant(),
        }
    }

    /// Constant part of the phase rate, `k³Δ/2`.
    pub fn phase_drift(&self) -> f64 {
        self.k.powi(3) * self.effective_discriminant() / 2.0
    }

    pub fn validate(&self) -> Result<(), SolutionError> {
        let fields = [self.k, self.lambda, self.mu, self.c1, self.c2, self.omega0];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(SolutionError::InvalidParams("all parameters must be finite".into()));
        }
        if self.k == 0.0 {
            return Err(SolutionError::InvalidParams("k must be nonzero".into()));
        }
        if self.c1 == 0.0 && self.c2 == 0.0 {
            return Err(SolutionError::InvalidParams("c1 and c2 cannot both vanish".into()));
        }
        Ok(())
    }
}

/// Classification tolerance on Δ: `1e-12·max(λ², 4|μ|, 1)`.
pub fn discriminant_tolerance(params: &WaveParams) -> f64 {
    1e-12 * (params.lambda * params.lambda).max(4.0 * params.mu.abs()).max(1.0)
}

pub fn classify(params: &WaveParams) -> SolutionFamily {
    let delta = params.discriminant();
    let eps = discriminant_tolerance(params);
    if delta > eps {
        SolutionFamily::Hyperbolic
    } else if delta < -eps {
        SolutionFamily::Trigonometric
    } else {
        SolutionFamily::Rational
    }
}

/// Travelling-wave profile `q̂(ξ)` for the family selected by `params`.
///
/// Hyperbolic: `(k√Δ/2)(c1·sh + c2·ch)/(c1·ch + c2·sh)`, evaluated after
/// dividing through by `ch` so large |ξ| does not overflow.
/// Trigonometric: `(k√−Δ/2)(−c1·sin + c2·cos)/(c1·cos + c2·sin)`.
/// Rational: `k·c2/(c1 + ξ·c2)`. The minus branch negates the profile.
pub fn eval_profile(params: &WaveParams, xi: f64) -> Result<f64, SolutionError> {
    let k = params.k;
    let (c1, c2) = (params.c1, params.c2);
    let (num, den, scale) = match classify(params) {
        SolutionFamily::Hyperbolic => {
            let s = params.discriminant().sqrt() / 2.0;
            let th = (s * xi).tanh();
            (c1 * th + c2, c1 + c2 * th, k * s)
        }
        SolutionFamily::Trigonometric => {
            let s = (-params.discriminant()).sqrt() / 2.0;
            let (sin, cos) = (s * xi).sin_cos();
            (-c1 * sin + c2 * cos, c1 * cos + c2 * sin, k * s)
        }
        SolutionFamily::Rational => (c2, c1 + xi * c2, k),
    };
    if den.abs() < POLE_GUARD {
        return Err(SolutionError::PoleProximity {
            xi,
            denominator: den,
        });
    }
    Ok(params.branch.signum() * scale * num / den)
}

/// Distance in ξ from `xi` to the nearest pole of the profile, or `None`
/// when the profile has no real poles.
pub fn pole_distance(params: &WaveParams, xi: f64) -> Option<f64> {
    let (c1, c2) = (params.c1, params.c2);
    match classify(params) {
        SolutionFamily::Hyperbolic => {
            if c2.abs() <= c1.abs() {
                return None;
            }
            let s = params.discriminant().sqrt() / 2.0;
            let pole = (-c1 / c2).atanh() / s;
            Some((xi - pole).abs())
        }
        SolutionFamily::Trigonometric => {
            let s = (-params.discriminant()).sqrt() / 2.0;
            // c1·cos(sξ) + c2·sin(sξ) = R·cos(sξ − φ)
            let phi = c2.atan2(c1);
            let u = s * xi - phi - std::f64::consts::FRAC_PI_2;
            let r = u - std::f64::consts::PI * (u / std::f64::consts::PI).round();
            Some(r.abs() / s)
        }
        SolutionFamily::Rational => {
            if c2 == 0.0 {
                return None;
            }
            Some((xi + c1 / c2).abs())
        }
    }
}

/// A pole of the profile strictly between `a` and `b`, if any.
pub fn pole_between(params: &WaveParams, a: f64, b: f64) -> Option<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let (c1, c2) = (params.c1, params.c2);
    let single = |pole: f64| (lo < pole && pole < hi).then_some(pole);
    match classify(params) {
        SolutionFamily::Hyperbolic => {
            if c2.abs() <= c1.abs() {
                return None;
            }
            let s = params.discriminant().sqrt() / 2.0;
            single((-c1 / c2).atanh() / s)
        }
        SolutionFamily::Trigonometric => {
            use std::f64::consts::{FRAC_PI_2, PI};
            let s = (-params.discriminant()).sqrt() / 2.0;
            let phi = c2.atan2(c1);
            let n = ((s * lo - phi - FRAC_PI_2) / PI).floor() + 1.0;
            single((n * PI + phi + FRAC_PI_2) / s)
        }
        SolutionFamily::Rational => {
            if c2 == 0.0 {
                return None;
            }
            single(-c1 / c2)
        }
    }
}

/// Loading coefficient `γ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSpec {
    /// Tailored so the hyperbolic phase becomes `Σ α_j t^j`.
    TailoredHyperbolic { alpha: Vec<f64> },
    /// Tailored so the trigonometric phase becomes `Σ α_j t^j`.
    TailoredTrigonometric { alpha: Vec<f64> },
    /// Tailored so the rational phase becomes `Σ α_j t^j`.
    TailoredRational { alpha: Vec<f64> },
    /// Arbitrary expression in `t`.
    Custom(ExprNode),
}

impl GammaSpec {
    /// A tailored loading for `family` with polynomial coefficients `alpha`
    /// (`alpha[j]` multiplies `t^j`).
    pub fn tailored(family: SolutionFamily, alpha: Vec<f64>) -> Result<Self, SolutionError> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(SolutionError::InvalidParams("alpha must be finite".into()));
        }
        if !alpha.iter().skip(1).any(|a| *a != 0.0) {
            return Err(SolutionError::InvalidParams(
                "alpha needs a nonzero coefficient alpha_j with j >= 1".into(),
            ));
        }
        Ok(match family {
            SolutionFamily::Hyperbolic => GammaSpec::TailoredHyperbolic { alpha },
            SolutionFamily::Trigonometric => GammaSpec::TailoredTrigonometric { alpha },
            SolutionFamily::Rational => GammaSpec::TailoredRational { alpha },
        })
    }

    pub fn custom(src: &str) -> Result<Self, GammaError> {
        parse_gamma(src).map(GammaSpec::Custom)
    }

    /// `γ ≡ 0`: the plain mKdV equation.
    pub fn none() -> Self {
        GammaSpec::Custom(ExprNode::zero())
    }

    pub fn tailored_alpha(&self) -> Option<(SolutionFamily, &[f64])> {
        match self {
            GammaSpec::TailoredHyperbolic { alpha } => Some((SolutionFamily::Hyperbolic, alpha)),
            GammaSpec::TailoredTrigonometric { alpha } => Some((SolutionFamily::Trigonometric, alpha)),
            GammaSpec::TailoredRational { alpha } => Some((SolutionFamily::Rational, alpha)),
            GammaSpec::Custom(_) => None,
        }
    }
}

/// `Σ α_j t^j`
pub fn alpha_poly(alpha: &[f64], t: f64) -> f64 {
    alpha.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

/// `Σ j·α_j t^(j-1)`
pub fn alpha_poly_derivative(alpha: &[f64], t: f64) -> f64 {
    alpha
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, a)| acc * t + j as f64 * a)
}

fn check_family<'a>(
    params: &WaveParams,
    gamma: &'a GammaSpec,
) -> Result<(SolutionFamily, &'a [f64]), SolutionError> {
    let (variant, alpha) = gamma.tailored_alpha().ok_or(SolutionError::NotTailoredVariant)?;
    let family = classify(params);
    if family != variant {
        return Err(SolutionError::FamilyMismatch { family, variant });
    }
    Ok((family, alpha))
}

fn check_closed_form(params: &WaveParams, gamma: &GammaSpec) -> Result<(), SolutionError> {
    let (family, alpha) = check_family(params, gamma)?;
    if params.branch != Branch::Plus {
        return Err(SolutionError::ClosedFormUnavailable(
            "tailored loadings assume the plus branch",
        ));
    }
    let constants_ok = match family {
        SolutionFamily::Hyperbolic | SolutionFamily::Trigonometric => {
            params.c1 != 0.0 && params.c2 == 0.0
        }
        SolutionFamily::Rational => params.c1 == 0.0 && params.c2 != 0.0,
    };
    if !constants_ok {
        return Err(SolutionError::ClosedFormUnavailable(
            "tailored loadings need c2 = 0 (hyperbolic, trigonometric) or c1 = 0 (rational)",
        ));
    }
    let alpha0 = alpha.first().copied().unwrap_or(0.0);
    if params.omega0 != alpha0 {
        return Err(SolutionError::OmegaMismatch {
            omega0: params.omega0,
            alpha0,
        });
    }
    Ok(())
}

/// Whether `closed_form_phase` applies to this combination.
pub fn closed_form_available(params: &WaveParams, gamma: &GammaSpec) -> bool {
    check_closed_form(params, gamma).is_ok()
}

/// Phase `Ω(t)` for a tailored loading: `Σ α_j t^j`, with `Ω⁰ = α_0`.
pub fn closed_form_phase(
    params: &WaveParams,
    gamma: &GammaSpec,
    t: f64,
) -> Result<f64, SolutionError> {
    check_closed_form(params, gamma)?;
    let (_, alpha) = check_family(params, gamma)?;
    Ok(alpha_poly(alpha, t))
}

/// The tailored `γ(t)` formulas:
///
/// ```text
/// hyperbolic:     (P'/k − k²Δ/2) · 2/(k√Δ) · cth(√Δ/2 · P)
/// trigonometric: −(P'/k + k²(4μ−λ²)/2) · 2/(k√(4μ−λ²)) · ctg(√(4μ−λ²)/2 · P)
/// rational:       P·P'/k²
/// ```
///
/// with `P = Σ α_j t^j`.
pub fn tailored_gamma_value(
    params: &WaveParams,
    gamma: &GammaSpec,
    t: f64,
) -> Result<f64, SolutionError> {
    let (family, alpha) = check_family(params, gamma)?;
    let k = params.k;
    let p = alpha_poly(alpha, t);
    let dp = alpha_poly_derivative(alpha, t);
    match family {
        SolutionFamily::Hyperbolic => {
            let root = params.discriminant().sqrt();
            let th = (root / 2.0 * p).tanh();
            if th.abs() < POLE_GUARD {
                return Err(SolutionError::GammaSingular { t });
            }
            let delta = params.discriminant();
            Ok((dp / k - k * k * delta / 2.0) * (2.0 / (k * root)) / th)
        }
        SolutionFamily::Trigonometric => {
            let neg_delta = 4.0 * params.mu - params.lambda * params.lambda;
            let root = neg_delta.sqrt();
            let tg = (root / 2.0 * p).tan();
            if tg.abs() < POLE_GUARD {
                return Err(SolutionError::GammaSingular { t });
            }
            Ok(-(dp / k + k * k * neg_delta / 2.0) * (2.0 / (k * root)) / tg)
        }
        SolutionFamily::Rational => Ok(p * dp / (k * k)),
    }
}

/// `γ(t)·q(0,t)` along the tailored trajectory, `P'/k − k²Δ/2`, which is
/// what the tailored γ is built to produce. Used only to fill the removable
/// singularity of the product at points where γ or `q(0,t)` blows up.
fn tailored_load(params: &WaveParams, alpha: &[f64], t: f64) -> f64 {
    let k = params.k;
    alpha_poly_derivative(alpha, t) / k - k * k * params.effective_discriminant() / 2.0
}

/// Alternative closed-form load coefficient, kept for comparison against the derived `γ(t)q(0,t)`:
///
/// ```text
/// hyperbolic:    P'/k − k²(λ²−4μ)/2
/// trigonometric: P'/k + k³(4μ−λ²)/2
/// rational:      P'
/// ```
pub fn printed_loading(
    params: &WaveParams,
    gamma: &GammaSpec,
    t: f64,
) -> Result<f64, SolutionError> {
    let (family, alpha) = check_family(params, gamma)?;
    let k = params.k;
    let dp = alpha_poly_derivative(alpha, t);
    Ok(match family {
        SolutionFamily::Hyperbolic => dp / k - k * k * params.discriminant() / 2.0,
        SolutionFamily::Trigonometric => {
            dp / k + k.powi(3) * (4.0 * params.mu - params.lambda * params.lambda) / 2.0
        }
        SolutionFamily::Rational => dp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    ClosedForm,
    NumericOde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub omega: f64,
    pub method: PhaseMethod,
    /// Error estimate: zero for the closed form, step-doubling estimate for
    /// the integrator (infinite when it could not be formed).
    pub tolerance: f64,
}

/// A travelling-wave solution bound to its loading coefficient.
#[derive(Debug, Clone)]
pub struct LoadedWave {
    params: WaveParams,
    gamma: GammaSpec,
    phase_dt: f64,
    closed_form: bool,
}

impl LoadedWave {
    pub fn new(params: WaveParams, gamma: GammaSpec) -> Result<Self, SolutionError> {
        params.validate()?;
        if let Some((_, alpha)) = gamma.tailored_alpha() {
            check_family(&params, &gamma)?;
            let alpha0 = alpha.first().copied().unwrap_or(0.0);
            if params.omega0 != alpha0 {
                return Err(SolutionError::OmegaMismatch {
                    omega0: params.omega0,
                    alpha0,
                });
            }
        }
        let closed_form = closed_form_available(&params, &gamma);
        Ok(LoadedWave {
            params,
            gamma,
            phase_dt: DEFAULT_PHASE_DT,
            closed_form,
        })
    }

    pub fn with_phase_dt(mut self, dt: f64) -> Self {
        self.phase_dt = dt;
        self
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn gamma(&self) -> &GammaSpec {
        &self.gamma
    }

    pub fn family(&self) -> SolutionFamily {
        classify(&self.params)
    }

    pub fn phase_method(&self) -> PhaseMethod {
        if self.closed_form {
            PhaseMethod::ClosedForm
        } else {
            PhaseMethod::NumericOde
        }
    }

    /// `γ(t)`.
    pub fn gamma_value(&self, t: f64) -> Result<f64, SolutionError> {
        match &self.gamma {
            GammaSpec::Custom(expr) => Ok(expr.eval(t)?),
            _ => tailored_gamma_value(&self.params, &self.gamma, t),
        }
    }

    /// `γ(t)·q̂(ω)`: the load seen by the phase when `q(0,t) = q̂(ω)`.
    fn load_at(&self, t: f64, omega: f64) -> Result<f64, SolutionError> {
        if self.unloaded() {
            return Ok(0.0);
        }
        let gamma = self.gamma_value(t);
        let q0 = eval_profile(&self.params, omega);
        match (gamma, q0) {
            (Ok(g), Ok(q)) => Ok(g * q),
            (gamma, q0) => {
                if self.closed_form {
                    let (_, alpha) = self.gamma.tailored_alpha().unwrap();
                    if omega == alpha_poly(alpha, t) {
                        return Ok(tailored_load(&self.params, alpha, t));
                    }
                }
                gamma?;
                q0.map_err(|_| SolutionError::PoleCrossing { t, xi: omega })
            }
        }
    }

    /// `γ ≡ 0`: the trace never enters the phase equation.
    fn unloaded(&self) -> bool {
        matches!(&self.gamma, GammaSpec::Custom(ExprNode::Number(v)) if *v == 0.0)
    }

    fn phase_rate(&self, t: f64, omega: f64) -> Result<f64, SolutionError> {
        Ok(self.params.phase_drift() + self.params.k * self.load_at(t, omega)?)
    }

    fn initial_phase(&self) -> f64 {
        self.params.omega0
    }

    /// Classic RK4 from `(t0, omega)` to `t1` with steps no longer than `dt`.
    fn advance(&self, t0: f64, omega: f64, t1: f64, dt: f64) -> Result<f64, SolutionError> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(omega);
        }
        let n = step_count(span.abs(), dt);
        let h = span / n as f64;
        let mut w = omega;
        for i in 0..n {
            let t = t0 + i as f64 * h;
            let k1 = self.phase_rate(t, w)?;
            let k2 = self.phase_rate(t + h / 2.0, w + h / 2.0 * k1)?;
            let k3 = self.phase_rate(t + h / 2.0, w + h / 2.0 * k2)?;
            let k4 = self.phase_rate(t + h, w + h * k3)?;
            let next = w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let probes = [w + h / 2.0 * k1, w + h / 2.0 * k2, w + h * k3, next];
            let crossing = if self.unloaded() {
                None
            } else {
                probes.iter().find_map(|p| pole_between(&self.params, w, *p))
            };
            if let Some(xi) = crossing {
                return Err(SolutionError::PoleCrossing { t: t + h, xi });
            }
            if !next.is_finite() {
                return Err(SolutionError::PoleCrossing { t: t + h, xi: w });
            }
            w = next;
        }
        Ok(w)
    }

    /// Numerically integrated phase at `t_end` with step `dt`.
    pub fn integrate_phase(&self, t_end: f64, dt: f64) -> Result<PhaseState, SolutionError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolutionError::InvalidStep(format!("dt must be positive, got {dt}")));
        }
        if !t_end.is_finite() {
            return Err(SolutionError::InvalidStep("t_end must be finite".into()));
        }
        let omega = self.advance(0.0, self.initial_phase(), t_end, dt)?;
        let n = if t_end == 0.0 { 0 } else { step_count(t_end.abs(), dt) };
        let tolerance = if n >= 2 {
            let coarse_dt = 2.0 * t_end.abs() / n as f64;
            match self.advance(0.0, self.initial_phase(), t_end, coarse_dt * (1.0 + 1e-12)) {
                Ok(coarse) => (omega - coarse).abs() / 15.0,
                Err(_) => f64::INFINITY,
            }
        } else {
            0.0
        };
        Ok(PhaseState {
            t: t_end,
            omega,
            method: PhaseMethod::NumericOde,
            tolerance,
        })
    }

    /// `Ω(t)`: closed form when available, integrated otherwise.
    pub fn phase(&self, t: f64) -> Result<f64, SolutionError> {
        if self.closed_form {
            closed_form_phase(&self.params, &self.gamma, t)
        } else {
            self.advance(0.0, self.initial_phase(), t, self.phase_dt)
        }
    }

    /// Phases at ascending non-negative times, integrating progressively.
    pub fn phases(&self, times: &[f64]) -> Result<Vec<f64>, SolutionError> {
        let ascending = times.windows(2).all(|w| w[0] <= w[1]);
        if self.closed_form || !ascending || times.first().is_some_and(|t| *t < 0.0) {
            return times.iter().map(|t| self.phase(*t)).collect();
        }
        let mut out = Vec::with_capacity(times.len());
        let (mut t, mut w) = (0.0, self.initial_phase());
        for &target in times {
            w = self.advance(t, w, target, self.phase_dt)?;
            t = target;
            out.push(w);
        }
        Ok(out)
    }

    /// `q̂(kx + phase)`.
    pub fn value_at_phase(&self, x: f64, phase: f64) -> Result<f64, SolutionError> {
        eval_profile(&self.params, self.params.k * x + phase)
    }

    /// `q(x,t)`.
    pub fn value(&self, x: f64, t: f64) -> Result<f64, SolutionError> {
        self.value_at_phase(x, self.phase(t)?)
    }

    /// `γ(t)·q(0,t)` from the analytic trace `q(0,t)`.
    pub fn loading(&self, t: f64) -> Result<f64, SolutionError> {
        self.load_at(t, self.phase(t)?)
    }

    /// Alternative closed-form load coefficient, see [`printed_loading`].
    pub fn printed_loading(&self, t: f64) -> Result<f64, SolutionError> {
        printed_loading(&self.params, &self.gamma, t)
    }

    /// Distance in x from `(x, phase)` to the nearest profile pole.
    pub fn pole_distance_x(&self, x: f64, phase: f64) -> Option<f64> {
        pole_distance(&self.params, self.params.k * x + phase).map(|d| d / self.params.k.abs())
    }
}

fn step_count(span: f64, dt: f64) -> usize {
    let r = span / dt;
    let n = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round()
    } else {
        r.ceil()
    };
    (n as usize).max(1)
}

/// Free-standing form of [`LoadedWave::integrate_phase`].
pub fn integrate_phase(
    params: &WaveParams,
    gamma: &GammaSpec,
    t_end: f64,
    dt: f64,
) -> Result<PhaseState, SolutionError> {
    LoadedWave::new(params.clone(), gamma.clone())?.integrate_phase(t_end, dt)
}

/// `q(x,t)` with the default phase step.
pub fn eval_solution(
    params: &WaveParams,
    gamma: &GammaSpec,
    x: f64,
    t: f64,
) -> Result<f64, SolutionError> {
    LoadedWave::new(params.clone(), gamma.clone())?.value(x, t)
}

/// Parameter sets of the three reference surfaces.
pub mod presets {
    use super::*;

    pub fn figure(id: u8) -> Option<(WaveParams, GammaSpec)> {
        match id {
            1 => Some((
                WaveParams::new(1.0, 2.0, -1.0),
                GammaSpec::TailoredHyperbolic {
                    alpha: vec![0.0, 1.0, 2.0],
                },
            )),
            2 => Some((
                WaveParams::new(1.0, 3.0, 3.0),
                GammaSpec::TailoredTrigonometric {
                    alpha: vec![0.0, 1.0, 2.0],
                },
            )),
            3 => Some((
                WaveParams::new(1.0, 2.0, 1.0).with_constants(0.0, 1.0),
                GammaSpec::TailoredRational {
                    alpha: vec![0.0, 4.0, 1.0, 3.0],
                },
            )),
            _ => None,
        }
    }

    pub fn figure_wave(id: u8) -> Option<LoadedWave> {
        let (p, g) = figure(id)?;
        LoadedWave::new(p, g).ok()
    }
}
