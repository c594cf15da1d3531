//! Travelling-wave reduction of the loaded mKdV equation and its
//! (G'/G)-expansion.
//!
//! With `ξ = kx + Ω(t)` and one integration in ξ the equation becomes
//!
//! ```text
//! C + W·q − 2k·q³ + k³·q'' − k·Γ·q = 0,     W = Ω'(t),  Γ = γ(t)·q(0,t)
//! ```
//!
//! Substituting the balanced ansatz `q = a1·Y + a0` turns the left-hand side
//! into a cubic in `Y`; its four coefficients form a triangular system in
//! `a1 → a0 → W → C`.

use std::fmt;

use thiserror::Error;

use crate::symkernel::{balance_degree, MPoly, Rational, Sym, YPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpansionError {
    #[error("UnsupportedBalance: only m = 1 is supported (got m = {0})")]
    UnsupportedBalance(u32),
    #[error("coefficient system is not triangular at Y^{power}: {reason}")]
    NotTriangular { power: u32, reason: &'static str },
}

/// Sign choice for the `a1 = ±k` roots of the leading equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn signum(self) -> f64 {
        self.sign() as f64
    }

    pub fn from_sign(sign: i64) -> Option<Branch> {
        match sign {
            1 => Some(Branch::Plus),
            -1 => Some(Branch::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Plus => f.write_str("+1"),
            Branch::Minus => f.write_str("-1"),
        }
    }
}

/// The integrated travelling-wave ODE with the ansatz substituted, plus the
/// intermediate expansions used to build it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedOde {
    pub ansatz: YPoly,
    pub cube: YPoly,
    pub second_derivative: YPoly,
    pub poly: YPoly,
}

impl ReducedOde {
    pub fn coeff(&self, power: u32) -> MPoly {
        self.poly.coeff(power)
    }
}

/// Build `C + W·q − 2k·q³ + k³·q'' − k·Γ·q` for the degree-`m` ansatz.
pub fn build_reduced_ode(m: u32) -> Result<ReducedOde, ExpansionError> {
    if m != 1 {
        return Err(ExpansionError::UnsupportedBalance(m));
    }
    debug_assert_eq!(balance_degree(3, 2), Ok(1));

    let k = MPoly::var(Sym::K);
    let ansatz = &YPoly::monomial(MPoly::var(Sym::A1), 1) + &YPoly::constant(MPoly::var(Sym::A0));
    let cube = ansatz.pow(3);
    let second_derivative = ansatz
        .dxi(Sym::Lambda, Sym::Mu)
        .dxi(Sym::Lambda, Sym::Mu);

    let integration_const = YPoly::constant(MPoly::var(Sym::C));
    let rate_term = ansatz.scale(&MPoly::var(Sym::W));
    let cubic_term = cube.scale(&k.scale(&Rational::from_integer((-2).into())));
    let dispersive_term = second_derivative.scale(&k.pow(3));
    let load_term = ansatz.scale(&-(&k * &MPoly::var(Sym::Gamma)));

    let poly = &(&(&integration_const + &rate_term) + &(&cubic_term + &dispersive_term)) + &load_term;
    debug_assert_eq!(poly.degree(), Some(3));

    Ok(ReducedOde {
        ansatz,
        cube,
        second_derivative,
        poly,
    })
}

/// Coefficient equations keyed by the power of `Y`, each set equal to zero.
///
/// The `Y¹` equation is stored with the overall factor `a1` removed; the
/// other three are the raw coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientSystem {
    equations: [MPoly; 4],
}

impl CoefficientSystem {
    pub fn new(y0: MPoly, y1: MPoly, y2: MPoly, y3: MPoly) -> Self {
        CoefficientSystem {
            equations: [y0, y1, y2, y3],
        }
    }

    pub fn zero() -> Self {
        Self::new(MPoly::zero(), MPoly::zero(), MPoly::zero(), MPoly::zero())
    }

    /// Equation for `Y^power`, `power ∈ 0..=3`.
    pub fn equation(&self, power: u32) -> &MPoly {
        &self.equations[power as usize]
    }

    /// Equations from the highest power down.
    pub fn descending(&self) -> impl Iterator<Item = (u32, &MPoly)> {
        (0..4u32).rev().map(move |p| (p, &self.equations[p as usize]))
    }
}

/// Collect the coefficient of each power of `Y`.
pub fn extract_system(ode: &ReducedOde) -> CoefficientSystem {
    let y1 = ode.coeff(1);
    let a1 = MPoly::var(Sym::A1);
    let y1 = y1.div_by_term(&a1).unwrap_or(y1);
    CoefficientSystem::new(ode.coeff(0), y1, ode.coeff(2), ode.coeff(3))
}

/// Solved constants for one sign branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSolution {
    pub branch: Branch,
    pub a0: MPoly,
    pub a1: MPoly,
    pub c: MPoly,
    /// Full phase rate `W = Ω'(t)`.
    pub omega_rate: MPoly,
    /// Γ-free part of `W`: the constant drift of the phase.
    pub phase_drift: MPoly,
    /// Coefficient multiplying `Γ = γ(t)q(0,t)` inside `W`.
    pub phase_load_factor: MPoly,
}

fn linear_root(eq: &MPoly, sym: Sym, power: u32) -> Result<MPoly, ExpansionError> {
    let coeffs = eq.coeffs_in(sym);
    if coeffs.len() != 2 || coeffs[1].is_zero() {
        return Err(ExpansionError::NotTriangular {
            power,
            reason: "expected an equation linear in the unknown",
        });
    }
    (-&coeffs[0])
        .div_by_term(&coeffs[1])
        .ok_or(ExpansionError::NotTriangular {
            power,
            reason: "leading coefficient is not a single term",
        })
}

/// Triangular solve: cubic in `a1`, then linear in `a0`, `W` and `C`.
///
/// The root `a1 = 0` of the leading equation is discarded; `branch` picks
/// between the two remaining roots `a1 = ±√(...)`.
pub fn solve_system(
    sys: &CoefficientSystem,
    branch: Branch,
) -> Result<ParameterSolution, ExpansionError> {
    let lead = sys.equation(3).coeffs_in(Sym::A1);
    let odd_cubic = lead.len() == 4
        && lead[0].is_zero()
        && lead[2].is_zero()
        && !lead[1].is_zero()
        && !lead[3].is_zero();
    if !odd_cubic {
        return Err(ExpansionError::NotTriangular {
            power: 3,
            reason: "expected c3·a1³ + c1·a1",
        });
    }
    let square = (-&lead[1])
        .div_by_term(&lead[3])
        .ok_or(ExpansionError::NotTriangular {
            power: 3,
            reason: "leading coefficient is not a single term",
        })?;
    let root = square.sqrt_term().ok_or(ExpansionError::NotTriangular {
        power: 3,
        reason: "a1² is not a perfect square",
    })?;
    let a1 = root.scale(&Rational::from_integer(branch.sign().into()));

    let eq2 = sys.equation(2).substitute(Sym::A1, &a1);
    let a0 = linear_root(&eq2, Sym::A0, 2)?;

    let eq1 = sys
        .equation(1)
        .substitute(Sym::A1, &a1)
        .substitute(Sym::A0, &a0);
    let omega_rate = linear_root(&eq1, Sym::W, 1)?;

    let eq0 = sys
        .equation(0)
        .substitute(Sym::A1, &a1)
        .substitute(Sym::A0, &a0)
        .substitute(Sym::W, &omega_rate);
    let c = linear_root(&eq0, Sym::C, 0)?;

    let mut by_load = omega_rate.coeffs_in(Sym::Gamma).into_iter();
    let phase_drift = by_load.next().unwrap_or_default();
    let phase_load_factor = by_load.next().unwrap_or_default();
    if by_load.next().is_some() {
        return Err(ExpansionError::NotTriangular {
            power: 1,
            reason: "phase rate is not affine in Gamma",
        });
    }

    Ok(ParameterSolution {
        branch,
        a0,
        a1,
        c,
        omega_rate,
        phase_drift,
        phase_load_factor,
    })
}

/// Substitute the solution back and check every equation vanishes exactly.
pub fn verify_solution_substitution(sys: &CoefficientSystem, sol: &ParameterSolution) -> bool {
    sys.descending().all(|(_, eq)| {
        eq.substitute(Sym::A1, &sol.a1)
            .substitute(Sym::A0, &sol.a0)
            .substitute(Sym::W, &sol.omega_rate)
            .substitute(Sym::C, &sol.c)
            .is_zero()
    })
}
