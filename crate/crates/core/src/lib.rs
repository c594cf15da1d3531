//! Travelling-wave solutions of the loaded modified Korteweg–de Vries equation
//!
//! ```text
//! q_t − 6q²q_x + q_xxx − γ(t)·q(0,t)·q_x = 0
//! ```
//!
//! obtained by the (G'/G)-expansion method, together with the machinery to
//! check them independently.
//!
//! * [`symkernel`] exact polynomial algebra in `Y = G'/G`
//! * [`expansion`] ansatz substitution, coefficient system and its solution
//! * [`solutions`] evaluable solution families and the loaded phase
//! * [`gammaparse`] user-defined loading coefficients
//! * [`verifier`] finite-difference residuals, convergence orders and a
//!   method-of-lines cross-check
//! * [`cli`] the `loaded-mkdv` command line

pub mod cli;
pub mod expansion;
pub mod gammaparse;
pub mod solutions;
pub mod symkernel;
pub mod verifier;
