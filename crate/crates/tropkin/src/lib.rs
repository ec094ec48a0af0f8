//! Tropical analysis of ε-graded polynomial and rational ODE systems.
//!
//! Multiscale kinetic models often come as sums of monomial rates whose
//! coefficients span many orders of magnitude. Writing each coefficient as
//! `c·ε^γ` with a small parameter ε exposes that structure and makes three
//! things computable:
//!
//! * **dominance** — which monomial wins at a given state ([`trop`]),
//! * **equilibration** — which renormalizations `x_i = ε^{a_i} x̄_i` balance
//!   at least two opposite-sign terms per equation ([`equil`]),
//! * **reduction** — truncated, differential-algebraic and piecewise-smooth
//!   hybrid approximations of the dynamics ([`sim`]).
//!
//! The built-in cell-cycle case study ([`tyson`]) exercises the whole
//! pipeline: a five-variable oscillator is equilibrated, reduced to two
//! variables and decomposed into a three-mode hybrid orbit.
//!
//! See the `book/` guide at the repository root for a narrative walkthrough;
//! every snippet there runs as a doc-test of this crate.

pub mod equil;
pub mod ir;
pub mod sim;
pub mod trop;
pub mod tyson;
pub mod verify;

#[cfg(doctest)]
mod guide;

pub use ir::{ConservationLaw, Equation, ExponentVector, IrError, MonomialTerm, ODESystem};
