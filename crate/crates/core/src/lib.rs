//! Steady transonic states of the one-dimensional isothermal Euler–Poisson
//! (hydrodynamic semiconductor) model
//!
//! ```text
//! (n + J²/n)_x = nE − αJ,      E_x = n − b(x)
//! ```
//!
//! with current density `J > 0`, inverse relaxation time `α = 1/τ ≥ 0` and
//! doping profile `b`. The sonic line is `n = J`.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: parameters, doping profiles, regime classification and the
//!   closed-form quantities (first integral `g`, factor `W`, sonic slopes,
//!   the shock jump map).
//! - [`odeint`]: adaptive Dormand–Prince 5(4) integrator with dense output
//!   and event location, used by everything else.
//! - [`smooth`]: C¹ transonic solutions through the sonic line, built in the
//!   density variable where the singularity is removable.
//! - [`shock`]: transonic shock solutions, the downstream boundary map and
//!   shock-position fitting.
//! - [`stability`]: linearized coefficients on the subsonic side of a shock
//!   and growth-rate shooting.
//! - [`portrait`]: `(n, E)` phase portraits with trajectory classification.
//!
//! Batch work (portrait seeds, boundary-map tables, perturbation sweeps) goes
//! through [`par`], which uses rayon when the `parallel` feature is enabled.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod error;
pub mod model;
pub mod numerics;
pub mod odeint;
pub mod options;
pub mod par;
pub mod portrait;
pub mod shock;
pub mod smooth;
pub mod stability;

pub use branch::{BranchPoint, SolutionBranch};
pub use error::{Error, Result};
pub use model::{
    DopingProfile, FlowParams, JumpRecord, Regime, RhResiduals, SonicRoot, State,
};
pub use options::Options;
pub use par::Execution;
