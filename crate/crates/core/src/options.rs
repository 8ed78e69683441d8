use serde::{Deserialize, Serialize};

use crate::par::Execution;

/// Numerical tolerances and execution policy shared by all solvers.
///
/// Offsets and guards marked "× J" are relative to the current density,
/// fit widths "× L" to the domain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Regime classification tolerance, × J.
    pub sonic_eps: f64,
    /// Stop branch integration this close to the sonic line, × J.
    pub sonic_guard: f64,
    /// Offset of the first-order seed off the sonic point, × J.
    pub seed_offset: f64,
    /// Shock fit stops when `|𝔐(x_s) − n_r|` drops below this, × J.
    pub fit_tol: f64,
    /// ... or when the bracket is narrower than this, × L.
    pub fit_width: f64,
    pub nu_tol: f64,
    /// Growth-rate bracket is `(ν_offset, ν_max − ν_offset)`.
    pub nu_offset: f64,
    /// `Ē₊(x₀) < −hypothesis_delta` marks a certified instability run.
    pub hypothesis_delta: f64,
    /// Points in uniform reporting grids (norms, samples).
    pub grid_points: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            sonic_eps: 1e-9,
            sonic_guard: 1e-6,
            seed_offset: 1e-6,
            fit_tol: 1e-9,
            fit_width: 1e-12,
            nu_tol: 1e-10,
            nu_offset: 1e-9,
            hypothesis_delta: 1e-3,
            grid_points: 2048,
            execution: Execution::default(),
        }
    }
}

impl Options {
    /// Scale the integrator tolerances (the `--tol-scale` knob).
    pub fn with_tol_scale(mut self, scale: f64) -> Self {
        self.rtol *= scale;
        self.atol *= scale;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn sequential(self) -> Self {
        self.with_execution(Execution::Sequential)
    }
}
