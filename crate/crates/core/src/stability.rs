//! Linearized dynamics about the subsonic part of a shock steady state and
//! growth-rate shooting.
//!
//! With `ū = J/n̄` on the subsonic branch `[x₀, L]` the perturbation `V`
//! satisfies
//!
//! ```text
//! V_tt + 2ū V_tx + (ū² − 1) V_xx + (α + 2ū_x) V_t + ((ū²)_x + Ē) V_x + n̄ V = 0,
//! V_t = ((1 − ū²)/(2ū)) V_x − (Ē/(2ū)) V   at x = x₀,
//! V_x = 0                                  at x = L.
//! ```
//!
//! The separable ansatz `V = e^{νt} U(x)` turns this into a second-order
//! ODE for `U` whose initial slope follows from the `x₀` relation. A growth
//! rate `ν > 0` is located by bisection on `U_x` at a matching station.

use serde::Serialize;

use crate::branch::SolutionBranch;
use crate::error::{Error, Result};
use crate::model::FlowParams;
use crate::numerics::{central_d1, central_d2, linspace, one_sided_d1};
use crate::odeint::{DenseTrajectory, IvpSpec};
use crate::options::Options;

#[derive(Debug, Clone)]
enum Base {
    /// Subsonic branch of a steady state.
    Branch(SolutionBranch),
    /// Constant state on `[x0, x1]` (frozen coefficients).
    Frozen { x0: f64, x1: f64, n: f64, e: f64 },
}

/// Coefficient sample on the reporting grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffSample {
    pub x: f64,
    pub n: f64,
    pub e: f64,
    pub u: f64,
    pub u_x: f64,
    pub u2_x: f64,
    pub mu11: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub zeta: f64,
}

/// Coefficients of the linearized operator on `[x₀, L]`.
#[derive(Debug, Clone)]
pub struct LinearizedCoeffs {
    base: Base,
    current: f64,
    alpha: f64,
    pub x0: f64,
    pub x_end: f64,
    /// `2ū/(1 − ū²)` at `x₀`.
    pub xi1: f64,
    /// `Ē/(1 − ū²)` at `x₀`.
    pub omega1: f64,
    /// `min (1 − ū²)` over the reporting grid.
    pub min_gap: f64,
}

/// `(n̄, Ē, n̄_x)` at `x`.
type BaseState = (f64, f64, f64);

impl LinearizedCoeffs {
    fn base_state(&self, x: f64) -> Result<BaseState> {
        match &self.base {
            Base::Branch(b) => {
                let traj = b.trajectory().expect("linearization needs an integrated branch");
                let [n, e] = traj.eval(x)?;
                let n_x = if traj.step_count() == 0 { 0.0 } else { traj.eval_derivative(x)?[0] };
                Ok((n, e, n_x))
            }
            Base::Frozen { x0, x1, n, e } => {
                if x < *x0 || x > *x1 {
                    return Err(Error::Range { x, lo: *x0, hi: *x1 });
                }
                Ok((*n, *e, 0.0))
            }
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    /// All coefficients at `x`.
    pub fn at(&self, x: f64) -> Result<CoeffSample> {
        let (n, e, n_x) = self.base_state(x)?;
        let u = self.current / n;
        let u_x = -self.current * n_x / (n * n);
        let u2_x = 2.0 * u * u_x;
        Ok(CoeffSample {
            x,
            n,
            e,
            u,
            u_x,
            u2_x,
            mu11: u * u - 1.0,
            beta0: self.alpha + 2.0 * u_x,
            beta1: u2_x + e,
            zeta: n,
        })
    }

    /// `μ₀₀, μ₀₁, μ₁₀, μ₁₁` at `x`.
    pub fn mu(&self, x: f64) -> Result<[f64; 4]> {
        let c = self.at(x)?;
        Ok([1.0, c.u, c.u, c.mu11])
    }

    pub fn samples(&self, count: usize) -> Result<Vec<CoeffSample>> {
        linspace(self.x0, self.x_end, count).into_iter().map(|x| self.at(x)).collect()
    }

    /// `max |ū_x − d(J/n̄)/dx|` with the second term by central differences.
    pub fn chain_rule_defect(&self, count: usize) -> Result<f64> {
        let len = self.x_end - self.x0;
        if len <= 0.0 {
            return Ok(0.0);
        }
        let h = 1e-3 * len;
        let u = |x: f64| self.at(x).map(|c| c.u).unwrap_or(f64::NAN);
        let mut worst = 0.0_f64;
        for x in linspace(self.x0 + 2.0 * h, self.x_end - 2.0 * h, count) {
            worst = worst.max((self.at(x)?.u_x - central_d1(u, x, h)).abs());
        }
        Ok(worst)
    }

    /// `ν_max = −Ē/ū` at `x₀`, the upper end of the growth-rate bracket.
    pub fn nu_max(&self) -> Result<f64> {
        let c = self.at(self.x0)?;
        Ok(-c.e / c.u)
    }

    /// `U_x(x₀)` for growth rate `ν` and `U(x₀) = γ`.
    pub fn initial_slope(&self, nu: f64, gamma: f64) -> Result<f64> {
        let c = self.at(self.x0)?;
        Ok(self.xi1 * (c.e / (2.0 * c.u) + nu) * gamma)
    }
}

fn finish(base: Base, params: &FlowParams, x0: f64, x_end: f64) -> Result<LinearizedCoeffs> {
    let mut coeffs = LinearizedCoeffs {
        base,
        current: params.current(),
        alpha: params.alpha(),
        x0,
        x_end,
        xi1: 0.0,
        omega1: 0.0,
        min_gap: 0.0,
    };
    let c = coeffs.at(x0)?;
    let gap0 = 1.0 - c.u * c.u;
    coeffs.xi1 = 2.0 * c.u / gap0;
    coeffs.omega1 = c.e / gap0;
    let mut min_gap = f64::INFINITY;
    let mut worst_x = x0;
    for s in coeffs.samples(1025)? {
        let gap = 1.0 - s.u * s.u;
        if gap < min_gap {
            min_gap = gap;
            worst_x = s.x;
        }
    }
    if !(min_gap > 0.0) {
        return Err(Error::CoefficientDegeneracy { x: worst_x, gap: min_gap });
    }
    coeffs.min_gap = min_gap;
    Ok(coeffs)
}

/// Coefficients on a subsonic branch `[x₀, L]`.
pub fn linearized_coeffs(sub: &SolutionBranch, params: &FlowParams) -> Result<LinearizedCoeffs> {
    if sub.trajectory().is_none() {
        return Err(Error::Domain("linearization needs an integrated subsonic branch".into()));
    }
    finish(Base::Branch(sub.clone()), params, sub.x_start(), sub.x_end())
}

/// Coefficients of the constant state `(n, E)` on `[x0, x1]`.
pub fn frozen_coeffs(params: &FlowParams, n: f64, e: f64, x0: f64, x1: f64) -> Result<LinearizedCoeffs> {
    if !(n > params.current()) {
        return Err(Error::Domain(format!("frozen state must be subsonic, got n = {n}")));
    }
    finish(Base::Frozen { x0, x1, n, e }, params, x0, x1)
}

/// Integrated `[U, U_x]` for one growth rate.
#[derive(Debug, Clone)]
pub struct Shot {
    pub nu: f64,
    pub gamma: f64,
    pub traj: DenseTrajectory<2>,
}

impl Shot {
    pub fn ux_end(&self) -> f64 {
        self.traj.final_state()[1]
    }

    pub fn ux_at(&self, x: f64) -> Result<f64> {
        Ok(self.traj.eval(x)?[1])
    }

    /// `max |U|` over `[x₀, x]` on the integrator mesh and at `x`.
    pub fn max_abs_u(&self, x: f64) -> Result<f64> {
        let mut m = self.traj.eval(x)?[0].abs();
        for xi in self.traj.mesh() {
            if xi <= x {
                m = m.max(self.traj.eval(xi)?[0].abs());
            }
        }
        Ok(m)
    }
}

fn shoot_to(coeffs: &LinearizedCoeffs, nu: f64, gamma: f64, x_stop: f64, opts: &Options) -> Result<Shot> {
    let alpha = coeffs.alpha;
    let u0 = [gamma, coeffs.initial_slope(nu, gamma)?];
    let rhs = |x: f64, y: &[f64; 2]| {
        let c = match coeffs.at(x) {
            Ok(c) => c,
            Err(_) => return [f64::NAN; 2],
        };
        let gap = 1.0 - c.u * c.u;
        let uxx = ((c.u2_x + 2.0 * nu * c.u + c.e) * y[1]
            + (nu * nu + 2.0 * nu * c.u_x + alpha * nu + c.n) * y[0])
            / gap;
        [y[1], uxx]
    };
    let rtol = (opts.rtol * 1e-2).max(1e-13);
    let traj = IvpSpec::new(rhs, coeffs.x0, x_stop, u0)
        .tolerances(rtol, rtol * gamma.abs().max(1e-300))
        .solve()?;
    Ok(Shot { nu, gamma, traj })
}

/// Shoot `U` over `[x₀, L]` with `U(x₀) = γ`.
pub fn shoot_mode(coeffs: &LinearizedCoeffs, nu: f64, gamma: f64, opts: &Options) -> Result<Shot> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("normalization gamma must be positive, got {gamma}")));
    }
    shoot_to(coeffs, nu, gamma, coeffs.x_end, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSample {
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityMode {
    pub nu: f64,
    pub gamma: f64,
    /// Station `x_m` where `U_x(x_m) = 0` was imposed.
    pub station: f64,
    /// Whether the station is the physical boundary `L`.
    pub at_boundary: bool,
    /// `|U_x(x_m)|`.
    pub residual_at_station: f64,
    pub max_abs_u: f64,
    /// `|U_x(L)|` for the returned `ν`.
    pub residual_at_l: f64,
    pub bracket: (f64, f64),
    pub nu_max: f64,
    pub iterations: usize,
    pub samples: Vec<ModeSample>,
}

/// Signs of `U_x(x₀)` at the two ends of the growth-rate interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignStructure {
    pub slope_at_zero: f64,
    pub slope_at_nu_max: f64,
}

impl SignStructure {
    pub fn holds(&self) -> bool {
        self.slope_at_zero < 0.0 && self.slope_at_nu_max > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ModeSearch {
    Found(InstabilityMode),
    /// No matching station bracketed a root in `ν`.
    NoModeFound { bracket: (f64, f64), nu_max: f64, stations_scanned: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub e_at_shock: f64,
    pub u_at_shock: f64,
    /// `Ē(x₀) < −δ`: inside the certified hypothesis.
    pub certified: bool,
    pub signs: SignStructure,
    pub min_gap: f64,
    pub search: ModeSearch,
}

/// Number of inward matching stations tried after `L`.
const STATIONS: usize = 512;

/// Locate a growth rate `ν ∈ (0, −Ē/ū)` at `x₀`.
pub fn find_growth_rate(coeffs: &LinearizedCoeffs, gamma: f64, opts: &Options) -> Result<GrowthReport> {
    let c0 = coeffs.at(coeffs.x0)?;
    if !(c0.e < 0.0) {
        return Err(Error::PreconditionFailed(format!(
            "field at the shock is E = {} >= 0; a growing mode needs E < 0 there",
            c0.e
        )));
    }
    let nu_max = coeffs.nu_max()?;
    let signs = SignStructure {
        slope_at_zero: coeffs.initial_slope(0.0, gamma)?,
        slope_at_nu_max: coeffs.initial_slope(nu_max, gamma)?,
    };
    let lo = opts.nu_offset;
    let hi = nu_max - opts.nu_offset;
    let report = |search| GrowthReport {
        e_at_shock: c0.e,
        u_at_shock: c0.u,
        certified: c0.e < -opts.hypothesis_delta,
        signs,
        min_gap: coeffs.min_gap,
        search,
    };
    let shot_lo = shoot_mode(coeffs, lo, gamma, opts)?;
    let shot_hi = shoot_mode(coeffs, hi, gamma, opts)?;

    let differ = |x: f64| -> Result<bool> {
        let a = shot_lo.ux_at(x)?;
        let b = shot_hi.ux_at(x)?;
        Ok(a.signum() != b.signum() || a == 0.0 || b == 0.0)
    };
    let mut station = None;
    let stations = linspace(coeffs.x0, coeffs.x_end, STATIONS + 1);
    let mut scanned = 0;
    for &x in stations.iter().rev().take(STATIONS) {
        scanned += 1;
        if differ(x)? {
            station = Some(x);
            break;
        }
    }
    let Some(x_m) = station else {
        return Ok(report(ModeSearch::NoModeFound { bracket: (lo, hi), nu_max, stations_scanned: scanned }));
    };

    let residual = |nu: f64| -> Result<(f64, Shot)> {
        let s = shoot_to(coeffs, nu, gamma, x_m, opts)?;
        Ok((s.ux_end(), s))
    };
    let (mut a, mut b) = (lo, hi);
    let (r_a, mut best) = residual(a)?;
    let sign_a = r_a.signum();
    let mut iterations = 0;
    let mut nu = a;
    loop {
        let max_u = best.max_abs_u(x_m)?;
        let converged = best.ux_end().abs() < 1e-8 * max_u && b - a < opts.nu_tol;
        if converged || iterations >= 200 || b - a <= 4.0 * f64::EPSILON * b {
            break;
        }
        nu = 0.5 * (a + b);
        let (r, shot) = residual(nu)?;
        iterations += 1;
        best = shot;
        if r == 0.0 {
            break;
        }
        if r.signum() == sign_a {
            a = nu;
        } else {
            b = nu;
        }
    }
    let full = shoot_mode(coeffs, nu, gamma, opts)?;
    let samples = linspace(coeffs.x0, x_m, 257)
        .into_iter()
        .map(|x| {
            let [u, u_x] = best.traj.eval(x)?;
            Ok(ModeSample { x, u, u_x })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(ModeSearch::Found(InstabilityMode {
        nu,
        gamma,
        station: x_m,
        at_boundary: x_m == coeffs.x_end,
        residual_at_station: best.ux_end().abs(),
        max_abs_u: best.max_abs_u(x_m)?,
        residual_at_l: full.ux_end().abs(),
        bracket: (lo, hi),
        nu_max,
        iterations,
        samples,
    })))
}

/// Defects of `V = e^{νt}U` in the linearized problem on `[x₀, x_m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeVerification {
    /// Interior operator, sup over the grid, at `t = 0` and `t = 1`.
    pub interior_t0: f64,
    pub interior_t1: f64,
    /// `x₀` relation at `t = 0`.
    pub boundary_x0: f64,
    /// `|V_x(x_m)|` at `t = 0`.
    pub terminal: f64,
    pub growth_factor: f64,
    /// `max|U|·max(1, ν², max n̄)`.
    pub scale: f64,
    /// `interior_t0/scale`.
    pub relative_interior: f64,
}

/// Evaluate the linearized operator on the mode with derivatives taken by
/// finite differences of the dense `U` and of `ū`, not from the shooting
/// right-hand side.
pub fn verify_mode(coeffs: &LinearizedCoeffs, mode: &InstabilityMode, opts: &Options) -> Result<ModeVerification> {
    let shot = shoot_to(coeffs, mode.nu, mode.gamma, mode.station, opts)?;
    let nu = mode.nu;
    let alpha = coeffs.alpha;
    let (x0, xm) = (coeffs.x0, mode.station);
    let h = 1e-3 * (xm - x0);
    let u = |x: f64| shot.traj.eval(x).map(|s| s[0]).unwrap_or(f64::NAN);
    let ubar = |x: f64| coeffs.at(x).map(|c| c.u).unwrap_or(f64::NAN);
    let mut interior = 0.0_f64;
    let mut max_n = 0.0_f64;
    for x in linspace(x0 + 2.0 * h, xm - 2.0 * h, 401) {
        let c = coeffs.at(x)?;
        max_n = max_n.max(c.n);
        let ux = central_d1(u, x, h);
        let uxx = central_d2(u, x, h);
        let ub_x = central_d1(ubar, x, h);
        let val = u(x);
        let r = nu * nu * val
            + 2.0 * c.u * nu * ux
            + (c.u * c.u - 1.0) * uxx
            + (alpha + 2.0 * ub_x) * nu * val
            + (2.0 * c.u * ub_x + c.e) * ux
            + c.n * val;
        interior = interior.max(r.abs());
    }
    let c0 = coeffs.at(x0)?;
    let ux0 = one_sided_d1(u, x0, h);
    let boundary_x0 =
        (nu * u(x0) - ((1.0 - c0.u * c0.u) / (2.0 * c0.u)) * ux0 + (c0.e / (2.0 * c0.u)) * u(x0)).abs();
    let terminal = shot.ux_end().abs();
    let scale = mode.max_abs_u * 1f64.max(nu * nu).max(max_n);
    let growth_factor = nu.exp();
    Ok(ModeVerification {
        interior_t0: interior,
        interior_t1: interior * growth_factor,
        boundary_x0,
        terminal,
        growth_factor,
        scale,
        relative_interior: interior / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DopingProfile;
    use crate::shock::ShockProblem;

    fn unstable_state(alpha: f64, e_l: f64, length: f64, x_s: f64) -> (FlowParams, LinearizedCoeffs) {
        let p = FlowParams::new(1.0, alpha, length).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        let prob = ShockProblem::new(&p, &b, 0.5, e_l, &Options::default()).unwrap();
        let s = prob.solution_at(x_s).unwrap();
        let c = linearized_coeffs(&s.subsonic, &p).unwrap();
        (p, c)
    }

    #[test]
    fn coefficient_identities() {
        let (_, c) = unstable_state(0.0, -0.2, 0.5, 0.15);
        let mu = c.mu(0.3).unwrap();
        assert_eq!(mu[1], mu[2]);
        let s0 = c.at(c.x0).unwrap();
        assert!((c.xi1 * s0.e / (2.0 * s0.u) - c.omega1).abs() < 1e-15);
        assert!(c.min_gap > 0.0);
        assert!(c.chain_rule_defect(200).unwrap() < 1e-6);
        let samples = c.samples(50).unwrap();
        assert!(samples.iter().all(|s| s.u > 0.0 && s.u < 1.0));
    }

    #[test]
    fn frozen_coefficients_reduce() {
        let p = FlowParams::new(1.0, 0.7, 1.0).unwrap();
        let c = frozen_coeffs(&p, 2.0, -0.3, 0.0, 1.0).unwrap();
        let s = c.at(0.5).unwrap();
        assert_eq!(s.beta0, 0.7);
        assert_eq!(s.beta1, -0.3);
        assert_eq!(s.zeta, 2.0);
    }

    #[test]
    fn frozen_shot_matches_characteristic_roots() {
        let alpha = 0.7;
        let p = FlowParams::new(1.0, alpha, 1.0).unwrap();
        let (n, e, nu, gamma) = (2.0, -0.3, 0.2, 1.0);
        let c = frozen_coeffs(&p, n, e, 0.0, 1.0).unwrap();
        let shot = shoot_mode(&c, nu, gamma, &Options::default()).unwrap();
        // (1 − u²) r² − (2νu + E) r − (ν² + αν + n) = 0
        let u = 1.0 / n;
        let a = 1.0 - u * u;
        let b = -(2.0 * nu * u + e);
        let cc = -(nu * nu + alpha * nu + n);
        let disc = (b * b - 4.0 * a * cc).sqrt();
        let (r1, r2) = ((-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a));
        let up0 = c.initial_slope(nu, gamma).unwrap();
        let c2 = (up0 - r1 * gamma) / (r2 - r1);
        let c1 = gamma - c2;
        for x in [0.25, 0.5, 1.0] {
            let exact = c1 * (r1 * x).exp() + c2 * (r2 * x).exp();
            let got = shot.traj.eval(x).unwrap()[0];
            assert!((got - exact).abs() < 1e-9 * exact.abs().max(1.0), "{x}: {got} vs {exact}");
        }
    }

    #[test]
    fn sign_structure_and_mode() {
        let (_, c) = unstable_state(0.0, -0.2, 0.5, 0.15);
        let opts = Options::default();
        let r = find_growth_rate(&c, 1.0, &opts).unwrap();
        assert!(r.signs.holds());
        assert!(r.certified);
        let ModeSearch::Found(m) = r.search else { panic!("no mode") };
        assert!(m.nu > 0.0 && m.nu < m.nu_max);
        assert!(m.residual_at_station < 1e-8 * m.max_abs_u);
        let v = verify_mode(&c, &m, &opts).unwrap();
        assert!(v.relative_interior < 1e-6, "{v:?}");
        assert!(v.boundary_x0 < 1e-6);
        assert!(v.growth_factor > 1.0);
        // linearity in the normalization
        let r2 = find_growth_rate(&c, 2.0, &opts).unwrap();
        let ModeSearch::Found(m2) = r2.search else { panic!("no mode") };
        assert!((m2.nu - m.nu).abs() < 1e-9);
        for (a, b) in m.samples.iter().zip(&m2.samples) {
            assert!((2.0 * a.u - b.u).abs() <= 1e-8 * b.u.abs().max(1.0));
        }
    }

    #[test]
    fn damped_variant_finds_mode() {
        let (_, c) = unstable_state(0.3, -0.2, 0.4, 0.1);
        let r = find_growth_rate(&c, 1.0, &Options::default()).unwrap();
        assert!(r.signs.holds());
        assert!(matches!(r.search, ModeSearch::Found(_)));
    }

    #[test]
    fn positive_field_is_rejected() {
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        let prob = ShockProblem::new(&p, &b, 0.5, 0.5, &Options::default()).unwrap();
        let s = prob.solution_at(0.3).unwrap();
        let c = linearized_coeffs(&s.subsonic, &p).unwrap();
        assert!(matches!(
            find_growth_rate(&c, 1.0, &Options::default()),
            Err(Error::PreconditionFailed(_))
        ));
    }
}
