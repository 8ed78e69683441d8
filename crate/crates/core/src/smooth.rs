//! C¹ transonic solutions through the sonic line for constant doping.
//!
//! In `x` the density equation is singular at `n = J`. Written for
//! `Ẽ = E − αJ/n` as a function of `n`,
//!
//! ```text
//! dẼ/dn = (n + J)(n − b)/(n³ W̃) + αJ/n²,    W̃ = Ẽ/(n − J),
//! dx/dn = (n + J)/(n³ W̃),
//! ```
//!
//! and both right-hand sides are regular at the sonic point because
//! `W̃(J) = k ≠ 0`. Trajectories are seeded at `n = J ± ε₀` with
//! `Ẽ = k·(n − J)` and integrated outward; `x(n)` is then inverted.
//! For `α = 0` the closed form `Ẽ = (n − J)·W(n, b)` is available and used
//! by default.

use serde::Serialize;

use crate::branch::{BranchPoint, SolutionBranch};
use crate::error::{Error, Result};
use crate::model::{
    classify_regime, n_star_closed_form, sonic_slope_k, w_of, DopingProfile, FlowParams,
    SonicRoot, State,
};
use crate::numerics::{central_d1, grid_d1, grid_d2, linspace, one_sided_d1, sup_norm};
use crate::odeint::{Crossing, DenseTrajectory, Event, IvpSpec, Termination};
use crate::options::Options;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Supersonic upstream, subsonic downstream (slope `k₊`).
    SupToSub,
    /// Subsonic upstream, supersonic downstream (slope `k₋`).
    SubToSup,
}

impl Direction {
    fn root(self) -> SonicRoot {
        match self {
            Direction::SupToSub => SonicRoot::Plus,
            Direction::SubToSup => SonicRoot::Minus,
        }
    }
}

/// How the trajectory `Ẽ(n)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed form when `α = 0`, integration otherwise.
    #[default]
    Auto,
    ClosedForm,
    Integrated,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `x(n)` integrated from the sonic point, `Ẽ` from `W(n, b)`.
    ClosedForm {
        sign: f64,
        below: Option<DenseTrajectory<1>>,
        above: Option<DenseTrajectory<1>>,
    },
    /// `[Ẽ, x]` integrated outward from the seeds at `J ± ε₀`.
    Integrated {
        eps0: f64,
        below: Option<DenseTrajectory<2>>,
        above: Option<DenseTrajectory<2>>,
    },
}

/// The sonic trajectory `Ẽ(n)` on `[n_lo, n_hi] ∋ J` together with the
/// relative position `x(n) − x(J)`.
#[derive(Debug, Clone)]
pub struct TildeTrajectory {
    params: FlowParams,
    b0: f64,
    direction: Direction,
    k: f64,
    n_lo: f64,
    n_hi: f64,
    repr: Repr,
}

/// Sample of a [`TildeTrajectory`] on a density grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TildeSample {
    pub n: f64,
    pub e_tilde: f64,
    pub w_tilde: f64,
    pub x_rel: f64,
}

enum Upper {
    Density(f64),
    /// Integrate upward until `x(n) − x(n_lo)` reaches the given length.
    Length(f64),
}

const DENSITY_CAP: f64 = 1e4;

impl TildeTrajectory {
    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Sonic slope used for the seed and the removable singularity.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_range(&self) -> (f64, f64) {
        (self.n_lo, self.n_hi)
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::ClosedForm { .. })
    }

    fn check(&self, n: f64) -> Result<()> {
        if n >= self.n_lo && n <= self.n_hi {
            Ok(())
        } else {
            Err(Error::Range { x: n, lo: self.n_lo, hi: self.n_hi })
        }
    }

    /// `(Ẽ, W̃, x − x(J))` at density `n`.
    fn lookup(&self, n: f64) -> Result<(f64, f64, f64)> {
        self.check(n)?;
        let j = self.params.current();
        match &self.repr {
            Repr::ClosedForm { sign, below, above } => {
                let w = sign * w_of(n, self.b0, &self.params)?;
                let side = if n < j { below } else { above };
                let x = match side {
                    Some(t) => t.eval(n).map_err(Error::from)?[0],
                    None => 0.0,
                };
                Ok(((n - j) * w, w, x))
            }
            Repr::Integrated { eps0, below, above } => {
                if (n - j).abs() <= *eps0 {
                    return Ok((self.k * (n - j), self.k, gap_x(n, j, self.k)));
                }
                let t = if n < j { below } else { above };
                let t = t.as_ref().expect("side trajectory exists when range extends past the gap");
                let [e, x] = t.eval(n).map_err(Error::from)?;
                Ok((e, e / (n - j), x))
            }
        }
    }

    /// `Ẽ(n) = E − αJ/n`.
    pub fn e_tilde(&self, n: f64) -> Result<f64> {
        Ok(self.lookup(n)?.0)
    }

    /// `W̃(n) = Ẽ/(n − J)`, equal to `k` at the sonic point.
    pub fn w_tilde(&self, n: f64) -> Result<f64> {
        Ok(self.lookup(n)?.1)
    }

    /// Field `E(n) = Ẽ(n) + αJ/n`.
    pub fn e_field(&self, n: f64) -> Result<f64> {
        Ok(self.lookup(n)?.0 + self.params.alpha() * self.params.current() / n)
    }

    /// `x(n) − x(J)`.
    pub fn x_rel(&self, n: f64) -> Result<f64> {
        Ok(self.lookup(n)?.2)
    }

    /// `dx/dn = (n + J)/(n³ W̃)`.
    pub fn dx_dn(&self, n: f64) -> Result<f64> {
        let w = self.w_tilde(n)?;
        if w == 0.0 {
            return Err(Error::SingularQuadrature { n });
        }
        Ok((n + self.params.current()) / (n.powi(3) * w))
    }

    pub fn samples(&self, count: usize) -> Result<Vec<TildeSample>> {
        linspace(self.n_lo, self.n_hi, count)
            .into_iter()
            .map(|n| {
                let (e, w, x) = self.lookup(n)?;
                Ok(TildeSample { n, e_tilde: e, w_tilde: w, x_rel: x })
            })
            .collect()
    }
}

/// `∫_J^n (m + J)/(m³ k) dm` on the seed gap where `W̃ ≡ k`.
fn gap_x(n: f64, j: f64, k: f64) -> f64 {
    (1.5 / j - 1.0 / n - j / (2.0 * n * n)) / k
}

fn check_doping(params: &FlowParams, b0: f64) -> Result<()> {
    let j = params.current();
    if !(b0 > 0.0 && b0 < j) {
        return Err(Error::Domain(format!(
            "smooth transonic solutions need constant supersonic doping 0 < b0 < J, got b0 = {b0}"
        )));
    }
    Ok(())
}

/// Desingularized phase-plane field in a pseudo-time `s`:
/// `dn/ds = n³Ẽ`, `dẼ/ds = (n + J)(n − b)(n − J) + αJnẼ`.
fn phase_field(params: &FlowParams, b0: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + Copy {
    let j = params.current();
    let alpha = params.alpha();
    move |_, y: &[f64; 2]| {
        let (n, e) = (y[0], y[1]);
        [n.powi(3) * e, (n + j) * (n - b0) * (n - j) + alpha * j * n * e]
    }
}

/// The density `n_*` where the trajectory leaves its monotone branch
/// (`Ẽ → 0` away from the sonic point) on the given side of `J`, if it does
/// so before reaching `n_target`.
pub fn branch_floor(
    params: &FlowParams,
    b0: f64,
    direction: Direction,
    n_target: f64,
    opts: &Options,
) -> Result<Option<f64>> {
    check_doping(params, b0)?;
    let j = params.current();
    let k = sonic_slope_k(params, b0, direction.root())?;
    let eps0 = opts.seed_offset * j;
    let side = (n_target - j).signum();
    if side == 0.0 || (n_target - j).abs() <= eps0 {
        return Ok(None);
    }
    let seed = [j + side * eps0, k * side * eps0];
    // pseudo-time runs so that n moves away from J
    let s_dir = k.signum();
    let field = phase_field(params, b0);
    let traj = IvpSpec::new(field, 0.0, s_dir * 1e6, seed)
        .tolerances(opts.rtol, opts.atol * 1e-3)
        .event(Event::new(|_, y: &[f64; 2]| y[1]))
        .event(Event::new(move |_, y: &[f64; 2]| y[0] - n_target))
        .event(Event::new(move |_, y: &[f64; 2]| y[0] - DENSITY_CAP * j))
        .solve()?;
    Ok(match traj.termination {
        Termination::Event { index: 0 } => Some(traj.final_state()[0]),
        _ => None,
    })
}

/// Build `Ẽ(n)` on `[n_lo, n_hi]` for the given crossing direction.
pub fn build_tilde_trajectory(
    params: &FlowParams,
    b0: f64,
    direction: Direction,
    n_lo: f64,
    n_hi: f64,
    opts: &Options,
) -> Result<TildeTrajectory> {
    build_with_method(params, b0, direction, n_lo, n_hi, Method::Auto, opts)
}

pub fn build_with_method(
    params: &FlowParams,
    b0: f64,
    direction: Direction,
    n_lo: f64,
    n_hi: f64,
    method: Method,
    opts: &Options,
) -> Result<TildeTrajectory> {
    build(params, b0, direction, n_lo, Upper::Density(n_hi), method, opts)
}

fn build(
    params: &FlowParams,
    b0: f64,
    direction: Direction,
    n_lo: f64,
    upper: Upper,
    method: Method,
    opts: &Options,
) -> Result<TildeTrajectory> {
    check_doping(params, b0)?;
    let j = params.current();
    if !(n_lo > 0.0 && n_lo < j) {
        return Err(Error::Domain(format!("need 0 < n_lo < J, got n_lo = {n_lo}")));
    }
    if let Upper::Density(n_hi) = upper {
        if !(n_hi > j) {
            return Err(Error::Domain(format!("need n_hi > J, got n_hi = {n_hi}")));
        }
    }
    let k = sonic_slope_k(params, b0, direction.root())?;
    let closed = match method {
        Method::Auto => params.alpha() == 0.0,
        Method::ClosedForm => {
            if params.alpha() != 0.0 {
                return Err(Error::Domain("closed-form trajectory requires alpha = 0".into()));
            }
            true
        }
        Method::Integrated => false,
    };

    // branch floors on either side
    let n_star_lo = if closed {
        match direction {
            Direction::SupToSub => Some(n_star_closed_form(params, b0)?),
            Direction::SubToSup => None,
        }
    } else {
        branch_floor(params, b0, direction, n_lo, opts)?
    };
    if let Some(n_star) = n_star_lo {
        if n_lo <= n_star {
            return Err(Error::BranchExhausted { n_star });
        }
    }
    if let Upper::Density(n_hi) = upper {
        if !closed {
            if let Some(n_star) = branch_floor(params, b0, direction, n_hi, opts)? {
                return Err(Error::BranchExhausted { n_star });
            }
        }
    }

    let alpha = params.alpha();
    let rtol = opts.rtol;
    let atol = opts.atol * 1e-6;
    if closed {
        let sign = k.signum();
        let w_fn = move |n: f64| sign * w_of(n, b0, params).unwrap_or(f64::NAN);
        let rhs = move |n: f64, _: &[f64; 1]| [(n + j) / (n.powi(3) * w_fn(n))];
        let below = IvpSpec::new(rhs, j, n_lo, [0.0]).tolerances(rtol, atol).solve()?;
        let x_lo = below.final_state()[0];
        let above = match upper {
            Upper::Density(n_hi) => IvpSpec::new(rhs, j, n_hi, [0.0]).tolerances(rtol, atol).solve()?,
            Upper::Length(length) => {
                let target = x_lo + length * (1.0 + 1e-12) * sign;
                if target * sign <= 0.0 {
                    return Err(Error::DomainTooShort { n_r: j, x_needed: x_lo.abs(), length });
                }
                let t = IvpSpec::new(rhs, j, DENSITY_CAP * j, [0.0])
                    .tolerances(rtol, atol)
                    .event(Event::new(move |_, y: &[f64; 1]| (y[0] - target) * sign))
                    .solve()?;
                if t.termination == Termination::ReachedStop {
                    return Err(Error::BranchBlowUp {
                        x_max: (t.final_state()[0] - x_lo).abs(),
                        length,
                    });
                }
                t
            }
        };
        let n_hi = above.end();
        return Ok(TildeTrajectory {
            params: *params,
            b0,
            direction,
            k,
            n_lo,
            n_hi,
            repr: Repr::ClosedForm { sign, below: Some(below), above: Some(above) },
        });
    }

    let eps0 = opts.seed_offset * j;
    let rhs = move |n: f64, y: &[f64; 2]| {
        let ratio = (n - j) / y[0];
        [
            (n + j) * (n - b0) * ratio / n.powi(3) + alpha * j / (n * n),
            (n + j) * ratio / n.powi(3),
        ]
    };
    let below = if n_lo < j - eps0 {
        let n_seed = j - eps0;
        let seed = [k * (n_seed - j), gap_x(n_seed, j, k)];
        Some(IvpSpec::new(rhs, n_seed, n_lo, seed).tolerances(rtol, atol).solve()?)
    } else {
        None
    };
    let x_lo = match &below {
        Some(t) => t.final_state()[1],
        None => gap_x(n_lo, j, k),
    };
    let n_seed = j + eps0;
    let seed = [k * (n_seed - j), gap_x(n_seed, j, k)];
    let above = match upper {
        Upper::Density(n_hi) if n_hi <= n_seed => None,
        Upper::Density(n_hi) => {
            Some(IvpSpec::new(rhs, n_seed, n_hi, seed).tolerances(rtol, atol).solve()?)
        }
        Upper::Length(length) => {
            let sign = k.signum();
            let target = x_lo + length * (1.0 + 1e-12) * sign;
            if target * sign <= seed[1] * sign {
                return Err(Error::DomainTooShort { n_r: j, x_needed: x_lo.abs(), length });
            }
            let t = IvpSpec::new(rhs, n_seed, DENSITY_CAP * j, seed)
                .tolerances(rtol, atol)
                .event(Event::new(move |_, y: &[f64; 2]| (y[1] - target) * sign))
                .event(Event::new(|_, y: &[f64; 2]| y[0]).crossing(Crossing::Either))
                .solve()?;
            match t.termination {
                Termination::ReachedStop => {
                    return Err(Error::BranchBlowUp {
                        x_max: (t.final_state()[1] - x_lo).abs(),
                        length,
                    })
                }
                Termination::Event { index: 1 } => {
                    return Err(Error::BranchExhausted { n_star: t.end() })
                }
                _ => Some(t),
            }
        }
    };
    let n_hi = match (&above, upper) {
        (Some(t), _) => t.end(),
        (None, Upper::Density(n_hi)) => n_hi,
        (None, Upper::Length(_)) => unreachable!("length-limited builds always integrate"),
    };
    Ok(TildeTrajectory {
        params: *params,
        b0,
        direction,
        k,
        n_lo,
        n_hi,
        repr: Repr::Integrated { eps0, below, above },
    })
}

/// Monotone map `n ↦ x` anchored at `x(n_anchor) = x_anchor`.
#[derive(Debug, Clone)]
pub struct DensityToPosition<'a> {
    traj: &'a TildeTrajectory,
    offset: f64,
}

/// `x(n) = x_anchor + ∫_{n_anchor}^n dx/dn`.
pub fn x_of_n(traj: &TildeTrajectory, n_anchor: f64, x_anchor: f64) -> Result<DensityToPosition<'_>> {
    let offset = x_anchor - traj.x_rel(n_anchor)?;
    Ok(DensityToPosition { traj, offset })
}

impl DensityToPosition<'_> {
    pub fn x(&self, n: f64) -> Result<f64> {
        Ok(self.traj.x_rel(n)? + self.offset)
    }

    pub fn dx_dn(&self, n: f64) -> Result<f64> {
        self.traj.dx_dn(n)
    }

    /// Position of the sonic point.
    pub fn sonic_x(&self) -> f64 {
        self.offset
    }

    /// Inverse map by safeguarded Newton iteration on the monotone `x(n)`.
    pub fn n(&self, x: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.traj.n_range();
        let sign = self.traj.k.signum();
        let f = |n: f64| -> Result<f64> { Ok((self.x(n)? - x) * sign) };
        let (f_lo, f_hi) = (f(lo)?, f(hi)?);
        if f_lo > 0.0 || f_hi < 0.0 {
            let (a, b) = (self.x(lo)?, self.x(hi)?);
            return Err(Error::Range { x, lo: a.min(b), hi: a.max(b) });
        }
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 {
            return Ok(hi);
        }
        let mut n = lo + (hi - lo) * (-f_lo / (f_hi - f_lo));
        for _ in 0..200 {
            let fn_ = f(n)?;
            if fn_ == 0.0 {
                return Ok(n);
            }
            if fn_ < 0.0 {
                lo = n;
            } else {
                hi = n;
            }
            let slope = self.dx_dn(n)? * sign;
            let mut next = n - fn_ / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - n).abs() <= 1e-15 * n.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            n = next;
        }
        Ok(n)
    }
}

/// Seed data for a smooth solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothSeed {
    /// Supersonic `n(0) = n0`; `e0`, when given, must lie on the trajectory.
    InitialData { n0: f64, e0: Option<f64> },
    /// `n(0) = n_l < J < n_r`; the achieved `n(L)` is reported against `n_r`.
    BoundaryPair { n_l: f64, n_r: f64 },
}

/// Junction data at the sonic point, measured on the assembled solution by
/// one-sided differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SonicCrossing {
    pub x0: f64,
    pub direction: Direction,
    pub n_at: f64,
    pub e_at: f64,
    pub e_slope_left: f64,
    pub e_slope_right: f64,
    pub e_curv_left: f64,
    pub e_curv_right: f64,
    pub n_slope_left: f64,
    pub n_slope_right: f64,
    /// `J²k/2`, the slope implied by `dx/dn = 2/(J²k)` at the sonic point.
    pub n_slope_exact: f64,
    pub k_used: f64,
    /// Central difference of `Ẽ(n)` at `n = J`.
    pub k_numeric: f64,
}

impl SonicCrossing {
    /// The five matching conditions for a C¹ junction, as absolute
    /// defects: `n(x₀) − J`, `n′`, `E`, `E′`, `E″` (left minus right).
    pub fn junction_defects(&self, j: f64) -> [f64; 5] {
        [
            (self.n_at - j).abs(),
            (self.n_slope_left - self.n_slope_right).abs(),
            0.0,
            (self.e_slope_left - self.e_slope_right).abs(),
            (self.e_curv_left - self.e_curv_right).abs(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SmoothSolution {
    pub branch: SolutionBranch,
    pub crossing: SonicCrossing,
    pub seed: SmoothSeed,
    pub trajectory: TildeTrajectory,
    /// `x(n0)` offset: `x(n) = x_rel(n) + offset`.
    offset: f64,
    pub e0: f64,
    /// `E0 < min(α, αJ/n0)`, reported only.
    pub admissible_inequality: bool,
    /// Achieved `n(L)`.
    pub n_at_end: f64,
    pub length: f64,
}

impl SmoothSolution {
    fn map(&self) -> DensityToPosition<'_> {
        DensityToPosition { traj: &self.trajectory, offset: self.offset }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.map().n(x)
    }

    pub fn eval(&self, x: f64) -> Result<State> {
        let n = self.density(x)?;
        Ok(State { x, n, e: self.trajectory.e_field(n)? })
    }

    /// `n_x = 1/(dx/dn)`, regular through the sonic point.
    pub fn n_x(&self, x: f64) -> Result<f64> {
        let n = self.density(x)?;
        Ok(1.0 / self.trajectory.dx_dn(n)?)
    }

    pub fn x_of_density(&self, n: f64) -> Result<f64> {
        self.map().x(n)
    }

    /// `max |E_x − (n − b₀)|` with `E_x` from central differences of the
    /// assembled field.
    pub fn poisson_residual(&self, count: usize) -> Result<f64> {
        let (a, b) = (0.0, self.length);
        let h = 1e-3 * self.length;
        let field = |x: f64| self.eval(x).map(|s| s.e).unwrap_or(f64::NAN);
        let mut worst = 0.0_f64;
        for x in linspace(a + 2.0 * h, b - 2.0 * h, count) {
            let ex = central_d1(field, x, h);
            let s = self.eval(x)?;
            worst = worst.max((ex - (s.n - self.trajectory.b0)).abs());
        }
        Ok(worst)
    }
}

/// Assemble the C¹ solution on `[0, L]` (`L = params.length()`), crossing
/// from supersonic to subsonic.
pub fn assemble_smooth_solution(
    params: &FlowParams,
    doping: &DopingProfile,
    seed: SmoothSeed,
    opts: &Options,
) -> Result<SmoothSolution> {
    assemble_with_method(params, doping, seed, Method::Auto, opts)
}

pub fn assemble_with_method(
    params: &FlowParams,
    doping: &DopingProfile,
    seed: SmoothSeed,
    method: Method,
    opts: &Options,
) -> Result<SmoothSolution> {
    let b0 = doping.as_constant().ok_or_else(|| {
        Error::Domain("smooth transonic construction needs constant doping".into())
    })?;
    check_doping(params, b0)?;
    let j = params.current();
    let alpha = params.alpha();
    let length = params.length();

    let (n0, e0_given, target_nr) = match seed {
        SmoothSeed::InitialData { n0, e0 } => (n0, e0, None),
        SmoothSeed::BoundaryPair { n_l, n_r } => {
            if !(n_r > j) {
                return Err(Error::Domain(format!("need n_r > J, got {n_r}")));
            }
            (n_l, None, Some(n_r))
        }
    };
    if !(n0 > 0.0 && n0 < j) {
        return Err(Error::Domain(format!("need supersonic data 0 < n0 < J, got {n0}")));
    }

    let traj = build(params, b0, Direction::SupToSub, n0, Upper::Length(length), method, opts)?;
    let offset = -traj.x_rel(n0)?;
    let x0 = offset;
    if !(x0 < length) {
        return Err(Error::DomainTooShort { n_r: j, x_needed: x0, length });
    }

    let e0 = traj.e_field(n0)?;
    if let Some(given) = e0_given {
        if (given - e0).abs() > 1e-8 * (1.0 + e0.abs()) {
            return Err(Error::InadmissibleData { e0: given, on_trajectory: e0 });
        }
    }
    let admissible_inequality = e0 < alpha.min(alpha * j / n0);

    if let Some(n_r) = target_nr {
        if n_r > traj.n_hi {
            // how far the trajectory has to run to reach n_r
            let longer = build(params, b0, Direction::SupToSub, n0, Upper::Density(n_r), method, opts)?;
            let x_needed = longer.x_rel(n_r)? - longer.x_rel(n0)?;
            return Err(Error::DomainTooShort { n_r, x_needed, length });
        }
    }

    let map = DensityToPosition { traj: &traj, offset };
    let count = opts.grid_points.max(8);
    let mut points = Vec::with_capacity(count);
    for x in linspace(0.0, length, count) {
        let n = if x == 0.0 { n0 } else { map.n(x)? };
        points.push(BranchPoint {
            x,
            n,
            e: traj.e_field(n)?,
            n_x: 1.0 / traj.dx_dn(n)?,
            regime: classify_regime(n, params, opts.sonic_eps * j)?,
        });
    }
    let n_at_end = points[count - 1].n;

    let crossing = measure_crossing(&traj, offset, length, opts)?;
    let branch = SolutionBranch::sampled(*params, doping.clone(), opts.sonic_eps, points);
    Ok(SmoothSolution {
        branch,
        crossing,
        seed,
        trajectory: traj,
        offset,
        e0,
        admissible_inequality,
        n_at_end,
        length,
    })
}

fn measure_crossing(traj: &TildeTrajectory, offset: f64, length: f64, _opts: &Options) -> Result<SonicCrossing> {
    let j = traj.params.current();
    let map = DensityToPosition { traj, offset };
    let x0 = map.sonic_x();
    let n_of = |x: f64| map.n(x).unwrap_or(f64::NAN);
    let e_of = |x: f64| map.n(x).and_then(|n| traj.e_field(n)).unwrap_or(f64::NAN);
    let h = (2e-3 * length).min(x0 / 8.0).min((length - x0) / 8.0);
    let b0 = traj.b0;
    // E'' = (n − b)' so its one-sided stencil acts on n − b
    let e_x_of = |x: f64| n_of(x) - b0;
    let k_h = 1e-3 * j;
    let k_numeric = central_d1(|n| traj.e_tilde(n).unwrap_or(f64::NAN), j, k_h);
    Ok(SonicCrossing {
        x0,
        direction: traj.direction,
        n_at: n_of(x0),
        e_at: e_of(x0),
        e_slope_left: one_sided_d1(e_of, x0, -h),
        e_slope_right: one_sided_d1(e_of, x0, h),
        e_curv_left: one_sided_d1(e_x_of, x0, -h),
        e_curv_right: one_sided_d1(e_x_of, x0, h),
        n_slope_left: one_sided_d1(n_of, x0, -h),
        n_slope_right: one_sided_d1(n_of, x0, h),
        n_slope_exact: j * j * traj.k / 2.0,
        k_used: traj.k,
        k_numeric,
    })
}

/// One side of a smooth stability comparison: constant doping and
/// supersonic initial density (field taken on the trajectory).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothCase {
    pub b0: f64,
    pub n0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothProbeReport {
    pub case1: SmoothCase,
    pub case2: SmoothCase,
    pub e10: f64,
    pub e20: f64,
    /// `|b₁ − b₂| + |n₁₀ − n₂₀| + |E₁₀ − E₂₀|`.
    pub delta0: f64,
    pub n_c1: f64,
    pub e_c2: f64,
    /// `(‖Δn‖_{C¹} + ‖ΔE‖_{C²})/δ₀`, zero when `δ₀ = 0`.
    pub ratio: f64,
    pub grid_points: usize,
    pub x0_1: f64,
    pub x0_2: f64,
}

/// Compare two smooth solutions on `[0, L]` in discrete C¹/C² sup-norms.
pub fn stability_probe_smooth(
    params: &FlowParams,
    case1: SmoothCase,
    case2: SmoothCase,
    opts: &Options,
) -> Result<SmoothProbeReport> {
    let solve = |c: SmoothCase| {
        assemble_smooth_solution(
            params,
            &DopingProfile::constant(c.b0)?,
            SmoothSeed::InitialData { n0: c.n0, e0: None },
            opts,
        )
    };
    let s1 = solve(case1)?;
    let s2 = solve(case2)?;
    let p1 = s1.branch.samples(None)?;
    let p2 = s2.branch.samples(None)?;
    let h = p1[1].x - p1[0].x;
    let dn: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a.n - b.n).collect();
    let de: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a.e - b.e).collect();
    let n_c1 = sup_norm(&dn) + sup_norm(&grid_d1(&dn, h));
    let e_c2 = sup_norm(&de) + sup_norm(&grid_d1(&de, h)) + sup_norm(&grid_d2(&de, h));
    let delta0 = (case1.b0 - case2.b0).abs() + (case1.n0 - case2.n0).abs() + (s1.e0 - s2.e0).abs();
    let ratio = if delta0 > 0.0 { (n_c1 + e_c2) / delta0 } else { 0.0 };
    Ok(SmoothProbeReport {
        case1,
        case2,
        e10: s1.e0,
        e20: s2.e0,
        delta0,
        n_c1,
        e_c2,
        ratio,
        grid_points: p1.len(),
        x0_1: s1.crossing.x0,
        x0_2: s2.crossing.x0,
    })
}

/// Probe a family `case2 = case1 + s·(Δb, Δn₀)` with `s` tuned so that
/// `δ₀` hits each requested value. Runs through [`par::map`].
pub fn smooth_scaling_scan(
    params: &FlowParams,
    base: SmoothCase,
    direction: (f64, f64),
    delta_targets: &[f64],
    opts: &Options,
) -> Result<Vec<SmoothProbeReport>> {
    let run = |&target: &f64| -> Result<SmoothProbeReport> {
        let case = |s: f64| SmoothCase { b0: base.b0 + s * direction.0, n0: base.n0 + s * direction.1 };
        if target == 0.0 {
            return stability_probe_smooth(params, base, base, opts);
        }
        let norm = direction.0.abs() + direction.1.abs();
        let mut s = target / norm;
        let mut report = stability_probe_smooth(params, base, case(s), opts)?;
        for _ in 0..4 {
            if (report.delta0 - target).abs() <= 1e-6 * target {
                break;
            }
            s *= target / report.delta0;
            report = stability_probe_smooth(params, base, case(s), opts)?;
        }
        Ok(report)
    };
    par::map(opts.execution, delta_targets, run).into_iter().collect()
}
