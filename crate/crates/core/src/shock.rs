//! Transonic shock solutions.
//!
//! A supersonic branch is integrated from `(n_l, E_l)` at `x = 0`. At a
//! shock position `x_s` the density jumps to `𝒮(n⁻) = J²/n⁻` with `E`
//! continuous, and a subsonic branch is integrated to `L`. The downstream
//! density `𝔐(x_s) = n(L)` is fitted to the boundary value `n_r` by
//! bisection.

use serde::Serialize;

use crate::branch::{BranchPoint, SolutionBranch};
use crate::error::{Error, Result};
use crate::model::{shock_map_s, DopingProfile, FlowParams, JumpRecord, Regime, RhResiduals, State};
use crate::numerics::{linspace, sup_norm};
use crate::odeint::{Crossing, DenseTrajectory, Event, IvpSpec, Termination};
use crate::options::Options;
use crate::par;

/// Densities below `VACUUM·J` count as vacuum.
const VACUUM: f64 = 1e-8;
/// Densities above `BLOW_UP·J` stop the integration.
const BLOW_UP: f64 = 1e8;

fn check_supersonic_doping(params: &FlowParams, doping: &DopingProfile) -> Result<()> {
    let (lo, _) = doping.bounds(params.length());
    if !(lo > 0.0) {
        return Err(Error::InvalidParams(format!("doping must be positive, inf b = {lo}")));
    }
    Ok(())
}

/// Integrate the steady system from `start` towards `x_end` on one side
/// of the sonic line. Returns the trajectory and, if the sonic guard band
/// was reached first, the event location.
fn integrate_side(
    params: &FlowParams,
    doping: &DopingProfile,
    start: State,
    x_end: f64,
    side: Regime,
    opts: &Options,
) -> Result<(DenseTrajectory<2>, Option<(f64, f64)>)> {
    let j = params.current();
    let guard = match side {
        Regime::Supersonic => j * (1.0 - opts.sonic_guard),
        _ => j * (1.0 + opts.sonic_guard),
    };
    let inside = match side {
        Regime::Supersonic => start.n > 0.0 && start.n < guard,
        _ => start.n > guard,
    };
    if !inside {
        return Err(Error::Domain(format!(
            "start density {} is not inside the {} guard band",
            start.n,
            side.label()
        )));
    }
    if x_end == start.x {
        return Ok((DenseTrajectory::point(start.x, [start.n, start.e]), None));
    }
    let p = *params;
    let rhs = move |x: f64, y: &[f64; 2]| p.steady_rhs(y[0], y[1], doping.eval(x));
    let sonic = match side {
        Regime::Supersonic => Event::new(move |_, y: &[f64; 2]| y[0] - guard).crossing(Crossing::Rising),
        _ => Event::new(move |_, y: &[f64; 2]| y[0] - guard).crossing(Crossing::Falling),
    };
    let traj = IvpSpec::new(rhs, start.x, x_end, [start.n, start.e])
        .tolerances(opts.rtol, opts.atol)
        .event(sonic)
        .event(Event::new(move |_, y: &[f64; 2]| y[0] - VACUUM * j).crossing(Crossing::Falling))
        .event(Event::new(move |_, y: &[f64; 2]| y[0] - BLOW_UP * j).crossing(Crossing::Rising))
        .solve()?;
    let x = traj.end();
    let n = traj.final_state()[0];
    match traj.termination {
        Termination::ReachedStop => Ok((traj, None)),
        Termination::Event { index: 0 } => Ok((traj, Some((x, n)))),
        Termination::Event { index: 1 } => Err(Error::Vacuum { x }),
        Termination::Event { .. } => Err(Error::BranchBlowUp { x_max: x - start.x, length: x_end - start.x }),
    }
}

/// Supersonic branch on `[0, x_end]` from `n(0) = n_l`, `E(0) = E_l`.
pub fn supersonic_branch(
    params: &FlowParams,
    doping: &DopingProfile,
    n_l: f64,
    e_l: f64,
    x_end: f64,
    opts: &Options,
) -> Result<SolutionBranch> {
    if !(x_end >= 0.0 && x_end <= params.length()) {
        return Err(Error::Range { x: x_end, lo: 0.0, hi: params.length() });
    }
    let start = State { x: 0.0, n: n_l, e: e_l };
    let (traj, hit) = integrate_side(params, doping, start, x_end, Regime::Supersonic, opts)?;
    if let Some((x, n)) = hit {
        return Err(Error::SonicCollision { x, n });
    }
    Ok(SolutionBranch::integrated(*params, doping.clone(), opts.sonic_eps, traj))
}

/// Subsonic branch on `[x_s, x_end]` from `n(x_s) = n_plus`, `E(x_s) = e_at`.
pub fn subsonic_branch(
    params: &FlowParams,
    doping: &DopingProfile,
    x_s: f64,
    n_plus: f64,
    e_at: f64,
    x_end: f64,
    opts: &Options,
) -> Result<SolutionBranch> {
    let start = State { x: x_s, n: n_plus, e: e_at };
    let (traj, hit) = integrate_side(params, doping, start, x_end, Regime::Subsonic, opts)?;
    if let Some((x, n)) = hit {
        return Err(Error::Degeneracy { x, n });
    }
    Ok(SolutionBranch::integrated(*params, doping.clone(), opts.sonic_eps, traj))
}

/// Shock steady state: supersonic on `[0, x_s]`, subsonic on `[x_s, L]`.
#[derive(Debug, Clone)]
pub struct ShockSolution {
    pub supersonic: SolutionBranch,
    pub subsonic: SolutionBranch,
    pub jump: JumpRecord,
    pub n_l: f64,
    pub e_l: f64,
    /// Achieved `n(L)`.
    pub n_end: f64,
}

impl ShockSolution {
    pub fn x_s(&self) -> f64 {
        self.jump.x_s
    }

    pub fn rh_residuals(&self) -> RhResiduals {
        let left = self.supersonic.last();
        let right = self.subsonic.first();
        crate::model::rh_residuals(&left, &right, self.supersonic.params())
    }

    /// State at `x`; at the shock the supersonic side is returned.
    pub fn eval(&self, x: f64) -> Result<State> {
        if x <= self.jump.x_s {
            self.supersonic.eval(x)
        } else {
            self.subsonic.eval(x)
        }
    }

    /// Samples of both branches; the shock appears twice, once per side.
    pub fn samples(&self, count: usize) -> Result<Vec<BranchPoint>> {
        let len = self.subsonic.x_end() - self.supersonic.x_start();
        let per = |a: f64, b: f64| (((b - a) / len * count as f64).ceil() as usize).max(2);
        let mut out = self
            .supersonic
            .samples(Some(per(self.supersonic.x_start(), self.jump.x_s)))?;
        out.extend(self.subsonic.samples(Some(per(self.jump.x_s, self.subsonic.x_end())))?);
        Ok(out)
    }

    /// Largest Poisson defect over both branches.
    pub fn poisson_residual(&self, count: usize) -> Result<f64> {
        Ok(self.supersonic.poisson_residual(count)?.max(self.subsonic.poisson_residual(count)?))
    }

    /// `(max n on the supersonic branch, min n on the subsonic branch)`.
    pub fn regime_extrema(&self, count: usize) -> Result<(f64, f64)> {
        let (_, sup_max) = self.supersonic.density_range(count)?;
        let (sub_min, _) = self.subsonic.density_range(count)?;
        Ok((sup_max, sub_min))
    }
}

/// Value of the boundary map at one shock position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSample {
    pub x_s: f64,
    pub n_minus: f64,
    pub e_at_shock: f64,
    /// `𝔐(x_s)`, absent when the subsonic branch failed.
    pub n_end: Option<f64>,
    pub error: Option<String>,
}

/// One bisection step of a shock fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketStep {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    pub m_mid: f64,
}

#[derive(Debug, Clone)]
pub struct ShockFitReport {
    pub solution: ShockSolution,
    pub x_s: f64,
    pub n_r: f64,
    /// `|𝔐(x_s) − n_r|`.
    pub residual: f64,
    pub history: Vec<BracketStep>,
    pub table: Vec<MapSample>,
    /// Table values strictly decreasing with no failed entries.
    pub monotone_ok: bool,
    pub e_at_shock: f64,
    /// `E > 0` at every sampled shock.
    pub e_positive: bool,
    pub warnings: Vec<String>,
}

/// Supersonic data `(n_l, E_l)` with the upstream branch integrated once
/// and shared by every shock placement.
#[derive(Debug, Clone)]
pub struct ShockProblem {
    params: FlowParams,
    doping: DopingProfile,
    n_l: f64,
    e_l: f64,
    opts: Options,
    upstream: DenseTrajectory<2>,
    collision: Option<(f64, f64)>,
    jump_offset: f64,
}

/// Number of 𝔐 samples attached to each fit.
pub const TABLE_SIZE: usize = 10;

impl ShockProblem {
    pub fn new(params: &FlowParams, doping: &DopingProfile, n_l: f64, e_l: f64, opts: &Options) -> Result<Self> {
        check_supersonic_doping(params, doping)?;
        let j = params.current();
        if !(n_l > 0.0 && n_l < j) {
            return Err(Error::Domain(format!("need supersonic 0 < n_l < J, got n_l = {n_l}")));
        }
        let start = State { x: 0.0, n: n_l, e: e_l };
        let (upstream, collision) =
            integrate_side(params, doping, start, params.length(), Regime::Supersonic, opts)?;
        Ok(Self {
            params: *params,
            doping: doping.clone(),
            n_l,
            e_l,
            opts: *opts,
            upstream,
            collision,
            jump_offset: 0.0,
        })
    }

    /// Add `offset` to every post-shock density. Only useful for exercising
    /// the jump checks on deliberately corrupted solutions.
    pub fn with_jump_offset(mut self, offset: f64) -> Self {
        self.jump_offset = offset;
        self
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn doping(&self) -> &DopingProfile {
        &self.doping
    }

    pub fn options(&self) -> &Options {
        &self.opts
    }

    /// Furthest admissible shock position.
    pub fn reach(&self) -> f64 {
        self.upstream.end()
    }

    /// Where the supersonic branch enters the sonic guard band, if before `L`.
    pub fn collision(&self) -> Option<(f64, f64)> {
        self.collision
    }

    fn upstream_state(&self, x_s: f64) -> Result<State> {
        if !(x_s >= 0.0 && x_s <= self.reach()) {
            return Err(match self.collision {
                Some((x, n)) if x_s > x => Error::SonicCollision { x, n },
                _ => Error::Range { x: x_s, lo: 0.0, hi: self.reach() },
            });
        }
        let [n, e] = self.upstream.eval(x_s)?;
        Ok(State { x: x_s, n, e })
    }

    fn jump_at(&self, x_s: f64) -> Result<JumpRecord> {
        let s = self.upstream_state(x_s)?;
        let n_plus = shock_map_s(s.n, &self.params)? + self.jump_offset;
        Ok(JumpRecord::new(x_s, s.n, n_plus, s.e, &self.params))
    }

    fn downstream(&self, jump: &JumpRecord) -> Result<SolutionBranch> {
        subsonic_branch(
            &self.params,
            &self.doping,
            jump.x_s,
            jump.n_plus,
            jump.e_value,
            self.params.length(),
            &self.opts,
        )
    }

    /// Assemble the shock solution with the shock at `x_s`.
    pub fn solution_at(&self, x_s: f64) -> Result<ShockSolution> {
        let jump = self.jump_at(x_s)?;
        let subsonic = self.downstream(&jump)?;
        let supersonic = SolutionBranch::integrated(
            self.params,
            self.doping.clone(),
            self.opts.sonic_eps,
            self.upstream.truncated(x_s)?,
        );
        let n_end = subsonic.last().n;
        Ok(ShockSolution { supersonic, subsonic, jump, n_l: self.n_l, e_l: self.e_l, n_end })
    }

    /// `𝔐(x_s) = n(L)`.
    pub fn boundary_map(&self, x_s: f64) -> Result<f64> {
        let jump = self.jump_at(x_s)?;
        Ok(self.downstream(&jump)?.last().n)
    }

    pub fn map_sample(&self, x_s: f64) -> MapSample {
        let jump = match self.jump_at(x_s) {
            Ok(j) => j,
            Err(e) => {
                return MapSample {
                    x_s,
                    n_minus: f64::NAN,
                    e_at_shock: f64::NAN,
                    n_end: None,
                    error: Some(e.to_string()),
                }
            }
        };
        let (n_end, error) = match self.downstream(&jump) {
            Ok(b) => (Some(b.last().n), None),
            Err(e) => (None, Some(e.to_string())),
        };
        MapSample { x_s, n_minus: jump.n_minus, e_at_shock: jump.e_value, n_end, error }
    }

    /// `𝔐` on `count` equally spaced positions in `[lo, hi]`.
    pub fn map_table(&self, lo: f64, hi: f64, count: usize) -> Vec<MapSample> {
        par::map(self.opts.execution, &linspace(lo, hi, count), |&x| self.map_sample(x))
    }

    /// Signed fit defect `𝔐(x_s) − n_r`. A subsonic branch that falls back
    /// to the sonic line before `L` counts as undershooting `n_r`, one that
    /// blows up as overshooting it.
    fn defect(&self, x_s: f64, n_r: f64, notes: &mut Vec<String>) -> Result<f64> {
        match self.boundary_map(x_s) {
            Ok(m) => Ok(m - n_r),
            Err(Error::Degeneracy { x, .. }) => {
                notes.push(format!(
                    "subsonic branch from x_s = {x_s} reached the sonic line at x = {x}; treated as M < n_r"
                ));
                Ok(self.params.current() - n_r)
            }
            Err(Error::BranchBlowUp { x_max, .. }) => {
                notes.push(format!(
                    "subsonic branch from x_s = {x_s} blew up at x = {}; treated as M > n_r",
                    x_s + x_max
                ));
                Ok(f64::INFINITY)
            }
            Err(e) => Err(e),
        }
    }

    /// Fit the shock position so that `𝔐(x_s) = n_r`.
    pub fn fit(&self, n_r: f64, bracket: (f64, f64)) -> Result<ShockFitReport> {
        let j = self.params.current();
        let length = self.params.length();
        if !(n_r > j) {
            return Err(Error::Domain(format!("need subsonic n_r > J, got n_r = {n_r}")));
        }
        let (mut lo, mut hi) = bracket;
        if !(lo < hi && lo >= 0.0 && hi <= length) {
            return Err(Error::Domain(format!("invalid bracket [{lo}, {hi}] for L = {length}")));
        }
        let mut warnings = Vec::new();
        let f_lo = self.defect(lo, n_r, &mut warnings)?;
        let f_hi = self.defect(hi, n_r, &mut warnings)?;
        if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
            return Err(Error::NoShockInBracket { lo, hi, m_lo: f_lo + n_r, m_hi: f_hi + n_r });
        }
        if f_lo < f_hi {
            warnings.push("M increases across the bracket (expected decreasing)".into());
        }
        let tol = self.opts.fit_tol * j;
        let width = self.opts.fit_width * length;
        let lo_sign = f_lo.signum();
        let mut history = Vec::new();
        let mut x_fit = if f_lo.abs() <= f_hi.abs() { lo } else { hi };
        let mut best = f_lo.abs().min(f_hi.abs());
        while best >= tol && hi - lo >= width {
            let mid = 0.5 * (lo + hi);
            let f = self.defect(mid, n_r, &mut warnings)?;
            history.push(BracketStep { lo, hi, mid, m_mid: f + n_r });
            if f.abs() < best || f.abs() == best {
                best = f.abs();
                x_fit = mid;
            }
            if f == 0.0 {
                break;
            }
            if f.signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let solution = self.solution_at(x_fit)?;
        let residual = (solution.n_end - n_r).abs();

        let table = self.map_table(bracket.0, bracket.1, TABLE_SIZE);
        let values: Vec<Option<f64>> = table.iter().map(|s| s.n_end).collect();
        let monotone_ok = values.iter().all(Option::is_some)
            && values.windows(2).all(|w| w[1].unwrap() < w[0].unwrap());
        let e_positive = table.iter().all(|s| s.e_at_shock > 0.0) && solution.jump.e_value > 0.0;
        if !e_positive {
            warnings.push(
                "E <= 0 at a sampled shock: monotonicity of M is not guaranteed there".into(),
            );
        }
        if !monotone_ok {
            warnings.push("hypothesis violation: M table is not strictly decreasing".into());
        }
        warnings.dedup();
        Ok(ShockFitReport {
            e_at_shock: solution.jump.e_value,
            x_s: x_fit,
            n_r,
            residual,
            history,
            table,
            monotone_ok,
            e_positive,
            warnings,
            solution,
        })
    }
}

/// Shock solution with the shock at `x_s`.
pub fn shock_solution_at(
    params: &FlowParams,
    doping: &DopingProfile,
    n_l: f64,
    e_l: f64,
    x_s: f64,
    opts: &Options,
) -> Result<ShockSolution> {
    ShockProblem::new(params, doping, n_l, e_l, opts)?.solution_at(x_s)
}

/// `𝔐(x_s)`, the downstream density at `L`.
pub fn boundary_map_m(
    params: &FlowParams,
    doping: &DopingProfile,
    n_l: f64,
    e_l: f64,
    x_s: f64,
    opts: &Options,
) -> Result<f64> {
    ShockProblem::new(params, doping, n_l, e_l, opts)?.boundary_map(x_s)
}

pub fn fit_shock_position(
    params: &FlowParams,
    doping: &DopingProfile,
    n_l: f64,
    e_l: f64,
    n_r: f64,
    bracket: (f64, f64),
    opts: &Options,
) -> Result<ShockFitReport> {
    ShockProblem::new(params, doping, n_l, e_l, opts)?.fit(n_r, bracket)
}

/// One perturbed fit in a shock scaling experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub x_s: f64,
    pub displacement: f64,
    /// `|x̃₀ − x₀|/ε` (zero for `ε = 0`).
    pub ratio: f64,
    /// `‖ñ − n⁰‖_{C¹}` on `[0, min x_s − margin]`.
    pub sup_c1: f64,
    /// `‖ñ − n⁰‖_{C¹}` on `[max x_s + margin, L]`.
    pub sub_c1: f64,
    pub sup_ratio: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    /// Sampled 𝔐 strictly decreasing over the bracket, so the root is unique.
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub x0: f64,
    pub e_at_shock: f64,
    pub n_r: f64,
    pub margin: f64,
    pub rows: Vec<ScalingRow>,
    /// `max/min` of the nonzero-ε ratios.
    pub ratio_spread: f64,
    pub sup_ratio_spread: f64,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 1.0;
    }
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    let min = v.iter().copied().fold(f64::MAX, f64::min);
    if min > 0.0 {
        max / min
    } else if max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// `sup|Δn| + sup|Δn_x|` between two branches on `[a, b]`.
fn c1_distance(u: &SolutionBranch, v: &SolutionBranch, a: f64, b: f64, count: usize) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let xs = linspace(a, b, count);
    let mut dn = Vec::with_capacity(count);
    let mut dnx = Vec::with_capacity(count);
    for &x in &xs {
        dn.push(u.eval(x)?.n - v.eval(x)?.n);
        dnx.push(u.slope(x)? - v.slope(x)?);
    }
    Ok(sup_norm(&dn) + sup_norm(&dnx))
}

/// Refit the shock for `b = b0 + ε·delta` over `eps_list`.
///
/// The baseline uses `bracket`; perturbed fits use `x0 ± window`. Density
/// differences are measured away from both shocks by `margin`.
#[allow(clippy::too_many_arguments)]
pub fn stability_probe_shock(
    params: &FlowParams,
    b0: &DopingProfile,
    delta: &DopingProfile,
    n_l: f64,
    e_l: f64,
    n_r: f64,
    eps_list: &[f64],
    bracket: (f64, f64),
    window: f64,
    opts: &Options,
) -> Result<ScalingReport> {
    let base = ShockProblem::new(params, b0, n_l, e_l, opts)?;
    let fit0 = base.fit(n_r, bracket)?;
    if !(fit0.e_at_shock > 0.0) {
        return Err(Error::PreconditionFailed(format!(
            "baseline shock has E = {} <= 0; the position stability experiment needs E > 0 at the shock",
            fit0.e_at_shock
        )));
    }
    let x0 = fit0.x_s;
    let length = params.length();
    let margin = 0.02 * length;
    let inner = opts.sequential();
    let run = |&eps: &f64| -> Result<ScalingRow> {
        let b = b0.perturbed(delta, eps)?;
        let problem = ShockProblem::new(params, &b, n_l, e_l, &inner)?;
        let lo = (x0 - window).max(0.0);
        let hi = (x0 + window).min(length).min(problem.reach());
        let fit = problem.fit(n_r, (lo, hi))?;
        let displacement = (fit.x_s - x0).abs();
        let s0 = &fit0.solution;
        let s1 = &fit.solution;
        let left = x0.min(fit.x_s) - margin;
        let right = x0.max(fit.x_s) + margin;
        let count = opts.grid_points.max(8);
        let sup_c1 = c1_distance(&s1.supersonic, &s0.supersonic, 0.0, left, count)?;
        let sub_c1 = c1_distance(&s1.subsonic, &s0.subsonic, right, length, count)?;
        let norm = if eps != 0.0 { 1.0 / eps.abs() } else { 0.0 };
        Ok(ScalingRow {
            eps,
            x_s: fit.x_s,
            displacement,
            ratio: displacement * norm,
            sup_c1,
            sub_c1,
            sup_ratio: sup_c1 * norm,
            bracket: (lo, hi),
            residual: fit.residual,
            unique: fit.monotone_ok,
        })
    };
    let rows: Vec<ScalingRow> = par::map(opts.execution, eps_list, run).into_iter().collect::<Result<_>>()?;
    let ratio_spread = spread(rows.iter().filter(|r| r.eps != 0.0).map(|r| r.ratio));
    let sup_ratio_spread = spread(rows.iter().filter(|r| r.eps != 0.0).map(|r| r.sup_ratio));
    Ok(ScalingReport {
        x0,
        e_at_shock: fit0.e_at_shock,
        n_r,
        margin,
        rows,
        ratio_spread,
        sup_ratio_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::g_of_n;

    fn mono_problem() -> ShockProblem {
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        ShockProblem::new(&p, &b, 0.5, 0.5, &Options::default()).unwrap()
    }

    #[test]
    fn stationary_point_stays_put() {
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        let br = supersonic_branch(&p, &b, 0.5, 2.0, 1.0, &Options::default()).unwrap();
        let end = br.last();
        assert!((end.n - 0.5).abs() < 1e-12 && (end.e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_branch_keeps_first_integral() {
        let p = FlowParams::new(1.0, 0.0, 0.5).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        // on the transonic trajectory: E = −√g(n) on the supersonic side
        let e0 = -g_of_n(0.5, &p, 0.5).sqrt();
        let br = supersonic_branch(&p, &b, 0.5, e0, 0.5, &Options::default()).unwrap();
        for q in br.samples(Some(200)).unwrap() {
            assert!((q.e * q.e - g_of_n(q.n, &p, 0.5)).abs() < 1e-8);
        }
        assert!(br.poisson_residual(200).unwrap() < 1e-8);
    }

    #[test]
    fn sonic_collision_reports_location() {
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        match supersonic_branch(&p, &b, 0.5, 0.5, 1.0, &Options::default()) {
            Err(Error::SonicCollision { x, n }) => {
                assert!((x - 0.771).abs() < 5e-3, "{x}");
                assert!((n - (1.0 - 1e-6)).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let prob = mono_problem();
        assert!(prob.reach() < 0.78);
        assert!(matches!(prob.solution_at(0.9), Err(Error::SonicCollision { .. })));
    }

    #[test]
    fn jump_is_exact_and_entropic() {
        let prob = mono_problem();
        let s = prob.solution_at(0.3).unwrap();
        let rh = s.rh_residuals();
        assert!(rh.flux < 1e-12);
        assert_eq!(rh.field, 0.0);
        assert!(s.jump.entropy_ok);
        let (sup_max, sub_min) = s.regime_extrema(400).unwrap();
        assert!(sup_max < 1.0 && sub_min > 1.0);
        assert!(s.poisson_residual(400).unwrap() < 1e-8);
        let pts = s.samples(100).unwrap();
        let at: Vec<_> = pts.iter().filter(|q| q.x == 0.3).collect();
        assert_eq!(at.len(), 2);
        assert_eq!(at[0].regime, Regime::Supersonic);
        assert_eq!(at[1].regime, Regime::Subsonic);
    }

    #[test]
    fn boundary_map_decreases_and_is_continuous() {
        let prob = mono_problem();
        let table = prob.map_table(0.05, 0.5, 10);
        let vals: Vec<f64> = table.iter().map(|s| s.n_end.unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        assert!(table.iter().all(|s| s.e_at_shock > 0.0));
        let m = |x| prob.boundary_map(x).unwrap();
        let d1 = (m(0.3 + 1e-4) - m(0.3)).abs();
        let d2 = (m(0.3 + 1e-5) - m(0.3)).abs();
        assert!(d2 < d1 && d2 < 1e-3);
    }

    #[test]
    fn zero_length_subsonic_branch() {
        let p = FlowParams::new(1.0, 0.0, 0.5).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        let prob = ShockProblem::new(&p, &b, 0.5, -0.2, &Options::default()).unwrap();
        assert_eq!(prob.reach(), 0.5);
        let n_minus = prob.upstream.final_state()[0];
        assert_eq!(prob.boundary_map(0.5).unwrap(), 1.0 / n_minus);
    }

    #[test]
    fn fit_recovers_target_and_is_bracket_independent() {
        let prob = mono_problem();
        let n_r = prob.boundary_map(0.3).unwrap();
        let a = prob.fit(n_r, (0.05, 0.5)).unwrap();
        let b = prob.fit(n_r, (0.2, 0.45)).unwrap();
        assert!(a.residual < 1e-9);
        assert!((a.x_s - 0.3).abs() < 1e-9);
        assert!((a.x_s - b.x_s).abs() < 1e-9);
        // with the residual stop tightened, brackets agree to 1e-10·L
        let tight = Options { fit_tol: 1e-13, ..Options::default() };
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let d = DopingProfile::constant(0.5).unwrap();
        let prob_t = ShockProblem::new(&p, &d, 0.5, 0.5, &tight).unwrap();
        let a_t = prob_t.fit(n_r, (0.05, 0.5)).unwrap();
        let b_t = prob_t.fit(n_r, (0.2, 0.45)).unwrap();
        assert!((a_t.x_s - b_t.x_s).abs() < 1e-10);
        assert!(a.monotone_ok && a.e_positive && a.warnings.is_empty());
        // larger downstream density moves the shock upstream
        let c = prob.fit(n_r + 0.1, (0.05, 0.5)).unwrap();
        assert!(c.x_s < a.x_s);
        assert!(matches!(prob.fit(50.0, (0.05, 0.5)), Err(Error::NoShockInBracket { .. })));
    }

    #[test]
    fn corrupted_jump_is_visible() {
        let prob = mono_problem().with_jump_offset(0.1);
        let s = prob.solution_at(0.3).unwrap();
        let n_minus = s.jump.n_minus;
        let expected = (n_minus + 1.0 / n_minus) - (1.0 / n_minus + 0.1 + 1.0 / (1.0 / n_minus + 0.1));
        assert!((s.rh_residuals().flux - expected.abs()).abs() < 1e-12);
        assert!(s.rh_residuals().flux > 1e-3);
    }

    #[test]
    fn scaling_probe_zero_eps() {
        let p = FlowParams::new(1.0, 1.0, 1.0).unwrap();
        let b = DopingProfile::constant(0.5).unwrap();
        let one = DopingProfile::constant(1.0).unwrap();
        let n_r = mono_problem().boundary_map(0.3).unwrap();
        let r = stability_probe_shock(&p, &b, &one, 0.5, 0.5, n_r, &[0.0, 1e-3], (0.05, 0.5), 0.1, &Options::default())
            .unwrap();
        assert_eq!(r.rows[0].displacement, 0.0);
        assert_eq!(r.rows[0].sup_c1, 0.0);
        assert!(r.rows[1].displacement > 0.0 && r.rows[1].unique);
    }
}
