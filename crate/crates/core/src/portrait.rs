//! `(n, E)` phase portraits of the steady system for constant doping.
//!
//! Grid seeds are integrated in `x` in both directions until they leave
//! the plotting box, run past an `x` cap, or enter the sonic guard band.
//! Trajectories that reach the sonic line do so with unbounded `n_x` unless
//! they arrive at `(J, α)`; the two that pass through that point smoothly
//! are added from the density-variable construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DopingProfile, FlowParams};
use crate::numerics::linspace;
use crate::odeint::{Crossing, Event, IvpSpec, Termination};
use crate::options::Options;
use crate::par;
use crate::smooth::{branch_floor, build_tilde_trajectory, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PortraitSpec {
    pub n_min: f64,
    pub n_max: f64,
    pub e_min: f64,
    pub e_max: f64,
    /// Seeds per axis.
    pub seeds_n: usize,
    pub seeds_e: usize,
    /// Integration length in `x` each way.
    pub x_cap: f64,
    /// Polyline points per direction.
    pub resolution: usize,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        Self {
            n_min: 0.1,
            n_max: 3.0,
            e_min: -1.0,
            e_max: 3.0,
            seeds_n: 12,
            seeds_e: 12,
            x_cap: 10.0,
            resolution: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TrajectoryClass {
    StaysSupersonic,
    StaysSubsonic,
    /// Reaches the sonic line with `|n_x| → ∞`.
    Singular { n_at_guard: f64, e_at_guard: f64, slope_at_guard: f64 },
    /// Passes through `(J, α)` with finite slope `dE/dn`.
    SmoothCrossing { direction: Direction, e_at_sonic: f64, slope: f64 },
}

impl TrajectoryClass {
    pub fn crosses_smoothly(&self) -> bool {
        matches!(self, TrajectoryClass::SmoothCrossing { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum Origin {
    Seed { n0: f64, e0: f64 },
    Separatrix { direction: Direction },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitTrajectory {
    pub origin: Origin,
    pub class: TrajectoryClass,
    /// `(n, E)` polyline.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Portrait {
    pub params: FlowParams,
    pub b0: f64,
    pub spec: PortraitSpec,
    pub trajectories: Vec<PortraitTrajectory>,
}

impl Portrait {
    pub fn smooth_crossings(&self) -> impl Iterator<Item = &PortraitTrajectory> {
        self.trajectories.iter().filter(|t| t.class.crosses_smoothly())
    }

    /// Counts of (stays in one regime, singular, smooth crossing).
    pub fn census(&self) -> (usize, usize, usize) {
        self.trajectories.iter().fold((0, 0, 0), |(s, g, c), t| match t.class {
            TrajectoryClass::StaysSupersonic | TrajectoryClass::StaysSubsonic => (s + 1, g, c),
            TrajectoryClass::Singular { .. } => (s, g + 1, c),
            TrajectoryClass::SmoothCrossing { .. } => (s, g, c + 1),
        })
    }
}

/// Slope above which a sonic arrival counts as singular.
const SLOPE_LIMIT: f64 = 1e3;
/// Second band `|n − J| = WIDE·J` used to test how the slope scales.
const WIDE: f64 = 1e-4;

struct Leg {
    points: Vec<(f64, f64)>,
    /// `(n, E, |n_x|)` at the guard and `|n_x|` at the wide band.
    sonic: Option<(f64, f64, f64, f64)>,
}

fn leg(params: &FlowParams, b0: f64, spec: &PortraitSpec, n0: f64, e0: f64, dir: f64, opts: &Options) -> Result<Leg> {
    let j = params.current();
    let p = *params;
    let rhs = move |_: f64, y: &[f64; 2]| p.steady_rhs(y[0], y[1], b0);
    let side = (n0 - j).signum();
    let guard = j * (1.0 + side * opts.sonic_guard);
    let wide = j * (1.0 + side * WIDE);
    let toward = if side < 0.0 { Crossing::Rising } else { Crossing::Falling };
    let spec_c = *spec;
    let traj = IvpSpec::new(rhs, 0.0, dir * spec.x_cap, [n0, e0])
        .tolerances(opts.rtol.max(1e-10), opts.atol.max(1e-12))
        .event(Event::new(move |_, y: &[f64; 2]| y[0] - guard).crossing(toward))
        .event(Event::new(move |_, y: &[f64; 2]| {
            let dn = (y[0] - spec_c.n_min).min(spec_c.n_max - y[0]);
            let de = (y[1] - spec_c.e_min).min(spec_c.e_max - y[1]);
            dn.min(de)
        })
        .crossing(Crossing::Falling))
        .event(Event::new(move |_, y: &[f64; 2]| y[0] - wide).crossing(toward).terminal(false))
        .solve()?;
    let end = traj.end();
    let xs = linspace(0.0, end, spec.resolution.max(2));
    let mut points = Vec::with_capacity(xs.len());
    for x in xs {
        let [n, e] = traj.eval(x)?;
        points.push((n, e));
    }
    let sonic = match traj.termination {
        Termination::Event { index: 0 } => {
            let [n, e] = traj.final_state();
            let slope = p.steady_rhs(n, e, b0)[0].abs();
            let wide_slope = traj
                .hits
                .iter()
                .find(|h| h.index == 2)
                .map(|h| p.steady_rhs(h.state[0], h.state[1], b0)[0].abs())
                .unwrap_or(0.0);
            Some((n, e, slope, wide_slope))
        }
        _ => None,
    };
    Ok(Leg { points, sonic })
}

fn seed_trajectory(
    params: &FlowParams,
    b0: f64,
    spec: &PortraitSpec,
    n0: f64,
    e0: f64,
    opts: &Options,
) -> Result<PortraitTrajectory> {
    let back = leg(params, b0, spec, n0, e0, -1.0, opts)?;
    let fwd = leg(params, b0, spec, n0, e0, 1.0, opts)?;
    let mut points: Vec<(f64, f64)> = back.points.into_iter().rev().collect();
    points.extend(fwd.points.into_iter().skip(1));
    let arrival = [back.sonic, fwd.sonic].into_iter().flatten().next();
    let class = match arrival {
        Some((n, e, slope, wide_slope)) => {
            // a smooth arrival keeps the slope bounded as the band shrinks
            if slope < SLOPE_LIMIT && slope <= 10.0 * wide_slope.max(f64::MIN_POSITIVE) {
                TrajectoryClass::SmoothCrossing {
                    direction: if n0 < params.current() { Direction::SupToSub } else { Direction::SubToSup },
                    e_at_sonic: e,
                    slope: (n - b0) / params.steady_rhs(n, e, b0)[0],
                }
            } else {
                TrajectoryClass::Singular { n_at_guard: n, e_at_guard: e, slope_at_guard: slope }
            }
        }
        None if n0 < params.current() => TrajectoryClass::StaysSupersonic,
        None => TrajectoryClass::StaysSubsonic,
    };
    Ok(PortraitTrajectory { origin: Origin::Seed { n0, e0 }, class, points })
}

fn separatrix(
    params: &FlowParams,
    b0: f64,
    spec: &PortraitSpec,
    direction: Direction,
    opts: &Options,
) -> Result<PortraitTrajectory> {
    let j = params.current();
    let margin = 1e-3 * j;
    let mut n_lo = spec.n_min.max(margin);
    if let Some(n_star) = branch_floor(params, b0, direction, n_lo, opts)? {
        n_lo = n_star + margin;
    }
    let mut n_hi = spec.n_max;
    if let Some(n_star) = branch_floor(params, b0, direction, n_hi, opts)? {
        n_hi = n_star - margin;
    }
    let traj = build_tilde_trajectory(params, b0, direction, n_lo, n_hi, opts)?;
    let alpha = params.alpha();
    let mut points = Vec::new();
    for n in linspace(n_lo, n_hi, 2 * spec.resolution.max(2)) {
        let e = traj.e_field(n)?;
        if e >= spec.e_min && e <= spec.e_max {
            points.push((n, e));
        }
    }
    Ok(PortraitTrajectory {
        origin: Origin::Separatrix { direction },
        class: TrajectoryClass::SmoothCrossing {
            direction,
            e_at_sonic: traj.e_field(j)?,
            slope: traj.k() - alpha / j,
        },
        points,
    })
}

/// Phase portrait for constant doping `b0` over the box in `spec`.
pub fn phase_portrait(params: &FlowParams, doping: &DopingProfile, spec: &PortraitSpec, opts: &Options) -> Result<Portrait> {
    let b0 = doping
        .as_constant()
        .ok_or_else(|| Error::Domain("phase portraits need constant doping".into()))?;
    if !(spec.n_min > 0.0 && spec.n_min < spec.n_max && spec.e_min < spec.e_max && spec.x_cap > 0.0) {
        return Err(Error::InvalidParams(format!("invalid portrait box {spec:?}")));
    }
    let j = params.current();
    let mut seeds = Vec::new();
    if spec.seeds_n > 0 && spec.seeds_e > 0 {
        let pad = |lo: f64, hi: f64, k: usize| {
            let h = (hi - lo) / k as f64;
            (0..k).map(move |i| lo + (i as f64 + 0.5) * h)
        };
        for n in pad(spec.n_min, spec.n_max, spec.seeds_n) {
            if (n - j).abs() < 1e-3 * j {
                continue;
            }
            for e in pad(spec.e_min, spec.e_max, spec.seeds_e) {
                seeds.push((n, e));
            }
        }
    }
    let mut trajectories: Vec<PortraitTrajectory> = par::map(opts.execution, &seeds, |&(n, e)| {
        seed_trajectory(params, b0, spec, n, e, opts)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    if b0 < j && spec.n_min < j && spec.n_max > j {
        for direction in [Direction::SupToSub, Direction::SubToSup] {
            trajectories.push(separatrix(params, b0, spec, direction, opts)?);
        }
    }
    Ok(Portrait { params: *params, b0, spec: *spec, trajectories })
}
