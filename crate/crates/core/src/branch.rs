use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{classify_regime, DopingProfile, FlowParams, Regime, State};
use crate::numerics::{central_d1, grid_d1, linspace, one_sided_d1};
use crate::odeint::DenseTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub x: f64,
    pub n: f64,
    pub e: f64,
    pub n_x: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `[n, E]` integrated in `x` with dense output.
    Integrated(DenseTrajectory<2>),
    /// Uniformly spaced samples (smooth transonic solutions, which are
    /// built in the density variable).
    Sampled(Vec<BranchPoint>),
}

/// Monotone-in-`x` piece of a steady solution.
#[derive(Debug, Clone)]
pub struct SolutionBranch {
    params: FlowParams,
    doping: DopingProfile,
    sonic_eps: f64,
    repr: Repr,
}

impl SolutionBranch {
    pub(crate) fn integrated(
        params: FlowParams,
        doping: DopingProfile,
        sonic_eps: f64,
        traj: DenseTrajectory<2>,
    ) -> Self {
        Self { params, doping, sonic_eps, repr: Repr::Integrated(traj) }
    }

    pub(crate) fn sampled(
        params: FlowParams,
        doping: DopingProfile,
        sonic_eps: f64,
        points: Vec<BranchPoint>,
    ) -> Self {
        Self { params, doping, sonic_eps, repr: Repr::Sampled(points) }
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn doping(&self) -> &DopingProfile {
        &self.doping
    }

    pub fn x_start(&self) -> f64 {
        match &self.repr {
            Repr::Integrated(t) => t.start(),
            Repr::Sampled(p) => p[0].x,
        }
    }

    pub fn x_end(&self) -> f64 {
        match &self.repr {
            Repr::Integrated(t) => t.end(),
            Repr::Sampled(p) => p[p.len() - 1].x,
        }
    }

    pub fn is_integrated(&self) -> bool {
        matches!(self.repr, Repr::Integrated(_))
    }

    pub fn trajectory(&self) -> Option<&DenseTrajectory<2>> {
        match &self.repr {
            Repr::Integrated(t) => Some(t),
            Repr::Sampled(_) => None,
        }
    }

    pub fn first(&self) -> State {
        self.eval(self.x_start()).expect("start of branch is in range")
    }

    pub fn last(&self) -> State {
        self.eval(self.x_end()).expect("end of branch is in range")
    }

    /// State at `x`; sampled branches interpolate linearly.
    pub fn eval(&self, x: f64) -> Result<State> {
        let (lo, hi) = (self.x_start(), self.x_end());
        let range = || Error::Range { x, lo, hi };
        match &self.repr {
            Repr::Integrated(t) => {
                let [n, e] = t.eval(x).map_err(|_| range())?;
                Ok(State { x, n, e })
            }
            Repr::Sampled(p) => {
                if !(x >= lo && x <= hi) {
                    return Err(range());
                }
                let k = p.partition_point(|q| q.x <= x).clamp(1, p.len() - 1);
                let (a, b) = (&p[k - 1], &p[k]);
                let t = if b.x > a.x { (x - a.x) / (b.x - a.x) } else { 0.0 };
                Ok(State { x, n: a.n + t * (b.n - a.n), e: a.e + t * (b.e - a.e) })
            }
        }
    }

    /// `n_x` from the steady vector field at the branch state.
    pub fn slope(&self, x: f64) -> Result<f64> {
        let s = self.eval(x)?;
        Ok(self.params.steady_rhs(s.n, s.e, self.doping.eval(x))[0])
    }

    fn point(&self, x: f64) -> Result<BranchPoint> {
        let s = self.eval(x)?;
        Ok(BranchPoint {
            x,
            n: s.n,
            e: s.e,
            n_x: self.params.steady_rhs(s.n, s.e, self.doping.eval(x))[0],
            regime: classify_regime(s.n, &self.params, self.sonic_eps * self.params.current())?,
        })
    }

    /// Uniform samples over the branch. Sampled branches return their own
    /// points when `count` is `None`.
    pub fn samples(&self, count: Option<usize>) -> Result<Vec<BranchPoint>> {
        match (&self.repr, count) {
            (Repr::Sampled(p), None) => Ok(p.clone()),
            (Repr::Integrated(t), None) => t.mesh().into_iter().map(|x| self.point(x)).collect(),
            (_, Some(c)) => {
                let (a, b) = (self.x_start(), self.x_end());
                if a == b {
                    return Ok(vec![self.point(a)?]);
                }
                linspace(a, b, c).into_iter().map(|x| self.point(x)).collect()
            }
        }
    }

    /// `max |E_x − (n − b)|` with `E_x` from fourth-order finite differences
    /// of the stored field, independent of the vector field used to build
    /// the branch.
    pub fn poisson_residual(&self, count: usize) -> Result<f64> {
        let (a, b) = (self.x_start(), self.x_end());
        if a == b {
            return Ok(0.0);
        }
        match &self.repr {
            Repr::Integrated(t) => {
                let h = (b - a).abs() / (4.0 * count as f64);
                let field = |x: f64| t.eval(x).map(|s| s[1]).unwrap_or(f64::NAN);
                let mut worst = 0.0_f64;
                for x in linspace(a, b, count) {
                    let ex = if (x - a).abs() < 4.0 * h {
                        one_sided_d1(field, x, h * (b - a).signum())
                    } else if (b - x).abs() < 4.0 * h {
                        one_sided_d1(field, x, -h * (b - a).signum())
                    } else {
                        central_d1(field, x, h)
                    };
                    let s = self.eval(x)?;
                    worst = worst.max((ex - (s.n - self.doping.eval(x))).abs());
                }
                Ok(worst)
            }
            Repr::Sampled(p) => {
                let h = p[1].x - p[0].x;
                let es: Vec<f64> = p.iter().map(|q| q.e).collect();
                let ex = grid_d1(&es, h);
                Ok(p.iter()
                    .zip(&ex)
                    .map(|(q, d)| (d - (q.n - self.doping.eval(q.x))).abs())
                    .fold(0.0, f64::max))
            }
        }
    }

    /// `(min n, max n)` over a sample grid.
    pub fn density_range(&self, count: usize) -> Result<(f64, f64)> {
        let pts = self.samples(Some(count))?;
        Ok(pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.n), hi.max(p.n))))
    }
}
