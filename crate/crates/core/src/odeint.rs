//! Explicit adaptive Dormand–Prince 5(4) integrator with the Hairer
//! continuous extension and event location on the dense output.
//!
//! States are fixed-size arrays; every solver in this crate integrates one-
//! or two-component systems, so `[f64; N]` keeps the hot loop allocation
//! free.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at x = {x} (likely a singularity); last state {state:?}")]
    Singularity { x: f64, state: Vec<f64> },
    #[error("right-hand side returned a non-finite value at x = {x}")]
    NonFiniteRhs { x: f64, state: Vec<f64> },
    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
    #[error("query x = {x} outside the integrated span [{lo}, {hi}]")]
    OutOfSpan { x: f64, lo: f64, hi: f64 },
    #[error("invalid integration spec: {0}")]
    InvalidSpec(String),
}

/// Which sign changes of an event function count as a hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

pub type EventFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'a>;

pub struct Event<'a, const N: usize> {
    func: EventFn<'a, N>,
    crossing: Crossing,
    terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    /// A terminal event firing on any sign change.
    pub fn new<G>(func: G) -> Self
    where
        G: Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'a,
    {
        Self { func: Box::new(func), crossing: Crossing::Either, terminal: true }
    }

    pub fn crossing(mut self, crossing: Crossing) -> Self {
        self.crossing = crossing;
        self
    }

    pub fn terminal(mut self, terminal: bool) -> Self {
        self.terminal = terminal;
        self
    }
}

/// Initial value problem `y' = rhs(x, y)`, `y(start) = y0`, integrated
/// towards `stop` (which may lie below `start`).
pub struct IvpSpec<'a, F, const N: usize> {
    rhs: F,
    start: f64,
    stop: f64,
    y0: [f64; N],
    rtol: f64,
    atol: f64,
    max_step: f64,
    max_steps: usize,
    events: Vec<Event<'a, N>>,
}

impl<'a, F, const N: usize> IvpSpec<'a, F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, start: f64, stop: f64, y0: [f64; N]) -> Self {
        Self {
            rhs,
            start,
            stop,
            y0,
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            events: Vec::new(),
        }
    }

    pub fn rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn tolerances(self, rtol: f64, atol: f64) -> Self {
        self.rtol(rtol).atol(atol)
    }

    pub fn max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn event(mut self, event: Event<'a, N>) -> Self {
        self.events.push(event);
        self
    }

    pub fn solve(&self) -> Result<DenseTrajectory<N>, OdeError> {
        integrate(self)
    }
}

/// One accepted step with its continuous-extension coefficients.
#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    x0: f64,
    h: f64,
    y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, x: f64) -> [f64; N] {
        let theta = (x - self.x0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }

    fn eval_derivative(&self, x: f64) -> [f64; N] {
        let theta = (x - self.x0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            let c = r[3][i] + theta1 * r[4][i];
            let dc = -r[4][i];
            let b = r[2][i] + theta * c;
            let db = c + theta * dc;
            let a = r[1][i] + theta1 * b;
            let da = -b + theta1 * db;
            (a + theta * da) / self.h
        })
    }

    fn x1(&self) -> f64 {
        self.x0 + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedStop,
    Event { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub x: f64,
    pub state: [f64; N],
}

/// Accepted steps with dense output, event hits and termination reason.
#[derive(Debug, Clone)]
pub struct DenseTrajectory<const N: usize> {
    start: f64,
    end: f64,
    y_start: [f64; N],
    y_end: [f64; N],
    steps: Vec<DenseStep<N>>,
    pub hits: Vec<EventHit<N>>,
    pub termination: Termination,
}

impl<const N: usize> DenseTrajectory<N> {
    /// A trajectory that never leaves its initial point.
    pub fn point(x: f64, y: [f64; N]) -> Self {
        Self {
            start: x,
            end: x,
            y_start: y,
            y_end: y,
            steps: Vec::new(),
            hits: Vec::new(),
            termination: Termination::ReachedStop,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn initial_state(&self) -> [f64; N] {
        self.y_start
    }

    pub fn final_state(&self) -> [f64; N] {
        self.y_end
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Step end points including the start, in integration order.
    pub fn mesh(&self) -> Vec<f64> {
        std::iter::once(self.start)
            .chain(self.steps.iter().map(|s| s.x1().clamp(self.lo(), self.hi())))
            .collect()
    }

    fn lo(&self) -> f64 {
        self.start.min(self.end)
    }

    fn hi(&self) -> f64 {
        self.start.max(self.end)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    fn locate(&self, x: f64) -> Result<&DenseStep<N>, OdeError> {
        if !self.contains(x) {
            return Err(OdeError::OutOfSpan { x, lo: self.lo(), hi: self.hi() });
        }
        let forward = self.end >= self.start;
        let idx = self.steps.partition_point(|s| if forward { s.x1() < x } else { s.x1() > x });
        Ok(&self.steps[idx.min(self.steps.len() - 1)])
    }

    /// Dense-output state at `x`. Endpoints return the stored states exactly.
    pub fn eval(&self, x: f64) -> Result<[f64; N], OdeError> {
        if x == self.start {
            return Ok(self.y_start);
        }
        if x == self.end {
            return Ok(self.y_end);
        }
        let step = self.locate(x)?;
        if x == step.x1() {
            return Ok(step.y1);
        }
        Ok(step.eval(x))
    }

    /// The same trajectory ending at `x`, which must lie in the span. Steps
    /// past `x` are dropped; dense output below `x` is unchanged.
    pub fn truncated(&self, x: f64) -> Result<Self, OdeError> {
        let y_end = self.eval(x)?;
        let forward = self.end >= self.start;
        let keep = self.steps.partition_point(|s| if forward { s.x0 < x } else { s.x0 > x });
        Ok(Self {
            start: self.start,
            end: x,
            y_start: self.y_start,
            y_end,
            steps: self.steps[..keep].to_vec(),
            hits: Vec::new(),
            termination: Termination::ReachedStop,
        })
    }

    /// Derivative of the dense-output polynomial at `x`.
    pub fn eval_derivative(&self, x: f64) -> Result<[f64; N], OdeError> {
        if self.steps.is_empty() {
            return if x == self.start {
                Ok([0.0; N])
            } else {
                Err(OdeError::OutOfSpan { x, lo: self.lo(), hi: self.hi() })
            };
        }
        Ok(self.locate(x)?.eval_derivative(x))
    }
}

/// Dense-output states at each position in `xs`.
pub fn sample<const N: usize>(
    traj: &DenseTrajectory<N>,
    xs: &[f64],
) -> Result<Vec<[f64; N]>, OdeError> {
    xs.iter().map(|&x| traj.eval(x)).collect()
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrate `spec` with PI step-size control; terminal events stop the run
/// at the localized crossing.
pub fn integrate<F, const N: usize>(spec: &IvpSpec<'_, F, N>) -> Result<DenseTrajectory<N>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(spec.rtol > 0.0 && spec.atol > 0.0) {
        return Err(OdeError::InvalidSpec("rtol and atol must be positive".into()));
    }
    if !(spec.start.is_finite() && spec.stop.is_finite()) {
        return Err(OdeError::InvalidSpec("integration bounds must be finite".into()));
    }
    if spec.start == spec.stop {
        return Err(OdeError::InvalidSpec("start and stop coincide".into()));
    }
    let f = &spec.rhs;
    let dir = (spec.stop - spec.start).signum();
    let span = (spec.stop - spec.start).abs();
    let max_step = spec.max_step.min(span);

    let mut x = spec.start;
    let mut y = spec.y0;
    let mut k1 = f(x, &y);
    if !finite(&y) || !finite(&k1) {
        return Err(OdeError::NonFiniteRhs { x, state: y.to_vec() });
    }

    let scale = |y0: &[f64; N], y1: &[f64; N], i: usize| {
        spec.atol + spec.rtol * y0[i].abs().max(y1[i].abs())
    };
    let mut h = dir * initial_step(f, x, &y, &k1, spec.rtol, spec.atol, max_step);

    let mut traj = DenseTrajectory {
        start: spec.start,
        end: spec.stop,
        y_start: spec.y0,
        y_end: spec.y0,
        steps: Vec::new(),
        hits: Vec::new(),
        termination: Termination::ReachedStop,
    };
    let mut g_prev: Vec<f64> = spec.events.iter().map(|e| (e.func)(x, &y)).collect();
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;

    for _ in 0..spec.max_steps {
        if (spec.stop - x) * dir <= 0.0 {
            traj.end = spec.stop;
            traj.y_end = y;
            return Ok(traj);
        }
        if (x + h - spec.stop) * dir > 0.0 {
            h = spec.stop - x;
        }
        if h.abs() < 16.0 * f64::EPSILON * x.abs().max(1e-300) || h.abs() < 1e-300 {
            return Err(OdeError::Singularity { x, state: y.to_vec() });
        }

        let k2 = f(x + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            x + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + h,
            &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new =
            combine(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(x + h, &y_new);

        let stages_ok = [&k2, &k3, &k4, &k5, &k6, &k7].iter().all(|k| finite(k)) && finite(&y_new);
        let err = if stages_ok {
            let mut acc = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let r = e / scale(&y, &y_new, i);
                acc += r * r;
            }
            (acc / N as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err > 1.0 {
            // reject
            let fac = if err.is_finite() {
                (err.powf(0.2 - BETA * 0.75) / SAFETY).min(1.0 / FAC_MIN)
            } else {
                10.0
            };
            h /= fac.max(1.0);
            rejected_last = true;
            continue;
        }

        // accept
        let x_new = x + h;
        let mut rcont = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            rcont[0][i] = y[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - h * k7[i] - bspl;
            rcont[4][i] = h
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let step = DenseStep { x0: x, h, y1: y_new, rcont };

        // events
        let mut first_hit: Option<(usize, f64, [f64; N])> = None;
        for (idx, ev) in spec.events.iter().enumerate() {
            let g_new = (ev.func)(x_new, &y_new);
            let g_old = g_prev[idx];
            let fired = match ev.crossing {
                Crossing::Rising => g_old < 0.0 && g_new >= 0.0,
                Crossing::Falling => g_old > 0.0 && g_new <= 0.0,
                Crossing::Either => (g_old < 0.0 && g_new >= 0.0) || (g_old > 0.0 && g_new <= 0.0),
            };
            if fired {
                let xe = locate_event(&step, &ev.func, x, x_new, g_old);
                let ye = if xe == x_new { y_new } else { step.eval(xe) };
                traj.hits.push(EventHit { index: idx, x: xe, state: ye });
                if ev.terminal {
                    let earlier = first_hit.is_none_or(|(_, xf, _)| (xe - xf) * dir < 0.0);
                    if earlier {
                        first_hit = Some((idx, xe, ye));
                    }
                }
            }
            g_prev[idx] = g_new;
        }
        traj.steps.push(step);
        if let Some((idx, xe, ye)) = first_hit {
            // drop non-terminal hits recorded beyond the terminal point
            traj.hits.retain(|hit| (hit.x - xe) * dir <= 0.0);
            traj.end = xe;
            traj.y_end = ye;
            traj.termination = Termination::Event { index: idx };
            return Ok(traj);
        }

        // PI controller
        let err_c = err.max(1e-10);
        let fac11 = err_c.powf(0.2 - BETA * 0.75);
        let mut fac = fac11 / err_prev.powf(BETA) / SAFETY;
        fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;
        if rejected_last {
            h_new = if dir > 0.0 { h_new.min(h) } else { h_new.max(h) };
        }
        err_prev = err_c;
        rejected_last = false;
        x = x_new;
        y = y_new;
        k1 = k7;
        h = dir * h_new.abs().min(max_step);
    }
    Err(OdeError::TooManySteps(spec.max_steps))
}

fn locate_event<const N: usize>(
    step: &DenseStep<N>,
    g: &EventFn<'_, N>,
    xa: f64,
    xb: f64,
    g_a: f64,
) -> f64 {
    let (mut lo, mut hi) = (xa, xb);
    let mut g_lo = g_a;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid, &step.eval(mid));
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == g_lo.signum() {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    hi
}

fn initial_step<F, const N: usize>(
    f: &F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    rtol: f64,
    atol: f64,
    max_step: f64,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sc: [f64; N] = std::array::from_fn(|i| atol + rtol * y[i].abs());
    let rms = |v: &[f64; N]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(max_step);
    let y1: [f64; N] = std::array::from_fn(|i| y[i] + h0 * k1[i]);
    let k2 = f(x + h0, &y1);
    if !finite(&k2) {
        return (h0 * 1e-3).max(1e-12 * max_step);
    }
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let traj = IvpSpec::new(|_, y: &[f64; 1]| [y[0]], 0.0, 1.0, [1.0])
            .tolerances(1e-10, 1e-12)
            .solve()
            .unwrap();
        let y1 = traj.final_state()[0];
        assert!((y1 - 1f64.exp()).abs() < 1e-8, "{y1}");
        assert_eq!(traj.termination, Termination::ReachedStop);
    }

    #[test]
    fn constant_field_is_exact() {
        let traj = IvpSpec::new(|_, _: &[f64; 2]| [0.0, 0.0], 0.0, 5.0, [3.0, -1.0]).solve().unwrap();
        for x in [0.0, 1.3, 5.0] {
            assert_eq!(traj.eval(x).unwrap(), [3.0, -1.0]);
        }
    }

    #[test]
    fn event_at_ln2() {
        let traj = IvpSpec::new(|_, y: &[f64; 1]| [-y[0]], 0.0, 5.0, [1.0])
            .event(Event::new(|_, y: &[f64; 1]| y[0] - 0.5))
            .solve()
            .unwrap();
        assert_eq!(traj.termination, Termination::Event { index: 0 });
        assert!((traj.end() - 2f64.ln()).abs() < 1e-9);
        assert!((traj.final_state()[0] - 0.5).abs() < 1e-12);
        assert!(traj.eval(3.0).is_err());
    }

    #[test]
    fn event_direction_filter() {
        // sin x crosses zero falling at π, rising at 2π
        let rhs = |x: f64, _: &[f64; 1]| [x.cos()];
        let traj = IvpSpec::new(rhs, 0.5, 10.0, [0.5f64.sin()])
            .tolerances(1e-12, 1e-14)
            .event(Event::new(|_, y: &[f64; 1]| y[0]).crossing(Crossing::Rising))
            .solve()
            .unwrap();
        assert!((traj.end() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        let traj = IvpSpec::new(rhs, 0.5, 10.0, [0.5f64.sin()])
            .tolerances(1e-12, 1e-14)
            .event(Event::new(|_, y: &[f64; 1]| y[0]).terminal(false))
            .solve()
            .unwrap();
        assert_eq!(traj.hits.len(), 3);
        assert_eq!(traj.end(), 10.0);
    }

    #[test]
    fn dense_output() {
        let traj = IvpSpec::new(|_, _: &[f64; 1]| [1.0], 0.0, 2.0, [0.0]).solve().unwrap();
        assert!((traj.eval(1.0).unwrap()[0] - 1.0).abs() < 1e-12);
        assert_eq!(traj.eval(0.0).unwrap()[0], 0.0);
        assert_eq!(traj.eval(2.0).unwrap()[0], traj.final_state()[0]);

        let traj = IvpSpec::new(|x: f64, _: &[f64; 1]| [x.cos()], 0.0, 3.0, [0.0])
            .tolerances(1e-12, 1e-14)
            .solve()
            .unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!((traj.eval(half_pi).unwrap()[0] - 1.0).abs() < 1e-9);
        assert!(traj.eval_derivative(1.0).unwrap()[0] - 1f64.cos() < 1e-7);
        let xs = crate::numerics::linspace(0.0, 3.0, 301);
        let ys = sample(&traj, &xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0] - x.sin()).abs() < 1e-9);
        }
        assert!(matches!(traj.eval(3.5), Err(OdeError::OutOfSpan { .. })));
    }

    #[test]
    fn backward_integration() {
        let traj = IvpSpec::new(|_, y: &[f64; 1]| [y[0]], 1.0, 0.0, [1f64.exp()]).solve().unwrap();
        assert!((traj.final_state()[0] - 1.0).abs() < 1e-8);
        assert!((traj.eval(0.5).unwrap()[0] - 0.5f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn singularity_reports_last_state() {
        // y' = y², y(0) = 1 blows up at x = 1
        let err = IvpSpec::new(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, 2.0, [1.0]).solve().unwrap_err();
        match err {
            OdeError::Singularity { x, .. } | OdeError::NonFiniteRhs { x, .. } => {
                assert!((x - 1.0).abs() < 1e-3, "{x}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_rhs_is_reported() {
        let err = IvpSpec::new(|_, _: &[f64; 1]| [f64::NAN], 0.0, 1.0, [0.0]).solve().unwrap_err();
        assert!(matches!(err, OdeError::NonFiniteRhs { .. }));
    }

    #[test]
    fn observed_order_is_about_five() {
        // error against work when the tolerance is tightened
        let run = |tol: f64| {
            let t = IvpSpec::new(|_, y: &[f64; 1]| [y[0]], 0.0, 1.0, [1.0])
                .tolerances(tol, tol)
                .solve()
                .unwrap();
            (t.step_count() as f64, (t.final_state()[0] - 1f64.exp()).abs())
        };
        let (s1, e1) = run(1e-6);
        let (s2, e2) = run(1e-9);
        let order = (e1 / e2).ln() / (s2 / s1).ln();
        assert!(order >= 4.5, "observed order {order}");
    }

    #[test]
    fn restart_from_event_reproduces_trajectory() {
        let rhs = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let full = IvpSpec::new(rhs, 0.0, 4.0, [1.0, 0.0]).solve().unwrap();
        let first = IvpSpec::new(rhs, 0.0, 4.0, [1.0, 0.0])
            .event(Event::new(|_, y: &[f64; 2]| y[0]))
            .solve()
            .unwrap();
        let xe = first.end();
        let rest = IvpSpec::new(rhs, xe, 4.0, first.final_state()).solve().unwrap();
        for x in [2.0, 3.0, 4.0] {
            let a = full.eval(x).unwrap();
            let b = rest.eval(x).unwrap();
            assert!((a[0] - b[0]).abs() < 10.0 * 1e-9, "{x}");
        }
    }

    #[test]
    fn truncation_keeps_dense_output() {
        let t = IvpSpec::new(|_, y: &[f64; 1]| [-y[0]], 0.0, 3.0, [1.0]).solve().unwrap();
        let cut = t.truncated(1.3).unwrap();
        assert_eq!(cut.end(), 1.3);
        assert_eq!(cut.final_state(), t.eval(1.3).unwrap());
        assert_eq!(cut.eval(0.7).unwrap(), t.eval(0.7).unwrap());
        assert!(cut.eval(1.4).is_err());
        assert!(*cut.mesh().last().unwrap() <= 1.3);
    }
}
