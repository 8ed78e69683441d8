//! Parameters, doping profiles and the closed-form quantities of the steady
//! isothermal model (pressure `P(n) = n`, sound speed 1, sonic line `n = J`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::gauss16;

/// Global constants of a steady run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    current: f64,
    alpha: f64,
    length: f64,
}

impl FlowParams {
    /// `current` is `J`, `alpha` is `1/τ` (zero for `τ = ∞`), `length` is `L`.
    pub fn new(current: f64, alpha: f64, length: f64) -> Result<Self> {
        if !(current > 0.0 && current.is_finite()) {
            return Err(Error::InvalidParams(format!("J must be positive, got {current}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParams(format!("L must be positive, got {length}")));
        }
        Ok(Self { current, alpha, length })
    }

    /// Relaxation-time form; `tau = f64::INFINITY` gives `α = 0`.
    pub fn with_tau(current: f64, tau: f64, length: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParams(format!("tau must be positive, got {tau}")));
        }
        Self::new(current, 1.0 / tau, length)
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn with_length(self, length: f64) -> Result<Self> {
        Self::new(self.current, self.alpha, length)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.current, alpha, self.length)
    }

    /// Momentum flux `n + J²/n`, conserved across a shock.
    pub fn momentum_flux(&self, n: f64) -> f64 {
        n + self.current * self.current / n
    }

    /// Right-hand side of the steady system in `x`:
    /// `n_x = (nE − αJ) n² / (n² − J²)`, `E_x = n − b`.
    pub fn steady_rhs(&self, n: f64, e: f64, b: f64) -> [f64; 2] {
        let j = self.current;
        [(n * e - self.alpha * j) * n * n / (n * n - j * j), n - b]
    }
}

/// Background charge `b(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DopingProfile {
    Constant { b0: f64 },
    Tabulated(MonotoneCubic),
}

impl DopingProfile {
    pub fn constant(b0: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(Error::InvalidParams(format!("doping must be positive, got {b0}")));
        }
        Ok(Self::Constant { b0 })
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParams("doping values must be positive".into()));
        }
        Ok(Self::Tabulated(MonotoneCubic::new(knots, values)?))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant { b0 } => *b0,
            Self::Tabulated(spline) => spline.eval(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant { b0 } => Some(*b0),
            Self::Tabulated(_) => None,
        }
    }

    /// `(inf, sup)` of `b` over `[0, length]`. Exact for tabulated profiles
    /// because the monotone interpolant never overshoots its knot values.
    pub fn bounds(&self, length: f64) -> (f64, f64) {
        match self {
            Self::Constant { b0 } => (*b0, *b0),
            Self::Tabulated(spline) => {
                let mut lo = spline.eval(0.0).min(spline.eval(length));
                let mut hi = spline.eval(0.0).max(spline.eval(length));
                for (&x, &v) in spline.knots.iter().zip(&spline.values) {
                    if (0.0..=length).contains(&x) {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// `sup b < J` on `[0, L]`.
    pub fn is_supersonic(&self, params: &FlowParams) -> bool {
        self.bounds(params.length()).1 < params.current()
    }

    /// `self + eps·delta`. Two constants stay constant; otherwise the sum is
    /// tabulated on the union of knots.
    pub fn perturbed(&self, delta: &DopingProfile, eps: f64) -> Result<Self> {
        match (self, delta) {
            (Self::Constant { b0 }, Self::Constant { b0: d }) => Self::constant(b0 + eps * d),
            _ => {
                let mut knots: Vec<f64> = Vec::new();
                for p in [self, delta] {
                    if let Self::Tabulated(s) = p {
                        knots.extend_from_slice(&s.knots);
                    }
                }
                knots.sort_by(f64::total_cmp);
                knots.dedup();
                let values = knots.iter().map(|&x| self.eval(x) + eps * delta.eval(x)).collect();
                Self::tabulated(knots, values)
            }
        }
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Butland
/// slopes, clamped constant extrapolation outside the knots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnotTable", into = "KnotTable")]
pub struct MonotoneCubic {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnotTable {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<KnotTable> for MonotoneCubic {
    type Error = Error;

    fn try_from(t: KnotTable) -> Result<Self> {
        Self::new(t.knots, t.values)
    }
}

impl From<MonotoneCubic> for KnotTable {
    fn from(m: MonotoneCubic) -> Self {
        Self { knots: m.knots, values: m.values }
    }
}

impl MonotoneCubic {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidParams(
                "tabulated doping needs at least two knots with matching values".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("doping knots must be strictly increasing".into()));
        }
        let slopes = Self::slopes(&knots, &values);
        Ok(Self { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        if n == 2 {
            return vec![d[0], d[0]];
        }
        let mut m = vec![0.0; n];
        for k in 1..n - 1 {
            if d[k - 1] * d[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let m0 = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if m0.signum() != d0.signum() || d0 == 0.0 {
                0.0
            } else if d0.signum() != d1.signum() && m0.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                m0
            }
        };
        m[0] = end(h[0], h[1], d[0], d[1]);
        m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        m
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let slopes = &self.slopes;
        let k = self.knots.partition_point(|&k| k <= x) - 1;
        let h = self.knots[k + 1] - self.knots[k];
        let t = (x - self.knots[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[k] + h10 * h * slopes[k] + h01 * self.values[k + 1] + h11 * h * slopes[k + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Supersonic,
    Sonic,
    Subsonic,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Supersonic => "sup",
            Regime::Sonic => "sonic",
            Regime::Subsonic => "sub",
        }
    }
}

/// Supersonic iff `n < J − eps`, sonic iff `|n − J| ≤ eps`, subsonic iff
/// `n > J + eps`.
pub fn classify_regime(n: f64, params: &FlowParams, eps: f64) -> Result<Regime> {
    if !(n > 0.0) {
        return Err(Error::InvalidState { n });
    }
    let j = params.current();
    Ok(if (n - j).abs() <= eps {
        Regime::Sonic
    } else if n < j {
        Regime::Supersonic
    } else {
        Regime::Subsonic
    })
}

/// A point of a steady solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub n: f64,
    pub e: f64,
}

impl State {
    pub fn new(x: f64, n: f64, e: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::InvalidState { n });
        }
        Ok(Self { x, n, e })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SonicRoot {
    Plus,
    Minus,
}

/// Limiting slope `dẼ/dn` at the sonic point:
/// `k± = ½(α/J ± √((α/J)² + 8(J − b₀)/J²))`.
pub fn sonic_slope_k(params: &FlowParams, b0: f64, root: SonicRoot) -> Result<f64> {
    let j = params.current();
    if !(b0 > 0.0 && b0 < j) {
        return Err(Error::Domain(format!(
            "sonic slope needs supersonic doping 0 < b0 < J, got b0 = {b0}, J = {j}"
        )));
    }
    let a = params.alpha() / j;
    let disc = (a * a + 8.0 * (j - b0) / (j * j)).sqrt();
    Ok(match root {
        SonicRoot::Plus => 0.5 * (a + disc),
        SonicRoot::Minus => 0.5 * (a - disc),
    })
}

/// First integral of the `α = 0` trajectory through `(J, 0)`:
/// `g(n) = 2n − 2b ln n + 2J²/n − bJ²/n² + 2C₀`, `C₀ = b ln J + b/2 − 2J`.
///
/// Only meaningful for `α = 0`; `params.alpha()` is ignored.
pub fn g_of_n(n: f64, params: &FlowParams, b0: f64) -> f64 {
    let j = params.current();
    let c0 = b0 * j.ln() + 0.5 * b0 - 2.0 * j;
    2.0 * n - 2.0 * b0 * n.ln() + 2.0 * j * j / n - b0 * j * j / (n * n) + 2.0 * c0
}

pub fn g_prime(n: f64, params: &FlowParams, b0: f64) -> f64 {
    let j2 = params.current().powi(2);
    2.0 - 2.0 * b0 / n - 2.0 * j2 / (n * n) + 2.0 * b0 * j2 / n.powi(3)
}

pub fn g_second(n: f64, params: &FlowParams, b0: f64) -> f64 {
    let j2 = params.current().powi(2);
    2.0 * b0 / (n * n) + 4.0 * j2 / n.powi(3) - 6.0 * b0 * j2 / n.powi(4)
}

/// Third derivative of `g`, `h(n, b) = −(4/n³)(b + 3J²/n − 6bJ²/n²)`.
pub fn h_of(n: f64, params: &FlowParams, b0: f64) -> f64 {
    let j2 = params.current().powi(2);
    -4.0 / n.powi(3) * (b0 + 3.0 * j2 / n - 6.0 * b0 * j2 / (n * n))
}

/// Smooth factor of the `α = 0` field, `E(n) = (n − J)·W(n, b)`:
///
/// `W = √(2(J − b)/J² + ((n − J)/2)·∫₀¹ (1 − t)² h(J + t(n − J), b) dt)`
///
/// with the integral taken by 16-point Gauss–Legendre panels. Panels are
/// graded so that `m = J + t(n − J)` changes by at most a factor 1.5 across
/// each one, which keeps the `m⁻⁴` growth of `h` resolved near `n_*`.
pub fn w_of(n: f64, b0: f64, params: &FlowParams) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::InvalidState { n });
    }
    let j = params.current();
    let dn = n - j;
    let integrand = |t: f64| (1.0 - t).powi(2) * h_of(j + t * dn, params, b0);
    let panels = ((n / j).ln().abs() / 1.5f64.ln()).ceil().max(1.0) as usize;
    let ratio = (n / j).powf(1.0 / panels as f64);
    let mut remainder = 0.0;
    let (mut t0, mut m) = (0.0, j);
    for i in 1..=panels {
        m *= ratio;
        let t1 = if i == panels { 1.0 } else { (m - j) / dn };
        remainder += gauss16(t0, t1, integrand);
        t0 = t1;
    }
    let radicand = 2.0 * (j - b0) / (j * j) + 0.5 * dn * remainder;
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "W radicand {radicand:e} <= 0 at n = {n} (below the branch floor n_*)"
        )));
    }
    Ok(radicand.sqrt())
}

/// The zero `n_*` of `g` below the sonic line (`α = 0` branch floor), by
/// bisection to `1e−12`.
pub fn n_star_closed_form(params: &FlowParams, b0: f64) -> Result<f64> {
    let j = params.current();
    if !(b0 > 0.0 && b0 < j) {
        return Err(Error::Domain(format!("need 0 < b0 < J, got b0 = {b0}")));
    }
    let g = |n: f64| g_of_n(n, params, b0);
    // g ~ (n−J)² near J, so stay away from the double root
    let hi = j * (1.0 - 1e-3);
    let mut lo = 0.5 * j;
    while g(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Domain("no zero of g below J".into()));
        }
    }
    crate::numerics::bisect(g, lo, hi, 1e-12)
        .ok_or_else(|| Error::Domain("no sign change of g below J".into()))
}

/// Subsonic density with the same momentum flux: `𝒮(n) = J²/n`.
pub fn shock_map_s(n: f64, params: &FlowParams) -> Result<f64> {
    let j = params.current();
    if !(n > 0.0) {
        return Err(Error::InvalidState { n });
    }
    if n >= j {
        return Err(Error::EntropyViolation { n, j });
    }
    Ok(j * j / n)
}

/// The other density with the same momentum flux, `J²/n`, on either side
/// of the sonic line. Restricted to supersonic `n` this is `𝒮`.
pub fn flux_partner(n: f64, params: &FlowParams) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::InvalidState { n });
    }
    let j = params.current();
    Ok(j * j / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhResiduals {
    pub flux: f64,
    pub field: f64,
}

/// Rankine–Hugoniot defects across a jump at a common `x`.
pub fn rh_residuals(left: &State, right: &State, params: &FlowParams) -> RhResiduals {
    RhResiduals {
        flux: (params.momentum_flux(left.n) - params.momentum_flux(right.n)).abs(),
        field: (left.e - right.e).abs(),
    }
}

/// `𝔣(n) = (n² − J²)/n³`, the coefficient of `n_x` in the divergence form
/// of the density equation.
pub fn desingularizing_factor_f(n: f64, params: &FlowParams) -> f64 {
    let j = params.current();
    (n * n - j * j) / n.powi(3)
}

/// A shock: supersonic `n_minus` jumps to subsonic `n_plus` at `x_s`, the
/// field is continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub x_s: f64,
    pub n_minus: f64,
    pub n_plus: f64,
    pub e_value: f64,
    pub rh_residual: f64,
    pub entropy_ok: bool,
}

impl JumpRecord {
    pub fn new(x_s: f64, n_minus: f64, n_plus: f64, e_value: f64, params: &FlowParams) -> Self {
        let j = params.current();
        Self {
            x_s,
            n_minus,
            n_plus,
            e_value,
            rh_residual: (params.momentum_flux(n_minus) - params.momentum_flux(n_plus)).abs(),
            entropy_ok: 0.0 < n_minus && n_minus < j && j < n_plus,
        }
    }

    /// Entropy-jump from `n_minus` through the closed-form map.
    pub fn from_supersonic(x_s: f64, n_minus: f64, e_value: f64, params: &FlowParams) -> Result<Self> {
        let n_plus = shock_map_s(n_minus, params)?;
        Ok(Self::new(x_s, n_minus, n_plus, e_value, params))
    }

    /// `(J − n⁻, n⁺ − J)`.
    pub fn entropy_margins(&self, params: &FlowParams) -> (f64, f64) {
        let j = params.current();
        (j - self.n_minus, self.n_plus - j)
    }

    pub fn residuals(&self, params: &FlowParams) -> RhResiduals {
        rh_residuals(
            &State { x: self.x_s, n: self.n_minus, e: self.e_value },
            &State { x: self.x_s, n: self.n_plus, e: self.e_value },
            params,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(alpha: f64) -> FlowParams {
        FlowParams::new(1.0, alpha, 1.0).unwrap()
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(FlowParams::new(0.0, 0.0, 1.0).is_err());
        assert!(FlowParams::new(1.0, -1.0, 1.0).is_err());
        assert!(FlowParams::new(1.0, 0.0, 0.0).is_err());
        assert!(FlowParams::with_tau(1.0, 0.0, 1.0).is_err());
        assert_eq!(FlowParams::with_tau(1.0, f64::INFINITY, 1.0).unwrap().alpha(), 0.0);
        assert_eq!(FlowParams::with_tau(1.0, 4.0, 1.0).unwrap().alpha(), 0.25);
    }

    #[test]
    fn regimes() {
        let p = unit(0.0);
        assert_eq!(classify_regime(0.5, &p, 0.0).unwrap(), Regime::Supersonic);
        assert_eq!(classify_regime(1.0, &p, 0.0).unwrap(), Regime::Sonic);
        assert_eq!(classify_regime(2.0, &p, 0.0).unwrap(), Regime::Subsonic);
        assert_eq!(classify_regime(1.0 + 1e-10, &p, 1e-9).unwrap(), Regime::Sonic);
        assert!(matches!(classify_regime(0.0, &p, 0.0), Err(Error::InvalidState { .. })));
        assert!(classify_regime(-1.0, &p, 0.0).is_err());
    }

    #[test]
    fn sonic_slopes() {
        let k = sonic_slope_k(&unit(0.0), 0.5, SonicRoot::Plus).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
        // α = 0 cross-check against W(J, b) = √(2(J − b)/J²)
        assert!((k - (2.0 * 0.5_f64).sqrt()).abs() < 1e-15);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let kp = sonic_slope_k(&unit(1.0), 0.5, SonicRoot::Plus).unwrap();
        let km = sonic_slope_k(&unit(1.0), 0.5, SonicRoot::Minus).unwrap();
        assert!((kp - golden).abs() < 1e-12);
        assert!((km - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((kp * km + 2.0 * 0.5).abs() < 1e-12);
        assert!(matches!(sonic_slope_k(&unit(0.0), 1.0, SonicRoot::Plus), Err(Error::Domain(_))));
        assert!(sonic_slope_k(&unit(0.0), 1.5, SonicRoot::Plus).is_err());
    }

    #[test]
    fn g_values_and_sonic_taylor_data() {
        let p = unit(0.0);
        assert!(g_of_n(1.0, &p, 0.5).abs() < 1e-15);
        assert!((g_of_n(2.0, &p, 0.5) - (1.375 - 2f64.ln())).abs() < 1e-14);
        assert!(g_prime(1.0, &p, 0.5).abs() < 1e-15);
        assert!((g_second(1.0, &p, 0.5) - 4.0 * 0.5).abs() < 1e-14);

        // numerical differentiation of g reproduces the stated Taylor data
        let g = |n: f64| g_of_n(n, &p, 0.5);
        let h = 1e-3;
        let d1 = crate::numerics::central_d1(g, 1.0, h);
        let d2 = crate::numerics::central_d2(g, 1.0, h);
        let gp = |n: f64| g_second(n, &p, 0.5);
        let d3 = crate::numerics::central_d1(gp, 1.0, h);
        assert!(d1.abs() < 1e-10);
        assert!((d2 - 2.0).abs() / 2.0 < 1e-5);
        let h1 = h_of(1.0, &p, 0.5);
        assert!((d3 - h1).abs() / h1.abs() < 1e-5);
    }

    #[test]
    fn g_matches_quadrature_of_trajectory_equation() {
        // E dE = (n² − J²)(n − b)/n³ dn, integrated from J
        let p = unit(0.0);
        let b = 0.5;
        let integrand = |n: f64| (n * n - 1.0) * (n - b) / n.powi(3);
        let pieces = 64;
        let quad: f64 = (0..pieces)
            .map(|i| {
                let a = 1.0 + i as f64 / pieces as f64;
                crate::numerics::gauss16(a, a + 1.0 / pieces as f64, integrand)
            })
            .sum();
        assert!((2.0 * quad - g_of_n(2.0, &p, b)).abs() < 1e-13);
        assert!((2.0 * quad - 0.681_852_819_440_054_7).abs() < 1e-12);
    }

    #[test]
    fn w_values() {
        let p = unit(0.0);
        assert!((w_of(1.0, 0.5, &p).unwrap() - 1.0).abs() < 1e-14);
        let w2 = w_of(2.0, 0.5, &p).unwrap();
        assert!((w2 - g_of_n(2.0, &p, 0.5).sqrt()).abs() < 1e-12);
        assert!((w2 - 0.825_743).abs() < 1e-6);
        let n_star = n_star_closed_form(&p, 0.5).unwrap();
        assert!(matches!(w_of(n_star - 0.01, 0.5, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn n_star_is_zero_of_g() {
        let p = unit(0.0);
        let ns = n_star_closed_form(&p, 0.5).unwrap();
        assert!(ns > 0.0 && ns < 1.0);
        assert!(g_of_n(ns, &p, 0.5).abs() < 1e-10);
        assert!((ns - 0.372_924_080_278_554).abs() < 1e-11);
    }

    #[test]
    fn empirical_w_bounds_on_compact_set() {
        // W stays bounded away from 0 and ∞ on (n_* + margin, M) × (ε, J − ε)
        let p = unit(0.0);
        let (mut lo, mut hi) = (f64::MAX, 0.0_f64);
        for bi in 1..10 {
            let b = 0.1 * bi as f64;
            let ns = n_star_closed_form(&p, b).unwrap();
            for ni in 0..=40 {
                let n = ns + 0.02 + (3.0 - ns - 0.02) * ni as f64 / 40.0;
                let w = w_of(n, b, &p).unwrap();
                lo = lo.min(w);
                hi = hi.max(w);
            }
        }
        assert!(lo > 0.0 && hi < 10.0, "W in [{lo}, {hi}]");
    }

    #[test]
    fn shock_map_examples() {
        let p = unit(0.0);
        assert!((shock_map_s(0.5, &p).unwrap() - 2.0).abs() < 1e-15);
        assert!((shock_map_s(1.0 - 1e-12, &p).unwrap() - 1.0).abs() < 1e-11);
        assert!(matches!(shock_map_s(1.0, &p), Err(Error::EntropyViolation { .. })));
        assert!(shock_map_s(1.5, &p).is_err());
    }

    #[test]
    fn rh_examples() {
        let p = unit(0.0);
        let l = State { x: 0.3, n: 0.5, e: 0.7 };
        let r = State { x: 0.3, n: 2.0, e: 0.7 };
        let res = rh_residuals(&l, &r, &p);
        assert!(res.flux < 1e-15 && res.field == 0.0);
        let same = rh_residuals(&l, &l, &p);
        assert_eq!((same.flux, same.field), (0.0, 0.0));
        let off = rh_residuals(
            &State { x: 0.0, n: 0.5, e: 0.3 },
            &State { x: 0.0, n: 1.5, e: 0.3 },
            &p,
        );
        assert!((off.flux - (2.5 - (1.5 + 1.0 / 1.5))).abs() < 1e-15);
        assert!((off.flux - 0.333_333).abs() < 1e-6);
    }

    #[test]
    fn factor_f() {
        let p = unit(0.0);
        assert_eq!(desingularizing_factor_f(1.0, &p), 0.0);
        assert!((desingularizing_factor_f(2.0, &p) - 0.375).abs() < 1e-15);
        assert!((desingularizing_factor_f(0.5, &p) + 6.0).abs() < 1e-15);
    }

    #[test]
    fn jump_record_entropy() {
        let p = unit(1.0);
        let jr = JumpRecord::from_supersonic(0.2, 0.5, 0.1, &p).unwrap();
        assert!(jr.entropy_ok);
        assert!(jr.rh_residual < 1e-15);
        let bad = JumpRecord::new(0.2, 0.5, 2.1, 0.1, &p);
        assert!(bad.entropy_ok);
        assert!((bad.rh_residual - (2.1 + 1.0 / 2.1 - 2.5)).abs() < 1e-14);
        assert!(!JumpRecord::new(0.2, 1.2, 1.5, 0.0, &p).entropy_ok);
    }

    #[test]
    fn monotone_cubic_preserves_shape() {
        let d = DopingProfile::tabulated(vec![0.0, 0.3, 0.6, 1.0], vec![0.4, 0.45, 0.45, 0.6])
            .unwrap();
        let mut prev = d.eval(0.0);
        for i in 1..=200 {
            let x = i as f64 / 200.0;
            let v = d.eval(x);
            assert!(v >= prev - 1e-15, "non-monotone at {x}");
            assert!((0.4..=0.6).contains(&v));
            prev = v;
        }
        // flat segment stays flat
        assert!((d.eval(0.45) - 0.45).abs() < 1e-15);
        let (lo, hi) = d.bounds(1.0);
        assert_eq!((lo, hi), (0.4, 0.6));
        assert!(d.is_supersonic(&unit(0.0)));
        assert!(DopingProfile::tabulated(vec![0.0, 0.0], vec![0.1, 0.2]).is_err());
        assert!(DopingProfile::tabulated(vec![0.0, 1.0], vec![0.1, -0.2]).is_err());
    }

    #[test]
    fn perturbed_profiles() {
        let base = DopingProfile::constant(0.5).unwrap();
        let one = DopingProfile::constant(1.0).unwrap();
        assert_eq!(base.perturbed(&one, 1e-3).unwrap().as_constant(), Some(0.501));
        let bump = DopingProfile::tabulated(vec![0.0, 0.5, 1.0], vec![1e-9, 1.0, 1e-9]).unwrap();
        let p = base.perturbed(&bump, 0.01).unwrap();
        assert!((p.eval(0.5) - 0.51).abs() < 1e-15);
        assert!((p.eval(0.0) - 0.5).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn flux_symmetry_of_jump_map(n in 1e-3_f64..0.999, j in 0.1_f64..10.0) {
            let p = FlowParams::new(j, 0.0, 1.0).unwrap();
            let nn = n * j;
            let s = shock_map_s(nn, &p).unwrap();
            prop_assert!(s > j);
            let defect = p.momentum_flux(s) - p.momentum_flux(nn);
            prop_assert!(defect.abs() <= 1e-14 * p.momentum_flux(nn));
            // involution
            prop_assert!((flux_partner(s, &p).unwrap() - nn).abs() <= 1e-14 * nn);
        }

        #[test]
        fn vieta_on_sonic_slopes(j in 0.2_f64..5.0, bf in 0.01_f64..0.99, alpha in 0.0_f64..5.0) {
            let p = FlowParams::new(j, alpha, 1.0).unwrap();
            let b = bf * j;
            let kp = sonic_slope_k(&p, b, SonicRoot::Plus).unwrap();
            let km = sonic_slope_k(&p, b, SonicRoot::Minus).unwrap();
            prop_assert!(kp > 0.0 && km < 0.0);
            let prod = -2.0 * (j - b) / (j * j);
            prop_assert!((kp * km - prod).abs() <= 1e-12 * (1.0 + prod.abs()));
            prop_assert!((kp + km - alpha / j).abs() <= 1e-12 * (1.0 + alpha / j));
        }

        #[test]
        fn factorization_of_first_integral(t in 0.0_f64..1.0, bf in 0.1_f64..0.9) {
            let p = unit(0.0);
            let ns = n_star_closed_form(&p, bf).unwrap();
            let n = ns + 0.02 + t * (3.0 - ns - 0.02);
            let e = (n - 1.0).signum() * g_of_n(n, &p, bf).max(0.0).sqrt();
            let w = w_of(n, bf, &p).unwrap();
            prop_assert!((e - (n - 1.0) * w).abs() < 1e-8 * (1.0 + (n - 1.0).abs()));
        }
    }
}
