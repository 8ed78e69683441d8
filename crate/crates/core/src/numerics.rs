//! Small numerical helpers: Gauss–Legendre rules, finite-difference
//! stencils and bracketing root finders.

use std::sync::OnceLock;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on `P_order` from the Chebyshev-like
/// initial guesses; converges to machine precision in a handful of steps.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z =
            (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(order, z);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// 16-point rule mapped to `[0, 1]`: `(t_i, w_i)` with `Σ w_i = 1`.
pub fn gauss16_unit() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(16);
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| (0.5 * (xi + 1.0), 0.5 * wi))
            .collect()
    })
}

/// `∫_a^b f` with the 16-point rule.
pub fn gauss16<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let len = b - a;
    gauss16_unit()
        .iter()
        .map(|&(t, w)| w * f(a + t * len))
        .sum::<f64>()
        * len
}

/// Fourth-order central first derivative of `f` at `x`.
pub fn central_d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative of `f` at `x`.
pub fn central_d2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Fourth-order one-sided first derivative. `h < 0` gives the backward
/// (left-sided) stencil.
pub fn one_sided_d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-25.0 * f(x) + 48.0 * f(x + h) - 36.0 * f(x + 2.0 * h) + 16.0 * f(x + 3.0 * h)
        - 3.0 * f(x + 4.0 * h))
        / (12.0 * h)
}

/// Fourth-order one-sided second derivative (six points). Sign of `h`
/// selects the side.
pub fn one_sided_d2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (45.0 * f(x) - 154.0 * f(x + h) + 214.0 * f(x + 2.0 * h) - 156.0 * f(x + 3.0 * h)
        + 61.0 * f(x + 4.0 * h)
        - 10.0 * f(x + 5.0 * h))
        / (12.0 * h * h)
}

/// First derivative of uniformly spaced samples, fourth order everywhere
/// (one-sided stencils at the two ends of the grid).
pub fn grid_d1(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "need at least five samples for fourth-order stencils");
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-values[i + 2] + 8.0 * values[i + 1] - 8.0 * values[i - 1] + values[i - 2])
                    / (12.0 * h)
            } else if i < 2 {
                let v = |k: usize| values[i + k];
                (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4)) / (12.0 * h)
            } else {
                let v = |k: usize| values[i - k];
                -(-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4))
                    / (12.0 * h)
            }
        })
        .collect()
}

/// Second derivative of uniformly spaced samples, fourth order everywhere.
pub fn grid_d2(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 6, "need at least six samples for fourth-order stencils");
    let h2 = h * h;
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-values[i + 2] + 16.0 * values[i + 1] - 30.0 * values[i] + 16.0 * values[i - 1]
                    - values[i - 2])
                    / (12.0 * h2)
            } else {
                let v = |k: usize| if i < 2 { values[i + k] } else { values[i - k] };
                (45.0 * v(0) - 154.0 * v(1) + 214.0 * v(2) - 156.0 * v(3) + 61.0 * v(4)
                    - 10.0 * v(5))
                    / (12.0 * h2)
            }
        })
        .collect()
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Uniform grid of `count` points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { b } else { a + h * i as f64 })
                .collect()
        }
    }
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`; stops when the
/// bracket is narrower than `xtol` or `f` hits zero.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss16_integrates_polynomials_exactly() {
        // degree 31 is the exactness limit of a 16-point rule
        let exact = 1.0 / 32.0;
        let got = gauss16(0.0, 1.0, |t| t.powi(31));
        assert!((got - exact).abs() < 1e-15, "{got}");
        let w: f64 = gauss16_unit().iter().map(|p| p.1).sum();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stencils_are_fourth_order() {
        let f = |x: f64| x.sin();
        for h in [1e-2, 5e-3] {
            assert!((central_d1(f, 0.3, h) - 0.3_f64.cos()).abs() < 1e-9);
            assert!((one_sided_d1(f, 0.3, -h) - 0.3_f64.cos()).abs() < 1e-8);
            assert!((central_d2(f, 0.3, h) + 0.3_f64.sin()).abs() < 1e-8);
            assert!((one_sided_d2(f, 0.3, h) + 0.3_f64.sin()).abs() < 1e-6);
        }
        let xs = linspace(0.0, 1.0, 101);
        let ys: Vec<f64> = xs.iter().map(|&x| x.powi(4)).collect();
        let d1 = grid_d1(&ys, 0.01);
        let d2 = grid_d2(&ys, 0.01);
        for (i, &x) in xs.iter().enumerate() {
            assert!((d1[i] - 4.0 * x.powi(3)).abs() < 1e-10);
            assert!((d2[i] - 12.0 * x * x).abs() < 1e-7);
        }
    }

    #[test]
    fn bisect_finds_root_and_rejects_same_sign() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
