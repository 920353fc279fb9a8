//! Lambert W (real branches 0 and -1), exponentially scaled modified Bessel
//! functions of integer order, and erf.

use serde::Serialize;

use crate::error::{domain, Result};

const E: f64 = std::f64::consts::E;
// e - E, so that 1 + e*x can be formed without losing the branch-point digits.
const E_LO: f64 = 1.445_646_891_729_250_2e-16;
const INV_E: f64 = 1.0 / E;
const DOMAIN_TOL: f64 = 1e-14;
const MAX_ITER: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchedSolveResult {
    pub value: f64,
    /// |w e^w - x| after convergence.
    pub residual: f64,
    pub iterations: u32,
}

/// Principal branch W0.
pub fn lambert_w0(x: f64) -> Result<f64> {
    lambert_w0_detail(x).map(|r| r.value)
}

/// Lower branch W-1 on [-1/e, 0).
pub fn lambert_w_m1(x: f64) -> Result<f64> {
    lambert_w_m1_detail(x).map(|r| r.value)
}

// sqrt(2(1 + e x)), clamped at the branch point
fn branch_p(x: f64) -> f64 {
    let q = E.mul_add(x, 1.0) + E_LO * x;
    (2.0 * q.max(0.0)).sqrt()
}

// W = -1 + s p - p^2/3 + 11/72 p^3 - ... with s = +1 for W0, -1 for W-1
fn branch_series(p: f64, s: f64) -> f64 {
    let q = s * p;
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, &c| acc * q + c)
}

fn residual_of(w: f64, x: f64) -> f64 {
    if x > 1.0 {
        // log space: x * |exp(w + ln w - ln x) - 1|
        x * (w + w.ln() - x.ln()).exp_m1().abs()
    } else {
        (w * w.exp() - x).abs()
    }
}

fn halley(mut w: f64, x: f64) -> (f64, u32) {
    let mut it = 0;
    while it < MAX_ITER {
        it += 1;
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            break;
        }
    }
    (w, it)
}

// Halley on g(w) = w + ln|w| - l, used when w e^w would be badly scaled.
fn halley_log(mut w: f64, l: f64) -> (f64, u32) {
    let mut it = 0;
    while it < MAX_ITER {
        it += 1;
        let g = w + w.abs().ln() - l;
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let step = g / (g1 - g * g2 / (2.0 * g1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            break;
        }
    }
    (w, it)
}

pub fn lambert_w0_detail(x: f64) -> Result<BranchedSolveResult> {
    if x.is_nan() || x < -INV_E - DOMAIN_TOL {
        return domain(format!("lambert_w0: x = {x} below -1/e"));
    }
    if x == 0.0 {
        return Ok(BranchedSolveResult { value: 0.0, residual: 0.0, iterations: 0 });
    }
    if x.is_infinite() {
        return Ok(BranchedSolveResult { value: f64::INFINITY, residual: 0.0, iterations: 0 });
    }
    let (w, iterations) = if x < 0.0 {
        let p = branch_p(x);
        let s = branch_series(p, 1.0);
        if p < 1e-3 {
            (s, 0)
        } else if x < -0.25 {
            halley(s, x)
        } else {
            halley(x * (1.0 - x), x)
        }
    } else if x > 1e6 {
        let l = x.ln();
        let ll = l.ln();
        halley_log(l - ll + ll / l, l)
    } else if x > E {
        let l = x.ln();
        let ll = l.ln();
        halley(l - ll + ll / l, x)
    } else {
        halley(x.ln_1p() * 0.8, x)
    };
    Ok(BranchedSolveResult { value: w, residual: residual_of(w, x), iterations })
}

/// W0 of exp(ln_x), for arguments that overflow f64.
pub fn lambert_w0_ln(ln_x: f64) -> Result<f64> {
    if ln_x.is_nan() {
        return domain("lambert_w0_ln: NaN");
    }
    if ln_x < 700.0 {
        return lambert_w0(ln_x.exp());
    }
    let ll = ln_x.ln();
    Ok(halley_log(ln_x - ll + ll / ln_x, ln_x).0)
}

pub fn lambert_w_m1_detail(x: f64) -> Result<BranchedSolveResult> {
    if x.is_nan() || x < -INV_E - DOMAIN_TOL || x >= 0.0 {
        return domain(format!("lambert_w_m1: x = {x} outside [-1/e, 0)"));
    }
    let p = branch_p(x);
    let (w, iterations) = if p < 1e-3 {
        (branch_series(p, -1.0), 0)
    } else if x < -0.25 {
        halley(branch_series(p, -1.0), x)
    } else if x > -1e-6 {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        halley_log(l1 - l2 + l2 / l1, l1)
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        halley(l1 - l2 + l2 / l1, x)
    };
    let w = w.min(-1.0);
    Ok(BranchedSolveResult { value: w, residual: residual_of(w, x), iterations })
}

/// W-1 of -exp(ln_neg_x), for arguments that underflow f64.
pub fn lambert_w_m1_ln(ln_neg_x: f64) -> Result<f64> {
    if ln_neg_x.is_nan() || ln_neg_x > -1.0 + DOMAIN_TOL {
        return domain(format!("lambert_w_m1_ln: ln(-x) = {ln_neg_x} above -1"));
    }
    if ln_neg_x > -700.0 {
        return lambert_w_m1((-ln_neg_x.exp()).max(-INV_E));
    }
    let l2 = (-ln_neg_x).ln();
    Ok(halley_log(ln_neg_x - l2 + l2 / ln_neg_x, ln_neg_x).0)
}

/// `[e^-λ I_0(λ), ..., e^-λ I_order_max(λ)]`.
pub fn bessel_i_scaled(order_max: usize, lambda: f64) -> Vec<f64> {
    assert!(lambda >= 0.0, "bessel_i_scaled: negative lambda");
    let mut out = vec![0.0; order_max + 1];
    if lambda == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if lambda <= 2.0 {
        bessel_series(&mut out, lambda);
        return out;
    }
    // Miller downward recurrence I_{n-1} = (2n/λ) I_n + I_{n+1}
    let start = order_max + 32 + (10.0 * lambda.sqrt()).ceil() as usize;
    let mut hi = 0.0f64;
    let mut cur = 1e-30f64;
    let mut sum = 0.0f64;
    for n in (1..=start).rev() {
        if n <= order_max {
            out[n] = cur;
        }
        sum += 2.0 * cur;
        let next = (2.0 * n as f64 / lambda) * cur + hi;
        hi = cur;
        cur = next;
        if cur > 1e250 {
            cur *= 1e-250;
            hi *= 1e-250;
            sum *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    out[0] = cur;
    sum += cur;
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

fn bessel_series(out: &mut [f64], lambda: f64) {
    let half = 0.5 * lambda;
    let q = half * half;
    let scale = (-lambda).exp();
    let mut lead = 1.0; // (λ/2)^n / n!
    for (n, slot) in out.iter_mut().enumerate() {
        if n > 0 {
            lead *= half / n as f64;
        }
        if lead == 0.0 {
            break;
        }
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..60 {
            term *= q / (k as f64 * (n + k) as f64);
            acc += term;
            if term < 1e-18 * acc {
                break;
            }
        }
        *slot = scale * lead * acc;
    }
}

/// erf, odd by construction.
pub fn erf(x: f64) -> f64 {
    libm::erf(x.abs()).copysign(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn w0_trivial_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(-INV_E).unwrap() + 1.0).abs() < 1e-7);
    }

    #[test]
    fn w0_large_matches_bisection() {
        let x = 2.7e10;
        let w = lambert_w0(x).unwrap();
        let oracle = bisect(|y| y + y.ln() - x.ln(), 20.0, 30.0);
        assert!((w - oracle).abs() < 1e-12 * oracle);
        assert!(((w * w.exp() - x) / x).abs() < 1e-12);
    }

    #[test]
    fn wm1_matches_bisection() {
        for &x in &[-1e-6, -0.1, -0.3, -0.36] {
            let w = lambert_w_m1(x).unwrap();
            let oracle = bisect(|y| y * y.exp() - x, -40.0, -1.0);
            assert!((w - oracle).abs() < 1e-9, "x={x}: {w} vs {oracle}");
            assert!(w <= -1.0);
        }
        assert!((lambert_w_m1(-INV_E).unwrap() + 1.0).abs() < 1e-7);
    }

    #[test]
    fn domains() {
        assert!(lambert_w0(-0.5).is_err());
        assert!(lambert_w_m1(0.0).is_err());
        assert!(lambert_w_m1(0.1).is_err());
        assert!(lambert_w_m1(-0.4).is_err());
        assert!(lambert_w0(-INV_E - 1e-15).is_ok());
    }

    #[test]
    fn w0_huge_and_log_form() {
        let w = lambert_w0(1e300).unwrap();
        let r = lambert_w0_detail(1e300).unwrap();
        assert!(r.residual <= 1e-12 * 1e300);
        let wl = lambert_w0_ln(1e300f64.ln()).unwrap();
        assert!((w - wl).abs() < 1e-12 * w);
        let wl = lambert_w0_ln(5000.0).unwrap();
        assert!((wl + wl.ln() - 5000.0).abs() < 1e-12 * 5000.0);
    }

    #[test]
    fn near_branch_point() {
        for k in 1..40 {
            let x = -INV_E + 10f64.powi(-k / 3 - 1);
            if x >= 0.0 {
                continue;
            }
            let a = lambert_w0_detail(x).unwrap();
            let b = lambert_w_m1_detail(x).unwrap();
            assert!(a.residual <= 1e-12, "w0 x={x} r={}", a.residual);
            assert!(b.residual <= 1e-12, "wm1 x={x} r={}", b.residual);
            assert!(b.value <= -1.0 && a.value >= -1.0);
        }
    }

    #[test]
    fn wm1_log_form() {
        let a = lambert_w_m1_ln((1e-200f64).ln()).unwrap();
        let b = lambert_w_m1(-1e-200).unwrap();
        assert!((a - b).abs() < 1e-12 * b.abs());
        let w = lambert_w_m1_ln(-5000.0).unwrap();
        assert!((w + (-w).ln() + 5000.0).abs() < 1e-12 * 5000.0);
        assert!(lambert_w_m1_ln(-0.5).is_err());
    }

    #[test]
    fn bessel_trivial() {
        assert_eq!(bessel_i_scaled(0, 0.0), vec![1.0]);
        assert_eq!(bessel_i_scaled(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
    }

    fn bessel_power_series(n: usize, x: f64) -> f64 {
        // I_n(x) = sum_k (x/2)^{2k+n} / (k! (k+n)!)
        let mut total = 0.0;
        for k in 0..200 {
            let log_t = (2 * k + n) as f64 * (x / 2.0).ln()
                - ln_factorial(k)
                - ln_factorial(k + n);
            let t = log_t.exp();
            total += t;
            if k > 10 && t < 1e-20 * total {
                break;
            }
        }
        total * (-x).exp()
    }

    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn bessel_normalization_and_series_oracle() {
        let v = bessel_i_scaled(50, 10.0);
        let s: f64 = v[0] + 2.0 * v[1..].iter().sum::<f64>();
        assert!((s - 1.0).abs() < 1e-12);
        for n in [0usize, 1, 5, 10, 20] {
            let o = bessel_power_series(n, 10.0);
            assert!(((v[n] - o) / o).abs() < 1e-12, "n={n}: {} vs {o}", v[n]);
        }
        for w in v.windows(2) {
            assert!(w[0] > w[1] && w[1] >= 0.0);
        }
    }

    #[test]
    fn bessel_small_and_large_lambda() {
        for &lam in &[1e-6, 0.5, 1.9, 2.1, 50.0, 3000.0] {
            let v = bessel_i_scaled(400, lam);
            let s: f64 = v[0] + 2.0 * v[1..].iter().sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "lam={lam} sum={s}");
        }
        let a = bessel_i_scaled(5, 1.9);
        let b = bessel_i_scaled(5, 2.1);
        let o = bessel_power_series(3, 2.1);
        assert!(((b[3] - o) / o).abs() < 1e-12);
        assert!(a[3] < b[3]);
    }

    #[test]
    fn erf_values() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(40.0) - 1.0).abs() <= 1e-12);
        // Taylor oracle: erf(x) = 2/sqrt(pi) sum (-1)^n x^(2n+1)/(n!(2n+1))
        let x = 1.0f64;
        let mut term = x;
        let mut sum = 0.0;
        for n in 0..50 {
            sum += term / (2 * n + 1) as f64;
            term *= -x * x / (n + 1) as f64;
        }
        let oracle = sum * 2.0 / std::f64::consts::PI.sqrt();
        assert!((erf(1.0) - oracle).abs() <= 1e-12);
        for &x in &[0.1, 0.7, 2.3, 5.0] {
            assert_eq!(erf(-x), -erf(x));
        }
    }
}
