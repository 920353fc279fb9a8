//! Degree bounds for polynomial approximations of sign(x - s), and explicit
//! Chebyshev constructions of the Gaussian and erf approximants.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::specfun::{bessel_i_scaled, erf};

use std::f64::consts::{E, PI};
use std::io::Write;

/// Upper end of the admissible ε range, 2 sqrt(2/(eπ)).
pub fn eps_max() -> f64 {
    2.0 * (2.0 / (E * PI)).sqrt()
}

fn check(delta: f64, eps: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 2.0) {
        return domain(format!("delta = {delta} outside (0, 2]"));
    }
    if !(eps > 0.0 && eps < eps_max()) {
        return domain(format!("eps = {eps} outside (0, {})", eps_max()));
    }
    Ok(())
}

fn log_term(eps: f64) -> f64 {
    (8.0 / (PI * eps * eps)).ln()
}

/// k = (√2/Δ) ln^{1/2}(8/(πε²))
pub fn k_scale(delta: f64, eps: f64) -> f64 {
    2f64.sqrt() / delta * log_term(eps).sqrt()
}

/// ⌈(4/Δ²) ln(8/(πε²)) e²⌉
pub fn trunc_t(delta: f64, eps: f64) -> u64 {
    (4.0 / (delta * delta) * log_term(eps) * E * E).ceil() as u64
}

pub fn degree_bound(delta: f64, eps: f64) -> Result<u64> {
    check(delta, eps)?;
    let t = trunc_t(delta, eps) as f64;
    let k = k_scale(delta, eps);
    let inner = (64.0 * k / (3.0 * PI.sqrt() * eps)).ln();
    let mut n = ((8.0 * t * inner).sqrt() + 1.0).ceil() as u64;
    if n % 2 == 0 {
        n += 1;
    }
    Ok(n)
}

/// (8e/Δ) sqrt(1 + 1/e) ln(64√2/(3√π Δ ε))
pub fn degree_upper(delta: f64, eps: f64) -> Result<f64> {
    check(delta, eps)?;
    Ok(8.0 * E / delta * (1.0 + 1.0 / E).sqrt()
        * (64.0 * 2f64.sqrt() / (3.0 * PI.sqrt() * delta * eps)).ln())
}

/// Degree of the Gaussian approximant e^{-(kx)²} at accuracy ε.
pub fn gauss_degree(k: f64, eps: f64) -> u64 {
    let t = (2.0 / eps).ln().max(k * k * E * E / 2.0).ceil();
    (8.0 * t * (4.0 / eps).ln()).sqrt().ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignPolyParams {
    pub delta: f64,
    pub eps: f64,
    pub shift: f64,
    pub k_scale: f64,
    pub degree: u64,
    pub trunc_t: u64,
}

impl SignPolyParams {
    pub fn new(delta: f64, eps: f64, shift: f64) -> Result<Self> {
        check(delta, eps)?;
        if !(shift.abs() + delta / 2.0 <= 1.0) {
            return domain(format!("gap [s - Δ/2, s + Δ/2] with s = {shift}, Δ = {delta} leaves [-1, 1]"));
        }
        Ok(Self {
            delta,
            eps,
            shift,
            k_scale: k_scale(delta, eps),
            degree: degree_bound(delta, eps)?,
            trunc_t: trunc_t(delta, eps),
        })
    }
}

/// Σ a_j T_j(x) on [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    pub coefficients: Vec<f64>,
}

impl ChebSeries {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let a = &self.coefficients;
        if a.is_empty() {
            return 0.0;
        }
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in a[1..].iter().rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + a[0]
    }

    /// Σ a_j cos(j arccos x), for cross-checking `eval`.
    pub fn eval_direct(&self, x: f64) -> f64 {
        let th = x.clamp(-1.0, 1.0).acos();
        self.coefficients.iter().enumerate().map(|(j, a)| a * (j as f64 * th).cos()).sum()
    }

    /// Antiderivative vanishing at 0.
    pub fn integral(&self) -> ChebSeries {
        let c = &self.coefficients;
        let n = c.len();
        let at = |j: usize| if j < n { c[j] } else { 0.0 };
        let mut b = vec![0.0; n + 1];
        if n > 0 {
            b[1] = at(0) - at(2) / 2.0;
        }
        for (j, slot) in b.iter_mut().enumerate().skip(2) {
            *slot = (at(j - 1) - at(j + 1)) / (2.0 * j as f64);
        }
        // T_j(0) = cos(jπ/2)
        let mut f0 = 0.0;
        for (j, bj) in b.iter().enumerate().skip(1) {
            match j % 4 {
                0 => f0 += bj,
                2 => f0 -= bj,
                _ => {}
            }
        }
        b[0] = -f0;
        ChebSeries { coefficients: b }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> crate::error::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["order", "coefficient"])?;
        for (j, a) in self.coefficients.iter().enumerate() {
            w.write_record([j.to_string(), a.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Chebyshev series of e^{-(kx)²} of degree ≤ n (even orders only).
pub fn build_gauss_poly(k: f64, n: usize) -> ChebSeries {
    let lambda = k * k / 2.0;
    let jmax = n / 2;
    let iv = bessel_i_scaled(jmax, lambda);
    let mut a = vec![0.0; 2 * jmax + 1];
    a[0] = iv[0];
    for j in 1..=jmax {
        let s = if j % 2 == 0 { 2.0 } else { -2.0 };
        a[2 * j] = s * iv[j];
    }
    ChebSeries { coefficients: a }
}

/// Degree-n approximant of sign(x - s) outside the gap |x - s| < Δ/2.
pub fn build_sign_poly(params: &SignPolyParams) -> ChebSeries {
    let n = params.degree as usize;
    let k = params.k_scale;
    if params.shift == 0.0 {
        let g = build_gauss_poly(k, n - 1);
        let mut p = g.integral();
        let scale = 2.0 * k / PI.sqrt();
        for a in p.coefficients.iter_mut() {
            *a *= scale;
        }
        p.coefficients.truncate(n + 1);
        p
    } else {
        chebyshev_interpolant(|x| erf(k * (x - params.shift)), n)
    }
}

/// Interpolant at the n+1 first-kind Chebyshev points.
pub fn chebyshev_interpolant(f: impl Fn(f64) -> f64, n: usize) -> ChebSeries {
    let m = n + 1;
    let th: Vec<f64> = (0..m).map(|i| PI * (i as f64 + 0.5) / m as f64).collect();
    let fx: Vec<f64> = th.iter().map(|t| f(t.cos())).collect();
    let a = (0..m)
        .map(|j| {
            let s: f64 = th.iter().zip(&fx).map(|(t, v)| v * (j as f64 * t).cos()).sum();
            let s = 2.0 * s / m as f64;
            if j == 0 {
                s / 2.0
            } else {
                s
            }
        })
        .collect();
    ChebSeries { coefficients: a }
}

/// max |p(x) - sign(x - s)| over a uniform grid of [-1, 1] minus the gap,
/// plus the gap endpoints.
pub fn sup_error_sign(p: &ChebSeries, delta: f64, shift: f64, grid: usize) -> f64 {
    let lo = shift - delta / 2.0;
    let hi = shift + delta / 2.0;
    let mut worst: f64 = 0.0;
    let mut probe = |x: f64| {
        let e = (p.eval(x) - (x - shift).signum()).abs();
        worst = worst.max(e);
    };
    for i in 0..grid {
        let x = -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
        if x <= lo || x >= hi {
            probe(x);
        }
    }
    for x in [lo, hi, -1.0, 1.0] {
        if (-1.0..=1.0).contains(&x) {
            probe(x);
        }
    }
    worst
}

/// max |p(x) - f(x)| over a uniform grid of [-1, 1].
pub fn sup_error(p: &ChebSeries, f: impl Fn(f64) -> f64, grid: usize) -> f64 {
    (0..grid)
        .map(|i| -1.0 + 2.0 * i as f64 / (grid - 1) as f64)
        .map(|x| (p.eval(x) - f(x)).abs())
        .fold(0.0, f64::max)
}
