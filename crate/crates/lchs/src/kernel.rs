//! Kernel g(k) = 1 / (C_β (1 - ik) e^{(1+ik)^β}) and its constants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

use std::f64::consts::PI;

pub const BETA_MIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub beta: f64,
    pub c_beta: f64,
    pub b_beta: f64,
}

impl KernelParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return domain(format!("beta = {beta} must lie in (0, 1)"));
        }
        if beta < BETA_MIN {
            return domain(format!("beta = {beta} below supported minimum {BETA_MIN}"));
        }
        let c_beta = 2.0 * PI * (-(2f64.powf(beta))).exp();
        let n = (1.0 / beta).ceil() as u32;
        let fact: f64 = (1..=n).map(f64::from).product();
        let cos = (beta * PI / 2.0).cos();
        let b_beta = 2f64.powi(n as i32 + 1) * fact / (c_beta * cos.powi(n as i32));
        Ok(Self { beta, c_beta, b_beta })
    }

    /// cos(βπ/2)
    pub fn cos_half(&self) -> f64 {
        (self.beta * PI / 2.0).cos()
    }

    /// (1 + ik)^β, principal branch via polar form.
    pub fn power(&self, k: f64) -> Complex64 {
        let r = 1f64.hypot(k);
        let th = k.atan2(1.0);
        Complex64::from_polar(r.powf(self.beta), self.beta * th)
    }

    pub fn f(&self, k: f64) -> Complex64 {
        (-self.power(k)).exp() / self.c_beta
    }

    pub fn g(&self, k: f64) -> Complex64 {
        self.f(k) / Complex64::new(1.0, -k)
    }

    pub fn abs_g(&self, k: f64) -> f64 {
        (-self.power(k).re).exp() / (self.c_beta * 1f64.hypot(k))
    }

    /// Decay envelope e^{-|k|^β cos(βπ/2)/2} / (C_β sqrt(1+k²)).
    pub fn decay_envelope(&self, k: f64) -> f64 {
        (-0.5 * k.abs().powf(self.beta) * self.cos_half()).exp() / (self.c_beta * 1f64.hypot(k))
    }

    /// Upper bound on the two-sided tail mass of |g| beyond K.
    pub fn trunc_rhs(&self, k_cut: f64) -> f64 {
        self.b_beta / k_cut * (-0.5 * k_cut.powf(self.beta) * self.cos_half()).exp()
    }

    pub fn ln_trunc_rhs(&self, k_cut: f64) -> f64 {
        self.b_beta.ln() - k_cut.ln() - 0.5 * k_cut.powf(self.beta) * self.cos_half()
    }
}

pub fn kernel_f(params: &KernelParams, k: f64) -> Complex64 {
    params.f(k)
}

pub fn kernel_g(params: &KernelParams, k: f64) -> Complex64 {
    params.g(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_beta() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(1.0).is_err());
        assert!(KernelParams::new(0.04).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
        assert!(KernelParams::new(0.05).is_ok());
    }

    #[test]
    fn constants() {
        let p = KernelParams::new(0.5).unwrap();
        let c = 2.0 * PI * (-(2f64.sqrt())).exp();
        assert!((p.c_beta - c).abs() < 1e-15);
        // n = 2: 2^3 * 2! / (C cos(π/4)^2)
        assert!((p.b_beta - 16.0 / (c * 0.5)).abs() < 1e-12 * p.b_beta);
        assert!((p.f(0.0).re - (-1f64).exp() / c).abs() < 1e-15);
        assert_eq!(p.f(0.0).im, 0.0);
    }

    #[test]
    fn polar_oracle() {
        let p = KernelParams::new(0.75).unwrap();
        // (1+3i)^0.75 = |1+3i|^0.75 e^{0.75 i atan(3)}
        let r = 10f64.sqrt().powf(0.75);
        let th = 0.75 * 3f64.atan();
        let z = Complex64::new(r * th.cos(), r * th.sin());
        let want = Complex64::new(-z.re, -z.im).exp() / p.c_beta;
        assert!((p.f(3.0) - want).norm() < 1e-13);
    }

    #[test]
    fn g_relations() {
        let p = KernelParams::new(0.75).unwrap();
        assert_eq!(p.g(0.0), p.f(0.0));
        let ratio = p.g(10.0).norm() / p.f(10.0).norm();
        assert!((ratio - 1.0 / 101f64.sqrt()).abs() < 1e-14);
        assert!((p.g(-5.0) - p.g(5.0).conj()).norm() < 1e-15);
        assert!((p.abs_g(7.0) - p.g(7.0).norm()).abs() < 1e-15);
    }

    #[test]
    fn decay_envelope_dominates() {
        for &beta in &[0.3, 0.5, 0.75, 0.9] {
            let p = KernelParams::new(beta).unwrap();
            for i in 0..400 {
                let k = 1.0 + i as f64 * 2.5;
                assert!(p.abs_g(k) <= p.decay_envelope(k) * (1.0 + 1e-12));
                assert!(p.abs_g(-k) <= p.decay_envelope(-k) * (1.0 + 1e-12));
            }
        }
    }
}
