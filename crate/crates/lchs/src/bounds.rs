//! Truncation cutoff K, quadrature order Q, step h and term count M.

use serde::{Deserialize, Serialize};

use crate::cost::ProblemSpec;
use crate::error::{domain, Error, Result};
use crate::kernel::KernelParams;
use crate::specfun::{lambert_w0_ln, lambert_w_m1};

use std::f64::consts::{E, LOG2_E, PI};

const Q_MAX: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationResult {
    pub k_cut: f64,
    pub rhs_at_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureCount {
    /// Smallest Q passing (2π e^{1/3} K)/(3 C_β e^Q Q) ≤ ε_disc, starting from the Lambert value.
    pub q: u32,
    pub q_lambert: u32,
    /// Smallest Q with π e^{1/3} Q 2^{-4Q} 8K/(3 C_β) ≤ ε_disc.
    pub q_tight: u32,
    pub safety_steps: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationPlanHeader {
    pub beta: f64,
    pub k_cut: f64,
    pub rhs_at_k: f64,
    pub h: f64,
    pub intervals: u64,
    pub q_points: u32,
    pub q_lambert: u32,
    pub q_tight: u32,
    pub m_total: u64,
}

impl DiscretizationPlanHeader {
    pub fn half_intervals(&self) -> u64 {
        self.intervals / 2
    }

    /// M with the tight-mode Q.
    pub fn m_total_tight(&self) -> u64 {
        self.intervals * self.q_tight as u64
    }

    /// The same plan with Q replaced by the tight-mode count.
    pub fn with_tight_q(self) -> Self {
        Self { q_points: self.q_tight, m_total: self.m_total_tight(), ..self }
    }

    pub fn log2_m_ceil(&self) -> u32 {
        ceil_log2(self.m_total)
    }
}

pub fn ceil_log2(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

fn check_eps(eps: f64, what: &str) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("{what} = {eps} must lie in (0, 1)"));
    }
    Ok(())
}

/// Exact solve of B_β K⁻¹ e^{-K^β cos(βπ/2)/2} = ε_trunc.
///
/// With z = β K^β cos(βπ/2)/2 the equation becomes z e^z = (B_β/ε)^β β cos(βπ/2)/2,
/// so z = W0(·). The argument is formed in log space.
pub fn truncation_k(params: &KernelParams, eps_trunc: f64) -> Result<TruncationResult> {
    check_eps(eps_trunc, "eps_trunc")?;
    let b = params.beta;
    let c = params.cos_half();
    let ln_x = b * (params.b_beta / eps_trunc).ln() + (0.5 * b * c).ln();
    let z = lambert_w0_ln(ln_x)?;
    let k_cut = (2.0 * z / (b * c)).powf(1.0 / b);
    if !k_cut.is_finite() || k_cut <= 0.0 {
        return Err(Error::Overflow(format!("K not representable for beta={b}, eps={eps_trunc}")));
    }
    Ok(TruncationResult { k_cut, rhs_at_k: params.trunc_rhs(k_cut) })
}

/// The closed form with the 1/β power inside W0, kept for comparison. It
/// overshoots the saturating K.
pub fn truncation_k_printed(params: &KernelParams, eps_trunc: f64) -> Result<f64> {
    check_eps(eps_trunc, "eps_trunc")?;
    let b = params.beta;
    let c = params.cos_half();
    let ln_x = (params.b_beta / eps_trunc).ln() / b + (c / (2.0 * b)).ln();
    let w = lambert_w0_ln(ln_x)?;
    Ok((2.0 * b / c * w).powf(1.0 / b))
}

/// (2 ln(B_β/ε) / cos(βπ/2))^{1/β}
pub fn naive_k(params: &KernelParams, eps_trunc: f64) -> Result<f64> {
    check_eps(eps_trunc, "eps_trunc")?;
    if eps_trunc >= params.b_beta {
        return domain("naive_k requires eps_trunc < B_beta");
    }
    let k = (2.0 * (params.b_beta / eps_trunc).ln() / params.cos_half()).powf(1.0 / params.beta);
    if !k.is_finite() {
        return Err(Error::Overflow("naive K".into()));
    }
    Ok(k)
}

/// (2π e^{1/3} K)/(3 C_β e^Q Q)
pub fn disc_bound(params: &KernelParams, k_cut: f64, q: u32) -> f64 {
    let q = q as f64;
    2.0 * PI * (1.0f64 / 3.0).exp() * k_cut / (3.0 * params.c_beta * q.exp() * q)
}

/// π e^{1/3} Q 2^{-4Q} 8K/(3 C_β)
pub fn disc_bound_tight(params: &KernelParams, k_cut: f64, q: u32) -> f64 {
    let q = q as f64;
    PI * (1.0f64 / 3.0).exp() * q * (-4.0 * q * std::f64::consts::LN_2).exp() * 8.0 * k_cut
        / (3.0 * params.c_beta)
}

pub fn quadrature_q(params: &KernelParams, eps_disc: f64, k_cut: f64) -> Result<QuadratureCount> {
    check_eps(eps_disc, "eps_disc")?;
    if !(k_cut > 0.0) {
        return domain("k_cut must be positive");
    }
    let arg = -3.0 * params.c_beta * eps_disc / (2.0 * PI * (1.0f64 / 3.0).exp() * LOG2_E * k_cut);
    if arg < -1.0 / E {
        return domain(format!(
            "eps_disc/K = {} too large for the W-1 branch (argument {arg})",
            eps_disc / k_cut
        ));
    }
    let w = lambert_w_m1(arg)?;
    let q_lambert = ((-LOG2_E / 4.0 * w).ceil() as u32).max(1);
    let mut q = q_lambert;
    let mut safety_steps = 0;
    while disc_bound(params, k_cut, q) > eps_disc {
        q += 1;
        safety_steps += 1;
        if q > Q_MAX {
            return Err(Error::Convergence("quadrature order exceeded limit".into()));
        }
    }
    let mut q_tight = 1;
    while disc_bound_tight(params, k_cut, q_tight) > eps_disc {
        q_tight += 1;
        if q_tight > Q_MAX {
            return Err(Error::Convergence("tight quadrature order exceeded limit".into()));
        }
    }
    Ok(QuadratureCount { q, q_lambert, q_tight, safety_steps })
}

pub fn plan_discretization(
    spec: &ProblemSpec,
    eps_trunc: f64,
    eps_disc: f64,
) -> Result<DiscretizationPlanHeader> {
    if !(spec.t > 0.0) || !(spec.norm_l > 0.0) {
        return domain("plan requires t > 0 and norm_L > 0");
    }
    let params = KernelParams::new(spec.beta)?;
    let tr = truncation_k(&params, eps_trunc)?;
    let qc = quadrature_q(&params, eps_disc, tr.k_cut)?;
    let h0 = 1.0 / (E * spec.t * spec.norm_l);
    let n_f = (tr.k_cut / h0).ceil();
    if !(n_f < 2f64.powi(62)) {
        return Err(Error::Overflow("interval count".into()));
    }
    let mut n = (n_f as u64).max(1);
    while tr.k_cut / n as f64 > h0 {
        n += 1;
    }
    let intervals = 2 * n;
    let m_total = intervals
        .checked_mul(qc.q as u64)
        .ok_or_else(|| Error::Overflow("M exceeds u64".into()))?;
    Ok(DiscretizationPlanHeader {
        beta: spec.beta,
        k_cut: tr.k_cut,
        rhs_at_k: tr.rhs_at_k,
        h: tr.k_cut / n as f64,
        intervals,
        q_points: qc.q,
        q_lambert: qc.q_lambert,
        q_tight: qc.q_tight,
        m_total,
    })
}
