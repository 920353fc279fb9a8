//! Query-count assembly for the amplified LCHS state preparation.

use serde::{Deserialize, Serialize};

use crate::bounds::ceil_log2;
use crate::budget::ErrorBudget;
use crate::error::{domain, Error, Result};
use crate::quad::PlanSummary;
use crate::signpoly::degree_bound;

use std::f64::consts::{E, PI};

/// Qubits beyond ⌈log₂M⌉ + m_A in the amplified preparation.
pub const ANCILLA_OVERHEAD: u32 = 5;
/// Queries per SELECT call left out of C_A: six to c-c-U_A plus two from the
/// phase-doubling step.
pub const EXCLUDED_QUERIES_PER_CALL: u64 = 8;

/// η = 4 (√(2π) e^{1/13})⁻¹
pub fn eta() -> f64 {
    4.0 / ((2.0 * PI).sqrt() * (1.0f64 / 13.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub t: f64,
    pub alpha_a: f64,
    pub norm_l: f64,
    pub norm_u0: f64,
    pub norm_ut: f64,
    pub eps_total: f64,
    pub beta: f64,
    pub m_a: u32,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            t: 1.0,
            alpha_a: 1.0,
            norm_l: 1.0,
            norm_u0: 1.0,
            norm_ut: 1.0,
            eps_total: 1e-10,
            beta: 0.75,
            m_a: 0,
        }
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("t", self.t),
            ("alpha_A", self.alpha_a),
            ("norm_L", self.norm_l),
            ("norm_u0", self.norm_u0),
            ("norm_ut", self.norm_ut),
            ("eps", self.eps_total),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} = {v} must be positive and finite"));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return domain(format!("beta = {} must lie in (0, 1)", self.beta));
        }
        if self.norm_l > self.alpha_a * (1.0 + 1e-12) {
            return domain("norm_L exceeds alpha_A");
        }
        if self.norm_ut > self.norm_u0 * (1.0 + 1e-12) {
            return domain("norm_ut exceeds norm_u0");
        }
        if self.eps_total >= self.norm_ut {
            return Err(Error::Infeasible(format!(
                "eps = {} is not below norm_ut = {}",
                self.eps_total, self.norm_ut
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub delta: f64,
    pub c_lchs: u64,
    pub qubitization_per_call: u64,
    pub c_a: u64,
    pub c_r: u128,
    pub c_0: u64,
    pub ancilla_estimate: u32,
    pub success_prob_lower: f64,
    pub k_cut: f64,
    pub m_total: u64,
    pub log2_m: u32,
    pub c_l1: f64,
    pub eps_v: f64,
    pub eps_lchs: f64,
    /// c-c-U_A and phase-doubling queries not counted in c_a.
    pub excluded_queries: u64,
}

/// ⌈e α_eff t + 2 ln(2η/ε_exp)⌉, at least 1.
pub fn qubitization_queries(alpha_eff: f64, t: f64, eps_exp: f64) -> Result<u64> {
    if !(eps_exp > 0.0) {
        return domain(format!("eps_exp = {eps_exp} must be positive"));
    }
    if !(alpha_eff >= 0.0 && t >= 0.0) {
        return domain("alpha_eff and t must be nonnegative");
    }
    let v = (E * alpha_eff * t + 2.0 * (2.0 * eta() / eps_exp).ln()).ceil();
    if !(v < 1.8e19) {
        return Err(Error::Overflow("qubitization count".into()));
    }
    Ok((v.max(1.0)) as u64)
}

/// ε_exp + √(1+K²) t ε_A + 2 M t √(1+K²) α_A ε_R
pub fn eps_q(spec: &ProblemSpec, plan: &PlanSummary, b: &ErrorBudget) -> f64 {
    let s = (1.0 + plan.header.k_cut.powi(2)).sqrt();
    b.eps_exp + s * spec.t * b.eps_a + 2.0 * plan.header.m_total as f64 * spec.t * s * spec.alpha_a * b.eps_r
}

/// ‖u₀‖(ε_c + ‖c‖₁ ε_Q) + ‖c‖₁ ε_0
pub fn eps_lchs(spec: &ProblemSpec, plan: &PlanSummary, b: &ErrorBudget) -> f64 {
    spec.norm_u0 * (b.eps_c + plan.c_l1 * eps_q(spec, plan, b)) + plan.c_l1 * b.eps_0
}

/// ‖u₀‖(ε_trunc + ε_disc)
pub fn eps_v(spec: &ProblemSpec, b: &ErrorBudget) -> f64 {
    spec.norm_u0 * (b.eps_trunc + b.eps_disc)
}

/// Δ = 2(‖u(t)‖ - ε_LCHS - ε_v)/(‖u₀‖ ‖c‖₁)
pub fn delta_gap(spec: &ProblemSpec, c_l1: f64, eps_lchs: f64, eps_v: f64) -> Result<f64> {
    check_delta(2.0 * (spec.norm_ut - eps_lchs - eps_v) / (spec.norm_u0 * c_l1))
}

/// Δ ≥ 2(‖u(t)‖ - ε)/(‖u₀‖ ‖c‖₁)
pub fn delta_conservative(spec: &ProblemSpec, c_l1: f64) -> Result<f64> {
    check_delta(2.0 * (spec.norm_ut - spec.eps_total) / (spec.norm_u0 * c_l1))
}

fn check_delta(d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Infeasible(format!("gap Delta = {d} is not positive")));
    }
    if d > 2.0 {
        return Err(Error::Infeasible(format!("gap Delta = {d} exceeds 2")));
    }
    Ok(d)
}

pub fn c_lchs(delta: f64, eps_aa: f64) -> Result<u64> {
    degree_bound(delta, eps_aa)
}

pub fn assemble_costs(spec: &ProblemSpec, plan: &PlanSummary, budget: &ErrorBudget) -> Result<CostReport> {
    let e_l = eps_lchs(spec, plan, budget);
    let e_v = eps_v(spec, budget);
    let delta = delta_gap(spec, plan.c_l1, e_l, e_v)?;
    let c = c_lchs(delta, budget.eps_aa)?;
    let k = plan.header.k_cut;
    let per_call = qubitization_queries((1.0 + k * k).sqrt() * spec.alpha_a, spec.t, budget.eps_exp)?;
    let c_a = c
        .checked_mul(per_call)
        .ok_or_else(|| Error::Overflow("C_A exceeds u64".into()))?;
    let m = plan.header.m_total;
    let p = ((spec.norm_ut - e_v - e_l) / (spec.norm_u0 * plan.c_l1)).max(0.0);
    let log2_m = ceil_log2(m);
    Ok(CostReport {
        delta,
        c_lchs: c,
        qubitization_per_call: per_call,
        c_a,
        c_r: m as u128 * c_a as u128,
        c_0: c,
        ancilla_estimate: log2_m + spec.m_a + ANCILLA_OVERHEAD,
        success_prob_lower: (p * p).min(1.0),
        k_cut: k,
        m_total: m,
        log2_m,
        c_l1: plan.c_l1,
        eps_v: e_v,
        eps_lchs: e_l,
        excluded_queries: c * EXCLUDED_QUERIES_PER_CALL,
    })
}

/// ℓ = (rls_c_a + χ rls_c_0)/(c_a + χ c_0)
pub fn speedup_ratio(lchs: &CostReport, rls_c_a: f64, rls_c_0: f64, chi: f64) -> f64 {
    (rls_c_a + chi * rls_c_0) / (lchs.c_a as f64 + chi * lchs.c_0 as f64)
}
