//! Error-budget feasibility, the equal split, constraint-lifting solvers and
//! the cost optimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::plan_discretization;
use crate::cost::{
    assemble_costs, c_lchs, delta_conservative, delta_gap, eps_lchs, eps_v, CostReport, ProblemSpec,
};
use crate::error::{domain, Error, Result};
use crate::kernel::KernelParams;
use crate::quad::{summarize_plan, PlanSummary};
use crate::signpoly::{degree_upper, eps_max};
use crate::specfun::lambert_w_m1_ln;

use std::f64::consts::{E, PI};

/// Relative rounding allowance when comparing a saturated LHS against ε.
const LHS_ROUNDING: f64 = 1e-12;
const MAX_FIXED_POINT: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps_trunc: f64,
    pub eps_disc: f64,
    pub eps_aa: f64,
    pub eps_exp: f64,
    pub eps_c: f64,
    pub eps_0: f64,
    pub eps_a: f64,
    pub eps_r: f64,
}

impl ErrorBudget {
    pub fn is_valid(&self) -> bool {
        [
            self.eps_trunc,
            self.eps_disc,
            self.eps_aa,
            self.eps_exp,
            self.eps_c,
            self.eps_0,
            self.eps_a,
            self.eps_r,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub satisfied: bool,
    pub lhs: f64,
    pub slack: f64,
    /// ε ≤ 3 C_LCHS (‖u(t)‖ + ε_v)/8
    pub cost_side_ok: bool,
    /// ε_LCHS/(‖c‖₁‖u₀‖) ≤ 1/12
    pub aa_side_ok: bool,
    pub delta: f64,
    pub c_lchs: u64,
}

/// Full LHS for a given C_LCHS.
pub fn constraint_lhs(spec: &ProblemSpec, plan: &PlanSummary, b: &ErrorBudget, c: f64) -> f64 {
    let ev = eps_v(spec, b);
    let el = eps_lchs(spec, plan, b);
    ev + (spec.norm_ut + ev) * (b.eps_aa + 9.0 * c / (2.0 * plan.c_l1 * spec.norm_u0) * el)
}

/// ε_v + (‖u(t)‖ + ε_v)(ε_AA + (9/2) ε_exp C) for perfect oracles.
pub fn constraint_lhs_simplified(spec: &ProblemSpec, eps_v: f64, eps_aa: f64, eps_exp: f64, c: f64) -> f64 {
    eps_v + (spec.norm_ut + eps_v) * (eps_aa + 4.5 * eps_exp * c)
}

pub fn check_constraint(spec: &ProblemSpec, plan: &PlanSummary, b: &ErrorBudget) -> ConstraintCheck {
    let fail = ConstraintCheck {
        satisfied: false,
        lhs: f64::INFINITY,
        slack: f64::NEG_INFINITY,
        cost_side_ok: false,
        aa_side_ok: false,
        delta: f64::NAN,
        c_lchs: 0,
    };
    if !b.is_valid() {
        return fail;
    }
    let ev = eps_v(spec, b);
    let el = eps_lchs(spec, plan, b);
    let Ok(delta) = delta_gap(spec, plan.c_l1, el, ev) else {
        return fail;
    };
    let Ok(c) = c_lchs(delta, b.eps_aa) else {
        return ConstraintCheck { delta, ..fail };
    };
    let lhs = constraint_lhs(spec, plan, b, c as f64);
    let eps = spec.eps_total;
    let cost_side_ok = eps <= 3.0 * c as f64 * (spec.norm_ut + ev) / 8.0;
    let aa_side_ok = el / (plan.c_l1 * spec.norm_u0) <= 1.0 / 12.0;
    ConstraintCheck {
        satisfied: lhs <= eps * (1.0 + LHS_ROUNDING) && cost_side_ok && aa_side_ok,
        lhs,
        slack: eps - lhs,
        cost_side_ok,
        aa_side_ok,
        delta,
        c_lchs: c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetOutcome {
    pub budget: ErrorBudget,
    pub plan: PlanSummary,
    pub report: CostReport,
    pub check: ConstraintCheck,
    pub iterations: u32,
}

pub fn plan_summary(spec: &ProblemSpec, eps_trunc: f64, eps_disc: f64, tight_q: bool) -> Result<PlanSummary> {
    let mut header = plan_discretization(spec, eps_trunc, eps_disc)?;
    if tight_q {
        header = header.with_tight_q();
    }
    summarize_plan(&KernelParams::new(spec.beta)?, &header)
}

/// Equal split with perfect oracles (ε_c = ε_0 = ε_A = ε_R = 0).
pub fn equal_budget(spec: &ProblemSpec) -> Result<BudgetOutcome> {
    equal_budget_with(spec, true, false)
}

/// `tight_q` swaps in the tight-mode Gauss-Legendre order.
pub fn equal_budget_with(spec: &ProblemSpec, perfect_oracle: bool, tight_q: bool) -> Result<BudgetOutcome> {
    spec.validate()?;
    let eps = spec.eps_total;
    let u0 = spec.norm_u0;
    let eps_trunc = eps / (8.0 * u0);
    let plan = plan_summary(spec, eps_trunc, eps_trunc, tight_q)?;
    let ev = 2.0 * u0 * eps_trunc;
    let v = spec.norm_ut + ev;
    let eps_aa = eps / (8.0 * v);
    let k = plan.header.k_cut;
    let s = (1.0 + k * k).sqrt();
    let shares = |c: f64| {
        let base = eps / (36.0 * v * c);
        let mut b = ErrorBudget { eps_trunc, eps_disc: eps_trunc, eps_aa, eps_exp: base, ..Default::default() };
        if !perfect_oracle {
            b.eps_c = plan.c_l1 * base;
            b.eps_0 = u0 * base;
            b.eps_a = base / (s * spec.t);
            b.eps_r = base / (2.0 * plan.header.m_total as f64 * spec.t * s * spec.alpha_a);
        }
        b
    };
    let delta0 = delta_gap(spec, plan.c_l1, 0.0, 0.0)?;
    let mut c = c_lchs(delta0, eps_aa)?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let b = shares(c as f64);
        let d = delta_gap(spec, plan.c_l1, eps_lchs(spec, &plan, &b), ev)?;
        let next = c_lchs(d, eps_aa)?.max(c);
        if next == c {
            break;
        }
        c = next;
        if iterations >= MAX_FIXED_POINT {
            return Err(Error::Convergence(format!(
                "equal-budget C_LCHS fixed point not reached in {MAX_FIXED_POINT} iterations"
            )));
        }
    }
    let budget = shares(c as f64);
    let check = check_constraint(spec, &plan, &budget);
    if !check.satisfied {
        return Err(infeasible(&check));
    }
    let report = assemble_costs(spec, &plan, &budget)?;
    Ok(BudgetOutcome { budget, plan, report, check, iterations })
}

fn infeasible(c: &ConstraintCheck) -> Error {
    let what = if !c.aa_side_ok {
        "eps_LCHS/(c1 u0) <= 1/12"
    } else if !c.cost_side_ok {
        "eps <= 3 C_LCHS (u + eps_v)/8"
    } else {
        "error constraint LHS <= eps"
    };
    Error::Infeasible(format!("violated: {what} (lhs = {:e}, delta = {})", c.lhs, c.delta))
}

/// 64√2/(3√π)
fn b_prime() -> f64 {
    64.0 * 2f64.sqrt() / (3.0 * PI.sqrt())
}

/// ε_AA saturating the perfect-oracle constraint when C_LCHS takes its
/// upper-bound form (8e/Δ)√(1+1/e) ln(B'/(Δ ε_AA)):
/// ε_AA = -γ W-1(-(B'/(γΔ)) e^{-a/γ}), γ = 36e√(1+1/e) ε_exp/Δ,
/// a = (ε - ε_v)/(‖u(t)‖ + ε_v).
pub fn sol_eps_aa(spec: &ProblemSpec, eps_v: f64, eps_exp: f64, delta: f64) -> Result<f64> {
    if !(eps_v >= 0.0 && eps_v < spec.eps_total) {
        return domain("sol_eps_aa requires 0 <= eps_v < eps");
    }
    if !(eps_exp > 0.0 && delta > 0.0 && delta <= 2.0) {
        return domain("sol_eps_aa requires eps_exp > 0 and delta in (0, 2]");
    }
    let a = (spec.eps_total - eps_v) / (spec.norm_ut + eps_v);
    let gamma = 36.0 * E * (1.0 + 1.0 / E).sqrt() * eps_exp / delta;
    let ln_neg_arg = (b_prime() / (gamma * delta)).ln() - a / gamma;
    if ln_neg_arg > -1.0 {
        return domain(format!("W-1 argument -exp({ln_neg_arg}) below -1/e: eps_exp too large"));
    }
    let w = lambert_w_m1_ln(ln_neg_arg)?;
    let eps_aa = -gamma * w;
    if !(eps_aa > 0.0 && eps_aa < eps_max()) {
        return domain(format!("solved eps_AA = {eps_aa} outside the sign-polynomial range"));
    }
    Ok(eps_aa)
}

/// ε_exp = [(ε - ε_v)/(‖u(t)‖ + ε_v) - ε_AA] · 2/(9 C_LCHS(Δ_cons, ε_AA))
pub fn sol_eps_exp(spec: &ProblemSpec, eps_v: f64, eps_aa: f64, delta_cons: f64) -> Result<f64> {
    if !(eps_v >= 0.0 && eps_v < spec.eps_total) {
        return domain("sol_eps_exp requires 0 <= eps_v < eps");
    }
    let a = (spec.eps_total - eps_v) / (spec.norm_ut + eps_v);
    let bracket = a - eps_aa;
    if bracket < 0.0 {
        return Err(Error::Infeasible(format!("eps_AA = {eps_aa} exceeds the available {a}")));
    }
    let c = c_lchs(delta_cons, eps_aa)?;
    Ok(bracket * 2.0 / (9.0 * c as f64))
}

/// Upper-bound C_LCHS used by `sol_eps_aa`.
pub fn c_lchs_upper(delta: f64, eps_aa: f64) -> Result<f64> {
    degree_upper(delta, eps_aa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SolAa,
    SolExp,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sol_aa" | "sol-aa" => Ok(Method::SolAa),
            "sol_exp" | "sol-exp" => Ok(Method::SolExp),
            _ => Err(Error::Parse(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub eval_limit: usize,
    pub seed: u64,
    pub tight_q: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { eval_limit: 3000, seed: 0, tight_q: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub method: Method,
    pub beta: f64,
    pub outcome: BudgetOutcome,
    pub evals: usize,
    pub exhausted: bool,
}

const BETA_LO: f64 = 0.4;
const BETA_HI: f64 = 0.95;
const FRAC_DECADES: f64 = 5.0;
const FRAC_HI: f64 = 0.95;
const EXP_DECADES: f64 = 7.0;

struct Decoded {
    beta: f64,
    eps_trunc: f64,
    eps_disc: f64,
    free: f64,
}

fn decode(spec: &ProblemSpec, x: &[f64; 4]) -> Decoded {
    let beta = BETA_LO + (BETA_HI - BETA_LO) * x[0];
    let frac = (10f64.powf(-FRAC_DECADES * (1.0 - x[1]))).min(FRAC_HI);
    let ev = frac * spec.eps_total;
    let split = 0.02 + 0.96 * x[2];
    Decoded {
        beta,
        eps_trunc: split * ev / spec.norm_u0,
        eps_disc: (1.0 - split) * ev / spec.norm_u0,
        free: x[3],
    }
}

/// Builds and checks the candidate for one decision vector.
fn evaluate(spec: &ProblemSpec, method: Method, tight_q: bool, x: &[f64; 4]) -> Option<(f64, BudgetOutcome)> {
    let d = decode(spec, x);
    let s = ProblemSpec { beta: d.beta, ..*spec };
    let plan = plan_summary(&s, d.eps_trunc, d.eps_disc, tight_q).ok()?;
    let ev = spec.norm_u0 * (d.eps_trunc + d.eps_disc);
    let a = (s.eps_total - ev) / (s.norm_ut + ev);
    let (eps_aa, eps_exp) = match method {
        Method::SolAa => {
            let eps_exp = a * 10f64.powf(-1.0 - EXP_DECADES * d.free);
            let delta = delta_gap(&s, plan.c_l1, plan.c_l1 * s.norm_u0 * eps_exp, ev).ok()?;
            (sol_eps_aa(&s, ev, eps_exp, delta).ok()?, eps_exp)
        }
        Method::SolExp => {
            let eps_aa = a * (0.01 + 0.98 * d.free);
            let dc = delta_conservative(&s, plan.c_l1).ok()?;
            (eps_aa, sol_eps_exp(&s, ev, eps_aa, dc).ok()?)
        }
    };
    if !(eps_exp > 0.0) {
        return None;
    }
    let budget = ErrorBudget { eps_trunc: d.eps_trunc, eps_disc: d.eps_disc, eps_aa, eps_exp, ..Default::default() };
    let check = check_constraint(&s, &plan, &budget);
    if !check.satisfied {
        return None;
    }
    let report = assemble_costs(&s, &plan, &budget).ok()?;
    Some((report.c_a as f64, BudgetOutcome { budget, plan, report, check, iterations: 0 }))
}

struct Search<'a> {
    spec: &'a ProblemSpec,
    method: Method,
    tight_q: bool,
    limit: usize,
    evals: usize,
    best: Option<(f64, [f64; 4], BudgetOutcome)>,
}

impl Search<'_> {
    fn f(&mut self, x: &[f64; 4]) -> f64 {
        if self.evals >= self.limit {
            return f64::INFINITY;
        }
        self.evals += 1;
        match evaluate(self.spec, self.method, self.tight_q, x) {
            Some((v, out)) => {
                if self.best.as_ref().is_none_or(|b| v < b.0) {
                    self.best = Some((v, *x, out));
                }
                v
            }
            None => f64::INFINITY,
        }
    }

    fn left(&self) -> usize {
        self.limit.saturating_sub(self.evals)
    }

    /// Bounded Nelder-Mead; returns true if it converged before the limit.
    fn nelder_mead(&mut self, start: [f64; 4], step: f64) -> bool {
        let clamp = |mut p: [f64; 4]| {
            for v in p.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            p
        };
        let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
        let f0 = self.f(&start);
        simplex.push((start, f0));
        for i in 0..4 {
            let mut p = start;
            p[i] = if p[i] + step <= 1.0 { p[i] + step } else { p[i] - step };
            let fp = self.f(&p);
            simplex.push((p, fp));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diam = simplex
                .iter()
                .skip(1)
                .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if diam < 1e-5 {
                return true;
            }
            if self.left() == 0 {
                return false;
            }
            let mut centroid = [0.0; 4];
            for (p, _) in &simplex[..4] {
                for i in 0..4 {
                    centroid[i] += p[i] / 4.0;
                }
            }
            let along = |t: f64, worst: &[f64; 4]| {
                let mut q = [0.0; 4];
                for i in 0..4 {
                    q[i] = centroid[i] + t * (worst[i] - centroid[i]);
                }
                clamp(q)
            };
            let worst = simplex[4];
            let xr = along(-1.0, &worst.0);
            let fr = self.f(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0, &worst.0);
                let fe = self.f(&xe);
                simplex[4] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[3].1 {
                simplex[4] = (xr, fr);
            } else {
                let xc = if fr < worst.1 { along(-0.5, &worst.0) } else { along(0.5, &worst.0) };
                let fc = self.f(&xc);
                if fc < worst.1.min(fr) {
                    simplex[4] = (xc, fc);
                } else {
                    let b = simplex[0].0;
                    for item in simplex.iter_mut().skip(1) {
                        let mut q = [0.0; 4];
                        for i in 0..4 {
                            q[i] = b[i] + 0.5 * (item.0[i] - b[i]);
                        }
                        let fq = self.f(&q);
                        *item = (q, fq);
                        if self.left() == 0 {
                            break;
                        }
                    }
                }
            }
        }
    }
}

/// Seeded global sampling of the unit decision cube followed by local
/// Nelder-Mead refinement. Decision variables: β ∈ [0.4, 0.95], the ε_v
/// fraction of ε (log scale), the truncation share of ε_v, and the method's
/// free error (ε_exp for Sol(ε_AA), the ε_AA share for Sol(ε_exp)).
pub fn optimize(spec: &ProblemSpec, method: Method, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    spec.validate()?;
    if opts.eval_limit < 10 {
        return domain("eval_limit must be at least 10");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut search = Search { spec, method, tight_q: opts.tight_q, limit: opts.eval_limit, evals: 0, best: None };
    let beta_eq = (0.75 - BETA_LO) / (BETA_HI - BETA_LO);
    let frac_eq = 1.0 + 0.25f64.log10() / FRAC_DECADES;
    let seeds = [
        [beta_eq, frac_eq, 0.5, 0.5],
        [beta_eq, frac_eq, 0.5, 0.3],
        [beta_eq, frac_eq, 0.5, 0.15],
        [0.7, 0.6, 0.5, 0.5],
    ];
    let mut samples: Vec<(f64, [f64; 4])> = Vec::new();
    for s in seeds {
        let v = search.f(&s);
        samples.push((v, s));
    }
    let global = opts.eval_limit * 2 / 5;
    while search.evals < global {
        let x = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        let v = search.f(&x);
        samples.push((v, x));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut converged = true;
    for (v, x) in samples.iter().take(3) {
        if !v.is_finite() || search.left() == 0 {
            break;
        }
        converged &= search.nelder_mead(*x, 0.08);
    }
    while search.left() > 0 {
        let Some((_, bx, _)) = search.best else { break };
        let before = search.best.as_ref().map(|b| b.0);
        converged = search.nelder_mead(bx, 0.01);
        if search.best.as_ref().map(|b| b.0) == before {
            break;
        }
    }
    let evals = search.evals;
    let (_, x, outcome) = search
        .best
        .ok_or_else(|| Error::Infeasible(format!("no feasible budget found in {evals} evaluations")))?;
    Ok(OptimizeResult {
        method,
        beta: decode(spec, &x).beta,
        outcome,
        evals,
        exhausted: !converged && evals >= opts.eval_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::eta;

    fn spec(t: f64) -> ProblemSpec {
        ProblemSpec { t, ..ProblemSpec::default() }
    }

    #[test]
    fn degenerate_budget() {
        let s = spec(10.0);
        let plan = plan_summary(&s, 1e-12, 1e-12, false).unwrap();
        let b = ErrorBudget { eps_aa: 1e-10, ..Default::default() };
        let c = check_constraint(&s, &plan, &b);
        assert!((c.lhs - 1e-10).abs() < 1e-25);
        assert!(c.satisfied);
        let b = ErrorBudget { eps_aa: 2e-10, ..Default::default() };
        assert!(!check_constraint(&s, &plan, &b).satisfied);
    }

    #[test]
    fn equal_budget_feasible_and_inflated_exp_violates() {
        let s = spec(1e4);
        let out = equal_budget(&s).unwrap();
        assert!(out.check.satisfied && out.check.slack >= 0.0);
        assert!(out.iterations <= 10);
        let mut b = out.budget;
        b.eps_exp *= 10.0;
        b.eps_aa = s.eps_total / 2.0;
        assert!(!check_constraint(&s, &out.plan, &b).satisfied);
    }

    #[test]
    fn equal_budget_full_oracle_saturates() {
        let s = spec(1e3);
        let out = equal_budget_with(&s, false, false).unwrap();
        assert!(out.check.satisfied);
        let c = out.check.c_lchs as f64;
        let lhs = constraint_lhs(&s, &out.plan, &out.budget, c);
        assert!(lhs <= s.eps_total * (1.0 + 1e-12));
        assert!(out.budget.eps_a > 0.0 && out.budget.eps_r > 0.0);
    }

    #[test]
    fn infeasible_eps() {
        let s = ProblemSpec { eps_total: 1.5, ..spec(1.0) };
        assert!(matches!(equal_budget(&s), Err(Error::Infeasible(_))));
    }

    #[test]
    fn sol_aa_back_substitution() {
        let s = spec(1e4);
        let ev = 1e-12;
        let eps_exp = 1e-14;
        let plan = plan_summary(&s, ev / 2.0, ev / 2.0, false).unwrap();
        let d = delta_gap(&s, plan.c_l1, plan.c_l1 * eps_exp, ev).unwrap();
        let eaa = sol_eps_aa(&s, ev, eps_exp, d).unwrap();
        let c = c_lchs_upper(d, eaa).unwrap();
        let lhs = constraint_lhs_simplified(&s, ev, eaa, eps_exp, c);
        assert!((lhs - s.eps_total).abs() <= 1e-6 * s.eps_total);
        assert!(sol_eps_aa(&s, ev, 1e-6, d).is_err());
    }

    #[test]
    fn sol_exp_back_substitution_and_boundary() {
        let s = spec(1e4);
        let ev = 1e-12;
        let plan = plan_summary(&s, ev / 2.0, ev / 2.0, false).unwrap();
        let dc = delta_conservative(&s, plan.c_l1).unwrap();
        let eaa = 3e-11;
        let ee = sol_eps_exp(&s, ev, eaa, dc).unwrap();
        let c = c_lchs(dc, eaa).unwrap() as f64;
        let lhs = constraint_lhs_simplified(&s, ev, eaa, ee, c);
        assert!((lhs - s.eps_total).abs() <= 1e-6 * s.eps_total);
        let a = (s.eps_total - ev) / (s.norm_ut + ev);
        assert_eq!(sol_eps_exp(&s, ev, a, dc).unwrap(), 0.0);
        assert!(sol_eps_exp(&s, ev, 2.0 * a, dc).is_err());
    }

    #[test]
    fn optimizer_beats_equal_and_is_deterministic() {
        let s = spec(1e6);
        let eq = equal_budget(&s).unwrap();
        let opts = OptimizeOptions { eval_limit: 400, seed: 3, tight_q: false };
        for m in [Method::SolAa, Method::SolExp] {
            let a = optimize(&s, m, &opts).unwrap();
            let b = optimize(&s, m, &opts).unwrap();
            assert_eq!(a, b);
            assert!(a.evals <= opts.eval_limit);
            assert!(a.outcome.check.satisfied);
            assert!(a.outcome.report.c_a <= eq.report.c_a);
            let recheck = check_constraint(
                &ProblemSpec { beta: a.beta, ..s },
                &a.outcome.plan,
                &a.outcome.budget,
            );
            assert!(recheck.satisfied);
        }
        let _ = eta();
    }
}
