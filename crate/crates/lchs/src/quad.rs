//! Gauss-Legendre rules and the mapped LCHS nodes k_j and coefficients c_j.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::DiscretizationPlanHeader;
use crate::error::{Error, Result};
use crate::integrate::adaptive;
use crate::kernel::KernelParams;

use std::f64::consts::PI;
use std::io::Write;

pub const MAX_RULE: usize = 400;
/// Plans up to this size are materialized by `build_plan`.
pub const MAX_MATERIALIZED: u64 = 1 << 24;
/// Plans up to this size have ‖c‖₁ summed term by term in `summarize_plan`.
pub const MAX_EXACT_SUM: u64 = 1 << 20;

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= MAX_RULE, "legendre_rule: n = {n} out of range");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev-angle seed for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_p(n, z);
        dp = if d.is_finite() { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

// (P_n(x), P_n'(x)) by the three-term recurrence
fn legendre_p(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationPlan {
    pub header: DiscretizationPlanHeader,
    pub nodes: Vec<f64>,
    pub coeffs: Vec<Complex64>,
    pub c_l1: f64,
}

/// The parts of a plan that cost formulas need, available at any M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub header: DiscretizationPlanHeader,
    pub c_l1: f64,
    /// true when c_l1 was summed over all M terms, false when it is the
    /// adaptive integral of |g| over [-K, K]
    pub c_l1_exact: bool,
}

impl DiscretizationPlan {
    pub fn summary(&self) -> PlanSummary {
        PlanSummary { header: self.header, c_l1: self.c_l1, c_l1_exact: true }
    }

    pub fn coeff_sum(&self) -> Complex64 {
        self.coeffs.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "k_j", "re_c_j", "im_c_j"])?;
        for (i, (k, c)) in self.nodes.iter().zip(&self.coeffs).enumerate() {
            w.write_record([i.to_string(), k.to_string(), c.re.to_string(), c.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn for_each_term(
    params: &KernelParams,
    header: &DiscretizationPlanHeader,
    mut f: impl FnMut(f64, Complex64),
) {
    let (z, w) = legendre_rule(header.q_points as usize);
    let h = header.h;
    let n = header.half_intervals() as i64;
    for m in -n..n {
        let mid = (2 * m + 1) as f64 * h / 2.0;
        for (zq, wq) in z.iter().zip(&w) {
            let k = h / 2.0 * zq + mid;
            f(k, params.g(k) * (h / 2.0 * wq));
        }
    }
}

fn check_header(params: &KernelParams, header: &DiscretizationPlanHeader) -> Result<()> {
    if header.q_points as usize > MAX_RULE || header.q_points == 0 {
        return Err(Error::Size(format!("Q = {} outside [1, {MAX_RULE}]", header.q_points)));
    }
    if (params.beta - header.beta).abs() > 0.0 {
        return Err(Error::Domain("kernel beta does not match plan header".into()));
    }
    Ok(())
}

pub fn build_plan(params: &KernelParams, header: &DiscretizationPlanHeader) -> Result<DiscretizationPlan> {
    check_header(params, header)?;
    if header.m_total > MAX_MATERIALIZED {
        return Err(Error::Size(format!(
            "M = {} too large to materialize (limit {MAX_MATERIALIZED})",
            header.m_total
        )));
    }
    let mut nodes = Vec::with_capacity(header.m_total as usize);
    let mut coeffs = Vec::with_capacity(header.m_total as usize);
    for_each_term(params, header, |k, c| {
        nodes.push(k);
        coeffs.push(c);
    });
    let c_l1 = coeffs.iter().map(|c| c.norm()).sum();
    Ok(DiscretizationPlan { header: *header, nodes, coeffs, c_l1 })
}

/// ∫_{-K}^{K} |g(k)| dk by adaptive Gauss-Kronrod.
pub fn abs_g_integral(params: &KernelParams, k_cut: f64) -> f64 {
    let r = adaptive(|k| params.abs_g(k), 0.0, k_cut, 1e-15, 1e-14, 20_000);
    2.0 * r.value
}

pub fn summarize_plan(params: &KernelParams, header: &DiscretizationPlanHeader) -> Result<PlanSummary> {
    check_header(params, header)?;
    if header.m_total <= MAX_EXACT_SUM {
        let mut s = 0.0;
        for_each_term(params, header, |_, c| s += c.norm());
        Ok(PlanSummary { header: *header, c_l1: s, c_l1_exact: true })
    } else {
        Ok(PlanSummary { header: *header, c_l1: abs_g_integral(params, header.k_cut), c_l1_exact: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::plan_discretization;
    use crate::cost::ProblemSpec;

    #[test]
    fn small_rules() {
        let (x, w) = legendre_rule(1);
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, w) = legendre_rule(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15 && (x[0] + x[1]).abs() == 0.0);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn monomial_exactness() {
        let (x, w) = legendre_rule(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-13);
        for n in [3usize, 10, 37, 100, 200] {
            let (x, w) = legendre_rule(n);
            let ws: f64 = w.iter().sum();
            assert!((ws - 2.0).abs() < 1e-13, "n={n}");
            assert!(w.iter().all(|&w| w > 0.0));
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            let deg = 2 * n - 2;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    fn small_plan(beta: f64, t: f64, eps: f64) -> (KernelParams, DiscretizationPlan) {
        let spec = ProblemSpec { t, beta, ..ProblemSpec::default() };
        let p = KernelParams::new(beta).unwrap();
        let hdr = plan_discretization(&spec, eps, eps).unwrap();
        (p, build_plan(&p, &hdr).unwrap())
    }

    #[test]
    fn plan_structure() {
        let (p, plan) = small_plan(0.75, 1.0, 5e-7);
        let h = plan.header;
        assert_eq!(plan.nodes.len() as u64, h.m_total);
        assert!(plan.nodes.iter().all(|k| k.abs() <= h.k_cut * (1.0 + 1e-12)));
        assert!(plan.nodes.windows(2).all(|p| p[0] < p[1]));
        let l1: f64 = plan.coeffs.iter().map(|c| c.norm()).sum();
        assert!((l1 / plan.c_l1 - 1.0).abs() < 1e-12);
        let s = plan.coeff_sum();
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        let m = plan.nodes.len();
        for i in 0..m {
            assert!((plan.nodes[i] + plan.nodes[m - 1 - i]).abs() < 1e-9);
            assert!((plan.coeffs[i] - plan.coeffs[m - 1 - i].conj()).norm() < 1e-15);
        }
        let sum = summarize_plan(&p, &h).unwrap();
        assert!(sum.c_l1_exact && (sum.c_l1 - plan.c_l1).abs() < 1e-12);
    }

    #[test]
    fn l1_matches_adaptive_integral() {
        let (p, plan) = small_plan(0.75, 1.0, 1e-9);
        let oracle = abs_g_integral(&p, plan.header.k_cut);
        assert!((plan.c_l1 / oracle - 1.0).abs() < 1e-10, "{} vs {oracle}", plan.c_l1);
    }

    #[test]
    fn oversized_plan_rejected() {
        let spec = ProblemSpec { t: 1e8, ..ProblemSpec::default() };
        let p = KernelParams::new(spec.beta).unwrap();
        let hdr = plan_discretization(&spec, 1e-11, 1e-11).unwrap();
        assert!(matches!(build_plan(&p, &hdr), Err(Error::Size(_))));
        let s = summarize_plan(&p, &hdr).unwrap();
        assert!(!s.c_l1_exact);
        assert!(s.c_l1 > 1.0 && s.c_l1 < 2.0);
    }

    #[test]
    fn csv_export() {
        let (_, plan) = small_plan(0.75, 0.05, 1e-3);
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,k_j,re_c_j,im_c_j"));
        assert_eq!(text.lines().count() as u64, plan.header.m_total + 1);
    }
}
