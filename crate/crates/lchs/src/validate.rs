//! Brute-force checks on small dense generators: matrix exponentials, the
//! LCHS identity against e^{-At}, the SELECT block structure, C_max and the
//! amplification preconditions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::plan_discretization;
use crate::budget::ErrorBudget;
use crate::cost::{delta_gap, eps_lchs, eps_v, ProblemSpec};
use crate::error::{domain, Error, Result};
use crate::integrate::{adaptive, Quantity};
use crate::kernel::KernelParams;
use crate::quad::{build_plan, DiscretizationPlan, PlanSummary};

use std::ops::{Add, Mul, Sub};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const MAX_DIM: usize = 32;
pub const MAX_SELECT_NODES: usize = 16;
pub const MAX_SELECT_DIM: usize = 8;
const EXPM_MAX_DIM: usize = 64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A = L + iH with L, H Hermitian. `shift` is the multiple of the identity
/// already added to make L positive semidefinite, so the original generator
/// is A - shift·I and its solution is e^{shift·t} times ours.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub a: CMatrix,
    pub l: CMatrix,
    pub h: CMatrix,
    pub shift: f64,
}

impl Generator {
    pub fn new(a: CMatrix, shift: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return domain("generator must be a nonempty square matrix");
        }
        let ah = a.adjoint();
        let l = (&a + &ah) * c(0.5);
        let h = (&a - &ah) * (c(0.5) / I);
        Ok(Self { a, l, h, shift })
    }

    /// Adds |min(λ(L), 0)|·I so that L becomes PSD.
    pub fn shifted(a0: CMatrix) -> Result<Self> {
        let g = Self::new(a0, 0.0)?;
        let shift = (-min_eigenvalue(&g.l)).max(0.0);
        let d = g.dim();
        Self::new(g.a + CMatrix::identity(d, d) * c(shift), shift)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn norm_l(&self) -> f64 {
        spectral_norm(&self.l)
    }

    pub fn lambda_min_l(&self) -> f64 {
        min_eigenvalue(&self.l)
    }

    /// kL + H
    pub fn effective(&self, k: f64) -> CMatrix {
        &self.l * c(k) + &self.h
    }
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

fn min_eigenvalue(hermitian: &CMatrix) -> f64 {
    hermitian.clone().symmetric_eigen().eigenvalues.min()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

/// Seeded complex matrix with entries uniform in the unit square, shifted
/// so L is PSD and then scaled to unit spectral norm.
pub fn random_generator(d: usize, seed: u64) -> Result<Generator> {
    if !(2..=MAX_DIM).contains(&d) {
        return domain(format!("dimension {d} outside [2, {MAX_DIM}]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0 = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let g = Generator::shifted(a0)?;
    let s = spectral_norm(&g.a);
    Generator::new(g.a * c(1.0 / s), g.shift / s)
}

pub fn random_unit_vector(d: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let v = CVector::from_fn(d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let n = v.norm();
    v * c(1.0 / n)
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

fn norm1(m: &CMatrix) -> f64 {
    m.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// e^{scale·m} by degree-13 Padé scaling and squaring.
pub fn expm_pade(m: &CMatrix, scale: Complex64) -> Result<CMatrix> {
    let d = m.nrows();
    if !m.is_square() || d > EXPM_MAX_DIM {
        return Err(Error::Size(format!("expm needs a square matrix of size <= {EXPM_MAX_DIM}")));
    }
    let mut a = m * scale;
    let n1 = norm1(&a);
    if !n1.is_finite() {
        return domain("expm argument is not finite");
    }
    let s = if n1 > THETA13 { (n1 / THETA13).log2().ceil() as i32 } else { 0 };
    a *= c(0.5f64.powi(s));
    let id = CMatrix::identity(d, d);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| c(PADE13[i]);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Convergence("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Eigendecomposition of a Hermitian matrix: (eigenvalues, eigenvectors).
fn herm_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let e = m.clone().symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

/// e^{-iτH} for Hermitian H.
pub fn expm_hermitian(h: &CMatrix, tau: f64) -> CMatrix {
    let (lam, v) = herm_eigen(h);
    let phases = CVector::from_iterator(lam.len(), lam.iter().map(|&x| Complex64::from_polar(1.0, -tau * x)));
    let mut vd = v.clone();
    for (j, mut col) in vd.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    vd * v.adjoint()
}

/// e^{scale·m}; Hermitian m with imaginary scale goes through the
/// eigendecomposition, everything else through Padé.
pub fn expm(m: &CMatrix, scale: Complex64) -> Result<CMatrix> {
    if m.nrows() > EXPM_MAX_DIM {
        return Err(Error::Size(format!("expm limited to size {EXPM_MAX_DIM}")));
    }
    let tol = 1e-14 * max_abs(m).max(1.0);
    if scale.re == 0.0 && is_hermitian(m, tol) {
        let herm = (m + m.adjoint()) * c(0.5);
        return Ok(expm_hermitian(&herm, -scale.im));
    }
    expm_pade(m, scale)
}

/// max |U†U - I|
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let d = u.ncols();
    max_abs(&(u.adjoint() * u - CMatrix::identity(d, d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplyStats {
    pub terms: u64,
    /// largest |V†V - I| over the eigenbases used, which bounds the
    /// unitarity defect of each e^{-it(k_jL+H)}
    pub max_unitarity_deviation: f64,
}

/// e^{-it(kL+H)} u0 with the eigenbasis unitarity defect
fn propagate(generator: &Generator, k: f64, t: f64, u0: &CVector) -> (CVector, f64) {
    let (lam, v) = herm_eigen(&generator.effective(k));
    let mut w = v.ad_mul(u0);
    for (wi, &li) in w.iter_mut().zip(lam.iter()) {
        *wi *= Complex64::from_polar(1.0, -t * li);
    }
    (&v * w, unitarity_deviation(&v))
}

/// Σ_j c_j e^{-it(k_jL+H)} u0
pub fn lchs_apply(generator: &Generator, plan: &DiscretizationPlan, t: f64, u0: &CVector) -> Result<CVector> {
    lchs_apply_detailed(generator, plan, t, u0).map(|(v, _)| v)
}

pub fn lchs_apply_detailed(
    generator: &Generator,
    plan: &DiscretizationPlan,
    t: f64,
    u0: &CVector,
) -> Result<(CVector, ApplyStats)> {
    let d = generator.dim();
    if u0.len() != d {
        return domain(format!("u0 has length {} but the generator is {d}x{d}", u0.len()));
    }
    let mut out = CVector::zeros(d);
    let mut worst: f64 = 0.0;
    for (&k, &cj) in plan.nodes.iter().zip(&plan.coeffs) {
        let (y, dev) = propagate(generator, k, t, u0);
        out += y * cj;
        worst = worst.max(dev);
    }
    Ok((out, ApplyStats { terms: plan.nodes.len() as u64, max_unitarity_deviation: worst }))
}

/// Fixed-size complex vector so the adaptive integrator can take vector
/// integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Small<const N: usize>([Complex64; N]);

impl<const N: usize> Add for Small<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for i in 0..N {
            self.0[i] += o.0[i];
        }
        self
    }
}

impl<const N: usize> Sub for Small<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for i in 0..N {
            self.0[i] -= o.0[i];
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Small<N> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for z in self.0.iter_mut() {
            *z *= s;
        }
        self
    }
}

impl<const N: usize> Quantity for Small<N> {
    fn zero() -> Self {
        Small([Complex64::new(0.0, 0.0); N])
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// ∫_{-K}^{K} g(k) e^{-it(kL+H)} u0 dk by adaptive Gauss-Kronrod, for
/// generators of dimension N. Independent of the Gauss-Legendre plans.
pub fn lchs_apply_adaptive<const N: usize>(
    generator: &Generator,
    params: &KernelParams,
    k_cut: f64,
    t: f64,
    u0: &CVector,
    tol: f64,
) -> Result<CVector> {
    if generator.dim() != N || u0.len() != N {
        return domain("dimension mismatch in lchs_apply_adaptive");
    }
    let r = adaptive(
        |k| {
            let (y, _) = propagate(generator, k, t, u0);
            let g = params.g(k);
            let mut s = [Complex64::new(0.0, 0.0); N];
            for i in 0..N {
                s[i] = y[i] * g;
            }
            Small(s)
        },
        -k_cut,
        k_cut,
        tol,
        0.0,
        200_000,
    );
    if !r.converged {
        return Err(Error::Convergence(format!("adaptive LCHS integral error {:e}", r.error)));
    }
    Ok(CVector::from_column_slice(&r.value.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectCheck {
    pub nodes: Vec<f64>,
    pub dim: usize,
    pub t: f64,
    /// max entrywise |e^{-itS} - ⊕_j e^{-it(k_jL+H)}| including off-diagonal blocks
    pub block_deviation: f64,
    /// max entrywise |((-iI+D)⊗A + (iI+D)⊗A†)/2 - (D⊗L + I⊗H)|
    pub decomposition_error: f64,
    pub passed: bool,
}

pub const SELECT_BLOCK_TOL: f64 = 1e-10;
pub const SELECT_DECOMP_TOL: f64 = 1e-12;

/// Builds S = Σ_j |j><j| ⊗ (k_jL + H) densely, exponentiates it by Padé and
/// compares with the per-node Hermitian exponentials.
pub fn check_select_structure(generator: &Generator, nodes: &[f64], t: f64) -> Result<SelectCheck> {
    let n = nodes.len();
    let d = generator.dim();
    if n == 0 || n > MAX_SELECT_NODES {
        return Err(Error::Size(format!("SELECT check takes 1..={MAX_SELECT_NODES} nodes, got {n}")));
    }
    if d > MAX_SELECT_DIM {
        return Err(Error::Size(format!("SELECT check takes d <= {MAX_SELECT_DIM}, got {d}")));
    }
    let nd = n * d;
    let mut s = CMatrix::zeros(nd, nd);
    for (j, &k) in nodes.iter().enumerate() {
        s.view_mut((j * d, j * d), (d, d)).copy_from(&generator.effective(k));
    }
    let es = expm_pade(&s, Complex64::new(0.0, -t))?;
    let mut direct = CMatrix::zeros(nd, nd);
    for (j, &k) in nodes.iter().enumerate() {
        direct.view_mut((j * d, j * d), (d, d)).copy_from(&expm_hermitian(&generator.effective(k), t));
    }
    let block_deviation = max_abs(&(es - direct));

    let dk = CMatrix::from_diagonal(&CVector::from_iterator(n, nodes.iter().map(|&k| c(k))));
    let id_n = CMatrix::identity(n, n);
    let lhs = ((&dk - &id_n * I).kronecker(&generator.a) + (&dk + &id_n * I).kronecker(&generator.a.adjoint()))
        * c(0.5);
    let rhs = dk.kronecker(&generator.l) + id_n.kronecker(&generator.h);
    let decomposition_error = max_abs(&(lhs - &rhs));
    Ok(SelectCheck {
        nodes: nodes.to_vec(),
        dim: d,
        t,
        block_deviation,
        decomposition_error,
        passed: block_deviation <= SELECT_BLOCK_TOL && decomposition_error <= SELECT_DECOMP_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmaxPoint {
    pub t: f64,
    pub propagator_norm: f64,
    pub envelope: f64,
}

pub const CMAX_TOL: f64 = 1e-9;

/// ‖e^{-tA}‖ ≤ e^{-t λ_min(L)} ≤ 1 on the grid, up to `CMAX_TOL`.
pub fn check_cmax(generator: &Generator, t_grid: &[f64]) -> Result<(bool, Vec<CmaxPoint>)> {
    let lmin = generator.lambda_min_l();
    let mut ok = true;
    let mut pts = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let p = spectral_norm(&expm_pade(&generator.a, c(-t))?);
        let env = (-t * lmin).exp();
        ok &= p <= env + CMAX_TOL && env <= 1.0 + CMAX_TOL;
        pts.push(CmaxPoint { t, propagator_norm: p, envelope: env });
    }
    Ok((ok, pts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaDiagnostics {
    /// ε_LCHS/(‖c‖₁‖u₀‖), needs ≤ 1/12
    pub eps_ratio: f64,
    /// (‖u(t)‖ + ε_v)/(‖c‖₁‖u₀‖) as an upper bound on ‖v(t)‖/(‖c‖₁‖u₀‖), needs ≤ 9/10
    pub norm_ratio: f64,
    /// needs ≤ 9/5; NaN when the gap is infeasible
    pub delta: f64,
    pub eps_ok: bool,
    pub norm_ok: bool,
    pub delta_ok: bool,
    pub passed: bool,
}

pub fn check_aa_preconditions(spec: &ProblemSpec, plan: &PlanSummary, budget: &ErrorBudget) -> AaDiagnostics {
    let scale = plan.c_l1 * spec.norm_u0;
    let el = eps_lchs(spec, plan, budget);
    let ev = eps_v(spec, budget);
    let eps_ratio = el / scale;
    let norm_ratio = (spec.norm_ut + ev) / scale;
    let delta = delta_gap(spec, plan.c_l1, el, ev).unwrap_or(f64::NAN);
    let eps_ok = eps_ratio <= 1.0 / 12.0;
    let norm_ok = norm_ratio <= 0.9;
    let delta_ok = delta <= 1.8;
    AaDiagnostics { eps_ratio, norm_ratio, delta, eps_ok, norm_ok, delta_ok, passed: eps_ok && norm_ok && delta_ok }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub d: usize,
    pub t_values: Vec<f64>,
    pub eps_v: f64,
    pub beta: f64,
    pub seed: u64,
    pub select_nodes: usize,
    pub select_d: usize,
    pub cmax_grid: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            d: 8,
            t_values: vec![0.5, 1.0, 2.0],
            eps_v: 1e-6,
            beta: 0.75,
            seed: 0,
            select_nodes: 8,
            select_d: 4,
            cmax_grid: vec![0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_DIM).contains(&self.d) {
            return domain(format!("d = {} outside [2, {MAX_DIM}]", self.d));
        }
        if !(2..=MAX_SELECT_DIM).contains(&self.select_d) {
            return domain(format!("select_d = {} outside [2, {MAX_SELECT_DIM}]", self.select_d));
        }
        if self.select_nodes == 0 || self.select_nodes > MAX_SELECT_NODES {
            return domain(format!("select_nodes = {} outside [1, {MAX_SELECT_NODES}]", self.select_nodes));
        }
        if !(self.eps_v > 0.0 && self.eps_v < 1.0) {
            return domain("eps_v must lie in (0, 1)");
        }
        if self.t_values.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return domain("t values must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRun {
    pub seed: u64,
    pub t: f64,
    pub norm_l: f64,
    pub shift: f64,
    pub terms: u64,
    pub k_cut: f64,
    pub q_points: u32,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    /// error and bound for the original generator A - shift·I
    pub measured_unshifted: f64,
    pub bound_unshifted: f64,
    pub exact_norm: f64,
    pub norm_nonincrease: bool,
    pub max_unitarity_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub runs: Vec<TrialRun>,
    pub select: SelectCheck,
    pub cmax_ok: bool,
    pub cmax: Vec<CmaxPoint>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub trials: Vec<TrialReport>,
    pub max_ratio: f64,
    pub max_measured: f64,
    pub all_passed: bool,
}

pub const UNITARITY_TOL: f64 = 1e-10;

fn spread(nodes: &[f64], count: usize) -> Vec<f64> {
    let m = nodes.len();
    if count >= m {
        return nodes.to_vec();
    }
    if count == 1 {
        return vec![nodes[m / 2]];
    }
    (0..count).map(|i| nodes[i * (m - 1) / (count - 1)]).collect()
}

pub fn run_trial(cfg: &SuiteConfig, index: usize) -> Result<TrialReport> {
    let seed = cfg.seed.wrapping_add(index as u64);
    let g = random_generator(cfg.d, seed)?;
    let u0 = random_unit_vector(cfg.d, seed);
    let norm_l = g.norm_l();
    let kernel = KernelParams::new(cfg.beta)?;
    let half = cfg.eps_v / 2.0;
    let mut runs = Vec::with_capacity(cfg.t_values.len());
    for &t in &cfg.t_values {
        let spec = ProblemSpec { t, norm_l, alpha_a: 1.0, beta: cfg.beta, eps_total: cfg.eps_v, ..Default::default() };
        let header = plan_discretization(&spec, half, half)?;
        let plan = build_plan(&kernel, &header)?;
        let exact = expm_pade(&g.a, c(-t))? * &u0;
        let (approx, stats) = lchs_apply_detailed(&g, &plan, t, &u0)?;
        let measured = (&exact - approx).norm();
        let bound = u0.norm() * (half + half);
        let grow = (g.shift * t).exp();
        let exact_norm = exact.norm();
        let norm_nonincrease = exact_norm <= u0.norm() + 1e-12;
        runs.push(TrialRun {
            seed,
            t,
            norm_l,
            shift: g.shift,
            terms: stats.terms,
            k_cut: header.k_cut,
            q_points: header.q_points,
            measured,
            bound,
            ratio: measured / bound,
            measured_unshifted: measured * grow,
            bound_unshifted: bound * grow,
            exact_norm,
            norm_nonincrease,
            max_unitarity_deviation: stats.max_unitarity_deviation,
            passed: measured <= bound && norm_nonincrease && stats.max_unitarity_deviation <= UNITARITY_TOL,
        });
    }
    let gs = random_generator(cfg.select_d, seed)?;
    let t_sel = cfg.t_values.first().copied().unwrap_or(1.0);
    let spec = ProblemSpec { t: t_sel, norm_l: gs.norm_l(), beta: cfg.beta, ..Default::default() };
    let plan = build_plan(&kernel, &plan_discretization(&spec, half, half)?)?;
    let select = check_select_structure(&gs, &spread(&plan.nodes, cfg.select_nodes), t_sel)?;
    let (cmax_ok, cmax) = check_cmax(&g, &cfg.cmax_grid)?;
    let passed = runs.iter().all(|r| r.passed) && select.passed && cmax_ok;
    Ok(TrialReport { seed, runs, select, cmax_ok, cmax, passed })
}

/// Runs the trials across the available cores; results are in trial order
/// and independent of the thread count.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(cfg.trials.max(1));
    let mut slots: Vec<Option<Result<TrialReport>>> = (0..cfg.trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = cfg.trials.div_ceil(workers).max(1);
        for (w, part) in slots.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (j, slot) in part.iter_mut().enumerate() {
                    *slot = Some(run_trial(cfg, w * chunk + j));
                }
            });
        }
    });
    let trials = slots.into_iter().map(|s| s.expect("trial not run")).collect::<Result<Vec<_>>>()?;
    let runs = || trials.iter().flat_map(|t| t.runs.iter());
    let max_ratio = runs().map(|r| r.ratio).fold(0.0, f64::max);
    let max_measured = runs().map(|r| r.measured).fold(0.0, f64::max);
    let all_passed = trials.iter().all(|t| t.passed);
    Ok(SuiteReport { config: cfg.clone(), trials, max_ratio, max_measured, all_passed })
}
