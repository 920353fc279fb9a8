//! Command-line front end. `run` parses arguments, dispatches and maps
//! errors to exit codes: 0 success, 1 usage/domain/IO errors,
//! 2 infeasible budgets, 3 validation bound violations.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::budget::{equal_budget_with, optimize, BudgetOutcome, Method, OptimizeOptions, OptimizeResult};
use crate::cost::{speedup_ratio, CostReport, ProblemSpec};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::quad::build_plan;
use crate::validate::{check_aa_preconditions, run_suite, AaDiagnostics, SuiteConfig};

/// Relative `--out` paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "LCHS_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Parser, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[command(name = "lchs", version, about = "LCHS resource estimator and desk-scale validator")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Equal-budget cost estimate for one (t, eps, beta)
    Estimate(EstimateArgs),
    /// Optimized error budget and kernel parameter
    Optimize(OptimizeArgs),
    /// Cost table over a log-spaced t grid (CSV)
    Sweep(SweepArgs),
    /// Dense-matrix checks of the LCHS identity and SELECT structure
    Validate(ValidateArgs),
    /// Speedup ratio against externally supplied RLS query counts (CSV)
    Speedup(SpeedupArgs),
    /// Export quadrature nodes and coefficients (CSV)
    Plan(PlanArgs),
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecArgs {
    /// Evolution time
    #[arg(long, default_value_t = 1e4)]
    pub t: f64,
    /// Total error ε
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    /// Kernel parameter β in (0, 1)
    #[arg(long, default_value_t = 0.75)]
    pub beta: f64,
    /// Block-encoding subnormalization α_A
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub norm_l: f64,
    #[arg(long, default_value_t = 1.0)]
    pub norm_u0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub norm_ut: f64,
    /// Ancilla qubits of the block encoding of A
    #[arg(long, default_value_t = 0)]
    pub m_a: u32,
    /// Use the tight Gauss-Legendre order instead of the conservative one
    #[arg(long)]
    pub tight: bool,
    /// Budget nonzero errors for the coefficient, state and block-encoding oracles
    #[arg(long)]
    pub imperfect_oracles: bool,
}

impl SpecArgs {
    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            t: self.t,
            alpha_a: self.alpha,
            norm_l: self.norm_l,
            norm_u0: self.norm_u0,
            norm_ut: self.norm_ut,
            eps_total: self.eps,
            beta: self.beta,
            m_a: self.m_a,
        }
    }

    fn to_args(&self, out: &mut Vec<String>) {
        for (k, v) in [
            ("--t", self.t),
            ("--eps", self.eps),
            ("--beta", self.beta),
            ("--alpha", self.alpha),
            ("--norm-l", self.norm_l),
            ("--norm-u0", self.norm_u0),
            ("--norm-ut", self.norm_ut),
        ] {
            out.push(k.into());
            out.push(v.to_string());
        }
        out.push("--m-a".into());
        out.push(self.m_a.to_string());
        if self.tight {
            out.push("--tight".into());
        }
        if self.imperfect_oracles {
            out.push("--imperfect-oracles".into());
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchArgs {
    /// sol-aa, sol-exp or both
    #[arg(long, default_value = "both")]
    pub method: String,
    #[arg(long, default_value_t = 3000)]
    pub evals: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SearchArgs {
    fn methods(&self) -> Result<Vec<Method>> {
        match self.method.as_str() {
            "both" => Ok(vec![Method::SolAa, Method::SolExp]),
            m => Ok(vec![m.parse()?]),
        }
    }

    fn to_args(&self, out: &mut Vec<String>) {
        out.extend(["--method".into(), self.method.clone(), "--evals".into(), self.evals.to_string()]);
        out.extend(["--seed".into(), self.seed.to_string()]);
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 1e2)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e10)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1)]
    pub points_per_decade: u32,
    /// Fill the optimized columns
    #[arg(long)]
    pub optimize: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    pub t_values: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_v: f64,
    #[arg(long, default_value_t = 0.75)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// CSV with header t,rls_c_a,rls_c_0
    #[arg(long)]
    pub rls: PathBuf,
    #[arg(long, default_value_t = 1e-2)]
    pub chi_min: f64,
    #[arg(long, default_value_t = 1e2)]
    pub chi_max: f64,
    #[arg(long, default_value_t = 21)]
    pub chi_points: u32,
    /// Use optimized instead of equal-budget LCHS counts
    #[arg(long)]
    pub optimize: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.75)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub norm_l: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_trunc: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_disc: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Command-line arguments (without the program name) that parse back
    /// to this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = Vec::new();
        let push_out = |a: &mut Vec<String>, out: &Option<PathBuf>| {
            if let Some(p) = out {
                a.push("--out".into());
                a.push(p.display().to_string());
            }
        };
        match &self.command {
            Command::Estimate(e) => {
                a.push("estimate".into());
                e.spec.to_args(&mut a);
                push_out(&mut a, &e.out);
            }
            Command::Optimize(o) => {
                a.push("optimize".into());
                o.spec.to_args(&mut a);
                o.search.to_args(&mut a);
                push_out(&mut a, &o.out);
            }
            Command::Sweep(s) => {
                a.push("sweep".into());
                s.spec.to_args(&mut a);
                a.extend(["--t-min".into(), s.t_min.to_string(), "--t-max".into(), s.t_max.to_string()]);
                a.extend(["--points-per-decade".into(), s.points_per_decade.to_string()]);
                if s.optimize {
                    a.push("--optimize".into());
                }
                s.search.to_args(&mut a);
                push_out(&mut a, &s.out);
            }
            Command::Validate(v) => {
                a.push("validate".into());
                a.extend(["--trials".into(), v.trials.to_string(), "--d".into(), v.d.to_string()]);
                let ts: Vec<String> = v.t_values.iter().map(|t| t.to_string()).collect();
                a.extend(["--t-values".into(), ts.join(",")]);
                a.extend(["--eps-v".into(), v.eps_v.to_string(), "--beta".into(), v.beta.to_string()]);
                a.extend(["--seed".into(), v.seed.to_string()]);
                push_out(&mut a, &v.out);
            }
            Command::Speedup(s) => {
                a.push("speedup".into());
                s.spec.to_args(&mut a);
                a.extend(["--rls".into(), s.rls.display().to_string()]);
                a.extend(["--chi-min".into(), s.chi_min.to_string(), "--chi-max".into(), s.chi_max.to_string()]);
                a.extend(["--chi-points".into(), s.chi_points.to_string()]);
                if s.optimize {
                    a.push("--optimize".into());
                }
                s.search.to_args(&mut a);
                push_out(&mut a, &s.out);
            }
            Command::Plan(p) => {
                a.push("plan".into());
                for (k, v) in [
                    ("--t", p.t),
                    ("--beta", p.beta),
                    ("--norm-l", p.norm_l),
                    ("--eps-trunc", p.eps_trunc),
                    ("--eps-disc", p.eps_disc),
                ] {
                    a.push(k.into());
                    a.push(v.to_string());
                }
                push_out(&mut a, &p.out);
            }
        }
        a
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateOutput {
    pub config: EstimateArgs,
    pub spec: ProblemSpec,
    pub outcome: BudgetOutcome,
    pub aa_preconditions: AaDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOutput {
    pub config: OptimizeArgs,
    pub spec: ProblemSpec,
    pub equal: CostReport,
    pub results: Vec<OptimizeResult>,
    /// index into `results` of the lowest C_A
    pub best: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub c_a_equal: Option<u64>,
    pub c_a_opt: Option<u64>,
    pub c_0: Option<u64>,
    pub m: Option<u64>,
    pub k: Option<f64>,
    pub c_l1: Option<f64>,
    pub beta_opt: Option<f64>,
    pub c_l1_opt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlsRow {
    pub t: f64,
    pub rls_c_a: f64,
    pub rls_c_0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub t: f64,
    pub chi: f64,
    pub ell: f64,
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            let p = resolve_out(p);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, bytes)?;
        }
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn equal(args: &SpecArgs) -> Result<BudgetOutcome> {
    equal_budget_with(&args.spec(), !args.imperfect_oracles, args.tight)
}

fn best_optimized(spec: &ProblemSpec, args: &SpecArgs, search: &SearchArgs) -> Result<Vec<OptimizeResult>> {
    let opts = OptimizeOptions { eval_limit: search.evals, seed: search.seed, tight_q: args.tight };
    search.methods()?.into_iter().map(|m| optimize(spec, m, &opts)).collect()
}

fn argmin(results: &[OptimizeResult]) -> usize {
    (0..results.len()).min_by_key(|&i| results[i].outcome.report.c_a).unwrap_or(0)
}

pub fn estimate(args: &EstimateArgs) -> Result<EstimateOutput> {
    let spec = args.spec.spec();
    let outcome = equal(&args.spec)?;
    let aa = check_aa_preconditions(&spec, &outcome.plan, &outcome.budget);
    Ok(EstimateOutput { config: args.clone(), spec, outcome, aa_preconditions: aa })
}

pub fn optimize_cmd(args: &OptimizeArgs) -> Result<OptimizeOutput> {
    let spec = args.spec.spec();
    let eq = equal(&args.spec)?;
    if args.spec.imperfect_oracles {
        return Err(Error::Domain("the optimizer assumes perfect oracles".into()));
    }
    let results = best_optimized(&spec, &args.spec, &args.search)?;
    let best = argmin(&results);
    Ok(OptimizeOutput { config: args.clone(), spec, equal: eq.report, results, best })
}

pub fn t_grid(t_min: f64, t_max: f64, per_decade: u32) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) || per_decade == 0 {
        return Err(Error::Domain("t grid needs 0 < t_min <= t_max and points_per_decade >= 1".into()));
    }
    let steps = ((t_max / t_min).log10() * per_decade as f64 + 1e-9).floor() as u32;
    Ok((0..=steps).map(|i| t_min * 10f64.powf(i as f64 / per_decade as f64)).collect())
}

fn sweep_row(args: &SweepArgs, t: f64) -> SweepRow {
    let spec_args = SpecArgs { t, ..args.spec.clone() };
    let spec = spec_args.spec();
    let mut row = SweepRow { t, c_a_equal: None, c_a_opt: None, c_0: None, m: None, k: None, c_l1: None, beta_opt: None, c_l1_opt: None };
    if let Ok(eq) = equal(&spec_args) {
        row.c_a_equal = Some(eq.report.c_a);
        row.c_0 = Some(eq.report.c_0);
        row.m = Some(eq.report.m_total);
        row.k = Some(eq.report.k_cut);
        row.c_l1 = Some(eq.report.c_l1);
    }
    if args.optimize && !args.spec.imperfect_oracles {
        if let Ok(rs) = best_optimized(&spec, &spec_args, &args.search) {
            if let Some(b) = rs.get(argmin(&rs)) {
                row.c_a_opt = Some(b.outcome.report.c_a);
                row.beta_opt = Some(b.beta);
                row.c_l1_opt = Some(b.outcome.report.c_l1);
            }
        }
    }
    row
}

/// Rows in grid order; rows are computed on worker threads.
pub fn sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let grid = t_grid(args.t_min, args.t_max, args.points_per_decade)?;
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(grid.len());
    let mut rows: Vec<Option<SweepRow>> = vec![None; grid.len()];
    let chunk = grid.len().div_ceil(workers.max(1)).max(1);
    std::thread::scope(|s| {
        for (slot, ts) in rows.chunks_mut(chunk).zip(grid.chunks(chunk)) {
            s.spawn(move || {
                for (r, &t) in slot.iter_mut().zip(ts) {
                    *r = Some(sweep_row(args, t));
                }
            });
        }
    });
    Ok(rows.into_iter().map(|r| r.expect("sweep row")).collect())
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "C_A_equal", "C_A_opt", "C_0", "M", "K", "c_l1", "beta_opt", "c_l1_opt"])?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            cell(r.c_a_equal),
            cell(r.c_a_opt),
            cell(r.c_0),
            cell(r.m),
            cell(r.k),
            cell(r.c_l1),
            cell(r.beta_opt),
            cell(r.c_l1_opt),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rls_csv(path: &Path) -> Result<Vec<RlsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let want = ["t", "rls_c_a", "rls_c_0"];
    if headers.len() != 3 || headers.iter().zip(want).any(|(h, w)| h.trim() != w) {
        return Err(Error::Parse(format!("RLS CSV header must be t,rls_c_a,rls_c_0, got {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize::<RlsRow>() {
        let row = rec.map_err(|e| Error::Parse(format!("RLS CSV: {e}")))?;
        if !(row.t > 0.0 && row.rls_c_a >= 0.0 && row.rls_c_0 >= 0.0) {
            return Err(Error::Parse(format!("RLS CSV row has invalid values: {row:?}")));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("RLS CSV has no rows".into()));
    }
    Ok(rows)
}

/// χ = 0 followed by a log grid on [chi_min, chi_max].
pub fn chi_grid(chi_min: f64, chi_max: f64, points: u32) -> Result<Vec<f64>> {
    if !(chi_min > 0.0 && chi_max >= chi_min && chi_max.is_finite()) || points == 0 {
        return Err(Error::Domain("chi grid needs 0 < chi_min <= chi_max and chi_points >= 1".into()));
    }
    let mut g = vec![0.0];
    if points == 1 {
        g.push(chi_min);
    } else {
        let r = (chi_max / chi_min).ln();
        g.extend((0..points).map(|i| chi_min * (r * i as f64 / (points - 1) as f64).exp()));
    }
    Ok(g)
}

pub fn speedup(args: &SpeedupArgs) -> Result<Vec<SpeedupRow>> {
    let rls = read_rls_csv(&args.rls)?;
    let chis = chi_grid(args.chi_min, args.chi_max, args.chi_points)?;
    let mut rows = Vec::with_capacity(rls.len() * chis.len());
    for r in rls {
        let sa = SpecArgs { t: r.t, ..args.spec.clone() };
        let report = if args.optimize {
            let rs = best_optimized(&sa.spec(), &sa, &args.search)?;
            rs[argmin(&rs)].outcome.report
        } else {
            equal(&sa)?.report
        };
        for &chi in &chis {
            rows.push(SpeedupRow { t: r.t, chi, ell: speedup_ratio(&report, r.rls_c_a, r.rls_c_0, chi) });
        }
    }
    Ok(rows)
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match &cfg.command {
        Command::Estimate(a) => {
            let r = estimate(a)?;
            let rep = &r.outcome.report;
            writeln!(
                stderr,
                "C_A = {}  C_LCHS = {}  M = {} (log2 {})  K = {:.4}  delta = {:.6}  ancilla = {}",
                rep.c_a, rep.c_lchs, rep.m_total, rep.log2_m, rep.k_cut, rep.delta, rep.ancilla_estimate
            )?;
            emit(&a.out, stdout, &json(&r)?)?;
        }
        Command::Optimize(a) => {
            let r = optimize_cmd(a)?;
            let b = &r.results[r.best];
            writeln!(
                stderr,
                "equal C_A = {}  optimized C_A = {} ({:?}, beta = {:.4}, {} evals)",
                r.equal.c_a, b.outcome.report.c_a, b.method, b.beta, b.evals
            )?;
            emit(&a.out, stdout, &json(&r)?)?;
        }
        Command::Sweep(a) => {
            let rows = sweep(a)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            emit(&a.out, stdout, &buf)?;
        }
        Command::Validate(a) => {
            if a.d > crate::validate::MAX_DIM {
                return Err(Error::Domain(format!("--d {} exceeds the cap {}", a.d, crate::validate::MAX_DIM)));
            }
            let cfg = SuiteConfig {
                trials: a.trials,
                d: a.d,
                t_values: a.t_values.clone(),
                eps_v: a.eps_v,
                beta: a.beta,
                seed: a.seed,
                ..SuiteConfig::default()
            };
            let r = run_suite(&cfg)?;
            writeln!(
                stderr,
                "{} trials, max error {:e}, max error/bound {:e}: {}",
                r.trials.len(),
                r.max_measured,
                r.max_ratio,
                if r.all_passed { "all passed" } else { "BOUND VIOLATED" }
            )?;
            emit(&a.out, stdout, &json(&r)?)?;
            if !r.all_passed {
                return Ok(EXIT_VIOLATION);
            }
        }
        Command::Speedup(a) => {
            let rows = speedup(a)?;
            let mut buf = Vec::new();
            write_rows(&rows, &mut buf)?;
            emit(&a.out, stdout, &buf)?;
        }
        Command::Plan(a) => {
            let spec = ProblemSpec { t: a.t, beta: a.beta, norm_l: a.norm_l, alpha_a: a.norm_l, ..Default::default() };
            let header = crate::bounds::plan_discretization(&spec, a.eps_trunc, a.eps_disc)?;
            let plan = build_plan(&KernelParams::new(a.beta)?, &header)?;
            let mut buf = Vec::new();
            plan.write_csv(&mut buf)?;
            emit(&a.out, stdout, &buf)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
            } else {
                let _ = write!(stdout, "{e}");
            }
            return code;
        }
    };
    match dispatch(&cfg, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run() -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with(std::env::args_os(), &mut out, &mut err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("lchs").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn round_trip() {
        for args in [
            vec!["estimate", "--t", "1e4", "--eps", "1e-10", "--tight"],
            vec!["optimize", "--method", "sol-exp", "--evals", "200", "--seed", "4", "--out", "x.json"],
            vec!["sweep", "--optimize", "--t-min", "10", "--t-max", "1000", "--points-per-decade", "2"],
            vec!["validate", "--d", "4", "--t-values", "0.25,1", "--seed", "7"],
            vec!["speedup", "--rls", "r.csv", "--chi-points", "5", "--imperfect-oracles"],
            vec!["plan", "--t", "0.5"],
        ] {
            let cfg = parse(&args);
            let again = parse(&cfg.to_args().iter().map(String::as_str).collect::<Vec<_>>());
            assert_eq!(cfg, again);
            let js = serde_json::to_string(&cfg).unwrap();
            assert_eq!(serde_json::from_str::<RunConfig>(&js).unwrap(), cfg);
        }
    }

    #[test]
    fn grids() {
        let g = t_grid(1e2, 1e10, 1).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g[8] / 1e10 - 1.0).abs() < 1e-12);
        assert_eq!(t_grid(1.0, 100.0, 2).unwrap().len(), 5);
        let c = chi_grid(0.1, 10.0, 3).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[2] - 1.0).abs() < 1e-12 && (c[3] - 10.0).abs() < 1e-12);
        assert!(chi_grid(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn exit_codes() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(run_with(["lchs", "estimate", "--eps", "2"], &mut o, &mut e), EXIT_INFEASIBLE);
        assert_eq!(run_with(["lchs", "estimate", "--beta", "1.0"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run_with(["lchs", "estimate", "--t", "abc"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run_with(["lchs", "validate", "--d", "64"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run_with(["lchs", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
