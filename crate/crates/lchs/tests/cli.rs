use std::process::Command;

fn lchs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lchs"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = lchs().args(args).output().unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    )
}

#[test]
fn estimate_json_fields() {
    let (code, out, _) = run(&["estimate", "--t", "1e4", "--eps", "1e-10", "--beta", "0.75", "--alpha", "1", "--norm-l", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let r = &v["outcome"]["report"];
    for key in ["c_a", "c_lchs", "m_total", "k_cut", "delta", "ancilla_estimate", "c_r", "excluded_queries"] {
        assert!(!r[key].is_null(), "missing {key}");
    }
    // golden regression, equal budget at t = 1e4
    assert_eq!(r["c_lchs"], 423);
    assert_eq!(r["c_a"], 6917579991u64);
    assert_eq!(r["m_total"], 981211620u64);
    assert_eq!(r["log2_m"], 30);
    assert_eq!(r["ancilla_estimate"], 35);
    assert!(v["outcome"]["check"]["satisfied"].as_bool().unwrap());
    assert!(v["aa_preconditions"]["passed"].as_bool().unwrap());
}

#[test]
fn estimate_errors() {
    let (code, _, err) = run(&["estimate", "--eps", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("infeasible"), "{err}");
    assert_eq!(run(&["estimate", "--beta", "1.0"]).0, 1);
    assert_eq!(run(&["estimate", "--frobnicate"]).0, 1);
}

#[test]
fn tight_mode_never_larger() {
    let (_, a, _) = run(&["estimate", "--t", "1e6"]);
    let (_, b, _) = run(&["estimate", "--t", "1e6", "--tight"]);
    let a: serde_json::Value = serde_json::from_str(&a).unwrap();
    let b: serde_json::Value = serde_json::from_str(&b).unwrap();
    let m = |v: &serde_json::Value| v["outcome"]["report"]["m_total"].as_u64().unwrap();
    assert!(m(&b) <= m(&a));
}

#[test]
fn sweep_csv_shape_and_monotone() {
    let (code, out, _) = run(&["sweep", "--optimize", "--evals", "600"]);
    assert_eq!(code, 0);
    let mut rd = csv::Reader::from_reader(out.as_bytes());
    let h: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&h[..8], ["t", "C_A_equal", "C_A_opt", "C_0", "M", "K", "c_l1", "beta_opt"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    let ca: Vec<u64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(ca.windows(2).all(|w| w[0] <= w[1]));
    for r in &rows {
        let eq: u64 = r[1].parse().unwrap();
        let opt: u64 = r[2].parse().unwrap();
        assert!(opt <= eq);
    }
    let last_m: u64 = rows[8][4].parse().unwrap();
    assert!((45..=51).contains(&(64 - (last_m - 1).leading_zeros())));
}

#[test]
fn sweep_infeasible_rows_are_empty() {
    let (code, out, _) = run(&["sweep", "--eps", "1.5", "--t-min", "1", "--t-max", "10"]);
    assert_eq!(code, 0);
    for line in out.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[1..].iter().all(|c| c.is_empty()), "{line}");
    }
}

#[test]
fn validate_deterministic_and_capped() {
    let args = ["validate", "--trials", "2", "--d", "4", "--t-values", "0.5", "--seed", "7"];
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v["all_passed"].as_bool().unwrap());
    assert_eq!(run(&["validate", "--d", "64"]).0, 1);
}

#[test]
fn out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = lchs()
        .args(["plan", "--t", "0.1", "--eps-trunc", "1e-3", "--eps-disc", "1e-3", "--out", "sub/plan.csv"])
        .env("LCHS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("sub/plan.csv")).unwrap();
    assert!(text.starts_with("index,k_j,re_c_j,im_c_j\n"));
}

#[test]
fn speedup_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "t,foo\n1,2\n").unwrap();
    assert_eq!(run(&["speedup", "--rls", p.to_str().unwrap()]).0, 1);
    std::fs::write(&p, "t,rls_c_a,rls_c_0\n1e4,abc,1\n").unwrap();
    assert_eq!(run(&["speedup", "--rls", p.to_str().unwrap()]).0, 1);
    assert_eq!(run(&["speedup", "--rls", "/nonexistent/x.csv"]).0, 1);
}

#[test]
fn speedup_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rls.csv");
    std::fs::write(&p, "t,rls_c_a,rls_c_0\n1e4,1e12,1e9\n").unwrap();
    let (code, out, _) = run(&["speedup", "--t", "1e4", "--rls", p.to_str().unwrap(), "--chi-points", "4"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,chi,ell"));
    assert_eq!(lines.count(), 5);
}
