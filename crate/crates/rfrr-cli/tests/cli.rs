//! End-to-end tests of the `rfrr` binary: exit codes, output schemas, and
//! reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rfrr")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rfrr_cli_{name}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const RANK_ONE_EQUIV: &str = r#"
schema_version = 1
mode = "equiv"
sigma2 = 0.1

[spectrum]
inline = { eigs = [1.0], target = [1.0] }

[grid]
n = [2]
p = [2]
lambda = [1.125]

[solver]
tol = 1e-14
"#;

#[test]
fn equiv_rank_one_row() {
    let dir = tmpdir("equiv");
    let cfg = write_config(&dir, "eq.toml", RANK_ONE_EQUIV);
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "n,p,lambda,sigma2,nu1,nu2,upsilon,chi,bias,variance,risk,\
         mc_risk,mc_stderr,rel_err,gamma_b,gamma_v,gamma,region,status,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let get = |name: &str| -> f64 {
        let idx = header.split(',').position(|c| c == name).unwrap();
        row[idx].parse().unwrap()
    };
    assert!((get("nu1") - 0.75).abs() < 1e-10);
    assert!((get("nu2") - 1.0).abs() < 1e-10);
    assert!((get("bias") - 1.0 / 3.0).abs() < 1e-10);
    assert!((get("variance") - 1.0 / 60.0).abs() < 1e-10);
    assert!((get("risk") - 0.35).abs() < 1e-10);
    assert_eq!(row[header.split(',').position(|c| c == "status").unwrap()], "ok");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn rates_mode_emits_crossovers() {
    let dir = tmpdir("rates");
    let cfg = write_config(
        &dir,
        "rates.toml",
        r#"
schema_version = 1
mode = "rates"
sigma2 = 0.1

[rates]
alpha = 2.0
r = 0.5
ell = [0.5]
q = [0.25, 0.75]
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap().to_string();
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    for line in text.lines().skip(1) {
        let row: Vec<&str> = line.split(',').collect();
        let ell_star: f64 = row[idx("ell_star")].parse().unwrap();
        let q_star: f64 = row[idx("q_star")].parse().unwrap();
        let gamma_star: f64 = row[idx("gamma_star")].parse().unwrap();
        assert!((ell_star - 2.0 / 3.0).abs() < 1e-12);
        assert!((q_star - 1.0 / 3.0).abs() < 1e-12);
        assert!((gamma_star - 2.0 / 3.0).abs() < 1e-12);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn empty_grid_is_config_error_naming_field() {
    let dir = tmpdir("badgrid");
    let cfg = write_config(
        &dir,
        "bad.toml",
        r#"
schema_version = 1
mode = "equiv"
[spectrum]
inline = { eigs = [1.0], target = [1.0] }
[grid]
n = []
p = [2]
lambda = [1.0]
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid.n"), "stderr: {err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_key_is_config_error() {
    let dir = tmpdir("badkey");
    let cfg = write_config(
        &dir,
        "bad.toml",
        r#"
schema_version = 1
mode = "equiv"
typo_field = 3
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("typo_field"), "stderr: {err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn out_of_regime_point_flushes_rows_and_exits_3() {
    // lambda at the edge of representability drives Upsilon to 1 at n = p;
    // the row must carry an error status and the process must exit 3.
    let dir = tmpdir("exit3");
    let cfg = write_config(
        &dir,
        "peak.toml",
        r#"
schema_version = 1
mode = "equiv"
sigma2 = 0.1

[spectrum]
power_law = { alpha = 2.0, r = 0.5, trunc = 100 }

[grid]
n = [50]
p = [50]
lambda = [1e-300, 0.5]
"#,
    );
    let out_path = dir.join("rows.csv");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--no-timestamp",
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "header + 2 rows");
    assert!(lines[1].contains("error:"), "first row should fail: {}", lines[1]);
    assert!(lines[2].ends_with("ok,0"), "second row should pass: {}", lines[2]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("n=50"), "failure should name the grid point: {err}");
    std::fs::remove_dir_all(&dir).ok();
}

const SIM_CONFIG: &str = r#"
schema_version = 1
mode = "sweep"
sigma2 = 0.1
seed = 11

[spectrum]
power_law = { alpha = 2.0, r = 0.75, trunc = 150 }

[grid]
n = [60]
p = [40, 80]
lambda = [0.1]

[simulate]
replicates = 6
"#;

#[test]
fn sweep_reports_relative_error_and_reproduces_bytes() {
    let dir = tmpdir("sweep");
    let cfg = write_config(&dir, "sweep.toml", SIM_CONFIG);
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "2")] {
        let out = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--threads",
            threads,
            "--no-timestamp",
            "--quiet",
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let ta = std::fs::read(&a).unwrap();
    let tb = std::fs::read(&b).unwrap();
    assert_eq!(ta, tb, "outputs differ across thread counts");

    let text = String::from_utf8(ta).unwrap();
    let header = text.lines().next().unwrap();
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    for line in text.lines().skip(1) {
        let row: Vec<&str> = line.split(',').collect();
        let rel: f64 = row[idx("rel_err")].parse().unwrap();
        let mc: f64 = row[idx("mc_risk")].parse().unwrap();
        let risk: f64 = row[idx("risk")].parse().unwrap();
        assert!(((mc - risk).abs() / risk - rel).abs() < 1e-12);
        assert!(rel < 1.0, "MC far off the equivalent: {line}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn phase_mode_emits_grid_without_crossover_columns() {
    let dir = tmpdir("phase");
    let cfg = write_config(
        &dir,
        "phase.toml",
        r#"
schema_version = 1
mode = "phase"
sigma2 = 0.1

[rates]
alpha = 2.0
r = 0.75
ell = { linspace = [0.0, 4.0, 5] }
q = { linspace = [0.0, 2.0, 4] }
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("valid") && !header.contains("ell_star"));
    assert_eq!(text.lines().count(), 1 + 5 * 4);
    // Plateau corner must be labeled.
    assert!(text.contains("plateau"), "no plateau rows in:\n{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn replicate_dump_writes_per_replicate_risks() {
    let dir = tmpdir("dump");
    let dump = dir.join("reps.csv");
    let cfg = write_config(
        &dir,
        "sim.toml",
        &format!(
            r#"
schema_version = 1
mode = "simulate"
sigma2 = 0.1
seed = 5

[spectrum]
power_law = {{ alpha = 2.0, r = 0.5, trunc = 60 }}

[grid]
n = [25]
p = [15, 30]
lambda = [0.2]

[simulate]
replicates = 4
dump_replicates = "{}"
"#,
            dump.display()
        ),
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().next().unwrap(), "point_index,replicate,risk");
    assert_eq!(text.lines().count(), 1 + 2 * 4, "2 points x 4 replicates");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_rejects_feature_map() {
    let dir = tmpdir("sweepfm");
    let cfg = write_config(
        &dir,
        "bad.toml",
        r#"
schema_version = 1
mode = "sweep"
[spectrum]
inline = { eigs = [1.0], target = [1.0] }
[grid]
n = [10]
p = [5]
lambda = [0.1]
[simulate]
replicates = 2
[simulate.feature_map]
kind = "relu"
d = 4
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn env_var_thread_fallback_matches_flag() {
    let dir = tmpdir("envthreads");
    let cfg = write_config(&dir, "sweep.toml", SIM_CONFIG);
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--threads",
        "2",
        "--no-timestamp",
        "--quiet",
    ]);
    assert!(out.status.success());
    let out = Command::new(bin())
        .env("RFRR_THREADS", "2")
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
            "--no-timestamp",
            "--quiet",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn timestamp_header_is_present_unless_suppressed() {
    let dir = tmpdir("ts");
    let cfg = write_config(&dir, "eq.toml", RANK_ONE_EQUIV);
    let with = run(&["--config", cfg.to_str().unwrap(), "--quiet"]);
    let text = String::from_utf8(with.stdout).unwrap();
    assert!(text.starts_with("# generated "), "missing timestamp header");
    let without = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    let text = String::from_utf8(without.stdout).unwrap();
    assert!(text.starts_with("n,p,"), "timestamp not suppressed");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn json_output_parses_and_carries_rows() {
    let dir = tmpdir("json");
    let cfg = write_config(&dir, "eq.toml", RANK_ONE_EQUIV);
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--no-timestamp",
        "--quiet",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["mode"], "equiv");
    assert!(doc.get("generated").is_none());
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0]["risk"].as_f64().unwrap() - 0.35).abs() < 1e-10);
    assert_eq!(rows[0]["status"], "ok");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn diag_mode_reports_spectral_quantities() {
    let dir = tmpdir("diag");
    let cfg = write_config(
        &dir,
        "diag.toml",
        r#"
schema_version = 1
mode = "diag"
sigma2 = 0.1

[spectrum]
power_law = { alpha = 2.0, r = 0.5, trunc = 200 }

[grid]
n = [100]
p = [50]
lambda = [0.01]

[diag]
eta_star = 0.25
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("rho_p") && header.contains("err_rate") && header.contains("m"));
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let rho_p: f64 = row[idx("rho_p")].parse().unwrap();
    let gamma_plus: f64 = row[idx("gamma_plus")].parse().unwrap();
    let gamma_lambda: f64 = row[idx("gamma_lambda")].parse().unwrap();
    assert!(rho_p >= 1.0);
    assert!(gamma_plus >= gamma_lambda);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn feature_map_simulation_runs() {
    let dir = tmpdir("fmap");
    let cfg = write_config(
        &dir,
        "sim.toml",
        r#"
schema_version = 1
mode = "simulate"
sigma2 = 0.0
seed = 3

[grid]
n = [40]
p = [12]
lambda = [1e-6]

[simulate]
replicates = 2
n_test = 80

[simulate.feature_map]
kind = "linear"
d = 6
target = "linear"
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mc: f64 = row[idx("mc_risk")].parse().unwrap();
    // Realizable linear target with abundant data: near-zero risk.
    assert!(mc < 1e-4, "mc_risk {mc}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn empirical_mode_round_trips_spectrum_export() {
    let dir = tmpdir("empirical");
    // Tiny synthetic dataset: y is the first coordinate, linear map.
    let (n, d, p) = (40usize, 3usize, 50usize);
    let mut x_text = String::new();
    let mut y_text = String::new();
    let mut w_text = String::new();
    let mut state = 88172645463325252u64;
    let mut next = || {
        // xorshift, mapped to roughly unit normals via sum of uniforms
        let mut acc = 0.0;
        for _ in 0..12 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            acc += (state >> 11) as f64 / (1u64 << 53) as f64;
        }
        acc - 6.0
    };
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| next()).collect();
        y_text.push_str(&format!("{}\n", row[0]));
        x_text.push_str(
            &row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        );
        x_text.push('\n');
    }
    for _ in 0..p {
        let row: Vec<String> = (0..d).map(|_| (next() / (d as f64).sqrt()).to_string()).collect();
        w_text.push_str(&row.join(","));
        w_text.push('\n');
    }
    std::fs::write(dir.join("x.csv"), x_text).unwrap();
    std::fs::write(dir.join("y.csv"), y_text).unwrap();
    std::fs::write(dir.join("w.csv"), w_text).unwrap();

    let spectrum_out = dir.join("spectrum.csv");
    let cfg = write_config(
        &dir,
        "emp.toml",
        &format!(
            r#"
schema_version = 1
mode = "empirical"
sigma2 = 0.0

[empirical]
x_csv = "{x}"
y_csv = "{y}"
w_csv = "{w}"
spectrum_out = "{s}"

[empirical.feature_map]
kind = "linear"
d = 3

[grid]
n = [20]
p = [10]
lambda = [0.1]
"#,
            x = dir.join("x.csv").display(),
            y = dir.join("y.csv").display(),
            w = dir.join("w.csv").display(),
            s = spectrum_out.display(),
        ),
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let spec_text = std::fs::read_to_string(&spectrum_out).unwrap();
    assert!(spec_text.starts_with("xi_sq,beta_star"));
    assert_eq!(spec_text.lines().count(), n + 1);
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let risk: f64 = row[idx("risk")].parse().unwrap();
    assert!(risk.is_finite() && risk >= 0.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn q_and_ell_axes_translate() {
    let dir = tmpdir("axes");
    let cfg = write_config(
        &dir,
        "axes.toml",
        r#"
schema_version = 1
mode = "equiv"
sigma2 = 0.0

[spectrum]
power_law = { alpha = 2.0, r = 0.5, trunc = 100 }

[grid]
n = [100]
q = [0.5]
ell = [0.5]
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--no-timestamp", "--quiet"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    let idx = |name: &str| header.split(',').position(|c| c == name).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    // p = round(100^0.5) = 10, lambda = 100^(1 - 0.5) = 10.
    assert_eq!(row[idx("p")], "10");
    let lam: f64 = row[idx("lambda")].parse().unwrap();
    assert!((lam - 10.0).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}
