//! Row model and CSV/JSON emission. Rows are written in grid order with a
//! status column; non-applicable cells stay empty in CSV and absent in JSON.

use std::io::Write;

use serde::Serialize;

use crate::config::Mode;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_risk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_tilde_np: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_star: Option<f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Row {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// The numeric superset shared by the point modes.
const POINT_COLUMNS: &[&str] = &[
    "n", "p", "lambda", "sigma2", "nu1", "nu2", "upsilon", "chi", "bias", "variance", "risk",
    "mc_risk", "mc_stderr", "rel_err", "gamma_b", "gamma_v", "gamma", "region", "status", "seed",
];

const RATES_COLUMNS: &[&str] = &[
    "alpha", "r", "ell", "q", "gamma_b", "gamma_v", "gamma", "region", "ell_star", "q_star",
    "q_hat", "gamma_star", "q0", "valid", "status",
];

const PHASE_COLUMNS: &[&str] = &[
    "alpha", "r", "ell", "q", "gamma_b", "gamma_v", "gamma", "region", "valid", "status",
];

const DIAG_COLUMNS: &[&str] = &[
    "n", "p", "lambda", "sigma2", "nu1", "nu2", "m", "rho_p", "rho_tilde_np", "gamma_lambda",
    "gamma_plus", "err_rate", "ratio1", "ratio2", "eta_star", "status",
];

pub fn columns_for(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Equiv | Mode::Simulate | Mode::Sweep | Mode::Empirical => POINT_COLUMNS,
        Mode::Rates => RATES_COLUMNS,
        Mode::Phase => PHASE_COLUMNS,
        Mode::Diag => DIAG_COLUMNS,
    }
}

fn fmt_f64(v: f64) -> String {
    // Round-trippable shortest representation.
    format!("{v}")
}

fn cell(row: &Row, col: &str) -> String {
    fn opt_f(v: &Option<f64>) -> String {
        v.map(fmt_f64).unwrap_or_default()
    }
    fn opt_u(v: &Option<u64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    match col {
        "n" => opt_u(&row.n),
        "p" => opt_u(&row.p),
        "lambda" => opt_f(&row.lambda),
        "sigma2" => opt_f(&row.sigma2),
        "nu1" => opt_f(&row.nu1),
        "nu2" => opt_f(&row.nu2),
        "upsilon" => opt_f(&row.upsilon),
        "chi" => opt_f(&row.chi),
        "bias" => opt_f(&row.bias),
        "variance" => opt_f(&row.variance),
        "risk" => opt_f(&row.risk),
        "mc_risk" => opt_f(&row.mc_risk),
        "mc_stderr" => opt_f(&row.mc_stderr),
        "rel_err" => opt_f(&row.rel_err),
        "alpha" => opt_f(&row.alpha),
        "r" => opt_f(&row.r),
        "ell" => opt_f(&row.ell),
        "q" => opt_f(&row.q),
        "gamma_b" => opt_f(&row.gamma_b),
        "gamma_v" => opt_f(&row.gamma_v),
        "gamma" => opt_f(&row.gamma),
        "region" => row.region.clone().unwrap_or_default(),
        "ell_star" => opt_f(&row.ell_star),
        "q_star" => opt_f(&row.q_star),
        "q_hat" => opt_f(&row.q_hat),
        "gamma_star" => opt_f(&row.gamma_star),
        "q0" => opt_f(&row.q0),
        "valid" => row.valid.map(|b| b.to_string()).unwrap_or_default(),
        "m" => opt_u(&row.m),
        "rho_p" => opt_f(&row.rho_p),
        "rho_tilde_np" => opt_f(&row.rho_tilde_np),
        "gamma_lambda" => opt_f(&row.gamma_lambda),
        "gamma_plus" => opt_f(&row.gamma_plus),
        "err_rate" => opt_f(&row.err_rate),
        "ratio1" => opt_f(&row.ratio1),
        "ratio2" => opt_f(&row.ratio2),
        "eta_star" => opt_f(&row.eta_star),
        "status" => row.status.clone(),
        "seed" => opt_u(&row.seed),
        other => unreachable!("unknown column {other}"),
    }
}

pub fn write_csv<W: Write>(
    mut w: W,
    mode: Mode,
    rows: &[Row],
    timestamp: Option<&str>,
) -> std::io::Result<()> {
    if let Some(ts) = timestamp {
        writeln!(w, "# generated {ts}")?;
    }
    let cols = columns_for(mode);
    writeln!(w, "{}", cols.join(","))?;
    for row in rows {
        let cells: Vec<String> = cols.iter().map(|c| cell(row, c)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    schema_version: u32,
    mode: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated: Option<&'a str>,
    rows: &'a [Row],
}

pub fn write_json<W: Write>(
    mut w: W,
    mode: Mode,
    rows: &[Row],
    timestamp: Option<&str>,
) -> std::io::Result<()> {
    let doc = JsonDoc {
        schema_version: crate::config::SCHEMA_VERSION,
        mode: mode.as_str(),
        generated: timestamp,
        rows,
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
}
