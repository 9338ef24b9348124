//! TOML experiment configuration: parsing, validation, and grid expansion.
//!
//! Validation failures carry the offending field name; the process maps them
//! to exit code 2.

use std::path::PathBuf;

use serde::Deserialize;

use rfrr::{
    DataDist, FeatureMapSpec, MapKind, SolverSettings, Spectrum, TargetKind, WeightDist,
};

pub const SCHEMA_VERSION: u32 = 1;

/// A config-level error naming the field that failed.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Equiv,
    Simulate,
    Rates,
    Phase,
    Diag,
    Empirical,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Equiv => "equiv",
            Mode::Simulate => "simulate",
            Mode::Rates => "rates",
            Mode::Phase => "phase",
            Mode::Diag => "diag",
            Mode::Empirical => "empirical",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Grid literal: an explicit list, `{ logspace = [a, b, k] }` for k points
/// from `10^a` to `10^b`, or `{ linspace = [a, b, k] }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Logspace { logspace: [f64; 3] },
    Linspace { linspace: [f64; 3] },
}

impl GridSpec {
    pub fn expand(&self, field: &str) -> CResult<Vec<f64>> {
        let points = |spec: &[f64; 3], log: bool| -> CResult<Vec<f64>> {
            let k = spec[2];
            if k < 1.0 || k.fract() != 0.0 {
                return err(format!("{field}: third entry must be a positive point count"));
            }
            let k = k as usize;
            let vals = if k == 1 {
                vec![spec[0]]
            } else {
                (0..k)
                    .map(|i| spec[0] + (spec[1] - spec[0]) * i as f64 / (k - 1) as f64)
                    .collect()
            };
            Ok(if log {
                vals.into_iter().map(|v| 10f64.powf(v)).collect()
            } else {
                vals
            })
        };
        let vals = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Logspace { logspace } => points(logspace, true)?,
            GridSpec::Linspace { linspace } => points(linspace, false)?,
        };
        if vals.is_empty() {
            return err(format!("{field} is empty"));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return err(format!("{field} contains a non-finite value"));
        }
        Ok(vals)
    }

    pub fn expand_counts(&self, field: &str) -> CResult<Vec<usize>> {
        self.expand(field)?
            .into_iter()
            .map(|v| {
                let r = v.round();
                if !(1.0..=1e12).contains(&r) {
                    err(format!("{field}: value {v} is not a usable count"))
                } else {
                    Ok(r as usize)
                }
            })
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawCfg {
    pub alpha: f64,
    pub r: f64,
    pub trunc: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineCfg {
    pub eigs: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumCfg {
    pub power_law: Option<PowerLawCfg>,
    pub csv: Option<PathBuf>,
    pub inline: Option<InlineCfg>,
}

impl SpectrumCfg {
    pub fn build(&self) -> CResult<Spectrum> {
        let sources =
            self.power_law.is_some() as u8 + self.csv.is_some() as u8 + self.inline.is_some() as u8;
        if sources != 1 {
            return err("spectrum: exactly one of power_law, csv, inline must be set");
        }
        if let Some(pl) = &self.power_law {
            return Spectrum::power_law(pl.alpha, pl.r, pl.trunc.unwrap_or(rfrr::DEFAULT_TRUNC))
                .map_err(|e| ConfigError(format!("spectrum.power_law: {e}")));
        }
        if let Some(path) = &self.csv {
            return Spectrum::load_csv(path)
                .map_err(|e| ConfigError(format!("spectrum.csv: {e}")));
        }
        let inline = self.inline.as_ref().unwrap();
        Spectrum::from_parts(inline.eigs.clone(), inline.target.clone())
            .map_err(|e| ConfigError(format!("spectrum.inline: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub n: Option<GridSpec>,
    pub p: Option<GridSpec>,
    /// Width exponent alternative to `p`: `p = round(n^q)`.
    pub q: Option<GridSpec>,
    pub lambda: Option<GridSpec>,
    /// Regularization exponent alternative to `lambda`: `lambda = n^-(ell-1)`.
    pub ell: Option<GridSpec>,
}

/// Width axis: explicit counts or exponents of `n`.
#[derive(Debug, Clone)]
pub enum WidthAxis {
    Explicit(Vec<usize>),
    FromQ(Vec<f64>),
}

/// Regularization axis: explicit values or exponents of `n`.
#[derive(Debug, Clone)]
pub enum LambdaAxis {
    Explicit(Vec<f64>),
    FromEll(Vec<f64>),
}

pub struct PointGrid {
    pub n: Vec<usize>,
    pub width: WidthAxis,
    pub lambda: LambdaAxis,
}

/// One expanded grid point: `(n, p, lambda, q, ell)` with the exponents
/// present when the corresponding axis was given as one.
pub type GridPoint = (usize, usize, f64, Option<f64>, Option<f64>);

impl PointGrid {
    /// Cross join in deterministic order: n outer, width middle, lambda inner.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.n {
            let widths: Vec<(usize, Option<f64>)> = match &self.width {
                WidthAxis::Explicit(ps) => ps.iter().map(|&p| (p, None)).collect(),
                WidthAxis::FromQ(qs) => qs
                    .iter()
                    .map(|&q| (((n as f64).powf(q)).round().max(1.0) as usize, Some(q)))
                    .collect(),
            };
            let lambdas: Vec<(f64, Option<f64>)> = match &self.lambda {
                LambdaAxis::Explicit(ls) => ls.iter().map(|&l| (l, None)).collect(),
                LambdaAxis::FromEll(es) => es
                    .iter()
                    .map(|&e| ((n as f64).powf(1.0 - e), Some(e)))
                    .collect(),
            };
            for &(p, q) in &widths {
                for &(lam, ell) in &lambdas {
                    out.push((n, p, lam, q, ell));
                }
            }
        }
        out
    }
}

impl GridCfg {
    pub fn build_points(&self) -> CResult<PointGrid> {
        let n = self
            .n
            .as_ref()
            .ok_or_else(|| ConfigError("grid.n is required for this mode".into()))?
            .expand_counts("grid.n")?;
        let width = match (&self.p, &self.q) {
            (Some(p), None) => WidthAxis::Explicit(p.expand_counts("grid.p")?),
            (None, Some(q)) => WidthAxis::FromQ(q.expand("grid.q")?),
            (None, None) => return err("grid: one of p or q is required"),
            (Some(_), Some(_)) => return err("grid: p and q are mutually exclusive"),
        };
        let lambda = match (&self.lambda, &self.ell) {
            (Some(l), None) => {
                let vals = l.expand("grid.lambda")?;
                if vals.iter().any(|&v| v < 0.0) {
                    return err("grid.lambda: values must be >= 0");
                }
                LambdaAxis::Explicit(vals)
            }
            (None, Some(e)) => LambdaAxis::FromEll(e.expand("grid.ell")?),
            (None, None) => return err("grid: one of lambda or ell is required"),
            (Some(_), Some(_)) => return err("grid: lambda and ell are mutually exclusive"),
        };
        Ok(PointGrid { n, width, lambda })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverCfg {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
}

impl SolverCfg {
    pub fn settings(&self) -> SolverSettings {
        let d = SolverSettings::default();
        SolverSettings {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            damping: self.damping.unwrap_or(d.damping),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistCfg {
    Named(String),
    Gaussian { gaussian: f64 },
    Sphere { sphere: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMapCfg {
    pub kind: String,
    pub d: usize,
    pub weight: Option<DistCfg>,
    pub data: Option<DistCfg>,
    pub target: Option<String>,
    pub spike_overlap: Option<f64>,
}

impl FeatureMapCfg {
    pub fn build(&self) -> CResult<(FeatureMapSpec, TargetKind)> {
        let kind = match self.kind.as_str() {
            "erf" => MapKind::Erf,
            "tanh" => MapKind::Tanh,
            "relu" => MapKind::Relu,
            "linear" => MapKind::Linear,
            "spiked" => MapKind::Spiked {
                overlap: self.spike_overlap.unwrap_or(0.5),
            },
            "conv_pooled" => MapKind::ConvPooled,
            other => {
                return err(format!(
                    "feature_map.kind: unknown kind `{other}` \
                     (erf|tanh|relu|linear|spiked|conv_pooled)"
                ))
            }
        };
        if self.d == 0 {
            return err("feature_map.d must be >= 1");
        }
        let weight_dist = match &self.weight {
            None => WeightDist::Gaussian {
                scale: 1.0 / (self.d as f64).sqrt(),
            },
            Some(DistCfg::Gaussian { gaussian }) => WeightDist::Gaussian { scale: *gaussian },
            Some(DistCfg::Sphere { sphere }) => WeightDist::Sphere { radius: *sphere },
            Some(DistCfg::Named(name)) => {
                return err(format!(
                    "feature_map.weight: use {{ gaussian = scale }} or \
                     {{ sphere = radius }}, got `{name}`"
                ))
            }
        };
        let data_dist = match &self.data {
            None => DataDist::Gaussian,
            Some(DistCfg::Named(name)) if name == "gaussian" => DataDist::Gaussian,
            Some(DistCfg::Sphere { sphere }) => DataDist::Sphere { radius: *sphere },
            Some(DistCfg::Gaussian { .. }) => {
                return err("feature_map.data: gaussian data is standard normal; \
                     use data = \"gaussian\"")
            }
            Some(DistCfg::Named(name)) => {
                return err(format!("feature_map.data: unknown distribution `{name}`"))
            }
        };
        let target = match self.target.as_deref() {
            None | Some("erf") => TargetKind::Erf,
            Some("tanh") => TargetKind::Tanh,
            Some("linear") => TargetKind::Linear,
            Some(other) => {
                return err(format!(
                    "feature_map.target: unknown target `{other}` (erf|tanh|linear)"
                ))
            }
        };
        let fm = FeatureMapSpec {
            kind,
            d: self.d,
            weight_dist,
            data_dist,
        };
        fm.validate()
            .map_err(|e| ConfigError(format!("feature_map: {e}")))?;
        Ok((fm, target))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    pub replicates: Option<usize>,
    pub n_test: Option<usize>,
    pub feature_map: Option<FeatureMapCfg>,
    /// Optional CSV dump of per-replicate risks, one row per grid point.
    pub dump_replicates: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesCfg {
    pub alpha: f64,
    pub r: f64,
    pub ell: Option<GridSpec>,
    pub q: Option<GridSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagCfg {
    pub eta_star: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalCfg {
    pub x_csv: PathBuf,
    pub y_csv: PathBuf,
    pub w_csv: PathBuf,
    pub feature_map: FeatureMapCfg,
    pub standardize: Option<bool>,
    /// Optional export of the estimated spectrum in the two-column format.
    pub spectrum_out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub sigma2: Option<f64>,
    pub spectrum: Option<SpectrumCfg>,
    pub grid: Option<GridCfg>,
    pub solver: Option<SolverCfg>,
    pub simulate: Option<SimulateCfg>,
    pub rates: Option<RatesCfg>,
    pub diag: Option<DiagCfg>,
    pub empirical: Option<EmpiricalCfg>,
    pub output: Option<OutputCfg>,
}

impl Config {
    pub fn parse(text: &str) -> CResult<Config> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError(format!("toml parse: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            ));
        }
        if let Some(s2) = cfg.sigma2 {
            if !s2.is_finite() || s2 < 0.0 {
                return err(format!("sigma2 must be >= 0, got {s2}"));
            }
        }
        Ok(cfg)
    }

    pub fn require_spectrum(&self) -> CResult<Spectrum> {
        self.spectrum
            .as_ref()
            .ok_or_else(|| ConfigError("spectrum section is required for this mode".into()))?
            .build()
    }

    pub fn require_grid(&self) -> CResult<PointGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| ConfigError("grid section is required for this mode".into()))?
            .build_points()
    }
}
