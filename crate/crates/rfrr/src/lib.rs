//! Random-feature ridge regression risk, computed three ways: closed-form
//! deterministic equivalents driven by a pair of self-consistent fixed
//! points, closed-form scaling-law exponents under power-law spectra, and
//! Monte Carlo simulation (exact conditional risk for Gaussian designs,
//! held-out test sets for explicit feature maps). An empirical pipeline
//! estimates the spectrum and target coefficients from data so the same
//! formulas apply when the feature distribution is only available through
//! samples.

pub mod diagnostics;
pub mod empirical;
pub mod equivalents;
mod error;
pub mod fixed_point;
pub mod rates;
pub mod simulator;
pub mod spectrum;

pub use diagnostics::{choose_m, intrinsic_dim, approximation_diagnostics, DiagnosticsReport};
pub use empirical::{empirical_diagonalize, predict_risk_from_data, EmpiricalSpectrum};
pub use equivalents::{
    approximation_limit_risk, deterministic_risk, kernel_limit_risk, risk_from_fixed_point,
    upsilon_chi, RiskEquivalent,
};
pub use error::{Error, Result};
pub use fixed_point::{solve_nu, solve_nu_approx, solve_nu_kernel, FixedPoint, SolverSettings};
pub use rates::{
    crossovers, rate_exponents, t_sum, validity_region, CrossoverPoints, RateReport, Region,
    ScalingConfig,
};
pub use simulator::{
    conditional_risk, mc_risk_feature_map, mc_risk_gaussian, ridge_fit, DataDist, FeatureMapSpec,
    GaussianDesign, MapKind, McEstimate, TargetKind, Teacher, WeightDist,
};
pub use spectrum::{PowerLawMeta, Spectrum, DEFAULT_TRUNC};

/// Least-squares slope of `ys` against `xs`; used for fitting decay
/// exponents on log-log grids.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a slope");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// `k` points spaced evenly in exponent between `10^a` and `10^b`.
pub fn logspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    assert!(k >= 1);
    if k == 1 {
        return vec![10f64.powf(a)];
    }
    (0..k)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (k - 1) as f64))
        .collect()
}
