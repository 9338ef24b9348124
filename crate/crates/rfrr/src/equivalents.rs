//! Deterministic equivalents for the bias, variance, and excess risk, plus
//! the kernel and approximation limit specializations.

use crate::error::{Error, Result};
use crate::fixed_point::{solve_nu, solve_nu_approx, solve_nu_kernel, FixedPoint, SolverSettings};
use crate::spectrum::Spectrum;

/// Closed-form risk prediction at a given `(n, p, lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct RiskEquivalent {
    pub upsilon: f64,
    pub chi: f64,
    pub bias: f64,
    pub variance: f64,
    /// Always `bias + variance`.
    pub risk: f64,
}

/// The variance amplification factor `Upsilon` and the shorthand `chi`.
///
/// `Upsilon = (p/n) [(1 - nu1/nu2)^2 + (nu1/nu2)^2 T22 / (p - T22)]` and
/// `chi = T12 / (p - T22)` with `Tab = Tr(S^a (S + nu2)^-b)`.
pub fn upsilon_chi(fp: &FixedPoint, n: usize, p: usize, s: &Spectrum) -> Result<(f64, f64)> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be >= 1".into()));
    }
    let nf = n as f64;
    let pf = p as f64;
    let t22 = s.trace_resolvent(fp.nu2, 2, 2)?;
    let denom = pf - t22;
    if denom <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "degenerate spectrum: p - Tr(S^2 (S+nu2)^-2) = {denom} <= 0"
        )));
    }
    let ratio = fp.nu1 / fp.nu2;
    let upsilon = pf / nf * ((1.0 - ratio).powi(2) + ratio * ratio * t22 / denom);
    let t12 = s.trace_resolvent(fp.nu2, 1, 2)?;
    let chi = t12 / denom;
    Ok((upsilon, chi))
}

/// Risk equivalent from an already-solved fixed point. The traces and the
/// target quadratic forms come out of one fused pass over the spectrum.
pub fn risk_from_fixed_point(
    fp: &FixedPoint,
    n: usize,
    p: usize,
    sigma2: f64,
    s: &Spectrum,
) -> Result<RiskEquivalent> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be >= 1".into()));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be >= 0, got {sigma2}"
        )));
    }
    let (_, t22, t12, q02, q12) = s.risk_sums(fp.nu2);
    let pf = p as f64;
    let denom = pf - t22;
    if denom <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "degenerate spectrum: p - Tr(S^2 (S+nu2)^-2) = {denom} <= 0"
        )));
    }
    let ratio = fp.nu1 / fp.nu2;
    let upsilon = pf / n as f64 * ((1.0 - ratio).powi(2) + ratio * ratio * t22 / denom);
    let chi = t12 / denom;
    if upsilon >= 1.0 {
        return Err(Error::OutOfRegime(format!(
            "Upsilon = {upsilon} >= 1; deterministic equivalent undefined"
        )));
    }
    let bias = fp.nu2 * fp.nu2 / (1.0 - upsilon) * (q02 + chi * q12);
    let variance = if sigma2 == 0.0 {
        0.0
    } else {
        sigma2 * upsilon / (1.0 - upsilon)
    };
    if !bias.is_finite() || !variance.is_finite() {
        return Err(Error::Numerical(
            "risk equivalent evaluated to a non-finite value".into(),
        ));
    }
    Ok(RiskEquivalent {
        upsilon,
        chi,
        bias,
        variance,
        risk: bias + variance,
    })
}

/// Deterministic equivalent of the excess risk at `(n, p, lambda)`.
pub fn deterministic_risk(
    n: usize,
    p: usize,
    lam: f64,
    sigma2: f64,
    s: &Spectrum,
    settings: &SolverSettings,
) -> Result<RiskEquivalent> {
    let fp = solve_nu(n, p, lam, s, settings)?;
    risk_from_fixed_point(&fp, n, p, sigma2, s)
}

/// Kernel-limit (`p -> infinity`) risk at sample count `n`.
pub fn kernel_limit_risk(
    n: usize,
    lam: f64,
    sigma2: f64,
    s: &Spectrum,
    settings: &SolverSettings,
) -> Result<RiskEquivalent> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be >= 0, got {sigma2}"
        )));
    }
    let nu_k = solve_nu_kernel(n, lam, s, settings)?;
    let nf = n as f64;
    let t22 = s.trace_resolvent(nu_k, 2, 2)?;
    let denom = nf - t22;
    if denom <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "degenerate spectrum: n - Tr(S^2 (S+nu_K)^-2) = {denom} <= 0"
        )));
    }
    let q02 = s.quad_form(nu_k, 0, 2)?;
    let bias = nu_k * nu_k * q02 / (1.0 - t22 / nf);
    let variance = if sigma2 == 0.0 {
        0.0
    } else {
        sigma2 * t22 / denom
    };
    Ok(RiskEquivalent {
        upsilon: t22 / nf,
        chi: 0.0,
        bias,
        variance,
        risk: bias + variance,
    })
}

/// Approximation-limit (`n -> infinity`) bias at width `p`; the variance
/// vanishes and the result does not depend on `lambda`.
pub fn approximation_limit_risk(p: usize, s: &Spectrum, settings: &SolverSettings) -> Result<f64> {
    let nu_a = solve_nu_approx(p, s, settings)?;
    if nu_a == 0.0 {
        return Ok(0.0);
    }
    Ok(nu_a * s.quad_form(nu_a, 0, 1)?)
}
