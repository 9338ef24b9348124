//! Closed-form scaling-law exponents under power-law spectrum and target
//! decay, with `p = n^q` and `lambda = n^-(ell - 1)`.

use crate::error::{Error, Result};

/// Power-law scaling configuration.
#[derive(Debug, Clone, Copy)]
pub struct ScalingConfig {
    /// Capacity exponent, `> 1`.
    pub alpha: f64,
    /// Source exponent, `> 0`.
    pub r: f64,
    /// Regularization exponent: `lambda = n^-(ell - 1)`, `>= 0`.
    pub ell: f64,
    /// Width exponent: `p = n^q`, `>= 0`.
    pub q: f64,
    pub sigma2: f64,
}

impl ScalingConfig {
    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be > 1, got {}",
                self.alpha
            )));
        }
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(Error::InvalidParameter(format!("r must be > 0, got {}", self.r)));
        }
        if !self.ell.is_finite() || self.ell < 0.0 || !self.q.is_finite() || self.q < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "ell and q must be >= 0, got ell = {}, q = {}",
                self.ell, self.q
            )));
        }
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be >= 0, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

/// Crossover exponents and the optimal rate for a given `(alpha, r)`.
#[derive(Debug, Clone, Copy)]
pub struct CrossoverPoints {
    /// Optimal regularization exponent.
    pub ell_star: f64,
    /// Minimal width exponent achieving the optimal rate.
    pub q_star: f64,
    /// Width exponent where the variance branch changes slope.
    pub q_hat: f64,
    /// Optimal excess-risk decay exponent.
    pub gamma_star: f64,
    /// Width exponent of the earlier feature-count upper bound.
    pub q0: f64,
}

/// Dominant term in the risk decay at a given `(ell, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    BiasDominated,
    VarianceSlow,
    Plateau,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::BiasDominated => "bias-dominated",
            Region::VarianceSlow => "variance-slow",
            Region::Plateau => "plateau",
        }
    }
}

/// Exponent report at one `(ell, q)` point.
#[derive(Debug, Clone, Copy)]
pub struct RateReport {
    pub gamma_b: f64,
    pub gamma_v: f64,
    /// `min(gamma_b, gamma_v)` with noise, `gamma_b` without.
    pub gamma: f64,
    pub region: Region,
    /// True on the `gamma_b = gamma_v` line (ties are otherwise labeled
    /// toward the bias side).
    pub boundary: bool,
    pub crossovers: CrossoverPoints,
    /// Whether `(ell, q)` lies in the region where the deterministic
    /// equivalent provably tracks the risk.
    pub valid: bool,
}

impl RateReport {
    /// Region label with `boundary` appended on the tie line.
    pub fn label(&self) -> String {
        if self.boundary {
            format!("{} boundary", self.region.as_str())
        } else {
            self.region.as_str().to_string()
        }
    }
}

/// Bias and variance decay exponents `(gamma_b, gamma_v)`.
fn exponents(alpha: f64, r: f64, ell: f64, q: f64) -> (f64, f64) {
    let m = (ell / alpha).min(q).min(1.0);
    let gamma_b =
        (2.0 * alpha * m * r.min(1.0)).min((2.0 * alpha * r.min(0.5) - 1.0) * m + q);
    let gamma_v = 1.0 - m;
    (gamma_b, gamma_v)
}

/// Full exponent report at `cfg`.
pub fn rate_exponents(cfg: &ScalingConfig) -> Result<RateReport> {
    cfg.validate()?;
    let (gamma_b, gamma_v) = exponents(cfg.alpha, cfg.r, cfg.ell, cfg.q);
    let gamma = if cfg.sigma2 > 0.0 {
        gamma_b.min(gamma_v)
    } else {
        gamma_b
    };
    let region = if cfg.ell >= cfg.alpha && cfg.q >= 1.0 {
        Region::Plateau
    } else if gamma_v < gamma_b {
        Region::VarianceSlow
    } else {
        Region::BiasDominated
    };
    let boundary = cfg.sigma2 > 0.0
        && region != Region::Plateau
        && (gamma_b - gamma_v).abs() <= 1e-12 * gamma_b.abs().max(1.0);
    Ok(RateReport {
        gamma_b,
        gamma_v,
        gamma,
        region,
        boundary,
        crossovers: crossovers(cfg.alpha, cfg.r)?,
        valid: validity_region(cfg.alpha, cfg.ell, cfg.q),
    })
}

/// Crossover exponents for `(alpha, r)`.
pub fn crossovers(alpha: f64, r: f64) -> Result<CrossoverPoints> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 1, got {alpha}"
        )));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be > 0, got {r}")));
    }
    let r1 = r.min(1.0);
    let two_r1 = (2.0 * r).min(1.0);
    let ell_star = alpha / (2.0 * alpha * r1 + 1.0);
    Ok(CrossoverPoints {
        ell_star,
        q_star: 1.0 - ell_star * two_r1,
        q_hat: 1.0 / (alpha * two_r1 + 1.0),
        gamma_star: 2.0 * alpha * r1 / (2.0 * alpha * r1 + 1.0),
        q0: (alpha - 1.0 + 2.0 * r) / (1.0 + 2.0 * alpha * r),
    })
}

/// Whether `(ell, q)` lies where the approximation error of the
/// deterministic equivalent vanishes: `ell <= alpha + 1/12` for `q >= 1`,
/// `ell <= q ((alpha + 1/16) v 1/(16(alpha-1)))` for `q < 1`.
pub fn validity_region(alpha: f64, ell: f64, q: f64) -> bool {
    if q >= 1.0 {
        ell <= alpha + 1.0 / 12.0
    } else {
        ell <= q * (alpha + 1.0 / 16.0).max(1.0 / (16.0 * (alpha - 1.0)))
    }
}

/// Numeric partial sum `sum_k k^-(s + delta*alpha) / (k^-alpha + nu)^gamma`,
/// used only to verify the asymptotic exponents; accumulated tail-first.
pub fn t_sum(
    s_exp: u8,
    delta: f64,
    gamma_exp: f64,
    nu: f64,
    alpha: f64,
    trunc: usize,
) -> Result<f64> {
    if s_exp > 1 {
        return Err(Error::InvalidParameter(format!(
            "s_exp must be 0 or 1, got {s_exp}"
        )));
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::InvalidParameter(format!("nu must be > 0, got {nu}")));
    }
    if trunc == 0 {
        return Err(Error::InvalidParameter("trunc must be >= 1".into()));
    }
    let num_exp = -(s_exp as f64 + delta * alpha);
    let mut acc = 0.0;
    for k in (1..=trunc).rev() {
        let kf = k as f64;
        acc += kf.powf(num_exp) / (kf.powf(-alpha) + nu).powf(gamma_exp);
    }
    Ok(acc)
}
