//! Gaussian feature-space designs and the exact conditional risk formulas.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// One realized Gaussian design: covariate features `G` (n x K, standard
/// normal rows), weight features `F` (p x K, rows with covariance
/// `diag(xi_k^2)`), and the feature matrix `Z = G F^T / sqrt(p)`.
pub struct GaussianDesign {
    pub g: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl GaussianDesign {
    /// Samples a design with `K = s.len()` feature coordinates.
    pub fn sample(n: usize, p: usize, s: &Spectrum, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidParameter("n and p must be >= 1".into()));
        }
        if s.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        let k = s.len();
        let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        // Diagonal covariance: scale each coordinate by xi_k.
        let xs: Vec<f64> = s.eigs().iter().map(|e| e.sqrt()).collect();
        let f = DMatrix::from_fn(p, k, |_, j| xs[j] * rng.sample::<f64, _>(StandardNormal));
        let z = &g * f.transpose() / (p as f64).sqrt();
        Ok(GaussianDesign { g, f, z })
    }
}

/// Exact conditional `(bias, variance)` of the ridge estimator for one
/// realized design:
///
/// ```text
/// bias     = | beta - p^-1/2 F^T (Z^T Z + lam)^-1 Z^T G beta |^2
/// variance = sigma2 * Tr(Shat_F Z^T Z (Z^T Z + lam)^-2),   Shat_F = F F^T / p
/// ```
///
/// No test-set sampling is involved; only the design randomness remains.
pub fn conditional_risk(
    design: &GaussianDesign,
    beta_star: &DVector<f64>,
    lam: f64,
    sigma2: f64,
) -> Result<(f64, f64)> {
    if !lam.is_finite() || lam <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "conditional risk requires lambda > 0, got {lam}"
        )));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be >= 0, got {sigma2}"
        )));
    }
    let (n, k) = (design.g.nrows(), design.g.ncols());
    let p = design.f.nrows();
    if design.f.ncols() != k || design.z.nrows() != n || design.z.ncols() != p {
        return Err(Error::DimensionMismatch(
            "design matrices have inconsistent shapes".into(),
        ));
    }
    if beta_star.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries but the design has {} feature coordinates",
            beta_star.len(),
            k
        )));
    }

    let mut reg = design.z.tr_mul(&design.z);
    for i in 0..p {
        reg[(i, i)] += lam;
    }
    let chol = Cholesky::new(reg)
        .ok_or_else(|| Error::Numerical("Cholesky failed on regularized Gram".into()))?;

    // Bias through matrix-vector products only.
    let t = &design.g * beta_star;
    let v = design.z.tr_mul(&t);
    let w = chol.solve(&v);
    let u = design.f.tr_mul(&w) / (p as f64).sqrt();
    let bias = (beta_star - u).norm_squared();

    // Variance via A C C = C - lam C^2 applied to S = F F^T:
    // Tr(Shat_F A (A + lam)^-2) = (Tr(C S) - lam Tr(C^2 S)) / p.
    let variance = if sigma2 == 0.0 {
        0.0
    } else {
        let s_mat = &design.f * design.f.transpose();
        let cs = chol.solve(&s_mat);
        let ccs = chol.solve(&cs);
        let tr1 = cs.trace();
        let tr2 = ccs.trace();
        sigma2 * (tr1 - lam * tr2) / p as f64
    };

    if !bias.is_finite() || !variance.is_finite() {
        return Err(Error::Numerical(
            "conditional risk evaluated to a non-finite value".into(),
        ));
    }
    Ok((bias, variance))
}
