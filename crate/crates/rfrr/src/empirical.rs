//! Empirical estimation of the feature spectrum and target coefficients from
//! samples, labels, and weights, via the eigendecomposition of the scaled
//! Gram matrix `K_ii' = (NP)^-1 sum_j phi(x_i, w_j) phi(x_i', w_j)`.

use nalgebra::{DMatrix, DVector};

use crate::equivalents::{deterministic_risk, RiskEquivalent};
use crate::error::{Error, Result};
use crate::fixed_point::SolverSettings;
use crate::simulator::{FeatureMapSpec, SampledWeights};
use crate::spectrum::Spectrum;

/// Column-block width for streaming the feature matrix; keeps the peak
/// footprint at O(N * block) instead of O(N * P).
const GRAM_BLOCK: usize = 512;

/// Relative clamp for round-off negative eigenvalues of the PSD Gram matrix.
const NEG_EIG_CLAMP: f64 = 1e-10;

/// Estimated spectrum: squared eigenvalues (non-increasing) and target
/// coefficients in the empirical eigenbasis. Eigenvectors are normalized to
/// `psi_k^T psi_k' = N delta_kk'`.
#[derive(Debug, Clone)]
pub struct EmpiricalSpectrum {
    pub xi_sq: Vec<f64>,
    pub beta: Vec<f64>,
    /// Number of samples `N` used for the Gram matrix.
    pub n_samples: usize,
    /// Number of weights `P` used for the kernel average.
    pub n_weights: usize,
}

impl EmpiricalSpectrum {
    pub fn to_spectrum(&self) -> Result<Spectrum> {
        Spectrum::from_parts(self.xi_sq.clone(), self.beta.clone())
    }
}

/// Estimates `(Sigma, beta)` from data by diagonalizing the empirical Gram
/// matrix. Labels are treated as noiseless evaluations of the target; noisy
/// labels leak their noise into the estimated coefficients.
pub fn empirical_diagonalize(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &DMatrix<f64>,
    fm: &FeatureMapSpec,
) -> Result<EmpiricalSpectrum> {
    fm.validate()?;
    let n = x.nrows();
    let p = w.nrows();
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("N and P must be >= 1".into()));
    }
    if x.ncols() != fm.d || w.ncols() != fm.d {
        return Err(Error::DimensionMismatch(format!(
            "feature map d = {}, X has {} columns, W has {} columns",
            fm.d,
            x.ncols(),
            w.ncols()
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has {} entries but X has {} rows",
            y.len(),
            n
        )));
    }

    if matches!(fm.kind, crate::simulator::MapKind::Spiked { .. }) {
        return Err(Error::InvalidParameter(
            "spiked maps carry per-feature scales; empirical estimation \
             expects the plain weight-matrix maps"
                .into(),
        ));
    }

    // Gram accumulation over column blocks of the feature matrix. The
    // feature_matrix helper scales by 1/sqrt(block), so rescale back.
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut start = 0;
    while start < p {
        let width = GRAM_BLOCK.min(p - start);
        let weights = SampledWeights {
            w: w.rows(start, width).into_owned(),
            spike_u: None,
            spike_v: None,
        };
        let block = crate::simulator::feature_matrix(fm, x, &weights)? * (width as f64).sqrt();
        gram.gemm(1.0 / (n as f64 * p as f64), &block, &block.transpose(), 1.0);
        start += width;
    }

    let trace = gram.trace();
    let eig = gram.symmetric_eigen();

    // Sort eigenpairs by non-increasing eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let clamp = NEG_EIG_CLAMP * trace.abs();
    let sqrt_n = (n as f64).sqrt();
    let mut xi_sq = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for &idx in &order {
        let mut val = eig.eigenvalues[idx];
        if val < -clamp {
            return Err(Error::Numerical(format!(
                "eigenvalue {val:.3e} below the PSD clamp threshold -{clamp:.3e}"
            )));
        }
        if val < 0.0 {
            val = 0.0;
        }
        xi_sq.push(val);
        let col = eig.eigenvectors.column(idx);
        // Fix the sign so the largest-magnitude entry is positive, then use
        // the N-normalized eigenvector: beta_k = y^T psi_k / N = y^T q_k / sqrt(N).
        let mut max_abs = 0.0;
        let mut sign = 1.0;
        for &c in col.iter() {
            if c.abs() > max_abs {
                max_abs = c.abs();
                sign = if c >= 0.0 { 1.0 } else { -1.0 };
            }
        }
        beta.push(sign * y.dot(&col.into_owned()) / sqrt_n);
    }

    Ok(EmpiricalSpectrum {
        xi_sq,
        beta,
        n_samples: n,
        n_weights: p,
    })
}

/// Runs the full pipeline: estimate the spectrum from `(X, y, W)`, then
/// evaluate the deterministic risk equivalent at the regression dimensions
/// `(n, p, lambda)`.
#[allow(clippy::too_many_arguments)]
pub fn predict_risk_from_data(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &DMatrix<f64>,
    fm: &FeatureMapSpec,
    n: usize,
    p: usize,
    lam: f64,
    sigma2: f64,
    settings: &SolverSettings,
) -> Result<RiskEquivalent> {
    let est = empirical_diagonalize(x, y, w, fm)?;
    let spectrum = est.to_spectrum()?;
    deterministic_risk(n, p, lam, sigma2, &spectrum, settings)
}

/// Loads a headerless comma-separated matrix (rows = samples).
pub fn load_matrix_csv<P: AsRef<std::path::Path>>(path: P) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(&path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("matrix csv line {}: bad value `{tok}`", lineno + 1))
                })
            })
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!(
                    "matrix csv line {}: {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix csv has no rows".into()));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// Loads a headerless single-column vector.
pub fn load_vector_csv<P: AsRef<std::path::Path>>(path: P) -> Result<DVector<f64>> {
    let m = load_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse(format!(
            "vector csv must have one column, got {}",
            m.ncols()
        )));
    }
    Ok(DVector::from_column_slice(m.column(0).as_slice()))
}

/// In-place column standardization to zero mean and unit variance; constant
/// columns are centered only.
pub fn standardize_columns(m: &mut DMatrix<f64>) {
    let n = m.nrows() as f64;
    for j in 0..m.ncols() {
        let mut col = m.column_mut(j);
        let mean = col.sum() / n;
        for v in col.iter_mut() {
            *v -= mean;
        }
        let var = col.iter().map(|v| v * v).sum::<f64>() / n;
        if var > 0.0 {
            let inv = 1.0 / var.sqrt();
            for v in col.iter_mut() {
                *v *= inv;
            }
        }
    }
}

/// In-place standardization of a label vector.
pub fn standardize_vector(v: &mut DVector<f64>) {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    for t in v.iter_mut() {
        *t -= mean;
    }
    let var = v.iter().map(|t| t * t).sum::<f64>() / n;
    if var > 0.0 {
        let inv = 1.0 / var.sqrt();
        for t in v.iter_mut() {
            *t *= inv;
        }
    }
}
