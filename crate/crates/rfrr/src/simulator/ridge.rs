//! Ridge solves on explicit feature matrices.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `(Z^T Z + lambda I) a = Z^T y`.
///
/// `lambda > 0` uses a Cholesky factorization of the normal equations. At
/// `lambda = 0` a singular Gram matrix falls back to the minimum-norm
/// least-squares solution via SVD. The residual of the normal equations is
/// checked against `1e-8 * |Z^T y|`.
pub fn ridge_fit(z: &DMatrix<f64>, y: &DVector<f64>, lam: f64) -> Result<DVector<f64>> {
    if !lam.is_finite() || lam < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ridge lambda must be >= 0, got {lam}"
        )));
    }
    if z.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "Z has {} rows but y has {} entries",
            z.nrows(),
            y.len()
        )));
    }
    let p = z.ncols();
    let zty = z.tr_mul(y);
    let mut gram = z.tr_mul(z);
    let mut reg = gram.clone();
    for i in 0..p {
        reg[(i, i)] += lam;
    }
    let a = match Cholesky::new(reg) {
        Some(chol) => chol.solve(&zty),
        None if lam == 0.0 => {
            // Minimum-norm least squares through the SVD of Z itself.
            let svd = z.clone().svd(true, true);
            svd.solve(y, 1e-12 * z.nrows().max(p) as f64)
                .map_err(|e| Error::Numerical(format!("SVD solve failed: {e}")))?
        }
        None => {
            return Err(Error::Numerical(
                "Cholesky factorization failed on a regularized Gram matrix".into(),
            ))
        }
    };

    // Normal-equation residual check.
    for i in 0..p {
        gram[(i, i)] += lam;
    }
    let resid = (&gram * &a - &zty).norm();
    let bound = 1e-8 * zty.norm().max(f64::MIN_POSITIVE);
    if !resid.is_finite() || resid > bound {
        return Err(Error::Numerical(format!(
            "ridge solve residual {resid:.3e} exceeds bound {bound:.3e}"
        )));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn scalar_case() {
        let z = DMatrix::from_row_slice(1, 1, &[2.0]);
        let y = DVector::from_vec(vec![3.0]);
        let a = ridge_fit(&z, &y, 1.0).unwrap();
        assert!((a[0] - 1.2).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_columns_at_zero_lambda() {
        // Z with orthonormal columns: Gram is the identity, a = Z^T y.
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![0.3, -0.7, 4.0]);
        let a = ridge_fit(&z, &y, 0.0).unwrap();
        let expected = z.tr_mul(&y);
        assert!((a - expected).norm() < 1e-12);
    }

    #[test]
    fn matches_dense_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = DMatrix::from_fn(20, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(20, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lam = 0.3;
        let a = ridge_fit(&z, &y, lam).unwrap();
        let mut reg = z.tr_mul(&z);
        for i in 0..5 {
            reg[(i, i)] += lam;
        }
        let oracle = reg.try_inverse().unwrap() * z.tr_mul(&y);
        assert!((a - oracle).norm() < 1e-10);
    }

    #[test]
    fn singular_at_zero_lambda_takes_min_norm_path() {
        // Rank-deficient Z (duplicated column): pseudoinverse solution.
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let a = ridge_fit(&z, &y, 0.0).unwrap();
        // Minimum-norm solution splits evenly: a = (0.5, 0.5).
        assert!((a[0] - 0.5).abs() < 1e-10 && (a[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn first_order_optimality_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = DMatrix::from_fn(15, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(15, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lam = 0.2;
        let a = ridge_fit(&z, &y, lam).unwrap();
        let obj = |a: &DVector<f64>| (&y - &z * a).norm_squared() + lam * a.norm_squared();
        let base = obj(&a);
        for _ in 0..20 {
            let delta = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal)) * 1e-3;
            assert!(obj(&(&a + delta)) >= base - 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let z = DMatrix::zeros(3, 2);
        let y = DVector::zeros(4);
        assert!(ridge_fit(&z, &y, 1.0).is_err());
    }
}
