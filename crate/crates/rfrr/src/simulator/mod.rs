//! Monte Carlo estimation of the excess risk: exact conditional risk under
//! Gaussian designs, held-out-test-set risk under explicit feature maps.
//!
//! Replicates run in parallel with counter-based RNG streams (one ChaCha
//! stream per replicate), so estimates are bit-reproducible for a fixed seed
//! regardless of thread count or scheduling order.

mod design;
mod feature_map;
mod ridge;

pub use design::{conditional_risk, GaussianDesign};
pub use feature_map::{
    feature_matrix, sample_data, sample_weights, DataDist, FeatureMapSpec, MapKind,
    SampledWeights, TargetKind, Teacher, WeightDist,
};
pub use ridge::ridge_fit;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Monte Carlo estimate over independent replicates.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean_risk: f64,
    /// Sample standard deviation over sqrt(replicates); 0 for a single one.
    pub std_err: f64,
    pub replicates: usize,
    pub per_replicate: Option<Vec<f64>>,
}

/// RNG for one replicate: a fixed seed selects the generator, the replicate
/// index selects the stream.
fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Pairwise summation; deterministic for a given input order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn summarize(risks: Vec<f64>) -> McEstimate {
    let r = risks.len();
    let mean = pairwise_sum(&risks) / r as f64;
    let std_err = if r > 1 {
        let sq: Vec<f64> = risks.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&sq) / (r as f64 - 1.0)).sqrt() / (r as f64).sqrt()
    } else {
        0.0
    };
    McEstimate {
        mean_risk: mean,
        std_err,
        replicates: r,
        per_replicate: Some(risks),
    }
}

fn run_replicates<F>(replicates: usize, body: F) -> Result<McEstimate>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    let risks: Result<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(&body)
        .collect();
    Ok(summarize(risks?))
}

/// Gaussian-design Monte Carlo: each replicate draws `(G, F)` and evaluates
/// the exact conditional risk, so only the design randomness remains.
pub fn mc_risk_gaussian(
    n: usize,
    p: usize,
    lam: f64,
    sigma2: f64,
    s: &Spectrum,
    replicates: usize,
    seed: u64,
) -> Result<McEstimate> {
    let beta = DVector::from_vec(s.target().to_vec());
    run_replicates(replicates, |i| {
        let mut rng = replicate_rng(seed, i);
        let design = GaussianDesign::sample(n, p, s, &mut rng)?;
        let (b, v) = conditional_risk(&design, &beta, lam, sigma2)?;
        Ok(b + v)
    })
}

/// Feature-map Monte Carlo: each replicate draws data, weights, and noise,
/// fits the ridge estimator, and evaluates the excess risk on a fresh
/// held-out test set with noiseless labels.
#[allow(clippy::too_many_arguments)]
pub fn mc_risk_feature_map(
    fm: &FeatureMapSpec,
    teacher: &Teacher,
    n: usize,
    p: usize,
    lam: f64,
    sigma2: f64,
    n_test: usize,
    replicates: usize,
    seed: u64,
) -> Result<McEstimate> {
    fm.validate()?;
    if n == 0 || p == 0 || n_test == 0 {
        return Err(Error::InvalidParameter(
            "n, p, and n_test must all be >= 1".into(),
        ));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be >= 0, got {sigma2}"
        )));
    }
    if teacher.beta.len() != fm.d {
        return Err(Error::DimensionMismatch(format!(
            "teacher has {} coordinates but the map expects {}",
            teacher.beta.len(),
            fm.d
        )));
    }
    run_replicates(replicates, |i| {
        let mut rng = replicate_rng(seed, i);
        let x = sample_data(fm, n, &mut rng);
        let weights = sample_weights(fm, p, teacher, &mut rng)?;
        let z = feature_matrix(fm, &x, &weights)?;
        let mut y = teacher.eval_rows(&x);
        if sigma2 > 0.0 {
            let sd = sigma2.sqrt();
            for t in y.iter_mut() {
                *t += sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let a = ridge_fit(&z, &y, lam)?;

        let x_test = sample_data(fm, n_test, &mut rng);
        let z_test = feature_matrix(fm, &x_test, &weights)?;
        let truth = teacher.eval_rows(&x_test);
        let pred = z_test * a;
        let risk = (truth - pred).norm_squared() / n_test as f64;
        Ok(risk)
    })
}
