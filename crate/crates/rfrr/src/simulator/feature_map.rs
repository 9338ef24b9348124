//! Explicit random feature maps `phi(x, w)` and teacher targets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Distribution of the random weights `w_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDist {
    /// `N(0, scale^2 I_d)`.
    Gaussian { scale: f64 },
    /// Uniform on the sphere of the given radius.
    Sphere { radius: f64 },
}

/// Distribution of the covariates `x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataDist {
    /// Standard normal `N(0, I_d)`.
    Gaussian,
    /// Uniform on the sphere of the given radius.
    Sphere { radius: f64 },
}

/// The nonlinearity applied to `<w, x>` (or its variants).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    Erf,
    Tanh,
    Relu,
    Linear,
    /// `tanh(<w + u v, x>)` with a fixed spike direction `v` built from the
    /// teacher vector at the given overlap, and per-feature scales
    /// `u_j ~ N(0, 1)`.
    Spiked { overlap: f64 },
    /// Cyclic-shift average `1/d sum_l relu(<w, shift_l(x)>)`.
    ConvPooled,
}

/// Feature map specification: nonlinearity, input dimension, and sampling
/// distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureMapSpec {
    pub kind: MapKind,
    /// Input dimension `d`.
    pub d: usize,
    pub weight_dist: WeightDist,
    pub data_dist: DataDist,
}

impl FeatureMapSpec {
    /// Fully connected map with the weight scaling used throughout the
    /// experiments (`w ~ N(0, I_d / d)`, `x ~ N(0, I_d)`).
    pub fn standard(kind: MapKind, d: usize) -> Self {
        FeatureMapSpec {
            kind,
            d,
            weight_dist: WeightDist::Gaussian {
                scale: 1.0 / (d as f64).sqrt(),
            },
            data_dist: DataDist::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("feature map d must be >= 1".into()));
        }
        match self.weight_dist {
            WeightDist::Gaussian { scale } if !(scale.is_finite() && scale > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "weight scale must be > 0, got {scale}"
                )));
            }
            WeightDist::Sphere { radius } if !(radius.is_finite() && radius > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "weight radius must be > 0, got {radius}"
                )));
            }
            _ => {}
        }
        if let DataDist::Sphere { radius } = self.data_dist {
            if !radius.is_finite() || radius < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "data radius must be >= 0, got {radius}"
                )));
            }
        }
        if let MapKind::Spiked { overlap } = self.kind {
            if !overlap.is_finite() || overlap.abs() > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "spike overlap must lie in [-1, 1], got {overlap}"
                )));
            }
        }
        Ok(())
    }
}

/// Teacher nonlinearity for `y = sigma(<beta, x>)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Linear,
    Erf,
    Tanh,
}

/// Teacher function `f(x) = sigma(<beta, x>)`.
#[derive(Debug, Clone)]
pub struct Teacher {
    pub kind: TargetKind,
    pub beta: DVector<f64>,
}

impl Teacher {
    /// Unit-norm teacher direction drawn from the given RNG.
    pub fn random_unit(kind: TargetKind, d: usize, rng: &mut impl Rng) -> Self {
        let mut beta = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = beta.norm();
        if norm > 0.0 {
            beta /= norm;
        } else {
            beta[0] = 1.0;
        }
        Teacher { kind, beta }
    }

    pub fn eval_dot(&self, dot: f64) -> f64 {
        match self.kind {
            TargetKind::Linear => dot,
            TargetKind::Erf => libm::erf(dot),
            TargetKind::Tanh => dot.tanh(),
        }
    }

    /// Noiseless labels `f(x_i)` for every row of `x`.
    pub fn eval_rows(&self, x: &DMatrix<f64>) -> DVector<f64> {
        (x * &self.beta).map(|t| self.eval_dot(t))
    }
}

/// Weights realized for one replicate: the matrix `W` plus the per-feature
/// spike scales when the map is spiked.
pub struct SampledWeights {
    pub w: DMatrix<f64>,
    pub spike_u: Option<DVector<f64>>,
    pub spike_v: Option<DVector<f64>>,
}

fn sample_direction(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Samples `count` rows from the given distribution into a `count x d` matrix.
fn sample_rows(
    count: usize,
    d: usize,
    rng: &mut impl Rng,
    gaussian_scale: Option<f64>,
    sphere_radius: Option<f64>,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(count, d);
    for i in 0..count {
        if let Some(scale) = gaussian_scale {
            for j in 0..d {
                m[(i, j)] = scale * rng.sample::<f64, _>(StandardNormal);
            }
        } else {
            let radius = sphere_radius.unwrap();
            let dir = sample_direction(d, rng);
            for j in 0..d {
                m[(i, j)] = radius * dir[j];
            }
        }
    }
    m
}

pub fn sample_data(fm: &FeatureMapSpec, count: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    match fm.data_dist {
        DataDist::Gaussian => sample_rows(count, fm.d, rng, Some(1.0), None),
        DataDist::Sphere { radius } => sample_rows(count, fm.d, rng, None, Some(radius)),
    }
}

/// Samples the `p` random weights (and spike components where applicable).
/// The spike direction is built deterministically from the teacher vector so
/// that `<v, beta_hat> = overlap` for the unit teacher direction.
pub fn sample_weights(
    fm: &FeatureMapSpec,
    p: usize,
    teacher: &Teacher,
    rng: &mut impl Rng,
) -> Result<SampledWeights> {
    fm.validate()?;
    let w = match fm.weight_dist {
        WeightDist::Gaussian { scale } => sample_rows(p, fm.d, rng, Some(scale), None),
        WeightDist::Sphere { radius } => sample_rows(p, fm.d, rng, None, Some(radius)),
    };
    let (spike_u, spike_v) = if let MapKind::Spiked { overlap } = fm.kind {
        let beta_hat = {
            let norm = teacher.beta.norm();
            if norm == 0.0 {
                return Err(Error::InvalidParameter(
                    "spiked map requires a nonzero teacher vector".into(),
                ));
            }
            &teacher.beta / norm
        };
        // Orthogonal complement of the teacher direction along the first
        // basis vector not parallel to it.
        let mut orth = DVector::zeros(fm.d);
        let axis = if beta_hat[0].abs() < 0.9 { 0 } else { (1).min(fm.d - 1) };
        orth[axis] = 1.0;
        let proj = beta_hat.dot(&orth);
        orth -= proj * &beta_hat;
        let norm = orth.norm();
        let v = if norm > 1e-12 && overlap.abs() < 1.0 {
            overlap * &beta_hat + (1.0 - overlap * overlap).sqrt() * (orth / norm)
        } else {
            overlap * &beta_hat
        };
        let u = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        (Some(u), Some(v))
    } else {
        (None, None)
    };
    Ok(SampledWeights { w, spike_u, spike_v })
}

fn relu(t: f64) -> f64 {
    t.max(0.0)
}

/// Builds the scaled feature matrix `Z_ij = phi(x_i, w_j) / sqrt(p)`.
pub fn feature_matrix(
    fm: &FeatureMapSpec,
    x: &DMatrix<f64>,
    weights: &SampledWeights,
) -> Result<DMatrix<f64>> {
    let (n, d) = (x.nrows(), x.ncols());
    let p = weights.w.nrows();
    if d != fm.d || weights.w.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "feature map d = {}, X has {} columns, W has {} columns",
            fm.d,
            d,
            weights.w.ncols()
        )));
    }
    let scale = 1.0 / (p as f64).sqrt();
    let mut z = match fm.kind {
        MapKind::ConvPooled => {
            let mut z = DMatrix::zeros(n, p);
            let mut pooled = vec![0.0f64; d];
            for i in 0..n {
                for j in 0..p {
                    for (shift, slot) in pooled.iter_mut().enumerate() {
                        let mut dot = 0.0;
                        for t in 0..d {
                            dot += weights.w[(j, t)] * x[(i, (t + shift) % d)];
                        }
                        *slot = relu(dot);
                    }
                    // Sorting makes the pooled sum independent of the shift
                    // labeling, so cyclic shifts of x give bit-identical
                    // features.
                    pooled.sort_by(f64::total_cmp);
                    z[(i, j)] = pooled.iter().sum::<f64>() / d as f64;
                }
            }
            z
        }
        _ => {
            // All remaining maps act pointwise on the dot products X W^T.
            let mut z = x * weights.w.transpose();
            match fm.kind {
                MapKind::Linear => {}
                MapKind::Erf => z.apply(|t| *t = libm::erf(*t)),
                MapKind::Tanh => z.apply(|t| *t = t.tanh()),
                MapKind::Relu => z.apply(|t| *t = relu(*t)),
                MapKind::Spiked { .. } => {
                    let u = weights.spike_u.as_ref().expect("spike scales sampled");
                    let v = weights.spike_v.as_ref().expect("spike direction sampled");
                    let vx = x * v;
                    for i in 0..n {
                        for j in 0..p {
                            z[(i, j)] = (z[(i, j)] + u[j] * vx[i]).tanh();
                        }
                    }
                }
                MapKind::ConvPooled => unreachable!(),
            }
            z
        }
    };
    z *= scale;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite feature value".into()));
    }
    Ok(z)
}
