//! Eigenvalue spectra and target coefficient sequences.
//!
//! A [`Spectrum`] stores the squared eigenvalues `xi_k^2` of the feature
//! operator together with the target coefficients `beta_k` in the same
//! eigenbasis. Infinite spectra are represented by finite truncation.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Parameters of a power-law spectrum, kept for reference on generated spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawMeta {
    /// Capacity exponent controlling the eigenvalue decay, `> 1`.
    pub alpha: f64,
    /// Source exponent controlling the target decay, `> 0`.
    pub r: f64,
    /// Truncation length.
    pub trunc: usize,
}

/// Ordered squared eigenvalues and target coefficients.
///
/// Invariants: `eigs` is non-increasing and non-negative, and `target` has
/// the same length. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigs: Vec<f64>,
    target: Vec<f64>,
    meta: Option<PowerLawMeta>,
}

/// Default truncation for power-law spectra.
pub const DEFAULT_TRUNC: usize = 10_000;

impl Spectrum {
    /// Power-law spectrum `xi_k^2 = k^-alpha`, `beta_k = k^-(1+2*alpha*r)/2`
    /// for `k = 1..=trunc`.
    pub fn power_law(alpha: f64, r: f64, trunc: usize) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "power-law alpha must be > 1 (trace diverges otherwise), got {alpha}"
            )));
        }
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "power-law r must be > 0, got {r}"
            )));
        }
        if trunc == 0 {
            return Err(Error::InvalidParameter(
                "power-law trunc must be >= 1".into(),
            ));
        }
        let beta_exp = -(1.0 + 2.0 * alpha * r) / 2.0;
        let mut eigs = Vec::with_capacity(trunc);
        let mut target = Vec::with_capacity(trunc);
        for k in 1..=trunc {
            let kf = k as f64;
            eigs.push(kf.powf(-alpha));
            target.push(kf.powf(beta_exp));
        }
        Ok(Spectrum {
            eigs,
            target,
            meta: Some(PowerLawMeta { alpha, r, trunc }),
        })
    }

    /// Wraps explicit eigenvalue/target lists, validating the ordering.
    pub fn from_parts(eigs: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if eigs.len() != target.len() {
            return Err(Error::InvalidSpectrum(format!(
                "eigs length {} != target length {}",
                eigs.len(),
                target.len()
            )));
        }
        if eigs.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        for (k, &e) in eigs.iter().enumerate() {
            if !e.is_finite() || e < 0.0 {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalue {e} at index {k} is negative or non-finite"
                )));
            }
            if k > 0 && e > eigs[k - 1] {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalues not non-increasing at index {k}: {} < {e}",
                    eigs[k - 1]
                )));
            }
        }
        if let Some((k, &b)) = target.iter().enumerate().find(|(_, b)| !b.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "target coefficient {b} at index {k} is non-finite"
            )));
        }
        Ok(Spectrum {
            eigs,
            target,
            meta: None,
        })
    }

    /// Squared eigenvalues, non-increasing.
    pub fn eigs(&self) -> &[f64] {
        &self.eigs
    }

    /// Target coefficients in the operator eigenbasis.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigs.is_empty()
    }

    /// Generator parameters, when the spectrum came from [`Spectrum::power_law`].
    pub fn meta(&self) -> Option<&PowerLawMeta> {
        self.meta.as_ref()
    }

    /// Number of nonzero eigenvalues (zeros are only permitted at the tail).
    pub fn rank(&self) -> usize {
        self.eigs.iter().position(|&e| e == 0.0).unwrap_or(self.eigs.len())
    }

    /// Trace `sum_k xi_k^2`, accumulated tail-first.
    pub fn trace(&self) -> f64 {
        self.eigs.iter().rev().sum()
    }

    /// Tail trace `sum_{k > m} xi_k^2` (`m` counted from 1).
    pub fn tail_trace(&self, m: usize) -> f64 {
        if m >= self.eigs.len() {
            return 0.0;
        }
        self.eigs[m..].iter().rev().sum()
    }

    /// `sum_k (xi_k^2)^power_sigma / (xi_k^2 + nu)^power_res` with powers in {1, 2}.
    ///
    /// Terms are accumulated from the tail so the tiny power-law tail is
    /// summed before the dominant head.
    pub fn trace_resolvent(&self, nu: f64, power_sigma: u32, power_res: u32) -> Result<f64> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "trace_resolvent requires nu > 0, got {nu}"
            )));
        }
        check_power("power_sigma", power_sigma)?;
        check_power("power_res", power_res)?;
        Ok(self.resolvent_sum(nu, power_sigma, power_res))
    }

    pub(crate) fn resolvent_sum(&self, nu: f64, power_sigma: u32, power_res: u32) -> f64 {
        let mut acc = 0.0;
        for &e in self.eigs.iter().rev() {
            let num = if power_sigma == 1 { e } else { e * e };
            let den = e + nu;
            let den = if power_res == 1 { den } else { den * den };
            acc += num / den;
        }
        acc
    }

    /// Quadratic form `sum_k beta_k^2 (xi_k^2)^power_sigma / (xi_k^2 + nu)^power_res`
    /// with `power_sigma` in {0, 1} and `power_res` in {1, 2}.
    pub fn quad_form(&self, nu: f64, power_sigma: u32, power_res: u32) -> Result<f64> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "quad_form requires nu > 0, got {nu}"
            )));
        }
        if power_sigma > 1 {
            return Err(Error::InvalidParameter(format!(
                "quad_form power_sigma must be 0 or 1, got {power_sigma}"
            )));
        }
        check_power("power_res", power_res)?;
        Ok(self.quad_sum(nu, power_sigma, power_res))
    }

    /// One fused tail-first pass over the spectrum collecting every sum the
    /// risk equivalent needs at `nu`: `(T11, T22, T12, q02, q12)`. Each
    /// accumulator matches the corresponding separate method bit for bit.
    pub(crate) fn risk_sums(&self, nu: f64) -> (f64, f64, f64, f64, f64) {
        let mut t11 = 0.0;
        let mut t22 = 0.0;
        let mut t12 = 0.0;
        let mut q02 = 0.0;
        let mut q12 = 0.0;
        for (&e, &b) in self.eigs.iter().zip(&self.target).rev() {
            let den = e + nu;
            let den2 = den * den;
            t11 += e / den;
            t22 += e * e / den2;
            t12 += e / den2;
            q02 += b * b / den2;
            q12 += b * b * e / den2;
        }
        (t11, t22, t12, q02, q12)
    }

    pub(crate) fn quad_sum(&self, nu: f64, power_sigma: u32, power_res: u32) -> f64 {
        let mut acc = 0.0;
        for (&e, &b) in self.eigs.iter().zip(&self.target).rev() {
            let num = if power_sigma == 0 { b * b } else { b * b * e };
            let den = e + nu;
            let den = if power_res == 1 { den } else { den * den };
            acc += num / den;
        }
        acc
    }

    /// Writes the two-column CSV form (`xi_sq,beta_star`, header required).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "xi_sq,beta_star")?;
        for (&e, &b) in self.eigs.iter().zip(&self.target) {
            writeln!(w, "{e},{b}")?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads the two-column CSV form, validating ordering and signs.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("spectrum csv is empty".into()))??;
        let header: Vec<&str> = header.split(',').map(str::trim).collect();
        if header != ["xi_sq", "beta_star"] {
            return Err(Error::Parse(format!(
                "spectrum csv header must be `xi_sq,beta_star`, got `{}`",
                header.join(",")
            )));
        }
        let mut eigs = Vec::new();
        let mut target = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let (e, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(e), Some(b), None) => (e, b),
                _ => {
                    return Err(Error::Parse(format!(
                        "spectrum csv line {}: expected two columns",
                        lineno + 2
                    )))
                }
            };
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "spectrum csv line {}: bad {what} `{s}`",
                        lineno + 2
                    ))
                })
            };
            eigs.push(parse(e, "xi_sq")?);
            target.push(parse(b, "beta_star")?);
        }
        Spectrum::from_parts(eigs, target)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn check_power(name: &str, p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be 1 or 2, got {p}"
        )))
    }
}
