//! Self-consistent fixed points `(nu1, nu2)` and their kernel / approximation
//! limits.
//!
//! The coupled system solved by [`solve_nu`] is
//!
//! ```text
//! n - lambda / nu1      = Tr(S (S + nu2)^-1)
//! p - p * nu1 / nu2     = Tr(S (S + nu2)^-1)
//! ```
//!
//! with `S = diag(xi_k^2)`. Eliminating `nu1` leaves a scalar equation in
//! `nu2` that is strictly increasing, so a damped fixed-point iteration with
//! a bracketed-bisection fallback always lands on the unique solution.

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Stopping rules for the fixed-point solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Relative residual tolerance; residuals are checked against `tol * n`.
    pub tol: f64,
    /// Iteration cap before the solver reports failure.
    pub max_iter: usize,
    /// Under-relaxation factor in `(0, 1]`; 1 is the plain iteration.
    pub damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-10,
            max_iter: 100_000,
            damping: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "solver tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("solver max_iter must be >= 1".into()));
        }
        if !self.damping.is_finite() || self.damping <= 0.0 || self.damping > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "solver damping must be in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Solution of the coupled self-consistent system.
#[derive(Debug, Clone, Copy)]
pub struct FixedPoint {
    pub nu1: f64,
    pub nu2: f64,
    /// Iterations spent (fixed-point steps plus bisection steps).
    pub iterations: usize,
    /// Max of the two coupled residuals at the returned point.
    pub residual: f64,
}

fn validate_common(lam: f64, s: &Spectrum) -> Result<()> {
    if !lam.is_finite() || lam <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "regularization lambda must be > 0, got {lam}"
        )));
    }
    if s.is_empty() {
        return Err(Error::InvalidSpectrum("empty spectrum".into()));
    }
    Ok(())
}

fn validate_count(name: &str, v: usize) -> Result<f64> {
    if v == 0 {
        return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
    }
    Ok(v as f64)
}

/// `nu1` as a closed-form function of `nu2` (the discriminant form of the
/// coupled system). For `n > p` the direct form `a + sqrt(a^2 + b)` cancels
/// catastrophically, so the conjugate form is used there.
fn nu1_of(nu2: f64, nf: f64, pf: f64, lam: f64) -> f64 {
    let a = 1.0 - nf / pf;
    let b = 4.0 * lam / (pf * nu2);
    let root = (a * a + b).sqrt();
    if a >= 0.0 {
        0.5 * nu2 * (a + root)
    } else {
        0.5 * nu2 * b / (root - a)
    }
}

/// `1 - nu1(nu2)/nu2` without cancellation. For `a >= 0` the identity
/// `(1 + n/p) - sqrt(a^2 + b) = 4 (n - lam/nu2) / (p (1 + n/p + sqrt(a^2 + b)))`
/// avoids the p-scale subtraction; for `a < 0` the conjugate arrangement
/// keeps all magnitudes at n/p scale.
fn one_minus_ratio(nu2: f64, nf: f64, pf: f64, lam: f64) -> f64 {
    let a = 1.0 - nf / pf;
    let b = 4.0 * lam / (pf * nu2);
    let root = (a * a + b).sqrt();
    if a >= 0.0 {
        2.0 * (nf - lam / nu2) / (pf * (1.0 + nf / pf + root))
    } else {
        let denom = 2.0 * (root - a);
        (denom - b) / denom
    }
}

/// Residuals of the coupled system at `(nu1, nu2)`: `(r1, r2)` with
/// `r1 = n - lambda/nu1 - T11` and `r2 = p (1 - nu1/nu2) - T11`, the ratio
/// term evaluated through [`one_minus_ratio`] so that huge `p` does not
/// drown the residual in rounding noise.
fn coupled_residuals(nu1: f64, nu2: f64, nf: f64, pf: f64, lam: f64, s: &Spectrum) -> (f64, f64) {
    let t11 = s.resolvent_sum(nu2, 1, 1);
    (
        nf - lam / nu1 - t11,
        pf * one_minus_ratio(nu2, nf, pf, lam) - t11,
    )
}

/// Scalarized form `g(nu2) = p (1 - nu1(nu2)/nu2) - T11(nu2)`, strictly
/// increasing in `nu2` and zero exactly at the solution. Algebraically equal
/// to both coupled residuals when `nu1` comes from the closed form.
fn scalar_residual(nu2: f64, nf: f64, pf: f64, lam: f64, s: &Spectrum) -> f64 {
    pf * one_minus_ratio(nu2, nf, pf, lam) - s.resolvent_sum(nu2, 1, 1)
}

/// Solves the coupled system for `(nu1, nu2)`.
pub fn solve_nu(
    n: usize,
    p: usize,
    lam: f64,
    s: &Spectrum,
    settings: &SolverSettings,
) -> Result<FixedPoint> {
    settings.validate()?;
    validate_common(lam, s)?;
    let nf = validate_count("n", n)?;
    let pf = validate_count("p", p)?;

    let trace = s.trace();
    let mut nu2 = lam / nf + trace / pf;
    let mut iterations = 0usize;
    let res_bound = settings.tol * nf;

    // Damped iteration: nu1 from the closed form, then the trace update on nu2.
    let mut last_checkpoint_res = f64::INFINITY;
    let mut stalled = false;
    while iterations < settings.max_iter {
        iterations += 1;
        let nu1 = nu1_of(nu2, nf, pf, lam);
        let t11 = s.resolvent_sum(nu2, 1, 1);
        let raw = nu1 + nu2 * t11 / pf;
        let next = settings.damping * raw + (1.0 - settings.damping) * nu2;
        let rel_step = ((next - nu2) / next).abs();
        nu2 = next;

        if rel_step <= settings.tol {
            let res = scalar_residual(nu2, nf, pf, lam, s).abs();
            if res <= res_bound {
                return finish(nu2, nf, pf, lam, s, iterations, res_bound);
            }
            // The iteration's own fixed point is not the solution to
            // tolerance; hand over to bisection.
            stalled = true;
            break;
        }

        // Every 100 iterations require the residual to keep shrinking.
        if iterations.is_multiple_of(100) {
            let res = scalar_residual(nu2, nf, pf, lam, s).abs();
            if res <= res_bound {
                return finish(nu2, nf, pf, lam, s, iterations, res_bound);
            }
            if res > 0.5 * last_checkpoint_res {
                stalled = true;
                break;
            }
            last_checkpoint_res = res;
        }
    }

    if !stalled {
        // max_iter exhausted; one last residual check before falling back.
        let res = scalar_residual(nu2, nf, pf, lam, s).abs();
        if res <= res_bound {
            return finish(nu2, nf, pf, lam, s, iterations, res_bound);
        }
    }

    // Bracketed bisection on the scalarized equation. g(lam/n) <= 0; grow the
    // upper end until the sign flips (lam/n + trace is usually enough).
    let lo0 = lam / nf;
    let mut lo = lo0;
    let mut hi = lo0 + trace.max(lo0);
    let mut grow = 0;
    while scalar_residual(hi, nf, pf, lam, s) < 0.0 {
        hi = lo0 + (hi - lo0) * 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::NoConvergence {
                iterations,
                residual: scalar_residual(hi, nf, pf, lam, s).abs(),
                nu1: nu1_of(hi, nf, pf, lam),
                nu2: hi,
            });
        }
    }
    for _ in 0..200 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if scalar_residual(mid, nf, pf, lam, s) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-16 * hi {
            break;
        }
    }
    nu2 = 0.5 * (lo + hi);
    let res = scalar_residual(nu2, nf, pf, lam, s).abs();
    if res <= res_bound {
        finish(nu2, nf, pf, lam, s, iterations, res_bound)
    } else {
        Err(Error::NoConvergence {
            iterations,
            residual: res,
            nu1: nu1_of(nu2, nf, pf, lam),
            nu2,
        })
    }
}

fn finish(
    nu2: f64,
    nf: f64,
    pf: f64,
    lam: f64,
    s: &Spectrum,
    iterations: usize,
    res_bound: f64,
) -> Result<FixedPoint> {
    let nu1 = nu1_of(nu2, nf, pf, lam);
    let (r1, r2) = coupled_residuals(nu1, nu2, nf, pf, lam, s);
    let residual = r1.abs().max(r2.abs());
    if !nu1.is_finite() || !nu2.is_finite() || residual > res_bound {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            nu1,
            nu2,
        });
    }
    Ok(FixedPoint {
        nu1,
        nu2,
        iterations,
        residual,
    })
}

/// Kernel-limit fixed point: unique positive root of
/// `n - lambda/nu = Tr(S (S + nu)^-1)`, found by bisection.
pub fn solve_nu_kernel(
    n: usize,
    lam: f64,
    s: &Spectrum,
    settings: &SolverSettings,
) -> Result<f64> {
    settings.validate()?;
    validate_common(lam, s)?;
    let nf = validate_count("n", n)?;

    // f is strictly increasing; f(lam/n) <= 0 and f((lam + trace)/n) >= 0.
    let f = |nu: f64| nf - lam / nu - s.resolvent_sum(nu, 1, 1);
    let mut lo = lam / nf;
    let mut hi = (lam + s.trace()) / nf;
    let res_bound = settings.tol * nf;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-16 * hi {
            break;
        }
    }
    let nu = 0.5 * (lo + hi);
    let res = f(nu).abs();
    if res <= res_bound {
        Ok(nu)
    } else {
        Err(Error::NoConvergence {
            iterations: 200,
            residual: res,
            nu1: nu,
            nu2: nu,
        })
    }
}

/// Approximation-limit fixed point: the positive root of
/// `p = Tr(S (S + nu)^-1)` when `p` is below the number of nonzero
/// eigenvalues, `0` otherwise (the trace is bounded by the rank).
pub fn solve_nu_approx(p: usize, s: &Spectrum, settings: &SolverSettings) -> Result<f64> {
    settings.validate()?;
    if s.is_empty() {
        return Err(Error::InvalidSpectrum("empty spectrum".into()));
    }
    let pf = validate_count("p", p)?;
    if p >= s.rank() {
        return Ok(0.0);
    }

    // h(nu) = p - T11(nu) is increasing, negative near 0 and positive at
    // trace/p; push lo down until the bracket is certain.
    let h = |nu: f64| pf - s.resolvent_sum(nu, 1, 1);
    let mut hi = s.trace() / pf;
    let mut lo = hi;
    let mut shrink = 0;
    while h(lo) > 0.0 {
        lo *= 0.5;
        shrink += 1;
        if shrink > 1100 || lo < f64::MIN_POSITIVE {
            return Ok(0.0); // solution is indistinguishable from zero
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-16 * hi {
            break;
        }
    }
    let nu = 0.5 * (lo + hi);
    let res = h(nu).abs();
    if res <= settings.tol * pf {
        Ok(nu)
    } else {
        Err(Error::NoConvergence {
            iterations: 200,
            residual: res,
            nu1: 0.0,
            nu2: nu,
        })
    }
}
