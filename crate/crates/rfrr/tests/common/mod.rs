#![allow(dead_code)] // shared by several test binaries, each using a subset

//! Independent oracles shared by the integration suites. Everything here
//! recomputes from first principles (forward loops, the discriminant form of
//! the self-consistent equation) without touching the library's solver or
//! summation paths.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rfrr::Spectrum;

/// Forward-order trace of `S (S + nu)^-1` straight off the eigenvalue list.
pub fn trace_resolvent_oracle(eigs: &[f64], nu: f64) -> f64 {
    let mut acc = 0.0;
    for &e in eigs {
        acc += e / (e + nu);
    }
    acc
}

/// Bisection oracle for `nu2`: eliminate `nu1` through the discriminant form
/// and bisect `1 + n/p - sqrt((1 - n/p)^2 + 4 lam/(p nu2)) = (2/p) T11(nu2)`
/// over `[lam/n, lam/n + trace]`.
pub fn nu2_bisection_oracle(n: usize, p: usize, lam: f64, eigs: &[f64]) -> f64 {
    let nf = n as f64;
    let pf = p as f64;
    let trace: f64 = eigs.iter().sum();
    let h = |nu2: f64| {
        let a = 1.0 - nf / pf;
        1.0 + nf / pf
            - (a * a + 4.0 * lam / (pf * nu2)).sqrt()
            - 2.0 / pf * trace_resolvent_oracle(eigs, nu2)
    };
    let mut lo = lam / nf;
    let mut hi = lam / nf + trace;
    assert!(h(hi) >= 0.0, "oracle bracket failed at n={n}, p={p}, lam={lam}");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `nu1` from `nu2` through the second coupled equation.
pub fn nu1_from_nu2_oracle(n: usize, p: usize, lam: f64, eigs: &[f64], nu2: f64) -> f64 {
    let _ = (n, lam);
    let pf = p as f64;
    nu2 * (pf - trace_resolvent_oracle(eigs, nu2)) / pf
}

/// A reproducible mix of power-law and explicit spectra with dimensions and
/// regularizations spanning the acceptance ranges.
pub fn random_configs(count: usize, seed: u64) -> Vec<(usize, usize, f64, Spectrum)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut configs = Vec::with_capacity(count);
    for i in 0..count {
        let n = sample_dim(&mut rng);
        let p = sample_dim(&mut rng);
        let lam = 10f64.powf(rng.gen_range(-6.0..3.0));
        let s = if i % 2 == 0 {
            let alpha = rng.gen_range(1.1..3.5);
            let r = rng.gen_range(0.1..2.0);
            let trunc = *[500usize, 2000, 10_000].choose(&mut rng).unwrap();
            Spectrum::power_law(alpha, r, trunc).unwrap()
        } else {
            let len = rng.gen_range(20..400);
            let mut eigs: Vec<f64> = (0..len)
                .map(|_| 10f64.powf(rng.gen_range(-6.0..0.5)))
                .collect();
            eigs.sort_by(|a, b| b.total_cmp(a));
            let target = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Spectrum::from_parts(eigs, target).unwrap()
        };
        configs.push((n, p, lam, s));
    }
    configs
}

fn sample_dim(rng: &mut impl Rng) -> usize {
    10f64.powf(rng.gen_range(1.0..3.699)).round() as usize
}
