//! Solver results checked against the independent bisection oracle.

mod common;

use common::{nu1_from_nu2_oracle, nu2_bisection_oracle};
use rfrr::{solve_nu, solve_nu_approx, solve_nu_kernel, SolverSettings, Spectrum};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn coupled_solver_matches_bisection_oracle() {
    let s = Spectrum::power_law(2.0, 0.5, 1000).unwrap();
    let (n, p, lam) = (500, 300, 0.1);
    let fp = solve_nu(n, p, lam, &s, &SolverSettings::default()).unwrap();
    let nu2 = nu2_bisection_oracle(n, p, lam, s.eigs());
    let nu1 = nu1_from_nu2_oracle(n, p, lam, s.eigs(), nu2);
    assert!(rel(fp.nu2, nu2) < 1e-8, "nu2 {} vs oracle {nu2}", fp.nu2);
    assert!(rel(fp.nu1, nu1) < 1e-8, "nu1 {} vs oracle {nu1}", fp.nu1);
}

#[test]
fn kernel_solver_is_large_p_limit_of_oracle() {
    let s = Spectrum::power_law(1.6, 0.8, 600).unwrap();
    let (n, lam) = (150, 0.02);
    let nu_k = solve_nu_kernel(n, lam, &s, &SolverSettings::default()).unwrap();
    let p = 1_000_000 * n;
    let nu2 = nu2_bisection_oracle(n, p, lam, s.eigs());
    assert!(rel(nu_k, nu2) < 1e-3, "nu_K {nu_k} vs wide-oracle {nu2}");
}

#[test]
fn approx_solver_matches_direct_count_inversion() {
    // Flat explicit spectrum: T11(nu) = rank * e / (e + nu), invertible by hand.
    let e = 0.7;
    let rank = 12usize;
    let s = Spectrum::from_parts(vec![e; rank], vec![0.1; rank]).unwrap();
    for p in 1..rank {
        let nu = solve_nu_approx(p, &s, &SolverSettings::default()).unwrap();
        let expected = e * (rank - p) as f64 / p as f64;
        assert!(rel(nu, expected) < 1e-9, "p={p}: {nu} vs {expected}");
    }
}
