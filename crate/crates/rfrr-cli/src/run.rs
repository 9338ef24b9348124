//! Mode runners: expand the grid, evaluate every point (in parallel, rows in
//! deterministic grid order), and collect rows with per-point status.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rfrr::{
    deterministic_risk, mc_risk_feature_map, mc_risk_gaussian, rate_exponents,
    risk_from_fixed_point, solve_nu, approximation_diagnostics, McEstimate, ScalingConfig,
    SolverSettings, Spectrum, Teacher,
};

use crate::config::{Config, ConfigError, Mode};
use crate::output::Row;

pub struct RunOutcome {
    pub rows: Vec<Row>,
    /// First failing point description, if any point failed.
    pub first_failure: Option<String>,
}

fn collect(rows: Vec<Row>, describe: impl Fn(&Row) -> String) -> RunOutcome {
    let first_failure = rows
        .iter()
        .find(|r| !r.ok())
        .map(|r| format!("{} ({})", describe(r), r.status));
    RunOutcome {
        rows,
        first_failure,
    }
}

fn point_label(row: &Row) -> String {
    format!(
        "n={}, p={}, lambda={}",
        row.n.map_or("?".into(), |v| v.to_string()),
        row.p.map_or("?".into(), |v| v.to_string()),
        row.lambda.map_or("?".into(), |v| v.to_string()),
    )
}

fn base_row(n: usize, p: usize, lam: f64, sigma2: f64, seed: u64) -> Row {
    Row {
        n: Some(n as u64),
        p: Some(p as u64),
        lambda: Some(lam),
        sigma2: Some(sigma2),
        seed: Some(seed),
        status: "ok".into(),
        ..Default::default()
    }
}

fn fill_equiv(row: &mut Row, n: usize, p: usize, lam: f64, sigma2: f64, s: &Spectrum, settings: &SolverSettings) {
    match solve_nu(n, p, lam, s, settings)
        .and_then(|fp| risk_from_fixed_point(&fp, n, p, sigma2, s).map(|rq| (fp, rq)))
    {
        Ok((fp, rq)) => {
            row.nu1 = Some(fp.nu1);
            row.nu2 = Some(fp.nu2);
            row.upsilon = Some(rq.upsilon);
            row.chi = Some(rq.chi);
            row.bias = Some(rq.bias);
            row.variance = Some(rq.variance);
            row.risk = Some(rq.risk);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
}

fn fill_mc(row: &mut Row, est: Result<McEstimate, rfrr::Error>) {
    match est {
        Ok(est) => {
            row.mc_risk = Some(est.mean_risk);
            row.mc_stderr = Some(est.std_err);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
}

pub fn run(cfg: &Config) -> Result<RunOutcome, ConfigError> {
    match cfg.mode {
        Mode::Equiv => run_equiv(cfg),
        Mode::Simulate => run_point_mc(cfg, false),
        Mode::Sweep => run_point_mc(cfg, true),
        Mode::Rates | Mode::Phase => run_rates(cfg),
        Mode::Diag => run_diag(cfg),
        Mode::Empirical => run_empirical(cfg),
    }
}

fn run_equiv(cfg: &Config) -> Result<RunOutcome, ConfigError> {
    let s = cfg.require_spectrum()?;
    let grid = cfg.require_grid()?;
    let settings = cfg.solver.as_ref().map_or_else(SolverSettings::default, |c| c.settings());
    let sigma2 = cfg.sigma2.unwrap_or(0.0);
    let seed = cfg.seed.unwrap_or(0);
    let rows: Vec<Row> = grid
        .points()
        .into_par_iter()
        .map(|(n, p, lam, _, _)| {
            let mut row = base_row(n, p, lam, sigma2, seed);
            fill_equiv(&mut row, n, p, lam, sigma2, &s, &settings);
            row
        })
        .collect();
    Ok(collect(rows, point_label))
}

/// `simulate` runs the Monte Carlo only; `sweep` additionally evaluates the
/// deterministic equivalent at every point and reports the relative error.
fn run_point_mc(cfg: &Config, with_equiv: bool) -> Result<RunOutcome, ConfigError> {
    let grid = cfg.require_grid()?;
    let settings = cfg.solver.as_ref().map_or_else(SolverSettings::default, |c| c.settings());
    let sigma2 = cfg.sigma2.unwrap_or(0.0);
    let seed = cfg.seed.unwrap_or(0);
    let sim = cfg.simulate.as_ref();
    let replicates = sim.and_then(|c| c.replicates).unwrap_or(40);
    if replicates == 0 {
        return Err(ConfigError("simulate.replicates must be >= 1".into()));
    }

    let fm_cfg = sim.and_then(|c| c.feature_map.as_ref());
    type DumpSlot = std::sync::Mutex<Vec<(usize, Vec<f64>)>>;
    let dump: Option<DumpSlot> =
        sim.and_then(|c| c.dump_replicates.as_ref()).map(|_| DumpSlot::default());

    let rows: Vec<Row> = if let Some(fm_cfg) = fm_cfg {
        if with_equiv {
            return Err(ConfigError(
                "sweep mode compares against the Gaussian-design equivalent; \
                 simulate.feature_map belongs to simulate mode"
                    .into(),
            ));
        }
        // Feature-map path: teacher drawn once from a dedicated stream.
        let (fm, target_kind) = fm_cfg.build()?;
        let n_test_cfg = sim.and_then(|c| c.n_test);
        let mut teacher_rng = ChaCha8Rng::seed_from_u64(seed);
        teacher_rng.set_stream(u64::MAX);
        let teacher = Teacher::random_unit(target_kind, fm.d, &mut teacher_rng);
        grid.points()
            .into_par_iter()
            .enumerate()
            .map(|(idx, (n, p, lam, _, _))| {
                let mut row = base_row(n, p, lam, sigma2, seed);
                let n_test = n_test_cfg.unwrap_or(10 * n);
                let est = mc_risk_feature_map(
                    &fm, &teacher, n, p, lam, sigma2, n_test, replicates, seed,
                );
                if let (Some(d), Ok(est)) = (&dump, &est) {
                    if let Some(per) = &est.per_replicate {
                        d.lock().unwrap().push((idx, per.clone()));
                    }
                }
                fill_mc(&mut row, est);
                row
            })
            .collect()
    } else {
        let s = cfg.require_spectrum()?;
        grid.points()
            .into_par_iter()
            .enumerate()
            .map(|(idx, (n, p, lam, _, _))| {
                let mut row = base_row(n, p, lam, sigma2, seed);
                let est = mc_risk_gaussian(n, p, lam, sigma2, &s, replicates, seed);
                if let (Some(d), Ok(est)) = (&dump, &est) {
                    if let Some(per) = &est.per_replicate {
                        d.lock().unwrap().push((idx, per.clone()));
                    }
                }
                fill_mc(&mut row, est);
                if with_equiv && row.ok() {
                    fill_equiv(&mut row, n, p, lam, sigma2, &s, &settings);
                    if let (Some(mc), Some(risk)) = (row.mc_risk, row.risk) {
                        row.rel_err = Some((mc - risk).abs() / risk.abs().max(f64::MIN_POSITIVE));
                    }
                }
                row
            })
            .collect()
    };

    if let (Some(dump), Some(path)) = (dump, sim.and_then(|c| c.dump_replicates.as_ref())) {
        let mut entries = dump.into_inner().unwrap();
        entries.sort_by_key(|(idx, _)| *idx);
        let mut text = String::from("point_index,replicate,risk\n");
        for (idx, risks) in entries {
            for (rep, risk) in risks.iter().enumerate() {
                text.push_str(&format!("{idx},{rep},{risk}\n"));
            }
        }
        std::fs::write(path, text)
            .map_err(|e| ConfigError(format!("simulate.dump_replicates: {e}")))?;
    }
    Ok(collect(rows, point_label))
}

fn run_rates(cfg: &Config) -> Result<RunOutcome, ConfigError> {
    let rates = cfg
        .rates
        .as_ref()
        .ok_or_else(|| ConfigError("rates section is required for this mode".into()))?;
    let ells = match &rates.ell {
        Some(g) => g.expand("rates.ell")?,
        None => vec![],
    };
    let qs = match &rates.q {
        Some(g) => g.expand("rates.q")?,
        None => vec![],
    };
    if ells.is_empty() || qs.is_empty() {
        return Err(ConfigError(
            "rates.ell and rates.q grids are required (linspace or list)".into(),
        ));
    }
    let sigma2 = cfg.sigma2.unwrap_or(0.0);
    let with_crossovers = cfg.mode == Mode::Rates;
    let mut points = Vec::with_capacity(ells.len() * qs.len());
    for &ell in &ells {
        for &q in &qs {
            points.push((ell, q));
        }
    }
    let rows: Vec<Row> = points
        .into_par_iter()
        .map(|(ell, q)| {
            let mut row = Row {
                alpha: Some(rates.alpha),
                r: Some(rates.r),
                ell: Some(ell),
                q: Some(q),
                sigma2: Some(sigma2),
                status: "ok".into(),
                ..Default::default()
            };
            match rate_exponents(&ScalingConfig {
                alpha: rates.alpha,
                r: rates.r,
                ell,
                q,
                sigma2,
            }) {
                Ok(rep) => {
                    row.gamma_b = Some(rep.gamma_b);
                    row.gamma_v = Some(rep.gamma_v);
                    row.gamma = Some(rep.gamma);
                    row.region = Some(rep.label());
                    row.valid = Some(rep.valid);
                    if with_crossovers {
                        row.ell_star = Some(rep.crossovers.ell_star);
                        row.q_star = Some(rep.crossovers.q_star);
                        row.q_hat = Some(rep.crossovers.q_hat);
                        row.gamma_star = Some(rep.crossovers.gamma_star);
                        row.q0 = Some(rep.crossovers.q0);
                    }
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();
    Ok(collect(rows, |r| {
        format!(
            "ell={}, q={}",
            r.ell.map_or("?".into(), |v| v.to_string()),
            r.q.map_or("?".into(), |v| v.to_string())
        )
    }))
}

fn run_diag(cfg: &Config) -> Result<RunOutcome, ConfigError> {
    let s = cfg.require_spectrum()?;
    let grid = cfg.require_grid()?;
    let settings = cfg.solver.as_ref().map_or_else(SolverSettings::default, |c| c.settings());
    let sigma2 = cfg.sigma2.unwrap_or(0.0);
    let eta_star = cfg.diag.as_ref().and_then(|d| d.eta_star).unwrap_or(0.25);
    let seed = cfg.seed.unwrap_or(0);
    let rows: Vec<Row> = grid
        .points()
        .into_par_iter()
        .map(|(n, p, lam, _, _)| {
            let mut row = base_row(n, p, lam, sigma2, seed);
            row.seed = None;
            match solve_nu(n, p, lam, &s, &settings).and_then(|fp| {
                approximation_diagnostics(n, p, lam, sigma2, &s, eta_star, &settings)
                    .map(|rep| (fp, rep))
            }) {
                Ok((fp, rep)) => {
                    row.nu1 = Some(fp.nu1);
                    row.nu2 = Some(fp.nu2);
                    row.m = Some(rep.m as u64);
                    row.rho_p = Some(rep.rho_p);
                    row.rho_tilde_np = Some(rep.rho_tilde_np);
                    row.gamma_lambda = Some(rep.gamma_lambda);
                    row.gamma_plus = Some(rep.gamma_plus);
                    row.err_rate = Some(rep.err_rate);
                    row.ratio1 = Some(rep.ratio1);
                    row.ratio2 = Some(rep.ratio2);
                    row.eta_star = Some(rep.eta_star);
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();
    Ok(collect(rows, point_label))
}

fn run_empirical(cfg: &Config) -> Result<RunOutcome, ConfigError> {
    let emp = cfg
        .empirical
        .as_ref()
        .ok_or_else(|| ConfigError("empirical section is required for this mode".into()))?;
    let (fm, _target) = emp.feature_map.build()?;
    let mut x = rfrr::empirical::load_matrix_csv(&emp.x_csv)
        .map_err(|e| ConfigError(format!("empirical.x_csv: {e}")))?;
    let mut y = rfrr::empirical::load_vector_csv(&emp.y_csv)
        .map_err(|e| ConfigError(format!("empirical.y_csv: {e}")))?;
    let w = rfrr::empirical::load_matrix_csv(&emp.w_csv)
        .map_err(|e| ConfigError(format!("empirical.w_csv: {e}")))?;
    if emp.standardize.unwrap_or(false) {
        rfrr::empirical::standardize_columns(&mut x);
        rfrr::empirical::standardize_vector(&mut y);
    }
    let est = rfrr::empirical_diagonalize(&x, &y, &w, &fm)
        .map_err(|e| ConfigError(format!("empirical diagonalization: {e}")))?;
    if let Some(path) = &emp.spectrum_out {
        let spectrum = est
            .to_spectrum()
            .map_err(|e| ConfigError(format!("estimated spectrum: {e}")))?;
        spectrum
            .save_csv(path)
            .map_err(|e| ConfigError(format!("empirical.spectrum_out: {e}")))?;
    }
    let spectrum = est
        .to_spectrum()
        .map_err(|e| ConfigError(format!("estimated spectrum: {e}")))?;

    // With a grid, evaluate the deterministic equivalent on the estimated
    // spectrum at every point; without one, the spectrum export is the output.
    let Some(grid_cfg) = cfg.grid.as_ref() else {
        return Ok(RunOutcome {
            rows: vec![],
            first_failure: None,
        });
    };
    let grid = grid_cfg.build_points()?;
    let settings = cfg.solver.as_ref().map_or_else(SolverSettings::default, |c| c.settings());
    let sigma2 = cfg.sigma2.unwrap_or(0.0);
    let seed = cfg.seed.unwrap_or(0);
    let rows: Vec<Row> = grid
        .points()
        .into_par_iter()
        .map(|(n, p, lam, _, _)| {
            let mut row = base_row(n, p, lam, sigma2, seed);
            row.seed = None;
            match deterministic_risk(n, p, lam, sigma2, &spectrum, &settings) {
                Ok(rq) => {
                    row.upsilon = Some(rq.upsilon);
                    row.chi = Some(rq.chi);
                    row.bias = Some(rq.bias);
                    row.variance = Some(rq.variance);
                    row.risk = Some(rq.risk);
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();
    Ok(collect(rows, point_label))
}
