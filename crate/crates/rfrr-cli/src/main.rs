//! Configuration-driven experiment runner for random-feature ridge
//! regression: deterministic equivalents, Monte Carlo sweeps, rate tables,
//! phase-diagram grids, spectral diagnostics, and empirical-spectrum
//! pipelines. Exit codes: 0 ok, 2 config error, 3 numerical failure.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Config, Format};

#[derive(Parser, Debug)]
#[command(name = "rfrr", version, about = "Random-feature ridge regression experiment runner")]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output path; overrides [output].path. Defaults to stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format; overrides [output].format.
    #[arg(long, value_enum)]
    format: Option<CliFormat>,

    /// Worker threads; falls back to RFRR_THREADS, then all cores.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Seed override for simulation modes.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Suppress progress notes on stderr.
    #[arg(long)]
    quiet: bool,

    /// Omit the timestamp header so identical runs byte-reproduce.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum CliFormat {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let threads = args.threads.or_else(|| {
        std::env::var("RFRR_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(threads) = threads {
        if threads == 0 {
            eprintln!("config error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("config error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }

    let outcome = match run::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let timestamp = if args.no_timestamp {
        None
    } else {
        Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    };

    let format = match args.format {
        Some(CliFormat::Csv) => Format::Csv,
        Some(CliFormat::Json) => Format::Json,
        None => cfg
            .output
            .as_ref()
            .and_then(|o| o.format)
            .unwrap_or(Format::Csv),
    };
    let out_path = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));

    let write = |w: &mut dyn std::io::Write| match format {
        Format::Csv => output::write_csv(w, cfg.mode, &outcome.rows, timestamp.as_deref()),
        Format::Json => output::write_json(w, cfg.mode, &outcome.rows, timestamp.as_deref()),
    };
    let io_result = match &out_path {
        Some(path) => std::fs::File::create(path).and_then(|f| {
            let mut buf = std::io::BufWriter::new(f);
            write(&mut buf)
        }),
        None => write(&mut std::io::stdout().lock()),
    };
    if let Err(e) = io_result {
        eprintln!("output error: {e}");
        return ExitCode::from(3);
    }
    if !args.quiet {
        if let Some(path) = &out_path {
            eprintln!(
                "wrote {} row(s) to {} ({} mode)",
                outcome.rows.len(),
                path.display(),
                cfg.mode.as_str()
            );
        }
    }

    if let Some(failure) = &outcome.first_failure {
        eprintln!("numerical failure at {failure}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
