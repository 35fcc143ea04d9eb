//! Experiment runner CLI.
//!
//! Exit codes: 0 success, 1 bound-check failure, 2 configuration error.

use clap::{Parser, Subcommand, ValueEnum};
use multiscale_harness::{acceptance, config, experiment, output, HarnessError, OutputFormat};
use std::path::PathBuf;
use std::process::ExitCode;

/// Default output directory environment variable.
const OUT_ENV: &str = "MULTISCALE_OUT";

#[derive(Parser)]
#[command(
    name = "multiscale",
    about = "Multi-scale online learning experiments: pricing and auction runs, sweeps, offline benchmarks, verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to the config's `out`, then $MULTISCALE_OUT, then ./results).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Re-run a config while varying one top-level parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Top-level key to vary (e.g. `h`).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Offline benchmarks for a trace file.
    Bench {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the verification suite.
    Verify {
        /// Reduced Monte-Carlo budgets (smoke mode).
        #[arg(long)]
        quick: bool,
    },
}

fn out_dir(cli_out: Option<PathBuf>, cfg_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or(cfg_out)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn print_summary(result: &experiment::ExperimentResult) {
    for agg in &result.aggregates {
        println!("learner {}:", agg.learner);
        for (name, (mean, stderr)) in &agg.metrics {
            println!("  {name}: {mean:.6} ± {stderr:.6}");
        }
    }
    for run in &result.runs {
        for check in &run.checks {
            println!(
                "[{}] {} seed {}: {} (lhs {:.6e}, rhs {:.6e})",
                if check.pass { "ok" } else { "FAIL" },
                run.learner,
                run.seed,
                check.name,
                check.lhs,
                check.rhs
            );
        }
    }
    for check in &result.checks {
        println!(
            "[{}] {} (lhs {:.6e}, rhs {:.6e})",
            if check.pass { "ok" } else { "FAIL" },
            check.name,
            check.lhs,
            check.rhs
        );
    }
}

fn cmd_run(config: PathBuf, out: Option<PathBuf>, format: Format) -> Result<bool, HarnessError> {
    let text = std::fs::read_to_string(&config)?;
    let cfg = config::load(&text)?;
    let result = experiment::run_experiment(&cfg)?;
    let dir = out_dir(out, cfg.out.clone());
    output::emit(&result, &dir, format.into())?;
    print_summary(&result);
    println!("results written to {}", dir.display());
    Ok(result.has_failures())
}

fn cmd_sweep(
    config: PathBuf,
    param: String,
    values: String,
    out: Option<PathBuf>,
    format: Format,
) -> Result<bool, HarnessError> {
    let text = std::fs::read_to_string(&config)?;
    let base = config::load(&text)?; // validates before sweeping
    let mut entries = Vec::new();
    let mut failed = false;
    for value in values.split(',') {
        let value = value.trim();
        let cfg = config::load(&config::override_top(&text, &param, value))?;
        let result = experiment::run_experiment(&cfg)?;
        failed |= result.has_failures();
        println!("== {param} = {value} ==");
        print_summary(&result);
        entries.push((value.to_string(), result));
    }
    let dir = out_dir(out, base.out.clone());
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("sweep.csv"), output::sweep_csv(&param, &entries))?;
    if matches!(format, Format::Json | Format::Both) {
        for (value, result) in &entries {
            std::fs::write(
                dir.join(format!("sweep_{param}_{value}.json")),
                output::to_json(result)?,
            )?;
        }
    }
    println!("sweep results written to {}", dir.display());
    Ok(failed)
}

fn cmd_bench(trace: PathBuf, eps: f64, delta: Option<f64>) -> Result<bool, HarnessError> {
    use multiscale::myerson::{benchmark_opt_delta_multibuyer, enumerate_myerson};
    use multiscale::pricing::{benchmark_gmax, benchmark_gmax_delta, PriceGrid};

    let text = std::fs::read_to_string(&trace)?;
    let rows = multiscale::trace::parse_trace(&text)?;
    if rows.is_empty() {
        println!("empty trace");
        return Ok(false);
    }
    let n = rows[0].len();
    let max_v = rows
        .iter()
        .flat_map(|r| r.iter())
        .copied()
        .fold(1.0, f64::max);
    if n == 1 {
        let values = multiscale::trace::single_column(&rows)?;
        let grid = PriceGrid::new(eps, max_v)?;
        let (gmax, p_star) = benchmark_gmax(&values, &grid);
        println!("rounds: {}", values.len());
        println!("grid: {} prices up to {max_v}", grid.k());
        println!("g_max: {gmax} at fixed price {p_star}");
        if let Some(d) = delta {
            let gd = benchmark_gmax_delta(&values, &grid, d)?;
            match gd.price {
                Some(p) => println!("g_max({d}): {} at fixed price {p}", gd.value),
                None => println!("g_max({d}): no price sells in a {d} fraction of rounds"),
            }
        }
    } else {
        let grid = PriceGrid::new(eps, max_v)?;
        let mechanisms = enumerate_myerson(n, grid.prices())?;
        println!("rounds: {}, buyers: {n}", rows.len());
        println!(
            "mechanism family: {} distinct behaviors on a {}-level ladder",
            mechanisms.len(),
            grid.k()
        );
        let d = delta.unwrap_or(0.0);
        let od = benchmark_opt_delta_multibuyer(&rows, d, &mechanisms)?;
        match od.v_bar {
            Some(v) => println!("opt({d}): {} with value cap {v}", od.value),
            None => println!("opt({d}): {} (uncapped)", od.value),
        }
    }
    Ok(false)
}

fn cmd_verify(quick: bool) -> bool {
    let results = acceptance::run_all(quick);
    let mut failed = false;
    for r in &results {
        println!("{}", r.line());
        failed |= !r.pass;
    }
    failed
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Run {
            config,
            out,
            format,
        } => cmd_run(config, out, format),
        Cmd::Sweep {
            config,
            param,
            values,
            out,
            format,
        } => cmd_sweep(config, param, values, out, format),
        Cmd::Bench { trace, eps, delta } => cmd_bench(trace, eps, delta),
        Cmd::Verify { quick } => Ok(cmd_verify(quick)),
    };
    match outcome {
        Ok(false) => ExitCode::from(0),
        Ok(true) => ExitCode::from(1),
        Err(HarnessError::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
