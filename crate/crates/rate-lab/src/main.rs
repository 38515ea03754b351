//! Command-line experiment harness.
//!
//! Exit codes: 0 on success/pass, 2 when an experiment completes but fails
//! its acceptance gate, 1 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rate_lab::config::ExperimentConfig;
use rate_lab::report::filter_report_text;
use rate_lab::{io, runner};
use specfda::filter::{log_grid, verify_family, Filter, ALL_FILTERS};
use specfda::kernel::{Kernel1, Kernel2};
use specfda::mean::fit_mean;
use specfda::numerics::Grid1D;

#[derive(Parser)]
#[command(
    name = "rate-lab",
    about = "Monte Carlo convergence-rate lab for spectrally regularized mean/covariance estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate sweep over (n, m) cells with a log-log slope fit.
    RunRate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.json, cells.csv, plotdata.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sampling-density scan: m = ceil(n^gamma) per gamma.
    PhaseScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Paired cut-off vs Tikhonov comparison at high smoothness.
    Saturation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit one dataset from CSV and export the estimate.
    FitOne {
        #[arg(long, value_parser = ["mean", "covariance"])]
        task: String,
        #[arg(long, default_value = "brownian")]
        kernel: String,
        #[arg(long, default_value = "tikhonov")]
        filter: String,
        #[arg(long)]
        lambda: f64,
        /// Centering parameter for the covariance task.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional evaluated-surface export (covariance task).
        #[arg(long)]
        surface_out: Option<PathBuf>,
        #[arg(long, default_value_t = 65)]
        surface_grid: usize,
    },
    /// Check the regularization-family conditions on log grids.
    VerifyFilters {
        #[arg(long, default_value_t = 200)]
        sigma_points: usize,
        #[arg(long, default_value_t = 25)]
        lambda_points: usize,
    },
    /// Quick internal sanity battery.
    Selftest,
}

fn parse_kernel(s: &str) -> Result<Kernel1> {
    if s == "brownian" {
        return Ok(Kernel1::BrownianMin);
    }
    if let Some(v) = s.strip_prefix("gaussian:") {
        return Ok(Kernel1::gaussian(v.parse()?)?);
    }
    if let Some(v) = s.strip_prefix("matern:") {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 2 {
            bail!("matern kernel needs matern:<smoothness>:<lengthscale>");
        }
        return Ok(Kernel1::matern(parts[0].parse()?, parts[1].parse()?)?);
    }
    bail!("bad kernel {s:?}")
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run() -> Result<bool> {
    // dense kernels run sequentially; replication-level parallelism is
    // governed by RATE_LAB_THREADS
    specfda::set_compute_threads(1);
    let cli = Cli::parse();
    match cli.command {
        Command::RunRate { config, out } => {
            let cfg = load_config(&config)?;
            let report = runner::run_rate(&cfg)?;
            report.write_to(&out)?;
            println!(
                "slope {:+.4} vs target {:+.4} (tol {:.3}) r^2 {:.4} -> {}",
                report.fit.slope,
                report.target_exponent.unwrap_or(f64::NAN),
                report.tolerance,
                report.fit.r_squared,
                if report.pass == Some(true) { "PASS" } else { "FAIL" }
            );
            Ok(report.pass != Some(false))
        }
        Command::PhaseScan { config, out } => {
            let cfg = load_config(&config)?;
            let report = runner::phase_scan(&cfg)?;
            report.write_to(&out)?;
            for row in &report.rows {
                println!(
                    "gamma {:.3} ({}): slope {:+.4} vs target {:+.4} -> {}",
                    row.gamma,
                    if row.parametric_regime {
                        "parametric"
                    } else {
                        "nonparametric"
                    },
                    row.fit.slope,
                    row.target_exponent,
                    if row.pass { "PASS" } else { "FAIL" }
                );
            }
            Ok(report.pass)
        }
        Command::Saturation { config, out } => {
            let cfg = load_config(&config)?;
            let report = runner::saturation_compare(&cfg)?;
            report.write_to(&out)?;
            println!(
                "cutoff slope {:+.4} vs tikhonov slope {:+.4}; win fraction {:.3} -> {}",
                report.cutoff.fit.slope,
                report.tikhonov.fit.slope,
                report.win_fraction,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::FitOne {
            task,
            kernel,
            filter,
            lambda,
            eta,
            data,
            out,
            surface_out,
            surface_grid,
        } => {
            let kernel = parse_kernel(&kernel)?;
            let filter = Filter::from_name(&filter)?;
            let samples = io::read_sample_csv(&data)?;
            match task.as_str() {
                "mean" => {
                    let (est, diag) = fit_mean(&samples, &kernel, filter, lambda)?;
                    io::write_mean_estimate_csv(&out, &est)?;
                    println!(
                        "fitted {} anchors; weighted SSE {:.6e}; effective dimension {:.3}",
                        est.anchors().len(),
                        diag.weighted_sse,
                        diag.effective_dimension
                    );
                }
                "covariance" => {
                    let eta = eta.unwrap_or(lambda);
                    let (mean_est, _) = fit_mean(&samples, &kernel, filter, eta)?;
                    let est = specfda::covariance::fit_covariance(
                        &samples,
                        &mean_est,
                        &Kernel2::product(kernel),
                        filter,
                        lambda,
                    )?;
                    io::write_cov_estimate_csv(&out, &est)?;
                    if let Some(surface_path) = surface_out {
                        let grid = Grid1D::uniform(surface_grid)?;
                        io::write_cov_surface_csv(&surface_path, &est, &grid)?;
                    }
                    println!("fitted {} pair anchors", est.anchors().len());
                }
                other => bail!("unknown task {other:?}"),
            }
            Ok(true)
        }
        Command::VerifyFilters {
            sigma_points,
            lambda_points,
        } => {
            let sigmas = log_grid(1e-6, 1.0, sigma_points);
            let lambdas = log_grid(1e-6, 1.0, lambda_points);
            let reports: Vec<_> = ALL_FILTERS
                .iter()
                .map(|&f| verify_family(f, &lambdas, &sigmas, &[0.5, 1.0, 2.0]))
                .collect::<specfda::Result<_>>()?;
            print!("{}", filter_report_text(&reports));
            Ok(reports.iter().all(|r| r.pass()))
        }
        Command::Selftest => selftest(),
    }
}

fn selftest() -> Result<bool> {
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("{}  {name}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    // family conditions on a coarse grid
    let sigmas = log_grid(1e-6, 1.0, 50);
    let lambdas = log_grid(1e-6, 1.0, 10);
    for f in ALL_FILTERS {
        let r = verify_family(f, &lambdas, &sigmas, &[1.0])?;
        check(&format!("filter conditions: {}", f.name()), r.pass());
    }

    // single-point fit hand value
    let samples = specfda::mean::SampleSet::new(vec![specfda::mean::Curve::new(
        vec![0.5],
        vec![2.0],
    )?])?;
    let (est, _) = fit_mean(&samples, &Kernel1::BrownianMin, Filter::Tikhonov, 0.75)?;
    check(
        "single-point Tikhonov fit",
        (est.evaluate(0.5) - 0.5).abs() < 1e-12,
    );

    // seeded draws reproduce bit for bit
    let grid = Grid1D::uniform(129)?;
    let mercer = std::sync::Arc::new(specfda::kernel::mercer_system(
        &Kernel1::BrownianMin,
        40,
        &grid,
    )?);
    let sm = specfda::synth::make_source_mean(mercer, 0.5, specfda::synth::HRule::FixedUnit)?;
    let spec = specfda::synth::make_process(
        sm,
        specfda::synth::XiRule::Polynomial { decay: 2.0 },
        20,
        0.5,
        specfda::synth::MScheme::Constant,
    )?;
    let d1 = specfda::synth::draw(&spec, 4, 3.0, 7)?;
    let d2 = specfda::synth::draw(&spec, 4, 3.0, 7)?;
    check("seeded draws are reproducible", d1.samples == d2.samples);

    Ok(ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
