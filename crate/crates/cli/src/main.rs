//! Command-line front end for the haarsde pipeline.
//!
//! Subcommands mirror the pipeline stages: `fbm` samples fractional
//! Brownian paths, `drift` builds Haar drifts from them, `mollify` smooths
//! a drift, `simulate` integrates one trajectory, `study` runs the
//! Monte-Carlo convergence experiment and `rates` prints the theoretical
//! schedule constants.
//!
//! Every run writes a `run_manifest.txt` with the resolved parameters and
//! the SHA-256 of each artifact. All randomness flows from explicit seed
//! flags; reruns with identical flags are byte-identical.

// Flag checks are written as `!(x > 0.0)` on purpose: the negation
// rejects NaN, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;

use clap::{Args, Parser, Subcommand};
use haarsde::experiment::{
    build_drift, fit_rate, hurst_rule, mc_error, supremal_q0, theoretical_rate, EtaRule,
    StudyConfig, TABLE_CSV_HEADER,
};
use haarsde::fbm::{refine_fbm, sample_fbm, Grid};
use haarsde::mollifier::{drift_eval, MollifiedDrift};
use haarsde::plot::error_curve_svg;
use haarsde::scheme::{euler_maruyama, sample_brownian_grid, SchemeConfig};
use haarsde::wavelet::HaarExpansion;
use manifest::Manifest;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "haarsde",
    about = "Euler-Maruyama convergence experiments for SDEs with Haar-wavelet drifts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputDir {
    /// Directory artifacts are written to.
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a fractional Brownian path on a dyadic grid.
    Fbm {
        /// Hurst index in (0,1).
        #[arg(long)]
        hurst: f64,
        /// Number of grid points; a power of two.
        #[arg(long)]
        points: usize,
        /// RNG seed.
        #[arg(long)]
        seed: u64,
        /// Also write the mesh-doubled refinement of the same path.
        #[arg(long)]
        refine: bool,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Build a Haar drift expansion from a fresh fractional Brownian path.
    Drift {
        /// Regularity label in [0, 1/4).
        #[arg(long)]
        beta0: f64,
        /// Truncation level of the expansion.
        #[arg(long)]
        level: u32,
        /// Seed of the drift path.
        #[arg(long)]
        drift_seed: u64,
        /// Hurst index override; defaults to the per-beta0 rule.
        #[arg(long)]
        hurst: Option<f64>,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Attach a mollification parameter to a drift expansion.
    Mollify {
        /// Drift CSV produced by `drift`.
        #[arg(long)]
        drift: PathBuf,
        /// Heat-semigroup time; strictly positive.
        #[arg(long)]
        eta: f64,
        /// Also sample the smoothed drift on a uniform grid of this many
        /// intervals over [0,1].
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Integrate one Euler-Maruyama trajectory.
    Simulate {
        /// Drift CSV; either mollified (carries `# eta=`) or plain.
        #[arg(long)]
        drift: PathBuf,
        /// Mollification override; required if the file carries none.
        #[arg(long)]
        eta: Option<f64>,
        /// Step count; a power of two.
        #[arg(long)]
        steps: usize,
        /// RNG seed for the Brownian increments.
        #[arg(long)]
        seed: u64,
        /// Time horizon.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Initial condition.
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Monte-Carlo convergence study and rate table.
    Study {
        /// Comma-separated regularity labels.
        #[arg(long, default_value = "0.0,0.05,0.1,0.15,0.2", value_delimiter = ',')]
        beta0_list: Vec<f64>,
        /// Monte-Carlo sample paths per row.
        #[arg(long, default_value_t = 200)]
        paths: usize,
        /// Proxy resolution; a power of two.
        #[arg(long, default_value_t = 512)]
        m0: usize,
        /// Comma-separated coarse step counts.
        #[arg(long, default_value = "16,32,64,128,256", value_delimiter = ',')]
        m_list: Vec<usize>,
        /// Drift truncation level.
        #[arg(long, default_value_t = 9)]
        level: u32,
        /// Seed of the Brownian noise streams.
        #[arg(long, default_value_t = 1)]
        master_seed: u64,
        /// Seed of the quenched drift path.
        #[arg(long, default_value_t = 2)]
        drift_seed: u64,
        /// Fixed mollification parameter; default is the m^(-theta*) rule.
        #[arg(long)]
        eta: Option<f64>,
        /// Hurst override applied to every row.
        #[arg(long)]
        hurst: Option<f64>,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Print the theoretical rate-schedule constants.
    Rates {
        /// Single regularity label.
        #[arg(long, conflicts_with = "beta0_list")]
        beta0: Option<f64>,
        /// Comma-separated regularity labels.
        #[arg(long, value_delimiter = ',')]
        beta0_list: Option<Vec<f64>>,
        /// Integrability index; `inf` or omitted for the supremal 1/beta0.
        #[arg(long)]
        q0: Option<f64>,
        #[command(flatten)]
        out: OutputDir,
    },
}

enum CliError {
    /// Bad flag values; exit status 2.
    Usage(String),
    /// Numerical or I/O failure at run time; exit status 1.
    Runtime(String),
}

impl From<haarsde::Error> for CliError {
    fn from(err: haarsde::Error) -> Self {
        match err {
            // Parameter errors surface bad flag values.
            haarsde::Error::Parameter(_) => CliError::Usage(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fbm {
            hurst,
            points,
            seed,
            refine,
            out,
        } => cmd_fbm(hurst, points, seed, refine, &out.output_dir),
        Command::Drift {
            beta0,
            level,
            drift_seed,
            hurst,
            out,
        } => cmd_drift(beta0, level, drift_seed, hurst, &out.output_dir),
        Command::Mollify {
            drift,
            eta,
            grid,
            out,
        } => cmd_mollify(&drift, eta, grid, &out.output_dir),
        Command::Simulate {
            drift,
            eta,
            steps,
            seed,
            horizon,
            x0,
            out,
        } => cmd_simulate(&drift, eta, steps, seed, horizon, x0, &out.output_dir),
        Command::Study {
            beta0_list,
            paths,
            m0,
            m_list,
            level,
            master_seed,
            drift_seed,
            eta,
            hurst,
            out,
        } => cmd_study(
            &beta0_list,
            paths,
            m0,
            &m_list,
            level,
            master_seed,
            drift_seed,
            eta,
            hurst,
            &out.output_dir,
        ),
        Command::Rates {
            beta0,
            beta0_list,
            q0,
            out,
        } => cmd_rates(beta0, beta0_list, q0, &out.output_dir),
    }
}

fn cmd_fbm(hurst: f64, points: usize, seed: u64, refine: bool, dir: &Path) -> Result<(), CliError> {
    if points == 0 || !points.is_power_of_two() {
        return Err(CliError::Usage(format!(
            "--points must be a power of two, got {points}"
        )));
    }
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(CliError::Usage(format!(
            "--hurst must lie in (0,1), got {hurst}"
        )));
    }
    let mut manifest = Manifest::new("fbm", dir)?;
    manifest.record("hurst", hurst);
    manifest.record("points", points);
    manifest.record("seed", seed);
    manifest.record("refine", refine);

    let grid = Grid::dyadic(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = sample_fbm(&grid, hurst, &mut rng)?;
    manifest.write_artifact("fbm.csv", &path.to_csv())?;
    if refine {
        let refined = refine_fbm(&path, &mut rng)?;
        manifest.write_artifact("fbm_refined.csv", &refined.to_csv())?;
    }
    manifest.finish()?;
    Ok(())
}

fn cmd_drift(
    beta0: f64,
    level: u32,
    drift_seed: u64,
    hurst: Option<f64>,
    dir: &Path,
) -> Result<(), CliError> {
    let hurst = hurst.unwrap_or_else(|| hurst_rule(beta0));
    let mut manifest = Manifest::new("drift", dir)?;
    manifest.record("beta0", beta0);
    manifest.record("level", level);
    manifest.record("drift_seed", drift_seed);
    manifest.record("hurst", hurst);

    let expansion = build_drift(beta0, hurst, level, drift_seed)?;
    manifest.write_artifact("drift.csv", &expansion.to_csv())?;

    let mut summary = format!(
        "level={}\ncoefficients={}\nh0_coeff={}\n",
        expansion.level(),
        1 + expansion.details().len(),
        expansion.scaling_coeff()
    );
    for (j, max_abs) in expansion.max_abs_detail_per_level().iter().enumerate() {
        summary.push_str(&format!("max_abs_detail_level_{j}={max_abs}\n"));
    }
    manifest.write_artifact("drift_summary.txt", &summary)?;
    manifest.finish()?;
    Ok(())
}

fn cmd_mollify(
    drift_file: &Path,
    eta: f64,
    grid: Option<usize>,
    dir: &Path,
) -> Result<(), CliError> {
    if !(eta > 0.0) {
        return Err(CliError::Usage(format!(
            "--eta must be strictly positive, got {eta}"
        )));
    }
    let mut manifest = Manifest::new("mollify", dir)?;
    manifest.record("drift", drift_file.display());
    manifest.record("eta", eta);

    let text = std::fs::read_to_string(drift_file)?;
    let expansion = HaarExpansion::from_csv(&text).map_err(runtime)?;
    let drift = MollifiedDrift::new(expansion, eta)?;
    manifest.write_artifact("mollified.csv", &drift.to_csv())?;

    if let Some(n) = grid {
        if n == 0 {
            return Err(CliError::Usage("--grid must be positive".into()));
        }
        manifest.record("grid", n);
        let mut curve = String::from("x,a\n");
        for k in 0..=n {
            let x = k as f64 / n as f64;
            curve.push_str(&format!("{x},{}\n", drift_eval(&drift, x)));
        }
        manifest.write_artifact("mollified_curve.csv", &curve)?;
    }
    manifest.finish()?;
    Ok(())
}

fn cmd_simulate(
    drift_file: &Path,
    eta: Option<f64>,
    steps: usize,
    seed: u64,
    horizon: f64,
    x0: f64,
    dir: &Path,
) -> Result<(), CliError> {
    if steps == 0 || !steps.is_power_of_two() {
        return Err(CliError::Usage(format!(
            "--steps must be a power of two, got {steps}"
        )));
    }
    if !(horizon > 0.0) {
        return Err(CliError::Usage(format!(
            "--horizon must be positive, got {horizon}"
        )));
    }
    let text = std::fs::read_to_string(drift_file)?;
    let drift = match eta {
        Some(eta) => {
            if !(eta > 0.0) {
                return Err(CliError::Usage(format!(
                    "--eta must be strictly positive, got {eta}"
                )));
            }
            MollifiedDrift::new(HaarExpansion::from_csv(&text).map_err(runtime)?, eta)?
        }
        None => MollifiedDrift::from_csv(&text).map_err(|e| {
            CliError::Runtime(format!(
                "{e}; pass --eta when the drift file carries no '# eta=' line"
            ))
        })?,
    };
    let mut manifest = Manifest::new("simulate", dir)?;
    manifest.record("drift", drift_file.display());
    manifest.record("eta", drift.eta());
    manifest.record("steps", steps);
    manifest.record("seed", seed);
    manifest.record("horizon", horizon);
    manifest.record("x0", x0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = sample_brownian_grid(horizon, steps, &mut rng)?;
    let cfg = SchemeConfig::new(horizon, x0, steps)?;
    let path = euler_maruyama(&drift, &cfg, grid.increments())?;
    manifest.write_artifact("path.csv", &path.to_csv())?;
    manifest.finish()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_study(
    beta0_list: &[f64],
    paths: usize,
    m0: usize,
    m_list: &[usize],
    level: u32,
    master_seed: u64,
    drift_seed: u64,
    eta: Option<f64>,
    hurst: Option<f64>,
    dir: &Path,
) -> Result<(), CliError> {
    if beta0_list.is_empty() {
        return Err(CliError::Usage("--beta0-list must not be empty".into()));
    }
    let eta_rule = match eta {
        Some(eta) if eta > 0.0 => EtaRule::Fixed(eta),
        Some(eta) => {
            return Err(CliError::Usage(format!(
                "--eta must be strictly positive, got {eta}"
            )))
        }
        None => EtaRule::Schedule,
    };
    let mut manifest = Manifest::new("study", dir)?;
    manifest.record("beta0_list", join(beta0_list));
    manifest.record("paths", paths);
    manifest.record("m0", m0);
    manifest.record("m_list", join(m_list));
    manifest.record("level", level);
    manifest.record("master_seed", master_seed);
    manifest.record("drift_seed", drift_seed);
    match eta_rule {
        EtaRule::Fixed(eta) => manifest.record("eta_rule", format!("fixed({eta})")),
        EtaRule::Schedule => manifest.record("eta_rule", "schedule"),
    }
    if let Some(h) = hurst {
        manifest.record("hurst_override", h);
    }

    let mut table_rows = Vec::new();
    for &beta0 in beta0_list {
        let study = StudyConfig {
            beta0,
            hurst: hurst.unwrap_or_else(|| hurst_rule(beta0)),
            level,
            m_list: m_list.to_vec(),
            m0,
            n_paths: paths,
            master_seed,
            drift_seed,
            eta_rule,
        };
        study.validate()?;
        let curve = mc_error(&study)?;
        let label = format!("{beta0}");
        manifest.write_artifact(&format!("error_curve_beta0_{label}.csv"), &curve.to_csv())?;

        let theoretical = theoretical_rate(beta0, supremal_q0(beta0))?;
        if curve.is_degenerate() {
            log::warn!("beta0 = {beta0}: degenerate error curve; no rate fit or plot");
            table_rows.push(format!(
                "{},{},NaN,{},{},{},{},{},{},{}",
                beta0,
                study.hurst,
                theoretical.predicted_rate,
                paths,
                m0,
                level,
                curve.eta(),
                master_seed,
                drift_seed
            ));
        } else {
            let fit = fit_rate(&curve)?;
            let svg = error_curve_svg(
                &curve,
                Some(&fit),
                &format!("L1 error vs steps (beta0 = {beta0})"),
            )?;
            manifest.write_artifact(&format!("error_curve_beta0_{label}.svg"), &svg)?;
            table_rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{}",
                beta0,
                study.hurst,
                -fit.slope,
                theoretical.predicted_rate,
                paths,
                m0,
                level,
                curve.eta(),
                master_seed,
                drift_seed
            ));
            println!(
                "beta0 {beta0}: empirical rate {:.4}, theoretical {:.4}",
                -fit.slope, theoretical.predicted_rate
            );
        }
        // Flush the table after every row so an interrupt loses at most
        // the row in flight.
        let table = format!("{TABLE_CSV_HEADER}\n{}\n", table_rows.join("\n"));
        manifest.write_artifact("table.csv", &table)?;
    }
    manifest.finish()?;
    Ok(())
}

fn cmd_rates(
    beta0: Option<f64>,
    beta0_list: Option<Vec<f64>>,
    q0: Option<f64>,
    dir: &Path,
) -> Result<(), CliError> {
    let list = match (beta0, beta0_list) {
        (Some(b), None) => vec![b],
        (None, Some(l)) if !l.is_empty() => l,
        (None, None) => vec![0.0, 0.05, 0.1, 0.15, 0.2],
        _ => {
            return Err(CliError::Usage(
                "pass --beta0 or a non-empty --beta0-list".into(),
            ))
        }
    };
    let mut manifest = Manifest::new("rates", dir)?;
    manifest.record("beta0_list", join(&list));
    manifest.record(
        "q0",
        q0.map_or_else(|| "supremal".to_string(), |v| format!("{v}")),
    );

    let mut csv = String::from("beta0,q0,gamma0,theta_star,predicted_rate\n");
    println!("beta0      q0   gamma0  theta*    rate");
    for &b in &list {
        let params = theoretical_rate(b, q0.unwrap_or_else(|| supremal_q0(b)))?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            params.beta0, params.q0, params.gamma0, params.theta_star, params.predicted_rate
        ));
        println!(
            "{:<6} {:>7.3} {:>7.4} {:>7.4} {:>7.4}",
            params.beta0, params.q0, params.gamma0, params.theta_star, params.predicted_rate
        );
    }
    manifest.write_artifact("rates.csv", &csv)?;
    manifest.finish()?;
    Ok(())
}

fn runtime(err: haarsde::Error) -> CliError {
    CliError::Runtime(err.to_string())
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
