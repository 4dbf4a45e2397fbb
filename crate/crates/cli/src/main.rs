//! `deconv-adapt`: simulate the stable-noise convolution model, select the
//! noise index, estimate densities and quadratic functionals, test
//! goodness of fit, and reproduce the bundled replication study.
//!
//! Exit codes: 0 on success, 1 for usage/configuration errors, 2 for
//! numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deconv_core::config::{parse_experiment_config, signal_by_name};
use deconv_core::deconv::{
    estimate_density, quad_functional, BandwidthSpec, BandwidthVariant, QuadratureSpec,
};
use deconv_core::gof::{calibrate_c_star, run_test, GofConfig, NullSpec};
use deconv_core::harness::{emit_report, run_experiment, run_offgrid_probe, ExperimentConfig};
use deconv_core::models::{simulate_observations, NoiseModel, Sample, SignalModel};
use deconv_core::selector::{
    grid_spacing_check, select_index, EvalPoints, Grid, SelectorConfig,
};
use deconv_core::Error;

#[derive(Parser)]
#[command(name = "deconv-adapt", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw observations Y = X + noise and write them one per line.
    Simulate(SimulateArgs),
    /// Select the noise self-similarity index from a sample file.
    Select(SelectArgs),
    /// Estimate the signal density on a grid of points.
    Density(DensityArgs),
    /// Estimate the quadratic functional of the signal density.
    Quadfun(QuadfunArgs),
    /// Goodness-of-fit test of a named null density.
    Gof(GofArgs),
    /// Run the replication study and write its CSV report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Signal family: laplace5 | gamma.
    #[arg(long)]
    signal: String,
    /// Multiplier applied to the signal variable.
    #[arg(long, default_value_t = 0.1)]
    pre_scale: f64,
    /// Noise self-similarity index in (0, 2].
    #[arg(long)]
    s: f64,
    /// Noise scale γ.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SelectorArgs {
    /// Grid of candidate indices, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 1.5, 2.0])]
    grid: Vec<f64>,
    /// Explicit evaluation points, one per grid value.
    #[arg(long, value_delimiter = ',', conflicts_with = "delta")]
    points: Option<Vec<f64>>,
    /// Formula-mode δ (points derived from the sample size).
    #[arg(long)]
    delta: Option<f64>,
    /// Envelope amplitude A.
    #[arg(long, default_value_t = deconv_core::selector::DEFAULT_ENVELOPE_A)]
    envelope_a: f64,
    /// Envelope exponent β'.
    #[arg(long, default_value_t = deconv_core::selector::DEFAULT_ENVELOPE_BETA_PRIME)]
    envelope_beta_prime: f64,
    /// Grid-spacing constant for the diagnostic check.
    #[arg(long, default_value_t = 2.5)]
    spacing_c: f64,
}

impl SelectorArgs {
    fn build(&self) -> Result<SelectorConfig, Error> {
        let grid = Grid::new(self.grid.clone())?;
        let eval_points = match (&self.points, self.delta) {
            (Some(p), None) => EvalPoints::Explicit(p.clone()),
            (None, Some(d)) => EvalPoints::Formula { delta: d },
            (None, None) => {
                if grid.values() == [0.5, 1.0, 1.5, 2.0] {
                    EvalPoints::Explicit(vec![2.5, 1.7, 1.5, 1.45])
                } else {
                    return Err(Error::InvalidConfig(
                        "custom grid needs --points or --delta".into(),
                    ));
                }
            }
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        let mut config =
            SelectorConfig::new(grid, self.envelope_a, self.envelope_beta_prime, eval_points)?;
        config.spacing_c = self.spacing_c;
        Ok(config)
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Sample file, one value per line.
    #[arg(long)]
    input: PathBuf,
    /// Known noise scale γ; observations are divided by it before selection.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    #[command(flatten)]
    selector: SelectorArgs,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    input: PathBuf,
    /// Skip selection and use this index.
    #[arg(long)]
    s_hat: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta_bar: f64,
    #[arg(long, default_value_t = 0.6)]
    beta_lower: f64,
    #[arg(long, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 101)]
    x_count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    selector: SelectorArgs,
}

#[derive(Args)]
struct QuadfunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s_hat: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta_bar: f64,
    #[arg(long, default_value_t = 0.6)]
    beta_lower: f64,
    #[command(flatten)]
    selector: SelectorArgs,
}

#[derive(Args)]
struct GofArgs {
    #[arg(long)]
    input: PathBuf,
    /// Null density: laplace5 | gamma | shifted:<offset> (shifted laplace5).
    #[arg(long)]
    null: String,
    #[arg(long, default_value_t = 0.1)]
    pre_scale: f64,
    /// Decision constant; calibrated under the null when omitted.
    #[arg(long)]
    c_star: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    calibrate_level: f64,
    #[arg(long, default_value_t = 200)]
    calibrate_reps: usize,
    #[arg(long, default_value_t = 7)]
    calibrate_seed: u64,
    #[arg(long, default_value_t = 0.5)]
    beta_bar: f64,
    #[arg(long, default_value_t = 0.25)]
    beta_lower: f64,
    #[command(flatten)]
    selector: SelectorArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Configuration file; see the README for the grammar.
    #[arg(long, conflicts_with = "default")]
    config: Option<PathBuf>,
    /// Run the bundled default protocol.
    #[arg(long)]
    default: bool,
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Instead of the replication tables, probe one (possibly off-grid)
    /// true index and report the histogram of selected values.
    #[arg(long)]
    offgrid: Option<f64>,
}

fn null_by_name(name: &str, pre_scale: f64) -> Result<(NullSpec, SignalModel), Error> {
    if let Some(offset) = name.strip_prefix("shifted:") {
        let offset: f64 = offset
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad shift offset {offset:?}")))?;
        let base = SignalModel::laplace5(pre_scale)?;
        return Ok((NullSpec::from_signal_shifted(&base, offset), base));
    }
    let spec = signal_by_name(name, pre_scale)?;
    Ok((NullSpec::from_signal(&spec.model), spec.model))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => {
            let signal = signal_by_name(&args.signal, args.pre_scale)?.model;
            let noise = NoiseModel::new(args.s, args.noise_scale)?;
            let sample = simulate_observations(&signal, &noise, args.n, args.seed)?;
            match args.out {
                Some(path) => sample.write_to(&path)?,
                None => {
                    for v in sample.values() {
                        println!("{v}");
                    }
                }
            }
        }
        Command::Select(args) => {
            let config = args.selector.build()?;
            let mut sample = Sample::read_from(&args.input)?;
            if args.noise_scale != 1.0 {
                sample = sample.scaled_by(1.0 / args.noise_scale)?;
            }
            let check = grid_spacing_check(&config.grid, sample.len(), config.spacing_c);
            if !check.pass() {
                eprintln!(
                    "warning: grid spacing check failed (min spacing {:?} vs d_n = {:.4})",
                    check.min_spacing, check.d_n
                );
            }
            let res = select_index(&sample, &config)?;
            println!("s_hat,fallback,selected_indices");
            let idxs: Vec<String> = res.selected_set.iter().map(|k| k.to_string()).collect();
            println!("{},{},{}", res.s_hat, res.fallback_used, idxs.join("|"));
            println!();
            println!("index,grid_value,eval_point,ecf_modulus,lower_midpoint,upper_midpoint,selected");
            for d in &res.diagnostics {
                println!(
                    "{},{},{},{},{},{},{}",
                    d.index,
                    d.grid_value,
                    d.eval_point,
                    d.ecf_modulus,
                    d.lower_midpoint,
                    d.upper_midpoint,
                    d.selected
                );
            }
        }
        Command::Density(args) => {
            let sample = Sample::read_from(&args.input)?;
            let s_hat = match args.s_hat {
                Some(s) => s,
                None => select_index(&sample, &args.selector.build()?)?.s_hat,
            };
            let spec = BandwidthSpec::new(BandwidthVariant::Density, args.beta_bar, args.beta_lower)?;
            if args.x_count < 2 || !(args.x_max > args.x_min) {
                return Err(Error::InvalidConfig("need x_max > x_min and x_count >= 2".into()));
            }
            let step = (args.x_max - args.x_min) / (args.x_count - 1) as f64;
            let xs: Vec<f64> = (0..args.x_count).map(|i| args.x_min + i as f64 * step).collect();
            let est = estimate_density(&sample, s_hat, &spec, &QuadratureSpec::default(), &xs)?;
            let mut lines = format!("# s_hat = {}, h = {}\nx,density\n", est.s, est.h);
            for (x, f) in &est.points {
                lines.push_str(&format!("{x},{f}\n"));
            }
            match args.out {
                Some(path) => std::fs::write(&path, lines)
                    .map_err(|source| Error::Io { path, source })?,
                None => print!("{lines}"),
            }
        }
        Command::Quadfun(args) => {
            let sample = Sample::read_from(&args.input)?;
            let s_hat = match args.s_hat {
                Some(s) => s,
                None => select_index(&sample, &args.selector.build()?)?.s_hat,
            };
            let spec = BandwidthSpec::new(BandwidthVariant::Density, args.beta_bar, args.beta_lower)?;
            let qf = quad_functional(&sample, s_hat, &spec, &QuadratureSpec::default())?;
            println!("t_hat,h,s_hat,n");
            println!("{},{},{},{}", qf.value, qf.h, qf.s, qf.n);
        }
        Command::Gof(args) => {
            let sample = Sample::read_from(&args.input)?;
            let (null, f0_signal) = null_by_name(&args.null, args.pre_scale)?;
            let selector = args.selector.build()?;
            let bandwidth =
                BandwidthSpec::new(BandwidthVariant::Test, args.beta_bar, args.beta_lower)?;
            let quad = QuadratureSpec::default();
            let c_star = match args.c_star {
                Some(c) => c,
                None => {
                    // condition the null simulation on the selected index
                    let s_hat = select_index(&sample, &selector)?.s_hat;
                    let noise = NoiseModel::new(s_hat, 1.0)?;
                    let c = calibrate_c_star(
                        &f0_signal,
                        &noise,
                        &selector,
                        &bandwidth,
                        &quad,
                        sample.len(),
                        args.calibrate_level,
                        args.calibrate_reps,
                        args.calibrate_seed,
                    )?;
                    eprintln!(
                        "calibrated c_star = {c} (level {}, {} replications)",
                        args.calibrate_level, args.calibrate_reps
                    );
                    c
                }
            };
            let config = GofConfig { selector, bandwidth, quad, c_star };
            let outcome = run_test(&sample, &null, &config)?;
            println!("statistic,threshold_sq,c_star,reject,s_hat,h");
            println!(
                "{},{},{},{},{},{}",
                outcome.statistic,
                outcome.threshold_sq,
                outcome.c_star,
                outcome.reject,
                outcome.s_hat,
                outcome.h
            );
        }
        Command::Experiment(args) => {
            let config = match (&args.config, args.default) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|source| Error::Io { path: path.clone(), source })?;
                    parse_experiment_config(&text)?
                }
                (None, _) => ExperimentConfig::study_default(),
            };
            if let Some(true_s) = args.offgrid {
                let probe = run_offgrid_probe(&config, true_s)?;
                println!("grid_value,count");
                for (g, c) in &probe.counts {
                    println!("{g},{c}");
                }
                println!(
                    "# modal value {} with share {:.1}% over {} replications (fallbacks: {})",
                    probe.modal_value,
                    100.0 * probe.modal_share(),
                    probe.m,
                    probe.fallback_count
                );
                return Ok(());
            }
            let report = run_experiment(&config)?;
            for cell in &report.cells {
                if let Some(err) = &cell.error {
                    eprintln!(
                        "warning: cell ({}, s = {}, n = {}) failed: {err}",
                        cell.signal_id, cell.s, cell.n
                    );
                }
            }
            emit_report(&report, &args.out)?;
            eprintln!("wrote {} cells to {}", report.cells.len(), args.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, everything else is usage error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
