//! `encrep`: key rates, thresholds, sweeps and costs of the encoded repeater.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{load_config_file, Layer, Layers, RunConfig};

const AFTER_HELP: &str = "\
Model constants: M = 6 memories per half node; fiber attenuation alpha = 0.17 dB/km \
and signal speed c = 2e5 km/s unless overridden.

Configuration precedence: command-line flags > --paper-fig8-defaults preset > \
key = value config file (--config or REPEATER_KEYRATE_CONFIG) > built-in defaults. \
Config keys are the long flag names without the leading dashes, e.g. `max-nesting = 6`.";

#[derive(Parser, Debug)]
#[command(name = "encrep", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Key rate at one parameter point, printed as key=value lines.
    Keyrate,
    /// Minimal gate quality and source fidelity per station count.
    Threshold {
        /// Station counts r = 2^N - 1 [default: 1 3 7 15 31 63 127]
        #[arg(value_name = "R")]
        stations: Vec<u64>,
    },
    /// CSV scan over distance or over (F0, pG).
    Sweep {
        #[arg(value_enum, default_value_t = SweepKind::Distance)]
        kind: SweepKind,
    },
    /// Memory cost coefficient C and C' = C/L over the distance grid.
    Cost,
    /// Counts of correctable error patterns.
    EnumerateErrors {
        /// Also list the admissible combinations.
        #[arg(long)]
        list: bool,
    },
    /// Runs the model's consistency checks; exit code 0 iff all pass.
    Validate,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepKind {
    /// Rows over --distance-min..--distance-max.
    Distance,
    /// Rows over the F0 x pG grid at --distance.
    Surface,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExponentArg {
    /// r = 2^N - 1 swaps.
    Stations,
    /// N swaps.
    NestingLevel,
}

#[derive(Args, Debug, Default)]
struct Params {
    /// Key = value configuration file
    #[arg(long, global = true, env = "REPEATER_KEYRATE_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Total distance L in km [default: 600]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "KM")]
    distance: Option<f64>,

    /// Source fidelity F0 [default: 0.995]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "F0")]
    fidelity: Option<f64>,

    /// Gate quality pG = 1 - beta [default: 0.998]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "PG", conflicts_with = "beta")]
    gate_quality: Option<f64>,

    /// Gate error beta; alternative to --gate-quality
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,

    /// Fixed nesting level N [default: optimize]
    #[arg(long, global = true, conflicts_with_all = ["stations", "optimize"])]
    nesting: Option<u32>,

    /// Fixed station count r = 2^N - 1
    #[arg(long, global = true, conflicts_with = "optimize")]
    stations: Option<u64>,

    /// Maximize the key rate over --min-nesting..=--max-nesting [default when no N is fixed]
    #[arg(long, global = true)]
    optimize: bool,

    /// Smallest nesting level considered [default: 1]
    #[arg(long, global = true, value_name = "N")]
    min_nesting: Option<u32>,

    /// Largest nesting level considered [default: 10]
    #[arg(long, global = true, value_name = "N")]
    max_nesting: Option<u32>,

    /// Fiber attenuation in dB/km [default: 0.17]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "DB_PER_KM")]
    alpha: Option<f64>,

    /// Signal speed in fiber in km/s [default: 2e5]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "KM_PER_S")]
    speed: Option<f64>,

    /// Fixed attempt time T0 in seconds, or `physical` for T0 = L0/c [default: physical]
    #[arg(long, global = true, value_name = "SECONDS")]
    t0: Option<String>,

    /// Swap count entering the success probability and final state [default: stations]
    #[arg(long, global = true, value_enum)]
    swap_exponent: Option<ExponentArg>,

    /// Cost-study preset: F0 = 0.99995, pG = 0.9999, T0 = 1 (explicit flags still win)
    #[arg(long, global = true)]
    paper_fig8_defaults: bool,

    /// Write CSV here instead of stdout (keyrate: an extra one-row CSV)
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Monte Carlo seed [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials [default: 1000000]
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Distance grid start in km [default: 100]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "KM")]
    distance_min: Option<f64>,

    /// Distance grid end in km [default: 2000]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "KM")]
    distance_max: Option<f64>,

    /// Distance grid step in km [default: 100]
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "KM")]
    distance_step: Option<f64>,

    /// Fidelity grid start [default: 0.95]
    #[arg(long, global = true, allow_negative_numbers = true)]
    fidelity_min: Option<f64>,

    /// Fidelity grid end [default: 1]
    #[arg(long, global = true, allow_negative_numbers = true)]
    fidelity_max: Option<f64>,

    /// Fidelity grid step [default: 0.005]
    #[arg(long, global = true, allow_negative_numbers = true)]
    fidelity_step: Option<f64>,

    /// Gate-quality grid start [default: 0.98]
    #[arg(long, global = true, allow_negative_numbers = true)]
    gate_quality_min: Option<f64>,

    /// Gate-quality grid end [default: 1]
    #[arg(long, global = true, allow_negative_numbers = true)]
    gate_quality_max: Option<f64>,

    /// Gate-quality grid step [default: 0.002]
    #[arg(long, global = true, allow_negative_numbers = true)]
    gate_quality_step: Option<f64>,
}

impl Params {
    fn layer(&self) -> Layer {
        let mut l = Layer::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                l.insert(k.to_string(), v);
            }
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        put("distance", s(self.distance));
        put("fidelity", s(self.fidelity));
        put("gate-quality", s(self.gate_quality));
        put("beta", s(self.beta));
        put("nesting", self.nesting.map(|x| x.to_string()));
        put("stations", self.stations.map(|x| x.to_string()));
        put("optimize", self.optimize.then(|| "true".into()));
        put("min-nesting", self.min_nesting.map(|x| x.to_string()));
        put("max-nesting", self.max_nesting.map(|x| x.to_string()));
        put("alpha", s(self.alpha));
        put("speed", s(self.speed));
        put("t0", self.t0.clone());
        put(
            "swap-exponent",
            self.swap_exponent.map(|e| match e {
                ExponentArg::Stations => "stations".into(),
                ExponentArg::NestingLevel => "nesting-level".into(),
            }),
        );
        put("paper-fig8-defaults", self.paper_fig8_defaults.then(|| "true".into()));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("trials", self.trials.map(|x| x.to_string()));
        put("distance-min", s(self.distance_min));
        put("distance-max", s(self.distance_max));
        put("distance-step", s(self.distance_step));
        put("fidelity-min", s(self.fidelity_min));
        put("fidelity-max", s(self.fidelity_max));
        put("fidelity-step", s(self.fidelity_step));
        put("gate-quality-min", s(self.gate_quality_min));
        put("gate-quality-max", s(self.gate_quality_max));
        put("gate-quality-step", s(self.gate_quality_step));
        l
    }
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.params.config {
        Some(p) => Some((p.clone(), load_config_file(p)?)),
        None => None,
    };
    let cfg = RunConfig::resolve(&Layers::new(cli.params.layer(), file)?)?;
    match cli.command {
        Command::Keyrate => commands::keyrate(&cfg)?,
        Command::Threshold { stations } => commands::threshold(&cfg, &stations)?,
        Command::Sweep { kind: SweepKind::Distance } => commands::sweep_distance(&cfg)?,
        Command::Sweep { kind: SweepKind::Surface } => commands::sweep_surface(&cfg)?,
        Command::Cost => commands::cost(&cfg)?,
        Command::EnumerateErrors { list } => commands::enumerate_errors(list)?,
        Command::Validate => return commands::validate(&cfg),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
