use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use serde::Serialize;
use serde_json::Value;

use qew::cli::{self, figure_preset, Format, Parameters, RunConfig, Subcommand};
use qew::Error;

#[derive(Parser)]
#[command(
    name = "qew",
    version,
    about = "Free-electron / cavity-photon amplitudes and fiber coupling"
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Write to this file instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Energy loss into an empty cavity
    Eels(EelsArgs),
    /// Interaction with a coherent-state field
    Pinem(PinemArgs),
    /// Two electrons through a shared mode
    TwoElectron(TwoElectronArgs),
    /// Exact electron spectrum next to the Bessel limit
    ClassicalLimit(ClassicalArgs),
    /// Closed forms against the truncated-Fock matrix exponential
    OracleCheck(OracleArgs),
    /// Electron velocity, dispersion distance and deflection
    Kinematics(KinematicsArgs),
    /// HE11 fiber mode and coupling
    Fiber {
        #[command(subcommand)]
        action: FiberAction,
    },
    #[command(hide = true)]
    FiberSolve(FiberSolveArgs),
    #[command(hide = true)]
    FiberSweep(FiberSweepArgs),
    /// Print a named preset config as JSON
    Preset { name: String },
    /// Run a JSON config file or a named preset
    Run {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
}

#[derive(ClapSubcommand)]
enum FiberAction {
    /// One diameter
    Solve(FiberSolveArgs),
    /// A range or list of diameters
    Sweep(FiberSweepArgs),
}

#[derive(Args, Serialize)]
struct EelsArgs {
    #[arg(long)]
    alpha_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_phase: Option<f64>,
    #[arg(long)]
    k_max: Option<i64>,
}

#[derive(Args, Serialize)]
struct PinemArgs {
    /// Comma-separated or repeated; one grid each
    #[arg(long, value_delimiter = ',')]
    alpha_mag: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_phase: Option<f64>,
    #[arg(long)]
    beta_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_phase: Option<f64>,
    /// Photon range `a..b`
    #[arg(long, allow_hyphen_values = true)]
    n_range: Option<String>,
    /// Electron range `a..b`
    #[arg(long, allow_hyphen_values = true)]
    k_range: Option<String>,
    /// Start from a preset (`figure` or a preset name)
    #[arg(long)]
    #[serde(skip)]
    preset: Option<String>,
}

#[derive(Args, Serialize)]
struct TwoElectronArgs {
    #[arg(long, value_delimiter = ',')]
    alpha1_mag: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha2_mag: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    alpha1_phase: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha2_phase: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_range: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    k_range: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    preset: Option<String>,
}

#[derive(Args, Serialize)]
struct ClassicalArgs {
    #[arg(long)]
    alpha_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_phase: Option<f64>,
    #[arg(long)]
    beta_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_phase: Option<f64>,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    /// eels, pinem or two-electron
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    alpha_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_phase: Option<f64>,
    #[arg(long)]
    beta_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_phase: Option<f64>,
    #[arg(long)]
    alpha1_mag: Option<f64>,
    #[arg(long)]
    alpha2_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha1_phase: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha2_phase: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Serialize)]
struct KinematicsArgs {
    #[arg(long)]
    kinetic_kev: Option<f64>,
    #[arg(long)]
    bandwidth_ev: Option<f64>,
    /// half_width or full_width
    #[arg(long)]
    bandwidth_convention: Option<String>,
    #[arg(long)]
    alpha_mag: Option<f64>,
    #[arg(long)]
    photon_energy_ev: Option<f64>,
    #[arg(long)]
    length_um: Option<f64>,
}

#[derive(Args, Serialize)]
struct FiberSolveArgs {
    #[arg(long)]
    wavelength_nm: Option<f64>,
    #[arg(long)]
    core_index: Option<f64>,
    #[arg(long)]
    clad_index: Option<f64>,
    #[arg(long)]
    diameter_nm: Option<f64>,
    #[arg(long)]
    length_um: Option<f64>,
    /// explicit or uniform
    #[arg(long)]
    angular: Option<String>,
    #[arg(long)]
    standing_wave: Option<bool>,
}

#[derive(Args, Serialize)]
struct FiberSweepArgs {
    #[arg(long)]
    wavelength_nm: Option<f64>,
    #[arg(long)]
    core_index: Option<f64>,
    #[arg(long)]
    clad_index: Option<f64>,
    #[arg(long)]
    length_um: Option<f64>,
    #[arg(long)]
    angular: Option<String>,
    #[arg(long)]
    standing_wave: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    diameters_nm: Option<Vec<f64>>,
    #[arg(long)]
    diameter_start_nm: Option<f64>,
    #[arg(long)]
    diameter_stop_nm: Option<f64>,
    #[arg(long)]
    diameter_step_nm: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    preset: Option<String>,
}

/// Flags that were given, as config parameters.
fn given<T: Serialize>(args: &T) -> Parameters {
    match serde_json::to_value(args).expect("args serialize") {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Parameters::new(),
    }
}

fn layered(sub: Subcommand, preset: &Option<String>, flags: Parameters) -> Result<RunConfig, Error> {
    let mut cfg = match preset.as_deref() {
        None => RunConfig::new(sub, Parameters::new()),
        Some("figure") => figure_preset(sub)?,
        Some(name) => cli::preset(name)?,
    };
    if cfg.subcommand != sub {
        return Err(Error::Config(format!(
            "preset is for {:?}, not {sub:?}",
            cfg.subcommand
        )));
    }
    cfg.parameters.extend(flags);
    Ok(cfg)
}

fn build(cli: &Cli) -> Result<Option<RunConfig>, Error> {
    let cfg = match &cli.command {
        Command::Eels(a) => RunConfig::new(Subcommand::Eels, given(a)),
        Command::Pinem(a) => layered(Subcommand::Pinem, &a.preset, given(a))?,
        Command::TwoElectron(a) => layered(Subcommand::TwoElectron, &a.preset, given(a))?,
        Command::ClassicalLimit(a) => RunConfig::new(Subcommand::ClassicalLimit, given(a)),
        Command::OracleCheck(a) => RunConfig::new(Subcommand::OracleCheck, given(a)),
        Command::Kinematics(a) => RunConfig::new(Subcommand::Kinematics, given(a)),
        Command::Fiber {
            action: FiberAction::Solve(a),
        }
        | Command::FiberSolve(a) => RunConfig::new(Subcommand::FiberSolve, given(a)),
        Command::Fiber {
            action: FiberAction::Sweep(a),
        }
        | Command::FiberSweep(a) => layered(Subcommand::FiberSweep, &a.preset, given(a))?,
        Command::Preset { name } => {
            println!("{}", serde_json::to_string_pretty(&cli::preset(name)?).expect("json"));
            return Ok(None);
        }
        Command::Run { config, preset } => match (config, preset) {
            (Some(path), _) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => cli::preset(name)?,
            (None, None) => return Err(Error::Config("run needs --config or --preset".into())),
        },
    };
    Ok(Some(cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = (|| -> Result<(), Error> {
        cli::configure_threads()?;
        let Some(mut cfg) = build(&cli)? else {
            return Ok(());
        };
        if matches!(cli.command, Command::Run { .. }) {
            // flags given explicitly still win over the file
            if cli.output.is_some() {
                cfg.output_path = cli.output.clone();
            }
            if cli.format != "csv" {
                cfg.format = cli.format.parse::<Format>()?;
            }
        } else {
            cfg.output_path = cli.output.clone();
            cfg.format = cli.format.parse::<Format>()?;
        }
        let out = cli::run(&cfg)?;
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
        let text = out.render(cfg.format);
        match &cfg.output_path {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // reader closed early (`| head`)
        Err(Error::Io(msg)) if msg.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
