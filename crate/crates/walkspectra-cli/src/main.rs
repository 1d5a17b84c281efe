use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;
use walkspectra_cli::config::parse_config;
use walkspectra_cli::report::{series_csv, UnitaritySection};
use walkspectra_cli::run::{run, Command, RunOptions};
use walkspectra_cli::CliError;

#[derive(Parser)]
#[command(
    name = "walkspectra",
    version,
    about = "Spectra, localization checks, and simulation for periodic lattice walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the unitarity relations of the configured coins
    Validate(CommonArgs),
    /// Detect, certify, and peel constant eigenvalues; report band data
    Spectrum(CommonArgs),
    /// Emit the return-probability series p_n at the probe sites
    Evolve(CommonArgs),
    /// Cesàro averages along a horizon ladder next to the prediction
    Average(CommonArgs),
    /// Sup and trend of p_n over the window [horizon/2, horizon]
    Decay(CommonArgs),
    /// Coarea density of the continuous spectral part (dimension 1)
    Density(CommonArgs),
    /// Every section applicable to the config in one document
    Report(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the config document (JSON, schema version 1)
    #[arg(long)]
    config: PathBuf,
    /// Probe site as comma-separated coordinates; repeat for several
    #[arg(long = "site")]
    sites: Vec<String>,
    /// Grid points per torus axis (overrides the config)
    #[arg(long = "grid")]
    grid_n: Option<usize>,
    /// Evolution horizon (overrides the config)
    #[arg(long)]
    horizon: Option<usize>,
    /// Directory for report.json and series.csv next to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_site(text: &str) -> Result<Vec<i64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Config(format!("bad --site coordinate \"{part}\"")))
        })
        .collect()
}

fn execute(command: Command, args: &CommonArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let cfg = parse_config(&text)?;
    let sites = args
        .sites
        .iter()
        .map(|s| parse_site(s))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = RunOptions {
        sites,
        grid_n: args.grid_n,
        horizon: args.horizon,
    };
    let report = run(command, &cfg, &opts)?;
    let json = report.to_json();
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join("report.json");
        fs::write(&path, format!("{json}\n"))
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        if let Some(series) = &report.evolution {
            let path = dir.join("series.csv");
            fs::write(&path, series_csv(series))
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(json)
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Average(a) => (Command::Average, a),
        Cmd::Decay(a) => (Command::Decay, a),
        Cmd::Density(a) => (Command::Density, a),
        Cmd::Report(a) => (Command::Report, a),
    };
    match execute(command, args) {
        Ok(json) => println!("{json}"),
        Err(err) => {
            // a failed unitarity gate still emits its residual report
            if let CliError::NotUnitary { report, tol } = &err {
                let section = UnitaritySection::new(report, *tol);
                if let Ok(body) = serde_json::to_string_pretty(&section) {
                    println!("{body}");
                }
            }
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}
