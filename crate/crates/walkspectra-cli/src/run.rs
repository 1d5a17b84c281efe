//! Command dispatch: each subcommand assembles its report sections from
//! the library calls, with shared provenance.

use crate::config::{resolve, WalkConfig};
use crate::report::{
    AverageSection, DecaySection, DensitySection, Provenance, RunReport, SeriesSection,
    SpectralSection, UnitaritySection,
};
use crate::CliError;
use walkspectra::lab::density::{spectral_density_1d, DensityOptions};
use walkspectra::lab::{cesaro_average, decay_check, site_probabilities};
use walkspectra::spectra::{peel_point_spectrum_on, DETECT_GRID_N};

pub const DEFAULT_HORIZON: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Spectrum,
    Evolve,
    Average,
    Decay,
    Density,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Average => "average",
            Command::Decay => "decay",
            Command::Density => "density",
            Command::Report => "report",
        }
    }

    fn needs_state(self) -> bool {
        !matches!(self, Command::Validate | Command::Spectrum)
    }

    fn probes_sites(self) -> bool {
        matches!(
            self,
            Command::Evolve | Command::Average | Command::Decay | Command::Report
        )
    }
}

/// Flag-level inputs; `None` defers to the config, then to the defaults.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub sites: Vec<Vec<i64>>,
    pub grid_n: Option<usize>,
    pub horizon: Option<usize>,
}

/// Horizon ladder for the Cesàro checkpoints: h/16, h/4, h.
pub fn schedule_for(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [horizon / 16, horizon / 4, horizon]
        .into_iter()
        .filter(|&n| n >= 1)
        .collect();
    out.dedup();
    out
}

pub fn run(command: Command, cfg: &WalkConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let res = resolve(cfg)?;
    let d = res.op.d();
    let grid_n = opts.grid_n.or(res.grid_n);
    let horizon = opts.horizon.or(res.horizon).unwrap_or(DEFAULT_HORIZON);
    if horizon == 0 {
        return Err(CliError::Config("horizon must be positive".into()));
    }

    let sites: Vec<Vec<i64>> = if opts.sites.is_empty() {
        vec![vec![0; d]]
    } else {
        for s in &opts.sites {
            if s.len() != d {
                return Err(CliError::Config(format!(
                    "--site {:?} has {} coordinates, lattice has {d}",
                    s,
                    s.len()
                )));
            }
        }
        opts.sites.clone()
    };

    let state = if command.needs_state() {
        Some(res.state.clone().ok_or_else(|| {
            CliError::Config(format!(
                "command \"{}\" needs an initial_state in the config",
                command.name()
            ))
        })?)
    } else {
        None
    };

    let schedule = schedule_for(horizon);
    let window = (horizon.div_ceil(2).max(1), horizon);

    let mut report = RunReport {
        command: command.name().to_string(),
        provenance: Provenance {
            config_hash: res.hash.clone(),
            grid_n,
            horizon: command.probes_sites().then_some(horizon),
            schedule: matches!(command, Command::Average | Command::Report)
                .then(|| schedule.clone()),
            sites: if command.probes_sites() {
                sites.clone()
            } else {
                Vec::new()
            },
        },
        unitarity: None,
        spectral: None,
        evolution: None,
        average: None,
        decay: None,
        density: None,
    };

    if matches!(command, Command::Validate | Command::Report) {
        report.unitarity = Some(UnitaritySection::new(&res.unitarity, res.tol.unitarity));
    }

    if matches!(command, Command::Spectrum | Command::Report) {
        let spec =
            peel_point_spectrum_on(&res.op, grid_n.unwrap_or(DETECT_GRID_N), &res.tol)?;
        report.spectral = Some(SpectralSection::new(&spec));
    }

    if matches!(command, Command::Evolve) {
        let w = state.as_ref().expect("state gated above");
        let mut sections = Vec::new();
        for site in &sites {
            let p = site_probabilities(&res.op, w, site, horizon, grid_n, &res.tol)?;
            sections.push(SeriesSection {
                site: site.clone(),
                probabilities: p,
            });
        }
        report.evolution = Some(sections);
    }

    if matches!(command, Command::Average | Command::Report) {
        let w = state.as_ref().expect("state gated above");
        let mut sections = Vec::new();
        for site in &sites {
            let trace = cesaro_average(&res.op, w, site, &schedule, grid_n, &res.tol)?;
            sections.push(AverageSection::new(&trace));
        }
        report.average = Some(sections);
    }

    if matches!(command, Command::Decay | Command::Report) {
        let w = state.as_ref().expect("state gated above");
        let mut sections = Vec::new();
        for site in &sites {
            let dec = decay_check(&res.op, w, site, window, grid_n, &res.tol)?;
            sections.push(DecaySection::new(site, &dec));
        }
        report.decay = Some(sections);
    }

    if matches!(command, Command::Density) && d != 1 {
        return Err(CliError::Diagnostic(format!(
            "density is defined for dimension 1, this walk has dimension {d}"
        )));
    }
    if matches!(command, Command::Density) || (matches!(command, Command::Report) && d == 1) {
        let w = state.as_ref().expect("state gated above");
        let mut dopts = DensityOptions::default();
        if let Some(n) = grid_n {
            dopts.grid_n = n;
        }
        let profile = spectral_density_1d(&res.op, w, &dopts, &res.tol)?;
        report.density = Some(DensitySection::new(&profile));
    }

    Ok(report)
}
