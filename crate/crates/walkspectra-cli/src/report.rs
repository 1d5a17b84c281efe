//! Report document: plain serializable mirrors of the library outputs.
//! Field order is fixed by struct order and floats print as shortest
//! round-trip decimals, so identical runs serialize byte-identically.

use serde::Serialize;
use walkspectra::lab::density::DensityProfile;
use walkspectra::lab::{AverageTrace, DecayReport};
use walkspectra::lattice::UnitarityReport;
use walkspectra::spectra::{DiscriminantDiag, SpectralReport};

#[derive(Serialize)]
pub struct Provenance {
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sites: Vec<Vec<i64>>,
}

#[derive(Serialize)]
pub struct UnitaritySection {
    pub max_residual: f64,
    pub tol: f64,
    pub passes: bool,
    /// residual per difference vector γ, sorted by γ
    pub per_gamma: Vec<(Vec<i64>, f64)>,
}

impl UnitaritySection {
    pub fn new(report: &UnitarityReport, tol: f64) -> Self {
        UnitaritySection {
            max_residual: report.max_residual,
            tol,
            passes: report.passes(tol),
            per_gamma: report
                .per_gamma
                .iter()
                .map(|(g, r)| (g.clone(), *r))
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct CandidateSection {
    pub value: [f64; 2],
    pub certified: bool,
    pub multiplicity: usize,
    pub max_grid_deviation: f64,
    pub symbolic_residual: f64,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscriminantSection {
    MinAbs { value: f64, argmin: Vec<usize> },
    RepeatedFactor { grid_min_gap: f64 },
    DegreeTooLow,
}

#[derive(Serialize)]
pub struct BandLineSection {
    pub axis: usize,
    pub args: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct SpectralSection {
    pub detection_grid_n: usize,
    pub candidates: Vec<CandidateSection>,
    pub certified_count: usize,
    pub quotient_degree: usize,
    pub min_band_gap: f64,
    pub collision_flags: Vec<Vec<usize>>,
    pub discriminant: DiscriminantSection,
    pub band_lines: Vec<BandLineSection>,
}

impl SpectralSection {
    pub fn new(report: &SpectralReport) -> Self {
        SpectralSection {
            detection_grid_n: report.detection_grid_n,
            candidates: report
                .candidates
                .iter()
                .map(|c| CandidateSection {
                    value: [c.value.re, c.value.im],
                    certified: c.certified,
                    multiplicity: c.multiplicity,
                    max_grid_deviation: c.max_grid_deviation,
                    symbolic_residual: c.symbolic_residual,
                })
                .collect(),
            certified_count: report.certified().len(),
            quotient_degree: report.quotient.degree(),
            min_band_gap: report.bands.min_gap,
            collision_flags: report.bands.collision_flags.clone(),
            discriminant: match &report.bands.discriminant {
                DiscriminantDiag::MinAbs { value, argmin } => DiscriminantSection::MinAbs {
                    value: *value,
                    argmin: argmin.clone(),
                },
                DiscriminantDiag::RepeatedFactor { grid_min_gap } => {
                    DiscriminantSection::RepeatedFactor {
                        grid_min_gap: *grid_min_gap,
                    }
                }
                DiscriminantDiag::DegreeTooLow => DiscriminantSection::DegreeTooLow,
            },
            band_lines: report
                .bands
                .lines
                .iter()
                .map(|l| BandLineSection {
                    axis: l.axis,
                    args: l.args.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct SeriesSection {
    pub site: Vec<i64>,
    /// p_n(w; x) for n = 0..=horizon
    pub probabilities: Vec<f64>,
}

#[derive(Serialize)]
pub struct ShareSection {
    pub omega: [f64; 2],
    pub site_term: f64,
    pub mass: f64,
}

#[derive(Serialize)]
pub struct AverageSection {
    pub site: Vec<i64>,
    pub checkpoints: Vec<(usize, f64)>,
    pub predicted: f64,
    pub shares: Vec<ShareSection>,
    pub final_gap: f64,
    pub evolution_grid_n: usize,
    pub predict_grid_n: usize,
}

impl AverageSection {
    pub fn new(trace: &AverageTrace) -> Self {
        AverageSection {
            site: trace.site.clone(),
            checkpoints: trace.checkpoints.clone(),
            predicted: trace.predicted,
            shares: trace
                .shares
                .iter()
                .map(|s| ShareSection {
                    omega: [s.omega.re, s.omega.im],
                    site_term: s.site_term,
                    mass: s.mass,
                })
                .collect(),
            final_gap: trace.final_gap,
            evolution_grid_n: trace.evolution_grid_n,
            predict_grid_n: trace.predict_grid_n,
        }
    }
}

#[derive(Serialize)]
pub struct DecaySection {
    pub site: Vec<i64>,
    pub window: (usize, usize),
    pub sup: f64,
    pub argmax: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    pub used: usize,
}

impl DecaySection {
    pub fn new(site: &[i64], report: &DecayReport) -> Self {
        DecaySection {
            site: site.to_vec(),
            window: report.window,
            sup: report.sup,
            argmax: report.argmax,
            slope: report.slope,
            used: report.used,
        }
    }
}

#[derive(Serialize)]
pub struct DensitySampleSection {
    pub t_arg: f64,
    pub gamma: f64,
    pub weight: f64,
}

#[derive(Serialize)]
pub struct DensityBandSection {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub nodes: usize,
}

#[derive(Serialize)]
pub struct DensitySection {
    pub integral: f64,
    pub continuous_mass: f64,
    pub point_mass: f64,
    pub excluded_fibers: usize,
    pub bands: Vec<DensityBandSection>,
    pub samples: Vec<DensitySampleSection>,
}

impl DensitySection {
    pub fn new(profile: &DensityProfile) -> Self {
        DensitySection {
            integral: profile.integral,
            continuous_mass: profile.continuous_mass,
            point_mass: profile.point_mass,
            excluded_fibers: profile.excluded,
            bands: profile
                .bands
                .iter()
                .map(|b| DensityBandSection {
                    tau_lo: b.tau_lo,
                    tau_hi: b.tau_hi,
                    nodes: b.nodes,
                })
                .collect(),
            samples: profile
                .samples
                .iter()
                .map(|s| DensitySampleSection {
                    t_arg: s.t_arg,
                    gamma: s.gamma,
                    weight: s.weight,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitarity: Option<UnitaritySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<Vec<SeriesSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average: Option<Vec<AverageSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<Vec<DecaySection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySection>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Flat series table: one row per (n, site), columns n, x…, p.
pub fn series_csv(sections: &[SeriesSection]) -> String {
    let d = sections.first().map_or(0, |s| s.site.len());
    let mut out = String::from("n");
    for k in 1..=d {
        out.push_str(&format!(",x{k}"));
    }
    out.push_str(",p\n");
    for section in sections {
        let site: Vec<String> = section.site.iter().map(|c| c.to_string()).collect();
        let site = site.join(",");
        for (n, p) in section.probabilities.iter().enumerate() {
            // ryu shortest round-trip, matching the report document
            let p = serde_json::to_string(p).expect("float serializes");
            out.push_str(&format!("{n},{site},{p}\n"));
        }
    }
    out
}
