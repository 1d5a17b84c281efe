//! Config document: parsing, preset expansion, validation, and the
//! canonical re-emission used for hashing and round trips.

use crate::presets;
use crate::CliError;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use walkspectra::lattice::{validate_unitarity, LatticeState, PeriodicOperator, UnitarityReport};
use walkspectra::linalg::CVec;
use walkspectra::spectra::Tolerances;

pub const CONFIG_VERSION: u32 = 1;

/// One coin block: the matrix applied on the hop by `offset`.
/// Complex entries are written as [re, im] pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEntry {
    pub offset: Vec<i64>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// One summand of the initial state: a coin vector at a lattice site.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub site: Vec<i64>,
    pub vector: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certify: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

impl ToleranceOverrides {
    pub fn is_empty(&self) -> bool {
        self.unitarity.is_none()
            && self.cluster.is_none()
            && self.spread.is_none()
            && self.certify.is_none()
            && self.gap.is_none()
    }

    pub fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            unitarity: self.unitarity.unwrap_or(base.unitarity),
            cluster: self.cluster.unwrap_or(base.cluster),
            spread: self.spread.unwrap_or(base.spread),
            certify: self.certify.unwrap_or(base.certify),
            gap: self.gap.unwrap_or(base.gap),
        }
    }
}

/// The config document. A `preset` fills in walk fields; anything given
/// explicitly wins over the preset. Unknown fields are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coin_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_state: Vec<StateEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

/// Parse a document and expand its preset. The result is fully explicit:
/// `preset` is consumed and the walk fields are all populated.
pub fn parse_config(document: &str) -> Result<WalkConfig, CliError> {
    let mut cfg: WalkConfig =
        serde_json::from_str(document).map_err(|e| CliError::Config(format!("parse: {e}")))?;
    if cfg.version != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "unsupported config version {} (this build reads version {CONFIG_VERSION})",
            cfg.version
        )));
    }
    if let Some(name) = cfg.preset.take() {
        let base = presets::preset(&name)
            .ok_or_else(|| CliError::Config(format!("unknown preset \"{name}\"")))?;
        cfg.dimension = cfg.dimension.or(base.dimension);
        cfg.coin_dim = cfg.coin_dim.or(base.coin_dim);
        if cfg.steps.is_empty() {
            cfg.steps = base.steps;
        }
        if cfg.initial_state.is_empty() {
            cfg.initial_state = base.initial_state;
        }
        cfg.grid_n = cfg.grid_n.or(base.grid_n);
        cfg.horizon = cfg.horizon.or(base.horizon);
    }
    validate_shape(&cfg)?;
    Ok(cfg)
}

fn validate_shape(cfg: &WalkConfig) -> Result<(), CliError> {
    let d = cfg
        .dimension
        .ok_or_else(|| CliError::Config("missing field: dimension".into()))?;
    let dim = cfg
        .coin_dim
        .ok_or_else(|| CliError::Config("missing field: coin_dim".into()))?;
    if d == 0 || dim == 0 {
        return Err(CliError::Config(
            "dimension and coin_dim must be positive".into(),
        ));
    }
    if cfg.steps.is_empty() {
        return Err(CliError::Config("missing field: steps".into()));
    }
    let mut seen = BTreeMap::new();
    for (i, step) in cfg.steps.iter().enumerate() {
        if step.offset.len() != d {
            return Err(CliError::Config(format!(
                "steps[{i}]: offset has {} coordinates, dimension is {d}",
                step.offset.len()
            )));
        }
        if let Some(j) = seen.insert(step.offset.clone(), i) {
            return Err(CliError::Config(format!(
                "steps[{i}]: offset {:?} repeats steps[{j}]",
                step.offset
            )));
        }
        if step.matrix.len() != dim || step.matrix.iter().any(|row| row.len() != dim) {
            return Err(CliError::Config(format!(
                "steps[{i}]: matrix must be {dim}×{dim} (coin_dim)",
            )));
        }
    }
    for (i, entry) in cfg.initial_state.iter().enumerate() {
        if entry.site.len() != d {
            return Err(CliError::Config(format!(
                "initial_state[{i}]: site has {} coordinates, dimension is {d}",
                entry.site.len()
            )));
        }
        if entry.vector.len() != dim {
            return Err(CliError::Config(format!(
                "initial_state[{i}]: vector has {} entries, coin_dim is {dim}",
                entry.vector.len()
            )));
        }
    }
    Ok(())
}

/// Canonical JSON for a parsed config: explicit fields, fixed order,
/// shortest round-trip floats. Re-parsing reproduces the operator exactly.
pub fn emit_config(cfg: &WalkConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

/// FNV-1a over the canonical emission; stamped into every report.
pub fn config_hash(cfg: &WalkConfig) -> String {
    let text = emit_config(cfg);
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Everything a command needs, built once from the config.
pub struct Resolved {
    pub op: PeriodicOperator,
    pub state: Option<LatticeState>,
    pub grid_n: Option<usize>,
    pub horizon: Option<usize>,
    pub tol: Tolerances,
    pub unitarity: UnitarityReport,
    pub hash: String,
}

/// Build the operator and gate it on unitarity. A failing gate aborts the
/// run with the residual report regardless of the command.
pub fn resolve(cfg: &WalkConfig) -> Result<Resolved, CliError> {
    let d = cfg.dimension.expect("validated");
    let dim = cfg.coin_dim.expect("validated");
    let tol = cfg
        .tolerances
        .clone()
        .unwrap_or_default()
        .apply(Tolerances::default());

    let mut steps = BTreeMap::new();
    for step in &cfg.steps {
        let mut m = Array2::zeros((dim, dim));
        for (i, row) in step.matrix.iter().enumerate() {
            for (j, &[re, im]) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        steps.insert(step.offset.clone(), m);
    }
    let op = PeriodicOperator::new(d, dim, steps)
        .map_err(|e| CliError::Config(format!("operator: {e}")))?;

    let unitarity = validate_unitarity(&op, tol.unitarity);
    if !unitarity.passes(tol.unitarity) {
        return Err(CliError::NotUnitary {
            report: unitarity,
            tol: tol.unitarity,
        });
    }

    let state = if cfg.initial_state.is_empty() {
        None
    } else {
        let mut amp: BTreeMap<Vec<i64>, CVec> = BTreeMap::new();
        for entry in &cfg.initial_state {
            let v = CVec::from_vec(
                entry
                    .vector
                    .iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect(),
            );
            amp.entry(entry.site.clone())
                .and_modify(|acc| *acc += &v)
                .or_insert(v);
        }
        Some(
            LatticeState::from_amplitudes(d, dim, amp)
                .map_err(|e| CliError::Config(format!("initial_state: {e}")))?,
        )
    };

    Ok(Resolved {
        op,
        state,
        grid_n: cfg.grid_n,
        horizon: cfg.horizon,
        tol,
        unitarity,
        hash: config_hash(cfg),
    })
}
