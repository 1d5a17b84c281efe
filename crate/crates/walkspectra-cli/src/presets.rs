//! Named walks, spelled out as explicit config fragments. The docs table
//! in docs/config-schema.md carries the same matrices; the golden tests
//! compare against it entry by entry.

use crate::config::{StateEntry, StepEntry, WalkConfig, CONFIG_VERSION};

pub const PRESET_NAMES: [&str; 4] = ["hadamard-1d", "grover-2d", "constant-coin", "pure-shift-1d"];

fn base(
    d: usize,
    dim: usize,
    steps: Vec<StepEntry>,
    initial_state: Vec<StateEntry>,
) -> WalkConfig {
    WalkConfig {
        version: CONFIG_VERSION,
        preset: None,
        dimension: Some(d),
        coin_dim: Some(dim),
        steps,
        initial_state,
        grid_n: None,
        horizon: None,
        tolerances: None,
    }
}

fn re(x: f64) -> [f64; 2] {
    [x, 0.0]
}

const Z: [f64; 2] = [0.0, 0.0];

/// Hadamard coin split over shifts ∓1 by outgoing channel; starts in
/// channel 1 at the origin.
fn hadamard_1d() -> WalkConfig {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    base(
        1,
        2,
        vec![
            StepEntry {
                offset: vec![-1],
                matrix: vec![vec![re(s), re(s)], vec![Z, Z]],
            },
            StepEntry {
                offset: vec![1],
                matrix: vec![vec![Z, Z], vec![re(s), re(-s)]],
            },
        ],
        vec![StateEntry {
            site: vec![0],
            vector: vec![re(1.0), Z],
        }],
    )
}

/// 4×4 Grover coin (2/4·J − I) split over shifts ±e₁, ±e₂ by row.
fn grover_2d() -> WalkConfig {
    let h = 0.5;
    let g = |r: usize, c: usize| if r == c { re(h - 1.0) } else { re(h) };
    let rows: [(Vec<i64>, usize); 4] = [
        (vec![-1, 0], 0),
        (vec![1, 0], 1),
        (vec![0, -1], 2),
        (vec![0, 1], 3),
    ];
    let steps = rows
        .into_iter()
        .map(|(offset, row)| StepEntry {
            offset,
            matrix: (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| if i == row { g(row, j) } else { Z })
                        .collect()
                })
                .collect(),
        })
        .collect();
    base(
        2,
        4,
        steps,
        vec![StateEntry {
            site: vec![0, 0],
            vector: vec![re(1.0), Z, Z, Z],
        }],
    )
}

/// No motion: a fixed diagonal phase coin at offset 0.
fn constant_coin() -> WalkConfig {
    base(
        1,
        2,
        vec![StepEntry {
            offset: vec![0],
            matrix: vec![vec![re(1.0), Z], vec![Z, [0.0, 1.0]]],
        }],
        vec![StateEntry {
            site: vec![0],
            vector: vec![re(1.0), Z],
        }],
    )
}

/// Translation by one site on a single channel.
fn pure_shift_1d() -> WalkConfig {
    base(
        1,
        1,
        vec![StepEntry {
            offset: vec![1],
            matrix: vec![vec![re(1.0)]],
        }],
        vec![StateEntry {
            site: vec![0],
            vector: vec![re(1.0)],
        }],
    )
}

pub fn preset(name: &str) -> Option<WalkConfig> {
    match name {
        "hadamard-1d" => Some(hadamard_1d()),
        "grover-2d" => Some(grover_2d()),
        "constant-coin" => Some(constant_coin()),
        "pure-shift-1d" => Some(pure_shift_1d()),
        _ => None,
    }
}
