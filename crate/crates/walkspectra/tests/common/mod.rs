//! Named walks shared by the integration suites. The CLI ships the same
//! constructions as presets; these stay local so the library keeps no
//! factory for specific walks.

#![allow(dead_code)]

use ndarray::array;
use num_complex::Complex64 as C;
use std::collections::BTreeMap;
use walkspectra::lattice::PeriodicOperator;
use walkspectra::linalg::CMat;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// d=1, D=2: Hadamard coin split across shifts ∓1 by outgoing channel.
pub fn hadamard_split() -> PeriodicOperator {
    let s = 1.0 / 2.0f64.sqrt();
    let cm = array![[c(s, 0.0), c(s, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
    let cp = array![[c(0.0, 0.0), c(0.0, 0.0)], [c(s, 0.0), c(-s, 0.0)]];
    let mut steps = BTreeMap::new();
    steps.insert(vec![-1], cm);
    steps.insert(vec![1], cp);
    PeriodicOperator::new(1, 2, steps).unwrap()
}

/// d=2, D=4: Grover coin 2/4·J − I split across shifts ±e₁, ±e₂ by row.
pub fn grover_2d() -> PeriodicOperator {
    let h = 0.5;
    let g = [
        [c(h - 1.0, 0.0), c(h, 0.0), c(h, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(h - 1.0, 0.0), c(h, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(h, 0.0), c(h - 1.0, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(h - 1.0, 0.0)],
    ];
    let mut steps = BTreeMap::new();
    let dirs: [(Vec<i64>, usize); 4] = [
        (vec![-1, 0], 0),
        (vec![1, 0], 1),
        (vec![0, -1], 2),
        (vec![0, 1], 3),
    ];
    for (alpha, row) in dirs {
        let mut m = ndarray::Array2::zeros((4, 4));
        for col in 0..4 {
            m[(row, col)] = g[row][col];
        }
        steps.insert(alpha, m);
    }
    PeriodicOperator::new(2, 4, steps).unwrap()
}

/// d=1, D=2: no motion at all, a fixed unitary coin at offset 0.
pub fn constant_coin() -> PeriodicOperator {
    let mut steps = BTreeMap::new();
    steps.insert(
        vec![0i64],
        array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
    );
    PeriodicOperator::new(1, 2, steps).unwrap()
}

/// d=1, D=1: translation by one site.
pub fn pure_shift() -> PeriodicOperator {
    let mut steps = BTreeMap::new();
    steps.insert(vec![1i64], CMat::eye(1));
    PeriodicOperator::new(1, 1, steps).unwrap()
}
