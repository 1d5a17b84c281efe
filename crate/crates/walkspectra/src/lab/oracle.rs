//! Finite-matrix cross-check for Cesàro limits.
//!
//! For a unitary M on ℂ^m with spectral projections P_μ, the time average of
//! |(M^n w)_i|² converges to Σ_μ |(P_μ w)_i|², and the convergence rate is
//! controlled by the spectral gaps. This module computes both the closed
//! form and brute-force partial averages so the lattice machinery can be
//! validated against something with no grids or truncation in it.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, EigScratch};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// pairwise gap below which two eigenvalue clusters stop being trustworthy
const GAP_WARN: f64 = 1e-12;
/// eigenvalues closer than this are treated as one spectral point
const GROUP_TOL: f64 = 1e-10;

pub struct FiniteUnitary {
    pub m: usize,
    pub mat: CMat,
    /// distinct eigenvalues with the eigenvector column indices grouped
    /// under each
    pub groups: Vec<(Complex64, Vec<usize>)>,
    vecs: Vec<Complex64>,
    /// smallest distance between distinct eigenvalue groups (2.0 if only one)
    pub min_group_gap: f64,
    /// set when two groups are too close for the grouping to be meaningful
    pub warning: Option<String>,
}

impl FiniteUnitary {
    pub fn new(mat: CMat) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a nonempty square matrix, got {r}×{c}"
            )));
        }
        let m = r;
        let gram = linalg::adjoint(&mat).dot(&mat);
        let mut dev = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
        if dev > 1e-12 {
            return Err(Error::NotUnitary {
                max_residual: dev,
                tol: 1e-12,
            });
        }
        let flat: Vec<Complex64> = mat.iter().copied().collect();
        let mut scratch = EigScratch::new(m);
        scratch.unitary_eig(&flat, false);
        // values arrive sorted by principal argument; group adjacent ones,
        // then check the circular wrap pair
        let mut groups: Vec<(Complex64, Vec<usize>)> = Vec::new();
        for (idx, &lam) in scratch.vals.iter().enumerate() {
            match groups.last_mut() {
                Some((rep, members)) if (lam - *rep).norm() <= GROUP_TOL => {
                    members.push(idx);
                }
                _ => groups.push((lam, vec![idx])),
            }
        }
        if groups.len() > 1 {
            let (first, last) = (groups[0].0, groups[groups.len() - 1].0);
            if (first - last).norm() <= GROUP_TOL {
                let (_, tail) = groups.pop().unwrap();
                groups[0].1.extend(tail);
            }
        }
        // nearest-member distance across distinct groups
        let mut min_gap = 2.0f64;
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                for &a in &groups[i].1 {
                    for &b in &groups[j].1 {
                        min_gap = min_gap.min((scratch.vals[a] - scratch.vals[b]).norm());
                    }
                }
            }
        }
        let warning = (groups.len() > 1 && min_gap < GAP_WARN).then(|| {
            format!("eigenvalue groups separated by only {min_gap:.3e}; grouping is unreliable")
        });
        Ok(FiniteUnitary {
            m,
            mat,
            groups,
            vecs: scratch.vecs.clone(),
            min_group_gap: min_gap,
            warning,
        })
    }

    /// coordinate i of P_μ w for group index g
    fn projected_coord(&self, g: usize, w: &CVec, i: usize) -> Complex64 {
        let m = self.m;
        let mut acc = ZERO;
        for &col in &self.groups[g].1 {
            let mut inner = ZERO;
            for r in 0..m {
                inner += self.vecs[r * m + col].conj() * w[r];
            }
            acc += self.vecs[i * m + col] * inner;
        }
        acc
    }
}

pub struct OracleAverage {
    /// Σ_μ |(P_μ w)_i|², the exact N → ∞ limit
    pub limit: f64,
    /// brute-force p̄_N at the requested N, for rate inspection
    pub cesaro_at: Option<(usize, f64)>,
}

/// Closed-form time average of |(M^n w)_i|², optionally paired with the
/// brute-force partial average at one N.
pub fn finite_oracle_average(
    fu: &FiniteUnitary,
    w: &CVec,
    i: usize,
    rate_n: Option<usize>,
) -> Result<OracleAverage> {
    if w.len() != fu.m {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs matrix size {}",
            w.len(),
            fu.m
        )));
    }
    if i >= fu.m {
        return Err(Error::DimensionMismatch(format!(
            "coordinate {i} out of range for size {}",
            fu.m
        )));
    }
    let mut limit = 0.0;
    for g in 0..fu.groups.len() {
        limit += fu.projected_coord(g, w, i).norm_sqr();
    }
    let cesaro_at = match rate_n {
        Some(n) => Some((n, brute_cesaro(&fu.mat, w, i, n)?)),
        None => None,
    };
    Ok(OracleAverage { limit, cesaro_at })
}

/// (1/N) Σ_{n=1}^{N} |(M^n w)_i|² by repeated multiplication.
pub fn brute_cesaro(mat: &CMat, w: &CVec, i: usize, n: usize) -> Result<f64> {
    let (r, c) = mat.dim();
    if r != c || w.len() != r {
        return Err(Error::DimensionMismatch(
            "matrix and vector sizes disagree".into(),
        ));
    }
    if i >= r {
        return Err(Error::DimensionMismatch(format!(
            "coordinate {i} out of range for size {r}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("average over an empty range".into()));
    }
    let mut v = w.clone();
    let mut acc = 0.0;
    for _ in 1..=n {
        v = mat.dot(&v);
        acc += v[i].norm_sqr();
    }
    Ok(acc / n as f64)
}
