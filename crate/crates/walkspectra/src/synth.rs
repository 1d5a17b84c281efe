//! Seeded generators for randomized checks: Haar unitaries, unitaries with
//! forced degeneracies, coined walk operators, Laurent data, and states.
//! Everything is driven by a caller-owned ChaCha stream so any failure
//! reproduces from its seed.

use crate::lattice::{LatticeState, PeriodicOperator, Site};
use crate::laurent::{LaurentPoly, ZetaPoly};
use crate::linalg::{adjoint, CMat, CVec};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u clamped away from 0
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// Haar-distributed n×n unitary: QR of a complex Gaussian matrix with the
/// R diagonal's phases absorbed into Q.
pub fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut q = CMat::zeros((n, n));
    for col in 0..n {
        let mut v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        // Gram-Schmidt against accepted columns, twice for stability
        for _ in 0..2 {
            for prev in 0..col {
                let mut inner = ZERO;
                for r in 0..n {
                    inner += q[(r, prev)].conj() * v[r];
                }
                for r in 0..n {
                    let sub = inner * q[(r, prev)];
                    v[r] -= sub;
                }
            }
        }
        let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        // phase fix: make the leading entry's phase deterministic, which is
        // the R-diagonal correction that turns plain QR Haar-uniform
        let lead = v[col] / nrm;
        let phase = if lead.norm() > 1e-300 {
            lead / lead.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for r in 0..n {
            q[(r, col)] = v[r] / (nrm * phase);
        }
    }
    q
}

/// Random unitary vector in ℂ^n.
pub fn random_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            return CVec::from_vec(v.into_iter().map(|c| c / nrm).collect());
        }
    }
}

/// Unitary with eigenvalue 1 forced on a block of `degeneracy` dimensions;
/// the remaining eigenvalues are random phases kept at least `min_gap`
/// apart from each other and from 1 (rejection sampling). Eigenvectors are
/// a Haar frame, so the matrix itself has no special structure.
pub fn unitary_with_degenerate_block(
    n: usize,
    degeneracy: usize,
    min_gap: f64,
    rng: &mut ChaCha8Rng,
) -> CMat {
    assert!(degeneracy <= n && degeneracy >= 1);
    let one = Complex64::new(1.0, 0.0);
    let mut phases: Vec<Complex64> = vec![one; degeneracy];
    while phases.len() < n {
        let cand = Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
        if phases.iter().all(|&p| (p - cand).norm() >= min_gap) {
            phases.push(cand);
        }
    }
    let q = haar_unitary(n, rng);
    let mut lam_qh = adjoint(&q);
    for (i, &p) in phases.iter().enumerate() {
        for c in 0..n {
            lam_qh[(i, c)] *= p;
        }
    }
    q.dot(&lam_qh)
}

/// Coined walk operator: a random unitary V whose rows are scattered over
/// the given steps, C(α) = P_α V with the P_α a partition of the channels.
/// This satisfies the operator unitarity relations exactly in structure.
/// `split` gives the channel count for each step; channels are assigned in
/// order. D = Σ split.
pub fn random_coined_operator(
    d: usize,
    steps: &[Site],
    split: &[usize],
    rng: &mut ChaCha8Rng,
) -> PeriodicOperator {
    assert_eq!(steps.len(), split.len());
    let uniq: BTreeSet<&Site> = steps.iter().collect();
    assert_eq!(uniq.len(), steps.len(), "steps must be distinct");
    let dim: usize = split.iter().sum();
    let v = haar_unitary(dim, rng);
    let mut row = 0usize;
    let mut coins: BTreeMap<Site, CMat> = BTreeMap::new();
    for (alpha, &cnt) in steps.iter().zip(split) {
        let mut c = CMat::zeros((dim, dim));
        for r in row..row + cnt {
            for col in 0..dim {
                c[(r, col)] = v[(r, col)];
            }
        }
        row += cnt;
        coins.insert(alpha.clone(), c);
    }
    PeriodicOperator::new(d, dim, coins).expect("coined construction is unitary by design")
}

/// Laurent polynomial with `terms` random coefficients on exponents drawn
/// from [−span, span]^d.
pub fn random_laurent(d: usize, terms: usize, span: i64, rng: &mut ChaCha8Rng) -> LaurentPoly {
    let mut p = LaurentPoly::zero(d);
    for _ in 0..terms {
        let e: Site = (0..d).map(|_| rng.random_range(-span..=span)).collect();
        let c = complex_gaussian(rng) * 0.5;
        p = p.add(&LaurentPoly::monomial(e, c));
    }
    p
}

/// Monic ζ-polynomial of the given degree; every lower coefficient is a
/// random Laurent polynomial with at most `max_terms` terms.
pub fn random_monic_zeta(
    d: usize,
    degree: usize,
    max_terms: usize,
    span: i64,
    rng: &mut ChaCha8Rng,
) -> ZetaPoly {
    let mut coeffs = Vec::with_capacity(degree + 1);
    coeffs.push(LaurentPoly::one(d));
    for _ in 0..degree {
        let terms = rng.random_range(1..=max_terms);
        coeffs.push(random_laurent(d, terms, span, rng));
    }
    ZetaPoly::new(coeffs)
}

/// Random point on the d-torus.
pub fn random_torus_point(d: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..d)
        .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
        .collect()
}

/// Unit-norm state supported on `sites` random positions in [−span, span]^d.
pub fn random_state(
    d: usize,
    dim: usize,
    sites: usize,
    span: i64,
    rng: &mut ChaCha8Rng,
) -> LatticeState {
    let mut amp: BTreeMap<Site, CVec> = BTreeMap::new();
    while amp.len() < sites {
        let x: Site = (0..d).map(|_| rng.random_range(-span..=span)).collect();
        amp.entry(x)
            .or_insert_with(|| CVec::from_vec((0..dim).map(|_| complex_gaussian(rng)).collect()));
    }
    let total: f64 = amp
        .values()
        .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum();
    let scale = 1.0 / total.sqrt();
    let amp = amp
        .into_iter()
        .map(|(x, v)| (x, v.mapv(|c| c * scale)))
        .collect();
    LatticeState::from_amplitudes(d, dim, amp).expect("generated amplitudes are well-formed")
}
