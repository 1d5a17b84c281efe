//! Translation-invariant unitary walks on ℤ^d: operators are given by a
//! finite step set S ⊂ ℤ^d and coin matrices C(α) ∈ ℂ^{D×D}, acting on
//! ℓ²(ℤ^d, ℂ^D) as (Uw)(x) = Σ_{α∈S} C(α) w(x−α).
//!
//! The crate provides
//! * exact direct-space evolution and unitarity validation ([`lattice`]),
//! * Laurent-polynomial algebra for the momentum-space symbol
//!   Û(z) = Σ_α z^α C(α), its characteristic polynomial, root division,
//!   resultants and discriminants ([`laurent`]),
//! * pointwise eigenanalysis of Û on torus grids, detection and symbolic
//!   certification of constant eigenvalues (the point spectrum of U), and
//!   eigenprojection fields ([`spectra`]),
//! * DFT transport between lattice boxes and torus grids plus fast n-step
//!   evolution by pointwise symbol powers ([`fourier`]),
//! * long-time averages, localization predictions, decay checks, a finite
//!   -dimensional closed-form oracle, and the d=1 spectral density
//!   ([`lab`]).
//!
//! With the default `parallel` feature, grid-pointwise work runs on rayon.
//! All reductions use fixed block boundaries and pairwise summation, so
//! results are bit-identical across thread counts and with the feature
//! disabled.

pub mod error;
pub mod fourier;
pub mod lab;
pub mod lattice;
pub mod laurent;
pub mod linalg;
pub mod par;
pub mod spectra;
pub mod synth;

pub use error::{Error, Result};
