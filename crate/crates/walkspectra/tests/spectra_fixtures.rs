//! Golden spectral facts for the named walks, pinned against closed forms.

mod common;

use common::{c, constant_coin, grover_2d, hadamard_split, pure_shift};
use num_complex::Complex64;
use walkspectra::laurent::{char_poly, discriminant, symbol_matrix, LaurentPoly};
use walkspectra::spectra::{
    certify_eigenvalue, detect_constant_eigenvalues, eigen_on_grid, peel_point_spectrum,
    peel_point_spectrum_on, DiscriminantDiag, SpectralCandidate, SpectralReport, Tolerances,
    TorusGrid,
};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn find_candidate(report: &SpectralReport, value: Complex64) -> &SpectralCandidate {
    report
        .candidates
        .iter()
        .find(|cand| (cand.value - value).norm() <= 1e-8)
        .unwrap_or_else(|| panic!("no candidate near {value}"))
}

#[test]
fn hadamard_point_spectrum_is_empty_and_the_residual_is_pinned() {
    let op = hadamard_split();
    let tol = Tolerances::default();
    let report = peel_point_spectrum_on(&op, 256, &tol).unwrap();
    assert!(report.certified().is_empty(), "{:?}", report.candidates);

    // χ(ζ,z) = ζ² − (z⁻¹−z)/√2·ζ − 1, so χ(1,z) = (z−z⁻¹)/√2 and the
    // division remainder has max coefficient 1/√2
    let cert = certify_eigenvalue(&op, ONE, tol.certify).unwrap();
    assert!(!cert.is_eigenvalue);
    assert!(
        (cert.residual - 1.0 / 2.0f64.sqrt()).abs() <= 1e-10,
        "remainder {}",
        cert.residual
    );
}

#[test]
fn hadamard_discriminant_matches_the_closed_form() {
    let op = hadamard_split();
    let chi = char_poly(&symbol_matrix(&op));
    let disc = discriminant(&chi).unwrap();

    let want = LaurentPoly::monomial(vec![2], c(0.5, 0.0))
        .add(&LaurentPoly::monomial(vec![-2], c(0.5, 0.0)))
        .add(&LaurentPoly::constant(1, c(3.0, 0.0)));
    assert!(
        disc.sub(&want).max_coeff_abs() <= 1e-12,
        "discriminant drifted from (z²+z⁻²)/2 + 3"
    );

    // on the torus this is cos2θ + 3, so the modulus bottoms out at 2
    let mut min_abs = f64::INFINITY;
    for k in 0..1024 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 1024.0;
        let z = Complex64::from_polar(1.0, th);
        min_abs = min_abs.min(disc.eval_unchecked(&[z]).norm());
    }
    assert!((min_abs - 2.0).abs() <= 1e-9, "min modulus {min_abs}");
}

#[test]
fn grover_certifies_exactly_plus_and_minus_one() {
    let op = grover_2d();
    let tol = Tolerances::default();
    let report = peel_point_spectrum(&op, &tol).unwrap();

    let certified = report.certified();
    assert_eq!(certified.len(), 2, "{:?}", report.candidates);
    let plus = find_candidate(&report, ONE);
    let minus = find_candidate(&report, -ONE);
    for cand in [plus, minus] {
        assert!(cand.certified);
        assert_eq!(cand.multiplicity, 1);
        assert!(cand.max_grid_deviation <= 1e-10);
        assert!(cand.symbolic_residual <= 1e-9);
    }
    assert_eq!(report.quotient.degree(), 2);
}

#[test]
fn grover_band_collisions_sit_at_the_corner_points() {
    let op = grover_2d();
    let tol = Tolerances::default();
    let report = peel_point_spectrum_on(&op, 16, &tol).unwrap();

    // ζ²+βζ+1 touches −1 at θ=(0,0) and +1 at θ=(π,π); nowhere else on
    // this grid does the moving pair meet a certified eigenvalue
    let mut flags = report.bands.collision_flags.clone();
    flags.sort();
    assert_eq!(flags, vec![vec![0, 0], vec![8, 8]]);

    match report.bands.discriminant {
        DiscriminantDiag::MinAbs { value, ref argmin } => {
            assert!(value <= 1e-12, "β²−4 vanishes at the collisions: {value}");
            assert!(*argmin == vec![0, 0] || *argmin == vec![8, 8]);
        }
        ref other => panic!("expected a discriminant minimum, got {other:?}"),
    }

    let grid = TorusGrid::new(2, 16).unwrap();
    let plus = find_candidate(&report, ONE);
    let minus = find_candidate(&report, -ONE);
    for p in 0..grid.len() {
        let k = grid.multi_index(p);
        let want_plus = if k == [8, 8] { 3 } else { 1 };
        let want_minus = if k == [0, 0] { 3 } else { 1 };
        assert_eq!(plus.multiplicity_profile[p], want_plus, "at {k:?}");
        assert_eq!(minus.multiplicity_profile[p], want_minus, "at {k:?}");
    }
}

#[test]
fn grover_detection_spread_is_tight_on_the_coarse_grid() {
    let op = grover_2d();
    let tol = Tolerances::default();
    let grid = TorusGrid::new(2, 16).unwrap();
    let eig = eigen_on_grid(&op, &grid, &tol).unwrap();
    let found = detect_constant_eigenvalues(&eig, 1e-10);
    assert_eq!(found.len(), 2);
    let mut values: Vec<Complex64> = found.iter().map(|g| g.value).collect();
    values.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    assert!((values[0] + ONE).norm() <= 1e-10);
    assert!((values[1] - ONE).norm() <= 1e-10);
    for g in &found {
        assert!(g.max_deviation <= 1e-10, "spread {}", g.max_deviation);
    }
}

#[test]
fn constant_coin_spectrum_is_entirely_point() {
    let op = constant_coin();
    let tol = Tolerances::default();
    let report = peel_point_spectrum(&op, &tol).unwrap();

    assert_eq!(report.certified().len(), 2);
    let one = find_candidate(&report, ONE);
    let eye = find_candidate(&report, Complex64::new(0.0, 1.0));
    assert!(one.certified && eye.certified);
    assert_eq!(report.quotient.degree(), 0);
    assert!(matches!(
        report.bands.discriminant,
        DiscriminantDiag::DegreeTooLow
    ));
    assert!(report.bands.collision_flags.is_empty());
}

#[test]
fn pure_shift_has_no_constant_eigenvalue() {
    let op = pure_shift();
    let tol = Tolerances::default();
    let report = peel_point_spectrum(&op, &tol).unwrap();
    assert!(report.certified().is_empty());
    assert!(matches!(
        report.bands.discriminant,
        DiscriminantDiag::DegreeTooLow
    ));
}
