//! Acceptance gate: eleven numbered criteria, one test and one printed
//! verdict line each (run with --nocapture to see the lines; the test
//! names carry the same numbering). Budgets are asserted, not aspirational.

use num_complex::Complex64;
use rand::Rng;
use std::time::Instant;
use walkspectra::fourier::{
    evolve_fourier, from_fourier, no_alias_grid_len, project_state, site_exact_grid_len,
    to_fourier, BoxState,
};
use walkspectra::lab::density::{spectral_density_1d, DensityOptions};
use walkspectra::lab::oracle::{brute_cesaro, finite_oracle_average, FiniteUnitary};
use walkspectra::lab::{decay_check, predicted_average, series};
use walkspectra::lattice::{apply_direct, LatticeState, PeriodicOperator};
use walkspectra::laurent::{
    char_poly, discriminant, divide_by_root, symbol_matrix, LaurentPoly, ZetaPoly,
};
use walkspectra::par::pairwise_sum;
use walkspectra::spectra::{
    certify_eigenvalue, detect_constant_eigenvalues, eigen_on_grid, Tolerances, TorusGrid,
};
use walkspectra::synth;
use walkspectra_cli::config::{parse_config, resolve};
use walkspectra_cli::CliError;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn walk(preset: &str) -> (PeriodicOperator, LatticeState, Tolerances) {
    let cfg = parse_config(&format!(r#"{{"version":1,"preset":"{preset}"}}"#)).unwrap();
    let res = resolve(&cfg).unwrap();
    (res.op, res.state.expect("presets carry a state"), res.tol)
}

fn max_site_dev(a: &LatticeState, b: &LatticeState) -> f64 {
    let mut dev = 0.0f64;
    for (site, v) in a.amplitudes() {
        let u = b.get(site);
        for (ch, x) in v.iter().enumerate() {
            let y = u.map(|vec| vec[ch]).unwrap_or_default();
            dev = dev.max((x - y).norm());
        }
    }
    for (site, v) in b.amplitudes() {
        if a.get(site).is_none() {
            for y in v.iter() {
                dev = dev.max(y.norm());
            }
        }
    }
    dev
}

#[test]
fn criterion_01_unitarity_gate() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for preset in ["hadamard-1d", "grover-2d"] {
        let cfg = parse_config(&format!(r#"{{"version":1,"preset":"{preset}"}}"#)).unwrap();
        let res = resolve(&cfg).unwrap();
        assert!(
            res.unitarity.max_residual <= 1e-12,
            "{preset}: residual {}",
            res.unitarity.max_residual
        );
        worst = worst.max(res.unitarity.max_residual);
    }

    let mut cfg = walkspectra_cli::presets::preset("hadamard-1d").unwrap();
    cfg.steps[0].matrix[0][0][0] *= 1.01;
    let err = resolve(&cfg).err().expect("perturbed coin must fail the gate");
    match err {
        CliError::NotUnitary { report, tol } => {
            assert!(tol <= 1e-10);
            assert!(report.max_residual > 1e-10);
        }
        other => panic!("wrong failure class: {other}"),
    }

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 1.0, "budget 1 s, took {secs:.2} s");
    println!(
        "criterion 1: PASS — preset residuals ≤ {worst:.2e}, 1%-perturbed coin rejected at 1e-10 ({secs:.2} s)"
    );
}

#[test]
fn criterion_02_constant_eigenvalue_detection_and_certificates() {
    let t = Instant::now();

    let (grover, _, tol) = walk("grover-2d");
    let grid = TorusGrid::new(2, 16).unwrap();
    let eig = eigen_on_grid(&grover, &grid, &tol).unwrap();
    let found = detect_constant_eigenvalues(&eig, 1e-10);
    assert_eq!(found.len(), 2, "grover must yield exactly two candidates");
    let mut values: Vec<Complex64> = found.iter().map(|g| g.value).collect();
    values.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    assert!((values[0] + ONE).norm() <= 1e-10);
    assert!((values[1] - ONE).norm() <= 1e-10);
    for g in &found {
        assert!(g.max_deviation <= 1e-10, "spread {}", g.max_deviation);
    }
    let mut worst_residual = 0.0f64;
    for om in [ONE, -ONE] {
        let cert = certify_eigenvalue(&grover, om, tol.certify).unwrap();
        assert!(cert.is_eigenvalue && cert.residual <= 1e-9);
        worst_residual = worst_residual.max(cert.residual);
    }

    let (hadamard, _, tol) = walk("hadamard-1d");
    let grid = TorusGrid::new(1, 256).unwrap();
    let eig = eigen_on_grid(&hadamard, &grid, &tol).unwrap();
    assert!(detect_constant_eigenvalues(&eig, 1e-10).is_empty());
    let cert = certify_eigenvalue(&hadamard, ONE, tol.certify).unwrap();
    assert!(!cert.is_eigenvalue);
    let fixture = 1.0 / 2.0f64.sqrt();
    assert!(
        (cert.residual - fixture).abs() <= 1e-10,
        "hadamard remainder {} vs 1/√2",
        cert.residual
    );

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 10.0, "budget 10 s, took {secs:.2} s");
    println!(
        "criterion 2: PASS — grover certifies ±1 (residual ≤ {worst_residual:.2e}), hadamard list empty with remainder 1/√2 ({secs:.2} s)"
    );
}

#[test]
fn criterion_03_division_lemma() {
    let t = Instant::now();
    let mut worst_reconstruction = 0.0f64;
    for case in 0..200u64 {
        let mut rng = synth::rng(5000 + case);
        let d = 1 + (case % 2) as usize;
        let degree = 2 + (case % 3) as usize;
        let f = synth::random_monic_zeta(d, degree, 5, 2, &mut rng);
        let lambda = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
        let (q, r) = divide_by_root(&f, lambda);
        let linear = ZetaPoly::new(vec![
            LaurentPoly::one(d),
            LaurentPoly::constant(d, -lambda),
        ]);
        let back = linear.mul(&q).add(&ZetaPoly::new(vec![r]));
        let dist = back.sub(&f).max_coeff_abs() / f.max_coeff_abs().max(1.0);
        assert!(dist <= 1e-12, "case {case}: reconstruction off by {dist:.3e}");
        worst_reconstruction = worst_reconstruction.max(dist);
    }

    // remainders under certified eigenvalues stay at the noise floor
    let mut worst_remainder = 0.0f64;
    let (grover, _, _) = walk("grover-2d");
    let chi = char_poly(&symbol_matrix(&grover));
    for om in [ONE, -ONE] {
        worst_remainder = worst_remainder.max(divide_by_root(&chi, om).1.max_coeff_abs());
    }
    let (constant, _, _) = walk("constant-coin");
    let chi = char_poly(&symbol_matrix(&constant));
    for om in [ONE, Complex64::new(0.0, 1.0)] {
        worst_remainder = worst_remainder.max(divide_by_root(&chi, om).1.max_coeff_abs());
    }
    assert!(worst_remainder <= 1e-9);

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 5.0, "budget 5 s, took {secs:.2} s");
    println!(
        "criterion 3: PASS — 200 reconstructions ≤ {worst_reconstruction:.2e} coefficientwise, certified remainders ≤ {worst_remainder:.2e} ({secs:.2} s)"
    );
}

/// Shared by criteria 4 and 5: march both engines to n_top and record the
/// pointwise deviation plus the norms at every step.
fn transport_sweep(
    op: &PeriodicOperator,
    w: &LatticeState,
    grid_n: usize,
    n_top: usize,
    tol: &Tolerances,
) -> (f64, Vec<(f64, f64)>) {
    let need = no_alias_grid_len(&w.support_radius(), &op.step_radius(), n_top);
    assert!(
        need.iter().all(|&n| n <= grid_n),
        "grid {grid_n} violates the no-aliasing bound {need:?}"
    );
    let dims = vec![grid_n; op.d()];
    let wb = BoxState::from_lattice(w, &dims).unwrap();
    let grid = TorusGrid::new(op.d(), grid_n).unwrap();
    let f0 = to_fourier(&wb, &grid).unwrap();

    let mut direct = w.clone();
    let mut max_dev = 0.0f64;
    let mut norms = Vec::new();
    for n in 1..=n_top {
        direct = apply_direct(op, &direct).unwrap();
        let field = evolve_fourier(op, &f0, n, tol).unwrap();
        let back = from_fourier(&field, &dims).unwrap().to_lattice();
        max_dev = max_dev.max(max_site_dev(&direct, &back));
        norms.push((direct.norm_sq(), field.mean_norm_sq()));
    }
    (max_dev, norms)
}

#[test]
fn criterion_04_engine_equivalence() {
    let t = Instant::now();
    let (hadamard, w, tol) = walk("hadamard-1d");
    let (dev_h, _) = transport_sweep(&hadamard, &w, 128, 16, &tol);
    assert!(dev_h <= 1e-10, "hadamard engines disagree by {dev_h:.3e}");

    let (grover, w, tol) = walk("grover-2d");
    let (dev_g, _) = transport_sweep(&grover, &w, 64, 16, &tol);
    assert!(dev_g <= 1e-10, "grover engines disagree by {dev_g:.3e}");

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 30.0, "budget 30 s, took {secs:.2} s");
    println!(
        "criterion 4: PASS — pointwise agreement ≤ {:.2e} across n ≤ 16 on both walks ({secs:.2} s)",
        dev_h.max(dev_g)
    );
}

#[test]
fn criterion_05_conservation() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for (preset, grid_n) in [("hadamard-1d", 128), ("grover-2d", 64)] {
        let (op, w, tol) = walk(preset);
        let total = w.norm_sq();
        let (_, norms) = transport_sweep(&op, &w, grid_n, 16, &tol);
        for (n, (direct, field)) in norms.iter().enumerate() {
            assert!(
                (direct - total).abs() <= 1e-12,
                "{preset}: Σ_x p_{} drifted to {direct}",
                n + 1
            );
            assert!((field - total).abs() <= 1e-12);
            worst = worst.max((direct - total).abs()).max((field - total).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 30.0, "took {secs:.2} s");
    println!(
        "criterion 5: PASS — Σ_x p_n = ‖w‖² within {worst:.2e} at every checked step ({secs:.2} s)"
    );
}

#[test]
fn criterion_06_projection_algebra() {
    let t = Instant::now();
    let (op, _, tol) = walk("grover-2d");
    let grid = TorusGrid::new(2, 16).unwrap();
    let sym = symbol_matrix(&op);
    let dim = op.dim();

    let frob = |m: &[Complex64]| m.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut worst_algebra = 0.0f64;
    let mut worst_eigen = 0.0f64;
    let mut worst_agree = 0.0f64;
    let mut rng = synth::rng(606);

    for om in [ONE, -ONE] {
        let field = walkspectra::spectra::eigenprojection_field(&op, &grid, om, &tol).unwrap();
        for p in 0..grid.len() {
            let r = field.point(p);
            let mut rr = vec![Complex64::new(0.0, 0.0); dim * dim];
            let mut rh = vec![Complex64::new(0.0, 0.0); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..dim {
                        s += r[i * dim + k] * r[k * dim + j];
                    }
                    rr[i * dim + j] = s - r[i * dim + j];
                    rh[i * dim + j] = r[j * dim + i].conj() - r[i * dim + j];
                }
            }
            let idem = frob(&rr);
            let sa = frob(&rh);
            assert!(idem <= 1e-10 && sa <= 1e-10, "point {p}: R²−R {idem:.2e}, R−R* {sa:.2e}");
            worst_algebra = worst_algebra.max(idem).max(sa);

            let u = sym.eval_unchecked(&grid.point(p));
            let us = u.as_slice().unwrap();
            let mut ur = vec![Complex64::new(0.0, 0.0); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..dim {
                        s += us[i * dim + k] * r[k * dim + j];
                    }
                    ur[i * dim + j] = s - om * r[i * dim + j];
                }
            }
            let er = frob(&ur);
            assert!(er <= 1e-9, "point {p}: ÛR−ωR = {er:.2e}");
            worst_eigen = worst_eigen.max(er);
        }

        let resolvent =
            walkspectra::spectra::contour_projection_field(&op, &grid, om, &tol).unwrap();
        for _ in 0..100 {
            let p = rng.random_range(0..grid.len());
            let diff: f64 = resolvent
                .point(p)
                .iter()
                .zip(field.point(p))
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-8, "point {p}: constructions differ by {diff:.3e}");
            worst_agree = worst_agree.max(diff);
        }
    }

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 30.0, "budget 30 s, took {secs:.2} s");
    println!(
        "criterion 6: PASS — projector algebra ≤ {worst_algebra:.2e}, eigenrelation ≤ {worst_eigen:.2e}, contour agreement ≤ {worst_agree:.2e} at 100 random points ({secs:.2} s)"
    );
}

#[test]
fn criterion_07_cesaro_convergence_to_the_prediction() {
    let t = Instant::now();
    let (op, _, tol) = walk("grover-2d");
    let x = [0i64, 0];
    let schedule = [256usize, 1024, 4096];
    let n_top = 4096;

    let mut rng = synth::rng(2026);
    let states: Vec<LatticeState> = (0..3)
        .map(|_| LatticeState::delta(vec![0, 0], synth::random_unit_vector(4, &mut rng)))
        .collect();

    // shared sweep over the alias-free circle: one eigensolve per grid
    // point serves all three states
    let need = site_exact_grid_len(
        &states[0].support_radius(),
        &op.step_radius(),
        n_top,
        &x,
    );
    let grid_n = need.into_iter().max().unwrap();
    let amps = series::site_amplitude_series(&op, &states, &x, n_top, grid_n, &tol).unwrap();

    let mut worst_final_gap = 0.0f64;
    let mut worst_mass_dev = 0.0f64;
    let grid = TorusGrid::new(2, 256).unwrap();
    let dims = vec![256, 256];

    for (k, w) in states.iter().enumerate() {
        let p = series::probability_series(&amps[k], op.dim());
        let pred = predicted_average(&op, w, &x, 256, &tol).unwrap();
        let gaps: Vec<f64> = schedule
            .iter()
            .map(|&n| (pairwise_sum(&p[1..=n]) / n as f64 - pred.value).abs())
            .collect();
        assert!(
            gaps[0] > gaps[1] && gaps[1] > gaps[2],
            "state {k}: gaps {gaps:?} fail to decrease along {schedule:?}"
        );
        assert!(
            gaps[2] <= 3e-2,
            "state {k}: final gap {} exceeds 3e-2",
            gaps[2]
        );
        worst_final_gap = worst_final_gap.max(gaps[2]);

        // mass identity: summing the per-site prediction over the box is
        // the same as the projected state's total mass, and the two
        // eigenprojections are orthogonal pieces of it
        let wb = BoxState::from_lattice(w, &dims).unwrap();
        let pp = project_state(&op, &wb, &grid, ONE, &tol).unwrap();
        let pm = project_state(&op, &wb, &grid, -ONE, &tol).unwrap();
        let sitewise: f64 = pp
            .data()
            .iter()
            .chain(pm.data().iter())
            .map(|a| a.norm_sqr())
            .sum();
        let combined: f64 = pp
            .data()
            .iter()
            .zip(pm.data())
            .map(|(a, b)| (a + b).norm_sqr())
            .sum();
        let dev = (sitewise - combined).abs();
        assert!(dev <= 1e-8, "state {k}: mass identity off by {dev:.3e}");
        worst_mass_dev = worst_mass_dev.max(dev);
        let mass_sum: f64 = pred.shares.iter().map(|s| s.mass).sum();
        assert!((mass_sum - sitewise).abs() <= 1e-12);
    }

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 600.0, "budget 10 min, took {secs:.1} s");
    println!(
        "criterion 7: PASS — 3 states: |p̄_4096 − predicted| ≤ {worst_final_gap:.3e}, gaps decrease along {schedule:?}, mass identity ≤ {worst_mass_dev:.2e} ({secs:.1} s)"
    );
}

#[test]
fn criterion_08_uniform_decay_without_point_spectrum() {
    let t = Instant::now();
    let (op, w, tol) = walk("hadamard-1d");
    let rep = decay_check(&op, &w, &[0], (200, 400), None, &tol).unwrap();
    assert!(rep.sup < 0.05, "sup {} over [200,400]", rep.sup);
    let pred = predicted_average(&op, &w, &[0], 256, &tol).unwrap();
    assert_eq!(pred.value, 0.0, "empty point spectrum predicts zero");
    assert!(pred.shares.is_empty());

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 60.0, "budget 1 min, took {secs:.2} s");
    println!(
        "criterion 8: PASS — sup p_n = {:.3e} < 0.05 on [200,400], predicted average 0 ({secs:.2} s)",
        rep.sup
    );
}

#[test]
fn criterion_09_finite_oracle_equivalence() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let mut rng = synth::rng(9000 + case);
        let u = synth::unitary_with_degenerate_block(8, 2, 0.3, &mut rng);
        let w = synth::random_unit_vector(8, &mut rng);
        let fu = FiniteUnitary::new(u.clone()).unwrap();
        for i in 0..8 {
            let limit = finite_oracle_average(&fu, &w, i, None).unwrap().limit;
            let pbar = brute_cesaro(&u, &w, i, 100_000).unwrap();
            let dev = (limit - pbar).abs();
            assert!(dev <= 1e-3, "case {case} coordinate {i}: |p̄−limit| = {dev:.3e}");
            worst = worst.max(dev);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 30.0, "budget 30 s, took {secs:.2} s");
    println!(
        "criterion 9: PASS — 20 degenerate 8×8 cases, per-coordinate |p̄_1e5 − limit| ≤ {worst:.2e} ({secs:.2} s)"
    );
}

#[test]
fn criterion_10_coarea_density() {
    let t = Instant::now();

    let (shift, w, tol) = walk("pure-shift-1d");
    let profile = spectral_density_1d(&shift, &w, &DensityOptions::default(), &tol).unwrap();
    let mut worst_flat = 0.0f64;
    for s in &profile.samples {
        let dev = (s.gamma - 1.0).abs();
        assert!(dev <= 1e-10, "Γ({}) = {}", s.t_arg, s.gamma);
        worst_flat = worst_flat.max(dev);
    }

    let (hadamard, w, tol) = walk("hadamard-1d");
    let profile = spectral_density_1d(&hadamard, &w, &DensityOptions::default(), &tol).unwrap();
    assert_eq!(profile.samples.len(), 512);
    let err = (profile.integral - 1.0).abs();
    assert!(err <= 1e-2, "∫Γ dν = {} vs ‖π_c w‖² = 1", profile.integral);

    let secs = t.elapsed().as_secs_f64();
    assert!(secs < 60.0, "budget 1 min, took {secs:.2} s");
    println!(
        "criterion 10: PASS — pure shift Γ≡1 within {worst_flat:.2e}, hadamard ∫Γ = 1 within {err:.2e} over 512 samples ({secs:.2} s)"
    );
}

#[test]
fn criterion_11_discriminant_fixture() {
    let t = Instant::now();
    let (op, _, _) = walk("hadamard-1d");
    let disc = discriminant(&char_poly(&symbol_matrix(&op))).unwrap();

    let close = LaurentPoly::monomial(vec![2], Complex64::new(0.5, 0.0))
        .add(&LaurentPoly::monomial(vec![-2], Complex64::new(0.5, 0.0)))
        .add(&LaurentPoly::constant(1, Complex64::new(3.0, 0.0)));
    let coeff_dev = disc.sub(&close).max_coeff_abs();
    assert!(coeff_dev <= 1e-12, "coefficients drift by {coeff_dev:.3e}");

    let mut min_abs = f64::INFINITY;
    for k in 0..1024 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 1024.0;
        let z = Complex64::from_polar(1.0, th);
        min_abs = min_abs.min(disc.eval_unchecked(&[z]).norm());
    }
    assert!((min_abs - 2.0).abs() <= 1e-9, "min modulus {min_abs}");

    let secs = t.elapsed().as_secs_f64();
    println!(
        "criterion 11: PASS — discriminant = (z²+z⁻²)/2 + 3 within {coeff_dev:.2e}, min torus modulus 2 within 1e-9 ({secs:.2} s)"
    );
}
