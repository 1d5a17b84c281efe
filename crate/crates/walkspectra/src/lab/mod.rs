//! Numerical checks of the long-time behavior: Cesàro averages of return
//! probabilities against their spectral prediction, decay of p_n when the
//! point spectrum is empty, finite-matrix oracles, and (for d=1) the
//! density of the continuous spectral part.

pub mod density;
pub mod oracle;
pub mod series;

use crate::error::{Error, Result};
use crate::fourier::{site_exact_grid_len, BoxState, project_state};
use crate::lattice::{LatticeState, PeriodicOperator};
use crate::par;
use crate::spectra::{peel_point_spectrum, Tolerances, TorusGrid};
use num_complex::Complex64;

/// Projection grid used for the predicted average when the caller does not
/// pick one. Projector kernels decay fast away from collisions; 256 per
/// axis puts the wrap-around error well below the comparison tolerances.
pub const PREDICT_GRID_N: usize = 256;

/// One certified eigenvalue's contribution to the prediction.
#[derive(Clone, Copy, Debug)]
pub struct OmegaShare {
    pub omega: Complex64,
    /// ‖(π_j w)(x)‖² at the probe site
    pub site_term: f64,
    /// ‖π_j w‖², the state's total mass under this eigenprojection
    pub mass: f64,
}

/// Σ_j ‖(π_j w)(x)‖² with the per-eigenvalue breakdown.
#[derive(Clone, Debug)]
pub struct PredictedAverage {
    pub value: f64,
    pub shares: Vec<OmegaShare>,
    pub grid_n: usize,
}

/// Time-averaged return probability along a schedule of horizons, next to
/// the spectral prediction it should approach.
#[derive(Clone, Debug)]
pub struct AverageTrace {
    pub site: Vec<i64>,
    /// (N, p̄_N) pairs, ascending in N; the mean runs n = 1..N
    pub checkpoints: Vec<(usize, f64)>,
    pub predicted: f64,
    pub shares: Vec<OmegaShare>,
    /// |p̄_N − predicted| at the last horizon
    pub final_gap: f64,
    pub evolution_grid_n: usize,
    pub predict_grid_n: usize,
}

/// Sup and trend of p_n over an index window.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub window: (usize, usize),
    pub sup: f64,
    pub argmax: usize,
    /// log-log least-squares slope over the window; None when fewer than
    /// two probabilities are nonzero (zeros carry no slope information)
    pub slope: Option<f64>,
    /// points that entered the fit
    pub used: usize,
}

fn site_circle(op: &PeriodicOperator, w: &LatticeState, x: &[i64], n_max: usize) -> usize {
    let s = w.support_radius();
    let sigma = op.step_radius();
    site_exact_grid_len(&s, &sigma, n_max, x)
        .into_iter()
        .max()
        .unwrap_or(2)
        .max(2) // degenerate floor for n_max = 0 on a point state
}

/// p_n(w; x) for n = 0..=n_max, through the mode-sum engine on an exact
/// (alias-free) circle. `grid_n` overrides the automatic circle size and
/// errs if it is too small to be exact.
pub fn site_probabilities(
    op: &PeriodicOperator,
    w: &LatticeState,
    x: &[i64],
    n_max: usize,
    grid_n: Option<usize>,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let need = site_circle(op, w, x, n_max);
    let n = match grid_n {
        Some(n) if n < need => {
            return Err(Error::Precondition(format!(
                "circle of {n} points aliases at horizon {n_max}; need at least {need}"
            )));
        }
        Some(n) => n,
        None => need,
    };
    let amps = series::site_amplitude_series(op, std::slice::from_ref(w), x, n_max, n, tol)?;
    Ok(series::probability_series(&amps[0], op.dim()))
}

/// Σ_j ‖(π_j w)(x)‖² over the certified point spectrum; zero when there is
/// none. The projection runs on a torus grid of `grid_n` per axis with the
/// state wrapped onto the matching box, where mass bookkeeping is exact.
pub fn predicted_average(
    op: &PeriodicOperator,
    w: &LatticeState,
    x: &[i64],
    grid_n: usize,
    tol: &Tolerances,
) -> Result<PredictedAverage> {
    if x.len() != op.d() {
        return Err(Error::DimensionMismatch(format!(
            "site has {} coordinates, lattice has {}",
            x.len(),
            op.d()
        )));
    }
    let report = peel_point_spectrum(op, tol)?;
    let omegas: Vec<Complex64> = report.certified().iter().map(|c| c.value).collect();
    if omegas.is_empty() {
        return Ok(PredictedAverage {
            value: 0.0,
            shares: Vec::new(),
            grid_n,
        });
    }
    let grid = TorusGrid::new(op.d(), grid_n)?;
    let dims = vec![grid_n; op.d()];
    let wb = BoxState::from_lattice(w, &dims)?;
    let mut shares = Vec::with_capacity(omegas.len());
    let mut value = 0.0;
    for omega in omegas {
        let pw = project_state(op, &wb, &grid, omega, tol)?;
        let site_term = pw
            .get(x)
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .unwrap_or(0.0);
        let mass = pw.norm_sq();
        value += site_term;
        shares.push(OmegaShare {
            omega,
            site_term,
            mass,
        });
    }
    Ok(PredictedAverage {
        value,
        shares,
        grid_n,
    })
}

/// Partial Cesàro means p̄_N = (1/N) Σ_{n=1}^{N} p_n(w;x) along `schedule`,
/// with the prediction Σ_j ‖π_jw(x)‖² and the gap at the last horizon.
pub fn cesaro_average(
    op: &PeriodicOperator,
    w: &LatticeState,
    x: &[i64],
    schedule: &[usize],
    grid_n: Option<usize>,
    tol: &Tolerances,
) -> Result<AverageTrace> {
    if schedule.is_empty() {
        return Err(Error::Precondition("empty horizon schedule".into()));
    }
    if schedule.windows(2).any(|p| p[1] <= p[0]) || schedule[0] == 0 {
        return Err(Error::Precondition(
            "horizon schedule must be positive and strictly increasing".into(),
        ));
    }
    let n_max = *schedule.last().unwrap();
    let p = site_probabilities(op, w, x, n_max, grid_n, tol)?;
    let checkpoints: Vec<(usize, f64)> = schedule
        .iter()
        .map(|&n| (n, par::pairwise_sum(&p[1..=n]) / n as f64))
        .collect();
    let predicted = predicted_average(op, w, x, PREDICT_GRID_N, tol)?;
    let final_gap = (checkpoints.last().unwrap().1 - predicted.value).abs();
    Ok(AverageTrace {
        site: x.to_vec(),
        checkpoints,
        predicted: predicted.value,
        shares: predicted.shares,
        final_gap,
        evolution_grid_n: site_circle(op, w, x, n_max).max(grid_n.unwrap_or(0)),
        predict_grid_n: PREDICT_GRID_N,
    })
}

/// Sup of p_n over [n₀, n₁] plus a log-log trend slope. Exact zeros are
/// left out of the fit; a slope near −1 matches the 1/n envelope decay of
/// purely continuous one-dimensional spectra.
#[allow(clippy::needless_range_loop)]
pub fn decay_check(
    op: &PeriodicOperator,
    w: &LatticeState,
    x: &[i64],
    window: (usize, usize),
    grid_n: Option<usize>,
    tol: &Tolerances,
) -> Result<DecayReport> {
    let (n0, n1) = window;
    if n1 < n0 || n0 == 0 {
        return Err(Error::Precondition(format!(
            "bad window [{n0}, {n1}]: need 1 ≤ n₀ ≤ n₁"
        )));
    }
    let p = site_probabilities(op, w, x, n1, grid_n, tol)?;
    let mut sup = 0.0;
    let mut argmax = n0;
    for n in n0..=n1 {
        if p[n] > sup {
            sup = p[n];
            argmax = n;
        }
    }
    // least squares of ln p on ln n; values below the mode-sum engine's
    // resolution are roundoff dust standing in for exact zeros (parity
    // effects and the like) and would wreck the fit, so they stay out
    let floor = 1e-24 * w.norm_sq().max(1e-300);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in n0..=n1 {
        if p[n] > floor {
            xs.push((n as f64).ln());
            ys.push(p[n].ln());
        }
    }
    let used = xs.len();
    let slope = if used >= 2 {
        let mx = xs.iter().sum::<f64>() / used as f64;
        let my = ys.iter().sum::<f64>() / used as f64;
        let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(u, v)| (u - mx) * (v - my)).sum();
        if sxx == 0.0 {
            None
        } else {
            Some(sxy / sxx)
        }
    } else {
        None
    };
    Ok(DecayReport {
        window,
        sup,
        argmax,
        slope,
        used,
    })
}
