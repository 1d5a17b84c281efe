//! Spectral density of the continuous part for one-dimensional walks.
//!
//! On d=1 the level set of a band function λ_b at a circle point t is a
//! finite fiber, and the absolutely continuous spectral measure of w has
//! density Γ(t) = Σ_b Σ_{θ: λ_b(θ)=t} ‖P_b(θ)ŵ(θ)‖² / |∂_θ λ_b(θ)| with
//! respect to normalized arc length. This module samples Γ and integrates
//! it, which should recover ‖π_c w‖².
//!
//! Construction: eigenvalues on a dense θ-grid are glued into continuous
//! branches by nearest-neighbor continuation (branches that close up only
//! after several loops are followed around the full cycle). Branches that
//! sit at a certified constant eigenvalue are point spectrum and carry no
//! density. Each remaining branch's lifted phase is split at its extrema
//! into monotone segments; a fiber inside a segment is found by bisection,
//! and |∂_θλ| comes from the peeled characteristic factor q via implicit
//! differentiation, ∂_θλ = −(∂_θ q)/(∂_ζ q).
//!
//! Γ blows up like an inverse square root at band edges, so each band is
//! sampled at Chebyshev–Gauss nodes whose weights absorb the singularity;
//! uniform sampling there would need ~10⁶ points for the same accuracy.

use crate::error::{Error, Result};
use crate::lab::series::state_symbol_at;
use crate::lattice::{LatticeState, PeriodicOperator};
use crate::laurent::{symbol_matrix, SymbolMatrix, ZetaPoly};
use crate::linalg::EigScratch;
use crate::spectra::{eigen_on_grid, peel_point_spectrum, Tolerances, TorusGrid};
use num_complex::Complex64;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TAU: f64 = 2.0 * PI;

/// Fiber solves whose phase residual exceeds this are dropped and flagged.
const FIBER_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct DensityOptions {
    /// total sample budget over the circle
    pub t_samples: usize,
    /// dense continuation grid size
    pub grid_n: usize,
    /// floor on Chebyshev nodes per band
    pub min_band_nodes: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            t_samples: 512,
            grid_n: 4096,
            min_band_nodes: 8,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DensitySample {
    /// argument of t on (−π, π]
    pub t_arg: f64,
    /// Γ(t), all fibers of all branches
    pub gamma: f64,
    /// quadrature weight against normalized arc length
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct DensityBand {
    /// lifted phase interval swept by one monotone segment
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
pub struct DensityProfile {
    /// sorted by t_arg
    pub samples: Vec<DensitySample>,
    /// ∫ Γ dν₁ assembled band by band on the Chebyshev nodes
    pub integral: f64,
    /// grid mean of the moving-branch spectral weight, ‖π_c w‖²
    pub continuous_mass: f64,
    /// grid mean of the flat-branch weight (diagnostic)
    pub point_mass: f64,
    /// fibers dropped for residual or derivative failures
    pub excluded: usize,
    pub bands: Vec<DensityBand>,
}

fn wrap_pm_pi(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// One monotone stretch of a lifted branch phase.
#[derive(Clone, Debug)]
struct Segment {
    th_lo: f64,
    th_hi: f64,
    phi_lo: f64,
    phi_hi: f64,
}

impl Segment {
    fn band(&self) -> (f64, f64) {
        if self.phi_lo <= self.phi_hi {
            (self.phi_lo, self.phi_hi)
        } else {
            (self.phi_hi, self.phi_lo)
        }
    }
    fn band_len(&self) -> f64 {
        let (a, b) = self.band();
        b - a
    }
}

struct Engine {
    dim: usize,
    sym: SymbolMatrix,
    /// peeled characteristic factor and its two partial derivatives
    q: ZetaPoly,
    q_dz: ZetaPoly,
    q_dt: ZetaPoly,
    scratch: EigScratch,
    symbuf: Vec<Complex64>,
    wbuf: Vec<Complex64>,
    w: LatticeState,
    segments: Vec<Segment>,
}

struct Fiber {
    gamma: f64,
}

impl Engine {
    /// Eigendecompose the symbol at e^{iθ}; results land in self.scratch.
    fn eig_at(&mut self, theta: f64) {
        let z = [Complex64::from_polar(1.0, theta)];
        self.sym.eval_into(&z, &mut self.symbuf);
        self.scratch.unitary_eig(&self.symbuf, false);
    }

    /// Index of the eigenvalue nearest to the unit-circle point e^{i·est}.
    fn match_phase(&self, est: f64) -> usize {
        let target = Complex64::from_polar(1.0, est);
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (j, &lam) in self.scratch.vals.iter().enumerate() {
            let d = (lam - target).norm();
            if d < bd {
                bd = d;
                best = j;
            }
        }
        best
    }

    /// Locate θ in a monotone segment with lifted phase y, then evaluate the
    /// fiber's density contribution. None = located but unusable (flagged).
    fn solve_fiber(&mut self, si: usize, y: f64) -> Option<Fiber> {
        let seg = self.segments[si].clone();
        let increasing = seg.phi_hi >= seg.phi_lo;
        let (mut tl, mut fl) = (seg.th_lo, seg.phi_lo);
        let (mut tr, mut fr) = (seg.th_hi, seg.phi_hi);
        let mut tm = 0.5 * (tl + tr);
        let mut lam = ZERO;
        for _ in 0..64 {
            tm = 0.5 * (tl + tr);
            let est = fl + (fr - fl) * (tm - tl) / (tr - tl);
            self.eig_at(tm);
            let j = self.match_phase(est);
            lam = self.scratch.vals[j];
            let fm = est + wrap_pm_pi(lam.arg() - est);
            if (fm < y) == increasing {
                tl = tm;
                fl = fm;
            } else {
                tr = tm;
                fr = fm;
            }
        }
        // final evaluation at the midpoint, with the residual check
        self.eig_at(tm);
        let j = self.match_phase(lam.arg());
        let lam = self.scratch.vals[j];
        if wrap_pm_pi(lam.arg() - y).abs() > FIBER_RESIDUAL_TOL {
            return None;
        }
        let z = [Complex64::from_polar(1.0, tm)];
        // λ must be a root of the peeled factor, otherwise this fiber
        // grabbed a flat branch crossing the band
        let scale = self.q.max_coeff_abs().max(1.0);
        if self.q.eval_unchecked(lam, &z).norm() > 1e-5 * scale {
            return None;
        }
        let dzeta = self.q_dz.eval_unchecked(lam, &z);
        let dtheta = self.q_dt.eval_unchecked(lam, &z);
        if dzeta.norm() < 1e-12 * scale {
            return None;
        }
        let slope = dtheta.norm() / dzeta.norm();
        if slope < 1e-12 {
            return None;
        }
        state_symbol_at(&self.w, &z, &mut self.wbuf);
        let dim = self.dim;
        let mut inner = ZERO;
        for i in 0..dim {
            inner += self.scratch.vecs[i * dim + j].conj() * self.wbuf[i];
        }
        Some(Fiber {
            gamma: inner.norm_sqr() / slope,
        })
    }

    /// Total Γ at circle argument τ: every segment, every winding offset.
    fn gamma_total(&mut self, tau: f64) -> (f64, usize) {
        let mut acc = 0.0;
        let mut failed = 0;
        for si in 0..self.segments.len() {
            let (lo, hi) = self.segments[si].band();
            let mut m = ((lo - tau) / TAU).ceil() as i64;
            while tau + (m as f64) * TAU <= hi {
                let y = tau + (m as f64) * TAU;
                if y >= lo {
                    match self.solve_fiber(si, y) {
                        Some(f) => acc += f.gamma,
                        None => failed += 1,
                    }
                }
                m += 1;
            }
        }
        (acc, failed)
    }
}

/// Lifted phase of the branch value nearest `ref_lam`, relative to a
/// reference lift `ref_phi`.
fn local_phase(eng: &mut Engine, theta: f64, ref_lam: Complex64, ref_phi: f64) -> f64 {
    eng.eig_at(theta);
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (j, &lam) in eng.scratch.vals.iter().enumerate() {
        let d = (lam - ref_lam).norm();
        if d < bd {
            bd = d;
            best = j;
        }
    }
    ref_phi + wrap_pm_pi(eng.scratch.vals[best].arg() - ref_phi)
}

/// Sample the spectral density of the continuous part over the unit circle.
pub fn spectral_density_1d(
    op: &PeriodicOperator,
    w: &LatticeState,
    opts: &DensityOptions,
    tol: &Tolerances,
) -> Result<DensityProfile> {
    let (mut engine, masses) = build_engine(op, w, opts, tol)?;
    let (continuous_mass, point_mass) = masses;

    // sample budget: gaps reserve a share proportional to uncovered arc,
    // bands split the rest by band length
    let band_total: f64 = engine.segments.iter().map(|s| s.band_len()).sum();
    let gaps = coverage_gaps(&engine.segments);
    let gap_total: f64 = gaps.iter().map(|(a, b)| b - a).sum();
    let gap_budget = if band_total == 0.0 {
        opts.t_samples
    } else {
        ((opts.t_samples as f64) * gap_total / TAU).round() as usize
    };
    let band_budget = opts.t_samples.saturating_sub(gap_budget);

    let mut samples = Vec::new();
    let mut bands = Vec::new();
    let mut integral = 0.0;
    let mut excluded = 0usize;

    for si in 0..engine.segments.len() {
        let (lo, hi) = engine.segments[si].band();
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let k = if band_total > 0.0 {
            (((band_budget as f64) * len / band_total).round() as usize)
                .max(opts.min_band_nodes)
        } else {
            opts.min_band_nodes
        };
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * len;
        for i in 1..=k {
            let ang = (2 * i - 1) as f64 * PI / (2.0 * k as f64);
            let x = ang.cos();
            let y = mid + half * x;
            let weight = (PI / k as f64) * ang.sin() * half / TAU;
            match engine.solve_fiber(si, y) {
                Some(f) => integral += f.gamma * weight,
                None => excluded += 1,
            }
            let tau = wrap_pm_pi(y);
            let (gamma, failed) = engine.gamma_total(tau);
            excluded += failed;
            samples.push(DensitySample {
                t_arg: tau,
                gamma,
                weight,
            });
        }
        bands.push(DensityBand {
            tau_lo: lo,
            tau_hi: hi,
            nodes: k,
        });
    }

    // uniform zero samples across uncovered arcs
    if gap_total > 0.0 && gap_budget > 0 {
        for &(a, b) in &gaps {
            let share = (b - a) / gap_total;
            let k = (((gap_budget as f64) * share).round() as usize).max(1);
            for i in 0..k {
                let tau = wrap_pm_pi(a + (b - a) * (i as f64 + 0.5) / k as f64);
                samples.push(DensitySample {
                    t_arg: tau,
                    gamma: 0.0,
                    weight: (b - a) / (k as f64 * TAU),
                });
            }
        }
    }

    samples.sort_by(|p, q| p.t_arg.total_cmp(&q.t_arg));
    Ok(DensityProfile {
        samples,
        integral,
        continuous_mass,
        point_mass,
        excluded,
        bands,
    })
}

/// Γ at caller-chosen circle arguments; same machinery, no quadrature.
pub fn density_at(
    op: &PeriodicOperator,
    w: &LatticeState,
    t_args: &[f64],
    opts: &DensityOptions,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let (mut engine, _) = build_engine(op, w, opts, tol)?;
    Ok(t_args
        .iter()
        .map(|&tau| engine.gamma_total(wrap_pm_pi(tau)).0)
        .collect())
}

/// Arcs of (−π, π]+2πℤ not covered by any band, as intervals in [0, 2π).
fn coverage_gaps(segments: &[Segment]) -> Vec<(f64, f64)> {
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    for s in segments {
        let (lo, hi) = s.band();
        if hi - lo >= TAU {
            return Vec::new();
        }
        let a = lo.rem_euclid(TAU);
        let b = a + (hi - lo);
        if b <= TAU {
            arcs.push((a, b));
        } else {
            arcs.push((a, TAU));
            arcs.push((0.0, b - TAU));
        }
    }
    if arcs.is_empty() {
        return vec![(0.0, TAU)];
    }
    arcs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut merged: Vec<(f64, f64)> = vec![arcs[0]];
    for &(a, b) in &arcs[1..] {
        let last = merged.last_mut().unwrap();
        if a <= last.1 {
            last.1 = last.1.max(b);
        } else {
            merged.push((a, b));
        }
    }
    let mut gaps = Vec::new();
    if merged[0].0 > 0.0 {
        gaps.push((0.0, merged[0].0));
    }
    for pair in merged.windows(2) {
        gaps.push((pair[0].1, pair[1].0));
    }
    if merged.last().unwrap().1 < TAU {
        gaps.push((merged.last().unwrap().1, TAU));
    }
    gaps.retain(|(a, b)| b - a > 1e-12);
    gaps
}

type Masses = (f64, f64);

#[allow(clippy::needless_range_loop)]
fn build_engine(
    op: &PeriodicOperator,
    w: &LatticeState,
    opts: &DensityOptions,
    tol: &Tolerances,
) -> Result<(Engine, Masses)> {
    if op.d() != 1 {
        return Err(Error::Precondition(format!(
            "density profiles need a one-dimensional lattice, got d={}",
            op.d()
        )));
    }
    if w.d() != 1 || w.dim() != op.dim() {
        return Err(Error::DimensionMismatch(
            "state does not match the operator's lattice".into(),
        ));
    }
    if opts.grid_n < 16 {
        return Err(Error::Precondition(
            "continuation grid too coarse (need at least 16 points)".into(),
        ));
    }
    let dim = op.dim();
    let report = peel_point_spectrum(op, tol)?;
    let certified: Vec<Complex64> = report.certified().iter().map(|c| c.value).collect();
    let q = report.quotient.clone();

    let n = opts.grid_n;
    let grid = TorusGrid::new(1, n)?;
    let eig = eigen_on_grid(op, &grid, tol)?;

    // continuation: slot b at point k holds eigenvalue index perm[k][b]
    let mut perm = vec![vec![0usize; dim]; n];
    for (b, slot) in perm[0].iter_mut().enumerate() {
        *slot = b;
    }
    for k in 1..n {
        let cur = eig.point_vals(k);
        let mut used = vec![false; dim];
        for b in 0..dim {
            let target = eig.point_vals(k - 1)[perm[k - 1][b]];
            let mut best = usize::MAX;
            let mut bd = f64::INFINITY;
            for (j, &lam) in cur.iter().enumerate() {
                if !used[j] {
                    let d = (lam - target).norm();
                    if d < bd {
                        bd = d;
                        best = j;
                    }
                }
            }
            used[best] = true;
            perm[k][b] = best;
        }
    }
    // closing the loop may permute slots; follow those cycles so every
    // branch is continued until it truly returns to its start
    let mut wrapmap = vec![0usize; dim];
    {
        let cur = eig.point_vals(0);
        let mut used = vec![false; dim];
        for b in 0..dim {
            let target = eig.point_vals(n - 1)[perm[n - 1][b]];
            let mut best = usize::MAX;
            let mut bd = f64::INFINITY;
            for (j, &lam) in cur.iter().enumerate() {
                if !used[j] {
                    let d = (lam - target).norm();
                    if d < bd {
                        bd = d;
                        best = j;
                    }
                }
            }
            used[best] = true;
            wrapmap[b] = best;
        }
    }
    let mut cycle_of = vec![usize::MAX; dim];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for b0 in 0..dim {
        if cycle_of[b0] != usize::MAX {
            continue;
        }
        let mut cyc = Vec::new();
        let mut b = b0;
        loop {
            cycle_of[b] = cycles.len();
            cyc.push(b);
            b = wrapmap[b];
            if b == b0 {
                break;
            }
        }
        cycles.push(cyc);
    }

    // a cycle is point spectrum when it hugs one certified eigenvalue
    let mut cycle_flat = vec![false; cycles.len()];
    for (ci, cyc) in cycles.iter().enumerate() {
        if cyc.len() != 1 {
            continue;
        }
        let b = cyc[0];
        cycle_flat[ci] = certified.iter().any(|&omega| {
            (0..n).all(|k| (eig.point_vals(k)[perm[k][b]] - omega).norm() <= tol.spread)
        });
    }

    // spectral weight split between flat and moving branches, grid Parseval
    let mut wbuf = vec![ZERO; dim];
    let mut c_mass = 0.0;
    let mut p_mass = 0.0;
    for k in 0..n {
        let z = grid.point(k);
        state_symbol_at(w, &z, &mut wbuf);
        let vecs = eig.point_vecs(k);
        for b in 0..dim {
            let col = perm[k][b];
            let mut inner = ZERO;
            for i in 0..dim {
                inner += vecs[i * dim + col].conj() * wbuf[i];
            }
            if cycle_flat[cycle_of[b]] {
                p_mass += inner.norm_sqr();
            } else {
                c_mass += inner.norm_sqr();
            }
        }
    }
    c_mass /= n as f64;
    p_mass /= n as f64;

    let mut engine = Engine {
        dim,
        sym: symbol_matrix(op),
        q_dz: q.derivative_zeta(),
        q_dt: q.angular_derivative(0),
        q,
        scratch: EigScratch::new(dim),
        symbuf: vec![ZERO; dim * dim],
        wbuf: vec![ZERO; dim],
        w: w.clone(),
        segments: Vec::new(),
    };

    // lift each moving cycle's phase over its covering circle and split it
    // into monotone segments at refined extrema
    let h = TAU / n as f64;
    for (ci, cyc) in cycles.iter().enumerate() {
        if cycle_flat[ci] {
            continue;
        }
        let c = cyc.len();
        let total = c * n;
        let val = |i: usize| -> Complex64 {
            let leg = i / n;
            let k = i % n;
            eig.point_vals(k)[perm[k][cyc[leg]]]
        };
        let mut phi = Vec::with_capacity(total + 1);
        phi.push(val(0).arg());
        for i in 1..=total {
            let prev = val(i - 1);
            let cur = if i == total { val(0) } else { val(i) };
            let last = *phi.last().unwrap();
            phi.push(last + wrap_pm_pi(cur.arg() - prev.arg()));
        }
        // cell signs, extrema between sign flips
        let mut sign = Vec::with_capacity(total);
        let mut carry = 1.0f64;
        for i in 0..total {
            let d = phi[i + 1] - phi[i];
            if d != 0.0 {
                carry = d.signum();
            }
            sign.push(carry);
        }
        let mut extrema: Vec<(f64, f64)> = Vec::new(); // (θ, lifted φ)
        for i in 0..total {
            let prev = sign[(i + total - 1) % total];
            if prev == sign[i] {
                continue;
            }
            // extremum near node i, bracketed by its neighbor cells
            let maximum = prev > 0.0;
            let (mut a, mut b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
            let ref_lam = val(i);
            let ref_phi = phi[i];
            for _ in 0..100 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                let f1 = local_phase(&mut engine, m1, ref_lam, ref_phi);
                let f2 = local_phase(&mut engine, m2, ref_lam, ref_phi);
                if (f1 < f2) == maximum {
                    a = m1;
                } else {
                    b = m2;
                }
            }
            let t_star = 0.5 * (a + b);
            let p_star = local_phase(&mut engine, t_star, ref_lam, ref_phi);
            extrema.push((t_star, p_star));
        }
        let winding = phi[total] - phi[0];
        if extrema.is_empty() {
            // strictly monotone over the whole cover; nonzero winding
            engine.segments.push(Segment {
                th_lo: 0.0,
                th_hi: c as f64 * TAU,
                phi_lo: phi[0],
                phi_hi: phi[0] + winding,
            });
        } else {
            extrema.sort_by(|p, q| p.0.total_cmp(&q.0));
            for j in 0..extrema.len() {
                let (t0, p0) = extrema[j];
                let (t1, p1) = if j + 1 < extrema.len() {
                    extrema[j + 1]
                } else {
                    (extrema[0].0 + c as f64 * TAU, extrema[0].1 + winding)
                };
                if t1 - t0 < 1e-9 {
                    continue;
                }
                engine.segments.push(Segment {
                    th_lo: t0,
                    th_hi: t1,
                    phi_lo: p0,
                    phi_hi: p1,
                });
            }
        }
    }

    Ok((engine, (c_mass, p_mass)))
}
