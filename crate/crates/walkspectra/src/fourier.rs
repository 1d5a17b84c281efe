//! Transport between finite lattice boxes and torus grids, fast n-step
//! evolution by pointwise symbol powers, and spectral projection of states.
//!
//! Conventions, fixed once:
//!   forward (lattice → torus):  ŵ(z_k) = Σ_x w(x) z_k^x, no prefactor;
//!   inverse (torus → lattice):  w(x) = (1/N^d) Σ_k ŵ(z_k) z_k^{−x}.
//! Grid index k maps to the lattice coordinate by the signed wrap: indices
//! above N/2 represent negative coordinates, so coordinates run over
//! (−N/2, N/2] per axis. Nothing here pads grids behind the caller's back;
//! the no-aliasing bounds are exposed instead.

use crate::error::{Error, Result};
use crate::lattice::{LatticeState, PeriodicOperator};
use crate::laurent::{symbol_matrix, SymbolMatrix};
use crate::linalg::EigScratch;
use crate::par;
use crate::spectra::{eigenprojection_field, TorusGrid, Tolerances};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use std::collections::BTreeMap;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Lattice coordinate for a grid index under the signed wrap.
pub fn signed_coord(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Grid index for a lattice coordinate (inverse of [`signed_coord`] on the
/// representable range).
pub fn wrap_index(x: i64, n: usize) -> usize {
    x.rem_euclid(n as i64) as usize
}

/// Per-axis grid length that makes n steps of evolution alias-free on the
/// whole box: from support radius s and step radius σ, the evolved state
/// fits in radius s+nσ, so N ≥ 2(s+nσ)+1 keeps wrapped images apart.
pub fn no_alias_grid_len(support_radius: &[i64], step_radius: &[i64], n: usize) -> Vec<usize> {
    support_radius
        .iter()
        .zip(step_radius)
        .map(|(&s, &sig)| (2 * (s + n as i64 * sig) + 1) as usize)
        .collect()
}

/// Per-axis grid length that makes the value at one site x exact after n
/// steps: the nearest wrapped image of the evolved support must miss x,
/// which needs N ≥ s + nσ + |x| + 1. Much smaller than the full-box bound
/// when only a few sites are read off.
pub fn site_exact_grid_len(
    support_radius: &[i64],
    step_radius: &[i64],
    n: usize,
    site: &[i64],
) -> Vec<usize> {
    support_radius
        .iter()
        .zip(step_radius)
        .zip(site)
        .map(|((&s, &sig), &x)| (s + n as i64 * sig + x.abs() + 1) as usize)
        .collect()
}

/// Dense state on an axis-aligned box of per-axis side lengths `dims`,
/// centered at the origin via the signed wrap (coords in (−N_j/2, N_j/2]).
#[derive(Clone, Debug)]
pub struct BoxState {
    dims: Vec<usize>,
    dim: usize,
    /// flat·D + channel, axis 0 fastest.
    data: Vec<Complex64>,
}

impl BoxState {
    pub fn zeros(dims: Vec<usize>, dim: usize) -> Self {
        let total: usize = dims.iter().product();
        BoxState {
            data: vec![ZERO; total * dim],
            dims,
            dim,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    fn flat_of_site(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.dims.len() {
            return None;
        }
        let mut flat = 0usize;
        let mut stride = 1usize;
        for (&xj, &nj) in x.iter().zip(&self.dims) {
            let hi = (nj / 2) as i64;
            let lo = hi - nj as i64 + 1;
            if xj < lo || xj > hi {
                return None;
            }
            flat += wrap_index(xj, nj) * stride;
            stride *= nj;
        }
        Some(flat)
    }

    /// Amplitude vector at a lattice site, None outside the box.
    pub fn get(&self, x: &[i64]) -> Option<&[Complex64]> {
        self.flat_of_site(x)
            .map(|f| &self.data[f * self.dim..(f + 1) * self.dim])
    }

    pub fn probability(&self, x: &[i64]) -> f64 {
        self.get(x)
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum())
            .unwrap_or(0.0)
    }

    pub fn norm_sq(&self) -> f64 {
        let per: Vec<f64> = self
            .data
            .chunks(self.dim)
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum())
            .collect();
        par::pairwise_sum(&per)
    }

    pub fn from_lattice(w: &LatticeState, dims: &[usize]) -> Result<Self> {
        if dims.len() != w.d() {
            return Err(Error::DimensionMismatch(format!(
                "box has {} axes, state has {}",
                dims.len(),
                w.d()
            )));
        }
        let mut out = BoxState::zeros(dims.to_vec(), w.dim());
        for (site, v) in w.amplitudes() {
            let flat = out.flat_of_site(site).ok_or_else(|| {
                Error::Precondition(format!(
                    "state support at {site:?} does not fit the box {dims:?}"
                ))
            })?;
            for (ch, &c) in v.iter().enumerate() {
                out.data[flat * out.dim + ch] = c;
            }
        }
        Ok(out)
    }

    /// Back to a sparse lattice state, dropping exactly-zero sites.
    pub fn to_lattice(&self) -> LatticeState {
        let d = self.dims.len();
        let mut amp = BTreeMap::new();
        for (flat, v) in self.data.chunks(self.dim).enumerate() {
            if v.iter().all(|c| *c == ZERO) {
                continue;
            }
            let mut rem = flat;
            let mut site = Vec::with_capacity(d);
            for &nj in &self.dims {
                site.push(signed_coord(rem % nj, nj));
                rem /= nj;
            }
            amp.insert(site, crate::linalg::CVec::from_vec(v.to_vec()));
        }
        LatticeState::from_amplitudes(d, self.dim, amp).expect("shapes are consistent")
    }
}

/// Samples of ŵ on a uniform torus grid, channel-innermost like BoxState.
#[derive(Clone, Debug)]
pub struct GridField {
    pub grid: TorusGrid,
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(grid: TorusGrid, dim: usize) -> Self {
        GridField {
            data: vec![ZERO; grid.len() * dim],
            grid,
            dim,
        }
    }

    pub fn point(&self, p: usize) -> &[Complex64] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    /// Grid mean of ‖ŵ(z_k)‖², which Parseval ties to Σ_x ‖w(x)‖².
    pub fn mean_norm_sq(&self) -> f64 {
        let per: Vec<f64> = self
            .data
            .chunks(self.dim)
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum())
            .collect();
        par::pairwise_sum(&per) / self.grid.len() as f64
    }
}

/// Strided in-place multi-axis FFT over channel-innermost data. rustfft's
/// planner caches plans, so repeated transforms of one shape are cheap.
pub struct NdFft {
    planner: FftPlanner<f64>,
}

impl NdFft {
    pub fn new() -> Self {
        NdFft {
            planner: FftPlanner::new(),
        }
    }

    /// Transform every axis of `dims` (channels untouched). `inverse`
    /// selects the e^{+2πi…} kernel; neither direction normalizes.
    pub fn transform(
        &mut self,
        data: &mut [Complex64],
        dims: &[usize],
        channels: usize,
        inverse: bool,
    ) {
        let total: usize = dims.iter().product::<usize>() * channels;
        debug_assert_eq!(data.len(), total);
        let dir = if inverse {
            FftDirection::Inverse
        } else {
            FftDirection::Forward
        };
        let mut axis_stride = channels;
        for &len in dims {
            if len > 1 {
                let fft = self.planner.plan_fft(len, dir);
                let mut line = vec![ZERO; len];
                let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
                let block = axis_stride * len;
                let blocks = total / block;
                for b in 0..blocks {
                    let base0 = b * block;
                    for low in 0..axis_stride {
                        let base = base0 + low;
                        for (t, slot) in line.iter_mut().enumerate() {
                            *slot = data[base + t * axis_stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (t, &v) in line.iter().enumerate() {
                            data[base + t * axis_stride] = v;
                        }
                    }
                }
            }
            axis_stride *= len;
        }
    }
}

impl Default for NdFft {
    fn default() -> Self {
        NdFft::new()
    }
}

/// ŵ(z_k) = Σ_x w(x) z_k^x on the grid. Refuses grids smaller than the box
/// on any axis (the embedding would alias).
pub fn to_fourier(w: &BoxState, grid: &TorusGrid) -> Result<GridField> {
    let d = w.dims().len();
    if grid.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "grid dimension {} vs box dimension {d}",
            grid.d()
        )));
    }
    if w.dims().iter().any(|&nj| nj > grid.n()) {
        return Err(Error::Precondition(format!(
            "grid N={} smaller than box {:?}: aliasing refused",
            grid.n(),
            w.dims()
        )));
    }
    let dim = w.dim();
    let n = grid.n();
    let mut field = GridField::zeros(*grid, dim);
    // scatter: box coordinate → wrapped grid index
    let total: usize = w.dims().iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut gflat = 0usize;
        let mut stride = 1usize;
        for &nj in w.dims() {
            let x = signed_coord(rem % nj, nj);
            rem /= nj;
            gflat += wrap_index(x, n) * stride;
            stride *= n;
        }
        let src = &w.data()[flat * dim..(flat + 1) * dim];
        field.data[gflat * dim..(gflat + 1) * dim].copy_from_slice(src);
    }
    let mut fft = NdFft::new();
    let dims = vec![n; d];
    fft.transform(&mut field.data, &dims, dim, true);
    Ok(field)
}

/// w(x) = (1/N^d) Σ_k ŵ(z_k) z_k^{−x}, gathered on the requested box.
pub fn from_fourier(f: &GridField, box_dims: &[usize]) -> Result<BoxState> {
    let d = f.grid.d();
    if box_dims.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "box has {} axes, grid has {d}",
            box_dims.len()
        )));
    }
    if box_dims.iter().any(|&nj| nj > f.grid.n()) {
        return Err(Error::Precondition(format!(
            "box {box_dims:?} exceeds grid N={}",
            f.grid.n()
        )));
    }
    let n = f.grid.n();
    let dim = f.dim;
    let mut work = f.data.clone();
    let mut fft = NdFft::new();
    let dims = vec![n; d];
    fft.transform(&mut work, &dims, dim, false);
    let scale = 1.0 / (n as f64).powi(d as i32);
    let mut out = BoxState::zeros(box_dims.to_vec(), dim);
    let total: usize = box_dims.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut gflat = 0usize;
        let mut stride = 1usize;
        for &nj in box_dims {
            let x = signed_coord(rem % nj, nj);
            rem /= nj;
            gflat += wrap_index(x, n) * stride;
            stride *= n;
        }
        for ch in 0..dim {
            out.data[flat * dim + ch] = work[gflat * dim + ch] * scale;
        }
    }
    Ok(out)
}

/// Per-point eigendecomposition of the symbol over a grid, reusable across
/// many evolution calls. Points whose factorization residual exceeds
/// 1e−10 are marked for the exact-multiplication fallback.
pub struct SymbolCache {
    pub grid: TorusGrid,
    pub dim: usize,
    /// Unit-normalized eigenvalues, point-major.
    vals: Vec<Complex64>,
    /// Row-major eigenvector matrices, point-major.
    vecs: Vec<Complex64>,
    fallback: Vec<bool>,
    sym: SymbolMatrix,
}

/// Frobenius norm of VΛV† − A, the factorization quality gate.
fn factorization_residual(
    a: &[Complex64],
    vals: &[Complex64],
    vecs: &[Complex64],
    dim: usize,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut r = -a[i * dim + j];
            for k in 0..dim {
                r += vecs[i * dim + k] * vals[k] * vecs[j * dim + k].conj();
            }
            sum += r.norm_sqr();
        }
    }
    sum.sqrt()
}

pub fn build_symbol_cache(
    op: &PeriodicOperator,
    grid: &TorusGrid,
    tol: &Tolerances,
) -> Result<SymbolCache> {
    if op.d() != grid.d() {
        return Err(Error::DimensionMismatch(
            "symbol cache: operator/grid dimension mismatch".into(),
        ));
    }
    let rep = crate::lattice::validate_unitarity(op, tol.unitarity);
    if !rep.passes(tol.unitarity) {
        return Err(Error::NotUnitary {
            max_residual: rep.max_residual,
            tol: tol.unitarity,
        });
    }
    let dim = op.dim();
    let sym = symbol_matrix(op);
    let len = grid.len();

    struct Acc {
        scratch: EigScratch,
        buf: Vec<Complex64>,
        vals: Vec<Complex64>,
        vecs: Vec<Complex64>,
        fallback: Vec<bool>,
    }
    let grid_c = *grid;
    let sym_ref = &sym;
    let acc = par::chunked_fold(
        len,
        || Acc {
            scratch: EigScratch::new(dim),
            buf: vec![ZERO; dim * dim],
            vals: Vec::new(),
            vecs: Vec::new(),
            fallback: Vec::new(),
        },
        |acc, p| {
            let z = grid_c.point(p);
            sym_ref.eval_into(&z, &mut acc.buf);
            acc.scratch.unitary_eig(&acc.buf, false);
            let res =
                factorization_residual(&acc.buf, &acc.scratch.vals, &acc.scratch.vecs, dim);
            acc.fallback.push(res > 1e-10);
            for v in &acc.scratch.vals {
                acc.vals.push(v / v.norm());
            }
            acc.vecs.extend_from_slice(&acc.scratch.vecs);
        },
        |a, b| {
            a.vals.extend_from_slice(&b.vals);
            a.vecs.extend_from_slice(&b.vecs);
            a.fallback.extend_from_slice(&b.fallback);
        },
    );
    Ok(SymbolCache {
        grid: *grid,
        dim,
        vals: acc.vals,
        vecs: acc.vecs,
        fallback: acc.fallback,
        sym,
    })
}

/// Û(z_k)^n f(z_k) at every grid point: eigenbasis powering where the
/// factorization is trusted, iterated multiplication where it is not.
pub fn evolve_cached(cache: &SymbolCache, f: &GridField, n: usize) -> Result<GridField> {
    if f.grid != cache.grid || f.dim != cache.dim {
        return Err(Error::DimensionMismatch(
            "field does not match the symbol cache grid".into(),
        ));
    }
    if n == 0 {
        return Ok(f.clone());
    }
    let dim = cache.dim;
    let len = cache.grid.len();
    assert!(n <= u32::MAX as usize, "step count exceeds supported range");

    struct Acc {
        out: Vec<Complex64>,
        buf: Vec<Complex64>,
        t: Vec<Complex64>,
    }
    let acc = par::chunked_fold(
        len,
        || Acc {
            out: Vec::new(),
            buf: vec![ZERO; dim * dim],
            t: vec![ZERO; dim],
        },
        |acc, p| {
            let src = f.point(p);
            let base = acc.out.len();
            acc.out.resize(base + dim, ZERO);
            let dst = &mut acc.out[base..];
            if cache.fallback[p] {
                // exact semantics: apply the symbol n times
                let z = cache.grid.point(p);
                cache.sym.eval_into(&z, &mut acc.buf);
                let mut cur = src.to_vec();
                let mut next = vec![ZERO; dim];
                for _ in 0..n {
                    for (i, slot) in next.iter_mut().enumerate() {
                        let mut s = ZERO;
                        for (j, &c) in cur.iter().enumerate() {
                            s += acc.buf[i * dim + j] * c;
                        }
                        *slot = s;
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
                dst.copy_from_slice(&cur);
            } else {
                let vals = &cache.vals[p * dim..(p + 1) * dim];
                let vecs = &cache.vecs[p * dim * dim..(p + 1) * dim * dim];
                // t = Λ^n V† f
                for (k, slot) in acc.t.iter_mut().enumerate() {
                    let mut s = ZERO;
                    for i in 0..dim {
                        s += vecs[i * dim + k].conj() * src[i];
                    }
                    *slot = s * vals[k].powu(n as u32);
                }
                for i in 0..dim {
                    let mut s = ZERO;
                    for k in 0..dim {
                        s += vecs[i * dim + k] * acc.t[k];
                    }
                    dst[i] = s;
                }
            }
        },
        |a, b| a.out.extend_from_slice(&b.out),
    );
    Ok(GridField {
        grid: cache.grid,
        dim,
        data: acc.out,
    })
}

/// One-shot n-step evolution on the grid (builds the cache and drops it).
pub fn evolve_fourier(
    op: &PeriodicOperator,
    f: &GridField,
    n: usize,
    tol: &Tolerances,
) -> Result<GridField> {
    let cache = build_symbol_cache(op, &f.grid, tol)?;
    evolve_cached(&cache, f, n)
}

/// π_j w for a certified eigenvalue ω: transform, apply the projector field
/// pointwise, transform back to the state's box.
pub fn project_state(
    op: &PeriodicOperator,
    w: &BoxState,
    grid: &TorusGrid,
    omega: Complex64,
    tol: &Tolerances,
) -> Result<BoxState> {
    let field = eigenprojection_field(op, grid, omega, tol)?;
    let mut f = to_fourier(w, grid)?;
    let dim = w.dim();
    let mut t = vec![ZERO; dim];
    for p in 0..grid.len() {
        let r = field.point(p);
        let src = &f.data[p * dim..(p + 1) * dim];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut s = ZERO;
            for j in 0..dim {
                s += r[i * dim + j] * src[j];
            }
            *slot = s;
        }
        f.data[p * dim..(p + 1) * dim].copy_from_slice(&t);
    }
    from_fourier(&f, w.dims())
}
