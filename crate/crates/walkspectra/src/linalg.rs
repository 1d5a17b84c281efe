//! Dense complex linear algebra for small matrices (D ≤ 8 in practice).
//!
//! The eigensolver is a cyclic complex Jacobi iteration for Hermitian
//! matrices, plus a two-stage joint diagonalization for unitary (normal)
//! matrices: diagonalize H = (A+A*)/2, then re-diagonalize K = (A−A*)/2i
//! inside each near-degenerate H-eigenspace. H and K commute for normal A,
//! so the second stage resolves exactly the subspaces where stage one is
//! ill-conditioned. Eigenvalues of the unitary input are recovered as
//! Rayleigh quotients and the columns are orthonormal by construction.
//!
//! Hot paths run on raw row-major slices with caller-owned scratch to keep
//! per-call allocation out of grid streams; ndarray wrappers sit on top.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Off-diagonal convergence target relative to the Frobenius norm.
const JACOBI_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 60;
/// Stage-one eigenvalues closer than this are treated as one H-cluster and
/// resolved by stage two. Gaps above it leave at most ~1e-15/1e-5 = 1e-10
/// cross-contamination in the stage-one vectors.
const STAGE_CLUSTER_TOL: f64 = 1e-5;

#[inline]
fn at(i: usize, j: usize, n: usize) -> usize {
    i * n + j
}

fn frob_slice(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn off_diag_norm(a: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[at(i, j, n)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi on a Hermitian matrix, in place. `a` is destroyed (left
/// near-diagonal), `v` receives the accumulated unitary (columns are
/// eigenvectors), `vals` the eigenvalues sorted ascending.
pub fn herm_eig_inplace(a: &mut [Complex64], v: &mut [Complex64], vals: &mut [f64], n: usize) {
    debug_assert_eq!(a.len(), n * n);
    v.fill(ZERO);
    for i in 0..n {
        v[at(i, i, n)] = ONE;
    }
    let scale = frob_slice(a).max(f64::MIN_POSITIVE);
    let target = JACOBI_TOL * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diag_norm(a, n) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[at(p, q, n)];
                let r = apq.norm();
                if r <= target / (n as f64) {
                    continue;
                }
                let u = apq / r; // e^{iφ}
                let app = a[at(p, p, n)].re;
                let aqq = a[at(q, q, n)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let su = u * s; // s·e^{iφ}
                let suc = su.conj();

                // A ← J†AJ with J[p][p]=c, J[p][q]=s, J[q][p]=−s·ū, J[q][q]=c·ū.
                for i in 0..n {
                    let aip = a[at(i, p, n)];
                    let aiq = a[at(i, q, n)];
                    a[at(i, p, n)] = aip * c - aiq * suc;
                    a[at(i, q, n)] = aip * s + aiq * (u.conj() * c);
                }
                for j in 0..n {
                    let apj = a[at(p, j, n)];
                    let aqj = a[at(q, j, n)];
                    a[at(p, j, n)] = apj * c - aqj * su;
                    a[at(q, j, n)] = apj * s + aqj * (u * c);
                }
                // keep the diagonal exactly real against rounding drift
                a[at(p, p, n)] = Complex64::new(a[at(p, p, n)].re, 0.0);
                a[at(q, q, n)] = Complex64::new(a[at(q, q, n)].re, 0.0);
                for i in 0..n {
                    let vip = v[at(i, p, n)];
                    let viq = v[at(i, q, n)];
                    v[at(i, p, n)] = vip * c - viq * suc;
                    v[at(i, q, n)] = vip * s + viq * (u.conj() * c);
                }
            }
        }
    }

    for i in 0..n {
        vals[i] = a[at(i, i, n)].re;
    }
    // ascending eigenvalue order, columns permuted alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    apply_column_permutation(v, vals, &order, n);
}

fn apply_column_permutation(v: &mut [Complex64], vals: &mut [f64], order: &[usize], n: usize) {
    let vv: Vec<Complex64> = v.to_vec();
    let vs: Vec<f64> = vals.to_vec();
    for (newj, &oldj) in order.iter().enumerate() {
        vals[newj] = vs[oldj];
        for i in 0..n {
            v[at(i, newj, n)] = vv[at(i, oldj, n)];
        }
    }
}

/// Scratch buffers for repeated unitary eigendecompositions of one size.
pub struct EigScratch {
    n: usize,
    h: Vec<Complex64>,
    k: Vec<Complex64>,
    q: Vec<Complex64>,
    hvals: Vec<f64>,
    sub: Vec<Complex64>,
    subv: Vec<Complex64>,
    subvals: Vec<f64>,
    tmp: Vec<Complex64>,
    /// eigenvalues sorted by principal argument
    pub vals: Vec<Complex64>,
    /// column j of `vecs` (row-major n×n) is the eigenvector for `vals[j]`
    pub vecs: Vec<Complex64>,
}

impl EigScratch {
    pub fn new(n: usize) -> Self {
        EigScratch {
            n,
            h: vec![ZERO; n * n],
            k: vec![ZERO; n * n],
            q: vec![ZERO; n * n],
            hvals: vec![0.0; n],
            sub: vec![ZERO; n * n],
            subv: vec![ZERO; n * n],
            subvals: vec![0.0; n],
            tmp: vec![ZERO; n * n],
            vals: vec![ZERO; n],
            vecs: vec![ZERO; n * n],
        }
    }

    /// Eigendecomposition of a normal (in practice unitary) matrix given
    /// row-major. Fills `vals`/`vecs`; returns the largest eigenpair
    /// residual ‖Av − λv‖ when `with_residual` is set (else 0.0).
    pub fn unitary_eig(&mut self, a: &[Complex64], with_residual: bool) -> f64 {
        let n = self.n;
        debug_assert_eq!(a.len(), n * n);
        // H = (A+A*)/2, K = (A−A*)/(2i); K_ij = (a_ij − conj(a_ji))/(2i)
        for i in 0..n {
            for j in 0..n {
                let x = a[at(i, j, n)];
                let y = a[at(j, i, n)].conj();
                self.h[at(i, j, n)] = (x + y) * 0.5;
                self.k[at(i, j, n)] = (x - y) * Complex64::new(0.0, -0.5);
            }
        }
        herm_eig_inplace(&mut self.h, &mut self.q, &mut self.hvals, n);

        // stage two inside each near-degenerate H-cluster
        let mut lo = 0;
        while lo < n {
            let mut hi = lo + 1;
            while hi < n && self.hvals[hi] - self.hvals[hi - 1] <= STAGE_CLUSTER_TOL {
                hi += 1;
            }
            let m = hi - lo;
            if m > 1 {
                // sub = Qc† K Qc
                for i in 0..n {
                    for cj in 0..m {
                        let mut acc = ZERO;
                        for l in 0..n {
                            acc += self.k[at(i, l, n)] * self.q[at(l, lo + cj, n)];
                        }
                        self.tmp[at(i, cj, m)] = acc;
                    }
                }
                for ci in 0..m {
                    for cj in 0..m {
                        let mut acc = ZERO;
                        for l in 0..n {
                            acc += self.q[at(l, lo + ci, n)].conj() * self.tmp[at(l, cj, m)];
                        }
                        self.sub[at(ci, cj, m)] = acc;
                    }
                }
                herm_eig_inplace(
                    &mut self.sub[..m * m],
                    &mut self.subv[..m * m],
                    &mut self.subvals[..m],
                    m,
                );
                // Qc ← Qc·W
                for i in 0..n {
                    for cj in 0..m {
                        let mut acc = ZERO;
                        for l in 0..m {
                            acc += self.q[at(i, lo + l, n)] * self.subv[at(l, cj, m)];
                        }
                        self.tmp[at(i, cj, m)] = acc;
                    }
                }
                for i in 0..n {
                    for cj in 0..m {
                        self.q[at(i, lo + cj, n)] = self.tmp[at(i, cj, m)];
                    }
                }
            }
            lo = hi;
        }

        // Rayleigh quotients λ_j = q_j† A q_j
        for j in 0..n {
            let mut lam = ZERO;
            for i in 0..n {
                let mut av = ZERO;
                for l in 0..n {
                    av += a[at(i, l, n)] * self.q[at(l, j, n)];
                }
                self.tmp[at(i, j, n)] = av;
                lam += self.q[at(i, j, n)].conj() * av;
            }
            self.vals[j] = lam;
        }
        let mut residual = 0.0f64;
        if with_residual {
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += (self.tmp[at(i, j, n)] - self.vals[j] * self.q[at(i, j, n)]).norm_sqr();
                }
                residual = residual.max(s.sqrt());
            }
        }

        // order by principal argument (ascending in (−π, π])
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            self.vals[i]
                .arg()
                .partial_cmp(&self.vals[j].arg())
                .unwrap()
        });
        let stash: Vec<Complex64> = order.iter().map(|&o| self.vals[o]).collect();
        self.vals.copy_from_slice(&stash);
        for i in 0..n {
            for (newj, &oldj) in order.iter().enumerate() {
                self.vecs[at(i, newj, n)] = self.q[at(i, oldj, n)];
            }
        }
        residual
    }
}

/// Hermitian eigendecomposition. Returns ascending eigenvalues and the
/// unitary of column eigenvectors.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let mut buf: Vec<Complex64> = a.iter().copied().collect();
    let mut v = vec![ZERO; n * n];
    let mut vals = vec![0.0; n];
    herm_eig_inplace(&mut buf, &mut v, &mut vals, n);
    (vals, CMat::from_shape_vec((n, n), v).unwrap())
}

pub struct UnitaryEig {
    /// eigenvalues sorted by principal argument
    pub vals: Vec<Complex64>,
    /// column j is the eigenvector of vals[j]
    pub vecs: CMat,
    /// max over j of ‖Av_j − λ_j v_j‖
    pub max_residual: f64,
}

/// Eigendecomposition of a unitary (normal) matrix.
pub fn unitary_eig(a: &CMat) -> UnitaryEig {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let buf: Vec<Complex64> = a.iter().copied().collect();
    let mut scratch = EigScratch::new(n);
    let max_residual = scratch.unitary_eig(&buf, true);
    UnitaryEig {
        vals: scratch.vals.clone(),
        vecs: CMat::from_shape_vec((n, n), scratch.vecs.clone()).unwrap(),
        max_residual,
    }
}

pub fn adjoint(a: &CMat) -> CMat {
    let mut out = CMat::zeros((a.ncols(), a.nrows()));
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solve A·X = B by Gaussian elimination with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch("solve: shape mismatch".into()));
    }
    let m = b.ncols();
    let mut aa: Vec<Complex64> = a.iter().copied().collect();
    let mut bb: Vec<Complex64> = b.iter().copied().collect();
    for col in 0..n {
        let mut piv = col;
        let mut best = aa[at(col, col, n)].norm();
        for r in (col + 1)..n {
            let v = aa[at(r, col, n)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::Numeric("singular matrix in solve".into()));
        }
        if piv != col {
            for j in 0..n {
                aa.swap(at(col, j, n), at(piv, j, n));
            }
            for j in 0..m {
                bb.swap(at(col, j, m), at(piv, j, m));
            }
        }
        let d = aa[at(col, col, n)];
        for r in (col + 1)..n {
            let f = aa[at(r, col, n)] / d;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = aa[at(col, j, n)];
                aa[at(r, j, n)] -= f * v;
            }
            for j in 0..m {
                let v = bb[at(col, j, m)];
                bb[at(r, j, m)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = aa[at(col, col, n)];
        for j in 0..m {
            let mut acc = bb[at(col, j, m)];
            for l in (col + 1)..n {
                acc -= aa[at(col, l, n)] * bb[at(l, j, m)];
            }
            bb[at(col, j, m)] = acc / d;
        }
    }
    Ok(CMat::from_shape_vec((n, m), bb).unwrap())
}

/// Modified Gram–Schmidt (two passes) on the listed columns, in place.
/// The selected columns must be linearly independent.
pub fn orthonormalize_columns(v: &mut [Complex64], n: usize, cols: &[usize]) {
    for _pass in 0..2 {
        for (idx, &j) in cols.iter().enumerate() {
            for &l in &cols[..idx] {
                let mut proj = ZERO;
                for i in 0..n {
                    proj += v[at(i, l, n)].conj() * v[at(i, j, n)];
                }
                for i in 0..n {
                    let u = v[at(i, l, n)];
                    v[at(i, j, n)] -= proj * u;
                }
            }
            let mut nrm = 0.0;
            for i in 0..n {
                nrm += v[at(i, j, n)].norm_sqr();
            }
            let nrm = nrm.sqrt();
            for i in 0..n {
                v[at(i, j, n)] /= nrm;
            }
        }
    }
}
