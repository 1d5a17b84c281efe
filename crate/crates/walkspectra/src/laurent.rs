//! Laurent polynomials in z = (z_1,…,z_d), polynomials in ζ over that ring,
//! and the determinant machinery built on them: characteristic polynomials,
//! synthetic division by (ζ−λ), Sylvester resultants and discriminants.
//!
//! Everything here is exact-structure arithmetic: coefficients are complex
//! floats, but the exponent bookkeeping is integral and no basis truncation
//! happens anywhere. The only lossy step is dust pruning after arithmetic.

use crate::error::{Error, Result};
use crate::lattice::PeriodicOperator;
use crate::linalg::CMat;
use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};

/// Coefficients with magnitude at or below this are dropped after arithmetic.
/// Absolute threshold: inputs here are symbols of unitary operators and their
/// derived quantities, whose natural scale is O(1).
pub const PRUNE_EPS: f64 = 1e-13;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Finite sum Σ c_α z^α with α ∈ ℤ^d. The zero polynomial has no terms.
#[derive(Clone, Debug)]
pub struct LaurentPoly {
    d: usize,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl LaurentPoly {
    pub fn zero(d: usize) -> Self {
        LaurentPoly {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: Complex64) -> Self {
        let mut p = LaurentPoly::zero(d);
        if c.norm() > PRUNE_EPS {
            p.terms.insert(vec![0; d], c);
        }
        p
    }

    pub fn one(d: usize) -> Self {
        LaurentPoly::constant(d, ONE)
    }

    pub fn monomial(exp: Vec<i64>, c: Complex64) -> Self {
        let d = exp.len();
        let mut p = LaurentPoly::zero(d);
        if c.norm() > PRUNE_EPS {
            p.terms.insert(exp, c);
        }
        p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_EPS);
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.d, other.d, "laurent add: dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(ZERO) += c;
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.d, other.d, "laurent sub: dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(ZERO) -= c;
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.d, other.d, "laurent mul: dimension mismatch");
        let mut out = LaurentPoly::zero(self.d);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *out.terms.entry(e).or_insert(ZERO) += ca * cb;
            }
        }
        out.prune();
        out
    }

    pub fn scale(&self, c: Complex64) -> LaurentPoly {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.prune();
        out
    }

    /// p*(z) = conj applied on the torus: coefficient c at α becomes c̄ at −α,
    /// so that p*(z) = conj(p(z)) whenever |z_j| = 1.
    pub fn adjoint(&self) -> LaurentPoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.iter().map(|x| -x).collect(), c.conj()))
            .collect();
        LaurentPoly { d: self.d, terms }
    }

    /// ∂/∂θ_j along z_j = e^{iθ_j}: each term picks up a factor iα_j.
    pub fn angular_derivative(&self, axis: usize) -> LaurentPoly {
        assert!(axis < self.d, "axis out of range");
        let mut out = LaurentPoly::zero(self.d);
        for (e, c) in &self.terms {
            let f = Complex64::new(0.0, e[axis] as f64) * c;
            if f.norm() > PRUNE_EPS {
                out.terms.insert(e.clone(), f);
            }
        }
        out
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "eval point has {} coordinates, polynomial has d={}",
                z.len(),
                self.d
            )));
        }
        if z.contains(&ZERO) {
            return Err(Error::Domain("evaluation at a zero coordinate".into()));
        }
        Ok(self.eval_unchecked(z))
    }

    /// Evaluation without the coordinate checks; hot loops evaluate the same
    /// polynomial at many torus points and validate once up front.
    pub fn eval_unchecked(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (j, &k) in e.iter().enumerate() {
                if k != 0 {
                    m *= z[j].powi(k as i32);
                }
            }
            acc += m;
        }
        acc
    }
}

/// Element of R_d[ζ]: f = Σ_k coeffs[k]·ζ^{deg−k}, so coeffs[0] is the
/// leading coefficient.
#[derive(Clone, Debug)]
pub struct ZetaPoly {
    coeffs: Vec<LaurentPoly>,
}

impl ZetaPoly {
    pub fn new(coeffs: Vec<LaurentPoly>) -> Self {
        assert!(!coeffs.is_empty(), "zeta polynomial needs coefficients");
        ZetaPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[LaurentPoly] {
        &self.coeffs
    }

    pub fn leading(&self) -> &LaurentPoly {
        &self.coeffs[0]
    }

    pub fn d(&self) -> usize {
        self.coeffs[0].d()
    }

    /// True when the leading coefficient is the constant 1 within tol.
    pub fn is_monic(&self, tol: f64) -> bool {
        self.coeffs[0]
            .sub(&LaurentPoly::one(self.d()))
            .max_coeff_abs()
            <= tol
    }

    pub fn eval(&self, zeta: Complex64, z: &[Complex64]) -> Result<Complex64> {
        let mut acc = ZERO;
        for p in &self.coeffs {
            acc = acc * zeta + p.eval(z)?;
        }
        Ok(acc)
    }

    pub fn eval_unchecked(&self, zeta: Complex64, z: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for p in &self.coeffs {
            acc = acc * zeta + p.eval_unchecked(z);
        }
        acc
    }

    /// ∂f/∂ζ. Degree drops by one; the zero polynomial comes back as the
    /// constant 0 (degree 0) for degree-0 input.
    pub fn derivative_zeta(&self) -> ZetaPoly {
        let m = self.degree();
        if m == 0 {
            return ZetaPoly::new(vec![LaurentPoly::zero(self.d())]);
        }
        let coeffs = (0..m)
            .map(|i| {
                self.coeffs[i].scale(Complex64::new((m - i) as f64, 0.0))
            })
            .collect();
        ZetaPoly::new(coeffs)
    }

    /// ∂/∂θ_j applied to every ζ-coefficient.
    pub fn angular_derivative(&self, axis: usize) -> ZetaPoly {
        ZetaPoly::new(
            self.coeffs
                .iter()
                .map(|p| p.angular_derivative(axis))
                .collect(),
        )
    }

    pub fn mul(&self, other: &ZetaPoly) -> ZetaPoly {
        let d = self.d();
        let m = self.degree();
        let n = other.degree();
        let mut coeffs = vec![LaurentPoly::zero(d); m + n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        ZetaPoly::new(coeffs)
    }

    pub fn add(&self, other: &ZetaPoly) -> ZetaPoly {
        // align by ζ-power: index from the back
        let d = self.d();
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![LaurentPoly::zero(d); len];
        for (i, a) in self.coeffs.iter().rev().enumerate() {
            let k = len - 1 - i;
            coeffs[k] = coeffs[k].add(a);
        }
        for (i, b) in other.coeffs.iter().rev().enumerate() {
            let k = len - 1 - i;
            coeffs[k] = coeffs[k].add(b);
        }
        ZetaPoly::new(coeffs)
    }

    pub fn sub(&self, other: &ZetaPoly) -> ZetaPoly {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> ZetaPoly {
        ZetaPoly::new(self.coeffs.iter().map(|p| p.scale(c)).collect())
    }

    /// Max coefficient magnitude across all ζ-coefficients.
    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|p| p.max_coeff_abs())
            .fold(0.0, f64::max)
    }
}

/// The operator's symbol Û(z) = Σ_α z^α C(α) as a D×D Laurent-matrix.
#[derive(Clone, Debug)]
pub struct SymbolMatrix {
    d: usize,
    dim: usize,
    entries: Vec<LaurentPoly>, // row-major
}

impl SymbolMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.dim + j]
    }

    /// Û(z) as a numeric matrix.
    pub fn eval(&self, z: &[Complex64]) -> Result<CMat> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "symbol eval: point has {} coordinates, expected {}",
                z.len(),
                self.d
            )));
        }
        if z.contains(&ZERO) {
            return Err(Error::Domain("evaluation at a zero coordinate".into()));
        }
        Ok(self.eval_unchecked(z))
    }

    pub fn eval_unchecked(&self, z: &[Complex64]) -> CMat {
        CMat::from_shape_fn((self.dim, self.dim), |(i, j)| {
            self.entry(i, j).eval_unchecked(z)
        })
    }

    /// Write Û(z) into a caller-provided row-major buffer of length D².
    pub fn eval_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.dim * self.dim);
        for (slot, e) in out.iter_mut().zip(&self.entries) {
            *slot = e.eval_unchecked(z);
        }
    }
}

/// Assemble the symbol from the operator's coins: entry (i,j) = Σ_α C(α)_{ij} z^α.
pub fn symbol_matrix(op: &PeriodicOperator) -> SymbolMatrix {
    let d = op.d();
    let dim = op.dim();
    let mut entries = vec![LaurentPoly::zero(d); dim * dim];
    for (alpha, c) in op.steps() {
        for i in 0..dim {
            for j in 0..dim {
                let coeff = c[(i, j)];
                if coeff.norm() > PRUNE_EPS {
                    entries[i * dim + j] = entries[i * dim + j]
                        .add(&LaurentPoly::monomial(alpha.clone(), coeff));
                }
            }
        }
    }
    SymbolMatrix { d, dim, entries }
}

fn lmat_mul(a: &[LaurentPoly], b: &[LaurentPoly], dim: usize, d: usize) -> Vec<LaurentPoly> {
    let mut out = vec![LaurentPoly::zero(d); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = &a[i * dim + k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..dim {
                let bkj = &b[k * dim + j];
                if bkj.is_zero() {
                    continue;
                }
                out[i * dim + j] = out[i * dim + j].add(&aik.mul(bkj));
            }
        }
    }
    out
}

fn lmat_trace(a: &[LaurentPoly], dim: usize, d: usize) -> LaurentPoly {
    let mut t = LaurentPoly::zero(d);
    for i in 0..dim {
        t = t.add(&a[i * dim + i]);
    }
    t
}

/// χ(ζ,z) = det(ζI − Û(z)) by the trace recursion
/// M_1 = A, c_k = −tr(M_k)/k, M_{k+1} = A(M_k + c_k I),
/// which needs only ring operations (no division by ring elements).
pub fn char_poly(sym: &SymbolMatrix) -> ZetaPoly {
    let dim = sym.dim;
    let d = sym.d;
    let a = &sym.entries;
    let mut coeffs = Vec::with_capacity(dim + 1);
    coeffs.push(LaurentPoly::one(d));
    let mut m = a.clone();
    for k in 1..=dim {
        let c = lmat_trace(&m, dim, d).scale(Complex64::new(-1.0 / k as f64, 0.0));
        coeffs.push(c.clone());
        if k < dim {
            for i in 0..dim {
                m[i * dim + i] = m[i * dim + i].add(&c);
            }
            m = lmat_mul(a, &m, dim, d);
        }
    }
    ZetaPoly::new(coeffs)
}

/// Reference determinant expansion of det(ζI − Û). Exponential in D; meant
/// for cross-checking char_poly on small coin spaces.
pub fn char_poly_cofactor(sym: &SymbolMatrix) -> ZetaPoly {
    let dim = sym.dim;
    let d = sym.d;
    // matrix of ζ-polynomials: diag ζ − u_ii, off-diag −u_ij
    let entries: Vec<ZetaPoly> = (0..dim * dim)
        .map(|idx| {
            let (i, j) = (idx / dim, idx % dim);
            let u = &sym.entries[idx];
            if i == j {
                ZetaPoly::new(vec![LaurentPoly::one(d), u.scale(-ONE)])
            } else {
                ZetaPoly::new(vec![u.scale(-ONE)])
            }
        })
        .collect();
    fn det(entries: &[ZetaPoly], rows: &[usize], cols: &[usize], dim: usize, d: usize) -> ZetaPoly {
        if rows.len() == 1 {
            return entries[rows[0] * dim + cols[0]].clone();
        }
        let mut acc = ZetaPoly::new(vec![LaurentPoly::zero(d)]);
        let r = rows[0];
        let rest: Vec<usize> = rows[1..].to_vec();
        for (k, &c) in cols.iter().enumerate() {
            let mut sub_cols = cols.to_vec();
            sub_cols.remove(k);
            let minor = det(entries, &rest, &sub_cols, dim, d);
            let sign = if k % 2 == 0 { ONE } else { -ONE };
            acc = acc.add(&entries[r * dim + c].mul(&minor).scale(sign));
        }
        acc
    }
    let all: Vec<usize> = (0..dim).collect();
    det(&entries, &all, &all, dim, d)
}

/// Synthetic division of f by (ζ−λ): q_0 = p_0, q_k = p_k + λq_{k−1},
/// remainder r = p_deg + λq_{deg−1}. f = (ζ−λ)q + r exactly.
pub fn divide_by_root(f: &ZetaPoly, lambda: Complex64) -> (ZetaPoly, LaurentPoly) {
    assert!(f.degree() >= 1, "divide_by_root needs degree ≥ 1");
    let n = f.degree();
    let mut q: Vec<LaurentPoly> = Vec::with_capacity(n);
    q.push(f.coeffs[0].clone());
    for k in 1..n {
        q.push(f.coeffs[k].add(&q[k - 1].scale(lambda)));
    }
    let r = f.coeffs[n].add(&q[n - 1].scale(lambda));
    (ZetaPoly::new(q), r)
}

/// Sylvester resultant of f and g in ζ, as a Laurent polynomial in z. The
/// convention matches res(f,g) = lc(f)^{deg g}·lc(g)^{deg f}·Π(root diffs):
/// res(ζ²−1, 2ζ) = −4.
pub fn resultant_zeta(f: &ZetaPoly, g: &ZetaPoly) -> Result<LaurentPoly> {
    let m = f.degree();
    let n = g.degree();
    if m < 1 || n < 1 {
        return Err(Error::Domain(
            "resultant needs both degrees ≥ 1".into(),
        ));
    }
    if f.leading().is_zero() || g.leading().is_zero() {
        return Err(Error::Domain(
            "resultant: leading coefficient is identically zero".into(),
        ));
    }
    let d = f.d();
    let size = m + n;
    // memoization keys the column subset into a u32 bitmask
    assert!(size <= 16, "resultant: Sylvester matrix larger than supported");
    // rows 0..n carry f's coefficients, rows n..n+m carry g's
    let zero = LaurentPoly::zero(d);
    let mut rows: Vec<Vec<LaurentPoly>> = vec![vec![zero; size]; size];
    for i in 0..n {
        for (k, c) in f.coeffs.iter().enumerate() {
            rows[i][i + k] = c.clone();
        }
    }
    for j in 0..m {
        for (k, c) in g.coeffs.iter().enumerate() {
            rows[n + j][j + k] = c.clone();
        }
    }
    // expand along rows in order; submatrix identified by its column mask
    let full: u32 = (1u32 << size) - 1;
    let mut memo: HashMap<u32, LaurentPoly> = HashMap::new();
    fn det(
        rows: &[Vec<LaurentPoly>],
        size: usize,
        mask: u32,
        d: usize,
        memo: &mut HashMap<u32, LaurentPoly>,
    ) -> LaurentPoly {
        if mask == 0 {
            return LaurentPoly::one(d);
        }
        if let Some(v) = memo.get(&mask) {
            return v.clone();
        }
        let row = size - mask.count_ones() as usize;
        let mut acc = LaurentPoly::zero(d);
        let mut sign = 1.0;
        for col in 0..size {
            if mask & (1 << col) == 0 {
                continue;
            }
            let e = &rows[row][col];
            if !e.is_zero() {
                let sub = det(rows, size, mask & !(1 << col), d, memo);
                acc = acc.add(&e.mul(&sub).scale(Complex64::new(sign, 0.0)));
            }
            sign = -sign;
        }
        memo.insert(mask, acc.clone());
        acc
    }
    Ok(det(&rows, size, full, d, &mut memo))
}

/// Discriminant of a monic f: (−1)^{m(m−1)/2}·res(f, ∂_ζf), normalized so
/// that ζ²+bζ+c gives b²−4c. Vanishes identically iff f has a repeated
/// factor over the Laurent field.
pub fn discriminant(f: &ZetaPoly) -> Result<LaurentPoly> {
    let m = f.degree();
    if m < 2 {
        return Err(Error::Domain("discriminant needs degree ≥ 2".into()));
    }
    if !f.is_monic(1e-12) {
        return Err(Error::Domain("discriminant expects a monic input".into()));
    }
    let res = resultant_zeta(f, &f.derivative_zeta())?;
    let sign = if (m * (m - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(res.scale(Complex64::new(sign, 0.0)))
}
