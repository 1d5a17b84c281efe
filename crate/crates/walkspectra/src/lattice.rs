//! Operators U = Σ_{α∈S} τ^α C(α) on ℓ²(ℤ^d, ℂ^D) and finitely supported
//! states. Direct-space evolution here is the exactness oracle for the
//! transform-based engines: sparse maps, no grids, no aliasing.

use crate::error::{Error, Result};
use crate::linalg::{adjoint, frob, CMat, CVec};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Lattice site / step / difference vector in ℤ^d.
pub type Site = Vec<i64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A translation-invariant operator given by its step set and coins.
/// Unitarity is a property of the whole family {C(α)}, checked by
/// [`validate_unitarity`]: Σ_{α−β=γ} C(β)*C(α) = δ_{γ,0}·I for every γ in
/// the difference set S−S.
#[derive(Clone, Debug)]
pub struct PeriodicOperator {
    d: usize,
    dim: usize,
    steps: BTreeMap<Site, CMat>,
}

impl PeriodicOperator {
    pub fn new(d: usize, dim: usize, steps: BTreeMap<Site, CMat>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::DimensionMismatch("empty step set".into()));
        }
        for (s, c) in &steps {
            if s.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "step {:?} has length {}, expected d={}",
                    s,
                    s.len(),
                    d
                )));
            }
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "coin at {:?} is {}×{}, expected {dim}×{dim}",
                    s,
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        Ok(PeriodicOperator { d, dim, steps })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Coin dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &BTreeMap<Site, CMat> {
        &self.steps
    }

    /// Max |α_j| over the step set, per axis.
    pub fn step_radius(&self) -> Vec<i64> {
        let mut r = vec![0i64; self.d];
        for s in self.steps.keys() {
            for (j, &x) in s.iter().enumerate() {
                r[j] = r[j].max(x.abs());
            }
        }
        r
    }

    /// The adjoint operator U*: steps −α with coins C(α)*.
    pub fn adjoint_op(&self) -> PeriodicOperator {
        let steps = self
            .steps
            .iter()
            .map(|(s, c)| (s.iter().map(|x| -x).collect(), adjoint(c)))
            .collect();
        PeriodicOperator {
            d: self.d,
            dim: self.dim,
            steps,
        }
    }

    /// Operator product self∘other: coins convolve,
    /// C(α) = Σ_β C_self(β)·C_other(α−β).
    pub fn compose(&self, other: &PeriodicOperator) -> Result<PeriodicOperator> {
        if self.d != other.d || self.dim != other.dim {
            return Err(Error::DimensionMismatch(
                "compose: operators live on different spaces".into(),
            ));
        }
        let mut steps: BTreeMap<Site, CMat> = BTreeMap::new();
        for (b, cb) in &self.steps {
            for (g, cg) in &other.steps {
                let a: Site = b.iter().zip(g).map(|(x, y)| x + y).collect();
                let prod = cb.dot(cg);
                steps
                    .entry(a)
                    .and_modify(|m| *m += &prod)
                    .or_insert(prod);
            }
        }
        PeriodicOperator::new(self.d, self.dim, steps)
    }
}

/// Residuals of the unitarity relations, one per difference vector γ.
#[derive(Clone, Debug)]
pub struct UnitarityReport {
    pub max_residual: f64,
    pub per_gamma: BTreeMap<Site, f64>,
}

impl UnitarityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Check Σ_{α−β=γ} C(β)*C(α) = δ_{γ,0}·I over the difference set S−S.
/// Residuals are Frobenius norms (an upper bound on the operator norm).
pub fn validate_unitarity(op: &PeriodicOperator, _tol: f64) -> UnitarityReport {
    let dim = op.dim();
    let mut sums: BTreeMap<Site, CMat> = BTreeMap::new();
    for (beta, cb) in op.steps() {
        let cbh = adjoint(cb);
        for (alpha, ca) in op.steps() {
            let gamma: Site = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
            let prod = cbh.dot(ca);
            sums.entry(gamma)
                .and_modify(|m| *m += &prod)
                .or_insert(prod);
        }
    }
    let mut per_gamma = BTreeMap::new();
    let mut max_residual: f64 = 0.0;
    for (gamma, mut m) in sums {
        if gamma.iter().all(|&x| x == 0) {
            for i in 0..dim {
                m[(i, i)] -= Complex64::new(1.0, 0.0);
            }
        }
        let r = frob(&m);
        max_residual = max_residual.max(r);
        per_gamma.insert(gamma, r);
    }
    UnitarityReport {
        max_residual,
        per_gamma,
    }
}

/// Finitely supported state w: ℤ^d → ℂ^D.
#[derive(Clone, Debug)]
pub struct LatticeState {
    d: usize,
    dim: usize,
    amp: BTreeMap<Site, CVec>,
}

impl LatticeState {
    pub fn zero(d: usize, dim: usize) -> Self {
        LatticeState {
            d,
            dim,
            amp: BTreeMap::new(),
        }
    }

    /// δ_site ⊗ φ.
    pub fn delta(site: Site, phi: CVec) -> Self {
        let d = site.len();
        let dim = phi.len();
        let mut amp = BTreeMap::new();
        amp.insert(site, phi);
        LatticeState { d, dim, amp }
    }

    pub fn from_amplitudes(d: usize, dim: usize, amp: BTreeMap<Site, CVec>) -> Result<Self> {
        for (s, v) in &amp {
            if s.len() != d || v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "amplitude at {:?}: site length {} / vector length {}, expected {}/{}",
                    s,
                    s.len(),
                    v.len(),
                    d,
                    dim
                )));
            }
        }
        Ok(LatticeState { d, dim, amp })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &BTreeMap<Site, CVec> {
        &self.amp
    }

    pub fn get(&self, x: &[i64]) -> Option<&CVec> {
        self.amp.get(x)
    }

    pub fn norm_sq(&self) -> f64 {
        let per: Vec<f64> = self
            .amp
            .values()
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum())
            .collect();
        crate::par::pairwise_sum(&per)
    }

    /// Drop exactly-zero vectors (never thresholds small amplitudes).
    pub fn prune_zeros(&mut self) {
        self.amp.retain(|_, v| v.iter().any(|c| *c != ZERO));
    }

    /// Max |x_j| over the support, per axis.
    pub fn support_radius(&self) -> Vec<i64> {
        let mut r = vec![0i64; self.d];
        for s in self.amp.keys() {
            for (j, &x) in s.iter().enumerate() {
                r[j] = r[j].max(x.abs());
            }
        }
        r
    }

    /// Translate the state by y.
    pub fn translate(&self, y: &[i64]) -> LatticeState {
        let amp = self
            .amp
            .iter()
            .map(|(s, v)| (s.iter().zip(y).map(|(a, b)| a + b).collect(), v.clone()))
            .collect();
        LatticeState {
            d: self.d,
            dim: self.dim,
            amp,
        }
    }
}

/// One step: (Uw)(x) = Σ_α C(α) w(x−α), i.e. amplitude at y spreads to y+α.
pub fn apply_direct(op: &PeriodicOperator, w: &LatticeState) -> Result<LatticeState> {
    if op.d() != w.d() || op.dim() != w.dim() {
        return Err(Error::DimensionMismatch(
            "apply_direct: operator/state dimensions differ".into(),
        ));
    }
    let mut out: BTreeMap<Site, CVec> = BTreeMap::new();
    for (y, v) in w.amplitudes() {
        for (alpha, c) in op.steps() {
            let x: Site = y.iter().zip(alpha).map(|(a, b)| a + b).collect();
            let cv = c.dot(v);
            match out.get_mut(&x) {
                Some(acc) => *acc += &cv,
                None => {
                    out.insert(x, cv);
                }
            }
        }
    }
    Ok(LatticeState {
        d: w.d(),
        dim: w.dim(),
        amp: out,
    })
}

/// U^n w by iterated application; n = 0 returns the input unchanged.
pub fn evolve_direct(op: &PeriodicOperator, w: &LatticeState, n: usize) -> Result<LatticeState> {
    let mut cur = w.clone();
    for _ in 0..n {
        cur = apply_direct(op, &cur)?;
    }
    Ok(cur)
}

/// ‖w(x)‖² — the probability the walk sits at x.
pub fn probability(w: &LatticeState, x: &[i64]) -> f64 {
    w.get(x)
        .map(|v| v.iter().map(|c| c.norm_sqr()).sum())
        .unwrap_or(0.0)
}
