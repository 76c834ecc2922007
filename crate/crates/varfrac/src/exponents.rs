//! Variable exponent fields and the algebraic relations between them.
//!
//! Exponents are closed-form callables with declared bounds; all checks are
//! sampled, so sups and infs over continuum sets are reported as empirical
//! grid extrema.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Continuous exponent `x -> value` on the closed domain.
///
/// Houses q(x), alpha(x), r(x) and diagonal traces of pair fields.
#[derive(Clone)]
pub struct ScalarExponentField {
    f: ScalarFn,
    declared_inf: f64,
    declared_sup: f64,
}

impl std::fmt::Debug for ScalarExponentField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarExponentField")
            .field("declared_inf", &self.declared_inf)
            .field("declared_sup", &self.declared_sup)
            .finish()
    }
}

impl ScalarExponentField {
    pub fn new<F>(f: F, declared_inf: f64, declared_sup: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ScalarExponentField {
            f: Arc::new(f),
            declared_inf,
            declared_sup,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, c, c)
    }

    /// `a0 + a1 * x`, with bounds taken at the interval endpoints.
    pub fn affine(a0: f64, a1: f64, a: f64, b: f64) -> Self {
        let va = a0 + a1 * a;
        let vb = a0 + a1 * b;
        Self::new(move |x| a0 + a1 * x, va.min(vb), va.max(vb))
    }

    /// Declare bounds from a dense sample of the interval.
    pub fn from_samples<F>(f: F, a: f64, b: f64, samples: usize) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let n = samples.max(2);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let x = a + (b - a) * i as f64 / (n - 1) as f64;
            let v = f(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self::new(f, lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn declared_inf(&self) -> f64 {
        self.declared_inf
    }

    pub fn declared_sup(&self) -> f64 {
        self.declared_sup
    }

    /// Sampled min over the given points.
    pub fn min_on(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.eval(x)).fold(f64::INFINITY, f64::min)
    }

    /// Sampled max over the given points.
    pub fn max_on(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| self.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Verify the declared bounds and finiteness on the given sample points.
    pub fn check_bounds(&self, xs: &[f64], label: &str) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.declared_sup.abs());
        for &x in xs {
            let v = self.eval(x);
            if !v.is_finite() {
                return Err(Error::InvalidExponent(format!(
                    "{label} is non-finite at x = {x}"
                )));
            }
            if v < self.declared_inf - slack || v > self.declared_sup + slack {
                return Err(Error::InvalidExponent(format!(
                    "{label}({x}) = {v} outside declared [{}, {}]",
                    self.declared_inf, self.declared_sup
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric continuous exponent `(x, y) -> value`. Houses p(x,y) and s(x,y).
///
/// Symmetry is enforced by construction: the stored callable `f` is evaluated
/// as `(f(x,y) + f(y,x)) / 2`, so `eval(x,y) == eval(y,x)` bit-exactly.
#[derive(Clone)]
pub struct SymmetricExponentField {
    f: PairFn,
    declared_inf: f64,
    declared_sup: f64,
}

impl std::fmt::Debug for SymmetricExponentField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricExponentField")
            .field("declared_inf", &self.declared_inf)
            .field("declared_sup", &self.declared_sup)
            .finish()
    }
}

impl SymmetricExponentField {
    pub fn new<F>(f: F, declared_inf: f64, declared_sup: f64) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        SymmetricExponentField {
            f: Arc::new(f),
            declared_inf,
            declared_sup,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c, c, c)
    }

    /// Declare bounds from a dense sample of the product of the interval with
    /// itself.
    pub fn from_samples<F>(f: F, a: f64, b: f64, samples: usize) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let n = samples.max(2);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let x = a + (b - a) * i as f64 / (n - 1) as f64;
                let y = a + (b - a) * j as f64 / (n - 1) as f64;
                let v = 0.5 * (f(x, y) + f(y, x));
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Self::new(f, lo, hi)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        // commutative addition makes the swap exact
        0.5 * ((self.f)(x, y) + (self.f)(y, x))
    }

    /// Restriction to the diagonal, `x -> eval(x, x)`.
    pub fn diagonal(&self) -> ScalarExponentField {
        let f = self.f.clone();
        ScalarExponentField::new(
            move |x| f(x, x),
            self.declared_inf,
            self.declared_sup,
        )
    }

    pub fn declared_inf(&self) -> f64 {
        self.declared_inf
    }

    pub fn declared_sup(&self) -> f64 {
        self.declared_sup
    }

    pub fn min_on_pairs(&self, xs: &[f64]) -> f64 {
        let mut lo = f64::INFINITY;
        for &x in xs {
            for &y in xs {
                lo = lo.min(self.eval(x, y));
            }
        }
        lo
    }

    pub fn max_on_pairs(&self, xs: &[f64]) -> f64 {
        let mut hi = f64::NEG_INFINITY;
        for &x in xs {
            for &y in xs {
                hi = hi.max(self.eval(x, y));
            }
        }
        hi
    }

    pub fn check_bounds(&self, xs: &[f64], label: &str) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.declared_sup.abs());
        for &x in xs {
            for &y in xs {
                let v = self.eval(x, y);
                if !v.is_finite() {
                    return Err(Error::InvalidExponent(format!(
                        "{label} is non-finite at ({x}, {y})"
                    )));
                }
                if v < self.declared_inf - slack || v > self.declared_sup + slack {
                    return Err(Error::InvalidExponent(format!(
                        "{label}({x}, {y}) = {v} outside declared [{}, {}]",
                        self.declared_inf, self.declared_sup
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The full exponent data of one problem instance.
#[derive(Debug, Clone)]
pub struct ExponentBundle {
    pub p: SymmetricExponentField,
    pub s: SymmetricExponentField,
    pub alpha: ScalarExponentField,
    pub r: ScalarExponentField,
    pub dim: u32,
}

impl ExponentBundle {
    /// Check the standing hypotheses on grid samples:
    /// `0 < s- <= s+ < 1`, `1 < p- <= p+ < N/s+`, `0 < alpha- <= alpha+ < N`.
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        let xs = grid.nodes();
        let n = self.dim as f64;
        self.p.check_bounds(&xs, "p")?;
        self.s.check_bounds(&xs, "s")?;
        self.alpha.check_bounds(&xs, "alpha")?;
        self.r.check_bounds(&xs, "r")?;

        let s_min = self.s.min_on_pairs(&xs);
        let s_max = self.s.max_on_pairs(&xs);
        if !(s_min > 0.0 && s_max < 1.0) {
            return Err(Error::InvalidBundle(format!(
                "s range [{s_min}, {s_max}] not inside (0, 1)"
            )));
        }
        let p_min = self.p.min_on_pairs(&xs);
        let p_max = self.p.max_on_pairs(&xs);
        if !(p_min > 1.0) {
            return Err(Error::InvalidBundle(format!("p- = {p_min} <= 1")));
        }
        if !(p_max < n / s_max) {
            return Err(Error::InvalidBundle(format!(
                "p+ = {p_max} >= N/s+ = {}",
                n / s_max
            )));
        }
        let a_min = self.alpha.min_on(&xs);
        let a_max = self.alpha.max_on(&xs);
        if !(a_min > 0.0 && a_max < n) {
            return Err(Error::InvalidBundle(format!(
                "alpha range [{a_min}, {a_max}] not inside (0, {n})"
            )));
        }
        Ok(())
    }

    /// Critical Sobolev exponent `p_s*(x) = N p(x,x) / (N - p(x,x) s(x,x))`.
    pub fn critical_exponent(&self, x: f64) -> Result<f64> {
        let n = self.dim as f64;
        let p = self.p.eval(x, x);
        let s = self.s.eval(x, x);
        let denom = n - p * s;
        if denom <= 0.0 {
            return Err(Error::InvalidBundle(format!(
                "N - p(x,x) s(x,x) = {denom} <= 0 at x = {x}"
            )));
        }
        Ok(n * p / denom)
    }

    /// The critical exponent as a field, with bounds sampled on the grid.
    pub fn critical_exponent_field(&self, grid: &Grid1D) -> Result<ScalarExponentField> {
        let xs = grid.nodes();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &xs {
            let v = self.critical_exponent(x)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let p = self.p.clone();
        let s = self.s.clone();
        let n = self.dim as f64;
        Ok(ScalarExponentField::new(
            move |x| n * p.eval(x, x) / (n - p.eval(x, x) * s.eval(x, x)),
            lo,
            hi,
        ))
    }

    /// Upper HLS-critical growth bound `(1 - alpha+/2N) p_s*(x)`.
    pub fn hls_upper_bound_field(&self, grid: &Grid1D) -> Result<ScalarExponentField> {
        let xs = grid.nodes();
        let alpha_sup = self.alpha.max_on(&xs);
        let n = self.dim as f64;
        let factor = 1.0 - alpha_sup / (2.0 * n);
        let ps = self.critical_exponent_field(grid)?;
        let lo = factor * ps.declared_inf();
        let hi = factor * ps.declared_sup();
        Ok(ScalarExponentField::new(move |x| factor * ps.eval(x), lo, hi))
    }
}

/// HLS pairing exponent `sigma_alpha(x) = 2N / (2N - alpha(x))`.
pub fn sigma_alpha(alpha: &ScalarExponentField, x: f64, dim: u32) -> Result<f64> {
    let n = dim as f64;
    let a = alpha.eval(x);
    if !(a > 0.0 && a < n) {
        return Err(Error::InvalidExponent(format!(
            "alpha({x}) = {a} outside (0, {n})"
        )));
    }
    Ok(2.0 * n / (2.0 * n - a))
}

/// Max residual of the identity
/// `1/sigma(x) + (alpha(x)+alpha(y))/2N + 1/sigma(y) = 2` over sampled pairs.
pub fn check_hls_identity(
    alpha: &ScalarExponentField,
    dim: u32,
    pairs: &[(f64, f64)],
) -> Result<f64> {
    let n = dim as f64;
    let mut worst: f64 = 0.0;
    for &(x, y) in pairs {
        let sx = sigma_alpha(alpha, x, dim)?;
        let sy = sigma_alpha(alpha, y, dim)?;
        let lhs = 1.0 / sx + (alpha.eval(x) + alpha.eval(y)) / (2.0 * n) + 1.0 / sy;
        worst = worst.max((lhs - 2.0).abs());
    }
    Ok(worst)
}

/// Outcome of the admissible-band check on r.
#[derive(Debug, Clone)]
pub struct RRangeReport {
    pub ok: bool,
    /// Node of the largest violation, when `ok` is false.
    pub worst_x: f64,
    /// Amount by which r leaves the band `[lower, upper]` at `worst_x`.
    pub worst_violation: f64,
}

/// Check `(1 - alpha-/2N) p(x,x) <= r(x) <= (1 - alpha+/2N) p_s*(x)` at every
/// grid node.
pub fn validate_r_range(bundle: &ExponentBundle, grid: &Grid1D) -> Result<RRangeReport> {
    let xs = grid.nodes();
    let n = bundle.dim as f64;
    let a_min = bundle.alpha.min_on(&xs);
    let a_max = bundle.alpha.max_on(&xs);
    let lo_factor = 1.0 - a_min / (2.0 * n);
    let hi_factor = 1.0 - a_max / (2.0 * n);
    let tol = 1e-12;
    let mut worst_x = xs[0];
    let mut worst: f64 = 0.0;
    for &x in &xs {
        let r = bundle.r.eval(x);
        let lower = lo_factor * bundle.p.eval(x, x);
        let upper = hi_factor * bundle.critical_exponent(x)?;
        let violation = (lower - r).max(r - upper);
        if violation > worst {
            worst = violation;
            worst_x = x;
        }
    }
    Ok(RRangeReport {
        ok: worst <= tol,
        worst_x,
        worst_violation: worst,
    })
}

/// Empirical lower bound for the log-Hoelder constant of a scalar field:
/// max of `|f(x) - f(y)| log(1/|x-y|)` over sampled pairs with `|x-y| < 1/2`.
pub fn log_holder_constant(f: &ScalarExponentField, xs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        for &y in &xs[i + 1..] {
            let d = (x - y).abs();
            if d > 0.0 && d < 0.5 {
                worst = worst.max((f.eval(x) - f.eval(y)).abs() * (1.0 / d).ln());
            }
        }
    }
    worst
}

/// Same estimate for a symmetric pair field, over points of the product grid
/// with the Euclidean distance. The product grid is subsampled to keep the
/// pair count quadratic in the node count.
pub fn log_holder_constant_sym(f: &SymmetricExponentField, xs: &[f64]) -> f64 {
    let stride = (xs.len() / 24).max(1);
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .step_by(stride)
        .flat_map(|&x| xs.iter().step_by(stride).map(move |&y| (x, y)))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, &(x1, y1)) in pts.iter().enumerate() {
        for &(x2, y2) in &pts[i + 1..] {
            let d = ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt();
            if d > 0.0 && d < 0.5 {
                worst = worst.max((f.eval(x1, y1) - f.eval(x2, y2)).abs() * (1.0 / d).ln());
            }
        }
    }
    worst
}

/// Touching-rate condition: for every sampled radius `rho`, the max of `r`
/// on the sphere around `x0` stays below the min of `upper` minus
/// `C0 / (-log rho)^beta`. In 1-D the sphere is the pair `x0 +- rho`.
pub fn check_tr_condition(
    r: &ScalarExponentField,
    upper: &ScalarExponentField,
    x0: f64,
    beta: f64,
    c0: f64,
    eta: f64,
    rho_samples: &[f64],
) -> Result<bool> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidExponent(format!(
            "eta = {eta} must lie in (0, 1) so that log rho < 0"
        )));
    }
    if !(c0 > 0.0) {
        return Err(Error::InvalidExponent("C0 must be positive".into()));
    }
    for &rho in rho_samples {
        if !(rho > 0.0 && rho < eta) {
            return Err(Error::InvalidExponent(format!(
                "rho sample {rho} outside (0, {eta})"
            )));
        }
        let sphere = [x0 - rho, x0 + rho];
        let r_max = sphere.iter().map(|&x| r.eval(x)).fold(f64::NEG_INFINITY, f64::max);
        let u_min = sphere.iter().map(|&x| upper.eval(x)).fold(f64::INFINITY, f64::min);
        let margin = c0 / (-rho.ln()).powf(beta);
        if r_max > u_min - margin {
            return Ok(false);
        }
    }
    Ok(true)
}
