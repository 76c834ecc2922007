//! Shared Luxemburg-norm machinery.
//!
//! Every modular in this crate has the shape `rho(u/lambda) = sum_k c_k *
//! lambda^{-e_k}` with coefficients `c_k >= 0` and exponents `e_k > 1`. The
//! coefficients are stored as logarithms so that large amplitudes combined
//! with large exponents stay representable; evaluation saturates to infinity
//! instead of overflowing.

use crate::error::{Error, Result};

/// Natural-log threshold beyond which `exp` would overflow an f64.
const LN_SATURATE: f64 = 709.0;

/// A modular in the scaling variable: `value(lambda) = sum exp(lc_k - e_k ln lambda)`.
#[derive(Debug, Clone, Default)]
pub struct ModularTerms {
    /// (log-coefficient, exponent) pairs; zero-coefficient terms are omitted.
    terms: Vec<(f64, f64)>,
}

impl ModularTerms {
    pub fn new() -> Self {
        ModularTerms { terms: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        ModularTerms {
            terms: Vec::with_capacity(n),
        }
    }

    /// Push a term `coef * lambda^{-exponent}` given `ln(coef)`.
    pub fn push_log(&mut self, log_coef: f64, exponent: f64) {
        debug_assert!(exponent > 0.0);
        if log_coef.is_finite() || log_coef == f64::NEG_INFINITY {
            if log_coef > f64::NEG_INFINITY {
                self.terms.push((log_coef, exponent));
            }
        } else {
            // propagate NaN/inf so evaluation reports saturation
            self.terms.push((log_coef, exponent));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn extend(&mut self, other: &ModularTerms) {
        self.terms.extend_from_slice(&other.terms);
    }

    /// Evaluate the modular at `lambda > 0`. Saturates to `+inf` on overflow.
    pub fn eval(&self, lambda: f64) -> f64 {
        debug_assert!(lambda > 0.0);
        let ln_lambda = lambda.ln();
        let mut acc = 0.0;
        for &(lc, e) in &self.terms {
            let t = lc - e * ln_lambda;
            if t > LN_SATURATE {
                return f64::INFINITY;
            }
            acc += t.exp();
        }
        acc
    }

    /// Evaluate at `lambda = 1`, reporting the first saturating term index.
    pub fn eval_at_one(&self) -> std::result::Result<f64, usize> {
        let mut acc = 0.0;
        for (k, &(lc, _)) in self.terms.iter().enumerate() {
            if lc > LN_SATURATE {
                return Err(k);
            }
            acc += lc.exp();
        }
        Ok(acc)
    }
}

/// The unique `lambda > 0` with `terms.eval(lambda) = 1`, by bisection.
///
/// The map is continuous and strictly decreasing when at least one term is
/// present; an empty term list (the zero function) returns 0. The initial
/// bracket `[1e-12, 1e12]` is expanded geometrically until it straddles 1.
pub fn luxemburg_norm(terms: &ModularTerms, tol: f64, max_iters: usize) -> Result<f64> {
    if terms.is_empty() {
        return Ok(0.0);
    }
    if !(tol > 0.0) {
        return Err(Error::Config("luxemburg tolerance must be positive".into()));
    }

    let mut lo = 1e-12_f64;
    let mut hi = 1e12_f64;
    // rho(lo) must be >= 1 and rho(hi) <= 1
    while terms.eval(lo) < 1.0 {
        lo /= 16.0;
        if lo < 1e-290 {
            return Err(Error::BracketExhausted(
                "modular stays below 1 for arbitrarily small lambda".into(),
            ));
        }
    }
    while terms.eval(hi) > 1.0 {
        hi *= 16.0;
        if hi > 1e290 {
            return Err(Error::BracketExhausted(
                "modular stays above 1 for arbitrarily large lambda".into(),
            ));
        }
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iters {
        mid = 0.5 * (lo + hi);
        let v = terms.eval(mid);
        if (v - 1.0).abs() <= tol {
            return Ok(mid);
        }
        if v > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * mid {
            break;
        }
    }
    // bracket collapsed to rounding; the midpoint is the best available root
    Ok(mid)
}

/// Default modular-residual tolerance for norm computations.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Hard cap on bisection steps.
pub const MAX_BISECT_ITERS: usize = 200;
