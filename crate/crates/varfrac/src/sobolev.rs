//! Variable-order fractional Sobolev space: Gagliardo modular, seminorm,
//! full Luxemburg norm, and the discrete nonlocal operator.

use crate::error::{Error, Result};
use crate::exponents::ExponentBundle;
use crate::grid::{indexed_map, GridFunction};
use crate::luxemburg::{luxemburg_norm, ModularTerms, MAX_BISECT_ITERS};

/// The two parts of the Sobolev modular at a given scaling.
#[derive(Debug, Clone, Copy)]
pub struct SobolevModular {
    /// Principal-value double integral of
    /// `|u(x)-u(y)|^{p(x,y)} / (lambda^{p} |x-y|^{N + s p})`.
    pub gagliardo_term: f64,
    /// `int |u/lambda|^{p(x,x)} dx`.
    pub lp_term: f64,
    pub total: f64,
}

/// Scaling terms of the Gagliardo double sum (pairs `i != j` with
/// `u_i != u_j`), stored as log-coefficients.
pub(crate) fn gagliardo_terms(u: &GridFunction, bundle: &ExponentBundle) -> Result<ModularTerms> {
    let grid = u.grid();
    let m = grid.len();
    let n = bundle.dim as f64;
    let vals = u.values();
    let rows: Vec<ModularTerms> = indexed_map(m, |i| {
        let xi = grid.node(i);
        let lwi = grid.weight(i).ln();
        let mut row = ModularTerms::new();
        for j in 0..m {
            if j == i {
                continue;
            }
            let diff = (vals[i] - vals[j]).abs();
            if diff == 0.0 {
                continue;
            }
            let xj = grid.node(j);
            let pij = bundle.p.eval(xi, xj);
            let sij = bundle.s.eval(xi, xj);
            let dist = (xi - xj).abs();
            let lc = lwi + grid.weight(j).ln() + pij * diff.ln() - (n + sij * pij) * dist.ln();
            row.push_log(lc, pij);
        }
        row
    });
    let mut terms = ModularTerms::with_capacity(m * m);
    for row in &rows {
        terms.extend(row);
    }
    Ok(terms)
}

/// Scaling terms of the diagonal-trace Lebesgue part `int |u|^{p(x,x)}`.
fn diagonal_lp_terms(u: &GridFunction, bundle: &ExponentBundle) -> Result<ModularTerms> {
    let grid = u.grid();
    let mut terms = ModularTerms::with_capacity(grid.len());
    for (i, &v) in u.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let x = grid.node(i);
        let p = bundle.p.eval(x, x);
        terms.push_log(grid.weight(i).ln() + p * v.abs().ln(), p);
    }
    Ok(terms)
}

fn eval_checked(terms: &ModularTerms, lambda: f64, what: &str) -> Result<f64> {
    let v = terms.eval(lambda);
    if !v.is_finite() {
        return Err(Error::OutOfRange {
            node: 0,
            detail: format!("{what} overflows at lambda = {lambda}"),
        });
    }
    Ok(v)
}

/// The Sobolev modular of `u / lambda`.
pub fn gagliardo_modular(
    u: &GridFunction,
    bundle: &ExponentBundle,
    lambda: f64,
) -> Result<SobolevModular> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("lambda = {lambda} must be positive")));
    }
    let gagliardo = eval_checked(&gagliardo_terms(u, bundle)?, lambda, "gagliardo modular")?;
    let lp = eval_checked(&diagonal_lp_terms(u, bundle)?, lambda, "lp modular")?;
    Ok(SobolevModular {
        gagliardo_term: gagliardo,
        lp_term: lp,
        total: gagliardo + lp,
    })
}

/// Luxemburg norm for the full Sobolev modular; 0 for the zero function.
pub fn sobolev_norm(u: &GridFunction, bundle: &ExponentBundle, tol: f64) -> Result<f64> {
    let mut terms = gagliardo_terms(u, bundle)?;
    terms.extend(&diagonal_lp_terms(u, bundle)?);
    luxemburg_norm(&terms, tol, MAX_BISECT_ITERS)
}

/// Luxemburg seminorm of the Gagliardo part alone; 0 for constants.
pub fn seminorm(u: &GridFunction, bundle: &ExponentBundle, tol: f64) -> Result<f64> {
    luxemburg_norm(&gagliardo_terms(u, bundle)?, tol, MAX_BISECT_ITERS)
}

/// Discrete variable-order fractional p(x,y)-Laplacian.
///
/// At node i: `sum_{j != i} w_j |u_i - u_j|^{p_ij - 2} (u_i - u_j) /
/// |x_i - x_j|^{N + s_ij p_ij}`. The factor `|0|^{p-2} * 0` is taken as 0,
/// matching the continuum integrand.
pub fn flap_apply(u: &GridFunction, bundle: &ExponentBundle) -> GridFunction {
    let grid = u.grid();
    let m = grid.len();
    let n = bundle.dim as f64;
    let vals = u.values();
    let out = indexed_map(m, |i| {
        let xi = grid.node(i);
        let mut acc = 0.0;
        for j in 0..m {
            if j == i {
                continue;
            }
            let diff = vals[i] - vals[j];
            if diff == 0.0 {
                continue;
            }
            let xj = grid.node(j);
            let pij = bundle.p.eval(xi, xj);
            let sij = bundle.s.eval(xi, xj);
            let dist = (xi - xj).abs();
            acc += grid.weight(j) * diff.abs().powf(pij - 2.0) * diff
                / dist.powf(n + sij * pij);
        }
        acc
    });
    GridFunction::new(grid, out, false).expect("length matches grid")
}
