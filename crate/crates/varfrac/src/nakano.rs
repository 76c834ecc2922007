//! Variable-exponent Lebesgue (Nakano) space: modulars, Luxemburg norms,
//! conjugate exponents, and the norm-modular / Hoelder / power inequalities.

use crate::error::{Error, Result};
use crate::exponents::ScalarExponentField;
use crate::grid::GridFunction;
use crate::luxemburg::{luxemburg_norm, ModularTerms, DEFAULT_TOL, MAX_BISECT_ITERS};

/// Value of the modular `int |u|^{p(x)} dx`, with the sampled exponent range
/// recorded at computation time.
#[derive(Debug, Clone)]
pub struct ModularValue {
    pub value: f64,
    pub exponent_inf: f64,
    pub exponent_sup: f64,
}

/// Scaling terms of the Lebesgue modular: `rho(u/lambda) = sum_i w_i |u_i|^{p_i} lambda^{-p_i}`.
fn lp_terms(u: &GridFunction, p: &ScalarExponentField) -> Result<ModularTerms> {
    let grid = u.grid();
    let mut terms = ModularTerms::with_capacity(grid.len());
    for (i, &v) in u.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let pi = p.eval(grid.node(i));
        let lc = grid.weight(i).ln() + pi * v.abs().ln();
        if !lc.is_finite() && lc != f64::NEG_INFINITY {
            return Err(Error::OutOfRange {
                node: i,
                detail: format!("|u|^p not representable for |u| = {}, p = {pi}", v.abs()),
            });
        }
        terms.push_log(lc, pi);
    }
    Ok(terms)
}

/// The modular `rho_p(u) = int |u(x)|^{p(x)} dx`.
pub fn modular_lp(u: &GridFunction, p: &ScalarExponentField) -> Result<ModularValue> {
    let grid = u.grid();
    let xs = grid.nodes();
    let mut value = 0.0;
    for (i, &v) in u.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let pi = p.eval(xs[i]);
        let t = grid.weight(i).ln() + pi * v.abs().ln();
        if t > 700.0 {
            return Err(Error::OutOfRange {
                node: i,
                detail: format!("|u|^p overflows for |u| = {}, p = {pi}", v.abs()),
            });
        }
        value += t.exp();
    }
    Ok(ModularValue {
        value,
        exponent_inf: p.min_on(&xs),
        exponent_sup: p.max_on(&xs),
    })
}

/// Luxemburg norm: the unique `lambda > 0` with `rho_p(u/lambda) = 1`
/// (0 for the zero function).
pub fn luxemburg_norm_lp(u: &GridFunction, p: &ScalarExponentField, tol: f64) -> Result<f64> {
    luxemburg_norm(&lp_terms(u, p)?, tol, MAX_BISECT_ITERS)
}

/// Same with the default modular tolerance.
pub fn norm_lp(u: &GridFunction, p: &ScalarExponentField) -> Result<f64> {
    luxemburg_norm_lp(u, p, DEFAULT_TOL)
}

/// Hoelder conjugate field `p'(x) = p(x) / (p(x) - 1)`.
pub fn conjugate_exponent(p: &ScalarExponentField) -> Result<ScalarExponentField> {
    if !(p.declared_inf() > 1.0) {
        return Err(Error::InvalidExponent(format!(
            "conjugate undefined: p- = {} <= 1",
            p.declared_inf()
        )));
    }
    let inner = p.clone();
    let sup = p.declared_inf() / (p.declared_inf() - 1.0);
    let inf = p.declared_sup() / (p.declared_sup() - 1.0);
    Ok(ScalarExponentField::new(
        move |x| {
            let v = inner.eval(x);
            v / (v - 1.0)
        },
        inf,
        sup,
    ))
}

/// Outcome of one clause of an inequality suite.
#[derive(Debug, Clone, Copy)]
pub struct Clause {
    /// Whether the clause's hypothesis applied to this input.
    pub applicable: bool,
    pub holds: bool,
    /// Distance to violation; negative means the clause failed by that much.
    pub slack: f64,
}

impl Clause {
    fn vacuous() -> Self {
        Clause {
            applicable: false,
            holds: true,
            slack: f64::INFINITY,
        }
    }

    fn from_slack(slack: f64, tol: f64) -> Self {
        Clause {
            applicable: true,
            holds: slack >= -tol,
            slack,
        }
    }
}

/// Report of the norm-modular relations.
#[derive(Debug, Clone)]
pub struct NormModularReport {
    pub norm: f64,
    pub modular: f64,
    /// Sign agreement of `norm - 1` and `modular - 1`.
    pub sign_clause: Clause,
    /// `norm >= 1  =>  norm^{p-} <= modular <= norm^{p+}`.
    pub large_clause: Clause,
    /// `norm <= 1  =>  norm^{p+} <= modular <= norm^{p-}`.
    pub small_clause: Clause,
}

impl NormModularReport {
    pub fn all_hold(&self) -> bool {
        self.sign_clause.holds && self.large_clause.holds && self.small_clause.holds
    }

    pub fn min_slack(&self) -> f64 {
        let mut s = f64::INFINITY;
        for c in [self.sign_clause, self.large_clause, self.small_clause] {
            if c.applicable {
                s = s.min(c.slack);
            }
        }
        s
    }
}

/// Evaluate the norm-modular relations for a nonzero `u`.
pub fn check_norm_modular(
    u: &GridFunction,
    p: &ScalarExponentField,
    tol: f64,
) -> Result<NormModularReport> {
    if u.is_zero() {
        return Err(Error::InvalidGridFunction(
            "norm-modular relations need a nonzero function".into(),
        ));
    }
    // drive the bisection well below the clause tolerance: for constant p
    // the relations are equalities and the norm error enters amplified by
    // the modular magnitude
    let norm = luxemburg_norm_lp(u, p, (tol * 1e-4).min(DEFAULT_TOL))?;
    let modular = modular_lp(u, p)?;
    let xs = u.grid().nodes();
    let p_min = p.min_on(&xs);
    let p_max = p.max_on(&xs);
    let rho = modular.value;

    // near the unit sphere the product degenerates to 0, which still agrees
    let sign_slack = if (norm - 1.0).abs() <= tol || (rho - 1.0).abs() <= tol {
        0.0
    } else {
        (norm - 1.0) * (rho - 1.0)
    };
    let sign_clause = Clause::from_slack(sign_slack, tol);

    let large_clause = if norm >= 1.0 - tol {
        Clause::from_slack((rho - norm.powf(p_min)).min(norm.powf(p_max) - rho), tol)
    } else {
        Clause::vacuous()
    };
    let small_clause = if norm <= 1.0 + tol {
        Clause::from_slack((rho - norm.powf(p_max)).min(norm.powf(p_min) - rho), tol)
    } else {
        Clause::vacuous()
    };

    Ok(NormModularReport {
        norm,
        modular: rho,
        sign_clause,
        large_clause,
        small_clause,
    })
}

/// Both sides of the Hoelder pairing inequality.
#[derive(Debug, Clone, Copy)]
pub struct HolderPairing {
    /// `|int u v dx|`
    pub lhs: f64,
    /// `2 ||u||_p ||v||_p'`
    pub rhs_factor2: f64,
    /// `(1/p- + 1/(p')-) ||u||_p ||v||_p'`
    pub rhs_sharp: f64,
}

/// Evaluate `|int u v| <= (1/p- + 1/(p')-) ||u||_p ||v||_p' <= 2 ||u||_p ||v||_p'`.
pub fn holder_pairing(
    u: &GridFunction,
    v: &GridFunction,
    p: &ScalarExponentField,
) -> Result<HolderPairing> {
    let grid = u.grid();
    let pc = conjugate_exponent(p)?;
    let lhs = grid
        .integrate(|i, _| u.values()[i] * v.values()[i])
        .abs();
    let nu = norm_lp(u, p)?;
    let nv = norm_lp(v, &pc)?;
    let xs = grid.nodes();
    let sharp = 1.0 / p.min_on(&xs) + 1.0 / pc.min_on(&xs);
    Ok(HolderPairing {
        lhs,
        rhs_factor2: 2.0 * nu * nv,
        rhs_sharp: sharp * nu * nv,
    })
}

/// Report of the power relations between `||u||_{pq}` and `|| |u|^q ||_p`.
#[derive(Debug, Clone)]
pub struct PowerNormReport {
    pub norm_pq: f64,
    pub norm_uq_p: f64,
    /// `norm_pq >= 1  =>  norm_pq^{q-} <= norm_uq_p <= norm_pq^{q+}`.
    pub large_clause: Clause,
    /// `norm_pq <= 1  =>  norm_pq^{q+} <= norm_uq_p <= norm_pq^{q-}`.
    pub small_clause: Clause,
}

impl PowerNormReport {
    pub fn all_hold(&self) -> bool {
        self.large_clause.holds && self.small_clause.holds
    }
}

/// Evaluate the power relations for exponents `p`, `q` with `(pq)- > 1`.
pub fn power_norm_relation(
    u: &GridFunction,
    p: &ScalarExponentField,
    q: &ScalarExponentField,
    tol: f64,
) -> Result<PowerNormReport> {
    let grid = u.grid();
    let xs = grid.nodes();
    let pq_inf = (0..xs.len())
        .map(|i| p.eval(xs[i]) * q.eval(xs[i]))
        .fold(f64::INFINITY, f64::min);
    if !(pq_inf > 1.0) {
        return Err(Error::InvalidExponent(format!(
            "(pq)- = {pq_inf} <= 1 is inadmissible"
        )));
    }
    let p_inner = p.clone();
    let q_inner = q.clone();
    let pq = ScalarExponentField::new(
        move |x| p_inner.eval(x) * q_inner.eval(x),
        pq_inf,
        p.declared_sup() * q.declared_sup(),
    );
    let norm_pq = norm_lp(u, &pq)?;

    // |u|^{q(x)} sampled nodewise
    let uq = GridFunction::from_fn(
        grid,
        {
            let q = q.clone();
            let vals: Vec<f64> = u.values().to_vec();
            let g = grid;
            move |x| {
                let i = ((x - g.a()) / g.h()).round() as usize;
                let v: f64 = vals[i].abs();
                if v == 0.0 {
                    0.0
                } else {
                    (q.eval(x) * v.ln()).exp()
                }
            }
        },
        false,
    );
    let norm_uq_p = norm_lp(&uq, p)?;

    let q_min = q.min_on(&xs);
    let q_max = q.max_on(&xs);
    let large_clause = if norm_pq >= 1.0 - tol {
        Clause::from_slack(
            (norm_uq_p - norm_pq.powf(q_min)).min(norm_pq.powf(q_max) - norm_uq_p),
            tol,
        )
    } else {
        Clause::vacuous()
    };
    let small_clause = if norm_pq <= 1.0 + tol {
        Clause::from_slack(
            (norm_uq_p - norm_pq.powf(q_max)).min(norm_pq.powf(q_min) - norm_uq_p),
            tol,
        )
    } else {
        Clause::vacuous()
    };

    Ok(PowerNormReport {
        norm_pq,
        norm_uq_p,
        large_clause,
        small_clause,
    })
}
