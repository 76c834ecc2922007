//! Choquard interaction energy, its derivative, the HLS bound check, the
//! total energy functional, and its discrete gradient and Hessian.
//!
//! The gradient is the exact derivative of the discrete energy with respect
//! to the interior nodal values (differentiate-the-discretization), not a
//! collocation of the continuum Euler-Lagrange operator. The interaction
//! derivative therefore carries the pairwise weight `(1 + r_j/r_i)/2`, which
//! collapses to the familiar unweighted kernel form when `r` is constant.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{sigma_alpha, ExponentBundle, ScalarExponentField};
use crate::grid::{indexed_map, indexed_sum, Grid1D, GridFunction};
use crate::nakano::norm_lp;

/// `|t|^{q-2} t`, with the combined factor taken as 0 at `t = 0`.
#[inline]
fn signed_pow(t: f64, q: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(q - 2.0) * t
    }
}

/// `|t|^{q-2}`, with the `t = 0`, `q < 2` singularity flattened to 0.
#[inline]
fn abs_pow_m2(t: f64, q: f64) -> f64 {
    if t == 0.0 && q < 2.0 {
        0.0
    } else {
        t.abs().powf(q - 2.0)
    }
}

/// The three terms of the energy plus the gradient sup norm.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub gagliardo_energy: f64,
    pub lp_energy: f64,
    pub choquard_energy: f64,
    pub total: f64,
    pub gradient_sup_norm: f64,
}

/// Pairwise kernel tables for one (grid, bundle) instance.
///
/// All energy-path evaluations go through these tables, so repeated calls
/// (path following, finite differences, Newton) skip the exponent-field
/// evaluations entirely.
pub struct Discretization {
    grid: Grid1D,
    m: usize,
    w: Vec<f64>,
    p_diag: Vec<f64>,
    r: Vec<f64>,
    /// `p(x_i, x_j)`, row-major; diagonal entries unused.
    p_pair: Vec<f64>,
    /// `|x_i - x_j|^{-(N + s_ij p_ij)}`; diagonal entries 0.
    kern_gag: Vec<f64>,
    /// `|x_i - x_j|^{-(alpha_i + alpha_j)/2}`; diagonal entries 0.
    kern_choq: Vec<f64>,
}

impl Discretization {
    pub fn new(grid: Grid1D, bundle: &ExponentBundle) -> Result<Self> {
        bundle.validate(&grid)?;
        Ok(Self::new_unchecked(grid, bundle))
    }

    /// Build the tables without re-validating the bundle.
    pub fn new_unchecked(grid: Grid1D, bundle: &ExponentBundle) -> Self {
        let m = grid.len();
        let n = bundle.dim as f64;
        let w: Vec<f64> = (0..m).map(|i| grid.weight(i)).collect();
        let p_diag: Vec<f64> = (0..m)
            .map(|i| bundle.p.eval(grid.node(i), grid.node(i)))
            .collect();
        let r: Vec<f64> = (0..m).map(|i| bundle.r.eval(grid.node(i))).collect();
        let alpha: Vec<f64> = (0..m).map(|i| bundle.alpha.eval(grid.node(i))).collect();

        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = indexed_map(m, |i| {
            let xi = grid.node(i);
            let mut p_row = vec![0.0; m];
            let mut kg_row = vec![0.0; m];
            let mut kc_row = vec![0.0; m];
            for j in 0..m {
                if j == i {
                    continue;
                }
                let xj = grid.node(j);
                let d = (xi - xj).abs();
                let pij = bundle.p.eval(xi, xj);
                let sij = bundle.s.eval(xi, xj);
                p_row[j] = pij;
                kg_row[j] = d.powf(-(n + sij * pij));
                kc_row[j] = d.powf(-0.5 * (alpha[i] + alpha[j]));
            }
            (p_row, kg_row, kc_row)
        });

        let mut p_pair = Vec::with_capacity(m * m);
        let mut kern_gag = Vec::with_capacity(m * m);
        let mut kern_choq = Vec::with_capacity(m * m);
        for (p_row, kg_row, kc_row) in rows {
            p_pair.extend(p_row);
            kern_gag.extend(kg_row);
            kern_choq.extend(kc_row);
        }

        Discretization {
            grid,
            m,
            w,
            p_diag,
            r,
            p_pair,
            kern_gag,
            kern_choq,
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    fn check_input(&self, u: &GridFunction) -> Result<()> {
        if u.grid() != self.grid {
            return Err(Error::InvalidGridFunction(
                "grid mismatch with discretization".into(),
            ));
        }
        Ok(())
    }

    fn require_zero_boundary(&self, u: &GridFunction) -> Result<()> {
        self.check_input(u)?;
        if !u.zero_boundary() {
            return Err(Error::InvalidGridFunction(
                "energy is defined on zero-boundary functions".into(),
            ));
        }
        Ok(())
    }

    /// `|u_i|^{r_i}` per node, with overflow detection.
    fn r_powers(&self, u: &GridFunction) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.m];
        for (i, &v) in u.values().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let t = self.r[i] * v.abs().ln();
            if t > 700.0 {
                return Err(Error::OutOfRange {
                    node: i,
                    detail: format!("|u|^r overflows for |u| = {}, r = {}", v.abs(), self.r[i]),
                });
            }
            out[i] = t.exp();
        }
        Ok(out)
    }

    /// Choquard interaction energy
    /// `K[u] = PV sum w_i w_j |u_i|^{r_i} |u_j|^{r_j} / (2 r_i |x_i-x_j|^{(a_i+a_j)/2})`.
    pub fn k_value(&self, u: &GridFunction) -> Result<f64> {
        self.check_input(u)?;
        let a = self.r_powers(u)?;
        let m = self.m;
        let v = indexed_sum(m, |i| {
            if a[i] == 0.0 {
                return 0.0;
            }
            let row = &self.kern_choq[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for j in 0..m {
                if a[j] != 0.0 {
                    acc += self.w[j] * a[j] * row[j];
                }
            }
            self.w[i] * a[i] / (2.0 * self.r[i]) * acc
        });
        if !v.is_finite() {
            return Err(Error::OutOfRange {
                node: 0,
                detail: "choquard energy overflow".into(),
            });
        }
        Ok(v)
    }

    /// Exact directional derivative of the discrete `K` along `v`.
    pub fn k_derivative(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check_input(u)?;
        self.check_input(v)?;
        let a = self.r_powers(u)?;
        let m = self.m;
        Ok(indexed_sum(m, |j| {
            let gv = signed_pow(u.values()[j], self.r[j]) * v.values()[j];
            if gv == 0.0 {
                return 0.0;
            }
            let rj = self.r[j];
            let mut acc = 0.0;
            for i in 0..m {
                if i == j || a[i] == 0.0 {
                    continue;
                }
                acc += self.w[i] * self.kern_choq[i * m + j] * 0.5 * (a[i] + rj * a[i] / self.r[i]);
            }
            self.w[j] * gv * acc
        }))
    }

    /// The three energy terms `(gagliardo, lp, choquard)`.
    pub fn energy_parts(&self, u: &GridFunction) -> Result<(f64, f64, f64)> {
        self.require_zero_boundary(u)?;
        let m = self.m;
        let vals = u.values();
        let gag = indexed_sum(m, |i| {
            let p_row = &self.p_pair[i * m..(i + 1) * m];
            let k_row = &self.kern_gag[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for j in 0..m {
                if j == i {
                    continue;
                }
                let diff = (vals[i] - vals[j]).abs();
                if diff == 0.0 {
                    continue;
                }
                let p = p_row[j];
                acc += self.w[j] * diff.powf(p) / p * k_row[j];
            }
            self.w[i] * acc
        });
        let lp = indexed_sum(m, |i| {
            let v = vals[i].abs();
            if v == 0.0 {
                0.0
            } else {
                self.w[i] * v.powf(self.p_diag[i]) / self.p_diag[i]
            }
        });
        let choq = self.k_value(u)?;
        if !(gag.is_finite() && lp.is_finite()) {
            return Err(Error::OutOfRange {
                node: 0,
                detail: "energy overflow".into(),
            });
        }
        Ok((gag, lp, choq))
    }

    /// Total energy `I[u]`.
    pub fn energy(&self, u: &GridFunction) -> Result<f64> {
        let (g, l, c) = self.energy_parts(u)?;
        Ok(g + l - c)
    }

    /// Exact gradient of the discrete energy; boundary components are 0.
    pub fn gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        self.require_zero_boundary(u)?;
        let m = self.m;
        let vals = u.values();
        let a = self.r_powers(u)?;
        let out = indexed_map(m, |k| {
            if k == 0 || k == m - 1 {
                return 0.0;
            }
            let p_row = &self.p_pair[k * m..(k + 1) * m];
            let kg_row = &self.kern_gag[k * m..(k + 1) * m];
            let kc_row = &self.kern_choq[k * m..(k + 1) * m];
            let rk = self.r[k];
            let mut gag = 0.0;
            let mut choq_inner = 0.0;
            for j in 0..m {
                if j == k {
                    continue;
                }
                let diff = vals[k] - vals[j];
                if diff != 0.0 {
                    gag += self.w[j] * signed_pow(diff, p_row[j]) * kg_row[j];
                }
                if a[j] != 0.0 {
                    choq_inner += self.w[j] * kc_row[j] * 0.5 * (a[j] + rk * a[j] / self.r[j]);
                }
            }
            let lp = signed_pow(vals[k], self.p_diag[k]);
            let choq = signed_pow(vals[k], rk) * choq_inner;
            self.w[k] * (2.0 * gag + lp - choq)
        });
        GridFunction::new(self.grid, out, true)
    }

    /// Quadrature-normalized gradient sup norm `max_k |g_k| / w_k`: the
    /// discrete L-infinity size of the Euler-Lagrange defect. Dividing out
    /// the weights makes the value (and every tolerance compared against it)
    /// mean the same thing at every grid resolution.
    pub fn residual(&self, u: &GridFunction) -> Result<f64> {
        let g = self.gradient(u)?;
        let mut worst = 0.0f64;
        for k in 1..self.m - 1 {
            worst = worst.max(g.values()[k].abs() / self.w[k]);
        }
        Ok(worst)
    }

    /// Exact Hessian of the discrete energy on the interior nodes.
    pub fn hessian_interior(&self, u: &GridFunction) -> Result<DMatrix<f64>> {
        self.require_zero_boundary(u)?;
        let m = self.m;
        let n_int = m - 2;
        let vals = u.values();
        let a = self.r_powers(u)?;

        let rows: Vec<Vec<f64>> = indexed_map(n_int, |ki| {
            let k = ki + 1;
            let p_row = &self.p_pair[k * m..(k + 1) * m];
            let kg_row = &self.kern_gag[k * m..(k + 1) * m];
            let kc_row = &self.kern_choq[k * m..(k + 1) * m];
            let rk = self.r[k];
            let gk = signed_pow(vals[k], rk);

            let mut row = vec![0.0; n_int];
            let mut diag_gag = 0.0;
            let mut choq_inner = 0.0;
            for j in 0..m {
                if j == k {
                    continue;
                }
                let curv = (p_row[j] - 1.0) * abs_pow_m2(vals[k] - vals[j], p_row[j]) * kg_row[j];
                diag_gag += self.w[j] * curv;
                if a[j] != 0.0 {
                    choq_inner += self.w[j] * kc_row[j] * 0.5 * (a[j] + rk * a[j] / self.r[j]);
                }
                if j >= 1 && j <= m - 2 {
                    let gl = signed_pow(vals[j], self.r[j]);
                    let choq_off = gk
                        * gl
                        * 0.5
                        * (rk + self.r[j])
                        * kc_row[j];
                    row[j - 1] = self.w[k] * self.w[j] * (-2.0 * curv - choq_off);
                }
            }
            let lp_diag = (self.p_diag[k] - 1.0) * abs_pow_m2(vals[k], self.p_diag[k]);
            let choq_diag = (rk - 1.0) * abs_pow_m2(vals[k], rk) * choq_inner;
            row[k - 1] = self.w[k] * (2.0 * diag_gag + lp_diag - choq_diag);
            row
        });

        let mut h = DMatrix::zeros(n_int, n_int);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                h[(i, j)] = v;
            }
        }
        Ok(h)
    }

    /// Full energy report, including the gradient sup norm.
    pub fn energy_report(&self, u: &GridFunction) -> Result<EnergyReport> {
        let (gag, lp, choq) = self.energy_parts(u)?;
        let grad = self.gradient(u)?;
        Ok(EnergyReport {
            gagliardo_energy: gag,
            lp_energy: lp,
            choquard_energy: choq,
            total: gag + lp - choq,
            gradient_sup_norm: grad.sup_norm(),
        })
    }
}

/// Both sides of the discrete HLS bound and their ratio (empirical constant).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HlsCheck {
    /// PV double integral of `|u|^{r(x)} |u|^{r(y)}` against the Riesz kernel.
    pub lhs: f64,
    /// `max` of the four norm powers, with constant 1.
    pub rhs: f64,
    pub ratio: f64,
}

/// Evaluate the HLS bound with the exponent pair `r sigma-`, `r sigma+`.
pub fn hls_bound_check(u: &GridFunction, bundle: &ExponentBundle) -> Result<HlsCheck> {
    let disc = Discretization::new_unchecked(u.grid(), bundle);
    hls_bound_check_with(&disc, u, bundle)
}

pub fn hls_bound_check_with(
    disc: &Discretization,
    u: &GridFunction,
    bundle: &ExponentBundle,
) -> Result<HlsCheck> {
    disc.check_input(u)?;
    let a = disc.r_powers(u)?;
    let m = disc.m;
    let lhs = indexed_sum(m, |i| {
        if a[i] == 0.0 {
            return 0.0;
        }
        let row = &disc.kern_choq[i * m..(i + 1) * m];
        let mut acc = 0.0;
        for j in 0..m {
            if a[j] != 0.0 {
                acc += disc.w[j] * a[j] * row[j];
            }
        }
        disc.w[i] * a[i] * acc
    });

    let grid = u.grid();
    let xs = grid.nodes();
    let mut sig_min = f64::INFINITY;
    let mut sig_max = f64::NEG_INFINITY;
    for &x in &xs {
        let s = sigma_alpha(&bundle.alpha, x, bundle.dim)?;
        sig_min = sig_min.min(s);
        sig_max = sig_max.max(s);
    }
    let r_min = bundle.r.min_on(&xs);
    let r_max = bundle.r.max_on(&xs);

    let make_field = |sigma: f64| {
        let r = bundle.r.clone();
        ScalarExponentField::new(
            move |x| sigma * r.eval(x),
            sigma * r_min,
            sigma * r_max,
        )
    };
    let n_minus = norm_lp(u, &make_field(sig_min))?;
    let n_plus = norm_lp(u, &make_field(sig_max))?;
    let rhs = [
        n_minus.powf(2.0 * r_max),
        n_minus.powf(2.0 * r_min),
        n_plus.powf(2.0 * r_max),
        n_plus.powf(2.0 * r_min),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);

    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HlsCheck { lhs, rhs, ratio })
}

/// Choquard energy `K[u]` via a one-shot discretization.
pub fn choquard_k(u: &GridFunction, bundle: &ExponentBundle) -> Result<f64> {
    Discretization::new_unchecked(u.grid(), bundle).k_value(u)
}

/// Directional derivative `K'[u] v` via a one-shot discretization.
pub fn choquard_k_derivative(
    u: &GridFunction,
    v: &GridFunction,
    bundle: &ExponentBundle,
) -> Result<f64> {
    Discretization::new_unchecked(u.grid(), bundle).k_derivative(u, v)
}

/// Energy report via a one-shot discretization.
pub fn energy_i(u: &GridFunction, bundle: &ExponentBundle) -> Result<EnergyReport> {
    Discretization::new_unchecked(u.grid(), bundle).energy_report(u)
}

/// Discrete energy gradient via a one-shot discretization.
pub fn energy_gradient(u: &GridFunction, bundle: &ExponentBundle) -> Result<GridFunction> {
    Discretization::new_unchecked(u.grid(), bundle).gradient(u)
}

/// Gradient sup norm via a one-shot discretization.
pub fn residual(u: &GridFunction, bundle: &ExponentBundle) -> Result<f64> {
    Discretization::new_unchecked(u.grid(), bundle).residual(u)
}
