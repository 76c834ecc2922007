//! Compact/non-compact embedding experiments: concentration sequences,
//! critical-touching growth fields, tail-vanishing and annulus-rate probes,
//! and the dichotomy verdict.
//!
//! Nothing here certifies compactness — the routines exhibit witness
//! sequences and measure their decay patterns, which is the computable half
//! of the dichotomy.

use std::io::Write as IoWrite;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{ExponentBundle, ScalarExponentField};
use crate::grid::{Grid1D, GridFunction};
use crate::nakano::modular_lp;
use crate::sobolev::{gagliardo_modular, sobolev_norm};

/// A family of concentrating bumps: the template profile together with the
/// scales at which it is squeezed toward the center.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationFamily {
    pub center: f64,
    pub scales: Vec<u32>,
}

/// C1 plateau profile: 1 on `B_{1/2}`, 0 outside `B_1`, cubic smoothstep ramp
/// in between.
pub fn plateau_profile(d: f64) -> f64 {
    let d = d.abs();
    if d <= 0.5 {
        1.0
    } else if d >= 1.0 {
        0.0
    } else {
        let t = 2.0 * (1.0 - d);
        t * t * (3.0 - 2.0 * t)
    }
}

impl ConcentrationFamily {
    pub fn new(center: f64, scales: Vec<u32>) -> Result<Self> {
        if scales.is_empty() || scales.iter().any(|&n| n == 0) {
            return Err(Error::Config("scales must be positive integers".into()));
        }
        Ok(ConcentrationFamily { center, scales })
    }

    /// The unscaled template, sampled at the nodes.
    pub fn template(&self, grid: Grid1D) -> GridFunction {
        let x0 = self.center;
        GridFunction::from_fn(grid, move |x| plateau_profile(x - x0), true)
    }
}

/// The n-th concentration member
/// `phi_n(x) = n^{(N - p(x) s(x)) / p(x)} phi(n (x - x0) + x0)`,
/// with `p(x) = p(x,x)` and `s(x) = s(x,x)`.
///
/// Large scales are sampled analytically at the nodes, never interpolated
/// from a coarser template.
pub fn concentration_sequence(
    family: &ConcentrationFamily,
    n: u32,
    bundle: &ExponentBundle,
    grid: Grid1D,
) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::Config("scale n must be >= 1".into()));
    }
    let x0 = family.center;
    let radius = 1.0 / n as f64;
    let slack = 1e-12;
    if x0 - radius < grid.a() - slack || x0 + radius > grid.b() + slack {
        return Err(Error::Config(format!(
            "scaled support B_{radius}({x0}) leaves the domain [{}, {}]",
            grid.a(),
            grid.b()
        )));
    }
    let dim = bundle.dim as f64;
    let nf = n as f64;
    let p = bundle.p.clone();
    let s = bundle.s.clone();
    Ok(GridFunction::from_fn(
        grid,
        move |x| {
            let shape = plateau_profile(nf * (x - x0));
            if shape == 0.0 {
                return 0.0;
            }
            let px = p.eval(x, x);
            let sx = s.eval(x, x);
            nf.powf((dim - px * sx) / px) * shape
        },
        true,
    ))
}

/// Growth exponent touching the critical bound at exactly one point:
/// `q(x) = max(floor, p_s*(x) - C0 / (-log d)^beta)` with
/// `d = min(|x - x0|, 1/2)`, and `q(x0) = p_s*(x0)`.
///
/// `beta < 1` keeps the approach slow enough for compactness; `beta = 1` is
/// the non-compact touching rate.
pub fn q_field_builder(
    p_s_star: &ScalarExponentField,
    x0: f64,
    c0: f64,
    beta: f64,
    floor: f64,
    grid: &Grid1D,
) -> Result<ScalarExponentField> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidExponent("C0 must be positive".into()));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidExponent(format!(
            "beta = {beta} outside (0, 1]"
        )));
    }
    for &x in &grid.nodes() {
        let ps = p_s_star.eval(x);
        if floor >= ps {
            return Err(Error::InvalidExponent(format!(
                "floor {floor} >= p_s*({x}) = {ps}"
            )));
        }
    }
    let ps = p_s_star.clone();
    let f = move |x: f64| {
        let d = (x - x0).abs();
        if d == 0.0 {
            return ps.eval(x);
        }
        let d = d.min(0.5);
        let margin = c0 / (-d.ln()).powf(beta);
        (ps.eval(x) - margin).max(floor)
    };
    Ok(ScalarExponentField::from_samples(
        f,
        grid.a(),
        grid.b(),
        grid.len(),
    ))
}

/// Lower-rate hypothesis of the non-compactness theorem:
/// `q(x) >= p_s*(x) - C0 / log(1 / |x - x0|)` on the punctured half-ball.
pub fn check_concentration_condition(
    q: &ScalarExponentField,
    p_s_star: &ScalarExponentField,
    x0: f64,
    c0: f64,
    grid: &Grid1D,
) -> bool {
    let slack = 1e-12;
    for &x in &grid.nodes() {
        let d = (x - x0).abs();
        if d == 0.0 || d >= 0.5 {
            continue;
        }
        let allowed = p_s_star.eval(x) - c0 / (1.0 / d).ln();
        if q.eval(x) < allowed - slack {
            return false;
        }
    }
    true
}

/// The explicit persistence bound `exp(-(N - p^- s^-)/p^- * 2 C0) * (1/2)`
/// (the 1/2 being the 1-D measure of the annulus `B_{1/2} \ B_{1/4}`).
pub fn theorem4_bound(bundle: &ExponentBundle, grid: &Grid1D, c0: f64) -> f64 {
    let xs = grid.nodes();
    let p_min = xs
        .iter()
        .map(|&x| bundle.p.eval(x, x))
        .fold(f64::INFINITY, f64::min);
    let s_min = xs
        .iter()
        .map(|&x| bundle.s.eval(x, x))
        .fold(f64::INFINITY, f64::min);
    let n = bundle.dim as f64;
    ((-(n - p_min * s_min) / p_min) * 2.0 * c0).exp() * 0.5
}

/// One row of the tail-vanishing table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailRow {
    pub eps: f64,
    /// Max over the supplied family of the ball integral.
    pub max_integral: f64,
    /// Index of the maximizing member.
    pub argmax: usize,
}

/// Empirical lower bound for `sup_{||v|| <= rho} int_{B_eps(x0)} |v|^{q}` at
/// each `eps`, maximized over the supplied family members.
pub fn tail_vanishing_probe(
    bundle: &ExponentBundle,
    q: &ScalarExponentField,
    x0: f64,
    rho_bound: f64,
    eps_list: &[f64],
    members: &[GridFunction],
) -> Result<Vec<TailRow>> {
    for (k, v) in members.iter().enumerate() {
        let norm = sobolev_norm(v, bundle, 1e-10)?;
        if norm > rho_bound * (1.0 + 1e-9) {
            return Err(Error::InvalidGridFunction(format!(
                "family member {k} has norm {norm} > bound {rho_bound}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut best = 0.0;
        let mut argmax = 0;
        for (k, v) in members.iter().enumerate() {
            let grid = v.grid();
            let mut acc = 0.0;
            for (i, &val) in v.values().iter().enumerate() {
                let x = grid.node(i);
                if (x - x0).abs() < eps && val != 0.0 {
                    acc += grid.weight(i) * val.abs().powf(q.eval(x));
                }
            }
            if acc > best {
                best = acc;
                argmax = k;
            }
        }
        rows.push(TailRow {
            eps,
            max_integral: best,
            argmax,
        });
    }
    Ok(rows)
}

/// One row of the annulus-rate table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnnulusRow {
    pub n: u32,
    /// Inner radius `eps^{n+1}`.
    pub inner_radius: f64,
    /// `min p_s* - max q` over the annulus nodes.
    pub gap: f64,
    /// `C / (-log eps^{n+1})^beta` with `C` fitted at `n = 1`.
    pub bound: f64,
    /// `gap * (-log eps^{n+1})^beta`; constant for the closed-form field.
    pub ratio: f64,
}

/// Extremize `p_s* - q` over the nested annuli `B_{eps^n} \ B_{eps^{n+1}}`
/// and compare against the fitted logarithmic rate.
pub fn annulus_rate_check(
    bundle: &ExponentBundle,
    q: &ScalarExponentField,
    x0: f64,
    eps: f64,
    beta: f64,
    n_max: u32,
    grid: &Grid1D,
) -> Result<Vec<AnnulusRow>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Config(format!("eps = {eps} outside (0, 1/2)")));
    }
    let xs = grid.nodes();
    let mut rows = Vec::new();
    let mut fitted_c = 0.0;
    for n in 1..=n_max {
        let outer = eps.powi(n as i32);
        let inner = eps.powi(n as i32 + 1);
        let mut ps_min = f64::INFINITY;
        let mut q_max = f64::NEG_INFINITY;
        let mut hit = false;
        for &x in &xs {
            let d = (x - x0).abs();
            if d >= inner && d < outer {
                hit = true;
                ps_min = ps_min.min(bundle.critical_exponent(x)?);
                q_max = q_max.max(q.eval(x));
            }
        }
        if !hit {
            return Err(Error::GridTooCoarse(format!(
                "annulus [{inner}, {outer}) around {x0} contains no grid node; refine the grid"
            )));
        }
        let gap = ps_min - q_max;
        let log_factor = (-(inner.ln())).powf(beta);
        let ratio = gap * log_factor;
        if n == 1 {
            fitted_c = ratio;
        }
        rows.push(AnnulusRow {
            n,
            inner_radius: inner,
            gap,
            bound: fitted_c / log_factor,
            ratio,
        });
    }
    Ok(rows)
}

/// Outcome of the dichotomy probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    MassEscapes,
    ConcentrationPersists,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::MassEscapes => write!(f, "mass escapes"),
            Verdict::ConcentrationPersists => write!(f, "concentration persists"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// One row of the verdict table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VerdictRow {
    pub n: u32,
    pub modular: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub rows: Vec<VerdictRow>,
    /// Persistence threshold supplied by the caller (the explicit
    /// non-compactness bound).
    pub persist_threshold: f64,
    /// First modular, the reference for the decay criterion.
    pub base_modular: f64,
}

/// Track the growth-modular of the concentration sequence across scales and
/// classify the pattern.
///
/// "Concentration persists" when every tested scale in the upper half stays
/// at or above half of `persist_threshold`; "mass escapes" when the sequence
/// decays monotonically below 10% of its first value. Anything else is
/// reported as inconclusive, never guessed.
pub fn compactness_verdict(
    bundle: &ExponentBundle,
    q: &ScalarExponentField,
    family: &ConcentrationFamily,
    grid: Grid1D,
    persist_threshold: f64,
) -> Result<VerdictReport> {
    let mut rows = Vec::with_capacity(family.scales.len());
    for &n in &family.scales {
        let phi_n = concentration_sequence(family, n, bundle, grid)?;
        let modular = modular_lp(&phi_n, q)?.value;
        rows.push(VerdictRow { n, modular });
    }
    let base = rows[0].modular;
    let tail_start = rows.len() / 2;
    let persists = rows[tail_start..]
        .iter()
        .all(|r| r.modular >= 0.5 * persist_threshold);
    let monotone = rows
        .windows(2)
        .all(|w| w[1].modular <= w[0].modular * (1.0 + 1e-3));
    let escaped = monotone && rows.last().unwrap().modular <= 0.1 * base;
    let verdict = if escaped {
        Verdict::MassEscapes
    } else if persists {
        Verdict::ConcentrationPersists
    } else {
        Verdict::Inconclusive
    };
    Ok(VerdictReport {
        verdict,
        rows,
        persist_threshold,
        base_modular: base,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Gagliardo-modular sequence of the family (for boundedness diagnostics).
pub fn sobolev_modular_sequence(
    family: &ConcentrationFamily,
    bundle: &ExponentBundle,
    grid: Grid1D,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::with_capacity(family.scales.len());
    for &n in &family.scales {
        let phi_n = concentration_sequence(family, n, bundle, grid)?;
        let m = gagliardo_modular(&phi_n, bundle, 1.0)?;
        out.push((n, m.total));
    }
    Ok(out)
}

/// Emit any of the experiment tables in the shared CSV layout
/// `n, eps, modular, bound, verdict`.
pub fn write_table_csv<W: IoWrite>(
    mut w: W,
    rows: &[(Option<u32>, Option<f64>, f64, f64, &str)],
) -> Result<()> {
    writeln!(w, "n,eps,modular,bound,verdict")?;
    for &(n, eps, modular, bound, verdict) in rows {
        let n_s = n.map_or(String::new(), |v| v.to_string());
        let e_s = eps.map_or(String::new(), |v| v.to_string());
        writeln!(w, "{n_s},{e_s},{modular},{bound},{verdict}")?;
    }
    Ok(())
}

impl VerdictReport {
    pub fn table_rows(&self) -> Vec<(Option<u32>, Option<f64>, f64, f64, &str)> {
        let label = match self.verdict {
            Verdict::MassEscapes => "mass escapes",
            Verdict::ConcentrationPersists => "concentration persists",
            Verdict::Inconclusive => "inconclusive",
        };
        self.rows
            .iter()
            .map(|r| {
                (
                    Some(r.n),
                    None,
                    r.modular,
                    self.persist_threshold,
                    label,
                )
            })
            .collect()
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        write_table_csv(std::io::BufWriter::new(file), &self.table_rows())
    }
}

/// CSV rows for a tail-vanishing table.
pub fn tail_table_rows(rows: &[TailRow]) -> Vec<(Option<u32>, Option<f64>, f64, f64, &str)> {
    rows.iter()
        .map(|r| (None, Some(r.eps), r.max_integral, 0.0, ""))
        .collect()
}

/// CSV rows for an annulus-rate table.
pub fn annulus_table_rows(rows: &[AnnulusRow]) -> Vec<(Option<u32>, Option<f64>, f64, f64, &str)> {
    rows.iter()
        .map(|r| (Some(r.n), Some(r.inner_radius), r.gap, r.bound, ""))
        .collect()
}
