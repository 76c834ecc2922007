//! Mountain-pass solver for the discrete energy.
//!
//! The search runs in two phases. A path-deformation phase maintains a
//! discrete path from 0 to a valley point and repeatedly pulls its
//! highest-energy knot downhill (steepest descent with Armijo backtracking),
//! which steers the knot toward the saddle. Once the gradient there is small,
//! a damped Newton phase with the exact Hessian polishes the candidate to
//! solver tolerance. All randomness comes from a seeded ChaCha stream, and
//! all reductions are index-ordered, so reruns are byte-identical.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::choquard::Discretization;
use crate::error::{Error, Result};
use crate::exponents::ExponentBundle;
use crate::grid::{Grid1D, GridFunction};
use crate::sobolev::sobolev_norm;

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassConfig {
    /// Number of path segments; the path has `path_points + 1` knots.
    pub path_points: usize,
    /// Residual (gradient sup norm) at which the run counts as converged.
    pub descent_tol: f64,
    pub max_outer_iters: usize,
    /// Armijo descent steps applied to the maximal knot per outer iteration.
    pub max_descent_steps: usize,
    pub armijo_c: f64,
    /// Residual below which the Newton polish is attempted.
    pub newton_threshold: f64,
    pub max_newton_iters: usize,
    /// Radius of the ring used for the geometry certificate.
    pub ring_rho: f64,
    /// Number of random ring directions sampled for the certificate.
    pub ring_samples: usize,
    pub seed: u64,
    /// Luxemburg-norm tolerance used for ring rescaling.
    pub norm_tol: f64,
}

impl Default for MountainPassConfig {
    fn default() -> Self {
        MountainPassConfig {
            path_points: 16,
            descent_tol: 1e-8,
            max_outer_iters: 400,
            max_descent_steps: 8,
            armijo_c: 1e-4,
            newton_threshold: 3e-3,
            max_newton_iters: 100,
            ring_rho: 0.1,
            ring_samples: 64,
            seed: 0,
            norm_tol: 1e-10,
        }
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Energy of the highest knot on the current path.
    pub path_max_energy: f64,
    /// Gradient sup norm at that knot.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub u_star: GridFunction,
    pub critical_value: f64,
    pub residual: f64,
    pub converged: bool,
    pub outer_iters: usize,
    pub newton_iters: usize,
    /// Minimum sampled energy on the sphere of radius `ring_rho`.
    pub ring_min_energy: f64,
    pub ring_rho: f64,
    /// Scaling of the seed direction at which the energy first went negative.
    pub valley_t: f64,
    pub history: Vec<IterRecord>,
}

/// Sample random zero-boundary directions rescaled to Sobolev norm `rho` and
/// return the minimum energy found on that sphere.
///
/// A strictly positive return value is the empirical mountain-ring
/// certificate: the origin (energy 0) is separated from the valley by a
/// positive barrier at radius `rho`.
pub fn verify_mp_geometry(
    disc: &Discretization,
    bundle: &ExponentBundle,
    rho: f64,
    samples: usize,
    seed: u64,
    norm_tol: f64,
) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Config(format!("ring radius {rho} must be positive")));
    }
    if samples == 0 {
        return Err(Error::Config("ring needs at least one sample".into()));
    }
    let grid = disc.grid();
    let m = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_energy = f64::INFINITY;
    for _ in 0..samples {
        let mut vals = vec![0.0; m];
        for v in vals.iter_mut().take(m - 1).skip(1) {
            *v = rng.gen_range(-1.0..1.0);
        }
        let dir = GridFunction::new(grid, vals, true)?;
        let norm = sobolev_norm(&dir, bundle, norm_tol)?;
        if norm == 0.0 {
            continue;
        }
        let on_ring = dir.scale(rho / norm);
        min_energy = min_energy.min(disc.energy(&on_ring)?);
    }
    if !min_energy.is_finite() {
        return Err(Error::MountainPassGeometry(
            "no usable ring sample was generated".into(),
        ));
    }
    Ok(min_energy)
}

/// Scale a unit-norm seed direction by doubling until the energy is negative.
///
/// Returns the valley point and the scaling at which the energy first dropped
/// below zero. Failure to find one within 2^40 indicates the superlinearity
/// `2 r^- > p^+` does not hold for this instance.
pub fn find_valley_point(
    disc: &Discretization,
    bundle: &ExponentBundle,
    norm_tol: f64,
) -> Result<(GridFunction, f64)> {
    let grid = disc.grid();
    let len = grid.b() - grid.a();
    let a = grid.a();
    let shape = GridFunction::from_fn(
        grid,
        |x| (std::f64::consts::PI * (x - a) / len).sin(),
        true,
    );
    let norm = sobolev_norm(&shape, bundle, norm_tol)?;
    let unit = shape.scale(1.0 / norm);
    let mut t = 1.0;
    for _ in 0..=40 {
        let candidate = unit.scale(t);
        if disc.energy(&candidate)? < 0.0 {
            return Ok((candidate, t));
        }
        t *= 2.0;
    }
    Err(Error::ExponentMisconfiguration(
        "energy never became negative along the ray; check 2 r^- > p^+".into(),
    ))
}

/// Damped Newton iteration on the interior gradient system.
///
/// Returns the polished point and its residual when the residual reached
/// `tol`; `None` when the iteration stalled, diverged, hit a singular
/// Hessian, or drained below `energy_floor` (a low-residual iterate with
/// energy under the ring level is sliding into the trivial well, not toward
/// the saddle).
fn newton_polish(
    disc: &Discretization,
    start: &GridFunction,
    tol: f64,
    max_iters: usize,
    energy_floor: f64,
) -> Result<Option<(GridFunction, f64, usize)>> {
    let grid = disc.grid();
    let m = grid.len();
    let mut u = start.clone();
    let mut res = disc.residual(&u)?;
    for it in 0..max_iters {
        if res <= tol {
            return Ok(Some((u, res, it)));
        }
        let g = disc.gradient(&u)?;
        let h = disc.hessian_interior(&u)?;
        let rhs = nalgebra::DVector::from_iterator(m - 2, g.values()[1..m - 1].iter().copied());
        let lu = h.lu();
        let delta = match lu.solve(&rhs) {
            Some(d) => d,
            None => return Ok(None),
        };
        // damp: halve the step until the residual does not increase
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..25 {
            let mut vals = u.values().to_vec();
            for k in 1..m - 1 {
                vals[k] -= damping * delta[k - 1];
            }
            let trial = GridFunction::new(grid, vals, true)?;
            let trial_res = match disc.residual(&trial) {
                Ok(r) => r,
                Err(_) => {
                    damping *= 0.5;
                    continue;
                }
            };
            if trial_res < res {
                accepted = Some((trial, trial_res));
                break;
            }
            damping *= 0.5;
        }
        match accepted {
            Some((trial, trial_res)) => {
                u = trial;
                res = trial_res;
            }
            None => return Ok(None),
        }
        // a polished saddle must stay away from the trivial critical point
        if u.sup_norm() < 1e-10 || disc.energy(&u)? < energy_floor {
            return Ok(None);
        }
    }
    if res <= tol {
        return Ok(Some((u, res, max_iters)));
    }
    Ok(None)
}

/// Pull one knot downhill along the ridge of ray maxima.
///
/// The knot is first lifted onto the ridge, then preconditioned steepest
/// descent is line-searched on the *post-projection* energy: every accepted
/// step strictly lowers the ridge energy, so the knot can neither tunnel
/// into a well below the barrier nor enter a rebuild limit cycle.
fn descend_knot(
    disc: &Discretization,
    start: &GridFunction,
    steps: usize,
    armijo_c: f64,
    tol: f64,
) -> Result<GridFunction> {
    let grid = disc.grid();
    let m = grid.len();
    let mut u = ray_maximize(disc, start)?;
    let mut energy = disc.energy(&u)?;
    // warm-start the step size from the previous accepted step; each
    // backtracking probe costs a full ridge projection
    let mut tau_seed: Option<f64> = None;
    for _ in 0..steps {
        let g = disc.gradient(&u)?;
        // quadrature-weight preconditioning recovers the L2-gradient scale
        let dir: Vec<f64> = (0..m)
            .map(|k| {
                if k == 0 || k == m - 1 {
                    0.0
                } else {
                    g.values()[k] / grid.weight(k)
                }
            })
            .collect();
        let dir_sup = dir.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if dir_sup <= tol {
            break;
        }
        // on the ridge the gradient has no ray component, so this is also
        // the downhill slope along the ridge itself
        let slope: f64 = (0..m).map(|k| g.values()[k] * dir[k]).sum();
        // cap the first trial displacement: unbounded descent runs off to the
        // superlinear region where the energy is unbounded below
        let step_cap = 0.25 * (1.0 + u.sup_norm());
        let tau_cap = (step_cap / dir_sup).min(1.0);
        let mut tau = match tau_seed {
            Some(t) => (2.0 * t).min(tau_cap),
            None => tau_cap,
        };
        let mut moved = false;
        for _ in 0..40 {
            let mut vals = u.values().to_vec();
            for k in 1..m - 1 {
                vals[k] -= tau * dir[k];
            }
            let trial = GridFunction::new(grid, vals, true)?;
            // an overflowing trial or projection is simply a rejected step
            let proj = match ray_maximize(disc, &trial) {
                Ok(p) => p,
                Err(_) => {
                    tau *= 0.5;
                    continue;
                }
            };
            let trial_energy = match disc.energy(&proj) {
                Ok(e) => e,
                Err(_) => {
                    tau *= 0.5;
                    continue;
                }
            };
            if trial_energy <= energy - armijo_c * tau * slope {
                u = proj;
                energy = trial_energy;
                tau_seed = Some(tau);
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(u)
}

/// Rescale `u` to the maximum of the energy along its ray `t -> I[t u]`.
///
/// Under `2 r^- > p^+` the ray energy rises from 0 to a single hump before
/// diving to the valley, so the maximizer is the unique positive root of
/// `s(t) = <I'[t u], u>`. Keeping the deformed knots on this ridge is what
/// stops the discrete path from tunnelling past the barrier between knots.
fn ray_maximize(disc: &Discretization, u: &GridFunction) -> Result<GridFunction> {
    if u.sup_norm() == 0.0 {
        return Ok(u.clone());
    }
    // treat an overflowing evaluation as far past the hump
    let slope = |t: f64| -> f64 {
        match disc.gradient(&u.scale(t)) {
            Ok(g) => g
                .values()
                .iter()
                .zip(u.values())
                .map(|(gk, uk)| gk * uk)
                .sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut s_lo = slope(1.0);
    let mut s_hi = s_lo;
    if s_lo > 0.0 {
        for _ in 0..60 {
            hi *= 2.0;
            s_hi = slope(hi);
            if s_hi <= 0.0 {
                break;
            }
            lo = hi;
            s_lo = s_hi;
        }
    } else {
        for _ in 0..60 {
            lo *= 0.5;
            s_lo = slope(lo);
            if s_lo > 0.0 {
                break;
            }
            hi = lo;
            s_hi = s_lo;
        }
    }
    if !(s_lo > 0.0 && s_hi <= 0.0) {
        // no bracket: leave the knot where it is rather than guess
        return Ok(u.clone());
    }
    // the hump is second-order flat at its top, so a relative width of 1e-7
    // in t already pins the ridge energy to ~1e-14 relative
    for _ in 0..60 {
        if hi - lo <= 1e-7 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(u.scale(0.5 * (lo + hi)))
}

/// Run the full mountain-pass search on one instance.
pub fn mountain_pass_solve(
    grid: Grid1D,
    bundle: &ExponentBundle,
    config: &MountainPassConfig,
) -> Result<SolveReport> {
    if config.path_points < 8 {
        return Err(Error::Config(format!(
            "path_points = {} < 8 gives too coarse a path",
            config.path_points
        )));
    }
    let disc = Discretization::new(grid, bundle)?;
    mountain_pass_solve_with(&disc, bundle, config)
}

/// Same as [`mountain_pass_solve`], reusing a prebuilt discretization.
pub fn mountain_pass_solve_with(
    disc: &Discretization,
    bundle: &ExponentBundle,
    config: &MountainPassConfig,
) -> Result<SolveReport> {
    // the superlinearity hypothesis behind the whole geometry; without it
    // the sampled ring certificate can pass by accident and the search
    // wanders with nothing to converge to
    let xs = disc.grid().nodes();
    let r_min = bundle.r.min_on(&xs);
    let p_max = bundle.p.max_on_pairs(&xs);
    if !(2.0 * r_min > p_max) {
        return Err(Error::ExponentMisconfiguration(format!(
            "2 r^- = {} <= p^+ = {p_max}: no mountain-pass geometry",
            2.0 * r_min
        )));
    }
    let ring_min_energy = verify_mp_geometry(
        disc,
        bundle,
        config.ring_rho,
        config.ring_samples,
        config.seed,
        config.norm_tol,
    )?;
    if ring_min_energy <= 0.0 {
        return Err(Error::MountainPassGeometry(format!(
            "sampled ring minimum {ring_min_energy} is not positive at radius {}",
            config.ring_rho
        )));
    }
    let (valley, valley_t) = find_valley_point(disc, bundle, config.norm_tol)?;

    let k = config.path_points;
    let mut path: Vec<GridFunction> = (0..=k)
        .map(|i| valley.scale(i as f64 / k as f64))
        .collect();

    let mut history = Vec::new();
    let mut best: Option<(GridFunction, f64)> = None;
    let mut newton_iters = 0;
    let mut outer_done = 0;
    // a low-residual point whose energy sits below the ring barrier is in the
    // trivial well; Newton started there would only converge to zero
    let energy_floor = 0.5 * ring_min_energy;
    // after a failed polish, wait for the residual to halve before retrying
    let mut retry_below = f64::INFINITY;

    for iter in 0..config.max_outer_iters {
        outer_done = iter + 1;
        // locate the highest interior knot
        let mut m_star = 1;
        let mut e_max = f64::NEG_INFINITY;
        for (i, w) in path.iter().enumerate().take(k).skip(1) {
            let e = disc.energy(w)?;
            if e > e_max {
                e_max = e;
                m_star = i;
            }
        }
        let residual = disc.residual(&path[m_star])?;
        history.push(IterRecord {
            iter,
            path_max_energy: e_max,
            residual,
        });
        if best.as_ref().map_or(true, |(_, r)| residual < *r) {
            best = Some((path[m_star].clone(), residual));
        }
        if residual <= config.descent_tol {
            break;
        }
        if residual <= config.newton_threshold && residual <= retry_below {
            if let Some((u, res, its)) = newton_polish(
                disc,
                &path[m_star],
                config.descent_tol,
                config.max_newton_iters,
                energy_floor,
            )? {
                newton_iters = its;
                best = Some((u, res));
                break;
            }
            retry_below = residual * 0.5;
        }
        path[m_star] = descend_knot(
            disc,
            &path[m_star],
            config.max_descent_steps,
            config.armijo_c,
            config.descent_tol,
        )?;
        // relax the neighbors toward the updated knot, but never uphill:
        // unconditional averaging can rebuild a high knot and erase the
        // descent progress in a limit cycle
        let energy_of = |w: &GridFunction| disc.energy(w).unwrap_or(f64::INFINITY);
        if m_star >= 2 {
            let cand = path[m_star - 2].scale(0.5).axpy(0.5, &path[m_star]);
            if energy_of(&cand) <= energy_of(&path[m_star - 1]) {
                path[m_star - 1] = cand;
            }
        }
        if m_star + 2 <= k {
            let cand = path[m_star].scale(0.5).axpy(0.5, &path[m_star + 2]);
            if energy_of(&cand) <= energy_of(&path[m_star + 1]) {
                path[m_star + 1] = cand;
            }
        }
    }

    // final polish attempt from the best candidate, if not converged yet
    let (mut u_star, mut residual) = best.expect("at least one outer iteration ran");
    if residual > config.descent_tol {
        if let Some((u, res, its)) = newton_polish(
            disc,
            &u_star,
            config.descent_tol,
            config.max_newton_iters,
            energy_floor,
        )? {
            newton_iters = its;
            u_star = u;
            residual = res;
        }
    }

    let critical_value = disc.energy(&u_star)?;
    let converged =
        residual <= config.descent_tol && u_star.sup_norm() > 1e-10 && critical_value >= energy_floor;
    Ok(SolveReport {
        u_star,
        critical_value,
        residual,
        converged,
        outer_iters: outer_done,
        newton_iters,
        ring_min_energy,
        ring_rho: config.ring_rho,
        valley_t,
        history,
    })
}

/// Both sides of the Palais-Smale coercivity inequality at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsBound {
    pub beta: f64,
    /// `I[u] - beta * <I'[u], u>`.
    pub lhs: f64,
    /// `(1/p+ - beta) * min(norm^{p+}, norm^{p-})`.
    pub rhs: f64,
    pub norm: f64,
    pub holds: bool,
}

/// Evaluate `I[u] - beta <I'[u], u> >= (1/p+ - beta) min(||u||^{p+}, ||u||^{p-})`.
///
/// `beta` must lie strictly between `1/(2 r^-)` and `1/p^+`; the difference of
/// those reciprocals is exactly the superlinearity gap that makes bounded
/// Palais-Smale sequences precompact.
pub fn ps_functional_bound(
    disc: &Discretization,
    bundle: &ExponentBundle,
    u: &GridFunction,
    beta: f64,
) -> Result<PsBound> {
    let grid = disc.grid();
    let xs = grid.nodes();
    let p_max = bundle.p.max_on_pairs(&xs);
    let p_min = bundle.p.min_on_pairs(&xs);
    let r_min = bundle.r.min_on(&xs);
    let lo = 1.0 / (2.0 * r_min);
    let hi = 1.0 / p_max;
    if !(beta > lo && beta < hi) {
        return Err(Error::Config(format!(
            "beta = {beta} outside the admissible window ({lo}, {hi})"
        )));
    }
    let energy = disc.energy(u)?;
    let g = disc.gradient(u)?;
    let pairing: f64 = g
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, b)| a * b)
        .sum();
    let lhs = energy - beta * pairing;
    let norm = sobolev_norm(u, bundle, 1e-10)?;
    let rhs = (1.0 / p_max - beta) * norm.powf(p_max).min(norm.powf(p_min));
    Ok(PsBound {
        beta,
        lhs,
        rhs,
        norm,
        holds: lhs >= rhs - 1e-9 * (1.0 + rhs.abs()),
    })
}
