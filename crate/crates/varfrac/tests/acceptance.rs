//! End-to-end acceptance suite. Each criterion prints a single PASS/FAIL
//! line; the test fails if any criterion does.
//!
//! All criteria run sequentially inside one test so that the serial/parallel
//! execution mode can be toggled without racing other tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use varfrac::choquard::Discretization;
use varfrac::config::{DefaultInstance, InstanceConfig, ScalarSpec};
use varfrac::experiments::{
    annulus_rate_check, compactness_verdict, concentration_sequence, fit_loglog_slope,
    q_field_builder, sobolev_modular_sequence, theorem4_bound, ConcentrationFamily, Verdict,
};
use varfrac::exponents::{
    check_hls_identity, ExponentBundle, ScalarExponentField, SymmetricExponentField,
};
use varfrac::grid::{Grid1D, GridFunction};
use varfrac::nakano::{
    check_norm_modular, conjugate_exponent, holder_pairing, luxemburg_norm_lp, modular_lp,
    power_norm_relation,
};
use varfrac::solver::{mountain_pass_solve_with, MountainPassConfig};

type CritResult = std::result::Result<(), String>;

macro_rules! check {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn run_criterion(n: u32, name: &str, body: impl FnOnce() -> CritResult) -> bool {
    match body() {
        Ok(()) => {
            println!("criterion {n} ({name}): PASS");
            true
        }
        Err(msg) => {
            println!("criterion {n} ({name}): FAIL - {msg}");
            false
        }
    }
}

fn random_function(grid: Grid1D, rng: &mut ChaCha8Rng) -> GridFunction {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let values: Vec<f64> = (0..grid.len())
        .map(|_| scale * rng.gen_range(-1.0..1.0))
        .collect();
    GridFunction::new(grid, values, false).unwrap()
}

/// Smooth zero-boundary profile from a handful of random sine modes.
fn random_smooth(grid: Grid1D, rng: &mut ChaCha8Rng) -> GridFunction {
    let (a, b) = (grid.a(), grid.b());
    let coeffs: Vec<f64> = (1..=6)
        .map(|k| rng.gen_range(-0.5..0.5) / k as f64)
        .collect();
    GridFunction::from_fn(
        grid,
        move |x| {
            let t = (x - a) / (b - a);
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * ((i + 1) as f64 * std::f64::consts::PI * t).sin())
                .sum()
        },
        true,
    )
}

fn criterion1_norm_modular() -> CritResult {
    let grid = Grid1D::new(0.0, 1.0, 101).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..500 {
        let a0 = rng.gen_range(1.5..3.0);
        let a1 = rng.gen_range(-0.4..0.4);
        let p = ScalarExponentField::affine(a0, a1, 0.0, 1.0);
        let u = random_function(grid, &mut rng);

        let report = check_norm_modular(&u, &p, 1e-9).map_err(|e| e.to_string())?;
        check!(
            report.all_hold() && report.min_slack() >= -1e-9,
            "case {case}: norm-modular clause violated, min slack {}",
            report.min_slack()
        );

        let norm = luxemburg_norm_lp(&u, &p, 1e-12).map_err(|e| e.to_string())?;
        let unit = u.scale(1.0 / norm);
        let residual = (modular_lp(&unit, &p).map_err(|e| e.to_string())?.value - 1.0).abs();
        check!(
            residual <= 1e-8,
            "case {case}: unit-ball modular residual {residual:.3e}"
        );

        for &c in &[1e-3, 1e-2, 1e-1, 10.0, 100.0, 1000.0] {
            let scaled = luxemburg_norm_lp(&u.scale(c), &p, 1e-12).map_err(|e| e.to_string())?;
            let rel = (scaled - c * norm).abs() / (c * norm);
            check!(
                rel <= 1e-8,
                "case {case}: homogeneity at c = {c} off by {rel:.3e}"
            );
        }
    }
    Ok(())
}

fn criterion2_holder_power() -> CritResult {
    let grid = Grid1D::new(0.0, 1.0, 101).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..200 {
        let p = ScalarExponentField::affine(
            rng.gen_range(1.3..2.8),
            rng.gen_range(-0.2..0.2),
            0.0,
            1.0,
        );
        let u = random_function(grid, &mut rng);
        let v = random_function(grid, &mut rng);
        let h = holder_pairing(&u, &v, &p).map_err(|e| e.to_string())?;
        check!(
            h.lhs <= h.rhs_sharp * (1.0 + 1e-12) + 1e-12,
            "case {case}: sharp-constant pairing bound violated ({} > {})",
            h.lhs,
            h.rhs_sharp
        );
        check!(
            h.rhs_sharp <= h.rhs_factor2 * (1.0 + 1e-12),
            "case {case}: sharp constant exceeds factor 2"
        );
    }
    for case in 0..200 {
        let p = ScalarExponentField::affine(
            rng.gen_range(1.5..2.5),
            rng.gen_range(-0.2..0.2),
            0.0,
            1.0,
        );
        let q = ScalarExponentField::affine(
            rng.gen_range(1.0..2.0),
            rng.gen_range(-0.2..0.2),
            0.0,
            1.0,
        );
        let u = random_function(grid, &mut rng);
        let report = power_norm_relation(&u, &p, &q, 1e-6).map_err(|e| e.to_string())?;
        check!(
            report.all_hold(),
            "case {case}: power relation clause violated (norm_pq = {}, norm_uq_p = {})",
            report.norm_pq,
            report.norm_uq_p
        );
    }
    for &pc in &[1.7, 2.0, 3.0] {
        let p = ScalarExponentField::constant(pc);
        let u = random_function(grid, &mut rng);
        let norm = luxemburg_norm_lp(&u, &p, 1e-13).map_err(|e| e.to_string())?;
        let classical = grid
            .integrate(|i, _| u.values()[i].abs().powf(pc))
            .powf(1.0 / pc);
        let rel = (norm - classical).abs() / classical;
        check!(
            rel <= 1e-10,
            "constant p = {pc}: Luxemburg vs classical norm off by {rel:.3e}"
        );
    }
    Ok(())
}

fn criterion3_gradient_oracle() -> CritResult {
    let inst = DefaultInstance::standard(401);
    let grid = inst.grid().map_err(|e| e.to_string())?;
    let bundle = inst.bundle().map_err(|e| e.to_string())?;
    let disc = Discretization::new(grid, &bundle).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(303);

    let eps = 1e-5;
    for case in 0..20 {
        let u = random_smooth(grid, &mut rng);
        let g = disc.gradient(&u).map_err(|e| e.to_string())?;
        let gmax = g.sup_norm();
        for i in 1..grid.len() - 1 {
            let mut up = u.clone();
            up.values_mut()[i] += eps;
            let mut dn = u.clone();
            dn.values_mut()[i] -= eps;
            let fd = (disc.energy(&up).map_err(|e| e.to_string())?
                - disc.energy(&dn).map_err(|e| e.to_string())?)
                / (2.0 * eps);
            // relative to the gradient scale: at nodes where the neighbor
            // differences are of size eps the central difference itself
            // carries an O(|u_i - u_j|^{p-3} eps^2) truncation kink
            let rel = (fd - g.values()[i]).abs() / gmax;
            check!(
                rel <= 1e-5,
                "case {case}: gradient FD mismatch at node {i}, relative error {rel:.3e}"
            );
        }
    }

    let u = random_smooth(grid, &mut rng);
    let v = random_smooth(grid, &mut rng);
    let exact = disc.k_derivative(&u, &v).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for &e in &[1e-3, 1e-4, 1e-5] {
        let kp = disc.k_value(&u.axpy(e, &v)).map_err(|er| er.to_string())?;
        let km = disc.k_value(&u.axpy(-e, &v)).map_err(|er| er.to_string())?;
        errs.push(((kp - km) / (2.0 * e) - exact).abs());
    }
    let ratio = errs[0] / errs[1].max(1e-300);
    check!(
        (30.0..300.0).contains(&ratio),
        "K' directional difference not O(eps^2): err(1e-3)/err(1e-4) = {ratio:.2}"
    );
    check!(
        errs[2] <= errs[1] * 1.5 + 1e-12,
        "K' error did not keep shrinking at eps = 1e-5 ({:.3e} vs {:.3e})",
        errs[2],
        errs[1]
    );
    Ok(())
}

fn criterion4_mountain_pass() -> CritResult {
    let inst = DefaultInstance::standard(201);
    let grid = inst.grid().map_err(|e| e.to_string())?;
    let bundle = inst.bundle().map_err(|e| e.to_string())?;
    let disc = Discretization::new(grid, &bundle).map_err(|e| e.to_string())?;
    let cfg = MountainPassConfig::default();

    varfrac::set_parallel(false);
    let solve = || mountain_pass_solve_with(&disc, &bundle, &cfg);
    let report = solve();
    let rerun = solve();
    varfrac::set_parallel(true);

    let report = report.map_err(|e| e.to_string())?;
    let rerun = rerun.map_err(|e| e.to_string())?;

    check!(
        report.ring_min_energy > 0.0,
        "ring certificate failed: d_hat = {} at rho = {}",
        report.ring_min_energy,
        report.ring_rho
    );
    check!((report.ring_rho - 0.1).abs() < 1e-15, "unexpected ring radius");
    check!(report.valley_t > 0.0, "valley search did not terminate usefully");
    check!(
        report.converged && report.residual <= 1e-6,
        "solver did not converge: residual {:.3e} after {} outer iterations",
        report.residual,
        report.outer_iters
    );
    check!(
        report.critical_value >= report.ring_min_energy - 1e-6,
        "critical value {} below ring level {}",
        report.critical_value,
        report.ring_min_energy
    );
    check!(report.u_star.sup_norm() > 0.0, "trivial critical point");

    let a = serde_json::to_string(&report).map_err(|e| e.to_string())?;
    let b = serde_json::to_string(&rerun).map_err(|e| e.to_string())?;
    check!(a == b, "serial rerun with the same seed is not byte-identical");
    Ok(())
}

fn criterion5_critical_touch_solve() -> CritResult {
    let mut cfg = InstanceConfig::default();
    cfg.m = 201;
    cfg.r = ScalarSpec::CriticalTouch {
        x0: 0.0,
        c0: 1.0,
        beta: 0.5,
        floor: 2.3,
    };
    let grid = cfg.grid().map_err(|e| e.to_string())?;
    let bundle = cfg.bundle().map_err(|e| e.to_string())?;
    let disc = Discretization::new(grid, &bundle).map_err(|e| e.to_string())?;
    let report =
        mountain_pass_solve_with(&disc, &bundle, &cfg.solver).map_err(|e| e.to_string())?;
    check!(
        report.residual <= 1e-5,
        "residual {:.3e} above 1e-5 on the touching instance",
        report.residual
    );
    check!(
        report.u_star.sup_norm() > 1e-6,
        "touching-instance iterate is trivial (sup = {:.3e})",
        report.u_star.sup_norm()
    );
    Ok(())
}

fn constant_bundle(p: f64, s: f64) -> ExponentBundle {
    ExponentBundle {
        p: SymmetricExponentField::constant(p),
        s: SymmetricExponentField::constant(s),
        alpha: ScalarExponentField::constant(0.5),
        r: ScalarExponentField::constant(3.0),
        dim: 1,
    }
}

fn criterion6_compactness_dichotomy() -> CritResult {
    let grid = Grid1D::new(-1.0, 1.0, 1601).map_err(|e| e.to_string())?;
    let bundle = constant_bundle(2.2, 0.4);
    let ps_star = bundle
        .critical_exponent_field(&grid)
        .map_err(|e| e.to_string())?;
    let family =
        ConcentrationFamily::new(0.0, vec![1, 2, 4, 8, 16, 32]).map_err(|e| e.to_string())?;

    // strictly subcritical growth: all mass leaks out of every ball
    let q_sub = ScalarExponentField::constant(2.2);
    let sub = compactness_verdict(&bundle, &q_sub, &family, grid, 0.0)
        .map_err(|e| e.to_string())?;
    check!(
        sub.verdict == Verdict::MassEscapes,
        "subcritical field: expected mass escapes, got {}",
        sub.verdict
    );
    check!(
        sub.rows.last().unwrap().modular <= 0.1 * sub.base_modular,
        "subcritical field: tail modular above 10% of the first"
    );

    // fast touching rate (beta = 1/2): compactness still fails
    let q_fast = q_field_builder(&ps_star, 0.0, 30.0, 0.5, 2.3, &grid)
        .map_err(|e| e.to_string())?;
    let fast = compactness_verdict(&bundle, &q_fast, &family, grid, 0.0)
        .map_err(|e| e.to_string())?;
    check!(
        fast.verdict == Verdict::MassEscapes,
        "beta = 1/2 touching field: expected mass escapes, got {}",
        fast.verdict
    );

    // slow touching rate (beta = 1): the explicit lower bound persists
    let q_slow =
        q_field_builder(&ps_star, 0.0, 1.0, 1.0, 2.3, &grid).map_err(|e| e.to_string())?;
    let bound = theorem4_bound(&bundle, &grid, 1.0);
    let slow = compactness_verdict(&bundle, &q_slow, &family, grid, bound)
        .map_err(|e| e.to_string())?;
    check!(
        slow.verdict == Verdict::ConcentrationPersists,
        "beta = 1 field: expected persistence, got {}",
        slow.verdict
    );
    let tail_min = slow.rows[slow.rows.len() / 2..]
        .iter()
        .map(|r| r.modular)
        .fold(f64::INFINITY, f64::min);
    check!(
        tail_min >= 0.5 * bound,
        "persistent modular {tail_min:.4} below half the explicit bound {bound:.4}"
    );
    Ok(())
}

fn criterion7_scaling() -> CritResult {
    let grid = Grid1D::new(-1.0, 1.0, 1601).map_err(|e| e.to_string())?;
    let bundle = constant_bundle(2.0, 0.4);
    let family =
        ConcentrationFamily::new(0.0, vec![1, 2, 4, 8, 16, 32]).map_err(|e| e.to_string())?;

    let q = ScalarExponentField::constant(2.0);
    let mut points = Vec::new();
    for &n in &family.scales {
        let phi = concentration_sequence(&family, n, &bundle, grid).map_err(|e| e.to_string())?;
        points.push((n as f64, modular_lp(&phi, &q).map_err(|e| e.to_string())?.value));
    }
    let slope = fit_loglog_slope(&points);
    let target = -2.0 * 0.4;
    check!(
        (slope - target).abs() <= 0.2 * target.abs(),
        "L^p modular slope {slope:.4} not within 20% of {target}"
    );

    let seq = sobolev_modular_sequence(&family, &bundle, grid).map_err(|e| e.to_string())?;
    let last = seq[seq.len() - 1].1;
    let prev = seq[seq.len() - 2].1;
    let increment = (last - prev).abs() / prev;
    check!(
        increment <= 0.02,
        "Sobolev modular still moving by {increment:.3} at n = 32"
    );
    Ok(())
}

fn criterion8_identities() -> CritResult {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let alpha = ScalarExponentField::affine(0.4, 0.1, -1.0, 1.0);
    let pairs: Vec<(f64, f64)> = (0..1000)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let residual = check_hls_identity(&alpha, 1, &pairs).map_err(|e| e.to_string())?;
    check!(
        residual <= 1e-12,
        "HLS exponent identity residual {residual:.3e}"
    );

    let inst = DefaultInstance::standard(401);
    let grid = inst.grid().map_err(|e| e.to_string())?;
    let bundle = inst.bundle().map_err(|e| e.to_string())?;
    let p_diag = bundle.p.diagonal();
    let p_conj = conjugate_exponent(&p_diag).map_err(|e| e.to_string())?;
    let worst = grid
        .nodes()
        .iter()
        .map(|&x| (1.0 / p_diag.eval(x) + 1.0 / p_conj.eval(x) - 1.0).abs())
        .fold(0.0f64, f64::max);
    check!(worst <= 1e-15, "conjugate identity residual {worst:.3e}");

    // variable critical field: the ratio stays within one order of magnitude
    let fine = DefaultInstance::standard(1601);
    let fine_grid = fine.grid().map_err(|e| e.to_string())?;
    let fine_bundle = fine.bundle().map_err(|e| e.to_string())?;
    let ps_star = fine_bundle
        .critical_exponent_field(&fine_grid)
        .map_err(|e| e.to_string())?;
    let q = q_field_builder(&ps_star, 0.0, 0.8, 0.5, 2.3, &fine_grid)
        .map_err(|e| e.to_string())?;
    // annuli small enough that the variation of p_s* itself stays well below
    // the logarithmic margin
    let rows = annulus_rate_check(&fine_bundle, &q, 0.0, 0.1, 0.5, 2, &fine_grid)
        .map_err(|e| e.to_string())?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for row in &rows {
        lo = lo.min(row.ratio);
        hi = hi.max(row.ratio);
    }
    check!(
        lo > 0.0 && hi <= 10.0 * lo,
        "annulus ratio spread {:.2} exceeds one order of magnitude",
        hi / lo
    );

    // constant critical field: the ratio is the exact constant C0
    let cgrid = Grid1D::new(-1.0, 1.0, 1601).map_err(|e| e.to_string())?;
    let cbundle = constant_bundle(2.2, 0.4);
    let cps = cbundle
        .critical_exponent_field(&cgrid)
        .map_err(|e| e.to_string())?;
    let cq = q_field_builder(&cps, 0.0, 0.8, 0.5, 2.3, &cgrid).map_err(|e| e.to_string())?;
    let crows =
        annulus_rate_check(&cbundle, &cq, 0.0, 0.2, 0.5, 3, &cgrid).map_err(|e| e.to_string())?;
    for row in &crows {
        check!(
            row.ratio >= 0.8 - 1e-9 && (row.ratio - 0.8).abs() <= 0.05 * 0.8,
            "constant-field annulus ratio {:.5} away from C0 = 0.8 at n = {}",
            row.ratio,
            row.n
        );
    }
    Ok(())
}

#[test]
fn acceptance() {
    let mut ok = true;
    ok &= run_criterion(1, "norm-modular suite", criterion1_norm_modular);
    ok &= run_criterion(2, "Hoelder and power suites", criterion2_holder_power);
    ok &= run_criterion(3, "gradient oracle", criterion3_gradient_oracle);
    ok &= run_criterion(4, "mountain-pass run", criterion4_mountain_pass);
    ok &= run_criterion(5, "critical-touch run", criterion5_critical_touch_solve);
    ok &= run_criterion(6, "compactness dichotomy", criterion6_compactness_dichotomy);
    ok &= run_criterion(7, "concentration-family scaling", criterion7_scaling);
    ok &= run_criterion(8, "algebraic identities", criterion8_identities);
    assert!(ok, "one or more acceptance criteria failed");
}
