//! Serial vs parallel timings for the pairwise kernel sums.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use varfrac::choquard::Discretization;
use varfrac::exponents::{ExponentBundle, ScalarExponentField, SymmetricExponentField};
use varfrac::grid::{set_parallel, Grid1D, GridFunction};
use varfrac::sobolev::{flap_apply, gagliardo_modular};

fn bundle() -> ExponentBundle {
    ExponentBundle {
        p: SymmetricExponentField::from_samples(
            |x, y| 2.0 + 0.2 * (std::f64::consts::PI * (x + y) / 4.0).cos(),
            -1.0,
            1.0,
            128,
        ),
        s: SymmetricExponentField::from_samples(
            |x, y| 0.4 - 0.05 * (x - y).abs(),
            -1.0,
            1.0,
            128,
        ),
        alpha: ScalarExponentField::constant(0.5),
        r: ScalarExponentField::constant(2.0),
        dim: 1,
    }
}

fn test_function(grid: Grid1D) -> GridFunction {
    GridFunction::from_fn(grid, |x| (1.0 - x * x).powi(2), true)
}

fn bench_modes<F: FnMut()>(c: &mut Criterion, name: &str, mut f: F) {
    let mut group = c.benchmark_group(name);
    for &parallel in &[false, true] {
        let label = if parallel { "parallel" } else { "serial" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &par| {
            set_parallel(par);
            b.iter(&mut f);
        });
    }
    set_parallel(true);
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let grid = Grid1D::new(-1.0, 1.0, 801).unwrap();
    let b = bundle();
    let u = test_function(grid);

    let b1 = b.clone();
    let u1 = u.clone();
    bench_modes(c, "gagliardo_modular_801", move || {
        let m = gagliardo_modular(&u1, &b1, 1.0).unwrap();
        criterion::black_box(m.total);
    });

    let b2 = b.clone();
    let u2 = u.clone();
    bench_modes(c, "flap_apply_801", move || {
        let out = flap_apply(&u2, &b2);
        criterion::black_box(out.sup_norm());
    });

    let disc = Discretization::new_unchecked(grid, &b);
    let u3 = u.clone();
    bench_modes(c, "energy_gradient_801", move || {
        let g = disc.gradient(&u3).unwrap();
        criterion::black_box(g.sup_norm());
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
