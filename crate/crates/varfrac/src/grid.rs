//! Uniform 1-D discretization of the domain, grid functions, and quadrature.
//!
//! Single integrals use the composite trapezoid rule. Double integrals over
//! the product domain optionally skip the diagonal `i == j`, which is the
//! discrete Cauchy principal value used by the nonlocal kernels: the grid
//! spacing `h` plays the role of the vanishing exclusion radius.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Enable or disable the data-parallel execution paths at runtime.
///
/// Has no effect unless the crate was built with the `parallel` feature.
/// Parallel reductions collect per-row partial sums and fold them in index
/// order, so results are bit-identical to the sequential path.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

/// Whether pairwise sums currently run on the rayon thread pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Sum `f(i)` over `0..m`, in parallel when enabled.
///
/// Row results are always reduced in index order.
pub(crate) fn indexed_sum<F>(m: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        let rows: Vec<f64> = (0..m).into_par_iter().map(&f).collect();
        return rows.into_iter().sum();
    }
    (0..m).map(f).sum()
}

/// Map `f(i)` over `0..m` into a vector, in parallel when enabled.
pub(crate) fn indexed_map<T, F>(m: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..m).into_par_iter().map(&f).collect();
    }
    (0..m).map(f).collect()
}

/// Uniform grid on the closed interval `[a, b]` with `m >= 3` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    a: f64,
    b: f64,
    m: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("invalid domain ({a}, {b})")));
        }
        if m < 3 {
            return Err(Error::Config(format!("node count {m} < 3")));
        }
        Ok(Grid1D { a, b, m })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `h = (b - a) / (m - 1)`.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.m - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.m);
        self.a + i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weight: `h/2` at the endpoints, `h` inside.
    pub fn weight(&self, i: usize) -> f64 {
        debug_assert!(i < self.m);
        if i == 0 || i == self.m - 1 {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    /// Composite trapezoid value of a node-indexed integrand.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(usize, f64) -> f64 + Sync,
    {
        indexed_sum(self.m, |i| self.weight(i) * f(i, self.node(i)))
    }

    /// Discrete double integral `sum w_i w_j F(x_i, x_j)`.
    ///
    /// With `exclude_diagonal` set, terms `i == j` are skipped; this is the
    /// discrete principal value. A non-finite included term aborts with the
    /// offending pair indices.
    pub fn double_integrate<F>(&self, f: F, exclude_diagonal: bool) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let m = self.m;
        let rows: Vec<std::result::Result<f64, (usize, usize)>> = indexed_map(m, |i| {
            let xi = self.node(i);
            let wi = self.weight(i);
            let mut acc = 0.0;
            for j in 0..m {
                if exclude_diagonal && i == j {
                    continue;
                }
                let term = f(xi, self.node(j));
                if !term.is_finite() {
                    return Err((i, j));
                }
                acc += self.weight(j) * term;
            }
            Ok(wi * acc)
        });
        let mut total = 0.0;
        for row in rows {
            match row {
                Ok(v) => total += v,
                Err((i, j)) => return Err(Error::NonFiniteIntegrand { i, j }),
            }
        }
        Ok(total)
    }
}

/// Real values at the grid nodes, with an optional zero-boundary convention.
///
/// `zero_boundary` is the discrete stand-in for membership in the closure of
/// compactly supported functions: the first and last nodal values are exactly
/// zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
    zero_boundary: bool,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>, zero_boundary: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGridFunction(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if zero_boundary && (values[0] != 0.0 || values[grid.len() - 1] != 0.0) {
            return Err(Error::InvalidGridFunction(
                "zero-boundary function with nonzero endpoint values".into(),
            ));
        }
        Ok(GridFunction {
            grid,
            values,
            zero_boundary,
        })
    }

    /// Sample `f` at the nodes. With `zero_boundary`, the endpoint values are
    /// forced to exactly zero.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F, zero_boundary: bool) -> Self {
        let m = grid.len();
        let mut values: Vec<f64> = (0..m).map(|i| f(grid.node(i))).collect();
        if zero_boundary {
            values[0] = 0.0;
            values[m - 1] = 0.0;
        }
        GridFunction {
            grid,
            values,
            zero_boundary,
        }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.len()],
            zero_boundary: true,
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn zero_boundary(&self) -> bool {
        self.zero_boundary
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            zero_boundary: self.zero_boundary,
        }
    }

    /// Nodewise `self + c * other`. Both functions must share the grid.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
            zero_boundary: self.zero_boundary && other.zero_boundary,
        }
    }

    /// Trapezoid integral of the nodal values.
    pub fn integrate(&self) -> f64 {
        self.grid.integrate(|i, _| self.values[i])
    }

    /// Serialize as CSV with header `x,value`, in node order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.node(i), v)?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Read a `x,value` CSV produced by [`write_csv`](Self::write_csv).
    ///
    /// The x column must match the grid nodes to within `1e-9 * h`.
    pub fn read_csv<R: std::io::Read>(grid: Grid1D, r: R, zero_boundary: bool) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut values = Vec::with_capacity(grid.len());
        let tol = grid.h() * 1e-9;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                if line != "x,value" {
                    return Err(Error::Config(format!("bad CSV header: {line:?}")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, ',');
            let x: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad CSV line {}", lineno + 1)))?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad CSV line {}", lineno + 1)))?;
            let i = values.len();
            if i >= grid.len() {
                return Err(Error::Config("CSV has more rows than grid nodes".into()));
            }
            if (x - grid.node(i)).abs() > tol {
                return Err(Error::Config(format!(
                    "CSV node {} = {} does not match grid node {}",
                    i,
                    x,
                    grid.node(i)
                )));
            }
            values.push(v);
        }
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "CSV has {} rows, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        GridFunction::new(grid, values, zero_boundary)
    }

    pub fn read_csv_file<P: AsRef<Path>>(grid: Grid1D, path: P, zero_boundary: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(grid, file, zero_boundary)
    }
}
