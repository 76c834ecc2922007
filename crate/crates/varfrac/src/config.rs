//! Run configuration: the built-in default instance, the exponent catalog,
//! and the flat `key = value` config format used by the CLI.
//!
//! The format is deliberately plain text with dotted keys (`p.kind`,
//! `solver.descent_tol`), one file per run, so configs diff cleanly and make
//! good golden-test fixtures. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::experiments::q_field_builder;
use crate::exponents::{ExponentBundle, ScalarExponentField, SymmetricExponentField};
use crate::grid::Grid1D;
use crate::solver::MountainPassConfig;

/// Built-in instance satisfying every standing hypothesis:
/// `p(x,y) = 2 + 0.2 cos(pi (x+y)/4)`, `s(x,y) = 0.4 - 0.05 |x-y|`,
/// `alpha = 0.5`, and `r` the midpoint of the admissible band.
#[derive(Debug, Clone, Copy)]
pub struct DefaultInstance {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

impl DefaultInstance {
    pub fn new(a: f64, b: f64, m: usize) -> Self {
        DefaultInstance { a, b, m }
    }

    /// The standard domain `(-1, 1)` at the given resolution.
    pub fn standard(m: usize) -> Self {
        DefaultInstance::new(-1.0, 1.0, m)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.a, self.b, self.m)
    }

    pub fn bundle(&self) -> Result<ExponentBundle> {
        let (a, b) = (self.a, self.b);
        // sampling at exactly the grid resolution makes the declared bounds
        // the true grid extrema, so later bound checks cannot disagree
        let n = self.m.max(3);
        let p = SymmetricExponentField::from_samples(
            |x, y| 2.0 + 0.2 * (std::f64::consts::PI * (x + y) / 4.0).cos(),
            a,
            b,
            n,
        );
        let s = SymmetricExponentField::from_samples(
            |x, y| (0.4 - 0.05 * (x - y).abs()).clamp(1e-6, 1.0 - 1e-6),
            a,
            b,
            n,
        );
        let alpha = ScalarExponentField::constant(0.5);
        let r = band_midpoint_field(&p, &s, &alpha, 1, a, b, n)?;
        Ok(ExponentBundle {
            p,
            s,
            alpha,
            r,
            dim: 1,
        })
    }
}

/// Midpoint of the admissible band
/// `[(1 - alpha^-/2N) p(x,x), (1 - alpha^+/2N) p_s*(x)]`.
fn band_midpoint_field(
    p: &SymmetricExponentField,
    s: &SymmetricExponentField,
    alpha: &ScalarExponentField,
    dim: u32,
    a: f64,
    b: f64,
    sample_count: usize,
) -> Result<ScalarExponentField> {
    let n = dim as f64;
    let sample_count = sample_count.max(3);
    let samples: Vec<f64> = (0..sample_count)
        .map(|i| a + (b - a) * i as f64 / (sample_count - 1) as f64)
        .collect();
    let a_min = alpha.min_on(&samples);
    let a_max = alpha.max_on(&samples);
    let lo_factor = 1.0 - a_min / (2.0 * n);
    let hi_factor = 1.0 - a_max / (2.0 * n);
    let p2 = p.clone();
    let s2 = s.clone();
    let f = move |x: f64| {
        let px = p2.eval(x, x);
        let sx = s2.eval(x, x);
        let ps_star = n * px / (n - px * sx);
        0.5 * (lo_factor * px + hi_factor * ps_star)
    };
    // reject instances where the band is void somewhere
    for &x in &samples {
        let px = p.eval(x, x);
        let sx = s.eval(x, x);
        if n - px * sx <= 0.0 {
            return Err(Error::InvalidBundle(format!(
                "N - p s = {} <= 0 at x = {x}",
                n - px * sx
            )));
        }
    }
    Ok(ScalarExponentField::from_samples(f, a, b, sample_count))
}

/// Catalog entry for a scalar exponent field.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSpec {
    Constant(f64),
    Affine { a0: f64, a1: f64 },
    /// Midpoint of the admissible band derived from p, s, alpha.
    BandMidpoint,
    /// Field touching the upper HLS-critical bound at `x0` at logarithmic
    /// rate `beta`.
    CriticalTouch {
        x0: f64,
        c0: f64,
        beta: f64,
        floor: f64,
    },
}

/// Catalog entry for a symmetric pair exponent field.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSpec {
    Constant(f64),
    /// `base + amplitude * cos(pi (x+y) / 4)`.
    CosPair { base: f64, amplitude: f64 },
    /// `base - slope * |x-y|`, clamped into (0, 1).
    DistGap { base: f64, slope: f64 },
}

/// Parameters for the embedding experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub x0: f64,
    pub c0: f64,
    pub beta: f64,
    pub floor: f64,
    pub eps: f64,
    pub n_max: u32,
    pub max_scale: u32,
}

/// Fully parsed run configuration.
#[derive(Debug, Clone)]
pub struct InstanceConfig {
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub p: PairSpec,
    pub s: PairSpec,
    pub alpha: ScalarSpec,
    pub r: ScalarSpec,
    pub solver: MountainPassConfig,
    pub embed: EmbedConfig,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            a: -1.0,
            b: 1.0,
            m: 401,
            seed: 0,
            out_dir: None,
            p: PairSpec::CosPair {
                base: 2.0,
                amplitude: 0.2,
            },
            s: PairSpec::DistGap {
                base: 0.4,
                slope: 0.05,
            },
            alpha: ScalarSpec::Constant(0.5),
            r: ScalarSpec::BandMidpoint,
            solver: MountainPassConfig::default(),
            embed: EmbedConfig {
                x0: 0.0,
                c0: 1.0,
                beta: 1.0,
                floor: 2.3,
                eps: 0.2,
                n_max: 3,
                max_scale: 32,
            },
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
}

impl InstanceConfig {
    /// Parse the flat `key = value` format; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key {key}")));
            }
        }
        Self::from_map(map)
    }

    pub fn parse_file<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = InstanceConfig::default();
        let mut take = |key: &str| map.remove(key);

        if let Some(v) = take("domain.a") {
            cfg.a = parse_value("domain.a", &v)?;
        }
        if let Some(v) = take("domain.b") {
            cfg.b = parse_value("domain.b", &v)?;
        }
        if let Some(v) = take("grid.m") {
            cfg.m = parse_value("grid.m", &v)?;
        }
        if let Some(v) = take("seed") {
            cfg.seed = parse_value("seed", &v)?;
        }
        if let Some(v) = take("out") {
            cfg.out_dir = Some(PathBuf::from(v));
        }

        cfg.p = parse_pair_spec("p", &mut map, cfg.p)?;
        cfg.s = parse_pair_spec("s", &mut map, cfg.s)?;
        cfg.alpha = parse_scalar_spec("alpha", &mut map, cfg.alpha)?;
        cfg.r = parse_scalar_spec("r", &mut map, cfg.r)?;

        let mut take = |key: &str| map.remove(key);
        if let Some(v) = take("solver.path_points") {
            cfg.solver.path_points = parse_value("solver.path_points", &v)?;
        }
        if let Some(v) = take("solver.descent_tol") {
            cfg.solver.descent_tol = parse_value("solver.descent_tol", &v)?;
        }
        if let Some(v) = take("solver.max_outer_iters") {
            cfg.solver.max_outer_iters = parse_value("solver.max_outer_iters", &v)?;
        }
        if let Some(v) = take("solver.max_descent_steps") {
            cfg.solver.max_descent_steps = parse_value("solver.max_descent_steps", &v)?;
        }
        if let Some(v) = take("solver.newton_threshold") {
            cfg.solver.newton_threshold = parse_value("solver.newton_threshold", &v)?;
        }
        if let Some(v) = take("solver.max_newton_iters") {
            cfg.solver.max_newton_iters = parse_value("solver.max_newton_iters", &v)?;
        }
        if let Some(v) = take("solver.ring_rho") {
            cfg.solver.ring_rho = parse_value("solver.ring_rho", &v)?;
        }
        if let Some(v) = take("solver.ring_samples") {
            cfg.solver.ring_samples = parse_value("solver.ring_samples", &v)?;
        }
        cfg.solver.seed = cfg.seed;

        if let Some(v) = take("embed.x0") {
            cfg.embed.x0 = parse_value("embed.x0", &v)?;
        }
        if let Some(v) = take("embed.c0") {
            cfg.embed.c0 = parse_value("embed.c0", &v)?;
        }
        if let Some(v) = take("embed.beta") {
            cfg.embed.beta = parse_value("embed.beta", &v)?;
        }
        if let Some(v) = take("embed.floor") {
            cfg.embed.floor = parse_value("embed.floor", &v)?;
        }
        if let Some(v) = take("embed.eps") {
            cfg.embed.eps = parse_value("embed.eps", &v)?;
        }
        if let Some(v) = take("embed.n_max") {
            cfg.embed.n_max = parse_value("embed.n_max", &v)?;
        }
        if let Some(v) = take("embed.max_scale") {
            cfg.embed.max_scale = parse_value("embed.max_scale", &v)?;
        }

        if let Some(key) = map.keys().next() {
            return Err(Error::Config(format!("unknown key {key}")));
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.a, self.b, self.m)
    }

    /// Realize the exponent specs as an [`ExponentBundle`].
    pub fn bundle(&self) -> Result<ExponentBundle> {
        let (a, b) = (self.a, self.b);
        let n = self.m.max(3);
        let p = build_pair(&self.p, a, b, n);
        let s = build_pair(&self.s, a, b, n);
        let alpha = build_scalar_simple("alpha", &self.alpha, a, b)?;
        let mut bundle = ExponentBundle {
            p,
            s,
            alpha,
            r: ScalarExponentField::constant(2.0), // placeholder, replaced below
            dim: 1,
        };
        bundle.r = match &self.r {
            ScalarSpec::Constant(c) => ScalarExponentField::constant(*c),
            ScalarSpec::Affine { a0, a1 } => ScalarExponentField::affine(*a0, *a1, a, b),
            ScalarSpec::BandMidpoint => {
                band_midpoint_field(&bundle.p, &bundle.s, &bundle.alpha, 1, a, b, n)?
            }
            ScalarSpec::CriticalTouch {
                x0,
                c0,
                beta,
                floor,
            } => {
                let grid = self.grid()?;
                let upper = bundle.hls_upper_bound_field(&grid)?;
                q_field_builder(&upper, *x0, *c0, *beta, *floor, &grid)?
            }
        };
        Ok(bundle)
    }
}

fn parse_pair_spec(
    prefix: &str,
    map: &mut BTreeMap<String, String>,
    default: PairSpec,
) -> Result<PairSpec> {
    let kind_key = format!("{prefix}.kind");
    let Some(kind) = map.remove(&kind_key) else {
        return Ok(default);
    };
    let mut num = |suffix: &str| -> Result<f64> {
        let key = format!("{prefix}.{suffix}");
        let v = map
            .remove(&key)
            .ok_or_else(|| Error::Config(format!("missing {key} for kind {kind}")))?;
        parse_value(&key, &v)
    };
    match kind.as_str() {
        "constant" => Ok(PairSpec::Constant(num("value")?)),
        "cos_pair" => Ok(PairSpec::CosPair {
            base: num("base")?,
            amplitude: num("amplitude")?,
        }),
        "dist_gap" => Ok(PairSpec::DistGap {
            base: num("base")?,
            slope: num("slope")?,
        }),
        other => Err(Error::Config(format!(
            "unknown {prefix}.kind {other:?} (catalog: constant, cos_pair, dist_gap)"
        ))),
    }
}

fn parse_scalar_spec(
    prefix: &str,
    map: &mut BTreeMap<String, String>,
    default: ScalarSpec,
) -> Result<ScalarSpec> {
    let kind_key = format!("{prefix}.kind");
    let Some(kind) = map.remove(&kind_key) else {
        return Ok(default);
    };
    let mut num = |suffix: &str| -> Result<f64> {
        let key = format!("{prefix}.{suffix}");
        let v = map
            .remove(&key)
            .ok_or_else(|| Error::Config(format!("missing {key} for kind {kind}")))?;
        parse_value(&key, &v)
    };
    match kind.as_str() {
        "constant" => Ok(ScalarSpec::Constant(num("value")?)),
        "affine" => Ok(ScalarSpec::Affine {
            a0: num("a0")?,
            a1: num("a1")?,
        }),
        "band_midpoint" => Ok(ScalarSpec::BandMidpoint),
        "critical_touch" => Ok(ScalarSpec::CriticalTouch {
            x0: num("x0")?,
            c0: num("c0")?,
            beta: num("beta")?,
            floor: num("floor")?,
        }),
        other => Err(Error::Config(format!(
            "unknown {prefix}.kind {other:?} (catalog: constant, affine, band_midpoint, critical_touch)"
        ))),
    }
}

fn build_pair(spec: &PairSpec, a: f64, b: f64, samples: usize) -> SymmetricExponentField {
    match *spec {
        PairSpec::Constant(c) => SymmetricExponentField::constant(c),
        PairSpec::CosPair { base, amplitude } => SymmetricExponentField::from_samples(
            move |x, y| base + amplitude * (std::f64::consts::PI * (x + y) / 4.0).cos(),
            a,
            b,
            samples,
        ),
        PairSpec::DistGap { base, slope } => SymmetricExponentField::from_samples(
            move |x, y| (base - slope * (x - y).abs()).clamp(1e-6, 1.0 - 1e-6),
            a,
            b,
            samples,
        ),
    }
}

fn build_scalar_simple(label: &str, spec: &ScalarSpec, a: f64, b: f64) -> Result<ScalarExponentField> {
    match *spec {
        ScalarSpec::Constant(c) => Ok(ScalarExponentField::constant(c)),
        ScalarSpec::Affine { a0, a1 } => Ok(ScalarExponentField::affine(a0, a1, a, b)),
        _ => Err(Error::Config(format!(
            "{label} supports only constant or affine kinds"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::validate_r_range;

    #[test]
    fn default_instance_satisfies_all_hypotheses() {
        let inst = DefaultInstance::standard(201);
        let grid = inst.grid().unwrap();
        let bundle = inst.bundle().unwrap();
        bundle.validate(&grid).unwrap();
        assert!(validate_r_range(&bundle, &grid).unwrap().ok);

        // superlinearity 2 r^- > p^+ so the mountain-pass geometry holds
        let xs = grid.nodes();
        let r_min = bundle.r.min_on(&xs);
        let p_max = bundle.p.max_on_pairs(&xs);
        assert!(2.0 * r_min > p_max, "2 r^- = {} vs p^+ = {p_max}", 2.0 * r_min);
    }

    #[test]
    fn default_instance_exponent_ranges() {
        let inst = DefaultInstance::standard(401);
        let grid = inst.grid().unwrap();
        let bundle = inst.bundle().unwrap();
        let xs = grid.nodes();
        let p_min = bundle.p.min_on_pairs(&xs);
        let p_max = bundle.p.max_on_pairs(&xs);
        assert!(p_min >= 2.0 - 1e-12 && p_max <= 2.2 + 1e-12);
        let s_min = bundle.s.min_on_pairs(&xs);
        let s_max = bundle.s.max_on_pairs(&xs);
        assert!(s_min >= 0.3 - 1e-12 && s_max <= 0.4 + 1e-12);
        // p^+ s^+ < N keeps the critical exponent finite
        assert!(p_max * s_max < 1.0);
    }

    #[test]
    fn empty_config_is_the_default_instance() {
        let cfg = InstanceConfig::parse("").unwrap();
        assert_eq!(cfg.m, 401);
        assert_eq!(cfg.p, PairSpec::CosPair { base: 2.0, amplitude: 0.2 });
        let bundle = cfg.bundle().unwrap();
        let grid = cfg.grid().unwrap();
        bundle.validate(&grid).unwrap();
    }

    #[test]
    fn parse_full_config() {
        let text = "\
# a comment
domain.a = 0
domain.b = 1
grid.m = 101            # inline comment
seed = 42
p.kind = constant
p.value = 2.0
s.kind = constant
s.value = 0.3
alpha.kind = constant
alpha.value = 0.5
r.kind = constant
r.value = 2.0
solver.descent_tol = 1e-7
embed.beta = 0.5
";
        let cfg = InstanceConfig::parse(text).unwrap();
        assert_eq!(cfg.m, 101);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.solver.seed, 42);
        assert_eq!(cfg.p, PairSpec::Constant(2.0));
        assert_eq!(cfg.solver.descent_tol, 1e-7);
        assert_eq!(cfg.embed.beta, 0.5);
        let bundle = cfg.bundle().unwrap();
        bundle.validate(&cfg.grid().unwrap()).unwrap();
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(InstanceConfig::parse("grid.m").is_err());
        assert!(InstanceConfig::parse("grid.m = ten").is_err());
        assert!(InstanceConfig::parse("nonsense.key = 1").is_err());
        assert!(InstanceConfig::parse("p.kind = wavelet").is_err());
        assert!(InstanceConfig::parse("p.kind = constant").is_err()); // missing p.value
        assert!(InstanceConfig::parse("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn critical_touch_r_builds_and_touches() {
        let text = "\
r.kind = critical_touch
r.x0 = 0.0
r.c0 = 1.0
r.beta = 0.5
r.floor = 2.3
";
        let cfg = InstanceConfig::parse(text).unwrap();
        let bundle = cfg.bundle().unwrap();
        let grid = cfg.grid().unwrap();
        let upper = bundle.hls_upper_bound_field(&grid).unwrap();
        assert!((bundle.r.eval(0.0) - upper.eval(0.0)).abs() < 1e-12);
        for &x in grid.nodes().iter().filter(|&&x| x != 0.0) {
            assert!(bundle.r.eval(x) < upper.eval(x));
        }
    }
}
