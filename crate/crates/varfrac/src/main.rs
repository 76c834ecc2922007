//! Command-line driver: norm evaluation, mountain-pass solves, embedding
//! experiments, and instance validation.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 solver
//! non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use varfrac::choquard::Discretization;
use varfrac::config::InstanceConfig;
use varfrac::error::Error;
use varfrac::experiments::{
    annulus_rate_check, annulus_table_rows, compactness_verdict, concentration_sequence,
    tail_table_rows, tail_vanishing_probe, theorem4_bound, write_table_csv, ConcentrationFamily,
};
use varfrac::exponents::{check_hls_identity, log_holder_constant, validate_r_range};
use varfrac::grid::GridFunction;
use varfrac::nakano::{conjugate_exponent, modular_lp, norm_lp};
use varfrac::sobolev::{gagliardo_modular, sobolev_norm};
use varfrac::solver::mountain_pass_solve_with;

#[derive(Parser)]
#[command(name = "varfrac", about = "Variable-exponent nonlocal energy toolkit")]
struct Cli {
    /// Run configuration file (flat key = value); defaults are used if absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for pairwise sums: 1 = serial. Results are
    /// bit-identical either way.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (falls back to config `out`, then $VARFRAC_OUT, then `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Keep every k-th row of the solver history in history.csv.
    #[arg(long, global = true, default_value_t = 1)]
    snapshot_every: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate Lebesgue/Sobolev norms and modulars of a grid function CSV.
    Norm {
        /// Input CSV with header `x,value` matching the configured grid.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the mountain-pass search and emit the report and iterate.
    Solve,
    /// Run the embedding experiments (tail, annulus, dichotomy verdict).
    Embed,
    /// Check all exponent-field hypotheses for the configured instance.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<InstanceConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => InstanceConfig::parse_file(path)?,
        None => InstanceConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.solver.seed = seed;
    }
    Ok(cfg)
}

fn resolve_out_dir(cli: &Cli, cfg: &InstanceConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os("VARFRAC_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn apply_threads(threads: Option<usize>) {
    match threads {
        Some(0) | Some(1) => varfrac::set_parallel(false),
        Some(_n) => {
            varfrac::set_parallel(true);
        }
        None => {}
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    apply_threads(cli.threads);
    let cfg = load_config(&cli)?;
    let out_dir = resolve_out_dir(&cli, &cfg);
    std::fs::create_dir_all(&out_dir)?;
    match &cli.command {
        Command::Norm { input } => cmd_norm(&cfg, input, &out_dir),
        Command::Solve => cmd_solve(&cfg, &out_dir, cli.snapshot_every.max(1)),
        Command::Embed => cmd_embed(&cfg, &out_dir),
        Command::Validate => cmd_validate(&cfg),
    }
}

#[derive(Serialize)]
struct NormReport {
    lebesgue_norm: f64,
    lebesgue_modular: f64,
    sobolev_norm: f64,
    gagliardo_modular: f64,
    diagonal_lp_modular: f64,
}

fn emit_json<T: Serialize>(value: &T, out_dir: &Path, filename: &str) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    println!("{text}");
    std::fs::write(out_dir.join(filename), text + "\n")?;
    Ok(())
}

fn cmd_norm(cfg: &InstanceConfig, input: &Path, out_dir: &Path) -> Result<ExitCode, Error> {
    let grid = cfg.grid()?;
    let bundle = cfg.bundle()?;
    let u = GridFunction::read_csv_file(grid, input, false)?;
    let p_diag = bundle.p.diagonal();
    let modular = gagliardo_modular(&u, &bundle, 1.0)?;
    let report = NormReport {
        lebesgue_norm: norm_lp(&u, &p_diag)?,
        lebesgue_modular: modular_lp(&u, &p_diag)?.value,
        sobolev_norm: sobolev_norm(&u, &bundle, 1e-10)?,
        gagliardo_modular: modular.gagliardo_term,
        diagonal_lp_modular: modular.lp_term,
    };
    emit_json(&report, out_dir, "norm.json")?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(cfg: &InstanceConfig, out_dir: &Path, snapshot_every: usize) -> Result<ExitCode, Error> {
    let grid = cfg.grid()?;
    let bundle = cfg.bundle()?;
    let disc = Discretization::new(grid, &bundle)?;
    let report = mountain_pass_solve_with(&disc, &bundle, &cfg.solver)?;

    report.u_star.write_csv_file(out_dir.join("u_star.csv"))?;
    let mut history = String::from("iter,path_max_energy,residual\n");
    for rec in report.history.iter().step_by(snapshot_every) {
        history.push_str(&format!(
            "{},{},{}\n",
            rec.iter, rec.path_max_energy, rec.residual
        ));
    }
    std::fs::write(out_dir.join("history.csv"), history)?;
    emit_json(&report, out_dir, "solve_report.json")?;

    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "solver did not converge: residual {} after {} outer iterations",
            report.residual, report.outer_iters
        );
        Ok(ExitCode::from(3))
    }
}

#[derive(Serialize)]
struct EmbedSummary {
    verdict: String,
    persist_threshold: f64,
    base_modular: f64,
    final_modular: f64,
    tail_rows: usize,
    annulus_rows: usize,
}

fn cmd_embed(cfg: &InstanceConfig, out_dir: &Path) -> Result<ExitCode, Error> {
    let grid = cfg.grid()?;
    let bundle = cfg.bundle()?;
    let e = &cfg.embed;
    let ps = bundle.critical_exponent_field(&grid)?;
    let q = varfrac::experiments::q_field_builder(&ps, e.x0, e.c0, e.beta, e.floor, &grid)?;

    let scales: Vec<u32> = (1..=e.max_scale).collect();
    let family = ConcentrationFamily::new(e.x0, scales)?;

    // tail probe over the powers-of-two members
    let members: Vec<GridFunction> = family
        .scales
        .iter()
        .filter(|n| n.is_power_of_two())
        .map(|&n| concentration_sequence(&family, n, &bundle, grid))
        .collect::<Result<_, _>>()?;
    let mut rho = 0.0f64;
    for m in &members {
        rho = rho.max(sobolev_norm(m, &bundle, 1e-10)?);
    }
    let eps_list = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01];
    let tail = tail_vanishing_probe(&bundle, &q, e.x0, rho * 1.01, &eps_list, &members)?;
    let file = std::fs::File::create(out_dir.join("tail.csv"))?;
    write_table_csv(std::io::BufWriter::new(file), &tail_table_rows(&tail))?;

    let annulus = annulus_rate_check(&bundle, &q, e.x0, e.eps, e.beta, e.n_max, &grid)?;
    let file = std::fs::File::create(out_dir.join("annulus.csv"))?;
    write_table_csv(std::io::BufWriter::new(file), &annulus_table_rows(&annulus))?;

    let threshold = theorem4_bound(&bundle, &grid, e.c0);
    let verdict = compactness_verdict(&bundle, &q, &family, grid, threshold)?;
    verdict.write_csv_file(out_dir.join("verdict.csv"))?;

    let summary = EmbedSummary {
        verdict: verdict.verdict.to_string(),
        persist_threshold: threshold,
        base_modular: verdict.base_modular,
        final_modular: verdict.rows.last().map(|r| r.modular).unwrap_or(0.0),
        tail_rows: tail.len(),
        annulus_rows: annulus.len(),
    };
    emit_json(&summary, out_dir, "embed_summary.json")?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ValidationReport {
    bundle_hypotheses_ok: bool,
    r_in_admissible_band: bool,
    hls_identity_residual: f64,
    conjugate_identity_residual: f64,
    p_log_holder_estimate: f64,
    all_ok: bool,
    failures: Vec<String>,
}

fn cmd_validate(cfg: &InstanceConfig) -> Result<ExitCode, Error> {
    let grid = cfg.grid()?;
    let bundle = cfg.bundle()?;
    let xs = grid.nodes();
    let mut failures = Vec::new();

    let bundle_ok = match bundle.validate(&grid) {
        Ok(()) => true,
        Err(e) => {
            failures.push(format!("bundle hypotheses: {e}"));
            false
        }
    };
    let r_ok = match validate_r_range(&bundle, &grid) {
        Ok(rep) if rep.ok => true,
        Ok(rep) => {
            failures.push(format!(
                "r leaves the admissible band by {} at x = {}",
                rep.worst_violation, rep.worst_x
            ));
            false
        }
        Err(e) => {
            failures.push(format!("r-range check: {e}"));
            false
        }
    };

    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .step_by((xs.len() / 40).max(1))
        .flat_map(|&x| {
            xs.iter()
                .step_by((xs.len() / 40).max(1))
                .map(move |&y| (x, y))
        })
        .collect();
    let hls_res = check_hls_identity(&bundle.alpha, bundle.dim, &pairs)?;
    if hls_res > 1e-12 {
        failures.push(format!("HLS identity residual {hls_res} > 1e-12"));
    }

    let p_diag = bundle.p.diagonal();
    let conj = conjugate_exponent(&p_diag)?;
    let mut conj_res = 0.0f64;
    for &x in &xs {
        let p = p_diag.eval(x);
        conj_res = conj_res.max((1.0 / p + 1.0 / conj.eval(x) - 1.0).abs());
    }
    if conj_res > 1e-15 {
        failures.push(format!("conjugate identity residual {conj_res} > 1e-15"));
    }

    let lh = log_holder_constant(&p_diag, &xs);
    if !lh.is_finite() {
        failures.push("log-Hoelder estimate diverged".into());
    }

    let report = ValidationReport {
        bundle_hypotheses_ok: bundle_ok,
        r_in_admissible_band: r_ok,
        hls_identity_residual: hls_res,
        conjugate_identity_residual: conj_res,
        p_log_holder_estimate: lh,
        all_ok: failures.is_empty(),
        failures,
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    println!("{text}");
    if report.all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}
