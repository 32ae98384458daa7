//! Command line front end.
//!
//! Subcommands: `solve`, `sweep`, `duality`, `hessian`, `gn-constant`,
//! `lambda-omega`. Configuration comes from an optional `--config FILE`
//! (flat `key = value` lines, `#` comments) plus `--key value` flags, flags
//! winning. Exit codes: 0 ok, 2 config error, 3 non-convergence, 4 regime
//! error (frequency below the spectral bottom, or divergence in an unbounded
//! regime), 5 verification failure. `NEHARI_LAB_THREADS` caps the worker
//! pool used for independent multi-starts.

pub mod config;
pub mod output;

use std::path::PathBuf;

use crate::error::SolverError;
use crate::functional::estimate_gn_constant;
use crate::grid::lambda_omega;
use crate::hessian::second_form_report;
use crate::levels::{build_action_curve, build_energy_curve, duality_report, format_float};
use crate::solve::{solve_action, solve_energy, GroundState, SolverKind};

use config::{ConfigError, RawConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_REGIME: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

fn exit_code_for(err: &SolverError) -> i32 {
    match err {
        SolverError::BelowSpectrum { .. } | SolverError::Divergence { .. } => EXIT_REGIME,
        SolverError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

const USAGE: &str = "\
usage: nehari-lab <command> [action|energy] [--config FILE] [--key value]...

commands:
  solve action|energy    one ground state; writes solution.field
  sweep action|energy    level curve; writes curve.csv (+ curve.svg)
  duality                duality + derivative report; writes duality.json
  hessian                second-variation report; writes hessian.json
  gn-constant            interpolation-constant estimate (lower bound)
  lambda-omega           bottom of the Dirichlet spectrum

common flags (aliases for config keys):
  --p --lambda --mu --lambda-grid --mu-grid --kind --extents --resolution
  --tol --seed --out --config
grids: `a,b,c`, `lin:a:b:n`, or `geom:a:b:n`
";

/// Parsed invocation: subcommand, optional variant, config after file+flags.
struct Invocation {
    command: String,
    variant: Option<SolverKind>,
    cfg: RunConfig,
}

fn parse_args(args: &[String]) -> Result<Invocation, ConfigError> {
    if args.is_empty() {
        return Err(ConfigError::Invalid(USAGE.into()));
    }
    let command = args[0].clone();
    let mut rest = &args[1..];
    let variant = match rest.first().map(|s| s.as_str()) {
        Some("action") => {
            rest = &rest[1..];
            Some(SolverKind::Action)
        }
        Some("energy") => {
            rest = &rest[1..];
            Some(SolverKind::Energy)
        }
        _ => None,
    };

    let mut config_path: Option<PathBuf> = None;
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let arg = &rest[i];
        let Some(key) = arg.strip_prefix("--") else {
            return Err(ConfigError::Invalid(format!(
                "unexpected positional argument `{arg}`"
            )));
        };
        let Some(value) = rest.get(i + 1) else {
            return Err(ConfigError::Invalid(format!("flag --{key} needs a value")));
        };
        if key == "config" {
            config_path = Some(PathBuf::from(value));
        } else {
            flags.push((key.to_string(), value.clone()));
        }
        i += 2;
    }

    let mut raw = match config_path {
        Some(p) => RawConfig::parse_file(&p)?,
        None => RawConfig::default(),
    };
    raw.merge_flags(&flags)?;
    let cfg = RunConfig::from_raw(&raw)?;
    Ok(Invocation {
        command,
        variant,
        cfg,
    })
}

/// Entry point used by `main`; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let inv = match parse_args(args) {
        Ok(inv) => inv,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match inv.command.as_str() {
        "solve" => cmd_solve(&inv),
        "sweep" => cmd_sweep(&inv),
        "duality" => cmd_duality(&inv.cfg),
        "hessian" => cmd_hessian(&inv.cfg),
        "gn-constant" => cmd_gn_constant(&inv.cfg),
        "lambda-omega" => cmd_lambda_omega(&inv.cfg),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(EXIT_OK)
        }
        other => {
            eprintln!("unknown command `{other}`\n{USAGE}");
            return EXIT_CONFIG;
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            describe_regime(&e);
            exit_code_for(&e)
        }
    }
}

/// A regime error deserves a sentence naming the mechanism, not just a code.
fn describe_regime(err: &SolverError) {
    match err {
        SolverError::BelowSpectrum {
            lambda,
            lambda_omega,
        } => {
            eprintln!(
                "the constrained problem is degenerate for frequencies at or below \
                 -lambda_omega = {}; requested lambda = {lambda}",
                -lambda_omega
            );
        }
        SolverError::Divergence { .. } => {
            eprintln!(
                "the energy infimum appears unbounded below at this mass; this is the \
                 expected signature of the mass-critical regime above the critical mass \
                 (p >= 2 + 4/N) rather than a solver failure"
            );
        }
        _ => {}
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), SolverError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| SolverError::InvalidParameter(format!("cannot create output dir: {e}")))
}

fn variant_or(inv: &Invocation, what: &str) -> Result<SolverKind, SolverError> {
    inv.variant.ok_or_else(|| {
        SolverError::InvalidParameter(format!("`{what}` needs a variant: action or energy"))
    })
}

fn solve_one(cfg: &RunConfig, kind: SolverKind) -> Result<GroundState, SolverError> {
    let domain = cfg.build_domain()?;
    match kind {
        SolverKind::Action => {
            let lambda = cfg.lambda.ok_or_else(|| {
                SolverError::InvalidParameter("action solve needs problem.lambda".into())
            })?;
            solve_action(&domain, cfg.p, lambda, &cfg.solver)
        }
        SolverKind::Energy => {
            let mu = cfg.mu.ok_or_else(|| {
                SolverError::InvalidParameter("energy solve needs problem.mu".into())
            })?;
            solve_energy(&domain, cfg.p, mu, &cfg.solver)
        }
    }
}

fn cmd_solve(inv: &Invocation) -> Result<i32, SolverError> {
    let kind = variant_or(inv, "solve")?;
    let cfg = &inv.cfg;
    let domain = cfg.build_domain()?;
    let state = solve_one(cfg, kind)?;
    print!("{}", output::state_summary(&state, &domain));
    ensure_out_dir(cfg)?;
    let path = cfg.out_dir.join("solution.field");
    output::write_field_dump(&path, &state)
        .map_err(|e| SolverError::InvalidParameter(format!("cannot write {path:?}: {e}")))?;
    println!("wrote {}", path.display());
    if !state.converged {
        return Ok(EXIT_NON_CONVERGENCE);
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(inv: &Invocation) -> Result<i32, SolverError> {
    let kind = variant_or(inv, "sweep")?;
    let cfg = &inv.cfg;
    let domain = cfg.build_domain()?;
    let curve = match kind {
        SolverKind::Action => {
            build_action_curve(&domain, cfg.p, &cfg.lambda_grid_or_default()?, &cfg.solver)?
        }
        SolverKind::Energy => {
            build_energy_curve(&domain, cfg.p, &cfg.mu_grid_or_default()?, &cfg.solver)?
        }
    };
    ensure_out_dir(cfg)?;
    if cfg.wants("csv") {
        let path = cfg.out_dir.join("curve.csv");
        output::write_text(&path, &curve.to_csv())
            .map_err(|e| SolverError::InvalidParameter(format!("cannot write {path:?}: {e}")))?;
        println!("wrote {}", path.display());
    }
    if cfg.wants("svg") {
        let path = cfg.out_dir.join("curve.svg");
        output::write_text(&path, &output::curve_svg(&curve))
            .map_err(|e| SolverError::InvalidParameter(format!("cannot write {path:?}: {e}")))?;
        println!("wrote {}", path.display());
    }
    let ok = curve.converged.iter().filter(|&&c| c).count();
    println!("samples     {} converged of {}", ok, curve.len());
    for i in 0..curve.len() {
        if !curve.flags[i].is_empty() {
            println!(
                "  flagged   {} [{}]",
                format_float(curve.params[i]),
                curve.flags[i].join(";")
            );
        }
    }
    // Partial failures are per-row flags; only a fully failed sweep is fatal.
    if ok == 0 {
        return Ok(EXIT_NON_CONVERGENCE);
    }
    Ok(EXIT_OK)
}

fn cmd_duality(cfg: &RunConfig) -> Result<i32, SolverError> {
    let domain = cfg.build_domain()?;
    let lambda_grid = cfg.lambda_grid_or_default()?;
    let mu_grid = cfg.mu_grid_or_default()?;
    let report = duality_report(&domain, cfg.p, &lambda_grid, &mu_grid, &cfg.solver)?;
    ensure_out_dir(cfg)?;
    let path = cfg.out_dir.join("duality.json");
    output::write_json(&path, &report)
        .map_err(|e| SolverError::InvalidParameter(format!("cannot write {path:?}: {e}")))?;
    println!("wrote {}", path.display());
    if let Some(l) = report.truncation_length {
        println!("note        truncated cylinder, truncation length {l}; results approximate the unbounded domain");
    }
    println!(
        "duality     max rel err {:.3e} (threshold {:.1e})",
        report.max_rel_err, cfg.report.duality_tol
    );
    println!(
        "derivative  worst interior discrepancy {:.3e} (threshold {:.1e})",
        report.worst_derivative_rel, cfg.report.derivative_tol
    );
    println!("cross-gap   min slack {:.3e}", report.min_cross_slack);
    for (i, flags) in report.row_flags.iter().enumerate() {
        if !flags.is_empty() {
            println!(
                "  flagged   mu={} [{}] (excluded from pass/fail)",
                format_float(report.mu_grid[i]),
                flags.join(";")
            );
        }
    }
    let pass = report.max_rel_err <= cfg.report.duality_tol
        && report.worst_derivative_rel <= cfg.report.derivative_tol;
    if !pass {
        println!(
            "verification failed: duality or derivative discrepancy exceeds its threshold \
             (discretization too coarse or sweep range too narrow)"
        );
        return Ok(EXIT_VERIFICATION);
    }
    println!("verification passed");
    Ok(EXIT_OK)
}

fn cmd_hessian(cfg: &RunConfig) -> Result<i32, SolverError> {
    let domain = cfg.build_domain()?;
    if cfg.solver.tol > 1e-8 {
        println!(
            "warning     solver tol {:.1e} is looser than 1e-8; the decomposition identity \
             error grows with the residual and its tolerance is not guaranteed",
            cfg.solver.tol
        );
    }
    // Solve the side the config specifies; default is an action solve at
    // lambda = 1.
    let state = if cfg.mu.is_some() {
        solve_one(cfg, SolverKind::Energy)?
    } else {
        let lambda = cfg.lambda.unwrap_or(1.0);
        solve_action(&domain, cfg.p, lambda, &cfg.solver)?
    };
    let report = second_form_report(
        &state,
        cfg.report.n_probes,
        cfg.report.probe_seed,
        cfg.report.eig_tol,
        cfg.report.inequality_slack,
    )?;
    ensure_out_dir(cfg)?;
    let path = cfg.out_dir.join("hessian.json");
    output::write_json(&path, &report)
        .map_err(|e| SolverError::InvalidParameter(format!("cannot write {path:?}: {e}")))?;
    println!("wrote {}", path.display());

    let identity_ok = report.identity_max_rel_err <= cfg.report.identity_tol;
    println!(
        "identity    max rel err {:.3e} over {} probes: {}",
        report.identity_max_rel_err,
        report.n_probes,
        if identity_ok { "pass" } else { "FAIL" }
    );
    println!(
        "eigenvalues nehari {:.6e}  mass {:.6e}  C1 {:.6e}",
        report.min_eig_nehari, report.min_eig_mass, report.constant_c1
    );
    println!(
        "inequality  min_eig_nehari >= min_eig_mass/(1+C1) - {:.1e}: {}",
        cfg.report.inequality_slack,
        if report.eigen_inequality_ok {
            "pass"
        } else {
            "FAIL"
        }
    );
    if identity_ok && report.eigen_inequality_ok {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VERIFICATION)
    }
}

fn cmd_gn_constant(cfg: &RunConfig) -> Result<i32, SolverError> {
    let domain = cfg.build_domain()?;
    let data = estimate_gn_constant(&domain, cfg.p)?;
    println!("p           {}", format_float(cfg.p));
    println!("p_crit      {}", format_float(data.p_crit));
    println!("K_p         {} (estimate, lower bound)", format_float(data.k_p));
    println!("mu_N        {}", format_float(data.mu_n));
    if cfg.wants("json") {
        ensure_out_dir(cfg)?;
        let path = cfg.out_dir.join("gn_constant.json");
        output::write_json(&path, &data)
            .map_err(|e| SolverError::InvalidParameter(format!("cannot write {path:?}: {e}")))?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_lambda_omega(cfg: &RunConfig) -> Result<i32, SolverError> {
    let domain = cfg.build_domain()?;
    let tol = cfg.solver.tol.min(1e-8);
    let value = lambda_omega(&domain, tol)?;
    println!("lambda_omega {}", format_float(value));
    if let Some(l) = domain.truncation_length() {
        println!(
            "note        truncated cylinder, truncation length {l}; the value approaches the \
             cross-section eigenvalue as the truncation grows"
        );
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parse_solve_action_with_flags() {
        let inv = parse_args(&args(&[
            "solve", "action", "--p", "4", "--lambda", "1.5", "--resolution", "100",
        ]))
        .unwrap();
        assert_eq!(inv.command, "solve");
        assert_eq!(inv.variant, Some(SolverKind::Action));
        assert_eq!(inv.cfg.lambda, Some(1.5));
        assert_eq!(inv.cfg.resolution, vec![100]);
    }

    #[test]
    fn parse_rejects_unknown_flag() {
        assert!(parse_args(&args(&["solve", "action", "--bogus", "1"])).is_err());
    }

    #[test]
    fn parse_rejects_missing_value() {
        assert!(parse_args(&args(&["solve", "action", "--p"])).is_err());
    }

    #[test]
    fn unknown_command_is_config_error() {
        assert_eq!(run(&args(&["frobnicate"])), EXIT_CONFIG);
    }
}
