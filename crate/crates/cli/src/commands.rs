//! Subcommand implementations and the exit-status contract:
//! 0 success, 1 configuration error, 2 thinness-condition refusal,
//! 3 non-convergence, 4 audit failure.

use crate::bundle::{self, StateMeta, STATE_FORMAT_VERSION};
use crate::config::{load_config, RunConfig};
use anyhow::{Context, Result};
use bqwave::diagnostics::{
    energy_identity, left_limit_report, run_audits, AuditInput, AuditReport,
};
use bqwave::fields::dump::write_axial_csv;
use bqwave::fields::{extend_temperature, extend_velocity, ChannelGrid};
use bqwave::fixedpoint::{continue_in_a, ContinuationOutcome, HomotopyOutcome};
use bqwave::geometry::evaluate_thinness;
use bqwave::temperature::{discrete_planar_speed, planar_speed_root};
use bqwave::Error as CoreError;
use serde::Serialize;
use serde_json::json;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

fn classify_core_error(e: &CoreError) -> i32 {
    match e {
        CoreError::ConditionViolated { .. } => EXIT_CONDITION,
        CoreError::StageNonConvergence { .. }
        | CoreError::SolverNonConvergence { .. }
        | CoreError::EigenNonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn exit_code_for(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<CoreError>() {
        Some(core) => classify_core_error(core),
        None => EXIT_CONFIG,
    }
}

fn meta_json(cfg: &RunConfig) -> serde_json::Value {
    json!({
        "config_hash": cfg.config_hash,
        "versions": RunConfig::versions(),
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn csv_header_comment(cfg: &RunConfig) -> String {
    format!(
        "# bqwave {} config={}",
        crate::config::bqwave_version(),
        cfg.config_hash
    )
}

/// `check-condition`: prints the thinness report; exit 0 when satisfied or
/// not required (d = 0), 2 when violated.
pub fn cmd_check_condition(config_path: &Path) -> i32 {
    let run = || -> Result<i32> {
        let cfg = load_config(config_path)?;
        let cross = cfg.build_cross_section()?;
        let params = cfg.phys_params()?;
        let report = evaluate_thinness(&cross, &params);
        let value = json!({
            "meta": meta_json(&cfg),
            "condition": report,
            "note": if report.required {
                "required at d = 1"
            } else {
                "condition not required at d = 0"
            },
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
        Ok(if !report.required || report.satisfied {
            EXIT_OK
        } else {
            EXIT_CONDITION
        })
    };
    unwrap_exit(run())
}

#[derive(Serialize)]
struct RunSummary {
    c: f64,
    tau: f64,
    a: f64,
    converged: bool,
    degenerate: bool,
    reaction_integral: f64,
    theta_minus: f64,
    left_branch: String,
    truncation_shift: Option<f64>,
    all_asserted_audits_pass: bool,
}

struct SolveProducts {
    outcome: ContinuationOutcome,
    audit: AuditReport,
    grid: ChannelGrid,
    /// Per-window energy-identity summaries (a, residual, theta_minus).
    energy_by_a: Vec<(f64, f64, f64)>,
}

fn run_solve(cfg: &RunConfig) -> Result<SolveProducts> {
    let cross = cfg.build_cross_section()?;
    let params = cfg.phys_params()?;
    let fp = cfg.fixed_point_config()?;
    let outcome = continue_in_a(cross.clone(), &params, &fp, cfg.solver.axial_cells)?;
    let last = outcome.runs.last().expect("at least one run");
    let a_last = *fp.a_schedule.last().unwrap();
    let hx = 2.0 * fp.a_schedule[0] / cfg.solver.axial_cells as f64;
    let cells_last = ((2.0 * a_last / hx).round() as usize + 1) / 2 * 2;
    let grid = cfg.grid_for(cross, a_last, cells_last)?;
    let input = AuditInput {
        grid: &grid,
        params: &params,
        c: last.state.c,
        tau: last.state.tau,
        t: &last.state.t,
        v: &last.state.v,
        u: &last.artifacts.u,
        t_tilde: &last.artifacts.t_tilde,
        v_tilde: &last.artifacts.v_tilde,
        degenerate: last.degenerate,
        slack: cfg.solver.slack,
    };
    let audit = run_audits(&input);
    // per-window energy identity (quadrature only, no solves)
    let cross2 = cfg.build_cross_section()?;
    let mut energy_by_a = Vec::new();
    for run in &outcome.runs {
        let cells = ((2.0 * run.state.a / hx).round() as usize + 1) / 2 * 2;
        let g = cfg.grid_for(cross2.clone(), run.state.a, cells)?;
        let left = left_limit_report(&run.state.t, &g, &params.reaction);
        let e = energy_identity(
            &run.state.t,
            &g,
            &params.reaction,
            run.state.c,
            left.theta_minus,
            None,
        );
        energy_by_a.push((run.state.a, e.residual, left.theta_minus));
    }
    Ok(SolveProducts {
        outcome,
        audit,
        grid,
        energy_by_a,
    })
}

fn write_solve_outputs(cfg: &RunConfig, products: &SolveProducts, outdir: &Path) -> Result<()> {
    std::fs::create_dir_all(outdir)?;
    let outcome = &products.outcome;
    let last = outcome.runs.last().unwrap();

    // per-stage records across the a schedule
    let stages: Vec<_> = outcome
        .runs
        .iter()
        .flat_map(|r| r.stages.iter().cloned())
        .collect();
    write_json(
        &outdir.join("stages.json"),
        &json!({
            "meta": meta_json(cfg),
            "stages": stages,
            "c_table": outcome.c_table,
            "cauchy": outcome.cauchy,
        }),
    )?;

    write_json(
        &outdir.join("audit.json"),
        &json!({
            "meta": meta_json(cfg),
            "audit": products.audit,
        }),
    )?;

    let summary = RunSummary {
        c: last.state.c,
        tau: last.state.tau,
        a: last.state.a,
        converged: last.stages.iter().all(|s| s.converged),
        degenerate: last.degenerate,
        reaction_integral: last.reaction_integral,
        theta_minus: products.audit.left_limit.theta_minus,
        left_branch: format!("{:?}", products.audit.left_limit.branch),
        truncation_shift: last.truncation_shift,
        all_asserted_audits_pass: products.audit.all_asserted_pass,
    };
    write_json(
        &outdir.join("run.json"),
        &json!({
            "meta": meta_json(cfg),
            "run": summary,
            "energy_by_a": products.energy_by_a,
            "condition": outcome.runs.first().and_then(|r| r.condition.as_ref()),
        }),
    )?;

    if cfg.output.csv_profiles {
        let p = &products.audit.profiles;
        let rows: Vec<Vec<f64>> = (0..p.x.len())
            .map(|i| vec![p.x[i], p.max[i], p.min[i], p.mean[i]])
            .collect();
        let path = outdir.join("profiles.csv");
        write_axial_csv(&path, &["x", "max", "min", "mean"], &rows)?;
        prepend_comment(&path, &csv_header_comment(cfg))?;

        let rows: Vec<Vec<f64>> = outcome
            .c_table
            .iter()
            .enumerate()
            .map(|(i, (a, c))| {
                let cauchy = if i > 0 { outcome.cauchy[i - 1] } else { f64::NAN };
                vec![*a, *c, cauchy]
            })
            .collect();
        let path = outdir.join("c_table.csv");
        write_axial_csv(&path, &["a", "c", "cauchy"], &rows)?;
        prepend_comment(&path, &csv_header_comment(cfg))?;
    }

    if cfg.output.dump_state {
        let meta = state_meta(cfg, products, last);
        bundle::write_state(
            &outdir.join("state"),
            &meta,
            &last.state.t,
            &last.state.v,
            &last.artifacts.u,
            &last.artifacts.p,
        )?;
    }
    Ok(())
}

fn prepend_comment(path: &Path, comment: &str) -> Result<()> {
    let body = std::fs::read_to_string(path)?;
    std::fs::write(path, format!("{comment}\n{body}"))?;
    Ok(())
}

fn state_meta(cfg: &RunConfig, products: &SolveProducts, last: &HomotopyOutcome) -> StateMeta {
    StateMeta {
        format: "bqwave-state".into(),
        format_version: STATE_FORMAT_VERSION,
        config_hash: cfg.config_hash.clone(),
        versions: RunConfig::versions(),
        c: last.state.c,
        tau: last.state.tau,
        a: last.state.a,
        axial_cells: products.grid.nx_temp,
        margin_cells: products.grid.margin_cells,
        geometry_kind: cfg.geometry.kind.clone(),
        ly: cfg.geometry.ly,
        lz: cfg.geometry.lz,
        ny: cfg.geometry.ny,
        nz: cfg.geometry.nz,
        polygon: cfg.geometry.polygon.clone(),
        origin: cfg.geometry.origin.clone(),
        cpw_convention: cfg.geometry.cpw_convention.clone(),
        nu: cfg.physics.nu,
        rho: cfg.physics.rho,
        d: cfg.physics.d,
        reaction_family: cfg.reaction.family.clone(),
        reaction_k: cfg.reaction.k,
        theta0: cfg.reaction.theta0,
        extension_order: cfg.solver.extension_order,
        slack: cfg.solver.slack,
        degenerate: last.degenerate,
        reaction_integral: last.reaction_integral,
    }
}

/// `solve`: homotopy + continuation + audits + artifacts on disk.
pub fn cmd_solve(config_path: &Path) -> i32 {
    let cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    // gate before any solve so refusals are cheap and explicit
    let gate = (|| -> Result<Option<i32>> {
        let cross = cfg.build_cross_section()?;
        let params = cfg.phys_params()?;
        if params.d == 1 && !cfg.solver.force {
            let rep = evaluate_thinness(&cross, &params);
            if !rep.satisfied {
                let value = json!({
                    "meta": meta_json(&cfg),
                    "refused": true,
                    "condition": rep,
                });
                println!("{}", serde_json::to_string_pretty(&value)?);
                return Ok(Some(EXIT_CONDITION));
            }
        }
        Ok(None)
    })();
    match gate {
        Ok(Some(code)) => return code,
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            return exit_code_for(&e);
        }
    }

    match run_solve(&cfg) {
        Ok(products) => {
            let outdir = cfg.output_dir();
            if let Err(e) = write_solve_outputs(&cfg, &products, &outdir) {
                eprintln!("error writing outputs: {e:#}");
                return EXIT_CONFIG;
            }
            let last = products.outcome.runs.last().unwrap();
            println!(
                "converged: a = {}, τ = {}, c = {:.12}, ∫f(T) = {:.6e}{}",
                last.state.a,
                last.state.tau,
                last.state.c,
                last.reaction_integral,
                if last.degenerate { " (degenerate)" } else { "" }
            );
            if products.audit.all_asserted_pass {
                EXIT_OK
            } else {
                for r in products.audit.records.iter().filter(|r| r.asserted && !r.pass) {
                    eprintln!("audit failed: {} (lhs {:.6e}, rhs {:.6e})", r.name, r.lhs, r.rhs);
                }
                EXIT_AUDIT
            }
        }
        Err(e) => {
            eprintln!("solve failed: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn run_solve_boxed(cfg: &RunConfig) -> Result<SolveProducts> {
    run_solve(cfg)
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    c: f64,
    theta_minus: f64,
    reaction_integral: f64,
    condition_lhs: f64,
    converged: bool,
    degenerate: bool,
    error: Option<String>,
}

/// `sweep`: independent runs over one parameter axis; per-row failures are
/// recorded and the sweep continues.
pub fn cmd_sweep(config_path: &Path, axis: &str, values: &[f64]) -> i32 {
    let base = match load_config(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    if !["a", "nu", "rho", "k", "lz"].contains(&axis) {
        eprintln!("sweep axis must be one of a, nu, rho, k, lz");
        return EXIT_CONFIG;
    }
    if values.is_empty() {
        eprintln!("sweep needs at least one value");
        return EXIT_CONFIG;
    }

    let rows: Vec<SweepRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|&value| {
                let base = &base;
                scope.spawn(move || sweep_one(base, axis, value))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    });

    let outdir = base.output_dir();
    if let Err(e) = std::fs::create_dir_all(&outdir) {
        eprintln!("cannot create output dir: {e}");
        return EXIT_CONFIG;
    }
    let mut csv = String::new();
    csv.push_str(&csv_header_comment(&base));
    csv.push('\n');
    csv.push_str("value,c,theta_minus,reaction_integral,condition_lhs,converged,degenerate,error\n");
    for r in &rows {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
            r.value,
            r.c,
            r.theta_minus,
            r.reaction_integral,
            r.condition_lhs,
            r.converged,
            r.degenerate,
            r.error.as_deref().unwrap_or("")
        ));
    }
    let path = outdir.join(format!("sweep_{axis}.csv"));
    if let Err(e) = std::fs::write(&path, csv) {
        eprintln!("cannot write sweep summary: {e}");
        return EXIT_CONFIG;
    }
    println!("sweep summary: {}", path.display());
    EXIT_OK
}

fn sweep_one(base: &RunConfig, axis: &str, value: f64) -> SweepRow {
    let mut cfg = base.clone();
    match axis {
        "a" => cfg.solver.a_schedule = vec![value],
        "nu" => cfg.physics.nu = value,
        "rho" => {
            let norm = (cfg.physics.rho.iter().map(|r| r * r).sum::<f64>()).sqrt();
            if norm > 0.0 {
                for r in cfg.physics.rho.iter_mut() {
                    *r *= value / norm;
                }
            } else {
                cfg.physics.rho = [0.0, 0.0, -value];
            }
        }
        "k" => cfg.reaction.k = value,
        "lz" => cfg.geometry.lz = value,
        _ => unreachable!(),
    }
    cfg.output.dump_state = false;
    cfg.output.csv_profiles = false;
    let condition_lhs = cfg
        .build_cross_section()
        .and_then(|cross| Ok(evaluate_thinness(&cross, &cfg.phys_params()?).lhs))
        .unwrap_or(f64::NAN);
    match run_solve_boxed(&cfg) {
        Ok(products) => {
            let last = products.outcome.runs.last().unwrap();
            SweepRow {
                value,
                c: last.state.c,
                theta_minus: products.audit.left_limit.theta_minus,
                reaction_integral: last.reaction_integral,
                condition_lhs,
                converged: true,
                degenerate: last.degenerate,
                error: None,
            }
        }
        Err(e) => SweepRow {
            value,
            c: f64::NAN,
            theta_minus: f64::NAN,
            reaction_integral: f64::NAN,
            condition_lhs,
            converged: false,
            degenerate: false,
            error: Some(format!("{e:#}").replace(',', ";")),
        },
    }
}

/// `verify`: re-audits a dumped state bundle.
pub fn cmd_verify(state_dir: &Path) -> i32 {
    let run = || -> Result<i32> {
        let loaded = bundle::load_state(state_dir)?;
        let t_tilde = extend_temperature(&loaded.t, &loaded.grid)?;
        let (v_tilde, _) =
            extend_velocity(&loaded.v, &loaded.grid, loaded.meta.extension_order)?;
        let input = AuditInput {
            grid: &loaded.grid,
            params: &loaded.params,
            c: loaded.meta.c,
            tau: loaded.meta.tau,
            t: &loaded.t,
            v: &loaded.v,
            u: &loaded.u,
            t_tilde: &t_tilde,
            v_tilde: &v_tilde,
            degenerate: loaded.meta.degenerate,
            slack: loaded.meta.slack,
        };
        let audit = run_audits(&input);
        // dumped pressure is stored zero-mean
        let p_mean =
            loaded.p.data.iter().sum::<f64>() / loaded.p.data.len().max(1) as f64;
        let value = json!({
            "meta": {
                "config_hash": loaded.meta.config_hash,
                "versions": RunConfig::versions(),
            },
            "pressure_mean": p_mean,
            "audit": audit,
        });
        write_json(&state_dir.join("audit.json"), &value)?;
        let p = &audit.profiles;
        let rows: Vec<Vec<f64>> = (0..p.x.len())
            .map(|i| vec![p.x[i], p.max[i], p.min[i], p.mean[i]])
            .collect();
        write_axial_csv(&state_dir.join("profiles.csv"), &["x", "max", "min", "mean"], &rows)?;
        for r in audit.records.iter().filter(|r| r.asserted && !r.pass) {
            eprintln!(
                "audit failed: {} (lhs {:.6e}, rhs {:.6e})",
                r.name, r.lhs, r.rhs
            );
        }
        println!(
            "re-audit of {}: {}",
            state_dir.display(),
            if audit.all_asserted_pass { "pass" } else { "FAIL" }
        );
        Ok(if audit.all_asserted_pass {
            EXIT_OK
        } else {
            EXIT_AUDIT
        })
    };
    unwrap_exit(run())
}

/// `planar`: the decoupled closed form and its root-found speeds.
pub fn cmd_planar(config_path: &Path) -> i32 {
    let run = || -> Result<i32> {
        let cfg = load_config(config_path)?;
        let a = *cfg.solver.a_schedule.first().context("empty a schedule")?;
        let theta0 = cfg.reaction.theta0;
        let c_cont = planar_speed_root(a, theta0);
        let c_disc = discrete_planar_speed(a, cfg.solver.axial_cells, theta0);
        let value = json!({
            "meta": meta_json(&cfg),
            "a": a,
            "theta0": theta0,
            "profile": "T(x) = (exp(-c x) - exp(-c a)) / (exp(c a) - exp(-c a))",
            "normalization": "max over [0,a] equals theta0",
            "c_closed_form_root": c_cont,
            "c_discrete_root": c_disc,
            "axial_cells": cfg.solver.axial_cells,
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
        Ok(EXIT_OK)
    };
    unwrap_exit(run())
}

fn unwrap_exit(r: Result<i32>) -> i32 {
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}
