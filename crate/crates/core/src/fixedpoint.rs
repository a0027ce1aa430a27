//! The fixed-point map on `(c, T, v)`, the homotopy in the coupling
//! parameter `τ`, and the continuation in the window half-length `a`.
//!
//! One application of the map, given a state `(c, Z, v)` and `τ`:
//!
//! 1. extend the temperature (`T̃`) and the velocity (`ṽ`, divergence-free)
//!    to the flow truncation;
//! 2. solve the flow problem for `u` with forcing `τ T̃ ρ⃗`;
//! 3. solve the temperature problem with transport `τ v·∇T` and source
//!    `τ f(Z)`;
//! 4. update the speed: `c' = c - θ₀ + max { T(x,x̃) : x ∈ [0,a] }`, so the
//!    normalization `max_{[0,a]} T = θ₀` is a fixed-point condition;
//!
//! and return `(c', T, u|_{[-a,a]})`. Fixed points at `τ = 1` are the
//! truncated traveling waves. The driver runs damped Picard iteration along
//! an ascending τ schedule; the speed component gets a secant-scaled damping
//! because the sensitivity of the normalization max to `c` grows linearly
//! with `a`.

use crate::error::{Error, Result};
use crate::fields::ops::AdvectionScheme;
use crate::fields::{
    extend_temperature, extend_velocity, ChannelGrid, ExtensionReport, ScalarField, VectorField,
};
use crate::flow::{AdvectionPolicy, FlowConfig, FlowProblem, FlowSolution, FlowSolver, FlowStats};
use crate::geometry::{evaluate_thinness, ConditionReport, CrossSection, PhysParams};
use crate::linalg::SolveStats;
use crate::temperature::{
    discrete_planar_profile, discrete_planar_speed, normalization_gap, TempSolver,
    TemperatureProblem,
};
use serde::Serialize;
use std::sync::Arc;

/// One iterate of the fixed-point map.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub c: f64,
    /// Temperature on the window `[-a,a]`.
    pub t: ScalarField,
    /// Velocity on the window (restriction of the last flow solve).
    pub v: VectorField,
    pub tau: f64,
    pub a: f64,
    pub meta: IterationMeta,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationMeta {
    pub iterations: usize,
    pub residual: f64,
    pub damping: f64,
    pub c_damping: f64,
}

impl WaveState {
    /// Monitor-band and finiteness invariants.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.c.is_finite() {
            return Err(Error::StateInvariant(format!("c = {} not finite", self.c)));
        }
        let (lo, hi) = self.t.min_max();
        if lo < -0.01 || hi > 1.01 {
            return Err(Error::StateInvariant(format!(
                "temperature left the monitor band: [{lo:.4}, {hi:.4}]"
            )));
        }
        Ok(())
    }
}

/// How to damp the speed update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CDamping {
    /// Secant-estimated Newton damping (default); falls back to the planar
    /// slope estimate `1/(1 + 3a/16)` until two iterates are available.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointConfig {
    /// Picard damping for the field components.
    pub damping: f64,
    pub c_damping: CDamping,
    /// Ascending τ stages ending at the target coupling.
    pub tau_schedule: Vec<f64>,
    /// Ascending window half-lengths.
    pub a_schedule: Vec<f64>,
    /// Final-stage tolerance on `max(|Δc|, ‖ΔT‖_∞, ‖Δv‖_∞)` of the raw map.
    pub tolerance: f64,
    /// Tolerance for intermediate τ stages.
    pub stage_tolerance: f64,
    pub max_iterations: usize,
    /// Reflection order of the velocity extension.
    pub extension_order: u32,
    /// `A - a`; `None` picks `max(4, 8 C_P)`.
    pub flow_margin: Option<f64>,
    pub advection: AdvectionPolicy,
    /// Proceed at `d = 1` even when the thinness condition fails.
    pub force: bool,
    /// Re-solve the final flow at 1.5·A and report the window shift.
    pub truncation_check: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            damping: 0.5,
            c_damping: CDamping::Auto,
            tau_schedule: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            a_schedule: vec![20.0],
            tolerance: 1e-9,
            stage_tolerance: 1e-6,
            max_iterations: 200,
            extension_order: 4,
            flow_margin: None,
            advection: AdvectionPolicy::Auto,
            force: false,
            truncation_check: true,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "damping must lie in (0,1], got {}",
                self.damping
            )));
        }
        if self.tau_schedule.is_empty() || self.a_schedule.is_empty() {
            return Err(Error::Config("τ and a schedules must be nonempty".into()));
        }
        if self.tau_schedule.windows(2).any(|w| w[1] < w[0])
            || self.tau_schedule.iter().any(|t| !(0.0..=1.0).contains(t))
        {
            return Err(Error::Config("τ schedule must ascend within [0,1]".into()));
        }
        if self.a_schedule.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("a schedule must ascend".into()));
        }
        if !(self.tolerance > 0.0) || !(self.stage_tolerance > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Byproducts of one map application, kept for diagnostics.
pub struct KaArtifacts {
    pub u: VectorField,
    pub p: ScalarField,
    pub t_tilde: ScalarField,
    pub v_tilde: VectorField,
    pub extension: ExtensionReport,
    pub flow_stats: FlowStats,
    pub temp_stats: SolveStats,
}

/// Raw image of the map at a state.
pub struct KaImage {
    pub c: f64,
    pub t: ScalarField,
    pub v: VectorField,
    pub artifacts: KaArtifacts,
}

/// Shared solver context for repeated map applications on one grid.
pub struct KaContext {
    pub grid: Arc<ChannelGrid>,
    pub params: PhysParams,
    pub flow: FlowSolver,
    pub temp: TempSolver,
    advection: AdvectionPolicy,
    extension_order: u32,
    warm_flow: Option<(VectorField, ScalarField)>,
}

impl KaContext {
    pub fn new(grid: Arc<ChannelGrid>, params: PhysParams, cfg: &FixedPointConfig) -> Self {
        let flow = FlowSolver::new(
            grid.clone(),
            FlowConfig {
                policy: cfg.advection,
                ..FlowConfig::default()
            },
        );
        let temp = TempSolver::new(grid.clone());
        KaContext {
            grid,
            params,
            flow,
            temp,
            advection: cfg.advection,
            extension_order: cfg.extension_order,
            warm_flow: None,
        }
    }

    fn temp_scheme(&self, v: &VectorField, tau: f64) -> AdvectionScheme {
        match self.advection {
            AdvectionPolicy::Centered => AdvectionScheme::Centered,
            AdvectionPolicy::Upwind => AdvectionScheme::Upwind,
            AdvectionPolicy::Auto => {
                let pe = FlowSolver::peclet_max(v, 1.0) * tau;
                if pe > 2.0 {
                    AdvectionScheme::Upwind
                } else {
                    AdvectionScheme::Centered
                }
            }
        }
    }

    /// One raw application of the map.
    pub fn ka_image(&mut self, state: &WaveState) -> Result<KaImage> {
        state.check_invariants()?;
        let t_tilde = extend_temperature(&state.t, &self.grid)?;
        let (v_tilde, extension) = extend_velocity(&state.v, &self.grid, self.extension_order)?;

        let prob = FlowProblem {
            c: state.c,
            tau: state.tau,
            d: self.params.d,
            t_tilde: &t_tilde,
            v_tilde: &v_tilde,
            nu: self.params.nu,
            rho: self.params.rho,
        };
        let warm = self.warm_flow.as_ref().map(|(u, p)| (u, p));
        let FlowSolution { u, p, stats } = self.flow.solve(&prob, warm)?;
        let v_new = u.restrict_to_temp(&self.grid);

        let scheme = self.temp_scheme(&state.v, state.tau);
        let tprob = TemperatureProblem {
            c: state.c,
            v: &state.v,
            z: &state.t,
            tau: state.tau,
            reaction: self.params.reaction,
            scheme,
        };
        let (t_new, temp_stats) = self.temp.solve(&tprob, Some(&state.t))?;

        let gap = normalization_gap(&t_new, &self.grid, self.params.theta0());
        let c_new = state.c + gap;

        self.warm_flow = Some((u.clone(), p.clone()));
        Ok(KaImage {
            c: c_new,
            t: t_new,
            v: v_new,
            artifacts: KaArtifacts {
                u,
                p,
                t_tilde,
                v_tilde,
                extension,
                flow_stats: stats,
                temp_stats,
            },
        })
    }
}

/// Per-stage convergence record.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub a: f64,
    pub tau: f64,
    pub c: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub audits_summary: StageAudits,
}

/// Cheap per-stage health numbers; the full inequality audit runs on the
/// final state through the diagnostics module.
#[derive(Debug, Clone, Serialize)]
pub struct StageAudits {
    pub normalization_gap: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub flow_residual: f64,
    pub advection_warning: bool,
}

pub struct HomotopyOutcome {
    pub state: WaveState,
    pub artifacts: KaArtifacts,
    pub stages: Vec<StageRecord>,
    /// Set when the reaction integral vanishes: the truncated planar state
    /// with `c = ln((1-θ₀)/θ₀)/a ↓ 0` is not a genuine front.
    pub degenerate: bool,
    pub reaction_integral: f64,
    /// Thinness report when `d = 1`.
    pub condition: Option<ConditionReport>,
    /// Max window shift of `u` when the flow is re-solved at 1.5·A.
    pub truncation_shift: Option<f64>,
}

/// Planar initial state at `τ = 0`: root-found discrete speed, planar
/// profile, zero velocity.
pub fn planar_initial_state(grid: &ChannelGrid, theta0: f64) -> WaveState {
    let c = discrete_planar_speed(grid.a, grid.nx_temp, theta0);
    let prof = discrete_planar_profile(c, grid.a, grid.nx_temp);
    let mut t = ScalarField::nodes_on_temp(grid);
    for i in 0..=grid.nx_temp {
        for j in 0..t.ny {
            for k in 0..t.nz {
                t.set(i, j, k, prof[i]);
            }
        }
    }
    WaveState {
        c,
        t,
        v: VectorField::zeros_on_temp(grid),
        tau: 0.0,
        a: grid.a,
        meta: IterationMeta::default(),
    }
}

/// Damped iteration of the map at fixed `τ` until the raw fixed-point
/// residual `max(|Δc|, ‖ΔT‖_∞, ‖Δv‖_∞)` drops below `tol`.
fn iterate_stage(
    ctx: &mut KaContext,
    state: &mut WaveState,
    tau: f64,
    tol: f64,
    max_iter: usize,
    damping: f64,
    c_damping: CDamping,
) -> Result<(StageRecord, Option<KaArtifacts>)> {
    state.tau = tau;
    let mut residuals = Vec::new();
    let mut artifacts = None;
    let mut prev_secant: Option<(f64, f64)> = None;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let image = ctx.ka_image(state)?;
        let dc = image.c - state.c;
        let mut dt = 0.0f64;
        for (aa, bb) in image.t.data.iter().zip(&state.t.data) {
            dt = dt.max((aa - bb).abs());
        }
        let dv = image.v.max_diff(&state.v);
        let residual = dc.abs().max(dt).max(dv);
        residuals.push(residual);

        if residual <= tol {
            // adopt the raw image: the stored v is then the restriction of
            // the last flow solve bit-exactly and the normalization gap of
            // the stored T is bounded by the residual
            state.c = image.c;
            state.t = image.t;
            state.v = image.v;
            state.meta = IterationMeta {
                iterations: it,
                residual,
                damping,
                c_damping: 1.0,
            };
            artifacts = Some(image.artifacts);
            converged = true;
            break;
        }

        let omega_c = match c_damping {
            CDamping::Fixed(w) => w,
            CDamping::Auto => {
                // Newton-like damping for the speed: g(c) = c' - c has slope
                // ≈ ∂max T/∂c - ... estimated by secant, seeded with the
                // planar sensitivity of the normalization max (≈ -3a/16).
                let seed = 1.0 / (1.0 + 0.1875 * state.a);
                let w = match prev_secant {
                    Some((c_prev, g_prev)) if (state.c - c_prev).abs() > 1e-14 => {
                        let slope = (dc - g_prev) / (state.c - c_prev);
                        if slope < -1e-9 {
                            (-1.0 / slope).clamp(0.02 * seed, 1.0)
                        } else {
                            seed
                        }
                    }
                    _ => seed,
                };
                prev_secant = Some((state.c, dc));
                w
            }
        };

        state.c += omega_c * dc;
        for (cur, img) in state.t.data.iter_mut().zip(&image.t.data) {
            *cur += damping * (img - *cur);
        }
        let mut v_step = image.v.clone();
        v_step.axpy(-1.0, &state.v);
        state.v.axpy(damping, &v_step);
        state.meta = IterationMeta {
            iterations: it,
            residual,
            damping,
            c_damping: omega_c,
        };
        artifacts = Some(image.artifacts);
    }
    let gap = normalization_gap(&state.t, &ctx.grid, ctx.params.theta0());
    let (t_min, t_max) = state.t.min_max();
    let art_ref = artifacts.as_ref();
    let record = StageRecord {
        a: state.a,
        tau,
        c: state.c,
        iterations,
        residuals: residuals.clone(),
        converged,
        audits_summary: StageAudits {
            normalization_gap: gap,
            t_min,
            t_max,
            flow_residual: art_ref.map(|a| a.flow_stats.residual).unwrap_or(0.0),
            advection_warning: art_ref
                .map(|a| a.flow_stats.advection_warning)
                .unwrap_or(false),
        },
    };
    if !converged {
        return Err(Error::StageNonConvergence {
            tau,
            residual: *residuals.last().unwrap_or(&f64::NAN),
            iterations,
        });
    }
    Ok((record, artifacts))
}

/// Runs the τ homotopy at the first entry of the `a` schedule.
///
/// At `d = 1` the thinness condition gates the solve unless `force` is set.
pub fn solve_homotopy(
    cross: Arc<CrossSection>,
    params: &PhysParams,
    cfg: &FixedPointConfig,
    axial_cells: usize,
) -> Result<HomotopyOutcome> {
    cfg.validate()?;
    params.validate()?;
    let condition = gate_condition(&cross, params, cfg)?;
    let a0 = cfg.a_schedule[0];
    let margin = cfg
        .flow_margin
        .unwrap_or_else(|| ChannelGrid::default_margin(&cross));
    let grid = Arc::new(ChannelGrid::new(cross, a0, axial_cells, margin)?);
    let mut ctx = KaContext::new(grid.clone(), params.clone(), cfg);
    let mut state = planar_initial_state(&grid, params.theta0());
    let mut stages = Vec::new();
    let mut artifacts: Option<KaArtifacts> = None;
    let n_stages = cfg.tau_schedule.len();
    for (si, &tau) in cfg.tau_schedule.iter().enumerate() {
        let tol = if si + 1 == n_stages {
            cfg.tolerance
        } else {
            cfg.stage_tolerance
        };
        let (record, art) = iterate_stage(
            &mut ctx,
            &mut state,
            tau,
            tol,
            cfg.max_iterations,
            cfg.damping,
            cfg.c_damping,
        )?;
        stages.push(record);
        if let Some(a) = art {
            artifacts = Some(a);
        }
    }
    let artifacts = artifacts.expect("at least one stage ran");
    finish_outcome(state, artifacts, stages, params, cfg, &grid, condition)
}

fn gate_condition(
    cross: &CrossSection,
    params: &PhysParams,
    cfg: &FixedPointConfig,
) -> Result<Option<ConditionReport>> {
    if params.d != 1 {
        return Ok(None);
    }
    let report = evaluate_thinness(cross, params);
    if !report.satisfied && !cfg.force {
        return Err(Error::ConditionViolated { lhs: report.lhs });
    }
    Ok(Some(report))
}

fn finish_outcome(
    state: WaveState,
    artifacts: KaArtifacts,
    stages: Vec<StageRecord>,
    params: &PhysParams,
    cfg: &FixedPointConfig,
    grid: &Arc<ChannelGrid>,
    condition: Option<ConditionReport>,
) -> Result<HomotopyOutcome> {
    let reaction_integral = reaction_integral(&state.t, &params.reaction, grid);
    // the effective reaction coupling at the solved stage is τ·f
    let degenerate =
        state.tau * reaction_integral <= 1e-12 * grid.cross.area * 2.0 * grid.a;
    let truncation_shift = if cfg.truncation_check {
        Some(truncation_sensitivity(&state, params, cfg, grid)?)
    } else {
        None
    };
    Ok(HomotopyOutcome {
        state,
        artifacts,
        stages,
        degenerate,
        reaction_integral,
        condition,
        truncation_shift,
    })
}

/// ∫ f(T) over the window (trapezoid × cell quadrature).
pub fn reaction_integral(
    t: &ScalarField,
    reaction: &crate::reaction::NonlinearitySpec,
    grid: &ChannelGrid,
) -> f64 {
    let cell = t.hy * t.hz;
    let mut sum = 0.0;
    for i in 0..t.nxv {
        let wx = t.x_weight(i);
        for j in 0..t.ny {
            for k in 0..t.nz {
                if grid.cross.weights[j * t.nz + k] > 0.0 {
                    sum += wx * cell * reaction.value(t.at(i, j, k));
                }
            }
        }
    }
    sum
}

/// Re-solves the final flow problem on a 1.5·A truncation and returns the
/// max-norm change of `u` restricted to the window.
fn truncation_sensitivity(
    state: &WaveState,
    params: &PhysParams,
    cfg: &FixedPointConfig,
    grid: &Arc<ChannelGrid>,
) -> Result<f64> {
    let wide_margin = 1.5 * grid.big_a - grid.a;
    let wide = Arc::new(ChannelGrid::new(
        grid.cross.clone(),
        grid.a,
        grid.nx_temp,
        wide_margin,
    )?);
    let t_tilde = extend_temperature(&state.t, &wide)?;
    let (v_tilde, _) = extend_velocity(&state.v, &wide, cfg.extension_order)?;
    let solver = FlowSolver::new(
        wide.clone(),
        FlowConfig {
            policy: cfg.advection,
            ..FlowConfig::default()
        },
    );
    let prob = FlowProblem {
        c: state.c,
        tau: state.tau,
        d: params.d,
        t_tilde: &t_tilde,
        v_tilde: &v_tilde,
        nu: params.nu,
        rho: params.rho,
    };
    let sol = solver.solve(&prob, None)?;
    let v_wide = sol.u.restrict_to_temp(&wide);
    Ok(v_wide.max_diff(&state.v))
}

pub struct ContinuationOutcome {
    pub runs: Vec<HomotopyOutcome>,
    /// `(a, c)` pairs in schedule order.
    pub c_table: Vec<(f64, f64)>,
    /// `|c(a_{k+1}) - c(a_k)|`.
    pub cauchy: Vec<f64>,
}

/// Extends a converged state to a longer window: temperature pads with the
/// boundary data (1 left, 0 right); the velocity pads its axial component
/// with the end traces and the transverse components with zero, which keeps
/// the discrete divergence exactly zero.
pub fn pad_state(state: &WaveState, old: &ChannelGrid, new: &ChannelGrid) -> Result<WaveState> {
    let shift_f = (new.a - old.a) / new.hx;
    let shift = shift_f.round() as usize;
    if (shift_f - shift as f64).abs() > 1e-9 || new.a < old.a {
        return Err(Error::Config(format!(
            "a schedule increments must be whole cells: Δa = {} at hx = {}",
            new.a - old.a,
            new.hx
        )));
    }
    let (ny, nz) = (old.ny(), old.nz());
    let mut t = ScalarField::nodes_on_temp(new);
    for i in 0..=new.nx_temp {
        for j in 0..ny {
            for k in 0..nz {
                let v = if i < shift {
                    1.0
                } else if i > shift + old.nx_temp {
                    0.0
                } else {
                    state.t.at(i - shift, j, k)
                };
                t.set(i, j, k, v);
            }
        }
    }
    let mut v = VectorField::zeros_on_temp(new);
    let o1 = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
    let o2 = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * nz + k;
    let o3 = |i: usize, j: usize, k: usize| (i * ny + j) * (nz + 1) + k;
    for i in 0..=new.nx_temp {
        let src = i.clamp(shift, shift + old.nx_temp) - shift;
        for j in 0..ny {
            for k in 0..nz {
                v.u1[o1(i, j, k)] = state.v.u1[o1(src, j, k)];
            }
        }
    }
    for i in 0..new.nx_temp {
        if i >= shift && i < shift + old.nx_temp {
            let src = i - shift;
            for j in 0..=ny {
                for k in 0..nz {
                    v.u2[o2(i, j, k)] = state.v.u2[o2(src, j, k)];
                }
            }
            for j in 0..ny {
                for k in 0..=nz {
                    v.u3[o3(i, j, k)] = state.v.u3[o3(src, j, k)];
                }
            }
        }
    }
    Ok(WaveState {
        c: state.c,
        t,
        v,
        tau: state.tau,
        a: new.a,
        meta: IterationMeta::default(),
    })
}

/// Solves along the `a` schedule, warm-starting each window from the
/// previous one; the first window runs the full τ homotopy, later windows
/// iterate at the final τ directly.
pub fn continue_in_a(
    cross: Arc<CrossSection>,
    params: &PhysParams,
    cfg: &FixedPointConfig,
    axial_cells: usize,
) -> Result<ContinuationOutcome> {
    cfg.validate()?;
    let a0 = cfg.a_schedule[0];
    let hx = 2.0 * a0 / axial_cells as f64;
    let margin = cfg
        .flow_margin
        .unwrap_or_else(|| ChannelGrid::default_margin(&cross));
    let tau_final = *cfg.tau_schedule.last().unwrap();

    let mut runs = Vec::new();
    let mut c_table = Vec::new();
    let first = solve_homotopy(cross.clone(), params, cfg, axial_cells)?;
    c_table.push((a0, first.state.c));
    let mut prev_state = first.state.clone();
    let mut prev_grid = Arc::new(ChannelGrid::new(cross.clone(), a0, axial_cells, margin)?);
    runs.push(first);

    for &a in cfg.a_schedule.iter().skip(1) {
        let cells = ((2.0 * a / hx).round() as usize + 1) / 2 * 2;
        let grid = Arc::new(ChannelGrid::new(cross.clone(), a, cells, margin)?);
        let mut state = pad_state(&prev_state, &prev_grid, &grid)?;
        let mut ctx = KaContext::new(grid.clone(), params.clone(), cfg);
        let (record, artifacts) = iterate_stage(
            &mut ctx,
            &mut state,
            tau_final,
            cfg.tolerance,
            cfg.max_iterations,
            cfg.damping,
            cfg.c_damping,
        )?;
        c_table.push((a, state.c));
        prev_state = state.clone();
        prev_grid = grid.clone();
        let outcome = finish_outcome(
            state,
            artifacts.expect("stage ran"),
            vec![record],
            params,
            cfg,
            &grid,
            None,
        )?;
        runs.push(outcome);
    }
    let cauchy = c_table
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).abs())
        .collect();
    Ok(ContinuationOutcome {
        runs,
        c_table,
        cauchy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CrossSection;
    use crate::reaction::{NonlinearityFamily, NonlinearitySpec};

    fn cross() -> Arc<CrossSection> {
        Arc::new(CrossSection::build_rectangle(0.5, 0.5, 6, 6).unwrap())
    }

    fn params(d: u8, k: f64) -> PhysParams {
        PhysParams {
            nu: 1.0,
            rho: [0.0, 0.0, -1.0],
            d,
            reaction: NonlinearitySpec {
                family: NonlinearityFamily::Hat,
                k,
                theta0: 0.25,
            },
        }
    }

    fn quick_cfg() -> FixedPointConfig {
        FixedPointConfig {
            tau_schedule: vec![0.0, 0.5, 1.0],
            a_schedule: vec![4.0],
            tolerance: 1e-9,
            stage_tolerance: 1e-7,
            truncation_check: false,
            extension_order: 2,
            ..FixedPointConfig::default()
        }
    }

    #[test]
    fn planar_state_is_a_fixed_point_at_tau_zero() {
        let grid = Arc::new(ChannelGrid::new(cross(), 4.0, 32, 4.0).unwrap());
        let pp = params(0, 1.0);
        let cfg = quick_cfg();
        let mut ctx = KaContext::new(grid.clone(), pp, &cfg);
        let state = planar_initial_state(&grid, 0.25);
        let image = ctx.ka_image(&state).unwrap();
        assert!((image.c - state.c).abs() < 1e-8, "Δc = {}", image.c - state.c);
        let mut dt = 0.0f64;
        for (a, b) in image.t.data.iter().zip(&state.t.data) {
            dt = dt.max((a - b).abs());
        }
        assert!(dt < 1e-8, "ΔT = {dt}");
        assert_eq!(image.v.max_abs(), 0.0);
    }

    #[test]
    fn speed_update_matches_planar_oracle_at_arbitrary_c() {
        let grid = Arc::new(ChannelGrid::new(cross(), 4.0, 32, 4.0).unwrap());
        let pp = params(0, 1.0);
        let cfg = quick_cfg();
        let mut ctx = KaContext::new(grid.clone(), pp, &cfg);
        let mut state = planar_initial_state(&grid, 0.25);
        state.c = 0.7; // arbitrary speed, zero velocity, τ = 0
        let image = ctx.ka_image(&state).unwrap();
        let prof = discrete_planar_profile(0.7, grid.a, grid.nx_temp);
        let planar_max = prof[grid.center_node()..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let expect = state.c - 0.25 + planar_max;
        assert!((image.c - expect).abs() < 1e-7, "{} vs {expect}", image.c);
    }

    #[test]
    fn tau_zero_stage_converges_immediately() {
        let pp = params(0, 1.0);
        let mut cfg = quick_cfg();
        cfg.tau_schedule = vec![0.0];
        let out = solve_homotopy(cross(), &pp, &cfg, 32).unwrap();
        assert!(out.stages[0].converged);
        assert!(out.stages[0].iterations <= 3, "{}", out.stages[0].iterations);
        // τ = 0 has zero reaction coupling: flagged degenerate
        assert!(out.degenerate);
    }

    #[test]
    fn full_homotopy_small_fixture() {
        let pp = params(0, 2.0);
        let mut cfg = quick_cfg();
        cfg.truncation_check = true;
        let out = solve_homotopy(cross(), &pp, &cfg, 32).unwrap();
        assert_eq!(out.stages.len(), 3);
        assert!(out.stages.iter().all(|s| s.converged));
        let c0 = discrete_planar_speed(4.0, 32, 0.25);
        assert!(out.state.c > c0, "reaction must speed the front up");
        assert!(out.reaction_integral > 0.0);
        assert!(!out.degenerate);
        // normalization pinned at the fixed point
        let gap = out.stages.last().unwrap().audits_summary.normalization_gap;
        assert!(gap.abs() <= 1e-8, "gap {gap}");
        // restriction consistency: stored v is the restriction of u, bitwise
        let grid = ChannelGrid::new(cross(), 4.0, 32, ChannelGrid::default_margin(&cross()))
            .unwrap();
        let r = out.artifacts.u.restrict_to_temp(&grid);
        assert_eq!(r.max_diff(&out.state.v), 0.0);
        // truncation shift is reported and small
        let shift = out.truncation_shift.unwrap();
        assert!(shift < 1e-4, "truncation shift {shift}");
    }

    #[test]
    fn fixed_points_are_damping_independent() {
        // weak reaction so the undamped Picard map is still contractive
        let pp = params(0, 0.5);
        let mut cfg_a = quick_cfg();
        cfg_a.damping = 0.5;
        let mut cfg_b = quick_cfg();
        cfg_b.damping = 1.0;
        let out_a = solve_homotopy(cross(), &pp, &cfg_a, 32).unwrap();
        let out_b = solve_homotopy(cross(), &pp, &cfg_b, 32).unwrap();
        assert!(
            (out_a.state.c - out_b.state.c).abs() <= 10.0 * cfg_a.tolerance,
            "{} vs {}",
            out_a.state.c,
            out_b.state.c
        );
    }

    #[test]
    fn zero_reaction_is_degenerate_with_planar_speed() {
        let pp = params(0, 0.0);
        let cfg = quick_cfg();
        let out = solve_homotopy(cross(), &pp, &cfg, 32).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.reaction_integral, 0.0);
        // truncated planar root c = ln((1-θ₀)/θ₀)/a, vanishing as a grows
        let expect = (3.0f64).ln() / 4.0;
        assert!((out.state.c - expect).abs() < 5e-3, "c = {}", out.state.c);
    }

    #[test]
    fn d1_gate_refuses_when_condition_fails() {
        let mut pp = params(1, 2.0);
        pp.nu = 1e-3; // thinness condition badly violated
        let cfg = quick_cfg();
        let err = match solve_homotopy(cross(), &pp, &cfg, 32) {
            Err(e) => e,
            Ok(_) => panic!("expected a refusal"),
        };
        assert!(matches!(err, Error::ConditionViolated { .. }));
    }

    #[test]
    fn d1_small_fixture_converges() {
        let pp = params(1, 2.0);
        let cfg = quick_cfg();
        let out = solve_homotopy(cross(), &pp, &cfg, 32).unwrap();
        assert!(out.condition.as_ref().unwrap().satisfied);
        assert!(out.state.c > 0.0);
        assert!(out.reaction_integral > 0.0);
    }

    #[test]
    fn continuation_warm_start_and_cauchy() {
        let pp = params(0, 2.0);
        let mut cfg = quick_cfg();
        cfg.a_schedule = vec![4.0, 4.0, 6.0];
        let out = continue_in_a(cross(), &pp, &cfg, 32).unwrap();
        assert_eq!(out.c_table.len(), 3);
        // duplicate a: warm start at the fixed point converges immediately
        assert!(
            out.runs[1].stages[0].iterations <= 2,
            "{} iterations",
            out.runs[1].stages[0].iterations
        );
        assert!(out.cauchy[0] <= 10.0 * cfg.tolerance);
        // the padded warm start is accepted by the extension contract
        assert!(out.runs[2].stages[0].converged);
    }
}
