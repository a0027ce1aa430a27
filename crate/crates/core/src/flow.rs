//! Steady flow solve on the truncated channel:
//! `-c u_x - νΔu + τ d ṽ·∇u + ∇p = τ T̃ ρ⃗`, `div u = 0`, `u = 0` on the
//! boundary (the truncation planes model the decay at infinity).
//!
//! The saddle point is solved by a pressure-projection outer iteration:
//! each sweep solves the three decoupled momentum equations with the
//! current pressure (BiCGStab + ILU(0)), projects the velocity onto the
//! discretely divergence-free space, and updates the pressure with the
//! commuted correction `-ν div u* - c ∂x φ`. Convergence is declared on the
//! true momentum residual with the velocity already projected, so accepted
//! solutions satisfy both equations to the configured tolerances.

use crate::error::{Error, Result};
use crate::fields::ops::{divergence, staggered_velocity_at_scalar, AdvectionScheme};
use crate::fields::{ChannelGrid, PoissonContext, ScalarField, VectorField};
use crate::geometry::CrossSection;
use crate::linalg::{bicgstab, Csr, Ilu0};
use serde::Serialize;
use std::sync::Arc;

/// Inputs of one flow solve.
pub struct FlowProblem<'a> {
    pub c: f64,
    pub tau: f64,
    pub d: u8,
    /// Extended temperature on flow-extent x-nodes.
    pub t_tilde: &'a ScalarField,
    /// Extended divergence-free advecting velocity on the flow extent.
    pub v_tilde: &'a VectorField,
    pub nu: f64,
    pub rho: [f64; 3],
}

/// How to discretize the `ṽ·∇u` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AdvectionPolicy {
    /// Centered unless the cell Péclet number exceeds 2.
    Auto,
    Centered,
    Upwind,
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Relative momentum residual target.
    pub rel_tol: f64,
    pub max_outer: usize,
    pub policy: AdvectionPolicy,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            rel_tol: 1e-10,
            max_outer: 400,
            policy: AdvectionPolicy::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowStats {
    pub residual: f64,
    pub div_max_scaled: f64,
    pub outer_iterations: usize,
    pub momentum_iterations: usize,
    pub scheme_used: AdvectionScheme,
    pub peclet_max: f64,
    pub advection_warning: bool,
}

pub struct FlowSolution {
    pub u: VectorField,
    pub p: ScalarField,
    pub stats: FlowStats,
}

pub struct FlowSolver {
    pub grid: Arc<ChannelGrid>,
    poisson: PoissonContext,
    pub cfg: FlowConfig,
    /// Mean of the cross-section response `-Δ⊥ P = 1`, `P = 0` on the wall
    /// (discrete, with the same wall closure as the axial momentum stencil).
    /// Scales the slow-mode part of the pressure update: for smooth axial
    /// pressure errors the velocity answer is the Poiseuille profile, so the
    /// divergence signal is damped by exactly this factor.
    poiseuille_mean: f64,
}

impl FlowSolver {
    pub fn new(grid: Arc<ChannelGrid>, cfg: FlowConfig) -> Self {
        let poisson = PoissonContext::on_flow(&grid);
        let poiseuille_mean = poiseuille_mean(&grid);
        FlowSolver {
            grid,
            poisson,
            cfg,
            poiseuille_mean,
        }
    }

    pub fn poisson(&self) -> &PoissonContext {
        &self.poisson
    }

    /// Maximum cell Péclet number of the advecting field.
    pub fn peclet_max(v: &VectorField, nu: f64) -> f64 {
        let m1 = v.u1.iter().fold(0.0f64, |m, x| m.max(x.abs())) * v.hx;
        let m2 = v.u2.iter().fold(0.0f64, |m, x| m.max(x.abs())) * v.hy;
        let m3 = v.u3.iter().fold(0.0f64, |m, x| m.max(x.abs())) * v.hz;
        m1.max(m2).max(m3) / nu
    }

    /// Buoyancy forcing `τ T̃ ρ⃗` sampled on the face layout.
    pub fn build_forcing(&self, prob: &FlowProblem) -> VectorField {
        let g = &self.grid;
        let (nx, ny, nz) = (g.nx_flow, g.ny(), g.nz());
        let t = prob.t_tilde;
        let mut f = VectorField::zeros_on_flow(g);
        let o1 = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let o2 = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * nz + k;
        let o3 = |i: usize, j: usize, k: usize| (i * ny + j) * (nz + 1) + k;
        let scale = prob.tau;
        if scale == 0.0 {
            return f;
        }
        // u1 faces are collocated with T̃ nodes
        if prob.rho[0] != 0.0 {
            for i in 1..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        f.u1[o1(i, j, k)] = scale * prob.rho[0] * t.at(i, j, k);
                    }
                }
            }
        }
        if prob.rho[1] != 0.0 {
            for i in 0..nx {
                for j in 1..ny {
                    for k in 0..nz {
                        let avg = 0.25
                            * (t.at(i, j - 1, k)
                                + t.at(i, j, k)
                                + t.at(i + 1, j - 1, k)
                                + t.at(i + 1, j, k));
                        f.u2[o2(i, j, k)] = scale * prob.rho[1] * avg;
                    }
                }
            }
        }
        if prob.rho[2] != 0.0 {
            for i in 0..nx {
                for j in 0..ny {
                    for k in 1..nz {
                        let avg = 0.25
                            * (t.at(i, j, k - 1)
                                + t.at(i, j, k)
                                + t.at(i + 1, j, k - 1)
                                + t.at(i + 1, j, k));
                        f.u3[o3(i, j, k)] = scale * prob.rho[2] * avg;
                    }
                }
            }
        }
        f
    }

    fn pick_scheme(&self, prob: &FlowProblem) -> (AdvectionScheme, f64, bool) {
        let pe = if prob.d == 1 && prob.tau > 0.0 {
            Self::peclet_max(prob.v_tilde, prob.nu) * prob.tau
        } else {
            0.0
        };
        match self.cfg.policy {
            AdvectionPolicy::Centered => (AdvectionScheme::Centered, pe, pe > 2.0),
            AdvectionPolicy::Upwind => (AdvectionScheme::Upwind, pe, false),
            AdvectionPolicy::Auto => {
                if pe > 2.0 {
                    (AdvectionScheme::Upwind, pe, true)
                } else {
                    (AdvectionScheme::Centered, pe, false)
                }
            }
        }
    }

    /// Assembles the three momentum component matrices for the operator
    /// `-c ∂x - νΔ + τ d ṽ·∇`. Boundary faces carry scaled identity rows.
    pub fn assemble_momentum(&self, prob: &FlowProblem, scheme: AdvectionScheme) -> [Csr; 3] {
        let g = &self.grid;
        let (nx, ny, nz) = (g.nx_flow, g.ny(), g.nz());
        let (hx, hy, hz) = (g.hx, g.hy(), g.hz());
        let (ihx2, ihy2, ihz2) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hz * hz));
        let nu = prob.nu;
        let dscale = 2.0 * nu * (ihx2 + ihy2 + ihz2);
        let cx = prob.c / (2.0 * hx);
        let adv_on = prob.d == 1 && prob.tau > 0.0;
        let ta = prob.tau;
        let vt = prob.v_tilde;

        // advection coefficient helper: pushes the stencil of
        // τ·½[v̂⁻(u_P - u_-)/h + v̂⁺(u_+ - u_P)/h] (centered) or donor-cell
        // upwinding; `lo`/`hi` are None at tangential walls (ghost = -u_P).
        let adv = |vm: f64,
                   vp: f64,
                   h: f64,
                   lo: Option<usize>,
                   hi: Option<usize>,
                   diag: &mut f64,
                   row: &mut Vec<(usize, f64)>| {
            match scheme {
                AdvectionScheme::Centered => {
                    match lo {
                        Some(l) => row.push((l, -ta * 0.5 * vm / h)),
                        None => *diag += ta * 0.5 * vm / h, // ghost = -u
                    }
                    *diag += ta * 0.5 * vm / h;
                    match hi {
                        Some(u) => row.push((u, ta * 0.5 * vp / h)),
                        None => *diag += ta * 0.5 * vp / h,
                    }
                    *diag -= ta * 0.5 * vp / h;
                }
                AdvectionScheme::Upwind => {
                    let vb = 0.5 * (vm + vp);
                    if vb > 0.0 {
                        *diag += ta * vb / h;
                        match lo {
                            Some(l) => row.push((l, -ta * vb / h)),
                            None => *diag += ta * vb / h,
                        }
                    } else {
                        *diag -= ta * vb / h;
                        match hi {
                            Some(u) => row.push((u, ta * vb / h)),
                            None => *diag += ta * vb / h,
                        }
                    }
                }
            }
        };

        // ---- component 1: x-nodes × cross cells ----
        let n1 = (nx + 1) * ny * nz;
        let i1 = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let mut rows1 = Vec::with_capacity(n1);
        for i in 0..=nx {
            for j in 0..ny {
                for k in 0..nz {
                    if i == 0 || i == nx {
                        rows1.push(vec![(i1(i, j, k), dscale)]);
                        continue;
                    }
                    let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
                    let mut diag = 2.0 * nu * ihx2;
                    row.push((i1(i - 1, j, k), -nu * ihx2 + cx));
                    row.push((i1(i + 1, j, k), -nu * ihx2 - cx));
                    for (cond, jj, kk, c2) in [
                        (j > 0, j.wrapping_sub(1), k, ihy2),
                        (j + 1 < ny, j + 1, k, ihy2),
                        (k > 0, j, k.wrapping_sub(1), ihz2),
                        (k + 1 < nz, j, k + 1, ihz2),
                    ] {
                        if cond {
                            row.push((i1(i, jj, kk), -nu * c2));
                            diag += nu * c2;
                        } else {
                            diag += 2.0 * nu * c2; // ghost = -u
                        }
                    }
                    if adv_on {
                        let [v1m, v1p, v2m, v2p, v3m, v3p] =
                            staggered_velocity_at_scalar(vt, i, j, k);
                        adv(
                            v1m,
                            v1p,
                            hx,
                            Some(i1(i - 1, j, k)),
                            Some(i1(i + 1, j, k)),
                            &mut diag,
                            &mut row,
                        );
                        adv(
                            v2m,
                            v2p,
                            hy,
                            (j > 0).then(|| i1(i, j - 1, k)),
                            (j + 1 < ny).then(|| i1(i, j + 1, k)),
                            &mut diag,
                            &mut row,
                        );
                        adv(
                            v3m,
                            v3p,
                            hz,
                            (k > 0).then(|| i1(i, j, k - 1)),
                            (k + 1 < nz).then(|| i1(i, j, k + 1)),
                            &mut diag,
                            &mut row,
                        );
                    }
                    row.push((i1(i, j, k), diag));
                    rows1.push(row);
                }
            }
        }

        // ---- component 2: x-cells × y-nodes × z-cells ----
        let n2 = nx * (ny + 1) * nz;
        let i2 = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * nz + k;
        let mut rows2 = Vec::with_capacity(n2);
        for i in 0..nx {
            for j in 0..=ny {
                for k in 0..nz {
                    if j == 0 || j == ny {
                        rows2.push(vec![(i2(i, j, k), dscale)]);
                        continue;
                    }
                    let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
                    let mut diag = 2.0 * nu * ihy2;
                    row.push((i2(i, j - 1, k), -nu * ihy2));
                    row.push((i2(i, j + 1, k), -nu * ihy2));
                    // x-direction: tangential at the truncation planes
                    let mut cx_diag = 0.0;
                    if i > 0 {
                        row.push((i2(i - 1, j, k), -nu * ihx2 + cx));
                        diag += nu * ihx2;
                    } else {
                        diag += 2.0 * nu * ihx2;
                        cx_diag -= cx; // ghost = -u feeds the transport term
                    }
                    if i + 1 < nx {
                        row.push((i2(i + 1, j, k), -nu * ihx2 - cx));
                        diag += nu * ihx2;
                    } else {
                        diag += 2.0 * nu * ihx2;
                        cx_diag += cx;
                    }
                    diag += cx_diag;
                    for (cond, kk, c2) in
                        [(k > 0, k.wrapping_sub(1), ihz2), (k + 1 < nz, k + 1, ihz2)]
                    {
                        if cond {
                            row.push((i2(i, j, kk), -nu * c2));
                            diag += nu * c2;
                        } else {
                            diag += 2.0 * nu * c2;
                        }
                    }
                    if adv_on {
                        let v1m = 0.5 * (vt.u1[vt.i1(i, j - 1, k)] + vt.u1[vt.i1(i, j, k)]);
                        let v1p =
                            0.5 * (vt.u1[vt.i1(i + 1, j - 1, k)] + vt.u1[vt.i1(i + 1, j, k)]);
                        let v2m = 0.5 * (vt.u2[vt.i2(i, j - 1, k)] + vt.u2[vt.i2(i, j, k)]);
                        let v2p = 0.5 * (vt.u2[vt.i2(i, j, k)] + vt.u2[vt.i2(i, j + 1, k)]);
                        let v3m = 0.5 * (vt.u3[vt.i3(i, j - 1, k)] + vt.u3[vt.i3(i, j, k)]);
                        let v3p =
                            0.5 * (vt.u3[vt.i3(i, j - 1, k + 1)] + vt.u3[vt.i3(i, j, k + 1)]);
                        adv(
                            v1m,
                            v1p,
                            hx,
                            (i > 0).then(|| i2(i - 1, j, k)),
                            (i + 1 < nx).then(|| i2(i + 1, j, k)),
                            &mut diag,
                            &mut row,
                        );
                        adv(
                            v2m,
                            v2p,
                            hy,
                            Some(i2(i, j - 1, k)),
                            Some(i2(i, j + 1, k)),
                            &mut diag,
                            &mut row,
                        );
                        adv(
                            v3m,
                            v3p,
                            hz,
                            (k > 0).then(|| i2(i, j, k - 1)),
                            (k + 1 < nz).then(|| i2(i, j, k + 1)),
                            &mut diag,
                            &mut row,
                        );
                    }
                    row.push((i2(i, j, k), diag));
                    rows2.push(row);
                }
            }
        }

        // ---- component 3: x-cells × y-cells × z-nodes ----
        let n3 = nx * ny * (nz + 1);
        let i3 = |i: usize, j: usize, k: usize| (i * ny + j) * (nz + 1) + k;
        let mut rows3 = Vec::with_capacity(n3);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..=nz {
                    if k == 0 || k == nz {
                        rows3.push(vec![(i3(i, j, k), dscale)]);
                        continue;
                    }
                    let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
                    let mut diag = 2.0 * nu * ihz2;
                    row.push((i3(i, j, k - 1), -nu * ihz2));
                    row.push((i3(i, j, k + 1), -nu * ihz2));
                    let mut cx_diag = 0.0;
                    if i > 0 {
                        row.push((i3(i - 1, j, k), -nu * ihx2 + cx));
                        diag += nu * ihx2;
                    } else {
                        diag += 2.0 * nu * ihx2;
                        cx_diag -= cx;
                    }
                    if i + 1 < nx {
                        row.push((i3(i + 1, j, k), -nu * ihx2 - cx));
                        diag += nu * ihx2;
                    } else {
                        diag += 2.0 * nu * ihx2;
                        cx_diag += cx;
                    }
                    diag += cx_diag;
                    for (cond, jj, c2) in
                        [(j > 0, j.wrapping_sub(1), ihy2), (j + 1 < ny, j + 1, ihy2)]
                    {
                        if cond {
                            row.push((i3(i, jj, k), -nu * c2));
                            diag += nu * c2;
                        } else {
                            diag += 2.0 * nu * c2;
                        }
                    }
                    if adv_on {
                        let v1m = 0.5 * (vt.u1[vt.i1(i, j, k - 1)] + vt.u1[vt.i1(i, j, k)]);
                        let v1p =
                            0.5 * (vt.u1[vt.i1(i + 1, j, k - 1)] + vt.u1[vt.i1(i + 1, j, k)]);
                        let v2m = 0.5 * (vt.u2[vt.i2(i, j, k - 1)] + vt.u2[vt.i2(i, j, k)]);
                        let v2p =
                            0.5 * (vt.u2[vt.i2(i, j + 1, k - 1)] + vt.u2[vt.i2(i, j + 1, k)]);
                        let v3m = 0.5 * (vt.u3[vt.i3(i, j, k - 1)] + vt.u3[vt.i3(i, j, k)]);
                        let v3p = 0.5 * (vt.u3[vt.i3(i, j, k)] + vt.u3[vt.i3(i, j, k + 1)]);
                        adv(
                            v1m,
                            v1p,
                            hx,
                            (i > 0).then(|| i3(i - 1, j, k)),
                            (i + 1 < nx).then(|| i3(i + 1, j, k)),
                            &mut diag,
                            &mut row,
                        );
                        adv(
                            v2m,
                            v2p,
                            hy,
                            (j > 0).then(|| i3(i, j - 1, k)),
                            (j + 1 < ny).then(|| i3(i, j + 1, k)),
                            &mut diag,
                            &mut row,
                        );
                        adv(
                            v3m,
                            v3p,
                            hz,
                            Some(i3(i, j, k - 1)),
                            Some(i3(i, j, k + 1)),
                            &mut diag,
                            &mut row,
                        );
                    }
                    row.push((i3(i, j, k), diag));
                    rows3.push(row);
                }
            }
        }

        [
            Csr::from_rows(n1, rows1),
            Csr::from_rows(n2, rows2),
            Csr::from_rows(n3, rows3),
        ]
    }

    /// Solves the flow problem. `warm` provides the previous `(u, p)`.
    pub fn solve(
        &self,
        prob: &FlowProblem,
        warm: Option<(&VectorField, &ScalarField)>,
    ) -> Result<FlowSolution> {
        let forcing = self.build_forcing(prob);
        self.solve_with_forcing(prob, &forcing, warm)
    }

    /// Same, with an explicit forcing field (manufactured-solution entry).
    pub fn solve_with_forcing(
        &self,
        prob: &FlowProblem,
        forcing: &VectorField,
        warm: Option<(&VectorField, &ScalarField)>,
    ) -> Result<FlowSolution> {
        let g = &self.grid;
        let (scheme, peclet, warning) = self.pick_scheme(prob);

        let mut u = match warm {
            Some((wu, _)) => {
                let mut u = wu.clone();
                u.enforce_normal_bc();
                u
            }
            None => VectorField::zeros_on_flow(g),
        };
        let mut p = match warm {
            Some((_, wp)) => wp.data.clone(),
            None => vec![0.0; g.nx_flow * g.ny() * g.nz()],
        };

        let f_norm = forcing.norm_l2_sq().sqrt();
        if f_norm == 0.0 && u.max_abs() == 0.0 {
            // zero forcing, homogeneous BCs: the unique solution is u = 0
            let p_field = self.cell_scalar(vec![0.0; p.len()]);
            return Ok(FlowSolution {
                u,
                p: p_field,
                stats: FlowStats {
                    residual: 0.0,
                    div_max_scaled: 0.0,
                    outer_iterations: 0,
                    momentum_iterations: 0,
                    scheme_used: scheme,
                    peclet_max: peclet,
                    advection_warning: warning,
                },
            });
        }

        let mats = self.assemble_momentum(prob, scheme);
        let precs = [
            Ilu0::new(&mats[0], 0.0),
            Ilu0::new(&mats[1], 0.0),
            Ilu0::new(&mats[2], 0.0),
        ];
        let scale = f_norm.max(1e-300);

        let mut rel = f64::INFINITY;
        let mut outer = 0;
        let mut krylov_total = 0;
        let mut phi = vec![0.0; p.len()];
        let mut stall = 0usize;
        while outer < self.cfg.max_outer {
            outer += 1;
            let inner_tol = (0.02 * rel).clamp(1e-13, 1e-4).min(self.cfg.rel_tol);
            // momentum sweeps with current pressure
            let gp = self.poisson.gradient(&p);
            for (m, (mat, prec)) in mats.iter().zip(&precs).enumerate() {
                let (rhs, x): (Vec<f64>, &mut Vec<f64>) = match m {
                    0 => (
                        forcing
                            .u1
                            .iter()
                            .zip(&gp.u1)
                            .map(|(f, gpv)| f - gpv)
                            .collect(),
                        &mut u.u1,
                    ),
                    1 => (
                        forcing
                            .u2
                            .iter()
                            .zip(&gp.u2)
                            .map(|(f, gpv)| f - gpv)
                            .collect(),
                        &mut u.u2,
                    ),
                    _ => (
                        forcing
                            .u3
                            .iter()
                            .zip(&gp.u3)
                            .map(|(f, gpv)| f - gpv)
                            .collect(),
                        &mut u.u3,
                    ),
                };
                let stats = bicgstab(mat, Some(prec), &rhs, x, inner_tol, 100_000);
                krylov_total += stats.iterations;
                if !stats.converged {
                    return Err(Error::SolverNonConvergence {
                        stage: format!("momentum component {}", m + 1),
                        residual: stats.residual,
                        iterations: stats.iterations,
                    });
                }
            }
            // projection
            let div = divergence(&u);
            let mean = div.data.iter().sum::<f64>() / div.data.len() as f64;
            phi.fill(0.0);
            self.poisson
                .solve_neumann(&div.data, &mut phi, (0.05 * inner_tol).clamp(1e-12, 1e-6), 200_000)?;
            let gphi = self.poisson.gradient(&phi);
            u.axpy(-1.0, &gphi);
            u.enforce_normal_bc();
            // Pressure correction with both Schur branches: -ν·div u*
            // handles rough modes, (ν/m_P)·φ restores the channel's slow
            // axial modes, and -c ∂x φ commutes the transport part.
            let beta = prob.nu / self.poiseuille_mean;
            let relax = 0.7;
            let (nx, ny, nz) = (g.nx_flow, g.ny(), g.nz());
            let cidx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        let me = cidx(i, j, k);
                        let dphi_dx = if i == 0 {
                            (phi[cidx(1, j, k)] - phi[me]) / g.hx
                        } else if i + 1 == nx {
                            (phi[me] - phi[cidx(i - 1, j, k)]) / g.hx
                        } else {
                            (phi[cidx(i + 1, j, k)] - phi[cidx(i - 1, j, k)]) / (2.0 * g.hx)
                        };
                        p[me] += relax
                            * (-prob.nu * (div.data[me] - mean) + beta * phi[me]
                                - prob.c * dphi_dx);
                    }
                }
            }
            // true momentum residual with projected velocity
            let new_rel = self.momentum_residual_l2(&mats, &u, &p, forcing) / scale;
            if std::env::var("BQ_FLOW_TRACE").is_ok() {
                eprintln!(
                    "outer {outer}: rel {new_rel:.3e} div* {:.3e} |u| {:.3e} |p| {:.3e}",
                    div.max_abs(),
                    u.max_abs(),
                    p.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                );
            }
            if new_rel <= self.cfg.rel_tol {
                rel = new_rel;
                break;
            }
            if new_rel > 0.95 * rel {
                stall += 1;
                if stall >= 8 {
                    return Err(Error::SolverNonConvergence {
                        stage: "flow outer iteration (stagnated)".into(),
                        residual: new_rel,
                        iterations: outer,
                    });
                }
            } else {
                stall = 0;
            }
            rel = new_rel;
        }
        if rel > self.cfg.rel_tol {
            return Err(Error::SolverNonConvergence {
                stage: "flow outer iteration".into(),
                residual: rel,
                iterations: outer,
            });
        }

        let div = divergence(&u);
        let div_scaled = div.max_abs() / crate::fields::ops::div_scale(&u).max(1e-300);
        let mut p_field = self.cell_scalar(p);
        // zero-mean pressure normalization
        let mean = p_field.data.iter().sum::<f64>() / p_field.data.len() as f64;
        for v in p_field.data.iter_mut() {
            *v -= mean;
        }
        Ok(FlowSolution {
            u,
            p: p_field,
            stats: FlowStats {
                residual: rel,
                div_max_scaled: div_scaled,
                outer_iterations: outer,
                momentum_iterations: krylov_total,
                scheme_used: scheme,
                peclet_max: peclet,
                advection_warning: warning,
            },
        })
    }

    fn cell_scalar(&self, data: Vec<f64>) -> ScalarField {
        let g = &self.grid;
        ScalarField {
            layout: crate::fields::ScalarLayout::XCells,
            nxv: g.nx_flow,
            ny: g.ny(),
            nz: g.nz(),
            x0: -g.big_a + 0.5 * g.hx,
            hx: g.hx,
            hy: g.hy(),
            hz: g.hz(),
            data,
        }
    }

    /// L² norm of the interior momentum residual `f − A u − ∇p`.
    fn momentum_residual_l2(
        &self,
        mats: &[Csr; 3],
        u: &VectorField,
        p: &[f64],
        forcing: &VectorField,
    ) -> f64 {
        let gp = self.poisson.gradient(p);
        let vol = self.grid.hx * self.grid.hy() * self.grid.hz();
        let mut sum = 0.0;
        let mut buf = vec![0.0; mats[0].n.max(mats[1].n).max(mats[2].n)];
        for (m, mat) in mats.iter().enumerate() {
            let (uv, fv, gv, boundary): (&[f64], &[f64], &[f64], Box<dyn Fn(usize) -> bool>) =
                match m {
                    0 => {
                        let (nx, ny, nz) = (u.nx, u.ny, u.nz);
                        (
                            &u.u1,
                            &forcing.u1,
                            &gp.u1,
                            Box::new(move |p: usize| {
                                let i = p / (ny * nz);
                                i == 0 || i == nx
                            }),
                        )
                    }
                    1 => {
                        let (ny, nz) = (u.ny, u.nz);
                        (
                            &u.u2,
                            &forcing.u2,
                            &gp.u2,
                            Box::new(move |p: usize| {
                                let j = (p / nz) % (ny + 1);
                                j == 0 || j == ny
                            }),
                        )
                    }
                    _ => {
                        let nz = u.nz;
                        (
                            &u.u3,
                            &forcing.u3,
                            &gp.u3,
                            Box::new(move |p: usize| {
                                let k = p % (nz + 1);
                                k == 0 || k == nz
                            }),
                        )
                    }
                };
            let au = &mut buf[..mat.n];
            mat.mul_vec(uv, au);
            for idx in 0..mat.n {
                if boundary(idx) {
                    continue;
                }
                let r = fv[idx] - au[idx] - gv[idx];
                sum += r * r * vol;
            }
        }
        sum.sqrt()
    }

    /// Max-norm momentum residual plus scaled divergence norm (diagnostic).
    pub fn flow_residual(&self, prob: &FlowProblem, u: &VectorField, p: &ScalarField) -> f64 {
        let (scheme, _, _) = self.pick_scheme(prob);
        let mats = self.assemble_momentum(prob, scheme);
        let forcing = self.build_forcing(prob);
        let gp = self.poisson.gradient(&p.data);
        let mut max_r = 0.0f64;
        let mut buf: Vec<f64> = Vec::new();
        for (m, mat) in mats.iter().enumerate() {
            buf.resize(mat.n, 0.0);
            let (uv, fv, gv): (&[f64], &[f64], &[f64]) = match m {
                0 => (&u.u1, &forcing.u1, &gp.u1),
                1 => (&u.u2, &forcing.u2, &gp.u2),
                _ => (&u.u3, &forcing.u3, &gp.u3),
            };
            mat.mul_vec(uv, &mut buf);
            let (nx, ny, nz) = (u.nx, u.ny, u.nz);
            for idx in 0..mat.n {
                let on_boundary = match m {
                    0 => {
                        let i = idx / (ny * nz);
                        i == 0 || i == nx
                    }
                    1 => {
                        let j = (idx / nz) % (ny + 1);
                        j == 0 || j == ny
                    }
                    _ => {
                        let k = idx % (nz + 1);
                        k == 0 || k == nz
                    }
                };
                if !on_boundary {
                    max_r = max_r.max((fv[idx] - buf[idx] - gv[idx]).abs());
                }
            }
        }
        let div = divergence(u);
        max_r + div.max_abs()
    }

    /// Relative defect of the discrete energy identity
    /// `ν‖∇u‖² = τ ∫ T̃ ρ⃗·u` for a converged solve.
    pub fn energy_residual(&self, prob: &FlowProblem, u: &VectorField) -> f64 {
        let forcing = self.build_forcing(prob);
        let lhs = prob.nu * u.grad_norm_sq();
        let rhs = forcing.dot(u);
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-14)
    }
}

/// Mean over the cross-section of the solution of `-Δ⊥ P = 1`, `P = 0` on
/// the walls, discretized cell-centered with the no-slip mirror closure used
/// by the momentum stencils.
fn poiseuille_mean(grid: &ChannelGrid) -> f64 {
    let (ny, nz) = (grid.ny(), grid.nz());
    let (hy, hz) = (grid.hy(), grid.hz());
    let (ihy2, ihz2) = (1.0 / (hy * hy), 1.0 / (hz * hz));
    let n = ny * nz;
    let idx = |j: usize, k: usize| j * nz + k;
    let mut rows = Vec::with_capacity(n);
    for j in 0..ny {
        for k in 0..nz {
            let mut row = Vec::with_capacity(5);
            let mut diag = 0.0;
            if j > 0 {
                row.push((idx(j - 1, k), -ihy2));
                diag += ihy2;
            } else {
                diag += 3.0 * ihy2; // ghost = -P
            }
            if j + 1 < ny {
                row.push((idx(j + 1, k), -ihy2));
                diag += ihy2;
            } else {
                diag += 3.0 * ihy2;
            }
            if k > 0 {
                row.push((idx(j, k - 1), -ihz2));
                diag += ihz2;
            } else {
                diag += 3.0 * ihz2;
            }
            if k + 1 < nz {
                row.push((idx(j, k + 1), -ihz2));
                diag += ihz2;
            } else {
                diag += 3.0 * ihz2;
            }
            row.push((idx(j, k), diag));
            rows.push(row);
        }
    }
    let a = Csr::from_rows(n, rows);
    let prec = Ilu0::new(&a, 0.0);
    let b = vec![1.0; n];
    let mut x = vec![0.0; n];
    let stats = crate::linalg::pcg(&a, Some(&prec), &b, &mut x, 1e-12, 100_000, false);
    debug_assert!(stats.converged);
    x.iter().sum::<f64>() / n as f64
}

/// Force potential `q(x,x̃) = ρ⃗·e₁ ∫₀ˣ ⨍T̃ + ρ⃗·(0,x̃-origin) ⨍T̃(x,·)`,
/// on flow x-nodes. Only diagnostics consume it.
pub fn potential_q(
    t_tilde: &ScalarField,
    rho: [f64; 3],
    cross: &CrossSection,
    origin_centroid: bool,
) -> ScalarField {
    let (ny, nz) = (t_tilde.ny, t_tilde.nz);
    let mut means = vec![0.0; t_tilde.nxv];
    for (i, m) in means.iter_mut().enumerate() {
        *m = t_tilde.cross_mean(i, &cross.weights, cross.area);
    }
    // cumulative trapezoid of ⨍T̃ from the x = 0 node
    let mut cum = vec![0.0; t_tilde.nxv];
    for i in 1..t_tilde.nxv {
        cum[i] = cum[i - 1] + 0.5 * (means[i - 1] + means[i]) * t_tilde.hx;
    }
    // shift the reference so the integral starts at x = 0
    let zero_node = (-t_tilde.x0 / t_tilde.hx).round() as usize;
    let base = cum[zero_node.min(t_tilde.nxv - 1)];
    let (oy, oz) = if origin_centroid {
        (cross.centroid[0], cross.centroid[1])
    } else {
        (0.0, 0.0)
    };
    let mut q = t_tilde.clone();
    for i in 0..t_tilde.nxv {
        for j in 0..ny {
            for k in 0..nz {
                let c = cross.cell_center(j, k);
                let transverse = rho[1] * (c[0] - oy) + rho[2] * (c[1] - oz);
                q.set(
                    i,
                    j,
                    k,
                    rho[0] * (cum[i] - base) + transverse * means[i],
                );
            }
        }
    }
    q
}

/// `‖T̃ρ⃗ − ∇q‖_{L²}` with component-wise staggered evaluation (x-part at
/// midcells, transverse parts at interior cross faces).
pub fn force_minus_gradient_norm(
    t_tilde: &ScalarField,
    q: &ScalarField,
    rho: [f64; 3],
) -> f64 {
    let (ny, nz) = (t_tilde.ny, t_tilde.nz);
    let vol = t_tilde.hx * t_tilde.hy * t_tilde.hz;
    let mut sum = 0.0;
    // x component at axial midcells
    for i in 0..t_tilde.nxv - 1 {
        for j in 0..ny {
            for k in 0..nz {
                let tmid = 0.5 * (t_tilde.at(i, j, k) + t_tilde.at(i + 1, j, k));
                let dq = (q.at(i + 1, j, k) - q.at(i, j, k)) / q.hx;
                let r = rho[0] * tmid - dq;
                sum += r * r * vol;
            }
        }
    }
    // y component at interior y-faces
    for i in 0..t_tilde.nxv {
        let wx = t_tilde.x_weight(i) * t_tilde.hy * t_tilde.hz;
        for j in 0..ny - 1 {
            for k in 0..nz {
                let tmid = 0.5 * (t_tilde.at(i, j, k) + t_tilde.at(i, j + 1, k));
                let dq = (q.at(i, j + 1, k) - q.at(i, j, k)) / q.hy;
                let r = rho[1] * tmid - dq;
                sum += r * r * wx;
            }
        }
        for j in 0..ny {
            for k in 0..nz - 1 {
                let tmid = 0.5 * (t_tilde.at(i, j, k) + t_tilde.at(i, j, k + 1));
                let dq = (q.at(i, j, k + 1) - q.at(i, j, k)) / q.hz;
                let r = rho[2] * tmid - dq;
                sum += r * r * wx;
            }
        }
    }
    sum.sqrt()
}
