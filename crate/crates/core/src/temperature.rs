//! The linear reaction-advection-diffusion boundary-value solve on the
//! temperature window, plus the planar (1D) closed form used as oracle and
//! initial state.
//!
//! The equation is `-c T_x - ΔT + τ v·∇T = τ f(Z)` with `T = 1` at `x = -a`,
//! `T = 0` at `x = a`, and homogeneous Neumann lateral walls. `f` is
//! evaluated at the previous iterate `Z`, so one application is one linear
//! solve.

use crate::error::{Error, Result};
use crate::fields::ops::{staggered_velocity_at_scalar, AdvectionScheme};
use crate::fields::{ChannelGrid, ScalarField, VectorField};
use crate::linalg::{bicgstab, Csr, Ilu0, SolveStats};
use crate::reaction::NonlinearitySpec;
use std::sync::Arc;

/// One linear temperature solve: inputs of the fixed-point map.
pub struct TemperatureProblem<'a> {
    pub c: f64,
    /// Advecting velocity on the temperature extent.
    pub v: &'a VectorField,
    /// Previous temperature iterate (reaction source argument).
    pub z: &'a ScalarField,
    pub tau: f64,
    pub reaction: NonlinearitySpec,
    pub scheme: AdvectionScheme,
}

pub struct TempSolver {
    pub grid: Arc<ChannelGrid>,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl TempSolver {
    pub fn new(grid: Arc<ChannelGrid>) -> Self {
        TempSolver {
            grid,
            rel_tol: 1e-12,
            max_iter: 200_000,
        }
    }

    /// Solves the linear system; `warm` seeds the Krylov iteration.
    pub fn solve(
        &self,
        prob: &TemperatureProblem,
        warm: Option<&ScalarField>,
    ) -> Result<(ScalarField, SolveStats)> {
        let g = &self.grid;
        let (ny, nz) = (g.ny(), g.nz());
        let nxt = g.nx_temp;
        if prob.v.nx != nxt || prob.z.nxv != nxt + 1 {
            return Err(Error::GridMismatch(
                "temperature problem fields must live on the temperature extent".into(),
            ));
        }
        if !(0.0..=1.0).contains(&prob.tau) {
            return Err(Error::Config(format!("tau must be in [0,1], got {}", prob.tau)));
        }
        let (hx, hy, hz) = (g.hx, g.hy(), g.hz());
        let (ihx2, ihy2, ihz2) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hz * hz));
        let n = (nxt + 1) * ny * nz;
        let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let dscale = 2.0 * (ihx2 + ihy2 + ihz2);

        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut rhs = vec![0.0; n];
        for i in 0..=nxt {
            for j in 0..ny {
                for k in 0..nz {
                    let me = idx(i, j, k);
                    if i == 0 || i == nxt {
                        rows.push(vec![(me, dscale)]);
                        rhs[me] = if i == 0 { dscale } else { 0.0 };
                        continue;
                    }
                    let mut row: Vec<(usize, f64)> = Vec::with_capacity(7);
                    let mut diag = 2.0 * ihx2;
                    // -ΔT with Neumann mirrors laterally
                    row.push((idx(i - 1, j, k), -ihx2));
                    row.push((idx(i + 1, j, k), -ihx2));
                    if j > 0 {
                        row.push((idx(i, j - 1, k), -ihy2));
                        diag += ihy2;
                    }
                    if j + 1 < ny {
                        row.push((idx(i, j + 1, k), -ihy2));
                        diag += ihy2;
                    }
                    if k > 0 {
                        row.push((idx(i, j, k - 1), -ihz2));
                        diag += ihz2;
                    }
                    if k + 1 < nz {
                        row.push((idx(i, j, k + 1), -ihz2));
                        diag += ihz2;
                    }
                    // -c T_x, centered
                    let cx = prob.c / (2.0 * hx);
                    row.push((idx(i + 1, j, k), -cx));
                    row.push((idx(i - 1, j, k), cx));
                    // τ v·∇T
                    if prob.tau > 0.0 {
                        let [v1m, v1p, v2m, v2p, v3m, v3p] =
                            staggered_velocity_at_scalar(prob.v, i, j, k);
                        let t = prob.tau;
                        match prob.scheme {
                            AdvectionScheme::Centered => {
                                // x
                                row.push((idx(i - 1, j, k), -t * 0.5 * v1m / hx));
                                row.push((idx(i + 1, j, k), t * 0.5 * v1p / hx));
                                diag += t * 0.5 * (v1m - v1p) / hx;
                                // y (mirror ghosts drop the wall terms)
                                if j > 0 {
                                    row.push((idx(i, j - 1, k), -t * 0.5 * v2m / hy));
                                    diag += t * 0.5 * v2m / hy;
                                }
                                if j + 1 < ny {
                                    row.push((idx(i, j + 1, k), t * 0.5 * v2p / hy));
                                    diag -= t * 0.5 * v2p / hy;
                                }
                                if k > 0 {
                                    row.push((idx(i, j, k - 1), -t * 0.5 * v3m / hz));
                                    diag += t * 0.5 * v3m / hz;
                                }
                                if k + 1 < nz {
                                    row.push((idx(i, j, k + 1), t * 0.5 * v3p / hz));
                                    diag -= t * 0.5 * v3p / hz;
                                }
                            }
                            AdvectionScheme::Upwind => {
                                let up =
                                    |vm: f64,
                                     vp: f64,
                                     h: f64,
                                     lo: Option<usize>,
                                     hi: Option<usize>,
                                     diag: &mut f64,
                                     row: &mut Vec<(usize, f64)>| {
                                        let vb = 0.5 * (vm + vp);
                                        if vb > 0.0 {
                                            *diag += t * vb / h;
                                            if let Some(l) = lo {
                                                row.push((l, -t * vb / h));
                                            } else {
                                                *diag -= t * vb / h; // mirror ghost
                                            }
                                        } else {
                                            *diag -= t * vb / h;
                                            if let Some(u) = hi {
                                                row.push((u, t * vb / h));
                                            } else {
                                                *diag += t * vb / h;
                                            }
                                        }
                                    };
                                up(
                                    v1m,
                                    v1p,
                                    hx,
                                    Some(idx(i - 1, j, k)),
                                    Some(idx(i + 1, j, k)),
                                    &mut diag,
                                    &mut row,
                                );
                                up(
                                    v2m,
                                    v2p,
                                    hy,
                                    (j > 0).then(|| idx(i, j - 1, k)),
                                    (j + 1 < ny).then(|| idx(i, j + 1, k)),
                                    &mut diag,
                                    &mut row,
                                );
                                up(
                                    v3m,
                                    v3p,
                                    hz,
                                    (k > 0).then(|| idx(i, j, k - 1)),
                                    (k + 1 < nz).then(|| idx(i, j, k + 1)),
                                    &mut diag,
                                    &mut row,
                                );
                            }
                        }
                    }
                    row.push((me, diag));
                    rows.push(row);
                    rhs[me] = prob.tau * prob.reaction.value(prob.z.at(i, j, k));
                }
            }
        }
        let a = Csr::from_rows(n, rows);
        let prec = Ilu0::new(&a, 0.0);
        let mut t = ScalarField::nodes_on_temp(g);
        if let Some(w) = warm {
            t.data.copy_from_slice(&w.data);
        } else {
            // linear profile as a generic start
            let aa = g.a;
            t.fill_from(|x, _, _| (aa - x) / (2.0 * aa));
        }
        let stats = bicgstab(&a, Some(&prec), &rhs, &mut t.data, self.rel_tol, self.max_iter);
        if !stats.converged {
            return Err(Error::SolverNonConvergence {
                stage: "temperature".into(),
                residual: stats.residual,
                iterations: stats.iterations,
            });
        }
        Ok((t, stats))
    }
}

/// Grid max of `T` over `[0,a] × Ω` minus `θ₀`.
pub fn normalization_gap(t: &ScalarField, grid: &ChannelGrid, theta0: f64) -> f64 {
    t.max_over_planes(grid.center_node(), grid.nx_temp) - theta0
}

/// Closed-form planar profile `T(x) = (e^{-cx} - e^{-ca})/(e^{ca} - e^{-ca})`
/// (solves `-cT' - T'' = 0`, `T(-a) = 1`, `T(a) = 0`), computed in scaled
/// exponentials so large `|c|a` cannot overflow. `c → 0` reduces to the
/// linear profile `(a - x)/(2a)`.
pub fn planar_profile(c: f64, a: f64, x: f64) -> f64 {
    if (c * a).abs() < 1e-9 {
        return (a - x) / (2.0 * a);
    }
    if c > 0.0 {
        // multiply through by e^{-ca}: all exponents ≤ 0
        let num = (-c * (x + a)).exp() - (-2.0 * c * a).exp();
        let den = 1.0 - (-2.0 * c * a).exp();
        num / den
    } else {
        // multiply through by e^{ca}
        let num = (c * (a - x)).exp() - 1.0;
        let den = (2.0 * c * a).exp() - 1.0;
        num / den
    }
}

/// Root of `max_{[0,a]} T = T(0) = θ₀` for the planar profile, by bisection
/// on the closed form. (Analytically `c = ln((1-θ₀)/θ₀)/a`.)
pub fn planar_speed_root(a: f64, theta0: f64) -> f64 {
    assert!(theta0 > 0.0 && theta0 < 1.0);
    let g = |c: f64| planar_profile(c, a, 0.0) - theta0;
    // g is decreasing in c; bracket a sign change
    let mut lo = -10.0 / a.max(1e-3);
    let mut hi = 10.0 / a.max(1e-3);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Discrete planar profile: the tridiagonal solve of the 1D centered scheme
/// on `nx` cells. This is exactly what the 3D solver produces at `τ = 0`
/// with laterally uniform data.
pub fn discrete_planar_profile(c: f64, a: f64, nx: usize) -> Vec<f64> {
    let h = 2.0 * a / nx as f64;
    let n = nx + 1;
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 1.0;
    rhs[0] = 1.0;
    diag[n - 1] = 1.0;
    rhs[n - 1] = 0.0;
    let ih2 = 1.0 / (h * h);
    let cx = c / (2.0 * h);
    for i in 1..n - 1 {
        sub[i] = -ih2 + cx;
        diag[i] = 2.0 * ih2;
        sup[i] = -ih2 - cx;
    }
    // Thomas
    for i in 1..n {
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut t = vec![0.0; n];
    t[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        t[i] = (rhs[i] - sup[i] * t[i + 1]) / diag[i];
    }
    t
}

/// Root of the *discrete* planar normalization `max_{[0,a]} T_h = θ₀`; this
/// is the exact fixed-point speed of the 3D solver at `τ = 0` and serves as
/// the initial `c`.
pub fn discrete_planar_speed(a: f64, nx: usize, theta0: f64) -> f64 {
    let mid = nx / 2;
    let g = |c: f64| {
        let t = discrete_planar_profile(c, a, nx);
        t[mid..].iter().cloned().fold(f64::NEG_INFINITY, f64::max) - theta0
    };
    let mut lo = -10.0 / a.max(1e-3);
    let mut hi = 10.0 / a.max(1e-3);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid_c = 0.5 * (lo + hi);
        if g(mid_c) > 0.0 {
            lo = mid_c;
        } else {
            hi = mid_c;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
