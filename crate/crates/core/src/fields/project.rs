//! Discrete Helmholtz projection on the MAC grid.
//!
//! Solves the cell-centered Neumann-Poisson problem `Δq = div g` (right side
//! made mean-zero for compatibility, `q` fixed by zero mean) and returns
//! `g − ∇q`, which is discretely divergence-free to solver tolerance. The
//! Poisson matrix and its ILU(0) factors are cached per extent, so repeated
//! projections on one grid reuse the setup.

use super::grid::ChannelGrid;
use super::ops::divergence;
use super::scalar::{ScalarField, ScalarLayout};
use super::vector::VectorField;
use crate::error::{Error, Result};
use crate::linalg::{pcg, remove_mean, Csr, Ilu0, SolveStats};

#[derive(Debug)]
pub struct PoissonContext {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub x0: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    matrix: Csr,
    prec: Ilu0,
}

impl PoissonContext {
    pub fn on_flow(grid: &ChannelGrid) -> Self {
        Self::new(
            grid.nx_flow,
            grid.ny(),
            grid.nz(),
            -grid.big_a,
            grid.hx,
            grid.hy(),
            grid.hz(),
        )
    }

    pub fn on_temp(grid: &ChannelGrid) -> Self {
        Self::new(
            grid.nx_temp,
            grid.ny(),
            grid.nz(),
            -grid.a,
            grid.hx,
            grid.hy(),
            grid.hz(),
        )
    }

    /// Context matching the extent of an existing MAC field.
    pub fn for_field(v: &VectorField) -> Self {
        Self::new(v.nx, v.ny, v.nz, v.x0, v.hx, v.hy, v.hz)
    }

    fn new(nx: usize, ny: usize, nz: usize, x0: f64, hx: f64, hy: f64, hz: f64) -> Self {
        let n = nx * ny * nz;
        let (chx, chy, chz) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hz * hz));
        let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let mut rows = Vec::with_capacity(n);
        // -Δ with homogeneous Neumann closures: couplings only across
        // interior faces.
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let mut diag = 0.0;
                    let mut row = Vec::with_capacity(7);
                    if i > 0 {
                        row.push((idx(i - 1, j, k), -chx));
                        diag += chx;
                    }
                    if i + 1 < nx {
                        row.push((idx(i + 1, j, k), -chx));
                        diag += chx;
                    }
                    if j > 0 {
                        row.push((idx(i, j - 1, k), -chy));
                        diag += chy;
                    }
                    if j + 1 < ny {
                        row.push((idx(i, j + 1, k), -chy));
                        diag += chy;
                    }
                    if k > 0 {
                        row.push((idx(i, j, k - 1), -chz));
                        diag += chz;
                    }
                    if k + 1 < nz {
                        row.push((idx(i, j, k + 1), -chz));
                        diag += chz;
                    }
                    row.push((idx(i, j, k), diag));
                    rows.push(row);
                }
            }
        }
        let matrix = Csr::from_rows(n, rows);
        // A noticeable shift keeps the ILU(0) factors of the singular
        // Neumann operator positive definite.
        let prec = Ilu0::new(&matrix, 2e-4 * (chx + chy + chz));
        PoissonContext {
            nx,
            ny,
            nz,
            x0,
            hx,
            hy,
            hz,
            matrix,
            prec,
        }
    }

    /// Solves `Δq = rhs` (Neumann, `q` mean-zero); `rhs` is mean-shifted for
    /// compatibility. `q` holds the initial guess on entry.
    pub fn solve_neumann(
        &self,
        rhs: &[f64],
        q: &mut [f64],
        rel_tol: f64,
        max_iter: usize,
    ) -> Result<SolveStats> {
        // -Δ q = -rhs
        let mut b: Vec<f64> = rhs.iter().map(|v| -v).collect();
        remove_mean(&mut b);
        let stats = pcg(&self.matrix, Some(&self.prec), &b, q, rel_tol, max_iter, true);
        if !stats.converged {
            return Err(Error::SolverNonConvergence {
                stage: "neumann-poisson".into(),
                residual: stats.residual,
                iterations: stats.iterations,
            });
        }
        Ok(stats)
    }

    /// Face gradient of a cell-centered array; boundary faces get zero
    /// (the Neumann closure).
    pub fn gradient(&self, q: &[f64]) -> VectorField {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let mut g = VectorField {
            nx,
            ny,
            nz,
            x0: self.x0,
            hx: self.hx,
            hy: self.hy,
            hz: self.hz,
            u1: vec![0.0; (nx + 1) * ny * nz],
            u2: vec![0.0; nx * (ny + 1) * nz],
            u3: vec![0.0; nx * ny * (nz + 1)],
        };
        for i in 1..nx {
            for j in 0..ny {
                for k in 0..nz {
                    g.u1[(i * ny + j) * nz + k] =
                        (q[idx(i, j, k)] - q[idx(i - 1, j, k)]) / self.hx;
                }
            }
        }
        for i in 0..nx {
            for j in 1..ny {
                for k in 0..nz {
                    g.u2[(i * (ny + 1) + j) * nz + k] =
                        (q[idx(i, j, k)] - q[idx(i, j - 1, k)]) / self.hy;
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                for k in 1..nz {
                    g.u3[(i * ny + j) * (nz + 1) + k] =
                        (q[idx(i, j, k)] - q[idx(i, j, k - 1)]) / self.hz;
                }
            }
        }
        g
    }

    /// Helmholtz projection: returns `(Pg, q, stats)` with `Pg = g − ∇q`.
    pub fn project(
        &self,
        g: &VectorField,
        rel_tol: f64,
    ) -> Result<(VectorField, ScalarField, SolveStats)> {
        if g.nx != self.nx || g.ny != self.ny || g.nz != self.nz {
            return Err(Error::GridMismatch(
                "projection context and field extents disagree".into(),
            ));
        }
        let div = divergence(g);
        let mut q = vec![0.0; div.data.len()];
        let stats = self.solve_neumann(&div.data, &mut q, rel_tol, 100_000)?;
        let grad = self.gradient(&q);
        let mut p = g.clone();
        p.axpy(-1.0, &grad);
        let qf = ScalarField {
            layout: ScalarLayout::XCells,
            nxv: self.nx,
            ny: self.ny,
            nz: self.nz,
            x0: self.x0 + 0.5 * self.hx,
            hx: self.hx,
            hy: self.hy,
            hz: self.hz,
            data: q,
        };
        Ok((p, qf, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CrossSection;
    use std::sync::Arc;

    fn grid() -> ChannelGrid {
        let cross = Arc::new(CrossSection::build_rectangle(0.8, 0.6, 6, 5).unwrap());
        ChannelGrid::new(cross, 2.0, 24, 1.0).unwrap()
    }

    #[test]
    fn pure_gradients_project_to_zero() {
        let g = grid();
        let ctx = PoissonContext::on_flow(&g);
        // discrete gradient of a cell-centered x² + y² potential
        let mut pot = vec![0.0; ctx.nx * ctx.ny * ctx.nz];
        for i in 0..ctx.nx {
            let x = ctx.x0 + (i as f64 + 0.5) * ctx.hx;
            for j in 0..ctx.ny {
                let y = (j as f64 + 0.5) * ctx.hy;
                for k in 0..ctx.nz {
                    pot[(i * ctx.ny + j) * ctx.nz + k] = x * x + y * y;
                }
            }
        }
        let gradient = ctx.gradient(&pot);
        let (p, _, _) = ctx.project(&gradient, 1e-12).unwrap();
        let rel = p.max_abs() / gradient.max_abs();
        assert!(rel < 1e-9, "residual field {rel}");
    }

    #[test]
    fn projection_is_idempotent_and_contractive() {
        let g = grid();
        let ctx = PoissonContext::on_flow(&g);
        let mut v = VectorField::zeros_on_flow(&g);
        v.fill_from(
            |x, y, z| (x * 0.8).sin() + y - z * z,
            |x, y, z| x * 0.1 + (y * 3.0).cos() * z,
            |x, y, z| x * y * 0.2 + z,
        );
        let norm0 = v.norm_l2_sq().sqrt();
        let (p1, _, _) = ctx.project(&v, 1e-12).unwrap();
        assert!(p1.norm_l2_sq().sqrt() <= norm0 * (1.0 + 1e-12));
        let (p2, _, _) = ctx.project(&p1, 1e-12).unwrap();
        assert!(p2.max_diff(&p1) <= 1e-9 * norm0.max(1.0));
        // solenoidal fields with zero normal trace are fixed points
        let (p3, _, _) = ctx.project(&p1, 1e-12).unwrap();
        assert!(p3.max_diff(&p1) <= 1e-9);
    }

    #[test]
    fn projection_is_orthogonal() {
        let g = grid();
        let ctx = PoissonContext::on_flow(&g);
        let mut v = VectorField::zeros_on_flow(&g);
        v.fill_from(
            |x, y, z| x + (y + z).sin(),
            |x, y, _| (x * y).cos(),
            |_, y, z| y * z,
        );
        v.enforce_normal_bc();
        let (p, q, _) = ctx.project(&v, 1e-12).unwrap();
        let grad = ctx.gradient(&q.data);
        // ⟨Pg, g − Pg⟩ = ⟨Pg, ∇q⟩ ≈ 0
        let ip = p.dot(&grad).abs();
        assert!(ip <= 1e-9 * v.norm_l2_sq(), "inner product {ip}");
        // divergence of the projection vanishes
        let d = divergence(&p);
        assert!(d.max_abs() <= 1e-10 * super::super::ops::div_scale(&p).max(1e-300));
    }
}
