//! Scalar grid functions.

use super::grid::ChannelGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarLayout {
    /// Values at x-nodes × cross-cells: `(nx+1) · ny · nz` entries.
    XNodes,
    /// Values at cell centers: `nx · ny · nz` entries.
    XCells,
}

/// A scalar grid function. `x0` is the x coordinate of the first value
/// location (a node for `XNodes`, a cell center for `XCells`).
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub layout: ScalarLayout,
    /// Number of x value-locations.
    pub nxv: usize,
    pub ny: usize,
    pub nz: usize,
    pub x0: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn nodes_on_temp(grid: &ChannelGrid) -> Self {
        Self::with_layout(
            ScalarLayout::XNodes,
            grid.nx_temp + 1,
            -grid.a,
            grid,
        )
    }

    pub fn nodes_on_flow(grid: &ChannelGrid) -> Self {
        Self::with_layout(
            ScalarLayout::XNodes,
            grid.nx_flow + 1,
            -grid.big_a,
            grid,
        )
    }

    pub fn cells_on_flow(grid: &ChannelGrid) -> Self {
        Self::with_layout(
            ScalarLayout::XCells,
            grid.nx_flow,
            -grid.big_a + 0.5 * grid.hx,
            grid,
        )
    }

    pub fn cells_on_temp(grid: &ChannelGrid) -> Self {
        Self::with_layout(
            ScalarLayout::XCells,
            grid.nx_temp,
            -grid.a + 0.5 * grid.hx,
            grid,
        )
    }

    fn with_layout(layout: ScalarLayout, nxv: usize, x0: f64, grid: &ChannelGrid) -> Self {
        ScalarField {
            layout,
            nxv,
            ny: grid.ny(),
            nz: grid.nz(),
            x0,
            hx: grid.hx,
            hy: grid.hy(),
            hz: grid.hz(),
            data: vec![0.0; nxv * grid.ny() * grid.nz()],
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let p = self.idx(i, j, k);
        self.data[p] = v;
    }

    /// x coordinate of value-plane `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn fill_from(&mut self, f: impl Fn(f64, f64, f64) -> f64) {
        let (ny, nz) = (self.ny, self.nz);
        for i in 0..self.nxv {
            let x = self.x(i);
            for j in 0..ny {
                let y = (j as f64 + 0.5) * self.hy;
                for k in 0..nz {
                    let z = (k as f64 + 0.5) * self.hz;
                    self.data[(i * ny + j) * nz + k] = f(x, y, z);
                }
            }
        }
    }

    pub fn assert_same_layout(&self, other: &ScalarField) -> Result<()> {
        if self.layout != other.layout
            || self.nxv != other.nxv
            || self.ny != other.ny
            || self.nz != other.nz
            || (self.x0 - other.x0).abs() > 1e-12
        {
            return Err(Error::GridMismatch(format!(
                "scalar fields disagree: ({:?},{},{},{}) vs ({:?},{},{},{})",
                self.layout, self.nxv, self.ny, self.nz, other.layout, other.nxv, other.ny, other.nz
            )));
        }
        Ok(())
    }

    /// Trapezoid weight in x for `XNodes` layouts (hx at interior planes,
    /// hx/2 at the two end planes); plain hx for `XCells`.
    #[inline]
    pub fn x_weight(&self, i: usize) -> f64 {
        match self.layout {
            ScalarLayout::XNodes => {
                if i == 0 || i + 1 == self.nxv {
                    0.5 * self.hx
                } else {
                    self.hx
                }
            }
            ScalarLayout::XCells => self.hx,
        }
    }

    /// ∫ f over the field extent (trapezoid in x, midpoint in the cross).
    pub fn integral(&self) -> f64 {
        let cell = self.hy * self.hz;
        let mut sum = 0.0;
        for i in 0..self.nxv {
            let wx = self.x_weight(i);
            let mut s = 0.0;
            for p in self.plane(i) {
                s += *p;
            }
            sum += wx * s * cell;
        }
        sum
    }

    /// ∫ f² (same quadrature).
    pub fn norm_l2_sq(&self) -> f64 {
        let cell = self.hy * self.hz;
        let mut sum = 0.0;
        for i in 0..self.nxv {
            let wx = self.x_weight(i);
            let mut s = 0.0;
            for p in self.plane(i) {
                s += p * p;
            }
            sum += wx * s * cell;
        }
        sum
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    fn plane(&self, i: usize) -> &[f64] {
        let stride = self.ny * self.nz;
        &self.data[i * stride..(i + 1) * stride]
    }

    /// Area-weighted cross-sectional mean at x plane `i`.
    pub fn cross_mean(&self, i: usize, weights: &[f64], area: f64) -> f64 {
        let mut s = 0.0;
        for (v, w) in self.plane(i).iter().zip(weights) {
            s += v * w;
        }
        s / area
    }

    /// (min, max) over the cross-section at plane `i`.
    pub fn cross_min_max(&self, i: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in self.plane(i) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Maximum over planes `i0 ..= i1`.
    pub fn max_over_planes(&self, i0: usize, i1: usize) -> f64 {
        let mut hi = f64::NEG_INFINITY;
        for i in i0..=i1 {
            let (_, m) = self.cross_min_max(i);
            hi = hi.max(m);
        }
        hi
    }

    /// ‖∇f‖²_{L²} with homogeneous Neumann lateral closure (wall-normal
    /// derivative zero) for `XNodes` layouts: axial differences at midcells,
    /// transverse differences at interior cross faces.
    pub fn grad_norm_sq(&self) -> f64 {
        assert_eq!(self.layout, ScalarLayout::XNodes);
        let (ny, nz) = (self.ny, self.nz);
        let vol = self.hx * self.hy * self.hz;
        let mut sum = 0.0;
        // d/dx at midcells
        for i in 0..self.nxv - 1 {
            for j in 0..ny {
                for k in 0..nz {
                    let d = (self.at(i + 1, j, k) - self.at(i, j, k)) / self.hx;
                    sum += d * d * vol;
                }
            }
        }
        // d/dy at interior y-faces, trapezoid weight in x
        for i in 0..self.nxv {
            let wx = self.x_weight(i) * self.hy * self.hz;
            for j in 0..ny - 1 {
                for k in 0..nz {
                    let d = (self.at(i, j + 1, k) - self.at(i, j, k)) / self.hy;
                    sum += d * d * wx;
                }
            }
            for j in 0..ny {
                for k in 0..nz - 1 {
                    let d = (self.at(i, j, k + 1) - self.at(i, j, k)) / self.hz;
                    sum += d * d * wx;
                }
            }
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CrossSection;
    use std::sync::Arc;

    fn grid() -> ChannelGrid {
        let cross = Arc::new(CrossSection::build_rectangle(1.0, 1.0, 8, 8).unwrap());
        ChannelGrid::new(cross, 2.0, 16, 1.0).unwrap()
    }

    #[test]
    fn integral_of_constant_is_volume() {
        let g = grid();
        let mut f = ScalarField::nodes_on_temp(&g);
        f.data.fill(3.0);
        let vol = 2.0 * g.a * 1.0;
        assert!((f.integral() - 3.0 * vol).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_linear_axial_field() {
        let g = grid();
        let mut f = ScalarField::nodes_on_temp(&g);
        f.fill_from(|x, _, _| 2.0 * x);
        // |∇f|² = 4 over the volume
        let vol = 2.0 * g.a;
        assert!((f.grad_norm_sq() - 4.0 * vol).abs() < 1e-10);
    }

    #[test]
    fn cross_stats() {
        let g = grid();
        let mut f = ScalarField::nodes_on_temp(&g);
        f.fill_from(|x, y, _| x + y);
        let (lo, hi) = f.cross_min_max(0);
        assert!(lo < hi);
        let mean = f.cross_mean(0, &g.cross.weights, g.cross.area);
        assert!((mean - (-2.0 + 0.5)).abs() < 1e-12);
    }
}
