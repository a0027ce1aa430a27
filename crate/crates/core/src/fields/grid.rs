//! The axial grid pair: temperature window `[-a, a]` inside the flow
//! truncation `[-A, A]`, sharing the axial spacing so that restriction and
//! extension are exact index maps.

use crate::error::{Error, Result};
use crate::geometry::CrossSection;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ChannelGrid {
    pub cross: Arc<CrossSection>,
    /// Temperature half-length.
    pub a: f64,
    /// Flow half-length `A = a + margin_cells·hx ≥ a + 1`.
    pub big_a: f64,
    pub hx: f64,
    /// Axial cells in `[-a, a]` (even, so that x = 0 is a node).
    pub nx_temp: usize,
    /// Axial cells in `[-A, A]`.
    pub nx_flow: usize,
    /// Cells on each side between `±a` and `±A`.
    pub margin_cells: usize,
}

impl ChannelGrid {
    /// Builds the grid pair. `axial_cells` discretizes `[-a, a]`;
    /// `flow_margin` is the requested `A - a` (rounded up to whole cells and
    /// clamped to at least 1).
    pub fn new(
        cross: Arc<CrossSection>,
        a: f64,
        axial_cells: usize,
        flow_margin: f64,
    ) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Geometry(format!("half-length a must be > 0, got {a}")));
        }
        if axial_cells < 4 || axial_cells % 2 != 0 {
            return Err(Error::Geometry(format!(
                "axial cell count must be even and ≥ 4, got {axial_cells}"
            )));
        }
        let hx = 2.0 * a / axial_cells as f64;
        let margin = flow_margin.max(1.0);
        let margin_cells = (margin / hx).ceil() as usize;
        let big_a = a + margin_cells as f64 * hx;
        Ok(ChannelGrid {
            cross,
            a,
            big_a,
            hx,
            nx_temp: axial_cells,
            nx_flow: axial_cells + 2 * margin_cells,
            margin_cells,
        })
    }

    /// Rebuilds a grid from an exact margin cell count (dump round-trips).
    pub fn with_margin_cells(
        cross: Arc<CrossSection>,
        a: f64,
        axial_cells: usize,
        margin_cells: usize,
    ) -> Result<Self> {
        let hx = 2.0 * a / axial_cells as f64;
        let mut g = Self::new(cross, a, axial_cells, (margin_cells.max(1) as f64 - 0.5) * hx)?;
        debug_assert_eq!(g.margin_cells, margin_cells.max(1));
        g.margin_cells = margin_cells.max(1);
        g.big_a = a + g.margin_cells as f64 * hx;
        g.nx_flow = axial_cells + 2 * g.margin_cells;
        Ok(g)
    }

    /// Default flow margin `max(4, 8·C_P)`.
    pub fn default_margin(cross: &CrossSection) -> f64 {
        (8.0 * cross.poincare_constant()).max(4.0)
    }

    /// x coordinate of temperature node `i` (0 ..= nx_temp).
    pub fn x_temp(&self, i: usize) -> f64 {
        -self.a + i as f64 * self.hx
    }

    /// x coordinate of flow node `i` (0 ..= nx_flow).
    pub fn x_flow(&self, i: usize) -> f64 {
        -self.big_a + i as f64 * self.hx
    }

    /// Index of the temperature node at `x = 0`.
    pub fn center_node(&self) -> usize {
        self.nx_temp / 2
    }

    pub fn ny(&self) -> usize {
        self.cross.ny
    }

    pub fn nz(&self) -> usize {
        self.cross.nz
    }

    pub fn hy(&self) -> f64 {
        self.cross.hy
    }

    pub fn hz(&self) -> f64 {
        self.cross.hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CrossSection;

    #[test]
    fn nodes_include_special_points() {
        let cross = Arc::new(CrossSection::build_rectangle(0.5, 0.5, 8, 8).unwrap());
        let g = ChannelGrid::new(cross, 10.0, 64, 4.0).unwrap();
        assert_eq!(g.x_temp(0), -10.0);
        assert_eq!(g.x_temp(g.nx_temp), 10.0);
        assert_eq!(g.x_temp(g.center_node()), 0.0);
        assert!(g.big_a >= g.a + 1.0);
        // flow nodes hit ±a exactly
        assert_eq!(g.x_flow(g.margin_cells), -10.0);
        assert_eq!(g.x_flow(g.margin_cells + g.nx_temp), 10.0);
    }

    #[test]
    fn rejects_odd_axial_cells() {
        let cross = Arc::new(CrossSection::build_rectangle(0.5, 0.5, 8, 8).unwrap());
        assert!(ChannelGrid::new(cross.clone(), 10.0, 63, 4.0).is_err());
        assert!(ChannelGrid::new(cross, -1.0, 64, 4.0).is_err());
    }
}
