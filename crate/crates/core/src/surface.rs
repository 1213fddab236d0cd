//! The n×n dislocated surface: a grid of scaled building blocks glued
//! edge-to-edge, each carrying one defect of magnitude eps/n², and the
//! annular-sector target geometry it approximates.
//!
//! Column i (radial direction) uses block height a_{n,i} = (a + (i−1)·eps/n)/n
//! and width b/n; the heights are chosen so each column's right side exactly
//! matches the next column's left side. Rows (angular direction) are
//! identical copies. The surface carries (n+1)² net vertices that correspond
//! to the polar grid (r_I, φ_J) of the sector, with r_I · Δφ_n = a_{n,I}.

use serde::{Deserialize, Serialize};

use crate::block::{Block, BlockParams};
use crate::error::{Error, Result};
use crate::geom::{ChartId, Hexagon, Motion, Point, PolarPoint};
use crate::sector::Sector;

/// Construction parameters of the n×n surface.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub eps: f64,
    pub n: usize,
}

/// A point on the surface in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub chart: ChartId,
    pub pos: Point,
}

/// One edge identification between two charts: `motion` carries chart-a
/// coordinates to chart-b coordinates, mapping `seg_a` onto `seg_b`
/// endpoint-to-endpoint.
#[derive(Debug, Clone)]
pub struct Gluing {
    pub chart_a: ChartId,
    pub seg_a: (Point, Point),
    pub chart_b: ChartId,
    pub seg_b: (Point, Point),
    pub motion: Motion,
}

/// Chart id of hexagon copy `hexagon` in cell (i, j), 1-based.
pub fn hex_chart(i: usize, j: usize, hexagon: Hexagon) -> ChartId {
    ChartId::Hex { i: i as u16, j: j as u16, hexagon }
}

/// The assembled n×n surface.
#[derive(Debug, Clone)]
pub struct Surface {
    params: SurfaceParams,
    /// One block per column; all rows of a column are congruent.
    columns: Vec<Block>,
    b_n: f64,
    eps_n: f64,
}

impl Surface {
    pub fn new(a: f64, b: f64, theta: f64, eps: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("grid size n must be >= 1".into()));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidParams(format!("defect magnitude eps={eps} must be >= 0")));
        }
        let nf = n as f64;
        let b_n = b / nf;
        let eps_n = eps / (nf * nf);
        let mut columns = Vec::with_capacity(n);
        for i in 1..=n {
            let a_i = (a + (i as f64 - 1.0) * eps / nf) / nf;
            columns.push(Block::new(BlockParams::new(a_i, b_n, theta, eps_n))?);
        }
        Ok(Self { params: SurfaceParams { a, b, theta, eps, n }, columns, b_n, eps_n })
    }

    pub fn params(&self) -> &SurfaceParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Block of column i (1-based); shared by all rows of the column.
    pub fn block(&self, i: usize) -> &Block {
        &self.columns[i - 1]
    }

    /// Block of the cell owning `chart`.
    pub fn block_of(&self, chart: ChartId) -> Result<&Block> {
        match chart {
            ChartId::Hex { i, .. } => Ok(self.block(i as usize)),
            ChartId::Sector => {
                Err(Error::ChartMismatch("surface charts are hexagon charts".into()))
            }
        }
    }

    /// Height a_{n,i} of column i's block.
    pub fn column_height(&self, i: usize) -> f64 {
        self.columns[i - 1].params().a
    }

    /// Common block width b/n.
    pub fn cell_width(&self) -> f64 {
        self.b_n
    }

    /// Per-block defect magnitude eps/n².
    pub fn cell_eps(&self) -> f64 {
        self.eps_n
    }

    /// All 2n² hexagon chart ids, column-major, First before Second.
    pub fn charts(&self) -> Vec<ChartId> {
        let n = self.params.n;
        let mut out = Vec::with_capacity(2 * n * n);
        for i in 1..=n {
            for j in 1..=n {
                out.push(hex_chart(i, j, Hexagon::First));
                out.push(hex_chart(i, j, Hexagon::Second));
            }
        }
        out
    }

    /// Every edge identification of the surface: the three seam pieces
    /// inside each cell (one for a defect-free surface), the row-to-row
    /// gluings (identity transition), and the column-to-column gluings
    /// (horizontal shift by the cell width) on both hexagon copies.
    pub fn gluings(&self) -> Vec<Gluing> {
        let n = self.params.n;
        let mut out = Vec::new();
        for i in 1..=n {
            let blk = self.block(i);
            for j in 1..=n {
                // Intra-cell seams.
                for s in blk.seams() {
                    out.push(Gluing {
                        chart_a: hex_chart(i, j, Hexagon::First),
                        seg_a: s.first,
                        chart_b: hex_chart(i, j, Hexagon::Second),
                        seg_b: s.second,
                        motion: s.motion,
                    });
                }
                // Row-to-row: second hexagon's free edge (chart y = 0) to
                // the next row's first hexagon along the same edge.
                if j < n {
                    let e = (Point::new(0.0, 0.0), Point::new(self.b_n, 0.0));
                    out.push(Gluing {
                        chart_a: hex_chart(i, j, Hexagon::Second),
                        seg_a: e,
                        chart_b: hex_chart(i, j + 1, Hexagon::First),
                        seg_b: e,
                        motion: Motion::identity(),
                    });
                }
                // Column-to-column: right edge of column i to the left edge
                // of column i+1 (heights match by construction), on both
                // hexagon copies.
                if i < n {
                    // The right edge of column i and the left edge of
                    // column i+1 have equal heights in exact arithmetic
                    // but are computed by different float expressions;
                    // each segment must carry its own chart's exact
                    // corner coordinates (glued points pair by index).
                    let h_a = blk.right_height();
                    let h_b = self.block(i + 1).half_height();
                    let shift = Motion::translation(-self.b_n, 0.0);
                    out.push(Gluing {
                        chart_a: hex_chart(i, j, Hexagon::First),
                        seg_a: (Point::new(self.b_n, 0.0), Point::new(self.b_n, h_a)),
                        chart_b: hex_chart(i + 1, j, Hexagon::First),
                        seg_b: (Point::new(0.0, 0.0), Point::new(0.0, h_b)),
                        motion: shift,
                    });
                    out.push(Gluing {
                        chart_a: hex_chart(i, j, Hexagon::Second),
                        seg_a: (Point::new(self.b_n, -h_a), Point::new(self.b_n, 0.0)),
                        chart_b: hex_chart(i + 1, j, Hexagon::Second),
                        seg_b: (Point::new(0.0, -h_b), Point::new(0.0, 0.0)),
                        motion: shift,
                    });
                }
            }
        }
        out
    }

    /// Total surface area: n² blocks, telescoping to a·b + eps·b/2 for
    /// every n.
    pub fn area(&self) -> f64 {
        let n = self.params.n as f64;
        self.columns.iter().map(|blk| blk.area()).sum::<f64>() * n
    }

    /// Canonical representative of net vertex (I, J), 1-based with
    /// I, J in 1..=n+1: the corner of the nearest cell, expressed in that
    /// cell's first (J <= n) or second (J = n+1) hexagon chart.
    pub fn net_vertex(&self, i: usize, j: usize) -> Result<SurfacePoint> {
        let n = self.params.n;
        if !(1..=n + 1).contains(&i) || !(1..=n + 1).contains(&j) {
            return Err(Error::OutOfDomain(format!(
                "net vertex ({i}, {j}) outside 1..={} squared",
                n + 1
            )));
        }
        let ci = i.min(n);
        let cj = j.min(n);
        let x = if i <= n { 0.0 } else { self.b_n };
        let hexagon = if j <= n { Hexagon::First } else { Hexagon::Second };
        Ok(SurfacePoint { chart: hex_chart(ci, cj, hexagon), pos: Point::new(x, 0.0) })
    }

    /// All (n+1)² net vertices in I-major order.
    pub fn net_vertices(&self) -> Vec<SurfacePoint> {
        let n = self.params.n;
        let mut out = Vec::with_capacity((n + 1) * (n + 1));
        for i in 1..=n + 1 {
            for j in 1..=n + 1 {
                out.push(self.net_vertex(i, j).expect("index in range"));
            }
        }
        out
    }

    /// The annular sector this surface approximates; errors for a
    /// defect-free surface (whose limit is a flat rectangle).
    pub fn sector(&self) -> Result<Sector> {
        Sector::new(self.params.a, self.params.b, self.params.eps)
    }

    /// Inner radius R0 = a·b/eps of the target sector.
    pub fn r0(&self) -> Result<f64> {
        if self.params.eps <= 0.0 {
            return Err(Error::InvalidParams(
                "defect-free surface has no finite-radius target sector".into(),
            ));
        }
        Ok(self.params.a * self.params.b / self.params.eps)
    }

    /// Radial grid line r_I = R0 + (I−1)·b/n, I in 1..=n+1.
    pub fn grid_r(&self, i: usize) -> Result<f64> {
        Ok(self.r0()? + (i as f64 - 1.0) * self.b_n)
    }

    /// Angular grid line φ_J = (J−1)·Δφ_n with Δφ_n = eps/(b·n).
    pub fn grid_phi(&self, j: usize) -> f64 {
        (j as f64 - 1.0) * self.grid_dphi()
    }

    /// Angular cell width Δφ_n = eps/(b·n).
    pub fn grid_dphi(&self) -> f64 {
        self.params.eps / (self.params.b * self.params.n as f64)
    }

    /// Sector position of net vertex (I, J).
    pub fn sector_vertex(&self, i: usize, j: usize) -> Result<PolarPoint> {
        Ok(PolarPoint::new(self.grid_r(i)?, self.grid_phi(j)))
    }

    /// Serialize a structural summary (parameters, derived grid data, and
    /// per-column block geometry) as JSON.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            params: &'a SurfaceParams,
            cell_width: f64,
            cell_eps: f64,
            column_heights: Vec<f64>,
            area: f64,
        }
        let s = Summary {
            params: &self.params,
            cell_width: self.b_n,
            cell_eps: self.eps_n,
            column_heights: (1..=self.params.n).map(|i| self.column_height(i)).collect(),
            area: self.area(),
        };
        serde_json::to_string_pretty(&s).expect("plain numeric record")
    }
}

/// Transition motion taking chart-a coordinates to chart-b coordinates for
/// a pair of glued charts, if they share an edge. Both directions of every
/// stored gluing are searched.
pub fn transition(gluings: &[Gluing], from: ChartId, to: ChartId) -> Option<Motion> {
    for g in gluings {
        if g.chart_a == from && g.chart_b == to {
            return Some(g.motion);
        }
        if g.chart_b == from && g.chart_a == to {
            return Some(g.motion.inverse());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_6;

    fn standard(n: usize) -> Surface {
        Surface::new(1.0, 1.0, FRAC_PI_6, 0.1, n).unwrap()
    }

    #[test]
    fn grid_dimensions_at_n2() {
        let s = standard(2);
        assert_relative_eq!(s.column_height(1), 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.column_height(2), 0.525, epsilon = 1e-15);
        assert_relative_eq!(s.cell_width(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.cell_eps(), 0.025, epsilon = 1e-15);
    }

    #[test]
    fn column_heights_chain() {
        for n in [1usize, 2, 3, 5, 8] {
            let s = standard(n);
            for i in 1..n {
                // Right side of column i == left side of column i+1.
                assert_relative_eq!(
                    2.0 * s.block(i).right_height(),
                    s.column_height(i + 1),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn area_independent_of_n() {
        for n in [1usize, 2, 3, 5] {
            let s = standard(n);
            assert_relative_eq!(s.area(), 1.05, epsilon = 1e-12);
        }
    }

    #[test]
    fn polar_grid_matches_block_heights() {
        // r_I · Δφ_n = a_{n,I}: the arc length of each cell's inner edge
        // equals the block height of its column.
        for n in [1usize, 2, 4, 8] {
            let s = standard(n);
            for i in 1..=n {
                let arc = s.grid_r(i).unwrap() * s.grid_dphi();
                assert_relative_eq!(arc, s.column_height(i), epsilon = 1e-12);
            }
            assert_relative_eq!(s.grid_r(1).unwrap(), 10.0, epsilon = 1e-12);
            assert_relative_eq!(s.grid_r(n + 1).unwrap(), 11.0, epsilon = 1e-12);
            assert_relative_eq!(s.grid_phi(n + 1), 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn gluing_motions_map_segments() {
        let s = standard(3);
        let gl = s.gluings();
        // 3 seams per cell + row gluings n(n−1) + column gluings 2n(n−1).
        assert_eq!(gl.len(), 3 * 9 + 3 * 2 + 2 * 3 * 2);
        for g in &gl {
            assert!((g.motion * g.seg_a.0 - g.seg_b.0).norm() < 1e-12);
            assert!((g.motion * g.seg_a.1 - g.seg_b.1).norm() < 1e-12);
        }
    }

    #[test]
    fn transitions_compose_to_identity_around_net_vertices() {
        let s = standard(3);
        let gl = s.gluings();
        // Walk counterclockwise around each interior net vertex (I, J),
        // 2 <= I, J <= n: four charts meet there and the transition loop
        // must close up exactly (net vertices are flat).
        for i in 2..=3usize {
            for j in 2..=3usize {
                let c1 = hex_chart(i, j, Hexagon::First);
                let c2 = hex_chart(i - 1, j, Hexagon::First);
                let c3 = hex_chart(i - 1, j - 1, Hexagon::Second);
                let c4 = hex_chart(i, j - 1, Hexagon::Second);
                let m12 = transition(&gl, c1, c2).unwrap();
                let m23 = transition(&gl, c2, c3).unwrap();
                let m34 = transition(&gl, c3, c4).unwrap();
                let m41 = transition(&gl, c4, c1).unwrap();
                let total = m41 * m34 * m23 * m12;
                assert!(total.translation.vector.norm() < 1e-12);
                assert!(crate::geom::rotation_angle(&total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn net_vertices_canonical_charts() {
        let s = standard(2);
        let v = s.net_vertices();
        assert_eq!(v.len(), 9);
        // Inner corner (1,1): B corner of cell (1,1).
        assert_eq!(v[0].chart, hex_chart(1, 1, Hexagon::First));
        assert_relative_eq!(v[0].pos.x, 0.0);
        // (3,3): D corner of cell (2,2) in the second hexagon chart.
        let last = v[8];
        assert_eq!(last.chart, hex_chart(2, 2, Hexagon::Second));
        assert_relative_eq!(last.pos.x, s.cell_width());
        assert_relative_eq!(last.pos.y, 0.0);
        assert!(s.net_vertex(0, 1).is_err());
        assert!(s.net_vertex(4, 1).is_err());
    }

    #[test]
    fn defect_free_surface() {
        let s = Surface::new(1.0, 1.0, FRAC_PI_6, 0.0, 2).unwrap();
        assert!(s.sector().is_err());
        assert!(s.r0().is_err());
        assert_relative_eq!(s.area(), 1.0, epsilon = 1e-12);
        // One full seam per cell instead of three pieces.
        assert_eq!(s.gluings().len(), 4 + 2 + 4);
    }

    #[test]
    fn json_summary_contains_columns() {
        let s = standard(2);
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["column_heights"].as_array().unwrap().len(), 2);
        assert_relative_eq!(v["area"].as_f64().unwrap(), 1.05, epsilon = 1e-12);
    }
}
