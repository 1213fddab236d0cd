//! One building block: two congruent hexagons glued along a notched seam,
//! carrying a single defect segment (a cone/anti-cone dipole).
//!
//! The block doubles the planar hexagon
//! `{(x, y) : 0 <= x <= b, 0 <= y <= a(x)}` across its notched upper
//! boundary, where the height profile steps from a/2 up to (a + eps)/2
//! through a slanted stretch of slope tan(theta). The two copies are glued
//! by orientation-preserving rigid motions along three seam pieces; the
//! slanted piece is the defect segment, whose endpoints are a cone point
//! (angle 2π − 2θ) and an anti-cone point (angle 2π + 2θ). Distances inside
//! the block are exact: minima over straight chords, rigid unfoldings
//! across seam sequences, and broken paths through the two singular points.
//!
//! Chart conventions: the first hexagon's chart is the region above, i.e.
//! `0 <= y <= a(x)`; the second hexagon's chart hangs below its own top
//! edge, `-a(x) <= y <= 0`, which makes every gluing (and later every
//! block-to-block gluing on a surface) orientation-preserving. Public
//! `BlockPoint` coordinates are intrinsic to the named hexagon — `y` in
//! `[0, a(x)]` for both copies — and converted to chart coordinates
//! internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    self, motion_from_segments, on_segment, rotation_angle, segment_in_polygon, Hexagon, Motion,
    Point, Vec2, TOL,
};

/// Construction parameters of a building block.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockParams {
    /// Height of the left side.
    pub a: f64,
    /// Width (bottom and top sides).
    pub b: f64,
    /// Half-angle of the cone/anti-cone pair, in (0, π/2).
    pub theta: f64,
    /// Defect magnitude (right side exceeds the left by eps); >= 0.
    pub eps: f64,
}

impl BlockParams {
    pub fn new(a: f64, b: f64, theta: f64, eps: f64) -> Self {
        Self { a, b, theta, eps }
    }

    /// Length of the defect segment, d = eps / (2 sin theta).
    pub fn defect_len(&self) -> f64 {
        if self.eps == 0.0 {
            0.0
        } else {
            self.eps / (2.0 * self.theta.sin())
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "side lengths a={}, b={} must be positive",
                self.a, self.b
            )));
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParams(format!(
                "angle theta={} must lie in (0, pi/2)",
                self.theta
            )));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!("defect magnitude eps={} must be >= 0", self.eps)));
        }
        let proj = self.defect_len() * self.theta.cos();
        if proj >= self.b {
            return Err(Error::DefectTooLong { projection: proj, width: self.b });
        }
        Ok(())
    }
}

/// A point of the block: hexagon tag plus intrinsic coordinates with
/// `0 <= y <= a(x)` in both hexagons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPoint {
    pub hexagon: Hexagon,
    pub x: f64,
    pub y: f64,
}

impl BlockPoint {
    pub fn new(hexagon: Hexagon, x: f64, y: f64) -> Self {
        Self { hexagon, x, y }
    }
}

/// Outer corners of the block (rectangle-style labels: B, C bottom of the
/// first hexagon; A, D top of the second).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    A,
    B,
    C,
    D,
}

/// Identifier of a glued seam piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeamId {
    /// Horizontal piece left of the defect (height a/2).
    Left,
    /// The slanted defect segment itself.
    Defect,
    /// Horizontal piece right of the defect (height (a+eps)/2).
    Right,
    /// The single full-width seam of a defect-free (eps = 0) block.
    Full,
}

/// One glued seam piece: matching segments in both hexagon charts and the
/// rigid motion identifying them (first chart -> second chart).
#[derive(Debug, Clone)]
pub struct Seam {
    pub id: SeamId,
    pub first: (Point, Point),
    pub second: (Point, Point),
    pub motion: Motion,
}

/// One building block, immutable after construction.
#[derive(Debug, Clone)]
pub struct Block {
    params: BlockParams,
    d: f64,
    a1: f64,
    /// x where the defect starts (also |E p−|).
    xm: f64,
    /// x where the defect ends.
    xp: f64,
    /// Height of the right portion, a/2 + eps/2.
    h_r: f64,
    poly_first: Vec<Point>,
    poly_second: Vec<Point>,
    seams: Vec<Seam>,
}

impl Block {
    /// Build the block; errors when the parameters are invalid or the
    /// defect segment does not fit inside the width.
    pub fn new(params: BlockParams) -> Result<Self> {
        params.validate()?;
        let d = params.defect_len();
        let a1 = params.a / 2.0;
        let proj = d * params.theta.cos();
        let xm = (params.b - proj) / 2.0;
        let xp = xm + proj;
        let h_r = a1 + params.eps / 2.0;
        let b = params.b;

        let (poly_first, poly_second, seams) = if params.eps == 0.0 {
            let e = Point::new(0.0, a1);
            let f = Point::new(b, a1);
            let poly_first = vec![Point::new(0.0, 0.0), Point::new(b, 0.0), f, e];
            let e2 = Point::new(0.0, -a1);
            let f2 = Point::new(b, -a1);
            let poly_second = vec![e2, f2, Point::new(b, 0.0), Point::new(0.0, 0.0)];
            let seam = Seam {
                id: SeamId::Full,
                first: (e, f),
                second: (e2, f2),
                motion: motion_from_segments((e, f), (e2, f2)),
            };
            (poly_first, poly_second, vec![seam])
        } else {
            let e = Point::new(0.0, a1);
            let pm = Point::new(xm, a1);
            let pp = Point::new(xp, h_r);
            let f = Point::new(b, h_r);
            let poly_first = vec![Point::new(0.0, 0.0), Point::new(b, 0.0), f, pp, pm, e];
            let e2 = Point::new(0.0, -a1);
            let pm2 = Point::new(xm, -a1);
            let pp2 = Point::new(xp, -h_r);
            let f2 = Point::new(b, -h_r);
            let poly_second = vec![e2, pm2, pp2, f2, Point::new(b, 0.0), Point::new(0.0, 0.0)];
            let seams = vec![
                Seam {
                    id: SeamId::Left,
                    first: (e, pm),
                    second: (e2, pm2),
                    motion: motion_from_segments((e, pm), (e2, pm2)),
                },
                Seam {
                    id: SeamId::Defect,
                    first: (pm, pp),
                    second: (pm2, pp2),
                    motion: motion_from_segments((pm, pp), (pm2, pp2)),
                },
                Seam {
                    id: SeamId::Right,
                    first: (pp, f),
                    second: (pp2, f2),
                    motion: motion_from_segments((pp, f), (pp2, f2)),
                },
            ];
            (poly_first, poly_second, seams)
        };

        Ok(Self { params, d, a1, xm, xp, h_r, poly_first, poly_second, seams })
    }

    pub fn params(&self) -> &BlockParams {
        &self.params
    }

    /// Defect segment length d = eps/(2 sin theta).
    pub fn defect_len(&self) -> f64 {
        self.d
    }

    /// Height of the hexagon left portion (a/2).
    pub fn half_height(&self) -> f64 {
        self.a1
    }

    /// Height of the hexagon right portion ((a+eps)/2).
    pub fn right_height(&self) -> f64 {
        self.h_r
    }

    /// x-extent of the defect segment: starts at `defect_x_start`
    /// (= |E p−|, the horizontal seam piece to its left) and ends at
    /// `defect_x_end`; symmetric placement makes b − defect_x_end equal to
    /// defect_x_start.
    pub fn defect_x_start(&self) -> f64 {
        self.xm
    }

    pub fn defect_x_end(&self) -> f64 {
        self.xp
    }

    /// Hexagon height profile a(x): a/2 left of the defect, slanted along
    /// it, (a+eps)/2 right of it.
    pub fn upper_boundary(&self, x: f64) -> f64 {
        if self.params.eps == 0.0 || x <= self.xm {
            self.a1
        } else if x >= self.xp {
            self.h_r
        } else {
            self.a1 + self.params.theta.tan() * (x - self.xm)
        }
    }

    /// Chart polygon (counterclockwise) of a hexagon copy.
    pub fn polygon(&self, hexagon: Hexagon) -> &[Point] {
        match hexagon {
            Hexagon::First => &self.poly_first,
            Hexagon::Second => &self.poly_second,
        }
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    /// Cone point (total angle 2π − 2θ), at the high end of the defect;
    /// `None` for a defect-free block.
    pub fn cone_point(&self) -> Option<BlockPoint> {
        (self.params.eps > 0.0).then(|| BlockPoint::new(Hexagon::First, self.xp, self.h_r))
    }

    /// Anti-cone point (total angle 2π + 2θ), at the low end of the defect.
    pub fn anticone_point(&self) -> Option<BlockPoint> {
        (self.params.eps > 0.0).then(|| BlockPoint::new(Hexagon::First, self.xm, self.a1))
    }

    /// Outer corner positions: B, C are the bottom corners of the first
    /// hexagon; A, D the top corners of the second.
    pub fn corner(&self, c: Corner) -> BlockPoint {
        match c {
            Corner::A => BlockPoint::new(Hexagon::Second, 0.0, 0.0),
            Corner::B => BlockPoint::new(Hexagon::First, 0.0, 0.0),
            Corner::C => BlockPoint::new(Hexagon::First, self.params.b, 0.0),
            Corner::D => BlockPoint::new(Hexagon::Second, self.params.b, 0.0),
        }
    }

    /// Chart coordinates of a block point (second-hexagon points hang below
    /// their top edge).
    pub fn chart_pos(&self, p: &BlockPoint) -> Point {
        match p.hexagon {
            Hexagon::First => Point::new(p.x, p.y),
            Hexagon::Second => Point::new(p.x, -p.y),
        }
    }

    /// Block point with the given chart coordinates.
    pub fn from_chart(&self, hexagon: Hexagon, pos: Point) -> BlockPoint {
        match hexagon {
            Hexagon::First => BlockPoint::new(hexagon, pos.x, pos.y),
            Hexagon::Second => BlockPoint::new(hexagon, pos.x, -pos.y),
        }
    }

    /// Whether `p` lies in the closed named hexagon, within `tol`.
    pub fn contains(&self, p: &BlockPoint, tol: f64) -> bool {
        p.x >= -tol
            && p.x <= self.params.b + tol
            && p.y >= -tol
            && p.y <= self.upper_boundary(p.x) + tol
    }

    /// Intrinsic lengths of the four outer boundary sides
    /// (left, bottom, right, top), computed from the glued geometry.
    pub fn boundary_lengths(&self) -> (f64, f64, f64, f64) {
        let left = 2.0 * self.a1;
        let bottom = self.params.b;
        let right = 2.0 * self.h_r;
        let top = self.params.b;
        (left, bottom, right, top)
    }

    /// Total area of the block (both hexagon charts).
    pub fn area(&self) -> f64 {
        geom::signed_area(&self.poly_first).abs() + geom::signed_area(&self.poly_second).abs()
    }

    /// Serialize parameters and hexagon vertex lists to a JSON record.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            params: &'a BlockParams,
            defect_len: f64,
            hexagon_first: Vec<(f64, f64)>,
            hexagon_second: Vec<(f64, f64)>,
        }
        let rec = Record {
            params: &self.params,
            defect_len: self.d,
            hexagon_first: self.poly_first.iter().map(|p| (p.x, p.y)).collect(),
            hexagon_second: self.poly_second.iter().map(|p| (p.x, p.y)).collect(),
        };
        serde_json::to_string_pretty(&rec).expect("plain numeric record")
    }

    // ------------------------------------------------------------------
    // Chart transitions & holonomy
    // ------------------------------------------------------------------

    fn seam(&self, id: SeamId) -> Result<&Seam> {
        self.seams
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::InvalidParams(format!("seam {id:?} not present in this block")))
    }

    /// Developing map of a chart path crossing the listed seams in order;
    /// `true` marks a first-to-second crossing, `false` the reverse. The
    /// result expresses final-chart coordinates in the starting chart's
    /// frame.
    pub fn dev_map(&self, crossings: &[(SeamId, bool)]) -> Result<Motion> {
        let mut w = Motion::identity();
        for &(id, forward) in crossings {
            let s = self.seam(id)?;
            let tau = if forward { s.motion } else { s.motion.inverse() };
            w *= tau.inverse();
        }
        Ok(w)
    }

    /// Deficit angle measured by a counterclockwise chart loop around the
    /// cone point: 2π minus the total angle there, i.e. +2θ.
    pub fn cone_deficit(&self) -> Result<f64> {
        if self.params.eps == 0.0 {
            return Err(Error::InvalidParams("defect-free block has no cone point".into()));
        }
        let w = self.dev_map(&[(SeamId::Right, true), (SeamId::Defect, false)])?;
        Ok(-rotation_angle(&w))
    }

    /// Deficit angle around the anti-cone point: −2θ (angle excess).
    pub fn anticone_deficit(&self) -> Result<f64> {
        if self.params.eps == 0.0 {
            return Err(Error::InvalidParams("defect-free block has no anti-cone point".into()));
        }
        let w = self.dev_map(&[(SeamId::Defect, true), (SeamId::Left, false)])?;
        Ok(-rotation_angle(&w))
    }

    /// Translational monodromy (Burgers vector) of a counterclockwise loop
    /// around the whole dipole, in first-chart coordinates; the rotational
    /// part of that loop is the identity.
    pub fn dipole_burgers(&self) -> Result<(Vec2, f64)> {
        if self.params.eps == 0.0 {
            return Err(Error::InvalidParams("defect-free block has no dipole".into()));
        }
        let w = self.dev_map(&[(SeamId::Right, true), (SeamId::Left, false)])?;
        Ok((w.translation.vector, rotation_angle(&w)))
    }

    // ------------------------------------------------------------------
    // Exact intra-block distance
    // ------------------------------------------------------------------

    fn seam_endpoints_in(&self, s: &Seam, chart: Hexagon) -> (Point, Point) {
        match chart {
            Hexagon::First => s.first,
            Hexagon::Second => s.second,
        }
    }

    fn seam_motion_from(&self, s: &Seam, chart: Hexagon) -> Motion {
        match chart {
            Hexagon::First => s.motion,
            Hexagon::Second => s.motion.inverse(),
        }
    }

    /// All chart representations of a block point: its own chart, plus the
    /// image chart for points lying on a glued seam.
    fn chart_reps(&self, p: &BlockPoint) -> Vec<(Hexagon, Point)> {
        let base = self.chart_pos(p);
        let mut reps = vec![(p.hexagon, base)];
        for s in &self.seams {
            let (e0, e1) = self.seam_endpoints_in(s, p.hexagon);
            if on_segment(&base, &e0, &e1, TOL) {
                let m = self.seam_motion_from(s, p.hexagon);
                let other = match p.hexagon {
                    Hexagon::First => Hexagon::Second,
                    Hexagon::Second => Hexagon::First,
                };
                reps.push((other, m * base));
            }
        }
        reps
    }

    /// Length of a straight candidate path from `pp` (chart `cp`) crossing
    /// the given seam sequence to the point with final-chart coordinates
    /// `qq`; `None` when the unfolded straight segment does not realize a
    /// valid path.
    fn unfold_candidate(
        &self,
        cp: Hexagon,
        pp: Point,
        qq: Point,
        seq: &[usize],
    ) -> Option<f64> {
        let mut w = Motion::identity();
        let mut cur = cp;
        let mut seams_unf: Vec<(Point, Point)> = Vec::with_capacity(seq.len());
        let mut polys: Vec<Vec<Point>> = Vec::with_capacity(seq.len() + 1);
        polys.push(self.polygon(cur).to_vec());
        for &si in seq {
            let s = &self.seams[si];
            let (e0, e1) = self.seam_endpoints_in(s, cur);
            seams_unf.push((w * e0, w * e1));
            let tau = self.seam_motion_from(s, cur);
            w *= tau.inverse();
            cur = match cur {
                Hexagon::First => Hexagon::Second,
                Hexagon::Second => Hexagon::First,
            };
            polys.push(self.polygon(cur).iter().map(|v| w * v).collect());
        }
        let q_unf = w * qq;
        let seg_len = (q_unf - pp).norm();
        if seg_len <= TOL {
            // Coincident after unfolding. This identifies the points only
            // when the degenerate segment genuinely touches every crossed
            // seam, i.e. the point lies on all of them; otherwise the
            // coincidence is a holonomy artifact (e.g. the dipole motion
            // maps one defect endpoint onto the other) and must be
            // rejected.
            let through = seams_unf.iter().all(|(s0, s1)| on_segment(&pp, s0, s1, TOL));
            return if through { Some(0.0) } else { None };
        }
        let tol_t = TOL / seg_len;
        let mut prev_t = -tol_t;
        let mut pts = Vec::with_capacity(seq.len() + 2);
        pts.push(pp);
        for (s0, s1) in &seams_unf {
            let (t, u) = geom::line_intersection_params(&pp, &q_unf, s0, s1)?;
            let slen = (s1 - s0).norm();
            let tol_u = TOL / slen.max(TOL);
            if !(-tol_u..=1.0 + tol_u).contains(&u) {
                return None;
            }
            if !(-tol_t..=1.0 + tol_t).contains(&t) || t < prev_t - tol_t {
                return None;
            }
            prev_t = prev_t.max(t);
            pts.push(pp + (q_unf - pp) * t);
        }
        pts.push(q_unf);
        for (k, poly) in polys.iter().enumerate() {
            if !segment_in_polygon(poly, &pts[k], &pts[k + 1], TOL) {
                return None;
            }
        }
        Some(seg_len)
    }

    /// Minimum over straight candidates (direct chord and seam-sequence
    /// unfoldings up to three crossings) between two chart representations.
    fn straight_min(&self, cp: Hexagon, pp: Point, cq: Hexagon, qq: Point) -> f64 {
        let mut best = f64::INFINITY;
        if cp == cq {
            if (pp - qq).norm() <= TOL {
                return 0.0;
            }
            if segment_in_polygon(self.polygon(cp), &pp, &qq, TOL) {
                best = (pp - qq).norm();
            }
        }
        let need_odd = cp != cq;
        let k = self.seams.len();
        let mut seqs: Vec<Vec<usize>> = Vec::new();
        for s1 in 0..k {
            seqs.push(vec![s1]);
            for s2 in 0..k {
                if s2 == s1 {
                    continue;
                }
                seqs.push(vec![s1, s2]);
                for s3 in 0..k {
                    if s3 == s2 {
                        continue;
                    }
                    seqs.push(vec![s1, s2, s3]);
                }
            }
        }
        for seq in &seqs {
            if (seq.len() % 2 == 1) != need_odd {
                continue;
            }
            if let Some(len) = self.unfold_candidate(cp, pp, qq, seq) {
                best = best.min(len);
            }
        }
        best
    }

    fn rep_min(&self, rp: &[(Hexagon, Point)], rq: &[(Hexagon, Point)]) -> f64 {
        let mut best = f64::INFINITY;
        for &(cp, pp) in rp {
            for &(cq, qq) in rq {
                best = best.min(self.straight_min(cp, pp, cq, qq));
            }
        }
        best
    }

    /// Exact geodesic distance inside the block.
    ///
    /// Minimum over: the straight chord within a chart, straight segments
    /// across every admissible seam-crossing sequence (rigid unfolding, up
    /// to three crossings), and broken paths through the cone and anti-cone
    /// points. Points on the defect segment itself are accepted — the
    /// metric completion contains them.
    pub fn distance(&self, p: &BlockPoint, q: &BlockPoint) -> Result<f64> {
        if !self.contains(p, TOL) {
            return Err(Error::OutOfDomain(format!("{p:?} outside the block")));
        }
        if !self.contains(q, TOL) {
            return Err(Error::OutOfDomain(format!("{q:?} outside the block")));
        }
        let rp = self.chart_reps(p);
        let rq = self.chart_reps(q);
        let mut best = self.rep_min(&rp, &rq);

        if let (Some(cone), Some(anticone)) = (self.cone_point(), self.anticone_point()) {
            let rc = self.chart_reps(&cone);
            let ra = self.chart_reps(&anticone);
            let p_c = self.rep_min(&rp, &rc);
            let p_a = self.rep_min(&rp, &ra);
            let c_q = self.rep_min(&rc, &rq);
            let a_q = self.rep_min(&ra, &rq);
            let c_a = self.rep_min(&rc, &ra);
            best = best
                .min(p_c + c_q)
                .min(p_a + a_q)
                .min(p_c + c_a + a_q)
                .min(p_a + c_a + c_q);
        }

        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::NoPath)
        }
    }
}
