//! Graph approximation of geodesic distances on glued planar charts.
//!
//! Every geometry handled here (a single block, the n×n surface, the flat
//! annular sector) is a set of planar charts triangulated into a few
//! triangles per chart, with rigid-motion identifications along boundary
//! edges. Each triangle edge is subdivided into points spaced at most `h`
//! apart; the graph connects consecutive points along edges (chains) and
//! every pair of points on different edges of a common triangle (cliques),
//! weighted by chart Euclidean length. Dijkstra on this graph
//! over-approximates geodesic distance with relative error O((h/H)²) for
//! triangles of size H.
//!
//! A refinement pass then slides each interior path vertex along its host
//! edge after rigidly unfolding the path's triangle strip into the plane.
//! Because consecutive constraint points always lie on edges of one convex
//! triangle, every slid polyline is still a genuine surface path, so the
//! refined length stays an upper bound for the geodesic while shedding most
//! of the O(h²) quantization error.

use std::collections::{BinaryHeap, HashMap};

use crate::block::{Block, BlockPoint};
use crate::error::{Error, Result};
use crate::exec;
use crate::geom::{
    self, on_segment, point_in_polygon, polar_to_cart, ChartId, Hexagon, Motion, Point,
    PolarPoint, TOL,
};
use crate::sector::Sector;
use crate::surface::{hex_chart, Surface, SurfacePoint};

/// Mesh resolution parameters.
#[derive(Debug, Clone, Copy)]
pub struct MeshConfig {
    /// Upper bound for the spacing of subdivision points along triangle
    /// edges.
    pub h: f64,
    /// Exclude vertices lying on the defect segments (including the cone
    /// points), restricting paths to the smooth part of the geometry.
    pub exclude_defect: bool,
}

impl MeshConfig {
    pub fn new(h: f64) -> Self {
        Self { h, exclude_defect: false }
    }
}

/// A shortest path found on the mesh.
#[derive(Debug, Clone)]
pub struct MeshPath {
    /// Plain graph distance (over-approximation).
    pub graph_length: f64,
    /// Length after sliding vertices along their host edges; `None` when
    /// the unfolding could not be reconstructed.
    pub refined_length: Option<f64>,
    /// Cell indices (i, j) crossed, as a run sequence without consecutive
    /// repeats; (0, 0) for non-grid charts.
    pub cells: Vec<(u16, u16)>,
    /// Number of graph vertices on the path.
    pub vertices: usize,
}

impl MeshPath {
    /// Best available length estimate.
    pub fn length(&self) -> f64 {
        self.refined_length.unwrap_or(self.graph_length)
    }
}

type VertexEntry = (u32, Point, Option<(Point, Point)>);

#[derive(Debug, Clone)]
struct GlueSpec {
    ca: u32,
    a0: Point,
    a1: Point,
    cb: u32,
    b0: Point,
    b1: Point,
    motion: Motion,
}

struct MeshInput {
    charts: Vec<(ChartId, Vec<[Point; 3]>)>,
    glues: Vec<GlueSpec>,
    /// Segments (chart index, endpoints) whose vertices are excluded.
    excluded: Vec<(u32, Point, Point)>,
    h: f64,
}

/// The assembled distance graph.
pub struct GeodesicMesh {
    chart_ids: Vec<ChartId>,
    chart_tris: Vec<(usize, usize)>,
    tri_pts: Vec<[Point; 3]>,
    tri_chart: Vec<u32>,
    tri_verts: Vec<Vec<(u32, Point)>>,
    entries: Vec<Vec<VertexEntry>>,
    blocked: Vec<bool>,
    snap_index: Vec<Vec<(Point, u32)>>,
    csr_off: Vec<usize>,
    csr_to: Vec<u32>,
    csr_w: Vec<f64>,
    csr_label: Vec<u32>,
    glues: Vec<GlueSpec>,
    excluded_segs: Vec<(u32, Point, Point)>,
    h: f64,
    edge_count: usize,
}

/// Normalized float bits (collapses -0.0 into 0.0).
fn fbits(v: f64) -> u64 {
    (if v == 0.0 { 0.0f64 } else { v }).to_bits()
}

fn pkey(p: &Point) -> (u64, u64) {
    (fbits(p.x), fbits(p.y))
}

fn lex_less(p: &Point, q: &Point) -> bool {
    (p.x, p.y) < (q.x, q.y)
}

/// Number of subdivision intervals for an edge of the given length;
/// tolerantly rounded so glued edges whose lengths agree to rounding error
/// always get the same count.
fn subdiv_count(len: f64, h: f64) -> usize {
    ((len / h) - 1e-9).ceil().max(1.0) as usize
}

fn cross2(u: &nalgebra::Vector2<f64>, v: &nalgebra::Vector2<f64>) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Point on segment [ha, hb] minimizing |a − x| + |x − b|.
fn optimal_on_segment(a: &Point, b: &Point, ha: &Point, hb: &Point) -> Point {
    let d = hb - ha;
    let len2 = d.norm_squared();
    if len2 < 1e-30 {
        return *ha;
    }
    let scale = len2.sqrt();
    let ca = cross2(&d, &(a - ha));
    let cb = cross2(&d, &(b - ha));
    let t = if ca.abs() <= 1e-14 * scale {
        d.dot(&(a - ha)) / len2
    } else if cb.abs() <= 1e-14 * scale {
        d.dot(&(b - ha)) / len2
    } else if ca * cb > 0.0 {
        // Same side: reflect b across the host line, then cut straight.
        let n = nalgebra::Vector2::new(-d.y, d.x) / scale;
        let b2 = b - n * (2.0 * n.dot(&(b - ha)));
        let cb2 = cross2(&d, &(b2 - ha));
        let s = ca / (ca - cb2);
        let x = a + (b2 - a) * s;
        d.dot(&(x - ha)) / len2
    } else {
        // Opposite sides: straight crossing.
        let s = ca / (ca - cb);
        let x = a + (b - a) * s;
        d.dot(&(x - ha)) / len2
    };
    ha + d * t.clamp(0.0, 1.0)
}

/// Triangulation of one hexagon chart of a block: vertical cuts at the
/// defect's x-extent give at most six ccw triangles (four for a
/// defect-free block).
fn triangulate_hexagon(blk: &Block, hexagon: Hexagon) -> Vec<[Point; 3]> {
    let b = blk.params().b;
    let a1 = blk.half_height();
    let hr = blk.right_height();
    let xm = blk.defect_x_start();
    let xp = blk.defect_x_end();
    let flat = blk.params().eps == 0.0;

    let bpt = Point::new(0.0, 0.0);
    let m0 = Point::new(xm, 0.0);
    let pm = Point::new(xm, a1);
    let e = Point::new(0.0, a1);
    let mut tris = vec![[bpt, m0, pm], [bpt, pm, e]];
    let (m1, pp) = if flat {
        (m0, pm)
    } else {
        let m1 = Point::new(xp, 0.0);
        let pp = Point::new(xp, hr);
        tris.push([m0, m1, pp]);
        tris.push([m0, pp, pm]);
        (m1, pp)
    };
    let c = Point::new(b, 0.0);
    let f = Point::new(b, hr);
    tris.push([m1, c, f]);
    tris.push([m1, f, pp]);

    match hexagon {
        Hexagon::First => tris,
        Hexagon::Second => {
            let m = |p: &Point| Point::new(p.x, -p.y);
            tris.iter().map(|t| [m(&t[0]), m(&t[2]), m(&t[1])]).collect()
        }
    }
}

impl GeodesicMesh {
    /// Mesh of a single block (charts for both hexagon copies plus the
    /// seam identifications).
    pub fn for_block(blk: &Block, cfg: &MeshConfig) -> Result<Self> {
        let limit = blk.params().b.min(blk.half_height()) / 4.0;
        if cfg.h >= limit {
            return Err(Error::MeshTooCoarse { h: cfg.h, limit });
        }
        let charts = vec![
            (hex_chart(1, 1, Hexagon::First), triangulate_hexagon(blk, Hexagon::First)),
            (hex_chart(1, 1, Hexagon::Second), triangulate_hexagon(blk, Hexagon::Second)),
        ];
        let mut glues = Vec::new();
        let mut excluded = Vec::new();
        for s in blk.seams() {
            for (a, b) in split_seam_pieces(blk, s.first, s.second) {
                glues.push(GlueSpec {
                    ca: 0,
                    a0: a.0,
                    a1: a.1,
                    cb: 1,
                    b0: b.0,
                    b1: b.1,
                    motion: s.motion,
                });
            }
            if cfg.exclude_defect && s.id == crate::block::SeamId::Defect {
                excluded.push((0u32, s.first.0, s.first.1));
                excluded.push((1u32, s.second.0, s.second.1));
            }
        }
        build_mesh(MeshInput { charts, glues, excluded, h: cfg.h })
    }

    /// Mesh of the n×n surface.
    pub fn for_surface(surf: &Surface, cfg: &MeshConfig) -> Result<Self> {
        let limit = surf.cell_width().min(surf.column_height(1)) / 4.0;
        if cfg.h >= limit {
            return Err(Error::MeshTooCoarse { h: cfg.h, limit });
        }
        let mut charts = Vec::new();
        let mut index: HashMap<ChartId, u32> = HashMap::new();
        for id in surf.charts() {
            let (i, hexagon) = match id {
                ChartId::Hex { i, hexagon, .. } => (i as usize, hexagon),
                ChartId::Sector => unreachable!("surface charts are hexagon charts"),
            };
            index.insert(id, charts.len() as u32);
            charts.push((id, triangulate_hexagon(surf.block(i), hexagon)));
        }
        let mut glues = Vec::new();
        let mut excluded = Vec::new();
        for g in surf.gluings() {
            let ca = index[&g.chart_a];
            let cb = index[&g.chart_b];
            let column = match g.chart_a {
                ChartId::Hex { i, .. } => i as usize,
                ChartId::Sector => unreachable!(),
            };
            let blk = surf.block(column);
            let row_gluing = matches!(
                (g.chart_a, g.chart_b),
                (
                    ChartId::Hex { hexagon: Hexagon::Second, .. },
                    ChartId::Hex { hexagon: Hexagon::First, .. }
                )
            );
            let same_cell_seam = matches!(
                (g.chart_a, g.chart_b),
                (
                    ChartId::Hex { i: i1, j: j1, hexagon: Hexagon::First },
                    ChartId::Hex { i: i2, j: j2, hexagon: Hexagon::Second },
                ) if i1 == i2 && j1 == j2
            );
            let pieces = if row_gluing {
                split_horizontal(g.seg_a, g.seg_b, blk)
            } else if same_cell_seam && surf.params().eps == 0.0 {
                split_horizontal(g.seg_a, g.seg_b, blk)
            } else {
                vec![(g.seg_a, g.seg_b)]
            };
            for (a, b) in pieces {
                glues.push(GlueSpec {
                    ca,
                    a0: a.0,
                    a1: a.1,
                    cb,
                    b0: b.0,
                    b1: b.1,
                    motion: g.motion,
                });
            }
        }
        if cfg.exclude_defect {
            for i in 1..=surf.n() {
                for s in surf.block(i).seams() {
                    if s.id == crate::block::SeamId::Defect {
                        for j in 1..=surf.n() {
                            excluded.push((
                                index[&hex_chart(i, j, Hexagon::First)],
                                s.first.0,
                                s.first.1,
                            ));
                            excluded.push((
                                index[&hex_chart(i, j, Hexagon::Second)],
                                s.second.0,
                                s.second.1,
                            ));
                        }
                    }
                }
            }
        }
        build_mesh(MeshInput { charts, glues, excluded, h: cfg.h })
    }

    /// Mesh of the flat annular sector as a single planar chart: a coarse
    /// polar-grid triangulation with Steiner subdivision. Chord
    /// approximation of the curved boundaries introduces only O(H³)-level
    /// length error for macro-triangle size H.
    pub fn for_sector(sec: &Sector, cfg: &MeshConfig) -> Result<Self> {
        let span_r = sec.b();
        let span_a = sec.r1() * sec.total_angle();
        let limit = span_r.min(sec.r0() * sec.total_angle()) / 4.0;
        if cfg.h >= limit {
            return Err(Error::MeshTooCoarse { h: cfg.h, limit });
        }
        let big = 10.0 * cfg.h;
        let rows = ((span_r / big).ceil() as usize).max(2);
        let cols = ((span_a / big).ceil() as usize).max(2);
        let dr = span_r / rows as f64;
        let dphi = sec.total_angle() / cols as f64;
        let vert = |k: usize, l: usize| {
            let r = sec.r0() + k as f64 * dr;
            let phi = l as f64 * dphi;
            Point::new(r * phi.cos(), r * phi.sin())
        };
        let mut tris = Vec::with_capacity(2 * rows * cols);
        for k in 0..rows {
            for l in 0..cols {
                let p00 = vert(k, l);
                let p10 = vert(k + 1, l);
                let p11 = vert(k + 1, l + 1);
                let p01 = vert(k, l + 1);
                tris.push([p00, p10, p11]);
                tris.push([p00, p11, p01]);
            }
        }
        build_mesh(MeshInput {
            charts: vec![(ChartId::Sector, tris)],
            glues: Vec::new(),
            excluded: Vec::new(),
            h: cfg.h,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.entries.len()
    }

    /// Number of undirected graph edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Mesh vertex within snapping tolerance of the query position, if any.
    pub fn snap(&self, q: &SurfacePoint) -> Option<u32> {
        let c = self.chart_index(q.chart)?;
        self.snap_index[c as usize]
            .iter()
            .find(|(pos, _)| (pos - q.pos).norm() <= 1e-7)
            .map(|&(_, cid)| cid)
    }

    fn chart_index(&self, id: ChartId) -> Option<u32> {
        self.chart_ids.iter().position(|&c| c == id).map(|i| i as u32)
    }

    fn resolve(&self, q: &SurfacePoint) -> Result<Resolved> {
        let c = self
            .chart_index(q.chart)
            .ok_or_else(|| Error::ChartMismatch(format!("{:?} is not a chart of this mesh", q.chart)))?;
        for (ec, e0, e1) in &self.excluded_segs {
            if *ec == c && on_segment(&q.pos, e0, e1, TOL) {
                return Err(Error::OnDefectSegment(format!(
                    "query {:?} lies on an excluded defect segment",
                    q.pos
                )));
            }
        }
        if let Some(cid) = self.snap(q) {
            if self.blocked[cid as usize] {
                return Err(Error::OnDefectSegment(format!(
                    "query {:?} lies on an excluded defect segment",
                    q.pos
                )));
            }
            return Ok(Resolved::Vertex(cid));
        }
        let (t0, t1) = self.chart_tris[c as usize];
        let mut adj: Vec<(u32, f64, u32)> = Vec::new();
        for t in t0..t1 {
            if point_in_polygon(&self.tri_pts[t], &q.pos, TOL) {
                for &(cid, pos) in &self.tri_verts[t] {
                    if self.blocked[cid as usize] {
                        continue;
                    }
                    if !adj.iter().any(|&(c2, _, _)| c2 == cid) {
                        adj.push((cid, (pos - q.pos).norm(), t as u32));
                    }
                }
            }
        }
        if adj.is_empty() {
            return Err(Error::OutOfDomain(format!(
                "query {:?} in chart {:?} lies outside the triangulation",
                q.pos, q.chart
            )));
        }
        Ok(Resolved::Temp { chart: c, pos: q.pos, adj })
    }

    /// Graph shortest-path distance between two query points.
    pub fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> Result<f64> {
        Ok(self.shortest_path(p, q, false)?.graph_length)
    }

    /// Shortest path with cell bookkeeping and optional refinement.
    pub fn shortest_path(&self, p: &SurfacePoint, q: &SurfacePoint, refine: bool) -> Result<MeshPath> {
        let rp = self.resolve(p)?;
        let rq = self.resolve(q)?;
        let search = self.dijkstra(&rp, Some(&rq))?;
        let mut path = self.extract_path(&search, &rp, &rq, refine)?;
        if refine {
            if let Some((len, tri)) = self.direct_in_face(&rp, &rq) {
                if len < path.length() {
                    path.refined_length = Some(len);
                    path.cells = self.cells_of(&[tri]);
                }
            }
        }
        Ok(path)
    }

    /// Straight-segment candidate for two off-vertex queries sharing a
    /// triangle: graph routes must detour through the face boundary, while
    /// the segment between them stays inside the (convex) face and is a
    /// genuine path of exactly its chart length.
    fn direct_in_face(&self, rp: &Resolved, rq: &Resolved) -> Option<(f64, u32)> {
        let (
            Resolved::Temp { chart: ca, pos: pa, .. },
            Resolved::Temp { chart: cb, pos: pb, .. },
        ) = (rp, rq)
        else {
            return None;
        };
        if ca != cb {
            return None;
        }
        let (t0, t1) = self.chart_tris[*ca as usize];
        (t0..t1)
            .find(|&t| {
                point_in_polygon(&self.tri_pts[t], pa, TOL)
                    && point_in_polygon(&self.tri_pts[t], pb, TOL)
            })
            .map(|t| ((pa - pb).norm(), t as u32))
    }

    /// All-pairs distances among queries that land exactly on mesh
    /// vertices (such as the surface net vertices). Rows are computed
    /// through the data-parallel execution shim. With `refine`, every
    /// pairwise path is unfolded and slid.
    pub fn distance_matrix(&self, queries: &[SurfacePoint], refine: bool) -> Result<Vec<Vec<f64>>> {
        let ids: Vec<u32> = queries
            .iter()
            .map(|q| {
                self.snap(q).ok_or_else(|| {
                    Error::InvalidParams(format!(
                        "matrix query {:?} does not land on a mesh vertex",
                        q.pos
                    ))
                })
            })
            .collect::<Result<_>>()?;
        for &id in &ids {
            if self.blocked[id as usize] {
                return Err(Error::OnDefectSegment("matrix query on excluded segment".into()));
            }
        }
        let rows = exec::map_slice(&ids, |&src| {
            let rsrc = Resolved::Vertex(src);
            let search = self.dijkstra(&rsrc, None).expect("vertex source");
            ids.iter()
                .map(|&dst| {
                    if dst == src {
                        return 0.0;
                    }
                    let rdst = Resolved::Vertex(dst);
                    match self.extract_path(&search, &rsrc, &rdst, refine) {
                        Ok(p) => p.length(),
                        Err(_) => f64::INFINITY,
                    }
                })
                .collect::<Vec<f64>>()
        });
        Ok(rows)
    }

    fn dijkstra(&self, src: &Resolved, dst: Option<&Resolved>) -> Result<Search> {
        let nv = self.entries.len();
        let mut temp_adj: Vec<Vec<(u32, f64, u32)>> = Vec::new();
        let mut base_back: HashMap<u32, Vec<(u32, f64, u32)>> = HashMap::new();
        let reg_temp = |r: &Resolved, temp_adj: &mut Vec<Vec<(u32, f64, u32)>>,
                        base_back: &mut HashMap<u32, Vec<(u32, f64, u32)>>|
         -> u32 {
            match r {
                Resolved::Vertex(id) => *id,
                Resolved::Temp { adj, .. } => {
                    let id = (nv + temp_adj.len()) as u32;
                    for &(v, w, label) in adj {
                        base_back.entry(v).or_default().push((id, w, label));
                    }
                    temp_adj.push(adj.clone());
                    id
                }
            }
        };
        let src_id = reg_temp(src, &mut temp_adj, &mut base_back);
        let dst_id = dst.map(|r| reg_temp(r, &mut temp_adj, &mut base_back));

        let total = nv + temp_adj.len();
        let mut dist = vec![f64::INFINITY; total];
        let mut pred: Vec<(u32, u32)> = vec![(u32::MAX, u32::MAX); total];
        let mut done = vec![false; total];
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
        dist[src_id as usize] = 0.0;
        heap.push(HeapEntry { d: 0.0, v: src_id });
        while let Some(HeapEntry { d, v }) = heap.pop() {
            if done[v as usize] {
                continue;
            }
            done[v as usize] = true;
            if Some(v) == dst_id {
                break;
            }
            let relax = |to: u32, w: f64, label: u32, heap: &mut BinaryHeap<HeapEntry>,
                         dist: &mut Vec<f64>, pred: &mut Vec<(u32, u32)>| {
                let nd = d + w;
                if nd < dist[to as usize] {
                    dist[to as usize] = nd;
                    pred[to as usize] = (v, label);
                    heap.push(HeapEntry { d: nd, v: to });
                }
            };
            if (v as usize) < nv {
                let (s, e) = (self.csr_off[v as usize], self.csr_off[v as usize + 1]);
                for k in s..e {
                    relax(self.csr_to[k], self.csr_w[k], self.csr_label[k], &mut heap, &mut dist, &mut pred);
                }
                if let Some(back) = base_back.get(&v) {
                    for &(to, w, label) in back {
                        relax(to, w, label, &mut heap, &mut dist, &mut pred);
                    }
                }
            } else {
                for &(to, w, label) in &temp_adj[v as usize - nv] {
                    relax(to, w, label, &mut heap, &mut dist, &mut pred);
                }
            }
        }
        Ok(Search { dist, pred, src_id })
    }

    fn extract_path(
        &self,
        search: &Search,
        src: &Resolved,
        dst: &Resolved,
        refine: bool,
    ) -> Result<MeshPath> {
        let nv = self.entries.len();
        let dst_id = match dst {
            Resolved::Vertex(id) => *id,
            Resolved::Temp { .. } => {
                // Temp destination ids are assigned after the source.
                (nv + if matches!(src, Resolved::Temp { .. }) { 1 } else { 0 }) as u32
            }
        };
        let graph_length = search.dist[dst_id as usize];
        if !graph_length.is_finite() {
            return Err(Error::NoPath);
        }
        // Walk predecessors destination -> source.
        let mut ids = vec![dst_id];
        let mut labels: Vec<u32> = Vec::new();
        let mut cur = dst_id;
        while cur != search.src_id {
            let (prev, label) = search.pred[cur as usize];
            if prev == u32::MAX {
                return Err(Error::NoPath);
            }
            labels.push(label);
            ids.push(prev);
            cur = prev;
        }
        ids.reverse();
        labels.reverse();

        let cells = self.cells_of(&labels);
        let refined_length = if refine && !labels.is_empty() {
            self.refine(&ids, &labels, src, dst).map(|r| r.min(graph_length))
        } else {
            None
        };
        Ok(MeshPath { graph_length, refined_length, cells, vertices: ids.len() })
    }

    fn cells_of(&self, labels: &[u32]) -> Vec<(u16, u16)> {
        let mut cells: Vec<(u16, u16)> = Vec::new();
        for &t in labels {
            let cell = match self.chart_ids[self.tri_chart[t as usize] as usize] {
                ChartId::Hex { i, j, .. } => (i, j),
                ChartId::Sector => (0, 0),
            };
            if cells.last() != Some(&cell) {
                cells.push(cell);
            }
        }
        cells
    }

    fn node_entries(&self, id: u32, src: &Resolved, dst: &Resolved) -> Vec<VertexEntry> {
        let nv = self.entries.len() as u32;
        if id < nv {
            return self.entries[id as usize].clone();
        }
        let temp_of = |r: &Resolved| match r {
            Resolved::Temp { chart, pos, .. } => vec![(*chart, *pos, None)],
            Resolved::Vertex(_) => Vec::new(),
        };
        let src_is_temp = matches!(src, Resolved::Temp { .. });
        if id == nv && src_is_temp {
            temp_of(src)
        } else {
            temp_of(dst)
        }
    }

    /// Transition motion taking `from`-chart coordinates into `to`-chart
    /// coordinates, valid at a junction vertex with the given chart
    /// entries. Searches direct gluings, then two-step compositions (for
    /// corner junctions where several charts meet).
    fn chart_transition(&self, from: u32, to: u32, node: &[VertexEntry]) -> Option<Motion> {
        let pos_in = |c: u32| node.iter().find(|e| e.0 == c).map(|e| e.1);
        let direct = |from: u32, to: u32| -> Option<Motion> {
            let pn = pos_in(from)?;
            for g in &self.glues {
                if g.ca == to && g.cb == from && on_segment(&pn, &g.b0, &g.b1, 1e-7) {
                    return Some(g.motion.inverse());
                }
                if g.ca == from && g.cb == to && on_segment(&pn, &g.a0, &g.a1, 1e-7) {
                    return Some(g.motion);
                }
            }
            None
        };
        if let Some(m) = direct(from, to) {
            return Some(m);
        }
        // Two-step: from -> mid -> to.
        for e in node {
            let mid = e.0;
            if mid == from || mid == to {
                continue;
            }
            if let (Some(m1), Some(m2)) = (direct(from, mid), direct(mid, to)) {
                return Some(m2 * m1);
            }
        }
        None
    }

    /// Unfold the path's triangle strip into the plane and slide interior
    /// vertices along their host edges; returns the improved length.
    fn refine(&self, ids: &[u32], labels: &[u32], src: &Resolved, dst: &Resolved) -> Option<f64> {
        let nodes: Vec<Vec<VertexEntry>> =
            ids.iter().map(|&id| self.node_entries(id, src, dst)).collect();
        let mut cur_chart = self.tri_chart[labels[0] as usize];
        let mut w = Motion::identity();
        let n = nodes.len();
        let mut upos: Vec<Point> = Vec::with_capacity(n);
        let mut uhost: Vec<Option<(Point, Point)>> = Vec::with_capacity(n);
        for k in 0..n {
            let entry = nodes[k].iter().find(|e| e.0 == cur_chart)?;
            upos.push(w * entry.1);
            uhost.push(entry.2.map(|(s, t)| (w * s, w * t)));
            if k < labels.len() {
                let cnew = self.tri_chart[labels[k] as usize];
                if cnew != cur_chart {
                    let m = self.chart_transition(cnew, cur_chart, &nodes[k])?;
                    w *= m;
                    cur_chart = cnew;
                    // Re-place node k consistently in the new frame; the
                    // transition agrees with the old placement at the
                    // junction itself, so the position is unchanged.
                }
            }
        }
        for _ in 0..200 {
            let mut max_move = 0.0f64;
            for k in 1..n - 1 {
                let Some((ha, hb)) = uhost[k] else { continue };
                let x = optimal_on_segment(&upos[k - 1], &upos[k + 1], &ha, &hb);
                max_move = max_move.max((x - upos[k]).norm());
                upos[k] = x;
            }
            if max_move < 1e-12 {
                break;
            }
        }
        Some((0..n - 1).map(|k| (upos[k + 1] - upos[k]).norm()).sum())
    }
}

/// Query helper: a block point as a mesh query for `for_block` meshes.
pub fn block_query(blk: &Block, p: &BlockPoint) -> SurfacePoint {
    SurfacePoint { chart: hex_chart(1, 1, p.hexagon), pos: blk.chart_pos(p) }
}

/// Query helper: a sector point as a mesh query for `for_sector` meshes.
pub fn sector_query(p: &PolarPoint) -> SurfacePoint {
    SurfacePoint { chart: ChartId::Sector, pos: polar_to_cart(p) }
}

enum Resolved {
    Vertex(u32),
    Temp { chart: u32, pos: Point, adj: Vec<(u32, f64, u32)> },
}

struct Search {
    dist: Vec<f64>,
    pred: Vec<(u32, u32)>,
    src_id: u32,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    d: f64,
    v: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Min-heap on distance, deterministic tie-break on vertex id.
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Seam pieces for the block mesh: the full-width seam of a defect-free
/// block is split at the triangulation cut so every glued piece is exactly
/// a triangulation edge.
fn split_seam_pieces(
    blk: &Block,
    first: (Point, Point),
    second: (Point, Point),
) -> Vec<((Point, Point), (Point, Point))> {
    if blk.params().eps > 0.0 {
        return vec![(first, second)];
    }
    let xm = blk.defect_x_start();
    let a1 = blk.half_height();
    let cut_f = Point::new(xm, a1);
    let cut_s = Point::new(xm, -a1);
    vec![
        ((first.0, cut_f), (second.0, cut_s)),
        ((cut_f, first.1), (cut_s, second.1)),
    ]
}

/// Split a horizontal gluing segment (row-to-row edge, chart y = 0 on both
/// sides) at the column's triangulation cuts.
fn split_horizontal(
    seg_a: (Point, Point),
    seg_b: (Point, Point),
    blk: &Block,
) -> Vec<((Point, Point), (Point, Point))> {
    let mut cuts = vec![blk.defect_x_start()];
    if blk.params().eps > 0.0 {
        cuts.push(blk.defect_x_end());
    }
    let ya = seg_a.0.y;
    let yb = seg_b.0.y;
    let mut xs = vec![seg_a.0.x];
    xs.extend(cuts.iter().copied());
    xs.push(seg_a.1.x);
    let mut out = Vec::with_capacity(xs.len() - 1);
    for w in xs.windows(2) {
        out.push((
            (Point::new(w[0], ya), Point::new(w[1], ya)),
            (Point::new(w[0], yb), Point::new(w[1], yb)),
        ));
    }
    out
}

fn dsu_find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

fn dsu_union(parent: &mut [u32], a: u32, b: u32) {
    let ra = dsu_find(parent, a);
    let rb = dsu_find(parent, b);
    if ra != rb {
        parent[ra as usize] = rb;
    }
}

fn build_mesh(input: MeshInput) -> Result<GeodesicMesh> {
    let h = input.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParams(format!("mesh spacing h={h} must be positive")));
    }
    // Phase 1: per-chart raw vertices from canonical edge subdivisions.
    let mut raws: Vec<VertexEntry> = Vec::new();
    let mut reg: HashMap<(u32, u64, u64), u32> = HashMap::new();
    let mut memo: HashMap<(u32, u64, u64, u64, u64), Vec<u32>> = HashMap::new();
    let mut tri_pts: Vec<[Point; 3]> = Vec::new();
    let mut tri_chart: Vec<u32> = Vec::new();
    let mut tri_edge_keys: Vec<[(u32, u64, u64, u64, u64); 3]> = Vec::new();
    let mut tri_corners: Vec<[u32; 3]> = Vec::new();
    let mut chart_tris: Vec<(usize, usize)> = Vec::new();

    for (ci, (_, tris)) in input.charts.iter().enumerate() {
        let c = ci as u32;
        let t0 = tri_pts.len();
        for tri in tris {
            tri_pts.push(*tri);
            tri_chart.push(c);
            let mut keys = [(0u32, 0u64, 0u64, 0u64, 0u64); 3];
            for (e, (pa, pb)) in
                [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])].iter().enumerate()
            {
                let (s, t) = if lex_less(pa, pb) { (*pa, *pb) } else { (*pb, *pa) };
                let (kx0, ky0) = pkey(&s);
                let (kx1, ky1) = pkey(&t);
                let key = (c, kx0, ky0, kx1, ky1);
                keys[e] = key;
                if !memo.contains_key(&key) {
                    let len = (t - s).norm();
                    let m = subdiv_count(len, h);
                    let mut list = Vec::with_capacity(m + 1);
                    for k in 0..=m {
                        let pos = if k == 0 {
                            s
                        } else if k == m {
                            t
                        } else {
                            s + (t - s) * (k as f64 / m as f64)
                        };
                        let pk = pkey(&pos);
                        let id = *reg.entry((c, pk.0, pk.1)).or_insert_with(|| {
                            let host = (k != 0 && k != m).then_some((s, t));
                            raws.push((c, pos, host));
                            (raws.len() - 1) as u32
                        });
                        list.push(id);
                    }
                    memo.insert(key, list);
                }
            }
            tri_edge_keys.push(keys);
            let corner_id = |p: &Point| -> u32 {
                let pk = pkey(p);
                reg[&(c, pk.0, pk.1)]
            };
            tri_corners.push([corner_id(&tri[0]), corner_id(&tri[1]), corner_id(&tri[2])]);
        }
        chart_tris.push((t0, tri_pts.len()));
    }

    // Phase 2: identify glued boundary points index-by-index.
    let mut parent: Vec<u32> = (0..raws.len() as u32).collect();
    for g in &input.glues {
        let lookup = |c: u32, p0: &Point, p1: &Point| -> Result<(Vec<u32>, bool)> {
            let (s, t) = if lex_less(p0, p1) { (*p0, *p1) } else { (*p1, *p0) };
            let (kx0, ky0) = pkey(&s);
            let (kx1, ky1) = pkey(&t);
            let list = memo.get(&(c, kx0, ky0, kx1, ky1)).ok_or_else(|| {
                Error::InvalidParams(
                    "gluing segment is not an edge of the triangulation".into(),
                )
            })?;
            Ok((list.clone(), pkey(p0) != pkey(&s)))
        };
        let (la, rev_a) = lookup(g.ca, &g.a0, &g.a1)?;
        let (lb, rev_b) = lookup(g.cb, &g.b0, &g.b1)?;
        if la.len() != lb.len() {
            return Err(Error::InvalidParams(
                "glued edges received different subdivision counts".into(),
            ));
        }
        let m = la.len();
        for k in 0..m {
            let ia = la[if rev_a { m - 1 - k } else { k }];
            let ib = lb[if rev_b { m - 1 - k } else { k }];
            dsu_union(&mut parent, ia, ib);
        }
    }

    // Excluded segments: block every raw vertex on them.
    let mut blocked_raw = vec![false; raws.len()];
    for (c, e0, e1) in &input.excluded {
        for (r, (rc, pos, _)) in raws.iter().enumerate() {
            if rc == c && on_segment(pos, e0, e1, TOL) {
                blocked_raw[r] = true;
            }
        }
    }

    // Phase 3: compact to canonical ids.
    let nraw = raws.len();
    let mut root_cid = vec![u32::MAX; nraw];
    let mut cid_of = vec![u32::MAX; nraw];
    let mut entries: Vec<Vec<VertexEntry>> = Vec::new();
    let mut blocked: Vec<bool> = Vec::new();
    for r in 0..nraw as u32 {
        let root = dsu_find(&mut parent, r);
        if root_cid[root as usize] == u32::MAX {
            root_cid[root as usize] = entries.len() as u32;
            entries.push(Vec::new());
            blocked.push(false);
        }
        let cid = root_cid[root as usize];
        cid_of[r as usize] = cid;
        entries[cid as usize].push(raws[r as usize]);
        if blocked_raw[r as usize] {
            blocked[cid as usize] = true;
        }
    }

    // Phase 4: edges. Chains along subdivided triangle edges (deduplicated:
    // shared and glued edges generate identical chains), then per-triangle
    // cliques between different edges (unique by construction).
    let mut chains: Vec<(u32, u32, f64, u32)> = Vec::new();
    for (t, keys) in tri_edge_keys.iter().enumerate() {
        for key in keys {
            let list = &memo[key];
            for w2 in list.windows(2) {
                let (r0, r1) = (w2[0], w2[1]);
                let (c0, c1) = (cid_of[r0 as usize], cid_of[r1 as usize]);
                let weight = (raws[r1 as usize].1 - raws[r0 as usize].1).norm();
                let (lo, hi) = if c0 < c1 { (c0, c1) } else { (c1, c0) };
                chains.push((lo, hi, weight, t as u32));
            }
        }
    }
    chains.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    chains.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);

    let mut cliques: Vec<(u32, u32, f64, u32)> = Vec::new();
    for (t, keys) in tri_edge_keys.iter().enumerate() {
        let lists: [&Vec<u32>; 3] = [&memo[&keys[0]], &memo[&keys[1]], &memo[&keys[2]]];
        let interior = |l: &Vec<u32>| -> Vec<u32> {
            if l.len() > 2 { l[1..l.len() - 1].to_vec() } else { Vec::new() }
        };
        let ints: [Vec<u32>; 3] = [interior(lists[0]), interior(lists[1]), interior(lists[2])];
        for (ea, eb) in [(0usize, 1usize), (0, 2), (1, 2)] {
            for &ra in &ints[ea] {
                for &rb in &ints[eb] {
                    let w = (raws[ra as usize].1 - raws[rb as usize].1).norm();
                    cliques.push((cid_of[ra as usize], cid_of[rb as usize], w, t as u32));
                }
            }
        }
        // Corner k sits opposite edge (k+1): vertices are ordered so edge 0
        // is (v0, v1), edge 1 is (v1, v2), edge 2 is (v2, v0).
        let corners = tri_corners[t];
        for (k, &rc) in corners.iter().enumerate() {
            let opp = (k + 1) % 3;
            for &rb in &ints[opp] {
                let w = (raws[rc as usize].1 - raws[rb as usize].1).norm();
                cliques.push((cid_of[rc as usize], cid_of[rb as usize], w, t as u32));
            }
        }
    }

    // CSR assembly, skipping blocked endpoints.
    let nv = entries.len();
    let keep =
        |u: u32, v: u32| -> bool { !blocked[u as usize] && !blocked[v as usize] && u != v };
    let mut deg = vec![0usize; nv];
    let mut edge_count = 0usize;
    for &(u, v, _, _) in chains.iter().chain(cliques.iter()) {
        if keep(u, v) {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
            edge_count += 1;
        }
    }
    let mut csr_off = vec![0usize; nv + 1];
    for i in 0..nv {
        csr_off[i + 1] = csr_off[i] + deg[i];
    }
    let total = csr_off[nv];
    let mut cursor = csr_off[..nv].to_vec();
    let mut csr_to = vec![0u32; total];
    let mut csr_w = vec![0.0f64; total];
    let mut csr_label = vec![0u32; total];
    for &(u, v, w, label) in chains.iter().chain(cliques.iter()) {
        if keep(u, v) {
            for (x, y) in [(u, v), (v, u)] {
                let k = cursor[x as usize];
                csr_to[k] = y;
                csr_w[k] = w;
                csr_label[k] = label;
                cursor[x as usize] += 1;
            }
        }
    }

    // Per-triangle vertex lists (for query insertion) and snap index.
    let mut tri_verts: Vec<Vec<(u32, Point)>> = Vec::with_capacity(tri_pts.len());
    for keys in &tri_edge_keys {
        let mut vs: Vec<(u32, Point)> = Vec::new();
        for key in keys {
            for &r in &memo[key] {
                let cid = cid_of[r as usize];
                if !vs.iter().any(|&(c2, _)| c2 == cid) {
                    vs.push((cid, raws[r as usize].1));
                }
            }
        }
        tri_verts.push(vs);
    }
    let nch = input.charts.len();
    let mut snap_index: Vec<Vec<(Point, u32)>> = vec![Vec::new(); nch];
    for (cid, es) in entries.iter().enumerate() {
        for &(c, pos, _) in es {
            snap_index[c as usize].push((pos, cid as u32));
        }
    }

    Ok(GeodesicMesh {
        chart_ids: input.charts.iter().map(|(id, _)| *id).collect(),
        chart_tris,
        tri_pts,
        tri_chart,
        tri_verts,
        entries,
        blocked,
        snap_index,
        csr_off,
        csr_to,
        csr_w,
        csr_label,
        glues: input.glues,
        excluded_segs: input.excluded,
        h,
        edge_count,
    })
}

/// Cells (i, j) of the n×n polar grid crossed by the analytic sector
/// geodesic between p and q, as a run sequence. Pieces are straight chords
/// or tangent-arc-tangent wraps around the inner boundary; crossings with
/// grid circles and rays are solved exactly.
pub fn sector_path_cells(
    sec: &Sector,
    n: usize,
    p: &PolarPoint,
    q: &PolarPoint,
) -> Result<Vec<(u16, u16)>> {
    if !sec.contains(p, TOL) || !sec.contains(q, TOL) {
        return Err(Error::OutOfDomain("cell walk endpoints must lie in the sector".into()));
    }
    let r0 = sec.r0();
    let dr = sec.b() / n as f64;
    let dphi = sec.total_angle() / n as f64;
    // Sample points that land on a grid line (a path running exactly
    // along a ray or circle) are classified to the upper cell via a small
    // bias, so on-line runs read as one consistent cell instead of
    // round-off jitter between the two neighbours.
    let cell_of = |pt: &PolarPoint| -> (u16, u16) {
        let i = ((((pt.r - r0) / dr + 1e-9).floor()) as i64).clamp(0, n as i64 - 1) + 1;
        let j = (((pt.phi / dphi + 1e-9).floor()) as i64).clamp(0, n as i64 - 1) + 1;
        (i as u16, j as u16)
    };

    let (lo, hi) = if p.phi <= q.phi { (*p, *q) } else { (*q, *p) };
    let dphi_tot = hi.phi - lo.phi;
    let a_lo = (r0 / lo.r).clamp(-1.0, 1.0).acos();
    let a_hi = (r0 / hi.r).clamp(-1.0, 1.0).acos();

    enum Piece {
        Seg(Point, Point),
        Arc(f64, f64),
    }
    let pieces: Vec<Piece> = if dphi_tot > a_lo + a_hi {
        let t1 = lo.phi + a_lo;
        let t2 = hi.phi - a_hi;
        let tp1 = Point::new(r0 * t1.cos(), r0 * t1.sin());
        let tp2 = Point::new(r0 * t2.cos(), r0 * t2.sin());
        vec![
            Piece::Seg(polar_to_cart(&lo), tp1),
            Piece::Arc(t1, t2),
            Piece::Seg(tp2, polar_to_cart(&hi)),
        ]
    } else {
        vec![Piece::Seg(polar_to_cart(&lo), polar_to_cart(&hi))]
    };

    let mut cells: Vec<(u16, u16)> = Vec::new();
    let push = |c: (u16, u16), cells: &mut Vec<(u16, u16)>| {
        if cells.last() != Some(&c) {
            cells.push(c);
        }
    };
    for piece in &pieces {
        match piece {
            Piece::Seg(a, b) => {
                let v = b - a;
                let mut ts: Vec<f64> = vec![0.0, 1.0];
                // Crossings with interior grid circles r = r0 + (i−1)·dr.
                for i in 2..=n {
                    let r = r0 + (i as f64 - 1.0) * dr;
                    let aa = v.norm_squared();
                    let bb = 2.0 * a.coords.dot(&v);
                    let cc = a.coords.norm_squared() - r * r;
                    let disc = bb * bb - 4.0 * aa * cc;
                    if disc > 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-bb - sq) / (2.0 * aa), (-bb + sq) / (2.0 * aa)] {
                            if t > 1e-12 && t < 1.0 - 1e-12 {
                                ts.push(t);
                            }
                        }
                    }
                }
                // Crossings with interior grid rays φ = (j−1)·dφ.
                for j in 2..=n {
                    let phi = (j as f64 - 1.0) * dphi;
                    let d = nalgebra::Vector2::new(phi.cos(), phi.sin());
                    let f0 = d.x * a.y - d.y * a.x;
                    let f1 = d.x * b.y - d.y * b.x;
                    if (f0 - f1).abs() > 1e-15 {
                        let t = f0 / (f0 - f1);
                        if t > 1e-12 && t < 1.0 - 1e-12 {
                            ts.push(t);
                        }
                    }
                }
                ts.sort_by(f64::total_cmp);
                for w in ts.windows(2) {
                    if w[1] - w[0] > 1e-12 {
                        let mid = a + v * ((w[0] + w[1]) / 2.0);
                        push(cell_of(&geom::cart_to_polar(&mid)), &mut cells);
                    }
                }
            }
            Piece::Arc(phi_a, phi_b) => {
                let mut ps = vec![*phi_a];
                for j in 2..=n {
                    let phi = (j as f64 - 1.0) * dphi;
                    if phi > phi_a + 1e-12 && phi < phi_b - 1e-12 {
                        ps.push(phi);
                    }
                }
                ps.push(*phi_b);
                for w in ps.windows(2) {
                    let mid = (w[0] + w[1]) / 2.0;
                    push(cell_of(&PolarPoint::new(r0, mid)), &mut cells);
                }
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{BlockParams, Corner};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_6;

    fn standard_block() -> Block {
        Block::new(BlockParams::new(1.0, 1.0, FRAC_PI_6, 0.1)).unwrap()
    }

    #[test]
    fn flat_block_mesh_matches_euclidean() {
        let blk = Block::new(BlockParams::new(1.0, 1.0, FRAC_PI_6, 0.0)).unwrap();
        let mesh = GeodesicMesh::for_block(&blk, &MeshConfig::new(0.05)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = BlockPoint::new(Hexagon::First, rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
            let q = BlockPoint::new(Hexagon::Second, rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
            let exact = blk.distance(&p, &q).unwrap();
            let path = mesh
                .shortest_path(&block_query(&blk, &p), &block_query(&blk, &q), true)
                .unwrap();
            assert!(path.graph_length >= exact - 1e-9);
            assert!(path.graph_length <= exact + 3.0 * 0.05);
            let refined = path.refined_length.unwrap();
            assert!(refined >= exact - 1e-9 && refined <= exact + 0.01);
        }
    }

    #[test]
    fn block_mesh_agrees_with_exact_distance() {
        let blk = standard_block();
        let mesh = GeodesicMesh::for_block(&blk, &MeshConfig::new(0.02)).unwrap();
        let pairs = [
            (Corner::C, Corner::D, 1.1),
            (Corner::A, Corner::B, 1.0),
            (Corner::A, Corner::C, 1.415541250273294),
        ];
        for &(cp, cq, exact) in &pairs {
            let p = blk.corner(cp);
            let q = blk.corner(cq);
            let path = mesh
                .shortest_path(&block_query(&blk, &p), &block_query(&blk, &q), true)
                .unwrap();
            assert!(path.graph_length >= exact - 1e-9, "graph below exact for {cp:?}-{cq:?}");
            assert!(path.graph_length <= exact + 3.0 * 0.02);
            let refined = path.refined_length.unwrap();
            assert!(refined >= exact - 1e-9 && refined <= exact + 0.005, "refined {refined} vs {exact}");
        }
    }

    #[test]
    fn random_pairs_graph_dominates_exact() {
        let blk = standard_block();
        let mesh = GeodesicMesh::for_block(&blk, &MeshConfig::new(0.03)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..15 {
            let sample = |rng: &mut ChaCha8Rng| {
                let hexagon = if rng.random_bool(0.5) { Hexagon::First } else { Hexagon::Second };
                let x: f64 = rng.random_range(0.0..1.0);
                let y = rng.random_range(0.0..1.0) * blk.upper_boundary(x);
                BlockPoint::new(hexagon, x, y)
            };
            let p = sample(&mut rng);
            let q = sample(&mut rng);
            let exact = blk.distance(&p, &q).unwrap();
            let path = mesh
                .shortest_path(&block_query(&blk, &p), &block_query(&blk, &q), true)
                .unwrap();
            assert!(path.graph_length >= exact - 1e-9);
            assert!(path.graph_length <= exact + 3.0 * 0.03 + 1e-9);
            let refined = path.refined_length.unwrap();
            assert!(refined >= exact - 1e-9 && refined <= path.graph_length + 1e-12);
        }
    }

    #[test]
    fn excluding_the_defect_forces_detours() {
        let blk = standard_block();
        let p = BlockPoint::new(Hexagon::First, 0.5, 0.51);
        let q = BlockPoint::new(Hexagon::Second, 0.5, 0.51);
        let full = GeodesicMesh::for_block(&blk, &MeshConfig::new(0.02)).unwrap();
        let cfg = MeshConfig { h: 0.02, exclude_defect: true };
        let smooth = GeodesicMesh::for_block(&blk, &cfg).unwrap();
        let d_full = full
            .shortest_path(&block_query(&blk, &p), &block_query(&blk, &q), true)
            .unwrap()
            .length();
        let d_smooth = smooth
            .shortest_path(&block_query(&blk, &p), &block_query(&blk, &q), true)
            .unwrap()
            .length();
        assert!(d_full < 0.05, "direct crossing should be short, got {d_full}");
        assert!(d_smooth > d_full + 0.04, "detour {d_smooth} vs direct {d_full}");
        // Querying a point on the excluded segment errors.
        let mid = BlockPoint::new(Hexagon::First, 0.5, blk.upper_boundary(0.5));
        assert!(smooth
            .distance(&block_query(&blk, &mid), &block_query(&blk, &q))
            .is_err());
    }

    #[test]
    fn sector_mesh_matches_analytic() {
        let sec = Sector::new(1.0, 1.0, 0.5).unwrap();
        let mesh = GeodesicMesh::for_sector(&sec, &MeshConfig::new(0.01)).unwrap();
        // Wrap around the inner boundary.
        let p = PolarPoint::new(2.0, 0.02);
        let q = PolarPoint::new(2.0, 0.48);
        let exact = sec.distance(&p, &q).unwrap();
        assert_relative_eq!(exact, 2.0 * 0.46, epsilon = 1e-12);
        let path = mesh.shortest_path(&sector_query(&p), &sector_query(&q), true).unwrap();
        // Inner-boundary chords let the graph undercut the arc length by
        // O(chord-sagitta), so allow a small two-sided band.
        assert!(path.graph_length >= exact - 1e-3);
        assert!(path.graph_length <= exact + 0.03);
        let refined = path.refined_length.unwrap();
        assert!(refined >= exact - 1e-3 && refined <= exact + 0.01);
        // Clear chord.
        let p = PolarPoint::new(2.9, 0.05);
        let q = PolarPoint::new(2.9, 0.45);
        let exact = sec.distance(&p, &q).unwrap();
        assert_relative_eq!(exact, 2.0 * 2.9 * (0.2f64).sin(), epsilon = 1e-12);
        let path = mesh.shortest_path(&sector_query(&p), &sector_query(&q), true).unwrap();
        assert!(path.graph_length >= exact - 1e-6 && path.graph_length <= exact + 0.03);
    }

    #[test]
    fn surface_mesh_net_matrix_smoke() {
        let surf = Surface::new(1.0, 1.0, FRAC_PI_6, 0.1, 2).unwrap();
        let mesh = GeodesicMesh::for_surface(&surf, &MeshConfig::new(0.02)).unwrap();
        let queries: Vec<SurfacePoint> = surf.net_vertices();
        let m = mesh.distance_matrix(&queries, false).unwrap();
        let k = queries.len();
        assert_eq!(k, 9);
        for i in 0..k {
            assert_eq!(m[i][i], 0.0);
            for j in 0..k {
                assert!((m[i][j] - m[j][i]).abs() < 1e-12, "asymmetry at ({i},{j})");
                assert!(m[i][j].is_finite());
                for l in 0..k {
                    assert!(m[i][j] <= m[i][l] + m[l][j] + 1e-9);
                }
            }
        }
        // Adjacent net vertices along the bottom row: the cell width.
        let idx = |i: usize, j: usize| (i - 1) * 3 + (j - 1);
        let d = m[idx(1, 1)][idx(2, 1)];
        assert!((d - 0.5).abs() <= 3.0 * 0.02, "radial neighbor distance {d}");
        let d = m[idx(1, 1)][idx(1, 2)];
        assert!((d - 0.5).abs() <= 3.0 * 0.02, "angular neighbor distance {d}");
        // A far pair crosses at most 3n cells.
        let path = mesh.shortest_path(&queries[idx(1, 1)], &queries[idx(3, 3)], false).unwrap();
        let distinct: std::collections::HashSet<_> = path.cells.iter().collect();
        assert!(distinct.len() <= 6, "cells {:?}", path.cells);
    }

    #[test]
    fn too_coarse_spacing_is_rejected() {
        let blk = standard_block();
        assert!(matches!(
            GeodesicMesh::for_block(&blk, &MeshConfig::new(0.2)),
            Err(Error::MeshTooCoarse { .. })
        ));
    }

    #[test]
    fn construction_is_deterministic() {
        let blk = standard_block();
        let m1 = GeodesicMesh::for_block(&blk, &MeshConfig::new(0.04)).unwrap();
        let m2 = GeodesicMesh::for_block(&blk, &MeshConfig::new(0.04)).unwrap();
        assert_eq!(m1.vertex_count(), m2.vertex_count());
        assert_eq!(m1.edge_count(), m2.edge_count());
        let p = block_query(&blk, &blk.corner(Corner::A));
        let q = block_query(&blk, &blk.corner(Corner::C));
        let d1 = m1.distance(&p, &q).unwrap();
        let d2 = m2.distance(&p, &q).unwrap();
        assert_eq!(d1.to_bits(), d2.to_bits());
    }

    #[test]
    fn sector_cell_walk_examples() {
        let sec = Sector::new(1.0, 1.0, 0.1).unwrap();
        // Radial path stays in one angular row and crosses all columns.
        let cells =
            sector_path_cells(&sec, 4, &PolarPoint::new(10.0, 0.012), &PolarPoint::new(11.0, 0.012))
                .unwrap();
        assert_eq!(cells, vec![(1, 1), (2, 1), (3, 1), (4, 1)]);
        // Wrap path along the inner boundary visits the first column's rows.
        let cells =
            sector_path_cells(&sec, 2, &PolarPoint::new(10.0, 0.001), &PolarPoint::new(10.0, 0.099))
                .unwrap();
        assert_eq!(cells.first(), Some(&(1, 1)));
        assert_eq!(cells.last(), Some(&(1, 2)));
    }
}
