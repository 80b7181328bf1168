//! Locally modified finite element meshes.
//!
//! A fixed coarse patch grid covers a bounding box that contains the physical
//! domain. Patches cut by the (implicitly given) boundary are subdivided into
//! eight triangles so that the boundary is resolved by a chord polygon; uncut
//! patches are subdivided into four quadrilaterals. Cells falling outside the
//! domain are dropped. Cells of cut patches are tagged anisotropic, everything
//! else is regular; edges are classified accordingly and carry the geometric
//! weights (normal cell size `h_n = |K|/|e|`, tangential length `h_tau = |e|`)
//! used by the pressure stabilisation.

use std::collections::HashMap;

use crate::error::MeshError;

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0,x1] x [y0,y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// The `[-1,1]^2` box used by both numerical examples.
    pub fn unit_centered() -> Self {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Regular coarse grid of `nx x ny` rectangular patches over `bbox`.
///
/// Each patch carries nine nodes (corners, edge midpoints, centre); `H` is the
/// larger patch side.
#[derive(Debug, Clone)]
pub struct PatchMesh {
    pub nx: usize,
    pub ny: usize,
    pub bbox: Rect,
    /// Patch size: max of the two patch side lengths.
    pub h: f64,
}

/// Build the coarse patch grid.
pub fn build_patch_mesh(nx: usize, ny: usize, bbox: Rect) -> Result<PatchMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument("patch counts must be >= 1".into()));
    }
    if !(bbox.width() > 0.0) || !(bbox.height() > 0.0) {
        return Err(MeshError::InvalidArgument("degenerate bounding box".into()));
    }
    let h = (bbox.width() / nx as f64).max(bbox.height() / ny as f64);
    Ok(PatchMesh { nx, ny, bbox, h })
}

impl PatchMesh {
    pub fn patch_rect(&self, i: usize, j: usize) -> Rect {
        let dx = self.bbox.width() / self.nx as f64;
        let dy = self.bbox.height() / self.ny as f64;
        Rect::new(
            self.bbox.x0 + i as f64 * dx,
            self.bbox.y0 + j as f64 * dy,
            self.bbox.x0 + (i + 1) as f64 * dx,
            self.bbox.y0 + (j + 1) as f64 * dy,
        )
    }
}

/// Implicit description of the physical boundary as the zero set of a level
/// function, negative inside the domain.
pub trait ImplicitBoundary {
    fn phi(&self, x: f64, y: f64) -> f64;

    /// Crossing parameter of the zero level on the segment `p -> q`, assuming
    /// `phi` changes sign between the endpoints. The default does bisection;
    /// analytic boundaries should override with the exact root.
    fn edge_root(&self, p: Point, q: Point) -> f64 {
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let eval = |t: f64| {
            self.phi(p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))
        };
        let mut fa = eval(a);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let fm = eval(m);
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// Circular boundary. With `fluid_outside` the domain is the exterior of the
/// circle (the Example-2 geometry: a disk extracted from the square).
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub fluid_outside: bool,
}

impl Circle {
    pub fn hole(cx: f64, cy: f64, r: f64) -> Self {
        Circle { cx, cy, r, fluid_outside: true }
    }
}

impl ImplicitBoundary for Circle {
    fn phi(&self, x: f64, y: f64) -> f64 {
        let d = ((x - self.cx).powi(2) + (y - self.cy).powi(2)).sqrt() - self.r;
        if self.fluid_outside {
            -d
        } else {
            d
        }
    }

    fn edge_root(&self, p: Point, q: Point) -> f64 {
        // exact circle-segment intersection; pick the root consistent with the
        // sign change direction
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let (fx, fy) = (p[0] - self.cx, p[1] - self.cy);
        let a = dx * dx + dy * dy;
        let b = 2.0 * (fx * dx + fy * dy);
        let c = fx * fx + fy * fy - self.r * self.r;
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            // sign change without a real intersection only happens through
            // rounding at a tangency; fall back to bisection
            return ImplicitBoundary::edge_root(&DefaultRoot(self), p, q);
        }
        let s = disc.sqrt();
        let t1 = (-b - s) / (2.0 * a);
        let t2 = (-b + s) / (2.0 * a);
        let inside: Vec<f64> = [t1, t2].into_iter().filter(|t| (0.0..=1.0).contains(t)).collect();
        match inside.len() {
            1 => inside[0],
            2 => {
                // p outside the circle: the first root is where the segment enters
                if c > 0.0 {
                    inside[0]
                } else {
                    inside[1]
                }
            }
            _ => ImplicitBoundary::edge_root(&DefaultRoot(self), p, q),
        }
    }
}

/// Helper to reach the default bisection root from a specialised impl.
struct DefaultRoot<'a>(&'a Circle);

impl ImplicitBoundary for DefaultRoot<'_> {
    fn phi(&self, x: f64, y: f64) -> f64 {
        self.0.phi(x, y)
    }
}

/// Where a patch is cut, after snapping near-vertex intersections.
///
/// Edges are numbered 0 bottom, 1 right, 2 top, 3 left; cut parameters run
/// left-to-right on horizontal edges and bottom-to-top on vertical ones.
/// Corners are numbered 0..4 counter-clockwise from the lower left.
#[derive(Debug, Clone, PartialEq)]
pub enum CutPattern {
    /// Boundary misses the patch (or touches it in a set of measure zero).
    None,
    /// Two opposite edges cut.
    Opposite { edges: [usize; 2], params: [f64; 2] },
    /// Two adjacent edges cut; the chord separates one corner.
    Adjacent { edges: [usize; 2], params: [f64; 2] },
    /// Boundary through one corner and one edge interior.
    VertexEdge { corner: usize, edge: usize, param: f64 },
    /// Boundary through two diagonally opposite corners.
    VertexVertex { corners: [usize; 2] },
    /// Degenerate: the chord coincides with a patch edge.
    EdgeChord { edge: usize },
    /// Degenerate: the boundary only touches a single corner.
    VertexTouch { corner: usize },
}

impl CutPattern {
    /// A pattern that produces the eight-triangle subdivision.
    pub fn is_proper_cut(&self) -> bool {
        matches!(
            self,
            CutPattern::Opposite { .. }
                | CutPattern::Adjacent { .. }
                | CutPattern::VertexEdge { .. }
                | CutPattern::VertexVertex { .. }
        )
    }
}

fn corner_of_edges(e1: usize, e2: usize) -> usize {
    // corner shared by two adjacent edges (edges 0..4 as above)
    match (e1.min(e2), e1.max(e2)) {
        (0, 1) => 1,
        (1, 2) => 2,
        (2, 3) => 3,
        (0, 3) => 0,
        _ => unreachable!("not an adjacent edge pair"),
    }
}

/// Classify how the boundary cuts a single patch.
///
/// `snap_tol` is relative to the edge length: intersection parameters within
/// it of 0 or 1 are snapped onto the patch corner.
pub fn cut_patch(
    patch: Rect,
    boundary: &dyn ImplicitBoundary,
    snap_tol: f64,
) -> Result<CutPattern, MeshError> {
    let corners = [
        [patch.x0, patch.y0],
        [patch.x1, patch.y0],
        [patch.x1, patch.y1],
        [patch.x0, patch.y1],
    ];
    // (start corner, end corner) per edge, oriented along increasing parameter
    let edges = [(0usize, 1usize), (1, 2), (3, 2), (0, 3)];
    let phi: Vec<f64> = corners.iter().map(|c| boundary.phi(c[0], c[1])).collect();

    let mut interior: Vec<(usize, f64)> = Vec::new();
    let mut vertex_cuts: Vec<usize> = Vec::new();
    for (e, &(a, b)) in edges.iter().enumerate() {
        if (phi[a] < 0.0) == (phi[b] < 0.0) {
            continue;
        }
        let mut t = boundary.edge_root(corners[a], corners[b]);
        if t < snap_tol {
            t = 0.0;
        } else if t > 1.0 - snap_tol {
            t = 1.0;
        }
        if t == 0.0 {
            vertex_cuts.push(a);
        } else if t == 1.0 {
            vertex_cuts.push(b);
        } else {
            interior.push((e, t));
        }
    }
    vertex_cuts.sort_unstable();
    vertex_cuts.dedup();

    match (interior.len(), vertex_cuts.len()) {
        (0, 0) => Ok(CutPattern::None),
        (0, 1) => Ok(CutPattern::VertexTouch { corner: vertex_cuts[0] }),
        (0, 2) => {
            let (c1, c2) = (vertex_cuts[0], vertex_cuts[1]);
            if (c1 + 2) % 4 == c2 % 4 {
                Ok(CutPattern::VertexVertex { corners: [c1, c2] })
            } else {
                // adjacent corners: the chord runs along the connecting edge
                let edge = match (c1, c2) {
                    (0, 1) => 0,
                    (1, 2) => 1,
                    (2, 3) => 2,
                    (0, 3) => 3,
                    _ => unreachable!(),
                };
                Ok(CutPattern::EdgeChord { edge })
            }
        }
        (1, 1) => Ok(CutPattern::VertexEdge {
            corner: vertex_cuts[0],
            edge: interior[0].0,
            param: interior[0].1,
        }),
        (2, 0) => {
            let (e1, t1) = interior[0];
            let (e2, t2) = interior[1];
            if (e1, e2) == (0, 2) || (e1, e2) == (1, 3) {
                Ok(CutPattern::Opposite { edges: [e1, e2], params: [t1, t2] })
            } else {
                Ok(CutPattern::Adjacent { edges: [e1, e2], params: [t1, t2] })
            }
        }
        _ => Err(MeshError::UnsupportedCut {
            interior: interior.len(),
            vertex: vertex_cuts.len(),
        }),
    }
}

/// Geometry of one subdivided cell, before global vertex numbering.
#[derive(Debug, Clone)]
pub enum LocalCell {
    Tri([Point; 3]),
    Quad([Point; 4]),
}

impl LocalCell {
    pub fn points(&self) -> &[Point] {
        match self {
            LocalCell::Tri(p) => p,
            LocalCell::Quad(p) => p,
        }
    }

    pub fn area(&self) -> f64 {
        polygon_area(self.points())
    }

    pub fn centroid(&self) -> Point {
        let pts = self.points();
        let n = pts.len() as f64;
        [
            pts.iter().map(|p| p[0]).sum::<f64>() / n,
            pts.iter().map(|p| p[1]).sum::<f64>() / n,
        ]
    }
}

pub fn polygon_area(pts: &[Point]) -> f64 {
    let mut s = 0.0;
    for i in 0..pts.len() {
        let p = pts[i];
        let q = pts[(i + 1) % pts.len()];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Maximum interior angle of a triangle, in degrees.
pub fn max_interior_angle(tri: &[Point; 3]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let c = tri[(i + 2) % 3];
        let v1 = [b[0] - a[0], b[1] - a[1]];
        let v2 = [c[0] - a[0], c[1] - a[1]];
        let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
        let n2 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
        if n1 == 0.0 || n2 == 0.0 {
            return 180.0;
        }
        let cosv = ((v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)).clamp(-1.0, 1.0);
        worst = worst.max(cosv.acos().to_degrees());
    }
    worst
}

fn ccw_tri(a: Point, b: Point, c: Point) -> [Point; 3] {
    if tri_area(a, b, c) >= 0.0 {
        [a, b, c]
    } else {
        [a, c, b]
    }
}

/// Split a quad (ccw) into two triangles by the diagonal that minimises the
/// maximum interior angle. Angle ties are broken by the shorter diagonal so
/// that the choice commutes with reflections of the patch (mirror-symmetric
/// boundaries then produce mirror-symmetric meshes); remaining exact ties
/// fall back to diagonal 0-2.
fn split_quad_best(q: [Point; 4]) -> [[Point; 3]; 2] {
    let d0 = [[q[0], q[1], q[2]], [q[0], q[2], q[3]]];
    let d1 = [[q[0], q[1], q[3]], [q[1], q[2], q[3]]];
    let score = |tris: &[[Point; 3]; 2]| -> f64 {
        if tris.iter().any(|t| tri_area(t[0], t[1], t[2]) <= 0.0) {
            return f64::INFINITY;
        }
        tris.iter().map(|t| max_interior_angle(t)).fold(0.0, f64::max)
    };
    let (s0, s1) = (score(&d0), score(&d1));
    let tol = 1e-9;
    if (s0 - s1).abs() > tol {
        return if s1 < s0 { d1 } else { d0 };
    }
    let l0 = dist(q[0], q[2]);
    let l1 = dist(q[1], q[3]);
    if (l0 - l1).abs() > tol * l0.max(l1) {
        if l1 < l0 {
            return d1;
        }
    }
    d0
}

/// Subdivide one patch according to its cut pattern.
///
/// Uncut patches become four congruent quadrilaterals on the nine patch nodes.
/// Cut patches become eight positively oriented triangles whose union is the
/// patch and whose edges contain the chord between the intersection points.
pub fn subdivide_patch(patch: Rect, pattern: &CutPattern) -> Result<Vec<LocalCell>, MeshError> {
    let (x, y) = (patch.x0, patch.y0);
    let (hx, hy) = (patch.width(), patch.height());
    let corners = [
        [x, y],
        [x + hx, y],
        [x + hx, y + hy],
        [x, y + hy],
    ];
    let edge_point = |e: usize, t: f64| -> Point {
        match e {
            0 => [x + t * hx, y],
            1 => [x + hx, y + t * hy],
            2 => [x + t * hx, y + hy],
            3 => [x, y + t * hy],
            _ => unreachable!(),
        }
    };
    let mids = [
        edge_point(0, 0.5),
        edge_point(1, 0.5),
        edge_point(2, 0.5),
        edge_point(3, 0.5),
    ];
    let centre = [x + 0.5 * hx, y + 0.5 * hy];

    // boundary node cycle: c00, B, c10, R, c11, T, c01, L
    let cycle = |nodes: &[Point; 4]| -> [Point; 8] {
        [
            corners[0], nodes[0], corners[1], nodes[1], corners[2], nodes[2], corners[3], nodes[3],
        ]
    };

    let four_quads = || -> Vec<LocalCell> {
        vec![
            LocalCell::Quad([corners[0], mids[0], centre, mids[3]]),
            LocalCell::Quad([mids[0], corners[1], mids[1], centre]),
            LocalCell::Quad([centre, mids[1], corners[2], mids[2]]),
            LocalCell::Quad([mids[3], centre, mids[2], corners[3]]),
        ]
    };

    let cells = match pattern {
        CutPattern::None | CutPattern::EdgeChord { .. } | CutPattern::VertexTouch { .. } => {
            four_quads()
        }
        CutPattern::Opposite { edges, params } => {
            let mut nodes = mids;
            nodes[edges[0]] = edge_point(edges[0], params[0]);
            nodes[edges[1]] = edge_point(edges[1], params[1]);
            let a = nodes[edges[0]];
            let b = nodes[edges[1]];
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let quadrants = [
                [corners[0], nodes[0], m, nodes[3]],
                [nodes[0], corners[1], nodes[1], m],
                [m, nodes[1], corners[2], nodes[2]],
                [nodes[3], m, nodes[2], corners[3]],
            ];
            let mut tris = Vec::with_capacity(8);
            for q in quadrants {
                for t in split_quad_best(q) {
                    tris.push(LocalCell::Tri(t));
                }
            }
            tris
        }
        CutPattern::Adjacent { edges, params } => {
            let mut nodes = mids;
            nodes[edges[0]] = edge_point(edges[0], params[0]);
            nodes[edges[1]] = edge_point(edges[1], params[1]);
            let corner = corner_of_edges(edges[0], edges[1]);
            let opposite = corners[(corner + 2) % 4];
            let a = nodes[edges[0]];
            let b = nodes[edges[1]];
            let chord_mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            // interior node halfway between the chord and the far corner keeps
            // all star triangles inside the maximum angle bound
            let m = [
                0.5 * (chord_mid[0] + opposite[0]),
                0.5 * (chord_mid[1] + opposite[1]),
            ];
            let cyc = cycle(&nodes);
            let corner_pos = 2 * corner; // corners sit at even cycle positions
            let mut tris = Vec::with_capacity(8);
            tris.push(LocalCell::Tri(ccw_tri(a, corners[corner], b)));
            let ring: Vec<Point> = (1..8).map(|k| cyc[(corner_pos + k) % 8]).collect();
            for w in ring.windows(2) {
                tris.push(LocalCell::Tri(ccw_tri(m, w[0], w[1])));
            }
            tris.push(LocalCell::Tri(ccw_tri(m, ring[6], ring[0])));
            tris
        }
        CutPattern::VertexEdge { corner, edge, param } => {
            let mut nodes = mids;
            nodes[*edge] = edge_point(*edge, *param);
            let a = corners[*corner];
            let b = nodes[*edge];
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let cyc = cycle(&nodes);
            let mut tris = Vec::with_capacity(8);
            for k in 0..8 {
                tris.push(LocalCell::Tri(ccw_tri(m, cyc[k], cyc[(k + 1) % 8])));
            }
            tris
        }
        CutPattern::VertexVertex { .. } => {
            let cyc = cycle(&mids);
            let mut tris = Vec::with_capacity(8);
            for k in 0..8 {
                tris.push(LocalCell::Tri(ccw_tri(centre, cyc[k], cyc[(k + 1) % 8])));
            }
            tris
        }
    };

    let patch_area = hx * hy;
    for c in &cells {
        if c.area() <= 1e-14 * patch_area {
            return Err(MeshError::DegenerateCell);
        }
    }
    Ok(cells)
}

/// Cell region tag following the Example-2 convention: every cell of a cut
/// patch is anisotropic, every cell of an uncut patch is regular.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Regular,
    Aniso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Triangle,
    Quad,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub kind: CellKind,
    verts: [usize; 4],
    pub region: Region,
    /// Index of the owning patch in the coarse grid, row-major.
    pub patch: usize,
}

impl Cell {
    pub fn vertices(&self) -> &[usize] {
        match self.kind {
            CellKind::Triangle => &self.verts[..3],
            CellKind::Quad => &self.verts,
        }
    }

    pub fn nv(&self) -> usize {
        match self.kind {
            CellKind::Triangle => 3,
            CellKind::Quad => 4,
        }
    }
}

/// Boundary segment tags assigned to boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    OuterLeft,
    OuterRight,
    OuterBottom,
    OuterTop,
    /// Chord polygon approximating the implicit boundary.
    Interface,
}

impl BoundaryTag {
    /// Priority order used when a vertex carries several tags.
    pub const ALL: [BoundaryTag; 5] = [
        BoundaryTag::OuterLeft,
        BoundaryTag::OuterBottom,
        BoundaryTag::OuterTop,
        BoundaryTag::OuterRight,
        BoundaryTag::Interface,
    ];

    pub fn bit(self) -> u8 {
        match self {
            BoundaryTag::OuterLeft => 1,
            BoundaryTag::OuterRight => 2,
            BoundaryTag::OuterBottom => 4,
            BoundaryTag::OuterTop => 8,
            BoundaryTag::Interface => 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    /// Between two regular interior cells.
    Regular,
    /// Edge of at least one anisotropic cell.
    Aniso,
    /// Boundary edge of a regular cell; carries no stabilisation.
    BoundaryExterior,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub v: [usize; 2],
    /// Adjacent cell ids; boundary edges have one.
    pub cells: (usize, Option<usize>),
    pub class: EdgeClass,
    /// `|K|/|e|` per adjacent cell.
    pub h_n: (f64, Option<f64>),
    /// Edge length.
    pub h_tau: f64,
    pub boundary: Option<BoundaryTag>,
    /// True if the edge lies on the coarse patch grid (between two patches or
    /// on the outer boundary).
    pub outer_patch_edge: bool,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// Conforming mixed triangle/quad mesh with edge classification.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    /// Patch size of the generating grid.
    pub h_patch: f64,
    /// Maximum edge length, the `H` entering the stabilisation weights.
    pub h_max_edge: f64,
    pub area_regular: f64,
    pub area_aniso: f64,
    /// Per-cell area (cached).
    pub cell_areas: Vec<f64>,
    /// Per-cell shortest edge length (cached, used by `h_tilde_min`).
    pub cell_min_edge: Vec<f64>,
    /// vertex -> incident cells
    pub vertex_cells: Vec<Vec<usize>>,
    /// vertex on the discrete boundary?
    pub vertex_boundary: Vec<Option<BoundaryTag>>,
    /// bitmask of all boundary tags incident to each vertex
    pub vertex_tags: Vec<u8>,
}

impl Mesh {
    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].vertices().iter().map(|&v| self.vertices[v]).collect()
    }

    /// `h~_min`: shortest edge for anisotropic cells, `H` for regular ones.
    pub fn h_tilde_min(&self, c: usize) -> f64 {
        match self.cells[c].region {
            Region::Aniso => self.cell_min_edge[c],
            Region::Regular => self.h_max_edge,
        }
    }
}

struct MeshBuilder {
    vertices: Vec<Point>,
    lookup: HashMap<(u64, u64), usize>,
    cells: Vec<Cell>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder { vertices: Vec::new(), lookup: HashMap::new(), cells: Vec::new() }
    }

    fn vertex(&mut self, p: Point) -> usize {
        // cut points are computed once per grid edge, so bit-exact keys suffice
        let key = (p[0].to_bits(), p[1].to_bits());
        *self.lookup.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    fn push_cell(&mut self, cell: &LocalCell, region: Region, patch: usize) {
        let pts = cell.points();
        let mut verts = [0usize; 4];
        for (k, p) in pts.iter().enumerate() {
            verts[k] = self.vertex(*p);
        }
        let kind = if pts.len() == 3 { CellKind::Triangle } else { CellKind::Quad };
        self.cells.push(Cell { kind, verts, region, patch });
    }

    fn finish(self, h_patch: f64, bbox: Rect) -> Mesh {
        let MeshBuilder { vertices, cells, .. } = self;
        let mut edge_map: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (ci, cell) in cells.iter().enumerate() {
            let vs = cell.vertices();
            for le in 0..vs.len() {
                let a = vs[le];
                let b = vs[(le + 1) % vs.len()];
                let key = (a.min(b), a.max(b));
                edge_map.entry(key).or_default().push((ci, le));
            }
        }
        let cell_areas: Vec<f64> = cells
            .iter()
            .map(|c| {
                let pts: Vec<Point> = c.vertices().iter().map(|&v| vertices[v]).collect();
                polygon_area(&pts).abs()
            })
            .collect();
        let cell_min_edge: Vec<f64> = cells
            .iter()
            .map(|c| {
                let vs = c.vertices();
                (0..vs.len())
                    .map(|k| dist(vertices[vs[k]], vertices[vs[(k + 1) % vs.len()]]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();

        let eps = 1e-10 * h_patch;
        let boundary_tag = |a: Point, b: Point| -> BoundaryTag {
            if (a[0] - bbox.x0).abs() < eps && (b[0] - bbox.x0).abs() < eps {
                BoundaryTag::OuterLeft
            } else if (a[0] - bbox.x1).abs() < eps && (b[0] - bbox.x1).abs() < eps {
                BoundaryTag::OuterRight
            } else if (a[1] - bbox.y0).abs() < eps && (b[1] - bbox.y0).abs() < eps {
                BoundaryTag::OuterBottom
            } else if (a[1] - bbox.y1).abs() < eps && (b[1] - bbox.y1).abs() < eps {
                BoundaryTag::OuterTop
            } else {
                BoundaryTag::Interface
            }
        };

        let mut edges = Vec::with_capacity(edge_map.len());
        let mut keys: Vec<(usize, usize)> = edge_map.keys().copied().collect();
        keys.sort_unstable();
        let mut h_max_edge = 0.0f64;
        for key in keys {
            let adj = &edge_map[&key];
            let (a, b) = key;
            let h_tau = dist(vertices[a], vertices[b]);
            h_max_edge = h_max_edge.max(h_tau);
            let c1 = adj[0].0;
            let c2 = adj.get(1).map(|&(c, _)| c);
            let h_n1 = cell_areas[c1] / h_tau;
            let h_n2 = c2.map(|c| cell_areas[c] / h_tau);
            let any_aniso = std::iter::once(c1)
                .chain(c2)
                .any(|c| cells[c].region == Region::Aniso);
            let boundary = if c2.is_none() {
                Some(boundary_tag(vertices[a], vertices[b]))
            } else {
                None
            };
            let class = if any_aniso {
                EdgeClass::Aniso
            } else if c2.is_some() {
                EdgeClass::Regular
            } else {
                EdgeClass::BoundaryExterior
            };
            let outer = match c2 {
                Some(c2) => cells[c1].patch != cells[c2].patch,
                None => boundary != Some(BoundaryTag::Interface),
            };
            edges.push(Edge {
                v: [a, b],
                cells: (c1, c2),
                class,
                h_n: (h_n1, h_n2),
                h_tau,
                boundary,
                outer_patch_edge: outer,
            });
        }

        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for (ci, cell) in cells.iter().enumerate() {
            for &v in cell.vertices() {
                vertex_cells[v].push(ci);
            }
        }
        let mut vertex_tags = vec![0u8; vertices.len()];
        for e in &edges {
            if let Some(tag) = e.boundary {
                for &v in &e.v {
                    vertex_tags[v] |= tag.bit();
                }
            }
        }
        // representative tag with a fixed priority so corner vertices resolve
        // independently of edge iteration order (outer tags before interface)
        let vertex_boundary: Vec<Option<BoundaryTag>> = vertex_tags
            .iter()
            .map(|&mask| BoundaryTag::ALL.iter().copied().find(|t| mask & t.bit() != 0))
            .collect();

        let mut area_regular = 0.0;
        let mut area_aniso = 0.0;
        for (ci, cell) in cells.iter().enumerate() {
            match cell.region {
                Region::Regular => area_regular += cell_areas[ci],
                Region::Aniso => area_aniso += cell_areas[ci],
            }
        }

        Mesh {
            vertices,
            cells,
            edges,
            h_patch,
            h_max_edge,
            area_regular,
            area_aniso,
            cell_areas,
            cell_min_edge,
            vertex_cells,
            vertex_boundary,
            vertex_tags,
        }
    }
}

/// Default relative vertex-snapping tolerance for cut parameters.
pub const DEFAULT_SNAP_TOL: f64 = 1e-8;

/// Build the locally modified mesh: subdivide every patch, drop cells whose
/// centroid lies outside the domain, classify regions and edges.
pub fn build_lmfem_mesh(
    pm: &PatchMesh,
    boundary: &dyn ImplicitBoundary,
    snap_tol: f64,
) -> Result<Mesh, MeshError> {
    let mut builder = MeshBuilder::new();
    for j in 0..pm.ny {
        for i in 0..pm.nx {
            let rect = pm.patch_rect(i, j);
            let pattern = cut_patch(rect, boundary, snap_tol)?;
            let region = if pattern.is_proper_cut() { Region::Aniso } else { Region::Regular };
            let cells = subdivide_patch(rect, &pattern)?;
            let patch_id = j * pm.nx + i;
            for cell in &cells {
                let c = cell.centroid();
                if boundary.phi(c[0], c[1]) > 0.0 {
                    continue; // exterior cells are dropped
                }
                builder.push_cell(cell, region, patch_id);
            }
        }
    }
    if builder.cells.is_empty() {
        return Err(MeshError::InvalidArgument("domain does not intersect the patch grid".into()));
    }
    Ok(builder.finish(pm.h, pm.bbox))
}

/// Structured all-quad mesh with alternating row heights `ratio*H` and
/// `(1-ratio)*H` per coarse row and uniform column width `H/2`. Every cell is
/// tagged anisotropic (the Example-1 convention `Omega_h^aniso = Omega_h`).
pub fn build_alternating_mesh(
    n_coarse: usize,
    ratio: f64,
    bbox: Rect,
) -> Result<Mesh, MeshError> {
    if n_coarse == 0 {
        return Err(MeshError::InvalidArgument("n_coarse must be >= 1".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MeshError::InvalidArgument(format!(
            "alternating ratio must lie in (0,1), got {ratio}"
        )));
    }
    let h = bbox.height() / n_coarse as f64;
    let hx = 0.5 * bbox.width() * (h / bbox.height()); // = H/2 for square boxes
    let ncols = (bbox.width() / hx).round() as usize;
    let mut ys = Vec::with_capacity(2 * n_coarse + 1);
    ys.push(bbox.y0);
    for j in 0..n_coarse {
        let y0 = bbox.y0 + j as f64 * h;
        ys.push(y0 + ratio * h);
        ys.push(y0 + h);
    }
    let xs: Vec<f64> = (0..=ncols).map(|i| bbox.x0 + i as f64 * hx).collect();

    let mut builder = MeshBuilder::new();
    for j in 0..ys.len() - 1 {
        for i in 0..ncols {
            let q = LocalCell::Quad([
                [xs[i], ys[j]],
                [xs[i + 1], ys[j]],
                [xs[i + 1], ys[j + 1]],
                [xs[i], ys[j + 1]],
            ]);
            // patch = coarse cell: two columns x one coarse row
            let patch = (j / 2) * ncols.div_ceil(2) + i / 2;
            builder.push_cell(&q, Region::Aniso, patch);
        }
    }
    Ok(builder.finish(h, bbox))
}

/// Scalar mesh quality measures of Table-3 type.
#[derive(Debug, Clone, Copy)]
pub struct QualityReport {
    pub k_max: f64,
    pub k_min: f64,
    pub area_ratio: f64,
    pub e_max: f64,
    pub e_min: f64,
    /// max over cells of (longest cell edge / shortest cell edge)
    pub kappa_max: f64,
    /// max interior angle over all cells, degrees
    pub angle_max: f64,
}

pub fn mesh_quality_report(m: &Mesh) -> QualityReport {
    let mut k_max = 0.0f64;
    let mut k_min = f64::INFINITY;
    let mut e_max = 0.0f64;
    let mut e_min = f64::INFINITY;
    let mut kappa_max = 0.0f64;
    let mut angle_max = 0.0f64;
    for (ci, cell) in m.cells.iter().enumerate() {
        let area = m.cell_areas[ci];
        k_max = k_max.max(area);
        k_min = k_min.min(area);
        let pts = m.cell_points(ci);
        let n = pts.len();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 0..n {
            let l = dist(pts[k], pts[(k + 1) % n]);
            lo = lo.min(l);
            hi = hi.max(l);
        }
        e_max = e_max.max(hi);
        e_min = e_min.min(lo);
        kappa_max = kappa_max.max(hi / lo);
        match cell.kind {
            CellKind::Triangle => {
                angle_max = angle_max.max(max_interior_angle(&[pts[0], pts[1], pts[2]]));
            }
            CellKind::Quad => {
                for k in 0..4 {
                    let a = pts[(k + 3) % 4];
                    let b = pts[k];
                    let c = pts[(k + 1) % 4];
                    let v1 = [a[0] - b[0], a[1] - b[1]];
                    let v2 = [c[0] - b[0], c[1] - b[1]];
                    let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
                    let n2 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
                    let cosv = ((v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)).clamp(-1.0, 1.0);
                    angle_max = angle_max.max(cosv.acos().to_degrees());
                }
            }
        }
    }
    QualityReport {
        k_max,
        k_min,
        area_ratio: k_max / k_min,
        e_max,
        e_min,
        kappa_max,
        angle_max,
    }
}
