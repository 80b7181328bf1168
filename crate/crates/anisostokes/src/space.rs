//! Degree-1 Lagrange space on the mixed triangle/quad mesh.
//!
//! Scalar DOFs sit at mesh vertices; traces are linear on edges on both cell
//! types, so continuity across triangle/quad interfaces holds without any
//! special treatment. Quadrature rules are kept small for assembly (exact for
//! the arising polynomial degrees with r = 1) and raised for error-norm
//! integration of smooth manufactured solutions.

use crate::error::AssemblyError;
use crate::mesh::{BoundaryTag, CellKind, Mesh, Point};

/// A quadrature point in reference coordinates with its weight.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub xy: [f64; 2],
    pub w: f64,
}

const G2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// 2x2 tensor Gauss on the unit square (degree 3).
pub fn quad_rule_2x2() -> Vec<QuadPoint> {
    let mut out = Vec::with_capacity(4);
    for &x in &G2 {
        for &y in &G2 {
            out.push(QuadPoint { xy: [x, y], w: 0.25 });
        }
    }
    out
}

/// 4x4 tensor Gauss on the unit square (degree 7), for error norms.
pub fn quad_rule_4x4() -> Vec<QuadPoint> {
    // Gauss-Legendre on [0,1]
    let x = [
        0.069_431_844_202_973_71,
        0.330_009_478_207_571_87,
        0.669_990_521_792_428_1,
        0.930_568_155_797_026_3,
    ];
    let w = [
        0.173_927_422_568_726_9,
        0.326_072_577_431_273_1,
        0.326_072_577_431_273_1,
        0.173_927_422_568_726_9,
    ];
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            out.push(QuadPoint { xy: [x[i], x[j]], w: w[i] * w[j] });
        }
    }
    out
}

/// 3-point degree-2 rule on the reference triangle (weights sum to 1/2).
pub fn tri_rule_3() -> Vec<QuadPoint> {
    let w = 1.0 / 6.0;
    vec![
        QuadPoint { xy: [1.0 / 6.0, 1.0 / 6.0], w },
        QuadPoint { xy: [2.0 / 3.0, 1.0 / 6.0], w },
        QuadPoint { xy: [1.0 / 6.0, 2.0 / 3.0], w },
    ]
}

/// 7-point degree-5 rule on the reference triangle.
pub fn tri_rule_7() -> Vec<QuadPoint> {
    let a1 = 0.059_715_871_789_77;
    let b1 = 0.470_142_064_105_115;
    let a2 = 0.797_426_985_353_087;
    let b2 = 0.101_286_507_323_456;
    let w0 = 0.225 * 0.5;
    let w1 = 0.132_394_152_788_506 * 0.5;
    let w2 = 0.125_939_180_544_827 * 0.5;
    vec![
        QuadPoint { xy: [1.0 / 3.0, 1.0 / 3.0], w: w0 },
        QuadPoint { xy: [a1, b1], w: w1 },
        QuadPoint { xy: [b1, a1], w: w1 },
        QuadPoint { xy: [b1, b1], w: w1 },
        QuadPoint { xy: [a2, b2], w: w2 },
        QuadPoint { xy: [b2, a2], w: w2 },
        QuadPoint { xy: [b2, b2], w: w2 },
    ]
}

/// 2-point Gauss on the unit interval, used for all edge integrals.
pub fn edge_rule_2() -> [(f64, f64); 2] {
    [(G2[0], 0.5), (G2[1], 0.5)]
}

/// Shape function values and physical gradients of one cell at one point.
///
/// `vals[i]` and `(grad_x[i], grad_y[i])` refer to the i-th local vertex; the
/// slice length matches the cell's vertex count.
#[derive(Debug, Clone)]
pub struct ShapeEval {
    pub vals: [f64; 4],
    pub grad_x: [f64; 4],
    pub grad_y: [f64; 4],
    pub n: usize,
    /// Jacobian determinant of the reference map at the point.
    pub det_j: f64,
}

/// Affine (triangle) or bilinear (quad) element map of one mesh cell.
#[derive(Debug, Clone)]
pub struct ElementMap {
    pts: [Point; 4],
    kind: CellKind,
}

impl ElementMap {
    pub fn new(mesh: &Mesh, cell: usize) -> Self {
        let c = &mesh.cells[cell];
        let mut pts = [[0.0; 2]; 4];
        for (k, &v) in c.vertices().iter().enumerate() {
            pts[k] = mesh.vertices[v];
        }
        ElementMap { pts, kind: c.kind }
    }

    pub fn from_points(points: &[Point]) -> Self {
        let kind = if points.len() == 3 { CellKind::Triangle } else { CellKind::Quad };
        let mut pts = [[0.0; 2]; 4];
        pts[..points.len()].copy_from_slice(points);
        ElementMap { pts, kind }
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    /// Physical position of a reference point.
    pub fn map(&self, xi: f64, eta: f64) -> Point {
        match self.kind {
            CellKind::Triangle => {
                let [a, b, c, _] = self.pts;
                [
                    a[0] + xi * (b[0] - a[0]) + eta * (c[0] - a[0]),
                    a[1] + xi * (b[1] - a[1]) + eta * (c[1] - a[1]),
                ]
            }
            CellKind::Quad => {
                let [a, b, c, d] = self.pts;
                let n = [
                    (1.0 - xi) * (1.0 - eta),
                    xi * (1.0 - eta),
                    xi * eta,
                    (1.0 - xi) * eta,
                ];
                [
                    n[0] * a[0] + n[1] * b[0] + n[2] * c[0] + n[3] * d[0],
                    n[0] * a[1] + n[1] * b[1] + n[2] * c[1] + n[3] * d[1],
                ]
            }
        }
    }

    /// Shape values and physical gradients at a reference point.
    pub fn eval(&self, xi: f64, eta: f64) -> Result<ShapeEval, AssemblyError> {
        match self.kind {
            CellKind::Triangle => {
                let [a, b, c, _] = self.pts;
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                if det <= 0.0 {
                    return Err(AssemblyError::InvalidArgument("inverted cell".into()));
                }
                let gx = [(b[1] - c[1]) / det, (c[1] - a[1]) / det, (a[1] - b[1]) / det, 0.0];
                let gy = [(c[0] - b[0]) / det, (a[0] - c[0]) / det, (b[0] - a[0]) / det, 0.0];
                Ok(ShapeEval {
                    vals: [1.0 - xi - eta, xi, eta, 0.0],
                    grad_x: gx,
                    grad_y: gy,
                    n: 3,
                    det_j: det,
                })
            }
            CellKind::Quad => {
                let [a, b, c, d] = self.pts;
                let vals = [
                    (1.0 - xi) * (1.0 - eta),
                    xi * (1.0 - eta),
                    xi * eta,
                    (1.0 - xi) * eta,
                ];
                // reference gradients
                let dxi = [-(1.0 - eta), 1.0 - eta, eta, -eta];
                let deta = [-(1.0 - xi), -xi, xi, 1.0 - xi];
                let j11: f64 = (0..4).map(|k| dxi[k] * self.pts_x(k)).sum();
                let j12: f64 = (0..4).map(|k| deta[k] * self.pts_x(k)).sum();
                let j21: f64 = (0..4).map(|k| dxi[k] * self.pts_y(k)).sum();
                let j22: f64 = (0..4).map(|k| deta[k] * self.pts_y(k)).sum();
                let det = j11 * j22 - j12 * j21;
                if det <= 0.0 {
                    return Err(AssemblyError::InvalidArgument("inverted cell".into()));
                }
                let mut gx = [0.0; 4];
                let mut gy = [0.0; 4];
                for k in 0..4 {
                    gx[k] = (j22 * dxi[k] - j21 * deta[k]) / det;
                    gy[k] = (-j12 * dxi[k] + j11 * deta[k]) / det;
                }
                let _ = (a, b, c, d);
                Ok(ShapeEval { vals, grad_x: gx, grad_y: gy, n: 4, det_j: det })
            }
        }
    }

    fn pts_x(&self, k: usize) -> f64 {
        self.pts[k][0]
    }

    fn pts_y(&self, k: usize) -> f64 {
        self.pts[k][1]
    }

    /// Reference coordinates of a physical point (Newton for quads).
    pub fn inverse(&self, p: Point) -> [f64; 2] {
        match self.kind {
            CellKind::Triangle => {
                let [a, b, c, _] = self.pts;
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let xi = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
                let eta = ((p[1] - a[1]) * (b[0] - a[0]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
                [xi, eta]
            }
            CellKind::Quad => {
                let mut xi = 0.5;
                let mut eta = 0.5;
                for _ in 0..30 {
                    let q = self.map(xi, eta);
                    let rx = q[0] - p[0];
                    let ry = q[1] - p[1];
                    if rx.abs() + ry.abs() < 1e-14 {
                        break;
                    }
                    let dxi = [-(1.0 - eta), 1.0 - eta, eta, -eta];
                    let deta = [-(1.0 - xi), -xi, xi, 1.0 - xi];
                    let j11: f64 = (0..4).map(|k| dxi[k] * self.pts_x(k)).sum();
                    let j12: f64 = (0..4).map(|k| deta[k] * self.pts_x(k)).sum();
                    let j21: f64 = (0..4).map(|k| dxi[k] * self.pts_y(k)).sum();
                    let j22: f64 = (0..4).map(|k| deta[k] * self.pts_y(k)).sum();
                    let det = j11 * j22 - j12 * j21;
                    xi -= (j22 * rx - j12 * ry) / det;
                    eta -= (-j21 * rx + j11 * ry) / det;
                }
                [xi, eta]
            }
        }
    }
}

/// Which boundary segments carry Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirichletSelection {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
    pub interface: bool,
}

impl DirichletSelection {
    /// Dirichlet on left/top/bottom and on the interface chord; the right
    /// boundary is the natural (do-nothing) outlet.
    pub fn examples_default() -> Self {
        DirichletSelection { left: true, right: false, bottom: true, top: true, interface: true }
    }

    pub fn all() -> Self {
        DirichletSelection { left: true, right: true, bottom: true, top: true, interface: true }
    }

    pub fn contains(&self, tag: BoundaryTag) -> bool {
        match tag {
            BoundaryTag::OuterLeft => self.left,
            BoundaryTag::OuterRight => self.right,
            BoundaryTag::OuterBottom => self.bottom,
            BoundaryTag::OuterTop => self.top,
            BoundaryTag::Interface => self.interface,
        }
    }
}

/// Scalar degree-1 space over a mesh: one DOF per vertex.
pub struct FeSpace<'m> {
    pub mesh: &'m Mesh,
    /// For each vertex, the boundary tag if the DOF sits on the discrete boundary.
    pub dof_boundary: Vec<Option<BoundaryTag>>,
    /// Dirichlet mask for the velocity role.
    pub dirichlet: Vec<bool>,
}

impl<'m> FeSpace<'m> {
    pub fn ndof(&self) -> usize {
        self.mesh.vertices.len()
    }
}

/// Build the scalar space with the Dirichlet mask taken from `selection`.
///
/// A vertex carrying several boundary tags (corners) is Dirichlet if any of
/// them is selected, and reports the highest-priority selected tag so the
/// boundary data callback sees a Dirichlet segment.
pub fn build_space<'m>(mesh: &'m Mesh, selection: DirichletSelection) -> FeSpace<'m> {
    use crate::mesh::BoundaryTag;
    let mut dof_boundary = Vec::with_capacity(mesh.vertices.len());
    let mut dirichlet = Vec::with_capacity(mesh.vertices.len());
    for (v, &mask) in mesh.vertex_tags.iter().enumerate() {
        if mask == 0 {
            dof_boundary.push(None);
            dirichlet.push(false);
            continue;
        }
        let selected = BoundaryTag::ALL
            .iter()
            .copied()
            .find(|t| mask & t.bit() != 0 && selection.contains(*t));
        match selected {
            Some(tag) => {
                dof_boundary.push(Some(tag));
                dirichlet.push(true);
            }
            None => {
                dof_boundary.push(mesh.vertex_boundary[v]);
                dirichlet.push(false);
            }
        }
    }
    FeSpace { mesh, dof_boundary, dirichlet }
}

/// Evaluate a coefficient vector at a physical point: value and gradient.
///
/// The containing cell is located by brute scan over candidate cells; intended
/// for diagnostics and tests, not inner loops.
pub fn evaluate(
    space: &FeSpace<'_>,
    coeffs: &[f64],
    p: Point,
) -> Result<(f64, [f64; 2]), AssemblyError> {
    let mesh = space.mesh;
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let map = ElementMap::new(mesh, ci);
        let [xi, eta] = map.inverse(p);
        let tol = 1e-10;
        let inside = match cell.kind {
            CellKind::Triangle => xi >= -tol && eta >= -tol && xi + eta <= 1.0 + tol,
            CellKind::Quad => (-tol..=1.0 + tol).contains(&xi) && (-tol..=1.0 + tol).contains(&eta),
        };
        if !inside {
            continue;
        }
        let sh = map.eval(xi.clamp(0.0, 1.0), eta.clamp(0.0, 1.0))?;
        let mut v = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (k, &gv) in cell.vertices().iter().enumerate() {
            v += sh.vals[k] * coeffs[gv];
            gx += sh.grad_x[k] * coeffs[gv];
            gy += sh.grad_y[k] * coeffs[gv];
        }
        return Ok((v, [gx, gy]));
    }
    Err(AssemblyError::InvalidArgument(format!("point ({}, {}) outside mesh", p[0], p[1])))
}
