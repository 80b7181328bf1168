//! Saddle-point assembly for the Stokes problem.
//!
//! Unknown ordering is block-wise `[v1 | v2 | p]` so that stabilisation only
//! touches the trailing pressure block. The bilinear form is
//! `A(v,p)(phi,psi) = nu (grad v, grad phi) - (p, div phi) + (div v, psi)`;
//! the natural boundary condition of this form is the do-nothing outlet
//! `nu dv/dn - p n = 0`, so outlets need no boundary assembly.

use crate::error::AssemblyError;
use crate::mesh::{BoundaryTag, CellKind, Point};
use crate::solver::{SparseMatrix, TripletBuffer};
use crate::space::{quad_rule_2x2, tri_rule_3, ElementMap, FeSpace};

/// Assembled Stokes system prior to Dirichlet elimination.
pub struct StokesSystem {
    /// Scalar DOF count; total unknowns are `3 * n_scalar`.
    pub n_scalar: usize,
    pub nu: f64,
    pub triplets: TripletBuffer,
    pub rhs: Vec<f64>,
    /// Dirichlet constraints `dof -> value`, filled by `apply_dirichlet`.
    pub constraints: Vec<(usize, f64)>,
    shift_pressure_mean: bool,
}

/// Pressure gauge handling for systems without a natural outlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureGauge {
    /// Leave the system untouched; with pure Dirichlet data this is singular.
    None,
    /// Pin one pressure DOF to zero so the factorisation succeeds, then shift
    /// the discrete pressure to zero mesh mean after the solve.
    MeanZeroShift,
}

impl StokesSystem {
    pub fn n_total(&self) -> usize {
        3 * self.n_scalar
    }

    pub fn dof_v1(&self, vertex: usize) -> usize {
        vertex
    }

    pub fn dof_v2(&self, vertex: usize) -> usize {
        self.n_scalar + vertex
    }

    pub fn dof_p(&self, vertex: usize) -> usize {
        2 * self.n_scalar + vertex
    }
}

/// Assemble viscous, pressure-gradient and divergence blocks plus the load
/// vector. Stabilisation is added separately on the pressure block.
pub fn assemble_stokes<F>(
    space_v: &FeSpace<'_>,
    space_p: &FeSpace<'_>,
    nu: f64,
    f: F,
) -> Result<StokesSystem, AssemblyError>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    if !std::ptr::eq(space_v.mesh, space_p.mesh) {
        return Err(AssemblyError::MeshMismatch);
    }
    let mesh = space_v.mesh;
    let n = mesh.vertices.len();
    let mut trip = TripletBuffer::new(3 * n, 3 * n);
    let mut rhs = vec![0.0; 3 * n];
    let tri_q = tri_rule_3();
    let quad_q = quad_rule_2x2();

    for (ci, cell) in mesh.cells.iter().enumerate() {
        let map = ElementMap::new(mesh, ci);
        let rule = match cell.kind {
            CellKind::Triangle => &tri_q,
            CellKind::Quad => &quad_q,
        };
        let nv = cell.nv();
        let mut ke = [[0.0f64; 4]; 4];
        let mut bx = [[0.0f64; 4]; 4]; // (psi_j, d phi_i/dx)
        let mut by = [[0.0f64; 4]; 4];
        let mut fe = [[0.0f64; 4]; 2];
        for qp in rule {
            let sh = map.eval(qp.xy[0], qp.xy[1])?;
            let w = qp.w * sh.det_j;
            let p = map.map(qp.xy[0], qp.xy[1]);
            let fv = f(p[0], p[1]);
            for i in 0..nv {
                fe[0][i] += w * fv[0] * sh.vals[i];
                fe[1][i] += w * fv[1] * sh.vals[i];
                for j in 0..nv {
                    ke[i][j] += w * (sh.grad_x[i] * sh.grad_x[j] + sh.grad_y[i] * sh.grad_y[j]);
                    bx[i][j] += w * sh.grad_x[i] * sh.vals[j];
                    by[i][j] += w * sh.grad_y[i] * sh.vals[j];
                }
            }
        }
        let verts = cell.vertices();
        for i in 0..nv {
            let gi = verts[i];
            rhs[gi] += fe[0][i];
            rhs[n + gi] += fe[1][i];
            for j in 0..nv {
                let gj = verts[j];
                trip.push(gi, gj, nu * ke[i][j]);
                trip.push(n + gi, n + gj, nu * ke[i][j]);
                // -(p, div phi)
                trip.push(gi, 2 * n + gj, -bx[i][j]);
                trip.push(n + gi, 2 * n + gj, -by[i][j]);
                // +(div v, psi)
                trip.push(2 * n + gi, gj, bx[j][i]);
                trip.push(2 * n + gi, n + gj, by[j][i]);
            }
        }
    }

    Ok(StokesSystem {
        n_scalar: n,
        nu,
        triplets: trip,
        rhs,
        constraints: Vec::new(),
        shift_pressure_mean: false,
    })
}

/// Add a pressure-block matrix (the stabilisation) to the system.
pub fn add_pressure_stabilisation(sys: &mut StokesSystem, stab: &SparseMatrix) {
    let n = sys.n_scalar;
    assert_eq!(stab.n_rows, n);
    for r in 0..n {
        for (c, v) in stab.iter_row(r) {
            sys.triplets.push(2 * n + r, 2 * n + c, v);
        }
    }
}

/// Register Dirichlet constraints for both velocity components at every
/// masked vertex of `space_v`, with boundary data `g(x, tag)`.
pub fn apply_dirichlet<G>(sys: &mut StokesSystem, space_v: &FeSpace<'_>, g: G)
where
    G: Fn(Point, BoundaryTag) -> [f64; 2],
{
    let mesh = space_v.mesh;
    for (v, &is_dir) in space_v.dirichlet.iter().enumerate() {
        if !is_dir {
            continue;
        }
        let tag = space_v.dof_boundary[v].expect("dirichlet vertex without boundary tag");
        let val = g(mesh.vertices[v], tag);
        sys.constraints.push((sys.dof_v1(v), val[0]));
        sys.constraints.push((sys.dof_v2(v), val[1]));
    }
}

/// Configure the pressure gauge.
pub fn pressure_gauge(sys: &mut StokesSystem, mode: PressureGauge) {
    match mode {
        PressureGauge::None => {}
        PressureGauge::MeanZeroShift => {
            sys.constraints.push((sys.dof_p(0), 0.0));
            sys.shift_pressure_mean = true;
        }
    }
}

/// Finalised linear system after symmetric Dirichlet elimination: constrained
/// rows/columns are replaced by the identity with the data moved to the
/// right-hand side.
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub n_scalar: usize,
    shift_pressure_mean: bool,
}

pub fn finalize(sys: &StokesSystem) -> LinearSystem {
    let n_tot = sys.n_total();
    let mut fixed_val = vec![0.0f64; n_tot];
    let mut fixed = vec![false; n_tot];
    for &(dof, val) in &sys.constraints {
        fixed[dof] = true;
        fixed_val[dof] = val;
    }
    let mut rhs = sys.rhs.clone();
    let a = sys.triplets.to_csr();
    let mut out = TripletBuffer::new(n_tot, n_tot);
    for r in 0..n_tot {
        if fixed[r] {
            continue;
        }
        for (c, v) in a.iter_row(r) {
            if fixed[c] {
                rhs[r] -= v * fixed_val[c];
            } else {
                out.push(r, c, v);
            }
        }
    }
    for d in 0..n_tot {
        if fixed[d] {
            out.push(d, d, 1.0);
            rhs[d] = fixed_val[d];
        }
    }
    LinearSystem {
        matrix: out.to_csr(),
        rhs,
        n_scalar: sys.n_scalar,
        shift_pressure_mean: sys.shift_pressure_mean,
    }
}

impl LinearSystem {
    /// Post-process the solution: subtract the mesh mean of the pressure when
    /// the mean-zero gauge is active.
    pub fn postprocess(&self, x: &mut [f64], space_p: &FeSpace<'_>) {
        if !self.shift_pressure_mean {
            return;
        }
        let mesh = space_p.mesh;
        let n = self.n_scalar;
        let tri_q = tri_rule_3();
        let quad_q = quad_rule_2x2();
        let mut integral = 0.0;
        let mut area = 0.0;
        for (ci, cell) in mesh.cells.iter().enumerate() {
            let map = ElementMap::new(mesh, ci);
            let rule = match cell.kind {
                CellKind::Triangle => &tri_q,
                CellKind::Quad => &quad_q,
            };
            for qp in rule {
                let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
                let w = qp.w * sh.det_j;
                let mut ph = 0.0;
                for (k, &gv) in cell.vertices().iter().enumerate() {
                    ph += sh.vals[k] * x[2 * n + gv];
                }
                integral += w * ph;
                area += w;
            }
        }
        let mean = integral / area;
        for v in 0..n {
            x[2 * n + v] -= mean;
        }
    }
}
