//! Edge-based pressure stabilisation on anisotropic meshes.
//!
//! Three bilinear forms on the pressure space:
//!
//! * `S`: the average-based anisotropic stabilisation. On edges of
//!   anisotropic cells it penalises the mean of the one-sided gradient
//!   products weighted by the normal cell size `h_n = |K|/|e|`; on edges
//!   between regular cells it penalises gradient jumps. Both carry the global
//!   weight `gamma * H^2`.
//! * `S2`: the variant using only local cell sizes `h_n`, `h_tau` as weights.
//! * `Scip`: the standard continuous interior penalty `gamma h_tau^3
//!   [dp/dn][dpsi/dn]` on interior edges.
//!
//! Boundary edges enter the average-based sums with the one-sided value as
//! the mean. Jump terms are (optionally, and by default) dropped on outer
//! patch edges, which keeps all jump couplings inside patches.

use crate::error::AssemblyError;
use crate::mesh::{EdgeClass, Mesh, Point, Region};
use crate::solver::{SparseMatrix, TripletBuffer};
use crate::space::{edge_rule_2, ElementMap, FeSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabVariant {
    S,
    S2,
    Scip,
    None,
}

/// Stabilisation parameters.
#[derive(Debug, Clone, Copy)]
pub struct StabConfig {
    pub variant: StabVariant,
    /// Weight of the anisotropic (average) part.
    pub gamma_i: f64,
    /// Weight of the regular (jump) part.
    pub gamma_0: f64,
    /// Drop jump terms on edges of the coarse patch grid (the implementation
    /// convention of the reference experiments). Average terms are kept on
    /// all edges regardless.
    pub skip_outer_patch_jumps: bool,
}

impl StabConfig {
    pub fn variant_s(gamma: f64) -> Self {
        StabConfig {
            variant: StabVariant::S,
            gamma_i: gamma,
            gamma_0: gamma,
            skip_outer_patch_jumps: true,
        }
    }

    pub fn variant_s2(gamma_i: f64, gamma_0: f64) -> Self {
        StabConfig { variant: StabVariant::S2, gamma_i, gamma_0, skip_outer_patch_jumps: true }
    }

    pub fn variant_scip(gamma: f64) -> Self {
        StabConfig {
            variant: StabVariant::Scip,
            gamma_i: gamma,
            gamma_0: gamma,
            skip_outer_patch_jumps: true,
        }
    }

    pub fn none() -> Self {
        StabConfig {
            variant: StabVariant::None,
            gamma_i: 0.0,
            gamma_0: 0.0,
            skip_outer_patch_jumps: true,
        }
    }

    fn validate(&self) -> Result<(), AssemblyError> {
        if self.variant != StabVariant::None && !(self.gamma_i > 0.0 && self.gamma_0 > 0.0) {
            return Err(AssemblyError::InvalidArgument(
                "stabilisation parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-edge diagnostic record.
#[derive(Debug, Clone, Copy)]
pub struct EdgeContribution {
    pub edge: usize,
    pub class: EdgeClass,
    pub h_n_1: f64,
    pub h_n_2: f64,
    pub h_tau: f64,
    /// Trace of the local edge matrix.
    pub contribution: f64,
}

/// Assembled stabilisation matrix on pressure DOFs plus its per-edge ledger.
pub struct StabMatrix {
    pub matrix: SparseMatrix,
    pub ledger: Vec<EdgeContribution>,
}

struct EdgeGeometry {
    /// unit tangent, unit normal (orientation irrelevant for the products)
    tau: [f64; 2],
    normal: [f64; 2],
    pa: Point,
    pb: Point,
    len: f64,
}

fn edge_geometry(mesh: &Mesh, edge: usize) -> EdgeGeometry {
    let e = &mesh.edges[edge];
    let pa = mesh.vertices[e.v[0]];
    let pb = mesh.vertices[e.v[1]];
    let len = e.h_tau;
    let tau = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
    EdgeGeometry { tau, normal: [-tau[1], tau[0]], pa, pb, len }
}

/// Gradients of one cell's shape functions at points of an edge.
fn cell_edge_gradients(
    mesh: &Mesh,
    cell: usize,
    geo: &EdgeGeometry,
) -> ([(Vec<f64>, Vec<f64>); 2], usize) {
    let map = ElementMap::new(mesh, cell);
    let nv = mesh.cells[cell].nv();
    let mut out = [(Vec::new(), Vec::new()), (Vec::new(), Vec::new())];
    for (q, (t, _)) in edge_rule_2().into_iter().enumerate() {
        let p = [
            geo.pa[0] + t * (geo.pb[0] - geo.pa[0]),
            geo.pa[1] + t * (geo.pb[1] - geo.pa[1]),
        ];
        let [xi, eta] = map.inverse(p);
        let sh = map.eval(xi.clamp(0.0, 1.0), eta.clamp(0.0, 1.0)).expect("valid cell");
        out[q] = (sh.grad_x[..nv].to_vec(), sh.grad_y[..nv].to_vec());
    }
    (out, nv)
}

/// Assemble the average-based anisotropic stabilisation `S`.
pub fn assemble_s(space_p: &FeSpace<'_>, cfg: &StabConfig) -> Result<StabMatrix, AssemblyError> {
    cfg.validate()?;
    assemble_variant(space_p, cfg, StabVariant::S)
}

/// Assemble the local-cell-size variant `S2`.
pub fn assemble_s2(space_p: &FeSpace<'_>, cfg: &StabConfig) -> Result<StabMatrix, AssemblyError> {
    cfg.validate()?;
    assemble_variant(space_p, cfg, StabVariant::S2)
}

/// Assemble the standard continuous interior penalty `Scip`.
pub fn assemble_scip(space_p: &FeSpace<'_>, cfg: &StabConfig) -> Result<StabMatrix, AssemblyError> {
    cfg.validate()?;
    assemble_variant(space_p, cfg, StabVariant::Scip)
}

pub fn assemble(space_p: &FeSpace<'_>, cfg: &StabConfig) -> Result<StabMatrix, AssemblyError> {
    match cfg.variant {
        StabVariant::S => assemble_s(space_p, cfg),
        StabVariant::S2 => assemble_s2(space_p, cfg),
        StabVariant::Scip => assemble_scip(space_p, cfg),
        StabVariant::None => {
            let n = space_p.ndof();
            Ok(StabMatrix { matrix: TripletBuffer::new(n, n).to_csr(), ledger: Vec::new() })
        }
    }
}

fn assemble_variant(
    space_p: &FeSpace<'_>,
    cfg: &StabConfig,
    variant: StabVariant,
) -> Result<StabMatrix, AssemblyError> {
    let mesh = space_p.mesh;
    let n = space_p.ndof();
    let h_big = mesh.h_patch;
    let mut trip = TripletBuffer::new(n, n);
    let mut ledger = Vec::with_capacity(mesh.edges.len());
    let rule = edge_rule_2();

    for (ei, e) in mesh.edges.iter().enumerate() {
        let geo = edge_geometry(mesh, ei);
        let interior = e.cells.1.is_some();
        let mut contribution = 0.0;

        match (variant, e.class) {
            (StabVariant::Scip, _) => {
                if !interior {
                    continue;
                }
                if cfg.skip_outer_patch_jumps && e.outer_patch_edge {
                    continue;
                }
                let c1 = e.cells.0;
                let c2 = e.cells.1.unwrap();
                let (g1, n1) = cell_edge_gradients(mesh, c1, &geo);
                let (g2, n2) = cell_edge_gradients(mesh, c2, &geo);
                let dofs: Vec<usize> = mesh.cells[c1]
                    .vertices()
                    .iter()
                    .chain(mesh.cells[c2].vertices().iter())
                    .copied()
                    .collect();
                let m = n1 + n2;
                let mut local = vec![0.0; m * m];
                for (q, (_, w)) in rule.into_iter().enumerate() {
                    // jump of the normal derivative, sign-consistent per side
                    let mut jn = vec![0.0; m];
                    for k in 0..n1 {
                        jn[k] = g1[q].0[k] * geo.normal[0] + g1[q].1[k] * geo.normal[1];
                    }
                    for k in 0..n2 {
                        jn[n1 + k] = -(g2[q].0[k] * geo.normal[0] + g2[q].1[k] * geo.normal[1]);
                    }
                    for i in 0..m {
                        for j in 0..m {
                            local[i * m + j] += w * geo.len * jn[i] * jn[j];
                        }
                    }
                }
                let fac = cfg.gamma_i * geo.len.powi(3);
                for i in 0..m {
                    contribution += fac * local[i * m + i];
                    for j in 0..m {
                        trip.push(dofs[i], dofs[j], fac * local[i * m + j]);
                    }
                }
            }
            (_, EdgeClass::Aniso) => {
                // one-sided mean terms: no coupling across the edge
                let w_side = if interior { 0.5 } else { 1.0 };
                for cell in std::iter::once(e.cells.0).chain(e.cells.1) {
                    let h_n = mesh.cell_areas[cell] / geo.len;
                    let (g, nv) = cell_edge_gradients(mesh, cell, &geo);
                    let dofs = mesh.cells[cell].vertices();
                    let mut local = vec![0.0; nv * nv];
                    for (q, (_, w)) in rule.into_iter().enumerate() {
                        for i in 0..nv {
                            for j in 0..nv {
                                let val = match variant {
                                    StabVariant::S => {
                                        g[q].0[i] * g[q].0[j] + g[q].1[i] * g[q].1[j]
                                    }
                                    StabVariant::S2 => {
                                        let ni = g[q].0[i] * geo.normal[0]
                                            + g[q].1[i] * geo.normal[1];
                                        let nj = g[q].0[j] * geo.normal[0]
                                            + g[q].1[j] * geo.normal[1];
                                        let ti =
                                            g[q].0[i] * geo.tau[0] + g[q].1[i] * geo.tau[1];
                                        let tj =
                                            g[q].0[j] * geo.tau[0] + g[q].1[j] * geo.tau[1];
                                        h_n * h_n * ni * nj + geo.len * geo.len * ti * tj
                                    }
                                    _ => unreachable!(),
                                };
                                local[i * nv + j] += w * geo.len * val;
                            }
                        }
                    }
                    let fac = match variant {
                        StabVariant::S => cfg.gamma_i * h_big * h_big * w_side * h_n,
                        StabVariant::S2 => cfg.gamma_i * w_side * h_n,
                        _ => unreachable!(),
                    };
                    for i in 0..nv {
                        contribution += fac * local[i * nv + i];
                        for j in 0..nv {
                            trip.push(dofs[i], dofs[j], fac * local[i * nv + j]);
                        }
                    }
                }
            }
            (_, EdgeClass::Regular) => {
                if cfg.skip_outer_patch_jumps && e.outer_patch_edge {
                    continue;
                }
                let c1 = e.cells.0;
                let c2 = e.cells.1.expect("regular edges are interior");
                let hn_mean = 0.5 * (e.h_n.0 + e.h_n.1.unwrap());
                let (g1, n1) = cell_edge_gradients(mesh, c1, &geo);
                let (g2, n2) = cell_edge_gradients(mesh, c2, &geo);
                let dofs: Vec<usize> = mesh.cells[c1]
                    .vertices()
                    .iter()
                    .chain(mesh.cells[c2].vertices().iter())
                    .copied()
                    .collect();
                let m = n1 + n2;
                let mut local = vec![0.0; m * m];
                for (q, (_, w)) in rule.into_iter().enumerate() {
                    let mut jx = vec![0.0; m];
                    let mut jy = vec![0.0; m];
                    for k in 0..n1 {
                        jx[k] = g1[q].0[k];
                        jy[k] = g1[q].1[k];
                    }
                    for k in 0..n2 {
                        jx[n1 + k] = -g2[q].0[k];
                        jy[n1 + k] = -g2[q].1[k];
                    }
                    for i in 0..m {
                        for j in 0..m {
                            local[i * m + j] += w * geo.len * (jx[i] * jx[j] + jy[i] * jy[j]);
                        }
                    }
                }
                let fac = match variant {
                    StabVariant::S => cfg.gamma_0 * h_big * h_big * hn_mean,
                    StabVariant::S2 => cfg.gamma_0 * hn_mean.powi(3),
                    _ => unreachable!(),
                };
                for i in 0..m {
                    contribution += fac * local[i * m + i];
                    for j in 0..m {
                        trip.push(dofs[i], dofs[j], fac * local[i * m + j]);
                    }
                }
            }
            (_, EdgeClass::BoundaryExterior) => continue,
        }

        ledger.push(EdgeContribution {
            edge: ei,
            class: e.class,
            h_n_1: e.h_n.0,
            h_n_2: e.h_n.1.unwrap_or(0.0),
            h_tau: e.h_tau,
            contribution,
        });
    }

    Ok(StabMatrix { matrix: trip.to_csr(), ledger })
}

/// `p^T S p`.
pub fn stab_energy(mat: &StabMatrix, p: &[f64]) -> f64 {
    let ax = mat.matrix.matvec(p);
    p.iter().zip(&ax).map(|(a, b)| a * b).sum()
}

/// Nodal projection of a cellwise-discontinuous vector field onto the
/// continuous space: at each interior vertex take the value from the adjacent
/// cell with the smallest modified edge length `h~_min` (ties prefer
/// anisotropic cells, then the lowest cell id); zero on the boundary.
pub fn tau_h<F>(space_p: &FeSpace<'_>, dg_field: F) -> Vec<[f64; 2]>
where
    F: Fn(usize, Point) -> [f64; 2],
{
    let mesh = space_p.mesh;
    let mut out = vec![[0.0, 0.0]; mesh.vertices.len()];
    for (v, cells) in mesh.vertex_cells.iter().enumerate() {
        if mesh.vertex_boundary[v].is_some() {
            continue; // boundary vertices stay zero
        }
        let mut best: Option<(f64, u8, usize)> = None;
        for &c in cells {
            let key = (
                mesh.h_tilde_min(c),
                match mesh.cells[c].region {
                    Region::Aniso => 0u8,
                    Region::Regular => 1u8,
                },
                c,
            );
            let better = match &best {
                None => true,
                Some(b) => key < *b,
            };
            if better {
                best = Some(key);
            }
        }
        if let Some((_, _, c)) = best {
            out[v] = dg_field(c, mesh.vertices[v]);
        }
    }
    out
}
