//! Manufactured solutions, error norms, projection oracles and order fits.

use crate::error::AssemblyError;
use crate::mesh::{CellKind, Mesh};
use crate::error::SolveError;
use crate::solver::{solve, TripletBuffer};
use crate::space::{quad_rule_2x2, quad_rule_4x4, tri_rule_3, tri_rule_7, ElementMap, FeSpace};

/// Closed-form Stokes solution built as the curl of `psi = k^2 (x-1)^3` with
/// `k = (x-x0)^2 + (y-y0)^2 - r^2`, plus the pressure that makes the
/// do-nothing condition hold on the right boundary at `nu = 1`.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    pub x0: f64,
    pub y0: f64,
    pub r: f64,
    pub nu: f64,
}

impl ExactSolution {
    pub fn new(x0: f64, y0: f64, r: f64) -> Self {
        ExactSolution { x0, y0, r, nu: 1.0 }
    }

    #[inline]
    fn kxy(&self, x: f64, y: f64) -> (f64, f64, f64, f64) {
        let xx = x - self.x0;
        let yy = y - self.y0;
        let e = x - 1.0;
        let k = xx * xx + yy * yy - self.r * self.r;
        (xx, yy, e, k)
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let (xx, yy, e, k) = self.kxy(x, y);
        let e2 = e * e;
        let e3 = e2 * e;
        [4.0 * k * e3 * yy, -4.0 * k * e3 * xx - 3.0 * k * k * e2]
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        let (xx, yy, e, k) = self.kxy(x, y);
        let e2 = e * e;
        8.0 * xx * e2 * e * yy + 12.0 * k * e2 * yy
    }

    /// Gradients of the two velocity components: `(grad v1, grad v2)`.
    pub fn velocity_gradients(&self, x: f64, y: f64) -> ([f64; 2], [f64; 2]) {
        let (xx, yy, e, k) = self.kxy(x, y);
        let e2 = e * e;
        let e3 = e2 * e;
        let g1 = [
            4.0 * e2 * yy * (3.0 * k + 2.0 * e * xx),
            4.0 * e3 * (k + 2.0 * yy * yy),
        ];
        let g2 = [
            -6.0 * e * k * k - 8.0 * e3 * xx * xx - 4.0 * e3 * k - 24.0 * e2 * xx * k,
            -4.0 * e2 * yy * (3.0 * k + 2.0 * e * xx),
        ];
        (g1, g2)
    }

    pub fn pressure_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let (xx, yy, e, k) = self.kxy(x, y);
        let e2 = e * e;
        [
            8.0 * e * yy * (3.0 * k + 6.0 * xx * e + e2),
            e2 * (12.0 * k + 24.0 * yy * yy + 8.0 * xx * e),
        ]
    }

    /// Volume force `f = -nu Lap(v) + grad p`.
    pub fn forcing(&self, x: f64, y: f64) -> [f64; 2] {
        let (xx, yy, e, k) = self.kxy(x, y);
        let e2 = e * e;
        let e3 = e2 * e;
        let lap1 = 8.0 * yy * e * (3.0 * k + 6.0 * xx * e + 4.0 * e2);
        let lap2 = -72.0 * xx * xx * e2 - 24.0 * yy * yy * e2 - 32.0 * xx * e3
            - 72.0 * xx * e * k
            - 48.0 * e2 * k
            - 6.0 * k * k;
        let gp = self.pressure_gradient(x, y);
        [-self.nu * lap1 + gp[0], -self.nu * lap2 + gp[1]]
    }
}

/// Error norms of a discrete Stokes solution against a manufactured one.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorNorms {
    pub v_h1: f64,
    pub v_l2: f64,
    pub p_l2: f64,
    pub p_h1: f64,
}

/// High-order cellwise quadrature of `exact - discrete` over the mesh domain.
///
/// `sol` is the full `[v1 | v2 | p]` coefficient vector.
pub fn error_norms(mesh: &Mesh, sol: &[f64], exact: &ExactSolution) -> ErrorNorms {
    let n = mesh.vertices.len();
    let tri_q = tri_rule_7();
    let quad_q = quad_rule_4x4();
    let mut v_h1 = 0.0;
    let mut v_l2 = 0.0;
    let mut p_l2 = 0.0;
    let mut p_h1 = 0.0;
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let map = ElementMap::new(mesh, ci);
        let rule = match cell.kind {
            CellKind::Triangle => &tri_q,
            CellKind::Quad => &quad_q,
        };
        let verts = cell.vertices();
        for qp in rule {
            let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
            let w = qp.w * sh.det_j;
            let p = map.map(qp.xy[0], qp.xy[1]);
            let ve = exact.velocity(p[0], p[1]);
            let (g1e, g2e) = exact.velocity_gradients(p[0], p[1]);
            let pe = exact.pressure(p[0], p[1]);
            let gpe = exact.pressure_gradient(p[0], p[1]);
            let mut vh = [0.0f64; 2];
            let mut ph = 0.0;
            let mut g1 = [0.0f64; 2];
            let mut g2 = [0.0f64; 2];
            let mut gp = [0.0f64; 2];
            for (k, &gv) in verts.iter().enumerate() {
                vh[0] += sh.vals[k] * sol[gv];
                vh[1] += sh.vals[k] * sol[n + gv];
                ph += sh.vals[k] * sol[2 * n + gv];
                g1[0] += sh.grad_x[k] * sol[gv];
                g1[1] += sh.grad_y[k] * sol[gv];
                g2[0] += sh.grad_x[k] * sol[n + gv];
                g2[1] += sh.grad_y[k] * sol[n + gv];
                gp[0] += sh.grad_x[k] * sol[2 * n + gv];
                gp[1] += sh.grad_y[k] * sol[2 * n + gv];
            }
            v_l2 += w * ((ve[0] - vh[0]).powi(2) + (ve[1] - vh[1]).powi(2));
            v_h1 += w
                * ((g1e[0] - g1[0]).powi(2)
                    + (g1e[1] - g1[1]).powi(2)
                    + (g2e[0] - g2[0]).powi(2)
                    + (g2e[1] - g2[1]).powi(2));
            p_l2 += w * (pe - ph).powi(2);
            p_h1 += w * ((gpe[0] - gp[0]).powi(2) + (gpe[1] - gp[1]).powi(2));
        }
    }
    ErrorNorms {
        v_h1: v_h1.sqrt(),
        v_l2: v_l2.sqrt(),
        p_l2: p_l2.sqrt(),
        p_h1: p_h1.sqrt(),
    }
}

/// L2 norm of a scalar function over the mesh (high-order quadrature).
pub fn l2_norm_of<F: Fn(f64, f64) -> f64>(mesh: &Mesh, f: F) -> f64 {
    let tri_q = tri_rule_7();
    let quad_q = quad_rule_4x4();
    let mut acc = 0.0;
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let map = ElementMap::new(mesh, ci);
        let rule = match cell.kind {
            CellKind::Triangle => &tri_q,
            CellKind::Quad => &quad_q,
        };
        for qp in rule {
            let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
            let p = map.map(qp.xy[0], qp.xy[1]);
            acc += qp.w * sh.det_j * f(p[0], p[1]).powi(2);
        }
    }
    acc.sqrt()
}

/// Gradient seminorm (squared) of a discrete scalar field, plus its L2 norm.
pub fn discrete_scalar_norms(mesh: &Mesh, coeffs: &[f64]) -> (f64, f64) {
    let tri_q = tri_rule_3();
    let quad_q = quad_rule_2x2();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let map = ElementMap::new(mesh, ci);
        let rule = match cell.kind {
            CellKind::Triangle => &tri_q,
            CellKind::Quad => &quad_q,
        };
        for qp in rule {
            let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
            let w = qp.w * sh.det_j;
            let mut v = 0.0;
            let mut gx = 0.0;
            let mut gy = 0.0;
            for (k, &gv) in cell.vertices().iter().enumerate() {
                v += sh.vals[k] * coeffs[gv];
                gx += sh.grad_x[k] * coeffs[gv];
                gy += sh.grad_y[k] * coeffs[gv];
            }
            l2 += w * v * v;
            h1 += w * (gx * gx + gy * gy);
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// The stability norm `(nu ||grad v||^2 + ||p||^2 + H^2 ||grad p||^2)^(1/2)`
/// of a discrete pair.
pub fn triple_norm(mesh: &Mesh, sol: &[f64], nu: f64) -> f64 {
    let n = mesh.vertices.len();
    let (_, v1_h1) = discrete_scalar_norms(mesh, &sol[..n]);
    let (_, v2_h1) = discrete_scalar_norms(mesh, &sol[n..2 * n]);
    let (p_l2, p_h1) = discrete_scalar_norms(mesh, &sol[2 * n..]);
    (nu * (v1_h1 * v1_h1 + v2_h1 * v2_h1)
        + p_l2 * p_l2
        + mesh.h_patch * mesh.h_patch * p_h1 * p_h1)
        .sqrt()
}

/// Least-squares fit of `e(h) = c * h^alpha` in log-log space; returns `(c, alpha)`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<(f64, f64), AssemblyError> {
    if points.len() < 2 {
        return Err(AssemblyError::InvalidArgument("order fit needs >= 2 points".into()));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(AssemblyError::InvalidArgument("order fit needs positive data".into()));
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in points {
        let x = h.ln();
        let y = e.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let c = ((sy - alpha * sx) / n).exp();
    Ok((c, alpha))
}

/// Per-refinement error table with fitted orders.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceRecord {
    /// `(H, errors)` with strictly decreasing `H`.
    pub rows: Vec<(f64, ErrorNorms)>,
    /// Fitted `alpha` per norm, in the order v_h1, v_l2, p_l2, p_h1.
    pub orders: [f64; 4],
    pub constants: [f64; 4],
}

impl ConvergenceRecord {
    pub fn fit(rows: Vec<(f64, ErrorNorms)>) -> Self {
        let mut rec = ConvergenceRecord { rows, ..Default::default() };
        let cols: [fn(&ErrorNorms) -> f64; 4] = [
            |e| e.v_h1,
            |e| e.v_l2,
            |e| e.p_l2,
            |e| e.p_h1,
        ];
        for (k, col) in cols.iter().enumerate() {
            let pts: Vec<(f64, f64)> =
                rec.rows.iter().map(|(h, e)| (*h, col(e))).collect();
            if let Ok((c, a)) = fit_order(&pts) {
                rec.constants[k] = c;
                rec.orders[k] = a;
            }
        }
        rec
    }
}

/// Ritz projection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RitzMode {
    /// `(grad R u, grad phi) = (grad u, grad phi)` with `u`'s boundary values
    /// on the Dirichlet set of the space.
    Dirichlet,
    /// Projection on the zero-mean space, conserving the mean of `u`.
    MeanValue,
}

/// H1 projection of a function with known gradient onto the scalar space.
pub fn ritz_project<F, G>(
    space: &FeSpace<'_>,
    u: F,
    grad_u: G,
    mode: RitzMode,
) -> Result<Vec<f64>, SolveError>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> [f64; 2],
{
    let mesh = space.mesh;
    let n = mesh.vertices.len();
    let tri_q = tri_rule_7();
    let quad_q = quad_rule_4x4();
    let mut trip = TripletBuffer::new(n + 1, n + 1);
    let mut rhs = vec![0.0; n + 1];
    let mut mass = vec![0.0; n]; // int phi_i, for the mean constraint
    let mut mean_u = 0.0;
    let mut area = 0.0;
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let map = ElementMap::new(mesh, ci);
        let rule = match cell.kind {
            CellKind::Triangle => &tri_q,
            CellKind::Quad => &quad_q,
        };
        let verts = cell.vertices();
        for qp in rule {
            let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
            let w = qp.w * sh.det_j;
            let p = map.map(qp.xy[0], qp.xy[1]);
            let gu = grad_u(p[0], p[1]);
            for (i, &gi) in verts.iter().enumerate() {
                rhs[gi] += w * (gu[0] * sh.grad_x[i] + gu[1] * sh.grad_y[i]);
                mass[gi] += w * sh.vals[i];
                for (j, &gj) in verts.iter().enumerate() {
                    trip.push(
                        gi,
                        gj,
                        w * (sh.grad_x[i] * sh.grad_x[j] + sh.grad_y[i] * sh.grad_y[j]),
                    );
                }
            }
            mean_u += w * u(p[0], p[1]);
            area += w;
        }
    }

    match mode {
        RitzMode::Dirichlet => {
            if !space.dirichlet.iter().any(|&d| d) {
                return Err(SolveError::SingularMatrix);
            }
            // eliminate Dirichlet DOFs at u's nodal values
            let mut fixed = vec![false; n + 1];
            let mut fixed_val = vec![0.0; n + 1];
            for (v, &d) in space.dirichlet.iter().enumerate() {
                if d {
                    fixed[v] = true;
                    let p = mesh.vertices[v];
                    fixed_val[v] = u(p[0], p[1]);
                }
            }
            fixed[n] = true; // unused multiplier row
            fixed_val[n] = 0.0;
            let a = trip.to_csr();
            let mut out = TripletBuffer::new(n + 1, n + 1);
            let mut rhs2 = rhs.clone();
            for r in 0..n + 1 {
                if fixed[r] {
                    continue;
                }
                for (c, v) in a.iter_row(r) {
                    if fixed[c] {
                        rhs2[r] -= v * fixed_val[c];
                    } else {
                        out.push(r, c, v);
                    }
                }
            }
            for d in 0..n + 1 {
                if fixed[d] {
                    out.push(d, d, 1.0);
                    rhs2[d] = fixed_val[d];
                }
            }
            let (x, _) = solve(&out.to_csr(), &rhs2, 1e-9)?;
            Ok(x[..n].to_vec())
        }
        RitzMode::MeanValue => {
            // saddle system with a single mean constraint
            for v in 0..n {
                trip.push(v, n, mass[v]);
                trip.push(n, v, mass[v]);
            }
            rhs[n] = mean_u;
            let _ = area;
            let (x, _) = solve(&trip.to_csr(), &rhs, 1e-9)?;
            Ok(x[..n].to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_lmfem_mesh, build_patch_mesh, Circle, Rect};
    use crate::space::{build_space, DirichletSelection};

    fn plain_mesh(n: usize) -> Mesh {
        let far = Circle::hole(100.0, 100.0, 0.1);
        let pm = build_patch_mesh(n, n, Rect::unit_centered()).unwrap();
        build_lmfem_mesh(&pm, &far, 1e-8).unwrap()
    }

    #[test]
    fn manufactured_point_values() {
        // x0=y0=0, r=0.4 at the origin: k=-0.16, v=(0, -3k^2), p=0
        let ex = ExactSolution::new(0.0, 0.0, 0.4);
        let v = ex.velocity(0.0, 0.0);
        assert!((v[0]).abs() < 1e-15);
        assert!((v[1] - (-3.0 * 0.16f64.powi(2) * 1.0)).abs() < 1e-15);
        assert!((v[1] + 0.0768).abs() < 1e-15);
        assert!(ex.pressure(0.0, 0.0).abs() < 1e-15);
        // factor (x-1): everything vanishes on x = 1
        for y in [-0.7, 0.0, 0.9] {
            let v = ex.velocity(1.0, y);
            assert_eq!(v, [0.0, 0.0]);
            assert_eq!(ex.pressure(1.0, y), 0.0);
        }
        // v vanishes on the circle k = 0
        for t in 0..16 {
            let a = std::f64::consts::TAU * t as f64 / 16.0;
            let v = ex.velocity(0.4 * a.cos(), 0.4 * a.sin());
            assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
        }
    }

    #[test]
    fn manufactured_residuals() {
        // div v = 0, f = -nu lap v + grad p (FD check), do-nothing on x=1
        let ex = ExactSolution::new(0.13, -0.21, 0.4);
        let mut seed = 99u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            2.0 * (((seed >> 11) as f64) / ((1u64 << 53) as f64)) - 1.0
        };
        let h = 1e-3;
        for _ in 0..1000 {
            let (x, y) = (rnd(), rnd());
            // divergence via analytic gradients
            let (g1, g2) = ex.velocity_gradients(x, y);
            assert!((g1[0] + g2[1]).abs() < 1e-10, "div v != 0 at ({x},{y})");
            // gradients vs central differences
            let num_g1x =
                (ex.velocity(x + 1e-6, y)[0] - ex.velocity(x - 1e-6, y)[0]) / 2e-6;
            assert!((num_g1x - g1[0]).abs() < 1e-6 * (1.0 + g1[0].abs()));
            // momentum residual f + nu lap v - grad p = 0 with a fourth-order
            // FD Laplacian (the float floor of the second-order stencil is
            // ~1e-4 at this solution scale)
            let lap = |comp: usize| -> f64 {
                let s = |dx: f64, dy: f64| ex.velocity(x + dx, y + dy)[comp];
                let d2x = (-s(2.0 * h, 0.0) + 16.0 * s(h, 0.0) - 30.0 * s(0.0, 0.0)
                    + 16.0 * s(-h, 0.0)
                    - s(-2.0 * h, 0.0))
                    / (12.0 * h * h);
                let d2y = (-s(0.0, 2.0 * h) + 16.0 * s(0.0, h) - 30.0 * s(0.0, 0.0)
                    + 16.0 * s(0.0, -h)
                    - s(0.0, -2.0 * h))
                    / (12.0 * h * h);
                d2x + d2y
            };
            let f = ex.forcing(x, y);
            let gp = ex.pressure_gradient(x, y);
            for comp in 0..2 {
                let resid = f[comp] + ex.nu * lap(comp) - gp[comp];
                assert!(resid.abs() < 1e-6, "momentum residual {resid} at ({x},{y})");
            }
        }
        // do-nothing trace nu dv/dx - p = 0 and dv2/dx = 0 on x = 1
        for t in 0..32 {
            let y = -1.0 + 2.0 * t as f64 / 31.0;
            let (g1, g2) = ex.velocity_gradients(1.0, y);
            assert!((ex.nu * g1[0] - ex.pressure(1.0, y)).abs() < 1e-10);
            assert!(g2[0].abs() < 1e-10);
        }
    }

    #[test]
    fn error_norms_exact_interpolant_of_linear() {
        let mesh = plain_mesh(4);
        let n = mesh.vertices.len();
        // discrete fields equal to the nodal interpolant of a linear exact
        // solution reproduce it exactly: compare against itself via a custom
        // "exact" built from the same linear functions
        let mut sol = vec![0.0; 3 * n];
        for (v, p) in mesh.vertices.iter().enumerate() {
            sol[v] = p[1];
            sol[n + v] = p[0];
            sol[2 * n + v] = 0.0;
        }
        // the manufactured family has no linear member, so check through
        // discrete_scalar_norms instead: interpolant of x has H1 norm = area^(1/2)*1
        let xs: Vec<f64> = mesh.vertices.iter().map(|p| p[0]).collect();
        let (l2, h1) = discrete_scalar_norms(&mesh, &xs);
        assert!((h1 - 2.0).abs() < 1e-12); // ||grad x||_{L2([-1,1]^2)} = sqrt(4) = 2
        let exact_l2 = (4.0f64 / 3.0).sqrt();
        assert!((l2 - exact_l2).abs() < 1e-12, "||x|| = {l2} vs 2/sqrt(3)");
    }

    #[test]
    fn l2_norm_closed_form() {
        // ||p|| for p = x on [-1,1]^2 is 2/sqrt(3)
        let mesh = plain_mesh(3);
        let nrm = l2_norm_of(&mesh, |x, _| x);
        assert!((nrm - 2.0 / 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_order_exact_and_noisy() {
        let pts: Vec<(f64, f64)> = [0.25, 0.125, 0.0625, 0.03125]
            .iter()
            .map(|&h: &f64| (h, h * h))
            .collect();
        let (c, a) = fit_order(&pts).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-12);
        // e = 3 h^1.5 with 1% multiplicative noise: alpha within 0.05
        let noise = [1.01, 0.99, 1.008, 0.995];
        let pts: Vec<(f64, f64)> = [0.25f64, 0.125, 0.0625, 0.03125]
            .iter()
            .zip(noise.iter())
            .map(|(&h, &z)| (h, 3.0 * h.powf(1.5) * z))
            .collect();
        let (_, a) = fit_order(&pts).unwrap();
        assert!((a - 1.5).abs() < 0.05);
        // paper's S velocity-H1 column
        let pts = [
            (0.25, 20.55),
            (0.125, 10.14),
            (0.0625, 5.02),
            (0.03125, 2.50),
        ];
        let (_, a) = fit_order(&pts).unwrap();
        assert!((a - 1.02).abs() < 0.02, "fitted {a}");
        assert!(fit_order(&[(0.1, 0.0), (0.2, 1.0)]).is_err());
    }

    #[test]
    fn ritz_projection_linear_fixed_point_and_mean() {
        let mesh = plain_mesh(4);
        let space = build_space(&mesh, DirichletSelection::all());
        let u = |x: f64, y: f64| 1.0 + 2.0 * x - 0.5 * y;
        let gu = |_x: f64, _y: f64| [2.0, -0.5];
        let proj = ritz_project(&space, u, gu, RitzMode::Dirichlet).unwrap();
        for (v, p) in mesh.vertices.iter().enumerate() {
            assert!((proj[v] - u(p[0], p[1])).abs() < 1e-9);
        }
        // mean-value mode conserves the mean
        let u2 = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * y.exp();
        let gu2 = |x: f64, y: f64| {
            [
                std::f64::consts::PI * (std::f64::consts::PI * x).cos() * y.exp(),
                (std::f64::consts::PI * x).sin() * y.exp(),
            ]
        };
        let proj = ritz_project(&space, u2, gu2, RitzMode::MeanValue).unwrap();
        // discrete mean vs continuous mean
        let mut mean_h = 0.0;
        let mut mean_u = 0.0;
        let mut area = 0.0;
        let quad_q = quad_rule_4x4();
        for ci in 0..mesh.cells.len() {
            let map = ElementMap::new(&mesh, ci);
            for qp in &quad_q {
                let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
                let w = qp.w * sh.det_j;
                let p = map.map(qp.xy[0], qp.xy[1]);
                let mut v = 0.0;
                for (k, &gv) in mesh.cells[ci].vertices().iter().enumerate() {
                    v += sh.vals[k] * proj[gv];
                }
                mean_h += w * v;
                mean_u += w * u2(p[0], p[1]);
                area += w;
            }
        }
        assert!(((mean_h - mean_u) / area).abs() < 1e-10);
    }

    #[test]
    fn ritz_projection_first_order_convergence() {
        // ||grad(u - R_h u)|| halves per refinement for u = sin(pi x) sin(pi y)
        let pi = std::f64::consts::PI;
        let u = |x: f64, y: f64| (pi * x).sin() * (pi * y).sin();
        let gu = move |x: f64, y: f64| {
            [
                pi * (pi * x).cos() * (pi * y).sin(),
                pi * (pi * x).sin() * (pi * y).cos(),
            ]
        };
        let mut errs = Vec::new();
        for n in [4usize, 8, 16] {
            let mesh = plain_mesh(n);
            let space = build_space(&mesh, DirichletSelection::all());
            let proj = ritz_project(&space, u, gu, RitzMode::Dirichlet).unwrap();
            // H1 seminorm of the error by quadrature
            let mut err2 = 0.0;
            let rule = quad_rule_4x4();
            for ci in 0..mesh.cells.len() {
                let map = ElementMap::new(&mesh, ci);
                for qp in &rule {
                    let sh = map.eval(qp.xy[0], qp.xy[1]).unwrap();
                    let w = qp.w * sh.det_j;
                    let p = map.map(qp.xy[0], qp.xy[1]);
                    let ge = gu(p[0], p[1]);
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for (k, &gv) in mesh.cells[ci].vertices().iter().enumerate() {
                        gx += sh.grad_x[k] * proj[gv];
                        gy += sh.grad_y[k] * proj[gv];
                    }
                    err2 += w * ((ge[0] - gx).powi(2) + (ge[1] - gy).powi(2));
                }
            }
            errs.push(err2.sqrt());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.25, "H1 error ratio {ratio}");
        }
    }

    #[test]
    fn triple_norm_basics() {
        let mesh = plain_mesh(3);
        let n = mesh.vertices.len();
        let zero = vec![0.0; 3 * n];
        assert_eq!(triple_norm(&mesh, &zero, 1.0), 0.0);
        // v = 0, p = c on the domain of area 4: |||.||| = |c| * 2
        let mut sol = vec![0.0; 3 * n];
        for v in 0..n {
            sol[2 * n + v] = -1.5;
        }
        let t = triple_norm(&mesh, &sol, 1.0);
        assert!((t - 1.5 * 2.0).abs() < 1e-12);
        // random fields match term-by-term recomputation
        let mut seed = 5u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let sol: Vec<f64> = (0..3 * n).map(|_| rnd()).collect();
        let nu = 0.7;
        let t = triple_norm(&mesh, &sol, nu);
        let (_, g1) = discrete_scalar_norms(&mesh, &sol[..n]);
        let (_, g2) = discrete_scalar_norms(&mesh, &sol[n..2 * n]);
        let (pl, ph) = discrete_scalar_norms(&mesh, &sol[2 * n..]);
        let expect =
            (nu * (g1 * g1 + g2 * g2) + pl * pl + mesh.h_patch.powi(2) * ph * ph).sqrt();
        assert!((t - expect).abs() <= 1e-12 * expect);
    }
}
