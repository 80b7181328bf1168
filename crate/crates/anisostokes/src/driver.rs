//! End-to-end drivers for the two numerical experiments and the boundary
//! position sweep.

use rayon::prelude::*;

use crate::error::Error;
use crate::mesh::{
    build_alternating_mesh, build_lmfem_mesh, build_patch_mesh, mesh_quality_report, BoundaryTag,
    Circle, Mesh, QualityReport, Rect, DEFAULT_SNAP_TOL,
};
use crate::solver::{solve, SolveReport, DEFAULT_SOLVE_TOL};
use crate::space::{build_space, DirichletSelection};
use crate::stab::{assemble, StabConfig};
use crate::stokes::{
    add_pressure_stabilisation, apply_dirichlet, assemble_stokes, finalize, pressure_gauge,
    PressureGauge,
};
use crate::verify::{discrete_scalar_norms, error_norms, ConvergenceRecord, ErrorNorms, ExactSolution};

/// Default circle radius shared by both examples.
pub const DEFAULT_RADIUS: f64 = 0.4;
/// Default stabilisation weight for Example 1 (variant `S`).
pub const EX1_GAMMA: f64 = 1e-2;
/// Default stabilisation weights for Example 2.
pub const EX2_GAMMA: f64 = 2.5e-3;
/// Vertical cell size ratio of the alternating Example-1 mesh.
pub const EX1_RATIO: f64 = 1e-3;

/// One solved case: coefficients in `[v1 | v2 | p]` ordering plus reports.
pub struct CaseResult {
    pub sol: Vec<f64>,
    pub report: SolveReport,
    pub errors: ErrorNorms,
    /// H1 seminorm of the discrete pressure itself.
    pub p_h1_discrete: f64,
    pub quality: QualityReport,
    pub n_dof: usize,
}

/// Solve one Stokes case on a prepared mesh with manufactured data.
pub fn solve_case(
    mesh: &Mesh,
    exact: &ExactSolution,
    cfg: &StabConfig,
    gauge: PressureGauge,
) -> Result<CaseResult, Error> {
    let selection = DirichletSelection::examples_default();
    let space_v = build_space(mesh, selection);
    let space_p = build_space(mesh, DirichletSelection::examples_default());
    let mut sys = assemble_stokes(&space_v, &space_p, exact.nu, |x, y| exact.forcing(x, y))?;
    let stab = assemble(&space_p, cfg)?;
    add_pressure_stabilisation(&mut sys, &stab.matrix);
    let ex = *exact;
    apply_dirichlet(&mut sys, &space_v, move |p, tag| match tag {
        BoundaryTag::Interface => [0.0, 0.0],
        _ => ex.velocity(p[0], p[1]),
    });
    pressure_gauge(&mut sys, gauge);
    let lin = finalize(&sys);
    let (mut sol, report) = solve(&lin.matrix, &lin.rhs, DEFAULT_SOLVE_TOL)?;
    lin.postprocess(&mut sol, &space_p);
    let errors = error_norms(mesh, &sol, exact);
    let n = mesh.vertices.len();
    let (_, p_h1_discrete) = discrete_scalar_norms(mesh, &sol[2 * n..]);
    Ok(CaseResult {
        sol,
        report,
        errors,
        p_h1_discrete,
        quality: mesh_quality_report(mesh),
        n_dof: 3 * n,
    })
}

/// Build the Example-1 mesh for patch size `H = 1/h_inv` on `[-1,1]^2`.
pub fn example1_mesh(h_inv: usize, ratio: f64) -> Result<Mesh, Error> {
    let n_coarse = 2 * h_inv;
    Ok(build_alternating_mesh(n_coarse, ratio, Rect::unit_centered())?)
}

/// Build the Example-2 mesh (circle of radius `r` at `(x0, 0)` extracted from
/// the square) for patch size `H = 1/h_inv`.
pub fn example2_mesh(h_inv: usize, x0: f64, radius: f64) -> Result<Mesh, Error> {
    let n = 2 * h_inv;
    let pm = build_patch_mesh(n, n, Rect::unit_centered())?;
    let circle = Circle::hole(x0, 0.0, radius);
    Ok(build_lmfem_mesh(&pm, &circle, DEFAULT_SNAP_TOL)?)
}

/// Run Example 1 over the given levels; `h_inv` entries are the reciprocal
/// patch sizes (4 means H = 1/4).
pub fn run_example1(levels: &[usize], cfg: &StabConfig) -> Result<ConvergenceRecord, Error> {
    let exact = ExactSolution::new(0.0, 0.0, DEFAULT_RADIUS);
    let mut rows = Vec::new();
    for &h_inv in levels {
        let mesh = example1_mesh(h_inv, EX1_RATIO)?;
        let res = solve_case(&mesh, &exact, cfg, PressureGauge::None)?;
        rows.push((1.0 / h_inv as f64, res.errors));
    }
    Ok(ConvergenceRecord::fit(rows))
}

/// Run Example 2 over the given levels at circle position `x0`.
pub fn run_example2(
    levels: &[usize],
    x0: f64,
    radius: f64,
    cfg: &StabConfig,
) -> Result<ConvergenceRecord, Error> {
    let exact = ExactSolution::new(x0, 0.0, radius);
    let mut rows = Vec::new();
    for &h_inv in levels {
        let mesh = example2_mesh(h_inv, x0, radius)?;
        let res = solve_case(&mesh, &exact, cfg, PressureGauge::None)?;
        rows.push((1.0 / h_inv as f64, res.errors));
    }
    Ok(ConvergenceRecord::fit(rows))
}

/// One sample of the boundary-position sweep.
#[derive(Debug, Clone)]
pub struct SweepSample {
    pub x0: f64,
    /// H1 seminorm of the discrete pressure, the Fig.-6 quantity.
    pub p_h1_norm: f64,
    pub kappa_max: f64,
    pub k_min: f64,
    pub residual: f64,
    /// Set when mesh construction or the solve failed; the sweep continues.
    pub error: Option<String>,
}

/// Sweep the circle midpoint `x0` from `start` to `end` (inclusive) in steps,
/// solving Example 2 on each mesh. Iterations run in parallel; results come
/// back ordered by `x0`.
pub fn x0_sweep(
    h_inv: usize,
    start: f64,
    end: f64,
    step: f64,
    radius: f64,
    cfg: &StabConfig,
) -> Vec<SweepSample> {
    let n_steps = ((end - start) / step).round() as usize;
    let xs: Vec<f64> = (0..=n_steps).map(|k| start + k as f64 * step).collect();
    xs.par_iter()
        .map(|&x0| {
            let exact = ExactSolution::new(x0, 0.0, radius);
            let mesh = match example2_mesh(h_inv, x0, radius) {
                Ok(m) => m,
                Err(e) => {
                    return SweepSample {
                        x0,
                        p_h1_norm: f64::NAN,
                        kappa_max: f64::NAN,
                        k_min: f64::NAN,
                        residual: f64::NAN,
                        error: Some(e.to_string()),
                    }
                }
            };
            let q = mesh_quality_report(&mesh);
            match solve_case(&mesh, &exact, cfg, PressureGauge::None) {
                Ok(res) => SweepSample {
                    x0,
                    p_h1_norm: res.p_h1_discrete,
                    kappa_max: q.kappa_max,
                    k_min: q.k_min,
                    residual: res.report.relative_residual,
                    error: None,
                },
                Err(e) => SweepSample {
                    x0,
                    p_h1_norm: f64::NAN,
                    kappa_max: q.kappa_max,
                    k_min: q.k_min,
                    residual: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stab::StabVariant;

    #[test]
    fn example1_coarse_level_matches_reference() {
        // Table-1 first row for stabilisation S, gamma = 1e-2
        let cfg = StabConfig::variant_s(EX1_GAMMA);
        let rec = run_example1(&[4], &cfg).unwrap();
        let e = rec.rows[0].1;
        assert!((e.v_h1 - 20.55).abs() / 20.55 < 0.02, "v_h1 = {}", e.v_h1);
        assert!((e.v_l2 - 1.27).abs() / 1.27 < 0.05, "v_l2 = {}", e.v_l2);
        assert!((e.p_l2 - 14.04).abs() / 14.04 < 0.10, "p_l2 = {}", e.p_l2);
    }

    #[test]
    fn example2_coarse_level_matches_reference() {
        // Table-2 first row for stabilisation S, gamma_i = gamma_0 = 2.5e-3
        let cfg = StabConfig::variant_s2(EX2_GAMMA, EX2_GAMMA);
        let cfg = StabConfig { variant: StabVariant::S, ..cfg };
        let rec = run_example2(&[4], 0.0, DEFAULT_RADIUS, &cfg).unwrap();
        let e = rec.rows[0].1;
        assert!((e.v_h1 - 18.05).abs() / 18.05 < 0.02, "v_h1 = {}", e.v_h1);
        assert!((e.v_l2 - 0.747).abs() / 0.747 < 0.10, "v_l2 = {}", e.v_l2);
    }

    #[test]
    fn sweep_handles_failures_gracefully() {
        let cfg = StabConfig::variant_s(EX2_GAMMA);
        let samples = x0_sweep(4, 0.0, 0.004, 1e-3, DEFAULT_RADIUS, &cfg);
        assert_eq!(samples.len(), 5);
        for w in samples.windows(2) {
            assert!(w[0].x0 < w[1].x0);
        }
        for s in &samples {
            assert!(s.error.is_none(), "x0={} failed: {:?}", s.x0, s.error);
            assert!(s.residual <= 1e-10);
        }
    }
}
