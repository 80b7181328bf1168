//! File exports: legacy ASCII VTK, MatrixMarket, CSV tables.

use std::io::{self, Write};

use crate::mesh::{CellKind, Mesh, QualityReport, Region};
use crate::solver::SparseMatrix;
use crate::stab::StabMatrix;
use crate::verify::ConvergenceRecord;

/// Format with six significant digits, matching the table precision of the
/// reference experiments with headroom.
pub fn fmt_g6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{:.5e}", v);
    // prefer plain notation for moderate magnitudes
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let t = format!("{:.*}", decimals, v);
        let t = t.trim_end_matches('0').trim_end_matches('.').to_string();
        if !t.is_empty() && t != "-" {
            return t;
        }
    }
    s
}

/// Legacy ASCII VTK unstructured grid with cell data `region` (0 regular,
/// 1 aniso) and `aspect_ratio`, plus optional point data `v` and `p`.
pub fn write_vtk<W: Write>(
    w: &mut W,
    mesh: &Mesh,
    fields: Option<&[f64]>,
) -> io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "anisostokes mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.17e} {:.17e} 0.0", p[0], p[1])?;
    }
    let list_len: usize = mesh.cells.iter().map(|c| c.nv() + 1).sum();
    writeln!(w, "CELLS {} {}", mesh.cells.len(), list_len)?;
    for c in &mesh.cells {
        let vs = c.vertices();
        write!(w, "{}", vs.len())?;
        for v in vs {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.cells.len())?;
    for c in &mesh.cells {
        // 5 = VTK_TRIANGLE, 9 = VTK_QUAD
        writeln!(w, "{}", if c.kind == CellKind::Triangle { 5 } else { 9 })?;
    }
    writeln!(w, "CELL_DATA {}", mesh.cells.len())?;
    writeln!(w, "SCALARS region int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for c in &mesh.cells {
        writeln!(w, "{}", if c.region == Region::Aniso { 1 } else { 0 })?;
    }
    writeln!(w, "SCALARS aspect_ratio double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for ci in 0..mesh.cells.len() {
        let pts = mesh.cell_points(ci);
        let n = pts.len();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 0..n {
            let q = pts[(k + 1) % n];
            let p = pts[k];
            let l = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            lo = lo.min(l);
            hi = hi.max(l);
        }
        writeln!(w, "{:.17e}", hi / lo)?;
    }
    if let Some(sol) = fields {
        let n = mesh.vertices.len();
        writeln!(w, "POINT_DATA {n}")?;
        writeln!(w, "VECTORS v double")?;
        for v in 0..n {
            writeln!(w, "{:.17e} {:.17e} 0.0", sol[v], sol[n + v])?;
        }
        writeln!(w, "SCALARS p double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in 0..n {
            writeln!(w, "{:.17e}", sol[2 * n + v])?;
        }
    }
    Ok(())
}

/// MatrixMarket coordinate format (general, real).
pub fn write_matrix_market<W: Write>(w: &mut W, a: &SparseMatrix) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows, a.n_cols, a.nnz())?;
    for r in 0..a.n_rows {
        for (c, v) in a.iter_row(r) {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

/// Parse a MatrixMarket coordinate file (general real), for cross-checks.
pub fn read_matrix_market<R: io::BufRead>(r: R) -> io::Result<SparseMatrix> {
    use crate::solver::TripletBuffer;
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty file"))??;
    if !header.starts_with("%%MatrixMarket matrix coordinate real") {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a real coordinate matrix"));
    }
    let mut size_line = None;
    for line in lines.by_ref() {
        let line = line?;
        if line.starts_with('%') || line.trim().is_empty() {
            continue;
        }
        size_line = Some(line);
        break;
    }
    let size_line =
        size_line.ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{e}"))))
        .collect::<Result<_, _>>()?;
    if dims.len() != 3 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad size line"));
    }
    let mut trip = TripletBuffer::new(dims[0], dims[1]);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let r: usize = it.next().unwrap().parse().map_err(bad)?;
        let c: usize = it.next().ok_or_else(|| bad("missing column"))?.parse().map_err(bad)?;
        let v: f64 = it.next().ok_or_else(|| bad("missing value"))?.parse().map_err(bad)?;
        trip.push(r - 1, c - 1, v);
    }
    Ok(trip.to_csr())
}

fn bad<E: std::fmt::Display>(e: E) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

/// Convergence table CSV: one row per level plus a fitted-order footer.
pub fn write_convergence_csv<W: Write>(w: &mut W, rec: &ConvergenceRecord) -> io::Result<()> {
    writeln!(w, "H,err_v_h1,err_v_l2,err_p_l2,err_p_h1")?;
    for (h, e) in &rec.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_g6(*h),
            fmt_g6(e.v_h1),
            fmt_g6(e.v_l2),
            fmt_g6(e.p_l2),
            fmt_g6(e.p_h1)
        )?;
    }
    writeln!(
        w,
        "order,{},{},{},{}",
        fmt_g6(rec.orders[0]),
        fmt_g6(rec.orders[1]),
        fmt_g6(rec.orders[2]),
        fmt_g6(rec.orders[3])
    )?;
    Ok(())
}

/// Mesh quality CSV row; the header matches the sweep tooling.
pub fn write_quality_csv<W: Write>(
    w: &mut W,
    rows: &[(f64, QualityReport)],
) -> io::Result<()> {
    writeln!(w, "x0,K_max,K_min,ratio,e_max,e_min,kappa_max,angle_max")?;
    for (x0, q) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_g6(*x0),
            fmt_g6(q.k_max),
            fmt_g6(q.k_min),
            fmt_g6(q.area_ratio),
            fmt_g6(q.e_max),
            fmt_g6(q.e_min),
            fmt_g6(q.kappa_max),
            fmt_g6(q.angle_max)
        )?;
    }
    Ok(())
}

/// Sweep CSV: `x0,p_h1_norm,kappa_max,K_min`.
pub fn write_sweep_csv<W: Write>(
    w: &mut W,
    samples: &[crate::driver::SweepSample],
) -> io::Result<()> {
    writeln!(w, "x0,p_h1_norm,kappa_max,K_min")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_g6(s.x0),
            fmt_g6(s.p_h1_norm),
            fmt_g6(s.kappa_max),
            fmt_g6(s.k_min)
        )?;
    }
    Ok(())
}

/// Per-edge stabilisation ledger CSV.
pub fn write_stab_ledger_csv<W: Write>(w: &mut W, stab: &StabMatrix) -> io::Result<()> {
    writeln!(w, "edge_id,class,h_n_1,h_n_2,h_tau,contribution")?;
    for rec in &stab.ledger {
        let class = match rec.class {
            crate::mesh::EdgeClass::Regular => "regular",
            crate::mesh::EdgeClass::Aniso => "aniso",
            crate::mesh::EdgeClass::BoundaryExterior => "boundary",
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            rec.edge,
            class,
            fmt_g6(rec.h_n_1),
            fmt_g6(rec.h_n_2),
            fmt_g6(rec.h_tau),
            fmt_g6(rec.contribution)
        )?;
    }
    Ok(())
}
