//! Command-line driver reproducing the convergence tables, the mesh-quality
//! table and the boundary-position sweep.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 mesh failure.

mod config;
mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use anisostokes::driver::{
    example1_mesh, example2_mesh, run_example1, run_example2, solve_case, x0_sweep,
    DEFAULT_RADIUS, EX1_GAMMA, EX1_RATIO, EX2_GAMMA,
};
use anisostokes::error::Error;
use anisostokes::io as aio;
use anisostokes::mesh::mesh_quality_report;
use anisostokes::stab::{StabConfig, StabVariant};
use anisostokes::stokes::PressureGauge;
use anisostokes::verify::ExactSolution;

use config::{load_config_file, ConfigFile};
use manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StabArg {
    #[value(name = "S", alias = "s")]
    S,
    #[value(name = "S2", alias = "s2")]
    S2,
    #[value(name = "SCIP", alias = "scip")]
    Scip,
    #[value(name = "none")]
    None,
}

#[derive(Parser, Debug)]
#[command(
    name = "anisostokes",
    about = "Stabilised equal-order Stokes solver on locally modified anisotropic meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Mesh levels as reciprocal patch sizes, e.g. 4,8,16,32 for H = 1/4 .. 1/32.
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<usize>>,

    /// Stabilisation variant.
    #[arg(long, global = true, value_enum)]
    stab: Option<StabArg>,

    /// Stabilisation weight (sets both the interior and regular weights).
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Weight of the anisotropic (average) part.
    #[arg(long = "gamma-i", global = true)]
    gamma_i: Option<f64>,

    /// Weight of the regular (jump) part.
    #[arg(long = "gamma-0", global = true)]
    gamma_0: Option<f64>,

    /// Circle midpoint x-coordinate.
    #[arg(long, global = true)]
    x0: Option<f64>,

    /// Circle midpoint y-coordinate.
    #[arg(long, global = true)]
    y0: Option<f64>,

    /// Circle radius.
    #[arg(long, global = true)]
    radius: Option<f64>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write the solution fields as legacy ASCII VTK.
    #[arg(long, global = true)]
    vtk: bool,

    /// Also dump the system matrix in MatrixMarket format.
    #[arg(long, global = true)]
    mm: bool,

    /// Key = value configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Also write the mesh-quality table.
    #[arg(long, global = true)]
    quality: bool,

    /// Step of the x0 sweep.
    #[arg(long = "sweep-step", global = true)]
    sweep_step: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convergence study on the alternating anisotropic mesh.
    Example1,
    /// Convergence study on the locally modified circle-hole mesh.
    Example2,
    /// Sweep the circle midpoint x0 and record the discrete pressure norm.
    Sweep,
    /// Mesh-quality table for a list of circle positions.
    MeshQuality,
    /// Solve a single case and report residual and errors.
    SingleSolve {
        /// Use Dirichlet data on all four outer boundaries (with the
        /// mean-zero pressure gauge for stabilised runs).
        #[arg(long = "pure-dirichlet")]
        pure_dirichlet: bool,
    },
}

/// Fully resolved run configuration (file defaults overridden by flags).
#[derive(Debug, Clone)]
struct RunConfig {
    levels: Vec<usize>,
    variant: StabVariant,
    gamma_i: f64,
    gamma_0: f64,
    x0: f64,
    y0: f64,
    radius: f64,
    out: PathBuf,
    vtk: bool,
    mm: bool,
    quality: bool,
    sweep_step: f64,
}

fn resolve(cli: &Cli, file: &ConfigFile, example2_defaults: bool) -> Result<RunConfig, String> {
    let variant = cli
        .stab
        .map(|s| match s {
            StabArg::S => StabVariant::S,
            StabArg::S2 => StabVariant::S2,
            StabArg::Scip => StabVariant::Scip,
            StabArg::None => StabVariant::None,
        })
        .or(file.stab)
        .unwrap_or(StabVariant::S);
    let default_gamma = if example2_defaults { EX2_GAMMA } else { EX1_GAMMA };
    let gamma = cli.gamma.or(file.gamma);
    let gamma_i = cli.gamma_i.or(file.gamma_i).or(gamma).unwrap_or(default_gamma);
    let gamma_0 = cli.gamma_0.or(file.gamma_0).or(gamma).unwrap_or(default_gamma);
    if variant != StabVariant::None && (gamma_i <= 0.0 || gamma_0 <= 0.0) {
        return Err("gamma must be positive unless the variant is none".into());
    }
    let levels = cli
        .levels
        .clone()
        .or_else(|| file.levels.clone())
        .unwrap_or_else(|| vec![4, 8, 16, 32]);
    if levels.is_empty() {
        return Err("at least one mesh level is required".into());
    }
    if levels.iter().any(|&l| l == 0) {
        return Err("mesh levels must be positive".into());
    }
    Ok(RunConfig {
        levels,
        variant,
        gamma_i,
        gamma_0,
        x0: cli.x0.or(file.x0).unwrap_or(0.0),
        y0: cli.y0.or(file.y0).unwrap_or(0.0),
        radius: cli.radius.or(file.radius).unwrap_or(DEFAULT_RADIUS),
        out: cli.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
        vtk: cli.vtk || file.vtk.unwrap_or(false),
        mm: cli.mm || file.mm.unwrap_or(false),
        quality: cli.quality || file.quality.unwrap_or(false),
        sweep_step: cli.sweep_step.or(file.sweep_step).unwrap_or(1e-3),
    })
}

impl RunConfig {
    fn stab_config(&self) -> StabConfig {
        StabConfig {
            variant: self.variant,
            gamma_i: self.gamma_i,
            gamma_0: self.gamma_0,
            skip_outer_patch_jumps: true,
        }
    }
}

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_MESH: u8 = 4;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version with success
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if let Some(threads) = std::env::var("ANISOSTOKES_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let file_cfg = match &cli.config {
        Some(path) => match load_config_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        },
        None => ConfigFile::default(),
    };
    let example2_like = matches!(cli.command, Command::Example2 | Command::Sweep);
    let cfg = match resolve(&cli, &file_cfg, example2_like) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Mesh(_) => EXIT_MESH,
                Error::Solve(_) => EXIT_NUMERICAL,
                Error::Assembly(_) => EXIT_USAGE,
                Error::Io(_) => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn run(cmd: &Command, cfg: &RunConfig) -> Result<(), Error> {
    let mut manifest = Manifest::new();
    match cmd {
        Command::Example1 => {
            let rec = run_example1(&cfg.levels, &cfg.stab_config())?;
            print_convergence("example1", &rec);
            let name = "example1_convergence.csv";
            let mut w = create(&cfg.out, name)?;
            aio::write_convergence_csv(&mut w, &rec)?;
            w.flush()?;
            manifest.add(&cfg.out, name)?;
            if cfg.vtk || cfg.mm {
                let &h_inv = cfg.levels.last().unwrap();
                write_field_artifacts(cfg, h_inv, false, &mut manifest)?;
            }
        }
        Command::Example2 => {
            let rec = run_example2(&cfg.levels, cfg.x0, cfg.radius, &cfg.stab_config())?;
            print_convergence("example2", &rec);
            let name = "example2_convergence.csv";
            let mut w = create(&cfg.out, name)?;
            aio::write_convergence_csv(&mut w, &rec)?;
            w.flush()?;
            manifest.add(&cfg.out, name)?;
            if cfg.quality {
                write_quality_table(cfg, &mut manifest)?;
            }
            if cfg.vtk || cfg.mm {
                let &h_inv = cfg.levels.last().unwrap();
                write_field_artifacts(cfg, h_inv, true, &mut manifest)?;
            }
        }
        Command::Sweep => {
            for &h_inv in &cfg.levels {
                let samples =
                    x0_sweep(h_inv, 0.0, 0.249, cfg.sweep_step, cfg.radius, &cfg.stab_config());
                let failures = samples.iter().filter(|s| s.error.is_some()).count();
                println!(
                    "sweep H=1/{h_inv}: {} samples, {} failures",
                    samples.len(),
                    failures
                );
                for s in samples.iter().filter(|s| s.error.is_some()) {
                    println!("  x0={}: {}", s.x0, s.error.as_ref().unwrap());
                }
                let name = format!("sweep_h{h_inv}.csv");
                let mut w = create(&cfg.out, &name)?;
                aio::write_sweep_csv(&mut w, &samples)?;
                w.flush()?;
                manifest.add(&cfg.out, &name)?;
            }
        }
        Command::MeshQuality => {
            write_quality_table(cfg, &mut manifest)?;
        }
        Command::SingleSolve { pure_dirichlet } => {
            let &h_inv = cfg.levels.first().unwrap();
            let exact = ExactSolution::new(cfg.x0, cfg.y0, cfg.radius);
            let mesh = example1_mesh(h_inv, EX1_RATIO)?;
            let result = if *pure_dirichlet {
                solve_pure_dirichlet(&mesh, &exact, &cfg.stab_config())
            } else {
                solve_case(&mesh, &exact, &cfg.stab_config(), PressureGauge::None)
                    .map(|r| (r.report.relative_residual, r.errors.v_h1))
            };
            match result {
                Ok((residual, v_h1)) => {
                    println!(
                        "single-solve H=1/{h_inv}: residual = {:.3e}, v_h1 error = {}",
                        residual,
                        aio::fmt_g6(v_h1)
                    );
                }
                Err(e) => return Err(e),
            }
        }
    }
    if !manifest.is_empty() {
        let mut w = create(&cfg.out, "manifest.txt")?;
        manifest.write(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn solve_pure_dirichlet(
    mesh: &anisostokes::mesh::Mesh,
    exact: &ExactSolution,
    stab_cfg: &StabConfig,
) -> Result<(f64, f64), Error> {
    use anisostokes::space::{build_space, DirichletSelection};
    use anisostokes::stokes::{
        add_pressure_stabilisation, apply_dirichlet, assemble_stokes, finalize, pressure_gauge,
    };
    let sv = build_space(mesh, DirichletSelection::all());
    let sp = build_space(mesh, DirichletSelection::all());
    let mut sys = assemble_stokes(&sv, &sp, exact.nu, |x, y| exact.forcing(x, y))?;
    let stab = anisostokes::stab::assemble(&sp, stab_cfg)?;
    add_pressure_stabilisation(&mut sys, &stab.matrix);
    let ex = *exact;
    apply_dirichlet(&mut sys, &sv, move |p, _| ex.velocity(p[0], p[1]));
    pressure_gauge(&mut sys, PressureGauge::MeanZeroShift);
    let lin = finalize(&sys);
    let (mut sol, report) = anisostokes::solver::solve(&lin.matrix, &lin.rhs, 1e-10)?;
    lin.postprocess(&mut sol, &sp);
    let errors = anisostokes::verify::error_norms(mesh, &sol, exact);
    Ok((report.relative_residual, errors.v_h1))
}

fn write_quality_table(cfg: &RunConfig, manifest: &mut Manifest) -> Result<(), Error> {
    let &h_inv = cfg.levels.first().unwrap();
    let mesh = example2_mesh(h_inv, cfg.x0, cfg.radius)?;
    let q = mesh_quality_report(&mesh);
    println!(
        "quality H=1/{h_inv} x0={}: K_max={} K_min={} kappa_max={} angle_max={}",
        cfg.x0,
        aio::fmt_g6(q.k_max),
        aio::fmt_g6(q.k_min),
        aio::fmt_g6(q.kappa_max),
        aio::fmt_g6(q.angle_max)
    );
    let name = "mesh_quality.csv";
    let mut w = create(&cfg.out, name)?;
    aio::write_quality_csv(&mut w, &[(cfg.x0, q)])?;
    w.flush()?;
    manifest.add(&cfg.out, name)?;
    Ok(())
}

fn write_field_artifacts(
    cfg: &RunConfig,
    h_inv: usize,
    example2: bool,
    manifest: &mut Manifest,
) -> Result<(), Error> {
    let exact = ExactSolution::new(cfg.x0, cfg.y0, cfg.radius);
    let mesh = if example2 {
        example2_mesh(h_inv, cfg.x0, cfg.radius)?
    } else {
        example1_mesh(h_inv, EX1_RATIO)?
    };
    let res = solve_case(&mesh, &exact, &cfg.stab_config(), PressureGauge::None)?;
    if cfg.vtk {
        let name = format!("fields_h{h_inv}.vtk");
        let mut w = create(&cfg.out, &name)?;
        aio::write_vtk(&mut w, &mesh, Some(&res.sol))?;
        w.flush()?;
        manifest.add(&cfg.out, &name)?;
    }
    if cfg.mm {
        use anisostokes::space::{build_space, DirichletSelection};
        use anisostokes::stokes::{
            add_pressure_stabilisation, apply_dirichlet, assemble_stokes, finalize,
        };
        let sv = build_space(&mesh, DirichletSelection::examples_default());
        let sp = build_space(&mesh, DirichletSelection::examples_default());
        let mut sys = assemble_stokes(&sv, &sp, exact.nu, |x, y| exact.forcing(x, y))?;
        let stab = anisostokes::stab::assemble(&sp, &cfg.stab_config())?;
        add_pressure_stabilisation(&mut sys, &stab.matrix);
        let ex = exact;
        apply_dirichlet(&mut sys, &sv, move |p, tag| match tag {
            anisostokes::mesh::BoundaryTag::Interface => [0.0, 0.0],
            _ => ex.velocity(p[0], p[1]),
        });
        let lin = finalize(&sys);
        let name = format!("system_h{h_inv}.mtx");
        let mut w = create(&cfg.out, &name)?;
        aio::write_matrix_market(&mut w, &lin.matrix)?;
        w.flush()?;
        manifest.add(&cfg.out, &name)?;
    }
    Ok(())
}

fn print_convergence(label: &str, rec: &anisostokes::verify::ConvergenceRecord) {
    println!("{label}: H, v_h1, v_l2, p_l2, p_h1");
    for (h, e) in &rec.rows {
        println!(
            "  {}  {}  {}  {}  {}",
            aio::fmt_g6(*h),
            aio::fmt_g6(e.v_h1),
            aio::fmt_g6(e.v_l2),
            aio::fmt_g6(e.p_l2),
            aio::fmt_g6(e.p_h1)
        );
    }
    println!(
        "  orders: v_h1 {:.2}, v_l2 {:.2}, p_l2 {:.2}, p_h1 {:.2}",
        rec.orders[0], rec.orders[1], rec.orders[2], rec.orders[3]
    );
}
