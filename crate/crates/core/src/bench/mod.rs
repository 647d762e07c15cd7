//! Experiment driver: model problem, GenEO vs R-GenEO sweeps, reports.

mod config;
mod report;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{parse_config, ExperimentConfig, RunModes};
pub use report::{emit_report, parse_csv, BenchRow, ReportFormat};

use crate::analysis::{
    check_local_projections, condition_bounds, filtered, random_free_vector, stable_decomposition,
    TheoryReport,
};
use crate::coarse::{assemble_coarse, CoarseMode, CoarseOptions};
use crate::decomp::{build_partition, SubdomainLayout};
use crate::error::{Error, Result};
use crate::fem::{gen_coefficient, GlobalSystem, StructuredMesh};
use crate::krylov::{solve_system, PcgOptions, SolveReport};
use crate::la::EigenOptions;
use crate::precond::SchwarzPreconditioner;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GENEO_OUT_DIR";

/// Output directory: explicit value, then `GENEO_OUT_DIR`, then `geneo-out`.
pub fn default_out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("geneo-out"))
}

/// Everything produced for one preconditioner of an experiment.
#[derive(Debug)]
pub struct ModeRun {
    pub mode: Option<CoarseMode>,
    pub preconditioner: SchwarzPreconditioner,
    pub solution: Vec<f64>,
    pub report: SolveReport,
    pub theory: Option<TheoryReport>,
    pub row: BenchRow,
}

#[derive(Debug)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub system: GlobalSystem,
    pub layout: SubdomainLayout,
    pub modes: Vec<ModeRun>,
}

impl ExperimentRun {
    pub fn rows(&self) -> Vec<BenchRow> {
        self.modes.iter().map(|m| m.row.clone()).collect()
    }

    /// All runs converged and every evaluated bound held.
    pub fn all_ok(&self) -> bool {
        self.modes.iter().all(|m| {
            m.report.converged
                && m.row.bound_ok != Some(false)
                && m.theory.as_ref().is_none_or(theory_ok)
        })
    }
}

fn theory_ok(t: &TheoryReport) -> bool {
    t.bound_ok
        && t.decomposition_ratio.is_none_or(|r| r <= 1.0)
        && t.projections
            .iter()
            .all(|p| p.max_orthogonality_defect <= 1e-10 && p.max_stability_ratio <= 1.0 + 1e-8)
}

pub fn coarse_options(config: &ExperimentConfig) -> CoarseOptions {
    CoarseOptions {
        rule: config.rule,
        eigen: EigenOptions {
            dense_cap: config.dense_cap,
            seed: config.seed,
            ..EigenOptions::default()
        },
        ..CoarseOptions::default()
    }
}

/// Model problem and layout for a configuration.
pub fn build_problem(config: &ExperimentConfig) -> Result<(GlobalSystem, SubdomainLayout)> {
    config.validate()?;
    let (nx, ny) = config.mesh_size();
    let mesh = StructuredMesh::unit_square(nx, ny)?;
    let coefficient = gen_coefficient(
        config.coefficient,
        config.contrast,
        config.coefficient_seed,
        &mesh,
    )?;
    let system = GlobalSystem::model_problem(&mesh, &coefficient)?;
    let mut layout = build_partition(
        &mesh,
        config.px,
        config.py,
        config.overlap_layers,
        config.star_layers,
    )?;
    layout.eta_ramp = config.eta_ramp;
    Ok((system, layout))
}

/// Runs every requested mode of `config` on a pool of `config.threads`.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| execute_in_pool(config))
}

fn execute_in_pool(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let (system, layout) = build_problem(config)?;
    let pcg_opts = PcgOptions {
        tol: config.tol,
        max_iter: config.maxit,
        norm: config.residual_norm,
    };
    let mut modes = Vec::new();
    for mode in config.mode.expand() {
        let t0 = Instant::now();
        let coarse = match mode {
            Some(m) => Some(assemble_coarse(
                &system,
                &layout,
                m,
                &coarse_options(config),
            )?),
            None => None,
        };
        let precond = SchwarzPreconditioner::setup(&system, &layout, coarse)?;
        let t_setup = t0.elapsed().as_secs_f64();
        let (solution, mut report) = solve_system(&system, &precond, &pcg_opts)?;
        report.t_setup = t_setup;
        let theory = match (&precond.coarse, mode) {
            (Some(c), Some(_)) => {
                let mut th = condition_bounds(&layout, c, &report)?;
                if config.verify_theory {
                    verify_theory(&system, &layout, &precond, config.seed, &mut th)?;
                }
                Some(th)
            }
            _ => None,
        };
        let row = BenchRow {
            mode: mode.map_or("none".to_string(), |m| m.to_string()),
            n_subdomains: layout.len(),
            iterations: report.iterations,
            kappa: report.kappa,
            t_setup,
            t_solve: report.t_solve,
            coarse_dim: precond.coarse_dim(),
            bound: theory.as_ref().map(|t| t.bound),
            bound_ok: theory.as_ref().map(|t| t.bound_ok),
            converged: report.converged,
        };
        modes.push(ModeRun {
            mode,
            preconditioner: precond,
            solution,
            report,
            theory,
            row,
        });
    }
    Ok(ExperimentRun {
        config: config.clone(),
        system,
        layout,
        modes,
    })
}

/// Adds projection and stable-decomposition measurements to `th`.
pub fn verify_theory(
    system: &GlobalSystem,
    layout: &SubdomainLayout,
    precond: &SchwarzPreconditioner,
    seed: u64,
    th: &mut TheoryReport,
) -> Result<()> {
    let Some(coarse) = &precond.coarse else {
        return Ok(());
    };
    th.projections = coarse
        .locals
        .iter()
        .map(|l| check_local_projections(l, 20, seed))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let mut u = random_free_vector(system, &mut rng);
        if k % 2 == 1 {
            u = filtered(system, precond, &u)?;
        }
        let d = stable_decomposition(system, layout, coarse, &u)?;
        if d.reconstruction_error > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "stable decomposition does not reconstruct u (error {:e})",
                d.reconstruction_error
            )));
        }
        worst = worst.max(d.ratio);
    }
    th.decomposition_ratio = Some(worst);
    Ok(())
}

/// Rows for each requested mode, in mode order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    Ok(execute(config)?.rows())
}

/// Which optional files [`export_artifacts`] writes.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExportFlags {
    pub matrices: bool,
    pub coefficient: bool,
    pub solution: bool,
    pub layout: bool,
    pub eigenvalues: bool,
    pub residuals: bool,
    pub theory: bool,
}

impl ExportFlags {
    pub fn all() -> Self {
        ExportFlags {
            matrices: true,
            coefficient: true,
            solution: true,
            layout: true,
            eigenvalues: true,
            residuals: true,
            theory: true,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with(
    path: PathBuf,
    written: &mut Vec<PathBuf>,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(&path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the requested artifacts of `run` into `dir`; returns the paths.
pub fn export_artifacts(
    run: &ExperimentRun,
    dir: &Path,
    flags: ExportFlags,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mesh = &run.system.mesh;
    let mut written = Vec::new();
    if flags.matrices {
        write_with(dir.join("matrix.mtx"), &mut written, |w| {
            run.system.a.write_matrix_market(w)
        })?;
        for m in &run.modes {
            let Some(c) = &m.preconditioner.coarse else {
                continue;
            };
            for l in &c.locals {
                let j = l.subdomain();
                let stem = format!("pencil_{}_{j}", c.mode);
                write_with(dir.join(format!("{stem}_left.mtx")), &mut written, |w| {
                    l.problem.left.write_matrix_market(w)
                })?;
                write_with(dir.join(format!("{stem}_right.mtx")), &mut written, |w| {
                    l.problem.right.write_matrix_market(w)
                })?;
            }
        }
    }
    if flags.coefficient {
        let c = &run.system.coefficient;
        write_with(dir.join("coefficient.csv"), &mut written, |w| {
            c.write_csv(mesh, w)
        })?;
        write_with(dir.join("coefficient.pgm"), &mut written, |w| {
            c.write_pgm(mesh, w)
        })?;
    }
    if flags.layout {
        write_with(dir.join("layout.json"), &mut written, |w| {
            w.write_all(run.layout.to_json().as_bytes())
        })?;
    }
    for m in &run.modes {
        let tag = m.row.mode.as_str();
        if flags.solution {
            write_with(dir.join(format!("solution_{tag}.csv")), &mut written, |w| {
                writeln!(w, "dof,x,y,value")?;
                for (d, v) in m.solution.iter().enumerate() {
                    let (x, y) = mesh.dof_coords(d);
                    writeln!(w, "{d},{x},{y},{v}")?;
                }
                Ok(())
            })?;
        }
        if flags.residuals {
            write_with(
                dir.join(format!("residuals_{tag}.csv")),
                &mut written,
                |w| m.report.write_residual_csv(w),
            )?;
        }
        if let (true, Some(c)) = (flags.eigenvalues, &m.preconditioner.coarse) {
            write_with(
                dir.join(format!("eigenvalues_{tag}.csv")),
                &mut written,
                |w| {
                    writeln!(w, "subdomain,k,lambda,retained")?;
                    for l in &c.locals {
                        for (k, lam) in l.pairs.eigenvalues.iter().enumerate() {
                            writeln!(w, "{},{},{lam:e},{}", l.subdomain(), k + 1, k < l.m)?;
                        }
                    }
                    Ok(())
                },
            )?;
        }
        if let (true, Some(t)) = (flags.theory, &m.theory) {
            write_with(dir.join(format!("theory_{tag}.json")), &mut written, |w| {
                w.write_all(t.to_json().as_bytes())
            })?;
            write_with(dir.join(format!("theory_{tag}.md")), &mut written, |w| {
                w.write_all(t.to_markdown().as_bytes())
            })?;
        }
    }
    Ok(written)
}
