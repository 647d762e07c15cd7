use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rgeneo::bench::{
    default_out_dir, emit_report, execute, export_artifacts, parse_config, ExportFlags,
    ReportFormat, RunModes,
};

#[derive(Parser)]
#[command(
    version,
    about = "Two-level Schwarz benchmarks with GenEO and R-GenEO coarse spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's mode.
        #[arg(long)]
        mode: Option<RunModes>,
        /// Output directory (default: $GENEO_OUT_DIR or ./geneo-out).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        dump_matrices: bool,
        #[arg(long)]
        verify_theory: bool,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        mode,
        out,
        threads,
        dump_matrices,
        verify_theory,
    } = Cli::parse().command;
    match run(config, mode, out, threads, dump_matrices, verify_theory) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(
    config: PathBuf,
    mode: Option<RunModes>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    dump_matrices: bool,
    verify_theory: bool,
) -> rgeneo::Result<bool> {
    let text = std::fs::read_to_string(&config).map_err(|e| rgeneo::Error::Io {
        path: config.clone(),
        source: e,
    })?;
    let mut configs = parse_config(&text)?;
    let mut rows = Vec::new();
    let mut ok = true;
    for (i, cfg) in configs.iter_mut().enumerate() {
        if let Some(m) = mode {
            cfg.mode = m;
        }
        if let Some(t) = threads {
            cfg.threads = t;
        }
        cfg.dump_matrices |= dump_matrices;
        cfg.verify_theory |= verify_theory;
        cfg.validate()?;
        let base = default_out_dir(out.as_deref().or(cfg.out.as_deref()));
        let dir = base.join(format!("run{i:03}"));
        let (nx, ny) = cfg.mesh_size();
        eprintln!(
            "run {i}: {nx}x{ny} mesh, {}x{} subdomains, {} (contrast {:e}), mode {}, {} thread(s)",
            cfg.px,
            cfg.py,
            cfg.coefficient,
            if cfg.coefficient == rgeneo::fem::CoefficientKind::Constant {
                1.0
            } else {
                cfg.contrast
            },
            cfg.mode,
            cfg.threads
        );
        let run = execute(cfg)?;
        let flags = ExportFlags {
            matrices: cfg.dump_matrices,
            ..ExportFlags::all()
        };
        export_artifacts(&run, &dir, flags)?;
        for m in &run.modes {
            if let Some(t) = m.theory.as_ref().filter(|t| !t.shifted.is_empty()) {
                eprintln!(
                    "  warning: {}: m_j raised past zero eigenvalues on subdomains {:?}",
                    t.mode, t.shifted
                );
            }
            eprintln!(
                "  {:>7}: {} its, kappa {:.3}, t_setup {:.3}s, t_solve {:.3}s{}",
                m.row.mode,
                m.row.iterations,
                m.row.kappa,
                m.row.t_setup,
                m.row.t_solve,
                match m.row.bound {
                    Some(b) => format!(", bound {b:.1}"),
                    None => String::new(),
                }
            );
        }
        ok &= run.all_ok();
        rows.extend(run.rows());
        write(
            &base.join("results.csv"),
            &emit_report(&rows, ReportFormat::Csv),
        )?;
        write(
            &base.join("results.md"),
            &emit_report(&rows, ReportFormat::Markdown),
        )?;
    }
    print!("{}", emit_report(&rows, ReportFormat::Markdown));
    Ok(ok)
}

fn write(path: &std::path::Path, text: &str) -> rgeneo::Result<()> {
    std::fs::write(path, text).map_err(|e| rgeneo::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
