//! One-level vs two-level additive Schwarz on the model problem.
//!
//!     cargo run --release --example solve_two_level -- [subdomains] [per]
//!
//! Writes nothing; prints iterations, the Lanczos condition estimate and
//! the residual history tail.

use rgeneo::coarse::{assemble_coarse, CoarseMode, CoarseOptions};
use rgeneo::decomp::build_partition;
use rgeneo::fem::{gen_coefficient, CoefficientKind, GlobalSystem, StructuredMesh};
use rgeneo::krylov::{solve_system, PcgOptions};
use rgeneo::precond::SchwarzPreconditioner;

fn main() -> rgeneo::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: usize = args
        .next()
        .map_or(4, |s| s.parse().expect("subdomains per axis"));
    let per: usize = args
        .next()
        .map_or(32, |s| s.parse().expect("elements per subdomain"));
    let mesh = StructuredMesh::unit_square(p * per, p * per)?;
    let coeff = gen_coefficient(CoefficientKind::Channels, 1e6, 7, &mesh)?;
    let sys = GlobalSystem::model_problem(&mesh, &coeff)?;
    let layout = build_partition(&mesh, p, p, 2, 1)?;
    let opts = PcgOptions::default();

    for mode in [None, Some(CoarseMode::Geneo), Some(CoarseMode::RGeneo)] {
        let coarse = mode
            .map(|m| assemble_coarse(&sys, &layout, m, &CoarseOptions::default()))
            .transpose()?;
        let m = SchwarzPreconditioner::setup(&sys, &layout, coarse)?;
        let (_, rep) = solve_system(&sys, &m, &opts)?;
        let name = mode.map_or("one-level".to_string(), |m| m.to_string());
        println!(
            "{name:>9}: {:>4} its, κ ≈ {:>10.2}, setup {:.2}s, solve {:.2}s, coarse dim {}",
            rep.iterations,
            rep.kappa,
            m.timings.total(),
            rep.t_solve,
            m.coarse_dim()
        );
        let tail: Vec<String> = rep
            .residuals
            .iter()
            .rev()
            .take(3)
            .rev()
            .map(|r| format!("{r:.1e}"))
            .collect();
        println!("           last residuals {}", tail.join(" "));
    }
    Ok(())
}
