//! GenEO and R-GenEO coarse spaces side by side: pencil sizes, retained
//! modes, the first discarded eigenvalue and the setup cost.
//!
//!     cargo run --release --example coarse_spaces -- [per] [contrast]

use rgeneo::coarse::{assemble_coarse, CoarseMode, CoarseOptions};
use rgeneo::decomp::build_partition;
use rgeneo::fem::{gen_coefficient, CoefficientKind, GlobalSystem, StructuredMesh};

fn main() -> rgeneo::Result<()> {
    let mut args = std::env::args().skip(1);
    let per: usize = args
        .next()
        .map_or(32, |s| s.parse().expect("elements per subdomain"));
    let contrast: f64 = args.next().map_or(1e6, |s| s.parse().expect("contrast"));
    let mesh = StructuredMesh::unit_square(4 * per, 4 * per)?;
    let coeff = gen_coefficient(CoefficientKind::Channels, contrast, 7, &mesh)?;
    let sys = GlobalSystem::model_problem(&mesh, &coeff)?;
    let layout = build_partition(&mesh, 4, 4, 2, 1)?;

    for mode in [CoarseMode::Geneo, CoarseMode::RGeneo] {
        let c = assemble_coarse(&sys, &layout, mode, &CoarseOptions::default())?;
        let dims: Vec<usize> = c.locals.iter().map(|l| l.problem.dim()).collect();
        let cubes: f64 = dims.iter().map(|&d| (d as f64).powi(3)).sum();
        let lam = c.lambda_next();
        let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
        println!("{mode}:");
        println!(
            "  pencil dims {}..{}, Σ dim³ = {cubes:.3e}",
            dims.iter().min().unwrap(),
            dims.iter().max().unwrap()
        );
        println!(
            "  coarse dim {} ({} dropped), min λ_(m+1) = {lmin:.4}",
            c.dim(),
            c.dropped.len()
        );
        println!(
            "  eigenproblems {:.3}s, assembly {:.3}s",
            c.timings.eigenproblems, c.timings.assembly
        );
    }
    Ok(())
}
