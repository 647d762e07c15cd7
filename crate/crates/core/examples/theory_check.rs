//! Compares the measured condition number with the analytic bound and
//! samples the local projections and the stable decomposition. Ends with
//! iteration counts for growing `m`, which are observed but not guaranteed
//! to be monotone.
//!
//!     cargo run --release --example theory_check

use rgeneo::bench::{execute, run_experiment, ExperimentConfig, RunModes};
use rgeneo::coarse::ModeRule;
use rgeneo::fem::CoefficientKind;

fn main() -> rgeneo::Result<()> {
    let cfg = ExperimentConfig {
        elements_per_subdomain: Some(24),
        px: 3,
        py: 3,
        coefficient: CoefficientKind::Inclusions,
        contrast: 1e6,
        mode: RunModes::Both,
        verify_theory: true,
        ..ExperimentConfig::default()
    };
    let run = execute(&cfg)?;
    for m in &run.modes {
        if let Some(t) = &m.theory {
            println!("{}", t.to_markdown());
        }
    }
    println!("all checks hold: {}", run.all_ok());

    println!("\n| m | GenEO its | R-GenEO its |\n|---|---|---|");
    for m in [2, 4, 8, 12, 16, 24] {
        let rows = run_experiment(&ExperimentConfig {
            rule: ModeRule::Fixed(m),
            verify_theory: false,
            ..cfg.clone()
        })?;
        println!("| {m} | {} | {} |", rows[0].iterations, rows[1].iterations);
    }
    Ok(())
}
