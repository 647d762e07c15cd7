//! A small parameter sweep driven by the configuration grammar, reported
//! as CSV and as a side-by-side markdown table.
//!
//!     cargo run --release --example sweep
//!
//! The same text saved to a file runs through `geneo-bench run --config`.

use rgeneo::bench::{emit_report, parse_config, run_experiment, ReportFormat};

const CONFIG: &str = "\
# both coarse spaces on growing partitions
elements_per_subdomain = 24
coefficient = channels
contrast = 1e6
mode = both
m = 12

[repeat]
subdomains = 2, 3, 4
";

fn main() -> rgeneo::Result<()> {
    let mut rows = Vec::new();
    for cfg in parse_config(CONFIG)? {
        rows.extend(run_experiment(&cfg)?);
    }
    print!("{}", emit_report(&rows, ReportFormat::Csv));
    println!();
    print!("{}", emit_report(&rows, ReportFormat::Markdown));
    Ok(())
}
