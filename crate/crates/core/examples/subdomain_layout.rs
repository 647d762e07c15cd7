//! Overlapping block partition with its overlap zones, cores and strips.
//!
//!     cargo run --example subdomain_layout -- [px] [per] [overlap] [strip]
//!
//! Prints the set sizes per subdomain and a character map of subdomain 0.

use rgeneo::decomp::{build_partition, compute_k0};
use rgeneo::fem::StructuredMesh;

fn main() -> rgeneo::Result<()> {
    let a: Vec<usize> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("integer"))
        .collect();
    let (p, per, overlap, strip) = (
        a.first().copied().unwrap_or(3),
        a.get(1).copied().unwrap_or(8),
        a.get(2).copied().unwrap_or(2),
        a.get(3).copied().unwrap_or(1),
    );
    let mesh = StructuredMesh::unit_square(p * per, p * per)?;
    let layout = build_partition(&mesh, p, p, overlap, strip)?;
    println!("{} subdomains, k0 = {}", layout.len(), compute_k0(&layout));
    println!(" j | elements | overlap | core | strip | |Γ°| | |Γ*|");
    for s in &layout.subdomains {
        println!(
            "{:>2} | {:>8} | {:>7} | {:>4} | {:>5} | {:>4} | {:>4}",
            s.index,
            s.elements.len(),
            s.overlap_elements.len(),
            s.core_elements.len(),
            s.star_elements.len(),
            s.gamma_circ.len(),
            s.gamma_star.len()
        );
    }

    // o: overlap zone, *: strip beyond it, .: rest of the core
    let s = &layout.subdomains[0];
    println!("\nsubdomain 0 (top row printed first):");
    for ey in (0..mesh.ny).rev() {
        let row: String = (0..mesh.nx)
            .map(|ex| {
                let e = mesh.element(ex, ey);
                let has = |v: &[usize]| v.binary_search(&e).is_ok();
                if has(&s.overlap_elements) {
                    'o'
                } else if has(&s.star_elements) {
                    '*'
                } else if has(&s.core_elements) {
                    '.'
                } else {
                    ' '
                }
            })
            .collect();
        println!("  |{row}|");
    }
    Ok(())
}
