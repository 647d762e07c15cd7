//! a-harmonic extension of interface data into a subdomain core, and how it
//! compares with other extensions of the same trace.
//!
//!     cargo run --example harmonic_extension

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgeneo::analysis::element_energy;
use rgeneo::coarse::harmonic_extension;
use rgeneo::decomp::build_partition;
use rgeneo::fem::{gen_coefficient, CoefficientKind, GlobalSystem, StructuredMesh};

fn main() -> rgeneo::Result<()> {
    let mesh = StructuredMesh::unit_square(48, 48)?;
    let coeff = gen_coefficient(CoefficientKind::Islands, 1e3, 5, &mesh)?;
    let sys = GlobalSystem::model_problem(&mesh, &coeff)?;
    let layout = build_partition(&mesh, 3, 3, 2, 1)?;
    let j = 4;
    let s = &layout.subdomains[j];

    // trace on Γ°: the restriction of a smooth function
    let trace: Vec<f64> = s
        .gamma_circ
        .iter()
        .map(|&d| {
            let (x, y) = mesh.dof_coords(d);
            (3.0 * x).sin() * (2.0 * y).cos()
        })
        .collect();
    let u = harmonic_extension(&sys, &layout, j, &trace)?;
    let mut full = vec![0.0; sys.n()];
    for (&d, &v) in s.core_dofs.iter().zip(&u) {
        full[d] = v;
    }
    let e = element_energy(&sys, &s.core_elements, &full)?;
    println!(
        "|Γ°| = {}, |ω°| = {} dofs, core energy {e:.6}",
        s.gamma_circ.len(),
        s.core_dofs.len()
    );

    // perturbing interior values with the trace fixed only adds energy
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for scale in [1e-3, 1e-2, 1e-1] {
        let mut v = full.clone();
        for &d in &s.core_dofs {
            if s.gamma_circ.binary_search(&d).is_err() && !sys.is_dirichlet[d] {
                v[d] += scale * rng.random_range(-1.0..1.0);
            }
        }
        let ev = element_energy(&sys, &s.core_elements, &v)?;
        println!(
            "  perturbation {scale:.0e}: energy {ev:.6} (+{:.2e})",
            ev - e
        );
    }
    Ok(())
}
