//! Lowest modes of a semidefinite pencil `A t = λ B t`, on both the dense
//! and the block Krylov path.
//!
//!     cargo run --release --example generalized_eigen
//!
//! `B` is a weighted overlap matrix with a large kernel, so most of the
//! spectrum sits at infinity.

use rgeneo::coarse::build_geneo_pencil;
use rgeneo::decomp::build_partition;
use rgeneo::fem::{gen_coefficient, CoefficientKind, GlobalSystem, StructuredMesh};
use rgeneo::la::{gen_sym_eig, EigenOptions};

fn main() -> rgeneo::Result<()> {
    let mesh = StructuredMesh::unit_square(48, 48)?;
    let coeff = gen_coefficient(CoefficientKind::Inclusions, 1e4, 3, &mesh)?;
    let sys = GlobalSystem::model_problem(&mesh, &coeff)?;
    let layout = build_partition(&mesh, 3, 3, 2, 1)?;
    // the center subdomain floats: constants lie in ker A
    let p = build_geneo_pencil(&sys, &layout, 4)?;
    println!(
        "pencil of dimension {}, nnz(A) {}, nnz(B) {}",
        p.dim(),
        p.left.nnz(),
        p.right.nnz()
    );

    for (name, cap) in [("dense", usize::MAX), ("krylov", 0)] {
        let opts = EigenOptions {
            dense_cap: cap,
            ..EigenOptions::default()
        };
        let t = std::time::Instant::now();
        let pairs = gen_sym_eig(&p.left, &p.right, 8, &opts)?;
        let secs = t.elapsed().as_secs_f64();
        let mut worst = 0.0f64;
        for k in 0..pairs.finite_count() {
            let v = pairs.vector(k);
            let (av, bv) = (p.left.spmv(v)?, p.right.spmv(v)?);
            let lam = pairs.eigenvalues[k];
            let r = av
                .iter()
                .zip(&bv)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        let shown: Vec<String> = pairs
            .eigenvalues
            .iter()
            .take(8)
            .map(|l| format!("{l:.3e}"))
            .collect();
        println!("{name:>6}: {secs:.3}s, max residual {worst:.1e}");
        println!("        λ = [{}]", shown.join(", "));
    }
    Ok(())
}
