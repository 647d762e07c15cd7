//! Assembles the Q1 model problem on a high-contrast coefficient and solves
//! it directly.
//!
//!     cargo run --release --example assemble_model_problem -- [n] [out.pgm]
//!
//! The optional PGM is the coefficient field, black for the background.

use std::fs::File;
use std::io::BufWriter;

use rgeneo::fem::{gen_coefficient, CoefficientKind, GlobalSystem, StructuredMesh};

fn main() -> rgeneo::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(64, |s| s.parse().expect("mesh size"));
    let mesh = StructuredMesh::unit_square(n, n)?;
    let coeff = gen_coefficient(CoefficientKind::Channels, 1e6, 7, &mesh)?;
    let sys = GlobalSystem::model_problem(&mesh, &coeff)?;

    println!(
        "{n}x{n} elements, {} dofs, {} nonzeros",
        sys.n(),
        sys.a.nnz()
    );
    println!(
        "contrast {:e}, {} Dirichlet dofs",
        coeff.contrast(),
        sys.dirichlet.len()
    );

    let u = sys.solve_direct()?;
    let r: Vec<f64> = sys
        .a
        .spmv(&u)?
        .iter()
        .zip(&sys.f)
        .map(|(a, f)| a - f)
        .collect();
    let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!(
        "direct solve: max residual {res:.2e}, energy {:.6}",
        sys.energy(&u)
    );

    // the channels carry the flux: compare the midline profile with 1 - x
    let j = n / 2;
    for i in (0..=n).step_by((n / 8).max(1)) {
        let d = mesh.dof(i, j);
        let (x, _) = mesh.dof_coords(d);
        println!("  u({x:.3}, 0.5) = {:.6}   1 - x = {:.6}", u[d], 1.0 - x);
    }

    if let Some(path) = args.next() {
        let f = File::create(&path).map_err(|e| rgeneo::Error::Io {
            path: path.clone().into(),
            source: e,
        })?;
        coeff
            .write_pgm(&mesh, BufWriter::new(f))
            .map_err(|e| rgeneo::Error::Io {
                path: path.into(),
                source: e,
            })?;
    }
    Ok(())
}
