mod common;

use common::*;
use nalgebra::DMatrix;
use rgeneo::analysis::element_energy;
use rgeneo::coarse::{
    assemble_coarse, build_coarse_vector, build_geneo_pencil, build_rgeneo_pencil,
    harmonic_extension, local_coarse_function, CoarseMode, CoarseOptions, HarmonicExtension,
    ModeRule,
};
use rgeneo::decomp::{build_eta, build_partition, build_pou, compute_k0};
use rgeneo::fem::{CoefficientField, CoefficientKind, GlobalSystem, StructuredMesh};
use rgeneo::la::{gen_sym_eig, EigenOptions, SparseSymMatrix};

fn min_eig(a: &SparseSymMatrix) -> f64 {
    to_na(a).symmetric_eigen().eigenvalues.min()
}

/// Brute-force membership count of every element in the subdomain boxes.
fn k0_enumerated(mesh: &StructuredMesh, boxes: &[[usize; 4]]) -> usize {
    (0..mesh.n_elements())
        .map(|e| {
            let (x, y) = mesh.element_position(e);
            boxes
                .iter()
                .filter(|b| x >= b[0] && x < b[1] && y >= b[2] && y < b[3])
                .count()
        })
        .max()
        .unwrap()
}

#[test]
fn two_by_two_overlap_zone_is_l_shaped() {
    let mesh = StructuredMesh::unit_square(8, 8).unwrap();
    let l = build_partition(&mesh, 2, 2, 1, 1).unwrap();
    let s = &l.subdomains[0];
    assert_eq!(s.elements.len(), 25);
    let expected: Vec<usize> = s
        .elements
        .iter()
        .copied()
        .filter(|&e| {
            let (x, y) = mesh.element_position(e);
            (3..=4).contains(&x) || (3..=4).contains(&y)
        })
        .collect();
    assert_eq!(s.overlap_elements, expected);
    assert_eq!(compute_k0(&l), 4);
}

#[test]
fn k0_matches_enumeration() {
    let cases = [
        (8, 8, 1, 1, 1),
        (8, 8, 2, 2, 1),
        (16, 4, 4, 1, 1),
        (24, 24, 3, 3, 2),
        (16, 16, 1, 4, 1),
    ];
    for (nx, ny, px, py, ell) in cases {
        let mesh = StructuredMesh::unit_square(nx, ny).unwrap();
        let l = build_partition(&mesh, px, py, ell, 1).unwrap();
        let boxes: Vec<[usize; 4]> = l.subdomains.iter().map(|s| s.element_box).collect();
        assert_eq!(compute_k0(&l), k0_enumerated(&mesh, &boxes));
    }
    let strips = build_partition(&StructuredMesh::unit_square(16, 4).unwrap(), 4, 1, 1, 1).unwrap();
    assert_eq!(strips.k0, 2);
    let single = build_partition(&StructuredMesh::unit_square(4, 4).unwrap(), 1, 1, 1, 1).unwrap();
    assert_eq!(single.k0, 1);
}

#[test]
fn core_and_overlap_partition_subdomain() {
    let mesh = StructuredMesh::unit_square(24, 24).unwrap();
    let l = build_partition(&mesh, 3, 3, 2, 1).unwrap();
    for s in &l.subdomains {
        let mut u = s.core_elements.clone();
        u.extend(&s.overlap_elements);
        u.sort();
        assert_eq!(u, s.elements);
        assert!(s
            .gamma_circ
            .iter()
            .all(|d| s.gamma_star.binary_search(d).is_err()));
        // Γ° = dofs shared by core and overlap elements
        let core = rgeneo::fem::element_set_dofs(&mesh, &s.core_elements);
        let shared: Vec<usize> = core
            .iter()
            .copied()
            .filter(|d| s.overlap_dofs.binary_search(d).is_ok())
            .collect();
        assert_eq!(shared, s.gamma_circ);
    }
}

#[test]
fn xi_vanishes_on_inner_boundary() {
    let mesh = StructuredMesh::unit_square(12, 12).unwrap();
    let l = build_partition(&mesh, 3, 3, 1, 1).unwrap();
    for s in &l.subdomains {
        for (k, &d) in s.dofs.iter().enumerate() {
            let inner_boundary = s.interior_dofs.binary_search(&d).is_err();
            if inner_boundary {
                assert_eq!(s.xi[k], 0.0);
            }
        }
    }
    let pou = build_pou(&l).unwrap();
    for (s, w) in l.subdomains.iter().zip(pou) {
        assert_eq!(s.xi, w);
    }
}

#[test]
fn eta_ramp_midpoint_and_interfaces() {
    let mesh = StructuredMesh::unit_square(24, 24).unwrap();
    let l = build_partition(&mesh, 2, 2, 2, 2).unwrap();
    let etas = build_eta(&l).unwrap();
    for (s, eta) in l.subdomains.iter().zip(&etas) {
        let at = |d: usize| eta[s.star_dofs.binary_search(&d).unwrap()];
        for &d in &s.gamma_star {
            assert_eq!(at(d), 0.0);
        }
        for &d in &s.gamma_circ {
            assert_eq!(at(d), 1.0);
        }
        for &d in &s.overlap_dofs {
            assert_eq!(at(d), s.xi_at(d));
        }
        let mid: Vec<f64> = s
            .star_dofs
            .iter()
            .filter(|d| {
                s.overlap_dofs.binary_search(d).is_err() && s.gamma_star.binary_search(d).is_err()
            })
            .map(|&d| at(d))
            .collect();
        assert!(!mid.is_empty() && mid.iter().all(|&v| v == 0.5));
    }
}

#[test]
fn degenerate_geometry_is_rejected() {
    let mesh = StructuredMesh::unit_square(8, 8).unwrap();
    assert!(build_partition(&mesh, 3, 3, 1, 1).is_err());
    assert!(build_partition(&mesh, 2, 2, 0, 1).is_err());
    assert!(build_partition(&mesh, 4, 4, 2, 1).is_err());
}

fn floating_case(kind: CoefficientKind) -> (GlobalSystem, rgeneo::decomp::SubdomainLayout) {
    // center subdomain of 3x3 is a floating 6x6-element block
    problem(3, 4, kind, 1e4, 1, 1)
}

#[test]
fn geneo_pencil_on_floating_subdomain() {
    let (sys, l) = floating_case(CoefficientKind::Constant);
    let p = build_geneo_pencil(&sys, &l, 4).unwrap();
    assert_eq!(p.dim(), 49);
    let ones = vec![1.0; p.dim()];
    assert!(p.left.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-13));
    // right vanishes on core dofs
    let s = &l.subdomains[4];
    let core_only: Vec<f64> = p
        .dofs
        .iter()
        .map(|d| {
            if s.overlap_dofs.binary_search(d).is_ok() {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    assert_eq!(p.right.quad_form(&core_only), 0.0);
    let sum = p.left.add(&p.right).unwrap();
    assert!(min_eig(&sum) > 1e-12 * sum.norm_inf());
}

#[test]
fn geneo_right_form_is_weighted_overlap_energy() {
    let (sys, l) = floating_case(CoefficientKind::Inclusions);
    let mut r = rng(3);
    for j in [0, 4, 7] {
        let p = build_geneo_pencil(&sys, &l, j).unwrap();
        let s = &l.subdomains[j];
        for _ in 0..10 {
            let v = random_vec(&mut r, p.dim());
            let mut g = vec![0.0; sys.n()];
            for (&d, &x) in p.dofs.iter().zip(&v) {
                g[d] = s.xi_at(d) * x;
            }
            let oracle = element_energy(&sys, &s.overlap_elements, &g).unwrap();
            assert!((p.right.quad_form(&v) - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
            let mut h = vec![0.0; sys.n()];
            for (&d, &x) in p.dofs.iter().zip(&v) {
                h[d] = x;
            }
            let left = element_energy(&sys, &s.elements, &h).unwrap();
            assert!((p.left.quad_form(&v) - left).abs() <= 1e-12 * left.abs().max(1.0));
        }
    }
}

#[test]
fn rgeneo_pencil_definite_and_smaller() {
    let (sys, l) = floating_case(CoefficientKind::Constant);
    let p = build_rgeneo_pencil(&sys, &l, 4).unwrap();
    assert!(p.right.quad_form(&vec![1.0; p.dim()]) > 0.0);
    let sum = p.left.add(&p.right).unwrap();
    assert!(min_eig(&sum) > 1e-12 * sum.norm_inf());

    let (sys, l) = problem(4, 16, CoefficientKind::Channels, 1e6, 2, 1);
    for j in 0..l.len() {
        let r = build_rgeneo_pencil(&sys, &l, j).unwrap();
        let g = build_geneo_pencil(&sys, &l, j).unwrap();
        assert!(r.dim() < g.dim());
    }
}

#[test]
fn kernel_intersection_holds_everywhere() {
    for kind in [CoefficientKind::Constant, CoefficientKind::Channels] {
        let (sys, l) = problem(2, 12, kind, 1e6, 2, 1);
        for j in 0..l.len() {
            for p in [
                build_geneo_pencil(&sys, &l, j).unwrap(),
                build_rgeneo_pencil(&sys, &l, j).unwrap(),
            ] {
                let sum = p.left.add(&p.right).unwrap();
                assert!(min_eig(&sum) > 1e-12 * sum.norm_inf());
            }
        }
    }
}

#[test]
fn eigenpair_residuals_both_modes() {
    let (sys, l) = problem(2, 16, CoefficientKind::Channels, 1e6, 2, 1);
    for dense_cap in [10_000, 0] {
        let opts = EigenOptions {
            dense_cap,
            ..EigenOptions::default()
        };
        for j in 0..l.len() {
            for p in [
                build_geneo_pencil(&sys, &l, j).unwrap(),
                build_rgeneo_pencil(&sys, &l, j).unwrap(),
            ] {
                let pairs = gen_sym_eig(&p.left, &p.right, 13, &opts).unwrap();
                let (na, nb) = (p.left.norm_inf(), p.right.norm_inf());
                for k in 0..pairs.finite_count() {
                    let t = pairs.vector(k);
                    let lam = pairs.eigenvalues[k];
                    let at = p.left.spmv(t).unwrap();
                    let bt = p.right.spmv(t).unwrap();
                    let res: Vec<f64> = at.iter().zip(&bt).map(|(a, b)| a - lam * b).collect();
                    assert!(norm(&res) <= 1e-8 * (na + lam.abs() * nb) * norm(t));
                    let th = lam / (1.0 + lam);
                    let res2: Vec<f64> =
                        at.iter().zip(&bt).map(|(a, b)| a - th * (a + b)).collect();
                    assert!(norm(&res2) <= 1e-8 * (na + nb) * norm(t));
                }
            }
        }
    }
}

#[test]
fn harmonic_extension_basics() {
    let (sys, l) = problem(3, 8, CoefficientKind::Inclusions, 1e4, 2, 1);
    let mut r = rng(5);
    for j in 0..l.len() {
        let s = &l.subdomains[j];
        let n_trace = s.gamma_circ.len();
        let zero = harmonic_extension(&sys, &l, j, &vec![0.0; n_trace]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let floating = s.is_floating(&sys.is_dirichlet);
        if floating {
            let c = harmonic_extension(&sys, &l, j, &vec![3.0; n_trace]).unwrap();
            assert!(c.iter().all(|v| (v - 3.0).abs() < 1e-10));
        }
        // idempotence: re-extending the trace of a harmonic function
        let trace = random_vec(&mut r, n_trace);
        let w = harmonic_extension(&sys, &l, j, &trace).unwrap();
        let ext = HarmonicExtension::new(&sys, &l, j).unwrap();
        let again = ext.extend(&w).unwrap();
        assert!(max_abs_diff(&w, &again) <= 1e-12 * w.iter().fold(1.0f64, |m, x| m.max(x.abs())));
    }
}

#[test]
fn coarse_vector_structure() {
    let (sys, l) = problem(3, 8, CoefficientKind::Channels, 1e6, 2, 1);
    let j = 4;
    let s = &l.subdomains[j];
    let pg = build_geneo_pencil(&sys, &l, j).unwrap();
    let pr = build_rgeneo_pencil(&sys, &l, j).unwrap();
    let ext = HarmonicExtension::new(&sys, &l, j).unwrap();

    // constant on a floating subdomain gives y = 1, so the vector is ξ
    let one = build_coarse_vector(&pr, &l, Some(&ext), &vec![1.0; pr.dim()]).unwrap();
    let dense = one.to_dense(sys.n());
    for (k, &d) in s.dofs.iter().enumerate() {
        assert!((dense[d] - s.xi[k]).abs() < 1e-10);
    }

    // a shared synthetic function: both modes agree on the overlap closure
    let f = |d: usize| {
        let (x, y) = sys.mesh.dof_coords(d);
        (3.0 * x).sin() + y * y
    };
    let tg: Vec<f64> = pg.dofs.iter().map(|&d| f(d)).collect();
    let tr: Vec<f64> = pr.dofs.iter().map(|&d| f(d)).collect();
    let yg = local_coarse_function(&pg, &l, None, &tg).unwrap();
    let yr = local_coarse_function(&pr, &l, Some(&ext), &tr).unwrap();
    let vg = build_coarse_vector(&pg, &l, None, &tg)
        .unwrap()
        .to_dense(sys.n());
    let vr = build_coarse_vector(&pr, &l, Some(&ext), &tr)
        .unwrap()
        .to_dense(sys.n());
    for &d in &s.overlap_dofs {
        let k = s.dofs.binary_search(&d).unwrap();
        assert_eq!(yg[k], yr[k]);
        assert_eq!(vg[d], vr[d]);
        if s.xi[k] > 0.0 {
            assert!((vr[d] / s.xi[k] - f(d)).abs() < 1e-12);
        }
    }
    // support: inside Ω_j, zero on its inner boundary
    for (d, &v) in vr.iter().enumerate() {
        if v != 0.0 {
            assert!(s.interior_dofs.binary_search(&d).is_ok());
        }
    }
    assert!(build_coarse_vector(&pr, &l, None, &tr).is_err());
    assert!(build_coarse_vector(&pg, &l, None, &tr).is_err());
}

#[test]
fn coarse_matrix_matches_products() {
    let (sys, l) = problem(2, 16, CoefficientKind::Channels, 1e6, 2, 1);
    for mode in [CoarseMode::Geneo, CoarseMode::RGeneo] {
        let c = assemble_coarse(&sys, &l, mode, &CoarseOptions::default()).unwrap();
        assert_eq!(c.raw_dim, c.m().iter().sum::<usize>());
        assert_eq!(c.dim() + c.dropped.len(), c.raw_dim);
        let h = DMatrix::from_column_slice(c.a_h.rows(), c.a_h.cols(), c.a_h.data());
        assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
        let mut r = rng(9);
        for _ in 0..5 {
            use rand::Rng;
            let i = r.random_range(0..c.dim());
            let k = r.random_range(0..c.dim());
            let vi = c.basis[i].to_dense(sys.n());
            let vk = c.basis[k].to_dense(sys.n());
            let oracle = sys.a.bilinear(&vi, &vk);
            assert!((c.a_h.get(i, k) - oracle).abs() <= 1e-12 * h.amax());
        }
    }
}

#[test]
fn empty_coarse_space_cases() {
    let mesh = StructuredMesh::unit_square(8, 8).unwrap();
    let sys = GlobalSystem::model_problem(&mesh, &CoefficientField::constant(&mesh, 1.0).unwrap())
        .unwrap();
    let single = build_partition(&mesh, 1, 1, 1, 1).unwrap();
    let c = assemble_coarse(&sys, &single, CoarseMode::Geneo, &CoarseOptions::default()).unwrap();
    assert_eq!(c.dim(), 0);
    assert!(assemble_coarse(&sys, &single, CoarseMode::RGeneo, &CoarseOptions::default()).is_err());
    let l = build_partition(&mesh, 2, 2, 1, 1).unwrap();
    let opts = CoarseOptions {
        rule: ModeRule::Fixed(0),
        ..CoarseOptions::default()
    };
    assert_eq!(
        assemble_coarse(&sys, &l, CoarseMode::RGeneo, &opts)
            .unwrap()
            .dim(),
        0
    );
}
