mod common;

use common::*;
use nalgebra::DMatrix;
use rgeneo::analysis::{local_projection, stable_decomposition};
use rgeneo::bench::{
    emit_report, execute, export_artifacts, parse_config, ExperimentConfig, ExportFlags,
    ReportFormat, RunModes,
};
use rgeneo::coarse::{assemble_coarse, CoarseMode, CoarseOptions};
use rgeneo::fem::{CoefficientKind, GlobalSystem};
use rgeneo::krylov::{pcg, solve_system, PcgOptions};
use rgeneo::la::SparseSymMatrix;
use rgeneo::precond::{Preconditioner, SchwarzPreconditioner};

fn two_level(
    sys: &GlobalSystem,
    l: &rgeneo::decomp::SubdomainLayout,
    mode: CoarseMode,
) -> SchwarzPreconditioner {
    let c = assemble_coarse(sys, l, mode, &CoarseOptions::default()).unwrap();
    SchwarzPreconditioner::setup(sys, l, Some(c)).unwrap()
}

fn free_random(sys: &GlobalSystem, r: &mut impl rand::Rng) -> Vec<f64> {
    rgeneo::analysis::random_free_vector(sys, r)
}

/// `M⁻¹` assembled from its definition with dense inverses.
fn explicit_inverse(
    sys: &GlobalSystem,
    l: &rgeneo::decomp::SubdomainLayout,
    m: &SchwarzPreconditioner,
) -> DMatrix<f64> {
    let n = sys.n();
    let a = to_na(&sys.a);
    let mut minv = DMatrix::zeros(n, n);
    for s in &l.subdomains {
        let dofs: Vec<usize> = s
            .interior_dofs
            .iter()
            .copied()
            .filter(|&d| !sys.is_dirichlet[d])
            .collect();
        let aj = a.select_rows(&dofs).select_columns(&dofs);
        let inv = aj.try_inverse().unwrap();
        for (p, &i) in dofs.iter().enumerate() {
            for (q, &k) in dofs.iter().enumerate() {
                minv[(i, k)] += inv[(p, q)];
            }
        }
    }
    if let Some(c) = &m.coarse {
        let mut b = DMatrix::zeros(n, c.dim());
        for (k, v) in c.basis.iter().enumerate() {
            for (&d, &x) in v.dofs.iter().zip(&v.values) {
                b[(d, k)] = x;
            }
        }
        let ah = b.transpose() * &a * &b;
        minv += &b * ah.try_inverse().unwrap() * b.transpose();
    }
    minv
}

#[test]
fn apply_matches_explicit_inverse() {
    let (sys, l) = problem(2, 8, CoefficientKind::Channels, 1e3, 2, 1);
    for mode in [None, Some(CoarseMode::Geneo), Some(CoarseMode::RGeneo)] {
        let m = match mode {
            Some(md) => two_level(&sys, &l, md),
            None => SchwarzPreconditioner::setup(&sys, &l, None).unwrap(),
        };
        let minv = explicit_inverse(&sys, &l, &m);
        let mut r = rng(1);
        for _ in 0..3 {
            let v = free_random(&sys, &mut r);
            let z = m.apply(&v).unwrap();
            let oracle = dense_mv(&minv, &v);
            let scale = oracle.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(max_abs_diff(&z, &oracle) <= 1e-12 * scale, "{mode:?}");
        }
    }
}

#[test]
fn apply_is_symmetric_positive_and_additive() {
    let (sys, l) = problem(3, 8, CoefficientKind::Inclusions, 1e6, 2, 1);
    for mode in [CoarseMode::Geneo, CoarseMode::RGeneo] {
        let m = two_level(&sys, &l, mode);
        let mut r = rng(2);
        for _ in 0..10 {
            let (s, t) = (free_random(&sys, &mut r), free_random(&sys, &mut r));
            let (ms, mt) = (m.apply(&s).unwrap(), m.apply(&t).unwrap());
            let (a, b): (f64, f64) = (
                t.iter().zip(&ms).map(|(x, y)| x * y).sum(),
                s.iter().zip(&mt).map(|(x, y)| x * y).sum(),
            );
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
            assert!(s.iter().zip(&ms).map(|(x, y)| x * y).sum::<f64>() > 0.0);
            let one = m.apply_one_level(&s).unwrap();
            let coarse = m.apply_coarse(&s).unwrap();
            let sum: Vec<f64> = one.iter().zip(&coarse).map(|(x, y)| x + y).collect();
            assert_eq!(sum, ms);
        }
    }
}

#[test]
fn setup_is_deterministic() {
    let (sys, l) = problem(2, 16, CoefficientKind::Channels, 1e6, 2, 1);
    let a = two_level(&sys, &l, CoarseMode::RGeneo);
    let b = two_level(&sys, &l, CoarseMode::RGeneo);
    let mut r = rng(3);
    let v = free_random(&sys, &mut r);
    assert_eq!(a.apply(&v).unwrap(), b.apply(&v).unwrap());
    assert_eq!(a.coarse.unwrap().a_h, b.coarse.unwrap().a_h);
}

#[test]
fn single_subdomain_converges_in_one_iteration() {
    // high contrast leaves a round-off residual near tol after one exact step
    let (sys, l) = problem(1, 16, CoefficientKind::Constant, 1.0, 1, 1);
    let m = SchwarzPreconditioner::setup(&sys, &l, None).unwrap();
    let (_, rep) = solve_system(&sys, &m, &PcgOptions::default()).unwrap();
    assert_eq!(rep.iterations, 1);
}

#[test]
fn pcg_matches_direct_solve() {
    let (sys, l) = problem(2, 8, CoefficientKind::Constant, 1.0, 1, 1);
    let m = SchwarzPreconditioner::setup(&sys, &l, None).unwrap();
    let opts = PcgOptions::default();
    let (x, rep) = solve_system(&sys, &m, &opts).unwrap();
    assert!(rep.converged);
    let direct = sys.solve_direct().unwrap();
    let scale = direct.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(max_abs_diff(&x, &direct) <= 10.0 * opts.tol * scale);
}

#[test]
fn ritz_values_interlace_and_errors_decrease() {
    let (sys, l) = problem(2, 8, CoefficientKind::Inclusions, 1e2, 2, 1);
    let m = two_level(&sys, &l, CoarseMode::Geneo);
    let free = sys.free_dofs();
    // spectrum of M⁻¹A on the free dofs
    let minv = explicit_inverse(&sys, &l, &m)
        .select_rows(&free)
        .select_columns(&free);
    let af = to_na(&sys.a).select_rows(&free).select_columns(&free);
    let c = minv.cholesky().unwrap().l();
    let eig = (c.transpose() * &af * &c).symmetric_eigen().eigenvalues;
    let mut r = rng(4);
    let f = free_random(&sys, &mut r);
    let direct = rgeneo::la::Factorization::factorize(&sys.a)
        .unwrap()
        .solve(&f)
        .unwrap();
    let mut prev = f64::INFINITY;
    for k in 1..12 {
        let opts = PcgOptions {
            max_iter: k,
            tol: 1e-14,
            ..PcgOptions::default()
        };
        let (x, rep) = pcg(&sys.a, &m, &f, None, &opts).unwrap();
        let e: Vec<f64> = x.iter().zip(&direct).map(|(a, b)| a - b).collect();
        let en = sys.a.quad_form(&e);
        assert!(en <= prev * (1.0 + 1e-10));
        prev = en;
        if k >= 2 {
            assert!(rep.ritz_min >= eig.min() * (1.0 - 1e-10));
            assert!(rep.ritz_max <= eig.max() * (1.0 + 1e-10));
        }
    }
}

#[test]
fn doubling_maxit_keeps_solution() {
    let (sys, l) = problem(2, 16, CoefficientKind::Channels, 1e6, 2, 1);
    let m = two_level(&sys, &l, CoarseMode::RGeneo);
    let (x1, r1) = solve_system(
        &sys,
        &m,
        &PcgOptions {
            max_iter: 200,
            ..PcgOptions::default()
        },
    )
    .unwrap();
    let (x2, _) = solve_system(
        &sys,
        &m,
        &PcgOptions {
            max_iter: 400,
            ..PcgOptions::default()
        },
    )
    .unwrap();
    assert!(r1.converged);
    assert!(max_abs_diff(&x1, &x2) <= 1e-12);
}

#[test]
fn scaled_identity_kappa_one() {
    let a = SparseSymMatrix::from_diagonal(&[3.0; 6]);
    let m = rgeneo::precond::IdentityPreconditioner { n: 6 };
    let (_, rep) = pcg(
        &a,
        &m,
        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        None,
        &PcgOptions::default(),
    )
    .unwrap();
    assert!((rep.kappa - 1.0).abs() < 1e-12);
}

#[test]
fn projection_reproduces_and_annihilates() {
    let (sys, l) = problem(2, 12, CoefficientKind::Channels, 1e6, 2, 1);
    let c = assemble_coarse(&sys, &l, CoarseMode::RGeneo, &CoarseOptions::default()).unwrap();
    let loc = &c.locals[0];
    let p = &loc.problem;
    let t1 = loc.pairs.vector(0).to_vec();
    let pr = local_projection(&p.left, &p.right, &loc.pairs, loc.m, &t1).unwrap();
    assert!(
        max_abs_diff(&pr.projected, &t1) <= 1e-10 * t1.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    );
    // B-orthogonal to the retained modes: the first discarded eigenvector
    let tn = loc.pairs.vector(loc.m).to_vec();
    let pr = local_projection(&p.left, &p.right, &loc.pairs, loc.m, &tn).unwrap();
    assert!(pr.projected.iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn stable_decomposition_trivial_cases() {
    let (sys, l) = problem(2, 12, CoefficientKind::Channels, 1e6, 2, 1);
    let c = assemble_coarse(&sys, &l, CoarseMode::RGeneo, &CoarseOptions::default()).unwrap();
    let d = stable_decomposition(&sys, &l, &c, &vec![0.0; sys.n()]).unwrap();
    assert!(d.z0.iter().all(|&v| v == 0.0));
    assert!(d.local.iter().all(|(_, z)| z.iter().all(|&v| v == 0.0)));
    let u = c.basis[3].to_dense(sys.n());
    let d = stable_decomposition(&sys, &l, &c, &u).unwrap();
    assert!(d.reconstruction_error <= 1e-14);
    let mut bad = u.clone();
    bad[sys.dirichlet[0]] = 1.0;
    assert!(stable_decomposition(&sys, &l, &c, &bad).is_err());
}

#[test]
fn stable_decomposition_high_contrast_three_by_three() {
    let (sys, l) = problem(3, 12, CoefficientKind::Inclusions, 1e4, 2, 1);
    let c = assemble_coarse(&sys, &l, CoarseMode::RGeneo, &CoarseOptions::default()).unwrap();
    let mut r = rng(6);
    for _ in 0..10 {
        let u = free_random(&sys, &mut r);
        let d = stable_decomposition(&sys, &l, &c, &u).unwrap();
        assert!(d.reconstruction_error <= 1e-10);
        assert!(d.ratio <= 1.0, "energy ratio {}", d.ratio);
    }
}

fn small_config(mode: RunModes) -> ExperimentConfig {
    ExperimentConfig {
        elements_per_subdomain: Some(12),
        mode,
        ..ExperimentConfig::default()
    }
}

#[test]
fn bench_single_subdomain_one_iteration() {
    let cfg = ExperimentConfig {
        px: 1,
        py: 1,
        coefficient: CoefficientKind::Constant,
        ..small_config(RunModes::None)
    };
    let rows = rgeneo::bench::run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].iterations, 1);
}

#[test]
fn bench_is_deterministic() {
    let cfg = small_config(RunModes::Both);
    let strip = |mut r: rgeneo::bench::BenchRow| {
        r.t_setup = 0.0;
        r.t_solve = 0.0;
        r
    };
    let a: Vec<_> = rgeneo::bench::run_experiment(&cfg)
        .unwrap()
        .into_iter()
        .map(strip)
        .collect();
    let b: Vec<_> = rgeneo::bench::run_experiment(&cfg)
        .unwrap()
        .into_iter()
        .map(strip)
        .collect();
    assert_eq!(a, b);
    assert_eq!(a[0].mode, "geneo");
    assert_eq!(a[1].mode, "rgeneo");
}

#[test]
fn artifacts_round_trip() {
    let cfg = ExperimentConfig {
        coefficient: CoefficientKind::Constant,
        ..small_config(RunModes::Both)
    };
    let run = execute(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export_artifacts(&run, dir.path(), ExportFlags::all()).unwrap();
    assert!(files.iter().all(|f| f.exists()));

    let sol = std::fs::read_to_string(dir.path().join("solution_rgeneo.csv")).unwrap();
    for line in sol.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[3] - (1.0 - f[1])).abs() < 1e-9);
    }

    let eig = std::fs::read_to_string(dir.path().join("eigenvalues_geneo.csv")).unwrap();
    let retained = eig.lines().skip(1).filter(|l| l.ends_with(",true")).count();
    let m_sum: usize = run.modes[0]
        .preconditioner
        .coarse
        .as_ref()
        .unwrap()
        .m()
        .iter()
        .sum();
    assert_eq!(retained, m_sum);

    let text = std::fs::read(dir.path().join("matrix.mtx")).unwrap();
    let back = SparseSymMatrix::read_matrix_market(std::io::Cursor::new(text)).unwrap();
    let mut r = rng(7);
    for _ in 0..5 {
        let x = random_vec(&mut r, sys_n(&run));
        assert_eq!(back.spmv(&x).unwrap(), run.system.a.spmv(&x).unwrap());
    }
    let csv = emit_report(&run.rows(), ReportFormat::Csv);
    assert_eq!(csv.lines().count(), 3);
}

fn sys_n(run: &rgeneo::bench::ExperimentRun) -> usize {
    run.system.n()
}

#[test]
fn config_repeat_block_drives_sweep() {
    let cfgs = parse_config("elements_per_subdomain = 8\nmode = none\ncoefficient = constant\n[repeat]\nsubdomains = 1, 2\n").unwrap();
    let its: Vec<usize> = cfgs
        .iter()
        .map(|c| rgeneo::bench::run_experiment(c).unwrap()[0].iterations)
        .collect();
    assert_eq!(its[0], 1);
    assert!(its[1] > 1);
}
