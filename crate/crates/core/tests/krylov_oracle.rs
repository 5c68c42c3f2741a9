mod common;

use arcqk::krylov::{multishift_cg, multishift_cgls, MultishiftCg, MultishiftCgls, ShiftStatus};
use arcqk::ShiftGrid;
use common::*;
use nalgebra::DMatrix;

#[test]
fn spd_grid_matches_dense_solves() {
    let mut r = rng(10);
    let m = random_spd(&mut r, 10, 0.5, 20.0);
    let b = random_vec(&mut r, 10);
    let grid = ShiftGrid::new(vec![0.1, 1.0, 10.0]).unwrap();
    let sol = multishift_cg(apply(&m), &b, &grid, &(1e-12 * norm(&b)).into(), 100).unwrap();
    for (i, &lam) in grid.lambdas().iter().enumerate() {
        assert_eq!(sol.statuses[i], ShiftStatus::Converged);
        let want = shifted_solve(&m, lam, &b);
        assert!(rel_err(&sol.directions[i], &want) < 1e-8, "shift {lam}");
    }
}

#[test]
fn recurred_residuals_and_direction_norms() {
    let mut r = rng(11);
    for n in [3, 8, 20] {
        let m = random_spd(&mut r, n, 0.1, 5.0);
        let b = random_vec(&mut r, n);
        let grid = ShiftGrid::new(vec![1e-3, 0.1, 1.0]).unwrap();
        let mut s = MultishiftCg::new(apply(&m), &b, &grid, &0.0.into(), n).unwrap();
        while s.step().unwrap() {
            for (i, &lam) in grid.lambdas().iter().enumerate() {
                if s.status(i) != ShiftStatus::Running {
                    continue;
                }
                let explicit = shifted_residual(&m, lam, s.iterate(i), &b);
                assert!((s.sigma(i).abs() - explicit).abs() <= 1e-8 * norm(&b).max(1.0), "n={n} shift {lam}");
                let p = s.search_direction(i).unwrap();
                let pp = dot(p, p);
                assert!((s.pi(i) - pp).abs() <= 1e-8 * pp, "n={n} shift {lam}");
            }
        }
    }
}

#[test]
fn lanczos_vectors_stay_orthonormal() {
    let mut r = rng(12);
    let n = 40;
    let m = random_spd(&mut r, n, 0.1, 10.0);
    let b = random_vec(&mut r, n);
    let grid = ShiftGrid::new(vec![1e-6]).unwrap();
    let mut s = MultishiftCg::new(apply(&m), &b, &grid, &0.0.into(), 30).unwrap();
    let mut basis = vec![s.lanczos_vector().to_vec()];
    while s.step().unwrap() && basis.len() <= 30 {
        basis.push(s.lanczos_vector().to_vec());
    }
    for (a, va) in basis.iter().enumerate() {
        assert!((norm(va) - 1.0).abs() < 1e-12);
        for vb in &basis[..a] {
            assert!(dot(va, vb).abs() < 1e-6);
        }
    }
}

#[test]
fn certificate_matches_explicit_quadratic_form() {
    let mut r = rng(13);
    let m = random_spd(&mut r, 5, 0.2, 3.0);
    let b = random_vec(&mut r, 5);
    let lam = 0.5;
    let grid = ShiftGrid::new(vec![lam]).unwrap();
    let mut s = MultishiftCg::new(apply(&m), &b, &grid, &0.0.into(), 5).unwrap();
    for _ in 0..5 {
        if s.status(0) != ShiftStatus::Running {
            break;
        }
        let p = s.search_direction(0).unwrap().to_vec();
        let mut mp = vec![0.0; 5];
        apply(&m)(&p, &mut mp);
        let explicit = dot(&p, &mp) + lam * dot(&p, &p);
        let cert = s.curvature_certificate(0);
        assert!(cert > 0.0);
        assert!((cert - explicit).abs() <= 1e-8 * explicit.abs(), "{cert} vs {explicit}");
        s.step().unwrap();
    }
}

#[test]
fn identity_certificate_and_indefinite_certificate_sign() {
    let grid = ShiftGrid::new(vec![1.0]).unwrap();
    let eye = DMatrix::<f64>::identity(3, 3);
    let b = [1.0, -2.0, 0.5];
    let s = MultishiftCg::new(apply(&eye), &b, &grid, &0.0.into(), 3).unwrap();
    assert!((s.curvature_certificate(0) - 2.0 * dot(&b, &b)).abs() < 1e-12);

    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 3.0]));
    let mut s = MultishiftCg::new(apply(&m), &[1.0, 1.0], &grid, &0.0.into(), 4).unwrap();
    while s.status(0) == ShiftStatus::Running {
        s.step().unwrap();
    }
    assert_eq!(s.status(0), ShiftStatus::Indefinite);
    assert!(s.curvature_certificate(0) < 0.0);
}

#[test]
fn norms_decrease_along_the_grid() {
    let mut r = rng(14);
    let m = random_spd(&mut r, 30, 0.01, 50.0);
    let b = random_vec(&mut r, 30);
    let grid = ShiftGrid::default();
    let sol = multishift_cg(apply(&m), &b, &grid, &(1e-10 * norm(&b)).into(), 60).unwrap();
    let norms: Vec<f64> = sol.directions.iter().map(|d| norm(d)).collect();
    for w in norms.windows(2) {
        assert!(w[1] <= w[0] + 1e-6);
    }
    let big = sol.len() - 1;
    let limit: Vec<f64> = b.iter().map(|v| v / grid.lambdas()[big]).collect();
    assert!(rel_err(&sol.directions[big], &limit) < 1e-3);
}

#[test]
fn exhausted_krylov_space_is_exact() {
    let eye = DMatrix::<f64>::identity(6, 6) * 2.0;
    let b = [1.0, 2.0, 3.0, 0.0, -1.0, 0.5];
    let grid = ShiftGrid::new(vec![1e-15, 1.0, 1e3]).unwrap();
    let sol = multishift_cg(apply(&eye), &b, &grid, &0.0.into(), 12).unwrap();
    assert!(sol.breakdown);
    assert_eq!(sol.operator_products, 1);
    assert!(sol.statuses.iter().all(|s| *s == ShiftStatus::Converged));
    for (i, &lam) in grid.lambdas().iter().enumerate() {
        let want: Vec<f64> = b.iter().map(|v| v / (2.0 + lam)).collect();
        assert!(rel_err(&sol.directions[i], &want) < 1e-14);
    }
}

#[test]
fn capped_shifts_report_their_residual() {
    let mut r = rng(15);
    let m = random_spd(&mut r, 30, 1e-3, 1e3);
    let b = random_vec(&mut r, 30);
    let grid = ShiftGrid::new(vec![1e-15, 1e3]).unwrap();
    let sol = multishift_cg(apply(&m), &b, &grid, &1e-14.into(), 3).unwrap();
    assert_eq!(sol.statuses[0], ShiftStatus::Capped);
    assert_eq!(sol.iterations[0], 3);
    assert!(!sol.usable(0));
    let explicit = shifted_residual(&m, 1e-15, &sol.directions[0], &b);
    assert!((sol.residual_norms[0] - explicit).abs() < 1e-8);
}

#[test]
fn cgls_hand_examples() {
    let eye = DMatrix::<f64>::identity(2, 2);
    let grid = ShiftGrid::new(vec![1.0]).unwrap();
    let sol =
        multishift_cgls(apply(&eye), apply_transpose(&eye), 2, &[1.0, 1.0], &grid, &1e-14.into(), 4).unwrap();
    assert!(rel_err(&sol.directions[0], &[0.5, 0.5]) < 1e-14);

    let col = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
    let grid = ShiftGrid::new(vec![1e-15, 2.0]).unwrap();
    let sol =
        multishift_cgls(apply(&col), apply_transpose(&col), 1, &[1.0, 1.0], &grid, &1e-14.into(), 4).unwrap();
    assert!((sol.directions[0][0] - 1.0).abs() < 1e-12);
    assert!((sol.directions[1][0] - 0.5).abs() < 1e-14);
}

#[test]
fn cgls_matches_normal_equations() {
    let mut r = rng(16);
    let a = random_matrix(&mut r, 20, 10);
    let b = random_vec(&mut r, 20);
    let grid = ShiftGrid::new(vec![1e-2, 1.0, 1e2]).unwrap();
    let sol = multishift_cgls(apply(&a), apply_transpose(&a), 10, &b, &grid, &1e-13.into(), 40).unwrap();
    for (i, &lam) in grid.lambdas().iter().enumerate() {
        assert_eq!(sol.statuses[i], ShiftStatus::Converged);
        let want = normal_solve(&a, lam, &b);
        assert!(rel_err(&sol.directions[i], &want) < 1e-7, "shift {lam}");
    }
}

#[test]
fn cgls_invariants() {
    let mut r = rng(17);
    let a = random_matrix(&mut r, 15, 8);
    let b = random_vec(&mut r, 15);
    let grid = ShiftGrid::new(vec![1e-3, 1.0, 1e6]).unwrap();
    let mut s = MultishiftCgls::new(apply(&a), apply_transpose(&a), 8, &b, &grid, &0.0.into(), 8).unwrap();
    let atb = {
        let mut v = vec![0.0; 8];
        apply_transpose(&a)(&b, &mut v);
        v
    };
    // Once the space is exhausted the last basis vector is rounding noise.
    while s.iteration() < 7 && s.step().unwrap() {
        let mut atu = vec![0.0; 8];
        apply_transpose(&a)(s.auxiliary_vector(), &mut atu);
        assert!(rel_err(&atu, s.lanczos_vector()) < 1e-10);
        assert!((norm(s.lanczos_vector()) - 1.0).abs() < 1e-12);
        let gram = a.tr_mul(&a);
        for (i, &lam) in grid.lambdas().iter().enumerate() {
            let explicit = shifted_residual(&gram, lam, s.iterate(i), &atb);
            if explicit > 1e-10 * norm(&atb) {
                assert!((s.sigma(i).abs() - explicit).abs() <= 1e-6 * explicit, "shift {lam}");
            }
        }
    }
    let sol = s.finish().unwrap();
    let limit: Vec<f64> = atb.iter().map(|v| v / 1e6).collect();
    assert!(rel_err(&sol.directions[2], &limit) < 1e-3);
}

#[test]
fn cgls_product_counts_and_ls_residual() {
    let mut r = rng(18);
    let a = random_matrix(&mut r, 25, 12);
    let b = random_vec(&mut r, 25);
    let grid = ShiftGrid::new(vec![1e-2, 1.0, 10.0]).unwrap();
    let (mut na, mut nt) = (0usize, 0usize);
    let sol = MultishiftCgls::new(
        |v: &[f64], o: &mut [f64]| {
            na += 1;
            apply(&a)(v, o)
        },
        |u: &[f64], o: &mut [f64]| {
            nt += 1;
            apply_transpose(&a)(u, o)
        },
        12,
        &b,
        &grid,
        &1e-6.into(),
        50,
    )
    .unwrap()
    .with_ls_residual(true)
    .finish()
    .unwrap();
    assert!(!sol.breakdown);
    assert_eq!(nt, sol.max_shift_iterations() + 1);
    assert_eq!(na, sol.max_shift_iterations() + 1 + grid.len());
    assert_eq!(sol.operator_products, na);
    assert_eq!(sol.adjoint_products, nt);
    let ls = sol.ls_residual_norms.unwrap();
    for (i, d) in sol.directions.iter().enumerate() {
        let mut ad = vec![0.0; 25];
        apply(&a)(d, &mut ad);
        let explicit: Vec<f64> = b.iter().zip(&ad).map(|(x, y)| x - y).collect();
        assert!((ls[i] - norm(&explicit)).abs() < 1e-12);
    }
}
