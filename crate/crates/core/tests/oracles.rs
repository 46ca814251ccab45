//! Filters and leverages checked against dense linear algebra from nalgebra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgcv_core::{
    build_design_matrix, build_nested_basis, conventional_cv, make_predictor_direct, make_predictor_from_smoother,
    make_smoother, projection_matrix, select_order_cv, DesignSpec,
};

fn monomials(nodes: &[f64], order: usize) -> DMatrix<f64> {
    DMatrix::from_fn(order + 1, nodes.len(), |r, c| nodes[c].powi(r as i32))
}

fn svd_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.transpose().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > smax * 1e-12).count();
    let u = u.columns(0, rank);
    u * u.transpose()
}

#[test]
fn projection_diagonal_matches_normal_equations() {
    let spec = DesignSpec::new(6, 4).unwrap();
    let a = monomials(spec.nodes(), 4);
    let gram = &a * a.transpose();
    let oracle = a.transpose() * gram.try_inverse().unwrap() * &a;
    let p = projection_matrix(&spec, 4).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            assert!((p[(i, j)] - oracle[(i, j)]).abs() < 1e-10, "({i},{j})");
        }
    }
    let basis = build_nested_basis(&spec);
    for (i, l) in basis.leverage(4).iter().enumerate() {
        assert!((l - oracle[(i, i)]).abs() < 1e-10);
    }
}

#[test]
fn design_matrix_rank_equals_order_plus_one() {
    let spec = DesignSpec::new(4, 2).unwrap();
    let a = build_design_matrix(&spec, 2).unwrap();
    let dense = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    assert_eq!(dense.rank(1e-10), 3);
    let p = projection_matrix(&spec, 2).unwrap();
    let trace: f64 = (0..4).map(|i| p[(i, i)]).sum();
    assert!((trace - 3.0).abs() < 1e-12);
}

#[test]
fn projection_matches_svd_oracle_for_many_shapes() {
    for n in 3..=16 {
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 - (n as f64 - 1.0) / 2.0).collect();
        let spec = DesignSpec::with_nodes(nodes.clone(), n - 2).unwrap();
        let basis = build_nested_basis(&spec);
        for order in 0..=(n - 2).min(8) {
            let oracle = svd_projector(&monomials(&nodes, order));
            let p = basis.projection(order).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert!((p[(i, j)] - oracle[(i, j)]).abs() < 1e-9, "n={n} order={order}");
                }
            }
        }
    }
}

#[test]
fn predictor_matches_explicit_pseudoinverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(4..=12);
        let order = rng.random_range(0..=n - 2);
        let k = rng.random_range(0..n);
        let spec = DesignSpec::new(n, n - 2).unwrap();
        let nodes: Vec<f64> = spec.nodes().iter().map(|t| t - (n as f64 + 1.0) / 2.0).collect();

        let a = monomials(&nodes, order);
        let kept: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let a_k = a.select_columns(&kept);
        let c = a.column(k).into_owned();
        let h = a_k.pseudo_inverse(1e-14).unwrap() * c;

        let direct = make_predictor_direct(&spec, order, k).unwrap();
        let rescaled = make_predictor_from_smoother(&spec, order, k).unwrap();
        let scale = h.amax().max(1.0);
        for (j, &i) in kept.iter().enumerate() {
            assert!(
                (direct.coefficients[i] - h[j]).abs() < 1e-8 * scale,
                "n={n} order={order} k={k}"
            );
            assert!(
                (rescaled.coefficients[i] - h[j]).abs() < 1e-8 * scale,
                "n={n} order={order} k={k}"
            );
        }
        assert_eq!(direct.coefficients[k], 0.0);
        assert_eq!(rescaled.coefficients[k], 0.0);
    }
}

#[test]
fn smoother_is_projector_column() {
    let spec = DesignSpec::new(9, 7).unwrap();
    let a = monomials(&spec.nodes().iter().map(|t| t - 5.0).collect::<Vec<_>>(), 3);
    let oracle = svd_projector(&a);
    for k in 0..9 {
        let h = make_smoother(&spec, 3, k).unwrap();
        for i in 0..9 {
            assert!((h[i] - oracle[(i, k)]).abs() < 1e-12);
        }
    }
}

#[test]
fn efficient_selection_matches_conventional_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..1000 {
        let n = rng.random_range(5..=12);
        let p_max = rng.random_range(0..=n - 2);
        let spec = DesignSpec::new(n, p_max).unwrap();
        let basis = build_nested_basis(&spec);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let fast = select_order_cv(&x, &basis).unwrap();
        let slow = conventional_cv(&x, &spec).unwrap();
        for (a, b) in fast.tpe_by_order.iter().zip(&slow.tpe_by_order) {
            assert!(
                (a - b).abs() <= 1e-9 * b.abs().max(f64::MIN_POSITIVE),
                "trial {trial}: {a} vs {b}"
            );
        }
        assert_eq!(fast.best_order, slow.best_order, "trial {trial}");
    }
}
