use fmmt::basis::{basis_eval_extended, enumerate_basis};
use fmmt::kernel::{gram_matrix, matern_eval, MaternParams};
use fmmt::krr::fit_krr;
use fmmt::quadrature::TensorGrid;
use fmmt::validation::{limiting_cdf, limiting_p_value};
use fmmt::Domain;
use nalgebra::{Cholesky, DMatrix};
use proptest::prelude::*;

fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..40)
}

fn points(d: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), n)
}

fn spread(pts: &[Vec<f64>], min: f64) -> bool {
    pts.iter().enumerate().all(|(i, a)| {
        pts[..i].iter().all(|b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt()
                > min
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_values_are_probabilities(t in 0.0f64..50.0, w in weights_strategy()) {
        let p = limiting_p_value(t, &w).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let f = limiting_cdf(t, &w).unwrap();
        prop_assert!((p + f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, w in weights_strategy()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(limiting_cdf(lo, &w).unwrap() <= limiting_cdf(hi, &w).unwrap());
    }

    #[test]
    fn kernel_is_symmetric_and_positive_definite(pts in points(2, 12), theta in 0.2f64..2.0) {
        prop_assume!(spread(&pts, 0.02));
        let params = MaternParams::new(3.5, theta).unwrap();
        let k = gram_matrix(&pts, &params).unwrap();
        prop_assert!((&k - k.transpose()).amax() == 0.0);
        for i in 0..k.nrows() {
            prop_assert!((k[(i, i)] - 1.0).abs() < 1e-12);
        }
        let ridged = k + DMatrix::identity(pts.len(), pts.len()) * 1e-8;
        prop_assert!(Cholesky::new(ridged).is_some());
    }

    #[test]
    fn kernel_decreases_with_distance(r in 0.0f64..5.0, dr in 1e-3f64..1.0) {
        let params = MaternParams::new(3.5, 1.0).unwrap();
        prop_assert!(matern_eval(r + dr, &params).unwrap() < matern_eval(r, &params).unwrap());
    }

    #[test]
    fn basis_is_orthonormal_on_any_box(
        lo in prop::collection::vec(-3.0f64..3.0, 2),
        len in prop::collection::vec(0.1f64..4.0, 2),
    ) {
        let bx = Domain::new(&[(lo[0], lo[0] + len[0]), (lo[1], lo[1] + len[1])]).unwrap();
        let basis = enumerate_basis(3, 2, 0.7);
        let grid = TensorGrid::new(&bx, 48);
        let values: Vec<Vec<f64>> =
            basis.iter().map(|b| grid.evaluate(|x| basis_eval_extended(b, x, &bx))).collect();
        let w = grid.weights();
        for i in 0..basis.len() {
            for j in 0..=i {
                let g: f64 = (0..w.len()).map(|k| w[k] * values[i][k] * values[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() < 1e-10, "{i} {j} {g}");
            }
        }
    }

    #[test]
    fn disjoint_boxes_give_orthogonal_extensions(cut in 0.1f64..0.9, i in 0usize..13, j in 0usize..13) {
        let whole = Domain::unit(2);
        let left = Domain::new(&[(0.0, cut), (0.0, 1.0)]).unwrap();
        let right = Domain::new(&[(cut, 1.0), (0.0, 1.0)]).unwrap();
        let basis = enumerate_basis(2, 2, 0.7);
        let (a, b) = (&basis[i % basis.len()], &basis[j % basis.len()]);
        let grid = TensorGrid::new(&whole, 64);
        let v = grid.integrate(|x| basis_eval_extended(a, x, &left) * basis_eval_extended(b, x, &right));
        prop_assert!(v.abs() < 1e-10);
    }

    #[test]
    fn ridge_fit_is_linear_in_the_response(
        pts in points(1, 15),
        y1 in prop::collection::vec(-2.0f64..2.0, 15),
        y2 in prop::collection::vec(-2.0f64..2.0, 15),
        a in -3.0f64..3.0,
        probe in 0.0f64..1.0,
    ) {
        let params = MaternParams::new(3.5, 1.0).unwrap();
        let lambda = 1e-3;
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + v).collect();
        let f1 = fit_krr(&pts, &y1, params, lambda).unwrap();
        let f2 = fit_krr(&pts, &y2, params, lambda).unwrap();
        let fm = fit_krr(&pts, &mix, params, lambda).unwrap();
        let x = [probe];
        let want = a * f1.predict(&x).unwrap() + f2.predict(&x).unwrap();
        let scale = 1.0 + want.abs() + a.abs();
        prop_assert!((fm.predict(&x).unwrap() - want).abs() < 1e-8 * scale);
    }
}
