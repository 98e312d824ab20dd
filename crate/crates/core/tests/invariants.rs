use proptest::prelude::*;
use qmedley::encoding::{amplitude_features, fidelity_kernel, kernel_matrix, FeatureMapSpec};
use qmedley::learners::fit_learner;
use qmedley::learners::tree::MaxFeatures;
use qmedley::qmedley::{explain, permutation_for};
use qmedley::{ClassicalModel, ExplainerConfig, Hyperparams, LearnerKind, Matrix};
use std::f64::consts::PI;

fn angles(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..PI, 1..=max_len)
}

/// Small labelled sets with both classes present.
fn labelled(rows: usize, cols: usize) -> impl Strategy<Value = (Matrix, Vec<usize>)> {
    (prop::collection::vec(-3.0..3.0f64, rows * cols), prop::collection::vec(0usize..2, rows)).prop_map(move |(data, mut y)| {
        y[0] = 0;
        y[1] = 1;
        (Matrix::from_vec(rows, cols, data).unwrap(), y)
    })
}

fn shifted(x: &Matrix, by: f64) -> Matrix {
    let data = x.as_slice().iter().map(|v| v + by).collect();
    Matrix::from_vec(x.rows(), x.cols(), data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn amplitudes_form_a_distribution(x in angles(8)) {
        let spec = FeatureMapSpec::rx(x.len()).unwrap();
        let a = amplitude_features(&x, &spec).unwrap();
        prop_assert_eq!(a.len(), 1 << x.len());
        prop_assert!(a.iter().all(|p| *p >= 0.0));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_a_bounded_similarity(x in angles(6), shift in 0.0..PI) {
        let y: Vec<f64> = x.iter().map(|v| (v + shift) % PI).collect();
        let k = fidelity_kernel(&x, &y).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&k));
        prop_assert!((k - fidelity_kernel(&y, &x).unwrap()).abs() < 1e-15);
        prop_assert!((fidelity_kernel(&x, &x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite(rows in prop::collection::vec(angles(3).prop_filter("width", |v| v.len() == 3), 2..8)) {
        let x = Matrix::from_rows(&rows).unwrap();
        let k = kernel_matrix(&x, &x).unwrap();
        let n = rows.len();
        let g = nalgebra::DMatrix::from_fn(n, n, |i, j| k.get(i, j));
        let min = g.symmetric_eigen().eigenvalues.min();
        prop_assert!(min > -1e-9, "min eigenvalue {}", min);
    }

    #[test]
    fn permutations_are_bijections(seed in any::<u64>(), n in 1usize..50, j in 0usize..10, r in 0usize..10) {
        let mut p = permutation_for(seed, n, j, r);
        prop_assert_eq!(&p, &permutation_for(seed, n, j, r));
        p.sort_unstable();
        prop_assert_eq!(p, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn single_unbagged_forest_matches_tree((x, y) in labelled(24, 3), seed in 0u64..1000) {
        let mut hp = Hyperparams::default();
        hp.random_forest.n_trees = 1;
        hp.random_forest.max_features = MaxFeatures::All;
        hp.random_forest.bootstrap = false;
        let tree = fit_learner(LearnerKind::DecisionTree, &x, &y, &hp, seed).unwrap();
        let forest = fit_learner(LearnerKind::RandomForest, &x, &y, &hp, seed).unwrap();
        prop_assert_eq!(tree.predict_labels(&x).unwrap(), forest.predict_labels(&x).unwrap());
    }

    #[test]
    fn lda_predictions_ignore_a_common_shift((x, y) in labelled(30, 2), by in -5.0..5.0f64) {
        let hp = Hyperparams::default();
        let base = fit_learner(LearnerKind::Lda, &x, &y, &hp, 0).unwrap();
        let moved = fit_learner(LearnerKind::Lda, &shifted(&x, by), &y, &hp, 0).unwrap();
        let a = base.predict_labels(&x).unwrap();
        let b = moved.predict_labels(&shifted(&x, by)).unwrap();
        let agree = a.iter().zip(&b).filter(|(p, q)| p == q).count();
        // Points sitting on the boundary may flip under rounding.
        prop_assert!(agree + 1 >= a.len(), "{} of {}", agree, a.len());
    }

    #[test]
    fn final_scores_follow_from_components((x, y) in labelled(20, 3), seed in 0u64..100, adaptive in any::<bool>()) {
        let m = ClassicalModel::fit(&x, &y, LearnerKind::DecisionTree, &Hyperparams::default(), seed, None).unwrap();
        let cfg = ExplainerConfig { repeats: 3, adaptive_weighting: adaptive, ..ExplainerConfig::with_seed(seed) };
        let r = explain(&m, &x, &y, &cfg).unwrap();
        prop_assert_eq!(r.final_scores.len(), 3);
        for (a, b) in r.final_scores.iter().zip(r.recompute_final()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((r.weights.dci + r.weights.pi - 1.0).abs() < 1e-12);
        prop_assert_eq!(r, explain(&m, &x, &y, &cfg).unwrap());
    }
}
