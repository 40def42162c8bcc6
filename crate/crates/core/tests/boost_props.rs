mod common;

use proptest::prelude::*;
use pulsegrid::boost::{
    adaboost_fit, adaboost_predict, tree_fit, weighted_median, BoostEnsemble, BoostParams, Loss, Node, Target,
};
use pulsegrid::Error;

fn xy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..4).prop_flat_map(|f| {
        prop::collection::vec((prop::collection::vec(-5.0f64..5.0, f), -20.0f64..20.0), 4..40)
            .prop_map(|v| v.into_iter().unzip())
    })
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stump_split_is_the_brute_force_optimum(
        pts in prop::collection::vec((-5.0f64..5.0, -20.0f64..20.0, 0.05f64..1.0), 3..30)
    ) {
        let x: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let total: f64 = pts.iter().map(|p| p.2).sum();
        let w: Vec<f64> = pts.iter().map(|p| p.2 / total).collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let tree = tree_fit(&x, &y, &w, 1, 1).unwrap();
        match (common::brute_force_best_threshold(&xs, &y, &w), &tree.nodes[0]) {
            (Some((t, _)), Node::Split { feature, threshold, .. }) => {
                prop_assert_eq!(*feature, 0);
                prop_assert!((threshold - t).abs() < 1e-12, "tree {} oracle {}", threshold, t);
            }
            (None, Node::Leaf { .. }) => {}
            (oracle, root) => prop_assert!(false, "oracle {:?} root {:?}", oracle, root),
        }
    }

    #[test]
    fn tree_is_permutation_equivariant((x, y) in xy(), rot in 1usize..7) {
        let n = y.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.rotate_left(rot % n);
        idx.reverse();
        let xp: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let a = tree_fit(&x, &y, &uniform(n), 3, 2).unwrap();
        let b = tree_fit(&xp, &yp, &uniform(n), 3, 2).unwrap();
        for xi in &x {
            prop_assert!((a.predict(xi) - b.predict(xi)).abs() < 1e-9);
        }
    }

    #[test]
    fn depth_zero_is_the_weighted_mean((x, y) in xy()) {
        let w: Vec<f64> = (0..y.len()).map(|i| (i + 1) as f64).collect();
        let sw: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v / sw).collect();
        let t = tree_fit(&x, &y, &w, 0, 1).unwrap();
        let mean: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        prop_assert_eq!(t.nodes.len(), 1);
        prop_assert!((t.predict(&x[0]) - mean).abs() < 1e-9);
    }

    #[test]
    fn weighted_median_splits_the_mass(v in prop::collection::vec((-50.0f64..50.0, 0.01f64..5.0), 1..25)) {
        let preds: Vec<f64> = v.iter().map(|p| p.0).collect();
        let ws: Vec<f64> = v.iter().map(|p| p.1).collect();
        let m = weighted_median(&preds, &ws);
        let total: f64 = ws.iter().sum();
        let below: f64 = v.iter().filter(|p| p.0 < m).map(|p| p.1).sum();
        let at_or_below: f64 = v.iter().filter(|p| p.0 <= m).map(|p| p.1).sum();
        prop_assert!(preds.contains(&m));
        prop_assert!(2.0 * below < total + 1e-9);
        prop_assert!(2.0 * at_or_below >= total - 1e-9);
    }

    #[test]
    fn boosting_is_deterministic_per_seed((x, y) in xy(), seed in any::<u64>()) {
        let p = BoostParams { rounds: 6, max_depth: 2, min_leaf: 1, loss: Loss::Linear };
        let a = adaboost_fit(&x, &y, &p, seed);
        let b = adaboost_fit(&x, &y, &p, seed);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "runs disagree"),
        }
    }
}

#[test]
fn four_point_step_splits_between_two_and_three() {
    let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0].iter().map(|v| vec![*v]).collect();
    let y = [0.0, 0.0, 10.0, 10.0];
    let t = tree_fit(&x, &y, &uniform(4), 1, 1).unwrap();
    let Node::Split { threshold, left, right, .. } = t.nodes[0] else { panic!("expected a split") };
    assert!(threshold > 2.0 && threshold <= 3.0);
    assert_eq!(t.nodes[left], Node::Leaf { value: 0.0 });
    assert_eq!(t.nodes[right], Node::Leaf { value: 10.0 });
}

#[test]
fn constant_target_is_a_single_leaf() {
    let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
    let t = tree_fit(&x, &[4.5; 10], &uniform(10), 5, 1).unwrap();
    assert_eq!(t.nodes, vec![Node::Leaf { value: 4.5 }]);
}

#[test]
fn ties_go_to_the_lowest_feature() {
    // both columns separate y identically
    let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64]).collect();
    let y = [1.0, 1.0, 1.0, 7.0, 7.0, 7.0];
    let t = tree_fit(&x, &y, &uniform(6), 1, 1).unwrap();
    assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
}

#[test]
fn boosting_beats_the_mean_predictor() {
    let x: Vec<Vec<f64>> = (0..120).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
    let y: Vec<f64> = x.iter().map(|r| 90.0 + 20.0 * r[0] + 8.0 * r[1] * r[1]).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let base: f64 = y.iter().map(|v| (v - mean).abs()).sum::<f64>() / y.len() as f64;
    let p = BoostParams { rounds: 40, max_depth: 3, min_leaf: 2, loss: Loss::Linear };
    let fit = adaboost_fit(&x, &y, &p, 11).unwrap();
    let ens = BoostEnsemble::from_fit(Target::Map, fit, p, 11);
    let mae: f64 = x.iter().zip(&y).map(|(r, v)| (adaboost_predict(&ens, r).unwrap() - v).abs()).sum::<f64>() / y.len() as f64;
    assert!(mae < 0.25 * base, "mae {mae} vs baseline {base}");
}

#[test]
fn perfect_first_learner_stops_with_floor_beta() {
    let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
    let y = [3.0; 8];
    let p = BoostParams { rounds: 10, max_depth: 2, min_leaf: 1, loss: Loss::Linear };
    let fit = adaboost_fit(&x, &y, &p, 0).unwrap();
    assert_eq!(fit.learners.len(), 1);
    assert_eq!(fit.betas, vec![pulsegrid::boost::BETA_FLOOR]);
}

#[test]
fn boost_errors() {
    let p = BoostParams::default();
    assert!(matches!(adaboost_fit(&[], &[], &p, 0), Err(Error::EmptyTrainingSet)));
    assert!(matches!(tree_fit(&[], &[], &[], 2, 1), Err(Error::EmptyTrainingSet)));
    let zero = BoostParams { rounds: 0, ..p };
    assert!(adaboost_fit(&[vec![0.0], vec![1.0]], &[0.0, 1.0], &zero, 0).is_err());
}
