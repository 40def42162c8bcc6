mod common;

use proptest::prelude::*;
use pulsegrid::pca::{pca_fit, pca_transform, retained_count, PcaModel};
use pulsegrid::Error;

/// `n` rows of `l` columns with spread-out column scales.
fn data() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..9).prop_flat_map(|l| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, l), l + 2..24).prop_map(move |rows| {
            rows.into_iter().map(|r| r.iter().enumerate().map(|(j, v)| v * (1.0 + j as f64)).collect()).collect()
        })
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn components_are_orthonormal_and_signed(rows in data(), retain in 0.5f64..1.0) {
        let m = pca_fit(&rows, retain).unwrap();
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(a, b) - want).abs() < 1e-9);
            }
            let big = a.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            prop_assert!(big > 0.0);
        }
        prop_assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(m.eigenvalues.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn retained_count_is_minimal(rows in data(), retain in 0.3f64..1.0) {
        let m = pca_fit(&rows, retain).unwrap();
        let total: f64 = m.eigenvalues.iter().sum();
        let head: f64 = m.eigenvalues[..m.k].iter().sum();
        prop_assert!(head / total >= retain - 1e-12);
        if m.k > 1 {
            let shorter: f64 = m.eigenvalues[..m.k - 1].iter().sum();
            prop_assert!(shorter / total < retain);
        }
        prop_assert_eq!(retained_count(&m.eigenvalues, retain).0, m.k);
    }

    #[test]
    fn eigenvalues_match_oracle(rows in data()) {
        let m = pca_fit(&rows, 0.98).unwrap();
        let (vals, vecs) = common::max_pivot_jacobi(&common::sample_covariance(&rows));
        for (a, b) in m.eigenvalues.iter().zip(&vals) {
            prop_assert!((a - b).abs() <= 1e-9 * vals[0]);
        }
        let gap = vals[m.k - 1] - vals.get(m.k).copied().unwrap_or(0.0);
        prop_assume!(gap > 1e-6 * vals[0]);
        let d = common::frobenius_diff(&common::projector(&m.components), &common::projector(&vecs[..m.k]));
        prop_assert!(d < 1e-7);
    }

    #[test]
    fn scores_decorrelate(rows in data()) {
        let m = pca_fit(&rows, 0.999).unwrap();
        let scores = m.transform_rows(&rows).unwrap();
        let cov = common::sample_covariance(&scores);
        for i in 0..m.k {
            for j in 0..m.k {
                let want = if i == j { m.eigenvalues[i] } else { 0.0 };
                prop_assert!((cov[i][j] - want).abs() <= 1e-9 * (1.0 + m.eigenvalues[0]));
            }
        }
    }

    #[test]
    fn row_order_does_not_matter(rows in data(), rot in 1usize..5) {
        let mut shuffled = rows.clone();
        let r = rot % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        let a = pca_fit(&rows, 0.98).unwrap();
        let b = pca_fit(&shuffled, 0.98).unwrap();
        prop_assert_eq!(a.k, b.k);
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + a.eigenvalues[0]));
        }
        let pa = common::projector(&a.components);
        let pb = common::projector(&b.components);
        prop_assert!(common::frobenius_diff(&pa, &pb) < 1e-6);
    }

    #[test]
    fn reconstruction_error_is_discarded_energy(rows in data(), retain in 0.5f64..0.99) {
        let m = pca_fit(&rows, retain).unwrap();
        let err: f64 = rows
            .iter()
            .map(|r| {
                let back = m.reconstruct(&pca_transform(&m, r).unwrap());
                r.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / (rows.len() - 1) as f64;
        prop_assert!((err - m.discarded_energy()).abs() <= 1e-9 * (1.0 + m.eigenvalues[0]));
    }

    #[test]
    fn text_round_trip(rows in data()) {
        let m = pca_fit(&rows, 0.95).unwrap();
        let back = PcaModel::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn axis_aligned_data_has_axis_components() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let t = i as f64;
            vec![3.0 * (t * 0.7).sin(), 0.01 * (t * 1.3).cos(), 0.0]
        })
        .collect();
    let m = pca_fit(&rows, 0.98).unwrap();
    assert_eq!(m.k, 1);
    assert!((m.components[0][0] - 1.0).abs() < 1e-6);
    assert_eq!(m.eigenvalues[2], 0.0);
}

#[test]
fn pca_errors() {
    assert!(matches!(pca_fit(&[], 0.98), Err(Error::TooFewRows(0))));
    let rows = vec![vec![1.0, 2.0], vec![3.0, 5.0], vec![0.0, 1.0]];
    assert!(pca_fit(&rows, 0.0).is_err());
    assert!(pca_fit(&rows, 1.5).is_err());
    let m = pca_fit(&rows, 0.9).unwrap();
    assert!(matches!(pca_transform(&m, &[1.0]), Err(Error::DimensionMismatch { .. })));
}
