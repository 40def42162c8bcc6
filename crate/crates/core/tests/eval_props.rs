use std::collections::HashSet;

use proptest::prelude::*;
use pulsegrid::boost::BoostParams;
use pulsegrid::eval::{
    aami_check, bhs_from_percentages, bhs_grade, bland_altman, display_percent, error_stats, evaluate, make_folds,
    pairs_from_bland_altman, parse_bland_altman_csv, row_units, run_cv, BhsGrade, CvParams, ErrorStats, SplitMode,
};
use pulsegrid::features::Dataset;
use pulsegrid::signalio::mean_arterial_pressure;
use pulsegrid::Error;

fn stats(me: f64, sd: f64, n_subjects: usize) -> ErrorStats {
    ErrorStats { me, sd, mae: f64::NAN, mae_sd: f64::NAN, n: 0, n_subjects }
}

fn triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..=100.0, 0.0f64..=100.0, 0.0f64..=100.0).prop_map(|(a, b, c)| {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        (v[0], v[1], v[2])
    })
}

proptest! {
    #[test]
    fn better_percentages_never_lower_the_grade((a, b, c) in triple(), d in 0.0f64..20.0) {
        let base = bhs_from_percentages(a, b, c).grade;
        let up = bhs_from_percentages((a + d).min(100.0), (b + d).min(100.0), (c + d).min(100.0)).grade;
        prop_assert!(up <= base);
    }

    #[test]
    fn smaller_errors_never_break_aami(me in -10.0f64..10.0, sd in 0.0f64..12.0, n in 0usize..200, shrink in 0.0f64..1.0) {
        if aami_check(&stats(me, sd, n)).passed() {
            prop_assert!(aami_check(&stats(me * shrink, sd * shrink, n + 5)).passed());
        }
    }

    #[test]
    fn grade_from_errors_uses_inclusive_cumulative_counts(errs in prop::collection::vec(0.0f64..25.0, 1..80)) {
        let r = bhs_grade(&errs).unwrap();
        let pct = |t: f64| 100.0 * errs.iter().filter(|e| **e <= t).count() as f64 / errs.len() as f64;
        prop_assert_eq!(r.pct5, pct(5.0));
        prop_assert_eq!(r.pct10, pct(10.0));
        prop_assert_eq!(r.pct15, pct(15.0));
        prop_assert_eq!(r.grade, bhs_from_percentages(r.pct5, r.pct10, r.pct15).grade);
    }

    #[test]
    fn folds_partition_the_units(n in 2usize..60, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let units: Vec<String> = (0..n).map(|i| format!("s{i:02}")).collect();
        let plan = make_folds(&units, k, seed).unwrap();
        let seen: HashSet<&str> = plan.assignments.iter().map(|(u, _)| u.as_str()).collect();
        prop_assert_eq!(seen.len(), n);
        prop_assert_eq!(plan.assignments.len(), n);
        let sizes = plan.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut reversed = units.clone();
        reversed.reverse();
        prop_assert_eq!(make_folds(&reversed, k, seed).unwrap(), plan);
    }

    #[test]
    fn bland_altman_round_trips(pairs in prop::collection::vec((40.0f64..200.0, 40.0f64..200.0), 2..50)) {
        let ba = bland_altman(&pairs).unwrap();
        prop_assert!((ba.loa_high - ba.mean_diff - 1.96 * ba.sd_diff).abs() < 1e-9);
        prop_assert!((ba.mean_diff - ba.loa_low - 1.96 * ba.sd_diff).abs() < 1e-9);
        let back = pairs_from_bland_altman(&parse_bland_altman_csv(&ba.to_csv()).unwrap());
        for (a, b) in back.iter().zip(&pairs) {
            prop_assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }
}

#[test]
fn table_three_fixture() {
    // errors me + sd * z with z standardized exactly, so sample stats come back
    for (me, sd, verdict) in [(-0.100, 4.201, "pass"), (-0.154, 4.629, "pass"), (-0.291, 8.831, "fail(sd)")] {
        let raw: Vec<f64> = (0..443).map(|i| ((i * 37 % 443) as f64 / 443.0 - 0.5) * (1.0 + (i % 7) as f64)).collect();
        let m = raw.iter().sum::<f64>() / raw.len() as f64;
        let s = (raw.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (raw.len() - 1) as f64).sqrt();
        let pairs: Vec<(f64, f64)> = raw.iter().map(|v| (100.0 + me + sd * (v - m) / s, 100.0)).collect();
        let st = error_stats(&pairs, 443).unwrap();
        assert!((st.me - me).abs() < 1e-9 && (st.sd - sd).abs() < 1e-9, "{st:?}");
        assert_eq!(aami_check(&st).to_string(), verdict);
    }
}

#[test]
fn grade_thresholds_are_inclusive() {
    assert_eq!(bhs_from_percentages(60.0, 85.0, 95.0).grade, BhsGrade::A);
    assert_eq!(bhs_from_percentages(59.999, 85.0, 95.0).grade, BhsGrade::B);
    assert_eq!(bhs_from_percentages(40.0, 65.0, 85.0).grade, BhsGrade::C);
    assert_eq!(bhs_from_percentages(39.0, 99.0, 100.0).grade, BhsGrade::D);
    assert_eq!(aami_check(&stats(5.0, 8.0, 85)).to_string(), "pass");
    assert_eq!(aami_check(&stats(-5.01, 8.01, 84)).to_string(), "fail(me,sd,subjects)");
    assert_eq!(display_percent(99.99999999999), 100);
    assert_eq!(display_percent(84.9), 84);
}

/// Subjects each contribute rows from two well separated clusters whose
/// labels are fixed per cluster: every learner can be exact.
fn realizable_dataset() -> Dataset {
    let mut ds = Dataset { n_cols: 3, rows: vec![], dbp: vec![], map: vec![], sbp: vec![], subjects: vec![] };
    for s in 0..12 {
        for i in 0..10 {
            let high = i % 2 == 0;
            let t = (s * 10 + i) as f64;
            let c = if high { 10.0 } else { -10.0 };
            ds.rows.push(vec![c + 0.1 * (t * 0.9).sin(), 0.1 * (t * 1.7).cos(), 0.05 * (t * 0.3).sin()]);
            let (d, sy) = if high { (70.0, 120.0) } else { (90.0, 150.0) };
            ds.dbp.push(d);
            ds.sbp.push(sy);
            ds.map.push(mean_arterial_pressure(d, sy));
            ds.subjects.push(format!("p{s:02}"));
        }
    }
    ds
}

#[test]
fn realizable_target_is_recovered_exactly() {
    let ds = realizable_dataset();
    let params = CvParams {
        k: 4,
        boost: BoostParams { rounds: 10, max_depth: 2, min_leaf: 2, ..BoostParams::default() },
        seed: 9,
        ..CvParams::default()
    };
    let report = evaluate(&ds, &params).unwrap();
    for t in &report.targets {
        assert_eq!(t.stats.mae, 0.0, "{:?}", t.target);
        assert_eq!(t.bhs.grade, BhsGrade::A);
    }
}

#[test]
fn cv_partitions_rows_under_both_split_modes() {
    let ds = realizable_dataset();
    for split in [SplitMode::Subject, SplitMode::Record] {
        let params = CvParams {
            k: 3,
            split,
            boost: BoostParams { rounds: 3, max_depth: 1, min_leaf: 1, ..BoostParams::default() },
            ..CvParams::default()
        };
        let cv = run_cv(&ds, &params).unwrap();
        for p in &cv.pairs {
            assert_eq!(p.len(), ds.len());
        }
        if split == SplitMode::Subject {
            for f in 0..3 {
                let test: HashSet<&String> = (0..ds.len()).filter(|&i| cv.row_fold[i] == f).map(|i| &ds.subjects[i]).collect();
                assert!((0..ds.len()).filter(|&i| cv.row_fold[i] != f).all(|i| !test.contains(&ds.subjects[i])));
            }
        }
    }
    // alternating labels make every row its own window unit
    assert_eq!(row_units(&ds, SplitMode::Record).iter().collect::<HashSet<_>>().len(), ds.len());
}

#[test]
fn cv_errors() {
    let ds = realizable_dataset();
    let params = CvParams { k: 13, ..CvParams::default() };
    assert!(matches!(run_cv(&ds, &params), Err(Error::TooFewSubjects { groups: 12, k: 13 })));
    let empty = Dataset { n_cols: 3, rows: vec![], dbp: vec![], map: vec![], sbp: vec![], subjects: vec![] };
    assert!(matches!(run_cv(&empty, &CvParams::default()), Err(Error::EmptyDataset)));
    assert!(matches!(bland_altman(&[(1.0, 2.0)]), Err(Error::TooFewPairs(1))));
}
