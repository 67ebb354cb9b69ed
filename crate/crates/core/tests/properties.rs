//! Randomized invariants of the numeric kernels, the data pipeline and the
//! metrics.

use chrono::{Duration, NaiveDate};
use proptest::prelude::*;
use wxcast_core::dataset::{
    build_windows, chronological_split, denormalize, minmax_normalize, seasonal_runs, window_count, DailyRecord,
    NormalizationParams, RawSeries, Season, SplitConfig, TargetKind, WindowSpec,
};
use wxcast_core::math::{sigmoid, Matrix};
use wxcast_core::metrics::{mae, rmse, theils_u, MetricInput};

fn series(start: NaiveDate, values: &[(f64, f64)], gaps: &[bool]) -> RawSeries {
    let mut date = start;
    let mut records = Vec::new();
    for (i, &(t, h)) in values.iter().enumerate() {
        if gaps.get(i).copied().unwrap_or(false) {
            date += Duration::days(2);
        }
        records.push(DailyRecord { date, temperature: t, humidity: h });
        date += Duration::days(1);
    }
    RawSeries::new("p", records).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

proptest! {
    #[test]
    fn sigmoid_is_symmetric(y in -40.0f64..40.0) {
        prop_assert!((sigmoid(y) + sigmoid(-y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matmul_is_associative((a, b, c) in (1usize..5, 1usize..5, 1usize..5, 1usize..5)
        .prop_flat_map(|(m, n, p, q)| (matrix(m, n), matrix(n, p), matrix(p, q))))
    {
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn window_count_matches_enumeration(len in 0usize..400, lag in 1usize..6) {
        let brute = (0..len).filter(|&start| start + lag < len).count();
        prop_assert_eq!(window_count(len, lag), brute);
    }

    #[test]
    fn normalization_round_trips(x in -60.0f64..60.0, lo in -60.0f64..0.0, span in 0.5f64..100.0) {
        let u = minmax_normalize(x, lo, lo + span).unwrap();
        prop_assert!((denormalize(u, lo, lo + span).unwrap() - x).abs() < 1e-12);
    }

    #[test]
    fn rmse_dominates_mae(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60)) {
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = MetricInput::new(&a, &p).unwrap();
        prop_assert!(rmse(&m) + 1e-12 >= mae(&m));
        let u = theils_u(&m, 273.15).unwrap();
        prop_assert!((0.0..=1.0).contains(&u));
    }

    #[test]
    fn windows_carry_raw_values(values in prop::collection::vec((-20.0f64..35.0, 5.0f64..100.0), 8..60),
                                 testing in 1u8..=4) {
        let s = series(NaiveDate::from_ymd_opt(2016, 6, 1).unwrap(), &values, &[]);
        let norm = NormalizationParams::fit(std::slice::from_ref(&s));
        prop_assume!(norm.is_ok());
        let norm = norm.unwrap();
        let spec = WindowSpec::new(testing).unwrap();
        let set = build_windows(std::slice::from_ref(&s), spec, &norm);
        let lag = spec.lag_count();
        prop_assert_eq!(set.len(), window_count(values.len(), lag));
        for (i, x) in set.inputs.iter().enumerate() {
            for k in 0..lag {
                let (t, h) = values[i + k];
                prop_assert!((norm.denormalize(TargetKind::Temperature, x[k]) - t).abs() < 1e-9);
                prop_assert!((norm.denormalize(TargetKind::Humidity, x[lag + k]) - h).abs() < 1e-9);
            }
            let (t, h) = values[i + lag];
            let expected = if spec.target() == TargetKind::Temperature { t } else { h };
            prop_assert_eq!(set.raw_targets[i], expected);
        }
    }

    #[test]
    fn seasonal_runs_are_maximal_and_in_season(len in 1usize..500, gap_at in prop::collection::vec(prop::bool::weighted(0.02), 0..500),
                                              start_offset in 0i64..365) {
        let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + Duration::days(start_offset);
        let values = vec![(10.0, 50.0); len];
        let s = series(start, &values, &gap_at);
        for season in Season::ALL {
            let runs = seasonal_runs(&s, season);
            let in_season = s.records().iter().filter(|r| season.contains(r.date)).count();
            prop_assert_eq!(runs.iter().map(RawSeries::len).sum::<usize>(), in_season);
            for run in &runs {
                let recs = run.records();
                prop_assert!(recs.iter().all(|r| season.contains(r.date)));
                prop_assert!(recs.windows(2).all(|w| w[1].date - w[0].date == Duration::days(1)));
            }
            for pair in runs.windows(2) {
                let gap = pair[1].first_date().unwrap() - pair[0].last_date().unwrap();
                prop_assert!(gap > Duration::days(1));
            }
        }
    }
}

#[test]
fn split_partitions_every_date() {
    let start = NaiveDate::from_ymd_opt(2014, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2020, 12, 31).unwrap();
    let n = (end - start).num_days() as usize + 1;
    let s = series(start, &vec![(5.0, 50.0); n], &[]);
    let split = SplitConfig::default();
    let (train, test) = chronological_split(&s, &split).unwrap();
    for r in s.records() {
        let in_train = train.records().iter().any(|x| x.date == r.date);
        let in_test = test.records().iter().any(|x| x.date == r.date);
        let expected_train = r.date >= split.train_start && r.date <= split.train_end;
        let expected_test = r.date > split.train_end && r.date <= split.test_end;
        assert_eq!(in_train, expected_train, "{}", r.date);
        assert_eq!(in_test, expected_test, "{}", r.date);
        assert!(!(in_train && in_test));
    }
    let ratio = train.len() as f64 / (train.len() + test.len()) as f64;
    assert!((ratio - 0.85).abs() <= 0.02, "train share {ratio}");
}
