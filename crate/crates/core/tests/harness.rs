use std::sync::Arc;

use boostgap::adversary::{AdversarialWeakLearner, HypothesisSets, LearnerMode};
use boostgap::boosting::{default_rounds, WeakLearnerError};
use boostgap::harness::{
    fit_model, fit_report, is_aggregate_row, model_shape, partial_path, persist, read_csv, run_sweep, run_trial,
    run_trial_with, trial_seed, write_csv, Adversary, Aggregate, Algorithm, FitPoint, Model, SweepSpec, TrialConfig,
    TrialRow, CSV_COLUMNS,
};
use boostgap::model::{draw_sample, Hypothesis, SampleDistribution, SampleSet, Universe};
use proptest::prelude::*;

/// `gamma = 1/4, d = 2`: `r = 1`, `r1 = 4`, and quick trials.
fn tiny(m: usize) -> TrialConfig {
    TrialConfig::new(0.25, 2, m)
}

fn spec(json: &str) -> SweepSpec {
    SweepSpec::from_json(json).unwrap()
}

#[test]
fn csv_header_is_fixed() {
    assert_eq!(
        CSV_COLUMNS.join(","),
        "seed,m,u,r,r1,gamma,d,alpha,algo,adversary,exact_error,h0_weight,in_spart1,frs_minus_fraction,rounds_used,failure"
    );
}

#[test]
fn single_cell_sweep_writes_one_trial_and_one_aggregate() {
    let s = spec(r#"{"gamma": 0.25, "d": 2, "m_grid": [64], "trials": 1, "algorithms": ["adaboost"], "seed": 7}"#);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let outcome = run_sweep(&s, Some(&partial_path(&out))).unwrap();
    assert!(partial_path(&out).exists());
    let summary = persist(&out, &outcome).unwrap();
    assert!(!partial_path(&out).exists());
    assert!(summary.exists());
    let rows = read_csv(&out).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(!is_aggregate_row(&rows[0]) && is_aggregate_row(&rows[1]));
    assert_eq!(rows[0].seed, Some(trial_seed(7, 64, 0)));
    let agg = Aggregate::from_row(&rows[1]).unwrap();
    assert_eq!(agg.trials, 1);
    assert_eq!(agg.mean_error, rows[0].exact_error);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(&CSV_COLUMNS.join(",")));
}

#[test]
fn aggregates_match_hand_statistics() {
    let s = spec(r#"{"gamma": 0.25, "d": 2, "m_grid": [64, 128], "trials": 4, "algorithms": ["adaboost", "adastar"], "adversary": ["on", "off"], "seed": 3}"#);
    let outcome = run_sweep(&s, None).unwrap();
    assert_eq!(outcome.results.len(), 32);
    assert_eq!(outcome.summary.aggregates.len(), 8);
    for a in &outcome.summary.aggregates {
        let rows: Vec<&TrialRow> = outcome
            .results
            .iter()
            .map(|r| &r.row)
            .filter(|r| r.m == a.m && r.algo == a.algo && r.adversary == a.adversary)
            .collect();
        let ok: Vec<f64> = rows.iter().filter(|r| r.failure.is_none()).filter_map(|r| r.exact_error).collect();
        assert_eq!(a.trials, rows.len());
        assert_eq!(a.failures, rows.len() - ok.len());
        if !ok.is_empty() {
            let mean = ok.iter().sum::<f64>() / ok.len() as f64;
            assert!((a.mean_error.unwrap() - mean).abs() < 1e-15);
        }
        let spart1 = rows.iter().filter(|r| r.in_spart1 == Some(true)).count() as f64 / rows.len() as f64;
        assert_eq!(a.in_spart1_fraction, spart1);
        let back = Aggregate::from_row(&a.to_row(rows[0])).unwrap();
        assert_eq!(&back, a);
    }
    assert_eq!(outcome.summary.fits.len(), 4);
    let sorted = outcome.results.windows(2).all(|w| {
        let k = |r: &TrialRow| (r.m, r.algo, r.adversary, r.seed);
        k(&w[0].row) <= k(&w[1].row)
    });
    assert!(sorted);
}

#[test]
fn control_with_a_perfect_learner_never_errs() {
    let cfg = tiny(64);
    let params = cfg.params().unwrap();
    let sample = draw_sample(Universe::new(params.u).unwrap(), 64, 1).unwrap();
    let mut perfect = |_: &SampleDistribution| -> Result<Hypothesis, WeakLearnerError> { Ok(Hypothesis::all_ones()) };
    let r = run_trial_with(&cfg, &params, &sample, Algorithm::AdaBoost, Adversary::Off, 1, &mut perfect).unwrap();
    assert_eq!(r.row.exact_error, Some(0.0));
    assert_eq!(r.row.h0_weight, Some(0.0));
}

#[test]
fn whole_universe_sampled_leaves_nothing_to_miss() {
    let mut cfg = tiny(64);
    let params = cfg.params().unwrap();
    cfg.rounds = Some(default_rounds(params.u, params.gamma));
    let universe = Universe::new(params.u).unwrap();
    let sample = SampleSet::whole(universe);
    let sets = Arc::new(HypothesisSets::new(5, &params));
    let mut learner = AdversarialWeakLearner::new(sets, params.clone(), LearnerMode::Adversarial);
    let r = run_trial_with(&cfg, &params, &sample, Algorithm::AdaBoost, Adversary::On, 5, &mut learner).unwrap();
    assert_eq!(r.row.in_spart1, Some(false));
    if r.row.failure.is_none() {
        assert_eq!(r.row.exact_error, Some(0.0));
        assert_eq!(r.diagnostics.final_train_errors, Some(0));
    }
}

#[test]
fn desk_trial_replays_bit_for_bit() {
    let cfg = TrialConfig::new(0.1, 8, 1 << 14);
    let seed = trial_seed(2024, 1 << 14, 0);
    let a = run_trial(&cfg, Algorithm::AdaBoost, Adversary::On, seed).unwrap();
    let b = run_trial(&cfg, Algorithm::AdaBoost, Adversary::On, seed).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.row.exact_error.map(f64::to_bits), b.row.exact_error.map(f64::to_bits));
    assert!(a.row.failure.is_none(), "{:?}", a.row.failure);
}

#[test]
fn control_error_does_not_grow_with_m() {
    let s = spec(r#"{"gamma": 0.1, "d": 8, "m_grid": [1024, 4096], "trials": 4, "algorithms": ["adaboost"], "adversary": ["off"], "seed": 11}"#);
    let outcome = run_sweep(&s, None).unwrap();
    let means: Vec<f64> = outcome.summary.aggregates.iter().map(|a| a.mean_error.unwrap()).collect();
    assert!(means[1] <= means[0], "{means:?}");
}

#[test]
fn spec_parsing_and_validation() {
    let s = spec(r#"{"gamma": 0.1, "d": 8, "m_grid": [4096], "trials": 2, "algorithms": ["bagged"], "seed": 0}"#);
    assert_eq!(s.alpha, 2.0);
    assert_eq!(s.per_block_budget, 4096);
    assert_eq!(s.adversary, vec![Adversary::On]);
    assert_eq!(s.max_fail_rate, 0.05);
    let bad = [
        r#"{"gamma": 0.1, "d": 8, "m_grid": [4096], "trials": 2, "algorithms": ["bagged"], "seed": 0, "extra": 1}"#,
        r#"{"gamma": 0.1, "d": 8, "m_grid": [4096, 1024], "trials": 2, "algorithms": ["bagged"], "seed": 0}"#,
        r#"{"gamma": 0.1, "d": 8, "m_grid": [4096], "trials": 0, "algorithms": ["bagged"], "seed": 0}"#,
        r#"{"gamma": 0.1, "d": 8, "m_grid": [4096], "trials": 2, "algorithms": ["xgboost"], "seed": 0}"#,
        r#"{"gamma": 0.3, "d": 8, "m_grid": [4096], "trials": 2, "algorithms": ["bagged"], "seed": 0}"#,
    ];
    for text in bad {
        let err = SweepSpec::from_json(text).unwrap_err();
        assert!(err.is_config(), "{text}: {err}");
    }
}

#[test]
fn fits_prefer_the_generating_model() {
    let (gamma, d) = (0.1, 8);
    let grid = [4096usize, 16384, 65536, 262144];
    for (model, a) in [(Model::Log, 0.3), (Model::Flat, 2.0)] {
        let pts: Vec<FitPoint> = grid.iter().map(|&m| FitPoint { m, mean_error: a * model_shape(model, m, gamma, d) }).collect();
        let report = fit_report(Algorithm::AdaBoost, Adversary::On, &pts, gamma, d);
        assert_eq!(report.preferred, Some(model));
        let fit = fit_model(model, &pts, gamma, d).unwrap();
        assert!((fit.a - a).abs() < 1e-12 && fit.ssr < 1e-20);
    }
    // closed form: ln a is the mean log gap
    let pts = [FitPoint { m: 4096, mean_error: 0.01 }, FitPoint { m: 65536, mean_error: 0.002 }];
    let shape = |m| model_shape(Model::Flat, m, gamma, d);
    let want = ((0.01f64 / shape(4096)).ln() + (0.002f64 / shape(65536)).ln()) / 2.0;
    assert!((fit_model(Model::Flat, &pts, gamma, d).unwrap().a.ln() - want).abs() < 1e-12);
    // zero means and m gamma^2 <= d are left out
    let pts = [FitPoint { m: 512, mean_error: 0.1 }, FitPoint { m: 4096, mean_error: 0.0 }, FitPoint { m: 16384, mean_error: 0.001 }];
    let report = fit_report(Algorithm::Bagged, Adversary::On, &pts, gamma, d);
    assert_eq!(report.points.len(), 1);
    assert_eq!(report.excluded.len(), 2);
}

fn row_strategy() -> impl Strategy<Value = TrialRow> {
    (
        (proptest::option::of(any::<u64>()), 1usize..1 << 20, 1usize..1 << 22, 1usize..100, 1usize..400),
        (0.001f64..0.25, 1usize..50, 1.0f64..4.0, 0usize..3, any::<bool>()),
        (
            proptest::option::of(0.0f64..1.0),
            proptest::option::of(0.0f64..1.0),
            proptest::option::of(any::<bool>()),
            proptest::option::of(0.0f64..1.0),
            0usize..10_000,
            proptest::option::of("[a-z_]{1,12}(;[a-z_]{1,8}=[0-9.e-]{1,10}){0,3}"),
        ),
    )
        .prop_map(|((seed, m, u, r, r1), (gamma, d, alpha, algo, on), (err, h0, sp, frs, rounds, failure))| TrialRow {
            seed,
            m,
            u,
            r,
            r1,
            gamma,
            d,
            alpha,
            algo: Algorithm::ALL[algo],
            adversary: if on { Adversary::On } else { Adversary::Off },
            exact_error: err,
            h0_weight: h0,
            in_spart1: sp,
            frs_minus_fraction: frs,
            rounds_used: rounds,
            failure,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_rows_round_trip(rows in proptest::collection::vec(row_strategy(), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_csv(&path, &rows).unwrap();
        prop_assert_eq!(read_csv(&path).unwrap(), rows);
    }
}
