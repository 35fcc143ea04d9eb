//! Runner-level integration tests through the public experiment API.

use multiscale_harness::config::{self, EnvSpec, Problem};
use multiscale_harness::experiment::run_experiment;

/// With equal ranges and η = 1 both learners start uniform and apply the
/// same exponential-weights update, so their results coincide.
#[test]
fn experts_equal_ranges_msmw_matches_hedge() {
    let text = "problem = experts\nt = 800\nseeds = 0:3\neps = 0.9\n\n\
        [learner]\nalgo = msmw\neta = 1.0\n\n\
        [learner]\nalgo = hedge\neta = 1.0\n\n\
        [env]\nkind = iid_rewards\nranges = 2,2,2,2\nmeans = 0.4,0.9,1.3,0.7\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    let msmw: Vec<_> = result.runs.iter().filter(|r| r.learner == "msmw").collect();
    let hedge: Vec<_> = result.runs.iter().filter(|r| r.learner == "hedge").collect();
    assert_eq!(msmw.len(), hedge.len());
    for (a, b) in msmw.iter().zip(&hedge) {
        assert_eq!(a.seed, b.seed);
        assert!(
            (a.metrics["alg_gain_expected"] - b.metrics["alg_gain_expected"]).abs() < 1e-10,
            "seed {}: {} vs {}",
            a.seed,
            a.metrics["alg_gain_expected"],
            b.metrics["alg_gain_expected"]
        );
        for (x, y) in a.per_arm_gain.iter().zip(&b.per_arm_gain) {
            assert_eq!(x, y, "same environment stream must produce same gains");
        }
    }
    assert!(!result.has_failures());
}

/// Expert LB runs record the dichotomy verdict for the chosen learner.
#[test]
fn expert_lb_records_dichotomy_verdict() {
    let text = "problem = expert_lb\nt = 1\nseeds = 0:1\nh = 65536\n\n\
        [learner]\nalgo = msmw\nmode = symmetric\n";
    let cfg = config::load(text).unwrap();
    assert_eq!(cfg.problem, Problem::ExpertLb);
    assert!(matches!(cfg.env, EnvSpec::AdaptiveExpertLb));
    let result = run_experiment(&cfg).unwrap();
    assert_eq!(result.runs.len(), 1);
    let run = &result.runs[0];
    assert_eq!(run.checks.len(), 1);
    assert!(run.checks[0].pass, "{}", run.checks[0].name);
    assert!(run.metrics.contains_key("regret_arm1"));
    assert!(run.metrics.contains_key("regret_arm2"));
}

/// Identical seeds across learner variants see identical environments.
#[test]
fn environments_are_reproducible_across_learners() {
    let text = "problem = bandit\nt = 400\nseeds = 5:2\neps = 0.3\n\n\
        [learner]\nalgo = bandit_msmw\n\n\
        [learner]\nalgo = exp3\n\n\
        [env]\nkind = iid_rewards\nranges = 1,8,64\nmeans = 0.6,3.0,10.0\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    let by_learner: Vec<Vec<_>> = ["bandit_msmw", "exp3"]
        .iter()
        .map(|name| {
            result
                .runs
                .iter()
                .filter(|r| &r.learner == name)
                .collect::<Vec<_>>()
        })
        .collect();
    for (a, b) in by_learner[0].iter().zip(&by_learner[1]) {
        assert_eq!(a.seed, b.seed);
        // True per-arm gains come from the environment stream alone.
        assert_eq!(a.per_arm_gain, b.per_arm_gain);
    }
}

/// Aggregation is a pure function of the run set: re-running produces the
/// same means bit-for-bit (pairwise reduction in seed order).
#[test]
fn aggregation_is_deterministic() {
    let text = "problem = single_buyer\nt = 200\nseeds = 0:6\neps = 0.5\nh = 8\ndelta = 0.3\n\n\
        [learner]\nalgo = msmw\n\n\
        [env]\nkind = iid_values\ndist = equal_revenue\neps = 0.5\nh = 8\n";
    let cfg = config::load(text).unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a.aggregates).unwrap(),
        serde_json::to_string(&b.aggregates).unwrap()
    );
}

/// The single-buyer problem honors the learner choice: the baseline must
/// produce a different trajectory than the multi-scale learner, and
/// unsupported algorithms are rejected.
#[test]
fn single_buyer_dispatches_on_learner() {
    let text = "problem = single_buyer\nt = 2000\nseeds = 0:1\neps = 0.5\nh = 64\n\n\
        [learner]\nalgo = msmw\n\n\
        [learner]\nalgo = hedge\n\n\
        [env]\nkind = worst_case_pricing\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    let gains: Vec<f64> = result
        .runs
        .iter()
        .map(|r| r.metrics["alg_gain_expected"])
        .collect();
    assert_eq!(gains.len(), 2);
    assert!(
        (gains[0] - gains[1]).abs() > 1.0,
        "learners must differ: {gains:?}"
    );

    let bad = text.replace("algo = hedge", "algo = exp3");
    let cfg = config::load(&bad).unwrap();
    assert!(run_experiment(&cfg).is_err());
}

/// Posted pricing accepts both bandit learners and they share environments.
#[test]
fn posted_pricing_dispatches_both_bandits() {
    let text = "problem = posted_pricing\nt = 500\nseeds = 0:2\neps = 0.5\nh = 8\n\n\
        [learner]\nalgo = bandit_msmw\n\n\
        [learner]\nalgo = exp3\n\n\
        [env]\nkind = iid_values\ndist = equal_revenue\neps = 0.5\nh = 8\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    assert_eq!(result.runs.len(), 4);
    for run in &result.runs {
        assert_eq!(run.metrics["env_queries"], 500.0);
        assert!(run.checks.iter().all(|c| c.pass));
    }
    // identical environments per seed across the two learners
    let a: Vec<_> = result.runs.iter().filter(|r| r.learner == "bandit_msmw").collect();
    let b: Vec<_> = result.runs.iter().filter(|r| r.learner == "exp3").collect();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.per_arm_gain, y.per_arm_gain);
    }
}

/// With a δ guard configured, pricing runs carry the guarded-benchmark
/// prefix series and the convergence report metrics.
#[test]
fn guarded_benchmark_series_and_convergence_report() {
    let text = "problem = single_buyer\nt = 1000\nseeds = 0:2\neps = 0.5\nh = 8\ndelta = 0.25\n\n\
        [learner]\nalgo = msmw\n\n\
        [env]\nkind = iid_values\ndist = equal_revenue\neps = 0.5\nh = 8\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    for run in &result.runs {
        let guarded = run
            .guarded_benchmark_series
            .as_ref()
            .expect("delta configured");
        assert_eq!(guarded.len(), run.series.len());
        // the guard only removes candidates: guarded prefix benchmark never
        // exceeds the unguarded prefix best
        for (g, p) in guarded.iter().zip(&run.series) {
            assert!(*g >= 0.0);
            assert!(*g <= p.best_fixed_gain + 1e-9);
        }
        // final point agrees with the scalar metric
        assert!((guarded.last().unwrap() - run.metrics["gmax_delta"]).abs() < 1e-9);
        assert!(run.metrics.contains_key("convergence_threshold_t"));
        assert!(run.metrics.contains_key("convergence_crossing_round"));
        // market-share series recorded for pricing problems
        assert!(run.series.iter().all(|p| p.market_share.is_some()));
    }
}

/// The growing-ladder problem runs end to end: mass conservation holds and
/// the benchmarks are computed against the realized ladder.
#[test]
fn unknown_h_problem_end_to_end() {
    let text = "problem = single_buyer_unknown_h\nt = 400\nseeds = 0:2\neps = 1.0\ndelta = 0.2\n\n\
        [learner]\nalgo = msmw\n\n\
        [env]\nkind = iid_values\ndist = two_point\nlo = 1.0\nhi = 9.0\np_hi = 0.3\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    assert!(!result.has_failures());
    for run in &result.runs {
        assert!(run.checks.iter().any(|c| c.name.contains("mass")));
        assert!(run.metrics.contains_key("gmax_fixed_price"));
        assert!(run.metrics.contains_key("gmax_delta"));
        // ladder grew past the initial single price
        assert!(run.per_arm_gain.len() > 1);
    }
}

/// The multi-buyer problem runs end to end on an enumerable instance with
/// the guarded benchmark attached.
#[test]
fn multi_buyer_problem_end_to_end() {
    let text = "problem = multi_buyer\nt = 300\nseeds = 0:2\neps = 1.0\nh = 2\nn = 2\ndelta = 0.25\n\n\
        [learner]\nalgo = msmw\n\n\
        [env]\nkind = iid_values\ndist = two_point\nlo = 1.0\nhi = 2.0\np_hi = 0.5\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    assert!(!result.has_failures());
    for run in &result.runs {
        assert!(run.metrics.contains_key("opt_delta"));
        assert!(run.metrics.contains_key("v_bar"));
        let guarded = run.guarded_benchmark_series.as_ref().unwrap();
        assert_eq!(guarded.len(), run.series.len());
        // sandwich at the horizon: OPT(delta) <= T * V̄
        let t = run.t as f64;
        assert!(run.metrics["opt_delta"] <= t * run.metrics["v_bar"] + 1e-9);
    }
}

/// Posted pricing respects the information-hiding contract through the
/// harness path as well.
#[test]
fn posted_pricing_counts_queries() {
    let text = "problem = posted_pricing\nt = 250\nseeds = 0:2\neps = 0.5\nh = 8\n\n\
        [learner]\nalgo = bandit_msmw\n\n\
        [env]\nkind = iid_values\ndist = two_point\nlo = 1.0\nhi = 6.0\np_hi = 0.4\n";
    let cfg = config::load(text).unwrap();
    let result = run_experiment(&cfg).unwrap();
    for run in &result.runs {
        assert_eq!(run.metrics["env_queries"], 250.0);
        assert!(run.checks.iter().all(|c| c.pass));
    }
}
