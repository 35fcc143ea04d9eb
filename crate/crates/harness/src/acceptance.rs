//! Verification suite: one function per criterion, each pinning its own
//! tolerances. `run_all` powers both the `verify` subcommand and the
//! `acceptance` integration test target.
//!
//! Budgets: the full suite runs Monte-Carlo sweeps sized for minutes of
//! wall-clock on a multicore box; `quick` shrinks replication counts for a
//! fast smoke signal while keeping every assertion.

use crate::config::{Algo, EnvSpec, ExperimentConfig, LearnerSpec, Problem};
use crate::experiment::run_experiment;
use multiscale::adversaries::{kl_per_round, BanditLbInstance, ValueDist};
use multiscale::bandits::{params_for, BanditLearner, BanditTarget};
use multiscale::baselines::{hedge_eta_for_horizon, HedgeLearner};
use multiscale::experts::{eta_for_eps, MsmwLearner, RewardMode};
use multiscale::ledger::RegretLedger;
use multiscale::math::mean_stderr;
use multiscale::myerson::{
    anonymous_reserve, benchmark_opt_delta_multibuyer, enumerate_myerson, run_multi_buyer_auction,
    LevelProfiles,
};
use multiscale::pricing::{
    benchmark_gmax, benchmark_gmax_delta, price_reward, required_sales,
    run_single_buyer_auction, PriceGrid,
};
use multiscale::projection::{bregman_project_oracle, multiscale_project};
use multiscale::rng::{SeededStream, STREAM_ENV};
use multiscale::space::{ActionSpace, WeightVector};
use multiscale::unknown_h::{prior_pi, prior_tail_mass, UnknownHAuction};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Outcome of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: usize, name: &'static str, pass: bool, detail: String) -> Self {
        Self {
            id,
            name,
            pass,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} criterion {:2} — {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Run every criterion, in order.
pub fn run_all(quick: bool) -> Vec<CriterionResult> {
    vec![
        c01_projection_agreement(quick),
        c02_omd_equivalence(quick),
        c03_expert_inequality(quick),
        c04_ledger_inequality(quick),
        c05_scaling_contrast(quick),
        c06_bandit_unbiasedness(quick),
        c07_bandit_calibrated_bound(quick),
        c08_expert_lb_dichotomy(quick),
        c09_bandit_lb_dichotomy(quick),
        c10_benchmarks_brute_force(quick),
        c11_multibuyer_reduction(quick),
        c12_unknown_h_equivalence(quick),
        c13_convergence_direction(quick),
        c14_determinism(quick),
    ]
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (uniform(rng, lo.ln(), hi.ln())).exp()
}

/// Criterion 1: Projection vs the independent convex-solver oracle on random instances:
/// ∞-norm agreement ≤ 1e-8 and λ* residual ≤ 1e-12.
pub fn c01_projection_agreement(quick: bool) -> CriterionResult {
    let instances = if quick { 200 } else { 1000 };
    let stream = SeededStream::new(101, STREAM_ENV);
    let worst = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.at_round(i);
            let k = rng.gen_range(1..=6);
            let ranges: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1.0, 1e3)).collect();
            let weights: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1e-6, 1e3)).collect();
            let space = ActionSpace::new(ranges.clone()).unwrap();
            let w = WeightVector::from_weights(&weights).unwrap();
            let (p, lambda) = multiscale_project(&w, &space, 1e-12).unwrap();
            let q = bregman_project_oracle(&w, &space).unwrap();
            let inf_norm = p
                .probs()
                .iter()
                .zip(q.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let residual = (weights
                .iter()
                .zip(&ranges)
                .map(|(&wi, &c)| wi * (-lambda / c).exp())
                .sum::<f64>()
                - 1.0)
                .abs();
            (inf_norm, residual)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let pass = worst.0 <= 1e-8 && worst.1 <= 1e-12;
    CriterionResult::new(
        1,
        "projection agrees with convex-solver oracle",
        pass,
        format!(
            "{instances} instances: worst inf-norm {:.2e} (tol 1e-8), worst residual {:.2e} (tol 1e-12)",
            worst.0, worst.1
        ),
    )
}

/// Criterion 2: Full learner trajectories match gradient-step + oracle-projection
/// trajectories coordinate-wise within 1e-8.
pub fn c02_omd_equivalence(quick: bool) -> CriterionResult {
    let runs = if quick { 20 } else { 100 };
    let stream = SeededStream::new(202, STREAM_ENV);
    let worst = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.at_round(i);
            let k = rng.gen_range(2..=5);
            let t = rng.gen_range(1..=20);
            let ranges: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 0.5, 50.0)).collect();
            let eta = uniform(&mut rng, 0.05, 1.0);
            let mode = if i % 2 == 0 {
                RewardMode::NonNegative
            } else {
                RewardMode::Symmetric
            };
            let space = ActionSpace::new(ranges.clone()).unwrap();
            let mut learner = MsmwLearner::new(space.clone(), eta, mode, i).unwrap();
            // Mirror-descent shadow: gradient step in the dual of the
            // weighted negative entropy, then the oracle Bregman projection.
            let mut shadow: Vec<f64> = learner.initial_distribution().to_vec();
            let mut worst = 0.0f64;
            for round in 0..t {
                let rewards: Vec<f64> = ranges
                    .iter()
                    .map(|&c| match mode {
                        RewardMode::NonNegative => uniform(&mut rng, 0.0, c),
                        RewardMode::Symmetric => uniform(&mut rng, -c, c),
                    })
                    .collect();
                learner.step(&rewards).unwrap();
                // ∇F(x)_i = c_i (1 + ln x_i); invert after adding η g.
                let w: Vec<f64> = shadow
                    .iter()
                    .zip(&ranges)
                    .zip(&rewards)
                    .map(|((&p, &c), &g)| {
                        let theta = c * (1.0 + p.max(1e-300).ln()) + eta * g;
                        (theta / c - 1.0).exp()
                    })
                    .collect();
                let wv = WeightVector::from_weights(&w).unwrap();
                shadow = bregman_project_oracle(&wv, &space)
                    .unwrap()
                    .into_probs();
                let p = learner.probs();
                for j in 0..k {
                    worst = worst.max((p[j] - shadow[j]).abs());
                }
                let _ = round;
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    CriterionResult::new(
        2,
        "mirror-descent equivalence of the update",
        worst <= 1e-8,
        format!("{runs} trajectories: worst coordinate gap {worst:.2e} (tol 1e-8)"),
    )
}

/// Criterion 3: The deterministic per-arm inequality
/// `Regret_i ≤ (2η/(1-η))·G_alg + (1/η)(c_i ln(1/(η π_i)) + c_i)` with
/// `η = ε/3` on random non-negative sequences; zero violations.
pub fn c03_expert_inequality(quick: bool) -> CriterionResult {
    let sequences = if quick { 40 } else { 500 };
    let t = if quick { 2_000 } else { 10_000 };
    let k = 16;
    let ranges: Vec<f64> = (0..k).map(|i| 2f64.powi(i as i32)).collect();
    
    let worst = (0..sequences as u64)
        .into_par_iter()
        .map(|i| {
            let eps = if i % 2 == 0 { 0.1 } else { 0.3 };
            let space = ActionSpace::new(ranges.clone()).unwrap();
            let mut learner =
                MsmwLearner::new(space, eta_for_eps(eps), RewardMode::NonNegative, i).unwrap();
            let env = SeededStream::new(1000 + i, STREAM_ENV);
            for round in 0..t as u64 {
                let mut rng = env.at_round(round);
                let rewards: Vec<f64> = ranges.iter().map(|&c| c * rng.gen::<f64>()).collect();
                learner.step(&rewards).unwrap();
            }
            let mut worst = f64::NEG_INFINITY;
            for arm in 0..k {
                let bound = learner.regret_bound(arm, eps).unwrap();
                worst = worst.max(learner.ledger().regret(arm) - bound);
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    CriterionResult::new(
        3,
        "deterministic expert regret inequality",
        worst <= 0.0,
        format!(
            "{sequences} sequences x {k} arms (T={t}): worst regret-minus-bound {worst:.3e} (must be <= 0)"
        ),
    )
}

/// Criterion 4: The ledger inequality (local norm + initial divergence) holds for every
/// point-mass benchmark on every logged run, in both reward modes and on the
/// bandit estimator sequence.
pub fn c04_ledger_inequality(quick: bool) -> CriterionResult {
    let runs = if quick { 40 } else { 200 };
    let stream = SeededStream::new(404, STREAM_ENV);
    let worst_experts = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.at_round(i);
            let k = rng.gen_range(2..=8);
            let ranges: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 0.5, 100.0)).collect();
            let eta = uniform(&mut rng, 0.02, 1.0);
            let mode = if i % 2 == 0 {
                RewardMode::NonNegative
            } else {
                RewardMode::Symmetric
            };
            let space = ActionSpace::new(ranges.clone()).unwrap();
            let mut learner = MsmwLearner::new(space, eta, mode, i).unwrap();
            let env = SeededStream::new(2000 + i, STREAM_ENV);
            for round in 0..500 {
                let mut r = env.at_round(round);
                let rewards: Vec<f64> = ranges
                    .iter()
                    .map(|&c| match mode {
                        RewardMode::NonNegative => c * r.gen::<f64>(),
                        RewardMode::Symmetric => c * (2.0 * r.gen::<f64>() - 1.0),
                    })
                    .collect();
                learner.step(&rewards).unwrap();
            }
            let mut worst = f64::NEG_INFINITY;
            for arm in 0..k {
                let (lhs, rhs) = learner.ledger_gap_bound(arm).unwrap();
                worst = worst.max(lhs - rhs);
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let bandit_runs = if quick { 20 } else { 100 };
    let worst_bandit = (0..bandit_runs as u64)
        .into_par_iter()
        .map(|i| {
            let ranges = vec![1.0, 4.0, 16.0, 64.0];
            let space = ActionSpace::new(ranges.clone()).unwrap();
            let (gamma, eta) = params_for(0.2, 4, BanditTarget::BestArm, &space).unwrap();
            let mut learner =
                BanditLearner::new(space, gamma, eta, RewardMode::NonNegative, i).unwrap();
            let env = SeededStream::new(3000 + i, STREAM_ENV);
            for round in 0..2000u64 {
                let (arm, _) = learner.choose();
                let mut r = env.at_round(round);
                let reward = ranges[arm] * r.gen::<f64>();
                learner.update(arm, reward).unwrap();
            }
            let mut worst = f64::NEG_INFINITY;
            for arm in 0..4 {
                let (lhs, rhs) = learner.ledger_gap_bound(arm).unwrap();
                worst = worst.max(lhs - rhs);
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let worst = worst_experts.max(worst_bandit);
    CriterionResult::new(
        4,
        "ledger inequality on every logged run",
        worst <= 0.0,
        format!(
            "{runs} expert runs (both modes) + {bandit_runs} bandit estimator runs: worst lhs-rhs {worst:.3e} (must be <= 0)"
        ),
    )
}

/// Criterion 5: Multi-scale vs standard scaling on the zoom environment: the learner's
/// regret against the best (small) price stays nearly flat in `h` while the
/// `c_max`-normalized baseline degrades.
pub fn c05_scaling_contrast(quick: bool) -> CriterionResult {
    // The contrast is driven by the horizon (the baseline's saturation at
    // large h), so quick mode cuts seeds, not rounds.
    let seeds = if quick { 8 } else { 50 };
    let t = 100_000;
    let grid_eps = 0.25;
    let dist = multiscale::adversaries::zoom_stress_dist();
    let hs = [64.0, 256.0, 1024.0];

    // mean regret vs best fixed grid price, per (h, learner)
    let mut msmw_mean = Vec::new();
    let mut hedge_mean = Vec::new();
    for &h in &hs {
        let grid = PriceGrid::new(grid_eps, h).unwrap();
        let k = grid.k();
        let regrets: Vec<(f64, f64)> = (0..seeds as u64)
            .into_par_iter()
            .map(|seed| {
                let env = SeededStream::new(seed, STREAM_ENV);
                let trace: Vec<f64> = (0..t as u64)
                    .map(|r| dist.sample(env.uniform_at(r)))
                    .collect();
                // multi-scale learner, horizon-tuned accuracy
                let eps = multiscale::experts::eps_for_horizon(k, t);
                let space = ActionSpace::new(grid.prices().to_vec()).unwrap();
                let mut msmw =
                    MsmwLearner::new(space, eta_for_eps(eps), RewardMode::NonNegative, seed)
                        .unwrap();
                // c_max-normalized baseline, textbook rate
                let mut hedge =
                    HedgeLearner::new(k, grid.prices()[k - 1], hedge_eta_for_horizon(k, t), seed)
                        .unwrap();
                let mut rewards = vec![0.0; k];
                for &v in &trace {
                    for (j, &p) in grid.prices().iter().enumerate() {
                        rewards[j] = price_reward(p, v);
                    }
                    msmw.step(&rewards).unwrap();
                    hedge.step(&rewards).unwrap();
                }
                let star = msmw.ledger().best_arm();
                (
                    msmw.ledger().regret(star),
                    hedge.ledger().regret(hedge.ledger().best_arm()),
                )
            })
            .collect();
        let (m, _) = mean_stderr(&regrets.iter().map(|r| r.0).collect::<Vec<_>>());
        let (hm, _) = mean_stderr(&regrets.iter().map(|r| r.1).collect::<Vec<_>>());
        msmw_mean.push(m);
        hedge_mean.push(hm);
    }

    let msmw_growth = msmw_mean[2] / msmw_mean[0];
    let hedge_growth = hedge_mean[2] / hedge_mean[0];
    let ratio_at_top = msmw_mean[2] / hedge_mean[2];
    let pass = msmw_growth < 2.0 && hedge_growth > 4.0 && ratio_at_top <= 0.5;
    CriterionResult::new(
        5,
        "multi-scale vs standard regret scaling in h",
        pass,
        format!(
            "mean regret at h=64/256/1024: multiscale {:.0}/{:.0}/{:.0} (growth {msmw_growth:.2}x, need <2x), \
             baseline {:.0}/{:.0}/{:.0} (growth {hedge_growth:.2}x, need >4x), top ratio {ratio_at_top:.3} (need <=0.5)",
            msmw_mean[0], msmw_mean[1], msmw_mean[2], hedge_mean[0], hedge_mean[1], hedge_mean[2]
        ),
    )
}

/// Criterion 6: Exhaustive per-round estimator unbiasedness (k ≤ 4) and the `γ/k`
/// exploration floor on every logged round.
pub fn c06_bandit_unbiasedness(quick: bool) -> CriterionResult {
    let rounds = if quick { 200 } else { 1000 };
    let ranges = vec![1.0, 3.0, 9.0, 27.0];
    let space = ActionSpace::new(ranges.clone()).unwrap();
    let (gamma, eta) = params_for(0.3, 4, BanditTarget::BestArm, &space).unwrap();
    let mut learner = BanditLearner::new(space, gamma, eta, RewardMode::NonNegative, 6).unwrap();
    let env = SeededStream::new(606, STREAM_ENV);
    let floor = gamma / 4.0;
    let mut worst_bias = 0.0f64;
    let mut worst_floor = f64::INFINITY;
    for t in 0..rounds as u64 {
        let mixed = learner.mixed_probs();
        for &q in &mixed {
            worst_floor = worst_floor.min(q);
        }
        let mut rng = env.at_round(t);
        let rewards: Vec<f64> = ranges.iter().map(|&c| c * rng.gen::<f64>()).collect();
        // Exhaustive expectation of the importance-weighted estimator over
        // the k possible observed arms, coordinate by coordinate.
        for i in 0..4 {
            let mut expectation = 0.0;
            for j in 0..4 {
                if i == j {
                    expectation += mixed[j] * (rewards[j] / mixed[j]);
                }
            }
            worst_bias = worst_bias.max((expectation - rewards[i]).abs());
        }
        let (arm, _) = learner.choose();
        learner.update(arm, rewards[arm]).unwrap();
    }
    let pass = worst_bias <= 1e-12 && worst_floor >= floor - 1e-12;
    CriterionResult::new(
        6,
        "bandit estimator unbiasedness and exploration floor",
        pass,
        format!(
            "{rounds} rounds: worst |E[estimate] - g| {worst_bias:.2e} (tol 1e-12), min mixed prob {worst_floor:.5} >= gamma/k {floor:.5}"
        ),
    )
}

/// Criterion 7: Calibrated bandit bound on i.i.d. environments plus per-round-regret
/// sublinearity across horizons (2 standard errors).
pub fn c07_bandit_calibrated_bound(quick: bool) -> CriterionResult {
    let seeds = if quick { 40 } else { 200 };
    let t = if quick { 30_000 } else { 100_000 };
    let checkpoints = if quick {
        [1_000usize, 8_000, 30_000]
    } else {
        [1_000, 10_000, 100_000]
    };
    let k = 8;
    let ranges: Vec<f64> = (0..k).map(|i| 2f64.powi(i as i32)).collect();
    // Sale probabilities: best arm is the mid-range arm 5 (c=32).
    let probs = [0.5, 0.5, 0.5, 0.5, 0.5, 0.6, 0.25, 0.1];
    let eps = ((k as f64 * (k as f64 * t as f64).ln()) / t as f64)
        .sqrt()
        .min(0.5);
    let space = ActionSpace::new(ranges.clone()).unwrap();
    let (gamma, eta) = params_for(eps, k, BanditTarget::BestArm, &space).unwrap();

    // Per seed: regret against the empirically best arm at each checkpoint.
    let per_seed: Vec<[f64; 3]> = (0..seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let space = ActionSpace::new(ranges.clone()).unwrap();
            let mut learner =
                BanditLearner::new(space, gamma, eta, RewardMode::NonNegative, seed).unwrap();
            let env = SeededStream::new(seed, STREAM_ENV);
            let mut ledger = RegretLedger::new(k);
            let mut out = [0.0; 3];
            for round in 0..t as u64 {
                let mut rng = env.at_round(round);
                let rewards: Vec<f64> = ranges
                    .iter()
                    .zip(&probs)
                    .map(|(&c, &p)| if rng.gen::<f64>() < p { c } else { 0.0 })
                    .collect();
                let (arm, mixed) = learner.choose();
                learner.update(arm, rewards[arm]).unwrap();
                ledger.record(&mixed, &rewards, rewards[arm], &ranges);
                for (ci, &cp) in checkpoints.iter().enumerate() {
                    if round + 1 == cp as u64 {
                        out[ci] = ledger.regret(ledger.best_arm());
                    }
                }
            }
            out
        })
        .collect();

    // Calibrated bound at the full horizon against the best arm's gain.
    let star_gain = probs[5] * ranges[5] * t as f64;
    let bound = eps * star_gain + 10.0 * (k as f64 / eps) * (k as f64 / eps).ln() * ranges[5];
    let finals: Vec<f64> = per_seed.iter().map(|r| r[2]).collect();
    let (mean_final, _) = mean_stderr(&finals);

    // Sublinearity: mean regret/T strictly decreasing at 2 SE.
    let mut rates: Vec<(f64, f64)> = Vec::new();
    for (ci, &cp) in checkpoints.iter().enumerate() {
        let vals: Vec<f64> = per_seed.iter().map(|r| r[ci] / cp as f64).collect();
        rates.push(mean_stderr(&vals));
    }
    let sublinear = rates.windows(2).all(|w| {
        let (m0, s0) = w[0];
        let (m1, s1) = w[1];
        m1 + 2.0 * (s0 + s1) < m0
    });

    let pass = mean_final <= bound && sublinear;
    CriterionResult::new(
        7,
        "calibrated bandit regret bound and sublinearity",
        pass,
        format!(
            "{seeds} seeds, T={t}: mean regret {mean_final:.0} <= bound {bound:.0}; regret/T at {:?} = {:.3}/{:.3}/{:.3} (2SE-monotone: {sublinear})",
            checkpoints, rates[0].0, rates[1].0, rates[2].0
        ),
    )
}

fn lb_learners() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec {
            algo: Algo::Msmw,
            mode: RewardMode::Symmetric,
            eta: None,
            gamma: None,
            target: BanditTarget::Symmetric,
        },
        LearnerSpec {
            algo: Algo::Hedge,
            mode: RewardMode::Symmetric,
            eta: None,
            gamma: None,
            target: BanditTarget::Symmetric,
        },
        LearnerSpec {
            algo: Algo::BanditMsmw,
            mode: RewardMode::Symmetric,
            eta: None,
            gamma: None,
            target: BanditTarget::Symmetric,
        },
        LearnerSpec {
            algo: Algo::Exp3,
            mode: RewardMode::Symmetric,
            eta: None,
            gamma: None,
            target: BanditTarget::Symmetric,
        },
    ]
}

/// Criterion 8: Adaptive expert lower-bound dichotomy for every learner in the repo at
/// h ∈ {2^16, 2^20}.
pub fn c08_expert_lb_dichotomy(_quick: bool) -> CriterionResult {
    let mut detail = String::new();
    let mut pass = true;
    for h in [65_536.0, 1_048_576.0] {
        let cfg = ExperimentConfig {
            problem: Problem::ExpertLb,
            t: 1, // horizon comes from h
            seeds: vec![0],
            eps: 0.25,
            h,
            n: 1,
            delta: None,
            out: None,
            learners: lb_learners(),
            env: EnvSpec::AdaptiveExpertLb,
            echo: String::new(),
        };
        let result = match run_experiment(&cfg) {
            Ok(r) => r,
            Err(e) => {
                return CriterionResult::new(
                    8,
                    "adaptive expert lower-bound dichotomy",
                    false,
                    format!("run failed: {e}"),
                )
            }
        };
        for run in &result.runs {
            let ok = run.checks.iter().all(|c| c.pass);
            pass &= ok;
            detail.push_str(&format!(
                "h=2^{} {}: {}; ",
                h.log2() as u32,
                run.learner,
                if ok { "holds" } else { "VIOLATED" }
            ));
        }
    }
    CriterionResult::new(8, "adaptive expert lower-bound dichotomy", pass, detail)
}

/// Criterion 9: Stochastic bandit lower-bound dichotomy at 2 standard errors over seed
/// means, plus the per-round KL bound on a dense ε grid.
pub fn c09_bandit_lb_dichotomy(quick: bool) -> CriterionResult {
    let seeds = if quick { 80 } else { 400 };
    let h = 64.0;
    let t = 64; // h/(256 eps^2) with eps = 1/16
    let inst = BanditLbInstance::new(h, t, 1).unwrap();
    let (thr1, thr2) = inst.dichotomy_thresholds();

    let mut detail = format!("eps={}, thresholds ({thr1:.1}, {thr2:.1}); ", inst.eps());
    let mut pass = true;
    for spec in [
        LearnerSpec {
            algo: Algo::BanditMsmw,
            mode: RewardMode::Symmetric,
            eta: None,
            gamma: None,
            target: BanditTarget::Symmetric,
        },
        LearnerSpec {
            algo: Algo::Exp3,
            mode: RewardMode::Symmetric,
            eta: None,
            gamma: None,
            target: BanditTarget::Symmetric,
        },
    ] {
        let mut means = Vec::new();
        for instance in [1u8, 2] {
            let cfg = ExperimentConfig {
                problem: Problem::BanditLb,
                t,
                seeds: (0..seeds).collect(),
                eps: 0.25,
                h,
                n: 1,
                delta: None,
                out: None,
                learners: vec![spec.clone()],
                env: EnvSpec::StochasticBanditLb { instance },
                echo: String::new(),
            };
            let result = match run_experiment(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    return CriterionResult::new(
                        9,
                        "stochastic bandit lower-bound dichotomy",
                        false,
                        format!("run failed: {e}"),
                    )
                }
            };
            let key = if instance == 1 {
                "regret_arm1"
            } else {
                "regret_arm2"
            };
            means.push(result.aggregates[0].metrics[key]);
        }
        let (m1, s1) = means[0];
        let (m2, s2) = means[1];
        let ok = m1 - 2.0 * s1 > thr1 || m2 - 2.0 * s2 > thr2;
        pass &= ok;
        detail.push_str(&format!(
            "{}: regret1 {m1:.1}±{s1:.1} / regret2 {m2:.1}±{s2:.1} -> {}; ",
            spec.algo.name(),
            if ok { "holds" } else { "VIOLATED" }
        ));
    }

    // KL bound on a dense grid of eps in (0, 0.1).
    let mut worst_ratio = 0.0f64;
    for i in 1..200 {
        let eps = 0.1 * i as f64 / 200.0;
        match kl_per_round(eps) {
            Ok(kl) => worst_ratio = worst_ratio.max(kl / (64.0 * eps * eps)),
            Err(e) => {
                return CriterionResult::new(
                    9,
                    "stochastic bandit lower-bound dichotomy",
                    false,
                    format!("kl_per_round failed at eps={eps}: {e}"),
                )
            }
        }
    }
    pass &= worst_ratio <= 1.0;
    detail.push_str(&format!("KL/(64eps^2) max {worst_ratio:.3} <= 1"));
    CriterionResult::new(9, "stochastic bandit lower-bound dichotomy", pass, detail)
}

/// Criterion 10: Offline benchmarks match independently written exhaustive oracles
/// exactly on random small traces.
pub fn c10_benchmarks_brute_force(quick: bool) -> CriterionResult {
    let cases = if quick { 60 } else { 200 };
    let stream = SeededStream::new(1010, STREAM_ENV);
    let mut failures = Vec::new();

    for i in 0..cases as u64 {
        let mut rng = stream.at_round(i);
        let eps = if i % 2 == 0 { 1.0 } else { 0.5 };
        let h = uniform(&mut rng, 2.0, 16.0);
        let grid = PriceGrid::new(eps, h).unwrap();
        let t = rng.gen_range(1..=50);
        let trace: Vec<f64> = (0..t)
            .map(|_| {
                if rng.gen::<f64>() < 0.5 {
                    // on-grid value
                    let j = rng.gen_range(0..grid.k());
                    grid.prices()[j]
                } else {
                    uniform(&mut rng, 1.0, h)
                }
            })
            .collect();

        // Oracle: fully independent double loop.
        let mut oracle_best = f64::NEG_INFINITY;
        let mut oracle_price = grid.prices()[0];
        for &p in grid.prices() {
            let mut total = 0.0;
            for &v in &trace {
                if v >= p {
                    total += p;
                }
            }
            if total > oracle_best {
                oracle_best = total;
                oracle_price = p;
            }
        }
        let (g, p_star) = benchmark_gmax(&trace, &grid);
        if g != oracle_best || p_star != oracle_price {
            failures.push(format!("case {i}: gmax {g} vs oracle {oracle_best}"));
        }

        let delta = uniform(&mut rng, 0.0, 1.0);
        let required = required_sales(delta, trace.len());
        let mut oracle_guarded: Option<(f64, f64)> = None;
        for &p in grid.prices() {
            let sales = trace.iter().filter(|&&v| v >= p).count() as u64;
            if sales < required {
                continue;
            }
            let mut total = 0.0;
            for &v in &trace {
                if v >= p {
                    total += p;
                }
            }
            if oracle_guarded.is_none_or(|(b, _)| total > b) {
                oracle_guarded = Some((total, p));
            }
        }
        let gd = benchmark_gmax_delta(&trace, &grid, delta).unwrap();
        match (oracle_guarded, gd.qualified) {
            (Some((b, p)), true) => {
                if gd.value != b || gd.price != Some(p) {
                    failures.push(format!("case {i}: gmax_delta {} vs oracle {b}", gd.value));
                }
            }
            (None, false) => {}
            _ => failures.push(format!("case {i}: gmax_delta qualification mismatch")),
        }
    }

    // Multi-buyer OPT(delta) against a counting + capping oracle.
    let mb_cases = if quick { 30 } else { 100 };
    for i in 0..mb_cases as u64 {
        let mut rng = stream.at_round(10_000 + i);
        let n = rng.gen_range(1..=2);
        let levels: Vec<f64> = match rng.gen_range(1..=3) {
            1 => vec![1.0],
            2 => vec![1.0, 2.0],
            _ => vec![1.0, 2.0, 4.0],
        };
        let mechanisms = enumerate_myerson(n, &levels).unwrap();
        let t = rng.gen_range(1..=20);
        let trace: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..n).map(|_| uniform(&mut rng, 1.0, 6.0)).collect())
            .collect();
        let delta = uniform(&mut rng, 0.0, 1.0);

        // Oracle V̄: scan candidate values (all round maxima) descending.
        let required = required_sales(delta, t) as usize;
        let maxima: Vec<f64> = trace
            .iter()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let oracle_vbar = if required == 0 {
            None
        } else {
            let mut candidates = maxima.clone();
            candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut best: Option<f64> = None;
            for &c in &candidates {
                let count = maxima.iter().filter(|&&m| m >= c).count();
                if count >= required {
                    best = Some(best.map_or(c, |b: f64| b.max(c)));
                }
            }
            best
        };
        // Oracle value: exhaustive over mechanisms + the exact reserve.
        let oracle_value = {
            let capped: Vec<Vec<f64>> = match oracle_vbar {
                None => trace.clone(),
                Some(cap) => trace
                    .iter()
                    .map(|r| r.iter().map(|&v| v.min(cap)).collect())
                    .collect(),
            };
            let mut best = 0.0f64;
            for m in &mechanisms {
                let mut tot = 0.0;
                for p in &capped {
                    tot += m.execute(p).unwrap().1;
                }
                best = best.max(tot);
            }
            if let Some(cap) = oracle_vbar {
                let lv = if cap > 1.0 { vec![1.0, cap] } else { vec![1.0] };
                let reserve = anonymous_reserve(n, &lv, cap).unwrap();
                let mut tot = 0.0;
                for p in &capped {
                    tot += reserve.execute(p).unwrap().1;
                }
                best = best.max(tot);
            }
            best
        };
        let od = benchmark_opt_delta_multibuyer(&trace, delta, &mechanisms).unwrap();
        if od.v_bar != oracle_vbar || od.value != oracle_value {
            failures.push(format!(
                "mb case {i}: opt_delta ({:?}, {}) vs oracle ({:?}, {})",
                od.v_bar, od.value, oracle_vbar, oracle_value
            ));
        }
    }

    let pass = failures.is_empty();
    CriterionResult::new(
        10,
        "benchmarks match exhaustive oracles exactly",
        pass,
        if pass {
            format!("{cases} single-buyer + {mb_cases} multi-buyer cases, exact agreement")
        } else {
            failures.join("; ")
        },
    )
}

/// Criterion 11: Multi-buyer reduction sanity: the n=1 mechanism run reproduces the
/// single-buyer run; declared ranges equal grid-swept max payments; OPT(δ)
/// dominates the `δT·V̄` reserve witness.
pub fn c11_multibuyer_reduction(quick: bool) -> CriterionResult {
    let mut detail = String::new();
    let mut pass = true;

    // (a) n = 1 equivalence.
    let t = if quick { 200 } else { 1000 };
    let stream = SeededStream::new(1111, STREAM_ENV);
    let trace: Vec<f64> = (0..t as u64)
        .map(|r| 1.0 + 3.0 * stream.uniform_at(r))
        .collect();
    let rows: Vec<Vec<f64>> = trace.iter().map(|&v| vec![v]).collect();
    let single = run_single_buyer_auction(&trace, 1.0, 4.0, 9).unwrap();
    let multi = run_multi_buyer_auction(&rows, 1.0, 4.0, 9).unwrap();
    let mut worst = 0.0f64;
    if single.ledger.per_arm_gain.len() != multi.ledger.per_arm_gain.len() {
        pass = false;
        detail.push_str("arm count mismatch; ");
    } else {
        for (a, b) in single
            .ledger
            .per_arm_gain
            .iter()
            .zip(&multi.ledger.per_arm_gain)
        {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max(
            (single.ledger.alg_gain_expected - multi.ledger.alg_gain_expected).abs(),
        );
        worst = worst.max(
            (single.ledger.alg_gain_realized - multi.ledger.alg_gain_realized).abs(),
        );
        pass &= worst <= 1e-10;
        detail.push_str(&format!("n=1 equivalence gap {worst:.2e} (tol 1e-10); "));
    }

    // (b) declared ranges equal max payment over the profile grid.
    let levels = [1.0, 2.0, 4.0];
    for (n, l) in [(1usize, 3usize), (2, 2)] {
        let ms = enumerate_myerson(n, &levels[..l]).unwrap();
        for m in &ms {
            let mut sweep = 0.0f64;
            for profile in LevelProfiles::new(n, l) {
                let values: Vec<f64> = profile.iter().map(|&i| levels[i]).collect();
                sweep = sweep.max(m.execute(&values).unwrap().1);
            }
            if sweep != m.max_payment() {
                pass = false;
                detail.push_str(&format!(
                    "range mismatch (n={n}): {} vs sweep {sweep}; ",
                    m.max_payment()
                ));
            }
        }
    }
    detail.push_str("declared ranges match grid sweeps; ");

    // (c) OPT(delta) >= delta*T*V̄ on random traces.
    let cases = if quick { 40 } else { 150 };
    let mut worst_slack = f64::INFINITY;
    for i in 0..cases as u64 {
        let mut rng = stream.at_round(50_000 + i);
        let n = rng.gen_range(1..=2);
        let t = rng.gen_range(2..=30);
        let trace: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..n).map(|_| uniform(&mut rng, 1.0, 8.0)).collect())
            .collect();
        let delta = uniform(&mut rng, 0.05, 1.0);
        let ms = enumerate_myerson(n, &levels[..2]).unwrap();
        let od = benchmark_opt_delta_multibuyer(&trace, delta, &ms).unwrap();
        if let Some(v_bar) = od.v_bar {
            let witness = required_sales(delta, t) as f64 * v_bar;
            worst_slack = worst_slack.min(od.value - witness);
            if od.value + 1e-12 < witness {
                pass = false;
            }
        }
    }
    detail.push_str(&format!(
        "OPT(delta) - ceil(dT)*V̄ >= {worst_slack:.2e} over {cases} traces"
    ));

    CriterionResult::new(11, "multi-buyer reduction sanity", pass, detail)
}

/// Criterion 12: The lazy growing-ladder run matches a 64-price truncated countable
/// simulation; prior mass conservation; analytic prior normalization.
pub fn c12_unknown_h_equivalence(quick: bool) -> CriterionResult {
    let mut pass = true;
    let mut detail = String::new();

    let runs = if quick { 10 } else { 30 };
    let t = if quick { 80 } else { 200 };
    
    let mut worst_gap = 0.0f64;
    let mut worst_mass = 0.0f64;
    for i in 0..runs as u64 {
        let eps = if i % 2 == 0 { 1.0 } else { 0.5 };
        let eta = eta_for_eps(eps);
        // Truncated explicit simulation over 64 ladder prices.
        let prices: Vec<f64> = (0..64).map(|j| (1.0 + eps).powi(j)).collect();
        let prior: Vec<f64> = (0..64).map(|j| prior_pi(eps, j)).collect();
        let space = ActionSpace::with_prior(prices.clone(), prior).unwrap();
        let mut explicit = MsmwLearner::new(space, eta, RewardMode::NonNegative, i).unwrap();
        let mut lazy = UnknownHAuction::new(eps, i).unwrap();

        let env = SeededStream::new(7000 + i, STREAM_ENV);
        for round in 0..t as u64 {
            let v = 1.0 + 15.0 * env.uniform_at(round);
            let rewards: Vec<f64> = prices.iter().map(|&p| price_reward(p, v)).collect();
            explicit.step(&rewards).unwrap();
            lazy.step(v).unwrap();
            let probs = explicit.probs();
            for (j, prob) in probs.iter().enumerate().take(lazy.active_prices().len()) {
                worst_gap = worst_gap.max((lazy.prob_of_index(j as u32) - prob).abs());
            }
            worst_mass = worst_mass.max((lazy.total_mass() - 1.0).abs());
        }
    }
    pass &= worst_gap <= 1e-8 && worst_mass <= 1e-10;
    detail.push_str(&format!(
        "{runs} runs x {t} rounds: worst prob gap {worst_gap:.2e} (tol 1e-8), worst mass drift {worst_mass:.2e} (tol 1e-10); "
    ));

    // Analytic prior normalization for eps in {0.5, 1}.
    for eps in [0.5, 1.0] {
        let partial: f64 = (0..500).map(|j| prior_pi(eps, j)).sum();
        let residual = (partial + prior_tail_mass(eps, 500) - 1.0).abs();
        if residual > 1e-12 {
            pass = false;
        }
        detail.push_str(&format!("prior normalization eps={eps}: |sum-1| {residual:.1e}; "));
    }

    CriterionResult::new(12, "growing ladder equals countable simulation", pass, detail)
}

/// Criterion 13: Convergence-rate direction: at the calibrated threshold horizon the
/// learner clears `(1-ε)·G_max(δ)` in at least 95% of seeds.
pub fn c13_convergence_direction(quick: bool) -> CriterionResult {
    let seeds = if quick { 50 } else { 200 };
    let (eps, delta, h) = (0.2f64, 0.1f64, 256.0f64);
    let t = (20.0 * (h.ln() / eps).ln() / (eps * eps * delta)).ceil() as usize;
    let dist = ValueDist::TwoPoint {
        lo: 1.0,
        hi: 4.0,
        p_hi: 0.35,
    };
    let hits: usize = (0..seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let env = SeededStream::new(seed, STREAM_ENV);
            let trace: Vec<f64> = (0..t as u64)
                .map(|r| dist.sample(env.uniform_at(r)))
                .collect();
            let run = run_single_buyer_auction(&trace, eps, h, seed).unwrap();
            let gd = benchmark_gmax_delta(&trace, &run.grid, delta).unwrap();
            usize::from(run.ledger.alg_gain_expected >= (1.0 - eps) * gd.value)
        })
        .sum();
    let frac = hits as f64 / seeds as f64;
    CriterionResult::new(
        13,
        "convergence to the guarded benchmark at threshold horizon",
        frac >= 0.95,
        format!(
            "T={t}, (eps, delta, h)=({eps}, {delta}, {h}): G_alg >= (1-eps)Gmax(delta) in {hits}/{seeds} seeds ({:.1}%)",
            100.0 * frac
        ),
    )
}

/// Criterion 14: Bit-identical re-runs for identical config and seed.
pub fn c14_determinism(_quick: bool) -> CriterionResult {
    let text = "problem = posted_pricing\nt = 500\nseeds = 7:2\neps = 0.5\nh = 8\ndelta = 0.2\n\n[learner]\nalgo = bandit_msmw\n\n[learner]\nalgo = exp3\n\n[env]\nkind = iid_values\ndist = equal_revenue\neps = 0.5\nh = 8\n";
    let cfg = match crate::config::load(text) {
        Ok(c) => c,
        Err(e) => {
            return CriterionResult::new(14, "determinism", false, format!("config: {e}"))
        }
    };
    let a = run_experiment(&cfg);
    let b = run_experiment(&cfg);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let ja: Vec<String> = a
                .runs
                .iter()
                .map(|r| serde_json::to_string(&r.canonical()).unwrap())
                .collect();
            let jb: Vec<String> = b
                .runs
                .iter()
                .map(|r| serde_json::to_string(&r.canonical()).unwrap())
                .collect();
            let pass = ja == jb;
            CriterionResult::new(
                14,
                "bit-identical re-runs",
                pass,
                format!(
                    "{} runs serialized identically: {pass}",
                    a.runs.len()
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => {
            CriterionResult::new(14, "bit-identical re-runs", false, format!("run: {e}"))
        }
    }
}
