//! Full-information multi-scale learner: multiplicative weights normalized by
//! per-arm ranges, followed by the smooth multi-scale projection.
//!
//! Two reward regimes share the update and differ only in the initial
//! distribution and the admissible reward range: `NonNegative` admits
//! `g_i ∈ [0, c_i]`, `Symmetric` admits `g_i ∈ [-c_i, c_i]`.

use crate::ledger::RegretLedger;
use crate::math::ln_floored;
use crate::projection::{materialize, project_log, DEFAULT_PROJECTION_TOL};
use crate::rng::{sample_categorical, SeededStream, STREAM_ARM};
use crate::space::{ActionSpace, SimplexPoint};
use crate::{Error, Result};

/// Admissible per-round reward range relative to each arm's range `c_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// `g_i ∈ [0, c_i]`.
    NonNegative,
    /// `g_i ∈ [-c_i, c_i]`.
    Symmetric,
}

/// Multi-scale multiplicative-weights learner (full information).
#[derive(Debug, Clone)]
pub struct MsmwLearner {
    space: ActionSpace,
    eta: f64,
    mode: RewardMode,
    logp: Vec<f64>,
    mu: Vec<f64>,
    ledger: RegretLedger,
    round: u64,
    arm_stream: SeededStream,
    tol: f64,
}

/// Learning rate for the non-negative-rewards guarantee at accuracy `eps`.
pub fn eta_for_eps(eps: f64) -> f64 {
    eps / 3.0
}

/// Horizon-tuned accuracy `ε = sqrt(ln(kT)/T)` for the pure-additive bound.
pub fn eps_for_horizon(k: usize, t: usize) -> f64 {
    ((k as f64 * t as f64).ln() / t as f64).sqrt().min(1.0)
}

impl MsmwLearner {
    /// Initial distribution per mode:
    /// `NonNegative` uses `μ = (1-η)·1_{i_min} + η·π`;
    /// `Symmetric` uses `μ_j = π_j·c_min/c_j` for `j ≠ i_min` with the
    /// remaining mass on `i_min`.
    pub fn new(space: ActionSpace, eta: f64, mode: RewardMode, seed: u64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidEta {
                eta,
                bound: "(0, 1]",
            });
        }
        let k = space.k();
        let pi = space.prior_or_uniform();
        let i_min = space.i_min();
        let mut mu = vec![0.0; k];
        match mode {
            RewardMode::NonNegative => {
                for j in 0..k {
                    mu[j] = eta * pi[j];
                }
                mu[i_min] += 1.0 - eta;
            }
            RewardMode::Symmetric => {
                let c_min = space.c_min();
                let mut rest = 0.0;
                for j in 0..k {
                    if j != i_min {
                        mu[j] = pi[j] * c_min / space.range(j);
                        rest += mu[j];
                    }
                }
                mu[i_min] = 1.0 - rest;
            }
        }
        let logp = mu.iter().map(|&m| ln_floored(m)).collect();
        Ok(Self {
            ledger: RegretLedger::new(k),
            arm_stream: SeededStream::new(seed, STREAM_ARM),
            space,
            eta,
            mode,
            logp,
            mu,
            round: 0,
            tol: DEFAULT_PROJECTION_TOL,
        })
    }

    pub fn set_projection_tol(&mut self, tol: f64) -> Result<()> {
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance(tol));
        }
        self.tol = tol;
        Ok(())
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.mu
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    /// Current distribution `p^t` in linear domain.
    pub fn probs(&self) -> Vec<f64> {
        self.logp.iter().map(|&l| l.exp()).collect()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.logp
    }

    pub fn distribution(&self) -> Result<SimplexPoint> {
        materialize(&self.logp)
    }

    fn validate_rewards(&self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != self.space.k() {
            return Err(Error::DimensionMismatch {
                expected: self.space.k(),
                got: rewards.len(),
            });
        }
        for (arm, &g) in rewards.iter().enumerate() {
            let c = self.space.range(arm);
            let lo = match self.mode {
                RewardMode::NonNegative => 0.0,
                RewardMode::Symmetric => -c,
            };
            if !g.is_finite() || g < lo || g > c {
                return Err(Error::RewardOutOfRange {
                    arm,
                    value: g,
                    lo,
                    hi: c,
                });
            }
        }
        Ok(())
    }

    /// One round: sample `i_t ~ p^t`, fold in the reward vector, project.
    /// Returns the sampled arm.
    pub fn step(&mut self, rewards: &[f64]) -> Result<usize> {
        self.validate_rewards(rewards)?;
        let probs = self.probs();
        let u = self.arm_stream.uniform_at(self.round);
        let chosen = sample_categorical(&probs, u);
        self.ledger
            .record(&probs, rewards, rewards[chosen], self.space.ranges());

        let logw: Vec<f64> = self
            .logp
            .iter()
            .zip(rewards)
            .zip(self.space.ranges())
            .map(|((&lp, &g), &c)| lp + self.eta * g / c)
            .collect();
        let (logp, _) = project_log(&logw, self.space.ranges(), self.tol)?;
        self.logp = logp;
        self.round += 1;
        Ok(chosen)
    }

    /// Certified deterministic regret bound for the non-negative regime at
    /// accuracy `eps` (learner must have run with `η = eps/3`):
    /// `(2η/(1-η))·G_alg + (1/η)(c_i ln(1/(η π_i)) + c_i)`, with `G_alg` the
    /// ledger's expected gain.
    pub fn regret_bound(&self, arm: usize, eps: f64) -> Result<f64> {
        if self.mode != RewardMode::NonNegative {
            return Err(Error::ConstraintViolation(
                "regret_bound requires NonNegative mode".into(),
            ));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps={eps} outside (0, 1]"
            )));
        }
        if (self.eta - eta_for_eps(eps)).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "learner ran with eta={}, bound needs eta=eps/3={}",
                self.eta,
                eta_for_eps(eps)
            )));
        }
        if arm >= self.space.k() {
            return Err(Error::InvalidArm {
                arm,
                k: self.space.k(),
            });
        }
        let eta = self.eta;
        let c = self.space.range(arm);
        let pi = self.space.prior_or_uniform();
        let g_alg = self.ledger.alg_gain_expected;
        Ok(2.0 * eta / (1.0 - eta) * g_alg + (c * (1.0 / (eta * pi[arm])).ln() + c) / eta)
    }

    /// Symmetric-range counterpart: `η·Σ_t|g_i(t)| + (1/η)·c_i·ln(c_i/(π_i
    /// c_min)) + (1/η)·2c_i`, valid for the symmetric initial distribution.
    pub fn regret_bound_symmetric(&self, arm: usize) -> Result<f64> {
        if self.mode != RewardMode::Symmetric {
            return Err(Error::ConstraintViolation(
                "regret_bound_symmetric requires Symmetric mode".into(),
            ));
        }
        if arm >= self.space.k() {
            return Err(Error::InvalidArm {
                arm,
                k: self.space.k(),
            });
        }
        let eta = self.eta;
        let c = self.space.range(arm);
        let pi = self.space.prior_or_uniform();
        let log_term = (1.0 / pi[arm] * c / self.space.c_min()).ln();
        Ok(eta * self.ledger.abs_gain[arm] + (c * log_term + 2.0 * c) / eta)
    }

    /// Both sides of the ledger inequality for a point-mass benchmark `q`:
    /// `Σ_i q_i G_i - G_alg ≤ η·Σ_t Σ_i p_i g_i²/c_i + (1/η)·Σ_i c_i (q_i
    /// ln(q_i/μ_i) - q_i + μ_i)`. Returns `(lhs, rhs)`.
    pub fn ledger_gap_bound(&self, q_arm: usize) -> Result<(f64, f64)> {
        ledger_gap_point_mass(
            &self.ledger.per_arm_gain,
            self.ledger.alg_gain_expected,
            self.ledger.local_norm_weighted,
            &self.mu,
            self.space.ranges(),
            self.eta,
            q_arm,
        )
    }
}

/// Shared evaluation of the ledger inequality for `q = 1_{q_arm}`.
pub(crate) fn ledger_gap_point_mass(
    per_arm_gain: &[f64],
    alg_gain_expected: f64,
    local_norm_weighted: f64,
    mu: &[f64],
    ranges: &[f64],
    eta: f64,
    q_arm: usize,
) -> Result<(f64, f64)> {
    let k = ranges.len();
    if q_arm >= k {
        return Err(Error::InvalidArm { arm: q_arm, k });
    }
    let lhs = per_arm_gain[q_arm] - alg_gain_expected;
    let mut divergence = ranges[q_arm] * ((1.0 / mu[q_arm]).ln() - 1.0 + mu[q_arm]);
    for j in 0..k {
        if j != q_arm {
            divergence += ranges[j] * mu[j];
        }
    }
    let rhs = eta * local_norm_weighted + divergence / eta;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_space(ranges: &[f64]) -> ActionSpace {
        ActionSpace::new(ranges.to_vec()).unwrap()
    }

    #[test]
    fn init_nonnegative_frozen_example() {
        // k=2, c=(1,2), uniform prior, eta=0.5 -> mu = (0.75, 0.25)
        let s = uniform_space(&[1.0, 2.0]);
        let l = MsmwLearner::new(s, 0.5, RewardMode::NonNegative, 0).unwrap();
        assert!((l.initial_distribution()[0] - 0.75).abs() < 1e-15);
        assert!((l.initial_distribution()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn init_symmetric_frozen_example() {
        // k=2, c=(1,2), uniform prior -> mu2 = 0.5 * 1/2 = 0.25, mu1 = 0.75
        let s = uniform_space(&[1.0, 2.0]);
        let l = MsmwLearner::new(s, 0.5, RewardMode::Symmetric, 0).unwrap();
        assert!((l.initial_distribution()[0] - 0.75).abs() < 1e-15);
        assert!((l.initial_distribution()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn init_tie_breaks_to_first_index() {
        // k=3, equal ranges, uniform prior, eta=0.3 -> (0.8, 0.1, 0.1)
        let s = uniform_space(&[1.0, 1.0, 1.0]);
        let l = MsmwLearner::new(s, 0.3, RewardMode::NonNegative, 0).unwrap();
        let mu = l.initial_distribution();
        assert!((mu[0] - 0.8).abs() < 1e-15);
        assert!((mu[1] - 0.1).abs() < 1e-15);
        assert!((mu[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn eta_out_of_range_rejected() {
        let s = uniform_space(&[1.0, 2.0]);
        assert!(MsmwLearner::new(s.clone(), 0.0, RewardMode::NonNegative, 0).is_err());
        assert!(MsmwLearner::new(s, 1.5, RewardMode::NonNegative, 0).is_err());
    }

    #[test]
    fn zero_rewards_leave_distribution_unchanged() {
        let s = uniform_space(&[1.0, 2.0, 4.0]);
        let mut l = MsmwLearner::new(s, 0.5, RewardMode::NonNegative, 3).unwrap();
        let before = l.probs();
        l.step(&[0.0, 0.0, 0.0]).unwrap();
        let after = l.probs();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_ranges_match_hedge_closed_form() {
        let c = 2.0;
        let s = uniform_space(&[c, c]);
        let mut l = MsmwLearner::new(s, 0.4, RewardMode::NonNegative, 1).unwrap();
        let g = [1.5, 0.5];
        l.step(&g).unwrap();
        // Hedge posterior: p_i e^{η g_i/c} / Σ p_j e^{η g_j/c} from mu.
        let mu = [0.8, 0.2];
        let w: Vec<f64> = mu
            .iter()
            .zip(&g)
            .map(|(&m, &gi)| m * (0.4 * gi / c).exp())
            .collect();
        let z: f64 = w.iter().sum();
        let p = l.probs();
        for i in 0..2 {
            assert!((p[i] - w[i] / z).abs() < 1e-12, "arm {i}");
        }
    }

    #[test]
    fn frozen_step_example_two_scales() {
        // c=(1,2), p=(1/2,1/2), eta=1, g=(1,0): w=(e/2, 1/2);
        // λ* and p^{t+1} frozen from an independent high-precision solve.
        let s = ActionSpace::with_prior(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        // eta=1 makes mu = pi = (1/2, 1/2) in NonNegative mode.
        let mut l = MsmwLearner::new(s, 1.0, RewardMode::NonNegative, 0).unwrap();
        assert_eq!(l.initial_distribution(), &[0.5, 0.5]);
        l.step(&[1.0, 0.0]).unwrap();
        let p = l.probs();
        assert!((p[0] - 0.653_337_695_731_243_6).abs() < 1e-11);
        assert!((p[1] - 0.346_662_304_268_756_4).abs() < 1e-11);
    }

    #[test]
    fn out_of_range_reward_names_arm_and_bound() {
        let s = uniform_space(&[1.0, 2.0]);
        let mut l = MsmwLearner::new(s, 0.5, RewardMode::NonNegative, 0).unwrap();
        let err = l.step(&[0.5, -0.1]).unwrap_err();
        match err {
            Error::RewardOutOfRange { arm, lo, hi, .. } => {
                assert_eq!(arm, 1);
                assert_eq!(lo, 0.0);
                assert_eq!(hi, 2.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn regret_bound_frozen_example() {
        // k=2, c=(1,1), uniform, eta=1/3, G_alg=10:
        // bound = 1*10 + 3(ln 6 + 1) = 18.375278407684165
        let s = uniform_space(&[1.0, 1.0]);
        let mut l = MsmwLearner::new(s, 1.0 / 3.0, RewardMode::NonNegative, 0).unwrap();
        // Drive expected gain to exactly 10: reward 1 on both arms, 10 rounds.
        for _ in 0..10 {
            l.step(&[1.0, 1.0]).unwrap();
        }
        assert!((l.ledger().alg_gain_expected - 10.0).abs() < 1e-12);
        let b = l.regret_bound(0, 1.0).unwrap();
        assert!((b - 18.375_278_407_684_165).abs() < 1e-9);
        let b1 = l.regret_bound(1, 1.0).unwrap();
        assert!((b - b1).abs() < 1e-12);
    }

    #[test]
    fn regret_bound_empty_run_dominates_zero_regret() {
        let s = uniform_space(&[1.0, 4.0]);
        let l = MsmwLearner::new(s, 0.1, RewardMode::NonNegative, 0).unwrap();
        for arm in 0..2 {
            let b = l.regret_bound(arm, 0.3).unwrap();
            assert!(b > 0.0);
            assert!(l.ledger().regret(arm) <= b);
        }
    }

    #[test]
    fn regret_bound_rejects_mode_and_param_mismatch() {
        let s = uniform_space(&[1.0, 2.0]);
        let l = MsmwLearner::new(s.clone(), 0.1, RewardMode::Symmetric, 0).unwrap();
        assert!(l.regret_bound(0, 0.3).is_err());
        let l = MsmwLearner::new(s, 0.2, RewardMode::NonNegative, 0).unwrap();
        assert!(l.regret_bound(0, 0.3).is_err()); // eta != eps/3
    }

    #[test]
    fn distribution_stays_on_simplex() {
        let s = uniform_space(&[1.0, 8.0, 64.0]);
        let mut l = MsmwLearner::new(s, 0.25, RewardMode::Symmetric, 9).unwrap();
        let stream = SeededStream::new(77, 1);
        for t in 0..500u64 {
            let mut rng = stream.at_round(t);
            let g: Vec<f64> = [1.0, 8.0, 64.0]
                .iter()
                .map(|&c| {
                    use rand::Rng;
                    c * (2.0 * rng.gen::<f64>() - 1.0)
                })
                .collect();
            l.step(&g).unwrap();
            assert!(l.distribution().is_ok());
        }
    }
}
