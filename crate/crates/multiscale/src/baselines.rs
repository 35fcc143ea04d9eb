//! Reference learners: plain exponential weights (Hedge) and EXP3.
//!
//! Both normalize rewards by the single global range `c_max`, which is
//! exactly what makes their regret scale with `c_max` instead of the played
//! arm's own range. They share the seeding/sampling conventions of the
//! multi-scale learners so head-to-head runs see identical environments.

use crate::ledger::RegretLedger;
use crate::math::logsumexp;
use crate::rng::{sample_categorical, SeededStream, STREAM_ARM};
use crate::{Error, Result};

/// Exponential weights over `[0, c_max]`-normalized rewards, exact
/// normalization each round.
#[derive(Debug, Clone)]
pub struct HedgeLearner {
    c_max: f64,
    eta: f64,
    logp: Vec<f64>,
    ledger: RegretLedger,
    round: u64,
    arm_stream: SeededStream,
}

/// Textbook rate `η = sqrt(ln k / T)` for c_max-normalized rewards.
pub fn hedge_eta_for_horizon(k: usize, t: usize) -> f64 {
    ((k as f64).ln() / t as f64).sqrt()
}

impl HedgeLearner {
    pub fn new(k: usize, c_max: f64, eta: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyActionSpace);
        }
        if !(c_max > 0.0) {
            return Err(Error::NonPositiveRange {
                arm: 0,
                value: c_max,
            });
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidEta {
                eta,
                bound: "(0, inf)",
            });
        }
        Ok(Self {
            c_max,
            eta,
            logp: vec![(1.0 / k as f64).ln(); k],
            ledger: RegretLedger::new(k),
            round: 0,
            arm_stream: SeededStream::new(seed, STREAM_ARM),
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.logp.iter().map(|&l| l.exp()).collect()
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// One full-information round; returns the sampled arm.
    pub fn step(&mut self, rewards: &[f64]) -> Result<usize> {
        if rewards.len() != self.logp.len() {
            return Err(Error::DimensionMismatch {
                expected: self.logp.len(),
                got: rewards.len(),
            });
        }
        for (arm, &g) in rewards.iter().enumerate() {
            if !g.is_finite() || g.abs() > self.c_max {
                return Err(Error::RewardOutOfRange {
                    arm,
                    value: g,
                    lo: -self.c_max,
                    hi: self.c_max,
                });
            }
        }
        let probs = self.probs();
        let u = self.arm_stream.uniform_at(self.round);
        let chosen = sample_categorical(&probs, u);
        let ranges = vec![self.c_max; rewards.len()];
        self.ledger.record(&probs, rewards, rewards[chosen], &ranges);

        for (lp, &g) in self.logp.iter_mut().zip(rewards) {
            *lp += self.eta * g / self.c_max;
        }
        let z = logsumexp(&self.logp);
        for lp in &mut self.logp {
            *lp -= z;
        }
        self.round += 1;
        Ok(chosen)
    }
}

/// EXP3 with uniform exploration mixing on `[0, c_max]`-normalized rewards.
#[derive(Debug, Clone)]
pub struct Exp3Learner {
    c_max: f64,
    eta: f64,
    gamma: f64,
    logp: Vec<f64>,
    round: u64,
    arm_stream: SeededStream,
    realized_gain: f64,
    min_mixed_prob: f64,
}

/// Textbook rates: `γ = min(1, sqrt(k ln k / ((e-1) T)))`, `η = γ/k`.
pub fn exp3_params_for_horizon(k: usize, t: usize) -> (f64, f64) {
    let kf = k as f64;
    let gamma = (kf * kf.ln() / ((std::f64::consts::E - 1.0) * t as f64))
        .sqrt()
        .min(1.0);
    (gamma, gamma / kf)
}

impl Exp3Learner {
    pub fn new(k: usize, c_max: f64, gamma: f64, eta: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyActionSpace);
        }
        if !(c_max > 0.0) {
            return Err(Error::NonPositiveRange {
                arm: 0,
                value: c_max,
            });
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::ConstraintViolation(format!(
                "requires 0 < gamma <= 1, got gamma={gamma}"
            )));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidEta {
                eta,
                bound: "(0, inf)",
            });
        }
        Ok(Self {
            c_max,
            eta,
            gamma,
            logp: vec![(1.0 / k as f64).ln(); k],
            round: 0,
            arm_stream: SeededStream::new(seed, STREAM_ARM),
            realized_gain: 0.0,
            min_mixed_prob: f64::INFINITY,
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.logp.iter().map(|&l| l.exp()).collect()
    }

    pub fn mixed_probs(&self) -> Vec<f64> {
        let k = self.logp.len() as f64;
        let floor = self.gamma / k;
        self.probs()
            .iter()
            .map(|&p| (1.0 - self.gamma) * p + floor)
            .collect()
    }

    pub fn realized_gain(&self) -> f64 {
        self.realized_gain
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn min_mixed_prob(&self) -> f64 {
        self.min_mixed_prob
    }

    pub fn choose(&self) -> (usize, Vec<f64>) {
        let mixed = self.mixed_probs();
        let u = self.arm_stream.uniform_at(self.round);
        (sample_categorical(&mixed, u), mixed)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        let k = self.logp.len();
        if arm >= k {
            return Err(Error::InvalidArm { arm, k });
        }
        if !reward.is_finite() || reward.abs() > self.c_max {
            return Err(Error::RewardOutOfRange {
                arm,
                value: reward,
                lo: -self.c_max,
                hi: self.c_max,
            });
        }
        let mixed = self.mixed_probs();
        for &q in &mixed {
            self.min_mixed_prob = self.min_mixed_prob.min(q);
        }
        let est = reward / self.c_max / mixed[arm];
        self.realized_gain += reward;
        self.logp[arm] += self.eta * est;
        let z = logsumexp(&self.logp);
        for lp in &mut self.logp {
            *lp -= z;
        }
        self.round += 1;
        Ok(())
    }
}
