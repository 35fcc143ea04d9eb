//! Environments: i.i.d. reward/value sources, fixed traces, and the two
//! executable lower-bound constructions (an adaptive full-information
//! adversary and a pair of stochastic bandit instances).

use crate::math::bernoulli_kl;
use crate::rng::SeededStream;
use crate::{Error, Result};
use rand::Rng;

/// Per-arm i.i.d. reward law, scaled by the arm's range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmDist {
    /// Value `c` with probability `p`, else 0.
    Bernoulli { p: f64 },
    /// Uniform on `[0, c]`.
    Uniform,
}

impl ArmDist {
    pub fn sample(&self, c: f64, u: f64) -> f64 {
        match self {
            ArmDist::Bernoulli { p } => {
                if u < *p {
                    c
                } else {
                    0.0
                }
            }
            ArmDist::Uniform => u * c,
        }
    }

    pub fn mean(&self, c: f64) -> f64 {
        match self {
            ArmDist::Bernoulli { p } => p * c,
            ArmDist::Uniform => 0.5 * c,
        }
    }
}

/// I.i.d. reward vectors for expert/bandit experiments.
#[derive(Debug, Clone)]
pub struct IidRewards {
    ranges: Vec<f64>,
    dists: Vec<ArmDist>,
    stream: SeededStream,
}

impl IidRewards {
    pub fn new(ranges: Vec<f64>, dists: Vec<ArmDist>, stream: SeededStream) -> Result<Self> {
        if ranges.len() != dists.len() {
            return Err(Error::DimensionMismatch {
                expected: ranges.len(),
                got: dists.len(),
            });
        }
        for (i, d) in dists.iter().enumerate() {
            if let ArmDist::Bernoulli { p } = d {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!(
                        "arm {i}: Bernoulli p={p} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self {
            ranges,
            dists,
            stream,
        })
    }

    pub fn rewards_at(&self, t: u64) -> Vec<f64> {
        let mut rng = self.stream.at_round(t);
        self.dists
            .iter()
            .zip(&self.ranges)
            .map(|(d, &c)| d.sample(c, rng.gen::<f64>()))
            .collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.dists
            .iter()
            .zip(&self.ranges)
            .map(|(d, &c)| d.mean(c))
            .collect()
    }
}

/// I.i.d. buyer-value laws on `[1, h]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueDist {
    PointMass { v: f64 },
    /// `lo` with probability `1 - p_hi`, `hi` with probability `p_hi`.
    TwoPoint { lo: f64, hi: f64, p_hi: f64 },
    /// Supported on the price ladder with `P(v ≥ p) = 1/p`, which gives every
    /// ladder price the same expected revenue of 1 per round.
    EqualRevenue { eps: f64, h: f64 },
}

impl ValueDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            ValueDist::PointMass { v } => {
                if !(*v >= 1.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("point mass v={v} < 1")));
                }
            }
            ValueDist::TwoPoint { lo, hi, p_hi } => {
                if !(*lo >= 1.0 && hi >= lo) || !(0.0..=1.0).contains(p_hi) {
                    return Err(Error::InvalidParameter(format!(
                        "two-point lo={lo} hi={hi} p_hi={p_hi}"
                    )));
                }
            }
            ValueDist::EqualRevenue { eps, h } => {
                if !(*eps > 0.0 && *eps <= 1.0 && *h >= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "equal-revenue eps={eps} h={h}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, u: f64) -> f64 {
        match self {
            ValueDist::PointMass { v } => *v,
            ValueDist::TwoPoint { lo, hi, p_hi } => {
                if u < *p_hi {
                    *hi
                } else {
                    *lo
                }
            }
            ValueDist::EqualRevenue { eps, h } => {
                // P(v = p_j) = 1/p_j - 1/p_{j+1}, top point carries its own
                // survival mass.
                let mut j = 0u32;
                let mut acc = 0.0;
                loop {
                    let p = (1.0 + eps).powi(j as i32);
                    let next = (1.0 + eps).powi(j as i32 + 1);
                    if next > *h {
                        return p;
                    }
                    acc += 1.0 / p - 1.0 / next;
                    if u < acc {
                        return p;
                    }
                    j += 1;
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            ValueDist::PointMass { v } => *v,
            ValueDist::TwoPoint { hi, .. } => *hi,
            ValueDist::EqualRevenue { eps, h } => {
                let j = (h.ln() / (1.0 + eps).ln() + 1e-9).floor();
                (1.0 + eps).powf(j)
            }
        }
    }
}

/// The zoom stress distribution: values concentrated just above 2 while the
/// declared bound `h` is far larger, so the best fixed price is tiny relative
/// to the range a standard learner must budget for.
pub fn zoom_stress_dist() -> ValueDist {
    ValueDist::TwoPoint {
        lo: 2.0,
        hi: 2.8,
        p_hi: 0.15,
    }
}

/// Value sources for pricing problems.
#[derive(Debug, Clone)]
pub enum ValueSource {
    Iid {
        dist: ValueDist,
        stream: SeededStream,
    },
    Fixed {
        values: Vec<f64>,
    },
}

/// Build a pricing environment from a distribution spec (validated) or a
/// fixed trace. I.i.d. sources draw from the environment stream keyed by
/// `seed`, so the same seed yields the same trace for every learner.
pub fn make_pricing_environment(kind: PricingEnvKind, seed: u64) -> Result<ValueSource> {
    match kind {
        PricingEnvKind::Iid(dist) => {
            dist.validate()?;
            Ok(ValueSource::Iid {
                dist,
                stream: SeededStream::new(seed, crate::rng::STREAM_ENV),
            })
        }
        PricingEnvKind::Fixed(values) => {
            if let Some((round, &v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 1.0)
            {
                return Err(Error::ValueOutOfRange {
                    round,
                    value: v,
                    lo: 1.0,
                    hi: f64::INFINITY,
                });
            }
            Ok(ValueSource::Fixed { values })
        }
        PricingEnvKind::ZoomStress => Ok(ValueSource::Iid {
            dist: zoom_stress_dist(),
            stream: SeededStream::new(seed, crate::rng::STREAM_ENV),
        }),
    }
}

/// Environment kinds accepted by [`make_pricing_environment`].
#[derive(Debug, Clone)]
pub enum PricingEnvKind {
    Iid(ValueDist),
    Fixed(Vec<f64>),
    /// Values concentrated near 2 regardless of the declared bound.
    ZoomStress,
}

impl ValueSource {
    pub fn value_at(&self, t: u64) -> f64 {
        match self {
            ValueSource::Iid { dist, stream } => dist.sample(stream.uniform_at(t)),
            ValueSource::Fixed { values } => values[t as usize % values.len().max(1)],
        }
    }

    pub fn trace(&self, t: usize) -> Vec<f64> {
        (0..t as u64).map(|r| self.value_at(r)).collect()
    }
}

/// Adaptive two-expert construction with ranges `(1, h)`.
///
/// Arm 1 always gains 0. Arm 2 gains `+h` while the learner's arm-2
/// probability stays at or below the round threshold `2^t/√h`; on the first
/// round it exceeds the threshold, arm 2 gains `-h` that round and forever
/// after.
#[derive(Debug, Clone)]
pub struct ExpertLbInstance {
    h: f64,
    horizon: usize,
    triggered: Option<usize>,
}

impl ExpertLbInstance {
    /// Horizon is `⌊log2(h)/2⌋ - 1`; needs `h ≥ 16` to get at least one round.
    pub fn new(h: f64) -> Result<Self> {
        if !(h >= 16.0) {
            return Err(Error::InvalidParameter(format!(
                "h={h} too small: horizon needs h >= 16"
            )));
        }
        let horizon = (0.5 * h.log2()).floor() as usize - 1;
        Ok(Self {
            h,
            horizon,
            triggered: None,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Round `t` (1-based) trigger threshold on the learner's arm-2 mass.
    pub fn threshold(&self, t: usize) -> f64 {
        2f64.powi(t as i32) / self.h.sqrt()
    }

    /// First round whose threshold was exceeded, if any.
    pub fn triggered_at(&self) -> Option<usize> {
        self.triggered
    }

    /// Reward vector for 1-based round `t`, given the learner's current arm-2
    /// probability.
    pub fn step(&mut self, algo_prob_arm2: f64, t: usize) -> Result<[f64; 2]> {
        if t == 0 || t > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "round {t} outside 1..={}",
                self.horizon
            )));
        }
        if !(0.0..=1.0).contains(&algo_prob_arm2) {
            return Err(Error::InvalidParameter(format!(
                "arm-2 probability {algo_prob_arm2} outside [0, 1]"
            )));
        }
        if self.triggered.is_none() && algo_prob_arm2 > self.threshold(t) {
            self.triggered = Some(t);
        }
        let arm2 = if self.triggered.is_some() {
            -self.h
        } else {
            self.h
        };
        Ok([0.0, arm2])
    }

    /// The disjunction thresholds of the construction: regret against arm 1
    /// must exceed `T/2 + √h`, or against arm 2 must exceed
    /// `Th/2 + (h log2 h)/5`.
    pub fn dichotomy_thresholds(&self) -> (f64, f64) {
        let t = self.horizon as f64;
        (
            0.5 * t + self.h.sqrt(),
            0.5 * t * self.h + self.h * self.h.log2() / 5.0,
        )
    }
}

/// Stochastic two-arm bandit construction with ranges `(1, h)`.
///
/// Arm 1 pays 0. Arm 2 pays `±h`: instance 1 biases it to lose `4εh` per
/// round in expectation, instance 2 to win the same.
#[derive(Debug, Clone, Copy)]
pub struct BanditLbInstance {
    h: f64,
    horizon: usize,
    eps: f64,
    instance_id: u8,
}

impl BanditLbInstance {
    pub fn new(h: f64, horizon: usize, instance_id: u8) -> Result<Self> {
        if instance_id != 1 && instance_id != 2 {
            return Err(Error::InvalidParameter(format!(
                "instance id {instance_id} not in {{1, 2}}"
            )));
        }
        let eps = (h / (256.0 * horizon as f64)).sqrt();
        if !(eps > 0.0 && eps < 0.1) {
            return Err(Error::InvalidParameter(format!(
                "eps={eps} outside (0, 0.1): KL step needs a longer horizon"
            )));
        }
        Ok(Self {
            h,
            horizon,
            eps,
            instance_id,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn instance_id(&self) -> u8 {
        self.instance_id
    }

    /// Probability that arm 2 pays `+h` this round.
    pub fn p_plus(&self) -> f64 {
        match self.instance_id {
            1 => 0.5 - 2.0 * self.eps,
            _ => 0.5 + 2.0 * self.eps,
        }
    }

    pub fn sample(&self, t: u64, env: &SeededStream) -> [f64; 2] {
        let u = env.uniform_at(t);
        let arm2 = if u < self.p_plus() { self.h } else { -self.h };
        [0.0, arm2]
    }

    /// Expected arm-2 gain per round: `-4εh` (instance 1) or `+4εh`.
    pub fn expected_arm2_gain(&self) -> f64 {
        match self.instance_id {
            1 => -4.0 * self.eps * self.h,
            _ => 4.0 * self.eps * self.h,
        }
    }

    /// The disjunction thresholds: regret against arm 1 in instance 1 must
    /// exceed `εT + h/(256ε)`, or against arm 2 in instance 2 must exceed
    /// `εTh + h²/(256ε)`.
    pub fn dichotomy_thresholds(&self) -> (f64, f64) {
        let t = self.horizon as f64;
        (
            self.eps * t + self.h / (256.0 * self.eps),
            self.eps * t * self.h + self.h * self.h / (256.0 * self.eps),
        )
    }
}

/// Per-round KL divergence between the two instances' observation laws when
/// arm 2 is played: exact Bernoulli KL, guaranteed at most `64ε²` on
/// `ε ∈ (0, 0.1)`. Playing arm 1 reveals nothing (KL 0).
pub fn kl_per_round(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::InvalidParameter(format!(
            "eps={eps} outside (0, 0.1)"
        )));
    }
    let kl = bernoulli_kl(0.5 - 2.0 * eps, 0.5 + 2.0 * eps);
    if kl > 64.0 * eps * eps {
        return Err(Error::ConstraintViolation(format!(
            "KL {kl} exceeds 64 eps^2 = {}",
            64.0 * eps * eps
        )));
    }
    Ok(kl)
}
