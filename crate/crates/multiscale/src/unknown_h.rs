//! Single-buyer auction without a known value bound: the price ladder grows
//! as higher values arrive.
//!
//! Conceptually the learner runs over the countable ladder `(1+ε)^j, j ≥ 0`
//! with prior `π_j = ε(ε+2)(1+ε)^{-2(j+1)}` (so `π_j ∝ 1/p_j²`). A price that
//! has never been undercut by a value has collected only zero rewards, so its
//! weight after `t` rounds has the closed form `μ_j · exp(-Λ_t/p_j)` with
//! `Λ_t = Σ_s λ*_s`. The implementation therefore instantiates exactly the
//! prefix of prices at most the highest value seen ("relevant prices") and
//! carries the rest as an analytic tail: geometric mass with a per-price
//! exponential damping bounded between `exp(-x/p_J)` and 1, tightened by
//! expanding explicit terms until the remainder's uncertainty is below
//! `TAIL_TOL`. The run is then equivalent to the countable algorithm up to
//! that tolerance.

use crate::experts::eta_for_eps;
use crate::ledger::{RegretLedger, SeriesPoint, SeriesRecorder};
use crate::pricing::{price_reward, BoundCheck};
use crate::rng::{SeededStream, STREAM_ARM};
use crate::{Error, Result};

/// Absolute uncertainty allowed in any tail evaluation.
pub const TAIL_TOL: f64 = 1e-12;

/// Residual tolerance for the per-round λ* solve.
const LAMBDA_TOL: f64 = 1e-13;

/// Prior mass of ladder index `j`: `ε(ε+2)(1+ε)^{-2(j+1)}`.
pub fn prior_pi(eps: f64, j: u32) -> f64 {
    eps * (eps + 2.0) * (1.0 + eps).powi(-2 * (j as i32 + 1))
}

/// Closed-form prior mass of the tail `Σ_{j≥J} π_j = (1+ε)^{-2J}`.
pub fn prior_tail_mass(eps: f64, j_from: u32) -> f64 {
    (1.0 + eps).powi(-2 * j_from as i32)
}

/// Growing-ladder auction state.
#[derive(Debug, Clone)]
pub struct UnknownHAuction {
    eps: f64,
    eta: f64,
    /// Log-probabilities of the instantiated prefix `j = 0..active.len()`.
    active: Vec<f64>,
    prices: Vec<f64>,
    /// Σ of all projection shifts so far.
    cum_lambda: f64,
    /// Σ of per-round log-normalizers (each within the solve residual of 0);
    /// folding them in keeps total mass exactly one.
    log_z_cum: f64,
    highest_seen: f64,
    round: u64,
    arm_stream: SeededStream,
    ledger: RegretLedger,
    sold_rounds: u64,
}

impl UnknownHAuction {
    pub fn new(eps: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps={eps} outside (0, 1]"
            )));
        }
        let eta = eta_for_eps(eps);
        // mu_0 = (1-eta) + eta*pi_0; price 1 is the minimum-range arm.
        let mu0 = (1.0 - eta) + eta * prior_pi(eps, 0);
        Ok(Self {
            eps,
            eta,
            active: vec![mu0.ln()],
            prices: vec![1.0],
            cum_lambda: 0.0,
            log_z_cum: 0.0,
            highest_seen: 1.0,
            round: 0,
            arm_stream: SeededStream::new(seed, STREAM_ARM),
            ledger: RegretLedger::new(1),
            sold_rounds: 0,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn active_prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn cum_lambda(&self) -> f64 {
        self.cum_lambda
    }

    pub fn highest_seen(&self) -> f64 {
        self.highest_seen
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    pub fn sold_rounds(&self) -> u64 {
        self.sold_rounds
    }

    /// Initial countable-ladder distribution mass of index `j`.
    fn mu(&self, j: u32) -> f64 {
        let pi = prior_pi(self.eps, j);
        if j == 0 {
            (1.0 - self.eta) + self.eta * pi
        } else {
            self.eta * pi
        }
    }

    /// Current weight of an uninstantiated ladder index.
    fn tail_weight(&self, j: u32) -> f64 {
        let p = (1.0 + self.eps).powi(j as i32);
        self.mu(j) * (-self.cum_lambda / p - self.log_z_cum).exp()
    }

    /// `Σ_{j≥J} μ_j e^{-x/p_j}` with uncertainty below `TAIL_TOL`: explicit
    /// terms plus a bracketed geometric remainder.
    fn tail_sum(&self, x: f64, j_from: u32) -> f64 {
        debug_assert!(j_from >= 1);
        let mut total = 0.0;
        let mut j = j_from;
        loop {
            let mass = self.eta * prior_tail_mass(self.eps, j); // Σ_{i>=j} mu_i
            let p = (1.0 + self.eps).powi(j as i32);
            let lo = mass * (-x / p).exp();
            if mass - lo <= TAIL_TOL || mass <= TAIL_TOL {
                // Midpoint of [lo, mass]; half-width below TAIL_TOL.
                total += 0.5 * (lo + mass);
                return total;
            }
            total += self.mu(j) * (-x / p).exp();
            j += 1;
        }
    }

    /// Total probability mass currently represented: instantiated prefix plus
    /// the analytic tail. Equals one up to solve/tail tolerances.
    pub fn total_mass(&self) -> f64 {
        let inst: f64 = self.active.iter().map(|&l| l.exp()).sum();
        inst + (-self.log_z_cum).exp() * self.tail_sum(self.cum_lambda, self.active.len() as u32)
    }

    /// Probability of ladder index `j` under the current distribution,
    /// instantiated or not.
    pub fn prob_of_index(&self, j: u32) -> f64 {
        if (j as usize) < self.active.len() {
            self.active[j as usize].exp()
        } else {
            self.tail_weight(j)
        }
    }

    /// Instantiate every ladder price at most `v`.
    fn grow_to(&mut self, v: f64) {
        while {
            let next = (1.0 + self.eps).powi(self.active.len() as i32);
            next <= v
        } {
            let j = self.active.len() as u32;
            let p = (1.0 + self.eps).powi(j as i32);
            let logw = self.mu(j).ln() - self.cum_lambda / p - self.log_z_cum;
            self.active.push(logw);
            self.prices.push(p);
            self.ledger.per_arm_gain.push(0.0);
            self.ledger.abs_gain.push(0.0);
        }
    }

    /// Play probabilities: the countable distribution conditioned on the
    /// instantiated ("relevant") prices. Restricting play to the relevant set
    /// only shifts mass onto prices that can sell, so each relevant price is
    /// played with weakly higher probability than in the countable system.
    pub fn play_probs(&self) -> Vec<f64> {
        let probs: Vec<f64> = self.active.iter().map(|&l| l.exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter().map(|&p| p / total).collect()
    }

    /// Sample the round's posted price from [`play_probs`](Self::play_probs).
    fn sample_price(&self, play: &[f64]) -> f64 {
        let u = self.arm_stream.uniform_at(self.round);
        self.prices[crate::rng::sample_categorical(play, u)]
    }

    /// One round against value `v ≥ 1`. Returns the posted price.
    pub fn step(&mut self, v: f64) -> Result<f64> {
        if !v.is_finite() || v < 1.0 {
            return Err(Error::ValueOutOfRange {
                round: self.round as usize,
                value: v,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        let play = self.play_probs();
        let posted = self.sample_price(&play);
        let realized = price_reward(posted, v);
        if realized > 0.0 {
            self.sold_rounds += 1;
        }
        if v > self.highest_seen {
            self.highest_seen = v;
        }
        self.grow_to(self.highest_seen);

        // Ledger on the instantiated prefix (every selling price is in it),
        // with expected gain under the actual play distribution. Prices
        // instantiated this round were played with probability 0.
        for j in 0..self.active.len() {
            let g = price_reward(self.prices[j], v);
            let p_play = play.get(j).copied().unwrap_or(0.0);
            self.ledger.per_arm_gain[j] += g;
            self.ledger.abs_gain[j] += g;
            self.ledger.alg_gain_expected += p_play * g;
            // g²/c = p·1(v ≥ p), same shape as the expected-gain increment.
            self.ledger.local_norm_weighted += p_play * g * g / self.prices[j];
        }
        self.ledger.alg_gain_realized += realized;
        self.ledger.rounds += 1;

        // Multiplicative update: normalized reward is the sale indicator.
        let logw: Vec<f64> = self
            .active
            .iter()
            .zip(&self.prices)
            .map(|(&l, &p)| l + self.eta * if v >= p { 1.0 } else { 0.0 })
            .collect();

        // Root of S(λ) = Σ_inst w e^{-λ/p} + e^{-logZ}·Tail(Λ+λ) - 1 on λ ≥ 0.
        let j_tail = self.active.len() as u32;
        let s = |lambda: f64| -> f64 {
            let inst: f64 = logw
                .iter()
                .zip(&self.prices)
                .map(|(&l, &p)| (l - lambda / p).exp())
                .sum();
            inst + (-self.log_z_cum).exp() * self.tail_sum(self.cum_lambda + lambda, j_tail) - 1.0
        };
        let mut lo = 0.0;
        let mut hi = self.eta * self.highest_seen.max(1.0);
        let mut guard = 0;
        while s(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::SolverFailure("ladder bracket expansion".into()));
            }
        }
        let mut lambda = 0.5 * (lo + hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let val = s(mid);
            lambda = mid;
            if val.abs() <= LAMBDA_TOL {
                break;
            }
            if val > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = 1.0 + s(lambda); // total mass at λ*; ≈ 1 within tolerance
        let log_z = z.ln();
        for (j, l) in self.active.iter_mut().enumerate() {
            *l = logw[j] - lambda / self.prices[j] - log_z;
        }
        self.cum_lambda += lambda;
        self.log_z_cum += log_z;
        self.round += 1;
        Ok(posted)
    }
}

/// Outcome of an unknown-h run.
#[derive(Debug, Clone)]
pub struct UnknownHRun {
    pub ledger: RegretLedger,
    pub series: Vec<SeriesPoint>,
    pub active_prices: Vec<f64>,
    pub sold_rounds: u64,
    pub checks: Vec<BoundCheck>,
}

/// Run the growing-ladder auction over a trace of values ≥ 1.
pub fn run_single_buyer_unknown_h(trace: &[f64], eps: f64, seed: u64) -> Result<UnknownHRun> {
    let mut auction = UnknownHAuction::new(eps, seed)?;
    let mut recorder = SeriesRecorder::new(trace.len());
    for &v in trace {
        auction.step(v)?;
        recorder.observe_sold(&auction.ledger, Some(auction.sold_rounds));
    }
    let mass = auction.total_mass();
    let checks = vec![BoundCheck::leq(
        "|total probability mass - 1| <= 1e-10",
        (mass - 1.0).abs(),
        1e-10,
    )];
    Ok(UnknownHRun {
        ledger: auction.ledger.clone(),
        series: recorder.into_points(),
        active_prices: auction.prices.clone(),
        sold_rounds: auction.sold_rounds,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_is_inverse_square_and_normalized() {
        // eps=1: pi_j = 3·4^{-(j+1)} = 3/4, 3/16, 3/64, ...
        assert!((prior_pi(1.0, 0) - 0.75).abs() < 1e-15);
        assert!((prior_pi(1.0, 1) - 3.0 / 16.0).abs() < 1e-15);
        assert!((prior_pi(1.0, 2) - 3.0 / 64.0).abs() < 1e-15);
        for eps in [0.5, 1.0] {
            let partial: f64 = (0..200).map(|j| prior_pi(eps, j)).sum();
            // analytic: Σ_{j<J} = 1 - (1+eps)^{-2J}
            assert!((partial + prior_tail_mass(eps, 200) - 1.0).abs() < 1e-12);
            assert!((partial - (1.0 - prior_tail_mass(eps, 200))).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_all_ones_trace() {
        let trace = vec![1.0; 50];
        let run = run_single_buyer_unknown_h(&trace, 1.0, 0).unwrap();
        assert_eq!(run.active_prices, vec![1.0]);
        assert_eq!(run.ledger.alg_gain_realized, 50.0);
        assert_eq!(run.sold_rounds, 50);
        assert!(run.checks[0].pass);
    }

    #[test]
    fn ladder_grows_to_highest_value() {
        let trace = vec![1.0, 5.0, 2.0, 11.5];
        let run = run_single_buyer_unknown_h(&trace, 1.0, 0).unwrap();
        assert_eq!(run.active_prices, vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn mass_is_conserved_every_round() {
        let mut auction = UnknownHAuction::new(0.5, 3).unwrap();
        let values = [1.0, 3.0, 2.0, 9.0, 1.5, 9.0, 4.0, 1.0, 16.0, 2.0];
        for (i, &v) in values.iter().cycle().take(200).enumerate() {
            auction.step(v).unwrap();
            let mass = auction.total_mass();
            assert!(
                (mass - 1.0).abs() < 1e-10,
                "round {i}: mass deviates by {}",
                (mass - 1.0).abs()
            );
        }
    }

    #[test]
    fn rejects_values_below_one() {
        let mut auction = UnknownHAuction::new(1.0, 0).unwrap();
        assert!(auction.step(0.99).is_err());
    }
}
