//! Cumulative run diagnostics shared by all learners.

use serde::{Deserialize, Serialize};

/// Running totals from which every regret quantity is reconstructible:
/// per-arm cumulative gains `G_i`, the algorithm's expected and realized
/// gains, per-arm cumulative absolute gains (the symmetric-range bound term),
/// and the weighted local-norm sum `Σ_t Σ_i p_i(t) g_i(t)² / c_i` that the
/// ledger inequality is stated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub per_arm_gain: Vec<f64>,
    pub abs_gain: Vec<f64>,
    pub alg_gain_expected: f64,
    pub alg_gain_realized: f64,
    pub local_norm_weighted: f64,
    pub rounds: u64,
}

impl RegretLedger {
    pub fn new(k: usize) -> Self {
        Self {
            per_arm_gain: vec![0.0; k],
            abs_gain: vec![0.0; k],
            alg_gain_expected: 0.0,
            alg_gain_realized: 0.0,
            local_norm_weighted: 0.0,
            rounds: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.per_arm_gain.len()
    }

    /// Record one full-information round: the played distribution, the
    /// reward vector, the realized reward, and the arm ranges.
    pub fn record(&mut self, probs: &[f64], rewards: &[f64], realized: f64, ranges: &[f64]) {
        for (i, &g) in rewards.iter().enumerate() {
            self.per_arm_gain[i] += g;
            self.abs_gain[i] += g.abs();
            self.alg_gain_expected += probs[i] * g;
            self.local_norm_weighted += probs[i] * g * g / ranges[i];
        }
        self.alg_gain_realized += realized;
        self.rounds += 1;
    }

    /// Regret against arm `i`, measured on expected gain.
    pub fn regret(&self, arm: usize) -> f64 {
        self.per_arm_gain[arm] - self.alg_gain_expected
    }

    /// Regret against arm `i`, measured on realized gain.
    pub fn realized_regret(&self, arm: usize) -> f64 {
        self.per_arm_gain[arm] - self.alg_gain_realized
    }

    /// Arm with the highest cumulative gain; ties broken by lowest index.
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (i, &g) in self.per_arm_gain.iter().enumerate() {
            if g > self.per_arm_gain[best] {
                best = i;
            }
        }
        best
    }

    /// Cumulative gain of the best fixed arm in hindsight.
    pub fn g_max(&self) -> f64 {
        self.per_arm_gain[self.best_arm()]
    }
}

/// One point of a downsampled cumulative series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub round: u64,
    pub alg_gain_expected: f64,
    pub alg_gain_realized: f64,
    /// Running best fixed arm's cumulative gain.
    pub best_fixed_gain: f64,
    /// Fraction of rounds sold so far; None outside pricing problems.
    pub market_share: Option<f64>,
}

/// Downsampling recorder: keeps ~256 evenly spaced points plus the last.
#[derive(Debug, Clone)]
pub struct SeriesRecorder {
    every: u64,
    t: u64,
    points: Vec<SeriesPoint>,
}

impl SeriesRecorder {
    pub fn new(t: usize) -> Self {
        Self {
            every: (t as u64 / 256).max(1),
            t: t as u64,
            points: Vec::new(),
        }
    }

    /// The downsampling grid this recorder samples on.
    pub fn rounds(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.round).collect()
    }

    /// Call after each `record`; samples on the downsampling grid.
    pub fn observe(&mut self, ledger: &RegretLedger) {
        self.observe_sold(ledger, None);
    }

    /// As [`observe`](Self::observe), with a cumulative sold-round count for
    /// the market-share series.
    pub fn observe_sold(&mut self, ledger: &RegretLedger, sold_rounds: Option<u64>) {
        if ledger.rounds.is_multiple_of(self.every) || ledger.rounds == self.t {
            self.points.push(SeriesPoint {
                round: ledger.rounds,
                alg_gain_expected: ledger.alg_gain_expected,
                alg_gain_realized: ledger.alg_gain_realized,
                best_fixed_gain: ledger.g_max(),
                market_share: sold_rounds.map(|s| s as f64 / ledger.rounds.max(1) as f64),
            });
        }
    }

    pub fn into_points(self) -> Vec<SeriesPoint> {
        self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regret_is_reconstructible_any_round() {
        let mut l = RegretLedger::new(2);
        let ranges = [1.0, 2.0];
        l.record(&[0.5, 0.5], &[1.0, 0.0], 1.0, &ranges);
        assert_eq!(l.regret(0), 1.0 - 0.5);
        assert_eq!(l.regret(1), 0.0 - 0.5);
        l.record(&[0.25, 0.75], &[0.0, 2.0], 2.0, &ranges);
        assert_eq!(l.per_arm_gain, vec![1.0, 2.0]);
        assert_eq!(l.alg_gain_expected, 0.5 + 1.5);
        assert_eq!(l.alg_gain_realized, 3.0);
        assert_eq!(l.regret(1), 2.0 - 2.0);
        assert_eq!(l.best_arm(), 1);
        assert_eq!(l.rounds, 2);
        // local norm: 0.5*1/1 + 0.75*4/2
        assert!((l.local_norm_weighted - (0.5 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn best_arm_ties_break_low() {
        let mut l = RegretLedger::new(3);
        l.record(&[1.0, 0.0, 0.0], &[2.0, 2.0, 1.0], 2.0, &[1.0, 1.0, 1.0]);
        assert_eq!(l.best_arm(), 0);
    }
}
