//! Discretized revenue-optimal auction family for the multi-buyer reduction.
//!
//! A mechanism is `n` non-decreasing virtual-value maps over a shared level
//! ladder, characterized entirely by the total ordering of the finite slots
//! plus which slots sit at `-∞`: the item goes to the bidder whose floored
//! value carries the highest-ranked finite slot, and the winner pays the
//! lowest level that would still win. Values are floored to the nearest level
//! from below before anything else.

use crate::experts::{eta_for_eps, MsmwLearner, RewardMode};
use crate::ledger::{RegretLedger, SeriesPoint, SeriesRecorder};
use crate::pricing::PriceGrid;
use crate::space::ActionSpace;
use crate::{Error, Result};
use std::collections::HashMap;

/// Hard cap on `n · levels`: the mechanism family grows factorially.
pub const ENUMERATION_CAP: usize = 8;

/// One discretized mechanism: `slot_rank[bidder][level]` is the slot's
/// position in the total order, or `None` for `-∞` (never allocates).
#[derive(Debug, Clone, PartialEq)]
pub struct MyersonMechanism {
    n: usize,
    levels: Vec<f64>,
    slot_rank: Vec<Vec<Option<usize>>>,
    max_payment: f64,
}

impl MyersonMechanism {
    pub fn new(n: usize, levels: Vec<f64>, slot_rank: Vec<Vec<Option<usize>>>) -> Result<Self> {
        if n == 0 || levels.is_empty() {
            return Err(Error::MalformedOrdering("empty bidder or level set".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedOrdering(
                "levels must be strictly increasing".into(),
            ));
        }
        if slot_rank.len() != n || slot_rank.iter().any(|r| r.len() != levels.len()) {
            return Err(Error::MalformedOrdering("slot table shape mismatch".into()));
        }
        // Monotone virtual values: within a bidder, -∞ slots form a prefix and
        // finite ranks strictly increase with the level.
        for (bidder, row) in slot_rank.iter().enumerate() {
            let mut seen_finite = false;
            let mut prev_rank: Option<usize> = None;
            for (level, slot) in row.iter().enumerate() {
                match slot {
                    None => {
                        if seen_finite {
                            return Err(Error::MalformedOrdering(format!(
                                "bidder {bidder}: -inf above a finite slot at level {level}"
                            )));
                        }
                    }
                    Some(rank) => {
                        seen_finite = true;
                        if let Some(prev) = prev_rank {
                            if *rank <= prev {
                                return Err(Error::MalformedOrdering(format!(
                                    "bidder {bidder}: rank not increasing at level {level}"
                                )));
                            }
                        }
                        prev_rank = Some(*rank);
                    }
                }
            }
        }
        let mut mech = Self {
            n,
            levels,
            slot_rank,
            max_payment: 0.0,
        };
        mech.max_payment = mech.max_payment_over_grid();
        Ok(mech)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Largest payment this mechanism ever charges, over the full discrete
    /// profile grid. Zero for the never-sell mechanism.
    pub fn max_payment(&self) -> f64 {
        self.max_payment
    }

    fn floor_level(&self, v: f64) -> Result<usize> {
        if !v.is_finite() || v < self.levels[0] {
            return Err(Error::InvalidParameter(format!(
                "value {v} below lowest level {}",
                self.levels[0]
            )));
        }
        let mut idx = 0;
        for (i, &l) in self.levels.iter().enumerate() {
            if l <= v {
                idx = i;
            } else {
                break;
            }
        }
        Ok(idx)
    }

    /// Allocation and payment on a value profile. Values are floored to
    /// levels; no winner means payment 0.
    pub fn execute(&self, values: &[f64]) -> Result<(Option<usize>, f64)> {
        if values.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: values.len(),
            });
        }
        let mut floored = Vec::with_capacity(self.n);
        for &v in values {
            floored.push(self.floor_level(v)?);
        }
        Ok(self.execute_levels(&floored))
    }

    /// Same as [`execute`](Self::execute) on pre-floored level indices.
    pub fn execute_levels(&self, level_idx: &[usize]) -> (Option<usize>, f64) {
        let mut winner: Option<(usize, usize)> = None; // (rank, bidder)
        for (bidder, &li) in level_idx.iter().enumerate() {
            if let Some(rank) = self.slot_rank[bidder][li] {
                // Strict total order: ranks are distinct, so the comparison
                // never ties; lowest bidder index would win a hypothetical tie.
                if winner.is_none_or(|(r, _)| rank > r) {
                    winner = Some((rank, bidder));
                }
            }
        }
        let Some((_, who)) = winner else {
            return (None, 0.0);
        };
        // Highest-ranked finite slot among the others.
        let best_other = level_idx
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != who)
            .filter_map(|(b, &li)| self.slot_rank[b][li])
            .max();
        // Minimum level keeping `who` the winner.
        for (li, slot) in self.slot_rank[who].iter().enumerate() {
            if let Some(rank) = slot {
                if best_other.is_none_or(|other| *rank > other) {
                    return (Some(who), self.levels[li]);
                }
            }
        }
        unreachable!("winner must win at its own level");
    }

    fn max_payment_over_grid(&self) -> f64 {
        let mut max = 0.0f64;
        for profile in LevelProfiles::new(self.n, self.levels.len()) {
            let (_, pay) = self.execute_levels(&profile);
            max = max.max(pay);
        }
        max
    }

    /// Behavioral fingerprint over the full profile grid, used for dedup.
    fn behavior_key(&self) -> Vec<u64> {
        let mut key = Vec::new();
        for profile in LevelProfiles::new(self.n, self.levels.len()) {
            let (winner, pay) = self.execute_levels(&profile);
            key.push(match winner {
                None => u64::MAX,
                Some(b) => b as u64,
            });
            key.push(pay.to_bits());
        }
        key
    }
}

/// Odometer over all `levels^n` profiles of level indices.
pub struct LevelProfiles {
    n: usize,
    levels: usize,
    state: Option<Vec<usize>>,
}

impl LevelProfiles {
    pub fn new(n: usize, levels: usize) -> Self {
        Self {
            n,
            levels,
            state: Some(vec![0; n]),
        }
    }
}

impl Iterator for LevelProfiles {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let state = self.state.as_mut()?;
        let out = state.clone();
        let mut exhausted = true;
        for i in (0..self.n).rev() {
            state[i] += 1;
            if state[i] < self.levels {
                exhausted = false;
                break;
            }
            state[i] = 0;
        }
        if exhausted {
            self.state = None;
        }
        Some(out)
    }
}

/// All distinct mechanisms over `levels` for `n` bidders: linear extensions
/// of the per-bidder monotonicity chains, each with every `-∞` cut,
/// deduplicated by allocation+payment behavior on the full profile grid.
pub fn enumerate_myerson(n: usize, levels: &[f64]) -> Result<Vec<MyersonMechanism>> {
    let l = levels.len();
    if n * l > ENUMERATION_CAP {
        return Err(Error::InstanceTooLarge(format!(
            "n*levels = {} exceeds cap {ENUMERATION_CAP}",
            n * l
        )));
    }
    if n == 0 || l == 0 {
        return Err(Error::MalformedOrdering("empty bidder or level set".into()));
    }

    // Linear extensions of n chains of length l: repeatedly pick which
    // bidder's next level takes the next rank.
    let mut extensions: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::with_capacity(n * l);
    let mut next_level = vec![0usize; n];
    fn extend(
        n: usize,
        l: usize,
        next_level: &mut Vec<usize>,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if current.len() == n * l {
            out.push(current.clone());
            return;
        }
        for bidder in 0..n {
            if next_level[bidder] < l {
                current.push((bidder, next_level[bidder]));
                next_level[bidder] += 1;
                extend(n, l, next_level, current, out);
                next_level[bidder] -= 1;
                current.pop();
            }
        }
    }
    extend(n, l, &mut next_level, &mut current, &mut extensions);

    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut mechanisms = Vec::new();
    for ext in &extensions {
        for cut in 0..=(n * l) {
            // Slots with rank < cut map to -∞; per-bidder prefixes by
            // construction since ranks increase along each chain.
            let mut slot_rank: Vec<Vec<Option<usize>>> = vec![vec![None; l]; n];
            for (rank, &(bidder, level)) in ext.iter().enumerate() {
                if rank >= cut {
                    slot_rank[bidder][level] = Some(rank);
                }
            }
            let mech = MyersonMechanism::new(n, levels.to_vec(), slot_rank)?;
            let key = mech.behavior_key();
            if seen.insert(key, ()).is_none() {
                mechanisms.push(mech);
            }
        }
    }
    Ok(mechanisms)
}

/// Second-price auction with an anonymous reserve: values below `reserve` map
/// to `-∞`; ties at the reserve resolve to the lowest bidder index (bidder
/// 0's slots outrank bidder 1's, and so on), so the winner pays the reserve.
pub fn anonymous_reserve(n: usize, levels: &[f64], reserve: f64) -> Result<MyersonMechanism> {
    let l = levels.len();
    let j_reserve = levels
        .iter()
        .position(|&lv| lv >= reserve)
        .ok_or_else(|| Error::InvalidParameter(format!("reserve {reserve} above all levels")))?;
    let finite_per_bidder = l - j_reserve;
    let mut slot_rank: Vec<Vec<Option<usize>>> = vec![vec![None; l]; n];
    for (bidder, row) in slot_rank.iter_mut().enumerate() {
        for (offset, slot) in row.iter_mut().skip(j_reserve).enumerate() {
            *slot = Some((n - 1 - bidder) * finite_per_bidder + offset);
        }
    }
    MyersonMechanism::new(n, levels.to_vec(), slot_rank)
}

/// Outcome of a full-information multi-buyer run.
#[derive(Debug, Clone)]
pub struct MultiBuyerRun {
    pub ledger: RegretLedger,
    pub series: Vec<SeriesPoint>,
    /// The learner's arm list: enumerated mechanisms that can charge a
    /// positive payment (zero-range arms cannot affect any benchmark).
    pub mechanisms: Vec<MyersonMechanism>,
}

/// Full-information learning over the enumerated mechanism family with
/// `η = ε/3` and a uniform prior; the reward of a mechanism is the payment it
/// extracts from the round's value profile, with range `c_M` equal to its
/// largest possible payment.
pub fn run_multi_buyer_auction(
    trace: &[Vec<f64>],
    eps: f64,
    h: f64,
    seed: u64,
) -> Result<MultiBuyerRun> {
    let grid = PriceGrid::new(eps, h)?;
    let all = enumerate_myerson(trace.first().map_or(1, Vec::len), grid.prices())?;
    let mechanisms: Vec<MyersonMechanism> =
        all.into_iter().filter(|m| m.max_payment() > 0.0).collect();
    for (round, profile) in trace.iter().enumerate() {
        for &v in profile {
            if !v.is_finite() || v < 1.0 || v > h {
                return Err(Error::ValueOutOfRange {
                    round,
                    value: v,
                    lo: 1.0,
                    hi: h,
                });
            }
        }
    }
    let ranges: Vec<f64> = mechanisms.iter().map(|m| m.max_payment()).collect();
    let space = ActionSpace::new(ranges)?;
    let mut learner = MsmwLearner::new(space, eta_for_eps(eps), RewardMode::NonNegative, seed)?;
    let mut rewards = vec![0.0; mechanisms.len()];
    let mut recorder = SeriesRecorder::new(trace.len());
    let mut sold = 0u64;
    for profile in trace {
        for (i, mech) in mechanisms.iter().enumerate() {
            rewards[i] = mech.execute(profile)?.1;
        }
        let chosen = learner.step(&rewards)?;
        if rewards[chosen] > 0.0 {
            sold += 1;
        }
        recorder.observe_sold(learner.ledger(), Some(sold));
    }
    Ok(MultiBuyerRun {
        ledger: learner.ledger().clone(),
        series: recorder.into_points(),
        mechanisms,
    })
}

/// δ-guarded multi-buyer benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct OptDelta {
    pub value: f64,
    /// Cap on values: the largest value exceeded by round maxima in at least
    /// `⌈δT⌉` rounds. `None` means no cap (δT rounds to zero).
    pub v_bar: Option<f64>,
}

/// Largest value `V̄` with at least `⌈δT⌉` round maxima `≥ V̄`, the values
/// capped coordinate-wise at `V̄`, and the best mechanism revenue on the
/// capped trace. The candidate set is the supplied list plus the exact
/// anonymous-reserve-`V̄` auction, which is always a member of the
/// (undiscretized) mechanism family and certifies `OPT(δ) ≥ δT·V̄`.
pub fn benchmark_opt_delta_multibuyer(
    trace: &[Vec<f64>],
    delta: f64,
    mechanisms: &[MyersonMechanism],
) -> Result<OptDelta> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta={delta} outside [0, 1]"
        )));
    }
    if trace.is_empty() {
        return Ok(OptDelta {
            value: 0.0,
            v_bar: None,
        });
    }
    let t = trace.len();
    let required = crate::pricing::required_sales(delta, t) as usize;
    let v_bar = if required == 0 {
        None
    } else {
        let mut maxima: Vec<f64> = trace
            .iter()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        maxima.sort_by(|a, b| b.total_cmp(a));
        Some(maxima[required - 1])
    };

    let capped: Vec<Vec<f64>> = match v_bar {
        None => trace.to_vec(),
        Some(cap) => trace
            .iter()
            .map(|row| row.iter().map(|&v| v.min(cap)).collect())
            .collect(),
    };

    let n = trace[0].len();
    let mut best = 0.0f64;
    for mech in mechanisms {
        let mut total = 0.0;
        for profile in &capped {
            total += mech.execute(profile)?.1;
        }
        best = best.max(total);
    }
    if let Some(cap) = v_bar {
        // Exact-reserve witness on levels {1, V̄} (or {V̄} when V̄ = 1).
        let levels = if cap > 1.0 { vec![1.0, cap] } else { vec![1.0] };
        let reserve = anonymous_reserve(n, &levels, cap)?;
        let mut total = 0.0;
        for profile in &capped {
            total += reserve.execute(profile)?.1;
        }
        best = best.max(total);
    }
    Ok(OptDelta { value: best, v_bar })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_sell_has_no_winner() {
        let m = MyersonMechanism::new(2, vec![1.0, 2.0], vec![vec![None, None]; 2]).unwrap();
        let (w, pay) = m.execute(&[2.0, 2.0]).unwrap();
        assert_eq!(w, None);
        assert_eq!(pay, 0.0);
        assert_eq!(m.max_payment(), 0.0);
    }

    #[test]
    fn second_price_like_ordering_frozen_example() {
        // Interleaved ranks with bidder 1 above bidder 2 at equal levels:
        // values (4,2) on levels {1,2,4} -> winner bidder 1 paying 2.
        let levels = vec![1.0, 2.0, 4.0];
        let slot_rank = vec![
            vec![Some(1), Some(3), Some(5)],
            vec![Some(0), Some(2), Some(4)],
        ];
        let m = MyersonMechanism::new(2, levels, slot_rank).unwrap();
        let (w, pay) = m.execute(&[4.0, 2.0]).unwrap();
        assert_eq!(w, Some(0));
        assert_eq!(pay, 2.0);
        // And values flooring: (5.0, 2.9) floors to (4, 2).
        let (w, pay) = m.execute(&[5.0, 2.9]).unwrap();
        assert_eq!(w, Some(0));
        assert_eq!(pay, 2.0);
        assert_eq!(m.max_payment(), 4.0);
    }

    #[test]
    fn anonymous_reserve_frozen_example() {
        // values (V̄, V̄/2) -> winner bidder 1 (index 0) pays V̄.
        let v_bar = 4.0;
        let m = anonymous_reserve(2, &[1.0, 2.0, 4.0], v_bar).unwrap();
        let (w, pay) = m.execute(&[4.0, 2.0]).unwrap();
        assert_eq!(w, Some(0));
        assert_eq!(pay, v_bar);
        // Both at the reserve: lowest index wins, still pays the reserve.
        let (w, pay) = m.execute(&[4.0, 4.0]).unwrap();
        assert_eq!(w, Some(0));
        assert_eq!(pay, v_bar);
        // Below the reserve: no sale.
        let (w, pay) = m.execute(&[2.0, 3.9]).unwrap();
        assert_eq!(w, None);
        assert_eq!(pay, 0.0);
    }

    #[test]
    fn monotonicity_violations_rejected() {
        // Finite below -inf within a bidder.
        let bad = MyersonMechanism::new(1, vec![1.0, 2.0], vec![vec![Some(0), None]]);
        assert!(bad.is_err());
        // Decreasing ranks.
        let bad = MyersonMechanism::new(1, vec![1.0, 2.0], vec![vec![Some(1), Some(0)]]);
        assert!(bad.is_err());
    }

    #[test]
    fn enumeration_frozen_counts() {
        // n=1, one level: sell-at-level or never.
        let ms = enumerate_myerson(1, &[1.0]).unwrap();
        assert_eq!(ms.len(), 2);
        // n=1, levels {1,2}: never, reserve 1, reserve 2.
        let ms = enumerate_myerson(1, &[1.0, 2.0]).unwrap();
        assert_eq!(ms.len(), 3);
        // cap: n=3 with 3 levels exceeds 8 slots.
        assert!(enumerate_myerson(3, &[1.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn enumerated_ranges_match_grid_sweep() {
        let levels = [1.0, 2.0, 4.0];
        let ms = enumerate_myerson(2, &levels[..2]).unwrap();
        for m in &ms {
            // recompute independently
            let mut max = 0.0f64;
            for profile in LevelProfiles::new(2, 2) {
                let values: Vec<f64> = profile.iter().map(|&i| levels[i]).collect();
                max = max.max(m.execute(&values).unwrap().1);
            }
            assert_eq!(max, m.max_payment());
        }
    }

    #[test]
    fn raising_winner_value_never_hurts_winner() {
        // Truthfulness proxy on every n=2, 2-level mechanism.
        let levels = [1.0, 2.0];
        for m in enumerate_myerson(2, &levels).unwrap() {
            for profile in LevelProfiles::new(2, 2) {
                let values: Vec<f64> = profile.iter().map(|&i| levels[i]).collect();
                let (w, pay) = m.execute(&values).unwrap();
                let Some(w) = w else { continue };
                assert!(pay <= values[w]);
                // raise the winner's value to the top level
                let mut raised = values.clone();
                raised[w] = 2.0;
                let (w2, pay2) = m.execute(&raised).unwrap();
                assert_eq!(w2, Some(w));
                assert!(pay2 <= pay + 1e-12);
            }
        }
    }

    #[test]
    fn opt_delta_vbar_frozen_example() {
        // T=4 round maxima [5,3,8,5], delta=1/2 -> required 2 -> V̄ = 5.
        let trace = vec![vec![5.0], vec![3.0], vec![8.0], vec![5.0]];
        let ms = enumerate_myerson(1, &[1.0, 2.0, 4.0]).unwrap();
        let od = benchmark_opt_delta_multibuyer(&trace, 0.5, &ms).unwrap();
        assert_eq!(od.v_bar, Some(5.0));
        // delta -> 0+ with distinct maxima: V̄ = global max.
        let od = benchmark_opt_delta_multibuyer(&trace, 1e-9, &ms).unwrap();
        assert_eq!(od.v_bar, Some(8.0));
        // delta = 0: uncapped.
        let od = benchmark_opt_delta_multibuyer(&trace, 0.0, &ms).unwrap();
        assert_eq!(od.v_bar, None);
    }

    #[test]
    fn opt_delta_dominates_reserve_witness() {
        let trace = vec![
            vec![5.0, 1.0],
            vec![3.0, 2.5],
            vec![8.0, 1.0],
            vec![5.0, 4.5],
        ];
        let ms = enumerate_myerson(2, &[1.0, 2.0]).unwrap();
        let delta = 0.5;
        let od = benchmark_opt_delta_multibuyer(&trace, delta, &ms).unwrap();
        let v_bar = od.v_bar.unwrap();
        assert_eq!(v_bar, 5.0);
        // sandwich: δT·V̄ ≤ OPT(δ) ≤ T·V̄ (capped payments are at most V̄).
        assert!(od.value >= delta * trace.len() as f64 * v_bar - 1e-12);
        assert!(od.value <= trace.len() as f64 * v_bar + 1e-12);
    }
}
