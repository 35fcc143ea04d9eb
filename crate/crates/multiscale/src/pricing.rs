//! Posted-price reductions onto the learners: the geometric price ladder, the
//! full-information single-buyer auction, bandit posted pricing, and the
//! offline price benchmarks they are measured against.

use crate::bandits::{params_for, BanditLearner, BanditTarget};
use crate::experts::{eta_for_eps, MsmwLearner, RewardMode};
use crate::ledger::{RegretLedger, SeriesPoint, SeriesRecorder};
use crate::space::ActionSpace;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Geometric price ladder `(1+ε)^j`, `j = 0..=⌊log_{1+ε} h⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceGrid {
    eps: f64,
    h: f64,
    prices: Vec<f64>,
}

impl PriceGrid {
    pub fn new(eps: f64, h: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps={eps} outside (0, 1]"
            )));
        }
        if !(h >= 1.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("h={h} must be >= 1")));
        }
        // Tolerant floor so h sitting exactly on a grid point keeps its rung.
        let j_max = (h.ln() / (1.0 + eps).ln() + 1e-9).floor() as u32;
        let prices = (0..=j_max).map(|j| (1.0 + eps).powi(j as i32)).collect();
        Ok(Self { eps, h, prices })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn k(&self) -> usize {
        self.prices.len()
    }

    /// Largest grid price ≤ v (v must be ≥ 1).
    pub fn floor_price(&self, v: f64) -> f64 {
        let mut best = self.prices[0];
        for &p in &self.prices {
            if p <= v {
                best = p;
            } else {
                break;
            }
        }
        best
    }
}

/// Revenue of posting price `p` against value `v`: the sale happens iff
/// `v ≥ p` (boundary sells).
pub fn price_reward(p: f64, v: f64) -> f64 {
    if v >= p {
        p
    } else {
        0.0
    }
}

/// One inequality evaluated against a run, with both sides kept for
/// diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn leq(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            pass: lhs <= rhs,
        }
    }
}

/// Outcome of a pricing run: the ladder, the true-reward ledger, market
/// share, and the bound checks evaluated on the run.
#[derive(Debug, Clone)]
pub struct PricingRun {
    pub grid: PriceGrid,
    pub ledger: RegretLedger,
    pub series: Vec<SeriesPoint>,
    pub sold_rounds: u64,
    /// Environment queries issued per round (bandit feedback contract).
    pub queries: u64,
    pub min_mixed_prob: f64,
    pub checks: Vec<BoundCheck>,
}

impl PricingRun {
    pub fn market_share(&self) -> f64 {
        if self.ledger.rounds == 0 {
            0.0
        } else {
            self.sold_rounds as f64 / self.ledger.rounds as f64
        }
    }
}

fn validate_trace(trace: &[f64], h: f64) -> Result<()> {
    for (round, &v) in trace.iter().enumerate() {
        if !v.is_finite() || v < 1.0 || v > h {
            return Err(Error::ValueOutOfRange {
                round,
                value: v,
                lo: 1.0,
                hi: h,
            });
        }
    }
    Ok(())
}

/// Full-information single-buyer auction with known value bound `h`:
/// the learner runs over the price ladder with `η = ε/3` and a uniform prior,
/// seeing every grid price's revenue each round.
pub fn run_single_buyer_auction(trace: &[f64], eps: f64, h: f64, seed: u64) -> Result<PricingRun> {
    let grid = PriceGrid::new(eps, h)?;
    validate_trace(trace, h)?;
    let space = ActionSpace::new(grid.prices().to_vec())?;
    let mut learner = MsmwLearner::new(space, eta_for_eps(eps), RewardMode::NonNegative, seed)?;

    let mut sold = 0u64;
    let mut rewards = vec![0.0; grid.k()];
    let mut recorder = SeriesRecorder::new(trace.len());
    for &v in trace {
        for (j, &p) in grid.prices().iter().enumerate() {
            rewards[j] = price_reward(p, v);
        }
        let chosen = learner.step(&rewards)?;
        if rewards[chosen] > 0.0 {
            sold += 1;
        }
        recorder.observe_sold(learner.ledger(), Some(sold));
    }

    let ledger = learner.ledger().clone();
    let checks = vec![single_buyer_bound_check(&learner, &grid, eps)?];
    Ok(PricingRun {
        grid,
        ledger,
        series: recorder.into_points(),
        sold_rounds: sold,
        queries: trace.len() as u64,
        min_mixed_prob: f64::NAN,
        checks,
    })
}

/// Regret of the best fixed grid price against the certified bound
/// `ε·G_{p*} + (3/ε)(ln(3k/ε) + 1)·p*`.
fn single_buyer_bound_check(
    learner: &MsmwLearner,
    grid: &PriceGrid,
    eps: f64,
) -> Result<BoundCheck> {
    let ledger = learner.ledger();
    let star = ledger.best_arm();
    let p_star = grid.prices()[star];
    let k = grid.k() as f64;
    let rhs =
        eps * ledger.per_arm_gain[star] + 3.0 / eps * ((3.0 * k / eps).ln() + 1.0) * p_star;
    Ok(BoundCheck::leq(
        format!("regret(p*={p_star:.6}) <= eps*G(p*) + (3/eps)(ln(3k/eps)+1)*p*"),
        ledger.regret(star),
        rhs,
    ))
}

/// Sale oracle for bandit pricing: reveals only the sale indicator of the
/// queried price and counts every query it answers.
pub struct SaleOracle<'a> {
    trace: &'a [f64],
    queries: u64,
}

impl<'a> SaleOracle<'a> {
    pub fn new(trace: &'a [f64]) -> Self {
        Self { trace, queries: 0 }
    }

    /// Indicator that the round-`t` buyer accepts price `p`.
    pub fn reveal(&mut self, t: usize, p: f64) -> f64 {
        self.queries += 1;
        if self.trace[t] >= p {
            1.0
        } else {
            0.0
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }
}

/// Bandit posted pricing over the price ladder: each round only the chosen
/// price's sale indicator is consumed.
pub fn run_posted_pricing(
    trace: &[f64],
    eps: f64,
    h: f64,
    target: BanditTarget,
    seed: u64,
) -> Result<PricingRun> {
    let grid = PriceGrid::new(eps, h)?;
    validate_trace(trace, h)?;
    let space = ActionSpace::new(grid.prices().to_vec())?;
    let (gamma, eta) = params_for(eps, grid.k(), target, &space)?;
    let mut learner = BanditLearner::new(space, gamma, eta, RewardMode::NonNegative, seed)?;

    let mut oracle = SaleOracle::new(trace);
    let mut ledger = RegretLedger::new(grid.k());
    let mut sold = 0u64;
    let mut recorder = SeriesRecorder::new(trace.len());
    for (t, &v) in trace.iter().enumerate() {
        let (arm, mixed) = learner.choose();
        let indicator = oracle.reveal(t, grid.prices()[arm]);
        let revenue = grid.prices()[arm] * indicator;
        learner.update(arm, revenue)?;
        if indicator > 0.0 {
            sold += 1;
        }
        // True-side accounting, computed from the trace the environment owns.
        let rewards: Vec<f64> = grid.prices().iter().map(|&p| price_reward(p, v)).collect();
        ledger.record(&mixed, &rewards, revenue, grid.prices());
        recorder.observe_sold(&ledger, Some(sold));
    }

    let floor = gamma / grid.k() as f64;
    let checks = vec![BoundCheck::leq(
        format!("gamma/k floor {floor:.6} <= min mixed prob"),
        floor,
        learner.min_mixed_prob(),
    )];
    Ok(PricingRun {
        grid,
        ledger,
        series: recorder.into_points(),
        sold_rounds: sold,
        queries: oracle.queries(),
        min_mixed_prob: learner.min_mixed_prob(),
        checks,
    })
}

/// Best fixed grid price in hindsight: `(G_max, p*)`, ties broken by the
/// lowest price. Empty traces return `(0, lowest grid price)`.
pub fn benchmark_gmax(trace: &[f64], grid: &PriceGrid) -> (f64, f64) {
    let mut best_value = f64::NEG_INFINITY;
    let mut best_price = grid.prices()[0];
    for &p in grid.prices() {
        let total: f64 = trace.iter().map(|&v| price_reward(p, v)).sum();
        if total > best_value {
            best_value = total;
            best_price = p;
        }
    }
    if trace.is_empty() {
        (0.0, grid.prices()[0])
    } else {
        (best_value, best_price)
    }
}

/// δ-guarded best fixed price: the maximum is over grid prices selling in at
/// least `⌈δT⌉` rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmaxDelta {
    pub value: f64,
    pub price: Option<f64>,
    /// False when no price meets the market-share guard; `value` is then 0.
    pub qualified: bool,
}

/// Rounds required to qualify: `⌈δT⌉`, evaluated with a small slack so that
/// an exactly-integer `δT` is not bumped up by floating-point noise.
pub fn required_sales(delta: f64, t: usize) -> u64 {
    ((delta * t as f64 - 1e-9).ceil()).max(0.0) as u64
}

pub fn benchmark_gmax_delta(trace: &[f64], grid: &PriceGrid, delta: f64) -> Result<GmaxDelta> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta={delta} outside [0, 1]"
        )));
    }
    let required = required_sales(delta, trace.len());
    let mut best: Option<(f64, f64)> = None;
    for &p in grid.prices() {
        let sales = trace.iter().filter(|&&v| v >= p).count() as u64;
        if sales < required {
            continue;
        }
        let total: f64 = trace.iter().map(|&v| price_reward(p, v)).sum();
        if best.is_none_or(|(value, _)| total > value) {
            best = Some((total, p));
        }
    }
    Ok(match best {
        Some((value, price)) => GmaxDelta {
            value,
            price: Some(price),
            qualified: true,
        },
        None => GmaxDelta {
            value: 0.0,
            price: None,
            qualified: false,
        },
    })
}

/// Which convergence-rate threshold applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceBoundKind {
    /// Full information: `T(ε, δ) = C·ln(ln h / ε) / (ε² δ)`.
    SingleBuyer,
    /// Bandit feedback: `T(ε, δ) = C·ln h / (ε⁴ δ)`.
    PostedPricing,
}

/// Calibrated constant in the threshold horizons (the theory-level constant
/// is not explicit; this value is validated by the verification suite).
pub const CONVERGENCE_C: f64 = 20.0;

/// Threshold horizon for a `(1-ε)` approximation of the δ-guarded benchmark.
pub fn convergence_threshold(kind: ConvergenceBoundKind, eps: f64, delta: f64, h: f64) -> usize {
    let t = match kind {
        ConvergenceBoundKind::SingleBuyer => {
            CONVERGENCE_C * (h.ln() / eps).ln() / (eps * eps * delta)
        }
        ConvergenceBoundKind::PostedPricing => {
            CONVERGENCE_C * h.ln() / (eps.powi(4) * delta)
        }
    };
    t.ceil() as usize
}

/// Outcome of a convergence check against a δ-guarded benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub threshold_t: usize,
    /// Whether the run reached the threshold horizon at all.
    pub run_covers_threshold: bool,
    /// `G_alg ≥ (1-ε)·benchmark` at the end of the run.
    pub met_at_horizon: bool,
    /// Smallest recorded round where the run rate first clears the target
    /// rate `(1-ε)·benchmark/T` (None if never).
    pub empirical_crossing: Option<u64>,
    pub benchmark: f64,
}

/// Evaluate whether the run achieves `(1-ε)` of `benchmark` (the δ-guarded
/// hindsight revenue over the whole trace), report the threshold-horizon
/// verdict and the earliest recorded crossing of the per-round target rate.
pub fn convergence_check(
    series: &[crate::ledger::SeriesPoint],
    benchmark: f64,
    eps: f64,
    delta: f64,
    h: f64,
    kind: ConvergenceBoundKind,
) -> Result<ConvergenceReport> {
    if series.is_empty() {
        return Err(Error::InvalidParameter("empty run series".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) || !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "eps={eps}, delta={delta} out of range"
        )));
    }
    let threshold_t = convergence_threshold(kind, eps, delta, h);
    let last = series.last().unwrap();
    let t = last.round;
    let target_rate = (1.0 - eps) * benchmark / t.max(1) as f64;
    let empirical_crossing = series
        .iter()
        .find(|p| p.round > 0 && p.alg_gain_expected >= target_rate * p.round as f64)
        .map(|p| p.round);
    Ok(ConvergenceReport {
        threshold_t,
        run_covers_threshold: t as usize >= threshold_t,
        met_at_horizon: last.alg_gain_expected >= (1.0 - eps) * benchmark,
        empirical_crossing,
        benchmark,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = PriceGrid::new(1.0, 4.0).unwrap();
        assert_eq!(g.prices(), &[1.0, 2.0, 4.0]);
        let g = PriceGrid::new(1.0, 7.9).unwrap();
        assert_eq!(g.prices(), &[1.0, 2.0, 4.0]);
        let g = PriceGrid::new(1.0, 8.0).unwrap();
        assert_eq!(g.prices(), &[1.0, 2.0, 4.0, 8.0]);
        assert!(PriceGrid::new(0.0, 4.0).is_err());
        assert!(PriceGrid::new(0.5, 0.5).is_err());
    }

    #[test]
    fn price_reward_boundary_sells() {
        assert_eq!(price_reward(2.0, 3.0), 2.0);
        assert_eq!(price_reward(4.0, 3.0), 0.0);
        assert_eq!(price_reward(3.0, 3.0), 3.0);
    }

    #[test]
    fn gmax_frozen_example() {
        let grid = PriceGrid::new(1.0, 4.0).unwrap();
        let trace = [1.0, 2.0, 4.0];
        // brute force: G = (3, 4, 4); tie between 2 and 4 breaks low.
        let (g, p) = benchmark_gmax(&trace, &grid);
        assert_eq!(g, 4.0);
        assert_eq!(p, 2.0);
        let (g, p) = benchmark_gmax(&[], &grid);
        assert_eq!(g, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn gmax_constant_trace() {
        let grid = PriceGrid::new(1.0, 8.0).unwrap();
        let trace = [5.0; 10];
        let (g, p) = benchmark_gmax(&trace, &grid);
        assert_eq!(p, 4.0);
        assert_eq!(g, 40.0);
    }

    #[test]
    fn gmax_delta_frozen_examples() {
        let grid = PriceGrid::new(1.0, 4.0).unwrap();
        let trace = [1.0, 2.0, 4.0];
        let d = benchmark_gmax_delta(&trace, &grid, 2.0 / 3.0).unwrap();
        assert_eq!(d.value, 4.0);
        assert_eq!(d.price, Some(2.0));
        let d0 = benchmark_gmax_delta(&trace, &grid, 0.0).unwrap();
        assert_eq!(d0.value, benchmark_gmax(&trace, &grid).0);
        let d1 = benchmark_gmax_delta(&trace, &grid, 1.0).unwrap();
        assert_eq!(d1.value, 3.0);
        assert_eq!(d1.price, Some(1.0));
    }

    #[test]
    fn gmax_delta_sentinel_when_nothing_qualifies() {
        let grid = PriceGrid::new(1.0, 4.0).unwrap();
        // Price 1 always sells, so only an empty... use values below no price?
        // Values are >= 1 so price 1 always qualifies at delta=1 on non-empty
        // traces; the sentinel needs an empty trace with delta>0? required=0
        // then. Exercise via a restricted grid of high prices instead.
        let trace = [1.0, 1.0];
        let high_only = PriceGrid {
            eps: 1.0,
            h: 4.0,
            prices: vec![2.0, 4.0],
        };
        let d = benchmark_gmax_delta(&trace, &high_only, 0.5).unwrap();
        assert!(!d.qualified);
        assert_eq!(d.value, 0.0);
        assert_eq!(d.price, None);
        let _ = grid;
    }

    #[test]
    fn gmax_delta_non_increasing_in_delta() {
        let grid = PriceGrid::new(0.5, 16.0).unwrap();
        let trace: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64 * 7.3) % 15.0).collect();
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let d = benchmark_gmax_delta(&trace, &grid, i as f64 / 10.0).unwrap();
            assert!(d.value <= prev + 1e-12);
            prev = d.value;
        }
    }

    #[test]
    fn single_buyer_constant_trace_finds_top_price() {
        let trace = vec![4.0; 400];
        let run = run_single_buyer_auction(&trace, 1.0, 4.0, 5).unwrap();
        let (gmax, p_star) = benchmark_gmax(&trace, &run.grid);
        assert_eq!(p_star, 4.0);
        assert_eq!(gmax, 1600.0);
        assert_eq!(run.ledger.per_arm_gain[2], 1600.0);
        assert!(run.checks.iter().all(|c| c.pass), "{:?}", run.checks);
    }

    #[test]
    fn single_buyer_frozen_tiny_trace() {
        // trace [1,2,4], eps=1, h=4: grid {1,2,4}; per-price gains (3,4,4).
        let run = run_single_buyer_auction(&[1.0, 2.0, 4.0], 1.0, 4.0, 0).unwrap();
        assert_eq!(run.grid.prices(), &[1.0, 2.0, 4.0]);
        assert_eq!(run.ledger.per_arm_gain, vec![3.0, 4.0, 4.0]);
        assert_eq!(run.ledger.g_max(), 4.0);
    }

    #[test]
    fn single_buyer_rejects_out_of_range_values() {
        assert!(run_single_buyer_auction(&[0.5], 1.0, 4.0, 0).is_err());
        assert!(run_single_buyer_auction(&[5.0], 1.0, 4.0, 0).is_err());
    }

    #[test]
    fn posted_pricing_consumes_one_query_per_round() {
        let trace: Vec<f64> = (0..200).map(|i| 1.0 + (i % 4) as f64).collect();
        let run = run_posted_pricing(&trace, 0.5, 5.0, BanditTarget::BestArm, 3).unwrap();
        assert_eq!(run.queries, 200);
        assert!(run.checks.iter().all(|c| c.pass));
        assert!(run.min_mixed_prob >= 0.5 / run.grid.k() as f64 - 1e-12);
    }

    #[test]
    fn convergence_check_trivial_environment() {
        // One price ever sells: the learner's task is trivial and the
        // threshold is met immediately once it locks on.
        let trace = vec![4.0; 2000];
        let run = run_single_buyer_auction(&trace, 1.0, 4.0, 3).unwrap();
        let gd = benchmark_gmax_delta(&trace, &run.grid, 0.5).unwrap();
        let report = convergence_check(
            &run.series,
            gd.value,
            0.5,
            0.5,
            4.0,
            ConvergenceBoundKind::SingleBuyer,
        )
        .unwrap();
        assert!(report.met_at_horizon);
        assert!(report.run_covers_threshold);
        let crossing = report.empirical_crossing.expect("must cross");
        assert!(crossing < 2000);
        // Report carries both the threshold verdict and the crossing round.
        assert!(report.threshold_t >= 1);
        assert_eq!(report.benchmark, gd.value);
    }

    #[test]
    fn convergence_check_validates_inputs() {
        assert!(convergence_check(&[], 1.0, 0.2, 0.1, 4.0, ConvergenceBoundKind::SingleBuyer)
            .is_err());
        let threshold =
            convergence_threshold(ConvergenceBoundKind::PostedPricing, 0.5, 0.5, 16.0);
        // C * ln 16 / (0.5^4 * 0.5) = 20 * 2.7726 / 0.03125
        assert_eq!(threshold, (20.0f64 * 16.0f64.ln() / 0.03125).ceil() as usize);
    }

    #[test]
    fn grid_coverage_beats_continuous_best_within_factor() {
        // For every v in [1,h] some grid price p has p <= v < (1+eps)p, so the
        // best grid price earns at least 1/(1+eps) of the best continuous
        // fixed price's revenue.
        let eps = 0.3;
        let h = 50.0;
        let grid = PriceGrid::new(eps, h).unwrap();
        let trace: Vec<f64> = (0..300)
            .map(|i| 1.0 + ((i as f64 * 13.7) % (h - 1.0)))
            .collect();
        let (g_grid, _) = benchmark_gmax(&trace, &grid);
        let mut best_cont = 0.0f64;
        for i in 0..5000 {
            let p = 1.0 + (h - 1.0) * i as f64 / 4999.0;
            let rev: f64 = trace.iter().map(|&v| price_reward(p, v)).sum();
            best_cont = best_cont.max(rev);
        }
        assert!(g_grid >= best_cont / (1.0 + eps) - 1e-9);
    }
}
