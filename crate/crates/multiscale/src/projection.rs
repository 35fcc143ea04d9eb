//! Weighted negative entropy, its Bregman divergence, and the smooth
//! multi-scale projection onto the simplex.
//!
//! The projection of a weight vector `w` is `p_i = w_i · exp(-λ*/c_i)` where
//! `λ*` is the unique root of the strictly decreasing map
//! `λ ↦ Σ_i w_i · exp(-λ/c_i) - 1`. Everything here runs in log-domain: the
//! root equation is solved as `logsumexp_i(ln w_i - λ/c_i) = 0`, which keeps
//! million-round weight trajectories finite.

use crate::space::{ActionSpace, SimplexPoint, WeightVector};
use crate::{Error, Result};

/// Default residual tolerance for the λ* solver: `|Σ p_i - 1| ≤ tol` before
/// the final exact renormalization.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-12;

/// Weighted negative entropy `F(x) = Σ c_i x_i ln x_i`.
///
/// Entries with `x_i = 0` contribute 0 (limit convention). Non-positive for
/// probability vectors.
pub fn weighted_neg_entropy(x: &SimplexPoint, space: &ActionSpace) -> Result<f64> {
    if x.k() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.k(),
            got: x.k(),
        });
    }
    Ok(x.probs()
        .iter()
        .zip(space.ranges())
        .map(|(&xi, &ci)| if xi > 0.0 { ci * xi * xi.ln() } else { 0.0 })
        .sum())
}

/// Bregman divergence of the weighted negative entropy:
/// `D_F(x, y) = Σ c_i (x_i ln(x_i/y_i) - x_i + y_i)`.
///
/// `y` is any strictly positive vector (a distribution or raw weights);
/// non-negative, and zero iff `x = y`.
pub fn bregman_divergence(x: &SimplexPoint, y: &[f64], space: &ActionSpace) -> Result<f64> {
    if x.k() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.k(),
            got: x.k(),
        });
    }
    if y.len() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.k(),
            got: y.len(),
        });
    }
    let mut d = 0.0;
    for (arm, ((&xi, &yi), &ci)) in x.probs().iter().zip(y).zip(space.ranges()).enumerate() {
        if !(yi > 0.0) || !yi.is_finite() {
            return Err(Error::NonFiniteWeight { arm });
        }
        let entropy_term = if xi > 0.0 { xi * (xi / yi).ln() } else { 0.0 };
        d += ci * (entropy_term - xi + yi);
    }
    Ok(d)
}

/// `logsumexp_i(logw_i - λ/c_i)` and the normalized `Σ q_i / c_i` used as the
/// Newton slope (the root map's log-derivative magnitude).
fn eval_log_margin(logw: &[f64], ranges: &[f64], lambda: f64) -> (f64, f64) {
    let m = logw
        .iter()
        .zip(ranges)
        .map(|(&lw, &c)| lw - lambda / c)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    let mut slope = 0.0;
    for (&lw, &c) in logw.iter().zip(ranges) {
        let e = (lw - lambda / c - m).exp();
        s += e;
        slope += e / c;
    }
    (m + s.ln(), slope / s)
}

/// Core solver: find λ* with `logsumexp(logw - λ*/c) = 0` and return the
/// exactly renormalized log-probabilities together with λ*.
///
/// Newton on the convex decreasing log-margin: one step lands on the `g ≥ 0`
/// side, after which iterates increase monotonically to the root. A bisection
/// fallback covers pathological scaling.
pub fn project_log(logw: &[f64], ranges: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if logw.len() != ranges.len() {
        return Err(Error::DimensionMismatch {
            expected: ranges.len(),
            got: logw.len(),
        });
    }
    if let Some((arm, _)) = logw.iter().enumerate().find(|(_, &w)| !w.is_finite()) {
        return Err(Error::NonFiniteWeight { arm });
    }

    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..100 {
        let (g, slope) = eval_log_margin(logw, ranges, lambda);
        if g.exp_m1().abs() <= tol {
            converged = true;
            break;
        }
        lambda += g / slope;
        if !lambda.is_finite() {
            break;
        }
    }

    if !converged {
        lambda = bisect_log_margin(logw, ranges, tol)?;
    }

    let (logz, _) = eval_log_margin(logw, ranges, lambda);
    let logp: Vec<f64> = logw
        .iter()
        .zip(ranges)
        .map(|(&lw, &c)| lw - lambda / c - logz)
        .collect();
    Ok((logp, lambda))
}

/// Bracket-by-doubling plus bisection fallback for [`project_log`].
fn bisect_log_margin(logw: &[f64], ranges: &[f64], tol: f64) -> Result<f64> {
    let c_max = ranges.iter().copied().fold(0.0, f64::max);
    let (g0, _) = eval_log_margin(logw, ranges, 0.0);
    let (mut lo, mut hi);
    let mut step = c_max.max(1.0);
    if g0 >= 0.0 {
        lo = 0.0;
        hi = step;
        while eval_log_margin(logw, ranges, hi).0 > 0.0 {
            lo = hi;
            hi += step;
            step *= 2.0;
            if !hi.is_finite() {
                return Err(Error::SolverFailure("bracket expansion overflow".into()));
            }
        }
    } else {
        hi = 0.0;
        lo = -step;
        while eval_log_margin(logw, ranges, lo).0 < 0.0 {
            hi = lo;
            lo -= step;
            step *= 2.0;
            if !lo.is_finite() {
                return Err(Error::SolverFailure("bracket expansion overflow".into()));
            }
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let (g, _) = eval_log_margin(logw, ranges, mid);
        if g.exp_m1().abs() <= tol {
            return Ok(mid);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::SolverFailure(format!(
        "bisection stalled in [{lo}, {hi}]"
    )))
}

/// Smooth multi-scale projection: `p_i = w_i · exp(-λ*/c_i)`, renormalized to
/// sum exactly to one, together with λ*.
pub fn multiscale_project(
    w: &WeightVector,
    space: &ActionSpace,
    tol: f64,
) -> Result<(SimplexPoint, f64)> {
    if w.k() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.k(),
            got: w.k(),
        });
    }
    let (logp, lambda) = project_log(w.logs(), space.ranges(), tol)?;
    Ok((materialize(&logp)?, lambda))
}

/// Exponentiate log-probabilities and renormalize the linear-domain result.
pub(crate) fn materialize(logp: &[f64]) -> Result<SimplexPoint> {
    let mut probs: Vec<f64> = logp.iter().map(|&l| l.exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    SimplexPoint::new(probs)
}

/// Test/diagnostic oracle: solve `argmin_{p ∈ Δ} D_F(p, w)` by derivative-free
/// golden-section maximization of the one-dimensional concave dual
/// `d(λ) = Σ c_i (w_i - w_i e^{-λ/c_i}) - λ`.
///
/// Deliberately shares no root-finding machinery with [`multiscale_project`];
/// it exists to cross-check the production path, not to be fast.
pub fn bregman_project_oracle(w: &WeightVector, space: &ActionSpace) -> Result<SimplexPoint> {
    if w.k() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.k(),
            got: w.k(),
        });
    }
    let logw = w.logs();
    let ranges = space.ranges();
    let unnorm_sum = |lambda: f64| -> f64 {
        logw.iter()
            .zip(ranges)
            .map(|(&lw, &c)| (lw - lambda / c).exp())
            .sum()
    };
    let dual = |lambda: f64| -> f64 {
        let mut d = -lambda;
        for (&lw, &c) in logw.iter().zip(ranges) {
            d += c * (lw.exp() - (lw - lambda / c).exp());
        }
        d
    };

    // Bracket the maximizer: dual'(λ) = Σ p_i(λ) - 1 changes sign.
    let c_max = space.c_max().max(1.0);
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut step = c_max;
    let mut budget = 200;
    while unnorm_sum(lo) < 1.0 {
        lo -= step;
        step *= 2.0;
        budget -= 1;
        if budget == 0 {
            return Err(Error::SolverFailure("oracle bracket (low) exhausted".into()));
        }
    }
    step = c_max;
    while unnorm_sum(hi) > 1.0 {
        hi += step;
        step *= 2.0;
        budget -= 1;
        if budget == 0 {
            return Err(Error::SolverFailure("oracle bracket (high) exhausted".into()));
        }
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = dual(x1);
    let mut f2 = dual(x2);
    for _ in 0..120 {
        // Golden section localizes the maximizer until the dual's flat top
        // sinks below f64 value resolution; the sign-bisection below then
        // finishes the job on the dual's slope, which stays well-resolved.
        if (b - a).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs())) || f1 == f2 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = dual(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = dual(x1);
        }
    }
    // Refine on the dual slope's sign: d'(λ) = Σ p_i(λ) - 1, positive left of
    // the maximizer. Plain bisection in linear domain.
    if unnorm_sum(a) < 1.0 {
        a = lo;
    }
    if unnorm_sum(b) > 1.0 {
        b = hi;
    }
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let mid = 0.5 * (a + b);
        if unnorm_sum(mid) > 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lambda = 0.5 * (a + b);
    let logp: Vec<f64> = logw
        .iter()
        .zip(ranges)
        .map(|(&lw, &c)| lw - lambda / c)
        .collect();
    materialize(&logp)
}
