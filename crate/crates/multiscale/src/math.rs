//! Small numeric helpers shared by the learners.

/// Numerically stable `ln(Σ exp(a_i))`.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = values.iter().map(|&v| (v - m).exp()).sum();
    m + sum.ln()
}

/// Probability floor applied before taking logs of externally supplied
/// distributions. The learners never produce exact zeros themselves; this
/// guard only fires on malformed inputs.
pub const LOG_FLOOR: f64 = 1e-300;

/// `ln x` with the [`LOG_FLOOR`] guard.
pub fn ln_floored(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// KL divergence between Bernoulli(p) and Bernoulli(q), in nats.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Mean and standard error of the mean. Standard error is 0 for n < 2.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(samples) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pairwise (tree) summation: deterministic for a fixed input order and far
/// less rounding drift than a running sum on long series.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
