//! Result emission: a full JSON document and plot-friendly CSV tables.

use crate::experiment::ExperimentResult;
use crate::HarnessError;
use std::fmt::Write as _;
use std::path::Path;

/// Full structured result, round-trippable bit-exactly through serde_json.
pub fn to_json(result: &ExperimentResult) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn from_json(text: &str) -> Result<ExperimentResult, HarnessError> {
    Ok(serde_json::from_str(text)?)
}

/// Aggregated long-format CSV: `learner,round,metric,mean,stderr`.
///
/// Series metrics appear once per downsampled round; final scalar metrics
/// appear with the final round index.
pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("learner,round,metric,mean,stderr\n");
    for agg in &result.aggregates {
        for (i, &round) in agg.rounds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{round},alg_gain_expected,{},{}",
                agg.learner, agg.mean_expected[i], agg.stderr_expected[i]
            );
            let _ = writeln!(
                out,
                "{},{round},regret_vs_best,{},{}",
                agg.learner, agg.mean_regret_vs_best[i], agg.stderr_regret_vs_best[i]
            );
        }
        let last = agg.rounds.last().copied().unwrap_or(0);
        for (name, (mean, stderr)) in &agg.metrics {
            let _ = writeln!(out, "{},{last},{name},{mean},{stderr}", agg.learner);
        }
    }
    out
}

/// One sweep row per (parameter value, learner, metric).
pub fn sweep_csv(param: &str, entries: &[(String, ExperimentResult)]) -> String {
    let mut out = format!("{param},learner,metric,mean,stderr\n");
    for (value, result) in entries {
        for agg in &result.aggregates {
            for (name, (mean, stderr)) in &agg.metrics {
                let _ = writeln!(out, "{value},{},{name},{mean},{stderr}", agg.learner);
            }
        }
    }
    out
}

/// Write results under `dir` in the requested format(s).
pub fn emit(
    result: &ExperimentResult,
    dir: &Path,
    format: crate::OutputFormat,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    match format {
        crate::OutputFormat::Json => {
            std::fs::write(dir.join("results.json"), to_json(result)?)?;
        }
        crate::OutputFormat::Csv => {
            std::fs::write(dir.join("results.csv"), to_csv(result))?;
        }
        crate::OutputFormat::Both => {
            std::fs::write(dir.join("results.json"), to_json(result)?)?;
            std::fs::write(dir.join("results.csv"), to_csv(result))?;
        }
    }
    Ok(())
}
