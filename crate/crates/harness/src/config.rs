//! Experiment configuration: a flat, line-oriented `key = value` format with
//! repeatable `[section]` blocks.
//!
//! Top-level keys describe the problem, horizon, seeds, and benchmark
//! parameters. Each `[learner]` section adds one learner to the run (so one
//! config can race several learners on identical environments); a single
//! `[env]` section picks the reward/value source. `#` starts a comment.

use multiscale::adversaries::ValueDist;
use multiscale::bandits::BanditTarget;
use multiscale::experts::RewardMode;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Configuration errors carry the offending field or line.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

fn field_err<T>(field: &str, why: impl fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError(format!("field `{field}`: {why}")))
}

/// Raw parsed form: ordered key/value pairs at the top level plus a list of
/// named sections in file order.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub top: BTreeMap<String, String>,
    pub sections: Vec<(String, BTreeMap<String, String>)>,
    pub text: String,
}

/// Parse the config format. Duplicate top-level keys are an error; duplicate
/// section names accumulate.
pub fn parse_config(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig {
        text: text.to_string(),
        ..Default::default()
    };
    let mut current: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError(format!("line {}: unterminated section", lineno + 1)))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(ConfigError(format!(
                    "line {}: empty section name",
                    lineno + 1
                )));
            }
            raw.sections.push((name, BTreeMap::new()));
            current = Some(raw.sections.len() - 1);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "line {}: expected `key = value`, got {line:?}",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", lineno + 1)));
        }
        let map = match current {
            None => &mut raw.top,
            Some(i) => &mut raw.sections[i].1,
        };
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    Ok(raw)
}

/// The problems the runner knows how to wire up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Experts,
    Bandit,
    SingleBuyer,
    SingleBuyerUnknownH,
    PostedPricing,
    MultiBuyer,
    ExpertLb,
    BanditLb,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Experts => "experts",
            Problem::Bandit => "bandit",
            Problem::SingleBuyer => "single_buyer",
            Problem::SingleBuyerUnknownH => "single_buyer_unknown_h",
            Problem::PostedPricing => "posted_pricing",
            Problem::MultiBuyer => "multi_buyer",
            Problem::ExpertLb => "expert_lb",
            Problem::BanditLb => "bandit_lb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Msmw,
    Hedge,
    BanditMsmw,
    Exp3,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Msmw => "msmw",
            Algo::Hedge => "hedge",
            Algo::BanditMsmw => "bandit_msmw",
            Algo::Exp3 => "exp3",
        }
    }
}

/// One learner entry: algorithm plus either explicit parameters or the
/// analysis-derived defaults computed from the problem's `eps`.
#[derive(Debug, Clone)]
pub struct LearnerSpec {
    pub algo: Algo,
    pub mode: RewardMode,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub target: BanditTarget,
}

/// Environment specification.
#[derive(Debug, Clone)]
pub enum EnvSpec {
    IidValues(ValueDist),
    FixedTrace(PathBuf),
    IidRewards { ranges: Vec<f64>, means: Vec<f64> },
    AdaptiveExpertLb,
    StochasticBanditLb { instance: u8 },
    WorstCasePricing,
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub t: usize,
    pub seeds: Vec<u64>,
    pub eps: f64,
    pub h: f64,
    pub n: usize,
    pub delta: Option<f64>,
    pub out: Option<PathBuf>,
    pub learners: Vec<LearnerSpec>,
    pub env: EnvSpec,
    pub echo: String,
}

fn parse_f64(field: &str, s: &str) -> Result<f64, ConfigError> {
    s.parse::<f64>()
        .map_err(|_| ConfigError(format!("field `{field}`: not a number: {s:?}")))
}

fn parse_usize(field: &str, s: &str) -> Result<usize, ConfigError> {
    s.parse::<usize>()
        .map_err(|_| ConfigError(format!("field `{field}`: not an integer: {s:?}")))
}

/// Seeds: either `base:count` or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, ConfigError> {
    if let Some((base, count)) = s.split_once(':') {
        let base: u64 = base
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("field `seeds`: bad base {base:?}")))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("field `seeds`: bad count {count:?}")))?;
        if count == 0 {
            return field_err("seeds", "count must be positive");
        }
        Ok((base..base + count).collect())
    } else {
        let seeds: Result<Vec<u64>, _> = s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<u64>()
                    .map_err(|_| ConfigError(format!("field `seeds`: bad entry {x:?}")))
            })
            .collect();
        let seeds = seeds?;
        if seeds.is_empty() {
            return field_err("seeds", "need at least one seed");
        }
        Ok(seeds)
    }
}

fn parse_f64_list(field: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|x| parse_f64(field, x.trim()))
        .collect::<Result<Vec<f64>, _>>()
}

fn require<'a>(
    map: &'a BTreeMap<String, String>,
    section: &str,
    key: &str,
) -> Result<&'a str, ConfigError> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| ConfigError(format!("field `{section}.{key}`: missing")))
}

fn learner_from_section(map: &BTreeMap<String, String>) -> Result<LearnerSpec, ConfigError> {
    let algo = match require(map, "learner", "algo")? {
        "msmw" => Algo::Msmw,
        "hedge" => Algo::Hedge,
        "bandit_msmw" => Algo::BanditMsmw,
        "exp3" => Algo::Exp3,
        other => return field_err("learner.algo", format!("unknown algorithm {other:?}")),
    };
    let mode = match map.get("mode").map(String::as_str) {
        Some("nonneg") | None => RewardMode::NonNegative,
        Some("symmetric") => RewardMode::Symmetric,
        Some(other) => return field_err("learner.mode", format!("unknown mode {other:?}")),
    };
    let eta = map
        .get("eta")
        .map(|v| parse_f64("learner.eta", v))
        .transpose()?;
    let gamma = map
        .get("gamma")
        .map(|v| parse_f64("learner.gamma", v))
        .transpose()?;
    let target = match map.get("target").map(String::as_str) {
        Some("best_arm") | None => BanditTarget::BestArm,
        Some("all_arms") => BanditTarget::AllArms,
        Some("symmetric") => BanditTarget::Symmetric,
        Some(other) => return field_err("learner.target", format!("unknown target {other:?}")),
    };
    Ok(LearnerSpec {
        algo,
        mode,
        eta,
        gamma,
        target,
    })
}

fn env_from_section(map: &BTreeMap<String, String>) -> Result<EnvSpec, ConfigError> {
    match require(map, "env", "kind")? {
        "iid_values" => {
            let dist = match require(map, "env", "dist")? {
                "point_mass" => ValueDist::PointMass {
                    v: parse_f64("env.v", require(map, "env", "v")?)?,
                },
                "two_point" => ValueDist::TwoPoint {
                    lo: parse_f64("env.lo", require(map, "env", "lo")?)?,
                    hi: parse_f64("env.hi", require(map, "env", "hi")?)?,
                    p_hi: parse_f64("env.p_hi", require(map, "env", "p_hi")?)?,
                },
                "equal_revenue" => ValueDist::EqualRevenue {
                    eps: parse_f64("env.eps", require(map, "env", "eps")?)?,
                    h: parse_f64("env.h", require(map, "env", "h")?)?,
                },
                other => return field_err("env.dist", format!("unknown distribution {other:?}")),
            };
            dist.validate()
                .map_err(|e| ConfigError(format!("field `env.dist`: {e}")))?;
            Ok(EnvSpec::IidValues(dist))
        }
        "fixed_trace" => {
            let path = require(map, "env", "trace")?;
            Ok(EnvSpec::FixedTrace(PathBuf::from(path)))
        }
        "iid_rewards" => {
            let ranges = parse_f64_list("env.ranges", require(map, "env", "ranges")?)?;
            let means = parse_f64_list("env.means", require(map, "env", "means")?)?;
            if ranges.len() != means.len() {
                return field_err("env.means", "length differs from env.ranges");
            }
            Ok(EnvSpec::IidRewards { ranges, means })
        }
        "adaptive_expert_lb" => Ok(EnvSpec::AdaptiveExpertLb),
        "stochastic_bandit_lb" => {
            let instance = map
                .get("instance")
                .map(|v| parse_usize("env.instance", v))
                .transpose()?
                .unwrap_or(1) as u8;
            Ok(EnvSpec::StochasticBanditLb { instance })
        }
        "worst_case_pricing" => Ok(EnvSpec::WorstCasePricing),
        other => field_err("env.kind", format!("unknown kind {other:?}")),
    }
}

/// Validate a raw config into an [`ExperimentConfig`].
pub fn resolve(raw: &RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let problem = match raw
        .top
        .get("problem")
        .map(String::as_str)
        .ok_or_else(|| ConfigError("field `problem`: missing".into()))?
    {
        "experts" => Problem::Experts,
        "bandit" => Problem::Bandit,
        "single_buyer" => Problem::SingleBuyer,
        "single_buyer_unknown_h" => Problem::SingleBuyerUnknownH,
        "posted_pricing" => Problem::PostedPricing,
        "multi_buyer" => Problem::MultiBuyer,
        "expert_lb" => Problem::ExpertLb,
        "bandit_lb" => Problem::BanditLb,
        other => return field_err("problem", format!("unknown problem {other:?}")),
    };
    let t = parse_usize(
        "t",
        raw.top
            .get("t")
            .ok_or_else(|| ConfigError("field `t`: missing".into()))?,
    )?;
    if t == 0 {
        return field_err("t", "horizon must be positive");
    }
    let seeds = parse_seeds(
        raw.top
            .get("seeds")
            .ok_or_else(|| ConfigError("field `seeds`: missing".into()))?,
    )?;
    let eps = raw
        .top
        .get("eps")
        .map(|v| parse_f64("eps", v))
        .transpose()?
        .unwrap_or(0.5);
    if !(eps > 0.0 && eps <= 1.0) {
        return field_err("eps", format!("{eps} outside (0, 1]"));
    }
    let h = raw
        .top
        .get("h")
        .map(|v| parse_f64("h", v))
        .transpose()?
        .unwrap_or(1.0);
    let n = raw
        .top
        .get("n")
        .map(|v| parse_usize("n", v))
        .transpose()?
        .unwrap_or(1);
    let delta = raw
        .top
        .get("delta")
        .map(|v| parse_f64("delta", v))
        .transpose()?;
    if let Some(d) = delta {
        if !(0.0..=1.0).contains(&d) {
            return field_err("delta", format!("{d} outside [0, 1]"));
        }
    }
    let out = raw.top.get("out").map(PathBuf::from);

    let mut learners = Vec::new();
    let mut env: Option<EnvSpec> = None;
    for (name, map) in &raw.sections {
        match name.as_str() {
            "learner" => learners.push(learner_from_section(map)?),
            "env" => {
                if env.is_some() {
                    return field_err("env", "more than one [env] section");
                }
                env = Some(env_from_section(map)?);
            }
            other => return Err(ConfigError(format!("unknown section [{other}]"))),
        }
    }

    let env = match env {
        Some(e) => e,
        None => match problem {
            Problem::ExpertLb => EnvSpec::AdaptiveExpertLb,
            Problem::BanditLb => EnvSpec::StochasticBanditLb { instance: 1 },
            _ => return field_err("env", "missing [env] section for this problem"),
        },
    };
    if learners.is_empty() {
        return field_err("learner", "need at least one [learner] section");
    }

    match (problem, &env) {
        (Problem::Experts | Problem::Bandit, EnvSpec::IidRewards { .. }) => {}
        (Problem::Experts | Problem::Bandit, _) => {
            return field_err("env.kind", "experts/bandit problems need iid_rewards")
        }
        (
            Problem::SingleBuyer
            | Problem::SingleBuyerUnknownH
            | Problem::PostedPricing
            | Problem::MultiBuyer,
            EnvSpec::IidValues(_) | EnvSpec::FixedTrace(_) | EnvSpec::WorstCasePricing,
        ) => {}
        (Problem::ExpertLb, EnvSpec::AdaptiveExpertLb) => {}
        (Problem::BanditLb, EnvSpec::StochasticBanditLb { .. }) => {}
        (p, _) => {
            return field_err(
                "env.kind",
                format!("environment does not fit problem {}", p.name()),
            )
        }
    }

    Ok(ExperimentConfig {
        problem,
        t,
        seeds,
        eps,
        h,
        n,
        delta,
        out,
        learners,
        env,
        echo: raw.text.clone(),
    })
}

/// Parse and resolve in one go.
pub fn load(text: &str) -> Result<ExperimentConfig, ConfigError> {
    resolve(&parse_config(text)?)
}

/// Replace (or inject) one top-level key, used by `sweep`.
pub fn override_top(text: &str, key: &str, value: &str) -> String {
    let mut out = String::new();
    let mut replaced = false;
    let mut in_section = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            if !replaced && !in_section {
                out.push_str(&format!("{key} = {value}\n"));
                replaced = true;
            }
            in_section = true;
        }
        if !in_section && !replaced {
            if let Some((k, _)) = trimmed.split_once('=') {
                if k.trim() == key {
                    out.push_str(&format!("{key} = {value}\n"));
                    replaced = true;
                    continue;
                }
            }
        }
        out.push_str(line);
        out.push('\n');
    }
    if !replaced {
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\n# demo\nproblem = single_buyer\nt = 100\nseeds = 3:2\neps = 0.5\nh = 16\ndelta = 0.25\n\n[learner]\nalgo = msmw\n\n[env]\nkind = iid_values\ndist = point_mass\nv = 4.0\n";

    #[test]
    fn parses_and_resolves_sample() {
        let cfg = load(SAMPLE).unwrap();
        assert_eq!(cfg.problem, Problem::SingleBuyer);
        assert_eq!(cfg.t, 100);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.delta, Some(0.25));
        assert_eq!(cfg.learners.len(), 1);
        assert!(matches!(
            cfg.env,
            EnvSpec::IidValues(ValueDist::PointMass { .. })
        ));
    }

    #[test]
    fn repeated_learner_sections_accumulate() {
        let text = format!("{SAMPLE}\n[learner]\nalgo = hedge\n");
        let cfg = load(&text).unwrap();
        assert_eq!(cfg.learners.len(), 2);
        assert_eq!(cfg.learners[1].algo, Algo::Hedge);
    }

    #[test]
    fn errors_name_fields_and_lines() {
        let err = load("problem = nope\nt = 1\nseeds = 0:1\n").unwrap_err();
        assert!(err.to_string().contains("problem"), "{err}");
        let err = parse_config("key value\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_config("a = 1\na = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = load(SAMPLE.replace("kind = iid_values", "kind = what").as_str()).unwrap_err();
        assert!(err.to_string().contains("env.kind"), "{err}");
    }

    #[test]
    fn seeds_forms() {
        assert_eq!(parse_seeds("0:3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("7, 9").unwrap(), vec![7, 9]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("0:0").is_err());
    }

    #[test]
    fn override_replaces_or_injects() {
        let out = override_top(SAMPLE, "h", "64");
        let cfg = load(&out).unwrap();
        assert_eq!(cfg.h, 64.0);
        let out = override_top(SAMPLE, "n", "2");
        let cfg = load(&out).unwrap();
        assert_eq!(cfg.n, 2);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let raw = parse_config("a = 1 # trailing\n# full line\n\n[s]\nb = 2\n").unwrap();
        assert_eq!(raw.top.get("a").unwrap(), "1");
        assert_eq!(raw.sections[0].1.get("b").unwrap(), "2");
    }
}
