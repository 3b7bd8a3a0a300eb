//! The `bounds` command: evaluates a configured list of bound operations
//! and writes one JSON report per operation plus a summary with
//! consistency checks.
//!
//! Automatic checks run whenever the configuration makes them meaningful:
//! * a `small-subset` operation with `alpha = 1` must reproduce the plain
//!   covering-number chaining bound of its first series exactly;
//! * a `dudley` operation fed by a `circle-covering` series must dominate
//!   a seeded Monte-Carlo estimate of the expected supremum over the same
//!   circle points.

use std::path::Path;

use anyhow::{bail, Context};
use genbound_core::bounds::{
    chained_bound, dudley_bound, lipschitz_net_bound, maximal_bound, mi_bound,
    small_subset_bound, tail_bound, ChainedVariant, MiVariant, TailBoundMode,
};
use genbound_core::process::{mc_estimate, ProcessModel, SelectionRule, Statistic};
use genbound_core::psi::PsiEnvelope;
use serde::Deserialize;
use serde_json::json;

use crate::config::{circle_covering_space, EnvelopeConfig, Overrides, SeriesConfig};
use crate::output::{
    json_num, num_str, report_to_json, tail_report_to_json, write_csv, write_json, CheckOutcome,
};
use crate::CmdResult;

/// Default series tail tolerance when neither the operation nor `--tol`
/// provides one.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;

/// Default sample count for the in-run Monte-Carlo domination check.
pub const DEFAULT_CHECK_SAMPLES: u64 = 100_000;

/// Default seed for the in-run Monte-Carlo domination check.
pub const DEFAULT_CHECK_SEED: u64 = 7;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Envelope used by operations that do not override it. Defaults to
    /// the standard (unit-variance subgaussian) envelope.
    pub envelope: Option<EnvelopeConfig>,
    /// Sample count for in-run Monte-Carlo checks.
    pub samples: Option<u64>,
    /// Seed for in-run Monte-Carlo checks.
    pub seed: Option<u64>,
    pub ops: Vec<OpConfig>,
}

/// A mutual-information value: a number, or the string `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MiValue {
    Number(f64),
    Text(String),
}

impl MiValue {
    pub fn resolve(&self) -> anyhow::Result<f64> {
        match self {
            MiValue::Number(x) => Ok(*x),
            MiValue::Text(s) if s == "inf" => Ok(f64::INFINITY),
            MiValue::Text(s) => bail!("mutual information must be a number or \"inf\", got `{s}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiVariantConfig {
    #[default]
    Expectation,
    AbsoluteExpectation,
    ExpectedAbsolute,
}

impl MiVariantConfig {
    fn resolve(self) -> MiVariant {
        match self {
            MiVariantConfig::Expectation => MiVariant::Expectation,
            MiVariantConfig::AbsoluteExpectation => MiVariant::AbsoluteExpectation,
            MiVariantConfig::ExpectedAbsolute => MiVariant::ExpectedAbsolute,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainedVariantConfig {
    #[default]
    Expectation,
    Absolute,
}

impl ChainedVariantConfig {
    fn resolve(self) -> ChainedVariant {
        match self {
            ChainedVariantConfig::Expectation => ChainedVariant::Expectation,
            ChainedVariantConfig::Absolute => ChainedVariant::Absolute,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailModeConfig {
    Sup { cardinality: u64 },
    Selected { mi: MiValue, cardinality: u64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OpConfig {
    /// `ψ*⁻¹(log n)` (or `log 2n` when absolute).
    Maximal {
        cardinality: u64,
        #[serde(default)]
        absolute: bool,
        envelope: Option<EnvelopeConfig>,
    },
    /// One-shot information bound on a selected value.
    Mi {
        mi: MiValue,
        #[serde(default)]
        variant: MiVariantConfig,
        envelope: Option<EnvelopeConfig>,
    },
    /// Covering-number chaining bound.
    Dudley { series: SeriesConfig },
    /// Per-level information chaining bound.
    Chained {
        series: SeriesConfig,
        #[serde(default)]
        variant: ChainedVariantConfig,
        tolerance: Option<f64>,
        envelope: Option<EnvelopeConfig>,
    },
    /// Interpolated two-series bound with the mixture-entropy price.
    SmallSubset {
        alpha: f64,
        series1: SeriesConfig,
        series2: SeriesConfig,
        tolerance: Option<f64>,
    },
    /// Net-scale / information trade-off minimized over a candidate grid.
    Lipschitz {
        expected_lipschitz: f64,
        candidates: Vec<(f64, f64)>,
        envelope: Option<EnvelopeConfig>,
    },
    /// Tail probability of the supremum or of a selected value.
    Tail {
        mode: TailModeConfig,
        u: f64,
        envelope: Option<EnvelopeConfig>,
    },
}

impl OpConfig {
    fn tag(&self) -> &'static str {
        match self {
            OpConfig::Maximal { .. } => "maximal",
            OpConfig::Mi { .. } => "mi",
            OpConfig::Dudley { .. } => "dudley",
            OpConfig::Chained { .. } => "chained",
            OpConfig::SmallSubset { .. } => "small-subset",
            OpConfig::Lipschitz { .. } => "lipschitz",
            OpConfig::Tail { .. } => "tail",
        }
    }
}

struct OpResult {
    tag: &'static str,
    bound_value: f64,
    report: serde_json::Value,
}

pub fn run(config_path: &Path, out_dir: &Path, overrides: &Overrides, csv: bool) -> CmdResult {
    let config: BoundsConfig = crate::config::load_json(config_path)?;
    if config.ops.is_empty() {
        bail!(
            "{}: `ops` must list at least one operation",
            config_path.display()
        );
    }
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    let default_env = match &config.envelope {
        Some(cfg) => cfg.resolve()?,
        None => PsiEnvelope::standard(),
    };
    let samples = overrides
        .samples
        .or(config.samples)
        .unwrap_or(DEFAULT_CHECK_SAMPLES);
    let seed = overrides.seed.or(config.seed).unwrap_or(DEFAULT_CHECK_SEED);

    let mut results = Vec::new();
    let mut checks = Vec::new();
    for (idx, op) in config.ops.iter().enumerate() {
        let result = evaluate_op(op, idx, &default_env, base_dir, overrides)
            .with_context(|| format!("ops[{idx}] ({})", op.tag()))?;
        run_checks(op, idx, &result, base_dir, overrides, samples, seed, &mut checks)
            .with_context(|| format!("ops[{idx}] ({}) check", op.tag()))?;
        write_json(
            &out_dir.join(format!("bound_{idx}_{}.json", result.tag)),
            &result.report,
        )?;
        println!(
            "op {idx} {:<14} bound = {}",
            result.tag,
            num_str(result.bound_value)
        );
        results.push(result);
    }

    let passed = checks.iter().all(|c| c.passed);
    for check in &checks {
        println!(
            "check {:<34} {} ({})",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.detail
        );
    }

    let summary = json!({
        "ops": results
            .iter()
            .enumerate()
            .map(|(i, r)| json!({
                "index": i,
                "op": r.tag,
                "bound_value": json_num(r.bound_value),
                "report": r.report,
            }))
            .collect::<Vec<_>>(),
        "checks": checks.iter().map(CheckOutcome::to_json).collect::<Vec<_>>(),
        "passed": passed,
    });
    write_json(&out_dir.join("bounds_summary.json"), &summary)?;
    if csv {
        let rows: Vec<Vec<String>> = results
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), r.tag.to_string(), num_str(r.bound_value)])
            .collect();
        write_csv(
            &out_dir.join("bounds_summary.csv"),
            &["index", "op", "bound_value"],
            &rows,
        )?;
    }
    Ok(passed)
}

fn op_env(
    local: &Option<EnvelopeConfig>,
    default_env: &PsiEnvelope,
) -> anyhow::Result<PsiEnvelope> {
    match local {
        Some(cfg) => cfg.resolve(),
        None => Ok(default_env.clone()),
    }
}

fn tolerance_for(op_tolerance: Option<f64>, overrides: &Overrides) -> f64 {
    overrides
        .tolerance
        .or(op_tolerance)
        .unwrap_or(DEFAULT_TAIL_TOLERANCE)
}

fn evaluate_op(
    op: &OpConfig,
    idx: usize,
    default_env: &PsiEnvelope,
    base_dir: &Path,
    overrides: &Overrides,
) -> anyhow::Result<OpResult> {
    let tag = op.tag();
    let (bound_value, report) = match op {
        OpConfig::Maximal {
            cardinality,
            absolute,
            envelope,
        } => {
            let env = op_env(envelope, default_env)?;
            let value = maximal_bound(&env, *cardinality, *absolute)?;
            (
                value,
                json!({
                    "formula": if *absolute { "maximal-absolute" } else { "maximal" },
                    "cardinality": cardinality,
                    "bound_value": json_num(value),
                }),
            )
        }
        OpConfig::Mi {
            mi,
            variant,
            envelope,
        } => {
            let env = op_env(envelope, default_env)?;
            let mi_value = mi.resolve()?;
            let value = mi_bound(&env, mi_value, variant.resolve())?;
            (
                value,
                json!({
                    "formula": match variant.resolve() {
                        MiVariant::Expectation => "mi-expectation",
                        MiVariant::AbsoluteExpectation => "mi-absolute-expectation",
                        MiVariant::ExpectedAbsolute => "mi-expected-absolute",
                    },
                    "mi": json_num(mi_value),
                    "bound_value": json_num(value),
                }),
            )
        }
        OpConfig::Dudley { series } => {
            let series = series.resolve(base_dir, overrides.k_max)?;
            let report = dudley_bound(&series)?;
            (report.bound_value, report_to_json(&report))
        }
        OpConfig::Chained {
            series,
            variant,
            tolerance,
            envelope,
        } => {
            let env = op_env(envelope, default_env)?;
            let series = series.resolve(base_dir, overrides.k_max)?;
            let report = chained_bound(
                &env,
                &series,
                variant.resolve(),
                tolerance_for(*tolerance, overrides),
            )?;
            (report.bound_value, report_to_json(&report))
        }
        OpConfig::SmallSubset {
            alpha,
            series1,
            series2,
            tolerance,
        } => {
            let s1 = series1.resolve(base_dir, overrides.k_max)?;
            let s2 = series2.resolve(base_dir, overrides.k_max)?;
            let report =
                small_subset_bound(*alpha, &s1, &s2, tolerance_for(*tolerance, overrides))?;
            (report.bound_value, report_to_json(&report))
        }
        OpConfig::Lipschitz {
            expected_lipschitz,
            candidates,
            envelope,
        } => {
            let env = op_env(envelope, default_env)?;
            let (scale, value) = lipschitz_net_bound(*expected_lipschitz, &env, candidates)?;
            (
                value,
                json!({
                    "formula": "lipschitz-net",
                    "best_scale": json_num(scale),
                    "expected_lipschitz": json_num(*expected_lipschitz),
                    "bound_value": json_num(value),
                }),
            )
        }
        OpConfig::Tail { mode, u, envelope } => {
            let env = op_env(envelope, default_env)?;
            let mode = match mode {
                TailModeConfig::Sup { cardinality } => TailBoundMode::Sup {
                    cardinality: *cardinality,
                },
                TailModeConfig::Selected { mi, cardinality } => TailBoundMode::Selected {
                    mi: mi.resolve()?,
                    cardinality: *cardinality,
                },
            };
            let report = tail_bound(&env, mode, *u)?;
            (report.probability, tail_report_to_json(&report))
        }
    };
    let _ = idx;
    Ok(OpResult {
        tag,
        bound_value,
        report,
    })
}

/// Configuration-triggered consistency checks.
#[allow(clippy::too_many_arguments)]
fn run_checks(
    op: &OpConfig,
    idx: usize,
    result: &OpResult,
    base_dir: &Path,
    overrides: &Overrides,
    samples: u64,
    seed: u64,
    checks: &mut Vec<CheckOutcome>,
) -> anyhow::Result<()> {
    match op {
        OpConfig::SmallSubset {
            alpha, series1, ..
        } if *alpha == 1.0 => {
            let s1 = series1.resolve(base_dir, overrides.k_max)?;
            let plain = dudley_bound(&s1)?;
            let diff = (plain.bound_value - result.bound_value).abs();
            checks.push(CheckOutcome::new(
                format!("small-subset-alpha-one[{idx}]"),
                diff <= 1e-12,
                format!(
                    "interpolated {} vs plain chaining {} (|diff| = {})",
                    num_str(result.bound_value),
                    num_str(plain.bound_value),
                    num_str(diff)
                ),
            ));
        }
        OpConfig::Dudley {
            series: SeriesConfig::CircleCovering { points, .. },
        } => {
            let (spec, _) = circle_covering_space(*points)?;
            let est = mc_estimate(
                &ProcessModel::Canonical(spec),
                &SelectionRule::Argmax,
                Statistic::SupMean,
                samples,
                seed,
            )?;
            let slack = 3.0 * est.std_error;
            checks.push(CheckOutcome::new(
                format!("dudley-dominates-sup[{idx}]"),
                est.estimate <= result.bound_value + slack,
                format!(
                    "mc sup mean {} (3·stderr = {}) vs chaining bound {}",
                    num_str(est.estimate),
                    num_str(slack),
                    num_str(result.bound_value)
                ),
            ));
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mi_values_parse_numbers_and_infinity() {
        let v: MiValue = serde_json::from_str("0.5").unwrap();
        assert_eq!(v.resolve().unwrap(), 0.5);
        let v: MiValue = serde_json::from_str("\"inf\"").unwrap();
        assert!(v.resolve().unwrap().is_infinite());
        let v: MiValue = serde_json::from_str("\"nonsense\"").unwrap();
        assert!(v.resolve().is_err());
    }

    #[test]
    fn op_configs_deserialize() {
        let text = r#"{
            "ops": [
                {"op": "maximal", "cardinality": 8},
                {"op": "mi", "mi": "inf"},
                {"op": "tail", "mode": {"kind": "sup", "cardinality": 4}, "u": 1.0},
                {"op": "tail", "mode": {"kind": "selected", "mi": 0.3, "cardinality": 4}, "u": 1.0}
            ]
        }"#;
        let config: BoundsConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.ops.len(), 4);
        assert_eq!(config.ops[0].tag(), "maximal");
        assert_eq!(config.ops[3].tag(), "tail");
        // Unknown op fields are rejected with a named error.
        let bad = r#"{"ops": [{"op": "maximal", "cardinality": 8, "bogus": 1}]}"#;
        assert!(serde_json::from_str::<BoundsConfig>(bad).is_err());
    }
}
