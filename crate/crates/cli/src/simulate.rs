//! The `simulate` command: draws a seeded Monte-Carlo stream of a
//! per-sample statistic, writes the raw samples and a summary, and runs
//! the checks requested by the configuration.
//!
//! Check names (requested via `"checks": [...]`; unknown or incompatible
//! names fail fast before any sampling):
//! * `two-block-cap` — the selected mean stays under the information bound
//!   fed by the two-block information cap;
//! * `zero-mean` — the selected mean is statistically zero (for
//!   information-free selection rules);
//! * `selected-reference` — circle noisy-argmax selected mean matches the
//!   analytic `ε·√(π/2)`;
//! * `sup-reference` — circle supremum mean matches the analytic `√(π/2)`;
//! * `quantized-tail` — the quantized tail frequency stays under the
//!   selected-value tail probability at the additive threshold.

use std::path::Path;

use anyhow::{bail, Context};
use genbound_core::bounds::{mi_bound, tail_bound, MiVariant, TailBoundMode};
use genbound_core::process::{
    circle_mi_level, circle_reference, mc_estimate, sample_statistics, two_block_mi_cap,
    CanonicalProcessSpec, ProcessModel, SelectionRule, Statistic,
};
use genbound_core::psi::PsiEnvelope;
use serde::Deserialize;
use serde_json::json;

use crate::config::Overrides;
use crate::output::{estimate_to_json, json_num, num_str, write_csv, write_json, CheckOutcome};
use crate::CmdResult;

/// Default sample count when neither config nor `--samples` provides one.
pub const DEFAULT_SAMPLES: u64 = 100_000;

/// Default seed when neither config nor `--seed` provides one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelConfig,
    pub rule: RuleConfig,
    pub statistic: StatisticConfig,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// The analytic process on the full circle.
    Circle,
    /// Canonical Gaussian process with explicit index points.
    Canonical { points: Vec<Vec<f64>> },
    /// Canonical process on the standard basis of dimension `n`.
    Basis { n: usize },
}

impl ModelConfig {
    fn resolve(&self) -> anyhow::Result<ProcessModel> {
        Ok(match self {
            ModelConfig::Circle => ProcessModel::UnitCircle,
            ModelConfig::Canonical { points } => ProcessModel::Canonical(
                CanonicalProcessSpec::new(points.clone()).context("invalid canonical model")?,
            ),
            ModelConfig::Basis { n } => ProcessModel::Canonical(
                CanonicalProcessSpec::standard_basis(*n).context("invalid basis model")?,
            ),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleConfig {
    Argmax,
    NoisyCircleArgmax { epsilon: f64 },
    TwoBlock { n: usize, m: usize, delta: f64 },
    Custom { kernel: Vec<Vec<f64>> },
}

impl RuleConfig {
    fn resolve(&self) -> SelectionRule {
        match self {
            RuleConfig::Argmax => SelectionRule::Argmax,
            RuleConfig::NoisyCircleArgmax { epsilon } => SelectionRule::NoisyCircleArgmax {
                epsilon: *epsilon,
            },
            RuleConfig::TwoBlock { n, m, delta } => SelectionRule::TwoBlock {
                n: *n,
                m: *m,
                delta: *delta,
            },
            RuleConfig::Custom { kernel } => SelectionRule::Custom {
                kernel: kernel.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StatisticConfig {
    SelectedMean,
    SupMean,
    TailFreq { threshold: f64 },
    /// Circle tail statistic against the dyadic discretization of the
    /// selection: the threshold is derived from the selected-value tail
    /// bound at deviation `u`, using the closed-form level information.
    QuantizedTailFreq { level: i32, u: f64 },
}

/// Derived quantities of the quantized tail statistic, echoed into the
/// summary and consumed by the `quantized-tail` check.
struct QuantizedInfo {
    level: i32,
    u: f64,
    mi: f64,
    threshold: f64,
    probability: f64,
}

struct ResolvedStatistic {
    statistic: Statistic,
    quantized: Option<QuantizedInfo>,
}

impl StatisticConfig {
    fn resolve(&self, rule: &RuleConfig) -> anyhow::Result<ResolvedStatistic> {
        Ok(match self {
            StatisticConfig::SelectedMean => ResolvedStatistic {
                statistic: Statistic::SelectedMean,
                quantized: None,
            },
            StatisticConfig::SupMean => ResolvedStatistic {
                statistic: Statistic::SupMean,
                quantized: None,
            },
            StatisticConfig::TailFreq { threshold } => ResolvedStatistic {
                statistic: Statistic::TailFreq {
                    threshold: *threshold,
                },
                quantized: None,
            },
            StatisticConfig::QuantizedTailFreq { level, u } => {
                let RuleConfig::NoisyCircleArgmax { epsilon } = rule else {
                    bail!(
                        "the quantized-tail-freq statistic needs the noisy-circle-argmax \
                         rule (its threshold depends on the rule's information level)"
                    );
                };
                let mi = circle_mi_level(*epsilon, *level)
                    .context("quantized selection information")?;
                let cells = 1u64
                    .checked_shl((*level + 2).try_into().unwrap_or(u32::MAX))
                    .context("quantization level too deep for the cell count")?;
                let report = tail_bound(
                    &PsiEnvelope::standard(),
                    TailBoundMode::Selected {
                        mi,
                        cardinality: cells,
                    },
                    *u,
                )
                .context("quantized tail bound")?;
                let threshold = report
                    .additive_threshold
                    .expect("standard envelope is subgaussian");
                ResolvedStatistic {
                    statistic: Statistic::QuantizedTailFreq {
                        level: *level,
                        threshold,
                    },
                    quantized: Some(QuantizedInfo {
                        level: *level,
                        u: *u,
                        mi,
                        threshold,
                        probability: report.probability,
                    }),
                }
            }
        })
    }
}

pub fn run(
    config_path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
    extra_tol: f64,
    csv: bool,
) -> CmdResult {
    let config: SimulateConfig = crate::config::load_json(config_path)?;
    let samples = overrides
        .samples
        .or(config.samples)
        .unwrap_or(DEFAULT_SAMPLES);
    let seed = overrides.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    if !extra_tol.is_finite() || extra_tol < 0.0 {
        bail!("--tol must be a nonnegative finite slack, got {extra_tol}");
    }

    let model = config.model.resolve()?;
    let rule = config.rule.resolve();
    let resolved = config.statistic.resolve(&config.rule)?;
    validate_checks(&config)?;

    let values = sample_statistics(&model, &rule, resolved.statistic, samples, seed)
        .context("sampling failed")?;
    let est = mc_estimate(&model, &rule, resolved.statistic, samples, seed)
        .context("estimation failed")?;

    if csv {
        let rows: Vec<Vec<String>> = values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), num_str(*v)])
            .collect();
        write_csv(&out_dir.join("samples.csv"), &["sample", "value"], &rows)?;
    } else {
        write_json(
            &out_dir.join("samples.json"),
            &json!({ "samples": values.iter().map(|&v| json_num(v)).collect::<Vec<_>>() }),
        )?;
    }

    let mut checks = Vec::new();
    for name in &config.checks {
        checks.push(run_check(name, &config, &resolved, &est, extra_tol)?);
    }
    let passed = checks.iter().all(|c| c.passed);

    println!(
        "estimate = {} (std error {}, {} samples)",
        num_str(est.estimate),
        num_str(est.std_error),
        est.samples
    );
    for check in &checks {
        println!(
            "check {:<22} {} ({})",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.detail
        );
    }

    let mut summary = json!({
        "estimate": estimate_to_json(&est),
        "samples": samples,
        "seed": seed,
        "extra_tolerance": extra_tol,
        "checks": checks.iter().map(CheckOutcome::to_json).collect::<Vec<_>>(),
        "passed": passed,
    });
    if let Some(q) = &resolved.quantized {
        summary["quantized"] = json!({
            "level": q.level,
            "u": json_num(q.u),
            "information": json_num(q.mi),
            "threshold": json_num(q.threshold),
            "tail_probability": json_num(q.probability),
        });
    }
    write_json(&out_dir.join("simulate_summary.json"), &summary)?;
    Ok(passed)
}

/// Rejects unknown check names and checks that are incompatible with the
/// configured model/rule/statistic, before any sampling happens.
fn validate_checks(config: &SimulateConfig) -> anyhow::Result<()> {
    for name in &config.checks {
        match name.as_str() {
            "two-block-cap" => {
                let RuleConfig::TwoBlock { n, .. } = &config.rule else {
                    bail!("check `two-block-cap` needs the two-block rule");
                };
                let model_len = match &config.model {
                    ModelConfig::Basis { n } => *n,
                    ModelConfig::Canonical { points } => points.len(),
                    ModelConfig::Circle => bail!(
                        "check `two-block-cap` needs a finite model, not the circle"
                    ),
                };
                if model_len != *n {
                    bail!(
                        "check `two-block-cap`: rule splits {n} indices but the model \
                         has {model_len}"
                    );
                }
                if !matches!(config.statistic, StatisticConfig::SelectedMean) {
                    bail!("check `two-block-cap` needs the selected-mean statistic");
                }
            }
            "zero-mean" => {
                if !matches!(config.statistic, StatisticConfig::SelectedMean) {
                    bail!("check `zero-mean` needs the selected-mean statistic");
                }
            }
            "selected-reference" => {
                if !matches!(config.model, ModelConfig::Circle)
                    || !matches!(config.rule, RuleConfig::NoisyCircleArgmax { .. })
                    || !matches!(config.statistic, StatisticConfig::SelectedMean)
                {
                    bail!(
                        "check `selected-reference` needs the circle model, the \
                         noisy-circle-argmax rule and the selected-mean statistic"
                    );
                }
            }
            "sup-reference" => {
                if !matches!(config.model, ModelConfig::Circle)
                    || !matches!(config.statistic, StatisticConfig::SupMean)
                {
                    bail!(
                        "check `sup-reference` needs the circle model and the sup-mean \
                         statistic"
                    );
                }
            }
            "quantized-tail" => {
                if !matches!(config.statistic, StatisticConfig::QuantizedTailFreq { .. }) {
                    bail!("check `quantized-tail` needs the quantized-tail-freq statistic");
                }
            }
            other => bail!(
                "unknown check `{other}`; available: two-block-cap, zero-mean, \
                 selected-reference, sup-reference, quantized-tail"
            ),
        }
    }
    Ok(())
}

fn run_check(
    name: &str,
    config: &SimulateConfig,
    resolved: &ResolvedStatistic,
    est: &genbound_core::process::McEstimate,
    extra_tol: f64,
) -> anyhow::Result<CheckOutcome> {
    let slack = 3.0 * est.std_error + extra_tol;
    Ok(match name {
        "two-block-cap" => {
            let RuleConfig::TwoBlock { n, m, delta } = &config.rule else {
                unreachable!("validated")
            };
            let cap = two_block_mi_cap(*n, *m, *delta)?;
            let bound = mi_bound(&PsiEnvelope::standard(), cap, MiVariant::Expectation)?;
            CheckOutcome::new(
                "two-block-cap",
                est.estimate <= bound + slack,
                format!(
                    "selected mean {} vs information bound {} (cap {} nats, slack {})",
                    num_str(est.estimate),
                    num_str(bound),
                    num_str(cap),
                    num_str(slack)
                ),
            )
        }
        "zero-mean" => CheckOutcome::new(
            "zero-mean",
            est.estimate.abs() <= slack,
            format!("|mean| = {} vs slack {}", num_str(est.estimate.abs()), num_str(slack)),
        ),
        "selected-reference" => {
            let RuleConfig::NoisyCircleArgmax { epsilon } = &config.rule else {
                unreachable!("validated")
            };
            let reference = circle_reference(*epsilon)?.true_bias;
            CheckOutcome::new(
                "selected-reference",
                (est.estimate - reference).abs() <= slack,
                format!(
                    "mean {} vs analytic {} (slack {})",
                    num_str(est.estimate),
                    num_str(reference),
                    num_str(slack)
                ),
            )
        }
        "sup-reference" => {
            let reference = circle_reference(0.0)?.sup_mean;
            CheckOutcome::new(
                "sup-reference",
                (est.estimate - reference).abs() <= slack,
                format!(
                    "mean {} vs analytic {} (slack {})",
                    num_str(est.estimate),
                    num_str(reference),
                    num_str(slack)
                ),
            )
        }
        "quantized-tail" => {
            let q = resolved.quantized.as_ref().expect("validated");
            CheckOutcome::new(
                "quantized-tail",
                est.estimate <= q.probability + slack,
                format!(
                    "tail frequency {} vs tail probability {} at threshold {} (slack {})",
                    num_str(est.estimate),
                    num_str(q.probability),
                    num_str(q.threshold),
                    num_str(slack)
                ),
            )
        }
        other => unreachable!("validated check `{other}`"),
    })
}
