//! Shared configuration schema: ψ-envelope, tail mode, and level-series
//! descriptions, each resolvable into the library's domain types. All
//! numeric preconditions are enforced here (or by the library constructors
//! these call) before any computation starts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use genbound_core::bounds::{LevelSeries, TailCap, TailMode};
use genbound_core::metric::FiniteMetricSpace;
use genbound_core::process::CanonicalProcessSpec;
use genbound_core::psi::PsiEnvelope;
use serde::Deserialize;

/// Loads and parses a JSON config file; parse errors carry the file name
/// and the line/column of the offending token.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// ψ-envelope description.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    /// `ψ(λ) = λ²σ²/2`.
    Subgaussian { sigma2: f64 },
    /// Piecewise-linear convex envelope through `(λ, ψ(λ))` grid points
    /// starting at `(0, 0)`.
    Grid { points: Vec<(f64, f64)> },
}

impl EnvelopeConfig {
    pub fn resolve(&self) -> anyhow::Result<PsiEnvelope> {
        match self {
            EnvelopeConfig::Subgaussian { sigma2 } => {
                PsiEnvelope::subgaussian(*sigma2).context("invalid subgaussian envelope")
            }
            EnvelopeConfig::Grid { points } => {
                PsiEnvelope::from_grid(points).context("invalid grid envelope")
            }
        }
    }
}

/// Tail handling for a level series.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailConfig {
    /// Values beyond the last entry are exactly zero.
    ZeroAfterLast,
    /// Values beyond the last entry are bounded by an analytic cap.
    AnalyticCap { cap: Option<CapConfig> },
}

/// Analytic per-level cap `k ↦ max(0, slope·k + intercept)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CapConfig {
    Linear { slope: f64, intercept: f64 },
    LogCardinality { slope: f64, intercept: f64 },
}

impl TailConfig {
    pub fn resolve(&self) -> TailMode {
        match self {
            TailConfig::ZeroAfterLast => TailMode::ZeroAfterLast,
            TailConfig::AnalyticCap { cap } => TailMode::AnalyticCap(cap.as_ref().map(|c| match c {
                CapConfig::Linear { slope, intercept } => TailCap::Linear {
                    slope: *slope,
                    intercept: *intercept,
                },
                CapConfig::LogCardinality { slope, intercept } => TailCap::LogCardinality {
                    slope: *slope,
                    intercept: *intercept,
                },
            })),
        }
    }
}

/// A level series: inline values, a CSV file (`k,value` with header), or one
/// of the generated sources.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeriesConfig {
    /// Explicit `values[i]` at levels `k_start + i`.
    Inline {
        k_start: i32,
        values: Vec<f64>,
        tail: TailConfig,
    },
    /// Two-column CSV file with header `k,value`; levels must be contiguous.
    Csv { path: PathBuf, tail: TailConfig },
    /// Closed-form per-level information of the noisy circle argmax, with
    /// its analytic linear cap.
    CircleMi { epsilon: f64, k_max: i32 },
    /// Log cell counts `log 2^{k+2}` of the analytic circle partition, with
    /// the matching cap.
    CircleLogCells { k_max: i32 },
    /// Log greedy covering numbers of an `points`-point circle in the plane,
    /// from the base scale (or `k_min`) down to `k_max`, capped beyond by
    /// the constant `log points` (coverings of a finite space cannot grow
    /// further).
    CircleCovering {
        points: usize,
        #[serde(default)]
        k_min: Option<i32>,
        k_max: i32,
    },
}

/// Flag-level overrides applied on top of config-file values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub k_max: Option<i32>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
}

impl SeriesConfig {
    /// Builds the series; `base_dir` anchors relative CSV paths and
    /// `k_max_override` (the `--kmax` flag) replaces any configured `k_max`.
    pub fn resolve(
        &self,
        base_dir: &Path,
        k_max_override: Option<i32>,
    ) -> anyhow::Result<LevelSeries> {
        match self {
            SeriesConfig::Inline {
                k_start,
                values,
                tail,
            } => LevelSeries::new(*k_start, values.clone(), tail.resolve())
                .context("invalid inline series"),
            SeriesConfig::Csv { path, tail } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let entries = read_series_csv(&full)?;
                LevelSeries::from_entries(&entries, tail.resolve())
                    .with_context(|| format!("invalid series in {}", full.display()))
            }
            SeriesConfig::CircleMi { epsilon, k_max } => {
                let k_max = k_max_override.unwrap_or(*k_max);
                genbound_core::process::circle_mi_series(*epsilon, k_max)
                    .context("invalid circle information series")
            }
            SeriesConfig::CircleLogCells { k_max } => {
                let k_max = k_max_override.unwrap_or(*k_max);
                genbound_core::process::circle_log_cells_series(k_max)
                    .context("invalid circle cell series")
            }
            SeriesConfig::CircleCovering {
                points,
                k_min,
                k_max,
            } => {
                let k_max = k_max_override.unwrap_or(*k_max);
                circle_covering_series(*points, *k_min, k_max)
            }
        }
    }
}

fn read_series_csv(path: &Path) -> anyhow::Result<Vec<(i32, f64)>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening series file {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "k" || &headers[1] != "value" {
        bail!(
            "{}: expected header `k,value`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let k: i32 = record[0]
            .parse()
            .with_context(|| format!("{}: row {}: bad level", path.display(), i + 2))?;
        let v: f64 = record[1]
            .parse()
            .with_context(|| format!("{}: row {}: bad value", path.display(), i + 2))?;
        entries.push((k, v));
    }
    Ok(entries)
}

/// Builds the log-covering-number series of an equally spaced circle of
/// `points` points under the planar (chord) metric, and returns the space
/// alongside so callers can run oracle comparisons on the same object.
pub fn circle_covering_space(points: usize) -> anyhow::Result<(CanonicalProcessSpec, FiniteMetricSpace)> {
    let spec = CanonicalProcessSpec::circle_points(points).context("invalid circle point count")?;
    let space = spec.metric_space().context("degenerate circle space")?;
    Ok((spec, space))
}

fn circle_covering_series(
    points: usize,
    k_min: Option<i32>,
    k_max: i32,
) -> anyhow::Result<LevelSeries> {
    let (_, space) = circle_covering_space(points)?;
    let base = space
        .base_scale_index()
        .context("no base scale for the covering series")?;
    let k_min = k_min.unwrap_or(base);
    if k_min > base {
        bail!(
            "k_min = {k_min} starts below the whole-space scale (base index {base}); \
             the covering series must start at or above it"
        );
    }
    if k_max < k_min {
        bail!("k_max = {k_max} is above k_min = {k_min}");
    }
    let n = space.len();
    let mut values = Vec::new();
    for k in k_min..=k_max {
        let scale = 2.0_f64.powi(-k);
        let cover = space
            .covering_number(scale, genbound_core::metric::CoveringMode::Greedy)
            .context("covering number failed")?;
        values.push((cover as f64).ln());
        if cover == n {
            // Finer scales cannot need more centers than points.
            break;
        }
    }
    LevelSeries::new(
        k_min,
        values,
        TailMode::AnalyticCap(Some(TailCap::Linear {
            slope: 0.0,
            intercept: (n as f64).ln(),
        })),
    )
    .context("invalid covering series")
}
