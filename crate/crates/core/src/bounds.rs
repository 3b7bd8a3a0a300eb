//! Bound engine: every expected-supremum / expected-value / tail bound in
//! the library as a pure function of precomputed metric and information
//! inputs, with explicit series-truncation control and per-level reporting.
//!
//! Chaining-style bounds consume a [`LevelSeries`]: per-resolution values
//! `v_k` (either log covering numbers or per-level mutual informations, in
//! nats) indexed by dyadic scale `2^{-k}`. The mathematical objects are
//! infinite sums `Σ_{k ≥ k₁} coeff · 2^{-k} · f(v_k)`; a series therefore
//! declares how it continues past its last entry ([`TailMode`]): either the
//! values are identically zero afterwards, or an analytic per-level cap is
//! supplied and the engine sums the capped tail for the caller (closed form
//! for constant caps, iteration with a geometric-remainder majorant
//! otherwise, so the reported bound never understates the infinite sum).
//! Silent truncation is deliberately impossible.
//!
//! Printed constants are kept exactly as stated by the source formulas: `6`
//! for the covering-number (Dudley-type) and two-subset bounds, `3√2` for
//! the chained mutual-information bound. Infinite mutual information is a
//! first-class value: [`mi_bound`] maps it to `+∞` rather than an error.
//! Probability bounds are clamped to `[0, 1]`.

use alloc::vec::Vec;

use crate::fmath;
use crate::info;
use crate::psi::{psi_star_inverse, PsiEnvelope, PsiError};

/// Coefficient of the covering-number and two-subset chaining bounds.
pub const DUDLEY_COEFF: f64 = 6.0;

/// Coefficient of the chained mutual-information bound: `3√2`.
pub const CHAINING_COEFF: f64 = 3.0 * core::f64::consts::SQRT_2;

/// A [`BoundReport`] must satisfy `Σ per-level terms + tail = bound` within
/// this tolerance.
pub const REPORT_CONSISTENCY_TOL: f64 = 1e-12;

/// Levels are restricted to this symmetric range so every dyadic weight
/// `2^{-k}` stays a normal float.
pub const MAX_LEVEL_MAGNITUDE: i32 = 900;

/// Iteration cap for tail summation.
const MAX_TAIL_ITERS: u32 = 10_000;

const LN_2: f64 = core::f64::consts::LN_2;

/// Errors from series construction and bound evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundError {
    #[error("level series must contain at least one entry")]
    EmptySeries,
    #[error("level {k} carries non-finite value {value}")]
    NonFiniteValue { k: i32, value: f64 },
    #[error("level {k} carries negative value {value}")]
    NegativeValue { k: i32, value: f64 },
    #[error("level {k} outside the supported range ±{max}", max = MAX_LEVEL_MAGNITUDE)]
    LevelOutOfRange { k: i32 },
    #[error("entries must advance by exactly one level: expected {expected}, found {found}")]
    NonContiguousLevels { expected: i32, found: i32 },
    #[error("tail cap coefficients must be finite and nonnegative")]
    InvalidTailCap,
    #[error("series declares an analytic-cap tail but supplies no cap")]
    MissingTailCap,
    #[error("tail estimate {tail_estimate} exceeds the requested tolerance {tolerance}; supply more levels")]
    TailTooLoose { tail_estimate: f64, tolerance: f64 },
    #[error("tail tolerance must be positive and finite, got {value}")]
    InvalidTolerance { value: f64 },
    #[error("series ranges differ: [{left_start}, {left_end}] vs [{right_start}, {right_end}]")]
    RangeMismatch {
        left_start: i32,
        left_end: i32,
        right_start: i32,
        right_end: i32,
    },
    #[error("mixture weight must lie in [0, 1], got {value}")]
    InvalidAlpha { value: f64 },
    #[error("index set must contain at least one point")]
    ZeroCardinality,
    #[error("mutual information must be a nonnegative real or +inf, got {value}")]
    InvalidMi { value: f64 },
    #[error("the selected-point tail bound requires finite mutual information")]
    InfiniteMi,
    #[error("deviation level must be nonnegative, got {value}")]
    NegativeLevel { value: f64 },
    #[error("the selected-point tail bound is undefined at mi = u = 0")]
    UndefinedAtZero,
    #[error("candidate list must not be empty")]
    EmptyCandidates,
    #[error("candidate (scale {scale}, mi {mi}) is invalid: scale must be positive and finite, mi nonnegative and finite")]
    InvalidCandidate { scale: f64, mi: f64 },
    #[error("expected Lipschitz constant must be nonnegative and finite, got {value}")]
    InvalidLipschitzConstant { value: f64 },
    #[error(transparent)]
    Psi(#[from] PsiError),
}

/// Identifies which formula produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Formula {
    Dudley,
    ChainedMi,
    ChainedMiAbsolute,
    SmallSubset,
    Maximal,
    MaximalAbsolute,
    MiExpectation,
    MiAbsoluteExpectation,
    MiExpectedAbsolute,
    LipschitzNet,
    TailSup,
    TailSelected,
}

impl Formula {
    /// Stable kebab-case tag, e.g. for CSV output.
    pub fn as_str(&self) -> &'static str {
        match self {
            Formula::Dudley => "dudley",
            Formula::ChainedMi => "chained-mi",
            Formula::ChainedMiAbsolute => "chained-mi-absolute",
            Formula::SmallSubset => "small-subset",
            Formula::Maximal => "maximal",
            Formula::MaximalAbsolute => "maximal-absolute",
            Formula::MiExpectation => "mi-expectation",
            Formula::MiAbsoluteExpectation => "mi-absolute-expectation",
            Formula::MiExpectedAbsolute => "mi-expected-absolute",
            Formula::LipschitzNet => "lipschitz-net",
            Formula::TailSup => "tail-sup",
            Formula::TailSelected => "tail-selected",
        }
    }
}

/// Analytic per-level cap `v_k ≤ max(0, slope·k + intercept)` used to sum a
/// series tail. Both kinds share the affine form; they differ in what the
/// capped quantity is.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TailCap {
    /// Cap on per-level mutual information.
    Linear { slope: f64, intercept: f64 },
    /// Cap on log covering/cell counts.
    LogCardinality { slope: f64, intercept: f64 },
}

impl TailCap {
    fn coeffs(&self) -> (f64, f64) {
        match *self {
            TailCap::Linear { slope, intercept } => (slope, intercept),
            TailCap::LogCardinality { slope, intercept } => (slope, intercept),
        }
    }

    /// Cap value at level `k`.
    pub fn eval(&self, k: i32) -> f64 {
        let (s, i) = self.coeffs();
        let v = s * k as f64 + i;
        if v > 0.0 {
            v
        } else {
            0.0
        }
    }

    fn validate(&self) -> Result<(), BoundError> {
        let (s, i) = self.coeffs();
        if !s.is_finite() || !i.is_finite() || s < 0.0 || i < 0.0 {
            return Err(BoundError::InvalidTailCap);
        }
        Ok(())
    }
}

/// How a series continues past its last entry.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TailMode {
    /// Values are identically zero beyond the last entry.
    ZeroAfterLast,
    /// Values continue but are dominated by the analytic cap. Declaring
    /// this mode without a cap makes tail-consuming bounds fail with
    /// [`BoundError::MissingTailCap`] instead of silently truncating.
    AnalyticCap(Option<TailCap>),
}

/// Per-resolution input series for the chaining-style bounds: nonnegative
/// finite values (nats) at consecutive dyadic levels `k_start, k_start+1, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSeries {
    k_start: i32,
    values: Vec<f64>,
    tail_mode: TailMode,
}

impl LevelSeries {
    /// Builds a series from dense values starting at `k_start`.
    pub fn new(k_start: i32, values: Vec<f64>, tail_mode: TailMode) -> Result<Self, BoundError> {
        if values.is_empty() {
            return Err(BoundError::EmptySeries);
        }
        let k_end = k_start
            .checked_add(values.len() as i32 - 1)
            .ok_or(BoundError::LevelOutOfRange { k: k_start })?;
        if k_start < -MAX_LEVEL_MAGNITUDE || k_end > MAX_LEVEL_MAGNITUDE {
            return Err(BoundError::LevelOutOfRange {
                k: if k_start < -MAX_LEVEL_MAGNITUDE {
                    k_start
                } else {
                    k_end
                },
            });
        }
        for (i, &v) in values.iter().enumerate() {
            let k = k_start + i as i32;
            if !v.is_finite() {
                return Err(BoundError::NonFiniteValue { k, value: v });
            }
            if v < 0.0 {
                return Err(BoundError::NegativeValue { k, value: v });
            }
        }
        if let TailMode::AnalyticCap(Some(cap)) = tail_mode {
            cap.validate()?;
        }
        Ok(Self {
            k_start,
            values,
            tail_mode,
        })
    }

    /// Builds a series from explicit `(k, value)` entries, which must
    /// advance by exactly one level.
    pub fn from_entries(entries: &[(i32, f64)], tail_mode: TailMode) -> Result<Self, BoundError> {
        if entries.is_empty() {
            return Err(BoundError::EmptySeries);
        }
        let k_start = entries[0].0;
        let mut values = Vec::with_capacity(entries.len());
        for (i, &(k, v)) in entries.iter().enumerate() {
            let expected = k_start + i as i32;
            if k != expected {
                return Err(BoundError::NonContiguousLevels { expected, found: k });
            }
            values.push(v);
        }
        Self::new(k_start, values, tail_mode)
    }

    /// First level.
    pub fn k_start(&self) -> i32 {
        self.k_start
    }

    /// Last level carrying an explicit value.
    pub fn k_end(&self) -> i32 {
        self.k_start + self.values.len() as i32 - 1
    }

    /// Number of explicit levels.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: construction rejects empty series.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Dense values from `k_start`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(k, value)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.k_start + i as i32, v))
    }

    /// Declared continuation past the last entry.
    pub fn tail_mode(&self) -> TailMode {
        self.tail_mode
    }
}

/// One reported chaining term: `term = coeff · 2^{-k} · f(value_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LevelTerm {
    pub k: i32,
    pub term: f64,
}

/// Full evaluation record of a series bound.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundReport {
    /// Total bound; `Σ per_level_terms + tail_estimate` within
    /// [`REPORT_CONSISTENCY_TOL`]. May be `+∞` only when an input is.
    pub bound_value: f64,
    /// One term per supplied level.
    pub per_level_terms: Vec<LevelTerm>,
    /// Last level summed explicitly; the tail starts at `truncation_k + 1`.
    pub truncation_k: i32,
    /// Upper bound on the remaining infinite tail (never an underestimate).
    pub tail_estimate: f64,
    /// Which formula produced this report.
    pub formula_id: Formula,
}

impl BoundReport {
    /// Checks the internal consistency invariant
    /// `|Σ terms + tail − bound| ≤ tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let sum: f64 = self.per_level_terms.iter().map(|t| t.term).sum();
        fmath::abs(sum + self.tail_estimate - self.bound_value) <= tol
    }
}

/// Report of a tail-probability bound.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TailReport {
    /// Probability bound, clamped to `[0, 1]`.
    pub probability: f64,
    /// Deviation threshold the probability refers to.
    pub threshold: f64,
    /// Additive-form threshold `√(2σ²·mi) + √(2σ²·u)`; present only for
    /// subgaussian envelopes in selected mode, where the same probability
    /// also holds at this (generally larger) threshold.
    pub additive_threshold: Option<f64>,
    /// Which formula produced this report.
    pub formula_id: Formula,
}

/// Variant selector for [`mi_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiVariant {
    /// Bound on `E[X_W]`.
    Expectation,
    /// Bound on `|E[X_W]|` (same value as `Expectation`).
    AbsoluteExpectation,
    /// Bound on `E[|X_W|]`; adds `log 2` inside the dual inverse.
    ExpectedAbsolute,
}

/// Variant selector for [`chained_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainedVariant {
    /// Bound on `E[X_W]`.
    Expectation,
    /// Bound on `E[|X_W − X_{t₀}|]`; adds `log 2` inside every level term.
    Absolute,
}

/// Mode selector for [`tail_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBoundMode {
    /// Tail of `sup_t X_t` over a finite index set.
    Sup { cardinality: u64 },
    /// Tail of `X_W` for a selected index with known mutual information.
    Selected { mi: f64, cardinality: u64 },
}

/// Expected supremum of finitely many increments:
/// `E[sup X_t] ≤ ψ*⁻¹(log n)`, or `ψ*⁻¹(log 2n)` for the absolute variant
/// `E[sup |X_t|]`.
pub fn maximal_bound(
    env: &PsiEnvelope,
    cardinality: u64,
    absolute: bool,
) -> Result<f64, BoundError> {
    if cardinality == 0 {
        return Err(BoundError::ZeroCardinality);
    }
    let mut arg = fmath::ln(cardinality as f64);
    if absolute {
        arg += LN_2;
    }
    Ok(psi_star_inverse(env, arg)?)
}

/// Expected value at a selected index with known mutual information `mi`
/// between the selector and the process: `ψ*⁻¹(mi)` for (absolute)
/// expectation, `ψ*⁻¹(mi + log 2)` for the expected absolute value.
/// Infinite `mi` propagates to `+∞`.
pub fn mi_bound(env: &PsiEnvelope, mi: f64, variant: MiVariant) -> Result<f64, BoundError> {
    if mi.is_nan() || mi < 0.0 {
        return Err(BoundError::InvalidMi { value: mi });
    }
    if mi == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let arg = match variant {
        MiVariant::Expectation | MiVariant::AbsoluteExpectation => mi,
        MiVariant::ExpectedAbsolute => mi + LN_2,
    };
    Ok(psi_star_inverse(env, arg)?)
}

/// Covering-number chaining bound `6 Σ_k 2^{-k} √(log N(T, d, 2^{-k}))`.
///
/// The series values are log covering numbers at scales `2^{-k}`; levels
/// below `k_start` contribute zero (one ball covers). The tail past the
/// last entry is summed per the series' [`TailMode`] to machine
/// convergence; no tolerance is enforced.
pub fn dudley_bound(series: &LevelSeries) -> Result<BoundReport, BoundError> {
    let unit = |v: f64| -> Result<f64, BoundError> { Ok(fmath::sqrt(v)) };
    let (terms, partial) = sum_levels(DUDLEY_COEFF, series.k_start, &series.values, 0.0, &unit)?;
    let tail_arg = TailArg::single(series.tail_mode, 1.0, 0.0)?;
    let tail = tail_sum(
        DUDLEY_COEFF,
        series.k_end() + 1,
        &tail_arg,
        &unit,
        None,
    )?;
    Ok(BoundReport {
        bound_value: partial + tail,
        per_level_terms: terms,
        truncation_k: series.k_end(),
        tail_estimate: tail,
        formula_id: Formula::Dudley,
    })
}

/// Chained mutual-information bound.
///
/// The series values are per-level mutual informations `I_k` between the
/// quantized selected index and the process. Subgaussian envelopes use the
/// printed form `3√2 Σ 2^{-k} √(σ²·(I_k [+ log 2]))` (exactly the stated
/// formula at `σ² = 1`); general envelopes use the dual-inverse form
/// `3√2 Σ 2^{-k} ψ*⁻¹(I_k [+ log 2])`. The tail past the last entry is
/// summed from the declared analytic cap and must come out at most
/// `tail_tolerance`, otherwise [`BoundError::TailTooLoose`].
pub fn chained_bound(
    env: &PsiEnvelope,
    series: &LevelSeries,
    variant: ChainedVariant,
    tail_tolerance: f64,
) -> Result<BoundReport, BoundError> {
    if !tail_tolerance.is_finite() || tail_tolerance <= 0.0 {
        return Err(BoundError::InvalidTolerance {
            value: tail_tolerance,
        });
    }
    let shift = match variant {
        ChainedVariant::Expectation => 0.0,
        ChainedVariant::Absolute => LN_2,
    };
    let unit = chain_unit(env);
    let (terms, partial) = sum_levels(CHAINING_COEFF, series.k_start, &series.values, shift, &unit)?;
    let tail_arg = TailArg::single(series.tail_mode, 1.0, shift)?;
    let tail = tail_sum(
        CHAINING_COEFF,
        series.k_end() + 1,
        &tail_arg,
        &unit,
        Some(tail_tolerance),
    )?;
    Ok(BoundReport {
        bound_value: partial + tail,
        per_level_terms: terms,
        truncation_k: series.k_end(),
        tail_estimate: tail,
        formula_id: match variant {
            ChainedVariant::Expectation => Formula::ChainedMi,
            ChainedVariant::Absolute => Formula::ChainedMiAbsolute,
        },
    })
}

/// Two-subset chaining bound
/// `6 Σ 2^{-k} √(α·log N₁_k + (1−α)·log N₂_k + H(α))` where `H` is the
/// binary entropy and the two series carry log covering numbers of the two
/// subsets over the same levels.
///
/// At `α = 1` (or `0`) this reduces bit-for-bit to [`dudley_bound`] of the
/// surviving series. When both series end, the constant `H(α)` keeps the
/// tail alive; it is summed in closed form and checked against
/// `tail_tolerance`.
pub fn small_subset_bound(
    alpha: f64,
    series1: &LevelSeries,
    series2: &LevelSeries,
    tail_tolerance: f64,
) -> Result<BoundReport, BoundError> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(BoundError::InvalidAlpha { value: alpha });
    }
    if !tail_tolerance.is_finite() || tail_tolerance <= 0.0 {
        return Err(BoundError::InvalidTolerance {
            value: tail_tolerance,
        });
    }
    if series1.k_start != series2.k_start || series1.len() != series2.len() {
        return Err(BoundError::RangeMismatch {
            left_start: series1.k_start,
            left_end: series1.k_end(),
            right_start: series2.k_start,
            right_end: series2.k_end(),
        });
    }
    let h = info::binary_entropy(alpha).map_err(|_| BoundError::InvalidAlpha { value: alpha })?;
    let args: Vec<f64> = series1
        .values
        .iter()
        .zip(series2.values.iter())
        .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b + h)
        .collect();
    let unit = |v: f64| -> Result<f64, BoundError> { Ok(fmath::sqrt(v)) };
    let (terms, partial) = sum_levels(DUDLEY_COEFF, series1.k_start, &args, 0.0, &unit)?;
    let mut tail_arg = TailArg::single(series1.tail_mode, alpha, h)?;
    tail_arg.push(series2.tail_mode, 1.0 - alpha)?;
    let tail = tail_sum(
        DUDLEY_COEFF,
        series1.k_end() + 1,
        &tail_arg,
        &unit,
        Some(tail_tolerance),
    )?;
    Ok(BoundReport {
        bound_value: partial + tail,
        per_level_terms: terms,
        truncation_k: series1.k_end(),
        tail_estimate: tail,
        formula_id: Formula::SmallSubset,
    })
}

/// Lipschitz/net trade-off bound: minimizes
/// `ε·E[C] + ψ*⁻¹(I_ε)` over the supplied candidate grid of
/// `(net scale ε, mutual information at that scale)` pairs. Returns the
/// minimizing scale (ties broken toward the smallest ε) and the value.
pub fn lipschitz_net_bound(
    expected_lipschitz: f64,
    env: &PsiEnvelope,
    candidates: &[(f64, f64)],
) -> Result<(f64, f64), BoundError> {
    if !expected_lipschitz.is_finite() || expected_lipschitz < 0.0 {
        return Err(BoundError::InvalidLipschitzConstant {
            value: expected_lipschitz,
        });
    }
    if candidates.is_empty() {
        return Err(BoundError::EmptyCandidates);
    }
    let mut best: Option<(f64, f64)> = None;
    for &(scale, mi) in candidates {
        if !scale.is_finite() || scale <= 0.0 || !mi.is_finite() || mi < 0.0 {
            return Err(BoundError::InvalidCandidate { scale, mi });
        }
        let value = scale * expected_lipschitz + psi_star_inverse(env, mi)?;
        let replace = match best {
            None => true,
            Some((bs, bv)) => value < bv || (value == bv && scale < bs),
        };
        if replace {
            best = Some((scale, value));
        }
    }
    Ok(best.expect("candidates nonempty"))
}

/// Tail-probability bound for the supremum or a selected index.
///
/// Sup mode: `P[sup X_t ≥ ψ*⁻¹(log|T| + u)] ≤ e^{−u}`.
/// Selected mode, at threshold `ψ*⁻¹(mi + u)`: the probability is the
/// smaller of `(mi + log(2 − e^{−mi−u})) / (mi + u)` and
/// `e^{log|T| − mi − u}`, clamped to `[0, 1]`. For subgaussian envelopes
/// the same probability is also reported at the additive threshold
/// `√(2σ²·mi) + √(2σ²·u)`.
pub fn tail_bound(env: &PsiEnvelope, mode: TailBoundMode, u: f64) -> Result<TailReport, BoundError> {
    if u.is_nan() || u < 0.0 {
        return Err(BoundError::NegativeLevel { value: u });
    }
    match mode {
        TailBoundMode::Sup { cardinality } => {
            if cardinality == 0 {
                return Err(BoundError::ZeroCardinality);
            }
            let threshold = psi_star_inverse(env, fmath::ln(cardinality as f64) + u)?;
            let probability = fmath::exp(-u).min(1.0);
            Ok(TailReport {
                probability,
                threshold,
                additive_threshold: None,
                formula_id: Formula::TailSup,
            })
        }
        TailBoundMode::Selected { mi, cardinality } => {
            if cardinality == 0 {
                return Err(BoundError::ZeroCardinality);
            }
            if mi.is_nan() || mi < 0.0 {
                return Err(BoundError::InvalidMi { value: mi });
            }
            if mi.is_infinite() {
                return Err(BoundError::InfiniteMi);
            }
            let total = mi + u;
            if total == 0.0 {
                return Err(BoundError::UndefinedAtZero);
            }
            let branch_ratio = (mi + fmath::ln(2.0 - fmath::exp(-total))) / total;
            let branch_counting = fmath::exp(fmath::ln(cardinality as f64) - total);
            let probability = branch_ratio.min(branch_counting).clamp(0.0, 1.0);
            let threshold = psi_star_inverse(env, total)?;
            let additive_threshold = env.sigma2().map(|s2| {
                fmath::sqrt(2.0 * s2 * mi) + fmath::sqrt(2.0 * s2 * u)
            });
            Ok(TailReport {
                probability,
                threshold,
                additive_threshold,
                formula_id: Formula::TailSelected,
            })
        }
    }
}

/// Per-level transform for the chained bound: dual inverse for general
/// envelopes, the tighter printed form `√(σ²·v)` for subgaussian ones.
fn chain_unit(env: &PsiEnvelope) -> impl Fn(f64) -> Result<f64, BoundError> + '_ {
    move |v: f64| match env {
        PsiEnvelope::Subgaussian { sigma2 } => Ok(fmath::sqrt(sigma2 * v)),
        PsiEnvelope::General(_) => Ok(psi_star_inverse(env, v)?),
    }
}

/// Sums the explicit levels: `term_k = coeff · 2^{-k} · unit(v_k + shift)`.
fn sum_levels(
    coeff: f64,
    k_start: i32,
    values: &[f64],
    shift: f64,
    unit: &dyn Fn(f64) -> Result<f64, BoundError>,
) -> Result<(Vec<LevelTerm>, f64), BoundError> {
    let mut terms = Vec::with_capacity(values.len());
    let mut total = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let k = k_start + i as i32;
        let term = coeff * fmath::pow2(-k) * unit(v + shift)?;
        terms.push(LevelTerm { k, term });
        total += term;
    }
    Ok((terms, total))
}

/// Combined per-level tail argument
/// `offset + Σ_i weight_i · max(0, slope_i·k + intercept_i)`, assembled
/// from the tail modes of the consumed series plus any constant shift.
struct TailArg {
    parts: Vec<(f64, f64, f64)>,
    offset: f64,
}

impl TailArg {
    fn single(mode: TailMode, weight: f64, offset: f64) -> Result<Self, BoundError> {
        let mut arg = TailArg {
            parts: Vec::new(),
            offset,
        };
        arg.push(mode, weight)?;
        Ok(arg)
    }

    fn push(&mut self, mode: TailMode, weight: f64) -> Result<(), BoundError> {
        match mode {
            TailMode::ZeroAfterLast => Ok(()),
            TailMode::AnalyticCap(None) => Err(BoundError::MissingTailCap),
            TailMode::AnalyticCap(Some(cap)) => {
                cap.validate()?;
                let (s, i) = cap.coeffs();
                if weight != 0.0 {
                    self.parts.push((weight, s, i));
                }
                Ok(())
            }
        }
    }

    fn eval(&self, k: i32) -> f64 {
        let mut v = self.offset;
        for &(w, s, i) in &self.parts {
            let c = s * k as f64 + i;
            if c > 0.0 {
                v += w * c;
            }
        }
        v
    }

    fn is_constant(&self) -> bool {
        self.parts.iter().all(|&(_, s, _)| s == 0.0)
    }

    /// First level at which every affine part is already nonnegative, so
    /// the per-level argument is nondecreasing from here on.
    fn ramp_end(&self, start_k: i32) -> i32 {
        let mut k = start_k;
        for &(_, s, i) in &self.parts {
            if s > 0.0 && i < 0.0 {
                let cross = fmath::ceil_i32(-i / s);
                if cross > k {
                    k = cross;
                }
            }
        }
        k
    }
}

/// Sums the infinite tail `Σ_{k ≥ start_k} coeff · 2^{-k} · unit(arg(k))`.
///
/// Constant arguments get the exact geometric closed form. Otherwise the
/// sum runs until the increment falls below `tolerance/10` (machine epsilon
/// relative to the running total when no tolerance applies) and a
/// geometric-remainder majorant of `3×` the last increment is added, so the
/// result never understates the true tail: the caps are nondecreasing
/// affine forms, hence successive terms shrink by at least `~2/3` once past
/// the ramp, and `Σ r^j ≤ 3` for `r ≤ 3/4`. With a tolerance the final
/// estimate must come out at most that tolerance.
fn tail_sum(
    coeff: f64,
    start_k: i32,
    arg: &TailArg,
    unit: &dyn Fn(f64) -> Result<f64, BoundError>,
    tolerance: Option<f64>,
) -> Result<f64, BoundError> {
    let tail = if arg.is_constant() {
        let u = unit(arg.eval(start_k))?;
        2.0 * coeff * dyadic_weight(start_k) * u
    } else {
        let ramp_end = arg.ramp_end(start_k);
        let mut w = dyadic_weight(start_k);
        let mut acc = 0.0;
        let mut k = start_k;
        let mut iters: u32 = 0;
        let last_inc;
        loop {
            let inc = coeff * w * unit(arg.eval(k))?;
            acc += inc;
            iters += 1;
            k += 1;
            w *= 0.5;
            let stop_eps = match tolerance {
                Some(t) => t / 10.0,
                None => f64::EPSILON * (1.0 + acc),
            };
            if (k > ramp_end + 3 && iters >= 4 && inc < stop_eps) || iters >= MAX_TAIL_ITERS {
                last_inc = inc;
                break;
            }
        }
        acc + 3.0 * last_inc
    };
    if let Some(t) = tolerance {
        if tail > t {
            return Err(BoundError::TailTooLoose {
                tail_estimate: tail,
                tolerance: t,
            });
        }
    }
    Ok(tail)
}

/// `2^{-k}`, flushing to zero outside the normal range instead of
/// overflowing the exponent construction.
fn dyadic_weight(k: i32) -> f64 {
    if k > 1022 {
        0.0
    } else {
        fmath::pow2(-k)
    }
}
