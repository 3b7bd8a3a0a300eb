//! Process laboratory: canonical Gaussian processes over finite point sets,
//! the analytic unit-circle process, selection rules (noiseless and noisy
//! argmax, two-block, custom kernels), closed-form information formulas for
//! the circle selector, and deterministic Monte-Carlo oracles for every
//! bound.
//!
//! Determinism contract: sample `i` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i + 1` (stream 0 is
//! reserved), drawing the Gaussian components in coordinate order first and
//! any selection noise afterwards. Monte-Carlo results are therefore exact
//! functions of `(configuration, seed)` and batches may be evaluated in any
//! order.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds::{BoundError, LevelSeries, TailCap, TailMode};
use crate::fmath;
use crate::metric::{circle_dyadic_partition, FiniteMetricSpace, MetricError};

const TAU: f64 = core::f64::consts::TAU;
const LN_2: f64 = core::f64::consts::LN_2;

/// Minimum Monte-Carlo sample count.
pub const MIN_MC_SAMPLES: u64 = 100;

/// Largest level accepted by the closed-form circle formulas.
pub const MAX_CIRCLE_LEVEL: i32 = 900;

/// Errors from process construction, selection, and simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProcessError {
    #[error("process needs at least one index point")]
    EmptyProcess,
    #[error("coordinate dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFiniteCoordinate { index: usize },
    #[error("realization carries no values")]
    EmptyRealization,
    #[error("{name} = {value} is outside its valid range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("level k = {k} is outside [-1, {max}]", max = MAX_CIRCLE_LEVEL)]
    LevelOutOfRange { k: i32 },
    #[error("two-block rule requires 1 <= m < n, got n = {n}, m = {m}")]
    InvalidBlock { n: usize, m: usize },
    #[error("need at least {minimum} samples, got {value}")]
    InvalidSampleCount { value: u64, minimum: u64 },
    #[error("selection kernel invalid: {reason}")]
    KernelInvalid { reason: &'static str },
    #[error("selection rule does not apply to this process model: {detail}")]
    WrongModel { detail: &'static str },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// A canonical Gaussian process: index points `t ∈ R^d` with
/// `X_t = ⟨t, G⟩` for a standard normal vector `G`. Increments satisfy
/// `Var(X_t − X_s) = ‖t − s‖²`, so the process is subgaussian with respect
/// to the Euclidean metric on the points.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalProcessSpec {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl CanonicalProcessSpec {
    /// Validates and wraps a point set (nonempty, rectangular, finite).
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, ProcessError> {
        if points.is_empty() {
            return Err(ProcessError::EmptyProcess);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(ProcessError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(ProcessError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(ProcessError::NonFiniteCoordinate { index });
            }
        }
        Ok(Self { points, dim })
    }

    /// The standard basis of `R^n`: `n` independent unit-variance
    /// coordinates, the classical maximal-inequality setting.
    pub fn standard_basis(n: usize) -> Result<Self, ProcessError> {
        if n == 0 {
            return Err(ProcessError::EmptyProcess);
        }
        let points = (0..n)
            .map(|i| {
                let mut p = alloc::vec![0.0; n];
                p[i] = 1.0;
                p
            })
            .collect();
        Self::new(points)
    }

    /// `count` equispaced unit vectors `(sin φ_j, cos φ_j)`,
    /// `φ_j = 2πj/count`: the finite discretization of the circle process.
    pub fn circle_points(count: usize) -> Result<Self, ProcessError> {
        if count == 0 {
            return Err(ProcessError::EmptyProcess);
        }
        let points = (0..count)
            .map(|j| {
                let phi = TAU * j as f64 / count as f64;
                alloc::vec![fmath::sin(phi), fmath::cos(phi)]
            })
            .collect();
        Self::new(points)
    }

    /// Number of index points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; construction rejects empty point sets.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinate dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The index points.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Largest point norm; variance proxy `σ² = max_t ‖t‖²` dominates every
    /// single-coordinate variance of the process.
    pub fn max_norm2(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.iter().map(|c| c * c).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Evaluates `X_t = ⟨t, g⟩` for every point.
    pub fn realize(&self, gaussian: &[f64]) -> Result<Vec<f64>, ProcessError> {
        if gaussian.len() != self.dim {
            return Err(ProcessError::DimensionMismatch {
                expected: self.dim,
                found: gaussian.len(),
            });
        }
        Ok(self
            .points
            .iter()
            .map(|p| p.iter().zip(gaussian).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Euclidean metric space over the index points.
    pub fn metric_space(&self) -> Result<FiniteMetricSpace, ProcessError> {
        Ok(FiniteMetricSpace::from_points(&self.points)?)
    }
}

/// Which process a simulation runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    /// Finite canonical Gaussian process.
    Canonical(CanonicalProcessSpec),
    /// The analytic circle process `X_φ = G₁ sin φ + G₂ cos φ` over the
    /// full continuum `φ ∈ [0, 2π)`; its supremum is `‖G²‖` and the argmax
    /// phase is available in closed form.
    UnitCircle,
}

/// One realization of a process.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    /// Finite process: the Gaussian draw and the evaluated values.
    Finite { gaussian: Vec<f64>, values: Vec<f64> },
    /// Circle process: the two-dimensional Gaussian draw (values are
    /// analytic functions of it).
    Circle { gaussian: [f64; 2] },
}

impl Realization {
    /// Supremum of the realization over its index set.
    pub fn sup(&self) -> Result<f64, ProcessError> {
        match self {
            Realization::Finite { values, .. } => values
                .iter()
                .copied()
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.max(v)))
                })
                .ok_or(ProcessError::EmptyRealization),
            Realization::Circle { gaussian } => Ok(fmath::sqrt(
                gaussian[0] * gaussian[0] + gaussian[1] * gaussian[1],
            )),
        }
    }
}

/// How the studied index `W` is chosen from a realization.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    /// Deterministic argmax over a finite realization, ties to the lowest
    /// index.
    Argmax,
    /// Circle rule: the analytic argmax phase plus noise `Z` taken mod 2π,
    /// where `Z` puts an atom of mass `epsilon` at 0 and spreads the rest
    /// uniformly over `(−π, π)`.
    NoisyCircleArgmax { epsilon: f64 },
    /// Two-block rule on `n` coordinates: with probability `1 − delta`
    /// argmax over the first `m` indices, otherwise over the remaining
    /// `n − m`.
    TwoBlock { n: usize, m: usize, delta: f64 },
    /// Explicit kernel `P(W | quantized realization)`. Rows are indexed by
    /// the sign-orthant cell of the underlying Gaussian draw (bit `d` set
    /// iff `G_d < 0`), so `W` is conditionally independent of the process
    /// given that cell; each row is a distribution over the index points.
    Custom { kernel: Vec<Vec<f64>> },
}

impl SelectionRule {
    fn validate(&self) -> Result<(), ProcessError> {
        match self {
            SelectionRule::Argmax => Ok(()),
            SelectionRule::NoisyCircleArgmax { epsilon } => {
                if !(0.0..=1.0).contains(epsilon) || epsilon.is_nan() {
                    return Err(ProcessError::OutOfRange {
                        name: "epsilon",
                        value: *epsilon,
                    });
                }
                Ok(())
            }
            SelectionRule::TwoBlock { n, m, delta } => {
                if *m < 1 || m >= n {
                    return Err(ProcessError::InvalidBlock { n: *n, m: *m });
                }
                if !(0.0..=1.0).contains(delta) || delta.is_nan() {
                    return Err(ProcessError::OutOfRange {
                        name: "delta",
                        value: *delta,
                    });
                }
                Ok(())
            }
            SelectionRule::Custom { kernel } => {
                if kernel.is_empty() {
                    return Err(ProcessError::KernelInvalid {
                        reason: "kernel has no rows",
                    });
                }
                for row in kernel {
                    if row.is_empty() {
                        return Err(ProcessError::KernelInvalid {
                            reason: "kernel row is empty",
                        });
                    }
                    let mut sum = 0.0;
                    for &p in row {
                        if !p.is_finite() || p < 0.0 {
                            return Err(ProcessError::KernelInvalid {
                                reason: "kernel entries must be finite and nonnegative",
                            });
                        }
                        sum += p;
                    }
                    if fmath::abs(sum - 1.0) > 1e-9 {
                        return Err(ProcessError::KernelInvalid {
                            reason: "kernel rows must sum to one",
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// A selected index or phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// Index into a finite realization.
    Index(usize),
    /// Phase in `[0, 2π)` on the circle.
    Phase(f64),
}

/// Statistic evaluated per sample by [`mc_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// `X_W`, the value at the selected index.
    SelectedMean,
    /// `sup_t X_t` over the index set.
    SupMean,
    /// Indicator `X_W ≥ threshold`.
    TailFreq { threshold: f64 },
    /// Circle only: indicator that the process value at the *center of the
    /// level-`level` dyadic arc containing the selection* exceeds the
    /// threshold. The discretized selection carries finite information,
    /// so the selected-value tail bounds apply to this statistic with the
    /// closed-form per-level information of the noisy argmax.
    QuantizedTailFreq { level: i32, threshold: f64 },
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Closed-form reference values of the circle experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CircleReference {
    /// `E[X_W] = ε·√(π/2)`: only the atom of the selection noise
    /// contributes, the continuous part integrates to zero.
    pub true_bias: f64,
    /// `E[sup_φ X_φ] = √(π/2)`, the mean of the Rayleigh-distributed
    /// supremum `‖G²‖`.
    pub sup_mean: f64,
}

/// Streaming mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub(crate) fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            fmath::sqrt(self.variance() / self.n as f64)
        }
    }

    pub(crate) fn count(&self) -> u64 {
        self.n
    }
}

/// Per-sample deterministic stream: seed selects the run, `index + 1`
/// selects the sample's stream (stream 0 is reserved).
fn sample_rng(template: &ChaCha8Rng, index: u64) -> ChaCha8Rng {
    let mut rng = template.clone();
    rng.set_stream(index + 1);
    rng
}

fn draw_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn draw_realization(model: &ProcessModel, rng: &mut ChaCha8Rng) -> Realization {
    match model {
        ProcessModel::Canonical(spec) => {
            let gaussian = draw_gaussian(rng, spec.dim());
            let values = spec
                .realize(&gaussian)
                .expect("dimension matches by construction");
            Realization::Finite { gaussian, values }
        }
        ProcessModel::UnitCircle => {
            let g = draw_gaussian(rng, 2);
            Realization::Circle {
                gaussian: [g[0], g[1]],
            }
        }
    }
}

/// Draws `count` realizations of the finite process; row `i` holds the
/// values `X_t` of sample `i`. Deterministic in `(seed, count)` and stable
/// under changing `count` (sample `i` never depends on it).
pub fn sample_process(
    spec: &CanonicalProcessSpec,
    seed: u64,
    count: u64,
) -> Result<Vec<Vec<f64>>, ProcessError> {
    if count == 0 {
        return Err(ProcessError::InvalidSampleCount {
            value: 0,
            minimum: 1,
        });
    }
    let template = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(count as usize);
    for i in 0..count {
        let mut rng = sample_rng(&template, i);
        let gaussian = draw_gaussian(&mut rng, spec.dim());
        rows.push(spec.realize(&gaussian)?);
    }
    Ok(rows)
}

/// The phase maximizing `X_φ = g₀ sin φ + g₁ cos φ`: `atan2(g₀, g₁)`
/// wrapped into `[0, 2π)`.
pub fn circle_argmax_phase(gaussian: [f64; 2]) -> f64 {
    let p = fmath::atan2(gaussian[0], gaussian[1]);
    let wrapped = if p < 0.0 { p + TAU } else { p };
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi % TAU;
    if w < 0.0 {
        w += TAU;
    }
    if w >= TAU {
        w = 0.0;
    }
    w
}

fn argmax_lowest(values: &[f64]) -> Result<usize, ProcessError> {
    if values.is_empty() {
        return Err(ProcessError::EmptyRealization);
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

fn orthant_cell(gaussian: &[f64]) -> Result<usize, ProcessError> {
    if gaussian.len() > 20 {
        return Err(ProcessError::KernelInvalid {
            reason: "orthant quantizer supports at most 20 dimensions",
        });
    }
    let mut cell = 0usize;
    for (d, &g) in gaussian.iter().enumerate() {
        if g < 0.0 {
            cell |= 1 << d;
        }
    }
    Ok(cell)
}

fn draw_from_row(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

fn select_with_rng(
    rule: &SelectionRule,
    realization: &Realization,
    rng: &mut ChaCha8Rng,
) -> Result<Selection, ProcessError> {
    match (rule, realization) {
        (SelectionRule::Argmax, Realization::Finite { values, .. }) => {
            Ok(Selection::Index(argmax_lowest(values)?))
        }
        (SelectionRule::NoisyCircleArgmax { epsilon }, Realization::Circle { gaussian }) => {
            let phase = circle_argmax_phase(*gaussian);
            let u: f64 = rng.random();
            let offset = if u < *epsilon {
                0.0
            } else {
                rng.random_range(-core::f64::consts::PI..core::f64::consts::PI)
            };
            Ok(Selection::Phase(wrap_phase(phase + offset)))
        }
        (SelectionRule::TwoBlock { n, m, delta }, Realization::Finite { values, .. }) => {
            if values.len() != *n {
                return Err(ProcessError::DimensionMismatch {
                    expected: *n,
                    found: values.len(),
                });
            }
            let coin: f64 = rng.random();
            if coin < *delta {
                Ok(Selection::Index(*m + argmax_lowest(&values[*m..])?))
            } else {
                Ok(Selection::Index(argmax_lowest(&values[..*m])?))
            }
        }
        (SelectionRule::Custom { kernel }, Realization::Finite { gaussian, values }) => {
            let cell = orthant_cell(gaussian)?;
            if kernel.len() != 1usize << gaussian.len() {
                return Err(ProcessError::KernelInvalid {
                    reason: "kernel must carry one row per sign-orthant cell",
                });
            }
            let row = &kernel[cell];
            if row.len() != values.len() {
                return Err(ProcessError::KernelInvalid {
                    reason: "kernel row length must equal the number of index points",
                });
            }
            Ok(Selection::Index(draw_from_row(row, rng)))
        }
        (SelectionRule::NoisyCircleArgmax { .. }, Realization::Finite { .. }) => {
            Err(ProcessError::WrongModel {
                detail: "circle selection rule on a finite realization",
            })
        }
        (_, Realization::Circle { .. }) => Err(ProcessError::WrongModel {
            detail: "finite-index selection rule on a circle realization",
        }),
    }
}

/// Applies a selection rule to one realization. Ties of the argmax break
/// to the lowest index; the circle rule computes the continuous argmax
/// phase analytically and perturbs it by the atom-or-uniform noise mod 2π.
pub fn select(
    rule: &SelectionRule,
    realization: &Realization,
    seed: u64,
) -> Result<Selection, ProcessError> {
    rule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    select_with_rng(rule, realization, &mut rng)
}

/// Value of the realization at a selection.
pub fn selected_value(
    realization: &Realization,
    selection: &Selection,
) -> Result<f64, ProcessError> {
    match (realization, selection) {
        (Realization::Finite { values, .. }, Selection::Index(i)) => {
            values.get(*i).copied().ok_or(ProcessError::OutOfRange {
                name: "selection index",
                value: *i as f64,
            })
        }
        (Realization::Circle { gaussian }, Selection::Phase(phi)) => {
            Ok(gaussian[0] * fmath::sin(*phi) + gaussian[1] * fmath::cos(*phi))
        }
        _ => Err(ProcessError::WrongModel {
            detail: "selection kind does not match the realization kind",
        }),
    }
}

/// Per-level information between the dyadically quantized circle selection
/// and the process, in closed form.
///
/// At level `k` the circle splits into `m = 2^{k+2}` cells; conditionally
/// on the realization the selected cell is spiked: probability
/// `p₁ = ε + (1−ε)/m` on the argmax cell and `(1−ε)/m` on each other cell.
/// The information `log m − H(spiked)` is evaluated in the
/// cancellation-free form `p₁·log(m·p₁) + (1−ε)(1−1/m)·log(1−ε)`, exact at
/// both endpoints (`0` at `ε = 0`, `(k+2)·log 2` at `ε = 1`).
pub fn circle_mi_level(epsilon: f64, k: i32) -> Result<f64, ProcessError> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(ProcessError::OutOfRange {
            name: "epsilon",
            value: epsilon,
        });
    }
    if !(-1..=MAX_CIRCLE_LEVEL).contains(&k) {
        return Err(ProcessError::LevelOutOfRange { k });
    }
    let m = fmath::pow2(k + 2);
    if epsilon == 1.0 {
        return Ok((k + 2) as f64 * LN_2);
    }
    let p1 = epsilon + (1.0 - epsilon) / m;
    let value = p1 * fmath::ln(m * p1) + (1.0 - epsilon) * (1.0 - 1.0 / m) * fmath::ln(1.0 - epsilon);
    Ok(value.max(0.0))
}

/// Analytic cap on the per-level circle information:
/// `I_k ≤ ε·(k+2)·log 2` (the spiked distribution is a mixture, so its
/// entropy is at least the `(1−ε)`-weighted uniform entropy).
pub fn circle_mi_tail_cap(epsilon: f64) -> Result<TailCap, ProcessError> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(ProcessError::OutOfRange {
            name: "epsilon",
            value: epsilon,
        });
    }
    Ok(TailCap::Linear {
        slope: epsilon * LN_2,
        intercept: 2.0 * epsilon * LN_2,
    })
}

/// The circle information series `I_k` for `k = −1, …, k_max`, carrying its
/// analytic tail cap.
pub fn circle_mi_series(epsilon: f64, k_max: i32) -> Result<LevelSeries, ProcessError> {
    if k_max < -1 {
        return Err(ProcessError::LevelOutOfRange { k: k_max });
    }
    let values: Result<Vec<f64>, ProcessError> =
        (-1..=k_max).map(|k| circle_mi_level(epsilon, k)).collect();
    let cap = circle_mi_tail_cap(epsilon)?;
    Ok(LevelSeries::new(
        -1,
        values?,
        TailMode::AnalyticCap(Some(cap)),
    )?)
}

/// Log cell counts of the dyadic circle partition, `log 2^{k+2}` for
/// `k = −1, …, k_max`, with the matching log-cardinality tail cap. This is
/// both the `ε = 1` information series and the covering-number series of
/// the circle.
pub fn circle_log_cells_series(k_max: i32) -> Result<LevelSeries, ProcessError> {
    if !(-1..=MAX_CIRCLE_LEVEL).contains(&k_max) {
        return Err(ProcessError::LevelOutOfRange { k: k_max });
    }
    let values: Vec<f64> = (-1..=k_max).map(|k| (k + 2) as f64 * LN_2).collect();
    Ok(LevelSeries::new(
        -1,
        values,
        TailMode::AnalyticCap(Some(TailCap::LogCardinality {
            slope: LN_2,
            intercept: 2.0 * LN_2,
        })),
    )?)
}

/// Closed-form references of the circle experiment:
/// `(ε·√(π/2), √(π/2))`.
pub fn circle_reference(epsilon: f64) -> Result<CircleReference, ProcessError> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(ProcessError::OutOfRange {
            name: "epsilon",
            value: epsilon,
        });
    }
    let sup_mean = fmath::sqrt(core::f64::consts::FRAC_PI_2);
    Ok(CircleReference {
        true_bias: epsilon * sup_mean,
        sup_mean,
    })
}

/// Entropy cap on the two-block selector:
/// `H(W) ≤ (1−δ)·log m + δ·log(n−m) + H_b(δ)`, which upper-bounds the
/// information between the selector and the process.
pub fn two_block_mi_cap(n: usize, m: usize, delta: f64) -> Result<f64, ProcessError> {
    if m < 1 || m >= n {
        return Err(ProcessError::InvalidBlock { n, m });
    }
    if !(0.0..=1.0).contains(&delta) || delta.is_nan() {
        return Err(ProcessError::OutOfRange {
            name: "delta",
            value: delta,
        });
    }
    let h = crate::info::binary_entropy(delta).map_err(|_| ProcessError::OutOfRange {
        name: "delta",
        value: delta,
    })?;
    Ok((1.0 - delta) * fmath::ln(m as f64) + delta * fmath::ln((n - m) as f64) + h)
}

fn rule_applies(model: &ProcessModel, rule: &SelectionRule) -> Result<(), ProcessError> {
    match (model, rule) {
        (ProcessModel::UnitCircle, SelectionRule::NoisyCircleArgmax { .. }) => Ok(()),
        (ProcessModel::UnitCircle, _) => Err(ProcessError::WrongModel {
            detail: "the circle model only supports the noisy circle argmax rule",
        }),
        (ProcessModel::Canonical(_), SelectionRule::NoisyCircleArgmax { .. }) => {
            Err(ProcessError::WrongModel {
                detail: "the noisy circle argmax rule requires the circle model",
            })
        }
        (ProcessModel::Canonical(_), _) => Ok(()),
    }
}

/// Shared validation for the Monte-Carlo entry points.
fn validate_run(
    model: &ProcessModel,
    rule: &SelectionRule,
    statistic: Statistic,
    samples: u64,
) -> Result<(), ProcessError> {
    if samples < MIN_MC_SAMPLES {
        return Err(ProcessError::InvalidSampleCount {
            value: samples,
            minimum: MIN_MC_SAMPLES,
        });
    }
    rule.validate()?;
    rule_applies(model, rule)?;
    if let (ProcessModel::Canonical(spec), SelectionRule::TwoBlock { n, .. }) = (model, rule) {
        if spec.len() != *n {
            return Err(ProcessError::DimensionMismatch {
                expected: *n,
                found: spec.len(),
            });
        }
    }
    if let Statistic::QuantizedTailFreq { level, .. } = statistic {
        if !matches!(model, ProcessModel::UnitCircle) {
            return Err(ProcessError::WrongModel {
                detail: "the quantized tail frequency requires the circle model",
            });
        }
        // Reject bad levels before sampling starts.
        circle_dyadic_partition(level, 0.0)?;
    }
    Ok(())
}

/// Evaluates the statistic on one freshly drawn sample.
fn draw_statistic(
    model: &ProcessModel,
    rule: &SelectionRule,
    statistic: Statistic,
    rng: &mut ChaCha8Rng,
) -> Result<f64, ProcessError> {
    let realization = draw_realization(model, rng);
    match statistic {
        Statistic::SupMean => realization.sup(),
        Statistic::SelectedMean => {
            let sel = select_with_rng(rule, &realization, rng)?;
            selected_value(&realization, &sel)
        }
        Statistic::TailFreq { threshold } => {
            let sel = select_with_rng(rule, &realization, rng)?;
            Ok(if selected_value(&realization, &sel)? >= threshold {
                1.0
            } else {
                0.0
            })
        }
        Statistic::QuantizedTailFreq { level, threshold } => {
            let sel = select_with_rng(rule, &realization, rng)?;
            let Selection::Phase(w) = sel else {
                return Err(ProcessError::WrongModel {
                    detail: "the quantized tail frequency requires a phase selection",
                });
            };
            let cell = circle_dyadic_partition(level, w)?;
            let delta = TAU * fmath::pow2(-(level + 2));
            let center = Selection::Phase((cell as f64 + 0.5) * delta);
            Ok(if selected_value(&realization, &center)? >= threshold {
                1.0
            } else {
                0.0
            })
        }
    }
}

/// Deterministic Monte-Carlo estimate of a per-sample statistic.
///
/// Each sample draws its own stream (see the module docs), evaluates the
/// statistic, and feeds a streaming mean/variance accumulator; nothing is
/// materialized. The circle selected mean uses the analytic argmax phase,
/// so the oracle carries no grid bias.
pub fn mc_estimate(
    model: &ProcessModel,
    rule: &SelectionRule,
    statistic: Statistic,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, ProcessError> {
    validate_run(model, rule, statistic, samples)?;
    let template = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    for i in 0..samples {
        let mut rng = sample_rng(&template, i);
        acc.push(draw_statistic(model, rule, statistic, &mut rng)?);
    }
    Ok(McEstimate {
        estimate: acc.mean(),
        std_error: acc.std_error(),
        samples: acc.count(),
    })
}

/// Materialized per-sample statistic values, in sample order.
///
/// Same determinism contract as [`mc_estimate`]: value `i` is a pure
/// function of `(model, rule, statistic, seed, i)`, so the stream equals
/// what the estimator consumed and can be written out for inspection.
pub fn sample_statistics(
    model: &ProcessModel,
    rule: &SelectionRule,
    statistic: Statistic,
    samples: u64,
    seed: u64,
) -> Result<Vec<f64>, ProcessError> {
    validate_run(model, rule, statistic, samples)?;
    let template = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples as usize);
    for i in 0..samples {
        let mut rng = sample_rng(&template, i);
        out.push(draw_statistic(model, rule, statistic, &mut rng)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::circle_dyadic_partition;
    use alloc::vec;

    #[test]
    fn spec_validation() {
        assert!(matches!(
            CanonicalProcessSpec::new(vec![]),
            Err(ProcessError::EmptyProcess)
        ));
        assert!(matches!(
            CanonicalProcessSpec::new(vec![vec![1.0], vec![1.0, 2.0]]),
            Err(ProcessError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            CanonicalProcessSpec::new(vec![vec![f64::NAN]]),
            Err(ProcessError::NonFiniteCoordinate { index: 0 })
        ));
        let basis = CanonicalProcessSpec::standard_basis(4).unwrap();
        assert_eq!(basis.len(), 4);
        assert_eq!(basis.dim(), 4);
        assert_eq!(basis.max_norm2(), 1.0);
        let circle = CanonicalProcessSpec::circle_points(64).unwrap();
        assert_eq!(circle.len(), 64);
        for p in circle.points() {
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!((r2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_linear() {
        let spec = CanonicalProcessSpec::new(vec![vec![0.0, 0.0]]).unwrap();
        let rows = sample_process(&spec, 9, 50).unwrap();
        assert!(rows.iter().all(|r| r == &[0.0]));

        let pair =
            CanonicalProcessSpec::new(vec![vec![0.3, -1.2], vec![-0.3, 1.2]]).unwrap();
        let rows = sample_process(&pair, 11, 200).unwrap();
        for r in &rows {
            assert_eq!(r[0], -r[1]);
        }

        let a = sample_process(&pair, 42, 64).unwrap();
        let b = sample_process(&pair, 42, 64).unwrap();
        assert_eq!(a, b);
        let c = sample_process(&pair, 43, 64).unwrap();
        assert_ne!(a, c);
        // Prefix stability: sample i does not depend on the total count.
        let long = sample_process(&pair, 42, 128).unwrap();
        assert_eq!(&long[..64], &a[..]);
    }

    #[test]
    fn increment_variance_matches_metric() {
        let spec = CanonicalProcessSpec::standard_basis(2).unwrap();
        let rows = sample_process(&spec, 123, 100_000).unwrap();
        let mut acc = Welford::default();
        for r in &rows {
            acc.push(r[0] - r[1]);
        }
        let var = acc.variance();
        // Var of the sample variance of a normal: 2σ⁴/(n−1).
        let stderr = fmath::sqrt(2.0 * 4.0 / (acc.count() as f64 - 1.0));
        assert!(
            (var - 2.0).abs() <= 3.0 * stderr,
            "variance {var}, stderr {stderr}"
        );
    }

    #[test]
    fn argmax_phase_examples() {
        assert_eq!(circle_argmax_phase([0.0, 1.0]), 0.0);
        assert!((circle_argmax_phase([1.0, 0.0]) - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((circle_argmax_phase([0.0, -1.0]) - core::f64::consts::PI).abs() < 1e-15);
        assert!(
            (circle_argmax_phase([-1.0, 0.0]) - 3.0 * core::f64::consts::FRAC_PI_2).abs() < 1e-15
        );
        // The analytic argmax attains the supremum ‖g‖ and dominates
        // nearby phases.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let g = [
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ];
            let phi = circle_argmax_phase(g);
            assert!((0.0..TAU).contains(&phi));
            let norm = fmath::sqrt(g[0] * g[0] + g[1] * g[1]);
            let at = g[0] * fmath::sin(phi) + g[1] * fmath::cos(phi);
            assert!((at - norm).abs() < 1e-12);
            for d in [-0.1, 0.1] {
                let v = g[0] * fmath::sin(phi + d) + g[1] * fmath::cos(phi + d);
                assert!(v <= at + 1e-12);
            }
        }
    }

    #[test]
    fn selection_examples() {
        // Noiseless atom: W equals the argmax phase exactly.
        let real = Realization::Circle {
            gaussian: [0.0, 1.0],
        };
        let rule = SelectionRule::NoisyCircleArgmax { epsilon: 1.0 };
        assert_eq!(select(&rule, &real, 1).unwrap(), Selection::Phase(0.0));
        let real = Realization::Circle {
            gaussian: [1.0, 0.0],
        };
        match select(&rule, &real, 1).unwrap() {
            Selection::Phase(p) => assert!((p - core::f64::consts::FRAC_PI_2).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }

        // Argmax ties break to the lowest index.
        let real = Realization::Finite {
            gaussian: vec![],
            values: vec![1.0, 3.0, 3.0],
        };
        assert_eq!(
            select(&SelectionRule::Argmax, &real, 0).unwrap(),
            Selection::Index(1)
        );

        // Two-block endpoints stay inside their block.
        let spec = CanonicalProcessSpec::standard_basis(6).unwrap();
        let rows = sample_process(&spec, 3, 100).unwrap();
        for (i, values) in rows.into_iter().enumerate() {
            let real = Realization::Finite {
                gaussian: vec![],
                values,
            };
            let low = SelectionRule::TwoBlock {
                n: 6,
                m: 3,
                delta: 0.0,
            };
            match select(&low, &real, i as u64).unwrap() {
                Selection::Index(w) => assert!(w < 3),
                other => panic!("unexpected {other:?}"),
            }
            let high = SelectionRule::TwoBlock {
                n: 6,
                m: 3,
                delta: 1.0,
            };
            match select(&high, &real, i as u64).unwrap() {
                Selection::Index(w) => assert!((3..6).contains(&w)),
                other => panic!("unexpected {other:?}"),
            }
        }

        // Rule/model mismatches surface as errors.
        let circle_real = Realization::Circle {
            gaussian: [1.0, 1.0],
        };
        assert!(matches!(
            select(&SelectionRule::Argmax, &circle_real, 0),
            Err(ProcessError::WrongModel { .. })
        ));
        let empty = Realization::Finite {
            gaussian: vec![],
            values: vec![],
        };
        assert!(matches!(
            select(&SelectionRule::Argmax, &empty, 0),
            Err(ProcessError::EmptyRealization)
        ));
    }

    #[test]
    fn circle_mi_closed_form() {
        for k in -1..=20 {
            assert_eq!(circle_mi_level(0.0, k).unwrap(), 0.0);
            let full = circle_mi_level(1.0, k).unwrap();
            assert_eq!(full, (k + 2) as f64 * LN_2);
        }
        let v = circle_mi_level(0.01, 3).unwrap();
        assert!((v - 0.0014153357).abs() < 1e-9, "I(0.01, 3) = {v}");
        assert!(v > 0.0 && v < 5.0 * LN_2);
        assert!(matches!(
            circle_mi_level(1.5, 3),
            Err(ProcessError::OutOfRange { .. })
        ));
        assert!(matches!(
            circle_mi_level(0.5, -2),
            Err(ProcessError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn circle_mi_is_nondecreasing_in_level_and_capped() {
        for &eps in &[0.01, 0.05, 0.3, 0.9, 1.0] {
            let cap = circle_mi_tail_cap(eps).unwrap();
            let mut prev = 0.0;
            for k in -1..=30 {
                let v = circle_mi_level(eps, k).unwrap();
                assert!(
                    v + 1e-12 >= prev,
                    "eps {eps} k {k}: {v} < previous {prev}"
                );
                assert!(
                    v <= cap.eval(k) + 1e-12,
                    "eps {eps} k {k}: {v} above cap {}",
                    cap.eval(k)
                );
                prev = v;
            }
        }
    }

    #[test]
    fn circle_series_constructors() {
        let s = circle_mi_series(0.25, 12).unwrap();
        assert_eq!(s.k_start(), -1);
        assert_eq!(s.k_end(), 12);
        for (k, v) in s.entries() {
            assert_eq!(v, circle_mi_level(0.25, k).unwrap());
        }
        match s.tail_mode() {
            TailMode::AnalyticCap(Some(TailCap::Linear { slope, intercept })) => {
                assert!((slope - 0.25 * LN_2).abs() < 1e-15);
                assert!((intercept - 0.5 * LN_2).abs() < 1e-15);
            }
            other => panic!("unexpected tail mode {other:?}"),
        }

        let cells = circle_log_cells_series(10).unwrap();
        for (k, v) in cells.entries() {
            assert_eq!(v, (k + 2) as f64 * LN_2);
        }
    }

    #[test]
    fn circle_reference_values() {
        let r0 = circle_reference(0.0).unwrap();
        assert_eq!(r0.true_bias, 0.0);
        assert!((r0.sup_mean - 1.2533141373155003).abs() < 1e-15);
        let r = circle_reference(0.05).unwrap();
        assert!((r.true_bias - 0.05 * r.sup_mean).abs() < 1e-15);
        // Four-decimal truncation reproduces the printed reference row.
        assert_eq!((r.true_bias * 1e4) as i64, 626);
        let r1 = circle_reference(1.0).unwrap();
        assert_eq!(r1.true_bias, r1.sup_mean);
    }

    #[test]
    fn spiked_cell_distribution_fits() {
        // Conditionally on the realization, the selected cell follows the
        // spiked distribution: mass ε + (1−ε)/m on the argmax cell and
        // (1−ε)/m on each other cell. 10⁶ samples, level k = 2 (m = 16).
        let eps = 0.3;
        let k = 2;
        let m = 16u64;
        let samples = 1_000_000u64;
        let rule = SelectionRule::NoisyCircleArgmax { epsilon: eps };
        let template = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u64; m as usize];
        for i in 0..samples {
            let mut rng = sample_rng(&template, i);
            let real = draw_realization(&ProcessModel::UnitCircle, &mut rng);
            let Realization::Circle { gaussian } = &real else {
                unreachable!()
            };
            let argmax_cell =
                circle_dyadic_partition(k, circle_argmax_phase(*gaussian)).unwrap();
            let Selection::Phase(w) = select_with_rng(&rule, &real, &mut rng).unwrap() else {
                unreachable!()
            };
            let w_cell = circle_dyadic_partition(k, w).unwrap();
            let rel = (w_cell + m - argmax_cell) % m;
            counts[rel as usize] += 1;
        }
        let n = samples as f64;
        let p1 = eps + (1.0 - eps) / m as f64;
        let q = (1.0 - eps) / m as f64;
        let freq0 = counts[0] as f64 / n;
        let sigma0 = fmath::sqrt(p1 * (1.0 - p1) / n);
        assert!(
            (freq0 - p1).abs() <= 4.0 * sigma0,
            "atom cell frequency {freq0} vs {p1}"
        );
        let sigma_q = fmath::sqrt(q * (1.0 - q) / n);
        for (rel, &c) in counts.iter().enumerate().skip(1) {
            let f = c as f64 / n;
            assert!(
                (f - q).abs() <= 5.0 * sigma_q,
                "cell offset {rel} frequency {f} vs {q}"
            );
        }
    }

    #[test]
    fn plug_in_cross_checks_closed_form() {
        // I([W]_k; X) at ε = 0.01, k = 3 against the plug-in estimate from
        // simulated (selected cell, argmax cell) pairs.
        let eps = 0.01;
        let k = 3;
        let samples = 1_000_000u64;
        let rule = SelectionRule::NoisyCircleArgmax { epsilon: eps };
        let template = ChaCha8Rng::seed_from_u64(77);
        let mut pairs = Vec::with_capacity(samples as usize);
        for i in 0..samples {
            let mut rng = sample_rng(&template, i);
            let real = draw_realization(&ProcessModel::UnitCircle, &mut rng);
            let Realization::Circle { gaussian } = &real else {
                unreachable!()
            };
            let x_cell = circle_dyadic_partition(k, circle_argmax_phase(*gaussian)).unwrap();
            let Selection::Phase(w) = select_with_rng(&rule, &real, &mut rng).unwrap() else {
                unreachable!()
            };
            let w_cell = circle_dyadic_partition(k, w).unwrap();
            pairs.push((w_cell, x_cell));
        }
        let plug_in = crate::info::plug_in_mi(&pairs).unwrap();
        let exact = circle_mi_level(eps, k).unwrap();
        // Plug-in bias is O(m² / n) ≈ 5·10⁻⁴ at m = 32, n = 10⁶.
        assert!(
            (plug_in - exact).abs() < 1.5e-3,
            "plug-in {plug_in} vs exact {exact}"
        );
    }

    #[test]
    fn mc_estimate_examples() {
        assert!(matches!(
            mc_estimate(
                &ProcessModel::UnitCircle,
                &SelectionRule::NoisyCircleArgmax { epsilon: 0.5 },
                Statistic::SupMean,
                99,
                1
            ),
            Err(ProcessError::InvalidSampleCount { .. })
        ));

        // Independent selector: E[X_W] = 0.
        let spec = CanonicalProcessSpec::standard_basis(3).unwrap();
        let uniform_kernel = vec![vec![1.0 / 3.0; 3]; 8];
        let est = mc_estimate(
            &ProcessModel::Canonical(spec),
            &SelectionRule::Custom {
                kernel: uniform_kernel,
            },
            Statistic::SelectedMean,
            20_000,
            5,
        )
        .unwrap();
        assert!(
            est.estimate.abs() <= 3.0 * est.std_error,
            "independent selector mean {} stderr {}",
            est.estimate,
            est.std_error
        );

        // Circle selected mean matches the analytic bias.
        let rule = SelectionRule::NoisyCircleArgmax { epsilon: 0.05 };
        let est = mc_estimate(
            &ProcessModel::UnitCircle,
            &rule,
            Statistic::SelectedMean,
            100_000,
            7,
        )
        .unwrap();
        let reference = circle_reference(0.05).unwrap();
        assert!(
            (est.estimate - reference.true_bias).abs() <= 3.0 * est.std_error,
            "selected mean {} vs {}",
            est.estimate,
            reference.true_bias
        );

        // Supremum mean matches the Rayleigh mean.
        let est = mc_estimate(
            &ProcessModel::UnitCircle,
            &rule,
            Statistic::SupMean,
            100_000,
            7,
        )
        .unwrap();
        assert!(
            (est.estimate - reference.sup_mean).abs() <= 3.0 * est.std_error,
            "sup mean {} vs {}",
            est.estimate,
            reference.sup_mean
        );

        // Determinism: identical configuration and seed, identical bytes.
        let a = mc_estimate(
            &ProcessModel::UnitCircle,
            &rule,
            Statistic::SelectedMean,
            5_000,
            11,
        )
        .unwrap();
        let b = mc_estimate(
            &ProcessModel::UnitCircle,
            &rule,
            Statistic::SelectedMean,
            5_000,
            11,
        )
        .unwrap();
        assert_eq!(a, b);

        // The materialized stream matches the streaming estimator.
        let stream = sample_statistics(
            &ProcessModel::UnitCircle,
            &rule,
            Statistic::SelectedMean,
            5_000,
            11,
        )
        .unwrap();
        assert_eq!(stream.len(), 5_000);
        let mean = stream.iter().sum::<f64>() / 5_000.0;
        assert!((mean - a.estimate).abs() < 1e-12);

        // Noiseless selector attains the supremum, which is nonnegative.
        let freq = mc_estimate(
            &ProcessModel::UnitCircle,
            &SelectionRule::NoisyCircleArgmax { epsilon: 1.0 },
            Statistic::TailFreq { threshold: 0.0 },
            1_000,
            3,
        )
        .unwrap();
        assert_eq!(freq.estimate, 1.0);
    }

    #[test]
    fn quantized_tail_frequency_respects_selected_bound() {
        use crate::bounds::{tail_bound, TailBoundMode};
        use crate::psi::PsiEnvelope;

        let epsilon = 0.05;
        let level = 6;
        let u = 1.0;
        let mi = circle_mi_level(epsilon, level).unwrap();
        let report = tail_bound(
            &PsiEnvelope::standard(),
            TailBoundMode::Selected {
                mi,
                cardinality: 1 << (level + 2),
            },
            u,
        )
        .unwrap();
        let threshold = report.additive_threshold.unwrap();
        assert!(threshold >= report.threshold);
        let freq = mc_estimate(
            &ProcessModel::UnitCircle,
            &SelectionRule::NoisyCircleArgmax { epsilon },
            Statistic::QuantizedTailFreq { level, threshold },
            100_000,
            21,
        )
        .unwrap();
        assert!(
            freq.estimate <= report.probability,
            "tail frequency {} above bound {}",
            freq.estimate,
            report.probability
        );
        assert!(freq.estimate > 0.0, "degenerate check: nothing exceeded");

        // The statistic is circle-only and rejects bad levels up front.
        let spec = CanonicalProcessSpec::standard_basis(2).unwrap();
        assert!(matches!(
            mc_estimate(
                &ProcessModel::Canonical(spec),
                &SelectionRule::Argmax,
                Statistic::QuantizedTailFreq {
                    level: 2,
                    threshold: 0.0
                },
                1_000,
                1,
            ),
            Err(ProcessError::WrongModel { .. })
        ));
        assert!(matches!(
            mc_estimate(
                &ProcessModel::UnitCircle,
                &SelectionRule::NoisyCircleArgmax { epsilon },
                Statistic::QuantizedTailFreq {
                    level: -2,
                    threshold: 0.0
                },
                1_000,
                1,
            ),
            Err(ProcessError::Metric(MetricError::LevelOutOfRange { k: -2 }))
        ));
    }

    #[test]
    fn two_block_cap_and_validity() {
        assert_eq!(
            two_block_mi_cap(16, 4, 0.0).unwrap(),
            fmath::ln(4.0)
        );
        assert_eq!(
            two_block_mi_cap(16, 4, 1.0).unwrap(),
            fmath::ln(12.0)
        );
        let cap = two_block_mi_cap(1024, 10, 0.01).unwrap();
        assert!((cap - 2.4047773583).abs() < 1e-9, "cap {cap}");
        assert!(matches!(
            two_block_mi_cap(5, 5, 0.1),
            Err(ProcessError::InvalidBlock { .. })
        ));
        assert!(matches!(
            two_block_mi_cap(5, 0, 0.1),
            Err(ProcessError::InvalidBlock { .. })
        ));
        assert!(matches!(
            two_block_mi_cap(5, 2, 1.5),
            Err(ProcessError::OutOfRange { .. })
        ));

        // Validity oracle: E[X_W] ≤ √(2·H(W) cap).
        let n = 64;
        let m = 4;
        let delta = 0.1;
        let spec = CanonicalProcessSpec::standard_basis(n).unwrap();
        let est = mc_estimate(
            &ProcessModel::Canonical(spec),
            &SelectionRule::TwoBlock { n, m, delta },
            Statistic::SelectedMean,
            20_000,
            13,
        )
        .unwrap();
        let cap = two_block_mi_cap(n, m, delta).unwrap();
        let bound = fmath::sqrt(2.0 * cap);
        assert!(
            est.estimate <= bound + 3.0 * est.std_error,
            "two-block mean {} vs bound {bound}",
            est.estimate
        );
    }
}
