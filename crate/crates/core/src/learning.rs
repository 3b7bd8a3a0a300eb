//! Adapter from finite statistical-learning problems to the chained
//! information bounds on the generalization error.
//!
//! A problem consists of a finite example space with probabilities `μ(z)`,
//! a nonnegative loss table `ℓ(w, z)` over hypothesis indices `w`, a sample
//! size `n`, and a selection kernel `P(W | S)` over hypotheses given a
//! length-`n` sample `S`. The generalization error of hypothesis `w` is
//! `gen(w, S) = L_μ(w) − L_S(w)` (population minus empirical loss); as a
//! process indexed by `w` it is subgaussian with respect to
//! `d(w, v) = max_z |ℓ(w,·) − ℓ(v,·)| / √n` (Hoeffding's lemma applied to
//! the `n` independent per-example increments).
//!
//! The adapter builds that metric space, a dyadic partition hierarchy over
//! the hypotheses, the per-level information series `I([W]_k; S)`, the true
//! expected generalization error, and the chained bounds. When the sample
//! space `|Z|^n` is enumerable (at most [`ENUMERATION_CAP`] outcomes)
//! everything is computed by exact summation; otherwise the adapter falls
//! back to plug-in Monte-Carlo estimates and says so in `warnings`.
//!
//! Determinism: Monte-Carlo sample `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `i + 1`, drawing the `n`
//! example indices first and then any kernel randomness (the deterministic
//! empirical-risk-minimization kernel draws nothing).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    chained_bound, BoundError, BoundReport, ChainedVariant, Formula, LevelSeries, TailCap,
    TailMode,
};
use crate::fmath;
use crate::info::InfoError;
use crate::metric::{FiniteMetricSpace, MetricError};
use crate::process::{McEstimate, Welford};
use crate::psi::PsiEnvelope;

/// Largest exactly enumerated sample-space size `|Z|^n`.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Minimum Monte-Carlo sample count on the fallback path.
pub const MIN_ADAPTER_SAMPLES: u64 = 100;

/// Errors from problem validation and adaptation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearningError {
    #[error("invalid learning problem: {reason}")]
    InvalidProblem { reason: &'static str },
    #[error("invalid selection kernel: {reason}")]
    KernelInvalid { reason: &'static str },
    #[error("hierarchy depth {requested} is coarser than the base scale index {minimum}")]
    InvalidDepth { requested: i32, minimum: i32 },
    #[error("the Monte-Carlo path needs at least {minimum} samples, got {value}")]
    TooFewSamples { value: u64, minimum: u64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Selection kernel `P(W | S)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// The same distribution over hypotheses for every sample: the selector
    /// ignores the data, so `I(W; S) = 0` identically.
    ConstantRow(Vec<f64>),
    /// Deterministic empirical risk minimization: the hypothesis with the
    /// smallest empirical loss, ties to the lowest index.
    Erm,
    /// Explicit stochastic table with one row per sample outcome, in
    /// mixed-radix rank order (`rank = Σ_i z_i · |Z|^{n−1−i}`, first draw
    /// most significant).
    Table(Vec<Vec<f64>>),
}

/// A finite statistical-learning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningProblem {
    /// Example probabilities `μ(z)`; must sum to one.
    pub example_probs: Vec<f64>,
    /// Loss table `ℓ(w, z) ≥ 0`, one row per hypothesis.
    pub loss: Vec<Vec<f64>>,
    /// Number of independent examples per sample.
    pub sample_size: usize,
    /// Selection kernel.
    pub kernel: Kernel,
}

/// Outcome of a bound that may be inapplicable.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundOutcome {
    Computed(BoundReport),
    /// The bound's precondition failed; the reason says which.
    Skipped { reason: &'static str },
}

/// Everything the adapter produces.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterReport {
    /// Hypothesis space under the generalization metric
    /// `d(w, v) = max_z |ℓ(w,·) − ℓ(v,·)| / √n`.
    pub space: FiniteMetricSpace,
    /// Per-level information `I([W]_k; S)` over the hierarchy levels,
    /// capped beyond its last entry by the constant `I(W; S)` (data
    /// processing: coarsenings of `W` carry no more information).
    pub mi_series: LevelSeries,
    /// Information between the selected hypothesis and the sample.
    pub mi_total: f64,
    /// Expected generalization error `E[gen(W, S)]`.
    pub gen_estimate: f64,
    /// Standard error of `gen_estimate`; `None` on the exact path.
    pub gen_std_error: Option<f64>,
    /// Whether `gen_estimate` came from exact enumeration.
    pub gen_is_exact: bool,
    /// Independent Monte-Carlo estimate of the same quantity, produced on
    /// the exact path when `mc_samples` permits (cross-validation oracle).
    pub mc_cross_check: Option<McEstimate>,
    /// Chained information bound on `E[gen(W, S)]`.
    pub bound_a: BoundReport,
    /// Anchored absolute-value bound on `E[|gen(W, S)|]`; requires some
    /// hypothesis with identically zero loss.
    pub bound_b: BoundOutcome,
    /// True when the metric space is degenerate (all hypotheses at mutual
    /// distance zero); both bounds are then zero by definition.
    pub degenerate: bool,
    /// Non-fatal notes, e.g. the enumeration-cap fallback.
    pub warnings: Vec<String>,
}

struct Validated {
    n_w: usize,
    n_z: usize,
    n: usize,
    /// `L_μ(w) = Σ_z μ(z) ℓ(w, z)`.
    l_mu: Vec<f64>,
    /// `|Z|^n` when representable.
    outcome_count: Option<u64>,
}

fn validate(problem: &LearningProblem) -> Result<Validated, LearningError> {
    let n_z = problem.example_probs.len();
    if n_z == 0 {
        return Err(LearningError::InvalidProblem {
            reason: "example space is empty",
        });
    }
    let mut sum = 0.0;
    for &p in &problem.example_probs {
        if !p.is_finite() || p < 0.0 {
            return Err(LearningError::InvalidProblem {
                reason: "example probabilities must be finite and nonnegative",
            });
        }
        sum += p;
    }
    if fmath::abs(sum - 1.0) > 1e-9 {
        return Err(LearningError::InvalidProblem {
            reason: "example probabilities must sum to one",
        });
    }
    let n_w = problem.loss.len();
    if n_w == 0 {
        return Err(LearningError::InvalidProblem {
            reason: "loss table has no hypotheses",
        });
    }
    for row in &problem.loss {
        if row.len() != n_z {
            return Err(LearningError::InvalidProblem {
                reason: "loss rows must match the example space size",
            });
        }
        if row.iter().any(|&l| !l.is_finite() || l < 0.0) {
            return Err(LearningError::InvalidProblem {
                reason: "losses must be finite and nonnegative",
            });
        }
    }
    let n = problem.sample_size;
    if n == 0 {
        return Err(LearningError::InvalidProblem {
            reason: "sample size must be at least one",
        });
    }
    let outcome_count = u32::try_from(n)
        .ok()
        .and_then(|n32| (n_z as u64).checked_pow(n32));
    match &problem.kernel {
        Kernel::ConstantRow(row) => validate_row(row, n_w)?,
        Kernel::Erm => {}
        Kernel::Table(rows) => {
            let expected = outcome_count.ok_or(LearningError::KernelInvalid {
                reason: "table kernel requires a representable sample-outcome count",
            })?;
            if rows.len() as u64 != expected {
                return Err(LearningError::KernelInvalid {
                    reason: "table kernel must carry one row per sample outcome",
                });
            }
            for row in rows {
                validate_row(row, n_w)?;
            }
        }
    }
    let l_mu = problem
        .loss
        .iter()
        .map(|row| {
            row.iter()
                .zip(&problem.example_probs)
                .map(|(&l, &p)| l * p)
                .sum()
        })
        .collect();
    Ok(Validated {
        n_w,
        n_z,
        n,
        l_mu,
        outcome_count,
    })
}

fn validate_row(row: &[f64], n_w: usize) -> Result<(), LearningError> {
    if row.len() != n_w {
        return Err(LearningError::KernelInvalid {
            reason: "kernel row length must equal the hypothesis count",
        });
    }
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(LearningError::KernelInvalid {
                reason: "kernel entries must be finite and nonnegative",
            });
        }
        sum += p;
    }
    if fmath::abs(sum - 1.0) > 1e-9 {
        return Err(LearningError::KernelInvalid {
            reason: "kernel rows must sum to one",
        });
    }
    Ok(())
}

/// Unnormalized Shannon entropy `−Σ p log p` over the positive entries.
fn ent(dist: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in dist {
        if p > 0.0 {
            h -= p * fmath::ln(p);
        }
    }
    h
}

/// Empirical loss of hypothesis `w` on the sample `z` (example indices).
fn empirical_loss(loss_row: &[f64], z: &[usize]) -> f64 {
    let s: f64 = z.iter().map(|&zi| loss_row[zi]).sum();
    s / z.len() as f64
}

/// Lowest-index empirical risk minimizer.
fn erm_index(loss: &[Vec<f64>], z: &[usize]) -> usize {
    let mut best = 0;
    let mut best_loss = empirical_loss(&loss[0], z);
    for (w, row) in loss.iter().enumerate().skip(1) {
        let l = empirical_loss(row, z);
        if l < best_loss {
            best = w;
            best_loss = l;
        }
    }
    best
}

/// Fills `row_buf` with `P(W | S = z)`.
fn kernel_row(
    kernel: &Kernel,
    loss: &[Vec<f64>],
    z: &[usize],
    rank: u64,
    row_buf: &mut [f64],
) {
    match kernel {
        Kernel::ConstantRow(row) => row_buf.copy_from_slice(row),
        Kernel::Erm => {
            row_buf.fill(0.0);
            row_buf[erm_index(loss, z)] = 1.0;
        }
        Kernel::Table(rows) => row_buf.copy_from_slice(&rows[rank as usize]),
    }
}

/// Draws a hypothesis from the kernel for a sampled `z`.
fn kernel_draw(
    kernel: &Kernel,
    loss: &[Vec<f64>],
    z: &[usize],
    n_z: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    match kernel {
        Kernel::Erm => erm_index(loss, z),
        Kernel::ConstantRow(row) => draw_index(row, rng),
        Kernel::Table(rows) => {
            let mut rank = 0u64;
            for &zi in z {
                rank = rank * n_z as u64 + zi as u64;
            }
            draw_index(&rows[rank as usize], rng)
        }
    }
}

fn draw_index(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
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

fn draw_example(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Advances the mixed-radix sample odometer (last index fastest, matching
/// rank order); returns false after the final outcome.
fn advance(z: &mut [usize], n_z: usize) -> bool {
    for zi in z.iter_mut().rev() {
        *zi += 1;
        if *zi < n_z {
            return true;
        }
        *zi = 0;
    }
    false
}

struct ExactPass {
    gen: f64,
    mi_levels: Vec<f64>,
    mi_total: f64,
}

/// One sweep over every sample outcome, accumulating the expected
/// generalization error, the per-level informations
/// `I([W]_k; S) = H([W]_k) − E_S[H([W]_k | S)]`, and `I(W; S)`.
fn exact_pass(
    problem: &LearningProblem,
    v: &Validated,
    cell_maps: &[Vec<usize>],
    cell_counts: &[usize],
) -> ExactPass {
    let levels = cell_maps.len();
    let mut gen = 0.0;
    let mut marg_w = alloc::vec![0.0; v.n_w];
    let mut cond_w = 0.0;
    let mut marg_k: Vec<Vec<f64>> = cell_counts.iter().map(|&c| alloc::vec![0.0; c]).collect();
    let mut cond_k = alloc::vec![0.0; levels];
    let mut cell_buf: Vec<Vec<f64>> = cell_counts.iter().map(|&c| alloc::vec![0.0; c]).collect();
    let mut row_buf = alloc::vec![0.0; v.n_w];
    let mut z = alloc::vec![0usize; v.n];
    let mut rank = 0u64;
    loop {
        let p_s: f64 = z.iter().map(|&zi| problem.example_probs[zi]).product();
        kernel_row(&problem.kernel, &problem.loss, &z, rank, &mut row_buf);
        if p_s > 0.0 {
            for (w, &pw) in row_buf.iter().enumerate() {
                if pw > 0.0 {
                    gen += p_s * pw * (v.l_mu[w] - empirical_loss(&problem.loss[w], &z));
                    marg_w[w] += p_s * pw;
                }
            }
            cond_w += p_s * ent(&row_buf);
            for li in 0..levels {
                let buf = &mut cell_buf[li];
                buf.fill(0.0);
                for (w, &pw) in row_buf.iter().enumerate() {
                    buf[cell_maps[li][w]] += pw;
                }
                cond_k[li] += p_s * ent(buf);
                for (cell, &pc) in buf.iter().enumerate() {
                    marg_k[li][cell] += p_s * pc;
                }
            }
        }
        rank += 1;
        if !advance(&mut z, v.n_z) {
            break;
        }
    }
    let mi_levels = (0..levels)
        .map(|li| (ent(&marg_k[li]) - cond_k[li]).max(0.0))
        .collect();
    let mi_total = (ent(&marg_w) - cond_w).max(0.0);
    ExactPass {
        gen,
        mi_levels,
        mi_total,
    }
}

/// Monte-Carlo estimate of `E[gen(W, S)]`.
fn mc_gen(
    problem: &LearningProblem,
    v: &Validated,
    samples: u64,
    seed: u64,
) -> McEstimate {
    let template = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let mut z = alloc::vec![0usize; v.n];
    for i in 0..samples {
        let mut rng = sample_stream(&template, i);
        for zi in z.iter_mut() {
            *zi = draw_example(&problem.example_probs, &mut rng);
        }
        let w = kernel_draw(&problem.kernel, &problem.loss, &z, v.n_z, &mut rng);
        acc.push(v.l_mu[w] - empirical_loss(&problem.loss[w], &z));
    }
    McEstimate {
        estimate: acc.mean(),
        std_error: acc.std_error(),
        samples: acc.count(),
    }
}

fn sample_stream(template: &ChaCha8Rng, index: u64) -> ChaCha8Rng {
    let mut rng = template.clone();
    rng.set_stream(index + 1);
    rng
}

struct McPass {
    gen: McEstimate,
    mi_levels: Vec<f64>,
    mi_total: f64,
}

/// Plug-in fallback: samples `(S, W)` pairs, estimating the per-level
/// informations and `I(W; S)` from empirical joint frequencies.
fn mc_pass(
    problem: &LearningProblem,
    v: &Validated,
    cell_maps: &[Vec<usize>],
    samples: u64,
    seed: u64,
) -> Result<McPass, LearningError> {
    let template = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let mut z = alloc::vec![0usize; v.n];
    let mut sample_ids: BTreeMap<Vec<u16>, u64> = BTreeMap::new();
    let mut s_ids = Vec::with_capacity(samples as usize);
    let mut w_ids = Vec::with_capacity(samples as usize);
    for i in 0..samples {
        let mut rng = sample_stream(&template, i);
        for zi in z.iter_mut() {
            *zi = draw_example(&problem.example_probs, &mut rng);
        }
        let w = kernel_draw(&problem.kernel, &problem.loss, &z, v.n_z, &mut rng);
        acc.push(v.l_mu[w] - empirical_loss(&problem.loss[w], &z));
        let key: Vec<u16> = z
            .iter()
            .map(|&zi| {
                u16::try_from(zi).map_err(|_| LearningError::InvalidProblem {
                    reason: "example space too large for the Monte-Carlo path",
                })
            })
            .collect::<Result<_, _>>()?;
        let next = sample_ids.len() as u64;
        let id = *sample_ids.entry(key).or_insert(next);
        s_ids.push(id);
        w_ids.push(w as u64);
    }
    let mut mi_levels = Vec::with_capacity(cell_maps.len());
    for map in cell_maps {
        let pairs: Vec<(u64, u64)> = w_ids
            .iter()
            .zip(&s_ids)
            .map(|(&w, &s)| (map[w as usize] as u64, s))
            .collect();
        mi_levels.push(crate::info::plug_in_mi(&pairs)?.max(0.0));
    }
    let pairs: Vec<(u64, u64)> = w_ids.iter().copied().zip(s_ids.iter().copied()).collect();
    let mi_total = crate::info::plug_in_mi(&pairs)?.max(0.0);
    Ok(McPass {
        gen: McEstimate {
            estimate: acc.mean(),
            std_error: acc.std_error(),
            samples: acc.count(),
        },
        mi_levels,
        mi_total,
    })
}

fn zero_report(formula: Formula) -> BoundReport {
    BoundReport {
        bound_value: 0.0,
        per_level_terms: Vec::new(),
        truncation_k: 0,
        tail_estimate: 0.0,
        formula_id: formula,
    }
}

/// Adapts a learning problem into the chained information bounds.
///
/// `hierarchy_depth` is the finest (absolute) dyadic level `k_max` of the
/// hypothesis hierarchy, which starts at the space's base scale index.
/// Returns the metric space, the information series with its
/// data-processing tail cap, the expected generalization error (exact when
/// `|Z|^n ≤` [`ENUMERATION_CAP`], else Monte-Carlo with `mc_samples`
/// draws), the chained bound on `E[gen]`, and the anchored absolute bound
/// when some hypothesis has identically zero loss.
pub fn learning_adapter(
    problem: &LearningProblem,
    hierarchy_depth: i32,
    mc_samples: u64,
    seed: u64,
) -> Result<AdapterReport, LearningError> {
    let v = validate(problem)?;
    let inv_sqrt_n = 1.0 / fmath::sqrt(v.n as f64);
    let matrix: Vec<Vec<f64>> = (0..v.n_w)
        .map(|w| {
            (0..v.n_w)
                .map(|u| {
                    let mut m: f64 = 0.0;
                    for zi in 0..v.n_z {
                        m = m.max(fmath::abs(problem.loss[w][zi] - problem.loss[u][zi]));
                    }
                    m * inv_sqrt_n
                })
                .collect()
        })
        .collect();
    let space = FiniteMetricSpace::from_matrix(matrix, 1e-9)?;
    let enumerable = v.outcome_count.is_some_and(|c| c <= ENUMERATION_CAP);
    let mut warnings: Vec<String> = Vec::new();

    let zero_loss_row = problem.loss.iter().any(|row| row.iter().all(|&l| l == 0.0));
    let skip_reason = "no hypothesis has an identically zero loss row";

    // Degenerate hypothesis space: every pair at distance zero, so the
    // process has a single chaining cell at every scale and the bounds are
    // zero by definition.
    if space.diameter() == 0.0 {
        let mi_series = LevelSeries::new(0, alloc::vec![0.0], TailMode::ZeroAfterLast)?;
        let (gen_estimate, gen_std_error, gen_is_exact, mc_cross_check) =
            gen_paths(problem, &v, enumerable, mc_samples, seed, &mut warnings)?;
        return Ok(AdapterReport {
            space,
            mi_series,
            mi_total: 0.0,
            gen_estimate,
            gen_std_error,
            gen_is_exact,
            mc_cross_check,
            bound_a: zero_report(Formula::ChainedMi),
            bound_b: if zero_loss_row {
                BoundOutcome::Computed(zero_report(Formula::ChainedMiAbsolute))
            } else {
                BoundOutcome::Skipped {
                    reason: skip_reason,
                }
            },
            degenerate: true,
            warnings,
        });
    }

    let k_min = space.base_scale_index()?;
    if hierarchy_depth < k_min {
        return Err(LearningError::InvalidDepth {
            requested: hierarchy_depth,
            minimum: k_min,
        });
    }
    let hierarchy = space.build_dyadic_hierarchy(k_min, hierarchy_depth)?;
    let cell_maps: Vec<Vec<usize>> = hierarchy
        .levels()
        .iter()
        .map(|l| l.cell_of_point.clone())
        .collect();
    let cell_counts: Vec<usize> = hierarchy.levels().iter().map(|l| l.cell_count()).collect();

    // A constant-row kernel never reads the sample, so every information
    // is zero by independence; computing it numerically would only add
    // floating-point noise.
    let independent = matches!(problem.kernel, Kernel::ConstantRow(_));

    let (mi_levels, mi_total, gen_estimate, gen_std_error, gen_is_exact, mc_cross_check);
    if enumerable {
        let pass = exact_pass(problem, &v, &cell_maps, &cell_counts);
        mi_levels = if independent {
            alloc::vec![0.0; cell_maps.len()]
        } else {
            pass.mi_levels
        };
        mi_total = if independent { 0.0 } else { pass.mi_total };
        gen_estimate = pass.gen;
        gen_std_error = None;
        gen_is_exact = true;
        mc_cross_check = if mc_samples >= MIN_ADAPTER_SAMPLES {
            Some(mc_gen(problem, &v, mc_samples, seed))
        } else {
            None
        };
    } else {
        if mc_samples < MIN_ADAPTER_SAMPLES {
            return Err(LearningError::TooFewSamples {
                value: mc_samples,
                minimum: MIN_ADAPTER_SAMPLES,
            });
        }
        warnings.push(String::from(
            "sample-space enumeration exceeds the cap; informations and the generalization error are plug-in Monte-Carlo estimates",
        ));
        let pass = mc_pass(problem, &v, &cell_maps, mc_samples, seed)?;
        mi_levels = if independent {
            alloc::vec![0.0; cell_maps.len()]
        } else {
            pass.mi_levels
        };
        mi_total = if independent { 0.0 } else { pass.mi_total };
        gen_estimate = pass.gen.estimate;
        gen_std_error = Some(pass.gen.std_error);
        gen_is_exact = false;
        mc_cross_check = None;
    }

    let mi_series = LevelSeries::new(
        k_min,
        mi_levels,
        TailMode::AnalyticCap(Some(TailCap::Linear {
            slope: 0.0,
            intercept: mi_total,
        })),
    )?;
    let env = PsiEnvelope::standard();
    let bound_a = chained_bound(&env, &mi_series, ChainedVariant::Expectation, f64::MAX)?;
    let bound_b = if zero_loss_row {
        BoundOutcome::Computed(chained_bound(
            &env,
            &mi_series,
            ChainedVariant::Absolute,
            f64::MAX,
        )?)
    } else {
        BoundOutcome::Skipped {
            reason: skip_reason,
        }
    };
    Ok(AdapterReport {
        space,
        mi_series,
        mi_total,
        gen_estimate,
        gen_std_error,
        gen_is_exact,
        mc_cross_check,
        bound_a,
        bound_b,
        degenerate: false,
        warnings,
    })
}

/// Shared generalization-estimate logic for the degenerate branch.
#[allow(clippy::type_complexity)]
fn gen_paths(
    problem: &LearningProblem,
    v: &Validated,
    enumerable: bool,
    mc_samples: u64,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Result<(f64, Option<f64>, bool, Option<McEstimate>), LearningError> {
    if enumerable {
        let pass = exact_pass(problem, v, &[], &[]);
        let cross = if mc_samples >= MIN_ADAPTER_SAMPLES {
            Some(mc_gen(problem, v, mc_samples, seed))
        } else {
            None
        };
        Ok((pass.gen, None, true, cross))
    } else {
        if mc_samples < MIN_ADAPTER_SAMPLES {
            return Err(LearningError::TooFewSamples {
                value: mc_samples,
                minimum: MIN_ADAPTER_SAMPLES,
            });
        }
        warnings.push(String::from(
            "sample-space enumeration exceeds the cap; the generalization error is a Monte-Carlo estimate",
        ));
        let est = mc_gen(problem, v, mc_samples, seed);
        Ok((est.estimate, Some(est.std_error), false, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn erm_problem() -> LearningProblem {
        LearningProblem {
            example_probs: vec![0.5, 0.5],
            loss: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            sample_size: 2,
            kernel: Kernel::Erm,
        }
    }

    #[test]
    fn validation_errors() {
        let mut p = erm_problem();
        p.example_probs = vec![0.5, 0.6];
        assert!(matches!(
            learning_adapter(&p, 5, 0, 1),
            Err(LearningError::InvalidProblem { .. })
        ));
        let mut p = erm_problem();
        p.loss[0][1] = -1.0;
        assert!(matches!(
            learning_adapter(&p, 5, 0, 1),
            Err(LearningError::InvalidProblem { .. })
        ));
        let mut p = erm_problem();
        p.kernel = Kernel::ConstantRow(vec![0.7, 0.7]);
        assert!(matches!(
            learning_adapter(&p, 5, 0, 1),
            Err(LearningError::KernelInvalid { .. })
        ));
        let mut p = erm_problem();
        p.kernel = Kernel::Table(vec![vec![1.0, 0.0]; 3]);
        assert!(matches!(
            learning_adapter(&p, 5, 0, 1),
            Err(LearningError::KernelInvalid { .. })
        ));
        // Depth coarser than the base scale index.
        let p = erm_problem();
        assert!(matches!(
            learning_adapter(&p, -3, 0, 1),
            Err(LearningError::InvalidDepth { .. })
        ));
    }

    #[test]
    fn constant_kernel_is_information_free() {
        let p = LearningProblem {
            example_probs: vec![0.25, 0.75],
            loss: vec![vec![0.0, 1.0], vec![0.8, 0.1], vec![0.5, 0.5]],
            sample_size: 3,
            kernel: Kernel::ConstantRow(vec![0.2, 0.5, 0.3]),
        };
        let r = learning_adapter(&p, 6, 5_000, 9).unwrap();
        assert!(!r.degenerate);
        assert!(r.mi_series.values().iter().all(|&v| v == 0.0));
        assert_eq!(r.mi_total, 0.0);
        assert_eq!(r.bound_a.bound_value, 0.0);
        assert!(r.gen_is_exact);
        assert!(
            r.gen_estimate.abs() < 1e-12,
            "independent gen {}",
            r.gen_estimate
        );
        let mc = r.mc_cross_check.unwrap();
        assert!(mc.estimate.abs() <= 3.0 * mc.std_error);
        assert!(matches!(r.bound_b, BoundOutcome::Skipped { .. }));
    }

    #[test]
    fn erm_instance_by_full_enumeration() {
        let p = erm_problem();
        let r = learning_adapter(&p, 5, 20_000, 3).unwrap();
        assert!(r.gen_is_exact);
        // Four equiprobable samples: two pick hypothesis 0 with empirical
        // loss 0 or 1, two tie. E[gen] = 1/4·(0.5 + 0 + 0 + 0.5).
        assert!((r.gen_estimate - 0.25).abs() < 1e-12, "gen {}", r.gen_estimate);
        // I(W; S) = H(3/4): the minimizer is hypothesis 0 unless both
        // examples hit its bad case.
        let h = crate::info::binary_entropy(0.75).unwrap();
        assert!((r.mi_total - h).abs() < 1e-12);
        // The two hypotheses separate at every level here, so each level
        // carries the full information.
        for &v in r.mi_series.values() {
            assert!((v - h).abs() < 1e-12);
        }
        assert!(r.bound_a.bound_value >= r.gen_estimate);
        assert!(r.bound_a.is_consistent(1e-12));
        let mc = r.mc_cross_check.unwrap();
        assert!(
            (mc.estimate - r.gen_estimate).abs() <= 3.0 * mc.std_error,
            "mc {} exact {}",
            mc.estimate,
            r.gen_estimate
        );
        assert!(matches!(r.bound_b, BoundOutcome::Skipped { .. }));
    }

    #[test]
    fn zero_loss_row_enables_absolute_bound() {
        let p = LearningProblem {
            example_probs: vec![0.5, 0.5],
            loss: vec![vec![0.0, 0.0], vec![1.0, 0.5]],
            sample_size: 2,
            kernel: Kernel::Erm,
        };
        let r = learning_adapter(&p, 5, 0, 1).unwrap();
        match &r.bound_b {
            BoundOutcome::Computed(b) => {
                assert!(b.bound_value >= r.bound_a.bound_value);
                assert!(b.is_consistent(1e-12));
            }
            other => panic!("expected computed absolute bound, got {other:?}"),
        }
    }

    #[test]
    fn identical_losses_degenerate_to_zero() {
        let p = LearningProblem {
            example_probs: vec![0.3, 0.7],
            loss: vec![vec![0.4, 0.9], vec![0.4, 0.9]],
            sample_size: 2,
            kernel: Kernel::Erm,
        };
        let r = learning_adapter(&p, 3, 1_000, 5).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.space.diameter(), 0.0);
        assert_eq!(r.bound_a.bound_value, 0.0);
        assert!(r.gen_is_exact);
        assert!(r.gen_estimate.abs() < 1e-12);
        assert!(matches!(r.bound_b, BoundOutcome::Skipped { .. }));
    }

    #[test]
    fn table_kernel_matches_erm_when_deterministic() {
        // A table that encodes exactly the ERM decision must reproduce the
        // ERM run (the decisions per rank: (0,0)→0, (0,1)→tie→0,
        // (1,0)→tie→0, (1,1)→1).
        let rows = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ];
        let mut p = erm_problem();
        p.kernel = Kernel::Table(rows);
        let table = learning_adapter(&p, 5, 0, 1).unwrap();
        let erm = learning_adapter(&erm_problem(), 5, 0, 1).unwrap();
        assert_eq!(table.gen_estimate, erm.gen_estimate);
        assert_eq!(table.mi_total, erm.mi_total);
        assert_eq!(table.bound_a.bound_value, erm.bound_a.bound_value);
    }

    #[test]
    fn subgaussian_envelope_holds_exactly() {
        // The generalization increments obey the Hoeffding envelope: the
        // exact log-MGF of gen(w,·) − gen(v,·) over the enumerated sample
        // space stays below λ²·d(w,v)²/2.
        let p = erm_problem();
        let r = learning_adapter(&p, 5, 0, 1).unwrap();
        let d = r.space.dist(0, 1);
        let probs = &p.example_probs;
        for lambda in [-4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0] {
            let mut mgf = 0.0;
            for z0 in 0..2 {
                for z1 in 0..2 {
                    let p_s = probs[z0] * probs[z1];
                    let gen = |w: usize| {
                        let l_mu =
                            0.5 * p.loss[w][0] + 0.5 * p.loss[w][1];
                        l_mu - 0.5 * (p.loss[w][z0] + p.loss[w][z1])
                    };
                    mgf += p_s * fmath::exp(lambda * (gen(0) - gen(1)));
                }
            }
            assert!(
                fmath::ln(mgf) <= lambda * lambda * d * d / 2.0 + 1e-12,
                "lambda {lambda}: log-MGF {} vs envelope {}",
                fmath::ln(mgf),
                lambda * lambda * d * d / 2.0
            );
        }
    }

    #[test]
    fn monte_carlo_fallback_path() {
        // |Z|^n = 11^6 ≈ 1.77·10⁶ exceeds the cap, forcing plug-in
        // estimation.
        let n_z = 11;
        let probs = vec![1.0 / n_z as f64; n_z];
        let loss: Vec<Vec<f64>> = (0..3)
            .map(|w| (0..n_z).map(|z| ((w * z) % 4) as f64 / 4.0).collect())
            .collect();
        let p = LearningProblem {
            example_probs: probs,
            loss,
            sample_size: 6,
            kernel: Kernel::Erm,
        };
        assert!(matches!(
            learning_adapter(&p, 6, 50, 2),
            Err(LearningError::TooFewSamples { .. })
        ));
        let r = learning_adapter(&p, 6, 4_000, 2).unwrap();
        assert!(!r.gen_is_exact);
        assert!(!r.warnings.is_empty());
        assert!(r.gen_std_error.is_some());
        assert!(r.bound_a.bound_value.is_finite());
        assert!(r.bound_a.is_consistent(1e-12));
        assert!(r.mi_series.values().iter().all(|&v| v >= 0.0));
    }
}
