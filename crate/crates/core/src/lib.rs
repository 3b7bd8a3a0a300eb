//! Expected-supremum and generalization bounds for stochastic processes
//! indexed by finite metric spaces.
//!
//! The crate computes upper bounds on `E[sup_t X_t]` and on `E[X_W]` — the
//! expected value of a process at a *randomly selected* index `W` that may
//! depend on the whole realization — together with the metric and
//! information-theoretic machinery those bounds are built from:
//!
//! * [`metric`] — finite (pseudo)metric spaces, greedy and exact ε-nets,
//!   covering numbers, dyadic partition hierarchies, and the analytic dyadic
//!   partition of the unit circle.
//! * [`info`] — discrete information measures in nats: entropy, binary
//!   entropy, KL divergence, mutual information of joint tables, a plug-in
//!   estimator, and a numerical check of the variational (Donsker–Varadhan)
//!   representation of relative entropy.
//! * [`psi`] — cumulant-envelope machinery: subgaussian and general convex
//!   envelopes ψ, their Legendre duals ψ*, and the dual inverse ψ*⁻¹ that
//!   converts information (nats) into process units.
//! * [`bounds`] — the bound formulas: maximal inequalities over finite index
//!   sets, mutual-information bounds, Dudley-style entropy-integral sums,
//!   chained mutual-information sums with explicit tail control, a
//!   two-subset refinement, Lipschitz ε-net bounds, and tail probabilities
//!   for suprema and for selected values.
//! * [`process`] — canonical Gaussian process simulators, index-selection
//!   rules (noisy circle argmax, two-block, custom kernels), analytic
//!   references for the noisy-argmax circle construction, and deterministic
//!   seeded Monte-Carlo estimators used as oracles for every bound.
//! * [`learning`] — an adapter that maps a finite statistical-learning
//!   problem (examples, losses, a possibly randomized algorithm) onto the
//!   chained bounds via the generalization-error process.
//!
//! All information quantities are in nats. All randomness is deterministic
//! given a 64-bit seed; samplers derive one counter-based stream per sample
//! index, so results are independent of batching.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature switches float math to the standard-library intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod fmath;

pub mod bounds;
pub mod info;
pub mod learning;
pub mod metric;
pub mod process;
pub mod psi;

pub use bounds::{
    chained_bound, dudley_bound, lipschitz_net_bound, maximal_bound, mi_bound,
    small_subset_bound, tail_bound, BoundError, BoundReport, ChainedVariant, Formula, LevelSeries,
    LevelTerm, MiVariant, TailBoundMode, TailCap, TailMode, TailReport,
};
pub use info::{
    binary_entropy, dv_gap, entropy, kl_divergence, plug_in_mi, InfoError, JointDistribution,
};
pub use learning::{learning_adapter, AdapterReport, BoundOutcome, Kernel, LearningError, LearningProblem};
pub use metric::{
    circle_dyadic_partition, CoveringMode, EpsilonNet, FiniteMetricSpace, MetricError,
    PartitionHierarchy, PartitionLevel,
};
pub use process::{
    circle_argmax_phase, circle_log_cells_series, circle_mi_level, circle_mi_series,
    circle_mi_tail_cap, circle_reference, mc_estimate, sample_process, sample_statistics, select,
    selected_value, two_block_mi_cap, CanonicalProcessSpec, CircleReference, McEstimate,
    ProcessError, ProcessModel, Realization, Selection, SelectionRule, Statistic,
};
pub use psi::{psi_star, psi_star_inverse, GeneralPsi, PsiEnvelope, PsiError};
