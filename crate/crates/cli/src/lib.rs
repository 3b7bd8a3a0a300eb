//! Command-line front end for the bound library: experiment orchestration,
//! golden-number reproduction, and CSV/JSON report emission.
//!
//! Three commands share one contract:
//!
//! * `example1` — the analytic circle experiment: per-ε table of the
//!   information bound (divergent), the chaining constant, the chained
//!   information bound, and the analytic and Monte-Carlo selected means,
//!   with golden checks against the known reference values.
//! * `bounds` — dispatches any subset of the bound formulas over series
//!   described in a JSON config (inline, CSV file, or generated from the
//!   circle formulas/covering numbers), writing one JSON report per bound.
//! * `simulate` — streams per-sample statistics of a configured process +
//!   selector to CSV/JSON and compares the estimates against requested
//!   bounds, with pass/fail flags in a summary JSON.
//!
//! Exit codes: `0` success, `1` usage/config error, `2` golden or
//! validation failure. All outputs are byte-identical for identical
//! `(config, seed)` pairs: every random draw derives from the single
//! `--seed`, JSON keys are emitted in stable (sorted) order, and floats
//! print in shortest round-trip form with non-finite values as the strings
//! `"inf"`, `"-inf"`, `"nan"`.

pub mod boundsrun;
pub mod config;
pub mod example1;
pub mod output;
pub mod simulate;

/// A command's verdict: `Ok(true)` → exit 0, `Ok(false)` → exit 2 (a
/// golden/validation check failed), `Err` → exit 1 (config/usage error).
pub type CmdResult = anyhow::Result<bool>;
