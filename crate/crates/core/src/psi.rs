//! Cumulant-envelope machinery: envelopes ψ, Legendre duals ψ*, and the
//! dual inverse ψ*⁻¹.
//!
//! An envelope ψ dominates the cumulant generating function of the process
//! increments: ψ is convex with ψ(0) = 0 and right-derivative 0 at 0. Its
//! Legendre dual `ψ*(x) = sup_{λ≥0} { λx − ψ(λ) }` is nonnegative, convex
//! and strictly increasing on `x ≥ 0`, so the inverse `ψ*⁻¹` is well defined
//! there; `ψ*⁻¹` converts information (nats) into process units.
//!
//! Two kinds are supported:
//! * subgaussian, `ψ(λ) = λ²σ²/2`, with the closed forms `ψ*(x) = x²/(2σ²)`
//!   and `ψ*⁻¹(y) = √(2σ²y)`;
//! * general, an evaluator `λ → ψ(λ)` on a capped domain `[0, λ_max]`,
//!   handled numerically: golden-section search for the dual (the objective
//!   is concave in λ) and bisection with geometric bracket growth for the
//!   inverse.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::fmath;

/// Convergence tolerance (relative) for the dual search and the inverse
/// bisection.
pub const LEGENDRE_TOL: f64 = 1e-10;

/// Default domain cap for general envelopes.
pub const DEFAULT_LAMBDA_MAX: f64 = 1e6;

/// Doublings allowed while bracketing the dual inverse.
const MAX_BRACKET_EXPANSIONS: u32 = 200;

/// Errors from envelope validation and Legendre-dual numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PsiError {
    #[error("invalid envelope: {reason}")]
    InvalidEnvelope { reason: &'static str },
    #[error(
        "dual maximizer hit the domain cap lambda_max = {lambda_max} at x = {x}: the envelope grows too slowly to dominate this argument"
    )]
    DomainCapReached { x: f64, lambda_max: f64 },
    #[error("bracket expansion failed: psi*({reached}) is still below the target level {target}")]
    BracketFailure { target: f64, reached: f64 },
    #[error("negative input {value} where a nonnegative level was required")]
    NegativeInput { value: f64 },
}

/// A general envelope: an evaluator on `[0, lambda_max]`.
#[derive(Clone)]
pub struct GeneralPsi {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lambda_max: f64,
}

impl core::fmt::Debug for GeneralPsi {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GeneralPsi")
            .field("lambda_max", &self.lambda_max)
            .finish_non_exhaustive()
    }
}

impl GeneralPsi {
    /// Wraps an evaluator after spot-checking the envelope contract:
    /// `ψ(0) = 0` and midpoint convexity along a sampled grid of
    /// `[0, lambda_max]`.
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lambda_max: f64,
    ) -> Result<Self, PsiError> {
        if !lambda_max.is_finite() || lambda_max <= 0.0 {
            return Err(PsiError::InvalidEnvelope {
                reason: "lambda_max must be positive and finite",
            });
        }
        if fmath::abs(eval(0.0)) > 1e-12 {
            return Err(PsiError::InvalidEnvelope {
                reason: "psi(0) must be 0",
            });
        }
        // Sample grid: geometric from a tiny fraction of the cap up to the
        // cap itself, plus zero.
        let mut grid: Vec<f64> = Vec::with_capacity(42);
        grid.push(0.0);
        let lo = lambda_max * 1e-9;
        let steps = 40;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            grid.push(lo * fmath::exp(t * fmath::ln(lambda_max / lo)));
        }
        let check = |a: f64, b: f64| -> Result<(), PsiError> {
            let fa = eval(a);
            let fb = eval(b);
            let fm = eval(0.5 * (a + b));
            if !fa.is_finite() || !fb.is_finite() || !fm.is_finite() {
                return Err(PsiError::InvalidEnvelope {
                    reason: "evaluator returned a non-finite value",
                });
            }
            let slack = 1e-9 * (1.0 + fmath::abs(fa) + fmath::abs(fb));
            if fm > 0.5 * (fa + fb) + slack {
                return Err(PsiError::InvalidEnvelope {
                    reason: "evaluator fails midpoint convexity on the sampled grid",
                });
            }
            if fa < -1e-12 || fb < -1e-12 {
                return Err(PsiError::InvalidEnvelope {
                    reason: "evaluator is negative on the sampled grid",
                });
            }
            Ok(())
        };
        for w in grid.windows(2) {
            check(w[0], w[1])?;
        }
        for i in 0..grid.len().saturating_sub(6) {
            check(grid[i], grid[i + 6])?;
        }
        Ok(Self {
            eval: Arc::new(eval),
            lambda_max,
        })
    }

    /// Piecewise-linear envelope through `(λ, ψ(λ))` grid points.
    ///
    /// The grid must start at `(0, 0)` with strictly increasing λ and
    /// nondecreasing, nonnegative slopes (convexity). Beyond the last point
    /// the envelope continues with the final slope; the domain cap is set
    /// past the grid so duals of arguments below the final slope resolve
    /// inside the grid, while steeper arguments surface `DomainCapReached`.
    pub fn from_grid(points: &[(f64, f64)]) -> Result<Self, PsiError> {
        if points.len() < 2 {
            return Err(PsiError::InvalidEnvelope {
                reason: "grid needs at least two points",
            });
        }
        if points[0].0 != 0.0 || fmath::abs(points[0].1) > 1e-12 {
            return Err(PsiError::InvalidEnvelope {
                reason: "grid must start at (0, 0)",
            });
        }
        let mut prev_slope = f64::NEG_INFINITY;
        for w in points.windows(2) {
            let (l0, p0) = w[0];
            let (l1, p1) = w[1];
            if !l1.is_finite() || !p1.is_finite() {
                return Err(PsiError::InvalidEnvelope {
                    reason: "grid contains non-finite values",
                });
            }
            if l1 <= l0 {
                return Err(PsiError::InvalidEnvelope {
                    reason: "grid lambdas must increase strictly",
                });
            }
            let slope = (p1 - p0) / (l1 - l0);
            if slope < -1e-12 {
                return Err(PsiError::InvalidEnvelope {
                    reason: "envelope must be nondecreasing",
                });
            }
            if slope < prev_slope - 1e-12 {
                return Err(PsiError::InvalidEnvelope {
                    reason: "grid slopes must be nondecreasing (convexity)",
                });
            }
            prev_slope = slope;
        }
        let pts: Vec<(f64, f64)> = points.to_vec();
        let last = *pts.last().expect("nonempty grid");
        let last_slope = prev_slope.max(0.0);
        let lambda_max = last.0 * 4.0;
        let eval = move |l: f64| -> f64 {
            if l <= 0.0 {
                return 0.0;
            }
            if l >= last.0 {
                return last.1 + last_slope * (l - last.0);
            }
            let idx = pts.partition_point(|&(gl, _)| gl <= l) - 1;
            let (l0, p0) = pts[idx];
            let (l1, p1) = pts[idx + 1];
            p0 + (p1 - p0) * (l - l0) / (l1 - l0)
        };
        Self::new(eval, lambda_max)
    }

    /// Domain cap of the evaluator.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Evaluates ψ at λ.
    pub fn eval(&self, lambda: f64) -> f64 {
        (self.eval)(lambda)
    }
}

/// An envelope for the increments' cumulant generating function.
#[derive(Debug, Clone)]
pub enum PsiEnvelope {
    /// `ψ(λ) = λ²σ²/2` with variance proxy `σ² > 0`.
    Subgaussian { sigma2: f64 },
    /// Arbitrary convex envelope via evaluator.
    General(GeneralPsi),
}

impl PsiEnvelope {
    /// Subgaussian envelope with the given variance proxy.
    pub fn subgaussian(sigma2: f64) -> Result<Self, PsiError> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(PsiError::InvalidEnvelope {
                reason: "variance proxy must be positive and finite",
            });
        }
        Ok(Self::Subgaussian { sigma2 })
    }

    /// Standard envelope, `σ² = 1`.
    pub fn standard() -> Self {
        Self::Subgaussian { sigma2: 1.0 }
    }

    /// General envelope from an evaluator.
    pub fn general(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lambda_max: f64,
    ) -> Result<Self, PsiError> {
        Ok(Self::General(GeneralPsi::new(eval, lambda_max)?))
    }

    /// General envelope from a piecewise-linear grid.
    pub fn from_grid(points: &[(f64, f64)]) -> Result<Self, PsiError> {
        Ok(Self::General(GeneralPsi::from_grid(points)?))
    }

    /// Variance proxy, when subgaussian.
    pub fn sigma2(&self) -> Option<f64> {
        match self {
            Self::Subgaussian { sigma2 } => Some(*sigma2),
            Self::General(_) => None,
        }
    }
}

/// Legendre dual `ψ*(x) = sup_{λ ≥ 0} { λx − ψ(λ) }`.
///
/// Subgaussian envelopes use the closed form `max(x, 0)²/(2σ²)`. General
/// envelopes are maximized by golden-section search over `[0, λ_max]` (the
/// objective is concave); a maximizer escaping to the cap means the
/// envelope cannot dominate the argument and surfaces
/// [`PsiError::DomainCapReached`].
pub fn psi_star(env: &PsiEnvelope, x: f64) -> Result<f64, PsiError> {
    match env {
        PsiEnvelope::Subgaussian { sigma2 } => {
            if x <= 0.0 {
                Ok(0.0)
            } else {
                Ok(x * x / (2.0 * sigma2))
            }
        }
        PsiEnvelope::General(g) => general_dual(g, x),
    }
}

fn general_dual(g: &GeneralPsi, x: f64) -> Result<f64, PsiError> {
    if x <= 0.0 {
        // λx − ψ(λ) ≤ 0 with equality at λ = 0 for a valid envelope.
        return Ok(0.0);
    }
    let f = |l: f64| l * x - g.eval(l);
    let mut a = 0.0;
    let mut b = g.lambda_max;
    // Golden-section search on the concave objective.
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while b - a > LEGENDRE_TOL * (1.0 + fmath::abs(a) + fmath::abs(b)) && iter < 400 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        iter += 1;
    }
    let value = f1.max(f2).max(0.0);
    // Detect a maximizer pinned at the cap: the objective still rises at
    // the right end of the domain.
    let cap = g.lambda_max;
    let probe = cap * (1.0 - 1e-6);
    if f(cap) > f(probe) && f(cap) >= value - 1e-9 * (1.0 + fmath::abs(value)) {
        return Err(PsiError::DomainCapReached {
            x,
            lambda_max: cap,
        });
    }
    Ok(value)
}

/// Inverse of the Legendre dual on `y ≥ 0`: the `x ≥ 0` with `ψ*(x) = y`.
///
/// Subgaussian envelopes use the closed form `√(2σ²y)`. General envelopes
/// bisect the strictly increasing `ψ*` after bracketing the target by
/// doubling; `+∞` maps to `+∞` so infinite information propagates as a
/// value, not an error.
pub fn psi_star_inverse(env: &PsiEnvelope, y: f64) -> Result<f64, PsiError> {
    if y.is_nan() || y < 0.0 {
        return Err(PsiError::NegativeInput { value: y });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    match env {
        PsiEnvelope::Subgaussian { sigma2 } => Ok(fmath::sqrt(2.0 * sigma2 * y)),
        PsiEnvelope::General(_) => {
            let mut hi = 1.0_f64;
            let mut expansions = 0;
            while psi_star(env, hi)? < y {
                hi *= 2.0;
                expansions += 1;
                if expansions > MAX_BRACKET_EXPANSIONS {
                    return Err(PsiError::BracketFailure {
                        target: y,
                        reached: hi,
                    });
                }
            }
            let mut lo = if expansions == 0 { 0.0 } else { hi / 2.0 };
            while hi - lo > LEGENDRE_TOL * (1.0 + hi) {
                let mid = 0.5 * (lo + hi);
                if psi_star(env, mid)? >= y {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}
