//! Discrete information measures in nats.
//!
//! Conventions: `0·log 0 = 0` everywhere; a `0/0` ratio inside mutual
//! information contributes `0`; KL divergence of `p` from `q` is `+∞`
//! whenever `p` puts mass where `q` has none — that infinity is returned as
//! `f64::INFINITY`, a first-class value, never an error.

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;

/// Slack when checking that a probability vector sums to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Slack when checking that a joint table sums to one.
pub const JOINT_NORMALIZATION_TOL: f64 = 1e-12;

/// Errors from information-measure inputs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InfoError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("distribution entry {index} is negative or non-finite: {value}")]
    InvalidEntry { index: usize, value: f64 },
    #[error("distribution sums to {sum}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("argument {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("support mismatch: {reason}")]
    SupportMismatch { reason: &'static str },
    #[error("empty sample")]
    EmptySample,
    #[error("label map assigns label {label} at index {index}, beyond the declared {count} labels")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        count: usize,
    },
}

fn validate_dist(p: &[f64], tol: f64) -> Result<(), InfoError> {
    if p.is_empty() {
        return Err(InfoError::EmptyDistribution);
    }
    let mut sum = 0.0;
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(InfoError::InvalidEntry { index, value });
        }
        sum += value;
    }
    if fmath::abs(sum - 1.0) > tol {
        return Err(InfoError::NotNormalized { sum, tol });
    }
    Ok(())
}

/// Shannon entropy `-Σ p log p` of a probability vector, in nats.
pub fn entropy(p: &[f64]) -> Result<f64, InfoError> {
    validate_dist(p, NORMALIZATION_TOL)?;
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * fmath::ln(v);
        }
    }
    Ok(h.max(0.0))
}

/// Binary entropy `H(α) = -α log α - (1-α) log(1-α)` in nats, with
/// `H(0) = H(1) = 0`.
pub fn binary_entropy(alpha: f64) -> Result<f64, InfoError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(InfoError::OutOfRange { value: alpha });
    }
    let mut h = 0.0;
    if alpha > 0.0 {
        h -= alpha * fmath::ln(alpha);
    }
    if alpha < 1.0 {
        h -= (1.0 - alpha) * fmath::ln(1.0 - alpha);
    }
    Ok(h.max(0.0))
}

/// KL divergence `D(p‖q) = Σ p log(p/q)` in nats.
///
/// Returns `f64::INFINITY` when `p` is not absolutely continuous with
/// respect to `q`; lengths must match.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::SupportMismatch {
            reason: "probability vectors have different lengths",
        });
    }
    validate_dist(p, NORMALIZATION_TOL)?;
    validate_dist(q, NORMALIZATION_TOL)?;
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            d += pi * fmath::ln(pi / qi);
        }
    }
    Ok(d.max(0.0))
}

/// A validated joint distribution over pairs `(w, x)`, stored row-major
/// (rows index `w`). Marginals are always derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    /// Validates a nonnegative table summing to one within
    /// [`JOINT_NORMALIZATION_TOL`].
    pub fn from_table(table: &[Vec<f64>]) -> Result<Self, InfoError> {
        let rows = table.len();
        if rows == 0 || table[0].is_empty() {
            return Err(InfoError::EmptyDistribution);
        }
        let cols = table[0].len();
        let mut p = Vec::with_capacity(rows * cols);
        let mut sum = 0.0;
        for (i, row) in table.iter().enumerate() {
            if row.len() != cols {
                return Err(InfoError::SupportMismatch {
                    reason: "joint table rows have unequal lengths",
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(InfoError::InvalidEntry {
                        index: i * cols + j,
                        value: v,
                    });
                }
                sum += v;
                p.push(v);
            }
        }
        if fmath::abs(sum - 1.0) > JOINT_NORMALIZATION_TOL {
            return Err(InfoError::NotNormalized {
                sum,
                tol: JOINT_NORMALIZATION_TOL,
            });
        }
        Ok(Self { rows, cols, p })
    }

    /// Number of `w` outcomes (rows).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of `x` outcomes (columns).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Probability of the pair `(w, x)`.
    pub fn prob(&self, w: usize, x: usize) -> f64 {
        self.p[w * self.cols + x]
    }

    /// Marginal distribution of `w`.
    pub fn row_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.rows];
        for (w, mw) in m.iter_mut().enumerate() {
            for x in 0..self.cols {
                *mw += self.prob(w, x);
            }
        }
        m
    }

    /// Marginal distribution of `x`.
    pub fn col_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for w in 0..self.rows {
            for (x, mx) in m.iter_mut().enumerate() {
                *mx += self.prob(w, x);
            }
        }
        m
    }

    /// Mutual information `I(W;X) = Σ p(w,x) log( p(w,x) / (p(w)p(x)) )`
    /// in nats. Zero cells contribute zero.
    pub fn mutual_information(&self) -> f64 {
        let pw = self.row_marginal();
        let px = self.col_marginal();
        let mut mi = 0.0;
        for (w, &pww) in pw.iter().enumerate() {
            for (x, &pxx) in px.iter().enumerate() {
                let pwx = self.prob(w, x);
                if pwx > 0.0 {
                    mi += pwx * fmath::ln(pwx / (pww * pxx));
                }
            }
        }
        mi.max(0.0)
    }

    /// Push-forward of the `w` coordinate through a label map: row `w` of
    /// the result accumulates every input row mapped to it. Used to express
    /// quantized selections `[W]_k` as coarsenings of a finer joint.
    pub fn coarsen_rows(&self, map: &[usize], new_rows: usize) -> Result<Self, InfoError> {
        if map.len() != self.rows {
            return Err(InfoError::SupportMismatch {
                reason: "label map length differs from row count",
            });
        }
        if new_rows == 0 {
            return Err(InfoError::EmptyDistribution);
        }
        for (index, &label) in map.iter().enumerate() {
            if label >= new_rows {
                return Err(InfoError::LabelOutOfRange {
                    index,
                    label,
                    count: new_rows,
                });
            }
        }
        let mut p = vec![0.0; new_rows * self.cols];
        for w in 0..self.rows {
            for x in 0..self.cols {
                p[map[w] * self.cols + x] += self.prob(w, x);
            }
        }
        Ok(Self {
            rows: new_rows,
            cols: self.cols,
            p,
        })
    }
}

/// Plug-in mutual-information estimate from labeled pairs, in nats.
///
/// Builds the empirical joint frequency table and evaluates its mutual
/// information. Biased upward for small samples: first order
/// `(|W|-1)(|X|-1)/(2n)`.
pub fn plug_in_mi(samples: &[(u64, u64)]) -> Result<f64, InfoError> {
    if samples.is_empty() {
        return Err(InfoError::EmptySample);
    }
    // Dense relabeling of whatever label values appear.
    let mut w_labels: Vec<u64> = samples.iter().map(|s| s.0).collect();
    w_labels.sort_unstable();
    w_labels.dedup();
    let mut x_labels: Vec<u64> = samples.iter().map(|s| s.1).collect();
    x_labels.sort_unstable();
    x_labels.dedup();
    let rows = w_labels.len();
    let cols = x_labels.len();
    let mut counts = vec![0u64; rows * cols];
    for &(w, x) in samples {
        let wi = w_labels.binary_search(&w).expect("label present");
        let xi = x_labels.binary_search(&x).expect("label present");
        counts[wi * cols + xi] += 1;
    }
    let mut row_tot = vec![0u64; rows];
    let mut col_tot = vec![0u64; cols];
    for wi in 0..rows {
        for xi in 0..cols {
            row_tot[wi] += counts[wi * cols + xi];
            col_tot[xi] += counts[wi * cols + xi];
        }
    }
    // MI of the empirical table, computed from integer counts so that no
    // normalization drift accumulates: n_wx/n * log(n * n_wx / (n_w n_x)).
    let n = samples.len() as f64;
    let mut mi = 0.0;
    for wi in 0..rows {
        for xi in 0..cols {
            let c = counts[wi * cols + xi];
            if c > 0 {
                let ratio = (c as f64 * n) / (row_tot[wi] as f64 * col_tot[xi] as f64);
                mi += (c as f64 / n) * fmath::ln(ratio);
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Gap of the variational (Donsker–Varadhan) representation of KL
/// divergence at its maximizer: `D(p‖q) - (E_p[f*] - log E_q[e^{f*}])`
/// with `f* = log(p/q)`.
///
/// The representation is tight at `f*`, so the result is `0` up to float
/// rounding (contract: within `1e-9`). Requires `p` absolutely continuous
/// with respect to `q`.
pub fn dv_gap(p: &[f64], q: &[f64]) -> Result<f64, InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::SupportMismatch {
            reason: "probability vectors have different lengths",
        });
    }
    validate_dist(p, NORMALIZATION_TOL)?;
    validate_dist(q, NORMALIZATION_TOL)?;
    for (&pi, &qi) in p.iter().zip(q) {
        if qi == 0.0 && pi > 0.0 {
            return Err(InfoError::SupportMismatch {
                reason: "p is not absolutely continuous with respect to q",
            });
        }
    }
    let d = kl_divergence(p, q)?;
    // E_p[f*] and log E_q[e^{f*}], evaluated literally from f* = log(p/q).
    let mut e_p = 0.0;
    let mut e_q_exp = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if qi > 0.0
            && pi > 0.0 {
                let f = fmath::ln(pi / qi);
                e_p += pi * f;
                e_q_exp += qi * fmath::exp(f);
            }
            // pi == 0: e^{f*} = 0 contributes nothing to E_q either.
    }
    Ok(d - (e_p - fmath::ln(e_q_exp)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn entropy_uniform_and_point_mass() {
        let u = entropy(&[0.25; 4]).unwrap();
        assert!((u - fmath::ln(4.0)).abs() < 1e-12);
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_nine_tenths() {
        // -0.9 log 0.9 - 0.1 log 0.1
        let h = entropy(&[0.9, 0.1]).unwrap();
        assert!((h - 0.3250829733914482).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_bad_vectors() {
        assert!(matches!(entropy(&[]), Err(InfoError::EmptyDistribution)));
        assert!(matches!(
            entropy(&[0.5, 0.6]),
            Err(InfoError::NotNormalized { .. })
        ));
        assert!(matches!(
            entropy(&[-0.1, 1.1]),
            Err(InfoError::InvalidEntry { index: 0, .. })
        ));
    }

    #[test]
    fn binary_entropy_values() {
        assert!((binary_entropy(0.5).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let h = binary_entropy(0.9).unwrap();
        assert!((h - 0.3250829733914482).abs() < 1e-12);
        assert!(matches!(
            binary_entropy(1.5),
            Err(InfoError::OutOfRange { .. })
        ));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(InfoError::SupportMismatch { .. })
        ));
    }

    #[test]
    fn joint_validation() {
        assert!(matches!(
            JointDistribution::from_table(&[vec![0.5, 0.6]]),
            Err(InfoError::NotNormalized { .. })
        ));
        assert!(matches!(
            JointDistribution::from_table(&[vec![0.5], vec![0.25, 0.25]]),
            Err(InfoError::SupportMismatch { .. })
        ));
    }

    #[test]
    fn mi_product_is_zero_and_diagonal_is_log_m() {
        let product = JointDistribution::from_table(&[
            vec![0.06, 0.14],
            vec![0.24, 0.56],
        ])
        .unwrap();
        assert!(product.mutual_information() < 1e-12);

        let m = 4;
        let table: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { 1.0 / m as f64 } else { 0.0 })
                    .collect()
            })
            .collect();
        let diag = JointDistribution::from_table(&table).unwrap();
        assert!((diag.mutual_information() - fmath::ln(m as f64)).abs() < 1e-12);
    }

    #[test]
    fn mi_matches_entropy_identity() {
        // Fixed pseudo-random 3x3 joint.
        let raw = [
            [0.11, 0.05, 0.21],
            [0.07, 0.18, 0.02],
            [0.09, 0.13, 0.14],
        ];
        let table: Vec<Vec<f64>> = raw.iter().map(|r| r.to_vec()).collect();
        let joint = JointDistribution::from_table(&table).unwrap();
        let flat: Vec<f64> = table.iter().flatten().copied().collect();
        let identity = entropy(&joint.row_marginal()).unwrap()
            + entropy(&joint.col_marginal()).unwrap()
            - entropy(&flat).unwrap();
        assert!((joint.mutual_information() - identity).abs() < 1e-12);
    }

    #[test]
    fn coarsening_never_increases_mi() {
        let table = vec![
            vec![0.10, 0.02, 0.08],
            vec![0.05, 0.20, 0.05],
            vec![0.02, 0.08, 0.10],
            vec![0.15, 0.05, 0.10],
        ];
        let fine = JointDistribution::from_table(&table).unwrap();
        let coarse = fine.coarsen_rows(&[0, 0, 1, 1], 2).unwrap();
        assert!(coarse.mutual_information() <= fine.mutual_information() + 1e-12);
    }

    #[test]
    fn plug_in_mi_degenerate_and_errors() {
        assert_eq!(plug_in_mi(&[(3, 7); 10]).unwrap(), 0.0);
        assert!(matches!(plug_in_mi(&[]), Err(InfoError::EmptySample)));
    }

    #[test]
    fn plug_in_mi_matches_joint_mi_on_counts() {
        // 60 samples over a 2x2 table with counts 30, 10, 10, 10.
        let mut samples = Vec::new();
        samples.extend(core::iter::repeat_n((0u64, 0u64), 30));
        samples.extend(core::iter::repeat_n((0u64, 1u64), 10));
        samples.extend(core::iter::repeat_n((1u64, 0u64), 10));
        samples.extend(core::iter::repeat_n((1u64, 1u64), 10));
        let est = plug_in_mi(&samples).unwrap();
        let joint = JointDistribution::from_table(&[
            vec![0.5, 1.0 / 6.0],
            vec![1.0 / 6.0, 1.0 / 6.0],
        ])
        .unwrap();
        assert!((est - joint.mutual_information()).abs() < 1e-12);
    }

    #[test]
    fn dv_gap_is_zero_at_maximizer() {
        assert!(dv_gap(&[0.3, 0.7], &[0.3, 0.7]).unwrap().abs() < 1e-12);
        let g = dv_gap(&[0.9, 0.1], &[0.5, 0.5]).unwrap();
        assert!(g.abs() < 1e-9, "gap {g}");
        let g5 = dv_gap(
            &[0.05, 0.25, 0.30, 0.15, 0.25],
            &[0.20, 0.20, 0.20, 0.20, 0.20],
        )
        .unwrap();
        assert!(g5.abs() < 1e-9, "gap {g5}");
    }

    #[test]
    fn dv_gap_requires_absolute_continuity() {
        assert!(matches!(
            dv_gap(&[0.5, 0.5], &[1.0, 0.0]),
            Err(InfoError::SupportMismatch { .. })
        ));
    }
}
