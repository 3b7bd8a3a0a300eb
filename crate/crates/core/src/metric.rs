//! Finite (pseudo)metric spaces, ε-nets, covering numbers, and increasing
//! dyadic partition hierarchies.
//!
//! Points are identified by their index `0..n`. Distances are held as a
//! validated symmetric matrix; zero off-diagonal distances are allowed
//! (pseudometrics arise naturally from loss tables with duplicate rows).
//!
//! Scales are dyadic throughout: level `k` corresponds to radius `2^-k`, and
//! `base_scale_index` returns the largest `k` whose level covers the whole
//! space, i.e. the largest `k` with `2^-(k-1) >= diameter`. Callers may start
//! a hierarchy at any smaller `k` (coarser levels are all one cell).

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;

/// Default slack for symmetry/triangle validation of floating-point
/// distance matrices.
pub const DEFAULT_METRIC_TOL: f64 = 1e-9;

/// Largest space size accepted by the exhaustive minimal-cover search
/// (`CoveringMode::Exact`); the search is exponential in the point count.
pub const EXACT_COVER_MAX_POINTS: usize = 20;

/// Errors from metric-space validation, net construction, and partitions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric space has no points")]
    EmptySpace,
    #[error("distance matrix row {row} has {got} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("distance entry ({i},{j}) is not finite: {value}")]
    NonFiniteEntry { i: usize, j: usize, value: f64 },
    #[error("negative distance at ({i},{j}): {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("nonzero self-distance at point {i}: {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("asymmetric distance at ({i},{j}): {left} vs {right}")]
    AsymmetricDistance {
        i: usize,
        j: usize,
        left: f64,
        right: f64,
    },
    #[error("triangle inequality violated at ({i},{j},{k}): d(i,k) exceeds d(i,j)+d(j,k) by {excess}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },
    #[error("point {point} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        point: usize,
        expected: usize,
        got: usize,
    },
    #[error("space has zero diameter; no base scale exists")]
    DegenerateSpace,
    #[error("scale must be positive and finite, got {scale}")]
    InvalidScale { scale: f64 },
    #[error("exact covering search supports at most {cap} points, space has {points}")]
    ExactTooLarge { points: usize, cap: usize },
    #[error("coarsest level k_min = {k_min} does not cover the space: 2^-(k_min-1) < diameter {diameter}")]
    ScaleMismatch { k_min: i32, diameter: f64 },
    #[error("invalid level range: k_min = {k_min}, k_max = {k_max}")]
    InvalidLevelRange { k_min: i32, k_max: i32 },
    #[error("partition level {k} out of the supported range")]
    LevelOutOfRange { k: i32 },
    #[error("phase {phase} outside [0, 2*pi)")]
    PhaseOutOfRange { phase: f64 },
    #[error("epsilon-net invariant violated: {reason}")]
    NetInvariantViolated { reason: &'static str },
    #[error("partition invariant violated at level {level}: {reason}")]
    PartitionInvariantViolated { level: i32, reason: &'static str },
}

/// How `covering_number` computes its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoveringMode {
    /// Size of the deterministic greedy net — an upper estimate of the true
    /// covering number.
    Greedy,
    /// True minimal cover by exhaustive search over center subsets; only for
    /// spaces with at most [`EXACT_COVER_MAX_POINTS`] points.
    Exact,
}

/// A finite metric space given by a validated distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    diameter: f64,
}

impl FiniteMetricSpace {
    /// Validates a square distance matrix and returns the space.
    ///
    /// Checks: entries finite and nonnegative, zero diagonal, symmetry, and
    /// the triangle inequality, the last two with additive slack
    /// `tol_metric` (floating-point matrices need it; pass
    /// [`DEFAULT_METRIC_TOL`] when in doubt). Zero off-diagonal entries are
    /// accepted, so pseudometrics validate.
    pub fn from_matrix(matrix: Vec<Vec<f64>>, tol_metric: f64) -> Result<Self, MetricError> {
        let n = matrix.len();
        if n == 0 {
            return Err(MetricError::EmptySpace);
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NotSquare {
                    row: i,
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = matrix[i][j];
                if !v.is_finite() {
                    return Err(MetricError::NonFiniteEntry { i, j, value: v });
                }
                if v < 0.0 {
                    return Err(MetricError::NegativeDistance { i, j, value: v });
                }
                dist[i * n + j] = v;
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal {
                    i,
                    value: dist[i * n + i],
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let left = dist[i * n + j];
                let right = dist[j * n + i];
                if fmath::abs(left - right) > tol_metric {
                    return Err(MetricError::AsymmetricDistance { i, j, left, right });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let excess = dist[i * n + k] - dist[i * n + j] - dist[j * n + k];
                    if excess > tol_metric {
                        return Err(MetricError::TriangleViolation { i, j, k, excess });
                    }
                }
            }
        }
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Ok(Self { n, dist, diameter })
    }

    /// Builds the space of Euclidean distances between the given points.
    ///
    /// All points must share one dimension and have finite coordinates.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = points.len();
        if n == 0 {
            return Err(MetricError::EmptySpace);
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(MetricError::DimensionMismatch {
                    point: i,
                    expected: dim,
                    got: p.len(),
                });
            }
            for &c in p {
                if !c.is_finite() {
                    return Err(MetricError::NonFiniteEntry {
                        i,
                        j: 0,
                        value: c,
                    });
                }
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let mut sq = 0.0;
                for (a, b) in points[i].iter().zip(&points[j]) {
                    let delta = a - b;
                    sq += delta * delta;
                }
                let v = fmath::sqrt(sq);
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Ok(Self { n, dist, diameter })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the space has exactly one point (never zero; construction
    /// rejects empty spaces).
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance between points `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "point index out of range");
        self.dist[i * self.n + j]
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// The largest integer `k` with `2^-(k-1) >= diameter`.
    ///
    /// This is the coarsest dyadic level whose single ball covers the whole
    /// space; callers may start hierarchies at any smaller `k`.
    pub fn base_scale_index(&self) -> Result<i32, MetricError> {
        if self.diameter == 0.0 {
            return Err(MetricError::DegenerateSpace);
        }
        // Predicate: 2^(1-k) >= diameter, evaluated exactly via pow2 with
        // guards for exponents outside the normal f64 range.
        let covers = |k: i32| -> bool {
            let e = 1 - k;
            if e > 1023 {
                true
            } else if e < -1021 {
                false
            } else {
                fmath::pow2(e) >= self.diameter
            }
        };
        let mut k = (1.0 - fmath::ln(self.diameter) / core::f64::consts::LN_2) as i32;
        k = k.clamp(-1100, 1100);
        while !covers(k) {
            k -= 1;
        }
        while covers(k + 1) {
            k += 1;
        }
        Ok(k)
    }

    /// Deterministic greedy ε-net at the given scale.
    ///
    /// Centers are admitted in point order: the lowest-index point farther
    /// than `scale` from every current center joins the net. Every point is
    /// then projected to its nearest center, ties to the lowest center index.
    pub fn greedy_epsilon_net(&self, scale: f64) -> Result<EpsilonNet, MetricError> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(MetricError::InvalidScale { scale });
        }
        let mut centers: Vec<usize> = Vec::new();
        for t in 0..self.n {
            let covered = centers.iter().any(|&c| self.dist(t, c) <= scale);
            if !covered {
                centers.push(t);
            }
        }
        let mut projection = vec![0usize; self.n];
        for (t, proj) in projection.iter_mut().enumerate() {
            let mut best = centers[0];
            let mut best_d = self.dist(t, centers[0]);
            for &c in &centers[1..] {
                let d = self.dist(t, c);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            *proj = best;
        }
        Ok(EpsilonNet {
            scale,
            centers,
            projection,
        })
    }

    /// Covering number at the given scale: the greedy net size
    /// (upper estimate) or the true minimum by exhaustive search.
    pub fn covering_number(&self, scale: f64, mode: CoveringMode) -> Result<usize, MetricError> {
        match mode {
            CoveringMode::Greedy => Ok(self.greedy_epsilon_net(scale)?.centers().len()),
            CoveringMode::Exact => self.exact_covering_number(scale, EXACT_COVER_MAX_POINTS),
        }
    }

    /// True minimal number of closed `scale`-balls centered at points of the
    /// space that cover it, by exhaustive subset search (`O(2^n)`).
    pub fn exact_covering_number(&self, scale: f64, cap: usize) -> Result<usize, MetricError> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(MetricError::InvalidScale { scale });
        }
        if self.n > cap || self.n > EXACT_COVER_MAX_POINTS {
            return Err(MetricError::ExactTooLarge {
                points: self.n,
                cap: cap.min(EXACT_COVER_MAX_POINTS),
            });
        }
        let full: u32 = if self.n == 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        let balls: Vec<u32> = (0..self.n)
            .map(|c| {
                let mut m = 0u32;
                for t in 0..self.n {
                    if self.dist(t, c) <= scale {
                        m |= 1 << t;
                    }
                }
                m
            })
            .collect();
        // Dynamic program over center subsets: union[mask] is the set of
        // points covered by the centers in `mask`.
        let mut union = vec![0u32; 1 << self.n];
        let mut best = self.n; // the all-centers cover always works
        for mask in 1usize..(1 << self.n) {
            let low = mask.trailing_zeros() as usize;
            union[mask] = union[mask & (mask - 1)] | balls[low];
            if union[mask] == full {
                best = best.min(mask.count_ones() as usize);
            }
        }
        Ok(best)
    }

    /// Builds an increasing sequence of partitions for levels
    /// `k_min..=k_max` (radius `2^-k` at level `k`).
    ///
    /// Each level starts from the greedy-net projection preimages at scale
    /// `2^-k`; refinement is enforced by intersecting every cell with the
    /// cells of the previous (coarser) level, so a finer cell always sits
    /// inside exactly one parent. Cells keep the net center they project to,
    /// which keeps every cell inside the closed `2^-k`-ball around its
    /// tagged center.
    pub fn build_dyadic_hierarchy(
        &self,
        k_min: i32,
        k_max: i32,
    ) -> Result<PartitionHierarchy, MetricError> {
        if k_max < k_min {
            return Err(MetricError::InvalidLevelRange { k_min, k_max });
        }
        if !(-1000..=1000).contains(&k_min) || !(-1000..=1000).contains(&k_max) {
            return Err(MetricError::LevelOutOfRange {
                k: if (-1000..=1000).contains(&k_min) { k_max } else { k_min },
            });
        }
        if fmath::pow2(1 - k_min) < self.diameter {
            return Err(MetricError::ScaleMismatch {
                k_min,
                diameter: self.diameter,
            });
        }
        let mut levels: Vec<PartitionLevel> = Vec::new();
        for k in k_min..=k_max {
            let net = self.greedy_epsilon_net(fmath::pow2(-k))?;
            let level = match levels.last() {
                None => PartitionLevel::from_net(k, &net, self.n),
                Some(prev) => PartitionLevel::refine(k, &net, prev, self.n),
            };
            levels.push(level);
        }
        Ok(PartitionHierarchy { k_min, levels })
    }
}

/// An ε-net: centers plus a total projection map.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonNet {
    scale: f64,
    centers: Vec<usize>,
    projection: Vec<usize>,
}

impl EpsilonNet {
    /// The net's radius.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Net centers, in admission (= point index) order.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Center assigned to each point (indexed by point id; values are point
    /// ids of centers).
    pub fn projection(&self) -> &[usize] {
        &self.projection
    }

    /// Checks the net invariants against its space: every point lies within
    /// `scale` of its assigned center, centers are pairwise farther than
    /// `scale` apart, and every center projects to itself.
    pub fn validate(&self, space: &FiniteMetricSpace) -> Result<(), MetricError> {
        if self.projection.len() != space.len() {
            return Err(MetricError::NetInvariantViolated {
                reason: "projection length differs from point count",
            });
        }
        for (t, &c) in self.projection.iter().enumerate() {
            if !self.centers.contains(&c) {
                return Err(MetricError::NetInvariantViolated {
                    reason: "projection target is not a center",
                });
            }
            if space.dist(t, c) > self.scale {
                return Err(MetricError::NetInvariantViolated {
                    reason: "point farther than scale from its center",
                });
            }
        }
        for (a, &ca) in self.centers.iter().enumerate() {
            if self.projection[ca] != ca {
                return Err(MetricError::NetInvariantViolated {
                    reason: "center does not project to itself",
                });
            }
            for &cb in &self.centers[a + 1..] {
                if space.dist(ca, cb) <= self.scale {
                    return Err(MetricError::NetInvariantViolated {
                        reason: "two centers within scale of each other",
                    });
                }
            }
        }
        Ok(())
    }
}

/// One level of a partition hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLevel {
    /// Dyadic level: cells sit in closed balls of radius `2^-k`.
    pub k: i32,
    /// Cell index of every point (dense indices `0..cell_count`).
    pub cell_of_point: Vec<usize>,
    /// Tagged covering center (a point id) of every cell.
    pub cell_center: Vec<usize>,
    /// Parent cell (index into the previous, coarser level) of every cell;
    /// empty for the first level of a hierarchy.
    pub cell_parent: Vec<usize>,
}

impl PartitionLevel {
    fn from_net(k: i32, net: &EpsilonNet, n: usize) -> Self {
        let mut cell_of_point = vec![usize::MAX; n];
        let mut cell_center: Vec<usize> = Vec::new();
        for (cell, &c) in cell_of_point.iter_mut().zip(net.projection()) {
            let id = match cell_center.iter().position(|&cc| cc == c) {
                Some(id) => id,
                None => {
                    cell_center.push(c);
                    cell_center.len() - 1
                }
            };
            *cell = id;
        }
        Self {
            k,
            cell_of_point,
            cell_center,
            cell_parent: Vec::new(),
        }
    }

    fn refine(k: i32, net: &EpsilonNet, prev: &PartitionLevel, n: usize) -> Self {
        // A finer cell is the set of points sharing both a parent cell and a
        // net center at this scale; ids are assigned in first-encounter
        // order over points, which keeps the construction deterministic.
        let mut cell_of_point = vec![usize::MAX; n];
        let mut keys: Vec<(usize, usize)> = Vec::new();
        let mut cell_center: Vec<usize> = Vec::new();
        let mut cell_parent: Vec<usize> = Vec::new();
        for (t, cell) in cell_of_point.iter_mut().enumerate() {
            let key = (prev.cell_of_point[t], net.projection()[t]);
            let id = match keys.iter().position(|&kk| kk == key) {
                Some(id) => id,
                None => {
                    keys.push(key);
                    cell_parent.push(key.0);
                    cell_center.push(key.1);
                    keys.len() - 1
                }
            };
            *cell = id;
        }
        Self {
            k,
            cell_of_point,
            cell_center,
            cell_parent,
        }
    }

    /// Number of cells at this level.
    pub fn cell_count(&self) -> usize {
        self.cell_center.len()
    }
}

/// An increasing sequence of partitions at dyadic scales.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionHierarchy {
    k_min: i32,
    levels: Vec<PartitionLevel>,
}

impl PartitionHierarchy {
    /// Coarsest level index.
    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    /// Finest level index.
    pub fn k_max(&self) -> i32 {
        self.k_min + self.levels.len() as i32 - 1
    }

    /// All levels, coarse to fine.
    pub fn levels(&self) -> &[PartitionLevel] {
        &self.levels
    }

    /// The level at index `k`, if within range.
    pub fn level(&self, k: i32) -> Option<&PartitionLevel> {
        let idx = k.checked_sub(self.k_min)?;
        if idx < 0 {
            return None;
        }
        self.levels.get(idx as usize)
    }

    /// Cell index of point `t` at level `k`.
    pub fn cell_index(&self, t: usize, k: i32) -> Option<usize> {
        self.level(k).map(|l| l.cell_of_point[t])
    }

    /// Verifies every hierarchy invariant against the space: each cell sits
    /// in the closed `2^-k`-ball around its tagged center (with `tol` slack
    /// for floating-point distances), cell indices are dense and in range,
    /// and each finer cell maps into exactly the coarser cell that contains
    /// all of its points.
    pub fn validate(&self, space: &FiniteMetricSpace, tol: f64) -> Result<(), MetricError> {
        for (li, level) in self.levels.iter().enumerate() {
            let radius = fmath::pow2(-level.k);
            if level.cell_of_point.len() != space.len() {
                return Err(MetricError::PartitionInvariantViolated {
                    level: level.k,
                    reason: "cell assignment length differs from point count",
                });
            }
            for (t, &cell) in level.cell_of_point.iter().enumerate() {
                if cell >= level.cell_count() {
                    return Err(MetricError::PartitionInvariantViolated {
                        level: level.k,
                        reason: "cell index out of range",
                    });
                }
                if space.dist(t, level.cell_center[cell]) > radius + tol {
                    return Err(MetricError::PartitionInvariantViolated {
                        level: level.k,
                        reason: "point outside the ball around its cell center",
                    });
                }
                if li > 0 {
                    let prev = &self.levels[li - 1];
                    if level.cell_parent.len() != level.cell_count() {
                        return Err(MetricError::PartitionInvariantViolated {
                            level: level.k,
                            reason: "parent map length differs from cell count",
                        });
                    }
                    if prev.cell_of_point[t] != level.cell_parent[cell] {
                        return Err(MetricError::PartitionInvariantViolated {
                            level: level.k,
                            reason: "refinement map inconsistent with point membership",
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Cell index of `phase` in the dyadic partition of the unit circle at
/// level `k`: the circle splits into `2^(k+2)` equal arcs and the cell is
/// `floor(phase / (2*pi / 2^(k+2)))`.
///
/// Levels nest exactly: the cell at level `k` is the cell at level `k+1`
/// shifted right by one bit. This holds bit-for-bit because the phase is
/// scaled once by `1/(2*pi)` and then multiplied by exact powers of two.
pub fn circle_dyadic_partition(k: i32, phase: f64) -> Result<u64, MetricError> {
    if !(-1..=61).contains(&k) {
        return Err(MetricError::LevelOutOfRange { k });
    }
    if !(0.0..core::f64::consts::TAU).contains(&phase) {
        return Err(MetricError::PhaseOutOfRange { phase });
    }
    let mut unit = phase / core::f64::consts::TAU;
    if unit >= 1.0 {
        // Guard against the division rounding up at phases just below 2*pi.
        unit = 1.0 - f64::EPSILON / 2.0;
    }
    let cell = fmath::floor(unit * fmath::pow2(k + 2));
    debug_assert!(cell >= 0.0 && cell < fmath::pow2(k + 2));
    Ok(cell as u64)
}
