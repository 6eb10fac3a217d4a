//! Convex-hull queries over finite point clouds in low dimension.
//!
//! Achievable regions in this crate are up-closed: enlarging any coordinate
//! of an achievable vector keeps it achievable. Such a region generated by a
//! finite cloud `P` is
//!
//! ```text
//! { q : exists lambda >= 0, sum lambda = 1, sum_k lambda_k p_k <= q }
//! ```
//!
//! so membership and boundary evaluation are linear programs with one row per
//! coordinate. The solver is a two-phase dense tableau simplex (Dantzig
//! pricing with a Bland fallback against degenerate stalls); dimensions here
//! are at most five rows, so the tableau stays tiny in the row direction and
//! only the column count (one per cloud point) grows.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// Removes points that are weakly dominated from below.
///
/// A point is kept iff no other point is `<=` in every coordinate (bitwise
/// duplicates collapse to one representative). For an up-closed region this
/// prune is exact: the generated region is unchanged.
pub fn pareto_min_prune(mut points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    points.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.partial_cmp(y).expect("stats are finite") {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    });
    points.dedup();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    'outer: for p in points {
        // In lexicographic order a dominator always precedes its victims,
        // so checking against already-kept points suffices.
        for k in &kept {
            if k.iter().zip(&p).all(|(a, b)| a <= b) {
                continue 'outer;
            }
        }
        kept.push(p);
    }
    kept
}

/// Minimizes `sum_k lambda_k objective_k` over mixtures of the cloud points
/// subject to `sum_k lambda_k points_k[j] <= caps[j]` for every row `j`.
///
/// Points and caps must share a dimension and all entries must be finite.
/// Returns `None` when no mixture satisfies the caps. Points are assumed
/// componentwise nonnegative, so a negative cap is immediately infeasible.
pub fn simplex_min(points: &[Vec<f64>], caps: &[f64], objective: &[f64]) -> Option<f64> {
    simplex_min_with_weights(points, caps, objective).map(|(v, _)| v)
}

/// As `simplex_min`, but also reports the optimal mixture as `(point index,
/// weight)` pairs in ascending index order, weights below `1e-12` dropped.
pub fn simplex_min_with_weights(
    points: &[Vec<f64>],
    caps: &[f64],
    objective: &[f64],
) -> Option<(f64, Vec<(usize, f64)>)> {
    let n = points.len();
    if n == 0 || objective.len() != n {
        return None;
    }
    let d = caps.len();
    if caps.iter().any(|&c| c < 0.0) {
        return None;
    }

    // Columns: n point weights, d slacks, 1 artificial (for the convexity
    // row), 1 right-hand side. Rows: d cap rows then the convexity row.
    let rows = d + 1;
    let cols = n + d + 1;
    let art = n + d;
    let mut t = vec![vec![0.0f64; cols + 1]; rows];
    for j in 0..d {
        for (k, p) in points.iter().enumerate() {
            t[j][k] = p[j];
        }
        t[j][n + j] = 1.0;
        t[j][cols] = caps[j];
    }
    for k in 0..n {
        t[rows - 1][k] = 1.0;
    }
    t[rows - 1][art] = 1.0;
    t[rows - 1][cols] = 1.0;
    let mut basis: Vec<usize> = (0..d).map(|j| n + j).collect();
    basis.push(art);

    // Phase one: minimize the artificial variable. Its reduced-cost row is
    // the negation of the convexity row while the artificial is basic.
    let mut obj = vec![0.0f64; cols + 1];
    for c in 0..=cols {
        obj[c] = -t[rows - 1][c];
    }
    obj[art] = 0.0;
    run_simplex(&mut t, &mut basis, &mut obj, Some(art));
    if -obj[cols] > FEAS_TOL {
        return None;
    }

    // Phase two: minimize the real objective, artificial forbidden.
    let mut obj2 = vec![0.0f64; cols + 1];
    for k in 0..n {
        obj2[k] = objective[k];
    }
    // Price out the current basis.
    for (r, &b) in basis.iter().enumerate() {
        if obj2[b] != 0.0 {
            let coef = obj2[b];
            for c in 0..=cols {
                obj2[c] -= coef * t[r][c];
            }
        }
    }
    run_simplex(&mut t, &mut basis, &mut obj2, Some(art));
    let mut value = 0.0;
    let mut weights = Vec::new();
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            value += objective[b] * t[r][cols];
            if t[r][cols] > 1e-12 {
                weights.push((b, t[r][cols]));
            }
        }
    }
    weights.sort_by_key(|&(i, _)| i);
    Some((value, weights))
}

/// Consecutive degenerate pivots tolerated under the fast entering rule
/// before switching to Bland's rule for guaranteed escape.
const STALL_LIMIT: usize = 64;

/// Dense tableau simplex in canonical form. `forbidden` marks a column that
/// may never enter (the artificial in phase two).
///
/// Entering follows Dantzig's rule until a run of degenerate pivots shows the
/// walk is stalled, then Bland's rule takes over for the rest of the solve.
/// The leaving row is the exact minimum ratio; among rows tied within a fixed
/// window the smallest basis index wins, so degenerate ties break the same
/// way Bland's argument requires and the ratio itself never drifts upward.
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut [f64],
    forbidden: Option<usize>,
) {
    let rows = t.len();
    let cols = obj.len() - 1;
    let mut stalled = 0usize;
    loop {
        let mut enter = None;
        if stalled < STALL_LIMIT {
            let mut best = -PIVOT_TOL;
            for c in 0..cols {
                if Some(c) == forbidden || basis.contains(&c) {
                    continue;
                }
                if obj[c] < best {
                    best = obj[c];
                    enter = Some(c);
                }
            }
        } else {
            for c in 0..cols {
                if Some(c) == forbidden || basis.contains(&c) {
                    continue;
                }
                if obj[c] < -PIVOT_TOL {
                    enter = Some(c);
                    break;
                }
            }
        }
        let Some(e) = enter else { return };
        let mut min_ratio = f64::INFINITY;
        for r in 0..rows {
            if t[r][e] > PIVOT_TOL {
                min_ratio = min_ratio.min(t[r][cols] / t[r][e]);
            }
        }
        if !min_ratio.is_finite() {
            // Unbounded cannot occur: every column sits under the convexity
            // row, bounding all weights by one. Bail out defensively.
            return;
        }
        let tie = min_ratio + PIVOT_TOL;
        let mut leave: Option<usize> = None;
        for r in 0..rows {
            if t[r][e] > PIVOT_TOL && t[r][cols] / t[r][e] <= tie {
                match leave {
                    Some(lr) if basis[lr] < basis[r] => {}
                    _ => leave = Some(r),
                }
            }
        }
        let lr = leave.expect("a finite minimum ratio names at least one row");
        stalled = if min_ratio > PIVOT_TOL { 0 } else { stalled + 1 };
        let piv = t[lr][e];
        for c in 0..=cols {
            t[lr][c] /= piv;
        }
        for r in 0..rows {
            if r != lr && t[r][e].abs() > 0.0 {
                let coef = t[r][e];
                for c in 0..=cols {
                    t[r][c] -= coef * t[lr][c];
                }
            }
        }
        if obj[e].abs() > 0.0 {
            let coef = obj[e];
            for c in 0..=cols {
                obj[c] -= coef * t[lr][c];
            }
        }
        basis[lr] = e;
    }
}

/// The up-closed convex region generated by a finite cloud of nonnegative
/// stat vectors.
#[derive(Debug, Clone)]
pub struct ConvexCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl ConvexCloud {
    /// Builds the region, Pareto-pruning redundant generators.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::ShapeMismatch { expected: 1, got: 0 });
        };
        let dim = first.len();
        for p in &points {
            if p.len() != dim {
                return Err(Error::ShapeMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NegativeDistortion { value: f64::NAN });
            }
        }
        Ok(ConvexCloud { dim, points: pareto_min_prune(points) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Whether `q` lies in the up-closed hull.
    pub fn contains(&self, q: &[f64]) -> Result<bool> {
        if q.len() != self.dim {
            return Err(Error::ShapeMismatch { expected: self.dim, got: q.len() });
        }
        let zeros = vec![0.0; self.points.len()];
        Ok(simplex_min(&self.points, q, &zeros).is_some())
    }

    /// Minimum of the last coordinate over the region, given caps on all
    /// earlier coordinates. `None` when even the caps alone are infeasible.
    pub fn min_last_coord(&self, caps: &[f64]) -> Result<Option<f64>> {
        if caps.len() + 1 != self.dim {
            return Err(Error::ShapeMismatch { expected: self.dim - 1, got: caps.len() });
        }
        let reduced: Vec<Vec<f64>> =
            self.points.iter().map(|p| p[..self.dim - 1].to_vec()).collect();
        let objective: Vec<f64> = self.points.iter().map(|p| p[self.dim - 1]).collect();
        Ok(simplex_min(&reduced, caps, &objective))
    }
}
