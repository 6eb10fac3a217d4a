//! The Daily Double: betting on a pair of races under rate-limited
//! descriptions, jointly watched or separately watched.
//!
//! With descriptions of rates `R1, R2` produced by a single observer of the
//! pair, the optimal doubling rate is the odds yield minus the minimal
//! log-loss distortion at that rate pair,
//!
//! ```text
//! W_jw = E[log2 o(Y1, Y2)] - max(H(Y1|Y2)-R1, H(Y2|Y1)-R2, H(Y1,Y2)-R1-R2, 0).
//! ```
//!
//! When each race is watched by its own wagerer the decoder's bets cannot
//! exploit correlation the descriptions fail to carry; the loss relative to
//! joint watching is
//!
//! ```text
//! Delta(R1, R2) = inf I(Y1; Y2 | U1, U2, Q)
//! ```
//!
//! over timeshared configurations whose rate statistics fit inside the rate
//! pair. The infimum is approached here over the channel mesh, so the
//! computed value upper-bounds the true one. At zero rate it is exactly
//! `I(Y1; Y2)`; it never falls below `I(Y1;Y2) - rho_m^2 (R1+R2)`, with
//! `rho_m` the maximal correlation of the pair.

use crate::ceo::{sw_minus_d_min_distortion, sweep_configs, CeoInstance, ConfigStats};
use crate::hull::simplex_min_with_weights;
use crate::info::{extend_with_aux, kl_divergence, AuxConfig, Channel, JointPmf};
use crate::search::{SearchGrid, SweepCache};
use crate::{Error, Result};

/// Odds offered on the joint outcome, flattened with `y2` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceSpec {
    odds: Vec<f64>,
}

impl RaceSpec {
    pub fn new(odds: Vec<f64>) -> Result<Self> {
        for (i, &o) in odds.iter().enumerate() {
            if !(o > 0.0) || !o.is_finite() {
                return Err(Error::BadOdds { index: i, value: o });
            }
        }
        Ok(RaceSpec { odds })
    }

    /// Fair uniform odds `|Y1| * |Y2|` on every outcome.
    pub fn constant(n1: usize, n2: usize) -> Self {
        RaceSpec { odds: vec![(n1 * n2) as f64; n1 * n2] }
    }

    pub fn odds(&self) -> &[f64] {
        &self.odds
    }

    /// `E[log2 o(Y1, Y2)]` in bits.
    pub fn expected_log_odds(&self, pair: &JointPmf) -> Result<f64> {
        if self.odds.len() != pair.probs().len() {
            return Err(Error::ShapeMismatch {
                expected: pair.probs().len(),
                got: self.odds.len(),
            });
        }
        Ok(pair
            .probs()
            .iter()
            .zip(&self.odds)
            .map(|(&p, &o)| if p > 0.0 { p * o.log2() } else { 0.0 })
            .sum())
    }
}

/// Rows kept verbatim once the dominance scan would cost more than the
/// linear programs it speeds up.
const PRUNE_SCAN_LIMIT: usize = 150_000;

/// Weak Pareto prune over `(r1_cond, r2_cond, sum_rate, residual_mi)` that
/// remembers original configuration indices. Dominated rows cannot appear
/// in any optimal mixture, so the prune is exact for the programs below.
/// Above `PRUNE_SCAN_LIMIT` rows only the duplicate removal runs; the
/// programs stay correct on the unpruned rows.
fn prune_stats(stats: &[ConfigStats]) -> Vec<(Vec<f64>, usize)> {
    let mut rows: Vec<(Vec<f64>, usize)> = stats
        .iter()
        .enumerate()
        .map(|(i, s)| (vec![s.r1_cond, s.r2_cond, s.sum_rate, s.residual_mi], i))
        .collect();
    rows.sort_by(|a, b| {
        for (x, y) in a.0.iter().zip(&b.0) {
            match x.partial_cmp(y).expect("stats are finite") {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        a.1.cmp(&b.1)
    });
    rows.dedup_by(|next, kept| next.0 == kept.0);
    if rows.len() > PRUNE_SCAN_LIMIT {
        return rows;
    }
    let mut kept: Vec<(Vec<f64>, usize)> = Vec::new();
    'outer: for row in rows {
        for k in &kept {
            if k.0.iter().zip(&row.0).all(|(a, b)| a <= b) {
                continue 'outer;
            }
        }
        kept.push(row);
    }
    kept
}

/// The correlation loss at a rate pair, with its optimal mixture witness as
/// `(configuration index, weight)` pairs in enumeration order.
///
/// The mixture is canonical: among minimizers of the residual information it
/// secondarily maximizes the sum-rate statistic, so the reported sum-rate
/// slack is the least one compatible with optimality.
pub fn delta_with_witness(
    stats: &[ConfigStats],
    r1: f64,
    r2: f64,
) -> Result<(f64, Vec<(usize, f64)>, f64)> {
    if r1 < 0.0 || r2 < 0.0 {
        return Err(Error::RateAssumption {
            detail: format!("rates must be nonnegative, got ({r1}, {r2})"),
        });
    }
    let pruned = prune_stats(stats);
    let rate_pts: Vec<Vec<f64>> = pruned.iter().map(|(v, _)| v[..3].to_vec()).collect();
    let resid: Vec<f64> = pruned.iter().map(|(v, _)| v[3]).collect();
    let caps = [r1, r2, r1 + r2];
    let Some((delta, _)) = simplex_min_with_weights(&rate_pts, &caps, &resid) else {
        return Err(Error::RateAssumption {
            detail: format!("no mesh configuration fits inside rates ({r1}, {r2})"),
        });
    };

    // Second stage: pin the residual at its optimum and push the mixture's
    // sum rate as high as the caps allow.
    let full_pts: Vec<Vec<f64>> = pruned.iter().map(|(v, _)| v.clone()).collect();
    let caps4 = [r1, r2, r1 + r2, delta + 1e-12];
    let neg_sum: Vec<f64> = pruned.iter().map(|(v, _)| -v[2]).collect();
    let (neg_used, weights) = simplex_min_with_weights(&full_pts, &caps4, &neg_sum)
        .expect("stage one solution stays feasible");
    let slack = (r1 + r2 + neg_used).max(0.0);
    let mut witness: Vec<(usize, f64)> =
        weights.into_iter().map(|(i, w)| (pruned[i].1, w)).collect();
    witness.sort_by_key(|&(i, _)| i);
    Ok((delta.max(0.0), witness, slack))
}

/// Convenience wrapper returning only the loss value.
pub fn delta(stats: &[ConfigStats], r1: f64, r2: f64) -> Result<f64> {
    Ok(delta_with_witness(stats, r1, r2)?.0)
}

/// Joint-watching and separate-watching doubling rates at one rate pair.
#[derive(Debug, Clone)]
pub struct DailyDouble {
    pub e_log_odds: f64,
    /// Optimal doubling rate when one observer sees both races.
    pub jw: f64,
    /// Optimal doubling rate when each race has its own observer.
    pub pw: f64,
    /// `jw - pw`.
    pub delta: f64,
    /// Optimal mixture as `(configuration index, weight)`.
    pub witness: Vec<(usize, f64)>,
    /// Unused sum rate of the canonical witness.
    pub sum_rate_slack: f64,
}

/// Evaluates both doubling rates by sweeping the mesh once.
pub fn daily_double(
    pair: &JointPmf,
    spec: &RaceSpec,
    r1: f64,
    r2: f64,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<DailyDouble> {
    let e_log_odds = spec.expected_log_odds(pair)?;
    let inst = CeoInstance::from_pair(pair)?;
    let stats = sweep_configs(&inst, grid, cache)?;
    let (delta, witness, sum_rate_slack) = delta_with_witness(&stats, r1, r2)?;
    let jw = e_log_odds - sw_minus_d_min_distortion(pair, r1, r2)?;
    Ok(DailyDouble { e_log_odds, jw, pw: jw - delta, delta, witness, sum_rate_slack })
}

/// Averaged divergence between the witness's joint bets and the product of
/// its marginal bets. For the optimal bets `b*(y1, y2 | u1, u2, q) =
/// p(y1, y2 | u1, u2, q)` this equals the correlation loss exactly.
pub fn witness_kl(
    pair: &JointPmf,
    configs: &[Vec<Channel>],
    witness: &[(usize, f64)],
) -> Result<f64> {
    let n2 = pair.axis_size("Y2")?;
    let mut total = 0.0;
    for &(idx, w) in witness {
        let cfg = configs.get(idx).ok_or(Error::ShapeMismatch {
            expected: configs.len(),
            got: idx,
        })?;
        let ext = extend_with_aux(pair, &AuxConfig::single(cfg.clone()), &["Y1", "Y2"])?;
        let mut per_cfg = 0.0;
        for (pz, joint_bet) in ext.posteriors(&["Y1", "Y2"], &["U1", "U2"])? {
            let n1 = joint_bet.len() / n2;
            let mut b1 = vec![0.0f64; n1];
            let mut b2 = vec![0.0f64; n2];
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    b1[y1] += joint_bet[y1 * n2 + y2];
                    b2[y2] += joint_bet[y1 * n2 + y2];
                }
            }
            let mut product = vec![0.0f64; n1 * n2];
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    product[y1 * n2 + y2] = b1[y1] * b2[y2];
                }
            }
            per_cfg += pz * kl_divergence(&joint_bet, &product)?;
        }
        total += w * per_cfg;
    }
    Ok(total)
}

/// Hirschfeld-Gebelein-Renyi maximal correlation of a pair source: the
/// second singular value of `p(y1,y2) / sqrt(p(y1) p(y2))`.
///
/// The top singular pair `(1, sqrt(p1), sqrt(p2))` is deflated analytically
/// and the next value found by power iteration from a fixed start, so the
/// result is deterministic.
pub fn maximal_correlation(pair: &JointPmf) -> Result<f64> {
    let n1 = pair.axis_size("Y1")?;
    let n2 = pair.axis_size("Y2")?;
    let p1 = pair.marginal(&["Y1"])?.probs().to_vec();
    let p2 = pair.marginal(&["Y2"])?.probs().to_vec();
    if n1 < 2 || n2 < 2 {
        return Ok(0.0);
    }
    // b[y1][y2] = p / sqrt(p1 p2) - sqrt(p1) sqrt(p2), zero-mass cells zero.
    let mut b = vec![0.0f64; n1 * n2];
    for y1 in 0..n1 {
        for y2 in 0..n2 {
            let denom = p1[y1] * p2[y2];
            if denom > 0.0 {
                b[y1 * n2 + y2] =
                    pair.probs()[y1 * n2 + y2] / denom.sqrt() - (p1[y1] * p2[y2]).sqrt();
            }
        }
    }
    // Power iteration on b^T b with a fixed, non-degenerate start.
    let mut v: Vec<f64> = (0..n2).map(|i| 1.0 + i as f64).collect();
    normalize(&mut v);
    let mut sigma2_prev = -1.0f64;
    for _ in 0..20_000 {
        let mut bv = vec![0.0f64; n1];
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                bv[y1] += b[y1 * n2 + y2] * v[y2];
            }
        }
        let mut btbv = vec![0.0f64; n2];
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                btbv[y2] += b[y1 * n2 + y2] * bv[y1];
            }
        }
        let sigma2: f64 = v.iter().zip(&btbv).map(|(a, c)| a * c).sum();
        let norm: f64 = btbv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            return Ok(0.0);
        }
        v = btbv;
        normalize(&mut v);
        if (sigma2 - sigma2_prev).abs() <= 1e-15 {
            break;
        }
        sigma2_prev = sigma2;
    }
    Ok(sigma2_prev.max(0.0).sqrt().min(1.0))
}

fn normalize(v: &mut [f64]) {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Amount by which a computed loss fails the correlation lower bound
/// `Delta >= I(Y1;Y2) - rho_m^2 (R1 + R2)`; zero when the bound holds.
pub fn rho_bound_violation(delta: f64, mi: f64, rho: f64, sum_rate: f64) -> f64 {
    (mi - rho * rho * sum_rate - delta).max(0.0)
}

/// Structural audit of the loss surface over a rate lattice: the loss must
/// be nonincreasing in each rate and midpoint-convex along lattice lines.
#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub max_monotonicity_violation: f64,
    pub max_midpoint_violation: f64,
}

pub fn monotone_convexity_audit(
    stats: &[ConfigStats],
    r_max: f64,
    step: f64,
) -> Result<ConvexityReport> {
    if !(step > 0.0 && r_max >= step) {
        return Err(Error::RateAssumption {
            detail: format!("invalid lattice: r_max {r_max}, step {step}"),
        });
    }
    let n = (r_max / step).round() as usize;
    let mut grid = vec![vec![0.0f64; n + 1]; n + 1];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = delta(stats, i as f64 * step, j as f64 * step)?;
        }
    }
    let mut mono: f64 = 0.0;
    let mut midpoint: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            if i + 1 <= n {
                mono = mono.max(grid[i + 1][j] - grid[i][j]);
            }
            if j + 1 <= n {
                mono = mono.max(grid[i][j + 1] - grid[i][j]);
            }
            if i + 2 <= n {
                midpoint = midpoint.max(grid[i + 1][j] - 0.5 * (grid[i][j] + grid[i + 2][j]));
            }
            if j + 2 <= n {
                midpoint = midpoint.max(grid[i][j + 1] - 0.5 * (grid[i][j] + grid[i][j + 2]));
            }
            if i + 2 <= n && j + 2 <= n {
                midpoint = midpoint
                    .max(grid[i + 1][j + 1] - 0.5 * (grid[i][j] + grid[i + 2][j + 2]));
            }
        }
    }
    Ok(ConvexityReport { max_monotonicity_violation: mono, max_midpoint_violation: midpoint })
}
