//! Bridging logarithmic loss to arbitrary finite distortion measures.
//!
//! Every reproduction letter of a distortion matrix lifts to a soft
//! reproduction `q(y) = 2^{-d(y, col)} / Z` whose log loss satisfies the
//! exact identity `log_loss = d + beta` with `beta = log2 Z`. Lifting a code
//! shifts its distortion by at most `beta_max`, so the log-loss region
//! brackets the region of any other measure.
//!
//! For binary sources under Hamming distortion the bracket is tight up to a
//! universal constant: pointwise in the posterior probability `a`,
//!
//! ```text
//! 2 min(a, 1-a) <= h2(a) <= 2 min(a, 1-a) + log2(5/4)
//! ```
//!
//! (the right gap peaks at `a = 1/5`). The worst-case spread between the two
//! entropy-mediated Hamming bounds, optimized over the lifting scale, is
//! attained at scale two with value `log2(5/4) / 2`.

use crate::ceo::CeoInstance;
use crate::info::{binary_entropy, entropy, extend_with_aux, AuxConfig, SoftReproduction};
use crate::{Error, Result};

/// A distortion measure `d(y, col)` over a source alphabet (rows) and a
/// reproduction alphabet (columns). Entries are nonnegative, `+inf` allowed;
/// every column must offer at least one finite entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    rows: Vec<Vec<f64>>,
}

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::ShapeMismatch { expected: 1, got: 0 });
        }
        let width = rows[0].len();
        for row in &rows {
            if row.len() != width {
                return Err(Error::ShapeMismatch { expected: width, got: row.len() });
            }
            for &v in row {
                if v.is_nan() || v < 0.0 {
                    return Err(Error::NegativeDistortion { value: v });
                }
            }
        }
        for col in 0..width {
            if rows.iter().all(|r| r[col].is_infinite()) {
                return Err(Error::NoFiniteEntry { column: col });
            }
        }
        Ok(DistortionMatrix { rows })
    }

    /// Scaled Hamming distortion: zero on the diagonal, `alpha` off it.
    pub fn hamming(n: usize, alpha: f64) -> Result<Self> {
        if alpha < 0.0 || alpha.is_nan() {
            return Err(Error::NegativeDistortion { value: alpha });
        }
        DistortionMatrix::new(
            (0..n)
                .map(|y| (0..n).map(|c| if y == c { 0.0 } else { alpha }).collect())
                .collect(),
        )
    }

    /// Erasure distortion: exact reproduction is free, a mismatch is
    /// forbidden, and the extra erasure letter costs `cost` everywhere.
    pub fn erasure(n: usize, cost: f64) -> Result<Self> {
        if cost < 0.0 || cost.is_nan() {
            return Err(Error::NegativeDistortion { value: cost });
        }
        DistortionMatrix::new(
            (0..n)
                .map(|y| {
                    let mut row: Vec<f64> =
                        (0..n).map(|c| if y == c { 0.0 } else { f64::INFINITY }).collect();
                    row.push(cost);
                    row
                })
                .collect(),
        )
    }

    pub fn source_size(&self) -> usize {
        self.rows.len()
    }

    pub fn repro_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, y: usize, col: usize) -> f64 {
        self.rows[y][col]
    }

    /// `beta(col) = log2 sum_y 2^{-d(y, col)}`.
    pub fn beta(&self, col: usize) -> f64 {
        let z: f64 = self.rows.iter().map(|r| exp2_neg(r[col])).sum();
        z.log2()
    }

    /// Largest column shift; the uniform distortion penalty of lifting.
    pub fn beta_max(&self) -> f64 {
        (0..self.repro_size())
            .map(|c| self.beta(c))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The soft reproduction induced by a column.
    pub fn lift(&self, col: usize) -> Result<SoftReproduction> {
        let z: f64 = self.rows.iter().map(|r| exp2_neg(r[col])).sum();
        SoftReproduction::new(self.rows.iter().map(|r| exp2_neg(r[col]) / z).collect())
    }

    /// Log loss of the lifted column in closed form: `d(y, col) + beta(col)`.
    /// Infinite distortion stays infinite.
    pub fn lifted_log_loss(&self, y: usize, col: usize) -> f64 {
        let d = self.rows[y][col];
        if d.is_infinite() {
            f64::INFINITY
        } else {
            d + self.beta(col)
        }
    }
}

fn exp2_neg(d: f64) -> f64 {
    if d.is_infinite() {
        0.0
    } else {
        (-d).exp2()
    }
}

/// Best single reproduction letter against a posterior: the column with the
/// least expected distortion, ties resolved to the lower index. Zero
/// posterior mass suppresses infinite entries.
pub fn map_reproduction(dmat: &DistortionMatrix, posterior: &[f64]) -> Result<(usize, f64)> {
    if posterior.len() != dmat.source_size() {
        return Err(Error::ShapeMismatch { expected: dmat.source_size(), got: posterior.len() });
    }
    let mut best = (0usize, f64::INFINITY);
    for col in 0..dmat.repro_size() {
        let mut e = 0.0;
        for (y, &p) in posterior.iter().enumerate() {
            if p > 0.0 {
                e += p * dmat.get(y, col);
            }
        }
        if e < best.1 {
            best = (col, e);
        }
    }
    Ok(best)
}

/// One configuration's Hamming audit: expected unit-Hamming distortion of
/// the MAP reproduction, the entropy-mediated lower bound with the optimal
/// scale-two shift, and their gap.
#[derive(Debug, Clone)]
pub struct HammingGapSample {
    pub map_distortion: f64,
    pub entropy_bound: f64,
    pub gap: f64,
}

/// Ceiling of the Hamming audit gap, `log2(5/4) / 2`.
pub fn gap_ceiling() -> f64 {
    0.5 * 1.25f64.log2()
}

/// Audits one auxiliary configuration of a binary-source instance. The gap
/// lies in `[0, log2(5/4)/2]` and vanishes when every posterior on the
/// source is deterministic.
pub fn hamming_gap(inst: &CeoInstance, cfg: &AuxConfig) -> Result<HammingGapSample> {
    let x_size = inst.joint().axis_size("X")?;
    if x_size != 2 {
        return Err(Error::ShapeMismatch { expected: 2, got: x_size });
    }
    let obs_names = inst.obs_names();
    let obs: Vec<&str> = obs_names.iter().map(String::as_str).collect();
    let ext = extend_with_aux(inst.joint(), cfg, &obs)?;
    let u_names: Vec<String> = (1..=inst.encoders()).map(|i| format!("U{i}")).collect();
    let mut given: Vec<&str> = vec!["Q"];
    given.extend(u_names.iter().map(String::as_str));

    let mut map_distortion = 0.0;
    let mut h_cond = 0.0;
    for (pz, row) in ext.posteriors(&["X"], &given)? {
        map_distortion += pz * row.iter().cloned().fold(f64::INFINITY, f64::min);
        h_cond += pz * entropy(&row);
    }
    let entropy_bound = ((h_cond - 2.0 * gap_ceiling()) / 2.0).max(0.0);
    Ok(HammingGapSample { map_distortion, entropy_bound, gap: map_distortion - entropy_bound })
}

/// Worst-case spread between the two entropy-mediated Hamming bounds at
/// lifting scale `alpha`: the larger of the kink value `beta(alpha) / 2`
/// and the full-entropy value `1/2 - (1 - beta(alpha)) / alpha`, where
/// `beta(alpha) = log2(1 + 2^{-alpha})` is the binary Hamming shift.
pub fn hamming_scale_spread(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NegativeDistortion { value: alpha });
    }
    let beta = (1.0 + (-alpha).exp2()).log2();
    let at_kink = beta / 2.0;
    let at_full = 0.5 - (1.0 - beta) / alpha;
    Ok(at_kink.max(at_full))
}

/// Location and value of a one-dimensional minimum.
#[derive(Debug, Clone, Copy)]
pub struct SaddlePoint {
    pub alpha: f64,
    pub value: f64,
}

/// Minimizes the scale spread by golden-section search on `[lo, hi]`. The
/// spread is the maximum of a decreasing and an increasing branch, hence
/// strictly quasiconvex; the branches cross at scale two, where the minimum
/// value is `log2(5/4) / 2`.
pub fn saddle_evaluation(lo: f64, hi: f64) -> Result<SaddlePoint> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::RateAssumption {
            detail: format!("invalid bracket [{lo}, {hi}] for the scale search"),
        });
    }
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = hamming_scale_spread(c)?;
    let mut fd = hamming_scale_spread(d)?;
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = hamming_scale_spread(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = hamming_scale_spread(d)?;
        }
    }
    let alpha = 0.5 * (a + b);
    Ok(SaddlePoint { alpha, value: hamming_scale_spread(alpha)? })
}

/// Pointwise bracket between unit-Hamming MAP distortion and half the
/// posterior entropy, for a binary posterior `(a, 1-a)`.
pub fn binary_bracket(a: f64) -> (f64, f64) {
    let lo = a.min(1.0 - a);
    (lo, binary_entropy(a) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{log_loss, Channel};
    use crate::sources;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hamming_shift_matches_frozen_values() {
        let d1 = DistortionMatrix::hamming(2, 1.0).unwrap();
        assert!((d1.beta(0) - 1.5f64.log2()).abs() <= 1e-15);
        assert!((d1.beta_max() - 0.5849625007211562).abs() <= 1e-15);
        let d2 = DistortionMatrix::hamming(2, 2.0).unwrap();
        assert!((d2.beta_max() - 0.32192809488736235).abs() <= 1e-15);
    }

    #[test]
    fn binary_erasure_with_unit_cost_has_zero_shift() {
        let e = DistortionMatrix::erasure(2, 1.0).unwrap();
        assert_eq!(e.repro_size(), 3);
        assert_eq!(e.beta(0), 0.0);
        assert_eq!(e.beta(1), 0.0);
        assert!((e.beta(2) - 0.0).abs() <= 1e-15, "log2(2) - 1 vanishes");
        assert!(e.beta_max().abs() <= 1e-15);
    }

    #[test]
    fn all_infinite_column_is_rejected() {
        let bad = DistortionMatrix::new(vec![
            vec![0.0, f64::INFINITY],
            vec![1.0, f64::INFINITY],
        ]);
        assert!(matches!(bad, Err(Error::NoFiniteEntry { column: 1 })));
        assert!(DistortionMatrix::new(vec![vec![-0.1]]).is_err());
    }

    #[test]
    fn lift_identity_holds_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| {
                    (0..4)
                        .map(|_| {
                            if rng.gen::<f64>() < 0.2 {
                                f64::INFINITY
                            } else {
                                3.0 * rng.gen::<f64>()
                            }
                        })
                        .collect()
                })
                .collect();
            let Ok(dmat) = DistortionMatrix::new(rows) else { continue };
            for col in 0..dmat.repro_size() {
                let lifted = dmat.lift(col).unwrap();
                for y in 0..dmat.source_size() {
                    let direct = log_loss(&lifted, y);
                    let closed = dmat.lifted_log_loss(y, col);
                    if closed.is_infinite() {
                        assert!(direct.is_infinite());
                    } else {
                        assert!((direct - closed).abs() <= 1e-12, "{direct} vs {closed}");
                    }
                }
            }
        }
    }

    #[test]
    fn map_ties_break_to_the_lower_index() {
        let dmat =
            DistortionMatrix::new(vec![vec![0.5, 0.5, 1.0], vec![0.5, 0.5, 0.0]]).unwrap();
        let (col, val) = map_reproduction(&dmat, &[0.9, 0.1]).unwrap();
        assert_eq!(col, 0, "columns 0 and 1 tie");
        assert!((val - 0.5).abs() <= 1e-15);
        let (col2, _) = map_reproduction(&dmat, &[0.0, 1.0]).unwrap();
        assert_eq!(col2, 2);
    }

    #[test]
    fn entropy_brackets_hold_on_the_grid() {
        let c = 2.0 * gap_ceiling();
        for i in 0..=1000 {
            let a = i as f64 / 1000.0;
            let (lo, hi) = binary_bracket(a);
            assert!(2.0 * lo <= binary_entropy(a) + 1e-12);
            assert!(binary_entropy(a) <= 2.0 * lo + c + 1e-12);
            assert!(lo <= hi + 1e-12);
        }
        // The right-hand slack peaks where the posterior is one fifth.
        let peak = binary_entropy(0.2) - 0.4;
        assert!((peak - 2.0 * gap_ceiling()).abs() <= 1e-12);
    }

    #[test]
    fn gap_audit_stays_inside_the_universal_band() {
        let inst = sources::bsc_ceo(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let cfg = AuxConfig::single(vec![
                random_channel(&mut rng),
                random_channel(&mut rng),
            ]);
            let s = hamming_gap(&inst, &cfg).unwrap();
            assert!(s.gap >= -1e-12, "gap {}", s.gap);
            assert!(s.gap <= gap_ceiling() + 1e-12, "gap {}", s.gap);
            assert!(s.map_distortion >= s.entropy_bound - 1e-12);
        }
    }

    fn random_channel<R: Rng>(rng: &mut R) -> Channel {
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let a = rng.gen::<f64>();
                vec![a, 1.0 - a]
            })
            .collect();
        Channel::new(rows).unwrap()
    }

    #[test]
    fn deterministic_posteriors_have_zero_gap() {
        let inst = sources::bsc_ceo(0.0).unwrap();
        let cfg = AuxConfig::single(vec![Channel::identity(2), Channel::identity(2)]);
        let s = hamming_gap(&inst, &cfg).unwrap();
        assert_eq!(s.map_distortion, 0.0);
        assert_eq!(s.gap, 0.0);
    }

    #[test]
    fn scale_spread_is_minimized_at_two() {
        let at_two = hamming_scale_spread(2.0).unwrap();
        assert!((at_two - gap_ceiling()).abs() <= 1e-15);
        assert!(hamming_scale_spread(1.5).unwrap() > at_two);
        assert!(hamming_scale_spread(3.0).unwrap() > at_two);
        let saddle = saddle_evaluation(0.5, 8.0).unwrap();
        assert!((saddle.alpha - 2.0).abs() <= 1e-9, "alpha {}", saddle.alpha);
        assert!((saddle.value - gap_ceiling()).abs() <= 1e-12, "value {}", saddle.value);
    }

    #[test]
    fn saddle_rejects_bad_brackets() {
        assert!(saddle_evaluation(0.0, 4.0).is_err());
        assert!(saddle_evaluation(3.0, 2.0).is_err());
        assert!(hamming_scale_spread(0.0).is_err());
    }
}
