//! The CEO problem under logarithmic loss: sweeps, curves, and the
//! closed-form region for the complete-observation case.
//!
//! A CEO instance is a joint pmf over `X, Y1, .., Ym` whose observations are
//! conditionally independent given the source. Quantization is searched over
//! a channel mesh; each configuration contributes one statistics vector, and
//! convex operators (envelopes, hulls) supply timesharing exactly.
//!
//! Distortion is anchored as `H(X) - I(X; U_1..U_m)` with the information
//! term snapped to zero below `1e-12`. Zero-rate configurations therefore
//! report exactly `H(X)` and lossless ones exactly zero, which keeps curve
//! endpoints bit-stable across sweep sizes and thread counts.

use crate::info::{entropy, extend_with_aux, AuxConfig, Channel, JointPmf};
use crate::search::{lower_convex_envelope, pmf_fingerprint, SearchGrid, SweepCache};
use crate::{Error, Result, INFO_TOL};
use rayon::prelude::*;

/// Snaps numerical dust to exact zero.
fn snap(v: f64) -> f64 {
    if v.abs() < INFO_TOL {
        0.0
    } else {
        v
    }
}

/// A validated CEO instance: axes `X, Y1, .., Ym` with the observations
/// conditionally independent given `X`.
#[derive(Debug, Clone)]
pub struct CeoInstance {
    joint: JointPmf,
    m: usize,
}

impl CeoInstance {
    pub fn new(joint: JointPmf) -> Result<Self> {
        let m = joint.axes().len().saturating_sub(1);
        if m == 0 {
            return Err(Error::ShapeMismatch { expected: 2, got: joint.axes().len() });
        }
        joint.axis_index("X")?;
        let mut names = Vec::with_capacity(m);
        for i in 0..m {
            let name = format!("Y{}", i + 1);
            joint.axis_index(&name)?;
            names.push(name);
        }
        // Mutual conditional independence given X is equivalent to the
        // per-observation conditional entropies summing to the joint one.
        let all: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut gap = -joint.conditional_entropy(&all, &["X"])?;
        for n in &all {
            gap += joint.conditional_entropy(&[n], &["X"])?;
        }
        if gap > 1e-9 {
            return Err(Error::NotConditionallyIndependent { mi: gap });
        }
        Ok(CeoInstance { joint, m })
    }

    /// Treats a two-axis pair source as a CEO instance whose hidden source
    /// is the pair itself: `X = (Y1, Y2)` with `X` listed first. Remote
    /// distortion then coincides with `H(Y1, Y2 | U_1, U_2)`.
    pub fn from_pair(pair: &JointPmf) -> Result<Self> {
        let i1 = pair.axis_index("Y1")?;
        let i2 = pair.axis_index("Y2")?;
        if pair.axes().len() != 2 || i1 != 0 || i2 != 1 {
            return Err(Error::ShapeMismatch { expected: 2, got: pair.axes().len() });
        }
        let n1 = pair.axes()[0].size;
        let n2 = pair.axes()[1].size;
        let nx = n1 * n2;
        let mut probs = vec![0.0f64; nx * n1 * n2];
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                let x = y1 * n2 + y2;
                probs[(x * n1 + y1) * n2 + y2] = pair.probs()[y1 * n2 + y2];
            }
        }
        let joint = JointPmf::new(
            vec![
                crate::info::Alphabet::new("X", nx),
                crate::info::Alphabet::new("Y1", n1),
                crate::info::Alphabet::new("Y2", n2),
            ],
            probs,
        )?;
        CeoInstance::new(joint)
    }

    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    pub fn encoders(&self) -> usize {
        self.m
    }

    pub fn obs_names(&self) -> Vec<String> {
        (1..=self.m).map(|i| format!("Y{i}")).collect()
    }

    pub fn obs_sizes(&self) -> Vec<usize> {
        (0..self.m)
            .map(|i| self.joint.axis_size(&format!("Y{}", i + 1)).expect("validated"))
            .collect()
    }

    pub fn source_entropy(&self) -> f64 {
        self.joint
            .marginal_entropy(&["X"])
            .expect("X axis validated at construction")
    }

    /// `H(X | Y_1..Y_m)`: the distortion of the omniscient posterior, which
    /// no rate budget can beat.
    pub fn irreducible_distortion(&self) -> f64 {
        let names = self.obs_names();
        let given: Vec<&str> = names.iter().map(String::as_str).collect();
        snap(self.joint.conditional_entropy(&["X"], &given).expect("axes validated"))
    }
}

/// Per-configuration statistics from a two-encoder sweep, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigStats {
    /// `I(Y1; U1 | U2)`.
    pub r1_cond: f64,
    /// `I(Y2; U2 | U1)`.
    pub r2_cond: f64,
    /// `I(Y1; U1)`.
    pub r1_alone: f64,
    /// `I(Y2; U2)`.
    pub r2_alone: f64,
    /// `I(Y1, Y2; U1, U2)`.
    pub sum_rate: f64,
    /// `H(X | U1, U2)`, anchored as `H(X)` minus snapped information.
    pub distortion: f64,
    /// `H(Y1 | U1, U2)`.
    pub d1: f64,
    /// `H(Y2 | U1, U2)`.
    pub d2: f64,
    /// `I(Y1; Y2 | U1, U2)`.
    pub residual_mi: f64,
}

impl ConfigStats {
    const CSV_HEADER: [&'static str; 9] = [
        "r1_cond_bits",
        "r2_cond_bits",
        "r1_bits",
        "r2_bits",
        "sum_rate_bits",
        "distortion_bits",
        "d1_bits",
        "d2_bits",
        "residual_mi_bits",
    ];

    fn to_row(&self) -> Vec<f64> {
        vec![
            self.r1_cond,
            self.r2_cond,
            self.r1_alone,
            self.r2_alone,
            self.sum_rate,
            self.distortion,
            self.d1,
            self.d2,
            self.residual_mi,
        ]
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() != Self::CSV_HEADER.len() {
            return Err(Error::CacheFormat(format!(
                "expected {} stat columns, found {}",
                Self::CSV_HEADER.len(),
                row.len()
            )));
        }
        Ok(ConfigStats {
            r1_cond: row[0],
            r2_cond: row[1],
            r1_alone: row[2],
            r2_alone: row[3],
            sum_rate: row[4],
            distortion: row[5],
            d1: row[6],
            d2: row[7],
            residual_mi: row[8],
        })
    }
}

/// Precomputed marginals shared by every configuration of a sweep.
struct SweepContext {
    n1: usize,
    n2: usize,
    nx: usize,
    /// `p(y1, y2)`, y2 fastest.
    p_pair: Vec<f64>,
    p_x: Vec<f64>,
    p_y1: Vec<f64>,
    p_y2: Vec<f64>,
    /// `p(y1 | x)` rows, then `p(y2 | x)` rows.
    y1_given_x: Vec<Vec<f64>>,
    y2_given_x: Vec<Vec<f64>>,
    h_pair: f64,
    h_x: f64,
}

impl SweepContext {
    fn new(inst: &CeoInstance) -> Result<Self> {
        let j = inst.joint();
        let pair = j.marginal(&["Y1", "Y2"])?;
        let n1 = pair.axes()[0].size;
        let n2 = pair.axes()[1].size;
        let px = j.marginal(&["X"])?;
        let nx = px.axes()[0].size;
        let mut y1_given_x = vec![vec![0.0; n1]; nx];
        let mut y2_given_x = vec![vec![0.0; n2]; nx];
        let xy1 = j.marginal(&["X", "Y1"])?;
        let xy2 = j.marginal(&["X", "Y2"])?;
        for x in 0..nx {
            let mass = px.probs()[x];
            if mass == 0.0 {
                // A zero-mass source letter contributes nothing; leave the
                // uniform placeholder row.
                y1_given_x[x] = vec![1.0 / n1 as f64; n1];
                y2_given_x[x] = vec![1.0 / n2 as f64; n2];
                continue;
            }
            for y1 in 0..n1 {
                y1_given_x[x][y1] = xy1.probs()[x * n1 + y1] / mass;
            }
            for y2 in 0..n2 {
                y2_given_x[x][y2] = xy2.probs()[x * n2 + y2] / mass;
            }
        }
        Ok(SweepContext {
            n1,
            n2,
            nx,
            p_pair: pair.probs().to_vec(),
            p_x: px.probs().to_vec(),
            p_y1: pair
                .marginal(&["Y1"])?
                .probs()
                .to_vec(),
            p_y2: pair
                .marginal(&["Y2"])?
                .probs()
                .to_vec(),
            y1_given_x,
            y2_given_x,
            h_pair: pair.entropy(),
            h_x: entropy(px.probs()),
        })
    }

    /// Single-configuration statistics, all in closed form from small
    /// intermediate tables. See the module notes for the anchoring rule.
    fn stats(&self, w1: &Channel, w2: &Channel) -> ConfigStats {
        let (n1, n2) = (self.n1, self.n2);
        let (nu1, nu2) = (w1.output_size(), w2.output_size());
        let h_rows1: Vec<f64> = w1.rows().iter().map(|r| entropy(r)).collect();
        let h_rows2: Vec<f64> = w2.rows().iter().map(|r| entropy(r)).collect();
        let h_u1_given_y1: f64 = self.p_y1.iter().zip(&h_rows1).map(|(p, h)| p * h).sum();
        let h_u2_given_y2: f64 = self.p_y2.iter().zip(&h_rows2).map(|(p, h)| p * h).sum();

        // g2[y1][u2] = sum_y2 p(y1,y2) w2(u2|y2); g1[y2][u1] symmetric.
        let mut g2 = vec![0.0f64; n1 * nu2];
        let mut g1 = vec![0.0f64; n2 * nu1];
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                let p = self.p_pair[y1 * n2 + y2];
                if p == 0.0 {
                    continue;
                }
                for u2 in 0..nu2 {
                    g2[y1 * nu2 + u2] += p * w2.rows()[y2][u2];
                }
                for u1 in 0..nu1 {
                    g1[y2 * nu1 + u1] += p * w1.rows()[y1][u1];
                }
            }
        }

        // t[u1][u2] joint of the auxiliaries.
        let mut t = vec![0.0f64; nu1 * nu2];
        for y1 in 0..n1 {
            for u1 in 0..nu1 {
                let w = w1.rows()[y1][u1];
                if w == 0.0 {
                    continue;
                }
                for u2 in 0..nu2 {
                    t[u1 * nu2 + u2] += w * g2[y1 * nu2 + u2];
                }
            }
        }
        let h_t = entropy(&t);
        let mut t1 = vec![0.0f64; nu1];
        let mut t2 = vec![0.0f64; nu2];
        for u1 in 0..nu1 {
            for u2 in 0..nu2 {
                t1[u1] += t[u1 * nu2 + u2];
                t2[u2] += t[u1 * nu2 + u2];
            }
        }

        let r1_alone = snap(entropy(&t1) - h_u1_given_y1).max(0.0);
        let r2_alone = snap(entropy(&t2) - h_u2_given_y2).max(0.0);
        let r1_cond = snap(h_t - entropy(&t2) - h_u1_given_y1).max(0.0);
        let r2_cond = snap(h_t - entropy(&t1) - h_u2_given_y2).max(0.0);
        let sum_rate = snap(h_t - h_u1_given_y1 - h_u2_given_y2).max(0.0);

        // I(X; U1, U2) via the per-source product rows.
        let mut h_u_given_x = 0.0;
        let mut row1 = vec![0.0f64; nu1];
        let mut row2 = vec![0.0f64; nu2];
        for x in 0..self.nx {
            let p = self.p_x[x];
            if p == 0.0 {
                continue;
            }
            row1.iter_mut().for_each(|v| *v = 0.0);
            row2.iter_mut().for_each(|v| *v = 0.0);
            for y1 in 0..n1 {
                let q = self.y1_given_x[x][y1];
                if q == 0.0 {
                    continue;
                }
                for u1 in 0..nu1 {
                    row1[u1] += q * w1.rows()[y1][u1];
                }
            }
            for y2 in 0..n2 {
                let q = self.y2_given_x[x][y2];
                if q == 0.0 {
                    continue;
                }
                for u2 in 0..nu2 {
                    row2[u2] += q * w2.rows()[y2][u2];
                }
            }
            h_u_given_x += p * (entropy(&row1) + entropy(&row2));
        }
        let info_x = snap(h_t - h_u_given_x).max(0.0);
        let distortion = snap(self.h_x - info_x).max(0.0);

        // I(Y1; Y2 | U1, U2) from the two lifted tables.
        let mut h_a = 0.0;
        for y1 in 0..n1 {
            for u1 in 0..nu1 {
                let w = w1.rows()[y1][u1];
                if w == 0.0 {
                    continue;
                }
                for u2 in 0..nu2 {
                    let v = w * g2[y1 * nu2 + u2];
                    if v > 0.0 {
                        h_a -= v * v.log2();
                    }
                }
            }
        }
        let mut h_b = 0.0;
        for y2 in 0..n2 {
            for u2 in 0..nu2 {
                let w = w2.rows()[y2][u2];
                if w == 0.0 {
                    continue;
                }
                for u1 in 0..nu1 {
                    let v = w * g1[y2 * nu1 + u1];
                    if v > 0.0 {
                        h_b -= v * v.log2();
                    }
                }
            }
        }
        let residual_mi =
            snap(h_a + h_b - h_t - self.h_pair - h_u1_given_y1 - h_u2_given_y2).max(0.0);
        let d1 = snap(h_a - h_t).max(0.0);
        let d2 = snap(h_b - h_t).max(0.0);

        ConfigStats { r1_cond, r2_cond, r1_alone, r2_alone, sum_rate, distortion, d1, d2, residual_mi }
    }
}

/// Sweeps every mesh configuration of a two-encoder instance, in enumeration
/// order. Results are pure per-configuration functions evaluated through an
/// ordered parallel map, so the output is identical for any thread count.
/// When a cache is supplied, a hit bypasses the sweep and reloads bitwise
/// identical statistics.
pub fn sweep_configs(
    inst: &CeoInstance,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<Vec<ConfigStats>> {
    if inst.encoders() != 2 {
        return Err(Error::TooManyEncoders { m: inst.encoders(), max: 2 });
    }
    let key = SweepCache::key(&[
        &pmf_fingerprint(inst.joint()),
        &format!("k={}", grid.k),
        "ceo-sweep-v2",
    ]);
    if let Some(rows) = cache.load(&key, &ConfigStats::CSV_HEADER)? {
        return rows.iter().map(|r| ConfigStats::from_row(r)).collect();
    }
    let configs = grid.enumerate_configs(&inst.obs_sizes())?;
    let ctx = SweepContext::new(inst)?;
    let stats: Vec<ConfigStats> =
        configs.par_iter().map(|cfg| ctx.stats(&cfg[0], &cfg[1])).collect();
    let rows: Vec<Vec<f64>> = stats.iter().map(|s| s.to_row()).collect();
    cache.store(&key, &ConfigStats::CSV_HEADER, &rows)?;
    Ok(stats)
}

/// Distortion against sum rate: the lower convex envelope of per-config
/// `(R, H(X | U1,U2))` points, where `R` is the least per-encoder rate at
/// which the symmetric pair `(R, R)` meets the configuration's corner
/// constraints: `R = max(I(Y1;U1|U2), I(Y2;U2|U1), I(Y1,Y2;U1,U2) / 2)`.
///
/// The maximum is convex, so a mixture of configurations is feasible at the
/// mixture of their scalar rates and every envelope vertex is achievable.
pub fn ceo_curve(
    inst: &CeoInstance,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<Vec<(f64, f64)>> {
    let stats = sweep_configs(inst, grid, cache)?;
    let pts: Vec<(f64, f64)> = stats
        .iter()
        .map(|s| (s.r1_cond.max(s.r2_cond).max(0.5 * s.sum_rate), s.distortion))
        .collect();
    Ok(lower_convex_envelope(&pts))
}

/// Least excess distortion over the omniscient posterior at a rate pair:
/// the swept corners are mixed under caps `(r1, r2)` and the floor
/// `H(X | Y1, Y2)` is subtracted. Both corner constraints suffice because
/// `I(Y1;U1|U2) + I(Y2;U2|U1) <= I(Y1,Y2;U1,U2)` puts every corner on the
/// dominant face of its rate polytope.
pub fn min_kl(
    inst: &CeoInstance,
    r1: f64,
    r2: f64,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<f64> {
    if r1 < 0.0 || r2 < 0.0 {
        return Err(Error::RateAssumption {
            detail: format!("rates must be nonnegative, got ({r1}, {r2})"),
        });
    }
    let stats = sweep_configs(inst, grid, cache)?;
    let mut pts = Vec::with_capacity(stats.len() * 2);
    let mut obj = Vec::with_capacity(stats.len() * 2);
    for s in &stats {
        pts.push(vec![s.r1_cond, s.r2_alone]);
        pts.push(vec![s.r1_alone, s.r2_cond]);
        obj.push(s.distortion);
        obj.push(s.distortion);
    }
    let d = crate::hull::simplex_min(&pts, &[r1, r2], &obj)
        .expect("the all-constant configuration fits any nonnegative rates");
    let eps = (d - inst.irreducible_distortion()).max(0.0);
    Ok(if eps <= 1e-12 { 0.0 } else { eps })
}

/// Excess distortion over the omniscient posterior at sum rate `r`.
pub fn epsilon_star(envelope: &[(f64, f64)], irreducible: f64, r: f64) -> f64 {
    (crate::search::envelope_value(envelope, r) - irreducible).max(0.0)
}

/// Upper bound `n * eps / zeta` on the expected count of `zeta`-significant
/// events in a length-`n` block whose per-symbol excess distortion is `eps`.
pub fn markov_peak_bound(eps: f64, n: u64, zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::RateAssumption { detail: format!("zeta must be positive, got {zeta}") });
    }
    Ok(n as f64 * eps / zeta)
}

/// Full generic evaluation of one auxiliary configuration, including
/// timesharing. The fast sweep kernel is cross-checked against this path.
#[derive(Debug, Clone)]
pub struct CeoPoint {
    /// `I(Y_i; U_i | U_{others}, Q)` per encoder.
    pub rates_cond: Vec<f64>,
    /// `I(Y_1..Y_m; U_1..U_m | Q)`.
    pub sum_rate: f64,
    /// `H(X | U_1..U_m, Q)`.
    pub distortion: f64,
    /// `I(Y1; Y2 | U1, U2, Q)`, two-encoder instances only.
    pub residual_mi: Option<f64>,
}

pub fn evaluate_ceo_point(inst: &CeoInstance, cfg: &AuxConfig) -> Result<CeoPoint> {
    let m = inst.encoders();
    if cfg.encoders() != m {
        return Err(Error::ShapeMismatch { expected: m, got: cfg.encoders() });
    }
    let obs_names = inst.obs_names();
    let obs: Vec<&str> = obs_names.iter().map(String::as_str).collect();
    let ext = extend_with_aux(inst.joint(), cfg, &obs)?;
    let u_names: Vec<String> = (1..=m).map(|i| format!("U{i}")).collect();
    let mut rates_cond = Vec::with_capacity(m);
    for i in 0..m {
        let mut given: Vec<&str> = vec!["Q"];
        for (j, u) in u_names.iter().enumerate() {
            if j != i {
                given.push(u);
            }
        }
        rates_cond.push(
            ext.mutual_information(&[u_names[i].as_str()], &[obs[i]], &given)?.max(0.0),
        );
    }
    let all_u: Vec<&str> = u_names.iter().map(String::as_str).collect();
    let sum_rate = ext.mutual_information(&all_u, &obs, &["Q"])?.max(0.0);
    let mut given_u: Vec<&str> = vec!["Q"];
    given_u.extend(all_u.iter());
    let distortion = ext.conditional_entropy(&["X"], &given_u)?.max(0.0);
    let residual_mi = if m == 2 {
        Some(ext.mutual_information(&["Y1"], &["Y2"], &["U1", "U2", "Q"])?.max(0.0))
    } else {
        None
    };
    Ok(CeoPoint { rates_cond, sum_rate, distortion, residual_mi })
}

/// Minimum distortion of the complete-observation region at a rate pair:
/// the largest of the three entropy shortfalls, floored at zero.
pub fn sw_minus_d_min_distortion(pair: &JointPmf, r1: f64, r2: f64) -> Result<f64> {
    let h1 = pair.conditional_entropy(&["Y1"], &["Y2"])?;
    let h2 = pair.conditional_entropy(&["Y2"], &["Y1"])?;
    let h12 = pair.marginal_entropy(&["Y1", "Y2"])?;
    Ok((h1 - r1).max(h2 - r2).max(h12 - r1 - r2).max(0.0))
}

/// Membership in the complete-observation region, with slack `tol` on the
/// distortion coordinate.
pub fn sw_minus_d_membership(pair: &JointPmf, r1: f64, r2: f64, d: f64, tol: f64) -> Result<bool> {
    if r1 < 0.0 || r2 < 0.0 || d < 0.0 {
        return Ok(false);
    }
    Ok(d + tol >= sw_minus_d_min_distortion(pair, r1, r2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources;
    use crate::search::envelope_value;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn from_pair_is_a_valid_instance_with_zero_floor() {
        let pair = sources::dsbs(0.1).unwrap();
        let inst = CeoInstance::from_pair(&pair).unwrap();
        assert_eq!(inst.encoders(), 2);
        assert_eq!(inst.irreducible_distortion(), 0.0);
        assert!((inst.source_entropy() - pair.entropy()).abs() <= 1e-12);
    }

    #[test]
    fn dependent_observations_are_rejected() {
        let pair = sources::dsbs(0.1).unwrap();
        let mut probs = vec![0.0; 4];
        probs.copy_from_slice(pair.probs());
        let joint = JointPmf::new(
            vec![
                crate::info::Alphabet::new("X", 1),
                crate::info::Alphabet::new("Y1", 2),
                crate::info::Alphabet::new("Y2", 2),
            ],
            probs,
        )
        .unwrap();
        match CeoInstance::new(joint) {
            Err(Error::NotConditionallyIndependent { mi }) => {
                assert!((mi - 0.531004).abs() <= 1e-6, "leak {mi}");
            }
            other => panic!("expected dependence rejection, got {other:?}"),
        }
    }

    #[test]
    fn anchored_endpoints_are_exact() {
        let inst = CeoInstance::from_pair(&sources::dsbs(0.25).unwrap()).unwrap();
        let ctx = SweepContext::new(&inst).unwrap();
        let off = Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let idle = ctx.stats(&off, &off);
        assert_eq!(idle.sum_rate, 0.0);
        assert_eq!(idle.distortion, inst.source_entropy(), "bitwise zero-rate anchor");
        let id = Channel::identity(2);
        let lossless = ctx.stats(&id, &id);
        assert_eq!(lossless.distortion, 0.0, "bitwise lossless anchor");
        assert!((lossless.sum_rate - inst.source_entropy()).abs() <= 1e-12);
        assert_eq!(lossless.residual_mi, 0.0);
        assert_eq!((lossless.d1, lossless.d2), (0.0, 0.0));
        assert!((idle.d1 - 1.0).abs() <= 1e-12, "idle d1 is H(Y1)");
        assert!((idle.d2 - 1.0).abs() <= 1e-12, "idle d2 is H(Y2)");
    }

    #[test]
    fn kernel_matches_the_generic_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let inst = sources::random_ceo_instance(&mut rng, 2, &[2, 2]).unwrap();
            let ctx = SweepContext::new(&inst).unwrap();
            let cfg = AuxConfig::single(vec![
                random_channel(&mut rng, 2, 2),
                random_channel(&mut rng, 2, 2),
            ]);
            let fast = ctx.stats(&cfg.channels()[0][0], &cfg.channels()[1][0]);
            let slow = evaluate_ceo_point(&inst, &cfg).unwrap();
            let tol = 1e-9;
            assert!((fast.r1_cond - slow.rates_cond[0]).abs() <= tol, "trial {trial}");
            assert!((fast.r2_cond - slow.rates_cond[1]).abs() <= tol);
            assert!((fast.sum_rate - slow.sum_rate).abs() <= tol);
            assert!((fast.distortion - slow.distortion).abs() <= tol);
            assert!((fast.residual_mi - slow.residual_mi.unwrap()).abs() <= tol);
            let ext = extend_with_aux(inst.joint(), &cfg, &["Y1", "Y2"]).unwrap();
            let d1 = ext.conditional_entropy(&["Y1"], &["U1", "U2", "Q"]).unwrap();
            let d2 = ext.conditional_entropy(&["Y2"], &["U1", "U2", "Q"]).unwrap();
            assert!((fast.d1 - d1).abs() <= tol);
            assert!((fast.d2 - d2).abs() <= tol);
            // Conditional rates never exceed the sum rate budget.
            assert!(fast.r1_cond + fast.r2_cond <= fast.sum_rate + 1e-12);
        }
    }

    fn random_channel<R: rand::Rng>(rng: &mut R, n_in: usize, n_out: usize) -> Channel {
        let rows: Vec<Vec<f64>> = (0..n_in)
            .map(|_| {
                let mut v: Vec<f64> =
                    (0..n_out).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= s);
                v
            })
            .collect();
        Channel::new(rows).unwrap()
    }

    #[test]
    fn coarse_curve_has_exact_endpoints_and_is_nonincreasing() {
        let inst = sources::bsc_ceo(0.25).unwrap();
        let grid = SearchGrid::new(4, 10_000_000).unwrap();
        let env = ceo_curve(&inst, &grid, &SweepCache::disabled()).unwrap();
        assert_eq!(env[0], (0.0, 1.0), "zero rate pins distortion at H(X) = 1");
        for w in env.windows(2) {
            assert!(w[1].0 > w[0].0);
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        let floor = inst.irreducible_distortion();
        assert!(env.last().unwrap().1 >= floor - 1e-12);
        let eps0 = epsilon_star(&env, floor, 0.0);
        let mi = inst
            .joint()
            .mutual_information(&["X"], &["Y1", "Y2"], &[])
            .unwrap();
        assert!((eps0 - mi).abs() <= 1e-9, "zero-rate excess equals I(X;Y1,Y2)");
    }

    #[test]
    fn curve_caching_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SweepCache::at_dir(dir.path());
        let inst = sources::bsc_ceo(0.1).unwrap();
        let grid = SearchGrid::new(3, 10_000_000).unwrap();
        let first = sweep_configs(&inst, &grid, &cache).unwrap();
        let second = sweep_configs(&inst, &grid, &cache).unwrap();
        assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.distortion.to_bits(), b.distortion.to_bits());
            assert_eq!(a.sum_rate.to_bits(), b.sum_rate.to_bits());
        }
    }

    #[test]
    fn complete_observation_region_evaluates_shortfalls() {
        let pair = sources::dsbs(0.25).unwrap();
        let h1 = pair.conditional_entropy(&["Y1"], &["Y2"]).unwrap();
        let h12 = pair.entropy();
        let d = sw_minus_d_min_distortion(&pair, 0.2, 0.2).unwrap();
        assert!((d - (h12 - 0.4)).abs() <= 1e-12);
        assert!(sw_minus_d_membership(&pair, h1, 1.0, 0.0, 1e-12).unwrap());
        assert!(!sw_minus_d_membership(&pair, h1 - 0.05, 1.0, 0.0, 1e-9).unwrap());
        assert!(sw_minus_d_membership(&pair, h1 - 0.05, 1.0, 0.05, 1e-9).unwrap());
        assert_eq!(sw_minus_d_min_distortion(&pair, 5.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn markov_bound_scales_linearly() {
        assert!((markov_peak_bound(0.2, 1000, 0.1).unwrap() - 2000.0).abs() <= 1e-12);
        assert!(markov_peak_bound(0.2, 1000, 0.0).is_err());
    }

    #[test]
    fn envelope_value_saturates_at_the_lossless_corner() {
        let inst = CeoInstance::from_pair(&sources::dsbs(0.1).unwrap()).unwrap();
        let grid = SearchGrid::new(4, 10_000_000).unwrap();
        let env = ceo_curve(&inst, &grid, &SweepCache::disabled()).unwrap();
        // The identity configuration is on the mesh; its scalar rate is the
        // half sum rate, which dominates both conditional corner rates here.
        let x_id = 0.5 * inst.source_entropy();
        assert!(envelope_value(&env, x_id) <= 1e-12);
        assert_eq!(env.last().unwrap().1, 0.0);
    }

    #[test]
    fn min_kl_hits_both_rate_extremes() {
        let inst = sources::bsc_ceo(0.1).unwrap();
        let grid = SearchGrid::new(3, 10_000_000).unwrap();
        let cache = SweepCache::disabled();
        let mi = inst
            .joint()
            .mutual_information(&["X"], &["Y1", "Y2"], &[])
            .unwrap();
        let at_zero = min_kl(&inst, 0.0, 0.0, &grid, &cache).unwrap();
        assert!((at_zero - mi).abs() <= 1e-9, "zero rate leaves I(X;Y1,Y2) excess");
        assert_eq!(min_kl(&inst, 1.0, 1.0, &grid, &cache).unwrap(), 0.0);
        assert!(min_kl(&inst, -0.1, 0.0, &grid, &cache).is_err());
    }
}
