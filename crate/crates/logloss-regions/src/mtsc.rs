//! Two-encoder multiterminal coding under logarithmic loss.
//!
//! Each encoder observes one component of a correlated pair `(Y1, Y2)` and
//! the decoder reports a belief about both components, so a configuration
//! attains distortions `D1 = H(Y1 | U1, U2, Q)` and `D2 = H(Y2 | U1, U2, Q)`
//! at the usual contra-polymatroid rates. Production membership tests run
//! against the convexified sweep of per-configuration corner points.
//!
//! Two independent descriptions of the same region are kept alongside for
//! cross-validation:
//!
//! * a coupling route: the hidden-source instance `X = (Y_B, B)` with
//!   `B ~ Bernoulli(t)` turns any weighted distortion target into a CEO
//!   distortion via `H(X|U,Q) = h2(t) + t D1 + (1-t) D2`, and a pointwise
//!   convexity constraint in `t` amplifies into a simultaneous timeshare;
//! * a sequential outer description: five inequalities driven by a free
//!   parameter `D1`, whose rate-polytope vertices are dominated by explicit
//!   timeshares of sub-configurations (cases 1.1 through 2.2).

use crate::ceo::{sweep_configs, CeoInstance, ConfigStats};
use crate::hull::{simplex_min_with_weights, ConvexCloud};
use crate::info::{binary_entropy, entropy, extend_with_aux, Alphabet, AuxConfig, JointPmf};
use crate::search::{SearchGrid, SweepCache};
use crate::{Error, Result};
use rayon::prelude::*;

/// Tolerance for the preconditions of the vertex construction.
const PRE_TOL: f64 = 1e-9;

/// Which encoder is decoded conditionally at a rate corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Corner {
    /// Rates `(I(Y1;U1|U2,Q), I(Y2;U2|Q))`: description 2 is decoded first.
    FirstConditioned,
    /// Rates `(I(Y1;U1|Q), I(Y2;U2|U1,Q))`: description 1 is decoded first.
    SecondConditioned,
}

/// One component of an optimal timesharing mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    /// Configuration index in mesh enumeration order.
    pub config: usize,
    pub corner: Corner,
    pub weight: f64,
}

/// A rate-distortion query or achievement for the two-encoder problem.
#[derive(Debug, Clone)]
pub struct MtscPoint {
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl MtscPoint {
    pub fn new(r1: f64, r2: f64, d1: f64, d2: f64) -> Result<Self> {
        for v in [r1, r2, d1, d2] {
            if !v.is_finite() {
                return Err(Error::RateAssumption {
                    detail: format!("query coordinates must be finite, got {v}"),
                });
            }
        }
        if r1 < 0.0 || r2 < 0.0 {
            return Err(Error::RateAssumption {
                detail: format!("rates must be nonnegative, got ({r1}, {r2})"),
            });
        }
        if d1 < 0.0 || d2 < 0.0 {
            return Err(Error::NegativeDistortion { value: d1.min(d2) });
        }
        Ok(MtscPoint { r1, r2, d1, d2 })
    }
}

/// Membership verdict with the certifying mixture when inside.
#[derive(Debug, Clone)]
pub struct Membership {
    pub inside: bool,
    /// Least achievable `D2` under the query's rate and `D1` caps, when the
    /// caps are attainable at all.
    pub min_d2: Option<f64>,
    pub witness: Vec<MixtureComponent>,
}

/// Evaluates one auxiliary configuration at the corner where description 2
/// is decoded first: rates `(I(Y1;U1|U2,Q), I(Y2;U2|Q))` and distortions
/// `(H(Y1|U1,U2,Q), H(Y2|U1,U2,Q))`.
pub fn evaluate_mtsc_point(pair: &JointPmf, cfg: &AuxConfig) -> Result<MtscPoint> {
    let ext = extend_with_aux(pair, cfg, &["Y1", "Y2"])?;
    let r1 = ext.mutual_information(&["Y1"], &["U1"], &["U2", "Q"])?.max(0.0);
    let r2 = ext.mutual_information(&["Y2"], &["U2"], &["Q"])?.max(0.0);
    let d1 = ext.conditional_entropy(&["Y1"], &["U1", "U2", "Q"])?.max(0.0);
    let d2 = ext.conditional_entropy(&["Y2"], &["U1", "U2", "Q"])?.max(0.0);
    MtscPoint::new(r1, r2, d1, d2)
}

/// Both rate corners of every configuration as 4-vectors
/// `(r1, r2, d1, d2)`, weakly dominated rows dropped, each row tagged with
/// its configuration index and corner. The prune is exact for the membership
/// and minimization programs below because the region is up-closed.
pub fn corner_cloud(stats: &[ConfigStats]) -> Vec<(Vec<f64>, usize, Corner)> {
    let mut rows: Vec<(Vec<f64>, usize, Corner)> = Vec::with_capacity(stats.len() * 2);
    for (i, s) in stats.iter().enumerate() {
        rows.push((vec![s.r1_cond, s.r2_alone, s.d1, s.d2], i, Corner::FirstConditioned));
        rows.push((vec![s.r1_alone, s.r2_cond, s.d1, s.d2], i, Corner::SecondConditioned));
    }
    rows.sort_by(|a, b| {
        for (x, y) in a.0.iter().zip(&b.0) {
            match x.partial_cmp(y).expect("stats are finite") {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        (a.1, a.2).cmp(&(b.1, b.2))
    });
    rows.dedup_by(|next, kept| next.0 == kept.0);
    let mut kept: Vec<(Vec<f64>, usize, Corner)> = Vec::new();
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

/// Least mixture `D2` over the corner cloud under caps on rates and `D1`.
fn min_d2_over(
    cloud: &[(Vec<f64>, usize, Corner)],
    caps: &[f64; 3],
) -> Option<(f64, Vec<MixtureComponent>)> {
    let reduced: Vec<Vec<f64>> = cloud.iter().map(|(v, _, _)| v[..3].to_vec()).collect();
    let objective: Vec<f64> = cloud.iter().map(|(v, _, _)| v[3]).collect();
    let (value, weights) = simplex_min_with_weights(&reduced, caps, &objective)?;
    let witness = weights
        .into_iter()
        .map(|(k, w)| MixtureComponent { config: cloud[k].1, corner: cloud[k].2, weight: w })
        .collect();
    Some((value.max(0.0), witness))
}

/// Whether a query is dominated by some timesharing mixture of swept
/// configurations. Every mixture of achievable corners is achievable, and
/// every achievable tuple dominates such a mixture, so the test is exact for
/// the meshed region.
pub fn mtsc_membership(
    pair: &JointPmf,
    query: &MtscPoint,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<Membership> {
    let inst = CeoInstance::from_pair(pair)?;
    let stats = sweep_configs(&inst, grid, cache)?;
    let cloud = corner_cloud(&stats);
    match min_d2_over(&cloud, &[query.r1, query.r2, query.d1]) {
        Some((min_d2, witness)) => Ok(Membership {
            inside: query.d2 + PRE_TOL >= min_d2,
            min_d2: Some(min_d2),
            witness,
        }),
        None => Ok(Membership { inside: false, min_d2: None, witness: Vec::new() }),
    }
}

/// List-decoding achievability: the exponent tuple is feasible exactly when
/// the same numbers are feasible as log-loss distortions.
pub fn list_decoding_relabel(
    pair: &JointPmf,
    r1: f64,
    r2: f64,
    delta1: f64,
    delta2: f64,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<Membership> {
    let query = MtscPoint::new(r1, r2, delta1, delta2)?;
    mtsc_membership(pair, &query, grid, cache)
}

/// The hidden-source instance `X = (Y_B, B)` with `B ~ Bernoulli(t)`
/// independent of the pair: letter `x < n1` stands for `(Y1 = x, B = 1)` and
/// `x >= n1` for `(Y2 = x - n1, B = 2)`. Observations are conditionally
/// independent given `X` because `X` reveals one of them outright.
pub fn coupled_ceo_instance(pair: &JointPmf, t: f64) -> Result<CeoInstance> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::CouplingParam { t });
    }
    let i1 = pair.axis_index("Y1")?;
    let i2 = pair.axis_index("Y2")?;
    if pair.axes().len() != 2 || i1 != 0 || i2 != 1 {
        return Err(Error::ShapeMismatch { expected: 2, got: pair.axes().len() });
    }
    let n1 = pair.axes()[0].size;
    let n2 = pair.axes()[1].size;
    let nx = n1 + n2;
    let mut probs = vec![0.0f64; nx * n1 * n2];
    for y1 in 0..n1 {
        for y2 in 0..n2 {
            let p = pair.probs()[y1 * n2 + y2];
            probs[(y1 * n1 + y1) * n2 + y2] += t * p;
            probs[((n1 + y2) * n1 + y1) * n2 + y2] += (1.0 - t) * p;
        }
    }
    let joint = JointPmf::new(
        vec![Alphabet::new("X", nx), Alphabet::new("Y1", n1), Alphabet::new("Y2", n2)],
        probs,
    )?;
    CeoInstance::new(joint)
}

/// Residual of the coupling identity
/// `H(X_t | U, Q) = h2(t) + t H(Y1 | U, Q) + (1 - t) H(Y2 | U, Q)`,
/// evaluated with the same configuration on both sides. Zero up to rounding
/// for every `(cfg, t)`.
pub fn tuning_coupling_check(pair: &JointPmf, cfg: &AuxConfig, t: f64) -> Result<f64> {
    let inst = coupled_ceo_instance(pair, t)?;
    let ext = extend_with_aux(inst.joint(), cfg, &["Y1", "Y2"])?;
    let lhs = ext.conditional_entropy(&["X"], &["U1", "U2", "Q"])?;
    let d1 = ext.conditional_entropy(&["Y1"], &["U1", "U2", "Q"])?;
    let d2 = ext.conditional_entropy(&["Y2"], &["U1", "U2", "Q"])?;
    Ok(lhs - binary_entropy(t) - t * d1 - (1.0 - t) * d2)
}

/// A simultaneous timeshare extracted from a pointwise constraint.
#[derive(Debug, Clone)]
pub struct AmplifyCertificate<X> {
    /// Location in `[0, 1]` where the two interpolants are jointly small.
    pub t_star: f64,
    /// Weight on `left`; `right` carries `1 - theta`.
    pub theta: f64,
    pub left: X,
    pub right: X,
    /// `theta f1(left) + (1 - theta) f1(right)`, at most `r1 + eps`.
    pub g1: f64,
    /// `theta f2(left) + (1 - theta) f2(right)`, at most `r2 + eps`.
    pub g2: f64,
}

/// Turns the pointwise constraint
/// `t f1(h(t)) + (1 - t) f2(h(t)) <= t r1 + (1 - t) r2` on a sampled map
/// `h` into a single timeshare meeting both budgets at once.
///
/// Samples must run from `t = 0` to `t = 1` in strictly increasing order.
/// The piecewise-linear interpolants `g1, g2` of the sampled `f` values
/// start with `g2(0) <= r2 + eps`, end with `g1(1) <= r1 + eps`, and cannot
/// both overshoot at any point whose segment defect stays under the premise
/// slack, so a joint minimizer of `max(g1 - r1, g2 - r2)` certifies the
/// claim. Fails with the offending `t` when the premise itself is violated.
pub fn amplify_convexity<X: Clone>(
    samples: &[(f64, X)],
    f1: impl Fn(&X) -> f64,
    f2: impl Fn(&X) -> f64,
    r1: f64,
    r2: f64,
    eps: f64,
) -> Result<AmplifyCertificate<X>> {
    if samples.is_empty() {
        return Err(Error::RateAssumption { detail: "amplify needs at least one sample".into() });
    }
    if samples[0].0.abs() > 1e-12 || (samples[samples.len() - 1].0 - 1.0).abs() > 1e-12 {
        return Err(Error::RateAssumption {
            detail: "amplify samples must cover t = 0 and t = 1".into(),
        });
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::RateAssumption {
            detail: "amplify samples must be strictly increasing in t".into(),
        });
    }
    let v1: Vec<f64> = samples.iter().map(|(_, x)| f1(x)).collect();
    let v2: Vec<f64> = samples.iter().map(|(_, x)| f2(x)).collect();
    for (j, &(t, _)) in samples.iter().enumerate() {
        let lhs = t * v1[j] + (1.0 - t) * v2[j];
        let rhs = t * r1 + (1.0 - t) * r2;
        if lhs > rhs + eps {
            return Err(Error::AmplifyPremise { t, lhs, rhs });
        }
    }

    // The pointwise maximum of two piecewise-linear functions attains its
    // minimum at a sample or at a crossing inside a segment.
    let mut best: Option<(f64, usize, usize, f64)> = None;
    let mut consider = |score: f64, l: usize, r: usize, theta: f64| {
        if best.map_or(true, |(s, _, _, _)| score < s) {
            best = Some((score, l, r, theta));
        }
    };
    for j in 0..samples.len() {
        consider((v1[j] - r1).max(v2[j] - r2), j, j, 1.0);
        if j + 1 < samples.len() {
            let da = v1[j] - v1[j + 1];
            let db = v2[j] - v2[j + 1];
            if (da - db).abs() > 1e-15 {
                let theta = (r1 - r2 + v2[j + 1] - v1[j + 1]) / (da - db);
                if (0.0..=1.0).contains(&theta) {
                    let g1 = theta * v1[j] + (1.0 - theta) * v1[j + 1];
                    let g2 = theta * v2[j] + (1.0 - theta) * v2[j + 1];
                    consider((g1 - r1).max(g2 - r2), j, j + 1, theta);
                }
            }
        }
    }
    let (score, l, r, theta) = best.expect("at least one sample was scored");
    if score > eps {
        return Err(Error::RateAssumption {
            detail: format!("no joint timeshare within eps; best residual {score}"),
        });
    }
    Ok(AmplifyCertificate {
        t_star: theta * samples[l].0 + (1.0 - theta) * samples[r].0,
        theta,
        left: samples[l].1.clone(),
        right: samples[r].1.clone(),
        g1: theta * v1[l] + (1.0 - theta) * v1[r],
        g2: theta * v2[l] + (1.0 - theta) * v2[r],
    })
}

/// Distortion slack added to the harness targets so the certificate always
/// clears the interpolation defect of the finite `t` grid.
pub const TUNING_MARGIN: f64 = 0.05;

/// Number of uniform `t` samples used by the coupling harness.
pub const TUNING_GRID: usize = 101;

/// Verification bundle from the coupling route.
#[derive(Debug, Clone)]
pub struct TuningCheck {
    pub r1: f64,
    pub r2: f64,
    /// Distortion targets, one margin above an achievable boundary point.
    pub d1_target: f64,
    pub d2_target: f64,
    pub certificate: AmplifyCertificate<(f64, f64)>,
}

/// Runs the coupling route end to end at one rate pair: samples the
/// rate-feasible minimizers of `t d1 + (1 - t) d2` on a uniform `t` grid and
/// amplifies the pointwise bound into a timeshare that meets the `D1` and
/// `D2` targets simultaneously.
///
/// `d1_frac` in `[0, 1]` selects the `D1` boundary point between the least
/// achievable `d1` and `H(Y1)`; both targets then sit one margin above the
/// boundary.
pub fn tuning_harness(
    pair: &JointPmf,
    grid: &SearchGrid,
    cache: &SweepCache,
    r1: f64,
    r2: f64,
    d1_frac: f64,
) -> Result<TuningCheck> {
    if !(0.0..=1.0).contains(&d1_frac) {
        return Err(Error::CouplingParam { t: d1_frac });
    }
    let inst = CeoInstance::from_pair(pair)?;
    let stats = sweep_configs(&inst, grid, cache)?;
    let cloud = corner_cloud(&stats);
    let rates: Vec<Vec<f64>> = cloud.iter().map(|(v, _, _)| v[..2].to_vec()).collect();
    let d1s: Vec<f64> = cloud.iter().map(|(v, _, _)| v[2]).collect();
    let caps = [r1, r2];
    let hy1 = pair.marginal_entropy(&["Y1"])?;

    let (d1_min, _) = simplex_min_with_weights(&rates, &caps, &d1s)
        .expect("zero-rate corners keep every nonnegative rate pair feasible");
    let d1_boundary = d1_min + d1_frac * (hy1 - d1_min).max(0.0);
    let (d2_boundary, _) = min_d2_over(&cloud, &[r1, r2, d1_boundary])
        .expect("the d1 minimizer satisfies the relaxed cap");
    let d1_target = d1_boundary + TUNING_MARGIN;
    let d2_target = d2_boundary + TUNING_MARGIN;

    let samples: Vec<(f64, (f64, f64))> = (0..TUNING_GRID)
        .map(|j| {
            let t = j as f64 / (TUNING_GRID - 1) as f64;
            let objective: Vec<f64> = cloud
                .iter()
                .map(|(v, _, _)| t * v[2] + (1.0 - t) * v[3])
                .collect();
            let (_, weights) = simplex_min_with_weights(&rates, &caps, &objective)
                .expect("rate caps verified feasible above");
            let mut mix = (0.0, 0.0);
            for (k, w) in weights {
                mix.0 += w * cloud[k].0[2];
                mix.1 += w * cloud[k].0[3];
            }
            (t, mix)
        })
        .collect();
    let certificate =
        amplify_convexity(&samples, |x| x.0, |x| x.1, d1_target, d2_target, 1e-6)?;
    Ok(TuningCheck { r1, r2, d1_target, d2_target, certificate })
}

/// The five sequential bounds generated by one configuration and a free
/// distortion parameter `D1`.
#[derive(Debug, Clone, Copy)]
pub struct SeqOuterBounds {
    /// `H(Y1 | U1, U2, Q)`: least `D1` the configuration supports.
    pub d1_floor: f64,
    /// `D1 + H(Y2 | U1, U2, Q) - H(Y1 | U1, U2, Q)`.
    pub d2_bound: f64,
    /// `H(Y1 | U2, Q) - D1`.
    pub r1_bound: f64,
    /// `I(Y2; U2 | Y1, Q) + H(Y1 | U1, Q) - D1`.
    pub r2_bound: f64,
    /// `I(Y2; U2 | Y1, Q) + H(Y1) - D1`.
    pub sum_bound: f64,
}

/// Conditional entropies of one extended configuration, shared by the outer
/// description and the vertex construction.
struct SeqQuantities {
    hy1: f64,
    hy2: f64,
    h1_u1q: f64,
    h1_u2q: f64,
    h1_uq: f64,
    h2_u1q: f64,
    h2_u2q: f64,
    h2_uq: f64,
    i22_y1q: f64,
}

impl SeqQuantities {
    fn new(pair: &JointPmf, cfg: &AuxConfig) -> Result<Self> {
        let ext = extend_with_aux(pair, cfg, &["Y1", "Y2"])?;
        Ok(SeqQuantities {
            hy1: pair.marginal_entropy(&["Y1"])?,
            hy2: pair.marginal_entropy(&["Y2"])?,
            h1_u1q: ext.conditional_entropy(&["Y1"], &["U1", "Q"])?,
            h1_u2q: ext.conditional_entropy(&["Y1"], &["U2", "Q"])?,
            h1_uq: ext.conditional_entropy(&["Y1"], &["U1", "U2", "Q"])?,
            h2_u1q: ext.conditional_entropy(&["Y2"], &["U1", "Q"])?,
            h2_u2q: ext.conditional_entropy(&["Y2"], &["U2", "Q"])?,
            h2_uq: ext.conditional_entropy(&["Y2"], &["U1", "U2", "Q"])?,
            i22_y1q: ext.mutual_information(&["Y2"], &["U2"], &["Y1", "Q"])?.max(0.0),
        })
    }
}

/// Evaluates the five sequential bounds at `(cfg, D1)`. Requires `D1` at or
/// above the configuration's floor `H(Y1 | U1, U2, Q)`.
pub fn seq_outer_region_point(
    pair: &JointPmf,
    cfg: &AuxConfig,
    d1: f64,
) -> Result<SeqOuterBounds> {
    let q = SeqQuantities::new(pair, cfg)?;
    if d1 < q.h1_uq - PRE_TOL {
        return Err(Error::DistortionBelowFloor { d: d1, floor: q.h1_uq });
    }
    Ok(SeqOuterBounds {
        d1_floor: q.h1_uq,
        d2_bound: d1 + q.h2_uq - q.h1_uq,
        r1_bound: q.h1_u2q - d1,
        r2_bound: q.i22_y1q + q.h1_u1q - d1,
        sum_bound: q.i22_y1q + q.hy1 - d1,
    })
}

/// Which branch of the vertex analysis applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtCase {
    C11,
    C12,
    C21,
    C22,
}

impl std::fmt::Display for BtCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BtCase::C11 => "1.1",
            BtCase::C12 => "1.2",
            BtCase::C21 => "2.1",
            BtCase::C22 => "2.2",
        })
    }
}

/// One rate-polytope vertex together with the timeshare that dominates the
/// requested distortion pair at that vertex.
#[derive(Debug, Clone)]
pub struct VertexDomination {
    pub vertex: (f64, f64),
    pub case: BtCase,
    /// True when the case's denominator mutual information vanished and the
    /// timeshare collapsed to `theta = 0`.
    pub degenerate: bool,
    pub theta: f64,
    pub d1_theta: f64,
    pub d2_theta: f64,
}

fn theta_or_degenerate(num: f64, den: f64) -> (f64, bool) {
    if den <= 1e-12 {
        (0.0, true)
    } else {
        ((num / den).clamp(0.0, 1.0), false)
    }
}

/// Dominates both vertices of the sequential rate polytope at `(D1, D2)` by
/// explicit timeshares of sub-configurations.
///
/// Requires `H(Y1|U1,U2,Q) <= D1 <= H(Y1)` and `D2` at or above the
/// sequential bound; the returned timeshares then satisfy
/// `d1_theta <= D1 + 1e-9` and `d2_theta <= D2 + 1e-9` with `theta` in
/// `[0, 1]`.
pub fn bt_vertex_construction(
    pair: &JointPmf,
    cfg: &AuxConfig,
    d1: f64,
    d2: f64,
) -> Result<[VertexDomination; 2]> {
    let q = SeqQuantities::new(pair, cfg)?;
    if d1 < q.h1_uq - PRE_TOL {
        return Err(Error::DistortionBelowFloor { d: d1, floor: q.h1_uq });
    }
    if d2 < d1 + q.h2_uq - q.h1_uq - PRE_TOL {
        return Err(Error::DistortionBelowFloor { d: d2, floor: d1 + q.h2_uq - q.h1_uq });
    }
    if d1 > q.hy1 + PRE_TOL {
        return Err(Error::RateAssumption {
            detail: format!("D1 = {d1} exceeds H(Y1) = {}", q.hy1),
        });
    }

    let i22_q = (q.hy2 - q.h2_u2q).max(0.0);
    let i11_u2q = (q.h1_u2q - q.h1_uq).max(0.0);
    let i11_q = (q.hy1 - q.h1_u1q).max(0.0);
    let i22_u1q = (q.h2_u1q - q.h2_uq).max(0.0);

    // First vertex: encoder 1's rate drops to its conditional floor.
    let r1_excess = q.h1_u2q - d1;
    let first = if r1_excess <= 0.0 {
        let (theta, degenerate) = theta_or_degenerate(d1 - q.i22_y1q - q.hy1 + i22_q, i22_q);
        VertexDomination {
            vertex: (0.0, (q.i22_y1q + q.hy1 - d1).max(0.0)),
            case: BtCase::C11,
            degenerate,
            theta,
            d1_theta: theta * q.hy1 + (1.0 - theta) * q.h1_u2q,
            d2_theta: theta * q.hy2 + (1.0 - theta) * q.h2_u2q,
        }
    } else {
        let (theta, degenerate) = theta_or_degenerate(d1 - q.h1_u2q + i11_u2q, i11_u2q);
        VertexDomination {
            vertex: (r1_excess, (q.i22_y1q + q.hy1 - d1 - r1_excess).max(0.0)),
            case: BtCase::C12,
            degenerate,
            theta,
            d1_theta: theta * q.h1_u2q + (1.0 - theta) * q.h1_uq,
            d2_theta: theta * q.h2_u2q + (1.0 - theta) * q.h2_uq,
        }
    };

    // Second vertex: encoder 2's rate drops to its conditional floor.
    let r2_excess = q.i22_y1q + q.h1_u1q - d1;
    let second = if r2_excess <= 0.0 {
        let (theta, degenerate) = theta_or_degenerate(d1 - q.i22_y1q - q.hy1 + i11_q, i11_q);
        VertexDomination {
            vertex: ((q.i22_y1q + q.hy1 - d1).max(0.0), 0.0),
            case: BtCase::C21,
            degenerate,
            theta,
            d1_theta: theta * q.hy1 + (1.0 - theta) * q.h1_u1q,
            d2_theta: theta * q.hy2 + (1.0 - theta) * q.h2_u1q,
        }
    } else {
        let (theta, degenerate) = theta_or_degenerate(d1 - q.h1_u1q - q.i22_y1q + i22_u1q, i22_u1q);
        VertexDomination {
            vertex: ((q.i22_y1q + q.hy1 - d1 - r2_excess).max(0.0), r2_excess),
            case: BtCase::C22,
            degenerate,
            theta,
            d1_theta: theta * q.h1_u1q + (1.0 - theta) * q.h1_uq,
            d2_theta: theta * q.h2_u1q + (1.0 - theta) * q.h2_uq,
        }
    };

    for v in [&first, &second] {
        if v.d1_theta > d1 + PRE_TOL || v.d2_theta > d2 + PRE_TOL {
            return Err(Error::RateAssumption {
                detail: format!(
                    "case {} timeshare reached ({}, {}) above targets ({d1}, {d2})",
                    v.case, v.d1_theta, v.d2_theta
                ),
            });
        }
    }
    Ok([first, second])
}

/// Per-configuration entropies needed by the outer cloud, computed without
/// the auxiliary extension: `U1` depends on `Y1` alone and `U2` on `Y2`
/// alone, so every table is a product of pair marginals and channel rows.
struct OuterExtras {
    h1_u1: f64,
    h1_u2: f64,
    i22_y1: f64,
}

fn outer_extras(
    p_pair: &[f64],
    p_y1: &[f64],
    p_y2: &[f64],
    w1: &crate::info::Channel,
    w2: &crate::info::Channel,
) -> OuterExtras {
    let n1 = p_y1.len();
    let n2 = p_y2.len();
    let nu1 = w1.output_size();
    let nu2 = w2.output_size();
    // a[y1][u2] = p(y1, u2); c[y1][u1] = p(y1, u1).
    let mut a = vec![0.0f64; n1 * nu2];
    for y1 in 0..n1 {
        for y2 in 0..n2 {
            let p = p_pair[y1 * n2 + y2];
            if p == 0.0 {
                continue;
            }
            for u2 in 0..nu2 {
                a[y1 * nu2 + u2] += p * w2.rows()[y2][u2];
            }
        }
    }
    let mut c = vec![0.0f64; n1 * nu1];
    for y1 in 0..n1 {
        for u1 in 0..nu1 {
            c[y1 * nu1 + u1] = p_y1[y1] * w1.rows()[y1][u1];
        }
    }
    let mut pu1 = vec![0.0f64; nu1];
    let mut pu2 = vec![0.0f64; nu2];
    for y1 in 0..n1 {
        for u1 in 0..nu1 {
            pu1[u1] += c[y1 * nu1 + u1];
        }
        for u2 in 0..nu2 {
            pu2[u2] += a[y1 * nu2 + u2];
        }
    }
    let h_u2_given_y2: f64 = p_y2
        .iter()
        .zip(w2.rows())
        .map(|(p, row)| p * entropy(row))
        .sum();
    let h_y1_u2 = entropy(&a);
    OuterExtras {
        h1_u1: (entropy(&c) - entropy(&pu1)).max(0.0),
        h1_u2: (h_y1_u2 - entropy(&pu2)).max(0.0),
        i22_y1: (h_y1_u2 - entropy(p_y1) - h_u2_given_y2).max(0.0),
    }
}

/// The outer description as a 4-D point cloud: for every configuration the
/// two rate vertices are sampled at each breakpoint of their piecewise-affine
/// dependence on `D1`, which generates the exact convex hull of the
/// per-configuration outer regions.
pub fn seq_outer_cloud(
    pair: &JointPmf,
    grid: &SearchGrid,
    cache: &SweepCache,
) -> Result<Vec<Vec<f64>>> {
    let inst = CeoInstance::from_pair(pair)?;
    let stats = sweep_configs(&inst, grid, cache)?;
    let configs = grid.enumerate_configs(&inst.obs_sizes())?;
    let p_pair = pair.probs().to_vec();
    let p_y1 = pair.marginal(&["Y1"])?.probs().to_vec();
    let p_y2 = pair.marginal(&["Y2"])?.probs().to_vec();
    let hy1 = entropy(&p_y1);

    let points: Vec<Vec<f64>> = configs
        .par_iter()
        .zip(&stats)
        .map(|(cfg, s)| {
            let e = outer_extras(&p_pair, &p_y1, &p_y2, &cfg[0], &cfg[1]);
            let floor = s.d1;
            let gap = s.d2 - s.d1;
            let mut cands = vec![floor, hy1, e.h1_u2, e.i22_y1 + e.h1_u1];
            cands.retain(|&v| v >= floor - 1e-12 && v <= hy1 + 1e-12);
            cands.sort_by(|x, y| x.partial_cmp(y).expect("entropies are finite"));
            cands.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
            let mut out = Vec::with_capacity(cands.len() * 2 * 6);
            for &d1 in &cands {
                let d1 = d1.clamp(floor, hy1.max(floor));
                let d2b = (d1 + gap).max(0.0);
                let r1a = (e.h1_u2 - d1).max(0.0);
                let r2a = (e.i22_y1 + hy1 - d1 - r1a).max(0.0);
                let r2b = (e.i22_y1 + e.h1_u1 - d1).max(0.0);
                let r1b = (e.i22_y1 + hy1 - d1 - r2b).max(0.0);
                out.extend_from_slice(&[r1a, r2a, d1, d2b, r1b, r2b, d1, d2b]);
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flat_map(|flat| {
            flat.chunks_exact(4)
                .map(|c| c.to_vec())
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(points)
}

/// Lattice agreement report between the sweep region and the sequential
/// outer description.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    /// Number of `(R1, R2, D1, D2)` lattice tuples examined.
    pub lattice_points: usize,
    /// Tuples where the two verdicts differ at all.
    pub disagreements: usize,
    /// Tuples whose disagreement survives shifting the query by the band in
    /// both directions; zero means the descriptions agree at resolution.
    pub robust_disagreements: usize,
    /// Largest gap between the two least-`D2` curves where both exist.
    pub max_min_d2_gap: f64,
    /// Lattice tuple attaining the worst robust disagreement, else the
    /// worst gap.
    pub worst: Option<[f64; 4]>,
}

/// Compares membership via the sweep corners against membership via the
/// outer description on a full query lattice of pitch `step`, tolerating
/// verdict flips only within `band` of the common boundary.
pub fn mtsc_sandwich(
    pair: &JointPmf,
    grid: &SearchGrid,
    cache: &SweepCache,
    step: f64,
    band: f64,
) -> Result<SandwichReport> {
    if !(step > 0.0) || !(band >= 0.0) {
        return Err(Error::RateAssumption {
            detail: format!("lattice step {step} and band {band} must be positive"),
        });
    }
    let inst = CeoInstance::from_pair(pair)?;
    let stats = sweep_configs(&inst, grid, cache)?;
    let inner_pts: Vec<Vec<f64>> = stats
        .iter()
        .flat_map(|s| {
            [
                vec![s.r1_cond, s.r2_alone, s.d1, s.d2],
                vec![s.r1_alone, s.r2_cond, s.d1, s.d2],
            ]
        })
        .collect();
    let inner = ConvexCloud::new(inner_pts)?;
    let outer = ConvexCloud::new(seq_outer_cloud(pair, grid, cache)?)?;

    let hy1 = pair.marginal_entropy(&["Y1"])?;
    let hy2 = pair.marginal_entropy(&["Y2"])?;
    let lattice = |max: f64| -> Vec<f64> {
        let n = (max / step - 1e-9).ceil().max(0.0) as usize;
        (0..=n).map(|i| i as f64 * step).collect()
    };
    let r1s = lattice(hy1);
    let r2s = lattice(hy2);
    let d1s = lattice(hy1);
    let d2s = lattice(hy2);

    let mut cells = Vec::with_capacity(r1s.len() * r2s.len() * d1s.len());
    for &r1 in &r1s {
        for &r2 in &r2s {
            for &d1 in &d1s {
                cells.push([r1, r2, d1]);
            }
        }
    }
    // Base, relaxed, and tightened minima for both clouds per cell.
    let minima: Vec<[Option<f64>; 6]> = cells
        .par_iter()
        .map(|c| {
            let relax = [c[0] + band, c[1] + band, c[2] + band];
            let tight = [c[0] - band, c[1] - band, c[2] - band];
            Ok([
                inner.min_last_coord(c)?,
                inner.min_last_coord(&relax)?,
                inner.min_last_coord(&tight)?,
                outer.min_last_coord(c)?,
                outer.min_last_coord(&relax)?,
                outer.min_last_coord(&tight)?,
            ])
        })
        .collect::<Result<_>>()?;

    let verdict = |m: Option<f64>, d2: f64| m.is_some_and(|v| d2 + PRE_TOL >= v);
    let mut report = SandwichReport {
        lattice_points: cells.len() * d2s.len(),
        disagreements: 0,
        robust_disagreements: 0,
        max_min_d2_gap: 0.0,
        worst: None,
    };
    let mut worst_robust = false;
    for (cell, m) in cells.iter().zip(&minima) {
        let [in_base, in_relax, in_tight, out_base, out_relax, out_tight] = *m;
        if let (Some(a), Some(b)) = (in_base, out_base) {
            let gap = (a - b).abs();
            if gap > report.max_min_d2_gap {
                report.max_min_d2_gap = gap;
                if !worst_robust {
                    report.worst = Some([cell[0], cell[1], cell[2], a.min(b)]);
                }
            }
        }
        for &d2 in &d2s {
            let iv = verdict(in_base, d2);
            let ov = verdict(out_base, d2);
            if iv == ov {
                continue;
            }
            report.disagreements += 1;
            // The disagreement is inside the band when either relaxing the
            // failing side or tightening the passing side flips its verdict.
            let acceptable = if iv {
                verdict(out_relax, d2 + band) || !verdict(in_tight, d2 - band)
            } else {
                verdict(in_relax, d2 + band) || !verdict(out_tight, d2 - band)
            };
            if !acceptable {
                report.robust_disagreements += 1;
                if !worst_robust {
                    report.worst = Some([cell[0], cell[1], cell[2], d2]);
                    worst_robust = true;
                }
            }
        }
    }
    Ok(report)
}
