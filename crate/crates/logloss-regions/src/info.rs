//! Finite-alphabet probability tables and the entropy kernels built on them.
//!
//! Everything downstream works with one representation: a dense, row-major
//! joint pmf over named axes. Information quantities are derived from marginal
//! entropies,
//!
//! ```text
//! H(T | G)      = H(T, G) - H(G)
//! I(A ; B | C)  = H(A, C) + H(B, C) - H(A, B, C) - H(C)
//! ```
//!
//! so a single accumulate-and-sum primitive covers all of them. All entropies
//! are in bits and `0 log 0 = 0`.

use crate::{Error, Result, NORMALIZATION_TOL};
use serde::{Deserialize, Serialize};

/// Entries more negative than this are rejected; entries in
/// `(-CLAMP_TOL, 0)` are clamped to exact zero during validation.
const CLAMP_TOL: f64 = 1e-12;

/// A named finite alphabet. Symbols are identified by index `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Alphabet { name: name.into(), size }
    }
}

/// Shannon entropy of a nonnegative vector in bits.
///
/// Zero entries contribute nothing. The input is not renormalized, so this is
/// only an entropy when `p` sums to one.
pub fn entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.log2();
        }
    }
    h
}

/// Binary entropy `h2(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
///
/// Returns `+inf` when `q` puts zero mass where `p` does not (support
/// mismatch). Lengths must agree.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch { expected: p.len(), got: q.len() });
    }
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += pi * (pi / qi).log2();
        }
    }
    Ok(d)
}

/// A soft reproduction: a pmf over the source alphabet emitted by a decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftReproduction {
    probs: Vec<f64>,
}

impl SoftReproduction {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_pmf(&probs)?;
        let mut probs = probs;
        clamp_small_negatives(&mut probs);
        Ok(SoftReproduction { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Logarithmic loss `log2(1 / q(y))` of a soft reproduction against the
/// realized symbol `y`. Zero assigned mass costs `+inf`.
pub fn log_loss(repro: &SoftReproduction, y: usize) -> f64 {
    let q = repro.probs[y];
    if q > 0.0 {
        -q.log2()
    } else {
        f64::INFINITY
    }
}

fn validate_pmf(probs: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for (i, &x) in probs.iter().enumerate() {
        if x < -CLAMP_TOL || !x.is_finite() {
            return Err(Error::NegativeMass { index: i, value: x });
        }
        sum += x.max(0.0);
    }
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::PmfSum { sum });
    }
    Ok(())
}

fn clamp_small_negatives(probs: &mut [f64]) {
    for x in probs.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// A dense joint pmf over one or more named axes, stored row-major in the
/// axis order given at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl JointPmf {
    /// Validates axis names (unique, nonempty), the table shape, entry
    /// nonnegativity (entries within `-1e-12` of zero are clamped to zero),
    /// and normalization within `1e-9`.
    pub fn new(axes: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        let mut expected = 1usize;
        for ax in &axes {
            if ax.size == 0 {
                return Err(Error::ShapeMismatch { expected: 1, got: 0 });
            }
            expected = expected.saturating_mul(ax.size);
        }
        for (i, a) in axes.iter().enumerate() {
            if a.name.is_empty() {
                return Err(Error::UnknownAxis(String::new()));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::DuplicateAxis(a.name.clone()));
            }
        }
        if probs.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: probs.len() });
        }
        validate_pmf(&probs)?;
        let mut probs = probs;
        clamp_small_negatives(&mut probs);
        Ok(JointPmf { axes, probs })
    }

    /// Parses and validates the JSON form
    /// `{"axes": [{"name": .., "size": ..}, ..], "probs": [..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            axes: Vec<Alphabet>,
            probs: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        JointPmf::new(raw.axes, raw.probs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pmf serialization cannot fail")
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis_size(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_index(name)?].size)
    }

    /// Row-major strides, last axis fastest.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].size;
        }
        strides
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateAxis((*name).to_string()));
            }
            idx.push(self.axis_index(name)?);
        }
        Ok(idx)
    }

    /// Marginal table over `names`, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointPmf> {
        let keep = self.resolve(names)?;
        let axes: Vec<Alphabet> = keep.iter().map(|&i| self.axes[i].clone()).collect();
        let probs = self.accumulate(&keep);
        JointPmf::new(axes, probs)
    }

    /// Accumulates the table onto the product of the given axis indices,
    /// arranged row-major in that order.
    fn accumulate(&self, keep: &[usize]) -> Vec<f64> {
        let strides = self.strides();
        let mut out_len = 1usize;
        let mut plan: Vec<(usize, usize, usize)> = Vec::with_capacity(keep.len());
        for &ax in keep.iter().rev() {
            plan.push((strides[ax], self.axes[ax].size, out_len));
            out_len *= self.axes[ax].size;
        }
        let mut out = vec![0.0f64; out_len];
        for (i, &p) in self.probs.iter().enumerate() {
            let mut o = 0usize;
            for &(stride_in, size, stride_out) in &plan {
                o += ((i / stride_in) % size) * stride_out;
            }
            out[o] += p;
        }
        out
    }

    /// Entropy of the marginal over `names`, in bits.
    pub fn marginal_entropy(&self, names: &[&str]) -> Result<f64> {
        let keep = self.resolve(names)?;
        Ok(entropy(&self.accumulate(&keep)))
    }

    /// Entropy of the full table, in bits.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Conditional entropy `H(targets | given)` in bits.
    ///
    /// The two sets must be disjoint. May return a tiny negative value (not
    /// below `-1e-12`) from rounding; callers needing exact floors snap it.
    pub fn conditional_entropy(&self, targets: &[&str], given: &[&str]) -> Result<f64> {
        let both = disjoint_union(targets, given)?;
        Ok(self.marginal_entropy(&both)? - self.marginal_entropy(given)?)
    }

    /// Conditional mutual information `I(a ; b | given)` in bits.
    ///
    /// The three sets must be pairwise disjoint. Rounding can leave a tiny
    /// negative value, never below `-1e-12` for validated inputs.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        let ac = disjoint_union(a, given)?;
        let bc = disjoint_union(b, given)?;
        let abc = disjoint_union(&disjoint_union(a, b)?, given)?;
        Ok(self.marginal_entropy(&ac)? + self.marginal_entropy(&bc)?
            - self.marginal_entropy(&abc)?
            - self.marginal_entropy(given)?)
    }

    /// Conditional rows `p(targets | given = z)` for every cell `z` of the
    /// given axes with positive mass, as `(p(z), row)` pairs in row-major
    /// order of the given axes.
    pub fn posteriors(&self, targets: &[&str], given: &[&str]) -> Result<Vec<(f64, Vec<f64>)>> {
        let all = disjoint_union(given, targets)?;
        let m = self.marginal(&all)?;
        let t_len: usize = targets
            .iter()
            .map(|n| m.axis_size(n).expect("axis present by construction"))
            .product();
        let g_len = m.probs.len() / t_len.max(1);
        let mut rows = Vec::new();
        for g in 0..g_len {
            let slice = &m.probs[g * t_len..(g + 1) * t_len];
            let pz: f64 = slice.iter().sum();
            if pz > 0.0 {
                rows.push((pz, slice.iter().map(|&x| x / pz).collect()));
            }
        }
        Ok(rows)
    }
}

fn disjoint_union<'a>(a: &[&'a str], b: &[&'a str]) -> Result<Vec<&'a str>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    for name in b {
        if a.contains(name) {
            return Err(Error::DuplicateAxis((*name).to_string()));
        }
        out.push(name);
    }
    Ok(out)
}

/// A discrete memoryless channel as a row-stochastic matrix: `rows[y][u]` is
/// the probability of emitting `u` on input `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::ShapeMismatch { expected: 1, got: 0 });
        }
        let width = rows[0].len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::ShapeMismatch { expected: width, got: row.len() });
            }
            let mut sum = 0.0;
            for (i, &x) in row.iter().enumerate() {
                if x < -CLAMP_TOL || !x.is_finite() {
                    return Err(Error::NegativeMass { index: r * width + i, value: x });
                }
                sum += x.max(0.0);
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::RowNotStochastic { row: r, sum });
            }
        }
        let mut rows = rows;
        for row in rows.iter_mut() {
            clamp_small_negatives(row);
        }
        Ok(Channel { rows })
    }

    /// Identity channel on `n` symbols.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Channel { rows }
    }

    /// Channel that maps every input to symbol 0 of a one-symbol output
    /// alphabet; composing with it erases the observation.
    pub fn constant(n_in: usize) -> Self {
        Channel { rows: vec![vec![1.0]; n_in] }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// An auxiliary-channel configuration: a timesharing pmf over `Q` and, for
/// each encoder `i` and each `q`, a test channel `p(u_i | y_i, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxConfig {
    q_weights: Vec<f64>,
    /// Indexed `channels[encoder][q]`.
    channels: Vec<Vec<Channel>>,
}

impl AuxConfig {
    pub fn new(q_weights: Vec<f64>, channels: Vec<Vec<Channel>>) -> Result<Self> {
        validate_pmf(&q_weights)?;
        for per_q in &channels {
            if per_q.len() != q_weights.len() {
                return Err(Error::ShapeMismatch { expected: q_weights.len(), got: per_q.len() });
            }
            for ch in per_q {
                if ch.input_size() != per_q[0].input_size()
                    || ch.output_size() != per_q[0].output_size()
                {
                    return Err(Error::ShapeMismatch {
                        expected: per_q[0].input_size(),
                        got: ch.input_size(),
                    });
                }
            }
        }
        let mut q_weights = q_weights;
        clamp_small_negatives(&mut q_weights);
        Ok(AuxConfig { q_weights, channels })
    }

    /// A degenerate-`Q` configuration from one channel per encoder.
    pub fn single(channels: Vec<Channel>) -> Self {
        AuxConfig {
            q_weights: vec![1.0],
            channels: channels.into_iter().map(|c| vec![c]).collect(),
        }
    }

    /// Mixes two degenerate-`Q` configurations with weight `lambda` on the
    /// first, using a binary timesharing variable.
    pub fn mix(a: &AuxConfig, b: &AuxConfig, lambda: f64) -> Result<Self> {
        if a.channels.len() != b.channels.len() {
            return Err(Error::ShapeMismatch { expected: a.channels.len(), got: b.channels.len() });
        }
        let mut channels = Vec::with_capacity(a.channels.len());
        for (ca, cb) in a.channels.iter().zip(&b.channels) {
            let mut per_q = Vec::new();
            per_q.extend(ca.iter().cloned());
            per_q.extend(cb.iter().cloned());
            channels.push(per_q);
        }
        let mut q_weights = Vec::new();
        q_weights.extend(a.q_weights.iter().map(|w| w * lambda));
        q_weights.extend(b.q_weights.iter().map(|w| w * (1.0 - lambda)));
        AuxConfig::new(q_weights, channels)
    }

    pub fn encoders(&self) -> usize {
        self.channels.len()
    }

    pub fn q_weights(&self) -> &[f64] {
        &self.q_weights
    }

    pub fn channels(&self) -> &[Vec<Channel>] {
        &self.channels
    }
}

/// Extends a base joint with a timesharing axis and one auxiliary axis per
/// encoder. The output factorizes as
///
/// ```text
/// p(q, base, u_1..u_m) = p(q) * p(base) * prod_i p(u_i | y_i, q)
/// ```
///
/// where `obs[i]` names the axis of the base joint observed by encoder `i`.
/// Output axes are ordered `Q`, the base axes, then `U1..Um`. Auxiliary
/// cardinalities must not exceed their observation cardinalities.
pub fn extend_with_aux(base: &JointPmf, cfg: &AuxConfig, obs: &[&str]) -> Result<JointPmf> {
    let m = cfg.channels().len();
    if obs.len() != m {
        return Err(Error::ShapeMismatch { expected: m, got: obs.len() });
    }
    let nq = cfg.q_weights().len();
    let mut obs_axes = Vec::with_capacity(m);
    for (i, name) in obs.iter().enumerate() {
        if obs[..i].contains(name) {
            return Err(Error::DuplicateAxis((*name).to_string()));
        }
        let ax = base.axis_index(name)?;
        let y_size = base.axes()[ax].size;
        let ch = &cfg.channels()[i][0];
        if ch.input_size() != y_size {
            return Err(Error::ShapeMismatch { expected: y_size, got: ch.input_size() });
        }
        if ch.output_size() > y_size {
            return Err(Error::AuxCardinality { encoder: i, u: ch.output_size(), y: y_size });
        }
        obs_axes.push(ax);
    }

    let mut axes = Vec::with_capacity(1 + base.axes().len() + m);
    axes.push(Alphabet::new("Q", nq));
    axes.extend(base.axes().iter().cloned());
    for (i, per_q) in cfg.channels().iter().enumerate() {
        axes.push(Alphabet::new(format!("U{}", i + 1), per_q[0].output_size()));
    }
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::DuplicateAxis(a.name.clone()));
        }
    }

    let base_strides = base.strides();
    let base_len = base.probs().len();
    let u_sizes: Vec<usize> = cfg.channels().iter().map(|c| c[0].output_size()).collect();
    let u_len: usize = u_sizes.iter().product();
    let mut probs = vec![0.0f64; nq * base_len * u_len];
    let mut y_vals = vec![0usize; m];
    for q in 0..nq {
        let wq = cfg.q_weights()[q];
        if wq == 0.0 {
            continue;
        }
        for b in 0..base_len {
            let pb = base.probs()[b];
            if pb == 0.0 {
                continue;
            }
            for (i, &ax) in obs_axes.iter().enumerate() {
                y_vals[i] = (b / base_strides[ax]) % base.axes()[ax].size;
            }
            let cell = wq * pb;
            let out_base = (q * base_len + b) * u_len;
            for u in 0..u_len {
                let mut p = cell;
                let mut rem = u;
                for i in (0..m).rev() {
                    let ui = rem % u_sizes[i];
                    rem /= u_sizes[i];
                    p *= cfg.channels()[i][q].rows()[y_vals[i]][ui];
                }
                probs[out_base + u] = p;
            }
        }
    }
    JointPmf::new(axes, probs)
}
