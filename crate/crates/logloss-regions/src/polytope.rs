//! Set functions on encoder subsets and the rate polyhedra they generate.
//!
//! For a fixed auxiliary configuration, the rate constraints take the form
//! `R(S) >= f(S)` over subsets `S` of encoders. The driving function here is
//!
//! ```text
//! f(S) = sum_{i in S} I(U_i; Y_i | X, Q) + H(X | U_{S^c}, Q) - D
//! ```
//!
//! whose nonnegative part `f+ = max(f, 0)` is supermodular whenever the
//! observations are conditionally independent given `X`. Supermodularity
//! makes the polyhedron `{R : R(S) >= f+(S)}` a contra-polymatroid: its
//! extreme points are exactly the greedy marginal vectors, one per encoder
//! ordering, and each greedy vertex is dominated by an explicit timesharing
//! point of the achievable region.

use crate::info::JointPmf;
use crate::{Error, Result};

const MAX_ENCODERS: usize = 12;
const MAX_FACTORIAL_ENCODERS: usize = 8;

/// A real-valued function on subsets of `{0, .., m-1}`, stored by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunction {
    m: usize,
    values: Vec<f64>,
}

impl SetFunction {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m > MAX_ENCODERS {
            return Err(Error::TooManyEncoders { m, max: MAX_ENCODERS });
        }
        if values.len() != 1usize << m {
            return Err(Error::ShapeMismatch { expected: 1usize << m, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NegativeDistortion { value: f64::NAN });
        }
        Ok(SetFunction { m, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise nonnegative part.
    pub fn plus(&self) -> SetFunction {
        SetFunction { m: self.m, values: self.values.iter().map(|v| v.max(0.0)).collect() }
    }

    /// Verifies `f(S u T) + f(S n T) >= f(S) + f(T)` for every pair, up to
    /// `tol`. On failure reports the first violating pair as bitmasks.
    pub fn check_supermodular(&self, tol: f64) -> Result<()> {
        let n = self.values.len();
        for s in 0..n {
            for t in (s + 1)..n {
                let lhs = self.values[s | t] + self.values[s & t];
                let rhs = self.values[s] + self.values[t];
                if lhs + tol < rhs {
                    return Err(Error::NotSupermodular { s, t });
                }
            }
        }
        Ok(())
    }

    /// Marginal vector of the ordering: position `j` of `order` receives
    /// `f(first j+1 elements) - f(first j elements)`. Requires `f(empty)=0`
    /// for the polyhedron interpretation; the arithmetic itself does not.
    pub fn greedy_vertex(&self, order: &[usize]) -> Result<Vec<f64>> {
        self.validate_order(order)?;
        let mut rates = vec![0.0; self.m];
        let mut mask = 0usize;
        let mut prev = self.values[0];
        for &i in order {
            mask |= 1 << i;
            rates[i] = self.values[mask] - prev;
            prev = self.values[mask];
        }
        Ok(rates)
    }

    /// Greedy vertices for every ordering, deduplicated within `1e-9`
    /// (first ordering in lexicographic order wins). Limited to `m <= 8`.
    pub fn extreme_points(&self) -> Result<Vec<ExtremePoint>> {
        if self.m > MAX_FACTORIAL_ENCODERS {
            return Err(Error::TooManyEncoders { m: self.m, max: MAX_FACTORIAL_ENCODERS });
        }
        let mut out: Vec<ExtremePoint> = Vec::new();
        let mut order: Vec<usize> = (0..self.m).collect();
        loop {
            let rates = self.greedy_vertex(&order)?;
            let known = out.iter().any(|e| {
                e.rates.iter().zip(&rates).all(|(a, b)| (a - b).abs() <= 1e-9)
            });
            if !known {
                out.push(ExtremePoint { order: order.clone(), rates });
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
        Ok(out)
    }

    fn validate_order(&self, order: &[usize]) -> Result<()> {
        if order.len() != self.m {
            return Err(Error::ShapeMismatch { expected: self.m, got: order.len() });
        }
        let mut seen = vec![false; self.m];
        for &i in order {
            if i >= self.m || seen[i] {
                return Err(Error::ShapeMismatch { expected: self.m, got: i });
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// A greedy vertex together with the ordering that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremePoint {
    pub order: Vec<usize>,
    pub rates: Vec<f64>,
}

/// Lexicographic next permutation in place; false when wrapped around.
fn next_permutation(order: &mut [usize]) -> bool {
    let n = order.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && order[i - 1] >= order[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while order[j] <= order[i - 1] {
        j -= 1;
    }
    order.swap(i - 1, j);
    order[i..].reverse();
    true
}

/// The rate set function of an extended joint at distortion `d`, with its
/// nonnegative part and the distortion floor `H(X | U_all, Q)`.
#[derive(Debug, Clone)]
pub struct CeoSetFunctions {
    pub f: SetFunction,
    pub f_plus: SetFunction,
    pub floor: f64,
}

fn u_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("U{i}")).collect()
}

fn y_name(i: usize) -> String {
    format!("Y{}", i + 1)
}

/// `H(X | U_mask, Q)` over the extended joint, `mask` selecting auxiliaries.
fn h_x_given(ext: &JointPmf, mask: usize, m: usize) -> Result<f64> {
    let us = u_names(m);
    let mut given: Vec<&str> = vec!["Q"];
    for (i, u) in us.iter().enumerate() {
        if mask & (1 << i) != 0 {
            given.push(u);
        }
    }
    ext.conditional_entropy(&["X"], &given)
}

/// Builds `f` and `f+` for an extended joint with axes `Q, X, Y1..Ym,
/// U1..Um` at distortion level `d`. Fails when `d` sits below the floor
/// `H(X | U_all, Q)`, where the rate region at level `d` is empty.
pub fn ceo_set_function(ext: &JointPmf, m: usize, d: f64) -> Result<CeoSetFunctions> {
    if m > MAX_ENCODERS {
        return Err(Error::TooManyEncoders { m, max: MAX_ENCODERS });
    }
    let us = u_names(m);
    let full = (1usize << m) - 1;
    let floor = h_x_given(ext, full, m)?;
    if d < floor - 1e-9 {
        return Err(Error::DistortionBelowFloor { d, floor });
    }
    let mut leak = Vec::with_capacity(m);
    for i in 0..m {
        let y = y_name(i);
        leak.push(ext.mutual_information(&[us[i].as_str()], &[y.as_str()], &["X", "Q"])?);
    }
    let mut values = Vec::with_capacity(1usize << m);
    for mask in 0..=full {
        let mut v = -d + h_x_given(ext, full ^ mask, m)?;
        for (i, l) in leak.iter().enumerate() {
            if mask & (1 << i) != 0 {
                v += l;
            }
        }
        values.push(v);
    }
    let f = SetFunction::new(m, values)?;
    let f_plus = f.plus();
    Ok(CeoSetFunctions { f, f_plus, floor })
}

/// A point of the achievable region dominating one greedy vertex.
#[derive(Debug, Clone)]
pub struct DominatedPoint {
    /// Rates indexed by encoder.
    pub rates: Vec<f64>,
    pub distortion: f64,
    /// Timesharing weight on the phase where the pivot encoder idles.
    pub theta: f64,
    /// Position in the ordering where timesharing happens; `None` when every
    /// greedy rate is zero and all encoders idle.
    pub pivot: Option<usize>,
}

/// Constructs the timesharing point that dominates the greedy vertex of
/// `f+` for the given ordering: componentwise no larger in rate, and with
/// distortion at most `d`.
///
/// Along the ordering the chain values `f(S_1) <= .. <= f(S_m)` are
/// nondecreasing. Encoders before the first positive chain value idle; the
/// pivot encoder at that position runs a fraction `1 - theta` of the time,
/// with `theta = -f(S_{j-1}) / I(Y_j; U_j | U_{suffix}, Q)` in `[0, 1)`;
/// later encoders run their successive-decoding rates in full.
pub fn dominate_extreme_point(ext: &JointPmf, d: f64, order: &[usize]) -> Result<DominatedPoint> {
    let m = order.len();
    let fs = ceo_set_function(ext, m, d)?;
    fs.f.validate_order(order)?;
    let us = u_names(m);

    // Chain values f(S_0), .., f(S_m) along the ordering.
    let mut chain = Vec::with_capacity(m + 1);
    let mut mask = 0usize;
    chain.push(fs.f.value(0));
    for &i in order {
        mask |= 1 << i;
        chain.push(fs.f.value(mask));
    }

    let Some(pos) = (1..=m).find(|&j| chain[j] > 0.0) else {
        return Ok(DominatedPoint {
            rates: vec![0.0; m],
            distortion: h_x_given(ext, 0, m)?,
            theta: 0.0,
            pivot: None,
        });
    };

    // Successive-decoding rate of position j given the active suffix:
    // I(Y_j ; U_j | U_{j+1..m}, Q).
    let suffix_rate = |j: usize| -> Result<f64> {
        let enc = order[j];
        let y = y_name(enc);
        let given: Vec<&str> =
            std::iter::once("Q").chain(order[j + 1..].iter().map(|&i| us[i].as_str())).collect();
        ext.mutual_information(&[us[enc].as_str()], &[y.as_str()], &given)
    };

    let pivot_rate = suffix_rate(pos - 1)?;
    let theta = if pivot_rate <= 1e-12 {
        0.0
    } else {
        (-chain[pos - 1] / pivot_rate).clamp(0.0, 1.0 - f64::EPSILON / 2.0)
    };

    let mut rates = vec![0.0; m];
    rates[order[pos - 1]] = (1.0 - theta) * pivot_rate;
    for j in pos..m {
        rates[order[j]] = suffix_rate(j)?;
    }

    let mask_from = |start: usize| -> usize {
        order[start..].iter().fold(0usize, |acc, &i| acc | (1 << i))
    };
    let with_pivot = h_x_given(ext, mask_from(pos - 1), m)?;
    let without_pivot = h_x_given(ext, mask_from(pos), m)?;
    let distortion = (1.0 - theta) * with_pivot + theta * without_pivot;

    Ok(DominatedPoint { rates, distortion, theta, pivot: Some(pos - 1) })
}
