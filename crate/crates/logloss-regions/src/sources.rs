//! Canonical source constructions and seeded random instances.

use crate::ceo::CeoInstance;
use crate::info::{Alphabet, JointPmf};
use crate::{Error, Result};
use rand::Rng;

/// Doubly symmetric binary source: `Y1` is uniform and `Y2` is `Y1` passed
/// through a binary symmetric channel with crossover `alpha`.
pub fn dsbs(alpha: f64) -> Result<JointPmf> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::CouplingParam { t: alpha });
    }
    JointPmf::new(
        vec![Alphabet::new("Y1", 2), Alphabet::new("Y2", 2)],
        vec![(1.0 - alpha) / 2.0, alpha / 2.0, alpha / 2.0, (1.0 - alpha) / 2.0],
    )
}

/// Symmetric binary CEO instance: a uniform bit `X` observed through two
/// independent binary symmetric channels with crossover `alpha`.
pub fn bsc_ceo(alpha: f64) -> Result<CeoInstance> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::CouplingParam { t: alpha });
    }
    let mut probs = Vec::with_capacity(8);
    for x in 0..2usize {
        for y1 in 0..2usize {
            for y2 in 0..2usize {
                let f1 = if y1 == x { 1.0 - alpha } else { alpha };
                let f2 = if y2 == x { 1.0 - alpha } else { alpha };
                probs.push(0.5 * f1 * f2);
            }
        }
    }
    let joint = JointPmf::new(
        vec![Alphabet::new("X", 2), Alphabet::new("Y1", 2), Alphabet::new("Y2", 2)],
        probs,
    )?;
    CeoInstance::new(joint)
}

/// Independent pair of uniform sources on `n` symbols each.
pub fn uniform_pair(n: usize) -> Result<JointPmf> {
    if n == 0 {
        return Err(Error::ShapeMismatch { expected: 1, got: 0 });
    }
    let p = 1.0 / (n * n) as f64;
    JointPmf::new(
        vec![Alphabet::new("Y1", n), Alphabet::new("Y2", n)],
        vec![p; n * n],
    )
}

/// A random joint pmf over the named axes, sampled uniformly from the
/// simplex (Dirichlet with unit concentration). Deterministic given the rng.
pub fn random_joint<R: Rng>(rng: &mut R, axes: &[(&str, usize)]) -> Result<JointPmf> {
    let len: usize = axes.iter().map(|&(_, s)| s).product();
    let mut probs: Vec<f64> = (0..len)
        .map(|_| -f64::ln(1.0 - rng.gen::<f64>()))
        .collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    let axes = axes.iter().map(|&(n, s)| Alphabet::new(n, s)).collect();
    JointPmf::new(axes, probs)
}

/// A random CEO instance with the given source and observation alphabet
/// sizes. Observations are conditionally independent given `X` by
/// construction: each is `X` passed through its own random channel.
pub fn random_ceo_instance<R: Rng>(
    rng: &mut R,
    x_size: usize,
    y_sizes: &[usize],
) -> Result<CeoInstance> {
    let px = random_pmf(rng, x_size);
    let channels: Vec<Vec<Vec<f64>>> = y_sizes
        .iter()
        .map(|&ny| (0..x_size).map(|_| random_pmf(rng, ny)).collect())
        .collect();
    let y_len: usize = y_sizes.iter().product();
    let mut probs = vec![0.0f64; x_size * y_len];
    for x in 0..x_size {
        for y_flat in 0..y_len {
            let mut p = px[x];
            let mut rem = y_flat;
            for i in (0..y_sizes.len()).rev() {
                let yi = rem % y_sizes[i];
                rem /= y_sizes[i];
                p *= channels[i][x][yi];
            }
            probs[x * y_len + y_flat] = p;
        }
    }
    let mut axes = vec![Alphabet::new("X", x_size)];
    for i in 0..y_sizes.len() {
        axes.push(Alphabet::new(format!("Y{}", i + 1), y_sizes[i]));
    }
    CeoInstance::new(JointPmf::new(axes, probs)?)
}

fn random_pmf<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dsbs_marginals_are_uniform() {
        let j = dsbs(0.3).unwrap();
        assert_eq!(j.marginal(&["Y1"]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(j.marginal(&["Y2"]).unwrap().probs(), &[0.5, 0.5]);
        assert!(dsbs(1.5).is_err());
    }

    #[test]
    fn bsc_ceo_observations_are_conditionally_independent() {
        let inst = bsc_ceo(0.1).unwrap();
        let mi = inst
            .joint()
            .mutual_information(&["Y1"], &["Y2"], &["X"])
            .unwrap();
        assert!(mi.abs() <= 1e-12, "I(Y1;Y2|X) = {mi}");
    }

    #[test]
    fn bsc_ceo_pair_marginal_is_a_dsbs() {
        // Cascading two crossover-0.1 channels gives crossover 0.18.
        let inst = bsc_ceo(0.1).unwrap();
        let pair = inst.joint().marginal(&["Y1", "Y2"]).unwrap();
        let expect = dsbs(2.0 * 0.1 * 0.9).unwrap();
        for (a, b) in pair.probs().iter().zip(expect.probs()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn uniform_pair_has_independent_axes() {
        let j = uniform_pair(3).unwrap();
        let mi = j.mutual_information(&["Y1"], &["Y2"], &[]).unwrap();
        assert!(mi.abs() <= 1e-12);
        assert!((j.entropy() - 2.0 * 3.0f64.log2()).abs() <= 1e-12);
    }

    #[test]
    fn random_generation_is_seed_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let ja = random_joint(&mut a, &[("Y1", 3), ("Y2", 2)]).unwrap();
        let jb = random_joint(&mut b, &[("Y1", 3), ("Y2", 2)]).unwrap();
        assert_eq!(ja.probs(), jb.probs());
        let ia = random_ceo_instance(&mut a, 2, &[2, 3]).unwrap();
        let ib = random_ceo_instance(&mut b, 2, &[2, 3]).unwrap();
        assert_eq!(ia.joint().probs(), ib.joint().probs());
        let mi = ia
            .joint()
            .mutual_information(&["Y1"], &["Y2"], &["X"])
            .unwrap();
        assert!(mi.abs() <= 1e-9, "random instance must stay a CEO model: {mi}");
    }
}
