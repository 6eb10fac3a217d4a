//! Randomized invariants over the information-measure core, the sweep
//! statistics, and the polytope machinery.

use logloss_regions::ceo::{sweep_configs, CeoInstance};
use logloss_regions::distortion::DistortionMatrix;
use logloss_regions::gambling::maximal_correlation;
use logloss_regions::hull::{simplex_min, ConvexCloud};
use logloss_regions::info::{extend_with_aux, kl_divergence, AuxConfig, Channel, JointPmf};
use logloss_regions::mtsc::{mtsc_membership, MtscPoint};
use logloss_regions::search::{envelope_value, lower_convex_envelope, SweepCache};
use logloss_regions::sources;
use logloss_regions::{Alphabet, SearchGrid};
use proptest::prelude::*;

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1.0f64, len).prop_map(normalize)
}

fn channel(n_in: usize, n_out: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(pmf(n_out), n_in).prop_map(|rows| Channel::new(rows).unwrap())
}

fn binom(n: u64, k: u64) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_identities_hold(p in pmf(12)) {
        let joint = JointPmf::new(
            vec![Alphabet::new("A", 3), Alphabet::new("B", 4)],
            p,
        ).unwrap();
        let h_ab = joint.entropy();
        let h_a = joint.marginal_entropy(&["A"]).unwrap();
        let h_b = joint.marginal_entropy(&["B"]).unwrap();
        let h_b_given_a = joint.conditional_entropy(&["B"], &["A"]).unwrap();
        prop_assert!((h_ab - (h_a + h_b_given_a)).abs() <= 1e-9);
        prop_assert!(h_b_given_a <= h_b + 1e-12);
        let i_ab = joint.mutual_information(&["A"], &["B"], &[]).unwrap();
        let i_ba = joint.mutual_information(&["B"], &["A"], &[]).unwrap();
        prop_assert!((i_ab - i_ba).abs() <= 1e-12);
        prop_assert!(i_ab >= -1e-12);
    }

    #[test]
    fn kl_divergence_is_nonnegative_and_zero_on_self(p in pmf(6), q in pmf(6)) {
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
    }

    #[test]
    fn envelope_is_convex_nonincreasing_and_supporting(
        pts in prop::collection::vec((0.0..3.0f64, 0.0..3.0f64), 3..40),
    ) {
        let env = lower_convex_envelope(&pts);
        prop_assert!(!env.is_empty());
        for w in env.windows(2) {
            prop_assert!(w[1].0 > w[0].0);
            prop_assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        for w in env.windows(3) {
            let s01 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s12 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            prop_assert!(s12 >= s01 - 1e-9);
        }
        for &(x, y) in &pts {
            prop_assert!(y + 1e-9 >= envelope_value(&env, x));
        }
        let last = env[env.len() - 1];
        prop_assert_eq!(envelope_value(&env, last.0 + 1.0), last.1);
        prop_assert_eq!(envelope_value(&env, env[0].0 - 0.5), f64::INFINITY);
    }

    #[test]
    fn hamming_lift_identity_is_exact(n in 2usize..=4, alpha in 0.1..3.0f64) {
        let m = DistortionMatrix::hamming(n, alpha).unwrap();
        let expected_beta = (1.0 + (n as f64 - 1.0) * (-alpha).exp2()).log2();
        for col in 0..n {
            prop_assert!((m.beta(col) - expected_beta).abs() <= 1e-12);
            let lifted = m.lift(col).unwrap();
            let total: f64 = lifted.probs().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            // The closed form must agree with the log loss actually incurred
            // by the lifted reproduction.
            for y in 0..n {
                let direct = -lifted.probs()[y].log2();
                prop_assert!((m.lifted_log_loss(y, col) - direct).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sw_membership_is_monotone(
        p in pmf(4),
        r1 in 0.0..1.2f64,
        r2 in 0.0..1.2f64,
        d in 0.0..2.0f64,
        bump in (0.0..0.5f64, 0.0..0.5f64, 0.0..0.5f64),
    ) {
        let pair = JointPmf::new(
            vec![Alphabet::new("Y1", 2), Alphabet::new("Y2", 2)],
            p,
        ).unwrap();
        let inside = logloss_regions::ceo::sw_minus_d_membership(&pair, r1, r2, d, 0.0).unwrap();
        if inside {
            let bigger = logloss_regions::ceo::sw_minus_d_membership(
                &pair, r1 + bump.0, r2 + bump.1, d + bump.2, 0.0,
            ).unwrap();
            prop_assert!(bigger);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn extension_preserves_the_base_marginal(
        p in pmf(6),
        a1 in channel(2, 2),
        a2 in channel(3, 2),
        b1 in channel(2, 2),
        b2 in channel(3, 2),
        lambda in 0.1..0.9f64,
        use_mix in any::<bool>(),
    ) {
        let pair = JointPmf::new(
            vec![Alphabet::new("Y1", 2), Alphabet::new("Y2", 3)],
            p,
        ).unwrap();
        let first = AuxConfig::single(vec![a1, a2]);
        let cfg = if use_mix {
            AuxConfig::mix(&first, &AuxConfig::single(vec![b1, b2]), lambda).unwrap()
        } else {
            first
        };
        let ext = extend_with_aux(&pair, &cfg, &["Y1", "Y2"]).unwrap();
        let total: f64 = ext.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        let back = ext.marginal(&["Y1", "Y2"]).unwrap();
        for (got, want) in back.probs().iter().zip(pair.probs()) {
            prop_assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn grid_rows_are_stochastic_and_counted(k in 2usize..=6, width in 2usize..=4) {
        let grid = SearchGrid::new(k, 10_000_000).unwrap();
        let rows = grid.rows(width);
        prop_assert_eq!(
            rows.len() as u128,
            binom((k + width - 1) as u64, (width - 1) as u64)
        );
        for row in &rows {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
        prop_assert_eq!(
            grid.config_count(&[width, width]),
            (rows.len() as u128).pow(width as u32).pow(2)
        );
    }

    #[test]
    fn correlation_matches_the_doubly_symmetric_closed_form(
        alpha in 0.02..0.48f64,
        p in pmf(4),
    ) {
        let rho = maximal_correlation(&sources::dsbs(alpha).unwrap()).unwrap();
        prop_assert!((rho - (1.0 - 2.0 * alpha).abs()).abs() <= 1e-9);
        let pair = JointPmf::new(
            vec![Alphabet::new("Y1", 2), Alphabet::new("Y2", 2)],
            p,
        ).unwrap();
        let rho = maximal_correlation(&pair).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&rho));
    }

    #[test]
    fn pruning_preserves_the_lp_value(
        pts in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64), 4..30),
        caps in (0.0..2.5f64, 0.0..2.5f64),
    ) {
        let full: Vec<Vec<f64>> = pts.iter().map(|&(a, b, c)| vec![a, b, c]).collect();
        let cloud = ConvexCloud::new(full).unwrap();
        let via_cloud = cloud.min_last_coord(&[caps.0, caps.1]).unwrap();
        let rates: Vec<Vec<f64>> = pts.iter().map(|&(a, b, _)| vec![a, b]).collect();
        let obj: Vec<f64> = pts.iter().map(|&(_, _, c)| c).collect();
        let direct = simplex_min(&rates, &[caps.0, caps.1], &obj);
        match (via_cloud, direct) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9),
            (None, None) => {}
            (x, y) => return Err(TestCaseError::fail(format!("{x:?} vs {y:?}"))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sweep_statistics_respect_the_rate_order(p in pmf(4)) {
        let pair = JointPmf::new(
            vec![Alphabet::new("Y1", 2), Alphabet::new("Y2", 2)],
            p,
        ).unwrap();
        let inst = CeoInstance::from_pair(&pair).unwrap();
        let grid = SearchGrid::new(2, 10_000_000).unwrap();
        let stats = sweep_configs(&inst, &grid, &SweepCache::disabled()).unwrap();
        let floor = inst.irreducible_distortion();
        let hx = inst.source_entropy();
        for s in &stats {
            prop_assert!(s.r1_cond <= s.r1_alone + 1e-9);
            prop_assert!(s.r2_cond <= s.r2_alone + 1e-9);
            prop_assert!(s.r1_cond + s.r2_cond <= s.sum_rate + 1e-9);
            prop_assert!(s.sum_rate <= s.r1_alone + s.r2_alone + 1e-9);
            prop_assert!(s.distortion >= floor - 1e-9);
            prop_assert!(s.distortion <= hx + 1e-12);
            prop_assert!(s.residual_mi >= -1e-12);
            // Complete observation makes the source the observation pair, so
            // its posterior entropy splits into the per-component ones.
            let split = s.d1 + s.d2 - s.residual_mi;
            prop_assert!((s.distortion - split).abs() <= 1e-9);
        }
    }

    #[test]
    fn min_d2_is_monotone_in_the_caps(
        alpha in 0.05..0.45f64,
        r1 in 0.0..1.0f64,
        r2 in 0.0..1.0f64,
        d1 in 0.0..1.0f64,
        bump in (0.0..0.4f64, 0.0..0.4f64, 0.0..0.4f64),
    ) {
        let pair = sources::dsbs(alpha).unwrap();
        let grid = SearchGrid::new(2, 10_000_000).unwrap();
        let cache = SweepCache::disabled();
        let tight = mtsc_membership(
            &pair,
            &MtscPoint::new(r1, r2, d1, 0.0).unwrap(),
            &grid,
            &cache,
        ).unwrap();
        let loose = mtsc_membership(
            &pair,
            &MtscPoint::new(r1 + bump.0, r2 + bump.1, d1 + bump.2, 0.0).unwrap(),
            &grid,
            &cache,
        ).unwrap();
        if let Some(t) = tight.min_d2 {
            let l = loose.min_d2;
            prop_assert!(l.is_some());
            prop_assert!(l.unwrap() <= t + 1e-9);
        }
    }
}
