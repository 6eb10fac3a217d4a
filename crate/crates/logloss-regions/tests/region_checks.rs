//! Region-level consistency checks: the swept inner descriptions against
//! their closed-form or outer counterparts.

use logloss_regions::ceo::{evaluate_ceo_point, sw_minus_d_membership, sweep_configs, CeoInstance};
use logloss_regions::hull::ConvexCloud;
use logloss_regions::info::{extend_with_aux, AuxConfig, Channel, JointPmf};
use logloss_regions::mtsc::{mtsc_sandwich, tuning_coupling_check, tuning_harness};
use logloss_regions::search::SweepCache;
use logloss_regions::sources;
use logloss_regions::{Alphabet, SearchGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_channel<R: Rng>(rng: &mut R, n_in: usize, n_out: usize) -> Channel {
    let rows: Vec<Vec<f64>> = (0..n_in)
        .map(|_| {
            let mut v: Vec<f64> = (0..n_out).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        })
        .collect();
    Channel::new(rows).unwrap()
}

/// Membership of a complete-observation query in the swept region, with the
/// band probes used to classify disagreements near the boundary.
struct SweptRegion {
    cloud: ConvexCloud,
}

impl SweptRegion {
    fn build(pair: &JointPmf, k: usize) -> Self {
        let inst = CeoInstance::from_pair(pair).unwrap();
        let grid = SearchGrid::new(k, 10_000_000).unwrap();
        let stats = sweep_configs(&inst, &grid, &SweepCache::disabled()).unwrap();
        let pts: Vec<Vec<f64>> = stats
            .iter()
            .flat_map(|s| {
                [
                    vec![s.r1_cond, s.r2_alone, s.distortion],
                    vec![s.r1_alone, s.r2_cond, s.distortion],
                ]
            })
            .collect();
        SweptRegion { cloud: ConvexCloud::new(pts).unwrap() }
    }

    fn contains(&self, r1: f64, r2: f64, d: f64) -> bool {
        match self.cloud.min_last_coord(&[r1, r2]).unwrap() {
            Some(min_d) => d + 1e-9 >= min_d,
            None => false,
        }
    }
}

#[test]
fn swept_region_matches_the_closed_form_on_random_binary_joints() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let step = 0.1;
    let band = 0.02;
    for joint_idx in 0..6 {
        let pair = sources::random_joint(&mut rng, &[("Y1", 2), ("Y2", 2)]).unwrap();
        let swept = SweptRegion::build(&pair, 4);
        let h12 = pair.entropy();
        let mut robust = 0usize;
        let mut total = 0usize;
        let lattice = |max: f64| -> Vec<f64> {
            (0..).map(|i| i as f64 * step).take_while(|&v| v <= max + step).collect()
        };
        for &r1 in &lattice(1.0) {
            for &r2 in &lattice(1.0) {
                for &d in &lattice(h12) {
                    total += 1;
                    let inner = swept.contains(r1, r2, d);
                    let closed = sw_minus_d_membership(&pair, r1, r2, d, 0.0).unwrap();
                    if inner == closed {
                        continue;
                    }
                    // A flip is benign when the failing side passes after
                    // relaxing by the band, or the passing side fails after
                    // tightening by it.
                    let benign = if closed {
                        swept.contains(r1 + band, r2 + band, d + band)
                            || !sw_minus_d_membership(
                                &pair,
                                (r1 - band).max(0.0),
                                (r2 - band).max(0.0),
                                (d - band).max(0.0),
                                0.0,
                            )
                            .unwrap()
                    } else {
                        sw_minus_d_membership(&pair, r1 + band, r2 + band, d + band, 0.0).unwrap()
                            || !swept.contains(r1 - band, r2 - band, d - band)
                    };
                    if !benign {
                        robust += 1;
                    }
                }
            }
        }
        assert!(total > 500, "joint {joint_idx}: lattice unexpectedly small");
        assert_eq!(robust, 0, "joint {joint_idx}: {robust} robust disagreements");
    }
}

#[test]
fn corner_points_satisfy_the_hidden_source_outer_description() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..30 {
        let inst = if trial % 2 == 0 {
            sources::bsc_ceo(0.05 + 0.4 * rng.gen::<f64>()).unwrap()
        } else {
            sources::random_ceo_instance(&mut rng, 2, &[2, 2]).unwrap()
        };
        let base = AuxConfig::single(vec![
            random_channel(&mut rng, 2, 2),
            random_channel(&mut rng, 2, 2),
        ]);
        let cfg = if trial % 3 == 0 {
            let other = AuxConfig::single(vec![
                random_channel(&mut rng, 2, 2),
                random_channel(&mut rng, 2, 2),
            ]);
            AuxConfig::mix(&base, &other, rng.gen_range(0.2..0.8)).unwrap()
        } else {
            base
        };
        let point = evaluate_ceo_point(&inst, &cfg).unwrap();
        let ext = extend_with_aux(inst.joint(), &cfg, &["Y1", "Y2"]).unwrap();
        let i1x = ext.mutual_information(&["Y1"], &["U1"], &["X", "Q"]).unwrap();
        let i2x = ext.mutual_information(&["Y2"], &["U2"], &["X", "Q"]).unwrap();
        let hx_u1 = ext.conditional_entropy(&["X"], &["U1", "Q"]).unwrap();
        let hx_u2 = ext.conditional_entropy(&["X"], &["U2", "Q"]).unwrap();
        let hx = inst.source_entropy();
        let d = point.distortion;
        let r2_alone = ext.mutual_information(&["Y2"], &["U2"], &["Q"]).unwrap();
        let r1_alone = ext.mutual_information(&["Y1"], &["U1"], &["Q"]).unwrap();

        for (r1, r2) in [
            (point.rates_cond[0], r2_alone),
            (r1_alone, point.rates_cond[1]),
        ] {
            assert!(r1 + d >= i1x + hx_u2 - 1e-9, "trial {trial}: first rate bound");
            assert!(r2 + d >= i2x + hx_u1 - 1e-9, "trial {trial}: second rate bound");
            assert!(r1 + r2 + d >= i1x + i2x + hx - 1e-9, "trial {trial}: sum bound");
        }
    }
}

#[test]
fn coupling_residual_vanishes_across_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let shapes = [(2usize, 2usize), (2, 3), (3, 2), (3, 3)];
    for trial in 0..30 {
        let (n1, n2) = shapes[trial % shapes.len()];
        let pair = sources::random_joint(&mut rng, &[("Y1", n1), ("Y2", n2)]).unwrap();
        let u1 = rng.gen_range(2..=n1);
        let u2 = rng.gen_range(2..=n2);
        let cfg = AuxConfig::single(vec![
            random_channel(&mut rng, n1, u1),
            random_channel(&mut rng, n2, u2),
        ]);
        let t = rng.gen::<f64>();
        let residual = tuning_coupling_check(&pair, &cfg, t).unwrap();
        assert!(
            residual.abs() < 1e-9,
            "trial {trial} shape ({n1}, {n2}) t {t}: residual {residual}"
        );
    }
}

#[test]
fn tuning_harness_certificates_hold_on_varied_sources() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let grid = SearchGrid::new(2, 10_000_000).unwrap();
    let cache = SweepCache::disabled();
    for trial in 0..8 {
        let pair = if trial % 2 == 0 {
            sources::dsbs(0.05 + 0.4 * rng.gen::<f64>()).unwrap()
        } else {
            sources::random_joint(&mut rng, &[("Y1", 2), ("Y2", 2)]).unwrap()
        };
        let r1 = rng.gen_range(0.0..1.2);
        let r2 = rng.gen_range(0.0..1.2);
        let check = tuning_harness(&pair, &grid, &cache, r1, r2, rng.gen()).unwrap();
        let c = &check.certificate;
        assert!(c.g1 <= check.d1_target + 1e-6, "trial {trial}: g1 {}", c.g1);
        assert!(c.g2 <= check.d2_target + 1e-6, "trial {trial}: g2 {}", c.g2);
        let d1_mix = c.theta * c.left.0 + (1.0 - c.theta) * c.right.0;
        let d2_mix = c.theta * c.left.1 + (1.0 - c.theta) * c.right.1;
        assert!((d1_mix - c.g1).abs() <= 1e-12 && (d2_mix - c.g2).abs() <= 1e-12);
    }
}

#[test]
fn sandwich_holds_on_symmetric_and_asymmetric_sources() {
    let cache = SweepCache::disabled();

    let pair = sources::dsbs(0.1).unwrap();
    let grid = SearchGrid::new(3, 10_000_000).unwrap();
    let report = mtsc_sandwich(&pair, &grid, &cache, 0.1, 0.02).unwrap();
    assert_eq!(report.robust_disagreements, 0, "dsbs: {report:?}");
    assert!(report.max_min_d2_gap <= 1e-6, "dsbs gap {}", report.max_min_d2_gap);

    let asym = JointPmf::new(
        vec![Alphabet::new("Y1", 2), Alphabet::new("Y2", 3)],
        vec![0.25, 0.1, 0.05, 0.05, 0.15, 0.4],
    )
    .unwrap();
    let grid = SearchGrid::new(2, 10_000_000).unwrap();
    let report = mtsc_sandwich(&asym, &grid, &cache, 0.2, 0.02).unwrap();
    assert_eq!(report.robust_disagreements, 0, "asymmetric: {report:?}");
    assert!(report.max_min_d2_gap <= 1e-6, "asymmetric gap {}", report.max_min_d2_gap);
}
