//! One runner per subcommand, each returning the fully rendered report.

use logloss_regions::ceo::{self, CeoInstance};
use logloss_regions::distortion::{gap_ceiling, hamming_gap, saddle_evaluation};
use logloss_regions::gambling::{self, RaceSpec};
use logloss_regions::info::extend_with_aux;
use logloss_regions::mtsc::{self, Corner, MtscPoint};
use logloss_regions::polytope::SetFunction;
use logloss_regions::search::{envelope_value, SweepCache};
use logloss_regions::sources::random_ceo_instance;
use logloss_regions::{AuxConfig, Channel, JointPmf, SearchGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::{CliError, Format};

/// Shortest round-trip decimal form, reused everywhere so CSV and JSON cells
/// are byte-stable.
fn num(v: f64) -> String {
    format!("{v}")
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn pretty(value: serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(&value).expect("reports are plain trees");
    text.push('\n');
    text
}

fn positive(value: f64, what: &str) -> Result<(), CliError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("{what} must be positive, got {value}")))
    }
}

pub fn ceo_curve(
    inst: &CeoInstance,
    grid: &SearchGrid,
    cache: &SweepCache,
    step: f64,
    markov_n: u64,
    markov_zeta: f64,
    format: Format,
) -> Result<String, CliError> {
    positive(step, "--step")?;
    positive(markov_zeta, "--markov-zeta")?;
    let curve = ceo::ceo_curve(inst, grid, cache).map_err(CliError::run)?;
    let irr = inst.irreducible_distortion();
    let r_last = curve.last().expect("the idle configuration is always swept").0;
    let count = (r_last.max(1.0) / step).ceil() as usize + 1;
    let mut rows = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let r = i as f64 * step;
        let d = envelope_value(&curve, r);
        if !d.is_finite() {
            continue;
        }
        let eps = ceo::epsilon_star(&curve, irr, r);
        let bound = ceo::markov_peak_bound(eps, markov_n, markov_zeta).map_err(CliError::run)?;
        rows.push([r, d, eps, bound]);
    }
    match format {
        Format::Csv => Ok(csv(
            &["rate_bits", "distortion_bits", "epsilon_star_bits", "markov_list_bound_count"],
            &rows.iter().map(|r| r.iter().copied().map(num).collect()).collect::<Vec<_>>(),
        )),
        Format::Json => Ok(pretty(json!({
            "irreducible_distortion_bits": irr,
            "envelope": curve.iter().map(|&(r, d)| json!([r, d])).collect::<Vec<_>>(),
            "rows": rows.iter().map(|r| json!({
                "rate_bits": r[0],
                "distortion_bits": r[1],
                "epsilon_star_bits": r[2],
                "markov_list_bound_count": r[3],
            })).collect::<Vec<_>>(),
        }))),
    }
}

fn corner_name(c: Corner) -> &'static str {
    match c {
        Corner::FirstConditioned => "first_conditioned",
        Corner::SecondConditioned => "second_conditioned",
    }
}

pub fn mtsc_check(
    pair: &JointPmf,
    point: &str,
    grid: &SearchGrid,
    cache: &SweepCache,
    format: Format,
) -> Result<String, CliError> {
    let v = crate::source::parse_floats(point, 4, "--point")?;
    let query = MtscPoint::new(v[0], v[1], v[2], v[3]).map_err(CliError::input)?;
    let m = mtsc::mtsc_membership(pair, &query, grid, cache).map_err(CliError::run)?;
    match format {
        Format::Json => Ok(pretty(json!({
            "point": {
                "r1_bits": query.r1,
                "r2_bits": query.r2,
                "d1_bits": query.d1,
                "d2_bits": query.d2,
            },
            "inside": m.inside,
            "min_d2_bits": m.min_d2,
            "witness": m.witness.iter().map(|c| json!({
                "config": c.config,
                "corner": corner_name(c.corner),
                "weight": c.weight,
            })).collect::<Vec<_>>(),
        }))),
        Format::Csv => {
            let head = ["inside", "min_d2_bits", "witness_config", "witness_corner", "witness_weight"];
            let d2 = m.min_d2.map(num).unwrap_or_default();
            let rows: Vec<Vec<String>> = if m.witness.is_empty() {
                vec![vec![m.inside.to_string(), d2, String::new(), String::new(), String::new()]]
            } else {
                m.witness
                    .iter()
                    .map(|c| {
                        vec![
                            m.inside.to_string(),
                            d2.clone(),
                            c.config.to_string(),
                            corner_name(c.corner).to_string(),
                            num(c.weight),
                        ]
                    })
                    .collect()
            };
            Ok(csv(&head, &rows))
        }
    }
}

pub fn mtsc_sandwich(
    pair: &JointPmf,
    grid: &SearchGrid,
    cache: &SweepCache,
    step: f64,
    band: f64,
    format: Format,
) -> Result<String, CliError> {
    positive(step, "--step")?;
    if band < 0.0 {
        return Err(CliError::Input(format!("--band must be nonnegative, got {band}")));
    }
    let report = mtsc::mtsc_sandwich(pair, grid, cache, step, band).map_err(CliError::run)?;
    match format {
        Format::Json => Ok(pretty(json!({
            "lattice_points": report.lattice_points,
            "disagreements": report.disagreements,
            "robust_disagreements": report.robust_disagreements,
            "max_min_d2_gap_bits": report.max_min_d2_gap,
            "worst": report.worst.map(|w| json!({
                "r1_bits": w[0], "r2_bits": w[1], "d1_bits": w[2], "d2_bits": w[3],
            })),
        }))),
        Format::Csv => Ok(csv(
            &["lattice_points", "disagreements", "robust_disagreements", "max_min_d2_gap_bits"],
            &[vec![
                report.lattice_points.to_string(),
                report.disagreements.to_string(),
                report.robust_disagreements.to_string(),
                num(report.max_min_d2_gap),
            ]],
        )),
    }
}

pub fn daily_double(
    pair: &JointPmf,
    spec: &RaceSpec,
    rates: &str,
    grid: &SearchGrid,
    cache: &SweepCache,
    format: Format,
) -> Result<String, CliError> {
    let v = crate::source::parse_floats(rates, 2, "--rates")?;
    let (r1, r2) = (v[0], v[1]);
    if r1 < 0.0 || r2 < 0.0 {
        return Err(CliError::Input(format!("rates must be nonnegative, got ({r1}, {r2})")));
    }
    let dd = gambling::daily_double(pair, spec, r1, r2, grid, cache).map_err(CliError::run)?;
    let rho = gambling::maximal_correlation(pair).map_err(CliError::run)?;
    let mi = pair.mutual_information(&["Y1"], &["Y2"], &[]).map_err(CliError::run)?;
    let bound = (mi - rho * rho * (r1 + r2)).max(0.0);
    match format {
        Format::Json => {
            let sizes = [
                pair.axis_size("Y1").map_err(CliError::run)?,
                pair.axis_size("Y2").map_err(CliError::run)?,
            ];
            let configs = grid.enumerate_configs(&sizes).map_err(CliError::run)?;
            let mut witness_bets = Vec::with_capacity(dd.witness.len());
            for &(idx, w) in &dd.witness {
                let cfg = AuxConfig::single(configs[idx].clone());
                let ext = extend_with_aux(pair, &cfg, &["Y1", "Y2"]).map_err(CliError::run)?;
                let posts = ext.posteriors(&["Y1", "Y2"], &["U1", "U2"]).map_err(CliError::run)?;
                witness_bets.push(json!({
                    "config": idx,
                    "weight": w,
                    "bets": posts.iter().map(|(p, bet)| json!({
                        "p": p,
                        "bet": bet,
                    })).collect::<Vec<_>>(),
                }));
            }
            Ok(pretty(json!({
                "W_jw": dd.jw,
                "W_pw": dd.pw,
                "Delta": dd.delta,
                "rho_m": rho,
                "bound": bound,
                "witness_bets": witness_bets,
                "e_log_odds_bits": dd.e_log_odds,
                "sum_rate_slack_bits": dd.sum_rate_slack,
            })))
        }
        Format::Csv => Ok(csv(
            &[
                "w_jw_bits",
                "w_pw_bits",
                "delta_bits",
                "rho_m",
                "bound_bits",
                "e_log_odds_bits",
                "sum_rate_slack_bits",
            ],
            &[vec![
                num(dd.jw),
                num(dd.pw),
                num(dd.delta),
                num(rho),
                num(bound),
                num(dd.e_log_odds),
                num(dd.sum_rate_slack),
            ]],
        )),
    }
}

/// One audited sample: a random binary instance with channels drawn from the
/// mesh so the audit covers exactly the configurations sweeps can visit.
fn gap_sample(seed: u64, index: u64, rows: &[Vec<f64>]) -> (CeoInstance, AuxConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let inst = random_ceo_instance(&mut rng, 2, &[2, 2]).expect("binary shapes are valid");
    let draw = |rng: &mut ChaCha8Rng| -> AuxConfig {
        AuxConfig::single(
            (0..2)
                .map(|_| {
                    let pick = |rng: &mut ChaCha8Rng| rows[rng.gen_range(0..rows.len())].clone();
                    Channel::new(vec![pick(rng), pick(rng)]).expect("mesh rows are stochastic")
                })
                .collect(),
        )
    };
    let first = draw(&mut rng);
    let cfg = if rng.gen_bool(0.25) {
        let second = draw(&mut rng);
        AuxConfig::mix(&first, &second, rng.gen_range(0.2..0.8)).expect("matching shapes")
    } else {
        first
    };
    (inst, cfg)
}

pub fn gap_audit(
    grid: &SearchGrid,
    samples: usize,
    seed: u64,
    format: Format,
) -> Result<String, CliError> {
    if samples == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let rows = grid.rows(2);
    let gaps: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let (inst, cfg) = gap_sample(seed, i, &rows);
            hamming_gap(&inst, &cfg).map(|s| s.gap)
        })
        .collect::<Result<_, _>>()
        .map_err(CliError::run)?;
    let (argmax, &worst) = gaps
        .iter()
        .enumerate()
        .fold((0usize, &gaps[0]), |best, cur| if cur.1 > best.1 { cur } else { best });
    let saddle = saddle_evaluation(0.5, 8.0).map_err(CliError::run)?;
    match format {
        Format::Json => {
            let (inst, cfg) = gap_sample(seed, argmax as u64, &rows);
            Ok(pretty(json!({
                "worst_gap": worst,
                "saddle_alpha": saddle.alpha,
                "saddle_value": saddle.value,
                "argmax_config": {
                    "sample": argmax,
                    "joint_probs": inst.joint().probs(),
                    "q_weights": cfg.q_weights(),
                    "channels": cfg.channels().iter().map(|per_q| {
                        per_q.iter().map(|c| c.rows().to_vec()).collect::<Vec<_>>()
                    }).collect::<Vec<_>>(),
                },
                "samples": samples,
                "gap_ceiling_bits": gap_ceiling(),
            })))
        }
        Format::Csv => Ok(csv(
            &["worst_gap_bits", "saddle_alpha", "saddle_value_bits", "gap_ceiling_bits"],
            &[vec![num(worst), num(saddle.alpha), num(saddle.value), num(gap_ceiling())]],
        )),
    }
}

pub fn extreme_points(f: &SetFunction, format: Format) -> Result<String, CliError> {
    let pts = f.extreme_points().map_err(CliError::run)?;
    match format {
        Format::Csv => {
            let mut header = vec!["order".to_string()];
            header.extend((1..=f.m()).map(|i| format!("rate{i}_bits")));
            let head: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = pts
                .iter()
                .map(|p| {
                    let order = p
                        .order
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(">");
                    let mut row = vec![order];
                    row.extend(p.rates.iter().copied().map(num));
                    row
                })
                .collect();
            Ok(csv(&head, &rows))
        }
        Format::Json => Ok(pretty(json!({
            "points": pts.iter().map(|p| json!({
                "order": p.order,
                "rates_bits": p.rates,
            })).collect::<Vec<_>>(),
        }))),
    }
}
