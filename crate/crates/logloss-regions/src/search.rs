//! Grid search over auxiliary channels and envelope post-processing.
//!
//! Auxiliary channels are enumerated on a simplex mesh: every row of every
//! test channel is a pmf whose entries are multiples of `1/k`. Timesharing
//! never needs to be enumerated because the achievable regions downstream are
//! convex hulls of per-configuration statistics; mixing over `Q` is exactly
//! convex combination, so the hull and envelope operators supply it.

use crate::info::{Channel, JointPmf};
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::PathBuf;

/// Mesh parameters for auxiliary-channel enumeration.
#[derive(Debug, Clone, Copy)]
pub struct SearchGrid {
    /// Mesh granularity: channel rows take values in `{0, 1/k, .., 1}`.
    pub k: usize,
    /// Hard cap on the number of configurations a single enumeration may
    /// produce; exceeding it is an error rather than a silent truncation.
    pub budget: u64,
    /// Maximum timesharing support used when assembling explicit mixture
    /// witnesses from grid configurations.
    pub q_support: usize,
}

impl SearchGrid {
    pub fn new(k: usize, budget: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::MeshTooCoarse { k });
        }
        Ok(SearchGrid { k, budget, q_support: 2 })
    }

    /// All pmfs of the given width on the mesh, ascending lexicographic in
    /// the underlying integer compositions.
    pub fn rows(&self, width: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let mut parts = vec![0usize; width];
        compositions(self.k, width, &mut parts, 0, &mut out);
        out
    }

    /// All row-stochastic channels from `y_size` inputs to `y_size` outputs
    /// with rows on the mesh. Output letters that receive no mass realize
    /// every smaller auxiliary cardinality, so only square channels are
    /// enumerated.
    pub fn channels(&self, y_size: usize) -> Vec<Channel> {
        let rows = self.rows(y_size);
        let mut out = Vec::new();
        let mut pick = vec![0usize; y_size];
        loop {
            let chosen: Vec<Vec<f64>> = pick.iter().map(|&i| rows[i].clone()).collect();
            out.push(Channel::new(chosen).expect("mesh rows are stochastic"));
            // Odometer over row choices, last index fastest.
            let mut pos = y_size;
            while pos > 0 {
                pos -= 1;
                pick[pos] += 1;
                if pick[pos] < rows.len() {
                    break;
                }
                pick[pos] = 0;
                if pos == 0 {
                    return out;
                }
            }
        }
    }

    /// Number of configurations `enumerate_configs` would produce.
    pub fn config_count(&self, y_sizes: &[usize]) -> u128 {
        y_sizes
            .iter()
            .map(|&y| {
                let per_row = count_compositions(self.k, y);
                per_row.pow(y as u32)
            })
            .product()
    }

    /// Cartesian product of per-encoder channel grids, in row-major order
    /// with the last encoder's channel varying fastest.
    pub fn enumerate_configs(&self, y_sizes: &[usize]) -> Result<Vec<Vec<Channel>>> {
        let total = self.config_count(y_sizes);
        if total > self.budget as u128 {
            return Err(Error::BudgetExceeded { configs: total, budget: self.budget });
        }
        let grids: Vec<Vec<Channel>> = y_sizes.iter().map(|&y| self.channels(y)).collect();
        let mut out = Vec::with_capacity(total as usize);
        let mut pick = vec![0usize; grids.len()];
        loop {
            out.push(
                pick.iter()
                    .enumerate()
                    .map(|(i, &c)| grids[i][c].clone())
                    .collect::<Vec<Channel>>(),
            );
            let mut pos = grids.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                pick[pos] += 1;
                if pick[pos] < grids[pos].len() {
                    break;
                }
                pick[pos] = 0;
            }
        }
    }
}

fn compositions(total: usize, width: usize, parts: &mut [usize], at: usize, out: &mut Vec<Vec<f64>>) {
    if at + 1 == width {
        parts[at] = total;
        let k = parts.iter().sum::<usize>() as f64;
        out.push(parts.iter().map(|&p| p as f64 / k).collect());
        return;
    }
    for v in 0..=total {
        parts[at] = v;
        compositions(total - v, width, parts, at + 1, out);
    }
}

fn count_compositions(k: usize, width: usize) -> u128 {
    // Binomial(k + width - 1, width - 1).
    let mut c: u128 = 1;
    for i in 0..(width - 1) as u128 {
        c = c * (k as u128 + i + 1) / (i + 1);
    }
    c
}

/// Lower convex envelope of a 2-D point set, as its vertex list sorted by
/// abscissa.
///
/// Points sharing an abscissa collapse to the one with the least ordinate
/// first. The envelope is truncated at its global minimum-ordinate vertex:
/// curves here are nonincreasing in rate, so vertices past the minimum are
/// artifacts of the finite sweep, not achievable trade-offs.
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite coordinates")
            .then(a.1.partial_cmp(&b.1).expect("finite coordinates"))
    });
    pts.dedup_by(|next, kept| next.0 == kept.0);

    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let mut min_at = 0usize;
    for (i, v) in hull.iter().enumerate() {
        if v.1 < hull[min_at].1 {
            min_at = i;
        }
    }
    hull.truncate(min_at + 1);
    hull
}

/// Evaluates a lower envelope at abscissa `r`: linear between vertices,
/// constant past the last vertex, infinite before the first.
pub fn envelope_value(envelope: &[(f64, f64)], r: f64) -> f64 {
    if envelope.is_empty() || r < envelope[0].0 {
        return f64::INFINITY;
    }
    let hi = envelope.partition_point(|v| v.0 <= r);
    if hi == envelope.len() {
        return envelope[envelope.len() - 1].1;
    }
    let (x0, y0) = envelope[hi - 1];
    let (x1, y1) = envelope[hi];
    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
}

/// Fingerprint of a joint pmf: axis names, sizes, and the exact bit patterns
/// of every entry.
pub fn pmf_fingerprint(pmf: &JointPmf) -> String {
    let mut h = Sha256::new();
    for ax in pmf.axes() {
        h.update(ax.name.as_bytes());
        h.update([0u8]);
        h.update((ax.size as u64).to_le_bytes());
    }
    for &p in pmf.probs() {
        h.update(p.to_bits().to_le_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// On-disk cache for sweep statistics, stored as CSV with floats printed in
/// shortest round-trip form so reloads are bitwise identical.
#[derive(Debug, Clone)]
pub struct SweepCache {
    dir: Option<PathBuf>,
}

impl SweepCache {
    /// Rooted at `LOGLOSS_CACHE_DIR` when that variable is set, otherwise
    /// disabled.
    pub fn from_env() -> Self {
        SweepCache { dir: std::env::var_os("LOGLOSS_CACHE_DIR").map(PathBuf::from) }
    }

    pub fn disabled() -> Self {
        SweepCache { dir: None }
    }

    pub fn at_dir(dir: impl Into<PathBuf>) -> Self {
        SweepCache { dir: Some(dir.into()) }
    }

    /// Cache key from identifying parts (pmf fingerprint, mesh, sizes).
    pub fn key(parts: &[&str]) -> String {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p.as_bytes());
            h.update([0x0a]);
        }
        hex(&h.finalize())
    }

    /// Loads cached rows for `key`, verifying the header matches. Returns
    /// `Ok(None)` on a miss or when caching is disabled.
    pub fn load(&self, key: &str, header: &[&str]) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(format!("{key}.csv"));
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut lines = text.lines();
        let head = lines.next().unwrap_or("");
        if head != header.join(",") {
            return Err(Error::CacheFormat(format!(
                "header {head:?} does not match expected {:?}",
                header.join(",")
            )));
        }
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(header.len());
            for field in line.split(',') {
                row.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::CacheFormat(format!("bad float {field:?}")))?,
                );
            }
            if row.len() != header.len() {
                return Err(Error::CacheFormat(format!(
                    "row width {} does not match header width {}",
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Some(rows))
    }

    /// Stores rows under `key`, creating the cache directory if needed. The
    /// write goes through a temporary file and a rename so concurrent
    /// readers never observe a partial file.
    pub fn store(&self, key: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        std::fs::create_dir_all(dir)?;
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            let mut first = true;
            for v in row {
                if !first {
                    text.push(',');
                }
                first = false;
                text.push_str(&format!("{v}"));
            }
            text.push('\n');
        }
        let tmp = dir.join(format!("{key}.csv.tmp.{}", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
        }
        std::fs::rename(&tmp, dir.join(format!("{key}.csv")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources;

    #[test]
    fn mesh_row_counts_and_order() {
        let g = SearchGrid::new(2, 1_000_000).unwrap();
        let rows = g.rows(2);
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(SearchGrid::new(4, 1).unwrap().rows(2).len(), 5);
        assert!(SearchGrid::new(1, 1).is_err());
    }

    #[test]
    fn channel_grid_counts() {
        let g2 = SearchGrid::new(2, 1_000_000).unwrap();
        assert_eq!(g2.channels(2).len(), 9);
        let g4 = SearchGrid::new(4, 1_000_000).unwrap();
        assert_eq!(g4.channels(2).len(), 25);
        assert_eq!(g2.config_count(&[2, 2]), 81);
        assert_eq!(g2.enumerate_configs(&[2, 2]).unwrap().len(), 81);
    }

    #[test]
    fn enumeration_respects_the_budget() {
        let g = SearchGrid { k: 2, budget: 80, q_support: 2 };
        match g.enumerate_configs(&[2, 2]) {
            Err(Error::BudgetExceeded { configs: 81, budget: 80 }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn envelope_drops_interior_and_dominated_points() {
        let env = lower_convex_envelope(&[(0.0, 1.0), (0.5, 0.6), (0.5, 0.4), (1.0, 0.3)]);
        assert_eq!(env, vec![(0.0, 1.0), (0.5, 0.4), (1.0, 0.3)]);
    }

    #[test]
    fn envelope_truncates_after_its_minimum() {
        let env =
            lower_convex_envelope(&[(0.0, 1.0), (0.5, 0.4), (1.0, 0.3), (1.5, 0.5), (2.0, 0.9)]);
        assert_eq!(env.last(), Some(&(1.0, 0.3)));
        assert_eq!(env.len(), 3);
    }

    #[test]
    fn envelope_evaluation_interpolates_and_saturates() {
        let env = vec![(0.0, 1.0), (0.5, 0.4), (1.0, 0.3)];
        assert_eq!(envelope_value(&env, -0.1), f64::INFINITY);
        assert!((envelope_value(&env, 0.25) - 0.7).abs() <= 1e-12);
        assert!((envelope_value(&env, 0.5) - 0.4).abs() <= 1e-12);
        assert!((envelope_value(&env, 3.0) - 0.3).abs() <= 1e-12);
    }

    #[test]
    fn cache_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SweepCache::at_dir(dir.path());
        let key = SweepCache::key(&["abc", "k=4"]);
        let header = ["rate_bits", "distortion_bits"];
        let rows = vec![
            vec![0.1 + 0.2, std::f64::consts::LN_2],
            vec![1.0 / 3.0, 2.0f64.sqrt()],
        ];
        cache.store(&key, &header, &rows).unwrap();
        let back = cache.load(&key, &header).unwrap().unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().flatten().zip(rows.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits(), "reload must be bit-identical");
        }
        assert!(cache.load(&SweepCache::key(&["other"]), &header).unwrap().is_none());
        assert!(cache.load(&key, &["wrong"]).is_err());
    }

    #[test]
    fn fingerprint_is_sensitive_to_probabilities() {
        let a = sources::dsbs(0.1).unwrap();
        let b = sources::dsbs(0.25).unwrap();
        assert_ne!(pmf_fingerprint(&a), pmf_fingerprint(&b));
        assert_eq!(pmf_fingerprint(&a), pmf_fingerprint(&sources::dsbs(0.1).unwrap()));
    }
}
