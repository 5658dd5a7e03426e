//! Synthetic request logs with planted client communities.
//!
//! Each client belongs to one group. A request goes to the client's own
//! group catalog with probability `in_group_prob`, otherwise to a foreign
//! catalog chosen with the hour-of-day multipliers of `category_schedule`.
//! Inside a catalog the video is drawn by Zipf rank.

use std::collections::BTreeMap;
use std::io::{self, Write};

use chrono::{DateTime, Datelike, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::LogRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid workload configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> WorkloadError {
    WorkloadError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub group: usize,
    /// First hour (UTC, 0..24) the multiplier applies to.
    pub start_hour: u32,
    /// Hour at which the multiplier stops applying (exclusive).
    pub end_hour: u32,
    pub multiplier: f64,
    #[serde(default)]
    pub weekend_only: bool,
}

impl ScheduleEntry {
    fn applies(&self, hour: u32, weekend: bool) -> bool {
        (!self.weekend_only || weekend) && self.start_hour <= hour && hour < self.end_hour
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub num_clients: usize,
    pub num_videos: usize,
    pub num_groups: usize,
    pub in_group_prob: f64,
    pub zipf_exponent: f64,
    pub requests_per_client_per_session: [u32; 2],
    pub num_session_windows: usize,
    pub window_spacing: i64,
    pub window_duration: i64,
    pub start_time: i64,
    pub shared_pool: usize,
    pub stationary: bool,
    pub category_schedule: Vec<ScheduleEntry>,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        crate::config::ExperimentConfig::default().workload
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.num_clients == 0 || self.num_groups == 0 {
            return Err(invalid("need at least one client and one group"));
        }
        if self.num_groups > self.num_clients {
            return Err(invalid(format!(
                "{} groups cannot be planted over {} clients",
                self.num_groups, self.num_clients
            )));
        }
        if self.shared_pool >= self.num_videos || self.num_videos - self.shared_pool < self.num_groups {
            return Err(invalid(format!(
                "{} videos with a shared pool of {} leave an empty catalog for some of {} groups",
                self.num_videos, self.shared_pool, self.num_groups
            )));
        }
        if !(0.0..=1.0).contains(&self.in_group_prob) {
            return Err(invalid("in_group_prob must lie in [0, 1]"));
        }
        if !(self.zipf_exponent > 0.0 && self.zipf_exponent.is_finite()) {
            return Err(invalid("zipf_exponent must be positive"));
        }
        let [lo, hi] = self.requests_per_client_per_session;
        if lo == 0 || lo > hi {
            return Err(invalid(
                "requests_per_client_per_session must be a range [lo, hi] with 1 <= lo <= hi",
            ));
        }
        if self.num_session_windows == 0 {
            return Err(invalid("need at least one session window"));
        }
        if self.window_duration <= 0 || self.window_duration > self.window_spacing {
            return Err(invalid(
                "window_duration must be positive and no longer than window_spacing",
            ));
        }
        if self.start_time < 0 {
            return Err(invalid("start_time must not precede the epoch"));
        }
        for e in &self.category_schedule {
            if e.group >= self.num_groups || e.end_hour > 24 || e.start_hour >= e.end_hour {
                return Err(invalid(format!("bad schedule entry {e:?}")));
            }
            if !(e.multiplier >= 0.0 && e.multiplier.is_finite()) {
                return Err(invalid(format!(
                    "schedule multiplier must be non-negative, got {}",
                    e.multiplier
                )));
            }
        }
        Ok(())
    }

    /// Multiplier for `group` at `timestamp`; overlapping entries multiply.
    pub fn category_weight(&self, group: usize, timestamp: i64) -> f64 {
        let Some(dt) = DateTime::from_timestamp(timestamp, 0) else {
            return 1.0;
        };
        let weekend = matches!(dt.weekday(), Weekday::Sat | Weekday::Sun);
        self.category_schedule
            .iter()
            .filter(|e| e.group == group && e.applies(dt.hour(), weekend))
            .map(|e| e.multiplier)
            .product()
    }
}

/// Inverse-CDF sampler over ranks `0..n` with `P(k) ∝ (k + 1)^-s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfTable {
    cdf: Vec<f64>,
}

impl ZipfTable {
    pub fn new(n: usize, exponent: f64) -> Self {
        assert!(n > 0, "Zipf table needs at least one rank");
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=n)
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        ZipfTable { cdf }
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// Maps a uniform draw in `[0, 1)` to a 0-based rank.
    pub fn rank_for(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.rank_for(rng.random::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub client_group: BTreeMap<String, usize>,
    /// Catalog of each group, most popular first.
    pub catalogs: Vec<Vec<String>>,
}

impl GroundTruth {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "client_id,group_id")?;
        for (c, g) in &self.client_group {
            writeln!(w, "{c},{g}")?;
        }
        Ok(())
    }
}

fn id(prefix: char, i: usize, total: usize) -> String {
    let width = total.to_string().len();
    format!("{prefix}{:0width$}", i + 1)
}

// stream tags keep the per-client random sequences independent
const DEMAND_STREAM: u64 = 1;
const TIME_STREAM: u64 = 2;

fn stream(seed: u64, tag: u64, client: usize, window: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) | ((client as u64) << 24) | window as u64);
    rng
}

/// Generates a timestamp-ordered request log and the planted truth behind it.
pub fn generate(cfg: &WorkloadConfig) -> Result<(Vec<LogRecord>, GroundTruth), WorkloadError> {
    cfg.validate()?;

    let videos: Vec<String> = (0..cfg.num_videos).map(|i| id('v', i, cfg.num_videos)).collect();
    let sizes: Vec<u64> = (0..cfg.num_videos)
        .map(|i| 50_000_000 + (i as u64 * 7919 % 97) * 1_000_000)
        .collect();

    // shared pool first, then disjoint slices; earlier groups absorb the remainder
    let own = cfg.num_videos - cfg.shared_pool;
    let (per, extra) = (own / cfg.num_groups, own % cfg.num_groups);
    let mut catalogs: Vec<Vec<usize>> = Vec::with_capacity(cfg.num_groups);
    let mut next = cfg.shared_pool;
    for g in 0..cfg.num_groups {
        let len = per + usize::from(g < extra);
        let mut cat: Vec<usize> = (0..cfg.shared_pool).collect();
        cat.extend(next..next + len);
        next += len;
        catalogs.push(cat);
    }
    let tables: Vec<ZipfTable> = catalogs
        .iter()
        .map(|c| ZipfTable::new(c.len(), cfg.zipf_exponent))
        .collect();

    let clients: Vec<String> = (0..cfg.num_clients).map(|i| id('c', i, cfg.num_clients)).collect();
    let users: Vec<String> = (0..cfg.num_clients).map(|i| id('u', i, cfg.num_clients)).collect();
    let group_of = |c: usize| c % cfg.num_groups;

    let [lo, hi] = cfg.requests_per_client_per_session;
    let mut records: Vec<LogRecord> = Vec::new();
    for w in 0..cfg.num_session_windows {
        let window_start = cfg.start_time + w as i64 * cfg.window_spacing;
        for c in 0..cfg.num_clients {
            let replay = if cfg.stationary { 0 } else { w };
            let mut demand = stream(cfg.seed, DEMAND_STREAM, c, replay);
            let mut clock = stream(cfg.seed, TIME_STREAM, c, replay);

            let count = demand.random_range(lo..=hi) as usize;
            let mut offsets: Vec<i64> = (0..count).map(|_| clock.random_range(0..cfg.window_duration)).collect();
            offsets.sort_unstable();

            let home = group_of(c);
            for off in offsets {
                let schedule_time = cfg.start_time + replay as i64 * cfg.window_spacing + off;
                let group = pick_group(cfg, home, schedule_time, &mut demand);
                let rank = tables[group].sample(&mut demand);
                let v = catalogs[group][rank];
                records.push(LogRecord {
                    client_id: clients[c].clone(),
                    user_id: users[c].clone(),
                    timestamp: window_start + off,
                    video_id: videos[v].clone(),
                    status_code: 200,
                    bytes_sent: sizes[v],
                });
            }
        }
    }
    // stable: per-client order is already chronological
    records.sort_by_key(|r| r.timestamp);

    let truth = GroundTruth {
        client_group: clients
            .iter()
            .enumerate()
            .map(|(c, id)| (id.clone(), group_of(c)))
            .collect(),
        catalogs: catalogs
            .iter()
            .map(|cat| cat.iter().map(|&v| videos[v].clone()).collect())
            .collect(),
    };
    Ok((records, truth))
}

fn pick_group<R: Rng>(cfg: &WorkloadConfig, home: usize, t: i64, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    if cfg.num_groups == 1 || u < cfg.in_group_prob {
        return home;
    }
    let weights: Vec<f64> = (0..cfg.num_groups)
        .map(|g| if g == home { 0.0 } else { cfg.category_weight(g, t) })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return home;
    }
    let mut target = rng.random::<f64>() * total;
    for (g, w) in weights.iter().enumerate() {
        if target < *w {
            return g;
        }
        target -= w;
    }
    // rounding left `target` just past the last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(home)
}

/// Request count per video.
pub fn popularity_histogram(records: &[LogRecord]) -> BTreeMap<String, u64> {
    let mut hist = BTreeMap::new();
    for r in records {
        *hist.entry(r.video_id.clone()).or_insert(0) += 1;
    }
    hist
}

pub fn write_log<W: Write>(mut w: W, records: &[LogRecord]) -> io::Result<()> {
    writeln!(w, "# client_id user_id timestamp video_id status bytes")?;
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn small() -> WorkloadConfig {
        WorkloadConfig {
            num_clients: 6,
            num_videos: 30,
            num_groups: 3,
            in_group_prob: 1.0,
            zipf_exponent: 1.0,
            requests_per_client_per_session: [10, 20],
            num_session_windows: 2,
            window_spacing: 86_400,
            window_duration: 3_600,
            start_time: 1_696_118_400,
            shared_pool: 0,
            stationary: false,
            category_schedule: vec![],
            seed: 7,
        }
    }

    #[test]
    fn zipf_table_ranks() {
        let t = ZipfTable::new(3, 1.0);
        // weights 1, 1/2, 1/3 over 11/6
        assert_eq!(t.rank_for(0.0), 0);
        assert_eq!(t.rank_for(6.0 / 11.0 - 1e-9), 0);
        assert_eq!(t.rank_for(6.0 / 11.0 + 1e-9), 1);
        assert_eq!(t.rank_for(0.999_999), 2);
        assert_eq!(t.rank_for(1.0), 2);
    }

    #[test]
    fn in_group_only_stays_in_catalog() {
        let (records, truth) = generate(&small()).unwrap();
        for r in &records {
            let g = truth.client_group[&r.client_id];
            assert!(truth.catalogs[g].contains(&r.video_id), "{r:?}");
        }
        let all: BTreeSet<_> = truth.catalogs.iter().flatten().collect();
        assert_eq!(all.len(), 30);
    }

    #[test]
    fn shared_pool_heads_every_catalog() {
        let mut cfg = small();
        cfg.shared_pool = 3;
        let (_, truth) = generate(&cfg).unwrap();
        for cat in &truth.catalogs {
            assert_eq!(&cat[..3], ["v01", "v02", "v03"]);
        }
        assert_eq!(truth.catalogs.iter().map(Vec::len).sum::<usize>(), 3 * 3 + 27);
    }

    #[test]
    fn deterministic_under_seed() {
        let (a, _) = generate(&small()).unwrap();
        let (b, _) = generate(&small()).unwrap();
        assert_eq!(a, b);
        let mut other = small();
        other.seed = 8;
        assert_ne!(generate(&other).unwrap().0, a);
    }

    #[test]
    fn timestamps_within_windows_and_sorted() {
        let cfg = small();
        let (records, _) = generate(&cfg).unwrap();
        assert!(records.windows(2).all(|p| p[0].timestamp <= p[1].timestamp));
        for r in &records {
            let off = (r.timestamp - cfg.start_time) % cfg.window_spacing;
            assert!((0..cfg.window_duration).contains(&off));
        }
    }

    #[test]
    fn stationary_replays_demand() {
        let mut cfg = small();
        cfg.stationary = true;
        cfg.in_group_prob = 0.7;
        let (records, _) = generate(&cfg).unwrap();
        let split = cfg.start_time + cfg.window_spacing;
        let shifted = |r: &LogRecord| {
            (
                r.client_id.clone(),
                r.timestamp % cfg.window_spacing,
                r.video_id.clone(),
            )
        };
        let first: Vec<_> = records.iter().filter(|r| r.timestamp < split).map(shifted).collect();
        let second: Vec<_> = records.iter().filter(|r| r.timestamp >= split).map(shifted).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn schedule_weights() {
        let mut cfg = small();
        cfg.category_schedule = vec![
            ScheduleEntry {
                group: 0,
                start_hour: 18,
                end_hour: 20,
                multiplier: 3.0,
                weekend_only: false,
            },
            ScheduleEntry {
                group: 0,
                start_hour: 7,
                end_hour: 11,
                multiplier: 2.0,
                weekend_only: true,
            },
        ];
        let sunday = 1_696_118_400; // 2023-10-01 00:00 UTC
        assert_eq!(cfg.category_weight(0, sunday + 19 * 3600), 3.0);
        assert_eq!(cfg.category_weight(0, sunday + 8 * 3600), 2.0);
        assert_eq!(cfg.category_weight(0, sunday + 86_400 + 8 * 3600), 1.0);
        assert_eq!(cfg.category_weight(1, sunday + 19 * 3600), 1.0);
    }

    #[test]
    fn infeasible_configs() {
        let mut cfg = small();
        cfg.num_groups = 7;
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.shared_pool = 30;
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.num_videos = 2;
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.requests_per_client_per_session = [5, 2];
        assert!(generate(&cfg).is_err());
        let mut cfg = small();
        cfg.window_duration = cfg.window_spacing + 1;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn histogram_counts() {
        assert!(popularity_histogram(&[]).is_empty());
        let r = LogRecord {
            client_id: "c".into(),
            user_id: "u".into(),
            timestamp: 0,
            video_id: "v1".into(),
            status_code: 200,
            bytes_sent: 1,
        };
        let hist = popularity_histogram(&[r.clone(), r.clone(), r]);
        assert_eq!(hist, BTreeMap::from([("v1".to_string(), 3)]));
    }
}
