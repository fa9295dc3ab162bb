//! Check-in ingestion, sparsity filtering, and trajectory splitting.
//!
//! A [`Dataset`] is an immutable batch of [`PoiRecord`]s plus [`CheckIn`]s
//! sorted per user by `(timestamp, original row order)`. [`preprocess`]
//! removes sparse users/POIs until a fixed point, and [`split_trajectories`]
//! produces one [`TrajectoryPair`] per user: everything before the window as
//! the historical trajectory, the `L` check-ins preceding the final visit as
//! the current trajectory, and the final visit as the held-out target.

mod ingest;
mod io;

pub use ingest::{ingest_checkins, ColumnMap, IngestConfig, IngestReport, InputFormat};
pub use io::{load_dataset, save_dataset, DatasetHeader};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("{malformed} of {total} rows malformed, above threshold {threshold}")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        threshold: f64,
    },
    #[error("dataset empty after filtering (min_user_checkins={min_user}, min_poi_checkins={min_poi}); input had {input_checkins} check-ins")]
    EmptyAfterFilter {
        min_user: usize,
        min_poi: usize,
        input_checkins: usize,
    },
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("dataset file {path} is not valid: {msg}")]
    BadFile { path: String, msg: String },
}

/// One point of interest: identifier, coordinates, category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub poi_id: u64,
    pub lat: f64,
    pub lon: f64,
    pub category: String,
}

impl PoiRecord {
    pub fn new(poi_id: u64, lat: f64, lon: f64, category: impl Into<String>) -> Self {
        Self {
            poi_id,
            lat,
            lon,
            category: category.into(),
        }
    }
}

/// One visit event. `timestamp` is UTC seconds; `tz_offset_min` converts to
/// the local wall clock used by the time-of-day statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckIn {
    pub user_id: u64,
    pub poi_id: u64,
    pub timestamp: i64,
    #[serde(default)]
    pub tz_offset_min: i32,
}

impl CheckIn {
    pub fn new(user_id: u64, poi_id: u64, timestamp: i64) -> Self {
        Self {
            user_id,
            poi_id,
            timestamp,
            tz_offset_min: 0,
        }
    }

    /// Seconds shifted into the check-in's local timezone.
    pub fn local_timestamp(&self) -> i64 {
        self.timestamp + i64::from(self.tz_offset_min) * 60
    }
}

/// Immutable check-in log: POIs sorted by id, check-ins sorted by
/// `(user_id, timestamp)` with the original row order breaking ties.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pois: Vec<PoiRecord>,
    checkins: Vec<CheckIn>,
}

impl Dataset {
    /// Build from unordered parts. Check-ins are stably sorted so equal
    /// timestamps keep their input order.
    pub fn from_parts(mut pois: Vec<PoiRecord>, mut checkins: Vec<CheckIn>) -> Self {
        pois.sort_by_key(|p| p.poi_id);
        pois.dedup_by_key(|p| p.poi_id);
        checkins.sort_by(|a, b| (a.user_id, a.timestamp).cmp(&(b.user_id, b.timestamp)));
        Self { pois, checkins }
    }

    pub fn pois(&self) -> &[PoiRecord] {
        &self.pois
    }

    pub fn checkins(&self) -> &[CheckIn] {
        &self.checkins
    }

    pub fn poi(&self, poi_id: u64) -> Option<&PoiRecord> {
        self.pois
            .binary_search_by_key(&poi_id, |p| p.poi_id)
            .ok()
            .map(|i| &self.pois[i])
    }

    /// Distinct user ids in ascending order.
    pub fn user_ids(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for c in &self.checkins {
            if out.last() != Some(&c.user_id) {
                out.push(c.user_id);
            }
        }
        out
    }

    /// The contiguous, chronologically sorted check-ins of one user.
    pub fn user_checkins(&self, user_id: u64) -> &[CheckIn] {
        let start = self.checkins.partition_point(|c| c.user_id < user_id);
        let end = self.checkins.partition_point(|c| c.user_id <= user_id);
        &self.checkins[start..end]
    }

    pub fn user_count(&self) -> usize {
        self.user_ids().len()
    }

    pub fn poi_count(&self) -> usize {
        self.pois.len()
    }

    pub fn checkin_count(&self) -> usize {
        self.checkins.len()
    }
}

/// How sparsity filtering iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Alternate user/POI removal until nothing changes.
    #[default]
    Iterative,
    /// One user pass then one POI pass.
    SinglePass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub mode: FilterMode,
    pub rounds: usize,
    pub users_before: usize,
    pub users_after: usize,
    pub pois_before: usize,
    pub pois_after: usize,
    pub checkins_before: usize,
    pub checkins_after: usize,
}

/// Remove users and POIs with too few check-ins.
///
/// In [`FilterMode::Iterative`] the user and POI passes alternate until a
/// fixed point, so every surviving user has at least `min_user_checkins`
/// check-ins and every surviving POI at least `min_poi_checkins`.
pub fn preprocess(
    dataset: &Dataset,
    min_user_checkins: usize,
    min_poi_checkins: usize,
    mode: FilterMode,
) -> Result<(Dataset, PreprocessReport), DatasetError> {
    if min_user_checkins < 1 || min_poi_checkins < 1 {
        return Err(DatasetError::InvalidThreshold(
            "thresholds must be >= 1".into(),
        ));
    }
    let mut checkins = dataset.checkins.clone();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let before = checkins.len();
        let user_counts = count_by(&checkins, |c| c.user_id);
        checkins.retain(|c| user_counts[&c.user_id] >= min_user_checkins);
        let poi_counts = count_by(&checkins, |c| c.poi_id);
        checkins.retain(|c| poi_counts[&c.poi_id] >= min_poi_checkins);
        if mode == FilterMode::SinglePass || checkins.len() == before {
            break;
        }
    }
    if checkins.is_empty() {
        return Err(DatasetError::EmptyAfterFilter {
            min_user: min_user_checkins,
            min_poi: min_poi_checkins,
            input_checkins: dataset.checkin_count(),
        });
    }
    let surviving: BTreeSet<u64> = checkins.iter().map(|c| c.poi_id).collect();
    let pois: Vec<PoiRecord> = dataset
        .pois
        .iter()
        .filter(|p| surviving.contains(&p.poi_id))
        .cloned()
        .collect();
    let filtered = Dataset { pois, checkins };
    let report = PreprocessReport {
        mode,
        rounds,
        users_before: dataset.user_count(),
        users_after: filtered.user_count(),
        pois_before: dataset.poi_count(),
        pois_after: filtered.poi_count(),
        checkins_before: dataset.checkin_count(),
        checkins_after: filtered.checkin_count(),
    };
    Ok((filtered, report))
}

fn count_by<F: Fn(&CheckIn) -> u64>(checkins: &[CheckIn], key: F) -> BTreeMap<u64, usize> {
    let mut counts = BTreeMap::new();
    for c in checkins {
        *counts.entry(key(c)).or_insert(0) += 1;
    }
    counts
}

/// One user's prediction instance: earlier history, the window of the `L`
/// most recent check-ins before the target, and the held-out target itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryPair {
    pub user_id: u64,
    pub historical: Vec<CheckIn>,
    pub current: Vec<CheckIn>,
    pub target: CheckIn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitReport {
    pub window: usize,
    pub min_checkins: usize,
    pub users_split: usize,
    pub users_dropped: usize,
}

/// Split every user into one [`TrajectoryPair`] with a window of `L`
/// check-ins before the final (target) visit.
///
/// Users with fewer than `min_checkins` check-ins (defaults to `L + 2` when
/// `None`) are dropped and counted. Pairs come back sorted by user id.
pub fn split_trajectories(
    dataset: &Dataset,
    window: usize,
    min_checkins: Option<usize>,
) -> (Vec<TrajectoryPair>, SplitReport) {
    let min_checkins = min_checkins.unwrap_or(window + 2).max(2);
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for user_id in dataset.user_ids() {
        let seq = dataset.user_checkins(user_id);
        if seq.len() < min_checkins {
            dropped += 1;
            continue;
        }
        let target = *seq.last().expect("min_checkins >= 2");
        let rest = &seq[..seq.len() - 1];
        let cur_start = rest.len().saturating_sub(window);
        pairs.push(TrajectoryPair {
            user_id,
            historical: rest[..cur_start].to_vec(),
            current: rest[cur_start..].to_vec(),
            target,
        });
    }
    let report = SplitReport {
        window,
        min_checkins,
        users_split: pairs.len(),
        users_dropped: dropped,
    };
    (pairs, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poi(id: u64) -> PoiRecord {
        PoiRecord::new(id, 40.0 + id as f64 * 0.01, -74.0, format!("cat{id}"))
    }

    fn make(counts: &[(u64, usize)]) -> Dataset {
        // user -> number of check-ins, each at its own POI id = user*100 + i
        let mut pois = Vec::new();
        let mut checkins = Vec::new();
        for &(user, n) in counts {
            for i in 0..n {
                let pid = user * 100 + i as u64;
                pois.push(poi(pid));
                checkins.push(CheckIn::new(user, pid, (i as i64) * 3600));
            }
        }
        Dataset::from_parts(pois, checkins)
    }

    #[test]
    fn identity_thresholds_leave_dataset_unchanged() {
        let ds = make(&[(1, 3), (2, 5)]);
        let (out, report) = preprocess(&ds, 1, 1, FilterMode::Iterative).unwrap();
        assert_eq!(out, ds);
        assert_eq!(report.checkins_after, 8);
    }

    #[test]
    fn sparse_user_removed_with_their_checkins() {
        let ds = make(&[(1, 2), (2, 5)]);
        let (out, _) = preprocess(&ds, 3, 1, FilterMode::Iterative).unwrap();
        assert_eq!(out.user_ids(), vec![2]);
        assert_eq!(out.checkin_count(), 5);
        assert!(out.pois().iter().all(|p| p.poi_id >= 200));
    }

    #[test]
    fn iterative_filter_reaches_fixed_point_of_brute_force() {
        // Users 0..9 share a POI pool with a sparse tail; compare against an
        // independent loop that deletes one offending entity at a time.
        let mut pois = Vec::new();
        for pid in 0..20 {
            pois.push(poi(pid));
        }
        let mut checkins = Vec::new();
        for user in 0..10u64 {
            let n = 4 + user as usize * 2; // 4..22 check-ins
            for i in 0..n {
                // heavier users hit low POI ids more; tail POIs are rare
                let pid = if i % 3 == 0 { (i as u64) % 20 } else { user % 5 };
                checkins.push(CheckIn::new(user, pid, i as i64));
            }
        }
        let ds = Dataset::from_parts(pois, checkins);
        let (ours, _) = preprocess(&ds, 10, 10, FilterMode::Iterative).unwrap();

        // Brute force: repeatedly drop any single under-threshold user or POI.
        let mut remaining: Vec<CheckIn> = ds.checkins().to_vec();
        loop {
            let users = count_by(&remaining, |c| c.user_id);
            if let Some((&u, _)) = users.iter().find(|(_, &n)| n < 10) {
                remaining.retain(|c| c.user_id != u);
                continue;
            }
            let pois = count_by(&remaining, |c| c.poi_id);
            if let Some((&p, _)) = pois.iter().find(|(_, &n)| n < 10) {
                remaining.retain(|c| c.poi_id != p);
                continue;
            }
            break;
        }
        assert_eq!(ours.checkins(), remaining.as_slice());
    }

    #[test]
    fn fixed_point_invariant_holds_for_every_entity() {
        let ds = make(&[(1, 12), (2, 7), (3, 15)]);
        match preprocess(&ds, 10, 1, FilterMode::Iterative) {
            Ok((out, _)) => {
                for u in out.user_ids() {
                    assert!(out.user_checkins(u).len() >= 10);
                }
            }
            Err(DatasetError::EmptyAfterFilter { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn empty_after_filter_is_fatal() {
        let ds = make(&[(1, 2)]);
        let err = preprocess(&ds, 100, 100, FilterMode::Iterative).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyAfterFilter { .. }));
    }

    #[test]
    fn split_forty_checkins_window_thirty() {
        let ds = make(&[(1, 40)]);
        let (pairs, _) = split_trajectories(&ds, 30, None);
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(p.historical.len(), 9);
        assert_eq!(p.current.len(), 30);
        assert_eq!(p.target.timestamp, 39 * 3600);
    }

    #[test]
    fn split_boundary_exactly_window_plus_two() {
        let ds = make(&[(1, 32)]);
        let (pairs, _) = split_trajectories(&ds, 30, None);
        assert_eq!(pairs[0].historical.len(), 1);
        assert_eq!(pairs[0].current.len(), 30);
    }

    #[test]
    fn split_drops_short_users_and_counts_them() {
        let ds = make(&[(1, 5), (2, 40), (3, 31)]);
        let (pairs, report) = split_trajectories(&ds, 30, None);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].user_id, 2);
        assert_eq!(report.users_dropped, 2);
    }

    #[test]
    fn split_matches_reference_splitter_on_varied_lengths() {
        let lengths = [(1u64, 33), (2, 32), (3, 45), (4, 2), (5, 100)];
        let ds = make(&lengths);
        let (pairs, _) = split_trajectories(&ds, 30, Some(3));
        // Reference: direct slicing on each user's sorted sequence.
        let mut expect = Vec::new();
        for &(u, n) in &lengths {
            if n < 3 {
                continue;
            }
            let seq = ds.user_checkins(u);
            let t = seq[n - 1];
            let cur_from = (n - 1).saturating_sub(30);
            expect.push((u, seq[..cur_from].to_vec(), seq[cur_from..n - 1].to_vec(), t));
        }
        assert_eq!(pairs.len(), expect.len());
        for (p, (u, h, c, t)) in pairs.iter().zip(expect) {
            assert_eq!(p.user_id, u);
            assert_eq!(p.historical, h);
            assert_eq!(p.current, c);
            assert_eq!(p.target, t);
        }
    }

    #[test]
    fn chronology_and_conservation_across_every_pair() {
        let ds = make(&[(1, 33), (2, 50), (3, 32)]);
        let (pairs, _) = split_trajectories(&ds, 30, None);
        for p in &pairs {
            let full: Vec<CheckIn> = p
                .historical
                .iter()
                .chain(&p.current)
                .chain(std::iter::once(&p.target))
                .copied()
                .collect();
            assert_eq!(full.as_slice(), ds.user_checkins(p.user_id));
            for w in full.windows(2) {
                assert!(w[0].timestamp <= w[1].timestamp);
            }
            assert!(p.current.len() <= 30);
        }
    }

    #[test]
    fn tie_timestamps_keep_input_order() {
        let pois = vec![poi(1), poi(2), poi(3)];
        let checkins = vec![
            CheckIn::new(7, 2, 100),
            CheckIn::new(7, 3, 100),
            CheckIn::new(7, 1, 50),
        ];
        let ds = Dataset::from_parts(pois, checkins);
        let ids: Vec<u64> = ds.user_checkins(7).iter().map(|c| c.poi_id).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }
}
