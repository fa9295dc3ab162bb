//! Raw check-in log parsing.
//!
//! Raw user and POI identifiers (Foursquare venue ids are hex strings) are
//! interned to dense integer ids in first-appearance order, which keeps the
//! mapping deterministic for a given input file.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use super::{CheckIn, Dataset, DatasetError, PoiRecord};

/// Foursquare check-in timestamp, e.g. `Tue Apr 03 18:00:09 +0000 2012`.
const FOURSQUARE_TIME_FMT: &str = "%a %b %d %H:%M:%S %z %Y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// Tab-separated: user_id, poi_id, category_id, category_name, lat, lon,
    /// tz_offset_minutes, utc_time.
    TsvFoursquare,
    /// Delimited text described by a [`ColumnMap`].
    CsvGeneric,
}

/// Column layout for [`InputFormat::CsvGeneric`], 0-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub user_id: usize,
    pub poi_id: usize,
    pub category: usize,
    pub lat: usize,
    pub lon: usize,
    pub timestamp: usize,
    /// Optional column holding minutes east of UTC.
    #[serde(default)]
    pub tz_offset_minutes: Option<usize>,
    /// `"unix"` for epoch seconds, otherwise a chrono format string.
    #[serde(default = "default_ts_format")]
    pub timestamp_format: String,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_ts_format() -> String {
    "unix".to_string()
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestConfig {
    pub format: InputFormat,
    #[serde(default)]
    pub column_map: Option<ColumnMap>,
    /// Abort when more than this fraction of rows fails to parse.
    #[serde(default = "default_malformed_threshold")]
    pub malformed_threshold: f64,
}

fn default_malformed_threshold() -> f64 {
    0.01
}

impl IngestConfig {
    pub fn tsv_foursquare() -> Self {
        Self {
            format: InputFormat::TsvFoursquare,
            column_map: None,
            malformed_threshold: default_malformed_threshold(),
        }
    }

    pub fn csv_generic(map: ColumnMap) -> Self {
        Self {
            format: InputFormat::CsvGeneric,
            column_map: Some(map),
            malformed_threshold: default_malformed_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_total: usize,
    pub rows_malformed: usize,
    pub users: usize,
    pub pois: usize,
    pub checkins: usize,
    /// First few rejection messages, for diagnostics.
    pub sample_errors: Vec<String>,
}

#[derive(Default)]
struct Interner {
    map: HashMap<String, u64>,
}

impl Interner {
    fn get(&mut self, raw: &str) -> u64 {
        let next = self.map.len() as u64;
        *self.map.entry(raw.to_string()).or_insert(next)
    }
}

struct ParsedRow {
    user_raw: String,
    poi_raw: String,
    category: String,
    lat: f64,
    lon: f64,
    timestamp: i64,
    tz_offset_min: i32,
}

/// Parse a raw check-in log into an unfiltered [`Dataset`].
///
/// Malformed rows are skipped and counted; the run aborts when their fraction
/// exceeds `config.malformed_threshold`. POI coordinates must satisfy
/// lat in [-90, 90] and lon in [-180, 180].
pub fn ingest_checkins(
    path: &Path,
    config: &IngestConfig,
) -> Result<(Dataset, IngestReport), DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut users = Interner::default();
    let mut pois = Interner::default();
    let mut poi_records: HashMap<u64, PoiRecord> = HashMap::new();
    let mut checkins = Vec::new();
    let mut rows_total = 0;
    let mut rows_malformed = 0;
    let mut sample_errors = Vec::new();

    let column_map = match config.format {
        InputFormat::CsvGeneric => Some(config.column_map.clone().ok_or_else(|| {
            DatasetError::BadFile {
                path: path.display().to_string(),
                msg: "csv_generic requires a column map".into(),
            }
        })?),
        InputFormat::TsvFoursquare => None,
    };

    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        if line_no == 0 {
            if let Some(map) = &column_map {
                if map.has_header {
                    continue;
                }
            }
        }
        rows_total += 1;
        let parsed = match config.format {
            InputFormat::TsvFoursquare => parse_foursquare_row(&line),
            InputFormat::CsvGeneric => parse_generic_row(&line, column_map.as_ref().unwrap()),
        };
        match parsed {
            Ok(row) => {
                let user_id = users.get(&row.user_raw);
                let poi_id = pois.get(&row.poi_raw);
                poi_records.entry(poi_id).or_insert_with(|| PoiRecord {
                    poi_id,
                    lat: row.lat,
                    lon: row.lon,
                    category: row.category.clone(),
                });
                checkins.push(CheckIn {
                    user_id,
                    poi_id,
                    timestamp: row.timestamp,
                    tz_offset_min: row.tz_offset_min,
                });
            }
            Err(msg) => {
                rows_malformed += 1;
                if sample_errors.len() < 5 {
                    sample_errors.push(format!("line {}: {msg}", line_no + 1));
                }
            }
        }
    }

    if rows_total > 0 && rows_malformed as f64 / rows_total as f64 > config.malformed_threshold {
        return Err(DatasetError::TooManyMalformed {
            malformed: rows_malformed,
            total: rows_total,
            threshold: config.malformed_threshold,
        });
    }

    let dataset = Dataset::from_parts(poi_records.into_values().collect(), checkins);
    let report = IngestReport {
        rows_total,
        rows_malformed,
        users: dataset.user_count(),
        pois: dataset.poi_count(),
        checkins: dataset.checkin_count(),
        sample_errors,
    };
    Ok((dataset, report))
}

fn parse_foursquare_row(line: &str) -> Result<ParsedRow, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 8 {
        return Err(format!("expected 8 tab-separated columns, got {}", cols.len()));
    }
    let lat = parse_coord(cols[4], -90.0, 90.0, "lat")?;
    let lon = parse_coord(cols[5], -180.0, 180.0, "lon")?;
    let tz_offset_min: i32 = cols[6]
        .trim()
        .parse()
        .map_err(|_| format!("bad tz offset {:?}", cols[6]))?;
    let ts = DateTime::parse_from_str(cols[7].trim(), FOURSQUARE_TIME_FMT)
        .map_err(|e| format!("bad utc_time {:?}: {e}", cols[7]))?
        .timestamp();
    Ok(ParsedRow {
        user_raw: cols[0].trim().to_string(),
        poi_raw: cols[1].trim().to_string(),
        category: cols[3].trim().to_string(),
        lat,
        lon,
        timestamp: ts,
        tz_offset_min,
    })
}

fn parse_generic_row(line: &str, map: &ColumnMap) -> Result<ParsedRow, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(map.delimiter as u8)
        .from_reader(line.as_bytes());
    let record = rdr
        .records()
        .next()
        .ok_or("empty record")?
        .map_err(|e| e.to_string())?;
    let field = |idx: usize, name: &str| -> Result<String, String> {
        record
            .get(idx)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| format!("missing column {idx} ({name})"))
    };
    let lat = parse_coord(&field(map.lat, "lat")?, -90.0, 90.0, "lat")?;
    let lon = parse_coord(&field(map.lon, "lon")?, -180.0, 180.0, "lon")?;
    let tz_offset_min = match map.tz_offset_minutes {
        Some(idx) => field(idx, "tz_offset_minutes")?
            .parse()
            .map_err(|_| "bad tz offset".to_string())?,
        None => 0,
    };
    let raw_ts = field(map.timestamp, "timestamp")?;
    let timestamp = if map.timestamp_format == "unix" {
        raw_ts
            .parse::<i64>()
            .map_err(|_| format!("bad unix timestamp {raw_ts:?}"))?
    } else {
        DateTime::parse_from_str(&raw_ts, &map.timestamp_format)
            .map(|dt| dt.timestamp())
            .or_else(|_| {
                chrono::NaiveDateTime::parse_from_str(&raw_ts, &map.timestamp_format)
                    .map(|dt| dt.and_utc().timestamp() - i64::from(tz_offset_min) * 60)
            })
            .map_err(|e| format!("bad timestamp {raw_ts:?}: {e}"))?
    };
    Ok(ParsedRow {
        user_raw: field(map.user_id, "user_id")?,
        poi_raw: field(map.poi_id, "poi_id")?,
        category: field(map.category, "category")?,
        lat,
        lon,
        timestamp,
        tz_offset_min,
    })
}

fn parse_coord(raw: &str, lo: f64, hi: f64, name: &str) -> Result<f64, String> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| format!("bad {name} {raw:?}"))?;
    if !v.is_finite() || v < lo || v > hi {
        return Err(format!("{name} {v} outside [{lo}, {hi}]"));
    }
    Ok(v)
}
