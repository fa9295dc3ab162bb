//! Versioned dataset files: JSON Lines with a header object, then one POI
//! record per line and one check-in per line. Serialization is deterministic,
//! so identical input and config produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CheckIn, Dataset, DatasetError, PoiRecord};

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub kind: String,
    pub format_version: u32,
    pub config_hash: String,
    pub users: usize,
    pub pois: usize,
    pub checkins: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Poi(PoiRecord),
    Checkin(CheckIn),
}

pub fn save_dataset(
    dataset: &Dataset,
    config_hash: &str,
    path: &Path,
) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let header = DatasetHeader {
        kind: "header".into(),
        format_version: DATASET_FORMAT_VERSION,
        config_hash: config_hash.to_string(),
        users: dataset.user_count(),
        pois: dataset.poi_count(),
        checkins: dataset.checkin_count(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header")).map_err(io_err)?;
    for p in dataset.pois() {
        let line = serde_json::to_string(&Line::Poi(p.clone())).expect("poi");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    for c in dataset.checkins() {
        let line = serde_json::to_string(&Line::Checkin(*c)).expect("checkin");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_dataset(path: &Path) -> Result<(Dataset, DatasetHeader), DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bad = |msg: String| DatasetError::BadFile {
        path: path.display().to_string(),
        msg,
    };
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(|e| bad(e.to_string()))?;
    let header: DatasetHeader =
        serde_json::from_str(&header_line).map_err(|e| bad(format!("bad header: {e}")))?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let mut pois = Vec::with_capacity(header.pois);
    let mut checkins = Vec::with_capacity(header.checkins);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", i + 2)))? {
            Line::Poi(p) => pois.push(p),
            Line::Checkin(c) => checkins.push(c),
        }
    }
    if pois.len() != header.pois || checkins.len() != header.checkins {
        return Err(bad(format!(
            "header promised {} POIs / {} check-ins, found {} / {}",
            header.pois,
            header.checkins,
            pois.len(),
            checkins.len()
        )));
    }
    Ok((Dataset::from_parts(pois, checkins), header))
}
