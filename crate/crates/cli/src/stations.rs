//! Station CSV ingestion.
//!
//! Format: UTF-8, comma-separated, `.` decimal separator, LF line endings,
//! header `station_id,lat_deg,lon_deg,value` with an optional trailing
//! `level` column. Coordinates are degrees; everything downstream is
//! radians.

use crate::error::CliError;
use spheregp::geometry::SpherePoint;
use spheregp::gp::Dataset;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct StationRecord {
    pub station_id: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub value: f64,
    pub level: Option<String>,
}

#[derive(Debug, Clone)]
pub struct StationData {
    pub dataset: Dataset,
    pub records: Vec<StationRecord>,
}

fn parse_float(field: &str, name: &str, line: u64) -> Result<f64, CliError> {
    field.trim().parse::<f64>().map_err(|_| {
        CliError::data(format!("line {line}: cannot parse {name} from {field:?}"))
    })
}

/// Reads a station file into a dataset. Duplicate (station_id, level) rows
/// are always rejected; rows landing on the same coordinates are rejected
/// unless `allow_duplicate_sites` is set (they then rely on a positive
/// nugget at model-build time).
pub fn read_stations(path: &Path, allow_duplicate_sites: bool) -> Result<StationData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .clone();
    let expected = ["station_id", "lat_deg", "lon_deg", "value"];
    let header_fields: Vec<&str> = headers.iter().collect();
    let has_level = match header_fields.as_slice() {
        [a, b, c, d] if [a, b, c, d] == [&"station_id", &"lat_deg", &"lon_deg", &"value"] => false,
        [a, b, c, d, e]
            if [a, b, c, d] == [&"station_id", &"lat_deg", &"lon_deg", &"value"]
                && *e == "level" =>
        {
            true
        }
        _ => {
            return Err(CliError::data(format!(
                "{}: header must be {} with an optional trailing level column, got {:?}",
                path.display(),
                expected.join(","),
                header_fields
            )))
        }
    };

    let mut records = Vec::new();
    let mut sites = Vec::new();
    let mut values = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let line = row.position().map_or(0, |p| p.line());
        let want = if has_level { 5 } else { 4 };
        if row.len() != want {
            return Err(CliError::data(format!(
                "line {line}: expected {want} fields, got {}",
                row.len()
            )));
        }
        let station_id = row[0].to_string();
        if station_id.is_empty() {
            return Err(CliError::data(format!("line {line}: empty station_id")));
        }
        let lat_deg = parse_float(&row[1], "lat_deg", line)?;
        let lon_deg = parse_float(&row[2], "lon_deg", line)?;
        let value = parse_float(&row[3], "value", line)?;
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(CliError::data(format!(
                "line {line}: lat_deg {lat_deg} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&lon_deg) {
            return Err(CliError::data(format!(
                "line {line}: lon_deg {lon_deg} outside [-180, 180]"
            )));
        }
        if !value.is_finite() {
            return Err(CliError::data(format!("line {line}: value is not finite")));
        }
        let level = if has_level {
            Some(row[4].to_string()).filter(|s| !s.is_empty())
        } else {
            None
        };
        let record = StationRecord {
            station_id,
            lat_deg,
            lon_deg,
            value,
            level,
        };
        if let Some(previous) = records.iter().find(|r: &&StationRecord| {
            r.station_id == record.station_id && r.level == record.level
        }) {
            return Err(CliError::data(format!(
                "line {line}: duplicate station {:?} at level {:?} (first value {})",
                record.station_id, record.level, previous.value
            )));
        }
        let site = SpherePoint::from_degrees(lon_deg, lat_deg)
            .map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        if !allow_duplicate_sites {
            if let Some(pos) = sites.iter().position(|s| *s == site) {
                return Err(CliError::data(format!(
                    "line {line}: station {:?} duplicates the coordinates of {:?}; \
                     pass --allow-nugget to model repeated sites with measurement error",
                    record.station_id, records[pos].station_id
                )));
            }
        }
        sites.push(site);
        values.push(value);
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::data(format!(
            "{}: no station rows",
            path.display()
        )));
    }
    let dataset = Dataset::new(sites, values)
        .map_err(|e| CliError::data(e.to_string()))?
        .with_name(path.display().to_string());
    Ok(StationData { dataset, records })
}
