//! CSV writers. All numeric fields carry 12 significant digits in
//! scientific notation, which Rust formats locale-independently, so files
//! are byte-identical across runs with equal inputs.

use crate::error::CliError;
use spheregp::geometry::SpherePoint;
use spheregp::gp::PredictionResult;
use std::io::Write;
use std::path::Path;

/// 12 significant digits, scientific notation.
pub fn fmt_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `lon_deg,lat_deg,mean,variance`, one row per target in order.
pub fn write_predictions(
    path: &Path,
    targets: &[SpherePoint],
    results: &[PredictionResult],
) -> Result<(), CliError> {
    debug_assert_eq!(targets.len(), results.len());
    let mut out = String::from("lon_deg,lat_deg,mean,variance\n");
    for (target, result) in targets.iter().zip(results) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig12(target.lon_degrees()),
            fmt_sig12(target.lat_degrees()),
            fmt_sig12(result.mean),
            fmt_sig12(result.variance)
        ));
    }
    write_atomically(path, out.as_bytes())
}

/// Writes simulation draws: `lon_deg,lat_deg,draw_0,...`, one row per site.
pub fn write_draws(
    path: &Path,
    sites: &[SpherePoint],
    draws: &spheregp::DMatrix<f64>,
) -> Result<(), CliError> {
    let mut header = String::from("lon_deg,lat_deg");
    for d in 0..draws.nrows() {
        header.push_str(&format!(",draw_{d}"));
    }
    header.push('\n');
    let mut out = header;
    for (j, site) in sites.iter().enumerate() {
        out.push_str(&fmt_sig12(site.lon_degrees()));
        out.push(',');
        out.push_str(&fmt_sig12(site.lat_degrees()));
        for d in 0..draws.nrows() {
            out.push(',');
            out.push_str(&fmt_sig12(draws[(d, j)]));
        }
        out.push('\n');
    }
    write_atomically(path, out.as_bytes())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    file.write_all(bytes)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Reads a targets CSV with header `lon_deg,lat_deg`.
pub fn read_targets(path: &Path) -> Result<Vec<SpherePoint>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let fields: Vec<&str> = headers.iter().collect();
    if fields.len() < 2 || fields[0] != "lon_deg" || fields[1] != "lat_deg" {
        return Err(CliError::data(format!(
            "{}: target header must start with lon_deg,lat_deg",
            path.display()
        )));
    }
    let mut targets = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let line = row.position().map_or(0, |p| p.line());
        let lon: f64 = row[0]
            .parse()
            .map_err(|_| CliError::data(format!("line {line}: bad lon_deg {:?}", &row[0])))?;
        let lat: f64 = row[1]
            .parse()
            .map_err(|_| CliError::data(format!("line {line}: bad lat_deg {:?}", &row[1])))?;
        targets.push(
            SpherePoint::from_degrees(lon, lat)
                .map_err(|e| CliError::data(format!("line {line}: {e}")))?,
        );
    }
    Ok(targets)
}
