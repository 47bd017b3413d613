//! Empirical covariogram binned by longitude lag, latitude lag, and
//! latitude band.

use super::DiagnosticsError;
use crate::geometry::{wrap_longitude, SpherePoint};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fixed-width bin layout: longitude lags cover [0, pi], latitude lags
/// cover [-pi, pi]. Edges are `i * width` for bin `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariogramBins {
    pub n_lon_bins: usize,
    pub n_lat_bins: usize,
}

impl Default for CovariogramBins {
    fn default() -> Self {
        Self {
            n_lon_bins: 9,
            n_lat_bins: 18,
        }
    }
}

/// One (band, lon bin, lat bin) cell. `covariance` is `None` for empty
/// cells, which are still emitted so the table has a fixed shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariogramRow {
    pub band: usize,
    pub band_range: (f64, f64),
    pub lon_bin: usize,
    pub lon_range: (f64, f64),
    pub lat_bin: usize,
    pub lat_range: (f64, f64),
    pub covariance: Option<f64>,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariogramTable {
    pub rows: Vec<CovariogramRow>,
}

impl CovariogramTable {
    /// Mean covariance across bands at a given (lon bin, lat bin), weighted
    /// by pair counts. Handy for directional comparisons.
    pub fn pooled(&self, lon_bin: usize, lat_bin: usize) -> Option<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for row in &self.rows {
            if row.lon_bin == lon_bin && row.lat_bin == lat_bin {
                if let Some(c) = row.covariance {
                    total += c * row.n_pairs as f64;
                    count += row.n_pairs;
                }
            }
        }
        if count == 0 {
            None
        } else {
            Some(total / count as f64)
        }
    }
}

impl std::fmt::Display for CovariogramTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:>4} {:>18} {:>18} {:>18} {:>14} {:>8}",
            "band", "band range", "lon-lag bin", "lat-lag bin", "covariance", "pairs"
        )?;
        for row in &self.rows {
            let cov = row
                .covariance
                .map_or_else(|| "-".to_string(), |c| format!("{c:.6}"));
            writeln!(
                f,
                "{:>4} [{:>7.3},{:>7.3}] [{:>7.3},{:>7.3}] [{:>7.3},{:>7.3}] {:>14} {:>8}",
                row.band,
                row.band_range.0,
                row.band_range.1,
                row.lon_range.0,
                row.lon_range.1,
                row.lat_range.0,
                row.lat_range.1,
                cov,
                row.n_pairs
            )?;
        }
        Ok(())
    }
}

/// Moment estimator of the covariance as a function of (longitude lag,
/// signed latitude lag), within latitude bands.
///
/// Draw series are centered per site; a pair (i, j) contributes
/// `sum_m c_mi c_mj / (M - 1)` to the cell of its band (containing the
/// midpoint latitude), wrapped absolute longitude lag, and signed latitude
/// lag `lat_j - lat_i`. All ordered pairs including i = j contribute.
pub fn empirical_covariogram(
    draws: &DMatrix<f64>,
    sites: &[SpherePoint],
    band_edges: &[f64],
    bins: &CovariogramBins,
) -> Result<CovariogramTable, DiagnosticsError> {
    let n_draws = draws.nrows();
    let n_sites = draws.ncols();
    if n_draws < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "covariogram needs at least 2 draws".into(),
        ));
    }
    if n_sites != sites.len() {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "draw matrix has {n_sites} columns but {} sites given",
            sites.len()
        )));
    }
    if band_edges.len() < 2 || band_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DiagnosticsError::InvalidArgument(
            "band edges must be at least two strictly increasing latitudes".into(),
        ));
    }
    if bins.n_lon_bins == 0 || bins.n_lat_bins == 0 {
        return Err(DiagnosticsError::InvalidArgument(
            "bin counts must be positive".into(),
        ));
    }

    // Center each site's series.
    let mut centered = draws.clone();
    for j in 0..n_sites {
        let mean = (0..n_draws).map(|m| draws[(m, j)]).sum::<f64>() / n_draws as f64;
        for m in 0..n_draws {
            centered[(m, j)] -= mean;
        }
    }

    let n_bands = band_edges.len() - 1;
    let lon_width = PI / bins.n_lon_bins as f64;
    let lat_width = 2.0 * PI / bins.n_lat_bins as f64;
    let cell = |band: usize, lon: usize, lat: usize| -> usize {
        (band * bins.n_lon_bins + lon) * bins.n_lat_bins + lat
    };
    let mut sums = vec![0.0; n_bands * bins.n_lon_bins * bins.n_lat_bins];
    let mut counts = vec![0usize; sums.len()];

    let denom = (n_draws - 1) as f64;
    for i in 0..n_sites {
        for j in 0..n_sites {
            let mid_lat = 0.5 * (sites[i].lat() + sites[j].lat());
            let band = match band_index(band_edges, mid_lat) {
                Some(b) => b,
                None => continue,
            };
            let lon_lag = wrap_longitude(sites[j].lon() - sites[i].lon()).abs();
            let lat_lag = sites[j].lat() - sites[i].lat();
            let lon_bin = ((lon_lag / lon_width) as usize).min(bins.n_lon_bins - 1);
            let lat_bin = (((lat_lag + PI) / lat_width) as usize).min(bins.n_lat_bins - 1);
            let cov = (0..n_draws)
                .map(|m| centered[(m, i)] * centered[(m, j)])
                .sum::<f64>()
                / denom;
            let c = cell(band, lon_bin, lat_bin);
            sums[c] += cov;
            counts[c] += 1;
        }
    }

    let mut rows = Vec::with_capacity(sums.len());
    for band in 0..n_bands {
        for lon_bin in 0..bins.n_lon_bins {
            for lat_bin in 0..bins.n_lat_bins {
                let c = cell(band, lon_bin, lat_bin);
                rows.push(CovariogramRow {
                    band,
                    band_range: (band_edges[band], band_edges[band + 1]),
                    lon_bin,
                    lon_range: (lon_bin as f64 * lon_width, (lon_bin + 1) as f64 * lon_width),
                    lat_bin,
                    lat_range: (
                        -PI + lat_bin as f64 * lat_width,
                        -PI + (lat_bin + 1) as f64 * lat_width,
                    ),
                    covariance: if counts[c] == 0 {
                        None
                    } else {
                        Some(sums[c] / counts[c] as f64)
                    },
                    n_pairs: counts[c],
                });
            }
        }
    }
    Ok(CovariogramTable { rows })
}

fn band_index(edges: &[f64], lat: f64) -> Option<usize> {
    if lat < edges[0] {
        return None;
    }
    for (b, w) in edges.windows(2).enumerate() {
        if lat < w[1] || (b == edges.len() - 2 && lat <= w[1]) {
            return Some(b);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::simulate;
    use crate::kernels::{axisym_exp_product, KernelSpec};
    use approx::assert_relative_eq;

    fn pt(lon: f64, lat: f64) -> SpherePoint {
        SpherePoint::new(lon, lat).unwrap()
    }

    #[test]
    fn two_draws_two_sites_match_the_hand_formula() {
        let sites = [pt(0.0, 0.0), pt(0.4, 0.2)];
        let draws = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, -1.0]);
        let table = empirical_covariogram(
            &draws,
            &sites,
            &[-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
            &CovariogramBins::default(),
        )
        .unwrap();
        // Centered columns: site 0 -> (-1, 1); site 1 -> (1.5, -1.5).
        // Off-diagonal estimate: (-1 * 1.5 + 1 * -1.5) / 1 = -3.
        let off: Vec<&CovariogramRow> = table
            .rows
            .iter()
            .filter(|r| r.n_pairs > 0 && r.lon_bin > 0)
            .collect();
        assert_eq!(off.len(), 2); // both orientations of the single pair
        for row in off {
            assert_relative_eq!(row.covariance.unwrap(), -3.0, max_relative = 1e-12);
            assert_eq!(row.n_pairs, 1);
        }
        // Zero-lag cells hold the per-site variances: ((-1)^2 + 1^2)/1 = 2
        // and (1.5^2 + 1.5^2)/1 = 4.5, averaged when they share a cell.
        let zero: Vec<&CovariogramRow> = table
            .rows
            .iter()
            .filter(|r| r.n_pairs > 0 && r.lon_bin == 0)
            .collect();
        let total: f64 = zero
            .iter()
            .map(|r| r.covariance.unwrap() * r.n_pairs as f64)
            .sum();
        assert_relative_eq!(total, 2.0 + 4.5, max_relative = 1e-12);
    }

    #[test]
    fn empty_cells_are_emitted_with_zero_counts() {
        let sites = [pt(0.0, 0.0), pt(0.1, 0.0)];
        let draws = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        let bins = CovariogramBins {
            n_lon_bins: 3,
            n_lat_bins: 3,
        };
        let table = empirical_covariogram(
            &draws,
            &sites,
            &[-1.0, 0.0, 1.0],
            &bins,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 2 * 3 * 3);
        assert!(table.rows.iter().any(|r| r.n_pairs == 0 && r.covariance.is_none()));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let sites = [pt(0.0, 0.0)];
        let draws = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(empirical_covariogram(&draws, &sites, &[-1.0, 1.0], &CovariogramBins::default())
            .is_err());
        let draws = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(empirical_covariogram(&draws, &sites, &[1.0, -1.0], &CovariogramBins::default())
            .is_err());
    }

    #[test]
    fn anisotropic_field_decays_faster_in_latitude() {
        // Strongly latitude-decorrelated product: at comparable lags, the
        // mean covariance in nearly-meridional cells falls well below the
        // nearly-zonal ones.
        let spec = axisym_exp_product(1.0, 1.0, 0.1).unwrap();
        let sites = crate::geometry::generate_grid(&crate::geometry::GridSpec::Fibonacci {
            n_points: 80,
        })
        .unwrap();
        let draws = simulate(&spec, &sites, 515, 600).unwrap();
        let bins = CovariogramBins {
            n_lon_bins: 6,
            n_lat_bins: 12,
        };
        let table = empirical_covariogram(
            &draws,
            &sites,
            &[-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
            &bins,
        )
        .unwrap();
        // Lag around 0.5-1.0 rad: lon bin 1 (zonal direction, lat bin at
        // zero lag = 5 or 6) vs lat bins one step out at lon bin 0.
        let zonal = table.pooled(1, 5).or(table.pooled(1, 6)).unwrap();
        let meridional_up = table.pooled(0, 7);
        let meridional_down = table.pooled(0, 4);
        let meridional = meridional_up.or(meridional_down).unwrap();
        assert!(
            zonal > meridional + 0.05,
            "zonal {zonal} vs meridional {meridional}"
        );
    }

    #[test]
    fn isotropic_field_is_direction_blind() {
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        let sites = crate::geometry::generate_grid(&crate::geometry::GridSpec::Fibonacci {
            n_points: 80,
        })
        .unwrap();
        let draws = simulate(&spec, &sites, 99, 2000).unwrap();
        let bins = CovariogramBins {
            n_lon_bins: 6,
            n_lat_bins: 12,
        };
        let table = empirical_covariogram(
            &draws,
            &sites,
            &[-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
            &bins,
        )
        .unwrap();
        let zonal = table.pooled(1, 5).or(table.pooled(1, 6)).unwrap();
        let meridional = table.pooled(0, 7).or(table.pooled(0, 4)).unwrap();
        // Same great-circle lag scale in both directions; allow Monte Carlo
        // slack of a few standard errors.
        assert!(
            (zonal - meridional).abs() < 0.12,
            "zonal {zonal} vs meridional {meridional}"
        );
    }
}
