//! Spherical coordinates, great-circle distance, and deterministic point-set
//! generators.
//!
//! All angles are radians; the sphere has radius 1. Degrees exist only at the
//! I/O boundary of downstream tooling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from point construction and grid generation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("latitude {0} is outside [-pi/2, pi/2]")]
    LatitudeOutOfRange(f64),
    #[error("coordinate is not finite: {0}")]
    NonFinite(f64),
    #[error("grid spec produces no points: {0}")]
    EmptyGrid(String),
    #[error("invalid grid spec: {0}")]
    InvalidGridSpec(String),
}

/// A point on the unit sphere, stored as longitude in [-pi, pi) and latitude
/// in [-pi/2, pi/2].
///
/// At the poles the longitude coordinate is meaningless; the constructor
/// normalizes the stored longitude to 0 there so that point equality and all
/// covariance evaluations are independent of how a pole was written.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpherePoint {
    lon: f64,
    lat: f64,
}

impl SpherePoint {
    /// Builds a point from longitude and latitude in radians.
    ///
    /// Longitude is wrapped modulo 2*pi into [-pi, pi); latitude must already
    /// lie in [-pi/2, pi/2].
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeometryError> {
        if !lon.is_finite() {
            return Err(GeometryError::NonFinite(lon));
        }
        if !lat.is_finite() {
            return Err(GeometryError::NonFinite(lat));
        }
        if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&lat) {
            return Err(GeometryError::LatitudeOutOfRange(lat));
        }
        let lon = if lat.abs() == std::f64::consts::FRAC_PI_2 {
            0.0
        } else {
            wrap_longitude(lon)
        };
        Ok(Self { lon, lat })
    }

    /// Builds a point from degrees, the convention of station files.
    pub fn from_degrees(lon_deg: f64, lat_deg: f64) -> Result<Self, GeometryError> {
        Self::new(lon_deg.to_radians(), lat_deg.to_radians())
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon_degrees(&self) -> f64 {
        self.lon.to_degrees()
    }

    pub fn lat_degrees(&self) -> f64 {
        self.lat.to_degrees()
    }

    /// True when the point sits exactly on a pole.
    pub fn is_pole(&self) -> bool {
        self.lat.abs() == std::f64::consts::FRAC_PI_2
    }

    /// The north pole.
    pub fn north_pole() -> Self {
        Self {
            lon: 0.0,
            lat: std::f64::consts::FRAC_PI_2,
        }
    }

    /// The south pole.
    pub fn south_pole() -> Self {
        Self {
            lon: 0.0,
            lat: -std::f64::consts::FRAC_PI_2,
        }
    }

    /// Same point rotated by `delta` radians of longitude. Latitude (and
    /// hence poles) are untouched.
    pub fn shift_lon(&self, delta: f64) -> Self {
        if self.is_pole() {
            *self
        } else {
            Self {
                lon: wrap_longitude(self.lon + delta),
                lat: self.lat,
            }
        }
    }
}

impl PartialEq for SpherePoint {
    /// Exact coordinate equality. Poles compare equal regardless of the
    /// longitude they were written with (the constructor normalizes it).
    fn eq(&self, other: &Self) -> bool {
        self.lon == other.lon && self.lat == other.lat
    }
}

/// Wraps a longitude into [-pi, pi). Values already in range are returned
/// bit-exactly; pi maps to -pi.
pub fn wrap_longitude(lon: f64) -> f64 {
    use std::f64::consts::PI;
    if (-PI..PI).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi - eps -> wrapped == pi.
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Great-circle distance on the unit sphere, in [0, pi].
///
/// The spherical law of cosines argument is clamped to [-1, 1]; round-off can
/// push it just outside for near-coincident or near-antipodal points.
/// Coincident points short-circuit to exactly 0 (sin^2 + cos^2 does not
/// always round back to 1).
pub fn great_circle_distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    if x == y {
        return 0.0;
    }
    let inner = x.lat.sin() * y.lat.sin() + x.lat.cos() * y.lat.cos() * (y.lon - x.lon).cos();
    inner.clamp(-1.0, 1.0).acos()
}

/// A point in the Euclidean plane, used by the anisotropic reference kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() {
            return Err(GeometryError::NonFinite(x));
        }
        if !y.is_finite() {
            return Err(GeometryError::NonFinite(y));
        }
        Ok(Self { x, y })
    }
}

/// Deterministic point-set layouts on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `n_lat` rings equally spaced in latitude (poles excluded), each with
    /// `n_lon` equally spaced longitudes starting at -pi.
    RegularLonLat { n_lat: usize, n_lon: usize },
    /// `n_lat` rings equally spaced in latitude plus one point at each pole;
    /// the per-ring longitude count scales with cos(lat) to approximate the
    /// target arc spacing (radians on the unit sphere), with a floor of 4
    /// points per ring.
    ReducedGaussianLike { n_lat: usize, target_spacing: f64 },
    /// Fibonacci-lattice layout with `n_points` points.
    Fibonacci { n_points: usize },
}

impl GridSpec {
    fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            GridSpec::RegularLonLat { n_lat, n_lon } => {
                if n_lat == 0 || n_lon == 0 {
                    return Err(GeometryError::EmptyGrid(format!(
                        "regular grid needs n_lat >= 1 and n_lon >= 1, got {n_lat}x{n_lon}"
                    )));
                }
            }
            GridSpec::ReducedGaussianLike {
                n_lat,
                target_spacing,
            } => {
                if n_lat == 0 {
                    return Err(GeometryError::EmptyGrid(
                        "reduced grid needs n_lat >= 1".to_string(),
                    ));
                }
                if target_spacing <= 0.0 || !target_spacing.is_finite() {
                    return Err(GeometryError::InvalidGridSpec(format!(
                        "target spacing must be positive and finite, got {target_spacing}"
                    )));
                }
            }
            GridSpec::Fibonacci { n_points } => {
                if n_points == 0 {
                    return Err(GeometryError::EmptyGrid(
                        "fibonacci grid needs n_points >= 1".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Interior ring latitudes shared by the regular and reduced layouts:
/// `n_lat` values equally spaced in (-pi/2, pi/2).
fn ring_latitudes(n_lat: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let step = PI / (n_lat as f64 + 1.0);
    (0..n_lat).map(|i| -PI / 2.0 + (i as f64 + 1.0) * step).collect()
}

/// Generates the point set described by `spec`. Output order and values are
/// deterministic; no duplicates are produced.
pub fn generate_grid(spec: &GridSpec) -> Result<Vec<SpherePoint>, GeometryError> {
    use std::f64::consts::PI;
    spec.validate()?;
    let mut points = Vec::new();
    match *spec {
        GridSpec::RegularLonLat { n_lat, n_lon } => {
            let lon_step = 2.0 * PI / n_lon as f64;
            for lat in ring_latitudes(n_lat) {
                for j in 0..n_lon {
                    let lon = -PI + j as f64 * lon_step;
                    points.push(SpherePoint::new(lon, lat)?);
                }
            }
        }
        GridSpec::ReducedGaussianLike {
            n_lat,
            target_spacing,
        } => {
            points.push(SpherePoint::south_pole());
            for lat in ring_latitudes(n_lat) {
                // Ring circumference over target spacing, with a small slack
                // so that exact multiples are not pushed up by round-off.
                let ideal = 2.0 * PI * lat.cos() / target_spacing;
                let count = ((ideal - 1e-9).ceil() as usize).max(4);
                let lon_step = 2.0 * PI / count as f64;
                for j in 0..count {
                    points.push(SpherePoint::new(-PI + j as f64 * lon_step, lat)?);
                }
            }
            points.push(SpherePoint::north_pole());
        }
        GridSpec::Fibonacci { n_points } => {
            // Golden-angle lattice: near-uniform area coverage for any count.
            let golden_angle = PI * (3.0 - 5.0_f64.sqrt());
            let n = n_points as f64;
            for i in 0..n_points {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n;
                let lat = z.asin();
                let lon = wrap_longitude(i as f64 * golden_angle);
                points.push(SpherePoint::new(lon, lat)?);
            }
        }
    }
    Ok(points)
}
