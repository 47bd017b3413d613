//! Parametric covariance functions on the sphere.
//!
//! Families fall into three groups:
//!
//! * isotropic in great-circle distance: `iso_exponential`,
//!   `iso_powered_exponential`, `iso_spherical`, `chordal_matern`;
//! * latitude-only correlations: `lat_exponential`,
//!   `lat_powered_exponential` (unit variance by construction);
//! * composites: `axisym_product` (isotropic child times latitude child,
//!   longitude-stationary and continuous across the poles),
//!   `separable_lonlat` (longitude-lag times latitude-lag baseline, undefined
//!   at the poles), and `euclidean_aniso_exp` (planar reference kernel).
//!
//! Every top-level covariance carries a nugget `tau^2 >= 0` that is added at
//! exact point coincidence; latitude kernels are correlations and carry
//! neither a variance nor a nugget. Parameter names used in JSON,
//! `param_vector`, and `fixed_params` are `sigma`, `r_iso`, `r_phi`,
//! `r_theta`, `r1`, `r2`, `alpha`, `nu`, `nugget` (`lat_alpha` for the
//! latitude child's exponent inside a product).

mod matern;

pub use matern::{bessel_k, matern_correlation};

use crate::geometry::{great_circle_distance, Point2D, SpherePoint};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

/// Fitting box for the variance scale.
pub const SIGMA_BOUNDS: (f64, f64) = (1e-8, 1e8);
/// Fitting box for every range parameter, in radians.
pub const RANGE_BOUNDS: (f64, f64) = (1e-4, 1e4);
/// Fitting box for powered-exponential exponents; the model constraint is
/// alpha in (0, 1].
pub const ALPHA_BOUNDS: (f64, f64) = (1e-6, 1.0);
/// Fitting box for Matern smoothness.
pub const NU_BOUNDS: (f64, f64) = (0.05, 5.0);
/// The nugget may grow up to this multiple of sigma during fitting.
pub const NUGGET_SIGMA_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("covariance undefined at pole: the separable longitude/latitude kernel has no value there")]
    UndefinedAtPole,
    #[error("{family} is not an isotropic family")]
    NotIsotropic { family: &'static str },
    #[error("{family} is not a latitude family")]
    NotLatitude { family: &'static str },
    #[error("{family} cannot be evaluated on {context}")]
    WrongDomain {
        family: &'static str,
        context: &'static str,
    },
    #[error("latitude {0} is outside [-pi/2, pi/2]")]
    LatitudeOutOfRange(f64),
    #[error("invalid parameter {name}={value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("parameter {name}={value} outside bounds [{lower}, {upper}]")]
    OutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("expected {expected} parameter values, got {got}")]
    ParamLengthMismatch { expected: usize, got: usize },
    #[error("axisym_product needs an isotropic child and a latitude child")]
    InvalidChildFamily,
    #[error("axisym_product children carry no nugget of their own")]
    ChildNugget,
    #[error("unknown kernel family \"{0}\"")]
    UnknownFamily(String),
    #[error("family {family} is missing parameter \"{name}\"")]
    MissingParameter { family: String, name: String },
    #[error("family {family} does not take parameter \"{name}\"")]
    UnexpectedParameter { family: String, name: String },
    #[error("family {family} expects {expected} children, got {got}")]
    WrongChildCount {
        family: String,
        expected: usize,
        got: usize,
    },
}

/// A covariance family with its parameters. See the module docs for the
/// catalogue and parameter names.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    IsoExponential {
        sigma: f64,
        r_iso: f64,
        nugget: f64,
    },
    IsoPoweredExponential {
        sigma: f64,
        r_iso: f64,
        alpha: f64,
        nugget: f64,
    },
    IsoSpherical {
        sigma: f64,
        r_iso: f64,
        nugget: f64,
    },
    ChordalMatern {
        sigma: f64,
        r_iso: f64,
        nu: f64,
        nugget: f64,
    },
    LatExponential {
        r_phi: f64,
    },
    LatPoweredExponential {
        r_phi: f64,
        alpha: f64,
    },
    AxisymProduct {
        iso: Box<KernelSpec>,
        lat: Box<KernelSpec>,
        nugget: f64,
    },
    SeparableLonLat {
        sigma: f64,
        r_theta: f64,
        r_phi: f64,
        nugget: f64,
    },
    EuclideanAnisoExp {
        sigma: f64,
        r1: f64,
        r2: f64,
        nugget: f64,
    },
}

/// One entry of the flattened parameter vector: current value plus the
/// fitting box it must stay inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<(), KernelError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(KernelError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

fn check_nugget(value: f64) -> Result<(), KernelError> {
    if !value.is_finite() || value < 0.0 {
        return Err(KernelError::InvalidParameter {
            name: "nugget",
            value,
            reason: "must be nonnegative and finite",
        });
    }
    Ok(())
}

fn check_alpha(value: f64) -> Result<(), KernelError> {
    if !value.is_finite() || value <= 0.0 || value > 1.0 {
        return Err(KernelError::InvalidParameter {
            name: "alpha",
            value,
            reason: "must lie in (0, 1]",
        });
    }
    Ok(())
}

impl KernelSpec {
    // Convenience constructors; all of them validate.

    pub fn iso_exponential(sigma: f64, r_iso: f64) -> Result<Self, KernelError> {
        let spec = Self::IsoExponential {
            sigma,
            r_iso,
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn iso_powered_exponential(sigma: f64, r_iso: f64, alpha: f64) -> Result<Self, KernelError> {
        let spec = Self::IsoPoweredExponential {
            sigma,
            r_iso,
            alpha,
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn iso_spherical(sigma: f64, r_iso: f64) -> Result<Self, KernelError> {
        let spec = Self::IsoSpherical {
            sigma,
            r_iso,
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn chordal_matern(sigma: f64, r_iso: f64, nu: f64) -> Result<Self, KernelError> {
        let spec = Self::ChordalMatern {
            sigma,
            r_iso,
            nu,
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lat_exponential(r_phi: f64) -> Result<Self, KernelError> {
        let spec = Self::LatExponential { r_phi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lat_powered_exponential(r_phi: f64, alpha: f64) -> Result<Self, KernelError> {
        let spec = Self::LatPoweredExponential { r_phi, alpha };
        spec.validate()?;
        Ok(spec)
    }

    /// The product construction: an isotropic covariance times a latitude
    /// correlation, longitude-stationary and continuous across the poles.
    pub fn axisym_product(iso: KernelSpec, lat: KernelSpec) -> Result<Self, KernelError> {
        let spec = Self::AxisymProduct {
            iso: Box::new(iso),
            lat: Box::new(lat),
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn separable_lonlat(sigma: f64, r_theta: f64, r_phi: f64) -> Result<Self, KernelError> {
        let spec = Self::SeparableLonLat {
            sigma,
            r_theta,
            r_phi,
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn euclidean_aniso_exp(sigma: f64, r1: f64, r2: f64) -> Result<Self, KernelError> {
        let spec = Self::EuclideanAnisoExp {
            sigma,
            r1,
            r2,
            nugget: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same spec with the nugget replaced.
    pub fn with_nugget(mut self, nugget: f64) -> Result<Self, KernelError> {
        check_nugget(nugget)?;
        match &mut self {
            Self::IsoExponential { nugget: n, .. }
            | Self::IsoPoweredExponential { nugget: n, .. }
            | Self::IsoSpherical { nugget: n, .. }
            | Self::ChordalMatern { nugget: n, .. }
            | Self::AxisymProduct { nugget: n, .. }
            | Self::SeparableLonLat { nugget: n, .. }
            | Self::EuclideanAnisoExp { nugget: n, .. } => *n = nugget,
            Self::LatExponential { .. } | Self::LatPoweredExponential { .. } => {
                return Err(KernelError::InvalidParameter {
                    name: "nugget",
                    value: nugget,
                    reason: "latitude kernels are correlations and take no nugget",
                })
            }
        }
        Ok(self)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::IsoExponential { .. } => "iso_exponential",
            Self::IsoPoweredExponential { .. } => "iso_powered_exponential",
            Self::IsoSpherical { .. } => "iso_spherical",
            Self::ChordalMatern { .. } => "chordal_matern",
            Self::LatExponential { .. } => "lat_exponential",
            Self::LatPoweredExponential { .. } => "lat_powered_exponential",
            Self::AxisymProduct { .. } => "axisym_product",
            Self::SeparableLonLat { .. } => "separable_lonlat",
            Self::EuclideanAnisoExp { .. } => "euclidean_aniso_exp",
        }
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(
            self,
            Self::IsoExponential { .. }
                | Self::IsoPoweredExponential { .. }
                | Self::IsoSpherical { .. }
                | Self::ChordalMatern { .. }
        )
    }

    pub fn is_latitude(&self) -> bool {
        matches!(
            self,
            Self::LatExponential { .. } | Self::LatPoweredExponential { .. }
        )
    }

    /// True for the separable baseline, which has no value at the poles.
    pub fn excludes_poles(&self) -> bool {
        matches!(self, Self::SeparableLonLat { .. })
    }

    /// Checks the parameter invariants (positivity, exponent ranges, child
    /// families). Enum fields are freely constructible, so evaluation entry
    /// points call this.
    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            Self::IsoExponential { sigma, r_iso, nugget }
            | Self::IsoSpherical { sigma, r_iso, nugget } => {
                check_positive("sigma", *sigma)?;
                check_positive("r_iso", *r_iso)?;
                check_nugget(*nugget)
            }
            Self::IsoPoweredExponential {
                sigma,
                r_iso,
                alpha,
                nugget,
            } => {
                check_positive("sigma", *sigma)?;
                check_positive("r_iso", *r_iso)?;
                check_alpha(*alpha)?;
                check_nugget(*nugget)
            }
            Self::ChordalMatern {
                sigma,
                r_iso,
                nu,
                nugget,
            } => {
                check_positive("sigma", *sigma)?;
                check_positive("r_iso", *r_iso)?;
                check_positive("nu", *nu)?;
                check_nugget(*nugget)
            }
            Self::LatExponential { r_phi } => check_positive("r_phi", *r_phi),
            Self::LatPoweredExponential { r_phi, alpha } => {
                check_positive("r_phi", *r_phi)?;
                check_alpha(*alpha)
            }
            Self::AxisymProduct { iso, lat, nugget } => {
                if !iso.is_isotropic() || !lat.is_latitude() {
                    return Err(KernelError::InvalidChildFamily);
                }
                if iso.nugget() != 0.0 {
                    return Err(KernelError::ChildNugget);
                }
                iso.validate()?;
                lat.validate()?;
                check_nugget(*nugget)
            }
            Self::SeparableLonLat {
                sigma,
                r_theta,
                r_phi,
                nugget,
            } => {
                check_positive("sigma", *sigma)?;
                check_positive("r_theta", *r_theta)?;
                check_positive("r_phi", *r_phi)?;
                check_nugget(*nugget)
            }
            Self::EuclideanAnisoExp {
                sigma,
                r1,
                r2,
                nugget,
            } => {
                check_positive("sigma", *sigma)?;
                check_positive("r1", *r1)?;
                check_positive("r2", *r2)?;
                check_nugget(*nugget)
            }
        }
    }

    /// The variance at zero lag, excluding the nugget. 1 for latitude
    /// correlations; the isotropic child's sigma for products.
    pub fn variance_scale(&self) -> f64 {
        match self {
            Self::IsoExponential { sigma, .. }
            | Self::IsoPoweredExponential { sigma, .. }
            | Self::IsoSpherical { sigma, .. }
            | Self::ChordalMatern { sigma, .. }
            | Self::SeparableLonLat { sigma, .. }
            | Self::EuclideanAnisoExp { sigma, .. } => *sigma,
            Self::LatExponential { .. } | Self::LatPoweredExponential { .. } => 1.0,
            Self::AxisymProduct { iso, .. } => iso.variance_scale(),
        }
    }

    pub fn nugget(&self) -> f64 {
        match self {
            Self::IsoExponential { nugget, .. }
            | Self::IsoPoweredExponential { nugget, .. }
            | Self::IsoSpherical { nugget, .. }
            | Self::ChordalMatern { nugget, .. }
            | Self::AxisymProduct { nugget, .. }
            | Self::SeparableLonLat { nugget, .. }
            | Self::EuclideanAnisoExp { nugget, .. } => *nugget,
            Self::LatExponential { .. } | Self::LatPoweredExponential { .. } => 0.0,
        }
    }

    /// Isotropic correlation g(d) with g(0) = 1, for isotropic families only.
    pub fn iso_correlation(&self, d: f64) -> Result<f64, KernelError> {
        match self {
            Self::IsoExponential { r_iso, .. } => Ok((-d / r_iso).exp()),
            Self::IsoPoweredExponential { r_iso, alpha, .. } => {
                Ok((-(d / r_iso).powf(*alpha)).exp())
            }
            Self::IsoSpherical { r_iso, .. } => {
                let t = d / r_iso;
                if t < 1.0 {
                    Ok(1.0 - 1.5 * t + 0.5 * t * t * t)
                } else {
                    Ok(0.0)
                }
            }
            Self::ChordalMatern { r_iso, nu, .. } => {
                let chordal = 2.0 * (0.5 * d).sin();
                Ok(matern_correlation(*nu, (2.0 * nu).sqrt() * chordal / r_iso))
            }
            other => Err(KernelError::NotIsotropic {
                family: other.family_name(),
            }),
        }
    }

    /// sigma * g(d(x, y)) for isotropic families.
    pub fn eval_iso(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
        self.validate()?;
        let d = great_circle_distance(x, y);
        Ok(self.variance_scale() * self.iso_correlation(d)?)
    }

    /// Latitude correlation in (0, 1], for latitude families only.
    pub fn eval_lat(&self, lat_x: f64, lat_y: f64) -> Result<f64, KernelError> {
        self.validate()?;
        for lat in [lat_x, lat_y] {
            if !lat.is_finite() || lat.abs() > std::f64::consts::FRAC_PI_2 {
                return Err(KernelError::LatitudeOutOfRange(lat));
            }
        }
        let lag = (lat_x - lat_y).abs();
        match self {
            Self::LatExponential { r_phi } => Ok((-lag / r_phi).exp()),
            Self::LatPoweredExponential { r_phi, alpha } => Ok((-(lag / r_phi).powf(*alpha)).exp()),
            other => Err(KernelError::NotLatitude {
                family: other.family_name(),
            }),
        }
    }

    /// The separable longitude/latitude baseline. Errors when either point
    /// sits on a pole, where the longitude lag has no meaning.
    pub fn eval_separable(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
        match self {
            Self::SeparableLonLat {
                sigma,
                r_theta,
                r_phi,
                ..
            } => {
                self.validate()?;
                if x.is_pole() || y.is_pole() {
                    return Err(KernelError::UndefinedAtPole);
                }
                // Fold the raw difference into [0, pi]; |t| = |-t| keeps the
                // lag exactly symmetric in the two arguments.
                let mut lon_lag = (y.lon() - x.lon()).abs();
                if lon_lag > std::f64::consts::PI {
                    lon_lag = 2.0 * std::f64::consts::PI - lon_lag;
                }
                let lat_lag = (y.lat() - x.lat()).abs();
                Ok(sigma * (-lat_lag / r_phi).exp() * (-lon_lag / r_theta).exp())
            }
            other => Err(KernelError::WrongDomain {
                family: other.family_name(),
                context: "the separable evaluator",
            }),
        }
    }

    /// The planar anisotropic reference kernel.
    pub fn eval_euclidean(&self, x: &Point2D, y: &Point2D) -> Result<f64, KernelError> {
        match self {
            Self::EuclideanAnisoExp { sigma, r1, r2, .. } => {
                self.validate()?;
                Ok(sigma
                    * (-(x.x - y.x).abs() / r1).exp()
                    * (-(x.y - y.y).abs() / r2).exp())
            }
            other => Err(KernelError::WrongDomain {
                family: other.family_name(),
                context: "Euclidean points",
            }),
        }
    }

    /// Covariance of the latent field between two sphere points: the family
    /// value without any nugget contribution.
    pub fn latent_cov(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
        match self {
            Self::IsoExponential { .. }
            | Self::IsoPoweredExponential { .. }
            | Self::IsoSpherical { .. }
            | Self::ChordalMatern { .. } => self.eval_iso(x, y),
            Self::LatExponential { .. } | Self::LatPoweredExponential { .. } => {
                self.eval_lat(x.lat(), y.lat())
            }
            Self::AxisymProduct { iso, lat, .. } => {
                self.validate()?;
                Ok(iso.eval_iso(x, y)? * lat.eval_lat(x.lat(), y.lat())?)
            }
            Self::SeparableLonLat { .. } => self.eval_separable(x, y),
            Self::EuclideanAnisoExp { .. } => Err(KernelError::WrongDomain {
                family: self.family_name(),
                context: "sphere points",
            }),
        }
    }

    /// Full covariance between two sphere points: the latent value plus the
    /// nugget at exact (pole-aware) point coincidence.
    pub fn eval(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
        let base = self.latent_cov(x, y)?;
        if x == y {
            Ok(base + self.nugget())
        } else {
            Ok(base)
        }
    }

    /// Flattens the parameters into a documented fixed order with their
    /// fitting boxes. Products expose the isotropic child's parameters, then
    /// the latitude child's, then the nugget; for the exponential product
    /// this is (sigma, r_iso, r_phi, nugget).
    pub fn param_vector(&self) -> Vec<ParamInfo> {
        let p = |name: &str, value: f64, (lower, upper): (f64, f64)| ParamInfo {
            name: name.to_string(),
            value,
            lower,
            upper,
        };
        let nugget_info = |value: f64, sigma: f64| ParamInfo {
            name: "nugget".to_string(),
            value,
            lower: 0.0,
            upper: NUGGET_SIGMA_FACTOR * sigma,
        };
        match self {
            Self::IsoExponential { sigma, r_iso, nugget }
            | Self::IsoSpherical { sigma, r_iso, nugget } => vec![
                p("sigma", *sigma, SIGMA_BOUNDS),
                p("r_iso", *r_iso, RANGE_BOUNDS),
                nugget_info(*nugget, *sigma),
            ],
            Self::IsoPoweredExponential {
                sigma,
                r_iso,
                alpha,
                nugget,
            } => vec![
                p("sigma", *sigma, SIGMA_BOUNDS),
                p("r_iso", *r_iso, RANGE_BOUNDS),
                p("alpha", *alpha, ALPHA_BOUNDS),
                nugget_info(*nugget, *sigma),
            ],
            Self::ChordalMatern {
                sigma,
                r_iso,
                nu,
                nugget,
            } => vec![
                p("sigma", *sigma, SIGMA_BOUNDS),
                p("r_iso", *r_iso, RANGE_BOUNDS),
                p("nu", *nu, NU_BOUNDS),
                nugget_info(*nugget, *sigma),
            ],
            Self::LatExponential { r_phi } => vec![p("r_phi", *r_phi, RANGE_BOUNDS)],
            Self::LatPoweredExponential { r_phi, alpha } => vec![
                p("r_phi", *r_phi, RANGE_BOUNDS),
                p("alpha", *alpha, ALPHA_BOUNDS),
            ],
            Self::AxisymProduct { iso, lat, nugget } => {
                let mut out = Vec::new();
                for info in iso.param_vector() {
                    if info.name != "nugget" {
                        out.push(info);
                    }
                }
                for mut info in lat.param_vector() {
                    if info.name == "alpha" {
                        info.name = "lat_alpha".to_string();
                    }
                    out.push(info);
                }
                out.push(nugget_info(*nugget, iso.variance_scale()));
                out
            }
            Self::SeparableLonLat {
                sigma,
                r_theta,
                r_phi,
                nugget,
            } => vec![
                p("sigma", *sigma, SIGMA_BOUNDS),
                p("r_theta", *r_theta, RANGE_BOUNDS),
                p("r_phi", *r_phi, RANGE_BOUNDS),
                nugget_info(*nugget, *sigma),
            ],
            Self::EuclideanAnisoExp { sigma, r1, r2, nugget } => vec![
                p("sigma", *sigma, SIGMA_BOUNDS),
                p("r1", *r1, RANGE_BOUNDS),
                p("r2", *r2, RANGE_BOUNDS),
                nugget_info(*nugget, *sigma),
            ],
        }
    }

    /// Rebuilds the spec from a full value vector in `param_vector` order,
    /// enforcing the fitting boxes. `set_params(param_vector().values)` is
    /// the identity.
    pub fn set_params(&self, values: &[f64]) -> Result<Self, KernelError> {
        let slots = self.param_vector();
        if values.len() != slots.len() {
            return Err(KernelError::ParamLengthMismatch {
                expected: slots.len(),
                got: values.len(),
            });
        }
        // The nugget box tracks the sigma being set, not the old one.
        let new_sigma = slots
            .iter()
            .zip(values)
            .find(|(info, _)| info.name == "sigma")
            .map(|(_, v)| *v);
        for (info, &value) in slots.iter().zip(values) {
            let upper = if info.name == "nugget" {
                new_sigma.map_or(info.upper, |s| NUGGET_SIGMA_FACTOR * s)
            } else {
                info.upper
            };
            if !value.is_finite() || value < info.lower || value > upper {
                return Err(KernelError::OutOfBounds {
                    name: info.name.clone(),
                    value,
                    lower: info.lower,
                    upper,
                });
            }
        }
        let mut spec = self.clone();
        spec.assign_params(values);
        spec.validate()?;
        Ok(spec)
    }

    fn assign_params(&mut self, values: &[f64]) {
        match self {
            Self::IsoExponential { sigma, r_iso, nugget }
            | Self::IsoSpherical { sigma, r_iso, nugget } => {
                *sigma = values[0];
                *r_iso = values[1];
                *nugget = values[2];
            }
            Self::IsoPoweredExponential {
                sigma,
                r_iso,
                alpha,
                nugget,
            } => {
                *sigma = values[0];
                *r_iso = values[1];
                *alpha = values[2];
                *nugget = values[3];
            }
            Self::ChordalMatern {
                sigma,
                r_iso,
                nu,
                nugget,
            } => {
                *sigma = values[0];
                *r_iso = values[1];
                *nu = values[2];
                *nugget = values[3];
            }
            Self::LatExponential { r_phi } => *r_phi = values[0],
            Self::LatPoweredExponential { r_phi, alpha } => {
                *r_phi = values[0];
                *alpha = values[1];
            }
            Self::AxisymProduct { iso, lat, nugget } => {
                let n_iso = iso.param_vector().len() - 1; // child nugget not exposed
                let n_lat = lat.param_vector().len();
                let mut iso_values: Vec<f64> = values[..n_iso].to_vec();
                iso_values.push(0.0);
                iso.assign_params(&iso_values);
                lat.assign_params(&values[n_iso..n_iso + n_lat]);
                *nugget = values[n_iso + n_lat];
            }
            Self::SeparableLonLat {
                sigma,
                r_theta,
                r_phi,
                nugget,
            } => {
                *sigma = values[0];
                *r_theta = values[1];
                *r_phi = values[2];
                *nugget = values[3];
            }
            Self::EuclideanAnisoExp { sigma, r1, r2, nugget } => {
                *sigma = values[0];
                *r1 = values[1];
                *r2 = values[2];
                *nugget = values[3];
            }
        }
    }
}

/// Builds the exponential product covariance
/// sigma * exp(-d/r_iso) * exp(-|lat lag|/r_phi).
pub fn axisym_exp_product(sigma: f64, r_iso: f64, r_phi: f64) -> Result<KernelSpec, KernelError> {
    KernelSpec::axisym_product(
        KernelSpec::iso_exponential(sigma, r_iso)?,
        KernelSpec::lat_exponential(r_phi)?,
    )
}

// JSON wire form: {"family": ..., "params": {...}, "children": [...]}.

#[derive(Serialize, Deserialize)]
struct KernelDto {
    family: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<KernelDto>,
}

impl From<&KernelSpec> for KernelDto {
    fn from(spec: &KernelSpec) -> Self {
        let mut params = BTreeMap::new();
        let mut children = Vec::new();
        match spec {
            KernelSpec::AxisymProduct { iso, lat, nugget } => {
                params.insert("nugget".to_string(), *nugget);
                children.push(KernelDto::from(iso.as_ref()));
                children.push(KernelDto::from(lat.as_ref()));
            }
            other => {
                for info in other.param_vector() {
                    params.insert(info.name, info.value);
                }
            }
        }
        KernelDto {
            family: spec.family_name().to_string(),
            params,
            children,
        }
    }
}

fn take_param(
    params: &mut BTreeMap<String, f64>,
    family: &str,
    name: &str,
) -> Result<f64, KernelError> {
    params.remove(name).ok_or_else(|| KernelError::MissingParameter {
        family: family.to_string(),
        name: name.to_string(),
    })
}

fn take_nugget(params: &mut BTreeMap<String, f64>) -> f64 {
    params.remove("nugget").unwrap_or(0.0)
}

impl TryFrom<KernelDto> for KernelSpec {
    type Error = KernelError;

    fn try_from(mut dto: KernelDto) -> Result<Self, KernelError> {
        let family = dto.family.clone();
        let expect_children = |n: usize| -> Result<(), KernelError> {
            if dto.children.len() != n {
                Err(KernelError::WrongChildCount {
                    family: family.clone(),
                    expected: n,
                    got: dto.children.len(),
                })
            } else {
                Ok(())
            }
        };
        let spec = match family.as_str() {
            "iso_exponential" => {
                expect_children(0)?;
                KernelSpec::IsoExponential {
                    sigma: take_param(&mut dto.params, &family, "sigma")?,
                    r_iso: take_param(&mut dto.params, &family, "r_iso")?,
                    nugget: take_nugget(&mut dto.params),
                }
            }
            "iso_powered_exponential" => {
                expect_children(0)?;
                KernelSpec::IsoPoweredExponential {
                    sigma: take_param(&mut dto.params, &family, "sigma")?,
                    r_iso: take_param(&mut dto.params, &family, "r_iso")?,
                    alpha: take_param(&mut dto.params, &family, "alpha")?,
                    nugget: take_nugget(&mut dto.params),
                }
            }
            "iso_spherical" => {
                expect_children(0)?;
                KernelSpec::IsoSpherical {
                    sigma: take_param(&mut dto.params, &family, "sigma")?,
                    r_iso: take_param(&mut dto.params, &family, "r_iso")?,
                    nugget: take_nugget(&mut dto.params),
                }
            }
            "chordal_matern" => {
                expect_children(0)?;
                KernelSpec::ChordalMatern {
                    sigma: take_param(&mut dto.params, &family, "sigma")?,
                    r_iso: take_param(&mut dto.params, &family, "r_iso")?,
                    nu: take_param(&mut dto.params, &family, "nu")?,
                    nugget: take_nugget(&mut dto.params),
                }
            }
            "lat_exponential" => {
                expect_children(0)?;
                KernelSpec::LatExponential {
                    r_phi: take_param(&mut dto.params, &family, "r_phi")?,
                }
            }
            "lat_powered_exponential" => {
                expect_children(0)?;
                KernelSpec::LatPoweredExponential {
                    r_phi: take_param(&mut dto.params, &family, "r_phi")?,
                    alpha: take_param(&mut dto.params, &family, "alpha")?,
                }
            }
            "axisym_product" => {
                expect_children(2)?;
                let lat = dto.children.pop().expect("checked length");
                let iso = dto.children.pop().expect("checked length");
                KernelSpec::AxisymProduct {
                    iso: Box::new(KernelSpec::try_from(iso)?),
                    lat: Box::new(KernelSpec::try_from(lat)?),
                    nugget: take_nugget(&mut dto.params),
                }
            }
            "separable_lonlat" => {
                expect_children(0)?;
                KernelSpec::SeparableLonLat {
                    sigma: take_param(&mut dto.params, &family, "sigma")?,
                    r_theta: take_param(&mut dto.params, &family, "r_theta")?,
                    r_phi: take_param(&mut dto.params, &family, "r_phi")?,
                    nugget: take_nugget(&mut dto.params),
                }
            }
            "euclidean_aniso_exp" => {
                expect_children(0)?;
                KernelSpec::EuclideanAnisoExp {
                    sigma: take_param(&mut dto.params, &family, "sigma")?,
                    r1: take_param(&mut dto.params, &family, "r1")?,
                    r2: take_param(&mut dto.params, &family, "r2")?,
                    nugget: take_nugget(&mut dto.params),
                }
            }
            _ => return Err(KernelError::UnknownFamily(family)),
        };
        if let Some(name) = dto.params.keys().next() {
            return Err(KernelError::UnexpectedParameter {
                family: spec.family_name().to_string(),
                name: name.clone(),
            });
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for KernelSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        KernelDto::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = KernelDto::deserialize(deserializer)?;
        KernelSpec::try_from(dto).map_err(D::Error::custom)
    }
}
