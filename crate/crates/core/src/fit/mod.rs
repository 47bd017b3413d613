//! Maximum-likelihood estimation of kernel parameters.
//!
//! The objective is the negative log-likelihood over a transformed parameter
//! space (see [`ParamTransform`]); the search is a derivative-free simplex
//! with seeded multi-start. Starts come from moment heuristics: sigma from
//! the sample variance, ranges from median pairwise lags, nugget at
//! 1e-3 sigma. Parameter regions where the covariance fails to factor
//! evaluate to an infinite objective, so the simplex retreats instead of
//! aborting.

mod nelder_mead;
mod transform;

pub use transform::ParamTransform;

use crate::gp::{log_likelihood, Dataset, GpError};
use crate::kernels::{KernelError, KernelSpec};
use crate::rng::SplitMix64;
use nelder_mead::{minimize, SimplexOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    UnknownParameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("every restart landed in a non-positive-definite parameter region")]
    AllRestartsFailed,
    #[error("fit results come from different datasets and cannot be ranked together")]
    MismatchedDatasets,
}

fn default_max_iters() -> usize {
    500
}
fn default_tol_f() -> f64 {
    1e-8
}
fn default_n_restarts() -> usize {
    4
}

/// Settings for [`fit_mle`]. The JSON form uses these exact field names and
/// fills omitted fields with the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol_f")]
    pub tol_f: f64,
    #[serde(default = "default_n_restarts")]
    pub n_restarts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Parameter names held at the template's values.
    #[serde(default)]
    pub fixed_params: Vec<String>,
    /// Start the first restart from the template's own parameter values
    /// instead of the moment heuristics (warm starts, nested comparisons).
    #[serde(default)]
    pub init_from_template: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            tol_f: default_tol_f(),
            n_restarts: default_n_restarts(),
            seed: 0,
            fixed_params: Vec::new(),
            init_from_template: false,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), FitError> {
        if self.max_iters == 0 {
            return Err(FitError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.tol_f <= 0.0 || self.tol_f.is_nan() {
            return Err(FitError::InvalidConfig("tol_f must be > 0".into()));
        }
        if self.n_restarts == 0 {
            return Err(FitError::InvalidConfig("n_restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one restart, kept for the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub log_likelihood: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Best point over all restarts plus the optimizer's bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_spec: KernelSpec,
    pub log_likelihood: f64,
    pub n_evals: usize,
    pub converged: bool,
    /// (iteration, best log-likelihood so far) for the winning restart.
    pub trace: Vec<(usize, f64)>,
    pub restart_results: Vec<RestartSummary>,
    /// Number of parameters that were actually optimized.
    pub n_free: usize,
    /// Fingerprint of the dataset the fit ran on; guards ranking tables.
    pub data_hash: u64,
}

/// FNV-1a over the exact bit patterns of sites and values.
pub fn dataset_fingerprint(data: &Dataset) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bits: u64| {
        for byte in bits.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        }
    };
    for (site, value) in data.sites().iter().zip(data.values()) {
        eat(site.lon().to_bits());
        eat(site.lat().to_bits());
        eat(value.to_bits());
    }
    hash
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite lags"));
    Some(values[values.len() / 2])
}

/// Moment-based starting values, clamped into each parameter's fitting box.
fn heuristic_start(template: &KernelSpec, data: &Dataset) -> Vec<f64> {
    // Cap the pairwise scan; medians stabilize long before 400 sites.
    let stride = (data.len() / 400).max(1);
    let sites: Vec<_> = data.sites().iter().step_by(stride).collect();
    let mut gc = Vec::new();
    let mut lat_lag = Vec::new();
    let mut lon_lag = Vec::new();
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            gc.push(crate::geometry::great_circle_distance(sites[i], sites[j]));
            lat_lag.push((sites[i].lat() - sites[j].lat()).abs());
            lon_lag.push(crate::geometry::wrap_longitude(sites[i].lon() - sites[j].lon()).abs());
        }
    }
    let sigma0 = data.sample_variance().max(1e-6);
    let r_gc = median(gc).unwrap_or(1.0).max(1e-3);
    let r_lat = median(lat_lag).unwrap_or(0.5).max(1e-3);
    let r_lon = median(lon_lag).unwrap_or(1.0).max(1e-3);
    template
        .param_vector()
        .iter()
        .map(|info| {
            let raw = match info.name.as_str() {
                "sigma" => sigma0,
                "r_iso" => r_gc,
                "r_phi" => r_lat,
                "r_theta" => r_lon,
                "nugget" => 1e-3 * sigma0,
                // No data-driven heuristic for shape parameters; keep the
                // template's choice.
                _ => info.value,
            };
            raw.clamp(info.lower, info.upper.min(1e12))
        })
        .collect()
}

/// Maximum-likelihood fit of `template`'s free parameters to `data`.
///
/// Restarts run independently (in parallel) from jittered copies of the
/// start point and the best final log-likelihood wins, ties resolved by
/// restart index, so the result is deterministic for a given config.
pub fn fit_mle(
    template: &KernelSpec,
    data: &Dataset,
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    config.validate()?;
    template.validate()?;
    let transform = ParamTransform::new(template, &config.fixed_params)
        .map_err(FitError::UnknownParameter)?;

    let start_values: Vec<f64> = if config.init_from_template {
        template.param_vector().iter().map(|p| p.value).collect()
    } else {
        heuristic_start(template, data)
    };
    let start = transform.encode(&start_values);

    // Fail fast on structural problems (poles under a separable kernel,
    // malformed data) before spawning restarts.
    let probe_spec = template.set_params(&transform.decode(&start))?;
    match log_likelihood(&probe_spec, data) {
        Ok(_) => {}
        Err(e) => return Err(e.into()),
    }

    let structural_error: Mutex<Option<GpError>> = Mutex::new(None);
    let objective = |coords: &[f64]| -> f64 {
        let values = transform.decode(coords);
        let spec = match template.set_params(&values) {
            Ok(s) => s,
            // Decode clamps into the boxes, so this is unreachable in
            // practice; treat it as infeasible if it ever fires.
            Err(_) => return f64::INFINITY,
        };
        match log_likelihood(&spec, data) {
            Ok(ll) if ll == f64::NEG_INFINITY => f64::INFINITY,
            Ok(ll) => -ll,
            Err(e) => {
                let mut guard = structural_error.lock().expect("objective mutex");
                guard.get_or_insert(e);
                f64::INFINITY
            }
        }
    };

    let opts = SimplexOptions {
        max_iters: config.max_iters,
        tol_f: config.tol_f,
        init_step: 0.25,
    };

    let outcomes: Vec<_> = (0..config.n_restarts)
        .into_par_iter()
        .map(|restart| {
            let x0: Vec<f64> = if restart == 0 {
                start.clone()
            } else {
                let mut rng = SplitMix64::derive(config.seed, restart as u64);
                start
                    .iter()
                    .map(|u| {
                        let (z, _) = rng.next_normal_pair();
                        u + 0.5 * z
                    })
                    .collect()
            };
            (restart, minimize(&objective, &x0, &opts))
        })
        .collect();

    if let Some(e) = structural_error.into_inner().expect("objective mutex") {
        return Err(e.into());
    }

    let summaries: Vec<RestartSummary> = outcomes
        .iter()
        .map(|(restart, out)| RestartSummary {
            restart: *restart,
            log_likelihood: -out.f,
            n_evals: out.n_evals,
            converged: out.converged,
        })
        .collect();
    let total_evals: usize = summaries.iter().map(|s| s.n_evals).sum();

    let (_, winner) = outcomes
        .iter()
        .min_by(|(ia, a), (ib, b)| {
            a.f.partial_cmp(&b.f)
                .expect("no NaN objective")
                .then(ia.cmp(ib))
        })
        .expect("n_restarts >= 1");

    if !winner.f.is_finite() {
        return Err(FitError::AllRestartsFailed);
    }

    let best_spec = template.set_params(&transform.decode(&winner.x))?;
    Ok(FitResult {
        best_spec,
        log_likelihood: -winner.f,
        n_evals: total_evals,
        converged: winner.converged,
        trace: winner.trace.iter().map(|(iter, f)| (*iter, -f)).collect(),
        restart_results: summaries,
        n_free: transform.n_free(),
        data_hash: dataset_fingerprint(data),
    })
}

/// One row of the model-comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub family: String,
    pub log_likelihood: f64,
    pub n_params: usize,
    pub aic: f64,
}

/// Ranks fitted models on the same dataset by AIC = 2k - 2 logL, ascending;
/// ties break toward fewer parameters, then family name.
pub fn profile_compare(results: &[FitResult]) -> Result<Vec<ProfileRow>, FitError> {
    if let Some((first, rest)) = results.split_first() {
        if rest.iter().any(|r| r.data_hash != first.data_hash) {
            return Err(FitError::MismatchedDatasets);
        }
    }
    let mut rows: Vec<ProfileRow> = results
        .iter()
        .map(|result| {
            let k = result.n_free;
            ProfileRow {
                family: result.best_spec.family_name().to_string(),
                log_likelihood: result.log_likelihood,
                n_params: k,
                aic: 2.0 * k as f64 - 2.0 * result.log_likelihood,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.aic
            .partial_cmp(&b.aic)
            .expect("finite AIC")
            .then(a.n_params.cmp(&b.n_params))
            .then(a.family.cmp(&b.family))
    });
    Ok(rows)
}
