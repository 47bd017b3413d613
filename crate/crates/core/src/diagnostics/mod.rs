//! Empirical verification of the covariance properties the toolkit relies
//! on — positive definiteness, axial symmetry, latitudinal reversibility,
//! continuity at the poles — plus hold-out cross-validation scoring.
//!
//! Checks accept anything implementing [`CovarianceFn`], so test suites can
//! probe deliberately broken kernels (negative controls) alongside the real
//! families. All randomness is derived from the caller's seed; re-running a
//! check reproduces its report bit for bit.

mod covariogram;
mod scores;

pub use covariogram::{empirical_covariogram, CovariogramBins, CovariogramRow, CovariogramTable};
pub use scores::{gaussian_crps, gaussian_log_score};

use crate::fit::{fit_mle, FitConfig, FitError};
use crate::gp::{build_model, Dataset, GpError, JitterPolicy};
use crate::kernels::{KernelError, KernelSpec, ALPHA_BOUNDS};
use crate::rng::SplitMix64;
use crate::geometry::SpherePoint;
use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// A covariance on sphere points. Implemented by [`KernelSpec`]; tests
/// implement it for hand-built kernels that intentionally violate a
/// property.
pub trait CovarianceFn: Sync {
    fn cov(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError>;

    /// Variance scale for scale-relative thresholds.
    fn scale(&self) -> f64 {
        1.0
    }

    fn label(&self) -> String {
        "custom".to_string()
    }
}

impl CovarianceFn for KernelSpec {
    fn cov(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
        self.eval(x, y)
    }

    fn scale(&self) -> f64 {
        self.variance_scale()
    }

    fn label(&self) -> String {
        self.family_name().to_string()
    }
}

/// Worst-case configuration found by a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub description: String,
    pub value: f64,
}

/// Outcome of one check. `passed` holds exactly when the statistic is on
/// the passing side of the threshold; the direction is documented per check
/// (counts and deviations pass when `statistic <= threshold`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub check_name: String,
    pub passed: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub details: Vec<Witness>,
}

impl std::fmt::Display for DiagnosticReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<28} {:>6} statistic={:<12.3e} threshold={:<12.3e}",
            self.check_name,
            if self.passed { "pass" } else { "FAIL" },
            self.statistic,
            self.threshold
        )?;
        for w in &self.details {
            writeln!(f, "    {:<60} {:.6e}", w.description, w.value)?;
        }
        Ok(())
    }
}

const MAX_WITNESSES: usize = 5;

fn keep_worst(witnesses: &mut Vec<Witness>) {
    witnesses.sort_by(|a, b| b.value.partial_cmp(&a.value).expect("finite witnesses"));
    witnesses.truncate(MAX_WITNESSES);
}

/// Random valid parameters for a template: sigma log-uniform in [0.1, 10],
/// ranges log-uniform in [0.05, 5] radians, exponents uniform in [0.3, 1],
/// smoothness log-uniform in [0.1, 3]; the nugget stays at the template's
/// value.
pub fn randomize_params(template: &KernelSpec, rng: &mut SplitMix64) -> KernelSpec {
    let values: Vec<f64> = template
        .param_vector()
        .iter()
        .map(|info| match info.name.as_str() {
            "sigma" => rng.next_log_range(0.1, 10.0),
            "alpha" | "lat_alpha" => rng.next_range(0.3, 1.0).min(ALPHA_BOUNDS.1),
            "nu" => rng.next_log_range(0.1, 3.0),
            "nugget" => info.value,
            // every remaining parameter is a range
            _ => rng.next_log_range(0.05, 5.0),
        })
        .collect();
    template
        .set_params(&values)
        .expect("sampled parameters are inside the fitting boxes")
}

/// Positive-definiteness probe for a parametric family: each trial draws
/// `n_points` uniform sphere points and fresh random parameters, builds the
/// Gram matrix with diagonal jitter 1e-10, and requires the Cholesky
/// factorization to succeed. Statistic: number of failing trials;
/// threshold: 0.
pub fn check_positive_definite(
    template: &KernelSpec,
    n_trials: usize,
    n_points: usize,
    seed: u64,
) -> Result<DiagnosticReport, DiagnosticsError> {
    template.validate()?;
    check_positive_definite_with(
        |trial| {
            let mut rng = SplitMix64::derive(seed ^ 0x5eed, trial);
            randomize_params(template, &mut rng)
        },
        n_trials,
        n_points,
        seed,
    )
}

/// Generic positive-definiteness probe: `kernel_for_trial` supplies the
/// kernel tested in each trial (negative controls included).
pub fn check_positive_definite_with<K, F>(
    kernel_for_trial: F,
    n_trials: usize,
    n_points: usize,
    seed: u64,
) -> Result<DiagnosticReport, DiagnosticsError>
where
    K: CovarianceFn,
    F: Fn(u64) -> K,
{
    if n_points < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "positive-definiteness probe needs n_points >= 2".into(),
        ));
    }
    const JITTER: f64 = 1e-10;
    let mut failures = 0usize;
    let mut witnesses = Vec::new();
    for trial in 0..n_trials as u64 {
        let kernel = kernel_for_trial(trial);
        let mut rng = SplitMix64::derive(seed, trial);
        let points: Vec<SpherePoint> = (0..n_points).map(|_| rng.next_sphere_point()).collect();
        let mut gram = DMatrix::zeros(n_points, n_points);
        for i in 0..n_points {
            for j in i..n_points {
                let v = kernel.cov(&points[i], &points[j])?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            gram[(i, i)] += JITTER;
        }
        if Cholesky::new(gram).is_none() {
            failures += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(Witness {
                    description: format!(
                        "trial {trial}: Cholesky failed for {} on {n_points} points",
                        kernel.label()
                    ),
                    value: 1.0,
                });
            }
        }
    }
    Ok(DiagnosticReport {
        check_name: "positive_definite".to_string(),
        passed: failures == 0,
        statistic: failures as f64,
        threshold: 0.0,
        details: witnesses,
    })
}

/// Axial symmetry: covariances must be invariant under a common longitude
/// shift of both arguments. Statistic: max absolute deviation over random
/// (pair, shift) configurations; threshold 1e-12.
pub fn check_axial_symmetry<K: CovarianceFn>(
    kernel: &K,
    n_trials: usize,
    seed: u64,
) -> Result<DiagnosticReport, DiagnosticsError> {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    let mut witnesses = Vec::new();
    for _ in 0..n_trials {
        let x = rng.next_sphere_point();
        let y = rng.next_sphere_point();
        let delta = rng.next_range(-std::f64::consts::PI, std::f64::consts::PI);
        let base = kernel.cov(&x, &y)?;
        let shifted = kernel.cov(&x.shift_lon(delta), &y.shift_lon(delta))?;
        let dev = (shifted - base).abs();
        if dev > worst {
            worst = dev;
        }
        if dev > 1e-12 {
            witnesses.push(Witness {
                description: format!(
                    "x=({:.4},{:.4}) y=({:.4},{:.4}) shift={:.4}",
                    x.lon(),
                    x.lat(),
                    y.lon(),
                    y.lat(),
                    delta
                ),
                value: dev,
            });
        }
    }
    keep_worst(&mut witnesses);
    Ok(DiagnosticReport {
        check_name: "axial_symmetry".to_string(),
        passed: worst <= 1e-12,
        statistic: worst,
        threshold: 1e-12,
        details: witnesses,
    })
}

/// Latitudinal reversibility: swapping the two latitudes at a fixed
/// longitude lag must not change the covariance. Statistic: max absolute
/// deviation over random triples; threshold 1e-12.
pub fn check_latitudinal_reversibility<K: CovarianceFn>(
    kernel: &K,
    n_trials: usize,
    seed: u64,
) -> Result<DiagnosticReport, DiagnosticsError> {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    let mut witnesses = Vec::new();
    for _ in 0..n_trials {
        let lon0 = rng.next_range(-std::f64::consts::PI, std::f64::consts::PI);
        let lon_lag = rng.next_range(-std::f64::consts::PI, std::f64::consts::PI);
        let lat_a = rng.next_sphere_point().lat();
        let lat_b = rng.next_sphere_point().lat();
        let forward = kernel.cov(
            &SpherePoint::new(lon0, lat_a).expect("valid latitude"),
            &SpherePoint::new(lon0 + lon_lag, lat_b).expect("valid latitude"),
        )?;
        let swapped = kernel.cov(
            &SpherePoint::new(lon0, lat_b).expect("valid latitude"),
            &SpherePoint::new(lon0 + lon_lag, lat_a).expect("valid latitude"),
        )?;
        let dev = (forward - swapped).abs();
        if dev > worst {
            worst = dev;
        }
        if dev > 1e-12 {
            witnesses.push(Witness {
                description: format!(
                    "lon_lag={lon_lag:.4} lat_a={lat_a:.4} lat_b={lat_b:.4}"
                ),
                value: dev,
            });
        }
    }
    keep_worst(&mut witnesses);
    Ok(DiagnosticReport {
        check_name: "latitudinal_reversibility".to_string(),
        passed: worst <= 1e-12,
        statistic: worst,
        threshold: 1e-12,
        details: witnesses,
    })
}

/// One ring of the pole probe: covariance values against the reference
/// point along the circle at latitude pi/2 - epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleProbeRow {
    pub epsilon: f64,
    /// max - min of the covariance over the approach longitudes.
    pub spread: f64,
    /// |K(pole, reference) - mean over the ring|, or `None` when the kernel
    /// has no value at the pole.
    pub pole_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleProbe {
    pub reference: (f64, f64),
    pub rows: Vec<PoleProbeRow>,
}

impl std::fmt::Display for PoleProbe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "pole probe vs reference (lon {:.4}, lat {:.4})",
            self.reference.0, self.reference.1
        )?;
        writeln!(f, "{:>12} {:>14} {:>14}", "epsilon", "spread", "pole gap")?;
        for row in &self.rows {
            let gap = row
                .pole_gap
                .map_or_else(|| "undefined".to_string(), |g| format!("{g:.6e}"));
            writeln!(f, "{:>12.5} {:>14.6e} {:>14}", row.epsilon, row.spread, gap)?;
        }
        Ok(())
    }
}

/// Default epsilon ladder for the pole probe.
pub const DEFAULT_POLE_EPSILONS: [f64; 7] = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001];

/// Probes continuity at the north pole: for each epsilon, evaluates the
/// covariance between the reference point and `n_longitudes` equispaced
/// points on the circle at latitude pi/2 - epsilon. A continuous kernel has
/// spread -> 0 as epsilon -> 0; the separable baseline does not, and its
/// exact-pole value is reported as undefined.
pub fn pole_continuity_probe<K: CovarianceFn>(
    kernel: &K,
    epsilons: &[f64],
    n_longitudes: usize,
    reference: &SpherePoint,
) -> Result<PoleProbe, DiagnosticsError> {
    if epsilons.is_empty()
        || epsilons.iter().any(|&e| e <= 0.0 || e.is_nan())
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(DiagnosticsError::InvalidArgument(
            "epsilons must be positive and strictly decreasing".into(),
        ));
    }
    if n_longitudes < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "pole probe needs n_longitudes >= 2".into(),
        ));
    }
    let pole_value = match kernel.cov(&SpherePoint::north_pole(), reference) {
        Ok(v) => Some(v),
        Err(KernelError::UndefinedAtPole) => None,
        Err(e) => return Err(e.into()),
    };
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let lat = std::f64::consts::FRAC_PI_2 - eps;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for j in 0..n_longitudes {
            let lon = -std::f64::consts::PI
                + 2.0 * std::f64::consts::PI * j as f64 / n_longitudes as f64;
            let v = kernel.cov(&SpherePoint::new(lon, lat).expect("valid latitude"), reference)?;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        rows.push(PoleProbeRow {
            epsilon: eps,
            spread: max - min,
            pole_gap: pole_value.map(|p| (p - sum / n_longitudes as f64).abs()),
        });
    }
    Ok(PoleProbe {
        reference: (reference.lon(), reference.lat()),
        rows,
    })
}

/// Per-template cross-validation scores. Failed templates carry the error
/// message and no scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub family: String,
    pub fitted: bool,
    pub error: Option<String>,
    pub rmse: Option<f64>,
    pub mean_log_score: Option<f64>,
    pub mean_crps: Option<f64>,
    pub n_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub k_folds: usize,
    pub rows: Vec<ScoreRow>,
}

impl std::fmt::Display for Scorecard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<26} {:>8} {:>12} {:>14} {:>12} {:>8}",
            "template", "status", "rmse", "log-score", "crps", "preds"
        )?;
        for row in &self.rows {
            let fmt_opt =
                |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
            writeln!(
                f,
                "{:<26} {:>8} {:>12} {:>14} {:>12} {:>8}",
                row.family,
                if row.fitted { "ok" } else { "failed" },
                fmt_opt(row.rmse),
                fmt_opt(row.mean_log_score),
                fmt_opt(row.mean_crps),
                row.n_predictions
            )?;
        }
        Ok(())
    }
}

/// Seeded k-fold assignment: a shuffled permutation dealt round-robin, so
/// the folds partition the index range exactly.
pub fn fold_assignment(n: usize, k_folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = SplitMix64::derive(seed, 0xf01d);
    let perm = rng.shuffled_indices(n);
    let mut folds = vec![Vec::new(); k_folds];
    for (i, idx) in perm.into_iter().enumerate() {
        folds[i % k_folds].push(idx);
    }
    folds
}

/// K-fold cross-validation of kernel templates on one dataset: fit on the
/// training folds, krige the held-out sites, and aggregate RMSE, mean
/// Gaussian log-score, and mean CRPS per template. A failed fit marks that
/// template failed without touching the others. Predictive variances are
/// floored at 1e-12 times the kernel scale before scoring.
pub fn cross_validate(
    templates: &[KernelSpec],
    data: &Dataset,
    k_folds: usize,
    config: &FitConfig,
    seed: u64,
) -> Result<Scorecard, DiagnosticsError> {
    if k_folds < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "cross-validation needs k_folds >= 2".into(),
        ));
    }
    if data.len() < k_folds {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "cannot split {} observations into {k_folds} folds",
            data.len()
        )));
    }
    let folds = fold_assignment(data.len(), k_folds, seed);
    let mut rows = Vec::with_capacity(templates.len());
    for template in templates {
        match cross_validate_one(template, data, &folds, config) {
            Ok((rmse, log_score, crps, n_predictions)) => rows.push(ScoreRow {
                family: template.family_name().to_string(),
                fitted: true,
                error: None,
                rmse: Some(rmse),
                mean_log_score: Some(log_score),
                mean_crps: Some(crps),
                n_predictions,
            }),
            Err(e) => rows.push(ScoreRow {
                family: template.family_name().to_string(),
                fitted: false,
                error: Some(e.to_string()),
                rmse: None,
                mean_log_score: None,
                mean_crps: None,
                n_predictions: 0,
            }),
        }
    }
    Ok(Scorecard { k_folds, rows })
}

enum FoldError {
    Fit(FitError),
    Predict(GpError),
}

impl std::fmt::Display for FoldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FoldError::Fit(e) => write!(f, "fit failure: {e}"),
            FoldError::Predict(e) => write!(f, "prediction failure: {e}"),
        }
    }
}

fn cross_validate_one(
    template: &KernelSpec,
    data: &Dataset,
    folds: &[Vec<usize>],
    config: &FitConfig,
) -> Result<(f64, f64, f64, usize), FoldError> {
    let variance_floor = 1e-12 * template.variance_scale().max(1.0);
    let mut sq_err = 0.0;
    let mut log_score_sum = 0.0;
    let mut crps_sum = 0.0;
    let mut n = 0usize;
    for fold in folds {
        let mut train_sites = Vec::with_capacity(data.len() - fold.len());
        let mut train_values = Vec::with_capacity(data.len() - fold.len());
        let mut test_sites = Vec::with_capacity(fold.len());
        let mut test_values = Vec::with_capacity(fold.len());
        for i in 0..data.len() {
            if fold.contains(&i) {
                test_sites.push(data.sites()[i]);
                test_values.push(data.values()[i]);
            } else {
                train_sites.push(data.sites()[i]);
                train_values.push(data.values()[i]);
            }
        }
        let train = Dataset::new(train_sites, train_values).map_err(FoldError::Predict)?;
        let fit = fit_mle(template, &train, config).map_err(FoldError::Fit)?;
        let model =
            build_model(&fit.best_spec, &train, &JitterPolicy::default()).map_err(FoldError::Predict)?;
        let preds = model.krige(&test_sites).map_err(FoldError::Predict)?;
        for (pred, y) in preds.iter().zip(&test_values) {
            let v = pred.variance.max(variance_floor);
            sq_err += (y - pred.mean) * (y - pred.mean);
            log_score_sum += gaussian_log_score(*y, pred.mean, v);
            crps_sum += gaussian_crps(*y, pred.mean, v);
            n += 1;
        }
    }
    let nf = n as f64;
    Ok(((sq_err / nf).sqrt(), log_score_sum / nf, crps_sum / nf, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_grid, great_circle_distance, GridSpec};
    use crate::gp::simulate;
    use crate::kernels::axisym_exp_product;
    use approx::assert_relative_eq;

    /// exp(+d/r): grows with distance, not positive definite.
    struct GrowingKernel;
    impl CovarianceFn for GrowingKernel {
        fn cov(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
            Ok((great_circle_distance(x, y) / 1.0).exp())
        }
        fn label(&self) -> String {
            "growing_exp".into()
        }
    }

    /// Depends on the absolute longitude of x: not axially symmetric.
    struct LongitudePinnedKernel;
    impl CovarianceFn for LongitudePinnedKernel {
        fn cov(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
            Ok((-great_circle_distance(x, y)).exp() * (1.0 + 0.1 * x.lon().sin()))
        }
        fn label(&self) -> String {
            "longitude_pinned".into()
        }
    }

    /// Carries a factor exp(lat_x - lat_y): not latitudinally reversible.
    struct IrreversibleKernel;
    impl CovarianceFn for IrreversibleKernel {
        fn cov(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64, KernelError> {
            Ok((-great_circle_distance(x, y)).exp() * (x.lat() - y.lat()).exp())
        }
        fn label(&self) -> String {
            "irreversible".into()
        }
    }

    #[test]
    fn valid_families_pass_the_pd_check() {
        for template in [
            axisym_exp_product(1.0, 1.0, 0.3).unwrap(),
            KernelSpec::iso_exponential(1.0, 1.0).unwrap(),
            KernelSpec::iso_spherical(1.0, 1.0).unwrap(),
        ] {
            let report = check_positive_definite(&template, 10, 25, 7).unwrap();
            assert!(report.passed, "{report}");
            assert_eq!(report.statistic, 0.0);
        }
    }

    #[test]
    fn growing_kernel_fails_the_pd_check() {
        let report = check_positive_definite_with(|_| GrowingKernel, 5, 20, 3).unwrap();
        assert!(!report.passed);
        assert!(report.statistic >= 1.0);
        assert!(!report.details.is_empty());
    }

    #[test]
    fn product_and_isotropic_kernels_are_axially_symmetric() {
        let product = axisym_exp_product(1.0, 0.8, 0.4).unwrap();
        let report = check_axial_symmetry(&product, 300, 11).unwrap();
        assert!(report.passed, "{report}");
        let spherical = KernelSpec::iso_spherical(1.0, 1.5).unwrap();
        let report = check_axial_symmetry(&spherical, 300, 12).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn longitude_pinned_kernel_fails_axial_symmetry() {
        let report = check_axial_symmetry(&LongitudePinnedKernel, 200, 13).unwrap();
        assert!(!report.passed);
        assert!(report.statistic > 1e-3);
        assert!(!report.details.is_empty());
    }

    #[test]
    fn reversibility_holds_for_product_and_separable() {
        let product = axisym_exp_product(1.0, 0.8, 0.4).unwrap();
        let report = check_latitudinal_reversibility(&product, 300, 17).unwrap();
        assert!(report.passed, "{report}");
        let separable = KernelSpec::separable_lonlat(1.0, 0.6, 0.4).unwrap();
        let report = check_latitudinal_reversibility(&separable, 300, 18).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn irreversible_kernel_fails_reversibility() {
        let report = check_latitudinal_reversibility(&IrreversibleKernel, 200, 19).unwrap();
        assert!(!report.passed);
        assert!(report.statistic > 1e-3);
    }

    #[test]
    fn checks_are_deterministic() {
        let product = axisym_exp_product(1.0, 0.8, 0.4).unwrap();
        let a = check_axial_symmetry(&product, 100, 5).unwrap();
        let b = check_axial_symmetry(&product, 100, 5).unwrap();
        assert_eq!(a, b);
        let a = check_positive_definite(&product, 5, 20, 5).unwrap();
        let b = check_positive_definite(&product, 5, 20, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pole_probe_shows_continuity_for_the_product() {
        let kernel = axisym_exp_product(1.0, 1.0, 0.3).unwrap();
        let reference = SpherePoint::new(0.0, std::f64::consts::FRAC_PI_4).unwrap();
        let probe =
            pole_continuity_probe(&kernel, &DEFAULT_POLE_EPSILONS, 64, &reference).unwrap();
        for pair in probe.rows.windows(2) {
            assert!(pair[1].spread <= pair[0].spread + 1e-12);
        }
        let last = probe.rows.last().unwrap();
        assert!(last.spread < 1e-3, "spread {}", last.spread);
        assert!(last.pole_gap.unwrap() < 2e-3);
    }

    #[test]
    fn pole_probe_shows_the_separable_discontinuity() {
        let kernel = KernelSpec::separable_lonlat(1.0, 0.5, 0.5).unwrap();
        let reference = SpherePoint::new(0.0, std::f64::consts::FRAC_PI_4).unwrap();
        let probe =
            pole_continuity_probe(&kernel, &DEFAULT_POLE_EPSILONS, 64, &reference).unwrap();
        let last = probe.rows.last().unwrap();
        // Analytic limit exp(-pi/2) * (1 - exp(-2 pi)) = 0.2074913731468,
        // evaluated with 30-digit arithmetic.
        assert_relative_eq!(last.spread, 0.2074913731468, max_relative = 0.05);
        assert!(last.spread > 0.05);
        assert!(last.pole_gap.is_none());
    }

    #[test]
    fn pole_probe_spread_obeys_the_isotropic_lipschitz_bound() {
        let sigma = 1.3;
        let r_iso = 0.8;
        let kernel = KernelSpec::iso_exponential(sigma, r_iso).unwrap();
        let reference = SpherePoint::new(1.0, 0.2).unwrap();
        let probe =
            pole_continuity_probe(&kernel, &DEFAULT_POLE_EPSILONS, 48, &reference).unwrap();
        for row in &probe.rows {
            let lipschitz = sigma / r_iso * std::f64::consts::PI;
            assert!(
                row.spread <= lipschitz * row.epsilon,
                "eps {} spread {}",
                row.epsilon,
                row.spread
            );
        }
    }

    #[test]
    fn pole_probe_argument_validation() {
        let kernel = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        let reference = SpherePoint::new(0.0, 0.0).unwrap();
        assert!(pole_continuity_probe(&kernel, &[], 8, &reference).is_err());
        assert!(pole_continuity_probe(&kernel, &[0.1, 0.2], 8, &reference).is_err());
        assert!(pole_continuity_probe(&kernel, &[0.1, 0.05], 1, &reference).is_err());
    }

    #[test]
    fn fold_assignment_partitions_exactly() {
        for (n, k) in [(20, 5), (21, 4), (7, 7), (100, 3)] {
            let folds = fold_assignment(n, k, 99);
            let mut seen = vec![false; n];
            for fold in &folds {
                for &i in fold {
                    assert!(!seen[i], "index {i} appears twice");
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    fn simulated_dataset(spec: &KernelSpec, n_points: usize, seed: u64) -> Dataset {
        let sites = generate_grid(&GridSpec::Fibonacci { n_points }).unwrap();
        let draws = simulate(spec, &sites, seed, 1).unwrap();
        let values: Vec<f64> = (0..sites.len()).map(|j| draws[(0, j)]).collect();
        Dataset::new(sites, values).unwrap()
    }

    fn quick_config() -> FitConfig {
        FitConfig {
            n_restarts: 1,
            max_iters: 60,
            fixed_params: vec!["nugget".into()],
            ..FitConfig::default()
        }
    }

    #[test]
    fn leave_one_out_produces_one_prediction_per_site() {
        let truth = KernelSpec::iso_exponential(1.0, 0.8).unwrap();
        let data = simulated_dataset(&truth, 20, 8);
        let card = cross_validate(
            std::slice::from_ref(&truth),
            &data,
            20,
            &quick_config(),
            123,
        )
        .unwrap();
        assert_eq!(card.rows.len(), 1);
        assert!(card.rows[0].fitted);
        assert_eq!(card.rows[0].n_predictions, 20);
    }

    #[test]
    fn two_fold_scorecard_has_one_row_per_template() {
        let truth = KernelSpec::iso_exponential(1.0, 0.8).unwrap();
        let data = simulated_dataset(&truth, 16, 2);
        let card = cross_validate(std::slice::from_ref(&truth), &data, 2, &quick_config(), 1).unwrap();
        assert_eq!(card.rows.len(), 1);
        assert_eq!(card.k_folds, 2);
        assert!(card.rows[0].rmse.unwrap() > 0.0);
        assert!(card.rows[0].mean_crps.unwrap() > 0.0);
    }

    #[test]
    fn failed_templates_do_not_poison_the_scorecard() {
        // Data containing a pole breaks the separable template's fit but
        // leaves the others untouched.
        let mut sites = generate_grid(&GridSpec::Fibonacci { n_points: 15 }).unwrap();
        sites.push(SpherePoint::north_pole());
        let truth = KernelSpec::iso_exponential(1.0, 0.8).unwrap();
        let draws = simulate(&truth, &sites, 5, 1).unwrap();
        let values: Vec<f64> = (0..sites.len()).map(|j| draws[(0, j)]).collect();
        let data = Dataset::new(sites, values).unwrap();
        let templates = [
            KernelSpec::separable_lonlat(1.0, 1.0, 1.0).unwrap(),
            KernelSpec::iso_exponential(1.0, 1.0).unwrap(),
        ];
        let card = cross_validate(&templates, &data, 3, &quick_config(), 77).unwrap();
        assert!(!card.rows[0].fitted);
        assert!(card.rows[0].error.is_some());
        assert!(card.rows[1].fitted);
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let truth = KernelSpec::iso_exponential(1.0, 0.8).unwrap();
        let data = simulated_dataset(&truth, 18, 44);
        let a = cross_validate(std::slice::from_ref(&truth), &data, 3, &quick_config(), 9).unwrap();
        let b = cross_validate(std::slice::from_ref(&truth), &data, 3, &quick_config(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cross_validation_argument_validation() {
        let truth = KernelSpec::iso_exponential(1.0, 0.8).unwrap();
        let data = simulated_dataset(&truth, 6, 3);
        assert!(cross_validate(std::slice::from_ref(&truth), &data, 1, &quick_config(), 0).is_err());
        assert!(cross_validate(std::slice::from_ref(&truth), &data, 7, &quick_config(), 0).is_err());
    }
}
