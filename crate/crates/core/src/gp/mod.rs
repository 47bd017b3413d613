//! Dense Gaussian-process machinery: covariance assembly, Cholesky models,
//! kriging with conditional variance, log-likelihood, and seeded simulation.
//!
//! Everything here is exact O(n^3) linear algebra on a zero-mean field; any
//! mean handling lives at the I/O boundary. Observation noise enters the
//! model matrix as `nugget * I` on the diagonal (one slot per observation
//! index), so repeated measurements at one site stay correlated at the
//! latent level while their noise is independent.

use crate::geometry::SpherePoint;
use crate::kernels::{KernelError, KernelSpec};
use crate::rng::SplitMix64;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("kernel evaluation failed at sites ({row}, {col}): {source}")]
    KernelAt {
        row: usize,
        col: usize,
        source: KernelError,
    },
    #[error("dataset must contain at least one observation")]
    EmptyDataset,
    #[error("dataset has {sites} sites but {values} values")]
    LengthMismatch { sites: usize, values: usize },
    #[error("observation {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("sites {i} and {j} coincide; duplicate sites need a positive nugget")]
    DuplicateSites { i: usize, j: usize },
    #[error("covariance matrix not positive definite at these parameters (jitter up to {max_jitter} tried)")]
    NotPositiveDefinite { max_jitter: f64 },
}

/// Observed scalar values at sites on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sites: Vec<SpherePoint>,
    values: Vec<f64>,
    name: Option<String>,
}

impl Dataset {
    /// Validates lengths and finiteness. Duplicate sites are allowed here;
    /// `build_model` rejects them unless the kernel declares a positive
    /// nugget.
    pub fn new(sites: Vec<SpherePoint>, values: Vec<f64>) -> Result<Self, GpError> {
        if sites.is_empty() {
            return Err(GpError::EmptyDataset);
        }
        if sites.len() != values.len() {
            return Err(GpError::LengthMismatch {
                sites: sites.len(),
                values: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GpError::NonFiniteValue { index });
        }
        Ok(Self {
            sites,
            values,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn sites(&self) -> &[SpherePoint] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// First pair of coinciding sites (pole-aware exact equality), if any.
    pub fn duplicate_sites(&self) -> Option<(usize, usize)> {
        for i in 0..self.sites.len() {
            for j in (i + 1)..self.sites.len() {
                if self.sites[i] == self.sites[j] {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Population variance of the observations, used by fitting heuristics.
    pub fn sample_variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    }
}

/// Kriging output at one target: conditional mean and nonnegative
/// conditional variance of the latent field, in data units (squared).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PredictionResult {
    pub mean: f64,
    pub variance: f64,
}

/// Diagonal-loading schedule for a failed Cholesky: start at
/// `initial_rel * sigma`, multiply by `factor` up to `max_rel * sigma`,
/// then give up.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterPolicy {
    pub initial_rel: f64,
    pub factor: f64,
    pub max_rel: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            initial_rel: 1e-10,
            factor: 10.0,
            max_rel: 1e-4,
        }
    }
}

/// Pairwise covariance matrix: entry (i, j) is `spec.eval(a[i], b[j])`,
/// nugget included at exact point coincidence. Kernel errors carry the
/// offending site indices.
pub fn assemble_covariance(
    spec: &KernelSpec,
    sites_a: &[SpherePoint],
    sites_b: &[SpherePoint],
) -> Result<DMatrix<f64>, GpError> {
    spec.validate()?;
    assemble_with(sites_a, sites_b, |x, y| spec.eval(x, y))
}

/// Latent-field covariance matrix (no nugget anywhere); the building block
/// for model matrices and kriging cross-covariances.
pub(crate) fn assemble_latent(
    spec: &KernelSpec,
    sites_a: &[SpherePoint],
    sites_b: &[SpherePoint],
) -> Result<DMatrix<f64>, GpError> {
    spec.validate()?;
    assemble_with(sites_a, sites_b, |x, y| spec.latent_cov(x, y))
}

fn assemble_with<F>(
    sites_a: &[SpherePoint],
    sites_b: &[SpherePoint],
    cov: F,
) -> Result<DMatrix<f64>, GpError>
where
    F: Fn(&SpherePoint, &SpherePoint) -> Result<f64, KernelError> + Sync,
{
    let rows = sites_a.len();
    let cols = sites_b.len();
    // Entries are independent pure evaluations; rows go in parallel and land
    // in a deterministic layout.
    let data: Result<Vec<Vec<f64>>, GpError> = sites_a
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            sites_b
                .iter()
                .enumerate()
                .map(|(j, y)| {
                    cov(x, y).map_err(|source| GpError::KernelAt {
                        row: i,
                        col: j,
                        source,
                    })
                })
                .collect()
        })
        .collect();
    let data = data?;
    let mut m = DMatrix::zeros(rows, cols);
    for (i, row) in data.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Symmetric latent covariance of one site list: the upper triangle is
/// evaluated and mirrored, so the result is symmetric to the last bit.
fn assemble_latent_symmetric(
    spec: &KernelSpec,
    sites: &[SpherePoint],
) -> Result<DMatrix<f64>, GpError> {
    spec.validate()?;
    let n = sites.len();
    let rows: Result<Vec<Vec<f64>>, GpError> = sites
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            (i..n)
                .map(|j| {
                    spec.latent_cov(x, &sites[j]).map_err(|source| GpError::KernelAt {
                        row: i,
                        col: j,
                        source,
                    })
                })
                .collect()
        })
        .collect();
    let rows = rows?;
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn cholesky_with_jitter(
    base: &DMatrix<f64>,
    sigma_scale: f64,
    policy: &JitterPolicy,
) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    if let Some(chol) = Cholesky::new(base.clone()) {
        return Ok((chol, 0.0));
    }
    let mut rel = policy.initial_rel;
    while rel <= policy.max_rel * (1.0 + 1e-12) {
        let jitter = rel * sigma_scale;
        let mut loaded = base.clone();
        for i in 0..loaded.nrows() {
            loaded[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(loaded) {
            return Ok((chol, jitter));
        }
        rel *= policy.factor;
    }
    Err(GpError::NotPositiveDefinite {
        max_jitter: policy.max_rel * sigma_scale,
    })
}

/// A kernel bound to a dataset through the factored matrix
/// `K_latent + nugget * I` (plus any jitter the policy had to add).
#[derive(Debug, Clone)]
pub struct GpModel {
    spec: KernelSpec,
    data: Dataset,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_det: f64,
    jitter_used: f64,
}

/// Assembles and factors the model covariance. Fails fast on duplicate
/// sites with a zero nugget and reports a parameter-region failure when the
/// factorization does not succeed within the jitter policy.
pub fn build_model(
    spec: &KernelSpec,
    data: &Dataset,
    policy: &JitterPolicy,
) -> Result<GpModel, GpError> {
    spec.validate()?;
    if spec.nugget() == 0.0 {
        if let Some((i, j)) = data.duplicate_sites() {
            return Err(GpError::DuplicateSites { i, j });
        }
    }
    let mut k = assemble_latent_symmetric(spec, data.sites())?;
    let nugget = spec.nugget();
    for i in 0..k.nrows() {
        k[(i, i)] += nugget;
    }
    let (chol, jitter_used) = cholesky_with_jitter(&k, spec.variance_scale(), policy)?;
    let log_det = 2.0 * (0..k.nrows()).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
    let y = DVector::from_column_slice(data.values());
    let alpha = chol.solve(&y);
    Ok(GpModel {
        spec: spec.clone(),
        data: data.clone(),
        chol,
        alpha,
        log_det,
        jitter_used,
    })
}

impl GpModel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Lower-triangular Cholesky factor of the model matrix.
    pub fn chol_lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Weights `(K + nugget I)^-1 y`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Diagonal loading the policy actually added (0 when the first attempt
    /// factored).
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// Log-likelihood of the bound data under the factored model.
    pub fn log_likelihood_value(&self) -> f64 {
        let n = self.data.len() as f64;
        let quad: f64 = self
            .data
            .values()
            .iter()
            .zip(self.alpha.iter())
            .map(|(y, a)| y * a)
            .sum();
        -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + self.log_det + quad)
    }

    /// Kriging prediction of the latent field at each target: the nugget
    /// stays inside the model matrix but out of the cross-covariances and
    /// the prior variance, so a zero-nugget model interpolates exactly.
    pub fn krige(&self, targets: &[SpherePoint]) -> Result<Vec<PredictionResult>, GpError> {
        let mut out = Vec::with_capacity(targets.len());
        for target in targets {
            let k_star = assemble_latent(&self.spec, self.data.sites(), std::slice::from_ref(target))?;
            let k_star = k_star.column(0).clone_owned();
            let prior = self.spec.latent_cov(target, target)?;
            let mean = self.alpha.dot(&k_star);
            let weights = self.chol.solve(&k_star);
            let raw_variance = prior - k_star.dot(&weights);
            // Round-off may push the conditional variance a hair negative;
            // anything beyond this slack would be a real defect.
            debug_assert!(raw_variance > -1e-10, "conditional variance {raw_variance}");
            out.push(PredictionResult {
                mean,
                variance: raw_variance.max(0.0),
            });
        }
        Ok(out)
    }
}

/// Log-likelihood of `data` under `spec`, via the Cholesky factor. A
/// parameter region where the factorization fails reports negative infinity
/// so optimizers can retreat; structural errors still surface as errors.
pub fn log_likelihood(spec: &KernelSpec, data: &Dataset) -> Result<f64, GpError> {
    match build_model(spec, data, &JitterPolicy::default()) {
        Ok(model) => Ok(model.log_likelihood_value()),
        Err(GpError::NotPositiveDefinite { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Unconditional draws of the model at `sites`: row `i` of the result is
/// draw `i`, computed as `L z` with `z` standard normals from the seeded
/// counter-based generator. Identical `(spec, sites, seed, n_draws)` give
/// identical output.
pub fn simulate(
    spec: &KernelSpec,
    sites: &[SpherePoint],
    seed: u64,
    n_draws: usize,
) -> Result<DMatrix<f64>, GpError> {
    spec.validate()?;
    let n = sites.len();
    let mut k = assemble_latent_symmetric(spec, sites)?;
    let nugget = spec.nugget();
    for i in 0..n {
        k[(i, i)] += nugget;
    }
    let (chol, _) = cholesky_with_jitter(&k, spec.variance_scale(), &JitterPolicy::default())?;
    let lower = chol.l();
    let mut rng = SplitMix64::new(seed);
    let mut draws = DMatrix::zeros(n_draws, n);
    let mut z = vec![0.0; n];
    for d in 0..n_draws {
        rng.fill_normals(&mut z);
        let sample = &lower * DVector::from_column_slice(&z);
        for j in 0..n {
            draws[(d, j)] = sample[j];
        }
    }
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::axisym_exp_product;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn pt(lon: f64, lat: f64) -> SpherePoint {
        SpherePoint::new(lon, lat).unwrap()
    }

    fn random_sites(rng: &mut SplitMix64, n: usize) -> Vec<SpherePoint> {
        (0..n).map(|_| rng.next_sphere_point()).collect()
    }

    fn random_dataset(rng: &mut SplitMix64, n: usize) -> Dataset {
        let sites = random_sites(rng, n);
        let values = (0..n).map(|_| rng.next_range(-2.0, 2.0)).collect();
        Dataset::new(sites, values).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            Dataset::new(vec![], vec![]),
            Err(GpError::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::new(vec![pt(0.0, 0.0)], vec![1.0, 2.0]),
            Err(GpError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Dataset::new(vec![pt(0.0, 0.0)], vec![f64::NAN]),
            Err(GpError::NonFiniteValue { index: 0 })
        ));
    }

    #[test]
    fn single_site_matrix_includes_nugget() {
        let spec = KernelSpec::iso_exponential(1.0, 1.0)
            .unwrap()
            .with_nugget(0.25)
            .unwrap();
        let sites = [pt(0.1, 0.2)];
        let k = assemble_covariance(&spec, &sites, &sites).unwrap();
        assert_eq!(k.nrows(), 1);
        assert_abs_diff_eq!(k[(0, 0)], 1.25, epsilon = 1e-15);
    }

    #[test]
    fn antipodal_equator_sites_off_diagonal() {
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        let sites = [pt(0.0, 0.0), pt(-PI, 0.0)];
        let k = assemble_covariance(&spec, &sites, &sites).unwrap();
        // exp(-pi), 30-digit reference value.
        assert_relative_eq!(k[(0, 1)], 0.04321391826377, max_relative = 1e-12);
        assert_eq!(k[(0, 1)], k[(1, 0)]);
    }

    #[test]
    fn cross_matrix_shape() {
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        let a = [pt(0.0, 0.0), pt(0.5, 0.3), pt(-0.4, -0.2)];
        let b = [pt(0.2, 0.1), pt(1.0, -0.5)];
        let k = assemble_covariance(&spec, &a, &b).unwrap();
        assert_eq!((k.nrows(), k.ncols()), (3, 2));
    }

    #[test]
    fn kernel_errors_carry_site_indices() {
        let spec = KernelSpec::separable_lonlat(1.0, 1.0, 1.0).unwrap();
        let a = [pt(0.0, 0.0), SpherePoint::north_pole()];
        let err = assemble_covariance(&spec, &a, &a).unwrap_err();
        match err {
            GpError::KernelAt { row, col, source } => {
                assert!(row == 1 || col == 1, "row={row} col={col}");
                assert_eq!(source, KernelError::UndefinedAtPole);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn trivial_model_n1() {
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        let data = Dataset::new(vec![pt(0.3, 0.1)], vec![2.5]).unwrap();
        let model = build_model(&spec, &data, &JitterPolicy::default()).unwrap();
        assert_abs_diff_eq!(model.chol_lower()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(model.alpha()[0], 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(model.log_det(), 0.0, epsilon = 1e-15);
        assert_eq!(model.jitter_used(), 0.0);
    }

    #[test]
    fn factor_reconstructs_covariance() {
        let mut rng = SplitMix64::new(11);
        let spec = axisym_exp_product(1.3, 0.9, 0.4).unwrap();
        let data = random_dataset(&mut rng, 60);
        let model = build_model(&spec, &data, &JitterPolicy::default()).unwrap();
        let l = model.chol_lower();
        let reconstructed = &l * l.transpose();
        let direct = assemble_covariance(&spec, data.sites(), data.sites()).unwrap();
        let num = (&reconstructed - &direct).norm();
        let den = direct.norm();
        assert!(num / den < 1e-8, "relative Frobenius error {}", num / den);
        // alpha solves the system
        let y = DVector::from_column_slice(data.values());
        let residual = (&direct * model.alpha()) - &y;
        assert!(residual.norm() / y.norm() < 1e-8);
    }

    #[test]
    fn duplicate_sites_require_nugget() {
        let sites = vec![pt(0.2, 0.1), pt(0.2, 0.1)];
        let data = Dataset::new(sites, vec![1.0, 1.2]).unwrap();
        assert_eq!(data.duplicate_sites(), Some((0, 1)));
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        assert!(matches!(
            build_model(&spec, &data, &JitterPolicy::default()),
            Err(GpError::DuplicateSites { i: 0, j: 1 })
        ));
        let with_nugget = spec.with_nugget(0.1).unwrap();
        let model = build_model(&with_nugget, &data, &JitterPolicy::default()).unwrap();
        // With noise, the prediction at the shared site pools both values.
        let pred = model.krige(&[pt(0.2, 0.1)]).unwrap()[0];
        assert!(pred.mean > 1.0 && pred.mean < 1.2);
    }

    #[test]
    fn jitter_escalation_gives_up_on_indefinite_matrices() {
        // Not reachable through valid kernels, so drive the policy directly.
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = cholesky_with_jitter(&indefinite, 1.0, &JitterPolicy::default()).unwrap_err();
        assert!(matches!(err, GpError::NotPositiveDefinite { .. }));
        // A singular matrix is rescued by the first jitter step.
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (_, jitter) = cholesky_with_jitter(&singular, 1.0, &JitterPolicy::default()).unwrap();
        assert!(jitter > 0.0);
    }

    #[test]
    fn krige_single_observation_closed_form() {
        let spec = KernelSpec::iso_exponential(1.7, 0.8).unwrap();
        let x1 = pt(0.3, -0.2);
        let y1 = 1.9;
        let data = Dataset::new(vec![x1], vec![y1]).unwrap();
        let model = build_model(&spec, &data, &JitterPolicy::default()).unwrap();
        let target = pt(-0.5, 0.4);
        let pred = model.krige(&[target]).unwrap()[0];
        let k01 = spec.eval(&x1, &target).unwrap();
        let k00 = spec.eval(&x1, &x1).unwrap();
        let kss = spec.eval(&target, &target).unwrap();
        assert_relative_eq!(pred.mean, y1 * k01 / k00, max_relative = 1e-12);
        assert_relative_eq!(pred.variance, kss - k01 * k01 / k00, max_relative = 1e-12);
    }

    #[test]
    fn krige_interpolates_at_zero_nugget() {
        let mut rng = SplitMix64::new(23);
        for spec in [
            KernelSpec::iso_exponential(1.5, 0.9).unwrap(),
            axisym_exp_product(1.0, 1.2, 0.5).unwrap(),
            KernelSpec::chordal_matern(1.1, 0.7, 1.5).unwrap(),
        ] {
            let data = random_dataset(&mut rng, 12);
            let model = build_model(&spec, &data, &JitterPolicy::default()).unwrap();
            let preds = model.krige(data.sites()).unwrap();
            for (pred, y) in preds.iter().zip(data.values()) {
                assert_abs_diff_eq!(pred.mean, *y, epsilon = 1e-8);
                assert!(pred.variance <= 1e-8);
            }
        }
    }

    /// Conditional mean and variance from the full joint covariance with an
    /// explicit LU inverse; the independent reference for `krige`.
    fn brute_force_prediction(
        spec: &KernelSpec,
        data: &Dataset,
        target: &SpherePoint,
    ) -> PredictionResult {
        let n = data.len();
        let mut joint_sites: Vec<SpherePoint> = data.sites().to_vec();
        joint_sites.push(*target);
        let mut joint = DMatrix::zeros(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..=n {
                joint[(i, j)] = spec.latent_cov(&joint_sites[i], &joint_sites[j]).unwrap();
            }
        }
        for i in 0..n {
            joint[(i, i)] += spec.nugget();
        }
        let k_xx = joint.view((0, 0), (n, n)).clone_owned();
        let k_sx = joint.view((n, 0), (1, n)).clone_owned();
        let k_ss = joint[(n, n)];
        let inv = k_xx.try_inverse().expect("invertible");
        let y = DVector::from_column_slice(data.values());
        let mean = (&k_sx * &inv * &y)[(0, 0)];
        let variance = k_ss - (&k_sx * &inv * k_sx.transpose())[(0, 0)];
        PredictionResult { mean, variance }
    }

    #[test]
    fn krige_matches_brute_force_oracle() {
        let mut rng = SplitMix64::new(37);
        let specs = [
            KernelSpec::iso_exponential(1.5, 0.9).unwrap(),
            axisym_exp_product(2.0, 1.0, 0.3).unwrap().with_nugget(0.05).unwrap(),
            KernelSpec::iso_powered_exponential(1.0, 0.8, 0.6).unwrap(),
        ];
        for spec in &specs {
            for _ in 0..10 {
                let data = random_dataset(&mut rng, 5);
                let target = rng.next_sphere_point();
                let model = build_model(spec, &data, &JitterPolicy::default()).unwrap();
                let pred = model.krige(&[target]).unwrap()[0];
                let oracle = brute_force_prediction(spec, &data, &target);
                assert_relative_eq!(pred.mean, oracle.mean, max_relative = 1e-8, epsilon = 1e-10);
                assert_relative_eq!(
                    pred.variance,
                    oracle.variance.max(0.0),
                    max_relative = 1e-8,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn variance_never_exceeds_prior_and_shrinks_with_data() {
        let mut rng = SplitMix64::new(51);
        let spec = axisym_exp_product(1.2, 0.8, 0.5).unwrap();
        for _ in 0..20 {
            let data = random_dataset(&mut rng, 8);
            let target = rng.next_sphere_point();
            let prior = spec.latent_cov(&target, &target).unwrap();
            let model = build_model(&spec, &data, &JitterPolicy::default()).unwrap();
            let full = model.krige(&[target]).unwrap()[0];
            assert!(full.variance <= prior + 1e-12);

            let smaller = Dataset::new(
                data.sites()[..7].to_vec(),
                data.values()[..7].to_vec(),
            )
            .unwrap();
            let sub = build_model(&spec, &smaller, &JitterPolicy::default()).unwrap();
            let partial = sub.krige(&[target]).unwrap()[0];
            assert!(full.variance <= partial.variance + 1e-9);
        }
    }

    #[test]
    fn predictions_are_longitude_shift_equivariant() {
        let mut rng = SplitMix64::new(67);
        let spec = axisym_exp_product(1.0, 0.9, 0.4).unwrap();
        for _ in 0..10 {
            let data = random_dataset(&mut rng, 10);
            let target = rng.next_sphere_point();
            let delta = rng.next_range(-PI, PI);
            let model = build_model(&spec, &data, &JitterPolicy::default()).unwrap();
            let base = model.krige(&[target]).unwrap()[0];

            let shifted_sites: Vec<SpherePoint> =
                data.sites().iter().map(|p| p.shift_lon(delta)).collect();
            let shifted = Dataset::new(shifted_sites, data.values().to_vec()).unwrap();
            let shifted_model = build_model(&spec, &shifted, &JitterPolicy::default()).unwrap();
            let moved = shifted_model.krige(&[target.shift_lon(delta)]).unwrap()[0];
            assert_abs_diff_eq!(base.mean, moved.mean, epsilon = 1e-10);
            assert_abs_diff_eq!(base.variance, moved.variance, epsilon = 1e-10);
        }
    }

    #[test]
    fn scalar_log_likelihood_closed_forms() {
        let ln_2pi = (2.0 * PI).ln();
        let data = Dataset::new(vec![pt(0.1, 0.1)], vec![0.0]).unwrap();
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        assert_relative_eq!(
            log_likelihood(&spec, &data).unwrap(),
            -0.5 * ln_2pi,
            max_relative = 1e-14
        );
        let data = Dataset::new(vec![pt(0.1, 0.1)], vec![1.0]).unwrap();
        let spec = KernelSpec::iso_exponential(2.0, 1.0).unwrap();
        assert_relative_eq!(
            log_likelihood(&spec, &data).unwrap(),
            -0.5 * (ln_2pi + (2.0_f64).ln() + 0.5),
            max_relative = 1e-14
        );
    }

    #[test]
    fn log_likelihood_matches_dense_inverse_oracle() {
        let mut rng = SplitMix64::new(73);
        let spec = axisym_exp_product(1.4, 0.8, 0.6).unwrap().with_nugget(0.1).unwrap();
        for _ in 0..10 {
            let data = random_dataset(&mut rng, 6);
            let got = log_likelihood(&spec, &data).unwrap();
            let mut k = assemble_latent(&spec, data.sites(), data.sites()).unwrap();
            for i in 0..k.nrows() {
                k[(i, i)] += spec.nugget();
            }
            let det = k.determinant();
            let inv = k.try_inverse().unwrap();
            let y = DVector::from_column_slice(data.values());
            let quad = (y.transpose() * &inv * &y)[(0, 0)];
            let expected =
                -0.5 * (data.len() as f64 * (2.0 * PI).ln() + det.ln() + quad);
            assert_relative_eq!(got, expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = KernelSpec::iso_exponential(1.0, 1.0).unwrap();
        let sites = [pt(0.0, 0.0), pt(0.4, 0.2), pt(-0.3, -0.5)];
        let a = simulate(&spec, &sites, 99, 8).unwrap();
        let b = simulate(&spec, &sites, 99, 8).unwrap();
        assert_eq!(a, b);
        let c = simulate(&spec, &sites, 100, 8).unwrap();
        assert_ne!(a, c);
        let empty = simulate(&spec, &sites, 99, 0).unwrap();
        assert_eq!((empty.nrows(), empty.ncols()), (0, 3));
    }

    #[test]
    fn simulated_draws_reproduce_the_covariance() {
        let spec = axisym_exp_product(1.0, 1.0, 0.5).unwrap();
        let sites = [pt(0.0, 0.0), pt(0.4, 0.2), pt(-0.2, -0.3)];
        let draws = simulate(&spec, &sites, 2024, 20_000).unwrap();
        let k = assemble_covariance(&spec, &sites, &sites).unwrap();
        // Zero-mean second-moment estimator against the true covariance.
        let m = draws.nrows() as f64;
        for i in 0..3 {
            for j in 0..3 {
                let emp: f64 = (0..draws.nrows())
                    .map(|d| draws[(d, i)] * draws[(d, j)])
                    .sum::<f64>()
                    / m;
                assert_relative_eq!(emp, k[(i, j)], max_relative = 0.05);
            }
        }
    }
}
