//! Proper scoring rules for Gaussian predictive distributions.

use statrs::function::erf::erf;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal density.
fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal distribution function.
fn big_phi(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

/// Predictive log density of `y` under N(mean, variance).
pub fn gaussian_log_score(y: f64, mean: f64, variance: f64) -> f64 {
    let r = y - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * variance).ln() + r * r / variance)
}

/// Continuous ranked probability score of `y` under N(mean, variance),
/// in closed form. Lower is better; 0 only for a point mass on `y`.
pub fn gaussian_crps(y: f64, mean: f64, variance: f64) -> f64 {
    let sd = variance.sqrt();
    let z = (y - mean) / sd;
    sd * (z * (2.0 * big_phi(z) - 1.0) + 2.0 * phi(z) - 1.0 / std::f64::consts::PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn crps_at_the_predictive_mean() {
        // 2 phi(0) - 1/sqrt(pi) = 0.2336949772551..., scaled by the
        // predictive standard deviation.
        assert_relative_eq!(gaussian_crps(0.0, 0.0, 1.0), 0.2336949772551, max_relative = 1e-9);
        assert_relative_eq!(
            gaussian_crps(3.0, 3.0, 4.0),
            2.0 * 0.2336949772551,
            max_relative = 1e-9
        );
    }

    #[test]
    fn crps_is_nonnegative_and_grows_with_error() {
        let mut prev = gaussian_crps(0.0, 0.0, 1.0);
        for miss in [0.5, 1.0, 2.0, 4.0] {
            let c = gaussian_crps(miss, 0.0, 1.0);
            assert!(c > prev);
            prev = c;
        }
        assert!(gaussian_crps(-1.3, 0.2, 0.5) > 0.0);
    }

    #[test]
    fn log_score_matches_the_gaussian_density() {
        let v: f64 = 0.7;
        let expected = (1.0 / (2.0 * std::f64::consts::PI * v).sqrt()).ln() - 0.5 * 0.25 / v;
        assert_relative_eq!(gaussian_log_score(1.5, 1.0, v), expected, max_relative = 1e-12);
    }

    #[test]
    fn crps_far_in_the_tail_approaches_absolute_error() {
        let c = gaussian_crps(50.0, 0.0, 1.0);
        assert_relative_eq!(c, 50.0 - 0.5641895835, max_relative = 1e-3);
    }
}
