//! Seeded, platform-independent random number generation.
//!
//! Everything downstream of a `--seed` flag must reproduce bit-identically
//! across runs and platforms, so this module uses the SplitMix64 output
//! function as a counter-based generator instead of an external RNG whose
//! stream could change between library versions. Normals come from the
//! Box-Muller transform.

use crate::geometry::SpherePoint;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 stream: state advances by a fixed odd constant and each output
/// is a finalizer of the state, so the k-th value is a pure function of
/// (seed, k).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream for a sub-task (restart, fold, trial).
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut g = Self::new(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F));
        g.next_u64(); // decorrelate nearby stream ids
        g
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in the open interval (0, 1): 53 mantissa bits, offset by half
    /// an ulp so 0 is never produced (Box-Muller takes a log).
    pub fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }

    /// Log-uniform in [lo, hi); both bounds must be positive.
    pub fn next_log_range(&mut self, lo: f64, hi: f64) -> f64 {
        (self.next_range(lo.ln(), hi.ln())).exp()
    }

    /// A pair of independent standard normals (Box-Muller).
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// Fills `out` with standard normals, consuming pairs in order.
    pub fn fill_normals(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i + 1 < out.len() {
            let (a, b) = self.next_normal_pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.next_normal_pair().0;
        }
    }

    /// Uniform point on the sphere: longitude uniform, sin(latitude) uniform
    /// (area-preserving inverse transform). Never returns an exact pole.
    pub fn next_sphere_point(&mut self) -> SpherePoint {
        loop {
            let lon = self.next_range(-std::f64::consts::PI, std::f64::consts::PI);
            let lat = (2.0 * self.next_unit() - 1.0).asin();
            if lat.abs() < std::f64::consts::FRAC_PI_2 {
                // new() cannot fail here: lon and lat are in range.
                return SpherePoint::new(lon, lat).unwrap();
            }
        }
    }

    /// Fisher-Yates shuffle of index order, used for fold assignment.
    pub fn shuffled_indices(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn units_stay_in_open_interval() {
        let mut g = SplitMix64::new(7);
        for _ in 0..10_000 {
            let u = g.next_unit();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normals_have_plausible_moments() {
        let mut g = SplitMix64::new(1234);
        let mut buf = vec![0.0; 100_000];
        g.fill_normals(&mut buf);
        let mean = buf.iter().sum::<f64>() / buf.len() as f64;
        let var = buf.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / buf.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn sphere_points_cover_both_hemispheres() {
        let mut g = SplitMix64::new(9);
        let pts: Vec<_> = (0..1000).map(|_| g.next_sphere_point()).collect();
        let north = pts.iter().filter(|p| p.lat() > 0.0).count();
        assert!(north > 400 && north < 600);
        assert!(pts.iter().all(|p| !p.is_pole()));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut g = SplitMix64::new(3);
        let mut idx = g.shuffled_indices(37);
        idx.sort_unstable();
        assert_eq!(idx, (0..37).collect::<Vec<_>>());
    }
}
