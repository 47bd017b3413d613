//! Shared fixtures for the benchmark suite.

use spheregp::geometry::{generate_grid, GridSpec, SpherePoint};
use spheregp::gp::{simulate, Dataset};
use spheregp::kernels::{axisym_exp_product, KernelSpec};

/// The exponential product kernel exercised by every benchmark.
pub fn bench_kernel() -> KernelSpec {
    axisym_exp_product(1.5, 0.9, 0.35).unwrap()
}

pub fn bench_sites(n: usize) -> Vec<SpherePoint> {
    generate_grid(&GridSpec::Fibonacci { n_points: n }).unwrap()
}

/// A dataset simulated from the benchmark kernel, fixed seed.
pub fn bench_dataset(n: usize) -> Dataset {
    let sites = bench_sites(n);
    let draws = simulate(&bench_kernel(), &sites, 4242, 1).unwrap();
    let values: Vec<f64> = (0..sites.len()).map(|j| draws[(0, j)]).collect();
    Dataset::new(sites, values).unwrap()
}
