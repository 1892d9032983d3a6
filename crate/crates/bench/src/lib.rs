//! Fixtures shared by the benchmarks.

use svbound::{build_chi_state, build_ghz_noise_state, DensityMatrix};

/// States the benchmarks run on: chi at p = 0.4 and GHZ with noise at p = 0.5.
pub fn fixtures() -> [(&'static str, DensityMatrix); 2] {
    [
        ("chi_0.4", build_chi_state(0.4, std::f64::consts::FRAC_PI_8).expect("valid chi state")),
        ("ghz_noise_0.5", build_ghz_noise_state(0.5).expect("valid ghz-noise state")),
    ]
}
