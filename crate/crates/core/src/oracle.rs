//! See-saw lower bound on max ⟨S⟩.
//!
//! ⟨S⟩ is linear in each observable direction separately. Holding four of
//! them fixed, each pair `(b, b′)`, `(a, a′)` or `(c, c′)` enters as
//! `x·g + x′·g′` and is maximized by `x = g/‖g‖`, `x′ = g′/‖g′‖`. Cycling
//! through the pairs never decreases the value.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::io::serialize_sci;
use crate::linalg::{norm, Mat3x9, Vec3};
use crate::random::{rng_stream, unit_vector};
use crate::state::DensityMatrix;
use crate::svetlichny::{bilinear_value, correlation_matrix, optimal_bb, MeasurementSettings};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { restarts: 100, max_sweeps: 500, convergence_tol: 1e-12, seed: crate::DEFAULT_SEED }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(serialize_with = "serialize_sci")]
    pub value: f64,
    pub settings: MeasurementSettings,
    pub sweeps_used: usize,
    pub converged: bool,
}

fn normalize_or_keep(g: &Vec3, previous: &Vec3) -> Vec3 {
    let n = norm(g);
    if n > 1e-300 {
        [g[0] / n, g[1] / n, g[2] / n]
    } else {
        *previous
    }
}

/// Cyclic block-coordinate ascent on ⟨S⟩ for a fixed correlation matrix.
#[derive(Clone, Debug)]
pub struct Seesaw<'a> {
    m: &'a Mat3x9,
    pub settings: MeasurementSettings,
}

impl<'a> Seesaw<'a> {
    pub fn new(m: &'a Mat3x9, settings: MeasurementSettings) -> Self {
        Self { m, settings }
    }

    pub fn value(&self) -> f64 {
        bilinear_value(self.m, &self.settings)
    }

    /// Closed-form optimum of `(b, b′)`.
    pub fn update_b(&mut self) -> f64 {
        let s = &mut self.settings;
        let (b, b_p, value) = optimal_bb(self.m, &s.a, &s.a_p, &s.c, &s.c_p);
        s.b = b;
        s.b_p = b_p;
        value
    }

    /// Closed-form optimum of `(a, a′)`.
    pub fn update_a(&mut self) -> f64 {
        let s = &self.settings;
        let bp: Vec3 = std::array::from_fn(|j| s.b[j] + s.b_p[j]);
        let bm: Vec3 = std::array::from_fn(|j| s.b[j] - s.b_p[j]);
        let mut g = [0.0; 3];
        let mut g_p = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mjk = self.m[j][3 * i + k];
                    g[i] += mjk * (bp[j] * s.c[k] + bm[j] * s.c_p[k]);
                    g_p[i] += mjk * (bm[j] * s.c[k] - bp[j] * s.c_p[k]);
                }
            }
        }
        let s = &mut self.settings;
        s.a = normalize_or_keep(&g, &s.a);
        s.a_p = normalize_or_keep(&g_p, &s.a_p);
        self.value()
    }

    /// Closed-form optimum of `(c, c′)`.
    pub fn update_c(&mut self) -> f64 {
        let s = &self.settings;
        let bp: Vec3 = std::array::from_fn(|j| s.b[j] + s.b_p[j]);
        let bm: Vec3 = std::array::from_fn(|j| s.b[j] - s.b_p[j]);
        let mut h = [0.0; 3];
        let mut h_p = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mjk = self.m[j][3 * i + k];
                    h[k] += mjk * (bp[j] * s.a[i] + bm[j] * s.a_p[i]);
                    h_p[k] += mjk * (bm[j] * s.a[i] - bp[j] * s.a_p[i]);
                }
            }
        }
        let s = &mut self.settings;
        s.c = normalize_or_keep(&h, &s.c);
        s.c_p = normalize_or_keep(&h_p, &s.c_p);
        self.value()
    }

    /// One sweep in the order (b, b′) → (a, a′) → (c, c′); returns the
    /// value after each block.
    pub fn sweep(&mut self) -> [f64; 3] {
        [self.update_b(), self.update_a(), self.update_c()]
    }

    /// Sweeps until the per-sweep improvement drops below `tol`.
    pub fn run(&mut self, max_sweeps: usize, tol: f64) -> (f64, usize, bool) {
        let mut value = self.update_b();
        for sweep in 1..=max_sweeps {
            let [_, _, after] = self.sweep();
            let improvement = after - value;
            value = value.max(after);
            if improvement.abs() < tol {
                return (value, sweep, true);
            }
        }
        (value, max_sweeps, false)
    }
}

fn random_settings(seed: u64, index: u64) -> MeasurementSettings {
    let mut rng = rng_stream(seed, index);
    let mut v = || unit_vector(&mut rng);
    MeasurementSettings { a: v(), a_p: v(), b: v(), b_p: v(), c: v(), c_p: v() }
}

/// Best see-saw value over `cfg.restarts` random starts, working on the
/// correlation matrix only.
pub fn seesaw_max_matrix(m: &Mat3x9, cfg: &OracleConfig) -> OracleResult {
    let runs: Vec<OracleResult> = (0..cfg.restarts.max(1) as u64)
        .into_par_iter()
        .map(|idx| {
            let mut ss = Seesaw::new(m, random_settings(cfg.seed, idx));
            let (_, sweeps_used, converged) = ss.run(cfg.max_sweeps, cfg.convergence_tol);
            let mut settings = ss.settings;
            let mut value = bilinear_value(m, &settings);
            if value < 0.0 {
                // S is odd in a and a′.
                settings.a = settings.a.map(|x| -x);
                settings.a_p = settings.a_p.map(|x| -x);
                value = -value;
            }
            OracleResult { value, settings, sweeps_used, converged }
        })
        .collect();
    // First maximum wins so the result does not depend on thread timing.
    runs.into_iter()
        .reduce(|best, r| if r.value > best.value { r } else { best })
        .expect("at least one restart")
}

/// See-saw maximization of |tr(Sρ)| over all six measurement directions.
pub fn seesaw_max(rho: &DensityMatrix, cfg: &OracleConfig) -> Result<OracleResult> {
    let corr = correlation_matrix(rho)?;
    Ok(seesaw_max_matrix(&corr.m, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{build_chi_state, build_ghz_noise_state};
    use crate::svetlichny::svetlichny_value;
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    #[test]
    fn ghz_reaches_four_root_two() {
        let ghz = build_ghz_noise_state(1.0).unwrap();
        let res = seesaw_max(&ghz, &OracleConfig::default()).unwrap();
        assert!((res.value - 4.0 * SQRT_2).abs() < 1e-6, "{}", res.value);
        assert!((svetlichny_value(&ghz, &res.settings) - res.value).abs() < 1e-10);
    }

    #[test]
    fn chi_reaches_four_p() {
        for p in [0.2, 0.6, 1.0] {
            let rho = build_chi_state(p, FRAC_PI_8).unwrap();
            let res = seesaw_max(&rho, &OracleConfig::default()).unwrap();
            assert!((res.value - 4.0 * p).abs() < 1e-6, "p={p}: {}", res.value);
        }
    }

    #[test]
    fn maximally_mixed_is_zero() {
        let res = seesaw_max(&DensityMatrix::maximally_mixed(), &OracleConfig::default()).unwrap();
        assert!(res.value.abs() < 1e-9);
        assert!(res.settings.max_norm_error() < 1e-12);
    }

    #[test]
    fn zero_gradient_keeps_direction() {
        let m = [[0.0; 9]; 3];
        let start = random_settings(1, 0);
        let mut ss = Seesaw::new(&m, start);
        ss.update_a();
        ss.update_c();
        assert_eq!(ss.settings.a, start.a);
        assert_eq!(ss.settings.c_p, start.c_p);
    }

    #[test]
    fn same_seed_same_answer() {
        let rho = build_ghz_noise_state(0.6).unwrap();
        let cfg = OracleConfig { restarts: 10, ..Default::default() };
        assert_eq!(seesaw_max(&rho, &cfg).unwrap(), seesaw_max(&rho, &cfg).unwrap());
    }
}
