//! The Svetlichny operator, the Pauli correlation matrix M and the
//! singular-value bound 4λ₁ on max |⟨S⟩|.
//!
//! `M` is stored as a 3×9 matrix `M[j][3i + k] = tr[ρ(σᵢ⊗σⱼ⊗σₖ)]`: rows
//! index party B, columns the pair (A, C) in row-major order. With that
//! layout
//!
//! ```text
//! ⟨S⟩ = (b+b′)ᵀ M (a⊗c − a′⊗c′) + (b−b′)ᵀ M (a⊗c′ + a′⊗c)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{serialize_sci, serialize_sci_opt};
use crate::linalg::{
    kron3, mat_vec, norm, outer3, pauli_basis, svd_3x9, ComplexMatrix, Mat3x9, SvdResult, Vec3, Vec9,
    C64, REAL_TRACE_TOL,
};
use crate::oracle::{seesaw_max, OracleConfig};
use crate::state::DensityMatrix;
use crate::tightness::{assemble_settings, check_tightness, TightnessConfig};

/// Local hidden-variable (bi-local) bound on |⟨S⟩|.
pub const CLASSICAL_BOUND: f64 = 4.0;
/// Largest eigenvalue magnitude of the operator, 4√2.
pub const ALGEBRAIC_MAX: f64 = 4.0 * std::f64::consts::SQRT_2;
/// A value counts as a violation only above `CLASSICAL_BOUND + VIOLATION_MARGIN`.
pub const VIOLATION_MARGIN: f64 = 1e-9;
pub const UNIT_TOL: f64 = 1e-12;

pub fn violates_classical_bound(value: f64) -> bool {
    value > CLASSICAL_BOUND + VIOLATION_MARGIN
}

/// Measurement directions for the six dichotomic observables `g⃗·σ⃗`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementSettings {
    pub a: Vec3,
    pub a_p: Vec3,
    pub b: Vec3,
    pub b_p: Vec3,
    pub c: Vec3,
    pub c_p: Vec3,
}

impl MeasurementSettings {
    pub fn new(a: Vec3, a_p: Vec3, b: Vec3, b_p: Vec3, c: Vec3, c_p: Vec3) -> Result<Self> {
        let s = Self { a, a_p, b, b_p, c, c_p };
        for (name, v) in s.named() {
            let n = norm(v);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::Argument(format!("setting {name} is not a unit vector (norm {n})")));
            }
        }
        Ok(s)
    }

    pub fn named(&self) -> [(&'static str, &Vec3); 6] {
        [
            ("a", &self.a),
            ("a'", &self.a_p),
            ("b", &self.b),
            ("b'", &self.b_p),
            ("c", &self.c),
            ("c'", &self.c_p),
        ]
    }

    pub fn max_norm_error(&self) -> f64 {
        self.named().iter().map(|(_, v)| (norm(v) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// The observable `g⃗·σ⃗`.
pub fn observable(g: &Vec3) -> ComplexMatrix {
    let basis = pauli_basis();
    let mut out = ComplexMatrix::zeros(2, 2);
    for (k, gk) in g.iter().enumerate() {
        out = &out + &basis[k + 1].scale_real(*gk);
    }
    out
}

/// The 8×8 operator
/// `A⊗[(B+B′)⊗C + (B−B′)⊗C′] + A′⊗[(B−B′)⊗C − (B+B′)⊗C′]`.
pub fn svetlichny_operator(s: &MeasurementSettings) -> ComplexMatrix {
    let [a, a_p, b, b_p, c, c_p] = [s.a, s.a_p, s.b, s.b_p, s.c, s.c_p].map(|v| observable(&v));
    let bp = &b + &b_p;
    let bm = &b - &b_p;
    let first = &kron3(&a, &bp, &c) + &kron3(&a, &bm, &c_p);
    let second = &kron3(&a_p, &bm, &c) - &kron3(&a_p, &bp, &c_p);
    &first + &second
}

/// `tr(Sρ)` by direct operator evaluation.
pub fn svetlichny_value(rho: &DensityMatrix, s: &MeasurementSettings) -> f64 {
    let v = svetlichny_operator(s).trace_product(rho.matrix());
    debug_assert!(v.im.abs() <= 1e-10, "imaginary residue {}", v.im);
    v.re
}

/// `u = M(a⊗c − a′⊗c′)` and `w = M(a⊗c′ + a′⊗c)`.
pub fn uw_vectors(m: &Mat3x9, a: &Vec3, a_p: &Vec3, c: &Vec3, c_p: &Vec3) -> (Vec3, Vec3) {
    let (u1, u2) = target_vectors(a, a_p, c, c_p);
    (mat_vec(m, &u1), mat_vec(m, &u2))
}

/// `(a⊗c − a′⊗c′, a⊗c′ + a′⊗c)`.
pub fn target_vectors(a: &Vec3, a_p: &Vec3, c: &Vec3, c_p: &Vec3) -> (Vec9, Vec9) {
    let (ac, apcp, acp, apc) = (outer3(a, c), outer3(a_p, c_p), outer3(a, c_p), outer3(a_p, c));
    let mut u1 = [0.0; 9];
    let mut u2 = [0.0; 9];
    for i in 0..9 {
        u1[i] = ac[i] - apcp[i];
        u2[i] = acp[i] + apc[i];
    }
    (u1, u2)
}

/// `⟨S⟩` through the correlation matrix.
pub fn bilinear_value(m: &Mat3x9, s: &MeasurementSettings) -> f64 {
    let (u, w) = uw_vectors(m, &s.a, &s.a_p, &s.c, &s.c_p);
    let mut v = 0.0;
    for j in 0..3 {
        v += (s.b[j] + s.b_p[j]) * u[j] + (s.b[j] - s.b_p[j]) * w[j];
    }
    v
}

fn any_orthogonal(v: &Vec3) -> Vec3 {
    // Cross with the basis axis least aligned with v.
    let axis = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
        [1.0, 0.0, 0.0]
    } else if v[1].abs() <= v[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let c = [v[1] * axis[2] - v[2] * axis[1], v[2] * axis[0] - v[0] * axis[2], v[0] * axis[1] - v[1] * axis[0]];
    let n = norm(&c);
    [c[0] / n, c[1] / n, c[2] / n]
}

const BB_ZERO_TOL: f64 = 1e-12;

/// Optimal `(b, b′)` for fixed `a, a′, c, c′`: with `u, w` as in
/// [`uw_vectors`], `b ∝ u+w`, `b′ ∝ u−w` and the value is
/// `‖u+w‖ + ‖u−w‖`.
pub fn optimal_bb(m: &Mat3x9, a: &Vec3, a_p: &Vec3, c: &Vec3, c_p: &Vec3) -> (Vec3, Vec3, f64) {
    let (u, w) = uw_vectors(m, a, a_p, c, c_p);
    let plus = [u[0] + w[0], u[1] + w[1], u[2] + w[2]];
    let minus = [u[0] - w[0], u[1] - w[1], u[2] - w[2]];
    let (np, nm) = (norm(&plus), norm(&minus));
    let unit = |v: &Vec3, n: f64| [v[0] / n, v[1] / n, v[2] / n];
    let (b, b_p) = match (np > BB_ZERO_TOL, nm > BB_ZERO_TOL) {
        (true, true) => (unit(&plus, np), unit(&minus, nm)),
        (true, false) => {
            let b = unit(&plus, np);
            (b, any_orthogonal(&b))
        }
        (false, true) => {
            let b_p = unit(&minus, nm);
            (any_orthogonal(&b_p), b_p)
        }
        (false, false) => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
    };
    (b, b_p, np + nm)
}

/// Expectation values `T[α][β][γ] = tr[ρ(σ_α⊗σ_β⊗σ_γ)]` with `σ₀ = I₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTensor(pub [[[f64; 4]; 4]; 4]);

impl PauliTensor {
    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        let basis = pauli_basis();
        let mut t = [[[0.0; 4]; 4]; 4];
        for (al, sa) in basis.iter().enumerate() {
            for (be, sb) in basis.iter().enumerate() {
                for (ga, sc) in basis.iter().enumerate() {
                    let v: C64 = kron3(sa, sb, sc).trace_product(rho.matrix());
                    if v.im.abs() > REAL_TRACE_TOL {
                        return Err(Error::Consistency(format!(
                            "tr[rho P] for Pauli string ({al},{be},{ga}) has imaginary part {:.3e}",
                            v.im
                        )));
                    }
                    t[al][be][ga] = v.re;
                }
            }
        }
        Ok(Self(t))
    }

    /// The 3×9 correlation matrix (traceless Pauli strings only).
    pub fn correlation_block(&self) -> Mat3x9 {
        let mut m = [[0.0; 9]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    m[j][3 * i + k] = self.0[i + 1][j + 1][k + 1];
                }
            }
        }
        m
    }
}

/// M together with its SVD.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub m: Mat3x9,
    pub svd: SvdResult,
}

impl CorrelationMatrix {
    pub fn from_matrix(m: Mat3x9) -> Self {
        let svd = svd_3x9(&m);
        Self { m, svd }
    }

    pub fn singular_values(&self) -> Vec3 {
        self.svd.singular_values
    }

    pub fn lambda1(&self) -> f64 {
        self.svd.lambda1()
    }

    /// Entry `M_{j,ik}` with 1-based Pauli indices.
    pub fn entry(&self, i: usize, j: usize, k: usize) -> f64 {
        self.m[j - 1][3 * (i - 1) + (k - 1)]
    }
}

pub fn correlation_matrix(rho: &DensityMatrix) -> Result<CorrelationMatrix> {
    Ok(CorrelationMatrix::from_matrix(PauliTensor::from_state(rho)?.correlation_block()))
}

/// Search settings used when certifying a bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub tightness: TightnessConfig,
    pub oracle: OracleConfig,
    /// Run the see-saw even when the bound is certified tight.
    pub always_run_oracle: bool,
}

impl AnalysisConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            tightness: TightnessConfig { seed, ..TightnessConfig::default() },
            oracle: OracleConfig { seed, ..OracleConfig::default() },
            always_run_oracle: false,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self::with_seed(crate::DEFAULT_SEED)
    }
}

/// The bound 4λ₁ (or 4λ₁′) and what is known about its attainment.
///
/// `bound` is always a valid upper bound on max |⟨S⟩|. `tight` is set only
/// when explicit settings reaching it were constructed; otherwise the bound
/// is "not certified tight", which says nothing about the true maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(serialize_with = "serialize_sci")]
    pub bound: f64,
    #[serde(serialize_with = "serialize_sci")]
    pub lambda1: f64,
    pub degeneracy: usize,
    pub tight: bool,
    /// Best value reached at explicit settings, evaluated as `tr(Sρ)`.
    #[serde(serialize_with = "serialize_sci")]
    pub achieved: f64,
    pub settings: MeasurementSettings,
    #[serde(serialize_with = "serialize_sci")]
    pub decomposition_residual: f64,
    /// See-saw value, when the see-saw was run.
    #[serde(serialize_with = "serialize_sci_opt")]
    pub oracle_value: Option<f64>,
}

impl BoundReport {
    pub fn violates(&self) -> bool {
        violates_classical_bound(self.achieved)
    }
}

/// Bound report for `rho` given its correlation matrix.
pub fn certify_bound(rho: &DensityMatrix, corr: &CorrelationMatrix, cfg: &AnalysisConfig) -> Result<BoundReport> {
    let lambda1 = corr.lambda1();
    let dec = check_tightness(&corr.svd, &cfg.tightness);
    let mut best: Option<(f64, MeasurementSettings)> = None;
    if dec.found {
        let (settings, _) = assemble_settings(&dec, corr)?;
        best = Some((svetlichny_value(rho, &settings), settings));
    }
    let mut oracle_value = None;
    if !dec.found || cfg.always_run_oracle {
        let res = seesaw_max(rho, &cfg.oracle)?;
        oracle_value = Some(res.value);
        let value = svetlichny_value(rho, &res.settings);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, res.settings));
        }
    }
    let (achieved, settings) = best.expect("either tightness or oracle produced settings");
    Ok(BoundReport {
        bound: 4.0 * lambda1,
        lambda1,
        degeneracy: corr.svd.degeneracy(),
        tight: dec.found,
        achieved,
        settings,
        decomposition_residual: dec.residual,
        oracle_value,
    })
}

/// The unfiltered bound 4λ₁ for `rho`, with tightness and oracle results.
pub fn unfiltered_bound(rho: &DensityMatrix, cfg: &AnalysisConfig) -> Result<BoundReport> {
    let corr = correlation_matrix(rho)?;
    certify_bound(rho, &corr, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{build_chi_state, build_ghz_noise_state};
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    const X: Vec3 = [1.0, 0.0, 0.0];
    const MY: Vec3 = [0.0, -1.0, 0.0];
    const Z: Vec3 = [0.0, 0.0, 1.0];

    #[test]
    fn chi_correlation_matrix_matches_closed_form() {
        for p in [0.2, 0.5, 1.0] {
            let corr = correlation_matrix(&build_chi_state(p, FRAC_PI_8).unwrap()).unwrap();
            let h = SQRT_2 * p / 2.0;
            let mut want = [[0.0; 9]; 3];
            want[0][0] = h;
            want[0][4] = -h;
            want[1][1] = -h;
            want[1][3] = -h;
            want[2][8] = h;
            for r in 0..3 {
                for c in 0..9 {
                    assert!((corr.m[r][c] - want[r][c]).abs() < 1e-15, "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn ghz_noise_correlation_matrix_matches_closed_form() {
        let p = 0.7;
        let corr = correlation_matrix(&build_ghz_noise_state(p).unwrap()).unwrap();
        let mut want = [[0.0; 9]; 3];
        want[0][0] = p;
        want[0][4] = -p;
        want[1][1] = -p;
        want[1][3] = -p;
        assert_eq!(corr.m.len(), 3);
        for r in 0..3 {
            for c in 0..9 {
                assert!((corr.m[r][c] - want[r][c]).abs() < 1e-15);
            }
        }
        // σ_x⊗σ_y⊗σ_y sits in row j = 2, column (i, k) = (1, 2).
        assert!((corr.entry(1, 2, 2) + p).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_has_no_correlations() {
        let corr = correlation_matrix(&DensityMatrix::maximally_mixed()).unwrap();
        assert!(corr.m.iter().flatten().all(|&x| x == 0.0));
        assert_eq!(corr.lambda1(), 0.0);
    }

    #[test]
    fn ghz_value_at_optimal_b() {
        let ghz = build_ghz_noise_state(1.0).unwrap();
        let corr = correlation_matrix(&ghz).unwrap();
        let (b, b_p, v) = optimal_bb(&corr.m, &X, &MY, &X, &MY);
        assert!((v - 4.0 * SQRT_2).abs() < 1e-12);
        let s = MeasurementSettings::new(X, MY, b, b_p, X, MY).unwrap();
        assert!((svetlichny_value(&ghz, &s) - 4.0 * SQRT_2).abs() < 1e-12);
        assert!((bilinear_value(&corr.m, &s) - v).abs() < 1e-12);
    }

    #[test]
    fn chi_value_is_four_p() {
        for p in [0.3, 0.5, 0.9] {
            let corr = correlation_matrix(&build_chi_state(p, FRAC_PI_8).unwrap()).unwrap();
            let (_, _, v) = optimal_bb(&corr.m, &X, &MY, &X, &MY);
            assert!((v - 4.0 * p).abs() < 1e-12);
        }
    }

    #[test]
    fn all_z_settings_on_ghz_give_zero() {
        let ghz = build_ghz_noise_state(1.0).unwrap();
        let s = MeasurementSettings::new(Z, Z, Z, Z, Z, Z).unwrap();
        assert!(svetlichny_value(&ghz, &s).abs() < 1e-15);
    }

    #[test]
    fn zero_correlations_use_fallback_b() {
        let (b, b_p, v) = optimal_bb(&[[0.0; 9]; 3], &X, &MY, &X, &MY);
        assert_eq!(v, 0.0);
        assert!((norm(&b) - 1.0).abs() < 1e-15 && (norm(&b_p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_sided_degenerate_b() {
        // Only u+w is nonzero: b′ is chosen orthogonal to b.
        let mut m = [[0.0; 9]; 3];
        m[0][0] = 1.0;
        let y = [0.0, 1.0, 0.0];
        let (b, b_p, v) = optimal_bb(&m, &X, &y, &X, &X);
        // u = M(x⊗x − y⊗x) = (1,0,0); w = M(x⊗x + y⊗x) = (1,0,0).
        assert!((v - 2.0).abs() < 1e-15);
        assert_eq!(b, [1.0, 0.0, 0.0]);
        assert!(crate::linalg::dot(&b, &b_p).abs() < 1e-15);
    }

    #[test]
    fn settings_reject_non_unit() {
        assert!(MeasurementSettings::new([1.0, 0.1, 0.0], X, X, X, X, X).is_err());
    }

    #[test]
    fn unfiltered_bound_examples() {
        let cfg = AnalysisConfig::default();
        let r = unfiltered_bound(&build_chi_state(0.5, FRAC_PI_8).unwrap(), &cfg).unwrap();
        assert!((r.bound - 2.0).abs() < 1e-12);
        assert!(r.tight && !r.violates());
        assert!((r.achieved - 2.0).abs() < 1e-10);

        let r = unfiltered_bound(&build_ghz_noise_state(0.8).unwrap(), &cfg).unwrap();
        assert!((r.bound - 4.0 * SQRT_2 * 0.8).abs() < 1e-12);
        assert!(r.tight && r.violates());

        let r = unfiltered_bound(&DensityMatrix::maximally_mixed(), &cfg).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.achieved.abs() < 1e-12);
    }
}
