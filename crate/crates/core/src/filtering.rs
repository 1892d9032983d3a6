//! Local filtering `ρ → (F_A⊗F_B⊗F_C) ρ (F_A⊗F_B⊗F_C)† / N` and the
//! filtered bound 4λ₁′.
//!
//! Each filter is split as `F = U Σ U†`. With `ϱ = (U†⊗V†⊗W†) ρ (U⊗V⊗W)`
//! and `δ_l = Σ_A σ_l Σ_A` (likewise η, γ for B and C), the matrix
//! `X[m][3l + n] = tr[ϱ(δ_l⊗η_m⊗γ_n)]` divided by
//! `N = tr[(Σ_A²⊗Σ_B²⊗Σ_C²)ϱ]` has the same singular values as the
//! correlation matrix M′ of the filtered state. Both are computed here,
//! by independent routes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron3, pauli_basis, spectral_2x2_psd, svd_3x9, ComplexMatrix, Mat3x9, SvdResult, REAL_TRACE_TOL};
use crate::state::DensityMatrix;
use crate::svetlichny::{correlation_matrix, CorrelationMatrix};

/// Normalizations at or below this value mean the filter annihilates the
/// state.
pub const ANNIHILATION_TOL: f64 = 1e-15;

/// Diagonal filter parameters: `Σ_A = diag(x, 1)`, `Σ_B = diag(y, 1)`,
/// `Σ_C = diag(z, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FilterParams {
    pub const IDENTITY: FilterParams = FilterParams { x: 1.0, y: 1.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y), ("z", z)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("filter parameter {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { x, y, z })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// A validated filter with its spectral factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterTriple {
    filters: [ComplexMatrix; 3],
    unitaries: [ComplexMatrix; 3],
    /// Canonical diagonal factors: `diag(s₁/s₂, 1)`, or `diag(s₁, 0)` for a
    /// rank-deficient filter.
    sigmas: [ComplexMatrix; 3],
}

impl FilterTriple {
    pub fn new(f_a: ComplexMatrix, f_b: ComplexMatrix, f_c: ComplexMatrix) -> Result<Self> {
        let filters = [f_a, f_b, f_c];
        let mut unitaries = Vec::with_capacity(3);
        let mut sigmas = Vec::with_capacity(3);
        for f in &filters {
            let (u, s) = spectral_2x2_psd(f)?;
            let (s1, s2) = (s[(0, 0)].re, s[(1, 1)].re);
            let canonical = if s2 > 0.0 { [s1 / s2, 1.0] } else { [s1, 0.0] };
            unitaries.push(u);
            sigmas.push(ComplexMatrix::from_real_diag(&canonical));
        }
        Ok(Self {
            filters,
            unitaries: unitaries.try_into().expect("three factors"),
            sigmas: sigmas.try_into().expect("three factors"),
        })
    }

    pub fn diagonal(params: FilterParams) -> Self {
        let d = |v: f64| ComplexMatrix::from_real_diag(&[v, 1.0]);
        Self::new(d(params.x), d(params.y), d(params.z)).expect("nonnegative diagonal filters are valid")
    }

    pub fn identity() -> Self {
        Self::diagonal(FilterParams::IDENTITY)
    }

    pub fn filters(&self) -> &[ComplexMatrix; 3] {
        &self.filters
    }

    pub fn unitaries(&self) -> &[ComplexMatrix; 3] {
        &self.unitaries
    }

    pub fn sigmas(&self) -> &[ComplexMatrix; 3] {
        &self.sigmas
    }

    /// `F_A⊗F_B⊗F_C`.
    pub fn operator(&self) -> ComplexMatrix {
        kron3(&self.filters[0], &self.filters[1], &self.filters[2])
    }

    pub fn local_unitary(&self) -> ComplexMatrix {
        kron3(&self.unitaries[0], &self.unitaries[1], &self.unitaries[2])
    }

    /// `F` with party `party`'s filter multiplied by `factor`.
    pub fn scaled(&self, party: usize, factor: f64) -> Result<Self> {
        let mut f = self.filters.clone();
        f[party] = f[party].scale_real(factor);
        let [a, b, c] = f;
        Self::new(a, b, c)
    }
}

/// Applies the filter; returns the normalized state and `N`.
pub fn apply_filter(rho: &DensityMatrix, f: &FilterTriple) -> Result<(DensityMatrix, f64)> {
    let op = f.operator();
    let out = &(&op * rho.matrix()) * &op.adjoint();
    let n = out.trace().re;
    if !(n > ANNIHILATION_TOL) {
        return Err(Error::Annihilation(n));
    }
    let normalized = out.hermitian_part().scale_real(1.0 / n);
    Ok((DensityMatrix::new_repaired(normalized)?, n))
}

/// `ϱ = (U†⊗V†⊗W†) ρ (U⊗V⊗W)`.
pub fn rotated_state(rho: &DensityMatrix, f: &FilterTriple) -> ComplexMatrix {
    let u = f.local_unitary();
    &(&u.adjoint() * rho.matrix()) * &u
}

fn real_trace(m: &ComplexMatrix, op: &ComplexMatrix, what: &str) -> Result<f64> {
    let v = op.trace_product(m);
    let scale = m.frobenius_norm().max(1.0) * op.frobenius_norm().max(1.0);
    if v.im.abs() > REAL_TRACE_TOL * scale {
        return Err(Error::Consistency(format!("{what} has imaginary part {:.3e}", v.im)));
    }
    Ok(v.re)
}

/// `X[m][3l + n] = tr[ϱ(δ_l⊗η_m⊗γ_n)]` in the layout of M.
pub fn x_matrix(rho: &DensityMatrix, f: &FilterTriple) -> Result<Mat3x9> {
    let varrho = rotated_state(rho, f);
    let basis = pauli_basis();
    let sandwich = |s: &ComplexMatrix, l: usize| &(s * &basis[l]) * s;
    let [sa, sb, sc] = f.sigmas();
    let mut x = [[0.0; 9]; 3];
    for l in 1..=3 {
        let delta = sandwich(sa, l);
        for m in 1..=3 {
            let eta = sandwich(sb, m);
            for n in 1..=3 {
                let gamma = sandwich(sc, n);
                x[m - 1][3 * (l - 1) + (n - 1)] = real_trace(&varrho, &kron3(&delta, &eta, &gamma), "X entry")?;
            }
        }
    }
    Ok(x)
}

/// `tr[(Σ_A²⊗Σ_B²⊗Σ_C²)ϱ]` for the canonical factors.
pub fn canonical_normalization(rho: &DensityMatrix, f: &FilterTriple) -> Result<f64> {
    let varrho = rotated_state(rho, f);
    let [sa, sb, sc] = f.sigmas();
    let op = kron3(&(sa * sa), &(sb * sb), &(sc * sc));
    real_trace(&varrho, &op, "normalization")
}

/// Everything known about a filtered state.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredAnalysis {
    pub rho_prime: DensityMatrix,
    /// `N` for the canonical factors, matching `x_matrix`.
    pub n_factor: f64,
    /// `N` for the filter exactly as given.
    pub n_raw: f64,
    pub x_matrix: Mat3x9,
    /// SVD of `X / N`.
    pub x_svd: SvdResult,
    /// M′ computed directly from ρ′.
    pub m_prime: CorrelationMatrix,
    pub lambda1_prime: f64,
    pub bound: f64,
}

/// Relative agreement required between λ₁′ from X/N and from M′.
const ROUTE_AGREEMENT: f64 = 1e-8;

/// The filtered bound 4λ₁′, with λ₁′ the top singular value of X/N.
pub fn filtered_bound(rho: &DensityMatrix, f: &FilterTriple) -> Result<FilteredAnalysis> {
    let (rho_prime, n_raw) = apply_filter(rho, f)?;
    let n_factor = canonical_normalization(rho, f)?;
    if !(n_factor > 0.0) {
        return Err(Error::Annihilation(n_factor));
    }
    let x = x_matrix(rho, f)?;
    let scaled = x.map(|row| row.map(|v| v / n_factor));
    let x_svd = svd_3x9(&scaled);
    let m_prime = correlation_matrix(&rho_prime)?;
    let lambda1_prime = x_svd.lambda1();
    let direct = m_prime.lambda1();
    if (lambda1_prime - direct).abs() > ROUTE_AGREEMENT * lambda1_prime.max(1.0) {
        return Err(Error::Consistency(format!(
            "top singular value of X/N ({lambda1_prime}) differs from that of M' ({direct})"
        )));
    }
    Ok(FilteredAnalysis {
        rho_prime,
        n_factor,
        n_raw,
        x_matrix: x,
        x_svd,
        m_prime,
        lambda1_prime,
        bound: 4.0 * lambda1_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{build_chi_state, build_ghz_noise_state};
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    #[test]
    fn identity_filter_is_a_no_op() {
        let rho = build_chi_state(0.4, FRAC_PI_8).unwrap();
        let (out, n) = apply_filter(&rho, &FilterTriple::identity()).unwrap();
        assert_eq!(n, 1.0);
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let x = x_matrix(&rho, &FilterTriple::identity()).unwrap();
        let m = correlation_matrix(&rho).unwrap().m;
        for r in 0..3 {
            for c in 0..9 {
                assert!((x[r][c] - m[r][c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chi_x_matrix_closed_form() {
        let (p, x, y, z) = (0.6, 1.7, 2.3, 0.8);
        let rho = build_chi_state(p, FRAC_PI_8).unwrap();
        let xm = x_matrix(&rho, &FilterTriple::diagonal(FilterParams::new(x, y, z).unwrap())).unwrap();
        // z < 1, so Σ_C is canonicalized to diag(1/z, 1) with U = σ₁; X then
        // differs from the displayed form by signs and a factor 1/z².
        let sv = svd_3x9(&xm).singular_values;
        let scale = 1.0 / (z * z);
        let pxyz = p * x * y * z;
        let d = -(2.0 - SQRT_2) * p / 4.0 - (1.0 - p) / 2.0 * (x * y).powi(2)
            + (2.0 + SQRT_2 * p) / 4.0 * (x * y * z).powi(2);
        let mut want = [pxyz * scale, pxyz * scale, d.abs() * scale];
        want.sort_by(|a, b| b.total_cmp(a));
        for (s, w) in sv.iter().zip(want) {
            assert!((s - w).abs() < 1e-12 * w.max(1.0), "{s} vs {w}");
        }
    }

    #[test]
    fn chi_x_matrix_entries_for_canonical_filters() {
        let (p, x, y, z) = (0.6, 1.7, 2.3, 1.4);
        let rho = build_chi_state(p, FRAC_PI_8).unwrap();
        let xm = x_matrix(&rho, &FilterTriple::diagonal(FilterParams::new(x, y, z).unwrap())).unwrap();
        let h = SQRT_2 * p * x * y * z / 2.0;
        let d = -(2.0 - SQRT_2) * p / 4.0 - (1.0 - p) / 2.0 * (x * y).powi(2)
            + (2.0 + SQRT_2 * p) / 4.0 * (x * y * z).powi(2);
        let mut want = [[0.0; 9]; 3];
        want[0][0] = h;
        want[0][4] = -h;
        want[1][1] = -h;
        want[1][3] = -h;
        want[2][8] = d;
        for r in 0..3 {
            for c in 0..9 {
                assert!((xm[r][c] - want[r][c]).abs() < 1e-13, "({r},{c}): {} vs {}", xm[r][c], want[r][c]);
            }
        }
    }

    #[test]
    fn ghz_noise_x_matrix_entries() {
        let (p, x, y, z) = (0.45, 1.2, 3.0, 2.5);
        let rho = build_ghz_noise_state(p).unwrap();
        let xm = x_matrix(&rho, &FilterTriple::diagonal(FilterParams::new(x, y, z).unwrap())).unwrap();
        let pxyz = p * x * y * z;
        let (x2, y2, z2) = (x * x, y * y, z * z);
        let d = -p / 2.0 + (1.0 - p) / 4.0 * x2 - (1.0 - p) / 4.0 * x2 * y2 - (1.0 - p) / 4.0 * x2 * z2
            + (1.0 + p) / 4.0 * x2 * y2 * z2;
        let mut want = [[0.0; 9]; 3];
        want[0][0] = pxyz;
        want[0][4] = -pxyz;
        want[1][1] = -pxyz;
        want[1][3] = -pxyz;
        want[2][8] = d;
        for r in 0..3 {
            for c in 0..9 {
                assert!((xm[r][c] - want[r][c]).abs() < 1e-12, "({r},{c})");
            }
        }
    }

    #[test]
    fn filtered_bound_matches_closed_form() {
        let (p, x, y, z) = (0.5, 0.6, 0.4, 3.0);
        let rho = build_ghz_noise_state(p).unwrap();
        let params = FilterParams::new(x, y, z).unwrap();
        let fa = filtered_bound(&rho, &FilterTriple::diagonal(params)).unwrap();
        let (x2, y2, z2) = (x * x, y * y, z * z);
        let n = p / 2.0 + (1.0 - p) / 4.0 * (x2 + x2 * y2 + x2 * z2) + (1.0 + p) / 4.0 * x2 * y2 * z2;
        let d = -p / 2.0 + (1.0 - p) / 4.0 * x2 * (1.0 - y2 - z2) + (1.0 + p) / 4.0 * x2 * y2 * z2;
        let s = SQRT_2 * p * x * y * z;
        assert!(s > d.abs());
        assert!((fa.n_raw - n).abs() < 1e-14);
        assert!((fa.bound - 4.0 * s / n).abs() < 1e-12);
    }

    #[test]
    fn annihilating_filter_is_rejected() {
        let rho = build_ghz_noise_state(0.0).unwrap();
        // Projecting party A onto |1⟩ removes all support of colored noise.
        let f = FilterTriple::new(
            ComplexMatrix::from_real_diag(&[0.0, 1.0]),
            ComplexMatrix::identity(2),
            ComplexMatrix::identity(2),
        )
        .unwrap();
        assert!(matches!(apply_filter(&rho, &f), Err(Error::Annihilation(_))));
        assert!(matches!(filtered_bound(&rho, &f), Err(Error::Annihilation(_))));
    }

    #[test]
    fn rank_deficient_filter_keeps_raw_sigma() {
        let f = FilterTriple::new(
            ComplexMatrix::from_real_diag(&[2.0, 0.0]),
            ComplexMatrix::identity(2),
            ComplexMatrix::from_real_diag(&[3.0, 1.5]),
        )
        .unwrap();
        assert_eq!(f.sigmas()[0], ComplexMatrix::from_real_diag(&[2.0, 0.0]));
        assert_eq!(f.sigmas()[2], ComplexMatrix::from_real_diag(&[2.0, 1.0]));
    }

    #[test]
    fn invalid_filter_params() {
        assert!(FilterParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(FilterParams::new(1.0, f64::NAN, 1.0).is_err());
    }
}
