//! Three-qubit density matrices: validation, the two noisy GHZ-class
//! families, and the JSON state-file format.
//!
//! Basis index is `4a + 2b + c` for qubits A, B, C (A most significant).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{ComplexMatrix, C64, ZERO};

pub const DIM: usize = 8;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Loaded files with deviations up to this size are repaired rather than
/// rejected.
pub const REPAIR_TOL: f64 = 1e-10;

/// A validated three-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_shape(&matrix)?;
        let herm = matrix.hermiticity_residual();
        if herm > HERMITICITY_TOL {
            return Err(physicality("hermiticity", format!("residual {herm:.3e}")));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(physicality("unit trace", format!("trace deviates by {:.3e}", (tr - 1.0).abs())));
        }
        check_positive(&matrix)?;
        Ok(Self(matrix))
    }

    /// Like [`DensityMatrix::new`] but symmetrizes and renormalizes inputs
    /// whose Hermiticity or trace deviation is at most [`REPAIR_TOL`].
    pub fn new_repaired(matrix: ComplexMatrix) -> Result<Self> {
        check_shape(&matrix)?;
        let herm = matrix.hermiticity_residual();
        if herm > REPAIR_TOL {
            return Err(physicality("hermiticity", format!("residual {herm:.3e}")));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > REPAIR_TOL {
            return Err(physicality("unit trace", format!("trace deviates by {:.3e}", (tr - 1.0).abs())));
        }
        // Leave exact inputs untouched so that save/load round-trips bit for bit.
        let sym = if herm == 0.0 { matrix } else { matrix.hermitian_part() };
        let tr = sym.trace().re;
        let fixed = if (tr - 1.0).abs() <= 1e-14 { sym } else { sym.scale_real(1.0 / tr) };
        check_positive(&fixed)?;
        Ok(Self(fixed))
    }

    /// Convex mixture `Σ wᵢ ρᵢ` of valid states; weights must sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let mut acc = ComplexMatrix::zeros(DIM, DIM);
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::Argument(format!("negative mixture weight {w}")));
            }
            acc = &acc + &rho.0.scale_real(*w);
        }
        Self::new(acc)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix::identity(DIM).scale_real(1.0 / DIM as f64))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        if psi.len() != DIM {
            return Err(Error::Argument(format!("state vector must have {DIM} entries")));
        }
        let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Argument("state vector has zero or non-finite norm".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / n).collect();
        let mut m = ComplexMatrix::projector(&v);
        let tr = m.trace().re;
        m = m.scale_real(1.0 / tr);
        Self::new(m)
    }

    /// `(L₁⊗L₂⊗L₃) ρ (L₁⊗L₂⊗L₃)†` for an 8×8 operator `op` that is
    /// unitary; the result is re-validated.
    pub fn conjugate_unitary(&self, op: &ComplexMatrix) -> Result<Self> {
        let out = &(op * &self.0) * &op.adjoint();
        Self::new_repaired(out.hermitian_part())
    }

    /// Reads and validates a state file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_state()
    }

    pub fn to_json(&self) -> String {
        let file = StateFile::from_state(self);
        serde_json::to_string_pretty(&file).expect("state file serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::atomic_write(path, self.to_json().as_bytes())
    }
}

/// Loads a state from a JSON file; see [`DensityMatrix::load`].
pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::load(path)
}

fn check_shape(m: &ComplexMatrix) -> Result<()> {
    if m.rows() != DIM || m.cols() != DIM {
        return Err(Error::Format(format!("expected an 8x8 matrix, got {}x{}", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(Error::Format("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn check_positive(m: &ComplexMatrix) -> Result<()> {
    let min = m.hermitian_eigenvalues()[0];
    if min < -POSITIVITY_TOL {
        return Err(physicality("positive semidefinite", format!("smallest eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn physicality(invariant: &'static str, detail: String) -> Error {
    Error::Physicality { invariant, detail }
}

/// On-disk representation: `{"dim": 8, "re": [[..]; 8], "im": [[..]; 8]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    #[serde(serialize_with = "io::serialize_sci_rows")]
    pub re: Vec<Vec<f64>>,
    #[serde(serialize_with = "io::serialize_sci_rows")]
    pub im: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let re = (0..DIM).map(|r| (0..DIM).map(|c| m[(r, c)].re).collect()).collect();
        let im = (0..DIM).map(|r| (0..DIM).map(|c| m[(r, c)].im).collect()).collect();
        Self { dim: DIM, re, im }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        if self.dim != DIM {
            return Err(Error::Format(format!("dim must be {DIM}, got {}", self.dim)));
        }
        let shaped = |rows: &Vec<Vec<f64>>, name: &str| -> Result<()> {
            if rows.len() != DIM || rows.iter().any(|r| r.len() != DIM) {
                return Err(Error::Format(format!("\"{name}\" must be an 8x8 array")));
            }
            Ok(())
        };
        shaped(&self.re, "re")?;
        shaped(&self.im, "im")?;
        let m = ComplexMatrix::from_fn(DIM, DIM, |r, c| C64::new(self.re[r][c], self.im[r][c]));
        DensityMatrix::new_repaired(m)
    }
}

/// The two built-in state families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `p|Ψ_s⟩⟨Ψ_s| + (1−p)|00⟩⟨00|⊗I₂/2` with `|Ψ_s⟩ = cosθ|000⟩ + sinθ|111⟩`.
    ChiGhzClass { theta: f64 },
    /// `p|GHZ⟩⟨GHZ| + (1−p)/4 · diag(1,0)⊗I₄`.
    GhzColoredNoise,
}

impl Family {
    /// The chi family at θ = π/8.
    pub fn chi() -> Self {
        Family::ChiGhzClass { theta: FRAC_PI_8 }
    }

    pub fn build(&self, p: f64) -> Result<DensityMatrix> {
        match *self {
            Family::ChiGhzClass { theta } => build_chi_state(p, theta),
            Family::GhzColoredNoise => build_ghz_noise_state(p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::ChiGhzClass { .. } => "chi",
            Family::GhzColoredNoise => "ghz-noise",
        }
    }
}

/// A family together with its mixing parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    #[serde(flatten)]
    pub family: Family,
    pub p: f64,
}

impl FamilyParams {
    pub fn build(&self) -> Result<DensityMatrix> {
        self.family.build(self.p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

pub fn build_chi_state(p: f64, theta: f64) -> Result<DensityMatrix> {
    check_p(p)?;
    if !(0.0..=FRAC_PI_4).contains(&theta) {
        return Err(Error::Argument(format!("theta must lie in [0, pi/4], got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    let mut m = ComplexMatrix::zeros(DIM, DIM);
    m[(0, 0)] = C64::new(p * c * c, 0.0);
    m[(0, 7)] = C64::new(p * c * s, 0.0);
    m[(7, 0)] = C64::new(p * c * s, 0.0);
    m[(7, 7)] = C64::new(p * s * s, 0.0);
    // |00⟩⟨00| ⊗ I₂/2 occupies |000⟩ and |001⟩.
    m[(0, 0)] += (1.0 - p) / 2.0;
    m[(1, 1)] = C64::new((1.0 - p) / 2.0, 0.0);
    DensityMatrix::new(m)
}

pub fn build_ghz_noise_state(p: f64) -> Result<DensityMatrix> {
    check_p(p)?;
    let mut m = ComplexMatrix::zeros(DIM, DIM);
    let half = 0.5 * p;
    m[(0, 0)] = C64::new(half, 0.0);
    m[(0, 7)] = C64::new(half, 0.0);
    m[(7, 0)] = C64::new(half, 0.0);
    m[(7, 7)] = C64::new(half, 0.0);
    for i in 0..4 {
        m[(i, i)] += (1.0 - p) / 4.0;
    }
    DensityMatrix::new(m)
}

/// `(|000⟩ + |111⟩)/√2`.
pub fn ghz_vector() -> [C64; DIM] {
    let mut v = [ZERO; DIM];
    v[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[7] = C64::new(FRAC_1_SQRT_2, 0.0);
    v
}
