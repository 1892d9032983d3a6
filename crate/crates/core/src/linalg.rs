//! Dense linear algebra sized for three-qubit problems.
//!
//! Complex matrices are small (2×2 up to 8×8) and stored row-major. Real
//! correlation matrices are fixed-size 3×9 arrays. The SVD is a one-sided
//! Jacobi sweep on the 9×3 transpose, which keeps small singular values
//! accurate to round-off in absolute terms.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Vec3 = [f64; 3];
pub type Vec9 = [f64; 9];
/// Real 3×9 matrix, rows first.
pub type Mat3x9 = [[f64; 9]; 3];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Two singular values are degenerate when they differ by at most this
/// fraction of `max(1, s_max)`.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Imaginary residue allowed on traces that are mathematically real.
pub const REAL_TRACE_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Outer product |v⟩⟨v|.
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for r in 0..self.rows {
            for s in 0..self.cols {
                acc += self[(r, s)] * other[(s, r)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermiticity, `max |A_rc − conj(A_cr)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + adj[(r, c)]) * 0.5)
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Only the Hermitian part of `self` is used.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let m = nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| h[(r, c)]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrix σ₁, σ₂ or σ₃.
pub fn pauli(index: usize) -> Result<ComplexMatrix> {
    let entries = match index {
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => return Err(Error::Argument(format!("Pauli index must be 1, 2 or 3, got {index}"))),
    };
    Ok(ComplexMatrix::from_row_major(2, 2, entries.to_vec()))
}

/// σ₀ = I₂ followed by the three Pauli matrices.
pub fn pauli_basis() -> [ComplexMatrix; 4] {
    [
        ComplexMatrix::identity(2),
        pauli(1).unwrap(),
        pauli(2).unwrap(),
        pauli(3).unwrap(),
    ]
}

/// Kronecker product, `row(A⊗B) = row(A)·rows(B) + row(B)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

pub fn kron3(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    kron(&kron(a, b), c)
}

/// Spectral factors `F = U·diag(s₁, s₂)·U†` of a 2×2 positive semidefinite
/// matrix, with `s₁ ≥ s₂ ≥ 0`.
pub fn spectral_2x2_psd(f: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if f.rows() != 2 || f.cols() != 2 {
        return Err(Error::Domain(format!("expected a 2x2 matrix, got {}x{}", f.rows(), f.cols())));
    }
    if !f.is_finite() {
        return Err(Error::Domain("filter has non-finite entries".into()));
    }
    let scale = f.frobenius_norm().max(1.0);
    let herm = f.hermiticity_residual();
    if herm > 1e-12 * scale {
        return Err(Error::Domain(format!("filter is not Hermitian (residual {herm:.3e})")));
    }
    let a = f[(0, 0)].re;
    let d = f[(1, 1)].re;
    let b = (f[(0, 1)] + f[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let radius = half_gap.hypot(b.norm());
    let s1 = mean + radius;
    let mut s2 = mean - radius;
    if s2 < -1e-12 * scale {
        return Err(Error::Domain(format!("filter is not positive semidefinite (eigenvalue {s2:.3e})")));
    }
    s2 = s2.max(0.0);

    let unitary = if b.norm() == 0.0 {
        if a >= d {
            ComplexMatrix::identity(2)
        } else {
            ComplexMatrix::from_row_major(2, 2, vec![ZERO, ONE, ONE, ZERO])
        }
    } else {
        // Pick the eigenvector formula without cancellation.
        let (v0, v1) = if a >= d {
            (C64::new(s1 - d, 0.0), b.conj())
        } else {
            (b, C64::new(s1 - a, 0.0))
        };
        let n = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        let (v0, v1) = (v0 / n, v1 / n);
        ComplexMatrix::from_row_major(2, 2, vec![v0, -v1.conj(), v1, v0.conj()])
    };
    Ok((unitary, ComplexMatrix::from_real_diag(&[s1, s2])))
}

/// Full singular value decomposition of a 3×9 real matrix,
/// `A = Σᵢ sᵢ uᵢ vᵢᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec3,
    /// Orthonormal left vectors (3-dimensional), paired with `singular_values`.
    pub left_vectors: [Vec3; 3],
    /// Orthonormal basis of R⁹; the first three pair with `singular_values`.
    pub right_vectors: [Vec9; 9],
}

impl SvdResult {
    pub fn lambda1(&self) -> f64 {
        self.singular_values[0]
    }

    /// Number of singular values within [`DEGENERACY_TOL`] of λ₁.
    pub fn degeneracy(&self) -> usize {
        let s1 = self.singular_values[0];
        let tol = DEGENERACY_TOL * s1.max(1.0);
        self.singular_values.iter().filter(|&&s| (s1 - s).abs() <= tol).count()
    }

    /// Orthonormal basis of the right singular subspace belonging to λ₁.
    ///
    /// For a zero matrix every vector is a maximizer and the whole of R⁹ is
    /// returned.
    pub fn leading_subspace(&self) -> Vec<Vec9> {
        if self.singular_values[0] <= DEGENERACY_TOL {
            return self.right_vectors.to_vec();
        }
        self.right_vectors[..self.degeneracy()].to_vec()
    }

    pub fn reconstruct(&self) -> Mat3x9 {
        let mut out = [[0.0; 9]; 3];
        for k in 0..3 {
            let s = self.singular_values[k];
            for (r, row) in out.iter_mut().enumerate() {
                for (c, x) in row.iter_mut().enumerate() {
                    *x += s * self.left_vectors[k][r] * self.right_vectors[k][c];
                }
            }
        }
        out
    }
}

pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    dot(a, a).sqrt()
}

pub fn frobenius_3x9(a: &Mat3x9) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// `A·v` for a 3×9 matrix.
pub fn mat_vec(a: &Mat3x9, v: &Vec9) -> Vec3 {
    [dot(&a[0], v), dot(&a[1], v), dot(&a[2], v)]
}

/// `a ⊗ c` with index `3i + k`.
pub fn outer3(a: &Vec3, c: &Vec3) -> Vec9 {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for k in 0..3 {
            out[3 * i + k] = a[i] * c[k];
        }
    }
    out
}

fn jacobi_columns(cols: &mut [Vec9; 3], rot: &mut [Vec3; 3]) {
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..2 {
            for q in (p + 1)..3 {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..9 {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = cs * x - sn * y;
                    cols[q][i] = sn * x + cs * y;
                }
                // rot[k] holds column k of the accumulated rotation.
                for i in 0..3 {
                    let (x, y) = (rot[p][i], rot[q][i]);
                    rot[p][i] = cs * x - sn * y;
                    rot[q][i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Extends `basis` (orthonormal, fewer than 9 vectors) to an orthonormal
/// basis of R⁹ using the standard basis as candidates.
fn complete_basis(basis: &mut Vec<Vec9>) {
    while basis.len() < 9 {
        let mut best: Option<(f64, Vec9)> = None;
        for e in 0..9 {
            let mut v = [0.0; 9];
            v[e] = 1.0;
            // Two Gram-Schmidt passes.
            for _ in 0..2 {
                for b in basis.iter() {
                    let d = dot(&v, b);
                    for i in 0..9 {
                        v[i] -= d * b[i];
                    }
                }
            }
            let n = norm(&v);
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, v));
            }
        }
        let (n, mut v) = best.expect("nine candidates");
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
}

/// SVD of a real 3×9 matrix.
pub fn svd_3x9(a: &Mat3x9) -> SvdResult {
    // Columns of Aᵀ are the rows of A.
    let mut cols = *a;
    let mut rot = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    jacobi_columns(&mut cols, &mut rot);

    let norms = [norm(&cols[0]), norm(&cols[1]), norm(&cols[2])];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let scale = norms[order[0]];
    let cutoff = 1e-15 * scale.max(f64::MIN_POSITIVE);
    let mut singular_values = [0.0; 3];
    let mut left_vectors = [[0.0; 3]; 3];
    let mut right: Vec<Vec9> = Vec::with_capacity(9);
    let mut pending = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        singular_values[slot] = norms[k];
        left_vectors[slot] = rot[k];
        if norms[k] > cutoff {
            let mut v = cols[k];
            v.iter_mut().for_each(|x| *x /= norms[k]);
            right.push(v);
        } else {
            pending.push(slot);
        }
    }
    // Null directions: fill in from the orthogonal complement, keeping the
    // slot order so that right_vectors[i] pairs with singular_values[i].
    let mut full = right.clone();
    complete_basis(&mut full);
    let mut right_vectors = [[0.0; 9]; 9];
    let mut next_filled = 0;
    let mut next_extra = right.len();
    for slot in 0..3 {
        if pending.contains(&slot) {
            right_vectors[slot] = full[next_extra];
            next_extra += 1;
        } else {
            right_vectors[slot] = full[next_filled];
            next_filled += 1;
        }
    }
    for v in right_vectors.iter_mut().skip(3) {
        *v = full[next_extra];
        next_extra += 1;
    }
    SvdResult { singular_values, left_vectors, right_vectors }
}
