//! Dense complex linear algebra: matrices, a cyclic Jacobi eigensolver for
//! Hermitian matrices, singular values, range bases, and projection checks.
//!
//! Everything here is plain `Vec<Complex64>` row-major storage and pure
//! functions; no external solver backends. The Jacobi sweep is slow for large
//! matrices but unconditionally stable, which is what the oracle suites need.

use num_complex::Complex64;
use thiserror::Error;

/// Iteration cap for the Jacobi eigensolver, in full sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal convergence threshold, relative to the Frobenius norm.
pub const JACOBI_OFF_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("matrix is not Hermitian: symmetry residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        Self { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from nested real rows (imaginary parts zero).
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::new(r, c, entries)
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend_from_slice(row);
        }
        Self::new(r, c, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.rows, self.cols, entries)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.rows, self.cols, entries)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let entries = self.entries.iter().map(|a| a * c).collect();
        Self::new(self.rows, self.cols, entries)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Matrix whose columns are the selected columns of `self`.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for (jo, &ji) in idx.iter().enumerate() {
            for i in 0..self.rows {
                out[(i, jo)] = self[(i, ji)];
            }
        }
        out
    }

    /// Horizontal concatenation of column families.
    pub fn hcat(parts: &[&Self]) -> Self {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            assert_eq!(p.rows, rows, "row mismatch in hcat");
            for j in 0..p.cols {
                for i in 0..rows {
                    out[(i, at + j)] = p[(i, j)];
                }
            }
            at += p.cols;
        }
        out
    }

    /// Apply to a vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Exact average with the conjugate transpose, `(M + M*)/2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    /// Max entry deviation from the conjugate transpose.
    pub fn hermitian_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Full eigensystem of a Hermitian matrix: `values` ascending, `vectors`
/// orthonormal columns in matching order.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input must be Hermitian within `tol` in the max-entry sense; the
/// iteration then runs on the exactly symmetrized part. Convergence is
/// declared when the off-diagonal Frobenius mass drops below
/// `JACOBI_OFF_TOL` times the Frobenius norm of the input.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenSystem, DenseError> {
    assert!(m.is_square(), "hermitian_eig needs a square matrix");
    let n = m.rows();
    let residual = m.hermitian_residual();
    if residual > tol {
        return Err(DenseError::NotHermitian { residual, tol });
    }

    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = JACOBI_OFF_TOL * scale;

    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = n < 2 || off(&a) <= threshold;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // phase beta so that e^{-i beta} a_pq is real nonnegative
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // rotation angle from the real symmetric 2x2 [[app, mag],[mag, aqq]]
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns p,q of the unitary: U_pp=c, U_qp=-s*conj(phase), U_pq=s*phase, U_qq=c
                let sp = s * phase;
                let spc = s * phase.conj();
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_kp = akp * c - akq * spc;
                    let new_kq = akp * sp + akq * c;
                    a[(k, p)] = new_kp;
                    a[(k, q)] = new_kq;
                    a[(p, k)] = new_kp.conj();
                    a[(q, k)] = new_kq.conj();
                }
                let new_pp = c * c * app - 2.0 * c * s * mag + s * s * aqq;
                let new_qq = s * s * app + 2.0 * c * s * mag + c * c * aqq;
                a[(p, p)] = Complex64::new(new_pp, 0.0);
                a[(q, q)] = Complex64::new(new_qq, 0.0);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * spc;
                    v[(k, q)] = vkp * sp + vkq * c;
                }
            }
        }
        converged = off(&a) <= threshold;
    }
    if !converged {
        return Err(DenseError::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(EigenSystem { values, vectors })
}

/// Largest singular value, computed as the square root of the top eigenvalue
/// of `M* M`. Returns 0 for the zero matrix.
pub fn largest_singular_value(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    // M*M is exactly Hermitian in floating point, so the tolerance is nominal.
    let gram = m.adjoint().mul(m);
    let eig = hermitian_eig(&gram, 1e-8 * (1.0 + gram.max_abs()))
        .expect("Gram matrix eigendecomposition cannot fail");
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// One-sided Jacobi orthogonalization of the columns. Returns the rotated
/// matrix (columns mutually orthogonal) together with the column norms,
/// which are the singular values. Unlike the Gram-matrix route this keeps
/// high relative accuracy for small singular values, which the rank
/// decisions below depend on.
fn one_sided_jacobi(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
    let mut a = m.clone();
    let n = a.rows();
    let cols = a.cols();
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut gpp = 0.0f64;
                let mut gqq = 0.0f64;
                let mut gpq = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let u = a[(i, p)];
                    let v = a[(i, q)];
                    gpp += u.norm_sqr();
                    gqq += v.norm_sqr();
                    gpq += u.conj() * v;
                }
                let mag = gpq.norm();
                if mag <= 1e-15 * (gpp * gqq).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gpq / mag;
                let theta = (gqq - gpp) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = s * phase;
                let spc = s * phase.conj();
                for i in 0..n {
                    let u = a[(i, p)];
                    let v = a[(i, q)];
                    a[(i, p)] = u * c - v * spc;
                    a[(i, q)] = u * sp + v * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigmas: Vec<f64> = (0..cols)
        .map(|j| (0..n).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    (a, sigmas)
}

/// All singular values, descending, via one-sided Jacobi. Small values keep
/// high relative accuracy, unlike the square root of Gram eigenvalues whose
/// noise floor sits at sqrt(machine eps) times sigma_max.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let (_, mut sigmas) = one_sided_jacobi(m);
    sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigmas
}

/// Orthonormal basis of the column space. Singular values below
/// `tol * sigma_max` are treated as zero; the zero matrix yields an empty
/// family (n x 0).
pub fn orthonormal_range(m: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let n = m.rows();
    if n == 0 || m.cols() == 0 {
        return ComplexMatrix::zeros(n, 0);
    }
    let (rotated, sigmas) = one_sided_jacobi(m);
    let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return ComplexMatrix::zeros(n, 0);
    }
    let cut = tol * sigma_max;
    let mut order: Vec<usize> = (0..sigmas.len()).filter(|&j| sigmas[j] > cut).collect();
    order.sort_by(|&i, &j| sigmas[j].partial_cmp(&sigmas[i]).unwrap());
    let mut out = ComplexMatrix::zeros(n, order.len());
    for (jo, &ji) in order.iter().enumerate() {
        for i in 0..n {
            out[(i, jo)] = rotated[(i, ji)] / sigmas[ji];
        }
    }
    out
}

/// True iff `M` is Hermitian and idempotent within `tol` (max-entry norm).
pub fn check_orthogonal_projection(m: &ComplexMatrix, tol: f64) -> bool {
    assert!(m.is_square(), "projection check needs a square matrix");
    if m.hermitian_residual() > tol {
        return false;
    }
    m.mul(m).sub(m).max_abs() <= tol
}

/// Inverse by Gaussian elimination with partial pivoting.
pub fn invert(m: &ComplexMatrix) -> Result<ComplexMatrix, DenseError> {
    assert!(m.is_square());
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[(col, col)].norm();
        for r in (col + 1)..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Err(DenseError::Singular);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot, j)];
                inv[(pivot, j)] = tmp;
            }
        }
        let d = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let delta_a = f * a[(col, j)];
                a[(r, j)] -= delta_a;
                let delta_i = f * inv[(col, j)];
                inv[(r, j)] -= delta_i;
            }
        }
    }
    Ok(inv)
}

/// Modified Gram-Schmidt orthonormalization of the columns. The input must
/// have full column rank; intended for turning random Gaussian matrices into
/// unitaries.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let mut q = m.clone();
    let n = q.rows();
    for j in 0..q.cols() {
        for k in 0..j {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..n {
                dot += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..n {
                let adj = dot * q[(i, k)];
                q[(i, j)] -= adj;
            }
        }
        let norm: f64 = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "rank-deficient input to orthonormalize_columns");
        for i in 0..n {
            q[(i, j)] /= norm;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        let entries = (0..rows * cols)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::new(rows, cols, entries)
    }

    #[test]
    fn eig_identity() {
        let eig = hermitian_eig(&ComplexMatrix::identity(3), 1e-12).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eig_diagonal() {
        let m = ComplexMatrix::from_real_rows(&[&[0.64, 0.0], &[0.0, 0.36]]);
        let eig = hermitian_eig(&m, 1e-12).unwrap();
        assert_eq!(eig.values, vec![0.36, 0.64]);
    }

    #[test]
    fn eig_two_by_two_hand_values() {
        // characteristic polynomial x^2 - 3x + 1
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let eig = hermitian_eig(&m, 1e-12).unwrap();
        let lo = (3.0 - 5.0f64.sqrt()) / 2.0;
        let hi = (3.0 + 5.0f64.sqrt()) / 2.0;
        assert!((eig.values[0] - lo).abs() < 1e-14);
        assert!((eig.values[1] - hi).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.0, 0.0]]);
        assert!(matches!(
            hermitian_eig(&m, 1e-10),
            Err(DenseError::NotHermitian { .. })
        ));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 5, 16, 64] {
            let g = random_matrix(&mut rng, n, n);
            let m = g.hermitian_part();
            let eig = hermitian_eig(&m, 1e-10).unwrap();
            // sum of lambda_k v_k v_k*
            let mut rebuilt = ComplexMatrix::zeros(n, n);
            for k in 0..n {
                let v = eig.vectors.column(k);
                for i in 0..n {
                    for j in 0..n {
                        rebuilt[(i, j)] += v[i] * v[j].conj() * eig.values[k];
                    }
                }
            }
            let scale = m.max_abs().max(1e-30);
            assert!(rebuilt.sub(&m).max_abs() <= 1e-9 * scale, "n={n}");
            // orthonormality of the eigenvector family
            let gram = eig.vectors.adjoint().mul(&eig.vectors);
            assert!(gram.sub(&ComplexMatrix::identity(n)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn singular_value_hand_cases() {
        assert_eq!(largest_singular_value(&ComplexMatrix::zeros(2, 2)), 0.0);
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let expect = ((3.0 + 5.0f64.sqrt()) / 2.0).sqrt();
        assert!((largest_singular_value(&m) - expect).abs() < 1e-12);
        let m = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.0, 0.0]]);
        assert!((largest_singular_value(&m) - 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_value_matches_gram_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3usize, 8, 24, 64] {
            let m = random_matrix(&mut rng, n, n);
            let sv = largest_singular_value(&m);
            let gram = m.adjoint().mul(&m);
            let top = hermitian_eig(&gram, 1e-8).unwrap().values.last().unwrap().max(0.0);
            assert!((sv - top.sqrt()).abs() <= 1e-10 * top.sqrt().max(1.0));
        }
    }

    #[test]
    fn singular_values_resolve_exact_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // rank-3 8x8 matrix: five singular values must come out far below
        // the 1e-10 rank threshold
        let left = random_matrix(&mut rng, 8, 3);
        let right = random_matrix(&mut rng, 3, 8);
        let m = left.mul(&right);
        let sigmas = singular_values(&m);
        assert_eq!(sigmas.len(), 8);
        let top = sigmas[0];
        assert!((top - largest_singular_value(&m)).abs() <= 1e-10 * top);
        for &s in &sigmas[3..] {
            assert!(s <= 1e-12 * top, "spurious singular value {s:.3e}");
        }
    }

    #[test]
    fn range_hand_cases() {
        let full = orthonormal_range(&ComplexMatrix::identity(2), 1e-10);
        assert_eq!(full.cols(), 2);
        let m = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.0, 0.0]]);
        let basis = orthonormal_range(&m, 1e-10);
        assert_eq!(basis.cols(), 1);
        assert!((basis[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(basis[(1, 0)].norm() < 1e-12);
        let empty = orthonormal_range(&ComplexMatrix::zeros(3, 3), 1e-10);
        assert_eq!(empty.cols(), 0);
    }

    #[test]
    fn range_spans_column_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, r) in [(4usize, 2usize), (8, 5), (12, 1)] {
            // random rank-r matrix
            let left = random_matrix(&mut rng, n, r);
            let right = random_matrix(&mut rng, r, n);
            let m = left.mul(&right);
            let q = orthonormal_range(&m, 1e-10);
            assert_eq!(q.cols(), r);
            let gram = q.adjoint().mul(&q);
            assert!(gram.sub(&ComplexMatrix::identity(r)).max_abs() <= 1e-10);
            // M = (QQ*)M
            let proj = q.mul(&q.adjoint()).mul(&m);
            assert!(proj.sub(&m).max_abs() <= 1e-9 * m.max_abs());
        }
    }

    #[test]
    fn projection_check_cases() {
        let p = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(check_orthogonal_projection(&p, 1e-12));
        // idempotent but not Hermitian
        let t = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.0, 0.0]]);
        assert!(!check_orthogonal_projection(&t, 1e-12));
        // rank-1 projection onto (0.8, 0.6)
        let q = ComplexMatrix::from_real_rows(&[&[0.64, 0.48], &[0.48, 0.36]]);
        assert!(check_orthogonal_projection(&q, 1e-12));
    }

    #[test]
    fn invert_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 6, 6).add(&ComplexMatrix::identity(6).scale(c(3.0, 0.0)));
        let inv = invert(&m).unwrap();
        let resid = m.mul(&inv).sub(&ComplexMatrix::identity(6)).max_abs();
        assert!(resid < 1e-12);
    }

    #[test]
    fn invert_rejects_singular() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(invert(&m), Err(DenseError::Singular)));
    }

    #[test]
    fn orthonormalize_gives_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_matrix(&mut rng, 8, 8);
        let u = orthonormalize_columns(&g);
        let gram = u.adjoint().mul(&u);
        assert!(gram.sub(&ComplexMatrix::identity(8)).max_abs() < 1e-12);
    }
}
