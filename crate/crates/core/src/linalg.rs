//! Dense complex linear algebra on small square matrices.
//!
//! Everything downstream (states, channels, Choi matrices, states over time)
//! lives in operator algebras of dimension at most a few dozen, so the
//! representation is a plain row-major `Vec<Complex>` and the eigensolver is
//! a cyclic Jacobi iteration: deterministic, dependency-free and accurate to
//! near machine precision at these sizes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Complex = Complex64;

/// Shorthand constructor for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// Hard cap on Jacobi sweeps; Hermitian input converges long before this.
const MAX_JACOBI_SWEEPS: usize = 100;
/// Off-diagonal Frobenius threshold, relative to the input norm.
const JACOBI_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
    #[error("eigensolver failed to converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from real entries, row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Matrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[&[Complex]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Matrix::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let n = entries.len();
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                c64(entries[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Column vector from complex amplitudes.
    pub fn col_vector(entries: &[Complex]) -> Self {
        let n = entries.len();
        Matrix::from_fn(n, 1, |i, _| entries[i])
    }

    /// Computational basis unit `|i><j|` of size `n`.
    pub fn basis_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.scale_c(c64(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex) -> Matrix {
        let mut m = self.clone();
        for z in &mut m.data {
            *z *= s;
        }
        m
    }

    pub fn trace(&self) -> Complex {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius distance to the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.dagger()).fro_norm()
    }

    /// Hermitian within `tol * (1 + ||self||)`, Frobenius norms.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol * (1.0 + self.fro_norm())
    }

    /// Kronecker product; the left factor carries the slow (outer) index.
    pub fn tensor(&self, other: &Matrix) -> Matrix {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (other.rows, other.cols);
        Matrix::from_fn(ra * rb, ca * cb, |i, j| {
            self[(i / rb, j / cb)] * other[(i % rb, j % cb)]
        })
    }

    /// `ab + ba`; Hermitian whenever both arguments are.
    pub fn anticommutator(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if !self.is_square() || self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimMismatch(format!(
                "anticommutator needs equal square dims, got {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(&(self * other) + &(other * self))
    }

    /// Partial trace over the first (slow) tensor factor of a `da*db` square matrix.
    pub fn partial_trace_first(&self, da: usize, db: usize) -> Matrix {
        assert_eq!(self.rows, da * db);
        assert!(self.is_square());
        Matrix::from_fn(db, db, |k, l| {
            (0..da).map(|a| self[(a * db + k, a * db + l)]).sum()
        })
    }

    /// Partial trace over the second (fast) tensor factor.
    pub fn partial_trace_second(&self, da: usize, db: usize) -> Matrix {
        assert_eq!(self.rows, da * db);
        assert!(self.is_square());
        Matrix::from_fn(da, da, |i, j| {
            (0..db).map(|b| self[(i * db + b, j * db + b)]).sum()
        })
    }

    /// Transpose of the first (slow) tensor factor only.
    pub fn partial_transpose_first(&self, da: usize, db: usize) -> Matrix {
        assert_eq!(self.rows, da * db);
        assert!(self.is_square());
        Matrix::from_fn(self.rows, self.cols, |r, c| {
            let (i, k) = (r / db, r % db);
            let (j, l) = (c / db, c % db);
            self[(j * db + k, i * db + l)]
        })
    }

    /// Hermitian eigendecomposition by cyclic Jacobi rotations.
    ///
    /// Deterministic for identical input; eigenvalues are returned in
    /// descending order and degenerate clusters are re-orthonormalized so no
    /// caller can depend on an accidental basis inside a cluster.
    pub fn eigh(&self, tol: f64) -> Result<SpectralDecomposition, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimMismatch(format!(
                "eigh needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let defect = self.hermiticity_defect();
        if defect > tol * (1.0 + self.fro_norm()) {
            return Err(LinalgError::NotHermitian { deviation: defect });
        }

        let n = self.rows;
        let mut a = self.clone();
        // Symmetrize away the sub-tolerance defect so the iteration sees
        // exactly Hermitian data.
        for i in 0..n {
            for j in 0..n {
                let h = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                a[(i, j)] = h;
                a[(j, i)] = h.conj();
            }
        }
        let mut v = Matrix::identity(n);
        let scale = a.fro_norm();
        if scale > 0.0 {
            let mut converged = false;
            for _ in 0..MAX_JACOBI_SWEEPS {
                if off_diag_norm(&a) <= JACOBI_TOL * scale {
                    converged = true;
                    break;
                }
                for p in 0..n.saturating_sub(1) {
                    for q in (p + 1)..n {
                        jacobi_rotate(&mut a, &mut v, p, q);
                    }
                }
            }
            if !converged && off_diag_norm(&a) > JACOBI_TOL * scale {
                return Err(LinalgError::NoConvergence(MAX_JACOBI_SWEEPS));
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let evals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap());

        let eigenvalues: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
        let mut vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);

        reorthonormalize_clusters(&eigenvalues, &mut vectors, scale);
        canonicalize_phases(&mut vectors);

        Ok(SpectralDecomposition {
            eigenvalues,
            vectors,
        })
    }

    /// Largest singular value; equals the largest |eigenvalue| when Hermitian.
    pub fn op_norm(&self) -> f64 {
        assert!(self.is_square());
        if self.rows == 0 {
            return 0.0;
        }
        let gram = &self.dagger() * self;
        // gram is Hermitian PSD by construction, so eigh cannot fail on it.
        let spec = gram.eigh(EIGH_INTERNAL_TOL).expect("gram matrix is Hermitian");
        spec.eigenvalues[0].max(0.0).sqrt()
    }

    /// Positive semidefinite square root of a PSD matrix.
    pub fn msqrt(&self, tol: f64) -> Result<Matrix, LinalgError> {
        let spec = self.eigh(tol)?;
        let norm = spec.abs_max_eigenvalue();
        let clamp = -1e-10 * norm.max(1.0);
        let mut roots = Vec::with_capacity(spec.eigenvalues.len());
        for &l in &spec.eigenvalues {
            if l < clamp {
                return Err(LinalgError::NotPsd { eigenvalue: l });
            }
            roots.push(l.max(0.0).sqrt());
        }
        Ok(spec.rebuild(&roots))
    }

    /// Pseudo-inverse square root: eigenvalues below `1e-12 * ||m||` invert to 0.
    pub fn pinv_sqrt(&self, tol: f64) -> Result<Matrix, LinalgError> {
        let spec = self.eigh(tol)?;
        let norm = spec.abs_max_eigenvalue();
        let clamp = -1e-10 * norm.max(1.0);
        let cutoff = 1e-12 * norm;
        let mut inv_roots = Vec::with_capacity(spec.eigenvalues.len());
        for &l in &spec.eigenvalues {
            if l < clamp {
                return Err(LinalgError::NotPsd { eigenvalue: l });
            }
            inv_roots.push(if l <= cutoff { 0.0 } else { 1.0 / l.sqrt() });
        }
        Ok(spec.rebuild(&inv_roots))
    }

    /// `true` iff the smallest eigenvalue is at least `-tol * max(1, largest)`.
    pub fn is_psd(&self, tol: f64) -> Result<bool, LinalgError> {
        let spec = self.eigh(tol.max(EIGH_INTERNAL_TOL))?;
        let lo = *spec.eigenvalues.last().unwrap_or(&0.0);
        let hi = *spec.eigenvalues.first().unwrap_or(&0.0);
        Ok(lo >= -tol * hi.max(1.0))
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self, tol: f64) -> Result<f64, LinalgError> {
        let spec = self.eigh(tol)?;
        Ok(*spec.eigenvalues.last().unwrap_or(&0.0))
    }
}

/// Tolerance used when eigh is invoked on matrices that are Hermitian by
/// construction (gram matrices, symmetrized sums).
pub(crate) const EIGH_INTERNAL_TOL: f64 = 1e-8;

fn off_diag_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation annihilating the (p, q) entry.
fn jacobi_rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    // Factor the phase so the active 2x2 block becomes real symmetric, then
    // rotate by the classical Jacobi angle.
    let phase = apq / b;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = 0.5 * (2.0 * b).atan2(app - aqq);
    let (s, c) = theta.sin_cos();

    // Unitary acting on the (p, q) plane:
    //   column p = (c * phase, s), column q = (-s * phase, c).
    let upp = phase * c;
    let upq = -phase * s;
    let n = a.rows();

    // A <- A U (columns p, q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * upp + akq * s;
        a[(k, q)] = akp * upq + akq * c;
    }
    // A <- U† A (rows p, q).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * upp.conj() + aqk * s;
        a[(q, k)] = apk * upq.conj() + aqk * c;
    }
    // Pin the annihilated entries and keep the diagonal exactly real.
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = c64(a[(p, p)].re, 0.0);
    a[(q, q)] = c64(a[(q, q)].re, 0.0);

    // V <- V U.
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * upp + vkq * s;
        v[(k, q)] = vkp * upq + vkq * c;
    }
}

/// Re-orthonormalizes eigenvector columns inside degenerate clusters
/// (gap below `1e-9 * scale`) with modified Gram-Schmidt.
fn reorthonormalize_clusters(eigenvalues: &[f64], vectors: &mut Matrix, scale: f64) {
    let n = eigenvalues.len();
    let gap = 1e-9 * scale.max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eigenvalues[end - 1] - eigenvalues[end]).abs() < gap {
            end += 1;
        }
        if end - start > 1 {
            gram_schmidt_columns(vectors, start, end);
        }
        start = end;
    }
}

fn gram_schmidt_columns(v: &mut Matrix, start: usize, end: usize) {
    let n = v.rows();
    for j in start..end {
        for k in start..j {
            let mut dot = ZERO;
            for i in 0..n {
                dot += v[(i, k)].conj() * v[(i, j)];
            }
            for i in 0..n {
                let vk = v[(i, k)];
                v[(i, j)] -= vk * dot;
            }
        }
        let mut norm = 0.0;
        for i in 0..n {
            norm += v[(i, j)].norm_sqr();
        }
        let norm = norm.sqrt();
        if norm > 0.0 {
            for i in 0..n {
                v[(i, j)] /= norm;
            }
        }
    }
}

/// Multiplies each column by a phase making its largest-magnitude entry
/// real and positive, so identical input yields identical output bits.
fn canonicalize_phases(v: &mut Matrix) {
    let n = v.rows();
    for j in 0..v.cols() {
        let mut best = 0usize;
        let mut best_norm = 0.0;
        for i in 0..n {
            let nrm = v[(i, j)].norm_sqr();
            if nrm > best_norm * (1.0 + 1e-12) {
                best = i;
                best_norm = nrm;
            }
        }
        let z = v[(best, j)];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            for i in 0..n {
                v[(i, j)] *= phase;
            }
        }
    }
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in eigenvalue order.
    pub vectors: Matrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// k-th eigenvector as a column vector.
    pub fn eigenvector(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.vectors.rows(), 1, |i, _| self.vectors[(i, k)])
    }

    /// Rank-1 projector onto the k-th eigenvector.
    pub fn projector(&self, k: usize) -> Matrix {
        let v = self.eigenvector(k);
        &v * &v.dagger()
    }

    /// Sum of `values[k] * |v_k><v_k|`.
    pub fn rebuild(&self, values: &[f64]) -> Matrix {
        let n = self.dim();
        assert_eq!(values.len(), n);
        let mut m = Matrix::zeros(n, n);
        for k in 0..n {
            m = &m + &self.projector(k).scale(values[k]);
        }
        m
    }

    /// Reconstruction from the stored eigenvalues.
    pub fn reconstruct(&self) -> Matrix {
        self.rebuild(&self.eigenvalues)
    }

    pub fn abs_max_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        m
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
        m
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let doc = MatrixDoc {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        };
        doc.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(deserializer)?;
        if doc.data.len() != doc.rows * doc.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data length {} does not match {}x{}",
                doc.data.len(),
                doc.rows,
                doc.cols
            )));
        }
        let m = Matrix {
            rows: doc.rows,
            cols: doc.cols,
            data: doc.data.iter().map(|&[re, im]| c64(re, im)).collect(),
        };
        if !m.is_finite() {
            return Err(serde::de::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}
