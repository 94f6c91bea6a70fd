//! Hermitian observables, spectral projectors and light-touch classification.
//!
//! An observable is *light-touch* when its distinct eigenvalues are `{λ}` or
//! `{+λ, -λ}`, and *dichotomic* when they are exactly `{+1, -1}`. Light-touch
//! pairs are the ones whose two-time expectation values can be read off a
//! state over time; see [`crate::spacetime`].

use crate::linalg::{c64, LinalgError, Matrix, SpectralDecomposition, ZERO};
use crate::EPS_NUM;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative gap below which adjacent eigenvalues count as one cluster.
const CLUSTER_GAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("observable is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("Pauli index {0} out of range 0..=3")]
    BadIndex(usize),
    #[error("light-touch family of dim {dim} is numerically dependent (Gram det {det:.3e})")]
    DegenerateBasis { dim: usize, det: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Hermitian matrix with a cached spectral decomposition.
#[derive(Clone, Debug)]
pub struct Observable {
    mat: Matrix,
    spec: SpectralDecomposition,
}

impl Observable {
    pub fn new(mat: Matrix, tol: f64) -> Result<Self, ObservableError> {
        if !mat.is_hermitian(tol) {
            return Err(ObservableError::NotHermitian {
                deviation: mat.hermiticity_defect(),
            });
        }
        let spec = mat.eigh(tol)?;
        Ok(Observable { mat, spec })
    }

    /// Pauli observable: 0 -> identity, 1 -> X, 2 -> Y, 3 -> Z.
    pub fn pauli(alpha: usize) -> Result<Self, ObservableError> {
        if alpha > 3 {
            return Err(ObservableError::BadIndex(alpha));
        }
        Observable::new(crate::channel::pauli_matrix(alpha), EPS_NUM)
    }

    pub fn identity(d: usize) -> Self {
        Observable::new(Matrix::identity(d), EPS_NUM).expect("identity is Hermitian")
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    pub fn spec(&self) -> &SpectralDecomposition {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    fn norm(&self) -> f64 {
        self.spec.abs_max_eigenvalue()
    }

    /// Distinct eigenvalues with their orthogonal projectors.
    ///
    /// Eigenvalues are clustered with a relative gap of `1e-9 * ||o||`; the
    /// projectors are complete and idempotent by construction.
    pub fn spectral_projectors(&self) -> Vec<(f64, Matrix)> {
        let n = self.dim();
        let gap = CLUSTER_GAP * self.norm().max(1e-300);
        let mut out: Vec<(f64, Matrix)> = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n
                && (self.spec.eigenvalues[end - 1] - self.spec.eigenvalues[end]).abs() <= gap
            {
                end += 1;
            }
            let mut proj = Matrix::zeros(n, n);
            let mut mean = 0.0;
            for k in start..end {
                proj = &proj + &self.spec.projector(k);
                mean += self.spec.eigenvalues[k];
            }
            mean /= (end - start) as f64;
            out.push((mean, proj));
            start = end;
        }
        out
    }

    /// Distinct eigenvalues are `{λ}` or `{+λ, -λ}`.
    pub fn is_light_touch(&self) -> bool {
        let clusters = self.spectral_projectors();
        match clusters.len() {
            1 => true,
            2 => (clusters[0].0 + clusters[1].0).abs() <= CLUSTER_GAP * self.norm().max(1e-300),
            _ => false,
        }
    }

    /// Light-touch with λ = 1 and both signs present.
    pub fn is_dichotomic(&self) -> bool {
        let clusters = self.spectral_projectors();
        if clusters.len() != 2 {
            return false;
        }
        let tol = CLUSTER_GAP * self.norm().max(1.0);
        (clusters[0].0 - 1.0).abs() <= tol && (clusters[1].0 + 1.0).abs() <= tol
    }

    /// For a dichotomic observable, the projector onto the +1 eigenspace,
    /// so that `o = 2P - 1`.
    pub fn plus_projector(&self) -> Option<Matrix> {
        if !self.is_dichotomic() {
            return None;
        }
        Some(self.spectral_projectors()[0].1.clone())
    }

    pub fn scaled(&self, factor: f64) -> Observable {
        Observable::new(self.mat.scale(factor), EPS_NUM).expect("scaling preserves Hermiticity")
    }
}

/// A real-linear basis of observable space consisting of light-touch
/// observables: the identity plus dichotomic reflections `2|v><v| - 1`.
#[derive(Clone, Debug)]
pub struct LightTouchBasis {
    dim: usize,
    elements: Vec<Observable>,
    gram_det: f64,
}

impl LightTouchBasis {
    /// Builds the basis for a `d`-dimensional system (`d >= 2`); `d = 2`
    /// yields exactly the Pauli basis.
    ///
    /// The spanning family of rank-1 projectors is `|e_i>` for i < d-1 plus
    /// `(|e_i> + |e_j>)/sqrt(2)` and `(|e_i> + i |e_j>)/sqrt(2)` for i < j;
    /// together with the identity this gives d^2 independent elements,
    /// which is verified numerically through the Gram determinant.
    pub fn new(d: usize) -> Result<Self, ObservableError> {
        assert!(d >= 2, "light-touch bases need dim >= 2");
        if d == 2 {
            let elements = (0..4)
                .map(|a| Observable::pauli(a).expect("index in range"))
                .collect();
            return Self::finish(2, elements);
        }
        let mut elements = vec![Observable::identity(d)];
        let mut push_reflection = |v: &Matrix| {
            let proj = v * &v.dagger();
            let refl = &proj.scale(2.0) - &Matrix::identity(d);
            elements.push(Observable::new(refl, EPS_NUM).expect("reflection is Hermitian"));
        };
        for i in 0..d - 1 {
            let mut e = vec![ZERO; d];
            e[i] = c64(1.0, 0.0);
            push_reflection(&Matrix::col_vector(&e));
        }
        let s = 1.0 / 2.0_f64.sqrt();
        for i in 0..d {
            for j in (i + 1)..d {
                let mut plus = vec![ZERO; d];
                plus[i] = c64(s, 0.0);
                plus[j] = c64(s, 0.0);
                push_reflection(&Matrix::col_vector(&plus));
                let mut phase = vec![ZERO; d];
                phase[i] = c64(s, 0.0);
                phase[j] = c64(0.0, s);
                push_reflection(&Matrix::col_vector(&phase));
            }
        }
        Self::finish(d, elements)
    }

    fn finish(dim: usize, elements: Vec<Observable>) -> Result<Self, ObservableError> {
        debug_assert_eq!(elements.len(), dim * dim);
        let gram = gram_matrix(&elements);
        let spec = gram.eigh(crate::linalg::EIGH_INTERNAL_TOL)?;
        let det: f64 = spec.eigenvalues.iter().product();
        if det.abs() <= 1e-9 {
            return Err(ObservableError::DegenerateBasis { dim, det });
        }
        Ok(LightTouchBasis {
            dim,
            elements,
            gram_det: det,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Observable] {
        &self.elements
    }

    pub fn gram_det(&self) -> f64 {
        self.gram_det
    }

    /// Real expansion coefficients of a Hermitian matrix in this basis.
    pub fn expand(&self, m: &Matrix) -> Result<Vec<f64>, ObservableError> {
        assert_eq!(m.rows(), self.dim);
        let gram = gram_matrix(&self.elements);
        let spec = gram.eigh(crate::linalg::EIGH_INTERNAL_TOL)?;
        let n = self.elements.len();
        let rhs: Vec<f64> = self
            .elements
            .iter()
            .map(|b| (&b.mat().dagger() * m).trace().re)
            .collect();
        // Solve G c = rhs through the spectral decomposition of G.
        let mut coeffs = vec![0.0; n];
        for k in 0..n {
            let lambda = spec.eigenvalues[k];
            let mut dot = 0.0;
            for i in 0..n {
                dot += spec.vectors[(i, k)].re * rhs[i];
            }
            let scale = dot / lambda;
            for i in 0..n {
                coeffs[i] += scale * spec.vectors[(i, k)].re;
            }
        }
        Ok(coeffs)
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Matrix {
        assert_eq!(coeffs.len(), self.elements.len());
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (c, b) in coeffs.iter().zip(&self.elements) {
            m = &m + &b.mat().scale(*c);
        }
        m
    }
}

/// Convenience wrapper for [`LightTouchBasis::new`].
pub fn light_touch_basis(d: usize) -> Result<LightTouchBasis, ObservableError> {
    LightTouchBasis::new(d)
}

/// Pauli label as an index `"0"`..`"3"` or a letter `I`, `X`, `Y`, `Z`
/// (case-insensitive).
pub fn parse_pauli_label(raw: &str) -> Option<usize> {
    match raw.trim() {
        "0" => Some(0),
        "1" => Some(1),
        "2" => Some(2),
        "3" => Some(3),
        s => match s.to_ascii_uppercase().as_str() {
            "I" => Some(0),
            "X" => Some(1),
            "Y" => Some(2),
            "Z" => Some(3),
            _ => None,
        },
    }
}

/// JSON form of an observable: `{"matrix": {...}}`.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ObservableDocument {
    pub matrix: Matrix,
}

impl ObservableDocument {
    pub fn from_observable(o: &Observable) -> Self {
        ObservableDocument {
            matrix: o.mat().clone(),
        }
    }

    pub fn into_observable(self, tol: f64) -> Result<Observable, ObservableError> {
        Observable::new(self.matrix, tol)
    }
}

fn gram_matrix(elements: &[Observable]) -> Matrix {
    let n = elements.len();
    // Hilbert-Schmidt inner products are real for Hermitian elements.
    Matrix::from_fn(n, n, |i, j| {
        c64(
            (&elements[i].mat().dagger() * elements[j].mat()).trace().re,
            0.0,
        )
    })
}
