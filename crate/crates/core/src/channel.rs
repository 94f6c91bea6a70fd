//! Quantum channels as Kraus families, their adjoints and Choi/Jamiołkowski
//! transforms, plus a constructor zoo for the channels used in this crate.
//!
//! Two channels are considered equal iff their Choi matrices agree within
//! tolerance: Kraus representations are not unique, so lists are never
//! compared element-wise.

use crate::linalg::{c64, LinalgError, Matrix, I, ONE, ZERO};
use crate::EPS_NUM;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("Kraus family is not trace-preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },
    #[error("map is not completely positive (Choi eigenvalue {eigenvalue:.3e})")]
    NotCompletelyPositive { eigenvalue: f64 },
    #[error("state is not a density matrix: {0}")]
    InvalidState(String),
    #[error("invalid channel document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: Matrix,
}

impl DensityMatrix {
    pub fn new(mat: Matrix, tol: f64) -> Result<Self, ChannelError> {
        if !mat.is_square() {
            return Err(ChannelError::InvalidState("matrix is not square".into()));
        }
        if !mat.is_hermitian(tol) {
            return Err(ChannelError::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                mat.hermiticity_defect()
            )));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > tol {
            return Err(ChannelError::InvalidState(format!(
                "trace is {:.12} + {:.3e}i, expected 1",
                tr.re, tr.im
            )));
        }
        if !mat.is_psd(tol)? {
            return Err(ChannelError::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {:.3e})",
                mat.min_eigenvalue(tol)?
            )));
        }
        Ok(DensityMatrix { mat })
    }

    /// Qubit state `(1 + r . sigma) / 2`; requires `|r| <= 1`.
    pub fn from_bloch(r1: f64, r2: f64, r3: f64) -> Result<Self, ChannelError> {
        let norm2 = r1 * r1 + r2 * r2 + r3 * r3;
        if norm2 > 1.0 + 1e-9 {
            return Err(ChannelError::InvalidState(format!(
                "Bloch vector norm {} exceeds 1",
                norm2.sqrt()
            )));
        }
        let mat = Matrix::from_rows(&[
            &[c64(0.5 * (1.0 + r3), 0.0), c64(0.5 * r1, -0.5 * r2)],
            &[c64(0.5 * r1, 0.5 * r2), c64(0.5 * (1.0 - r3), 0.0)],
        ]);
        Ok(DensityMatrix { mat })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: Matrix::identity(d).scale(1.0 / d as f64),
        }
    }

    /// Pure computational basis state `|k><k|`.
    pub fn basis_state(d: usize, k: usize) -> Self {
        DensityMatrix {
            mat: Matrix::basis_unit(d, k, k),
        }
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Bloch coordinates of a qubit state.
    pub fn bloch(&self) -> (f64, f64, f64) {
        assert_eq!(self.dim(), 2);
        let m = &self.mat;
        let x = (m[(0, 1)] + m[(1, 0)]).re;
        let y = (m[(1, 0)] - m[(0, 1)]).im;
        let z = (m[(0, 0)] - m[(1, 1)]).re;
        (x, y, z)
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<Matrix>,
}

impl KrausChannel {
    /// Validates trace preservation and complete positivity at `tol`.
    pub fn new(kraus: Vec<Matrix>, tol: f64) -> Result<Self, ChannelError> {
        if kraus.is_empty() {
            return Err(ChannelError::InvalidDocument("empty Kraus family".into()));
        }
        let dim_out = kraus[0].rows();
        let dim_in = kraus[0].cols();
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(ChannelError::DimMismatch(
                    "Kraus operators have inconsistent shapes".into(),
                ));
            }
            if !k.is_finite() {
                return Err(ChannelError::InvalidDocument(
                    "Kraus operator has non-finite entries".into(),
                ));
            }
        }
        let ch = KrausChannel {
            dim_in,
            dim_out,
            kraus,
        };
        let tp = ch.trace_preservation_defect();
        if tp > tol.max(EPS_NUM) {
            return Err(ChannelError::NotTracePreserving { deviation: tp });
        }
        let min_eig = ch.choi().min_eigenvalue(crate::linalg::EIGH_INTERNAL_TOL)?;
        if min_eig < -tol.max(EPS_NUM) {
            return Err(ChannelError::NotCompletelyPositive {
                eigenvalue: min_eig,
            });
        }
        Ok(ch)
    }

    /// Builds without validation; for maps that are correct by construction
    /// or deliberately outside CPTP (e.g. pseudo-inverse conventions).
    pub fn from_parts_unchecked(dim_in: usize, dim_out: usize, kraus: Vec<Matrix>) -> Self {
        KrausChannel {
            dim_in,
            dim_out,
            kraus,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[Matrix] {
        &self.kraus
    }

    /// `sum_a E_a rho E_a†`.
    pub fn apply(&self, rho: &Matrix) -> Result<Matrix, ChannelError> {
        if rho.rows() != self.dim_in || rho.cols() != self.dim_in {
            return Err(ChannelError::DimMismatch(format!(
                "input is {}x{}, channel expects {}x{}",
                rho.rows(),
                rho.cols(),
                self.dim_in,
                self.dim_in
            )));
        }
        let mut out = Matrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &(&(k * rho) * &k.dagger());
        }
        Ok(out)
    }

    /// Hilbert-Schmidt adjoint `sum_a E_a† b E_a`; unital when the channel
    /// is trace-preserving.
    pub fn adjoint_apply(&self, b: &Matrix) -> Result<Matrix, ChannelError> {
        if b.rows() != self.dim_out || b.cols() != self.dim_out {
            return Err(ChannelError::DimMismatch(format!(
                "input is {}x{}, adjoint expects {}x{}",
                b.rows(),
                b.cols(),
                self.dim_out,
                self.dim_out
            )));
        }
        let mut out = Matrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out = &out + &(&(&k.dagger() * b) * k);
        }
        Ok(out)
    }

    /// Channel with Kraus family `{E_a†}`; the Hilbert-Schmidt adjoint as a map.
    pub fn adjoint_channel(&self) -> KrausChannel {
        KrausChannel::from_parts_unchecked(
            self.dim_out,
            self.dim_in,
            self.kraus.iter().map(|k| k.dagger()).collect(),
        )
    }

    /// Choi matrix `sum_ij |i><j| ⊗ E(|i><j|)` in the computational basis.
    pub fn choi(&self) -> Matrix {
        let d = self.dim_in;
        let mut c = Matrix::zeros(d * self.dim_out, d * self.dim_out);
        for k in &self.kraus {
            // contribution of one Kraus operator: entry ((i,r),(j,s)) = K[r,i] conj(K[s,j])
            for i in 0..d {
                for j in 0..d {
                    for r in 0..self.dim_out {
                        for s in 0..self.dim_out {
                            c[(i * self.dim_out + r, j * self.dim_out + s)] +=
                                k[(r, i)] * k[(s, j)].conj();
                        }
                    }
                }
            }
        }
        c
    }

    /// Jamiołkowski matrix `sum_ij |i><j| ⊗ E(|j><i|)`, computed from the
    /// definition (not via the Choi matrix).
    pub fn jamiolkowski(&self) -> Matrix {
        let d = self.dim_in;
        let mut m = Matrix::zeros(d * self.dim_out, d * self.dim_out);
        for i in 0..d {
            for j in 0..d {
                let image = self
                    .apply_arbitrary(&Matrix::basis_unit(d, j, i))
                    .expect("basis unit has channel input dims");
                for r in 0..self.dim_out {
                    for s in 0..self.dim_out {
                        m[(i * self.dim_out + r, j * self.dim_out + s)] += image[(r, s)];
                    }
                }
            }
        }
        m
    }

    // apply() with no density-matrix semantics implied; same arithmetic.
    fn apply_arbitrary(&self, x: &Matrix) -> Result<Matrix, ChannelError> {
        self.apply(x)
    }

    /// `|| sum_a E_a† E_a - 1 ||` (operator norm).
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut s = Matrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            s = &s + &(&k.dagger() * k);
        }
        (&s - &Matrix::identity(self.dim_in)).op_norm()
    }

    pub fn is_cptp(&self, tol: f64) -> Result<CptpReport, ChannelError> {
        let tp_deviation = self.trace_preservation_defect();
        let choi = self.choi();
        let spec = choi.eigh(crate::linalg::EIGH_INTERNAL_TOL)?;
        let choi_min_eig = *spec.eigenvalues.last().unwrap_or(&0.0);
        let choi_max_eig = *spec.eigenvalues.first().unwrap_or(&0.0);
        Ok(CptpReport {
            tp_deviation,
            choi_min_eig,
            trace_preserving: tp_deviation <= tol,
            completely_positive: choi_min_eig >= -tol * choi_max_eig.max(1.0),
        })
    }

    /// Composition: applies `self` first, then `after`.
    pub fn then(&self, after: &KrausChannel) -> Result<KrausChannel, ChannelError> {
        if after.dim_in != self.dim_out {
            return Err(ChannelError::DimMismatch(format!(
                "cannot compose: output dim {} feeds input dim {}",
                self.dim_out, after.dim_in
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * after.kraus.len());
        for b in &after.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(KrausChannel::from_parts_unchecked(
            self.dim_in,
            after.dim_out,
            kraus,
        ))
    }

    pub fn identity(d: usize) -> KrausChannel {
        KrausChannel::from_parts_unchecked(d, d, vec![Matrix::identity(d)])
    }

    /// Unitary conjugation `rho -> U rho U†`.
    pub fn unitary(u: Matrix, tol: f64) -> Result<KrausChannel, ChannelError> {
        if !u.is_square() {
            return Err(ChannelError::DimMismatch("unitary must be square".into()));
        }
        let defect = (&(&u.dagger() * &u) - &Matrix::identity(u.rows())).op_norm();
        if defect > tol {
            return Err(ChannelError::NotUnitary { deviation: defect });
        }
        let d = u.rows();
        Ok(KrausChannel::from_parts_unchecked(d, d, vec![u]))
    }

    /// Spontaneous-decay channel with damping parameter `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel, ChannelError> {
        check_unit_range("gamma", gamma)?;
        let e0 = Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]);
        let e1 = Matrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]);
        Ok(KrausChannel::from_parts_unchecked(2, 2, vec![e0, e1]))
    }

    /// Qubit depolarizing channel `rho -> (1-p) rho + p 1/2 Tr[rho]`.
    pub fn depolarizing(p: f64) -> Result<KrausChannel, ChannelError> {
        check_unit_range("p", p)?;
        let mut kraus = vec![pauli_matrix(0).scale((1.0 - 0.75 * p).sqrt())];
        for alpha in 1..4 {
            kraus.push(pauli_matrix(alpha).scale((0.25 * p).sqrt()));
        }
        Ok(KrausChannel::from_parts_unchecked(2, 2, kraus))
    }

    pub fn completely_depolarizing() -> KrausChannel {
        KrausChannel::depolarizing(1.0).expect("p = 1 is in range")
    }

    /// Qubit phase-damping channel with parameter `lambda`.
    pub fn dephasing(lambda: f64) -> Result<KrausChannel, ChannelError> {
        check_unit_range("lambda", lambda)?;
        let d0 = Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - lambda).sqrt()]]);
        let d1 = Matrix::from_real_rows(&[&[0.0, 0.0], &[0.0, lambda.sqrt()]]);
        Ok(KrausChannel::from_parts_unchecked(2, 2, vec![d0, d1]))
    }

    /// Convex mixture; Kraus families are concatenated with `sqrt(w)` scaling.
    pub fn mix(channels: &[KrausChannel], weights: &[f64]) -> Result<KrausChannel, ChannelError> {
        if channels.is_empty() || channels.len() != weights.len() {
            return Err(ChannelError::ParamOutOfRange(
                "mix needs matching, nonempty channel and weight lists".into(),
            ));
        }
        let (din, dout) = (channels[0].dim_in, channels[0].dim_out);
        if channels
            .iter()
            .any(|c| c.dim_in != din || c.dim_out != dout)
        {
            return Err(ChannelError::DimMismatch(
                "mixed channels must share dimensions".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < -1e-12) || (sum - 1.0).abs() > 1e-9 {
            return Err(ChannelError::ParamOutOfRange(format!(
                "weights must form a probability vector (sum {})",
                sum
            )));
        }
        let mut kraus = Vec::new();
        for (ch, &w) in channels.iter().zip(weights) {
            let s = w.max(0.0).sqrt();
            for k in &ch.kraus {
                kraus.push(k.scale(s));
            }
        }
        Ok(KrausChannel::from_parts_unchecked(din, dout, kraus))
    }

    /// Conjugates a qubit channel by the bit flip on both sides.
    pub fn bit_flip_conjugate(ch: &KrausChannel) -> Result<KrausChannel, ChannelError> {
        if ch.dim_in != 2 || ch.dim_out != 2 {
            return Err(ChannelError::DimMismatch(
                "bit-flip conjugation is defined for qubit channels".into(),
            ));
        }
        let x = pauli_matrix(1);
        let kraus = ch.kraus.iter().map(|k| &(&x * k) * &x).collect();
        Ok(KrausChannel::from_parts_unchecked(2, 2, kraus))
    }
}

/// Verdicts and raw deviations from a CPTP check.
#[derive(Clone, Debug, Serialize)]
pub struct CptpReport {
    pub tp_deviation: f64,
    pub choi_min_eig: f64,
    pub trace_preserving: bool,
    pub completely_positive: bool,
}

impl CptpReport {
    pub fn is_cptp(&self) -> bool {
        self.trace_preserving && self.completely_positive
    }
}

/// Extracts a Kraus family from a PSD Choi matrix via its eigendecomposition.
///
/// Eigenvalues at or below `1e-11 * lambda_max` are dropped, so rank-deficient
/// Choi matrices yield fewer than `dim_in * dim_out` operators.
pub fn kraus_from_choi(
    choi: &Matrix,
    dim_in: usize,
    dim_out: usize,
    tol: f64,
) -> Result<KrausChannel, ChannelError> {
    if choi.rows() != dim_in * dim_out || !choi.is_square() {
        return Err(ChannelError::DimMismatch(format!(
            "Choi matrix is {}x{}, expected {}",
            choi.rows(),
            choi.cols(),
            dim_in * dim_out
        )));
    }
    let spec = choi.eigh(tol)?;
    let top = spec.eigenvalues.first().copied().unwrap_or(0.0);
    if let Some(&min) = spec.eigenvalues.last() {
        if min < -tol * top.max(1.0) {
            return Err(ChannelError::NotCompletelyPositive { eigenvalue: min });
        }
    }
    let cutoff = 1e-11 * top.max(0.0);
    let mut kraus = Vec::new();
    for (k, &mu) in spec.eigenvalues.iter().enumerate() {
        if mu <= cutoff {
            continue;
        }
        let v = spec.eigenvector(k);
        let s = mu.sqrt();
        kraus.push(Matrix::from_fn(dim_out, dim_in, |r, i| {
            v[(i * dim_out + r, 0)] * s
        }));
    }
    if kraus.is_empty() {
        kraus.push(Matrix::zeros(dim_out, dim_in));
    }
    Ok(KrausChannel::from_parts_unchecked(dim_in, dim_out, kraus))
}

/// A linear map represented by its Choi matrix.
///
/// Used for inverse candidates that may fail to be completely positive and
/// therefore admit no Kraus representation.
#[derive(Clone, Debug)]
pub struct ChoiMap {
    choi: Matrix,
    dim_in: usize,
    dim_out: usize,
}

impl ChoiMap {
    pub fn new(choi: Matrix, dim_in: usize, dim_out: usize) -> Result<Self, ChannelError> {
        if choi.rows() != dim_in * dim_out || !choi.is_square() {
            return Err(ChannelError::DimMismatch(format!(
                "Choi matrix is {}x{}, expected {}",
                choi.rows(),
                choi.cols(),
                dim_in * dim_out
            )));
        }
        Ok(ChoiMap {
            choi,
            dim_in,
            dim_out,
        })
    }

    pub fn from_channel(ch: &KrausChannel) -> Self {
        ChoiMap {
            choi: ch.choi(),
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
        }
    }

    pub fn choi(&self) -> &Matrix {
        &self.choi
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `E(x) = Tr_in[(x^T ⊗ 1) C]`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix, ChannelError> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(ChannelError::DimMismatch(format!(
                "input is {}x{}, map expects {}x{}",
                x.rows(),
                x.cols(),
                self.dim_in,
                self.dim_in
            )));
        }
        let lifted = &x.transpose().tensor(&Matrix::identity(self.dim_out)) * &self.choi;
        Ok(lifted.partial_trace_first(self.dim_in, self.dim_out))
    }

    /// Jamiołkowski matrix: partial transpose of the Choi matrix on the
    /// input factor.
    pub fn jamiolkowski(&self) -> Matrix {
        self.choi.partial_transpose_first(self.dim_in, self.dim_out)
    }

    pub fn min_choi_eig(&self) -> Result<f64, ChannelError> {
        Ok(self.choi.min_eigenvalue(crate::linalg::EIGH_INTERNAL_TOL)?)
    }

    pub fn is_cp(&self, tol: f64) -> Result<bool, ChannelError> {
        Ok(self.choi.is_psd(tol)?)
    }

    pub fn to_channel(&self, tol: f64) -> Result<KrausChannel, ChannelError> {
        kraus_from_choi(&self.choi, self.dim_in, self.dim_out, tol)
    }
}

/// A channel together with its input state.
#[derive(Clone, Debug)]
pub struct Process {
    channel: KrausChannel,
    prior: DensityMatrix,
}

impl Process {
    pub fn new(channel: KrausChannel, prior: DensityMatrix) -> Result<Self, ChannelError> {
        if prior.dim() != channel.dim_in() {
            return Err(ChannelError::DimMismatch(format!(
                "prior dim {} does not match channel input dim {}",
                prior.dim(),
                channel.dim_in()
            )));
        }
        Ok(Process { channel, prior })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn prior(&self) -> &DensityMatrix {
        &self.prior
    }

    /// The prediction state `E(rho)`.
    pub fn prediction(&self) -> Matrix {
        self.channel
            .apply(self.prior.mat())
            .expect("process dims are validated")
    }
}

pub(crate) fn pauli_matrix(alpha: usize) -> Matrix {
    match alpha {
        0 => Matrix::identity(2),
        1 => Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        2 => Matrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        3 => Matrix::diag_real(&[1.0, -1.0]),
        _ => panic!("Pauli index {alpha} out of range"),
    }
}

fn check_unit_range(name: &str, v: f64) -> Result<(), ChannelError> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(ChannelError::ParamOutOfRange(format!(
            "{name} = {v} must lie in [0, 1]"
        )));
    }
    Ok(())
}

/// JSON form of a channel: either a Kraus family or a Choi matrix.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ChannelDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_out: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<Matrix>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choi: Option<Matrix>,
}

impl ChannelDocument {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        ChannelDocument {
            dim_in: Some(ch.dim_in()),
            dim_out: Some(ch.dim_out()),
            kraus: Some(ch.kraus().to_vec()),
            choi: None,
        }
    }

    pub fn into_channel(self, tol: f64) -> Result<KrausChannel, ChannelError> {
        match (self.kraus, self.choi) {
            (Some(kraus), _) => {
                let ch = KrausChannel::new(kraus, tol)?;
                if let Some(d) = self.dim_in {
                    if d != ch.dim_in() {
                        return Err(ChannelError::InvalidDocument(format!(
                            "declared dim_in {} does not match Kraus shape {}",
                            d,
                            ch.dim_in()
                        )));
                    }
                }
                if let Some(d) = self.dim_out {
                    if d != ch.dim_out() {
                        return Err(ChannelError::InvalidDocument(format!(
                            "declared dim_out {} does not match Kraus shape {}",
                            d,
                            ch.dim_out()
                        )));
                    }
                }
                Ok(ch)
            }
            (None, Some(choi)) => {
                let (din, dout) = match (self.dim_in, self.dim_out) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        let d = (choi.rows() as f64).sqrt().round() as usize;
                        if d * d != choi.rows() {
                            return Err(ChannelError::InvalidDocument(
                                "cannot infer dims from a non-square-dimension Choi matrix"
                                    .into(),
                            ));
                        }
                        (d, d)
                    }
                };
                kraus_from_choi(&choi, din, dout, tol)
            }
            (None, None) => Err(ChannelError::InvalidDocument(
                "document carries neither \"kraus\" nor \"choi\"".into(),
            )),
        }
    }
}
