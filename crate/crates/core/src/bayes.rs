//! Bayesian inverses of quantum processes.
//!
//! A channel `F` is a Bayesian inverse of the process `(E, rho)` when
//! `E ⋆ rho = S(F ⋆ E(rho))` with `S` the swap map; on light-touch
//! observable pairs this is equivalent to the operational time symmetry
//! `<A, B> = <B, A>` between the forward process and `(F, E(rho))`.
//!
//! Two independent routes construct the unique Hermiticity-preserving
//! candidate when the prediction `E(rho)` is full rank:
//!
//! - [`bayes_candidate_eigen`] evaluates
//!   `F(|w_k><w_l|) = {rho, E*(|w_k><w_l|)} / (q_k + q_l)` in the
//!   eigenbasis of the prediction, and
//! - [`bayes_candidate_sylvester`] solves the anticommutator (Sylvester)
//!   equation `{E(rho)^T ⊗ 1, C[F]} = {1 ⊗ rho, C[E*]}` spectrally.
//!
//! The candidate is a channel iff its Choi matrix is positive; when it is
//! not, the process has no Bayesian inverse and [`bayesian_inverse`] says so
//! instead of guessing. The Petz recovery map [`petz`] is provided for
//! comparison: it is always CPTP for full-rank predictions but does not
//! satisfy the operational symmetry.

use crate::channel::{ChannelError, ChoiMap, KrausChannel, Process};
use crate::linalg::{LinalgError, Matrix};
use crate::observable::LightTouchBasis;
use crate::spacetime::{star, star_with_jamiolkowski, swap, ttev, ttev_map, SpacetimeError};
use crate::EPS_NUM;
use serde::Serialize;
use thiserror::Error;

/// Absolute rank threshold on prediction eigenvalues; the prediction has
/// unit trace, so its scale is fixed.
const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BayesError {
    #[error(
        "prediction state is rank-deficient (eigenvalue pair sum {pair_sum:.3e}); \
         the inverse formula has vanishing denominators"
    )]
    RankDeficientPrediction { pair_sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Result of attempting to invert a process.
#[derive(Clone, Debug)]
pub enum BayesOutcome {
    /// The candidate is completely positive; the Kraus-form inverse channel.
    Inverse(KrausChannel),
    /// The candidate exists but is not completely positive, so the process
    /// has no Bayesian inverse; carries the offending Choi eigenvalue.
    NotCompletelyPositive { min_choi_eig: f64 },
}

/// Inverse-candidate diagnostics, serializable for the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct BayesReport {
    pub is_cp: bool,
    pub min_choi_eig: f64,
    /// `|| E ⋆ rho - S(F ⋆ E(rho)) ||` (operator norm).
    pub defining_residual: f64,
    /// Max over Pauli (or constructed light-touch) basis pairs of
    /// `|<A_i, B_j>_(E,rho) - <B_j, A_i>_(F,E(rho))|`.
    pub symmetry_residual: f64,
    /// Kraus form of the candidate when it is completely positive.
    #[serde(serialize_with = "serialize_inverse")]
    pub inverse: Option<KrausChannel>,
}

fn serialize_inverse<S: serde::Serializer>(
    inv: &Option<KrausChannel>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match inv {
        Some(ch) => crate::channel::ChannelDocument::from_channel(ch).serialize(s),
        None => s.serialize_none(),
    }
}

/// Builds the inverse candidate in the eigenbasis of the prediction state.
pub fn bayes_candidate_eigen(process: &Process) -> Result<ChoiMap, BayesError> {
    let d_in = process.channel().dim_in();
    let d_out = process.channel().dim_out();
    let prediction = process.prediction();
    let spec = prediction.eigh(EPS_NUM)?;
    let q = &spec.eigenvalues;

    // every pair denominator q_k + q_l must clear the rank threshold
    for k in 0..q.len() {
        for l in 0..q.len() {
            let pair = q[k] + q[l];
            if pair <= RANK_THRESHOLD {
                return Err(BayesError::RankDeficientPrediction { pair_sum: pair });
            }
        }
    }

    let rho = process.prior().mat();
    // C[F] = sum_kl conj(w_k w_l†) ⊗ {rho, E*(w_k w_l†)} / (q_k + q_l)
    let mut choi = Matrix::zeros(d_out * d_in, d_out * d_in);
    for k in 0..q.len() {
        let wk = spec.eigenvector(k);
        for l in 0..q.len() {
            let wl = spec.eigenvector(l);
            let unit = &wk * &wl.dagger();
            let adj = process.channel().adjoint_apply(&unit)?;
            let image = rho
                .anticommutator(&adj)
                .expect("prior and adjoint image share dims")
                .scale(1.0 / (q[k] + q[l]));
            choi = &choi + &unit.conj().tensor(&image);
        }
    }
    Ok(ChoiMap::new(choi, d_out, d_in)?)
}

/// Builds the same candidate by solving the anticommutator equation
/// `{E(rho)^T ⊗ 1, X} = {1 ⊗ rho, C[E*]}` in the eigenbasis of the
/// positive-definite coefficient.
pub fn bayes_candidate_sylvester(process: &Process) -> Result<ChoiMap, BayesError> {
    let d_in = process.channel().dim_in();
    let d_out = process.channel().dim_out();
    let prediction = process.prediction();

    let coeff = prediction
        .transpose()
        .tensor(&Matrix::identity(d_in));
    let spec = coeff.eigh(EPS_NUM)?;
    for pair in spec
        .eigenvalues
        .iter()
        .flat_map(|a| spec.eigenvalues.iter().map(move |b| a + b))
    {
        if pair <= RANK_THRESHOLD {
            return Err(BayesError::RankDeficientPrediction { pair_sum: pair });
        }
    }

    let adjoint_choi = adjoint_choi(process.channel())?;
    let rhs = Matrix::identity(d_out)
        .tensor(process.prior().mat())
        .anticommutator(&adjoint_choi)
        .expect("dims agree by construction");

    // X = sum_mn (u_m† B u_n) / (a_m + a_n) u_m u_n†
    let n = spec.eigenvalues.len();
    let mut choi = Matrix::zeros(n, n);
    for m in 0..n {
        let um = spec.eigenvector(m);
        for nn in 0..n {
            let un = spec.eigenvector(nn);
            let b_mn = (&(&um.dagger() * &rhs) * &un)[(0, 0)];
            let coeff = b_mn / (spec.eigenvalues[m] + spec.eigenvalues[nn]);
            choi = &choi + &(&um * &un.dagger()).scale_c(coeff);
        }
    }
    Ok(ChoiMap::new(choi, d_out, d_in)?)
}

/// Choi matrix of the Hilbert-Schmidt adjoint map.
fn adjoint_choi(ch: &KrausChannel) -> Result<Matrix, BayesError> {
    let d_out = ch.dim_out();
    let d_in = ch.dim_in();
    let mut c = Matrix::zeros(d_out * d_in, d_out * d_in);
    for i in 0..d_out {
        for j in 0..d_out {
            let image = ch.adjoint_apply(&Matrix::basis_unit(d_out, i, j))?;
            for r in 0..d_in {
                for s in 0..d_in {
                    c[(i * d_in + r, j * d_in + s)] += image[(r, s)];
                }
            }
        }
    }
    Ok(c)
}

/// Computes the inverse candidate, checks complete positivity and extracts
/// a Kraus form when the check passes.
pub fn bayesian_inverse(process: &Process) -> Result<BayesOutcome, BayesError> {
    let candidate = bayes_candidate_eigen(process)?;
    let min_eig = candidate.min_choi_eig()?;
    if candidate.is_cp(EPS_NUM)? {
        let ch = candidate.to_channel(EPS_NUM)?;
        Ok(BayesOutcome::Inverse(ch))
    } else {
        Ok(BayesOutcome::NotCompletelyPositive {
            min_choi_eig: min_eig,
        })
    }
}

/// Checks a proposed reverse channel against the defining equation and the
/// operational symmetry.
pub fn verify_bayes(
    process: &Process,
    reverse: &KrausChannel,
    tol: f64,
) -> Result<BayesReport, BayesError> {
    verify_bayes_map(process, &ChoiMap::from_channel(reverse), tol)
}

/// [`verify_bayes`] for an arbitrary linear map, e.g. a non-CP candidate.
pub fn verify_bayes_map(
    process: &Process,
    reverse: &ChoiMap,
    tol: f64,
) -> Result<BayesReport, BayesError> {
    let d_in = process.channel().dim_in();
    let d_out = process.channel().dim_out();
    if reverse.dim_in() != d_out || reverse.dim_out() != d_in {
        return Err(BayesError::DimMismatch(format!(
            "reverse map is {}->{}, expected {}->{}",
            reverse.dim_in(),
            reverse.dim_out(),
            d_out,
            d_in
        )));
    }

    let defining_residual = defining_residual(process, reverse)?;
    let symmetry_residual = symmetry_residual(process, reverse)?;
    let min_choi_eig = reverse.min_choi_eig()?;
    let is_cp = reverse.is_cp(tol)?;
    let inverse = if is_cp {
        Some(reverse.to_channel(tol)?)
    } else {
        None
    };
    Ok(BayesReport {
        is_cp,
        min_choi_eig,
        defining_residual,
        symmetry_residual,
        inverse,
    })
}

/// `|| E ⋆ rho - S(F ⋆ E(rho)) ||` (operator norm).
fn defining_residual(process: &Process, reverse: &ChoiMap) -> Result<f64, BayesError> {
    let d_in = process.channel().dim_in();
    let d_out = process.channel().dim_out();
    let forward_sot = star(process);
    let prediction = process.prediction();
    let reverse_sot =
        star_with_jamiolkowski(&prediction, &reverse.jamiolkowski(), d_out, d_in);
    let swapped = swap(reverse_sot.mat(), d_out, d_in)?;
    Ok((forward_sot.mat() - &swapped).op_norm())
}

/// Max over Pauli pairs (qubits) or constructed light-touch bases of the
/// operational symmetry deviation.
fn symmetry_residual(process: &Process, reverse: &ChoiMap) -> Result<f64, BayesError> {
    let d_in = process.channel().dim_in();
    let d_out = process.channel().dim_out();
    let basis_a = LightTouchBasis::new(d_in).map_err(|e| {
        BayesError::DimMismatch(format!("cannot build light-touch basis: {e}"))
    })?;
    let basis_b = LightTouchBasis::new(d_out).map_err(|e| {
        BayesError::DimMismatch(format!("cannot build light-touch basis: {e}"))
    })?;
    operational_symmetry_map(process, reverse, &basis_a, &basis_b)
}

/// Max over basis pairs `(A_i, B_j)` of
/// `|<A_i, B_j>_(E,rho) - <B_j, A_i>_(F,E(rho))|`.
///
/// The bases must span observable space for the check to be conclusive;
/// symmetry on a spanning light-touch family forces the defining equation.
pub fn operational_symmetry_check(
    process: &Process,
    reverse: &KrausChannel,
    basis_a: &LightTouchBasis,
    basis_b: &LightTouchBasis,
) -> Result<f64, BayesError> {
    operational_symmetry_map(
        process,
        &ChoiMap::from_channel(reverse),
        basis_a,
        basis_b,
    )
}

fn operational_symmetry_map(
    process: &Process,
    reverse: &ChoiMap,
    basis_a: &LightTouchBasis,
    basis_b: &LightTouchBasis,
) -> Result<f64, BayesError> {
    if basis_a.dim() != process.channel().dim_in() || basis_b.dim() != process.channel().dim_out()
    {
        return Err(BayesError::DimMismatch(
            "basis dimensions do not match the process".into(),
        ));
    }
    let prediction = process.prediction();
    let mut worst = 0.0_f64;
    for oa in basis_a.elements() {
        for ob in basis_b.elements() {
            let forward = ttev(process, oa, ob)?;
            let backward = ttev_map(reverse, &prediction, ob, oa)?;
            worst = worst.max((forward - backward).abs());
        }
    }
    Ok(worst)
}

/// Petz recovery map of the process, in Kraus form:
/// `R_a = rho^{1/2} E_a† E(rho)^{-1/2}`.
///
/// Uses the pseudo-inverse convention on rank-deficient predictions; the
/// result is CPTP whenever the prediction is full rank.
pub fn petz(process: &Process) -> Result<KrausChannel, BayesError> {
    let rho_root = process.prior().mat().msqrt(EPS_NUM)?;
    let pred_inv_root = process.prediction().pinv_sqrt(EPS_NUM)?;
    let kraus: Vec<Matrix> = process
        .channel()
        .kraus()
        .iter()
        .map(|e| &(&rho_root * &e.dagger()) * &pred_inv_root)
        .collect();
    Ok(KrausChannel::from_parts_unchecked(
        process.channel().dim_out(),
        process.channel().dim_in(),
        kraus,
    ))
}
