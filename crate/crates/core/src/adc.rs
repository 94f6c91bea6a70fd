//! Amplitude-damping worked example: closed-form inverse channel, Pauli
//! expectation-value tables, Bloch-ball image sampling and the robustness
//! region of the depolarizing-noise variant.
//!
//! The prior throughout is the diagonal qubit state
//! `rho = diag((1+r3)/2, (1-r3)/2)`; the prediction Bloch coordinate is
//! `s3 = r3 + gamma (1 - r3)`.

use crate::bayes::{bayes_candidate_eigen, BayesError};
use crate::channel::{ChannelError, ChoiMap, DensityMatrix, KrausChannel, Process};
use crate::linalg::Matrix;
use crate::spacetime::{star_ls, ttev_table};
use crate::EPS_NUM;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdcError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error(
        "no completely positive inverse at r3 = {r3}, gamma = {gamma}: \
         requires r3 >= gamma / (gamma - 2) = {bound}"
    )]
    NotInvertible { r3: f64, gamma: f64, bound: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

/// Parameter bundle for the noisy amplitude-damping family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdcParams {
    pub gamma: f64,
    pub r3: f64,
    pub epsilon: f64,
}

impl AdcParams {
    pub fn new(gamma: f64, r3: f64, epsilon: f64) -> Result<Self, AdcError> {
        if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
            return Err(AdcError::ParamOutOfRange(format!(
                "gamma = {gamma} must lie in [0, 1]"
            )));
        }
        if !(-1.0..1.0).contains(&r3) || r3 <= -1.0 {
            return Err(AdcError::ParamOutOfRange(format!(
                "r3 = {r3} must lie in (-1, 1)"
            )));
        }
        if !(0.0..=1.0).contains(&epsilon) || !epsilon.is_finite() {
            return Err(AdcError::ParamOutOfRange(format!(
                "epsilon = {epsilon} must lie in [0, 1]"
            )));
        }
        Ok(AdcParams { gamma, r3, epsilon })
    }
}

/// Prediction Bloch coordinate `s3 = r3 + gamma (1 - r3)`.
pub fn s3(r3: f64, gamma: f64) -> f64 {
    r3 + gamma * (1.0 - r3)
}

/// Diagonal prior `diag((1+r3)/2, (1-r3)/2)`.
pub fn prior(r3: f64) -> Result<DensityMatrix, AdcError> {
    DensityMatrix::from_bloch(0.0, 0.0, r3)
        .map_err(|_| AdcError::ParamOutOfRange(format!("r3 = {r3} must lie in [-1, 1]")))
}

/// The amplitude-damping channel with damping parameter `gamma`.
pub fn adc_channel(gamma: f64) -> Result<KrausChannel, AdcError> {
    Ok(KrausChannel::amplitude_damping(gamma)?)
}

/// The forward process `(E_gamma, rho_r3)`.
pub fn adc_process(r3: f64, gamma: f64) -> Result<Process, AdcError> {
    Ok(Process::new(adc_channel(gamma)?, prior(r3)?)?)
}

/// Complete-positivity condition for the inverse: `r3 >= gamma/(gamma - 2)`,
/// equivalently `r3 + s3 >= 0`.
pub fn cp_condition(r3: f64, gamma: f64) -> bool {
    r3 >= gamma / (gamma - 2.0)
}

/// Bit-flip and dephasing strengths of the inverse channel:
/// `kappa = gamma (1-r3) / (1+s3)` and `lambda = gamma (r3+s3) / (1+r3)`.
pub fn kappa_lambda(r3: f64, gamma: f64) -> (f64, f64) {
    let s = s3(r3, gamma);
    (
        gamma * (1.0 - r3) / (1.0 + s),
        gamma * (r3 + s) / (1.0 + r3),
    )
}

/// Closed-form Bayesian inverse of the amplitude-damping process, with the
/// three Kraus operators
///
/// ```text
/// F0 = diag( sqrt((1+r3)/(1+s3)), sqrt((1-gamma)(1+s3)/(1+r3)) )
/// F1 = sqrt(gamma (1-r3)/(1+s3)) |1><0|
/// F2 = sqrt(gamma (r3+s3)/(1+r3)) |1><1|
/// ```
///
/// Defined exactly when `cp_condition(r3, gamma)` holds (inclusive at the
/// boundary, where `F2` vanishes).
pub fn adc_inverse_closed_form(r3: f64, gamma: f64) -> Result<KrausChannel, AdcError> {
    AdcParams::new(gamma, r3, 0.0)?;
    if !cp_condition(r3, gamma) {
        return Err(AdcError::NotInvertible {
            r3,
            gamma,
            bound: gamma / (gamma - 2.0),
        });
    }
    let s = s3(r3, gamma);
    let f0 = Matrix::from_real_rows(&[
        &[((1.0 + r3) / (1.0 + s)).sqrt(), 0.0],
        &[0.0, ((1.0 - gamma) * (1.0 + s) / (1.0 + r3)).sqrt()],
    ]);
    let f1 = Matrix::from_real_rows(&[
        &[0.0, 0.0],
        &[(gamma * (1.0 - r3) / (1.0 + s)).sqrt(), 0.0],
    ]);
    // r3 + s3 can sit at an FP hair below zero exactly on the boundary
    let f2 = Matrix::from_real_rows(&[
        &[0.0, 0.0],
        &[0.0, (gamma * (r3 + s).max(0.0) / (1.0 + r3)).sqrt()],
    ]);
    Ok(KrausChannel::from_parts_unchecked(2, 2, vec![f0, f1, f2]))
}

/// The four Pauli tables of the worked example. Entry conventions:
///
/// - `forward[a][b] = <sigma_a, sigma_b>` for `(E, rho)`,
/// - `bayes[b][a] = <sigma_b, sigma_a>` for `(F, E(rho))`, the transpose of
///   `forward` when `F` is the Bayesian inverse,
/// - `petz[b][a] = <sigma_b, sigma_a>` for `(R, E(rho))`,
/// - `ls[a][b] = Tr[(E ⋆_LS rho)(sigma_b ⊗ sigma_a)]`, the Leifer-Spekkens
///   pairing, which is symmetric against its reverse-process partner but
///   does not reproduce the operational values.
#[derive(Clone, Debug, Serialize)]
pub struct TableSet {
    pub forward: [[f64; 4]; 4],
    pub bayes: [[f64; 4]; 4],
    pub petz: [[f64; 4]; 4],
    pub ls: [[f64; 4]; 4],
}

/// Forward-process Pauli table.
pub fn table_forward(r3: f64, gamma: f64) -> Result<[[f64; 4]; 4], AdcError> {
    let process = adc_process(r3, gamma)?;
    Ok(ttev_table(&process).map_err(BayesError::from)?)
}

/// Reverse-process Pauli table for the Bayesian inverse; requires the CP
/// condition.
pub fn table_bayes(r3: f64, gamma: f64) -> Result<[[f64; 4]; 4], AdcError> {
    let inverse = adc_inverse_closed_form(r3, gamma)?;
    let prediction = DensityMatrix::from_bloch(0.0, 0.0, s3(r3, gamma))?;
    let process = Process::new(inverse, prediction)?;
    Ok(ttev_table(&process).map_err(BayesError::from)?)
}

/// Reverse-process Pauli table for the Petz recovery map.
pub fn table_petz(r3: f64, gamma: f64) -> Result<[[f64; 4]; 4], AdcError> {
    let process = adc_process(r3, gamma)?;
    let recovery = crate::bayes::petz(&process)?;
    let prediction = DensityMatrix::from_bloch(0.0, 0.0, s3(r3, gamma))?;
    let reverse = Process::new(recovery, prediction)?;
    Ok(ttev_table(&reverse).map_err(BayesError::from)?)
}

/// Leifer-Spekkens pairing table, in the orientation whose entry `(a, b)`
/// is `Tr[(E ⋆_LS rho)(sigma_b ⊗ sigma_a)]`.
pub fn table_ls(r3: f64, gamma: f64) -> Result<[[f64; 4]; 4], AdcError> {
    let process = adc_process(r3, gamma)?;
    let sot = star_ls(&process).map_err(BayesError::from)?;
    let mut table = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let pair = crate::channel::pauli_matrix(b).tensor(&crate::channel::pauli_matrix(a));
            table[a][b] = (sot.mat() * &pair).trace().re;
        }
    }
    Ok(table)
}

/// All four tables at once; fails when the CP condition excludes the
/// Bayesian-inverse table.
pub fn tables(r3: f64, gamma: f64) -> Result<TableSet, AdcError> {
    Ok(TableSet {
        forward: table_forward(r3, gamma)?,
        bayes: table_bayes(r3, gamma)?,
        petz: table_petz(r3, gamma)?,
        ls: table_ls(r3, gamma)?,
    })
}

/// `epsilon`-weighted mixture of the amplitude-damping channel with the
/// completely depolarizing channel.
pub fn noisy_adc(gamma: f64, epsilon: f64) -> Result<KrausChannel, AdcError> {
    if !(0.0..=1.0).contains(&epsilon) || !epsilon.is_finite() {
        return Err(AdcError::ParamOutOfRange(format!(
            "epsilon = {epsilon} must lie in [0, 1]"
        )));
    }
    Ok(KrausChannel::mix(
        &[adc_channel(gamma)?, KrausChannel::completely_depolarizing()],
        &[1.0 - epsilon, epsilon],
    )?)
}

/// Closed-form membership test for the Bayesian-invertibility region of the
/// noisy channel: the strict inequality
///
/// ```text
/// (1 - e/2)((1-e)(1-g) + e/2)(1 - r3^2)
/// ------------------------------------- > (1-e)^2 (1-g)
///    1 - (1-e)^2 (r3 + g(1-r3))^2
/// ```
pub fn robustness_indicator(epsilon: f64, gamma: f64, r3: f64) -> bool {
    let s = s3(r3, gamma);
    let shrink = 1.0 - epsilon;
    let numerator =
        (1.0 - epsilon / 2.0) * (shrink * (1.0 - gamma) + epsilon / 2.0) * (1.0 - r3 * r3);
    let denominator = 1.0 - shrink * shrink * s * s;
    numerator / denominator > shrink * shrink * (1.0 - gamma)
}

/// Outcome of a seeded perturbation scan around a diagonal prior.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub invertible: usize,
    pub fraction: f64,
}

/// Perturbs the prior as `rho + delta h` over `trials` random traceless
/// Hermitian directions with `||h|| <= 1` and reports the fraction of
/// perturbed processes that remain Bayesian invertible (and valid states).
pub fn robustness_probe(
    epsilon: f64,
    gamma: f64,
    r3: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport, AdcError> {
    if delta < 0.0 || !delta.is_finite() {
        return Err(AdcError::ParamOutOfRange(format!(
            "delta = {delta} must be nonnegative"
        )));
    }
    let channel = noisy_adc(gamma, epsilon)?;
    let base = prior(r3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut invertible = 0;
    for _ in 0..trials {
        let h = crate::random::random_traceless_hermitian_ball(&mut rng);
        let perturbed = base.mat() + &h.scale(delta);
        let Ok(rho) = DensityMatrix::new(perturbed, EPS_NUM) else {
            continue;
        };
        let Ok(process) = Process::new(channel.clone(), rho) else {
            continue;
        };
        let Ok(candidate) = bayes_candidate_eigen(&process) else {
            continue;
        };
        if candidate.is_cp(EPS_NUM).map_err(BayesError::from)? {
            invertible += 1;
        }
    }
    Ok(ProbeReport {
        trials,
        invertible,
        fraction: if trials == 0 {
            1.0
        } else {
            invertible as f64 / trials as f64
        },
    })
}

/// Point in (or near) the Bloch ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn in_ball(&self, tol: f64) -> bool {
        self.norm() <= 1.0 + tol
    }
}

/// Deterministic quasi-uniform sample of the Bloch ball mapped through a
/// linear map: Fibonacci-lattice boundary sphere plus radially scaled
/// interior shells. The seed only rotates the lattices, so identical calls
/// are byte-identical.
pub fn bloch_image_map(
    map: &ChoiMap,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(BlochPoint, BlochPoint)>, AdcError> {
    if map.dim_in() != 2 || map.dim_out() != 2 {
        return Err(AdcError::ParamOutOfRange(
            "Bloch image sampling is defined for qubit maps".into(),
        ));
    }
    let mut pairs = Vec::with_capacity(n_samples);
    for point in bloch_ball_points(n_samples, seed) {
        let rho = DensityMatrix::from_bloch(point.x, point.y, point.z)
            .expect("sampled points lie in the ball")
            .mat()
            .clone();
        let out = map.apply(&rho).map_err(BayesError::from)?;
        pairs.push((point, bloch_of(&out)));
    }
    Ok(pairs)
}

/// [`bloch_image_map`] for a Kraus channel.
pub fn bloch_image(
    ch: &KrausChannel,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(BlochPoint, BlochPoint)>, AdcError> {
    bloch_image_map(&ChoiMap::from_channel(ch), n_samples, seed)
}

/// Bloch coordinates of an arbitrary qubit operator image (trace-normalized
/// coordinates are not assumed; callers feed unit-trace inputs).
fn bloch_of(m: &Matrix) -> BlochPoint {
    let x = (m[(0, 1)] + m[(1, 0)]).re;
    let y = (m[(1, 0)] - m[(0, 1)]).im;
    let z = (m[(0, 0)] - m[(1, 1)]).re;
    BlochPoint { x, y, z }
}

/// Quasi-uniform ball sample: shells at radii `k / n_shells`, each carrying
/// a Fibonacci sphere with a point budget proportional to its area.
fn bloch_ball_points(n_samples: usize, seed: u64) -> Vec<BlochPoint> {
    if n_samples == 0 {
        return Vec::new();
    }
    // golden-angle offset derived from the seed keeps runs reproducible
    // while letting different seeds decorrelate the lattices
    let offset = (seed as f64) * 0.618_033_988_749_894_9 % 1.0;
    let n_shells = ((n_samples as f64 / 8.0).cbrt().ceil() as usize).max(1);
    let weight: f64 = (1..=n_shells).map(|k| (k as f64 / n_shells as f64).powi(2)).sum();
    let mut points = Vec::with_capacity(n_samples);
    let mut remaining = n_samples;
    for k in (1..=n_shells).rev() {
        let radius = k as f64 / n_shells as f64;
        let budget = if k == 1 {
            remaining
        } else {
            ((n_samples as f64) * radius * radius / weight).round() as usize
        };
        let count = budget.min(remaining);
        for i in 0..count {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let azimuth = std::f64::consts::TAU * ((i as f64) * 0.618_033_988_749_894_9 + offset);
            let planar = (1.0 - z * z).max(0.0).sqrt();
            points.push(BlochPoint {
                x: radius * planar * azimuth.cos(),
                y: radius * planar * azimuth.sin(),
                z: radius * z,
            });
        }
        remaining -= count;
        if remaining == 0 {
            break;
        }
    }
    points
}

/// Inverse candidate for the (possibly noisy) damping process as a raw
/// linear map, defined on both sides of the CP boundary.
pub fn adc_inverse_candidate(r3: f64, gamma: f64, epsilon: f64) -> Result<ChoiMap, AdcError> {
    let channel = if epsilon == 0.0 {
        adc_channel(gamma)?
    } else {
        noisy_adc(gamma, epsilon)?
    };
    let process = Process::new(channel, prior(r3)?)?;
    Ok(bayes_candidate_eigen(&process)?)
}

/// Named map selector shared by the CLI and the figure-data helpers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdcMap {
    Forward,
    Bayes,
    Petz,
}

/// The selected map as a Choi-form linear map; `Bayes` is returned even when
/// it is not completely positive so its Bloch image can be inspected.
pub fn adc_map(which: AdcMap, r3: f64, gamma: f64) -> Result<ChoiMap, AdcError> {
    match which {
        AdcMap::Forward => Ok(ChoiMap::from_channel(&adc_channel(gamma)?)),
        AdcMap::Bayes => adc_inverse_candidate(r3, gamma, 0.0),
        AdcMap::Petz => {
            let process = adc_process(r3, gamma)?;
            Ok(ChoiMap::from_channel(&crate::bayes::petz(&process)?))
        }
    }
}
