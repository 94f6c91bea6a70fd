//! Measurement circuits for two-time correlation experiments.
//!
//! The forward circuit measures a Pauli observable, routes the qubit through
//! a Stinespring dilation of the amplitude-damping channel, and measures a
//! second Pauli observable; each measurement copies the computational-basis
//! value onto a fresh ancilla with a CNOT and reads the ancilla out in Z.
//! The reverse circuit starts from the prediction state and runs the same
//! protocol with a two-ancilla dilation of the Bayesian inverse channel.
//!
//! Simulation is by density-matrix evolution. Exact mode branches on every
//! measurement and carries branch weights, so results are free of sampling
//! noise; shot mode draws seeded samples from the exact joint record
//! distribution and reports the finite-statistics estimate.
//!
//! Pauli measurements use the basis-change convention `U_1 = H`,
//! `U_2 = H R_z(pi/2)`, `U_3 = 1`; the dilation angles satisfy
//! `cos(theta/2) = sqrt(1-gamma)` for the forward noise block and
//! `cos(theta'/2) = sqrt((1+r3)/(1+s3))`,
//! `cos(phi/2) = sqrt((1-gamma)(1+s3)/(1+r3))` for the reverse one. Both
//! blocks are validated by channel tomography against the Kraus-level
//! channels, which also fixes the one reading of the reverse block (both
//! rotations controlled by the system) that reproduces the inverse channel.

use crate::adc::{cp_condition, prior, s3, AdcError};
use crate::channel::ChannelError;
use crate::linalg::{c64, Matrix, ONE, ZERO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("Pauli index {0} out of range 0..=3")]
    BadIndex(usize),
    #[error("shots must be at least 1")]
    NoShots,
    #[error(transparent)]
    Adc(#[from] AdcError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Circuit operations. Qubit 0 is the most significant index of the joint
/// computational basis.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H { target: usize },
    X { target: usize },
    Ry { target: usize, theta: f64 },
    Rz { target: usize, delta: f64 },
    Cnot { control: usize, target: usize },
    CRy { control: usize, target: usize, theta: f64 },
    Toffoli { control_a: usize, control_b: usize, target: usize },
    /// Projective Z measurement recording an outcome sign (+1 for |0>).
    MeasureZ { target: usize },
    /// Removes the qubit by partial trace.
    Discard { target: usize },
}

/// A register of qubits with per-qubit initial states and an operation list.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    /// One 2x2 initial state per qubit.
    pub initial: Vec<Matrix>,
    pub ops: Vec<Gate>,
}

impl Circuit {
    pub fn n_records(&self) -> usize {
        self.ops
            .iter()
            .filter(|g| matches!(g, Gate::MeasureZ { .. }))
            .count()
    }
}

/// Simulation result: expectation of the product of recorded signs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SimResult {
    pub expectation: f64,
    /// 0 for exact mode.
    pub shots: u64,
    /// 0 for exact mode; sample standard error otherwise.
    pub stderr: f64,
}

fn ket0() -> Matrix {
    Matrix::basis_unit(2, 0, 0)
}

/// Basis-change gates (time order) whose conjugation turns a Z readout into
/// a measurement of `sigma_alpha`.
fn basis_change(alpha: usize, target: usize) -> Vec<Gate> {
    match alpha {
        1 => vec![Gate::H { target }],
        2 => vec![
            Gate::Rz {
                target,
                delta: std::f64::consts::FRAC_PI_2,
            },
            Gate::H { target },
        ],
        _ => Vec::new(),
    }
}

fn basis_change_back(alpha: usize, target: usize) -> Vec<Gate> {
    match alpha {
        1 => vec![Gate::H { target }],
        2 => vec![
            Gate::H { target },
            Gate::Rz {
                target,
                delta: -std::f64::consts::FRAC_PI_2,
            },
        ],
        _ => Vec::new(),
    }
}

fn check_pauli_index(alpha: usize) -> Result<(), CircuitError> {
    if alpha > 3 {
        return Err(CircuitError::BadIndex(alpha));
    }
    Ok(())
}

fn pauli_measurement(ops: &mut Vec<Gate>, alpha: usize, system: usize, ancilla: usize) {
    ops.extend(basis_change(alpha, system));
    ops.push(Gate::Cnot {
        control: system,
        target: ancilla,
    });
    ops.extend(basis_change_back(alpha, system));
    ops.push(Gate::MeasureZ { target: ancilla });
}

/// Forward protocol: measure `sigma_alpha` on `rho(r3)`, apply the damping
/// noise via its dilation, measure `sigma_beta`. Index 0 omits that
/// measurement stage.
pub fn forward_circuit(
    alpha: usize,
    beta: usize,
    r3: f64,
    gamma: f64,
) -> Result<Circuit, CircuitError> {
    check_pauli_index(alpha)?;
    check_pauli_index(beta)?;
    let system_init = prior(r3)?.mat().clone();
    crate::adc::AdcParams::new(gamma, r3, 0.0)?;
    let theta = 2.0 * (1.0 - gamma).sqrt().clamp(0.0, 1.0).acos();

    let mut initial = vec![system_init];
    let mut next = 1;
    let mut ops = Vec::new();
    let system = 0;

    if alpha != 0 {
        let m1 = next;
        next += 1;
        initial.push(ket0());
        pauli_measurement(&mut ops, alpha, system, m1);
    }

    let env = next;
    next += 1;
    initial.push(ket0());
    ops.push(Gate::CRy {
        control: system,
        target: env,
        theta,
    });
    ops.push(Gate::Cnot {
        control: env,
        target: system,
    });
    ops.push(Gate::Discard { target: env });

    if beta != 0 {
        let m2 = next;
        next += 1;
        initial.push(ket0());
        pauli_measurement(&mut ops, beta, system, m2);
    }

    Ok(Circuit {
        n_qubits: next,
        initial,
        ops,
    })
}

/// Reverse protocol: measure `sigma_beta` on the prediction state, apply
/// the inverse channel via its two-ancilla dilation, measure `sigma_alpha`.
pub fn reverse_circuit(
    beta: usize,
    alpha: usize,
    r3: f64,
    gamma: f64,
) -> Result<Circuit, CircuitError> {
    check_pauli_index(alpha)?;
    check_pauli_index(beta)?;
    crate::adc::AdcParams::new(gamma, r3, 0.0)?;
    if !cp_condition(r3, gamma) {
        return Err(CircuitError::Adc(AdcError::NotInvertible {
            r3,
            gamma,
            bound: gamma / (gamma - 2.0),
        }));
    }
    let s = s3(r3, gamma);
    let (theta_inv, phi) = reverse_angles(r3, gamma);
    let system_init = prior(s)?.mat().clone();

    let mut initial = vec![system_init];
    let mut next = 1;
    let mut ops = Vec::new();
    let system = 0;

    if beta != 0 {
        let m1 = next;
        next += 1;
        initial.push(ket0());
        pauli_measurement(&mut ops, beta, system, m1);
    }

    let env1 = next;
    let env2 = next + 1;
    next += 2;
    initial.push(ket0());
    initial.push(ket0());
    ops.push(Gate::X { target: system });
    ops.push(Gate::X { target: env1 });
    ops.push(Gate::CRy {
        control: system,
        target: env1,
        theta: theta_inv,
    });
    ops.push(Gate::CRy {
        control: system,
        target: env2,
        theta: phi,
    });
    ops.push(Gate::Cnot {
        control: env1,
        target: system,
    });
    ops.push(Gate::Discard { target: env1 });
    ops.push(Gate::Discard { target: env2 });

    if alpha != 0 {
        let m2 = next;
        next += 1;
        initial.push(ket0());
        pauli_measurement(&mut ops, alpha, system, m2);
    }

    Ok(Circuit {
        n_qubits: next,
        initial,
        ops,
    })
}

/// Dilation angles of the inverse channel.
pub fn reverse_angles(r3: f64, gamma: f64) -> (f64, f64) {
    let s = s3(r3, gamma);
    let theta_inv = 2.0 * ((1.0 + r3) / (1.0 + s)).sqrt().clamp(0.0, 1.0).acos();
    let phi = 2.0
        * ((1.0 - gamma) * (1.0 + s) / (1.0 + r3))
            .sqrt()
            .clamp(0.0, 1.0)
            .acos();
    (theta_inv, phi)
}

/// A gate block with designated system qubit and ancilla initial states,
/// used for channel tomography of dilations.
#[derive(Clone, Debug)]
pub struct NoiseBlock {
    pub n_qubits: usize,
    pub system: usize,
    /// Initial states of qubits other than the system, in qubit order.
    pub ancilla_init: Vec<Matrix>,
    pub ops: Vec<Gate>,
}

/// The forward dilation: `CRy(theta)` to a fresh ancilla, CNOT back, discard.
pub fn adc_noise_block(gamma: f64) -> Result<NoiseBlock, CircuitError> {
    crate::adc::AdcParams::new(gamma, 0.0, 0.0)?;
    let theta = 2.0 * (1.0 - gamma).sqrt().clamp(0.0, 1.0).acos();
    Ok(NoiseBlock {
        n_qubits: 2,
        system: 0,
        ancilla_init: vec![ket0()],
        ops: vec![
            Gate::CRy {
                control: 0,
                target: 1,
                theta,
            },
            Gate::Cnot {
                control: 1,
                target: 0,
            },
            Gate::Discard { target: 1 },
        ],
    })
}

/// The reverse dilation implementing the inverse channel.
pub fn inverse_noise_block(r3: f64, gamma: f64) -> Result<NoiseBlock, CircuitError> {
    crate::adc::AdcParams::new(gamma, r3, 0.0)?;
    if !cp_condition(r3, gamma) {
        return Err(CircuitError::Adc(AdcError::NotInvertible {
            r3,
            gamma,
            bound: gamma / (gamma - 2.0),
        }));
    }
    let (theta_inv, phi) = reverse_angles(r3, gamma);
    Ok(NoiseBlock {
        n_qubits: 3,
        system: 0,
        ancilla_init: vec![ket0(), ket0()],
        ops: vec![
            Gate::X { target: 0 },
            Gate::X { target: 1 },
            Gate::CRy {
                control: 0,
                target: 1,
                theta: theta_inv,
            },
            Gate::CRy {
                control: 0,
                target: 2,
                theta: phi,
            },
            Gate::Cnot {
                control: 1,
                target: 0,
            },
            Gate::Discard { target: 1 },
            Gate::Discard { target: 2 },
        ],
    })
}

/// Channel tomography of a noise block: evolves every basis unit `|i><j|`
/// through the block and assembles the Choi matrix of the induced map.
pub fn block_choi(block: &NoiseBlock) -> Matrix {
    let mut choi = Matrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let mut initial = Vec::with_capacity(block.n_qubits);
            let mut ancillas = block.ancilla_init.iter();
            for q in 0..block.n_qubits {
                if q == block.system {
                    initial.push(Matrix::basis_unit(2, i, j));
                } else {
                    initial.push(ancillas.next().expect("ancilla_init covers non-system qubits").clone());
                }
            }
            let mut state = SimState::new(&initial);
            for gate in &block.ops {
                state.apply(gate);
            }
            let image = state.mat;
            debug_assert_eq!(image.rows(), 2);
            for r in 0..2 {
                for s in 0..2 {
                    choi[(i * 2 + r, j * 2 + s)] += image[(r, s)];
                }
            }
        }
    }
    choi
}

/// Density-matrix simulator state over the live qubits.
struct SimState {
    /// Original qubit indices still alive, most significant first.
    live: Vec<usize>,
    mat: Matrix,
}

impl SimState {
    fn new(initial: &[Matrix]) -> Self {
        let mut mat = Matrix::identity(1);
        for q in initial {
            assert_eq!(q.rows(), 2, "per-qubit initial states are 2x2");
            mat = mat.tensor(q);
        }
        SimState {
            live: (0..initial.len()).collect(),
            mat,
        }
    }

    fn position(&self, qubit: usize) -> usize {
        self.live
            .iter()
            .position(|&q| q == qubit)
            .expect("gate addresses a live qubit")
    }

    fn apply(&mut self, gate: &Gate) {
        match gate {
            Gate::H { target } => self.apply_unitary(&[*target], &hadamard()),
            Gate::X { target } => self.apply_unitary(&[*target], &crate::channel::pauli_matrix(1)),
            Gate::Ry { target, theta } => self.apply_unitary(&[*target], &ry(*theta)),
            Gate::Rz { target, delta } => self.apply_unitary(&[*target], &rz(*delta)),
            Gate::Cnot { control, target } => {
                self.apply_unitary(&[*control, *target], &controlled(&crate::channel::pauli_matrix(1)))
            }
            Gate::CRy {
                control,
                target,
                theta,
            } => self.apply_unitary(&[*control, *target], &controlled(&ry(*theta))),
            Gate::Toffoli {
                control_a,
                control_b,
                target,
            } => self.apply_unitary(
                &[*control_a, *control_b, *target],
                &controlled(&controlled(&crate::channel::pauli_matrix(1))),
            ),
            Gate::MeasureZ { .. } => panic!("measurements are handled by the branch driver"),
            Gate::Discard { target } => self.discard(*target),
        }
    }

    /// Applies a `2^k`-dimensional unitary on the listed qubits (first
    /// listed = most significant gate index): `rho <- U rho U†`.
    fn apply_unitary(&mut self, qubits: &[usize], u: &Matrix) {
        let n = self.live.len();
        let k = qubits.len();
        debug_assert_eq!(u.rows(), 1 << k);
        debug_assert!(
            (1..k).all(|i| !qubits[..i].contains(&qubits[i])),
            "gate targets and controls must be distinct"
        );
        let weights: Vec<usize> = qubits
            .iter()
            .map(|&q| 1usize << (n - 1 - self.position(q)))
            .collect();
        let dim = self.mat.rows();
        let sub = 1usize << k;
        let pattern = |j: usize| -> usize {
            let mut p = 0;
            for (t, w) in weights.iter().enumerate() {
                if (j >> (k - 1 - t)) & 1 == 1 {
                    p |= w;
                }
            }
            p
        };
        let patterns: Vec<usize> = (0..sub).map(pattern).collect();
        let mask: usize = weights.iter().sum();

        let mut gathered = vec![ZERO; sub];
        // left multiply by U
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            for col in 0..dim {
                for (j, &p) in patterns.iter().enumerate() {
                    gathered[j] = self.mat[(base | p, col)];
                }
                for (j, &p) in patterns.iter().enumerate() {
                    let mut acc = ZERO;
                    for (i, g) in gathered.iter().enumerate() {
                        acc += u[(j, i)] * g;
                    }
                    self.mat[(base | p, col)] = acc;
                }
            }
        }
        // right multiply by U†
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            for row in 0..dim {
                for (j, &p) in patterns.iter().enumerate() {
                    gathered[j] = self.mat[(row, base | p)];
                }
                for (j, &p) in patterns.iter().enumerate() {
                    let mut acc = ZERO;
                    for (i, g) in gathered.iter().enumerate() {
                        acc += u[(j, i)].conj() * g;
                    }
                    self.mat[(row, base | p)] = acc;
                }
            }
        }
    }

    /// Projects onto outcome `bit` of a Z measurement, unnormalized.
    fn project(&self, qubit: usize, bit: usize) -> Matrix {
        let n = self.live.len();
        let w = 1usize << (n - 1 - self.position(qubit));
        Matrix::from_fn(self.mat.rows(), self.mat.cols(), |r, c| {
            if (r & w != 0) == (bit == 1) && (c & w != 0) == (bit == 1) {
                self.mat[(r, c)]
            } else {
                ZERO
            }
        })
    }

    fn discard(&mut self, qubit: usize) {
        let n = self.live.len();
        let pos = self.position(qubit);
        let low_bits = n - 1 - pos;
        let low_mask = (1usize << low_bits) - 1;
        let dim_new = self.mat.rows() / 2;
        let expand = |r: usize, b: usize| -> usize {
            let high = r >> low_bits;
            let low = r & low_mask;
            (((high << 1) | b) << low_bits) | low
        };
        self.mat = Matrix::from_fn(dim_new, dim_new, |r, c| {
            self.mat[(expand(r, 0), expand(c, 0))] + self.mat[(expand(r, 1), expand(c, 1))]
        });
        self.live.remove(pos);
    }
}

fn hadamard() -> Matrix {
    let s = 1.0 / 2.0_f64.sqrt();
    Matrix::from_real_rows(&[&[s, s], &[s, -s]])
}

fn ry(theta: f64) -> Matrix {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix::from_real_rows(&[&[c, -s], &[s, c]])
}

fn rz(delta: f64) -> Matrix {
    Matrix::from_rows(&[&[ONE, ZERO], &[ZERO, c64(delta.cos(), delta.sin())]])
}

/// Controlled version of a single- or multi-qubit unitary; the control is
/// the new most significant qubit.
fn controlled(u: &Matrix) -> Matrix {
    let d = u.rows();
    Matrix::from_fn(2 * d, 2 * d, |r, c| {
        if r < d && c < d {
            if r == c {
                ONE
            } else {
                ZERO
            }
        } else if r >= d && c >= d {
            u[(r - d, c - d)]
        } else {
            ZERO
        }
    })
}

/// Terminal branches of a circuit run: joint record-sign product and weight.
fn branch_distribution(c: &Circuit) -> Vec<(f64, f64)> {
    let mut branches = vec![(SimState::new(&c.initial), 1.0_f64)];
    for gate in &c.ops {
        match gate {
            Gate::MeasureZ { target } => {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for (state, sign) in branches {
                    for bit in 0..2 {
                        let projected = state.project(*target, bit);
                        if projected.trace().re > 1e-15 || projected.max_abs() > 1e-15 {
                            next.push((
                                SimState {
                                    live: state.live.clone(),
                                    mat: projected,
                                },
                                sign * if bit == 0 { 1.0 } else { -1.0 },
                            ));
                        }
                    }
                }
                branches = next;
            }
            other => {
                for (state, _) in &mut branches {
                    state.apply(other);
                }
            }
        }
    }
    branches
        .into_iter()
        .map(|(state, sign)| (sign, state.mat.trace().re))
        .collect()
}

/// Noise-free expectation of the record product, by weighted branching.
pub fn simulate_exact(c: &Circuit) -> SimResult {
    let expectation = branch_distribution(c)
        .into_iter()
        .map(|(sign, weight)| sign * weight)
        .sum();
    SimResult {
        expectation,
        shots: 0,
        stderr: 0.0,
    }
}

/// Finite-statistics run: draws `shots` seeded samples from the exact joint
/// record distribution and reports the sample mean and standard error.
pub fn simulate_shots(c: &Circuit, shots: u64, seed: u64) -> Result<SimResult, CircuitError> {
    if shots == 0 {
        return Err(CircuitError::NoShots);
    }
    let mut dist = branch_distribution(c);
    for (_, w) in &mut dist {
        *w = w.max(0.0);
    }
    let total: f64 = dist.iter().map(|(_, w)| w).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0_f64;
    let mut positives = 0u64;
    for _ in 0..shots {
        let mut draw = rng.random_range(0.0..total);
        let mut product = dist.last().map(|&(s, _)| s).unwrap_or(1.0);
        for &(sign, weight) in &dist {
            if draw < weight {
                product = sign;
                break;
            }
            draw -= weight;
        }
        sum += product;
        if product > 0.0 {
            positives += 1;
        }
    }
    let n = shots as f64;
    let mean = sum / n;
    let stderr = if shots > 1 {
        // sample variance of ±1 data, Bessel-corrected
        let p = positives as f64 / n;
        let var = 4.0 * p * (1.0 - p) * n / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SimResult {
        expectation: mean,
        shots,
        stderr,
    })
}
