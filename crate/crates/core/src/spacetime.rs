//! Spatiotemporal products and two-time expectation values.
//!
//! A process `(E, rho)` induces a *state over time* on the joint input/output
//! algebra: the canonical product `E ⋆ rho = {rho ⊗ 1, J[E]} / 2` built from
//! the Jamiołkowski matrix, and the Leifer-Spekkens variant
//! `(sqrt(rho) ⊗ 1) J[E] (sqrt(rho) ⊗ 1)`. Both are Hermitian with unit
//! trace but need not be positive.
//!
//! The two-time expectation value `<O_A, O_B>` is always computed here by the
//! operational measure-evolve-measure formula; [`ttev_fast`] is the shortcut
//! `Tr[(E ⋆ rho)(O_A ⊗ O_B)]`, valid for light-touch pairs only.

use crate::channel::{ChannelError, ChoiMap, Process};
use crate::linalg::{LinalgError, Matrix};
use crate::observable::Observable;
use crate::EPS_NUM;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacetimeError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("observable is not light-touch")]
    NotLightTouch,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Hermitian unit-trace operator on a bipartite algebra; possibly negative.
#[derive(Clone, Debug)]
pub struct StateOverTime {
    mat: Matrix,
    dim_a: usize,
    dim_b: usize,
}

impl StateOverTime {
    pub fn new(mat: Matrix, dim_a: usize, dim_b: usize) -> Result<Self, SpacetimeError> {
        if mat.rows() != dim_a * dim_b || !mat.is_square() {
            return Err(SpacetimeError::DimMismatch(format!(
                "matrix is {}x{}, expected {}",
                mat.rows(),
                mat.cols(),
                dim_a * dim_b
            )));
        }
        if !mat.is_hermitian(EPS_NUM) {
            return Err(SpacetimeError::DimMismatch(format!(
                "state over time must be Hermitian (defect {:.3e})",
                mat.hermiticity_defect()
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > EPS_NUM || tr.im.abs() > EPS_NUM {
            return Err(SpacetimeError::DimMismatch(format!(
                "state over time must have unit trace, got {:.12}",
                tr.re
            )));
        }
        Ok(StateOverTime { mat, dim_a, dim_b })
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    /// Marginal on the input system: partial trace over the output factor.
    pub fn marginal_input(&self) -> Matrix {
        self.mat.partial_trace_second(self.dim_a, self.dim_b)
    }

    /// Marginal on the output system: partial trace over the input factor.
    pub fn marginal_output(&self) -> Matrix {
        self.mat.partial_trace_first(self.dim_a, self.dim_b)
    }

    /// Smallest eigenvalue. Reported for diagnostics; a state over time may
    /// legitimately be negative and no semantics is attached to the value.
    pub fn min_eigenvalue(&self) -> f64 {
        self.mat
            .min_eigenvalue(crate::linalg::EIGH_INTERNAL_TOL)
            .expect("state over time is Hermitian")
    }
}

/// Canonical spatiotemporal product `{rho ⊗ 1_B, J[E]} / 2`.
pub fn star(process: &Process) -> StateOverTime {
    let jam = process.channel().jamiolkowski();
    star_with_jamiolkowski(
        process.prior().mat(),
        &jam,
        process.channel().dim_in(),
        process.channel().dim_out(),
    )
}

/// Canonical product from an explicit Jamiołkowski matrix; used for linear
/// maps that are not (or not known to be) channels.
pub fn star_with_jamiolkowski(
    rho: &Matrix,
    jam: &Matrix,
    dim_a: usize,
    dim_b: usize,
) -> StateOverTime {
    let lifted = rho.tensor(&Matrix::identity(dim_b));
    let mat = lifted
        .anticommutator(jam)
        .expect("dims agree by construction")
        .scale(0.5);
    StateOverTime {
        mat,
        dim_a,
        dim_b,
    }
}

/// Leifer-Spekkens product `(sqrt(rho) ⊗ 1) J[E] (sqrt(rho) ⊗ 1)`.
pub fn star_ls(process: &Process) -> Result<StateOverTime, SpacetimeError> {
    let root = process.prior().mat().msqrt(EPS_NUM)?;
    let lifted = root.tensor(&Matrix::identity(process.channel().dim_out()));
    let jam = process.channel().jamiolkowski();
    let mat = &(&lifted * &jam) * &lifted;
    Ok(StateOverTime {
        mat,
        dim_a: process.channel().dim_in(),
        dim_b: process.channel().dim_out(),
    })
}

/// Swap map on a bipartite matrix: input lives on `X ⊗ Y`, output on `Y ⊗ X`.
pub fn swap(m: &Matrix, dim_first: usize, dim_second: usize) -> Result<Matrix, SpacetimeError> {
    if m.rows() != dim_first * dim_second || !m.is_square() {
        return Err(SpacetimeError::DimMismatch(format!(
            "matrix is {}x{}, expected {}",
            m.rows(),
            m.cols(),
            dim_first * dim_second
        )));
    }
    Ok(Matrix::from_fn(m.rows(), m.cols(), |r, c| {
        let (y, x) = (r / dim_first, r % dim_first);
        let (yp, xp) = (c / dim_first, c % dim_first);
        m[(x * dim_second + y, xp * dim_second + yp)]
    }))
}

/// Two-time expectation value by the operational definition:
/// `sum_i lambda_i Tr[E(P_i rho P_i) O_B]`.
pub fn ttev(process: &Process, oa: &Observable, ob: &Observable) -> Result<f64, SpacetimeError> {
    let apply = |x: &Matrix| process.channel().apply(x);
    if oa.dim() != process.channel().dim_in() || ob.dim() != process.channel().dim_out() {
        return Err(SpacetimeError::DimMismatch(format!(
            "observables are {}/{}-dimensional, process is {}/{}",
            oa.dim(),
            ob.dim(),
            process.channel().dim_in(),
            process.channel().dim_out()
        )));
    }
    ttev_with(apply, process.prior().mat(), oa, ob)
}

/// Operational two-time expectation value against an arbitrary linear map.
pub fn ttev_map(
    map: &ChoiMap,
    prior: &Matrix,
    oa: &Observable,
    ob: &Observable,
) -> Result<f64, SpacetimeError> {
    if oa.dim() != map.dim_in() || ob.dim() != map.dim_out() {
        return Err(SpacetimeError::DimMismatch(format!(
            "observables are {}/{}-dimensional, map is {}/{}",
            oa.dim(),
            ob.dim(),
            map.dim_in(),
            map.dim_out()
        )));
    }
    ttev_with(|x| map.apply(x), prior, oa, ob)
}

fn ttev_with(
    apply: impl Fn(&Matrix) -> Result<Matrix, ChannelError>,
    prior: &Matrix,
    oa: &Observable,
    ob: &Observable,
) -> Result<f64, SpacetimeError> {
    let mut total = 0.0;
    for (lambda, proj) in oa.spectral_projectors() {
        let collapsed = &(&proj * prior) * &proj;
        let evolved = apply(&collapsed)?;
        total += lambda * (&evolved * ob.mat()).trace().re;
    }
    Ok(total)
}

/// Shortcut for light-touch pairs: `Tr[(E ⋆ rho)(O_A ⊗ O_B)]`.
///
/// Rejects non-light-touch observables, for which the shortcut and the
/// operational definition may legitimately disagree.
pub fn ttev_fast(
    process: &Process,
    oa: &Observable,
    ob: &Observable,
) -> Result<f64, SpacetimeError> {
    if !oa.is_light_touch() || !ob.is_light_touch() {
        return Err(SpacetimeError::NotLightTouch);
    }
    let sot = star(process);
    Ok((sot.mat() * &oa.mat().tensor(ob.mat())).trace().re)
}

/// 4x4 matrix of Pauli two-time expectation values; entry `(alpha, beta)` is
/// `<sigma_alpha, sigma_beta>` for the given process.
pub fn ttev_table(process: &Process) -> Result<[[f64; 4]; 4], SpacetimeError> {
    if process.channel().dim_in() != 2 || process.channel().dim_out() != 2 {
        return Err(SpacetimeError::DimMismatch(
            "Pauli tables are defined for qubit processes".into(),
        ));
    }
    let paulis: Vec<Observable> = (0..4)
        .map(|a| Observable::pauli(a).expect("index in range"))
        .collect();
    let mut table = [[0.0; 4]; 4];
    for (a, oa) in paulis.iter().enumerate() {
        for (b, ob) in paulis.iter().enumerate() {
            table[a][b] = ttev(process, oa, ob)?;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{DensityMatrix, KrausChannel};
    use crate::linalg::{c64, ONE, ZERO};
    use crate::random::{random_cptp, random_density, random_unitary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn adc_process(r3: f64, gamma: f64) -> Process {
        let ch = KrausChannel::amplitude_damping(gamma).unwrap();
        let rho = DensityMatrix::from_bloch(0.0, 0.0, r3).unwrap();
        Process::new(ch, rho).unwrap()
    }

    fn swap_matrix() -> Matrix {
        Matrix::from_fn(4, 4, |r, c| {
            let (i, k) = (r / 2, r % 2);
            let (j, l) = (c / 2, c % 2);
            if i == l && k == j {
                ONE
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn star_of_identity_on_mixed_state_is_swap_over_two() {
        let process = Process::new(
            KrausChannel::identity(2),
            DensityMatrix::maximally_mixed(2),
        )
        .unwrap();
        let sot = star(&process);
        assert!(sot.mat().max_abs_diff(&swap_matrix().scale(0.5)) < 1e-12);
    }

    #[test]
    fn star_of_adc_with_diagonal_prior() {
        let (r3, gamma) = (0.3, 0.6);
        let gp = 1.0 - gamma;
        let sot = star(&adc_process(r3, gamma));
        let expect = Matrix::from_real_rows(&[
            &[1.0 + r3, 0.0, 0.0, 0.0],
            &[0.0, 0.0, gp.sqrt(), 0.0],
            &[0.0, gp.sqrt(), gamma * (1.0 - r3), 0.0],
            &[0.0, 0.0, 0.0, gp * (1.0 - r3)],
        ])
        .scale(0.5);
        assert!(sot.mat().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn star_of_adc_with_general_prior() {
        let (r1, r2, r3) = (0.25, -0.35, 0.2);
        let gamma = 0.4;
        let gp: f64 = 1.0 - gamma;
        let rho = DensityMatrix::from_bloch(r1, r2, r3).unwrap();
        let process = Process::new(KrausChannel::amplitude_damping(gamma).unwrap(), rho).unwrap();
        let sot = star(&process);

        let r12 = c64(r1, r2);
        let rc = r12.conj();
        let g = gp.sqrt();
        let expect = Matrix::from_rows(&[
            &[
                c64(2.0 * (1.0 + r3), 0.0),
                rc * g,
                rc * (1.0 + gamma),
                ZERO,
            ],
            &[r12 * g, ZERO, c64(2.0 * g, 0.0), rc * gp],
            &[
                r12 * (1.0 + gamma),
                c64(2.0 * g, 0.0),
                c64(2.0 * gamma * (1.0 - r3), 0.0),
                rc * g,
            ],
            &[ZERO, r12 * gp, r12 * g, c64(2.0 * gp * (1.0 - r3), 0.0)],
        ])
        .scale(0.25);
        assert!(sot.mat().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn reverse_states_over_time_match_closed_forms() {
        let (r3, gamma) = (0.3, 0.6);
        let s = r3 + gamma * (1.0 - r3);
        let gp: f64 = 1.0 - gamma;
        let prediction = DensityMatrix::from_bloch(0.0, 0.0, s).unwrap();

        // inverse process (F, E(rho))
        let inverse = crate::adc::adc_inverse_closed_form(r3, gamma).unwrap();
        let reverse = Process::new(inverse, prediction.clone()).unwrap();
        let sot = star(&reverse);
        let expect = Matrix::from_real_rows(&[
            &[1.0 + r3, 0.0, 0.0, 0.0],
            &[0.0, gamma * (1.0 - r3), gp.sqrt(), 0.0],
            &[0.0, gp.sqrt(), 0.0, 0.0],
            &[0.0, 0.0, 0.0, gp * (1.0 - r3)],
        ])
        .scale(0.5);
        assert!(sot.mat().max_abs_diff(&expect) < 1e-12);

        // swapping it recovers the forward state over time exactly
        let forward = star(&adc_process(r3, gamma));
        let swapped = swap(sot.mat(), 2, 2).unwrap();
        assert!(forward.mat().max_abs_diff(&swapped) < 1e-12);

        // Petz process (R, E(rho)) differs in the off-diagonal entry
        let recovery = crate::bayes::petz(&adc_process(r3, gamma)).unwrap();
        let petz_reverse = Process::new(recovery, prediction).unwrap();
        let sot = star(&petz_reverse);
        let h = ((1.0 + r3) / (1.0 + s)).sqrt();
        let expect = Matrix::from_real_rows(&[
            &[1.0 + r3, 0.0, 0.0, 0.0],
            &[0.0, gamma * (1.0 - r3), h, 0.0],
            &[0.0, h, 0.0, 0.0],
            &[0.0, 0.0, 0.0, gp * (1.0 - r3)],
        ])
        .scale(0.5);
        assert!(sot.mat().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn star_marginals_are_prior_and_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let ch = random_cptp(2, 2, 3, &mut rng);
            let rho = random_density(2, &mut rng);
            let process = Process::new(ch, rho).unwrap();
            let sot = star(&process);
            assert!(sot.marginal_input().max_abs_diff(process.prior().mat()) < 1e-9);
            assert!(sot.marginal_output().max_abs_diff(&process.prediction()) < 1e-9);
            assert!((sot.mat().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn star_ls_of_identity_on_mixed_state() {
        let process = Process::new(
            KrausChannel::identity(2),
            DensityMatrix::maximally_mixed(2),
        )
        .unwrap();
        let sot = star_ls(&process).unwrap();
        assert!(sot.mat().max_abs_diff(&swap_matrix().scale(0.5)) < 1e-12);
    }

    #[test]
    fn star_ls_of_pure_prior_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let p0 = Matrix::basis_unit(2, 0, 0);
        let image = ch.apply(&p0).unwrap();
        let rho = DensityMatrix::new(p0.clone(), EPS_NUM).unwrap();
        let process = Process::new(ch, rho).unwrap();
        let sot = star_ls(&process).unwrap();
        assert!(sot.mat().max_abs_diff(&p0.tensor(&image)) < 1e-10);
    }

    #[test]
    fn star_ls_pauli_xx_value() {
        let (r3, gamma): (f64, f64) = (0.5, 0.3);
        let sot = star_ls(&adc_process(r3, gamma)).unwrap();
        let xx = crate::channel::pauli_matrix(1).tensor(&crate::channel::pauli_matrix(1));
        let got = (sot.mat() * &xx).trace().re;
        let expect = ((1.0 - gamma) * (1.0 - r3 * r3)).sqrt();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn swap_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = crate::random::random_square(2, &mut rng);
        let b = crate::random::random_square(3, &mut rng);
        let ab = a.tensor(&b);
        assert!(swap(&ab, 2, 3).unwrap().max_abs_diff(&b.tensor(&a)) < 1e-12);
        let m = crate::random::random_square(6, &mut rng);
        let twice = swap(&swap(&m, 2, 3).unwrap(), 3, 2).unwrap();
        assert!(twice.max_abs_diff(&m) < 1e-12);
        assert!((swap(&m, 2, 3).unwrap().trace() - m.trace()).norm() < 1e-12);
        // multiplicative: S(mn) = S(m) S(n)
        let n = crate::random::random_square(6, &mut rng);
        let lhs = swap(&(&m * &n), 2, 3).unwrap();
        let rhs = &swap(&m, 2, 3).unwrap() * &swap(&n, 2, 3).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        assert!(swap(&m, 4, 2).is_err());
    }

    #[test]
    fn ttev_normalization() {
        let process = adc_process(0.4, 0.7);
        let id = Observable::identity(2);
        assert!((ttev(&process, &id, &id).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ttev_adc_pauli_values() {
        let (r3, gamma) = (0.3, 0.6);
        let process = adc_process(r3, gamma);
        let s3 = r3 + gamma * (1.0 - r3);
        let table = ttev_table(&process).unwrap();
        assert!((table[3][0] - r3).abs() < 1e-12);
        assert!((table[0][3] - s3).abs() < 1e-12);
        assert!((table[1][1] - (1.0 - gamma).sqrt()).abs() < 1e-12);
        assert!((table[2][2] - (1.0 - gamma).sqrt()).abs() < 1e-12);
        assert!((table[3][3] - (1.0 - gamma * (1.0 - r3))).abs() < 1e-12);
        // all remaining entries vanish for a diagonal prior
        let nonzero = [(0usize, 0usize), (0, 3), (1, 1), (2, 2), (3, 0), (3, 3)];
        for a in 0..4 {
            for b in 0..4 {
                if !nonzero.contains(&(a, b)) {
                    assert!(table[a][b].abs() < 1e-12, "entry ({a},{b}) = {}", table[a][b]);
                }
            }
        }
    }

    #[test]
    fn ttev_fast_agrees_on_light_touch_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let ch = random_cptp(2, 2, 3, &mut rng);
            let rho = random_density(2, &mut rng);
            let process = Process::new(ch, rho).unwrap();
            // random dichotomic pair built from random reflections
            let u = random_unitary(2, &mut rng);
            let p = Matrix::from_fn(2, 2, |i, j| u[(i, 0)] * u[(j, 0)].conj());
            let oa = Observable::new(&p.scale(2.0) - &Matrix::identity(2), EPS_NUM).unwrap();
            let v = random_unitary(2, &mut rng);
            let q = Matrix::from_fn(2, 2, |i, j| v[(i, 0)] * v[(j, 0)].conj());
            let ob = Observable::new(&q.scale(2.0) - &Matrix::identity(2), EPS_NUM).unwrap();
            let slow = ttev(&process, &oa, &ob).unwrap();
            let fast = ttev_fast(&process, &oa, &ob).unwrap();
            assert!((slow - fast).abs() < 1e-9, "slow {slow} fast {fast}");
        }
    }

    #[test]
    fn ttev_fast_rejects_non_light_touch() {
        let process = adc_process(0.2, 0.5);
        let proj = Observable::new(Matrix::diag_real(&[1.0, 0.0]), EPS_NUM).unwrap();
        let z = Observable::pauli(3).unwrap();
        assert!(matches!(
            ttev_fast(&process, &proj, &z),
            Err(SpacetimeError::NotLightTouch)
        ));
    }

    /// For non-light-touch observables the operational value and the
    /// state-over-time pairing genuinely part ways; this pins one concrete
    /// disagreeing instance as documentation.
    #[test]
    fn non_light_touch_pairing_disagrees() {
        let gamma = 0.5;
        let process = adc_process(0.9, gamma);
        // |+><+| has distinct eigenvalues {1, 0}: not light-touch.
        let plus = Matrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let oa = Observable::new(plus, EPS_NUM).unwrap();
        let ob = Observable::pauli(3).unwrap();
        let operational = ttev(&process, &oa, &ob).unwrap();
        let sot = star(&process);
        let paired = (sot.mat() * &oa.mat().tensor(ob.mat())).trace().re;
        assert!((operational - gamma / 2.0).abs() < 1e-12);
        assert!((paired - 0.475).abs() < 1e-12);
        assert!((operational - paired).abs() > 0.2);
    }

    #[test]
    fn ttev_scales_bilinearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let process = adc_process(0.25, 0.45);
        for _ in 0..10 {
            let u = random_unitary(2, &mut rng);
            let p = Matrix::from_fn(2, 2, |i, j| u[(i, 0)] * u[(j, 0)].conj());
            let oa = Observable::new(&p.scale(2.0) - &Matrix::identity(2), EPS_NUM).unwrap();
            let ob = Observable::pauli(1).unwrap();
            let base = ttev(&process, &oa, &ob).unwrap();
            let scaled = ttev(&process, &oa.scaled(3.5), &ob.scaled(-0.25)).unwrap();
            assert!((scaled - 3.5 * (-0.25) * base).abs() < 1e-10);
        }
    }

    #[test]
    fn classical_embedding_matches_classical_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let d = 3;
            // strictly positive prior distribution
            let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
            let tot: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= tot);
            // column-stochastic conditional P(y|x)
            let mut cond = vec![vec![0.0_f64; d]; d];
            for x in 0..d {
                let mut col: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = col.iter().sum();
                col.iter_mut().for_each(|v| *v /= s);
                for y in 0..d {
                    cond[y][x] = col[y];
                }
            }
            let kraus: Vec<Matrix> = (0..d)
                .flat_map(|x| {
                    (0..d).map(move |y| (x, y))
                })
                .map(|(x, y)| {
                    let mut k = Matrix::zeros(d, d);
                    k[(y, x)] = c64(cond[y][x].sqrt(), 0.0);
                    k
                })
                .collect();
            let ch = KrausChannel::new(kraus, 1e-9).unwrap();
            let rho = DensityMatrix::new(Matrix::diag_real(&p), 1e-9).unwrap();
            let process = Process::new(ch, rho).unwrap();

            let avals: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let bvals: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let oa = Observable::new(Matrix::diag_real(&avals), EPS_NUM).unwrap();
            let ob = Observable::new(Matrix::diag_real(&bvals), EPS_NUM).unwrap();

            let classical: f64 = (0..d)
                .flat_map(|x| (0..d).map(move |y| (x, y)))
                .map(|(x, y)| avals[x] * bvals[y] * cond[y][x] * p[x])
                .sum();
            let quantum = ttev(&process, &oa, &ob).unwrap();
            assert!((classical - quantum).abs() < 1e-10);
        }
    }
}
