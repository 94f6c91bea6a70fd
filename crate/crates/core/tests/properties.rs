//! Property tests over randomized inputs: structural invariants of the
//! linear algebra, channel transforms, spatiotemporal products and inverse
//! construction.

use proptest::prelude::*;
use qsot_core::adc::{self, cp_condition};
use qsot_core::bayes::{self, verify_bayes_map};
use qsot_core::channel::{ChoiMap, DensityMatrix, KrausChannel, Process};
use qsot_core::circuit::{forward_circuit, reverse_circuit, simulate_exact};
use qsot_core::linalg::{c64, Matrix};
use qsot_core::observable::{LightTouchBasis, Observable};
use qsot_core::random::{random_cptp, random_density, random_square, random_unitary};
use qsot_core::spacetime::{star, star_ls, swap, ttev, ttev_fast};
use qsot_core::EPS_NUM;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_hermitian(d: usize, rng: &mut impl Rng) -> Matrix {
    let g = random_square(d, rng);
    &g + &g.dagger()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs_random_hermitian(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = rng_from(seed);
        let m = random_hermitian(d, &mut rng);
        let spec = m.eigh(1e-8).unwrap();
        let rebuilt = spec.reconstruct();
        prop_assert!((&rebuilt - &m).fro_norm() <= 1e-9 * (1.0 + m.fro_norm()));
        // descending eigenvalues, orthonormal vectors
        for w in spec.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        let gram = &spec.vectors.dagger() * &spec.vectors;
        prop_assert!(gram.max_abs_diff(&Matrix::identity(d)) < 1e-10);
    }

    #[test]
    fn tensor_mixed_product_and_associativity(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let a = random_square(2, &mut rng);
        let b = random_square(3, &mut rng);
        let c = random_square(2, &mut rng);
        let d = random_square(3, &mut rng);
        let lhs = &a.tensor(&b) * &c.tensor(&d);
        let rhs = (&a * &c).tensor(&(&b * &d));
        let scale = lhs.max_abs().max(1.0);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale);
        let assoc_l = a.tensor(&b).tensor(&c);
        let assoc_r = a.tensor(&b.tensor(&c));
        prop_assert!(assoc_l.max_abs_diff(&assoc_r) <= 1e-12 * assoc_l.max_abs().max(1.0));
    }

    #[test]
    fn msqrt_squares_back(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = rng_from(seed);
        let g = random_square(d, &mut rng);
        let m = &g * &g.dagger();
        let root = m.msqrt(1e-8).unwrap();
        let back = &root * &root;
        prop_assert!((&back - &m).fro_norm() <= 1e-9 * (1.0 + m.fro_norm()));
    }

    #[test]
    fn outer_products_are_psd(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = rng_from(seed);
        let v = Matrix::from_fn(d, 1, |_, _| {
            c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &v * &v.dagger();
        prop_assert!(m.is_psd(1e-9).unwrap());
    }

    #[test]
    fn adjoint_duality(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let a = random_square(2, &mut rng);
        let b = random_square(2, &mut rng);
        let lhs = (&ch.apply(&a).unwrap().dagger() * &b).trace();
        let rhs = (&a.dagger() * &ch.adjoint_apply(&b).unwrap()).trace();
        let scale = a.fro_norm() * b.fro_norm();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn choi_roundtrip_and_jamiolkowski_relation(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, k, &mut rng);
        let choi = ch.choi();
        let back = qsot_core::channel::kraus_from_choi(&choi, 2, 2, 1e-8).unwrap();
        prop_assert!(back.choi().max_abs_diff(&choi) < 1e-9);
        let pt = choi.partial_transpose_first(2, 2);
        prop_assert!(ch.jamiolkowski().max_abs_diff(&pt) <= 1e-12 * choi.max_abs().max(1.0));
    }

    #[test]
    fn channels_preserve_trace(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let out = ch.apply(rho.mat()).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(out.trace().im.abs() <= 1e-10);
    }

    #[test]
    fn star_marginals(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(d, d, 3, &mut rng);
        let rho = random_density(d, &mut rng);
        let process = Process::new(ch, rho).unwrap();
        let sot = star(&process);
        prop_assert!(sot.marginal_input().max_abs_diff(process.prior().mat()) < 1e-9);
        prop_assert!(sot.marginal_output().max_abs_diff(&process.prediction()) < 1e-9);
    }

    #[test]
    fn light_touch_pairs_agree_with_the_shortcut(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let process = Process::new(ch, rho).unwrap();
        let scale_a = rng.random_range(0.25..3.0);
        let scale_b = rng.random_range(0.25..3.0);
        let oa = random_reflection(&mut rng).scaled(scale_a);
        let ob = random_reflection(&mut rng).scaled(scale_b);
        let slow = ttev(&process, &oa, &ob).unwrap();
        let fast = ttev_fast(&process, &oa, &ob).unwrap();
        prop_assert!((slow - fast).abs() <= 1e-9 * scale_a.max(1.0) * scale_b.max(1.0));
    }

    #[test]
    fn swap_is_multiplicative_and_trace_preserving(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let m = random_square(6, &mut rng);
        let n = random_square(6, &mut rng);
        let lhs = swap(&(&m * &n), 2, 3).unwrap();
        let rhs = &swap(&m, 2, 3).unwrap() * &swap(&n, 2, 3).unwrap();
        let scale = lhs.max_abs().max(1.0);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale);
        prop_assert!((swap(&m, 2, 3).unwrap().trace() - m.trace()).norm() <= 1e-12);
    }

    #[test]
    fn candidate_routes_agree(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let process = Process::new(ch, rho).unwrap();
        if let Ok(eigen) = bayes::bayes_candidate_eigen(&process) {
            let sylvester = bayes::bayes_candidate_sylvester(&process).unwrap();
            prop_assert!(eigen.choi().max_abs_diff(sylvester.choi()) <= 1e-9);
        }
    }

    #[test]
    fn candidates_stay_trace_preserving(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let process = Process::new(ch, rho).unwrap();
        if let Ok(candidate) = bayes::bayes_candidate_eigen(&process) {
            let marginal = candidate.choi().partial_trace_second(2, 2);
            prop_assert!(marginal.max_abs_diff(&Matrix::identity(2)) <= 1e-9);
        }
    }

    #[test]
    fn theorem_equivalence_both_ways(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let process = Process::new(ch, rho).unwrap();
        let Ok(candidate) = bayes::bayes_candidate_eigen(&process) else {
            return Ok(());
        };
        let recovery = bayes::petz(&process).unwrap();
        for map in [candidate, ChoiMap::from_channel(&recovery)] {
            let report = verify_bayes_map(&process, &map, EPS_NUM).unwrap();
            if report.defining_residual <= 1e-9 {
                prop_assert!(report.symmetry_residual <= 1e-8);
            }
            if report.symmetry_residual <= 1e-10 {
                prop_assert!(report.defining_residual <= 1e-8);
            }
        }
    }

    #[test]
    fn circuits_agree_with_correlators_across_parameters(
        seed in any::<u64>(),
        alpha in 0usize..4,
        beta in 0usize..4,
    ) {
        let mut rng = rng_from(seed);
        let r3: f64 = rng.random_range(-0.2..0.9);
        let gamma: f64 = rng.random_range(0.05..0.95);
        prop_assume!(cp_condition(r3, gamma));
        let process = qsot_core::adc::adc_process(r3, gamma).unwrap();
        let oa = Observable::pauli(alpha).unwrap();
        let ob = Observable::pauli(beta).unwrap();
        let expect = ttev(&process, &oa, &ob).unwrap();
        let fwd = simulate_exact(&forward_circuit(alpha, beta, r3, gamma).unwrap());
        prop_assert!((fwd.expectation - expect).abs() <= 1e-9);
        let rev = simulate_exact(&reverse_circuit(beta, alpha, r3, gamma).unwrap());
        prop_assert!((rev.expectation - expect).abs() <= 1e-9);
    }

    #[test]
    fn ls_product_is_hermitian_unit_trace(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let ch = random_cptp(2, 2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let process = Process::new(ch, rho).unwrap();
        let sot = star_ls(&process).unwrap();
        prop_assert!(sot.mat().is_hermitian(1e-9));
        prop_assert!((sot.mat().trace().re - 1.0).abs() <= 1e-9);
    }
}

fn random_reflection(rng: &mut impl Rng) -> Observable {
    let u = random_unitary(2, rng);
    let p = Matrix::from_fn(2, 2, |i, j| u[(i, 0)] * u[(j, 0)].conj());
    Observable::new(&p.scale(2.0) - &Matrix::identity(2), EPS_NUM).unwrap()
}

/// Classical embeddings: quantum two-time expectation values of diagonal
/// dichotomic observables against the classical product expectation, plus
/// the time symmetry realized by the classical Bayes reversal.
#[test]
fn classical_embedding_and_bayes_reversal() {
    let mut rng = rng_from(20_240_817);
    for trial in 0..40 {
        let d = 2 + (trial % 3);
        let (process, cond, p) = random_classical_process(d, &mut rng);
        let avals = random_signs(d, &mut rng);
        let bvals = random_signs(d, &mut rng);
        let oa = Observable::new(Matrix::diag_real(&avals), EPS_NUM).unwrap();
        let ob = Observable::new(Matrix::diag_real(&bvals), EPS_NUM).unwrap();

        let classical: f64 = (0..d)
            .flat_map(|x| (0..d).map(move |y| (x, y)))
            .map(|(x, y)| avals[x] * bvals[y] * cond[y][x] * p[x])
            .sum();
        let forward = ttev(&process, &oa, &ob).unwrap();
        assert!((forward - classical).abs() < 1e-10);

        // classical Bayes reversal: Q(x|y) = P(y|x) P(x) / P(y)
        let mut marginal = vec![0.0_f64; d];
        for y in 0..d {
            for x in 0..d {
                marginal[y] += cond[y][x] * p[x];
            }
        }
        let mut reversed = vec![vec![0.0_f64; d]; d];
        for y in 0..d {
            for x in 0..d {
                reversed[x][y] = cond[y][x] * p[x] / marginal[y];
            }
        }
        let reverse_process = classical_process_from(&reversed, &marginal);
        let backward = ttev(&reverse_process, &ob, &oa).unwrap();
        assert!(
            (forward - backward).abs() < 1e-10,
            "classical time symmetry violated: {forward} vs {backward}"
        );
    }
}

fn random_signs(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 })
            .collect();
        if v.iter().any(|&x| x > 0.0) && v.iter().any(|&x| x < 0.0) {
            return v;
        }
    }
}

fn random_classical_process(
    d: usize,
    rng: &mut impl Rng,
) -> (Process, Vec<Vec<f64>>, Vec<f64>) {
    let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let tot: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= tot);
    let mut cond = vec![vec![0.0_f64; d]; d];
    for x in 0..d {
        let mut col: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = col.iter().sum();
        col.iter_mut().for_each(|v| *v /= s);
        for y in 0..d {
            cond[y][x] = col[y];
        }
    }
    (classical_process_from(&cond, &p), cond, p)
}

/// Embeds a column-stochastic map and a distribution as a quantum process
/// with Kraus operators `sqrt(P(y|x)) |y><x|` and a diagonal prior.
fn classical_process_from(cond: &[Vec<f64>], p: &[f64]) -> Process {
    let d = p.len();
    let kraus: Vec<Matrix> = (0..d)
        .flat_map(|x| (0..d).map(move |y| (x, y)))
        .map(|(x, y)| {
            let mut k = Matrix::zeros(d, d);
            k[(y, x)] = c64(cond[y][x].sqrt(), 0.0);
            k
        })
        .collect();
    let ch = KrausChannel::new(kraus, 1e-9).unwrap();
    let rho = DensityMatrix::new(Matrix::diag_real(p), 1e-9).unwrap();
    Process::new(ch, rho).unwrap()
}

/// The dephasing decomposition of the inverse channel holds across the
/// admissible region.
#[test]
fn inverse_channel_dephasing_decomposition() {
    for (r3, gamma) in [(0.0, 0.5), (0.4, 0.8), (-0.2, 0.5), (0.9, 0.1)] {
        let (kappa, lambda) = adc::kappa_lambda(r3, gamma);
        assert!((0.0..=1.0).contains(&kappa));
        assert!((0.0..=1.0).contains(&lambda));
        let dephase = KrausChannel::dephasing(lambda).unwrap();
        let flipped =
            KrausChannel::bit_flip_conjugate(&KrausChannel::amplitude_damping(kappa).unwrap())
                .unwrap();
        let composed = dephase.then(&flipped).unwrap();
        let inverse = adc::adc_inverse_closed_form(r3, gamma).unwrap();
        assert!(composed.choi().max_abs_diff(&inverse.choi()) < 1e-10);
    }
}

/// Light-touch bases stay independent and spanning beyond the qubit case.
#[test]
fn light_touch_bases_span() {
    let mut rng = rng_from(7);
    for d in [2usize, 3, 4] {
        let basis = LightTouchBasis::new(d).unwrap();
        assert_eq!(basis.elements().len(), d * d);
        for el in basis.elements() {
            assert!(el.is_light_touch());
        }
        let g = random_square(d, &mut rng);
        let h = &g + &g.dagger();
        let coeffs = basis.expand(&h).unwrap();
        assert!(basis.reconstruct(&coeffs).max_abs_diff(&h) < 1e-8);
    }
}
