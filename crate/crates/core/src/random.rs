//! Seeded sampling of matrices, states and channels.
//!
//! Callers own the RNG, so every consumer (tests, probes, benches) is
//! reproducible by construction.

use crate::channel::{DensityMatrix, KrausChannel};
use crate::linalg::{c64, Matrix};
use rand::Rng;

/// Square matrix with independent standard-normal real and imaginary parts.
pub fn random_square(d: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(d, d, |_, _| c64(normal(rng), normal(rng)))
}

/// Haar-ish unitary from Gram-Schmidt on a Gaussian matrix; exact
/// distribution does not matter here, orthonormality does.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let g = random_square(d, rng);
        if let Some(u) = gram_schmidt(&g) {
            return u;
        }
    }
}

/// Full-rank random density matrix `G G† / Tr`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    loop {
        let g = random_square(d, rng);
        let p = &g * &g.dagger();
        let tr = p.trace().re;
        if tr > 1e-6 {
            let mat = p.scale(1.0 / tr);
            if let Ok(rho) = DensityMatrix::new(mat, 1e-8) {
                return rho;
            }
        }
    }
}

/// Random CPTP channel with `k` Kraus operators: Gaussian operators
/// right-normalized by `S^{-1/2}` with `S = sum G† G`.
pub fn random_cptp(dim_in: usize, dim_out: usize, k: usize, rng: &mut impl Rng) -> KrausChannel {
    loop {
        let gs: Vec<Matrix> = (0..k)
            .map(|_| Matrix::from_fn(dim_out, dim_in, |_, _| c64(normal(rng), normal(rng))))
            .collect();
        let mut s = Matrix::zeros(dim_in, dim_in);
        for g in &gs {
            s = &s + &(&g.dagger() * g);
        }
        let Ok(s_inv_sqrt) = s.pinv_sqrt(1e-8) else {
            continue;
        };
        let kraus: Vec<Matrix> = gs.iter().map(|g| g * &s_inv_sqrt).collect();
        if let Ok(ch) = KrausChannel::new(kraus, 1e-8) {
            return ch;
        }
    }
}

/// Random unital qubit channel: convex mixture of unitary conjugations.
pub fn random_unital(d: usize, terms: usize, rng: &mut impl Rng) -> KrausChannel {
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let channels: Vec<KrausChannel> = (0..terms)
        .map(|_| KrausChannel::unitary(random_unitary(d, rng), 1e-8).expect("unitary by construction"))
        .collect();
    KrausChannel::mix(&channels, &weights).expect("weights normalized")
}

/// Traceless Hermitian qubit matrix `a X + b Y + c Z` with operator norm
/// at most 1, sampled uniformly from the coefficient ball.
pub fn random_traceless_hermitian_ball(rng: &mut impl Rng) -> Matrix {
    let (a, b, c) = loop {
        let a = rng.random_range(-1.0..1.0);
        let b = rng.random_range(-1.0..1.0);
        let c = rng.random_range(-1.0..1.0);
        if a * a + b * b + c * c <= 1.0 {
            break (a, b, c);
        }
    };
    Matrix::from_rows(&[
        &[c64(c, 0.0), c64(a, -b)],
        &[c64(a, b), c64(-c, 0.0)],
    ])
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; avoids pulling in a distributions crate for one function.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn gram_schmidt(g: &Matrix) -> Option<Matrix> {
    let d = g.rows();
    let mut u = g.clone();
    for j in 0..d {
        for k in 0..j {
            let mut dot = crate::linalg::ZERO;
            for i in 0..d {
                dot += u[(i, k)].conj() * u[(i, j)];
            }
            for i in 0..d {
                let uk = u[(i, k)];
                u[(i, j)] -= uk * dot;
            }
        }
        let norm: f64 = (0..d).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        for i in 0..d {
            u[(i, j)] /= norm;
        }
    }
    Some(u)
}
