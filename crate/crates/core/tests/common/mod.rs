#![allow(dead_code)]

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signid_core::linalg::{Matrix, SymmetricMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..d * d).map(|_| rng.gen_range(lo..hi)).collect();
    Matrix::new(d, d, data).unwrap()
}

/// Max real part of the spectrum via nalgebra's Schur decomposition; `None`
/// if the QR iteration does not converge.
pub fn try_spectral_abscissa(m: &Matrix) -> Option<f64> {
    let schur = Schur::try_new(to_na(m), 1e-14, 10_000)?;
    Some(
        schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
    )
}

pub fn spectral_abscissa(m: &Matrix) -> f64 {
    try_spectral_abscissa(m).expect("Schur iteration did not converge")
}

/// A random matrix with entries in (-10, 10), shifted left of the imaginary
/// axis by a random margin.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let (mut a, abscissa) = loop {
        let a = random_matrix(rng, d, -10.0, 10.0);
        if let Some(x) = try_spectral_abscissa(&a) {
            break (a, x);
        }
    };
    let shift = abscissa.max(0.0) + rng.gen_range(0.05..5.0);
    for i in 0..d {
        a.set(i, i, a.get(i, i) - shift);
    }
    a
}

/// `M Mᵀ + 0.1 I` for a random `M`.
pub fn random_pd(rng: &mut ChaCha8Rng, d: usize) -> SymmetricMatrix {
    let m = random_matrix(rng, d, -1.0, 1.0);
    let mut s = m.matmul(&m.transpose()).unwrap();
    for i in 0..d {
        s.set(i, i, s.get(i, i) + 0.1);
    }
    SymmetricMatrix::from_matrix(&s, 1e-12).unwrap()
}

pub fn random_pdd(rng: &mut ChaCha8Rng, d: usize) -> SymmetricMatrix {
    let diag: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..10.0)).collect();
    SymmetricMatrix::diagonal(&diag)
}

/// The first `n` faithful draws for a catalog structure.
pub fn faithful_draws(id: signid_core::catalog::CatalogId, n: usize, seed: u64) -> Vec<signid_core::model::Draw> {
    let g = signid_core::catalog::entry(id).graph;
    let sampler = signid_core::model::Sampler::new(&g, signid_core::model::SamplerConfig::with_seed(seed)).unwrap();
    (0..)
        .map(|i| sampler.draw(i).unwrap())
        .filter(|d| d.is_faithful())
        .take(n)
        .collect()
}
