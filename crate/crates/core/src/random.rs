//! Seeded random states. All draws go through [`SeededRng`] so that a seed
//! reproduces the same matrices on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::operators::{ComplexMatrix, DensityMatrix, C64};

/// The portable generator behind every seeded draw in this crate.
pub type SeededRng = ChaCha20Rng;

/// Name recorded in run metadata next to the seed.
pub const RNG_NAME: &str = "ChaCha20Rng(rand_chacha 0.9).seed_from_u64";

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Vector of independent complex standard-normal entries (real part drawn
/// before imaginary part).
pub fn complex_normal_vector(rng: &mut SeededRng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

/// Normalized complex-normal pure state `|ψ⟩⟨ψ|`.
pub fn random_pure_state(rng: &mut SeededRng, dim: usize) -> DensityMatrix {
    DensityMatrix::pure(&complex_normal_vector(rng, dim))
}

/// Mixed state `G G† / Tr(G G†)` with `G` a `dim × rank` complex Ginibre
/// matrix.
pub fn random_density_matrix(rng: &mut SeededRng, dim: usize, rank: usize) -> DensityMatrix {
    let g = complex_normal_vector(rng, dim * rank);
    let m = ComplexMatrix::from_fn(dim, |i, j| (0..rank).map(|r| g[i * rank + r] * g[j * rank + r].conj()).sum());
    DensityMatrix::repair(&m).expect("Ginibre products are PSD")
}

/// Random Hermitian matrix with complex-normal entries.
pub fn random_hermitian(rng: &mut SeededRng, dim: usize) -> ComplexMatrix {
    let g = complex_normal_vector(rng, dim * dim);
    ComplexMatrix::from_vec(g).expect("square by construction").hermitian_part()
}
