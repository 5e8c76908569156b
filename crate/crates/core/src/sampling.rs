//! Seeded random instances for audits and tests.
//!
//! All randomness flows through `ChaCha8` seeded from a `u64`, and floats are
//! derived from the top 53 bits of each output word, so every draw is
//! bit-reproducible across platforms and toolchain versions.

use crate::symtensor::{sym_dim, SymOperator};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)` from the top 53 bits of one word.
pub fn uniform(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform in `[-1, 1)`.
pub fn symmetric_uniform(rng: &mut Rng) -> f64 {
    2.0 * uniform(rng) - 1.0
}

pub fn complex_uniform(rng: &mut Rng) -> C64 {
    // Re before Im; the draw order is part of the reproducibility contract.
    let re = symmetric_uniform(rng);
    let im = symmetric_uniform(rng);
    C64::new(re, im)
}

pub fn random_vector(d: usize, rng: &mut Rng) -> DVector<C64> {
    DVector::from_iterator(d, (0..d).map(|_| complex_uniform(rng)))
}

pub fn random_unit_vector(d: usize, rng: &mut Rng) -> DVector<C64> {
    loop {
        let v = random_vector(d, rng);
        let n = v.norm();
        if n > 1e-3 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Dense kernel of a `(p, q)` symbol with entries uniform in the unit square.
/// Entries are drawn row-major.
pub fn random_kernel(d: usize, p: u32, q: u32, rng: &mut Rng) -> SymOperator {
    let rows = sym_dim(d, q);
    let cols = sym_dim(d, p);
    let mut m = DMatrix::<C64>::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = complex_uniform(rng);
        }
    }
    SymOperator { d, p, q, matrix: m }
}

/// Random hermitian `d x d` matrix, `(M + M*)/2` of a uniform draw.
pub fn random_hermitian(d: usize, rng: &mut Rng) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            m[(r, c)] = complex_uniform(rng);
        }
    }
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}

/// Random self-adjoint pair-interaction kernel on the degree-2 sector,
/// rescaled so that its operator norm equals `target_norm`.
pub fn random_q_kernel(d: usize, target_norm: f64, rng: &mut Rng) -> SymOperator {
    let dim = sym_dim(d, 2);
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] = complex_uniform(rng);
        }
    }
    let adj = m.adjoint();
    let herm = (m + adj) * C64::new(0.5, 0.0);
    let k = SymOperator {
        d,
        p: 2,
        q: 2,
        matrix: herm,
    };
    let norm = crate::symtensor::op_norm(&k);
    if norm == 0.0 {
        return k;
    }
    k.scale(C64::new(target_norm / norm, 0.0))
}
