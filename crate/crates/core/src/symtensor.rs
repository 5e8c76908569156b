//! Symmetric tensor algebra over `C^d` in the occupation-number basis.
//!
//! The sector of degree `n` is spanned by the orthonormal vectors `|alpha>`
//! indexed by multi-indices `alpha` with `|alpha| = n`. All combinatorial
//! weights (the square roots of multinomials relating `|alpha>` to raw tensor
//! products) are carried in coefficients, so memory is `C(n+d-1, d-1)` per
//! sector instead of `d^n`.

use crate::error::CoreError;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Occupation numbers of the `d` modes; indexes one basis vector of a sector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total particle number `n = sum alpha_i`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise difference; caller must ensure `other <= self`.
    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `ln(alpha!)` summed over components.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&a| ln_factorial(a)).sum()
    }
}

/// `ln(n!)` by direct summation; exact enough for double-precision weights.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

/// Number of multi-indices of degree `n` in `d` variables, `C(n+d-1, d-1)`.
pub fn sym_dim(d: usize, n: u32) -> usize {
    debug_assert!(d >= 1);
    let mut acc = 1usize;
    for j in 1..d {
        acc = acc * (n as usize + j) / j;
    }
    acc
}

/// Basis of the degree-`n` sector in lexicographic-descending order.
///
/// The order is part of the format: serialized kernels and states index into
/// it, so it must never change.
pub fn enumerate_basis(d: usize, n: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(sym_dim(d, n));
    let mut current = vec![0u32; d];
    fill(&mut out, &mut current, 0, n, d);
    debug_assert_eq!(out.len(), sym_dim(d, n));
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, rest: u32, d: usize) {
    if pos == d - 1 {
        current[pos] = rest;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=rest).rev() {
        current[pos] = k;
        fill(out, current, pos + 1, rest - k, d);
    }
}

/// Basis list plus reverse lookup for one `(d, n)` sector.
pub struct BasisTable {
    pub list: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

impl BasisTable {
    pub fn new(d: usize, n: u32) -> Self {
        let list = enumerate_basis(d, n);
        let index = list
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        BasisTable { list, index }
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn position(&self, m: &MultiIndex) -> usize {
        self.index[m]
    }
}

/// Element of the degree-`n` sector, coefficients in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymVector {
    pub d: usize,
    pub n: u32,
    pub coeffs: DVector<C64>,
}

impl SymVector {
    pub fn zeros(d: usize, n: u32) -> Self {
        SymVector {
            d,
            n,
            coeffs: DVector::zeros(sym_dim(d, n)),
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &SymVector) -> C64 {
        debug_assert_eq!((self.d, self.n), (other.d, other.n));
        self.coeffs.dotc(&other.coeffs)
    }

    pub fn scale(&self, s: C64) -> SymVector {
        SymVector {
            d: self.d,
            n: self.n,
            coeffs: &self.coeffs * s,
        }
    }
}

/// Linear map between sectors: degree `p` into degree `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOperator {
    pub d: usize,
    pub p: u32,
    pub q: u32,
    /// Shape `sym_dim(d, q) x sym_dim(d, p)`.
    pub matrix: DMatrix<C64>,
}

impl SymOperator {
    pub fn zeros(d: usize, p: u32, q: u32) -> Self {
        SymOperator {
            d,
            p,
            q,
            matrix: DMatrix::zeros(sym_dim(d, q), sym_dim(d, p)),
        }
    }

    pub fn identity(d: usize, n: u32) -> Self {
        let dim = sym_dim(d, n);
        SymOperator {
            d,
            p: n,
            q: n,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_matrix(d: usize, p: u32, q: u32, matrix: DMatrix<C64>) -> Result<Self, CoreError> {
        if matrix.nrows() != sym_dim(d, q) || matrix.ncols() != sym_dim(d, p) {
            return Err(CoreError::DegreeMismatch {
                context: "SymOperator::from_matrix",
                expected: sym_dim(d, q) * sym_dim(d, p),
                got: matrix.nrows() * matrix.ncols(),
            });
        }
        Ok(SymOperator { d, p, q, matrix })
    }

    /// Adjoint map, degree `q` into degree `p`.
    pub fn adjoint(&self) -> SymOperator {
        SymOperator {
            d: self.d,
            p: self.q,
            q: self.p,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn apply(&self, v: &SymVector) -> SymVector {
        debug_assert_eq!(v.n, self.p);
        SymVector {
            d: self.d,
            n: self.q,
            coeffs: &self.matrix * &v.coeffs,
        }
    }

    pub fn scale(&self, s: C64) -> SymOperator {
        SymOperator {
            d: self.d,
            p: self.p,
            q: self.q,
            matrix: &self.matrix * s,
        }
    }

    pub fn add(&self, other: &SymOperator) -> SymOperator {
        debug_assert_eq!((self.p, self.q), (other.p, other.q));
        SymOperator {
            d: self.d,
            p: self.p,
            q: self.q,
            matrix: &self.matrix + &other.matrix,
        }
    }

    /// Hermiticity defect `max |M - M*|` for square operators.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.p != self.q {
            return f64::INFINITY;
        }
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Largest singular value.
pub fn op_norm(k: &SymOperator) -> f64 {
    if k.matrix.is_empty() {
        return 0.0;
    }
    k.matrix
        .clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |a, &s| a.max(s))
}

/// The vector `z^{(x)n}` with coefficient `sqrt(n!/alpha!) prod z_i^alpha_i`
/// at `|alpha>`; its norm is `|z|^n`.
pub fn power_vector(z: &DVector<C64>, n: u32) -> SymVector {
    let d = z.len();
    let basis = enumerate_basis(d, n);
    let coeffs = DVector::from_iterator(
        basis.len(),
        basis.iter().map(|alpha| {
            let ln_mult = ln_factorial(n) - alpha.ln_factorial();
            let w = (0.5 * ln_mult).exp();
            let mut m = C64::new(w, 0.0);
            for (i, &a) in alpha.0.iter().enumerate() {
                m *= z[i].powu(a);
            }
            m
        }),
    );
    SymVector { d, n, coeffs }
}

/// Compression to symmetric subspaces of `S_{n-p+q} (k (x) I)` acting on the
/// degree-`n` sector; the symmetrized extension entering Wick quantization.
///
/// Matrix elements are occupation-transfer sums: for every split of the input
/// occupation `nu = alpha + beta` with `|alpha| = p` the operator moves
/// `alpha` through `k` while the `beta` spectators pass unchanged,
///
/// `E[kappa+beta, alpha+beta] += K[kappa, alpha] * w(alpha, kappa, beta)`
///
/// with the weight
/// `w = sqrt(p! q! ((n-p)!)^2 (alpha+beta)! (kappa+beta)! / (alpha! kappa! (beta!)^2 n! m!))`.
pub fn symmetrize_extend(k: &SymOperator, n: u32) -> Result<SymOperator, CoreError> {
    if n < k.p {
        return Err(CoreError::DegreeMismatch {
            context: "symmetrize_extend",
            expected: k.p as usize,
            got: n as usize,
        });
    }
    let d = k.d;
    let (p, q) = (k.p, k.q);
    let m = n - p + q;

    let in_basis = BasisTable::new(d, n);
    let out_basis = BasisTable::new(d, m);
    let spect = enumerate_basis(d, n - p);
    let p_basis = enumerate_basis(d, p);
    let q_basis = enumerate_basis(d, q);

    let ln_fixed = 0.5 * (ln_factorial(p) + ln_factorial(q)) + ln_factorial(n - p)
        - 0.5 * (ln_factorial(n) + ln_factorial(m));

    let mut out = DMatrix::<C64>::zeros(out_basis.len(), in_basis.len());
    for beta in &spect {
        let ln_beta = beta.ln_factorial();
        for (ai, alpha) in p_basis.iter().enumerate() {
            let nu = alpha.add(beta);
            let col = in_basis.position(&nu);
            let ln_in = 0.5 * nu.ln_factorial() - 0.5 * alpha.ln_factorial() - 0.5 * ln_beta;
            for (ki, kappa) in q_basis.iter().enumerate() {
                let kval = k.matrix[(ki, ai)];
                if kval == C64::ZERO {
                    continue;
                }
                let mu = kappa.add(beta);
                let row = out_basis.position(&mu);
                let ln_out =
                    0.5 * mu.ln_factorial() - 0.5 * kappa.ln_factorial() - 0.5 * ln_beta;
                let w = (ln_fixed + ln_in + ln_out).exp();
                out[(row, col)] += kval * w;
            }
        }
    }
    Ok(SymOperator {
        d,
        p: n,
        q: m,
        matrix: out,
    })
}

/// Matrix of `U^{(v)n}`, the restriction of `U (x) ... (x) U` to the
/// degree-`n` sector; satisfies `U^{(v)n} z^{(x)n} = (Uz)^{(x)n}`.
pub fn sym_power(u: &DMatrix<C64>, n: u32) -> DMatrix<C64> {
    let d = u.nrows();
    debug_assert_eq!(d, u.ncols());
    if n == 0 {
        return DMatrix::identity(1, 1);
    }
    let mut prev = u.clone();
    let mut prev_basis = BasisTable::new(d, 1);
    for level in 2..=n {
        let basis = BasisTable::new(d, level);
        let mut next = DMatrix::<C64>::zeros(basis.len(), basis.len());
        for (ci, nu) in basis.list.iter().enumerate() {
            for (j, &nu_j) in nu.0.iter().enumerate() {
                if nu_j == 0 {
                    continue;
                }
                let mut low = nu.clone();
                low.0[j] -= 1;
                let low_pos = prev_basis.position(&low);
                let wj = (nu_j as f64 / level as f64).sqrt();
                for (ri, mu) in basis.list.iter().enumerate() {
                    for (i, &mu_i) in mu.0.iter().enumerate() {
                        if mu_i == 0 {
                            continue;
                        }
                        let uij = u[(i, j)];
                        if uij == C64::ZERO {
                            continue;
                        }
                        let mut high = mu.clone();
                        high.0[i] -= 1;
                        let wi = (mu_i as f64 / level as f64).sqrt();
                        next[(ri, ci)] +=
                            uij * wi * wj * prev[(prev_basis.position(&high), low_pos)];
                    }
                }
            }
        }
        prev = next;
        prev_basis = basis;
    }
    prev
}
