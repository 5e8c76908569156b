//! Brute-force dense-tensor reference implementations.
//!
//! Everything here works on full `d^n`-dimensional tensor products with the
//! symmetrization projector applied explicitly, so it is exponentially slow
//! and only usable for tiny `(d, n)`. The test suites compare the fast
//! occupation-number code against these references; nothing in the production
//! paths calls them.

use crate::symtensor::{enumerate_basis, sym_dim, BasisTable, MultiIndex, SymOperator, SymVector};
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// All index tuples `(i_1, ..., i_n)` in row-major order.
fn tuples(d: usize, n: u32) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * d);
        for t in &out {
            for i in 0..d {
                let mut s = t.clone();
                s.push(i);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

fn occupation(tuple: &[usize], d: usize) -> MultiIndex {
    let mut alpha = vec![0u32; d];
    for &i in tuple {
        alpha[i] += 1;
    }
    MultiIndex(alpha)
}

/// Isometric embedding of the degree-`n` symmetric sector into the full
/// tensor power: `|alpha>` has coordinate `sqrt(alpha!/n!)` at every
/// arrangement of `alpha`.
pub fn embed(v: &SymVector) -> DVector<C64> {
    let d = v.d;
    let basis = BasisTable::new(d, v.n);
    let tup = tuples(d, v.n);
    let mut out = DVector::<C64>::zeros(tup.len());
    for (flat, t) in tup.iter().enumerate() {
        let occ = occupation(t, d);
        let w = (0.5 * (occ.ln_factorial() - crate::symtensor::ln_factorial(v.n))).exp();
        out[flat] = v.coeffs[basis.position(&occ)] * w;
    }
    out
}

/// Adjoint of `embed`.
pub fn compress(x: &DVector<C64>, d: usize, n: u32) -> SymVector {
    let basis = BasisTable::new(d, n);
    let tup = tuples(d, n);
    let mut coeffs = DVector::<C64>::zeros(basis.len());
    for (flat, t) in tup.iter().enumerate() {
        let occ = occupation(t, d);
        let w = (0.5 * (occ.ln_factorial() - crate::symtensor::ln_factorial(n))).exp();
        coeffs[basis.position(&occ)] += x[flat] * w;
    }
    SymVector { d, n, coeffs }
}

/// `z^{(x)n}` as a dense tensor.
pub fn dense_power(z: &DVector<C64>, n: u32) -> DVector<C64> {
    let d = z.len();
    let tup = tuples(d, n);
    DVector::from_iterator(
        tup.len(),
        tup.iter().map(|t| t.iter().map(|&i| z[i]).product()),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut base: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(&mut base, n, &mut out);
    out
}

fn heap(a: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..k {
        heap(a, k - 1, out);
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

/// Symmetrization projector `S_n` applied to a dense tensor.
pub fn symmetrize_dense(x: &DVector<C64>, d: usize, n: u32) -> DVector<C64> {
    let tup = tuples(d, n);
    let perms = permutations(n as usize);
    let mut out = DVector::<C64>::zeros(x.len());
    let fact = perms.len() as f64;
    for (flat, t) in tup.iter().enumerate() {
        let mut acc = C64::ZERO;
        for p in &perms {
            let permuted: Vec<usize> = p.iter().map(|&j| t[j]).collect();
            let mut idx = 0usize;
            for &i in &permuted {
                idx = idx * d + i;
            }
            acc += x[idx];
        }
        out[flat] = acc / fact;
    }
    out
}

/// Dense matrix of a sector kernel on the full tensor power,
/// `embed_q . K . compress_p`.
fn dense_kernel(k: &SymOperator) -> DMatrix<C64> {
    let d = k.d;
    let rows = (d as u64).pow(k.q) as usize;
    let cols = (d as u64).pow(k.p) as usize;
    let p_basis = enumerate_basis(d, k.p);
    let mut out = DMatrix::<C64>::zeros(rows, cols);
    for (ci, _) in p_basis.iter().enumerate() {
        let mut unit = SymVector::zeros(d, k.p);
        unit.coeffs[ci] = C64::new(1.0, 0.0);
        let col_in = embed(&unit);
        let applied = k.apply(&unit);
        let col_out = embed(&applied);
        // scatter through the embedded unit column: out . e_ci^dense
        for r in 0..rows {
            for c in 0..cols {
                out[(r, c)] += col_out[r] * col_in[c].conj();
            }
        }
    }
    out
}

/// Reference for `symtensor::symmetrize_extend`: build the full tensors,
/// apply `k (x) I` slotwise, symmetrize explicitly, compress back.
pub fn dense_symmetrize_extend(k: &SymOperator, n: u32) -> SymOperator {
    let d = k.d;
    let (p, q) = (k.p, k.q);
    assert!(n >= p);
    let m = n - p + q;
    let kd = dense_kernel(k);
    let spect = (d as u64).pow(n - p) as usize;
    let in_basis = enumerate_basis(d, n);
    let mut out = DMatrix::<C64>::zeros(sym_dim(d, m), sym_dim(d, n));
    for (ci, _) in in_basis.iter().enumerate() {
        let mut unit = SymVector::zeros(d, n);
        unit.coeffs[ci] = C64::new(1.0, 0.0);
        let x = embed(&unit);
        // (k (x) I) x : first p slots through kd, the rest untouched
        let rows_q = kd.nrows();
        let cols_p = kd.ncols();
        let mut y = DVector::<C64>::zeros(rows_q * spect);
        for a in 0..cols_p {
            for s in 0..spect {
                let xv = x[a * spect + s];
                if xv == C64::ZERO {
                    continue;
                }
                for b in 0..rows_q {
                    y[b * spect + s] += kd[(b, a)] * xv;
                }
            }
        }
        let ys = symmetrize_dense(&y, d, m);
        let col = compress(&ys, d, m);
        for (ri, val) in col.coeffs.iter().enumerate() {
            out[(ri, ci)] = *val;
        }
    }
    SymOperator {
        d,
        p: n,
        q: m,
        matrix: out,
    }
}

const FD_STEP: f64 = 2e-4;

fn unit_dir(d: usize, i: usize, scale: C64) -> DVector<C64> {
    let mut e = DVector::<C64>::zeros(d);
    e[i] = scale;
    e
}

/// Central-difference Wirtinger derivative of a scalar field:
/// `d/dz_i` when `anti` is false, `d/dconj(z_i)` when true.
pub fn fd_wirtinger<F: Fn(&DVector<C64>) -> C64>(
    f: &F,
    z: &DVector<C64>,
    i: usize,
    anti: bool,
) -> C64 {
    let d = z.len();
    let h = FD_STEP;
    let ex = unit_dir(d, i, C64::new(h, 0.0));
    let ey = unit_dir(d, i, C64::new(0.0, h));
    let fx = (f(&(z + &ex)) - f(&(z - &ex))) / (2.0 * h);
    let fy = (f(&(z + &ey)) - f(&(z - &ey))) / (2.0 * h);
    if anti {
        (fx + C64::i() * fy) * 0.5
    } else {
        (fx - C64::i() * fy) * 0.5
    }
}

/// `sum over index tuples of d_z^k f1 . d_zbar^k f2 - (f1 <-> f2)` by nested
/// central differences; supports `k <= 2`.
pub fn fd_poisson<F1, F2>(f1: F1, f2: F2, k: u32, z: &DVector<C64>) -> C64
where
    F1: Fn(&DVector<C64>) -> C64 + Copy,
    F2: Fn(&DVector<C64>) -> C64 + Copy,
{
    assert!((1..=2).contains(&k), "finite-difference oracle supports k <= 2");
    let d = z.len();
    let mut acc = C64::ZERO;
    if k == 1 {
        for i in 0..d {
            let a = fd_wirtinger(&f1, z, i, false) * fd_wirtinger(&f2, z, i, true);
            let b = fd_wirtinger(&f2, z, i, false) * fd_wirtinger(&f1, z, i, true);
            acc += a - b;
        }
    } else {
        for i in 0..d {
            for j in 0..d {
                let d2_f1 = fd_wirtinger(&|w: &DVector<C64>| fd_wirtinger(&f1, w, j, false), z, i, false);
                let d2b_f2 = fd_wirtinger(&|w: &DVector<C64>| fd_wirtinger(&f2, w, j, true), z, i, true);
                let d2_f2 = fd_wirtinger(&|w: &DVector<C64>| fd_wirtinger(&f2, w, j, false), z, i, false);
                let d2b_f1 = fd_wirtinger(&|w: &DVector<C64>| fd_wirtinger(&f1, w, j, true), z, i, true);
                acc += d2_f1 * d2b_f2 - d2_f2 * d2b_f1;
            }
        }
    }
    acc
}

/// Gradient in the conjugate variable by central differences.
pub fn fd_grad_zbar<F: Fn(&DVector<C64>) -> C64>(f: F, z: &DVector<C64>) -> DVector<C64> {
    let d = z.len();
    DVector::from_iterator(d, (0..d).map(|i| fd_wirtinger(&f, z, i, true)))
}
