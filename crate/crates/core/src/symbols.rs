//! Polynomial phase-space symbols and their bracket algebra.
//!
//! A `(p, q)`-homogeneous polynomial `b(z) = <z^(x)q, K z^(x)p>` is stored
//! through its kernel `K`. Brackets are computed symbolically at the kernel
//! level (slot contraction plus re-symmetrization, organized through monomial
//! coefficients), never by numerical differentiation; finite differences of
//! `eval` serve only as a test oracle.

use crate::error::CoreError;
use crate::linalg::HermitianExp;
use crate::symtensor::{
    enumerate_basis, ln_factorial, power_vector, sym_dim, sym_power, BasisTable, MultiIndex,
    SymOperator,
};
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// A `(p, q)`-homogeneous polynomial symbol; `b(lambda z) =
/// lambda^p conj(lambda)^q b(z)`.
#[derive(Debug, Clone)]
pub struct PolySymbol {
    pub kernel: SymOperator,
}

impl PolySymbol {
    pub fn new(kernel: SymOperator) -> Self {
        PolySymbol { kernel }
    }

    pub fn zero(d: usize, p: u32, q: u32) -> Self {
        PolySymbol {
            kernel: SymOperator::zeros(d, p, q),
        }
    }

    /// `<z, A z>` for a one-particle operator `A`.
    pub fn from_one_particle(a: &DMatrix<C64>) -> Self {
        PolySymbol {
            kernel: SymOperator {
                d: a.nrows(),
                p: 1,
                q: 1,
                matrix: a.clone(),
            },
        }
    }

    /// The mass symbol `|z|^2`.
    pub fn number(d: usize) -> Self {
        PolySymbol {
            kernel: SymOperator::identity(d, 1),
        }
    }

    pub fn d(&self) -> usize {
        self.kernel.d
    }

    pub fn p(&self) -> u32 {
        self.kernel.p
    }

    pub fn q(&self) -> u32 {
        self.kernel.q
    }

    pub fn norm(&self) -> f64 {
        crate::symtensor::op_norm(&self.kernel)
    }

    /// Symbol of the adjoint kernel; satisfies `b_adj(z) = conj(b(z))`.
    pub fn adjoint(&self) -> PolySymbol {
        PolySymbol {
            kernel: self.kernel.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> PolySymbol {
        PolySymbol {
            kernel: self.kernel.scale(s),
        }
    }

    pub fn add(&self, other: &PolySymbol) -> PolySymbol {
        PolySymbol {
            kernel: self.kernel.add(&other.kernel),
        }
    }
}

/// Exact contraction `<z^(x)q, K z^(x)p>`.
pub fn eval(b: &PolySymbol, z: &DVector<C64>) -> Result<C64, CoreError> {
    if z.len() != b.d() {
        return Err(CoreError::DimensionMismatch {
            expected: b.d(),
            got: z.len(),
        });
    }
    let zp = power_vector(z, b.p());
    let zq = power_vector(z, b.q());
    Ok(zq.inner(&b.kernel.apply(&zp)))
}

/// Monomial coefficients `B` with `b(z) = sum B[mu, nu] conj(z)^mu z^nu`,
/// related to the kernel by `B = K * sqrt(q!/mu!) sqrt(p!/nu!)`.
fn kernel_to_coeffs(b: &PolySymbol) -> DMatrix<C64> {
    reweight(&b.kernel.matrix, b.d(), b.p(), b.q(), 1.0)
}

fn coeffs_to_kernel(c: &DMatrix<C64>, d: usize, p: u32, q: u32) -> DMatrix<C64> {
    reweight(c, d, p, q, -1.0)
}

fn reweight(m: &DMatrix<C64>, d: usize, p: u32, q: u32, sign: f64) -> DMatrix<C64> {
    let rows = enumerate_basis(d, q);
    let cols = enumerate_basis(d, p);
    let mut out = m.clone();
    for (ri, mu) in rows.iter().enumerate() {
        let lr = 0.5 * (ln_factorial(q) - mu.ln_factorial());
        for (ci, nu) in cols.iter().enumerate() {
            let lc = 0.5 * (ln_factorial(p) - nu.ln_factorial());
            out[(ri, ci)] *= (sign * (lr + lc)).exp();
        }
    }
    out
}

/// Holomorphic gradient in the antiholomorphic variable: the vector `g` with
/// `g_i = d b / d conj(z_i)`; for `b = <z, Az>` this is `A z`, and for the
/// pair interaction it is the Hartree nonlinearity.
pub fn grad_zbar(b: &PolySymbol, z: &DVector<C64>) -> Result<DVector<C64>, CoreError> {
    if z.len() != b.d() {
        return Err(CoreError::DimensionMismatch {
            expected: b.d(),
            got: z.len(),
        });
    }
    let d = b.d();
    let mut g = DVector::<C64>::zeros(d);
    if b.q() == 0 {
        return Ok(g);
    }
    let coeffs = kernel_to_coeffs(b);
    let rows = enumerate_basis(d, b.q());
    let cols = enumerate_basis(d, b.p());
    let zbar = z.map(|c| c.conj());
    // monomial values z^nu per column
    let zpows: Vec<C64> = cols.iter().map(|nu| monomial(z, nu)).collect();
    for (ri, mu) in rows.iter().enumerate() {
        for i in 0..d {
            if mu.0[i] == 0 {
                continue;
            }
            let mut shifted = mu.clone();
            shifted.0[i] -= 1;
            let zbar_pow = monomial(&zbar, &shifted);
            let factor = mu.0[i] as f64;
            for (ci, _) in cols.iter().enumerate() {
                let c = coeffs[(ri, ci)];
                if c == C64::ZERO {
                    continue;
                }
                g[i] += c * factor * zbar_pow * zpows[ci];
            }
        }
    }
    Ok(g)
}

fn monomial(z: &DVector<C64>, alpha: &MultiIndex) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for (i, &a) in alpha.0.iter().enumerate() {
        if a > 0 {
            acc *= z[i].powu(a);
        }
    }
    acc
}

/// `prod_i nu_i (nu_i - 1) ... (nu_i - kappa_i + 1)`, the factor picked up by
/// `kappa`-fold differentiation of the monomial `z^nu`.
fn falling(nu: &MultiIndex, kappa: &MultiIndex) -> f64 {
    let mut acc = 1.0;
    for (&n, &k) in nu.0.iter().zip(&kappa.0) {
        for j in 0..k {
            acc *= (n - j) as f64;
        }
    }
    acc
}

/// The `k`-fold contraction `d_z^k b1 . d_zbar^k b2` as a symbol of bidegree
/// `(p1 + p2 - k, q1 + q2 - k)`.
fn derivative_pairing(b1: &PolySymbol, b2: &PolySymbol, k: u32) -> PolySymbol {
    let d = b1.d();
    debug_assert_eq!(d, b2.d());
    let (p1, q1) = (b1.p() as i64, b1.q() as i64);
    let (p2, q2) = (b2.p() as i64, b2.q() as i64);
    let pr = p1 + p2 - k as i64;
    let qr = q1 + q2 - k as i64;
    if pr < 0 || qr < 0 {
        return PolySymbol::zero(d, pr.max(0) as u32, qr.max(0) as u32);
    }
    let (pr, qr) = (pr as u32, qr as u32);
    if k > b1.p() || k > b2.q() {
        // insufficient degree on one side: the contraction vanishes
        return PolySymbol::zero(d, pr, qr);
    }

    let c1 = kernel_to_coeffs(b1);
    let c2 = kernel_to_coeffs(b2);
    let rows1 = enumerate_basis(d, b1.q());
    let cols1 = enumerate_basis(d, b1.p());
    let rows2 = enumerate_basis(d, b2.q());
    let cols2 = enumerate_basis(d, b2.p());
    let out_rows = BasisTable::new(d, qr);
    let out_cols = BasisTable::new(d, pr);
    let kappas = enumerate_basis(d, k);
    let k_fact = (1..=k as u64).product::<u64>() as f64;

    let mut out = DMatrix::<C64>::zeros(out_rows.len(), out_cols.len());
    for kappa in &kappas {
        let wk = k_fact / kappa.0.iter().map(|&a| fact_u32(a)).product::<f64>();
        for (ci1, nu1) in cols1.iter().enumerate() {
            if !kappa.le(nu1) {
                continue;
            }
            let f1 = falling(nu1, kappa);
            let nu1k = nu1.sub(kappa);
            for (ri1, mu1) in rows1.iter().enumerate() {
                let v1 = c1[(ri1, ci1)];
                if v1 == C64::ZERO {
                    continue;
                }
                for (ri2, mu2) in rows2.iter().enumerate() {
                    if !kappa.le(mu2) {
                        continue;
                    }
                    let f2 = falling(mu2, kappa);
                    let mu2k = mu2.sub(kappa);
                    let row = out_rows.position(&mu1.add(&mu2k));
                    for (ci2, nu2) in cols2.iter().enumerate() {
                        let v2 = c2[(ri2, ci2)];
                        if v2 == C64::ZERO {
                            continue;
                        }
                        let col = out_cols.position(&nu1k.add(nu2));
                        out[(row, col)] += v1 * v2 * (wk * f1 * f2);
                    }
                }
            }
        }
    }
    let kernel = coeffs_to_kernel(&out, d, pr, qr);
    PolySymbol {
        kernel: SymOperator {
            d,
            p: pr,
            q: qr,
            matrix: kernel,
        },
    }
}

fn fact_u32(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// Multiple Poisson bracket
/// `{b1, b2}^(k) = d_z^k b1 . d_zbar^k b2 - d_z^k b2 . d_zbar^k b1`,
/// of bidegree `(p1 + p2 - k, q1 + q2 - k)`; degenerate degrees give the
/// zero symbol.
pub fn poisson(b1: &PolySymbol, b2: &PolySymbol, k: u32) -> PolySymbol {
    let fwd = derivative_pairing(b1, b2, k);
    let bwd = derivative_pairing(b2, b1, k);
    fwd.add(&bwd.scale(C64::new(-1.0, 0.0)))
}

/// Free evolution `b_t = b . e^{-itA}`: the kernel is conjugated by the
/// sector powers of the one-particle propagator, so that
/// `eval(b_t, z) = eval(b, e^{-itA} z)` and `b_{t+s} = (b_t)_s`.
pub fn free_evolve(b: &PolySymbol, a: &HermitianExp, t: f64) -> PolySymbol {
    if t == 0.0 {
        return b.clone();
    }
    let u_fwd = a.exp(t); // e^{itA}
    let u_bwd = a.exp(-t); // e^{-itA}
    let uq = sym_power(&u_fwd, b.q());
    let up = sym_power(&u_bwd, b.p());
    PolySymbol {
        kernel: SymOperator {
            d: b.d(),
            p: b.p(),
            q: b.q(),
            matrix: uq * &b.kernel.matrix * up,
        },
    }
}

/// Iterated bracket `C^(m)_r(t_m, ..., t_1, t)` built from a pair symbol `Q`
/// and an observable `b`:
///
/// `(1/2^r) sum over gamma in {1,2}^m with r twos of
///  {Q_{t_m}, ... {Q_{t_1}, b_t}^(gamma_1) ... }^(gamma_m)`,
///
/// of bidegree `(p + m - r, q + m - r)`; `m = 0` returns `b_t`.
/// `inner_times` lists `t_1, ..., t_m`.
pub fn c_mr(
    q_sym: &PolySymbol,
    b: &PolySymbol,
    a: &HermitianExp,
    inner_times: &[f64],
    t: f64,
    r: u32,
) -> Result<PolySymbol, CoreError> {
    let m = inner_times.len() as u32;
    if r > m {
        return Err(CoreError::InvalidParameter(format!(
            "c_mr requires r <= m, got r={r}, m={m}"
        )));
    }
    let b_t = free_evolve(b, a, t);
    if m == 0 {
        return Ok(b_t);
    }
    let q_evolved: Vec<PolySymbol> = inner_times
        .iter()
        .map(|&ti| free_evolve(q_sym, a, ti))
        .collect();

    let mut acc = PolySymbol::zero(b.d(), b.p() + m - r, b.q() + m - r);
    for_each_combination(m as usize, r as usize, |two_positions| {
        let mut c = b_t.clone();
        for (i, q_t) in q_evolved.iter().enumerate() {
            let k = if two_positions[i] { 2 } else { 1 };
            c = poisson(q_t, &c, k);
        }
        debug_assert_eq!((c.p(), c.q()), (b.p() + m - r, b.q() + m - r));
        acc = acc.add(&c);
    });
    Ok(acc.scale(C64::new(0.5f64.powi(r as i32), 0.0)))
}

/// Visit every subset of size `r` of `{0, ..., m-1}` as a boolean mask, in
/// lexicographic order of the selected positions.
fn for_each_combination<F: FnMut(&[bool])>(m: usize, r: usize, mut f: F) {
    let mut mask = vec![false; m];
    fn rec<F: FnMut(&[bool])>(mask: &mut Vec<bool>, start: usize, left: usize, f: &mut F) {
        if left == 0 {
            f(mask);
            return;
        }
        let m = mask.len();
        for i in start..=(m - left) {
            mask[i] = true;
            rec(mask, i + 1, left - 1, f);
            mask[i] = false;
        }
    }
    rec(&mut mask, 0, r, &mut f);
}

/// Operator-norm bound for the iterated bracket kernel:
///
/// `|C_r^(m)~| <= 2^(2m-r) C(m,r) (P+m-r)^(2r) (P+m-r-1)!/(P-1)! |Q|^m |b|`
///
/// with `P = max(p, q)`. When every bracket is a second bracket (`r = m`)
/// the sharper iterated second-bracket bound
/// `[p(p-1) + q(q-1)]^m |Q|^m |b|` applies and the minimum is returned.
pub fn bracket_norm_bound(p: u32, q: u32, m: u32, r: u32, norm_q: f64, norm_b: f64) -> f64 {
    assert!(r <= m);
    let pp = p.max(q);
    if pp == 0 {
        // constant symbols have vanishing brackets
        return if m == 0 { norm_b } else { 0.0 };
    }
    let mut general = 2f64.powi((2 * m - r) as i32) * binomial(m, r) * norm_b;
    general *= ((pp + m - r) as f64).powi(2 * r as i32);
    for j in pp..(pp + m - r) {
        general *= j as f64;
    }
    general *= norm_q.powi(m as i32);
    if r == m && m >= 1 {
        let base = (p * p.saturating_sub(1) + q * q.saturating_sub(1)) as f64;
        let iterated = base.powi(m as i32) * norm_q.powi(m as i32) * norm_b;
        return general.min(iterated);
    }
    general
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Finite sum of symbols with pairwise-distinct bidegrees.
#[derive(Debug, Clone)]
pub struct PolySum {
    terms: Vec<PolySymbol>,
}

impl PolySum {
    /// Merge terms of equal bidegree by kernel addition.
    pub fn new(terms: Vec<PolySymbol>) -> Self {
        let mut merged: Vec<PolySymbol> = Vec::new();
        for t in terms {
            if let Some(existing) = merged
                .iter_mut()
                .find(|e| e.p() == t.p() && e.q() == t.q())
            {
                *existing = existing.add(&t);
            } else {
                merged.push(t);
            }
        }
        PolySum { terms: merged }
    }

    pub fn terms(&self) -> &[PolySymbol] {
        &self.terms
    }

    pub fn eval(&self, z: &DVector<C64>) -> Result<C64, CoreError> {
        let mut acc = C64::ZERO;
        for t in &self.terms {
            acc += eval(t, z)?;
        }
        Ok(acc)
    }

    pub fn free_evolve(&self, a: &HermitianExp, t: f64) -> PolySum {
        PolySum {
            terms: self.terms.iter().map(|b| free_evolve(b, a, t)).collect(),
        }
    }
}

/// Basis of elementary-kernel symbols with `p, q <= max_degree` (the `(0,0)`
/// constant omitted); spans all moments tested in the convergence studies.
pub fn elementary_dictionary(d: usize, max_degree: u32) -> Vec<(String, PolySymbol)> {
    let mut out = Vec::new();
    for p in 0..=max_degree {
        for q in 0..=max_degree {
            if p == 0 && q == 0 {
                continue;
            }
            for row in 0..sym_dim(d, q) {
                for col in 0..sym_dim(d, p) {
                    let mut k = SymOperator::zeros(d, p, q);
                    k.matrix[(row, col)] = C64::new(1.0, 0.0);
                    out.push((format!("e{p}{q}_{row}{col}"), PolySymbol::new(k)));
                }
            }
        }
    }
    out
}
