//! Truncated bosonic Fock space over `C^d`: epsilon-scaled Wick quantization,
//! sector Hamiltonians, and the coherent / Hermite state families together
//! with their number-moment and tightness diagnostics.

use crate::error::CoreError;
use crate::symbols::PolySymbol;
use crate::symtensor::{
    enumerate_basis, ln_factorial, power_vector, sym_power, BasisTable, SymOperator, SymVector,
};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Finitely supported Fock-space vector: one `SymVector` per occupied sector.
///
/// `tail_mass` records probability discarded by truncation; states are not
/// renormalized after truncation so that expectation errors stay auditable.
#[derive(Debug, Clone)]
pub struct FockState {
    pub d: usize,
    /// Scaling parameter of the quantization the state is built for.
    pub eps: f64,
    pub sectors: BTreeMap<u32, SymVector>,
    pub tail_mass: f64,
}

impl FockState {
    pub fn vacuum(d: usize, eps: f64) -> Self {
        let mut sectors = BTreeMap::new();
        let mut v = SymVector::zeros(d, 0);
        v.coeffs[0] = C64::new(1.0, 0.0);
        sectors.insert(0, v);
        FockState {
            d,
            eps,
            sectors,
            tail_mass: 0.0,
        }
    }

    /// Mass retained in the stored sectors.
    pub fn norm_sq(&self) -> f64 {
        self.sectors.values().map(|v| v.coeffs.norm_squared()).sum()
    }

    pub fn max_sector(&self) -> u32 {
        self.sectors.keys().copied().max().unwrap_or(0)
    }
}

/// Convex mixture of pure states; positivity and unit trace hold by
/// construction.
#[derive(Debug, Clone)]
pub struct DensityState {
    pub components: Vec<(f64, FockState)>,
}

impl DensityState {
    pub fn pure(state: FockState) -> Self {
        DensityState {
            components: vec![(1.0, state)],
        }
    }

    pub fn mixture(components: Vec<(f64, FockState)>) -> Result<Self, CoreError> {
        if components.is_empty() {
            return Err(CoreError::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        if components.iter().any(|(w, _)| *w <= 0.0) {
            return Err(CoreError::InvalidParameter(
                "mixture weights must be positive".into(),
            ));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(DensityState { components })
    }

    pub fn d(&self) -> usize {
        self.components[0].1.d
    }
}

/// Finite-rank orthogonal projector on the one-particle space.
#[derive(Debug, Clone)]
pub struct Projector {
    pub matrix: DMatrix<C64>,
    pub rank: usize,
}

impl Projector {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, CoreError> {
        let herm = crate::linalg::hermiticity_defect(&matrix);
        let idem = (&matrix * &matrix - &matrix)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm > 1e-12 || idem > 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "not an orthogonal projector: hermiticity defect {herm:.2e}, idempotency defect {idem:.2e}"
            )));
        }
        let trace: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].re).sum();
        Ok(Projector {
            matrix,
            rank: trace.round() as usize,
        })
    }
}

/// Wick quantization of `b` restricted to the degree-`n` sector:
///
/// `1_{[p,inf)}(n) sqrt(n! (n+q-p)!)/(n-p)! eps^{(p+q)/2} S_{n-p+q}(K (x) I)`.
///
/// The prefactor is folded into the occupation-transfer sum, giving entries
///
/// `eps^{(p+q)/2} sum_beta K[kappa, alpha]
///  sqrt(p! q! mu! nu! / (kappa! alpha!)) / beta!`
///
/// at `mu = kappa + beta`, `nu = alpha + beta`.
pub fn wick_matrix(b: &PolySymbol, n: u32, eps: f64) -> SymOperator {
    let d = b.d();
    let (p, q) = (b.p(), b.q());
    if n < p {
        let out_deg = (n as i64 - p as i64 + q as i64).max(0) as u32;
        return SymOperator::zeros(d, n, out_deg);
    }
    let m = n - p + q;
    let scale = eps.powf(0.5 * (p + q) as f64);
    let in_basis = BasisTable::new(d, n);
    let out_basis = BasisTable::new(d, m);
    let spect = enumerate_basis(d, n - p);
    let p_basis = enumerate_basis(d, p);
    let q_basis = enumerate_basis(d, q);
    let ln_pq = 0.5 * (ln_factorial(p) + ln_factorial(q));

    let mut out = DMatrix::<C64>::zeros(out_basis.len(), in_basis.len());
    for beta in &spect {
        let ln_beta = beta.ln_factorial();
        for (ai, alpha) in p_basis.iter().enumerate() {
            let nu = alpha.add(beta);
            let col = in_basis.position(&nu);
            let ln_col = 0.5 * (nu.ln_factorial() - alpha.ln_factorial());
            for (ki, kappa) in q_basis.iter().enumerate() {
                let kval = b.kernel.matrix[(ki, ai)];
                if kval == C64::ZERO {
                    continue;
                }
                let mu = kappa.add(beta);
                let row = out_basis.position(&mu);
                let ln_row = 0.5 * (mu.ln_factorial() - kappa.ln_factorial());
                let w = (ln_pq + ln_col + ln_row - ln_beta).exp();
                out[(row, col)] += kval * (scale * w);
            }
        }
    }
    SymOperator {
        d,
        p: n,
        q: m,
        matrix: out,
    }
}

/// `Tr[rho b^Wick]`, summing sector transitions over every pure component;
/// sectors absent from a state contribute zero.
pub fn wick_expectation(rho: &DensityState, b: &PolySymbol) -> C64 {
    let (p, q) = (b.p(), b.q());
    let mut acc = C64::ZERO;
    for (w, psi) in &rho.components {
        for (&n, sec) in &psi.sectors {
            if n < p {
                continue;
            }
            let m = n - p + q;
            let Some(out_sec) = psi.sectors.get(&m) else {
                continue;
            };
            let t = wick_matrix(b, n, psi.eps);
            acc += out_sec.inner(&t.apply(sec)) * *w;
        }
    }
    acc
}

/// Sector block of `H_eps = dGamma(A) + Q^Wick`, with `dGamma(A)` realized as
/// the quantization of `<z, Az>`; hermitian, and sector-preserving since
/// `p = q` for both terms.
pub fn hamiltonian_sector(
    a: &DMatrix<C64>,
    q_sym: &PolySymbol,
    n: u32,
    eps: f64,
) -> SymOperator {
    let a_sym = PolySymbol::from_one_particle(a);
    let h = wick_matrix(&a_sym, n, eps).add(&wick_matrix(q_sym, n, eps));
    debug_assert!(h.hermiticity_defect() < 1e-10);
    h
}

/// Coherent state at `z0`, built directly from its sector expansion: sector
/// `n` has amplitude `e^{-|z0|^2/(2 eps)} (|z0|^2/eps)^{n/2} / sqrt(n!)` along
/// the unit power vector, i.e. Poisson(|z0|^2/eps) sector masses. Truncated
/// at the smallest tail below `tail_tol`; the discarded mass is recorded.
pub fn coherent_state(
    z0: &DVector<C64>,
    eps: f64,
    tail_tol: f64,
) -> Result<FockState, CoreError> {
    if tail_tol <= 0.0 {
        return Err(CoreError::InvalidParameter("tail_tol must be > 0".into()));
    }
    if eps <= 0.0 {
        return Err(CoreError::InvalidParameter("eps must be > 0".into()));
    }
    let d = z0.len();
    let norm = z0.norm();
    if norm == 0.0 {
        return Ok(FockState::vacuum(d, eps));
    }
    let mean = norm * norm / eps;

    // Poisson mass recurrence to find the truncation sector.
    let mut mass = (-mean).exp();
    let mut cum = mass;
    let mut n_max = 0u32;
    while 1.0 - cum >= tail_tol {
        n_max += 1;
        if n_max > 160 {
            return Err(CoreError::InvalidParameter(format!(
                "coherent state needs sectors beyond 160 (|z0|^2/eps = {mean:.2})"
            )));
        }
        mass *= mean / n_max as f64;
        cum += mass;
    }

    let unit = z0 / C64::new(norm, 0.0);
    let mut sectors = BTreeMap::new();
    let mut amp = (-0.5 * mean).exp();
    let mut kept = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            amp *= (mean / n as f64).sqrt();
        }
        sectors.insert(n, power_vector(&unit, n).scale(C64::new(amp, 0.0)));
        kept += amp * amp;
    }
    Ok(FockState {
        d,
        eps,
        sectors,
        tail_mass: (1.0 - kept).max(0.0),
    })
}

/// Hermite state `z^{(x)n}` (normalized) with the forced scaling
/// `eps = 1/n`; a single exactly-populated sector.
pub fn hermite_state(z: &DVector<C64>, n: u32) -> Result<FockState, CoreError> {
    if n == 0 {
        return Err(CoreError::InvalidParameter(
            "hermite state needs n >= 1".into(),
        ));
    }
    let norm = z.norm();
    if norm == 0.0 {
        return Err(CoreError::InvalidParameter(
            "hermite state needs z != 0".into(),
        ));
    }
    let unit = z / C64::new(norm, 0.0);
    let mut sectors = BTreeMap::new();
    sectors.insert(n, power_vector(&unit, n));
    Ok(FockState {
        d: z.len(),
        eps: 1.0 / n as f64,
        sectors,
        tail_mass: 0.0,
    })
}

/// `Tr[N^k rho] = sum weights sum_n (eps n)^k |psi_n|^2`.
pub fn number_moment(rho: &DensityState, k: u32) -> f64 {
    rho.components
        .iter()
        .map(|(w, psi)| {
            w * psi
                .sectors
                .iter()
                .map(|(&n, sec)| {
                    (psi.eps * n as f64).powi(k as i32) * sec.coeffs.norm_squared()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Smallest `lambda` with `Tr[N^k rho] <= lambda^k` for all `1 <= k <= k_max`.
pub fn h0_lambda(rho: &DensityState, k_max: u32) -> f64 {
    (1..=k_max)
        .map(|k| number_moment(rho, k).powf(1.0 / k as f64))
        .fold(0.0, f64::max)
}

/// Tightness defect `Tr[(1 - Gamma(P)) rho]` where `Gamma(P)` acts as
/// `P^{(x)n}` on each sector; lies in `[0, 1]`.
pub fn gamma_defect(rho: &DensityState, p: &Projector) -> f64 {
    // truncated mass counts as lost
    let mut kept = 0.0;
    for (w, psi) in &rho.components {
        for (&n, sec) in &psi.sectors {
            let pn = sym_power(&p.matrix, n);
            kept += w * (&pn * &sec.coeffs).norm_squared();
        }
    }
    (1.0 - kept).clamp(0.0, 1.0)
}

/// Sectors a state family touches, plus images under a `(p, q)` shift; used
/// to size propagator caches.
pub fn support_sectors(rho: &DensityState) -> Vec<u32> {
    let mut set = std::collections::BTreeSet::new();
    for (_, psi) in &rho.components {
        for &n in psi.sectors.keys() {
            set.insert(n);
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::sampling;
    use crate::symbols;
    use crate::symtensor::{op_norm, sym_dim};

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn wick_of_number_symbol_is_eps_n_identity() {
        for d in 1..=3usize {
            let b = PolySymbol::number(d);
            for n in 0..=5u32 {
                let w = wick_matrix(&b, n, 0.3);
                let expect = DMatrix::<C64>::identity(sym_dim(d, n), sym_dim(d, n))
                    * cx(0.3 * n as f64, 0.0);
                assert!((&w.matrix - expect).norm() < 1e-12, "d={d} n={n}");
            }
        }
    }

    #[test]
    fn wick_cutoff_below_p() {
        let mut rng = sampling::seeded(31);
        let b = PolySymbol::new(sampling::random_kernel(2, 2, 1, &mut rng));
        let w = wick_matrix(&b, 1, 0.5);
        assert!(w.matrix.norm() == 0.0);
    }

    #[test]
    fn wick_annihilation_prefactor() {
        // one mode, b(z) = z: sector n maps down with sqrt(n) sqrt(eps)
        let mut k = SymOperator::zeros(1, 1, 0);
        k.matrix[(0, 0)] = cx(1.0, 0.0);
        let b = PolySymbol::new(k);
        let eps = 0.07;
        for n in 1..=6u32 {
            let w = wick_matrix(&b, n, eps);
            let expect = (n as f64).sqrt() * eps.sqrt();
            assert!((w.matrix[(0, 0)] - cx(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn wick_matches_symmetrize_extend_with_prefactor() {
        let mut rng = sampling::seeded(33);
        for (p, q) in [(1u32, 1u32), (2, 1), (1, 2), (2, 2)] {
            let b = PolySymbol::new(sampling::random_kernel(2, p, q, &mut rng));
            for n in p..=4u32 {
                let eps = 0.21;
                let w = wick_matrix(&b, n, eps);
                let e = crate::symtensor::symmetrize_extend(&b.kernel, n).unwrap();
                let ln_pref = 0.5 * (ln_factorial(n) + ln_factorial(n - p + q))
                    - ln_factorial(n - p);
                let pref = ln_pref.exp() * eps.powf(0.5 * (p + q) as f64);
                let diff = (&w.matrix - &e.matrix * cx(pref, 0.0)).norm();
                assert!(diff < 1e-10, "p={p} q={q} n={n}: {diff}");
            }
        }
    }

    #[test]
    fn wick_matches_dense_oracle_small() {
        let mut rng = sampling::seeded(35);
        for (p, q) in [(1u32, 1u32), (2, 1), (2, 2)] {
            let b = PolySymbol::new(sampling::random_kernel(2, p, q, &mut rng));
            for n in p..=3u32 {
                let eps = 0.4;
                let w = wick_matrix(&b, n, eps);
                let dense = oracle::dense_symmetrize_extend(&b.kernel, n);
                let ln_pref = 0.5 * (ln_factorial(n) + ln_factorial(n - p + q))
                    - ln_factorial(n - p);
                let pref = ln_pref.exp() * eps.powf(0.5 * (p + q) as f64);
                let diff = (&w.matrix - &dense.matrix * cx(pref, 0.0))
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-12, "p={p} q={q} n={n}: {diff}");
            }
        }
    }

    #[test]
    fn wick_adjoint_symmetry() {
        let mut rng = sampling::seeded(37);
        for _ in 0..5 {
            let b = PolySymbol::new(sampling::random_kernel(2, 2, 1, &mut rng));
            let b_adj = b.adjoint();
            for n in 2..=5u32 {
                let m = n - b.p() + b.q();
                let fwd = wick_matrix(&b, n, 0.3);
                let bwd = wick_matrix(&b_adj, m, 0.3);
                let diff = (fwd.matrix.adjoint() - &bwd.matrix).norm();
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn wick_number_estimate() {
        // |b^Wick|_n| <= (eps max(n, n+q-p))^{(p+q)/2} |b~|; the constant is
        // monitored here, not asserted against any sharper value.
        let mut rng = sampling::seeded(39);
        let mut worst = 0.0f64;
        for (p, q) in [(1u32, 1u32), (2, 1), (1, 2), (2, 2), (2, 0)] {
            let b = PolySymbol::new(sampling::random_kernel(2, p, q, &mut rng));
            for n in p..=6u32 {
                let eps = 0.17;
                let w = wick_matrix(&b, n, eps);
                let cap = (eps * (n.max(n + q - p)) as f64).powf(0.5 * (p + q) as f64)
                    * b.norm();
                let ratio = op_norm(&w) / cap;
                worst = worst.max(ratio);
                assert!(ratio <= 1.0 + 1e-9, "p={p} q={q} n={n}: ratio {ratio}");
            }
        }
        println!("number-estimate worst ratio: {worst:.6}");
    }

    #[test]
    fn hamiltonian_sector_examples() {
        // dGamma(diag(0,1)) on sector 2 counts occupation of the second mode
        let a = DMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)]);
        let q = PolySymbol::zero(2, 2, 2);
        let eps = 0.25;
        let h = hamiltonian_sector(&a, &q, 2, eps);
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![
            cx(0.0, 0.0),
            cx(eps, 0.0),
            cx(2.0 * eps, 0.0),
        ]));
        assert!((&h.matrix - expect).norm() < 1e-13);

        // vacuum sector is the 1x1 zero
        let h0 = hamiltonian_sector(&a, &q, 0, eps);
        assert_eq!(h0.matrix.nrows(), 1);
        assert!(h0.matrix[(0, 0)].norm() < 1e-15);

        // hermiticity for a random interacting instance
        let mut rng = sampling::seeded(41);
        let a = sampling::random_hermitian(2, &mut rng);
        let q = PolySymbol::new(sampling::random_q_kernel(2, 0.7, &mut rng));
        for n in 0..=6u32 {
            let h = hamiltonian_sector(&a, &q, n, 0.1);
            assert!(h.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn sector_structure_of_pair_interaction() {
        // Q^Wick maps sector n to sector n (p = q = 2), the structural form
        // of the number commutation, for all n <= 8 and d <= 3.
        let mut rng = sampling::seeded(43);
        for d in 1..=3usize {
            let q = PolySymbol::new(sampling::random_q_kernel(d, 1.0, &mut rng));
            for n in 0..=8u32 {
                let w = wick_matrix(&q, n, 0.2);
                assert_eq!(w.p, n);
                assert_eq!(w.q, n, "pair interaction must preserve sector {n}");
                assert_eq!(w.matrix.nrows(), w.matrix.ncols());
            }
        }
    }

    #[test]
    fn coherent_state_construction() {
        // z0 = 0 is the vacuum
        let z0 = DVector::from_vec(vec![cx(0.0, 0.0), cx(0.0, 0.0)]);
        let c = coherent_state(&z0, 0.25, 1e-10).unwrap();
        assert_eq!(c.sectors.len(), 1);
        assert_eq!(c.tail_mass, 0.0);

        // |z0|^2 = 1, eps = 1/4: Poisson(4) sector masses, Tr[rho N] = 1
        let z0 = DVector::from_vec(vec![cx(0.6, 0.0), cx(0.0, 0.8)]);
        let c = coherent_state(&z0, 0.25, 1e-12).unwrap();
        let mean: f64 = 4.0;
        let mut mass = (-mean).exp();
        for n in 0..=3u32 {
            if n > 0 {
                mass *= mean / n as f64;
            }
            let got = c.sectors[&n].coeffs.norm_squared();
            assert!((got - mass).abs() < 1e-13, "n={n}");
        }
        let rho = DensityState::pure(c);
        assert!((number_moment(&rho, 1) - 1.0).abs() < 1e-9);
        // Tr[rho N^2] = |z0|^4 + eps |z0|^2
        assert!((number_moment(&rho, 2) - 1.25).abs() < 1e-9);
    }

    #[test]
    fn coherent_rejects_bad_tolerances() {
        let z0 = DVector::from_vec(vec![cx(1.0, 0.0)]);
        assert!(coherent_state(&z0, 0.25, 0.0).is_err());
        assert!(coherent_state(&z0, -1.0, 1e-10).is_err());
    }

    #[test]
    fn hermite_state_properties() {
        let z = DVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]);
        let h = hermite_state(&z, 5).unwrap();
        assert_eq!(h.sectors.len(), 1);
        assert!((h.eps - 0.2).abs() < 1e-15);
        assert_eq!(h.tail_mass, 0.0);
        let rho = DensityState::pure(h.clone());
        for k in 1..=6u32 {
            assert!((number_moment(&rho, k) - 1.0).abs() < 1e-12);
        }
        assert!(hermite_state(&z, 0).is_err());
        let zero = DVector::from_vec(vec![cx(0.0, 0.0)]);
        assert!(hermite_state(&zero, 3).is_err());

        // overlap with the matching coherent sector is the Poisson amplitude
        let n = 5u32;
        let c = coherent_state(&z, 1.0 / n as f64, 1e-12).unwrap();
        let overlap = h.sectors[&n].inner(&c.sectors[&n]);
        let mean = n as f64;
        let mass = (-mean).exp() * mean.powi(n as i32)
            / (1..=n as u64).product::<u64>() as f64;
        assert!((overlap.norm_sqr() - mass).abs() < 1e-12);
    }

    #[test]
    fn wick_expectation_on_states() {
        let mut rng = sampling::seeded(45);
        // coherent state: Wick order is exact, expectation = b(z0) up to tail
        let z0 = DVector::from_vec(vec![cx(0.5, 0.3), cx(-0.2, 0.6)]);
        let rho = DensityState::pure(coherent_state(&z0, 0.2, 1e-12).unwrap());
        for (p, q) in [(1u32, 1u32), (2, 1), (2, 2), (1, 0)] {
            let b = PolySymbol::new(sampling::random_kernel(2, p, q, &mut rng));
            let got = wick_expectation(&rho, &b);
            let want = symbols::eval(&b, &z0).unwrap();
            assert!(
                (got - want).norm() < 1e-8,
                "(p,q)=({p},{q}): {got} vs {want}"
            );
        }

        // Hermite state with a (1,1) observable: exactly <z, b z>
        let z = sampling::random_unit_vector(2, &mut rng);
        let n = 7u32;
        let rho_h = DensityState::pure(hermite_state(&z, n).unwrap());
        let b11 = PolySymbol::new(sampling::random_kernel(2, 1, 1, &mut rng));
        let got = wick_expectation(&rho_h, &b11);
        let want = symbols::eval(&b11, &z).unwrap();
        assert!((got - want).norm() < 1e-12);

        // p != q on a single sector vanishes by orthogonality
        let b21 = PolySymbol::new(sampling::random_kernel(2, 2, 1, &mut rng));
        assert_eq!(wick_expectation(&rho_h, &b21), C64::ZERO);
    }

    #[test]
    fn coherent_exactness_improves_with_tail() {
        let mut rng = sampling::seeded(47);
        let z0 = DVector::from_vec(vec![cx(0.8, 0.0), cx(0.3, -0.4)]);
        let b = PolySymbol::new(sampling::random_kernel(2, 2, 1, &mut rng));
        let want = symbols::eval(&b, &z0).unwrap();
        let mut prev = f64::INFINITY;
        for tol in [1e-4, 1e-8, 1e-12] {
            let rho = DensityState::pure(coherent_state(&z0, 0.3, tol).unwrap());
            let err = (wick_expectation(&rho, &b) - want).norm();
            assert!(err < prev * 1.5 + 1e-14);
            prev = err;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn number_moment_examples() {
        let vac = DensityState::pure(FockState::vacuum(2, 0.3));
        for k in 1..=4u32 {
            assert_eq!(number_moment(&vac, k), 0.0);
        }
        // (H0) audit: moments below lambda^k for the reported lambda
        let z0 = DVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]);
        let rho = DensityState::pure(coherent_state(&z0, 0.25, 1e-12).unwrap());
        let lam = h0_lambda(&rho, 6);
        for k in 1..=6u32 {
            assert!(number_moment(&rho, k) <= lam.powi(k as i32) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gamma_defect_examples() {
        let d = 2;
        let id = Projector::new(DMatrix::<C64>::identity(d, d)).unwrap();
        let z = DVector::from_vec(vec![cx(0.6, 0.0), cx(0.8, 0.0)]);
        let rho = DensityState::pure(coherent_state(&z, 0.5, 1e-12).unwrap());
        assert!(gamma_defect(&rho, &id) < 1e-10);

        // projector fixing z leaves a Hermite state intact
        let pz = &z * z.adjoint(); // |z><z| with |z| = 1
        let proj = Projector::new(pz).unwrap();
        let rho_h = DensityState::pure(hermite_state(&z, 6).unwrap());
        assert!(gamma_defect(&rho_h, &proj) < 1e-10);

        // projector annihilating z0 keeps only the vacuum of a coherent state
        let z_perp = DVector::from_vec(vec![cx(0.8, 0.0), cx(-0.6, 0.0)]);
        let proj_perp = Projector::new(&z_perp * z_perp.adjoint()).unwrap();
        let eps = 0.5;
        let rho_c = DensityState::pure(coherent_state(&z, eps, 1e-14).unwrap());
        let expect = 1.0 - (-z.norm_squared() / eps).exp();
        assert!((gamma_defect(&rho_c, &proj_perp) - expect).abs() < 1e-10);
    }

    #[test]
    fn projector_validation() {
        let not_proj = DMatrix::from_row_slice(2, 2, &[
            cx(1.0, 0.0), cx(0.5, 0.0),
            cx(0.5, 0.0), cx(0.2, 0.0),
        ]);
        assert!(Projector::new(not_proj).is_err());
    }

    #[test]
    fn mixture_validation() {
        let s = FockState::vacuum(1, 0.5);
        assert!(DensityState::mixture(vec![(0.4, s.clone()), (0.6, s.clone())]).is_ok());
        assert!(DensityState::mixture(vec![(0.4, s.clone()), (0.4, s.clone())]).is_err());
        assert!(DensityState::mixture(vec![]).is_err());
        assert!(DensityState::mixture(vec![(-0.2, s.clone()), (1.2, s)]).is_err());
    }
}
