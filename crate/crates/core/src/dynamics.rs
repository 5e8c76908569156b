//! Both sides of the mean-field convergence statement: exact sector-wise
//! Heisenberg dynamics of Wick observables, the Hartree flow in the
//! interaction picture, and the iterated-bracket Dyson series with its
//! convergence envelopes and long-time slicing.

use crate::error::CoreError;
use crate::fock::{
    hamiltonian_sector, support_sectors, wick_expectation, DensityState, FockState,
};
use crate::linalg::{check_hermitian, HermitianExp};
use crate::quadrature::simplex_quadrature;
use crate::symbols::{bracket_norm_bound, c_mr, eval, free_evolve, grad_zbar, PolySymbol};
use crate::symtensor::SymOperator;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Outcome of one Hartree flow evaluation.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub z_t: DVector<C64>,
    /// `|h(z_t) - h(z_0)|` for the energy `h(z) = <z, Az> + Q(z)`.
    pub energy_drift: f64,
    /// `||z_t| - |z_0||`.
    pub norm_drift: f64,
    pub steps: usize,
}

/// Dyson-series study at one phase-space point.
///
/// `partial_sums[m]` accumulates orders `0..=m`. The envelopes majorize the
/// expansion: `env_a[m]` dominates the `m`-th term over states with
/// `|z|^2 <= lambda`, `env_b_unit_eps[m]` is the quantum half-bracket
/// envelope per unit epsilon, and `env_c[m]` is the plain norm integral of
/// the `m`-th iterated bracket. `tail_a` bounds the sum of `env_a` beyond
/// the computed orders via the geometric majorant (infinite when `|t| >= t0`).
#[derive(Debug, Clone)]
pub struct SeriesReport {
    pub partial_sums: Vec<C64>,
    pub terms: Vec<C64>,
    pub env_a: Vec<f64>,
    pub env_b_unit_eps: Vec<f64>,
    pub env_c: Vec<f64>,
    pub tail_a: f64,
    pub t0: f64,
    pub converged: bool,
}

/// Envelope triple for a concrete scaling parameter.
#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub tail_a: f64,
}

/// Convergence radius `T0 = (2^3 lambda |Q~|)^{-1}`; unbounded when the
/// interaction or the moment bound vanishes.
pub fn radius_t0(lambda: f64, q_norm: f64) -> f64 {
    let denom = 8.0 * lambda * q_norm;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / denom
    }
}

// ---------------------------------------------------------------------------
// quantum side
// ---------------------------------------------------------------------------

/// Per-sector eigendecompositions of `H_eps` for one `(A, Q, eps)` triple.
///
/// Built once, then read concurrently; propagation for every time reuses the
/// same decompositions.
pub struct SectorPropagator {
    pub eps: f64,
    eigs: BTreeMap<u32, HermitianExp>,
}

impl SectorPropagator {
    pub fn new(
        a: &DMatrix<C64>,
        q_sym: &PolySymbol,
        eps: f64,
        sectors: impl IntoIterator<Item = u32>,
    ) -> Result<Self, CoreError> {
        check_hermitian(a, "SectorPropagator A", 1e-12)?;
        check_hermitian(&q_sym.kernel.matrix, "SectorPropagator Q kernel", 1e-12)?;
        if eps <= 0.0 {
            return Err(CoreError::InvalidParameter("eps must be > 0".into()));
        }
        let mut eigs = BTreeMap::new();
        for n in sectors {
            eigs.entry(n)
                .or_insert_with(|| HermitianExp::new(&hamiltonian_sector(a, q_sym, n, eps).matrix));
        }
        Ok(SectorPropagator { eps, eigs })
    }

    /// `e^{-i(t/eps) H} psi`, sector by sector; weights and tail mass are
    /// untouched. Sectors must have been listed at construction.
    pub fn apply(&self, psi: &FockState, t: f64) -> FockState {
        let theta = -t / self.eps;
        let mut out = psi.clone();
        for (n, sec) in out.sectors.iter_mut() {
            let he = self
                .eigs
                .get(n)
                .unwrap_or_else(|| panic!("sector {n} missing from propagator"));
            sec.coeffs = he.exp_apply(theta, &sec.coeffs);
        }
        out
    }

    pub fn apply_density(&self, rho: &DensityState, t: f64) -> DensityState {
        DensityState {
            components: rho
                .components
                .iter()
                .map(|(w, psi)| (*w, self.apply(psi, t)))
                .collect(),
        }
    }
}

/// Exact quantum propagation `rho -> U_eps(t) rho U_eps(t)^*` of a finitely
/// supported density state; sector truncation is exact because the dynamics
/// preserves particle number.
pub fn propagate_quantum(
    rho: &DensityState,
    a: &DMatrix<C64>,
    q_sym: &PolySymbol,
    t: f64,
) -> Result<DensityState, CoreError> {
    let eps = rho.components[0].1.eps;
    let prop = SectorPropagator::new(a, q_sym, eps, support_sectors(rho))?;
    Ok(prop.apply_density(rho, t))
}

/// `Tr[rho U(t)^* b^Wick U(t)]`, the quantum side of the convergence
/// statement.
pub fn heisenberg_expectation(
    rho: &DensityState,
    b: &PolySymbol,
    a: &DMatrix<C64>,
    q_sym: &PolySymbol,
    t: f64,
) -> Result<C64, CoreError> {
    let evolved = propagate_quantum(rho, a, q_sym, t)?;
    Ok(wick_expectation(&evolved, b))
}

// ---------------------------------------------------------------------------
// Hartree flow
// ---------------------------------------------------------------------------

/// The classical system `i dz/dt = Az + grad_zbar Q(z)`, integrated in the
/// interaction picture `w_t = e^{itA} z_t` where the stiff linear part drops
/// out exactly: `dw/dt = -i e^{itA} grad_zbar Q(e^{-itA} w)`.
pub struct HartreeSystem {
    pub a: DMatrix<C64>,
    pub q: PolySymbol,
    a_exp: HermitianExp,
}

impl HartreeSystem {
    pub fn new(a: &DMatrix<C64>, q: &PolySymbol) -> Result<Self, CoreError> {
        check_hermitian(a, "HartreeSystem A", 1e-12)?;
        check_hermitian(&q.kernel.matrix, "HartreeSystem Q kernel", 1e-12)?;
        Ok(HartreeSystem {
            a: a.clone(),
            q: q.clone(),
            a_exp: HermitianExp::new(a),
        })
    }

    /// Energy `h(z) = <z, Az> + Q(z)`; real for hermitian data.
    pub fn energy(&self, z: &DVector<C64>) -> f64 {
        let lin = z.dotc(&(&self.a * z)).re;
        let quart = eval(&self.q, z).map(|c| c.re).unwrap_or(0.0);
        lin + quart
    }

    fn interaction_rhs(&self, t: f64, w: &DVector<C64>) -> DVector<C64> {
        let z = self.a_exp.exp_apply(-t, w);
        let g = grad_zbar(&self.q, &z).expect("dimension checked at construction");
        let back = self.a_exp.exp_apply(t, &g);
        back * C64::new(0.0, -1.0)
    }

    /// Integrate to time `t` with the embedded Dormand-Prince 5(4) pair at
    /// relative tolerance `ode_tol`.
    pub fn flow(&self, z0: &DVector<C64>, t: f64, ode_tol: f64) -> Result<FlowResult, CoreError> {
        if ode_tol <= 0.0 {
            return Err(CoreError::InvalidParameter("ode_tol must be > 0".into()));
        }
        if t == 0.0 {
            return Ok(FlowResult {
                z_t: z0.clone(),
                energy_drift: 0.0,
                norm_drift: 0.0,
                steps: 0,
            });
        }
        let (w_t, steps) = dopri5(
            |s, w| self.interaction_rhs(s, w),
            z0.clone(),
            0.0,
            t,
            ode_tol,
            ode_tol * 1e-3,
        )?;
        let z_t = self.a_exp.exp_apply(-t, &w_t);
        Ok(FlowResult {
            energy_drift: (self.energy(&z_t) - self.energy(z0)).abs(),
            norm_drift: (z_t.norm() - z0.norm()).abs(),
            z_t,
            steps,
        })
    }

    /// Long-time evolution composed from slices shorter than the Dyson
    /// radius, `F_{t} = F_{slice} o ... o F_{slice} o F_{rest}`.
    pub fn flow_sliced(
        &self,
        z0: &DVector<C64>,
        t: f64,
        slice: f64,
        ode_tol: f64,
    ) -> Result<FlowResult, CoreError> {
        let t0 = radius_t0(z0.norm_squared(), self.q.norm());
        if !(slice > 0.0 && slice < t0) {
            return Err(CoreError::InvalidParameter(format!(
                "slice must lie in (0, T0) = (0, {t0}), got {slice}"
            )));
        }
        // equal legs no longer than `slice`; avoids a degenerate last leg
        let legs = ((t.abs() / slice).ceil() as usize).max(1);
        let dt = t / legs as f64;
        let mut z = z0.clone();
        let mut steps = 0;
        for _ in 0..legs {
            let leg = self.flow(&z, dt, ode_tol)?;
            z = leg.z_t;
            steps += leg.steps;
        }
        Ok(FlowResult {
            energy_drift: (self.energy(&z) - self.energy(z0)).abs(),
            norm_drift: (z.norm() - z0.norm()).abs(),
            z_t: z,
            steps,
        })
    }
}

/// One-call Hartree flow.
pub fn hartree_flow(
    z0: &DVector<C64>,
    a: &DMatrix<C64>,
    q: &PolySymbol,
    t: f64,
    ode_tol: f64,
) -> Result<FlowResult, CoreError> {
    HartreeSystem::new(a, q)?.flow(z0, t, ode_tol)
}

/// Sliced variant of [`hartree_flow`].
pub fn flow_sliced(
    z0: &DVector<C64>,
    a: &DMatrix<C64>,
    q: &PolySymbol,
    t: f64,
    slice: f64,
    ode_tol: f64,
) -> Result<FlowResult, CoreError> {
    HartreeSystem::new(a, q)?.flow_sliced(z0, t, slice, ode_tol)
}

/// Embedded Dormand-Prince 5(4) with standard step-size control.
fn dopri5<F>(
    f: F,
    y0: DVector<C64>,
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<(DVector<C64>, usize), CoreError>
where
    F: Fn(f64, &DVector<C64>) -> DVector<C64>,
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let span = t1 - t0;
    if span.abs() < 1e-14 * (1.0 + t0.abs()) {
        return Ok((y0, 0));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 64.0;
    let mut steps = 0usize;
    let max_steps = 5_000_000usize;

    let mut k: Vec<DVector<C64>> = Vec::with_capacity(7);
    while (t - t1) * dir < 0.0 {
        if steps > max_steps {
            return Err(CoreError::InvalidParameter(
                "ODE step budget exhausted".into(),
            ));
        }
        if h.abs() < 1e-15 * (1.0 + t.abs()) {
            return Err(CoreError::StepSizeUnderflow { t, step: h });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        k.clear();
        k.push(f(t, &y));
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let aij = A[stage][j];
                if aij != 0.0 {
                    ys += kj * C64::new(aij * h, 0.0);
                }
            }
            k.push(f(t + C[stage] * h, &ys));
        }
        // 5th-order solution: the last stage used the b-row of A
        let mut y5 = y.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            let bj = A[5][j];
            if bj != 0.0 {
                y5 += kj * C64::new(bj * h, 0.0);
            }
        }
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if B4[j] != 0.0 {
                y4 += kj * C64::new(B4[j] * h, 0.0);
            }
        }
        let mut err_acc = 0.0;
        for i in 0..y.len() {
            let sc = atol + rtol * y[i].norm().max(y5[i].norm());
            let e = (y5[i] - y4[i]).norm() / sc;
            err_acc += e * e;
        }
        let err = (err_acc / y.len() as f64).sqrt();
        if err <= 1.0 {
            t += h;
            y = y5;
            steps += 1;
        }
        let scale = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= scale;
    }
    Ok((y, steps))
}

// ---------------------------------------------------------------------------
// Dyson series
// ---------------------------------------------------------------------------

/// Gauss-Legendre order for the iterated simplex integrals.
pub const DEFAULT_QUAD_ORDER: usize = 10;

/// Orders beyond this use the bracket norm bound instead of exact kernels
/// when the free generator does not vanish.
pub const MAX_QUADRATURE_ORDER_M: usize = 3;

/// Hard cap on series orders in the free-collapse regime.
pub const MAX_COLLAPSE_ORDER_M: usize = 25;

fn a_is_zero(a: &DMatrix<C64>) -> bool {
    a.iter().all(|c| c.norm() < 1e-15)
}

/// Simplex integral of the order-`m` iterated bracket, taken at the kernel
/// level (quantization and evaluation are linear in the kernel, so one
/// integrated symbol serves both sides of the comparison).
///
/// With a vanishing free generator the integrand is time-independent and the
/// integral collapses exactly to `t^m/m!` times the nested bracket.
pub fn integrated_c0m(
    b: &PolySymbol,
    q_sym: &PolySymbol,
    a: &DMatrix<C64>,
    t: f64,
    m: usize,
    quad_order: usize,
) -> Result<PolySymbol, CoreError> {
    let a_exp = HermitianExp::new(a);
    if m == 0 {
        return Ok(free_evolve(b, &a_exp, t));
    }
    if a_is_zero(a) {
        let base = c_mr(q_sym, b, &a_exp, &vec![0.0; m], 0.0, 0)?;
        let mut vol = 1.0;
        for j in 1..=m {
            vol *= t / j as f64;
        }
        return Ok(base.scale(C64::new(vol, 0.0)));
    }
    let mut acc = SymOperator::zeros(b.d(), b.p() + m as u32, b.q() + m as u32);
    let mut worst: Option<CoreError> = None;
    simplex_quadrature(t, m, quad_order, |times, w| {
        if worst.is_some() {
            return;
        }
        match c_mr(q_sym, b, &a_exp, times, t, 0) {
            Ok(c) => acc = acc.add(&c.kernel.scale(C64::new(w, 0.0))),
            Err(e) => worst = Some(e),
        }
    });
    if let Some(e) = worst {
        return Err(e);
    }
    Ok(PolySymbol::new(acc))
}

/// Norm integrals `int |C~_0^(m)|` over the simplex for `m = 0..=upto`:
/// exact kernel norms for small `m` (or whenever the collapse applies),
/// the closed norm-bound majorant `|t|^m/m! * bound` beyond.
fn norm_integrals(
    b: &PolySymbol,
    q_sym: &PolySymbol,
    a: &DMatrix<C64>,
    t: f64,
    upto: usize,
    quad_order: usize,
) -> Result<Vec<f64>, CoreError> {
    let a_exp = HermitianExp::new(a);
    let collapse = a_is_zero(a);
    let qn = q_sym.norm();
    let bn = b.norm();
    let mut out = Vec::with_capacity(upto + 1);
    for m in 0..=upto {
        if m == 0 {
            out.push(bn);
            continue;
        }
        let vol = {
            let mut v = 1.0;
            for j in 1..=m {
                v *= t.abs() / j as f64;
            }
            v
        };
        if collapse {
            let base = c_mr(q_sym, b, &a_exp, &vec![0.0; m], 0.0, 0)?;
            out.push(vol * base.norm());
        } else if m <= MAX_QUADRATURE_ORDER_M {
            let mut acc = 0.0;
            let mut worst: Option<CoreError> = None;
            simplex_quadrature(t, m, quad_order, |times, w| {
                if worst.is_some() {
                    return;
                }
                match c_mr(q_sym, b, &a_exp, times, t, 0) {
                    Ok(c) => acc += w.abs() * c.norm(),
                    Err(e) => worst = Some(e),
                }
            });
            if let Some(e) = worst {
                return Err(e);
            }
            out.push(acc);
        } else {
            out.push(vol * bracket_norm_bound(b.p(), b.q(), m as u32, 0, qn, bn));
        }
    }
    Ok(out)
}

/// Geometric majorant for `sum_{m > upto} lambda^{m+(p+q)/2} int |C~_0^(m)|`,
/// finite exactly when `|t| < T0`.
fn geometric_tail(b: &PolySymbol, lambda: f64, t: f64, q_norm: f64, upto: usize) -> f64 {
    let rho = 8.0 * lambda * t.abs() * q_norm;
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let pp = b.p().max(b.q());
    let pre = lambda.powf(0.5 * (b.p() + b.q()) as f64)
        * 2f64.powi(pp as i32 - 1)
        * b.norm();
    pre * rho.powi(upto as i32 + 1) / (1.0 - rho)
}

/// Envelopes of the expansion for a concrete moment bound and scaling:
/// `a[m] = lambda^{m+(p+q)/2} I_m`,
/// `b[m] = eps |Q~| (p+q+m-1)^2 lambda^{m-1+(p+q)/2} I_{m-1}` and
/// `c[m] = I_m`, with `I_m` the simplex norm integral of the `m`-th bracket.
pub fn envelopes(
    b: &PolySymbol,
    q_sym: &PolySymbol,
    a: &DMatrix<C64>,
    lambda: f64,
    eps: f64,
    t: f64,
    m_max: usize,
) -> Result<EnvelopeReport, CoreError> {
    let ints = norm_integrals(b, q_sym, a, t, m_max, DEFAULT_QUAD_ORDER)?;
    let half_pq = 0.5 * (b.p() + b.q()) as f64;
    let qn = q_sym.norm();
    let mut ea = Vec::with_capacity(m_max + 1);
    let mut eb = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        ea.push(lambda.powf(m as f64 + half_pq) * ints[m]);
        if m == 0 {
            eb.push(0.0);
        } else {
            let deg = (b.p() + b.q()) as f64 + m as f64 - 1.0;
            eb.push(eps * qn * deg * deg * lambda.powf(m as f64 - 1.0 + half_pq) * ints[m - 1]);
        }
    }
    Ok(EnvelopeReport {
        a: ea,
        b: eb,
        c: ints,
        tail_a: geometric_tail(b, lambda, t, qn, m_max),
    })
}

/// Partial sums of the classical expansion
/// `b o F_t(z) ~ sum_m i^m int_simplex C_0^(m)(t_m, ..., t_1, t; z)`.
///
/// With a nonvanishing free part the iterated integrals are evaluated by
/// simplex quadrature up to order [`MAX_QUADRATURE_ORDER_M`]; with `A = 0`
/// the exact collapse is used for every order up to `m_max`. Beyond the
/// radius `t0` the report carries `converged = false`.
pub fn dyson_classical(
    b: &PolySymbol,
    q_sym: &PolySymbol,
    a: &DMatrix<C64>,
    z: &DVector<C64>,
    t: f64,
    m_max: usize,
) -> Result<SeriesReport, CoreError> {
    let lambda = z.norm_squared();
    let qn = q_sym.norm();
    let t0 = radius_t0(lambda, qn);
    let m_eff = if a_is_zero(a) {
        m_max.min(MAX_COLLAPSE_ORDER_M)
    } else {
        m_max.min(MAX_QUADRATURE_ORDER_M)
    };
    let mut terms = Vec::with_capacity(m_eff + 1);
    let mut partial_sums = Vec::with_capacity(m_eff + 1);
    let mut acc = C64::ZERO;
    for m in 0..=m_eff {
        let sym = integrated_c0m(b, q_sym, a, t, m, DEFAULT_QUAD_ORDER)?;
        let term = C64::i().powu(m as u32) * eval(&sym, z)?;
        acc += term;
        terms.push(term);
        partial_sums.push(acc);
    }
    let env = envelopes(b, q_sym, a, lambda, 1.0, t, m_eff)?;
    Ok(SeriesReport {
        partial_sums,
        terms,
        env_a: env.a,
        env_b_unit_eps: env.b,
        env_c: env.c,
        tail_a: env.tail_a,
        t0,
        converged: t.abs() < t0,
    })
}

/// Quantum counterpart of the truncated expansion:
/// `sum_{m <= m_max} i^m int Tr[rho (C_0^(m))^Wick]`, evaluated through the
/// kernel-integrated symbols.
pub fn dyson_quantum_partial(
    rho: &DensityState,
    b: &PolySymbol,
    q_sym: &PolySymbol,
    a: &DMatrix<C64>,
    t: f64,
    m_max: usize,
) -> Result<C64, CoreError> {
    let mut acc = C64::ZERO;
    for m in 0..=m_max {
        let sym = integrated_c0m(b, q_sym, a, t, m, DEFAULT_QUAD_ORDER)?;
        acc += C64::i().powu(m as u32) * wick_expectation(rho, &sym);
    }
    Ok(acc)
}

/// Evaluate `b o F_t(z)` purely through the series, composing slices shorter
/// than the radius: the phase-space point is pushed slice by slice using the
/// coordinate symbols, then `b` is expanded on the final leg.
pub fn dyson_sliced(
    b: &PolySymbol,
    q_sym: &PolySymbol,
    a: &DMatrix<C64>,
    z: &DVector<C64>,
    t: f64,
    slice: f64,
    m_max: usize,
) -> Result<C64, CoreError> {
    let t0 = radius_t0(z.norm_squared(), q_sym.norm());
    if !(slice > 0.0 && slice < t0) {
        return Err(CoreError::InvalidParameter(format!(
            "slice must lie in (0, T0) = (0, {t0}), got {slice}"
        )));
    }
    let d = z.len();
    let coords: Vec<PolySymbol> = (0..d)
        .map(|i| {
            let mut k = SymOperator::zeros(d, 1, 0);
            k.matrix[(0, i)] = C64::new(1.0, 0.0);
            PolySymbol::new(k)
        })
        .collect();
    let legs = ((t.abs() / slice).ceil() as usize).max(1);
    let dt = t / legs as f64;
    let mut current = z.clone();
    for _ in 0..legs - 1 {
        let mut next = DVector::<C64>::zeros(d);
        for (i, ci) in coords.iter().enumerate() {
            let report = dyson_classical(ci, q_sym, a, &current, dt, m_max)?;
            next[i] = *report.partial_sums.last().unwrap();
        }
        current = next;
    }
    let report = dyson_classical(b, q_sym, a, &current, dt, m_max)?;
    Ok(*report.partial_sums.last().unwrap())
}
