//! Wigner-measure objects: finite mixtures of point masses and circle
//! orbits, their polynomial expectations, push-forward along the Hartree
//! flow, and the integral transport-equation residual.

use crate::dynamics::HartreeSystem;
use crate::error::CoreError;
use crate::fock::{wick_expectation, DensityState};
use crate::linalg::HermitianExp;
use crate::quadrature::adaptive_simpson;
use crate::symbols::{eval, free_evolve, poisson, PolySymbol};
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// Atom kinds: a Dirac mass at `z`, or the uniform probability measure on
/// the phase circle `{e^{i theta} z : theta in [0, 2 pi)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    Point,
    CircleOrbit,
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub kind: AtomKind,
    pub z: DVector<C64>,
    pub weight: f64,
}

/// Finite mixture of atoms with weights summing to one.
#[derive(Debug, Clone)]
pub struct WignerMeasure {
    pub atoms: Vec<Atom>,
}

impl WignerMeasure {
    pub fn point(z: DVector<C64>) -> Self {
        WignerMeasure {
            atoms: vec![Atom {
                kind: AtomKind::Point,
                z,
                weight: 1.0,
            }],
        }
    }

    pub fn circle(z: DVector<C64>) -> Self {
        WignerMeasure {
            atoms: vec![Atom {
                kind: AtomKind::CircleOrbit,
                z,
                weight: 1.0,
            }],
        }
    }

    pub fn mixture(atoms: Vec<Atom>) -> Result<Self, CoreError> {
        if atoms.is_empty() {
            return Err(CoreError::InvalidParameter(
                "measure needs at least one atom".into(),
            ));
        }
        if atoms.iter().any(|a| a.weight <= 0.0) {
            return Err(CoreError::InvalidParameter(
                "atom weights must be positive".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(WignerMeasure { atoms })
    }

    /// `max_k<=k_max (int |z|^2k dmu)^(1/k)`: the moment bound entering the
    /// classical convergence radius.
    pub fn moment_lambda(&self, k_max: u32) -> f64 {
        (1..=k_max)
            .map(|k| {
                self.atoms
                    .iter()
                    .map(|a| a.weight * a.z.norm_squared().powi(k as i32))
                    .sum::<f64>()
                    .powf(1.0 / k as f64)
            })
            .fold(0.0, f64::max)
    }
}

/// `int b dmu`: point atoms evaluate, circle orbits average the phase
/// `e^{i(p-q)theta}` and therefore vanish unless `p = q`.
pub fn measure_expectation(mu: &WignerMeasure, b: &PolySymbol) -> Result<C64, CoreError> {
    let mut acc = C64::ZERO;
    for atom in &mu.atoms {
        match atom.kind {
            AtomKind::Point => acc += eval(b, &atom.z)? * atom.weight,
            AtomKind::CircleOrbit => {
                if b.p() == b.q() {
                    acc += eval(b, &atom.z)? * atom.weight;
                }
            }
        }
    }
    Ok(acc)
}

/// Push-forward `mu_t = mu o F_{-t}`: every atom's base point moves with the
/// flow; circle orbits stay circle orbits by gauge covariance of the
/// `(2,2)`-homogeneous interaction.
pub fn push_forward(
    mu: &WignerMeasure,
    a: &DMatrix<C64>,
    q: &PolySymbol,
    t: f64,
    ode_tol: f64,
) -> Result<WignerMeasure, CoreError> {
    let sys = HartreeSystem::new(a, q)?;
    let atoms = mu
        .atoms
        .iter()
        .map(|atom| {
            Ok(Atom {
                kind: atom.kind,
                z: sys.flow(&atom.z, t, ode_tol)?.z_t,
                weight: atom.weight,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    Ok(WignerMeasure { atoms })
}

/// Push-forward over long times, composing flow legs shorter than `slice`.
pub fn push_forward_sliced(
    mu: &WignerMeasure,
    a: &DMatrix<C64>,
    q: &PolySymbol,
    t: f64,
    slice: f64,
    ode_tol: f64,
) -> Result<WignerMeasure, CoreError> {
    let sys = HartreeSystem::new(a, q)?;
    let atoms = mu
        .atoms
        .iter()
        .map(|atom| {
            Ok(Atom {
                kind: atom.kind,
                z: sys.flow_sliced(&atom.z, t, slice, ode_tol)?.z_t,
                weight: atom.weight,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    Ok(WignerMeasure { atoms })
}

/// Both sides of the integral transport equation
/// `mu_t(b) = mu_t^0(b) + i int_0^t mu_s({Q, b_{t-s}}) ds`,
/// with the time integral by adaptive Simpson at tolerance `quad_tol`.
pub fn transport_sides(
    mu: &WignerMeasure,
    a: &DMatrix<C64>,
    q: &PolySymbol,
    b: &PolySymbol,
    t: f64,
    quad_tol: f64,
    ode_tol: f64,
) -> Result<(C64, C64), CoreError> {
    if quad_tol <= 0.0 {
        return Err(CoreError::InvalidParameter("quad_tol must be > 0".into()));
    }
    let a_exp = HermitianExp::new(a);
    let lhs = measure_expectation(&push_forward(mu, a, q, t, ode_tol)?, b)?;
    let free = PolySymbol::zero(b.d(), 2, 2);
    let mu_t0 = push_forward(mu, a, &free, t, ode_tol)?;
    let mut rhs = measure_expectation(&mu_t0, b)?;

    let integrand = |s: f64| -> C64 {
        let bracket = poisson(q, &free_evolve(b, &a_exp, t - s), 1);
        let mu_s = push_forward(mu, a, q, s, ode_tol).expect("flow failure inside quadrature");
        measure_expectation(&mu_s, &bracket).expect("dimension mismatch inside quadrature")
    };
    rhs += C64::i() * adaptive_simpson(&integrand, 0.0, t, quad_tol)?;
    Ok((lhs, rhs))
}

/// Residual `|lhs - rhs|` of the transport identity.
pub fn transport_residual(
    mu: &WignerMeasure,
    a: &DMatrix<C64>,
    q: &PolySymbol,
    b: &PolySymbol,
    t: f64,
    quad_tol: f64,
    ode_tol: f64,
) -> Result<f64, CoreError> {
    let (lhs, rhs) = transport_sides(mu, a, q, b, t, quad_tol, ode_tol)?;
    Ok((lhs - rhs).norm())
}

/// One dictionary row of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub label: String,
    /// `(eps, |Tr[rho_eps b^Wick] - int b dmu|)` along the schedule.
    pub errors: Vec<(f64, f64)>,
    /// Log-log fitted decay order; `None` when every error sits at the
    /// numerical floor ("exact" agreement).
    pub fitted_order: Option<f64>,
}

/// Errors below this are considered exact agreement rather than a decay law.
pub const EXACT_FLOOR: f64 = 1e-9;

/// Least-squares slope of `ln err` against `ln eps`; `None` when the errors
/// are all at floor level.
pub fn fit_order(errors: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter(|(_, e)| *e > EXACT_FLOOR)
        .map(|(eps, e)| (eps.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Test a candidate limit measure against a state family: for each
/// dictionary symbol, tabulate `|Tr[rho_eps b^Wick] - int b dmu]|` along the
/// epsilon schedule and fit the decay order.
pub fn identify_limit(
    family: &[(f64, DensityState)],
    candidate: &WignerMeasure,
    dictionary: &[(String, PolySymbol)],
) -> Result<Vec<ConvergenceRow>, CoreError> {
    let mut rows = Vec::with_capacity(dictionary.len());
    for (label, b) in dictionary {
        let target = measure_expectation(candidate, b)?;
        let errors = family
            .iter()
            .map(|(eps, rho)| (*eps, (wick_expectation(rho, b) - target).norm()))
            .collect::<Vec<_>>();
        let fitted_order = fit_order(&errors);
        rows.push(ConvergenceRow {
            label: label.clone(),
            errors,
            fitted_order,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::radius_t0;
    use crate::fock::{coherent_state, hermite_state};
    use crate::sampling;
    use crate::symtensor::SymOperator;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn one_mode_kerr() -> (DMatrix<C64>, PolySymbol) {
        let a = DMatrix::<C64>::zeros(1, 1);
        let mut k = SymOperator::zeros(1, 2, 2);
        k.matrix[(0, 0)] = cx(0.5, 0.0);
        (a, PolySymbol::new(k))
    }

    #[test]
    fn point_and_circle_expectations() {
        let mut rng = sampling::seeded(81);
        let z = sampling::random_vector(2, &mut rng);
        let b = PolySymbol::new(sampling::random_kernel(2, 2, 1, &mut rng));
        let mu = WignerMeasure::point(z.clone());
        assert!((measure_expectation(&mu, &b).unwrap() - eval(&b, &z).unwrap()).norm() < 1e-14);

        // circle orbit kills off-diagonal bidegrees
        let circ = WignerMeasure::circle(z.clone());
        assert_eq!(measure_expectation(&circ, &b).unwrap(), C64::ZERO);

        // p = q: matches both the point value and a theta-grid quadrature
        let b11 = PolySymbol::new(sampling::random_kernel(2, 1, 1, &mut rng));
        let got = measure_expectation(&circ, &b11).unwrap();
        let mut grid = C64::ZERO;
        let samples = 16;
        for j in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            grid += eval(&b11, &(&z * cx(0.0, theta).exp())).unwrap();
        }
        grid /= samples as f64;
        assert!((got - grid).norm() < 1e-12);
    }

    #[test]
    fn push_forward_basics() {
        let mut rng = sampling::seeded(83);
        let a = sampling::random_hermitian(2, &mut rng);
        let q = PolySymbol::new(sampling::random_q_kernel(2, 0.5, &mut rng));
        let z0 = sampling::random_vector(2, &mut rng);
        let mu = WignerMeasure::point(z0.clone());

        let same = push_forward(&mu, &a, &q, 0.0, 1e-10).unwrap();
        assert!((&same.atoms[0].z - &z0).norm() < 1e-14);

        // free case rotates the atom
        let q0 = PolySymbol::zero(2, 2, 2);
        let t = 0.7;
        let rotated = push_forward(&mu, &a, &q0, t, 1e-11).unwrap();
        let expect = HermitianExp::new(&a).exp_apply(-t, &z0);
        assert!((&rotated.atoms[0].z - expect).norm() < 1e-10);

        // one-mode closed form
        let (a1, q1) = one_mode_kerr();
        let z1 = DVector::from_vec(vec![cx(0.8, 0.1)]);
        let mu1 = WignerMeasure::point(z1.clone());
        let moved = push_forward(&mu1, &a1, &q1, 0.4, 1e-12).unwrap();
        let expect = z1[0] * cx(0.0, -z1[0].norm_sqr() * 0.4).exp();
        assert!((moved.atoms[0].z[0] - expect).norm() < 1e-9);

        // weights untouched
        assert!((moved.atoms[0].weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circle_orbits_close_under_flow() {
        let mut rng = sampling::seeded(85);
        let a = sampling::random_hermitian(2, &mut rng);
        let q = PolySymbol::new(sampling::random_q_kernel(2, 0.6, &mut rng));
        let z = sampling::random_unit_vector(2, &mut rng);
        let t = 0.5;
        let sys = HartreeSystem::new(&a, &q).unwrap();
        let base = sys.flow(&z, t, 1e-11).unwrap().z_t;
        for j in 0..16 {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
            let phase = cx(0.0, theta).exp();
            let moved = sys.flow(&(&z * phase), t, 1e-11).unwrap().z_t;
            assert!(
                (moved - &base * phase).norm() < 1e-8,
                "orbit sample {j} left the circle"
            );
        }
    }

    #[test]
    fn push_forward_matches_symbol_composition() {
        // int b d(mu_t) = int (b o F_t) dmu, the two forms of the limit
        let (a, q) = one_mode_kerr();
        let b = PolySymbol::new(sampling::random_kernel(1, 1, 1, &mut sampling::seeded(87)));
        let z = DVector::from_vec(vec![cx(0.9, -0.2)]);
        let mu = WignerMeasure::point(z.clone());
        let t = 0.2;
        let lhs = measure_expectation(&push_forward(&mu, &a, &q, t, 1e-12).unwrap(), &b).unwrap();
        let rhs = crate::dynamics::dyson_sliced(&b, &q, &a, &z, t, 0.8 * radius_t0(z.norm_squared(), q.norm()), 25)
            .unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn transport_residual_cases() {
        let mut rng = sampling::seeded(89);

        // Q = 0: both sides are the free push-forward
        let a = sampling::random_hermitian(2, &mut rng);
        let q0 = PolySymbol::zero(2, 2, 2);
        let b = PolySymbol::new(sampling::random_kernel(2, 1, 1, &mut rng));
        let z = sampling::random_vector(2, &mut rng);
        let mu = WignerMeasure::point(z.clone());
        let r = transport_residual(&mu, &a, &q0, &b, 0.8, 1e-8, 1e-11).unwrap();
        assert!(r < 1e-10, "free residual {r}");

        // one-mode closed form: residual at quadrature tolerance
        let (a1, q1) = one_mode_kerr();
        let b1 = {
            let mut k = SymOperator::zeros(1, 1, 0);
            k.matrix[(0, 0)] = cx(1.0, 0.0);
            PolySymbol::new(k)
        };
        let mu1 = WignerMeasure::point(DVector::from_vec(vec![cx(1.0, 0.0)]));
        let r1 = transport_residual(&mu1, &a1, &q1, &b1, 0.2, 1e-8, 1e-12).unwrap();
        assert!(r1 < 1e-6, "closed-form residual {r1}");

        // random two-mode scenario at half the radius
        let q2 = PolySymbol::new(sampling::random_q_kernel(2, 0.5, &mut rng));
        let z2 = sampling::random_unit_vector(2, &mut rng);
        let mu2 = WignerMeasure::point(z2.clone());
        let t = 0.5 * radius_t0(z2.norm_squared(), q2.norm());
        let quad_tol = 1e-7;
        let r2 = transport_residual(&mu2, &a, &q2, &b, t, quad_tol, 1e-11).unwrap();
        assert!(r2 < 10.0 * quad_tol, "two-mode residual {r2}");
    }

    #[test]
    fn identify_limit_families() {
        let mut rng = sampling::seeded(91);
        let z0 = sampling::random_unit_vector(2, &mut rng);
        let dict = crate::symbols::elementary_dictionary(2, 2);

        // coherent family against its point mass: errors at truncation level
        let family: Vec<(f64, DensityState)> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|&eps| {
                (
                    eps,
                    DensityState::pure(coherent_state(&z0, eps, 1e-12).unwrap()),
                )
            })
            .collect();
        let rows = identify_limit(&family, &WignerMeasure::point(z0.clone()), &dict).unwrap();
        for row in &rows {
            assert!(row.fitted_order.is_none(), "{} not exact", row.label);
            for (_, e) in &row.errors {
                assert!(*e < 1e-8);
            }
        }

        // Hermite family against the circle orbit: off-diagonal rows are
        // exactly zero on both sides
        let family_h: Vec<(f64, DensityState)> = [8u32, 16, 32]
            .iter()
            .map(|&n| {
                (
                    1.0 / n as f64,
                    DensityState::pure(hermite_state(&z0, n).unwrap()),
                )
            })
            .collect();
        let rows_h =
            identify_limit(&family_h, &WignerMeasure::circle(z0.clone()), &dict).unwrap();
        for row in rows_h.iter().filter(|r| {
            let (p, q) = (
                r.label.as_bytes()[1] - b'0',
                r.label.as_bytes()[2] - b'0',
            );
            p != q
        }) {
            for (_, e) in &row.errors {
                assert_eq!(*e, 0.0, "row {}", row.label);
            }
        }

        // a wrong candidate leaves a visible gap
        let wrong = WignerMeasure::point(&z0 * cx(2.0, 0.0));
        let rows_wrong = identify_limit(&family, &wrong, &dict).unwrap();
        let visible = rows_wrong
            .iter()
            .any(|row| row.errors.iter().all(|(_, e)| *e > 1e-2));
        assert!(visible, "discrimination failed");
    }

    #[test]
    fn fit_order_recovers_slopes() {
        let pts: Vec<(f64, f64)> = [0.25, 0.125, 0.0625, 0.03125]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.powf(1.17)))
            .collect();
        let got = fit_order(&pts).unwrap();
        assert!((got - 1.17).abs() < 1e-10);
        let flat: Vec<(f64, f64)> = pts.iter().map(|(e, _)| (*e, 1e-13)).collect();
        assert!(fit_order(&flat).is_none());
    }

    #[test]
    fn measure_moment_lambda() {
        let z = DVector::from_vec(vec![cx(1.0, 0.0)]);
        let mu = WignerMeasure::point(z.clone());
        assert!((mu.moment_lambda(6) - 1.0).abs() < 1e-14);
        let half = DVector::from_vec(vec![cx(0.5, 0.0)]);
        let mix = WignerMeasure::mixture(vec![
            Atom {
                kind: AtomKind::Point,
                z,
                weight: 0.5,
            },
            Atom {
                kind: AtomKind::CircleOrbit,
                z: half,
                weight: 0.5,
            },
        ])
        .unwrap();
        let lam = mix.moment_lambda(6);
        assert!(lam < 1.0 && lam > 0.5);
    }
}
