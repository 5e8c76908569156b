//! Scenario files: one JSON document per experiment with complex entries as
//! `[re, im]` pairs. Parsing is split from validation so that a bad file
//! reports every violated invariant with its field path.

use fockmf_core::dynamics::radius_t0;
use fockmf_core::fock::{coherent_state, hermite_state, DensityState};
use fockmf_core::linalg::hermiticity_defect;
use fockmf_core::symbols::PolySymbol;
use fockmf_core::symtensor::{sym_dim, SymOperator};
use fockmf_core::wigner::{Atom, AtomKind, WignerMeasure};
use fockmf_core::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(
        "time {t} is outside the certified radius T0 = {t0}; pass --slice <dt> with dt < T0"
    )]
    RadiusRefused { t: f64, t0: f64 },
    #[error("refusing to emit an empty run")]
    EmptyRun,
    #[error(transparent)]
    Core(#[from] fockmf_core::CoreError),
}

pub type CxPair = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<CxPair>>,
    #[serde(rename = "Q_kernel")]
    pub q_kernel: Vec<Vec<CxPair>>,
    pub observables: Vec<ObservableSpec>,
    pub state: StateSpec,
    pub epsilons: EpsilonSpec,
    pub times: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub p: u32,
    pub q: u32,
    pub kernel: Vec<Vec<CxPair>>,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum StateSpec {
    Coherent { z0: Vec<CxPair> },
    Hermite { z: Vec<CxPair> },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: Box<StateSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    List(Vec<f64>),
    Rule { rule: String, n: Vec<u32> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_ode_tol() -> f64 {
    1e-10
}
fn default_quad_tol() -> f64 {
    1e-8
}
fn default_tail_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_tol: default_ode_tol(),
            quad_tol: default_quad_tol(),
            tail_tol: default_tail_tol(),
        }
    }
}

/// Validated, fully typed scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub d: usize,
    pub a: DMatrix<C64>,
    pub q: PolySymbol,
    pub observables: Vec<(String, PolySymbol)>,
    pub state: StateFamily,
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// FNV-1a hash of the canonical serialized form.
    pub hash: String,
}

#[derive(Debug, Clone)]
pub enum StateFamily {
    Coherent { z0: DVector<C64> },
    Hermite { z: DVector<C64> },
    Mixture { parts: Vec<(f64, StateFamily)> },
}

impl Scenario {
    /// State family member at one scaling parameter.
    pub fn build_state(&self, eps: f64) -> Result<DensityState, CliError> {
        build_family(&self.state, eps, self.tolerances.tail_tol)
    }

    /// The limit measure the family converges to: point masses for coherent
    /// states, full phase circles for Hermite states, mixtures componentwise.
    pub fn limit_measure(&self) -> WignerMeasure {
        fn atoms(f: &StateFamily, weight: f64, out: &mut Vec<Atom>) {
            match f {
                StateFamily::Coherent { z0 } => out.push(Atom {
                    kind: AtomKind::Point,
                    z: z0.clone(),
                    weight,
                }),
                StateFamily::Hermite { z } => out.push(Atom {
                    kind: AtomKind::CircleOrbit,
                    z: z / C64::new(z.norm(), 0.0),
                    weight,
                }),
                StateFamily::Mixture { parts } => {
                    for (w, part) in parts {
                        atoms(part, weight * w, out);
                    }
                }
            }
        }
        let mut list = Vec::new();
        atoms(&self.state, 1.0, &mut list);
        WignerMeasure { atoms: list }
    }

    /// Moment bound of the limit measure, `k <= 6`; this is the lambda that
    /// sets the certified radius of the classical expansion.
    pub fn lambda_mu(&self) -> f64 {
        self.limit_measure().moment_lambda(6)
    }

    pub fn t0(&self) -> f64 {
        radius_t0(self.lambda_mu(), self.q.norm())
    }

    /// Quantum (H0) audit at one epsilon: smallest certified moment bound,
    /// `k <= 6`.
    pub fn lambda_h0(&self, eps: f64) -> Result<f64, CliError> {
        Ok(fockmf_core::fock::h0_lambda(&self.build_state(eps)?, 6))
    }
}

fn build_family(f: &StateFamily, eps: f64, tail_tol: f64) -> Result<DensityState, CliError> {
    match f {
        StateFamily::Coherent { z0 } => Ok(DensityState::pure(coherent_state(z0, eps, tail_tol)?)),
        StateFamily::Hermite { z } => {
            let n = (1.0 / eps).round() as u32;
            Ok(DensityState::pure(hermite_state(z, n)?))
        }
        StateFamily::Mixture { parts } => {
            let mut comps = Vec::new();
            for (w, part) in parts {
                let built = build_family(part, eps, tail_tol)?;
                for (cw, state) in built.components {
                    comps.push((w * cw, state));
                }
            }
            Ok(DensityState::mixture(comps)?)
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    scenario_from_file(&file)
}

pub fn scenario_from_file(file: &ScenarioFile) -> Result<Scenario, CliError> {
    let mut violations: Vec<String> = Vec::new();
    let d = file.d;
    if d == 0 {
        return Err(CliError::Validation(vec!["d: must be >= 1".into()]));
    }

    let a = parse_matrix(&file.a, d, d).unwrap_or_else(|| {
        violations.push(format!("A: expected a {d} x {d} complex matrix"));
        DMatrix::zeros(d, d)
    });
    let defect = hermiticity_defect(&a);
    if defect > 1e-12 {
        violations.push(format!("A: hermiticity defect {defect:.3e} exceeds 1e-12"));
    }

    // the occupation basis symmetrizes slot exchange automatically, so the
    // pair kernel only needs self-adjointness on the degree-2 sector
    let dim2 = sym_dim(d, 2);
    let qm = parse_matrix(&file.q_kernel, dim2, dim2).unwrap_or_else(|| {
        violations.push(format!(
            "Q_kernel: expected a {dim2} x {dim2} complex matrix on the degree-2 basis"
        ));
        DMatrix::zeros(dim2, dim2)
    });
    let q_defect = hermiticity_defect(&qm);
    if q_defect > 1e-12 {
        violations.push(format!(
            "Q_kernel: self-adjointness defect {q_defect:.3e} exceeds 1e-12"
        ));
    }
    let q = PolySymbol::new(SymOperator {
        d,
        p: 2,
        q: 2,
        matrix: qm,
    });

    let mut observables = Vec::new();
    for (i, ob) in file.observables.iter().enumerate() {
        let rows = sym_dim(d, ob.q);
        let cols = sym_dim(d, ob.p);
        match parse_matrix(&ob.kernel, rows, cols) {
            Some(m) => observables.push((
                ob.label.clone(),
                PolySymbol::new(SymOperator {
                    d,
                    p: ob.p,
                    q: ob.q,
                    matrix: m,
                }),
            )),
            None => violations.push(format!(
                "observables[{i}].kernel: expected {rows} x {cols} for bidegree ({}, {})",
                ob.p, ob.q
            )),
        }
        if ob.label.is_empty() {
            violations.push(format!("observables[{i}].label: must be nonempty"));
        }
    }
    if file.observables.is_empty() {
        violations.push("observables: at least one required".into());
    }
    let mut labels: Vec<&str> = file.observables.iter().map(|o| o.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != file.observables.len() {
        violations.push("observables: labels must be unique".into());
    }

    let epsilons = match &file.epsilons {
        EpsilonSpec::List(v) => v.clone(),
        EpsilonSpec::Rule { rule, n } => {
            if rule != "1/n" {
                violations.push(format!("epsilons.rule: unknown rule {rule:?}"));
            }
            n.iter()
                .map(|&k| if k == 0 { f64::NAN } else { 1.0 / k as f64 })
                .collect()
        }
    };
    if epsilons.is_empty() {
        violations.push("epsilons: at least one required".into());
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        violations.push("epsilons: all values must be positive and finite".into());
    } else if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        violations.push("epsilons: schedule must be strictly decreasing".into());
    }

    let state = match parse_state(&file.state, d, &mut violations, "state") {
        Some(s) => s,
        None => StateFamily::Coherent {
            z0: DVector::zeros(d),
        },
    };
    let has_hermite = family_has_hermite(&file.state);
    if has_hermite {
        for (i, eps) in epsilons.iter().enumerate() {
            if eps.is_finite() && *eps > 0.0 {
                let n = (1.0 / eps).round();
                if n < 1.0 || (eps - 1.0 / n).abs() > 1e-12 {
                    violations.push(format!(
                        "epsilons[{i}]: hermite family requires eps = 1/n with integer n, got {eps}"
                    ));
                }
            }
        }
    }

    if file.times.is_empty() {
        violations.push("times: at least one required".into());
    }
    if file.times.iter().any(|t| !t.is_finite()) {
        violations.push("times: all values must be finite".into());
    }

    let tol = file.tolerances;
    if tol.ode_tol <= 0.0 {
        violations.push("tolerances.ode_tol: must be > 0".into());
    }
    if tol.quad_tol <= 0.0 {
        violations.push("tolerances.quad_tol: must be > 0".into());
    }
    if tol.tail_tol <= 0.0 {
        violations.push("tolerances.tail_tol: must be > 0".into());
    }

    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }

    let canonical = serde_json::to_string(file).expect("scenario reserialization");
    Ok(Scenario {
        d,
        a,
        q,
        observables,
        state,
        epsilons,
        times: file.times.clone(),
        tolerances: tol,
        seed: file.seed,
        hash: fnv1a_hex(canonical.as_bytes()),
    })
}

fn family_has_hermite(spec: &StateSpec) -> bool {
    match spec {
        StateSpec::Hermite { .. } => true,
        StateSpec::Coherent { .. } => false,
        StateSpec::Mixture { components } => {
            components.iter().any(|c| family_has_hermite(&c.state))
        }
    }
}

fn parse_state(
    spec: &StateSpec,
    d: usize,
    violations: &mut Vec<String>,
    path: &str,
) -> Option<StateFamily> {
    match spec {
        StateSpec::Coherent { z0 } => {
            let v = parse_vector(z0, d)?;
            Some(StateFamily::Coherent { z0: v })
        }
        StateSpec::Hermite { z } => {
            let v = parse_vector(z, d)?;
            if v.norm() == 0.0 {
                violations.push(format!("{path}.z: hermite state needs z != 0"));
                return None;
            }
            Some(StateFamily::Hermite { z: v })
        }
        StateSpec::Mixture { components } => {
            if components.is_empty() {
                violations.push(format!("{path}.components: must be nonempty"));
                return None;
            }
            let total: f64 = components.iter().map(|c| c.weight).sum();
            if (total - 1.0).abs() > 1e-12 {
                violations.push(format!(
                    "{path}.components: weights sum to {total}, expected 1"
                ));
            }
            let mut parts = Vec::new();
            for (i, comp) in components.iter().enumerate() {
                let sub_path = format!("{path}.components[{i}]");
                if comp.weight <= 0.0 {
                    violations.push(format!("{sub_path}.weight: must be positive"));
                }
                if matches!(*comp.state, StateSpec::Mixture { .. }) {
                    violations.push(format!("{sub_path}.state: mixtures cannot nest"));
                    continue;
                }
                match parse_state(&comp.state, d, violations, &sub_path) {
                    Some(s) => parts.push((comp.weight, s)),
                    None => violations.push(format!("{sub_path}.state: dimension mismatch")),
                }
            }
            Some(StateFamily::Mixture { parts })
        }
    }
}

fn parse_vector(entries: &[CxPair], d: usize) -> Option<DVector<C64>> {
    if entries.len() != d {
        return None;
    }
    Some(DVector::from_iterator(
        d,
        entries.iter().map(|p| C64::new(p[0], p[1])),
    ))
}

fn parse_matrix(rows: &[Vec<CxPair>], nrows: usize, ncols: usize) -> Option<DMatrix<C64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    let mut m = DMatrix::<C64>::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            m[(i, j)] = C64::new(p[0], p[1]);
        }
    }
    Some(m)
}

/// 64-bit FNV-1a over the canonical byte stream; stable across platforms.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "d": 1,
            "A": [[[0.0, 0.0]]],
            "Q_kernel": [[[0.5, 0.0]]],
            "observables": [
                {"p": 1, "q": 0, "kernel": [[[1.0, 0.0]]], "label": "coord"}
            ],
            "state": {"family": "coherent", "z0": [[1.0, 0.0]]},
            "epsilons": [0.25, 0.125],
            "times": [0.2],
            "seed": 7
        })
    }

    #[test]
    fn minimal_scenario_loads_with_quarter_radius() {
        let file: ScenarioFile = serde_json::from_value(minimal_json()).unwrap();
        let s = scenario_from_file(&file).unwrap();
        assert_eq!(s.d, 1);
        // lambda = |z0|^2 = 1 and |Q~| = 1/2 give T0 = 1/4
        assert!((s.t0() - 0.25).abs() < 1e-14);
        assert!((s.lambda_mu() - 1.0).abs() < 1e-14);
        assert_eq!(s.hash.len(), 16);
    }

    #[test]
    fn non_hermitian_a_is_named() {
        let mut v = minimal_json();
        v["d"] = serde_json::json!(2);
        v["A"] = serde_json::json!([
            [[0.0, 0.0], [1.0, 0.0]],
            [[0.0, 0.0], [1.0, 0.0]]
        ]);
        v["Q_kernel"] = serde_json::json!([
            [[0.0,0.0],[0.0,0.0],[0.0,0.0]],
            [[0.0,0.0],[0.0,0.0],[0.0,0.0]],
            [[0.0,0.0],[0.0,0.0],[0.0,0.0]]
        ]);
        v["observables"][0]["kernel"] = serde_json::json!([[[1.0,0.0],[0.0,0.0]]]);
        v["state"]["z0"] = serde_json::json!([[1.0,0.0],[0.0,0.0]]);
        let file: ScenarioFile = serde_json::from_value(v).unwrap();
        match scenario_from_file(&file) {
            Err(CliError::Validation(list)) => {
                assert!(list.iter().any(|m| m.starts_with("A:")), "{list:?}");
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn epsilon_rule_expands() {
        let mut v = minimal_json();
        v["epsilons"] = serde_json::json!({"rule": "1/n", "n": [4, 8, 16, 32, 64]});
        let file: ScenarioFile = serde_json::from_value(v).unwrap();
        let s = scenario_from_file(&file).unwrap();
        assert_eq!(s.epsilons, vec![0.25, 0.125, 0.0625, 0.03125, 0.015625]);
    }

    #[test]
    fn non_decreasing_epsilons_rejected() {
        let mut v = minimal_json();
        v["epsilons"] = serde_json::json!([0.125, 0.25]);
        let file: ScenarioFile = serde_json::from_value(v).unwrap();
        match scenario_from_file(&file) {
            Err(CliError::Validation(list)) => {
                assert!(list.iter().any(|m| m.starts_with("epsilons:")));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn hermite_needs_reciprocal_integers() {
        let mut v = minimal_json();
        v["state"] = serde_json::json!({"family": "hermite", "z": [[1.0, 0.0]]});
        v["epsilons"] = serde_json::json!([0.3, 0.2]);
        let file: ScenarioFile = serde_json::from_value(v).unwrap();
        assert!(matches!(
            scenario_from_file(&file),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn seed_changes_hash() {
        let file1: ScenarioFile = serde_json::from_value(minimal_json()).unwrap();
        let mut v = minimal_json();
        v["seed"] = serde_json::json!(8);
        let file2: ScenarioFile = serde_json::from_value(v).unwrap();
        let s1 = scenario_from_file(&file1).unwrap();
        let s2 = scenario_from_file(&file2).unwrap();
        assert_ne!(s1.hash, s2.hash);
    }

    #[test]
    fn mixture_state_builds() {
        let mut v = minimal_json();
        v["state"] = serde_json::json!({
            "family": "mixture",
            "components": [
                {"weight": 0.5, "state": {"family": "coherent", "z0": [[1.0, 0.0]]}},
                {"weight": 0.5, "state": {"family": "hermite", "z": [[1.0, 0.0]]}}
            ]
        });
        let file: ScenarioFile = serde_json::from_value(v).unwrap();
        let s = scenario_from_file(&file).unwrap();
        let rho = s.build_state(0.125).unwrap();
        assert_eq!(rho.components.len(), 2);
        let mu = s.limit_measure();
        assert_eq!(mu.atoms.len(), 2);
        assert!(mu.atoms.iter().any(|a| a.kind == AtomKind::CircleOrbit));
    }
}
