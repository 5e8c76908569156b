//! Shared fixtures for the integration and acceptance suites.
#![allow(dead_code)]

use fockmf_cli::emit::RunSummary;
use fockmf_cli::scenario::{scenario_from_file, Scenario, ScenarioFile};
use fockmf_core::{sampling, C64};

pub fn cx_mat(m: &nalgebra::DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// The two-mode benchmark scenario: `A = diag(0, 1)`, a seeded self-adjoint
/// pair kernel rescaled to norm 1/2, and a diagonal one-particle observable.
pub fn two_mode_file(state: serde_json::Value, seed: u64) -> ScenarioFile {
    let mut rng = sampling::seeded(seed);
    let qk = sampling::random_q_kernel(2, 0.5, &mut rng);
    serde_json::from_value(serde_json::json!({
        "d": 2,
        "A": [[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]],
        "Q_kernel": cx_mat(&qk.matrix),
        "observables": [
            {"p":1,"q":1,"kernel": [[[2.0,0.0],[0.0,0.0]],[[0.0,0.0],[3.0,0.0]]], "label":"b11"},
            {"p":1,"q":0,"kernel": [[[1.0,0.0],[0.0,0.0]]], "label":"coord1"},
            {"p":2,"q":1,"kernel": [[[0.7,0.1],[0.0,0.3],[0.2,0.0]],[[0.1,0.0],[0.5,-0.2],[0.0,0.0]]], "label":"b21"}
        ],
        "state": state,
        "epsilons": {"rule":"1/n","n":[4,8,16,32,64]},
        "times": [0.2],
        "seed": seed
    }))
    .unwrap()
}

pub fn two_mode_coherent(seed: u64) -> Scenario {
    let state = serde_json::json!({"family":"coherent","z0":[[1.0,0.0],[0.0,0.0]]});
    scenario_from_file(&two_mode_file(state, seed)).unwrap()
}

pub fn two_mode_hermite(seed: u64) -> Scenario {
    let state = serde_json::json!({"family":"hermite","z":[[1.0,0.0],[0.0,0.0]]});
    scenario_from_file(&two_mode_file(state, seed)).unwrap()
}

/// One-mode closed-form model: `A = 0`, `Q = |z|^4 / 2`, coordinate
/// observable, coherent state at `z0 = 1`.
pub fn kerr_file(times: Vec<f64>) -> ScenarioFile {
    serde_json::from_value(serde_json::json!({
        "d": 1,
        "A": [[[0.0,0.0]]],
        "Q_kernel": [[[0.5,0.0]]],
        "observables": [
            {"p":1,"q":0,"kernel": [[[1.0,0.0]]], "label":"coord"}
        ],
        "state": {"family":"coherent","z0":[[1.0,0.0]]},
        "epsilons": [0.25, 0.125],
        "times": times,
        "seed": 11
    }))
    .unwrap()
}

pub fn kerr_scenario(times: Vec<f64>) -> Scenario {
    scenario_from_file(&kerr_file(times)).unwrap()
}

pub fn fresh_summary(s: &Scenario, command: &str) -> RunSummary {
    let t0 = s.t0();
    RunSummary {
        scenario_hash: s.hash.clone(),
        command: command.to_string(),
        t0: t0.is_finite().then_some(t0),
        lambda_mu: s.lambda_mu(),
        lambda_h0: vec![],
        tolerances: s.tolerances,
        fitted_orders: vec![],
        violations: None,
        cache_hit: false,
        rows: 0,
        notes: vec![],
    }
}

/// Unique scratch directory under the target tmp root.
pub fn scratch_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "fockmf-{tag}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
