#![allow(dead_code)]

use edrelax::casekit::{generate_random, ScenarioSpec, Target};
use edrelax::qp::{assemble_relaxed, solve};
use edrelax::{DispatchSolution, NetworkCase, SolveSettings};

pub fn random_case(seed: u64, target: Target) -> NetworkCase {
    generate_random(&ScenarioSpec::new(seed, target)).expect("instance generates")
}

pub fn solve_case(case: &NetworkCase) -> DispatchSolution {
    let sol = solve(&assemble_relaxed(case).unwrap(), &SolveSettings::default()).unwrap();
    assert!(
        sol.is_optimal(),
        "status {:?}: {:?}",
        sol.status,
        sol.diagnosis
    );
    sol
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
