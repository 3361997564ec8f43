use std::io::Write;
use std::path::Path;

use edrelax::casekit::{generate_random, ScenarioSpec, Target};
use edrelax::oracle::{compare, enumerate, pattern_count, CompareTolerances, OracleOptions};
use edrelax::qp::{assemble_relaxed, solve};
use edrelax::relaxation::{
    check_conditions_a, check_conditions_b, check_conditions_c, verify_exactness, ConditionOptions,
    LmpReference,
};
use edrelax::{Group, SolveSettings, SolveStatus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{emit, is_stdout};
use crate::{CmdResult, Failure, SweepArgs, EXIT_DATA, EXIT_NOT_EXACT, EXIT_OK};

const PRODUCT_TOL: f64 = 1e-7;

/// One instance of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub instance: usize,
    pub seed: u64,
    pub buses: usize,
    pub storages: usize,
    pub steps: usize,
    /// `optimal`, `infeasible`, `solver-failed`, `oracle-failed` or
    /// `generation-failed`.
    pub status: String,
    pub cond_a: bool,
    pub cond_b: bool,
    pub cond_c: bool,
    pub max_product: f64,
    /// No simultaneity, and no oracle gap when the oracle ran.
    pub exact: bool,
    /// Relative objective gap to the oracle, when within budget.
    pub oracle_gap: Option<f64>,
}

impl SweepRow {
    fn empty(instance: usize, seed: u64, status: &str) -> Self {
        SweepRow {
            instance,
            seed,
            buses: 0,
            storages: 0,
            steps: 0,
            status: status.into(),
            cond_a: false,
            cond_b: false,
            cond_c: false,
            max_product: 0.0,
            exact: false,
            oracle_gap: None,
        }
    }

    pub fn satisfies(&self, group: Group) -> bool {
        match group {
            Group::A => self.cond_a,
            Group::B => self.cond_b,
            Group::C => self.cond_c,
        }
    }
}

/// Generates, solves, checks and cross-validates one seeded instance.
pub fn sweep_instance(instance: usize, seed: u64, target: Target, limit: u64) -> SweepRow {
    let Ok(case) = generate_random(&ScenarioSpec::new(seed, target)) else {
        return SweepRow::empty(instance, seed, "generation-failed");
    };
    let mut row = SweepRow::empty(instance, seed, "optimal");
    row.buses = case.network.n_buses;
    row.storages = case.storages.len();
    row.steps = case.horizon.steps;

    let settings = SolveSettings::default();
    let sol = match assemble_relaxed(&case).and_then(|qp| solve(&qp, &settings)) {
        Ok(sol) => sol,
        Err(_) => {
            row.status = "solver-failed".into();
            return row;
        }
    };
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            row.status = "infeasible".into();
            return row;
        }
        _ => {
            row.status = "solver-failed".into();
            return row;
        }
    }

    let reference = LmpReference::a_posteriori(&sol, &case);
    let options = ConditionOptions::default();
    row.cond_a = check_conditions_a(&case, &reference, &options).is_ok_and(|r| r.satisfied);
    row.cond_b = check_conditions_b(&case, &reference, &options).is_ok_and(|r| r.satisfied);
    row.cond_c = check_conditions_c(&case, &reference, &options).is_ok_and(|r| r.satisfied);

    let report = verify_exactness(&sol, PRODUCT_TOL);
    row.max_product = report.max_product;
    row.exact = report.exact;

    if pattern_count(&case) <= u128::from(limit) {
        let options = OracleOptions {
            limit,
            ..OracleOptions::default()
        };
        match enumerate(&case, &options)
            .and_then(|oracle| compare(&sol, &oracle, &CompareTolerances::default()))
        {
            Ok(cmp) => {
                row.oracle_gap = Some(cmp.relative_gap);
                row.exact &= cmp.exact;
            }
            Err(_) => row.status = "oracle-failed".into(),
        }
    }
    row
}

/// Runs `instances` seeds starting at `seed` in parallel; rows come back in
/// instance order.
pub fn sweep_rows(instances: usize, seed: u64, target: Target, limit: u64) -> Vec<SweepRow> {
    (0..instances)
        .into_par_iter()
        .map(|i| sweep_instance(i, seed.wrapping_add(i as u64), target, limit))
        .collect()
}

pub(crate) fn sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let rows = sweep_rows(args.instances, args.seed, args.target, args.limit);

    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)
            .map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    let text = String::from_utf8_lossy(&bytes);
    let path = args.out.as_deref().unwrap_or(Path::new("-"));
    emit(path, &text, out)?;

    let s: &mut dyn Write = if is_stdout(Some(path)) { err } else { out };
    let io = |e| Failure::io(Path::new("<output>"), e);
    let mut counterexample_found = false;
    let mut parts = Vec::new();
    for group in [Group::A, Group::B, Group::C] {
        let held: Vec<_> = rows.iter().filter(|r| r.satisfies(group)).collect();
        let exact = held.iter().filter(|r| r.exact).count();
        counterexample_found |= exact < held.len();
        let pct = if held.is_empty() {
            "n/a".to_string()
        } else {
            format!("{:.1}%", 100.0 * exact as f64 / held.len() as f64)
        };
        parts.push(format!("{group} {exact}/{} exact ({pct})", held.len()));
    }
    let solved: Vec<_> = rows.iter().filter(|r| r.status == "optimal").collect();
    let exact = solved.iter().filter(|r| r.exact).count();
    writeln!(
        s,
        "{}; all {exact}/{} exact",
        parts.join(", "),
        solved.len()
    )
    .map_err(io)?;
    let skipped = rows.len() - solved.len();
    if skipped > 0 {
        writeln!(
            s,
            "warning: {skipped} instances not solved, see status column"
        )
        .map_err(io)?;
    }
    Ok(if counterexample_found {
        EXIT_NOT_EXACT
    } else {
        EXIT_OK
    })
}
