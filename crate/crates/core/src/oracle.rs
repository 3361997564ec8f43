//! Ground truth for small instances: every charge/discharge pattern is
//! solved as a convex QP with one of the two powers pinned to zero, and the
//! best pattern is the optimum of the original non-convex dispatch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NetworkCase;
use crate::qp::{assemble_relaxed, solve, DispatchSolution, RelaxedQP, SolveSettings, SolveStatus};

/// Default pattern budget, 2²⁰.
pub const DEFAULT_PATTERN_LIMIT: u64 = 1 << 20;

/// Objectives within this relative distance count as tied.
const TIE_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternMode {
    /// Discharge pinned to zero.
    ChargeAllowed,
    /// Charge pinned to zero.
    DischargeAllowed,
}

/// One mode per (storage, step), packed into bits: bit `i·T + t` set means
/// discharge-allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternAssignment {
    pub bits: u64,
    pub storages: usize,
    pub steps: usize,
}

impl PatternAssignment {
    pub fn mode(&self, storage: usize, step: usize) -> PatternMode {
        if self.bits >> (storage * self.steps + step) & 1 == 1 {
            PatternMode::DischargeAllowed
        } else {
            PatternMode::ChargeAllowed
        }
    }

    /// The pattern a dispatch follows: discharge-allowed wherever it
    /// discharges more than it charges.
    pub fn from_solution(solution: &DispatchSolution) -> Self {
        let storages = solution.p_ch.len();
        let steps = solution.p_ch.first().map_or(0, Vec::len);
        let mut bits = 0;
        for i in 0..storages {
            for t in 0..steps {
                if solution.p_dc[i][t] > solution.p_ch[i][t] {
                    bits |= 1 << (i * steps + t);
                }
            }
        }
        PatternAssignment {
            bits,
            storages,
            steps,
        }
    }
}

/// Restricts the relaxed QP to one pattern.
pub fn restrict(qp: &RelaxedQP, pattern: u64) -> RelaxedQP {
    let mut restricted = qp.clone();
    let idx = qp.index;
    for i in 0..idx.storages {
        for t in 0..idx.steps {
            let var = if pattern >> (i * idx.steps + t) & 1 == 1 {
                idx.charge(i, t)
            } else {
                idx.discharge(i, t)
            };
            restricted.fix_zero(var);
        }
    }
    restricted
}

/// Whether the net charging requirement is out of reach under the pattern
/// even with full charging in every charge-allowed step.
fn net_charge_unreachable(case: &NetworkCase, pattern: u64) -> bool {
    let steps = case.horizon.steps;
    case.storages.iter().enumerate().any(|(i, s)| {
        let xi = s.retention();
        let best = (0..steps).fold(0.0, |acc, t| {
            let charge = if pattern >> (i * steps + t) & 1 == 0 {
                s.ch_max[t]
            } else {
                0.0
            };
            xi * acc + s.eta_ch * charge * case.horizon.dt
        });
        best < s.e_req
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternOutcome {
    pub pattern: u64,
    /// `None` for infeasible or pruned patterns.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub case_fingerprint: String,
    pub patterns_enumerated: u64,
    pub patterns_pruned: u64,
    pub patterns_infeasible: u64,
    pub best_pattern: PatternAssignment,
    pub best_objective: f64,
    pub best: DispatchSolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<PatternOutcome>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub limit: u64,
    pub keep_table: bool,
    pub settings: SolveSettings,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            limit: DEFAULT_PATTERN_LIMIT,
            keep_table: false,
            settings: SolveSettings::default(),
        }
    }
}

/// Number of patterns of a case, saturating.
pub fn pattern_count(case: &NetworkCase) -> u128 {
    let bits = case.storages.len() * case.horizon.steps;
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

/// Solves every pattern of `case` and returns the best.
pub fn enumerate(case: &NetworkCase, options: &OracleOptions) -> Result<OracleResult> {
    let count = pattern_count(case);
    if count > options.limit as u128 {
        return Err(Error::BudgetExceeded {
            patterns: count,
            limit: options.limit,
        });
    }
    let patterns: Vec<u64> = (0..count as u64).collect();
    enumerate_patterns(case, &patterns, options)
}

/// Solves the listed patterns only.
pub fn enumerate_patterns(
    case: &NetworkCase,
    patterns: &[u64],
    options: &OracleOptions,
) -> Result<OracleResult> {
    let qp = assemble_relaxed(case)?;
    let outcomes: Vec<(PatternOutcome, bool)> = patterns
        .par_iter()
        .map(|&pattern| {
            if net_charge_unreachable(case, pattern) {
                return Ok((
                    PatternOutcome {
                        pattern,
                        objective: None,
                    },
                    true,
                ));
            }
            let sol = solve(&restrict(&qp, pattern), &options.settings)?;
            let objective = match sol.status {
                SolveStatus::Optimal => Some(sol.objective),
                SolveStatus::Infeasible => None,
                status => {
                    return Err(Error::Backend(format!(
                        "pattern {pattern:#x} ended with status {status:?}"
                    )))
                }
            };
            Ok((PatternOutcome { pattern, objective }, false))
        })
        .collect::<Result<_>>()?;

    let best_value = outcomes
        .iter()
        .filter_map(|(o, _)| o.objective)
        .fold(f64::INFINITY, f64::min);
    if !best_value.is_finite() {
        return Err(Error::AllPatternsInfeasible);
    }
    let tie = TIE_REL * best_value.abs().max(1.0);
    let best_pattern = outcomes
        .iter()
        .filter(|(o, _)| o.objective.is_some_and(|v| v <= best_value + tie))
        .map(|(o, _)| o.pattern)
        .min()
        .expect("a feasible pattern exists");
    let best = solve(&restrict(&qp, best_pattern), &options.settings)?;
    let pruned = outcomes.iter().filter(|(_, p)| *p).count() as u64;
    let infeasible = outcomes
        .iter()
        .filter(|(o, p)| !p && o.objective.is_none())
        .count() as u64;

    Ok(OracleResult {
        case_fingerprint: case.fingerprint(),
        patterns_enumerated: patterns.len() as u64,
        patterns_pruned: pruned,
        patterns_infeasible: infeasible,
        best_pattern: PatternAssignment {
            bits: best_pattern,
            storages: case.storages.len(),
            steps: case.horizon.steps,
        },
        best_objective: best.objective,
        best,
        table: options
            .keep_table
            .then(|| outcomes.into_iter().map(|(o, _)| o).collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareTolerances {
    /// Objective gap allowed, relative to `max(1, |oracle objective|)`.
    pub gap_rel: f64,
    /// Largest `p_ch·p_dc` accepted as zero, MW².
    pub product: f64,
}

impl Default for CompareTolerances {
    fn default() -> Self {
        CompareTolerances {
            gap_rel: 1e-6,
            product: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub storage: usize,
    pub step: usize,
    pub p_ch: f64,
    pub p_dc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Oracle objective minus relaxed objective, $.
    pub gap: f64,
    pub relative_gap: f64,
    pub max_product: f64,
    pub exact: bool,
    /// The (storage, step) with the largest simultaneous operation, when
    /// the relaxation is not exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Compares a relaxed dispatch with the oracle optimum of the same case.
pub fn compare(
    relaxed: &DispatchSolution,
    oracle: &OracleResult,
    tol: &CompareTolerances,
) -> Result<Comparison> {
    if relaxed.case_fingerprint != oracle.case_fingerprint {
        return Err(Error::CaseMismatch {
            left: relaxed.case_fingerprint.clone(),
            right: oracle.case_fingerprint.clone(),
        });
    }
    let gap = oracle.best_objective - relaxed.objective;
    let relative_gap = gap / oracle.best_objective.abs().max(1.0);
    let mut max_product = 0.0_f64;
    let mut worst = None;
    for (i, (ch, dc)) in relaxed.p_ch.iter().zip(&relaxed.p_dc).enumerate() {
        for (t, (&c, &d)) in ch.iter().zip(dc).enumerate() {
            let product = c.max(0.0) * d.max(0.0);
            if product > max_product {
                max_product = product;
                worst = Some(Witness {
                    storage: i,
                    step: t,
                    p_ch: c,
                    p_dc: d,
                });
            }
        }
    }
    let exact = relative_gap <= tol.gap_rel && max_product <= tol.product;
    Ok(Comparison {
        gap,
        relative_gap,
        max_product,
        exact,
        witness: if exact { None } else { worst },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn small_case(steps: usize) -> NetworkCase {
        NetworkCase {
            horizon: Horizon { steps, dt: 1.0 },
            network: Network::single_bus(),
            generators: vec![Generator::thermal(
                0,
                0.0,
                200.0,
                200.0,
                QuadraticCost::new(0.05, 20.0),
            )],
            storages: vec![StorageDevice::constant(
                0, steps, 10.0, 20.0, 5.0, 0.95, 0.95, 0.0,
            )],
            prices: PriceModel::neglected(1),
            loads: LoadProfile {
                demand: vec![(0..steps).map(|t| 40.0 + 60.0 * (t % 2) as f64).collect()],
            },
        }
    }

    #[test]
    fn two_steps_give_four_patterns() {
        let options = OracleOptions {
            keep_table: true,
            ..Default::default()
        };
        let r = enumerate(&small_case(2), &options).unwrap();
        assert_eq!(r.patterns_enumerated, 4);
        assert_eq!(r.table.as_ref().unwrap().len(), 4);
        assert!(r.best.max_complementarity_product() <= 1e-9);
    }

    #[test]
    fn budget_is_enforced() {
        let options = OracleOptions {
            limit: 8,
            ..Default::default()
        };
        match enumerate(&small_case(4), &options) {
            Err(Error::BudgetExceeded { patterns, limit }) => {
                assert_eq!(patterns, 16);
                assert_eq!(limit, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pattern_modes_follow_the_bits() {
        let p = PatternAssignment {
            bits: 0b0110,
            storages: 2,
            steps: 2,
        };
        assert_eq!(p.mode(0, 0), PatternMode::ChargeAllowed);
        assert_eq!(p.mode(0, 1), PatternMode::DischargeAllowed);
        assert_eq!(p.mode(1, 0), PatternMode::DischargeAllowed);
        assert_eq!(p.mode(1, 1), PatternMode::ChargeAllowed);
    }

    #[test]
    fn unreachable_requirement_is_pruned() {
        let mut case = small_case(2);
        case.storages[0].e_req = 15.0;
        let r = enumerate(&case, &OracleOptions::default()).unwrap();
        // only charging in both steps can store 19 MWh ≥ 15
        assert_eq!(r.patterns_pruned, 3);
        assert_eq!(r.best_pattern.bits, 0);
    }

    #[test]
    fn storage_free_case_has_a_single_pattern() {
        let mut case = small_case(3);
        case.storages.clear();
        case.prices.storages.clear();
        let r = enumerate(&case, &OracleOptions::default()).unwrap();
        assert_eq!(r.patterns_enumerated, 1);
        let relaxed = solve(&assemble_relaxed(&case).unwrap(), &SolveSettings::default()).unwrap();
        let c = compare(&relaxed, &r, &CompareTolerances::default()).unwrap();
        assert!(c.exact && c.gap.abs() < 1e-6);
    }

    #[test]
    fn fingerprints_must_match() {
        let r = enumerate(&small_case(2), &OracleOptions::default()).unwrap();
        let other = small_case(3);
        let relaxed = solve(
            &assemble_relaxed(&other).unwrap(),
            &SolveSettings::default(),
        )
        .unwrap();
        assert!(matches!(
            compare(&relaxed, &r, &CompareTolerances::default()),
            Err(Error::CaseMismatch { .. })
        ));
    }
}
