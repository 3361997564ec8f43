use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::NetworkCase;
use crate::relaxation::lmp::{LmpReference, ReferenceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    C,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Group::A => "A",
            Group::B => "B",
            Group::C => "C",
        };
        f.write_str(name)
    }
}

/// Comparison thresholds. A strict inequality `a > b` holds when
/// `a − b > strict_eps`; a non-strict `a ≥ b` holds when
/// `a − b ≥ −nonstrict_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionOptions {
    pub strict_eps: f64,
    pub nonstrict_tol: f64,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            strict_eps: 1e-9,
            nonstrict_tol: 1e-6,
        }
    }
}

impl ConditionOptions {
    fn holds(&self, margin: f64, strict: bool) -> bool {
        if strict {
            margin > self.strict_eps
        } else {
            margin >= -self.nonstrict_tol
        }
    }
}

/// Margins of one (storage, step).
///
/// | group | cost margin           | price margin |
/// |-------|-----------------------|--------------|
/// | A     | `g′_inf − f′`         | `LMP − f′` (strict) |
/// | B     | `g′_inf − f′` (strict)| `LMP − f′`   |
/// | C     | `g′_inf − f′/η_cycle` (strict) | `LMP` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub storage: usize,
    pub step: usize,
    pub cost_margin: f64,
    pub price_margin: f64,
    pub cost_ok: bool,
    pub price_ok: bool,
    /// Cost margin with g′ taken at the realized discharge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_cost_margin: Option<f64>,
}

impl ConditionEntry {
    pub fn ok(&self) -> bool {
        self.cost_ok && self.price_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub group: Group,
    pub mode: ReferenceMode,
    pub entries: Vec<ConditionEntry>,
    pub satisfied: bool,
}

impl ConditionReport {
    pub fn min_cost_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.cost_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_price_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.price_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionEntry> {
        self.entries.iter().filter(|e| !e.ok())
    }

    /// Whether the cost and price comparisons are strict for this group.
    pub fn strictness(&self) -> (bool, bool) {
        strictness(self.group)
    }
}

fn strictness(group: Group) -> (bool, bool) {
    match group {
        Group::A => (false, true),
        Group::B => (true, false),
        Group::C => (true, false),
    }
}

fn check(
    group: Group,
    case: &NetworkCase,
    reference: &LmpReference,
    options: &ConditionOptions,
) -> Result<ConditionReport> {
    reference.check_shape(case)?;
    let (cost_strict, price_strict) = strictness(group);
    let mut entries = Vec::with_capacity(case.storages.len() * case.horizon.steps);
    for (i, s) in case.storages.iter().enumerate() {
        let price = case.prices.storages[i];
        let f = price.f_slope;
        let threshold = match group {
            Group::A | Group::B => f,
            Group::C => f / s.round_trip(),
        };
        for t in 0..case.horizon.steps {
            let lmp = reference.lmp.at(s.bus, t);
            let cost_margin = price.discharge_marginal_inf() - threshold;
            let price_margin = match group {
                Group::A | Group::B => lmp - f,
                Group::C => lmp,
            };
            let realized_cost_margin = reference
                .realized_dc
                .as_ref()
                .map(|dc| price.discharge_marginal(dc[i][t].max(0.0)) - threshold);
            entries.push(ConditionEntry {
                storage: i,
                step: t,
                cost_margin,
                price_margin,
                cost_ok: options.holds(cost_margin, cost_strict),
                price_ok: options.holds(price_margin, price_strict),
                realized_cost_margin,
            });
        }
    }
    let satisfied = entries.iter().all(ConditionEntry::ok);
    Ok(ConditionReport {
        group,
        mode: reference.mode,
        entries,
        satisfied,
    })
}

/// A-1: `g′_inf ≥ f′`; A-2: `f′ < LMP` at the storage's bus.
pub fn check_conditions_a(
    case: &NetworkCase,
    reference: &LmpReference,
    options: &ConditionOptions,
) -> Result<ConditionReport> {
    check(Group::A, case, reference, options)
}

/// B-1: `g′_inf > f′`; B-2: `f′ ≤ LMP` at the storage's bus.
pub fn check_conditions_b(
    case: &NetworkCase,
    reference: &LmpReference,
    options: &ConditionOptions,
) -> Result<ConditionReport> {
    check(Group::B, case, reference, options)
}

/// C-1: `g′_inf > f′/η_cycle`; C-2: `LMP ≥ 0` at the storage's bus.
pub fn check_conditions_c(
    case: &NetworkCase,
    reference: &LmpReference,
    options: &ConditionOptions,
) -> Result<ConditionReport> {
    check(Group::C, case, reference, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// `None` when no group can be certified; exactness must then be
    /// checked on the solved dispatch.
    pub group: Option<Group>,
    pub rationale: Vec<String>,
    /// Reports for groups A, B and C in that order.
    pub reports: Vec<ConditionReport>,
}

/// Picks the condition group to rely on: C when prices are non-negative
/// and the discharge cost clears the round-trip-adjusted fee, otherwise A,
/// otherwise B when A only fails where the fee equals the price.
pub fn recommend_group(
    case: &NetworkCase,
    reference: &LmpReference,
    options: &ConditionOptions,
) -> Result<Recommendation> {
    let a = check_conditions_a(case, reference, options)?;
    let b = check_conditions_b(case, reference, options)?;
    let c = check_conditions_c(case, reference, options)?;
    let mut rationale = Vec::new();

    let group = if c.satisfied {
        rationale.push(format!(
            "price reference is non-negative (min {:.6}) and g' exceeds f'/eta_cycle by at least {:.6}",
            c.min_price_margin(),
            c.min_cost_margin()
        ));
        Some(Group::C)
    } else {
        if c.min_price_margin() < -options.nonstrict_tol {
            rationale.push(format!(
                "group C rejected: price reference reaches {:.6} < 0",
                c.min_price_margin()
            ));
        } else {
            rationale.push(format!(
                "group C rejected: g' - f'/eta_cycle is {:.6}",
                c.min_cost_margin()
            ));
        }
        if a.satisfied {
            rationale.push(format!(
                "f' stays below the price by at least {:.6} and g' >= f' (margin {:.6})",
                a.min_price_margin(),
                a.min_cost_margin()
            ));
            Some(Group::A)
        } else if b.satisfied {
            let ties = a.failures().count();
            rationale.push(format!(
                "group A fails only where f' meets the price ({ties} entries); g' > f' by {:.6}",
                b.min_cost_margin()
            ));
            Some(Group::B)
        } else {
            if a.min_cost_margin() < -options.nonstrict_tol {
                rationale.push(format!("g' falls below f' by {:.6}", -a.min_cost_margin()));
            }
            if b.min_price_margin() < -options.nonstrict_tol {
                rationale.push(format!(
                    "f' exceeds the price by {:.6} at some entry",
                    -b.min_price_margin()
                ));
            }
            rationale.push(
                "warning: no group is satisfied; verify exactness on the solved dispatch".into(),
            );
            None
        }
    };
    Ok(Recommendation {
        group,
        rationale,
        reports: vec![a, b, c],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use crate::relaxation::lmp::{LmpForecast, LmpSeries};

    fn one_storage(price: StoragePrice, eta: f64, steps: usize) -> NetworkCase {
        NetworkCase {
            horizon: Horizon { steps, dt: 1.0 },
            network: Network::single_bus(),
            generators: vec![Generator::thermal(
                0,
                0.0,
                100.0,
                100.0,
                QuadraticCost::new(0.01, 20.0),
            )],
            storages: vec![StorageDevice::constant(
                0, steps, 5.0, 10.0, 5.0, eta, eta, 0.0,
            )],
            prices: PriceModel::uniform(None, price, 1),
            loads: LoadProfile {
                demand: vec![vec![30.0; steps]],
            },
        }
    }

    fn realized(values: Vec<f64>) -> LmpReference {
        LmpReference {
            mode: ReferenceMode::APosteriori,
            lmp: LmpSeries {
                values: vec![values],
            },
            realized_dc: None,
        }
    }

    fn opts() -> ConditionOptions {
        ConditionOptions::default()
    }

    #[test]
    fn neglected_prices_with_positive_reference_satisfy_a() {
        let case = one_storage(StoragePrice::ZERO, 0.9, 3);
        let r = check_conditions_a(&case, &realized(vec![5.0; 3]), &opts()).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.entries.len(), 3);
    }

    #[test]
    fn fee_above_a_price_entry_violates_a2_only() {
        let case = one_storage(StoragePrice::new(24.0, 0.0, 25.0), 0.9, 3);
        let r = check_conditions_a(&case, &realized(vec![30.0, 16.0, 30.0]), &opts()).unwrap();
        assert!(!r.satisfied);
        assert!(r.entries.iter().all(|e| e.cost_ok));
        let failed: Vec<usize> = r.failures().map(|e| e.step).collect();
        assert_eq!(failed, vec![1]);
    }

    #[test]
    fn a_priori_bound_clears_a_ten_dollar_fee() {
        let case = one_storage(StoragePrice::new(10.0, 0.0, 10.0), 0.9, 2);
        let forecast = LmpForecast {
            forecast: vec![vec![20.0, 20.0]],
            mape: 0.01,
        };
        let r = check_conditions_a(&case, &LmpReference::a_priori(&forecast), &opts()).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.mode, ReferenceMode::APriori);
        assert!((r.min_price_margin() - 9.4).abs() < 1e-12);
    }

    #[test]
    fn price_equal_to_fee_satisfies_b_but_not_a() {
        let case = one_storage(StoragePrice::new(24.0, 0.0, 25.0), 0.9, 2);
        let reference = realized(vec![24.0, 30.0]);
        assert!(
            check_conditions_b(&case, &reference, &opts())
                .unwrap()
                .satisfied
        );
        assert!(
            !check_conditions_a(&case, &reference, &opts())
                .unwrap()
                .satisfied
        );
        let rec = recommend_group(&case, &reference, &opts()).unwrap();
        assert_eq!(rec.group, Some(Group::B));
    }

    #[test]
    fn neglected_prices_fail_b1() {
        let case = one_storage(StoragePrice::ZERO, 0.9, 1);
        let r = check_conditions_b(&case, &realized(vec![5.0]), &opts()).unwrap();
        assert!(!r.satisfied && !r.entries[0].cost_ok);
    }

    #[test]
    fn fee_above_price_fails_b2() {
        let case = one_storage(StoragePrice::new(6.0, 0.0, 25.0), 0.9, 1);
        let r = check_conditions_b(&case, &realized(vec![5.0]), &opts()).unwrap();
        assert!(!r.entries[0].price_ok);
    }

    #[test]
    fn round_trip_losses_raise_the_c1_threshold() {
        let case = one_storage(StoragePrice::new(24.0, 0.0, 25.0), 0.9, 1);
        let r = check_conditions_c(&case, &realized(vec![30.0]), &opts()).unwrap();
        assert!((r.entries[0].cost_margin - (25.0 - 24.0 / 0.81)).abs() < 1e-12);
        assert!(!r.entries[0].cost_ok);
    }

    #[test]
    fn negative_fee_satisfies_c_with_non_negative_prices() {
        let case = one_storage(StoragePrice::new(-5.0, 0.0, 3.0), 0.9, 2);
        let reference = realized(vec![0.0, 12.0]);
        assert!(
            check_conditions_c(&case, &reference, &opts())
                .unwrap()
                .satisfied
        );
        assert_eq!(
            recommend_group(&case, &reference, &opts()).unwrap().group,
            Some(Group::C)
        );
    }

    #[test]
    fn negative_price_fails_c2_and_falls_back_to_a() {
        let case = one_storage(StoragePrice::new(-30.0, 0.0, 3.0), 0.9, 2);
        let reference = realized(vec![-10.0, 12.0]);
        let c = check_conditions_c(&case, &reference, &opts()).unwrap();
        assert!(!c.entries[0].price_ok);
        let rec = recommend_group(&case, &reference, &opts()).unwrap();
        assert_eq!(rec.group, Some(Group::A));
    }

    #[test]
    fn nothing_satisfiable_gives_a_warning() {
        let case = one_storage(StoragePrice::new(24.0, 0.0, 25.0), 0.9, 2);
        let rec = recommend_group(&case, &realized(vec![16.0, 16.0]), &opts()).unwrap();
        assert_eq!(rec.group, None);
        assert!(rec.rationale.iter().any(|r| r.starts_with("warning")));
    }

    #[test]
    fn realized_margin_uses_dispatched_discharge() {
        let case = one_storage(StoragePrice::new(1.0, 0.5, 2.0), 0.9, 1);
        let mut reference = realized(vec![10.0]);
        reference.realized_dc = Some(vec![vec![3.0]]);
        let r = check_conditions_a(&case, &reference, &opts()).unwrap();
        assert_eq!(
            r.entries[0].realized_cost_margin,
            Some(2.0 * 0.5 * 3.0 + 2.0 - 1.0)
        );
    }

    #[test]
    fn reference_shape_is_checked() {
        let case = one_storage(StoragePrice::ZERO, 0.9, 3);
        assert!(check_conditions_a(&case, &realized(vec![5.0; 2]), &opts()).is_err());
    }
}
