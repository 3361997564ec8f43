use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_case, Generator, Horizon, Line, LoadProfile, Network, NetworkCase, PriceModel,
    PriceScenario, QuadraticCost, StorageDevice, StoragePrice,
};
use crate::qp::{assemble_relaxed, solve, SolveSettings};
use crate::relaxation::{check_conditions_a, check_conditions_b, check_conditions_c};
use crate::relaxation::{ConditionOptions, LmpReference};

/// Which condition group a generated instance must exhibit once solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    SatisfyA,
    SatisfyB,
    SatisfyC,
    /// Discharge cost covers the fee but the fee exceeds some realized price.
    ViolateA2,
    /// Any feasible instance.
    Unconstrained,
}

impl Target {
    pub const ALL: [Target; 5] = [
        Target::SatisfyA,
        Target::SatisfyB,
        Target::SatisfyC,
        Target::ViolateA2,
        Target::Unconstrained,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Target::SatisfyA => "satisfy-a",
            Target::SatisfyB => "satisfy-b",
            Target::SatisfyC => "satisfy-c",
            Target::ViolateA2 => "violate-a2",
            Target::Unconstrained => "unconstrained",
        }
    }

    fn scenarios(&self) -> &'static [PriceScenario] {
        use PriceScenario::*;
        match self {
            Target::SatisfyA | Target::Unconstrained => &[BothCosts, Neglected, StoragePays],
            Target::SatisfyB | Target::SatisfyC => &[BothCosts, StoragePays],
            Target::ViolateA2 => &[StoragePays],
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown target {s:?}"))
    }
}

/// Parameters of a random instance. Counts left as `None` are drawn: up to
/// five buses, up to two storages and up to six steps, keeping
/// storages × steps ≤ 10 so the pattern oracle stays cheap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub buses: Option<usize>,
    pub storages: Option<usize>,
    pub steps: Option<usize>,
    /// Sign pattern of storage prices; drawn among those compatible with
    /// the target when absent.
    pub price_scenario: Option<PriceScenario>,
    /// Total load per step as a fraction of thermal capacity.
    pub load_range: (f64, f64),
    /// Peak wind availability as a fraction of thermal capacity; wind is
    /// only added to unconstrained instances.
    pub wind_share: f64,
    pub target: Target,
    pub max_attempts: usize,
}

impl ScenarioSpec {
    pub fn new(seed: u64, target: Target) -> Self {
        ScenarioSpec {
            seed,
            buses: None,
            storages: None,
            steps: None,
            price_scenario: None,
            load_range: (0.2, 0.6),
            wind_share: 0.3,
            target,
            max_attempts: 50,
        }
    }
}

/// Draws a valid, feasible case honoring `spec.target`.
///
/// Every draw is solved and its realized prices checked against the
/// target; failing draws are replaced by fresh ones from the same seeded
/// stream, up to `max_attempts`.
pub fn generate_random(spec: &ScenarioSpec) -> Result<NetworkCase> {
    let failed = |attempts| Error::TargetingFailed {
        target: spec.target.to_string(),
        attempts,
    };
    if let Some(s) = spec.price_scenario {
        if !spec.target.scenarios().contains(&s) {
            return Err(failed(0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.max_attempts {
        let case = draw(spec, &mut rng);
        if validate_case(&case).is_valid() && meets_target(&case, spec.target)? {
            return Ok(case);
        }
    }
    Err(failed(spec.max_attempts))
}

fn meets_target(case: &NetworkCase, target: Target) -> Result<bool> {
    let sol = solve(&assemble_relaxed(case)?, &SolveSettings::default())?;
    if !sol.is_optimal() {
        return Ok(false);
    }
    let reference = LmpReference::a_posteriori(&sol, case);
    let opts = ConditionOptions::default();
    Ok(match target {
        Target::SatisfyA => check_conditions_a(case, &reference, &opts)?.satisfied,
        Target::SatisfyB => check_conditions_b(case, &reference, &opts)?.satisfied,
        Target::SatisfyC => check_conditions_c(case, &reference, &opts)?.satisfied,
        Target::ViolateA2 => {
            let a = check_conditions_a(case, &reference, &opts)?;
            a.entries.iter().all(|e| e.cost_ok) && a.entries.iter().any(|e| !e.price_ok)
        }
        Target::Unconstrained => true,
    })
}

fn draw(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> NetworkCase {
    let targeted = spec.target != Target::Unconstrained;
    let n = spec.buses.unwrap_or_else(|| rng.gen_range(1..=5));
    let s_count = spec.storages.unwrap_or_else(|| rng.gen_range(1..=2));
    let steps = spec
        .steps
        .unwrap_or_else(|| rng.gen_range(1..=(10 / s_count.max(1)).clamp(1, 6)));

    let mut lines = Vec::new();
    for b in 1..n {
        let parent = rng.gen_range(0..b);
        lines.push((parent, b));
    }
    if n >= 3 && rng.gen_bool(0.5) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b
            && !lines
                .iter()
                .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
        {
            lines.push((a.min(b), a.max(b)));
        }
    }
    let lines: Vec<Line> = lines
        .into_iter()
        .map(|(from, to)| {
            let limit = if targeted {
                1000.0
            } else {
                rng.gen_range(20.0..80.0)
            };
            Line::new(from, to, rng.gen_range(0.05..0.5), limit)
        })
        .collect();
    let network = Network::new(n, lines, 0).expect("random tree is connected");

    let mut generators: Vec<Generator> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let p_max = rng.gen_range(60.0..150.0);
            let p_min = if targeted {
                0.0
            } else {
                rng.gen_range(0.0..0.2) * p_max
            };
            let ramp = (!targeted && rng.gen_bool(0.5)).then(|| rng.gen_range(0.3..1.0) * p_max);
            Generator {
                bus: rng.gen_range(0..n),
                p_min,
                p_max,
                ramp_up: ramp,
                ramp_down: ramp.map(|r| -r),
                cost: QuadraticCost::new(rng.gen_range(0.005..0.05), rng.gen_range(8.0..40.0)),
                p_max_profile: None,
            }
        })
        .collect();
    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();
    let c1_min = generators
        .iter()
        .map(|g| g.cost.c1)
        .fold(f64::INFINITY, f64::min);
    let mc_max = generators
        .iter()
        .map(|g| g.cost.derivative(g.p_max))
        .fold(0.0, f64::max);

    let storages: Vec<StorageDevice> = (0..s_count)
        .map(|_| {
            let e_max = rng.gen_range(5.0..20.0);
            let mut s = StorageDevice::constant(
                rng.gen_range(0..n),
                steps,
                rng.gen_range(2.0..10.0),
                e_max,
                rng.gen_range(0.0..=1.0) * e_max,
                rng.gen_range(0.8..0.98),
                rng.gen_range(0.8..0.98),
                rng.gen_range(0.0..0.02),
            );
            if !targeted && rng.gen_bool(0.25) {
                s.e_req = rng.gen_range(-0.5..0.5) * e_max;
            }
            s
        })
        .collect();
    let dc_total: f64 = storages.iter().map(|s| s.dc_max[0]).sum();

    let (lo, hi) = spec.load_range;
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.1..1.0)
            }
        })
        .collect();
    let weight_sum: f64 = weights.iter().sum::<f64>().max(1e-12);
    let weights: Vec<f64> = if weight_sum <= 1e-12 {
        vec![1.0 / n as f64; n]
    } else {
        weights.iter().map(|w| w / weight_sum).collect()
    };
    let totals: Vec<f64> = (0..steps)
        .map(|_| (rng.gen_range(lo..=hi) * capacity).max(dc_total + 5.0))
        .collect();
    let demand = weights
        .iter()
        .map(|w| totals.iter().map(|d| w * d).collect())
        .collect();

    if !targeted && spec.wind_share > 0.0 && rng.gen_bool(0.5) {
        let peak = spec.wind_share * capacity;
        let available = (0..steps).map(|_| rng.gen_range(0.0..=peak)).collect();
        generators.push(Generator::renewable(rng.gen_range(0..n), available));
    }

    let scenario = spec
        .price_scenario
        .unwrap_or_else(|| *spec.target.scenarios().choose(rng).expect("non-empty"));
    let shared_fee = rng.gen_range(0.5..(c1_min - 1.0).max(1.0));
    let linear_marginal = spec.target == Target::SatisfyB
        && scenario == PriceScenario::StoragePays
        && rng.gen_bool(0.5);
    let prices = storages
        .iter()
        .map(|s| {
            let g2 = if rng.gen_bool(0.5) {
                rng.gen_range(0.0..0.05)
            } else {
                0.0
            };
            match scenario {
                PriceScenario::Neglected => StoragePrice::ZERO,
                PriceScenario::BothCosts => {
                    StoragePrice::new(rng.gen_range(-20.0..-0.5), g2, rng.gen_range(0.5..20.0))
                }
                PriceScenario::StoragePays => {
                    let (f, g1) = match spec.target {
                        Target::SatisfyA => {
                            let f = rng.gen_range(0.5..(c1_min - 1.0).max(1.0));
                            let g1 = if rng.gen_bool(0.25) {
                                f
                            } else {
                                f + rng.gen_range(0.0..10.0)
                            };
                            (f, g1)
                        }
                        Target::SatisfyB => {
                            let f = if linear_marginal {
                                shared_fee
                            } else {
                                rng.gen_range(0.5..(c1_min - 1.0).max(1.0))
                            };
                            (f, f + rng.gen_range(0.5..10.0))
                        }
                        Target::SatisfyC => {
                            let g1 = rng.gen_range(5.0..40.0);
                            let f = (g1 * s.round_trip() - rng.gen_range(0.5..10.0)).max(0.1);
                            (f, g1)
                        }
                        Target::ViolateA2 => {
                            let f = mc_max + rng.gen_range(1.0..20.0);
                            (f, f + rng.gen_range(0.0..10.0))
                        }
                        Target::Unconstrained => {
                            (rng.gen_range(0.5..50.0), rng.gen_range(0.5..50.0))
                        }
                    };
                    StoragePrice::new(f, g2, g1)
                }
            }
        })
        .collect();
    if linear_marginal {
        generators.push(Generator {
            bus: rng.gen_range(0..n),
            p_min: 0.0,
            p_max: rng.gen_range(30.0..80.0),
            ramp_up: None,
            ramp_down: None,
            cost: QuadraticCost::new(0.0, shared_fee),
            p_max_profile: None,
        });
    }

    NetworkCase {
        horizon: Horizon { steps, dt: 1.0 },
        network,
        generators,
        storages,
        prices: PriceModel {
            scenario: Some(scenario),
            storages: prices,
        },
        loads: LoadProfile { demand },
    }
}
