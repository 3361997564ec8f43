//! Domain types for a storage-concerned dispatch instance.
//!
//! Indices are zero-based throughout: bus `0` is the first bus, step `0` the
//! first dispatch interval. Powers are MW, energies MWh, prices $/MWh and
//! ramps MW per step.

mod gsf;
mod storage;
mod validate;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use gsf::compute_gsf;
pub use storage::{energy_trajectory, net_charge_lhs};
pub use validate::{validate_case, Severity, ValidationReport, Violation, ViolationCode};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub steps: usize,
    /// Hours per step.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series reactance, p.u.
    pub reactance: f64,
    pub flow_min: f64,
    pub flow_max: f64,
}

impl Line {
    pub fn new(from: usize, to: usize, reactance: f64, limit: f64) -> Self {
        Line {
            from,
            to,
            reactance,
            flow_min: -limit,
            flow_max: limit,
        }
    }
}

/// Transmission network with its generation shift factors.
///
/// `gsf[j][i]` is the share of an injection at bus `i` (withdrawn at the
/// slack bus) that flows on line `j` in its from→to direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub n_buses: usize,
    pub lines: Vec<Line>,
    pub slack: usize,
    pub gsf: Vec<Vec<f64>>,
}

impl Network {
    /// Builds a network and derives its shift factors from line reactances.
    pub fn new(n_buses: usize, lines: Vec<Line>, slack: usize) -> Result<Self> {
        let gsf = compute_gsf(n_buses, &lines, slack)?;
        Ok(Network {
            n_buses,
            lines,
            slack,
            gsf,
        })
    }

    /// A network with externally supplied shift factors (not checked here;
    /// `validate_case` reports shape problems).
    pub fn with_gsf(n_buses: usize, lines: Vec<Line>, slack: usize, gsf: Vec<Vec<f64>>) -> Self {
        Network {
            n_buses,
            lines,
            slack,
            gsf,
        }
    }

    /// One bus, no lines.
    pub fn single_bus() -> Self {
        Network {
            n_buses: 1,
            lines: Vec::new(),
            slack: 0,
            gsf: Vec::new(),
        }
    }

    /// Line flows for a bus injection vector.
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        self.gsf
            .iter()
            .map(|row| row.iter().zip(injection).map(|(g, p)| g * p).sum())
            .collect()
    }
}

/// `c2·x² + c1·x` ($ per step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCost {
    pub c2: f64,
    pub c1: f64,
}

impl QuadraticCost {
    pub const ZERO: QuadraticCost = QuadraticCost { c2: 0.0, c1: 0.0 };

    pub fn new(c2: f64, c1: f64) -> Self {
        QuadraticCost { c2, c1 }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.c2 * x * x + self.c1 * x
    }

    pub fn derivative(&self, x: f64) -> f64 {
        2.0 * self.c2 * x + self.c1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// MW per step; `None` leaves the ramp unconstrained.
    #[serde(default)]
    pub ramp_up: Option<f64>,
    /// MW per step, non-positive.
    #[serde(default)]
    pub ramp_down: Option<f64>,
    pub cost: QuadraticCost,
    /// Time-varying availability for renewable units; overrides `p_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max_profile: Option<Vec<f64>>,
}

impl Generator {
    pub fn thermal(bus: usize, p_min: f64, p_max: f64, ramp: f64, cost: QuadraticCost) -> Self {
        Generator {
            bus,
            p_min,
            p_max,
            ramp_up: Some(ramp),
            ramp_down: Some(-ramp),
            cost,
            p_max_profile: None,
        }
    }

    /// Zero-cost curtailable unit following an availability profile.
    pub fn renewable(bus: usize, available: Vec<f64>) -> Self {
        let p_max = available.iter().copied().fold(0.0, f64::max);
        Generator {
            bus,
            p_min: 0.0,
            p_max,
            ramp_up: None,
            ramp_down: None,
            cost: QuadraticCost::ZERO,
            p_max_profile: Some(available),
        }
    }

    pub fn is_renewable(&self) -> bool {
        self.p_max_profile.is_some()
    }

    pub fn p_max_at(&self, step: usize) -> f64 {
        match &self.p_max_profile {
            Some(profile) => profile[step],
            None => self.p_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageDevice {
    pub bus: usize,
    pub ch_max: Vec<f64>,
    pub dc_max: Vec<f64>,
    pub eta_ch: f64,
    pub eta_dc: f64,
    /// Fraction of stored energy lost per step.
    pub self_discharge: f64,
    pub e0: f64,
    pub e_min: Vec<f64>,
    pub e_max: Vec<f64>,
    /// Net charging requirement over the horizon (MWh). Large negative
    /// values such as `-100000` switch the requirement off.
    pub e_req: f64,
}

impl StorageDevice {
    /// Sentinel requirement that can never bind.
    pub const NO_REQUIREMENT: f64 = -100_000.0;

    /// A device with constant limits over `steps` intervals.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(
        bus: usize,
        steps: usize,
        rate: f64,
        e_max: f64,
        e0: f64,
        eta_ch: f64,
        eta_dc: f64,
        self_discharge: f64,
    ) -> Self {
        StorageDevice {
            bus,
            ch_max: vec![rate; steps],
            dc_max: vec![rate; steps],
            eta_ch,
            eta_dc,
            self_discharge,
            e0,
            e_min: vec![0.0; steps],
            e_max: vec![e_max; steps],
            e_req: Self::NO_REQUIREMENT,
        }
    }

    /// ξ = 1 − ε.
    pub fn retention(&self) -> f64 {
        1.0 - self.self_discharge
    }

    pub fn round_trip(&self) -> f64 {
        self.eta_ch * self.eta_dc
    }
}

/// Sign pattern of storage prices for the three dispatch settings the model
/// covers. Serialized as `1`, `2` or `3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum PriceScenario {
    /// Charging and discharging are both costs to the grid: f′ < 0, g′ > 0.
    BothCosts,
    /// Storage costs are ignored: f′ = 0, g′ = 0.
    Neglected,
    /// Storage buys charging energy and is paid for discharging: f′ > 0, g′ > 0.
    StoragePays,
}

impl From<PriceScenario> for u8 {
    fn from(s: PriceScenario) -> u8 {
        match s {
            PriceScenario::BothCosts => 1,
            PriceScenario::Neglected => 2,
            PriceScenario::StoragePays => 3,
        }
    }
}

impl TryFrom<u8> for PriceScenario {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(PriceScenario::BothCosts),
            2 => Ok(PriceScenario::Neglected),
            3 => Ok(PriceScenario::StoragePays),
            _ => Err(format!("price scenario must be 1, 2 or 3, got {v}")),
        }
    }
}

impl PriceScenario {
    /// Whether `(f′, g)` has the signs this scenario prescribes.
    pub fn admits(&self, price: &StoragePrice) -> bool {
        let g_positive = price.g1 > 0.0 || price.g2 > 0.0;
        match self {
            PriceScenario::BothCosts => price.f_slope < 0.0 && g_positive,
            PriceScenario::Neglected => price.f_slope == 0.0 && price.g1 == 0.0 && price.g2 == 0.0,
            PriceScenario::StoragePays => price.f_slope > 0.0 && g_positive,
        }
    }
}

/// Charging fee `f(x) = f′·x` and discharging cost `g(x) = g2·x² + g1·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoragePrice {
    pub f_slope: f64,
    pub g2: f64,
    pub g1: f64,
}

impl StoragePrice {
    pub const ZERO: StoragePrice = StoragePrice {
        f_slope: 0.0,
        g2: 0.0,
        g1: 0.0,
    };

    pub fn new(f_slope: f64, g2: f64, g1: f64) -> Self {
        StoragePrice { f_slope, g2, g1 }
    }

    pub fn charge_fee(&self, x: f64) -> f64 {
        self.f_slope * x
    }

    pub fn discharge_cost(&self, x: f64) -> f64 {
        self.g2 * x * x + self.g1 * x
    }

    pub fn discharge_marginal(&self, x: f64) -> f64 {
        2.0 * self.g2 * x + self.g1
    }

    /// Infimum of g′ over non-negative discharge.
    pub fn discharge_marginal_inf(&self) -> f64 {
        self.g1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    #[serde(default)]
    pub scenario: Option<PriceScenario>,
    /// One entry per storage device, in device order.
    pub storages: Vec<StoragePrice>,
}

impl PriceModel {
    pub fn uniform(scenario: Option<PriceScenario>, price: StoragePrice, count: usize) -> Self {
        PriceModel {
            scenario,
            storages: vec![price; count],
        }
    }

    /// Storage costs neglected for every device.
    pub fn neglected(count: usize) -> Self {
        Self::uniform(Some(PriceScenario::Neglected), StoragePrice::ZERO, count)
    }
}

/// Bus demand, `demand[bus][step]` in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub demand: Vec<Vec<f64>>,
}

impl LoadProfile {
    pub fn total(&self, step: usize) -> f64 {
        self.demand.iter().map(|bus| bus[step]).sum()
    }
}

/// A complete dispatch instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub horizon: Horizon,
    pub network: Network,
    pub generators: Vec<Generator>,
    pub storages: Vec<StorageDevice>,
    pub prices: PriceModel,
    pub loads: LoadProfile,
}

impl NetworkCase {
    /// Stable content hash used to match solutions and oracle results to
    /// the instance they came from.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("case serializes");
        let digest = Sha256::digest(&bytes);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.horizon.steps
    }
}
