use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Network, NetworkCase};
use crate::qp::{bus_price, DispatchSolution};

/// Bus prices in $/MWh, `values[bus][step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpSeries {
    pub values: Vec<Vec<f64>>,
}

impl LmpSeries {
    pub fn at(&self, bus: usize, step: usize) -> f64 {
        self.values[bus][step]
    }

    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `LMP_i(t) = λ(t) + Σ_j GSF_{j−i}(μ₁ⱼ(t) − μ₂ⱼ(t))` for every bus.
pub fn compute_lmp(solution: &DispatchSolution, network: &Network) -> LmpSeries {
    let steps = solution.duals.lambda.len();
    let values = (0..network.n_buses)
        .map(|bus| {
            (0..steps)
                .map(|t| bus_price(&solution.duals, network, bus, t))
                .collect()
        })
        .collect();
    LmpSeries { values }
}

/// Forecast bus prices together with the forecaster's mean absolute
/// percentage error (a fraction, so 1% is `0.01`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpForecast {
    pub forecast: Vec<Vec<f64>>,
    pub mape: f64,
}

/// Three-sigma lower bound `forecast − 3·mape·|forecast|`.
///
/// For non-negative forecasts this is `(1 − 3·mape)·forecast`; the absolute
/// value keeps negative forecasts moving down as well.
pub fn lmp_lower_bound(forecast: &LmpForecast) -> LmpSeries {
    let k = 3.0 * forecast.mape;
    let values = forecast
        .forecast
        .iter()
        .map(|row| row.iter().map(|&f| f - k * f.abs()).collect())
        .collect();
    LmpSeries { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Lower bound derived from a price forecast, before dispatch.
    APriori,
    /// Prices recovered from the duals of a solved dispatch.
    APosteriori,
}

/// The prices the conditions are checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpReference {
    pub mode: ReferenceMode,
    pub lmp: LmpSeries,
    /// Realized discharge, `[storage][step]`, when checking a solved dispatch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_dc: Option<Vec<Vec<f64>>>,
}

impl LmpReference {
    pub fn a_priori(forecast: &LmpForecast) -> Self {
        LmpReference {
            mode: ReferenceMode::APriori,
            lmp: lmp_lower_bound(forecast),
            realized_dc: None,
        }
    }

    pub fn a_posteriori(solution: &DispatchSolution, case: &NetworkCase) -> Self {
        LmpReference {
            mode: ReferenceMode::APosteriori,
            lmp: compute_lmp(solution, &case.network),
            realized_dc: Some(solution.p_dc.clone()),
        }
    }

    pub(crate) fn check_shape(&self, case: &NetworkCase) -> Result<()> {
        let steps = case.horizon.steps;
        if self.lmp.values.len() != case.network.n_buses {
            return Err(Error::LengthMismatch {
                what: "price reference buses",
                expected: case.network.n_buses,
                got: self.lmp.values.len(),
            });
        }
        for row in &self.lmp.values {
            if row.len() != steps {
                return Err(Error::LengthMismatch {
                    what: "price reference steps",
                    expected: steps,
                    got: row.len(),
                });
            }
        }
        if let Some(dc) = &self.realized_dc {
            if dc.len() != case.storages.len() {
                return Err(Error::LengthMismatch {
                    what: "realized discharge storages",
                    expected: case.storages.len(),
                    got: dc.len(),
                });
            }
        }
        Ok(())
    }
}
