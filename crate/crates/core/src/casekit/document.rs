use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_gsf, validate_case, Generator, Horizon, Line, LoadProfile, Network, NetworkCase,
    PriceModel, StorageDevice,
};
use crate::relaxation::LmpForecast;

pub const SCHEMA: &str = "edrelax-case/1";

/// On-disk form of a case. Indices are 0-based; powers in MW, energies in
/// MWh, prices in $/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDocument {
    pub schema: String,
    pub horizon: Horizon,
    pub buses: BusesDoc,
    #[serde(default)]
    pub lines: Vec<LineDoc>,
    /// Shift factors `[line][bus]`; derived from reactances when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsf: Option<Vec<Vec<f64>>>,
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub storages: Vec<StorageDoc>,
    pub prices: PriceModel,
    pub loads: LoadProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecasts: Option<LmpForecast>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusesDoc {
    pub count: usize,
    #[serde(default)]
    pub slack: usize,
}

/// A line; a missing or `null` limit is unlimited in that direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
    #[serde(default)]
    pub flow_min: Option<f64>,
    #[serde(default)]
    pub flow_max: Option<f64>,
}

/// A constant or per-step quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Series(Vec<f64>),
}

impl Profile {
    fn from_series(values: &[f64]) -> Self {
        match values.first() {
            Some(&v) if values.iter().all(|&x| x == v) => Profile::Constant(v),
            _ => Profile::Series(values.to_vec()),
        }
    }

    fn expand(&self, steps: usize, path: String) -> Result<Vec<f64>> {
        match self {
            Profile::Constant(v) => Ok(vec![*v; steps]),
            Profile::Series(values) if values.len() == steps => Ok(values.clone()),
            Profile::Series(values) => Err(Error::Schema {
                path,
                message: format!(
                    "expected a number or {steps} entries, found {}",
                    values.len()
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageDoc {
    pub bus: usize,
    pub ch_max: Profile,
    pub dc_max: Profile,
    pub eta_ch: f64,
    pub eta_dc: f64,
    #[serde(default)]
    pub self_discharge: f64,
    pub e0: f64,
    #[serde(default = "zero_profile")]
    pub e_min: Profile,
    pub e_max: Profile,
    #[serde(default = "no_requirement")]
    pub e_req: f64,
}

fn zero_profile() -> Profile {
    Profile::Constant(0.0)
}

fn no_requirement() -> f64 {
    StorageDevice::NO_REQUIREMENT
}

impl CaseDocument {
    pub fn from_case(case: &NetworkCase, forecast: Option<&LmpForecast>) -> Self {
        let net = &case.network;
        let derived = compute_gsf(net.n_buses, &net.lines, net.slack).ok();
        let limit = |v: f64| v.is_finite().then_some(v);
        CaseDocument {
            schema: SCHEMA.to_string(),
            horizon: case.horizon,
            buses: BusesDoc {
                count: net.n_buses,
                slack: net.slack,
            },
            lines: net
                .lines
                .iter()
                .map(|l| LineDoc {
                    from: l.from,
                    to: l.to,
                    reactance: l.reactance,
                    flow_min: limit(l.flow_min),
                    flow_max: limit(l.flow_max),
                })
                .collect(),
            gsf: (derived.as_ref() != Some(&net.gsf)).then(|| net.gsf.clone()),
            generators: case.generators.clone(),
            storages: case
                .storages
                .iter()
                .map(|s| StorageDoc {
                    bus: s.bus,
                    ch_max: Profile::from_series(&s.ch_max),
                    dc_max: Profile::from_series(&s.dc_max),
                    eta_ch: s.eta_ch,
                    eta_dc: s.eta_dc,
                    self_discharge: s.self_discharge,
                    e0: s.e0,
                    e_min: Profile::from_series(&s.e_min),
                    e_max: Profile::from_series(&s.e_max),
                    e_req: s.e_req,
                })
                .collect(),
            prices: case.prices.clone(),
            loads: case.loads.clone(),
            forecasts: forecast.cloned(),
        }
    }

    /// Builds the case without validating it.
    pub fn to_case(&self) -> Result<NetworkCase> {
        if self.schema != SCHEMA {
            return Err(Error::Schema {
                path: "schema".into(),
                message: format!("expected {SCHEMA:?}, found {:?}", self.schema),
            });
        }
        let steps = self.horizon.steps;
        let lines: Vec<Line> = self
            .lines
            .iter()
            .map(|l| Line {
                from: l.from,
                to: l.to,
                reactance: l.reactance,
                flow_min: l.flow_min.unwrap_or(f64::NEG_INFINITY),
                flow_max: l.flow_max.unwrap_or(f64::INFINITY),
            })
            .collect();
        let network = match &self.gsf {
            Some(gsf) => Network::with_gsf(self.buses.count, lines, self.buses.slack, gsf.clone()),
            None => Network::new(self.buses.count, lines, self.buses.slack)?,
        };
        let storages = self
            .storages
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let path = |field: &str| format!("storages[{i}].{field}");
                Ok(StorageDevice {
                    bus: s.bus,
                    ch_max: s.ch_max.expand(steps, path("ch_max"))?,
                    dc_max: s.dc_max.expand(steps, path("dc_max"))?,
                    eta_ch: s.eta_ch,
                    eta_dc: s.eta_dc,
                    self_discharge: s.self_discharge,
                    e0: s.e0,
                    e_min: s.e_min.expand(steps, path("e_min"))?,
                    e_max: s.e_max.expand(steps, path("e_max"))?,
                    e_req: s.e_req,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NetworkCase {
            horizon: self.horizon,
            network,
            generators: self.generators.clone(),
            storages,
            prices: self.prices.clone(),
            loads: self.loads.clone(),
        })
    }
}

/// Parses a case document and its optional price forecast; the case must
/// pass validation.
pub fn parse_case_document(bytes: &[u8]) -> Result<(NetworkCase, Option<LmpForecast>)> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: CaseDocument = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let case = doc.to_case()?;
    let report = validate_case(&case);
    if !report.is_valid() {
        return Err(Error::InvalidCase(report));
    }
    if let Some(f) = &doc.forecasts {
        check_forecast(f, &case)?;
    }
    Ok((case, doc.forecasts))
}

pub fn parse_case(bytes: &[u8]) -> Result<NetworkCase> {
    parse_case_document(bytes).map(|(case, _)| case)
}

pub fn serialize_case(case: &NetworkCase) -> String {
    serialize_case_with_forecast(case, None)
}

pub fn serialize_case_with_forecast(case: &NetworkCase, forecast: Option<&LmpForecast>) -> String {
    serde_json::to_string_pretty(&CaseDocument::from_case(case, forecast)).expect("case serializes")
}

fn check_forecast(f: &LmpForecast, case: &NetworkCase) -> Result<()> {
    if !(f.mape >= 0.0) {
        return Err(Error::Schema {
            path: "forecasts.mape".into(),
            message: "mape must be non-negative".into(),
        });
    }
    let shape_ok = f.forecast.len() == case.network.n_buses
        && f.forecast.iter().all(|row| row.len() == case.horizon.steps);
    if !shape_ok {
        return Err(Error::Schema {
            path: "forecasts.forecast".into(),
            message: format!(
                "forecast must be {}×{} (buses × steps)",
                case.network.n_buses, case.horizon.steps
            ),
        });
    }
    Ok(())
}
