use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{NetworkCase, PriceScenario};

const GSF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    HorizonSteps,
    HorizonStep,
    BusCount,
    SlackIndex,
    BusIndex,
    LineReactance,
    LineBounds,
    GsfShape,
    GsfSlackColumn,
    GsfMagnitude,
    NoGenerator,
    GeneratorLimits,
    GeneratorCostNotConvex,
    GeneratorRamp,
    GeneratorProfile,
    StorageProfileLength,
    ChargeLimit,
    EfficiencyRange,
    PerfectRoundTrip,
    SelfDischargeRange,
    EnergyBounds,
    InitialEnergy,
    PriceCount,
    DischargeCostNotConvex,
    DischargeCostDecreasing,
    ScenarioSigns,
    LoadShape,
    LoadNotFinite,
    CapacityShortfall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub severity: Severity,
    /// Path of the offending field, e.g. `storages[3].eta_dc`.
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// No error-level violations (warnings allowed).
    pub fn is_valid(&self) -> bool {
        self.violations
            .iter()
            .all(|v| v.severity == Severity::Warning)
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn error(&mut self, code: ViolationCode, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, code: ViolationCode, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            let sev = match v.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "  {sev}: {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a case and reports all violations.
pub fn validate_case(case: &NetworkCase) -> ValidationReport {
    let mut r = ValidationReport::default();
    let steps = case.horizon.steps;
    let n = case.network.n_buses;

    if steps == 0 {
        r.error(
            ViolationCode::HorizonSteps,
            "horizon.steps",
            "horizon must have at least one step",
        );
    }
    if !(case.horizon.dt > 0.0) {
        r.error(
            ViolationCode::HorizonStep,
            "horizon.dt",
            "step length must be positive",
        );
    }
    if n == 0 {
        r.error(
            ViolationCode::BusCount,
            "network.n_buses",
            "network has no buses",
        );
    }
    if case.network.slack >= n.max(1) {
        r.error(
            ViolationCode::SlackIndex,
            "network.slack",
            "slack bus out of range",
        );
    }

    for (j, line) in case.network.lines.iter().enumerate() {
        let field = format!("lines[{j}]");
        if line.from >= n || line.to >= n {
            r.error(
                ViolationCode::BusIndex,
                &field,
                "line endpoint is not a valid bus",
            );
        }
        if !(line.reactance > 0.0) {
            r.error(
                ViolationCode::LineReactance,
                &field,
                "reactance must be positive",
            );
        }
        if !(line.flow_min <= line.flow_max) {
            r.error(
                ViolationCode::LineBounds,
                &field,
                "flow_min exceeds flow_max",
            );
        }
    }

    let gsf = &case.network.gsf;
    if gsf.len() != case.network.lines.len() || gsf.iter().any(|row| row.len() != n) {
        r.error(
            ViolationCode::GsfShape,
            "network.gsf",
            format!(
                "shift factor matrix must be {}×{n}",
                case.network.lines.len()
            ),
        );
    } else {
        for (j, row) in gsf.iter().enumerate() {
            if case.network.slack < n && row[case.network.slack] != 0.0 {
                r.error(
                    ViolationCode::GsfSlackColumn,
                    format!("network.gsf[{j}]"),
                    "slack column must be zero",
                );
            }
            if row
                .iter()
                .any(|g| !g.is_finite() || g.abs() > 1.0 + GSF_TOL)
            {
                r.error(
                    ViolationCode::GsfMagnitude,
                    format!("network.gsf[{j}]"),
                    "shift factor magnitude exceeds one",
                );
            }
        }
    }

    if case.generators.is_empty() {
        r.error(
            ViolationCode::NoGenerator,
            "generators",
            "at least one generator is required",
        );
    }
    for (k, g) in case.generators.iter().enumerate() {
        let field = format!("generators[{k}]");
        if g.bus >= n {
            r.error(
                ViolationCode::BusIndex,
                format!("{field}.bus"),
                "generator bus out of range",
            );
        }
        if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
            r.error(
                ViolationCode::GeneratorLimits,
                &field,
                "need 0 ≤ p_min ≤ p_max",
            );
        }
        if !(g.cost.c2 >= 0.0) || !g.cost.c1.is_finite() {
            r.error(
                ViolationCode::GeneratorCostNotConvex,
                format!("{field}.cost.c2"),
                "generator cost not convex",
            );
        }
        if g.ramp_up.is_some_and(|u| !(u >= 0.0)) || g.ramp_down.is_some_and(|d| !(d <= 0.0)) {
            r.error(
                ViolationCode::GeneratorRamp,
                &field,
                "need ramp_down ≤ 0 ≤ ramp_up",
            );
        }
        if let Some(profile) = &g.p_max_profile {
            if profile.len() != steps {
                r.error(
                    ViolationCode::GeneratorProfile,
                    format!("{field}.p_max_profile"),
                    format!("profile must have {steps} entries"),
                );
            } else if profile.iter().any(|&p| !(p >= g.p_min)) {
                r.error(
                    ViolationCode::GeneratorProfile,
                    format!("{field}.p_max_profile"),
                    "availability below p_min",
                );
            }
        }
    }

    for (i, s) in case.storages.iter().enumerate() {
        let field = format!("storages[{i}]");
        if s.bus >= n {
            r.error(
                ViolationCode::BusIndex,
                format!("{field}.bus"),
                "storage bus out of range",
            );
        }
        for (name, v) in [
            ("ch_max", &s.ch_max),
            ("dc_max", &s.dc_max),
            ("e_min", &s.e_min),
            ("e_max", &s.e_max),
        ] {
            if v.len() != steps {
                r.error(
                    ViolationCode::StorageProfileLength,
                    format!("{field}.{name}"),
                    format!("profile must have {steps} entries"),
                );
            }
        }
        if s.ch_max.iter().chain(&s.dc_max).any(|&p| !(p >= 0.0)) {
            r.error(
                ViolationCode::ChargeLimit,
                &field,
                "power limits must be non-negative",
            );
        }
        let eta_ok = |e: f64| e > 0.0 && e <= 1.0;
        if !eta_ok(s.eta_ch) || !eta_ok(s.eta_dc) {
            r.error(
                ViolationCode::EfficiencyRange,
                &field,
                "efficiencies must lie in (0, 1]",
            );
        } else if !(s.eta_ch * s.eta_dc < 1.0) {
            r.error(
                ViolationCode::PerfectRoundTrip,
                format!("{field}.eta_dc"),
                "perfect round-trip efficiency: eta_ch·eta_dc must be < 1",
            );
        }
        if !(0.0..1.0).contains(&s.self_discharge) {
            r.error(
                ViolationCode::SelfDischargeRange,
                format!("{field}.self_discharge"),
                "self-discharge must lie in [0, 1)",
            );
        }
        if s.e_min
            .iter()
            .zip(&s.e_max)
            .any(|(&lo, &hi)| !(0.0 <= lo && lo <= hi))
        {
            r.error(
                ViolationCode::EnergyBounds,
                &field,
                "need 0 ≤ e_min ≤ e_max",
            );
        }
        if let (Some(&lo), Some(&hi)) = (s.e_min.first(), s.e_max.first()) {
            if !(lo <= s.e0 && s.e0 <= hi) {
                r.error(
                    ViolationCode::InitialEnergy,
                    format!("{field}.e0"),
                    "e0 outside [e_min, e_max]",
                );
            }
        }
        if !s.e_req.is_finite() {
            r.error(
                ViolationCode::EnergyBounds,
                format!("{field}.e_req"),
                "requirement must be finite",
            );
        }
    }

    if case.prices.storages.len() != case.storages.len() {
        r.error(
            ViolationCode::PriceCount,
            "prices.storages",
            format!("need one price entry per storage ({})", case.storages.len()),
        );
    }
    for (i, p) in case.prices.storages.iter().enumerate() {
        let field = format!("prices.storages[{i}]");
        if !(p.g2 >= 0.0) {
            r.error(
                ViolationCode::DischargeCostNotConvex,
                format!("{field}.g2"),
                "discharging cost not convex",
            );
        }
        if !(p.g1 >= 0.0) {
            r.error(
                ViolationCode::DischargeCostDecreasing,
                format!("{field}.g1"),
                "discharging cost decreasing at zero",
            );
        }
        if let Some(scenario) = case.prices.scenario {
            if !scenario.admits(p) {
                let want = match scenario {
                    PriceScenario::BothCosts => "f′ < 0, g′ > 0",
                    PriceScenario::Neglected => "f′ = 0, g′ = 0",
                    PriceScenario::StoragePays => "f′ > 0, g′ > 0",
                };
                r.error(
                    ViolationCode::ScenarioSigns,
                    &field,
                    format!(
                        "prices inconsistent with scenario {} ({want})",
                        u8::from(scenario)
                    ),
                );
            }
        }
    }

    let demand = &case.loads.demand;
    if demand.len() != n || demand.iter().any(|row| row.len() != steps) {
        r.error(
            ViolationCode::LoadShape,
            "loads",
            format!("demand must be {n}×{steps}"),
        );
    } else {
        if demand.iter().flatten().any(|d| !d.is_finite()) {
            r.error(
                ViolationCode::LoadNotFinite,
                "loads",
                "demand entries must be finite",
            );
        }
        for t in 0..steps {
            let generation: f64 = case
                .generators
                .iter()
                .map(|g| match &g.p_max_profile {
                    Some(profile) => profile.get(t).copied().unwrap_or(0.0),
                    None => g.p_max,
                })
                .sum();
            let capacity = generation
                + case
                    .storages
                    .iter()
                    .filter_map(|s| s.dc_max.get(t))
                    .sum::<f64>();
            let load = case.loads.total(t);
            if capacity < load {
                r.warn(
                    ViolationCode::CapacityShortfall,
                    format!("loads[*][{t}]"),
                    format!("peak net load {load:.3} exceeds available capacity {capacity:.3}"),
                );
            }
        }
    }

    r
}
