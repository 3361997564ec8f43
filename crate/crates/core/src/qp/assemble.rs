use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_case, NetworkCase};

/// Model block a constraint row was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// `0 ≤ p_ch ≤ ch_max`
    ChargeBox,
    /// `0 ≤ p_dc ≤ dc_max`
    DischargeBox,
    /// `e_min ≤ E(t) ≤ e_max`
    Energy,
    /// Net charging requirement over the horizon.
    NetCharge,
    /// `E(t) = ξ·E(t−1) + (η_ch·p_ch − p_dc/η_dc)·Δt`
    EnergyRecursion,
    /// `p_min ≤ p_g ≤ p_max(t)`
    GenBox,
    /// `ramp_down ≤ p_g(t+1) − p_g(t) ≤ ramp_up`
    Ramp,
    /// System power balance.
    Balance,
    /// Net device injection at a bus.
    Injection,
    /// DC line flow limits.
    Flow,
}

impl Origin {
    pub fn is_equality(&self) -> bool {
        matches!(
            self,
            Origin::Balance | Origin::EnergyRecursion | Origin::Injection
        )
    }
}

/// A linear constraint `lower ≤ a·x ≤ upper`; infinite bounds are absent
/// sides. `unit` is the storage, generator, line or bus the row belongs to
/// (unused for balance rows) and `step` its time index.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub origin: Origin,
    pub unit: usize,
    pub step: usize,
}

impl Row {
    pub fn is_equality(&self) -> bool {
        self.origin.is_equality()
    }

    /// Number of one-sided inequalities (or 1 for an equality).
    pub fn sides(&self) -> usize {
        if self.is_equality() {
            1
        } else {
            usize::from(self.lower.is_finite()) + usize::from(self.upper.is_finite())
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * x[v]).sum()
    }

    /// Amount by which `x` violates the row, zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let ax = self.eval(x);
        (self.lower - ax).max(ax - self.upper).max(0.0)
    }
}

/// Layout of the decision vector: charge powers, discharge powers,
/// generator outputs, stored energies and bus injections, each block
/// unit-major. Only the first three blocks are free decisions; energies
/// and injections are fixed by equality rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    pub storages: usize,
    pub generators: usize,
    pub steps: usize,
    /// Buses carrying an injection variable.
    pub injections: usize,
}

impl VarIndex {
    pub fn len(&self) -> usize {
        (3 * self.storages + self.generators + self.injections) * self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of power variables (charge, discharge, generation).
    pub fn power_len(&self) -> usize {
        (2 * self.storages + self.generators) * self.steps
    }

    pub fn charge(&self, storage: usize, step: usize) -> usize {
        storage * self.steps + step
    }

    pub fn discharge(&self, storage: usize, step: usize) -> usize {
        (self.storages + storage) * self.steps + step
    }

    pub fn gen(&self, generator: usize, step: usize) -> usize {
        (2 * self.storages + generator) * self.steps + step
    }

    pub fn energy(&self, storage: usize, step: usize) -> usize {
        (2 * self.storages + self.generators + storage) * self.steps + step
    }

    pub fn injection(&self, slot: usize, step: usize) -> usize {
        (3 * self.storages + self.generators + slot) * self.steps + step
    }
}

/// The dispatch QP with the complementarity constraint removed:
/// minimize `½·xᵀ·diag(quad_diag)·x + linearᵀ·x` subject to `rows`.
#[derive(Debug, Clone)]
pub struct RelaxedQP {
    pub case: Arc<NetworkCase>,
    pub index: VarIndex,
    /// Bus of each injection slot.
    pub injection_buses: Vec<usize>,
    pub quad_diag: Vec<f64>,
    pub linear: Vec<f64>,
    pub rows: Vec<Row>,
    box_rows: Vec<usize>,
}

impl RelaxedQP {
    pub fn n_vars(&self) -> usize {
        self.index.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.quad_diag)
            .zip(&self.linear)
            .map(|((&xi, &h), &c)| 0.5 * h * xi * xi + c * xi)
            .sum()
    }

    pub fn rows_with(&self, origin: Origin) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.origin == origin)
    }

    /// Total one-sided inequality count for a block.
    pub fn side_count(&self, origin: Origin) -> usize {
        self.rows_with(origin).map(Row::sides).sum()
    }

    /// Index of the bound row of power variable `var`.
    pub fn box_row(&self, var: usize) -> usize {
        self.box_rows[var]
    }

    /// Pins power variable `var` to zero by closing its upper bound.
    pub fn fix_zero(&mut self, var: usize) {
        let r = self.box_rows[var];
        self.rows[r].upper = 0.0;
    }

    /// Completes a vector of power variables with the stored energies and
    /// bus injections they imply.
    pub fn complete(&self, powers: &[f64]) -> Vec<f64> {
        let idx = self.index;
        let case = &self.case;
        let dt = case.horizon.dt;
        let mut x = powers.to_vec();
        x.resize(self.n_vars(), 0.0);
        for (i, s) in case.storages.iter().enumerate() {
            let mut e = s.e0;
            for t in 0..idx.steps {
                e = s.retention() * e
                    + (s.eta_ch * x[idx.charge(i, t)] - x[idx.discharge(i, t)] / s.eta_dc) * dt;
                x[idx.energy(i, t)] = e;
            }
        }
        for (slot, &bus) in self.injection_buses.iter().enumerate() {
            for t in 0..idx.steps {
                let mut p = 0.0;
                for (k, g) in case.generators.iter().enumerate() {
                    if g.bus == bus {
                        p += x[idx.gen(k, t)];
                    }
                }
                for (i, s) in case.storages.iter().enumerate() {
                    if s.bus == bus {
                        p += x[idx.discharge(i, t)] - x[idx.charge(i, t)];
                    }
                }
                x[idx.injection(slot, t)] = p;
            }
        }
        x
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max)
    }
}

/// Builds the relaxed QP for a validated case.
pub fn assemble_relaxed(case: &NetworkCase) -> Result<RelaxedQP> {
    let report = validate_case(case);
    if !report.is_valid() {
        return Err(Error::InvalidCase(report));
    }
    Ok(assemble_unchecked(Arc::new(case.clone())))
}

fn assemble_unchecked(case: Arc<NetworkCase>) -> RelaxedQP {
    let steps = case.horizon.steps;
    let dt = case.horizon.dt;
    let network = &case.network;
    let limited: Vec<usize> = (0..network.lines.len())
        .filter(|&j| network.lines[j].flow_min.is_finite() || network.lines[j].flow_max.is_finite())
        .collect();
    let injection_buses: Vec<usize> = (0..network.n_buses)
        .filter(|&b| {
            let has_device = case.generators.iter().any(|g| g.bus == b)
                || case.storages.iter().any(|s| s.bus == b);
            has_device && limited.iter().any(|&j| network.gsf[j][b] != 0.0)
        })
        .collect();
    let index = VarIndex {
        storages: case.storages.len(),
        generators: case.generators.len(),
        steps,
        injections: injection_buses.len(),
    };
    let n = index.len();
    let mut quad_diag = vec![0.0; n];
    let mut linear = vec![0.0; n];
    let mut rows = Vec::new();
    let mut box_rows = vec![usize::MAX; index.power_len()];

    // objective: Σ g(p_dc) − f(p_ch) + Σ h(p_g)
    for (i, price) in case.prices.storages.iter().enumerate() {
        for t in 0..steps {
            linear[index.charge(i, t)] = -price.f_slope;
            quad_diag[index.discharge(i, t)] = 2.0 * price.g2;
            linear[index.discharge(i, t)] = price.g1;
        }
    }
    for (k, g) in case.generators.iter().enumerate() {
        for t in 0..steps {
            quad_diag[index.gen(k, t)] = 2.0 * g.cost.c2;
            linear[index.gen(k, t)] = g.cost.c1;
        }
    }

    let push = |rows: &mut Vec<Row>, row: Row| {
        rows.push(row);
        rows.len() - 1
    };

    for (i, s) in case.storages.iter().enumerate() {
        for t in 0..steps {
            let v = index.charge(i, t);
            box_rows[v] = push(
                &mut rows,
                Row {
                    coeffs: vec![(v, 1.0)],
                    lower: 0.0,
                    upper: s.ch_max[t],
                    origin: Origin::ChargeBox,
                    unit: i,
                    step: t,
                },
            );
        }
        for t in 0..steps {
            let v = index.discharge(i, t);
            box_rows[v] = push(
                &mut rows,
                Row {
                    coeffs: vec![(v, 1.0)],
                    lower: 0.0,
                    upper: s.dc_max[t],
                    origin: Origin::DischargeBox,
                    unit: i,
                    step: t,
                },
            );
        }

        let xi = s.retention();
        for t in 0..steps {
            let mut coeffs = vec![
                (index.energy(i, t), 1.0),
                (index.charge(i, t), -s.eta_ch * dt),
                (index.discharge(i, t), dt / s.eta_dc),
            ];
            let carried = if t == 0 {
                xi * s.e0
            } else {
                coeffs.push((index.energy(i, t - 1), -xi));
                0.0
            };
            rows.push(Row {
                coeffs,
                lower: carried,
                upper: carried,
                origin: Origin::EnergyRecursion,
                unit: i,
                step: t,
            });
        }
        for t in 0..steps {
            rows.push(Row {
                coeffs: vec![(index.energy(i, t), 1.0)],
                lower: s.e_min[t],
                upper: s.e_max[t],
                origin: Origin::Energy,
                unit: i,
                step: t,
            });
        }
        if steps > 0 && s.e_req.is_finite() {
            // E(T) − ξᵀ·E⁰ ≥ E_r
            rows.push(Row {
                coeffs: vec![(index.energy(i, steps - 1), 1.0)],
                lower: s.e_req + xi.powi(steps as i32) * s.e0,
                upper: f64::INFINITY,
                origin: Origin::NetCharge,
                unit: i,
                step: steps - 1,
            });
        }
    }

    for (k, g) in case.generators.iter().enumerate() {
        for t in 0..steps {
            let v = index.gen(k, t);
            box_rows[v] = push(
                &mut rows,
                Row {
                    coeffs: vec![(v, 1.0)],
                    lower: g.p_min,
                    upper: g.p_max_at(t),
                    origin: Origin::GenBox,
                    unit: k,
                    step: t,
                },
            );
        }
        if g.ramp_up.is_some() || g.ramp_down.is_some() {
            for t in 0..steps.saturating_sub(1) {
                rows.push(Row {
                    coeffs: vec![(index.gen(k, t + 1), 1.0), (index.gen(k, t), -1.0)],
                    lower: g.ramp_down.unwrap_or(f64::NEG_INFINITY),
                    upper: g.ramp_up.unwrap_or(f64::INFINITY),
                    origin: Origin::Ramp,
                    unit: k,
                    step: t,
                });
            }
        }
    }

    for t in 0..steps {
        let mut coeffs: Vec<(usize, f64)> = (0..index.generators)
            .map(|k| (index.gen(k, t), 1.0))
            .collect();
        for i in 0..index.storages {
            coeffs.push((index.discharge(i, t), 1.0));
            coeffs.push((index.charge(i, t), -1.0));
        }
        let demand = case.loads.total(t);
        rows.push(Row {
            coeffs,
            lower: demand,
            upper: demand,
            origin: Origin::Balance,
            unit: 0,
            step: t,
        });
    }

    for (slot, &bus) in injection_buses.iter().enumerate() {
        for t in 0..steps {
            let mut coeffs = vec![(index.injection(slot, t), 1.0)];
            for (k, g) in case.generators.iter().enumerate() {
                if g.bus == bus {
                    coeffs.push((index.gen(k, t), -1.0));
                }
            }
            for (i, s) in case.storages.iter().enumerate() {
                if s.bus == bus {
                    coeffs.push((index.discharge(i, t), -1.0));
                    coeffs.push((index.charge(i, t), 1.0));
                }
            }
            rows.push(Row {
                coeffs,
                lower: 0.0,
                upper: 0.0,
                origin: Origin::Injection,
                unit: bus,
                step: t,
            });
        }
    }

    for &j in &limited {
        let line = &network.lines[j];
        let shift = &network.gsf[j];
        for t in 0..steps {
            let coeffs = injection_buses
                .iter()
                .enumerate()
                .filter(|&(_, &bus)| shift[bus] != 0.0)
                .map(|(slot, &bus)| (index.injection(slot, t), shift[bus]))
                .collect();
            let load_flow: f64 = shift
                .iter()
                .zip(&case.loads.demand)
                .map(|(g, d)| g * d[t])
                .sum();
            rows.push(Row {
                coeffs,
                lower: line.flow_min + load_flow,
                upper: line.flow_max + load_flow,
                origin: Origin::Flow,
                unit: j,
                step: t,
            });
        }
    }

    RelaxedQP {
        case,
        index,
        injection_buses,
        quad_diag,
        linear,
        rows,
        box_rows,
    }
}
