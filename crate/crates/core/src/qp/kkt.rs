use serde::{Deserialize, Serialize};

use crate::model::{Network, NetworkCase};
use crate::qp::solve::{DispatchSolution, DualSolution};

/// Discounted sum of energy-constraint multipliers, `[storage][step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSeries {
    pub values: Vec<Vec<f64>>,
}

/// `Γ(t) = Σ_{τ≥t} ξ^{τ−t}(β₁(τ) − β₂(τ)) + ξ^{T−t}·φ`, computed backwards
/// as `Γ(t) = β₁(t) − β₂(t) + ξ·Γ(t+1)` with `Γ(T+1) = φ/ξ` folded into the
/// terminal step.
pub fn compute_gamma(solution: &DispatchSolution, case: &NetworkCase) -> GammaSeries {
    let d = &solution.duals;
    let values = case
        .storages
        .iter()
        .enumerate()
        .map(|(i, s)| gamma_recursion(&d.beta1[i], &d.beta2[i], d.phi[i], s.retention()))
        .collect();
    GammaSeries { values }
}

pub fn gamma_recursion(beta1: &[f64], beta2: &[f64], phi: f64, xi: f64) -> Vec<f64> {
    let steps = beta1.len();
    let mut gamma = vec![0.0; steps];
    let mut next = None;
    for t in (0..steps).rev() {
        let carried = match next {
            None => phi,
            Some(g) => xi * g,
        };
        gamma[t] = beta1[t] - beta2[t] + carried;
        next = Some(gamma[t]);
    }
    gamma
}

/// `λ(t) + Σ_j GSF_{j−bus}·(μ₁ⱼ(t) − μ₂ⱼ(t))`
pub fn bus_price(duals: &DualSolution, network: &Network, bus: usize, step: usize) -> f64 {
    duals.lambda[step] + congestion_component(duals, network, bus, step)
}

fn congestion_component(duals: &DualSolution, network: &Network, bus: usize, step: usize) -> f64 {
    network
        .gsf
        .iter()
        .enumerate()
        .map(|(j, row)| row[bus] * (duals.mu1[j][step] - duals.mu2[j][step]))
        .sum()
}

/// Multipliers and prices entering the storage stationarity conditions at
/// one (storage, step).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StorageKktPoint {
    pub f_prime: f64,
    pub g_prime: f64,
    pub alpha: [f64; 4],
    pub eta_ch: f64,
    pub eta_dc: f64,
    pub gamma: f64,
    pub dt: f64,
    pub lmp: f64,
}

impl StorageKktPoint {
    /// ∂L/∂p_ch `= −f′ − α₁ + α₂ − η_ch·Γ·Δt + LMP`
    pub fn charge_residual(&self) -> f64 {
        -self.f_prime - self.alpha[0] + self.alpha[1] - self.eta_ch * self.gamma * self.dt
            + self.lmp
    }

    /// ∂L/∂p_dc `= g′ − α₃ + α₄ + Γ·Δt/η_dc − LMP`
    pub fn discharge_residual(&self) -> f64 {
        self.g_prime - self.alpha[2] + self.alpha[3] + self.gamma * self.dt / self.eta_dc - self.lmp
    }

    fn charge_scale(&self) -> f64 {
        [
            self.f_prime,
            self.alpha[0],
            self.alpha[1],
            self.eta_ch * self.gamma * self.dt,
            self.lmp,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn discharge_scale(&self) -> f64 {
        [
            self.g_prime,
            self.alpha[2],
            self.alpha[3],
            self.gamma * self.dt / self.eta_dc,
            self.lmp,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub r_pch: Vec<Vec<f64>>,
    pub r_pdc: Vec<Vec<f64>>,
    pub r_pg: Vec<Vec<f64>>,
    pub max_abs: f64,
    pub rms: f64,
    /// Largest residual relative to `1 + max |term|` of its equation.
    pub max_normalized: f64,
}

/// Stationarity of the Lagrangian with respect to every power variable,
/// rebuilt from the case data and the named multipliers.
pub fn kkt_residuals(solution: &DispatchSolution, case: &NetworkCase) -> KktResiduals {
    let d = &solution.duals;
    let gamma = compute_gamma(solution, case);
    let steps = case.horizon.steps;
    let dt = case.horizon.dt;
    let network = &case.network;

    let mut all = Vec::new();
    let mut max_normalized = 0.0_f64;
    let mut r_pch = Vec::new();
    let mut r_pdc = Vec::new();
    for (i, s) in case.storages.iter().enumerate() {
        let price = case.prices.storages[i];
        let mut rc = Vec::with_capacity(steps);
        let mut rd = Vec::with_capacity(steps);
        for t in 0..steps {
            let point = StorageKktPoint {
                f_prime: price.f_slope,
                g_prime: price.discharge_marginal(solution.p_dc[i][t]),
                alpha: [
                    d.alpha1[i][t],
                    d.alpha2[i][t],
                    d.alpha3[i][t],
                    d.alpha4[i][t],
                ],
                eta_ch: s.eta_ch,
                eta_dc: s.eta_dc,
                gamma: gamma.values[i][t],
                dt,
                lmp: bus_price(d, network, s.bus, t),
            };
            let (a, b) = (point.charge_residual(), point.discharge_residual());
            max_normalized = max_normalized
                .max(a.abs() / (1.0 + point.charge_scale()))
                .max(b.abs() / (1.0 + point.discharge_scale()));
            rc.push(a);
            rd.push(b);
        }
        all.extend_from_slice(&rc);
        all.extend_from_slice(&rd);
        r_pch.push(rc);
        r_pdc.push(rd);
    }

    let mut r_pg = Vec::new();
    for (k, g) in case.generators.iter().enumerate() {
        let mut rg = Vec::with_capacity(steps);
        for t in 0..steps {
            let mut terms = vec![
                g.cost.derivative(solution.p_g[k][t]),
                -bus_price(d, network, g.bus, t),
                -d.gen_lower[k][t],
                d.gen_upper[k][t],
            ];
            if t > 0 {
                terms.push(d.ramp_up[k][t - 1]);
                terms.push(-d.ramp_down[k][t - 1]);
            }
            if t + 1 < steps {
                terms.push(-d.ramp_up[k][t]);
                terms.push(d.ramp_down[k][t]);
            }
            let r: f64 = terms.iter().sum();
            let scale = terms.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            max_normalized = max_normalized.max(r.abs() / (1.0 + scale));
            rg.push(r);
        }
        all.extend_from_slice(&rg);
        r_pg.push(rg);
    }

    let max_abs = all.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rms = if all.is_empty() {
        0.0
    } else {
        (all.iter().map(|v| v * v).sum::<f64>() / all.len() as f64).sqrt()
    };
    KktResiduals {
        r_pch,
        r_pdc,
        r_pg,
        max_abs,
        rms,
        max_normalized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_multipliers_give_zero_gamma() {
        let g = gamma_recursion(&[0.0; 4], &[0.0; 4], 0.0, 0.99);
        assert_eq!(g, vec![0.0; 4]);
    }

    #[test]
    fn unit_accumulation() {
        let g = gamma_recursion(&[1.0; 3], &[0.0; 3], 0.0, 1.0);
        assert_eq!(g, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn terminal_step_includes_phi() {
        let g = gamma_recursion(&[0.5, 0.25], &[0.0, 1.0], 2.0, 0.9);
        assert_eq!(g[1], 0.25 - 1.0 + 2.0);
        assert!((g[0] - (0.5 + 0.9 * g[1])).abs() < 1e-15);
    }

    #[test]
    fn zeroed_duals_report_the_price() {
        let p = StorageKktPoint {
            f_prime: 24.0,
            eta_ch: 0.9,
            eta_dc: 0.9,
            dt: 1.0,
            ..Default::default()
        };
        assert_eq!(p.charge_residual(), -24.0);
    }
}
