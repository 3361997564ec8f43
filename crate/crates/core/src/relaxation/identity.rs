use serde::{Deserialize, Serialize};

use crate::qp::StorageKktPoint;

/// `(1/η_dc − η_ch)·Γ·Δt + g′ − f′ + α₂ + α₄ − (r_pdc + r_pch)`.
///
/// Adding the two storage stationarity expressions eliminates the price,
/// so this vanishes whenever `α₁ = α₃ = 0` and equals `α₁ + α₃` in general.
pub fn proof_identity_b(point: &StorageKktPoint) -> f64 {
    let p = point;
    let combined = (1.0 / p.eta_dc - p.eta_ch) * p.gamma * p.dt + p.g_prime - p.f_prime
        + p.alpha[1]
        + p.alpha[3];
    combined - (p.discharge_residual() + p.charge_residual())
}

/// `(η_cycle·g′ − f′) + (1 − η_cycle)·LMP + α₂ + η_cycle·α₄
/// − (η_cycle·r_pdc + r_pch)`.
///
/// Weighting the discharge expression by the round-trip efficiency
/// eliminates `Γ`; the result vanishes whenever `α₁ = α₃ = 0` and equals
/// `α₁ + η_cycle·α₃` in general.
pub fn proof_identity_c(point: &StorageKktPoint) -> f64 {
    let p = point;
    let eta = p.eta_ch * p.eta_dc;
    let combined =
        (eta * p.g_prime - p.f_prime) + (1.0 - eta) * p.lmp + p.alpha[1] + eta * p.alpha[3];
    combined - (eta * p.discharge_residual() + p.charge_residual())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simultaneity {
    /// Charging and discharging together would need
    /// `α₂ + η_cycle·α₄ < 0`, which non-negative multipliers cannot meet.
    Infeasible,
    NotExcluded,
}

/// With both powers positive, `α₁ = α₃ = 0` and stationarity force
/// `α₂ + η_cycle·α₄ = −[(η_cycle·g′ − f′) + (1 − η_cycle)·LMP]`; a
/// positive bracket is a contradiction.
pub fn simultaneity(point: &StorageKktPoint) -> Simultaneity {
    let eta = point.eta_ch * point.eta_dc;
    let bracket = (eta * point.g_prime - point.f_prime) + (1.0 - eta) * point.lmp;
    if bracket > 0.0 {
        Simultaneity::Infeasible
    } else {
        Simultaneity::NotExcluded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point() -> StorageKktPoint {
        StorageKktPoint {
            f_prime: 7.0,
            g_prime: 11.0,
            alpha: [0.0, 1.5, 0.0, 2.5],
            eta_ch: 0.9,
            eta_dc: 0.9,
            gamma: 1.0,
            dt: 1.0,
            lmp: 20.0,
        }
    }

    #[test]
    fn identities_vanish_without_lower_bound_multipliers() {
        assert!(proof_identity_b(&point()).abs() < 1e-12);
        assert!(proof_identity_c(&point()).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_multipliers_show_up_as_the_residual() {
        let mut p = point();
        p.alpha[0] = 0.3;
        p.alpha[2] = 0.5;
        assert!((proof_identity_b(&p) - 0.8).abs() < 1e-12);
        assert!((proof_identity_c(&p) - (0.3 + 0.81 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn gamma_coefficient_for_ninety_percent_devices() {
        // only the Γ term survives once prices and multipliers are zero
        let p = StorageKktPoint {
            eta_ch: 0.9,
            eta_dc: 0.9,
            gamma: 1.0,
            dt: 1.0,
            ..Default::default()
        };
        let combined = proof_identity_b(&p) + p.discharge_residual() + p.charge_residual();
        assert!((combined - (1.0 / 0.9 - 0.9)).abs() < 1e-15);
    }

    #[test]
    fn contradiction_under_group_c_prices() {
        let p = StorageKktPoint {
            f_prime: -5.0,
            g_prime: 3.0,
            lmp: 0.0,
            eta_ch: 0.9,
            eta_dc: 0.9,
            ..Default::default()
        };
        assert_eq!(simultaneity(&p), Simultaneity::Infeasible);
        let q = StorageKktPoint {
            f_prime: 24.0,
            g_prime: 25.0,
            lmp: 16.0,
            ..p
        };
        assert_eq!(simultaneity(&q), Simultaneity::NotExcluded);
    }
}
