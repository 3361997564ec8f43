use serde::{Deserialize, Serialize};

use crate::qp::DispatchSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductViolation {
    pub storage: usize,
    pub step: usize,
    /// `p_ch·p_dc` in MW².
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub max_product: f64,
    pub tolerance: f64,
    pub violations: Vec<ProductViolation>,
    pub exact: bool,
    /// Oracle objective minus relaxed objective, when an oracle was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
}

/// Checks that no storage charges and discharges in the same step beyond
/// `tol` MW².
pub fn verify_exactness(solution: &DispatchSolution, tol: f64) -> ExactnessReport {
    let mut max_product = 0.0_f64;
    let mut violations = Vec::new();
    for (i, (ch, dc)) in solution.p_ch.iter().zip(&solution.p_dc).enumerate() {
        for (t, (&c, &d)) in ch.iter().zip(dc).enumerate() {
            // interior-point iterates can sit a hair below zero
            let product = c.max(0.0) * d.max(0.0);
            max_product = max_product.max(product);
            if product > tol {
                violations.push(ProductViolation {
                    storage: i,
                    step: t,
                    product,
                });
            }
        }
    }
    ExactnessReport {
        max_product,
        tolerance: tol,
        exact: max_product <= tol,
        violations,
        oracle_gap: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::{DualSolution, Residuals, SolveStatus};

    fn solution(p_ch: Vec<Vec<f64>>, p_dc: Vec<Vec<f64>>) -> DispatchSolution {
        DispatchSolution {
            case_fingerprint: String::new(),
            status: SolveStatus::Optimal,
            objective: 0.0,
            p_ch,
            p_dc,
            p_g: vec![],
            energy: vec![],
            duals: DualSolution::default(),
            residuals: Residuals::default(),
            iterations: 0,
            diagnosis: None,
        }
    }

    #[test]
    fn idle_charging_is_exact() {
        let r = verify_exactness(
            &solution(vec![vec![0.0; 3]], vec![vec![1.0, 2.0, 3.0]]),
            1e-7,
        );
        assert_eq!(r.max_product, 0.0);
        assert!(r.exact && r.violations.is_empty());
    }

    #[test]
    fn simultaneous_operation_is_reported() {
        let r = verify_exactness(
            &solution(
                vec![vec![0.0, 0.5], vec![2.0, 0.0]],
                vec![vec![1.0, 0.5], vec![3.0, 0.0]],
            ),
            1e-7,
        );
        assert!(!r.exact);
        assert_eq!(r.max_product, 6.0);
        let at: Vec<(usize, usize)> = r.violations.iter().map(|v| (v.storage, v.step)).collect();
        assert_eq!(at, vec![(0, 1), (1, 0)]);
    }
}
