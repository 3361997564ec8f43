use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolution, DefaultSolver, IPSolver, NonnegativeConeT,
    SolverStatus, SupportedConeT, ZeroConeT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::energy_trajectory;
use crate::qp::assemble::{Origin, RelaxedQP, Row};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub cs_tol: f64,
    pub max_iter: u32,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            cs_tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    /// The backend stopped early or its answer misses the tolerances.
    Failed,
}

/// Multipliers of every model constraint.
///
/// Storage series are indexed `[storage][step]`, line series
/// `[line][step]`, generator series `[generator][step]`; ramp series have
/// one entry fewer than the horizon.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    /// Energy balance price, $/MWh.
    pub lambda: Vec<f64>,
    /// `p_ch ≥ 0`
    pub alpha1: Vec<Vec<f64>>,
    /// `p_ch ≤ ch_max`
    pub alpha2: Vec<Vec<f64>>,
    /// `p_dc ≥ 0`
    pub alpha3: Vec<Vec<f64>>,
    /// `p_dc ≤ dc_max`
    pub alpha4: Vec<Vec<f64>>,
    /// `E ≥ e_min`
    pub beta1: Vec<Vec<f64>>,
    /// `E ≤ e_max`
    pub beta2: Vec<Vec<f64>>,
    /// Net charging requirement.
    pub phi: Vec<f64>,
    /// Line flow lower limit.
    pub mu1: Vec<Vec<f64>>,
    /// Line flow upper limit.
    pub mu2: Vec<Vec<f64>>,
    pub gen_lower: Vec<Vec<f64>>,
    pub gen_upper: Vec<Vec<f64>>,
    pub ramp_down: Vec<Vec<f64>>,
    pub ramp_up: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest constraint violation, relative to `1 + |bound|`.
    pub primal_feas: f64,
    /// Largest negative part of an inequality multiplier.
    pub dual_feas: f64,
    /// Largest Lagrangian gradient entry, relative to its largest term.
    pub stationarity: f64,
    /// Largest `multiplier × slack` over inequality sides.
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub case_fingerprint: String,
    pub status: SolveStatus,
    pub objective: f64,
    pub p_ch: Vec<Vec<f64>>,
    pub p_dc: Vec<Vec<f64>>,
    pub p_g: Vec<Vec<f64>>,
    /// Stored energy at the end of each step.
    pub energy: Vec<Vec<f64>>,
    pub duals: DualSolution,
    pub residuals: Residuals,
    pub iterations: u32,
    /// For infeasible instances: the constraint block carrying most of the
    /// infeasibility certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
}

impl DispatchSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn max_complementarity_product(&self) -> f64 {
        self.p_ch
            .iter()
            .zip(&self.p_dc)
            .flat_map(|(c, d)| c.iter().zip(d).map(|(a, b)| a * b))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy)]
enum Side {
    Equal,
    Upper,
    Lower,
}

/// Solves the relaxed QP with a primal-dual interior point method and maps
/// the multipliers back onto the model's named duals.
pub fn solve(qp: &RelaxedQP, settings: &SolveSettings) -> Result<DispatchSolution> {
    let n = qp.n_vars();

    // equality rows first (zero cone), then one row per finite inequality
    // side; a row whose bounds coincide is an equality as well
    let pinned = |row: &Row| row.is_equality() || (row.lower == row.upper && row.upper.is_finite());
    let mut sides: Vec<(usize, Side)> = Vec::new();
    for (r, row) in qp.rows.iter().enumerate() {
        if pinned(row) {
            sides.push((r, Side::Equal));
        }
    }
    let n_eq = sides.len();
    for (r, row) in qp.rows.iter().enumerate() {
        if pinned(row) {
            continue;
        }
        if row.upper.is_finite() {
            sides.push((r, Side::Upper));
        }
        if row.lower.is_finite() {
            sides.push((r, Side::Lower));
        }
    }
    let m = sides.len();

    let mut ai = Vec::new();
    let mut aj = Vec::new();
    let mut av = Vec::new();
    let mut b = Vec::with_capacity(m);
    for (k, &(r, side)) in sides.iter().enumerate() {
        let row = &qp.rows[r];
        let sign = match side {
            Side::Equal | Side::Upper => 1.0,
            Side::Lower => -1.0,
        };
        for &(v, a) in &row.coeffs {
            ai.push(k);
            aj.push(v);
            av.push(sign * a);
        }
        b.push(match side {
            Side::Equal | Side::Upper => row.upper,
            Side::Lower => -row.lower,
        });
    }
    let a = CscMatrix::new_from_triplets(m, n, ai, aj, av);
    let diag: Vec<usize> = (0..n).filter(|&v| qp.quad_diag[v] != 0.0).collect();
    let p = CscMatrix::new_from_triplets(
        n,
        n,
        diag.clone(),
        diag.clone(),
        diag.iter().map(|&v| qp.quad_diag[v]).collect(),
    );
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if n_eq > 0 {
        cones.push(ZeroConeT(n_eq));
    }
    if m > n_eq {
        cones.push(NonnegativeConeT(m - n_eq));
    }

    // tightest profile first; looser ones only when the backend stalls
    let mut last = None;
    for (gap_rel, feas) in BACKEND_PROFILES {
        let backend = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(settings.max_iter)
            .tol_gap_abs(1e-10)
            .tol_gap_rel(gap_rel)
            .tol_feas(feas)
            .tol_ktratio(1e-8)
            .presolve_enable(false)
            .build()
            .map_err(|e| Error::Backend(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &qp.linear, &a, &b, &cones, backend)
            .map_err(|e| Error::Backend(format!("{e:?}")))?;
        solver.solve();
        let sol = finish(qp, settings, &sides, &solver.solution)?;
        if !matches!(sol.status, SolveStatus::Failed | SolveStatus::MaxIter) {
            return Ok(sol);
        }
        last = Some(sol);
    }
    Ok(last.expect("at least one backend profile"))
}

/// Backend (relative gap, feasibility) tolerances, tried in order.
const BACKEND_PROFILES: [(f64, f64); 3] = [(1e-12, 1e-10), (1e-10, 1e-10), (1e-8, 1e-9)];

fn finish(
    qp: &RelaxedQP,
    settings: &SolveSettings,
    sides: &[(usize, Side)],
    result: &DefaultSolution<f64>,
) -> Result<DispatchSolution> {
    let (x, z) = (&result.x, &result.z);
    let mut status = match result.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations => SolveStatus::MaxIter,
        _ => SolveStatus::Failed,
    };

    let idx = qp.index;
    let steps = idx.steps;
    let case = &qp.case;
    let grid = |units: usize, len: usize| vec![vec![0.0; len]; units];
    let mut duals = DualSolution {
        lambda: vec![0.0; steps],
        alpha1: grid(idx.storages, steps),
        alpha2: grid(idx.storages, steps),
        alpha3: grid(idx.storages, steps),
        alpha4: grid(idx.storages, steps),
        beta1: grid(idx.storages, steps),
        beta2: grid(idx.storages, steps),
        phi: vec![0.0; idx.storages],
        mu1: grid(case.network.lines.len(), steps),
        mu2: grid(case.network.lines.len(), steps),
        gen_lower: grid(idx.generators, steps),
        gen_upper: grid(idx.generators, steps),
        ramp_down: grid(idx.generators, steps.saturating_sub(1)),
        ramp_up: grid(idx.generators, steps.saturating_sub(1)),
    };

    let mut residuals = Residuals::default();
    let mut diagnosis = None;

    if status == SolveStatus::Infeasible {
        diagnosis = Some(diagnose(qp, sides, z));
    } else {
        for (k, &(r, side)) in sides.iter().enumerate() {
            let row = &qp.rows[r];
            let (u, t) = (row.unit, row.step);
            // a pinned row's free multiplier belongs to whichever side it pushes
            let (lower, value) = match side {
                Side::Equal => (z[k] < 0.0, z[k].abs()),
                Side::Lower => (true, z[k]),
                Side::Upper => (false, z[k]),
            };
            let slot = match (row.origin, lower) {
                (Origin::Balance, _) => {
                    duals.lambda[t] = -z[k];
                    continue;
                }
                (Origin::EnergyRecursion | Origin::Injection, _) => continue,
                (Origin::ChargeBox, true) => &mut duals.alpha1[u][t],
                (Origin::ChargeBox, false) => &mut duals.alpha2[u][t],
                (Origin::DischargeBox, true) => &mut duals.alpha3[u][t],
                (Origin::DischargeBox, false) => &mut duals.alpha4[u][t],
                (Origin::Energy, true) => &mut duals.beta1[u][t],
                (Origin::Energy, false) => &mut duals.beta2[u][t],
                (Origin::NetCharge, _) => &mut duals.phi[u],
                (Origin::GenBox, true) => &mut duals.gen_lower[u][t],
                (Origin::GenBox, false) => &mut duals.gen_upper[u][t],
                (Origin::Ramp, true) => &mut duals.ramp_down[u][t],
                (Origin::Ramp, false) => &mut duals.ramp_up[u][t],
                (Origin::Flow, true) => &mut duals.mu1[u][t],
                (Origin::Flow, false) => &mut duals.mu2[u][t],
            };
            *slot = value;
        }
        residuals = kkt_check(qp, sides, x, z);
        if status == SolveStatus::Optimal
            && (residuals.primal_feas > settings.primal_tol
                || residuals.dual_feas > settings.dual_tol
                || residuals.stationarity > settings.dual_tol
                || residuals.complementarity > settings.cs_tol)
        {
            status = SolveStatus::Failed;
            diagnosis = Some(format!(
                "solution misses tolerances (backend status {:?}): {residuals:?}",
                result.status
            ));
        }
    }
    if status == SolveStatus::Failed && diagnosis.is_none() {
        diagnosis = Some(format!("backend status {:?}", result.status));
    }

    let series = |f: &dyn Fn(usize, usize) -> usize, units: usize| -> Vec<Vec<f64>> {
        (0..units)
            .map(|u| (0..steps).map(|t| x[f(u, t)]).collect())
            .collect()
    };
    let p_ch = series(&|i, t| idx.charge(i, t), idx.storages);
    let p_dc = series(&|i, t| idx.discharge(i, t), idx.storages);
    let p_g = series(&|k, t| idx.gen(k, t), idx.generators);
    let energy = case
        .storages
        .iter()
        .zip(p_ch.iter().zip(&p_dc))
        .map(|(s, (c, d))| energy_trajectory(s, c, d, case.horizon.dt))
        .collect::<Result<Vec<_>>>()?;

    Ok(DispatchSolution {
        case_fingerprint: case.fingerprint(),
        status,
        objective: qp.objective(x),
        p_ch,
        p_dc,
        p_g,
        energy,
        duals,
        residuals,
        iterations: result.iterations,
        diagnosis,
    })
}

fn kkt_check(qp: &RelaxedQP, sides: &[(usize, Side)], x: &[f64], z: &[f64]) -> Residuals {
    let n = qp.n_vars();
    let mut grad: Vec<f64> = (0..n)
        .map(|v| qp.quad_diag[v] * x[v] + qp.linear[v])
        .collect();
    let mut scale: Vec<f64> = grad.iter().map(|g| g.abs()).collect();
    let mut res = Residuals::default();

    for row in &qp.rows {
        let bound = row.lower.abs().min(row.upper.abs());
        res.primal_feas = res.primal_feas.max(row.violation(x) / (1.0 + bound));
    }
    for (k, &(r, side)) in sides.iter().enumerate() {
        let row = &qp.rows[r];
        let sign = if matches!(side, Side::Lower) {
            -1.0
        } else {
            1.0
        };
        for &(v, a) in &row.coeffs {
            let term = z[k] * sign * a;
            grad[v] += term;
            scale[v] = scale[v].max(term.abs());
        }
        if !matches!(side, Side::Equal) {
            res.dual_feas = res.dual_feas.max(-z[k]);
            let slack = match side {
                Side::Upper => row.upper - row.eval(x),
                _ => row.eval(x) - row.lower,
            };
            res.complementarity = res.complementarity.max((z[k] * slack).abs());
        }
    }
    res.stationarity = grad
        .iter()
        .zip(&scale)
        .map(|(g, s)| g.abs() / (1.0 + s))
        .fold(0.0, f64::max);
    res
}

fn diagnose(qp: &RelaxedQP, sides: &[(usize, Side)], z: &[f64]) -> String {
    let mut weight: Vec<(Origin, f64)> = Vec::new();
    let mut worst: Option<(usize, f64)> = None;
    for (k, &(r, _)) in sides.iter().enumerate() {
        let w = z[k].abs();
        let origin = qp.rows[r].origin;
        match weight.iter_mut().find(|(o, _)| *o == origin) {
            Some(entry) => entry.1 += w,
            None => weight.push((origin, w)),
        }
        if worst.is_none_or(|(_, best)| w > best) {
            worst = Some((r, w));
        }
    }
    let block = weight
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(o, _)| *o);
    match (block, worst) {
        (Some(block), Some((r, _))) => {
            let row = &qp.rows[r];
            format!(
                "infeasible: block {} carries the largest certificate weight; strongest row {:?} unit {} step {}",
                serde_json::to_string(&block).unwrap_or_default().trim_matches('"'),
                row.origin,
                row.unit,
                row.step
            )
        }
        _ => "infeasible".to_string(),
    }
}
