use crate::error::{Error, Result};
use crate::model::StorageDevice;

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::LengthMismatch {
            what,
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// Stored energy at the end of each step.
///
/// `E(t) = ξ^t·E⁰ + Σ_{τ≤t} ξ^{t−τ}·(η_ch·p_ch(τ) − p_dc(τ)/η_dc)·Δt` with
/// `ξ = 1 − ε`, evaluated by the equivalent one-step recursion.
pub fn energy_trajectory(
    storage: &StorageDevice,
    p_ch: &[f64],
    p_dc: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    check_len("p_dc", p_dc, p_ch.len())?;
    let xi = storage.retention();
    let mut energy = storage.e0;
    Ok(p_ch
        .iter()
        .zip(p_dc)
        .map(|(&c, &d)| {
            energy = xi * energy + (storage.eta_ch * c - d / storage.eta_dc) * dt;
            energy
        })
        .collect())
}

/// Left-hand side of the net charging requirement,
/// `Σ_τ ξ^{T−τ}·(η_ch·p_ch(τ) − p_dc(τ)/η_dc)·Δt`, to be compared with `E_r`.
pub fn net_charge_lhs(storage: &StorageDevice, p_ch: &[f64], p_dc: &[f64], dt: f64) -> Result<f64> {
    check_len("p_dc", p_dc, p_ch.len())?;
    let xi = storage.retention();
    Ok(p_ch.iter().zip(p_dc).fold(0.0, |acc, (&c, &d)| {
        xi * acc + (storage.eta_ch * c - d / storage.eta_dc) * dt
    }))
}
