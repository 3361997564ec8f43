//! The relaxed dispatch QP: assembly, solution with multipliers, and the
//! stationarity conditions of its Lagrangian.
//!
//! Multiplier signs follow one convention throughout. Every inequality
//! multiplier is non-negative; lower bounds carry the odd-numbered
//! multiplier (`α₁`, `α₃`, `β₁`, `μ₁`) and upper bounds the even one. With
//! `λ(t)` the balance price, the storage stationarity conditions read
//!
//! ```text
//! −f′ − α₁ + α₂ − η_ch·Γ(t)·Δt + LMP = 0
//!  g′ − α₃ + α₄ + Γ(t)·Δt/η_dc − LMP = 0
//! ```
//!
//! where `LMP = λ(t) + Σ_j GSF_{j−i}(μ₁ⱼ(t) − μ₂ⱼ(t))`.

mod assemble;
mod kkt;
mod solve;

pub use assemble::{assemble_relaxed, Origin, RelaxedQP, Row, VarIndex};
pub use kkt::{
    bus_price, compute_gamma, gamma_recursion, kkt_residuals, GammaSeries, KktResiduals,
    StorageKktPoint,
};
pub use solve::{solve, DispatchSolution, DualSolution, Residuals, SolveSettings, SolveStatus};
