//! Storage-concerned economic dispatch with the charge/discharge
//! complementarity constraint relaxed.
//!
//! The crate assembles and solves the relaxed convex QP, recovers every
//! dual multiplier, evaluates the three groups of sufficient conditions
//! under which the relaxation is exact, and cross-checks the result
//! against an exhaustive enumeration of charge/discharge patterns.
//!
//! ```
//! use edrelax::casekit::build_counterexample_case;
//! use edrelax::qp::{assemble_relaxed, solve, SolveSettings};
//! use edrelax::relaxation::verify_exactness;
//!
//! let case = build_counterexample_case();
//! let qp = assemble_relaxed(&case).unwrap();
//! let sol = solve(&qp, &SolveSettings::default()).unwrap();
//! let report = verify_exactness(&sol, 1e-7);
//! assert!(!report.exact);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod casekit;
pub mod error;
pub mod model;
pub mod oracle;
pub mod qp;
pub mod relaxation;

pub use error::{Error, Result};
pub use model::{
    Generator, Horizon, Line, LoadProfile, Network, NetworkCase, PriceModel, PriceScenario,
    QuadraticCost, StorageDevice, StoragePrice,
};
pub use qp::{DispatchSolution, DualSolution, SolveSettings, SolveStatus};
pub use relaxation::{ConditionReport, ExactnessReport, Group, LmpForecast, LmpSeries};
