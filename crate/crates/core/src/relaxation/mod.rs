//! Exactness of the relaxation: locational prices, the three groups of
//! sufficient conditions, a-posteriori verification of the dispatch and
//! the algebraic identities behind the sufficiency arguments.

mod conditions;
mod exactness;
mod identity;
mod lmp;

pub use conditions::{
    check_conditions_a, check_conditions_b, check_conditions_c, recommend_group, ConditionEntry,
    ConditionOptions, ConditionReport, Group, Recommendation,
};
pub use exactness::{verify_exactness, ExactnessReport, ProductViolation};
pub use identity::{proof_identity_b, proof_identity_c, simultaneity, Simultaneity};
pub use lmp::{compute_lmp, lmp_lower_bound, LmpForecast, LmpReference, LmpSeries, ReferenceMode};
