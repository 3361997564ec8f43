//! Case construction: the JSON case format, a MATPOWER reader for network
//! data, reference scenarios and seeded random instances.

mod counterexample;
mod document;
mod ieee30;
mod matpower;
mod random;

pub use counterexample::{
    build_counterexample_case, COUNTEREXAMPLE_DISCHARGE_COST, COUNTEREXAMPLE_FEE,
};
pub use document::{
    parse_case, parse_case_document, serialize_case, serialize_case_with_forecast, BusesDoc,
    CaseDocument, LineDoc, Profile, StorageDoc, SCHEMA,
};
pub use ieee30::{
    build_ieee30_scenario, load_shape, per_step_self_discharge, wind_shape, HOURLY_SELF_DISCHARGE,
    IEEE30_DT, IEEE30_STEPS,
};
pub use matpower::{parse_matpower_subset, MatpowerCase};
pub use random::{generate_random, ScenarioSpec, Target};
