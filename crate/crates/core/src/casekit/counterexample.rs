use crate::model::{
    Generator, Horizon, Line, LoadProfile, Network, NetworkCase, PriceModel, PriceScenario,
    QuadraticCost, StorageDevice, StoragePrice,
};

/// Fee paid by the storage for charging, $/MWh.
pub const COUNTEREXAMPLE_FEE: f64 = 24.0;
/// Marginal discharge cost, $/MWh.
pub const COUNTEREXAMPLE_DISCHARGE_COST: f64 = 25.0;

/// A two-bus, four-step case on which the relaxation is not exact.
///
/// The storage is paid 24 $/MWh for charging and charged 25 $/MWh for
/// discharging, so the discharge cost covers the fee, but the system price
/// stays near 16 $/MWh, below the fee. Starting full, the device can only
/// take the fee by discharging at the same time, which the relaxed model
/// allows and the original model forbids.
pub fn build_counterexample_case() -> NetworkCase {
    let steps = 4;
    let network = Network::new(2, vec![Line::new(0, 1, 0.1, 100.0)], 0).expect("two-bus network");
    let mut storage = StorageDevice::constant(1, steps, 10.0, 20.0, 20.0, 0.9, 0.9, 0.0);
    storage.e_min = vec![0.0; steps];
    NetworkCase {
        horizon: Horizon { steps, dt: 1.0 },
        network,
        generators: vec![Generator {
            bus: 0,
            p_min: 0.0,
            p_max: 200.0,
            ramp_up: None,
            ramp_down: None,
            cost: QuadraticCost::new(0.01, 15.0),
            p_max_profile: None,
        }],
        storages: vec![storage],
        prices: PriceModel::uniform(
            Some(PriceScenario::StoragePays),
            StoragePrice::new(COUNTEREXAMPLE_FEE, 0.0, COUNTEREXAMPLE_DISCHARGE_COST),
            1,
        ),
        loads: LoadProfile {
            demand: vec![vec![0.0; steps], vec![50.0; steps]],
        },
    }
}
