use std::f64::consts::PI;

use crate::casekit::matpower::parse_matpower_subset;
use crate::model::{
    Generator, Horizon, LoadProfile, NetworkCase, PriceModel, QuadraticCost, StorageDevice,
};

const CASE30: &str = include_str!("../../data/case30.m");

pub const IEEE30_STEPS: usize = 96;
pub const IEEE30_DT: f64 = 0.25;

/// (bus number, p_min, p_max, ramp per 15 min, c2, c1)
const UNITS: [(u32, f64, f64, f64, f64, f64); 5] = [
    (1, 20.0, 100.0, 5.0, 0.04, 10.0),
    (13, 40.0, 100.0, 5.0, 0.01, 20.0),
    (22, 20.0, 80.0, 8.0, 0.02, 23.0),
    (23, 20.0, 120.0, 6.0, 0.01, 22.0),
    (27, 20.0, 120.0, 6.0, 0.01, 10.0),
];
const WIND_BUS: u32 = 2;
const STORAGE_COUNT: usize = 50;
const PEAK_LOAD_SHARE: f64 = 0.8;

/// Hourly self-discharge rate of the storage fleet.
pub const HOURLY_SELF_DISCHARGE: f64 = 0.01;

/// Per-step self-discharge equivalent to an hourly rate.
pub fn per_step_self_discharge(hourly: f64, dt: f64) -> f64 {
    1.0 - (1.0 - hourly).powf(dt)
}

/// Synthetic double-peak daily load shape, normalized to a peak of one.
/// `hour` is in [0, 24).
pub fn load_shape(hour: f64) -> f64 {
    raw_load(hour) / raw_load(19.0)
}

fn raw_load(hour: f64) -> f64 {
    let bump = |center: f64, width: f64| (-((hour - center) / width).powi(2)).exp();
    0.55 + 0.30 * bump(10.5, 2.5) + 0.45 * bump(19.0, 2.0)
}

/// Available wind power in MW: 60 MW before dawn, 10 MW mid-afternoon.
pub fn wind_shape(hour: f64) -> f64 {
    35.0 + 25.0 * (2.0 * PI * (hour - 3.0) / 24.0).cos()
}

/// The 30-bus day-ahead scenario: five thermal units, a wind farm at bus 2,
/// fifty storage devices on the load buses and 96 quarter-hour steps.
///
/// Load and wind curves are synthetic. Peak total load is 80% of the
/// thermal capacity, spread over buses in proportion to the nominal
/// demand of the network file. Line ratings are scaled by the same factor
/// as the load so each line keeps its nominal loading. Storage costs are
/// neglected.
pub fn build_ieee30_scenario() -> NetworkCase {
    let mp = parse_matpower_subset(CASE30).expect("embedded case parses");
    let index = |number: u32| {
        mp.bus_numbers
            .iter()
            .position(|&b| b == number)
            .expect("bus present")
    };
    let steps = IEEE30_STEPS;
    let dt = IEEE30_DT;
    let hours: Vec<f64> = (0..steps).map(|t| (t as f64 + 0.5) * dt).collect();

    let mut generators: Vec<Generator> = UNITS
        .iter()
        .map(|&(bus, p_min, p_max, ramp, c2, c1)| {
            Generator::thermal(index(bus), p_min, p_max, ramp, QuadraticCost::new(c2, c1))
        })
        .collect();
    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();
    generators.push(Generator::renewable(
        index(WIND_BUS),
        hours.iter().map(|&h| wind_shape(h)).collect(),
    ));

    let nominal: f64 = mp.demand.iter().sum();
    let peak = PEAK_LOAD_SHARE * capacity;
    let demand = mp
        .demand
        .iter()
        .map(|&d| {
            hours
                .iter()
                .map(|&h| d / nominal * peak * load_shape(h))
                .collect()
        })
        .collect();

    let mut network = mp.network.clone();
    let rating_scale = peak / nominal;
    for line in &mut network.lines {
        line.flow_min *= rating_scale;
        line.flow_max *= rating_scale;
    }

    let pq = mp.pq_buses();
    let eps = per_step_self_discharge(HOURLY_SELF_DISCHARGE, dt);
    let storages: Vec<StorageDevice> = (0..STORAGE_COUNT)
        .map(|k| StorageDevice::constant(pq[k % pq.len()], steps, 2.0, 8.0, 4.0, 0.95, 0.95, eps))
        .collect();

    NetworkCase {
        horizon: Horizon { steps, dt },
        network,
        generators,
        prices: PriceModel::neglected(storages.len()),
        storages,
        loads: LoadProfile { demand },
    }
}
