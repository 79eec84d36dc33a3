//! Shared fixtures for integration tests: hand-built scenario sets and
//! system parameters small enough to verify by hand or with the exact
//! simplex oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use energy_park_core::optimizer::builder::SystemParams;
use energy_park_core::scenario::{
    Provenance, Scenario, ScenarioSet, TechDescriptor, TechPerformance,
};
use energy_park_core::timeseries::{GenTech, GenerationDataset, HourlyProfile, LoadModel, UnitKind};
use energy_park_core::uncertainty::{StorageTechnology, TruncatedGaussianSpec};

pub fn profile(values: &[f64], unit: UnitKind) -> HourlyProfile {
    HourlyProfile::new(values.to_vec(), unit, "test").unwrap()
}

pub fn flat(value: f64, unit: UnitKind, len: usize) -> Arc<HourlyProfile> {
    Arc::new(HourlyProfile::new(vec![value; len], unit, "test").unwrap())
}

/// System parameters with unit operations scale, a 0.1 EUR/kWh flat price,
/// zero carbon, and wide caps. Horizon is taken from `price`.
pub fn base_params(price: &[f64]) -> SystemParams {
    SystemParams {
        dt_hours: 1.0,
        soc_initial: 0.0,
        wind_cost_per_kw_yr: 350.0,
        solar_cost_per_kw_yr: 60.0,
        price: profile(price, UnitKind::Price),
        carbon_price: 0.0,
        carbon_intensity: profile(&vec![0.0; price.len()], UnitKind::CarbonIntensity),
        grid_capacity_kw: 1.0e6,
        solar_max_kw: 1.0e6,
        capital_budget_per_yr: 1.0e9,
        operations_scale: 1.0,
        cap_exports: false,
        cyclic_soc: false,
    }
}

pub struct TechSpec {
    pub name: &'static str,
    pub efficiency: f64,
    pub annual_cost_per_kwh: f64,
    pub depth_of_discharge: f64,
    pub discharge_ratio: f64,
}

impl Default for TechSpec {
    fn default() -> Self {
        TechSpec {
            name: "store",
            efficiency: 0.81,
            annual_cost_per_kwh: 7.0,
            depth_of_discharge: 1.0,
            discharge_ratio: 1.0,
        }
    }
}

/// Deterministic scenario set: one row of per-scenario loads, shared wind
/// and solar profiles, and fixed per-technology performance.
pub fn fixed_set(
    loads: &[Vec<f64>],
    wind: &[f64],
    solar: &[f64],
    techs: &[TechSpec],
) -> ScenarioSet {
    let n = loads.len();
    let wind_p = Arc::new(profile(wind, UnitKind::Generation));
    let solar_p = Arc::new(profile(solar, UnitKind::Generation));
    let scenarios = loads
        .iter()
        .map(|load| Scenario {
            probability: 1.0 / n as f64,
            load: Arc::new(profile(load, UnitKind::Load)),
            wind: wind_p.clone(),
            solar: solar_p.clone(),
            performance: techs
                .iter()
                .map(|t| TechPerformance {
                    efficiency: t.efficiency,
                    annual_cost_per_kwh: t.annual_cost_per_kwh,
                })
                .collect(),
        })
        .collect();
    ScenarioSet {
        techs: techs
            .iter()
            .map(|t| TechDescriptor {
                name: t.name.to_string(),
                depth_of_discharge: t.depth_of_discharge,
                discharge_ratio: t.discharge_ratio,
            })
            .collect(),
        scenarios,
        provenance: Provenance::Prior,
    }
}

/// The reference four-technology catalogue with fraction efficiencies.
pub fn reference_catalogue() -> Vec<StorageTechnology> {
    let tech = |name: &str,
                cost: (f64, f64),
                life: (f64, f64),
                eff: (f64, f64),
                dod: f64,
                ratio: f64| StorageTechnology {
        name: name.to_string(),
        cost: TruncatedGaussianSpec::symmetric(cost.0, cost.1).unwrap(),
        lifetime: TruncatedGaussianSpec::symmetric(life.0, life.1).unwrap(),
        efficiency: TruncatedGaussianSpec::symmetric(eff.0, eff.1).unwrap(),
        depth_of_discharge: dod,
        discharge_ratio: ratio,
    };
    vec![
        tech("Li-ion", (200.0, 50.0), (20.0, 5.0), (0.92, 0.035), 0.90, 2.0),
        tech("NaS", (175.0, 37.5), (25.0, 5.0), (0.80, 0.05), 1.0, 1.0),
        tech("VRFB", (250.0, 75.0), (20.0, 5.0), (0.75, 0.05), 1.0, 0.5),
        tech("CAES", (50.0, 15.0), (25.0, 2.5), (0.60, 0.025), 0.40, 0.1),
    ]
}

/// Synthetic generation datasets plus the reference load model, scaled for
/// desk runs (kW units).
pub fn synthetic_inputs(
    horizon: usize,
    years: usize,
    seed: u64,
) -> (GenerationDataset, GenerationDataset, LoadModel) {
    use energy_park_core::rng::stream_indexed;
    use energy_park_core::timeseries::{synthesize_profile, ProfileKind, SynthesisParams};

    let wind_params = SynthesisParams {
        mean: 0.32,
        amplitude: 0.25,
        diurnal_weight: 0.4,
        noise_std: 0.06,
        ..SynthesisParams::default()
    };
    let solar_params = SynthesisParams {
        mean: 0.5,
        amplitude: 0.2,
        diurnal_weight: 0.0,
        noise_std: 0.05,
        ..SynthesisParams::default()
    };
    let mut wind = BTreeMap::new();
    let mut solar = BTreeMap::new();
    for y in 0..years {
        let label = format!("synthetic-{y}");
        wind.insert(
            label.clone(),
            Arc::new(
                synthesize_profile(
                    ProfileKind::Wind,
                    horizon,
                    &wind_params,
                    &mut stream_indexed(seed, "wind-data", y as u64),
                    label.clone(),
                )
                .unwrap(),
            ),
        );
        solar.insert(
            label.clone(),
            Arc::new(
                synthesize_profile(
                    ProfileKind::Solar,
                    horizon,
                    &solar_params,
                    &mut stream_indexed(seed, "solar-data", y as u64),
                    label.clone(),
                )
                .unwrap(),
            ),
        );
    }
    (
        GenerationDataset::new(GenTech::Wind, wind).unwrap(),
        GenerationDataset::new(GenTech::Solar, solar).unwrap(),
        LoadModel::new(250_000.0, 25_000.0).unwrap(),
    )
}

/// Synthetic price and carbon profiles for desk runs.
pub fn synthetic_price_carbon(horizon: usize, seed: u64) -> (HourlyProfile, HourlyProfile) {
    use energy_park_core::rng::stream;
    use energy_park_core::timeseries::{synthesize_profile, ProfileKind, SynthesisParams};
    let price = synthesize_profile(
        ProfileKind::Price,
        horizon,
        &SynthesisParams {
            mean: 0.10,
            amplitude: 0.015,
            diurnal_weight: 0.7,
            noise_std: 0.005,
            ..SynthesisParams::default()
        },
        &mut stream(seed, "price-data"),
        "price",
    )
    .unwrap();
    let carbon = synthesize_profile(
        ProfileKind::Carbon,
        horizon,
        &SynthesisParams {
            mean: 0.25,
            amplitude: 0.15,
            diurnal_weight: 0.5,
            noise_std: 0.02,
            ..SynthesisParams::default()
        },
        &mut stream(seed, "carbon-data"),
        "carbon",
    )
    .unwrap();
    (price, carbon)
}

/// Full desk-scale model: synthetic weather/price data, the reference
/// catalogue, and Rotterdam-style system parameters scaled to the horizon.
pub fn desk_inputs(horizon: usize, seed: u64) -> energy_park_core::pipeline::ModelInputs {
    let (wind, solar, load) = synthetic_inputs(horizon, 4, seed);
    let (price, carbon) = synthetic_price_carbon(horizon, seed);
    let params = SystemParams {
        dt_hours: 1.0,
        soc_initial: 0.75,
        wind_cost_per_kw_yr: 350.0,
        solar_cost_per_kw_yr: 60.0,
        price,
        carbon_price: 1.0,
        carbon_intensity: carbon,
        grid_capacity_kw: 500_000.0,
        solar_max_kw: 500_000.0,
        capital_budget_per_yr: 200.0e6,
        operations_scale: 8760.0 / horizon as f64,
        cap_exports: false,
        // short horizons stand in for a year; without the cyclic condition
        // the free initial charge becomes a scaled-up subsidy
        cyclic_soc: true,
    };
    energy_park_core::pipeline::ModelInputs {
        wind,
        solar,
        load,
        techs: reference_catalogue(),
        params,
    }
}

/// Analysis settings sized for fast integration tests.
pub fn desk_analysis(seed: u64) -> energy_park_core::pipeline::AnalysisSettings {
    energy_park_core::pipeline::AnalysisSettings {
        techs_per_park: 1,
        measurement_samples: 6,
        prior_samples: 10,
        reduced_scenarios: 4,
        uncertainty_reduction: 0.25,
        paired_generation_years: false,
        reuse_prior_reduction: false,
        optionality_cost_per_tech_yr: 1.0e6,
        cvar: None,
        master_seed: seed,
    }
}
