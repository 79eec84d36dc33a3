//! Run configuration files.
//!
//! A run is described by one TOML document: time-series sources (CSV paths
//! or synthetic-profile parameters), the load model, the technology
//! catalogue, system parameters, and analysis settings. Unknown keys are
//! rejected. Defaults follow the Rotterdam-style reference system: 250 MW
//! constant electrolyser load, 500 MW grid and solar caps, a 200 EUR m/yr
//! capital budget, and the four-technology storage catalogue.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::builder::{CvarConfig, SystemParams};
use crate::pipeline::{AnalysisSettings, ModelInputs};
use crate::rng::{derive_seed_indexed, fnv1a, stream};
use crate::scenario::{annualize, AnnualizationInputs};
use crate::timeseries::{
    ingest_profile_csv, synthesize_profile, GenTech, GenerationDataset, HourlyProfile, LoadModel,
    ProfileKind, SynthesisParams, UnitKind,
};
use crate::uncertainty::{StorageTechnology, TruncatedGaussianSpec};

/// Env var overriding `[run] output_dir`.
pub const OUTPUT_DIR_ENV: &str = "EPARK_OUTPUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub horizon: HorizonSection,
    pub load: LoadSection,
    pub generation: GenerationSection,
    pub price: SeriesSection,
    pub carbon: SeriesSection,
    #[serde(default)]
    pub system: SystemSection,
    pub technology: Vec<TechnologySection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
    /// Alternate price/carbon datasets selectable by the `carbon-year`
    /// sensitivity axis.
    #[serde(default)]
    pub cases: BTreeMap<String, CaseSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    pub hours: usize,
    #[serde(default = "default_dt")]
    pub dt_hours: f64,
}

fn default_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    pub mean_kw: f64,
    pub std_kw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSection {
    pub wind: SourceSection,
    pub solar: SourceSection,
}

/// Either a set of per-year CSV files or a synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_files: Option<BTreeMap<String, PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    /// Number of synthetic "years" to generate.
    #[serde(default = "default_profiles")]
    pub profiles: usize,
    pub mean: f64,
    pub amplitude: f64,
    #[serde(default = "default_diurnal_weight")]
    pub diurnal_weight: f64,
    pub noise_std: f64,
    #[serde(default = "default_sunrise")]
    pub sunrise_hour: u32,
    #[serde(default = "default_sunset")]
    pub sunset_hour: u32,
}

fn default_profiles() -> usize {
    10
}
fn default_diurnal_weight() -> f64 {
    0.5
}
fn default_sunrise() -> u32 {
    6
}
fn default_sunset() -> u32 {
    20
}

/// A single series (price or carbon): one CSV or one synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSection {
    pub capex_eur_per_kw: f64,
    pub opex_eur_per_kw_yr: f64,
    pub lifetime_yr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub soc_initial: f64,
    pub wind: AssetSection,
    pub solar: AssetSection,
    pub solar_max_kw: f64,
    pub carbon_price_eur_per_kg: f64,
    pub grid_capacity_kw: f64,
    pub capital_budget_eur_per_yr: f64,
    pub cap_exports: bool,
    pub cyclic_soc: bool,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            soc_initial: 0.75,
            wind: AssetSection {
                capex_eur_per_kw: 5000.0,
                opex_eur_per_kw_yr: 100.0,
                lifetime_yr: 20.0,
            },
            solar: AssetSection {
                capex_eur_per_kw: 1000.0,
                opex_eur_per_kw_yr: 10.0,
                lifetime_yr: 20.0,
            },
            solar_max_kw: 500_000.0,
            carbon_price_eur_per_kg: 1.0,
            grid_capacity_kw: 500_000.0,
            capital_budget_eur_per_yr: 200.0e6,
            cap_exports: false,
            cyclic_soc: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussSection {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologySection {
    pub name: String,
    pub cost_eur_per_kwh: GaussSection,
    pub lifetime_yr: GaussSection,
    pub efficiency: GaussSection,
    pub depth_of_discharge: f64,
    pub discharge_ratio_per_hour: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub techs_per_park: usize,
    pub measurement_samples: usize,
    pub prior_samples: usize,
    pub reduced_scenarios: usize,
    pub uncertainty_reduction: f64,
    pub paired_generation_years: bool,
    pub reuse_prior_reduction: bool,
    pub optionality_cost_eur_per_yr: f64,
    pub price_scale: f64,
    pub carbon_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cvar: Option<CvarSection>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            techs_per_park: 1,
            measurement_samples: 250,
            prior_samples: 250,
            reduced_scenarios: 25,
            uncertainty_reduction: 0.25,
            paired_generation_years: false,
            reuse_prior_reduction: false,
            optionality_cost_eur_per_yr: 1.0e6,
            price_scale: 1.0,
            carbon_scale: 1.0,
            cvar: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvarSection {
    pub alpha: f64,
    pub tail_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub price: SeriesSection,
    pub carbon: SeriesSection,
}

/// Parse and validate a config file. TOML errors keep their line anchors.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut config: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.horizon.hours == 0 {
            return fail("horizon.hours must be positive".into());
        }
        if self.technology.is_empty() {
            return fail("at least one [[technology]] entry is required".into());
        }
        let mut names: Vec<&str> = self.technology.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.technology.len() {
            return fail("technology names must be unique".into());
        }
        for (label, source) in [("wind", &self.generation.wind), ("solar", &self.generation.solar)]
        {
            match (&source.csv_files, &source.synthetic) {
                (Some(_), Some(_)) | (None, None) => {
                    return fail(format!(
                        "generation.{label} must set exactly one of csv_files or synthetic"
                    ))
                }
                (Some(files), None) if files.is_empty() => {
                    return fail(format!("generation.{label}.csv_files is empty"))
                }
                _ => {}
            }
        }
        for (label, series) in [("price", &self.price), ("carbon", &self.carbon)] {
            if series.csv_file.is_some() == series.synthetic.is_some() {
                return fail(format!("{label} must set exactly one of csv_file or synthetic"));
            }
        }
        if !(self.analysis.price_scale > 0.0 && self.analysis.carbon_scale >= 0.0) {
            return fail("price_scale must be > 0 and carbon_scale >= 0".into());
        }
        Ok(())
    }

    /// Stable digest of the configuration content (independent of file
    /// formatting), embedded in every artifact.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(canonical.as_bytes()))
    }

    pub fn analysis_settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            techs_per_park: self.analysis.techs_per_park,
            measurement_samples: self.analysis.measurement_samples,
            prior_samples: self.analysis.prior_samples,
            reduced_scenarios: self.analysis.reduced_scenarios,
            uncertainty_reduction: self.analysis.uncertainty_reduction,
            paired_generation_years: self.analysis.paired_generation_years,
            reuse_prior_reduction: self.analysis.reuse_prior_reduction,
            optionality_cost_per_tech_yr: self.analysis.optionality_cost_eur_per_yr,
            cvar: self
                .analysis
                .cvar
                .as_ref()
                .map(|c| CvarConfig { alpha: c.alpha, tail_weight: c.tail_weight }),
            master_seed: self.run.master_seed,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => {
                if self.run.output_dir.is_absolute() {
                    self.run.output_dir.clone()
                } else {
                    self.base_dir.join(&self.run.output_dir)
                }
            }
        }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn load_generation(&self, tech: GenTech, source: &SourceSection) -> Result<GenerationDataset> {
        let t = self.horizon.hours;
        let kind = match tech {
            GenTech::Wind => ProfileKind::Wind,
            GenTech::Solar => ProfileKind::Solar,
        };
        let label_prefix = match tech {
            GenTech::Wind => "wind",
            GenTech::Solar => "solar",
        };
        let mut profiles = BTreeMap::new();
        if let Some(files) = &source.csv_files {
            for (year, path) in files {
                let file = std::fs::File::open(self.resolve(path))
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let profile = ingest_profile_csv(file, UnitKind::Generation, t, year.clone())?;
                profiles.insert(year.clone(), Arc::new(profile));
            }
        } else if let Some(synth) = &source.synthetic {
            let params = SynthesisParams {
                mean: synth.mean,
                amplitude: synth.amplitude,
                diurnal_weight: synth.diurnal_weight,
                noise_std: synth.noise_std,
                sunrise_hour: synth.sunrise_hour,
                sunset_hour: synth.sunset_hour,
            };
            for idx in 0..synth.profiles.max(1) {
                let label = format!("synthetic-{idx}");
                let seed = derive_seed_indexed(
                    self.run.master_seed,
                    &format!("dataset:{label_prefix}"),
                    idx as u64,
                );
                let profile = synthesize_profile(
                    kind,
                    t,
                    &params,
                    &mut stream(seed, "profile"),
                    label.clone(),
                )?;
                profiles.insert(label, Arc::new(profile));
            }
        }
        GenerationDataset::new(tech, profiles)
    }

    fn load_series(
        &self,
        label: &str,
        series: &SeriesSection,
        kind: ProfileKind,
        scale: f64,
    ) -> Result<HourlyProfile> {
        let t = self.horizon.hours;
        let unit = kind.unit();
        let profile = if let Some(path) = &series.csv_file {
            let file = std::fs::File::open(self.resolve(path))
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            ingest_profile_csv(file, unit, t, label)?
        } else if let Some(synth) = &series.synthetic {
            let params = SynthesisParams {
                mean: synth.mean,
                amplitude: synth.amplitude,
                diurnal_weight: synth.diurnal_weight,
                noise_std: synth.noise_std,
                sunrise_hour: synth.sunrise_hour,
                sunset_hour: synth.sunset_hour,
            };
            let seed = derive_seed_indexed(self.run.master_seed, &format!("dataset:{label}"), 0);
            synthesize_profile(kind, t, &params, &mut stream(seed, "profile"), label)?
        } else {
            unreachable!("validated: exactly one source")
        };
        if scale == 1.0 {
            return Ok(profile);
        }
        let values: Vec<f64> = profile.values().iter().map(|v| v * scale).collect();
        HourlyProfile::new(values, unit, label)
    }

    pub fn technologies(&self) -> Result<Vec<StorageTechnology>> {
        self.technology
            .iter()
            .map(|t| {
                let tech = StorageTechnology {
                    name: t.name.clone(),
                    cost: TruncatedGaussianSpec::symmetric(
                        t.cost_eur_per_kwh.mean,
                        t.cost_eur_per_kwh.std,
                    )?,
                    lifetime: TruncatedGaussianSpec::symmetric(
                        t.lifetime_yr.mean,
                        t.lifetime_yr.std,
                    )?,
                    efficiency: TruncatedGaussianSpec::symmetric(
                        t.efficiency.mean,
                        t.efficiency.std,
                    )?,
                    depth_of_discharge: t.depth_of_discharge,
                    discharge_ratio: t.discharge_ratio_per_hour,
                };
                tech.validate()?;
                Ok(tech)
            })
            .collect()
    }

    /// Build the model inputs, optionally under a named price/carbon case.
    pub fn build_inputs(&self, case: Option<&str>) -> Result<ModelInputs> {
        let (price_section, carbon_section) = match case {
            None => (&self.price, &self.carbon),
            Some(name) => {
                let c = self.cases.get(name).ok_or_else(|| {
                    Error::Config(format!("case `{name}` is not defined in [cases]"))
                })?;
                (&c.price, &c.carbon)
            }
        };
        let price = self.load_series(
            "price",
            price_section,
            ProfileKind::Price,
            self.analysis.price_scale,
        )?;
        let carbon = self.load_series(
            "carbon",
            carbon_section,
            ProfileKind::Carbon,
            self.analysis.carbon_scale,
        )?;
        let wind = self.load_generation(GenTech::Wind, &self.generation.wind)?;
        let solar = self.load_generation(GenTech::Solar, &self.generation.solar)?;
        let load = LoadModel::new(self.load.mean_kw, self.load.std_kw)?;
        let params = SystemParams {
            dt_hours: self.horizon.dt_hours,
            soc_initial: self.system.soc_initial,
            wind_cost_per_kw_yr: annualize(&AnnualizationInputs {
                capex: self.system.wind.capex_eur_per_kw,
                opex_per_yr: self.system.wind.opex_eur_per_kw_yr,
                lifetime_yr: self.system.wind.lifetime_yr,
            })?,
            solar_cost_per_kw_yr: annualize(&AnnualizationInputs {
                capex: self.system.solar.capex_eur_per_kw,
                opex_per_yr: self.system.solar.opex_eur_per_kw_yr,
                lifetime_yr: self.system.solar.lifetime_yr,
            })?,
            price,
            carbon_price: self.system.carbon_price_eur_per_kg,
            carbon_intensity: carbon,
            grid_capacity_kw: self.system.grid_capacity_kw,
            solar_max_kw: self.system.solar_max_kw,
            capital_budget_per_yr: self.system.capital_budget_eur_per_yr,
            // sub-annual horizons stand in for the year pro rata
            operations_scale: crate::optimizer::builder::HOURS_PER_YEAR
                / (self.horizon.hours as f64 * self.horizon.dt_hours),
            cap_exports: self.system.cap_exports,
            cyclic_soc: self.system.cyclic_soc,
        };
        params.validate()?;
        Ok(ModelInputs { wind, solar, load, techs: self.technologies()?, params })
    }
}

/// The four-technology reference catalogue (efficiencies as fractions).
pub fn default_catalogue() -> Vec<TechnologySection> {
    let entry = |name: &str,
                 cost: (f64, f64),
                 life: (f64, f64),
                 eff: (f64, f64),
                 dod: f64,
                 ratio: f64| TechnologySection {
        name: name.to_string(),
        cost_eur_per_kwh: GaussSection { mean: cost.0, std: cost.1 },
        lifetime_yr: GaussSection { mean: life.0, std: life.1 },
        efficiency: GaussSection { mean: eff.0, std: eff.1 },
        depth_of_discharge: dod,
        discharge_ratio_per_hour: ratio,
    };
    vec![
        entry("Li-ion", (200.0, 50.0), (20.0, 5.0), (0.92, 0.035), 0.90, 2.0),
        entry("NaS", (175.0, 37.5), (25.0, 5.0), (0.80, 0.05), 1.0, 1.0),
        entry("VRFB", (250.0, 75.0), (20.0, 5.0), (0.75, 0.05), 1.0, 0.5),
        entry("CAES", (50.0, 15.0), (25.0, 2.5), (0.60, 0.025), 0.40, 0.1),
    ]
}
