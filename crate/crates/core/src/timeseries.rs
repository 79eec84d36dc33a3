//! Hourly time-series inputs: ingestion, validation, and synthesis.
//!
//! Profiles cover generation potential per installed capacity (kWh/kWp),
//! grid electricity price (EUR/kWh), grid carbon intensity (kgCO2/kWh), and
//! the constant industrial load (kWh per hour). The only ingestion format is
//! a two-column CSV with header `hour,value`; a synthetic generator stands
//! in for locations without historic data.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::uncertainty::TruncatedGaussianSpec;

/// Physical ceiling on generation potential per kWp.
pub const MAX_GENERATION_PER_KWP: f64 = 1.5;

/// What an hourly series measures; fixes its validity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    /// kWh generated per hour per kWp installed; must lie in [0, 1.5].
    Generation,
    /// EUR/kWh; may be negative.
    Price,
    /// kgCO2/kWh; nonnegative.
    CarbonIntensity,
    /// kWh per hour; nonnegative.
    Load,
}

impl UnitKind {
    fn check_value(self, v: f64) -> std::result::Result<(), String> {
        if !v.is_finite() {
            return Err(format!("non-finite value {v}"));
        }
        match self {
            UnitKind::Generation => {
                if v < 0.0 {
                    Err(format!("negative generation value {v}"))
                } else if v > MAX_GENERATION_PER_KWP {
                    Err(format!(
                        "generation value {v} exceeds {MAX_GENERATION_PER_KWP} per kWp"
                    ))
                } else {
                    Ok(())
                }
            }
            UnitKind::CarbonIntensity if v < 0.0 => {
                Err(format!("negative carbon intensity {v}"))
            }
            UnitKind::Load if v < 0.0 => Err(format!("negative load {v}")),
            _ => Ok(()),
        }
    }
}

/// A validated hourly series with its unit and source label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyProfile {
    values: Vec<f64>,
    unit: UnitKind,
    label: String,
}

impl HourlyProfile {
    pub fn new(values: Vec<f64>, unit: UnitKind, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("profile must contain at least one hour"));
        }
        for (i, &v) in values.iter().enumerate() {
            unit.check_value(v)
                .map_err(|message| Error::BadValue { row: i + 1, message })?;
        }
        Ok(HourlyProfile {
            values,
            unit,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> UnitKind {
        self.unit
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Two-column CSV with `hour,value` header. Floats use Rust's shortest
    /// round-trip formatting, so ingest(serialize(p)) == p bit for bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 12 + 16);
        out.push_str("hour,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

/// Parse and validate a profile from a `hour,value` CSV stream.
///
/// The stream must hold exactly `horizon` data rows; longer inputs are
/// rejected rather than trimmed.
pub fn ingest_profile_csv<R: Read>(
    source: R,
    expected_units: UnitKind,
    horizon: usize,
    label: impl Into<String>,
) -> Result<HourlyProfile> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty profile CSV"))??;
    if header.trim_end_matches('\r') != "hour,value" {
        return Err(Error::invalid(format!(
            "expected header `hour,value`, found `{}`",
            header.trim_end_matches('\r')
        )));
    }

    let mut values = Vec::with_capacity(horizon);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = idx + 1; // 1-based data row for messages
        if values.len() == horizon {
            return Err(Error::RowCount {
                expected: horizon,
                found: horizon + 1, // at least; enough to reject
            });
        }
        let (hour_str, value_str) = line.split_once(',').ok_or_else(|| Error::BadValue {
            row,
            message: format!("expected `hour,value`, found `{line}`"),
        })?;
        let hour: usize = hour_str.trim().parse().map_err(|_| Error::BadValue {
            row,
            message: format!("unparseable hour `{hour_str}`"),
        })?;
        if hour != values.len() {
            return Err(Error::BadValue {
                row,
                message: format!("hour column expected {}, found {hour}", values.len()),
            });
        }
        let value: f64 = value_str.trim().parse().map_err(|_| Error::BadValue {
            row,
            message: format!("unparseable value `{value_str}`"),
        })?;
        expected_units
            .check_value(value)
            .map_err(|message| Error::BadValue { row, message })?;
        values.push(value);
    }

    if values.len() != horizon {
        return Err(Error::RowCount {
            expected: horizon,
            found: values.len(),
        });
    }
    HourlyProfile::new(values, expected_units, label)
}

/// Which generation technology a dataset describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenTech {
    Wind,
    Solar,
}

/// Historic (or synthetic) generation years for one technology.
#[derive(Debug, Clone)]
pub struct GenerationDataset {
    pub technology: GenTech,
    profiles: BTreeMap<String, Arc<HourlyProfile>>,
}

impl GenerationDataset {
    pub fn new(
        technology: GenTech,
        profiles: BTreeMap<String, Arc<HourlyProfile>>,
    ) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut len = None;
        for (year, p) in &profiles {
            if p.unit() != UnitKind::Generation {
                return Err(Error::invalid(format!(
                    "profile for {year} has unit {:?}, expected generation",
                    p.unit()
                )));
            }
            match len {
                None => len = Some(p.len()),
                Some(l) if l != p.len() => {
                    return Err(Error::invalid(format!(
                        "profile for {year} has length {} but dataset horizon is {l}",
                        p.len()
                    )))
                }
                _ => {}
            }
        }
        Ok(GenerationDataset { technology, profiles })
    }

    pub fn years(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.profiles.values().next().map(|p| p.len()).unwrap_or(0)
    }

    pub fn get(&self, year: &str) -> Option<&Arc<HourlyProfile>> {
        self.profiles.get(year)
    }

    /// Uniform draw of one stored year; the returned profile is the stored
    /// object itself, never an interpolation. Consumes one uniform.
    pub fn sample_year<R: Rng + ?Sized>(&self, rng: &mut R) -> Arc<HourlyProfile> {
        let idx = rng.random_range(0..self.profiles.len());
        self.profiles.values().nth(idx).expect("non-empty").clone()
    }

    /// Fetch by label when wind/solar years are forced to pair up; falls
    /// back to a fresh uniform draw when the label is absent.
    pub fn sample_year_paired<R: Rng + ?Sized>(
        &self,
        label: &str,
        rng: &mut R,
    ) -> Arc<HourlyProfile> {
        match self.profiles.get(label) {
            Some(p) => p.clone(),
            None => self.sample_year(rng),
        }
    }
}

/// Constant industrial load with a truncated-Gaussian level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub mean_kw: f64,
    pub std_kw: f64,
}

impl LoadModel {
    /// Truncation multiple of the load distribution.
    pub const TRUNCATION_SIGMAS: f64 = 2.0;

    pub fn new(mean_kw: f64, std_kw: f64) -> Result<Self> {
        if !(mean_kw > 0.0 && mean_kw.is_finite()) {
            return Err(Error::invalid(format!("load mean must be > 0, got {mean_kw}")));
        }
        if !(std_kw >= 0.0 && std_kw.is_finite()) {
            return Err(Error::invalid(format!("load std must be >= 0, got {std_kw}")));
        }
        Ok(LoadModel { mean_kw, std_kw })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (
            self.mean_kw - Self::TRUNCATION_SIGMAS * self.std_kw,
            self.mean_kw + Self::TRUNCATION_SIGMAS * self.std_kw,
        )
    }

    /// One truncated-Gaussian level draw, held constant over the horizon.
    pub fn sample_load<R: Rng + ?Sized>(&self, rng: &mut R, horizon: usize) -> HourlyProfile {
        let level = if self.std_kw == 0.0 {
            self.mean_kw
        } else {
            TruncatedGaussianSpec::symmetric(self.mean_kw, self.std_kw)
                .expect("validated model")
                .sample(rng)
        };
        HourlyProfile::new(vec![level; horizon], UnitKind::Load, "load")
            .expect("constant positive load")
    }
}

/// Shape parameters for synthetic profiles: a mean level, a mixed
/// diurnal/seasonal sinusoid of the given amplitude, and Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub mean: f64,
    pub amplitude: f64,
    /// Fraction of the amplitude assigned to the 24 h cycle; the rest
    /// follows the annual cycle.
    pub diurnal_weight: f64,
    pub noise_std: f64,
    /// First daylight hour (solar only).
    pub sunrise_hour: u32,
    /// First dark evening hour (solar only).
    pub sunset_hour: u32,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            mean: 0.3,
            amplitude: 0.2,
            diurnal_weight: 0.5,
            noise_std: 0.05,
            sunrise_hour: 6,
            sunset_hour: 20,
        }
    }
}

impl SynthesisParams {
    fn validate(&self, kind: ProfileKind) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "synthesis amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid(format!(
                "synthesis noise std must be >= 0, got {}",
                self.noise_std
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::invalid("synthesis mean must be finite"));
        }
        if !(0.0..=1.0).contains(&self.diurnal_weight) {
            return Err(Error::invalid("diurnal weight must lie in [0, 1]"));
        }
        if kind == ProfileKind::Solar && !(self.sunrise_hour < self.sunset_hour && self.sunset_hour <= 24)
        {
            return Err(Error::invalid(
                "solar synthesis requires sunrise < sunset <= 24",
            ));
        }
        Ok(())
    }
}

/// What kind of series to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Wind,
    Solar,
    Price,
    Carbon,
}

impl ProfileKind {
    pub fn unit(self) -> UnitKind {
        match self {
            ProfileKind::Wind | ProfileKind::Solar => UnitKind::Generation,
            ProfileKind::Price => UnitKind::Price,
            ProfileKind::Carbon => UnitKind::CarbonIntensity,
        }
    }
}

const HOURS_PER_YEAR: f64 = 8760.0;

fn normal_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(u.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16))
}

/// Build a synthetic hourly profile. Deterministic given the generator
/// state; the only randomness is the additive noise term.
pub fn synthesize_profile<R: Rng + ?Sized>(
    kind: ProfileKind,
    horizon: usize,
    params: &SynthesisParams,
    rng: &mut R,
    label: impl Into<String>,
) -> Result<HourlyProfile> {
    params.validate(kind)?;
    let wd = params.diurnal_weight;
    let ws = 1.0 - wd;
    let values: Vec<f64> = (0..horizon)
        .map(|t| {
            let hour_of_day = (t % 24) as f64;
            let diurnal = (std::f64::consts::TAU * hour_of_day / 24.0).sin();
            let seasonal = (std::f64::consts::TAU * t as f64 / HOURS_PER_YEAR).sin();
            let wave = params.amplitude * (wd * diurnal + ws * seasonal);
            match kind {
                ProfileKind::Wind => {
                    let noise = params.noise_std * normal_draw(rng);
                    (params.mean + wave + noise).clamp(0.0, MAX_GENERATION_PER_KWP)
                }
                ProfileKind::Solar => {
                    let h = (t % 24) as u32;
                    if h < params.sunrise_hour || h >= params.sunset_hour {
                        return 0.0;
                    }
                    let day_frac = (h - params.sunrise_hour) as f64
                        / (params.sunset_hour - params.sunrise_hour) as f64;
                    let bell = (std::f64::consts::PI * day_frac).sin();
                    let seasonal_level = params.mean + params.amplitude * ws * seasonal;
                    let noise = params.noise_std * normal_draw(rng);
                    (seasonal_level * bell + noise).clamp(0.0, MAX_GENERATION_PER_KWP)
                }
                ProfileKind::Price => {
                    let noise = params.noise_std * normal_draw(rng);
                    params.mean + wave + noise
                }
                ProfileKind::Carbon => {
                    let noise = params.noise_std * normal_draw(rng);
                    (params.mean + wave + noise).max(0.0)
                }
            }
        })
        .collect();
    HourlyProfile::new(values, kind.unit(), label)
}
