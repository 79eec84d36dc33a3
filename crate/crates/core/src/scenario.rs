//! Joint scenario assembly, annualized capacity costs, and fast-forward
//! scenario reduction.
//!
//! A scenario is one joint draw of industrial load level, wind and solar
//! generation year, and per-technology storage performance (efficiency and
//! annualized capacity cost). Large equiprobable samples are reduced to a
//! small weighted subset by greedy fast-forward selection on the distance
//! between individually optimized scenario costs.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::builder::{DesignSolver, SystemParams};
use crate::optimizer::lp::LpBackend;
use crate::rng::{derive_seed, derive_seed_indexed, stream};
use crate::timeseries::{GenerationDataset, HourlyProfile, LoadModel, UnitKind};
use crate::uncertainty::StorageTechnology;

/// Known, certain ratings of a technology that travel with a scenario set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechDescriptor {
    pub name: String,
    /// Usable fraction of energy capacity.
    pub depth_of_discharge: f64,
    /// Power capacity per unit energy capacity, kW/kWh.
    pub discharge_ratio: f64,
}

/// Realized storage performance of one technology in one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechPerformance {
    /// Round-trip efficiency, fraction.
    pub efficiency: f64,
    /// Annualized capacity cost, EUR/kWh/yr (sampled cost over sampled
    /// lifetime).
    pub annual_cost_per_kwh: f64,
}

/// One joint sample of every uncertain input, with a probability weight.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub probability: f64,
    pub load: Arc<HourlyProfile>,
    pub wind: Arc<HourlyProfile>,
    pub solar: Arc<HourlyProfile>,
    /// Aligned with the owning set's technology list.
    pub performance: Vec<TechPerformance>,
}

/// Where a scenario set came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Prior,
    Posterior(u32),
    Reduced(Box<Provenance>),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Prior => write!(f, "prior"),
            Provenance::Posterior(s) => write!(f, "posterior({s})"),
            Provenance::Reduced(inner) => write!(f, "reduced({inner})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioSet {
    pub techs: Vec<TechDescriptor>,
    pub scenarios: Vec<Scenario>,
    pub provenance: Provenance,
}

impl ScenarioSet {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidScenarioSet("no scenarios".into()));
        }
        let total: f64 = self.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidScenarioSet(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let horizon = self.scenarios[0].load.len();
        for (m, s) in self.scenarios.iter().enumerate() {
            // upper bound carries the same accumulation slack as the sum check
            if !(s.probability > 0.0 && s.probability <= 1.0 + 1e-9) {
                return Err(Error::InvalidScenarioSet(format!(
                    "scenario {m} probability {} outside (0, 1]",
                    s.probability
                )));
            }
            for (p, tag) in [(&s.load, "load"), (&s.wind, "wind"), (&s.solar, "solar")] {
                if p.len() != horizon {
                    return Err(Error::InvalidScenarioSet(format!(
                        "scenario {m} {tag} profile has length {}, expected {horizon}",
                        p.len()
                    )));
                }
            }
            if s.performance.len() != self.techs.len() {
                return Err(Error::InvalidScenarioSet(format!(
                    "scenario {m} carries {} technology draws, expected {}",
                    s.performance.len(),
                    self.techs.len()
                )));
            }
            for (perf, tech) in s.performance.iter().zip(&self.techs) {
                if !(perf.efficiency > 0.0 && perf.efficiency <= 1.0) {
                    return Err(Error::InvalidScenarioSet(format!(
                        "scenario {m} {}: efficiency {} outside (0, 1]",
                        tech.name, perf.efficiency
                    )));
                }
                if !(perf.annual_cost_per_kwh > 0.0) {
                    return Err(Error::InvalidScenarioSet(format!(
                        "scenario {m} {}: annualized cost {} must be > 0",
                        tech.name, perf.annual_cost_per_kwh
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.scenarios.first().map(|s| s.load.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn tech_index(&self, name: &str) -> Option<usize> {
        self.techs.iter().position(|t| t.name == name)
    }

    /// A one-scenario set holding scenario `m` with probability 1.
    pub fn single(&self, m: usize) -> ScenarioSet {
        let mut s = self.scenarios[m].clone();
        s.probability = 1.0;
        ScenarioSet {
            techs: self.techs.clone(),
            scenarios: vec![s],
            provenance: self.provenance.clone(),
        }
    }
}

/// Inputs for converting capital and operating cost into EUR per unit per
/// year of service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualizationInputs {
    pub capex: f64,
    pub opex_per_yr: f64,
    pub lifetime_yr: f64,
}

/// Capital cost per year of lifetime plus annual operating cost.
pub fn annualize(inputs: &AnnualizationInputs) -> Result<f64> {
    if !(inputs.lifetime_yr > 0.0) {
        return Err(Error::invalid(format!(
            "lifetime must be > 0 years, got {}",
            inputs.lifetime_yr
        )));
    }
    if inputs.capex < 0.0 || inputs.opex_per_yr < 0.0 {
        return Err(Error::invalid("capex and opex must be nonnegative"));
    }
    Ok(inputs.capex / inputs.lifetime_yr + inputs.opex_per_yr)
}

/// Knobs for scenario assembly.
#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    /// Force wind and solar to use the same sampled year label.
    pub paired_years: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { paired_years: false }
    }
}

/// Draw `n` equiprobable joint scenarios.
///
/// Every uncertain quantity consumes its own labelled sub-stream keyed by
/// `(base_seed, scenario index, field)`, so marginals can be reproduced in
/// isolation and the same uniforms drive prior- and posterior-parameterized
/// assemblies (common random numbers across the pipeline stages).
pub fn assemble_scenario_set(
    wind: &GenerationDataset,
    solar: &GenerationDataset,
    load: &LoadModel,
    techs: &[StorageTechnology],
    n: usize,
    base_seed: u64,
    provenance: Provenance,
    options: AssemblyOptions,
) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::invalid("scenario count must be at least 1"));
    }
    for t in techs {
        t.validate()?;
    }
    if wind.horizon() != solar.horizon() {
        return Err(Error::invalid(format!(
            "wind horizon {} != solar horizon {}",
            wind.horizon(),
            solar.horizon()
        )));
    }
    let horizon = wind.horizon();
    let rho = 1.0 / n as f64;

    let scenarios = (0..n)
        .map(|m| {
            let seed_m = derive_seed_indexed(base_seed, "scenario", m as u64);
            let wind_profile = wind.sample_year(&mut stream(seed_m, "wind-year"));
            let solar_profile = if options.paired_years {
                solar.sample_year_paired(wind_profile.label(), &mut stream(seed_m, "solar-year"))
            } else {
                solar.sample_year(&mut stream(seed_m, "solar-year"))
            };
            let load_profile = Arc::new(load.sample_load(&mut stream(seed_m, "load"), horizon));
            let performance = techs
                .iter()
                .map(|tech| {
                    let tech_seed = derive_seed(seed_m, &format!("tech:{}", tech.name));
                    let cost = tech.cost.sample(&mut stream(tech_seed, "cost"));
                    let lifetime = tech.lifetime.sample(&mut stream(tech_seed, "lifetime"));
                    let efficiency = tech.sample_efficiency(&mut stream(tech_seed, "efficiency"));
                    TechPerformance {
                        efficiency,
                        annual_cost_per_kwh: cost / lifetime,
                    }
                })
                .collect();
            Scenario {
                probability: rho,
                load: load_profile,
                wind: wind_profile,
                solar: solar_profile,
                performance,
            }
        })
        .collect();

    let set = ScenarioSet {
        techs: techs
            .iter()
            .map(|t| TechDescriptor {
                name: t.name.clone(),
                depth_of_discharge: t.depth_of_discharge,
                discharge_ratio: t.discharge_ratio,
            })
            .collect(),
        scenarios,
        provenance,
    };
    set.validate()?;
    Ok(set)
}

/// Individually optimized total cost of each scenario: the objective of the
/// single-scenario design LP, solved with the full technology list.
/// Failures carry the scenario index.
pub fn scenario_signature(
    set: &ScenarioSet,
    params: &SystemParams,
    backend: &dyn LpBackend,
) -> Result<Vec<f64>> {
    set.validate()?;
    let tech_all: Vec<usize> = (0..set.techs.len()).collect();
    let solver = DesignSolver::new(params, backend);
    (0..set.len())
        .into_par_iter()
        .map(|m| {
            let single = set.single(m);
            let solution = solver
                .optimize(&single, &tech_all, None)
                .map_err(|e| Error::ScenarioSolve { index: m, source: Box::new(e) })?;
            Ok(solution.objective)
        })
        .collect()
}

/// Result of fast-forward reduction.
#[derive(Debug, Clone)]
pub struct ReducedSet {
    pub set: ScenarioSet,
    /// Indices into the input set, in selection order.
    pub selected: Vec<usize>,
    /// Final Kantorovich residual of the selection.
    pub residual: f64,
}

/// Probability-weighted distance of every scenario to its nearest selected
/// representative.
pub fn kantorovich_residual(signature: &[f64], probabilities: &[f64], selected: &[usize]) -> f64 {
    signature
        .iter()
        .zip(probabilities)
        .map(|(&c, &p)| {
            let d = selected
                .iter()
                .map(|&k| (c - signature[k]).abs())
                .fold(f64::INFINITY, f64::min);
            p * d
        })
        .sum()
}

/// Greedy fast-forward pick of `target` representatives on the 1-D distance
/// `|cost_j - cost_k|`, plus the redistributed weights. Ties break toward
/// the lowest index, so selection is deterministic in the input order.
pub fn fast_forward_select(
    signature: &[f64],
    probabilities: &[f64],
    target: usize,
) -> Result<(Vec<usize>, Vec<f64>, f64)> {
    let n = signature.len();
    if probabilities.len() != n {
        return Err(Error::invalid(format!(
            "signature has {n} entries but {} probabilities",
            probabilities.len()
        )));
    }
    if target == 0 || target > n {
        return Err(Error::BadReductionTarget { target, available: n });
    }
    if signature.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("signature costs must be finite"));
    }

    if target == n {
        // identity selection keeps the original weights
        return Ok(((0..n).collect(), probabilities.to_vec(), 0.0));
    }

    let mut selected: Vec<usize> = Vec::with_capacity(target);
    let mut picked = vec![false; n];
    // nearest-selected distance per scenario, infinity before any pick
    let mut dmin = vec![f64::INFINITY; n];
    let mut residual = f64::INFINITY;

    for _ in 0..target {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..n {
            if picked[cand] {
                continue;
            }
            let mut r = 0.0;
            for j in 0..n {
                let d = dmin[j].min((signature[j] - signature[cand]).abs());
                r += probabilities[j] * d;
            }
            let better = match best {
                None => true,
                Some((_, best_r)) => r < best_r,
            };
            if better {
                best = Some((cand, r));
            }
        }
        let (chosen, r) = best.expect("target <= n guarantees a candidate");
        picked[chosen] = true;
        selected.push(chosen);
        residual = r;
        for j in 0..n {
            dmin[j] = dmin[j].min((signature[j] - signature[chosen]).abs());
        }
    }

    // reassign dropped probability to the nearest kept scenario
    let mut weights: Vec<f64> = selected.iter().map(|&k| probabilities[k]).collect();
    for j in 0..n {
        if picked[j] {
            continue;
        }
        let mut nearest = 0usize;
        let mut best_d = f64::INFINITY;
        for (slot, &k) in selected.iter().enumerate() {
            let d = (signature[j] - signature[k]).abs();
            if d < best_d || (d == best_d && selected[nearest] > k) {
                best_d = d;
                nearest = slot;
            }
        }
        weights[nearest] += probabilities[j];
    }
    Ok((selected, weights, residual))
}

/// Fast-forward reduction of a scenario set on its cost signature.
pub fn reduce_scenarios(set: &ScenarioSet, signature: &[f64], target: usize) -> Result<ReducedSet> {
    set.validate()?;
    if signature.len() != set.len() {
        return Err(Error::invalid(format!(
            "signature has {} entries for {} scenarios",
            signature.len(),
            set.len()
        )));
    }
    let probs: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
    let (selected, weights, residual) = fast_forward_select(signature, &probs, target)?;
    let scenarios: Vec<Scenario> = selected
        .iter()
        .zip(&weights)
        .map(|(&k, &w)| {
            let mut s = set.scenarios[k].clone();
            s.probability = w;
            s
        })
        .collect();
    let out = ScenarioSet {
        techs: set.techs.clone(),
        scenarios,
        provenance: Provenance::Reduced(Box::new(set.provenance.clone())),
    };
    out.validate()?;
    Ok(ReducedSet { set: out, selected, residual })
}

/// Serialized form of a set: per-scenario profile CSVs plus a manifest with
/// weights, performance draws, and an optional cached signature.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    provenance: String,
    techs: Vec<TechDescriptor>,
    scenarios: Vec<ManifestScenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signature: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestScenario {
    probability: f64,
    performance: Vec<TechPerformance>,
    load: String,
    wind: String,
    solar: String,
}

/// Write the set (and optionally its signature) as a directory of CSVs plus
/// `manifest.json`.
pub fn save_scenario_dir(set: &ScenarioSet, signature: Option<&[f64]>, dir: &Path) -> Result<()> {
    set.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut manifest = Manifest {
        provenance: set.provenance.to_string(),
        techs: set.techs.clone(),
        scenarios: Vec::with_capacity(set.len()),
        signature: signature.map(|s| s.to_vec()),
    };
    for (m, s) in set.scenarios.iter().enumerate() {
        let files = [
            (format!("scenario_{m}_load.csv"), &s.load),
            (format!("scenario_{m}_wind.csv"), &s.wind),
            (format!("scenario_{m}_solar.csv"), &s.solar),
        ];
        for (name, profile) in &files {
            std::fs::write(dir.join(name), profile.to_csv())?;
        }
        manifest.scenarios.push(ManifestScenario {
            probability: s.probability,
            performance: s.performance.clone(),
            load: files[0].0.clone(),
            wind: files[1].0.clone(),
            solar: files[2].0.clone(),
        });
    }
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Load a set saved by [`save_scenario_dir`]; returns the cached signature
/// when one was stored.
pub fn load_scenario_dir(dir: &Path) -> Result<(ScenarioSet, Option<Vec<f64>>)> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let provenance = parse_provenance(&manifest.provenance)?;
    let mut scenarios = Vec::with_capacity(manifest.scenarios.len());
    for (m, ms) in manifest.scenarios.iter().enumerate() {
        let read = |name: &str, unit: UnitKind, label: &str| -> Result<Arc<HourlyProfile>> {
            let file = std::fs::File::open(dir.join(name))?;
            let text = std::io::read_to_string(file)?;
            let rows = text.lines().count().saturating_sub(1);
            Ok(Arc::new(crate::timeseries::ingest_profile_csv(
                text.as_bytes(),
                unit,
                rows,
                label,
            )?))
        };
        scenarios.push(Scenario {
            probability: ms.probability,
            load: read(&ms.load, UnitKind::Load, &format!("load_{m}"))?,
            wind: read(&ms.wind, UnitKind::Generation, &format!("wind_{m}"))?,
            solar: read(&ms.solar, UnitKind::Generation, &format!("solar_{m}"))?,
            performance: ms.performance.clone(),
        });
    }
    let set = ScenarioSet { techs: manifest.techs, scenarios, provenance };
    set.validate()?;
    Ok((set, manifest.signature))
}

fn parse_provenance(s: &str) -> Result<Provenance> {
    if s == "prior" {
        Ok(Provenance::Prior)
    } else if let Some(rest) = s.strip_prefix("posterior(").and_then(|r| r.strip_suffix(')')) {
        Ok(Provenance::Posterior(rest.parse().map_err(|_| {
            Error::invalid(format!("bad provenance `{s}`"))
        })?))
    } else if let Some(rest) = s.strip_prefix("reduced(").and_then(|r| r.strip_suffix(')')) {
        Ok(Provenance::Reduced(Box::new(parse_provenance(rest)?)))
    } else {
        Err(Error::invalid(format!("bad provenance `{s}`")))
    }
}
