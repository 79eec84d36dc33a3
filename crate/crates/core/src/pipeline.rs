//! Two-stage decision analysis: prior design, simulated demonstrator
//! measurements, posterior re-designs with and without technology
//! optionality, and the value-of-information / value-of-optionality
//! estimators.
//!
//! The prior stage assembles one scenario set sampling every catalogue
//! technology, reduces it once on the individually-optimized cost
//! signature, and sizes the park for every admissible technology subset on
//! that common reduced set (so subset costs are comparable by feasible-set
//! inclusion). Each measurement sample then yields conjugate posteriors for
//! all technologies, a posterior scenario set driven by the same uniform
//! streams (common random numbers), and re-optimized designs over either
//! the restricted or the expanded action set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::builder::{
    CvarConfig, DesignSolution, DesignSolver, DesignVariables, SystemParams,
};
use crate::optimizer::lp::LpBackend;
use crate::rng::{derive_seed, derive_seed_indexed, stream, StreamDigest};
use crate::scenario::{
    assemble_scenario_set, reduce_scenarios, scenario_signature, AssemblyOptions, Provenance,
    ReducedSet, ScenarioSet,
};
use crate::timeseries::{GenerationDataset, LoadModel};
use crate::uncertainty::{
    conjugate_posterior, sample_measurement, MeasurementModel, StorageTechnology,
    TruncatedGaussianSpec,
};

/// Everything the pipeline needs about the system under design.
pub struct ModelInputs {
    pub wind: GenerationDataset,
    pub solar: GenerationDataset,
    pub load: LoadModel,
    pub techs: Vec<StorageTechnology>,
    pub params: SystemParams,
}

/// Analysis knobs (catalogue-independent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    /// Technologies installed together in one park (1 or 2).
    pub techs_per_park: usize,
    /// Measurement samples N_z.
    pub measurement_samples: usize,
    /// Scenario draws per stage before reduction.
    pub prior_samples: usize,
    /// Reduced scenario count used by the stochastic program.
    pub reduced_scenarios: usize,
    /// Uncertainty reduction factor r.
    pub uncertainty_reduction: f64,
    pub paired_generation_years: bool,
    /// Reuse the prior stage's reduction indices for posterior sets.
    pub reuse_prior_reduction: bool,
    /// Annualized cost of keeping one extra technology open, EUR/yr.
    pub optionality_cost_per_tech_yr: f64,
    pub cvar: Option<CvarConfig>,
    pub master_seed: u64,
}

impl AnalysisSettings {
    pub fn validate(&self, catalogue_len: usize) -> Result<()> {
        if self.measurement_samples == 0 {
            return Err(Error::invalid("measurement sample count must be at least 1"));
        }
        if self.prior_samples == 0 {
            return Err(Error::invalid("prior sample count must be at least 1"));
        }
        if !(1..=2).contains(&self.techs_per_park) {
            return Err(Error::invalid("techs per park must be 1 or 2"));
        }
        if self.techs_per_park > catalogue_len {
            return Err(Error::invalid(format!(
                "techs per park {} exceeds catalogue size {catalogue_len}",
                self.techs_per_park
            )));
        }
        if self.reduced_scenarios == 0 || self.reduced_scenarios > self.prior_samples {
            return Err(Error::invalid(format!(
                "reduced scenario count {} must lie in [1, {}]",
                self.reduced_scenarios, self.prior_samples
            )));
        }
        if !(self.uncertainty_reduction > 0.0) {
            return Err(Error::invalid("uncertainty reduction factor must be > 0"));
        }
        if let Some(c) = &self.cvar {
            c.validate()?;
        }
        Ok(())
    }
}

/// Sized design plus its cost report for one technology subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub techs: Vec<String>,
    pub design: DesignVariables,
    /// Pipeline objective: expected cost, or the rescaled tail-weighted
    /// cost when CVaR is active.
    pub objective_eur_yr: f64,
    pub expected_cost_eur_yr: f64,
    pub capital_wind_eur_yr: f64,
    pub capital_solar_eur_yr: f64,
    pub capital_storage_eur_yr: f64,
    pub grid_energy_eur_yr: f64,
    pub carbon_cost_eur_yr: f64,
    pub expected_emissions_kg_yr: f64,
    pub provenance: String,
    pub master_seed: u64,
    pub config_digest: String,
}

fn report_from_solution(
    techs: Vec<String>,
    solution: &DesignSolution,
    set: &ScenarioSet,
    master_seed: u64,
    config_digest: &str,
) -> DesignReport {
    let probs: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
    let per = &solution.extract.per_scenario;
    let expect = |f: &dyn Fn(usize) -> f64| -> f64 {
        probs.iter().enumerate().map(|(m, p)| p * f(m)).sum()
    };
    DesignReport {
        techs,
        design: solution.extract.design.clone(),
        objective_eur_yr: solution.objective,
        expected_cost_eur_yr: solution.extract.expected_cost,
        capital_wind_eur_yr: expect(&|m| per[m].capital_wind),
        capital_solar_eur_yr: expect(&|m| per[m].capital_solar),
        capital_storage_eur_yr: expect(&|m| per[m].capital_storage),
        grid_energy_eur_yr: expect(&|m| per[m].grid_energy),
        carbon_cost_eur_yr: expect(&|m| per[m].carbon),
        expected_emissions_kg_yr: solution.extract.expected_emissions_kg,
        provenance: set.provenance.to_string(),
        master_seed,
        config_digest: config_digest.to_string(),
    }
}

/// Prior-stage output: one report per subset, the no-storage baseline, and
/// the common reduced scenario set they were all sized on.
#[derive(Debug)]
pub struct PriorStage {
    pub reports: Vec<DesignReport>,
    pub baseline: DesignReport,
    pub best: usize,
    pub subsets: Vec<Vec<usize>>,
    pub reduced: ReducedSet,
    pub signature: Vec<f64>,
}

impl PriorStage {
    pub fn best_report(&self) -> &DesignReport {
        &self.reports[self.best]
    }

    pub fn best_subset(&self) -> &[usize] {
        &self.subsets[self.best]
    }
}

/// Which designs a posterior re-design may choose from.
#[derive(Debug, Clone)]
pub enum ActionSet {
    /// Only the subset committed at the prior stage.
    Restricted(Vec<usize>),
    /// Every admissible technology subset.
    Expanded,
}

/// One measurement sample's outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub cost_eur_yr: f64,
    pub techs: Vec<String>,
    pub design: DesignVariables,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Pre-posterior estimate: mean optimum over measurement samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepostOutcome {
    pub mean_cost_eur_yr: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub failed: usize,
    pub records: Vec<SampleRecord>,
    /// FNV digest of the measurement stream, for common-random-number
    /// verification between restricted and expanded runs.
    pub z_digest: String,
    pub config_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoiResult {
    pub prior_cost_eur_yr: f64,
    pub preposterior_mean_eur_yr: f64,
    pub evii_eur_yr: f64,
    pub standard_error: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSwitch {
    pub sample: usize,
    pub restricted_cost_eur_yr: f64,
    pub expanded_cost_eur_yr: f64,
    pub restricted_techs: Vec<String>,
    pub expanded_techs: Vec<String>,
    pub switched: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VooResult {
    pub restricted_mean_eur_yr: f64,
    pub expanded_mean_eur_yr: f64,
    pub evo_eur_yr: f64,
    pub standard_error: f64,
    pub switch_fraction: f64,
    /// Annualized cost of keeping the extra technologies open; reporting
    /// input only, never optimized over.
    pub optionality_cost_eur_yr: f64,
    pub net_evo_eur_yr: f64,
    pub switches: Vec<SampleSwitch>,
}

/// The pipeline: immutable inputs, analysis settings, and a solver backend.
pub struct Pipeline<'a> {
    pub inputs: &'a ModelInputs,
    pub analysis: &'a AnalysisSettings,
    pub backend: &'a dyn LpBackend,
    pub config_digest: String,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        inputs: &'a ModelInputs,
        analysis: &'a AnalysisSettings,
        backend: &'a dyn LpBackend,
        config_digest: String,
    ) -> Result<Self> {
        analysis.validate(inputs.techs.len())?;
        inputs.params.validate()?;
        for t in &inputs.techs {
            t.validate()?;
        }
        Ok(Pipeline { inputs, analysis, backend, config_digest })
    }

    fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions { paired_years: self.analysis.paired_generation_years }
    }

    /// Every admissible technology subset (catalogue indices, ascending).
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        let n = self.inputs.techs.len();
        match self.analysis.techs_per_park {
            1 => (0..n).map(|i| vec![i]).collect(),
            2 => {
                let mut out = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        out.push(vec![i, j]);
                    }
                }
                out
            }
            _ => unreachable!("validated to 1 or 2"),
        }
    }

    fn subset_names(&self, subset: &[usize]) -> Vec<String> {
        subset.iter().map(|&i| self.inputs.techs[i].name.clone()).collect()
    }

    /// Assemble the prior scenario set, compute its signature, and reduce
    /// it. Shared by the prior design and the dispatch-trace command.
    pub fn prior_reduced_set(&self) -> Result<(ReducedSet, Vec<f64>)> {
        let scen_seed = derive_seed(self.analysis.master_seed, "scenario-uniforms");
        let full = assemble_scenario_set(
            &self.inputs.wind,
            &self.inputs.solar,
            &self.inputs.load,
            &self.inputs.techs,
            self.analysis.prior_samples,
            scen_seed,
            Provenance::Prior,
            self.assembly_options(),
        )?;
        let signature = scenario_signature(&full, &self.inputs.params, self.backend)?;
        let reduced = reduce_scenarios(&full, &signature, self.analysis.reduced_scenarios)?;
        Ok((reduced, signature))
    }

    /// Assemble, reduce, and solve the prior problem for every subset plus
    /// the no-storage baseline. All subsets share the reduced set.
    pub fn prior_design(&self) -> Result<PriorStage> {
        let (reduced, signature) = self.prior_reduced_set()?;

        let solver = DesignSolver::new(&self.inputs.params, self.backend);
        let cvar = self.analysis.cvar.as_ref();
        let subsets = self.subsets();

        let baseline_solution = solver
            .optimize(&reduced.set, &[], cvar)
            .map_err(|e| Error::SubsetSolve { subset: "none".into(), source: Box::new(e) })?;
        let baseline = report_from_solution(
            vec![],
            &baseline_solution,
            &reduced.set,
            self.analysis.master_seed,
            &self.config_digest,
        );

        let solutions: Vec<DesignSolution> = subsets
            .par_iter()
            .map(|subset| {
                solver.optimize(&reduced.set, subset, cvar).map_err(|e| Error::SubsetSolve {
                    subset: self.subset_names(subset).join("+"),
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        let reports: Vec<DesignReport> = subsets
            .iter()
            .zip(&solutions)
            .map(|(subset, solution)| {
                report_from_solution(
                    self.subset_names(subset),
                    solution,
                    &reduced.set,
                    self.analysis.master_seed,
                    &self.config_digest,
                )
            })
            .collect();

        // minimum objective, ties broken lexicographically by names
        let best = (0..reports.len())
            .min_by(|&a, &b| {
                reports[a]
                    .objective_eur_yr
                    .total_cmp(&reports[b].objective_eur_yr)
                    .then_with(|| reports[a].techs.cmp(&reports[b].techs))
            })
            .expect("at least one subset");

        Ok(PriorStage { reports, baseline, best, subsets, reduced, signature })
    }

    /// Draw the demonstrator measurements for sample `s` and form the
    /// conjugate posteriors for every catalogue technology. The z values
    /// are pushed into `digest` in catalogue order.
    fn sample_posteriors(
        &self,
        s: usize,
        digest: &mut StreamDigest,
    ) -> Result<Vec<StorageTechnology>> {
        let r = self.analysis.uncertainty_reduction;
        let sample_seed =
            derive_seed_indexed(self.analysis.master_seed, "measurement-sample", s as u64);
        self.inputs
            .techs
            .iter()
            .map(|tech| {
                let mut posterior_of = |label: &str,
                                        prior: &TruncatedGaussianSpec|
                 -> Result<TruncatedGaussianSpec> {
                    let seed = derive_seed(sample_seed, &format!("{}:{label}", tech.name));
                    let theta = prior.sample(&mut stream(seed, "truth"));
                    let model = MeasurementModel::for_prior(prior, r)?;
                    let z = sample_measurement(theta, prior, &model, &mut stream(seed, "noise"))?;
                    digest.push(z);
                    conjugate_posterior(prior, z, &model)
                };
                Ok(StorageTechnology {
                    name: tech.name.clone(),
                    cost: posterior_of("cost", &tech.cost)?,
                    lifetime: posterior_of("lifetime", &tech.lifetime)?,
                    efficiency: posterior_of("efficiency", &tech.efficiency)?,
                    depth_of_discharge: tech.depth_of_discharge,
                    discharge_ratio: tech.discharge_ratio,
                })
            })
            .collect()
    }

    /// One posterior re-design: assemble the posterior scenario set, reduce
    /// it (fresh signature or the prior stage's indices), and optimize over
    /// the action set.
    fn solve_sample(
        &self,
        s: usize,
        action: &ActionSet,
        prior: &PriorStage,
    ) -> Result<(f64, Vec<String>, DesignVariables, StreamDigest)> {
        let mut digest = StreamDigest::new();
        let posteriors = self.sample_posteriors(s, &mut digest)?;
        let scen_seed = derive_seed(self.analysis.master_seed, "scenario-uniforms");
        let full = assemble_scenario_set(
            &self.inputs.wind,
            &self.inputs.solar,
            &self.inputs.load,
            &posteriors,
            self.analysis.prior_samples,
            scen_seed,
            Provenance::Posterior(s as u32),
            self.assembly_options(),
        )?;
        let reduced = if self.analysis.reuse_prior_reduction {
            reuse_reduction(&full, prior)?
        } else {
            let signature = scenario_signature(&full, &self.inputs.params, self.backend)?;
            reduce_scenarios(&full, &signature, self.analysis.reduced_scenarios)?
        };

        let solver = DesignSolver::new(&self.inputs.params, self.backend);
        let cvar = self.analysis.cvar.as_ref();
        let candidates: Vec<Vec<usize>> = match action {
            ActionSet::Restricted(subset) => vec![subset.clone()],
            ActionSet::Expanded => self.subsets(),
        };
        let mut best: Option<(f64, Vec<String>, DesignVariables)> = None;
        for subset in candidates {
            let solution = solver.optimize(&reduced.set, &subset, cvar).map_err(|e| {
                Error::SubsetSolve {
                    subset: self.subset_names(&subset).join("+"),
                    source: Box::new(e),
                }
            })?;
            let names = self.subset_names(&subset);
            let replace = match &best {
                None => true,
                Some((cost, best_names, _)) => {
                    solution.objective < *cost
                        || (solution.objective == *cost && names < *best_names)
                }
            };
            if replace {
                best = Some((solution.objective, names, solution.extract.design.clone()));
            }
        }
        let (cost, names, design) = best.expect("at least one candidate subset");
        Ok((cost, names, design, digest))
    }

    /// Mean posterior optimum over the measurement samples (Monte Carlo
    /// over z). Per-sample failures are recorded and excluded; more than 1%
    /// failing aborts the run.
    pub fn preposterior_value(
        &self,
        action: &ActionSet,
        prior: &PriorStage,
    ) -> Result<PrepostOutcome> {
        let n = self.analysis.measurement_samples;
        let results: Vec<(SampleRecord, Option<StreamDigest>)> = (0..n)
            .into_par_iter()
            .map(|s| match self.solve_sample(s, action, prior) {
                Ok((cost, techs, design, digest)) => (
                    SampleRecord { sample: s, cost_eur_yr: cost, techs, design, error: None },
                    Some(digest),
                ),
                Err(e) => (
                    SampleRecord {
                        sample: s,
                        cost_eur_yr: f64::NAN,
                        techs: vec![],
                        design: DesignVariables::zero(),
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            })
            .collect();

        let failed = results.iter().filter(|(r, _)| r.error.is_some()).count();
        if failed * 100 > n {
            let first = results
                .iter()
                .find_map(|(r, _)| r.error.clone())
                .unwrap_or_default();
            return Err(Error::TooManyFailures { failed, total: n, first });
        }
        for (record, _) in results.iter().filter(|(r, _)| r.error.is_some()) {
            eprintln!(
                "warning: measurement sample {} failed and was excluded: {}",
                record.sample,
                record.error.as_deref().unwrap_or("unknown")
            );
        }

        let costs: Vec<f64> = results
            .iter()
            .filter(|(r, _)| r.error.is_none())
            .map(|(r, _)| r.cost_eur_yr)
            .collect();
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        let standard_error = if costs.len() > 1 {
            let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
                / (costs.len() - 1) as f64;
            (var / costs.len() as f64).sqrt()
        } else {
            0.0
        };

        // digest over samples in index order; failed samples contribute a
        // placeholder so both action sets stay aligned
        let mut z_digest = StreamDigest::new();
        for (record, digest) in &results {
            match digest {
                Some(d) => z_digest.push(f64::from_bits(d.value())),
                None => z_digest.push(f64::from_bits(record.sample as u64)),
            }
        }

        Ok(PrepostOutcome {
            mean_cost_eur_yr: mean,
            standard_error,
            samples: n,
            failed,
            records: results.into_iter().map(|(r, _)| r).collect(),
            z_digest: format!("{:016x}", z_digest.value()),
            config_digest: self.config_digest.clone(),
        })
    }

    /// EVII: prior optimum minus the pre-posterior mean (costs, so
    /// information value is a reduction).
    pub fn compute_evii(
        &self,
        prior: &DesignReport,
        prepost: &PrepostOutcome,
    ) -> Result<VoiResult> {
        if prior.config_digest != prepost.config_digest {
            return Err(Error::ConfigMismatch(format!(
                "prior digest {} vs pre-posterior digest {}",
                prior.config_digest, prepost.config_digest
            )));
        }
        Ok(VoiResult {
            prior_cost_eur_yr: prior.objective_eur_yr,
            preposterior_mean_eur_yr: prepost.mean_cost_eur_yr,
            evii_eur_yr: prior.objective_eur_yr - prepost.mean_cost_eur_yr,
            standard_error: prepost.standard_error,
            samples: prepost.samples,
        })
    }

    /// EVO: restricted minus expanded pre-posterior mean, with the paired
    /// per-sample switch record. Both runs must have consumed the same
    /// measurement stream.
    pub fn compute_evo(
        &self,
        restricted: &PrepostOutcome,
        expanded: &PrepostOutcome,
    ) -> Result<VooResult> {
        if restricted.z_digest != expanded.z_digest {
            return Err(Error::SeedMismatch(format!(
                "restricted stream {} vs expanded stream {}",
                restricted.z_digest, expanded.z_digest
            )));
        }
        let mut diffs = Vec::new();
        let mut switches = Vec::new();
        let mut switched_count = 0usize;
        for (r, e) in restricted.records.iter().zip(&expanded.records) {
            if r.error.is_some() || e.error.is_some() {
                continue;
            }
            diffs.push(r.cost_eur_yr - e.cost_eur_yr);
            let switched = r.techs != e.techs;
            if switched {
                switched_count += 1;
            }
            switches.push(SampleSwitch {
                sample: r.sample,
                restricted_cost_eur_yr: r.cost_eur_yr,
                expanded_cost_eur_yr: e.cost_eur_yr,
                restricted_techs: r.techs.clone(),
                expanded_techs: e.techs.clone(),
                switched,
            });
        }
        let n = diffs.len();
        let evo = diffs.iter().sum::<f64>() / n as f64;
        let standard_error = if n > 1 {
            let var = diffs.iter().map(|d| (d - evo) * (d - evo)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let extra_techs = (self.inputs.techs.len() - self.analysis.techs_per_park) as f64;
        let optionality_cost = self.analysis.optionality_cost_per_tech_yr * extra_techs;
        Ok(VooResult {
            restricted_mean_eur_yr: restricted.mean_cost_eur_yr,
            expanded_mean_eur_yr: expanded.mean_cost_eur_yr,
            evo_eur_yr: evo,
            standard_error,
            switch_fraction: switched_count as f64 / n.max(1) as f64,
            optionality_cost_eur_yr: optionality_cost,
            net_evo_eur_yr: evo - optionality_cost,
            switches,
        })
    }

    /// Prior design plus the restricted pre-posterior run and the EVII.
    pub fn run_voi(&self) -> Result<(PriorStage, PrepostOutcome, VoiResult)> {
        let prior = self.prior_design()?;
        let restricted = self
            .preposterior_value(&ActionSet::Restricted(prior.best_subset().to_vec()), &prior)?;
        let voi = self.compute_evii(prior.best_report(), &restricted)?;
        Ok((prior, restricted, voi))
    }

    /// Full run: prior, both pre-posterior action sets, EVII and EVO.
    pub fn run_full(&self) -> Result<PipelineRun> {
        let prior = self.prior_design()?;
        let restricted = self
            .preposterior_value(&ActionSet::Restricted(prior.best_subset().to_vec()), &prior)?;
        let expanded = self.preposterior_value(&ActionSet::Expanded, &prior)?;
        let voi = self.compute_evii(prior.best_report(), &restricted)?;
        let voo = self.compute_evo(&restricted, &expanded)?;
        Ok(PipelineRun { prior, restricted, expanded, voi, voo })
    }
}

/// Apply the prior stage's reduction (indices and weights) to a freshly
/// assembled posterior set.
fn reuse_reduction(full: &ScenarioSet, prior: &PriorStage) -> Result<ReducedSet> {
    if full.len() <= *prior.reduced.selected.iter().max().unwrap_or(&0) {
        return Err(Error::invalid(
            "posterior set too small to reuse the prior reduction indices",
        ));
    }
    let scenarios: Vec<_> = prior
        .reduced
        .selected
        .iter()
        .zip(&prior.reduced.set.scenarios)
        .map(|(&k, reduced_scen)| {
            let mut s = full.scenarios[k].clone();
            s.probability = reduced_scen.probability;
            s
        })
        .collect();
    let set = ScenarioSet {
        techs: full.techs.clone(),
        scenarios,
        provenance: Provenance::Reduced(Box::new(full.provenance.clone())),
    };
    set.validate()?;
    Ok(ReducedSet { set, selected: prior.reduced.selected.clone(), residual: f64::NAN })
}

/// Everything a full pipeline run produces.
pub struct PipelineRun {
    pub prior: PriorStage,
    pub restricted: PrepostOutcome,
    pub expanded: PrepostOutcome,
    pub voi: VoiResult,
    pub voo: VooResult,
}

/// Sensitivity sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Uncertainty reduction factor r.
    UncertaintyReduction,
    /// Multiplier on the grid electricity price profile.
    PriceScale,
    /// Named alternate price/carbon dataset from `[cases]`.
    CarbonYear,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(SweepAxis::UncertaintyReduction),
            "price-scale" => Ok(SweepAxis::PriceScale),
            "carbon-year" => Ok(SweepAxis::CarbonYear),
            other => Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected r, price-scale, or carbon-year)"
            ))),
        }
    }
}

/// One sweep cell; failed cells carry the error and the sweep continues.
#[derive(Debug, Serialize)]
pub struct SweepCell {
    pub axis_value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voi: Option<VoiResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voo: Option<VooResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Re-run the full pipeline once per axis value with common seeds.
pub fn sensitivity_sweep(
    config: &crate::config::RunConfig,
    backend: &dyn LpBackend,
    axis: SweepAxis,
    values: &[String],
) -> Result<Vec<SweepCell>> {
    if values.is_empty() {
        return Err(Error::Config("sweep values must be non-empty".into()));
    }
    let mut cells = Vec::with_capacity(values.len());
    for value in values {
        let outcome = sweep_cell(config, backend, axis, value);
        cells.push(match outcome {
            Ok((voi, voo)) => SweepCell {
                axis_value: value.clone(),
                voi: Some(voi),
                voo: Some(voo),
                error: None,
            },
            Err(e) => SweepCell {
                axis_value: value.clone(),
                voi: None,
                voo: None,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(cells)
}

fn sweep_cell(
    config: &crate::config::RunConfig,
    backend: &dyn LpBackend,
    axis: SweepAxis,
    value: &str,
) -> Result<(VoiResult, VooResult)> {
    let mut cfg = config.clone();
    let mut case = None;
    match axis {
        SweepAxis::UncertaintyReduction => {
            cfg.analysis.uncertainty_reduction = value
                .parse()
                .map_err(|_| Error::Config(format!("bad r value `{value}`")))?;
        }
        SweepAxis::PriceScale => {
            cfg.analysis.price_scale = value
                .parse()
                .map_err(|_| Error::Config(format!("bad price scale `{value}`")))?;
        }
        SweepAxis::CarbonYear => case = Some(value),
    }
    cfg.validate()?;
    let inputs = cfg.build_inputs(case)?;
    let analysis = cfg.analysis_settings();
    let pipeline = Pipeline::new(&inputs, &analysis, backend, cfg.digest())?;
    let run = pipeline.run_full()?;
    Ok((run.voi, run.voo))
}
