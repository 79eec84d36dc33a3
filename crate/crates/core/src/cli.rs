//! The `epark` command line: config-driven runs with CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 infeasible
//! model, 1 internal failure. Every artifact embeds the config digest and
//! master seed; two runs with the same config and seed are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_config, RunConfig};
use crate::error::{Error, Result};
use crate::numfmt::format_sig12;
use crate::optimizer::builder::DesignSolver;
use crate::optimizer::ClarabelBackend;
use crate::pipeline::{
    sensitivity_sweep, ActionSet, DesignReport, Pipeline, PrepostOutcome, SampleRecord, SweepAxis,
    SweepCell, VoiResult, VooResult,
};

#[derive(Parser)]
#[command(
    name = "epark",
    about = "Energy park sizing under storage uncertainty: stochastic design, \
             value of information, and value of optionality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size the park for every technology subset under the prior.
    Prior {
        config: PathBuf,
    },
    /// Value of information: prior design plus posterior re-designs for the
    /// committed technology subset.
    Voi {
        config: PathBuf,
        /// Restrict the posterior designs to these technologies (repeat the
        /// flag for two-technology parks). Defaults to the prior winner.
        #[arg(long = "restricted-tech")]
        restricted_tech: Vec<String>,
        /// Override the number of measurement samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Value of optionality: restricted and expanded posterior re-designs
    /// on common measurement samples.
    Voo {
        config: PathBuf,
        #[arg(long = "restricted-tech")]
        restricted_tech: Vec<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sensitivity sweep over r, price scaling, or named price/carbon cases.
    Sweep {
        config: PathBuf,
        /// Axis: r | price-scale | carbon-year
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Hourly dispatch trace of a solved design on one prior scenario.
    Operate {
        config: PathBuf,
        /// Path to a design report JSON written by `prior`, `voi`, or `voo`.
        #[arg(long)]
        design: PathBuf,
        /// Scenario index within the reduced prior set.
        #[arg(long)]
        scenario: usize,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports usage errors with exit code 2
            e.exit();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_infeasibility() {
        return 3;
    }
    match e {
        Error::Config(_)
        | Error::ConfigMismatch(_)
        | Error::InvalidParam(_)
        | Error::RowCount { .. }
        | Error::BadValue { .. }
        | Error::EmptyDataset
        | Error::BadReductionTarget { .. } => 2,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prior { config } => cmd_prior(&config),
        Command::Voi { config, restricted_tech, samples, seed } => {
            cmd_voi(&config, &restricted_tech, samples, seed)
        }
        Command::Voo { config, restricted_tech, samples, seed } => {
            cmd_voo(&config, &restricted_tech, samples, seed)
        }
        Command::Sweep { config, axis, values } => cmd_sweep(&config, &axis, &values),
        Command::Operate { config, design, scenario } => cmd_operate(&config, &design, scenario),
    }
}

fn prepare(
    path: &Path,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<(RunConfig, PathBuf)> {
    let mut config = load_config(path)?;
    if let Some(n) = samples {
        config.analysis.measurement_samples = n;
    }
    if let Some(s) = seed {
        config.run.master_seed = s;
    }
    config.validate()?;
    let out_dir = config.output_dir();
    fs::create_dir_all(&out_dir)?;
    Ok((config, out_dir))
}

/// Resolve `--restricted-tech` flags to catalogue indices, or fall back to
/// the prior winner.
fn restricted_subset(config: &RunConfig, names: &[String]) -> Result<Option<Vec<usize>>> {
    if names.is_empty() {
        return Ok(None);
    }
    if names.len() != config.analysis.techs_per_park {
        return Err(Error::Config(format!(
            "expected {} --restricted-tech flag(s), got {}",
            config.analysis.techs_per_park,
            names.len()
        )));
    }
    let mut subset = Vec::with_capacity(names.len());
    for name in names {
        let idx = config
            .technology
            .iter()
            .position(|t| &t.name == name)
            .ok_or_else(|| {
                Error::Config(format!("--restricted-tech {name} is not in the catalogue"))
            })?;
        subset.push(idx);
    }
    subset.sort_unstable();
    subset.dedup();
    if subset.len() != names.len() {
        return Err(Error::Config("--restricted-tech flags must be distinct".into()));
    }
    Ok(Some(subset))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn csv_document(config: &RunConfig, header: &str, rows: &[Vec<String>]) -> String {
    let mut out = format!(
        "# config_digest={} master_seed={}\n{header}\n",
        config.digest(),
        config.run.master_seed
    );
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn json_document<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct PriorArtifact<'a> {
    config_digest: String,
    master_seed: u64,
    baseline: &'a DesignReport,
    reports: &'a [DesignReport],
    selected: usize,
}

fn prior_csv_rows(
    baseline: &DesignReport,
    reports: &[DesignReport],
    best: usize,
) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(reports.len() + 1);
    let render = |report: &DesignReport, selected: bool| -> Vec<String> {
        vec![
            if report.techs.is_empty() { "none".to_string() } else { report.techs.join("+") },
            format_sig12(report.objective_eur_yr),
            format_sig12(report.expected_cost_eur_yr),
            format_sig12(report.expected_emissions_kg_yr),
            format_sig12(report.design.total_storage_kwh()),
            format_sig12(report.capital_storage_eur_yr),
            format_sig12(report.design.wind_kw),
            format_sig12(report.design.solar_kw),
            selected.to_string(),
        ]
    };
    rows.push(render(baseline, false));
    for (i, report) in reports.iter().enumerate() {
        rows.push(render(report, i == best));
    }
    rows
}

const PRIOR_HEADER: &str = "techs,objective_eur_yr,expected_cost_eur_yr,carbon_emissions_kg_yr,\
storage_capacity_kwh,storage_cost_eur_yr,wind_kw,solar_kw,selected";

fn cmd_prior(config_path: &Path) -> Result<()> {
    let (config, out_dir) = prepare(config_path, None, None)?;
    let inputs = config.build_inputs(None)?;
    let analysis = config.analysis_settings();
    let backend = ClarabelBackend::default();
    let pipeline = Pipeline::new(&inputs, &analysis, &backend, config.digest())?;
    let prior = pipeline.prior_design()?;

    let rows = prior_csv_rows(&prior.baseline, &prior.reports, prior.best);
    write_text(&out_dir.join("prior_designs.csv"), &csv_document(&config, PRIOR_HEADER, &rows))?;
    let artifact = PriorArtifact {
        config_digest: config.digest(),
        master_seed: config.run.master_seed,
        baseline: &prior.baseline,
        reports: &prior.reports,
        selected: prior.best,
    };
    write_text(&out_dir.join("prior_designs.json"), &json_document(&artifact)?)?;
    write_text(&out_dir.join("best_design.json"), &json_document(prior.best_report())?)?;
    Ok(())
}

const SAMPLES_HEADER: &str = "sample,technology,wind_kw,solar_kw,storage_kwh,cost_eur_yr";

fn sample_csv_rows(records: &[SampleRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| {
            vec![
                r.sample.to_string(),
                r.techs.join("+"),
                format_sig12(r.design.wind_kw),
                format_sig12(r.design.solar_kw),
                format_sig12(r.design.total_storage_kwh()),
                format_sig12(r.cost_eur_yr),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct VoiArtifact<'a> {
    config_digest: String,
    master_seed: u64,
    result: &'a VoiResult,
    prior: &'a DesignReport,
    preposterior: &'a PrepostOutcome,
}

fn cmd_voi(
    config_path: &Path,
    restricted: &[String],
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let (config, out_dir) = prepare(config_path, samples, seed)?;
    let subset_override = restricted_subset(&config, restricted)?;
    let inputs = config.build_inputs(None)?;
    let analysis = config.analysis_settings();
    let backend = ClarabelBackend::default();
    let pipeline = Pipeline::new(&inputs, &analysis, &backend, config.digest())?;

    let prior = pipeline.prior_design()?;
    let subset = subset_override.unwrap_or_else(|| prior.best_subset().to_vec());
    let restricted_run =
        pipeline.preposterior_value(&ActionSet::Restricted(subset.clone()), &prior)?;
    let prior_report = match prior.subsets.iter().position(|s| *s == subset) {
        Some(idx) => &prior.reports[idx],
        None => prior.best_report(),
    };
    let voi = pipeline.compute_evii(prior_report, &restricted_run)?;

    let artifact = VoiArtifact {
        config_digest: config.digest(),
        master_seed: config.run.master_seed,
        result: &voi,
        prior: prior_report,
        preposterior: &restricted_run,
    };
    write_text(&out_dir.join("voi_result.json"), &json_document(&artifact)?)?;
    write_text(
        &out_dir.join("voi_samples.csv"),
        &csv_document(&config, SAMPLES_HEADER, &sample_csv_rows(&restricted_run.records)),
    )?;
    write_text(&out_dir.join("best_design.json"), &json_document(prior_report)?)?;
    Ok(())
}

#[derive(Serialize)]
struct VooArtifact<'a> {
    config_digest: String,
    master_seed: u64,
    result: &'a VooResult,
    voi: &'a VoiResult,
    prior: &'a DesignReport,
}

fn cmd_voo(
    config_path: &Path,
    restricted: &[String],
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let (config, out_dir) = prepare(config_path, samples, seed)?;
    let subset_override = restricted_subset(&config, restricted)?;
    let inputs = config.build_inputs(None)?;
    let analysis = config.analysis_settings();
    let backend = ClarabelBackend::default();
    let pipeline = Pipeline::new(&inputs, &analysis, &backend, config.digest())?;

    let prior = pipeline.prior_design()?;
    let subset = subset_override.unwrap_or_else(|| prior.best_subset().to_vec());
    let restricted_run =
        pipeline.preposterior_value(&ActionSet::Restricted(subset.clone()), &prior)?;
    let expanded_run = pipeline.preposterior_value(&ActionSet::Expanded, &prior)?;
    let prior_report = match prior.subsets.iter().position(|s| *s == subset) {
        Some(idx) => &prior.reports[idx],
        None => prior.best_report(),
    };
    let voi = pipeline.compute_evii(prior_report, &restricted_run)?;
    let voo = pipeline.compute_evo(&restricted_run, &expanded_run)?;

    let artifact = VooArtifact {
        config_digest: config.digest(),
        master_seed: config.run.master_seed,
        result: &voo,
        voi: &voi,
        prior: prior_report,
    };
    write_text(&out_dir.join("voo_result.json"), &json_document(&artifact)?)?;
    write_text(
        &out_dir.join("voo_samples.csv"),
        &csv_document(&config, SAMPLES_HEADER, &sample_csv_rows(&expanded_run.records)),
    )?;
    Ok(())
}

pub const SWEEP_HEADER: &str = "axis_value,voi_eur_yr,voi_se,voo_eur_yr,voo_se";

fn sweep_csv_rows(cells: &[SweepCell]) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|cell| match (&cell.voi, &cell.voo) {
            (Some(voi), Some(voo)) => vec![
                cell.axis_value.clone(),
                format_sig12(voi.evii_eur_yr),
                format_sig12(voi.standard_error),
                format_sig12(voo.evo_eur_yr),
                format_sig12(voo.standard_error),
            ],
            _ => vec![
                cell.axis_value.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ],
        })
        .collect()
}

fn cmd_sweep(config_path: &Path, axis: &str, values: &[String]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| v.trim().is_empty()) {
        return Err(Error::Config("--values must be a non-empty list".into()));
    }
    let (config, out_dir) = prepare(config_path, None, None)?;
    let axis = SweepAxis::parse(axis)?;
    let backend = ClarabelBackend::default();
    let cells = sensitivity_sweep(&config, &backend, axis, values)?;
    for cell in &cells {
        if let Some(err) = &cell.error {
            eprintln!("warning: sweep cell {}: {err}", cell.axis_value);
        }
    }
    write_text(
        &out_dir.join("sweep.csv"),
        &csv_document(&config, SWEEP_HEADER, &sweep_csv_rows(&cells)),
    )?;
    write_text(&out_dir.join("sweep.json"), &json_document(&cells)?)?;
    Ok(())
}

fn cmd_operate(config_path: &Path, design_path: &Path, scenario: usize) -> Result<()> {
    let (config, out_dir) = prepare(config_path, None, None)?;
    let text = fs::read_to_string(design_path)
        .map_err(|e| Error::Config(format!("{}: {e}", design_path.display())))?;
    let report: DesignReport = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", design_path.display())))?;
    if report.config_digest != config.digest() {
        return Err(Error::ConfigMismatch(format!(
            "design was produced under config digest {}, current config is {}",
            report.config_digest,
            config.digest()
        )));
    }

    let inputs = config.build_inputs(None)?;
    let analysis = config.analysis_settings();
    let backend = ClarabelBackend::default();
    let pipeline = Pipeline::new(&inputs, &analysis, &backend, config.digest())?;
    let (reduced, _) = pipeline.prior_reduced_set()?;
    if scenario >= reduced.set.len() {
        return Err(Error::Config(format!(
            "scenario index {scenario} out of range (reduced set has {})",
            reduced.set.len()
        )));
    }

    let tech_sel: Vec<usize> = report
        .techs
        .iter()
        .map(|name| {
            reduced
                .set
                .tech_index(name)
                .ok_or_else(|| Error::Config(format!("technology {name} not in catalogue")))
        })
        .collect::<Result<_>>()?;
    let solver = DesignSolver::new(&inputs.params, &backend);
    let solution =
        solver.evaluate(&report.design, &reduced.set, &tech_sel, analysis.cvar.as_ref())?;

    let plan = &solution.extract.plan;
    let mut header = String::from("hour");
    for &i in &tech_sel {
        header.push_str(&format!(",soc_{}_kwh", reduced.set.techs[i].name));
    }
    header.push_str(",grid_import_kwh,grid_export_kwh,curtailment_kwh");
    let horizon = inputs.params.horizon();
    let mut rows = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut row = vec![t.to_string()];
        for slot in 0..tech_sel.len() {
            row.push(format_sig12(plan.soc[slot][scenario][t + 1]));
        }
        row.push(format_sig12(plan.grid_import[scenario][t]));
        row.push(format_sig12(plan.grid_export[scenario][t]));
        row.push(format_sig12(plan.curtailment[scenario][t]));
        rows.push(row);
    }
    write_text(
        &out_dir.join(format!("operation_scenario_{scenario}.csv")),
        &csv_document(&config, &header, &rows),
    )?;
    Ok(())
}
