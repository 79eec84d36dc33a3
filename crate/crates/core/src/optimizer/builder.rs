//! Scenario stochastic program for sizing and dispatch.
//!
//! Decision variables are the wind, solar, and per-technology storage
//! energy capacities plus, per scenario and hour, the storage charge and
//! discharge split, state of charge, curtailment, and grid import/export
//! split. The objective is the expected annualized cost: generation and
//! storage capital, net grid energy cost, and a carbon price on imports.
//! An optional CVaR term re-weights the costly scenario tail while keeping
//! the objective on the cost scale.
//!
//! Operational costs are scaled by `8760 / (T * dt)` so sub-annual horizons
//! trade off correctly against annualized capital costs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::lp::{
    solve_lp, CanonicalLp, LpBackend, RowKind, Sense, SolveOutcome, VarKey,
};
use crate::scenario::ScenarioSet;
use crate::timeseries::HourlyProfile;

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Known system parameters of the energy park model.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Time step in hours.
    pub dt_hours: f64,
    /// Initial state of charge as a fraction of energy capacity.
    pub soc_initial: f64,
    /// Annualized wind capacity cost, EUR/kWp/yr.
    pub wind_cost_per_kw_yr: f64,
    /// Annualized solar capacity cost, EUR/kWp/yr.
    pub solar_cost_per_kw_yr: f64,
    /// Grid electricity price, EUR/kWh, length T.
    pub price: HourlyProfile,
    /// Carbon price, EUR/kgCO2.
    pub carbon_price: f64,
    /// Grid carbon intensity, kgCO2/kWh, length T.
    pub carbon_intensity: HourlyProfile,
    /// Grid connection capacity, kW (bounds imports).
    pub grid_capacity_kw: f64,
    /// Land-limited solar capacity cap, kWp.
    pub solar_max_kw: f64,
    /// Annualized capital budget, EUR/yr, enforced per scenario.
    pub capital_budget_per_yr: f64,
    /// Factor mapping horizon-total operating cost onto EUR per year; 1 for
    /// a full-year horizon, 8760 / (T dt) when a shorter window stands in
    /// for the year.
    pub operations_scale: f64,
    /// Also cap net exports at the grid capacity.
    pub cap_exports: bool,
    /// Require the final state of charge to be at least the initial one.
    pub cyclic_soc: bool,
}

impl SystemParams {
    pub fn horizon(&self) -> usize {
        self.price.len()
    }

    /// Factor mapping horizon-total operating cost to EUR per year.
    pub fn annual_scale(&self) -> f64 {
        self.operations_scale
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_hours > 0.0) {
            return Err(Error::invalid("time step must be > 0 hours"));
        }
        if !(self.operations_scale > 0.0 && self.operations_scale.is_finite()) {
            return Err(Error::invalid("operations scale must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.soc_initial) {
            return Err(Error::invalid("initial state of charge must lie in [0, 1]"));
        }
        if self.price.len() != self.carbon_intensity.len() {
            return Err(Error::invalid(format!(
                "price profile length {} != carbon intensity length {}",
                self.price.len(),
                self.carbon_intensity.len()
            )));
        }
        if !(self.wind_cost_per_kw_yr >= 0.0 && self.solar_cost_per_kw_yr >= 0.0) {
            return Err(Error::invalid("capacity costs must be nonnegative"));
        }
        if !(self.carbon_price >= 0.0) {
            return Err(Error::invalid("carbon price must be nonnegative"));
        }
        if !(self.grid_capacity_kw >= 0.0 && self.solar_max_kw >= 0.0) {
            return Err(Error::invalid("grid and solar capacity limits must be nonnegative"));
        }
        if !(self.capital_budget_per_yr > 0.0) {
            return Err(Error::invalid("capital budget must be > 0"));
        }
        Ok(())
    }
}

/// Sized capacities of one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVariables {
    pub wind_kw: f64,
    pub solar_kw: f64,
    /// Energy capacity per technology name, kWh.
    pub storage_kwh: BTreeMap<String, f64>,
}

impl DesignVariables {
    pub fn zero() -> Self {
        DesignVariables { wind_kw: 0.0, solar_kw: 0.0, storage_kwh: BTreeMap::new() }
    }

    pub fn total_storage_kwh(&self) -> f64 {
        self.storage_kwh.values().sum()
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.wind_kw >= 0.0 && self.solar_kw >= 0.0) {
            return Err(Error::invalid("capacities must be nonnegative"));
        }
        if self.solar_kw > params.solar_max_kw * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "solar capacity {} exceeds the {} kWp cap",
                self.solar_kw, params.solar_max_kw
            )));
        }
        if self.storage_kwh.values().any(|&v| v < 0.0) {
            return Err(Error::invalid("storage capacities must be nonnegative"));
        }
        Ok(())
    }
}

/// CVaR objective settings: confidence level alpha and tail weighting n.
/// With `tail_weight` = 0 the objective is the plain expected cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarConfig {
    pub alpha: f64,
    pub tail_weight: f64,
}

impl CvarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "CVaR confidence level must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.tail_weight >= 0.0) {
            return Err(Error::invalid(format!(
                "CVaR tail weighting must be >= 0, got {}",
                self.tail_weight
            )));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.tail_weight > 0.0
    }
}

/// Exact risk-adjusted cost of a fixed scenario-cost vector: the expected
/// cost blended with the CVaR of the alpha tail, rescaled back onto the
/// cost axis. The CVaR is evaluated at the minimizing threshold, which for
/// a finite distribution sits at one of the scenario costs.
pub fn risk_adjusted_cost(costs: &[f64], probs: &[f64], cvar: &CvarConfig) -> f64 {
    let expected: f64 = costs.iter().zip(probs).map(|(c, p)| c * p).sum();
    if !cvar.is_active() {
        return expected;
    }
    let mut best = f64::INFINITY;
    for &threshold in costs {
        let excess: f64 = costs
            .iter()
            .zip(probs)
            .map(|(&c, &p)| p * (c - threshold).max(0.0))
            .sum();
        best = best.min(threshold + excess / cvar.alpha);
    }
    let n = cvar.tail_weight;
    (expected + n * cvar.alpha * best) / (1.0 + n * cvar.alpha)
}

/// Internal build options; the public entry point fixes the penalty at 0.
struct BuildContext<'a> {
    params: &'a SystemParams,
    set: &'a ScenarioSet,
    tech_sel: &'a [usize],
    fixed: Option<&'a DesignVariables>,
    cvar: Option<&'a CvarConfig>,
    pair_penalty: f64,
}

/// Build the scenario stochastic LP.
///
/// `tech_sel` selects which of the set's technologies may be installed (an
/// empty selection is the no-storage design). When `fixed` is given the
/// capacity variables are pinned and only dispatch is optimized. When
/// `cvar` is active the objective becomes the rescaled tail-weighted cost.
pub fn build_stochastic_program(
    params: &SystemParams,
    set: &ScenarioSet,
    tech_sel: &[usize],
    fixed: Option<&DesignVariables>,
    cvar: Option<&CvarConfig>,
) -> Result<CanonicalLp> {
    build_with_penalty(BuildContext { params, set, tech_sel, fixed, cvar, pair_penalty: 0.0 })
}

fn build_with_penalty(ctx: BuildContext<'_>) -> Result<CanonicalLp> {
    let BuildContext { params, set, tech_sel, fixed, cvar, pair_penalty } = ctx;
    params.validate()?;
    set.validate()?;
    if let Some(c) = cvar {
        c.validate()?;
    }
    let horizon = params.horizon();
    if set.horizon() != horizon {
        return Err(Error::invalid(format!(
            "scenario profiles cover {} hours but system parameters cover {horizon}",
            set.horizon()
        )));
    }
    if horizon > u16::MAX as usize || set.len() > u16::MAX as usize || set.techs.len() > u8::MAX as usize
    {
        return Err(Error::invalid("model dimensions exceed index width"));
    }
    for &i in tech_sel {
        if i >= set.techs.len() {
            return Err(Error::invalid(format!("technology index {i} out of range")));
        }
        let nu = set.techs[i].depth_of_discharge;
        if params.soc_initial < 1.0 - nu - 1e-12 {
            return Err(Error::invalid(format!(
                "{}: initial state of charge {} below the floor {}",
                set.techs[i].name,
                params.soc_initial,
                1.0 - nu
            )));
        }
    }
    if let Some(design) = fixed {
        design.validate(params)?;
        for &i in tech_sel {
            if !design.storage_kwh.contains_key(&set.techs[i].name) {
                return Err(Error::invalid(format!(
                    "fixed design misses a capacity for {}",
                    set.techs[i].name
                )));
            }
        }
    }

    let n_scen = set.len();
    let dt = params.dt_hours;
    let scale = params.annual_scale();
    let risk = cvar.filter(|c| c.is_active());
    // Eq. 9 rescaling: objective = (E{c} + n a CVaR) / (1 + n a)
    let obj_scale = risk.map_or(1.0, |c| 1.0 / (1.0 + c.tail_weight * c.alpha));

    let mut lp = CanonicalLp::new();

    // --- capacity variables ---
    let pin = |design: Option<&DesignVariables>, f: fn(&DesignVariables) -> f64, hi: f64| {
        match design {
            Some(d) => {
                let v = f(d);
                (v, v)
            }
            None => (0.0, hi),
        }
    };
    let (wl, wu) = pin(fixed, |d| d.wind_kw, f64::INFINITY);
    let wind = lp.add_var(VarKey::WindCap, obj_scale * params.wind_cost_per_kw_yr, wl, wu);
    let (sl, su) = pin(fixed, |d| d.solar_kw, params.solar_max_kw);
    let solar = lp.add_var(VarKey::SolarCap, obj_scale * params.solar_cost_per_kw_yr, sl, su);

    let mut storage = Vec::with_capacity(tech_sel.len());
    for &i in tech_sel {
        let expected_ps: f64 = set
            .scenarios
            .iter()
            .map(|s| s.probability * s.performance[i].annual_cost_per_kwh)
            .sum();
        let (lo, hi) = match fixed {
            Some(d) => {
                let v = d.storage_kwh[&set.techs[i].name];
                (v, v)
            }
            None => (0.0, f64::INFINITY),
        };
        storage.push(lp.add_var(VarKey::StorageCap(i as u8), obj_scale * expected_ps, lo, hi));
    }

    // --- operational variables ---
    let mut charge = vec![vec![Vec::with_capacity(horizon); n_scen]; tech_sel.len()];
    let mut discharge = vec![vec![Vec::with_capacity(horizon); n_scen]; tech_sel.len()];
    let mut soc = vec![vec![Vec::with_capacity(horizon); n_scen]; tech_sel.len()];
    for (slot, &i) in tech_sel.iter().enumerate() {
        for m in 0..n_scen {
            for t in 0..horizon {
                charge[slot][m].push(lp.add_var(
                    VarKey::StorageIn(i as u8, m as u16, t as u16),
                    pair_penalty,
                    0.0,
                    f64::INFINITY,
                ));
                discharge[slot][m].push(lp.add_var(
                    VarKey::StorageOut(i as u8, m as u16, t as u16),
                    pair_penalty,
                    0.0,
                    f64::INFINITY,
                ));
                soc[slot][m].push(lp.add_var(
                    VarKey::Soc(i as u8, m as u16, (t + 1) as u16),
                    0.0,
                    0.0,
                    f64::INFINITY,
                ));
            }
        }
    }

    let mut curtail = vec![Vec::with_capacity(horizon); n_scen];
    let mut import = vec![Vec::with_capacity(horizon); n_scen];
    let mut export = vec![Vec::with_capacity(horizon); n_scen];
    for m in 0..n_scen {
        let rho = set.scenarios[m].probability;
        for t in 0..horizon {
            let price = params.price.values()[t];
            let carbon = params.carbon_price * params.carbon_intensity.values()[t];
            curtail[m].push(lp.add_var(VarKey::Curtail(m as u16, t as u16), 0.0, 0.0, f64::INFINITY));
            // The import split is individually bounded by the grid rating.
            // Every optimum has a representative with the pair tight (carbon
            // cost is nonnegative), so this never changes the optimal value;
            // it does remove the zero-cost ray that an interior-point
            // backend cannot cope with. The net-flow cap rows below are the
            // model constraints proper.
            import[m].push(lp.add_var(
                VarKey::GridImport(m as u16, t as u16),
                obj_scale * rho * scale * (price + carbon) + pair_penalty,
                0.0,
                params.grid_capacity_kw * dt,
            ));
            export[m].push(lp.add_var(
                VarKey::GridExport(m as u16, t as u16),
                -obj_scale * rho * scale * price + pair_penalty,
                0.0,
                if params.cap_exports { params.grid_capacity_kw * dt } else { f64::INFINITY },
            ));
        }
    }

    let risk_vars = risk.map(|c| {
        let threshold = lp.add_var(
            VarKey::RiskThreshold,
            obj_scale * c.tail_weight * c.alpha,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let excess: Vec<u32> = (0..n_scen)
            .map(|m| {
                lp.add_var(
                    VarKey::RiskExcess(m as u16),
                    obj_scale * c.tail_weight * set.scenarios[m].probability,
                    0.0,
                    f64::INFINITY,
                )
            })
            .collect();
        (threshold, excess)
    });

    // --- storage constraints ---
    for (slot, &i) in tech_sel.iter().enumerate() {
        let cap = storage[slot];
        let nu = set.techs[i].depth_of_discharge;
        let delta = set.techs[i].discharge_ratio;
        for m in 0..n_scen {
            let eta = set.scenarios[m].performance[i].efficiency;
            let charge_gain = eta.sqrt();
            let discharge_loss = 1.0 / eta.sqrt();
            for t in 0..horizon {
                let (i8_, m16, t16) = (i as u8, m as u16, t as u16);
                let e_in = charge[slot][m][t];
                let e_out = discharge[slot][m][t];
                let s_next = soc[slot][m][t];
                // SoC recursion, with SoC[0] = soc_initial * capacity folded in
                if t == 0 {
                    lp.add_row(
                        RowKind::SocDynamics { tech: i8_, scenario: m16, step: 1 },
                        Sense::Eq,
                        0.0,
                        [
                            (s_next, 1.0),
                            (cap, -params.soc_initial),
                            (e_in, -charge_gain),
                            (e_out, discharge_loss),
                        ],
                    );
                } else {
                    lp.add_row(
                        RowKind::SocDynamics { tech: i8_, scenario: m16, step: (t + 1) as u16 },
                        Sense::Eq,
                        0.0,
                        [
                            (s_next, 1.0),
                            (soc[slot][m][t - 1], -1.0),
                            (e_in, -charge_gain),
                            (e_out, discharge_loss),
                        ],
                    );
                }
                // net intake within the power rating delta * capacity
                lp.add_row(
                    RowKind::PowerUpper { tech: i8_, scenario: m16, step: t16 },
                    Sense::Le,
                    0.0,
                    [(e_in, 1.0), (e_out, -1.0), (cap, -delta * dt)],
                );
                lp.add_row(
                    RowKind::PowerLower { tech: i8_, scenario: m16, step: t16 },
                    Sense::Le,
                    0.0,
                    [(e_in, -1.0), (e_out, 1.0), (cap, -delta * dt)],
                );
                // state of charge window
                lp.add_row(
                    RowKind::SocUpper { tech: i8_, scenario: m16, step: (t + 1) as u16 },
                    Sense::Le,
                    0.0,
                    [(s_next, 1.0), (cap, -1.0)],
                );
                lp.add_row(
                    RowKind::SocLower { tech: i8_, scenario: m16, step: (t + 1) as u16 },
                    Sense::Le,
                    0.0,
                    [(s_next, -1.0), (cap, 1.0 - nu)],
                );
            }
            if params.cyclic_soc {
                lp.add_row(
                    RowKind::CyclicSoc { tech: i as u8, scenario: m as u16 },
                    Sense::Le,
                    0.0,
                    [(soc[slot][m][horizon - 1], -1.0), (cap, params.soc_initial)],
                );
            }
        }
    }

    // --- grid and curtailment constraints ---
    for m in 0..n_scen {
        let scen = &set.scenarios[m];
        for t in 0..horizon {
            let (m16, t16) = (m as u16, t as u16);
            let g_wind = scen.wind.values()[t];
            let g_solar = scen.solar.values()[t];
            let mut balance: Vec<(u32, f64)> = vec![
                (import[m][t], 1.0),
                (export[m][t], -1.0),
                (solar, g_solar),
                (wind, g_wind),
                (curtail[m][t], -1.0),
            ];
            for slot in 0..tech_sel.len() {
                balance.push((charge[slot][m][t], -1.0));
                balance.push((discharge[slot][m][t], 1.0));
            }
            lp.add_row(
                RowKind::Balance { scenario: m16, step: t16 },
                Sense::Eq,
                scen.load.values()[t],
                balance,
            );
            lp.add_row(
                RowKind::CurtailCap { scenario: m16, step: t16 },
                Sense::Le,
                0.0,
                [(curtail[m][t], 1.0), (solar, -g_solar), (wind, -g_wind)],
            );
            lp.add_row(
                RowKind::ImportCap { scenario: m16, step: t16 },
                Sense::Le,
                params.grid_capacity_kw * dt,
                [(import[m][t], 1.0), (export[m][t], -1.0)],
            );
            if params.cap_exports {
                lp.add_row(
                    RowKind::ExportCap { scenario: m16, step: t16 },
                    Sense::Le,
                    params.grid_capacity_kw * dt,
                    [(export[m][t], 1.0), (import[m][t], -1.0)],
                );
            }
        }
        // capital budget, storage price indexed by scenario
        let mut budget: Vec<(u32, f64)> = vec![
            (solar, params.solar_cost_per_kw_yr),
            (wind, params.wind_cost_per_kw_yr),
        ];
        for (slot, &i) in tech_sel.iter().enumerate() {
            budget.push((storage[slot], scen.performance[i].annual_cost_per_kwh));
        }
        lp.add_row(
            RowKind::Budget { scenario: m as u16 },
            Sense::Le,
            params.capital_budget_per_yr,
            budget,
        );
        // CVaR excess: scenario cost minus threshold, floored at zero
        if let Some((threshold, excess)) = &risk_vars {
            let mut terms: Vec<(u32, f64)> = vec![
                (wind, params.wind_cost_per_kw_yr),
                (solar, params.solar_cost_per_kw_yr),
                (excess[m], -1.0),
                (*threshold, -1.0),
            ];
            for (slot, &i) in tech_sel.iter().enumerate() {
                terms.push((storage[slot], scen.performance[i].annual_cost_per_kwh));
            }
            for t in 0..horizon {
                let price = params.price.values()[t];
                let carbon = params.carbon_price * params.carbon_intensity.values()[t];
                terms.push((import[m][t], scale * (price + carbon)));
                terms.push((export[m][t], -scale * price));
            }
            lp.add_row(RowKind::RiskExcess { scenario: m as u16 }, Sense::Le, 0.0, terms);
        }
    }

    Ok(lp)
}

/// Per-scenario cost decomposition of a solved design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCost {
    pub capital_wind: f64,
    pub capital_solar: f64,
    pub capital_storage: f64,
    pub grid_energy: f64,
    pub carbon: f64,
    /// Operational carbon emissions, kgCO2/yr.
    pub emissions_kg: f64,
}

impl ScenarioCost {
    pub fn total(&self) -> f64 {
        self.capital_wind + self.capital_solar + self.capital_storage + self.grid_energy + self.carbon
    }
}

/// Dispatch trace of a solved LP.
#[derive(Debug, Clone)]
pub struct OperationPlan {
    /// State of charge per selected technology, scenario, and step 0..=T.
    pub soc: Vec<Vec<Vec<f64>>>,
    pub charge: Vec<Vec<Vec<f64>>>,
    pub discharge: Vec<Vec<Vec<f64>>>,
    pub curtailment: Vec<Vec<f64>>,
    pub grid_import: Vec<Vec<f64>>,
    pub grid_export: Vec<Vec<f64>>,
}

/// Capacities, per-scenario cost decomposition, and dispatch of a solved
/// design LP.
#[derive(Debug, Clone)]
pub struct DesignExtract {
    pub design: DesignVariables,
    pub per_scenario: Vec<ScenarioCost>,
    /// Probability-weighted total cost (risk-neutral expectation).
    pub expected_cost: f64,
    /// Probability-weighted carbon emissions, kgCO2/yr.
    pub expected_emissions_kg: f64,
    pub plan: OperationPlan,
}

/// Read capacities and the cost decomposition out of an optimal solution.
/// Pinned capacities are reported from their bounds bit-exactly.
pub fn extract_design(
    lp: &CanonicalLp,
    outcome: &SolveOutcome,
    params: &SystemParams,
    set: &ScenarioSet,
    tech_sel: &[usize],
) -> Result<DesignExtract> {
    let sol = outcome.optimal()?;
    let horizon = params.horizon();
    let n_scen = set.len();
    let scale = params.annual_scale();

    let read = |key: VarKey| -> f64 {
        let col = lp.col(&key).expect("variable present in the build");
        let (lo, hi) = lp.bounds(col);
        if lo == hi {
            // pinned capacities are reported bit-exactly
            lo
        } else {
            // interior-point solutions sit within feasibility tolerance of
            // the bounds; clamp the sub-tolerance overshoot away
            sol.values[col as usize].clamp(lo, hi)
        }
    };

    let mut storage_kwh = BTreeMap::new();
    for &i in tech_sel {
        storage_kwh.insert(set.techs[i].name.clone(), read(VarKey::StorageCap(i as u8)));
    }
    let design = DesignVariables {
        wind_kw: read(VarKey::WindCap),
        solar_kw: read(VarKey::SolarCap),
        storage_kwh,
    };

    let mut plan = OperationPlan {
        soc: vec![vec![Vec::with_capacity(horizon + 1); n_scen]; tech_sel.len()],
        charge: vec![vec![Vec::with_capacity(horizon); n_scen]; tech_sel.len()],
        discharge: vec![vec![Vec::with_capacity(horizon); n_scen]; tech_sel.len()],
        curtailment: vec![Vec::with_capacity(horizon); n_scen],
        grid_import: vec![Vec::with_capacity(horizon); n_scen],
        grid_export: vec![Vec::with_capacity(horizon); n_scen],
    };
    for (slot, &i) in tech_sel.iter().enumerate() {
        let cap = design.storage_kwh[&set.techs[i].name];
        for m in 0..n_scen {
            plan.soc[slot][m].push(params.soc_initial * cap);
            for t in 0..horizon {
                plan.soc[slot][m].push(read(VarKey::Soc(i as u8, m as u16, (t + 1) as u16)));
                plan.charge[slot][m].push(read(VarKey::StorageIn(i as u8, m as u16, t as u16)));
                plan.discharge[slot][m].push(read(VarKey::StorageOut(i as u8, m as u16, t as u16)));
            }
        }
    }

    let mut per_scenario = Vec::with_capacity(n_scen);
    for m in 0..n_scen {
        let mut grid_energy = 0.0;
        let mut carbon = 0.0;
        let mut emissions = 0.0;
        for t in 0..horizon {
            let imp = read(VarKey::GridImport(m as u16, t as u16));
            let exp = read(VarKey::GridExport(m as u16, t as u16));
            plan.grid_import[m].push(imp);
            plan.grid_export[m].push(exp);
            plan.curtailment[m].push(read(VarKey::Curtail(m as u16, t as u16)));
            let price = params.price.values()[t];
            let ci = params.carbon_intensity.values()[t];
            grid_energy += price * (imp - exp);
            carbon += params.carbon_price * ci * imp;
            emissions += ci * imp;
        }
        let capital_storage: f64 = tech_sel
            .iter()
            .map(|&i| {
                set.scenarios[m].performance[i].annual_cost_per_kwh
                    * design.storage_kwh[&set.techs[i].name]
            })
            .sum();
        per_scenario.push(ScenarioCost {
            capital_wind: params.wind_cost_per_kw_yr * design.wind_kw,
            capital_solar: params.solar_cost_per_kw_yr * design.solar_kw,
            capital_storage,
            grid_energy: scale * grid_energy,
            carbon: scale * carbon,
            emissions_kg: scale * emissions,
        });
    }

    let expected_cost = per_scenario
        .iter()
        .zip(&set.scenarios)
        .map(|(c, s)| s.probability * c.total())
        .sum();
    let expected_emissions_kg = per_scenario
        .iter()
        .zip(&set.scenarios)
        .map(|(c, s)| s.probability * c.emissions_kg)
        .sum();

    Ok(DesignExtract {
        design,
        per_scenario,
        expected_cost,
        expected_emissions_kg,
        plan,
    })
}

/// A fully solved design: reported objective (risk-adjusted when CVaR is
/// active), extraction, and the raw solve outcome.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    /// Pipeline objective: expected cost, or the Eq-9 style risk-adjusted
    /// cost when CVaR is active. Recomputed from the cost decomposition.
    pub objective: f64,
    pub extract: DesignExtract,
    pub outcome: SolveOutcome,
    /// True when a slack charge/discharge or import/export pair forced a
    /// penalized re-solve.
    pub pair_resolved: bool,
}

/// Design optimizer facade: builds, solves, re-checks the positive/negative
/// variable splits, and extracts.
pub struct DesignSolver<'a> {
    pub params: &'a SystemParams,
    pub backend: &'a dyn LpBackend,
}

impl<'a> DesignSolver<'a> {
    pub fn new(params: &'a SystemParams, backend: &'a dyn LpBackend) -> Self {
        DesignSolver { params, backend }
    }

    /// Optimize capacities and dispatch over the selected technologies.
    pub fn optimize(
        &self,
        set: &ScenarioSet,
        tech_sel: &[usize],
        cvar: Option<&CvarConfig>,
    ) -> Result<DesignSolution> {
        self.run(set, tech_sel, None, cvar)
    }

    /// Evaluate a frozen design (capacities pinned, dispatch optimized).
    /// The per-scenario budget is pre-checked so violations name the
    /// scenario instead of surfacing as a bare infeasibility.
    pub fn evaluate(
        &self,
        design: &DesignVariables,
        set: &ScenarioSet,
        tech_sel: &[usize],
        cvar: Option<&CvarConfig>,
    ) -> Result<DesignSolution> {
        design.validate(self.params)?;
        for (m, s) in set.scenarios.iter().enumerate() {
            let mut spent = self.params.wind_cost_per_kw_yr * design.wind_kw
                + self.params.solar_cost_per_kw_yr * design.solar_kw;
            for &i in tech_sel {
                spent += s.performance[i].annual_cost_per_kwh
                    * design.storage_kwh.get(&set.techs[i].name).copied().unwrap_or(0.0);
            }
            let budget = self.params.capital_budget_per_yr;
            if spent > budget * (1.0 + 1e-6) {
                return Err(Error::BudgetViolated { scenario: m, spent, budget });
            }
        }
        self.run(set, tech_sel, Some(design), cvar)
    }

    fn run(
        &self,
        set: &ScenarioSet,
        tech_sel: &[usize],
        fixed: Option<&DesignVariables>,
        cvar: Option<&CvarConfig>,
    ) -> Result<DesignSolution> {
        use crate::optimizer::lp::SolveStatus;
        let lp = build_stochastic_program(self.params, set, tech_sel, fixed, cvar)?;
        let outcome = solve_lp(&lp, self.backend)?;
        let needs_penalty = match outcome.status {
            SolveStatus::Optimal => {
                let extract = extract_design(&lp, &outcome, self.params, set, tech_sel)?;
                if !self.has_slack_pair(set, tech_sel, &extract) {
                    return self.finish(lp, outcome, set, tech_sel, cvar, false);
                }
                true
            }
            SolveStatus::Infeasible => false,
            // Zero-cost split rays (zero carbon price, coincident
            // import/export prices) leave the solution set unbounded and
            // can defeat the interior-point backend even though the
            // objective is bounded. A strictly positive pair cost removes
            // the ray; a genuinely unbounded objective stays unbounded.
            SolveStatus::Unbounded | SolveStatus::NumericFailure => true,
        };
        if !needs_penalty {
            return self.finish(lp, outcome, set, tech_sel, cvar, false);
        }
        let lp2 = build_with_penalty(BuildContext {
            params: self.params,
            set,
            tech_sel,
            fixed,
            cvar,
            pair_penalty: 1e-9,
        })?;
        let outcome2 = solve_lp(&lp2, self.backend)?;
        if outcome2.status != SolveStatus::Optimal {
            // report the original diagnosis, not the penalized one
            return self.finish(lp, outcome, set, tech_sel, cvar, false);
        }
        self.finish(lp2, outcome2, set, tech_sel, cvar, true)
    }

    fn finish(
        &self,
        lp: CanonicalLp,
        outcome: SolveOutcome,
        set: &ScenarioSet,
        tech_sel: &[usize],
        cvar: Option<&CvarConfig>,
        pair_resolved: bool,
    ) -> Result<DesignSolution> {
        outcome.optimal()?;
        let extract = extract_design(&lp, &outcome, self.params, set, tech_sel)?;
        let costs: Vec<f64> = extract.per_scenario.iter().map(|c| c.total()).collect();
        let probs: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
        let objective = match cvar {
            Some(c) => risk_adjusted_cost(&costs, &probs, c),
            None => extract.expected_cost,
        };
        Ok(DesignSolution { objective, extract, outcome, pair_resolved })
    }

    fn has_slack_pair(
        &self,
        set: &ScenarioSet,
        tech_sel: &[usize],
        extract: &DesignExtract,
    ) -> bool {
        let dt = self.params.dt_hours;
        let horizon = self.params.horizon();
        for (slot, &i) in tech_sel.iter().enumerate() {
            let cap = extract.design.storage_kwh[&set.techs[i].name];
            let p_max_dt = set.techs[i].discharge_ratio * cap * dt;
            if p_max_dt <= 0.0 {
                continue;
            }
            // absolute floor keeps solver dust on near-zero capacities from
            // triggering a pointless re-solve
            let tol = (1e-6 * p_max_dt * p_max_dt).max(1e-9);
            for m in 0..set.len() {
                for t in 0..horizon {
                    if extract.plan.charge[slot][m][t] * extract.plan.discharge[slot][m][t] > tol {
                        return true;
                    }
                }
            }
        }
        let grid = self.params.grid_capacity_kw * dt;
        let tol = 1e-6 * grid * grid;
        for m in 0..set.len() {
            for t in 0..horizon {
                if extract.plan.grid_import[m][t] * extract.plan.grid_export[m][t] > tol.max(1e-9) {
                    return true;
                }
            }
        }
        false
    }
}
