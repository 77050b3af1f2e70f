//! JSON config document: schema, unit normalization, and conversion to a
//! validated [`Problem`].
//!
//! Costs are given as `{ "value": .., "unit": .. }`. Internally every amount is
//! carried in million currency units, per MW for capital, per MW-year for
//! fixed O&M and per MWh for energy prices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};
use crate::ga::GaConfig;
use crate::model::{
    ConstraintParams, EconomicParams, ExistingUnit, ExpansionPlan, FuelClass, MixBand, PlanningHorizon, Problem,
    UnitKind, UnitType,
};
use crate::reliability::TablePolicy;
use crate::wind::{FarmOutputModel, OutputLevels, PowerCurve, TurbineOutputModel, WindSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostUnit {
    PerKw,
    PerMw,
    MillionPerMw,
    PerKwMonth,
    PerKwYear,
    PerMwYear,
    MillionPerMwYear,
    PerKwh,
    PerMwh,
    MillionPerMwh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Capital,
    Fixed,
    Energy,
}

impl CostUnit {
    fn dimension(self) -> Dimension {
        use CostUnit::*;
        match self {
            PerKw | PerMw | MillionPerMw => Dimension::Capital,
            PerKwMonth | PerKwYear | PerMwYear | MillionPerMwYear => Dimension::Fixed,
            PerKwh | PerMwh | MillionPerMwh => Dimension::Energy,
        }
    }

    /// Converts `value` into million currency units per MW, MW-year or MWh.
    fn to_internal(self, value: f64) -> f64 {
        use CostUnit::*;
        match self {
            PerKw | PerKwYear | PerKwh => value / 1e3,
            PerMw | PerMwYear | PerMwh => value / 1e6,
            PerKwMonth => value * 12.0 / 1e3,
            MillionPerMw | MillionPerMwYear | MillionPerMwh => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: CostUnit,
}

impl Quantity {
    fn normalize(&self, path: &str, want: Dimension) -> Result<f64> {
        if self.unit.dimension() != want {
            let expected = match want {
                Dimension::Capital => "per_kw, per_mw or million_per_mw",
                Dimension::Fixed => "per_kw_month, per_kw_year, per_mw_year or million_per_mw_year",
                Dimension::Energy => "per_kwh, per_mwh or million_per_mwh",
            };
            return Err(GepError::schema(
                format!("{path}.unit"),
                format!("unit {:?} has the wrong dimension; expected {expected}", self.unit),
            ));
        }
        if !(self.value.is_finite() && self.value >= 0.0) {
            return Err(GepError::invariant(
                format!("{path}.value"),
                format!("cost must be non-negative, got {}", self.value),
            ));
        }
        Ok(self.unit.to_internal(self.value))
    }

    fn internal(value: f64, unit: CostUnit) -> Self {
        Quantity { value, unit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FarmModelDoc {
    /// Name of a regime under `wind.regimes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm_levels: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine_levels: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub for_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitDoc {
    pub id: String,
    pub kind: UnitKind,
    pub fuel_class: FuelClass,
    pub unit_capacity_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub for_rate: Option<f64>,
    pub invest_cost: Quantity,
    pub fixed_om: Quantity,
    pub variable_om: Quantity,
    pub salvage_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salvage_by_stage: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub candidate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_units_per_stage: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_units_per_stage: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm_model: Option<FarmModelDoc>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistingDoc {
    pub name: String,
    pub unit_type: String,
    pub capacity_mw: f64,
    #[serde(default = "one")]
    pub count: u32,
    pub for_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_om: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_om: Option<Quantity>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonDoc {
    pub stage_count: usize,
    pub years_per_stage: u32,
    pub lead_time_years: f64,
    #[serde(default = "hours_per_year")]
    pub hours_per_year: f64,
    pub peak_load_mw: Vec<f64>,
    /// Peak of the year before the first stage; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_year_peak_mw: Option<f64>,
    #[serde(default = "base_ratio")]
    pub base_load_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldc_breakpoint: Option<(f64, f64)>,
}

fn hours_per_year() -> f64 {
    8760.0
}

fn base_ratio() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsDoc {
    pub discount_rate: f64,
    pub ceens: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsDoc {
    pub reserve_min: f64,
    pub reserve_max: f64,
    pub lolp_max: f64,
    #[serde(default)]
    pub fuel_mix: BTreeMap<FuelClass, MixBand>,
    /// Per-type, per-stage overrides of `max_units_per_stage`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub u_max: BTreeMap<String, Vec<u32>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub u_min: BTreeMap<String, Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDoc {
    pub cut_in_ms: f64,
    pub rated_ms: f64,
    pub cut_out_ms: f64,
    pub rated_power_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RegimeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm_levels: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine_levels: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindDoc {
    #[serde(default = "turbines")]
    pub turbine_count: u32,
    #[serde(default = "wind_for")]
    pub for_rate: f64,
    #[serde(default = "levels")]
    pub level_count: usize,
    #[serde(default = "tolerance")]
    pub table_tolerance: f64,
    #[serde(default = "interval")]
    pub sample_interval_hours: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_curve: Option<CurveDoc>,
    #[serde(default)]
    pub regimes: BTreeMap<String, RegimeDoc>,
}

fn turbines() -> u32 {
    30
}
fn wind_for() -> f64 {
    0.1
}
fn levels() -> usize {
    6
}
fn tolerance() -> f64 {
    1e-3
}
fn interval() -> f64 {
    1.0
}

impl Default for WindDoc {
    fn default() -> Self {
        WindDoc {
            turbine_count: turbines(),
            for_rate: wind_for(),
            level_count: levels(),
            table_tolerance: tolerance(),
            sample_interval_hours: interval(),
            power_curve: None,
            regimes: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityDoc {
    #[serde(default = "rounding")]
    pub capacity_rounding_mw: f64,
    #[serde(default = "prune")]
    pub prune_threshold: f64,
}

fn rounding() -> f64 {
    1.0
}
fn prune() -> f64 {
    1e-10
}

impl Default for ReliabilityDoc {
    fn default() -> Self {
        ReliabilityDoc {
            capacity_rounding_mw: rounding(),
            prune_threshold: prune(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub units: Vec<UnitDoc>,
    #[serde(default)]
    pub existing: Vec<ExistingDoc>,
    pub horizon: HorizonDoc,
    pub economics: EconomicsDoc,
    pub constraints: ConstraintsDoc,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub wind: WindDoc,
    #[serde(default)]
    pub reliability: ReliabilityDoc,
    /// Exogenous builds per type id and stage.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed_builds: BTreeMap<String, Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_types: Vec<String>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            GepError::schema(path, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses and validates a config document. Relative paths inside it (wind
/// series CSVs) resolve against `base_dir`.
pub fn load_problem(text: &str, base_dir: Option<&Path>) -> Result<Problem> {
    let doc = ConfigDocument::parse(text)?;
    build_problem(&doc, base_dir)
}

pub fn load_problem_file(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| GepError::io(path, e))?;
    load_problem(&text, path.parent())
}

struct WindContext<'a> {
    doc: &'a WindDoc,
    base_dir: Option<&'a Path>,
}

impl WindContext<'_> {
    fn resolve(&self, path: &str, spec: &FarmModelDoc) -> Result<FarmOutputModel> {
        let sources = [
            spec.regime.is_some(),
            spec.farm_levels.is_some(),
            spec.turbine_levels.is_some(),
            spec.series_csv.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if sources != 1 {
            return Err(GepError::schema(
                path,
                "give exactly one of regime, farm_levels, turbine_levels, series_csv",
            ));
        }
        let n = spec.turbine_count.unwrap_or(self.doc.turbine_count);
        let f = spec.for_rate.unwrap_or(self.doc.for_rate);
        if let Some(name) = &spec.regime {
            let regime =
                self.doc.regimes.get(name).ok_or_else(|| {
                    GepError::schema(format!("{path}.regime"), format!("unknown wind regime {name:?}"))
                })?;
            let inner = FarmModelDoc {
                regime: None,
                farm_levels: regime.farm_levels.clone(),
                turbine_levels: regime.turbine_levels.clone(),
                series_csv: regime.series_csv.clone(),
                turbine_count: spec.turbine_count,
                for_rate: spec.for_rate,
            };
            return self.resolve(&format!("wind.regimes.{name}"), &inner);
        }
        let tol = self.doc.table_tolerance;
        if let Some(levels) = &spec.farm_levels {
            let levels = OutputLevels::with_tolerance(levels.clone(), tol).map_err(|e| prefix(path, e))?;
            return FarmOutputModel::from_levels(levels, n, f).map_err(|e| prefix(path, e));
        }
        let turbine = self.turbine(path, spec)?;
        FarmOutputModel::aggregate(&turbine, n, f).map_err(|e| prefix(path, e))
    }

    /// Turbine model of a `turbine_levels` or `series_csv` source.
    fn turbine(&self, path: &str, spec: &FarmModelDoc) -> Result<TurbineOutputModel> {
        let tol = self.doc.table_tolerance;
        Ok(if let Some(levels) = &spec.turbine_levels {
            let levels = OutputLevels::with_tolerance(levels.clone(), tol).map_err(|e| prefix(path, e))?;
            TurbineOutputModel::new(levels).map_err(|e| prefix(path, e))?
        } else {
            let file = spec.series_csv.as_ref().unwrap();
            let curve = self.doc.power_curve.as_ref().ok_or_else(|| {
                GepError::schema("wind.power_curve", "a power curve is required to use a wind series")
            })?;
            let curve = PowerCurve::fit(curve.cut_in_ms, curve.rated_ms, curve.cut_out_ms, curve.rated_power_mw)?;
            let full: PathBuf = match self.base_dir {
                Some(dir) => dir.join(file),
                None => PathBuf::from(file),
            };
            let series = WindSeries::from_csv_path(&full, self.doc.sample_interval_hours)?;
            TurbineOutputModel::from_series(&curve, &series, self.doc.level_count)?
        })
    }
}

/// Turbine model (when the regime has one) and farm model of a named wind regime.
pub fn regime_models(
    doc: &ConfigDocument,
    name: &str,
    base_dir: Option<&Path>,
) -> Result<(Option<TurbineOutputModel>, FarmOutputModel)> {
    let ctx = WindContext {
        doc: &doc.wind,
        base_dir,
    };
    let spec = FarmModelDoc {
        regime: Some(name.to_string()),
        ..FarmModelDoc::default()
    };
    let farm = ctx.resolve("--regime", &spec)?;
    let regime = &doc.wind.regimes[name];
    let turbine = if regime.farm_levels.is_some() {
        None
    } else {
        let inner = FarmModelDoc {
            turbine_levels: regime.turbine_levels.clone(),
            series_csv: regime.series_csv.clone(),
            ..FarmModelDoc::default()
        };
        Some(ctx.turbine(&format!("wind.regimes.{name}"), &inner)?)
    };
    Ok((turbine, farm))
}

fn prefix(path: &str, e: GepError) -> GepError {
    match e {
        GepError::Invariant { path: inner, message } => GepError::Invariant {
            path: format!("{path}.{inner}"),
            message,
        },
        other => other,
    }
}

fn per_stage(path: &str, v: &[u32], stages: usize) -> Result<()> {
    if v.len() != stages {
        return Err(GepError::schema(
            path,
            format!("expected {stages} per-stage values, got {}", v.len()),
        ));
    }
    Ok(())
}

pub fn build_problem(doc: &ConfigDocument, base_dir: Option<&Path>) -> Result<Problem> {
    let wind = WindContext {
        doc: &doc.wind,
        base_dir,
    };
    let horizon = PlanningHorizon {
        stage_count: doc.horizon.stage_count,
        years_per_stage: doc.horizon.years_per_stage,
        lead_time: doc.horizon.lead_time_years,
        hours_per_year: doc.horizon.hours_per_year,
        peak_load: doc.horizon.peak_load_mw.clone(),
        base_load_ratio: doc.horizon.base_load_ratio,
        ldc_breakpoint: doc.horizon.ldc_breakpoint,
    };
    horizon.validate()?;
    let stages = horizon.stage_count;

    let mut units = Vec::with_capacity(doc.units.len());
    let mut u_max = vec![vec![0u32; doc.units.len()]; stages];
    let mut u_min = vec![vec![0u32; doc.units.len()]; stages];
    for (i, u) in doc.units.iter().enumerate() {
        let path = format!("units[{i}]");
        let farm_model = match (&u.farm_model, u.kind) {
            (Some(spec), _) => Some(wind.resolve(&format!("{path}.farm_model"), spec)?),
            (None, UnitKind::Wind) => {
                return Err(GepError::invariant(
                    format!("{path}.farm_model"),
                    "wind type requires a farm model",
                ))
            }
            (None, UnitKind::Thermal) => None,
        };
        let for_rate = match (u.for_rate, &farm_model) {
            (Some(f), _) => f,
            (None, Some(m)) => m.for_rate(),
            (None, None) => return Err(GepError::schema(format!("{path}.for_rate"), "missing field `for_rate`")),
        };
        let unit = UnitType {
            id: u.id.clone(),
            kind: u.kind,
            unit_capacity: u.unit_capacity_mw,
            for_rate,
            invest_cost: u
                .invest_cost
                .normalize(&format!("{path}.invest_cost"), Dimension::Capital)?,
            fixed_om: u.fixed_om.normalize(&format!("{path}.fixed_om"), Dimension::Fixed)?,
            variable_om: u
                .variable_om
                .normalize(&format!("{path}.variable_om"), Dimension::Energy)?,
            salvage_factor: u.salvage_factor,
            salvage_by_stage: u.salvage_by_stage.clone(),
            fuel_class: u.fuel_class,
            farm_model,
            candidate: u.candidate,
        };
        unit.validate(&path)?;
        let max = match (u.max_units_per_stage, doc.constraints.u_max.get(&u.id)) {
            (_, Some(v)) => {
                per_stage(&format!("constraints.u_max.{}", u.id), v, stages)?;
                v.clone()
            }
            (Some(m), None) => vec![m; stages],
            (None, None) if u.candidate => {
                return Err(GepError::schema(
                    format!("{path}.max_units_per_stage"),
                    "candidate types need an explicit build limit",
                ))
            }
            (None, None) => vec![0; stages],
        };
        let min = match (u.min_units_per_stage, doc.constraints.u_min.get(&u.id)) {
            (_, Some(v)) => {
                per_stage(&format!("constraints.u_min.{}", u.id), v, stages)?;
                v.clone()
            }
            (Some(m), None) => vec![m; stages],
            (None, None) => vec![0; stages],
        };
        for t in 0..stages {
            u_max[t][i] = max[t];
            u_min[t][i] = min[t];
        }
        units.push(unit);
    }
    for key in doc.constraints.u_max.keys().chain(doc.constraints.u_min.keys()) {
        if !doc.units.iter().any(|u| &u.id == key) {
            return Err(GepError::schema(
                format!("constraints.u_max.{key}"),
                "unknown unit type",
            ));
        }
    }

    let type_of = |path: &str, id: &str| {
        doc.units
            .iter()
            .position(|u| u.id == id)
            .ok_or_else(|| GepError::schema(path, format!("unknown unit type {id:?}")))
    };

    let mut existing = Vec::with_capacity(doc.existing.len());
    for (k, e) in doc.existing.iter().enumerate() {
        let path = format!("existing[{k}]");
        existing.push(ExistingUnit {
            name: e.name.clone(),
            unit_type: type_of(&format!("{path}.unit_type"), &e.unit_type)?,
            capacity: e.capacity_mw,
            count: e.count,
            for_rate: e.for_rate,
            fixed_om: e
                .fixed_om
                .map(|q| q.normalize(&format!("{path}.fixed_om"), Dimension::Fixed))
                .transpose()?,
            variable_om: e
                .variable_om
                .map(|q| q.normalize(&format!("{path}.variable_om"), Dimension::Energy))
                .transpose()?,
        });
    }

    let mut fixed_builds = ExpansionPlan::zeros(stages, units.len());
    for (id, counts) in &doc.fixed_builds {
        let path = format!("fixed_builds.{id}");
        let i = type_of(&path, id)?;
        per_stage(&path, counts, stages)?;
        for (t, &c) in counts.iter().enumerate() {
            fixed_builds.set(t, i, c);
        }
    }

    let mut excluded = vec![false; units.len()];
    for id in &doc.exclude_types {
        excluded[type_of("exclude_types", id)?] = true;
    }

    let problem = Problem {
        units,
        existing,
        horizon,
        economics: EconomicParams {
            discount_rate: doc.economics.discount_rate,
            ceens: doc.economics.ceens.normalize("economics.ceens", Dimension::Energy)?,
        },
        constraints: ConstraintParams {
            u_max,
            u_min,
            fuel_mix: doc.constraints.fuel_mix.clone(),
            reserve_min: doc.constraints.reserve_min,
            reserve_max: doc.constraints.reserve_max,
            lolp_max: doc.constraints.lolp_max,
        },
        ga: doc.ga.clone(),
        reliability: TablePolicy {
            capacity_rounding: doc.reliability.capacity_rounding_mw,
            prune_threshold: doc.reliability.prune_threshold,
        },
        fixed_builds,
        excluded,
    };
    problem.validate()?;
    Ok(problem)
}

/// Serializes a problem back into a self-contained document (costs in
/// million units, farm models inline).
pub fn to_document(problem: &Problem) -> ConfigDocument {
    let stages = problem.stage_count();
    let units = problem
        .units
        .iter()
        .map(|u| UnitDoc {
            id: u.id.clone(),
            kind: u.kind,
            fuel_class: u.fuel_class,
            unit_capacity_mw: u.unit_capacity,
            for_rate: Some(u.for_rate),
            invest_cost: Quantity::internal(u.invest_cost, CostUnit::MillionPerMw),
            fixed_om: Quantity::internal(u.fixed_om, CostUnit::MillionPerMwYear),
            variable_om: Quantity::internal(u.variable_om, CostUnit::MillionPerMwh),
            salvage_factor: u.salvage_factor,
            salvage_by_stage: u.salvage_by_stage.clone(),
            candidate: u.candidate,
            max_units_per_stage: None,
            min_units_per_stage: None,
            farm_model: u.farm_model.as_ref().map(|f| FarmModelDoc {
                farm_levels: Some(f.levels().iter().collect()),
                turbine_count: Some(f.turbine_count()),
                for_rate: Some(f.for_rate()),
                ..FarmModelDoc::default()
            }),
        })
        .collect();
    let column = |m: &Vec<Vec<u32>>, i: usize| (0..stages).map(|t| m[t][i]).collect::<Vec<u32>>();
    let c = &problem.constraints;
    let u_max = problem
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| (u.id.clone(), column(&c.u_max, i)))
        .collect();
    let u_min = problem
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| (u.id.clone(), column(&c.u_min, i)))
        .collect();
    let fixed_builds = problem
        .units
        .iter()
        .enumerate()
        .filter(|(i, _)| problem.fixed_builds.total_units(*i) > 0)
        .map(|(i, u)| {
            (
                u.id.clone(),
                (0..stages).map(|t| problem.fixed_builds.get(t, i)).collect(),
            )
        })
        .collect();
    ConfigDocument {
        name: None,
        description: None,
        units,
        existing: problem
            .existing
            .iter()
            .map(|e| ExistingDoc {
                name: e.name.clone(),
                unit_type: problem.units[e.unit_type].id.clone(),
                capacity_mw: e.capacity,
                count: e.count,
                for_rate: e.for_rate,
                fixed_om: e.fixed_om.map(|v| Quantity::internal(v, CostUnit::MillionPerMwYear)),
                variable_om: e.variable_om.map(|v| Quantity::internal(v, CostUnit::MillionPerMwh)),
            })
            .collect(),
        horizon: HorizonDoc {
            stage_count: stages,
            years_per_stage: problem.horizon.years_per_stage,
            lead_time_years: problem.horizon.lead_time,
            hours_per_year: problem.horizon.hours_per_year,
            peak_load_mw: problem.horizon.peak_load.clone(),
            base_year_peak_mw: None,
            base_load_ratio: problem.horizon.base_load_ratio,
            ldc_breakpoint: problem.horizon.ldc_breakpoint,
        },
        economics: EconomicsDoc {
            discount_rate: problem.economics.discount_rate,
            ceens: Quantity::internal(problem.economics.ceens, CostUnit::MillionPerMwh),
        },
        constraints: ConstraintsDoc {
            reserve_min: c.reserve_min,
            reserve_max: c.reserve_max,
            lolp_max: c.lolp_max,
            fuel_mix: c.fuel_mix.clone(),
            u_max,
            u_min,
        },
        ga: problem.ga.clone(),
        wind: WindDoc::default(),
        reliability: ReliabilityDoc {
            capacity_rounding_mw: problem.reliability.capacity_rounding,
            prune_threshold: problem.reliability.prune_threshold,
        },
        fixed_builds,
        exclude_types: problem
            .units
            .iter()
            .zip(&problem.excluded)
            .filter(|(_, &x)| x)
            .map(|(u, _)| u.id.clone())
            .collect(),
    }
}
