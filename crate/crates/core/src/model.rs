//! Planning problem definition and the plan / cumulative-state algebra.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};
use crate::ga::GaConfig;
use crate::load::LoadDurationCurve;
use crate::reliability::TablePolicy;
use crate::wind::FarmOutputModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Thermal,
    Wind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FuelClass {
    #[serde(rename = "OIL")]
    Oil,
    #[serde(rename = "LNG")]
    Lng,
    #[serde(rename = "COAL")]
    Coal,
    #[serde(rename = "PWR")]
    Pwr,
    #[serde(rename = "PHWR")]
    Phwr,
    #[serde(rename = "WIND")]
    Wind,
}

impl fmt::Display for FuelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FuelClass::Oil => "OIL",
            FuelClass::Lng => "LNG",
            FuelClass::Coal => "COAL",
            FuelClass::Pwr => "PWR",
            FuelClass::Phwr => "PHWR",
            FuelClass::Wind => "WIND",
        };
        f.write_str(s)
    }
}

/// A generating technology. Costs are in million currency units:
/// `invest_cost` per MW, `fixed_om` per MW-year, `variable_om` per MWh.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitType {
    pub id: String,
    pub kind: UnitKind,
    pub unit_capacity: f64,
    pub for_rate: f64,
    pub invest_cost: f64,
    pub fixed_om: f64,
    pub variable_om: f64,
    pub salvage_factor: f64,
    /// Optional per-stage override of `salvage_factor`.
    pub salvage_by_stage: Option<Vec<f64>>,
    pub fuel_class: FuelClass,
    pub farm_model: Option<FarmOutputModel>,
    pub candidate: bool,
}

impl UnitType {
    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |field: &str, msg: String| Err(GepError::invariant(format!("{path}.{field}"), msg));
        if !(self.unit_capacity.is_finite() && self.unit_capacity > 0.0) {
            return bad(
                "unit_capacity_mw",
                format!("must be positive, got {}", self.unit_capacity),
            );
        }
        if !(0.0..1.0).contains(&self.for_rate) {
            return bad("for_rate", format!("must lie in [0, 1), got {}", self.for_rate));
        }
        if !(0.0..1.0).contains(&self.salvage_factor) {
            return bad(
                "salvage_factor",
                format!("must lie in [0, 1), got {}", self.salvage_factor),
            );
        }
        if let Some(v) = &self.salvage_by_stage {
            if let Some(x) = v.iter().find(|x| !(0.0..1.0).contains(*x)) {
                return bad("salvage_by_stage", format!("factors must lie in [0, 1), got {x}"));
            }
        }
        for (name, v) in [
            ("invest_cost", self.invest_cost),
            ("fixed_om", self.fixed_om),
            ("variable_om", self.variable_om),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, format!("cost must be non-negative, got {v}"));
            }
        }
        match (self.kind, &self.farm_model) {
            (UnitKind::Wind, None) => bad("farm_model", "wind type requires a farm model".into()),
            (UnitKind::Thermal, Some(_)) => bad("farm_model", "only wind types carry a farm model".into()),
            (UnitKind::Wind, Some(f)) if (f.nameplate() - self.unit_capacity).abs() > 1e-6 * self.unit_capacity => bad(
                "unit_capacity_mw",
                format!(
                    "wind farm nameplate {} MW does not match its output model maximum {} MW",
                    self.unit_capacity,
                    f.nameplate()
                ),
            ),
            _ => Ok(()),
        }
    }

    pub fn salvage_at(&self, stage: usize) -> f64 {
        self.salvage_by_stage
            .as_ref()
            .and_then(|v| v.get(stage).copied())
            .unwrap_or(self.salvage_factor)
    }

    /// Capacity credited in energy dispatch: nameplate for thermal units,
    /// expected output for wind farms.
    pub fn dispatch_credit(&self) -> f64 {
        match &self.farm_model {
            Some(f) => f.expected_output(),
            None => self.unit_capacity,
        }
    }
}

/// An individual group of identical existing units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExistingUnit {
    pub name: String,
    /// Index into [`Problem::units`].
    pub unit_type: usize,
    pub capacity: f64,
    pub count: u32,
    pub for_rate: f64,
    /// Overrides of the type's costs (million currency units).
    pub fixed_om: Option<f64>,
    pub variable_om: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningHorizon {
    pub stage_count: usize,
    pub years_per_stage: u32,
    pub lead_time: f64,
    pub hours_per_year: f64,
    pub peak_load: Vec<f64>,
    pub base_load_ratio: f64,
    pub ldc_breakpoint: Option<(f64, f64)>,
}

impl PlanningHorizon {
    pub fn validate(&self) -> Result<()> {
        if self.stage_count < 1 {
            return Err(GepError::invariant("horizon.stage_count", "need at least one stage"));
        }
        if self.years_per_stage < 1 {
            return Err(GepError::invariant(
                "horizon.years_per_stage",
                "need at least one year per stage",
            ));
        }
        if self.peak_load.len() != self.stage_count {
            return Err(GepError::invariant(
                "horizon.peak_load_mw",
                format!(
                    "expected {} stage peaks, got {}",
                    self.stage_count,
                    self.peak_load.len()
                ),
            ));
        }
        if let Some((t, d)) = self
            .peak_load
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d > 0.0))
        {
            return Err(GepError::invariant(
                format!("horizon.peak_load_mw[{t}]"),
                format!("peak load must be positive, got {d}"),
            ));
        }
        if !(self.base_load_ratio > 0.0 && self.base_load_ratio <= 1.0) {
            return Err(GepError::invariant(
                "horizon.base_load_ratio",
                format!("must lie in (0, 1], got {}", self.base_load_ratio),
            ));
        }
        if !(self.lead_time.is_finite() && self.lead_time >= 0.0) {
            return Err(GepError::invariant("horizon.lead_time_years", "must be non-negative"));
        }
        Ok(())
    }

    /// Years from the base year to the start of `stage` (0-based).
    pub fn stage_start_year(&self, stage: usize) -> f64 {
        self.lead_time + (self.years_per_stage as f64) * stage as f64
    }

    /// Years from the base year to the end of the horizon.
    pub fn horizon_end_year(&self) -> f64 {
        self.stage_start_year(self.stage_count)
    }

    pub fn ldc(&self, stage: usize) -> Result<LoadDurationCurve> {
        LoadDurationCurve::new(
            self.peak_load[stage],
            self.base_load_ratio,
            self.hours_per_year,
            self.ldc_breakpoint,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomicParams {
    pub discount_rate: f64,
    /// Million currency units per MWh of unserved energy.
    pub ceens: f64,
}

impl EconomicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount_rate > -1.0 && self.discount_rate.is_finite()) {
            return Err(GepError::invariant("economics.discount_rate", "must exceed -1"));
        }
        if !(self.ceens >= 0.0 && self.ceens.is_finite()) {
            return Err(GepError::invariant("economics.ceens", "must be non-negative"));
        }
        Ok(())
    }

    /// Present value in the base year of `amount` paid `years` later.
    pub fn discount(&self, amount: f64, years: f64) -> f64 {
        amount * (1.0 + self.discount_rate).powf(-years)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixBand {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintParams {
    /// `u_max[t][i]`: most units of type `i` buildable in stage `t`.
    pub u_max: Vec<Vec<u32>>,
    /// `u_min[t][i]`: fewest units of type `i` that must be built in stage `t`.
    pub u_min: Vec<Vec<u32>>,
    pub fuel_mix: BTreeMap<FuelClass, MixBand>,
    pub reserve_min: f64,
    pub reserve_max: f64,
    pub lolp_max: f64,
}

impl ConstraintParams {
    pub fn validate(&self) -> Result<()> {
        for (class, band) in &self.fuel_mix {
            if !(0.0 <= band.min && band.min <= band.max && band.max <= 1.0) {
                return Err(GepError::invariant(
                    format!("constraints.fuel_mix.{class}"),
                    format!("need 0 <= min <= max <= 1, got [{}, {}]", band.min, band.max),
                ));
            }
        }
        if !(self.reserve_min > -1.0 && self.reserve_min <= self.reserve_max) {
            return Err(GepError::invariant(
                "constraints.reserve_min",
                format!(
                    "need -1 < r_min <= r_max, got {} and {}",
                    self.reserve_min, self.reserve_max
                ),
            ));
        }
        if !(self.lolp_max > 0.0 && self.lolp_max <= 1.0) {
            return Err(GepError::invariant("constraints.lolp_max", "must lie in (0, 1]"));
        }
        for (t, (lo, hi)) in self.u_min.iter().zip(&self.u_max).enumerate() {
            if let Some(i) = lo.iter().zip(hi).position(|(a, b)| a > b) {
                return Err(GepError::invariant(
                    format!("constraints.u_min[{t}][{i}]"),
                    "minimum builds exceed the maximum",
                ));
            }
        }
        Ok(())
    }
}

/// Units built per stage and type: `builds[t][i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExpansionPlan {
    stages: usize,
    types: usize,
    builds: Vec<u32>,
}

impl ExpansionPlan {
    pub fn zeros(stages: usize, types: usize) -> Self {
        ExpansionPlan {
            stages,
            types,
            builds: vec![0; stages * types],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let stages = rows.len();
        let types = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != types) {
            return Err(GepError::Dimension("plan rows have unequal lengths".into()));
        }
        Ok(ExpansionPlan {
            stages,
            types,
            builds: rows.into_iter().flatten().collect(),
        })
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn types(&self) -> usize {
        self.types
    }

    pub fn get(&self, stage: usize, unit: usize) -> u32 {
        self.builds[stage * self.types + unit]
    }

    pub fn set(&mut self, stage: usize, unit: usize, count: u32) {
        self.builds[stage * self.types + unit] = count;
    }

    pub fn stage(&self, stage: usize) -> &[u32] {
        &self.builds[stage * self.types..(stage + 1) * self.types]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.builds.chunks(self.types.max(1)).take(self.stages)
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.builds
    }

    pub fn total_units(&self, unit: usize) -> u32 {
        (0..self.stages).map(|t| self.get(t, unit)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.builds.iter().all(|&b| b == 0)
    }

    /// Element-wise sum.
    pub fn plus(&self, other: &ExpansionPlan) -> Result<ExpansionPlan> {
        self.check_shape(other.stages, other.types)?;
        Ok(ExpansionPlan {
            stages: self.stages,
            types: self.types,
            builds: self.builds.iter().zip(&other.builds).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn check_shape(&self, stages: usize, types: usize) -> Result<()> {
        if self.stages != stages || self.types != types {
            return Err(GepError::Dimension(format!(
                "plan is {}x{}, expected {}x{}",
                self.stages, self.types, stages, types
            )));
        }
        Ok(())
    }
}

/// Installed MW per stage and type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeState {
    installed: Vec<Vec<f64>>,
}

impl CumulativeState {
    pub fn stage(&self, stage: usize) -> &[f64] {
        &self.installed[stage]
    }

    pub fn stages(&self) -> usize {
        self.installed.len()
    }

    pub fn total(&self, stage: usize) -> f64 {
        self.installed[stage].iter().sum()
    }
}

/// Installed capacity after each stage's builds: `X[t] = X[t-1] + U[t] * unit_capacity`,
/// starting from `existing`.
pub fn cumulative_state(plan: &ExpansionPlan, existing: &[f64], unit_capacity: &[f64]) -> Result<CumulativeState> {
    if existing.len() != plan.types() || unit_capacity.len() != plan.types() {
        return Err(GepError::Dimension(format!(
            "plan has {} types, existing capacity has {}, unit sizes {}",
            plan.types(),
            existing.len(),
            unit_capacity.len()
        )));
    }
    let mut current = existing.to_vec();
    let mut installed = Vec::with_capacity(plan.stages());
    for row in plan.rows() {
        for ((x, &u), &size) in current.iter_mut().zip(row).zip(unit_capacity) {
            *x += u as f64 * size;
        }
        installed.push(current.clone());
    }
    Ok(CumulativeState { installed })
}

/// A validated planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub units: Vec<UnitType>,
    pub existing: Vec<ExistingUnit>,
    pub horizon: PlanningHorizon,
    pub economics: EconomicParams,
    pub constraints: ConstraintParams,
    pub ga: GaConfig,
    pub reliability: TablePolicy,
    /// Exogenous builds added on top of every plan; they bypass the build limits.
    pub fixed_builds: ExpansionPlan,
    /// Types removed from the search space.
    pub excluded: Vec<bool>,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(GepError::invariant("units", "at least one unit type is required"));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, u) in self.units.iter().enumerate() {
            u.validate(&format!("units[{i}]"))?;
            if !seen.insert(u.id.as_str()) {
                return Err(GepError::invariant(
                    format!("units[{i}].id"),
                    format!("duplicate id {:?}", u.id),
                ));
            }
            if let Some(v) = &u.salvage_by_stage {
                if v.len() != self.horizon.stage_count {
                    return Err(GepError::invariant(
                        format!("units[{i}].salvage_by_stage"),
                        "needs one factor per stage",
                    ));
                }
            }
        }
        for (k, e) in self.existing.iter().enumerate() {
            if e.unit_type >= self.units.len() {
                return Err(GepError::invariant(
                    format!("existing[{k}].unit_type"),
                    "unknown unit type",
                ));
            }
            if !(e.capacity > 0.0) || !(0.0..1.0).contains(&e.for_rate) {
                return Err(GepError::invariant(
                    format!("existing[{k}]"),
                    "capacity must be positive and for_rate in [0, 1)",
                ));
            }
            if self.units[e.unit_type].kind == UnitKind::Wind {
                return Err(GepError::invariant(
                    format!("existing[{k}].unit_type"),
                    "existing wind capacity is not supported; add it as fixed builds",
                ));
            }
        }
        self.horizon.validate()?;
        self.economics.validate()?;
        self.reliability.validate()?;
        let (t, n) = (self.horizon.stage_count, self.units.len());
        for (name, m) in [("u_max", &self.constraints.u_max), ("u_min", &self.constraints.u_min)] {
            if m.len() != t || m.iter().any(|r| r.len() != n) {
                return Err(GepError::Dimension(format!("constraints.{name} must be {t}x{n}")));
            }
        }
        self.constraints.validate()?;
        for (i, u) in self.units.iter().enumerate() {
            if !u.candidate && (0..t).any(|s| self.constraints.u_max[s][i] > 0) {
                return Err(GepError::invariant(
                    format!("units[{i}].max_units_per_stage"),
                    "existing-only types cannot be built",
                ));
            }
        }
        self.fixed_builds.check_shape(t, n)?;
        if self.excluded.len() != n {
            return Err(GepError::Dimension("excluded flags must cover every type".into()));
        }
        self.ga.validate()?;
        Ok(())
    }

    pub fn stage_count(&self) -> usize {
        self.horizon.stage_count
    }

    pub fn type_count(&self) -> usize {
        self.units.len()
    }

    pub fn type_index(&self, id: &str) -> Option<usize> {
        self.units.iter().position(|u| u.id.eq_ignore_ascii_case(id))
    }

    /// Existing MW per type.
    pub fn existing_capacity(&self) -> Vec<f64> {
        let mut mw = vec![0.0; self.units.len()];
        for e in &self.existing {
            mw[e.unit_type] += e.capacity * e.count as f64;
        }
        mw
    }

    pub fn unit_capacities(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.unit_capacity).collect()
    }

    /// Plan plus the exogenous builds.
    pub fn effective_builds(&self, plan: &ExpansionPlan) -> Result<ExpansionPlan> {
        plan.plus(&self.fixed_builds)
    }

    pub fn cumulative(&self, plan: &ExpansionPlan) -> Result<CumulativeState> {
        let all = self.effective_builds(plan)?;
        cumulative_state(&all, &self.existing_capacity(), &self.unit_capacities())
    }

    /// Types that carry genes in the search: candidates that are not excluded
    /// and have room to build in at least one stage.
    pub fn gene_types(&self) -> Vec<usize> {
        (0..self.units.len())
            .filter(|&i| self.units[i].candidate && !self.excluded[i])
            .collect()
    }

    /// Gene bounds `(min, max)` for stage `t` and type `i`; excluded and
    /// non-candidate types are pinned to zero.
    pub fn gene_bounds(&self, t: usize, i: usize) -> (u32, u32) {
        if !self.units[i].candidate || self.excluded[i] {
            (0, 0)
        } else {
            (self.constraints.u_min[t][i], self.constraints.u_max[t][i])
        }
    }

    /// Removes the given types from the search space.
    pub fn exclude_types(&mut self, ids: &[String]) -> Result<()> {
        for id in ids {
            let i = self
                .type_index(id)
                .ok_or_else(|| GepError::invariant("exclude_types", format!("unknown unit type {id:?}")))?;
            self.excluded[i] = true;
        }
        Ok(())
    }
}
