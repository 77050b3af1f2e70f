//! Build limits, fuel mix, reserve margin and LOLP checks, aggregated into a
//! quantified feasibility report.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};
use crate::model::{ConstraintParams, ExpansionPlan, FuelClass, Problem, UnitType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    BuildLimit,
    FuelMix,
    Reserve,
    Lolp,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::BuildLimit => "build_limit",
            ConstraintKind::FuelMix => "fuel_mix",
            ConstraintKind::Reserve => "reserve",
            ConstraintKind::Lolp => "lolp",
        })
    }
}

/// One evaluated constraint. `magnitude` is in the constraint's natural
/// unit: units for build limits, ratio for fuel mix, MW for reserve and
/// probability for LOLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    /// 1-based stage.
    pub stage: usize,
    /// Unit type id or fuel class, when the constraint has one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subject: Option<String>,
    pub measured: f64,
    pub bound: f64,
    pub magnitude: f64,
}

/// Build-limit violations: units outside `[u_min, u_max]` for every stage and type.
pub fn check_build_limits(plan: &ExpansionPlan, params: &ConstraintParams, units: &[UnitType]) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in 0..plan.stages() {
        for (i, u) in units.iter().enumerate() {
            let n = plan.get(t, i);
            let (lo, hi) = (params.u_min[t][i], params.u_max[t][i]);
            let (bound, magnitude) = if n > hi {
                (hi, n - hi)
            } else if n < lo {
                (lo, lo - n)
            } else {
                (hi, 0)
            };
            out.push(Violation {
                kind: ConstraintKind::BuildLimit,
                stage: t + 1,
                subject: Some(u.id.clone()),
                measured: n as f64,
                bound: bound as f64,
                magnitude: magnitude as f64,
            });
        }
    }
    out
}

/// Installed MW per fuel class.
pub fn class_capacity(installed: &[f64], units: &[UnitType]) -> BTreeMap<FuelClass, f64> {
    let mut by_class = BTreeMap::new();
    for (u, &x) in units.iter().zip(installed) {
        *by_class.entry(u.fuel_class).or_insert(0.0) += x;
    }
    by_class
}

/// Fuel-mix shares against their bands; the denominator is total installed
/// nameplate including wind.
pub fn check_fuel_mix(
    installed: &[f64],
    units: &[UnitType],
    params: &ConstraintParams,
    stage: usize,
) -> Result<Vec<Violation>> {
    if params.fuel_mix.is_empty() {
        return Ok(Vec::new());
    }
    let total: f64 = installed.iter().sum();
    if total <= 0.0 {
        return Err(GepError::Degenerate(format!(
            "stage {} has no installed capacity; fuel shares are undefined",
            stage + 1
        )));
    }
    let by_class = class_capacity(installed, units);
    Ok(params
        .fuel_mix
        .iter()
        .map(|(class, band)| {
            let ratio = by_class.get(class).copied().unwrap_or(0.0) / total;
            let (bound, magnitude) = if ratio < band.min {
                (band.min, band.min - ratio)
            } else if ratio > band.max {
                (band.max, ratio - band.max)
            } else if ratio - band.min < band.max - ratio {
                (band.min, 0.0)
            } else {
                (band.max, 0.0)
            };
            Violation {
                kind: ConstraintKind::FuelMix,
                stage: stage + 1,
                subject: Some(class.to_string()),
                measured: ratio,
                bound,
                magnitude,
            }
        })
        .collect())
}

/// Reserve margin `(installed - peak) / peak`.
pub fn reserve_margin(total_installed: f64, peak: f64) -> f64 {
    (total_installed - peak) / peak
}

/// Installed nameplate against `[(1 + r_min) D, (1 + r_max) D]`; the measured
/// value is the reserve margin, the magnitude is MW outside the band.
pub fn check_reserve(total_installed: f64, peak: f64, params: &ConstraintParams, stage: usize) -> Violation {
    let lo = (1.0 + params.reserve_min) * peak;
    let hi = (1.0 + params.reserve_max) * peak;
    let (bound, magnitude) = if total_installed < lo {
        (params.reserve_min, lo - total_installed)
    } else if total_installed > hi {
        (params.reserve_max, total_installed - hi)
    } else {
        (params.reserve_min, 0.0)
    };
    Violation {
        kind: ConstraintKind::Reserve,
        stage: stage + 1,
        subject: None,
        measured: reserve_margin(total_installed, peak),
        bound,
        magnitude,
    }
}

pub fn check_lolp(lolp: f64, params: &ConstraintParams, stage: usize) -> Violation {
    Violation {
        kind: ConstraintKind::Lolp,
        stage: stage + 1,
        subject: None,
        measured: lolp,
        bound: params.lolp_max,
        magnitude: (lolp - params.lolp_max).max(0.0),
    }
}

/// Every evaluated constraint of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub records: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn new(records: Vec<Violation>) -> Self {
        FeasibilityReport {
            feasible: records.iter().all(|v| v.magnitude == 0.0),
            records,
        }
    }

    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.records.iter().filter(|v| v.magnitude > 0.0)
    }

    pub fn violation_count(&self) -> usize {
        self.violations().count()
    }

    pub fn count_of(&self, kind: ConstraintKind) -> usize {
        self.violations().filter(|v| v.kind == kind).count()
    }

    /// Stage of the first violated constraint of `kind`.
    pub fn first_violation(&self, kind: ConstraintKind) -> Option<&Violation> {
        self.violations().filter(|v| v.kind == kind).min_by_key(|v| v.stage)
    }

    /// Sum of violations of `kind` in penalty units: units for build limits,
    /// share for fuel mix, MW over peak for reserve and multiples of the bound for LOLP.
    pub fn normalized(&self, kind: ConstraintKind, problem: &Problem) -> f64 {
        self.violations()
            .filter(|v| v.kind == kind)
            .map(|v| match kind {
                ConstraintKind::BuildLimit | ConstraintKind::FuelMix => v.magnitude,
                ConstraintKind::Reserve => v.magnitude / problem.horizon.peak_load[v.stage - 1],
                ConstraintKind::Lolp => v.magnitude / problem.constraints.lolp_max,
            })
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// All four checks for every stage, given each stage's LOLP.
pub fn evaluate_feasibility(problem: &Problem, plan: &ExpansionPlan, lolp: &[f64]) -> Result<FeasibilityReport> {
    plan.check_shape(problem.stage_count(), problem.type_count())?;
    if lolp.len() != problem.stage_count() {
        return Err(GepError::Dimension("one LOLP value per stage is required".into()));
    }
    let c = &problem.constraints;
    // Excluded types are pinned to zero, so their minimum build does not apply.
    let mut records = if problem.excluded.iter().any(|&e| e) {
        let mut relaxed = c.clone();
        for row in relaxed.u_min.iter_mut() {
            for (i, lo) in row.iter_mut().enumerate() {
                if problem.excluded[i] {
                    *lo = 0;
                }
            }
        }
        check_build_limits(plan, &relaxed, &problem.units)
    } else {
        check_build_limits(plan, c, &problem.units)
    };
    let state = problem.cumulative(plan)?;
    for t in 0..problem.stage_count() {
        let x = state.stage(t);
        records.push(check_reserve(state.total(t), problem.horizon.peak_load[t], c, t));
        match check_fuel_mix(x, &problem.units, c, t) {
            Ok(v) => records.extend(v),
            // No capacity at all: every class sits at a zero share.
            Err(GepError::Degenerate(_)) => records.extend(c.fuel_mix.iter().map(|(class, band)| Violation {
                kind: ConstraintKind::FuelMix,
                stage: t + 1,
                subject: Some(class.to_string()),
                measured: 0.0,
                bound: band.min,
                magnitude: band.min,
            })),
            Err(e) => return Err(e),
        }
        records.push(check_lolp(lolp[t], c, t));
    }
    Ok(FeasibilityReport::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MixBand, UnitKind};

    fn params() -> ConstraintParams {
        let mut fuel_mix = BTreeMap::new();
        fuel_mix.insert(FuelClass::Oil, MixBand { min: 0.0, max: 0.3 });
        fuel_mix.insert(FuelClass::Coal, MixBand { min: 0.2, max: 0.6 });
        ConstraintParams {
            u_max: vec![vec![2, 2]],
            u_min: vec![vec![0, 0]],
            fuel_mix,
            reserve_min: 0.15,
            reserve_max: 0.40,
            lolp_max: 0.01,
        }
    }

    fn unit(id: &str, class: FuelClass) -> UnitType {
        UnitType {
            id: id.into(),
            kind: UnitKind::Thermal,
            unit_capacity: 100.0,
            for_rate: 0.1,
            invest_cost: 1.0,
            fixed_om: 0.0,
            variable_om: 0.0,
            salvage_factor: 0.0,
            salvage_by_stage: None,
            fuel_class: class,
            farm_model: None,
            candidate: true,
        }
    }

    #[test]
    fn build_limits() {
        let units = [unit("A", FuelClass::Oil), unit("B", FuelClass::Coal)];
        let p = params();
        let at_max = ExpansionPlan::from_rows(vec![vec![2, 2]]).unwrap();
        assert!(check_build_limits(&at_max, &p, &units)
            .iter()
            .all(|v| v.magnitude == 0.0));
        let over = ExpansionPlan::from_rows(vec![vec![4, 0]]).unwrap();
        let v = check_build_limits(&over, &p, &units);
        assert_eq!(v[0].magnitude, 2.0);
        assert_eq!(v[1].magnitude, 0.0);
    }

    #[test]
    fn fuel_mix_bands() {
        let units = [
            unit("A", FuelClass::Oil),
            unit("B", FuelClass::Coal),
            unit("C", FuelClass::Lng),
        ];
        let v = check_fuel_mix(&[1000.0, 1000.0, 8000.0], &units, &params(), 0).unwrap();
        let oil = v.iter().find(|r| r.subject.as_deref() == Some("OIL")).unwrap();
        assert!((oil.measured - 0.1).abs() < 1e-15);
        assert_eq!(oil.magnitude, 0.0);
        let coal = v.iter().find(|r| r.subject.as_deref() == Some("COAL")).unwrap();
        assert!((coal.magnitude - 0.1).abs() < 1e-12);
        assert!(check_fuel_mix(&[0.0, 0.0, 0.0], &units, &params(), 0).is_err());
    }

    #[test]
    fn reserve_band() {
        let p = params();
        let v = check_reserve(5100.0, 5000.0, &p, 0);
        assert!((v.measured - 0.02).abs() < 1e-12);
        assert!((v.magnitude - 650.0).abs() < 1e-9);
        assert_eq!(check_reserve(1.15 * 4000.0, 4000.0, &p, 0).magnitude, 0.0);
        let high = check_reserve(1.5 * 4000.0, 4000.0, &p, 0);
        assert!((high.magnitude - 400.0).abs() < 1e-9);
    }

    #[test]
    fn lolp_bound() {
        let p = params();
        assert_eq!(check_lolp(0.0, &p, 0).magnitude, 0.0);
        assert!((check_lolp(0.1, &p, 0).magnitude - 0.09).abs() < 1e-15);
        let loose = ConstraintParams { lolp_max: 1.0, ..p };
        assert_eq!(check_lolp(1.0, &loose, 0).magnitude, 0.0);
    }
}
