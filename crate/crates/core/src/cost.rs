//! Discounted objective: investment, salvage, O&M with merit-order dispatch
//! and the cost of expected energy not served.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};
use crate::load::LoadDurationCurve;
use crate::model::{CumulativeState, ExpansionPlan, Problem};

/// Present value in the base year of `amount` paid `years` later.
pub fn discount_to_base(amount: f64, years: f64, rate: f64) -> f64 {
    amount * (1.0 + rate).powf(-years)
}

/// Sum of the mid-year discount factors of the years inside `stage`.
pub fn stage_year_factor(problem: &Problem, stage: usize) -> f64 {
    let start = problem.horizon.stage_start_year(stage);
    let d = problem.economics.discount_rate;
    (0..problem.horizon.years_per_stage)
        .map(|y| (1.0 + d).powf(-(start + 0.5 + y as f64)))
        .sum()
}

/// Present value of the capital spent at the start of `stage` on `builds`
/// (all built units, exogenous ones included).
pub fn investment_cost(problem: &Problem, builds: &ExpansionPlan, stage: usize) -> f64 {
    let spent: f64 = problem
        .units
        .iter()
        .zip(builds.stage(stage))
        .map(|(u, &n)| u.invest_cost * u.unit_capacity * n as f64)
        .sum();
    problem
        .economics
        .discount(spent, problem.horizon.stage_start_year(stage))
}

/// Present value of the residual worth of the units built in `stage`,
/// credited once at the end of the horizon.
pub fn salvage_in_stage(problem: &Problem, builds: &ExpansionPlan, stage: usize) -> f64 {
    let residual: f64 = problem
        .units
        .iter()
        .zip(builds.stage(stage))
        .map(|(u, &n)| u.salvage_at(stage) * u.invest_cost * u.unit_capacity * n as f64)
        .sum();
    problem.economics.discount(residual, problem.horizon.horizon_end_year())
}

pub fn salvage_value(problem: &Problem, builds: &ExpansionPlan) -> f64 {
    (0..builds.stages()).map(|t| salvage_in_stage(problem, builds, t)).sum()
}

/// Loads blocks of `credit` MW in ascending order of `marginal_cost` (ties by
/// position) under the LDC and returns the annual energy (MWh) each serves.
pub fn dispatch_energy(credit: &[f64], marginal_cost: &[f64], ldc: &LoadDurationCurve) -> Vec<f64> {
    let mut order: Vec<usize> = (0..credit.len()).collect();
    order.sort_by(|&a, &b| marginal_cost[a].total_cmp(&marginal_cost[b]).then(a.cmp(&b)));
    let mut energy = vec![0.0; credit.len()];
    let mut level = 0.0;
    for k in order {
        let top = level + credit[k];
        energy[k] = ldc.energy_between(level, top);
        level = top;
    }
    energy
}

/// One dispatchable block of a stage: part of a type's installed capacity
/// with its own costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub unit_type: usize,
    /// Installed nameplate MW.
    pub capacity: f64,
    /// MW credited in dispatch.
    pub credit: f64,
    pub fixed_om: f64,
    pub variable_om: f64,
}

/// Splits a stage's installed capacity into dispatch blocks: existing groups
/// with cost overrides keep their own costs, the rest of each type uses the
/// type's costs. Wind is credited at its expected output.
pub fn stage_blocks(problem: &Problem, installed: &[f64]) -> Vec<Block> {
    let mut blocks = Vec::with_capacity(installed.len() + problem.existing.len());
    let mut rest = installed.to_vec();
    for e in &problem.existing {
        if e.fixed_om.is_none() && e.variable_om.is_none() {
            continue;
        }
        let u = &problem.units[e.unit_type];
        let mw = e.capacity * e.count as f64;
        rest[e.unit_type] -= mw;
        blocks.push(Block {
            unit_type: e.unit_type,
            capacity: mw,
            credit: mw,
            fixed_om: e.fixed_om.unwrap_or(u.fixed_om),
            variable_om: e.variable_om.unwrap_or(u.variable_om),
        });
    }
    for (i, (u, &mw)) in problem.units.iter().zip(&rest).enumerate() {
        if mw <= 0.0 {
            continue;
        }
        blocks.push(Block {
            unit_type: i,
            capacity: mw,
            credit: mw / u.unit_capacity * u.dispatch_credit(),
            fixed_om: u.fixed_om,
            variable_om: u.variable_om,
        });
    }
    blocks
}

/// Annual O&M of one stage split into fixed and variable parts, plus the
/// per-type energy served.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOperation {
    pub fixed_om: f64,
    pub variable_om: f64,
    pub energy_by_type: Vec<f64>,
}

pub fn stage_operation(problem: &Problem, installed: &[f64], ldc: &LoadDurationCurve) -> StageOperation {
    let blocks = stage_blocks(problem, installed);
    let credit: Vec<f64> = blocks.iter().map(|b| b.credit).collect();
    let mc: Vec<f64> = blocks.iter().map(|b| b.variable_om).collect();
    let energy = dispatch_energy(&credit, &mc, ldc);
    let mut by_type = vec![0.0; installed.len()];
    let (mut fixed, mut variable) = (0.0, 0.0);
    for (b, e) in blocks.iter().zip(&energy) {
        by_type[b.unit_type] += e;
        fixed += b.capacity * b.fixed_om;
        variable += b.variable_om * e;
    }
    StageOperation {
        fixed_om: fixed,
        variable_om: variable,
        energy_by_type: by_type,
    }
}

/// Present value of a stage's O&M given its per-type installed MW and
/// energy served.
pub fn om_cost(problem: &Problem, installed: &[f64], energy: &[f64], stage: usize) -> f64 {
    let annual: f64 = problem
        .units
        .iter()
        .zip(installed.iter().zip(energy))
        .map(|(u, (&x, &e))| x * u.fixed_om + u.variable_om * e)
        .sum();
    annual * stage_year_factor(problem, stage)
}

/// Present value of the unserved energy of a stage, `eens` MWh in each of its years.
pub fn eens_cost(problem: &Problem, eens: f64, stage: usize) -> f64 {
    eens * problem.economics.ceens * stage_year_factor(problem, stage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    pub stage: usize,
    pub investment: f64,
    pub salvage: f64,
    pub fixed_om: f64,
    pub variable_om: f64,
    pub eens_cost: f64,
    /// Unserved energy per year of the stage (MWh).
    pub eens_mwh: f64,
    pub lolp: f64,
}

/// Present-value objective components (million currency units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub investment: f64,
    pub salvage: f64,
    pub fixed_om: f64,
    pub variable_om: f64,
    pub eens_cost: f64,
    pub total: f64,
    pub stages: Vec<StageCost>,
}

impl CostBreakdown {
    /// Assembles the objective from the plan and each stage's adequacy
    /// indices `(lolp, eens MWh/yr)`.
    pub fn assemble(
        problem: &Problem,
        builds: &ExpansionPlan,
        state: &CumulativeState,
        ldcs: &[LoadDurationCurve],
        adequacy: &[(f64, f64)],
    ) -> Result<Self> {
        let n = problem.stage_count();
        if state.stages() != n || ldcs.len() != n || adequacy.len() != n {
            return Err(GepError::Dimension(format!(
                "expected {n} stages of state, load and adequacy"
            )));
        }
        let mut stages = Vec::with_capacity(n);
        for t in 0..n {
            let op = stage_operation(problem, state.stage(t), &ldcs[t]);
            let factor = stage_year_factor(problem, t);
            let (lolp, eens) = adequacy[t];
            stages.push(StageCost {
                stage: t + 1,
                investment: investment_cost(problem, builds, t),
                salvage: salvage_in_stage(problem, builds, t),
                fixed_om: op.fixed_om * factor,
                variable_om: op.variable_om * factor,
                eens_cost: eens_cost(problem, eens, t),
                eens_mwh: eens,
                lolp,
            });
        }
        Ok(Self::from_stages(stages))
    }

    pub fn from_stages(stages: Vec<StageCost>) -> Self {
        let sum = |f: fn(&StageCost) -> f64| stages.iter().map(f).sum::<f64>();
        let investment = sum(|s| s.investment);
        let salvage = sum(|s| s.salvage);
        let fixed_om = sum(|s| s.fixed_om);
        let variable_om = sum(|s| s.variable_om);
        let eens_cost = sum(|s| s.eens_cost);
        CostBreakdown {
            investment,
            salvage,
            fixed_om,
            variable_om,
            eens_cost,
            total: investment + fixed_om + variable_om + eens_cost - salvage,
            stages,
        }
    }

    /// Fixed plus variable O&M plus the cost of unserved energy.
    pub fn operational(&self) -> f64 {
        self.fixed_om + self.variable_om + self.eens_cost
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "stage",
            "investment",
            "salvage",
            "fixed_om",
            "variable_om",
            "eens_cost",
            "eens_mwh",
            "lolp",
        ])?;
        for s in &self.stages {
            wtr.write_record([
                s.stage.to_string(),
                s.investment.to_string(),
                s.salvage.to_string(),
                s.fixed_om.to_string(),
                s.variable_om.to_string(),
                s.eens_cost.to_string(),
                s.eens_mwh.to_string(),
                s.lolp.to_string(),
            ])?;
        }
        wtr.write_record([
            "total".to_string(),
            self.investment.to_string(),
            self.salvage.to_string(),
            self.fixed_om.to_string(),
            self.variable_om.to_string(),
            self.eens_cost.to_string(),
            String::new(),
            String::new(),
        ])?;
        wtr.flush().map_err(|e| GepError::io("<csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn discount_examples() {
        assert_eq!(discount_to_base(89.1, 0.0, 0.085), 89.1);
        assert_relative_eq!(discount_to_base(89.1, 2.0, 0.085), 75.686, max_relative = 1e-4);
        assert_eq!(discount_to_base(3.0, 11.0, 0.0), 3.0);
    }

    #[test]
    fn two_block_dispatch() {
        let ldc = LoadDurationCurve::new(7000.0, 0.5, 8760.0, None).unwrap();
        let e = dispatch_energy(&[10_000.0, 3500.0], &[0.05, 0.01], &ldc);
        assert_relative_eq!(e[1], 30_660_000.0, max_relative = 1e-12);
        assert_relative_eq!(e[0], 15_330_000.0, max_relative = 1e-12);
    }

    #[test]
    fn equal_costs_load_lower_index_first() {
        let ldc = LoadDurationCurve::new(100.0, 1.0, 10.0, None).unwrap();
        let e = dispatch_energy(&[60.0, 60.0], &[1.0, 1.0], &ldc);
        assert_relative_eq!(e[0], 600.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 400.0, max_relative = 1e-12);
    }

    #[test]
    fn sole_supplier_serves_everything() {
        let ldc = LoadDurationCurve::new(7000.0, 0.5, 8760.0, None).unwrap();
        let e = dispatch_energy(&[9000.0], &[0.01], &ldc);
        assert_relative_eq!(e[0], ldc.total_energy(), max_relative = 1e-12);
    }
}
