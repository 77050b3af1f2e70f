//! Plan evaluation: cost breakdown, adequacy indices and feasibility.
//!
//! [`Evaluator`] is the fast path used by the search. The thermal table is
//! grown stage by stage from a precomputed table of the existing fleet, the
//! distribution of total wind output is cached per farm count, and the stage
//! indices of `thermal ⊗ wind` come from prefix moments of the thermal table
//! without building the product. [`reference_adequacy`] convolves every unit
//! directly and serves as the oracle for it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::constraints::{evaluate_feasibility, ConstraintKind, FeasibilityReport};
use crate::cost::{investment_cost, CostBreakdown};
use crate::error::Result;
use crate::load::LoadDurationCurve;
use crate::model::{ExpansionPlan, Problem, UnitKind};
use crate::reliability::{Adequacy, MomentTable, OutageTable};

/// Multipliers applied to normalized violations; `None` means the default of
/// ten times the largest single-stage investment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyWeights {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_mix: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lolp: Option<f64>,
}

/// Resolved penalty multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub build_limit: f64,
    pub fuel_mix: f64,
    pub reserve: f64,
    pub lolp: f64,
}

impl Penalties {
    pub fn resolve(weights: &PenaltyWeights, problem: &Problem) -> Self {
        let default = 10.0 * largest_stage_investment(problem);
        Penalties {
            build_limit: weights.build_limit.unwrap_or(default),
            fuel_mix: weights.fuel_mix.unwrap_or(default),
            reserve: weights.reserve.unwrap_or(default),
            lolp: weights.lolp.unwrap_or(default),
        }
    }

    pub fn weight(&self, kind: ConstraintKind) -> f64 {
        match kind {
            ConstraintKind::BuildLimit => self.build_limit,
            ConstraintKind::FuelMix => self.fuel_mix,
            ConstraintKind::Reserve => self.reserve,
            ConstraintKind::Lolp => self.lolp,
        }
    }

    pub fn penalty(&self, report: &FeasibilityReport, problem: &Problem) -> f64 {
        [
            ConstraintKind::BuildLimit,
            ConstraintKind::FuelMix,
            ConstraintKind::Reserve,
            ConstraintKind::Lolp,
        ]
        .into_iter()
        .map(|k| self.weight(k) * report.normalized(k, problem))
        .sum()
    }
}

/// Present value of the most expensive single stage: every gene at its
/// upper bound plus the exogenous builds. Falls back to one when nothing
/// can be built.
pub fn largest_stage_investment(problem: &Problem) -> f64 {
    let (n, k) = (problem.stage_count(), problem.type_count());
    let mut full = ExpansionPlan::zeros(n, k);
    for t in 0..n {
        for i in 0..k {
            full.set(t, i, problem.gene_bounds(t, i).1 + problem.fixed_builds.get(t, i));
        }
    }
    let worst = (0..n).map(|t| investment_cost(problem, &full, t)).fold(0.0, f64::max);
    if worst > 0.0 {
        worst
    } else {
        1.0
    }
}

/// Full result of evaluating one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub plan: ExpansionPlan,
    pub breakdown: CostBreakdown,
    pub feasibility: FeasibilityReport,
    pub adequacy: Vec<Adequacy>,
    pub penalty: f64,
    pub fitness: f64,
}

/// The scalar part of an evaluation, cheap to cache.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub fitness: f64,
    pub total: f64,
    pub penalty: f64,
}

impl Score {
    pub fn feasible(&self) -> bool {
        self.penalty == 0.0
    }
}

/// Stage adequacy by convolving every unit of the stage into one table.
pub fn reference_adequacy(problem: &Problem, plan: &ExpansionPlan) -> Result<Vec<Adequacy>> {
    let builds = problem.effective_builds(plan)?;
    let mut out = Vec::with_capacity(problem.stage_count());
    for t in 0..problem.stage_count() {
        let table = stage_table(problem, &builds, t);
        let ldc = problem.horizon.ldc(t)?;
        out.push(Adequacy {
            lolp: table.lolp(&ldc),
            eens: table.eens(&ldc),
        });
    }
    Ok(out)
}

/// The complete capacity table of stage `t` for `builds` (exogenous builds
/// already included).
pub fn stage_table(problem: &Problem, builds: &ExpansionPlan, t: usize) -> OutageTable {
    let mut table = OutageTable::empty(problem.reliability);
    for e in &problem.existing {
        for _ in 0..e.count {
            table.add_two_state(e.capacity, e.for_rate);
        }
    }
    for s in 0..=t {
        for (i, u) in problem.units.iter().enumerate() {
            for _ in 0..builds.get(s, i) {
                match &u.farm_model {
                    Some(f) => table = table.convolve_multi_state(f),
                    None => table.add_two_state(u.unit_capacity, u.for_rate),
                }
            }
        }
    }
    table
}

/// Fast, thread-safe evaluator bound to one problem.
pub struct Evaluator<'a> {
    problem: &'a Problem,
    ldcs: Vec<LoadDurationCurve>,
    existing: OutageTable,
    wind_types: Vec<usize>,
    penalties: Penalties,
    wind_cache: Mutex<HashMap<Vec<u32>, Arc<Vec<(f64, f64)>>>>,
    score_cache: Mutex<HashMap<ExpansionPlan, Score>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem) -> Result<Self> {
        let ldcs = (0..problem.stage_count())
            .map(|t| problem.horizon.ldc(t))
            .collect::<Result<Vec<_>>>()?;
        let mut existing = OutageTable::empty(problem.reliability);
        for e in &problem.existing {
            for _ in 0..e.count {
                existing.add_two_state(e.capacity, e.for_rate);
            }
        }
        let wind_types = (0..problem.type_count())
            .filter(|&i| problem.units[i].kind == UnitKind::Wind)
            .collect();
        Ok(Evaluator {
            problem,
            ldcs,
            existing,
            wind_types,
            penalties: Penalties::resolve(&problem.ga.penalty_weights, problem),
            wind_cache: Mutex::new(HashMap::new()),
            score_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn penalties(&self) -> &Penalties {
        &self.penalties
    }

    pub fn ldcs(&self) -> &[LoadDurationCurve] {
        &self.ldcs
    }

    /// Distribution of the total output of `counts[k]` farms of each wind type.
    fn wind_distribution(&self, counts: Vec<u32>) -> Arc<Vec<(f64, f64)>> {
        if let Some(d) = self.wind_cache.lock().unwrap().get(&counts) {
            return d.clone();
        }
        let mut table = OutageTable::empty(self.problem.reliability);
        for (&i, &n) in self.wind_types.iter().zip(&counts) {
            let farm = self.problem.units[i]
                .farm_model
                .as_ref()
                .expect("wind type has a farm model");
            for _ in 0..n {
                table = table.convolve_multi_state(farm);
            }
        }
        let dist = Arc::new(table.entries().collect::<Vec<_>>());
        self.wind_cache.lock().unwrap().insert(counts, dist.clone());
        dist
    }

    /// Stage adequacy indices of `plan` (exogenous builds added here).
    pub fn adequacy(&self, plan: &ExpansionPlan) -> Result<Vec<Adequacy>> {
        let builds = self.problem.effective_builds(plan)?;
        let mut thermal = self.existing.clone();
        let mut wind = vec![0u32; self.wind_types.len()];
        let mut out = Vec::with_capacity(self.problem.stage_count());
        for t in 0..self.problem.stage_count() {
            for (i, u) in self.problem.units.iter().enumerate() {
                let n = builds.get(t, i);
                if u.kind == UnitKind::Thermal {
                    for _ in 0..n {
                        thermal.add_two_state(u.unit_capacity, u.for_rate);
                    }
                }
            }
            for (k, &i) in self.wind_types.iter().enumerate() {
                wind[k] += builds.get(t, i);
            }
            let dist = self.wind_distribution(wind.clone());
            let moments = MomentTable::new(&thermal);
            out.push(moments.adequacy_with(dist.iter().copied(), &self.ldcs[t]));
        }
        Ok(out)
    }

    pub fn evaluate(&self, plan: &ExpansionPlan) -> Result<Evaluation> {
        let adequacy = self.adequacy(plan)?;
        self.assemble(plan, adequacy)
    }

    /// Same as [`Evaluator::evaluate`] but with adequacy from the direct
    /// convolution of every unit.
    pub fn evaluate_reference(&self, plan: &ExpansionPlan) -> Result<Evaluation> {
        let adequacy = reference_adequacy(self.problem, plan)?;
        self.assemble(plan, adequacy)
    }

    fn assemble(&self, plan: &ExpansionPlan, adequacy: Vec<Adequacy>) -> Result<Evaluation> {
        let p = self.problem;
        let builds = p.effective_builds(plan)?;
        let state = p.cumulative(plan)?;
        let pairs: Vec<(f64, f64)> = adequacy.iter().map(|a| (a.lolp, a.eens)).collect();
        let breakdown = CostBreakdown::assemble(p, &builds, &state, &self.ldcs, &pairs)?;
        let lolp: Vec<f64> = adequacy.iter().map(|a| a.lolp).collect();
        let feasibility = evaluate_feasibility(p, plan, &lolp)?;
        let penalty = self.penalties.penalty(&feasibility, p);
        Ok(Evaluation {
            plan: plan.clone(),
            fitness: breakdown.total + penalty,
            breakdown,
            feasibility,
            adequacy,
            penalty,
        })
    }

    /// Fitness of a plan, memoized for the lifetime of the evaluator.
    pub fn score(&self, plan: &ExpansionPlan) -> Result<Score> {
        if let Some(s) = self.score_cache.lock().unwrap().get(plan) {
            return Ok(*s);
        }
        let e = self.evaluate(plan)?;
        let s = Score {
            fitness: e.fitness,
            total: e.breakdown.total,
            penalty: e.penalty,
        };
        self.score_cache.lock().unwrap().insert(plan.clone(), s);
        Ok(s)
    }

    pub fn cached_scores(&self) -> usize {
        self.score_cache.lock().unwrap().len()
    }
}

/// Convenience wrapper: the objective of `plan` with adequacy from the full
/// convolution.
pub fn total_objective(problem: &Problem, plan: &ExpansionPlan) -> Result<CostBreakdown> {
    Ok(Evaluator::new(problem)?.evaluate_reference(plan)?.breakdown)
}
