//! Experiments: solving one configuration, the wind-penetration sweep and
//! the wind investment-cost sweep, plus plan CSV input/output.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::constraints::ConstraintKind;
use crate::error::{GepError, Result};
use crate::evaluate::{Evaluation, Evaluator};
use crate::ga::{multi_run_with, MultiRunResult};
use crate::model::{ExpansionPlan, Problem, UnitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Penetration,
    Investment,
}

/// Points of a sweep: farms added per stage, or wind capital costs per kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: SweepMode,
    #[serde(default)]
    pub penetration: Vec<u32>,
    #[serde(default)]
    pub investment: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            SweepMode::Penetration if self.penetration.is_empty() => Err(GepError::invariant(
                "sweep.penetration",
                "at least one point is required",
            )),
            SweepMode::Investment if self.investment.is_empty() => Err(GepError::invariant(
                "sweep.investment",
                "at least one point is required",
            )),
            SweepMode::Investment => match self.investment.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
                Some(c) => Err(GepError::invariant(
                    "sweep.investment",
                    format!("capital costs must be positive, got {c}"),
                )),
                None => Ok(()),
            },
            SweepMode::Penetration => Ok(()),
        }
    }
}

/// First violated constraint of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationTag {
    pub kind: ConstraintKind,
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub input: f64,
    pub total_cost: f64,
    pub operational_cost: f64,
    pub lolp: Vec<f64>,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_violation: Option<ViolationTag>,
    /// Stage at which LOLP first exceeds its bound, if it does.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lolp_violation_stage: Option<usize>,
    /// Wind farms added per stage, exogenous ones included.
    pub wind_units: Vec<u32>,
    pub penetration_pct: f64,
    /// Units built per stage and type, exogenous ones included.
    pub plan: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub mode: SweepMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime: Option<String>,
    pub type_ids: Vec<String>,
    pub points: Vec<PointRecord>,
}

impl ExperimentResult {
    /// Largest input whose best plan meets the LOLP bound in every stage,
    /// scanning in spec order until the first violation.
    pub fn last_lolp_feasible(&self) -> Option<f64> {
        self.points
            .iter()
            .take_while(|p| p.lolp_violation_stage.is_none())
            .last()
            .map(|p| p.input)
    }

    /// First point whose best plan violates the LOLP bound.
    pub fn first_lolp_violation(&self) -> Option<&PointRecord> {
        self.points.iter().find(|p| p.lolp_violation_stage.is_some())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let stages = self.points.first().map_or(0, |p| p.lolp.len());
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = [
            "input",
            "total_cost",
            "operational_cost",
            "feasible",
            "first_violation",
            "lolp_violation_stage",
            "wind_units",
            "penetration_pct",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=stages).map(|t| format!("lolp_stage{t}")));
        wtr.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![
                p.input.to_string(),
                p.total_cost.to_string(),
                p.operational_cost.to_string(),
                p.feasible.to_string(),
                p.first_violation
                    .as_ref()
                    .map(|v| format!("{}@{}", v.kind, v.stage))
                    .unwrap_or_default(),
                p.lolp_violation_stage.map(|s| s.to_string()).unwrap_or_default(),
                p.wind_units.iter().sum::<u32>().to_string(),
                p.penetration_pct.to_string(),
            ];
            row.extend(p.lolp.iter().map(|l| l.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| GepError::io("<csv>", e))?;
        Ok(())
    }
}

/// Horizon-end wind nameplate as a percentage of the final-stage peak.
pub fn penetration_pct(problem: &Problem, builds: &ExpansionPlan) -> f64 {
    let wind_mw: f64 = problem
        .units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.kind == UnitKind::Wind)
        .map(|(i, u)| builds.total_units(i) as f64 * u.unit_capacity)
        .sum();
    100.0 * wind_mw / problem.horizon.peak_load[problem.stage_count() - 1]
}

/// Summarizes an evaluated plan as one sweep point.
pub fn point_record(problem: &Problem, input: f64, eval: &Evaluation) -> Result<PointRecord> {
    let builds = problem.effective_builds(&eval.plan)?;
    let wind: Vec<usize> = (0..problem.type_count())
        .filter(|&i| problem.units[i].kind == UnitKind::Wind)
        .collect();
    let first = eval
        .feasibility
        .violations()
        .min_by_key(|v| (v.stage, v.kind))
        .map(|v| ViolationTag {
            kind: v.kind,
            stage: v.stage,
        });
    Ok(PointRecord {
        input,
        total_cost: eval.breakdown.total,
        operational_cost: eval.breakdown.operational(),
        lolp: eval.adequacy.iter().map(|a| a.lolp).collect(),
        feasible: eval.feasibility.feasible,
        first_violation: first,
        lolp_violation_stage: eval.feasibility.first_violation(ConstraintKind::Lolp).map(|v| v.stage),
        wind_units: (0..problem.stage_count())
            .map(|t| wind.iter().map(|&i| builds.get(t, i)).sum())
            .collect(),
        penetration_pct: penetration_pct(problem, &builds),
        plan: builds.rows().map(<[u32]>::to_vec).collect(),
    })
}

/// Runs the configured multi-run search.
pub fn solve(problem: &Problem) -> Result<MultiRunResult> {
    let evaluator = Evaluator::new(problem)?;
    multi_run_with(&evaluator, &problem.ga, &[])
}

/// Solves with every wind type removed from the search and no fixed wind builds.
pub fn solve_without_wind(problem: &Problem) -> Result<Evaluation> {
    let mut p = problem.clone();
    for (i, u) in problem.units.iter().enumerate() {
        if u.kind == UnitKind::Wind {
            p.excluded[i] = true;
            for t in 0..p.stage_count() {
                p.fixed_builds.set(t, i, 0);
            }
        }
    }
    Ok(solve(&p)?.best.best)
}

fn wind_index(problem: &Problem, wind_type: Option<&str>) -> Result<usize> {
    let found = match wind_type {
        Some(id) => problem.type_index(id),
        None => problem.units.iter().position(|u| u.kind == UnitKind::Wind),
    };
    match found {
        Some(i) if problem.units[i].kind == UnitKind::Wind => Ok(i),
        _ => Err(GepError::invariant("sweep", "the problem has no such wind type")),
    }
}

/// The problem of one penetration point: `w` farms of the wind type are
/// added exogenously in every stage and wind leaves the search space.
pub fn penetration_problem(problem: &Problem, wind: usize, w: u32) -> Problem {
    let mut p = problem.clone();
    for t in 0..p.stage_count() {
        p.fixed_builds.set(t, wind, w);
    }
    for (i, u) in p.units.iter().enumerate() {
        if u.kind == UnitKind::Wind {
            p.excluded[i] = true;
        }
    }
    p
}

/// The problem of one investment point: wind is searchable at `ci_per_kw`.
pub fn investment_problem(problem: &Problem, wind: usize, ci_per_kw: f64) -> Problem {
    let mut p = problem.clone();
    p.units[wind].invest_cost = ci_per_kw / 1e3;
    p.excluded[wind] = false;
    p
}

/// Solves the points in order, each search seeded with the best plan of the
/// previous point. Neighbouring points differ by one parameter, so a good plan
/// for one is a good starting point for the next. Afterwards every point keeps
/// the best of all the plans found across the sweep, evaluated on its own problem.
fn run_points(inputs: &[f64], build: impl Fn(f64) -> Problem) -> Result<Vec<PointRecord>> {
    let problems: Vec<Problem> = inputs.iter().map(|&x| build(x)).collect();
    let evaluators = problems.iter().map(Evaluator::new).collect::<Result<Vec<_>>>()?;
    let mut found: Vec<ExpansionPlan> = Vec::with_capacity(inputs.len());
    for (k, (p, ev)) in problems.iter().zip(&evaluators).enumerate() {
        let seeds: Vec<ExpansionPlan> = found.last().cloned().into_iter().collect();
        let result = multi_run_with(ev, &p.ga, &seeds)?;
        log::info!(
            "sweep point {} ({}): fitness {:.3}",
            k,
            inputs[k],
            result.best.best.fitness
        );
        found.push(result.best.best.plan);
    }
    problems
        .iter()
        .zip(&evaluators)
        .zip(inputs)
        .map(|((p, ev), &x)| {
            let mut best: Option<(f64, &ExpansionPlan)> = None;
            for plan in &found {
                let f = ev.score(plan)?.fitness;
                if best.map_or(true, |(b, _)| f < b) {
                    best = Some((f, plan));
                }
            }
            let plan = best.expect("at least one point").1;
            point_record(p, x, &ev.evaluate(plan)?)
        })
        .collect()
}

/// Solves the thermal complement for each count of farms added per stage.
pub fn sweep_penetration(problem: &Problem, ws: &[u32], wind_type: Option<&str>) -> Result<ExperimentResult> {
    if ws.is_empty() {
        return Err(GepError::invariant(
            "sweep.penetration",
            "at least one point is required",
        ));
    }
    let wind = wind_index(problem, wind_type)?;
    let inputs: Vec<f64> = ws.iter().map(|&w| w as f64).collect();
    let points = run_points(&inputs, |w| penetration_problem(problem, wind, w as u32))?;
    Ok(ExperimentResult {
        mode: SweepMode::Penetration,
        regime: None,
        type_ids: problem.units.iter().map(|u| u.id.clone()).collect(),
        points,
    })
}

/// Re-solves with wind selectable at each capital cost (per kW).
pub fn sweep_investment(problem: &Problem, costs: &[f64], wind_type: Option<&str>) -> Result<ExperimentResult> {
    let spec = SweepSpec {
        mode: SweepMode::Investment,
        penetration: Vec::new(),
        investment: costs.to_vec(),
        regime: None,
    };
    spec.validate()?;
    let wind = wind_index(problem, wind_type)?;
    let points = run_points(costs, |ci| investment_problem(problem, wind, ci))?;
    Ok(ExperimentResult {
        mode: SweepMode::Investment,
        regime: None,
        type_ids: problem.units.iter().map(|u| u.id.clone()).collect(),
        points,
    })
}

/// Writes a plan as `stage,<type ids...>`, one row per stage.
pub fn write_plan_csv<W: Write>(problem: &Problem, plan: &ExpansionPlan, columns: &[usize], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["stage".to_string()];
    header.extend(columns.iter().map(|&i| problem.units[i].id.clone()));
    wtr.write_record(&header)?;
    for t in 0..plan.stages() {
        let mut row = vec![(t + 1).to_string()];
        row.extend(columns.iter().map(|&i| plan.get(t, i).to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| GepError::io("<csv>", e))?;
    Ok(())
}

/// Reads a plan written by [`write_plan_csv`]; absent types build nothing.
/// Lines starting with `#` are comments.
pub fn read_plan_csv<R: Read>(problem: &Problem, reader: R) -> Result<ExpansionPlan> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut columns = Vec::new();
    for (k, h) in headers.iter().enumerate().skip(1) {
        let i = problem
            .type_index(h.trim())
            .ok_or_else(|| GepError::schema(format!("plan.columns[{k}]"), format!("unknown unit type {h:?}")))?;
        columns.push(i);
    }
    let mut plan = ExpansionPlan::zeros(problem.stage_count(), problem.type_count());
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if r >= problem.stage_count() {
            return Err(GepError::Dimension(format!(
                "plan has more than {} stages",
                problem.stage_count()
            )));
        }
        for (k, &i) in columns.iter().enumerate() {
            let cell = record.get(k + 1).unwrap_or("").trim();
            let n: u32 = cell.parse().map_err(|_| {
                GepError::schema(
                    format!("plan[{r}].{}", problem.units[i].id),
                    format!("not a unit count: {cell:?}"),
                )
            })?;
            plan.set(r, i, n);
        }
        rows += 1;
    }
    if rows != problem.stage_count() {
        return Err(GepError::Dimension(format!(
            "plan has {rows} stages, expected {}",
            problem.stage_count()
        )));
    }
    Ok(plan)
}
