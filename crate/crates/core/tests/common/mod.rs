#![allow(dead_code)]

use gep_core::{load_problem, ExpansionPlan, Problem};
use proptest::prelude::*;
use serde_json::{json, Value};

pub const TOY: &str = include_str!("../../../../data/toy_nine_plans.json");
pub const PAPER: &str = include_str!("../../../../data/paper_system.json");

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn toy() -> Problem {
    load_problem(TOY, None).unwrap()
}

pub fn paper() -> Problem {
    load_problem(PAPER, Some(&data_dir())).unwrap()
}

/// Shape of a small random system.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub stages: usize,
    pub thermal: Vec<ThermalSpec>,
    pub wind: Option<u32>,
    pub existing: Vec<(usize, f64, u32)>,
    pub peak: f64,
    pub growth: f64,
    pub base_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ThermalSpec {
    pub size: f64,
    pub for_rate: f64,
    pub invest: f64,
    pub fixed: f64,
    pub variable: f64,
    pub max_units: u32,
}

fn thermal() -> impl Strategy<Value = ThermalSpec> {
    (
        prop::sample::select(vec![20.0, 50.0, 80.0, 100.0, 150.0]),
        0.01..0.15f64,
        200.0..2000.0f64,
        0.5..6.0f64,
        0.003..0.06f64,
        1..4u32,
    )
        .prop_map(|(size, for_rate, invest, fixed, variable, max_units)| ThermalSpec {
            size,
            for_rate,
            invest,
            fixed,
            variable,
            max_units,
        })
}

pub fn system() -> impl Strategy<Value = SystemSpec> {
    (
        1..4usize,
        prop::collection::vec(thermal(), 2..4),
        prop::option::of(1..3u32),
        prop::collection::vec((0..2usize, 20.0..120.0f64, 1..3u32), 1..3),
        150.0..400.0f64,
        0.0..0.15f64,
        0.3..0.8f64,
    )
        .prop_map(
            |(stages, thermal, wind, existing, peak, growth, base_ratio)| SystemSpec {
                stages,
                thermal,
                wind,
                existing,
                peak,
                growth,
                base_ratio,
            },
        )
}

const CLASSES: [&str; 5] = ["OIL", "LNG", "COAL", "PWR", "PHWR"];

impl SystemSpec {
    pub fn document(&self) -> Value {
        let mut units: Vec<Value> = self
            .thermal
            .iter()
            .enumerate()
            .map(|(i, u)| {
                json!({
                    "id": format!("T{i}"),
                    "kind": "thermal",
                    "fuel_class": CLASSES[i % CLASSES.len()],
                    "unit_capacity_mw": u.size,
                    "for_rate": u.for_rate,
                    "invest_cost": {"value": u.invest, "unit": "per_kw"},
                    "fixed_om": {"value": u.fixed, "unit": "per_kw_month"},
                    "variable_om": {"value": u.variable, "unit": "per_kwh"},
                    "salvage_factor": 0.1,
                    "max_units_per_stage": u.max_units,
                })
            })
            .collect();
        if let Some(max) = self.wind {
            units.push(json!({
                "id": "W",
                "kind": "wind",
                "fuel_class": "WIND",
                "unit_capacity_mw": 60,
                "invest_cost": {"value": 1485, "unit": "per_kw"},
                "fixed_om": {"value": 11500, "unit": "per_mw_year"},
                "variable_om": {"value": 0.0025, "unit": "per_kwh"},
                "salvage_factor": 0.1,
                "max_units_per_stage": max,
                "farm_model": {"farm_levels": [[0, 0.475], [12, 0.2], [24, 0.15], [36, 0.1], [48, 0.05], [60, 0.025]]},
            }));
        }
        let existing: Vec<Value> = self
            .existing
            .iter()
            .enumerate()
            .map(|(k, &(t, cap, count))| {
                let t = t % self.thermal.len();
                json!({
                    "name": format!("E{k}"),
                    "unit_type": format!("T{t}"),
                    "capacity_mw": cap,
                    "count": count,
                    "for_rate": self.thermal[t].for_rate,
                })
            })
            .collect();
        let peaks: Vec<f64> = (0..self.stages)
            .map(|t| self.peak * (1.0 + self.growth).powi(t as i32))
            .collect();
        json!({
            "name": "random",
            "units": units,
            "existing": existing,
            "horizon": {
                "stage_count": self.stages,
                "years_per_stage": 2,
                "lead_time_years": 1,
                "peak_load_mw": peaks,
                "base_load_ratio": self.base_ratio,
            },
            "economics": {"discount_rate": 0.085, "ceens": {"value": 0.05, "unit": "per_kwh"}},
            "constraints": {"reserve_min": 0.1, "reserve_max": 1.5, "lolp_max": 0.05},
            "ga": {"population_size": 12, "generations": 6, "rng_seed": 3, "runs": 2},
        })
    }

    pub fn problem(&self) -> Problem {
        load_problem(&self.document().to_string(), None).unwrap()
    }
}

/// A plan with every gene drawn inside its bounds.
pub fn plan_in_bounds(problem: &Problem, draws: &[u32]) -> ExpansionPlan {
    let mut plan = ExpansionPlan::zeros(problem.stage_count(), problem.type_count());
    let mut k = 0;
    for t in 0..problem.stage_count() {
        for i in 0..problem.type_count() {
            let (lo, hi) = problem.gene_bounds(t, i);
            let d = draws.get(k).copied().unwrap_or(0);
            k += 1;
            plan.set(t, i, lo + d % (hi - lo + 1));
        }
    }
    plan
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
