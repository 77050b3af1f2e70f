use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gep_core::config::{build_problem, regime_models, ConfigDocument, FarmModelDoc};
use gep_core::evaluate::Evaluator;
use gep_core::ga::{multi_run_with, write_history_csv};
use gep_core::model::UnitKind;
use gep_core::scenarios::{self, ExperimentResult};
use gep_core::wind::{FarmOutputModel, OutputLevels, PowerCurve, TurbineOutputModel, WindSeries};
use gep_core::{GepError, Problem};

mod output;

use output::{sha256_hex, OutputDir};

#[derive(Parser)]
#[command(
    name = "gep",
    version,
    about = "Generation expansion planning with multi-state wind farms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build turbine and farm output models from wind data or a turbine table.
    WindModel(WindModelArgs),
    /// Search for the least-cost expansion plan.
    Solve(SolveArgs),
    /// Cost and feasibility of a given plan, without search.
    Evaluate(EvaluateArgs),
    /// Add a fixed number of wind farms every stage and solve the thermal complement.
    SweepPenetration(PenetrationArgs),
    /// Re-solve with wind selectable at several capital costs.
    SweepInvestment(InvestmentArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Config document (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `ga.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `ga.runs`.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Wind regime (from `wind.regimes`) used by every wind type.
    #[arg(long)]
    regime: Option<String>,
    /// Unit types removed from the search, comma separated.
    #[arg(long, value_delimiter = ',')]
    exclude_types: Vec<String>,
    /// Overrides `ga.generations`.
    #[arg(long)]
    generations: Option<usize>,
    /// Overrides `ga.population_size`.
    #[arg(long)]
    population: Option<usize>,
}

#[derive(Args)]
struct WindModelArgs {
    #[command(flatten)]
    common: Common,
    /// Regime from the config's `wind.regimes`.
    #[arg(long)]
    regime: Option<String>,
    /// Wind speed series CSV (`timestamp,wind_speed_ms`).
    #[arg(long)]
    series: Option<PathBuf>,
    /// Turbine output model CSV (`power_mw,probability`).
    #[arg(long)]
    turbine_model: Option<PathBuf>,
    #[arg(long, default_value_t = 4.0)]
    cut_in: f64,
    #[arg(long, default_value_t = 15.0)]
    rated: f64,
    #[arg(long, default_value_t = 25.0)]
    cut_out: f64,
    #[arg(long, default_value_t = 2.0)]
    rated_power: f64,
    /// Output levels of the turbine model.
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// Turbines per farm.
    #[arg(long, default_value_t = 30)]
    turbines: u32,
    /// Forced outage rate of one turbine.
    #[arg(long = "for", default_value_t = 0.1)]
    for_rate: f64,
    /// Hours between series samples.
    #[arg(long, default_value_t = 1.0)]
    interval_hours: f64,
    /// Largest rounding residual accepted in a probability table.
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    /// Plan CSV (`stage,<type ids...>`), e.g. the `plan.csv` written by solve.
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct PenetrationArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    /// Wind farms added in every stage, one sweep point each.
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8,10,12,14,16,18,20")]
    w: Vec<u32>,
    /// Wind type to add (defaults to the first wind type).
    #[arg(long)]
    wind_type: Option<String>,
}

#[derive(Args)]
struct InvestmentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    /// Wind capital costs per kW, one sweep point each.
    #[arg(long, value_delimiter = ',', default_value = "1650,1575,1485,1402,1320")]
    ci: Vec<f64>,
    /// Wind type to price (defaults to the first wind type).
    #[arg(long)]
    wind_type: Option<String>,
}

/// Every plan the search returned violates a constraint.
#[derive(Debug)]
struct Infeasible(String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Infeasible>().is_some() {
        return 3;
    }
    if let Some(e) = err.downcast_ref::<GepError>() {
        if e.is_config_error() {
            return 2;
        }
        if matches!(e, GepError::Io { .. }) {
            return 4;
        }
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 4;
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("GEP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::WindModel(a) => {
            threads(&a.common)?;
            wind_model(a)
        }
        Command::Solve(a) => {
            threads(&a.common)?;
            solve(a)
        }
        Command::Evaluate(a) => {
            threads(&a.common)?;
            evaluate(a)
        }
        Command::SweepPenetration(a) => {
            threads(&a.common)?;
            sweep_penetration(a)
        }
        Command::SweepInvestment(a) => {
            threads(&a.common)?;
            sweep_investment(a)
        }
    }
}

fn threads(common: &Common) -> Result<()> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

/// A loaded config: the document, its directory and the hash of its bytes.
struct Loaded {
    doc: ConfigDocument,
    dir: Option<PathBuf>,
    hash: String,
}

fn read_config(path: Option<&Path>) -> Result<Loaded> {
    let path = path.ok_or_else(|| GepError::Schema {
        path: "--config".into(),
        message: "a config document is required".into(),
    })?;
    let bytes = fs::read(path).map_err(|e| GepError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| GepError::Schema {
        path: path.display().to_string(),
        message: "config is not UTF-8".into(),
    })?;
    Ok(Loaded {
        doc: ConfigDocument::parse(&text)?,
        dir: path.parent().map(Path::to_path_buf),
        hash: sha256_hex(&bytes),
    })
}

fn problem_for(loaded: &Loaded, common: &Common, search: &SearchArgs) -> Result<Problem> {
    let mut doc = loaded.doc.clone();
    if let Some(regime) = &search.regime {
        if !doc.wind.regimes.contains_key(regime) {
            return Err(GepError::Schema {
                path: "--regime".into(),
                message: format!("unknown wind regime {regime:?}"),
            }
            .into());
        }
        for u in doc.units.iter_mut().filter(|u| u.kind == UnitKind::Wind) {
            u.farm_model = Some(FarmModelDoc {
                regime: Some(regime.clone()),
                ..FarmModelDoc::default()
            });
        }
    }
    if let Some(seed) = common.seed {
        doc.ga.rng_seed = seed;
    }
    if let Some(runs) = common.runs {
        doc.ga.runs = runs;
    }
    if let Some(g) = search.generations {
        doc.ga.generations = g;
    }
    if let Some(p) = search.population {
        doc.ga.population_size = p;
    }
    let mut problem = build_problem(&doc, loaded.dir.as_deref())?;
    problem.exclude_types(&search.exclude_types)?;
    problem.validate()?;
    Ok(problem)
}

fn levels_csv(levels: &OutputLevels) -> impl FnOnce(&mut Vec<u8>) -> gep_core::Result<()> + '_ {
    move |buf| levels.write_csv(buf)
}

fn wind_model(a: WindModelArgs) -> Result<()> {
    let (turbine, farm, hash): (Option<TurbineOutputModel>, FarmOutputModel, String) =
        if let Some(path) = &a.turbine_model {
            let bytes = fs::read(path).map_err(|e| GepError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let turbine = TurbineOutputModel::new(OutputLevels::read_csv(&bytes[..], a.tolerance)?)?;
            let farm = FarmOutputModel::aggregate(&turbine, a.turbines, a.for_rate)?;
            (Some(turbine), farm, sha256_hex(&bytes))
        } else if let Some(path) = &a.series {
            let bytes = fs::read(path).map_err(|e| GepError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let curve = PowerCurve::fit(a.cut_in, a.rated, a.cut_out, a.rated_power)?;
            let series = WindSeries::read_csv(&bytes[..], a.interval_hours)?;
            let turbine = TurbineOutputModel::from_series(&curve, &series, a.levels)?;
            let farm = FarmOutputModel::aggregate(&turbine, a.turbines, a.for_rate)?;
            (Some(turbine), farm, sha256_hex(&bytes))
        } else if let Some(regime) = &a.regime {
            let loaded = read_config(a.common.config.as_deref())?;
            let (turbine, farm) = regime_models(&loaded.doc, regime, loaded.dir.as_deref())?;
            (turbine, farm, loaded.hash)
        } else {
            bail!(GepError::Schema {
                path: "wind-model".into(),
                message: "give --turbine-model, --series, or --config with --regime".into(),
            });
        };
    let mut out = OutputDir::create(&a.common.out, "wind-model", None, hash)?;
    if let Some(t) = &turbine {
        out.csv("turbine_model.csv", levels_csv(t.levels()))?;
    }
    out.csv("farm_model.csv", levels_csv(farm.levels()))?;
    let summary = json!({
        "expected_output_mw": farm.expected_output(),
        "nameplate_mw": farm.nameplate(),
        "turbines": farm.turbine_count(),
        "for_rate": farm.for_rate(),
        "levels": farm.levels().len(),
    });
    println!(
        "farm: {} levels, nameplate {} MW, expected output {:.4} MW",
        farm.levels().len(),
        farm.nameplate(),
        farm.expected_output()
    );
    out.json("summary.json", "summary", &summary)?;
    out.finish(summary)
}

fn plan_columns(problem: &Problem) -> Vec<usize> {
    problem.gene_types()
}

fn solve(a: SolveArgs) -> Result<()> {
    let loaded = read_config(a.common.config.as_deref())?;
    let problem = problem_for(&loaded, &a.common, &a.search)?;
    let seed = problem.ga.rng_seed;
    let evaluator = Evaluator::new(&problem)?;
    let result = multi_run_with(&evaluator, &problem.ga, &[])?;
    let best = &result.best.best;

    let mut out = OutputDir::create(&a.common.out, "solve", Some(seed), loaded.hash.clone())?;
    let columns = plan_columns(&problem);
    out.csv("plan.csv", |buf| {
        scenarios::write_plan_csv(&problem, &best.plan, &columns, buf)
    })?;
    out.csv("breakdown.csv", |buf| best.breakdown.write_csv(buf))?;
    out.json("breakdown.json", "breakdown", &best.breakdown)?;
    out.json("feasibility.json", "feasibility", &best.feasibility)?;
    out.csv("history.csv", |buf| write_history_csv(&result.best.history, buf))?;
    out.json("runs.json", "runs", &result.runs)?;
    let summary = json!({
        "total_cost": best.breakdown.total,
        "operational_cost": best.breakdown.operational(),
        "investment_cost": best.breakdown.investment,
        "salvage": best.breakdown.salvage,
        "fitness": best.fitness,
        "feasible": best.feasibility.feasible,
        "violations": best.feasibility.violation_count(),
        "best_run_seed": result.best.seed,
        "runs": result.runs.len(),
    });
    println!(
        "best total {:.3} M (operational {:.3} M), feasible: {}",
        best.breakdown.total,
        best.breakdown.operational(),
        best.feasibility.feasible
    );
    out.finish(summary)?;
    if !best.feasibility.feasible {
        return Err(Infeasible(format!(
            "best plan violates {} constraint(s); see feasibility.json",
            best.feasibility.violation_count()
        ))
        .into());
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let loaded = read_config(a.common.config.as_deref())?;
    let problem = problem_for(&loaded, &a.common, &a.search)?;
    let file = fs::File::open(&a.plan).map_err(|e| GepError::Io {
        path: a.plan.display().to_string(),
        source: e,
    })?;
    let plan = scenarios::read_plan_csv(&problem, file)?;
    let eval = Evaluator::new(&problem)?.evaluate(&plan)?;
    let mut out = OutputDir::create(&a.common.out, "evaluate", None, loaded.hash.clone())?;
    out.csv("breakdown.csv", |buf| eval.breakdown.write_csv(buf))?;
    out.json("breakdown.json", "breakdown", &eval.breakdown)?;
    out.json("feasibility.json", "feasibility", &eval.feasibility)?;
    let violated: Vec<String> = eval
        .feasibility
        .violations()
        .map(|v| match &v.subject {
            Some(s) => format!("{} stage {} ({s})", v.kind, v.stage),
            None => format!("{} stage {}", v.kind, v.stage),
        })
        .collect();
    for v in &violated {
        println!("violated: {v}");
    }
    println!(
        "total {:.3} M (operational {:.3} M), feasible: {}",
        eval.breakdown.total,
        eval.breakdown.operational(),
        eval.feasibility.feasible
    );
    out.finish(json!({
        "total_cost": eval.breakdown.total,
        "operational_cost": eval.breakdown.operational(),
        "fitness": eval.fitness,
        "feasible": eval.feasibility.feasible,
        "violations": violated,
    }))
}

fn write_experiment(out: &mut OutputDir, name: &str, result: &ExperimentResult) -> Result<()> {
    out.csv(&format!("{name}.csv"), |buf| result.write_csv(buf))?;
    out.json(&format!("{name}.json"), name, result)
}

fn all_infeasible(result: &ExperimentResult) -> Result<()> {
    if result.points.iter().all(|p| !p.feasible) {
        return Err(Infeasible("no sweep point has a feasible best plan".into()).into());
    }
    Ok(())
}

fn sweep_penetration(a: PenetrationArgs) -> Result<()> {
    let loaded = read_config(a.common.config.as_deref())?;
    let problem = problem_for(&loaded, &a.common, &a.search)?;
    let mut result = scenarios::sweep_penetration(&problem, &a.w, a.wind_type.as_deref())?;
    result.regime = a.search.regime.clone();
    let mut out = OutputDir::create(
        &a.common.out,
        "sweep-penetration",
        Some(problem.ga.rng_seed),
        loaded.hash,
    )?;
    write_experiment(&mut out, "penetration", &result)?;
    for p in &result.points {
        println!(
            "w={:>3} total {:.3} M operational {:.3} M penetration {:.2}% feasible {}{}",
            p.input,
            p.total_cost,
            p.operational_cost,
            p.penetration_pct,
            p.feasible,
            p.lolp_violation_stage
                .map(|s| format!(" (LOLP violated in stage {s})"))
                .unwrap_or_default()
        );
    }
    let first = result
        .first_lolp_violation()
        .map(|p| json!({ "w": p.input, "stage": p.lolp_violation_stage, "penetration_pct": p.penetration_pct }));
    out.finish(json!({
        "regime": result.regime,
        "points": result.points.len(),
        "last_lolp_feasible_w": result.last_lolp_feasible(),
        "first_lolp_violation": first,
    }))?;
    all_infeasible(&result)
}

fn sweep_investment(a: InvestmentArgs) -> Result<()> {
    let loaded = read_config(a.common.config.as_deref())?;
    let problem = problem_for(&loaded, &a.common, &a.search)?;
    let mut result = scenarios::sweep_investment(&problem, &a.ci, a.wind_type.as_deref())?;
    result.regime = a.search.regime.clone();
    let baseline = scenarios::solve_without_wind(&problem)?;
    let mut out = OutputDir::create(
        &a.common.out,
        "sweep-investment",
        Some(problem.ga.rng_seed),
        loaded.hash,
    )?;
    write_experiment(&mut out, "investment", &result)?;
    let base_total = baseline.breakdown.total;
    for p in &result.points {
        println!(
            "ci={:>7} total {:.3} M wind units {} penetration {:.2}% {} than without wind ({:.3} M)",
            p.input,
            p.total_cost,
            p.wind_units.iter().sum::<u32>(),
            p.penetration_pct,
            if p.total_cost < base_total {
                "cheaper"
            } else {
                "not cheaper"
            },
            base_total
        );
    }
    let cheaper: Vec<f64> = result
        .points
        .iter()
        .filter(|p| p.total_cost < base_total)
        .map(|p| p.input)
        .collect();
    out.finish(json!({
        "regime": result.regime,
        "points": result.points.len(),
        "no_wind_total_cost": base_total,
        "no_wind_feasible": baseline.feasibility.feasible,
        "cheaper_than_no_wind_at": cheaper,
    }))?;
    all_infeasible(&result)
}
