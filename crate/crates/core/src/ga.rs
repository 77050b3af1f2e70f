//! Integer-coded genetic algorithm over expansion plans.
//!
//! A chromosome is an [`ExpansionPlan`]; its genes are the unit counts of
//! the searchable types, read stage by stage. Offspring are repaired stage by
//! stage toward the reserve and fuel-mix bands and residual violations are
//! priced as penalties.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{check_fuel_mix, check_reserve};
use crate::error::{GepError, Result};
use crate::evaluate::{Evaluation, Evaluator, PenaltyWeights, Score};
use crate::model::{ExpansionPlan, FuelClass, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossoverProbs {
    pub one_point: f64,
    pub two_point: f64,
    pub substring: f64,
}

impl Default for CrossoverProbs {
    fn default() -> Self {
        CrossoverProbs {
            one_point: 0.70,
            two_point: 0.15,
            substring: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Share of each new generation produced by crossover.
    pub crossover_fraction: f64,
    pub crossover_type_probs: CrossoverProbs,
    pub mutants_per_generation: usize,
    pub elite_count: usize,
    pub penalty_weights: PenaltyWeights,
    pub rng_seed: u64,
    pub runs: usize,
    /// Attempts made by the initial sampler before it settles for an
    /// infeasible chromosome.
    pub sample_attempts: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 300,
            generations: 150,
            crossover_fraction: 0.60,
            crossover_type_probs: CrossoverProbs::default(),
            mutants_per_generation: 3,
            elite_count: 3,
            penalty_weights: PenaltyWeights::default(),
            rng_seed: 0,
            runs: 5,
            sample_attempts: 20,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.crossover_type_probs;
        if [p.one_point, p.two_point, p.substring].iter().any(|&x| !(x >= 0.0)) {
            return Err(GepError::invariant(
                "ga.crossover_type_probs",
                "probabilities must be non-negative",
            ));
        }
        if (p.one_point + p.two_point + p.substring - 1.0).abs() > 1e-12 {
            return Err(GepError::invariant(
                "ga.crossover_type_probs",
                "probabilities must sum to 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return Err(GepError::invariant("ga.crossover_fraction", "must lie in [0, 1]"));
        }
        if self.population_size == 0 {
            return Err(GepError::invariant("ga.population_size", "must be positive"));
        }
        if self.elite_count + self.mutants_per_generation > self.population_size {
            return Err(GepError::invariant(
                "ga.elite_count",
                "elite_count + mutants_per_generation must not exceed population_size",
            ));
        }
        if self.runs == 0 {
            return Err(GepError::invariant("ga.runs", "at least one run is required"));
        }
        Ok(())
    }
}

/// The searchable genes of a problem in flattened (stage-major) order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneLayout {
    genes: Vec<(usize, usize)>,
    per_stage: usize,
}

impl GeneLayout {
    pub fn new(problem: &Problem) -> Self {
        let types = problem.gene_types();
        let genes = (0..problem.stage_count())
            .flat_map(|t| types.iter().map(move |&i| (t, i)))
            .collect();
        GeneLayout {
            genes,
            per_stage: types.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// `(stage, type)` of gene `k`.
    pub fn position(&self, k: usize) -> (usize, usize) {
        self.genes[k]
    }

    pub fn per_stage(&self) -> usize {
        self.per_stage
    }
}

/// Deterministic stage repair toward the reserve and fuel-mix bands.
pub struct Repairer<'a> {
    problem: &'a Problem,
    /// Gene types by ascending capital cost per MW (ties by index).
    cheap_first: Vec<usize>,
    /// Exogenous MW installed before each stage's own builds.
    base: Vec<Vec<f64>>,
    max_steps: usize,
}

impl<'a> Repairer<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let mut cheap_first = problem.gene_types();
        cheap_first.sort_by(|&a, &b| {
            problem.units[a]
                .invest_cost
                .total_cmp(&problem.units[b].invest_cost)
                .then(a.cmp(&b))
        });
        let sizes = problem.unit_capacities();
        let mut current = problem.existing_capacity();
        let mut base = Vec::with_capacity(problem.stage_count());
        for t in 0..problem.stage_count() {
            for (i, x) in current.iter_mut().enumerate() {
                *x += problem.fixed_builds.get(t, i) as f64 * sizes[i];
            }
            base.push(current.clone());
        }
        let room: u32 = (0..problem.stage_count())
            .flat_map(|t| (0..problem.type_count()).map(move |i| (t, i)))
            .map(|(t, i)| problem.gene_bounds(t, i).1)
            .sum();
        Repairer {
            problem,
            cheap_first,
            base,
            max_steps: 4 * room as usize + 16,
        }
    }

    /// Installed MW per type after stage `t` of `plan`.
    fn installed(&self, plan: &ExpansionPlan, t: usize) -> Vec<f64> {
        let sizes = self.problem.units.iter().map(|u| u.unit_capacity);
        self.base[t]
            .iter()
            .zip(sizes)
            .enumerate()
            .map(|(i, (&b, size))| b + (0..=t).map(|s| plan.get(s, i)).sum::<u32>() as f64 * size)
            .collect()
    }

    fn share_after(&self, x: &[f64], class: FuelClass, delta: f64, delta_class: FuelClass) -> f64 {
        let total: f64 = x.iter().sum::<f64>() + delta;
        let mut mw: f64 = self
            .problem
            .units
            .iter()
            .zip(x)
            .filter(|(u, _)| u.fuel_class == class)
            .map(|(_, &v)| v)
            .sum();
        if delta_class == class {
            mw += delta;
        }
        if total > 0.0 {
            mw / total
        } else {
            0.0
        }
    }

    /// Whether adding (`sign = 1`) or removing (`sign = -1`) one unit of
    /// type `i` keeps every fuel class inside its band that it was inside.
    fn keeps_mix(&self, x: &[f64], i: usize, sign: f64) -> bool {
        let u = &self.problem.units[i];
        let delta = sign * u.unit_capacity;
        self.problem.constraints.fuel_mix.iter().all(|(&class, band)| {
            let before = self.share_after(x, class, 0.0, u.fuel_class);
            let after = self.share_after(x, class, delta, u.fuel_class);
            let ok = |s: f64| s >= band.min - 1e-12 && s <= band.max + 1e-12;
            !ok(before) || ok(after)
        })
    }

    fn can_add(&self, plan: &ExpansionPlan, t: usize, i: usize) -> bool {
        plan.get(t, i) < self.problem.gene_bounds(t, i).1
    }

    fn can_remove(&self, plan: &ExpansionPlan, t: usize, i: usize) -> bool {
        plan.get(t, i) > self.problem.gene_bounds(t, i).0
    }

    /// One repair move on stage `t`; returns false when the stage is
    /// satisfied or no move helps.
    fn step(&self, plan: &mut ExpansionPlan, t: usize) -> bool {
        let p = self.problem;
        let c = &p.constraints;
        let x = self.installed(plan, t);
        let total: f64 = x.iter().sum();
        let peak = p.horizon.peak_load[t];
        let (lo, hi) = ((1.0 + c.reserve_min) * peak, (1.0 + c.reserve_max) * peak);
        let size = |i: usize| p.units[i].unit_capacity;
        if total < lo {
            let pick = self
                .cheap_first
                .iter()
                .copied()
                .filter(|&i| self.can_add(plan, t, i))
                .find(|&i| self.keeps_mix(&x, i, 1.0))
                .or_else(|| self.cheap_first.iter().copied().find(|&i| self.can_add(plan, t, i)));
            return match pick {
                Some(i) => {
                    plan.set(t, i, plan.get(t, i) + 1);
                    true
                }
                None => false,
            };
        }
        if total > hi {
            let removable: Vec<usize> = self
                .cheap_first
                .iter()
                .rev()
                .copied()
                .filter(|&i| self.can_remove(plan, t, i) && total - size(i) >= lo)
                .collect();
            let pick = removable
                .iter()
                .copied()
                .find(|&i| self.keeps_mix(&x, i, -1.0))
                .or_else(|| removable.first().copied());
            return match pick {
                Some(i) => {
                    plan.set(t, i, plan.get(t, i) - 1);
                    true
                }
                None => false,
            };
        }
        for (&class, band) in &c.fuel_mix {
            let share = self.share_after(&x, class, 0.0, class);
            if share < band.min - 1e-12 {
                let pick = self
                    .cheap_first
                    .iter()
                    .copied()
                    .find(|&i| p.units[i].fuel_class == class && self.can_add(plan, t, i) && total + size(i) <= hi);
                if let Some(i) = pick {
                    plan.set(t, i, plan.get(t, i) + 1);
                    return true;
                }
                let pick =
                    self.cheap_first.iter().rev().copied().find(|&i| {
                        p.units[i].fuel_class != class && self.can_remove(plan, t, i) && total - size(i) >= lo
                    });
                if let Some(i) = pick {
                    plan.set(t, i, plan.get(t, i) - 1);
                    return true;
                }
            } else if share > band.max + 1e-12 {
                let pick =
                    self.cheap_first.iter().rev().copied().find(|&i| {
                        p.units[i].fuel_class == class && self.can_remove(plan, t, i) && total - size(i) >= lo
                    });
                if let Some(i) = pick {
                    plan.set(t, i, plan.get(t, i) - 1);
                    return true;
                }
                let pick = self
                    .cheap_first
                    .iter()
                    .copied()
                    .find(|&i| p.units[i].fuel_class != class && self.can_add(plan, t, i) && total + size(i) <= hi);
                if let Some(i) = pick {
                    plan.set(t, i, plan.get(t, i) + 1);
                    return true;
                }
            }
        }
        false
    }

    pub fn repair_stage(&self, plan: &mut ExpansionPlan, t: usize) {
        for _ in 0..self.max_steps {
            if !self.step(plan, t) {
                break;
            }
        }
    }

    /// Repairs stages `from..T` in order.
    pub fn repair_from(&self, plan: &mut ExpansionPlan, from: usize) {
        for t in from..self.problem.stage_count() {
            self.repair_stage(plan, t);
        }
    }

    /// Whether every stage satisfies the reserve and fuel-mix bands.
    pub fn statically_feasible(&self, plan: &ExpansionPlan) -> bool {
        let p = self.problem;
        (0..p.stage_count()).all(|t| {
            let x = self.installed(plan, t);
            let total: f64 = x.iter().sum();
            check_reserve(total, p.horizon.peak_load[t], &p.constraints, t).magnitude == 0.0
                && check_fuel_mix(&x, &p.units, &p.constraints, t)
                    .map(|v| v.iter().all(|r| r.magnitude == 0.0))
                    .unwrap_or(false)
        })
    }
}

/// Draws genes uniformly within their bounds stage by stage, repairing each
/// stage; retries up to `attempts` times for a plan inside the reserve and
/// fuel-mix bands and otherwise returns the last draw.
pub fn random_feasible_chromosome<R: Rng>(
    problem: &Problem,
    repairer: &Repairer,
    attempts: usize,
    rng: &mut R,
) -> ExpansionPlan {
    let mut plan = ExpansionPlan::zeros(problem.stage_count(), problem.type_count());
    for _ in 0..attempts.max(1) {
        plan = ExpansionPlan::zeros(problem.stage_count(), problem.type_count());
        for t in 0..problem.stage_count() {
            for i in problem.gene_types() {
                let (lo, hi) = problem.gene_bounds(t, i);
                plan.set(t, i, rng.gen_range(lo..=hi));
            }
            repairer.repair_stage(&mut plan, t);
        }
        if repairer.statically_feasible(&plan) {
            break;
        }
    }
    plan
}

/// Roulette over ranks: the best of `n` has weight `n`, the worst weight 1.
#[derive(Debug, Clone)]
pub struct RankWheel {
    /// Population indices from best to worst.
    order: Vec<usize>,
    cumulative: Vec<u64>,
}

impl RankWheel {
    pub fn new(fitness: &[f64]) -> Result<Self> {
        if fitness.is_empty() {
            return Err(GepError::Degenerate("cannot select from an empty population".into()));
        }
        let mut order: Vec<usize> = (0..fitness.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
        let n = order.len() as u64;
        let mut acc = 0;
        let cumulative = (0..n)
            .map(|r| {
                acc += n - r;
                acc
            })
            .collect();
        Ok(RankWheel { order, cumulative })
    }

    pub fn spin<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen_range(0..total);
        let rank = self.cumulative.partition_point(|&c| c <= x);
        self.order[rank]
    }

    /// Population indices from best to worst.
    pub fn ranked(&self) -> &[usize] {
        &self.order
    }
}

/// Index of a parent drawn by rank roulette.
pub fn select_parent<R: Rng>(fitness: &[f64], rng: &mut R) -> Result<usize> {
    Ok(RankWheel::new(fitness)?.spin(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverKind {
    OnePoint,
    TwoPoint,
    Substring,
}

pub fn pick_crossover<R: Rng>(probs: &CrossoverProbs, rng: &mut R) -> CrossoverKind {
    let x: f64 = rng.gen();
    if x < probs.one_point {
        CrossoverKind::OnePoint
    } else if x < probs.one_point + probs.two_point {
        CrossoverKind::TwoPoint
    } else {
        CrossoverKind::Substring
    }
}

fn swap_genes(a: &mut ExpansionPlan, b: &mut ExpansionPlan, layout: &GeneLayout, range: std::ops::Range<usize>) {
    for k in range {
        let (t, i) = layout.position(k);
        let (x, y) = (a.get(t, i), b.get(t, i));
        a.set(t, i, y);
        b.set(t, i, x);
    }
}

/// Applies one crossover of the given kind (no repair).
pub fn crossover_with<R: Rng>(
    kind: CrossoverKind,
    a: &ExpansionPlan,
    b: &ExpansionPlan,
    layout: &GeneLayout,
    rng: &mut R,
) -> Result<(ExpansionPlan, ExpansionPlan)> {
    b.check_shape(a.stages(), a.types())?;
    let (mut x, mut y) = (a.clone(), b.clone());
    let g = layout.len();
    match kind {
        _ if g < 2 => {}
        CrossoverKind::OnePoint => {
            let cut = rng.gen_range(1..g);
            swap_genes(&mut x, &mut y, layout, cut..g);
        }
        CrossoverKind::TwoPoint if g >= 3 => {
            let c1 = rng.gen_range(1..g);
            let mut c2 = rng.gen_range(1..g - 1);
            if c2 >= c1 {
                c2 += 1;
            }
            let (lo, hi) = (c1.min(c2), c1.max(c2));
            swap_genes(&mut x, &mut y, layout, lo..hi);
        }
        CrossoverKind::TwoPoint => {
            swap_genes(&mut x, &mut y, layout, 1..g);
        }
        CrossoverKind::Substring => {
            let per = layout.per_stage();
            let stage = rng.gen_range(0..g / per);
            swap_genes(&mut x, &mut y, layout, stage * per..(stage + 1) * per);
        }
    }
    Ok((x, y))
}

/// Picks a crossover operator by roulette and applies it (no repair).
pub fn crossover<R: Rng>(
    a: &ExpansionPlan,
    b: &ExpansionPlan,
    layout: &GeneLayout,
    probs: &CrossoverProbs,
    rng: &mut R,
) -> Result<(ExpansionPlan, ExpansionPlan)> {
    let kind = pick_crossover(probs, rng);
    crossover_with(kind, a, b, layout, rng)
}

/// Redraws one uniformly chosen gene within its bounds (no repair). Returns
/// the stage of the redrawn gene.
pub fn mutate<R: Rng>(plan: &mut ExpansionPlan, problem: &Problem, layout: &GeneLayout, rng: &mut R) -> Option<usize> {
    if layout.is_empty() {
        return None;
    }
    let (t, i) = layout.position(rng.gen_range(0..layout.len()));
    let (lo, hi) = problem.gene_bounds(t, i);
    plan.set(t, i, rng.gen_range(lo..=hi));
    Some(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRunResult {
    pub best: Evaluation,
    pub history: Vec<GenerationStats>,
    pub seed: u64,
}

impl GaRunResult {
    pub fn write_history_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_history_csv(&self.history, writer)
    }
}

pub fn write_history_csv<W: Write>(history: &[GenerationStats], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["generation", "best_fitness", "mean_fitness"])?;
    for h in history {
        wtr.write_record([
            h.generation.to_string(),
            h.best_fitness.to_string(),
            h.mean_fitness.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| GepError::io("<csv>", e))?;
    Ok(())
}

fn score_all(evaluator: &Evaluator, population: &[ExpansionPlan]) -> Result<Vec<Score>> {
    population.par_iter().map(|p| evaluator.score(p)).collect()
}

/// One evolution from `seed`. `seeds` are injected into the initial
/// population in place of sampled chromosomes.
pub fn evolve_with(
    evaluator: &Evaluator,
    config: &GaConfig,
    seed: u64,
    seeds: &[ExpansionPlan],
) -> Result<GaRunResult> {
    config.validate()?;
    let problem = evaluator.problem();
    let layout = GeneLayout::new(problem);
    let repairer = Repairer::new(problem);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.population_size;

    let mut population: Vec<ExpansionPlan> = seeds.iter().take(n).cloned().collect();
    for s in &population {
        s.check_shape(problem.stage_count(), problem.type_count())?;
    }
    while population.len() < n {
        population.push(random_feasible_chromosome(
            problem,
            &repairer,
            config.sample_attempts,
            &mut rng,
        ));
    }

    let mut history = Vec::with_capacity(config.generations + 1);
    let mut scores = score_all(evaluator, &population)?;
    for generation in 0..=config.generations {
        let fitness: Vec<f64> = scores.iter().map(|s| s.fitness).collect();
        let wheel = RankWheel::new(&fitness)?;
        history.push(GenerationStats {
            generation,
            best_fitness: fitness[wheel.ranked()[0]],
            mean_fitness: fitness.iter().sum::<f64>() / n as f64,
        });
        if generation == config.generations {
            let best = population[wheel.ranked()[0]].clone();
            return Ok(GaRunResult {
                best: evaluator.evaluate(&best)?,
                history,
                seed,
            });
        }

        let elites = config.elite_count.min(n);
        let mut next: Vec<ExpansionPlan> = wheel.ranked()[..elites]
            .iter()
            .map(|&k| population[k].clone())
            .collect();
        let children = ((config.crossover_fraction * n as f64).round() as usize).min(n - elites);
        while next.len() < elites + children {
            let a = &population[wheel.spin(&mut rng)];
            let b = &population[wheel.spin(&mut rng)];
            let (mut x, mut y) = crossover(a, b, &layout, &config.crossover_type_probs, &mut rng)?;
            repairer.repair_from(&mut x, 0);
            next.push(x);
            if next.len() < elites + children {
                repairer.repair_from(&mut y, 0);
                next.push(y);
            }
        }
        while next.len() < n {
            next.push(population[wheel.spin(&mut rng)].clone());
        }
        let mutable = n - elites;
        let mutants = config.mutants_per_generation.min(mutable);
        let picks = rand::seq::index::sample(&mut rng, mutable, mutants);
        for k in picks.iter() {
            let plan = &mut next[elites + k];
            if let Some(t) = mutate(plan, problem, &layout, &mut rng) {
                repairer.repair_from(plan, t);
            }
        }
        population = next;
        scores = score_all(evaluator, &population)?;
    }
    unreachable!("the final generation returns")
}

pub fn evolve(problem: &Problem, config: &GaConfig) -> Result<GaRunResult> {
    let evaluator = Evaluator::new(problem)?;
    evolve_with(&evaluator, config, config.rng_seed, &[])
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run`: the configured seed for run 0, a splitmix derivation
/// for the others.
pub fn sub_seed(seed: u64, run: usize) -> u64 {
    if run == 0 {
        seed
    } else {
        splitmix64(seed ^ splitmix64(run as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub best_fitness: f64,
    pub best_total: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRunResult {
    pub best: GaRunResult,
    pub runs: Vec<RunSummary>,
}

/// `config.runs` independent evolutions sharing one evaluator; the result
/// with the lowest fitness wins (ties go to the earlier run).
pub fn multi_run_with(evaluator: &Evaluator, config: &GaConfig, seeds: &[ExpansionPlan]) -> Result<MultiRunResult> {
    config.validate()?;
    let results: Vec<GaRunResult> = (0..config.runs)
        .into_par_iter()
        .map(|r| evolve_with(evaluator, config, sub_seed(config.rng_seed, r), seeds))
        .collect::<Result<_>>()?;
    let runs = results
        .iter()
        .enumerate()
        .map(|(run, r)| RunSummary {
            run,
            seed: r.seed,
            best_fitness: r.best.fitness,
            best_total: r.best.breakdown.total,
            feasible: r.best.feasibility.feasible,
        })
        .collect();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.best.fitness < a.best.fitness { b } else { a })
        .expect("at least one run");
    Ok(MultiRunResult { best, runs })
}

pub fn multi_run(problem: &Problem, config: &GaConfig) -> Result<MultiRunResult> {
    let evaluator = Evaluator::new(problem)?;
    multi_run_with(&evaluator, config, &[])
}
