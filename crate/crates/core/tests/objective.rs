mod common;

use common::{paper, plan_in_bounds, rel_close, system, toy};
use gep_core::cost::{dispatch_energy, salvage_value, stage_operation};
use gep_core::evaluate::{reference_adequacy, total_objective};
use gep_core::model::cumulative_state;
use gep_core::{ConstraintKind, Evaluator, ExpansionPlan, LoadDurationCurve};
use proptest::prelude::*;

fn draws() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..100, 16)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cumulative_capacity_is_monotone_and_linear(
        rows_a in prop::collection::vec(prop::collection::vec(0u32..5, 3), 1..5),
        seed in 0u32..5,
    ) {
        let stages = rows_a.len();
        let a = ExpansionPlan::from_rows(rows_a).unwrap();
        let b = ExpansionPlan::from_rows((0..stages).map(|t| vec![(seed + t as u32) % 3, 1, 0]).collect()).unwrap();
        let existing = [100.0, 0.0, 40.0];
        let sizes = [50.0, 60.0, 200.0];
        let xa = cumulative_state(&a, &existing, &sizes).unwrap();
        let xb = cumulative_state(&b, &[0.0; 3], &sizes).unwrap();
        let xab = cumulative_state(&a.plus(&b).unwrap(), &existing, &sizes).unwrap();
        for t in 0..stages {
            for i in 0..3 {
                prop_assert!(xa.stage(t)[i] >= existing[i]);
                if t > 0 {
                    prop_assert!(xa.stage(t)[i] >= xa.stage(t - 1)[i]);
                }
                prop_assert_eq!(xab.stage(t)[i], xa.stage(t)[i] + xb.stage(t)[i]);
            }
        }
    }

    #[test]
    fn dispatch_serves_all_energy_when_credit_covers_peak(
        credit in prop::collection::vec(1.0..500.0f64, 1..8),
        mc in prop::collection::vec(0.0..0.1f64, 8),
        base in 0.2..1.0f64,
    ) {
        let total: f64 = credit.iter().sum();
        let ldc = LoadDurationCurve::new(total * 0.9, base, 8760.0, None).unwrap();
        let e = dispatch_energy(&credit, &mc[..credit.len()], &ldc);
        let served: f64 = e.iter().sum();
        prop_assert!(rel_close(served, ldc.total_energy(), 1e-9));
        prop_assert!(e.iter().all(|&x| x >= 0.0));
        // A block never serves more than its capacity for the whole year.
        for (x, c) in e.iter().zip(&credit) {
            prop_assert!(*x <= c * 8760.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dispatch_never_exceeds_demand(
        credit in prop::collection::vec(1.0..300.0f64, 1..8),
        peak in 100.0..3000.0f64,
    ) {
        let mc: Vec<f64> = (0..credit.len()).map(|i| i as f64).collect();
        let ldc = LoadDurationCurve::new(peak, 0.5, 8760.0, None).unwrap();
        let served: f64 = dispatch_energy(&credit, &mc, &ldc).iter().sum();
        prop_assert!(served <= ldc.total_energy() * (1.0 + 1e-12));
    }

    #[test]
    fn cheaper_blocks_serve_at_least_as_many_hours(credit in 10.0..200.0f64, peak in 100.0..800.0f64) {
        let ldc = LoadDurationCurve::new(peak, 0.4, 8760.0, None).unwrap();
        let e = dispatch_energy(&[credit, credit], &[0.02, 0.01], &ldc);
        prop_assert!(e[1] >= e[0]);
        // Equal costs: the earlier block is loaded first.
        let tie = dispatch_energy(&[credit, credit], &[0.01, 0.01], &ldc);
        prop_assert!(tie[0] >= tie[1]);
    }

    #[test]
    fn breakdown_identity_holds(spec in system(), d in draws()) {
        let problem = spec.problem();
        let plan = plan_in_bounds(&problem, &d);
        let ev = Evaluator::new(&problem).unwrap();
        let e = ev.evaluate(&plan).unwrap();
        let b = &e.breakdown;
        let rebuilt = b.investment + b.fixed_om + b.variable_om + b.eens_cost - b.salvage;
        prop_assert!(rel_close(b.total, rebuilt, 1e-9));
        prop_assert!(b.salvage <= b.investment + 1e-9);
        prop_assert_eq!(b.stages.len(), problem.stage_count());
        prop_assert!(rel_close(b.operational(), b.fixed_om + b.variable_om + b.eens_cost, 1e-12));
        if e.feasibility.feasible {
            prop_assert_eq!(e.fitness, b.total);
        } else {
            prop_assert!(e.fitness > b.total);
        }
    }

    #[test]
    fn served_plus_unserved_is_demand(spec in system(), d in draws()) {
        let problem = spec.problem();
        let plan = plan_in_bounds(&problem, &d);
        let state = problem.cumulative(&plan).unwrap();
        for t in 0..problem.stage_count() {
            let ldc = problem.horizon.ldc(t).unwrap();
            let credit: f64 = gep_core::cost::stage_blocks(&problem, state.stage(t)).iter().map(|b| b.credit).sum();
            let op = stage_operation(&problem, state.stage(t), &ldc);
            let served: f64 = op.energy_by_type.iter().sum();
            if credit >= ldc.peak() {
                prop_assert!(rel_close(served, ldc.total_energy(), 1e-9));
            } else {
                prop_assert!(rel_close(served + ldc.energy_between(credit, ldc.peak()), ldc.total_energy(), 1e-9));
            }
        }
    }

    #[test]
    fn fast_adequacy_matches_direct_convolution(spec in system(), d in draws(), prune in any::<bool>()) {
        let mut problem = spec.problem();
        if !prune {
            problem.reliability.prune_threshold = 0.0;
        }
        // Pruning drops states below 1e-10 at different points along the two
        // paths; the discarded mass bounds the gap.
        let tol = if prune { 1e-8 } else { 1e-11 };
        let plan = plan_in_bounds(&problem, &d);
        let ev = Evaluator::new(&problem).unwrap();
        let fast = ev.adequacy(&plan).unwrap();
        let reference = reference_adequacy(&problem, &plan).unwrap();
        for (t, (f, r)) in fast.iter().zip(&reference).enumerate() {
            let energy = problem.horizon.ldc(t).unwrap().total_energy();
            prop_assert!((f.lolp - r.lolp).abs() <= tol, "lolp {} vs {}", f.lolp, r.lolp);
            prop_assert!((f.eens - r.eens).abs() <= tol * energy, "eens {} vs {}", f.eens, r.eens);
        }
        let a = ev.evaluate(&plan).unwrap();
        let b = ev.evaluate_reference(&plan).unwrap();
        prop_assert!(rel_close(a.breakdown.total, b.breakdown.total, 1e-9));
        prop_assert_eq!(a.feasibility.feasible, b.feasibility.feasible);
    }

    #[test]
    fn evaluation_is_repeatable(spec in system(), d in draws()) {
        let problem = spec.problem();
        let plan = plan_in_bounds(&problem, &d);
        let ev = Evaluator::new(&problem).unwrap();
        let first = ev.evaluate(&plan).unwrap();
        let score = ev.score(&plan).unwrap();
        prop_assert_eq!(ev.evaluate(&plan).unwrap(), first.clone());
        prop_assert_eq!(score.fitness, first.fitness);
        prop_assert_eq!(Evaluator::new(&problem).unwrap().evaluate(&plan).unwrap(), first);
    }

    #[test]
    fn more_capacity_never_raises_unserved_energy(spec in system(), d in draws(), extra in 0usize..3) {
        let problem = spec.problem();
        let plan = plan_in_bounds(&problem, &d);
        let mut bigger = plan.clone();
        let i = extra % problem.type_count();
        bigger.set(0, i, bigger.get(0, i) + 1);
        let a = reference_adequacy(&problem, &plan).unwrap();
        let b = reference_adequacy(&problem, &bigger).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y.lolp <= x.lolp + 1e-12);
            prop_assert!(y.eens <= x.eens * (1.0 + 1e-12) + 1e-9);
        }
    }
}

#[test]
fn zero_plan_on_paper_loads_violates_reserve_and_lolp() {
    let p = paper();
    let zero = ExpansionPlan::zeros(p.stage_count(), p.type_count());
    let e = Evaluator::new(&p).unwrap().evaluate(&zero).unwrap();
    assert!(!e.feasibility.feasible);
    assert!(e.feasibility.count_of(ConstraintKind::Reserve) > 0);
    assert!(e.feasibility.count_of(ConstraintKind::Lolp) > 0);
    assert!(e.penalty > 0.0);
}

#[test]
fn toy_objective_matches_hand_computation() {
    let p = toy();
    // One gas unit: 100 MW new plus 2 x 50 MW existing against a 200 MW peak.
    let plan = ExpansionPlan::from_rows(vec![vec![1, 0, 0]]).unwrap();
    let b = total_objective(&p, &plan).unwrap();
    let start = 1.0;
    let invest = 100.0 * 0.4 * 1.085f64.powf(-start);
    assert!(rel_close(b.investment, invest, 1e-12));
    let salvage = 0.1 * 100.0 * 0.4 * 1.085f64.powf(-(start + 2.0));
    assert!(rel_close(b.salvage, salvage, 1e-12));
    assert!(rel_close(
        salvage_value(&p, &p.effective_builds(&plan).unwrap()),
        salvage,
        1e-12
    ));
    let factor: f64 = (0..2).map(|y| 1.085f64.powf(-(start + 0.5 + y as f64))).sum();
    let fixed = (100.0 * 0.012 + 100.0 * 0.012) * factor;
    assert!(rel_close(b.fixed_om, fixed, 1e-12));
}

#[test]
fn penalties_grow_with_violation() {
    let p = paper();
    let ev = Evaluator::new(&p).unwrap();
    let zero = ExpansionPlan::zeros(p.stage_count(), p.type_count());
    let mut one = zero.clone();
    one.set(0, 0, 1);
    let a = ev.evaluate(&zero).unwrap();
    let b = ev.evaluate(&one).unwrap();
    assert!(
        a.feasibility.normalized(ConstraintKind::Reserve, &p) > b.feasibility.normalized(ConstraintKind::Reserve, &p)
    );
}
