mod common;

use common::{paper, toy, PAPER};
use gep_core::config::{build_problem, ConfigDocument};
use gep_core::scenarios::{
    investment_problem, penetration_pct, penetration_problem, read_plan_csv, sweep_investment, sweep_penetration,
    write_plan_csv,
};
use gep_core::{load_problem, to_document, ConstraintKind, ExpansionPlan, GepError, Problem};

/// The stand-in system with a small search, for quick end-to-end checks.
fn quick_paper() -> Problem {
    let mut p = paper();
    p.ga.population_size = 24;
    p.ga.generations = 4;
    p.ga.runs = 1;
    p
}

#[test]
fn zero_farms_is_the_thermal_only_problem() {
    let p = paper();
    let wind = p.type_index("WIND").unwrap();
    let mut thermal_only = p.clone();
    thermal_only.exclude_types(&["WIND".to_string()]).unwrap();
    assert_eq!(penetration_problem(&p, wind, 0), thermal_only);
}

#[test]
fn penetration_counts_horizon_end_nameplate() {
    let p = paper();
    let wind = p.type_index("WIND").unwrap();
    let fixed = penetration_problem(&p, wind, 2);
    let builds = fixed
        .effective_builds(&ExpansionPlan::zeros(7, p.type_count()))
        .unwrap();
    // 2 farms x 7 stages x 60 MW over a 19000 MW final peak.
    let pct = penetration_pct(&fixed, &builds);
    assert!((pct - 100.0 * 14.0 * 60.0 / 19000.0).abs() < 1e-12);
}

#[test]
fn fixed_farms_bypass_build_limits_but_count_toward_reserve() {
    let p = paper();
    let wind = p.type_index("WIND").unwrap();
    let fixed = penetration_problem(&p, wind, 40);
    let zero = ExpansionPlan::zeros(7, p.type_count());
    let e = gep_core::Evaluator::new(&fixed).unwrap().evaluate(&zero).unwrap();
    assert_eq!(e.feasibility.count_of(ConstraintKind::BuildLimit), 0);
    let base = gep_core::Evaluator::new(&p).unwrap().evaluate(&zero).unwrap();
    let reserve = |ev: &gep_core::Evaluation| {
        ev.feasibility
            .records
            .iter()
            .find(|v| v.kind == ConstraintKind::Reserve && v.stage == 1)
            .unwrap()
            .measured
    };
    assert!(reserve(&e) > reserve(&base));
}

#[test]
fn penetration_sweep_has_one_record_per_point() {
    let p = quick_paper();
    let r = sweep_penetration(&p, &[0, 3, 60], None).unwrap();
    assert_eq!(r.points.len(), 3);
    assert_eq!(r.points[0].wind_units, vec![0; 7]);
    assert_eq!(r.points[1].wind_units, vec![3; 7]);
    // Sixty farms a stage overshoot the reserve ceiling: flagged, not dropped.
    let last = &r.points[2];
    assert!(!last.feasible);
    assert!(last.first_violation.is_some());
    for pt in &r.points {
        assert_eq!(pt.lolp.len(), 7);
        assert_eq!(pt.plan.len(), 7);
    }
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    assert!(sweep_penetration(&p, &[], None).is_err());
}

#[test]
fn prohibitive_wind_cost_keeps_wind_at_its_minimum() {
    let p = quick_paper();
    let wind = p.type_index("WIND").unwrap();
    let r = sweep_investment(&p, &[1e6], None).unwrap();
    let mins: Vec<u32> = (0..7).map(|t| p.constraints.u_min[t][wind]).collect();
    assert_eq!(r.points[0].wind_units, mins);
    assert!(sweep_investment(&p, &[], None).is_err());
    assert!(sweep_investment(&p, &[-5.0], None).is_err());
}

#[test]
fn investment_problem_prices_wind_per_kw() {
    let p = paper();
    let wind = p.type_index("WIND").unwrap();
    let q = investment_problem(&p, wind, 1320.0);
    // 1320 per kW is 1.32 million per MW.
    assert!((q.units[wind].invest_cost - 1.32).abs() < 1e-12);
    assert!(!q.excluded[wind]);
}

#[test]
fn plan_files_round_trip_and_fill_absent_types() {
    let p = paper();
    let mut plan = ExpansionPlan::zeros(7, p.type_count());
    plan.set(0, 1, 3);
    plan.set(6, 5, 2);
    let columns: Vec<usize> = (0..p.type_count()).collect();
    let mut buf = b"# header line\n".to_vec();
    write_plan_csv(&p, &plan, &columns, &mut buf).unwrap();
    assert_eq!(read_plan_csv(&p, &buf[..]).unwrap(), plan);

    let partial = "stage,LNG\n1,3\n2,0\n3,0\n4,0\n5,0\n6,0\n7,0\n";
    let back = read_plan_csv(&p, partial.as_bytes()).unwrap();
    assert_eq!(back.get(0, 1), 3);
    assert_eq!(back.total_units(5), 0);

    let unknown = "stage,NUCLEAR\n1,1\n";
    assert!(matches!(
        read_plan_csv(&p, unknown.as_bytes()),
        Err(GepError::Schema { .. })
    ));
}

#[test]
fn documents_round_trip() {
    for p in [toy(), paper()] {
        let doc = to_document(&p);
        let text = doc.to_json().unwrap();
        let again = load_problem(&text, None).unwrap();
        assert_eq!(again, p);
        assert_eq!(to_document(&again).to_json().unwrap(), text);
    }
}

#[test]
fn schema_errors_name_the_offending_field() {
    let mut doc: serde_json::Value = serde_json::from_str(PAPER).unwrap();
    doc["units"][0]["invest_cost"]["unit"] = "per_kwh".into();
    match load_problem(&doc.to_string(), Some(&common::data_dir())) {
        Err(GepError::Schema { path, .. }) => assert_eq!(path, "units[0].invest_cost.unit"),
        other => panic!("expected a schema error, got {other:?}"),
    }

    let mut doc: serde_json::Value = serde_json::from_str(PAPER).unwrap();
    doc["horizon"]["surprise"] = 1.into();
    let err = load_problem(&doc.to_string(), None).unwrap_err();
    assert!(err.is_config_error());

    let mut doc: serde_json::Value = serde_json::from_str(PAPER).unwrap();
    doc["units"][1]["for_rate"] = 1.0.into();
    let err = load_problem(&doc.to_string(), Some(&common::data_dir())).unwrap_err();
    assert!(err.is_config_error());
    assert!(err.to_string().contains("units[1]"), "{err}");
}

#[test]
fn regimes_resolve_from_the_document() {
    let doc = ConfigDocument::parse(PAPER).unwrap();
    let mut strong = doc.clone();
    for u in strong.units.iter_mut().filter(|u| u.farm_model.is_some()) {
        u.farm_model.as_mut().unwrap().regime = Some("strong".into());
    }
    let dir = common::data_dir();
    let weak = build_problem(&doc, Some(&dir)).unwrap();
    let strong = build_problem(&strong, Some(&dir)).unwrap();
    let w = weak.type_index("WIND").unwrap();
    let ew = weak.units[w].farm_model.as_ref().unwrap().expected_output();
    let es = strong.units[w].farm_model.as_ref().unwrap().expected_output();
    assert!(es > ew);
}
