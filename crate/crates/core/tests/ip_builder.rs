mod common;

use std::collections::HashMap;

use common::small_instance;
use wcl_core::ip_builder::mps::{parse_mps, to_mps_string};
use wcl_core::ip_builder::{build_fixed_budget_ip, build_min_budget_ip, IpInstance, RowKind, Sense};
use wcl_core::solvers::brute_force;
use wcl_core::{synthetic, Installation, Route, SocParams, WeightScheme};

fn fig1() -> (wcl_core::SegmentGraph, Vec<Route>, SocParams) {
    let g = synthetic::directed_line(3, 0.25);
    let r = Route::from_indices(&g, vec![0, 1, 2]).unwrap();
    (g, vec![r], SocParams::simplistic(4, 0.0))
}

fn named(ip: &IpInstance, x: &[f64]) -> HashMap<String, f64> {
    ip.var_names.iter().cloned().zip(x.iter().copied()).collect()
}

#[test]
fn fig1_round_trip() {
    let (g, routes, p) = fig1();
    let ip = build_fixed_budget_ip(&routes, &g, &p, 0.25, WeightScheme::Binary).unwrap();
    let text = to_mps_string(&ip).unwrap();
    let m = parse_mps(text.as_bytes()).unwrap();
    assert_eq!(m.column_count(), ip.var_count());
    assert_eq!(m.row_count(), ip.row_count());
    assert!(m.maximize);
    for (v, name) in ip.var_names.iter().enumerate() {
        assert_eq!(m.objective_coeff(name), ip.objective[v]);
        assert!(m.bounds[name].integer);
        assert_eq!(m.bounds[name].upper, 1.0);
    }
    for r in &ip.rows {
        assert_eq!(m.rhs_of(&r.name), r.rhs);
    }
    assert_eq!(ip.summary().vars, 3 + ip.graphs[0].edges.len());
}

#[test]
fn fig1_optimum_is_one() {
    // brute force over all 0/1 installs of the three candidates
    let (g, routes, p) = fig1();
    let ip = build_fixed_budget_ip(&routes, &g, &p, 0.25, WeightScheme::Binary).unwrap();
    let mut best = f64::NEG_INFINITY;
    for bits in 0..8u32 {
        let inst = Installation::from_indices(&g, (0..3).filter(|k| bits >> k & 1 == 1));
        if inst.total_cost > 0.25 + 1e-12 {
            continue;
        }
        let x = ip.assignment_for(&inst).unwrap();
        assert!(ip.violated_rows(&x, 1e-9).is_empty());
        best = best.max(ip.objective_value(&x));
    }
    assert_eq!(best, 1.0);
}

#[test]
fn export_is_deterministic() {
    let inst = small_instance(5, WeightScheme::Penalty, 10);
    let a = build_fixed_budget_ip(&inst.routes, &inst.g, &inst.p, inst.budget, inst.scheme).unwrap();
    let b = build_fixed_budget_ip(&inst.routes, &inst.g, &inst.p, inst.budget, inst.scheme).unwrap();
    assert_eq!(to_mps_string(&a).unwrap(), to_mps_string(&b).unwrap());
}

#[test]
fn row_order() {
    let inst = small_instance(6, WeightScheme::Binary, 8);
    let ip = build_fixed_budget_ip(&inst.routes, &inst.g, &inst.p, inst.budget, inst.scheme).unwrap();
    let names: Vec<&str> = ip.rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names[0], "BUDGET");
    let first_link = names.iter().position(|n| n.starts_with("LU_")).unwrap();
    assert!(names[1..first_link].iter().all(|n| n.starts_with("F_")));
    assert!(names[first_link..].iter().all(|n| n.starts_with("LU_") || n.starts_with("LM_")));
    let text = to_mps_string(&ip).unwrap();
    let rows_at = text.find("ROWS").unwrap();
    let obj_at = text.find(" N  OBJ").or_else(|| text.find(" N OBJ")).unwrap();
    assert!(obj_at > rows_at);
}

#[test]
fn brute_force_optimum_satisfies_parsed_rows() {
    for (seed, scheme) in [(1, WeightScheme::Binary), (2, WeightScheme::Penalty), (3, WeightScheme::Tolerance)] {
        let inst = small_instance(seed, scheme, 12);
        let res = brute_force(&inst.routes, &inst.g, &inst.p, inst.budget, scheme).unwrap();
        let ip = build_fixed_budget_ip(&inst.routes, &inst.g, &inst.p, inst.budget, scheme).unwrap();
        assert_eq!(ip.big_m, inst.routes.len() as f64);
        let m = parse_mps(to_mps_string(&ip).unwrap().as_bytes()).unwrap();
        let x = ip.assignment_for(&res.installation).unwrap();
        assert!(m.violations(&named(&ip, &x), 1e-9).is_empty());
    }
}

#[test]
fn zero_and_full_budget() {
    let inst = small_instance(9, WeightScheme::Binary, 8);
    let zero = build_fixed_budget_ip(&inst.routes, &inst.g, &inst.p, 0.0, inst.scheme).unwrap();
    let x = zero.assignment_for(&Installation::empty()).unwrap();
    assert!(zero.violated_rows(&x, 1e-9).is_empty());
    // any installation at all breaks the zero budget once a lane is used
    let all = Installation::all(&inst.g);
    let y = zero.assignment_for(&all).unwrap();
    let used = y[..zero.install_segments.len()].contains(&1.0);
    assert_eq!(zero.violated_rows(&y, 1e-9).contains(&"BUDGET"), used);
}

#[test]
fn min_budget_ip_shape() {
    let (g, routes, p) = fig1();
    let ip = build_min_budget_ip(&routes, &g, &p).unwrap();
    assert_eq!(ip.sense, Sense::Minimize);
    assert!(ip.rows.iter().all(|r| r.name != "BUDGET"));
    let text = to_mps_string(&ip).unwrap();
    assert!(!text.contains("OBJSENSE"));
    let m = parse_mps(text.as_bytes()).unwrap();
    assert!(!m.maximize);
    assert_eq!(m.rows.iter().filter(|(_, k)| *k == RowKind::Eq).count(), ip.graphs[0].node_count());
}

#[test]
fn long_names_switch_to_free_format() {
    let (g, routes, p) = fig1();
    let ip = build_fixed_budget_ip(&routes, &g, &p, 0.25, WeightScheme::Binary).unwrap();
    let text = to_mps_string(&ip).unwrap();
    // X_0_1_1_2_1_0 is longer than eight characters
    assert!(text.starts_with("* free-format"));
    let mut short = IpInstance::empty("T");
    short.var_names = vec!["R_a".into()];
    short.objective = vec![1.0];
    let fixed = to_mps_string(&short).unwrap();
    assert!(fixed.starts_with("NAME          T\n"));
}
