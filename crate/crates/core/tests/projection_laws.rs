mod common;

use std::collections::HashSet;

use itertools::Itertools;
use vartrace_core::projection::{project, projection_report};
use vartrace_core::tracegraph::{per_config_slice, NodeKind, VariationalTrace};
use vartrace_core::varcore::{Condition, Configuration};
use vartrace_core::varinterp::run_variational;

fn subsets(t: &VariationalTrace) -> Vec<Vec<String>> {
    let names = t.options().names().to_vec();
    (0..=names.len())
        .flat_map(|k| names.iter().cloned().combinations(k))
        .collect()
}

/// The constraint forcing every option outside `focus` to false.
fn outside_false(t: &VariationalTrace, focus: &[String]) -> Condition {
    let opts = t.options();
    opts.names()
        .iter()
        .filter(|n| !focus.contains(n))
        .fold(Condition::tt(opts), |k, n| k.and(&Condition::option(opts, n).unwrap().negate()))
}

#[test]
fn full_focus_is_identity() {
    for (name, p) in common::corpus() {
        let t = run_variational(&p).unwrap().trace;
        assert_eq!(project(&t, t.options().names()).unwrap(), t, "{name}");
    }
}

#[test]
fn elevator_three_subsets_are_monotone() {
    let t = run_variational(&common::load("elevator")).unwrap().trace;
    let full = t.stats();
    let names = t.options().names().to_vec();
    let mut count = 0;
    for focus in names.iter().cloned().combinations(3) {
        let s = project(&t, &focus).unwrap().stats();
        assert!(s.le(&full), "{focus:?}: {s:?} vs {full:?}");
        count += 1;
    }
    assert_eq!(count, 20);
    let report = projection_report(&t, 3).unwrap();
    assert!(report.mean_decisions <= full.decisions as f64);
    assert!(report.mean_statements <= full.statements as f64);
}

#[test]
fn laws_hold_for_every_subset_of_every_program() {
    for (name, p) in common::corpus() {
        let t = run_variational(&p).unwrap().trace;
        let full = t.stats();
        for focus in subsets(&t) {
            let proj = project(&t, &focus).unwrap();
            let what = format!("{name} {focus:?}");
            assert!(proj.stats().le(&full), "{what}");
            assert_eq!(project(&proj, &focus).unwrap(), proj, "{what} idempotence");
            proj.validate().unwrap_or_else(|e| panic!("{what}: {e}"));

            // options outside the focus vanish from every condition
            for n in proj.nodes() {
                for o in t.options().names().iter().filter(|o| !focus.contains(o)) {
                    let fixed_true = n.context.fix_option(t.options().index_of(o).unwrap(), true);
                    assert!(fixed_true.equiv(&n.context), "{what}: {o} in {}", n.context);
                }
            }

            // exceptions reachable under the constraint survive
            let k = outside_false(&t, &focus);
            let ids: HashSet<_> = proj.nodes().iter().map(|n| n.id).collect();
            for n in t.nodes().iter().filter(|n| n.kind() == NodeKind::Exception) {
                assert_eq!(ids.contains(&n.id), n.context.overlaps(&k), "{what} node {}", n.id);
            }

            // per-configuration fidelity: kept nodes read the same values
            for cfg in p.options.configurations().filter(|c| k.eval(c)) {
                let filtered: Vec<_> = per_config_slice(&t, &cfg)
                    .into_iter()
                    .filter(|e| ids.contains(&e.id))
                    .collect();
                assert_eq!(per_config_slice(&proj, &cfg), filtered, "{what} {cfg}");
            }
        }
    }
}

#[test]
fn geterr_focus_on_flag_loses_the_exception() {
    let t = run_variational(&common::load("geterr")).unwrap().trace;
    let proj = project(&t, &["flag"]).unwrap();
    assert!(!proj.nodes().iter().any(|n| n.kind() == NodeKind::Exception));
    let empty = project(&t, &[] as &[&str]).unwrap();
    let cfg = Configuration::from_index(t.options(), 0);
    assert!(empty.nodes().iter().all(|n| n.context.eval(&cfg)));
}
