//! Focusing a trace on a subset of options.
//!
//! Options outside the focus are fixed to false, nodes that no longer apply
//! to any configuration are dropped, and the inclusion rules are applied
//! again to what remains. Surviving nodes keep their ids.

use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::tracegraph::{fix_options, reduce, Stats, VariationalTrace};
use crate::varcore::Condition;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("unknown option `{0}`")]
    UnknownOption(String),
    #[error("subset size {k} exceeds the {n} options of the trace")]
    SubsetTooLarge { k: usize, n: usize },
    #[error("no assignment of the options outside the focus satisfies the validity condition")]
    Invalid,
}

pub fn project<S: AsRef<str>>(t: &VariationalTrace, focus: &[S]) -> Result<VariationalTrace, ProjectionError> {
    project_with(t, focus, &Condition::tt(t.options()))
}

/// Like [`project`], fixing each non-focus option to false where the
/// `validity` condition allows it and to true otherwise.
pub fn project_with<S: AsRef<str>>(
    t: &VariationalTrace,
    focus: &[S],
    validity: &Condition,
) -> Result<VariationalTrace, ProjectionError> {
    let opts = t.options();
    let mut in_focus = vec![false; opts.len()];
    for name in focus {
        let name = name.as_ref();
        let i = opts
            .index_of(name)
            .ok_or_else(|| ProjectionError::UnknownOption(name.to_string()))?;
        in_focus[i] = true;
    }
    let mut valid = validity.clone();
    let mut fixed = Vec::new();
    for (i, _) in in_focus.iter().enumerate().filter(|(_, f)| !**f) {
        let value = valid.fix_option(i, false).is_unsat();
        valid = valid.fix_option(i, value);
        fixed.push((i, value));
    }
    if valid.is_unsat() {
        return Err(ProjectionError::Invalid);
    }
    Ok(reduce(&fix_options(t, &fixed)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub focus: Vec<String>,
    pub decisions: usize,
    pub statements: usize,
}

/// Stats of the projections on every subset of a given size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub k: usize,
    pub full: Stats,
    pub rows: Vec<ReportRow>,
    pub mean_decisions: f64,
    pub mean_statements: f64,
}

pub fn projection_report(t: &VariationalTrace, k: usize) -> Result<ProjectionReport, ProjectionError> {
    let names = t.options().names();
    if k > names.len() {
        return Err(ProjectionError::SubsetTooLarge { k, n: names.len() });
    }
    let subsets: Vec<Vec<String>> = names.iter().cloned().combinations(k).collect();
    let rows: Vec<ReportRow> = subsets
        .into_par_iter()
        .map(|focus| {
            let s = project(t, &focus).expect("subsets of the trace's own options").stats();
            ReportRow {
                focus,
                decisions: s.decisions,
                statements: s.statements,
            }
        })
        .collect();
    let count = rows.len() as f64;
    let mean = |f: fn(&ReportRow) -> usize| rows.iter().map(f).sum::<usize>() as f64 / count;
    Ok(ProjectionReport {
        k,
        full: t.stats(),
        mean_decisions: mean(|r| r.decisions),
        mean_statements: mean(|r| r.statements),
        rows,
    })
}

impl ProjectionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("focus,decisions,statements\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.focus.join(" "), r.decisions, r.statements));
        }
        out.push_str(&format!("mean,{:.2},{:.2}\n", self.mean_decisions, self.mean_statements));
        out
    }
}

impl fmt::Display for ProjectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.focus.join(", ").len())
            .max()
            .unwrap_or(0)
            .max("focus".len())
            .max("(all options)".len());
        writeln!(f, "{:<width$}  {:>9}  {:>10}", "focus", "decisions", "statements")?;
        writeln!(
            f,
            "{:<width$}  {:>9}  {:>10}",
            "(all options)", self.full.decisions, self.full.statements
        )?;
        for r in &self.rows {
            let label = if r.focus.is_empty() { "{}".to_string() } else { r.focus.join(", ") };
            writeln!(f, "{label:<width$}  {:>9}  {:>10}", r.decisions, r.statements)?;
        }
        write!(
            f,
            "{:<width$}  {:>9.2}  {:>10.2}",
            "mean", self.mean_decisions, self.mean_statements
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use crate::tracegraph::NodeKind;
    use crate::varinterp::run_variational;

    fn trace(src: &str) -> VariationalTrace {
        run_variational(&parse(src, "t.vl").unwrap()).unwrap().trace
    }

    const TWO: &str = "option A; option B;
        fun main() { x = 0; if (A) { if (B) { x = 1; } } if (B) { y = 2; } }";

    #[test]
    fn conjunction_outside_focus_is_removed() {
        let t = trace(TWO);
        let p = project(&t, &["A"]).unwrap();
        assert!(p
            .nodes()
            .iter()
            .all(|n| !n.context.to_canonical_string().contains('B')));
        // x = 1 happened only under A & B
        assert!(!p.nodes().iter().any(|n| n.kind() == NodeKind::StateChange));
    }

    #[test]
    fn full_focus_is_identity() {
        let t = trace(TWO);
        assert_eq!(project(&t, &["A", "B"]).unwrap(), t);
    }

    #[test]
    fn unknown_option_is_an_error() {
        let t = trace(TWO);
        assert_eq!(
            project(&t, &["C"]).unwrap_err(),
            ProjectionError::UnknownOption("C".into())
        );
    }

    #[test]
    fn validity_can_force_true() {
        let t = trace(TWO);
        let b = Condition::option(t.options(), "B").unwrap();
        let p = project_with(&t, &["A"], &b).unwrap();
        // with B fixed to true, x = 1 under A remains a difference
        assert!(p.nodes().iter().any(|n| n.kind() == NodeKind::StateChange));
    }

    #[test]
    fn report_rows_and_mean() {
        let t = trace(TWO);
        let r = projection_report(&t, 1).unwrap();
        let focus: Vec<_> = r.rows.iter().map(|r| r.focus.join(",")).collect();
        assert_eq!(focus, ["A", "B"]);
        let all = projection_report(&t, 2).unwrap();
        assert_eq!(all.rows.len(), 1);
        assert_eq!((all.rows[0].decisions, all.rows[0].statements), (all.full.decisions, all.full.statements));
        assert!(r.to_csv().ends_with(&format!("mean,{:.2},{:.2}\n", r.mean_decisions, r.mean_statements)));
        assert!(projection_report(&t, 3).is_err());
    }
}
