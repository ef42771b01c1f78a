//! Brute-force trace generation: record every configuration, align the
//! logs, merge them into one conditional trace and reduce it.

pub mod align;
pub mod log;
pub mod merge;

use rayon::prelude::*;
use thiserror::Error;

pub use align::{align, needleman_wunsch, AlignOp, AlignedTraces, Column};
pub use log::{ConcreteTrace, EventKey, EventKind, EventPayload, Outcome, TraceEvent};
pub use merge::merge;

use crate::minilang::{run_concrete_with, ExecError, Limits, Program};
use crate::tracegraph::{reduce, VariationalTrace};
use crate::varcore::Configuration;

/// Programs with more options than this are refused.
pub const MAX_OPTIONS: usize = 12;

/// Configurations recorded per parallel batch before folding.
const BATCH: u64 = 64;

#[derive(Debug, Clone, Error)]
pub enum BaselineError {
    #[error("{options} options mean 2^{options} configurations, over the baseline cap of 2^{cap}")]
    CapExceeded { options: usize, cap: usize },
    #[error("configuration {config}: {error}")]
    Exec { config: String, error: ExecError },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BaselineCounters {
    pub configurations: u64,
    /// Sum of the steps of all concrete runs.
    pub concrete_steps: u64,
    /// Events held by the alignment profile once every log is folded in.
    pub retained_events: usize,
}

#[derive(Clone, Debug)]
pub struct BaselineRun {
    /// The reduced trace.
    pub trace: VariationalTrace,
    /// The merged trace before reduction.
    pub full: VariationalTrace,
    pub counters: BaselineCounters,
}

fn check_cap(p: &Program) -> Result<u64, BaselineError> {
    let n = p.options.len();
    if n > MAX_OPTIONS {
        return Err(BaselineError::CapExceeded {
            options: n,
            cap: MAX_OPTIONS,
        });
    }
    Ok(1u64 << n)
}

fn bits(cfg: &Configuration) -> String {
    cfg.values().iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn record_range(
    p: &Program,
    range: std::ops::Range<u64>,
    limits: Limits,
) -> Result<Vec<ConcreteTrace>, BaselineError> {
    range
        .into_par_iter()
        .map(|i| {
            let cfg = Configuration::from_index(&p.options, i);
            run_concrete_with(p, &cfg, limits)
                .map(|r| r.trace)
                .map_err(|error| BaselineError::Exec {
                    config: bits(&cfg),
                    error,
                })
        })
        .collect()
}

/// Runs every configuration, in configuration-index order.
pub fn record_all(p: &Program) -> Result<Vec<ConcreteTrace>, BaselineError> {
    record_all_with(p, Limits::default())
}

pub fn record_all_with(p: &Program, limits: Limits) -> Result<Vec<ConcreteTrace>, BaselineError> {
    let total = check_cap(p)?;
    record_range(p, 0..total, limits)
}

pub fn generate_baseline(p: &Program) -> Result<BaselineRun, BaselineError> {
    generate_baseline_with(p, Limits::default(), |_| {})
}

/// Records configurations in parallel batches and folds each log into the
/// alignment profile as soon as its batch is done. `on_trace` sees every
/// log before it is folded.
pub fn generate_baseline_with(
    p: &Program,
    limits: Limits,
    mut on_trace: impl FnMut(&ConcreteTrace),
) -> Result<BaselineRun, BaselineError> {
    let total = check_cap(p)?;
    let mut profile = AlignedTraces::new();
    let mut counters = BaselineCounters {
        configurations: total,
        ..Default::default()
    };
    let mut start = 0;
    while start < total {
        let end = (start + BATCH).min(total);
        for t in record_range(p, start..end, limits)? {
            on_trace(&t);
            counters.concrete_steps += t.steps;
            profile.add(t);
        }
        start = end;
    }
    counters.retained_events = profile.retained_events();
    let full = merge(p, &profile);
    Ok(BaselineRun {
        trace: reduce(&full),
        full,
        counters,
    })
}
