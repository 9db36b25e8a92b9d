//! Running both engines on one program and comparing their outcome sets.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::axiomatic::{allowed_axiomatic_with, AxiomaticOptions};
use crate::error::{Error, Result};
use crate::litmus::Program;
use crate::model::{Model, ModelConfig};
use crate::operational::{explore_with, ExploreOptions, ExploreResult};
use crate::outcome::{Outcome, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckOptions {
    pub axiomatic: AxiomaticOptions,
    pub explore: ExploreOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    /// Both engines finished with identical outcome sets.
    Pass,
    /// Both engines finished and disagree.
    Fail,
    /// An engine hit a resource limit.
    Inconclusive,
}

#[derive(Debug)]
pub struct CrossCheckReport {
    pub test: String,
    pub model: Model,
    pub axiomatic: Option<Verdict>,
    pub operational: Option<ExploreResult>,
    pub axiomatic_error: Option<Error>,
    pub operational_error: Option<Error>,
    pub axiomatic_time: Duration,
    pub operational_time: Duration,
    /// Outcomes only the axiomatic engine allows.
    pub only_axiomatic: BTreeSet<Outcome>,
    /// Outcomes only the operational engine reaches.
    pub only_operational: BTreeSet<Outcome>,
    pub status: CheckStatus,
}

pub fn cross_check(program: &Program, cfg: &ModelConfig) -> Result<CrossCheckReport> {
    cross_check_with(program, cfg, &CheckOptions::default())
}

/// Runs both engines. Resource limits make the report inconclusive; a model
/// without an operational engine is an error.
pub fn cross_check_with(program: &Program, cfg: &ModelConfig, opts: &CheckOptions) -> Result<CrossCheckReport> {
    if !cfg.model().has_operational_engine() {
        return Err(Error::UnsupportedModel(cfg.model()));
    }
    let start = Instant::now();
    let axiomatic = allowed_axiomatic_with(program, cfg, &opts.axiomatic);
    let axiomatic_time = start.elapsed();
    let start = Instant::now();
    let operational = explore_with(program, cfg, &opts.explore);
    let operational_time = start.elapsed();

    let (axiomatic, axiomatic_error) = split(axiomatic)?;
    let (operational, operational_error) = split(operational)?;
    let (only_axiomatic, only_operational, status) = match (&axiomatic, &operational) {
        (Some(a), Some(o)) => {
            let only_a: BTreeSet<Outcome> = a.outcomes.difference(&o.verdict.outcomes).cloned().collect();
            let only_o: BTreeSet<Outcome> = o.verdict.outcomes.difference(&a.outcomes).cloned().collect();
            let status = if only_a.is_empty() && only_o.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail };
            (only_a, only_o, status)
        }
        _ => (BTreeSet::new(), BTreeSet::new(), CheckStatus::Inconclusive),
    };
    Ok(CrossCheckReport {
        test: program.name.clone(),
        model: cfg.model(),
        axiomatic,
        operational,
        axiomatic_error,
        operational_error,
        axiomatic_time,
        operational_time,
        only_axiomatic,
        only_operational,
        status,
    })
}

/// Keeps resource-limit errors for the report and propagates any other error.
fn split<T>(r: Result<T>) -> Result<(Option<T>, Option<Error>)> {
    match r {
        Ok(v) => Ok((Some(v), None)),
        Err(e) if e.is_resource_limit() => Ok((None, Some(e))),
        Err(e) => Err(e),
    }
}
