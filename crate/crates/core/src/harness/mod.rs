//! The litmus corpus, engine cross-checking, fuzzing and model-inclusion checks.

mod crosscheck;
mod fuzz;
mod perloc;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crosscheck::{cross_check, cross_check_with, CheckOptions, CheckStatus, CrossCheckReport};
pub use fuzz::{fuzz_program, run_fuzz_suite, FuzzBounds, FuzzCase, FuzzSummary};
pub use perloc::per_location_sc_outcomes;

use crate::axiomatic::allowed_axiomatic_with;
use crate::error::Result;
use crate::litmus::{parse_litmus, resolve_addresses, AddressLayout, Expect, Expectation, Program};
use crate::model::{Model, ModelConfig};
use crate::outcome::{Engine, Outcome, Verdict};

/// A corpus test: its file name, source text and parsed program.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub file: &'static str,
    pub source: &'static str,
    pub program: Program,
}

impl CorpusEntry {
    pub fn expectations(&self) -> &[Expectation] {
        &self.program.expectations
    }
}

macro_rules! corpus_files {
    ($($name:literal),* $(,)?) => {
        [$(($name, include_str!(concat!("../../../../corpus/", $name)))),*]
    };
}

const CORPUS: [(&str, &str); 10] = corpus_files!(
    "dekker.litmus",
    "oota.litmus",
    "mp_addr.litmus",
    "mp_artificial_addr.litmus",
    "dep_via_memory.litmus",
    "mp_prefetch.litmus",
    "corr.litmus",
    "ld_st_ld.litmus",
    "rsw.litmus",
    "rnsw.litmus",
);

/// The built-in litmus tests with their expected verdicts.
pub fn corpus() -> Vec<CorpusEntry> {
    CORPUS
        .iter()
        .map(|&(file, source)| {
            let parsed = parse_litmus(source).unwrap_or_else(|e| panic!("corpus file {file} does not parse: {e}"));
            let program = resolve_addresses(parsed).expect("corpus programs bind few labels");
            CorpusEntry { file, source, program }
        })
        .collect()
}

/// Looks a corpus test up by file stem (`corr`) or test name (`CoRR`), ignoring case.
pub fn corpus_entry(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| {
        e.file.trim_end_matches(".litmus").eq_ignore_ascii_case(name) || e.program.name.eq_ignore_ascii_case(name)
    })
}

/// Whether every outcome `stronger` allows is allowed by `weaker` (axiomatic engine).
pub fn check_inclusion(program: &Program, weaker: &ModelConfig, stronger: &ModelConfig) -> Result<bool> {
    let opts = Default::default();
    let w = allowed_axiomatic_with(program, weaker, &opts)?;
    let s = allowed_axiomatic_with(program, stronger, &opts)?;
    Ok(s.outcomes.is_subset(&w.outcomes))
}

/// One line of a verdict report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub test: String,
    pub model: Model,
    pub engine: Engine,
    /// `allowed`, `forbidden`, or `error` when the engine could not finish.
    pub verdict: String,
    pub expected: Option<Expect>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportRow {
    pub fn from_verdict(program: &Program, layout: &AddressLayout, v: &Verdict, with_outcomes: bool) -> ReportRow {
        let expected = program.expectation(v.model).map(|e| e.verdict);
        ReportRow {
            test: v.test.clone(),
            model: v.model,
            engine: v.engine,
            verdict: v.verdict().to_string(),
            expected,
            pass: expected.is_none_or(|e| e == v.verdict()),
            outcomes: with_outcomes.then(|| render_outcomes(program, layout, &v.outcomes)),
            witness: v.witness.as_ref().map(|w| w.to_json()),
            error: None,
        }
    }

    pub fn from_error(program: &Program, model: Model, engine: Engine, error: &crate::Error) -> ReportRow {
        ReportRow {
            test: program.name.clone(),
            model,
            engine,
            verdict: "error".to_string(),
            expected: program.expectation(model).map(|e| e.verdict),
            pass: false,
            outcomes: None,
            witness: None,
            error: Some(error.to_string()),
        }
    }
}

pub fn render_outcomes(program: &Program, layout: &AddressLayout, outcomes: &BTreeSet<Outcome>) -> Vec<String> {
    outcomes.iter().map(|o| o.render(program, layout)).collect()
}

/// Result of running the whole corpus.
#[derive(Debug, Default)]
pub struct CorpusReport {
    pub rows: Vec<ReportRow>,
    pub cross_checks: Vec<CrossCheckReport>,
}

impl CorpusReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.cross_checks.iter().all(|c| c.status == CheckStatus::Pass)
    }
}

/// Runs every corpus test under every model with every applicable engine.
pub fn run_corpus(opts: &CheckOptions) -> CorpusReport {
    let entries = corpus();
    let jobs: Vec<(&CorpusEntry, Model)> =
        entries.iter().flat_map(|e| Model::ALL.into_iter().map(move |m| (e, m))).collect();
    let parts: Vec<CorpusReport> = jobs.par_iter().map(|&(e, m)| check_program(&e.program, m, opts, false)).collect();
    let mut report = CorpusReport::default();
    for p in parts {
        report.rows.extend(p.rows);
        report.cross_checks.extend(p.cross_checks);
    }
    report
}

/// Verdict rows for one program and model: both engines (cross-checked) when the
/// model has an operational engine, the axiomatic engine alone otherwise.
pub fn check_program(program: &Program, model: Model, opts: &CheckOptions, with_outcomes: bool) -> CorpusReport {
    let cfg = ModelConfig::new(model);
    let layout = match program.layout() {
        Ok(l) => l,
        Err(e) => {
            return CorpusReport {
                rows: vec![ReportRow::from_error(program, model, Engine::Axiomatic, &e)],
                cross_checks: vec![],
            }
        }
    };
    let mut report = CorpusReport::default();
    if model.has_operational_engine() {
        let cc = cross_check_with(program, &cfg, opts).expect("model has an operational engine");
        for (engine, verdict, err) in [
            (Engine::Axiomatic, cc.axiomatic.as_ref(), &cc.axiomatic_error),
            (Engine::Operational, cc.operational.as_ref().map(|r| &r.verdict), &cc.operational_error),
        ] {
            report.rows.push(match (verdict, err) {
                (Some(v), _) => ReportRow::from_verdict(program, &layout, v, with_outcomes),
                (None, Some(e)) => ReportRow::from_error(program, model, engine, e),
                (None, None) => unreachable!("an engine either returns a verdict or an error"),
            });
        }
        report.cross_checks.push(cc);
    } else {
        report.rows.push(match allowed_axiomatic_with(program, &cfg, &opts.axiomatic) {
            Ok(v) => ReportRow::from_verdict(program, &layout, &v, with_outcomes),
            Err(e) => ReportRow::from_error(program, model, Engine::Axiomatic, &e),
        });
    }
    report
}
