//! Outcomes and verdicts shared by both engines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::axiomatic::AxiomaticWitness;
use crate::litmus::{AddressLayout, Expect, Location, Program};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Axiomatic,
    Operational,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Axiomatic => "axiomatic",
            Engine::Operational => "operational",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Final values of the locations a program's condition mentions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Outcome(pub BTreeMap<Location, i64>);

impl Outcome {
    pub fn get(&self, loc: &Location) -> i64 {
        self.0.get(loc).copied().unwrap_or(0)
    }

    /// Whether this outcome is the target of the program's condition.
    pub fn is_target(&self, program: &Program, layout: &AddressLayout) -> bool {
        program.condition.is_target(&|l: &Location| self.get(l), layout)
    }

    /// Renders as `P2:r1=1 /\ [a]=0`; values equal to a label address print as the label.
    pub fn render(&self, program: &Program, layout: &AddressLayout) -> String {
        if self.0.is_empty() {
            return "(empty)".to_string();
        }
        self.0
            .iter()
            .map(|(loc, v)| {
                let value = layout.label_at(*v).map(str::to_string).unwrap_or_else(|| v.to_string());
                format!("{}={value}", program.location_name(loc))
            })
            .collect::<Vec<_>>()
            .join(" /\\ ")
    }
}

/// Evidence that the target outcome is reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A candidate execution with a memory order satisfying the axioms.
    Axiomatic(AxiomaticWitness),
    /// The machine transitions leading to a final state with the target outcome.
    Operational(Vec<String>),
}

impl Witness {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Witness::Axiomatic(w) => w.to_json(),
            Witness::Operational(trace) => serde_json::json!({ "trace": trace }),
        }
    }
}

/// Result of running one engine on one program under one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub test: String,
    pub model: Model,
    pub engine: Engine,
    pub outcomes: BTreeSet<Outcome>,
    pub target_allowed: bool,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn new(
        program: &Program,
        layout: &AddressLayout,
        model: Model,
        engine: Engine,
        outcomes: BTreeSet<Outcome>,
    ) -> Verdict {
        let target_allowed = outcomes.iter().any(|o| o.is_target(program, layout));
        Verdict { test: program.name.clone(), model, engine, outcomes, target_allowed, witness: None }
    }

    pub fn verdict(&self) -> Expect {
        Expect::from_allowed(self.target_allowed)
    }
}
