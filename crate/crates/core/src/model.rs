//! Memory-model selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "sc")]
    Sc,
    #[serde(rename = "gam0")]
    Gam0,
    #[serde(rename = "gam")]
    Gam,
    #[serde(rename = "gam_arm")]
    GamArm,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Sc, Model::Gam0, Model::Gam, Model::GamArm];

    /// Models the abstract machine can run.
    pub const OPERATIONAL: [Model; 3] = [Model::Sc, Model::Gam0, Model::Gam];

    pub fn name(self) -> &'static str {
        match self {
            Model::Sc => "sc",
            Model::Gam0 => "gam0",
            Model::Gam => "gam",
            Model::GamArm => "gam_arm",
        }
    }

    pub fn has_operational_engine(self) -> bool {
        self != Model::GamArm
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown model `{0}` (expected sc, gam0, gam or gam_arm)")]
pub struct UnknownModel(pub String);

impl FromStr for Model {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Model, UnknownModel> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(Model::Sc),
            "gam0" => Ok(Model::Gam0),
            "gam" => Ok(Model::Gam),
            "gam_arm" | "gam-arm" | "gamarm" | "arm" => Ok(Model::GamArm),
            _ => Err(UnknownModel(s.to_string())),
        }
    }
}

/// How two same-address loads of one thread are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SameAddrLoadLoad {
    /// Not ordered (GAM0).
    Unordered,
    /// Ordered unless a same-address store lies between them (GAM).
    NoInterveningStore,
    /// Ordered when, additionally, they read from different stores (GAM-ARM).
    DifferentSource,
}

/// A model together with the flags derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    model: Model,
    same_addr_ld_ld: SameAddrLoadLoad,
    sc_total_order: bool,
}

impl ModelConfig {
    pub fn new(model: Model) -> ModelConfig {
        let same_addr_ld_ld = match model {
            Model::Gam0 => SameAddrLoadLoad::Unordered,
            Model::Sc | Model::Gam => SameAddrLoadLoad::NoInterveningStore,
            Model::GamArm => SameAddrLoadLoad::DifferentSource,
        };
        ModelConfig { model, same_addr_ld_ld, sc_total_order: model == Model::Sc }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn same_addr_ld_ld(&self) -> SameAddrLoadLoad {
        self.same_addr_ld_ld
    }

    pub fn sc_total_order(&self) -> bool {
        self.sc_total_order
    }
}

impl From<Model> for ModelConfig {
    fn from(model: Model) -> ModelConfig {
        ModelConfig::new(model)
    }
}
