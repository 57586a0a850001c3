//! The structured configuration document: capability map plus keyword,
//! stop-word and gazetteer tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CapabilityMap;
use crate::nlp::KeywordConfig;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

const DEFAULT_CONFIG: &str = include_str!("../config/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub schema_version: u32,
    pub capabilities: CapabilityMap,
    #[serde(flatten)]
    pub keywords: KeywordConfig,
}

impl DiscoveryConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: DiscoveryConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                context: "configuration".into(),
                found: self.schema_version,
                expected: CONFIG_SCHEMA_VERSION,
            });
        }
        self.keywords.validate()?;
        for app in self.capabilities.applications() {
            if !self.keywords.application_names().any(|a| a == app) {
                return Err(Error::InvalidConfig(format!(
                    "capability map names application `{app}` with no keyword list"
                )));
            }
        }
        Ok(())
    }

    pub fn default_json() -> &'static str {
        DEFAULT_CONFIG
    }
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("shipped default configuration is valid")
    }
}
