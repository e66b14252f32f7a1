//! Experiment plans: a base config swept over (protocol, relay-count) cells
//! and seeds. The config file is one flat JSON object — simulation fields
//! plus the optional `cells`, `seeds` and `output_dir` keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{Protocol, RelayCount, SimConfig};
use crate::error::{Result, SimError};

/// One sweep cell: which protocol, how many relays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub protocol: Protocol,
    pub relays: RelayCount,
}

impl Cell {
    pub fn new(protocol: Protocol, relays: RelayCount) -> Self {
        Cell { protocol, relays }
    }

    /// Stable label used for directory and column names, e.g. `edctr_r4`.
    pub fn label(&self) -> String {
        let relays = match self.relays {
            RelayCount::Fixed(k) => k.to_string(),
            RelayCount::Auto => "auto".into(),
        };
        format!("{}_r{}", self.protocol.label().to_ascii_lowercase(), relays)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.relays {
            RelayCount::Fixed(k) => write!(f, "({}, {} relays)", self.protocol, k),
            RelayCount::Auto => write!(f, "({}, auto relays)", self.protocol),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base: SimConfig,
    pub cells: Vec<Cell>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentPlan {
    /// A single-cell, single-seed plan straight from a config.
    pub fn single(base: SimConfig) -> Self {
        let cells = vec![Cell::new(base.protocol, base.relay_count)];
        let seeds = vec![base.seed];
        ExperimentPlan {
            base,
            cells,
            seeds,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let serde_json::Value::Object(mut obj) = value else {
            return Err(SimError::config(
                "config",
                "the config root must be a JSON object",
            ));
        };
        let cells_raw = obj.remove("cells");
        let seeds_raw = obj.remove("seeds");
        let dir_raw = obj.remove("output_dir");
        // everything left is the base simulation config; unknown keys are
        // rejected here by name
        let base: SimConfig = serde_json::from_value(serde_json::Value::Object(obj))?;
        base.validate()?;
        let cells: Vec<Cell> = match cells_raw {
            Some(v) => serde_json::from_value(v)?,
            None => vec![Cell::new(base.protocol, base.relay_count)],
        };
        let seeds: Vec<u64> = match seeds_raw {
            Some(v) => serde_json::from_value(v)?,
            None => vec![base.seed],
        };
        let output_dir: PathBuf = match dir_raw {
            Some(serde_json::Value::String(s)) if !s.is_empty() => PathBuf::from(s),
            Some(_) => return Err(SimError::config("output_dir", "must be a non-empty string")),
            None => PathBuf::from("out"),
        };
        let plan = ExperimentPlan {
            base,
            cells,
            seeds,
            output_dir,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.cells.is_empty() {
            return Err(SimError::config("cells", "need at least one sweep cell"));
        }
        if self.seeds.is_empty() {
            return Err(SimError::config("seeds", "need at least one seed"));
        }
        let mut seen = std::collections::HashSet::new();
        for &s in &self.seeds {
            if !seen.insert(s) {
                return Err(SimError::config("seeds", format!("seed {s} appears twice")));
            }
        }
        Ok(())
    }

    /// The flat JSON form; `from_json_str` round-trips it.
    pub fn to_json(&self) -> String {
        let mut obj = match serde_json::to_value(&self.base).expect("config serializes") {
            serde_json::Value::Object(o) => o,
            _ => unreachable!("config is a struct"),
        };
        obj.insert(
            "cells".into(),
            serde_json::to_value(&self.cells).expect("cells serialize"),
        );
        obj.insert(
            "seeds".into(),
            serde_json::to_value(&self.seeds).expect("seeds serialize"),
        );
        obj.insert(
            "output_dir".into(),
            serde_json::Value::String(self.output_dir.display().to_string()),
        );
        serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("plan serializes")
    }

    /// Short content hash embedded in the output directory name so distinct
    /// plans never overwrite each other.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        let mut hex = String::with_capacity(12);
        for b in &digest[..6] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Concrete config for one (cell, seed) run.
    pub fn config_for(&self, cell: Cell, seed: u64) -> SimConfig {
        SimConfig {
            protocol: cell.protocol,
            relay_count: cell.relays,
            seed,
            ..self.base.clone()
        }
    }
}
