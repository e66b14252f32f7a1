//! Per-round metric rows and end-of-run summaries.

use serde::{Deserialize, Serialize};

use crate::geometry::Region;

/// One CSV row per simulated round. Region energy columns count sensor-node
/// debits only; relay debits are reported separately so that cross-protocol
/// region comparisons weigh the same 41 sensors, while
/// inner+middle+outer+relay still equals the total debited this round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u32,
    pub time_s: f64,
    pub alive: u32,
    pub inner_energy_j: f64,
    pub middle_energy_j: f64,
    pub outer_energy_j: f64,
    pub relay_energy_j: f64,
    pub packets_offered: u32,
    pub packets_delivered: u32,
    pub packets_lost: u32,
    pub mean_delay_s: f64,
    pub throughput_bps: f64,
}

impl RoundMetrics {
    pub fn region_energy(&self, region: Region) -> f64 {
        match region {
            Region::Inner => self.inner_energy_j,
            Region::Middle => self.middle_energy_j,
            Region::Outer => self.outer_energy_j,
        }
    }

    /// Everything debited from any node this round.
    pub fn total_energy_j(&self) -> f64 {
        self.inner_energy_j + self.middle_energy_j + self.outer_energy_j + self.relay_energy_j
    }
}

/// Run summary. Death rounds refer to sensor nodes; `None` means no death
/// within the simulated horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub rounds_executed: u32,
    pub first_node_death: Option<u32>,
    pub last_node_death: Option<u32>,
    pub first_death_inner: Option<u32>,
    pub first_death_middle: Option<u32>,
    pub first_death_outer: Option<u32>,
    pub alive_at_end: u32,
    pub total_offered: u64,
    pub total_delivered: u64,
    pub total_lost: u64,
    pub total_energy_j: f64,
    pub mean_delay_s: f64,
    pub mean_sensor_consumption_j: f64,
    pub mean_relay_consumption_j: f64,
    pub relay_count: usize,
}

impl SummaryStats {
    pub fn first_death_in(&self, region: Region) -> Option<u32> {
        match region {
            Region::Inner => self.first_death_inner,
            Region::Middle => self.first_death_middle,
            Region::Outer => self.first_death_outer,
        }
    }
}
