//! First-order radio energy model: electronics cost per bit plus a
//! distance-dependent amplifier term, free-space (d^2) below the crossover
//! distance d0 and multipath (d^4) at or beyond it.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    /// Electronics energy per bit, J/bit (tx and rx).
    pub e_elec_j: f64,
    /// Free-space amplifier energy, J/bit/m^2.
    pub eps_fs_j: f64,
    /// Multipath amplifier energy, J/bit/m^4.
    pub eps_mp_j: f64,
    /// Aggregation energy per bit per input packet, J/bit.
    pub e_da_j: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            e_elec_j: 50e-9,
            eps_fs_j: 10e-12,
            eps_mp_j: 0.0013e-12,
            e_da_j: 5e-9,
        }
    }
}

impl RadioParams {
    /// Crossover distance between the amplifier regimes; the two branches of
    /// `tx_energy` agree here by construction.
    pub fn d0(&self) -> f64 {
        (self.eps_fs_j / self.eps_mp_j).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radio.e_elec_j", self.e_elec_j),
            ("radio.eps_fs_j", self.eps_fs_j),
            ("radio.eps_mp_j", self.eps_mp_j),
            ("radio.e_da_j", self.e_da_j),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(SimError::config(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketSpec {
    pub payload_bits: u32,
    pub control_bits: u32,
}

impl Default for PacketSpec {
    fn default() -> Self {
        PacketSpec {
            payload_bits: 2000,
            control_bits: 100,
        }
    }
}

impl PacketSpec {
    pub fn validate(&self) -> Result<()> {
        if self.payload_bits == 0 {
            return Err(SimError::config(
                "packet.payload_bits",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Energy to transmit `bits` over `distance` metres.
pub fn tx_energy(bits: u32, distance: f64, rp: &RadioParams) -> f64 {
    let b = bits as f64;
    if distance < rp.d0() {
        b * rp.e_elec_j + b * rp.eps_fs_j * distance * distance
    } else {
        b * rp.e_elec_j + b * rp.eps_mp_j * distance.powi(4)
    }
}

/// Energy to receive `bits`; distance-independent.
pub fn rx_energy(bits: u32, rp: &RadioParams) -> f64 {
    bits as f64 * rp.e_elec_j
}

/// Energy to fuse `input_packets` packets of `bits` each into one packet.
pub fn aggregate_energy(input_packets: u32, bits: u32, rp: &RadioParams) -> f64 {
    input_packets as f64 * bits as f64 * rp.e_da_j
}
