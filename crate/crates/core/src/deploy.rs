//! Node deployment (stratified per segment) and the relay budget: how many
//! relay nodes to place and where.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{FieldPartition, Point};
use crate::node::{Node, NodeId};

/// RNG stream ids, so the per-purpose generators derived from one simulation
/// seed stay independent of each other.
pub const STREAM_DEPLOY: u64 = 0;
pub const STREAM_RELAY: u64 = 1;
pub const STREAM_PROTOCOL: u64 = 2;
pub const STREAM_LOSS: u64 = 3;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deploy `count` sensor nodes stratified over the partition's segments
/// (populations differ by at most one, earlier segments take the remainder),
/// plus the base station at the centre. Sensor ids run 0..count, the base
/// station gets id `count`. Deterministic for a given seed.
pub fn deploy_nodes(
    count: usize,
    fp: &FieldPartition,
    seed: u64,
    sensor_energy_j: f64,
) -> Result<Vec<Node>> {
    let segments = fp.segments.len();
    if count < segments {
        return Err(SimError::UnderPopulated {
            segment: segments - 1,
            node_count: count,
            segments,
        });
    }
    let mut rng = seeded_rng(seed, STREAM_DEPLOY);
    let base = count / segments;
    let extra = count % segments;
    let mut nodes = Vec::with_capacity(count + 1);
    let mut id = 0;
    for seg in &fp.segments {
        let quota = base + usize::from(seg.index < extra);
        for _ in 0..quota {
            let pos = sample_in_segment(&mut rng, fp, seg.index);
            nodes.push(Node::sensor(NodeId(id), pos, sensor_energy_j));
            id += 1;
        }
    }
    nodes.push(Node::base_station(NodeId(count), fp.center));
    Ok(nodes)
}

fn sample_in_segment(rng: &mut ChaCha8Rng, fp: &FieldPartition, index: usize) -> Point {
    let seg = &fp.segments[index];
    loop {
        let p = Point::new(
            rng.gen_range(seg.min.x..seg.max.x),
            rng.gen_range(seg.min.y..seg.max.y),
        );
        // resample the measure-zero boundary hits so segment ownership is unambiguous
        if fp.segment_of(p).is_ok_and(|s| s.index == index) {
            return p;
        }
    }
}

/// Place `count` relay nodes uniformly strictly inside the inner square,
/// ids starting at `first_id`. Positions are drawn sequentially, so for a
/// fixed seed a smaller count yields a prefix of a larger count's placement.
pub fn place_relays(
    count: usize,
    fp: &FieldPartition,
    seed: u64,
    first_id: usize,
    relay_energy_j: f64,
) -> Vec<Node> {
    let mut rng = seeded_rng(seed, STREAM_RELAY);
    let d = fp.inner_half_width();
    let c = fp.center;
    (0..count)
        .map(|k| {
            let pos = loop {
                let p = Point::new(
                    rng.gen_range(c.x - d..c.x + d),
                    rng.gen_range(c.y - d..c.y + d),
                );
                if p.chebyshev(c) < d {
                    break p;
                }
            };
            Node::relay(NodeId(first_id + k), pos, relay_energy_j)
        })
        .collect()
}

/// Which value stands in for the literal zero term of the relay-proportion
/// formula. `Literal` keeps the printed constant; `SensorEnergy` substitutes
/// the sensor initial energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroTerm {
    #[default]
    Literal,
    SensorEnergy,
}

/// Inputs to the optimal relay proportion formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayProportionInputs {
    /// Sensor-node count weight (a).
    pub sensor_weight: f64,
    /// Relay-node count weight (b).
    pub relay_weight: f64,
    /// Relay initial energy, J (m).
    pub relay_energy: f64,
    /// Sensor initial energy, J (m0).
    pub sensor_energy: f64,
    /// Allowance for future nodes (u).
    pub future_allowance: f64,
    /// Mean relay energy consumption per round, J.
    pub relay_consumption: f64,
    /// Mean sensor energy consumption per round, J.
    pub sensor_consumption: f64,
    pub zero_term: ZeroTerm,
}

impl Default for RelayProportionInputs {
    fn default() -> Self {
        // yields p ~= 0.089, i.e. 4 relays for 41 sensors
        RelayProportionInputs {
            sensor_weight: 1.0,
            relay_weight: 1.0,
            relay_energy: 2.0,
            sensor_energy: 0.5,
            future_allowance: 3.0,
            relay_consumption: 8.0e-4,
            sensor_consumption: 1.0e-3,
            zero_term: ZeroTerm::Literal,
        }
    }
}

/// Optimal relay proportion. The formula is evaluated exactly as written,
/// including its leading zero term; a zero denominator is an error and a
/// negative result is returned as-is for the caller to clamp.
pub fn relay_proportion(inp: &RelayProportionInputs) -> Result<f64> {
    let (a, b) = (inp.sensor_weight, inp.relay_weight);
    let (m, m0, u) = (inp.relay_energy, inp.sensor_energy, inp.future_allowance);
    let z = match inp.zero_term {
        ZeroTerm::Literal => 0.0,
        ZeroTerm::SensorEnergy => m0,
    };
    let numerator = (1.0 + b) * inp.relay_consumption;
    let denominator = (1.0 + m) * (a + m) * (z - (a + b) + m * (-b + u)) * inp.sensor_consumption;
    if denominator == 0.0 {
        return Err(SimError::SingularFormula);
    }
    Ok(numerator / denominator)
}

/// Relay count from a proportion: round(p * n) clamped to [0, n]. Negative or
/// non-finite proportions fall back to the configured count.
pub fn relay_count(p_opt: f64, sensor_count: usize, fallback: usize) -> usize {
    if !p_opt.is_finite() || p_opt < 0.0 {
        return fallback;
    }
    let raw = (p_opt * sensor_count as f64).round() as i64;
    raw.clamp(0, sensor_count as i64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;
    use crate::node::NodeKind;

    fn inputs(a: f64, b: f64, m: f64, u: f64, e_i_r: f64, e_r: f64) -> RelayProportionInputs {
        RelayProportionInputs {
            sensor_weight: a,
            relay_weight: b,
            relay_energy: m,
            sensor_energy: 0.5,
            future_allowance: u,
            relay_consumption: e_i_r,
            sensor_consumption: e_r,
            zero_term: ZeroTerm::Literal,
        }
    }

    #[test]
    fn forty_one_nodes_stratify_five_or_four_per_segment() {
        let fp = FieldPartition::new(100.0).unwrap();
        let nodes = deploy_nodes(41, &fp, 1, 0.5).unwrap();
        assert_eq!(nodes.len(), 42);
        let mut per_segment = vec![0usize; 9];
        for n in nodes.iter().filter(|n| n.kind == NodeKind::Sensor) {
            per_segment[fp.segment_of(n.pos).unwrap().index] += 1;
        }
        assert_eq!(per_segment, vec![5, 5, 5, 5, 5, 4, 4, 4, 4]);
        let bs = nodes.last().unwrap();
        assert_eq!(bs.kind, NodeKind::BaseStation);
        assert_eq!(bs.pos, fp.center);
        assert_eq!(bs.id, NodeId(41));
    }

    #[test]
    fn deployment_is_deterministic_per_seed() {
        let fp = FieldPartition::new(100.0).unwrap();
        let a = deploy_nodes(41, &fp, 7, 0.5).unwrap();
        let b = deploy_nodes(41, &fp, 7, 0.5).unwrap();
        assert_eq!(a, b);
        let c = deploy_nodes(41, &fp, 8, 0.5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_nodes_for_the_segment_count_is_an_error() {
        let fp = FieldPartition::new(100.0).unwrap();
        assert!(deploy_nodes(8, &fp, 1, 0.5).is_err());
        assert!(deploy_nodes(9, &fp, 1, 0.5).is_ok());
    }

    #[test]
    fn relays_sit_strictly_inside_the_inner_square() {
        let fp = FieldPartition::new(100.0).unwrap();
        let relays = place_relays(16, &fp, 3, 42, 2.0);
        assert_eq!(relays.len(), 16);
        for r in &relays {
            assert_eq!(r.kind, NodeKind::Relay);
            assert!(r.pos.chebyshev(fp.center) < fp.inner_half_width());
            assert_eq!(fp.classify(r.pos).unwrap(), Region::Inner);
            assert_eq!(r.energy, 2.0);
        }
        assert!(place_relays(0, &fp, 3, 42, 2.0).is_empty());
    }

    #[test]
    fn smaller_relay_sets_are_prefixes_of_larger_ones() {
        let fp = FieldPartition::new(100.0).unwrap();
        let two = place_relays(2, &fp, 3, 42, 2.0);
        let four = place_relays(4, &fp, 3, 42, 2.0);
        assert_eq!(&four[..2], &two[..]);
    }

    #[test]
    fn relay_proportion_matches_hand_computed_cases() {
        // a=1 b=1 m=1 u=1, E_i(r)=2, E(r)=1: 4 / -8
        let p = relay_proportion(&inputs(1.0, 1.0, 1.0, 1.0, 2.0, 1.0)).unwrap();
        assert_eq!(p, -0.5);
        // a=2 b=0 m=1 u=4, E_i(r)=3, E(r)=1: 3 / 12
        let p = relay_proportion(&inputs(2.0, 0.0, 1.0, 4.0, 3.0, 1.0)).unwrap();
        assert_eq!(p, 0.25);
    }

    #[test]
    fn zero_denominator_is_singular() {
        // a=1 b=1 m=1 u=3 makes the bracket term vanish
        let err = relay_proportion(&inputs(1.0, 1.0, 1.0, 3.0, 2.0, 1.0));
        assert!(matches!(err, Err(SimError::SingularFormula)));
    }

    #[test]
    fn sensor_energy_variant_shifts_the_bracket_term() {
        let mut inp = inputs(1.0, 1.0, 1.0, 1.0, 2.0, 1.0);
        inp.zero_term = ZeroTerm::SensorEnergy;
        // bracket becomes 0.5 - 2 + 0 = -1.5; denominator 2*2*-1.5 = -6
        let p = relay_proportion(&inp).unwrap();
        assert!((p - (2.0 * 2.0) / -6.0).abs() < 1e-15);
    }

    #[test]
    fn relay_count_rounds_clamps_and_falls_back() {
        assert_eq!(relay_count(0.1, 41, 0), 4);
        assert_eq!(relay_count(0.0, 41, 7), 0);
        assert_eq!(relay_count(-0.5, 41, 0), 0);
        assert_eq!(relay_count(-0.5, 41, 2), 2);
        assert_eq!(relay_count(f64::NAN, 41, 2), 2);
        assert_eq!(relay_count(1.5, 41, 0), 41);
    }

    #[test]
    fn default_proportion_inputs_budget_four_relays_for_41_nodes() {
        let p = relay_proportion(&RelayProportionInputs::default()).unwrap();
        assert_eq!(relay_count(p, 41, 0), 4);
    }
}
