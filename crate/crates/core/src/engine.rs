//! Round-driven simulation engine for the concentric-square relay protocol
//! and the two baselines. Every round: elect heads, build routes, generate
//! one packet per alive sensor, walk the traffic inner-ward with per-hop
//! energy debits, then settle deaths and metrics.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{form_static_clusters, Cluster};
use crate::deploy::{
    deploy_nodes, place_relays, relay_count, relay_proportion, seeded_rng, RelayProportionInputs,
    STREAM_LOSS, STREAM_PROTOCOL,
};
use crate::energy::{aggregate_energy, rx_energy, tx_energy, PacketSpec, RadioParams};
use crate::error::{Result, SimError};
use crate::geometry::{FieldPartition, Point, Region};
use crate::metrics::{RoundMetrics, SummaryStats};
use crate::node::{Node, NodeId, NodeKind};
use crate::routing::{build_routes, build_routes_leach, RoutingTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "EDCTR")]
    Edctr,
    #[serde(rename = "LEACH")]
    Leach,
    #[serde(rename = "LEACH_C")]
    LeachC,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Edctr => "EDCTR",
            Protocol::Leach => "LEACH",
            Protocol::LeachC => "LEACH_C",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Protocol {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "EDCTR" => Ok(Protocol::Edctr),
            "LEACH" => Ok(Protocol::Leach),
            "LEACH_C" | "LEACHC" => Ok(Protocol::LeachC),
            _ => Err(SimError::config(
                "protocol",
                format!("unknown protocol `{s}`; expected EDCTR, LEACH or LEACH_C"),
            )),
        }
    }
}

/// Relay budget: a fixed count, or derived from the optimal-proportion
/// formula at deployment time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelayCount {
    Fixed(usize),
    Auto,
}

impl Serialize for RelayCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RelayCount::Fixed(k) => s.serialize_u64(*k as u64),
            RelayCount::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for RelayCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = RelayCount;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a non-negative relay count or the string \"auto\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<RelayCount, E> {
                Ok(RelayCount::Fixed(v as usize))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<RelayCount, E> {
                if v < 0 {
                    Err(E::custom(format!("relay_count must be >= 0, got {v}")))
                } else {
                    Ok(RelayCount::Fixed(v as usize))
                }
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<RelayCount, E> {
                if v.eq_ignore_ascii_case("auto") {
                    Ok(RelayCount::Auto)
                } else {
                    Err(E::custom(format!(
                        "relay_count must be a count or \"auto\", got \"{v}\""
                    )))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayParams {
    /// Fixed processing/queueing cost per hop, seconds.
    pub per_hop_fixed_s: f64,
    /// Signal propagation speed, m/s.
    pub propagation_speed_m_s: f64,
}

impl Default for DelayParams {
    fn default() -> Self {
        DelayParams {
            per_hop_fixed_s: 1e-3,
            propagation_speed_m_s: 2e8,
        }
    }
}

/// End-to-end delay of one packet along `path`: per hop, the fixed cost plus
/// distance over propagation speed.
pub fn compute_delay(path: &[Point], dp: &DelayParams) -> f64 {
    path.windows(2)
        .map(|w| dp.per_hop_fixed_s + w[0].distance(w[1]) / dp.propagation_speed_m_s)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub protocol: Protocol,
    pub node_count: usize,
    pub relay_count: RelayCount,
    pub field_side_m: f64,
    pub rounds: u32,
    pub seed: u64,
    pub radio: RadioParams,
    pub packet: PacketSpec,
    pub delay: DelayParams,
    pub leach_p: f64,
    pub round_duration_s: f64,
    pub sensor_energy_j: f64,
    pub relay_energy_j: f64,
    /// Relay count used when the proportion formula is singular or negative.
    pub relay_fallback: usize,
    pub relay_proportion: RelayProportionInputs,
    /// Uniform per-transmission drop probability; 0 disables the knob.
    pub loss_probability: f64,
    /// Record per-round head sets and route tables in the result.
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            protocol: Protocol::Edctr,
            node_count: 41,
            relay_count: RelayCount::Fixed(0),
            field_side_m: 100.0,
            rounds: 2000,
            seed: 1,
            radio: RadioParams::default(),
            packet: PacketSpec::default(),
            delay: DelayParams::default(),
            leach_p: 0.05,
            round_duration_s: 1.0,
            sensor_energy_j: 0.5,
            relay_energy_j: 2.0,
            relay_fallback: 0,
            relay_proportion: RelayProportionInputs::default(),
            loss_probability: 0.0,
            trace: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 9 {
            return Err(SimError::config(
                "node_count",
                format!(
                    "must be at least 9 (one sensor per segment), got {}",
                    self.node_count
                ),
            ));
        }
        if self.rounds == 0 {
            return Err(SimError::config("rounds", "must be at least 1"));
        }
        if self.field_side_m <= 0.0 || !self.field_side_m.is_finite() {
            return Err(SimError::config(
                "field_side_m",
                format!("must be positive, got {}", self.field_side_m),
            ));
        }
        if self.leach_p.is_nan() || self.leach_p <= 0.0 || self.leach_p > 1.0 {
            return Err(SimError::config(
                "leach_p",
                format!("must be in (0, 1], got {}", self.leach_p),
            ));
        }
        if self.round_duration_s <= 0.0 || !self.round_duration_s.is_finite() {
            return Err(SimError::config(
                "round_duration_s",
                format!("must be positive, got {}", self.round_duration_s),
            ));
        }
        for (name, v) in [
            ("sensor_energy_j", self.sensor_energy_j),
            ("relay_energy_j", self.relay_energy_j),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(SimError::config(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.loss_probability) {
            return Err(SimError::config(
                "loss_probability",
                format!("must be in [0, 1), got {}", self.loss_probability),
            ));
        }
        if self.delay.per_hop_fixed_s < 0.0 || !self.delay.per_hop_fixed_s.is_finite() {
            return Err(SimError::config(
                "delay.per_hop_fixed_s",
                format!("must be non-negative, got {}", self.delay.per_hop_fixed_s),
            ));
        }
        if self.delay.propagation_speed_m_s.is_nan() || self.delay.propagation_speed_m_s <= 0.0 {
            return Err(SimError::config(
                "delay.propagation_speed_m_s",
                format!("must be positive, got {}", self.delay.propagation_speed_m_s),
            ));
        }
        self.radio.validate()?;
        self.packet.validate()?;
        Ok(())
    }
}

/// Initial network layout, serialized alongside run output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub field: FieldPartition,
    pub nodes: Vec<Node>,
    pub clusters: Vec<Cluster>,
}

/// Optional per-round routing snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u32,
    pub heads: Vec<NodeId>,
    pub next_hop: Vec<Option<NodeId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config: SimConfig,
    pub rounds: Vec<RoundMetrics>,
    pub summary: SummaryStats,
    pub topology: Topology,
    pub traces: Option<Vec<RoundTrace>>,
}

/// One physical packet in flight: an aggregate carrying the source packets
/// fused into it.
struct Shipment {
    sources: Vec<NodeId>,
}

/// Per-round energy ledger, split the way the metrics report it.
#[derive(Default)]
struct Debits {
    region: [f64; 3],
    relay: f64,
}

impl Debits {
    fn total(&self) -> f64 {
        self.region.iter().sum::<f64>() + self.relay
    }
}

fn debit(nodes: &mut [Node], regions: &[Region], id: NodeId, amount: f64, d: &mut Debits) -> bool {
    let node = &mut nodes[id.0];
    let (ok, drained) = node.try_spend(amount);
    match node.kind {
        NodeKind::Sensor => d.region[regions[id.0].index()] += drained,
        NodeKind::Relay => d.relay += drained,
        NodeKind::BaseStation => {}
    }
    ok
}

struct ClusterPlan {
    region: Region,
    head: Option<NodeId>,
    /// Members alive at round start, ascending id; these are this round's
    /// packet sources.
    members: Vec<NodeId>,
}

struct RoundOutcome {
    offered: u32,
    delivered: Vec<NodeId>,
    lost: u32,
    debits: Debits,
    table: RoutingTable,
    heads: Vec<NodeId>,
}

pub struct Simulation {
    cfg: SimConfig,
    fp: FieldPartition,
    nodes: Vec<Node>,
    clusters: Vec<Cluster>,
    bs: NodeId,
    relay_ids: Vec<NodeId>,
    node_region: Vec<Region>,
    round: u32,
    protocol_rng: ChaCha8Rng,
    loss_rng: ChaCha8Rng,
    leach_eligible: Vec<bool>,
    resolved_relays: usize,
    topology: Topology,
    traces: Option<Vec<RoundTrace>>,
    total_offered: u64,
    total_delivered: u64,
    total_lost: u64,
    total_energy: f64,
    total_sensor_energy: f64,
    total_relay_energy: f64,
    delay_sum: f64,
    first_death: Option<u32>,
    last_death: Option<u32>,
    first_death_region: [Option<u32>; 3],
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let fp = FieldPartition::new(cfg.field_side_m)?;
        let mut nodes = deploy_nodes(cfg.node_count, &fp, cfg.seed, cfg.sensor_energy_j)?;
        let bs = NodeId(cfg.node_count);
        let resolved_relays = if cfg.protocol == Protocol::Edctr {
            match cfg.relay_count {
                RelayCount::Fixed(k) => k,
                RelayCount::Auto => match relay_proportion(&cfg.relay_proportion) {
                    Ok(p) => relay_count(p, cfg.node_count, cfg.relay_fallback),
                    Err(SimError::SingularFormula) => cfg.relay_fallback,
                    Err(e) => return Err(e),
                },
            }
        } else {
            0 // the baselines have no relay tier
        };
        nodes.extend(place_relays(
            resolved_relays,
            &fp,
            cfg.seed,
            cfg.node_count + 1,
            cfg.relay_energy_j,
        ));
        let relay_ids: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Relay)
            .map(|n| n.id)
            .collect();
        let clusters = form_static_clusters(&nodes, &fp)?;
        let node_region = nodes
            .iter()
            .map(|n| {
                if n.kind == NodeKind::BaseStation {
                    Region::Inner
                } else {
                    fp.classify(n.pos).expect("nodes are deployed in-field")
                }
            })
            .collect();
        let topology = Topology {
            field: fp.clone(),
            nodes: nodes.clone(),
            clusters: clusters.clone(),
        };
        let traces = cfg.trace.then(Vec::new);
        Ok(Simulation {
            protocol_rng: seeded_rng(cfg.seed, STREAM_PROTOCOL),
            loss_rng: seeded_rng(cfg.seed, STREAM_LOSS),
            leach_eligible: vec![true; cfg.node_count],
            round: 0,
            total_offered: 0,
            total_delivered: 0,
            total_lost: 0,
            total_energy: 0.0,
            total_sensor_energy: 0.0,
            total_relay_energy: 0.0,
            delay_sum: 0.0,
            first_death: None,
            last_death: None,
            first_death_region: [None; 3],
            resolved_relays,
            topology,
            traces,
            cfg,
            fp,
            nodes,
            clusters,
            bs,
            relay_ids,
            node_region,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn field(&self) -> &FieldPartition {
        &self.fp
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn resolved_relay_count(&self) -> usize {
        self.resolved_relays
    }

    pub fn current_round(&self) -> u32 {
        self.round
    }

    fn alive_sensors(&self) -> impl Iterator<Item = &Node> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Sensor && n.alive)
    }

    /// Advance one round. Returns `None` once every sensor is dead.
    pub fn step(&mut self) -> Option<RoundMetrics> {
        self.alive_sensors().next()?;
        self.round += 1;
        let round = self.round;
        let alive_before: Vec<bool> = self.nodes.iter().map(|n| n.alive).collect();

        let outcome = match self.cfg.protocol {
            Protocol::Edctr => self.step_edctr(round),
            Protocol::Leach => self.step_leach(round, false),
            Protocol::LeachC => self.step_leach(round, true),
        };

        // deaths settle at round end
        for n in &self.nodes {
            if n.kind == NodeKind::Sensor && alive_before[n.id.0] && !n.alive {
                self.first_death.get_or_insert(round);
                self.last_death = Some(round);
                let r = self.node_region[n.id.0].index();
                self.first_death_region[r].get_or_insert(round);
            }
        }

        let delivered = outcome.delivered.len() as u32;
        debug_assert_eq!(delivered + outcome.lost, outcome.offered);
        let mut delay = 0.0;
        for s in &outcome.delivered {
            delay += compute_delay(&self.chain_positions(&outcome.table, *s), &self.cfg.delay);
        }
        let sensor_energy: f64 = outcome.debits.region.iter().sum();
        self.total_offered += outcome.offered as u64;
        self.total_delivered += delivered as u64;
        self.total_lost += outcome.lost as u64;
        self.total_energy += outcome.debits.total();
        self.total_sensor_energy += sensor_energy;
        self.total_relay_energy += outcome.debits.relay;
        self.delay_sum += delay;

        if let Some(traces) = &mut self.traces {
            traces.push(RoundTrace {
                round,
                heads: outcome.heads.clone(),
                next_hop: outcome.table.next_hop.clone(),
            });
        }

        let alive = self.alive_sensors().count() as u32;
        let bits = self.cfg.packet.payload_bits as f64;
        Some(RoundMetrics {
            round,
            time_s: round as f64 * self.cfg.round_duration_s,
            alive,
            inner_energy_j: outcome.debits.region[0],
            middle_energy_j: outcome.debits.region[1],
            outer_energy_j: outcome.debits.region[2],
            relay_energy_j: outcome.debits.relay,
            packets_offered: outcome.offered,
            packets_delivered: delivered,
            packets_lost: outcome.lost,
            mean_delay_s: if delivered > 0 {
                delay / delivered as f64
            } else {
                0.0
            },
            throughput_bps: delivered as f64 * bits / self.cfg.round_duration_s,
        })
    }

    /// Run to the configured horizon or network death.
    pub fn run(mut self) -> SimResult {
        let mut rounds = Vec::new();
        while self.round < self.cfg.rounds {
            match self.step() {
                Some(m) => rounds.push(m),
                None => break,
            }
        }
        let executed = rounds.len() as u32;
        let sensor_count = self.cfg.node_count as f64;
        let summary = SummaryStats {
            rounds_executed: executed,
            first_node_death: self.first_death,
            last_node_death: self.last_death,
            first_death_inner: self.first_death_region[0],
            first_death_middle: self.first_death_region[1],
            first_death_outer: self.first_death_region[2],
            alive_at_end: self.alive_sensors().count() as u32,
            total_offered: self.total_offered,
            total_delivered: self.total_delivered,
            total_lost: self.total_lost,
            total_energy_j: self.total_energy,
            mean_delay_s: if self.total_delivered > 0 {
                self.delay_sum / self.total_delivered as f64
            } else {
                0.0
            },
            mean_sensor_consumption_j: if executed > 0 {
                self.total_sensor_energy / (executed as f64 * sensor_count)
            } else {
                0.0
            },
            mean_relay_consumption_j: if executed > 0 && !self.relay_ids.is_empty() {
                self.total_relay_energy / (executed as f64 * self.relay_ids.len() as f64)
            } else {
                0.0
            },
            relay_count: self.resolved_relays,
        };
        SimResult {
            config: self.cfg,
            rounds,
            summary,
            topology: self.topology,
            traces: self.traces,
        }
    }

    /// Positions along the routing chain from `source` to the BS, ignoring
    /// liveness: delivered packets already proved every hop fired.
    fn chain_positions(&self, table: &RoutingTable, source: NodeId) -> Vec<Point> {
        let mut pts = vec![self.nodes[source.0].pos];
        let mut cur = source;
        while let Some(next) = table.next_hop(cur) {
            pts.push(self.nodes[next.0].pos);
            if self.nodes[next.0].kind == NodeKind::BaseStation || pts.len() > self.nodes.len() {
                break;
            }
            cur = next;
        }
        pts
    }

    fn dropped(&mut self) -> bool {
        self.cfg.loss_probability > 0.0 && self.loss_rng.gen::<f64>() < self.cfg.loss_probability
    }

    fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.nodes[a.0].pos.distance(self.nodes[b.0].pos)
    }

    fn step_edctr(&mut self, round: u32) -> RoundOutcome {
        let relay_mode = self.relay_ids.iter().any(|r| self.nodes[r.0].alive);
        for ci in 0..self.clusters.len() {
            let alive = self.clusters[ci].has_alive_members(&self.nodes);
            let c = &mut self.clusters[ci];
            if (c.region == Region::Inner && relay_mode) || !alive {
                c.clear_head();
            } else if round == 1 {
                c.elect_initial_head(&self.nodes, round)
                    .expect("cluster has alive members");
            } else {
                c.rotate_head(&self.nodes, round)
                    .expect("cluster has alive members");
            }
        }
        let table = build_routes(&self.nodes, &self.clusters, &self.fp);
        let heads: Vec<NodeId> = self.clusters.iter().filter_map(|c| c.head).collect();

        let plans: Vec<ClusterPlan> = self
            .clusters
            .iter()
            .map(|c| ClusterPlan {
                region: c.region,
                head: c.head,
                members: c.alive_members(&self.nodes).map(|n| n.id).collect(),
            })
            .collect();

        let bits = self.cfg.packet.payload_bits;
        let rp = self.cfg.radio;
        let mut debits = Debits::default();
        let mut delivered: Vec<NodeId> = Vec::new();
        let mut lost: u32 = 0;
        let offered: u32 = plans.iter().map(|p| p.members.len() as u32).sum();
        let mut uploads: Vec<Vec<NodeId>> = vec![Vec::new(); plans.len()];
        let mut inbox: Vec<Vec<Shipment>> = Vec::with_capacity(self.nodes.len());
        inbox.resize_with(self.nodes.len(), Vec::new);

        // member uploads; inner members go straight to the BS in relay mode
        for (ci, plan) in plans.iter().enumerate() {
            match plan.head {
                None if relay_mode && plan.region == Region::Inner => {
                    for &m in &plan.members {
                        let cost = tx_energy(bits, self.distance(m, self.bs), &rp);
                        if !debit(&mut self.nodes, &self.node_region, m, cost, &mut debits)
                            || self.dropped()
                        {
                            lost += 1;
                        } else {
                            delivered.push(m);
                        }
                    }
                }
                None => {} // no alive members
                Some(h) => {
                    for &m in &plan.members {
                        if m == h {
                            continue; // the head's own packet joins at aggregation
                        }
                        let cost = tx_energy(bits, self.distance(m, h), &rp);
                        if !debit(&mut self.nodes, &self.node_region, m, cost, &mut debits)
                            || self.dropped()
                            || !self.nodes[h.0].alive
                            || !debit(
                                &mut self.nodes,
                                &self.node_region,
                                h,
                                rx_energy(bits, &rp),
                                &mut debits,
                            )
                        {
                            lost += 1;
                        } else {
                            uploads[ci].push(m);
                        }
                    }
                }
            }
        }

        // aggregate and forward, one tier at a time
        for region in [Region::Outer, Region::Middle, Region::Inner] {
            for (ci, plan) in plans.iter().enumerate() {
                if plan.region != region {
                    continue;
                }
                let Some(h) = plan.head else { continue };
                let transit = std::mem::take(&mut inbox[h.0]);
                let mut sources = std::mem::take(&mut uploads[ci]);
                let mut physical = sources.len() + transit.len();
                for sh in transit {
                    sources.extend(sh.sources);
                }
                // the head's own packet: it was alive at round start, or it
                // would not have been elected
                sources.push(h);
                physical += 1;
                if !self.nodes[h.0].alive {
                    lost += sources.len() as u32;
                    continue;
                }
                let agg = aggregate_energy(physical as u32, bits, &rp);
                if !debit(&mut self.nodes, &self.node_region, h, agg, &mut debits) {
                    lost += sources.len() as u32;
                    continue;
                }
                match table.next_hop(h) {
                    None => lost += sources.len() as u32, // no alive forwarder tier
                    Some(t) => {
                        let cost = tx_energy(bits, self.distance(h, t), &rp);
                        if !debit(&mut self.nodes, &self.node_region, h, cost, &mut debits)
                            || self.dropped()
                        {
                            lost += sources.len() as u32;
                        } else if t == self.bs {
                            delivered.extend(sources);
                        } else if !self.nodes[t.0].alive
                            || !debit(
                                &mut self.nodes,
                                &self.node_region,
                                t,
                                rx_energy(bits, &rp),
                                &mut debits,
                            )
                        {
                            lost += sources.len() as u32;
                        } else {
                            inbox[t.0].push(Shipment { sources });
                        }
                    }
                }
            }
            if region == Region::Inner {
                // relays drain their inboxes to the BS, forwarding unchanged
                for r in self.relay_ids.clone() {
                    for sh in std::mem::take(&mut inbox[r.0]) {
                        let cost = tx_energy(bits, self.distance(r, self.bs), &rp);
                        if !self.nodes[r.0].alive
                            || !debit(&mut self.nodes, &self.node_region, r, cost, &mut debits)
                            || self.dropped()
                        {
                            lost += sh.sources.len() as u32;
                        } else {
                            delivered.extend(sh.sources);
                        }
                    }
                }
            }
        }

        RoundOutcome {
            offered,
            delivered,
            lost,
            debits,
            table,
            heads,
        }
    }

    fn step_leach(&mut self, round: u32, centralized: bool) -> RoundOutcome {
        let alive: Vec<NodeId> = self.alive_sensors().map(|n| n.id).collect();
        let heads: Vec<NodeId> = if centralized {
            let k = ((self.cfg.leach_p * alive.len() as f64).round() as usize)
                .max(1)
                .min(alive.len());
            let mut ranked = alive.clone();
            ranked.sort_by(|a, b| {
                let (ea, eb) = (self.nodes[a.0].energy, self.nodes[b.0].energy);
                eb.partial_cmp(&ea).unwrap().then(a.cmp(b))
            });
            let mut top: Vec<NodeId> = ranked.into_iter().take(k).collect();
            top.sort();
            top
        } else {
            let cycle = (1.0 / self.cfg.leach_p).ceil() as u32;
            let pos = (round - 1) % cycle;
            if pos == 0 {
                self.leach_eligible.iter_mut().for_each(|e| *e = true);
            }
            let threshold = self.cfg.leach_p / (1.0 - self.cfg.leach_p * pos as f64);
            let mut heads = Vec::new();
            for &id in &alive {
                if !self.leach_eligible[id.0] {
                    continue;
                }
                // no energy filter: depleted-but-alive nodes may still win
                if self.protocol_rng.gen::<f64>() < threshold {
                    self.leach_eligible[id.0] = false;
                    heads.push(id);
                }
            }
            heads
        };

        let table = build_routes_leach(&self.nodes, &heads, self.bs);
        let bits = self.cfg.packet.payload_bits;
        let rp = self.cfg.radio;
        let mut debits = Debits::default();
        let mut delivered: Vec<NodeId> = Vec::new();
        let mut lost: u32 = 0;
        let offered = alive.len() as u32;
        let mut aboard: Vec<Vec<NodeId>> = vec![Vec::new(); heads.len()];

        for &m in &alive {
            if heads.contains(&m) {
                continue;
            }
            let target = table.next_hop(m).expect("alive sensors are routed");
            let cost = tx_energy(bits, self.distance(m, target), &rp);
            if target == self.bs {
                // no heads this round: transmit direct
                if !debit(&mut self.nodes, &self.node_region, m, cost, &mut debits)
                    || self.dropped()
                {
                    lost += 1;
                } else {
                    delivered.push(m);
                }
                continue;
            }
            if !debit(&mut self.nodes, &self.node_region, m, cost, &mut debits)
                || self.dropped()
                || !self.nodes[target.0].alive
                || !debit(
                    &mut self.nodes,
                    &self.node_region,
                    target,
                    rx_energy(bits, &rp),
                    &mut debits,
                )
            {
                lost += 1;
            } else {
                let slot = heads.iter().position(|h| *h == target).unwrap();
                aboard[slot].push(m);
            }
        }

        for (slot, &h) in heads.iter().enumerate() {
            let mut sources = std::mem::take(&mut aboard[slot]);
            let mut physical = sources.len();
            if self.nodes[h.0].alive {
                sources.push(h);
                physical += 1;
            } else {
                sources.push(h); // its own packet dies with it
                lost += sources.len() as u32;
                continue;
            }
            let agg = aggregate_energy(physical as u32, bits, &rp);
            let cost = tx_energy(bits, self.distance(h, self.bs), &rp);
            if !debit(&mut self.nodes, &self.node_region, h, agg, &mut debits)
                || !debit(&mut self.nodes, &self.node_region, h, cost, &mut debits)
                || self.dropped()
            {
                lost += sources.len() as u32;
            } else {
                delivered.extend(sources);
            }
        }

        RoundOutcome {
            offered,
            delivered,
            lost,
            debits,
            table,
            heads,
        }
    }
}

pub fn run_simulation(cfg: SimConfig) -> Result<SimResult> {
    Ok(Simulation::new(cfg)?.run())
}
