//! Per-round route tables. EDCTR routes run inner-ward (outer CH -> middle
//! CH -> inner relay or inner CH -> BS); the baselines route members to their
//! CH and CHs straight to the BS.

use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::geometry::{FieldPartition, Region};
use crate::node::{Node, NodeId, NodeKind};

/// Next-hop table for one round, indexed by node id. `hop_counts` holds the
/// hop distance to the base station for every node with a complete route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub next_hop: Vec<Option<NodeId>>,
    pub hop_counts: Vec<Option<u32>>,
}

impl RoutingTable {
    fn new(n: usize) -> Self {
        RoutingTable {
            next_hop: vec![None; n],
            hop_counts: vec![None; n],
        }
    }

    pub fn next_hop(&self, id: NodeId) -> Option<NodeId> {
        self.next_hop[id.0]
    }

    pub fn hop_count(&self, id: NodeId) -> Option<u32> {
        self.hop_counts[id.0]
    }

    fn fill_hop_counts(&mut self, bs: NodeId) {
        let n = self.next_hop.len();
        for start in 0..n {
            let mut cur = NodeId(start);
            let mut hops = 0u32;
            while cur != bs {
                match self.next_hop[cur.0] {
                    Some(next) => {
                        hops += 1;
                        cur = next;
                    }
                    None => break,
                }
                if hops as usize > n {
                    break; // cycle guard; EDCTR route forests cannot cycle
                }
            }
            if cur == bs {
                self.hop_counts[start] = Some(hops);
            }
        }
    }
}

/// A route walk from one source. `complete` is false when the chain broke at
/// a missing next hop or a dead forwarder; the nodes walked so far are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePath {
    pub nodes: Vec<NodeId>,
    pub complete: bool,
}

fn nearest<'a>(from: &Node, candidates: impl Iterator<Item = &'a Node>) -> Option<NodeId> {
    candidates
        .map(|n| (from.pos.distance(n.pos), n.id))
        .min_by(|a, b| a.partial_cmp(b).expect("finite distances"))
        .map(|(_, id)| id)
}

/// Build the EDCTR route table. Members point at their head; outer heads at
/// the nearest alive middle head; middle heads at the nearest alive relay,
/// falling back to the inner head, or straight to the BS when the inner
/// region holds nothing alive. Whenever any relay is alive the inner cluster
/// has no head and inner members transmit directly to the BS. A tier with no
/// alive forwarder leaves the corresponding next hops empty; the engine
/// counts that traffic as lost rather than failing.
pub fn build_routes(nodes: &[Node], clusters: &[Cluster], _fp: &FieldPartition) -> RoutingTable {
    let mut table = RoutingTable::new(nodes.len());
    let bs = nodes
        .iter()
        .find(|n| n.kind == NodeKind::BaseStation)
        .expect("one base station")
        .id;
    let alive_relays: Vec<&Node> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Relay && n.alive)
        .collect();
    let relay_mode = !alive_relays.is_empty();

    let head_of = |c: &Cluster| c.head.filter(|h| nodes[h.0].alive);
    let heads_in = |region: Region| -> Vec<NodeId> {
        clusters
            .iter()
            .filter(|c| c.region == region)
            .filter_map(head_of)
            .collect()
    };
    let inner_head = clusters
        .iter()
        .find(|c| c.region == Region::Inner)
        .and_then(head_of);
    let middle_heads = heads_in(Region::Middle);

    for c in clusters {
        match (c.region, relay_mode) {
            (Region::Inner, true) => {
                for m in c.alive_members(nodes) {
                    table.next_hop[m.id.0] = Some(bs);
                }
            }
            _ => {
                if let Some(h) = head_of(c) {
                    for m in c.alive_members(nodes) {
                        if m.id != h {
                            table.next_hop[m.id.0] = Some(h);
                        }
                    }
                }
            }
        }
    }

    // heads route inner-ward, one tier at a time
    for c in clusters {
        let Some(h) = head_of(c) else { continue };
        let hop = match c.region {
            Region::Outer => nearest(&nodes[h.0], middle_heads.iter().map(|id| &nodes[id.0])),
            Region::Middle => {
                if relay_mode {
                    nearest(&nodes[h.0], alive_relays.iter().copied())
                } else if let Some(ih) = inner_head {
                    Some(ih)
                } else {
                    Some(bs) // inner region empty: deliver directly
                }
            }
            Region::Inner => Some(bs),
        };
        table.next_hop[h.0] = hop;
    }
    for r in &alive_relays {
        table.next_hop[r.id.0] = Some(bs);
    }
    table.fill_hop_counts(bs);
    table
}

/// Build the baseline route table: members to the nearest alive head (lowest
/// id on ties), heads to the BS. With no heads this round every alive sensor
/// transmits directly to the BS.
pub fn build_routes_leach(nodes: &[Node], heads: &[NodeId], bs: NodeId) -> RoutingTable {
    let mut table = RoutingTable::new(nodes.len());
    for n in nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Sensor && n.alive)
    {
        if heads.contains(&n.id) {
            table.next_hop[n.id.0] = Some(bs);
        } else {
            let target = nearest(n, heads.iter().map(|id| &nodes[id.0]));
            table.next_hop[n.id.0] = Some(target.unwrap_or(bs));
        }
    }
    table.fill_hop_counts(bs);
    table
}

/// Walk the table from `source` to the base station.
pub fn route_hops(table: &RoutingTable, source: NodeId, nodes: &[Node]) -> RoutePath {
    let mut path = vec![source];
    let mut cur = source;
    loop {
        match table.next_hop(cur) {
            None => {
                return RoutePath {
                    nodes: path,
                    complete: false,
                }
            }
            Some(next) => {
                let n = &nodes[next.0];
                if n.kind == NodeKind::BaseStation {
                    path.push(next);
                    return RoutePath {
                        nodes: path,
                        complete: true,
                    };
                }
                if !n.alive || path.len() > nodes.len() {
                    return RoutePath {
                        nodes: path,
                        complete: false,
                    };
                }
                path.push(next);
                cur = next;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::form_static_clusters;
    use crate::deploy::{deploy_nodes, place_relays};
    use crate::geometry::FieldPartition;

    fn setup(relays: usize) -> (FieldPartition, Vec<Node>, Vec<Cluster>) {
        let fp = FieldPartition::new(100.0).unwrap();
        let mut nodes = deploy_nodes(41, &fp, 2, 0.5).unwrap();
        nodes.extend(place_relays(relays, &fp, 2, 42, 2.0));
        let mut clusters = form_static_clusters(&nodes, &fp).unwrap();
        for c in clusters.iter_mut() {
            if relays > 0 && c.region == Region::Inner {
                continue; // relay mode: no inner head
            }
            c.elect_initial_head(&nodes, 1).unwrap();
        }
        (fp, nodes, clusters)
    }

    fn region_rank(fp: &FieldPartition, nodes: &[Node], id: NodeId) -> u8 {
        match nodes[id.0].kind {
            NodeKind::BaseStation => 0,
            _ => fp.classify(nodes[id.0].pos).unwrap().rank(),
        }
    }

    #[test]
    fn members_point_at_their_head_and_heads_run_inner_ward() {
        let (fp, nodes, clusters) = setup(0);
        let table = build_routes(&nodes, &clusters, &fp);
        let bs = NodeId(41);
        for c in &clusters {
            let h = c.head.unwrap();
            for m in &c.members {
                if *m != h {
                    assert_eq!(table.next_hop(*m), Some(h));
                }
            }
        }
        // outer heads -> nearest middle head, verified brute force
        let middle_heads: Vec<NodeId> = clusters
            .iter()
            .filter(|c| c.region == Region::Middle)
            .map(|c| c.head.unwrap())
            .collect();
        for c in clusters.iter().filter(|c| c.region == Region::Outer) {
            let h = c.head.unwrap();
            let got = table.next_hop(h).unwrap();
            let want = middle_heads
                .iter()
                .min_by(|a, b| {
                    (nodes[h.0].pos.distance(nodes[a.0].pos), **a)
                        .partial_cmp(&(nodes[h.0].pos.distance(nodes[b.0].pos), **b))
                        .unwrap()
                })
                .copied()
                .unwrap();
            assert_eq!(got, want);
        }
        // without relays, middle heads route via the inner head and it exits to BS
        let inner_head = clusters[0].head.unwrap();
        for c in clusters.iter().filter(|c| c.region == Region::Middle) {
            assert_eq!(table.next_hop(c.head.unwrap()), Some(inner_head));
        }
        assert_eq!(table.next_hop(inner_head), Some(bs));
    }

    #[test]
    fn alive_relays_absorb_middle_traffic_and_free_the_inner_cluster() {
        let (fp, nodes, clusters) = setup(4);
        let table = build_routes(&nodes, &clusters, &fp);
        let bs = NodeId(41);
        assert_eq!(clusters[0].head, None);
        for m in &clusters[0].members {
            assert_eq!(table.next_hop(*m), Some(bs), "inner member {m} goes direct");
            assert_eq!(table.hop_count(*m), Some(1));
        }
        for c in clusters.iter().filter(|c| c.region == Region::Middle) {
            let hop = table.next_hop(c.head.unwrap()).unwrap();
            assert_eq!(nodes[hop.0].kind, NodeKind::Relay);
        }
        for r in 42..46 {
            assert_eq!(table.next_hop(NodeId(r)), Some(bs));
            assert_eq!(table.hop_count(NodeId(r)), Some(1));
        }
    }

    #[test]
    fn routes_are_acyclic_and_strictly_inner_ward() {
        for relays in [0, 2, 4] {
            let (fp, nodes, clusters) = setup(relays);
            let table = build_routes(&nodes, &clusters, &fp);
            for n in nodes.iter().filter(|n| n.kind != NodeKind::BaseStation) {
                let path = route_hops(&table, n.id, &nodes);
                assert!(path.complete, "node {} should reach the BS", n.id);
                assert!(path.nodes.len() <= 5, "at most 4 hops");
                let ranks: Vec<u8> = path
                    .nodes
                    .iter()
                    .map(|id| region_rank(&fp, &nodes, *id))
                    .collect();
                // the member->head hop stays in-region; every later hop must
                // move strictly inner-ward
                for (i, w) in ranks.windows(2).enumerate() {
                    if i == 0 {
                        assert!(w[1] <= w[0], "rank must not increase: {ranks:?}");
                    } else {
                        assert!(w[1] < w[0], "rank must strictly decrease: {ranks:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hop_counts_match_walked_paths() {
        let (fp, nodes, clusters) = setup(4);
        let table = build_routes(&nodes, &clusters, &fp);
        for n in nodes.iter().filter(|n| n.kind != NodeKind::BaseStation) {
            let path = route_hops(&table, n.id, &nodes);
            assert_eq!(table.hop_count(n.id), Some((path.nodes.len() - 1) as u32));
        }
    }

    #[test]
    fn a_dead_forwarder_truncates_the_walk() {
        let (fp, mut nodes, clusters) = setup(0);
        let table = build_routes(&nodes, &clusters, &fp);
        let inner_head = clusters[0].head.unwrap();
        nodes[inner_head.0].consume(1.0);
        let middle_head = clusters[1].head.unwrap();
        let path = route_hops(&table, middle_head, &nodes);
        assert!(!path.complete);
        assert_eq!(path.nodes.last(), Some(&middle_head));
    }

    #[test]
    fn a_tier_without_forwarders_leaves_no_next_hop() {
        let (fp, mut nodes, mut clusters) = setup(0);
        // kill every middle sensor; outer heads then have no target
        for c in clusters.iter().filter(|c| c.region == Region::Middle) {
            for m in &c.members {
                nodes[m.0].consume(1.0);
            }
        }
        for c in clusters.iter_mut() {
            if c.has_alive_members(&nodes) {
                c.rotate_head(&nodes, 2).unwrap();
            } else {
                c.clear_head();
            }
        }
        let table = build_routes(&nodes, &clusters, &fp);
        for c in clusters.iter().filter(|c| c.region == Region::Outer) {
            assert_eq!(table.next_hop(c.head.unwrap()), None);
            assert!(!route_hops(&table, c.head.unwrap(), &nodes).complete);
        }
    }

    #[test]
    fn empty_inner_region_sends_middle_heads_direct_to_bs() {
        let (fp, mut nodes, mut clusters) = setup(0);
        for m in clusters[0].members.clone() {
            nodes[m.0].consume(1.0);
        }
        for c in clusters.iter_mut() {
            if c.has_alive_members(&nodes) {
                c.rotate_head(&nodes, 2).unwrap();
            } else {
                c.clear_head();
            }
        }
        let table = build_routes(&nodes, &clusters, &fp);
        for c in clusters.iter().filter(|c| c.region == Region::Middle) {
            assert_eq!(table.next_hop(c.head.unwrap()), Some(NodeId(41)));
        }
    }

    #[test]
    fn leach_members_join_the_nearest_head() {
        let fp = FieldPartition::new(100.0).unwrap();
        let nodes = deploy_nodes(41, &fp, 9, 0.5).unwrap();
        let bs = NodeId(41);
        let heads = vec![NodeId(3), NodeId(20)];
        let table = build_routes_leach(&nodes, &heads, bs);
        for h in &heads {
            assert_eq!(table.next_hop(*h), Some(bs));
            assert_eq!(table.hop_count(*h), Some(1));
        }
        for n in nodes.iter().filter(|n| n.kind == NodeKind::Sensor) {
            if heads.contains(&n.id) {
                continue;
            }
            let got = table.next_hop(n.id).unwrap();
            let d3 = n.pos.distance(nodes[3].pos);
            let d20 = n.pos.distance(nodes[20].pos);
            let want = if d3 <= d20 { NodeId(3) } else { NodeId(20) };
            assert_eq!(got, want);
            assert_eq!(table.hop_count(n.id), Some(2));
        }
        // no heads at all: everyone goes direct
        let direct = build_routes_leach(&nodes, &[], bs);
        for n in nodes.iter().filter(|n| n.kind == NodeKind::Sensor) {
            assert_eq!(direct.next_hop(n.id), Some(bs));
        }
    }
}
