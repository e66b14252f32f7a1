//! Static clusters: one per segment, fixed membership, rotating head.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{FieldPartition, Point, Region};
use crate::node::{Node, NodeId, NodeKind};

/// A cluster is pinned to its segment for the whole simulation; only the head
/// rotates. `head_history` records every election as (round, head id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub segment_index: usize,
    pub region: Region,
    pub midpoint: Point,
    pub members: Vec<NodeId>,
    pub head: Option<NodeId>,
    pub head_history: Vec<(u32, NodeId)>,
}

impl Cluster {
    /// `nodes` is the engine's full node slice, indexed by id.
    pub fn alive_members<'a>(&'a self, nodes: &'a [Node]) -> impl Iterator<Item = &'a Node> + 'a {
        self.members
            .iter()
            .map(|id| &nodes[id.0])
            .filter(|n| n.alive)
    }

    pub fn has_alive_members(&self, nodes: &[Node]) -> bool {
        self.alive_members(nodes).next().is_some()
    }

    /// First-round election: the alive member closest to the segment midpoint
    /// (ties broken by lowest id).
    pub fn elect_initial_head(&mut self, nodes: &[Node], round: u32) -> Result<NodeId> {
        let head = self
            .alive_members(nodes)
            .map(|n| (n.pos.distance(self.midpoint), n.id))
            .min_by(|a, b| a.partial_cmp(b).expect("finite distances"))
            .map(|(_, id)| id)
            .ok_or(SimError::DeadCluster {
                segment: self.segment_index,
            })?;
        self.set_head(head, round);
        Ok(head)
    }

    /// Rotation election: the alive member with the most residual energy
    /// (ties broken by lowest id).
    pub fn rotate_head(&mut self, nodes: &[Node], round: u32) -> Result<NodeId> {
        let mut best: Option<(f64, NodeId)> = None;
        for n in self.alive_members(nodes) {
            let better = match best {
                None => true,
                Some((e, id)) => n.energy > e || (n.energy == e && n.id < id),
            };
            if better {
                best = Some((n.energy, n.id));
            }
        }
        let head = best.map(|(_, id)| id).ok_or(SimError::DeadCluster {
            segment: self.segment_index,
        })?;
        self.set_head(head, round);
        Ok(head)
    }

    fn set_head(&mut self, head: NodeId, round: u32) {
        self.head = Some(head);
        self.head_history.push((round, head));
    }

    pub fn clear_head(&mut self) {
        self.head = None;
    }
}

/// Group every sensor node into the cluster of its segment. Errors if any
/// segment ended up without sensors.
pub fn form_static_clusters(nodes: &[Node], fp: &FieldPartition) -> Result<Vec<Cluster>> {
    let mut clusters: Vec<Cluster> = fp
        .segments
        .iter()
        .map(|s| Cluster {
            segment_index: s.index,
            region: s.region,
            midpoint: s.midpoint,
            members: Vec::new(),
            head: None,
            head_history: Vec::new(),
        })
        .collect();
    for n in nodes.iter().filter(|n| n.kind == NodeKind::Sensor) {
        let seg = fp.segment_of(n.pos)?;
        clusters[seg.index].members.push(n.id);
    }
    for c in &mut clusters {
        if c.members.is_empty() {
            return Err(SimError::UnderPopulated {
                segment: c.segment_index,
                node_count: nodes.len(),
                segments: fp.segments.len(),
            });
        }
        c.members.sort();
    }
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::deploy_nodes;

    fn cluster_with(nodes: &[Node], midpoint: Point) -> Cluster {
        Cluster {
            segment_index: 0,
            region: Region::Inner,
            midpoint,
            members: nodes.iter().map(|n| n.id).collect(),
            head: None,
            head_history: Vec::new(),
        }
    }

    #[test]
    fn clusters_partition_the_sensors() {
        let fp = FieldPartition::new(100.0).unwrap();
        let nodes = deploy_nodes(41, &fp, 5, 0.5).unwrap();
        let clusters = form_static_clusters(&nodes, &fp).unwrap();
        assert_eq!(clusters.len(), 9);
        let mut seen = [0u8; 41];
        for c in &clusters {
            assert!(!c.members.is_empty());
            for m in &c.members {
                seen[m.0] += 1;
                assert_eq!(
                    fp.segment_of(nodes[m.0].pos).unwrap().index,
                    c.segment_index
                );
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn initial_election_takes_the_member_nearest_the_midpoint() {
        let mid = Point::new(50.0, 50.0);
        let nodes = vec![
            Node::sensor(NodeId(0), Point::new(50.0, 59.0), 0.5),
            Node::sensor(NodeId(1), Point::new(50.0, 51.0), 0.5),
            Node::sensor(NodeId(2), Point::new(55.0, 50.0), 0.5),
        ];
        let mut c = cluster_with(&nodes, mid);
        assert_eq!(c.elect_initial_head(&nodes, 1).unwrap(), NodeId(1));
        assert_eq!(c.head, Some(NodeId(1)));
        assert_eq!(c.head_history, vec![(1, NodeId(1))]);
    }

    #[test]
    fn initial_election_ties_break_to_the_lowest_id() {
        let mid = Point::new(50.0, 50.0);
        let nodes = vec![
            Node::sensor(NodeId(0), Point::new(48.0, 50.0), 0.5),
            Node::sensor(NodeId(1), Point::new(52.0, 50.0), 0.5),
        ];
        let mut c = cluster_with(&nodes, mid);
        assert_eq!(c.elect_initial_head(&nodes, 1).unwrap(), NodeId(0));
    }

    // ids must index the node slice, as everywhere in the crate
    fn dense_nodes(count: usize) -> Vec<Node> {
        (0..count)
            .map(|i| Node::sensor(NodeId(i), Point::new(i as f64, 0.0), 0.5))
            .collect()
    }

    #[test]
    fn single_member_cluster_elects_that_member() {
        let nodes = dense_nodes(4);
        let mut c = cluster_with(&nodes, Point::new(50.0, 50.0));
        c.members = vec![NodeId(3)];
        assert_eq!(c.elect_initial_head(&nodes, 1).unwrap(), NodeId(3));
    }

    #[test]
    fn rotation_takes_max_energy_with_lowest_id_ties() {
        let mut nodes = dense_nodes(10);
        nodes[7].energy = 0.4;
        let mut c = cluster_with(&nodes, Point::new(0.0, 0.0));
        c.members = vec![NodeId(3), NodeId(7), NodeId(9)];
        assert_eq!(c.rotate_head(&nodes, 2).unwrap(), NodeId(3));
        // all equal energies: lowest id wins
        for n in nodes.iter_mut() {
            n.energy = 0.5;
        }
        assert_eq!(c.rotate_head(&nodes, 3).unwrap(), NodeId(3));
        assert_eq!(c.head_history, vec![(2, NodeId(3)), (3, NodeId(3))]);
    }

    #[test]
    fn rotation_skips_dead_members() {
        let mut nodes = vec![
            Node::sensor(NodeId(0), Point::new(0.0, 0.0), 0.5),
            Node::sensor(NodeId(1), Point::new(1.0, 0.0), 0.3),
        ];
        nodes[0].consume(1.0); // dead, though it held the most energy
        let mut c = cluster_with(&nodes, Point::new(0.0, 0.0));
        assert_eq!(c.rotate_head(&nodes, 5).unwrap(), NodeId(1));
    }

    #[test]
    fn elections_on_a_dead_cluster_are_errors() {
        let mut nodes = vec![Node::sensor(NodeId(0), Point::new(0.0, 0.0), 0.5)];
        nodes[0].consume(1.0);
        let mut c = cluster_with(&nodes, Point::new(0.0, 0.0));
        assert!(matches!(
            c.elect_initial_head(&nodes, 1),
            Err(SimError::DeadCluster { .. })
        ));
        assert!(matches!(
            c.rotate_head(&nodes, 2),
            Err(SimError::DeadCluster { .. })
        ));
    }

    #[test]
    fn election_matches_brute_force_over_random_clusters() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let count = rng.gen_range(1..12);
            let mid = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let nodes: Vec<Node> = (0..count)
                .map(|i| {
                    let mut n = Node::sensor(
                        NodeId(i),
                        Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)),
                        0.5,
                    );
                    n.energy = rng.gen_range(0.0..0.5);
                    n.alive = n.energy > 0.0;
                    n
                })
                .collect();
            if !nodes.iter().any(|n| n.alive) {
                continue;
            }
            let mut c = cluster_with(&nodes, mid);
            // brute force: scan all alive members
            let expect_initial = nodes
                .iter()
                .filter(|n| n.alive)
                .min_by(|a, b| {
                    (a.pos.distance(mid), a.id)
                        .partial_cmp(&(b.pos.distance(mid), b.id))
                        .unwrap()
                })
                .unwrap()
                .id;
            let expect_rotate = nodes
                .iter()
                .filter(|n| n.alive)
                .max_by(|a, b| {
                    (a.energy, std::cmp::Reverse(a.id))
                        .partial_cmp(&(b.energy, std::cmp::Reverse(b.id)))
                        .unwrap()
                })
                .unwrap()
                .id;
            assert_eq!(c.elect_initial_head(&nodes, 1).unwrap(), expect_initial);
            assert_eq!(c.rotate_head(&nodes, 2).unwrap(), expect_rotate);
        }
    }
}
