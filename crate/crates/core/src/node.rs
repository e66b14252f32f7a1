//! Nodes: sensors, relays, and the base station.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Sensor,
    Relay,
    BaseStation,
}

/// A network node. For sensors and relays `alive == energy > 0`; the base
/// station is never debited and never dies (its energy fields stay zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub pos: Point,
    pub kind: NodeKind,
    pub energy: f64,
    pub initial_energy: f64,
    pub alive: bool,
}

impl Node {
    pub fn sensor(id: NodeId, pos: Point, energy: f64) -> Self {
        Node {
            id,
            pos,
            kind: NodeKind::Sensor,
            energy,
            initial_energy: energy,
            alive: energy > 0.0,
        }
    }

    pub fn relay(id: NodeId, pos: Point, energy: f64) -> Self {
        Node {
            kind: NodeKind::Relay,
            ..Node::sensor(id, pos, energy)
        }
    }

    pub fn base_station(id: NodeId, pos: Point) -> Self {
        Node {
            id,
            pos,
            kind: NodeKind::BaseStation,
            energy: 0.0,
            initial_energy: 0.0,
            alive: true,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    /// Debit `amount` joules, flooring at zero. Returns the energy actually
    /// drained. Dead nodes and the base station are not debited.
    pub fn consume(&mut self, amount: f64) -> f64 {
        if self.kind == NodeKind::BaseStation || !self.alive {
            return 0.0;
        }
        let drained = amount.min(self.energy);
        self.energy -= drained;
        if self.energy <= 0.0 {
            self.energy = 0.0;
            self.alive = false;
        }
        drained
    }

    /// Debit like `consume`, reporting whether the node could afford the full
    /// amount. An action whose cost exceeds the remaining energy fails and
    /// kills the node.
    pub fn try_spend(&mut self, amount: f64) -> (bool, f64) {
        if self.kind == NodeKind::BaseStation {
            return (true, 0.0);
        }
        if !self.alive {
            return (false, 0.0);
        }
        let afforded = self.energy >= amount;
        let drained = self.consume(amount);
        (afforded, drained)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consume_floors_at_zero_and_kills() {
        let mut n = Node::sensor(NodeId(0), Point::new(0.0, 0.0), 0.5);
        assert_eq!(n.consume(0.2), 0.2);
        assert!(n.alive);
        // over-draw drains only what is left
        assert_eq!(n.consume(1.0), 0.3);
        assert_eq!(n.energy, 0.0);
        assert!(!n.alive);
        // dead node is a no-op
        assert_eq!(n.consume(0.1), 0.0);
        assert_eq!(n.energy, 0.0);
    }

    #[test]
    fn exact_depletion_kills_but_the_action_succeeds() {
        let mut n = Node::sensor(NodeId(1), Point::new(0.0, 0.0), 0.25);
        let (ok, drained) = n.try_spend(0.25);
        assert!(ok);
        assert_eq!(drained, 0.25);
        assert!(!n.alive);
        let (ok, drained) = n.try_spend(0.01);
        assert!(!ok);
        assert_eq!(drained, 0.0);
    }

    #[test]
    fn base_station_is_never_debited() {
        let mut bs = Node::base_station(NodeId(9), Point::new(50.0, 50.0));
        assert_eq!(bs.consume(5.0), 0.0);
        let (ok, drained) = bs.try_spend(5.0);
        assert!(ok);
        assert_eq!(drained, 0.0);
        assert!(bs.alive);
    }
}
