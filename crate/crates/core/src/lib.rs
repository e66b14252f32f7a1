//! Deterministic round-based simulator for a wireless sensor network that
//! partitions its field into concentric squares, clusters each segment
//! statically, and offloads inner-region traffic to dedicated relay nodes —
//! with LEACH and LEACH-C baselines under the same radio energy model.

pub mod cluster;
pub mod deploy;
pub mod energy;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod node;
pub mod plan;
pub mod report;
pub mod routing;

pub use cluster::{form_static_clusters, Cluster};
pub use deploy::{
    deploy_nodes, place_relays, relay_count, relay_proportion, RelayProportionInputs, ZeroTerm,
};
pub use energy::{aggregate_energy, rx_energy, tx_energy, PacketSpec, RadioParams};
pub use engine::{
    compute_delay, run_simulation, DelayParams, Protocol, RelayCount, SimConfig, SimResult,
    Simulation,
};
pub use error::{Result, SimError};
pub use geometry::{
    internal_square_corners, nth_square_corners, FieldPartition, Point, Region, Segment,
    SquareCorners,
};
pub use metrics::{RoundMetrics, SummaryStats};
pub use node::{Node, NodeId, NodeKind};
pub use plan::{Cell, ExperimentPlan};
pub use report::{emit_figure_series, run_plan, PlanOutput, FIGURE_IDS};
pub use routing::{build_routes, build_routes_leach, route_hops, RoutePath, RoutingTable};
