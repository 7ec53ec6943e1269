//! Multi-domain virtual network embedding.
//!
//! The crate provides the substrate/request model with an exact resource
//! ledger, seeded topology and workload generators, load-balanced
//! constrained shortest paths, a hybrid genetic algorithm for node mapping
//! (adaptive crossover probability and pheromone-guided mutation), link
//! mapping, a traditional GA baseline, and a discrete-event simulator that
//! reports the usual embedding metrics.

pub mod baseline;
pub mod lbhga;
pub mod linkmap;
pub mod model;
pub mod pathing;
pub mod sim;
pub mod topology;

pub use baseline::{tga_run, TgaParams};
pub use lbhga::{run as lbhga_run, GaOutcome, Individual, LbhgaError, LbhgaParams, PheromoneTable};
pub use linkmap::{map_links, LinkMapFailure};
pub use model::{
    objective_value, DomainId, EmbeddingPlan, LinkId, ModelError, NodeId, SubstrateLink,
    SubstrateNetwork, SubstrateNode, VirtualLink, VirtualNetworkRequest, VnrId,
};
pub use pathing::{all_pairs_estimate, compute_weights, shortest_path, DistanceMatrix, WeightView};
pub use sim::{run_simulation, simulate, Algorithm, AlgorithmParams, MetricsRecord, SimEvent, SimulationOutput};
pub use topology::{generate_substrate, generate_vnr_stream, ConfigError, SubstrateConfig, VnrStreamConfig};
