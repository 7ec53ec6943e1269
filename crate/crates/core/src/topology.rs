//! Seeded generation of multi-domain substrates and Poisson request streams.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    DomainId, LinkSpec, NodeId, NodeSpec, SubstrateNetwork, VirtualLink, VirtualNetworkRequest,
    VnrId,
};

const TOPOLOGY_STREAM: u64 = 1;
const WORKLOAD_STREAM: u64 = 2;

/// Independent RNG stream `stream` derived from a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid configuration `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { key: key.into(), reason: reason.into() }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: u64,
    pub max: u64,
}

impl Range {
    pub const fn new(min: u64, max: u64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: u64) -> bool {
        self.min <= v && v <= self.max
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(self.min..=self.max)
    }

    fn check(&self, key: &str, at_least: u64) -> Result<(), ConfigError> {
        if self.min > self.max {
            return Err(ConfigError::new(key, "empty range"));
        }
        if self.min < at_least {
            return Err(ConfigError::new(key, format!("minimum must be at least {at_least}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubstrateConfig {
    pub domain_count: u32,
    pub nodes_per_domain: u32,
    pub intra_edge_prob: f64,
    pub inter_links_per_domain_pair: u32,
    pub cpu_range: Range,
    pub intra_bw_range: Range,
    pub inter_bw_range: Range,
    pub price_range: Range,
}

impl Default for SubstrateConfig {
    fn default() -> Self {
        Self {
            domain_count: 4,
            nodes_per_domain: 30,
            intra_edge_prob: 0.5,
            inter_links_per_domain_pair: 3,
            cpu_range: Range::new(100, 300),
            intra_bw_range: Range::new(1000, 3000),
            inter_bw_range: Range::new(3000, 6000),
            price_range: Range::new(1, 10),
        }
    }
}

impl SubstrateConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.domain_count == 0 {
            return Err(ConfigError::new("substrate.domain_count", "must be positive"));
        }
        if self.nodes_per_domain == 0 {
            return Err(ConfigError::new("substrate.nodes_per_domain", "must be positive"));
        }
        if !(self.intra_edge_prob > 0.0 && self.intra_edge_prob <= 1.0) {
            return Err(ConfigError::new("substrate.intra_edge_prob", "must lie in (0, 1]"));
        }
        if self.domain_count > 1 && self.inter_links_per_domain_pair == 0 {
            return Err(ConfigError::new(
                "substrate.inter_links_per_domain_pair",
                "must be positive when there are several domains",
            ));
        }
        self.cpu_range.check("substrate.cpu_range", 0)?;
        self.intra_bw_range.check("substrate.intra_bw_range", 0)?;
        self.inter_bw_range.check("substrate.inter_bw_range", 0)?;
        self.price_range.check("substrate.price_range", 1)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VnrStreamConfig {
    pub mean_arrivals_per_100_units: f64,
    pub vnr_node_range: Range,
    pub cpu_demand_range: Range,
    pub bw_demand_range: Range,
    pub lifetime: f64,
    pub horizon: f64,
}

impl Default for VnrStreamConfig {
    fn default() -> Self {
        Self {
            mean_arrivals_per_100_units: 10.0,
            vnr_node_range: Range::new(5, 10),
            cpu_demand_range: Range::new(1, 10),
            bw_demand_range: Range::new(1, 10),
            lifetime: 1000.0,
            horizon: 2200.0,
        }
    }
}

impl VnrStreamConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.mean_arrivals_per_100_units > 0.0 && self.mean_arrivals_per_100_units.is_finite())
        {
            return Err(ConfigError::new("stream.mean_arrivals_per_100_units", "must be positive"));
        }
        self.vnr_node_range.check("stream.vnr_node_range", 2)?;
        self.cpu_demand_range.check("stream.cpu_demand_range", 1)?;
        self.bw_demand_range.check("stream.bw_demand_range", 1)?;
        if !(self.lifetime > 0.0 && self.lifetime.is_finite()) {
            return Err(ConfigError::new("stream.lifetime", "must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(ConfigError::new("stream.horizon", "must be non-negative"));
        }
        Ok(())
    }
}

/// Builds a connected multi-domain substrate.
///
/// Each domain is an Erdős–Rényi graph repaired with a random spanning tree;
/// every pair of domains is then joined by `inter_links_per_domain_pair`
/// links between uniformly chosen border nodes.
pub fn generate_substrate(cfg: &SubstrateConfig, seed: u64) -> Result<SubstrateNetwork, ConfigError> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, TOPOLOGY_STREAM);
    let per = cfg.nodes_per_domain as usize;
    let domains = cfg.domain_count as usize;

    let nodes: Vec<NodeSpec> = (0..domains * per)
        .map(|i| NodeSpec {
            domain: DomainId((i / per) as u32),
            cpu_capacity: cfg.cpu_range.sample(&mut rng),
            cpu_unit_price: cfg.price_range.sample(&mut rng),
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut present = std::collections::HashSet::new();
    let mut add = |a: usize, b: usize, pairs: &mut Vec<(usize, usize)>| {
        let key = (a.min(b), a.max(b));
        if present.insert(key) {
            pairs.push(key);
            true
        } else {
            false
        }
    };

    for d in 0..domains {
        let base = d * per;
        for i in 0..per {
            for j in (i + 1)..per {
                if rng.random_bool(cfg.intra_edge_prob) {
                    add(base + i, base + j, &mut pairs);
                }
            }
        }
        let mut order: Vec<usize> = (base..base + per).collect();
        order.shuffle(&mut rng);
        for k in 1..order.len() {
            let parent = order[rng.random_range(0..k)];
            add(order[k], parent, &mut pairs);
        }
    }
    let intra_count = pairs.len();

    for d1 in 0..domains {
        for d2 in (d1 + 1)..domains {
            let wanted = (cfg.inter_links_per_domain_pair as usize).min(per * per);
            let mut made = 0;
            while made < wanted {
                let a = d1 * per + rng.random_range(0..per);
                let b = d2 * per + rng.random_range(0..per);
                if add(a, b, &mut pairs) {
                    made += 1;
                }
            }
        }
    }

    let links: Vec<LinkSpec> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let bw_range = if i < intra_count { cfg.intra_bw_range } else { cfg.inter_bw_range };
            LinkSpec {
                a: NodeId(a as u32),
                b: NodeId(b as u32),
                bw_capacity: bw_range.sample(&mut rng),
                bw_unit_price: cfg.price_range.sample(&mut rng),
            }
        })
        .collect();

    let net = SubstrateNetwork::new(cfg.domain_count, &nodes, &links)
        .expect("generator only produces well-formed topologies");
    debug_assert!(net.is_connected());
    Ok(net)
}

/// Poisson arrival stream of connected requests, ordered by arrival time.
pub fn generate_vnr_stream(
    cfg: &VnrStreamConfig,
    seed: u64,
) -> Result<Vec<VirtualNetworkRequest>, ConfigError> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, WORKLOAD_STREAM);
    let gaps = Exp::new(cfg.mean_arrivals_per_100_units / 100.0)
        .map_err(|e| ConfigError::new("stream.mean_arrivals_per_100_units", e.to_string()))?;

    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += gaps.sample(&mut rng);
        if t >= cfg.horizon {
            break;
        }
        let n = cfg.vnr_node_range.sample(&mut rng) as usize;
        let cpu_demands: Vec<u64> = (0..n).map(|_| cfg.cpu_demand_range.sample(&mut rng)).collect();

        let mut edges = std::collections::BTreeSet::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for k in 1..n {
            let parent = order[rng.random_range(0..k)];
            edges.insert((order[k].min(parent), order[k].max(parent)));
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if !edges.contains(&(a, b)) && rng.random_bool(0.5) {
                    edges.insert((a, b));
                }
            }
        }
        let links = edges
            .into_iter()
            .map(|(a, b)| VirtualLink { a, b, bw: cfg.bw_demand_range.sample(&mut rng) })
            .collect();

        out.push(VirtualNetworkRequest {
            id: VnrId(out.len() as u64),
            arrival_time: t,
            lifetime: cfg.lifetime,
            cpu_demands,
            links,
        });
    }
    Ok(out)
}
