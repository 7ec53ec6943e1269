//! Discrete-event simulation of request arrivals and expiries, plus the
//! evaluation metrics.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{tga_map_links, tga_run, TgaParams};
use crate::lbhga::{self, LbhgaParams};
use crate::linkmap::map_links;
use crate::model::{EmbeddingPlan, NodeId, SubstrateNetwork, VirtualNetworkRequest, VnrId};
use crate::topology::{
    generate_substrate, generate_vnr_stream, stream_rng, ConfigError, SubstrateConfig,
    VnrStreamConfig,
};

const ALGORITHM_STREAM: u64 = 3;

/// Width of a metrics bucket in simulation time units.
pub const BUCKET_WIDTH: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lbhga,
    Tga,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Lbhga, Algorithm::Tga];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lbhga => "lbhga",
            Algorithm::Tga => "tga",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lbhga" => Ok(Algorithm::Lbhga),
            "tga" => Ok(Algorithm::Tga),
            other => Err(format!("unknown algorithm `{other}` (expected lbhga or tga)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    #[serde(default)]
    pub lbhga: LbhgaParams,
    #[serde(default)]
    pub tga: TgaParams,
}

/// Metrics at the end of one bucket. Counts, sums and ratios are cumulative
/// from time zero; the link load variance is a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub bucket_end: f64,
    pub link_load_variance: f64,
    pub revenue: u64,
    pub cost: u64,
    pub revenue_cost_ratio: Option<f64>,
    /// accepted / (accepted + refused)
    pub acceptance_ratio: Option<f64>,
    /// accepted / refused
    pub accepted_per_refused: Option<f64>,
    pub avg_quotation: Option<f64>,
    pub accepted: u64,
    pub refused: u64,
    pub total_runtime_ms: f64,
    pub avg_runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimEvent {
    Accepted {
        time: f64,
        vnr: VnrId,
        revenue: u64,
        cost: u64,
        objective: u64,
        /// 1-based rank of the individual whose links mapped.
        attempts: usize,
        runtime_ms: f64,
    },
    Refused {
        time: f64,
        vnr: VnrId,
        runtime_ms: f64,
    },
    Expired {
        time: f64,
        vnr: VnrId,
    },
}

impl SimEvent {
    pub fn time(&self) -> f64 {
        match *self {
            SimEvent::Accepted { time, .. } | SimEvent::Refused { time, .. } | SimEvent::Expired { time, .. } => time,
        }
    }

    /// The event with wall-clock fields zeroed, for reproducibility checks.
    pub fn without_runtime(&self) -> SimEvent {
        let mut e = self.clone();
        match &mut e {
            SimEvent::Accepted { runtime_ms, .. } | SimEvent::Refused { runtime_ms, .. } => *runtime_ms = 0.0,
            SimEvent::Expired { .. } => {}
        }
        e
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub records: Vec<MetricsRecord>,
    pub events: Vec<SimEvent>,
    /// Substrate state after every request has expired.
    pub final_network: SubstrateNetwork,
}

/// Population variance of consumed bandwidth over all substrate links.
pub fn link_load_variance(net: &SubstrateNetwork) -> f64 {
    let links = net.links();
    if links.is_empty() {
        return 0.0;
    }
    let n = links.len() as f64;
    let consumed = links.iter().map(|l| (l.bw_capacity - l.bw_residual) as f64);
    let mean = consumed.clone().sum::<f64>() / n;
    consumed.map(|c| (c - mean) * (c - mean)).sum::<f64>() / n
}

/// Requested resources: total CPU plus total bandwidth.
pub fn revenue(vnr: &VirtualNetworkRequest) -> u64 {
    vnr.total_cpu() + vnr.total_bw()
}

/// Consumed resources: total CPU plus bandwidth times hop count per path.
pub fn cost(plan: &EmbeddingPlan) -> u64 {
    let cpu: u64 = plan.nodes.iter().map(|a| a.cpu).sum();
    let bw: u64 = plan.links.iter().map(|a| a.bw * a.path.len() as u64).sum();
    cpu + bw
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pending {
    Expiry(VnrId),
    Arrival(usize),
}

#[derive(Debug, Clone, Copy)]
struct QueuedEvent {
    time: f64,
    what: Pending,
}

impl QueuedEvent {
    fn key(&self) -> (u8, u64) {
        match self.what {
            Pending::Expiry(id) => (0, id.0),
            Pending::Arrival(i) => (1, i as u64),
        }
    }
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then_with(|| self.key().cmp(&other.key()))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
struct Totals {
    revenue: u64,
    cost: u64,
    objective: u64,
    accepted: u64,
    refused: u64,
    runtime_ms: f64,
}

impl Totals {
    fn record(&self, bucket_end: f64, net: &SubstrateNetwork) -> MetricsRecord {
        let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
        let accepted = self.accepted as f64;
        MetricsRecord {
            bucket_end,
            link_load_variance: link_load_variance(net),
            revenue: self.revenue,
            cost: self.cost,
            revenue_cost_ratio: ratio(self.revenue as f64, self.cost as f64),
            acceptance_ratio: ratio(accepted, (self.accepted + self.refused) as f64),
            accepted_per_refused: ratio(accepted, self.refused as f64),
            avg_quotation: ratio(self.objective as f64, accepted),
            accepted: self.accepted,
            refused: self.refused,
            total_runtime_ms: self.runtime_ms,
            avg_runtime_ms: ratio(self.runtime_ms, accepted),
        }
    }
}

/// Node-maps `vnr`, then tries link mapping on the ranked individuals until
/// one commits or the retry limit is hit. Returns the committed plan and the
/// 1-based attempt that succeeded.
fn embed<R: Rng + ?Sized>(
    vnr: &VirtualNetworkRequest,
    net: &mut SubstrateNetwork,
    algorithm: Algorithm,
    params: &AlgorithmParams,
    rng: &mut R,
) -> Option<(EmbeddingPlan, usize)> {
    let (outcome, limit) = match algorithm {
        Algorithm::Lbhga => (lbhga::run(vnr, net, &params.lbhga, rng).ok()?, params.lbhga.retry_limit),
        Algorithm::Tga => (tga_run(vnr, net, &params.tga, rng).ok()?, params.tga.retry_limit),
    };
    let mut tried: BTreeSet<&[NodeId]> = BTreeSet::new();
    let distinct = outcome
        .ranked
        .iter()
        .filter(|ind| tried.insert(ind.genes.as_slice()))
        .take(limit.max(1));
    for (attempt, ind) in distinct.enumerate() {
        let plan = match algorithm {
            Algorithm::Lbhga => map_links(vnr, &ind.genes, net, params.lbhga.lambda).ok(),
            Algorithm::Tga => tga_map_links(vnr, &ind.genes, net),
        };
        if let Some(plan) = plan {
            if net.allocate(&plan).is_ok() {
                return Some((plan, attempt + 1));
            }
        }
    }
    None
}

/// Generates the substrate and request stream for `seed` and simulates them.
pub fn run_simulation(
    substrate_cfg: &SubstrateConfig,
    stream_cfg: &VnrStreamConfig,
    algorithm: Algorithm,
    params: &AlgorithmParams,
    seed: u64,
) -> Result<SimulationOutput, ConfigError> {
    let net = generate_substrate(substrate_cfg, seed)?;
    let stream = generate_vnr_stream(stream_cfg, seed)?;
    Ok(simulate(net, &stream, stream_cfg.horizon, algorithm, params, seed, |_, _| {}))
}

/// Simulates `stream` on `net`. Events are processed in time order with
/// expiries before arrivals at equal times. Metrics are taken at every
/// multiple of [`BUCKET_WIDTH`] up to `horizon` (the last bucket may be
/// shorter). Requests still active at the horizon are expired afterwards so
/// the returned network is empty. `observe` runs after every event.
pub fn simulate<F>(
    mut net: SubstrateNetwork,
    stream: &[VirtualNetworkRequest],
    horizon: f64,
    algorithm: Algorithm,
    params: &AlgorithmParams,
    seed: u64,
    mut observe: F,
) -> SimulationOutput
where
    F: FnMut(&SubstrateNetwork, &SimEvent),
{
    let mut rng = stream_rng(seed, ALGORITHM_STREAM);
    let mut queue: BinaryHeap<Reverse<QueuedEvent>> = stream
        .iter()
        .enumerate()
        .map(|(i, v)| Reverse(QueuedEvent { time: v.arrival_time, what: Pending::Arrival(i) }))
        .collect();

    let bucket_ends: Vec<f64> = {
        let count = (horizon / BUCKET_WIDTH).ceil() as usize;
        (1..=count).map(|k| (k as f64 * BUCKET_WIDTH).min(horizon)).collect()
    };
    let mut next_bucket = 0;

    let mut totals = Totals::default();
    let mut records = Vec::with_capacity(bucket_ends.len());
    let mut events = Vec::new();

    while let Some(Reverse(ev)) = queue.pop() {
        while next_bucket < bucket_ends.len() && ev.time > bucket_ends[next_bucket] {
            records.push(totals.record(bucket_ends[next_bucket], &net));
            next_bucket += 1;
        }
        let event = match ev.what {
            Pending::Expiry(id) => {
                net.release(id).expect("expiring request holds an active plan");
                SimEvent::Expired { time: ev.time, vnr: id }
            }
            Pending::Arrival(i) => {
                let vnr = &stream[i];
                let started = Instant::now();
                let embedded = embed(vnr, &mut net, algorithm, params, &mut rng);
                let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
                totals.runtime_ms += runtime_ms;
                match embedded {
                    Some((plan, attempts)) => {
                        let r = revenue(vnr);
                        let c = cost(&plan);
                        totals.revenue += r;
                        totals.cost += c;
                        totals.objective += plan.objective;
                        totals.accepted += 1;
                        queue.push(Reverse(QueuedEvent {
                            time: vnr.arrival_time + vnr.lifetime,
                            what: Pending::Expiry(vnr.id),
                        }));
                        SimEvent::Accepted {
                            time: ev.time,
                            vnr: vnr.id,
                            revenue: r,
                            cost: c,
                            objective: plan.objective,
                            attempts,
                            runtime_ms,
                        }
                    }
                    None => {
                        totals.refused += 1;
                        SimEvent::Refused { time: ev.time, vnr: vnr.id, runtime_ms }
                    }
                }
            }
        };
        observe(&net, &event);
        events.push(event);
    }
    while next_bucket < bucket_ends.len() {
        records.push(totals.record(bucket_ends[next_bucket], &net));
        next_bucket += 1;
    }

    SimulationOutput { records, events, final_network: net }
}
