//! Substrate and virtual network types plus the resource ledger.
//!
//! All capacities, demands and prices are integers, so allocation and release
//! are exact inverses of each other.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-node CPU and per-link bandwidth totals of one plan.
type PlanDemands = (BTreeMap<NodeId, u64>, BTreeMap<LinkId, u64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DomainId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VnrId(pub u64);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LinkId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

impl fmt::Display for VnrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vnr{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstrateNode {
    pub id: NodeId,
    pub domain: DomainId,
    pub cpu_capacity: u64,
    pub cpu_residual: u64,
    pub cpu_unit_price: u64,
}

/// An undirected substrate link. `a < b` always holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstrateLink {
    pub id: LinkId,
    pub a: NodeId,
    pub b: NodeId,
    pub bw_capacity: u64,
    pub bw_residual: u64,
    pub bw_unit_price: u64,
    /// Bandwidth consumed by mapped virtual links.
    pub bw_used: u64,
    pub inter_domain: bool,
}

impl SubstrateLink {
    /// The endpoint opposite to `n`.
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn connects(&self, x: NodeId, y: NodeId) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("node {node} has {residual} CPU left but {demand} is required")]
    InsufficientCpu { node: NodeId, demand: u64, residual: u64 },
    #[error("link {link} has {residual} bandwidth left but {demand} is required")]
    InsufficientBandwidth { link: LinkId, demand: u64, residual: u64 },
    #[error("no active plan for {0}")]
    UnknownPlan(VnrId),
    #[error("a plan for {0} is already active")]
    DuplicatePlan(VnrId),
    #[error("unknown substrate node {0}")]
    UnknownNode(NodeId),
    #[error("unknown substrate link {0}")]
    UnknownLink(LinkId),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}

/// Multi-domain substrate network with its active-plan ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstrateNetwork {
    nodes: Vec<SubstrateNode>,
    links: Vec<SubstrateLink>,
    domain_count: u32,
    /// Per node: `(neighbor, link)` sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
    active: BTreeMap<VnrId, EmbeddingPlan>,
}

/// Plain description of a node used to assemble a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSpec {
    pub domain: DomainId,
    pub cpu_capacity: u64,
    pub cpu_unit_price: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub bw_capacity: u64,
    pub bw_unit_price: u64,
}

impl SubstrateNetwork {
    /// Builds a network with every resource unused. Node ids are assigned by
    /// position; a link is inter-domain when its endpoints sit in different
    /// domains.
    pub fn new(
        domain_count: u32,
        nodes: &[NodeSpec],
        links: &[LinkSpec],
    ) -> Result<Self, ModelError> {
        let n = nodes.len();
        let mut out_nodes = Vec::with_capacity(n);
        for (i, spec) in nodes.iter().enumerate() {
            if spec.domain.0 >= domain_count {
                return Err(ModelError::InvalidTopology(format!(
                    "node {i} belongs to domain {} but only {domain_count} domains exist",
                    spec.domain.0
                )));
            }
            if spec.cpu_unit_price < 1 {
                return Err(ModelError::InvalidTopology(format!(
                    "node {i} has a unit price below 1"
                )));
            }
            out_nodes.push(SubstrateNode {
                id: NodeId(i as u32),
                domain: spec.domain,
                cpu_capacity: spec.cpu_capacity,
                cpu_residual: spec.cpu_capacity,
                cpu_unit_price: spec.cpu_unit_price,
            });
        }

        let mut adjacency = vec![Vec::new(); n];
        let mut out_links = Vec::with_capacity(links.len());
        for (i, spec) in links.iter().enumerate() {
            let (a, b) = if spec.a <= spec.b { (spec.a, spec.b) } else { (spec.b, spec.a) };
            if b.index() >= n {
                return Err(ModelError::UnknownNode(b));
            }
            if a == b {
                return Err(ModelError::InvalidTopology(format!("self loop on {a}")));
            }
            if spec.bw_unit_price < 1 {
                return Err(ModelError::InvalidTopology(format!(
                    "link {i} has a unit price below 1"
                )));
            }
            let id = LinkId(i as u32);
            adjacency[a.index()].push((b, id));
            adjacency[b.index()].push((a, id));
            out_links.push(SubstrateLink {
                id,
                a,
                b,
                bw_capacity: spec.bw_capacity,
                bw_residual: spec.bw_capacity,
                bw_unit_price: spec.bw_unit_price,
                bw_used: 0,
                inter_domain: out_nodes[a.index()].domain != out_nodes[b.index()].domain,
            });
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(ModelError::InvalidTopology(
                    "more than one link between a node pair".into(),
                ));
            }
        }

        Ok(Self {
            nodes: out_nodes,
            links: out_links,
            domain_count,
            adjacency,
            active: BTreeMap::new(),
        })
    }

    pub fn nodes(&self) -> &[SubstrateNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[SubstrateLink] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &SubstrateNode {
        &self.nodes[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &SubstrateLink {
        &self.links[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn domain_count(&self) -> u32 {
        self.domain_count
    }

    /// Neighbors of `n` with the connecting link, ascending by neighbor id.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[n.index()]
    }

    pub fn link_between(&self, x: NodeId, y: NodeId) -> Option<LinkId> {
        let adj = &self.adjacency[x.index()];
        adj.binary_search_by_key(&y, |&(m, _)| m).ok().map(|i| adj[i].1)
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in self.neighbors(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.nodes.len()
    }

    pub fn max_node_price(&self) -> u64 {
        self.nodes.iter().map(|n| n.cpu_unit_price).max().unwrap_or(1)
    }

    pub fn max_link_price(&self) -> u64 {
        self.links.iter().map(|l| l.bw_unit_price).max().unwrap_or(1)
    }

    pub fn active_plans(&self) -> impl Iterator<Item = &EmbeddingPlan> {
        self.active.values()
    }

    pub fn active_plan(&self, id: VnrId) -> Option<&EmbeddingPlan> {
        self.active.get(&id)
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Commits `plan`, or leaves the network untouched if any node or link
    /// lacks the resources. Demands of several virtual links crossing the
    /// same substrate link add up.
    pub fn allocate(&mut self, plan: &EmbeddingPlan) -> Result<(), ModelError> {
        if self.active.contains_key(&plan.vnr_id) {
            return Err(ModelError::DuplicatePlan(plan.vnr_id));
        }
        let (cpu, bw) = self.plan_demands(plan)?;
        for (&node, &demand) in &cpu {
            let residual = self.nodes[node.index()].cpu_residual;
            if demand > residual {
                return Err(ModelError::InsufficientCpu { node, demand, residual });
            }
        }
        for (&link, &demand) in &bw {
            let residual = self.links[link.index()].bw_residual;
            if demand > residual {
                return Err(ModelError::InsufficientBandwidth { link, demand, residual });
            }
        }
        for (node, demand) in cpu {
            self.nodes[node.index()].cpu_residual -= demand;
        }
        for (link, demand) in bw {
            let l = &mut self.links[link.index()];
            l.bw_residual -= demand;
            l.bw_used += demand;
        }
        self.active.insert(plan.vnr_id, plan.clone());
        Ok(())
    }

    /// Returns every resource held by the plan of `vnr_id`.
    pub fn release(&mut self, vnr_id: VnrId) -> Result<EmbeddingPlan, ModelError> {
        let plan = self
            .active
            .remove(&vnr_id)
            .ok_or(ModelError::UnknownPlan(vnr_id))?;
        let (cpu, bw) = self
            .plan_demands(&plan)
            .expect("active plans were validated on allocation");
        for (node, demand) in cpu {
            self.nodes[node.index()].cpu_residual += demand;
        }
        for (link, demand) in bw {
            let l = &mut self.links[link.index()];
            l.bw_residual += demand;
            l.bw_used -= demand;
        }
        Ok(plan)
    }

    /// Reserves `demand` on every link of `path` without touching the plan
    /// ledger. All-or-nothing.
    pub fn reserve_path(&mut self, path: &[LinkId], demand: u64) -> Result<(), ModelError> {
        let mut per_link: BTreeMap<LinkId, u64> = BTreeMap::new();
        for &l in path {
            if l.index() >= self.links.len() {
                return Err(ModelError::UnknownLink(l));
            }
            *per_link.entry(l).or_default() += demand;
        }
        for (&link, &d) in &per_link {
            let residual = self.links[link.index()].bw_residual;
            if d > residual {
                return Err(ModelError::InsufficientBandwidth { link, demand: d, residual });
            }
        }
        for (link, d) in per_link {
            let l = &mut self.links[link.index()];
            l.bw_residual -= d;
            l.bw_used += d;
        }
        Ok(())
    }

    /// Undoes a successful [`reserve_path`](Self::reserve_path).
    pub fn unreserve_path(&mut self, path: &[LinkId], demand: u64) {
        for &l in path {
            let l = &mut self.links[l.index()];
            assert!(l.bw_used >= demand, "unreserve without matching reserve");
            l.bw_residual += demand;
            l.bw_used -= demand;
        }
    }

    fn plan_demands(&self, plan: &EmbeddingPlan) -> Result<PlanDemands, ModelError> {
        let mut cpu: BTreeMap<NodeId, u64> = BTreeMap::new();
        for a in &plan.nodes {
            if a.substrate.index() >= self.nodes.len() {
                return Err(ModelError::UnknownNode(a.substrate));
            }
            *cpu.entry(a.substrate).or_default() += a.cpu;
        }
        let mut bw: BTreeMap<LinkId, u64> = BTreeMap::new();
        for a in &plan.links {
            for &l in &a.path {
                if l.index() >= self.links.len() {
                    return Err(ModelError::UnknownLink(l));
                }
                *bw.entry(l).or_default() += a.bw;
            }
        }
        Ok((cpu, bw))
    }

    /// Checks that consumed resources equal what the active plans hold, node
    /// by node and link by link.
    pub fn check_conservation(&self) -> Result<(), String> {
        let mut cpu = vec![0u64; self.nodes.len()];
        let mut bw = vec![0u64; self.links.len()];
        for plan in self.active.values() {
            for a in &plan.nodes {
                cpu[a.substrate.index()] += a.cpu;
            }
            for a in &plan.links {
                for l in &a.path {
                    bw[l.index()] += a.bw;
                }
            }
        }
        for (n, held) in self.nodes.iter().zip(cpu) {
            if n.cpu_residual > n.cpu_capacity || n.cpu_capacity - n.cpu_residual != held {
                return Err(format!(
                    "{}: capacity {} residual {} but plans hold {held}",
                    n.id, n.cpu_capacity, n.cpu_residual
                ));
            }
        }
        for (l, held) in self.links.iter().zip(bw) {
            if l.bw_used + l.bw_residual != l.bw_capacity || l.bw_used != held {
                return Err(format!(
                    "{}: capacity {} residual {} used {} but plans hold {held}",
                    l.id, l.bw_capacity, l.bw_residual, l.bw_used
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualLink {
    pub a: usize,
    pub b: usize,
    pub bw: u64,
}

/// A virtual network request. Virtual node `j` is `cpu_demands[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualNetworkRequest {
    pub id: VnrId,
    pub arrival_time: f64,
    pub lifetime: f64,
    pub cpu_demands: Vec<u64>,
    pub links: Vec<VirtualLink>,
}

impl VirtualNetworkRequest {
    pub fn node_count(&self) -> usize {
        self.cpu_demands.len()
    }

    pub fn total_cpu(&self) -> u64 {
        self.cpu_demands.iter().sum()
    }

    pub fn total_bw(&self) -> u64 {
        self.links.iter().map(|l| l.bw).sum()
    }

    /// Smallest bandwidth demand over all virtual links, 0 without links.
    pub fn min_bw(&self) -> u64 {
        self.links.iter().map(|l| l.bw).min().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.cpu_demands.len();
        if n == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut comps = n;
        for l in &self.links {
            let (ra, rb) = (find(&mut parent, l.a), find(&mut parent, l.b));
            if ra != rb {
                parent[ra] = rb;
                comps -= 1;
            }
        }
        comps == 1
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.node_count();
        if self.cpu_demands.iter().any(|&d| d < 1) {
            return Err(format!("{}: CPU demand below 1", self.id));
        }
        for l in &self.links {
            if l.a >= n || l.b >= n || l.a == l.b {
                return Err(format!("{}: bad virtual link {}-{}", self.id, l.a, l.b));
            }
            if l.bw < 1 {
                return Err(format!("{}: bandwidth demand below 1", self.id));
            }
        }
        if !self.is_connected() {
            return Err(format!("{}: virtual graph is not connected", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAssignment {
    pub virtual_node: usize,
    pub substrate: NodeId,
    pub cpu: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkAssignment {
    /// Index into the request's link list.
    pub virtual_link: usize,
    pub bw: u64,
    pub path: Vec<LinkId>,
}

/// A complete embedding of one request: the unit of allocation and release.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingPlan {
    pub vnr_id: VnrId,
    pub nodes: Vec<NodeAssignment>,
    pub links: Vec<LinkAssignment>,
    pub objective: u64,
}

impl EmbeddingPlan {
    /// Assembles a plan from a node map (indexed by virtual node) and one
    /// path per virtual link (indexed like `vnr.links`), computing its price.
    pub fn new(
        net: &SubstrateNetwork,
        vnr: &VirtualNetworkRequest,
        node_map: &[NodeId],
        paths: Vec<Vec<LinkId>>,
    ) -> Self {
        let nodes = node_map
            .iter()
            .zip(&vnr.cpu_demands)
            .enumerate()
            .map(|(j, (&substrate, &cpu))| NodeAssignment { virtual_node: j, substrate, cpu })
            .collect();
        let links = paths
            .into_iter()
            .zip(&vnr.links)
            .enumerate()
            .map(|(i, (path, vl))| LinkAssignment { virtual_link: i, bw: vl.bw, path })
            .collect();
        let mut plan = EmbeddingPlan { vnr_id: vnr.id, nodes, links, objective: 0 };
        plan.objective = objective_value(net, &plan);
        plan
    }

    pub fn substrate_of(&self, virtual_node: usize) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|a| a.virtual_node == virtual_node)
            .map(|a| a.substrate)
    }

    /// Checks the structural invariants against the request and network:
    /// injective node map, path endpoints matching the node map, simple paths,
    /// and a consistent objective.
    pub fn validate(
        &self,
        net: &SubstrateNetwork,
        vnr: &VirtualNetworkRequest,
    ) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidPlan(m));
        if self.nodes.len() != vnr.node_count() || self.links.len() != vnr.links.len() {
            return bad("plan does not cover the request".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.nodes {
            if a.substrate.index() >= net.node_count() {
                return Err(ModelError::UnknownNode(a.substrate));
            }
            if !seen.insert(a.substrate) {
                return bad(format!("{} hosts two virtual nodes", a.substrate));
            }
        }
        for a in &self.links {
            let vl = vnr.links[a.virtual_link];
            let (src, dst) = match (self.substrate_of(vl.a), self.substrate_of(vl.b)) {
                (Some(s), Some(d)) => (s, d),
                _ => return bad(format!("virtual link {} has unmapped ends", a.virtual_link)),
            };
            match path_nodes(net, src, &a.path) {
                Some(nodes) => {
                    if *nodes.last().unwrap() != dst {
                        return bad(format!("path of virtual link {} ends elsewhere", a.virtual_link));
                    }
                    let mut uniq = nodes.clone();
                    uniq.sort_unstable();
                    uniq.dedup();
                    if uniq.len() != nodes.len() {
                        return bad(format!("path of virtual link {} is not simple", a.virtual_link));
                    }
                }
                None => {
                    return bad(format!("path of virtual link {} is broken", a.virtual_link))
                }
            }
        }
        if self.objective != objective_value(net, self) {
            return bad("stored objective differs from recomputed value".into());
        }
        Ok(())
    }
}

/// Walks `path` from `src`, returning the visited node sequence, or `None`
/// if consecutive links do not chain.
pub fn path_nodes(net: &SubstrateNetwork, src: NodeId, path: &[LinkId]) -> Option<Vec<NodeId>> {
    let mut nodes = Vec::with_capacity(path.len() + 1);
    nodes.push(src);
    let mut cur = src;
    for &l in path {
        if l.index() >= net.link_count() {
            return None;
        }
        let link = net.link(l);
        if link.a != cur && link.b != cur {
            return None;
        }
        cur = link.other(cur);
        nodes.push(cur);
    }
    Some(nodes)
}

/// Aggregate unit price of a path: the sum of its links' bandwidth prices.
pub fn aggregate_unit_price(net: &SubstrateNetwork, path: &[LinkId]) -> u64 {
    path.iter().map(|&l| net.link(l).bw_unit_price).sum()
}

/// Price of a plan: CPU demand times host unit price, plus bandwidth demand
/// times the aggregate unit price of its path.
pub fn objective_value(net: &SubstrateNetwork, plan: &EmbeddingPlan) -> u64 {
    let nodes: u64 = plan
        .nodes
        .iter()
        .map(|a| a.cpu * net.node(a.substrate).cpu_unit_price)
        .sum();
    let links: u64 = plan
        .links
        .iter()
        .map(|a| a.bw * aggregate_unit_price(net, &a.path))
        .sum();
    nodes + links
}
