//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use lbhga_core::lbhga::Evaluator;
use lbhga_core::model::{DomainId, LinkId, LinkSpec, NodeId, NodeSpec, SubstrateNetwork, VirtualNetworkRequest};
use lbhga_core::pathing::WeightView;
use lbhga_core::topology::{generate_substrate, generate_vnr_stream, Range, SubstrateConfig, VnrStreamConfig};

/// Plain Bellman-Ford over the undirected graph; excluded links are skipped.
pub fn bellman_ford(net: &SubstrateNetwork, view: &WeightView, src: NodeId) -> Vec<f64> {
    let n = net.node_count();
    let mut dist = vec![f64::INFINITY; n];
    dist[src.index()] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for l in net.links() {
            if view.is_excluded(l.id) {
                continue;
            }
            let w = view.weight(l.id);
            for (u, v) in [(l.a, l.b), (l.b, l.a)] {
                if dist[u.index()] + w < dist[v.index()] {
                    dist[v.index()] = dist[u.index()] + w;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Lowest fitness over every injective, CPU-feasible node mapping.
pub fn brute_force_optimum(eval: &Evaluator<'_>) -> Option<f64> {
    let n = eval.vnr.node_count();
    let m = eval.net.node_count();
    let mut best: Option<f64> = None;
    let mut genes = Vec::with_capacity(n);
    let mut used = vec![false; m];
    fn rec(
        eval: &Evaluator<'_>,
        n: usize,
        genes: &mut Vec<NodeId>,
        used: &mut [bool],
        best: &mut Option<f64>,
        count: &mut usize,
    ) {
        if genes.len() == n {
            *count += 1;
            let f = eval.fitness(genes);
            if best.is_none_or(|b| f < b) {
                *best = Some(f);
            }
            return;
        }
        let j = genes.len();
        for s in 0..used.len() {
            if used[s] || eval.net.node(NodeId(s as u32)).cpu_residual < eval.vnr.cpu_demands[j] {
                continue;
            }
            used[s] = true;
            genes.push(NodeId(s as u32));
            rec(eval, n, genes, used, best, count);
            genes.pop();
            used[s] = false;
        }
    }
    let mut count = 0;
    rec(eval, n, &mut genes, &mut used, &mut best, &mut count);
    best
}

/// Number of injective mappings of `k` virtual nodes onto `m` hosts.
pub fn permutations(m: u64, k: u64) -> u64 {
    (0..k).map(|i| m - i).product()
}

/// An 8-node single-domain substrate and a 5-node request.
pub fn small_instance(seed: u64) -> (SubstrateNetwork, VirtualNetworkRequest) {
    let scfg = SubstrateConfig { domain_count: 1, nodes_per_domain: 8, ..Default::default() };
    let net = generate_substrate(&scfg, seed).unwrap();
    let vcfg = VnrStreamConfig { vnr_node_range: Range::new(5, 5), horizon: 200.0, ..Default::default() };
    let vnr = generate_vnr_stream(&vcfg, seed).unwrap().into_iter().next().unwrap();
    (net, vnr)
}

/// One-sided sign test: probability of at least `wins` successes out of the
/// non-tied pairs under a fair coin. Ties are discarded.
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    let mut p = 0.0;
    for k in wins..=n {
        p += binomial(n, k) * 0.5f64.powi(n as i32);
    }
    p
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Three-domain substrate laid out like the load-balancing illustration:
/// a cheap route E-D-B-C (aggregate price 6), a detour E-F-D joining it
/// (E-F-D-B-C costs 7), and a long route E-F-H-G-C (aggregate price 16).
pub struct Fig6 {
    pub net: SubstrateNetwork,
}

pub const A: NodeId = NodeId(0);
pub const B: NodeId = NodeId(1);
pub const C: NodeId = NodeId(2);
pub const D: NodeId = NodeId(3);
pub const E: NodeId = NodeId(4);
pub const F: NodeId = NodeId(5);
pub const G: NodeId = NodeId(6);
pub const H: NodeId = NodeId(7);

impl Fig6 {
    pub fn new() -> Self {
        let domain = |d| NodeSpec { domain: DomainId(d), cpu_capacity: 100, cpu_unit_price: 1 };
        // A B C | D E F | G H
        let nodes = [domain(0), domain(0), domain(0), domain(1), domain(1), domain(1), domain(2), domain(2)];
        let link = |a: NodeId, b: NodeId, p| LinkSpec { a, b, bw_capacity: 100, bw_unit_price: p };
        let links = [
            link(A, B, 3),
            link(A, C, 4),
            link(B, C, 1),
            link(D, B, 1),
            link(E, D, 4),
            link(E, F, 2),
            link(F, D, 3),
            link(F, H, 4),
            link(H, G, 5),
            link(G, C, 5),
        ];
        Self { net: SubstrateNetwork::new(3, &nodes, &links).unwrap() }
    }

    pub fn link(&self, x: NodeId, y: NodeId) -> LinkId {
        self.net.link_between(x, y).unwrap()
    }

    pub fn route(&self, hops: &[NodeId]) -> Vec<LinkId> {
        hops.windows(2).map(|w| self.link(w[0], w[1])).collect()
    }
}

/// Connected random graph on `n` nodes: a random spanning tree plus each
/// remaining pair with probability `p`. Prices in [1,10], capacities in
/// [1,100], with some bandwidth already consumed.
pub fn random_graph<R: rand::Rng>(n: usize, p: f64, rng: &mut R) -> SubstrateNetwork {
    let nodes: Vec<NodeSpec> = (0..n)
        .map(|_| NodeSpec { domain: DomainId(0), cpu_capacity: rng.random_range(1..=50), cpu_unit_price: rng.random_range(1..=10) })
        .collect();
    let mut pairs = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        pairs.insert((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                pairs.insert((u, v));
            }
        }
    }
    let links: Vec<LinkSpec> = pairs
        .into_iter()
        .map(|(u, v)| LinkSpec {
            a: NodeId(u as u32),
            b: NodeId(v as u32),
            bw_capacity: rng.random_range(1..=100),
            bw_unit_price: rng.random_range(1..=10),
        })
        .collect();
    let mut net = SubstrateNetwork::new(1, &nodes, &links).unwrap();
    for l in 0..net.link_count() {
        let cap = net.link(LinkId(l as u32)).bw_capacity;
        let used = rng.random_range(0..=cap);
        net.reserve_path(&[LinkId(l as u32)], used).unwrap();
    }
    net
}

/// A random request of 2..=4 nodes (path-shaped plus one chord) and a plan
/// for it routed over unit-price shortest paths. The plan may or may not fit.
pub fn random_plan<R: rand::Rng>(
    net: &SubstrateNetwork,
    id: u64,
    rng: &mut R,
) -> (VirtualNetworkRequest, lbhga_core::model::EmbeddingPlan) {
    use lbhga_core::model::{EmbeddingPlan, VirtualLink, VnrId};
    use lbhga_core::pathing::shortest_path;
    let k = rng.random_range(2..=4.min(net.node_count()));
    let cpu_demands: Vec<u64> = (0..k).map(|_| rng.random_range(1..=30)).collect();
    let mut links: Vec<VirtualLink> = (1..k).map(|j| VirtualLink { a: j - 1, b: j, bw: rng.random_range(1..=40) }).collect();
    if k > 2 {
        links.push(VirtualLink { a: 0, b: k - 1, bw: rng.random_range(1..=40) });
    }
    let vnr = VirtualNetworkRequest { id: VnrId(id), arrival_time: 0.0, lifetime: 1.0, cpu_demands, links };
    let hosts: Vec<NodeId> = rand::seq::index::sample(rng, net.node_count(), k)
        .into_iter()
        .map(|i| NodeId(i as u32))
        .collect();
    let view = WeightView::unit_prices(net);
    let paths = vnr
        .links
        .iter()
        .map(|vl| shortest_path(net, &view, hosts[vl.a], hosts[vl.b]).unwrap().links)
        .collect();
    let plan = EmbeddingPlan::new(net, &vnr, &hosts, paths);
    (vnr, plan)
}

/// Applies `ops` random allocate/release steps and checks conservation and
/// atomicity after each one. Returns how many allocations succeeded.
pub fn churn<R: rand::Rng>(net: &mut SubstrateNetwork, ops: usize, rng: &mut R) -> usize {
    let mut active: Vec<lbhga_core::model::VnrId> = Vec::new();
    let mut next_id = 0;
    let mut accepted = 0;
    for _ in 0..ops {
        if !active.is_empty() && rng.random_bool(0.4) {
            let id = active.swap_remove(rng.random_range(0..active.len()));
            net.release(id).unwrap();
        } else {
            let (_, plan) = random_plan(net, next_id, rng);
            next_id += 1;
            let before = net.clone();
            match net.allocate(&plan) {
                Ok(()) => {
                    active.push(plan.vnr_id);
                    accepted += 1;
                }
                Err(_) => assert_eq!(*net, before, "failed allocate modified the network"),
            }
        }
        net.check_conservation().unwrap();
        for n in net.nodes() {
            assert!(n.cpu_residual <= n.cpu_capacity);
        }
        for l in net.links() {
            assert!(l.bw_residual <= l.bw_capacity && l.bw_used + l.bw_residual == l.bw_capacity);
        }
    }
    for id in active {
        net.release(id).unwrap();
    }
    accepted
}
