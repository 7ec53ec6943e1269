//! Load-balanced link weights and bandwidth-constrained shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::model::{LinkId, NodeId, SubstrateNetwork};

/// Relative tolerance when comparing floating path costs for tie-breaking.
const COST_EPS: f64 = 1e-9;

/// Per-link routing weights plus the set of links too thin for the current
/// bandwidth constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightView {
    weights: Vec<f64>,
    excluded: Vec<bool>,
}

impl WeightView {
    /// Static weights equal to the bandwidth unit price; nothing excluded.
    pub fn unit_prices(net: &SubstrateNetwork) -> Self {
        Self {
            weights: net.links().iter().map(|l| l.bw_unit_price as f64).collect(),
            excluded: vec![false; net.link_count()],
        }
    }

    pub fn weight(&self, link: LinkId) -> f64 {
        self.weights[link.index()]
    }

    pub fn is_excluded(&self, link: LinkId) -> bool {
        self.excluded[link.index()]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest weight over usable links, 0 if none.
    pub fn max_weight(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.excluded)
            .filter(|(_, &ex)| !ex)
            .map(|(&w, _)| w)
            .fold(0.0, f64::max)
    }

    /// Marks every link in `links` as excluded.
    pub fn exclude(&mut self, links: impl IntoIterator<Item = LinkId>) {
        for l in links {
            self.excluded[l.index()] = true;
        }
    }
}

/// Weights links by unit price, inflated for links whose used bandwidth is
/// above the network average:
///
/// `W = UP * (1 + lambda * (U - mean) / (max - mean))` when `U > mean`,
/// otherwise `W = UP`. Links whose residual is below `min_bw` are excluded.
/// The mean runs over all links, excluded or not.
pub fn compute_weights(net: &SubstrateNetwork, lambda: f64, min_bw: u64) -> WeightView {
    let links = net.links();
    let n = links.len().max(1) as f64;
    let mean = links.iter().map(|l| l.bw_used as f64).sum::<f64>() / n;
    let max = links.iter().map(|l| l.bw_used).max().unwrap_or(0) as f64;
    let spread = max - mean;

    let weights = links
        .iter()
        .map(|l| {
            let price = l.bw_unit_price as f64;
            let used = l.bw_used as f64;
            if used > mean && spread > 0.0 {
                price * (1.0 + lambda * ((used - mean) / spread))
            } else {
                price
            }
        })
        .collect();
    let excluded = links.iter().map(|l| l.bw_residual < min_bw).collect();
    WeightView { weights, excluded }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub links: Vec<LinkId>,
    pub nodes: Vec<NodeId>,
    /// Sum of the link weights along the path.
    pub weight: f64,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.links.len()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct QueueEntry {
    cost: f64,
    node: NodeId,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra over non-excluded links. Unreachable nodes get
/// `f64::INFINITY`.
pub fn distances_from(net: &SubstrateNetwork, view: &WeightView, src: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.node_count()];
    let mut heap = BinaryHeap::new();
    dist[src.index()] = 0.0;
    heap.push(QueueEntry { cost: 0.0, node: src });
    while let Some(QueueEntry { cost, node }) = heap.pop() {
        if cost > dist[node.index()] {
            continue;
        }
        for &(next, link) in net.neighbors(node) {
            if view.is_excluded(link) {
                continue;
            }
            let c = cost + view.weight(link);
            if c < dist[next.index()] {
                dist[next.index()] = c;
                heap.push(QueueEntry { cost: c, node: next });
            }
        }
    }
    dist
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Cheapest path from `src` to `dst` over non-excluded links, or `None` when
/// no such path exists. Among equally cheap paths, the one with the
/// lexicographically smallest node sequence wins.
pub fn shortest_path(
    net: &SubstrateNetwork,
    view: &WeightView,
    src: NodeId,
    dst: NodeId,
) -> Option<Path> {
    assert_ne!(src, dst, "shortest_path needs distinct endpoints");
    let to_dst = distances_from(net, view, dst);
    if !to_dst[src.index()].is_finite() {
        return None;
    }

    // Walk forward picking the smallest-id neighbor that stays on a
    // cheapest path. Weights are positive, so remaining cost strictly
    // decreases and the walk is simple.
    let mut nodes = vec![src];
    let mut links = Vec::new();
    let mut weight = 0.0;
    let mut cur = src;
    while cur != dst {
        let remaining = to_dst[cur.index()];
        let (next, link) = net
            .neighbors(cur)
            .iter()
            .copied()
            .find(|&(next, link)| {
                !view.is_excluded(link)
                    && to_dst[next.index()] < remaining
                    && nearly_equal(view.weight(link) + to_dst[next.index()], remaining)
            })
            .expect("a finite distance always has a tight predecessor");
        weight += view.weight(link);
        links.push(link);
        nodes.push(next);
        cur = next;
    }
    Some(Path { links, nodes, weight })
}

/// Cheapest-path cost between every ordered node pair under one view.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    max_link_weight: f64,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Largest usable link weight of the view the matrix was built from.
    pub fn max_link_weight(&self) -> f64 {
        self.max_link_weight
    }

    /// `None` when no feasible path exists.
    pub fn get(&self, from: NodeId, to: NodeId) -> Option<f64> {
        let d = self.data[from.index() * self.n + to.index()];
        d.is_finite().then_some(d)
    }
}

/// Runs Dijkstra from every node. Intended for fitness estimation only.
pub fn all_pairs_estimate(net: &SubstrateNetwork, view: &WeightView) -> DistanceMatrix {
    let n = net.node_count();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| distances_from(net, view, NodeId(s as u32)))
        .collect();
    DistanceMatrix { n, data: rows.concat(), max_link_weight: view.max_weight() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DomainId, LinkSpec, NodeSpec};

    fn line(prices: &[(u32, u32, u64)], n: usize) -> SubstrateNetwork {
        let nodes = vec![NodeSpec { domain: DomainId(0), cpu_capacity: 10, cpu_unit_price: 1 }; n];
        let links: Vec<LinkSpec> = prices
            .iter()
            .map(|&(a, b, p)| LinkSpec { a: NodeId(a), b: NodeId(b), bw_capacity: 100, bw_unit_price: p })
            .collect();
        SubstrateNetwork::new(1, &nodes, &links).unwrap()
    }

    fn consume(net: &mut SubstrateNetwork, link: u32, amount: u64) {
        net.reserve_path(&[LinkId(link)], amount).unwrap();
    }

    #[test]
    fn busiest_link_weight() {
        let mut net = line(&[(0, 1, 2), (1, 2, 3), (2, 3, 5)], 4);
        consume(&mut net, 0, 10);
        consume(&mut net, 1, 20);
        consume(&mut net, 2, 30);
        let view = compute_weights(&net, 1.0, 0);
        // mean 20, max 30: extra (30-20)/(30-20) = 1
        assert_eq!(view.weight(LinkId(2)), 5.0 * (1.0 + 1.0 * 1.0));
        assert_eq!(view.weight(LinkId(2)), 10.0);
        assert_eq!(view.weight(LinkId(1)), 3.0);
        assert_eq!(view.weight(LinkId(0)), 2.0);
    }

    #[test]
    fn unused_network_keeps_prices() {
        let net = line(&[(0, 1, 2), (1, 2, 7)], 3);
        let view = compute_weights(&net, 2.0, 0);
        assert_eq!(view.weights(), &[2.0, 7.0]);
        assert_eq!(view, WeightView::unit_prices(&net));
    }

    #[test]
    fn thin_links_are_excluded() {
        let mut net = line(&[(0, 1, 2), (1, 2, 7)], 3);
        consume(&mut net, 0, 98);
        let view = compute_weights(&net, 1.0, 3);
        assert!(view.is_excluded(LinkId(0)));
        assert!(!view.is_excluded(LinkId(1)));
        assert!(shortest_path(&net, &view, NodeId(0), NodeId(2)).is_none());
    }

    #[test]
    fn adjacent_cheapest_is_single_link() {
        let net = line(&[(0, 1, 1), (1, 2, 1), (0, 2, 1)], 3);
        let p = shortest_path(&net, &WeightView::unit_prices(&net), NodeId(0), NodeId(2)).unwrap();
        assert_eq!(p.links, vec![LinkId(2)]);
        assert_eq!(p.weight, 1.0);
    }

    #[test]
    fn ties_broken_by_node_sequence() {
        // 0-3 via 2 or via 1, both cost 2
        let net = line(&[(0, 2, 1), (2, 3, 1), (0, 1, 1), (1, 3, 1)], 4);
        let p = shortest_path(&net, &WeightView::unit_prices(&net), NodeId(0), NodeId(3)).unwrap();
        assert_eq!(p.nodes, vec![NodeId(0), NodeId(1), NodeId(3)]);
    }

    #[test]
    fn equal_usage_adds_no_extra_weight() {
        let mut net = line(&[(0, 1, 4), (1, 2, 6)], 3);
        consume(&mut net, 0, 5);
        consume(&mut net, 1, 5);
        let view = compute_weights(&net, 1.0, 0);
        assert_eq!(view.weights(), &[4.0, 6.0]);
    }

    #[test]
    fn matrix_diagonal_and_disconnection() {
        let mut net = line(&[(0, 1, 4), (1, 2, 6)], 3);
        consume(&mut net, 1, 99);
        let dm = all_pairs_estimate(&net, &compute_weights(&net, 1.0, 2));
        assert_eq!(dm.get(NodeId(1), NodeId(1)), Some(0.0));
        assert_eq!(dm.get(NodeId(0), NodeId(1)), Some(4.0));
        assert_eq!(dm.get(NodeId(0), NodeId(2)), None);
        assert_eq!(dm.get(NodeId(2), NodeId(0)), None);
    }
}
