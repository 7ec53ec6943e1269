//! Link mapping: route every virtual link of a node-mapped request over a
//! load-balanced shortest path that respects its bandwidth demand.

use thiserror::Error;

use crate::model::{EmbeddingPlan, LinkId, NodeId, SubstrateNetwork, VirtualNetworkRequest};
use crate::pathing::{compute_weights, shortest_path};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("virtual link {virtual_link} ({src} -> {dst}, bandwidth {bw}) has no feasible path")]
pub struct LinkMapFailure {
    pub virtual_link: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub bw: u64,
}

/// Processing order: bandwidth demand descending, then virtual link index.
pub fn link_order(vnr: &VirtualNetworkRequest) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vnr.links.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(vnr.links[i].bw), i));
    order
}

/// Maps every virtual link in [`link_order`]. Before each search the link
/// weights are recomputed from current usage, including the bandwidth
/// tentatively reserved for links already routed in this call, and links
/// thinner than the demand are excluded.
///
/// `net` is back in its original state when this returns, success or not;
/// commit the returned plan with [`SubstrateNetwork::allocate`].
pub fn map_links(
    vnr: &VirtualNetworkRequest,
    node_map: &[NodeId],
    net: &mut SubstrateNetwork,
    lambda: f64,
) -> Result<EmbeddingPlan, LinkMapFailure> {
    let mut paths: Vec<Option<Vec<LinkId>>> = vec![None; vnr.links.len()];
    let mut reserved: Vec<(Vec<LinkId>, u64)> = Vec::new();

    let mut failure = None;
    for i in link_order(vnr) {
        let vl = vnr.links[i];
        let (src, dst) = (node_map[vl.a], node_map[vl.b]);
        let view = compute_weights(net, lambda, vl.bw);
        let reserved_ok = shortest_path(net, &view, src, dst)
            .and_then(|p| net.reserve_path(&p.links, vl.bw).ok().map(|_| p.links));
        match reserved_ok {
            Some(links) => {
                reserved.push((links.clone(), vl.bw));
                paths[i] = Some(links);
            }
            None => {
                failure = Some(LinkMapFailure { virtual_link: i, src, dst, bw: vl.bw });
                break;
            }
        }
    }

    for (links, bw) in reserved.iter().rev() {
        net.unreserve_path(links, *bw);
    }
    if let Some(f) = failure {
        return Err(f);
    }
    let paths = paths.into_iter().map(|p| p.expect("every link routed")).collect();
    Ok(EmbeddingPlan::new(net, vnr, node_map, paths))
}
