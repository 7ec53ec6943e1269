//! Fixtures shared by the benchmarks.

use lbhga_core::{generate_substrate, generate_vnr_stream, SubstrateConfig, SubstrateNetwork, VirtualNetworkRequest, VnrStreamConfig};

/// A 4 x 10 substrate and the largest request of its default stream.
pub fn fixture(seed: u64) -> (SubstrateNetwork, VirtualNetworkRequest) {
    let substrate = SubstrateConfig { domain_count: 4, nodes_per_domain: 10, ..Default::default() };
    let net = generate_substrate(&substrate, seed).expect("valid substrate config");
    let stream = generate_vnr_stream(&VnrStreamConfig::default(), seed).expect("valid stream config");
    let vnr = stream.into_iter().max_by_key(|v| (v.node_count(), v.links.len())).expect("non-empty stream");
    (net, vnr)
}
