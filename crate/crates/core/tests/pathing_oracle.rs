mod common;

use common::{bellman_ford, random_graph};
use lbhga_core::model::{LinkId, NodeId};
use lbhga_core::pathing::{all_pairs_estimate, compute_weights, shortest_path};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dijkstra_matches_bellman_ford() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let net = random_graph(20, 0.15, &mut rng);
        let min_bw = rng.random_range(0..60);
        let view = compute_weights(&net, rng.random_range(0.1..=2.0), min_bw);
        for s in 0..20u32 {
            let oracle = bellman_ford(&net, &view, NodeId(s));
            for t in 0..20u32 {
                if s == t {
                    continue;
                }
                match shortest_path(&net, &view, NodeId(s), NodeId(t)) {
                    Some(p) => {
                        let recomputed: f64 = p.links.iter().map(|&l| view.weight(l)).sum();
                        assert_eq!(p.weight, oracle[t as usize]);
                        assert_eq!(recomputed, p.weight);
                        for &l in &p.links {
                            assert!(!view.is_excluded(l));
                            assert!(net.link(l).bw_residual >= min_bw);
                        }
                    }
                    None => assert!(oracle[t as usize].is_infinite()),
                }
            }
        }
    }
}

#[test]
fn matrix_agrees_with_single_pair_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let net = random_graph(30, 0.1, &mut rng);
    let view = compute_weights(&net, 1.0, 20);
    let dm = all_pairs_estimate(&net, &view);
    let mut checked = 0;
    while checked < 100 {
        let s = NodeId(rng.random_range(0..30));
        let t = NodeId(rng.random_range(0..30));
        if s == t {
            continue;
        }
        // equal-cost paths may sum their weights in a different order
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.max(y),
            (None, None) => true,
            _ => false,
        };
        let single = shortest_path(&net, &view, s, t).map(|p| p.weight);
        assert!(close(dm.get(s, t), single), "{s} -> {t}");
        assert!(close(dm.get(s, t), dm.get(t, s)));
        checked += 1;
    }
}

#[test]
fn returned_paths_are_simple_and_connect_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let net = random_graph(15, 0.2, &mut rng);
        let view = compute_weights(&net, 1.0, 10);
        for s in 0..15u32 {
            for t in 0..15u32 {
                if s == t {
                    continue;
                }
                let Some(p) = shortest_path(&net, &view, NodeId(s), NodeId(t)) else { continue };
                assert_eq!(p.nodes.first(), Some(&NodeId(s)));
                assert_eq!(p.nodes.last(), Some(&NodeId(t)));
                assert_eq!(p.nodes.len(), p.links.len() + 1);
                let mut seen = p.nodes.clone();
                seen.sort();
                seen.dedup();
                assert_eq!(seen.len(), p.nodes.len());
                for (w, l) in p.nodes.windows(2).zip(&p.links) {
                    assert!(net.link(*l).connects(w[0], w[1]));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn busiest_link_weight_is_monotone(seed in 0u64..10_000, extra in 1u64..50, lambda in 0.01f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = random_graph(8, 0.3, &mut rng);
        let busiest = (0..net.link_count() as u32)
            .map(LinkId)
            .max_by_key(|&l| (net.link(l).bw_used, std::cmp::Reverse(l)))
            .unwrap();
        let before = compute_weights(&net, lambda, 0).weight(busiest);
        let room = net.link(busiest).bw_residual.min(extra);
        net.reserve_path(&[busiest], room).unwrap();
        let after = compute_weights(&net, lambda, 0).weight(busiest);
        prop_assert!(after >= before);
    }

    #[test]
    fn weights_never_drop_below_price(seed in 0u64..10_000, lambda in 0.01f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_graph(10, 0.3, &mut rng);
        let view = compute_weights(&net, lambda, 0);
        for l in net.links() {
            let w = view.weight(l.id);
            prop_assert!(w >= l.bw_unit_price as f64);
            prop_assert!(w <= l.bw_unit_price as f64 * (1.0 + lambda) * (1.0 + 1e-12));
        }
    }
}
