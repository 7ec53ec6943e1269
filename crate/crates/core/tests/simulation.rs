use lbhga_core::model::{DomainId, LinkSpec, NodeId, NodeSpec, SubstrateNetwork, VirtualLink, VirtualNetworkRequest, VnrId};
use lbhga_core::sim::{revenue, run_simulation, simulate, Algorithm, AlgorithmParams, SimEvent};
use lbhga_core::topology::{generate_substrate, generate_vnr_stream, Range, SubstrateConfig, VnrStreamConfig};
use lbhga_core::{LbhgaParams, TgaParams};

fn quick_params() -> AlgorithmParams {
    AlgorithmParams {
        lbhga: LbhgaParams { population_size: 16, max_iterations: 10, ..Default::default() },
        tga: TgaParams { population_size: 16, max_iterations: 10, ..Default::default() },
    }
}

/// Small, tight substrate so that some requests get refused.
fn tight() -> (SubstrateConfig, VnrStreamConfig) {
    let s = SubstrateConfig {
        domain_count: 2,
        nodes_per_domain: 6,
        intra_edge_prob: 0.3,
        inter_links_per_domain_pair: 1,
        cpu_range: Range::new(10, 30),
        intra_bw_range: Range::new(10, 30),
        inter_bw_range: Range::new(15, 30),
        ..Default::default()
    };
    let v = VnrStreamConfig { horizon: 400.0, lifetime: 200.0, vnr_node_range: Range::new(3, 6), ..Default::default() };
    (s, v)
}

#[test]
fn identical_inputs_give_identical_runs() {
    let (s, v) = tight();
    for alg in Algorithm::ALL {
        let a = run_simulation(&s, &v, alg, &quick_params(), 5).unwrap();
        let b = run_simulation(&s, &v, alg, &quick_params(), 5).unwrap();
        let strip = |evs: &[SimEvent]| evs.iter().map(SimEvent::without_runtime).collect::<Vec<_>>();
        assert_eq!(strip(&a.events), strip(&b.events));
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(
                (x.bucket_end, x.link_load_variance, x.revenue, x.cost, x.accepted, x.refused, x.avg_quotation),
                (y.bucket_end, y.link_load_variance, y.revenue, y.cost, y.accepted, y.refused, y.avg_quotation)
            );
        }
    }
}

#[test]
fn conservation_holds_at_every_event() {
    let (s, v) = tight();
    for alg in Algorithm::ALL {
        let net = generate_substrate(&s, 2).unwrap();
        let stream = generate_vnr_stream(&v, 2).unwrap();
        let initial = net.clone();
        let mut seen = 0;
        let out = simulate(net, &stream, v.horizon, alg, &quick_params(), 2, |net, _| {
            net.check_conservation().unwrap();
            seen += 1;
        });
        assert_eq!(seen, out.events.len());
        assert_eq!(out.final_network, initial);
    }
}

#[test]
fn replayed_log_matches_reported_metrics() {
    let (s, v) = tight();
    for seed in 0..3 {
        for alg in Algorithm::ALL {
            let out = run_simulation(&s, &v, alg, &quick_params(), seed).unwrap();
            let stream = generate_vnr_stream(&v, seed).unwrap();
            let (mut rev, mut cost, mut acc, mut refused) = (0u64, 0u64, 0u64, 0u64);
            for e in &out.events {
                match *e {
                    SimEvent::Accepted { vnr, revenue: r, cost: c, .. } => {
                        assert_eq!(r, revenue(&stream[vnr.0 as usize]));
                        assert!(c >= r);
                        rev += r;
                        cost += c;
                        acc += 1;
                    }
                    SimEvent::Refused { .. } => refused += 1,
                    SimEvent::Expired { .. } => {}
                }
            }
            let last = out.records.last().unwrap();
            assert_eq!((last.revenue, last.cost, last.accepted, last.refused), (rev, cost, acc, refused));
            assert_eq!(acc + refused, stream.len() as u64);
            if cost > 0 {
                assert_eq!(last.revenue_cost_ratio, Some(rev as f64 / cost as f64));
                assert!(last.revenue_cost_ratio.unwrap() <= 1.0);
            }
            for r in &out.records {
                if let Some(ratio) = r.acceptance_ratio {
                    assert!((0.0..=1.0).contains(&ratio));
                    assert!((ratio * (r.accepted + r.refused) as f64 - r.accepted as f64).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn tight_setting_refuses_something() {
    let (s, v) = tight();
    let refused: u64 = (0..3)
        .map(|seed| run_simulation(&s, &v, Algorithm::Tga, &quick_params(), seed).unwrap().records.last().unwrap().refused)
        .sum();
    assert!(refused > 0);
}

#[test]
fn empty_stream_reports_nothing() {
    let s = SubstrateConfig { domain_count: 1, nodes_per_domain: 4, ..Default::default() };
    let net = generate_substrate(&s, 0).unwrap();
    let out = simulate(net, &[], 250.0, Algorithm::Lbhga, &AlgorithmParams::default(), 0, |_, _| {});
    assert!(out.events.is_empty());
    assert_eq!(out.records.iter().map(|r| r.bucket_end).collect::<Vec<_>>(), vec![100.0, 200.0, 250.0]);
    for r in &out.records {
        assert_eq!((r.revenue, r.cost, r.accepted, r.refused), (0, 0, 0, 0));
        assert_eq!(r.link_load_variance, 0.0);
        assert!(r.acceptance_ratio.is_none() && r.revenue_cost_ratio.is_none() && r.avg_quotation.is_none());
    }
}

#[test]
fn single_request_on_roomy_substrate() {
    let nodes = vec![NodeSpec { domain: DomainId(0), cpu_capacity: 100, cpu_unit_price: 3 }; 3];
    let links = [
        LinkSpec { a: NodeId(0), b: NodeId(1), bw_capacity: 100, bw_unit_price: 2 },
        LinkSpec { a: NodeId(1), b: NodeId(2), bw_capacity: 100, bw_unit_price: 2 },
    ];
    let net = SubstrateNetwork::new(1, &nodes, &links).unwrap();
    let vnr = VirtualNetworkRequest {
        id: VnrId(0),
        arrival_time: 10.0,
        lifetime: 1000.0,
        cpu_demands: vec![2, 3],
        links: vec![VirtualLink { a: 0, b: 1, bw: 4 }],
    };
    for alg in Algorithm::ALL {
        let mut expired_at = None;
        let out = simulate(net.clone(), std::slice::from_ref(&vnr), 100.0, alg, &AlgorithmParams::default(), 1, |n, e| {
            if let SimEvent::Expired { time, .. } = e {
                expired_at = Some(*time);
                assert_eq!(n.active_count(), 0);
            }
        });
        let r = &out.records[0];
        assert_eq!(r.acceptance_ratio, Some(1.0));
        assert_eq!(r.revenue, 2 + 3 + 4);
        // the two hosts are adjacent in the cheapest mapping
        assert_eq!(r.cost, 9);
        assert_eq!(expired_at, Some(1010.0));
        assert_eq!(out.final_network, net);
    }
}
