use manet_overhead::protocols::NodeId;
use manet_overhead::scenario::{MobilityModel, ProtocolKind, ScenarioConfig};
use manet_overhead::sim::{self, Flow, Position, Simulation};

#[test]
fn three_node_line_delivers_everything_with_dsdv() {
    let mut c = ScenarioConfig::default();
    c.network.nodes = 3;
    c.network.area_m = 400.0;
    c.mobility.model = MobilityModel::Static;
    c.protocol.name = ProtocolKind::Dsdv;
    c.sim.duration_s = 60.0;
    let line = (0..3)
        .map(|i| Position {
            x: 200.0 * i as f64,
            y: 0.0,
        })
        .collect();
    let flows = vec![
        Flow {
            source: NodeId(0),
            destination: NodeId(2),
        },
        Flow {
            source: NodeId(2),
            destination: NodeId(0),
        },
    ];
    let s = Simulation::builder(c, 1)
        .positions(line)
        .flows(flows)
        .build()
        .unwrap();
    assert_eq!(s.route_hops(NodeId(0), NodeId(2)), None);
    let r = s.run().unwrap();
    assert!(r.data_sent > 0);
    assert_eq!(r.delivery_ratio(), Some(1.0));
    assert_eq!(r.mean_hops, Some(2.0));
}

#[test]
fn olsr_control_grows_with_node_count() {
    let median = |n: u32| {
        let mut v: Vec<u64> = (1..=3)
            .map(|seed| {
                let mut c = ScenarioConfig::default();
                c.protocol.name = ProtocolKind::Olsr;
                c.network.nodes = n;
                c.sim.duration_s = 40.0;
                sim::run(&c, seed).unwrap().ctrl_transmissions
            })
            .collect();
        v.sort();
        v[1]
    };
    let counts: Vec<u64> = [10, 30, 50].into_iter().map(median).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}
