#![allow(dead_code)]

use std::collections::VecDeque;

use manet_overhead::protocols::NodeId;
use manet_overhead::scenario::{MobilityModel, ProtocolKind, ScenarioConfig};
use manet_overhead::sim::{Position, Simulation};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Topology {
    pub positions: Vec<Position>,
    pub range: f64,
    pub area: f64,
}

fn connected(pos: &[Position], range: f64) -> bool {
    let n = pos.len();
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = q.pop_front() {
        for v in 0..n {
            if !seen[v] && pos[u].distance(pos[v]) <= range {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Uniform placement in a square sized for a mean degree near 7, redrawn
/// until connected.
pub fn random_connected(n: usize, rng: &mut ChaCha8Rng) -> Topology {
    let range = 250.0;
    let area = range * (std::f64::consts::PI * n as f64 / 7.0).sqrt();
    loop {
        let positions: Vec<Position> = (0..n)
            .map(|_| Position {
                x: rng.gen_range(0.0..=area),
                y: rng.gen_range(0.0..=area),
            })
            .collect();
        if connected(&positions, range) {
            return Topology {
                positions,
                range,
                area,
            };
        }
    }
}

pub fn topologies(count: usize, seed: u64) -> Vec<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(5..=30);
            random_connected(n, &mut rng)
        })
        .collect()
}

pub fn static_config(t: &Topology, protocol: ProtocolKind, duration: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.network.nodes = t.positions.len() as u32;
    c.network.area_m = t.area;
    c.network.range_m = t.range;
    c.mobility.model = MobilityModel::Static;
    c.protocol.name = protocol;
    c.traffic.flows = 0;
    c.sim.duration_s = duration;
    c
}

pub fn build(t: &Topology, c: ScenarioConfig, seed: u64) -> Simulation {
    Simulation::builder(c, seed)
        .positions(t.positions.clone())
        .build()
        .expect("valid test scenario")
}

/// All-pairs hop distances on the live link graph, by Dijkstra.
pub fn oracle(sim: &Simulation) -> Vec<Vec<Option<u32>>> {
    let n = sim.node_count();
    let mut g: UnGraph<(), u32> = UnGraph::new_undirected();
    let idx: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for (a, b) in sim.links().edges() {
        g.add_edge(idx[a], idx[b], 1);
    }
    idx.iter()
        .map(|&s| {
            let d = dijkstra(&g, s, None, |e| *e.weight());
            idx.iter().map(|t| d.get(t).copied()).collect()
        })
        .collect()
}

/// Pairs whose routed hop count differs from the oracle.
pub fn mismatches(sim: &Simulation) -> Vec<(u32, u32, Option<u32>, Option<u32>)> {
    let truth = oracle(sim);
    let n = sim.node_count();
    let mut bad = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            let expect = truth[s][d];
            let got = sim.route_hops(NodeId(s as u32), NodeId(d as u32));
            if expect.is_some() && got != expect {
                bad.push((s as u32, d as u32, got, expect));
            }
        }
    }
    bad
}
