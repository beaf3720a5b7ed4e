//! Deterministic discrete-event simulation of a mobile ad hoc network.
//!
//! One run owns one seeded generator, one event queue and one protocol
//! instance per node. Nothing is shared between runs, so runs may execute in
//! parallel while each stays single-threaded.

mod mobility;
mod queue;

use std::fmt;
use std::io::Write;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use mobility::{LinkTable, NodeState, Position};
pub use queue::EventQueue;

use crate::metrics::{DropReason, MetricsCollector, MetricsError, MetricsRecord};
use crate::protocols::{
    build, Actions, ControlMessage, NodeId, ProtocolError, ProtocolSettings, RoutingProtocol,
    TimerId,
};
use crate::scenario::{ConfigError, MobilityModel, ScenarioConfig};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled at {at}, before the clock at {now}")]
    PastEvent { at: f64, now: f64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("trace output failed: {0}")]
    Trace(#[from] std::io::Error),
    #[error("{0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub flow: u32,
    pub source: NodeId,
    pub destination: NodeId,
    pub payload_bytes: u32,
    pub created_at: f64,
    /// Links traversed so far.
    pub hop_count: u32,
    /// Arrival time at every node visited, source first.
    pub hop_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Control(Rc<ControlMessage>),
    Data(Box<DataPacket>),
}

#[derive(Debug, Clone)]
pub enum EventKind {
    TimerFire(NodeId, TimerId),
    Delivery {
        from: NodeId,
        to: NodeId,
        link_version: u32,
        payload: Payload,
    },
    MobilityStep,
    LinkChange(NodeId, NodeId, bool),
    TrafficGeneration(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flow {
    pub source: NodeId,
    pub destination: NodeId,
}

/// Builder for runs that need explicit placement, flows or tracing.
pub struct SimulationBuilder {
    config: ScenarioConfig,
    seed: u64,
    positions: Option<Vec<Position>>,
    flows: Option<Vec<Flow>>,
    trace: Option<Box<dyn Write>>,
}

impl SimulationBuilder {
    pub fn positions(mut self, positions: Vec<Position>) -> Self {
        self.positions = Some(positions);
        self
    }

    pub fn flows(mut self, flows: Vec<Flow>) -> Self {
        self.flows = Some(flows);
        self
    }

    pub fn trace(mut self, out: Box<dyn Write>) -> Self {
        self.trace = Some(out);
        self
    }

    pub fn build(self) -> Result<Simulation, SimError> {
        Simulation::assemble(self)
    }
}

pub struct Simulation {
    config: ScenarioConfig,
    queue: EventQueue<EventKind>,
    nodes: Vec<NodeState>,
    links: LinkTable,
    protocols: Vec<Box<dyn RoutingProtocol>>,
    flows: Vec<Flow>,
    busy_until: Vec<f64>,
    metrics: MetricsCollector,
    rng: ChaCha8Rng,
    mobility_steps: u64,
    trace: Option<Box<dyn Write>>,
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("now", &self.queue.now())
            .field("nodes", &self.nodes.len())
            .field("pending", &self.queue.len())
            .finish()
    }
}

impl Simulation {
    pub fn builder(config: ScenarioConfig, seed: u64) -> SimulationBuilder {
        SimulationBuilder {
            config,
            seed,
            positions: None,
            flows: None,
            trace: None,
        }
    }

    pub fn new(config: ScenarioConfig, seed: u64) -> Result<Self, SimError> {
        Self::builder(config, seed).build()
    }

    fn assemble(b: SimulationBuilder) -> Result<Self, SimError> {
        b.config.validate()?;
        let config = b.config;
        let n = config.network.nodes as usize;
        let area = config.network.area_m;
        let mut rng = ChaCha8Rng::seed_from_u64(b.seed);

        let positions = match b.positions {
            Some(p) if p.len() == n => p,
            Some(p) => {
                return Err(SimError::Setup(format!(
                    "{} positions given for {n} nodes",
                    p.len()
                )));
            }
            None => (0..n)
                .map(|_| Position {
                    x: rng.gen_range(0.0..=area),
                    y: rng.gen_range(0.0..=area),
                })
                .collect(),
        };
        let flows = match b.flows {
            Some(f) => {
                if let Some(bad) = f
                    .iter()
                    .find(|f| f.source.index() >= n || f.destination.index() >= n)
                {
                    return Err(SimError::Setup(format!(
                        "flow {bad:?} names a node outside 0..{n}"
                    )));
                }
                f
            }
            None => (0..config.traffic.flows)
                .map(|_| {
                    let s = rng.gen_range(0..n as u32);
                    let mut d = rng.gen_range(0..n as u32 - 1);
                    if d >= s {
                        d += 1;
                    }
                    Flow {
                        source: NodeId(s),
                        destination: NodeId(d),
                    }
                })
                .collect(),
        };

        let pause = config.mobility.pause_s;
        let nodes: Vec<NodeState> = positions
            .iter()
            .map(|&p| NodeState::new(p, pause))
            .collect();
        let mut links = LinkTable::new(n);
        links.refresh(&positions, config.network.range_m);

        let settings = ProtocolSettings::from(&config.protocol);
        let protocols: Vec<Box<dyn RoutingProtocol>> = (0..n as u32)
            .map(|i| build(config.protocol.name, NodeId(i), settings))
            .collect();

        let mut sim = Simulation {
            metrics: MetricsCollector::new(config.sim.nrl),
            queue: EventQueue::new(),
            nodes,
            links,
            protocols,
            flows,
            busy_until: vec![0.0; n],
            rng,
            mobility_steps: 0,
            trace: b.trace,
            config,
        };

        for i in 0..n {
            for (timer, period) in sim.protocols[i].periodic_timers() {
                let phase = sim.rng.gen_range(0.0..period);
                sim.queue
                    .schedule(phase, EventKind::TimerFire(NodeId(i as u32), timer))?;
            }
        }
        let rate = sim.config.traffic.rate_pps;
        if rate > 0.0 {
            for f in 0..sim.flows.len() as u32 {
                let start = sim.config.traffic.start_s + sim.rng.gen_range(0.0..1.0 / rate);
                sim.queue.schedule(start, EventKind::TrafficGeneration(f))?;
            }
        }
        if sim.is_mobile() {
            sim.queue
                .schedule(sim.config.mobility.step_s, EventKind::MobilityStep)?;
        }
        Ok(sim)
    }

    fn is_mobile(&self) -> bool {
        let m = &self.config.mobility;
        m.model == MobilityModel::RandomWaypoint && m.speed_max > 0.0 && self.nodes.len() > 1
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn protocol(&self, node: NodeId) -> &dyn RoutingProtocol {
        self.protocols[node.index()].as_ref()
    }

    pub fn metrics(&self) -> &MetricsCollector {
        &self.metrics
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<(), SimError> {
        self.queue.schedule(time, kind)
    }

    /// Hops from `src` to `dst` following next hops over live links, or
    /// `None` if the walk dead-ends, loops or uses a down link.
    pub fn route_hops(&self, src: NodeId, dst: NodeId) -> Option<u32> {
        let mut at = src;
        let mut hops = 0;
        let mut seen = vec![false; self.nodes.len()];
        while at != dst {
            if std::mem::replace(&mut seen[at.index()], true) {
                return None;
            }
            let next = self.protocols[at.index()].next_hop(dst)?;
            if !self.links.is_up(at.index(), next.index()) {
                return None;
            }
            at = next;
            hops += 1;
        }
        Some(hops)
    }

    /// Moves every node by `dt` and updates the link table. Returns one
    /// change per pair whose distance crossed the radio range.
    pub fn step_mobility(&mut self, dt: f64) -> Vec<(NodeId, NodeId, bool)> {
        let area = self.config.network.area_m;
        for node in &mut self.nodes {
            node.advance(dt, area, &self.config.mobility, &mut self.rng);
        }
        let positions: Vec<Position> = self.nodes.iter().map(|n| n.position).collect();
        self.links
            .refresh(&positions, self.config.network.range_m)
            .into_iter()
            .map(|(a, b, up)| (NodeId(a as u32), NodeId(b as u32), up))
            .collect()
    }

    /// Processes every event strictly before `t` (capped at the configured
    /// duration).
    pub fn run_until(&mut self, t: f64) -> Result<(), SimError> {
        let end = t.min(self.config.sim.duration_s);
        while let Some(next) = self.queue.peek_time() {
            if next >= end {
                break;
            }
            let (now, kind) = self.queue.pop().expect("peeked");
            self.handle(now, kind)?;
        }
        Ok(())
    }

    /// Runs to the configured duration and returns the record.
    pub fn run(mut self) -> Result<MetricsRecord, SimError> {
        self.run_until(self.config.sim.duration_s)?;
        self.finish()
    }

    pub fn finish(mut self) -> Result<MetricsRecord, SimError> {
        let in_flight = self
            .queue
            .pending()
            .filter(|k| {
                matches!(
                    k,
                    EventKind::Delivery {
                        payload: Payload::Data(_),
                        ..
                    }
                )
            })
            .count();
        self.metrics.set_in_flight(in_flight as u64);
        if let Some(t) = self.trace.as_mut() {
            t.flush()?;
        }
        let duration = self.config.sim.duration_s;
        if duration == 0.0 {
            return Ok(MetricsRecord::empty(self.config.sim.nrl));
        }
        Ok(self.metrics.finalize(duration)?)
    }

    fn trace(
        &mut self,
        now: f64,
        node: NodeId,
        kind: &str,
        details: fmt::Arguments<'_>,
    ) -> Result<(), SimError> {
        if let Some(t) = self.trace.as_mut() {
            writeln!(t, "{now:.9} {node} {kind} {details}")?;
        }
        Ok(())
    }

    fn handle(&mut self, now: f64, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::TimerFire(node, timer) => {
                let actions = self.protocols[node.index()].on_timer(timer, now)?;
                self.apply(node, actions, now)?;
            }
            EventKind::Delivery {
                from,
                to,
                link_version,
                payload,
            } => {
                let intact = self.links.is_up(from.index(), to.index())
                    && self.links.version(from.index(), to.index()) == link_version;
                match payload {
                    Payload::Control(msg) => {
                        if intact {
                            let actions =
                                self.protocols[to.index()].on_control_message(&msg, from, now);
                            self.apply(to, actions, now)?;
                        } else {
                            self.trace(
                                now,
                                to,
                                "ctrl_lost",
                                format_args!("{} from {from}", msg.kind().as_str()),
                            )?;
                        }
                    }
                    Payload::Data(mut packet) => {
                        if intact {
                            packet.hop_times.push(now);
                            self.forward(to, packet, now)?;
                        } else {
                            self.drop_data(to, &packet, DropReason::LinkBroken, now)?;
                        }
                    }
                }
            }
            EventKind::MobilityStep => {
                let changes = self.step_mobility(self.config.mobility.step_s);
                for (a, b, up) in changes {
                    self.queue.schedule(now, EventKind::LinkChange(a, b, up))?;
                }
                self.mobility_steps += 1;
                let next = (self.mobility_steps + 1) as f64 * self.config.mobility.step_s;
                self.queue.schedule(next, EventKind::MobilityStep)?;
            }
            EventKind::LinkChange(a, b, up) => {
                self.trace(
                    now,
                    a,
                    "link",
                    format_args!("{b} {}", if up { "up" } else { "down" }),
                )?;
                let actions = self.protocols[a.index()].on_link_change(b, up, now);
                self.apply(a, actions, now)?;
                let actions = self.protocols[b.index()].on_link_change(a, up, now);
                self.apply(b, actions, now)?;
            }
            EventKind::TrafficGeneration(flow) => {
                let f = self.flows[flow as usize];
                let packet = Box::new(DataPacket {
                    flow,
                    source: f.source,
                    destination: f.destination,
                    payload_bytes: self.config.traffic.payload_bytes,
                    created_at: now,
                    hop_count: 0,
                    hop_times: vec![now],
                });
                self.metrics.record_sent();
                self.trace(
                    now,
                    f.source,
                    "data_gen",
                    format_args!("flow {flow} to {}", f.destination),
                )?;
                self.forward(f.source, packet, now)?;
                let next = now + 1.0 / self.config.traffic.rate_pps;
                self.queue
                    .schedule(next, EventKind::TrafficGeneration(flow))?;
            }
        }
        Ok(())
    }

    /// Serializes `bits` on `node`'s FIFO transmitter; returns the arrival
    /// time at the far end.
    fn transmit(&mut self, node: NodeId, bits: u64, now: f64) -> f64 {
        let start = now.max(self.busy_until[node.index()]);
        let end = start + bits as f64 / self.config.network.bandwidth_bps;
        self.busy_until[node.index()] = end;
        end + self.config.network.propagation_s
    }

    fn apply(&mut self, node: NodeId, actions: Actions, now: f64) -> Result<(), SimError> {
        self.metrics.record_anomalies(actions.anomalies);
        for (delay, timer) in actions.timers {
            self.queue
                .schedule(now + delay, EventKind::TimerFire(node, timer))?;
        }
        for out in actions.broadcasts {
            let mut msg = out.message;
            msg.header.hop_count += 1;
            let bits = msg.size_bits();
            let kind = msg.kind();
            self.metrics.record_control(
                kind,
                msg.header.class,
                !out.forwarded,
                msg.header.hop_count,
                bits,
            );
            self.trace(
                now,
                node,
                "ctrl_tx",
                format_args!(
                    "{} origin {} hop {} bits {bits}",
                    kind.as_str(),
                    msg.header.origin,
                    msg.header.hop_count
                ),
            )?;
            let arrival = self.transmit(node, bits, now);
            let msg = Rc::new(msg);
            let receivers: Vec<usize> = self.links.neighbors(node.index()).collect();
            for r in receivers {
                let link_version = self.links.version(node.index(), r);
                self.queue.schedule(
                    arrival,
                    EventKind::Delivery {
                        from: node,
                        to: NodeId(r as u32),
                        link_version,
                        payload: Payload::Control(Rc::clone(&msg)),
                    },
                )?;
            }
        }
        Ok(())
    }

    fn forward(
        &mut self,
        at: NodeId,
        mut packet: Box<DataPacket>,
        now: f64,
    ) -> Result<(), SimError> {
        if at == packet.destination {
            self.metrics.record_delivery(&packet, now)?;
            self.trace(
                now,
                at,
                "data_rx",
                format_args!("flow {} hops {}", packet.flow, packet.hop_count),
            )?;
            return Ok(());
        }
        if packet.hop_count as usize >= self.nodes.len().saturating_sub(1) {
            return self.drop_data(at, &packet, DropReason::TtlExceeded, now);
        }
        let Some(next) = self.protocols[at.index()].next_hop(packet.destination) else {
            return self.drop_data(at, &packet, DropReason::NoRoute, now);
        };
        if !self.links.is_up(at.index(), next.index()) {
            return self.drop_data(at, &packet, DropReason::LinkDown, now);
        }
        packet.hop_count += 1;
        let bits = 8 * packet.payload_bytes as u64;
        let arrival = self.transmit(at, bits, now);
        let link_version = self.links.version(at.index(), next.index());
        self.queue.schedule(
            arrival,
            EventKind::Delivery {
                from: at,
                to: next,
                link_version,
                payload: Payload::Data(packet),
            },
        )
    }

    fn drop_data(
        &mut self,
        at: NodeId,
        packet: &DataPacket,
        reason: DropReason,
        now: f64,
    ) -> Result<(), SimError> {
        self.metrics.record_drop(reason);
        self.trace(
            now,
            at,
            "data_drop",
            format_args!("flow {} {}", packet.flow, reason.as_str()),
        )
    }
}

/// Validates `config` and runs it to completion.
pub fn run(config: &ScenarioConfig, seed: u64) -> Result<MetricsRecord, SimError> {
    Simulation::new(config.clone(), seed)?.run()
}
