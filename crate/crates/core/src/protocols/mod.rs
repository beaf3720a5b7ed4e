//! Proactive routing protocols behind one event-driven interface.
//!
//! Each node owns one protocol instance. The simulation kernel calls the
//! instance on timer expiry, control-message reception and link changes.
//! The instance answers with [`Actions`]: messages to broadcast and timers
//! to arm. Data forwarding only consults [`RoutingProtocol::next_hop`].

mod dsdv;
mod fsr;
mod message;
mod mpr;
mod olsr;

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

pub use dsdv::Dsdv;
pub use fsr::Fsr;
pub use message::*;
pub use mpr::{compute_mpr, MprSet};
pub use olsr::Olsr;

use crate::scenario::{ProtocolConfig, ProtocolKind, TcTrigger};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("{protocol} at {node} has no timer {timer:?}")]
    UnknownTimer {
        protocol: ProtocolKind,
        node: NodeId,
        timer: TimerId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimerId {
    DsdvPeriodic,
    DsdvTriggerFlush,
    DsdvSettle,
    OlsrHello,
    OlsrTc,
    OlsrTcFlush,
    FsrInner,
    FsrOuter,
}

/// A message handed to the transport for one-hop broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub message: ControlMessage,
    /// Relay of a message originated elsewhere.
    pub forwarded: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Actions {
    pub broadcasts: Vec<Outbound>,
    /// `(delay, timer)` pairs, delay relative to now.
    pub timers: Vec<(f64, TimerId)>,
    /// Inputs that were dropped as inconsistent (e.g. from a non-neighbor).
    pub anomalies: u32,
}

impl Actions {
    fn broadcast(&mut self, message: ControlMessage) {
        self.broadcasts.push(Outbound {
            message,
            forwarded: false,
        });
    }

    fn forward(&mut self, message: ControlMessage) {
        self.broadcasts.push(Outbound {
            message,
            forwarded: true,
        });
    }

    fn arm(&mut self, delay: f64, timer: TimerId) {
        self.timers.push((delay, timer));
    }
}

/// Snapshot of one routing-table row.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hops: u32,
    /// Destination sequence number (DSDV only).
    pub seq: Option<u32>,
    pub installed_at: f64,
    /// A newer route is held back until its settling time ends (DSDV only).
    pub settling: bool,
    pub learned_from: NodeId,
}

/// Protocol timing knobs, resolved from [`ProtocolConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSettings {
    pub periodic: f64,
    pub hello: f64,
    pub settling: f64,
    pub fsr_inner_hops: u32,
    pub fsr_outer_interval: f64,
    pub loss_intervals: u32,
    pub tc_trigger: TcTrigger,
}

impl From<&ProtocolConfig> for ProtocolSettings {
    fn from(c: &ProtocolConfig) -> Self {
        Self {
            periodic: c.periodic_s,
            hello: c.hello_s,
            settling: c.settling(),
            fsr_inner_hops: c.fsr_inner_hops,
            fsr_outer_interval: c.fsr_outer_interval(),
            loss_intervals: c.neighbor_loss_intervals,
            tc_trigger: c.tc_trigger,
        }
    }
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        (&ProtocolConfig::default()).into()
    }
}

pub trait RoutingProtocol {
    fn kind(&self) -> ProtocolKind;

    fn node(&self) -> NodeId;

    /// Periodic timers to arm at start, with their period. The kernel picks
    /// a random initial phase within one period.
    fn periodic_timers(&self) -> Vec<(TimerId, f64)>;

    fn on_timer(&mut self, timer: TimerId, now: f64) -> Result<Actions, ProtocolError>;

    fn on_control_message(&mut self, msg: &ControlMessage, from: NodeId, now: f64) -> Actions;

    fn on_link_change(&mut self, neighbor: NodeId, up: bool, now: f64) -> Actions;

    /// Next hop toward `destination`, or `None` for self and unknown or
    /// unusable destinations.
    fn next_hop(&self, destination: NodeId) -> Option<NodeId>;

    fn routes(&self) -> Vec<RouteEntry>;

    fn as_any(&self) -> &dyn Any;
}

pub fn build(
    kind: ProtocolKind,
    node: NodeId,
    settings: ProtocolSettings,
) -> Box<dyn RoutingProtocol> {
    match kind {
        ProtocolKind::Dsdv => Box::new(Dsdv::new(node, settings)),
        ProtocolKind::Olsr => Box::new(Olsr::new(node, settings)),
        ProtocolKind::Fsr => Box::new(Fsr::new(node, settings)),
    }
}

/// Hop-count BFS over an adjacency map. Returns `destination -> (first hop,
/// hops)` for every node reachable from `source`.
pub(crate) fn shortest_hops(
    source: NodeId,
    adjacency: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> BTreeMap<NodeId, (NodeId, u32)> {
    let mut routes = BTreeMap::new();
    let mut queue = VecDeque::new();
    if let Some(first) = adjacency.get(&source) {
        for &nb in first {
            if nb != source && !routes.contains_key(&nb) {
                routes.insert(nb, (nb, 1));
                queue.push_back(nb);
            }
        }
    }
    while let Some(u) = queue.pop_front() {
        let (first_hop, hops) = routes[&u];
        if let Some(next) = adjacency.get(&u) {
            for &v in next {
                if v != source && !routes.contains_key(&v) {
                    routes.insert(v, (first_hop, hops + 1));
                    queue.push_back(v);
                }
            }
        }
    }
    routes
}
