//! Optimized link state routing, HELLO and TC only.
//!
//! HELLOs go out every `hello` seconds and list the sender's neighbors, each
//! tagged with whether it was chosen as an MPR. A node learns its MPR selectors
//! from those tags. Nodes with at least one selector originate a TC every
//! `2 * hello` seconds listing their selectors. TCs are flooded, and a node
//! relays a TC only when the neighbor it came from is one of its selectors.

use std::any::Any;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use super::{
    compute_mpr, shortest_hops, Actions, ControlBody, ControlClass, ControlMessage, LinkStatus,
    NodeId, ProtocolError, ProtocolSettings, RouteEntry, RoutingProtocol, TimerId,
};
use crate::scenario::{ProtocolKind, TcTrigger};

#[derive(Debug, Clone)]
struct Neighbor {
    last_heard: f64,
    /// Neighbors this neighbor reported in its last HELLO, self excluded.
    two_hop: BTreeSet<NodeId>,
}

#[derive(Debug, Clone)]
struct Topology {
    ansn: u32,
    selectors: BTreeSet<NodeId>,
    expires: f64,
}

type Routes = BTreeMap<NodeId, (NodeId, u32)>;

#[derive(Debug, Clone)]
pub struct Olsr {
    id: NodeId,
    settings: ProtocolSettings,
    neighbors: BTreeMap<NodeId, Neighbor>,
    mpr: BTreeSet<NodeId>,
    selectors: BTreeSet<NodeId>,
    ansn: u32,
    msg_seq: u32,
    topology: BTreeMap<NodeId, Topology>,
    /// `(origin, msg_seq)` of TCs already processed, with expiry.
    seen: BTreeMap<(NodeId, u32), f64>,
    /// Shortest-hop table, rebuilt on first use after a change.
    routes: RefCell<Option<Routes>>,
    flush_armed: bool,
    uncoverable: u32,
}

impl Olsr {
    pub fn new(id: NodeId, settings: ProtocolSettings) -> Self {
        Self {
            id,
            settings,
            neighbors: BTreeMap::new(),
            mpr: BTreeSet::new(),
            selectors: BTreeSet::new(),
            ansn: 0,
            msg_seq: 0,
            topology: BTreeMap::new(),
            seen: BTreeMap::new(),
            routes: RefCell::new(None),
            flush_armed: false,
            uncoverable: 0,
        }
    }

    pub fn tc_interval(&self) -> f64 {
        2.0 * self.settings.hello
    }

    fn hold_time(&self) -> f64 {
        3.0 * self.tc_interval()
    }

    pub fn mpr_set(&self) -> &BTreeSet<NodeId> {
        &self.mpr
    }

    pub fn selectors(&self) -> &BTreeSet<NodeId> {
        &self.selectors
    }

    pub fn neighbors(&self) -> BTreeSet<NodeId> {
        self.neighbors.keys().copied().collect()
    }

    /// Strict 2-hop map as fed to MPR selection: target -> reporting neighbors.
    pub fn two_hop_map(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut map: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for (&nb, state) in &self.neighbors {
            for &t in &state.two_hop {
                map.entry(t).or_default().insert(nb);
            }
        }
        map
    }

    /// Origins with a live topology entry.
    pub fn topology_origins(&self) -> BTreeSet<NodeId> {
        self.topology.keys().copied().collect()
    }

    fn recompute_mpr(&mut self) {
        let set = compute_mpr(self.id, &self.neighbors(), &self.two_hop_map());
        self.uncoverable += set.uncoverable.len() as u32;
        self.mpr = set.relays;
    }

    fn invalidate_routes(&mut self) {
        *self.routes.get_mut() = None;
    }

    fn with_routes<R>(&self, f: impl FnOnce(&Routes) -> R) -> R {
        let mut cache = self.routes.borrow_mut();
        f(cache.get_or_insert_with(|| self.build_routes()))
    }

    fn build_routes(&self) -> Routes {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut link = |a: NodeId, b: NodeId| {
            if a != b {
                adj.entry(a).or_default().insert(b);
                adj.entry(b).or_default().insert(a);
            }
        };
        for (&nb, state) in &self.neighbors {
            for &t in &state.two_hop {
                link(nb, t);
            }
        }
        for (&origin, t) in &self.topology {
            for &s in &t.selectors {
                link(origin, s);
            }
        }
        // First hops must be current neighbors, whatever stale entries say.
        adj.insert(self.id, self.neighbors());
        shortest_hops(self.id, &adj)
    }

    fn set_selector(&mut self, nb: NodeId, selected: bool, actions: &mut Actions) {
        let changed = if selected {
            self.selectors.insert(nb)
        } else {
            self.selectors.remove(&nb)
        };
        if changed {
            self.selectors_changed(actions);
        }
    }

    fn selectors_changed(&mut self, actions: &mut Actions) {
        self.ansn = self.ansn.wrapping_add(1);
        if self.settings.tc_trigger == TcTrigger::Immediate && !self.flush_armed {
            self.flush_armed = true;
            actions.arm(0.0, TimerId::OlsrTcFlush);
        }
    }

    fn drop_neighbor(&mut self, nb: NodeId, actions: &mut Actions) -> bool {
        if self.neighbors.remove(&nb).is_none() {
            return false;
        }
        self.set_selector(nb, false, actions);
        true
    }

    fn tc(&mut self, now: f64, class: ControlClass) -> Option<ControlMessage> {
        // Only nodes selected as MPR by someone originate TCs.
        if self.selectors.is_empty() {
            return None;
        }
        self.msg_seq = self.msg_seq.wrapping_add(1);
        Some(ControlMessage::new(
            self.id,
            now,
            class,
            ControlBody::OlsrTc {
                ansn: self.ansn,
                msg_seq: self.msg_seq,
                selectors: self.selectors.iter().copied().collect(),
            },
        ))
    }

    fn hello(&self, now: f64) -> ControlMessage {
        let neighbors = self
            .neighbors
            .keys()
            .map(|&nb| {
                let status = if self.mpr.contains(&nb) {
                    LinkStatus::Mpr
                } else {
                    LinkStatus::Symmetric
                };
                (nb, status)
            })
            .collect();
        ControlMessage::new(
            self.id,
            now,
            ControlClass::Periodic,
            ControlBody::OlsrHello { neighbors },
        )
    }

    fn expire(&mut self, now: f64, actions: &mut Actions) -> bool {
        let limit = self.settings.loss_intervals as f64 * self.settings.hello;
        let lost: Vec<NodeId> = self
            .neighbors
            .iter()
            .filter(|(_, s)| now - s.last_heard > limit)
            .map(|(&nb, _)| nb)
            .collect();
        let mut changed = false;
        for nb in lost {
            changed |= self.drop_neighbor(nb, actions);
        }
        let before = self.topology.len();
        self.topology.retain(|_, t| t.expires > now);
        changed |= self.topology.len() != before;
        self.seen.retain(|_, &mut exp| exp > now);
        changed
    }

    fn on_hello(
        &mut self,
        from: NodeId,
        neighbors: &[(NodeId, LinkStatus)],
        now: f64,
        actions: &mut Actions,
    ) {
        let two_hop: BTreeSet<NodeId> = neighbors
            .iter()
            .map(|e| e.0)
            .filter(|&t| t != self.id)
            .collect();
        let selected = neighbors
            .iter()
            .any(|&(t, s)| t == self.id && s == LinkStatus::Mpr);
        let changed = match self.neighbors.get_mut(&from) {
            Some(state) => {
                state.last_heard = now;
                let changed = state.two_hop != two_hop;
                state.two_hop = two_hop;
                changed
            }
            None => {
                self.neighbors.insert(
                    from,
                    Neighbor {
                        last_heard: now,
                        two_hop,
                    },
                );
                true
            }
        };
        self.set_selector(from, selected, actions);
        if changed {
            self.recompute_mpr();
            self.invalidate_routes();
        }
    }

    fn on_tc(&mut self, msg: &ControlMessage, from: NodeId, now: f64, actions: &mut Actions) {
        let ControlBody::OlsrTc {
            ansn,
            msg_seq,
            selectors,
        } = &msg.body
        else {
            return;
        };
        if !self.neighbors.contains_key(&from) {
            actions.anomalies += 1;
            return;
        }
        let origin = msg.header.origin;
        if origin == self.id {
            return;
        }
        let hold = self.hold_time();
        if self.seen.insert((origin, *msg_seq), now + hold).is_some() {
            return;
        }
        let fresh = match self.topology.get(&origin) {
            Some(t) => ansn.wrapping_sub(t.ansn) as i32 >= 0,
            None => true,
        };
        if fresh {
            let selectors: BTreeSet<NodeId> = selectors.iter().copied().collect();
            let changed = self
                .topology
                .get(&origin)
                .map_or(true, |t| t.selectors != selectors);
            self.topology.insert(
                origin,
                Topology {
                    ansn: *ansn,
                    selectors,
                    expires: now + hold,
                },
            );
            if changed {
                self.invalidate_routes();
            }
        }
        if self.selectors.contains(&from) {
            actions.forward(msg.clone());
        }
    }
}

impl RoutingProtocol for Olsr {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Olsr
    }

    fn node(&self) -> NodeId {
        self.id
    }

    fn periodic_timers(&self) -> Vec<(TimerId, f64)> {
        vec![
            (TimerId::OlsrHello, self.settings.hello),
            (TimerId::OlsrTc, self.tc_interval()),
        ]
    }

    fn on_timer(&mut self, timer: TimerId, now: f64) -> Result<Actions, ProtocolError> {
        let mut actions = Actions::default();
        match timer {
            TimerId::OlsrHello => {
                if self.expire(now, &mut actions) {
                    self.recompute_mpr();
                    self.invalidate_routes();
                }
                actions.broadcast(self.hello(now));
                actions.arm(self.settings.hello, TimerId::OlsrHello);
            }
            TimerId::OlsrTc => {
                if let Some(tc) = self.tc(now, ControlClass::Periodic) {
                    actions.broadcast(tc);
                }
                actions.arm(self.tc_interval(), TimerId::OlsrTc);
            }
            TimerId::OlsrTcFlush => {
                self.flush_armed = false;
                if let Some(tc) = self.tc(now, ControlClass::Triggered) {
                    actions.broadcast(tc);
                }
            }
            other => {
                return Err(ProtocolError::UnknownTimer {
                    protocol: ProtocolKind::Olsr,
                    node: self.id,
                    timer: other,
                })
            }
        }
        actions.anomalies += std::mem::take(&mut self.uncoverable);
        Ok(actions)
    }

    fn on_control_message(&mut self, msg: &ControlMessage, from: NodeId, now: f64) -> Actions {
        let mut actions = Actions::default();
        match &msg.body {
            ControlBody::OlsrHello { neighbors } => {
                self.on_hello(from, neighbors, now, &mut actions)
            }
            ControlBody::OlsrTc { .. } => self.on_tc(msg, from, now, &mut actions),
            _ => actions.anomalies += 1,
        }
        actions.anomalies += std::mem::take(&mut self.uncoverable);
        actions
    }

    fn on_link_change(&mut self, neighbor: NodeId, up: bool, now: f64) -> Actions {
        let mut actions = Actions::default();
        let changed = if up {
            match self.neighbors.get_mut(&neighbor) {
                Some(s) => {
                    s.last_heard = now;
                    false
                }
                None => {
                    self.neighbors.insert(
                        neighbor,
                        Neighbor {
                            last_heard: now,
                            two_hop: BTreeSet::new(),
                        },
                    );
                    true
                }
            }
        } else {
            self.drop_neighbor(neighbor, &mut actions)
        };
        if changed {
            self.recompute_mpr();
            self.invalidate_routes();
        }
        actions.anomalies += std::mem::take(&mut self.uncoverable);
        actions
    }

    fn next_hop(&self, destination: NodeId) -> Option<NodeId> {
        self.with_routes(|r| r.get(&destination).map(|r| r.0))
    }

    fn routes(&self) -> Vec<RouteEntry> {
        self.with_routes(|routes| {
            routes
                .iter()
                .map(|(&d, &(next_hop, hops))| RouteEntry {
                    destination: d,
                    next_hop,
                    hops,
                    seq: None,
                    installed_at: 0.0,
                    settling: false,
                    learned_from: next_hop,
                })
                .collect()
        })
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
