//! Fisheye state routing with two scopes.
//!
//! Every node keeps a link-state record per origin and swaps records with
//! its neighbors only. Records for origins within `fsr_inner_hops` go out
//! every `periodic` seconds; the whole table goes out every
//! `fsr_outer_interval`. Nothing is flooded or triggered: a link change just
//! alters the node's own record, which neighbors see at the next exchange.

use std::any::Any;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use super::{
    shortest_hops, Actions, ControlBody, ControlClass, ControlMessage, FsrScope, LinkStateEntry,
    NodeId, ProtocolError, ProtocolSettings, RouteEntry, RoutingProtocol, TimerId,
};
use crate::scenario::ProtocolKind;

#[derive(Debug, Clone, PartialEq)]
struct Record {
    seq: u32,
    neighbors: BTreeSet<NodeId>,
}

type Routes = BTreeMap<NodeId, (NodeId, u32)>;

#[derive(Debug, Clone)]
pub struct Fsr {
    id: NodeId,
    settings: ProtocolSettings,
    neighbors: BTreeMap<NodeId, f64>,
    own_seq: u32,
    table: BTreeMap<NodeId, Record>,
    /// Shortest-hop table, rebuilt on first use after a change.
    routes: RefCell<Option<Routes>>,
}

impl Fsr {
    pub fn new(id: NodeId, settings: ProtocolSettings) -> Self {
        Self {
            id,
            settings,
            neighbors: BTreeMap::new(),
            own_seq: 0,
            table: BTreeMap::new(),
            routes: RefCell::new(None),
        }
    }

    pub fn neighbors(&self) -> BTreeSet<NodeId> {
        self.neighbors.keys().copied().collect()
    }

    pub fn known_origins(&self) -> BTreeSet<NodeId> {
        self.table.keys().copied().collect()
    }

    fn own_record(&self) -> LinkStateEntry {
        LinkStateEntry {
            origin: self.id,
            seq: self.own_seq,
            neighbors: self.neighbors.keys().copied().collect(),
        }
    }

    fn neighbors_changed(&mut self) {
        self.own_seq = self.own_seq.wrapping_add(1);
        self.invalidate_routes();
    }

    fn invalidate_routes(&mut self) {
        *self.routes.get_mut() = None;
    }

    fn with_routes<R>(&self, f: impl FnOnce(&Routes) -> R) -> R {
        let mut cache = self.routes.borrow_mut();
        f(cache.get_or_insert_with(|| self.build_routes()))
    }

    fn build_routes(&self) -> Routes {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = self
            .table
            .iter()
            .map(|(&o, r)| (o, r.neighbors.clone()))
            .collect();
        adj.insert(self.id, self.neighbors());
        shortest_hops(self.id, &adj)
    }

    fn update(&self, scope: FsrScope, now: f64) -> ControlMessage {
        let mut entries = vec![self.own_record()];
        self.with_routes(|routes| {
            for (&origin, rec) in &self.table {
                let in_scope = match scope {
                    FsrScope::Outer => true,
                    FsrScope::Inner => routes
                        .get(&origin)
                        .is_some_and(|r| r.1 <= self.settings.fsr_inner_hops),
                };
                if in_scope {
                    entries.push(LinkStateEntry {
                        origin,
                        seq: rec.seq,
                        neighbors: rec.neighbors.iter().copied().collect(),
                    });
                }
            }
        });
        ControlMessage::new(
            self.id,
            now,
            ControlClass::Periodic,
            ControlBody::FsrScopedUpdate { scope, entries },
        )
    }

    fn expire(&mut self, now: f64) {
        let limit = self.settings.loss_intervals as f64 * self.settings.periodic;
        let before = self.neighbors.len();
        self.neighbors.retain(|_, &mut heard| now - heard <= limit);
        if self.neighbors.len() != before {
            self.neighbors_changed();
        }
    }
}

impl RoutingProtocol for Fsr {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Fsr
    }

    fn node(&self) -> NodeId {
        self.id
    }

    fn periodic_timers(&self) -> Vec<(TimerId, f64)> {
        vec![
            (TimerId::FsrInner, self.settings.periodic),
            (TimerId::FsrOuter, self.settings.fsr_outer_interval),
        ]
    }

    fn on_timer(&mut self, timer: TimerId, now: f64) -> Result<Actions, ProtocolError> {
        let mut actions = Actions::default();
        let (scope, period) = match timer {
            TimerId::FsrInner => (FsrScope::Inner, self.settings.periodic),
            TimerId::FsrOuter => (FsrScope::Outer, self.settings.fsr_outer_interval),
            other => {
                return Err(ProtocolError::UnknownTimer {
                    protocol: ProtocolKind::Fsr,
                    node: self.id,
                    timer: other,
                })
            }
        };
        self.expire(now);
        actions.broadcast(self.update(scope, now));
        actions.arm(period, timer);
        Ok(actions)
    }

    fn on_control_message(&mut self, msg: &ControlMessage, from: NodeId, now: f64) -> Actions {
        let mut actions = Actions::default();
        let ControlBody::FsrScopedUpdate { entries, .. } = &msg.body else {
            actions.anomalies += 1;
            return actions;
        };
        let mut changed = self.neighbors.insert(from, now).is_none();
        if changed {
            self.own_seq = self.own_seq.wrapping_add(1);
        }
        for e in entries {
            if e.origin == self.id {
                continue;
            }
            let newer = self
                .table
                .get(&e.origin)
                .map_or(true, |r| e.seq.wrapping_sub(r.seq) as i32 > 0);
            if newer {
                self.table.insert(
                    e.origin,
                    Record {
                        seq: e.seq,
                        neighbors: e.neighbors.iter().copied().collect(),
                    },
                );
                changed = true;
            }
        }
        if changed {
            self.invalidate_routes();
        }
        actions
    }

    fn on_link_change(&mut self, neighbor: NodeId, up: bool, now: f64) -> Actions {
        let changed = if up {
            self.neighbors.insert(neighbor, now).is_none()
        } else {
            self.neighbors.remove(&neighbor).is_some()
        };
        if changed {
            self.neighbors_changed();
        }
        Actions::default()
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
