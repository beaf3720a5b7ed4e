//! Destination-sequenced distance vector.
//!
//! Destinations stamp their own entry with an even sequence number that
//! grows by two on every periodic dump. A node that loses the link to a next
//! hop marks the affected routes infinite with the odd successor sequence.
//! A route is adopted when its sequence is newer, or equal with a shorter
//! metric.
//!
//! A newer route that is longer than the installed one, learned from a
//! different neighbor, may still be beaten by a shorter route carrying the
//! same sequence. It is held as pending for the settling time and neither
//! used nor advertised until it settles or something better arrives.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use super::{
    Actions, ControlBody, ControlClass, ControlMessage, DsdvAdvert, NodeId, ProtocolError,
    ProtocolSettings, RouteEntry, RoutingProtocol, TimerId, INFINITE_METRIC,
};
use crate::scenario::ProtocolKind;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Route {
    next_hop: NodeId,
    metric: u32,
    seq: u32,
    installed_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    stable: Route,
    pending: Option<(Route, f64)>,
}

#[derive(Debug, Clone)]
pub struct Dsdv {
    id: NodeId,
    settings: ProtocolSettings,
    own_seq: u32,
    table: BTreeMap<NodeId, Entry>,
    /// Destinations to carry in the next incremental update. May hold `id`.
    changed: BTreeSet<NodeId>,
    flush_armed: bool,
}

fn extend(metric: u32) -> u32 {
    if metric == INFINITE_METRIC {
        INFINITE_METRIC
    } else {
        metric.saturating_add(1).min(INFINITE_METRIC - 1)
    }
}

impl Dsdv {
    pub fn new(id: NodeId, settings: ProtocolSettings) -> Self {
        Self {
            id,
            settings,
            own_seq: 0,
            table: BTreeMap::new(),
            changed: BTreeSet::new(),
            flush_armed: false,
        }
    }

    pub fn own_seq(&self) -> u32 {
        self.own_seq
    }

    /// Sequence number currently installed for `destination`.
    pub fn seq_for(&self, destination: NodeId) -> Option<u32> {
        self.table.get(&destination).map(|e| e.stable.seq)
    }

    pub fn metric_for(&self, destination: NodeId) -> Option<u32> {
        self.table.get(&destination).map(|e| e.stable.metric)
    }

    fn advert(&self, dest: NodeId) -> Option<DsdvAdvert> {
        if dest == self.id {
            return Some(DsdvAdvert {
                destination: self.id,
                metric: 0,
                seq: self.own_seq,
            });
        }
        self.table.get(&dest).map(|e| DsdvAdvert {
            destination: dest,
            metric: e.stable.metric,
            seq: e.stable.seq,
        })
    }

    fn mark(&mut self, dest: NodeId, actions: &mut Actions) {
        self.changed.insert(dest);
        if !self.flush_armed {
            self.flush_armed = true;
            actions.arm(0.0, TimerId::DsdvTriggerFlush);
        }
    }

    fn full_dump(&mut self, now: f64) -> ControlMessage {
        self.own_seq += 2;
        let entries = std::iter::once(self.id)
            .chain(self.table.keys().copied())
            .filter_map(|d| self.advert(d))
            .collect();
        self.changed.clear();
        ControlMessage::new(
            self.id,
            now,
            ControlClass::Periodic,
            ControlBody::DsdvUpdate {
                entries,
                full: true,
                triggered: false,
            },
        )
    }

    fn incremental(&mut self, now: f64) -> Option<ControlMessage> {
        if self.changed.is_empty() {
            return None;
        }
        let changed = std::mem::take(&mut self.changed);
        let entries = changed.into_iter().filter_map(|d| self.advert(d)).collect();
        Some(ControlMessage::new(
            self.id,
            now,
            ControlClass::Triggered,
            ControlBody::DsdvUpdate {
                entries,
                full: false,
                triggered: true,
            },
        ))
    }

    fn promote_settled(&mut self, now: f64, actions: &mut Actions) {
        let mut promoted = Vec::new();
        for (dest, entry) in self.table.iter_mut() {
            if let Some((route, deadline)) = entry.pending {
                if deadline <= now {
                    let metric_changed = route.metric != entry.stable.metric;
                    entry.stable = Route {
                        installed_at: now,
                        ..route
                    };
                    entry.pending = None;
                    if metric_changed {
                        promoted.push(*dest);
                    }
                }
            }
        }
        for d in promoted {
            self.mark(d, actions);
        }
    }

    fn absorb(&mut self, adv: DsdvAdvert, from: NodeId, now: f64, actions: &mut Actions) {
        if adv.destination == self.id {
            // Someone advertises a break of our own route with a newer odd
            // sequence; answer with a fresher even one.
            if adv.seq > self.own_seq {
                self.own_seq = (adv.seq + 2) & !1;
                self.mark(self.id, actions);
            }
            return;
        }
        let candidate = Route {
            next_hop: from,
            metric: extend(adv.metric),
            seq: adv.seq,
            installed_at: now,
        };
        let settling = self.settings.settling;
        let Some(entry) = self.table.get_mut(&adv.destination) else {
            if candidate.metric != INFINITE_METRIC {
                self.table.insert(
                    adv.destination,
                    Entry {
                        stable: candidate,
                        pending: None,
                    },
                );
                self.mark(adv.destination, actions);
            }
            return;
        };

        let stable = entry.stable;
        let mut mark = false;
        let mut arm_settle = false;
        if candidate.seq > stable.seq {
            let not_worse = stable.metric == INFINITE_METRIC || candidate.metric <= stable.metric;
            if candidate.metric == INFINITE_METRIC
                || not_worse
                || from == stable.next_hop
                || settling <= 0.0
            {
                entry.stable = candidate;
                mark = candidate.metric != stable.metric;
                if matches!(entry.pending, Some((p, _)) if p.seq <= candidate.seq) {
                    entry.pending = None;
                }
            } else {
                match entry.pending {
                    Some((p, _)) if p.seq > candidate.seq => {}
                    Some((p, _)) if p.seq == candidate.seq && p.metric <= candidate.metric => {}
                    Some((p, deadline)) if p.seq == candidate.seq => {
                        entry.pending = Some((candidate, deadline));
                    }
                    _ => {
                        entry.pending = Some((candidate, now + settling));
                        arm_settle = true;
                    }
                }
            }
        } else if candidate.seq == stable.seq && candidate.metric < stable.metric {
            entry.stable = candidate;
            mark = true;
        } else if let Some((p, _)) = entry.pending {
            if candidate.seq == p.seq && candidate.metric <= stable.metric {
                // A same-sequence route at least as short as the installed
                // one ends the wait.
                entry.stable = candidate;
                entry.pending = None;
                mark = candidate.metric != stable.metric;
            } else if candidate.seq == p.seq && candidate.metric < p.metric {
                entry.pending = Some((candidate, entry.pending.unwrap().1));
            }
        }

        // A broken installed route gives way to any newer pending one.
        if entry.stable.metric == INFINITE_METRIC {
            if let Some((p, _)) = entry.pending {
                if p.seq > entry.stable.seq {
                    entry.stable = p;
                    entry.pending = None;
                    mark = true;
                }
            }
        }

        if mark {
            self.mark(adv.destination, actions);
        }
        if arm_settle {
            actions.arm(settling, TimerId::DsdvSettle);
        }
    }
}

impl RoutingProtocol for Dsdv {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Dsdv
    }

    fn node(&self) -> NodeId {
        self.id
    }

    fn periodic_timers(&self) -> Vec<(TimerId, f64)> {
        vec![(TimerId::DsdvPeriodic, self.settings.periodic)]
    }

    fn on_timer(&mut self, timer: TimerId, now: f64) -> Result<Actions, ProtocolError> {
        let mut actions = Actions::default();
        match timer {
            TimerId::DsdvPeriodic => {
                self.promote_settled(now, &mut actions);
                let dump = self.full_dump(now);
                actions.broadcast(dump);
                actions.arm(self.settings.periodic, TimerId::DsdvPeriodic);
            }
            TimerId::DsdvTriggerFlush => {
                self.flush_armed = false;
                if let Some(msg) = self.incremental(now) {
                    actions.broadcast(msg);
                }
            }
            TimerId::DsdvSettle => self.promote_settled(now, &mut actions),
            other => {
                return Err(ProtocolError::UnknownTimer {
                    protocol: ProtocolKind::Dsdv,
                    node: self.id,
                    timer: other,
                })
            }
        }
        Ok(actions)
    }

    fn on_control_message(&mut self, msg: &ControlMessage, from: NodeId, now: f64) -> Actions {
        let mut actions = Actions::default();
        match &msg.body {
            ControlBody::DsdvUpdate { entries, .. } => {
                for adv in entries {
                    self.absorb(*adv, from, now, &mut actions);
                }
            }
            _ => actions.anomalies += 1,
        }
        actions
    }

    fn on_link_change(&mut self, neighbor: NodeId, up: bool, now: f64) -> Actions {
        let mut actions = Actions::default();
        if up {
            self.mark(self.id, &mut actions);
            return actions;
        }
        let mut broken = Vec::new();
        for (dest, entry) in self.table.iter_mut() {
            if matches!(entry.pending, Some((p, _)) if p.next_hop == neighbor) {
                entry.pending = None;
            }
            if entry.stable.next_hop == neighbor && entry.stable.metric != INFINITE_METRIC {
                entry.stable.metric = INFINITE_METRIC;
                entry.stable.seq += 1;
                entry.stable.installed_at = now;
                broken.push(*dest);
            }
        }
        for d in broken {
            self.mark(d, &mut actions);
        }
        actions
    }

    fn next_hop(&self, destination: NodeId) -> Option<NodeId> {
        if destination == self.id {
            return None;
        }
        let entry = self.table.get(&destination)?;
        (entry.stable.metric != INFINITE_METRIC).then_some(entry.stable.next_hop)
    }

    fn routes(&self) -> Vec<RouteEntry> {
        self.table
            .iter()
            .filter(|(_, e)| e.stable.metric != INFINITE_METRIC)
            .map(|(d, e)| RouteEntry {
                destination: *d,
                next_hop: e.stable.next_hop,
                hops: e.stable.metric,
                seq: Some(e.stable.seq),
                installed_at: e.stable.installed_at,
                settling: e.pending.is_some(),
                learned_from: e.stable.next_hop,
            })
            .collect()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(from: u32, entries: &[(u32, u32, u32)], full: bool) -> ControlMessage {
        ControlMessage::new(
            NodeId(from),
            0.0,
            ControlClass::Periodic,
            ControlBody::DsdvUpdate {
                entries: entries
                    .iter()
                    .map(|&(d, metric, seq)| DsdvAdvert {
                        destination: NodeId(d),
                        metric,
                        seq,
                    })
                    .collect(),
                full,
                triggered: !full,
            },
        )
    }

    fn node(id: u32) -> Dsdv {
        Dsdv::new(NodeId(id), ProtocolSettings::default())
    }

    #[test]
    fn periodic_dump_bumps_even_sequence() {
        let mut d = node(0);
        let a = d.on_timer(TimerId::DsdvPeriodic, 5.0).unwrap();
        assert_eq!(a.broadcasts.len(), 1);
        assert_eq!(d.own_seq(), 2);
        assert_eq!(a.timers, vec![(5.0, TimerId::DsdvPeriodic)]);
        match &a.broadcasts[0].message.body {
            ControlBody::DsdvUpdate { entries, full, .. } => {
                assert!(*full);
                assert_eq!(
                    entries[0],
                    DsdvAdvert {
                        destination: NodeId(0),
                        metric: 0,
                        seq: 2
                    }
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equal_sequence_worse_metric_is_ignored() {
        let mut d = node(0);
        d.on_control_message(&update(1, &[(1, 0, 2), (9, 2, 4)], true), NodeId(1), 1.0);
        assert_eq!(d.metric_for(NodeId(9)), Some(3));
        let before = d.table.clone();
        let a = d.on_control_message(&update(2, &[(9, 4, 4)], true), NodeId(2), 2.0);
        assert_eq!(d.table, before);
        assert!(a.timers.is_empty());
    }

    #[test]
    fn equal_sequence_better_metric_is_adopted() {
        let mut d = node(0);
        d.on_control_message(&update(1, &[(9, 4, 4)], true), NodeId(1), 1.0);
        d.on_control_message(&update(2, &[(9, 1, 4)], true), NodeId(2), 2.0);
        assert_eq!(d.metric_for(NodeId(9)), Some(2));
        assert_eq!(d.next_hop(NodeId(9)), Some(NodeId(2)));
    }

    #[test]
    fn link_break_marks_infinite_with_odd_sequence_and_triggers_once() {
        let mut d = node(0);
        d.on_control_message(&update(1, &[(1, 0, 2), (5, 1, 6)], true), NodeId(1), 1.0);
        let flush = d.on_timer(TimerId::DsdvTriggerFlush, 1.0).unwrap();
        assert_eq!(flush.broadcasts.len(), 1);

        let a = d.on_link_change(NodeId(1), false, 2.0);
        assert_eq!(a.timers, vec![(0.0, TimerId::DsdvTriggerFlush)]);
        assert_eq!(d.metric_for(NodeId(1)), Some(INFINITE_METRIC));
        assert_eq!(d.seq_for(NodeId(1)), Some(3));
        assert_eq!(d.seq_for(NodeId(5)), Some(7));
        assert_eq!(d.next_hop(NodeId(5)), None);

        let t = d.on_timer(TimerId::DsdvTriggerFlush, 2.0).unwrap();
        assert_eq!(t.broadcasts.len(), 1);
        let msg = &t.broadcasts[0].message;
        assert_eq!(msg.header.class, ControlClass::Triggered);
        match &msg.body {
            ControlBody::DsdvUpdate { entries, full, .. } => {
                assert!(!*full);
                assert!(entries
                    .iter()
                    .all(|e| e.metric == INFINITE_METRIC && e.seq % 2 == 1));
                assert_eq!(entries.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        // Nothing left to flush until something else changes.
        assert!(d
            .on_timer(TimerId::DsdvTriggerFlush, 2.0)
            .unwrap()
            .broadcasts
            .is_empty());
    }

    #[test]
    fn longer_newer_route_settles_before_use() {
        let mut d = node(0);
        d.on_control_message(&update(1, &[(9, 1, 4)], true), NodeId(1), 0.0);
        // Newer sequence via another neighbor, but longer.
        let a = d.on_control_message(&update(2, &[(9, 3, 6)], true), NodeId(2), 1.0);
        assert_eq!(a.timers, vec![(7.5, TimerId::DsdvSettle)]);
        assert_eq!(d.next_hop(NodeId(9)), Some(NodeId(1)));
        assert!(d.routes()[0].settling);
        d.on_timer(TimerId::DsdvSettle, 8.5).unwrap();
        assert_eq!(d.next_hop(NodeId(9)), Some(NodeId(2)));
        assert_eq!(d.seq_for(NodeId(9)), Some(6));
    }

    #[test]
    fn same_sequence_short_route_ends_settling() {
        let mut d = node(0);
        d.on_control_message(&update(1, &[(9, 1, 4)], true), NodeId(1), 0.0);
        d.on_control_message(&update(2, &[(9, 3, 6)], true), NodeId(2), 1.0);
        d.on_control_message(&update(1, &[(9, 1, 6)], true), NodeId(1), 2.0);
        assert_eq!(d.seq_for(NodeId(9)), Some(6));
        assert_eq!(d.metric_for(NodeId(9)), Some(2));
        assert!(!d.routes()[0].settling);
    }

    #[test]
    fn own_break_is_answered_with_fresh_even_sequence() {
        let mut d = node(0);
        d.on_timer(TimerId::DsdvPeriodic, 0.0).unwrap();
        d.on_control_message(
            &update(1, &[(0, INFINITE_METRIC, 3)], false),
            NodeId(1),
            1.0,
        );
        assert_eq!(d.own_seq(), 4);
    }

    #[test]
    fn self_and_unknown_have_no_next_hop() {
        let d = node(3);
        assert_eq!(d.next_hop(NodeId(3)), None);
        assert_eq!(d.next_hop(NodeId(8)), None);
    }

    #[test]
    fn foreign_timer_is_an_error() {
        assert!(node(0).on_timer(TimerId::OlsrHello, 0.0).is_err());
    }
}
