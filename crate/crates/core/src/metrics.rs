//! Per-run accounting: throughput, delay, normalized routing load and the
//! control-traffic split used to compare runs with the analytical model.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::protocols::{ControlClass, ControlKind};
use crate::scenario::NrlCounting;
use crate::sim::DataPacket;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("delivery at {now} precedes creation at {created}")]
    NegativeDelay { created: f64, now: f64 },
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    /// The forwarding node had no usable route.
    NoRoute,
    /// The route pointed at a neighbor that is out of range.
    LinkDown,
    /// The link went down while the packet was on the air.
    LinkBroken,
    /// Hop limit of `n - 1` reached.
    TtlExceeded,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoRoute => "no_route",
            DropReason::LinkDown => "link_down",
            DropReason::LinkBroken => "link_broken",
            DropReason::TtlExceeded => "ttl_exceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCount {
    pub transmissions: u64,
    pub originated: u64,
    pub bits: u64,
    /// Largest hop count from origin seen on a transmission of this kind.
    pub max_hop_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub duration_s: f64,
    pub throughput_bps: f64,
    pub mean_delay_s: Option<f64>,
    pub delay_p50_s: Option<f64>,
    pub delay_p95_s: Option<f64>,
    /// Undefined when nothing was delivered.
    pub nrl: Option<f64>,
    pub nrl_counting: NrlCounting,
    pub mean_hops: Option<f64>,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    pub data_in_flight: u64,
    pub delivered_bits: u64,
    pub ctrl_transmissions: u64,
    pub ctrl_originated: u64,
    pub ctrl_periodic: u64,
    pub ctrl_triggered: u64,
    pub ctrl_bits: u64,
    pub pf_count: u64,
    pub drops_by_reason: BTreeMap<DropReason, u64>,
    pub ctrl_by_kind: BTreeMap<ControlKind, KindCount>,
    pub anomalies: u64,
}

impl MetricsRecord {
    /// Record of a run in which nothing happened.
    pub fn empty(nrl_counting: NrlCounting) -> Self {
        Self {
            duration_s: 0.0,
            throughput_bps: 0.0,
            mean_delay_s: None,
            delay_p50_s: None,
            delay_p95_s: None,
            nrl: None,
            nrl_counting,
            mean_hops: None,
            data_sent: 0,
            data_delivered: 0,
            data_dropped: 0,
            data_in_flight: 0,
            delivered_bits: 0,
            ctrl_transmissions: 0,
            ctrl_originated: 0,
            ctrl_periodic: 0,
            ctrl_triggered: 0,
            ctrl_bits: 0,
            pf_count: 0,
            drops_by_reason: BTreeMap::new(),
            ctrl_by_kind: BTreeMap::new(),
            anomalies: 0,
        }
    }

    pub fn delivery_ratio(&self) -> Option<f64> {
        (self.data_sent > 0).then(|| self.data_delivered as f64 / self.data_sent as f64)
    }

    /// `sent = delivered + dropped + in flight`.
    pub fn is_conserved(&self) -> bool {
        self.data_sent == self.data_delivered + self.data_dropped + self.data_in_flight
    }
}

#[derive(Debug, Clone)]
pub struct MetricsCollector {
    record: MetricsRecord,
    delays: Vec<f64>,
    hops_total: u64,
}

impl MetricsCollector {
    pub fn new(nrl_counting: NrlCounting) -> Self {
        Self {
            record: MetricsRecord::empty(nrl_counting),
            delays: Vec::new(),
            hops_total: 0,
        }
    }

    pub fn record_sent(&mut self) {
        self.record.data_sent += 1;
    }

    pub fn record_delivery(&mut self, packet: &DataPacket, now: f64) -> Result<(), MetricsError> {
        let delay = now - packet.created_at;
        if delay < 0.0 || delay.is_nan() {
            return Err(MetricsError::NegativeDelay {
                created: packet.created_at,
                now,
            });
        }
        self.delays.push(delay);
        self.hops_total += packet.hop_count as u64;
        self.record.data_delivered += 1;
        self.record.delivered_bits += 8 * packet.payload_bytes as u64;
        Ok(())
    }

    /// Every drop is a packet failure.
    pub fn record_drop(&mut self, reason: DropReason) {
        self.record.data_dropped += 1;
        self.record.pf_count += 1;
        *self.record.drops_by_reason.entry(reason).or_default() += 1;
    }

    /// One control transmission on the air. `hop_count` counts transmissions
    /// of this message so far, this one included.
    pub fn record_control(
        &mut self,
        kind: ControlKind,
        class: ControlClass,
        originated: bool,
        hop_count: u32,
        bits: u64,
    ) {
        let r = &mut self.record;
        r.ctrl_transmissions += 1;
        r.ctrl_bits += bits;
        match class {
            ControlClass::Periodic => r.ctrl_periodic += 1,
            ControlClass::Triggered => r.ctrl_triggered += 1,
        }
        let k = r.ctrl_by_kind.entry(kind).or_default();
        k.transmissions += 1;
        k.bits += bits;
        k.max_hop_count = k.max_hop_count.max(hop_count);
        if originated {
            r.ctrl_originated += 1;
            k.originated += 1;
        }
    }

    pub fn record_anomalies(&mut self, n: u32) {
        self.record.anomalies += n as u64;
    }

    pub fn set_in_flight(&mut self, n: u64) {
        self.record.data_in_flight = n;
    }

    /// Counters so far, without the derived rates.
    pub fn counters(&self) -> &MetricsRecord {
        &self.record
    }

    pub fn finalize(&self, duration: f64) -> Result<MetricsRecord, MetricsError> {
        if !(duration > 0.0) {
            return Err(MetricsError::NonPositiveDuration(duration));
        }
        let mut r = self.record.clone();
        r.duration_s = duration;
        r.throughput_bps = r.delivered_bits as f64 / duration;
        let delivered = r.data_delivered;
        if delivered > 0 {
            let mut sorted = self.delays.clone();
            sorted.sort_by(f64::total_cmp);
            r.mean_delay_s = Some(sorted.iter().sum::<f64>() / delivered as f64);
            r.delay_p50_s = Some(nearest_rank(&sorted, 0.50));
            r.delay_p95_s = Some(nearest_rank(&sorted, 0.95));
            r.mean_hops = Some(self.hops_total as f64 / delivered as f64);
            let numerator = match r.nrl_counting {
                NrlCounting::PerHop => r.ctrl_transmissions,
                NrlCounting::PerOrigination => r.ctrl_originated,
            };
            r.nrl = Some(numerator as f64 / delivered as f64);
        }
        Ok(r)
    }

    pub fn delay_samples(&self) -> usize {
        self.delays.len()
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
