use std::fmt;

use serde::{Deserialize, Serialize};

/// Node identifier, dense from zero.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Infinite DSDV metric, used for broken routes.
pub const INFINITE_METRIC: u32 = u32::MAX;

/// Fixed header and per-entry sizes used for bandwidth accounting.
pub const HEADER_BYTES: u32 = 20;
pub const ENTRY_BYTES: u32 = 12;

/// Whether a control transmission is part of the periodic schedule or was
/// triggered by a topology change. Forwards inherit the class of the
/// original message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlClass {
    Periodic,
    Triggered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    DsdvFull,
    DsdvIncremental,
    OlsrHello,
    OlsrTc,
    FsrInner,
    FsrOuter,
}

impl ControlKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlKind::DsdvFull => "dsdv_full",
            ControlKind::DsdvIncremental => "dsdv_incremental",
            ControlKind::OlsrHello => "olsr_hello",
            ControlKind::OlsrTc => "olsr_tc",
            ControlKind::FsrInner => "fsr_inner",
            ControlKind::FsrOuter => "fsr_outer",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub origin: NodeId,
    pub created_at: f64,
    /// Transmissions so far; set by the transport on every send.
    pub hop_count: u32,
    pub class: ControlClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsdvAdvert {
    pub destination: NodeId,
    pub metric: u32,
    pub seq: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkStatus {
    Symmetric,
    /// Symmetric, and the sender selected this neighbor as an MPR.
    Mpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsrScope {
    Inner,
    Outer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkStateEntry {
    pub origin: NodeId,
    pub seq: u32,
    pub neighbors: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlBody {
    DsdvUpdate {
        entries: Vec<DsdvAdvert>,
        full: bool,
        triggered: bool,
    },
    OlsrHello {
        neighbors: Vec<(NodeId, LinkStatus)>,
    },
    OlsrTc {
        /// Advertised neighbor sequence number; freshness of the content.
        ansn: u32,
        /// Message sequence number; duplicate detection.
        msg_seq: u32,
        selectors: Vec<NodeId>,
    },
    FsrScopedUpdate {
        scope: FsrScope,
        entries: Vec<LinkStateEntry>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMessage {
    pub header: Header,
    pub body: ControlBody,
}

impl ControlMessage {
    pub fn new(origin: NodeId, created_at: f64, class: ControlClass, body: ControlBody) -> Self {
        Self {
            header: Header {
                origin,
                created_at,
                hop_count: 0,
                class,
            },
            body,
        }
    }

    pub fn kind(&self) -> ControlKind {
        match &self.body {
            ControlBody::DsdvUpdate { full: true, .. } => ControlKind::DsdvFull,
            ControlBody::DsdvUpdate { full: false, .. } => ControlKind::DsdvIncremental,
            ControlBody::OlsrHello { .. } => ControlKind::OlsrHello,
            ControlBody::OlsrTc { .. } => ControlKind::OlsrTc,
            ControlBody::FsrScopedUpdate {
                scope: FsrScope::Inner,
                ..
            } => ControlKind::FsrInner,
            ControlBody::FsrScopedUpdate {
                scope: FsrScope::Outer,
                ..
            } => ControlKind::FsrOuter,
        }
    }

    /// Number of carried route or link entries. An FSR record counts one
    /// entry for its origin plus one per listed link.
    pub fn entry_count(&self) -> u32 {
        let n = match &self.body {
            ControlBody::DsdvUpdate { entries, .. } => entries.len(),
            ControlBody::OlsrHello { neighbors } => neighbors.len(),
            ControlBody::OlsrTc { selectors, .. } => selectors.len(),
            ControlBody::FsrScopedUpdate { entries, .. } => {
                entries.iter().map(|e| 1 + e.neighbors.len()).sum()
            }
        };
        n as u32
    }

    pub fn size_bytes(&self) -> u32 {
        HEADER_BYTES + ENTRY_BYTES * self.entry_count()
    }

    pub fn size_bits(&self) -> u64 {
        8 * self.size_bytes() as u64
    }
}
