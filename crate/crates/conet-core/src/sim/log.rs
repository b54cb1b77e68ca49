//! Structured event log: every lookup, flow mod, notification, and mode
//! change with its virtual timestamp. Serializable as JSON lines.

use serde::Serialize;

use crate::node::{FlowModOp, NodeId, PortId};
use crate::time::SimTime;

#[derive(Debug, Clone, Serialize)]
pub struct LogEntry {
    pub t_us: u64,
    #[serde(flatten)]
    pub kind: LogKind,
}

impl LogEntry {
    pub fn new(t: SimTime, kind: LogKind) -> Self {
        Self {
            t_us: t.as_micros(),
            kind,
        }
    }

    pub fn time(&self) -> SimTime {
        SimTime(self.t_us)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogKind {
    ModeChanged {
        previous: String,
        mode: String,
    },
    NameLookupRequested {
        node: NodeId,
        name: String,
        csn: u64,
    },
    NameLookupReplied {
        node: NodeId,
        name: String,
        found: bool,
    },
    FibMiss {
        node: NodeId,
        name: String,
        emitted_lookup: bool,
    },
    FibHit {
        node: NodeId,
        name: String,
    },
    FibInstalled {
        node: NodeId,
        prefix: String,
        evicted: Option<String>,
    },
    InterestIssued {
        name: String,
        csn: u64,
        segment: u16,
    },
    DataReceived {
        name: String,
        csn: u64,
        segment: u16,
        ok: bool,
    },
    ServedData {
        node: NodeId,
        origin: bool,
        name: String,
        csn: u64,
        segment: u16,
    },
    PacketInRaised {
        switch: NodeId,
        in_port: PortId,
    },
    FlowModApplied {
        switch: NodeId,
        op: FlowModOp,
        ok: bool,
    },
    PortNoFloodSet {
        switch: NodeId,
        port: PortId,
    },
    ChunkCached {
        cache: NodeId,
        name: String,
        csn: u64,
    },
    ProactivePushDelivered {
        cache: NodeId,
        name: String,
        csn: u64,
        new: bool,
    },
    InterestSummaryIngested {
        node: NodeId,
        names: usize,
        total: u64,
    },
    ContentRegistered {
        origin: NodeId,
        prefix: String,
    },
    Dropped {
        node: NodeId,
        reason: String,
        name: Option<String>,
    },
    StaleRedirectMiss {
        cache: NodeId,
        name: String,
        csn: u64,
        segment: u16,
    },
    NorthboundRequest {
        method: String,
        path: String,
        status: u16,
    },
    ControllerError {
        error: String,
    },
}

pub fn to_jsonl(log: &[LogEntry]) -> String {
    let mut out = String::new();
    for entry in log {
        out.push_str(&serde_json::to_string(entry).expect("log entries serialize"));
        out.push('\n');
    }
    out
}
