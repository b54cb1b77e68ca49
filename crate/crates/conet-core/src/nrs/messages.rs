//! Control-channel messages between nodes and the controller.
//!
//! Messages ride inside the extensible "experimenter" envelope of the
//! switch-control protocol: a one-byte message-type code, a four-byte
//! experimenter id, a four-byte body length, then a UTF-8 JSON body whose
//! mandatory `"op"` field names the operation.

use serde::{Deserialize, Serialize};

use crate::naming::ContentName;
use crate::node::NodeId;
use crate::wire::DomainTag;

/// Message-type code for experimenter/vendor messages.
pub const EXPERIMENTER_TYPE: u8 = 0x04;
/// Experimenter id: the ASCII bytes "CONE".
pub const EXPERIMENTER_ID: [u8; 4] = *b"CONE";

const ENVELOPE_LEN: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ControlCodecError {
    #[error("bad envelope: {0}")]
    BadEnvelope(&'static str),
    #[error("body is not valid JSON: {0}")]
    BadJson(String),
    #[error("unknown op {0:?}")]
    UnknownOp(String),
}

/// What role a node announces on connection setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Edge,
    Cache,
    Switch,
    Server,
    Client,
}

/// A route handed to an edge node: the installable prefix, the node to
/// address frames to, and the domain tag for the looked-up name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteInfo {
    pub prefix: ContentName,
    pub next_hop: NodeId,
    pub tag: DomainTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibExportEntry {
    pub prefix: ContentName,
    pub next_hop: NodeId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tag: Option<DomainTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameCount {
    pub name: ContentName,
    pub count: u64,
}

/// The ICN operations carried over the control channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ControlMessage {
    /// Node asks for the next hop (and tag) of a name it cannot resolve.
    NameLookup {
        name: ContentName,
        csn: u64,
    },
    /// Answer to a lookup; also pushed unsolicited for proactive installs.
    NameLookupReply {
        name: ContentName,
        route: Option<RouteInfo>,
    },
    /// A server publishes a prefix it can serve.
    ContentRegister {
        origin: NodeId,
        prefix: ContentName,
    },
    ContentUnregister {
        origin: NodeId,
        prefix: ContentName,
    },
    /// A cache finished assembling a chunk.
    ChunkCached {
        cache: NodeId,
        name: ContentName,
        csn: u64,
    },
    TagRequest {
        name: ContentName,
    },
    TagReply {
        name: ContentName,
        tag: DomainTag,
    },
    FibExportRequest,
    FibExportReply {
        entries: Vec<FibExportEntry>,
    },
    /// Controller seeds a cache with a full chunk ahead of any traffic.
    ProactiveCachePush {
        cache: NodeId,
        name: ContentName,
        csn: u64,
        #[serde(rename = "content_b64", with = "b64")]
        content: Vec<u8>,
    },
    /// Periodic per-name interest counters from a node.
    InterestSummary {
        node: NodeId,
        counts: Vec<NameCount>,
    },
    /// First message a node sends on its control channel.
    ConnectionSetup {
        node: NodeId,
        kind: NodeKind,
    },
}

impl ControlMessage {
    /// The `"op"` value used on the wire.
    pub fn op(&self) -> &'static str {
        match self {
            ControlMessage::NameLookup { .. } => "name_lookup",
            ControlMessage::NameLookupReply { .. } => "name_lookup_reply",
            ControlMessage::ContentRegister { .. } => "content_register",
            ControlMessage::ContentUnregister { .. } => "content_unregister",
            ControlMessage::ChunkCached { .. } => "chunk_cached",
            ControlMessage::TagRequest { .. } => "tag_request",
            ControlMessage::TagReply { .. } => "tag_reply",
            ControlMessage::FibExportRequest => "fib_export_request",
            ControlMessage::FibExportReply { .. } => "fib_export_reply",
            ControlMessage::ProactiveCachePush { .. } => "proactive_cache_push",
            ControlMessage::InterestSummary { .. } => "interest_summary",
            ControlMessage::ConnectionSetup { .. } => "connection_setup",
        }
    }

    pub const ALL_OPS: &'static [&'static str] = &[
        "name_lookup",
        "name_lookup_reply",
        "content_register",
        "content_unregister",
        "chunk_cached",
        "tag_request",
        "tag_reply",
        "fib_export_request",
        "fib_export_reply",
        "proactive_cache_push",
        "interest_summary",
        "connection_setup",
    ];
}

mod b64 {
    use base64::prelude::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&BASE64_STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        BASE64_STANDARD
            .decode(s.as_bytes())
            .map_err(serde::de::Error::custom)
    }
}

impl serde::Serialize for DomainTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for DomainTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        DomainTag::from_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("bad tag {s:?}")))
    }
}

/// Wraps a message in the binary experimenter envelope.
pub fn encode_control(msg: &ControlMessage) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("control messages always serialize");
    let mut out = Vec::with_capacity(ENVELOPE_LEN + body.len());
    out.push(EXPERIMENTER_TYPE);
    out.extend_from_slice(&EXPERIMENTER_ID);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Strict inverse of [`encode_control`]. Unknown ops are rejected, never
/// silently dropped.
pub fn decode_control(b: &[u8]) -> Result<ControlMessage, ControlCodecError> {
    if b.len() < ENVELOPE_LEN {
        return Err(ControlCodecError::BadEnvelope(
            "shorter than the fixed envelope",
        ));
    }
    if b[0] != EXPERIMENTER_TYPE {
        return Err(ControlCodecError::BadEnvelope("wrong message-type code"));
    }
    if b[1..5] != EXPERIMENTER_ID {
        return Err(ControlCodecError::BadEnvelope("wrong experimenter id"));
    }
    let len = u32::from_be_bytes([b[5], b[6], b[7], b[8]]) as usize;
    let body = &b[ENVELOPE_LEN..];
    if body.len() != len {
        return Err(ControlCodecError::BadEnvelope("body length mismatch"));
    }
    let value: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| ControlCodecError::BadJson(e.to_string()))?;
    let op = value
        .get("op")
        .and_then(|v| v.as_str())
        .ok_or(ControlCodecError::BadEnvelope("body has no op field"))?;
    if !ControlMessage::ALL_OPS.contains(&op) {
        return Err(ControlCodecError::UnknownOp(op.to_owned()));
    }
    serde_json::from_value(value).map_err(|e| ControlCodecError::BadJson(e.to_string()))
}
