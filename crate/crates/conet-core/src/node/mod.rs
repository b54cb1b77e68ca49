//! Data-plane elements: the domain edge node (name lookups, pending
//! interests, tag add/strip) and the flow-table switch model.

mod edge;
mod fib;
mod switch;

pub use edge::{EdgeConfig, EdgeCounters, EdgeEffect, EdgeNode, EdgeNote};
pub use fib::{Fib, FibEntry};
pub use switch::{
    FlowAction, FlowEntry, FlowModOp, MatchFields, PacketIn, PacketOut, Switch, SwitchError,
    SwitchVerdict, DEFAULT_TABLE_CAPACITY,
};

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Node identifier within one domain.
pub type NodeId = String;

/// Switch port number.
pub type PortId = u16;

pub const ETHERTYPE_IPV4: u16 = 0x0800;

/// Ethernet address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mac(pub [u8; 6]);

impl Mac {
    pub fn parse(s: &str) -> Option<Mac> {
        let mut out = [0u8; 6];
        let mut parts = s.split(':');
        for byte in &mut out {
            *byte = u8::from_str_radix(parts.next()?, 16).ok()?;
        }
        if parts.next().is_some() {
            return None;
        }
        Some(Mac(out))
    }
}

impl fmt::Display for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl fmt::Debug for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mac({self})")
    }
}

impl Serialize for Mac {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Mac {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Mac::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad mac {s:?}")))
    }
}

/// An Ethernet frame carrying an IPv4 packet through the domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub src: Mac,
    pub dst: Mac,
    pub ethertype: u16,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn ipv4(src: Mac, dst: Mac, payload: Vec<u8>) -> Frame {
        Frame {
            src,
            dst,
            ethertype: ETHERTYPE_IPV4,
            payload,
        }
    }

    /// Frame length on the wire (14-byte header plus payload).
    pub fn wire_len(&self) -> usize {
        14 + self.payload.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mac_text_roundtrip() {
        let m = Mac([0x02, 0, 0, 0xab, 0xcd, 0x01]);
        assert_eq!(Mac::parse(&m.to_string()), Some(m));
        assert_eq!(Mac::parse("02:00"), None);
        assert_eq!(Mac::parse("zz:00:00:00:00:00"), None);
    }
}
