//! On-the-wire encodings: the carrier-packet header, the six IP packet
//! formats, and the domain-tag transforms applied at domain edges.

mod header;
mod packet;

pub use header::{decode_header, encode_header, ConetHeader, PacketType};
pub use packet::{
    decode_packet, encode_packet, five_tuple, tag_packet, untag_packet, ConetPacket, DecodeHint,
    FiveTuple, PacketFormat, CONET_PROTO, TAGGED_UDP_PROTO,
};

use crate::naming::NameError;

/// IPv4 option type used to carry the header in the option-based formats.
pub const CONET_OPTION_TYPE: u8 = 0x9E;

/// Maximum option content: the IPv4 option area holds 40 bytes, two of
/// which are the type and length octets.
pub const MAX_OPTION_CONTENT: usize = 38;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("input ends before the field being read")]
    Truncated,
    #[error("unsupported header version {0:#x}")]
    BadVersion(u8),
    #[error("unknown packet type {0:#x}")]
    BadType(u8),
    #[error("declared name length {0} is outside 1..=128")]
    NameTooLong(usize),
    #[error("name bytes are not valid UTF-8")]
    NameNotUtf8,
    #[error("name is malformed: {0}")]
    InvalidName(#[from] NameError),
    #[error("chunk sequence number varint exceeds 8 bytes")]
    VarintOverflow,
    #[error("chunk sequence number varint is not minimal")]
    VarintNotMinimal,
    #[error("bytes remain after the declared end of the value")]
    TrailingGarbage,
    #[error("segment numbers start at 1")]
    BadSegment,
    #[error("total_segments must be >= segment")]
    BadTotalSegments,
    #[error("payload of {0} bytes exceeds the 16-bit length field")]
    PayloadTooLong(usize),
    #[error("chunk sequence number {0} does not fit in an 8-byte varint")]
    CsnTooLarge(u64),
    #[error("header needs {0} option bytes, limit is {MAX_OPTION_CONTENT}")]
    OptionOverflow(usize),
    #[error("IPv4 header checksum mismatch")]
    ChecksumMismatch,
    #[error("IP protocol {0} is not a recognized carrier")]
    UnknownProtocol(u8),
    #[error("malformed IPv4 header: {0}")]
    BadIpHeader(&'static str),
    #[error("packet already carries a tag")]
    AlreadyTagged,
    #[error("packet carries no tag")]
    NotTagged,
    #[error("operation does not apply to format {0:?}")]
    UnsupportedFormat(PacketFormat),
    #[error("decode hint does not match the wire protocol field")]
    HintMismatch,
    #[error("tag would be all zeros in the target format")]
    ZeroTag,
    #[error("tag presence/width does not match format {0:?}")]
    TagMismatch(PacketFormat),
}

/// Fixed-length identifier substituted for a content name inside one
/// domain. Eight bytes; the short (4-byte) form used by the fictitious-UDP
/// formats is the first four bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainTag([u8; 8]);

impl DomainTag {
    /// All-zero is reserved as "no tag".
    pub fn new(bytes: [u8; 8]) -> Result<Self, WireError> {
        if bytes == [0; 8] {
            return Err(WireError::ZeroTag);
        }
        Ok(Self(bytes))
    }

    pub fn from_u64(v: u64) -> Result<Self, WireError> {
        Self::new(v.to_be_bytes())
    }

    pub fn bytes(&self) -> [u8; 8] {
        self.0
    }

    /// First four bytes: what the 4-byte formats carry on the wire.
    pub fn short(&self) -> [u8; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    /// Fictitious UDP source port: the tag's first two bytes.
    pub fn src_port(&self) -> u16 {
        u16::from_be_bytes([self.0[0], self.0[1]])
    }

    /// Fictitious UDP destination port: the tag's third and fourth bytes.
    pub fn dst_port(&self) -> u16 {
        u16::from_be_bytes([self.0[2], self.0[3]])
    }

    /// Canonical short form: first four bytes kept, rest zeroed. Errors if
    /// the discriminating bits do not live in the first four bytes.
    pub fn to_short_form(&self) -> Result<Self, WireError> {
        let s = self.short();
        if s == [0; 4] {
            return Err(WireError::ZeroTag);
        }
        Ok(Self([s[0], s[1], s[2], s[3], 0, 0, 0, 0]))
    }

    pub fn is_short_form(&self) -> bool {
        self.0[4..] == [0; 4]
    }

    pub fn from_short(s: [u8; 4]) -> Result<Self, WireError> {
        if s == [0; 4] {
            return Err(WireError::ZeroTag);
        }
        Ok(Self([s[0], s[1], s[2], s[3], 0, 0, 0, 0]))
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let mut out = [0u8; 8];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            out[i] = u8::from_str_radix(std::str::from_utf8(chunk).ok()?, 16).ok()?;
        }
        Self::new(out).ok()
    }
}

impl std::fmt::Debug for DomainTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DomainTag({})", self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tag_rejected() {
        assert_eq!(DomainTag::new([0; 8]), Err(WireError::ZeroTag));
        assert!(DomainTag::from_u64(1).is_ok());
    }

    #[test]
    fn short_form_splits_ports() {
        let t = DomainTag::new([0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88]).unwrap();
        assert_eq!(t.src_port(), 0x1122);
        assert_eq!(t.dst_port(), 0x3344);
        let s = t.to_short_form().unwrap();
        assert_eq!(s.bytes(), [0x11, 0x22, 0x33, 0x44, 0, 0, 0, 0]);
    }

    #[test]
    fn short_form_needs_leading_bits() {
        let t = DomainTag::new([0, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        assert_eq!(t.to_short_form(), Err(WireError::ZeroTag));
    }

    #[test]
    fn hex_roundtrip() {
        let t = DomainTag::from_u64(0x0102030405060708).unwrap();
        assert_eq!(DomainTag::from_hex(&t.to_hex()), Some(t));
        assert_eq!(DomainTag::from_hex("zz"), None);
    }
}
