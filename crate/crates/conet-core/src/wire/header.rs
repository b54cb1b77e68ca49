//! Carrier-packet header codec.
//!
//! Layout, all multi-byte integers big-endian:
//!
//! ```text
//! byte 0        (version 1) << 4 | type (1 = interest, 2 = data)
//! byte 1        diffserv-and-type
//! byte 2        name length L, 1..=128
//! bytes 3..3+L  canonical name, UTF-8
//! varint        chunk sequence number, base-128, low group first, <= 8 bytes
//! u16           segment number, >= 1
//! -- data only --
//! u16           total segments, >= segment
//! u16           payload length
//! bytes         payload
//! ```
//!
//! Decoding is strict: minimal varints only, exact consumption, every
//! length cross-checked. A successful decode re-encodes to the input bytes.

use crate::naming::{ContentName, MAX_NAME_BYTES};

use super::WireError;

const VERSION: u8 = 1;
/// 8 varint bytes x 7 payload bits.
pub(crate) const MAX_CSN: u64 = (1 << 56) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketType {
    Interest = 1,
    Data = 2,
}

/// The per-packet ICN header: name, chunk sequence number, segmentation
/// fields, and (for data) the carried payload slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConetHeader {
    ptype: PacketType,
    diffserv_type: u8,
    name: ContentName,
    csn: u64,
    segment: u16,
    total_segments: Option<u16>,
    payload: Vec<u8>,
}

impl ConetHeader {
    pub fn interest(name: ContentName, csn: u64, segment: u16) -> Result<Self, WireError> {
        Self::build(
            PacketType::Interest,
            0,
            name,
            csn,
            segment,
            None,
            Vec::new(),
        )
    }

    pub fn data(
        name: ContentName,
        csn: u64,
        segment: u16,
        total_segments: u16,
        payload: Vec<u8>,
    ) -> Result<Self, WireError> {
        Self::build(
            PacketType::Data,
            0,
            name,
            csn,
            segment,
            Some(total_segments),
            payload,
        )
    }

    pub fn with_diffserv(mut self, diffserv_type: u8) -> Self {
        self.diffserv_type = diffserv_type;
        self
    }

    fn build(
        ptype: PacketType,
        diffserv_type: u8,
        name: ContentName,
        csn: u64,
        segment: u16,
        total_segments: Option<u16>,
        payload: Vec<u8>,
    ) -> Result<Self, WireError> {
        if csn > MAX_CSN {
            return Err(WireError::CsnTooLarge(csn));
        }
        if segment == 0 {
            return Err(WireError::BadSegment);
        }
        if let Some(total) = total_segments {
            if total < segment {
                return Err(WireError::BadTotalSegments);
            }
        }
        if payload.len() > u16::MAX as usize {
            return Err(WireError::PayloadTooLong(payload.len()));
        }
        Ok(Self {
            ptype,
            diffserv_type,
            name,
            csn,
            segment,
            total_segments,
            payload,
        })
    }

    pub fn ptype(&self) -> PacketType {
        self.ptype
    }

    pub fn is_interest(&self) -> bool {
        self.ptype == PacketType::Interest
    }

    pub fn diffserv_type(&self) -> u8 {
        self.diffserv_type
    }

    pub fn name(&self) -> &ContentName {
        &self.name
    }

    pub fn csn(&self) -> u64 {
        self.csn
    }

    pub fn segment(&self) -> u16 {
        self.segment
    }

    pub fn total_segments(&self) -> Option<u16> {
        self.total_segments
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Everything up to and including the payload-length field; the option
    /// formats carry this part in the IP option and the payload outside it.
    pub(crate) fn encode_fields(&self) -> Vec<u8> {
        let name_bytes = self.name.as_str().as_bytes();
        debug_assert!((1..=MAX_NAME_BYTES).contains(&name_bytes.len()));
        let mut out = Vec::with_capacity(9 + name_bytes.len() + 10);
        out.push((VERSION << 4) | self.ptype as u8);
        out.push(self.diffserv_type);
        out.push(name_bytes.len() as u8);
        out.extend_from_slice(name_bytes);
        encode_varint(&mut out, self.csn);
        out.extend_from_slice(&self.segment.to_be_bytes());
        if self.ptype == PacketType::Data {
            out.extend_from_slice(&self.total_segments.unwrap_or(self.segment).to_be_bytes());
            out.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        }
        out
    }
}

/// Full contiguous encoding: fields followed by the payload bytes.
pub fn encode_header(h: &ConetHeader) -> Vec<u8> {
    let mut out = h.encode_fields();
    out.extend_from_slice(&h.payload);
    out
}

/// Strict inverse of [`encode_header`]; trailing bytes are an error.
pub fn decode_header(b: &[u8]) -> Result<ConetHeader, WireError> {
    let (partial, consumed) = decode_fields(b)?;
    let rest = &b[consumed..];
    match partial.declared_payload {
        None => {
            if !rest.is_empty() {
                return Err(WireError::TrailingGarbage);
            }
            partial.into_header(Vec::new())
        }
        Some(len) => {
            let len = len as usize;
            if rest.len() < len {
                return Err(WireError::Truncated);
            }
            if rest.len() > len {
                return Err(WireError::TrailingGarbage);
            }
            partial.into_header(rest.to_vec())
        }
    }
}

/// Header fields parsed from the wire, payload not yet attached.
pub(crate) struct PartialHeader {
    ptype: PacketType,
    diffserv_type: u8,
    name: ContentName,
    csn: u64,
    segment: u16,
    total_segments: Option<u16>,
    pub(crate) declared_payload: Option<u16>,
}

impl PartialHeader {
    pub(crate) fn into_header(self, payload: Vec<u8>) -> Result<ConetHeader, WireError> {
        ConetHeader::build(
            self.ptype,
            self.diffserv_type,
            self.name,
            self.csn,
            self.segment,
            self.total_segments,
            payload,
        )
    }
}

/// Parses the fixed fields at the front of `b`, returning how many bytes
/// were consumed. Used directly by the option formats, where the fields and
/// the payload live in different parts of the IP packet.
pub(crate) fn decode_fields(b: &[u8]) -> Result<(PartialHeader, usize), WireError> {
    let head = *b.first().ok_or(WireError::Truncated)?;
    if head >> 4 != VERSION {
        return Err(WireError::BadVersion(head >> 4));
    }
    let ptype = match head & 0x0F {
        1 => PacketType::Interest,
        2 => PacketType::Data,
        t => return Err(WireError::BadType(t)),
    };
    let diffserv_type = *b.get(1).ok_or(WireError::Truncated)?;
    let name_len = *b.get(2).ok_or(WireError::Truncated)? as usize;
    if name_len == 0 || name_len > MAX_NAME_BYTES {
        return Err(WireError::NameTooLong(name_len));
    }
    let name_bytes = b.get(3..3 + name_len).ok_or(WireError::Truncated)?;
    let name_str = std::str::from_utf8(name_bytes).map_err(|_| WireError::NameNotUtf8)?;
    let name = ContentName::parse(name_str)?;
    let mut at = 3 + name_len;
    let (csn, varint_len) = decode_varint(&b[at..])?;
    at += varint_len;
    let segment = read_u16(b, at)?;
    at += 2;
    if segment == 0 {
        return Err(WireError::BadSegment);
    }
    let (total_segments, declared_payload) = match ptype {
        PacketType::Interest => (None, None),
        PacketType::Data => {
            let total = read_u16(b, at)?;
            let paylen = read_u16(b, at + 2)?;
            at += 4;
            if total < segment {
                return Err(WireError::BadTotalSegments);
            }
            (Some(total), Some(paylen))
        }
    };
    Ok((
        PartialHeader {
            ptype,
            diffserv_type,
            name,
            csn,
            segment,
            total_segments,
            declared_payload,
        },
        at,
    ))
}

fn read_u16(b: &[u8], at: usize) -> Result<u16, WireError> {
    let bytes = b.get(at..at + 2).ok_or(WireError::Truncated)?;
    Ok(u16::from_be_bytes([bytes[0], bytes[1]]))
}

fn encode_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v & 0x7F) as u8 | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn decode_varint(b: &[u8]) -> Result<(u64, usize), WireError> {
    let mut value: u64 = 0;
    for (i, &byte) in b.iter().enumerate() {
        if i == 8 {
            return Err(WireError::VarintOverflow);
        }
        value |= u64::from(byte & 0x7F) << (7 * i);
        if byte & 0x80 == 0 {
            // A trailing zero group would re-encode shorter.
            if byte == 0 && i > 0 {
                return Err(WireError::VarintNotMinimal);
            }
            return Ok((value, i + 1));
        }
    }
    Err(WireError::Truncated)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn name(s: &str) -> ContentName {
        ContentName::parse(s).unwrap()
    }

    #[test]
    fn golden_interest() {
        let h = ConetHeader::interest(name("a"), 0, 1).unwrap();
        assert_eq!(
            encode_header(&h),
            [0x11, 0x00, 0x01, 0x61, 0x00, 0x00, 0x01]
        );
        assert_eq!(
            decode_header(&[0x11, 0x00, 0x01, 0x61, 0x00, 0x00, 0x01]).unwrap(),
            h
        );
    }

    #[test]
    fn golden_data() {
        let h = ConetHeader::data(name("a"), 1, 1, 1, b"X".to_vec()).unwrap();
        let want = [
            0x12, 0x00, 0x01, 0x61, 0x01, 0x00, 0x01, 0x00, 0x01, 0x00, 0x01, 0x58,
        ];
        assert_eq!(encode_header(&h), want);
        assert_eq!(decode_header(&want).unwrap(), h);
    }

    #[test]
    fn decode_rejects_degenerate_inputs() {
        assert_eq!(decode_header(&[]), Err(WireError::Truncated));
        assert_eq!(
            decode_header(&[0x13, 0, 1, 0x61, 0, 0, 1]),
            Err(WireError::BadType(3))
        );
        assert_eq!(
            decode_header(&[0x21, 0, 1, 0x61, 0, 0, 1]),
            Err(WireError::BadVersion(2))
        );
        assert_eq!(
            decode_header(&[0x11, 0, 0, 0, 0, 1]),
            Err(WireError::NameTooLong(0))
        );
        assert_eq!(
            decode_header(&[0x11, 0, 200, 0x61, 0, 0, 1]),
            Err(WireError::NameTooLong(200))
        );
    }

    #[test]
    fn decode_rejects_varint_abuse() {
        // Nine continuation bytes.
        let mut b = vec![0x11, 0, 1, 0x61];
        b.extend_from_slice(&[0x80; 9]);
        b.extend_from_slice(&[0, 1]);
        assert_eq!(decode_header(&b), Err(WireError::VarintOverflow));
        // Non-minimal zero group.
        let b = [0x11, 0, 1, 0x61, 0x80, 0x00, 0x00, 0x01];
        assert_eq!(decode_header(&b), Err(WireError::VarintNotMinimal));
    }

    #[test]
    fn decode_rejects_trailing_bytes() {
        let mut b = encode_header(&ConetHeader::interest(name("a"), 0, 1).unwrap());
        b.push(0);
        assert_eq!(decode_header(&b), Err(WireError::TrailingGarbage));
    }

    #[test]
    fn construction_guards() {
        assert_eq!(
            ConetHeader::interest(name("a"), 0, 0),
            Err(WireError::BadSegment)
        );
        assert_eq!(
            ConetHeader::data(name("a"), 0, 3, 2, vec![]),
            Err(WireError::BadTotalSegments)
        );
        assert_eq!(
            ConetHeader::interest(name("a"), 1 << 56, 1),
            Err(WireError::CsnTooLarge(1 << 56))
        );
        assert_eq!(
            ConetHeader::data(name("a"), 0, 1, 1, vec![0; 70_000]),
            Err(WireError::PayloadTooLong(70_000))
        );
    }

    pub(crate) fn arb_header() -> impl Strategy<Value = ConetHeader> {
        let name = crate::naming::tests::arb_name();
        let csn = prop_oneof![0u64..1000, 0..MAX_CSN];
        (
            name,
            csn,
            1u16..5,
            0u16..5,
            proptest::collection::vec(any::<u8>(), 0..64),
            any::<bool>(),
            any::<u8>(),
        )
            .prop_map(|(name, csn, segment, extra, payload, is_data, ds)| {
                if is_data {
                    ConetHeader::data(name, csn, segment, segment + extra, payload)
                        .unwrap()
                        .with_diffserv(ds)
                } else {
                    ConetHeader::interest(name, csn, segment)
                        .unwrap()
                        .with_diffserv(ds)
                }
            })
    }

    proptest! {
        #[test]
        fn roundtrip(h in arb_header()) {
            let bytes = encode_header(&h);
            prop_assert_eq!(decode_header(&bytes).unwrap(), h);
        }

        /// Truncating a valid encoding anywhere must error, never misparse.
        #[test]
        fn prefixes_rejected(h in arb_header(), cut in 0.0f64..1.0) {
            let bytes = encode_header(&h);
            let cut = (cut * bytes.len() as f64) as usize;
            if cut < bytes.len() {
                prop_assert!(decode_header(&bytes[..cut]).is_err());
            }
        }

        /// Mutating the type byte or the payload-length field always fails:
        /// the remaining structure can no longer account for every byte.
        #[test]
        fn type_and_paylen_mutations_rejected(h in arb_header(), delta in 1u8..=255) {
            let bytes = encode_header(&h);
            let mut m = bytes.clone();
            m[0] = m[0].wrapping_add(delta);
            prop_assert!(decode_header(&m).is_err());

            if !h.is_interest() {
                let paylen_at = bytes.len() - h.payload().len() - 2;
                for at in [paylen_at, paylen_at + 1] {
                    let mut m = bytes.clone();
                    m[at] = m[at].wrapping_add(delta);
                    prop_assert!(decode_header(&m).is_err(), "paylen byte {at}");
                }
            }
        }

        /// Mutating the name-length byte either errors or lands on the valid
        /// encoding of a *different* header (the codec is a bijection on its
        /// image, so acceptance implies exact re-encoding). It never yields
        /// a misparse of the original codeword.
        #[test]
        fn name_len_mutations_never_misparse(h in arb_header(), delta in 1u8..=255) {
            let bytes = encode_header(&h);
            let mut m = bytes.clone();
            m[2] = m[2].wrapping_add(delta);
            match decode_header(&m) {
                Err(_) => {}
                Ok(other) => {
                    prop_assert_ne!(&other, &h);
                    prop_assert_eq!(encode_header(&other), m);
                }
            }
        }
    }
}
