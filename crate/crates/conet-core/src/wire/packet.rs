//! The six IP packet formats.
//!
//! ```text
//! #1  proto 252, header fields in an IPv4 option, payload after the options
//! #2  proto 252, header as the IP payload (transport adjacency)
//! #3  as #1 with an 8-byte tag at the start of the option content
//! #4  as #2 with an 8-byte tag before the header
//! #5  proto 17, 4-byte tag in the fictitious UDP port positions, header at
//!     payload offset 4
//! #6  same wire layout as #5; the two differ only in which long-term format
//!     they stand in for, so decoding needs a caller-supplied hint
//! ```
//!
//! Formats #1/#3 are limited by the 40-byte IPv4 option area and exist to
//! document that limitation; #2/#4 are the native forms; #5/#6 are what the
//! flow-table matcher of OpenFlow 1.0 equipment can actually inspect.

use std::net::Ipv4Addr;

use super::header::{decode_fields, ConetHeader};
use super::{DomainTag, WireError, CONET_OPTION_TYPE, MAX_OPTION_CONTENT};

/// Experimental IP protocol number identifying native carrier packets.
pub const CONET_PROTO: u8 = 252;
/// Protocol number reused so OpenFlow 1.0 switches will parse the tag as
/// UDP ports.
pub const TAGGED_UDP_PROTO: u8 = 17;

const IPV4_BASE_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketFormat {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl PacketFormat {
    pub fn protocol(self) -> u8 {
        match self {
            PacketFormat::F1 | PacketFormat::F2 | PacketFormat::F3 | PacketFormat::F4 => {
                CONET_PROTO
            }
            PacketFormat::F5 | PacketFormat::F6 => TAGGED_UDP_PROTO,
        }
    }

    fn uses_option(self) -> bool {
        matches!(self, PacketFormat::F1 | PacketFormat::F3)
    }

    /// Tag bytes on the wire: 0, 8, or 4.
    fn tag_width(self) -> usize {
        match self {
            PacketFormat::F1 | PacketFormat::F2 => 0,
            PacketFormat::F3 | PacketFormat::F4 => 8,
            PacketFormat::F5 | PacketFormat::F6 => 4,
        }
    }
}

/// A complete carrier packet: addressing, optional domain tag, and header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConetPacket {
    format: PacketFormat,
    ip_src: Ipv4Addr,
    ip_dst: Ipv4Addr,
    tag: Option<DomainTag>,
    header: ConetHeader,
}

impl ConetPacket {
    pub fn new(
        format: PacketFormat,
        ip_src: Ipv4Addr,
        ip_dst: Ipv4Addr,
        tag: Option<DomainTag>,
        header: ConetHeader,
    ) -> Result<Self, WireError> {
        match (format.tag_width(), &tag) {
            (0, None) => {}
            (8, Some(_)) => {}
            (4, Some(t)) => {
                // The wire only carries the first four bytes; require the
                // canonical short form so decode(encode(p)) == p.
                if !t.is_short_form() {
                    return Err(WireError::TagMismatch(format));
                }
                if t.short() == [0; 4] {
                    return Err(WireError::ZeroTag);
                }
            }
            _ => return Err(WireError::TagMismatch(format)),
        }
        if format.uses_option() {
            let content = format.tag_width() + header.encode_fields().len();
            if content > MAX_OPTION_CONTENT {
                return Err(WireError::OptionOverflow(content));
            }
        }
        Ok(Self {
            format,
            ip_src,
            ip_dst,
            tag,
            header,
        })
    }

    pub fn format(&self) -> PacketFormat {
        self.format
    }

    pub fn ip_src(&self) -> Ipv4Addr {
        self.ip_src
    }

    pub fn ip_dst(&self) -> Ipv4Addr {
        self.ip_dst
    }

    pub fn tag(&self) -> Option<DomainTag> {
        self.tag
    }

    pub fn header(&self) -> &ConetHeader {
        &self.header
    }
}

/// Serializes to a full IPv4 packet with a correct length and checksum.
pub fn encode_packet(p: &ConetPacket) -> Vec<u8> {
    let (options, ip_payload) = match p.format {
        PacketFormat::F1 | PacketFormat::F3 => {
            let mut content = Vec::new();
            if let Some(tag) = p.tag {
                content.extend_from_slice(&tag.bytes());
            }
            content.extend_from_slice(&p.header.encode_fields());
            debug_assert!(content.len() <= MAX_OPTION_CONTENT);
            (build_option(&content), p.header.payload().to_vec())
        }
        PacketFormat::F2 => (Vec::new(), super::encode_header(&p.header)),
        PacketFormat::F4 => {
            let mut body = p.tag.expect("validated").bytes().to_vec();
            body.extend_from_slice(&super::encode_header(&p.header));
            (Vec::new(), body)
        }
        PacketFormat::F5 | PacketFormat::F6 => {
            let mut body = p.tag.expect("validated").short().to_vec();
            body.extend_from_slice(&super::encode_header(&p.header));
            (Vec::new(), body)
        }
    };

    let ihl_bytes = IPV4_BASE_LEN + options.len();
    let total_len = ihl_bytes + ip_payload.len();
    let mut out = Vec::with_capacity(total_len);
    out.push(0x40 | (ihl_bytes / 4) as u8);
    out.push(0); // DSCP/ECN unused
    out.extend_from_slice(&(total_len as u16).to_be_bytes());
    out.extend_from_slice(&[0, 0]); // identification
    out.extend_from_slice(&[0, 0]); // flags / fragment offset
    out.push(64); // TTL
    out.push(p.format.protocol());
    out.extend_from_slice(&[0, 0]); // checksum placeholder
    out.extend_from_slice(&p.ip_src.octets());
    out.extend_from_slice(&p.ip_dst.octets());
    out.extend_from_slice(&options);
    let sum = ipv4_checksum(&out[..ihl_bytes]);
    out[10..12].copy_from_slice(&sum.to_be_bytes());
    out.extend_from_slice(&ip_payload);
    out
}

/// Type, length, content, zero-padded to a 32-bit boundary.
fn build_option(content: &[u8]) -> Vec<u8> {
    let mut opt = Vec::with_capacity(2 + content.len() + 3);
    opt.push(CONET_OPTION_TYPE);
    opt.push((2 + content.len()) as u8);
    opt.extend_from_slice(content);
    while opt.len() % 4 != 0 {
        opt.push(0);
    }
    opt
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum = 0u32;
    for pair in header.chunks(2) {
        let word = u16::from_be_bytes([pair[0], *pair.get(1).unwrap_or(&0)]);
        sum += u32::from(word);
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// Distinguishes wire layouts that carry no format discriminator.
///
/// Protocol 252 packets need `Untagged` vs `Tagged`; protocol 17 packets
/// are always tagged and need `Format5` vs `Format6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeHint {
    Untagged,
    Tagged,
    Format5,
    Format6,
}

impl DecodeHint {
    /// The hint that reverses [`encode_packet`] for this packet.
    pub fn for_packet(p: &ConetPacket) -> DecodeHint {
        match p.format() {
            PacketFormat::F1 | PacketFormat::F2 => DecodeHint::Untagged,
            PacketFormat::F3 | PacketFormat::F4 => DecodeHint::Tagged,
            PacketFormat::F5 => DecodeHint::Format5,
            PacketFormat::F6 => DecodeHint::Format6,
        }
    }
}

struct Ipv4View<'a> {
    src: Ipv4Addr,
    dst: Ipv4Addr,
    proto: u8,
    options: &'a [u8],
    payload: &'a [u8],
}

fn parse_ipv4(b: &[u8], verify_checksum: bool) -> Result<Ipv4View<'_>, WireError> {
    if b.len() < IPV4_BASE_LEN {
        return Err(WireError::Truncated);
    }
    if b[0] >> 4 != 4 {
        return Err(WireError::BadIpHeader("version is not 4"));
    }
    let ihl_bytes = usize::from(b[0] & 0x0F) * 4;
    if !(IPV4_BASE_LEN..=60).contains(&ihl_bytes) {
        return Err(WireError::BadIpHeader("IHL out of range"));
    }
    if b.len() < ihl_bytes {
        return Err(WireError::Truncated);
    }
    let total_len = usize::from(u16::from_be_bytes([b[2], b[3]]));
    if total_len < ihl_bytes || total_len > b.len() {
        return Err(WireError::Truncated);
    }
    if total_len < b.len() {
        return Err(WireError::TrailingGarbage);
    }
    if verify_checksum && ipv4_checksum(&b[..ihl_bytes]) != 0 {
        return Err(WireError::ChecksumMismatch);
    }
    Ok(Ipv4View {
        src: Ipv4Addr::new(b[12], b[13], b[14], b[15]),
        dst: Ipv4Addr::new(b[16], b[17], b[18], b[19]),
        proto: b[9],
        options: &b[IPV4_BASE_LEN..ihl_bytes],
        payload: &b[ihl_bytes..total_len],
    })
}

/// Inverse of [`encode_packet`], given the hint that resolves the layouts
/// the wire cannot distinguish on its own.
pub fn decode_packet(b: &[u8], hint: DecodeHint) -> Result<ConetPacket, WireError> {
    let ip = parse_ipv4(b, true)?;
    match ip.proto {
        CONET_PROTO => {
            let tagged = match hint {
                DecodeHint::Untagged => false,
                DecodeHint::Tagged => true,
                _ => return Err(WireError::HintMismatch),
            };
            if ip.options.is_empty() {
                // Transport-adjacency forms (#2 / #4).
                let (body, tag, format) = if tagged {
                    let tag_bytes = ip.payload.get(..8).ok_or(WireError::Truncated)?;
                    let tag = DomainTag::new(tag_bytes.try_into().unwrap())?;
                    (&ip.payload[8..], Some(tag), PacketFormat::F4)
                } else {
                    (ip.payload, None, PacketFormat::F2)
                };
                let header = super::decode_header(body)?;
                ConetPacket::new(format, ip.src, ip.dst, tag, header)
            } else {
                // Option forms (#1 / #3).
                let content = parse_option(ip.options)?;
                let (fields, tag, format) = if tagged {
                    let tag_bytes = content.get(..8).ok_or(WireError::Truncated)?;
                    let tag = DomainTag::new(tag_bytes.try_into().unwrap())?;
                    (&content[8..], Some(tag), PacketFormat::F3)
                } else {
                    (content, None, PacketFormat::F1)
                };
                let (partial, consumed) = decode_fields(fields)?;
                if consumed != fields.len() {
                    return Err(WireError::TrailingGarbage);
                }
                let declared = partial.declared_payload.map_or(0, usize::from);
                if ip.payload.len() < declared {
                    return Err(WireError::Truncated);
                }
                if ip.payload.len() > declared {
                    return Err(WireError::TrailingGarbage);
                }
                let header = partial.into_header(ip.payload.to_vec())?;
                ConetPacket::new(format, ip.src, ip.dst, tag, header)
            }
        }
        TAGGED_UDP_PROTO => {
            let format = match hint {
                DecodeHint::Format5 => PacketFormat::F5,
                DecodeHint::Format6 => PacketFormat::F6,
                _ => return Err(WireError::HintMismatch),
            };
            let short = ip.payload.get(..4).ok_or(WireError::Truncated)?;
            let tag = DomainTag::from_short(short.try_into().unwrap())?;
            let header = super::decode_header(&ip.payload[4..])?;
            ConetPacket::new(format, ip.src, ip.dst, Some(tag), header)
        }
        p => Err(WireError::UnknownProtocol(p)),
    }
}

/// Extracts the single CONET option's content from the IPv4 option area.
fn parse_option(options: &[u8]) -> Result<&[u8], WireError> {
    if options.first() != Some(&CONET_OPTION_TYPE) {
        return Err(WireError::BadIpHeader("expected the carrier option first"));
    }
    let opt_len = usize::from(*options.get(1).ok_or(WireError::Truncated)?);
    if opt_len < 2 || opt_len > options.len() {
        return Err(WireError::BadIpHeader("option length out of range"));
    }
    // Anything after the option must be padding.
    if options[opt_len..].iter().any(|&b| b != 0) {
        return Err(WireError::BadIpHeader("non-zero option padding"));
    }
    Ok(&options[2..opt_len])
}

/// The flow fields an OpenFlow 1.0 match inspects. For protocols 17 and 6
/// the transport ports are read from the first four payload bytes, which is
/// exactly where the tagged formats place the tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiveTuple {
    pub ip_src: Ipv4Addr,
    pub ip_dst: Ipv4Addr,
    pub proto: u8,
    pub tp_src: Option<u16>,
    pub tp_dst: Option<u16>,
}

/// Standard 5-tuple extraction from a raw IPv4 packet. Does not verify the
/// checksum; this is the switch fast path.
pub fn five_tuple(b: &[u8]) -> Result<FiveTuple, WireError> {
    let ip = parse_ipv4(b, false)?;
    let (tp_src, tp_dst) = if matches!(ip.proto, 6 | 17) && ip.payload.len() >= 4 {
        (
            Some(u16::from_be_bytes([ip.payload[0], ip.payload[1]])),
            Some(u16::from_be_bytes([ip.payload[2], ip.payload[3]])),
        )
    } else {
        (None, None)
    };
    Ok(FiveTuple {
        ip_src: ip.src,
        ip_dst: ip.dst,
        proto: ip.proto,
        tp_src,
        tp_dst,
    })
}

/// Applies a domain tag to a native untagged (#2) packet, producing the
/// 8-byte (#4) or 4-byte (#6) tagged form. The header itself is untouched.
pub fn tag_packet(
    p: &ConetPacket,
    tag: DomainTag,
    target: PacketFormat,
) -> Result<ConetPacket, WireError> {
    if p.tag.is_some() {
        return Err(WireError::AlreadyTagged);
    }
    if p.format != PacketFormat::F2 {
        return Err(WireError::UnsupportedFormat(p.format));
    }
    let (format, tag) = match target {
        PacketFormat::F4 => (PacketFormat::F4, tag),
        PacketFormat::F6 => (PacketFormat::F6, tag.to_short_form()?),
        other => return Err(WireError::UnsupportedFormat(other)),
    };
    ConetPacket::new(format, p.ip_src, p.ip_dst, Some(tag), p.header.clone())
}

/// Strips the tag from a #4/#5/#6 packet, restoring the native #2 form.
pub fn untag_packet(p: &ConetPacket) -> Result<(ConetPacket, DomainTag), WireError> {
    match p.format {
        PacketFormat::F4 | PacketFormat::F5 | PacketFormat::F6 => {
            let tag = p.tag.expect("tagged formats always carry a tag");
            let native =
                ConetPacket::new(PacketFormat::F2, p.ip_src, p.ip_dst, None, p.header.clone())?;
            Ok((native, tag))
        }
        PacketFormat::F1 | PacketFormat::F2 => Err(WireError::NotTagged),
        PacketFormat::F3 => Err(WireError::UnsupportedFormat(PacketFormat::F3)),
    }
}
