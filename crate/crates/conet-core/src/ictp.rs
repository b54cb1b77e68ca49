//! Two-level segmentation: content is cut into chunks (the caching unit),
//! chunks into carrier-packet payloads (the network unit). Only the framing
//! layer lives here; reliability and congestion control do not.

use crate::naming::ContentName;
use crate::wire::{ConetHeader, WireError};

/// Default chunk size: larger than a typical MTU so chunks genuinely span
/// several carrier packets.
pub const DEFAULT_CHUNK_SIZE: usize = 4096;
/// Default carrier-packet payload size.
pub const DEFAULT_CP_PAYLOAD_SIZE: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IctpError {
    #[error("content is empty")]
    EmptyContent,
    #[error("invalid sizes: need chunk_size >= cp_payload_size >= 1, chunk_size % cp_payload_size == 0, cp_payload_size <= 65535")]
    BadSegmentSizes,
    #[error("parts disagree on total_segments")]
    InconsistentTotals,
    #[error("parts belong to different (name, csn) identities")]
    MixedIdentity,
    #[error("part is not a data packet")]
    NotData,
    #[error("segment {segment} exceeds declared total {total}")]
    SegmentOutOfRange { segment: u16, total: u16 },
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// A unit of caching: one chunk of a named content object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub name: ContentName,
    pub csn: u64,
    pub bytes: Vec<u8>,
    pub complete: bool,
}

/// Splits `content` into data headers: chunks numbered from 0, segments
/// within each chunk numbered from 1. Concatenating the payloads in
/// (csn, segment) order reproduces the content exactly.
pub fn segment(
    name: &ContentName,
    content: &[u8],
    chunk_size: usize,
    cp_payload_size: usize,
) -> Result<Vec<ConetHeader>, IctpError> {
    if content.is_empty() {
        return Err(IctpError::EmptyContent);
    }
    if cp_payload_size == 0
        || chunk_size < cp_payload_size
        || !chunk_size.is_multiple_of(cp_payload_size)
        || cp_payload_size > u16::MAX as usize
    {
        return Err(IctpError::BadSegmentSizes);
    }
    let mut out = Vec::with_capacity(content.len().div_ceil(cp_payload_size));
    for (csn, chunk) in content.chunks(chunk_size).enumerate() {
        let total = chunk.len().div_ceil(cp_payload_size) as u16;
        for (i, piece) in chunk.chunks(cp_payload_size).enumerate() {
            out.push(ConetHeader::data(
                name.clone(),
                csn as u64,
                (i + 1) as u16,
                total,
                piece.to_vec(),
            )?);
        }
    }
    Ok(out)
}

/// Incremental reassembly of one (name, csn) chunk from its segments.
/// Duplicate segments are ignored; conflicting metadata is an error.
#[derive(Debug, Clone)]
pub struct ChunkAssembler {
    name: ContentName,
    csn: u64,
    total: u16,
    segments: Vec<Option<Vec<u8>>>,
    received: u16,
}

impl ChunkAssembler {
    /// Starts assembly from the first part seen.
    pub fn start(part: &ConetHeader) -> Result<Self, IctpError> {
        let total = part.total_segments().ok_or(IctpError::NotData)?;
        let mut a = Self {
            name: part.name().clone(),
            csn: part.csn(),
            total,
            segments: vec![None; total as usize],
            received: 0,
        };
        a.add(part)?;
        Ok(a)
    }

    /// Feeds one more part. Returns true if this part was new.
    pub fn add(&mut self, part: &ConetHeader) -> Result<bool, IctpError> {
        let total = part.total_segments().ok_or(IctpError::NotData)?;
        if part.name() != &self.name || part.csn() != self.csn {
            return Err(IctpError::MixedIdentity);
        }
        if total != self.total {
            return Err(IctpError::InconsistentTotals);
        }
        let segment = part.segment();
        if segment > self.total {
            return Err(IctpError::SegmentOutOfRange {
                segment,
                total: self.total,
            });
        }
        let slot = &mut self.segments[segment as usize - 1];
        if slot.is_some() {
            return Ok(false);
        }
        *slot = Some(part.payload().to_vec());
        self.received += 1;
        Ok(true)
    }

    pub fn is_complete(&self) -> bool {
        self.received == self.total
    }

    /// Per-segment payload lengths, present segments only (in order).
    pub fn segment_lengths(&self) -> Vec<usize> {
        self.segments.iter().flatten().map(Vec::len).collect()
    }

    /// Snapshot of the chunk: payloads of the present segments concatenated
    /// in segment order, `complete` flagging whether every segment arrived.
    pub fn chunk(&self) -> Chunk {
        let mut bytes = Vec::new();
        for seg in self.segments.iter().flatten() {
            bytes.extend_from_slice(seg);
        }
        Chunk {
            name: self.name.clone(),
            csn: self.csn,
            bytes,
            complete: self.is_complete(),
        }
    }
}

/// One-shot reassembly of a set of parts for a single (name, csn).
pub fn reassemble<'a, I>(parts: I) -> Result<Chunk, IctpError>
where
    I: IntoIterator<Item = &'a ConetHeader>,
{
    let mut iter = parts.into_iter();
    let first = iter.next().ok_or(IctpError::EmptyContent)?;
    let mut assembler = ChunkAssembler::start(first)?;
    for part in iter {
        assembler.add(part)?;
    }
    Ok(assembler.chunk())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn name() -> ContentName {
        ContentName::parse("foo.com/file").unwrap()
    }

    #[test]
    fn segments_5000_bytes() {
        let content = vec![7u8; 5000];
        let parts = segment(&name(), &content, 4096, 1024).unwrap();
        // Chunk 0: 4 segments of 1024; chunk 1: 1 segment of 904.
        assert_eq!(parts.len(), 5);
        let c0: Vec<_> = parts.iter().filter(|p| p.csn() == 0).collect();
        let c1: Vec<_> = parts.iter().filter(|p| p.csn() == 1).collect();
        assert_eq!(c0.len(), 4);
        assert_eq!(c1.len(), 1);
        assert!(c0
            .iter()
            .all(|p| p.total_segments() == Some(4) && p.payload().len() == 1024));
        assert_eq!(c1[0].total_segments(), Some(1));
        assert_eq!(c1[0].payload().len(), 904);
        assert_eq!(
            c0.iter().map(|p| p.segment()).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
    }

    #[test]
    fn one_byte_content() {
        let parts = segment(&name(), &[0xAB], 4096, 1024).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].csn(), 0);
        assert_eq!(parts[0].segment(), 1);
        assert_eq!(parts[0].total_segments(), Some(1));
        assert_eq!(parts[0].payload(), &[0xAB]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            segment(&name(), &[], 4096, 1024),
            Err(IctpError::EmptyContent)
        );
        assert_eq!(
            segment(&name(), &[1], 1024, 4096),
            Err(IctpError::BadSegmentSizes)
        );
        assert_eq!(
            segment(&name(), &[1], 4096, 1000),
            Err(IctpError::BadSegmentSizes)
        );
        assert_eq!(
            segment(&name(), &[1], 0, 0),
            Err(IctpError::BadSegmentSizes)
        );
    }

    #[test]
    fn reassembly_completion_and_gaps() {
        let content: Vec<u8> = (0..3000).map(|i| (i % 251) as u8).collect();
        let parts = segment(&name(), &content, 4096, 1024).unwrap();
        assert_eq!(parts.len(), 3);
        let full = reassemble(parts.iter()).unwrap();
        assert!(full.complete);
        assert_eq!(full.bytes, content);

        let partial = reassemble([&parts[0], &parts[2]]).unwrap();
        assert!(!partial.complete);
    }

    #[test]
    fn duplicates_are_idempotent() {
        let content = vec![1u8; 2048];
        let parts = segment(&name(), &content, 4096, 1024).unwrap();
        let once = reassemble(parts.iter()).unwrap();
        let twice = reassemble([&parts[0], &parts[1], &parts[1], &parts[0]]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn inconsistent_totals_rejected() {
        let a = ConetHeader::data(name(), 0, 1, 2, vec![1]).unwrap();
        let b = ConetHeader::data(name(), 0, 2, 3, vec![2]).unwrap();
        let mut asm = ChunkAssembler::start(&a).unwrap();
        assert_eq!(asm.add(&b), Err(IctpError::InconsistentTotals));

        let other =
            ConetHeader::data(ContentName::parse("x.org/y").unwrap(), 0, 2, 2, vec![2]).unwrap();
        assert_eq!(asm.add(&other), Err(IctpError::MixedIdentity));
    }

    proptest! {
        #[test]
        fn roundtrip(content in proptest::collection::vec(any::<u8>(), 1..6000), shift in 0usize..8) {
            // chunk_size a multiple of cp_payload_size, both varying.
            let cp = 64 << (shift % 4);
            let chunk_size = cp * (1 + shift);
            let parts = segment(&name(), &content, chunk_size, cp).unwrap();

            // Payload bound: nothing exceeds cp; only the last part overall
            // may be shorter than its chunk's declared uniform size.
            for p in &parts {
                prop_assert!(p.payload().len() <= cp);
            }
            for w in parts.windows(2) {
                if w[0].csn() == w[1].csn() || w[1].segment() > 1 {
                    prop_assert_eq!(w[0].payload().len(), cp);
                }
            }

            // Reassemble chunk by chunk, concatenate in csn order.
            let mut whole = Vec::new();
            let max_csn = parts.last().unwrap().csn();
            for csn in 0..=max_csn {
                let chunk = reassemble(parts.iter().filter(|p| p.csn() == csn)).unwrap();
                prop_assert!(chunk.complete);
                whole.extend_from_slice(&chunk.bytes);
            }
            prop_assert_eq!(whole, content);
        }

        #[test]
        fn arrival_order_irrelevant(seed in any::<u64>()) {
            let content: Vec<u8> = (0..2500u32).map(|i| (i as u8).wrapping_mul(31)).collect();
            let mut parts = segment(&name(), &content, 4096, 512).unwrap();
            // Deterministic shuffle from the seed.
            let mut s = seed;
            for i in (1..parts.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                parts.swap(i, (s >> 33) as usize % (i + 1));
            }
            let chunk = reassemble(parts.iter().filter(|p| p.csn() == 0)).unwrap();
            prop_assert!(chunk.complete);
            prop_assert_eq!(&chunk.bytes[..], &content[..]);
        }
    }
}
