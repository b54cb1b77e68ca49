//! The external cache server: assembles chunks from duplicated data
//! packets, notifies the controller on completion, and answers redirected
//! interests from its store.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use serde::Serialize;

use crate::ictp::{Chunk, ChunkAssembler};
use crate::naming::ContentName;
use crate::node::{Frame, Mac, NodeId};
use crate::nrs::{ControlMessage, NodeKind};
use crate::time::SimTime;
use crate::wire::{
    decode_packet, encode_packet, ConetHeader, ConetPacket, DecodeHint, PacketFormat, PacketType,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CacheError {
    #[error("chunk not cached")]
    NotCached,
    #[error("segment {segment} exceeds the chunk's {total} segments")]
    SegmentOutOfRange { segment: u16, total: u16 },
}

#[derive(Debug, Clone)]
struct StoredChunk {
    bytes: Vec<u8>,
    /// Byte length of each segment, in order; preserves the exact original
    /// framing so served payloads are byte-identical to the origin's.
    seg_lens: Vec<usize>,
    lru_seq: u64,
}

/// Bounded store of complete chunks plus in-progress assembly buffers.
#[derive(Debug, Clone)]
pub struct ContentStore {
    chunks: BTreeMap<(ContentName, u64), StoredChunk>,
    assembly: BTreeMap<(ContentName, u64), ChunkAssembler>,
    capacity: usize,
    assembly_capacity: usize,
    lru_counter: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            chunks: BTreeMap::new(),
            assembly: BTreeMap::new(),
            capacity,
            assembly_capacity: 1024,
            lru_counter: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn contains(&self, name: &ContentName, csn: u64) -> bool {
        self.chunks.contains_key(&(name.clone(), csn))
    }

    /// Feeds one data header into assembly. Returns the identity of a chunk
    /// that just became complete, if any. Duplicates (and segments for
    /// already-stored chunks) complete nothing.
    pub fn ingest(&mut self, header: &ConetHeader) -> Option<(ContentName, u64)> {
        if header.ptype() != PacketType::Data {
            return None;
        }
        let key = (header.name().clone(), header.csn());
        if self.chunks.contains_key(&key) {
            return None;
        }
        match self.assembly.get_mut(&key) {
            Some(asm) => {
                if asm.add(header).ok()? && asm.is_complete() {
                    let asm = self.assembly.remove(&key).expect("just found");
                    let chunk = asm.chunk();
                    self.store(key.clone(), chunk, asm.segment_lengths());
                    return Some(key);
                }
                None
            }
            None => {
                let asm = ChunkAssembler::start(header).ok()?;
                if asm.is_complete() {
                    let chunk = asm.chunk();
                    self.store(key.clone(), chunk, asm.segment_lengths());
                    return Some(key);
                }
                if self.assembly.len() >= self.assembly_capacity {
                    // Drop the oldest buffer wholesale; reassembly restarts
                    // if those segments show up again.
                    if let Some(old) = self.assembly.keys().next().cloned() {
                        self.assembly.remove(&old);
                    }
                }
                self.assembly.insert(key, asm);
                None
            }
        }
    }

    /// Stores a complete chunk directly (the proactive-push path), deriving
    /// uniform segment framing from `cp_payload_size`. Returns false if the
    /// chunk was already present.
    pub fn insert_complete(
        &mut self,
        name: &ContentName,
        csn: u64,
        bytes: Vec<u8>,
        cp_payload_size: usize,
    ) -> bool {
        let key = (name.clone(), csn);
        if self.chunks.contains_key(&key) || bytes.is_empty() || cp_payload_size == 0 {
            return false;
        }
        let mut seg_lens = Vec::new();
        let mut left = bytes.len();
        while left > 0 {
            let take = left.min(cp_payload_size);
            seg_lens.push(take);
            left -= take;
        }
        let chunk = Chunk {
            name: name.clone(),
            csn,
            bytes,
            complete: true,
        };
        self.store(key, chunk, seg_lens);
        true
    }

    fn store(&mut self, key: (ContentName, u64), chunk: Chunk, seg_lens: Vec<usize>) {
        debug_assert!(chunk.complete);
        while self.chunks.len() >= self.capacity {
            // Evict least recently used. No retraction is sent; a stale
            // redirect later yields a miss answered by the harness.
            let victim = self
                .chunks
                .iter()
                .min_by_key(|(_, s)| s.lru_seq)
                .map(|(k, _)| k.clone())
                .expect("full store is non-empty");
            self.chunks.remove(&victim);
        }
        self.lru_counter += 1;
        self.chunks.insert(
            key,
            StoredChunk {
                bytes: chunk.bytes,
                seg_lens,
                lru_seq: self.lru_counter,
            },
        );
    }

    /// Returns the exact payload of one segment of a complete chunk and the
    /// chunk's total segment count. Refreshes recency.
    pub fn serve(
        &mut self,
        name: &ContentName,
        csn: u64,
        segment: u16,
    ) -> Result<(Vec<u8>, u16), CacheError> {
        let key = (name.clone(), csn);
        let stored = self.chunks.get_mut(&key).ok_or(CacheError::NotCached)?;
        let total = stored.seg_lens.len() as u16;
        if segment == 0 || segment > total {
            return Err(CacheError::SegmentOutOfRange { segment, total });
        }
        self.lru_counter += 1;
        stored.lru_seq = self.lru_counter;
        let start: usize = stored.seg_lens[..segment as usize - 1].iter().sum();
        let len = stored.seg_lens[segment as usize - 1];
        Ok((stored.bytes[start..start + len].to_vec(), total))
    }

    /// Exactly the complete chunks, ordered by (name, csn).
    pub fn inventory(&self) -> Vec<(ContentName, u64)> {
        self.chunks.keys().cloned().collect()
    }
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct CacheCounters {
    pub segments_ingested: u64,
    pub chunks_completed: u64,
    pub interests_served: u64,
    pub nacks: u64,
    pub malformed_dropped: u64,
}

/// Effects of one frame at the cache server.
#[derive(Debug, Clone, Default)]
pub struct CacheEffects {
    /// Completion notifications for the controller.
    pub notifications: Vec<ControlMessage>,
    /// Data replies to emit on the data port.
    pub replies: Vec<Frame>,
    /// What each reply answered, for observability.
    pub served: Vec<(ContentName, u64, u16)>,
    /// Interests the cache could not answer; the harness forwards these to
    /// the origin (a stale controller redirect is the usual cause).
    pub misses: Vec<Frame>,
}

/// The cache node: a content store behind one switch port.
#[derive(Debug, Clone)]
pub struct CacheServer {
    id: NodeId,
    mac: Mac,
    data_addr: Ipv4Addr,
    store: ContentStore,
    cp_payload_size: usize,
    counters: CacheCounters,
}

impl CacheServer {
    pub fn new(
        id: NodeId,
        mac: Mac,
        data_addr: Ipv4Addr,
        capacity: usize,
        cp_payload_size: usize,
    ) -> Self {
        Self {
            id,
            mac,
            data_addr,
            store: ContentStore::new(capacity),
            cp_payload_size,
            counters: CacheCounters::default(),
        }
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn mac(&self) -> Mac {
        self.mac
    }

    pub fn store(&self) -> &ContentStore {
        &self.store
    }

    pub fn counters(&self) -> &CacheCounters {
        &self.counters
    }

    pub fn setup_message(&self) -> ControlMessage {
        ControlMessage::ConnectionSetup {
            node: self.id.clone(),
            kind: NodeKind::Cache,
        }
    }

    pub fn inventory(&self) -> Vec<(ContentName, u64)> {
        self.store.inventory()
    }

    /// A frame from the switch: sniffed data copies feed assembly,
    /// redirected interests are answered from the store.
    pub fn handle_frame(&mut self, frame: &Frame, _now: SimTime) -> CacheEffects {
        let mut fx = CacheEffects::default();
        let Ok(packet) = decode_packet(&frame.payload, DecodeHint::Format6) else {
            self.counters.malformed_dropped += 1;
            return fx;
        };
        match packet.header().ptype() {
            PacketType::Data => {
                self.counters.segments_ingested += 1;
                if let Some((name, csn)) = self.store.ingest(packet.header()) {
                    self.counters.chunks_completed += 1;
                    fx.notifications.push(ControlMessage::ChunkCached {
                        cache: self.id.clone(),
                        name,
                        csn,
                    });
                }
            }
            PacketType::Interest => {
                let name = packet.header().name().clone();
                let csn = packet.header().csn();
                let segment = packet.header().segment();
                match self.store.serve(&name, csn, segment) {
                    Ok((payload, total)) => {
                        self.counters.interests_served += 1;
                        let header = ConetHeader::data(name, csn, segment, total, payload)
                            .expect("stored framing is valid")
                            .with_diffserv(packet.header().diffserv_type());
                        let tag = packet.tag().expect("redirected interests are tagged");
                        let reply = ConetPacket::new(
                            PacketFormat::F6,
                            packet.ip_dst(),
                            self.data_addr,
                            Some(tag),
                            header,
                        )
                        .expect("reply mirrors a valid interest");
                        fx.served
                            .push((reply.header().name().clone(), csn, segment));
                        fx.replies
                            .push(Frame::ipv4(self.mac, frame.src, encode_packet(&reply)));
                    }
                    Err(CacheError::SegmentOutOfRange { .. }) => {
                        self.counters.malformed_dropped += 1;
                    }
                    Err(CacheError::NotCached) => {
                        self.counters.nacks += 1;
                        fx.misses.push(frame.clone());
                    }
                }
            }
        }
        fx
    }

    /// Controller-initiated push of a complete chunk. Emits the same
    /// completion notification the assembly path would, exactly once.
    pub fn handle_push(&mut self, name: &ContentName, csn: u64, content: Vec<u8>) -> CacheEffects {
        let mut fx = CacheEffects::default();
        if self
            .store
            .insert_complete(name, csn, content, self.cp_payload_size)
        {
            self.counters.chunks_completed += 1;
            fx.notifications.push(ControlMessage::ChunkCached {
                cache: self.id.clone(),
                name: name.clone(),
                csn,
            });
        }
        fx
    }
}
