//! The domain edge node: forwards interests by name with an on-demand
//! lookup cache, queues interests while a lookup is in flight, applies the
//! domain tag on ingress and strips it on egress, and remembers the
//! name-to-tag association so returning data is re-tagged for the trip
//! back through the domain.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::naming::ContentName;
use crate::nrs::{ControlMessage, FibExportEntry};
use crate::time::SimTime;
use crate::wire::{
    encode_packet, tag_packet, untag_packet, ConetPacket, DomainTag, PacketFormat, PacketType,
};

use super::{Fib, Frame, Mac, NodeId};

#[derive(Debug, Clone)]
pub struct EdgeConfig {
    pub fib_capacity: usize,
    pub pending_capacity: usize,
    pub lookup_timeout_us: u64,
    pub tag_memory_capacity: usize,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            fib_capacity: 1024,
            pending_capacity: 256,
            lookup_timeout_us: 500_000,
            tag_memory_capacity: 8192,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    QueueFull,
    LookupTimeout,
    NoRoute,
    NoTagMemory,
    NoNeighborMac,
    Malformed,
}

/// Observable side notes for the event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeNote {
    FibMiss {
        name: ContentName,
        emitted_lookup: bool,
    },
    FibHit {
        name: ContentName,
    },
    FibInstalled {
        prefix: ContentName,
        evicted: Option<ContentName>,
    },
    Dropped {
        reason: DropReason,
        name: Option<ContentName>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeEffect {
    /// Emit a frame on the domain-facing interface.
    ForwardInside(Frame),
    /// Hand a native packet to the co-located terminal.
    DeliverOutside(ConetPacket),
    /// Send a control message to the controller.
    Control(ControlMessage),
    /// Ask the harness to call `expire_pending` no later than this.
    TimerAt(SimTime),
    Note(EdgeNote),
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct EdgeCounters {
    pub interests_in: u64,
    pub interests_out: u64,
    pub data_in_bytes: u64,
    pub data_out_bytes: u64,
    pub fib_hits: u64,
    pub fib_misses: u64,
    pub lookups_sent: u64,
    pub tag_requests_sent: u64,
    pub drops_queue_full: u64,
    pub drops_timeout: u64,
    pub drops_no_route: u64,
    pub drops_other: u64,
}

#[derive(Debug, Clone)]
struct Pending {
    packet: ConetPacket,
    enqueue_time: SimTime,
}

/// Insertion-order-bounded map.
#[derive(Debug, Clone)]
struct BoundedMap<K: Ord + Clone, V> {
    map: BTreeMap<K, V>,
    order: VecDeque<K>,
    capacity: usize,
}

impl<K: Ord + Clone, V> BoundedMap<K, V> {
    fn new(capacity: usize) -> Self {
        Self {
            map: BTreeMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    fn insert(&mut self, k: K, v: V) {
        if self.map.insert(k.clone(), v).is_none() {
            self.order.push_back(k);
            while self.map.len() > self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.map.remove(&old);
                }
            }
        }
    }

    fn get(&self, k: &K) -> Option<&V> {
        self.map.get(k)
    }
}

#[derive(Debug, Clone)]
pub struct EdgeNode {
    id: NodeId,
    mac: Mac,
    fib: Fib,
    pending: VecDeque<Pending>,
    outstanding_lookups: BTreeSet<ContentName>,
    outstanding_tag_requests: BTreeSet<ContentName>,
    /// Per-name tags learned from replies; consulted when the matching
    /// table entry is a broader prefix whose tag cannot apply.
    tag_overlay: BoundedMap<ContentName, DomainTag>,
    /// (name, csn) -> (tag, requester mac), recorded while stripping the
    /// tag from an interest so the returning data can be re-tagged.
    tag_memory: BoundedMap<(ContentName, u64), (DomainTag, Mac)>,
    /// Static neighbor table: node id -> mac for frames into the domain.
    mac_of: BTreeMap<NodeId, Mac>,
    interest_counts: BTreeMap<ContentName, u64>,
    counters: EdgeCounters,
    config: EdgeConfig,
}

impl EdgeNode {
    pub fn new(id: NodeId, mac: Mac, mac_of: BTreeMap<NodeId, Mac>, config: EdgeConfig) -> Self {
        Self {
            id,
            mac,
            fib: Fib::new(config.fib_capacity),
            pending: VecDeque::new(),
            outstanding_lookups: BTreeSet::new(),
            outstanding_tag_requests: BTreeSet::new(),
            tag_overlay: BoundedMap::new(config.tag_memory_capacity),
            tag_memory: BoundedMap::new(config.tag_memory_capacity),
            mac_of,
            interest_counts: BTreeMap::new(),
            counters: EdgeCounters::default(),
            config,
        }
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn mac(&self) -> Mac {
        self.mac
    }

    pub fn counters(&self) -> &EdgeCounters {
        &self.counters
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn fib(&self) -> &Fib {
        &self.fib
    }

    pub fn setup_message(&self) -> ControlMessage {
        ControlMessage::ConnectionSetup {
            node: self.id.clone(),
            kind: crate::nrs::NodeKind::Edge,
        }
    }

    /// A native packet arriving from the co-located terminal.
    pub fn handle_outside(&mut self, packet: ConetPacket, now: SimTime) -> Vec<EdgeEffect> {
        let mut fx = Vec::new();
        match packet.header().ptype() {
            PacketType::Interest => {
                self.counters.interests_in += 1;
                *self
                    .interest_counts
                    .entry(packet.header().name().clone())
                    .or_insert(0) += 1;
                self.forward_or_queue(packet, now, false, &mut fx);
            }
            PacketType::Data => {
                let key = (packet.header().name().clone(), packet.header().csn());
                match self.tag_memory.get(&key) {
                    Some(&(tag, requester)) => match tag_packet(&packet, tag, PacketFormat::F6) {
                        Ok(tagged) => self.emit_inside(&tagged, requester, &mut fx),
                        Err(_) => self.drop(DropReason::Malformed, Some(key.0), &mut fx),
                    },
                    None => self.drop(DropReason::NoTagMemory, Some(key.0), &mut fx),
                }
            }
        }
        fx
    }

    /// A tagged frame arriving from the domain side.
    pub fn handle_inside(&mut self, frame: &Frame, _now: SimTime) -> Vec<EdgeEffect> {
        let mut fx = Vec::new();
        let packet =
            match crate::wire::decode_packet(&frame.payload, crate::wire::DecodeHint::Format6) {
                Ok(p) => p,
                Err(_) => {
                    self.drop(DropReason::Malformed, None, &mut fx);
                    return fx;
                }
            };
        match untag_packet(&packet) {
            Ok((native, tag)) => match native.header().ptype() {
                PacketType::Interest => {
                    self.counters.interests_in += 1;
                    let key = (native.header().name().clone(), native.header().csn());
                    self.tag_memory.insert(key, (tag, frame.src));
                    fx.push(EdgeEffect::DeliverOutside(native));
                }
                PacketType::Data => {
                    self.counters.data_in_bytes += frame.payload.len() as u64;
                    fx.push(EdgeEffect::DeliverOutside(native));
                }
            },
            Err(_) => self.drop(DropReason::Malformed, None, &mut fx),
        }
        fx
    }

    /// A decoded control message from the controller.
    pub fn handle_control(&mut self, msg: &ControlMessage, now: SimTime) -> Vec<EdgeEffect> {
        let mut fx = Vec::new();
        match msg {
            ControlMessage::NameLookupReply { name, route } => {
                self.outstanding_lookups.remove(name);
                match route {
                    Some(route) => {
                        self.tag_overlay.insert(name.clone(), route.tag);
                        self.install(
                            route.prefix.clone(),
                            route.next_hop.clone(),
                            Some(route.tag),
                            now,
                            &mut fx,
                        );
                        self.release_matching(|n| route.prefix.is_prefix_of(n), now, &mut fx);
                    }
                    None => {
                        let dropped = self.take_pending(|n| n == name);
                        for _ in dropped {
                            self.counters.drops_no_route += 1;
                            fx.push(EdgeEffect::Note(EdgeNote::Dropped {
                                reason: DropReason::NoRoute,
                                name: Some(name.clone()),
                            }));
                        }
                    }
                }
            }
            ControlMessage::TagReply { name, tag } => {
                self.outstanding_tag_requests.remove(name);
                self.tag_overlay.insert(name.clone(), *tag);
                self.release_matching(|n| n == name, now, &mut fx);
            }
            ControlMessage::FibExportRequest => {
                let entries = self
                    .fib
                    .export()
                    .into_iter()
                    .map(|e| FibExportEntry {
                        prefix: e.prefix,
                        next_hop: e.next_hop,
                        tag: e.tag,
                    })
                    .collect();
                fx.push(EdgeEffect::Control(ControlMessage::FibExportReply {
                    entries,
                }));
            }
            // Asynchronous/proactive route install (an unsolicited reply).
            _ => {}
        }
        fx
    }

    /// Proactive table install, bypassing any lookup.
    pub fn install_route(
        &mut self,
        prefix: ContentName,
        next_hop: NodeId,
        tag: Option<DomainTag>,
        now: SimTime,
    ) -> Vec<EdgeEffect> {
        let mut fx = Vec::new();
        self.install(prefix.clone(), next_hop, tag, now, &mut fx);
        self.release_matching(|n| prefix.is_prefix_of(n), now, &mut fx);
        fx
    }

    /// Drops queued interests whose lookup deadline has passed.
    pub fn expire_pending(&mut self, now: SimTime) -> Vec<EdgeEffect> {
        let mut fx = Vec::new();
        let timeout = self.config.lookup_timeout_us;
        let expired = self.take_pending_full(|p| p.enqueue_time.plus(timeout) <= now);
        for p in expired {
            self.counters.drops_timeout += 1;
            let name = p.packet.header().name().clone();
            // Allow a later interest to retry the lookup.
            if !self
                .pending
                .iter()
                .any(|q| q.packet.header().name() == &name)
            {
                self.outstanding_lookups.remove(&name);
                self.outstanding_tag_requests.remove(&name);
            }
            fx.push(EdgeEffect::Note(EdgeNote::Dropped {
                reason: DropReason::LookupTimeout,
                name: Some(name),
            }));
        }
        if let Some(front) = self.pending.front() {
            fx.push(EdgeEffect::TimerAt(front.enqueue_time.plus(timeout)));
        }
        fx
    }

    /// Drains the per-name interest counters into a summary report.
    pub fn summary_flush(&mut self) -> Option<ControlMessage> {
        if self.interest_counts.is_empty() {
            return None;
        }
        let counts = std::mem::take(&mut self.interest_counts)
            .into_iter()
            .map(|(name, count)| crate::nrs::NameCount { name, count })
            .collect();
        Some(ControlMessage::InterestSummary {
            node: self.id.clone(),
            counts,
        })
    }

    /// Core forwarding step. `released` marks interests re-run after a
    /// reply; those were already accounted as misses when first seen.
    fn forward_or_queue(
        &mut self,
        packet: ConetPacket,
        now: SimTime,
        released: bool,
        fx: &mut Vec<EdgeEffect>,
    ) {
        let name = packet.header().name().clone();
        match self.fib.lookup(&name, now) {
            Some(entry) => {
                if !released {
                    self.counters.fib_hits += 1;
                    fx.push(EdgeEffect::Note(EdgeNote::FibHit { name: name.clone() }));
                }
                // The entry's tag only stands for the exact name it was
                // resolved for; broader prefixes need the per-name overlay.
                let tag = if entry.prefix == name {
                    entry.tag
                } else {
                    None
                }
                .or_else(|| self.tag_overlay.get(&name).copied());
                match tag {
                    Some(tag) => self.send_tagged(&packet, tag, &entry.next_hop, fx),
                    None => {
                        if self.enqueue(packet, now, fx)
                            && !self.outstanding_tag_requests.contains(&name)
                        {
                            self.outstanding_tag_requests.insert(name.clone());
                            self.counters.tag_requests_sent += 1;
                            fx.push(EdgeEffect::Control(ControlMessage::TagRequest { name }));
                        }
                    }
                }
            }
            None => {
                if !released {
                    self.counters.fib_misses += 1;
                }
                let csn = packet.header().csn();
                let queued = self.enqueue(packet, now, fx);
                let emit = queued && !self.outstanding_lookups.contains(&name);
                fx.push(EdgeEffect::Note(EdgeNote::FibMiss {
                    name: name.clone(),
                    emitted_lookup: emit,
                }));
                if emit {
                    self.outstanding_lookups.insert(name.clone());
                    self.counters.lookups_sent += 1;
                    fx.push(EdgeEffect::Control(ControlMessage::NameLookup {
                        name,
                        csn,
                    }));
                }
            }
        }
    }

    fn send_tagged(
        &mut self,
        packet: &ConetPacket,
        tag: DomainTag,
        next_hop: &NodeId,
        fx: &mut Vec<EdgeEffect>,
    ) {
        let Some(&dst) = self.mac_of.get(next_hop) else {
            self.drop(
                DropReason::NoNeighborMac,
                Some(packet.header().name().clone()),
                fx,
            );
            return;
        };
        match tag_packet(packet, tag, PacketFormat::F6) {
            Ok(tagged) => {
                self.counters.interests_out += 1;
                self.emit_inside(&tagged, dst, fx);
            }
            Err(_) => self.drop(
                DropReason::Malformed,
                Some(packet.header().name().clone()),
                fx,
            ),
        }
    }

    fn emit_inside(&mut self, packet: &ConetPacket, dst: Mac, fx: &mut Vec<EdgeEffect>) {
        let bytes = encode_packet(packet);
        if packet.header().ptype() == PacketType::Data {
            self.counters.data_out_bytes += bytes.len() as u64;
        }
        fx.push(EdgeEffect::ForwardInside(Frame::ipv4(self.mac, dst, bytes)));
    }

    fn enqueue(&mut self, packet: ConetPacket, now: SimTime, fx: &mut Vec<EdgeEffect>) -> bool {
        if self.pending.len() >= self.config.pending_capacity {
            self.counters.drops_queue_full += 1;
            fx.push(EdgeEffect::Note(EdgeNote::Dropped {
                reason: DropReason::QueueFull,
                name: Some(packet.header().name().clone()),
            }));
            return false;
        }
        self.pending.push_back(Pending {
            packet,
            enqueue_time: now,
        });
        fx.push(EdgeEffect::TimerAt(now.plus(self.config.lookup_timeout_us)));
        true
    }

    fn install(
        &mut self,
        prefix: ContentName,
        next_hop: NodeId,
        tag: Option<DomainTag>,
        now: SimTime,
        fx: &mut Vec<EdgeEffect>,
    ) {
        let evicted = self.fib.install(prefix.clone(), next_hop, tag, now);
        fx.push(EdgeEffect::Note(EdgeNote::FibInstalled { prefix, evicted }));
    }

    /// Re-runs forwarding, in FIFO order, for queued interests matching the
    /// predicate.
    fn release_matching<F: Fn(&ContentName) -> bool>(
        &mut self,
        pred: F,
        now: SimTime,
        fx: &mut Vec<EdgeEffect>,
    ) {
        let released = self.take_pending(|n| pred(n));
        for packet in released {
            self.forward_or_queue(packet, now, true, fx);
        }
    }

    fn take_pending<F: Fn(&ContentName) -> bool>(&mut self, pred: F) -> Vec<ConetPacket> {
        self.take_pending_full(|p| pred(p.packet.header().name()))
            .into_iter()
            .map(|p| p.packet)
            .collect()
    }

    fn take_pending_full<F: Fn(&Pending) -> bool>(&mut self, pred: F) -> Vec<Pending> {
        let mut taken = Vec::new();
        let mut kept = VecDeque::with_capacity(self.pending.len());
        for p in self.pending.drain(..) {
            if pred(&p) {
                taken.push(p);
            } else {
                kept.push_back(p);
            }
        }
        self.pending = kept;
        taken
    }

    fn drop(&mut self, reason: DropReason, name: Option<ContentName>, fx: &mut Vec<EdgeEffect>) {
        self.counters.drops_other += 1;
        fx.push(EdgeEffect::Note(EdgeNote::Dropped { reason, name }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nrs::RouteInfo;
    use crate::wire::ConetHeader;
    use std::net::Ipv4Addr;

    const INTEREST_ADDR: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 8);
    const DATA_ADDR: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 23);

    fn name(s: &str) -> ContentName {
        ContentName::parse(s).unwrap()
    }

    fn interest(n: &str, csn: u64) -> ConetPacket {
        ConetPacket::new(
            PacketFormat::F2,
            DATA_ADDR,
            INTEREST_ADDR,
            None,
            ConetHeader::interest(name(n), csn, 1).unwrap(),
        )
        .unwrap()
    }

    fn data(n: &str, csn: u64, payload: &[u8]) -> ConetPacket {
        ConetPacket::new(
            PacketFormat::F2,
            INTEREST_ADDR,
            DATA_ADDR,
            None,
            ConetHeader::data(name(n), csn, 1, 1, payload.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn edge() -> EdgeNode {
        edge_with(EdgeConfig::default())
    }

    fn edge_with(config: EdgeConfig) -> EdgeNode {
        let mut macs = BTreeMap::new();
        macs.insert("server0".to_string(), Mac([2, 0, 0, 0, 0, 9]));
        EdgeNode::new("client0".into(), Mac([2, 0, 0, 0, 0, 1]), macs, config)
    }

    fn tag(v: u32) -> DomainTag {
        DomainTag::new([
            (v >> 24) as u8,
            (v >> 16) as u8,
            (v >> 8) as u8,
            v as u8,
            0,
            0,
            0,
            0,
        ])
        .unwrap()
    }

    fn reply(n: &str, t: DomainTag) -> ControlMessage {
        ControlMessage::NameLookupReply {
            name: name(n),
            route: Some(RouteInfo {
                prefix: name(n),
                next_hop: "server0".into(),
                tag: t,
            }),
        }
    }

    fn lookups(fx: &[EdgeEffect]) -> usize {
        fx.iter()
            .filter(|e| matches!(e, EdgeEffect::Control(ControlMessage::NameLookup { .. })))
            .count()
    }

    fn frames(fx: &[EdgeEffect]) -> Vec<&Frame> {
        fx.iter()
            .filter_map(|e| match e {
                EdgeEffect::ForwardInside(f) => Some(f),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn one_lookup_for_two_interests_then_both_forwarded() {
        let mut e = edge();
        let fx1 = e.handle_outside(interest("foo.com/x", 0), SimTime(0));
        let fx2 = e.handle_outside(interest("foo.com/x", 1), SimTime(10));
        assert_eq!(lookups(&fx1), 1);
        assert_eq!(
            lookups(&fx2),
            0,
            "second miss for the same name must not re-emit"
        );
        assert_eq!(e.pending_len(), 2);

        let fx3 = e.handle_control(&reply("foo.com/x", tag(1)), SimTime(20));
        let out = frames(&fx3);
        assert_eq!(out.len(), 2, "both queued interests released in order");
        assert_eq!(e.pending_len(), 0);
        // Released frames carry the tag in the fictitious port positions.
        let ft = crate::wire::five_tuple(&out[0].payload).unwrap();
        assert_eq!((ft.tp_src, ft.tp_dst), (Some(0), Some(1)));
    }

    #[test]
    fn fib_hit_sends_zero_control_messages() {
        let mut e = edge();
        e.handle_outside(interest("foo.com/x", 0), SimTime(0));
        e.handle_control(&reply("foo.com/x", tag(1)), SimTime(1));
        let fx = e.handle_outside(interest("foo.com/x", 5), SimTime(2));
        assert_eq!(
            fx.iter()
                .filter(|e| matches!(e, EdgeEffect::Control(_)))
                .count(),
            0
        );
        assert_eq!(frames(&fx).len(), 1);
        assert_eq!(e.counters().fib_hits, 1);
    }

    #[test]
    fn queue_full_drops_and_counts() {
        let mut e = edge_with(EdgeConfig {
            pending_capacity: 2,
            ..EdgeConfig::default()
        });
        e.handle_outside(interest("a.com/1", 0), SimTime(0));
        e.handle_outside(interest("a.com/2", 0), SimTime(0));
        let fx = e.handle_outside(interest("a.com/3", 0), SimTime(0));
        assert_eq!(e.counters().drops_queue_full, 1);
        assert!(fx.iter().any(|x| matches!(
            x,
            EdgeEffect::Note(EdgeNote::Dropped {
                reason: DropReason::QueueFull,
                ..
            })
        )));
        // The dropped interest emitted no lookup.
        assert_eq!(lookups(&fx), 0);
    }

    #[test]
    fn lookup_timeout_expires_queued_interests() {
        let mut e = edge();
        e.handle_outside(interest("a.com/1", 0), SimTime(0));
        let fx = e.expire_pending(SimTime(500_000));
        assert_eq!(e.pending_len(), 0);
        assert_eq!(e.counters().drops_timeout, 1);
        assert!(fx.iter().any(|x| matches!(
            x,
            EdgeEffect::Note(EdgeNote::Dropped {
                reason: DropReason::LookupTimeout,
                ..
            })
        )));
        // A later interest for the same name re-emits the lookup.
        let fx = e.handle_outside(interest("a.com/1", 0), SimTime(600_000));
        assert_eq!(lookups(&fx), 1);
    }

    #[test]
    fn no_route_reply_drops_pending() {
        let mut e = edge();
        e.handle_outside(interest("zzz.example/x", 0), SimTime(0));
        let fx = e.handle_control(
            &ControlMessage::NameLookupReply {
                name: name("zzz.example/x"),
                route: None,
            },
            SimTime(1),
        );
        assert_eq!(e.pending_len(), 0);
        assert_eq!(e.counters().drops_no_route, 1);
        assert!(frames(&fx).is_empty());
    }

    #[test]
    fn proactive_install_serves_without_lookup() {
        let mut e = edge();
        let fx = e.install_route(name("foo.com"), "server0".into(), None, SimTime(0));
        assert!(fx
            .iter()
            .any(|x| matches!(x, EdgeEffect::Note(EdgeNote::FibInstalled { .. }))));
        // Hit on the prefix, but the prefix carries no per-name tag: the
        // edge asks for one instead of issuing a name lookup.
        let fx = e.handle_outside(interest("foo.com/video", 0), SimTime(1));
        assert_eq!(lookups(&fx), 0);
        assert_eq!(
            fx.iter()
                .filter(|x| matches!(x, EdgeEffect::Control(ControlMessage::TagRequest { .. })))
                .count(),
            1
        );
        let fx = e.handle_control(
            &ControlMessage::TagReply {
                name: name("foo.com/video"),
                tag: tag(7),
            },
            SimTime(2),
        );
        assert_eq!(frames(&fx).len(), 1);
    }

    #[test]
    fn data_reverse_path_reuses_remembered_tag() {
        let mut server_edge = edge();
        // A tagged interest arrives from the domain.
        let t = tag(0x0102);
        let native = interest("foo.com/x", 3);
        let tagged = crate::wire::tag_packet(&native, t, PacketFormat::F6).unwrap();
        let frame = Frame::ipv4(
            Mac([2, 0, 0, 0, 0, 1]),
            server_edge.mac(),
            encode_packet(&tagged),
        );
        let fx = server_edge.handle_inside(&frame, SimTime(0));
        assert!(matches!(&fx[..], [EdgeEffect::DeliverOutside(p)] if p == &native));

        // The server answers natively; the edge re-applies the same tag and
        // addresses the frame back to the interest's source mac.
        let fx = server_edge.handle_outside(data("foo.com/x", 3, b"abc"), SimTime(1));
        let out = frames(&fx);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].dst, Mac([2, 0, 0, 0, 0, 1]));
        let p =
            crate::wire::decode_packet(&out[0].payload, crate::wire::DecodeHint::Format6).unwrap();
        assert_eq!(p.tag(), Some(t));
        // Header bytes identical to the native form after untagging.
        let (back, _) = untag_packet(&p).unwrap();
        assert_eq!(back, data("foo.com/x", 3, b"abc"));
    }

    #[test]
    fn data_without_tag_memory_is_dropped() {
        let mut e = edge();
        let fx = e.handle_outside(data("foo.com/x", 0, b"z"), SimTime(0));
        assert!(frames(&fx).is_empty());
        assert!(fx.iter().any(|x| matches!(
            x,
            EdgeEffect::Note(EdgeNote::Dropped {
                reason: DropReason::NoTagMemory,
                ..
            })
        )));
    }

    #[test]
    fn fib_export_runs_over_control_channel() {
        let mut e = edge();
        e.install_route(name("foo.com"), "server0".into(), None, SimTime(0));
        let fx = e.handle_control(&ControlMessage::FibExportRequest, SimTime(1));
        match &fx[..] {
            [EdgeEffect::Control(ControlMessage::FibExportReply { entries })] => {
                assert_eq!(entries.len(), 1);
                assert_eq!(entries[0].prefix, name("foo.com"));
            }
            other => panic!("unexpected effects {other:?}"),
        }
    }

    #[test]
    fn summary_flush_drains_counts() {
        let mut e = edge();
        e.handle_outside(interest("foo.com/x", 0), SimTime(0));
        e.handle_outside(interest("foo.com/x", 1), SimTime(1));
        e.handle_outside(interest("foo.com/y", 0), SimTime(2));
        match e.summary_flush() {
            Some(ControlMessage::InterestSummary { node, counts }) => {
                assert_eq!(node, "client0");
                assert_eq!(counts.len(), 2);
                assert_eq!(counts[0].count + counts[1].count, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(
            e.summary_flush().is_none(),
            "second flush has nothing to report"
        );
    }

    proptest::proptest! {
        /// For any interleaving of interests and lookup replies, the
        /// lookups emitted equal the number of interests that missed while
        /// no lookup for their name was in flight: no duplicates, no gaps.
        #[test]
        fn lookup_dedup_invariant(ops in proptest::collection::vec((0u8..6, proptest::bool::ANY), 1..80)) {
            let mut e = edge();
            let mut lookups_sent = 0u64;
            let mut expected = 0u64;
            let mut in_flight = std::collections::BTreeSet::new();
            let mut resolved = std::collections::BTreeSet::new();
            for (i, (key, do_reply)) in ops.into_iter().enumerate() {
                let n = format!("pool.example/{key}");
                if do_reply && in_flight.contains(&key) {
                    e.handle_control(&reply(&n, tag(key as u32 + 1)), SimTime(i as u64));
                    in_flight.remove(&key);
                    resolved.insert(key);
                } else {
                    let fx = e.handle_outside(interest(&n, 0), SimTime(i as u64));
                    lookups_sent += lookups(&fx) as u64;
                    if !resolved.contains(&key) && !in_flight.contains(&key) {
                        // A miss with no lookup in flight must emit one.
                        expected += 1;
                        in_flight.insert(key);
                    }
                }
            }
            proptest::prop_assert_eq!(lookups_sent, expected);
            proptest::prop_assert_eq!(e.counters().lookups_sent, expected);
        }
    }
}
