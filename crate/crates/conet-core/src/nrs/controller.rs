//! Controller logic: routing base, tag allocation, packet-in strategies
//! (plain learning switches vs name-based caching), cache bookkeeping, and
//! flow-rule lifecycle across mode transitions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use crate::naming::ContentName;
use crate::node::{FlowAction, FlowModOp, Mac, MatchFields, NodeId, PacketIn, PacketOut, PortId};
use crate::trie::PrefixTrie;
use crate::wire::{five_tuple, DecodeHint, DomainTag, TAGGED_UDP_PROTO};

use super::messages::{ControlMessage, FibExportEntry, NodeKind, RouteInfo};
use super::NrsError;

/// Priority of learned-destination entries in learning-switch operation.
pub const MAC_PRIORITY: u32 = 10;
/// Priority of interest rules toward the origin server.
pub const ORIGIN_PRIORITY: u32 = 100;
/// Priority of interest rules redirecting to a cache; strictly above the
/// origin path so a cached chunk always wins.
pub const REDIRECT_PRIORITY: u32 = ORIGIN_PRIORITY + 10;
/// Priority of data-forwarding (and duplication) rules.
pub const DATA_PRIORITY: u32 = 100;

/// Cookie carried by learning-switch entries.
pub const MAC_COOKIE: u64 = 1 << 56;
/// High byte of content-rule cookies; the low bits carry the mode epoch so
/// one bulk delete clears a whole caching phase.
pub const CONTENT_COOKIE_KIND: u64 = 2;

pub fn content_cookie(epoch: u64) -> u64 {
    (CONTENT_COOKIE_KIND << 56) | (epoch & 0x00FF_FFFF_FFFF_FFFF)
}

pub fn is_content_cookie(cookie: u64) -> bool {
    cookie >> 56 == CONTENT_COOKIE_KIND
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    MacLearning,
    IcnCaching,
}

impl ControllerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::MacLearning => "mac_learning",
            ControllerMode::IcnCaching => "caching",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mac_learning" => Some(ControllerMode::MacLearning),
            "caching" => Some(ControllerMode::IcnCaching),
            _ => None,
        }
    }
}

/// A published route: which node originates a prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RibEntry {
    pub origin: NodeId,
}

/// Stable, injective name-to-tag mapping. The discriminating counter lives
/// in the first four tag bytes so the short (port-field) form stays unique.
#[derive(Debug, Clone)]
pub struct TagMap {
    map: BTreeMap<ContentName, DomainTag>,
    next: u32,
    max: u32,
}

impl Default for TagMap {
    fn default() -> Self {
        Self::new()
    }
}

impl TagMap {
    pub fn new() -> Self {
        Self::with_max(u32::MAX)
    }

    /// Caps the counter; lets tests exercise exhaustion cheaply.
    pub fn with_max(max: u32) -> Self {
        Self {
            map: BTreeMap::new(),
            next: 0,
            max,
        }
    }

    pub fn allocate(&mut self, name: &ContentName) -> Result<DomainTag, NrsError> {
        if let Some(tag) = self.map.get(name) {
            return Ok(*tag);
        }
        if self.next >= self.max {
            return Err(NrsError::TagSpaceExhausted);
        }
        self.next += 1;
        let c = self.next.to_be_bytes();
        let tag = DomainTag::new([c[0], c[1], c[2], c[3], 0, 0, 0, 0]).expect("counter >= 1");
        self.map.insert(name.clone(), tag);
        Ok(tag)
    }

    pub fn get(&self, name: &ContentName) -> Option<DomainTag> {
        self.map.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentName, &DomainTag)> {
        self.map.iter()
    }
}

/// What the controller knows about the domain it manages.
#[derive(Debug, Clone)]
pub struct ControlTopology {
    pub interest_addr: Ipv4Addr,
    pub data_addr: Ipv4Addr,
    /// node -> (local port, peer, peer port), sorted by local port.
    pub adjacency: BTreeMap<NodeId, Vec<(PortId, NodeId, PortId)>>,
    /// mac -> node, for terminals and caches.
    pub node_by_mac: BTreeMap<Mac, NodeId>,
    pub switches: BTreeSet<NodeId>,
    /// Cache a switch duplicates data toward, if any.
    pub cache_assoc: BTreeMap<NodeId, NodeId>,
    /// Switch ports to exclude from flooding (cache-facing ports).
    pub no_flood: BTreeMap<NodeId, Vec<PortId>>,
}

impl ControlTopology {
    /// First-hop port from a switch toward a node, through switches only.
    /// Breadth-first, ties broken by port order, so fully deterministic.
    pub fn next_port(&self, from: &NodeId, target: &NodeId) -> Option<PortId> {
        if from == target {
            return None;
        }
        let mut visited: BTreeSet<&NodeId> = BTreeSet::new();
        visited.insert(from);
        let mut queue: VecDeque<(&NodeId, PortId)> = VecDeque::new();
        for (port, peer, _) in self.adjacency.get(from)? {
            if peer == target {
                return Some(*port);
            }
            if self.switches.contains(peer) && visited.insert(peer) {
                queue.push_back((peer, *port));
            }
        }
        while let Some((at, first_port)) = queue.pop_front() {
            for (_, peer, _) in self.adjacency.get(at).into_iter().flatten() {
                if peer == target {
                    return Some(first_port);
                }
                if self.switches.contains(peer) && visited.insert(peer) {
                    queue.push_back((peer, first_port));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControllerEffect {
    FlowMod { switch: NodeId, op: FlowModOp },
    PacketOut { switch: NodeId, po: PacketOut },
    Send { to: NodeId, msg: ControlMessage },
    SetNoFlood { switch: NodeId, port: PortId },
}

#[derive(Debug, Clone)]
pub struct Controller {
    mode: ControllerMode,
    epoch: u64,
    rib: PrefixTrie<RibEntry>,
    rib_version: u64,
    tags: TagMap,
    topo: ControlTopology,
    mac_tables: BTreeMap<NodeId, BTreeMap<Mac, PortId>>,
    registered: BTreeMap<NodeId, NodeKind>,
    /// Chunks each cache has reported complete. Observational state: it
    /// survives mode toggles (flow rules do not).
    cache_contents: BTreeMap<NodeId, BTreeSet<(ContentName, u64)>>,
    interest_stats: BTreeMap<ContentName, u64>,
    fib_exports: BTreeMap<NodeId, Vec<FibExportEntry>>,
}

impl Controller {
    pub fn new(topo: ControlTopology) -> Self {
        Self {
            mode: ControllerMode::MacLearning,
            epoch: 0,
            rib: PrefixTrie::new(),
            rib_version: 0,
            tags: TagMap::new(),
            topo,
            mac_tables: BTreeMap::new(),
            registered: BTreeMap::new(),
            cache_contents: BTreeMap::new(),
            interest_stats: BTreeMap::new(),
            fib_exports: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> ControllerMode {
        self.mode
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn current_content_cookie(&self) -> u64 {
        content_cookie(self.epoch)
    }

    pub fn rib_version(&self) -> u64 {
        self.rib_version
    }

    pub fn rib_entries(&self) -> Vec<(ContentName, RibEntry)> {
        self.rib
            .entries()
            .into_iter()
            .map(|(p, v)| (p, v.clone()))
            .collect()
    }

    pub fn tags(&self) -> &TagMap {
        &self.tags
    }

    pub fn topology(&self) -> &ControlTopology {
        &self.topo
    }

    pub fn interest_stats(&self) -> &BTreeMap<ContentName, u64> {
        &self.interest_stats
    }

    pub fn registered_caches(&self) -> Vec<NodeId> {
        self.registered
            .iter()
            .filter(|(_, k)| **k == NodeKind::Cache)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// The controller-side record of a cache's complete chunks, sorted.
    pub fn cached_contents(&self, cache: &NodeId) -> Option<Vec<(ContentName, u64)>> {
        if !self.is_cache(cache) {
            return None;
        }
        Some(
            self.cache_contents
                .get(cache)
                .map(|s| s.iter().cloned().collect())
                .unwrap_or_default(),
        )
    }

    pub fn fib_export_of(&self, node: &NodeId) -> Option<&[FibExportEntry]> {
        self.fib_exports.get(node).map(|v| &v[..])
    }

    fn is_cache(&self, id: &NodeId) -> bool {
        self.registered.get(id) == Some(&NodeKind::Cache)
    }

    /// Longest-prefix resolution plus tag allocation for the exact name.
    pub fn resolve(&mut self, name: &ContentName) -> Result<(NodeId, DomainTag), NrsError> {
        let origin = self
            .rib
            .lookup_longest(name)
            .map(|(_, e)| e.origin.clone())
            .ok_or_else(|| NrsError::NoRoute(name.clone()))?;
        let tag = self.tags.allocate(name)?;
        Ok((origin, tag))
    }

    pub fn register_content(&mut self, origin: NodeId, prefix: &ContentName) {
        let changed = match self.rib.get_exact(prefix) {
            Some(e) if e.origin == origin => false,
            _ => {
                self.rib.insert(prefix, RibEntry { origin });
                true
            }
        };
        if changed {
            self.rib_version += 1;
        }
    }

    /// Removing an absent prefix is a recorded no-op.
    pub fn unregister_content(&mut self, prefix: &ContentName) -> bool {
        if self.rib.remove(prefix).is_some() {
            self.rib_version += 1;
            true
        } else {
            false
        }
    }

    pub fn allocate_tag(&mut self, name: &ContentName) -> Result<DomainTag, NrsError> {
        self.tags.allocate(name)
    }

    /// For tests that need a shrunk tag space.
    pub fn set_tag_map(&mut self, tags: TagMap) {
        self.tags = tags;
    }

    /// Mode transition. Entering learning mode clears every content rule of
    /// the closing epoch; entering caching mode clears learned-mac rules.
    /// Cache inventories and interest statistics survive either way.
    pub fn set_mode(&mut self, mode: ControllerMode) -> (ControllerMode, Vec<ControllerEffect>) {
        let previous = self.mode;
        if mode == previous {
            return (previous, Vec::new());
        }
        let mut fx = Vec::new();
        match mode {
            ControllerMode::MacLearning => {
                let cookie = content_cookie(self.epoch);
                for sw in &self.topo.switches {
                    fx.push(ControllerEffect::FlowMod {
                        switch: sw.clone(),
                        op: FlowModOp::DeleteByCookie(cookie),
                    });
                }
            }
            ControllerMode::IcnCaching => {
                self.epoch += 1;
                self.mac_tables.clear();
                for sw in &self.topo.switches {
                    fx.push(ControllerEffect::FlowMod {
                        switch: sw.clone(),
                        op: FlowModOp::DeleteByCookie(MAC_COOKIE),
                    });
                }
            }
        }
        self.mode = mode;
        (previous, fx)
    }

    /// Table-miss handling: name-based rules for carrier packets when
    /// caching is active, plain learning-switch behavior otherwise.
    pub fn handle_packet_in(&mut self, pi: &PacketIn) -> Vec<ControllerEffect> {
        let ft = five_tuple(&pi.frame.payload).ok();
        let is_carrier = ft.as_ref().is_some_and(|ft| {
            ft.proto == TAGGED_UDP_PROTO
                && (ft.ip_dst == self.topo.interest_addr || ft.ip_dst == self.topo.data_addr)
        });
        if self.mode == ControllerMode::IcnCaching && is_carrier {
            self.content_packet_in(pi)
        } else {
            self.learning_packet_in(pi)
        }
    }

    fn learning_packet_in(&mut self, pi: &PacketIn) -> Vec<ControllerEffect> {
        let table = self.mac_tables.entry(pi.switch.clone()).or_default();
        table.insert(pi.frame.src, pi.in_port);
        match table.get(&pi.frame.dst).copied() {
            Some(port) => vec![
                ControllerEffect::FlowMod {
                    switch: pi.switch.clone(),
                    op: FlowModOp::Add {
                        priority: MAC_PRIORITY,
                        matches: MatchFields {
                            eth_dst: Some(pi.frame.dst),
                            ..MatchFields::any()
                        },
                        actions: vec![FlowAction::Output(port)],
                        cookie: MAC_COOKIE,
                    },
                },
                ControllerEffect::PacketOut {
                    switch: pi.switch.clone(),
                    po: PacketOut {
                        frame: pi.frame.clone(),
                        in_port: Some(pi.in_port),
                        actions: vec![FlowAction::Output(port)],
                    },
                },
            ],
            None => vec![ControllerEffect::PacketOut {
                switch: pi.switch.clone(),
                po: PacketOut {
                    frame: pi.frame.clone(),
                    in_port: Some(pi.in_port),
                    actions: vec![FlowAction::Flood],
                },
            }],
        }
    }

    fn content_packet_in(&mut self, pi: &PacketIn) -> Vec<ControllerEffect> {
        let Ok(packet) = crate::wire::decode_packet(&pi.frame.payload, DecodeHint::Format6) else {
            return Vec::new();
        };
        let tag = packet.tag().expect("format 6 always carries a tag");
        let name = packet.header().name().clone();
        let csn = packet.header().csn();
        if packet.ip_dst() == self.topo.interest_addr {
            // Interest: toward the cache that holds the chunk, else toward
            // the content origin.
            let target = match self.cache_holding(&name, csn) {
                Some(cache) => Some((cache, REDIRECT_PRIORITY)),
                None => self
                    .rib
                    .lookup_longest(&name)
                    .map(|(_, e)| (e.origin.clone(), ORIGIN_PRIORITY)),
            };
            let Some((target, priority)) = target else {
                return Vec::new();
            };
            let Some(port) = self.topo.next_port(&pi.switch, &target) else {
                return Vec::new();
            };
            let actions = vec![FlowAction::Output(port)];
            self.install_and_release(pi, self.interest_match(tag), priority, actions)
        } else {
            // Data: toward the requesting edge, plus a copy toward this
            // switch's associated cache so it can assemble the chunk.
            let Some(requester) = self.topo.node_by_mac.get(&pi.frame.dst).cloned() else {
                return Vec::new();
            };
            let Some(port) = self.topo.next_port(&pi.switch, &requester) else {
                return Vec::new();
            };
            let mut actions = vec![FlowAction::Output(port)];
            if let Some(cache) = self.topo.cache_assoc.get(&pi.switch) {
                if let Some(cache_port) = self.topo.next_port(&pi.switch, cache) {
                    if cache_port != port {
                        actions.push(FlowAction::Output(cache_port));
                    }
                }
            }
            self.install_and_release(pi, self.data_match(tag), DATA_PRIORITY, actions)
        }
    }

    fn interest_match(&self, tag: DomainTag) -> MatchFields {
        MatchFields {
            nw_proto: Some(TAGGED_UDP_PROTO),
            nw_dst: Some(self.topo.interest_addr),
            tp_src: Some(tag.src_port()),
            tp_dst: Some(tag.dst_port()),
            ..MatchFields::any()
        }
    }

    fn data_match(&self, tag: DomainTag) -> MatchFields {
        MatchFields {
            nw_proto: Some(TAGGED_UDP_PROTO),
            nw_dst: Some(self.topo.data_addr),
            tp_src: Some(tag.src_port()),
            tp_dst: Some(tag.dst_port()),
            ..MatchFields::any()
        }
    }

    fn install_and_release(
        &self,
        pi: &PacketIn,
        matches: MatchFields,
        priority: u32,
        actions: Vec<FlowAction>,
    ) -> Vec<ControllerEffect> {
        vec![
            ControllerEffect::FlowMod {
                switch: pi.switch.clone(),
                op: FlowModOp::Add {
                    priority,
                    matches,
                    actions: actions.clone(),
                    cookie: content_cookie(self.epoch),
                },
            },
            ControllerEffect::PacketOut {
                switch: pi.switch.clone(),
                po: PacketOut {
                    frame: pi.frame.clone(),
                    in_port: Some(pi.in_port),
                    actions,
                },
            },
        ]
    }

    /// First registered cache (by id) holding the chunk complete.
    fn cache_holding(&self, name: &ContentName, csn: u64) -> Option<NodeId> {
        self.cache_contents
            .iter()
            .find(|(_, set)| set.contains(&(name.clone(), csn)))
            .map(|(id, _)| id.clone())
    }

    /// A cache finished a chunk: record it and (in caching mode) redirect
    /// that name's interests to the cache everywhere, above the origin path.
    pub fn handle_chunk_cached(
        &mut self,
        cache: &NodeId,
        name: &ContentName,
        csn: u64,
    ) -> Result<Vec<ControllerEffect>, NrsError> {
        if !self.is_cache(cache) {
            return Err(NrsError::UnknownCache(cache.clone()));
        }
        let new = self
            .cache_contents
            .entry(cache.clone())
            .or_default()
            .insert((name.clone(), csn));
        if !new || self.mode != ControllerMode::IcnCaching {
            return Ok(Vec::new());
        }
        let tag = self.tags.allocate(name)?;
        let mut fx = Vec::new();
        for sw in self.topo.switches.clone() {
            let Some(port) = self.topo.next_port(&sw, cache) else {
                continue;
            };
            fx.push(ControllerEffect::FlowMod {
                switch: sw,
                op: FlowModOp::Add {
                    priority: REDIRECT_PRIORITY,
                    matches: self.interest_match(tag),
                    actions: vec![FlowAction::Output(port)],
                    cookie: content_cookie(self.epoch),
                },
            });
        }
        Ok(fx)
    }

    /// Seeds a cache with a chunk ahead of any traffic. The cache's own
    /// completion notification then installs the redirect rules.
    pub fn proactive_push(
        &mut self,
        cache: &NodeId,
        name: &ContentName,
        csn: u64,
        content: Vec<u8>,
    ) -> Result<Vec<ControllerEffect>, NrsError> {
        if !self.is_cache(cache) {
            return Err(NrsError::UnknownCache(cache.clone()));
        }
        Ok(vec![ControllerEffect::Send {
            to: cache.clone(),
            msg: ControlMessage::ProactiveCachePush {
                cache: cache.clone(),
                name: name.clone(),
                csn,
                content,
            },
        }])
    }

    pub fn ingest_interest_summary(&mut self, counts: &[super::NameCount]) {
        for c in counts {
            *self.interest_stats.entry(c.name.clone()).or_insert(0) += c.count;
        }
    }

    /// Dispatches one inbound control message from `from`.
    pub fn handle_control(
        &mut self,
        from: &NodeId,
        msg: &ControlMessage,
    ) -> Result<Vec<ControllerEffect>, NrsError> {
        match msg {
            ControlMessage::ConnectionSetup { node, kind } => {
                self.registered.insert(node.clone(), *kind);
                let mut fx = Vec::new();
                if *kind == NodeKind::Switch {
                    for port in self.topo.no_flood.get(node).into_iter().flatten() {
                        fx.push(ControllerEffect::SetNoFlood {
                            switch: node.clone(),
                            port: *port,
                        });
                    }
                }
                Ok(fx)
            }
            ControlMessage::NameLookup { name, .. } => {
                let route = match self.resolve(name) {
                    Ok((next_hop, tag)) => Some(RouteInfo {
                        prefix: name.clone(),
                        next_hop,
                        tag,
                    }),
                    Err(NrsError::NoRoute(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok(vec![ControllerEffect::Send {
                    to: from.clone(),
                    msg: ControlMessage::NameLookupReply {
                        name: name.clone(),
                        route,
                    },
                }])
            }
            ControlMessage::ContentRegister { origin, prefix } => {
                self.register_content(origin.clone(), prefix);
                Ok(Vec::new())
            }
            ControlMessage::ContentUnregister { prefix, .. } => {
                self.unregister_content(prefix);
                Ok(Vec::new())
            }
            ControlMessage::ChunkCached { cache, name, csn } => {
                self.handle_chunk_cached(cache, name, *csn)
            }
            ControlMessage::TagRequest { name } => {
                let tag = self.tags.allocate(name)?;
                Ok(vec![ControllerEffect::Send {
                    to: from.clone(),
                    msg: ControlMessage::TagReply {
                        name: name.clone(),
                        tag,
                    },
                }])
            }
            ControlMessage::InterestSummary { counts, .. } => {
                self.ingest_interest_summary(counts);
                Ok(Vec::new())
            }
            ControlMessage::FibExportReply { entries } => {
                self.fib_exports.insert(from.clone(), entries.clone());
                Ok(Vec::new())
            }
            // Replies and pushes originate here; nothing to do on receipt.
            _ => Ok(Vec::new()),
        }
    }
}
