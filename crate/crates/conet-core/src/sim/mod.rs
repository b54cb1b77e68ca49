//! Deterministic discrete-event harness: builds a topology of terminals
//! (with their co-located edge nodes), switches, caches, and one
//! controller, then drives a scripted workload over a virtual clock.
//! Identical inputs produce byte-identical traces and event logs.

mod catalog;
mod log;
mod script;
mod topology;
mod trace;

pub use catalog::{gen_requests, Catalog, CatalogItem, RequestTuple, SplitMix64};
pub use log::{to_jsonl, LogEntry, LogKind};
pub use script::{
    CatalogCfg, PhaseCfg, ProbeCfg, PushCfg, RequestOrder, RequestsCfg, ScriptConfig,
    THREE_PHASE_JSON,
};
pub use topology::{
    ControllerCfg, LinkCfg, NodeCfg, NodeRole, Topology, TopologyConfig, TESTBED_JSON,
};
pub use trace::{to_csv, TraceCollector, TraceRow, TRACE_HEADER};

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::hash::{Hash, Hasher};

use serde::Serialize;
use serde_json::json;

use crate::cache::CacheServer;
use crate::naming::ContentName;
use crate::node::{
    EdgeConfig, EdgeEffect, EdgeNode, EdgeNote, FlowModOp, Frame, NodeId, PacketIn, PacketOut,
    PortId, Switch,
};
use crate::northbound::{self, NbRequest, NbResponse, NorthboundBackend};
use crate::nrs::{
    decode_control, encode_control, ControlMessage, Controller, ControllerEffect, ControllerMode,
    NodeKind, NrsError,
};
use crate::time::SimTime;
use crate::wire::{ConetHeader, ConetPacket, PacketFormat, PacketType};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("duplicate node id {0}")]
    DuplicateNodeId(String),
    #[error("link references unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate mac address {0}")]
    DuplicateMac(String),
    #[error("port {1} of {0} is wired twice")]
    DuplicatePort(String, PortId),
    #[error("{0} needs a mac address")]
    MissingMac(String),
    #[error("bad link: {0}")]
    BadLink(String),
    #[error("address plan: {0}")]
    AddressPlan(String),
    #[error("phases overlap: {0}s is not before {1}s")]
    OverlappingPhases(f64, f64),
    #[error("script: {0}")]
    Script(String),
}

#[derive(Debug, Clone)]
enum Event {
    FrameArrive {
        to: NodeId,
        port: PortId,
        frame: Frame,
    },
    ControlToController {
        from: NodeId,
        bytes: Vec<u8>,
    },
    ControlToNode {
        to: NodeId,
        bytes: Vec<u8>,
    },
    PacketInArrive {
        pi: PacketIn,
    },
    FlowModArrive {
        switch: NodeId,
        op: FlowModOp,
    },
    PacketOutArrive {
        switch: NodeId,
        po: PacketOut,
    },
    NoFloodArrive {
        switch: NodeId,
        port: PortId,
    },
    Request {
        tuple: RequestTuple,
    },
    Northbound {
        req: NbRequest,
        record: bool,
    },
    PushAll {
        cache: NodeId,
    },
    EdgeTimer {
        node: NodeId,
    },
    SummaryTimer {
        node: NodeId,
    },
}

#[derive(Debug)]
struct Scheduled {
    at: SimTime,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

#[derive(Debug)]
enum Role {
    Client,
    Server { repo: BTreeMap<ContentName, usize> },
}

#[derive(Debug)]
struct Terminal {
    edge: EdgeNode,
    role: Role,
    port: PortId,
}

/// A recorded management-interface probe, with consistency snapshots.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRecord {
    pub t_us: u64,
    pub method: String,
    pub path: String,
    pub status: u16,
    pub body: serde_json::Value,
    /// Each cache's live local inventory at probe time.
    pub cache_local: BTreeMap<NodeId, Vec<(String, u64)>>,
    pub hash_before: u64,
    pub hash_after: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SimStats {
    pub requests_issued: u64,
    pub data_received_ok: u64,
    pub data_received_bad: u64,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: Vec<TraceRow>,
    pub log: Vec<LogEntry>,
    pub probes: Vec<ProbeRecord>,
    pub stats: SimStats,
}

pub struct Sim {
    clock: SimTime,
    end: SimTime,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    topo: Topology,
    script: ScriptConfig,
    catalog: Catalog,
    terminals: BTreeMap<NodeId, Terminal>,
    switches: BTreeMap<NodeId, Switch>,
    caches: BTreeMap<NodeId, CacheServer>,
    controller: Controller,
    client_id: NodeId,
    control_latency: u64,
    trace: TraceCollector,
    log: Vec<LogEntry>,
    probes: Vec<ProbeRecord>,
    stats: SimStats,
}

impl Sim {
    pub fn build(topology_cfg: TopologyConfig, script: ScriptConfig) -> Result<Self, ConfigError> {
        let topo = Topology::from_config(topology_cfg)?;
        script.validate()?;
        let catalog = Catalog::generate(&script.catalog, script.seed)?;
        let schedule = gen_requests(&catalog, &script.requests, script.end_s, script.seed)?;
        for push in &script.pushes {
            if topo.role(&push.cache) != Some(NodeRole::Cache) {
                return Err(ConfigError::Script(format!(
                    "push target {} is not a cache",
                    push.cache
                )));
            }
        }

        let end = SimTime::from_secs_f64(script.end_s);
        let mut terminals = BTreeMap::new();
        let servers = topo.nodes_with_role(NodeRole::Server);
        let clients = topo.nodes_with_role(NodeRole::Client);
        let client_id = clients[0].clone();
        let primary_server = servers[0].clone();
        for cfg in &topo.config.nodes {
            let role = match cfg.kind {
                NodeRole::Client => Role::Client,
                NodeRole::Server => {
                    let repo = if cfg.id == primary_server {
                        catalog
                            .items
                            .iter()
                            .enumerate()
                            .map(|(i, item)| (item.name.clone(), i))
                            .collect()
                    } else {
                        BTreeMap::new()
                    };
                    Role::Server { repo }
                }
                _ => continue,
            };
            let edge_cfg = EdgeConfig {
                fib_capacity: cfg.fib_capacity.unwrap_or(1024),
                pending_capacity: cfg.pending_capacity.unwrap_or(256),
                lookup_timeout_us: cfg.lookup_timeout_ms.unwrap_or(500) * 1000,
                ..EdgeConfig::default()
            };
            let edge = EdgeNode::new(
                cfg.id.clone(),
                topo.macs[&cfg.id],
                topo.macs.iter().map(|(id, m)| (id.clone(), *m)).collect(),
                edge_cfg,
            );
            terminals.insert(
                cfg.id.clone(),
                Terminal {
                    edge,
                    role,
                    port: topo.access_port[&cfg.id],
                },
            );
        }

        let mut switches = BTreeMap::new();
        for (id, ports) in &topo.switch_ports {
            switches.insert(
                id.clone(),
                Switch::new(
                    id.clone(),
                    ports.iter().copied(),
                    topo.flow_table_capacity[id],
                ),
            );
        }

        let mut caches = BTreeMap::new();
        for cfg in &topo.config.nodes {
            if cfg.kind == NodeRole::Cache {
                caches.insert(
                    cfg.id.clone(),
                    CacheServer::new(
                        cfg.id.clone(),
                        topo.macs[&cfg.id],
                        topo.config.data_addr,
                        cfg.cache_capacity_chunks.unwrap_or(1024),
                        catalog.cp_payload_size,
                    ),
                );
            }
        }

        let controller = Controller::new(topo.control_view());
        let interfaces = topo.interfaces();
        let cache_ids: Vec<NodeId> = caches.keys().cloned().collect();
        let trace = TraceCollector::new(
            (script.sample_interval_s * 1_000_000.0).round() as u64,
            end.as_micros(),
            &interfaces,
            &cache_ids,
        );
        let control_latency = topo.config.control_latency_us;

        let mut sim = Self {
            clock: SimTime::ZERO,
            end,
            seq: 0,
            queue: BinaryHeap::new(),
            topo,
            script,
            catalog,
            terminals,
            switches,
            caches,
            controller,
            client_id,
            control_latency,
            trace,
            log: Vec::new(),
            probes: Vec::new(),
            stats: SimStats::default(),
        };

        // Connection setup for every data-plane element, then content
        // publication, all at time zero in a fixed order.
        for id in sim.switches.keys().cloned().collect::<Vec<_>>() {
            let msg = ControlMessage::ConnectionSetup {
                node: id.clone(),
                kind: NodeKind::Switch,
            };
            sim.schedule(
                SimTime::ZERO,
                Event::ControlToController {
                    from: id,
                    bytes: encode_control(&msg),
                },
            );
        }
        let terminal_kinds: Vec<(NodeId, NodeKind)> = sim
            .terminals
            .iter()
            .map(|(id, t)| {
                let kind = match t.role {
                    Role::Client => NodeKind::Client,
                    Role::Server { .. } => NodeKind::Server,
                };
                (id.clone(), kind)
            })
            .collect();
        for (id, kind) in terminal_kinds {
            let msg = ControlMessage::ConnectionSetup {
                node: id.clone(),
                kind,
            };
            sim.schedule(
                SimTime::ZERO,
                Event::ControlToController {
                    from: id,
                    bytes: encode_control(&msg),
                },
            );
        }
        for id in sim.caches.keys().cloned().collect::<Vec<_>>() {
            let msg = ControlMessage::ConnectionSetup {
                node: id.clone(),
                kind: NodeKind::Cache,
            };
            sim.schedule(
                SimTime::ZERO,
                Event::ControlToController {
                    from: id,
                    bytes: encode_control(&msg),
                },
            );
        }
        let register = ControlMessage::ContentRegister {
            origin: primary_server.clone(),
            prefix: sim.catalog.prefix.clone(),
        };
        sim.schedule(
            SimTime::ZERO,
            Event::ControlToController {
                from: primary_server,
                bytes: encode_control(&register),
            },
        );

        // Mode phases and pushes enter through the management interface so
        // the whole script exercises the same serialized command stream.
        for phase in sim.script.phases.clone() {
            let req = NbRequest {
                method: "POST".into(),
                path: "/icn/mode".into(),
                body: serde_json::to_vec(&json!({ "mode": phase.mode })).unwrap(),
            };
            sim.schedule(
                SimTime::from_secs_f64(phase.at_s),
                Event::Northbound { req, record: false },
            );
        }
        for push in sim.script.pushes.clone() {
            sim.schedule(
                SimTime::from_secs_f64(push.at_s),
                Event::PushAll { cache: push.cache },
            );
        }
        for probe in sim.script.probes.clone() {
            let req = NbRequest {
                method: probe.method.clone(),
                path: probe.path.clone(),
                body: probe
                    .body
                    .as_ref()
                    .map(|b| serde_json::to_vec(b).unwrap())
                    .unwrap_or_default(),
            };
            sim.schedule(
                SimTime::from_secs_f64(probe.at_s),
                Event::Northbound { req, record: true },
            );
        }
        for (at, tuple) in schedule {
            sim.schedule(at, Event::Request { tuple });
        }
        let summary_us = (sim.script.summary_interval_s * 1_000_000.0).round() as u64;
        for id in sim.terminals.keys().cloned().collect::<Vec<_>>() {
            sim.schedule(SimTime(summary_us), Event::SummaryTimer { node: id });
        }
        Ok(sim)
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn switch(&self, id: &str) -> Option<&Switch> {
        self.switches.get(id)
    }

    pub fn all_switches(&self) -> impl Iterator<Item = &Switch> {
        self.switches.values()
    }

    pub fn cache(&self, id: &str) -> Option<&CacheServer> {
        self.caches.get(id)
    }

    pub fn edge_counters(&self, id: &str) -> Option<&crate::node::EdgeCounters> {
        self.terminals.get(id).map(|t| t.edge.counters())
    }

    pub fn fib_export_of(&self, id: &str) -> Option<Vec<crate::node::FibEntry>> {
        self.terminals.get(id).map(|t| t.edge.fib().export())
    }

    pub fn stats(&self) -> &SimStats {
        &self.stats
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            at,
            seq: self.seq,
            event,
        }));
    }

    fn note(&mut self, kind: LogKind) {
        self.log.push(LogEntry::new(self.clock, kind));
    }

    /// Runs to the script's end and returns the trace, log, and probes.
    pub fn run(&mut self) -> RunReport {
        while let Some(Reverse(next)) = self.queue.pop() {
            if next.at >= self.end {
                break;
            }
            self.clock = next.at;
            self.dispatch(next.event);
        }
        self.clock = self.end;
        RunReport {
            trace: self.trace.rows(),
            log: self.log.clone(),
            probes: self.probes.clone(),
            stats: self.stats.clone(),
        }
    }

    /// Runs paced against the wall clock while serving management-interface
    /// requests injected through `commands`. After the script ends, keeps
    /// serving until the channel disconnects.
    pub fn run_paced(
        &mut self,
        commands: &std::sync::mpsc::Receiver<(NbRequest, std::sync::mpsc::Sender<NbResponse>)>,
    ) -> RunReport {
        use std::sync::mpsc::RecvTimeoutError;
        use std::time::{Duration, Instant};
        let wall_start = Instant::now();
        while let Some(Reverse(peek)) = self.queue.peek() {
            if peek.at >= self.end {
                break;
            }
            let target = wall_start + Duration::from_micros(peek.at.as_micros());
            loop {
                let now = Instant::now();
                if now >= target {
                    break;
                }
                match commands.recv_timeout((target - now).min(Duration::from_millis(5))) {
                    Ok((req, reply)) => {
                        let res = self.serve_command(req);
                        let _ = reply.send(res);
                    }
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => break,
                }
            }
            let Some(Reverse(next)) = self.queue.pop() else {
                break;
            };
            self.clock = next.at;
            self.dispatch(next.event);
        }
        self.clock = self.end;
        let report = RunReport {
            trace: self.trace.rows(),
            log: self.log.clone(),
            probes: self.probes.clone(),
            stats: self.stats.clone(),
        };
        while let Ok((req, reply)) = commands.recv() {
            let res = self.serve_command(req);
            let _ = reply.send(res);
        }
        report
    }

    fn serve_command(&mut self, req: NbRequest) -> NbResponse {
        let res = northbound::dispatch(self, &req);
        self.note(LogKind::NorthboundRequest {
            method: req.method.clone(),
            path: req.path.clone(),
            status: res.status,
        });
        res
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::FrameArrive { to, port, frame } => self.on_frame(to, port, frame),
            Event::ControlToController { from, bytes } => {
                self.on_control_to_controller(from, bytes)
            }
            Event::ControlToNode { to, bytes } => self.on_control_to_node(to, bytes),
            Event::PacketInArrive { pi } => {
                let fx = self.controller.handle_packet_in(&pi);
                self.apply_controller_effects(fx);
            }
            Event::FlowModArrive { switch, op } => {
                let ok = match self.switches.get_mut(&switch) {
                    Some(sw) => sw.flow_mod(&op).is_ok(),
                    None => false,
                };
                self.note(LogKind::FlowModApplied { switch, op, ok });
            }
            Event::PacketOutArrive { switch, po } => {
                let verdict = match self.switches.get(&switch) {
                    Some(sw) => sw.apply_packet_out(&po),
                    None => return,
                };
                for (out_port, frame) in verdict.outputs {
                    self.send_frame(&switch, out_port, frame);
                }
            }
            Event::NoFloodArrive { switch, port } => {
                if let Some(sw) = self.switches.get_mut(&switch) {
                    sw.set_no_flood(port, true);
                    self.note(LogKind::PortNoFloodSet { switch, port });
                }
            }
            Event::Request { tuple } => self.on_request(tuple),
            Event::Northbound { req, record } => self.on_northbound(req, record),
            Event::PushAll { cache } => self.on_push_all(cache),
            Event::EdgeTimer { node } => {
                let fx = match self.terminals.get_mut(&node) {
                    Some(t) => t.edge.expire_pending(self.clock),
                    None => return,
                };
                self.process_edge_effects(&node, fx);
            }
            Event::SummaryTimer { node } => self.on_summary_timer(node),
        }
    }

    fn on_frame(&mut self, to: NodeId, port: PortId, frame: Frame) {
        if self.switches.contains_key(&to) {
            let verdict = self
                .switches
                .get_mut(&to)
                .expect("checked")
                .process(&frame, port);
            if verdict.packet_in {
                self.note(LogKind::PacketInRaised {
                    switch: to.clone(),
                    in_port: port,
                });
                let pi = PacketIn {
                    switch: to.clone(),
                    in_port: port,
                    frame: frame.clone(),
                };
                let at = self.clock.plus(self.control_latency);
                self.schedule(at, Event::PacketInArrive { pi });
            }
            for (out_port, out_frame) in verdict.outputs {
                self.send_frame(&to, out_port, out_frame);
            }
        } else if self.terminals.contains_key(&to) {
            let fx = self
                .terminals
                .get_mut(&to)
                .expect("checked")
                .edge
                .handle_inside(&frame, self.clock);
            self.process_edge_effects(&to, fx);
        } else if self.caches.contains_key(&to) {
            self.on_cache_frame(to, frame);
        }
    }

    fn on_cache_frame(&mut self, cache_id: NodeId, frame: Frame) {
        let fx = self
            .caches
            .get_mut(&cache_id)
            .expect("checked")
            .handle_frame(&frame, self.clock);
        for (name, csn, segment) in &fx.served {
            self.note(LogKind::ServedData {
                node: cache_id.clone(),
                origin: false,
                name: name.as_str().to_owned(),
                csn: *csn,
                segment: *segment,
            });
        }
        let cache_port = self.topo.access_port[&cache_id];
        for reply in fx.replies {
            self.send_frame(&cache_id, cache_port, reply);
        }
        for msg in fx.notifications {
            if let ControlMessage::ChunkCached { cache, name, csn } = &msg {
                self.note(LogKind::ChunkCached {
                    cache: cache.clone(),
                    name: name.as_str().to_owned(),
                    csn: *csn,
                });
                let count = self.caches[&cache_id].store().len() as u64;
                self.trace.record_cache_count(self.clock, &cache_id, count);
            }
            let at = self.clock.plus(self.control_latency);
            self.schedule(
                at,
                Event::ControlToController {
                    from: cache_id.clone(),
                    bytes: encode_control(&msg),
                },
            );
        }
        // Misses on stale redirects: the harness hands the interest to the
        // content origin directly, outside the traced data plane.
        for miss in fx.misses {
            if let Some((name, csn, segment)) = decode_interest_meta(&miss) {
                self.note(LogKind::StaleRedirectMiss {
                    cache: cache_id.clone(),
                    name: name.as_str().to_owned(),
                    csn,
                    segment,
                });
                if let Some(origin) = self.origin_of(&name) {
                    let port = self.terminals[&origin].port;
                    let at = self.clock.plus(self.control_latency);
                    self.schedule(
                        at,
                        Event::FrameArrive {
                            to: origin,
                            port,
                            frame: miss,
                        },
                    );
                }
            }
        }
    }

    fn origin_of(&self, name: &ContentName) -> Option<NodeId> {
        self.terminals
            .iter()
            .find(|(_, t)| matches!(&t.role, Role::Server { repo } if repo.contains_key(name)))
            .map(|(id, _)| id.clone())
    }

    fn on_control_to_controller(&mut self, from: NodeId, bytes: Vec<u8>) {
        let msg = match decode_control(&bytes) {
            Ok(m) => m,
            Err(e) => {
                self.note(LogKind::ControllerError {
                    error: e.to_string(),
                });
                return;
            }
        };
        match &msg {
            ControlMessage::ContentRegister { origin, prefix } => {
                let origin = origin.clone();
                let prefix = prefix.as_str().to_owned();
                self.note(LogKind::ContentRegistered { origin, prefix });
            }
            ControlMessage::InterestSummary { node, counts } => {
                let node = node.clone();
                let names = counts.len();
                let total = counts.iter().map(|c| c.count).sum();
                self.note(LogKind::InterestSummaryIngested { node, names, total });
            }
            _ => {}
        }
        match self.controller.handle_control(&from, &msg) {
            Ok(fx) => self.apply_controller_effects(fx),
            Err(e) => self.note(LogKind::ControllerError {
                error: e.to_string(),
            }),
        }
    }

    fn on_control_to_node(&mut self, to: NodeId, bytes: Vec<u8>) {
        let msg = match decode_control(&bytes) {
            Ok(m) => m,
            Err(e) => {
                self.note(LogKind::ControllerError {
                    error: e.to_string(),
                });
                return;
            }
        };
        if self.terminals.contains_key(&to) {
            if let ControlMessage::NameLookupReply { name, route } = &msg {
                self.note(LogKind::NameLookupReplied {
                    node: to.clone(),
                    name: name.as_str().to_owned(),
                    found: route.is_some(),
                });
            }
            let fx = self
                .terminals
                .get_mut(&to)
                .expect("checked")
                .edge
                .handle_control(&msg, self.clock);
            self.process_edge_effects(&to, fx);
        } else if self.caches.contains_key(&to) {
            if let ControlMessage::ProactiveCachePush {
                name, csn, content, ..
            } = msg
            {
                let fx = self
                    .caches
                    .get_mut(&to)
                    .expect("checked")
                    .handle_push(&name, csn, content);
                let new = !fx.notifications.is_empty();
                self.note(LogKind::ProactivePushDelivered {
                    cache: to.clone(),
                    name: name.as_str().to_owned(),
                    csn,
                    new,
                });
                if new {
                    let count = self.caches[&to].store().len() as u64;
                    self.trace.record_cache_count(self.clock, &to, count);
                }
                for m in fx.notifications {
                    if let ControlMessage::ChunkCached { cache, name, csn } = &m {
                        self.note(LogKind::ChunkCached {
                            cache: cache.clone(),
                            name: name.as_str().to_owned(),
                            csn: *csn,
                        });
                    }
                    let at = self.clock.plus(self.control_latency);
                    self.schedule(
                        at,
                        Event::ControlToController {
                            from: to.clone(),
                            bytes: encode_control(&m),
                        },
                    );
                }
            }
        }
    }

    fn apply_controller_effects(&mut self, fx: Vec<ControllerEffect>) {
        let at = self.clock.plus(self.control_latency);
        for effect in fx {
            match effect {
                ControllerEffect::FlowMod { switch, op } => {
                    self.schedule(at, Event::FlowModArrive { switch, op });
                }
                ControllerEffect::PacketOut { switch, po } => {
                    self.schedule(at, Event::PacketOutArrive { switch, po });
                }
                ControllerEffect::Send { to, msg } => {
                    self.schedule(
                        at,
                        Event::ControlToNode {
                            to,
                            bytes: encode_control(&msg),
                        },
                    );
                }
                ControllerEffect::SetNoFlood { switch, port } => {
                    self.schedule(at, Event::NoFloodArrive { switch, port });
                }
            }
        }
    }

    /// Emits a frame out a node's port, counting bytes at both link ends.
    fn send_frame(&mut self, from: &NodeId, port: PortId, frame: Frame) {
        let key = (from.clone(), port);
        let Some((peer, peer_port, latency)) = self.topo.peers.get(&key).cloned() else {
            return;
        };
        self.trace.record_transfer(
            self.clock,
            &key,
            &(peer.clone(), peer_port),
            frame.wire_len() as u64,
        );
        let at = self.clock.plus(latency);
        self.schedule(
            at,
            Event::FrameArrive {
                to: peer,
                port: peer_port,
                frame,
            },
        );
    }

    fn process_edge_effects(&mut self, node: &NodeId, fx: Vec<EdgeEffect>) {
        let mut work: VecDeque<EdgeEffect> = fx.into();
        while let Some(effect) = work.pop_front() {
            match effect {
                EdgeEffect::ForwardInside(frame) => {
                    let port = self.terminals[node].port;
                    self.send_frame(node, port, frame);
                }
                EdgeEffect::DeliverOutside(packet) => {
                    for extra in self.app_deliver(node, packet) {
                        work.push_back(extra);
                    }
                }
                EdgeEffect::Control(msg) => {
                    if let ControlMessage::NameLookup { name, csn } = &msg {
                        self.note(LogKind::NameLookupRequested {
                            node: node.clone(),
                            name: name.as_str().to_owned(),
                            csn: *csn,
                        });
                    }
                    let at = self.clock.plus(self.control_latency);
                    self.schedule(
                        at,
                        Event::ControlToController {
                            from: node.clone(),
                            bytes: encode_control(&msg),
                        },
                    );
                }
                EdgeEffect::TimerAt(at) => {
                    let at = at.max(self.clock);
                    self.schedule(at, Event::EdgeTimer { node: node.clone() });
                }
                EdgeEffect::Note(note) => self.log_edge_note(node, note),
            }
        }
    }

    fn log_edge_note(&mut self, node: &NodeId, note: EdgeNote) {
        let kind = match note {
            EdgeNote::FibMiss {
                name,
                emitted_lookup,
            } => LogKind::FibMiss {
                node: node.clone(),
                name: name.as_str().to_owned(),
                emitted_lookup,
            },
            EdgeNote::FibHit { name } => LogKind::FibHit {
                node: node.clone(),
                name: name.as_str().to_owned(),
            },
            EdgeNote::FibInstalled { prefix, evicted } => LogKind::FibInstalled {
                node: node.clone(),
                prefix: prefix.as_str().to_owned(),
                evicted: evicted.map(|e| e.as_str().to_owned()),
            },
            EdgeNote::Dropped { reason, name } => LogKind::Dropped {
                node: node.clone(),
                reason: format!("{reason:?}"),
                name: name.map(|n| n.as_str().to_owned()),
            },
        };
        self.note(kind);
    }

    /// The terminal application behind an edge node.
    fn app_deliver(&mut self, node: &NodeId, packet: ConetPacket) -> Vec<EdgeEffect> {
        let header = packet.header().clone();
        let is_server = matches!(self.terminals[node].role, Role::Server { .. });
        match (header.ptype(), is_server) {
            (PacketType::Interest, true) => {
                let item = match &self.terminals[node].role {
                    Role::Server { repo } => repo.get(header.name()).copied(),
                    Role::Client => None,
                };
                let Some(item) = item else {
                    self.note(LogKind::Dropped {
                        node: node.clone(),
                        reason: "NoSuchContent".into(),
                        name: Some(header.name().as_str().to_owned()),
                    });
                    return Vec::new();
                };
                let Some(payload) =
                    self.catalog
                        .segment_payload(item, header.csn(), header.segment())
                else {
                    self.note(LogKind::Dropped {
                        node: node.clone(),
                        reason: "SegmentOutOfRange".into(),
                        name: Some(header.name().as_str().to_owned()),
                    });
                    return Vec::new();
                };
                let payload = payload.to_vec();
                let total = self.catalog.segments_per_chunk();
                self.note(LogKind::ServedData {
                    node: node.clone(),
                    origin: true,
                    name: header.name().as_str().to_owned(),
                    csn: header.csn(),
                    segment: header.segment(),
                });
                let data = ConetHeader::data(
                    header.name().clone(),
                    header.csn(),
                    header.segment(),
                    total,
                    payload,
                )
                .expect("catalog framing is valid");
                let reply = ConetPacket::new(
                    PacketFormat::F2,
                    self.topo.config.interest_addr,
                    self.topo.config.data_addr,
                    None,
                    data,
                )
                .expect("data packet is valid");
                let now = self.clock;
                self.terminals
                    .get_mut(node)
                    .expect("exists")
                    .edge
                    .handle_outside(reply, now)
            }
            (PacketType::Data, false) => {
                let expected = self.catalog.item_index(header.name()).and_then(|i| {
                    self.catalog
                        .segment_payload(i, header.csn(), header.segment())
                });
                let ok = expected == Some(header.payload());
                if ok {
                    self.stats.data_received_ok += 1;
                } else {
                    self.stats.data_received_bad += 1;
                }
                self.note(LogKind::DataReceived {
                    name: header.name().as_str().to_owned(),
                    csn: header.csn(),
                    segment: header.segment(),
                    ok,
                });
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    fn on_request(&mut self, tuple: RequestTuple) {
        let name = self.catalog.items[tuple.item].name.clone();
        self.note(LogKind::InterestIssued {
            name: name.as_str().to_owned(),
            csn: tuple.csn,
            segment: tuple.segment,
        });
        self.stats.requests_issued += 1;
        let interest = ConetPacket::new(
            PacketFormat::F2,
            self.topo.config.data_addr,
            self.topo.config.interest_addr,
            None,
            ConetHeader::interest(name, tuple.csn, tuple.segment).expect("catalog tuple is valid"),
        )
        .expect("interest packet is valid");
        let client = self.client_id.clone();
        let now = self.clock;
        let fx = self
            .terminals
            .get_mut(&client)
            .expect("client exists")
            .edge
            .handle_outside(interest, now);
        self.process_edge_effects(&client, fx);
    }

    fn on_northbound(&mut self, req: NbRequest, record: bool) {
        let hash_before = self.state_hash();
        let res = self.serve_command(req.clone());
        if record {
            let hash_after = self.state_hash();
            let cache_local = self
                .caches
                .iter()
                .map(|(id, c)| {
                    let inv = c
                        .inventory()
                        .into_iter()
                        .map(|(n, csn)| (n.as_str().to_owned(), csn))
                        .collect();
                    (id.clone(), inv)
                })
                .collect();
            self.probes.push(ProbeRecord {
                t_us: self.clock.as_micros(),
                method: req.method,
                path: req.path,
                status: res.status,
                body: res.body,
                cache_local,
                hash_before,
                hash_after,
            });
        }
    }

    fn on_push_all(&mut self, cache: NodeId) {
        for item in 0..self.catalog.items.len() {
            for csn in 0..self.catalog.chunks_per_item() {
                let name = self.catalog.items[item].name.as_str().to_owned();
                let chunk = self
                    .catalog
                    .chunk_bytes(item, csn)
                    .expect("in range")
                    .to_vec();
                let req = NbRequest {
                    method: "POST".into(),
                    path: format!("/icn/caches/{cache}/push"),
                    body: serde_json::to_vec(&json!({
                        "name": name,
                        "csn": csn,
                        "content_b64": base64_encode(&chunk),
                    }))
                    .unwrap(),
                };
                self.serve_command(req);
            }
        }
    }

    fn on_summary_timer(&mut self, node: NodeId) {
        let Some(terminal) = self.terminals.get_mut(&node) else {
            return;
        };
        if let Some(msg) = terminal.edge.summary_flush() {
            let at = self.clock.plus(self.control_latency);
            self.schedule(
                at,
                Event::ControlToController {
                    from: node.clone(),
                    bytes: encode_control(&msg),
                },
            );
        }
        let interval = (self.script.summary_interval_s * 1_000_000.0).round() as u64;
        let next = self.clock.plus(interval);
        if next < self.end {
            self.schedule(next, Event::SummaryTimer { node });
        }
    }

    /// Hash of all protocol-visible mutable state. Read-only management
    /// endpoints must leave it unchanged; the log and trace are
    /// observability artifacts and deliberately excluded.
    pub fn state_hash(&self) -> u64 {
        let controller = &self.controller;
        let view = json!({
            "mode": controller.mode().as_str(),
            "epoch": controller.epoch(),
            "rib_version": controller.rib_version(),
            "rib": controller.rib_entries().iter()
                .map(|(p, e)| (p.as_str().to_owned(), e.origin.clone()))
                .collect::<Vec<_>>(),
            "tags": controller.tags().iter()
                .map(|(n, t)| (n.as_str().to_owned(), t.to_hex()))
                .collect::<Vec<_>>(),
            "stats": controller.interest_stats().iter()
                .map(|(n, c)| (n.as_str().to_owned(), *c))
                .collect::<Vec<_>>(),
            "cache_records": controller.registered_caches().iter()
                .map(|c| (c.clone(), controller.cached_contents(c)
                    .unwrap_or_default()
                    .iter().map(|(n, csn)| (n.as_str().to_owned(), *csn)).collect::<Vec<_>>()))
                .collect::<Vec<_>>(),
            "switches": self.switches.iter()
                .map(|(id, sw)| (id.clone(), serde_json::to_value(sw.table()).unwrap()))
                .collect::<Vec<_>>(),
            "caches": self.caches.iter()
                .map(|(id, c)| (id.clone(), c.inventory().iter()
                    .map(|(n, csn)| (n.as_str().to_owned(), *csn)).collect::<Vec<_>>()))
                .collect::<Vec<_>>(),
            "edges": self.terminals.iter()
                .map(|(id, t)| (id.clone(), t.edge.fib().export().iter()
                    .map(|e| (e.prefix.as_str().to_owned(), e.next_hop.clone()))
                    .collect::<Vec<_>>(), t.edge.pending_len()))
                .collect::<Vec<_>>(),
        });
        let mut hasher = DefaultHasher::new();
        view.to_string().hash(&mut hasher);
        hasher.finish()
    }
}

fn decode_interest_meta(frame: &Frame) -> Option<(ContentName, u64, u16)> {
    let packet =
        crate::wire::decode_packet(&frame.payload, crate::wire::DecodeHint::Format6).ok()?;
    let h = packet.header();
    (h.ptype() == PacketType::Interest).then(|| (h.name().clone(), h.csn(), h.segment()))
}

fn base64_encode(bytes: &[u8]) -> String {
    use base64::prelude::*;
    BASE64_STANDARD.encode(bytes)
}

impl NorthboundBackend for Sim {
    fn cache_contents(&self, cache: &str) -> Option<Vec<(ContentName, u64)>> {
        self.controller.cached_contents(&cache.to_string())
    }

    fn mode(&self) -> ControllerMode {
        self.controller.mode()
    }

    fn set_mode(&mut self, mode: ControllerMode) -> (ControllerMode, ControllerMode) {
        let (previous, fx) = self.controller.set_mode(mode);
        if previous != mode {
            self.note(LogKind::ModeChanged {
                previous: previous.as_str().into(),
                mode: mode.as_str().into(),
            });
        }
        self.apply_controller_effects(fx);
        (previous, mode)
    }

    fn interest_stats(&self) -> Vec<(String, u64)> {
        self.controller
            .interest_stats()
            .iter()
            .map(|(n, c)| (n.as_str().to_owned(), *c))
            .collect()
    }

    fn push_chunk(
        &mut self,
        cache: &str,
        name: ContentName,
        csn: u64,
        content: Vec<u8>,
    ) -> Result<(), NrsError> {
        let fx = self
            .controller
            .proactive_push(&cache.to_string(), &name, csn, content)?;
        self.apply_controller_effects(fx);
        Ok(())
    }

    fn topology_view(&self) -> serde_json::Value {
        self.topo.view_json()
    }

    fn switch_flows(&self, id: &str) -> Option<serde_json::Value> {
        self.switches
            .get(id)
            .map(|sw| serde_json::to_value(sw.table()).unwrap())
    }
}
