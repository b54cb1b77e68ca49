//! Flow-table switch model with OpenFlow-1.0 semantics: wildcard matches
//! over layer 2/3/4 fields, priority selection, table-miss to controller,
//! and in-port suppression on output.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::Serialize;

use crate::wire::five_tuple;

use super::{Frame, Mac, NodeId, PortId, ETHERTYPE_IPV4};

pub const DEFAULT_TABLE_CAPACITY: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SwitchError {
    #[error("flow table is full ({0} entries)")]
    TableFull(usize),
    #[error("port {0} does not exist")]
    NoSuchPort(PortId),
}

/// Wildcard match: `None` means "any".
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct MatchFields {
    pub in_port: Option<PortId>,
    pub eth_src: Option<Mac>,
    pub eth_dst: Option<Mac>,
    pub eth_type: Option<u16>,
    pub nw_proto: Option<u8>,
    pub nw_src: Option<Ipv4Addr>,
    pub nw_dst: Option<Ipv4Addr>,
    pub tp_src: Option<u16>,
    pub tp_dst: Option<u16>,
}

impl MatchFields {
    pub fn any() -> Self {
        Self::default()
    }

    fn matches(&self, key: &PacketKey) -> bool {
        fn ok<T: PartialEq>(want: &Option<T>, got: &Option<T>) -> bool {
            match want {
                None => true,
                Some(w) => got.as_ref() == Some(w),
            }
        }
        ok(&self.in_port, &Some(key.in_port))
            && ok(&self.eth_src, &Some(key.eth_src))
            && ok(&self.eth_dst, &Some(key.eth_dst))
            && ok(&self.eth_type, &Some(key.eth_type))
            && ok(&self.nw_proto, &key.nw_proto)
            && ok(&self.nw_src, &key.nw_src)
            && ok(&self.nw_dst, &key.nw_dst)
            && ok(&self.tp_src, &key.tp_src)
            && ok(&self.tp_dst, &key.tp_dst)
    }
}

/// Fields extracted from a frame for matching. For IP protocols 6 and 17
/// the transport ports come from the first four payload bytes, which for
/// tagged carrier packets are the domain tag.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PacketKey {
    in_port: PortId,
    eth_src: Mac,
    eth_dst: Mac,
    eth_type: u16,
    nw_proto: Option<u8>,
    nw_src: Option<Ipv4Addr>,
    nw_dst: Option<Ipv4Addr>,
    tp_src: Option<u16>,
    tp_dst: Option<u16>,
}

fn extract_key(frame: &Frame, in_port: PortId) -> PacketKey {
    let mut key = PacketKey {
        in_port,
        eth_src: frame.src,
        eth_dst: frame.dst,
        eth_type: frame.ethertype,
        nw_proto: None,
        nw_src: None,
        nw_dst: None,
        tp_src: None,
        tp_dst: None,
    };
    if frame.ethertype == ETHERTYPE_IPV4 {
        if let Ok(ft) = five_tuple(&frame.payload) {
            key.nw_proto = Some(ft.proto);
            key.nw_src = Some(ft.ip_src);
            key.nw_dst = Some(ft.ip_dst);
            key.tp_src = ft.tp_src;
            key.tp_dst = ft.tp_dst;
        }
    }
    key
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowAction {
    Output(PortId),
    Flood,
    ToController,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowEntry {
    pub priority: u32,
    pub matches: MatchFields,
    pub actions: Vec<FlowAction>,
    pub cookie: u64,
    /// Monotone insertion stamp; ties on priority go to the earliest.
    pub install_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FlowModOp {
    Add {
        priority: u32,
        matches: MatchFields,
        actions: Vec<FlowAction>,
        cookie: u64,
    },
    DeleteByCookie(u64),
}

/// Table-miss report to the controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketIn {
    pub switch: NodeId,
    pub in_port: PortId,
    pub frame: Frame,
}

/// Controller-driven transmit through a switch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketOut {
    pub frame: Frame,
    pub in_port: Option<PortId>,
    pub actions: Vec<FlowAction>,
}

/// What processing one frame produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SwitchVerdict {
    pub outputs: Vec<(PortId, Frame)>,
    pub packet_in: bool,
}

#[derive(Debug, Clone)]
pub struct Switch {
    id: NodeId,
    ports: BTreeSet<PortId>,
    no_flood: BTreeSet<PortId>,
    table: Vec<FlowEntry>,
    capacity: usize,
    install_counter: u64,
}

impl Switch {
    pub fn new(id: NodeId, ports: impl IntoIterator<Item = PortId>, capacity: usize) -> Self {
        Self {
            id,
            ports: ports.into_iter().collect(),
            no_flood: BTreeSet::new(),
            table: Vec::new(),
            capacity,
            install_counter: 0,
        }
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn ports(&self) -> impl Iterator<Item = PortId> + '_ {
        self.ports.iter().copied()
    }

    /// Exclude a port from Flood actions (the standard way to keep special
    /// ports, like the one facing a cache server, out of broadcast traffic).
    pub fn set_no_flood(&mut self, port: PortId, on: bool) {
        if on {
            self.no_flood.insert(port);
        } else {
            self.no_flood.remove(&port);
        }
    }

    pub fn table(&self) -> &[FlowEntry] {
        &self.table
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Runs one frame through the table. Highest priority wins; ties break
    /// to the earliest installed entry; no match raises a packet-in.
    pub fn process(&mut self, frame: &Frame, in_port: PortId) -> SwitchVerdict {
        let key = extract_key(frame, in_port);
        let best = self
            .table
            .iter()
            .filter(|e| e.matches.matches(&key))
            .min_by_key(|e| (std::cmp::Reverse(e.priority), e.install_seq));
        match best {
            None => SwitchVerdict {
                outputs: Vec::new(),
                packet_in: true,
            },
            Some(entry) => {
                let actions = entry.actions.clone();
                self.execute(&actions, frame, Some(in_port))
            }
        }
    }

    /// Executes a packet-out from the controller.
    pub fn apply_packet_out(&self, po: &PacketOut) -> SwitchVerdict {
        self.execute(&po.actions, &po.frame, po.in_port)
    }

    fn execute(
        &self,
        actions: &[FlowAction],
        frame: &Frame,
        in_port: Option<PortId>,
    ) -> SwitchVerdict {
        let mut verdict = SwitchVerdict::default();
        for action in actions {
            match action {
                FlowAction::Output(port) => {
                    // Never forward a packet back out its ingress port.
                    if Some(*port) != in_port && self.ports.contains(port) {
                        verdict.outputs.push((*port, frame.clone()));
                    }
                }
                FlowAction::Flood => {
                    for &port in &self.ports {
                        if Some(port) != in_port && !self.no_flood.contains(&port) {
                            verdict.outputs.push((port, frame.clone()));
                        }
                    }
                }
                FlowAction::ToController => verdict.packet_in = true,
            }
        }
        verdict
    }

    /// Applies a flow-table mutation. Adding an entry whose (match,
    /// priority) pair already exists replaces its actions and cookie.
    pub fn flow_mod(&mut self, op: &FlowModOp) -> Result<(), SwitchError> {
        match op {
            FlowModOp::Add {
                priority,
                matches,
                actions,
                cookie,
            } => {
                if let Some(existing) = self
                    .table
                    .iter_mut()
                    .find(|e| e.priority == *priority && e.matches == *matches)
                {
                    existing.actions = actions.clone();
                    existing.cookie = *cookie;
                    return Ok(());
                }
                if self.table.len() >= self.capacity {
                    return Err(SwitchError::TableFull(self.capacity));
                }
                self.install_counter += 1;
                self.table.push(FlowEntry {
                    priority: *priority,
                    matches: matches.clone(),
                    actions: actions.clone(),
                    cookie: *cookie,
                    install_seq: self.install_counter,
                });
                Ok(())
            }
            FlowModOp::DeleteByCookie(cookie) => {
                self.table.retain(|e| e.cookie != *cookie);
                Ok(())
            }
        }
    }

    pub fn count_cookie(&self, cookie: u64) -> usize {
        self.table.iter().filter(|e| e.cookie == cookie).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::naming::ContentName;
    use crate::wire::{encode_packet, ConetHeader, ConetPacket, DomainTag, PacketFormat};

    fn mac(last: u8) -> Mac {
        Mac([2, 0, 0, 0, 0, last])
    }

    fn tagged_interest_frame(tag: DomainTag) -> Frame {
        let h = ConetHeader::interest(ContentName::parse("foo.com/x").unwrap(), 0, 1).unwrap();
        let p = ConetPacket::new(
            PacketFormat::F6,
            Ipv4Addr::new(192, 168, 1, 23),
            Ipv4Addr::new(192, 168, 1, 8),
            Some(tag),
            h,
        )
        .unwrap();
        Frame::ipv4(mac(1), mac(2), encode_packet(&p))
    }

    fn sw() -> Switch {
        Switch::new("sw1".into(), [1, 2, 3], 16)
    }

    #[test]
    fn empty_table_raises_packet_in() {
        let mut s = sw();
        let v = s.process(
            &tagged_interest_frame(DomainTag::from_u64(1 << 32).unwrap()),
            1,
        );
        assert!(v.packet_in);
        assert!(v.outputs.is_empty());
    }

    #[test]
    fn tag_match_forwards_tagged_interest() {
        let mut s = sw();
        let tag = DomainTag::from_short([0x00, 0x07, 0x00, 0x09]).unwrap();
        s.flow_mod(&FlowModOp::Add {
            priority: 100,
            matches: MatchFields {
                nw_proto: Some(17),
                nw_dst: Some(Ipv4Addr::new(192, 168, 1, 8)),
                tp_src: Some(tag.src_port()),
                tp_dst: Some(tag.dst_port()),
                ..MatchFields::any()
            },
            actions: vec![FlowAction::Output(2)],
            cookie: 7,
        })
        .unwrap();
        let v = s.process(&tagged_interest_frame(tag), 1);
        assert!(!v.packet_in);
        assert_eq!(v.outputs.len(), 1);
        assert_eq!(v.outputs[0].0, 2);
        // A different tag misses.
        let v = s.process(
            &tagged_interest_frame(DomainTag::from_short([0, 7, 0, 8]).unwrap()),
            1,
        );
        assert!(v.packet_in);
    }

    #[test]
    fn higher_priority_wins_then_earliest() {
        let mut s = sw();
        let add = |s: &mut Switch, prio: u32, port: PortId, cookie: u64| {
            s.flow_mod(&FlowModOp::Add {
                priority: prio,
                matches: MatchFields {
                    in_port: Some(1),
                    ..MatchFields::any()
                },
                actions: vec![FlowAction::Output(port)],
                cookie,
            })
            .unwrap();
        };
        add(&mut s, 10, 2, 1);
        add(&mut s, 20, 3, 2);
        let frame = tagged_interest_frame(DomainTag::from_u64(1 << 32).unwrap());
        let v = s.process(&frame, 1);
        assert_eq!(v.outputs[0].0, 3, "priority 20 wins");

        // Same priority: the earlier entry (to port 2, via a fresh switch).
        let mut s = sw();
        add(&mut s, 10, 2, 1);
        let mut alt = MatchFields::any();
        alt.in_port = Some(1);
        alt.eth_type = Some(ETHERTYPE_IPV4);
        s.flow_mod(&FlowModOp::Add {
            priority: 10,
            matches: alt,
            actions: vec![FlowAction::Output(3)],
            cookie: 2,
        })
        .unwrap();
        let v = s.process(&frame, 1);
        assert_eq!(v.outputs[0].0, 2, "tie goes to the earliest install");
    }

    #[test]
    fn flood_excludes_ingress_and_no_flood_ports() {
        let mut s = sw();
        s.set_no_flood(2, true);
        s.flow_mod(&FlowModOp::Add {
            priority: 1,
            matches: MatchFields::any(),
            actions: vec![FlowAction::Flood],
            cookie: 0,
        })
        .unwrap();
        let v = s.process(
            &tagged_interest_frame(DomainTag::from_u64(1 << 32).unwrap()),
            1,
        );
        let ports: Vec<PortId> = v.outputs.iter().map(|(p, _)| *p).collect();
        assert_eq!(ports, vec![3]);
    }

    #[test]
    fn output_to_ingress_port_is_suppressed() {
        let mut s = sw();
        s.flow_mod(&FlowModOp::Add {
            priority: 1,
            matches: MatchFields::any(),
            actions: vec![FlowAction::Output(1), FlowAction::Output(2)],
            cookie: 0,
        })
        .unwrap();
        let v = s.process(
            &tagged_interest_frame(DomainTag::from_u64(1 << 32).unwrap()),
            1,
        );
        let ports: Vec<PortId> = v.outputs.iter().map(|(p, _)| *p).collect();
        assert_eq!(ports, vec![2]);
    }

    #[test]
    fn add_then_delete_by_cookie_restores_table() {
        let mut s = sw();
        let before = s.table().to_vec();
        s.flow_mod(&FlowModOp::Add {
            priority: 5,
            matches: MatchFields::any(),
            actions: vec![FlowAction::Output(2)],
            cookie: 42,
        })
        .unwrap();
        assert_eq!(s.count_cookie(42), 1);
        s.flow_mod(&FlowModOp::DeleteByCookie(42)).unwrap();
        assert_eq!(s.table(), &before[..]);
        // Deleting an absent cookie is a no-op.
        s.flow_mod(&FlowModOp::DeleteByCookie(9999)).unwrap();
    }

    #[test]
    fn duplicate_add_replaces_actions() {
        let mut s = sw();
        let m = MatchFields {
            in_port: Some(1),
            ..MatchFields::any()
        };
        let add = |port: PortId| FlowModOp::Add {
            priority: 5,
            matches: m.clone(),
            actions: vec![FlowAction::Output(port)],
            cookie: 1,
        };
        s.flow_mod(&add(2)).unwrap();
        s.flow_mod(&add(3)).unwrap();
        assert_eq!(s.table_len(), 1);
        assert_eq!(s.table()[0].actions, vec![FlowAction::Output(3)]);
    }

    #[test]
    fn table_full() {
        let mut s = Switch::new("sw".into(), [1, 2], 1);
        let add = |p: PortId| FlowModOp::Add {
            priority: p as u32,
            matches: MatchFields {
                in_port: Some(p),
                ..MatchFields::any()
            },
            actions: vec![],
            cookie: 0,
        };
        s.flow_mod(&add(1)).unwrap();
        assert_eq!(s.flow_mod(&add(2)), Err(SwitchError::TableFull(1)));
    }

    #[test]
    fn deterministic_processing() {
        let mut s = sw();
        s.flow_mod(&FlowModOp::Add {
            priority: 3,
            matches: MatchFields {
                nw_proto: Some(17),
                ..MatchFields::any()
            },
            actions: vec![FlowAction::Output(3), FlowAction::ToController],
            cookie: 0,
        })
        .unwrap();
        let f = tagged_interest_frame(DomainTag::from_u64(99 << 32).unwrap());
        let a = s.process(&f, 1);
        let b = s.process(&f, 1);
        assert_eq!(a, b);
        assert!(a.packet_in);
    }

    use std::net::Ipv4Addr;
}
