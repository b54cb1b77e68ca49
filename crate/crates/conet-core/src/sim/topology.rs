//! Topology configuration: nodes, links, port wiring, and the domain
//! address plan, plus validation and the controller's view of it all.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::node::{Mac, NodeId, PortId};
use crate::nrs::ControlTopology;

use super::ConfigError;

fn default_interest_addr() -> Ipv4Addr {
    Ipv4Addr::new(192, 168, 1, 8)
}

fn default_data_addr() -> Ipv4Addr {
    Ipv4Addr::new(192, 168, 1, 23)
}

fn default_control_latency() -> u64 {
    1000
}

fn default_link_latency() -> u64 {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Client,
    Server,
    Cache,
    Switch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeCfg {
    pub id: String,
    pub kind: NodeRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac: Option<Mac>,
    /// Edge-node knobs (clients and servers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fib_capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookup_timeout_ms: Option<u64>,
    /// Switch knobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_table_capacity: Option<usize>,
    /// Cache this switch duplicates data toward. Defaults to a directly
    /// attached cache, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_to_cache: Option<String>,
    /// Cache knobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_capacity_chunks: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkCfg {
    pub a: String,
    pub a_port: PortId,
    pub b: String,
    pub b_port: PortId,
    #[serde(default = "default_link_latency")]
    pub latency_us: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerCfg {
    pub id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default = "default_interest_addr")]
    pub interest_addr: Ipv4Addr,
    #[serde(default = "default_data_addr")]
    pub data_addr: Ipv4Addr,
    pub controller: ControllerCfg,
    #[serde(default = "default_control_latency")]
    pub control_latency_us: u64,
    pub nodes: Vec<NodeCfg>,
    pub links: Vec<LinkCfg>,
}

impl TopologyConfig {
    /// The shipped two-switch testbed: client and cache behind the first
    /// switch, server behind the second, one trunk between them.
    pub fn testbed() -> Self {
        serde_json::from_str(TESTBED_JSON).expect("embedded testbed config is valid")
    }
}

pub const TESTBED_JSON: &str = r#"{
  "interest_addr": "192.168.1.8",
  "data_addr": "192.168.1.23",
  "controller": { "id": "nrs0" },
  "control_latency_us": 1000,
  "nodes": [
    { "id": "client0", "kind": "client", "mac": "02:00:00:00:00:01" },
    { "id": "server0", "kind": "server", "mac": "02:00:00:00:00:02" },
    { "id": "cache0",  "kind": "cache",  "mac": "02:00:00:00:00:03", "cache_capacity_chunks": 1024 },
    { "id": "sw1", "kind": "switch" },
    { "id": "sw2", "kind": "switch" }
  ],
  "links": [
    { "a": "client0", "a_port": 1, "b": "sw1", "b_port": 1, "latency_us": 1000 },
    { "a": "cache0",  "a_port": 1, "b": "sw1", "b_port": 2, "latency_us": 1000 },
    { "a": "sw1", "a_port": 3, "b": "sw2", "b_port": 3, "latency_us": 1000 },
    { "a": "server0", "a_port": 1, "b": "sw2", "b_port": 1, "latency_us": 1000 }
  ]
}"#;

/// A validated, resolved topology.
#[derive(Debug, Clone)]
pub struct Topology {
    pub config: TopologyConfig,
    pub controller_id: NodeId,
    pub node_roles: BTreeMap<NodeId, NodeRole>,
    pub macs: BTreeMap<NodeId, Mac>,
    /// (node, port) -> (peer, peer port, latency).
    pub peers: BTreeMap<(NodeId, PortId), (NodeId, PortId, u64)>,
    pub switch_ports: BTreeMap<NodeId, Vec<PortId>>,
    /// Single interface of each terminal or cache.
    pub access_port: BTreeMap<NodeId, PortId>,
    pub cache_assoc: BTreeMap<NodeId, NodeId>,
    pub flow_table_capacity: BTreeMap<NodeId, usize>,
}

impl Topology {
    pub fn from_config(config: TopologyConfig) -> Result<Self, ConfigError> {
        let mut node_roles = BTreeMap::new();
        let mut macs = BTreeMap::new();
        for n in &config.nodes {
            if node_roles.insert(n.id.clone(), n.kind).is_some() {
                return Err(ConfigError::DuplicateNodeId(n.id.clone()));
            }
            if let Some(mac) = n.mac {
                if macs.values().any(|m| *m == mac) {
                    return Err(ConfigError::DuplicateMac(mac.to_string()));
                }
                macs.insert(n.id.clone(), mac);
            }
        }
        if node_roles.contains_key(&config.controller.id) {
            return Err(ConfigError::DuplicateNodeId(config.controller.id.clone()));
        }
        if config.interest_addr == config.data_addr {
            return Err(ConfigError::AddressPlan(
                "interest and data addresses must differ".into(),
            ));
        }
        for n in &config.nodes {
            if n.kind != NodeRole::Switch && !macs.contains_key(&n.id) {
                return Err(ConfigError::MissingMac(n.id.clone()));
            }
        }

        let mut peers = BTreeMap::new();
        let mut ports_of: BTreeMap<NodeId, Vec<PortId>> = BTreeMap::new();
        for l in &config.links {
            for end in [&l.a, &l.b] {
                if !node_roles.contains_key(end) {
                    return Err(ConfigError::UnknownNode(end.clone()));
                }
            }
            if node_roles[&l.a] != NodeRole::Switch && node_roles[&l.b] != NodeRole::Switch {
                return Err(ConfigError::BadLink(format!(
                    "link {}:{} <-> {}:{} connects no switch",
                    l.a, l.a_port, l.b, l.b_port
                )));
            }
            for (n, p) in [(&l.a, l.a_port), (&l.b, l.b_port)] {
                if peers.contains_key(&(n.clone(), p)) {
                    return Err(ConfigError::DuplicatePort(n.clone(), p));
                }
                ports_of.entry(n.clone()).or_default().push(p);
            }
            peers.insert(
                (l.a.clone(), l.a_port),
                (l.b.clone(), l.b_port, l.latency_us),
            );
            peers.insert(
                (l.b.clone(), l.b_port),
                (l.a.clone(), l.a_port, l.latency_us),
            );
        }

        let mut switch_ports = BTreeMap::new();
        let mut access_port = BTreeMap::new();
        for (id, role) in &node_roles {
            let mut ports = ports_of.get(id).cloned().unwrap_or_default();
            ports.sort_unstable();
            match role {
                NodeRole::Switch => {
                    switch_ports.insert(id.clone(), ports);
                }
                _ => {
                    if ports.len() != 1 {
                        return Err(ConfigError::BadLink(format!(
                            "{id} needs exactly one link, found {}",
                            ports.len()
                        )));
                    }
                    access_port.insert(id.clone(), ports[0]);
                }
            }
        }

        // Per-switch data duplication target: explicit, else any directly
        // attached cache.
        let mut cache_assoc = BTreeMap::new();
        let mut flow_table_capacity = BTreeMap::new();
        for n in &config.nodes {
            if n.kind != NodeRole::Switch {
                continue;
            }
            flow_table_capacity.insert(
                n.id.clone(),
                n.flow_table_capacity
                    .unwrap_or(crate::node::DEFAULT_TABLE_CAPACITY),
            );
            let assoc = match &n.duplicate_to_cache {
                Some(cache) => {
                    if node_roles.get(cache) != Some(&NodeRole::Cache) {
                        return Err(ConfigError::BadLink(format!(
                            "{} duplicates toward {cache}, which is not a cache",
                            n.id
                        )));
                    }
                    Some(cache.clone())
                }
                None => switch_ports[&n.id]
                    .iter()
                    .filter_map(|p| peers.get(&(n.id.clone(), *p)))
                    .find(|(peer, _, _)| node_roles.get(peer) == Some(&NodeRole::Cache))
                    .map(|(peer, _, _)| peer.clone()),
            };
            if let Some(cache) = assoc {
                cache_assoc.insert(n.id.clone(), cache);
            }
        }

        let has = |role: NodeRole| node_roles.values().any(|r| *r == role);
        if !has(NodeRole::Client) || !has(NodeRole::Server) || !has(NodeRole::Switch) {
            return Err(ConfigError::AddressPlan(
                "topology needs at least one client, one server, and one switch".into(),
            ));
        }

        Ok(Self {
            controller_id: config.controller.id.clone(),
            config,
            node_roles,
            macs,
            peers,
            switch_ports,
            access_port,
            cache_assoc,
            flow_table_capacity,
        })
    }

    pub fn role(&self, id: &NodeId) -> Option<NodeRole> {
        self.node_roles.get(id).copied()
    }

    pub fn nodes_with_role(&self, role: NodeRole) -> Vec<NodeId> {
        self.node_roles
            .iter()
            .filter(|(_, r)| **r == role)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// The controller's knowledge of the domain: adjacency, terminal macs,
    /// per-switch cache association, and the no-flood plan for cache ports.
    pub fn control_view(&self) -> ControlTopology {
        let mut adjacency: BTreeMap<NodeId, Vec<(PortId, NodeId, PortId)>> = BTreeMap::new();
        for ((node, port), (peer, peer_port, _)) in &self.peers {
            adjacency
                .entry(node.clone())
                .or_default()
                .push((*port, peer.clone(), *peer_port));
        }
        for v in adjacency.values_mut() {
            v.sort_unstable_by_key(|(p, _, _)| *p);
        }
        let mut no_flood: BTreeMap<NodeId, Vec<PortId>> = BTreeMap::new();
        for (sw, ports) in &self.switch_ports {
            for p in ports {
                if let Some((peer, _, _)) = self.peers.get(&(sw.clone(), *p)) {
                    if self.node_roles.get(peer) == Some(&NodeRole::Cache) {
                        no_flood.entry(sw.clone()).or_default().push(*p);
                    }
                }
            }
        }
        ControlTopology {
            interest_addr: self.config.interest_addr,
            data_addr: self.config.data_addr,
            adjacency,
            node_by_mac: self.macs.iter().map(|(id, m)| (*m, id.clone())).collect(),
            switches: self.switch_ports.keys().cloned().collect(),
            cache_assoc: self.cache_assoc.clone(),
            no_flood,
        }
    }

    /// All data-plane interfaces, for the trace.
    pub fn interfaces(&self) -> Vec<(NodeId, PortId)> {
        let mut out: Vec<(NodeId, PortId)> = self.peers.keys().cloned().collect();
        out.sort();
        out
    }

    pub fn view_json(&self) -> serde_json::Value {
        json!({
            "controller": self.controller_id,
            "interest_addr": self.config.interest_addr.to_string(),
            "data_addr": self.config.data_addr.to_string(),
            "switches": self.switch_ports.keys().cloned().collect::<Vec<_>>(),
            "nodes": self.config.nodes.iter().map(|n| json!({
                "id": n.id,
                "kind": n.kind,
                "mac": n.mac.map(|m| m.to_string()),
            })).collect::<Vec<_>>(),
            "links": self.config.links.iter().map(|l| json!({
                "a": l.a, "a_port": l.a_port,
                "b": l.b, "b_port": l.b_port,
                "latency_us": l.latency_us,
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn testbed_config_is_valid() {
        let t = Topology::from_config(TopologyConfig::testbed()).unwrap();
        assert_eq!(t.switch_ports.len(), 2);
        assert_eq!(t.cache_assoc.get("sw1"), Some(&"cache0".to_string()));
        assert_eq!(t.cache_assoc.get("sw2"), None);
        assert_eq!(t.access_port["client0"], 1);
        let view = t.control_view();
        assert_eq!(view.no_flood["sw1"], vec![2]);
        assert_eq!(view.next_port(&"sw2".into(), &"cache0".into()), Some(3));
    }

    #[test]
    fn rejects_dangling_and_duplicate_references() {
        let mut cfg = TopologyConfig::testbed();
        cfg.links[0].a = "ghost".into();
        assert!(matches!(
            Topology::from_config(cfg),
            Err(ConfigError::UnknownNode(id)) if id == "ghost"
        ));

        let mut cfg = TopologyConfig::testbed();
        cfg.nodes.push(cfg.nodes[0].clone());
        assert!(matches!(
            Topology::from_config(cfg),
            Err(ConfigError::DuplicateNodeId(_))
        ));

        let mut cfg = TopologyConfig::testbed();
        cfg.links[1].a = "client0".into(); // reuses client0 port 1
        assert!(matches!(
            Topology::from_config(cfg),
            Err(ConfigError::DuplicatePort(_, 1))
        ));
    }

    #[test]
    fn rejects_bad_address_plan_and_missing_macs() {
        let mut cfg = TopologyConfig::testbed();
        cfg.data_addr = cfg.interest_addr;
        assert!(matches!(
            Topology::from_config(cfg),
            Err(ConfigError::AddressPlan(_))
        ));

        let mut cfg = TopologyConfig::testbed();
        cfg.nodes[0].mac = None;
        assert!(matches!(
            Topology::from_config(cfg),
            Err(ConfigError::MissingMac(_))
        ));
    }

    #[test]
    fn terminal_needs_exactly_one_link() {
        let mut cfg = TopologyConfig::testbed();
        cfg.links.push(LinkCfg {
            a: "client0".into(),
            a_port: 2,
            b: "sw2".into(),
            b_port: 9,
            latency_us: 1000,
        });
        assert!(matches!(
            Topology::from_config(cfg),
            Err(ConfigError::BadLink(_))
        ));
    }
}
