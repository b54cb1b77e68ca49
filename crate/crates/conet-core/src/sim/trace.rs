//! Per-bucket interface counters and the CSV trace format.
//!
//! Counters are attributed at transmission time to both link ends, so the
//! per-bucket conservation law (tx at one end equals rx at the other)
//! holds exactly on lossless links.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::node::{NodeId, PortId};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub time_s: f64,
    pub node: NodeId,
    pub iface: PortId,
    pub rx_bytes: u64,
    pub tx_bytes: u64,
    /// Only populated for cache nodes.
    pub cached_items: Option<u64>,
}

pub const TRACE_HEADER: &str = "time_s,node,iface,rx_bytes,tx_bytes,cached_items";

pub fn to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let cached = r.cached_items.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.time_s, r.node, r.iface, r.rx_bytes, r.tx_bytes, cached
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Debug, Clone)]
pub struct TraceCollector {
    interval_us: u64,
    buckets: usize,
    // (node, iface) -> per-bucket [rx, tx]
    data: BTreeMap<(NodeId, PortId), Vec<[u64; 2]>>,
    // cache -> (time, inventory size) step series
    cache_series: BTreeMap<NodeId, Vec<(u64, u64)>>,
}

impl TraceCollector {
    pub fn new(
        interval_us: u64,
        end_us: u64,
        interfaces: &[(NodeId, PortId)],
        caches: &[NodeId],
    ) -> Self {
        assert!(interval_us > 0);
        let buckets = (end_us.div_ceil(interval_us)).max(1) as usize;
        let data = interfaces
            .iter()
            .map(|k| (k.clone(), vec![[0u64; 2]; buckets]))
            .collect();
        let cache_series = caches.iter().map(|c| (c.clone(), Vec::new())).collect();
        Self {
            interval_us,
            buckets,
            data,
            cache_series,
        }
    }

    fn bucket(&self, t: SimTime) -> Option<usize> {
        let b = (t.as_micros() / self.interval_us) as usize;
        (b < self.buckets).then_some(b)
    }

    /// One frame crossing a link: tx at the sender, rx at the receiver.
    pub fn record_transfer(
        &mut self,
        t: SimTime,
        from: &(NodeId, PortId),
        to: &(NodeId, PortId),
        bytes: u64,
    ) {
        let Some(b) = self.bucket(t) else { return };
        if let Some(v) = self.data.get_mut(from) {
            v[b][1] += bytes;
        }
        if let Some(v) = self.data.get_mut(to) {
            v[b][0] += bytes;
        }
    }

    pub fn record_cache_count(&mut self, t: SimTime, cache: &NodeId, count: u64) {
        if let Some(series) = self.cache_series.get_mut(cache) {
            series.push((t.as_micros(), count));
        }
    }

    /// Expands counters into contiguous rows, one per (bucket, interface),
    /// ordered by time then node then interface. `cached_items` is the
    /// inventory size at the end of each bucket.
    pub fn rows(&self) -> Vec<TraceRow> {
        let mut rows = Vec::with_capacity(self.buckets * self.data.len());
        for b in 0..self.buckets {
            let bucket_end = (b as u64 + 1) * self.interval_us;
            for ((node, iface), counters) in &self.data {
                let cached_items = self.cache_series.get(node).map(|series| {
                    series
                        .iter()
                        .take_while(|(t, _)| *t < bucket_end)
                        .last()
                        .map(|(_, c)| *c)
                        .unwrap_or(0)
                });
                rows.push(TraceRow {
                    time_s: b as f64 * self.interval_us as f64 / 1_000_000.0,
                    node: node.clone(),
                    iface: *iface,
                    rx_bytes: counters[b][0],
                    tx_bytes: counters[b][1],
                    cached_items,
                });
            }
        }
        rows
    }
}
