//! Deterministic content catalog and request-schedule generation.

use crate::naming::ContentName;
use crate::time::SimTime;

use super::script::{CatalogCfg, RequestOrder, RequestsCfg};
use super::ConfigError;

/// Tiny deterministic RNG (splitmix64); keeps schedules stable across
/// toolchain and dependency updates.
#[derive(Debug, Clone)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100_0000_01B3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct CatalogItem {
    pub name: ContentName,
    pub content: Vec<u8>,
}

/// The published content set: fixed-width file names under one prefix,
/// with bytes derived deterministically from the seed and the name.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub prefix: ContentName,
    pub items: Vec<CatalogItem>,
    pub chunk_size: usize,
    pub cp_payload_size: usize,
}

/// One requestable unit: a (content, chunk, carrier packet) coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequestTuple {
    pub item: usize,
    pub csn: u64,
    pub segment: u16,
}

impl Catalog {
    pub fn generate(cfg: &CatalogCfg, seed: u64) -> Result<Self, ConfigError> {
        if cfg.files == 0 || cfg.chunks_per_file == 0 {
            return Err(ConfigError::Script("catalog must contain content".into()));
        }
        if cfg.cp_payload_size == 0
            || cfg.chunk_size < cfg.cp_payload_size
            || !cfg.chunk_size.is_multiple_of(cfg.cp_payload_size)
            || cfg.cp_payload_size > u16::MAX as usize
        {
            return Err(ConfigError::Script(
                "chunk_size must be a positive multiple of cp_payload_size (<= 65535)".into(),
            ));
        }
        let prefix = ContentName::parse(&cfg.prefix)
            .map_err(|e| ConfigError::Script(format!("bad catalog prefix: {e}")))?;
        let mut items = Vec::with_capacity(cfg.files as usize);
        for i in 0..cfg.files {
            let name = ContentName::parse(&format!("{}/file{i:04}", prefix.as_str()))
                .map_err(|e| ConfigError::Script(format!("bad content name: {e}")))?;
            let mut rng = SplitMix64(seed ^ fnv1a(name.as_str()));
            let len = cfg.chunk_size * cfg.chunks_per_file as usize;
            let mut content = Vec::with_capacity(len);
            while content.len() < len {
                content.extend_from_slice(&rng.next_u64().to_le_bytes());
            }
            content.truncate(len);
            items.push(CatalogItem { name, content });
        }
        Ok(Self {
            prefix,
            items,
            chunk_size: cfg.chunk_size,
            cp_payload_size: cfg.cp_payload_size,
        })
    }

    pub fn item_index(&self, name: &ContentName) -> Option<usize> {
        self.items.iter().position(|i| &i.name == name)
    }

    pub fn chunks_per_item(&self) -> u64 {
        (self.items[0].content.len() / self.chunk_size) as u64
    }

    pub fn segments_per_chunk(&self) -> u16 {
        (self.chunk_size / self.cp_payload_size) as u16
    }

    pub fn chunk_bytes(&self, item: usize, csn: u64) -> Option<&[u8]> {
        let content = &self.items.get(item)?.content;
        let start = csn as usize * self.chunk_size;
        content.get(start..start + self.chunk_size)
    }

    pub fn segment_payload(&self, item: usize, csn: u64, segment: u16) -> Option<&[u8]> {
        if segment == 0 {
            return None;
        }
        let chunk = self.chunk_bytes(item, csn)?;
        let start = (segment as usize - 1) * self.cp_payload_size;
        chunk.get(start..start + self.cp_payload_size)
    }

    /// Every requestable (item, csn, segment), item-major.
    pub fn tuples(&self) -> Vec<RequestTuple> {
        let mut out = Vec::new();
        for item in 0..self.items.len() {
            for csn in 0..self.chunks_per_item() {
                for segment in 1..=self.segments_per_chunk() {
                    out.push(RequestTuple { item, csn, segment });
                }
            }
        }
        out
    }

    /// Total distinct chunks across the catalog.
    pub fn chunk_count(&self) -> u64 {
        self.items.len() as u64 * self.chunks_per_item()
    }
}

/// Expands the request workload into a concrete (time, tuple) schedule:
/// fixed spacing, round-robin by default or uniform-random under the seed.
pub fn gen_requests(
    catalog: &Catalog,
    cfg: &RequestsCfg,
    end_s: f64,
    seed: u64,
) -> Result<Vec<(SimTime, RequestTuple)>, ConfigError> {
    let tuples = catalog.tuples();
    if tuples.is_empty() {
        return Err(ConfigError::Script(
            "catalog yields no requestable tuples".into(),
        ));
    }
    if !super::script::positive(cfg.interval_ms) {
        return Err(ConfigError::Script(
            "request interval must be positive".into(),
        ));
    }
    let mut rng = SplitMix64(seed ^ 0x5EED_0F0F_5EED_0F0F);
    let interval_us = (cfg.interval_ms * 1000.0).round() as u64;
    let start_us = (cfg.start_s * 1_000_000.0).round() as u64;
    let end_us = (end_s * 1_000_000.0).round() as u64;
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let at = start_us + k * interval_us;
        if at >= end_us {
            break;
        }
        if let Some(cap) = cfg.count {
            if k >= cap {
                break;
            }
        }
        let idx = match cfg.order {
            RequestOrder::RoundRobin => (k % tuples.len() as u64) as usize,
            RequestOrder::UniformRandom => rng.below(tuples.len() as u64) as usize,
        };
        out.push((SimTime(at), tuples[idx]));
        k += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::script::ScriptConfig;

    fn catalog(files: u32, chunks: u32) -> Catalog {
        let cfg = CatalogCfg {
            prefix: "conet.example".into(),
            files,
            chunks_per_file: chunks,
            chunk_size: 4096,
            cp_payload_size: 1024,
        };
        Catalog::generate(&cfg, 1).unwrap()
    }

    #[test]
    fn catalog_shape() {
        let c = catalog(208, 1);
        assert_eq!(c.items.len(), 208);
        assert_eq!(c.chunks_per_item(), 1);
        assert_eq!(c.segments_per_chunk(), 4);
        assert_eq!(c.chunk_count(), 208);
        assert_eq!(c.tuples().len(), 208 * 4);
        // Fixed-width names keep every packet the same size.
        assert!(c
            .items
            .iter()
            .all(|i| i.name.as_str().len() == c.items[0].name.as_str().len()));
    }

    #[test]
    fn content_is_deterministic_per_seed() {
        let a = catalog(3, 2);
        let b = catalog(3, 2);
        assert_eq!(a.items[2].content, b.items[2].content);
        let cfg = CatalogCfg {
            prefix: "conet.example".into(),
            files: 3,
            chunks_per_file: 2,
            chunk_size: 4096,
            cp_payload_size: 1024,
        };
        let c = Catalog::generate(&cfg, 2).unwrap();
        assert_ne!(a.items[2].content, c.items[2].content);
    }

    #[test]
    fn round_robin_covers_catalog_evenly() {
        let c = catalog(2, 1); // 2 items x 4 segments = 8 tuples
        let cfg = RequestsCfg {
            start_s: 0.0,
            interval_ms: 50.0,
            order: RequestOrder::RoundRobin,
            count: Some(16),
        };
        let schedule = gen_requests(&c, &cfg, 10.0, 1).unwrap();
        assert_eq!(schedule.len(), 16);
        for (i, (at, tuple)) in schedule.iter().enumerate() {
            assert_eq!(at.as_micros(), i as u64 * 50_000);
            assert_eq!(*tuple, c.tuples()[i % 8]);
        }
        // Each of the two items is requested exactly 8 times.
        let count0 = schedule.iter().filter(|(_, t)| t.item == 0).count();
        assert_eq!(count0, 8);
    }

    #[test]
    fn random_schedule_reproducible() {
        let c = catalog(4, 1);
        let cfg = RequestsCfg {
            start_s: 1.0,
            interval_ms: 10.0,
            order: RequestOrder::UniformRandom,
            count: None,
        };
        let a = gen_requests(&c, &cfg, 2.0, 7).unwrap();
        let b = gen_requests(&c, &cfg, 2.0, 7).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.iter().zip(&b).all(|(x, y)| x == y));
        let c2 = gen_requests(&c, &cfg, 2.0, 8).unwrap();
        assert!(a.iter().zip(&c2).any(|(x, y)| x != y));
    }

    #[test]
    fn empty_catalog_is_a_config_error() {
        let mut cfg = ScriptConfig::three_phase();
        cfg.catalog.files = 0;
        assert!(matches!(
            Catalog::generate(&cfg.catalog, 1),
            Err(ConfigError::Script(_))
        ));
    }

    #[test]
    fn indivisible_sizes_rejected() {
        let cfg = CatalogCfg {
            prefix: "a.b".into(),
            files: 1,
            chunks_per_file: 1,
            chunk_size: 4096,
            cp_payload_size: 1000,
        };
        assert!(Catalog::generate(&cfg, 1).is_err());
    }
}
