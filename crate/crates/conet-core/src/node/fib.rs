//! The node-local forwarding table: a bounded cache of currently needed
//! routes, filled on demand from the controller and evicted LRU.

use crate::naming::ContentName;
use crate::time::SimTime;
use crate::trie::PrefixTrie;
use crate::wire::DomainTag;

use super::NodeId;

/// One cached route: name prefix to next hop, plus the domain tag when the
/// prefix is an exact content name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: ContentName,
    pub next_hop: NodeId,
    pub tag: Option<DomainTag>,
    pub last_used: SimTime,
}

#[derive(Debug, Clone)]
struct Slot {
    next_hop: NodeId,
    tag: Option<DomainTag>,
    last_used: SimTime,
    lru_seq: u64,
}

#[derive(Debug, Clone)]
pub struct Fib {
    trie: PrefixTrie<Slot>,
    capacity: usize,
    use_counter: u64,
}

impl Fib {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "a forwarding table needs at least one slot");
        Self {
            trie: PrefixTrie::new(),
            capacity,
            use_counter: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.trie.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trie.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Longest-prefix lookup. A hit refreshes the entry's recency.
    pub fn lookup(&mut self, name: &ContentName, now: SimTime) -> Option<FibEntry> {
        let prefix = self.trie.lookup_longest(name).map(|(p, _)| p)?;
        self.use_counter += 1;
        let seq = self.use_counter;
        let slot = self
            .trie
            .get_exact_mut(&prefix)
            .expect("prefix just matched");
        slot.last_used = now;
        slot.lru_seq = seq;
        Some(FibEntry {
            prefix,
            next_hop: slot.next_hop.clone(),
            tag: slot.tag,
            last_used: slot.last_used,
        })
    }

    /// Lookup without touching recency.
    pub fn peek(&self, name: &ContentName) -> Option<FibEntry> {
        self.trie
            .lookup_longest(name)
            .map(|(prefix, slot)| FibEntry {
                prefix,
                next_hop: slot.next_hop.clone(),
                tag: slot.tag,
                last_used: slot.last_used,
            })
    }

    /// Installs (or overwrites) a route. When the table is full the
    /// least-recently-used entry is evicted first; its prefix is returned.
    pub fn install(
        &mut self,
        prefix: ContentName,
        next_hop: NodeId,
        tag: Option<DomainTag>,
        now: SimTime,
    ) -> Option<ContentName> {
        let mut evicted = None;
        if self.trie.get_exact(&prefix).is_none() && self.trie.len() >= self.capacity {
            let victim = self
                .trie
                .entries()
                .into_iter()
                .min_by_key(|(_, slot)| slot.lru_seq)
                .map(|(p, _)| p)
                .expect("table is full, so non-empty");
            self.trie.remove(&victim);
            evicted = Some(victim);
        }
        self.use_counter += 1;
        self.trie.insert(
            &prefix,
            Slot {
                next_hop,
                tag,
                last_used: now,
                lru_seq: self.use_counter,
            },
        );
        evicted
    }

    pub fn remove(&mut self, prefix: &ContentName) -> bool {
        self.trie.remove(prefix).is_some()
    }

    /// Consistent snapshot sorted by prefix; does not refresh recency.
    pub fn export(&self) -> Vec<FibEntry> {
        self.trie
            .entries()
            .into_iter()
            .map(|(prefix, slot)| FibEntry {
                prefix,
                next_hop: slot.next_hop.clone(),
                tag: slot.tag,
                last_used: slot.last_used,
            })
            .collect()
    }
}
