//! Longest-prefix-match table over content names.
//!
//! A two-level trie: principals at the root, then one node per label
//! component. Both the node-side forwarding table and the controller-side
//! routing base are built on this.

use std::collections::HashMap;

use crate::naming::ContentName;

#[derive(Debug, Clone)]
struct TrieNode<V> {
    value: Option<V>,
    children: HashMap<String, TrieNode<V>>,
}

impl<V> TrieNode<V> {
    fn new() -> Self {
        Self {
            value: None,
            children: HashMap::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.value.is_none() && self.children.is_empty()
    }
}

/// Maps name prefixes to values with component-wise longest-prefix lookup.
#[derive(Debug, Clone)]
pub struct PrefixTrie<V> {
    roots: HashMap<String, TrieNode<V>>,
    len: usize,
}

impl<V> Default for PrefixTrie<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V> PrefixTrie<V> {
    pub fn new() -> Self {
        Self {
            roots: HashMap::new(),
            len: 0,
        }
    }

    /// Number of stored prefixes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Inserts or replaces; returns the previous value for the exact prefix.
    pub fn insert(&mut self, prefix: &ContentName, value: V) -> Option<V> {
        let mut node = self
            .roots
            .entry(prefix.principal().to_owned())
            .or_insert_with(TrieNode::new);
        for label in prefix.labels() {
            node = node
                .children
                .entry(label.to_owned())
                .or_insert_with(TrieNode::new);
        }
        let old = node.value.replace(value);
        if old.is_none() {
            self.len += 1;
        }
        old
    }

    /// Removes the exact prefix, pruning empty branches.
    pub fn remove(&mut self, prefix: &ContentName) -> Option<V> {
        let root = self.roots.get_mut(prefix.principal())?;
        let labels: Vec<&str> = prefix.labels().collect();
        let old = remove_rec(root, &labels)?;
        self.len -= 1;
        if root.is_empty() {
            self.roots.remove(prefix.principal());
        }
        Some(old)
    }

    pub fn get_exact(&self, prefix: &ContentName) -> Option<&V> {
        let mut node = self.roots.get(prefix.principal())?;
        for label in prefix.labels() {
            node = node.children.get(label)?;
        }
        node.value.as_ref()
    }

    pub fn get_exact_mut(&mut self, prefix: &ContentName) -> Option<&mut V> {
        let mut node = self.roots.get_mut(prefix.principal())?;
        for label in prefix.labels() {
            node = node.children.get_mut(label)?;
        }
        node.value.as_mut()
    }

    /// Longest-prefix match: the stored prefix with the most components that
    /// is a component-wise prefix of `name`.
    pub fn lookup_longest(&self, name: &ContentName) -> Option<(ContentName, &V)> {
        let mut node = self.roots.get(name.principal())?;
        let mut best: Option<(usize, &V)> = node.value.as_ref().map(|v| (0, v));
        let mut taken = 0;
        for label in name.labels() {
            match node.children.get(label) {
                Some(child) => {
                    node = child;
                    taken += 1;
                    if let Some(v) = node.value.as_ref() {
                        best = Some((taken, v));
                    }
                }
                None => break,
            }
        }
        best.map(|(depth, v)| {
            let labels: Vec<&str> = name.labels().take(depth).collect();
            let prefix =
                ContentName::from_parts(name.principal(), labels).expect("stored prefix was valid");
            (prefix, v)
        })
    }

    /// All stored (prefix, value) pairs, sorted by canonical prefix text.
    pub fn entries(&self) -> Vec<(ContentName, &V)> {
        let mut out = Vec::with_capacity(self.len);
        for (principal, node) in &self.roots {
            let mut path = vec![principal.clone()];
            collect_rec(node, &mut path, &mut out);
        }
        out.sort_by(|a, b| a.0.as_str().cmp(b.0.as_str()));
        out
    }
}

fn remove_rec<V>(node: &mut TrieNode<V>, labels: &[&str]) -> Option<V> {
    match labels.split_first() {
        None => node.value.take(),
        Some((head, rest)) => {
            let child = node.children.get_mut(*head)?;
            let old = remove_rec(child, rest)?;
            if child.is_empty() {
                node.children.remove(*head);
            }
            Some(old)
        }
    }
}

fn collect_rec<'a, V>(
    node: &'a TrieNode<V>,
    path: &mut Vec<String>,
    out: &mut Vec<(ContentName, &'a V)>,
) {
    if let Some(v) = node.value.as_ref() {
        let name = ContentName::from_parts(&path[0], &path[1..]).expect("stored prefix was valid");
        out.push((name, v));
    }
    for (label, child) in &node.children {
        path.push(label.clone());
        collect_rec(child, path, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn name(s: &str) -> ContentName {
        ContentName::parse(s).unwrap()
    }

    #[test]
    fn longest_match_wins() {
        let mut t = PrefixTrie::new();
        t.insert(&name("foo.com"), 'a');
        t.insert(&name("foo.com/football"), 'b');
        let (p, v) = t.lookup_longest(&name("foo.com/football/hl")).unwrap();
        assert_eq!((p.as_str(), *v), ("foo.com/football", 'b'));
        let (p, v) = t.lookup_longest(&name("foo.com/tennis")).unwrap();
        assert_eq!((p.as_str(), *v), ("foo.com", 'a'));
        assert!(t.lookup_longest(&name("bar.org/x")).is_none());
    }

    #[test]
    fn remove_prunes() {
        let mut t = PrefixTrie::new();
        t.insert(&name("foo.com/a/b"), 1);
        assert_eq!(t.remove(&name("foo.com/a/b")), Some(1));
        assert!(t.is_empty());
        assert!(t.roots.is_empty());
        assert_eq!(t.remove(&name("foo.com/a/b")), None);
    }

    #[test]
    fn entries_sorted() {
        let mut t = PrefixTrie::new();
        t.insert(&name("b.org"), 2);
        t.insert(&name("a.org/z"), 1);
        t.insert(&name("a.org"), 0);
        let got: Vec<String> = t
            .entries()
            .into_iter()
            .map(|(p, _)| p.as_str().to_owned())
            .collect();
        assert_eq!(got, vec!["a.org", "a.org/z", "b.org"]);
    }

    /// Brute-force oracle: scan every stored prefix, keep the deepest match.
    pub(crate) fn brute_force_lpm<'a, V>(
        entries: &'a [(ContentName, V)],
        name: &ContentName,
    ) -> Option<(&'a ContentName, &'a V)> {
        entries
            .iter()
            .filter(|(p, _)| p.is_prefix_of(name))
            .max_by_key(|(p, _)| p.depth())
            .map(|(p, v)| (p, v))
    }

    fn arb_prefix() -> impl Strategy<Value = ContentName> {
        // Small pools force nesting and overlaps.
        let comp = proptest::sample::select(vec!["a", "b", "c", "dd"]);
        (
            proptest::sample::select(vec!["x.com", "y.org"]),
            proptest::collection::vec(comp, 0..=3),
        )
            .prop_map(|(p, ls)| ContentName::from_parts(p, ls).unwrap())
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            prefixes in proptest::collection::vec(arb_prefix(), 0..40),
            queries in proptest::collection::vec(arb_prefix(), 0..20),
        ) {
            let mut t = PrefixTrie::new();
            let mut reference: Vec<(ContentName, usize)> = Vec::new();
            for (i, p) in prefixes.iter().enumerate() {
                t.insert(p, i);
                if let Some(slot) = reference.iter_mut().find(|(q, _)| q == p) {
                    slot.1 = i;
                } else {
                    reference.push((p.clone(), i));
                }
            }
            prop_assert_eq!(t.len(), reference.len());
            for q in &queries {
                let got = t.lookup_longest(q).map(|(p, v)| (p, *v));
                let want = brute_force_lpm(&reference, q).map(|(p, v)| (p.clone(), *v));
                // Depth of the winning prefix is unique even if several
                // entries tie on depth (component-wise prefixes of one name
                // at equal depth are identical).
                prop_assert_eq!(got, want);
            }
        }
    }
}
