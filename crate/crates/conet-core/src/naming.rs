//! Hierarchical content names.
//!
//! A content name is a `/`-separated string such as `foo.com/football`: the
//! first component is the *principal* (the content publisher), the remaining
//! components are *labels*. Names are opaque UTF-8; the canonical text form
//! is capped at [`MAX_NAME_BYTES`] bytes so it always fits the wire header.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Maximum UTF-8 byte length of a canonical name.
pub const MAX_NAME_BYTES: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    /// A component between separators (or before the first, or after the
    /// last) was empty.
    #[error("empty name component")]
    EmptyComponent,
    /// Canonical form exceeds [`MAX_NAME_BYTES`] bytes.
    #[error("name is {0} bytes, limit is {MAX_NAME_BYTES}")]
    NameTooLong(usize),
}

/// A hierarchical content name: principal plus ordered labels.
///
/// Immutable after construction; the canonical serialization is cached so
/// cloning and re-serializing stay cheap on hot forwarding paths.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentName {
    canonical: String,
    // Byte offset of the first '/'; equal to canonical.len() when there
    // are no labels.
    principal_end: usize,
}

impl ContentName {
    /// Parses a canonical text form. The first `/`-separated component
    /// becomes the principal, the rest become labels.
    pub fn parse(s: &str) -> Result<Self, NameError> {
        if s.len() > MAX_NAME_BYTES {
            return Err(NameError::NameTooLong(s.len()));
        }
        if s.is_empty() {
            return Err(NameError::EmptyComponent);
        }
        for component in s.split('/') {
            if component.is_empty() {
                return Err(NameError::EmptyComponent);
            }
        }
        Ok(Self {
            canonical: s.to_owned(),
            principal_end: s.find('/').unwrap_or(s.len()),
        })
    }

    /// Builds a name from its parts.
    pub fn from_parts<I, S>(principal: &str, labels: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut canonical = String::from(principal);
        for label in labels {
            canonical.push('/');
            canonical.push_str(label.as_ref());
        }
        Self::parse(&canonical)
    }

    /// Canonical text form (`principal/label1/label2/...`).
    pub fn as_str(&self) -> &str {
        &self.canonical
    }

    pub fn principal(&self) -> &str {
        &self.canonical[..self.principal_end]
    }

    /// Label components, in order. Empty for a principal-only name.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.canonical[self.principal_end..]
            .split('/')
            .filter(|c| !c.is_empty())
    }

    pub fn label_count(&self) -> usize {
        self.labels().count()
    }

    /// Number of components including the principal. A principal-only name
    /// has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.label_count()
    }

    /// Whether the principal looks like a key fingerprint rendered as hex
    /// text (self-certifying naming). Purely shape-based: at least 32 hex
    /// digits, even count. No cryptographic verification is performed.
    pub fn is_self_certifying(&self) -> bool {
        let p = self.principal();
        p.len() >= 32 && p.len().is_multiple_of(2) && p.bytes().all(|b| b.is_ascii_hexdigit())
    }

    /// Component-wise prefix relation: equal principals and `self`'s labels
    /// are a leading run of `name`'s labels. Never a substring test on the
    /// text form, so `foo.com/foot` is not a prefix of `foo.com/football`.
    pub fn is_prefix_of(&self, name: &ContentName) -> bool {
        if self.principal() != name.principal() {
            return false;
        }
        let mut theirs = name.labels();
        for ours in self.labels() {
            match theirs.next() {
                Some(l) if l == ours => {}
                _ => return false,
            }
        }
        true
    }
}

impl fmt::Display for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl fmt::Debug for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentName({})", self.canonical)
    }
}

impl std::str::FromStr for ContentName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for ContentName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical)
    }
}

impl<'de> Deserialize<'de> for ContentName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ContentName::parse(&s).map_err(D::Error::custom)
    }
}
