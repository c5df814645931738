use std::fmt;

use super::GenealogyError;

/// Maximum number of generations a label may encode.
pub const MAX_DEPTH: usize = 1 << 16;
/// Children of one parent are indexed `1..=MAX_FANOUT`.
pub const MAX_FANOUT: u64 = u32::MAX as u64;

/// Ulam-Harris address of an individual: the child indices from the founder.
///
/// The empty path is the founder. Entries are always `>= 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UlamLabel {
    path: Vec<u32>,
}

impl UlamLabel {
    pub fn root() -> Self {
        Self { path: Vec::new() }
    }

    /// Build a label from an explicit path.
    pub fn from_path<I: IntoIterator<Item = u64>>(path: I) -> Result<Self, GenealogyError> {
        let mut label = Self::root();
        for k in path {
            label = label.child(k)?;
        }
        Ok(label)
    }

    /// The `k`-th child (`k >= 1`).
    pub fn child(&self, k: u64) -> Result<Self, GenealogyError> {
        if k == 0 || k > MAX_FANOUT {
            return Err(GenealogyError::FanOut(k));
        }
        if self.path.len() >= MAX_DEPTH {
            return Err(GenealogyError::Depth);
        }
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(k as u32);
        Ok(Self { path })
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    /// `self` is a (non-strict) prefix of `other`.
    pub fn is_prefix_of(&self, other: &UlamLabel) -> bool {
        other.path.starts_with(&self.path)
    }

    /// Strict ancestry: `self` is a strict prefix of `other`.
    pub fn is_ancestor_of(&self, other: &UlamLabel) -> bool {
        self.path.len() < other.path.len() && self.is_prefix_of(other)
    }

    /// The label of `other` inside the subtree rooted at `self`.
    pub fn relative(&self, other: &UlamLabel) -> Option<UlamLabel> {
        other
            .path
            .strip_prefix(self.path.as_slice())
            .map(|rest| UlamLabel { path: rest.to_vec() })
    }

    /// Ancestor at the given depth.
    pub fn truncate(&self, depth: usize) -> UlamLabel {
        UlamLabel { path: self.path[..depth.min(self.path.len())].to_vec() }
    }
}

impl fmt::Display for UlamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            return f.write_str("∅");
        }
        for (i, k) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

impl serde::Serialize for UlamLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Debug for UlamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UlamLabel({self})")
    }
}
