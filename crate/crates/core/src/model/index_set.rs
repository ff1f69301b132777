use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Largest supported part count. Index sets are stored as bitmasks and the
/// slot table of a [`Hypergraph`](super::Hypergraph) is indexed by mask.
pub const MAX_PARTS: usize = 16;

/// A nonempty set of part indices, stored as a bitmask.
///
/// Ordering is the canonical one used everywhere in the crate: first by
/// cardinality, then lexicographically on the increasing member sequence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(u32);

impl IndexSet {
    /// Builds an index set from members in strictly increasing order.
    pub fn new(members: &[usize]) -> Result<Self, ModelError> {
        if members.is_empty() {
            return Err(ModelError::EmptyIndexSet);
        }
        let mut mask = 0u32;
        let mut prev: Option<usize> = None;
        for &m in members {
            if m >= MAX_PARTS {
                return Err(ModelError::TooManyParts(m + 1));
            }
            if prev.is_some_and(|p| p >= m) {
                return Err(ModelError::UnsortedIndexSet(members.to_vec()));
            }
            prev = Some(m);
            mask |= 1 << m;
        }
        Ok(IndexSet(mask))
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_PARTS, "part index {i} out of range");
        IndexSet(1 << i)
    }

    /// `{0, 1, ..., r-1}`.
    pub fn full(r: usize) -> Self {
        assert!((1..=MAX_PARTS).contains(&r));
        IndexSet(((1u64 << r) - 1) as u32)
    }

    /// Panics on the empty mask.
    pub fn from_mask(mask: u32) -> Self {
        assert!(mask != 0, "empty index set");
        IndexSet(mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    pub fn is_subset_of(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 | other.0)
    }

    /// Members in increasing order.
    pub fn members(self) -> Members {
        Members(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.members().collect()
    }

    /// Position of part `i` among the members, if present.
    pub fn position_of(self, i: usize) -> Option<usize> {
        if !self.contains(i) {
            return None;
        }
        Some((self.0 & ((1u32 << i) - 1)).count_ones() as usize)
    }

    /// All nonempty subsets, in canonical order. The last entry is `self`.
    pub fn nonempty_subsets(self) -> Vec<IndexSet> {
        let mut out = Vec::with_capacity((1usize << self.len()) - 1);
        let mut sub = self.0;
        while sub != 0 {
            out.push(IndexSet(sub));
            sub = (sub - 1) & self.0;
        }
        out.sort();
        out
    }

    /// Nonempty proper subsets, canonical order.
    pub fn proper_subsets(self) -> Vec<IndexSet> {
        let mut subs = self.nonempty_subsets();
        subs.pop();
        subs
    }

    /// All subsets of `universe` (possibly empty) with cardinality in
    /// `lo..=hi`, canonical order with the empty set first.
    pub fn subsets_of_mask(universe: u32, lo: usize, hi: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut sub = universe;
        loop {
            let c = sub.count_ones() as usize;
            if c >= lo && c <= hi {
                out.push(sub);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & universe;
        }
        out.sort_by(|&a, &b| canonical_mask_cmp(a, b));
        out
    }

    /// Every nonempty index set of `{0..r}` with at most `k` members, in
    /// canonical order.
    pub fn all_up_to(r: usize, k: usize) -> Vec<IndexSet> {
        Self::subsets_of_mask(IndexSet::full(r).0, 1, k)
            .into_iter()
            .map(IndexSet)
            .collect()
    }
}

fn canonical_mask_cmp(a: u32, b: u32) -> Ordering {
    a.count_ones().cmp(&b.count_ones()).then_with(|| {
        // Lexicographic on increasing members: the first differing lowest
        // member decides, and the set holding the smaller element is smaller.
        let diff = a ^ b;
        if diff == 0 {
            Ordering::Equal
        } else {
            let low = diff.trailing_zeros();
            if a & (1 << low) != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
    })
}

impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        canonical_mask_cmp(self.0, other.0)
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, m) in self.members().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// Comma-joined member list, e.g. `0,2`. This is the key format of the
/// hypergraph JSON file.
impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members().map(|m| m.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for IndexSet {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let members = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| ModelError::BadIndexKey(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        IndexSet::new(&members)
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = ModelError;

    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        IndexSet::new(&v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.to_vec()
    }
}

pub struct Members(u32);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let low = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(low)
    }
}
