//! Ordered secondary index over one field.
//!
//! Entries are `(value, key)` pairs kept in a sequence of sorted blocks. A
//! Fenwick tree over block lengths gives rank -> entry lookup, so every search
//! is a plain binary search over global rank and performs at most
//! `ceil(log2(len + 1))` value comparisons. Only those comparisons are counted.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::model::{FieldValue, ValueClass};

const MAX_BLOCK: usize = 512;
const BULK_BLOCK: usize = MAX_BLOCK / 2;

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub value: FieldValue,
    pub key: Arc<str>,
}

impl Entry {
    fn cmp(&self, value: &FieldValue, key: &str) -> Ordering {
        self.value
            .total_cmp(value)
            .then_with(|| (*self.key).cmp(key))
    }
}

/// A search target inside the index's total order.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Probe<'a> {
    /// Position before every entry of the class.
    ClassStart(ValueClass),
    /// Position after every entry of the class.
    ClassEnd(ValueClass),
    /// Position before every entry equal to the value.
    Before(&'a FieldValue),
    /// Position after every entry equal to the value.
    After(&'a FieldValue),
}

impl Probe<'_> {
    /// True iff `entry` sorts strictly before this probe position.
    fn entry_precedes(&self, entry: &Entry) -> bool {
        match self {
            Probe::ClassStart(c) => entry.value.class() < *c,
            Probe::ClassEnd(c) => entry.value.class() <= *c,
            Probe::Before(v) => entry.value.total_cmp(v) == Ordering::Less,
            Probe::After(v) => entry.value.total_cmp(v) != Ordering::Greater,
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Fenwick {
    tree: Vec<usize>,
}

impl Fenwick {
    fn build(lengths: impl Iterator<Item = usize>) -> Self {
        let mut tree: Vec<usize> = std::iter::once(0).chain(lengths).collect();
        for i in 1..tree.len() {
            let parent = i + (i & i.wrapping_neg());
            if parent < tree.len() {
                tree[parent] += tree[i];
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, block: usize, delta: isize) {
        let mut i = block + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Block holding global rank `rank` and the offset inside it.
    fn locate(&self, mut rank: usize) -> (usize, usize) {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rank {
                pos = next;
                rank -= self.tree[next];
            }
            step >>= 1;
        }
        (pos, rank)
    }
}

#[derive(Debug, Default, Clone)]
pub(crate) struct OrderedIndex {
    blocks: Vec<Vec<Entry>>,
    counts: Fenwick,
    len: usize,
}

impl OrderedIndex {
    /// Build from unsorted entries in one pass.
    pub fn bulk(mut entries: Vec<Entry>) -> Self {
        entries.sort_by(|a, b| a.cmp(&b.value, &b.key));
        let len = entries.len();
        let mut blocks = Vec::with_capacity(len / BULK_BLOCK + 1);
        let mut iter = entries.into_iter().peekable();
        while iter.peek().is_some() {
            blocks.push(iter.by_ref().take(BULK_BLOCK).collect::<Vec<_>>());
        }
        let counts = Fenwick::build(blocks.iter().map(Vec::len));
        OrderedIndex { blocks, counts, len }
    }

    fn at(&self, rank: usize) -> &Entry {
        let (b, off) = self.counts.locate(rank);
        &self.blocks[b][off]
    }

    /// First rank whose entry does not satisfy `precedes`. Counts comparisons.
    fn partition(&self, comparisons: &mut u64, mut precedes: impl FnMut(&Entry) -> bool) -> usize {
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            *comparisons += 1;
            if precedes(self.at(mid)) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn rank_of(&self, probe: Probe<'_>, comparisons: &mut u64) -> usize {
        self.partition(comparisons, |e| probe.entry_precedes(e))
    }

    /// Entries with rank in `[start, end)`, in order.
    pub fn range(&self, start: usize, end: usize) -> impl Iterator<Item = &Entry> + '_ {
        let end = end.min(self.len);
        let (b, off) = if start < end { self.counts.locate(start) } else { (self.blocks.len(), 0) };
        self.blocks
            .iter()
            .skip(b)
            .flat_map(|blk| blk.iter())
            .skip(off)
            .take(end.saturating_sub(start))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry> + '_ {
        self.blocks.iter().flat_map(|b| b.iter())
    }

    pub fn insert(&mut self, value: FieldValue, key: Arc<str>, comparisons: &mut u64) {
        let rank = self.partition(comparisons, |e| e.cmp(&value, &key) == Ordering::Less);
        let entry = Entry { value, key };
        if self.blocks.is_empty() {
            self.blocks.push(vec![entry]);
            self.counts = Fenwick::build(std::iter::once(1));
            self.len = 1;
            return;
        }
        let (b, off) = if rank == self.len {
            let last = self.blocks.len() - 1;
            (last, self.blocks[last].len())
        } else {
            self.counts.locate(rank)
        };
        self.blocks[b].insert(off, entry);
        self.len += 1;
        if self.blocks[b].len() > MAX_BLOCK {
            let tail = self.blocks[b].split_off(MAX_BLOCK / 2);
            self.blocks.insert(b + 1, tail);
            self.counts = Fenwick::build(self.blocks.iter().map(Vec::len));
        } else {
            self.counts.add(b, 1);
        }
    }

    /// Remove the exact `(value, key)` entry. Returns whether it was present.
    pub fn remove(&mut self, value: &FieldValue, key: &str, comparisons: &mut u64) -> bool {
        let rank = self.partition(comparisons, |e| e.cmp(value, key) == Ordering::Less);
        if rank == self.len {
            return false;
        }
        let (b, off) = self.counts.locate(rank);
        let found = &self.blocks[b][off];
        if found.cmp(value, key) != Ordering::Equal {
            return false;
        }
        self.blocks[b].remove(off);
        self.len -= 1;
        if self.blocks[b].is_empty() {
            self.blocks.remove(b);
            self.counts = Fenwick::build(self.blocks.iter().map(Vec::len));
        } else {
            self.counts.add(b, -1);
        }
        true
    }
}
