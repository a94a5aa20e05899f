use std::collections::BTreeMap;

/// Multiset of symbols, the only view of a shuffled message list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: BTreeMap<u32, u64>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols<I: IntoIterator<Item = u32>>(symbols: I) -> Self {
        let mut h = Self::new();
        for s in symbols {
            h.add(s, 1);
        }
        h
    }

    pub fn add(&mut self, symbol: u32, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(symbol).or_insert(0) += count;
        self.total += count;
    }

    pub fn count(&self, symbol: u32) -> u64 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Nonzero `(symbol, count)` pairs in increasing symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    pub fn max_symbol(&self) -> Option<u32> {
        self.counts.keys().next_back().copied()
    }
}
