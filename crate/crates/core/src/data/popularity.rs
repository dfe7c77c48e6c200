use super::Interactions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PopularityStats {
    /// Number of training users adopting each item.
    pub counts: Vec<u64>,
    /// `counts[i] / total`.
    pub nu: Vec<f64>,
    pub total: u64,
}

pub fn popularity(train: &Interactions) -> Result<PopularityStats> {
    let counts = train.item_counts();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::input("popularity needs a non-empty training set"));
    }
    let nu = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(PopularityStats { counts, nu, total })
}

impl PopularityStats {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::input("popularity counts sum to zero"));
        }
        let nu = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(PopularityStats { counts, nu, total })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailSegment {
    Short,
    Medium,
    Long,
}

impl TailSegment {
    pub const ALL: [TailSegment; 3] = [TailSegment::Short, TailSegment::Medium, TailSegment::Long];

    pub fn index(self) -> usize {
        match self {
            TailSegment::Short => 0,
            TailSegment::Medium => 1,
            TailSegment::Long => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TailSegment::Short => "short",
            TailSegment::Medium => "medium",
            TailSegment::Long => "long",
        }
    }
}

/// Popularity cut points: the first `n33` items of `order` form the short
/// tail, the next `n66 - n33` the medium tail, the rest the long tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TailIntervals {
    pub n33: usize,
    pub n66: usize,
    /// Items by descending count, ties by ascending index.
    pub order: Vec<u32>,
    rank: Vec<u32>,
}

impl TailIntervals {
    pub fn segment(&self, item: u32) -> TailSegment {
        let r = self.rank[item as usize] as usize;
        if r < self.n33 {
            TailSegment::Short
        } else if r < self.n66 {
            TailSegment::Medium
        } else {
            TailSegment::Long
        }
    }
}

/// Smallest prefixes of the popularity order whose share reaches 1/3 and 2/3.
/// Shares are compared exactly in integers.
pub fn tail_intervals(stats: &PopularityStats) -> Result<TailIntervals> {
    if stats.total == 0 {
        return Err(Error::input("tail intervals need a positive total count"));
    }
    let mut order: Vec<u32> = (0..stats.counts.len() as u32).collect();
    order.sort_by(|&a, &b| stats.counts[b as usize].cmp(&stats.counts[a as usize]).then(a.cmp(&b)));

    let total = stats.total as u128;
    let (mut n33, mut n66) = (None, None);
    let mut cum: u128 = 0;
    for (k, &i) in order.iter().enumerate() {
        cum += stats.counts[i as usize] as u128;
        if n33.is_none() && 3 * cum >= total {
            n33 = Some(k + 1);
        }
        if n66.is_none() && 3 * cum >= 2 * total {
            n66 = Some(k + 1);
            break;
        }
    }
    let (n33, n66) = (n33.expect("cumulative share reaches 1"), n66.expect("cumulative share reaches 1"));
    let mut rank = vec![0u32; order.len()];
    for (k, &i) in order.iter().enumerate() {
        rank[i as usize] = k as u32;
    }
    Ok(TailIntervals { n33, n66, order, rank })
}
