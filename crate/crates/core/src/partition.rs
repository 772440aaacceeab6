//! Disjoint covers of `0..n` used by both clustering algorithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered family of disjoint, nonempty index sets covering `0..universe_size`.
/// Members of each set are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    sets: Vec<Vec<usize>>,
    universe_size: usize,
}

impl ClusterPartition {
    pub fn new(mut sets: Vec<Vec<usize>>, universe_size: usize) -> Result<Self> {
        for set in &mut sets {
            set.sort_unstable();
        }
        let partition = Self {
            sets,
            universe_size,
        };
        partition.validate()?;
        Ok(partition)
    }

    /// `{0}, {1}, ..., {n-1}`.
    pub fn singletons(n: usize) -> Self {
        Self {
            sets: (0..n).map(|i| vec![i]).collect(),
            universe_size: n,
        }
    }

    /// `count` consecutive blocks of `size` indices each.
    pub fn contiguous(count: usize, size: usize) -> Self {
        Self {
            sets: (0..count)
                .map(|n| (n * size..(n + 1) * size).collect())
                .collect(),
            universe_size: count * size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.universe_size];
        for (c, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidInput(format!("cluster {c} is empty")));
            }
            for &i in set {
                if i >= self.universe_size {
                    return Err(Error::InvalidInput(format!(
                        "index {i} outside universe of size {}",
                        self.universe_size
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidInput(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "index {missing} is not covered"
            )));
        }
        Ok(())
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn set(&self, c: usize) -> &[usize] {
        &self.sets[c]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    /// `owner[i]` is the index of the set containing `i`.
    pub fn owners(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.universe_size];
        for (c, set) in self.sets.iter().enumerate() {
            for &i in set {
                owner[i] = c;
            }
        }
        owner
    }

    /// Moves every member of set `d` into set `c` and removes `d`; later sets
    /// shift down by one.
    pub(crate) fn merge(&mut self, c: usize, d: usize) {
        debug_assert!(c != d);
        let absorbed = self.sets.remove(d);
        let target = if d < c { c - 1 } else { c };
        self.sets[target].extend(absorbed);
        self.sets[target].sort_unstable();
    }
}
