use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub position: Vec<f64>,
    pub fitness: f64,
}

/// Bounded collection of legal candidates, kept sorted by ascending fitness.
/// Only legal, finite-fitness candidates are admitted; the worst entry is
/// evicted when capacity is exceeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPool {
    entries: Vec<PoolEntry>,
    capacity: usize,
}

impl TrajectoryPool {
    pub fn new(capacity: usize) -> Self {
        Self { entries: Vec::with_capacity(capacity.min(1024)), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Returns whether the candidate was stored.
    pub fn insert(&mut self, candidate: &[f64], fitness: f64, legal: bool) -> bool {
        if !legal || !fitness.is_finite() || self.capacity == 0 {
            return false;
        }
        if self.entries.len() == self.capacity && fitness >= self.entries[self.entries.len() - 1].fitness {
            return false;
        }
        let at = self.entries.partition_point(|e| e.fitness <= fitness);
        self.entries.insert(at, PoolEntry { position: candidate.to_vec(), fitness });
        self.entries.truncate(self.capacity);
        true
    }

    /// Entry with minimum fitness.
    pub fn best(&self) -> Option<&PoolEntry> {
        self.entries.first()
    }
}
