use std::collections::VecDeque;

use super::MeterRecord;

/// Fixed-capacity record ring. When full, the oldest record is overwritten.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlashStore {
    capacity: usize,
    records: VecDeque<MeterRecord>,
    written: u64,
    overwrites: u64,
    gaps: Vec<i64>,
}

impl FlashStore {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "flash capacity must be positive");
        FlashStore {
            capacity,
            records: VecDeque::with_capacity(capacity),
            written: 0,
            overwrites: 0,
            gaps: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Slot the next record lands in.
    pub fn write_index(&self) -> usize {
        (self.written % self.capacity as u64) as usize
    }

    pub fn overwrites(&self) -> u64 {
        self.overwrites
    }

    /// Timestamps of readout slots that produced no record.
    pub fn gaps(&self) -> &[i64] {
        &self.gaps
    }

    pub(crate) fn flag_gap(&mut self, at: i64) {
        self.gaps.push(at);
    }

    pub fn store_record(&mut self, record: MeterRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
            self.overwrites += 1;
        }
        self.records.push_back(record);
        self.written += 1;
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &MeterRecord> {
        self.records.iter()
    }

    pub fn records(&self) -> Vec<MeterRecord> {
        self.records.iter().cloned().collect()
    }

    pub(crate) fn take_oldest(&mut self, count: usize) -> Vec<MeterRecord> {
        let n = count.min(self.records.len());
        self.records.drain(..n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: i64) -> MeterRecord {
        MeterRecord {
            timestamp: t,
            readings: vec![],
        }
    }

    #[test]
    fn ring_semantics() {
        let mut store = FlashStore::new(4);
        store.store_record(rec(0));
        assert_eq!(store.len(), 1);
        for t in 1..5 {
            store.store_record(rec(t));
        }
        assert_eq!(store.len(), 4);
        assert_eq!(store.overwrites(), 1);
        let ts: Vec<i64> = store.iter().map(|r| r.timestamp).collect();
        assert_eq!(ts, vec![1, 2, 3, 4]);
        assert_eq!(store.write_index(), 1);
    }

    proptest! {
        #[test]
        fn matches_naive_list(capacity in 1usize..20, n in 0i64..100) {
            let mut store = FlashStore::new(capacity);
            let mut naive = Vec::new();
            for t in 0..n {
                store.store_record(rec(t * 900));
                naive.push(rec(t * 900));
            }
            let keep = naive.len().saturating_sub(capacity);
            prop_assert_eq!(store.records(), naive[keep..].to_vec());
            prop_assert_eq!(store.overwrites(), keep as u64);
            let ts: Vec<i64> = store.iter().map(|r| r.timestamp).collect();
            prop_assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
