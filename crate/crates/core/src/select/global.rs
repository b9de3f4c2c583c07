use std::sync::atomic::{AtomicU16, Ordering};

use crate::Ipid;

/// A single machine-wide counter shared by every requester.
#[derive(Debug, Default)]
pub struct GlobalCounter {
    counter: AtomicU16,
}

impl GlobalCounter {
    pub fn new(initial: u16) -> Self {
        GlobalCounter {
            counter: AtomicU16::new(initial),
        }
    }

    /// Fetch-and-add; returns the incremented value.
    #[inline]
    pub fn next(&self) -> Ipid {
        Ipid(self.counter.fetch_add(1, Ordering::Relaxed).wrapping_add(1))
    }

    pub fn current(&self) -> u16 {
        self.counter.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn returns_incremented_value() {
        let c = GlobalCounter::new(5);
        assert_eq!(c.next(), Ipid(6));
        assert_eq!(c.current(), 6);
        let c = GlobalCounter::new(0xFFFF);
        assert_eq!(c.next(), Ipid(0));
    }

    #[test]
    fn concurrent_requests_never_duplicate() {
        let c = GlobalCounter::new(0);
        let mut all: Vec<u16> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..8)
                .map(|_| s.spawn(|| (0..1000).map(|_| c.next().0).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        all.sort_unstable();
        let expected: Vec<u16> = (1..=8000).collect();
        assert_eq!(all, expected);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 8000);
        assert_eq!(c.current(), 8000);
    }
}
