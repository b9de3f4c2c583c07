//! Per-destination counters with Windows-style purge sequences.
//!
//! The table is checked at most once per purge interval. A check purges when
//! the table has grown past its threshold or too many counters were added
//! since the previous check. Staleness depends on table size: between one and
//! two thresholds, counters idle longer than the stale timeout are stale;
//! beyond twice the threshold every counter is stale. A purge removes at most
//! `max(batch_floor, added_since_check)` counters, oldest first.

use std::collections::HashMap;
use std::net::Ipv4Addr;

use crate::clock::ticks_since;
use crate::rng::IpidRng;
use crate::Ipid;

/// Purge parameters, with durations already converted to ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PurgePolicy {
    pub threshold: usize,
    pub stale_timeout_ticks: u32,
    pub interval_ticks: u32,
    pub batch_floor: usize,
    pub add_check_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DestinationEntry {
    pub counter: u16,
    pub last_access: u32,
}

/// Outcome of one purge check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PurgeReport {
    pub size_before: usize,
    pub added_since_check: usize,
    pub removed: usize,
    pub size_after: usize,
}

#[derive(Debug, Clone)]
pub struct DestinationTable {
    entries: HashMap<(Ipv4Addr, Ipv4Addr), DestinationEntry>,
    policy: PurgePolicy,
    last_check: u32,
    added_since_check: usize,
    last_purge: Option<PurgeReport>,
}

impl DestinationTable {
    pub fn new(policy: PurgePolicy, now: u32) -> Self {
        DestinationTable {
            entries: HashMap::new(),
            policy,
            last_check: now,
            added_since_check: 0,
            last_purge: None,
        }
    }

    pub fn policy(&self) -> &PurgePolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, src: Ipv4Addr, dst: Ipv4Addr) -> Option<DestinationEntry> {
        self.entries.get(&(src, dst)).copied()
    }

    pub fn added_since_check(&self) -> usize {
        self.added_since_check
    }

    /// The most recent purge check that actually ran a purge.
    pub fn last_purge(&self) -> Option<PurgeReport> {
        self.last_purge
    }

    /// Assigns the next IPID for `(src, dst)` at tick `now`, running a purge
    /// check first when the interval has elapsed. New or re-inserted
    /// destinations start from a random counter.
    pub fn next<R: IpidRng + ?Sized>(
        &mut self,
        src: Ipv4Addr,
        dst: Ipv4Addr,
        now: u32,
        rng: &mut R,
    ) -> Ipid {
        if ticks_since(now, self.last_check) >= self.policy.interval_ticks {
            self.check(now);
        }
        let counter = match self.entries.get_mut(&(src, dst)) {
            Some(e) => {
                e.counter = e.counter.wrapping_add(1);
                e.last_access = now;
                e.counter
            }
            None => {
                let counter = rng.next_u16();
                self.entries.insert(
                    (src, dst),
                    DestinationEntry {
                        counter,
                        last_access: now,
                    },
                );
                self.added_since_check += 1;
                counter
            }
        };
        Ipid(counter)
    }

    /// Runs a purge check at `now` regardless of the interval.
    pub fn check(&mut self, now: u32) -> Option<PurgeReport> {
        self.last_check = now;
        let added = std::mem::take(&mut self.added_since_check);
        let size = self.entries.len();
        if size <= self.policy.threshold && added <= self.policy.add_check_limit {
            return None;
        }
        let budget = self.policy.batch_floor.max(added);
        let removed = self.purge(now, budget);
        let report = PurgeReport {
            size_before: size,
            added_since_check: added,
            removed,
            size_after: self.entries.len(),
        };
        self.last_purge = Some(report);
        Some(report)
    }

    fn purge(&mut self, now: u32, budget: usize) -> usize {
        let all_stale = self.entries.len() > 2 * self.policy.threshold;
        let timeout = self.policy.stale_timeout_ticks;
        // (age, key): oldest first, ties broken by address so the choice does
        // not depend on hash iteration order.
        let mut stale: Vec<(u32, (Ipv4Addr, Ipv4Addr))> = self
            .entries
            .iter()
            .map(|(k, e)| (ticks_since(now, e.last_access), *k))
            .filter(|&(age, _)| all_stale || age > timeout)
            .collect();
        if stale.len() > budget {
            stale.select_nth_unstable_by(budget, |a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            stale.truncate(budget);
        }
        for (_, key) in &stale {
            self.entries.remove(key);
        }
        stale.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::secure_rng;

    fn policy(threshold: usize) -> PurgePolicy {
        PurgePolicy {
            threshold,
            stale_timeout_ticks: 60 * 300,
            interval_ticks: 150,
            batch_floor: 1000,
            add_check_limit: 5000,
        }
    }

    fn addr(i: u32) -> Ipv4Addr {
        Ipv4Addr::from(0x0a00_0000 + i)
    }

    const SRC: Ipv4Addr = Ipv4Addr::new(192, 0, 2, 1);

    #[test]
    fn repeat_destination_increments() {
        let mut rng = secure_rng(3, 0);
        let mut t = DestinationTable::new(policy(16), 0);
        let a = t.next(SRC, addr(1), 0, &mut rng);
        let b = t.next(SRC, addr(1), 1, &mut rng);
        assert_eq!(b.distance_from(a), 1);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn oversize_table_is_fully_stale() {
        let threshold = 1000;
        let mut rng = secure_rng(4, 0);
        let mut t = DestinationTable::new(policy(threshold), 0);
        for i in 0..(2 * threshold as u32 + 1) {
            t.next(SRC, addr(i), 10, &mut rng);
        }
        assert_eq!(t.len(), 2 * threshold + 1);
        t.next(SRC, addr(999_999), 10 + 150, &mut rng);
        let p = t.last_purge().expect("purge ran");
        assert_eq!(p.size_before, 2 * threshold + 1);
        assert_eq!(p.added_since_check, 2 * threshold + 1);
        // budget max(1000, 2001) covers the whole table
        assert_eq!(p.removed, 2 * threshold + 1);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn idle_entries_expire_between_one_and_two_thresholds() {
        let threshold = 100;
        let mut rng = secure_rng(5, 0);
        let mut t = DestinationTable::new(policy(threshold), 0);
        // one entry last touched at tick 0
        t.next(SRC, addr(0), 0, &mut rng);
        let later = 61 * 300;
        for i in 1..150 {
            t.next(SRC, addr(i), later - 10, &mut rng);
        }
        // force the interval to have elapsed without an intermediate check
        let mut t2 = t.clone();
        t2.check(later);
        assert!(t2.get(SRC, addr(0)).is_none(), "61 s idle entry removed");
        assert_eq!(t2.len(), 149);
        // the same entry survives when only 59 s have passed
        let mut t3 = t.clone();
        t3.check(59 * 300);
        assert!(t3.get(SRC, addr(0)).is_some());
    }

    #[test]
    fn purge_budget_caps_removals() {
        let threshold = 1000;
        let mut rng = secure_rng(6, 0);
        let mut t = DestinationTable::new(policy(threshold), 0);
        for i in 0..1500 {
            t.next(SRC, addr(i), 0, &mut rng);
        }
        // between one and two thresholds, nothing has timed out yet
        assert_eq!(t.check(5).map(|p| p.removed), Some(0));
        for i in 1500..2100 {
            t.next(SRC, addr(i), 10, &mut rng);
        }
        // 2100 > 2 * threshold: all stale, but only max(1000, 600) may go
        let p = t.check(20).unwrap();
        assert_eq!(p.removed, 1000);
        assert_eq!(p.size_after, 1100);
        assert_eq!(t.len(), 1100);
        // oldest first: every counter touched at tick 10 survives
        assert!((1500..2100).all(|i| t.get(SRC, addr(i)).is_some()));
    }
}
