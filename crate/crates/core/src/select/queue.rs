use std::collections::VecDeque;

use crate::rng::IpidRng;
use crate::{Ipid, IPID_SPACE};

/// FIFO of the last `k` IPIDs with a 2^16-bit membership bitmap.
#[derive(Debug, Clone)]
pub struct SearchableQueue {
    k: usize,
    avoid_zero: bool,
    fifo: VecDeque<u16>,
    members: Box<[u64]>,
}

impl SearchableQueue {
    /// # Panics
    /// If `k` leaves no IPID available to draw.
    pub fn new(k: usize, avoid_zero: bool) -> Self {
        let usable = IPID_SPACE - usize::from(avoid_zero);
        assert!(k < usable, "k = {k} leaves no IPID to draw");
        SearchableQueue {
            k,
            avoid_zero,
            fifo: VecDeque::with_capacity(k),
            members: vec![0u64; IPID_SPACE / 64].into_boxed_slice(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    #[inline]
    pub fn contains(&self, v: u16) -> bool {
        self.members[usize::from(v >> 6)] & (1u64 << (v & 63)) != 0
    }

    #[inline]
    fn set(&mut self, v: u16, on: bool) {
        let word = &mut self.members[usize::from(v >> 6)];
        if on {
            *word |= 1u64 << (v & 63);
        } else {
            *word &= !(1u64 << (v & 63));
        }
    }

    pub fn next<R: IpidRng + ?Sized>(&mut self, rng: &mut R) -> Ipid {
        let v = loop {
            let v = rng.next_u16();
            if !(self.avoid_zero && v == 0) && !self.contains(v) {
                break v;
            }
        };
        if self.k == 0 {
            return Ipid(v);
        }
        if self.fifo.len() == self.k {
            let old = self.fifo.pop_front().expect("queue is full");
            self.set(old, false);
        }
        self.fifo.push_back(v);
        self.set(v, true);
        Ipid(v)
    }

    /// Bitmap bit `i` is set iff `i` is queued.
    pub fn is_consistent(&self) -> bool {
        let popcount: u32 = self.members.iter().map(|w| w.count_ones()).sum();
        popcount as usize == self.fifo.len()
            && self.fifo.len() <= self.k
            && self.fifo.iter().all(|&v| self.contains(v))
    }
}
