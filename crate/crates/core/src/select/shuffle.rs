use crate::rng::IpidRng;
use crate::{Ipid, IPID_SPACE};

/// Iterated Knuth shuffle over all 2^16 IPIDs.
///
/// Each request returns the value at the head and swaps it into a uniformly
/// chosen slot among the `2^16 - k` positions ending at the head, so it cannot
/// come up again within the next `k` steps of the head. A skipped zero takes a
/// step without producing an output.
#[derive(Debug, Clone)]
pub struct ShufflePermutation {
    perm: Box<[u16]>,
    head: u16,
    k: u32,
    avoid_zero: bool,
}

impl ShufflePermutation {
    /// Builds the initial permutation with a standard Fisher-Yates shuffle.
    ///
    /// # Panics
    /// If `k >= 2^16`.
    pub fn new<R: IpidRng + ?Sized>(k: u32, avoid_zero: bool, rng: &mut R) -> Self {
        assert!((k as usize) < IPID_SPACE, "k = {k} must be below 2^16");
        let mut perm: Box<[u16]> = (0..=u16::MAX).collect();
        for i in (1..IPID_SPACE).rev() {
            let j = rng.uniform_inclusive(0, i as u64) as usize;
            perm.swap(i, j);
        }
        ShufflePermutation {
            perm,
            head: 0,
            k,
            avoid_zero,
        }
    }

    pub fn reserved(&self) -> u32 {
        self.k
    }

    pub fn head(&self) -> u16 {
        self.head
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.perm
    }

    pub fn next<R: IpidRng + ?Sized>(&mut self, rng: &mut R) -> Ipid {
        let span = (IPID_SPACE as u64) - u64::from(self.k) - 1;
        loop {
            let i = usize::from(self.head);
            let v = self.perm[i];
            let back = rng.uniform_inclusive(0, span) as u16;
            let j = usize::from(self.head.wrapping_sub(back));
            self.perm.swap(i, j);
            self.head = self.head.wrapping_add(1);
            if !(self.avoid_zero && v == 0) {
                return Ipid(v);
            }
        }
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; IPID_SPACE];
        self.perm.len() == IPID_SPACE
            && self
                .perm
                .iter()
                .all(|&v| !std::mem::replace(&mut seen[usize::from(v)], true))
    }
}
