use crate::rng::IpidRng;
use crate::Ipid;

/// Counter owned by one connection. The owner guarantees a single requester
/// at a time, so no synchronization is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectionState {
    counter: u16,
}

impl ConnectionState {
    /// Starts the counter at a uniformly random value, as done at connection
    /// establishment.
    pub fn new<R: IpidRng + ?Sized>(rng: &mut R) -> Self {
        ConnectionState {
            counter: rng.next_u16(),
        }
    }

    pub fn with_value(counter: u16) -> Self {
        ConnectionState { counter }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Ipid {
        self.counter = self.counter.wrapping_add(1);
        Ipid(self.counter)
    }

    pub fn counter(&self) -> u16 {
        self.counter
    }
}
