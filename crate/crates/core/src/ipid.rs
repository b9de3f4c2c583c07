use std::fmt;
use std::net::Ipv4Addr;

/// Number of distinct IPID values.
pub const IPID_SPACE: usize = 1 << 16;

/// A 16-bit IPv4 identification value. Arithmetic wraps modulo 2^16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Ipid(pub u16);

impl Ipid {
    pub const ZERO: Ipid = Ipid(0);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn wrapping_add(self, inc: u16) -> Ipid {
        Ipid(self.0.wrapping_add(inc))
    }

    /// Forward distance from `earlier` to `self`, modulo 2^16.
    #[inline]
    pub fn distance_from(self, earlier: Ipid) -> u16 {
        self.0.wrapping_sub(earlier.0)
    }
}

impl From<u16> for Ipid {
    fn from(v: u16) -> Self {
        Ipid(v)
    }
}

impl fmt::Display for Ipid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub const PROTO_ICMP: u8 = 1;
pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowKeyError {
    #[error("protocol {0} carries ports but none were given")]
    MissingPorts(u8),
    #[error("protocol {0} does not carry ports")]
    UnexpectedPorts(u8),
}

/// Flow identity used to route IPID requests to counters and buckets.
///
/// Ports are present exactly when the protocol is TCP or UDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    src: Ipv4Addr,
    dst: Ipv4Addr,
    protocol: u8,
    ports: Option<(u16, u16)>,
}

impl FlowKey {
    pub fn new(
        src: Ipv4Addr,
        dst: Ipv4Addr,
        protocol: u8,
        ports: Option<(u16, u16)>,
    ) -> Result<Self, FlowKeyError> {
        match (carries_ports(protocol), ports) {
            (true, None) => Err(FlowKeyError::MissingPorts(protocol)),
            (false, Some(_)) => Err(FlowKeyError::UnexpectedPorts(protocol)),
            _ => Ok(FlowKey {
                src,
                dst,
                protocol,
                ports,
            }),
        }
    }

    pub fn tcp(src: Ipv4Addr, sport: u16, dst: Ipv4Addr, dport: u16) -> Self {
        FlowKey {
            src,
            dst,
            protocol: PROTO_TCP,
            ports: Some((sport, dport)),
        }
    }

    pub fn udp(src: Ipv4Addr, sport: u16, dst: Ipv4Addr, dport: u16) -> Self {
        FlowKey {
            src,
            dst,
            protocol: PROTO_UDP,
            ports: Some((sport, dport)),
        }
    }

    /// A flow for a protocol without ports (ICMP, GRE, ...).
    ///
    /// # Panics
    /// If `protocol` is TCP or UDP.
    pub fn portless(src: Ipv4Addr, dst: Ipv4Addr, protocol: u8) -> Self {
        assert!(
            !carries_ports(protocol),
            "protocol {protocol} carries ports"
        );
        FlowKey {
            src,
            dst,
            protocol,
            ports: None,
        }
    }

    pub fn src(&self) -> Ipv4Addr {
        self.src
    }

    pub fn dst(&self) -> Ipv4Addr {
        self.dst
    }

    pub fn protocol(&self) -> u8 {
        self.protocol
    }

    pub fn ports(&self) -> Option<(u16, u16)> {
        self.ports
    }

    /// A packet-specific 64-bit salt derived from the flow fields.
    pub fn salt(&self) -> u64 {
        let (sp, dp) = self.ports.unwrap_or((0, 0));
        let addrs = (u64::from(u32::from(self.src)) << 32) | u64::from(u32::from(self.dst));
        let rest = (u64::from(self.protocol) << 32) | (u64::from(sp) << 16) | u64::from(dp);
        addrs ^ rest.rotate_left(17)
    }
}

pub(crate) fn carries_ports(protocol: u8) -> bool {
    protocol == PROTO_TCP || protocol == PROTO_UDP
}
