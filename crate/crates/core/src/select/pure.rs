use crate::rng::IpidRng;
use crate::Ipid;

/// XOR of the four 16-bit words of `salt`.
#[inline]
pub fn fold_salt(salt: u64) -> u16 {
    (salt ^ (salt >> 16) ^ (salt >> 32) ^ (salt >> 48)) as u16
}

/// Uniform draw XOR-ed with the folded salt; redrawn while it is zero and
/// zero is avoided.
#[inline]
pub fn next_pure<R: IpidRng + ?Sized>(rng: &mut R, salt: u64, avoid_zero: bool) -> Ipid {
    let s = fold_salt(salt);
    loop {
        let v = rng.next_u16() ^ s;
        if !(avoid_zero && v == 0) {
            return Ipid(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ScriptedRng;

    #[test]
    fn fold_xors_words() {
        assert_eq!(fold_salt(0x0001_0002_0004_0008), 0x000F);
        assert_eq!(fold_salt(0xFFFF_FFFF_0000_0000), 0);
    }

    #[test]
    fn salt_and_redraw() {
        let mut rng = ScriptedRng::new([0x00F0, 0x1234]);
        // 0x00F0 ^ 0x00F0 = 0 is redrawn
        assert_eq!(next_pure(&mut rng, 0x00F0, true), Ipid(0x1234 ^ 0x00F0));
    }
}
