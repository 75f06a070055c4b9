//! Fixed-width integer fields in bit strings, most significant bit first.

use bitvec::prelude::*;

pub fn push_uint(bits: &mut BitVec, value: u64, width: u32) {
    debug_assert!(width == 64 || value < 1u64 << width, "{value} does not fit in {width} bits");
    for i in (0..width).rev() {
        bits.push(value >> i & 1 == 1);
    }
}

pub fn read_uint(bits: &BitSlice, pos: &mut usize, width: u32) -> u64 {
    let mut v = 0u64;
    for _ in 0..width {
        v = v << 1 | u64::from(bits[*pos]);
        *pos += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut b = BitVec::new();
        push_uint(&mut b, 5, 3);
        push_uint(&mut b, 0, 1);
        push_uint(&mut b, 1023, 10);
        assert_eq!(b.len(), 14);
        let mut pos = 0;
        assert_eq!(read_uint(&b, &mut pos, 3), 5);
        assert_eq!(read_uint(&b, &mut pos, 1), 0);
        assert_eq!(read_uint(&b, &mut pos, 10), 1023);
        assert_eq!(pos, 14);
    }
}
