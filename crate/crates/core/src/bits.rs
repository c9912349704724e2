//! Fixed-width bit vectors and the scalar two's-complement operations shared
//! by the concrete interpreter and the SSA evaluator.
//!
//! Scalars are at most 64 bits wide and live in the low bits of a `u64`;
//! anything wider (records, arrays) is a [`BitVec`] whose byte `i` occupies
//! bits `8i..8i+8` (little-endian).

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    width: u32,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zero(width: u32) -> Self {
        BitVec {
            width,
            words: vec![0; words_for(width)],
        }
    }

    pub fn from_u64(width: u32, value: u64) -> Self {
        let mut bv = Self::zero(width);
        if width > 0 {
            bv.words[0] = value & mask(width.min(64));
        }
        bv
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut bv = Self::zero(bytes.len() as u32 * 8);
        for (i, b) in bytes.iter().enumerate() {
            bv.words[i / 8] |= (*b as u64) << ((i % 8) * 8);
        }
        bv
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bv = Self::zero(bits.len() as u32);
        for (i, b) in bits.iter().enumerate() {
            if *b {
                bv.words[i / 64] |= 1 << (i % 64);
            }
        }
        bv
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bit(&self, i: u32) -> bool {
        debug_assert!(i < self.width);
        (self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, i: u32, v: bool) {
        debug_assert!(i < self.width);
        let w = &mut self.words[(i / 64) as usize];
        if v {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    /// Low 64 bits.
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn bytes(&self) -> Vec<u8> {
        let n = self.width.div_ceil(8) as usize;
        (0..n).map(|i| (self.words[i / 8] >> ((i % 8) * 8)) as u8).collect()
    }

    pub fn extract(&self, lo: u32, width: u32) -> BitVec {
        debug_assert!(lo + width <= self.width);
        if width == 0 {
            return BitVec::zero(0);
        }
        if width <= 64 && lo.is_multiple_of(64) {
            let w = (lo / 64) as usize;
            let mut v = self.words[w];
            if width < 64 {
                v &= mask(width);
            }
            return BitVec::from_u64(width, v);
        }
        let mut out = BitVec::zero(width);
        for i in 0..width {
            if self.bit(lo + i) {
                out.set_bit(i, true);
            }
        }
        out
    }

    /// Concatenate, first part in the low bits.
    pub fn concat(parts: &[BitVec]) -> BitVec {
        let width = parts.iter().map(|p| p.width).sum();
        let mut out = BitVec::zero(width);
        let mut at = 0;
        for p in parts {
            for i in 0..p.width {
                if p.bit(i) {
                    out.set_bit(at + i, true);
                }
            }
            at += p.width;
        }
        out
    }

    pub fn overwrite(&mut self, lo: u32, src: &BitVec) {
        for i in 0..src.width {
            self.set_bit(lo + i, src.bit(i));
        }
    }

    pub fn to_bin_string(&self) -> String {
        (0..self.width)
            .rev()
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width <= 64 {
            write!(f, "{}'{:#x}", self.width, self.to_u64())
        } else {
            write!(f, "{}'[", self.width)?;
            for (i, b) in self.bytes().iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:02x}", b)?;
            }
            write!(f, "]")
        }
    }
}

fn words_for(width: u32) -> usize {
    (width as usize).div_ceil(64).max(1)
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub fn truncate(v: u64, width: u32) -> u64 {
    v & mask(width)
}

pub fn sign_extend(v: u64, width: u32) -> i64 {
    if width == 0 {
        return 0;
    }
    if width >= 64 {
        return v as i64;
    }
    let shift = 64 - width;
    ((v << shift) as i64) >> shift
}

pub fn msb(v: u64, width: u32) -> bool {
    width > 0 && (v >> (width - 1)) & 1 == 1
}

/// Word-level binary operators. Operands have equal width except for shifts,
/// whose amount operand is read as an unsigned number of its own width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordOp {
    Add,
    Sub,
    Mul,
    UDiv,
    URem,
    SDiv,
    SRem,
    And,
    Or,
    Xor,
    Shl,
    LShr,
    AShr,
    Eq,
    Ne,
    ULt,
    ULe,
    SLt,
    SLe,
}

impl WordOp {
    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            WordOp::Eq | WordOp::Ne | WordOp::ULt | WordOp::ULe | WordOp::SLt | WordOp::SLe
        )
    }

    pub fn is_shift(self) -> bool {
        matches!(self, WordOp::Shl | WordOp::LShr | WordOp::AShr)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            WordOp::Add => "add",
            WordOp::Sub => "sub",
            WordOp::Mul => "mul",
            WordOp::UDiv => "udiv",
            WordOp::URem => "urem",
            WordOp::SDiv => "sdiv",
            WordOp::SRem => "srem",
            WordOp::And => "and",
            WordOp::Or => "or",
            WordOp::Xor => "xor",
            WordOp::Shl => "shl",
            WordOp::LShr => "lshr",
            WordOp::AShr => "ashr",
            WordOp::Eq => "eq",
            WordOp::Ne => "ne",
            WordOp::ULt => "ult",
            WordOp::ULe => "ule",
            WordOp::SLt => "slt",
            WordOp::SLe => "sle",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<WordOp> {
        ALL_WORD_OPS.iter().copied().find(|op| op.mnemonic() == s)
    }
}

pub const ALL_WORD_OPS: [WordOp; 19] = [
    WordOp::Add,
    WordOp::Sub,
    WordOp::Mul,
    WordOp::UDiv,
    WordOp::URem,
    WordOp::SDiv,
    WordOp::SRem,
    WordOp::And,
    WordOp::Or,
    WordOp::Xor,
    WordOp::Shl,
    WordOp::LShr,
    WordOp::AShr,
    WordOp::Eq,
    WordOp::Ne,
    WordOp::ULt,
    WordOp::ULe,
    WordOp::SLt,
    WordOp::SLe,
];

/// Evaluate `op` on `width`-bit operands. Predicates return 0 or 1.
///
/// Division follows the SMT-LIB bit-vector conventions: unsigned division by
/// zero yields all ones, unsigned remainder by zero yields the dividend, and
/// signed division/remainder are built from the unsigned ones on magnitudes
/// (truncating toward zero; `MIN / -1` wraps to `MIN`).
pub fn eval_word_op(op: WordOp, a: u64, b: u64, width: u32, b_width: u32) -> u64 {
    let m = mask(width);
    let a = a & m;
    let bm = if op.is_shift() { b & mask(b_width) } else { b & m };
    let r = match op {
        WordOp::Add => a.wrapping_add(bm),
        WordOp::Sub => a.wrapping_sub(bm),
        WordOp::Mul => a.wrapping_mul(bm),
        WordOp::UDiv => udiv(a, bm, width),
        WordOp::URem => urem(a, bm),
        WordOp::SDiv => {
            let (na, nb) = (msb(a, width), msb(bm, width));
            let ua = if na { a.wrapping_neg() & m } else { a };
            let ub = if nb { bm.wrapping_neg() & m } else { bm };
            let q = udiv(ua, ub, width);
            if na != nb {
                q.wrapping_neg()
            } else {
                q
            }
        }
        WordOp::SRem => {
            let (na, nb) = (msb(a, width), msb(bm, width));
            let ua = if na { a.wrapping_neg() & m } else { a };
            let ub = if nb { bm.wrapping_neg() & m } else { bm };
            let r = urem(ua, ub);
            if na {
                r.wrapping_neg()
            } else {
                r
            }
        }
        WordOp::And => a & bm,
        WordOp::Or => a | bm,
        WordOp::Xor => a ^ bm,
        WordOp::Shl => {
            if bm >= width as u64 {
                0
            } else {
                a << bm
            }
        }
        WordOp::LShr => {
            if bm >= width as u64 {
                0
            } else {
                a >> bm
            }
        }
        WordOp::AShr => {
            let s = sign_extend(a, width);
            if bm >= width as u64 {
                if s < 0 {
                    u64::MAX
                } else {
                    0
                }
            } else {
                (s >> bm) as u64
            }
        }
        WordOp::Eq => (a == bm) as u64,
        WordOp::Ne => (a != bm) as u64,
        WordOp::ULt => (a < bm) as u64,
        WordOp::ULe => (a <= bm) as u64,
        WordOp::SLt => (sign_extend(a, width) < sign_extend(bm, width)) as u64,
        WordOp::SLe => (sign_extend(a, width) <= sign_extend(bm, width)) as u64,
    };
    if op.is_predicate() {
        r
    } else {
        r & m
    }
}

fn udiv(a: u64, b: u64, width: u32) -> u64 {
    a.checked_div(b).unwrap_or(mask(width))
}

fn urem(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        a % b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_round_trip_little_endian() {
        let bv = BitVec::from_bytes(&[0x34, 0x12, 0xff]);
        assert_eq!(bv.width(), 24);
        assert_eq!(bv.to_u64(), 0xff1234);
        assert_eq!(bv.bytes(), vec![0x34, 0x12, 0xff]);
        assert_eq!(bv.extract(8, 8).to_u64(), 0x12);
    }

    #[test]
    fn wide_concat_and_extract() {
        let a = BitVec::from_u64(64, u64::MAX);
        let b = BitVec::from_u64(8, 0x5a);
        let c = BitVec::concat(&[a, b]);
        assert_eq!(c.width(), 72);
        assert_eq!(c.extract(64, 8).to_u64(), 0x5a);
        assert_eq!(c.extract(60, 8).to_u64(), 0xaf);
    }

    #[test]
    fn signed_division_truncates_toward_zero() {
        let w = 32;
        let m7 = (-7i64) as u64 & mask(w);
        assert_eq!(sign_extend(eval_word_op(WordOp::SDiv, m7, 2, w, w), w), -3);
        assert_eq!(sign_extend(eval_word_op(WordOp::SRem, m7, 2, w, w), w), -1);
        assert_eq!(sign_extend(eval_word_op(WordOp::SRem, 7, (-2i64) as u64, w, w), w), 1);
        let min = 1u64 << 31;
        assert_eq!(eval_word_op(WordOp::SDiv, min, mask(w), w, w), min);
    }

    #[test]
    fn oversized_shifts_saturate() {
        assert_eq!(eval_word_op(WordOp::Shl, 1, 8, 8, 32), 0);
        assert_eq!(eval_word_op(WordOp::AShr, 0x80, 9, 8, 32), 0xff);
        assert_eq!(eval_word_op(WordOp::LShr, 0x80, 200, 8, 8), 0);
        assert_eq!(eval_word_op(WordOp::AShr, 0x80, 3, 8, 8), 0xf0);
    }

    #[test]
    fn unsigned_wraparound() {
        // 1024 - 1706688912 in 32 bits.
        let r = eval_word_op(WordOp::Sub, 1024, 1706688912, 32, 32);
        assert_eq!(r, 2588279408);
    }
}
