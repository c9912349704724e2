//! Environment models for library and kernel functions.
//!
//! Each builtin's behaviour is written once against [`ByteDomain`] and then
//! evaluated both by the concrete interpreter (bytes are `u8`) and by the
//! SSA builder (bytes are 8-bit symbolic expressions).

use std::fmt;

/// Registered builtins. `input()` is not listed here because it is an
/// expression form of its own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Memcmp,
    Memset,
    Memcpy,
    CopyToUser,
}

impl Builtin {
    pub fn lookup(name: &str) -> Option<Builtin> {
        REGISTRY.iter().find(|s| s.name == name).and_then(|s| s.builtin)
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Memcmp => "memcmp",
            Builtin::Memset => "memset",
            Builtin::Memcpy => "memcpy",
            Builtin::CopyToUser => "copy_to_user",
        }
    }

    /// Whether each argument is a memory region (`true`) or a value.
    pub fn arg_is_region(self) -> &'static [bool] {
        match self {
            Builtin::Memcmp => &[true, true, false],
            Builtin::Memset => &[true, false, false],
            Builtin::Memcpy => &[true, true, false],
            Builtin::CopyToUser => &[true, true, false],
        }
    }

    /// Index of the constant length argument.
    pub fn length_arg(self) -> usize {
        2
    }

    pub fn returns_value(self) -> bool {
        matches!(self, Builtin::Memcmp | Builtin::CopyToUser)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct BuiltinSpec {
    pub name: &'static str,
    pub signature: &'static str,
    pub semantics: &'static str,
    pub nondet: &'static str,
    pub builtin: Option<Builtin>,
}

pub const REGISTRY: &[BuiltinSpec] = &[
    BuiltinSpec {
        name: "input",
        signature: "T input()",
        semantics: "nondeterministic value of the destination type",
        nondet: "whole result",
        builtin: None,
    },
    BuiltinSpec {
        name: "memcmp",
        signature: "int memcmp(region a, region b, const n)",
        semantics: "0 if the first n bytes are equal, -1 otherwise",
        nondet: "none",
        builtin: Some(Builtin::Memcmp),
    },
    BuiltinSpec {
        name: "memset",
        signature: "void memset(region dst, int c, const n)",
        semantics: "dst[0..n) = (unsigned char)c",
        nondet: "none",
        builtin: Some(Builtin::Memset),
    },
    BuiltinSpec {
        name: "memcpy",
        signature: "void memcpy(region dst, region src, const n)",
        semantics: "dst[0..n) = src[0..n), padding bytes copied verbatim; overlap rejected",
        nondet: "none",
        builtin: Some(Builtin::Memcpy),
    },
    BuiltinSpec {
        name: "copy_to_user",
        signature: "int copy_to_user(region dst, region src, const n)",
        semantics: "dst[0..n) = src[0..n); dst[n..n+pad) = nondet where pad = padding_bytes(n, arch align); returns 0",
        nondet: "trailing padding bytes",
        builtin: Some(Builtin::CopyToUser),
    },
];

/// Trailing padding needed to bring `size` up to a multiple of `align`.
pub fn padding_bytes(size: u64, align: u64) -> u64 {
    let pad = align - size % align;
    if pad == align {
        0
    } else {
        pad
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BuiltinError {
    #[error("{builtin}: region of {have} bytes is shorter than {need}")]
    RegionTooShort { builtin: Builtin, have: u64, need: u64 },
    #[error("{0}: overlapping regions")]
    Overlap(Builtin),
}

/// Operations a builtin needs from a byte representation.
pub trait ByteDomain {
    type Byte: Clone;
    /// A scalar of the builtin's result type (`int`).
    type Word: Clone;
    type Cond: Clone;

    fn byte_eq(&mut self, a: &Self::Byte, b: &Self::Byte) -> Self::Cond;
    fn all(&mut self, conds: Vec<Self::Cond>) -> Self::Cond;
    fn select_int(&mut self, c: Self::Cond, then: i64, els: i64) -> Self::Word;
    fn int_const(&mut self, v: i64) -> Self::Word;
    fn low_byte(&mut self, w: &Self::Word) -> Self::Byte;
    /// Fresh nondeterministic byte; `index` distinguishes bytes of one site.
    fn fresh_byte(&mut self, index: u32) -> Self::Byte;
}

pub fn memcmp<D: ByteDomain>(d: &mut D, a: &[D::Byte], b: &[D::Byte], n: u64) -> Result<D::Word, BuiltinError> {
    check_len(Builtin::Memcmp, a.len(), n)?;
    check_len(Builtin::Memcmp, b.len(), n)?;
    let eqs = (0..n as usize).map(|i| d.byte_eq(&a[i], &b[i])).collect();
    let all = d.all(eqs);
    Ok(d.select_int(all, 0, -1))
}

pub fn memset<D: ByteDomain>(d: &mut D, dst: &mut [D::Byte], value: &D::Word, n: u64) -> Result<(), BuiltinError> {
    check_len(Builtin::Memset, dst.len(), n)?;
    let b = d.low_byte(value);
    for slot in dst.iter_mut().take(n as usize) {
        *slot = b.clone();
    }
    Ok(())
}

pub fn memcpy<D: ByteDomain>(dst: &mut [D::Byte], src: &[D::Byte], n: u64) -> Result<(), BuiltinError> {
    check_len(Builtin::Memcpy, dst.len(), n)?;
    check_len(Builtin::Memcpy, src.len(), n)?;
    dst[..n as usize].clone_from_slice(&src[..n as usize]);
    Ok(())
}

/// `dst` must cover `n` plus the trailing padding of an `n`-byte object.
pub fn copy_to_user<D: ByteDomain>(
    d: &mut D,
    dst: &mut [D::Byte],
    src: &[D::Byte],
    n: u64,
    align: u64,
) -> Result<D::Word, BuiltinError> {
    let pad = padding_bytes(n, align);
    check_len(Builtin::CopyToUser, dst.len(), n + pad)?;
    check_len(Builtin::CopyToUser, src.len(), n)?;
    dst[..n as usize].clone_from_slice(&src[..n as usize]);
    for i in 0..pad {
        dst[(n + i) as usize] = d.fresh_byte(i as u32);
    }
    Ok(d.int_const(0))
}

fn check_len(builtin: Builtin, have: usize, need: u64) -> Result<(), BuiltinError> {
    if (have as u64) < need {
        Err(BuiltinError::RegionTooShort {
            builtin,
            have: have as u64,
            need,
        })
    } else {
        Ok(())
    }
}

/// Concrete byte domain; fresh bytes come from a closure.
pub struct ConcreteBytes<F: FnMut(u32) -> u8> {
    pub fresh: F,
}

impl<F: FnMut(u32) -> u8> ByteDomain for ConcreteBytes<F> {
    type Byte = u8;
    type Word = i64;
    type Cond = bool;

    fn byte_eq(&mut self, a: &u8, b: &u8) -> bool {
        a == b
    }
    fn all(&mut self, conds: Vec<bool>) -> bool {
        conds.into_iter().all(|c| c)
    }
    fn select_int(&mut self, c: bool, then: i64, els: i64) -> i64 {
        if c {
            then
        } else {
            els
        }
    }
    fn int_const(&mut self, v: i64) -> i64 {
        v
    }
    fn low_byte(&mut self, w: &i64) -> u8 {
        *w as u8
    }
    fn fresh_byte(&mut self, index: u32) -> u8 {
        (self.fresh)(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dom() -> ConcreteBytes<impl FnMut(u32) -> u8> {
        ConcreteBytes {
            fresh: |i| 0xa0 + i as u8,
        }
    }

    #[test]
    fn padding_examples() {
        assert_eq!(padding_bytes(20, 8), 4);
        assert_eq!(padding_bytes(12, 4), 0);
        assert_eq!(padding_bytes(24, 8), 0);
        assert_eq!(padding_bytes(14, 4), 2);
    }

    #[test]
    fn memcmp_simplified_model() {
        let a = [1u8, 2, 3, 4, 5, 6, 7, 8];
        let mut b = a;
        assert_eq!(memcmp(&mut dom(), &a, &b, 8).unwrap(), 0);
        b[3] = 0;
        assert_eq!(memcmp(&mut dom(), &a, &b, 8).unwrap(), -1);
        assert_eq!(memcmp(&mut dom(), &a, &b, 0).unwrap(), 0);
        assert_eq!(memcmp(&mut dom(), &a, &b, 3).unwrap(), 0);
        assert!(memcmp(&mut dom(), &a[..2], &b, 3).is_err());
    }

    #[test]
    fn memset_and_memcpy() {
        let mut buf = [7u8; 8];
        memset(&mut dom(), &mut buf, &0, 8).unwrap();
        assert_eq!(buf, [0; 8]);
        memset(&mut dom(), &mut buf, &0x1ff, 0).unwrap();
        assert_eq!(buf, [0; 8]);
        let src = [9u8, 8, 7];
        memcpy::<ConcreteBytes<fn(u32) -> u8>>(&mut buf, &src, 3).unwrap();
        assert_eq!(&buf[..4], &[9, 8, 7, 0]);
    }

    #[test]
    fn copy_to_user_appends_padding() {
        let src = [1u8; 20];
        let mut dst = [0u8; 24];
        assert_eq!(copy_to_user(&mut dom(), &mut dst, &src, 20, 8).unwrap(), 0);
        assert_eq!(&dst[20..], &[0xa0, 0xa1, 0xa2, 0xa3]);
        let mut dst32 = [0u8; 12];
        copy_to_user(&mut dom(), &mut dst32, &src[..12], 12, 4).unwrap();
        assert_eq!(dst32, [1u8; 12]);
        let mut short = [0u8; 20];
        assert!(copy_to_user(&mut dom(), &mut short, &src, 20, 8).is_err());
    }

    proptest! {
        #[test]
        fn memcmp_reflexive(x in proptest::collection::vec(any::<u8>(), 0..32)) {
            let n = x.len() as u64;
            prop_assert_eq!(memcmp(&mut dom(), &x, &x, n).unwrap(), 0);
        }

        #[test]
        fn padding_in_range(size in 1u64..10_000, wide in any::<bool>()) {
            let align = if wide { 8 } else { 4 };
            let p = padding_bytes(size, align);
            prop_assert!(p < align);
            prop_assert_eq!((size + p) % align, 0);
        }

        #[test]
        fn memset_fills(c in any::<i64>(), n in 0u64..16) {
            let mut buf = vec![0x55u8; 16];
            memset(&mut dom(), &mut buf, &c, n).unwrap();
            prop_assert!(buf[..n as usize].iter().all(|b| *b == c as u8));
        }
    }
}
