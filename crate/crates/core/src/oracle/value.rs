use std::fmt;

use crate::bits::{sign_extend, BitVec};
use crate::lang::types::Type;

/// A typed bit pattern. Scalars hold exactly their width; aggregates hold
/// their byte image, little-endian, including any padding bytes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConcreteValue {
    pub ty: Type,
    pub bits: BitVec,
}

impl ConcreteValue {
    pub fn scalar(ty: Type, v: u64) -> Self {
        let w = ty.value_bits();
        ConcreteValue {
            ty,
            bits: BitVec::from_u64(w, v),
        }
    }

    pub fn from_bytes(ty: Type, bytes: &[u8]) -> Self {
        ConcreteValue {
            ty,
            bits: BitVec::from_bytes(bytes),
        }
    }

    pub fn to_u64(&self) -> u64 {
        self.bits.to_u64()
    }

    /// Value as a signed integer when the type is signed.
    pub fn to_i128(&self) -> i128 {
        match &self.ty {
            Type::Int(i) if i.signed => sign_extend(self.bits.to_u64(), i.width) as i128,
            _ => self.bits.to_u64() as i128,
        }
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.bits.bytes()
    }

    pub fn width(&self) -> u32 {
        self.bits.width()
    }
}

impl fmt::Display for ConcreteValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ty.is_scalar() {
            write!(f, "{}", self.to_i128())
        } else {
            write!(f, "{{")?;
            for (i, b) in self.bytes().iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:#04x}", b)?;
            }
            write!(f, "}}")
        }
    }
}

impl fmt::Debug for ConcreteValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self, self.ty)
    }
}

/// Observation tuple of one run.
pub type Observation = Vec<ConcreteValue>;

pub fn format_tuple(vals: &[ConcreteValue]) -> String {
    let parts: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_display() {
        let v = ConcreteValue::scalar(Type::int(true, 8), 0xff);
        assert_eq!(v.to_string(), "-1");
        let u = ConcreteValue::scalar(Type::int(false, 32), 2588279408);
        assert_eq!(u.to_string(), "2588279408");
        let b = ConcreteValue::scalar(Type::Bool, 1);
        assert_eq!(b.width(), 1);
    }
}
