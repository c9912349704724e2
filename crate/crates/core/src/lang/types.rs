use std::fmt;
use std::sync::Arc;

use crate::env::padding_bytes;

/// Target data model. `long` and `unsigned long` follow the pointer width;
/// every other surface type has a fixed width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Arch {
    #[default]
    X32,
    X64,
}

impl Arch {
    pub fn bits(self) -> u32 {
        match self {
            Arch::X32 => 32,
            Arch::X64 => 64,
        }
    }

    /// Alignment used for trailing record padding.
    pub fn align(self) -> u64 {
        match self {
            Arch::X32 => 4,
            Arch::X64 => 8,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Arch> {
        match bits {
            32 => Some(Arch::X32),
            64 => Some(Arch::X64),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntType {
    pub signed: bool,
    pub width: u32,
}

impl IntType {
    pub const INT: IntType = IntType {
        signed: true,
        width: 32,
    };
    pub const SIZE: IntType = IntType {
        signed: false,
        width: 32,
    };
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldLayout {
    pub name: String,
    pub ty: Type,
    pub offset: u64,
}

/// Record layout. Fields are laid out contiguously in declaration order;
/// alignment padding is only ever added after the last field of a whole
/// object (see [`Type::object_bytes`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RecordLayout {
    pub name: String,
    pub fields: Vec<FieldLayout>,
    pub size: u64,
}

impl RecordLayout {
    pub fn field(&self, name: &str) -> Option<&FieldLayout> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Void,
    Bool,
    Int(IntType),
    Array(Box<Type>, u64),
    Record(Arc<RecordLayout>),
}

impl Type {
    pub const INT: Type = Type::Int(IntType::INT);

    pub fn int(signed: bool, width: u32) -> Type {
        Type::Int(IntType { signed, width })
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Bool | Type::Int(_))
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Type::Array(..) | Type::Record(_))
    }

    pub fn as_int(&self) -> Option<IntType> {
        match self {
            Type::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, Type::Int(IntType { signed: true, .. }))
    }

    /// `sizeof`: packed size in bytes.
    pub fn size_bytes(&self) -> u64 {
        match self {
            Type::Void => 0,
            Type::Bool => 1,
            Type::Int(i) => (i.width / 8) as u64,
            Type::Array(e, n) => e.size_bytes() * n,
            Type::Record(r) => r.size,
        }
    }

    /// Width of a value of this type in bits. Scalars use their exact width
    /// (a `_Bool` is a single bit); aggregates use their packed byte image.
    pub fn value_bits(&self) -> u32 {
        match self {
            Type::Void => 0,
            Type::Bool => 1,
            Type::Int(i) => i.width,
            _ => (self.size_bytes() * 8) as u32,
        }
    }

    /// Bytes occupied by a whole object of this type: records get trailing
    /// padding up to the target alignment.
    pub fn object_bytes(&self, arch: Arch) -> u64 {
        match self {
            Type::Record(r) => r.size + padding_bytes(r.size, arch.align()),
            _ => self.size_bytes(),
        }
    }

    /// Storage bits of a whole object.
    pub fn object_bits(&self, arch: Arch) -> u32 {
        match self {
            Type::Bool => 1,
            Type::Int(i) => i.width,
            _ => (self.object_bytes(arch) * 8) as u32,
        }
    }

    /// Scalar width for the purpose of the allowed-width invariant.
    pub fn scalar_width(&self) -> Option<u32> {
        match self {
            Type::Bool => Some(1),
            Type::Int(i) => Some(i.width),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Void => write!(f, "void"),
            Type::Bool => write!(f, "bool"),
            Type::Int(i) => write!(f, "{} {}", if i.signed { "signed" } else { "unsigned" }, i.width),
            Type::Array(e, n) => write!(f, "{}[{}]", e, n),
            Type::Record(r) => write!(f, "struct {}", r.name),
        }
    }
}

/// Integer promotion: anything narrower than `int` (including `_Bool`)
/// becomes `int`.
pub fn promote(t: &Type) -> Type {
    match t {
        Type::Bool => Type::INT,
        Type::Int(i) if i.width < 32 => Type::INT,
        other => other.clone(),
    }
}

/// Usual arithmetic conversions on two scalar types: promote, then widen to
/// the larger rank; at equal rank unsigned wins.
pub fn common_type(a: &Type, b: &Type) -> Type {
    let (pa, pb) = (promote(a), promote(b));
    let (ia, ib) = (pa.as_int().unwrap(), pb.as_int().unwrap());
    if ia == ib {
        return pa;
    }
    if ia.signed == ib.signed {
        return Type::Int(if ia.width >= ib.width { ia } else { ib });
    }
    let (u, s) = if ia.signed { (ib, ia) } else { (ia, ib) };
    if u.width >= s.width {
        Type::Int(u)
    } else {
        Type::Int(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        let s64 = Type::int(true, 64);
        let u32t = Type::int(false, 32);
        assert_eq!(common_type(&s64, &u32t), s64);
        assert_eq!(common_type(&Type::INT, &u32t), u32t);
        assert_eq!(common_type(&Type::int(false, 8), &Type::int(false, 16)), Type::INT);
        assert_eq!(common_type(&Type::int(false, 64), &s64), Type::int(false, 64));
        assert_eq!(common_type(&Type::Bool, &Type::Bool), Type::INT);
    }

    #[test]
    fn record_object_padding() {
        let r = Arc::new(RecordLayout {
            name: "s".into(),
            fields: vec![],
            size: 20,
        });
        let t = Type::Record(r);
        assert_eq!(t.size_bytes(), 20);
        assert_eq!(t.object_bytes(Arch::X64), 24);
        assert_eq!(t.object_bytes(Arch::X32), 20);
    }
}
