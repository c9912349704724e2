//! Mini-C frontend: lexer, parser, printer, type checker and harness.

pub mod ast;
pub mod harness;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod tast;
pub mod typecheck;
pub mod types;

use std::fmt;
use std::path::Path;

use ast::{IntBase, Sign, SourceUnit, Span, TypeName};

/// Type names every program may use without a typedef: (name, signed, base).
pub const BUILTIN_TYPE_ALIASES: &[(&str, bool, IntBase)] = &[
    ("size_t", false, IntBase::Int),
    ("loff_t", true, IntBase::LongLong),
    ("u_char", false, IntBase::Char),
    ("u_short", false, IntBase::Short),
    ("u_int", false, IntBase::Int),
    ("int8_t", true, IntBase::Char),
    ("int16_t", true, IntBase::Short),
    ("int32_t", true, IntBase::Int),
    ("int64_t", true, IntBase::LongLong),
    ("uint8_t", false, IntBase::Char),
    ("uint16_t", false, IntBase::Short),
    ("uint32_t", false, IntBase::Int),
    ("uint64_t", false, IntBase::LongLong),
    ("u8", false, IntBase::Char),
    ("u16", false, IntBase::Short),
    ("u32", false, IntBase::Int),
    ("u64", false, IntBase::LongLong),
];

pub fn builtin_alias(name: &str) -> Option<TypeName> {
    BUILTIN_TYPE_ALIASES
        .iter()
        .find(|(n, ..)| *n == name)
        .map(|(_, signed, base)| TypeName::Int {
            sign: if *signed { Sign::Signed } else { Sign::Unsigned },
            base: *base,
        })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub fn new(span: Span, expected: Vec<String>, found: String) -> Self {
        ParseError { span, expected, found }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: syntax error: expected ", self.span)?;
        match self.expected.len() {
            0 => write!(f, "nothing")?,
            1 => write!(f, "{}", self.expected[0])?,
            _ => write!(f, "one of {}", self.expected.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeErrorKind {
    #[error("undeclared identifier `{0}`")]
    Undeclared(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("call to undefined function `{0}`")]
    UnknownFunction(String),
    #[error("`{0}` is defined more than once")]
    Redefinition(String),
    #[error("division or modulo by a divisor that is not known to be non-zero; guard it with `if (d != 0)`")]
    UnguardedDivision,
    #[error("division by constant zero")]
    DivisionByZero,
    #[error("array index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: i64, len: u64 },
    #[error("{0}")]
    Mismatch(String),
    #[error("recursive call cycle through `{0}`")]
    Recursion(String),
    #[error("length argument of `{0}` must be a non-negative constant")]
    NonConstantLength(&'static str),
    #[error("`{builtin}` needs a region of {need} bytes, argument has {have}")]
    RegionTooShort {
        builtin: &'static str,
        have: u64,
        need: u64,
    },
    #[error("{0}-bit multiplication of two non-constant operands is not supported")]
    WideMultiply(u32),
    #[error("program defines no functions")]
    NoFunctions,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct TypeError {
    pub span: Span,
    pub kind: TypeErrorKind,
}

/// Any frontend failure.
#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Harness(#[from] harness::HarnessError),
}

pub fn read_source(path: &Path) -> Result<SourceUnit, FrontendError> {
    let text = std::fs::read_to_string(path).map_err(|source| FrontendError::Io {
        path: path.display().to_string(),
        source,
    })?;
    source_from_text(path, text)
}

pub fn source_from_text(path: &Path, text: String) -> Result<SourceUnit, FrontendError> {
    let (_, pragmas) = lexer::lex(&text)?;
    Ok(SourceUnit {
        path: path.to_path_buf(),
        text,
        pragmas,
    })
}

/// A fully checked input: source, typed program and harness.
#[derive(Clone, Debug)]
pub struct Analysed {
    pub source: SourceUnit,
    pub program: tast::TypedProgram,
    pub harness: harness::HarnessSpec,
}

/// Parse, type-check and resolve the harness of a source unit.
pub fn load(source: SourceUnit, arch: types::Arch) -> Result<Analysed, FrontendError> {
    let ast = parser::parse(&source)?;
    let program = typecheck::typecheck(&ast, arch)?;
    let harness = harness::resolve_harness(&program, &source.pragmas)?;
    Ok(Analysed {
        source,
        program,
        harness,
    })
}

pub fn load_text(text: &str, arch: types::Arch) -> Result<Analysed, FrontendError> {
    load(source_from_text(Path::new("input.mc"), text.to_string())?, arch)
}
