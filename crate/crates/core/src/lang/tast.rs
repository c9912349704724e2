//! Typed program representation produced by the type checker.
//!
//! Every expression carries its [`Type`]; implicit conversions are explicit
//! [`TExprKind::Cast`] nodes. Statements, calls and `input()` sites carry a
//! [`NodeId`] that is stable for a given source text, which is what ties
//! nondeterministic choices in the concrete interpreter to the free
//! variables of the symbolic encoding.

use super::ast::{Ast, BinOp, Span, UnOp};
use super::types::{Arch, Type};
use crate::env::Builtin;

pub type NodeId = u32;
pub type VarId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProgram {
    pub ast: Ast,
    pub arch: Arch,
    pub functions: Vec<TFunction>,
    /// Index of the analysed function.
    pub entry: usize,
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> Option<&TFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn entry_fn(&self) -> &TFunction {
        &self.functions[self.entry]
    }

    pub fn with_entry(mut self, name: &str) -> Option<Self> {
        self.entry = self.function_index(name)?;
        Some(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    Local,
    Param,
    /// `T *p` parameter: refers to caller storage, has none of its own.
    RefParam,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Local {
    pub name: String,
    /// For reference parameters, the pointee type.
    pub ty: Type,
    pub kind: LocalKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TFunction {
    pub name: String,
    pub ret: Type,
    /// Parameter variables, in order.
    pub params: Vec<VarId>,
    pub locals: Vec<Local>,
    pub body: Vec<TStmt>,
    pub span: Span,
}

impl TFunction {
    pub fn param(&self, name: &str) -> Option<(usize, &Local)> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, v)| (i, &self.locals[*v]))
            .find(|(_, l)| l.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeclInit {
    Uninit,
    Zero,
    Expr(TExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TStmt {
    pub id: NodeId,
    pub span: Span,
    pub kind: TStmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TStmtKind {
    Decl {
        var: VarId,
        init: DeclInit,
    },
    Assign {
        place: Place,
        value: TExpr,
    },
    If {
        cond: TExpr,
        then: Vec<TStmt>,
        els: Vec<TStmt>,
    },
    /// `for` loops are a `Block` of the init followed by a `While` whose
    /// `step` runs after the body in every iteration.
    While {
        cond: TExpr,
        body: Vec<TStmt>,
        step: Vec<TStmt>,
    },
    Block(Vec<TStmt>),
    Return(Option<TExpr>),
    Expr(TExpr),
    Assume(TExpr),
    Assert(TExpr),
    /// One unrolled loop iteration (produced by unwinding).
    IterScope {
        loop_id: NodeId,
        iteration: u32,
        body: Vec<TStmt>,
    },
    /// End of an unrolled loop: `cond` must be false here. Checked as an
    /// unwinding assertion when `check` is set, otherwise assumed.
    UnwindEdge {
        loop_id: NodeId,
        cond: TExpr,
        check: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceRoot {
    Var(VarId),
    Deref(VarId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proj {
    Field { offset: u64, ty: Type },
    Index { index: Box<TExpr>, elem: Type, len: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub root: PlaceRoot,
    pub proj: Vec<Proj>,
    pub ty: Type,
}

impl Place {
    /// Byte offset when every projection is static.
    pub fn static_offset(&self) -> Option<u64> {
        let mut off = 0;
        for p in &self.proj {
            match p {
                Proj::Field { offset, .. } => off += offset,
                Proj::Index { index, elem, .. } => {
                    let TExprKind::Const(i) = index.kind else {
                        return None;
                    };
                    off += i * elem.size_bytes();
                }
            }
        }
        Some(off)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Callee {
    User(usize),
    Builtin(Builtin),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TArg {
    Value(TExpr),
    Ref(Place),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logic {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TExprKind {
    /// Scalar constant, truncated to the expression type.
    Const(u64),
    Load(Place),
    Unary(UnOp, Box<TExpr>),
    /// Arithmetic, bitwise and comparison operators. Operands have the
    /// common type, except for shifts whose right operand keeps its own
    /// promoted type.
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    Logic(Logic, Box<TExpr>, Box<TExpr>),
    Cast(Box<TExpr>),
    Call {
        id: NodeId,
        callee: Callee,
        args: Vec<TArg>,
    },
    Input {
        id: NodeId,
    },
}

impl TExpr {
    pub fn constant(&self) -> Option<u64> {
        match self.kind {
            TExprKind::Const(v) => Some(v),
            _ => None,
        }
    }
}

pub fn walk_stmts<'a>(stmts: &'a [TStmt], f: &mut dyn FnMut(&'a TStmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            TStmtKind::If { then, els, .. } => {
                walk_stmts(then, f);
                walk_stmts(els, f);
            }
            TStmtKind::While { body, step, .. } => {
                walk_stmts(body, f);
                walk_stmts(step, f);
            }
            TStmtKind::Block(b) | TStmtKind::IterScope { body: b, .. } => walk_stmts(b, f),
            _ => {}
        }
    }
}

/// Binary operator on operands of `ty`, as a word-level operation. The flag
/// asks the caller to swap operands (`a > b` is `b < a`).
pub fn word_op(op: BinOp, operand: &Type) -> (crate::bits::WordOp, bool) {
    use crate::bits::WordOp as W;
    let signed = operand.is_signed();
    match op {
        BinOp::Add => (W::Add, false),
        BinOp::Sub => (W::Sub, false),
        BinOp::Mul => (W::Mul, false),
        BinOp::Div => (if signed { W::SDiv } else { W::UDiv }, false),
        BinOp::Rem => (if signed { W::SRem } else { W::URem }, false),
        BinOp::Shl => (W::Shl, false),
        BinOp::Shr => (if signed { W::AShr } else { W::LShr }, false),
        BinOp::Lt => (if signed { W::SLt } else { W::ULt }, false),
        BinOp::Le => (if signed { W::SLe } else { W::ULe }, false),
        BinOp::Gt => (if signed { W::SLt } else { W::ULt }, true),
        BinOp::Ge => (if signed { W::SLe } else { W::ULe }, true),
        BinOp::Eq => (W::Eq, false),
        BinOp::Ne => (W::Ne, false),
        BinOp::BitAnd => (W::And, false),
        BinOp::BitXor => (W::Xor, false),
        BinOp::BitOr => (W::Or, false),
        BinOp::And | BinOp::Or => unreachable!("logical operators are TExprKind::Logic"),
    }
}
