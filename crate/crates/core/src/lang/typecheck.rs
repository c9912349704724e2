use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::ast::*;
use super::tast::*;
use super::types::*;
use super::{builtin_alias, TypeError, TypeErrorKind};
use crate::env::{padding_bytes, Builtin};

/// Type-check a parsed program for the given target. The analysed entry
/// function defaults to the last function in the file.
pub fn typecheck(ast: &Ast, arch: Arch) -> Result<TypedProgram, TypeError> {
    let mut cx = Context {
        arch,
        typedefs: HashMap::new(),
        records: HashMap::new(),
        signatures: Vec::new(),
        next_id: 0,
    };
    for item in &ast.items {
        match item {
            Item::Typedef { ty, name, span } => {
                let t = cx.resolve(ty, *span)?;
                cx.typedefs.insert(name.clone(), t);
            }
            Item::Struct(s) => cx.define_record(s)?,
            Item::Function(f) => {
                if cx.signatures.iter().any(|s| s.name == f.name) {
                    return Err(err(f.span, TypeErrorKind::Redefinition(f.name.clone())));
                }
                if Builtin::lookup(&f.name).is_some() || f.name == "input" {
                    return Err(err(f.span, TypeErrorKind::Redefinition(f.name.clone())));
                }
                let sig = cx.signature(f)?;
                cx.signatures.push(sig);
            }
        }
    }
    let mut functions = Vec::new();
    for f in ast.functions() {
        functions.push(cx.check_function(f)?);
    }
    if functions.is_empty() {
        return Err(err(Span::default(), TypeErrorKind::NoFunctions));
    }
    check_recursion(&functions)?;
    Ok(TypedProgram {
        ast: ast.clone(),
        arch,
        entry: functions.len() - 1,
        functions,
    })
}

fn err(span: Span, kind: TypeErrorKind) -> TypeError {
    TypeError { span, kind }
}

struct Signature {
    name: String,
    ret: Type,
    params: Vec<(String, Type, bool)>,
}

struct Context {
    arch: Arch,
    typedefs: HashMap<String, Type>,
    records: HashMap<String, Arc<RecordLayout>>,
    signatures: Vec<Signature>,
    next_id: NodeId,
}

impl Context {
    fn resolve(&self, ty: &TypeName, span: Span) -> Result<Type, TypeError> {
        Ok(match ty {
            TypeName::Void => Type::Void,
            TypeName::Bool => Type::Bool,
            TypeName::Int { sign, base } => {
                let width = match base {
                    IntBase::Char => 8,
                    IntBase::Short => 16,
                    IntBase::Int => 32,
                    IntBase::Long => self.arch.bits(),
                    IntBase::LongLong => 64,
                };
                Type::int(*sign != Sign::Unsigned, width)
            }
            TypeName::Struct(n) => Type::Record(
                self.records
                    .get(n)
                    .cloned()
                    .ok_or_else(|| err(span, TypeErrorKind::UnknownType(format!("struct {}", n))))?,
            ),
            TypeName::Named(n) => match self.typedefs.get(n) {
                Some(t) => t.clone(),
                None => match builtin_alias(n) {
                    Some(t) => self.resolve(&t, span)?,
                    None => return Err(err(span, TypeErrorKind::UnknownType(n.clone()))),
                },
            },
        })
    }

    fn with_dims(&self, base: Type, dims: &[u64], span: Span) -> Result<Type, TypeError> {
        let mut t = base;
        for d in dims.iter().rev() {
            if *d == 0 {
                return Err(err(
                    span,
                    TypeErrorKind::Invalid("array length must be at least 1".into()),
                ));
            }
            if matches!(t, Type::Bool | Type::Void) {
                return Err(err(
                    span,
                    TypeErrorKind::Invalid(format!("arrays of {} are not supported", t)),
                ));
            }
            t = Type::Array(Box::new(t), *d);
        }
        Ok(t)
    }

    fn define_record(&mut self, s: &StructDef) -> Result<(), TypeError> {
        if self.records.contains_key(&s.name) {
            return Err(err(s.span, TypeErrorKind::Redefinition(format!("struct {}", s.name))));
        }
        if s.fields.is_empty() {
            return Err(err(s.span, TypeErrorKind::Invalid("empty struct".into())));
        }
        let mut fields: Vec<FieldLayout> = Vec::new();
        let mut offset = 0;
        for f in &s.fields {
            if fields.iter().any(|g| g.name == f.name) {
                return Err(err(f.span, TypeErrorKind::Redefinition(format!("field {}", f.name))));
            }
            let base = self.resolve(&f.ty, f.span)?;
            let ty = self.with_dims(base, &f.dims, f.span)?;
            if matches!(ty, Type::Bool | Type::Void) {
                return Err(err(
                    f.span,
                    TypeErrorKind::Invalid(format!("{} fields are not supported", ty)),
                ));
            }
            let size = ty.size_bytes();
            fields.push(FieldLayout {
                name: f.name.clone(),
                ty,
                offset,
            });
            offset += size;
        }
        self.records.insert(
            s.name.clone(),
            Arc::new(RecordLayout {
                name: s.name.clone(),
                fields,
                size: offset,
            }),
        );
        Ok(())
    }

    fn signature(&self, f: &FunctionDef) -> Result<Signature, TypeError> {
        let ret = self.resolve(&f.ret, f.span)?;
        let mut params = Vec::new();
        for p in &f.params {
            let t = self.resolve(&p.ty, p.span)?;
            if t == Type::Void {
                return Err(err(p.span, TypeErrorKind::Invalid("void parameter".into())));
            }
            if !p.pointer && !t.is_scalar() {
                return Err(err(
                    p.span,
                    TypeErrorKind::Invalid(format!("{} parameters must be passed by pointer", t)),
                ));
            }
            if params.iter().any(|(n, _, _): &(String, Type, bool)| *n == p.name) {
                return Err(err(p.span, TypeErrorKind::Redefinition(p.name.clone())));
            }
            params.push((p.name.clone(), t, p.pointer));
        }
        Ok(Signature {
            name: f.name.clone(),
            ret,
            params,
        })
    }

    fn check_function(&mut self, f: &FunctionDef) -> Result<TFunction, TypeError> {
        let sig_idx = self.signatures.iter().position(|s| s.name == f.name).unwrap();
        let ret = self.signatures[sig_idx].ret.clone();
        let mut fc = FnChecker {
            cx: self,
            locals: Vec::new(),
            scopes: vec![HashMap::new()],
            ret: ret.clone(),
            nonzero: Vec::new(),
        };
        let mut params = Vec::new();
        for (p, (name, ty, pointer)) in f.params.iter().zip(fc.cx.signatures[sig_idx].params.clone()) {
            let kind = if pointer { LocalKind::RefParam } else { LocalKind::Param };
            let v = fc.declare(&name, ty, kind, p.span);
            params.push(v);
        }
        let body = fc.block(&f.body.stmts)?;
        Ok(TFunction {
            name: f.name.clone(),
            ret,
            params,
            locals: fc.locals,
            body,
            span: f.span,
        })
    }

    fn fresh(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

struct FnChecker<'a> {
    cx: &'a mut Context,
    locals: Vec<Local>,
    scopes: Vec<HashMap<String, VarId>>,
    ret: Type,
    /// Variables known to be non-zero on the current path.
    nonzero: Vec<VarId>,
}

impl FnChecker<'_> {
    fn declare(&mut self, name: &str, ty: Type, kind: LocalKind, span: Span) -> VarId {
        let id = self.locals.len();
        self.locals.push(Local {
            name: name.to_string(),
            ty,
            kind,
            span,
        });
        self.scopes.last_mut().unwrap().insert(name.to_string(), id);
        id
    }

    fn lookup(&self, name: &str, span: Span) -> Result<VarId, TypeError> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).copied())
            .ok_or_else(|| err(span, TypeErrorKind::Undeclared(name.to_string())))
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<TStmt>, TypeError> {
        self.scopes.push(HashMap::new());
        let r = stmts.iter().map(|s| self.stmt(s)).collect();
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Result<TStmt, TypeError> {
        let id = self.cx.fresh();
        let span = s.span();
        let kind = match s {
            Stmt::Decl {
                ty,
                name,
                dims,
                init,
                span,
            } => {
                let base = self.cx.resolve(ty, *span)?;
                let t = self.cx.with_dims(base, dims, *span)?;
                if t == Type::Void {
                    return Err(err(*span, TypeErrorKind::Invalid("void variable".into())));
                }
                let init = match init {
                    None => DeclInit::Uninit,
                    Some(Init::Zero) => DeclInit::Zero,
                    Some(Init::Expr(e)) => DeclInit::Expr(self.rhs(e, &t)?),
                };
                let var = self.declare(name, t, LocalKind::Local, *span);
                TStmtKind::Decl { var, init }
            }
            Stmt::Assign { target, value, .. } => {
                let place = self.place(target)?;
                let value = self.rhs(value, &place.ty.clone())?;
                TStmtKind::Assign { place, value }
            }
            Stmt::If { cond, then, els, .. } => {
                let c = self.condition(cond)?;
                let mark = self.nonzero.len();
                let (then_nz, else_nz) = self.guard_facts(cond);
                self.extend_nonzero(then_nz, then);
                let then = self.block(&then.stmts)?;
                self.nonzero.truncate(mark);
                let empty = Block::default();
                let els_block = els.as_ref().unwrap_or(&empty);
                self.extend_nonzero(else_nz, els_block);
                let els = self.block(&els_block.stmts)?;
                self.nonzero.truncate(mark);
                TStmtKind::If { cond: c, then, els }
            }
            Stmt::While { cond, body, .. } => {
                let c = self.condition(cond)?;
                let body = self.block(&body.stmts)?;
                TStmtKind::While {
                    cond: c,
                    body,
                    step: vec![],
                }
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
                span,
            } => {
                self.scopes.push(HashMap::new());
                let mut out = Vec::new();
                if let Some(i) = init {
                    out.push(self.stmt(i)?);
                }
                let loop_id = self.cx.fresh();
                let c = match cond {
                    Some(c) => self.condition(c)?,
                    None => TExpr {
                        kind: TExprKind::Const(1),
                        ty: Type::Bool,
                        span: *span,
                    },
                };
                let body = self.block(&body.stmts)?;
                let step = match step {
                    Some(s) => vec![self.stmt(s)?],
                    None => vec![],
                };
                self.scopes.pop();
                out.push(TStmt {
                    id: loop_id,
                    span: *span,
                    kind: TStmtKind::While { cond: c, body, step },
                });
                TStmtKind::Block(out)
            }
            Stmt::Return { value, span } => match (value, &self.ret) {
                (None, Type::Void) => TStmtKind::Return(None),
                (None, _) => return Err(err(*span, TypeErrorKind::Mismatch("missing return value".into()))),
                (Some(_), Type::Void) => {
                    return Err(err(
                        *span,
                        TypeErrorKind::Mismatch("void function returns a value".into()),
                    ))
                }
                (Some(v), ret) => {
                    let ret = ret.clone();
                    TStmtKind::Return(Some(self.rhs(v, &ret)?))
                }
            },
            Stmt::Expr { expr, .. } => TStmtKind::Expr(self.expr_allow_void(expr)?),
            Stmt::Block(b) => TStmtKind::Block(self.block(&b.stmts)?),
            Stmt::Assume { cond, .. } => TStmtKind::Assume(self.condition(cond)?),
            Stmt::Assert { cond, .. } => TStmtKind::Assert(self.condition(cond)?),
        };
        Ok(TStmt { id, span, kind })
    }

    fn extend_nonzero(&mut self, names: Vec<String>, body: &Block) {
        for n in names {
            if assigns_name(&body.stmts, &n) {
                continue;
            }
            if let Ok(v) = self.lookup(&n, Span::default()) {
                self.nonzero.push(v);
            }
        }
    }

    /// Variables proven non-zero in the then- and else-branch of `cond`.
    fn guard_facts(&self, cond: &Expr) -> (Vec<String>, Vec<String>) {
        fn conjuncts<'e>(e: &'e Expr, op: BinOp, out: &mut Vec<&'e Expr>) {
            match &e.kind {
                ExprKind::Binary(o, l, r) if *o == op => {
                    conjuncts(l, op, out);
                    conjuncts(r, op, out);
                }
                _ => out.push(e),
            }
        }
        fn is_zero(e: &Expr) -> bool {
            matches!(&e.kind, ExprKind::Int(l) if l.value == 0)
        }
        fn var(e: &Expr) -> Option<String> {
            match &e.kind {
                ExprKind::Var(n) => Some(n.clone()),
                _ => None,
            }
        }
        let mut then = Vec::new();
        let mut parts = Vec::new();
        conjuncts(cond, BinOp::And, &mut parts);
        for p in parts {
            match &p.kind {
                ExprKind::Var(n) => then.push(n.clone()),
                ExprKind::Binary(BinOp::Ne, l, r) if is_zero(r) => then.extend(var(l)),
                ExprKind::Binary(BinOp::Ne, l, r) if is_zero(l) => then.extend(var(r)),
                ExprKind::Binary(BinOp::Gt, l, r) if is_zero(r) => then.extend(var(l)),
                _ => {}
            }
        }
        let mut els = Vec::new();
        let mut parts = Vec::new();
        conjuncts(cond, BinOp::Or, &mut parts);
        for p in parts {
            match &p.kind {
                ExprKind::Unary(UnOp::Not, e) => els.extend(var(e)),
                ExprKind::Binary(BinOp::Eq, l, r) if is_zero(r) => els.extend(var(l)),
                ExprKind::Binary(BinOp::Eq, l, r) if is_zero(l) => els.extend(var(r)),
                _ => {}
            }
        }
        (then, els)
    }

    fn condition(&mut self, e: &Expr) -> Result<TExpr, TypeError> {
        let t = self.expr(e)?;
        to_bool(t)
    }

    /// Right-hand side converted to `target`; `input()` takes the target type.
    fn rhs(&mut self, e: &Expr, target: &Type) -> Result<TExpr, TypeError> {
        if let ExprKind::Input = e.kind {
            return Ok(TExpr {
                kind: TExprKind::Input { id: self.cx.fresh() },
                ty: target.clone(),
                span: e.span,
            });
        }
        let t = self.expr(e)?;
        coerce(t, target)
    }

    fn place(&mut self, e: &Expr) -> Result<Place, TypeError> {
        match &e.kind {
            ExprKind::Var(n) => {
                let v = self.lookup(n, e.span)?;
                let l = &self.locals[v];
                if l.kind == LocalKind::RefParam {
                    return Err(err(
                        e.span,
                        TypeErrorKind::Invalid(format!(
                            "pointer `{}` used as a value; write *{} or {}->field",
                            n, n, n
                        )),
                    ));
                }
                Ok(Place {
                    root: PlaceRoot::Var(v),
                    proj: vec![],
                    ty: l.ty.clone(),
                })
            }
            ExprKind::Deref(b) => self.deref_root(b, e.span),
            ExprKind::Arrow(b, f) => {
                let mut p = self.deref_root(b, e.span)?;
                self.field(&mut p, f, e.span)?;
                Ok(p)
            }
            ExprKind::Field(b, f) => {
                let mut p = self.place(b)?;
                self.field(&mut p, f, e.span)?;
                Ok(p)
            }
            ExprKind::Index(b, i) => {
                let mut p = self.place(b)?;
                let Type::Array(elem, len) = p.ty.clone() else {
                    return Err(err(
                        e.span,
                        TypeErrorKind::Mismatch(format!("indexing non-array {}", p.ty)),
                    ));
                };
                let idx = self.expr(i)?;
                if !idx.ty.is_scalar() {
                    return Err(err(
                        i.span,
                        TypeErrorKind::Mismatch("array index must be an integer".into()),
                    ));
                }
                let idx = coerce(idx.clone(), &promote(&idx.ty))?;
                if let Some(c) = fold(&idx) {
                    let signed = sign_value(c, &idx.ty);
                    if signed < 0 || signed as u64 >= len {
                        return Err(err(i.span, TypeErrorKind::IndexOutOfBounds { index: signed, len }));
                    }
                }
                p.proj.push(Proj::Index {
                    index: Box::new(idx),
                    elem: (*elem).clone(),
                    len,
                });
                p.ty = *elem;
                Ok(p)
            }
            _ => Err(err(e.span, TypeErrorKind::Invalid("expected an lvalue".into()))),
        }
    }

    fn deref_root(&mut self, b: &Expr, span: Span) -> Result<Place, TypeError> {
        let ExprKind::Var(n) = &b.kind else {
            return Err(err(
                span,
                TypeErrorKind::Invalid("only pointer parameters can be dereferenced".into()),
            ));
        };
        let v = self.lookup(n, b.span)?;
        let l = &self.locals[v];
        if l.kind != LocalKind::RefParam {
            return Err(err(
                span,
                TypeErrorKind::Invalid(format!("`{}` is not a pointer parameter", n)),
            ));
        }
        Ok(Place {
            root: PlaceRoot::Deref(v),
            proj: vec![],
            ty: l.ty.clone(),
        })
    }

    fn field(&self, p: &mut Place, f: &str, span: Span) -> Result<(), TypeError> {
        let Type::Record(r) = &p.ty else {
            return Err(err(span, TypeErrorKind::Mismatch(format!("field access on {}", p.ty))));
        };
        let fl = r
            .field(f)
            .ok_or_else(|| err(span, TypeErrorKind::Undeclared(format!("{}.{}", r.name, f))))?
            .clone();
        p.proj.push(Proj::Field {
            offset: fl.offset,
            ty: fl.ty.clone(),
        });
        p.ty = fl.ty;
        Ok(())
    }

    /// A memory region argument: `&lvalue`, a pointer parameter, or an array.
    fn region(&mut self, e: &Expr) -> Result<Place, TypeError> {
        let p = self.ref_arg(e)?;
        if p.ty == Type::Bool {
            return Err(err(
                e.span,
                TypeErrorKind::Invalid("bool objects are not memory regions".into()),
            ));
        }
        Ok(p)
    }

    /// Argument bound to a pointer parameter.
    fn ref_arg(&mut self, e: &Expr) -> Result<Place, TypeError> {
        let p = self.region_place(e)?;
        if p.static_offset().is_none() {
            return Err(err(
                e.span,
                TypeErrorKind::Invalid("address arguments need constant array indices".into()),
            ));
        }
        Ok(p)
    }

    fn region_place(&mut self, e: &Expr) -> Result<Place, TypeError> {
        match &e.kind {
            ExprKind::AddrOf(inner) => self.place(inner),
            ExprKind::Var(n) => {
                let v = self.lookup(n, e.span)?;
                let l = &self.locals[v];
                match l.kind {
                    LocalKind::RefParam => Ok(Place {
                        root: PlaceRoot::Deref(v),
                        proj: vec![],
                        ty: l.ty.clone(),
                    }),
                    _ if matches!(l.ty, Type::Array(..)) => self.place(e),
                    _ => Err(err(
                        e.span,
                        TypeErrorKind::Mismatch(format!("`{}` is not addressable here; use &{}", n, n)),
                    )),
                }
            }
            _ => {
                let p = self.place(e).map_err(|_| {
                    err(
                        e.span,
                        TypeErrorKind::Mismatch("expected `&lvalue`, pointer parameter or array".into()),
                    )
                })?;
                if matches!(p.ty, Type::Array(..)) {
                    Ok(p)
                } else {
                    Err(err(
                        e.span,
                        TypeErrorKind::Mismatch("expected `&lvalue`, pointer parameter or array".into()),
                    ))
                }
            }
        }
    }

    fn region_capacity(&self, p: &Place) -> Option<u64> {
        let off = p.static_offset()?;
        let total = match p.root {
            PlaceRoot::Var(v) => self.locals[v].ty.object_bytes(self.cx.arch),
            PlaceRoot::Deref(v) => self.locals[v].ty.object_bytes(self.cx.arch),
        };
        Some(total.saturating_sub(off))
    }

    fn expr_allow_void(&mut self, e: &Expr) -> Result<TExpr, TypeError> {
        if let ExprKind::Call(name, args) = &e.kind {
            return self.call(name, args, e.span);
        }
        self.expr(e)
    }

    fn expr(&mut self, e: &Expr) -> Result<TExpr, TypeError> {
        let span = e.span;
        let mk = |kind, ty| TExpr { kind, ty, span };
        Ok(match &e.kind {
            ExprKind::Int(lit) => {
                let ty = literal_type(lit, self.cx.arch);
                let bits = ty.value_bits();
                mk(TExprKind::Const(crate::bits::truncate(lit.value, bits)), ty)
            }
            ExprKind::Var(_) | ExprKind::Field(..) | ExprKind::Arrow(..) | ExprKind::Index(..) | ExprKind::Deref(_) => {
                let p = self.place(e)?;
                let ty = p.ty.clone();
                mk(TExprKind::Load(p), ty)
            }
            ExprKind::AddrOf(_) => {
                return Err(err(
                    span,
                    TypeErrorKind::Invalid("`&` is only allowed in call arguments".into()),
                ))
            }
            ExprKind::Unary(op, b) => {
                let t = self.expr(b)?;
                scalar(&t)?;
                match op {
                    UnOp::Not => {
                        let b = to_bool(t)?;
                        mk(TExprKind::Unary(UnOp::Not, Box::new(b)), Type::Bool)
                    }
                    _ => {
                        let pt = promote(&t.ty);
                        let t = coerce(t, &pt)?;
                        mk(TExprKind::Unary(*op, Box::new(t)), pt)
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.expr(l)?;
                let rt = self.expr(r)?;
                scalar(&lt)?;
                scalar(&rt)?;
                match op {
                    BinOp::And | BinOp::Or => {
                        let logic = if *op == BinOp::And { Logic::And } else { Logic::Or };
                        mk(
                            TExprKind::Logic(logic, Box::new(to_bool(lt)?), Box::new(to_bool(rt)?)),
                            Type::Bool,
                        )
                    }
                    BinOp::Shl | BinOp::Shr => {
                        let pl = promote(&lt.ty);
                        let pr = promote(&rt.ty);
                        let lt = coerce(lt, &pl)?;
                        let rt = coerce(rt, &pr)?;
                        mk(TExprKind::Binary(*op, Box::new(lt), Box::new(rt)), pl)
                    }
                    _ => {
                        let ct = common_type(&lt.ty, &rt.ty);
                        let lt = coerce(lt, &ct)?;
                        let rt = coerce(rt, &ct)?;
                        if matches!(op, BinOp::Div | BinOp::Rem) {
                            self.check_divisor(&rt, r.span)?;
                        }
                        if *op == BinOp::Mul {
                            let w = ct.value_bits();
                            if w > 32 && fold(&lt).is_none() && fold(&rt).is_none() {
                                return Err(err(span, TypeErrorKind::WideMultiply(w)));
                            }
                        }
                        let ty = if op.is_comparison() { Type::Bool } else { ct };
                        mk(TExprKind::Binary(*op, Box::new(lt), Box::new(rt)), ty)
                    }
                }
            }
            ExprKind::Cast(tn, b) => {
                let target = self.cx.resolve(tn, span)?;
                let t = self.expr(b)?;
                if target.is_scalar() {
                    scalar(&t)?;
                }
                let mut c = coerce(t, &target)?;
                c.span = span;
                c
            }
            ExprKind::Call(name, args) => {
                let c = self.call(name, args, span)?;
                if c.ty == Type::Void {
                    return Err(err(
                        span,
                        TypeErrorKind::Mismatch(format!("void call `{}` used as a value", name)),
                    ));
                }
                c
            }
            ExprKind::SizeofType(tn) => {
                let t = self.cx.resolve(tn, span)?;
                mk(TExprKind::Const(t.size_bytes()), Type::Int(IntType::SIZE))
            }
            ExprKind::SizeofExpr(b) => {
                let t = match &b.kind {
                    ExprKind::Var(n) => {
                        let v = self.lookup(n, b.span)?;
                        self.locals[v].ty.clone()
                    }
                    _ => self.expr(b)?.ty,
                };
                mk(TExprKind::Const(t.size_bytes()), Type::Int(IntType::SIZE))
            }
            ExprKind::Input => {
                return Err(err(
                    span,
                    TypeErrorKind::Invalid("input() must be the whole right-hand side of an assignment".into()),
                ))
            }
        })
    }

    fn check_divisor(&self, d: &TExpr, span: Span) -> Result<(), TypeError> {
        if let Some(c) = fold(d) {
            return if c == 0 {
                Err(err(span, TypeErrorKind::DivisionByZero))
            } else {
                Ok(())
            };
        }
        let mut e = d;
        while let TExprKind::Cast(inner) = &e.kind {
            e = inner;
        }
        if let TExprKind::Load(Place {
            root: PlaceRoot::Var(v),
            proj,
            ..
        }) = &e.kind
        {
            if proj.is_empty() && self.nonzero.contains(v) {
                return Ok(());
            }
        }
        Err(err(span, TypeErrorKind::UnguardedDivision))
    }

    fn call(&mut self, name: &str, args: &[Expr], span: Span) -> Result<TExpr, TypeError> {
        if let Some(b) = Builtin::lookup(name) {
            return self.builtin_call(b, args, span);
        }
        let Some(fi) = self.cx.signatures.iter().position(|s| s.name == name) else {
            return Err(err(span, TypeErrorKind::UnknownFunction(name.to_string())));
        };
        let id = self.cx.fresh();
        let params = self.cx.signatures[fi].params.clone();
        let ret = self.cx.signatures[fi].ret.clone();
        if params.len() != args.len() {
            return Err(err(
                span,
                TypeErrorKind::Mismatch(format!(
                    "`{}` takes {} arguments, {} given",
                    name,
                    params.len(),
                    args.len()
                )),
            ));
        }
        let mut targs = Vec::new();
        for ((_, pty, pointer), a) in params.iter().zip(args) {
            if *pointer {
                let p = self.ref_arg(a)?;
                if p.ty != *pty {
                    return Err(err(
                        a.span,
                        TypeErrorKind::Mismatch(format!("expected pointer to {}, found pointer to {}", pty, p.ty)),
                    ));
                }
                targs.push(TArg::Ref(p));
            } else {
                let t = self.rhs(a, pty)?;
                targs.push(TArg::Value(t));
            }
        }
        Ok(TExpr {
            kind: TExprKind::Call {
                id,
                callee: Callee::User(fi),
                args: targs,
            },
            ty: ret,
            span,
        })
    }

    fn builtin_call(&mut self, b: Builtin, args: &[Expr], span: Span) -> Result<TExpr, TypeError> {
        let id = self.cx.fresh();
        let shape = b.arg_is_region();
        if args.len() != shape.len() {
            return Err(err(
                span,
                TypeErrorKind::Mismatch(format!("`{}` takes {} arguments", b, shape.len())),
            ));
        }
        let mut targs = Vec::new();
        for (a, is_region) in args.iter().zip(shape) {
            if *is_region {
                targs.push(TArg::Ref(self.region(a)?));
            } else {
                let t = self.expr(a)?;
                scalar(&t)?;
                targs.push(TArg::Value(coerce(t, &Type::INT)?));
            }
        }
        let TArg::Value(len) = &targs[b.length_arg()] else {
            unreachable!()
        };
        let Some(n) = fold(len) else {
            return Err(err(args[2].span, TypeErrorKind::NonConstantLength(b.name())));
        };
        let n = sign_value(n, &len.ty);
        if n < 0 {
            return Err(err(args[2].span, TypeErrorKind::NonConstantLength(b.name())));
        }
        let n = n as u64;
        let need_dst = if b == Builtin::CopyToUser {
            n + padding_bytes(n, self.cx.arch.align())
        } else {
            n
        };
        for (i, a) in targs.iter().enumerate() {
            if let TArg::Ref(p) = a {
                let need = if i == 0 { need_dst } else { n };
                if let Some(have) = self.region_capacity(p) {
                    if have < need {
                        return Err(err(
                            args[i].span,
                            TypeErrorKind::RegionTooShort {
                                builtin: b.name(),
                                have,
                                need,
                            },
                        ));
                    }
                }
            }
        }
        let ty = if b.returns_value() { Type::INT } else { Type::Void };
        Ok(TExpr {
            kind: TExprKind::Call {
                id,
                callee: Callee::Builtin(b),
                args: targs,
            },
            ty,
            span,
        })
    }
}

fn scalar(t: &TExpr) -> Result<(), TypeError> {
    if t.ty.is_scalar() {
        Ok(())
    } else {
        Err(err(
            t.span,
            TypeErrorKind::Mismatch(format!("expected a scalar, found {}", t.ty)),
        ))
    }
}

fn to_bool(t: TExpr) -> Result<TExpr, TypeError> {
    scalar(&t)?;
    coerce(t, &Type::Bool)
}

/// Insert a conversion to `target` when needed.
pub(crate) fn coerce(t: TExpr, target: &Type) -> Result<TExpr, TypeError> {
    if t.ty == *target {
        return Ok(t);
    }
    if t.ty.is_scalar() && target.is_scalar() {
        let span = t.span;
        if let TExprKind::Const(v) = t.kind {
            return Ok(TExpr {
                kind: TExprKind::Const(convert_const(v, &t.ty, target)),
                ty: target.clone(),
                span,
            });
        }
        return Ok(TExpr {
            kind: TExprKind::Cast(Box::new(t)),
            ty: target.clone(),
            span,
        });
    }
    Err(err(
        t.span,
        TypeErrorKind::Mismatch(format!("cannot convert {} to {}", t.ty, target)),
    ))
}

/// Scalar conversion of a constant bit pattern.
pub fn convert_const(v: u64, from: &Type, to: &Type) -> u64 {
    match to {
        Type::Bool => (v != 0) as u64,
        Type::Int(i) => {
            let wide = match from {
                Type::Int(f) if f.signed => crate::bits::sign_extend(v, f.width) as u64,
                _ => v,
            };
            crate::bits::truncate(wide, i.width)
        }
        _ => v,
    }
}

fn sign_value(v: u64, ty: &Type) -> i64 {
    match ty {
        Type::Int(i) if i.signed => crate::bits::sign_extend(v, i.width),
        _ => v as i64,
    }
}

/// Constant value of an expression built only from constants.
pub fn fold(e: &TExpr) -> Option<u64> {
    match &e.kind {
        TExprKind::Const(v) => Some(*v),
        TExprKind::Cast(inner) => Some(convert_const(fold(inner)?, &inner.ty, &e.ty)),
        TExprKind::Binary(op, l, r) => {
            let (a, b) = (fold(l)?, fold(r)?);
            let (wop, swap) = word_op(*op, &l.ty);
            let (a, b) = if swap { (b, a) } else { (a, b) };
            if matches!(op, BinOp::Div | BinOp::Rem) && b == 0 {
                return None;
            }
            Some(crate::bits::eval_word_op(
                wop,
                a,
                b,
                l.ty.value_bits(),
                r.ty.value_bits(),
            ))
        }
        TExprKind::Unary(op, inner) => {
            let v = fold(inner)?;
            let w = e.ty.value_bits();
            Some(match op {
                UnOp::Neg => crate::bits::truncate(v.wrapping_neg(), w),
                UnOp::BitNot => crate::bits::truncate(!v, w),
                UnOp::Not => (v == 0) as u64,
            })
        }
        _ => None,
    }
}

fn literal_type(lit: &IntLit, arch: Arch) -> Type {
    let v = lit.value;
    let long_w = if lit.longs >= 2 { 64 } else { arch.bits() };
    let mut candidates: Vec<Type> = Vec::new();
    let min_w = if lit.longs == 0 { 32 } else { long_w };
    for w in [32, long_w, 64] {
        if w < min_w || candidates.iter().any(|t| t.value_bits() == w && !t.is_signed()) {
            continue;
        }
        if !lit.unsigned {
            candidates.push(Type::int(true, w));
        }
        if lit.unsigned || lit.hex {
            candidates.push(Type::int(false, w));
        }
    }
    candidates
        .into_iter()
        .find(|t| {
            let w = t.value_bits();
            if t.is_signed() {
                v <= (crate::bits::mask(w) >> 1)
            } else {
                v <= crate::bits::mask(w)
            }
        })
        .unwrap_or(Type::int(false, 64))
}

fn assigns_name(stmts: &[Stmt], name: &str) -> bool {
    fn target_is(e: &Expr, name: &str) -> bool {
        matches!(&e.kind, ExprKind::Var(n) if n == name)
    }
    stmts.iter().any(|s| match s {
        Stmt::Assign { target, .. } => target_is(target, name),
        Stmt::Decl { name: n, .. } => n == name,
        Stmt::If { then, els, .. } => {
            assigns_name(&then.stmts, name) || els.as_ref().is_some_and(|e| assigns_name(&e.stmts, name))
        }
        Stmt::While { body, .. } => assigns_name(&body.stmts, name),
        Stmt::For { init, step, body, .. } => {
            init.as_ref()
                .is_some_and(|i| assigns_name(std::slice::from_ref(i), name))
                || step
                    .as_ref()
                    .is_some_and(|i| assigns_name(std::slice::from_ref(i), name))
                || assigns_name(&body.stmts, name)
        }
        Stmt::Block(b) => assigns_name(&b.stmts, name),
        _ => false,
    })
}

fn check_recursion(functions: &[TFunction]) -> Result<(), TypeError> {
    let mut edges: Vec<HashSet<usize>> = vec![HashSet::new(); functions.len()];
    for (i, f) in functions.iter().enumerate() {
        walk_stmts(&f.body, &mut |s| {
            for_each_call(s, &mut |c| {
                edges[i].insert(c);
            })
        });
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    fn dfs(n: usize, edges: &[HashSet<usize>], state: &mut [u8]) -> Option<usize> {
        state[n] = 1;
        for &m in &edges[n] {
            if state[m] == 1 {
                return Some(m);
            }
            if state[m] == 0 {
                if let Some(c) = dfs(m, edges, state) {
                    return Some(c);
                }
            }
        }
        state[n] = 2;
        None
    }
    let mut state = vec![0u8; functions.len()];
    for i in 0..functions.len() {
        if state[i] == 0 {
            if let Some(c) = dfs(i, &edges, &mut state) {
                return Err(err(
                    functions[c].span,
                    TypeErrorKind::Recursion(functions[c].name.clone()),
                ));
            }
        }
    }
    Ok(())
}

/// Calls to user functions made directly by a statement's expressions.
fn for_each_call(s: &TStmt, f: &mut dyn FnMut(usize)) {
    fn expr(e: &TExpr, f: &mut dyn FnMut(usize)) {
        match &e.kind {
            TExprKind::Load(p) => place(p, f),
            TExprKind::Unary(_, a) | TExprKind::Cast(a) => expr(a, f),
            TExprKind::Binary(_, a, b) | TExprKind::Logic(_, a, b) => {
                expr(a, f);
                expr(b, f);
            }
            TExprKind::Call { callee, args, .. } => {
                if let Callee::User(i) = callee {
                    f(*i);
                }
                for a in args {
                    match a {
                        TArg::Value(v) => expr(v, f),
                        TArg::Ref(p) => place(p, f),
                    }
                }
            }
            TExprKind::Const(_) | TExprKind::Input { .. } => {}
        }
    }
    fn place(p: &Place, f: &mut dyn FnMut(usize)) {
        for pr in &p.proj {
            if let Proj::Index { index, .. } = pr {
                expr(index, f);
            }
        }
    }
    match &s.kind {
        TStmtKind::Decl {
            init: DeclInit::Expr(e),
            ..
        } => expr(e, f),
        TStmtKind::Assign { place: p, value } => {
            place(p, f);
            expr(value, f);
        }
        TStmtKind::If { cond, .. }
        | TStmtKind::While { cond, .. }
        | TStmtKind::UnwindEdge { cond, .. }
        | TStmtKind::Assume(cond)
        | TStmtKind::Assert(cond)
        | TStmtKind::Expr(cond)
        | TStmtKind::Return(Some(cond)) => expr(cond, f),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_text;

    fn check(src: &str) -> Result<TypedProgram, TypeError> {
        let (ast, _) = parse_text(src).unwrap();
        typecheck(&ast, Arch::X32)
    }

    const UNDERFLOW: &str = "typedef long long loff_t;
typedef unsigned int size_t;
int underflow(int h, loff_t ppos) {
  int bufsz;
  size_t nbytes;
  bufsz=1024;
  nbytes=20;
  if (ppos + nbytes > bufsz)
       nbytes = bufsz - ppos;
  if(ppos + nbytes > bufsz) {
     return h;
  } else {
     return 0;
  }
}";

    #[test]
    fn underflow_types() {
        let p = check(UNDERFLOW).unwrap();
        let f = p.entry_fn();
        let ppos = f.param("ppos").unwrap().1;
        assert_eq!(ppos.ty, Type::int(true, 64));
        let nbytes = f.locals.iter().find(|l| l.name == "nbytes").unwrap();
        assert_eq!(nbytes.ty, Type::int(false, 32));
        // nbytes = bufsz - ppos: subtraction at signed 64, cast to unsigned 32.
        let mut found = false;
        walk_stmts(&f.body, &mut |s| {
            if let TStmtKind::Assign { place, value } = &s.kind {
                if place.ty == Type::int(false, 32) {
                    if let TExprKind::Cast(inner) = &value.kind {
                        assert_eq!(inner.ty, Type::int(true, 64));
                        assert!(matches!(inner.kind, TExprKind::Binary(BinOp::Sub, _, _)));
                        found = true;
                    }
                }
            }
        });
        assert!(found);
    }

    #[test]
    fn literal_addition_is_int() {
        let p = check("int f() { return 1 + 1; }").unwrap();
        let TStmtKind::Return(Some(e)) = &p.entry_fn().body[0].kind else {
            panic!()
        };
        assert_eq!(e.ty, Type::INT);
        assert!(matches!(e.kind, TExprKind::Binary(BinOp::Add, _, _)));
    }

    #[test]
    fn surface_widths() {
        let p = check(
            "int f(char a, unsigned int b, long long c, size_t d, loff_t e, short g, unsigned long u) { return 0; }",
        )
        .unwrap();
        let f = p.entry_fn();
        let ty = |n: &str| f.param(n).unwrap().1.ty.clone();
        assert_eq!(ty("a"), Type::int(true, 8));
        assert_eq!(ty("b"), Type::int(false, 32));
        assert_eq!(ty("c"), Type::int(true, 64));
        assert_eq!(ty("d"), Type::int(false, 32));
        assert_eq!(ty("e"), Type::int(true, 64));
        assert_eq!(ty("g"), Type::int(true, 16));
        assert_eq!(ty("u"), Type::int(false, 32));
        let (ast, _) = parse_text("int f(unsigned long u) { return 0; }").unwrap();
        let p64 = typecheck(&ast, Arch::X64).unwrap();
        assert_eq!(p64.entry_fn().param("u").unwrap().1.ty, Type::int(false, 64));
    }

    #[test]
    fn rejects_undeclared_and_unguarded_division() {
        assert!(matches!(
            check("int f() { return x; }").unwrap_err().kind,
            TypeErrorKind::Undeclared(_)
        ));
        assert!(matches!(
            check("int f(int a, int b) { return a / b; }").unwrap_err().kind,
            TypeErrorKind::UnguardedDivision
        ));
        assert!(matches!(
            check("int f(int a) { return a % 0; }").unwrap_err().kind,
            TypeErrorKind::DivisionByZero
        ));
        check("int f(int a, int b) { if (b != 0) { return a / b; } return 0; }").unwrap();
        check("int f(int a, int b) { if (b == 0) { return 0; } else { return a % b; } }").unwrap();
        assert!(check("int f(int a, int b) { if (b != 0) { b = 0; return a / b; } return 0; }").is_err());
        check("int f(int h) { return h % 4; }").unwrap();
    }

    #[test]
    fn static_index_bounds() {
        assert!(matches!(
            check("int f() { int a[2]; a[2] = 1; return 0; }").unwrap_err().kind,
            TypeErrorKind::IndexOutOfBounds { index: 2, len: 2 }
        ));
        check("int f(int i) { int a[2] = {0}; return a[i]; }").unwrap();
    }

    #[test]
    fn recursion_rejected() {
        assert!(matches!(
            check("int g(int x) { return g(x); } int f() { return g(1); }")
                .unwrap_err()
                .kind,
            TypeErrorKind::Recursion(_)
        ));
    }

    #[test]
    fn builtin_regions_checked() {
        let src = "struct s { unsigned char a; unsigned char z[8]; };
                   int f(struct s *out) { struct s t; memset(&t.z, 0, sizeof(t.z)); memcpy(out, &t, sizeof(t)); return memcmp(out, &t, 9); }";
        check(src).unwrap();
        let bad = "struct s { unsigned char a; };
                   int f(struct s *out, int n) { struct s t; memcpy(out, &t, n); return 0; }";
        assert!(matches!(
            check(bad).unwrap_err().kind,
            TypeErrorKind::NonConstantLength(_)
        ));
        let short = "struct s { unsigned char a; };
                   int f(struct s *out) { struct s t; memcpy(out, &t, 8); return 0; }";
        assert!(matches!(
            check(short).unwrap_err().kind,
            TypeErrorKind::RegionTooShort { .. }
        ));
    }

    #[test]
    fn literal_types() {
        let a = Arch::X32;
        let lit = |v, hex, unsigned, longs| IntLit {
            value: v,
            hex,
            unsigned,
            longs,
        };
        assert_eq!(literal_type(&lit(5, false, false, 0), a), Type::INT);
        assert_eq!(literal_type(&lit(4294967295, false, false, 0), a), Type::int(true, 64));
        assert_eq!(literal_type(&lit(0xffffffff, true, false, 0), a), Type::int(false, 32));
        assert_eq!(literal_type(&lit(5, false, true, 0), a), Type::int(false, 32));
        assert_eq!(literal_type(&lit(5, false, false, 2), a), Type::int(true, 64));
    }
}
