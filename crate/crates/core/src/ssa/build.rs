//! Symbolic execution of a loop-free program into SSA.
//!
//! Calls are inlined. Every object is one bit vector holding its whole byte
//! image (a `_Bool` object is a single bit); each write creates a new version.
//! Branches are executed one after the other and the versions they produce
//! are merged with `ite` on the branch condition. A function that may have
//! returned early keeps an `alive` condition that guards later writes.

use std::collections::{BTreeMap, BTreeSet};

use crate::bits::WordOp;
use crate::env::{self, padding_bytes, Builtin, BuiltinError, ByteDomain};
use crate::lang::ast::{Span, UnOp};
use crate::lang::harness::RETURN_IDENT;
use crate::lang::tast::*;
use crate::lang::types::Type;
use crate::nondet::{enter_iteration, leave_iteration, Frame, NondetKey};

use super::ir::*;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SsaError {
    #[error("program contains a loop; unwind it first")]
    NotLoopFree,
    #[error("{span}: {source}")]
    Builtin { span: Span, source: BuiltinError },
}

struct Object {
    name: String,
    function: String,
    copy: u32,
    span: Span,
    cur: SsaExpr,
    versions: u32,
}

#[derive(Clone, Copy, Debug)]
enum Binding {
    Obj(usize),
    Ref(usize, u64),
}

struct FrameState {
    fi: usize,
    env: Vec<Option<Binding>>,
    ret: Option<usize>,
    copy: u32,
}

enum Arg {
    Value(SsaExpr),
    Ref(usize, u64),
}

struct Builder<'a> {
    prog: &'a TypedProgram,
    out: SsaProgram,
    objects: Vec<Object>,
    /// Previous value of every object write, for undoing a branch.
    trail: Vec<(usize, SsaExpr)>,
    stack: Vec<FrameState>,
    frames: Vec<Frame>,
    path: SsaExpr,
    alive: SsaExpr,
    copies: u32,
}

/// Build the SSA form of the entry function. Value parameters become free
/// inputs named after the parameter; reference parameters point at
/// zero-initialised objects whose final contents are outputs.
pub fn build_ssa(prog: &TypedProgram) -> Result<SsaProgram, SsaError> {
    if !super::unwind::is_loop_free(prog) {
        return Err(SsaError::NotLoopFree);
    }
    let mut b = Builder {
        prog,
        out: SsaProgram::default(),
        objects: Vec::new(),
        trail: Vec::new(),
        stack: Vec::new(),
        frames: Vec::new(),
        path: SsaExpr::tt(),
        alive: SsaExpr::tt(),
        copies: 0,
    };
    let f = prog.entry_fn();
    let mut args = Vec::new();
    let mut refs = Vec::new();
    for v in &f.params {
        let l = &f.locals[*v];
        match l.kind {
            LocalKind::RefParam => {
                let bits = l.ty.object_bits(prog.arch);
                let o = b.new_object(&l.name, &f.name, 0, l.span, SsaExpr::konst(bits, 0));
                refs.push((l.name.clone(), o));
                args.push(Arg::Ref(o, 0));
            }
            _ => {
                let var = b.fresh_var(
                    format!("{}::{}", f.name, l.name),
                    l.ty.value_bits(),
                    &f.name,
                    &l.name,
                    0,
                    l.span,
                );
                b.out.stmts.push(SsaStmt::Input {
                    var,
                    name: l.name.clone(),
                });
                args.push(Arg::Value(SsaExpr::Var(var, l.ty.value_bits())));
            }
        }
    }
    let (ret, env) = b.inline(prog.entry, args, 0, true)?;
    if let Some(r) = ret {
        b.out.outputs.push((RETURN_IDENT.to_string(), r));
    }
    for (name, o) in refs {
        let cur = b.objects[o].cur.clone();
        b.out.outputs.push((name, cur));
    }
    for (v, bnd) in env.iter().enumerate() {
        if let (Some(Binding::Obj(o)), LocalKind::Local) = (bnd, f.locals[v].kind) {
            b.out.locals.push((f.locals[v].name.clone(), b.objects[*o].cur.clone()));
        }
    }
    Ok(b.out)
}

fn contains_call(e: &TExpr) -> bool {
    match &e.kind {
        TExprKind::Call { .. } => true,
        TExprKind::Const(_) | TExprKind::Input { .. } => false,
        TExprKind::Load(p) => p.proj.iter().any(|pr| match pr {
            Proj::Index { index, .. } => contains_call(index),
            Proj::Field { .. } => false,
        }),
        TExprKind::Unary(_, a) | TExprKind::Cast(a) => contains_call(a),
        TExprKind::Binary(_, a, b) | TExprKind::Logic(_, a, b) => contains_call(a) || contains_call(b),
    }
}

/// Cheap enough to keep inline instead of naming by a variable.
fn is_wiring(e: &SsaExpr) -> bool {
    match e {
        SsaExpr::Const(_) | SsaExpr::Var(..) => true,
        SsaExpr::Extract(a, ..) => matches!(**a, SsaExpr::Var(..)),
        SsaExpr::Concat(ps) => ps.iter().all(|p| match p {
            SsaExpr::Extract(a, ..) => matches!(**a, SsaExpr::Var(..)),
            p => matches!(p, SsaExpr::Const(_) | SsaExpr::Var(..)),
        }),
        _ => false,
    }
}

fn cond_of(e: SsaExpr) -> SsaExpr {
    if e.width() == 1 {
        e
    } else {
        let w = e.width();
        SsaExpr::bin(WordOp::Ne, e, SsaExpr::konst(w, 0))
    }
}

impl<'a> Builder<'a> {
    fn fresh_var(&mut self, name: String, width: u32, function: &str, var: &str, copy: u32, span: Span) -> SsaVar {
        self.out.vars.push(VarInfo {
            name,
            width,
            origin: Origin {
                function: function.to_string(),
                var: var.to_string(),
                copy,
                span,
            },
        });
        (self.out.vars.len() - 1) as SsaVar
    }

    fn new_object(&mut self, name: &str, function: &str, copy: u32, span: Span, init: SsaExpr) -> usize {
        self.objects.push(Object {
            name: name.to_string(),
            function: function.to_string(),
            copy,
            span,
            cur: init,
            versions: 0,
        });
        self.objects.len() - 1
    }

    /// Record a new version of an object.
    fn set(&mut self, o: usize, value: SsaExpr) {
        let obj = &mut self.objects[o];
        obj.versions += 1;
        let name = format!("{}::{}::{}#{}", obj.function, obj.copy, obj.name, obj.versions);
        let (function, var, copy, span) = (obj.function.clone(), obj.name.clone(), obj.copy, obj.span);
        let var_id = self.fresh_var(name, value.width(), &function, &var, copy, span);
        let keep = if is_wiring(&value) {
            value.clone()
        } else {
            SsaExpr::Var(var_id, value.width())
        };
        self.out.stmts.push(SsaStmt::Assign {
            var: var_id,
            expr: value,
        });
        let old = std::mem::replace(&mut self.objects[o].cur, keep);
        self.trail.push((o, old));
    }

    fn nondet(&mut self, site: NodeId, index: u32, width: u32, label: &str) -> SsaExpr {
        let key = NondetKey {
            frames: self.frames.clone(),
            site,
            index,
            width,
        };
        let (function, copy) = match self.stack.last() {
            Some(fr) => (self.prog.functions[fr.fi].name.clone(), fr.copy),
            None => (String::new(), 0),
        };
        let name = format!("nondet::{}", key);
        let var = self.fresh_var(name, width, &function, label, copy, Span::default());
        self.out.stmts.push(SsaStmt::Nondet { var, key });
        SsaExpr::Var(var, width)
    }

    /// A variable standing for `e`, so that it is not copied into every
    /// alternative of a dynamic access. Such temporaries have no source name.
    fn name(&mut self, e: SsaExpr) -> SsaExpr {
        if is_wiring(&e) {
            return e;
        }
        let (function, copy) = match self.stack.last() {
            Some(fr) => (self.prog.functions[fr.fi].name.clone(), fr.copy),
            None => (String::new(), 0),
        };
        let w = e.width();
        let var = self.fresh_var(
            format!("{}::{}::tmp", function, copy),
            w,
            &function,
            "",
            copy,
            Span::default(),
        );
        self.out.stmts.push(SsaStmt::Assign { var, expr: e });
        SsaExpr::Var(var, w)
    }

    fn guard(&self) -> SsaExpr {
        SsaExpr::and(self.path.clone(), self.alive.clone())
    }

    fn frame(&self) -> &FrameState {
        self.stack.last().unwrap()
    }

    fn inline(
        &mut self,
        fi: usize,
        args: Vec<Arg>,
        copy: u32,
        keep_env: bool,
    ) -> Result<(Option<SsaExpr>, Vec<Option<Binding>>), SsaError> {
        let f = &self.prog.functions[fi];
        let mut env = vec![None; f.locals.len()];
        for (v, a) in f.params.iter().zip(args) {
            let l = &f.locals[*v];
            env[*v] = Some(match a {
                Arg::Ref(o, off) => Binding::Ref(o, off),
                Arg::Value(val) => {
                    let o = self.new_object(&l.name, &f.name, copy, l.span, val.clone());
                    self.set(o, val);
                    Binding::Obj(o)
                }
            });
        }
        let ret = if f.ret == Type::Void {
            None
        } else {
            Some(self.new_object(
                RETURN_IDENT,
                &f.name,
                copy,
                f.span,
                SsaExpr::konst(f.ret.value_bits(), 0),
            ))
        };
        self.stack.push(FrameState { fi, env, ret, copy });
        let saved_alive = self.alive.clone();
        self.exec_block(&f.body)?;
        self.alive = saved_alive;
        let fr = self.stack.pop().unwrap();
        let value = fr.ret.map(|o| self.objects[o].cur.clone());
        Ok((value, if keep_env { fr.env } else { Vec::new() }))
    }

    fn exec_block(&mut self, stmts: &[TStmt]) -> Result<(), SsaError> {
        for s in stmts {
            if self.alive.is_false() {
                break;
            }
            self.exec(s)?;
        }
        Ok(())
    }

    /// Run two alternatives under `c` / `!c` and merge the object versions
    /// they leave behind. Returns the values the alternatives produced.
    fn branch<T>(
        &mut self,
        c: SsaExpr,
        then: impl FnOnce(&mut Self) -> Result<T, SsaError>,
        els: impl FnOnce(&mut Self) -> Result<T, SsaError>,
    ) -> Result<(T, T), SsaError> {
        let mark = self.trail.len();
        let live = self.objects.len();
        let (path, alive) = (self.path.clone(), self.alive.clone());

        self.path = SsaExpr::and(path.clone(), c.clone());
        let tv = then(self)?;
        let mut then_vals = BTreeMap::new();
        for (o, _) in &self.trail[mark..] {
            if *o < live {
                then_vals.insert(*o, self.objects[*o].cur.clone());
            }
        }
        let alive_t = std::mem::replace(&mut self.alive, alive);
        while self.trail.len() > mark {
            let (o, old) = self.trail.pop().unwrap();
            self.objects[o].cur = old;
        }

        self.path = SsaExpr::and(path.clone(), SsaExpr::negate(c.clone()));
        let ev = els(self)?;
        let alive_e = self.alive.clone();
        self.path = path;

        let written: BTreeSet<usize> = then_vals
            .keys()
            .copied()
            .chain(self.trail[mark..].iter().map(|(o, _)| *o).filter(|o| *o < live))
            .collect();
        for o in written {
            let e = self.objects[o].cur.clone();
            let t = then_vals.remove(&o).unwrap_or_else(|| {
                self.trail[mark..]
                    .iter()
                    .find(|(x, _)| *x == o)
                    .map(|(_, old)| old.clone())
                    .unwrap_or_else(|| e.clone())
            });
            if t != e {
                self.set(o, SsaExpr::ite(c.clone(), t, e));
            }
        }
        self.alive = SsaExpr::ite(c, alive_t, alive_e);
        Ok((tv, ev))
    }

    fn exec(&mut self, s: &TStmt) -> Result<(), SsaError> {
        match &s.kind {
            TStmtKind::Decl { var, init } => {
                let f = &self.prog.functions[self.frame().fi];
                let local = &f.locals[*var];
                let ty = local.ty.clone();
                let (fname, lname, span, copy) = (f.name.clone(), local.name.clone(), local.span, self.frame().copy);
                let arch = self.prog.arch;
                let value = match init {
                    DeclInit::Zero => SsaExpr::konst(ty.object_bits(arch), 0),
                    DeclInit::Uninit => {
                        if ty == Type::Bool {
                            self.nondet(s.id, 0, 1, &lname)
                        } else {
                            let n = ty.object_bytes(arch) as u32;
                            let bytes = (0..n).map(|i| self.nondet(s.id, i, 8, &lname)).collect();
                            SsaExpr::concat(bytes)
                        }
                    }
                    DeclInit::Expr(e) => {
                        let v = self.eval(e)?;
                        let size = ty.size_bytes() as u32;
                        let n = ty.object_bytes(arch) as u32;
                        let mut parts = vec![v];
                        if ty.is_aggregate() {
                            parts.extend((size..n).map(|i| self.nondet(s.id, i, 8, &lname)));
                        }
                        SsaExpr::concat(parts)
                    }
                };
                let o = self.new_object(&lname, &fname, copy, span, value.clone());
                self.set(o, value);
                self.stack.last_mut().unwrap().env[*var] = Some(Binding::Obj(o));
            }
            TStmtKind::Assign { place, value } => {
                let v = self.eval(value)?;
                let (o, alts) = self.place(place)?;
                self.store(o, &alts, &place.ty, v);
            }
            TStmtKind::If { cond, then, els } => {
                let c = cond_of(self.eval(cond)?);
                if c.is_true() {
                    self.exec_block(then)?;
                } else if c.is_false() {
                    self.exec_block(els)?;
                } else {
                    self.branch(c, |b| b.exec_block(then), |b| b.exec_block(els))?;
                }
            }
            TStmtKind::While { .. } => return Err(SsaError::NotLoopFree),
            TStmtKind::Block(b) => self.exec_block(b)?,
            TStmtKind::Return(v) => {
                if let Some(e) = v {
                    let val = self.eval(e)?;
                    if let Some(r) = self.frame().ret {
                        let guarded = self.guarded(val, self.objects[r].cur.clone());
                        self.set(r, guarded);
                    }
                }
                self.alive = SsaExpr::ff();
            }
            TStmtKind::Expr(e) => {
                self.eval_any(e)?;
            }
            TStmtKind::Assume(c) => {
                let cond = cond_of(self.eval(c)?);
                let guard = self.guard();
                self.out.stmts.push(SsaStmt::Assume {
                    guard,
                    cond,
                    span: s.span,
                });
            }
            TStmtKind::Assert(c) => {
                let cond = cond_of(self.eval(c)?);
                let guard = self.guard();
                self.out.stmts.push(SsaStmt::Assert {
                    guard,
                    cond,
                    kind: AssertKind::Property,
                    span: s.span,
                });
            }
            TStmtKind::IterScope {
                loop_id,
                iteration,
                body,
            } => {
                let restore = enter_iteration(&mut self.frames, *loop_id, *iteration);
                self.exec_block(body)?;
                leave_iteration(&mut self.frames, restore);
            }
            TStmtKind::UnwindEdge { cond, check, .. } => {
                let c = SsaExpr::negate(cond_of(self.eval(cond)?));
                let guard = self.guard();
                self.out.stmts.push(if *check {
                    SsaStmt::Assert {
                        guard,
                        cond: c,
                        kind: AssertKind::Unwinding,
                        span: s.span,
                    }
                } else {
                    SsaStmt::Assume {
                        guard,
                        cond: c,
                        span: s.span,
                    }
                });
            }
        }
        Ok(())
    }

    /// `new` when the function is still running, `old` otherwise.
    fn guarded(&self, new: SsaExpr, old: SsaExpr) -> SsaExpr {
        SsaExpr::ite(self.alive.clone(), new, old)
    }

    fn binding(&self, v: VarId) -> (usize, u64) {
        match self.frame().env[v].expect("variable used before declaration") {
            Binding::Obj(o) => (o, 0),
            Binding::Ref(o, off) => (o, off),
        }
    }

    /// Object and the mutually exclusive (condition, byte offset) pairs the
    /// place may denote. No pair holds when an index is out of bounds.
    fn place(&mut self, p: &Place) -> Result<(usize, Vec<(SsaExpr, u64)>), SsaError> {
        let (o, base) = match p.root {
            PlaceRoot::Var(v) | PlaceRoot::Deref(v) => self.binding(v),
        };
        let mut alts = vec![(SsaExpr::tt(), base)];
        for pr in &p.proj {
            match pr {
                Proj::Field { offset, .. } => alts.iter_mut().for_each(|a| a.1 += offset),
                Proj::Index { index, elem, len } => {
                    let idx = self.eval(index)?;
                    let idx = self.name(idx);
                    let w = idx.width();
                    let step = elem.size_bytes();
                    let reach = match &index.ty {
                        Type::Int(t) if t.signed => 1u64.checked_shl(t.width - 1),
                        _ => 1u64.checked_shl(w),
                    }
                    .unwrap_or(u64::MAX)
                    .min(*len);
                    let mut next = Vec::new();
                    if let Some(i) = idx.as_u64() {
                        if i < reach {
                            next = alts.into_iter().map(|(c, off)| (c, off + i * step)).collect();
                        }
                    } else {
                        for (c, off) in alts {
                            for i in 0..reach {
                                let hit = SsaExpr::eq(idx.clone(), SsaExpr::konst(w, i));
                                next.push((SsaExpr::and(c.clone(), hit), off + i * step));
                            }
                        }
                    }
                    alts = next;
                }
            }
        }
        Ok((o, alts))
    }

    fn load_at(&self, o: usize, off: u64, ty: &Type) -> SsaExpr {
        let cur = self.objects[o].cur.clone();
        if cur.width() == 1 {
            return cur;
        }
        let w = ty.value_bits();
        SsaExpr::extract(cur, 8 * off as u32, w)
    }

    fn load(&self, o: usize, alts: &[(SsaExpr, u64)], ty: &Type) -> SsaExpr {
        let mut acc = SsaExpr::konst(ty.value_bits(), 0);
        for (c, off) in alts.iter().rev() {
            acc = SsaExpr::ite(c.clone(), self.load_at(o, *off, ty), acc);
        }
        acc
    }

    fn store(&mut self, o: usize, alts: &[(SsaExpr, u64)], ty: &Type, v: SsaExpr) {
        if alts.is_empty() {
            return;
        }
        let cur = self.objects[o].cur.clone();
        let total = cur.width();
        let v = if *ty == Type::Bool && total > 1 {
            SsaExpr::zext(v, 8)
        } else {
            v
        };
        let v = if alts.len() > 1 { self.name(v) } else { v };
        let vw = v.width();
        let mut sorted: Vec<&(SsaExpr, u64)> = alts.iter().collect();
        sorted.sort_by_key(|a| a.1);
        let mut parts = Vec::new();
        let mut at = 0;
        for (c, off) in sorted {
            let lo = if total == 1 { 0 } else { 8 * *off as u32 };
            parts.push(SsaExpr::extract(cur.clone(), at, lo - at));
            let old = SsaExpr::extract(cur.clone(), lo, vw);
            parts.push(SsaExpr::ite(
                SsaExpr::and(c.clone(), self.alive.clone()),
                v.clone(),
                old,
            ));
            at = lo + vw;
        }
        parts.push(SsaExpr::extract(cur, at, total - at));
        self.set(o, SsaExpr::concat(parts));
    }

    fn write_bytes(&mut self, o: usize, off: u64, bytes: Vec<SsaExpr>) {
        if bytes.is_empty() {
            return;
        }
        let cur = self.objects[o].cur.clone();
        let lo = 8 * off as u32;
        let new = SsaExpr::concat(bytes);
        let old = SsaExpr::extract(cur.clone(), lo, new.width());
        let v = self.guarded(new, old);
        self.set(o, SsaExpr::overwrite(cur, lo, v));
    }

    fn eval(&mut self, e: &TExpr) -> Result<SsaExpr, SsaError> {
        let w = e.ty.value_bits();
        Ok(self.eval_any(e)?.unwrap_or_else(|| SsaExpr::konst(w, 0)))
    }

    fn eval_any(&mut self, e: &TExpr) -> Result<Option<SsaExpr>, SsaError> {
        let w = e.ty.value_bits();
        Ok(Some(match &e.kind {
            TExprKind::Const(v) => SsaExpr::konst(w, *v),
            TExprKind::Load(p) => {
                let (o, alts) = self.place(p)?;
                self.load(o, &alts, &p.ty)
            }
            TExprKind::Unary(op, a) => {
                let v = self.eval(a)?;
                let aw = v.width();
                match op {
                    UnOp::Neg => SsaExpr::bin(WordOp::Sub, SsaExpr::konst(aw, 0), v),
                    UnOp::BitNot => SsaExpr::negate(v),
                    UnOp::Not => SsaExpr::zext(SsaExpr::eq(v, SsaExpr::konst(aw, 0)), w),
                }
            }
            TExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                let (wop, swap) = word_op(*op, &l.ty);
                let (a, b) = if swap { (b, a) } else { (a, b) };
                SsaExpr::zext(SsaExpr::bin(wop, a, b), w)
            }
            TExprKind::Logic(op, l, r) => {
                let a = cond_of(self.eval(l)?);
                let short = match op {
                    Logic::And => a.is_false(),
                    Logic::Or => a.is_true(),
                };
                let v = if short {
                    a
                } else if !contains_call(r) {
                    let b = cond_of(self.eval(r)?);
                    match op {
                        Logic::And => SsaExpr::and(a, b),
                        Logic::Or => SsaExpr::or(a, b),
                    }
                } else if a.as_u64().is_some() {
                    cond_of(self.eval(r)?)
                } else {
                    let (t, f) = match op {
                        Logic::And => self.branch(a.clone(), |b| Ok(cond_of(b.eval(r)?)), |_| Ok(SsaExpr::ff()))?,
                        Logic::Or => self.branch(a.clone(), |_| Ok(SsaExpr::tt()), |b| Ok(cond_of(b.eval(r)?)))?,
                    };
                    SsaExpr::ite(a, t, f)
                };
                SsaExpr::zext(v, w)
            }
            TExprKind::Cast(a) => {
                let v = self.eval(a)?;
                match (&a.ty, &e.ty) {
                    (_, Type::Bool) => cond_of(v),
                    (Type::Int(f), Type::Int(_)) if f.signed => SsaExpr::sext(v, w),
                    (_, Type::Int(_)) => SsaExpr::zext(v, w),
                    _ => v,
                }
            }
            TExprKind::Input { id } => {
                if e.ty.is_scalar() {
                    self.nondet(*id, 0, w, "input")
                } else {
                    let n = e.ty.size_bytes() as u32;
                    let bytes = (0..n).map(|i| self.nondet(*id, i, 8, "input")).collect();
                    SsaExpr::concat(bytes)
                }
            }
            TExprKind::Call { id, callee, args } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(match a {
                        TArg::Value(v) => Arg::Value(self.eval(v)?),
                        TArg::Ref(p) => {
                            let (o, alts) = self.place(p)?;
                            let off = match alts.as_slice() {
                                [(c, off)] if c.is_true() => *off,
                                _ => unreachable!("reference arguments have static offsets"),
                            };
                            Arg::Ref(o, off)
                        }
                    });
                }
                return match callee {
                    Callee::User(fi) => {
                        let copy = if self.stack.len() == 1 {
                            self.copies += 1;
                            self.copies
                        } else {
                            self.frame().copy
                        };
                        self.frames.push(Frame::Call(*id));
                        let r = self.inline(*fi, vals, copy, false);
                        self.frames.pop();
                        Ok(r?.0)
                    }
                    Callee::Builtin(b) => {
                        let r = self.builtin(*b, *id, vals, e.span)?;
                        Ok(if e.ty == Type::Void {
                            None
                        } else {
                            Some(SsaExpr::zext(r, w))
                        })
                    }
                };
            }
        }))
    }

    fn region(&self, o: usize, off: u64) -> Vec<SsaExpr> {
        let cur = self.objects[o].cur.clone();
        let n = cur.width() as u64 / 8;
        (off..n)
            .map(|i| SsaExpr::extract(cur.clone(), 8 * i as u32, 8))
            .collect()
    }

    fn builtin(&mut self, b: Builtin, id: NodeId, args: Vec<Arg>, span: Span) -> Result<SsaExpr, SsaError> {
        let wrap = |source| SsaError::Builtin { span, source };
        let region = |a: &Arg| match a {
            Arg::Ref(o, off) => (*o, *off),
            Arg::Value(_) => unreachable!(),
        };
        let value = |a: &Arg| match a {
            Arg::Value(v) => v.clone(),
            Arg::Ref(..) => unreachable!(),
        };
        let n = value(&args[2])
            .as_u64()
            .map(|v| crate::bits::sign_extend(v, 32).max(0) as u64)
            .expect("builtin lengths are constant");
        let (d, doff) = region(&args[0]);
        let mut dom = SymBytes { b: self, site: id };
        match b {
            Builtin::Memcmp => {
                let (s, soff) = region(&args[1]);
                let x = dom.b.region(d, doff);
                let y = dom.b.region(s, soff);
                env::memcmp(&mut dom, &x, &y, n).map_err(wrap)
            }
            Builtin::Memset => {
                let c = value(&args[1]);
                let mut buf = dom.b.region(d, doff);
                env::memset(&mut dom, &mut buf, &c, n).map_err(wrap)?;
                buf.truncate(n as usize);
                self.write_bytes(d, doff, buf);
                Ok(SsaExpr::konst(32, 0))
            }
            Builtin::Memcpy | Builtin::CopyToUser => {
                let (s, soff) = region(&args[1]);
                if s == d && n > 0 && soff < doff + n && doff < soff + n {
                    return Err(wrap(BuiltinError::Overlap(b)));
                }
                let src = dom.b.region(s, soff);
                let mut buf = dom.b.region(d, doff);
                if b == Builtin::Memcpy {
                    env::memcpy::<SymBytes>(&mut buf, &src, n).map_err(wrap)?;
                    buf.truncate(n as usize);
                    self.write_bytes(d, doff, buf);
                    Ok(SsaExpr::konst(32, 0))
                } else {
                    let align = dom.b.prog.arch.align();
                    let r = env::copy_to_user(&mut dom, &mut buf, &src, n, align).map_err(wrap)?;
                    buf.truncate((n + padding_bytes(n, align)) as usize);
                    self.write_bytes(d, doff, buf);
                    Ok(r)
                }
            }
        }
    }
}

/// Symbolic bytes for the shared builtin models.
struct SymBytes<'b, 'a> {
    b: &'b mut Builder<'a>,
    site: NodeId,
}

impl ByteDomain for SymBytes<'_, '_> {
    type Byte = SsaExpr;
    type Word = SsaExpr;
    type Cond = SsaExpr;

    fn byte_eq(&mut self, a: &SsaExpr, b: &SsaExpr) -> SsaExpr {
        SsaExpr::eq(a.clone(), b.clone())
    }
    fn all(&mut self, conds: Vec<SsaExpr>) -> SsaExpr {
        conds.into_iter().fold(SsaExpr::tt(), SsaExpr::and)
    }
    fn select_int(&mut self, c: SsaExpr, then: i64, els: i64) -> SsaExpr {
        SsaExpr::ite(c, SsaExpr::konst(32, then as u64), SsaExpr::konst(32, els as u64))
    }
    fn int_const(&mut self, v: i64) -> SsaExpr {
        SsaExpr::konst(32, v as u64)
    }
    fn low_byte(&mut self, w: &SsaExpr) -> SsaExpr {
        SsaExpr::extract(w.clone(), 0, 8)
    }
    fn fresh_byte(&mut self, index: u32) -> SsaExpr {
        self.b.nondet(self.site, index, 8, "padding")
    }
}
