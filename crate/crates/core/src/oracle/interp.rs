//! Bit-exact concrete interpreter.

use crate::bits::{eval_word_op, sign_extend, truncate};
use crate::env::{self, padding_bytes, Builtin, BuiltinError, ConcreteBytes};
use crate::lang::ast::{Span, UnOp};
use crate::lang::harness::{HarnessSpec, ObservableKind};
use crate::lang::tast::*;
use crate::lang::typecheck::convert_const;
use crate::lang::types::Type;
use crate::nondet::{enter_iteration, leave_iteration, Frame, NondetKey, NondetSource};

use super::value::{ConcreteValue, Observation};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("step budget of {0} exhausted")]
    StepLimit(u64),
    #[error("{0}: assumption does not hold")]
    AssumeFailed(Span),
    #[error("{0}: assertion failed")]
    AssertionFailed(Span),
    #[error("{0}: loop runs past the unwinding bound")]
    UnwindingAssertion(Span),
    #[error("{span}: {source}")]
    Builtin { span: Span, source: BuiltinError },
    #[error("bad input: {0}")]
    BadInput(String),
}

#[derive(Clone, Debug)]
enum Cell {
    Val(u8),
    Uninit(NondetKey),
}

#[derive(Clone, Copy, Debug)]
enum Binding {
    Obj(usize),
    Ref(usize, u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Val {
    Scalar(u64),
    Bytes(Vec<u8>),
}

impl Val {
    fn scalar(&self) -> u64 {
        match self {
            Val::Scalar(v) => *v,
            Val::Bytes(_) => panic!("aggregate used as scalar"),
        }
    }
}

enum Flow {
    Normal,
    Return(Option<Val>),
}

enum ArgVal {
    Value(Val),
    Ref(usize, u64),
}

/// Interpreter state for one run. Objects live for the whole run.
pub struct Interp<'a> {
    prog: &'a TypedProgram,
    objects: Vec<Vec<Cell>>,
    envs: Vec<Vec<Option<Binding>>>,
    fn_stack: Vec<usize>,
    frames: Vec<Frame>,
    source: &'a mut dyn NondetSource,
    steps: u64,
    max_steps: u64,
}

/// Run the entry function on the given inputs and return its observations.
pub fn run_concrete(
    prog: &TypedProgram,
    harness: &HarnessSpec,
    high: &[ConcreteValue],
    low: &[ConcreteValue],
    nondet: &mut dyn NondetSource,
    max_steps: u64,
) -> Result<Observation, ExecError> {
    let f = prog.entry_fn();
    if high.len() != harness.high.len() || low.len() != harness.low.len() {
        return Err(ExecError::BadInput(format!(
            "expected {} high and {} low values",
            harness.high.len(),
            harness.low.len()
        )));
    }
    let mut it = Interp::new(prog, nondet, max_steps);
    let mut args = Vec::new();
    let mut out_objects = Vec::new();
    for (i, v) in f.params.iter().enumerate() {
        let local = &f.locals[*v];
        match local.kind {
            LocalKind::RefParam => {
                let o = it.alloc_zero(&local.ty);
                out_objects.push((i, o));
                args.push(ArgVal::Ref(o, 0));
            }
            _ => {
                let given = harness
                    .high
                    .iter()
                    .zip(high)
                    .chain(harness.low.iter().zip(low))
                    .find(|(p, _)| p.index == i)
                    .map(|(_, v)| v)
                    .ok_or_else(|| ExecError::BadInput(format!("no value for `{}`", local.name)))?;
                if given.ty != local.ty {
                    return Err(ExecError::BadInput(format!(
                        "`{}` has type {}, value has type {}",
                        local.name, local.ty, given.ty
                    )));
                }
                args.push(ArgVal::Value(Val::Scalar(given.to_u64())));
            }
        }
    }
    let ret = it.call(prog.entry, args)?;
    let mut obs = Vec::new();
    for o in &harness.observables {
        match &o.kind {
            ObservableKind::Return => obs.push(it.to_concrete(&o.ty, ret.clone().unwrap_or(Val::Scalar(0)))),
            ObservableKind::OutParam { index, .. } => {
                let obj = out_objects.iter().find(|(i, _)| i == index).unwrap().1;
                let n = it.objects[obj].len() as u64;
                let bytes = it.read_bytes(obj, 0, n);
                let v = if o.ty.is_scalar() {
                    it.decode_scalar(&o.ty, &bytes)
                } else {
                    Val::Bytes(bytes)
                };
                obs.push(it.to_concrete(&o.ty, v));
            }
        }
    }
    Ok(obs)
}

impl<'a> Interp<'a> {
    pub fn new(prog: &'a TypedProgram, source: &'a mut dyn NondetSource, max_steps: u64) -> Self {
        Interp {
            prog,
            objects: Vec::new(),
            envs: Vec::new(),
            fn_stack: Vec::new(),
            frames: Vec::new(),
            source,
            steps: 0,
            max_steps,
        }
    }

    fn to_concrete(&self, ty: &Type, v: Val) -> ConcreteValue {
        match v {
            Val::Scalar(x) => ConcreteValue::scalar(ty.clone(), x),
            Val::Bytes(b) => ConcreteValue::from_bytes(ty.clone(), &b),
        }
    }

    fn tick(&mut self) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.max_steps {
            Err(ExecError::StepLimit(self.max_steps))
        } else {
            Ok(())
        }
    }

    fn key(&self, site: NodeId, index: u32, width: u32) -> NondetKey {
        NondetKey {
            frames: self.frames.clone(),
            site,
            index,
            width,
        }
    }

    fn alloc_zero(&mut self, ty: &Type) -> usize {
        let n = ty.object_bytes(self.prog.arch) as usize;
        self.objects.push(vec![Cell::Val(0); n]);
        self.objects.len() - 1
    }

    fn alloc_uninit(&mut self, ty: &Type, site: NodeId) -> usize {
        let n = ty.object_bytes(self.prog.arch) as u32;
        let w = if *ty == Type::Bool { 1 } else { 8 };
        let cells = (0..n).map(|i| Cell::Uninit(self.key(site, i, w))).collect();
        self.objects.push(cells);
        self.objects.len() - 1
    }

    fn read_cell(&mut self, o: usize, i: usize) -> u8 {
        match &self.objects[o][i] {
            Cell::Val(b) => *b,
            Cell::Uninit(k) => {
                let v = self.source.choose(k) as u8;
                self.objects[o][i] = Cell::Val(v);
                v
            }
        }
    }

    fn read_bytes(&mut self, o: usize, off: u64, n: u64) -> Vec<u8> {
        (off..off + n).map(|i| self.read_cell(o, i as usize)).collect()
    }

    fn write_bytes(&mut self, o: usize, off: u64, bytes: &[u8]) {
        for (i, b) in bytes.iter().enumerate() {
            self.objects[o][off as usize + i] = Cell::Val(*b);
        }
    }

    fn decode_scalar(&self, ty: &Type, bytes: &[u8]) -> Val {
        match ty {
            Type::Bool => Val::Scalar((bytes[0] & 1) as u64),
            _ => {
                let mut v = 0u64;
                for (i, b) in bytes.iter().enumerate() {
                    v |= (*b as u64) << (8 * i);
                }
                Val::Scalar(v)
            }
        }
    }

    fn load(&mut self, o: usize, off: u64, ty: &Type) -> Val {
        match ty {
            Type::Bool => Val::Scalar((self.read_cell(o, off as usize) & 1) as u64),
            Type::Int(i) => {
                let bytes = self.read_bytes(o, off, (i.width / 8) as u64);
                self.decode_scalar(ty, &bytes)
            }
            _ => Val::Bytes(self.read_bytes(o, off, ty.size_bytes())),
        }
    }

    fn store(&mut self, o: usize, off: u64, ty: &Type, v: &Val) {
        match (ty, v) {
            (Type::Bool, Val::Scalar(x)) => self.objects[o][off as usize] = Cell::Val((*x & 1) as u8),
            (Type::Int(i), Val::Scalar(x)) => {
                let bytes: Vec<u8> = (0..i.width / 8).map(|k| (x >> (8 * k)) as u8).collect();
                self.write_bytes(o, off, &bytes);
            }
            (_, Val::Bytes(b)) => self.write_bytes(o, off, b),
            _ => panic!("store of mismatched value"),
        }
    }

    fn binding(&self, v: VarId) -> Binding {
        self.envs.last().unwrap()[v].expect("variable used before declaration")
    }

    /// Resolve a place; `None` when an index is out of bounds.
    fn place(&mut self, p: &Place) -> Result<Option<(usize, u64)>, ExecError> {
        let (o, mut off) = match p.root {
            PlaceRoot::Var(v) | PlaceRoot::Deref(v) => match self.binding(v) {
                Binding::Obj(o) => (o, 0),
                Binding::Ref(o, off) => (o, off),
            },
        };
        let mut valid = true;
        for pr in &p.proj {
            match pr {
                Proj::Field { offset, .. } => off += offset,
                Proj::Index { index, elem, len } => {
                    let i = self.eval(index)?.scalar();
                    let i = match &index.ty {
                        Type::Int(t) if t.signed => sign_extend(i, t.width),
                        _ => i as i64,
                    };
                    if i < 0 || i as u64 >= *len {
                        valid = false;
                    } else {
                        off += i as u64 * elem.size_bytes();
                    }
                }
            }
        }
        Ok(if valid { Some((o, off)) } else { None })
    }

    fn call(&mut self, fi: usize, args: Vec<ArgVal>) -> Result<Option<Val>, ExecError> {
        let f = &self.prog.functions[fi];
        let mut env = vec![None; f.locals.len()];
        for (v, a) in f.params.iter().zip(args) {
            env[*v] = Some(match a {
                ArgVal::Ref(o, off) => Binding::Ref(o, off),
                ArgVal::Value(val) => {
                    let ty = &f.locals[*v].ty;
                    let o = self.alloc_zero(ty);
                    self.store(o, 0, ty, &val);
                    Binding::Obj(o)
                }
            });
        }
        self.envs.push(env);
        self.fn_stack.push(fi);
        let flow = self.exec_block(&f.body)?;
        self.fn_stack.pop();
        self.envs.pop();
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Normal if f.ret == Type::Void => None,
            Flow::Normal => Some(zero_of(&f.ret)),
        })
    }

    fn exec_block(&mut self, stmts: &[TStmt]) -> Result<Flow, ExecError> {
        for s in stmts {
            if let Flow::Return(v) = self.exec(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &TStmt) -> Result<Flow, ExecError> {
        self.tick()?;
        match &s.kind {
            TStmtKind::Decl { var, init } => {
                let fi = *self.fn_stack.last().unwrap();
                let ty = self.prog.functions[fi].locals[*var].ty.clone();
                let o = match init {
                    DeclInit::Zero => self.alloc_zero(&ty),
                    DeclInit::Uninit => self.alloc_uninit(&ty, s.id),
                    DeclInit::Expr(e) => {
                        let v = self.eval(e)?;
                        let o = self.alloc_uninit(&ty, s.id);
                        self.store(o, 0, &ty, &v);
                        o
                    }
                };
                self.envs.last_mut().unwrap()[*var] = Some(Binding::Obj(o));
            }
            TStmtKind::Assign { place, value } => {
                let v = self.eval(value)?;
                if let Some((o, off)) = self.place(place)? {
                    self.store(o, off, &place.ty, &v);
                }
            }
            TStmtKind::If { cond, then, els } => {
                return if self.eval(cond)?.scalar() != 0 {
                    self.exec_block(then)
                } else {
                    self.exec_block(els)
                };
            }
            TStmtKind::While { cond, body, step } => {
                let restore = enter_iteration(&mut self.frames, s.id, 0);
                let mut i = 0;
                let flow = loop {
                    enter_iteration(&mut self.frames, s.id, i);
                    if self.eval(cond)?.scalar() == 0 {
                        break Flow::Normal;
                    }
                    if let Flow::Return(v) = self.exec_block(body)? {
                        break Flow::Return(v);
                    }
                    if let Flow::Return(v) = self.exec_block(step)? {
                        break Flow::Return(v);
                    }
                    i += 1;
                    self.tick()?;
                };
                leave_iteration(&mut self.frames, restore);
                return Ok(flow);
            }
            TStmtKind::Block(b) => return self.exec_block(b),
            TStmtKind::Return(v) => {
                let v = match v {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            TStmtKind::Expr(e) => {
                self.eval_any(e)?;
            }
            TStmtKind::Assume(c) => {
                if self.eval(c)?.scalar() == 0 {
                    return Err(ExecError::AssumeFailed(s.span));
                }
            }
            TStmtKind::Assert(c) => {
                if self.eval(c)?.scalar() == 0 {
                    return Err(ExecError::AssertionFailed(s.span));
                }
            }
            TStmtKind::IterScope {
                loop_id,
                iteration,
                body,
            } => {
                let restore = enter_iteration(&mut self.frames, *loop_id, *iteration);
                let flow = self.exec_block(body)?;
                leave_iteration(&mut self.frames, restore);
                return Ok(flow);
            }
            TStmtKind::UnwindEdge { cond, check, .. } => {
                if self.eval(cond)?.scalar() != 0 {
                    return Err(if *check {
                        ExecError::UnwindingAssertion(s.span)
                    } else {
                        ExecError::AssumeFailed(s.span)
                    });
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn eval(&mut self, e: &TExpr) -> Result<Val, ExecError> {
        let v = self.eval_any(e)?;
        Ok(v.unwrap_or(Val::Scalar(0)))
    }

    fn eval_any(&mut self, e: &TExpr) -> Result<Option<Val>, ExecError> {
        Ok(Some(match &e.kind {
            TExprKind::Const(v) => Val::Scalar(*v),
            TExprKind::Load(p) => match self.place(p)? {
                Some((o, off)) => self.load(o, off, &p.ty),
                None => zero_of(&p.ty),
            },
            TExprKind::Unary(op, a) => {
                let v = self.eval(a)?.scalar();
                let w = e.ty.value_bits();
                Val::Scalar(match op {
                    UnOp::Neg => truncate(v.wrapping_neg(), w),
                    UnOp::BitNot => truncate(!v, w),
                    UnOp::Not => (v == 0) as u64,
                })
            }
            TExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?.scalar();
                let b = self.eval(r)?.scalar();
                let (wop, swap) = word_op(*op, &l.ty);
                let (a, b) = if swap { (b, a) } else { (a, b) };
                Val::Scalar(eval_word_op(wop, a, b, l.ty.value_bits(), r.ty.value_bits()))
            }
            TExprKind::Logic(op, l, r) => {
                let a = self.eval(l)?.scalar() != 0;
                let v = match op {
                    Logic::And => a && self.eval(r)?.scalar() != 0,
                    Logic::Or => a || self.eval(r)?.scalar() != 0,
                };
                Val::Scalar(v as u64)
            }
            TExprKind::Cast(a) => {
                let v = self.eval(a)?;
                match v {
                    Val::Scalar(x) => Val::Scalar(convert_const(x, &a.ty, &e.ty)),
                    bytes => bytes,
                }
            }
            TExprKind::Input { id } => {
                if e.ty.is_scalar() {
                    let k = self.key(*id, 0, e.ty.value_bits());
                    Val::Scalar(self.source.choose(&k))
                } else {
                    let n = e.ty.size_bytes() as u32;
                    let bytes = (0..n)
                        .map(|i| {
                            let k = self.key(*id, i, 8);
                            self.source.choose(&k) as u8
                        })
                        .collect();
                    Val::Bytes(bytes)
                }
            }
            TExprKind::Call { id, callee, args } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(match a {
                        TArg::Value(v) => ArgVal::Value(self.eval(v)?),
                        TArg::Ref(p) => {
                            let (o, off) = self.place(p)?.expect("reference arguments have static offsets");
                            ArgVal::Ref(o, off)
                        }
                    });
                }
                return match callee {
                    Callee::User(fi) => {
                        self.frames.push(Frame::Call(*id));
                        let r = self.call(*fi, vals);
                        self.frames.pop();
                        r
                    }
                    Callee::Builtin(b) => self.builtin(*b, *id, vals, e.span).map(Some),
                };
            }
        }))
    }

    fn builtin(&mut self, b: Builtin, id: NodeId, args: Vec<ArgVal>, span: Span) -> Result<Val, ExecError> {
        let wrap = |source| ExecError::Builtin { span, source };
        let region = |a: &ArgVal| match a {
            ArgVal::Ref(o, off) => (*o, *off),
            ArgVal::Value(_) => unreachable!(),
        };
        let value = |a: &ArgVal| match a {
            ArgVal::Value(v) => v.scalar(),
            ArgVal::Ref(..) => unreachable!(),
        };
        let n = sign_extend(value(&args[2]), 32);
        let n = n.max(0) as u64;
        let (d, doff) = region(&args[0]);
        let dcap = self.objects[d].len() as u64 - doff;
        match b {
            Builtin::Memcmp => {
                let (s, soff) = region(&args[1]);
                let scap = self.objects[s].len() as u64 - soff;
                let a = self.prefix(d, doff, dcap, n);
                let c = self.prefix(s, soff, scap, n);
                let mut dom = ConcreteBytes { fresh: |_| 0 };
                let r = env::memcmp(&mut dom, &a, &c, n).map_err(wrap)?;
                Ok(Val::Scalar(truncate(r as u64, 32)))
            }
            Builtin::Memset => {
                let c = sign_extend(value(&args[1]), 32);
                let mut buf = vec![0u8; dcap as usize];
                let mut dom = ConcreteBytes { fresh: |_| 0 };
                env::memset(&mut dom, &mut buf, &c, n).map_err(wrap)?;
                self.write_bytes(d, doff, &buf[..n as usize]);
                Ok(Val::Scalar(0))
            }
            Builtin::Memcpy | Builtin::CopyToUser => {
                let (s, soff) = region(&args[1]);
                let scap = self.objects[s].len() as u64 - soff;
                if s == d && n > 0 && soff < doff + n && doff < soff + n {
                    return Err(wrap(BuiltinError::Overlap(b)));
                }
                let src = self.prefix(s, soff, scap, n);
                let mut buf = vec![0u8; dcap as usize];
                if b == Builtin::Memcpy {
                    env::memcpy::<ConcreteBytes<fn(u32) -> u8>>(&mut buf, &src, n).map_err(wrap)?;
                    self.write_bytes(d, doff, &buf[..n as usize]);
                    Ok(Val::Scalar(0))
                } else {
                    let align = self.prog.arch.align();
                    let pad = padding_bytes(n, align);
                    let fresh: Vec<u8> = (0..pad as u32)
                        .map(|i| {
                            let k = self.key(id, i, 8);
                            self.source.choose(&k) as u8
                        })
                        .collect();
                    let mut dom = ConcreteBytes {
                        fresh: |i: u32| fresh[i as usize],
                    };
                    let r = env::copy_to_user(&mut dom, &mut buf, &src, n, align).map_err(wrap)?;
                    self.write_bytes(d, doff, &buf[..(n + pad) as usize]);
                    Ok(Val::Scalar(truncate(r as u64, 32)))
                }
            }
        }
    }

    /// `cap` bytes of which only the first `n` are read.
    fn prefix(&mut self, o: usize, off: u64, cap: u64, n: u64) -> Vec<u8> {
        let mut v = self.read_bytes(o, off, n.min(cap));
        v.resize(cap as usize, 0);
        v
    }
}

fn zero_of(ty: &Type) -> Val {
    if ty.is_scalar() {
        Val::Scalar(0)
    } else {
        Val::Bytes(vec![0; ty.size_bytes() as usize])
    }
}
