//! Source printer. Output re-parses to an equal [`Ast`] and is also valid C
//! for everything except `input()`, `assume` and `assert`, which the driver
//! emitter maps onto stubs.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(ast: &Ast) -> String {
    let mut p = Printer::default();
    for (i, item) in ast.items.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.item(item);
    }
    p.out
}

pub fn print_type(ty: &TypeName) -> String {
    match ty {
        TypeName::Void => "void".into(),
        TypeName::Bool => "_Bool".into(),
        TypeName::Int { sign, base } => {
            let s = match sign {
                Sign::Default => "",
                Sign::Signed => "signed ",
                Sign::Unsigned => "unsigned ",
            };
            let b = match base {
                IntBase::Char => "char",
                IntBase::Short => "short",
                IntBase::Int => "int",
                IntBase::Long => "long",
                IntBase::LongLong => "long long",
            };
            format!("{}{}", s, b)
        }
        TypeName::Struct(n) => format!("struct {}", n),
        TypeName::Named(n) => n.clone(),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e);
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Typedef { ty, name, .. } => {
                self.line(&format!("typedef {} {};", print_type(ty), name));
            }
            Item::Struct(s) => {
                self.line(&format!("struct {} {{", s.name));
                self.indent += 1;
                for f in &s.fields {
                    self.line(&format!("{} {}{};", print_type(&f.ty), f.name, dims(&f.dims)));
                }
                self.indent -= 1;
                self.line("};");
            }
            Item::Function(f) => {
                let params = if f.params.is_empty() {
                    "void".to_string()
                } else {
                    f.params
                        .iter()
                        .map(|p| format!("{} {}{}", print_type(&p.ty), if p.pointer { "*" } else { "" }, p.name))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                self.line(&format!("{} {}({}) {{", print_type(&f.ret), f.name, params));
                self.indent += 1;
                for s in &f.body.stmts {
                    self.stmt(s);
                }
                self.indent -= 1;
                self.line("}");
            }
        }
    }

    fn block_body(&mut self, b: &Block) {
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn simple(&self, s: &Stmt) -> String {
        match s {
            Stmt::Decl {
                ty,
                name,
                dims: d,
                init,
                ..
            } => {
                let init = match init {
                    None => String::new(),
                    Some(Init::Zero) => " = {0}".into(),
                    Some(Init::Expr(e)) => format!(" = {}", print_expr(e)),
                };
                format!("{} {}{}{}", print_type(ty), name, dims(d), init)
            }
            Stmt::Assign { target, value, .. } => {
                format!("{} = {}", print_expr(target), print_expr(value))
            }
            Stmt::Expr { expr, .. } => print_expr(expr),
            other => unreachable!("not a simple statement: {:?}", other),
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Decl { .. } | Stmt::Assign { .. } | Stmt::Expr { .. } => {
                let t = self.simple(s);
                self.line(&format!("{};", t));
            }
            Stmt::If { cond, then, els, .. } => {
                self.line(&format!("if ({}) {{", print_expr(cond)));
                self.block_body(then);
                match els {
                    Some(e) => {
                        self.line("} else {");
                        self.block_body(e);
                        self.line("}");
                    }
                    None => self.line("}"),
                }
            }
            Stmt::While { cond, body, .. } => {
                self.line(&format!("while ({}) {{", print_expr(cond)));
                self.block_body(body);
                self.line("}");
            }
            Stmt::For {
                init, cond, step, body, ..
            } => {
                let i = init.as_ref().map(|s| self.simple(s)).unwrap_or_default();
                let c = cond.as_ref().map(print_expr).unwrap_or_default();
                let st = step.as_ref().map(|s| self.simple(s)).unwrap_or_default();
                self.line(&format!("for ({}; {}; {}) {{", i, c, st));
                self.block_body(body);
                self.line("}");
            }
            Stmt::Return { value, .. } => match value {
                Some(v) => self.line(&format!("return {};", print_expr(v))),
                None => self.line("return;"),
            },
            Stmt::Block(b) => {
                self.line("{");
                self.block_body(b);
                self.line("}");
            }
            Stmt::Assume { cond, .. } => self.line(&format!("assume({});", print_expr(cond))),
            Stmt::Assert { cond, .. } => self.line(&format!("assert({});", print_expr(cond))),
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Int(lit) => {
                if lit.hex {
                    write!(self.out, "{:#x}", lit.value).unwrap();
                } else {
                    write!(self.out, "{}", lit.value).unwrap();
                }
                if lit.unsigned {
                    self.out.push('u');
                }
                for _ in 0..lit.longs {
                    self.out.push('L');
                }
            }
            ExprKind::Var(n) => self.out.push_str(n),
            ExprKind::Field(b, f) => {
                self.postfix_operand(b);
                write!(self.out, ".{}", f).unwrap();
            }
            ExprKind::Arrow(b, f) => {
                self.postfix_operand(b);
                write!(self.out, "->{}", f).unwrap();
            }
            ExprKind::Index(b, i) => {
                self.postfix_operand(b);
                self.out.push('[');
                self.expr(i);
                self.out.push(']');
            }
            ExprKind::Deref(b) => {
                self.out.push('*');
                self.unary_operand(b);
            }
            ExprKind::AddrOf(b) => {
                self.out.push('&');
                self.unary_operand(b);
            }
            ExprKind::Unary(op, b) => {
                self.out.push(match op {
                    UnOp::Neg => '-',
                    UnOp::BitNot => '~',
                    UnOp::Not => '!',
                });
                self.unary_operand(b);
            }
            ExprKind::Binary(op, l, r) => {
                let prec = op.precedence();
                self.binary_operand(l, prec, false);
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.binary_operand(r, prec, true);
            }
            ExprKind::Cast(t, b) => {
                write!(self.out, "({})", print_type(t)).unwrap();
                self.unary_operand(b);
            }
            ExprKind::Call(name, args) => {
                self.out.push_str(name);
                self.out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(a);
                }
                self.out.push(')');
            }
            ExprKind::SizeofType(t) => write!(self.out, "sizeof({})", print_type(t)).unwrap(),
            ExprKind::SizeofExpr(b) => {
                self.out.push_str("sizeof(");
                self.expr(b);
                self.out.push(')');
            }
            ExprKind::Input => self.out.push_str("input()"),
        }
    }

    fn is_postfix_or_primary(e: &Expr) -> bool {
        matches!(
            e.kind,
            ExprKind::Int(_)
                | ExprKind::Var(_)
                | ExprKind::Field(..)
                | ExprKind::Arrow(..)
                | ExprKind::Index(..)
                | ExprKind::Call(..)
                | ExprKind::Input
                | ExprKind::SizeofType(_)
                | ExprKind::SizeofExpr(_)
        )
    }

    fn postfix_operand(&mut self, e: &Expr) {
        if Self::is_postfix_or_primary(e) {
            self.expr(e);
        } else {
            self.paren(e);
        }
    }

    fn unary_operand(&mut self, e: &Expr) {
        self.postfix_operand(e)
    }

    fn binary_operand(&mut self, e: &Expr, parent: u8, right: bool) {
        let needs = match &e.kind {
            ExprKind::Binary(op, ..) => {
                let p = op.precedence();
                p < parent || (right && p == parent)
            }
            _ => false,
        };
        if needs {
            self.paren(e);
        } else {
            self.expr(e);
        }
    }

    fn paren(&mut self, e: &Expr) {
        self.out.push('(');
        self.expr(e);
        self.out.push(')');
    }
}

fn dims(d: &[u64]) -> String {
    d.iter().map(|n| format!("[{}]", n)).collect()
}
