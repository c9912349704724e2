use std::collections::HashSet;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{ParseError, BUILTIN_TYPE_ALIASES};

/// Parse a source unit into a syntax tree. Pragma lines are recorded on the
/// unit as a side product of lexing; see [`parse_source`].
pub fn parse(source: &SourceUnit) -> Result<Ast, ParseError> {
    parse_text(&source.text).map(|(ast, _)| ast)
}

/// Lex and parse `text`, returning the tree and the pragma lines found.
pub fn parse_text(text: &str) -> Result<(Ast, Vec<Pragma>), ParseError> {
    let (toks, pragmas) = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        typedefs: BUILTIN_TYPE_ALIASES.iter().map(|(n, ..)| n.to_string()).collect(),
    };
    let ast = p.program()?;
    Ok((ast, pragmas))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    typedefs: HashSet<String>,
}

const INT_WORDS: &[&str] = &["signed", "unsigned", "char", "short", "int", "long"];
const QUALIFIERS: &[&str] = &["const", "static", "volatile", "inline"];

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError::new(
            self.span(),
            expected.iter().map(|s| s.to_string()).collect(),
            self.peek().describe(),
        ))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            let exp = format!("`{}`", p);
            self.error(&[exp.as_str()])
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn expect_int(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int { value, .. } => {
                self.bump();
                Ok(value)
            }
            _ => self.error(&["integer literal"]),
        }
    }

    fn starts_type_at(&self, n: usize) -> bool {
        match self.peek_at(n) {
            Tok::Ident(s) => {
                INT_WORDS.contains(&s.as_str())
                    || QUALIFIERS.contains(&s.as_str())
                    || matches!(s.as_str(), "void" | "_Bool" | "bool" | "struct")
                    || self.typedefs.contains(s)
            }
            _ => false,
        }
    }

    fn skip_qualifiers(&mut self) {
        while matches!(self.peek(), Tok::Ident(s) if QUALIFIERS.contains(&s.as_str())) {
            self.bump();
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        self.skip_qualifiers();
        let word = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.error(&["type"]),
        };
        let ty = match word.as_str() {
            "void" => {
                self.bump();
                TypeName::Void
            }
            "_Bool" | "bool" => {
                self.bump();
                TypeName::Bool
            }
            "struct" => {
                self.bump();
                let (name, _) = self.expect_ident()?;
                TypeName::Struct(name)
            }
            w if INT_WORDS.contains(&w) => self.int_type()?,
            w if self.typedefs.contains(w) => {
                self.bump();
                TypeName::Named(word)
            }
            _ => return self.error(&["type"]),
        };
        self.skip_qualifiers();
        Ok(ty)
    }

    fn int_type(&mut self) -> PResult<TypeName> {
        let mut sign = Sign::Default;
        let (mut chars, mut shorts, mut ints, mut longs) = (0, 0, 0, 0);
        let start = self.span();
        loop {
            match self.peek() {
                Tok::Ident(s) if s == "signed" && sign == Sign::Default => sign = Sign::Signed,
                Tok::Ident(s) if s == "unsigned" && sign == Sign::Default => sign = Sign::Unsigned,
                Tok::Ident(s) if s == "char" => chars += 1,
                Tok::Ident(s) if s == "short" => shorts += 1,
                Tok::Ident(s) if s == "int" => ints += 1,
                Tok::Ident(s) if s == "long" => longs += 1,
                Tok::Ident(s) if QUALIFIERS.contains(&s.as_str()) => {}
                _ => break,
            }
            self.bump();
        }
        let base = match (chars, shorts, ints, longs) {
            (1, 0, 0, 0) => IntBase::Char,
            (0, 1, 0 | 1, 0) => IntBase::Short,
            (0, 0, 0 | 1, 0) => IntBase::Int,
            (0, 0, 0 | 1, 1) => IntBase::Long,
            (0, 0, 0 | 1, 2) => IntBase::LongLong,
            _ => {
                return Err(ParseError::new(
                    start,
                    vec!["valid integer type".into()],
                    "conflicting type specifiers".into(),
                ))
            }
        };
        Ok(TypeName::Int { sign, base })
    }

    fn program(&mut self) -> PResult<Ast> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.push(self.item()?);
        }
        Ok(Ast { items })
    }

    fn item(&mut self) -> PResult<Item> {
        let span = self.span();
        if self.is_ident("typedef") {
            self.bump();
            let ty = self.type_name()?;
            let (name, _) = self.expect_ident()?;
            self.expect_punct(";")?;
            self.typedefs.insert(name.clone());
            return Ok(Item::Typedef { ty, name, span });
        }
        self.skip_qualifiers();
        if self.is_ident("struct")
            && matches!(self.peek_at(1), Tok::Ident(_))
            && matches!(self.peek_at(2), Tok::Punct("{"))
        {
            self.bump();
            let (name, _) = self.expect_ident()?;
            self.expect_punct("{")?;
            let mut fields = Vec::new();
            while !self.is_punct("}") {
                let ty = self.type_name()?;
                loop {
                    let (fname, fspan) = self.expect_ident()?;
                    let dims = self.dims()?;
                    fields.push(FieldDecl {
                        ty: ty.clone(),
                        name: fname,
                        dims,
                        span: fspan,
                    });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
            }
            self.expect_punct("}")?;
            self.expect_punct(";")?;
            return Ok(Item::Struct(StructDef { name, fields, span }));
        }
        if !self.starts_type_at(0) {
            return self.error(&["`typedef`", "`struct`", "function definition"]);
        }
        let ret = self.type_name()?;
        let (name, span) = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.bump();
        }
        if !self.is_punct(")") {
            loop {
                let ty = self.type_name()?;
                let pointer = self.eat_punct("*");
                self.skip_qualifiers();
                let (pname, pspan) = self.expect_ident()?;
                params.push(Param {
                    ty,
                    name: pname,
                    pointer,
                    span: pspan,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        Ok(Item::Function(FunctionDef {
            ret,
            name,
            params,
            body,
            span,
        }))
    }

    fn dims(&mut self) -> PResult<Vec<u64>> {
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            dims.push(self.expect_int()?);
            self.expect_punct("]")?;
        }
        Ok(dims)
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.error(&["`}`", "statement"]);
            }
            self.stmt_into(&mut stmts)?;
        }
        self.bump();
        Ok(Block { stmts })
    }

    /// A statement used as an `if`/loop body: braces optional.
    fn body(&mut self) -> PResult<Block> {
        if self.is_punct("{") {
            self.block()
        } else {
            let mut stmts = Vec::new();
            self.stmt_into(&mut stmts)?;
            Ok(Block { stmts })
        }
    }

    fn stmt_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Punct("{") => {
                let b = self.block()?;
                out.push(Stmt::Block(b));
            }
            Tok::Punct(";") => {
                self.bump();
            }
            Tok::Ident(w) if w == "if" => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then = self.body()?;
                let els = if self.is_ident("else") {
                    self.bump();
                    Some(self.body()?)
                } else {
                    None
                };
                out.push(Stmt::If { cond, then, els, span });
            }
            Tok::Ident(w) if w == "while" => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let body = self.body()?;
                out.push(Stmt::While { cond, body, span });
            }
            Tok::Ident(w) if w == "for" => {
                self.bump();
                self.expect_punct("(")?;
                let init = if self.is_punct(";") {
                    None
                } else {
                    let mut v = Vec::new();
                    self.simple_stmt(&mut v)?;
                    if v.len() != 1 {
                        return self.error(&["single declaration or assignment"]);
                    }
                    v.pop().map(Box::new)
                };
                self.expect_punct(";")?;
                let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect_punct(";")?;
                let step = if self.is_punct(")") {
                    None
                } else {
                    let mut v = Vec::new();
                    self.simple_stmt(&mut v)?;
                    v.pop().map(Box::new)
                };
                self.expect_punct(")")?;
                let body = self.body()?;
                out.push(Stmt::For {
                    init,
                    cond,
                    step,
                    body,
                    span,
                });
            }
            Tok::Ident(w) if w == "return" => {
                self.bump();
                let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect_punct(";")?;
                out.push(Stmt::Return { value, span });
            }
            Tok::Ident(w) if (w == "assume" || w == "assert") && matches!(self.peek_at(1), Tok::Punct("(")) => {
                self.bump();
                self.bump();
                let cond = self.expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                out.push(if w == "assume" {
                    Stmt::Assume { cond, span }
                } else {
                    Stmt::Assert { cond, span }
                });
            }
            _ => {
                self.simple_stmt(out)?;
                self.expect_punct(";")?;
            }
        }
        Ok(())
    }

    /// Declaration, assignment, increment or expression statement, without
    /// the terminating `;`.
    fn simple_stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let span = self.span();
        if self.starts_type_at(0) && !matches!(self.peek_at(1), Tok::Punct("(")) || self.is_ident("struct") {
            let ty = self.type_name()?;
            loop {
                let (name, dspan) = self.expect_ident()?;
                let dims = self.dims()?;
                let init = if self.eat_punct("=") {
                    if self.is_punct("{") {
                        self.bump();
                        if self.expect_int()? != 0 {
                            return Err(ParseError::new(
                                dspan,
                                vec!["`{0}`".into()],
                                "non-zero aggregate initializer".into(),
                            ));
                        }
                        self.expect_punct("}")?;
                        Some(Init::Zero)
                    } else {
                        Some(Init::Expr(self.expr()?))
                    }
                } else {
                    None
                };
                out.push(Stmt::Decl {
                    ty: ty.clone(),
                    name,
                    dims,
                    init,
                    span: dspan,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
            return Ok(());
        }
        let target = self.expr()?;
        let compound = match self.peek() {
            Tok::Punct("=") => None,
            Tok::Punct("+=") => Some(BinOp::Add),
            Tok::Punct("-=") => Some(BinOp::Sub),
            Tok::Punct("*=") => Some(BinOp::Mul),
            Tok::Punct("/=") => Some(BinOp::Div),
            Tok::Punct("%=") => Some(BinOp::Rem),
            Tok::Punct("&=") => Some(BinOp::BitAnd),
            Tok::Punct("|=") => Some(BinOp::BitOr),
            Tok::Punct("^=") => Some(BinOp::BitXor),
            Tok::Punct("<<=") => Some(BinOp::Shl),
            Tok::Punct(">>=") => Some(BinOp::Shr),
            Tok::Punct("++") | Tok::Punct("--") => {
                let op = if self.is_punct("++") { BinOp::Add } else { BinOp::Sub };
                let ospan = self.bump().span;
                self.check_lvalue(&target)?;
                let one = Expr::new(
                    ExprKind::Int(IntLit {
                        value: 1,
                        hex: false,
                        unsigned: false,
                        longs: 0,
                    }),
                    ospan,
                );
                let value = Expr::new(ExprKind::Binary(op, Box::new(target.clone()), Box::new(one)), ospan);
                out.push(Stmt::Assign { target, value, span });
                return Ok(());
            }
            _ => {
                out.push(Stmt::Expr { expr: target, span });
                return Ok(());
            }
        };
        let ospan = self.bump().span;
        self.check_lvalue(&target)?;
        let rhs = self.expr()?;
        let value = match compound {
            None => rhs,
            Some(op) => Expr::new(ExprKind::Binary(op, Box::new(target.clone()), Box::new(rhs)), ospan),
        };
        out.push(Stmt::Assign { target, value, span });
        Ok(())
    }

    fn check_lvalue(&self, e: &Expr) -> PResult<()> {
        match &e.kind {
            ExprKind::Var(_) | ExprKind::Field(..) | ExprKind::Arrow(..) | ExprKind::Index(..) | ExprKind::Deref(_) => {
                Ok(())
            }
            _ => Err(ParseError::new(
                e.span,
                vec!["assignable expression".into()],
                "non-lvalue".into(),
            )),
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop_here(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct("*") => BinOp::Mul,
            Tok::Punct("/") => BinOp::Div,
            Tok::Punct("%") => BinOp::Rem,
            Tok::Punct("+") => BinOp::Add,
            Tok::Punct("-") => BinOp::Sub,
            Tok::Punct("<<") => BinOp::Shl,
            Tok::Punct(">>") => BinOp::Shr,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("&") => BinOp::BitAnd,
            Tok::Punct("^") => BinOp::BitXor,
            Tok::Punct("|") => BinOp::BitOr,
            Tok::Punct("&&") => BinOp::And,
            Tok::Punct("||") => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop_here() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.bump().span;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let un = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("!") => Some(UnOp::Not),
            _ => None,
        };
        if let Some(op) = un {
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), span));
        }
        if self.eat_punct("*") {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Deref(Box::new(e)), span));
        }
        if self.eat_punct("&") {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::AddrOf(Box::new(e)), span));
        }
        if self.is_ident("sizeof") {
            self.bump();
            if self.is_punct("(") && self.starts_type_at(1) {
                self.bump();
                let ty = self.type_name()?;
                self.expect_punct(")")?;
                return Ok(Expr::new(ExprKind::SizeofType(ty), span));
            }
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::SizeofExpr(Box::new(e)), span));
        }
        if self.is_punct("(") && self.starts_type_at(1) {
            self.bump();
            let ty = self.type_name()?;
            self.expect_punct(")")?;
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Cast(ty, Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat_punct(".") {
                let (f, _) = self.expect_ident()?;
                e = Expr::new(ExprKind::Field(Box::new(e), f), span);
            } else if self.eat_punct("->") {
                let (f, _) = self.expect_ident()?;
                e = Expr::new(ExprKind::Arrow(Box::new(e), f), span);
            } else if self.eat_punct("[") {
                let idx = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int {
                value,
                hex,
                unsigned,
                longs,
            } => {
                self.bump();
                Ok(Expr::new(
                    ExprKind::Int(IntLit {
                        value,
                        hex,
                        unsigned,
                        longs,
                    }),
                    span,
                ))
            }
            Tok::Ident(name) if !is_reserved(&name) => {
                self.bump();
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    if name == "input" {
                        if !args.is_empty() {
                            return Err(ParseError::new(span, vec!["`input()`".into()], "arguments".into()));
                        }
                        return Ok(Expr::new(ExprKind::Input, span));
                    }
                    Ok(Expr::new(ExprKind::Call(name, args), span))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), span))
                }
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.error(&["expression"]),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "if" | "else"
            | "while"
            | "for"
            | "return"
            | "typedef"
            | "struct"
            | "sizeof"
            | "void"
            | "char"
            | "short"
            | "int"
            | "long"
            | "signed"
            | "unsigned"
            | "_Bool"
            | "bool"
            | "const"
            | "static"
            | "volatile"
            | "inline"
            | "goto"
            | "union"
            | "break"
            | "continue"
            | "do"
            | "switch"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<Ast, ParseError> {
        parse_text(s).map(|(a, _)| a)
    }

    #[test]
    fn modulo_assignment_shape() {
        let ast = parse_str("int f(int h, int l) { int o; o = (h % 4) + l; return o; }").unwrap();
        let f = ast.function("f").unwrap();
        match &f.body.stmts[1] {
            Stmt::Assign { value, .. } => match &value.kind {
                ExprKind::Binary(BinOp::Add, lhs, _) => {
                    assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::Rem, _, _)))
                }
                other => panic!("unexpected {:?}", other),
            },
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn empty_body() {
        let ast = parse_str("int f(){ }").unwrap();
        assert!(ast.function("f").unwrap().body.stmts.is_empty());
    }

    #[test]
    fn truncated_if_reports_end_of_input() {
        let err = parse_str("if (").unwrap_err();
        assert_eq!(err.found, "identifier `if`".to_string());
        let err = parse_str("int f() { if (").unwrap_err();
        assert_eq!(err.found, "end of input");
        assert_eq!(err.span.line, 1);
        assert!(err.expected.iter().any(|e| e == "expression"));
    }

    #[test]
    fn precedence_and_casts() {
        let ast =
            parse_str("typedef long long loff_t; int f(loff_t p) { return (int)p + 1 << 2 == 3 && !p; }").unwrap();
        let f = ast.function("f").unwrap();
        let Stmt::Return { value: Some(e), .. } = &f.body.stmts[0] else {
            panic!()
        };
        assert!(matches!(e.kind, ExprKind::Binary(BinOp::And, _, _)));
    }

    #[test]
    fn compound_assignment_desugars() {
        let a = parse_str("int f(int x) { x += 2; x++; return x; }").unwrap();
        let b = parse_str("int f(int x) { x = x + 2; x = x + 1; return x; }").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn struct_and_pointer_params() {
        let ast = parse_str(
            "struct s { unsigned char a, b; int c[2]; };
             void g(struct s *out, int v) { out->c[1] = v; (*out).a = 1; }",
        )
        .unwrap();
        assert_eq!(ast.items.len(), 2);
        let Item::Struct(s) = &ast.items[0] else { panic!() };
        assert_eq!(s.fields.len(), 3);
        assert_eq!(s.fields[2].dims, vec![2]);
        assert!(ast.function("g").unwrap().params[0].pointer);
    }
}
