use super::ast::{Pragma, PragmaRole, Span};
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int {
        value: u64,
        hex: bool,
        unsigned: bool,
        longs: u8,
    },
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Int { value, .. } => format!("integer `{}`", value),
            Tok::Punct(p) => format!("`{}`", p),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "(", ")", "{", "}", "[", "]", ";", ",", ".", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<",
    ">", "=",
];

pub fn lex(text: &str) -> Result<(Vec<Token>, Vec<Pragma>), ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut pragmas = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut at_line_start = true;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                    at_line_start = true;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            advance!(1);
            continue;
        }
        if c.is_ascii_whitespace() {
            advance!(1);
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let (sl, sc) = (line, col);
            advance!(2);
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::new(
                        Span { line: sl, col: sc },
                        vec!["`*/`".into()],
                        "end of input".into(),
                    ));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    advance!(2);
                    break;
                }
                advance!(1);
            }
            continue;
        }
        let span = Span { line, col };
        if c == b'#' {
            if !at_line_start {
                return Err(ParseError::new(span, vec!["token".into()], "`#`".into()));
            }
            let start = i;
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            let directive = &text[start..i];
            pragmas.push(parse_pragma(directive, span)?);
            continue;
        }
        at_line_start = false;
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                advance!(1);
            }
            toks.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let hex = c == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X'));
            if hex {
                advance!(2);
                while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                    advance!(1);
                }
            } else {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    advance!(1);
                }
            }
            let digits = &text[start..i];
            let value = if hex {
                u64::from_str_radix(&digits[2..], 16)
            } else {
                digits.parse::<u64>()
            }
            .map_err(|_| ParseError::new(span, vec!["integer literal".into()], format!("`{}`", digits)))?;
            let (mut unsigned, mut longs) = (false, 0u8);
            while i < bytes.len() {
                match bytes[i] {
                    b'u' | b'U' if !unsigned => unsigned = true,
                    b'l' | b'L' if longs < 2 => longs += 1,
                    _ => break,
                }
                advance!(1);
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                return Err(ParseError::new(
                    Span { line, col },
                    vec!["integer suffix".into()],
                    format!("`{}`", bytes[i] as char),
                ));
            }
            toks.push(Token {
                tok: Tok::Int {
                    value,
                    hex,
                    unsigned,
                    longs,
                },
                span,
            });
            continue;
        }
        if c == b'\'' {
            let (value, len) = match (bytes.get(i + 1), bytes.get(i + 2), bytes.get(i + 3)) {
                (Some(b'\\'), Some(e), Some(b'\'')) => {
                    let v = match e {
                        b'n' => b'\n',
                        b't' => b'\t',
                        b'0' => 0,
                        b'\\' => b'\\',
                        b'\'' => b'\'',
                        _ => {
                            return Err(ParseError::new(
                                span,
                                vec!["escape sequence".into()],
                                format!("`\\{}`", *e as char),
                            ))
                        }
                    };
                    (v, 4)
                }
                (Some(ch), Some(b'\''), _) if *ch != b'\\' => (*ch, 3),
                _ => return Err(ParseError::new(span, vec!["character literal".into()], "`'`".into())),
            };
            advance!(len);
            toks.push(Token {
                tok: Tok::Int {
                    value: value as u64,
                    hex: false,
                    unsigned: false,
                    longs: 0,
                },
                span,
            });
            continue;
        }
        let rest = &text[i..];
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                advance!(p.len());
                toks.push(Token {
                    tok: Tok::Punct(p),
                    span,
                });
            }
            None => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(ParseError::new(span, vec!["token".into()], format!("`{}`", ch)));
            }
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok((toks, pragmas))
}

fn parse_pragma(directive: &str, span: Span) -> Result<Pragma, ParseError> {
    let words: Vec<&str> = directive[1..].split_whitespace().collect();
    let err = |found: &str| {
        ParseError::new(
            span,
            vec!["`#pragma leak high|low|observe <ident>`".into()],
            format!("`{}`", found),
        )
    };
    match words.as_slice() {
        ["pragma", "leak", role, ident] => {
            let role = match *role {
                "high" => PragmaRole::High,
                "low" => PragmaRole::Low,
                "observe" => PragmaRole::Observe,
                _ => return Err(err(directive.trim())),
            };
            let valid = ident
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && ident.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(err(ident));
            }
            Ok(Pragma {
                role,
                ident: ident.to_string(),
                line: span.line,
            })
        }
        _ => Err(err(directive.trim())),
    }
}
