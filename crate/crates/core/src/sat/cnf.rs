//! Literals, clause sets and DIMACS text.

use std::fmt::{self, Write as _};
use std::ops::Not;

/// A literal over 0-based variables: `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(d: i64) -> Option<Lit> {
        if d == 0 || d.unsigned_abs() > u32::MAX as u64 / 2 {
            return None;
        }
        Some(Lit::new(d.unsigned_abs() as u32 - 1, d < 0))
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    /// Named bits, written as `c map` comments.
    pub names: Vec<(String, Lit)>,
    /// Clauses from this index on encode the negated claim.
    pub claim_start: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DimacsError {
    #[error("line {0}: expected `p cnf <vars> <clauses>`")]
    Header(usize),
    #[error("line {line}: bad literal `{text}`")]
    Literal { line: usize, text: String },
    #[error("line {line}: variable {var} exceeds the declared {declared}")]
    VarRange { line: usize, var: u64, declared: u32 },
    #[error("declared {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("clause not terminated by 0")]
    Unterminated,
}

impl Cnf {
    pub fn new_var(&mut self) -> Lit {
        self.num_vars += 1;
        Lit::pos(self.num_vars - 1)
    }

    pub fn add_clause(&mut self, lits: Vec<Lit>) {
        debug_assert!(lits.iter().all(|l| l.var() < self.num_vars));
        self.clauses.push(lits);
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len()).unwrap();
        for c in &self.clauses {
            for l in c {
                write!(s, "{} ", l.to_dimacs()).unwrap();
            }
            s.push_str("0\n");
        }
        for (name, l) in &self.names {
            writeln!(s, "c map {} {}", name, l.to_dimacs()).unwrap();
        }
        s
    }

    pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
        let mut cnf = Cnf::default();
        let mut declared: Option<usize> = None;
        let mut cur = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('c') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("map") {
                    if let (Some(name), Some(l)) = (it.next(), it.next()) {
                        let lit =
                            l.parse::<i64>()
                                .ok()
                                .and_then(Lit::from_dimacs)
                                .ok_or_else(|| DimacsError::Literal {
                                    line: line_no,
                                    text: l.to_string(),
                                })?;
                        cnf.names.push((name.to_string(), lit));
                    }
                }
                continue;
            }
            if t.starts_with('p') {
                let f: Vec<&str> = t.split_whitespace().collect();
                if f.len() != 4 || f[1] != "cnf" {
                    return Err(DimacsError::Header(line_no));
                }
                cnf.num_vars = f[2].parse().map_err(|_| DimacsError::Header(line_no))?;
                declared = Some(f[3].parse().map_err(|_| DimacsError::Header(line_no))?);
                continue;
            }
            if declared.is_none() {
                return Err(DimacsError::Header(line_no));
            }
            for tok in t.split_whitespace() {
                let d: i64 = tok.parse().map_err(|_| DimacsError::Literal {
                    line: line_no,
                    text: tok.to_string(),
                })?;
                if d == 0 {
                    cnf.clauses.push(std::mem::take(&mut cur));
                    continue;
                }
                if d.unsigned_abs() > cnf.num_vars as u64 {
                    return Err(DimacsError::VarRange {
                        line: line_no,
                        var: d.unsigned_abs(),
                        declared: cnf.num_vars,
                    });
                }
                cur.push(Lit::from_dimacs(d).unwrap());
            }
        }
        if !cur.is_empty() {
            return Err(DimacsError::Unterminated);
        }
        let declared = declared.ok_or(DimacsError::Header(0))?;
        if declared != cnf.clauses.len() {
            return Err(DimacsError::ClauseCount {
                declared,
                found: cnf.clauses.len(),
            });
        }
        Ok(cnf)
    }

    /// Whether `model` (indexed by variable) satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model[l.var() as usize] != l.is_negated()))
    }
}
