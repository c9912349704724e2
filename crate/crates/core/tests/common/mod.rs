//! Random well-typed mini-C programs and helpers shared by the
//! differential tests.
#![allow(dead_code)]

pub mod checks;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use leakbound_core::nondet::{NondetKey, NondetSource};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

/// Nondeterministic choices derived from a hash of the key, so that the
/// interpreter and the SSA evaluator see the same value for the same key.
pub struct KeyHash(pub u64);

impl NondetSource for KeyHash {
    fn choose(&mut self, key: &NondetKey) -> u64 {
        let mut h = DefaultHasher::new();
        self.0.hash(&mut h);
        key.hash(&mut h);
        let v = h.finish();
        let v = match v % 4 {
            0 => 0,
            1 => u64::MAX,
            _ => v,
        };
        v & leakbound_core::bits::mask(key.width)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    U8,
    S8,
    U16,
    S32,
    U32,
    S64,
    Bool,
}

const SCALARS: [(&str, Ty); 7] = [
    ("a", Ty::U8),
    ("b", Ty::S8),
    ("c", Ty::U16),
    ("d", Ty::S32),
    ("t", Ty::U32),
    ("w", Ty::S64),
    ("flag", Ty::Bool),
];

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    /// Readable scalar places in the current function.
    reads: Vec<(String, Ty)>,
    /// Assignable places.
    writes: Vec<(String, Ty)>,
    in_helper: bool,
    loop_depth: u32,
    loop_vars: Vec<&'static str>,
}

impl Gen<'_> {
    fn literal(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => "0".into(),
            1 => "1".into(),
            2 => format!("{}", self.rng.gen_range(0..300)),
            3 => format!("0x{:x}", self.rng.gen::<u32>()),
            4 => format!("{}u", self.rng.gen_range(0..70000)),
            _ => format!("-{}", self.rng.gen_range(1..200)),
        }
    }

    fn leaf(&mut self) -> String {
        if self.rng.gen_bool(0.3) || self.reads.is_empty() {
            return self.literal();
        }
        let (n, _) = self.reads.choose(self.rng).unwrap().clone();
        n
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..14) {
            0..=5 => {
                let op = ["+", "-", "&", "|", "^", "==", "!=", "<", "<=", ">", ">=", "&&", "||"]
                    .choose(self.rng)
                    .unwrap();
                format!("({} {} {})", self.expr(d), op, self.expr(d))
            }
            6 => format!("({} * {})", self.expr(d), self.rng.gen_range(0..40)),
            7 => {
                let op = ["/", "%"].choose(self.rng).unwrap();
                let k = *[1, 2, 3, 7, 255, -3].choose(self.rng).unwrap();
                format!("({} {} {})", self.expr(d), op, k)
            }
            8 => {
                let op = ["<<", ">>"].choose(self.rng).unwrap();
                if self.rng.gen_bool(0.5) {
                    format!("({} {} {})", self.expr(d), op, self.rng.gen_range(0..40))
                } else {
                    format!("({} {} ({} & 31))", self.expr(d), op, self.expr(d))
                }
            }
            9 => {
                let op = ["-", "~", "!"].choose(self.rng).unwrap();
                format!("{}({})", op, self.expr(d))
            }
            10 => {
                let ty = [
                    "unsigned char",
                    "signed char",
                    "short",
                    "unsigned int",
                    "long long",
                    "_Bool",
                ]
                .choose(self.rng)
                .unwrap();
                format!("(({}){})", ty, self.expr(d))
            }
            11 if !self.in_helper => self.dynamic_index(d),
            12 if !self.in_helper => format!("arr[({}) & 3]", self.expr(d)),
            _ => self.leaf(),
        }
    }

    /// Index that is never a compile-time constant, so it may be out of bounds.
    fn dynamic_index(&mut self, depth: u32) -> String {
        let v = ["a", "b", "d", "t"].choose(self.rng).unwrap();
        format!("arr[{} - {}]", v, self.expr(depth))
    }

    fn cond(&mut self) -> String {
        self.expr(2)
    }

    fn place(&mut self) -> String {
        if !self.in_helper && self.rng.gen_bool(0.2) {
            return self.dynamic_index(1);
        }
        self.writes.choose(self.rng).unwrap().0.clone()
    }

    fn stmt(&mut self, depth: u32, out: &mut String, indent: usize) {
        let pad = " ".repeat(indent);
        let choice = self.rng.gen_range(0..20);
        match choice {
            0..=7 => {
                let p = self.place();
                let e = self.expr(3);
                let op = ["=", "=", "=", "+=", "^=", "|="].choose(self.rng).unwrap();
                out.push_str(&format!("{}{} {} {};\n", pad, p, op, e));
            }
            8..=10 if depth > 0 => {
                let c = self.cond();
                out.push_str(&format!("{}if ({}) {{\n", pad, c));
                self.block(depth - 1, out, indent + 4);
                if self.rng.gen_bool(0.5) {
                    out.push_str(&format!("{}}} else {{\n", pad));
                    self.block(depth - 1, out, indent + 4);
                }
                out.push_str(&format!("{}}}\n", pad));
            }
            11 | 12 if depth > 0 && !self.loop_vars.is_empty() => {
                let v = self.loop_vars.remove(0);
                let k = self.rng.gen_range(0..4);
                out.push_str(&format!("{}for ({} = 0; {} < {}; {}++) {{\n", pad, v, v, k, v));
                self.reads.push((v.to_string(), Ty::S32));
                self.loop_depth += 1;
                self.block(depth - 1, out, indent + 4);
                self.loop_depth -= 1;
                out.push_str(&format!("{}}}\n", pad));
            }
            13 if depth < 2 => {
                let e = self.expr(2);
                out.push_str(&format!("{}return {};\n", pad, e));
            }
            14 if !self.in_helper => {
                let p = self.place();
                out.push_str(&format!("{}{} = input();\n", pad, p));
            }
            15 | 16 if !self.in_helper => {
                let p = self
                    .writes
                    .iter()
                    .filter(|(_, t)| *t != Ty::Bool)
                    .map(|x| x.0.clone())
                    .collect::<Vec<_>>();
                let p = p.choose(self.rng).unwrap().clone();
                let e = self.expr(2);
                let rec = if self.rng.gen_bool(0.5) { "&s" } else { "out" };
                let q = ["&arr[0]", "&arr[3]", "&a"].choose(self.rng).unwrap();
                out.push_str(&format!("{}{} = helper({}, {}, {});\n", pad, p, e, rec, q));
            }
            17 if !self.in_helper => {
                let stmt = match self.rng.gen_range(0..5) {
                    0 => "memcpy(out, &s, sizeof(s));".to_string(),
                    1 => format!("memset(&arr, {}, {});", self.expr(1), self.rng.gen_range(0..5)),
                    2 => "copy_to_user(out, &s, sizeof(s));".to_string(),
                    3 => format!("t = memcmp(&arr, &s, {});", self.rng.gen_range(0..5)),
                    _ => "memcpy(&s.y, &arr[1], 2);".to_string(),
                };
                out.push_str(&format!("{}{}\n", pad, stmt));
            }
            _ => {
                let p = self.place();
                let e = self.expr(1);
                out.push_str(&format!("{}{} = {};\n", pad, p, e));
            }
        }
    }

    fn block(&mut self, depth: u32, out: &mut String, indent: usize) {
        let n = self.rng.gen_range(1..4);
        for _ in 0..n {
            self.stmt(depth, out, indent);
        }
    }
}

/// A random program with entry `f(a, b, c, d, out)`: four high scalars and a
/// record out-parameter; observes the return value and `out`.
pub fn random_program(rng: &mut ChaCha8Rng) -> String {
    let mut src = String::new();
    src.push_str("#pragma leak high a\n#pragma leak high b\n#pragma leak high c\n#pragma leak high d\n");
    src.push_str("#pragma leak observe __return\n#pragma leak observe out\n\n");
    src.push_str("struct rec {\n    unsigned char x;\n    unsigned short y;\n    int z;\n};\n\n");

    let mut g = Gen {
        rng,
        reads: vec![
            ("p".into(), Ty::S32),
            ("r->x".into(), Ty::U8),
            ("r->y".into(), Ty::U16),
            ("r->z".into(), Ty::S32),
            ("*q".into(), Ty::U8),
            ("k".into(), Ty::S32),
        ],
        writes: vec![
            ("p".into(), Ty::S32),
            ("r->x".into(), Ty::U8),
            ("r->z".into(), Ty::S32),
            ("*q".into(), Ty::U8),
            ("k".into(), Ty::S32),
        ],
        in_helper: true,
        loop_depth: 0,
        loop_vars: vec!["m"],
    };
    let mut body = String::new();
    g.block(2, &mut body, 4);
    let ret = g.expr(2);
    src.push_str("int helper(int p, struct rec *r, unsigned char *q)\n{\n    int m;\n    int k = p ^ 5;\n");
    src.push_str(&body);
    src.push_str(&format!("    return {};\n}}\n\n", ret));

    g.in_helper = false;
    g.reads = SCALARS.iter().map(|(n, t)| (n.to_string(), *t)).collect();
    g.reads.extend([
        ("s.x".to_string(), Ty::U8),
        ("s.y".to_string(), Ty::U16),
        ("s.z".to_string(), Ty::S32),
        ("out->z".to_string(), Ty::S32),
    ]);
    g.writes = g.reads.clone();
    g.loop_vars = vec!["i", "j"];
    let mut body = String::new();
    g.block(3, &mut body, 4);
    let ret = g.expr(3);
    src.push_str("int f(unsigned char a, signed char b, unsigned short c, int d, struct rec *out)\n{\n");
    let t_init = if g.rng.gen_bool(0.5) { ";" } else { " = 7;" };
    src.push_str(&format!(
        "    int i;\n    int j;\n    unsigned int t{}\n    long long w = d;\n    _Bool flag;\n    unsigned char arr[4];\n    struct rec s;\n",
        t_init
    ));
    if g.rng.gen_bool(0.5) {
        src.push_str("    arr[0] = a;\n    s.x = 1;\n");
    }
    src.push_str(&body);
    src.push_str(&format!("    return {};\n}}\n", ret));
    src
}
