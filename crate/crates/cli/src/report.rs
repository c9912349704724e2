//! Rendering of results as text or `key=value` lines.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use leakbound_core::bits::BitVec;
use leakbound_core::env::REGISTRY;
use leakbound_core::lang::harness::HarnessParam;
use leakbound_core::lang::types::Arch;
use leakbound_core::lang::Analysed;
use leakbound_core::metrics::channel_capacity;
use leakbound_core::oracle::ConcreteValue;
use leakbound_core::policy::{CapacityReport, CheckConfig, Counterexample, PolicyCheckResult, TraceStep, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Kv,
}

pub struct Report {
    format: Format,
    out: String,
}

fn value(v: &BitVec) -> String {
    if v.width() <= 64 {
        v.to_u64().to_string()
    } else {
        let bytes: Vec<String> = v.bytes().iter().map(|b| format!("{:#04x}", b)).collect();
        format!("{{{}}}", bytes.join(", "))
    }
}

fn assignments(params: &[HarnessParam], vals: &[ConcreteValue]) -> Vec<(String, String)> {
    params
        .iter()
        .zip(vals)
        .map(|(p, v)| (p.name.clone(), v.to_string()))
        .collect()
}

fn joined(pairs: &[(String, String)]) -> String {
    let parts: Vec<String> = pairs.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
    parts.join(", ")
}

impl Report {
    pub fn new(format: Format, file: &Path, arch: Arch, cfg: Option<&CheckConfig>) -> Report {
        let mut r = Report {
            format,
            out: String::new(),
        };
        r.field("file", &file.display().to_string(), None);
        r.field("arch", &arch.bits().to_string(), None);
        if let Some(cfg) = cfg {
            r.field("unwind", &cfg.unwind.to_string(), None);
            let on = if cfg.unwinding_assertions { "on" } else { "off" };
            r.field("unwinding_assertions", on, Some("unwinding assertions"));
        }
        r
    }

    fn field(&mut self, key: &str, val: &str, label: Option<&str>) {
        match self.format {
            Format::Kv => writeln!(self.out, "{}={}", key, val).unwrap(),
            Format::Text => writeln!(self.out, "{}: {}", label.unwrap_or(key), val).unwrap(),
        }
    }

    fn text(&mut self, line: &str) {
        if self.format == Format::Text {
            self.out.push_str(line);
            self.out.push('\n');
        }
    }

    pub fn check(&mut self, a: &Analysed, r: &PolicyCheckResult) {
        self.field("policy", &r.n.to_string(), None);
        self.field("verdict", r.verdict.name(), None);
        match &r.verdict {
            Verdict::Violated(cex) => self.counterexample(a, cex),
            Verdict::VerifiedBounded(k) => {
                self.field("bound", &k.to_string(), None);
                self.text(&format!("  no violation within {} loop iterations", k));
            }
            Verdict::VerifiedComplete => self.text(&format!("  at most {} distinctions", r.n)),
            Verdict::Vacuous(m) => {
                self.field("max_distinctions", &m.to_string(), None);
                self.text(&format!("  assumptions unsatisfiable; at most {} distinctions", m));
            }
            Verdict::InsufficientBound(k) => {
                self.field("bound", &k.to_string(), None);
                self.text(&format!("  a loop can run past {} iterations", k));
            }
            Verdict::Unknown => self.text("  solver conflict budget exhausted"),
        }
        let s = &r.stats;
        self.text("");
        self.field("vars", &s.vars.to_string(), Some("variables"));
        self.field("clauses", &s.clauses.to_string(), None);
        self.field("queries", &s.queries.to_string(), None);
        self.field("decisions", &s.solver.decisions.to_string(), None);
        self.field("conflicts", &s.solver.conflicts.to_string(), None);
        self.field(
            "solve_time_ms",
            &s.solve_time.as_millis().to_string(),
            Some("solve time (ms)"),
        );
    }

    fn counterexample(&mut self, a: &Analysed, cex: &Counterexample) {
        let h = &a.harness;
        self.field(
            "observations",
            &cex.observations.len().to_string(),
            Some("distinct observations"),
        );
        let low = assignments(&h.low, &cex.low);
        match self.format {
            Format::Kv => {
                for (k, v) in &low {
                    writeln!(self.out, "low.{}={}", k, v).unwrap();
                }
            }
            Format::Text if !low.is_empty() => writeln!(self.out, "low: {}", joined(&low)).unwrap(),
            Format::Text => {}
        }
        for (i, (high, obs)) in cex.high.iter().zip(&cex.observations).enumerate() {
            let copy = i + 1;
            let high = assignments(&h.high, high);
            let obs: Vec<(String, String)> = h
                .observables
                .iter()
                .zip(obs)
                .map(|(o, v)| (o.name().to_string(), v.to_string()))
                .collect();
            match self.format {
                Format::Kv => {
                    for (k, v) in &high {
                        writeln!(self.out, "copy.{}.high.{}={}", copy, k, v).unwrap();
                    }
                    for (k, v) in &obs {
                        writeln!(self.out, "copy.{}.observe.{}={}", copy, k, v).unwrap();
                    }
                }
                Format::Text => {
                    if high.is_empty() {
                        writeln!(self.out, "copy {}: {}", copy, joined(&obs)).unwrap();
                    } else {
                        writeln!(self.out, "copy {}: {} -> {}", copy, joined(&high), joined(&obs)).unwrap();
                    }
                }
            }
        }
        let stem = a
            .source
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file = a
            .source
            .path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        // The driver follows the program text after one separating newline.
        let driver_start = a.source.text.matches('\n').count() as u32 + 1;
        self.text("\nCounterexample:");
        for (i, step) in cex.trace.iter().enumerate() {
            let in_driver = a.program.function(&step.function).is_none();
            let (file, line) = if in_driver {
                ("<driver>", step.line.saturating_sub(driver_start))
            } else {
                (file.as_str(), step.line)
            };
            match self.format {
                Format::Kv => writeln!(
                    self.out,
                    "trace.{}={}:{} {}::{}::{}={}",
                    i + 1,
                    file,
                    line,
                    step.function,
                    step.copy,
                    step.var,
                    value(&step.value)
                )
                .unwrap(),
                Format::Text => self.state(i + 1, file, line, &stem, step),
            }
        }
    }

    fn state(&mut self, n: usize, file: &str, line: u32, stem: &str, step: &TraceStep) {
        writeln!(
            self.out,
            "\nState {} file {} line {} function {} thread 0\n{}\n  {}::{}::{}::{}={} ({})",
            n,
            file,
            line,
            step.function,
            "-".repeat(52),
            stem,
            step.function,
            step.copy,
            step.var,
            value(&step.value),
            step.value.to_bin_string()
        )
        .unwrap();
    }

    pub fn capacity(&mut self, r: &CapacityReport) {
        match self.format {
            Format::Kv => {
                writeln!(self.out, "n_star={}", r.class_count).unwrap();
                writeln!(self.out, "bits={:.6}", r.lower_bound_bits).unwrap();
                writeln!(self.out, "exact={}", r.exact).unwrap();
                for (n, v) in &r.probes {
                    writeln!(self.out, "probe.{}={}", n, v.name()).unwrap();
                }
            }
            Format::Text => {
                let (rel, kind) = if r.exact { ("=", "exact") } else { (">=", "lower bound") };
                writeln!(
                    self.out,
                    "capacity: N*{}{}, {:.3} bits, {}",
                    rel, r.class_count, r.lower_bound_bits, kind
                )
                .unwrap();
                let probes: Vec<String> = r.probes.iter().map(|(n, v)| format!("N={} {}", n, v.name())).collect();
                writeln!(self.out, "probes: {}", probes.join(", ")).unwrap();
            }
        }
    }

    pub fn oracle(&mut self, a: &Analysed, low: &[ConcreteValue], classes: usize) {
        self.field("classes", &classes.to_string(), None);
        self.field("bits", &format!("{:.6}", channel_capacity(classes)), None);
        for (k, v) in assignments(&a.harness.low, low) {
            match self.format {
                Format::Kv => writeln!(self.out, "low.{}={}", k, v).unwrap(),
                Format::Text => writeln!(self.out, "at low {}={}", k, v).unwrap(),
            }
        }
    }

    pub fn finish(mut self, code: u8) -> String {
        if self.format == Format::Kv {
            writeln!(self.out, "exit={}", code).unwrap();
        }
        self.out
    }
}

pub fn builtins() -> String {
    let mut s = String::new();
    for b in REGISTRY {
        writeln!(
            s,
            "{}\n    {}\n    {}\n    nondeterminism: {}",
            b.name, b.signature, b.semantics, b.nondet
        )
        .unwrap();
    }
    s
}
