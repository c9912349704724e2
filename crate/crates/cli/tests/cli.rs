use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn leakbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leakbound"))
        .args(args)
        .current_dir(root())
        .env_remove("LEAKBOUND_SOLVER_BUDGET")
        .output()
        .unwrap()
}

/// Drop timing lines, which vary between runs.
fn stable(out: &[u8]) -> String {
    String::from_utf8_lossy(out)
        .lines()
        .filter(|l| !l.starts_with("solve_time_ms=") && !l.starts_with("solve time (ms):"))
        .map(|l| format!("{}\n", l))
        .collect()
}

/// Compare stdout with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, args: &[&str], code: i32) {
    let out = leakbound(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "{:?}\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    let got = stable(&out.stdout);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(got, want, "{}", name);
}

#[test]
fn check_violated_text() {
    golden("check_modulo_3.txt", &["check", "corpus/modulo.mc", "--policy", "3"], 1);
}

#[test]
fn check_violated_kv() {
    golden(
        "check_modulo_3.kv",
        &["check", "corpus/modulo.mc", "--policy", "3", "--format", "kv"],
        1,
    );
}

#[test]
fn check_verified() {
    golden("check_modulo_4.txt", &["check", "corpus/modulo.mc", "--policy", "4"], 0);
    golden(
        "check_modulo_4.kv",
        &["check", "corpus/modulo.mc", "--policy", "4", "--format", "kv"],
        0,
    );
}

#[test]
fn check_vacuous() {
    golden(
        "check_modulo_5.kv",
        &["check", "corpus/modulo.mc", "--policy", "5", "--format", "kv"],
        2,
    );
}

#[test]
fn check_insufficient_bound() {
    golden(
        "check_loop3_unwind2.kv",
        &[
            "check",
            "corpus/loop3.mc",
            "--policy",
            "2",
            "--unwind",
            "2",
            "--format",
            "kv",
        ],
        3,
    );
}

#[test]
fn check_bounded() {
    golden(
        "check_loop3_bounded.txt",
        &[
            "check",
            "corpus/loop3.mc",
            "--policy",
            "1",
            "--unwind",
            "2",
            "--no-unwinding-assertions",
        ],
        0,
    );
}

#[test]
fn padding_depends_on_arch() {
    golden(
        "check_sigaltstack_32.kv",
        &[
            "check",
            "corpus/sigaltstack.mc",
            "--arch",
            "32",
            "--policy",
            "1",
            "--format",
            "kv",
        ],
        0,
    );
    golden(
        "check_sigaltstack_64.txt",
        &["check", "corpus/sigaltstack.mc", "--arch", "64", "--policy", "1"],
        1,
    );
}

#[test]
fn underflow_trace() {
    golden(
        "check_underflow_1.txt",
        &["check", "corpus/underflow.mc", "--policy", "1"],
        1,
    );
}

#[test]
fn capacity_reports() {
    golden("capacity_login.txt", &["capacity", "corpus/login.mc"], 0);
    golden(
        "capacity_modulo.kv",
        &["capacity", "corpus/modulo.mc", "--format", "kv"],
        0,
    );
    let out = leakbound(&["capacity", "corpus/login.mc"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("N*=3, 1.585 bits, exact"));
}

#[test]
fn capacity_lower_bound() {
    golden(
        "capacity_underflow_small.txt",
        &["capacity", "corpus/underflow_small.mc", "--n-max", "4"],
        0,
    );
}

#[test]
fn oracle_reports() {
    golden("oracle_modulo.txt", &["oracle", "corpus/modulo.mc"], 0);
    golden("oracle_login.kv", &["oracle", "corpus/login.mc", "--format", "kv"], 0);
}

#[test]
fn builtins() {
    golden("list_builtins.txt", &["list-builtins"], 0);
}

#[test]
fn dump_ssa() {
    let out = leakbound(&["check", "corpus/password.mc", "--policy", "2", "--dump-ssa"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("assert[property]"), "{}", s);
    assert!(s.contains("verdict: VerifiedComplete"));
}

#[test]
fn usage_errors_exit_4() {
    for args in [
        &["check", "corpus/modulo.mc"][..],
        &["check", "corpus/modulo.mc", "--policy", "3", "--bogus"],
        &["check", "corpus/modulo.mc", "--policy", "3", "--arch", "48"],
        &["check", "corpus/modulo.mc", "--policy", "0"],
        &["check", "corpus/modulo.mc", "--policy", "3", "--unwind", "0"],
        &["check", "corpus/missing.mc", "--policy", "3"],
        &["capacity", "corpus/modulo.mc", "--format", "json"],
        &["frobnicate"],
        &[],
    ] {
        let out = leakbound(args);
        assert_eq!(out.status.code(), Some(4), "{:?}", args);
        assert!(!out.stderr.is_empty());
    }
    let out = leakbound(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn solver_budget_from_environment() {
    let run = |budget: &str| {
        Command::new(env!("CARGO_BIN_EXE_leakbound"))
            .args(["check", "corpus/login.mc", "--policy", "3"])
            .current_dir(root())
            .env("LEAKBOUND_SOLVER_BUDGET", budget)
            .output()
            .unwrap()
    };
    let out = run("0");
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: Unknown"));
    assert_eq!(run("1000000").status.code(), Some(0));
    assert_eq!(run("lots").status.code(), Some(4));
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("leakbound-cli-{}-{}", name, std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn export_dimacs() {
    let d = scratch("dimacs");
    let f = d.join("modulo.cnf");
    let out = leakbound(&[
        "export-dimacs",
        "corpus/modulo.mc",
        "--policy",
        "3",
        "-o",
        f.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&f).unwrap();
    let header = text.lines().find(|l| l.starts_with("p cnf")).unwrap();
    let counts: Vec<usize> = header.split_whitespace().skip(2).map(|t| t.parse().unwrap()).collect();
    let clauses = text
        .lines()
        .filter(|l| !l.starts_with('c') && !l.starts_with('p') && !l.is_empty())
        .count();
    assert_eq!(clauses, counts[1]);
    assert!(text.contains("c map "));
    let stdout = leakbound(&["export-dimacs", "corpus/modulo.mc", "--policy", "3"]);
    assert_eq!(String::from_utf8_lossy(&stdout.stdout), text);
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn emit_driver_writes_header() {
    let d = scratch("emit");
    let f = d.join("login.c");
    let out = leakbound(&[
        "emit-driver",
        "corpus/login.mc",
        "--policy",
        "3",
        "-o",
        f.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let c = std::fs::read_to_string(&f).unwrap();
    assert!(c.starts_with("#include \"leakbound_stubs.h\""));
    assert!(c.contains("assert("));
    assert!(d.join("leakbound_stubs.h").exists());
    if let Ok(cc) = Command::new("cc").args(["-fsyntax-only", "-std=c99"]).arg(&f).output() {
        assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    }
    std::fs::remove_dir_all(d).unwrap();
}
