mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leakbound_core::lang::types::Arch;
use leakbound_core::lang::{load, read_source, Analysed};
use leakbound_core::oracle::{full_domain, oracle_capacity, OracleConfig};
use leakbound_core::policy::{
    check_policy, driver_ssa, emit_c_driver, measure_capacity, stub_header, CheckConfig, Verdict, DEFAULT_N_MAX,
    STUB_HEADER,
};
use leakbound_core::sat::{encode, Goal, SolverConfig};
use leakbound_core::ssa::{dump::dump, AssertKind};

use report::{Format, Report};

const EXIT_ERROR: u8 = 4;
const BUDGET_VAR: &str = "LEAKBOUND_SOLVER_BUDGET";

#[derive(Parser)]
#[command(
    name = "leakbound",
    version,
    about = "Bounded checking of quantitative information-flow policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether a program makes more than N distinctions.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 'N')]
        policy: u32,
        /// Print the SSA form of the driver.
        #[arg(long)]
        dump_ssa: bool,
    },
    /// Find the number of distinctions by probing increasing policies.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: u32,
    },
    /// Count equivalence classes by running every input.
    Oracle {
        file: PathBuf,
        #[arg(long, value_parser = parse_arch, default_value = "32")]
        arch: Arch,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Maximum number of runs.
        #[arg(long, default_value_t = leakbound_core::oracle::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Write the CNF of a driver in DIMACS format.
    ExportDimacs {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 'N')]
        policy: u32,
        #[arg(long, value_enum, default_value_t = Query::Property)]
        query: Query,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a C driver for an external bounded model checker.
    EmitDriver {
        file: PathBuf,
        #[arg(long, value_parser = parse_arch, default_value = "32")]
        arch: Arch,
        #[arg(long, short = 'N')]
        policy: u32,
        /// Driver file; the stub header is written next to it.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// List the library functions the language models.
    ListBuiltins,
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    #[arg(long, default_value_t = 8)]
    unwind: u32,
    #[arg(long)]
    no_unwinding_assertions: bool,
    #[arg(long, value_parser = parse_arch, default_value = "32")]
    arch: Arch,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Query {
    Property,
    Unwinding,
    Feasible,
}

fn parse_arch(s: &str) -> Result<Arch, String> {
    s.parse::<u32>()
        .ok()
        .and_then(Arch::from_bits)
        .ok_or_else(|| format!("unsupported architecture `{}` (expected 32 or 64)", s))
}

fn solver_config() -> Result<SolverConfig, String> {
    let mut cfg = SolverConfig::default();
    if let Ok(v) = std::env::var(BUDGET_VAR) {
        let n = v
            .trim()
            .parse()
            .map_err(|_| format!("{} must be a number of conflicts, got `{}`", BUDGET_VAR, v))?;
        cfg.conflict_budget = Some(n);
    }
    Ok(cfg)
}

impl Common {
    fn config(&self) -> Result<CheckConfig, String> {
        if self.unwind == 0 {
            return Err("--unwind must be positive".into());
        }
        Ok(CheckConfig {
            unwind: self.unwind,
            unwinding_assertions: !self.no_unwinding_assertions,
            solver: solver_config()?,
            ..CheckConfig::default()
        })
    }
}

fn analyse(path: &Path, arch: Arch) -> Result<Analysed, String> {
    let src = read_source(path).map_err(|e| e.to_string())?;
    load(src, arch).map_err(|e| format!("{}: {}", path.display(), e))
}

fn positive(n: u32, flag: &str) -> Result<u32, String> {
    if n == 0 {
        Err(format!("{} must be at least 1", flag))
    } else {
        Ok(n)
    }
}

fn run(cmd: Command) -> Result<(String, u8), String> {
    match cmd {
        Command::Check {
            common,
            policy,
            dump_ssa,
        } => {
            let cfg = common.config()?;
            let n = positive(policy, "--policy")?;
            let a = analyse(&common.file, common.arch)?;
            let mut out = String::new();
            if dump_ssa {
                let (_, ssa) = driver_ssa(&a, n, &cfg).map_err(|e| e.to_string())?;
                out.push_str(&dump(&ssa));
                out.push('\n');
            }
            let r = check_policy(&a, n, &cfg).map_err(|e| e.to_string())?;
            let code = exit_code(&r.verdict);
            let mut rep = Report::new(common.format, &common.file, common.arch, Some(&cfg));
            rep.check(&a, &r);
            out.push_str(&rep.finish(code));
            Ok((out, code))
        }
        Command::Capacity { common, n_max } => {
            let cfg = common.config()?;
            let n_max = positive(n_max, "--n-max")?;
            let a = analyse(&common.file, common.arch)?;
            let r = measure_capacity(&a, &cfg, n_max).map_err(|e| e.to_string())?;
            let mut rep = Report::new(common.format, &common.file, common.arch, Some(&cfg));
            rep.capacity(&r);
            Ok((rep.finish(0), 0))
        }
        Command::Oracle {
            file,
            arch,
            format,
            budget,
        } => {
            let a = analyse(&file, arch)?;
            let h = &a.harness;
            let too_big = || "input domain is too large to enumerate".to_string();
            let high = full_domain(&h.high).ok_or_else(too_big)?;
            let low = full_domain(&h.low).ok_or_else(too_big)?;
            let cfg = OracleConfig {
                budget,
                ..OracleConfig::default()
            };
            let (l, classes) = oracle_capacity(&a.program, h, low, &high, &cfg).map_err(|e| e.to_string())?;
            let mut rep = Report::new(format, &file, arch, None);
            rep.oracle(&a, &l, classes);
            Ok((rep.finish(0), 0))
        }
        Command::ExportDimacs {
            common,
            policy,
            query,
            output,
        } => {
            let cfg = common.config()?;
            let n = positive(policy, "--policy")?;
            let a = analyse(&common.file, common.arch)?;
            let (_, ssa) = driver_ssa(&a, n, &cfg).map_err(|e| e.to_string())?;
            let goal = match query {
                Query::Property => Goal::Violate(AssertKind::Property),
                Query::Unwinding => Goal::Violate(AssertKind::Unwinding),
                Query::Feasible => Goal::Feasible,
            };
            let text = encode(&ssa, goal).cnf.to_dimacs();
            match output {
                Some(p) => {
                    write(&p, &text)?;
                    Ok((String::new(), 0))
                }
                None => Ok((text, 0)),
            }
        }
        Command::EmitDriver {
            file,
            arch,
            policy,
            output,
        } => {
            let n = positive(policy, "--policy")?;
            let a = analyse(&file, arch)?;
            let c = emit_c_driver(&a, n);
            match output {
                Some(p) => {
                    write(&p, &c)?;
                    let header = p.with_file_name(STUB_HEADER);
                    write(&header, &stub_header())?;
                    Ok((String::new(), 0))
                }
                None => Ok((c, 0)),
            }
        }
        Command::ListBuiltins => Ok((report::builtins(), 0)),
    }
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {}", path.display(), e))
}

fn exit_code(v: &Verdict) -> u8 {
    match v {
        Verdict::VerifiedBounded(_) | Verdict::VerifiedComplete => 0,
        Verdict::Violated(_) => 1,
        Verdict::Vacuous(_) => 2,
        Verdict::InsufficientBound(_) => 3,
        Verdict::Unknown => EXIT_ERROR,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok((out, code)) => {
            print!("{}", out);
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("leakbound: {}", e);
            ExitCode::from(EXIT_ERROR)
        }
    }
}
