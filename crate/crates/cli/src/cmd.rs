//! Subcommand definitions and dispatch for the `ozmm` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ozmm_core::{exact_matmul, BackendKind, ErrorReport, MatrixInput, MatrixOutput, Os1Mode};

use crate::error::{CliError, Result};
use crate::gen::{generate, generate_multiword, GenKind, GeneratorSpec};
use crate::kplot::{self, RegimeChoice};
use crate::sweep::{self, Method, RunSpec, SweepConfig};
use crate::{config, fileio};

#[derive(Parser)]
#[command(
    name = "ozmm",
    version,
    about = "High-precision matrix products via modular residue arithmetic"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once, never stored
enum Cmd {
    /// Write a seeded random matrix to an OZMM file
    Gen(GenArgs),
    /// Multiply two OZMM files and write the product
    Matmul(MatmulArgs),
    /// Run a parameter sweep and emit CSV
    Sweep(SweepArgs),
    /// Tabulate the per-factor bit budget k over (q, s) as CSV
    Kplot(KplotArgs),
    /// Multiply, compare against the exact oracle, fail on tolerance breach
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    /// Standard normal
    Randn,
    /// (rand - 0.5) * exp(phi * randn)
    Phi,
    /// Every entry equal to --value
    Const,
    /// Uniform integers in [--lo, --hi]
    Int,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Os1,
    Os2Fast,
    Os2Accu,
    F64,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Os1 => Method::Os1,
            MethodArg::Os2Fast => Method::Os2Fast,
            MethodArg::Os2Accu => Method::Os2Accu,
            MethodArg::F64 => Method::F64Base,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Int8,
    Fp64,
}

impl From<RegimeArg> for RegimeChoice {
    fn from(r: RegimeArg) -> RegimeChoice {
        match r {
            RegimeArg::Int8 => RegimeChoice::Int8,
            RegimeArg::Fp64 => RegimeChoice::Fp64,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Int8sim,
    Fp64exact,
    Bigint,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> BackendKind {
        match b {
            BackendArg::Int8sim => BackendKind::Int8Sim,
            BackendArg::Fp64exact => BackendKind::Fp64Exact,
            BackendArg::Bigint => BackendKind::BigIntRef,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Os1ModeArg {
    Full,
    Truncated,
}

#[derive(Args)]
struct GenArgs {
    /// Output file
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    rows: usize,
    #[arg(long, default_value_t = 16)]
    cols: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Randn)]
    kind: KindArg,
    /// Exponent spread for --kind phi
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    /// Fill value for --kind const
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    /// Lower bound for --kind int
    #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
    lo: i64,
    /// Upper bound for --kind int
    #[arg(long, default_value_t = 8, allow_hyphen_values = true)]
    hi: i64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Words per entry; above 1 writes a multi-word matrix
    #[arg(long, default_value_t = 1)]
    words: usize,
}

#[derive(Args)]
struct MethodOpts {
    #[arg(long, value_enum, default_value_t = MethodArg::Os2Fast)]
    method: MethodArg,
    /// Modulus count for the residue methods
    #[arg(long)]
    s: Option<usize>,
    /// Slice count for the slice method
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Int8)]
    regime: RegimeArg,
    /// Residue backend; defaults to the regime's natural one
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Words per output entry; 0 keeps binary64
    #[arg(long, default_value_t = 0)]
    output_words: usize,
    /// Fp64 modulus table sizing; defaults to the inner dimension
    #[arg(long)]
    table_q_max: Option<u64>,
    /// Last-slice handling for the slice method
    #[arg(long, value_enum, default_value_t = Os1ModeArg::Truncated)]
    os1_mode: Os1ModeArg,
}

impl MethodOpts {
    fn to_spec(&self) -> RunSpec {
        let method = Method::from(self.method);
        let param = match method {
            Method::Os1 => self.k,
            Method::Os2Fast | Method::Os2Accu => self.s,
            Method::F64Base => None,
        };
        RunSpec {
            method,
            param,
            regime: RegimeChoice::from(self.regime),
            backend: self.backend.map(BackendKind::from),
            output_words: self.output_words,
            table_q_max: self.table_q_max,
            os1_mode: match self.os1_mode {
                Os1ModeArg::Full => Os1Mode::Full,
                Os1ModeArg::Truncated => Os1Mode::Truncated,
            },
        }
    }
}

#[derive(Args)]
struct MatmulArgs {
    /// Left factor (OZMM file)
    a: PathBuf,
    /// Right factor (OZMM file)
    b: PathBuf,
    /// Output file
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    opts: MethodOpts,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat key=value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated methods: os1, os2-fast, os2-accu, f64
    #[arg(long)]
    method: Option<String>,
    /// Problem sizes, e.g. 64,128 or 16..32
    #[arg(long)]
    n: Option<String>,
    /// Modulus counts, e.g. 2..16
    #[arg(long)]
    s: Option<String>,
    /// Slice counts, e.g. 2..10
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    backend: Option<String>,
    /// Generator: randn, phi, const, int
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    value: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<i64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Words per input entry
    #[arg(long)]
    words: Option<usize>,
    #[arg(long)]
    output_words: Option<usize>,
    #[arg(long)]
    table_q_max: Option<u64>,
    /// Measure wall time per point (makes reruns differ byte-wise)
    #[arg(long)]
    timing: bool,
    /// CSV destination; stdout when absent
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KplotArgs {
    #[arg(long, value_enum, default_value_t = RegimeArg::Fp64)]
    regime: RegimeArg,
    /// Inner dimensions, e.g. 256,1024
    #[arg(long, default_value = "1024")]
    q: String,
    /// Modulus counts, e.g. 2..26
    #[arg(long, default_value = "2..26")]
    s: String,
    /// Fp64 modulus table sizing
    #[arg(long, default_value_t = 16384)]
    table_q_max: u64,
    /// CSV destination; stdout when absent
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Left factor (OZMM file)
    a: PathBuf,
    /// Right factor (OZMM file)
    b: PathBuf,
    #[command(flatten)]
    opts: MethodOpts,
    /// Largest acceptable relative error vs the exact oracle
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

pub fn run() -> i32 {
    match dispatch(Cli::parse()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen(args) => run_gen(&args),
        Cmd::Matmul(args) => run_matmul(&args),
        Cmd::Sweep(args) => run_sweep_cmd(&args),
        Cmd::Kplot(args) => run_kplot(&args),
        Cmd::Verify(args) => run_verify(&args),
    }
}

fn run_gen(args: &GenArgs) -> Result<()> {
    let kind = match args.kind {
        KindArg::Randn => GenKind::Randn,
        KindArg::Phi => GenKind::PhiLognormal(args.phi),
        KindArg::Const => GenKind::Constant(args.value),
        KindArg::Int => GenKind::IntegerUniform(args.lo, args.hi),
    };
    let spec = GeneratorSpec {
        kind,
        seed: args.seed,
        rows: args.rows,
        cols: args.cols,
    };
    let m = if args.words > 1 {
        MatrixInput::MultiWord(generate_multiword(&spec, args.words)?)
    } else {
        MatrixInput::F64(generate(&spec)?)
    };
    fileio::write_matrix_file(&args.out, &m)
}

fn load_pair(a: &Path, b: &Path) -> Result<(MatrixInput, MatrixInput)> {
    Ok((fileio::read_matrix_file(a)?, fileio::read_matrix_file(b)?))
}

fn run_matmul(args: &MatmulArgs) -> Result<()> {
    let (a, b) = load_pair(&args.a, &args.b)?;
    let (output, _muls) = sweep::run_spec(&a, &b, &args.opts.to_spec()).map_err(CliError::Core)?;
    let out = match output {
        MatrixOutput::F64(m) => MatrixInput::F64(m),
        MatrixOutput::MultiWord(mw) => MatrixInput::MultiWord(mw),
    };
    fileio::write_matrix_file(&args.out, &out)
}

fn run_verify(args: &VerifyArgs) -> Result<()> {
    let (a, b) = load_pair(&args.a, &args.b)?;
    let spec = args.opts.to_spec();
    let (output, muls) = sweep::run_spec(&a, &b, &spec).map_err(CliError::Core)?;
    let reference = exact_matmul(&a, &b).map_err(CliError::Core)?;
    let report = ErrorReport::between(&reference, &output).map_err(CliError::Core)?;
    println!(
        "method={} muls={} max_rel_err={:e} max_abs_err={:e} tol={:e}",
        spec.method.label(),
        muls,
        report.max_rel_err,
        report.max_abs_err,
        args.tol
    );
    if report.max_rel_err > args.tol {
        return Err(CliError::ToleranceExceeded {
            max_rel_err: report.max_rel_err,
            tol: args.tol,
        });
    }
    Ok(())
}

fn run_sweep_cmd(args: &SweepArgs) -> Result<()> {
    let mut cfg = SweepConfig::default();
    if let Some(path) = &args.config {
        for (k, v) in config::parse_flat(&fs::read_to_string(path)?)? {
            cfg.apply_pair(&k, &v)?;
        }
    }
    let overrides: [(&str, Option<String>); 15] = [
        ("method", args.method.clone()),
        ("n", args.n.clone()),
        ("s", args.s.clone()),
        ("k", args.k.clone()),
        ("regime", args.regime.clone()),
        ("backend", args.backend.clone()),
        ("generator", args.generator.clone()),
        ("phi", args.phi.map(|v| v.to_string())),
        ("value", args.value.map(|v| v.to_string())),
        ("lo", args.lo.map(|v| v.to_string())),
        ("hi", args.hi.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("words", args.words.map(|v| v.to_string())),
        ("output-words", args.output_words.map(|v| v.to_string())),
        ("table-q-max", args.table_q_max.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.apply_pair(key, &v)?;
        }
    }
    if args.timing {
        cfg.timing = true;
    }
    let rows = sweep::run_sweep(&cfg)?;
    write_text(args.out.as_deref(), &sweep::rows_to_csv(&rows))
}

fn run_kplot(args: &KplotArgs) -> Result<()> {
    let qs = config::parse_u64_list(&args.q)?;
    let ss = config::parse_usize_list(&args.s)?;
    let rows = kplot::kplot(RegimeChoice::from(args.regime), &qs, &ss, args.table_q_max);
    write_text(args.out.as_deref(), &kplot::rows_to_csv(&rows))
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
