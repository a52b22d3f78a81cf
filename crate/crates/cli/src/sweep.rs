//! Parameter sweeps. Points are laid out in config order, evaluated in
//! parallel by a small worker pool, and reported in layout order, so the CSV
//! is byte-identical across runs and thread counts for a fixed seed. A
//! failing point gets its error in the status column and the run continues.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use ozmm_core::{
    build_fp64_modulus_set, build_int8_modulus_set, exact_matmul, ozaki1_matmul, ozaki2_matmul,
    BackendKind, BoundMethod, ErrorReport, ExactMatrix, MatrixF64, MatrixInput, MatrixOutput,
    Os1Mode, Os2Options, OutputFormat, SchemeOneConfig,
};

use crate::error::{CliError, Result};
use crate::gen::{generate, generate_multiword, GenKind, GeneratorSpec};
use crate::kplot::RegimeChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Residue pipeline certified with the cheap row/column-norm bound.
    Os2Fast,
    /// Residue pipeline certified with the magnitude-product bound and the
    /// slack reinvested into extra truncation bits.
    Os2Accu,
    /// Slice-product scheme, truncated to k slices.
    Os1,
    /// Plain binary64 matmul, the hardware-GEMM stand-in.
    F64Base,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Os2Fast => "os2-fast",
            Method::Os2Accu => "os2-accu",
            Method::Os1 => "os1",
            Method::F64Base => "f64",
        }
    }

    pub fn parse(text: &str) -> Result<Method> {
        match text {
            "os2-fast" => Ok(Method::Os2Fast),
            "os2-accu" => Ok(Method::Os2Accu),
            "os1" => Ok(Method::Os1),
            "f64" => Ok(Method::F64Base),
            other => Err(CliError::Format(format!("unknown method {other:?}"))),
        }
    }
}

pub fn parse_regime(text: &str) -> Result<RegimeChoice> {
    match text {
        "int8" => Ok(RegimeChoice::Int8),
        "fp64" => Ok(RegimeChoice::Fp64),
        other => Err(CliError::Format(format!("unknown regime {other:?}"))),
    }
}

pub fn parse_backend(text: &str) -> Result<BackendKind> {
    match text {
        "int8sim" => Ok(BackendKind::Int8Sim),
        "fp64exact" => Ok(BackendKind::Fp64Exact),
        "bigint" => Ok(BackendKind::BigIntRef),
        other => Err(CliError::Format(format!("unknown backend {other:?}"))),
    }
}

pub fn backend_label(kind: BackendKind) -> &'static str {
    match kind {
        BackendKind::Int8Sim => "int8sim",
        BackendKind::Fp64Exact => "fp64exact",
        BackendKind::BigIntRef => "bigint",
    }
}

/// Generator selection as raw knobs, so config keys and flags can arrive in
/// any order before the kind is resolved.
#[derive(Debug, Clone)]
pub struct GenChoice {
    pub kind: String,
    pub phi: f64,
    pub value: f64,
    pub lo: i64,
    pub hi: i64,
}

impl GenChoice {
    pub fn resolve(&self) -> Result<GenKind> {
        match self.kind.as_str() {
            "randn" => Ok(GenKind::Randn),
            "phi" => Ok(GenKind::PhiLognormal(self.phi)),
            "const" => Ok(GenKind::Constant(self.value)),
            "int" => Ok(GenKind::IntegerUniform(self.lo, self.hi)),
            other => Err(CliError::Format(format!("unknown generator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    /// Square problem sizes; empty means no rows, header only.
    pub sizes: Vec<usize>,
    /// Modulus counts for the residue methods.
    pub s_values: Vec<usize>,
    /// Slice counts for the slice method.
    pub k_values: Vec<usize>,
    pub regime: RegimeChoice,
    /// None picks the regime's natural backend.
    pub backend: Option<BackendKind>,
    pub gen: GenChoice,
    pub seed: u64,
    /// Words per input entry; 1 is plain binary64.
    pub words: usize,
    /// Words per output entry for the residue methods; 0 is binary64.
    pub output_words: usize,
    /// Fp64 modulus table sizing; None uses each point's inner dimension.
    pub table_q_max: Option<u64>,
    /// Fill wall_ms with real timings. Off by default because it breaks
    /// byte-identical reruns.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            methods: vec![Method::Os2Fast],
            sizes: Vec::new(),
            s_values: (2..=16).collect(),
            k_values: (2..=10).collect(),
            regime: RegimeChoice::Int8,
            backend: None,
            gen: GenChoice {
                kind: "randn".into(),
                phi: 0.5,
                value: 1.0,
                lo: -8,
                hi: 8,
            },
            seed: 1,
            words: 1,
            output_words: 0,
            table_q_max: None,
            timing: false,
        }
    }
}

impl SweepConfig {
    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "method" => {
                self.methods = value
                    .split(',')
                    .map(|m| Method::parse(m.trim()))
                    .collect::<Result<_>>()?;
            }
            "n" => self.sizes = crate::config::parse_usize_list(value)?,
            "s" => self.s_values = crate::config::parse_usize_list(value)?,
            "k" => self.k_values = crate::config::parse_usize_list(value)?,
            "regime" => self.regime = parse_regime(value)?,
            "backend" => self.backend = Some(parse_backend(value)?),
            "generator" => self.gen.kind = value.to_string(),
            "phi" => self.gen.phi = parse_num(value)?,
            "value" => self.gen.value = parse_num(value)?,
            "lo" => self.gen.lo = parse_num(value)?,
            "hi" => self.gen.hi = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            "words" => self.words = parse_num(value)?,
            "output-words" => self.output_words = parse_num(value)?,
            "table-q-max" => self.table_q_max = Some(parse_num(value)?),
            "timing" => {
                self.timing = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(CliError::Format(format!("bad boolean {other:?}")))
                    }
                }
            }
            other => return Err(CliError::Format(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Format(format!("bad number: {s:?}")))
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub method: &'static str,
    pub n: usize,
    pub phi: Option<f64>,
    /// The scheme parameter: s for the residue methods, k for slices,
    /// absent for the plain baseline.
    pub param: Option<usize>,
    pub muls: u64,
    pub max_rel_err: Option<f64>,
    pub max_abs_err: Option<f64>,
    pub wall_ms: u128,
    pub backend: &'static str,
    pub status: String,
}

struct Point {
    method: Method,
    n: usize,
    param: Option<usize>,
}

struct Prepared {
    a: MatrixInput,
    b: MatrixInput,
    reference: ExactMatrix,
}

fn prepare(cfg: &SweepConfig, n: usize) -> Result<Prepared> {
    let kind = cfg.gen.resolve()?;
    let mk = |seed: u64| -> Result<MatrixInput> {
        let spec = GeneratorSpec {
            kind,
            seed,
            rows: n,
            cols: n,
        };
        Ok(if cfg.words > 1 {
            MatrixInput::MultiWord(generate_multiword(&spec, cfg.words)?)
        } else {
            MatrixInput::F64(generate(&spec)?)
        })
    };
    let a = mk(cfg.seed)?;
    let b = mk(cfg.seed.wrapping_add(1))?;
    let reference = exact_matmul(&a, &b)?;
    Ok(Prepared { a, b, reference })
}

fn collapse_to_f64(input: &MatrixInput) -> MatrixF64 {
    match input {
        MatrixInput::F64(m) => m.clone(),
        MatrixInput::MultiWord(mw) => {
            let mut acc = mw.words()[0].clone();
            for w in &mw.words()[1..] {
                acc.add_assign(w).expect("words share one shape");
            }
            acc
        }
    }
}

/// One pipeline invocation, fully specified. Shared by sweep points and the
/// single-shot subcommands.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub method: Method,
    /// s for the residue methods, k for slices; unused by the baseline.
    pub param: Option<usize>,
    pub regime: RegimeChoice,
    /// None picks the regime's natural backend.
    pub backend: Option<BackendKind>,
    /// Words per output entry for the residue methods; 0 is binary64.
    pub output_words: usize,
    /// Fp64 modulus table sizing; None uses the inner dimension.
    pub table_q_max: Option<u64>,
    pub os1_mode: Os1Mode,
}

pub fn run_spec(
    a: &MatrixInput,
    b: &MatrixInput,
    spec: &RunSpec,
) -> core::result::Result<(MatrixOutput, u64), ozmm_core::Error> {
    match spec.method {
        Method::Os2Fast | Method::Os2Accu => {
            let s = spec.param.ok_or_else(|| {
                ozmm_core::Error::InvalidParameter("residue methods need s".into())
            })?;
            let set = match spec.regime {
                RegimeChoice::Int8 => build_int8_modulus_set(s)?,
                RegimeChoice::Fp64 => {
                    build_fp64_modulus_set(s, spec.table_q_max.unwrap_or(a.cols() as u64))?
                }
            };
            let accu = spec.method == Method::Os2Accu;
            let opts = Os2Options {
                backend: spec.backend.unwrap_or(natural_backend(spec.regime)),
                bound_method: if accu {
                    BoundMethod::MagnitudeProduct
                } else {
                    BoundMethod::CauchySchwarz
                },
                tighten: accu,
                output: if spec.output_words > 0 {
                    OutputFormat::MultiWord(spec.output_words)
                } else {
                    OutputFormat::F64
                },
                ..Os2Options::default()
            };
            let res = ozaki2_matmul(a, b, &set, &opts)?;
            Ok((res.output, res.gemm_count))
        }
        Method::Os1 => {
            let k = spec.param.ok_or_else(|| {
                ozmm_core::Error::InvalidParameter("the slice method needs k".into())
            })?;
            let cfg1 = SchemeOneConfig {
                k,
                mode: spec.os1_mode,
            };
            let res = ozaki1_matmul(a, b, &cfg1)?;
            Ok((MatrixOutput::F64(res.output), res.gemm_count))
        }
        Method::F64Base => {
            let af = collapse_to_f64(a);
            let bf = collapse_to_f64(b);
            Ok((MatrixOutput::F64(af.mul_f64(&bf)?), 1))
        }
    }
}

fn execute(
    point: &Point,
    prep: &Prepared,
    cfg: &SweepConfig,
) -> core::result::Result<(MatrixOutput, u64), ozmm_core::Error> {
    let spec = RunSpec {
        method: point.method,
        param: point.param,
        regime: cfg.regime,
        backend: Some(resolved_backend(cfg)),
        output_words: cfg.output_words,
        table_q_max: cfg.table_q_max,
        os1_mode: Os1Mode::Truncated,
    };
    run_spec(&prep.a, &prep.b, &spec)
}

fn eval_point(point: &Point, prep: &Prepared, cfg: &SweepConfig) -> SweepRow {
    let phi = match cfg.gen.resolve() {
        Ok(GenKind::PhiLognormal(phi)) => Some(phi),
        _ => None,
    };
    let backend = match point.method {
        Method::Os2Fast | Method::Os2Accu => backend_label(resolved_backend(cfg)),
        _ => "-",
    };
    let started = Instant::now();
    let outcome = execute(point, prep, cfg).and_then(|(output, muls)| {
        let report = ErrorReport::between(&prep.reference, &output)?;
        Ok((muls, report))
    });
    let wall_ms = if cfg.timing {
        started.elapsed().as_millis()
    } else {
        0
    };
    let mut row = SweepRow {
        method: point.method.label(),
        n: point.n,
        phi,
        param: point.param,
        muls: 0,
        max_rel_err: None,
        max_abs_err: None,
        wall_ms,
        backend,
        status: String::from("ok"),
    };
    match outcome {
        Ok((muls, report)) => {
            row.muls = muls;
            row.max_rel_err = Some(report.max_rel_err);
            row.max_abs_err = Some(report.max_abs_err);
        }
        Err(e) => {
            row.status = format!("{e}").replace(',', ";");
        }
    }
    row
}

pub fn natural_backend(regime: RegimeChoice) -> BackendKind {
    match regime {
        RegimeChoice::Int8 => BackendKind::Int8Sim,
        RegimeChoice::Fp64 => BackendKind::Fp64Exact,
    }
}

fn resolved_backend(cfg: &SweepConfig) -> BackendKind {
    cfg.backend.unwrap_or(natural_backend(cfg.regime))
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &n in &cfg.sizes {
        for &method in &cfg.methods {
            match method {
                Method::Os2Fast | Method::Os2Accu => {
                    for &s in &cfg.s_values {
                        points.push(Point { method, n, param: Some(s) });
                    }
                }
                Method::Os1 => {
                    for &k in &cfg.k_values {
                        points.push(Point { method, n, param: Some(k) });
                    }
                }
                Method::F64Base => points.push(Point { method, n, param: None }),
            }
        }
    }

    let mut prepared: HashMap<usize, Prepared> = HashMap::new();
    for &n in &cfg.sizes {
        if let std::collections::hash_map::Entry::Vacant(slot) = prepared.entry(n) {
            slot.insert(prepare(cfg, n)?);
        }
    }

    let mut slots: Vec<Option<SweepRow>> = Vec::new();
    slots.resize_with(points.len(), || None);
    if !points.is_empty() {
        let workers = std::thread::available_parallelism()
            .map(|v| v.get())
            .unwrap_or(1)
            .min(points.len());
        let next = AtomicUsize::new(0);
        std::thread::scope(|sc| {
            let (tx, rx) = mpsc::channel::<(usize, SweepRow)>();
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                let points = &points;
                let prepared = &prepared;
                sc.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= points.len() {
                        break;
                    }
                    let prep = &prepared[&points[i].n];
                    let row = eval_point(&points[i], prep, cfg);
                    if tx.send((i, row)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (i, row) in rx {
                slots[i] = Some(row);
            }
        });
    }
    Ok(slots
        .into_iter()
        .map(|r| r.expect("every point reports exactly once"))
        .collect())
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("method,n,phi,s,muls,max_rel_err,max_abs_err,wall_ms,backend,status\n");
    for r in rows {
        let phi = r.phi.map(|v| format!("{v}")).unwrap_or_default();
        let param = r.param.map(|v| format!("{v}")).unwrap_or_default();
        let rel = r.max_rel_err.map(|v| format!("{v:e}")).unwrap_or_default();
        let abs = r.max_abs_err.map(|v| format!("{v:e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method, r.n, phi, param, r.muls, rel, abs, r.wall_ms, r.backend, r.status
        ));
    }
    out
}
