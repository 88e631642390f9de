use clap::{Args, Parser, Subcommand, ValueEnum};
use hofa::counting::{best_popular_difference_q, count_indicator, lambda_phased, lambda_simple, popular_histogram};
use hofa::energy::{popular_difference_pipeline, EnergyParams, PipelineParams};
use hofa::numeric::int_root;
use hofa::oracle::naive_count_indicator;
use hofa::rng::SplitMix64;
use hofa::verify::{self, Suite};
use hofa::{BoxSpec, ConfigSpec, GridFunction, HofaError, PhaseTable, SetIndicator, TorusPhase};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_PROPERTY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;

#[derive(Parser)]
#[command(name = "hofa", version, about = "Polynomial corner counting, popular differences and property verification")]
struct Cli {
    /// Worker threads; falls back to HOFA_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Configuration count Λ for an indicator set.
    Count(CountArgs),
    /// Most popular difference r in a set, directly or through the energy increment.
    Popdiff(PopdiffArgs),
    /// Seeded property suites.
    Verify(VerifyArgs),
    /// Write a set file.
    Gen(GenArgs),
    /// Time bitset against naive counting.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    set: PathBuf,
    /// Exponents, e.g. `1,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u32>,
    /// Side `N` of the simple average over `r ∈ [N]`; selects the simple or phased form.
    #[arg(long = "N")]
    n_side: Option<u64>,
    #[arg(long, default_value_t = 1)]
    q: u64,
    /// Difference range for the general form.
    #[arg(long = "M")]
    big_m: Option<u64>,
    /// Constant phases `t/d`, one per trailing exponent; needs `--N`.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<String>,
    /// Recount with the membership-loop oracle and require agreement.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct PopdiffArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u32>,
    /// Largest multiplier r searched by the direct route; defaults to `N_n^{1/m_n}`.
    #[arg(long = "M")]
    big_m: Option<u64>,
    #[arg(long, default_value_t = 1)]
    q: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Run the energy-increment route.
    #[arg(long)]
    pipeline: bool,
    /// Allow the direct search when the decomposition does not converge.
    #[arg(long)]
    fallback: bool,
    #[arg(long, default_value_t = 6)]
    qmax: u64,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Scale shrink factor; default `δ/(16n)`.
    #[arg(long)]
    gamma: Option<f64>,
    /// Difference range divisor; default `8n`.
    #[arg(long)]
    range_divisor: Option<f64>,
    /// Reporting divisor for the count threshold; default `2^{n+1}`.
    #[arg(long)]
    divisor: Option<f64>,
    /// Histogram CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// partition, counting, gowers, expsum, energy or all.
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Random,
    Full,
    Empty,
    Residue,
    ProductAp,
}

#[derive(Args)]
struct GenArgs {
    kind: GenKind,
    #[arg(long = "box", value_delimiter = ',', required = true)]
    dims: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Membership probability for `random`.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Modulus for `residue`.
    #[arg(long)]
    q: Option<u64>,
    /// Allowed residues for `residue`, applied to every coordinate.
    #[arg(long, value_delimiter = ',')]
    allowed: Vec<u64>,
    /// Per-axis first terms for `product-ap`.
    #[arg(long, value_delimiter = ',')]
    start: Vec<i64>,
    /// Per-axis common differences for `product-ap`.
    #[arg(long, value_delimiter = ',')]
    step: Vec<i64>,
    /// Per-axis lengths for `product-ap`.
    #[arg(long, value_delimiter = ',')]
    len: Vec<u64>,
    /// Write the binary format instead of text.
    #[arg(long)]
    binary: bool,
    /// Destination; the set goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct BenchArgs {
    /// One box to time; a default sweep otherwise.
    #[arg(long = "box", value_delimiter = ',')]
    dims: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    m: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    q: u64,
    /// Difference range; defaults to `N_n^{1/m_n} − 1`, at least 1.
    #[arg(long = "M")]
    big_m: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

enum Failure {
    Usage(String),
    Precondition(String),
    Property(Value),
}

impl From<HofaError> for Failure {
    fn from(e: HofaError) -> Self {
        match e {
            HofaError::Precondition(_) | HofaError::Overflow(_) | HofaError::TooLarge { .. } => {
                Failure::Precondition(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<Output, Failure>;

enum Output {
    Json(Value),
    Text(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads(cli.threads) {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::Count(a) => cmd_count(&a),
        Command::Popdiff(a) => cmd_popdiff(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    let mut stdout = std::io::stdout().lock();
    match result {
        Ok(Output::Json(v)) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&v).unwrap());
            ExitCode::SUCCESS
        }
        Ok(Output::Text(s)) => {
            let _ = write!(stdout, "{s}");
            ExitCode::SUCCESS
        }
        Err(Failure::Property(v)) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&v).unwrap());
            eprintln!("error: property failure");
            ExitCode::from(EXIT_PROPERTY)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_PRECONDITION)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("HOFA_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|e| format!("HOFA_THREADS={v:?}: {e}"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("thread count must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn read_set(path: &Path) -> Result<SetIndicator, Failure> {
    SetIndicator::read_path(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_phase(s: &str) -> Result<TorusPhase, Failure> {
    let bad = || Failure::Usage(format!("bad phase {s:?}, expected t/d or a decimal"));
    match s.split_once('/') {
        Some((t, d)) => {
            let t: i128 = t.trim().parse().map_err(|_| bad())?;
            let d: i128 = d.trim().parse().map_err(|_| bad())?;
            TorusPhase::rational(t, d).map_err(|_| bad())
        }
        None => s.trim().parse::<f64>().map(TorusPhase::real).map_err(|_| bad()),
    }
}

/// `χ_A` on `dims`, reading points outside the box of `A` as 0.
fn indicator_on(a: &SetIndicator, dims: Vec<u64>) -> Result<GridFunction, Failure> {
    let bx = BoxSpec::new(dims)?;
    Ok(GridFunction::from_fn(bx, |x| Complex64::new(if a.contains(x) { 1.0 } else { 0.0 }, 0.0))?)
}

fn cmd_count(args: &CountArgs) -> Outcome {
    let a = read_set(&args.set)?;
    let dims = a.box_spec().dims().to_vec();
    if let Some(n_side) = args.n_side {
        let alphas = args.alpha.iter().map(|s| parse_phase(s)).collect::<Result<Vec<_>, _>>()?;
        let n = args
            .m
            .len()
            .checked_sub(alphas.len())
            .filter(|&n| n >= 1)
            .ok_or_else(|| Failure::Usage("more phases than exponents".into()))?;
        if n != dims.len() {
            return Err(Failure::Usage(format!("{n} spatial exponents for a {}-dimensional set", dims.len())));
        }
        let base: Vec<u64> = args.m[..n]
            .iter()
            .map(|&k| n_side.checked_pow(k).ok_or_else(|| Failure::Precondition(format!("{n_side}^{k} overflows"))))
            .collect::<Result<_, _>>()?;
        let mut fs = vec![indicator_on(&a, base.clone())?];
        for i in 0..n {
            let mut d = base.clone();
            d[i] *= 2;
            if d[i] > dims[i] {
                eprintln!("warning: set box side {} is below {} on axis {}; missing cells read as 0", dims[i], d[i], i + 1);
            }
            fs.push(indicator_on(&a, d)?);
        }
        let (mode, lambda) = if alphas.is_empty() {
            ("simple", lambda_simple(&fs, &args.m, n_side)?)
        } else {
            let bx = BoxSpec::new(base.clone())?;
            let tables: Vec<PhaseTable> = alphas.iter().map(|&t| PhaseTable::constant(bx.clone(), t)).collect();
            ("phased", lambda_phased(&fs, &tables, &args.m, n_side)?)
        };
        let normalization = base.iter().map(|&d| d as u128).product::<u128>() * n_side as u128;
        let integer_count = (alphas.is_empty()).then(|| (lambda.re * normalization as f64).round() as u128);
        return Ok(Output::Json(json!({
            "command": "count",
            "mode": mode,
            "m": args.m,
            "box": dims,
            "N": n_side,
            "lambda": lambda.re,
            "lambda_im": lambda.im,
            "normalization": normalization,
            "integer_count": integer_count,
        })));
    }
    if !args.alpha.is_empty() {
        return Err(Failure::Usage("--alpha needs --N".into()));
    }
    let big_m = args
        .big_m
        .ok_or_else(|| Failure::Usage("the general form needs --M (or pass --N)".into()))?;
    let spec = ConfigSpec::new(args.m.clone(), dims.clone(), args.q, big_m)?;
    let count = count_indicator(&a, &spec)?;
    let mut doc = json!({
        "command": "count",
        "mode": "general",
        "m": args.m,
        "box": dims,
        "q": args.q,
        "M": big_m,
        "lambda": count.lambda,
        "lambda_im": 0.0,
        "normalization": count.normalization,
        "integer_count": count.integer_count,
    });
    if args.oracle {
        let oracle = naive_count_indicator(&a, &spec);
        doc["oracle_count"] = json!(oracle);
        doc["oracle_agrees"] = json!(oracle == count.integer_count);
        if oracle != count.integer_count {
            return Err(Failure::Property(doc));
        }
    }
    Ok(Output::Json(doc))
}

fn write_histogram(path: &Path, q: u64, hist: &[u64]) -> Result<(), Failure> {
    let mut s = String::from("r,difference,count\n");
    for (k, c) in hist.iter().enumerate() {
        let r = k as u64 + 1;
        s.push_str(&format!("{r},{},{c}\n", q * r));
    }
    std::fs::write(path, s).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_popdiff(args: &PopdiffArgs) -> Outcome {
    let a = read_set(&args.set)?;
    if a.box_spec().n() != args.m.len() {
        return Err(Failure::Usage("exponent tuple length must match the set dimension".into()));
    }
    hofa::config::check_exponents(&args.m)?;
    let n = args.m.len();
    if args.pipeline {
        let params = PipelineParams {
            energy: EnergyParams {
                q_max: args.qmax,
                tau: args.tau,
                gamma: args.gamma,
                range_divisor: args.range_divisor,
                iter_cap: None,
            },
            divisor: args.divisor,
        };
        let res = popular_difference_pipeline(&a, &args.m, args.delta, &params)?;
        if res.certificate.fallback && !args.fallback {
            return Err(Failure::Precondition(format!(
                "decomposition ended with {:?}; pass --fallback to accept the direct search",
                res.certificate.decomposition
            )));
        }
        let c = &res.certificate;
        let (hq, hm) = if c.fallback || c.vacuous { (1, c.big_m) } else { (c.q, c.big_m) };
        let histogram_path = match &args.out {
            Some(p) => {
                write_histogram(p, hq, &popular_histogram(&a, &args.m, hq, hm))?;
                Some(p.display().to_string())
            }
            None => None,
        };
        return Ok(Output::Json(json!({
            "command": "popdiff",
            "route": "pipeline",
            "r_star": res.r,
            "count": res.count,
            "histogram_path": histogram_path,
            "certificate": serde_json::to_value(&res.certificate).unwrap(),
        })));
    }
    if a.is_empty() {
        return Err(Failure::Precondition("A is empty".into()));
    }
    let dims = a.box_spec().dims();
    let big_m = args.big_m.unwrap_or_else(|| int_root(dims[n - 1], args.m[n - 1]).max(1));
    let best = best_popular_difference_q(&a, &args.m, args.q, big_m)?;
    let histogram_path = match &args.out {
        Some(p) => {
            write_histogram(p, args.q, &best.histogram)?;
            Some(p.display().to_string())
        }
        None => None,
    };
    Ok(Output::Json(json!({
        "command": "popdiff",
        "route": "direct",
        "r_star": args.q * best.r,
        "count": best.count,
        "M": big_m,
        "q": args.q,
        "histogram_path": histogram_path,
        "certificate": null,
    })))
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    let suites = Suite::select(&args.suite).map_err(|e| Failure::Usage(e.to_string()))?;
    let start = Instant::now();
    let report = verify::run(&suites, args.seed, args.trials);
    let mut doc = serde_json::to_value(&report).unwrap();
    doc["command"] = json!("verify");
    doc["elapsed_seconds"] = json!(start.elapsed().as_secs_f64());
    for p in &report.properties {
        eprintln!(
            "{}/{}: pass {} fail {} vacuous {} worst {:.3e}",
            p.suite, p.name, p.passed, p.failed, p.vacuous, p.worst
        );
    }
    if report.all_pass() {
        Ok(Output::Json(doc))
    } else {
        Err(Failure::Property(doc))
    }
}

fn generate(args: &GenArgs) -> Result<SetIndicator, Failure> {
    let bx = BoxSpec::new(args.dims.clone())?;
    let n = bx.n();
    let set = match args.kind {
        GenKind::Full => SetIndicator::full(bx)?,
        GenKind::Empty => SetIndicator::empty(bx)?,
        GenKind::Random => {
            if !(0.0..=1.0).contains(&args.p) {
                return Err(Failure::Usage("--p must lie in [0, 1]".into()));
            }
            let mut rng = SplitMix64::new(args.seed);
            SetIndicator::from_predicate(bx, |_| rng.bernoulli(args.p))?
        }
        GenKind::Residue => {
            let q = args.q.filter(|&q| q >= 1).ok_or_else(|| Failure::Usage("residue needs --q >= 1".into()))?;
            if args.allowed.is_empty() || args.allowed.iter().any(|&r| r >= q) {
                return Err(Failure::Usage("residue needs --allowed with values below q".into()));
            }
            SetIndicator::from_predicate(bx, |x| x.iter().all(|&c| args.allowed.contains(&(c.rem_euclid(q as i64) as u64))))?
        }
        GenKind::ProductAp => {
            if args.start.len() != n || args.step.len() != n || args.len.len() != n {
                return Err(Failure::Usage(format!("product-ap needs --start, --step, --len with {n} entries each")));
            }
            if args.step.iter().any(|&d| d <= 0) {
                return Err(Failure::Usage("product-ap steps must be positive".into()));
            }
            SetIndicator::from_predicate(bx, |x| {
                (0..n).all(|i| {
                    let off = x[i] - args.start[i];
                    off >= 0 && off % args.step[i] == 0 && ((off / args.step[i]) as u64) < args.len[i]
                })
            })?
        }
    };
    Ok(set)
}

fn cmd_gen(args: &GenArgs) -> Outcome {
    let set = generate(args)?;
    let mut bytes = Vec::new();
    if args.binary {
        set.write_binary(&mut bytes)?;
    } else {
        set.write_text(&mut bytes)?;
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Ok(Output::Json(json!({
                "command": "gen",
                "path": path.display().to_string(),
                "box": args.dims,
                "members": set.count(),
                "density": set.density(),
                "format": if args.binary { "binary" } else { "text" },
            })))
        }
        None if args.binary => Err(Failure::Usage("--binary needs --out".into())),
        None => Ok(Output::Text(String::from_utf8(bytes).unwrap())),
    }
}

const BENCH_SWEEP: [[u64; 2]; 5] = [[2, 4], [8, 64], [16, 256], [32, 1024], [64, 4096]];

fn cmd_bench(args: &BenchArgs) -> Outcome {
    let boxes: Vec<Vec<u64>> = if args.dims.is_empty() {
        BENCH_SWEEP.iter().map(|b| b.to_vec()).collect()
    } else {
        vec![args.dims.clone()]
    };
    let mut rows = Vec::new();
    for dims in boxes {
        if dims.len() != args.m.len() {
            return Err(Failure::Usage("exponent tuple length must match the box dimension".into()));
        }
        let n = dims.len();
        let big_m = args
            .big_m
            .unwrap_or_else(|| int_root(dims[n - 1], args.m[n - 1]).saturating_sub(1).max(1));
        let mut rng = SplitMix64::new(args.seed);
        let a = SetIndicator::from_predicate(BoxSpec::new(dims.clone())?, |_| rng.bernoulli(args.p))?;
        let spec = ConfigSpec::new(args.m.clone(), dims.clone(), args.q, big_m)?;
        let t0 = Instant::now();
        let fast = count_indicator(&a, &spec)?;
        let bitset_s = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let naive = naive_count_indicator(&a, &spec);
        let naive_s = t1.elapsed().as_secs_f64();
        let row = json!({
            "box": dims,
            "m": args.m,
            "q": args.q,
            "M": big_m,
            "cells": a.box_spec().len(),
            "count": fast.integer_count,
            "naive_count": naive,
            "bitset_seconds": bitset_s,
            "naive_seconds": naive_s,
            "speedup": naive_s / bitset_s.max(1e-12),
        });
        if naive != fast.integer_count {
            return Err(Failure::Property(json!({ "command": "bench", "mismatch": row })));
        }
        rows.push(row);
    }
    if args.format == Format::Json {
        return Ok(Output::Json(json!({ "command": "bench", "rows": rows })));
    }
    let mut csv = String::from("box,m,q,M,cells,count,bitset_seconds,naive_seconds,speedup\n");
    for r in &rows {
        let join = |v: &Value| {
            v.as_array()
                .unwrap()
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("x")
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.2}\n",
            join(&r["box"]),
            join(&r["m"]),
            r["q"],
            r["M"],
            r["cells"],
            r["count"],
            r["bitset_seconds"].as_f64().unwrap(),
            r["naive_seconds"].as_f64().unwrap(),
            r["speedup"].as_f64().unwrap(),
        ));
    }
    Ok(Output::Text(csv))
}
