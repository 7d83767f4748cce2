//! Command-line front end. The `codegemm` binary is a thin wrapper around
//! [`main_with_args`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::accounting::{aqlm_codebook_bytes, bit_breakdown, enumerate_configs, predict_complexity, ConfigRanges};
use crate::bench::{block_totals, resolve_shapes, run_bench, run_engine, write_csv, BenchOptions, Engine};
use crate::engines::TileConfig;
use crate::error::{Error, Result};
use crate::quantizer::{quant_error, quantize_layer_with_report, reconstruct, Group, QuantConfig, Scheme};
use crate::storage::{deserialize, serialize};
use crate::tensors::{gaussian_matrix, load_tensor, save_tensor, Half, Matrix};

pub const THREADS_ENV: &str = "CODEGEMM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "codegemm", version, about = "Codebook quantization and Psumbook GEMM lab")]
pub struct Cli {
    /// Worker threads (falls back to $CODEGEMM_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantize a weight tensor into a layer file.
    Quantize(QuantizeArgs),
    /// Decode a layer file back into a dense tensor.
    Reconstruct {
        #[arg(long)]
        layer: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multiply a layer by an input tensor with one of the engines.
    Gemm(GemmArgs),
    /// Average bits per weight, or enumerate configs near a target.
    Bits(BitsArgs),
    /// Predicted operation counts and table sizes.
    Predict(PredictArgs),
    /// Time engines over a shape suite and emit CSV.
    Bench(BenchArgs),
    /// Time engines over a grid of tile sizes and emit CSV.
    Sweep(SweepArgs),
    /// Relative Frobenius error between two tensors.
    Error {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        approx: PathBuf,
    },
    /// Write a seeded Gaussian tensor.
    Random {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        std: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long)]
    pub v: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub b: u32,
    /// Group size, or -1 for one scale per row.
    #[arg(long, allow_hyphen_values = true)]
    pub g: i64,
}

impl SchemeArgs {
    fn scheme(&self) -> Result<Scheme> {
        Scheme::new(self.v, self.m, self.b, Group::from_i64(self.g)?)
    }
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Weight tensor; a seeded Gaussian of --rows x --cols when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::quantizer::DEFAULT_KMEANS_ITERS)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GemmArgs {
    #[arg(long)]
    pub layer: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum)]
    pub engine: Engine,
    #[arg(long, default_value_t = crate::engines::DEFAULT_TILE_WIDTH)]
    pub tw: usize,
    #[arg(long, default_value_t = crate::engines::DEFAULT_TILE_HEIGHT)]
    pub th: usize,
    /// Output tensor (binary16).
    #[arg(long)]
    pub out: PathBuf,
    /// Print operation counters as JSON.
    #[arg(long)]
    pub counters: bool,
}

#[derive(Debug, Args)]
pub struct BitsArgs {
    #[arg(long, value_delimiter = ',')]
    pub v: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub b: Vec<u32>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub g: Vec<i64>,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Enumerate every config within --tol of this average bit width.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Weight rows (M).
    #[arg(long)]
    pub rows: usize,
    /// Weight columns / reduction dimension (K).
    #[arg(long)]
    pub cols: usize,
    /// Input columns (N).
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = crate::engines::DEFAULT_TILE_WIDTH)]
    pub tw: usize,
}

#[derive(Debug, Args)]
pub struct HarnessArgs {
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [Engine::Codegemm, Engine::Dequant])]
    pub engines: Vec<Engine>,
    /// Batch sizes (M) for the built-in suites.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    pub batch: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    pub v: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 8)]
    pub b: u32,
    #[arg(long, default_value_t = 128, allow_hyphen_values = true)]
    pub g: i64,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// llama8b, llama70b, a CSV file with header M,N,K, or MxNxK[,...].
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = crate::engines::DEFAULT_TILE_WIDTH)]
    pub tw: usize,
    #[arg(long, default_value_t = crate::engines::DEFAULT_TILE_HEIGHT)]
    pub th: usize,
    #[command(flatten)]
    pub harness: HarnessArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "1x4096x4096,1x8192x8192")]
    pub shapes: String,
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128])]
    pub tw: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2048usize, 4096])]
    pub th: Vec<usize>,
    #[command(flatten)]
    pub harness: HarnessArgs,
}

/// Thread count from the flag, then `$CODEGEMM_THREADS`, then the machine.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(Error::Config("--threads must be >= 1".into()))
        } else {
            Ok(n)
        };
    }
    if let Ok(s) = std::env::var(THREADS_ENV) {
        return match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn print_json(out: &mut dyn Write, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn round3(x: f64) -> String {
    format!("{x:.3}")
}

fn bits_json(scheme: &Scheme, rows: usize, cols: usize) -> Result<Value> {
    let bits = bit_breakdown(scheme, rows, cols)?;
    let r = bits.report();
    Ok(json!({
        "v": scheme.v, "m": scheme.m, "b": scheme.b, "g": scheme.g.as_i64(),
        "rows": rows, "cols": cols,
        "q_code": r.q_code, "q_codebook": r.q_codebook, "q_norm": r.q_norm, "q_bar": r.q_bar,
        "total_bits": r.total_bits.to_string(),
        "rounded": {
            "q_code": round3(r.q_code), "q_codebook": round3(r.q_codebook),
            "q_norm": round3(r.q_norm), "q_bar": round3(r.q_bar),
        },
    }))
}

/// Execute a parsed command, writing its JSON (or CSV) to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(cli.command, threads, &mut buf));
    out.write_all(&buf)?;
    result
}

fn dispatch(command: Command, threads: usize, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Quantize(a) => cmd_quantize(a, out),
        Command::Reconstruct { layer, out: path } => {
            let q = deserialize(&layer)?;
            let w = reconstruct(&q);
            save_tensor(&w, &path)?;
            print_json(out, &json!({ "rows": w.rows(), "cols": w.cols(), "out": path }))
        }
        Command::Gemm(a) => cmd_gemm(a, out),
        Command::Bits(a) => cmd_bits(a, out),
        Command::Predict(a) => {
            let scheme = a.scheme.scheme()?;
            let p = predict_complexity(&scheme, a.rows, a.n, a.cols, a.tw)?;
            let bytes = aqlm_codebook_bytes(scheme.m, scheme.b, scheme.v)?;
            print_json(
                out,
                &json!({
                    "v": scheme.v, "m": scheme.m, "b": scheme.b, "g": scheme.g.as_i64(),
                    "rows": a.rows, "n": a.n, "cols": a.cols, "tw": a.tw,
                    "prediction": p.report(),
                    "codebook_bytes": bytes,
                    "psumbook_bytes_per_tile": p.psumbook_entries_per_tile * 4,
                }),
            )
        }
        Command::Bench(a) => {
            let shapes = resolve_shapes(&a.suite, &a.harness.batch)?;
            harness(&shapes, &a.harness, vec![TileConfig::new(a.tw, a.th)], threads, out)
        }
        Command::Sweep(a) => {
            let shapes = resolve_shapes(&a.shapes, &a.harness.batch)?;
            let tiles = a
                .tw
                .iter()
                .flat_map(|&tw| a.th.iter().map(move |&th| TileConfig::new(tw, th)))
                .collect();
            harness(&shapes, &a.harness, tiles, threads, out)
        }
        Command::Error { reference, approx } => {
            let e = quant_error(&load_tensor(&reference)?, &load_tensor(&approx)?)?;
            print_json(out, &json!({ "relative_error": e }))
        }
        Command::Random {
            rows,
            cols,
            seed,
            std,
            out: path,
        } => {
            save_tensor(&gaussian_matrix(rows, cols, std, seed)?, &path)?;
            print_json(out, &json!({ "rows": rows, "cols": cols, "out": path }))
        }
    }
}

fn cmd_quantize(a: QuantizeArgs, out: &mut dyn Write) -> Result<()> {
    let scheme = a.scheme.scheme()?;
    let w = match &a.input {
        Some(path) => {
            let w = load_tensor(path)?;
            if a.rows.is_some_and(|r| r != w.rows()) || a.cols.is_some_and(|c| c != w.cols()) {
                return Err(Error::Shape(format!(
                    "--rows/--cols do not match the {}x{} input",
                    w.rows(),
                    w.cols()
                )));
            }
            w
        }
        None => {
            let (Some(rows), Some(cols)) = (a.rows, a.cols) else {
                return Err(Error::Config("--rows and --cols are required without --input".into()));
            };
            scheme.check_dims(rows, cols)?;
            gaussian_matrix(rows, cols, 1.0, a.seed)?
        }
    };
    let cfg = QuantConfig::new(scheme, a.seed).with_iters(a.iters);
    let (q, report) = quantize_layer_with_report(&w, &cfg)?;
    serialize(&q, &a.out)?;
    let err = quant_error(&w, &reconstruct(&q)).ok();
    print_json(
        out,
        &json!({
            "out": a.out,
            "bits": bits_json(&scheme, w.rows(), w.cols())?,
            "relative_error": err,
            "stage_sse": report.stage_sse,
            "seed": a.seed,
            "kmeans_iters": a.iters,
        }),
    )
}

fn cmd_gemm(a: GemmArgs, out: &mut dyn Write) -> Result<()> {
    let q = deserialize(&a.layer)?;
    let x = load_tensor(&a.x)?;
    let tiles = TileConfig::new(a.tw, a.th);
    let dense_weights = if a.engine == Engine::Dense {
        reconstruct(&q)
    } else {
        Matrix::filled(1, 1, Half::ZERO)?
    };
    let (y, c) = run_engine(a.engine, &q, &dense_weights, &x, tiles)?;
    save_tensor(&y.to_half(), &a.out)?;
    if a.counters {
        let dense_equiv = (q.rows() * x.cols() * q.cols()) as u64;
        print_json(
            out,
            &json!({
                "engine": a.engine.id(),
                "rows": q.rows(), "n": x.cols(), "cols": q.cols(),
                "tw": a.tw, "th": a.th,
                "mac_build": c.mac_build,
                "mac_read_adds": c.mac_read_adds,
                "lookups": c.lookups,
                "mac_dense": c.mac_dense,
                "psumbook_entries": c.psumbook_entries,
                "dense_equivalent": dense_equiv,
                "read_dense_ratio": c.mac_read_adds as f64 / dense_equiv as f64,
                "build_fraction": c.build_fraction(),
                "out": a.out,
            }),
        )
    } else {
        print_json(out, &json!({ "engine": a.engine.id(), "rows": y.rows(), "cols": y.cols(), "out": a.out }))
    }
}

fn cmd_bits(a: BitsArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(target) = a.target {
        let defaults = ConfigRanges::default();
        let ranges = ConfigRanges {
            v: if a.v.is_empty() { defaults.v } else { a.v },
            m: if a.m.is_empty() { defaults.m } else { a.m },
            b: if a.b.is_empty() { defaults.b } else { a.b },
            g: if a.g.is_empty() {
                defaults.g
            } else {
                a.g.iter().map(|&g| Group::from_i64(g)).collect::<Result<_>>()?
            },
        };
        let hits = enumerate_configs(target, a.tol, a.rows, a.cols, &ranges);
        let list = hits
            .iter()
            .map(|(s, _)| bits_json(s, a.rows, a.cols))
            .collect::<Result<Vec<_>>>()?;
        return print_json(out, &json!({ "target": target, "tol": a.tol, "count": list.len(), "configs": list }));
    }
    let single = |name: &str, len: usize| {
        if len == 1 {
            Ok(())
        } else {
            Err(Error::Config(format!("--{name} takes exactly one value without --target")))
        }
    };
    single("v", a.v.len())?;
    single("m", a.m.len())?;
    single("b", a.b.len())?;
    single("g", a.g.len())?;
    let scheme = Scheme::new(a.v[0], a.m[0], a.b[0], Group::from_i64(a.g[0])?)?;
    print_json(out, &bits_json(&scheme, a.rows, a.cols)?)
}

fn harness(
    shapes: &[crate::bench::BenchShape],
    h: &HarnessArgs,
    tiles: Vec<TileConfig>,
    threads: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let opts = BenchOptions {
        engines: h.engines.clone(),
        scheme: Scheme::new(h.v, h.m, h.b, Group::from_i64(h.g)?)?,
        tiles,
        repeats: h.repeats,
        warmup: h.warmup,
        seed: h.seed,
        threads,
    };
    let records = run_bench(shapes, &opts)?;
    match &h.out {
        Some(path) => {
            write_csv(&records, fs::File::create(path)?)?;
            print_json(
                out,
                &json!({ "out": path, "rows": records.len(), "block_totals_us": block_totals(&records, shapes) }),
            )
        }
        None => write_csv(&records, out),
    }
}

/// Parse `args`, run, and return the process exit code: 0 on success, 2 on
/// usage errors, 1 otherwise (with `{"error": {...}}` JSON on stderr).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            1
        }
    }
}
