//! Benchmark harness: shape suites, timing, CSV records.
//!
//! Shapes follow the `(M, N, K)` convention of GEMV/GEMM kernel tables:
//! `M` is the batch (input columns), `N` the output features (weight rows)
//! and `K` the reduction dimension. The engines themselves take an
//! `N x K` weight and a `K x M` input.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::accounting::{bit_breakdown, predict_complexity};
use crate::engines::{codegemm_gemm, dense_gemm, dequant_gemm, DequantOrder, OpCounters, TileConfig};
use crate::error::{Error, Result};
use crate::quantizer::{reconstruct, synthetic_layer, QuantizedLayer, Scheme};
use crate::tensors::{gaussian_matrix, Half, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Dense,
    Dequant,
    DequantMirrored,
    Codegemm,
}

impl Engine {
    pub fn id(self) -> &'static str {
        match self {
            Engine::Dense => "dense",
            Engine::Dequant => "dequant",
            Engine::DequantMirrored => "dequant-mirrored",
            Engine::Codegemm => "codegemm",
        }
    }

    pub const ALL: [Engine; 4] = [Engine::Dense, Engine::Dequant, Engine::DequantMirrored, Engine::Codegemm];
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown engine {s:?}")))
    }
}

/// Run one engine. `dense_weights` is used only by [`Engine::Dense`].
pub fn run_engine(
    engine: Engine,
    q: &QuantizedLayer,
    dense_weights: &Matrix<Half>,
    x: &Matrix<Half>,
    tiles: TileConfig,
) -> Result<(Matrix<f32>, OpCounters)> {
    match engine {
        Engine::Dense => dense_gemm::<f32>(dense_weights, x),
        Engine::Dequant => dequant_gemm(q, x, DequantOrder::Naive),
        Engine::DequantMirrored => dequant_gemm(q, x, DequantOrder::Mirrored),
        Engine::Codegemm => codegemm_gemm(q, x, tiles),
    }
}

/// Counters an engine must report for an `rows x cols` layer and `n` input
/// columns.
pub fn expected_counters(engine: Engine, scheme: &Scheme, rows: usize, n: usize, cols: usize, tw: usize) -> Result<OpCounters> {
    let p = predict_complexity(scheme, rows, n, cols, tw)?;
    Ok(match engine {
        Engine::Codegemm => OpCounters {
            mac_build: p.c_build as u64,
            mac_read_adds: p.c_read as u64,
            lookups: p.c_read as u64,
            mac_dense: 0,
            psumbook_entries: (p.psumbook_entries_per_tile as u64)
                .min(scheme.m as u64 * scheme.codebook_len() as u64 * cols as u64 / scheme.v as u64),
        },
        _ => OpCounters {
            mac_dense: p.c_dense as u64,
            ..Default::default()
        },
    })
}

/// One `(M, N, K)` workload; `count` is how many times it occurs in a
/// decoder block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchShape {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub count: usize,
}

impl BenchShape {
    pub fn new(name: impl Into<String>, m: usize, n: usize, k: usize, count: usize) -> Self {
        BenchShape {
            name: name.into(),
            m,
            n,
            k,
            count,
        }
    }
}

/// Linear layers of one decoder block, as `(name, N, K, count)`.
/// q/o projections share one shape, gate/up another, down the transpose.
/// The grouped-query k/v projections are not part of these suites.
const LLAMA8B_BLOCK: [(&str, usize, usize, usize); 3] = [
    ("qo_proj", 4096, 4096, 2),
    ("gate_up_proj", 14336, 4096, 2),
    ("down_proj", 4096, 14336, 1),
];

const LLAMA70B_BLOCK: [(&str, usize, usize, usize); 3] = [
    ("qo_proj", 8192, 8192, 2),
    ("gate_up_proj", 28672, 8192, 2),
    ("down_proj", 8192, 28672, 1),
];

pub fn builtin_suite(name: &str, batches: &[usize]) -> Result<Vec<BenchShape>> {
    let block = match name {
        "llama8b" => &LLAMA8B_BLOCK,
        "llama70b" => &LLAMA70B_BLOCK,
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    let mut shapes = Vec::new();
    for &m in batches {
        for &(layer, n, k, count) in block {
            shapes.push(BenchShape::new(layer, m, n, k, count));
        }
    }
    Ok(shapes)
}

/// Parse a shape CSV with header `M,N,K` (an optional fourth `count`
/// column is honoured).
pub fn parse_shape_csv(reader: impl Read) -> Result<Vec<BenchShape>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rd.headers().map_err(|e| Error::MalformedShapes(e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3 || names[..3] != ["M", "N", "K"] {
        return Err(Error::MalformedShapes(format!("expected header M,N,K, got {names:?}")));
    }
    let mut shapes = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedShapes(e.to_string()))?;
        let field = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .filter(|&x: &usize| x > 0)
                .ok_or_else(|| Error::MalformedShapes(format!("row {}: bad field {i}: {:?}", line + 1, rec.get(i))))
        };
        let count = if names.len() > 3 { field(3)? } else { 1 };
        shapes.push(BenchShape::new(format!("row{}", line + 1), field(0)?, field(1)?, field(2)?, count));
    }
    if shapes.is_empty() {
        return Err(Error::MalformedShapes("no shapes".into()));
    }
    Ok(shapes)
}

/// Parse `MxNxK[,MxNxK...]`.
pub fn parse_shape_list(spec: &str) -> Result<Vec<BenchShape>> {
    spec.split(',')
        .map(|item| {
            let dims: Vec<usize> = item
                .trim()
                .split('x')
                .map(|d| d.parse().map_err(|_| Error::MalformedShapes(item.to_string())))
                .collect::<Result<_>>()?;
            match dims[..] {
                [m, n, k] if m > 0 && n > 0 && k > 0 => Ok(BenchShape::new(item.trim(), m, n, k, 1)),
                _ => Err(Error::MalformedShapes(item.to_string())),
            }
        })
        .collect()
}

/// A suite name, a CSV path, or an inline `MxNxK` list.
pub fn resolve_shapes(spec: &str, batches: &[usize]) -> Result<Vec<BenchShape>> {
    if spec == "llama8b" || spec == "llama70b" {
        return builtin_suite(spec, batches);
    }
    if spec.ends_with(".csv") || Path::new(spec).is_file() {
        return parse_shape_csv(std::fs::File::open(spec)?);
    }
    if spec.contains('x') && spec.chars().all(|c| c.is_ascii_digit() || c == 'x' || c == ',') {
        return parse_shape_list(spec);
    }
    Err(Error::UnknownSuite(spec.to_string()))
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub engines: Vec<Engine>,
    pub scheme: Scheme,
    pub tiles: Vec<TileConfig>,
    pub repeats: usize,
    pub warmup: usize,
    pub seed: u64,
    pub threads: usize,
}

/// One CSV row.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub engine: Engine,
    pub v: usize,
    pub m_books: usize,
    pub b: u32,
    pub g: i64,
    pub tw: usize,
    pub th: usize,
    pub threads: usize,
    pub wall_us_median: f64,
    pub wall_us_min: f64,
    pub mac_build: u64,
    pub mac_read: u64,
    pub mac_dense: u64,
    pub lookups: u64,
    pub build_fraction: Option<f64>,
    pub q_bar: f64,
    #[serde(skip)]
    pub samples_us: Vec<f64>,
    #[serde(skip)]
    pub counters: OpCounters,
}

pub const CSV_HEADER: [&str; 19] = [
    "M", "N", "K", "engine", "v", "m", "b", "g", "tw", "th", "threads", "wall_us_median", "wall_us_min", "mac_build",
    "mac_read", "mac_dense", "lookups", "build_fraction", "q_bar",
];

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn time_engine(
    engine: Engine,
    q: &QuantizedLayer,
    dense_weights: &Matrix<Half>,
    x: &Matrix<Half>,
    tiles: TileConfig,
    opts: &BenchOptions,
) -> Result<(Vec<f64>, OpCounters)> {
    for _ in 0..opts.warmup {
        run_engine(engine, q, dense_weights, x, tiles)?;
    }
    let mut samples = Vec::with_capacity(opts.repeats);
    let mut counters = OpCounters::default();
    for _ in 0..opts.repeats.max(1) {
        let start = Instant::now();
        let (y, c) = run_engine(engine, q, dense_weights, x, tiles)?;
        let elapsed = start.elapsed();
        std::hint::black_box(&y);
        samples.push((elapsed.as_nanos().max(1)) as f64 / 1000.0);
        counters = c;
    }
    Ok((samples, counters))
}

/// Time every engine on every shape for every tile setting.
///
/// Weights are a seeded synthetic layer; the dense engine multiplies its
/// binary16 reconstruction. Counter fields are checked against the
/// closed-form predictions before a record is emitted.
pub fn run_bench(shapes: &[BenchShape], opts: &BenchOptions) -> Result<Vec<BenchRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        let mut out = Vec::new();
        for (i, shape) in shapes.iter().enumerate() {
            let seed = opts.seed.wrapping_add(i as u64);
            let q = synthetic_layer(shape.n, shape.k, opts.scheme, seed)?;
            let x = gaussian_matrix(shape.k, shape.m, 1.0, seed ^ 0x5eed)?;
            let dense_weights = if opts.engines.contains(&Engine::Dense) {
                reconstruct(&q)
            } else {
                Matrix::filled(1, 1, Half::ZERO)?
            };
            let q_bar = bit_breakdown(&opts.scheme, shape.n, shape.k)?.q_bar_f64();
            for &engine in &opts.engines {
                for &tiles in &opts.tiles {
                    tiles.validate(&opts.scheme)?;
                    let (samples, counters) = time_engine(engine, &q, &dense_weights, &x, tiles, opts)?;
                    let expected = expected_counters(engine, &opts.scheme, shape.n, shape.m, shape.k, tiles.tw)?;
                    assert_eq!(counters, expected, "{engine} counters disagree with prediction on {shape:?}");
                    out.push(BenchRecord {
                        m: shape.m,
                        n: shape.n,
                        k: shape.k,
                        engine,
                        v: opts.scheme.v,
                        m_books: opts.scheme.m,
                        b: opts.scheme.b,
                        g: opts.scheme.g.as_i64(),
                        tw: tiles.tw,
                        th: tiles.th,
                        threads: opts.threads,
                        wall_us_median: median(&samples),
                        wall_us_min: samples.iter().copied().fold(f64::INFINITY, f64::min),
                        mac_build: counters.mac_build,
                        mac_read: counters.mac_read_adds,
                        mac_dense: counters.mac_dense,
                        lookups: counters.lookups,
                        build_fraction: counters.build_fraction(),
                        q_bar: if engine == Engine::Dense { 16.0 } else { q_bar },
                        samples_us: samples,
                        counters,
                    });
                }
            }
        }
        Ok(out)
    })
}

pub fn write_csv(records: &[BenchRecord], w: impl Write) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        wr.serialize(r).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

/// Per engine and batch: sum over shapes of `count x median`, i.e. the
/// linear-layer time of one decoder block.
#[derive(Clone, Debug, Serialize)]
pub struct BlockTotal {
    pub engine: Engine,
    pub m: usize,
    pub tw: usize,
    pub th: usize,
    pub wall_us: f64,
}

pub fn block_totals(records: &[BenchRecord], shapes: &[BenchShape]) -> Vec<BlockTotal> {
    let mut totals: Vec<BlockTotal> = Vec::new();
    for r in records {
        let count = shapes
            .iter()
            .find(|s| (s.m, s.n, s.k) == (r.m, r.n, r.k))
            .map_or(1, |s| s.count);
        let contribution = count as f64 * r.wall_us_median;
        match totals
            .iter_mut()
            .find(|t| (t.engine, t.m, t.tw, t.th) == (r.engine, r.m, r.tw, r.th))
        {
            Some(t) => t.wall_us += contribution,
            None => totals.push(BlockTotal {
                engine: r.engine,
                m: r.m,
                tw: r.tw,
                th: r.th,
                wall_us: contribution,
            }),
        }
    }
    totals
}
