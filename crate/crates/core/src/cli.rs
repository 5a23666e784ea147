//! Command-line front end: `generate`, `compress`, `query`, `decode`,
//! `stats` and `bench`.
//!
//! Vertex ids on the command line and in text files are 1-based.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{GirgError, Result};
use crate::geometry::Positions;
use crate::graph::Graph;
use crate::hyperbolic::{map_to_girg, sample_hrg_edges_fast, sample_hrg_edges_naive, sample_points, HyperbolicParams};
use crate::io::{read_edge_list, read_positions, write_edge_list, write_polar, write_positions, EdgeListHeader};
use crate::model::{Alpha, GirgParams, WeightSpec};
use crate::sampler::{expected_runtime_probe, sample_girg, SamplerOptions};
use crate::stats::{compute_stats, StatsOptions};
use crate::succinct::{encode_graph, CompressedGraph};

#[derive(Debug, Parser)]
#[command(name = "girg", version, about = "Sample, compress and measure geometric inhomogeneous random graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a graph and write `<out>.edges` and `<out>.pos`.
    Generate(GenerateArgs),
    /// Encode an edge list with its positions into the binary format.
    Compress(CompressArgs),
    /// Answer `degree <v>` and `neighbor <v> <s>` queries on a compressed file.
    Query(QueryArgs),
    /// Decode a compressed file back into an edge list.
    Decode(DecodeArgs),
    /// Structural statistics of a graph.
    Stats(StatsArgs),
    /// Time the sampler over a sweep of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Fixed,
    Sampled,
}

/// Model flags shared by `generate` and `bench`. Unset flags fall back to
/// the optional JSON config file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// JSON file with any of the model fields; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Decay exponent, or `inf` for the threshold model.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub weights: Option<WeightMode>,
    /// Scale of fixed weights.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Minimum of sampled weights.
    #[arg(long)]
    pub w_min: Option<f64>,
    #[arg(long)]
    pub p_scale: Option<f64>,
    #[arg(long)]
    pub c_upper: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Use the hyperbolic model instead of the GIRG parameters.
    #[arg(long)]
    pub hyperbolic: bool,
    #[arg(long)]
    pub alpha_h: Option<f64>,
    #[arg(long)]
    pub c_h: Option<f64>,
    /// Temperature; 0 selects the threshold model.
    #[arg(long)]
    pub t_h: Option<f64>,
    /// Hyperbolic only: sample all pairs directly instead of the fast path.
    #[arg(long)]
    pub naive: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub alpha: Option<String>,
    pub beta: Option<f64>,
    pub weights: Option<WeightMode>,
    pub delta: Option<f64>,
    pub w_min: Option<f64>,
    pub p_scale: Option<f64>,
    pub c_upper: Option<f64>,
    pub tau: Option<f64>,
    pub hyperbolic: Option<bool>,
    pub alpha_h: Option<f64>,
    pub c_h: Option<f64>,
    pub t_h: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// The model family of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Girg { params: GirgParams, weights: WeightSpec },
    Hyperbolic { alpha_h: f64, c_h: f64, t_h: f64, naive: bool },
}

/// Fully resolved configuration of a sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub seed: u64,
    pub threads: usize,
}

impl RunConfig {
    /// Resolves flags over the config file over defaults, rejecting mixed
    /// model families.
    pub fn resolve(m: &ModelArgs, n_flag: Option<usize>) -> Result<(RunConfig, Option<usize>)> {
        let file: ConfigFile = match &m.config {
            None => ConfigFile::default(),
            Some(p) => serde_json::from_reader(BufReader::new(open(p)?))
                .map_err(|e| GirgError::usage(format!("config {}: {e}", p.display())))?,
        };
        let n = n_flag.or(file.n);
        let seed = m.seed.or(file.seed).unwrap_or(0);
        let threads = m.threads.or(file.threads).unwrap_or(1);
        if threads == 0 {
            return Err(GirgError::usage("--threads must be at least 1"));
        }
        let hyperbolic = m.hyperbolic || file.hyperbolic.unwrap_or(false);
        let girg_given = m.d.is_some()
            || m.alpha.is_some()
            || m.beta.is_some()
            || m.weights.is_some()
            || m.delta.is_some()
            || m.w_min.is_some()
            || m.p_scale.is_some()
            || m.c_upper.is_some()
            || m.tau.is_some();
        let hyp_given = m.alpha_h.is_some() || m.c_h.is_some() || m.t_h.is_some() || m.naive;
        let family = if hyperbolic {
            if girg_given {
                return Err(GirgError::usage(
                    "GIRG parameters cannot be combined with --hyperbolic",
                ));
            }
            Family::Hyperbolic {
                alpha_h: m.alpha_h.or(file.alpha_h).unwrap_or(0.75),
                c_h: m.c_h.or(file.c_h).unwrap_or(0.0),
                t_h: m.t_h.or(file.t_h).unwrap_or(0.0),
                naive: m.naive,
            }
        } else {
            if hyp_given {
                return Err(GirgError::usage(
                    "hyperbolic parameters need --hyperbolic",
                ));
            }
            let d = m.d.or(file.d).unwrap_or(2);
            let alpha = match m.alpha.as_ref().or(file.alpha.as_ref()) {
                Some(s) => Alpha::parse(s)?,
                None => Alpha::Finite(2.0),
            };
            let beta = m.beta.or(file.beta).unwrap_or(2.5);
            let mut params = GirgParams::new(d, alpha, beta)?;
            if let Some(c) = m.c_upper.or(file.c_upper) {
                params = params.with_c_upper(c)?;
            }
            if let Some(p) = m.p_scale.or(file.p_scale) {
                params = params.with_p_scale(p)?;
            }
            if let Some(t) = m.tau.or(file.tau) {
                params = params.with_tau(t)?;
            }
            let mode = m.weights.or(file.weights).unwrap_or(WeightMode::Sampled);
            let weights = match mode {
                WeightMode::Fixed => {
                    if m.w_min.or(file.w_min).is_some() {
                        return Err(GirgError::usage("--w-min applies to sampled weights"));
                    }
                    WeightSpec::Fixed {
                        delta: positive("delta", m.delta.or(file.delta).unwrap_or(1.0))?,
                    }
                }
                WeightMode::Sampled => {
                    if m.delta.or(file.delta).is_some() {
                        return Err(GirgError::usage("--delta applies to fixed weights"));
                    }
                    WeightSpec::Sampled {
                        w_min: positive("w_min", m.w_min.or(file.w_min).unwrap_or(1.0))?,
                    }
                }
            };
            Family::Girg { params, weights }
        };
        Ok((RunConfig { family, seed, threads }, n))
    }

    fn options(&self) -> SamplerOptions {
        SamplerOptions {
            threads: self.threads,
            attempt: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(GirgError::usage(format!("{name} must be positive, got {v}")));
    }
    Ok(v)
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output prefix.
    #[arg(long, default_value = "girg")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub positions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Queries such as `degree 3` or `neighbor 3 1`; read from stdin if
    /// none are given.
    pub queries: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Kv,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, conflicts_with = "compressed")]
    pub edges: Option<PathBuf>,
    /// Needed for grid cuts.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    #[arg(long)]
    pub compressed: Option<PathBuf>,
    #[arg(long)]
    pub cc: bool,
    #[arg(long)]
    pub tail: bool,
    #[arg(long, default_value_t = 10)]
    pub k_min: usize,
    #[arg(long)]
    pub components: bool,
    #[arg(long)]
    pub distance: bool,
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    /// Grid resolutions (powers of two), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid_mu: Vec<u64>,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: ReportFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sizes as a list (`1000,2000`) or a doubling range (`2^17..2^20`).
    #[arg(long, default_value = "2^17..2^20")]
    pub sweep: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: ReportFormat,
}

fn open(p: &Path) -> Result<File> {
    File::open(p).map_err(|e| {
        GirgError::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))
    })
}

fn create(p: &Path) -> Result<BufWriter<File>> {
    File::create(p)
        .map(BufWriter::new)
        .map_err(|e| GirgError::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Paths written by `generate`.
pub fn generated_paths(prefix: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        with_suffix(prefix, ".edges"),
        with_suffix(prefix, ".pos"),
        with_suffix(prefix, ".polar"),
    )
}

/// Runs `generate`; returns the graph for callers that want it.
pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<Graph> {
    let (cfg, n) = RunConfig::resolve(&args.model, args.n)?;
    let n = n.unwrap_or(1000);
    if n == 0 {
        return Err(GirgError::usage("n must be positive"));
    }
    let (edges_path, pos_path, polar_path) = generated_paths(&args.out);
    let start = Instant::now();
    let (graph, positions, header) = match &cfg.family {
        Family::Girg { params, weights } => {
            let ws = weights.build(n, params.beta, cfg.seed)?;
            let s = sample_girg(params, &ws, cfg.seed, &cfg.options())?;
            let header = EdgeListHeader {
                n,
                d: params.d,
                alpha: params.alpha,
                beta: params.beta,
                seed: cfg.seed,
            };
            (s.graph, s.positions, header)
        }
        &Family::Hyperbolic { alpha_h, c_h, t_h, naive } => {
            let hp = HyperbolicParams::new(n, alpha_h, c_h, t_h)?;
            let points = sample_points(&hp, cfg.seed);
            let graph = if naive {
                sample_hrg_edges_naive(&hp, &points, cfg.seed)?
            } else {
                sample_hrg_edges_fast(&hp, &points, cfg.seed, &cfg.options())?.0
            };
            let (params, _, positions) = map_to_girg(&hp, &points)?;
            write_polar(create(&polar_path)?, &points)?;
            let header = EdgeListHeader {
                n,
                d: 1,
                alpha: params.alpha,
                beta: params.beta,
                seed: cfg.seed,
            };
            (graph, positions, header)
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut w = create(&edges_path)?;
    write_edge_list(&mut w, &header.line(), &graph)?;
    w.flush()?;
    let mut w = create(&pos_path)?;
    write_positions(&mut w, &positions)?;
    w.flush()?;
    writeln!(out, "n={} m={} seconds={seconds:.3}", graph.n(), graph.num_edges())?;
    Ok(graph)
}

fn load_edges(p: &Path) -> Result<Graph> {
    read_edge_list(BufReader::new(open(p)?))
}

fn load_positions(p: &Path) -> Result<Positions> {
    read_positions(BufReader::new(open(p)?))
}

fn load_compressed(p: &Path) -> Result<CompressedGraph> {
    CompressedGraph::read_from(BufReader::new(open(p)?))
}

pub fn cmd_compress(args: &CompressArgs, out: &mut dyn Write) -> Result<()> {
    let g = load_edges(&args.edges)?;
    let pos = load_positions(&args.positions)?;
    if pos.len() != g.n() {
        return Err(GirgError::usage(format!(
            "{} positions for {} vertices",
            pos.len(),
            g.n()
        )));
    }
    let cg = encode_graph(&g, &pos)?;
    let mut w = create(&args.out)?;
    cg.write_to(&mut w)?;
    w.flush()?;
    writeln!(
        out,
        "n={} m={} bits={} bits_per_vertex={:.3}",
        cg.n(),
        cg.num_edges(),
        cg.size_bits(),
        cg.size_bits() as f64 / cg.n().max(1) as f64
    )?;
    Ok(())
}

/// Answers one query line with original 1-based ids. Neighbors are ranked by
/// the compressed order.
fn answer(cg: &CompressedGraph, q: &str) -> Result<String> {
    let toks: Vec<&str> = q.split_whitespace().collect();
    let id = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v >= 1 && v <= cg.n() => Ok(v - 1),
            _ => Err(GirgError::usage(format!("vertex {s:?} outside 1..={}", cg.n()))),
        }
    };
    let order = cg.order();
    match toks.as_slice() {
        ["degree", v] => {
            let i = order.rank[id(v)?] as usize;
            Ok(cg.degree(i)?.to_string())
        }
        ["neighbor", v, s] => {
            let i = order.rank[id(v)?] as usize;
            let s: usize = s
                .parse()
                .ok()
                .filter(|&s| s >= 1)
                .ok_or_else(|| GirgError::usage(format!("neighbor index {s:?} must be >= 1")))?;
            let j = cg.neighbor(i, s - 1)?;
            Ok((order.order[j] + 1).to_string())
        }
        _ => Err(GirgError::usage(format!("unknown query {q:?}"))),
    }
}

pub fn cmd_query(args: &QueryArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let cg = load_compressed(&args.input)?;
    if args.queries.is_empty() {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            writeln!(out, "{}", answer(&cg, &line)?)?;
        }
    } else {
        for q in &args.queries {
            writeln!(out, "{}", answer(&cg, q)?)?;
        }
    }
    Ok(())
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<()> {
    let cg = load_compressed(&args.input)?;
    let g = cg.decode()?;
    let mut w = create(&args.out)?;
    write_edge_list(&mut w, &format!("# girg n={} decoded=1", g.n()), &g)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let g = match (&args.edges, &args.compressed) {
        (Some(e), None) => load_edges(e)?,
        (None, Some(c)) => load_compressed(c)?.decode()?,
        _ => return Err(GirgError::usage("stats needs --edges or --compressed")),
    };
    if let Some(mu) = args.grid_mu.iter().find(|mu| !mu.is_power_of_two()) {
        return Err(GirgError::usage(format!("--grid-mu {mu} is not a power of two")));
    }
    let positions = args.positions.as_deref().map(load_positions).transpose()?;
    if let Some(p) = &positions {
        if p.len() != g.n() {
            return Err(GirgError::usage("positions do not match the graph"));
        }
    }
    let all = !(args.cc || args.tail || args.components || args.distance);
    let opts = StatsOptions {
        clustering: all || args.cc,
        tail_k_min: (all || args.tail).then_some(args.k_min),
        components: all || args.components,
        distance_pairs: (all || args.distance).then_some(args.pairs),
        grid_mu: args.grid_mu.clone(),
        seed: args.seed,
    };
    let report = compute_stats(&g, positions.as_ref(), &opts)?;
    match args.format {
        ReportFormat::Kv => write!(out, "{}", report.to_key_value())?,
        ReportFormat::Json => writeln!(out, "{}", report.to_json())?,
    }
    Ok(())
}

/// Parses `a,b,c`, `2^k` terms, or `x..y` doubling ranges.
pub fn parse_sweep(s: &str) -> Result<Vec<usize>> {
    let term = |t: &str| -> Result<usize> {
        let t = t.trim();
        let v = if let Some((b, e)) = t.split_once('^') {
            let b: usize = b.parse().map_err(|_| GirgError::usage(format!("bad size {t:?}")))?;
            let e: u32 = e.parse().map_err(|_| GirgError::usage(format!("bad size {t:?}")))?;
            b.checked_pow(e).ok_or_else(|| GirgError::usage(format!("size {t:?} overflows")))?
        } else {
            t.parse().map_err(|_| GirgError::usage(format!("bad size {t:?}")))?
        };
        if v == 0 {
            return Err(GirgError::usage("sizes must be positive"));
        }
        Ok(v)
    };
    let mut out = Vec::new();
    for part in s.split(',') {
        if let Some((a, b)) = part.split_once("..") {
            let (mut a, b) = (term(a)?, term(b)?);
            if a > b {
                return Err(GirgError::usage(format!("empty range {part:?}")));
            }
            while a <= b {
                out.push(a);
                a *= 2;
            }
        } else {
            out.push(term(part)?);
        }
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GirgError::usage("sweep sizes must increase"));
    }
    Ok(out)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let sizes = parse_sweep(&args.sweep)?;
    let (cfg, _) = RunConfig::resolve(&args.model, None)?;
    let Family::Girg { params, weights } = &cfg.family else {
        return Err(GirgError::usage("bench times the GIRG sampler; drop --hyperbolic"));
    };
    let rows = expected_runtime_probe(&sizes, params, weights, cfg.seed, args.reps, &cfg.options())?;
    match args.format {
        ReportFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialize"))?,
        ReportFormat::Kv => {
            writeln!(out, "n seconds edges edges_per_n ratio")?;
            for r in &rows {
                let ratio = r.time_ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
                writeln!(
                    out,
                    "{} {:.6} {} {:.3} {ratio}",
                    r.n,
                    r.seconds,
                    r.edges,
                    r.edges as f64 / r.n as f64
                )?;
            }
        }
    }
    Ok(())
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, &mut out).map(|_| ()),
        Command::Compress(a) => cmd_compress(a, &mut out),
        Command::Query(a) => cmd_query(a, &mut io::stdin().lock(), &mut out),
        Command::Decode(a) => cmd_decode(a),
        Command::Stats(a) => cmd_stats(a, &mut out),
        Command::Bench(a) => cmd_bench(a, &mut out),
    }
}
