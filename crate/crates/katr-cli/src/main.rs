//! `katr`: generate networks, build indexes, run queries and benchmarks,
//! and serve the JSON tool API.

mod config;
mod csv_in;

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use katr_core::bench::{self, Variant, Workload};
use katr_core::dataset::Dataset;
use katr_core::engine::{katr_query, EngineOptions, Query};
use katr_core::io::write_raw_network;
use katr_core::oracle::oracle_topk;
use katr_core::partition::DEFAULT_PARTITION_SIZE;
use katr_core::synth::{generate, largest_component, SynthConfig};
use katr_service::{ServiceState, SCHEMA_VERSION};

use config::Config;

#[derive(Parser)]
#[command(name = "katr", about = "Keyword-aware top-k route query engine")]
struct Cli {
    /// TOML config file with defaults; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network into a data directory.
    Generate(GenerateArgs),
    /// Load and normalize a network, reporting ingestion statistics.
    Ingest(DataArgs),
    /// Build the partition index and persist its cache.
    Partition(DataArgs),
    /// Build the POI index and print the keyword catalog.
    Index(DataArgs),
    /// Run a top-k route query.
    Query(QueryArgs),
    /// Run the brute-force enumerator with the same flags.
    Oracle(QueryArgs),
    /// Run a benchmark workload over engine variants, emitting CSV.
    Bench(BenchArgs),
    /// Aggregate a benchmark CSV into summary statistics.
    Report(ReportArgs),
    /// Serve the JSON tool API over HTTP or stdio.
    Serve(ServeArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding vertices.txt, edges.txt, pois.txt (and tags.txt).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    partition_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the on-disk partition cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    vertices: usize,
    #[arg(long, default_value_t = 4)]
    avg_degree: usize,
    #[arg(long, default_value_t = 20)]
    keywords: u32,
    #[arg(long, default_value_t = 100)]
    pois_per_keyword: usize,
    #[arg(long, default_value_t = 5.0)]
    rating_low: f64,
    #[arg(long, default_value_t = 10.0)]
    rating_high: f64,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Source vertex (original id).
    #[arg(long)]
    source: u64,
    /// Comma-separated keyword ids.
    #[arg(long, value_delimiter = ',')]
    keywords: Vec<u32>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    fixed_order: bool,
    /// Distance budget in raw units.
    #[arg(long)]
    budget: Option<f64>,
    /// Destination vertex (original id).
    #[arg(long)]
    destination: Option<u64>,
    #[arg(long)]
    identical_ratings: bool,
    /// Ablations: disable one pruning stage.
    #[arg(long)]
    no_safe_region: bool,
    #[arg(long)]
    no_subgraph_pruning: bool,
    #[arg(long)]
    no_edrs: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    bench_seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// Comma-separated: full,no-safe-region,no-subgraph-pruning,no-edrs,oracle
    #[arg(long, value_delimiter = ',', default_value = "full")]
    variants: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    ms: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the wall-clock column (excluded from golden files).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Benchmark CSV produced by `katr bench`.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Bind address, e.g. 127.0.0.1:8080.
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Serve line-delimited JSON on stdin/stdout instead of HTTP.
    #[arg(long)]
    stdio: bool,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Ingest(args) => cmd_ingest(&cfg, args),
        Command::Partition(args) => cmd_partition(&cfg, args),
        Command::Index(args) => cmd_index(&cfg, args),
        Command::Query(args) => cmd_query(&cfg, args, false),
        Command::Oracle(args) => cmd_query(&cfg, args, true),
        Command::Bench(args) => cmd_bench(&cfg, args),
        Command::Report(args) => cmd_report(args),
        Command::Serve(args) => cmd_serve(&cfg, args),
    }
}

fn load_dataset(cfg: &Config, args: &DataArgs) -> Result<Dataset> {
    let dir = args
        .data
        .clone()
        .or_else(|| cfg.data.clone())
        .context("no data directory: pass --data or set `data` in the config")?;
    let size = args
        .partition_size
        .or(cfg.partition_size)
        .unwrap_or(DEFAULT_PARTITION_SIZE);
    let seed = args.seed.or(cfg.seed).unwrap_or(1);
    Ok(Dataset::load(&dir, size, seed, !args.no_cache)?)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        n_vertices: args.vertices,
        avg_degree: args.avg_degree,
        n_keywords: args.keywords,
        pois_per_keyword: args.pois_per_keyword,
        rating_low: args.rating_low,
        rating_high: args.rating_high,
    };
    let (raw, tags) = generate(&cfg)?;
    let largest = largest_component(&raw);
    write_raw_network(&args.out, &raw, &tags)?;
    println!(
        "{}",
        serde_json::json!({
            "vertices": raw.vertices.len(),
            "edges": raw.edges.len(),
            "pois": raw.pois.len(),
            "keywords": args.keywords,
            "largest_component": largest,
            "out": args.out,
        })
    );
    Ok(())
}

fn cmd_ingest(cfg: &Config, args: DataArgs) -> Result<()> {
    let ds = load_dataset(cfg, &args)?;
    println!(
        "{}",
        serde_json::json!({
            "vertices": ds.net.vertex_count(),
            "edges": ds.net.edge_count(),
            "pois": ds.net.pois().len(),
            "weight_scale": ds.net.weight_scale,
            "rating_scale": ds.net.rating_scale,
            "euclid_coeff": ds.net.euclid_coeff(),
            "report": ds.report,
        })
    );
    Ok(())
}

fn cmd_partition(cfg: &Config, args: DataArgs) -> Result<()> {
    let ds = load_dataset(cfg, &args)?;
    let sizes: Vec<usize> = ds.partition.subgraphs.iter().map(|s| s.members.len()).collect();
    println!(
        "{}",
        serde_json::json!({
            "subgraphs": ds.partition.subgraphs.len(),
            "max_size": sizes.iter().max(),
            "external_edges": ds.partition.external_edges.len(),
            "border_vertices": ds.partition.subgraphs.iter().map(|s| s.borders.len()).sum::<usize>(),
        })
    );
    Ok(())
}

fn cmd_index(cfg: &Config, args: DataArgs) -> Result<()> {
    let ds = load_dataset(cfg, &args)?;
    println!("{}", serde_json::to_string_pretty(&ds.poi.catalog())?);
    Ok(())
}

fn cmd_query(cfg: &Config, args: QueryArgs, use_oracle: bool) -> Result<()> {
    let ds = load_dataset(cfg, &args.data)?;
    let source = ds.resolve_vertex(args.source)?;
    let destination = args.destination.map(|d| ds.resolve_vertex(d)).transpose()?;
    let query = Query {
        source,
        keywords: args.keywords.clone(),
        k: args.k.or(cfg.k).unwrap_or(1),
        alpha: args.alpha.or(cfg.alpha).unwrap_or(0.5),
        fixed_order: args.fixed_order,
        distance_budget: args.budget,
        destination,
        identical_ratings: args.identical_ratings,
    };
    if use_oracle {
        let res = oracle_topk(&ds.net, &query)?;
        let outcome = katr_core::engine::QueryOutcome {
            partial: res.routes.len() < query.k,
            routes: res.routes,
            counters: Default::default(),
            events: Vec::new(),
            infeasible_budget: false,
            timed_out: false,
        };
        let payload = ds.render_routes(&outcome);
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "routes": payload.routes,
                "cp_sets_enumerated": res.cp_sets_enumerated,
                "permutations_evaluated": res.permutations_evaluated,
            }))?
        );
        return Ok(());
    }
    let opts = EngineOptions {
        disable_safe_region: args.no_safe_region,
        disable_subgraph_pruning: args.no_subgraph_pruning,
        disable_edrs: args.no_edrs,
        ..EngineOptions::default()
    };
    let outcome = katr_query(&ds.net, &ds.partition, &ds.poi, &query, &opts)?;
    let payload = ds.render_routes(&outcome);
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "routes": payload.routes,
            "counters": payload.counters,
            "partial": payload.partial,
            "infeasible_budget": payload.infeasible_budget,
        }))?
    );
    Ok(())
}

fn cmd_bench(cfg: &Config, args: BenchArgs) -> Result<()> {
    let ds = load_dataset(cfg, &args.data)?;
    let mut wl = Workload {
        seed: args.bench_seed.or(cfg.seed).unwrap_or(1),
        count: args.queries,
        ..Workload::default()
    };
    if let Some(ms) = args.ms {
        wl.ms = ms;
    }
    if let Some(ks) = args.ks {
        wl.ks = ks;
    }
    if let Some(alphas) = args.alphas {
        wl.alphas = alphas;
    }
    let variants = args
        .variants
        .iter()
        .map(|v| Variant::parse(v))
        .collect::<katr_core::Result<Vec<_>>>()?;
    let queries = bench::generate_queries(&ds, &wl);
    let records = bench::run_bench(&ds, &queries, &variants)?;
    // Log the closed-form search-scope estimate next to the measured region
    // ratio; diagnostic only.
    if let Ok(summary) = bench::report(&records, bench::scope_params_for(&ds, &queries)) {
        log::info!(
            "region ratio {:.4} (estimate {:?})",
            summary.cps_region_ratio,
            summary.estimated_fraction
        );
    }
    let csv = bench::records_to_csv(&records, args.timing);
    match args.out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            log::info!("wrote {} records to {}", records.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.csv)?;
    let records = csv_in::parse_records(&text)?;
    let summary = bench::report(&records, None)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_serve(cfg: &Config, args: ServeArgs) -> Result<()> {
    // Flag > environment > config file > default.
    let env = |name: &str| std::env::var(name).ok();
    let data = args
        .data
        .data
        .clone()
        .or_else(|| env("KATR_DATA").map(PathBuf::from))
        .or_else(|| cfg.data.clone())
        .context("no data directory: pass --data or set KATR_DATA")?;
    let size = args
        .data
        .partition_size
        .or_else(|| env("KATR_PARTITION_SIZE").and_then(|v| v.parse().ok()))
        .or(cfg.partition_size)
        .unwrap_or(DEFAULT_PARTITION_SIZE);
    let seed = args
        .data
        .seed
        .or_else(|| env("KATR_SEED").and_then(|v| v.parse().ok()))
        .or(cfg.seed)
        .unwrap_or(1);
    let timeout_ms = args
        .timeout_ms
        .or_else(|| env("KATR_TIMEOUT_MS").and_then(|v| v.parse().ok()))
        .or(cfg.timeout_ms)
        .unwrap_or(10_000);
    let bind = args
        .bind
        .or_else(|| env("KATR_BIND"))
        .or_else(|| cfg.bind.clone())
        .unwrap_or_else(|| "127.0.0.1:8080".to_string());

    let dataset = Dataset::load(&data, size, seed, !args.data.no_cache)?;
    log::info!(
        "loaded {} vertices, {} POIs, {} subgraphs",
        dataset.net.vertex_count(),
        dataset.net.pois().len(),
        dataset.partition.subgraphs.len()
    );
    let state = ServiceState::new(dataset, Duration::from_millis(timeout_ms));
    if args.stdio {
        let stdin = std::io::stdin().lock();
        let stdout = std::io::stdout().lock();
        katr_service::stdio::run(state, stdin, stdout)?;
        return Ok(());
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(katr_service::serve(state, &bind))?;
    Ok(())
}
