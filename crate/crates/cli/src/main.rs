use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cubeql_client::cube::{fetch_level_stats, fetch_schema, load_cube, load_graph};
use cubeql_client::{run_bench, BenchOptions, SparqlClient};
use cubeql_core::config::{Config, GraphConfig, LevelStats};
use cubeql_core::instance::CubeInstance;
use cubeql_core::metrics::BenchReport;
use cubeql_core::optimize::{parse_strategies, ScenarioId};
use cubeql_core::pipeline::{check, compile, wf_diagnostics, Context, Improvement};
use cubeql_core::qb4olap::vocab::{QB_DSD, QB_STRUCTURE};
use cubeql_core::qb4olap::{emit_qb4olap, parse_cube_schema, parse_dimension_instances, standard_prefixes};
use cubeql_core::rdf::{parse_turtle, Prefixes};
use cubeql_core::simplify::simplify;
use cubeql_core::ssb;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Parser)]
#[command(name = "cubeql", version, about = "OLAP queries over QB4OLAP cubes, compiled to SPARQL")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct Source {
    /// TOML config: endpoint, schema_graph, instance_graph, dataset, prefixes.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read the schema (and members) from a local Turtle file instead of the endpoint.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Level statistics TOML (`[counts]` level IRI = member count).
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(clap::Args, Clone)]
struct Rewrite {
    /// Evaluation scenario, ES1 .. ES19.
    #[arg(long, conflicts_with = "strategies")]
    scenario: Option<ScenarioId>,
    /// Strategy list, e.g. S1,S2,S4=values,S5=oc1.
    #[arg(long)]
    strategies: Option<String>,
}

impl Rewrite {
    fn improvement(&self) -> Result<Improvement> {
        Ok(match (&self.scenario, &self.strategies) {
            (Some(s), _) => Improvement::Scenario(*s),
            (None, Some(l)) => Improvement::Strategies(parse_strategies(l)?),
            _ => Improvement::None,
        })
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simplify a CQL program; the rewrite trace goes to stderr.
    Simplify {
        file: PathBuf,
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile CQL to SPARQL.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        rewrite: Rewrite,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile and run CQL, or run a SPARQL file, against the endpoint.
    Run {
        /// A .cql program, or a .rq query with --sparql.
        file: PathBuf,
        #[arg(long)]
        sparql: bool,
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        rewrite: Rewrite,
        /// Overrides the config's endpoint.
        #[arg(long)]
        endpoint: Option<String>,
        /// Seconds.
        #[arg(long)]
        timeout: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Power/throughput test of the toy SSB mix, naive and per scenario.
    Bench {
        #[arg(long, default_value_t = 10_000)]
        divisor: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        streams: usize,
        /// Scenarios to run besides the naive queries; `all` for ES1..ES19.
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<String>,
        /// Use this endpoint (already loaded) instead of an in-process store.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the toy SSB cube, its queries and a config into a directory.
    Generate {
        #[arg(long, default_value_t = 10_000)]
        divisor: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Load Turtle files into the configured graphs with SPARQL Update.
    Load {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        schema_ttl: PathBuf,
        #[arg(long)]
        instances_ttl: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Allowed browser origins; any when omitted.
        #[arg(long)]
        cors_origin: Vec<String>,
    },
    /// Run an in-memory SPARQL endpoint, optionally preloaded (`graph=file.ttl`).
    Endpoint {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        #[arg(long)]
        load: Vec<String>,
    },
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn prefixes(cfg: Option<&Config>) -> Prefixes {
    cfg.map(Config::prefix_table).unwrap_or_else(standard_prefixes)
}

/// Schema, members and stats from a local file or the endpoint.
async fn load_source(src: &Source) -> Result<(Option<Config>, GraphConfig, CubeInstance, LevelStats)> {
    let cfg = src.config.as_deref().map(Config::load).transpose()?;
    let mut graphs = graphs_of(cfg.as_ref());
    let (cube, mut stats) = if let Some(p) = &src.schema {
        let g = parse_turtle(&read(p)?)?;
        let (schema, _) = parse_cube_schema(&g)?;
        if graphs.dataset.is_empty() {
            // The data set that points at this structure, if the file has one.
            let dsd = g.instances_of(QB_DSD).first().map(|t| (*t).clone());
            if let Some(ds) = dsd.as_ref().and_then(|d| g.subjects(QB_STRUCTURE, d).find_map(|t| t.as_iri())) {
                graphs.dataset = ds.to_string();
            }
        }
        let (dimensions, _) = parse_dimension_instances(&g, &schema);
        let stats = LevelStats::from_members(&dimensions);
        (CubeInstance { schema, dimensions, observations: Default::default() }, stats)
    } else {
        let cfg = cfg.as_ref().ok_or_else(|| anyhow!("give --schema <file.ttl> or --config <file.toml>"))?;
        let client = SparqlClient::from_config(cfg);
        let (cube, _) = fetch_schema(&client, &cfg.graphs).await?;
        let stats = fetch_level_stats(&client, &cfg.graphs).await?;
        (cube, stats)
    };
    if let Some(p) = &src.stats {
        stats = LevelStats::load(p)?;
    }
    Ok((cfg, graphs, cube, stats))
}

fn graphs_of(cfg: Option<&Config>) -> GraphConfig {
    cfg.map(|c| c.graphs.clone()).unwrap_or_else(|| GraphConfig {
        schema_graph: "urn:cubeql:schema".into(),
        instance_graph: "urn:cubeql:instances".into(),
        dataset: String::new(),
    })
}

async fn bench(
    divisor: usize,
    seed: u64,
    streams: usize,
    scenarios: &[String],
    config: Option<PathBuf>,
    repeats: usize,
) -> Result<Vec<BenchReport>> {
    let cube = ssb::generate_ssb_toy(divisor, seed);
    let (client, graphs, _guard) = match config {
        Some(p) => {
            let cfg = Config::load(&p)?;
            (SparqlClient::from_config(&cfg), cfg.graphs, None)
        }
        None => {
            let ep = cubeql_memstore::spawn_empty().await?;
            let client = SparqlClient::new(&ep.query_url(), Some(&ep.update_url()));
            let graphs = ssb::ssb_graphs();
            load_cube(&client, &graphs, &cube).await?;
            (client, graphs, Some(ep))
        }
    };
    let stats = LevelStats::from_members(&cube.dimensions);
    let mut pfx = standard_prefixes();
    for (k, v) in ssb::ssb_prefixes() {
        pfx.insert(&k, &v);
    }
    let cx = Context { schema: &cube.schema, graphs: &graphs, prefixes: &pfx, stats: &stats };
    let mut plans: Vec<(String, Improvement)> = vec![("naive".into(), Improvement::None)];
    for s in scenarios {
        if s.eq_ignore_ascii_case("all") {
            plans.extend(ScenarioId::all().map(|id| (id.to_string(), Improvement::Scenario(id))));
        } else {
            let id: ScenarioId = s.parse()?;
            plans.push((id.to_string(), Improvement::Scenario(id)));
        }
    }
    let opts = BenchOptions { streams, warmup: true, repeats, seed };
    let mut reports = Vec::new();
    for (label, imp) in plans {
        let mut mix = Vec::new();
        for (id, q) in ssb::ssb_queries() {
            mix.push((id, compile(&q, &cx, &imp)?.final_ir().clone()));
        }
        let texts: Vec<(String, String)> = mix.iter().map(|(id, ir)| (id.clone(), cubeql_core::sparql::render(ir))).collect();
        let r = run_bench(&client, &label, &texts, &opts).await;
        eprintln!("{}", r.to_csv_row());
        reports.push(r);
    }
    Ok(reports)
}

fn generate(divisor: usize, seed: u64, dir: &Path) -> Result<()> {
    let cube = ssb::generate_ssb_toy(divisor, seed);
    let e = emit_qb4olap(&cube.schema, &cube.dimensions, &cube.observations);
    let mut pfx = standard_prefixes();
    for (k, v) in ssb::ssb_prefixes() {
        pfx.insert(&k, &v);
    }
    std::fs::create_dir_all(dir.join("queries"))?;
    std::fs::write(dir.join("schema.ttl"), e.schema_turtle(&pfx))?;
    std::fs::write(dir.join("instances.ttl"), e.instance_turtle(&pfx))?;
    for (id, q) in ssb::ssb_queries() {
        std::fs::write(dir.join("queries").join(format!("{id}.cql")), q)?;
    }
    let cfg = Config {
        endpoint: "http://127.0.0.1:7878/sparql".into(),
        update_endpoint: Some("http://127.0.0.1:7878/update".into()),
        graphs: ssb::ssb_graphs(),
        prefixes: ssb::ssb_prefixes(),
        timeout_secs: Some(60),
    };
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    std::fs::write(dir.join("stats.toml"), LevelStats::from_members(&cube.dimensions).to_toml())?;
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    let level = if std::env::var_os("CUBEQL_DEBUG").is_some() { tracing::Level::DEBUG } else { tracing::Level::INFO };
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_max_level(level).init();
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Simplify { file, src, out } => {
            let (_, _, cube, _) = load_source(&src).await?;
            let (tp, wf) = check(&read(&file)?, &cube.schema).map_err(|e| anyhow!("{e}"))?;
            if !wf.well_formed() {
                for d in wf_diagnostics(&wf, &tp.program) {
                    eprintln!("{}: {}", d.code, d.message);
                }
                bail!("program is not well formed");
            }
            let s = simplify(&tp, &cube.schema)?;
            for f in &s.trace {
                eprintln!("{f}");
            }
            write_or_print(&out, &s.program.program.to_string())
        }
        Cmd::Compile { file, src, rewrite, out } => {
            let (cfg, graphs, cube, stats) = load_source(&src).await?;
            let pfx = prefixes(cfg.as_ref());
            let cx = Context { schema: &cube.schema, graphs: &graphs, prefixes: &pfx, stats: &stats };
            let c = compile(&read(&file)?, &cx, &rewrite.improvement()?).map_err(|e| anyhow!("{e}"))?;
            for n in &c.final_ir().notes {
                eprintln!("{n}");
            }
            write_or_print(&out, &cubeql_core::sparql::render(c.final_ir()))
        }
        Cmd::Run { file, sparql, src, rewrite, endpoint, timeout, format } => {
            let mut src = src;
            let cfg_path = src.config.clone().ok_or_else(|| anyhow!("run needs --config"))?;
            let mut cfg = Config::load(&cfg_path)?;
            if let Some(e) = endpoint {
                cfg.endpoint = e;
            }
            let mut client = SparqlClient::from_config(&cfg);
            if let Some(t) = timeout {
                client = client.with_timeout(Duration::from_secs(t));
            }
            let table = if sparql {
                client.select(&read(&file)?).await?
            } else {
                src.config = Some(cfg_path);
                let (_, _, cube, stats) = load_source(&src).await?;
                let pfx = cfg.prefix_table();
                let cx = Context { schema: &cube.schema, graphs: &cfg.graphs, prefixes: &pfx, stats: &stats };
                let c = compile(&read(&file)?, &cx, &rewrite.improvement()?).map_err(|e| anyhow!("{e}"))?;
                client.execute(c.final_ir()).await?
            };
            match format {
                Format::Csv => print!("{}", table.to_csv()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&table)?),
            }
            Ok(())
        }
        Cmd::Bench { divisor, seed, streams, scenario, config, repeats, out } => {
            let reports = bench(divisor, seed, streams, &scenario, config, repeats).await?;
            write_or_print(&out, &(serde_json::to_string_pretty(&reports)? + "\n"))
        }
        Cmd::Generate { divisor, seed, out_dir } => generate(divisor, seed, &out_dir),
        Cmd::Load { config, schema_ttl, instances_ttl } => {
            let cfg = Config::load(&config)?;
            let client = SparqlClient::from_config(&cfg);
            load_graph(&client, &cfg.graphs.schema_graph, &parse_turtle(&read(&schema_ttl)?)?).await?;
            load_graph(&client, &cfg.graphs.instance_graph, &parse_turtle(&read(&instances_ttl)?)?).await?;
            Ok(())
        }
        Cmd::Serve { config, addr, cors_origin } => {
            let cfg = config.as_deref().map(Config::load).transpose()?;
            let origins = (!cors_origin.is_empty()).then_some(cors_origin);
            Ok(cubeql_server::serve(cfg, addr, origins).await?)
        }
        Cmd::Endpoint { addr, load } => {
            let store = cubeql_memstore::oxigraph::store::Store::new()?;
            for spec in &load {
                let (graph, file) = spec.split_once('=').ok_or_else(|| anyhow!("--load expects graph=file.ttl"))?;
                cubeql_memstore::load_turtle(&store, Some(graph), &read(Path::new(file))?).map_err(|e| anyhow!(e))?;
            }
            let ep = cubeql_memstore::spawn(store, addr).await?;
            eprintln!("query endpoint {}  update endpoint {}", ep.query_url(), ep.update_url());
            tokio::signal::ctrl_c().await?;
            ep.shutdown().await;
            Ok(())
        }
    }
}
