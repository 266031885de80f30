//! `webselect` command-line tool.

use std::collections::BTreeSet;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use webselect_core::ingestion::{build_from_crawl, generate_synthetic, parse_crawl_file, prune, serialize_crawl_file, SyntheticConfig};
use webselect_core::oracle::{enumerate_path_overlap, exhaustive_optimize};
use webselect_core::format::parse_network_file_unchecked;
use webselect_core::{
    demographic_filter, max_product_path, optimize, overlap_matrix, parse_network_file, serialize_network,
    symmetrize, validate_network, CampaignSpec, GaParams, ObjectiveMode, OptimizationResult, Targeting,
    WebsiteNetwork,
};
use webselect_service::{AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "webselect", version, about = "Overlap-aware website selection for media planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network (and optionally its crawl records).
    Generate {
        /// JSON synthetic config; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        crawl_out: Option<PathBuf>,
    },
    /// Build a network from crawl records by breadth-first expansion, then prune it.
    Build {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        seed_domain: String,
        #[arg(long, default_value_t = 300)]
        max_nodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report every invariant violation in a network file.
    Validate { network: PathBuf },
    /// Audience overlap for one pair or the whole network.
    Overlap {
        network: PathBuf,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        pair: Option<Vec<String>>,
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Select sites with the genetic optimizer.
    Optimize(OptimizeArgs),
    /// Exhaustive counterparts for small inputs.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Run the HTTP job service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Defaults to the number of processor cores.
        #[arg(long)]
        max_jobs: Option<usize>,
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Network file to load at startup.
        #[arg(long)]
        network: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Best subset by full enumeration.
    Optimize(CampaignArgs),
    /// Best path overlap by enumerating every simple path.
    Path { network: PathBuf, a: String, b: String },
}

#[derive(Args)]
struct CampaignArgs {
    network: PathBuf,
    #[arg(long)]
    budget: f64,
    #[arg(long)]
    sites: usize,
    #[arg(long = "age", value_name = "BUCKET")]
    age: Vec<String>,
    #[arg(long = "income", value_name = "BUCKET")]
    income: Vec<String>,
    #[arg(long, default_value = "impressions", value_parser = ["reach", "impressions", "unique-reach", "unique-impressions"])]
    mode: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ga_population_size: Option<usize>,
    #[arg(long)]
    ga_max_generations: Option<usize>,
    #[arg(long)]
    ga_stall_generations: Option<usize>,
    #[arg(long)]
    ga_tournament_size: Option<usize>,
    #[arg(long)]
    ga_crossover_rate: Option<f64>,
    #[arg(long)]
    ga_mutation_rate: Option<f64>,
    #[arg(long)]
    ga_elite_count: Option<usize>,
}

impl OptimizeArgs {
    fn params(&self) -> GaParams {
        let d = GaParams::default();
        GaParams {
            population_size: self.ga_population_size.unwrap_or(d.population_size),
            max_generations: self.ga_max_generations.unwrap_or(d.max_generations),
            stall_generations: self.ga_stall_generations.unwrap_or(d.stall_generations),
            tournament_size: self.ga_tournament_size.unwrap_or(d.tournament_size),
            crossover_rate: self.ga_crossover_rate.unwrap_or(d.crossover_rate),
            mutation_rate: self.ga_mutation_rate.unwrap_or(d.mutation_rate),
            elite_count: self.ga_elite_count.unwrap_or(d.elite_count),
        }
    }
}

impl CampaignArgs {
    fn spec(&self) -> Result<CampaignSpec> {
        let mode: ObjectiveMode = self.mode.parse()?;
        let targeting = Targeting {
            age_buckets: self.age.iter().cloned().collect(),
            income_buckets: self.income.iter().cloned().collect(),
        };
        let spec = CampaignSpec::new(self.budget, self.sites)
            .with_mode(mode)
            .with_targeting(targeting);
        spec.check()?;
        Ok(spec)
    }
}

fn read_network(path: &Path) -> Result<WebsiteNetwork> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_network_file(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn feasible_for(net: &WebsiteNetwork, spec: &CampaignSpec) -> Result<BTreeSet<String>> {
    let feasible = demographic_filter(net, &spec.targeting)?;
    if feasible.len() < spec.num_sites {
        bail!(
            "infeasible: {} feasible sites, {} requested",
            feasible.len(),
            spec.num_sites
        );
    }
    Ok(feasible)
}

fn print_result(result: &OptimizationResult, spec: &CampaignSpec, feasible: usize) {
    let m = &result.metrics;
    println!(
        "selected {} of {feasible} feasible sites (mode {}, seed {})",
        result.selection.len(),
        spec.objective_mode,
        result.seed
    );
    for id in result.selection.ids() {
        println!("  {id}");
    }
    println!("fitness            {:.6}", result.fitness);
    println!("gross exposures    {:.6}", m.gross_exposures);
    println!("overlap deduction  {:.6}", m.overlap_deduction);
    println!(
        "naive baseline     {}  net {:.6}  deduction {:.6}",
        m.naive_baseline.selection, m.naive_baseline.net_score, m.naive_baseline.overlap_deduction
    );
    println!("overlap avoided    {:.6}", m.overlap_avoided);
    println!("generations        {}", result.history.len());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            crawl_out,
        } => {
            let cfg: SyntheticConfig = match config {
                Some(path) => {
                    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?
                }
                None => SyntheticConfig::default(),
            };
            let (net, records) = generate_synthetic(&cfg, seed)?;
            write(&out, &serialize_network(&net))?;
            if let Some(path) = crawl_out {
                write(&path, &serialize_crawl_file(&records))?;
            }
            println!("wrote {} nodes, {} edges to {}", net.len(), net.edges().len(), out.display());
        }
        Command::Build {
            records,
            seed_domain,
            max_nodes,
            out,
        } => {
            let bytes = fs::read(&records).with_context(|| format!("reading {}", records.display()))?;
            let records = parse_crawl_file(&bytes)?;
            let raw = build_from_crawl(&records, &seed_domain, max_nodes)?;
            let net = prune(&raw);
            write(&out, &serialize_network(&net))?;
            println!(
                "crawled {} nodes, kept {} after pruning ({} edges), wrote {}",
                raw.len(),
                net.len(),
                net.edges().len(),
                out.display()
            );
        }
        Command::Validate { network } => {
            let bytes = fs::read(&network).with_context(|| format!("reading {}", network.display()))?;
            let net = parse_network_file_unchecked(&bytes)?;
            let report = validate_network(&net);
            if !report.is_valid() {
                for v in &report.violations {
                    eprintln!("{v}");
                }
                bail!("{} violation(s) in {}", report.len(), network.display());
            }
            println!("ok: {} nodes, {} edges", net.len(), net.edges().len());
        }
        Command::Overlap {
            network,
            pair,
            matrix_out,
        } => {
            let net = read_network(&network)?;
            if let Some(pair) = &pair {
                let r = max_product_path(&symmetrize(&net), &pair[0], &pair[1])?;
                println!("{:.6}", r.overlap);
                if r.path.is_empty() {
                    println!("no path");
                } else {
                    println!("{}", r.path.join(" -> "));
                }
            }
            if let Some(path) = matrix_out {
                let m = overlap_matrix(&net);
                write(&path, &m.to_cache_json())?;
                println!("wrote {}x{} overlap matrix to {}", m.len(), m.len(), path.display());
            } else if pair.is_none() {
                let m = overlap_matrix(&net);
                println!("\t{}", m.ids().join("\t"));
                for (i, id) in m.ids().iter().enumerate() {
                    let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.6}")).collect();
                    println!("{id}\t{}", row.join("\t"));
                }
            }
        }
        Command::Optimize(args) => {
            let net = read_network(&args.campaign.network)?;
            let params = args.params();
            let spec = args.campaign.spec()?.with_params(params.clone()).with_seed(args.seed);
            let feasible = feasible_for(&net, &spec)?;
            let overlap = overlap_matrix(&net);
            let result = optimize(&net, &overlap, &feasible, &spec, &params, args.seed)?;
            if args.campaign.json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                print_result(&result, &spec, feasible.len());
            }
        }
        Command::Oracle(OracleCommand::Optimize(args)) => {
            let net = read_network(&args.network)?;
            let spec = args.spec()?;
            let feasible = feasible_for(&net, &spec)?;
            let (selection, fitness) = exhaustive_optimize(&net, &overlap_matrix(&net), &feasible, &spec)?;
            if args.json {
                println!("{}", serde_json::json!({ "selection": selection, "fitness": fitness }));
            } else {
                println!("{selection}\t{fitness:.6}");
            }
        }
        Command::Oracle(OracleCommand::Path { network, a, b }) => {
            let net = read_network(&network)?;
            println!("{:.6}", enumerate_path_overlap(&symmetrize(&net), &a, &b)?);
        }
        Command::Serve {
            listen,
            max_jobs,
            journal,
            network,
        } => {
            let mut config = ServiceConfig {
                journal,
                ..ServiceConfig::default()
            };
            if let Some(n) = max_jobs {
                config.max_concurrent_jobs = n;
            }
            let state = AppState::new(&config)?;
            if let Some(path) = network {
                state.load_network(read_network(&path)?)?;
            }
            tokio::runtime::Runtime::new()?.block_on(webselect_service::serve(listen, state))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
