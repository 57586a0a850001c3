use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use siot_core::config::DiscoveryConfig;
use siot_core::graph::{OwnerGraph, SocialGraph};
use siot_core::ingest::{load_contact_trace, load_devices, BoundingBox, CatalogFormat};
use siot_core::model::{OwnerId, Position, TrustLevel};

use crate::archive::{sha256_hex, IndexArchive};
use crate::pipeline::{build, BuildParams, OwnerSource, SorSource};
use crate::query::{answer, QueryError, QueryRequest};
use crate::stats::write_stats;

/// Exit status for a request whose application could not be determined.
pub const EXIT_UNKNOWN_APPLICATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "siot", version, about = "Social-IoT device discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build relation graphs and communities into an index archive.
    Build(BuildArgs),
    /// Resolve one natural-language request against an archive.
    Query(QueryArgs),
    /// Write histograms and coefficients from an archive as delimited files.
    Stats {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic city: catalogue, owner graph, contact trace, ground truth.
    Generate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve queries over HTTP.
    Serve {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

/// Comma-separated Watts–Strogatz parameters `n,k,p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsSpec {
    pub n: usize,
    pub k: usize,
    pub p: f64,
}

impl std::str::FromStr for WsSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, k, p] = parts.as_slice() else {
            return Err(format!("expected n,k,p, got `{s}`"));
        };
        Ok(WsSpec {
            n: n.parse().map_err(|_| format!("bad n `{n}`"))?,
            k: k.parse().map_err(|_| format!("bad k `{k}`"))?,
            p: p.parse().map_err(|_| format!("bad p `{p}`"))?,
        })
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("owner_source").required(true).args(["owners", "ws"]))]
#[command(group = clap::ArgGroup::new("sor_source").required(true).args(["trace", "sor_edges"]))]
pub struct BuildArgs {
    /// Device catalogue (delimited, or JSON by extension).
    #[arg(long)]
    pub devices: PathBuf,
    /// Owner friendship edge list.
    #[arg(long)]
    pub owners: Option<PathBuf>,
    /// Generate the owner network instead, as `n,k,p`.
    #[arg(long)]
    pub ws: Option<WsSpec>,
    /// Contact trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Precomputed SOR edge list.
    #[arg(long)]
    pub sor_edges: Option<PathBuf>,
    /// Configuration document; the shipped default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Build parameters (JSON); defaults when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restrict to `x_min,y_min,x_max,y_max` of the normalized map.
    #[arg(long)]
    pub area: Option<BoundingBox>,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for stats files; `<out dir>/stats` when omitted.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub text: String,
    #[arg(long)]
    pub requester: u32,
    /// Requester position `x,y`.
    #[arg(long)]
    pub pos: Position,
    /// owner, friend, fof:N or any.
    #[arg(long, default_value = "any")]
    pub trust: TrustLevel,
    /// Also require membership of a non-trivial SOR community.
    #[arg(long)]
    pub sor_filter: bool,
}

fn digest_file(digests: &mut BTreeMap<String, String>, role: &str, path: &Path) -> anyhow::Result<()> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    digests.insert(role.to_string(), sha256_hex(&bytes));
    Ok(())
}

pub fn cmd_build(args: &BuildArgs) -> anyhow::Result<IndexArchive> {
    let config = match &args.config {
        Some(p) => DiscoveryConfig::load(p)?,
        None => DiscoveryConfig::default(),
    };
    let mut params: BuildParams = match &args.params {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => BuildParams::default(),
    };
    params = params.with_seed(args.seed);
    if args.area.is_some() {
        params.area = args.area;
    }

    let mut digests = BTreeMap::new();
    digest_file(&mut digests, "devices", &args.devices)?;
    let devices = load_devices(&args.devices, CatalogFormat::from_path(&args.devices), &config.capabilities)?;
    let owners = match (&args.owners, args.ws) {
        (Some(path), _) => {
            digest_file(&mut digests, "owners", path)?;
            OwnerSource::Graph(OwnerGraph::load(path)?)
        }
        (None, Some(ws)) => OwnerSource::WattsStrogatz {
            n: ws.n,
            k: ws.k,
            p: ws.p,
        },
        (None, None) => anyhow::bail!("one of --owners or --ws is required"),
    };
    let sor = match (&args.trace, &args.sor_edges) {
        (Some(path), _) => {
            digest_file(&mut digests, "trace", path)?;
            SorSource::Trace(load_contact_trace(path)?)
        }
        (None, Some(path)) => {
            digest_file(&mut digests, "sor_edges", path)?;
            SorSource::Edges(SocialGraph::load_edge_list(path)?)
        }
        (None, None) => anyhow::bail!("one of --trace or --sor-edges is required"),
    };
    build(devices, owners, sor, config, params, digests)
}

fn stats_dir(args: &BuildArgs) -> PathBuf {
    args.stats.clone().unwrap_or_else(|| {
        args.out
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .join("stats")
    })
}

pub fn cmd_query(args: &QueryArgs) -> anyhow::Result<Result<String, QueryError>> {
    let archive = IndexArchive::load(&args.archive)?;
    let request = QueryRequest {
        text: args.text.clone(),
        requester_id: OwnerId(args.requester),
        position: args.pos,
        trust: args.trust,
        sor_filter: args.sor_filter,
    };
    Ok(answer(&archive, &request).map(|r| serde_json::to_string_pretty(&r).expect("result serializes")))
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Build(args) => {
            let archive = cmd_build(&args)?;
            archive.save(&args.out)?;
            let dir = stats_dir(&args);
            write_stats(&archive, &dir).with_context(|| format!("writing stats to {}", dir.display()))?;
            print!("{}", archive.stats.summary());
            println!("archive written to {}", args.out.display());
        }
        Command::Query(args) => match cmd_query(&args)? {
            Ok(json) => println!("{json}"),
            Err(e) => {
                println!("{}", serde_json::to_string_pretty(&e).expect("error serializes"));
                eprintln!("error: {e}");
                return Ok(ExitCode::from(match e {
                    QueryError::UnknownApplication { .. } => EXIT_UNKNOWN_APPLICATION,
                    _ => 1,
                }));
            }
        },
        Command::Stats { archive, out } => {
            let archive = IndexArchive::load(&archive)?;
            for name in write_stats(&archive, &out).with_context(|| format!("writing {}", out.display()))? {
                println!("{}", out.join(name).display());
            }
        }
        Command::Generate { params, seed, out } => {
            let city = crate::generate::cmd_generate(&params, seed, &out)?;
            println!(
                "{} devices, {} owners, {} contacts written to {}",
                city.devices.len(),
                city.owners.nodes().len(),
                city.contacts.len(),
                out.display()
            );
        }
        Command::Serve { archive, bind } => {
            let archive = IndexArchive::load(&archive)?;
            tokio::runtime::Runtime::new()?.block_on(crate::server::serve(archive, bind))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
