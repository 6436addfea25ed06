mod config;
mod state;

use std::io::{BufRead, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use w2e_core::abi::W2eCall;
use w2e_core::bench::{
    self, parse_samples, render, render_samples, BenchOptions, BenchReport, Format, PublishedReference, ReportKind,
    Workload, DEPLOYER,
};
use w2e_core::gateway::{builtin_artifacts, ArtifactSet, Gateway, GatewayError, ProfileRegistry};
use w2e_core::indexer::Indexer;
use w2e_core::reward::WorkoutRecord;
use w2e_core::types::{Address, TokenId, TokenStandard};
use w2e_core::wallet;

use crate::config::{Overrides, RunConfig};
use crate::state::{parse_actor, MarketState};

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "w2e", version, about = "Walk-to-earn token toolkit and benchmark harness")]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Network profiles file; defaults to the shipped simulator profiles.
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    /// Directory of compiled contract artifacts.
    #[arg(long, global = true)]
    artifacts: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Wallet(WalletCmd),
    #[command(subcommand)]
    Net(NetCmd),
    /// Deploy one token contract and print its address and fee.
    Deploy {
        #[arg(long)]
        network: String,
        /// ERC20, ERC721, ERC1155 or ERC777.
        #[arg(long)]
        artifact: TokenStandard,
    },
    /// Run one benchmark across the selected networks.
    Bench(BenchArgs),
    #[command(subcommand)]
    Market(MarketCmd),
    #[command(subcommand)]
    Workout(WorkoutCmd),
    #[command(subcommand)]
    Report(ReportCmd),
    #[command(subcommand)]
    Index(IndexCmd),
}

#[derive(Subcommand)]
enum WalletCmd {
    /// Create a mnemonic and print the derived account.
    New {
        #[arg(long, default_value_t = 12)]
        words: usize,
        /// Fixed entropy in hex instead of the OS generator.
        #[arg(long)]
        entropy: Option<String>,
        #[arg(long, default_value = "")]
        passphrase: String,
        #[arg(long, default_value_t = 0)]
        index: u32,
    },
    /// Validate a phrase and print the derived account.
    Import {
        #[arg(long)]
        mnemonic: String,
        #[arg(long, default_value = "")]
        passphrase: String,
        #[arg(long, default_value_t = 0)]
        index: u32,
    },
}

#[derive(Subcommand)]
enum NetCmd {
    /// Show configured networks.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    DeployGas,
    ExecGas,
    DeployTime,
    ExecTime,
}

impl BenchKind {
    fn report_kind(self) -> ReportKind {
        match self {
            BenchKind::DeployGas => ReportKind::DeployGas,
            BenchKind::ExecGas => ReportKind::FunctionGas,
            BenchKind::DeployTime => ReportKind::DeployLatency,
            BenchKind::ExecTime => ReportKind::BuyLatency,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    kind: BenchKind,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// csv or markdown.
    #[arg(long)]
    format: Option<String>,
    /// Restrict to these networks (repeatable).
    #[arg(long = "network")]
    networks: Vec<String>,
    /// Add delta columns against the published measurements.
    #[arg(long)]
    compare: bool,
}

#[derive(Subcommand)]
enum MarketCmd {
    /// Print live listings from the event index.
    List {
        #[arg(long)]
        network: String,
    },
    Buy {
        #[arg(long)]
        network: String,
        #[arg(long)]
        token_id: TokenId,
        /// Address or fixture label.
        #[arg(long, default_value = bench::BUYER)]
        from: String,
    },
    Cancel {
        #[arg(long)]
        network: String,
        #[arg(long)]
        token_id: TokenId,
        #[arg(long, default_value = bench::SELLER)]
        from: String,
    },
}

#[derive(Subcommand)]
enum WorkoutCmd {
    /// Submit workouts from a JSON-lines file as reward grants.
    Simulate {
        #[arg(long)]
        network: String,
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Render a samples CSV, or the published tables when no input is given.
    Render {
        #[arg(long, value_enum)]
        kind: BenchKind,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        compare: bool,
        /// Alternate reference data (TOML).
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    Portfolio {
        #[arg(long)]
        network: String,
        #[arg(long)]
        address: String,
    },
    /// Write a checksummed snapshot of the indexed views.
    Snapshot {
        #[arg(long)]
        network: String,
        #[arg(long)]
        path: PathBuf,
    },
}

/// One line of a workout file.
#[derive(Deserialize)]
struct WorkoutLine {
    user: String,
    pet: TokenId,
    duration_sec: u64,
    distance_m: u64,
    #[serde(default)]
    steps: u64,
    #[serde(default)]
    started_at: u64,
    /// Derived from distance and duration when absent.
    avg_speed_kmh: Option<f64>,
}

struct Ctx {
    cfg: RunConfig,
    registry: ProfileRegistry,
}

impl Ctx {
    fn artifacts(&self) -> CliResult<ArtifactSet> {
        Ok(match &self.cfg.artifacts {
            Some(dir) => ArtifactSet::load_dir(dir)?,
            None => builtin_artifacts(),
        })
    }

    fn market_dir(&self) -> PathBuf {
        self.cfg.out.join("market")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into()))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let (trials, seed, format) = match &cli.command {
        Command::Bench(b) => (b.trials, b.seed, b.format.clone()),
        Command::Report(ReportCmd::Render { format, .. }) => (None, None, format.clone()),
        _ => (None, None, None),
    };
    let overrides = Overrides { profiles: cli.profiles, artifacts: cli.artifacts, out: cli.out, trials, seed, format };
    let cfg = RunConfig::resolve(cli.config.as_deref(), overrides)?;
    let registry = match &cfg.profiles {
        Some(p) => ProfileRegistry::load(p)?,
        None => ProfileRegistry::builtin(),
    };
    let ctx = Ctx { cfg, registry };
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Wallet(cmd) => wallet_cmd(cmd, &mut out)?,
        Command::Net(NetCmd::List) => {
            for p in ctx.registry.profiles() {
                let kind = serde_json::to_value(p.kind)?;
                writeln!(out, "{}\t{}\tchain {}", p.name, kind.as_str().unwrap_or("?"), p.chain_id)?;
            }
        }
        Command::Deploy { network, artifact } => {
            let profile = ctx.registry.get(&network)?;
            let mut gw = Gateway::connect(profile)?;
            let deployer = Address::from_label(DEPLOYER);
            if gw.sim().is_some() {
                gw.faucet(deployer, BenchOptions::default().funding_wei)?;
            }
            let d = gw.deploy(ctx.artifacts()?.get(artifact)?, deployer)?;
            let r = &d.confirmation.receipt;
            writeln!(out, "contract {}", d.contract)?;
            writeln!(out, "tx {}", r.tx_hash)?;
            writeln!(out, "gas_used {} fee_gwei {}", r.gas_used, r.fee.to_fixed(2))?;
            writeln!(out, "latency_ms {}", d.confirmation.latency_ms())?;
        }
        Command::Bench(args) => return bench_cmd(&ctx, args, &mut out),
        Command::Market(cmd) => market_cmd(&ctx, cmd, &mut out)?,
        Command::Workout(WorkoutCmd::Simulate { network, file }) => workout_cmd(&ctx, &network, &file, &mut out)?,
        Command::Report(ReportCmd::Render { kind, input, compare, reference, .. }) => {
            let kind = kind.report_kind();
            let published = match reference {
                Some(p) => PublishedReference::load(&p)?,
                None => PublishedReference::builtin(),
            };
            let report = match input {
                Some(p) => parse_samples(kind, &std::fs::read_to_string(p)?)?,
                None => reference_report(kind, &published)?,
            };
            write!(out, "{}", render(&report, ctx.cfg.format, compare.then_some(&published)))?;
        }
        Command::Index(cmd) => index_cmd(&ctx, cmd, &mut out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn print_account(out: &mut impl std::io::Write, m: &wallet::Mnemonic, passphrase: &str, index: u32) -> CliResult<()> {
    let acct = wallet::derive_account(&m.to_seed(passphrase), index);
    writeln!(out, "mnemonic {}", m.phrase())?;
    writeln!(out, "index {}", acct.index)?;
    writeln!(out, "address {}", acct.address)?;
    Ok(())
}

fn wallet_cmd(cmd: WalletCmd, out: &mut impl std::io::Write) -> CliResult<()> {
    match cmd {
        WalletCmd::New { words, entropy, passphrase, index } => {
            let bytes = match entropy {
                Some(h) => hex::decode(h.trim_start_matches("0x"))?,
                None => {
                    let mut b = vec![0u8; wallet::entropy_bytes_for_words(words)?];
                    rand::fill(&mut b[..]);
                    b
                }
            };
            let m = wallet::generate_mnemonic(&bytes)?;
            print_account(out, &m, &passphrase, index)
        }
        WalletCmd::Import { mnemonic, passphrase, index } => {
            let words: Vec<&str> = mnemonic.split_whitespace().collect();
            let v = wallet::validate_mnemonic(&words);
            if !v.valid {
                let reason = v.reason.map(|r| r.to_string()).unwrap_or_default();
                return Err(format!("invalid mnemonic: {reason}").into());
            }
            print_account(out, &wallet::Mnemonic::parse(&mnemonic)?, &passphrase, index)
        }
    }
}

fn bench_cmd(ctx: &Ctx, args: BenchArgs, out: &mut impl std::io::Write) -> CliResult<ExitCode> {
    let registry = if args.networks.is_empty() { ctx.registry.clone() } else { ctx.registry.select(&args.networks)? };
    let artifacts = ctx.artifacts()?;
    let opts = BenchOptions { seed: ctx.cfg.seed, trials: ctx.cfg.trials, ..Default::default() };
    let report = match args.kind {
        BenchKind::DeployGas => bench::run_deploy_gas(&registry, &artifacts, &opts),
        BenchKind::ExecGas => bench::run_function_gas(&registry, &artifacts, &opts),
        BenchKind::DeployTime => bench::run_latency(&registry, &artifacts, Workload::Deploy, &opts)?,
        BenchKind::ExecTime => bench::run_latency(&registry, &artifacts, Workload::BuyNft, &opts)?,
    };
    let published = PublishedReference::builtin();
    let text = render(&report, ctx.cfg.format, args.compare.then_some(&published));
    let slug = report.kind.slug();
    let ext = match ctx.cfg.format {
        Format::Csv => "csv",
        Format::Markdown => "md",
    };
    std::fs::create_dir_all(&ctx.cfg.out)?;
    std::fs::write(ctx.cfg.out.join(format!("{slug}.{ext}")), &text)?;
    std::fs::write(ctx.cfg.out.join(format!("{slug}.samples.csv")), render_samples(&report))?;
    write!(out, "{text}")?;
    if report.has_errors() {
        tracing::error!("one or more cells failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn reference_report(kind: ReportKind, published: &PublishedReference) -> CliResult<BenchReport> {
    match kind {
        ReportKind::DeployLatency => Ok(BenchReport::from_reference(kind, &published.deploy_latency)),
        ReportKind::BuyLatency => Ok(BenchReport::from_reference(kind, &published.buy_latency)),
        _ => Err("fee tables have no trial data; pass --input".into()),
    }
}

/// Sends a market call, saving state only when the call succeeds.
fn market_call(ctx: &Ctx, network: &str, call: W2eCall, from: &str, out: &mut impl std::io::Write) -> CliResult<()> {
    let profile = ctx.registry.get(network)?;
    let mut st = MarketState::open(&ctx.market_dir(), profile)?;
    let mut gw = st.gateway(profile);
    match gw.call_function(st.token, &call, parse_actor(from), 0) {
        Ok(c) => {
            writeln!(out, "ok {} gas_used {} fee_gwei {}", call.name(), c.receipt.gas_used, c.receipt.fee.to_fixed(2))?;
        }
        Err(GatewayError::Reverted { reason, .. }) => {
            // The fee is still charged, so the chain state moves forward.
            writeln!(out, "reverted {reason}")?;
            st.chain = gw.sim().expect("market runs on the simulator").clone();
            st.save(&ctx.market_dir(), profile)?;
            return Err(format!("{} reverted: {reason}", call.name()).into());
        }
        Err(e) => return Err(e.into()),
    }
    st.chain = gw.sim().expect("market runs on the simulator").clone();
    st.save(&ctx.market_dir(), profile)?;
    Ok(())
}

fn market_cmd(ctx: &Ctx, cmd: MarketCmd, out: &mut impl std::io::Write) -> CliResult<()> {
    match cmd {
        MarketCmd::List { network } => {
            let profile = ctx.registry.get(&network)?;
            let st = MarketState::open(&ctx.market_dir(), profile)?;
            let ix = st.index(&ctx.market_dir())?;
            let views = ix.views();
            writeln!(out, "token_id\tseller\tprice_dmd")?;
            for (id, l) in views.active_listings(&st.token) {
                writeln!(out, "{id}\t{}\t{}", l.seller, l.price_dmd)?;
            }
            Ok(())
        }
        MarketCmd::Buy { network, token_id, from } => {
            market_call(ctx, &network, W2eCall::BuyNft { token_id }, &from, out)
        }
        MarketCmd::Cancel { network, token_id, from } => {
            market_call(ctx, &network, W2eCall::CancelListing { token_id }, &from, out)
        }
    }
}

fn workout_cmd(ctx: &Ctx, network: &str, file: &Path, out: &mut impl std::io::Write) -> CliResult<()> {
    let profile = ctx.registry.get(network)?;
    let mut st = MarketState::open(&ctx.market_dir(), profile)?;
    let mut gw = st.gateway(profile);
    let operator = Address::from_label(DEPLOYER);
    let reader = std::io::BufReader::new(std::fs::File::open(file)?);
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let w: WorkoutLine = match serde_json::from_str(&line) {
            Ok(w) => w,
            Err(e) => {
                writeln!(out, "{}\terror\tparse: {e}", n + 1)?;
                continue;
            }
        };
        let mut record = WorkoutRecord::from_distance(w.duration_sec, w.distance_m, w.steps, w.started_at);
        if let Some(v) = w.avg_speed_kmh {
            record.avg_speed_kmh = v;
        }
        let user = parse_actor(&w.user);
        let call = W2eCall::GrantReward { user, pet: w.pet, record };
        match gw.call_function(st.token, &call, operator, 0) {
            Ok(c) => writeln!(out, "{}\tok\tgas_used {}", n + 1, c.receipt.gas_used)?,
            Err(GatewayError::Reverted { reason, .. }) => writeln!(out, "{}\trejected\t{reason}", n + 1)?,
            Err(e) => return Err(e.into()),
        }
    }
    st.chain = gw.sim().expect("market runs on the simulator").clone();
    st.save(&ctx.market_dir(), profile)?;
    let ix = st.index(&ctx.market_dir())?;
    let balances: Vec<_> = ix.views().dmd_balances().filter(|(_, b)| *b > 0).collect();
    for (who, b) in balances {
        writeln!(out, "balance\t{who}\t{b}")?;
    }
    Ok(())
}

fn index_cmd(ctx: &Ctx, cmd: IndexCmd, out: &mut impl std::io::Write) -> CliResult<()> {
    match cmd {
        IndexCmd::Portfolio { network, address } => {
            let profile = ctx.registry.get(&network)?;
            let st = MarketState::open(&ctx.market_dir(), profile)?;
            let ix = st.index(&ctx.market_dir())?;
            let p = ix.query_portfolio(&parse_actor(&address));
            writeln!(out, "{}", serde_json::to_string_pretty(&p)?)?;
        }
        IndexCmd::Snapshot { network, path } => {
            let profile = ctx.registry.get(&network)?;
            let st = MarketState::open(&ctx.market_dir(), profile)?;
            let ix: Indexer = st.index(&ctx.market_dir())?;
            ix.snapshot(&path)?;
            writeln!(out, "snapshot {} at block {}", path.display(), ix.last_processed_block())?;
        }
    }
    Ok(())
}
