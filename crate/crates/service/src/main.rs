use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mup_agents::Condition;
use mup_core::scenarios::load_scenario;
use mup_eval::{emit_report, render, EvalBackend, EvalConfig, ReportFormat};
use mup_service::client::{render_output, ApiClient};
use mup_service::{
    backend_factory, default_embedder, find_scenario, ingest_into, load_backend_config, router, AppState, ServiceConfig,
};
use tower_http::cors::{AllowOrigin, CorsLayer};

#[derive(Parser)]
#[command(name = "mup", version, about = "Multi-user planning with rule retrieval and conflict resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Chunk and embed a scenario's documents into the data directory.
    Ingest(IngestArgs),
    /// Talk to a running service from the terminal.
    Chat(ChatArgs),
    /// Evaluation runs.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value = "mup-data")]
    data_dir: PathBuf,
    /// Backend configuration (TOML, or JSON by extension); the reference
    /// replay when omitted.
    #[arg(long)]
    backend: Option<PathBuf>,
    /// Allowed browser origin; any origin when omitted.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
}

#[derive(Args)]
struct IngestArgs {
    /// Bundled scenario name or path to a scenario JSON file.
    scenario: String,
    #[arg(long, default_value = "mup-data")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct ChatArgs {
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    url: String,
    #[arg(long, default_value = "workplace")]
    scenario: String,
    #[arg(long, value_enum, default_value_t = CliCondition::Map)]
    condition: CliCondition,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Score the configured conditions on the configured scenarios.
    Run(EvalArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Scenario name or file; repeat for several. `all` means every bundled
    /// scenario.
    #[arg(long = "scenario", default_value = "all")]
    scenarios: Vec<String>,
    #[arg(long, value_enum, default_value_t = CliCondition::Both)]
    condition: CliCondition,
    #[arg(long, default_value_t = 3)]
    trials: u32,
    /// Backend configuration (TOML, or JSON by extension); the reference
    /// replay when omitted.
    #[arg(long)]
    backend: Option<PathBuf>,
    /// Directory for report.json and report.csv.
    #[arg(long, default_value = "eval-out")]
    out: PathBuf,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliCondition {
    /// Multi-agent planner.
    #[value(alias = "multi-agent")]
    Map,
    /// Single agent with every document in its prompt.
    #[value(alias = "monolithic")]
    Mono,
    Both,
}

impl CliCondition {
    fn conditions(self) -> Vec<Condition> {
        match self {
            CliCondition::Map => vec![Condition::MultiAgent],
            CliCondition::Mono => vec![Condition::Monolithic],
            CliCondition::Both => Condition::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

fn backend_config(path: Option<&Path>) -> Result<EvalBackend> {
    Ok(match path {
        Some(p) => load_backend_config(p)?,
        None => EvalBackend::default(),
    })
}

fn serve(args: ServeArgs) -> Result<()> {
    let backends = backend_factory(&backend_config(args.backend.as_deref())?)?;
    let config = ServiceConfig { embedder: default_embedder()?, ..ServiceConfig::new(&args.data_dir, backends) };
    let state = AppState::open(config)?;
    let cors = if args.cors_origins.is_empty() {
        CorsLayer::permissive()
    } else {
        let origins = args.cors_origins.iter().map(|o| o.parse()).collect::<Result<Vec<_>, _>>()?;
        CorsLayer::new()
            .allow_origin(AllowOrigin::list(origins))
            .allow_methods(tower_http::cors::Any)
            .allow_headers(tower_http::cors::Any)
    };
    let app = router(state.clone()).layer(cors);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse().context("bad listen address")?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
        tracing::info!(%addr, data_dir = %args.data_dir.display(), "listening");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        anyhow::Ok(())
    })?;
    // Blocking HTTP clients inside the state must not be dropped on a
    // runtime thread.
    drop(runtime);
    drop(state);
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let path = Path::new(&args.scenario);
    let scenario = if path.is_file() {
        let scenario = load_scenario(path)?;
        let dir = args.data_dir.join("scenarios");
        std::fs::create_dir_all(&dir)?;
        std::fs::copy(path, dir.join(format!("{}.json", scenario.slug)))?;
        scenario
    } else {
        find_scenario(&args.data_dir, &args.scenario)?
    };
    let (store, snapshot) = ingest_into(&args.data_dir, &scenario, default_embedder()?)?;
    println!(
        "{}: {} chunks from {} documents -> {}",
        scenario.slug,
        store.len(),
        scenario.documents.len(),
        snapshot.display()
    );
    Ok(())
}

fn chat(args: ChatArgs) -> Result<()> {
    let condition = match args.condition {
        CliCondition::Map => Condition::MultiAgent,
        CliCondition::Mono => Condition::Monolithic,
        CliCondition::Both => bail!("a chat session uses a single condition"),
    };
    let client = ApiClient::new(&args.url)?;
    let session = client.create_session(&args.scenario, condition)?;
    println!("session {} on {}", session.session_id, session.scenario);
    println!("Type a request, `/feedback <text>`, `/sheet`, `/plan` or `/quit`.");
    let id = session.session_id;
    let stdin = std::io::stdin();
    loop {
        print!("> ");
        std::io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim();
        let result = match line.split_once(' ').map_or((line, ""), |(c, rest)| (c, rest.trim())) {
            ("", _) => continue,
            ("/quit", _) => break,
            ("/sheet", _) => client.rulesheet(&id).map(|s| serde_json::to_string_pretty(&s).unwrap_or_default()),
            ("/plan", _) => client.plan(&id).map(|o| render_output(&o)),
            ("/feedback", text) => client.feedback(&id, text).map(|o| render_output(&o)),
            _ => client.message(&id, line).map(|o| render_output(&o)),
        };
        match result {
            Ok(text) => println!("{text}"),
            Err(e) => eprintln!("error: {e}"),
        }
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let config = EvalConfig {
        scenarios: args.scenarios,
        conditions: args.condition.conditions(),
        trials: args.trials,
        backend: backend_config(args.backend.as_deref())?,
        ..EvalConfig::default()
    };
    let report = mup_eval::run_eval(&config)?;
    let written = emit_report(&report, &args.out)?;
    let format = match args.format {
        Format::Text => ReportFormat::Text,
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    print!("{}", render(&report, format));
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Serve(a) => serve(a),
        Command::Ingest(a) => ingest(a),
        Command::Chat(a) => chat(a),
        Command::Eval(EvalCommand::Run(a)) => eval(a),
    }
}
