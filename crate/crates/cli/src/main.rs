use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tensorhpo_client::api::{ApiError, JobInfo, JobState};
use tensorhpo_client::{Client, ClientError};
use tensorhpo_core::harness::{ExperimentConfig, SuiteReport};
use tensorhpo_server::AppState;
use tokio::net::TcpListener;

/// Tensor-train and grid-search hyperparameter optimization experiments.
#[derive(Parser)]
#[command(name = "tensorhpo", version)]
struct Cli {
    /// Service to talk to; an embedded one is started when omitted.
    #[arg(long, global = true, env = "TENSORHPO_SERVER")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Status polling interval in milliseconds.
        #[arg(long, default_value_t = 200)]
        poll_ms: u64,
        /// Suppress per-trial progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Compare two reports (JSON or CSV) side by side.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print the comparison as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the built-in oracle checks.
    Selftest,
    /// Serve the HTTP API until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Experiments allowed to run at once (default: one per core).
        #[arg(long)]
        max_running: Option<usize>,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INTERRUPTED: u8 = 130;

/// A failure reported as one JSON line on stderr.
struct Failure {
    code: u8,
    error: ApiError,
}

impl Failure {
    fn new(code: u8, kind: &str, message: impl Into<String>) -> Self {
        Self {
            code,
            error: ApiError {
                kind: kind.into(),
                message: message.into(),
                fields: Vec::new(),
            },
        }
    }
}

fn code_for(kind: &str) -> u8 {
    match kind {
        "ConfigInvalid" | "Usage" => EXIT_CONFIG,
        "Cancelled" => EXIT_INTERRUPTED,
        _ => EXIT_FAILURE,
    }
}

impl From<ApiError> for Failure {
    fn from(error: ApiError) -> Self {
        Self {
            code: code_for(&error.kind),
            error,
        }
    }
}

impl From<tensorhpo_core::Error> for Failure {
    fn from(e: tensorhpo_core::Error) -> Self {
        ApiError::from(&e).into()
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Api { body, .. } => body.into(),
            other => Failure::new(EXIT_FAILURE, "Transport", other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_FAILURE, "Io", e.to_string())
    }
}

type Outcome = Result<(), Failure>;

#[tokio::main]
async fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Failure::new(EXIT_CONFIG, "Usage", e.to_string().trim())),
    };
    let outcome = match cli.command {
        Command::Serve { addr, max_running } => serve(addr, max_running).await,
        command => match connect(cli.server).await {
            Ok(client) => dispatch(&client, command).await,
            Err(f) => Err(f),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": f.error }));
    ExitCode::from(f.code)
}

async fn connect(server: Option<String>) -> Result<Client, Failure> {
    if let Some(url) = server {
        return Ok(Client::new(url));
    }
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(tensorhpo_server::serve(listener, AppState::default(), std::future::pending()));
    Ok(Client::new(format!("http://{addr}")))
}

async fn dispatch(client: &Client, command: Command) -> Outcome {
    match command {
        Command::Run { config, poll_ms, quiet } => run(client, &config, Duration::from_millis(poll_ms.max(1)), quiet).await,
        Command::Compare { a, b, json } => compare(client, &a, &b, json).await,
        Command::Selftest => selftest(client).await,
        Command::Serve { .. } => unreachable!("handled before connecting"),
    }
}

async fn serve(addr: SocketAddr, max_running: Option<usize>) -> Outcome {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let listener = TcpListener::bind(addr).await?;
    let state = max_running.map_or_else(AppState::default, AppState::new);
    eprintln!("listening on http://{}", listener.local_addr()?);
    tensorhpo_server::serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}

async fn run(client: &Client, config: &Path, every: Duration, quiet: bool) -> Outcome {
    let cfg = ExperimentConfig::load(config)?;
    let out = cfg.output_path();
    let job = client.submit(cfg).await?;
    let mut shown = 0;
    let mut progress = |info: &JobInfo| {
        if !quiet && info.trials_done != shown {
            shown = info.trials_done;
            eprintln!("{}/{} trials", info.trials_done, info.trials_total);
        }
    };

    let interrupted = tokio::select! {
        done = client.wait(job.id, every, &mut progress) => { done?; false }
        _ = tokio::signal::ctrl_c() => true,
    };
    let info = if interrupted {
        client.cancel(job.id).await?;
        client.wait(job.id, every, |_| {}).await?
    } else {
        client.status(job.id).await?
    };

    let report = client.report(job.id).await?;
    write_outputs(&out, &report)?;
    match info.state {
        JobState::Completed => {
            for g in &report.groups {
                if let Some(s) = &g.summary {
                    println!(
                        "d={:<3} n={} trials={} mean_best={} er={}",
                        g.d, g.n, s.trials, s.mean_best, s.er
                    );
                }
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        JobState::Cancelled => Err(Failure::new(
            EXIT_INTERRUPTED,
            "Cancelled",
            format!("interrupted after {} trials; partial results in {}", info.trials_done, out.display()),
        )),
        _ => Err(info
            .error
            .map_or_else(|| Failure::new(EXIT_FAILURE, "Internal", "job failed"), Failure::from)),
    }
}

/// The CSV at `out` plus the full JSON report beside it.
fn write_outputs(out: &Path, report: &SuiteReport) -> Result<(), Failure> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    report.save_csv(out)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Failure::new(EXIT_FAILURE, "Io", e.to_string()))?;
    std::fs::write(out.with_extension("json"), json + "\n")?;
    Ok(())
}

async fn compare(client: &Client, a: &Path, b: &Path, json: bool) -> Outcome {
    let (a, b) = (SuiteReport::load(a)?, SuiteReport::load(b)?);
    let resp = client.compare(a, b).await?;
    if json {
        let text = serde_json::to_string_pretty(&resp.comparison).map_err(|e| Failure::new(EXIT_FAILURE, "Io", e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", resp.table);
    }
    Ok(())
}

async fn selftest(client: &Client) -> Outcome {
    let report = client.selftest().await?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(Failure::new(EXIT_FAILURE, "SelftestFailed", format!("{failed} check(s) failed")))
    }
}
