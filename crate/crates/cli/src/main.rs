use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use scorelens_api::{AttentionQuery, PerturbRequest, ScoreRequest, SummaryInput};
use scorelens_client::Client;
use scorelens_core::attention::{CellState, SliceMode};
use scorelens_core::perturb::Method;
use scorelens_service::{AppState, RunningService, ServiceConfig, CONFIG_ENV};

#[derive(Parser)]
#[command(name = "scorelens", version, about = "Score, perturb and inspect summary-scoring models")]
struct Cli {
    /// Service config file (TOML)
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Print machine-readable JSON
    #[arg(long, global = true)]
    json: bool,
    /// Talk to a running service instead of an in-process one
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service
    Serve {
        /// Overrides `listen` from the config
        #[arg(long)]
        listen: Option<String>,
    },
    /// Score one or more summaries against a source
    Score {
        #[arg(long)]
        source: PathBuf,
        #[arg(long, required = true)]
        summary: Vec<PathBuf>,
        #[arg(long, required = true)]
        model: Vec<String>,
    },
    /// Perturb a summary and score every variant
    Perturb {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        method: Method,
        /// Seconds to wait for the job
        #[arg(long, default_value_t = 600)]
        timeout: u64,
    },
    /// Fetch an attention slice for one query token
    Attention {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        token: usize,
        /// by_layer, by_head or rug
        #[arg(long, default_value = "rug")]
        mode: String,
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long)]
        head: Option<usize>,
    },
    /// Load an expert-scored training corpus (JSON lines)
    IngestTraining { path: PathBuf },
    /// Derive content and wording scores from an N x 6 rubric (JSON or CSV)
    DeriveScores { path: PathBuf },
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    summary: PathBuf,
    #[arg(long)]
    model: String,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce(&T)) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        human(value);
    }
    Ok(())
}

/// Parses a rubric from a JSON array of 6-element rows, or from CSV with
/// six numeric columns and an optional header row.
fn read_rubric(path: &Path) -> Result<Vec<[f64; 6]>> {
    let text = read(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let mut rows = Vec::new();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let values: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match values {
            Ok(v) if v.len() == 6 => rows.push([v[0], v[1], v[2], v[3], v[4], v[5]]),
            Err(_) if i == 0 => continue,
            _ => bail!("{} line {}: expected six numbers", path.display(), i + 1),
        }
    }
    Ok(rows)
}

async fn connect(cli: &Cli) -> Result<(Client, Option<RunningService>)> {
    if let Some(url) = &cli.server {
        return Ok((Client::new(url.clone()), None));
    }
    let config = ServiceConfig::discover(cli.config.as_deref())?;
    let state = Arc::new(AppState::from_config(&config)?);
    let running = scorelens_service::spawn(state, "127.0.0.1:0".parse()?).await?;
    Ok((Client::new(running.url()), Some(running)))
}

async fn run(cli: Cli) -> Result<()> {
    if let Command::Serve { listen } = &cli.command {
        let mut config = ServiceConfig::discover(cli.config.as_deref())?;
        if let Some(listen) = listen {
            config.listen = listen.clone();
        }
        scorelens_service::serve(&config).await?;
        return Ok(());
    }
    let (client, local) = connect(&cli).await?;
    let result = dispatch(&cli, &client).await;
    if let Some(local) = local {
        local.stop().await?;
    }
    result
}

async fn dispatch(cli: &Cli, client: &Client) -> Result<()> {
    match &cli.command {
        Command::Serve { .. } => unreachable!("handled before connecting"),
        Command::Score { source, summary, model } => {
            let summaries = summary
                .iter()
                .map(|p| Ok(SummaryInput::from(read(p)?.as_str())))
                .collect::<Result<Vec<_>>>()?;
            let response = client
                .score(&ScoreRequest {
                    source: Some(read(source)?),
                    summaries: Some(summaries),
                    model_ids: model.clone(),
                    ..Default::default()
                })
                .await?;
            emit(cli.json, &response, |r| {
                println!("run {}", r.run.run_number);
                for s in &r.results {
                    let flag = if s.truncated { "  (source truncated)" } else { "" };
                    println!("{:<12} {:<16} {:>12.6}{flag}", s.slot_id, s.model_id, s.score);
                }
            })
        }
        Command::Perturb { pair, method, timeout } => {
            let assignment = client
                .create_assignment(&scorelens_api::CreateAssignmentRequest {
                    source: read(&pair.source)?,
                    summaries: vec![SummaryInput::from(read(&pair.summary)?.as_str())],
                })
                .await?;
            let job = client
                .perturb(&PerturbRequest {
                    assignment_id: assignment.assignment_id.clone(),
                    slot_id: assignment.assignment.slots[0].slot_id.clone(),
                    model_id: pair.model.clone(),
                    method: *method,
                })
                .await?;
            let done = client
                .wait_job(&job.job_id, Duration::from_millis(50), Duration::from_secs(*timeout))
                .await?;
            if let Some(err) = &done.error {
                bail!("{}", err.error);
            }
            emit(cli.json, &done, |j| {
                let Some(report) = &j.report else { return };
                println!("baseline {:.6}", report.baseline_score);
                for v in &report.variants {
                    let label = match (&v.perturbation.span, &v.perturbation.grammar_mode) {
                        (Some(span), _) => format!("{:?} -> {:?}", span.surface, v.perturbation.replacement),
                        (None, Some(mode)) => format!("{mode:?}: {:?}", v.perturbation.variant_text),
                        _ => v.perturbation.variant_text.clone(),
                    };
                    println!("{:>+10.6}  {label}", v.delta);
                }
            })
        }
        Command::Attention { pair, token, mode, layer, head } => {
            let assignment = client
                .create_assignment(&scorelens_api::CreateAssignmentRequest {
                    source: read(&pair.source)?,
                    summaries: vec![SummaryInput::from(read(&pair.summary)?.as_str())],
                })
                .await?;
            let query = AttentionQuery {
                token: *token,
                layer: *layer,
                head: *head,
                mode: mode.clone(),
            };
            let slice = client
                .attention(&assignment.assignment_id, &assignment.assignment.slots[0].slot_id, &pair.model, &query)
                .await?;
            emit(cli.json, &slice, |s| {
                let surface = |i: usize| {
                    let t = &s.tokens[i];
                    s.display_text.get(t.start..t.end).unwrap_or("?").to_string()
                };
                let header = match s.mode {
                    SliceMode::ByLayer { head } => format!("head {head}, columns are layers"),
                    SliceMode::ByHead { layer } => format!("layer {layer}, columns are heads"),
                    SliceMode::Rug { layer, head } => format!("layer {layer}, head {head}"),
                };
                println!("query {} {:?} ({header})", s.slice.query, surface(s.slice.query));
                for (k, row) in s.slice.cells.iter().enumerate() {
                    if row.iter().all(CellState::is_missing) {
                        continue;
                    }
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c.value() {
                            Some(v) => format!("{v:.4}"),
                            None => "   -  ".to_string(),
                        })
                        .collect();
                    println!("{k:>5} {:<16} {}", surface(k), cells.join(" "));
                }
            })
        }
        Command::IngestTraining { path } => {
            let absolute = std::fs::canonicalize(path).with_context(|| format!("reading {}", path.display()))?;
            let response = client.ingest_training(&absolute.to_string_lossy()).await?;
            emit(cli.json, &response, |r| {
                println!("accepted {}, rejected {}", r.report.accepted, r.report.rejected.len());
                for rej in &r.report.rejected {
                    println!("  line {}: {}", rej.line, rej.reason);
                }
            })
        }
        Command::DeriveScores { path } => {
            let response = client.derive_scores(read_rubric(path)?).await?;
            emit(cli.json, &response, |r| {
                println!("{:>4} {:>12} {:>12}", "row", "content", "wording");
                for (i, (c, w)) in r.content.iter().zip(&r.wording).enumerate() {
                    println!("{i:>4} {c:>12.6} {w:>12.6}");
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| default_level.into()))
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    match runtime.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
