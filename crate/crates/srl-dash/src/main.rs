use std::path::PathBuf;

use anyhow::{bail, Context};
use chrono::Utc;
use clap::{Args, Parser, Subcommand};

use srl_dash::formats::parse_timestamp;
use srl_dash::http::{serve, AppState};
use srl_dash::run::{self, RunFiles};
use srl_dash::store::ContentStore;
use srl_dash::usage_log::{read_log, UsageLog};
use srl_dash_core::synth::CohortSpec;
use srl_dash_core::usage::usage_report;

#[derive(Parser)]
#[command(name = "srl-dash", version, about = "Self-regulated learning dashboard backend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offline pipeline operations.
    Pipeline {
        #[command(subcommand)]
        command: PipelineCommand,
    },
    /// Serve the content store over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic cohort with planted archetypes.
    Synth(SynthArgs),
    /// Dwell times and transition edges from a usage log.
    UsageReport(UsageReportArgs),
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Ingest, cluster and build dashboard content.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    grades: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Directory for exports (features, clusters, bundles).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Content store to publish into.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    /// RFC 3339 instant stamped on the bundles; defaults to now.
    #[arg(long)]
    generated_at: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long)]
    store: PathBuf,
    /// Defaults to `<store>/usage.jsonl`.
    #[arg(long)]
    usage_log: Option<PathBuf>,
    /// Require this bearer token on /admin routes.
    #[arg(long)]
    admin_token: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 292)]
    students: usize,
    #[arg(long, default_value_t = 10)]
    weeks: u32,
    #[arg(long, default_value_t = 5)]
    profiles: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Jitter multiplier; 0 gives exact archetype values.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write this many synthetic dashboard sessions to usage.jsonl.
    #[arg(long, default_value_t = 0)]
    usage_sessions: usize,
}

#[derive(Args)]
struct UsageReportArgs {
    #[arg(long, default_value_t = 0.0)]
    min_p: f64,
    /// Drop page-to-same-page transitions.
    #[arg(long)]
    no_self_loops: bool,
    #[arg(long, conflicts_with = "store")]
    log: Option<PathBuf>,
    /// Read `<store>/usage.jsonl`.
    #[arg(long)]
    store: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_max_level(tracing::Level::INFO)
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Pipeline {
            command: PipelineCommand::Run(args),
        } => pipeline_run(args),
        Command::Serve(args) => serve_cmd(args),
        Command::Synth(args) => synth(args),
        Command::UsageReport(args) => usage_report_cmd(args),
    }
}

fn pipeline_run(args: RunArgs) -> anyhow::Result<()> {
    let files = RunFiles {
        events: args.events,
        schedule: args.schedule,
        grades: args.grades,
        config: args.config,
    };
    let inputs = run::load_inputs(&files)?;
    if !inputs.report.issues.is_empty() {
        tracing::warn!(
            malformed = inputs.report.issues.len(),
            lines = inputs.report.lines,
            "skipped malformed event lines"
        );
    }
    let generated_at = match args.generated_at {
        Some(s) => parse_timestamp(&s).map_err(anyhow::Error::msg)?,
        None => Utc::now(),
    };
    let run_id = args.run_id.unwrap_or_else(|| run::default_run_id(generated_at));
    let started = std::time::Instant::now();
    let result = run::run_pipeline(&inputs, generated_at, &run_id)?;
    tracing::info!(elapsed_ms = started.elapsed().as_millis() as u64, run_id, "pipeline finished");
    for out in &result.outputs {
        println!("weeks {}: {} students", out.weeks, out.features.roster.len());
        for p in &out.profiles {
            let grade = p.grade_mean.map_or_else(|| "n/a".to_string(), |g| format!("{g:.2}"));
            println!("  profile {}: {} students, mean grade {grade}", p.profile_id, p.size());
        }
    }
    if let Some(dir) = &args.out {
        run::write_outputs(dir, &result)?;
        println!("exports written to {}", dir.display());
    }
    if let Some(store) = &args.store {
        let generation = run::publish(store, &result)?;
        println!("published generation {generation} to {}", store.display());
    }
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> anyhow::Result<()> {
    let store = ContentStore::open_dir(&args.store)?;
    let usage = UsageLog::open(args.usage_log.unwrap_or_else(|| args.store.join("usage.jsonl")))?;
    let mut state = AppState::new(store, usage);
    if let Some(token) = args.admin_token {
        state = state.with_admin_token(token);
    }
    let addr = format!("{}:{}", args.bind, args.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        tracing::info!(%addr, generation = state.store.generation(), "serving");
        serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        bail!("--noise must be a non-negative number");
    }
    let mut spec = CohortSpec::reference(args.students, args.weeks, args.profiles, args.seed)?;
    spec.noise = args.noise;
    let cohort = run::write_synth(&args.out, &spec, args.usage_sessions)?;
    println!(
        "wrote {} events for {} students over {} weeks to {}",
        cohort.events.len(),
        cohort.truth.len(),
        args.weeks,
        args.out.display()
    );
    Ok(())
}

fn usage_report_cmd(args: UsageReportArgs) -> anyhow::Result<()> {
    let path = match (args.log, args.store) {
        (Some(log), _) => log,
        (None, Some(store)) => store.join("usage.jsonl"),
        (None, None) => bail!("pass --log FILE or --store DIR"),
    };
    let events = read_log(&path)?;
    let report = usage_report(&events, args.min_p, !args.no_self_loops)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
