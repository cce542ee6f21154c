use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use railstream::bench::run_bench;
use railstream::engine::Pipeline;
use railstream::ingest::{
    export_geojson, load_geofences, replay_csv, simulate, write_csv, FixtureWeather, JsonlSink,
    SimScenario,
};
use railstream::queries::{build_query, QueryConfig, QueryContext, QueryId};

/// Spatiotemporal stream queries over railway telemetry.
#[derive(Parser)]
#[command(name = "railstream", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one query over replayed or simulated telemetry.
    Query(QueryArgs),
    /// Write simulated telemetry as CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure query throughput over simulated events.
    Bench {
        query: QueryId,
        #[arg(long)]
        events: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Convert an alert JSONL file to GeoJSON.
    ExportGeojson {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct QueryArgs {
    query: QueryId,
    /// Telemetry CSV to replay.
    #[arg(long, required_unless_present = "scenario", conflicts_with = "scenario")]
    input: Option<PathBuf>,
    /// Scenario to simulate instead of replaying a file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    fences: PathBuf,
    /// Weather table; without one the weather is always clear.
    #[arg(long)]
    weather: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Config override as dotted.key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Query(args) => query(args),
        Command::Simulate { scenario, out } => {
            let scenario = SimScenario::load(&scenario)?;
            let events = simulate(&scenario)?;
            let file = std::fs::File::create(&out)
                .with_context(|| format!("cannot create {}", out.display()))?;
            let events: Vec<_> = events.collect();
            let bytes = write_csv(std::io::BufWriter::new(file), &events)
                .with_context(|| format!("cannot write {}", out.display()))?;
            eprintln!("{} events, {bytes} bytes", events.len());
            Ok(())
        }
        Command::Bench { query, events, seed } => {
            let report = run_bench(query, events, seed)?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(())
        }
        Command::ExportGeojson { input, out } => {
            let n = export_geojson(&input, &out)?;
            eprintln!("{n} alerts exported");
            Ok(())
        }
    }
}

fn context(args: &QueryArgs) -> Result<QueryContext> {
    let config = QueryConfig::load(args.config.as_deref(), &args.overrides)?;
    let registry = load_geofences(&args.fences, config.projection()?)?;
    let mut ctx = QueryContext::from_config(Arc::new(registry), config)?;
    if let Some(path) = &args.weather {
        ctx = ctx.with_weather(Arc::new(FixtureWeather::from_path(path)?));
    }
    Ok(ctx)
}

const MAX_REPORTED_DECODE_ERRORS: usize = 10;

fn query(args: QueryArgs) -> Result<()> {
    let ctx = context(&args)?;
    let pipeline = Pipeline::new(build_query(args.query, &ctx)?)?;
    let mut sink = JsonlSink::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let stats = match (&args.input, &args.scenario) {
        (Some(input), _) => {
            let mut reported = 0;
            let source = replay_csv(input)?.inspect(|item| {
                if let Err(e) = item {
                    if reported < MAX_REPORTED_DECODE_ERRORS {
                        eprintln!("warning: {}: skipped {e}", input.display());
                    }
                    reported += 1;
                }
            });
            pipeline.run(source, &mut sink)?
        }
        (None, Some(scenario)) => {
            let scenario = SimScenario::load(scenario)?;
            let source = simulate(&scenario)?.map(Ok::<_, std::convert::Infallible>);
            pipeline.run(source, &mut sink)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    summary(&args.out, &stats);
    Ok(())
}

fn summary(out: &Path, stats: &railstream::engine::PipelineStats) {
    eprintln!(
        "{} events ({} accepted, {} stale, {} undecodable), {} alerts to {}",
        stats.events_in,
        stats.events_accepted,
        stats.events_dropped_stale,
        stats.decode_errors,
        stats.alerts_out,
        out.display()
    );
}
