use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use repairforge::engines::{RepairConfig, RepairStatus};
use repairforge::exec::run_suite;
use repairforge::faultloc::{build_spectrum, rank, MetricKind};
use repairforge::harness::{
    discover_bundles, load_bundle, parse_records, run_experiment, run_job, write_experiment,
    BugBundle, ExperimentPlan, Labels, WORKER_STACK_SIZE,
};
use repairforge::lang::EngineKind;
use repairforge::report::{
    fixability_from_records, fixability_table, flag_underspecified, intersections, timing_stats,
    timing_table, underspec_table, venn_table, Format,
};

const EXIT_OK: u8 = 0;
const EXIT_NO_PATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;
const EXIT_FLAKY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "repairforge",
    version,
    about = "Test-suite driven program repair for MiniLang"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repair one bundle with one engine
    Repair(RepairArgs),
    /// Print the suspiciousness ranking of a bundle
    Localize(LocalizeArgs),
    /// Run engines over a corpus of bundles
    RunExperiment(ExperimentArgs),
    /// Summarize a results file
    Report(ReportArgs),
    /// Load a bundle and check its declared failing tests
    ValidateBundle { bundle: PathBuf },
}

#[derive(Args)]
struct SearchArgs {
    /// Seed for randomized engines [default: $REPAIRFORGE_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    #[arg(long, default_value = "ochiai", value_parser = parse_metric)]
    metric: MetricKind,
    /// Interpreter steps allowed per test
    #[arg(long, default_value_t = repairforge::exec::DEFAULT_STEP_BUDGET)]
    step_budget: u64,
}

#[derive(Args)]
struct RepairArgs {
    bundle: PathBuf,
    #[arg(long, value_parser = parse_engine)]
    engine: EngineKind,
    #[command(flatten)]
    search: SearchArgs,
    /// Where to write the patch diff
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the outcome record (JSON); printed to stdout otherwise
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct LocalizeArgs {
    bundle: PathBuf,
    #[arg(long, default_value = "ochiai", value_parser = parse_metric)]
    metric: MetricKind,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Directory holding one bundle per subdirectory
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for results.ndjson and patches/
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated engines
    #[arg(long, value_delimiter = ',', value_parser = parse_engine, default_value = "genprog,kali,nopol")]
    engines: Vec<EngineKind>,
    /// Restrict to these bundle ids
    #[arg(long = "bundle")]
    bundles: Vec<String>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Markdown,
}

#[derive(Args)]
struct ReportArgs {
    /// A results.ndjson file
    results: PathBuf,
    /// Corpus directory to read analyst labels from
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory [default: the directory of the results file]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    format: FormatArg,
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse()
}

fn parse_engine(s: &str) -> Result<EngineKind, String> {
    s.parse()
}

/// An error that maps to a specific exit status.
struct Exit(u8, String);

fn config_from(args: &SearchArgs) -> Result<RepairConfig, Exit> {
    let seed = match args.seed {
        Some(seed) => seed,
        None => match std::env::var("REPAIRFORGE_SEED") {
            Ok(v) => v.trim().parse().map_err(|_| {
                Exit(
                    EXIT_USAGE,
                    format!("REPAIRFORGE_SEED is not an unsigned integer: {v:?}"),
                )
            })?,
            Err(_) => 0,
        },
    };
    let config = RepairConfig {
        seed,
        timeout_ms: args.timeout_ms,
        metric: args.metric,
        step_budget: args.step_budget,
        ..RepairConfig::default()
    };
    config.check().map_err(|e| Exit(EXIT_USAGE, e))?;
    Ok(config)
}

fn load(path: &Path) -> Result<BugBundle, Exit> {
    load_bundle(path).map_err(|e| Exit(EXIT_INTERNAL, format!("{}: {e}", path.display())))
}

fn internal(e: anyhow::Error) -> Exit {
    Exit(EXIT_INTERNAL, format!("{e:#}"))
}

fn cmd_repair(args: RepairArgs) -> Result<u8, Exit> {
    let config = config_from(&args.search)?;
    let bundle = load(&args.bundle)?;
    let record = run_job(&bundle, args.engine, &config);
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    match &args.record {
        Some(path) => fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(internal)?,
        None => println!("{json}"),
    }
    if let (Some(out), Some(d)) = (&args.out, &record.patch_diff) {
        fs::write(out, d)
            .with_context(|| format!("writing {}", out.display()))
            .map_err(internal)?;
    }
    Ok(match &record.outcome.status {
        RepairStatus::PatchFound { .. } => EXIT_OK,
        RepairStatus::NoPatch | RepairStatus::Timeout => EXIT_NO_PATCH,
        RepairStatus::FlakyAbort { tests } => {
            eprintln!("flaky tests: {}", tests.join(", "));
            EXIT_FLAKY
        }
        RepairStatus::Error { message } => {
            eprintln!("error: {message}");
            EXIT_INTERNAL
        }
    })
}

fn cmd_localize(args: LocalizeArgs) -> Result<u8, Exit> {
    let bundle = load(&args.bundle)?;
    let results = run_suite(
        &bundle.program,
        &bundle.tests,
        repairforge::exec::DEFAULT_STEP_BUDGET,
    );
    let ranking = rank(&build_spectrum(&results), args.metric);
    println!("statement\tlocation\tmetric\tscore");
    for (id, score) in &ranking.entries {
        let location = bundle
            .program
            .position(*id)
            .map(|p| format!("{}:{}", p.file, p.line))
            .unwrap_or_else(|| "?".into());
        println!("{id}\t{location}\t{}\t{score}", args.metric);
    }
    Ok(EXIT_OK)
}

fn corpus_bundles(corpus: &Path, only: &[String]) -> Result<Vec<BugBundle>, Exit> {
    let dirs = discover_bundles(corpus).map_err(|e| Exit(EXIT_INTERNAL, e.to_string()))?;
    let mut bundles = Vec::new();
    for dir in dirs {
        let bundle = load(&dir)?;
        if only.is_empty() || only.contains(&bundle.id) {
            bundles.push(bundle);
        }
    }
    for id in only {
        if !bundles.iter().any(|b| &b.id == id) {
            return Err(Exit(
                EXIT_USAGE,
                format!("no bundle `{id}` in {}", corpus.display()),
            ));
        }
    }
    Ok(bundles)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<u8, Exit> {
    if args.workers == 0 {
        return Err(Exit(EXIT_USAGE, "--workers must be at least 1".into()));
    }
    let config = config_from(&args.search)?;
    let bundles = corpus_bundles(&args.corpus, &args.bundles)?;
    let plan = ExperimentPlan {
        bundles,
        engines: args.engines,
        config,
        workers: args.workers,
    };
    let records = run_experiment(&plan);
    write_experiment(&args.out, &records)
        .with_context(|| format!("writing results to {}", args.out.display()))
        .map_err(internal)?;
    for r in &records {
        eprintln!(
            "{}\t{}\t{}\t{} ms",
            r.bundle,
            r.engine,
            r.outcome.status.label(),
            r.outcome.attempt_wall_time_ms
        );
    }
    Ok(EXIT_OK)
}

fn cmd_report(args: ReportArgs) -> Result<u8, Exit> {
    let run = || -> Result<()> {
        let text = fs::read_to_string(&args.results)
            .with_context(|| format!("reading {}", args.results.display()))?;
        let records = parse_records(&text).map_err(anyhow::Error::msg)?;
        let labels: BTreeMap<String, Labels> = match &args.corpus {
            Some(dir) => {
                let mut labels = BTreeMap::new();
                for path in discover_bundles(dir)? {
                    let manifest = repairforge::harness::parse_manifest(&fs::read_to_string(
                        path.join("manifest.json"),
                    )?)?;
                    labels.insert(manifest.id, manifest.labels);
                }
                labels
            }
            None => BTreeMap::new(),
        };
        let table = fixability_from_records(&records)?;
        let format = match args.format {
            FormatArg::Tsv => Format::Tsv,
            FormatArg::Markdown => Format::Markdown,
        };
        let ext = match format {
            Format::Tsv => "tsv",
            Format::Markdown => "md",
        };
        let out = args.out.clone().unwrap_or_else(|| {
            args.results
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default()
        });
        fs::create_dir_all(&out)?;
        let outputs = [
            ("fixability", fixability_table(&table)),
            ("venn", venn_table(&intersections(&table))),
            ("timing", timing_table(&timing_stats(&records))),
            (
                "underspec",
                underspec_table(&flag_underspecified(&table, &labels)),
            ),
        ];
        for (name, t) in outputs {
            let path = out.join(format!("{name}.{ext}"));
            fs::write(&path, t.render(format))
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        Ok(())
    };
    run().map_err(internal)?;
    Ok(EXIT_OK)
}

fn cmd_validate(path: PathBuf) -> Result<u8, Exit> {
    let bundle = load(&path)?;
    println!(
        "{}: ok ({} tests, failing: {})",
        bundle.id,
        bundle.tests.len(),
        bundle.declared_failing.join(", ")
    );
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Repair(args) => cmd_repair(args),
        Command::Localize(args) => cmd_localize(args),
        Command::RunExperiment(args) => cmd_experiment(args),
        Command::Report(args) => cmd_report(args),
        Command::ValidateBundle { bundle } => cmd_validate(bundle),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let worker = thread::Builder::new()
        .stack_size(WORKER_STACK_SIZE)
        .spawn(move || dispatch(cli));
    let code = match worker.map(|h| h.join()) {
        Ok(Ok(code)) => code,
        _ => EXIT_INTERNAL,
    };
    ExitCode::from(code)
}
