use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use blockwords::inference::Method;
use blockwords::lexicon::{train_ngram, CharNGram, Lexicon, NGramTable};
use blockwords::planner::SearchStrategy;
use blockwords::proposal::ProposalStrategy;
use blockwords_harness::export::{export_results, load_records, save_records, Figure};
use blockwords_harness::fit::{grid_search, GridSpec, Objective};
use blockwords_harness::fsutil::write_atomic;
use blockwords_harness::human::{import_csv, synthesize, ExclusionFilters, HumanResponseSet};
use blockwords_harness::runner::DEFAULT_SAMPLES;
use blockwords_harness::scenario::bundled_dir;
use blockwords_harness::stats::mean_distribution;
use blockwords_harness::{load_dir, load_scenario, run_experiment, MethodSpec, ModelParams, RunRecord, Scenario, WordModels};
use blockwords_liveapi::{Engine, ServiceDefaults, DEFAULT_PARTICLES, DEFAULT_TOP_K};
use clap::{Args, Parser, Subcommand};

/// Goal inference in Block Words: run experiments, fit parameters, export
/// results and serve live sessions.
#[derive(Parser)]
#[command(name = "blockwords", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run inference methods over scenarios and write JSON-lines records.
    Run(RunArgs),
    /// Grid-search model parameters and write a ranked CSV table.
    Fit(FitArgs),
    /// Turn run records into per-figure CSV tables.
    Export(ExportArgs),
    /// Check scenario files (and optionally human data) for errors.
    Validate(ValidateArgs),
    /// Train the character n-gram on a dictionary and save it as JSON.
    Ngram(NgramArgs),
    /// Import or simulate human guess data.
    #[command(subcommand)]
    Humans(HumansCommand),
    /// Serve the live session API.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct WordArgs {
    /// Dictionary file (`word<TAB>frequency` per line); defaults to the
    /// bundled word list.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    /// Pre-trained n-gram saved by `blockwords ngram`.
    #[arg(long)]
    ngram: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file; may be repeated.
    #[arg(long = "scenario")]
    scenarios: Vec<PathBuf>,
    /// Directory of scenario files. Without any scenario option the bundled
    /// scenarios are used.
    #[arg(long)]
    scenario_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long, default_value_t = ModelParams::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = ModelParams::default().budget)]
    budget: usize,
    #[arg(long, default_value_t = ModelParams::default().cadence)]
    cadence: usize,
    /// Planner search: bfs or astar.
    #[arg(long, default_value_t = ModelParams::default().search)]
    strategy: SearchStrategy,
    /// Proposal: any_tower, last_tower, next_tower or last_and_next.
    #[arg(long, default_value = "last_and_next", value_parser = parse_proposal)]
    proposal: ProposalStrategy,
    /// Word-frequency temperature.
    #[arg(long, default_value_t = ModelParams::default().tw)]
    tw: f64,
    /// Termination bias of the n-gram completion.
    #[arg(long, default_value_t = ModelParams::default().epsilon)]
    epsilon: f64,
}

impl ParamArgs {
    fn params(&self) -> ModelParams {
        ModelParams {
            beta: self.beta,
            budget: self.budget,
            cadence: self.cadence,
            search: self.strategy,
            proposal: self.proposal,
            tw: self.tw,
            epsilon: self.epsilon,
            ..ModelParams::default()
        }
    }
}

fn parse_proposal(s: &str) -> Result<ProposalStrategy, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenarios: ScenarioArgs,
    /// Method: exact, sips, proposal_only, or a full spec such as
    /// `sips:20` or `sips:20:marginal`. May be repeated.
    #[arg(long = "method", default_values_t = ["exact".to_string(), "sips".to_string()])]
    methods: Vec<String>,
    /// Particle (or proposal sample) counts for methods given without one.
    /// May be repeated.
    #[arg(long = "n-particles", default_values_t = [DEFAULT_SAMPLES])]
    n_particles: Vec<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per stochastic method; defaults to max(10, 200/N).
    #[arg(long)]
    trials: Option<usize>,
    /// Output JSON-lines file.
    #[arg(long, default_value = "records.jsonl")]
    out: PathBuf,
    #[command(flatten)]
    words: WordArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Grid file (JSON with any of beta, budget, cadence, search, proposal,
    /// tw, epsilon, methods, trials, seed). Without one, the planner ranges
    /// are searched with the exact method.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// iou_vs_humans or accuracy.
    #[arg(long, default_value = "accuracy")]
    objective: Objective,
    /// Human data: JSON (as written by `humans`) or CSV.
    #[arg(long)]
    humans: Option<PathBuf>,
    /// Keep participants the exclusion rules would drop.
    #[arg(long)]
    no_exclusions: bool,
    #[command(flatten)]
    scenarios: ScenarioArgs,
    #[arg(long, default_value = "fit.csv")]
    out: PathBuf,
    #[command(flatten)]
    words: WordArgs,
}

#[derive(Args)]
struct ExportArgs {
    /// Records file or directory of `.jsonl` files.
    #[arg(long)]
    records: PathBuf,
    /// Figures to export (comma separated); defaults to all.
    #[arg(long, value_delimiter = ',')]
    figures: Vec<Figure>,
    #[arg(long)]
    humans: Option<PathBuf>,
    #[arg(long)]
    no_exclusions: bool,
    #[command(flatten)]
    scenarios: ScenarioArgs,
    #[arg(long, default_value = "figures")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario files or directories.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Also check human data against the scenarios.
    #[arg(long)]
    humans: Option<PathBuf>,
}

#[derive(Args)]
struct NgramArgs {
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long, default_value_t = ModelParams::default().ngram_order)]
    order: usize,
    #[arg(long, default_value_t = ModelParams::default().tw)]
    tw: f64,
    #[arg(long, default_value_t = ModelParams::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value = "ngram.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum HumansCommand {
    /// Convert a tabular export (such as the OSF files) into the JSON layout.
    Import {
        #[arg(long)]
        from: PathBuf,
        #[arg(long, default_value = "humans.json")]
        out: PathBuf,
    },
    /// Simulate participants whose guesses follow the exact posterior.
    Synth {
        #[command(flatten)]
        scenarios: ScenarioArgs,
        #[arg(long, default_value_t = 30)]
        participants: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "humans.json")]
        out: PathBuf,
        #[command(flatten)]
        words: WordArgs,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "BLOCKWORDS_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Default method for new sessions.
    #[arg(long, env = "BLOCKWORDS_METHOD", default_value = "sips")]
    method: Method,
    /// Default particle count for new sessions.
    #[arg(long, env = "BLOCKWORDS_N_PARTICLES", default_value_t = DEFAULT_PARTICLES)]
    n_particles: usize,
    #[arg(long, env = "BLOCKWORDS_TOP_K", default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    words: WordArgs,
}

/// Marks an error caused by bad input rather than a failure while running.
#[derive(Debug, thiserror::Error)]
#[error(transparent)]
struct InputError(#[from] anyhow::Error);

fn invalid<E: Into<anyhow::Error>>(e: E) -> anyhow::Error {
    InputError(e.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Fit(a) => fit(a),
        Command::Export(a) => export(a),
        Command::Validate(a) => validate(a),
        Command::Ngram(a) => ngram(a),
        Command::Humans(c) => humans(c),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            if e.chain().any(|c| c.is::<InputError>()) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// The error and its causes joined with ": ", skipping causes whose text an
/// outer message already includes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn load_scenarios(args: &ScenarioArgs) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for p in &args.scenarios {
        out.push(load_scenario(p).map_err(invalid)?);
    }
    if let Some(dir) = &args.scenario_dir {
        out.extend(load_dir(dir).map_err(invalid)?);
    }
    if args.scenarios.is_empty() && args.scenario_dir.is_none() {
        out = load_dir(bundled_dir()).map_err(invalid)?;
    }
    if out.is_empty() {
        return Err(invalid(anyhow::anyhow!("no scenarios found")));
    }
    Ok(out)
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    match path {
        Some(p) => Lexicon::from_file(p)
            .with_context(|| format!("reading dictionary {}", p.display()))
            .map_err(invalid),
        None => Ok(Lexicon::bundled()),
    }
}

fn load_ngram(path: &Path) -> Result<CharNGram> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(invalid)?;
    let table: NGramTable = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(invalid)?;
    CharNGram::from_table(&table)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(invalid)
}

/// Word models, with `params` adjusted to a pre-trained n-gram if given.
fn word_models(args: &WordArgs, params: &mut ModelParams) -> Result<WordModels> {
    let models = WordModels::new(load_lexicon(args.dictionary.as_deref())?);
    if let Some(p) = &args.ngram {
        let ng = load_ngram(p)?;
        params.ngram_order = ng.order();
        params.epsilon = ng.termination_bias();
        models.insert_ngram(params, ng);
    }
    Ok(models)
}

fn load_humans(path: &Path, scenarios: &[Scenario], exclusions: bool) -> Result<HumanResponseSet> {
    let mut set = HumanResponseSet::load_any(path).map_err(invalid)?;
    let dropped = set.drop_invalid(scenarios);
    if dropped > 0 {
        eprintln!("dropped {dropped} human response records that do not match the scenarios");
    }
    if exclusions {
        let excluded = set.excluded(ExclusionFilters::default());
        if !excluded.is_empty() {
            eprintln!("excluding {} participants", excluded.len());
        }
        set = set.filtered(ExclusionFilters::default());
    }
    Ok(set)
}

fn method_specs(methods: &[String], counts: &[usize]) -> Result<Vec<MethodSpec>> {
    let mut specs = Vec::new();
    for m in methods {
        if m.contains(':') {
            specs.push(m.parse::<MethodSpec>().map_err(|e| invalid(anyhow::anyhow!(e)))?);
            continue;
        }
        match m.parse::<Method>().map_err(|e| invalid(anyhow::anyhow!(e)))? {
            Method::Exact => specs.push(MethodSpec::exact()),
            method => {
                for &n in counts {
                    if n == 0 {
                        return Err(invalid(anyhow::anyhow!("--n-particles must be at least 1")));
                    }
                    specs.push(MethodSpec {
                        method,
                        n,
                        ..MethodSpec::exact()
                    });
                }
            }
        }
    }
    specs.dedup();
    Ok(specs)
}

fn run(args: RunArgs) -> Result<()> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let specs = method_specs(&args.methods, &args.n_particles)?;
    let mut params = args.params.params();
    let models = word_models(&args.words, &mut params)?;
    let records = run_experiment(&models, &scenarios, &specs, &params, args.seed, args.trials);
    save_records(&records, &args.out)?;
    print_summary(&records);
    println!("wrote {} records to {}", records.len(), args.out.display());
    let failed: Vec<&RunRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if let Some(first) = failed.first() {
        bail!(
            "{} runs failed; first: {} {}: {}",
            failed.len(),
            first.scenario,
            first.method,
            first.error.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn print_summary(records: &[RunRecord]) {
    let mut groups: BTreeMap<(String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        groups.entry((r.scenario.clone(), r.method.to_string())).or_default().push(r);
    }
    println!("{:<20} {:<24} {:>7} {:>10} {:>12}", "scenario", "method", "trials", "accuracy", "s/action");
    for ((scenario, method), rs) in groups {
        let n = rs.len() as f64;
        let acc = rs.iter().map(|r| r.mean_accuracy()).sum::<f64>() / n;
        let secs = rs.iter().map(|r| r.seconds_per_action).sum::<f64>() / n;
        println!("{scenario:<20} {method:<24} {:>7} {acc:>10.4} {secs:>12.6}", rs.len());
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let grid: GridSpec = match &args.grid {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(invalid)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing grid {}", p.display()))
                .map_err(invalid)?
        }
        None => GridSpec::planner_ranges(),
    };
    let humans = match &args.humans {
        Some(p) => Some(load_humans(p, &scenarios, !args.no_exclusions)?),
        None => None,
    };
    let mut base = ModelParams::default();
    let models = word_models(&args.words, &mut base)?;
    let rows = grid_search(&models, &scenarios, &grid, args.objective, humans.as_ref()).map_err(|e| match e {
        blockwords_harness::fit::FitError::RunFailures(..) => anyhow::Error::from(e),
        other => invalid(other),
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank", "method", "beta", "budget", "cadence", "search", "proposal", "tw", "epsilon", "objective", "value",
        "accuracy", "iou",
    ])?;
    for r in &rows {
        let p = &r.params;
        w.write_record([
            r.rank.to_string(),
            r.method.to_string(),
            p.beta.to_string(),
            p.budget.to_string(),
            p.cadence.to_string(),
            p.search.to_string(),
            p.proposal.to_string(),
            p.tw.to_string(),
            p.epsilon.to_string(),
            r.objective.to_string(),
            r.value.to_string(),
            r.accuracy.to_string(),
            r.iou.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    write_atomic(&args.out, &w.into_inner()?).with_context(|| format!("writing {}", args.out.display()))?;
    for r in rows.iter().take(5) {
        println!("{:>3}  {:<16} {}  {} = {:.4}", r.rank, r.method, r.params.label(), r.objective, r.value);
    }
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let records = load_records(&args.records).map_err(invalid)?;
    let scenarios = load_scenarios(&args.scenarios)?;
    let humans = match &args.humans {
        Some(p) => Some(load_humans(p, &scenarios, !args.no_exclusions)?),
        None => None,
    };
    let figures = if args.figures.is_empty() {
        Figure::ALL.to_vec()
    } else {
        args.figures.clone()
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let written = export_results(&records, &scenarios, humans.as_ref(), &figures, &args.out)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let mut scenarios = Vec::new();
    let mut errors = 0;
    for path in &args.paths {
        let loaded = if path.is_dir() {
            load_dir(path).map(|v| v.into_iter().collect::<Vec<_>>())
        } else {
            load_scenario(path).map(|s| vec![s])
        };
        match loaded {
            Ok(v) => {
                for s in v {
                    println!("ok  {} ({}, {} actions)", s.id(), s.condition(), s.trajectory.len());
                    scenarios.push(s);
                }
            }
            Err(e) => {
                errors += 1;
                println!("bad {e}");
            }
        }
    }
    if let Some(p) = &args.humans {
        match HumanResponseSet::load_any(p).and_then(|h| h.validate(&scenarios).map(|_| h)) {
            Ok(h) => println!("ok  {} ({} records)", p.display(), h.records.len()),
            Err(e) => {
                errors += 1;
                println!("bad {e}");
            }
        }
    }
    if errors > 0 {
        return Err(invalid(anyhow::anyhow!("{errors} invalid input(s)")));
    }
    Ok(())
}

fn ngram(args: NgramArgs) -> Result<()> {
    let lexicon = load_lexicon(args.dictionary.as_deref())?;
    let ng = train_ngram(&lexicon, args.order, args.tw, args.epsilon).map_err(invalid)?;
    let json = serde_json::to_string(&ng.to_table())?;
    write_atomic(&args.out, json.as_bytes()).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "trained order-{} n-gram on {} words ({} contexts) -> {}",
        ng.order(),
        lexicon.len(),
        ng.num_contexts(),
        args.out.display()
    );
    Ok(())
}

fn humans(cmd: HumansCommand) -> Result<()> {
    match cmd {
        HumansCommand::Import { from, out } => {
            let set = import_csv(&from).map_err(invalid)?;
            set.save(&out)?;
            println!("imported {} records -> {}", set.records.len(), out.display());
        }
        HumansCommand::Synth {
            scenarios,
            participants,
            seed,
            out,
            words,
        } => {
            let scenarios = load_scenarios(&scenarios)?;
            let mut params = ModelParams::default();
            let models = word_models(&words, &mut params)?;
            let exact = run_experiment(&models, &scenarios, &[MethodSpec::exact()], &params, seed, None);
            if let Some(r) = exact.iter().find(|r| r.error.is_some()) {
                bail!("exact inference failed on {}: {}", r.scenario, r.error.as_deref().unwrap_or_default());
            }
            let posts: Vec<(&str, Vec<_>)> = scenarios
                .iter()
                .zip(&exact)
                .map(|(s, r)| (s.id(), r.snapshots.iter().map(|snap| mean_distribution([snap])).collect()))
                .collect();
            let set = synthesize(&posts, participants, seed);
            set.save(&out)?;
            println!("simulated {} records -> {}", set.records.len(), out.display());
        }
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut params = args.params.params();
    let models = word_models(&args.words, &mut params)?;
    let ngram = models.ngram(&params).map_err(invalid)?;
    if args.n_particles == 0 || args.top_k == 0 {
        return Err(invalid(anyhow::anyhow!("--n-particles and --top-k must be at least 1")));
    }
    let engine = Engine {
        lexicon: std::sync::Arc::new(models.lexicon().clone()),
        ngram,
        defaults: ServiceDefaults {
            method: args.method,
            n_particles: args.n_particles,
            top_k: args.top_k,
            planner: params.planner(),
            proposal: params.proposal,
            word_temperature: params.tw,
        },
    };
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{}", args.bind);
    runtime
        .block_on(blockwords_liveapi::serve(args.bind, engine))
        .with_context(|| format!("serving on {}", args.bind))
}
