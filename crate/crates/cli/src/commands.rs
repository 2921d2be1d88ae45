use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sonolearn_core::analysis::{write_reports, CohortResult, CohortSummary, COHORT_FILE, SUMMARY_FILE};
use sonolearn_core::bandit::{LearnerSession, StateAction, Status};
use sonolearn_core::eventlog::{parse_jsonl, replay_learner, LearnerRecord, Truncation};
use sonolearn_core::fsio::{write_atomic, write_json_atomic};
use sonolearn_core::sim::pitch_dominant_priors;
use sonolearn_core::simulate::{run_cohort, SimulationConfig};
use sonolearn_core::study::{replay_study, StudyRecord, StudySession};
use sonolearn_core::synth::{generate_library, BaseSample, LevelMapping, RenderConfig};
use sonolearn_core::StateSet;
use sonolearn_service::ServiceConfig;

use crate::{AnalyzeArgs, Cli, Command, GenSoundsArgs, PriorsArgs, ReplayArgs, ServeArgs, SimulateArgs};

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        config: cli.config,
        print_config: cli.print_config,
    };
    match cli.command {
        Command::GenSounds(a) => gen_sounds(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Analyze(a) => analyze(&ctx, a),
        Command::Serve(a) => serve(&ctx, a),
        Command::Replay(a) => replay(&ctx, a),
        Command::Priors(a) => priors(&ctx, a),
    }
}

struct Ctx {
    seed: Option<u64>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    print_config: bool,
}

impl Ctx {
    fn no_config(&self, command: &str) -> Result<()> {
        if self.config.is_some() || self.print_config {
            bail!("`{command}` takes no config file");
        }
        Ok(())
    }
}

fn print_toml<T: Serialize>(value: &T) -> Result<()> {
    let text = toml::to_string_pretty(value).context("serializing config")?;
    print_stdout(text.trim_end())
}

fn parse_grid(text: &str) -> Result<LevelMapping> {
    let counts: Vec<usize> = text
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("--grid expects three comma-separated counts, got `{text}`"))?;
    let counts: [usize; 3] = counts
        .try_into()
        .map_err(|_| anyhow!("--grid expects three counts (bpm,bpl,pitch), got `{text}`"))?;
    Ok(LevelMapping::with_counts(counts)?)
}

/// Library generation settings. `base` is `builtin` or a WAV path.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenConfig {
    id: String,
    base: String,
    levels: LevelMapping,
    render: RenderConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            id: "A".into(),
            base: "builtin".into(),
            levels: LevelMapping::default(),
            render: RenderConfig::default(),
        }
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn gen_sounds(ctx: &Ctx, args: GenSoundsArgs) -> Result<()> {
    let mut config = match &ctx.config {
        Some(path) => {
            let mut c: GenConfig = read_toml(path)?;
            if c.base != "builtin" && Path::new(&c.base).is_relative() {
                if let Some(dir) = path.parent() {
                    c.base = dir.join(&c.base).to_string_lossy().into_owned();
                }
            }
            c
        }
        None => GenConfig::default(),
    };
    if let Some(id) = args.id {
        config.id = id;
    }
    if let Some(base) = args.base {
        config.base = base;
    }
    if let Some(grid) = args.grid {
        config.levels = parse_grid(&grid)?;
    }
    if ctx.print_config {
        return print_toml(&config);
    }
    config.levels.validate()?;
    config.render.validate()?;

    let base = if config.base == "builtin" {
        BaseSample::builtin(config.render.sample_rate)
    } else {
        let path = Path::new(&config.base);
        BaseSample::load_wav(path, config.render.sample_rate)
            .with_context(|| format!("loading base sample {}", path.display()))?
    };
    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("libraries").join(&config.id));
    let manifest = generate_library(&config.id, &base, &config.levels, &config.render, &out)?;
    println!(
        "library `{}`: {} sounds in {}",
        manifest.id,
        manifest.sounds.len(),
        out.display()
    );
    Ok(())
}

fn simulate(ctx: &Ctx, args: SimulateArgs) -> Result<()> {
    let mut config = match &ctx.config {
        Some(path) => SimulationConfig::load(path)?,
        None => SimulationConfig::default(),
    };
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    if let Some(n) = args.cohort_size {
        config.cohort_size = n;
    }
    if let Some(e) = args.error_rate {
        config.user.error_rate = e;
    }
    config.validate()?;
    if ctx.print_config {
        return print_toml(&config);
    }
    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("cohort"));
    let mut cohort = run_cohort(&config)?;
    cohort.save(&out)?;
    let summary = write_reports(&out, &cohort)?;
    print_summary(&summary);
    println!("wrote {}", out.display());
    Ok(())
}

fn print_summary(summary: &CohortSummary) {
    println!("runs: {} ({} participants)", summary.runs, summary.participants);
    for (mode, s) in &summary.steps {
        println!(
            "  {:<10} mean {:>6.2}  median {:>5.1}  range {}..{}  converged {}/{}",
            mode.as_str(),
            s.mean,
            s.median,
            s.min,
            s.max,
            s.converged,
            s.runs
        );
    }
    for c in &summary.comparisons {
        let exact = c.exact_p_value.map(|p| format!("  exact p {p:.3e}")).unwrap_or_default();
        println!(
            "  [{}] {} {:.2} vs {} {:.2}: ranked {} / {}  p {:.3e}{exact}",
            c.subset,
            c.reference.as_str(),
            c.reference_mean,
            c.compared.as_str(),
            c.compared_mean,
            c.ranked.ranked_sum,
            c.ranked.max,
            c.ranked.p_value
        );
    }
}

/// Loads a cohort from either a `simulate` output directory or a service
/// data directory (finished study subtasks only).
fn load_dir(dir: &Path) -> Result<CohortResult> {
    if dir.join(COHORT_FILE).is_file() {
        return CohortResult::load(dir).with_context(|| format!("loading {}", dir.display()));
    }
    let sessions = dir.join(sonolearn_service::store::SESSIONS_DIR);
    if !sessions.is_dir() {
        bail!("{}: no {COHORT_FILE} and no sessions/ directory", dir.display());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&sessions)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut cohort: Option<CohortResult> = None;
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        if text.trim().is_empty() {
            continue;
        }
        let contents = parse_jsonl::<StudyRecord>(&text).with_context(|| format!("reading {}", path.display()))?;
        if let Some(t) = &contents.truncated {
            eprintln!("{}: ignoring truncated line {}", path.display(), t.line);
        }
        let session = replay_study(&contents.records).with_context(|| format!("replaying {}", path.display()))?;
        let runs = session.run_records()?;
        let header = session.header();
        let part = CohortResult {
            grid: header.grid.clone(),
            states: header.config.states.clone(),
            levels: None,
            runs,
        };
        match &mut cohort {
            Some(c) => c.merge(part)?,
            None => cohort = Some(part),
        }
    }
    cohort.ok_or_else(|| anyhow!("{}: no session logs", dir.display()))
}

fn analyze(ctx: &Ctx, args: AnalyzeArgs) -> Result<()> {
    ctx.no_config("analyze")?;
    let mut cohort: Option<CohortResult> = None;
    for dir in &args.dirs {
        let part = load_dir(dir)?;
        match &mut cohort {
            Some(c) => c.merge(part).with_context(|| format!("merging {}", dir.display()))?,
            None => cohort = Some(part),
        }
    }
    let cohort = cohort.expect("at least one directory");
    if cohort.runs.is_empty() {
        bail!("no finished runs to analyze");
    }
    let out = ctx.out.clone().unwrap_or_else(|| args.dirs[0].clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let summary = write_reports(&out, &cohort)?;
    print_summary(&summary);
    println!("wrote {}", out.join(SUMMARY_FILE).display());
    Ok(())
}

fn serve(ctx: &Ctx, args: ServeArgs) -> Result<()> {
    let mut config = ServiceConfig::from_process_env(ctx.config.as_deref())?;
    if let Some(port) = args.port {
        config.port = port;
    }
    if ctx.print_config {
        return print_toml(&config);
    }
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(sonolearn_service::serve(config))?;
    Ok(())
}

#[derive(Serialize)]
struct LearnerReplay<'a> {
    session_id: &'a str,
    init_mode: &'static str,
    status: Status,
    t: u32,
    steps: Option<u32>,
    converged_states: usize,
    mapping: Option<Vec<StateAction>>,
    tables: &'a [sonolearn_core::bandit::QTable],
}

impl<'a> LearnerReplay<'a> {
    fn of(s: &'a LearnerSession) -> Self {
        Self {
            session_id: s.id(),
            init_mode: s.init_mode().as_str(),
            status: s.status(),
            t: s.t(),
            steps: s.steps_to_convergence(),
            converged_states: s.converged_count(),
            mapping: s.result().ok(),
            tables: s.tables(),
        }
    }
}

fn report_truncation(path: &Path, t: &Option<Truncation>) {
    if let Some(t) = t {
        eprintln!(
            "{}: line {} is truncated ({} bytes); showing the state before it",
            path.display(),
            t.line,
            t.bytes
        );
    }
}

fn replay(ctx: &Ctx, args: ReplayArgs) -> Result<()> {
    ctx.no_config("replay")?;
    let path = &args.log;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim().is_empty() {
        bail!("{}: empty log", path.display());
    }
    let first = text.lines().next().unwrap_or_default();
    let kind = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
        .ok_or_else(|| anyhow!("{}: line 1 is not a log header", path.display()))?;

    let json = match kind.as_str() {
        "header" => {
            let contents = parse_jsonl::<LearnerRecord>(&text).with_context(|| path.display().to_string())?;
            report_truncation(path, &contents.truncated);
            let session = replay_learner(&contents.records).with_context(|| path.display().to_string())?;
            serde_json::to_string_pretty(&LearnerReplay::of(&session))?
        }
        "study_header" => {
            let contents = parse_jsonl::<StudyRecord>(&text).with_context(|| path.display().to_string())?;
            report_truncation(path, &contents.truncated);
            let session = replay_study(&contents.records).with_context(|| path.display().to_string())?;
            study_json(&session)?
        }
        other => bail!("{}: unknown log kind `{other}`", path.display()),
    };
    emit(ctx, &json)
}

fn study_json(session: &StudySession) -> Result<String> {
    Ok(match session.report() {
        Ok(report) => serde_json::to_string_pretty(&report)?,
        Err(_) => serde_json::to_string_pretty(&serde_json::json!({
            "session_id": session.id(),
            "condition": session.condition(),
            "phase": session.phase(),
            "progress": session.progress(),
            "trials": session.trials().len(),
        }))?,
    })
}

fn emit(ctx: &Ctx, text: &str) -> Result<()> {
    match &ctx.out {
        Some(path) => {
            let mut bytes = text.as_bytes().to_vec();
            bytes.push(b'\n');
            write_atomic(path, &bytes)?;
        }
        None => print_stdout(text)?,
    }
    Ok(())
}

/// Prints `text` plus a newline; a closed pipe (`| head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn priors(ctx: &Ctx, args: PriorsArgs) -> Result<()> {
    ctx.no_config("priors")?;
    let levels = match args.grid {
        Some(g) => parse_grid(&g)?,
        None => LevelMapping::default(),
    };
    let grid = levels.grid()?;
    let priors = pitch_dominant_priors(&grid, &levels, &StateSet::default())?;
    match &ctx.out {
        Some(path) => write_json_atomic(path, &priors)?,
        None => print_stdout(&serde_json::to_string_pretty(&priors)?)?,
    }
    Ok(())
}
