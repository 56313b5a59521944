//! The `meshgrade` command line.
//!
//! Exit codes: 0 success, 2 bad input (unreadable or invalid scene files,
//! empty batch), 3 bad configuration (rubric, weights, templates), 4
//! internal failure.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use meshgrade::engine::{CheckId, GradeReport};
use meshgrade::feedback::FeedbackTemplateSet;
use meshgrade::fixtures::{corpus, random};
use meshgrade::ingest::{self, to_sgf};
use meshgrade::rubric::{file_stem, load_rubric, ConfigError, Rubric, WeightTable};
use meshgrade::{grade_submission, mesh_stats, scan_duplicates, PipelineError, SubmissionFormat};
use rand::SeedableRng;
use serde_json::Value;

pub mod batch;

pub use batch::{run_batch, BatchOptions, BatchOutcome, BatchSummary};

#[derive(Debug, Parser)]
#[command(name = "meshgrade", version, about = "Grades 3D modeling submissions against a rubric scene")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grade one submission.
    Grade(GradeArgs),
    /// Grade every submission in a directory.
    Batch(BatchArgs),
    /// Scan a directory of submissions for copied meshes.
    Dupes(DupesArgs),
    /// Check a scene file without grading it.
    Validate(ValidateArgs),
    /// Run the grading service.
    Serve(ServeArgs),
    /// Write the reference rubric, the mistakes corpus and generated crowns.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RubricArgs {
    #[arg(long)]
    pub rubric: PathBuf,
    /// JSON object whose keys override rubric weights.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Feedback template file.
    #[arg(long, env = "MESHGRADE_TEMPLATES")]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, clap::Args)]
pub struct GradeArgs {
    #[command(flatten)]
    pub rubric: RubricArgs,
    #[arg(long)]
    pub submission: PathBuf,
    /// Defaults to the submission file stem.
    #[arg(long)]
    pub submission_id: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub rubric: RubricArgs,
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Per-file reports and summary.json go here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Summary CSV path; stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// JSON map from file name to submission id.
    #[arg(long)]
    pub id_from_manifest: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct DupesArgs {
    #[arg(long)]
    pub dir: PathBuf,
    /// Rubric whose meshes are never reported as copies.
    #[arg(long)]
    pub exclude_rubric: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Print the findings as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value_t = meshgrade_service::DEFAULT_BODY_LIMIT)]
    pub body_limit: usize,
    #[arg(long, env = "MESHGRADE_SECRET_HEADER", requires = "secret")]
    pub secret_header: Option<String>,
    #[arg(long, env = "MESHGRADE_SECRET", hide_env_values = true)]
    pub secret: Option<String>,
    #[arg(long, env = "MESHGRADE_TEMPLATES")]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of generated crown submissions.
    #[arg(long, default_value_t = 0)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Config(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (Failure::Input(e) | Failure::Config(e) | Failure::Internal(e)) = self;
        write!(f, "{e:#}")
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Input(e.into()),
            other => Failure::Config(other.into()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Input(report) => Failure::Input(anyhow!("invalid submission:\n{report}")),
            PipelineError::Config(c) => c.into(),
        }
    }
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Grade(a) => grade_cmd(a),
        Command::Batch(a) => batch_cmd(a),
        Command::Dupes(a) => dupes_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Fixtures(a) => fixtures_cmd(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)
}

/// Shallow-merges a JSON object of weights over the rubric's table and
/// re-validates.
pub fn apply_weight_overrides(rubric: &mut Rubric, overrides: &Value) -> Result<(), ConfigError> {
    let Value::Object(map) = overrides else {
        return Err(ConfigError::Malformed("weight overrides must be a JSON object".into()));
    };
    let mut merged = serde_json::to_value(rubric.weights).expect("weights serialize");
    for (k, v) in map {
        merged[k] = v.clone();
    }
    rubric.weights =
        serde_json::from_value::<WeightTable>(merged).map_err(|e| ConfigError::Malformed(format!("weights: {e}")))?;
    rubric.validate()
}

pub fn load_templates(path: Option<&Path>) -> Result<FeedbackTemplateSet, Failure> {
    let Some(path) = path else {
        return Ok(FeedbackTemplateSet::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)?;
    FeedbackTemplateSet::from_json(&text)
        .with_context(|| format!("templates {}", path.display()))
        .map_err(Failure::Config)
}

/// Rubric with weight overrides applied, plus the feedback templates.
pub fn load_config(args: &RubricArgs) -> Result<(Rubric, FeedbackTemplateSet), Failure> {
    let mut rubric = load_rubric(&args.rubric)?;
    if let Some(path) = &args.weights {
        let overrides: Value = serde_json::from_slice(&read(path)?)
            .map_err(|e| ConfigError::Malformed(format!("{}: {e}", path.display())))?;
        apply_weight_overrides(&mut rubric, &overrides)?;
    }
    for w in &rubric.warnings {
        eprintln!("warning: {w}");
    }
    Ok((rubric, load_templates(args.templates.as_deref())?))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(internal),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(internal)
        }
    }
}

/// Summary CSV header: file, submission id, score, then one deduction column
/// per check.
pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["file", "submission_id", "score"].map(String::from).to_vec();
    h.extend(CheckId::ALL.iter().map(|c| c.as_str().to_owned()));
    h
}

pub fn csv_row(file: &str, report: &GradeReport) -> Vec<String> {
    let mut row = vec![file.to_owned(), report.submission_id.clone(), report.score.to_string()];
    let by_check = report.deductions_by_check();
    row.extend(CheckId::ALL.iter().map(|c| by_check[c].to_string()));
    row
}

pub fn render_csv(rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header()).map_err(internal)?;
    for row in rows {
        w.write_record(row).map_err(internal)?;
    }
    w.into_inner().map_err(|e| internal(anyhow!("{e}")))
}

pub fn render_text(report: &GradeReport, max_score: f64) -> String {
    let mut out = format!("{}: {} / {}\n", report.submission_id, report.score, max_score);
    for (check, d) in report.deductions_by_check() {
        if d > 0.0 {
            out.push_str(&format!("  -{d} {check}\n"));
        }
    }
    for item in report.feedback.iter().flatten() {
        out.push_str(&format!("\n[{:?}] {}\n  {}\n", item.severity, item.message, item.suggestion));
    }
    out
}

fn grade_cmd(args: GradeArgs) -> Result<u8, Failure> {
    let (rubric, templates) = load_config(&args.rubric)?;
    let bytes = read(&args.submission)?;
    let name = args.submission.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let id = args.submission_id.unwrap_or_else(|| file_stem(&args.submission));
    let report = grade_submission(&id, SubmissionFormat::from_file_name(&name), &bytes, &rubric, &templates)?;
    let rendered = match args.format {
        OutputFormat::Json => report.to_json().into_bytes(),
        OutputFormat::Csv => render_csv([csv_row(&name, &report)])?,
        OutputFormat::Text => render_text(&report, rubric.weights.max_score).into_bytes(),
    };
    write_output(args.out.as_deref(), &rendered)?;
    Ok(0)
}

fn batch_cmd(args: BatchArgs) -> Result<u8, Failure> {
    let (rubric, templates) = load_config(&args.rubric)?;
    let manifest = match &args.id_from_manifest {
        Some(path) => Some(
            serde_json::from_slice(&read(path)?)
                .with_context(|| format!("manifest {}", path.display()))
                .map_err(Failure::Input)?,
        ),
        None => None,
    };
    let options = BatchOptions {
        jobs: args.jobs,
        manifest,
    };
    let outcome = run_batch(&args.dir, &rubric, &templates, &options)?;
    for (file, error) in &outcome.summary.failed {
        eprintln!("failed: {file}: {error}");
    }
    if let Some(dir) = &args.out_dir {
        outcome.write_reports(dir)?;
    }
    write_output(args.summary.as_deref(), &outcome.csv)?;
    Ok(0)
}

/// Sorted `*.sgf.json` and `*.obj` files directly inside `dir`.
pub fn submission_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))
        .map_err(Failure::Input)?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(internal)?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
        if path.is_file() && (name.ends_with(".sgf.json") || name.ends_with(".obj")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn dupes_cmd(args: DupesArgs) -> Result<u8, Failure> {
    let exclude = match &args.exclude_rubric {
        Some(path) => meshgrade::similarity::digests_of(&load_rubric(path)?.scene),
        None => BTreeSet::new(),
    };
    let mut scenes = Vec::new();
    for path in submission_files(&args.dir)? {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match ingest::parse_by_name(&name, &read(&path)?) {
            Ok(parsed) => scenes.push((file_stem(&path), parsed.scene)),
            Err(report) => eprintln!("skipped: {name}: {}", report.errors.first().map(|e| e.to_string()).unwrap_or_default()),
        }
    }
    if scenes.len() < 2 {
        return Err(Failure::Input(anyhow!(
            "need at least two readable submissions in {}, found {}",
            args.dir.display(),
            scenes.len()
        )));
    }
    let report = scan_duplicates(&scenes, &exclude);
    let mut json = serde_json::to_string_pretty(&report).map_err(internal)?;
    json.push('\n');
    write_output(args.out.as_deref(), json.as_bytes())?;
    Ok(0)
}

fn validate_cmd(args: ValidateArgs) -> Result<u8, Failure> {
    let bytes = read(&args.scene)?;
    let name = args.scene.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (report, summary) = match ingest::parse_by_name(&name, &bytes) {
        Ok(parsed) => {
            let faces: usize = parsed.scene.objects.iter().map(|o| mesh_stats(&o.mesh).face_count).sum();
            let summary = format!(
                "ok: {} objects, {} faces, {} cameras\n",
                parsed.scene.objects.len(),
                faces,
                parsed.scene.cameras.len()
            );
            let report = ingest::ValidationReport {
                errors: Vec::new(),
                warnings: parsed.warnings,
            };
            (report, summary)
        }
        Err(report) => (report, String::new()),
    };
    let rendered = if args.json {
        let mut s = serde_json::to_string_pretty(&report).map_err(internal)?;
        s.push('\n');
        s
    } else {
        format!("{report}{summary}")
    };
    write_output(None, rendered.as_bytes())?;
    Ok(if report.is_ok() { 0 } else { 2 })
}

fn serve_cmd(args: ServeArgs) -> Result<u8, Failure> {
    let mut config = meshgrade_service::ServiceConfig::new(args.bind, args.store);
    config.body_limit = args.body_limit;
    config.templates = load_templates(args.templates.as_deref())?;
    if let Some(secret) = args.secret {
        let header = args.secret_header.as_deref().unwrap_or("x-meshgrade-secret");
        let name = header
            .parse()
            .map_err(|e| Failure::Config(anyhow!("secret header {header:?}: {e}")))?;
        config.secret = Some((name, secret));
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(internal)?;
    runtime
        .block_on(meshgrade_service::serve(config, |addr| {
            println!("listening on http://{addr}");
            let _ = std::io::stdout().flush();
        }))
        .map_err(internal)?;
    Ok(0)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(internal)
}

fn fixtures_cmd(args: FixturesArgs) -> Result<u8, Failure> {
    let mistakes = args.out_dir.join("mistakes");
    std::fs::create_dir_all(&mistakes)
        .with_context(|| format!("cannot create {}", mistakes.display()))
        .map_err(internal)?;
    let rubric = Rubric::from_scene("crown", corpus::rubric_scene())?;
    let mut doc = serde_json::to_string_pretty(&rubric.to_value()).map_err(internal)?;
    doc.push('\n');
    write_file(&args.out_dir.join("crown.rubric.json"), doc)?;
    for fixture in corpus::mistakes_corpus() {
        write_file(&mistakes.join(format!("{}.sgf.json", fixture.name)), to_sgf(&fixture.scene))?;
    }
    if args.batch > 0 {
        let dir = args.out_dir.join("batch");
        std::fs::create_dir_all(&dir).map_err(internal)?;
        let mut rng = rand::rngs::StdRng::seed_from_u64(args.seed);
        for i in 0..args.batch {
            let scene = random::crown_submission(&mut rng);
            write_file(&dir.join(format!("crown_{i:04}.sgf.json")), to_sgf(&scene))?;
        }
    }
    Ok(0)
}
