//! The `globalize` command line: headless runs, the HTTP service,
//! transcript validation and fixture generation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use globalize_core::engines::fixture::lecture_fixture;
use globalize_core::engines::DEFAULT_SAMPLE_RATE;
use globalize_core::model::{validate_transcript, Stage, ToneMode};
use globalize_core::pipeline::{Pipeline, PipelineError, ProgressEvent, ProgressStatus};
use globalize_core::store::ArtifactStore;
use globalize_core::subtitle::{parse_subtitles, ParseOptions, SubtitleFormat};
use tracing_subscriber::EnvFilter;

use crate::config::ServiceConfig;
use crate::state::AppState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "globalize", version, about = "Dub lecture videos into another language")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the whole pipeline on one video and write the results.
    Run(RunArgs),
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a transcript (.srt, .vtt or canonical .json) for violations.
    Validate {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, default_value = "und")]
        language: String,
    },
    /// Write a synthetic lecture the mock adapters understand.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60_000)]
        duration_ms: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        sample_rate: u32,
        #[arg(long, default_value = "en")]
        language: String,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long, default_value = "formal", value_parser = parse_tone)]
    pub tone: ToneMode,
    #[arg(long)]
    pub multi_speaker: bool,
    #[arg(long)]
    pub skip_lipsync: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Without a file, artifacts go to a temporary directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_tone(s: &str) -> Result<ToneMode, String> {
    s.parse().map_err(|e: globalize_core::model::ModelError| e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let default_level = match cli.command {
        Command::Serve { .. } => "info",
        _ => "warn",
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default_level)),
        )
        .with_writer(std::io::stderr)
        .try_init();
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Serve { config } => serve(&config),
        Command::Validate {
            transcript,
            language,
        } => validate(&transcript, &language),
        Command::Fixture {
            out,
            duration_ms,
            seed,
            sample_rate,
            language,
        } => fixture(&out, duration_ms, seed, sample_rate, &language),
    }
}

fn project_id_for(input: &Path) -> String {
    let stem: String = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if stem.is_empty() {
        "project".into()
    } else {
        stem
    }
}

fn run(args: &RunArgs) -> i32 {
    let config = match ServiceConfig::load(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let media = match fs::read(&args.input) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input.display());
            return EXIT_USAGE;
        }
    };
    let engines = match config.engines() {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    // Keeps the temporary artifact root alive until the run is done.
    let scratch;
    let root = match &args.config {
        Some(_) => config.artifact_root.clone(),
        None => match tempfile::tempdir() {
            Ok(dir) => {
                scratch = dir;
                scratch.path().to_path_buf()
            }
            Err(e) => {
                eprintln!("error: cannot create a scratch directory: {e}");
                return EXIT_FAILURE;
            }
        },
    };
    let store = match ArtifactStore::open(&root) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let pipeline = Pipeline::new(store, engines, config.pipeline.clone()).with_progress(Arc::new(
        |e: &ProgressEvent| match e.status {
            ProgressStatus::Running => {}
            ProgressStatus::Completed => eprintln!("{}: completed", e.stage),
            ProgressStatus::Failed => eprintln!("{}: failed: {}", e.stage, e.message),
        },
    ));

    let mut project = match pipeline.create_project(
        project_id_for(&args.input),
        &media,
        args.source.clone(),
        args.target.clone(),
        args.tone,
        args.multi_speaker,
    ) {
        Ok(p) => p,
        Err(e @ PipelineError::Model(_)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    for stage in Stage::ALL {
        if stage == Stage::Lipsync && args.skip_lipsync {
            continue;
        }
        if let Err(e) = pipeline.advance(&mut project, stage) {
            eprintln!("error: {stage} failed: {e}");
            return EXIT_FAILURE;
        }
    }
    for warning in project.warnings() {
        eprintln!("warning: {warning}");
    }
    match write_outputs(&pipeline, &project, &args.out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// The export, every track (transcripts in all three formats) and the
/// project state.
fn write_outputs(
    pipeline: &Pipeline,
    project: &globalize_core::model::Project,
    out: &Path,
) -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut write = |name: &str, bytes: &[u8]| -> std::io::Result<()> {
        let path = out.join(name);
        fs::write(&path, bytes)?;
        files.push(path);
        Ok(())
    };
    let export = pipeline.export_file(project)?;
    write(&export.file_name, &export.bytes)?;
    for &kind in project.tracks.keys() {
        let formats: &[SubtitleFormat] = if kind.is_transcript() {
            &[
                SubtitleFormat::Srt,
                SubtitleFormat::Vtt,
                SubtitleFormat::CanonicalJson,
            ]
        } else {
            &[SubtitleFormat::Srt]
        };
        for &format in formats {
            let file = pipeline.track_file(project, kind, format)?;
            write(&file.file_name, &file.bytes)?;
        }
    }
    write("project.json", &serde_json::to_vec_pretty(project)?)?;
    Ok(files)
}

fn serve(config_path: &Path) -> i32 {
    let config = match ServiceConfig::load(Some(config_path)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    // Blocking HTTP clients must be built outside the runtime.
    let engines = match config.engines() {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let state = match AppState::new(&config, engines) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start the runtime: {e}");
            return EXIT_FAILURE;
        }
    };
    let served = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.listen).await?;
        tracing::info!(address = %listener.local_addr()?, "listening");
        crate::serve(listener, state.clone(), async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    });
    drop(runtime);
    // `state` is dropped here, outside the runtime, with the adapters.
    drop(state);
    match served {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn format_for(path: &Path) -> Option<SubtitleFormat> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "srt" => Some(SubtitleFormat::Srt),
        "vtt" => Some(SubtitleFormat::Vtt),
        "json" => Some(SubtitleFormat::CanonicalJson),
        _ => None,
    }
}

fn validate(path: &Path, language: &str) -> i32 {
    let Some(format) = format_for(path) else {
        eprintln!(
            "error: cannot tell the format of {}: expected .srt, .vtt or .json",
            path.display()
        );
        return EXIT_USAGE;
    };
    let input = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let parsed = match parse_subtitles(&input, format, &ParseOptions::strict(language)) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_FAILURE;
        }
    };
    let report = validate_transcript(&parsed.transcript);
    if report.violations.is_empty() {
        println!(
            "{}: ok ({} segments)",
            path.display(),
            parsed.transcript.segments.len()
        );
        EXIT_OK
    } else {
        println!(
            "{}: {} violation(s)\n{report}",
            path.display(),
            report.violations.len()
        );
        EXIT_FAILURE
    }
}

fn fixture(out: &Path, duration_ms: u64, seed: u64, sample_rate: u32, language: &str) -> i32 {
    if duration_ms == 0 || !(8000..=192_000).contains(&sample_rate) {
        eprintln!("error: need a positive duration and a sample rate in 8000..=192000");
        return EXIT_USAGE;
    }
    let f = lecture_fixture(seed, duration_ms, sample_rate, language);
    match fs::write(out, &f.video) {
        Ok(()) => {
            println!(
                "{}: {} ms, {} segments",
                out.display(),
                duration_ms,
                f.transcript.segments.len()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            EXIT_FAILURE
        }
    }
}

