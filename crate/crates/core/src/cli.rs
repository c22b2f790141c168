//! Command-line front end. Everything here is callable from tests; the
//! binary only forwards `std::env::args` to [`main_with_args`].

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::backend::{ImageBackend, MockBackend, OpenAiBackend, DEFAULT_IMAGE_MODEL};
use crate::detect::{FixtureDetector, NullDetector, RemoteOcrDetector, TextDetector};
use crate::image_ops::RasterImage;
use crate::lang::{LangCode, SourceLang};
use crate::mask::{
    center_shape_mask, dotted_mask, edge_mask, random_ellipse_mask, CenterShape, DotPolarity, MaskParams,
    ProtectedRegion,
};
use crate::output::{write_run, RunRequest};
use crate::story::{Services, StoryConfig, StoryError, StoryMode};
use crate::text::{ingest, prepare_chunks, ChunkMethod, ChunkingSpec, IngestError, SourceDescriptor};
use crate::translate::{MockTranslationClient, RemoteTranslationClient, TranslationClient, Translator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INGEST: i32 = 3;
pub const EXIT_TRANSLATE: i32 = 4;
pub const EXIT_BACKEND: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "storyframes", version, about = "Illustrate a story as a sequence of coherent frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest, translate and illustrate a story.
    Run(Box<RunArgs>),
    /// Render one mask recipe as a PNG (255 = editable).
    MaskPreview(MaskPreviewArgs),
}

/// Run flags. A JSON config file may carry any of these under the same
/// (kebab-case) names; flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Story text given inline.
    #[arg(long)]
    pub text: Option<String>,
    /// UTF-8 text file with the story.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Web page with the story.
    #[arg(long)]
    pub url: Option<String>,
    /// ISO-639 code of the story language, or `auto`.
    #[arg(long)]
    pub lang: Option<String>,

    #[arg(long, value_enum)]
    pub mode: Option<StoryMode>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub context_suffix: Option<String>,
    /// PNG used as the fixed scene in the defined-setting modes.
    #[arg(long)]
    pub setting_image: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub chunking: Option<ChunkMethod>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,

    #[arg(long)]
    pub dot_spacing: Option<u32>,
    #[arg(long)]
    pub edge_width: Option<u32>,
    /// In-object lattice spacing; 0 disables it.
    #[arg(long)]
    pub object_dot_spacing: Option<u32>,
    #[arg(long)]
    pub mutation_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub polarity: Option<DotPolarity>,
    /// Protected object area as `top,left,bottom,right` bbox fractions; repeatable.
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub protect: Vec<String>,

    #[arg(long)]
    pub white_threshold: Option<u8>,
    #[arg(long)]
    pub object_scale: Option<f64>,
    /// Top-left of the scaled object as `row,col`.
    #[arg(long)]
    pub anchor: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Frame size as `WxH`.
    #[arg(long)]
    pub size: Option<String>,

    /// `mock` or `remote`.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub backend_endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// `mock:<table.json>`, `identity` or `remote`.
    #[arg(long)]
    pub translator: Option<String>,
    #[arg(long)]
    pub translate_endpoint: Option<String>,
    /// `null`, `fixture:<boxes.json>` or `remote`.
    #[arg(long)]
    pub detector: Option<String>,
    #[arg(long)]
    pub ocr_endpoint: Option<String>,

    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the object and background images under `intermediate/`.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub keep_intermediate: bool,
    /// Continue a failed run found in `--out`.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub resume: bool,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($field:ident),*) => {
        RunArgs {
            config: $top.config.or($base.config),
            protect: if $top.protect.is_empty() { $base.protect } else { $top.protect },
            keep_intermediate: $top.keep_intermediate || $base.keep_intermediate,
            resume: $top.resume || $base.resume,
            $($field: $top.$field.or($base.$field),)*
        }
    };
}

impl RunArgs {
    /// Fields set in `self` win over `base`.
    pub fn overlay(self, base: RunArgs) -> RunArgs {
        overlay!(self, base; text, file, url, lang, mode, title, context_suffix, setting_image, chunking, window,
            stride, dot_spacing, edge_width, object_dot_spacing, mutation_fraction, polarity, white_threshold,
            object_scale, anchor, seed, size, backend, backend_endpoint, model, max_in_flight, translator,
            translate_endpoint, detector, ocr_endpoint, out)
    }

    /// Loads `--config` (if any) underneath the flags.
    pub fn with_config_file(self) -> Result<RunArgs, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let bytes = std::fs::read(&path).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        let base: RunArgs =
            serde_json::from_slice(&bytes).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Ok(self.overlay(base))
    }

    /// Command-line form of these arguments (after `run`).
    pub fn to_args(&self) -> Vec<String> {
        let mut out = Vec::new();
        let value = serde_json::to_value(self).expect("args serialize");
        if let Some(config) = &self.config {
            out.push("--config".into());
            out.push(config.display().to_string());
        }
        for (key, v) in value.as_object().expect("object") {
            match v {
                serde_json::Value::Null => {}
                serde_json::Value::Bool(true) => out.push(format!("--{key}")),
                serde_json::Value::Bool(false) => {}
                serde_json::Value::Array(items) => {
                    for item in items {
                        out.push(format!("--{key}"));
                        out.push(item.as_str().unwrap_or_default().to_string());
                    }
                }
                serde_json::Value::String(s) => {
                    out.push(format!("--{key}"));
                    out.push(s.clone());
                }
                other => {
                    out.push(format!("--{key}"));
                    out.push(other.to_string());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendChoice {
    Mock,
    Remote { endpoint: Option<String>, model: String, max_in_flight: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslatorChoice {
    MockTable(PathBuf),
    Identity,
    Remote { endpoint: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectorChoice {
    Null,
    Fixture(PathBuf),
    Remote { endpoint: String },
}

/// Validated run options.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub input: SourceDescriptor,
    pub config: StoryConfig,
    pub setting_image_path: Option<PathBuf>,
    pub backend: BackendChoice,
    pub translator: TranslatorChoice,
    pub detector: DetectorChoice,
    pub out: PathBuf,
    pub keep_intermediate: bool,
    pub resume: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, kind: "invalid-arguments", message: message.into() }
    }

    fn with(code: i32, kind: &'static str, message: impl ToString) -> Self {
        Self { code, kind, message: message.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "code": self.code, "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidSpec(_) => CliError::usage(e.to_string()),
            _ => CliError::with(EXIT_INGEST, "ingestion", e),
        }
    }
}

impl From<&StoryError> for CliError {
    fn from(e: &StoryError) -> Self {
        match e {
            StoryError::Config(_) | StoryError::Mask(_) => CliError::usage(e.to_string()),
            StoryError::Translate(_) | StoryError::EmptyFirstPrompt => CliError::with(EXIT_TRANSLATE, "translation", e),
            StoryError::Backend(_) | StoryError::Detect(_) | StoryError::Image(_) => {
                CliError::with(EXIT_BACKEND, "backend", e)
            }
            StoryError::NoChunks => CliError::with(EXIT_INGEST, "ingestion", e),
            StoryError::Resume(_) | StoryError::Output(_) => CliError::with(EXIT_IO, "io", e),
        }
    }
}

fn parse_pair<T: std::str::FromStr>(s: &str, sep: char, what: &str) -> Result<(T, T), CliError> {
    let bad = || CliError::usage(format!("bad {what} `{s}`"));
    let (a, b) = s.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_protect(s: &str) -> Result<ProtectedRegion, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("bad protected region `{s}`")))?;
    let [top, left, bottom, right] = v[..] else {
        return Err(CliError::usage(format!("protected region needs 4 fractions, got `{s}`")));
    };
    let region = ProtectedRegion { top, left, bottom, right };
    region.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(region)
}

impl RunOptions {
    /// Validates arguments (after any config-file merge). Touches the
    /// filesystem only to read the setting image.
    pub fn from_args(args: RunArgs) -> Result<RunOptions, CliError> {
        let input = match (args.text, args.file, args.url) {
            (Some(t), None, None) => SourceDescriptor::Inline(t),
            (None, Some(f), None) => SourceDescriptor::File(f),
            (None, None, Some(u)) => SourceDescriptor::Url(u),
            _ => return Err(CliError::usage("exactly one of --text, --file, --url is required")),
        };
        let out = args.out.ok_or_else(|| CliError::usage("--out is required"))?;
        let language: SourceLang = match args.lang.as_deref() {
            None => SourceLang::Auto,
            Some(l) => l.parse().map_err(|e: crate::lang::UnknownLanguage| CliError::usage(e.to_string()))?,
        };

        let size = match args.size.as_deref() {
            None => crate::image_ops::DEFAULT_SIZE,
            Some(s) => parse_pair::<u32>(s, 'x', "size")?,
        };
        if size.0 == 0 || size.1 == 0 {
            return Err(CliError::usage("size must be positive"));
        }
        let defaults = MaskParams::default();
        let mask_params = MaskParams {
            dot_spacing: args.dot_spacing.unwrap_or(defaults.dot_spacing),
            edge_width: args.edge_width.unwrap_or(defaults.edge_width),
            object_dot_spacing: match args.object_dot_spacing {
                None => defaults.object_dot_spacing,
                Some(0) => None,
                Some(s) => Some(s),
            },
            mutation_fraction: args.mutation_fraction.unwrap_or(defaults.mutation_fraction),
            polarity: args.polarity.unwrap_or(defaults.polarity),
        };
        let mut chunking = ChunkingSpec::new(args.chunking.unwrap_or(ChunkMethod::ByLine));
        chunking.window = args.window.unwrap_or(chunking.window);
        chunking.stride = args.stride.unwrap_or(chunking.stride);

        let setting_image = match &args.setting_image {
            None => None,
            Some(p) => Some(
                RasterImage::load_png(p).map_err(|e| CliError::usage(format!("setting image {}: {e}", p.display())))?,
            ),
        };
        let defaults = StoryConfig::default();
        let config = StoryConfig {
            mode: args.mode.unwrap_or_default(),
            title: args.title,
            context_suffix: args.context_suffix,
            setting_image,
            chunking,
            mask_params,
            protected: args.protect.iter().map(|s| parse_protect(s)).collect::<Result<_, _>>()?,
            white_threshold: args.white_threshold.unwrap_or(defaults.white_threshold),
            object_scale: args.object_scale.unwrap_or(defaults.object_scale),
            anchor: args.anchor.as_deref().map(|a| parse_pair::<u32>(a, ',', "anchor")).transpose()?,
            run_seed: args.seed.unwrap_or(0),
            size,
            language,
        };
        config.validate().map_err(|e| CliError::usage(e.to_string()))?;

        let backend = match args.backend.as_deref().unwrap_or("mock") {
            "mock" => BackendChoice::Mock,
            "remote" => BackendChoice::Remote {
                endpoint: args.backend_endpoint,
                model: args.model.unwrap_or_else(|| DEFAULT_IMAGE_MODEL.into()),
                max_in_flight: args.max_in_flight.unwrap_or(2),
            },
            other => return Err(CliError::usage(format!("unknown backend `{other}`"))),
        };
        let translator = match args.translator.as_deref() {
            None | Some("identity") => TranslatorChoice::Identity,
            Some("remote") => TranslatorChoice::Remote { endpoint: args.translate_endpoint },
            Some(s) => match s.strip_prefix("mock:") {
                Some(path) if !path.is_empty() => TranslatorChoice::MockTable(PathBuf::from(path)),
                _ => return Err(CliError::usage(format!("unknown translator `{s}`"))),
            },
        };
        let detector = match args.detector.as_deref() {
            None | Some("null") => DetectorChoice::Null,
            Some("remote") => DetectorChoice::Remote {
                endpoint: args.ocr_endpoint.ok_or_else(|| CliError::usage("--detector remote needs --ocr-endpoint"))?,
            },
            Some(s) => match s.strip_prefix("fixture:") {
                Some(path) if !path.is_empty() => DetectorChoice::Fixture(PathBuf::from(path)),
                _ => return Err(CliError::usage(format!("unknown detector `{s}`"))),
            },
        };

        Ok(RunOptions {
            input,
            config,
            setting_image_path: args.setting_image,
            backend,
            translator,
            detector,
            out,
            keep_intermediate: args.keep_intermediate,
            resume: args.resume,
        })
    }
}

/// Manifest timestamp. `SOURCE_DATE_EPOCH` wins; mock runs default to the
/// Unix epoch so that repeated runs are byte-identical.
fn created_at(backend: &BackendChoice) -> String {
    let from_epoch = |secs: i64| {
        chrono::DateTime::from_timestamp(secs, 0).unwrap_or_default().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    };
    if let Some(secs) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok()) {
        return from_epoch(secs);
    }
    match backend {
        BackendChoice::Mock => from_epoch(0),
        BackendChoice::Remote { .. } => chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    }
}

fn build_translator(choice: &TranslatorChoice) -> Result<Translator, CliError> {
    let client: Arc<dyn TranslationClient> = match choice {
        TranslatorChoice::Identity => Arc::new(MockTranslationClient::identity()),
        TranslatorChoice::MockTable(path) => {
            Arc::new(MockTranslationClient::from_json_file(path).map_err(|e| CliError::usage(e.to_string()))?)
        }
        TranslatorChoice::Remote { endpoint } => Arc::new(
            RemoteTranslationClient::from_env(endpoint.as_deref())
                .map_err(|e| CliError::with(EXIT_TRANSLATE, "translation", e))?,
        ),
    };
    Ok(Translator::new(client))
}

fn build_backend(choice: &BackendChoice) -> Result<Box<dyn ImageBackend>, CliError> {
    Ok(match choice {
        BackendChoice::Mock => Box::new(MockBackend::new()),
        BackendChoice::Remote { endpoint, model, max_in_flight } => Box::new(
            OpenAiBackend::from_env(endpoint.as_deref())
                .map_err(|e| CliError::with(EXIT_BACKEND, "backend", e))?
                .with_model(model.clone())
                .with_max_in_flight(*max_in_flight),
        ),
    })
}

fn build_detector(choice: &DetectorChoice) -> Result<Box<dyn TextDetector>, CliError> {
    Ok(match choice {
        DetectorChoice::Null => Box::new(NullDetector),
        DetectorChoice::Fixture(path) => {
            Box::new(FixtureDetector::from_json_file(path).map_err(|e| CliError::usage(e.to_string()))?)
        }
        DetectorChoice::Remote { endpoint } => Box::new(
            RemoteOcrDetector::from_env(endpoint.clone()).map_err(|e| CliError::with(EXIT_BACKEND, "backend", e))?,
        ),
    })
}

/// ingest → clean → chunk → illustrate → write.
pub fn cmd_run(options: &RunOptions) -> Result<(), CliError> {
    let hint = options.config.language.code().cloned();
    let source = ingest(&options.input, hint)?;
    let chunks = prepare_chunks(&source.raw, &options.config.chunking)?;
    let translator = build_translator(&options.translator)?;
    let backend = build_backend(&options.backend)?;
    let detector = build_detector(&options.detector)?;
    let req = RunRequest {
        config: &options.config,
        setting_image_path: options.setting_image_path.clone(),
        chunks: &chunks,
        services: Services { translator: &translator, backend: backend.as_ref(), detector: detector.as_ref() },
        out_dir: &options.out,
        created_at: created_at(&options.backend),
        keep_intermediate: options.keep_intermediate,
        resume: options.resume,
    };
    write_run(req).map(|_| ()).map_err(|f| {
        let mut e = CliError::from(&f.error);
        e.message = format!("frame {}: {}", f.failed_at, e.message);
        e
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskRecipe {
    Edge,
    Dotted,
    CenterRect,
    CenterEllipse,
    RandomEllipse,
}

#[derive(Debug, Clone, Args)]
pub struct MaskPreviewArgs {
    #[arg(long, value_enum)]
    pub recipe: MaskRecipe,
    #[arg(long, default_value_t = 256)]
    pub width: u32,
    #[arg(long, default_value_t = 256)]
    pub height: u32,
    #[arg(long, default_value_t = crate::mask::DEFAULT_DOT_SPACING)]
    pub dot_spacing: u32,
    #[arg(long, default_value_t = crate::mask::DEFAULT_EDGE_WIDTH)]
    pub edge_width: u32,
    #[arg(long, value_enum, default_value_t = DotPolarity::DotsEditable)]
    pub polarity: DotPolarity,
    #[arg(long, default_value_t = 0.5)]
    pub extent: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_mask_preview(args: &MaskPreviewArgs) -> Result<(), CliError> {
    let (w, h) = (args.width, args.height);
    if w == 0 || h == 0 {
        return Err(CliError::usage("mask size must be positive"));
    }
    let mask = match args.recipe {
        MaskRecipe::Edge => edge_mask(w, h, args.edge_width),
        MaskRecipe::Dotted => dotted_mask(w, h, args.dot_spacing, args.edge_width, args.polarity),
        MaskRecipe::CenterRect => center_shape_mask(w, h, CenterShape::Rect, args.extent),
        MaskRecipe::CenterEllipse => center_shape_mask(w, h, CenterShape::Ellipse, args.extent),
        MaskRecipe::RandomEllipse => Ok(random_ellipse_mask(w, h, args.seed)),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    mask.save_png(&args.out).map_err(|e| CliError::with(EXIT_IO, "io", format!("{}: {e}", args.out.display())))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&RunOptions::from_args(args.with_config_file()?)?),
        Command::MaskPreview(args) => cmd_mask_preview(&args),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Errors go to `stderr` as one JSON line.
pub fn run_cli<I, T>(args: I, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", CliError::usage(e.to_string().trim()).to_json());
            return EXIT_USAGE;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.code
        }
    }
}

pub fn main_with_args() -> i32 {
    run_cli(std::env::args_os(), &mut std::io::stderr())
}

/// Convenience for examples: a `LangCode` that is known to be valid.
pub fn lang(code: &str) -> LangCode {
    code.parse().expect("valid ISO-639 code")
}
