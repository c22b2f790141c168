//! Story orchestration: mode-specific initialization followed by the frame
//! loop (mask, edit, text removal, saturation anchoring).

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, ImageBackend};
use crate::detect::{detect_clipped, DetectError, TextDetector};
use crate::image_ops::{
    composite_over, extract_object, inpaint, is_white, match_saturation, placement_anchor, resize_reposition,
    ImageError, ObjectRegion, RasterImage, TextBox, DEFAULT_SIZE, DEFAULT_WHITE_THRESHOLD,
};
use crate::lang::{LangCode, SourceLang};
use crate::mask::{dotted_mask, edge_mask, object_mutation_mask, Mask, MaskError, MaskParams, ProtectedRegion};
use crate::seed::{frame_seed, stream_seed};
use crate::text::{Chunk, ChunkingSpec};
use crate::translate::{build_prompt, TranslateError, TranslationRequest, Translator, WHITE_BACKGROUND};

pub const DEFAULT_OBJECT_SCALE: f64 = 0.6;
/// Where the object's bounding-box center lands, as (row, col) fractions.
pub const DEFAULT_OBJECT_CENTER: (f64, f64) = (0.62, 0.5);
const TRANSLATION_WORKERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StoryMode {
    /// Free setting, no tracked object.
    #[default]
    Plain,
    /// A tracked object on a generated background.
    FreeObject,
    /// Every frame starts from a user-supplied setting image.
    DefinedSetting,
    /// A tracked object placed on a user-supplied setting image.
    DefinedSettingAndObject,
}

impl StoryMode {
    pub fn has_object(self) -> bool {
        matches!(self, StoryMode::FreeObject | StoryMode::DefinedSettingAndObject)
    }

    pub fn has_setting(self) -> bool {
        matches!(self, StoryMode::DefinedSetting | StoryMode::DefinedSettingAndObject)
    }
}

/// The full recipe for one story run.
#[derive(Debug, Clone)]
pub struct StoryConfig {
    pub mode: StoryMode,
    /// Story title; seeds object creation in object modes.
    pub title: Option<String>,
    /// Style phrase appended to every prompt.
    pub context_suffix: Option<String>,
    pub setting_image: Option<RasterImage>,
    pub chunking: ChunkingSpec,
    pub mask_params: MaskParams,
    pub protected: Vec<ProtectedRegion>,
    pub white_threshold: u8,
    pub object_scale: f64,
    /// Top-left of the scaled object; `None` centers it at [`DEFAULT_OBJECT_CENTER`].
    pub anchor: Option<(u32, u32)>,
    pub run_seed: u64,
    /// (width, height)
    pub size: (u32, u32),
    pub language: SourceLang,
}

impl Default for StoryConfig {
    fn default() -> Self {
        Self {
            mode: StoryMode::Plain,
            title: None,
            context_suffix: None,
            setting_image: None,
            chunking: ChunkingSpec::default(),
            mask_params: MaskParams::default(),
            protected: Vec::new(),
            white_threshold: DEFAULT_WHITE_THRESHOLD,
            object_scale: DEFAULT_OBJECT_SCALE,
            anchor: None,
            run_seed: 0,
            size: DEFAULT_SIZE,
            language: SourceLang::Auto,
        }
    }
}

impl StoryConfig {
    pub fn validate(&self) -> Result<(), StoryError> {
        let bad = |m: String| Err(StoryError::Config(m));
        if self.mode.has_setting() {
            match &self.setting_image {
                None => return bad(format!("{:?} needs a setting image", self.mode)),
                Some(img) if img.dims() != self.size => {
                    return bad(format!("setting image is {:?}, run size is {:?}", img.dims(), self.size))
                }
                _ => {}
            }
        }
        if self.mode.has_object() && self.title.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return bad(format!("{:?} needs a non-empty title", self.mode));
        }
        if !(self.object_scale > 0.0 && self.object_scale <= 1.0) {
            return bad(format!("object scale must be in (0, 1], got {}", self.object_scale));
        }
        self.chunking.validate().map_err(|e| StoryError::Config(e.to_string()))?;
        self.mask_params.validate(self.size.0, self.size.1)?;
        for p in &self.protected {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoryError {
    #[error("invalid story config: {0}")]
    Config(String),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("first chunk translated to nothing; cannot build the opening prompt")]
    EmptyFirstPrompt,
    #[error("no chunks to illustrate")]
    NoChunks,
    #[error("resume state does not fit this run: {0}")]
    Resume(String),
    #[error("writing output: {0}")]
    Output(String),
}

/// How a frame's edit mask was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskDescriptor {
    pub recipe: String,
    pub params: MaskParams,
    pub protected: Vec<ProtectedRegion>,
    pub seed: u64,
    pub editable_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PostProcess {
    pub text_boxes: Vec<TextBox>,
    pub text_removal: bool,
    pub saturation_matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub span: (usize, usize),
    pub text: String,
    pub translated: Option<String>,
    pub prompt: Option<String>,
    pub mask: Option<MaskDescriptor>,
    pub file: String,
    pub provider_id: String,
    pub postprocess: PostProcess,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:04}.png")
}

/// Images produced before the first frame.
#[derive(Debug, Clone, Default)]
pub struct Intermediates {
    /// Object as first generated on white.
    pub object_raw: Option<RasterImage>,
    /// Object after resize, reposition and gap fill.
    pub object_canvas: Option<RasterImage>,
    pub background: Option<RasterImage>,
}

#[derive(Debug, Clone, Default)]
pub struct StoryOutput {
    pub records: Vec<FrameRecord>,
    pub frames: Vec<RasterImage>,
    pub region: Option<ObjectRegion>,
    pub title_translated: Option<String>,
    pub intermediates: Intermediates,
}

#[derive(Debug)]
pub struct StoryFailure {
    pub failed_at: usize,
    pub error: StoryError,
    pub partial: Box<StoryOutput>,
}

impl std::fmt::Display for StoryFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run failed at frame {}: {}", self.failed_at, self.error)
    }
}

impl std::error::Error for StoryFailure {}

/// Frames already produced by an earlier, interrupted run.
#[derive(Debug, Clone)]
pub struct ResumeState {
    pub records: Vec<FrameRecord>,
    pub first_frame: RasterImage,
    pub last_frame: RasterImage,
    pub region: Option<ObjectRegion>,
    pub title_translated: Option<String>,
}

pub struct Services<'a> {
    pub translator: &'a Translator,
    pub backend: &'a dyn ImageBackend,
    pub detector: &'a dyn TextDetector,
}

fn translate_one(translator: &Translator, text: &str, config: &StoryConfig) -> Result<String, TranslateError> {
    translator.translate(&TranslationRequest {
        text: text.to_string(),
        source: config.language.clone(),
        target: LangCode::english(),
    })
}

fn white_mask(image: &RasterImage, threshold: u8) -> Mask {
    Mask::from_fn(image.width(), image.height(), |r, c| is_white(image.get(r, c), threshold))
}

/// Object initialization: generate on white, shrink and place, fill the
/// gap left against the fixed white border, then locate the object.
///
/// Returns the filled canvas, the object region, and the raw first image.
pub fn init_object(
    config: &StoryConfig,
    title_translated: &str,
    backend: &dyn ImageBackend,
) -> Result<(RasterImage, ObjectRegion, RasterImage), StoryError> {
    let prompt = build_prompt(title_translated, None, Some(WHITE_BACKGROUND));
    let raw = backend.create(&prompt, config.size, stream_seed(config.run_seed, "object-create"))?.image;
    let first = extract_object(&raw, config.white_threshold)?;
    let anchor = config
        .anchor
        .unwrap_or_else(|| placement_anchor(config.size, first.bbox(), config.object_scale, DEFAULT_OBJECT_CENTER));
    let placed = resize_reposition(&raw, config.object_scale, anchor)?;
    let gap = edge_mask(config.size.0, config.size.1, config.mask_params.edge_width)?
        .intersect(&white_mask(&placed, config.white_threshold))?;
    let filled = if gap.is_empty() {
        placed
    } else {
        backend.edit(&placed, &gap, &prompt, stream_seed(config.run_seed, "gap-fill"))?.image
    };
    let region = extract_object(&filled, config.white_threshold)?;
    Ok((filled, region, raw))
}

/// The opening background: the setting image, or a generated scene.
pub fn init_background(
    config: &StoryConfig,
    first_chunk_prompt: Option<&str>,
    backend: &dyn ImageBackend,
) -> Result<(RasterImage, String), StoryError> {
    if config.mode.has_setting() {
        let img = config.setting_image.clone().ok_or_else(|| StoryError::Config("setting image missing".into()))?;
        return Ok((img, "setting-image".into()));
    }
    let prompt = first_chunk_prompt.ok_or(StoryError::EmptyFirstPrompt)?;
    let out = backend.create(prompt, config.size, stream_seed(config.run_seed, "background"))?;
    Ok((out.image, out.provider_id))
}

/// Edit mask for frame `index` (≥ 1), with its descriptor.
pub fn frame_mask(
    config: &StoryConfig,
    index: usize,
    region: Option<&ObjectRegion>,
) -> Result<(Mask, MaskDescriptor), StoryError> {
    let p = &config.mask_params;
    let (w, h) = config.size;
    let seed = frame_seed(config.run_seed, index);
    let dotted = dotted_mask(w, h, p.dot_spacing, p.edge_width, p.polarity)?;
    let (mask, recipe) = match region {
        None => (dotted, "dotted"),
        Some(region) => {
            let background = dotted.subtract(&Mask::from_region(region))?;
            let object = object_mutation_mask(region, p, &config.protected, seed)?;
            let interior = edge_mask(w, h, p.edge_width)?;
            (background.union(&object)?.intersect(&interior)?, "dotted-background+object-mutation")
        }
    };
    if mask.is_empty() {
        return Err(MaskError::NothingEditable.into());
    }
    let descriptor = MaskDescriptor {
        recipe: recipe.into(),
        params: *p,
        protected: if region.is_some() { config.protected.clone() } else { Vec::new() },
        seed,
        editable_pixels: mask.editable_count(),
    };
    Ok((mask, descriptor))
}

fn remove_text(frame: RasterImage, detector: &dyn TextDetector) -> Result<(RasterImage, Vec<TextBox>), StoryError> {
    let boxes = detect_clipped(detector, &frame)?;
    if boxes.is_empty() {
        return Ok((frame, boxes));
    }
    Ok((inpaint(&frame, &boxes), boxes))
}

/// Runs the whole story in memory.
pub fn run_story(config: &StoryConfig, chunks: &[Chunk], services: &Services<'_>) -> Result<StoryOutput, StoryFailure> {
    run_story_with(config, chunks, services, None, &mut |_, _| Ok(()))
}

/// Runs the story, handing every finished frame to `on_frame` as soon as it
/// exists. With `resume`, initialization is skipped and the loop continues
/// after the last recorded frame.
pub fn run_story_with(
    config: &StoryConfig,
    chunks: &[Chunk],
    services: &Services<'_>,
    resume: Option<ResumeState>,
    on_frame: &mut dyn FnMut(&FrameRecord, &RasterImage) -> Result<(), String>,
) -> Result<StoryOutput, StoryFailure> {
    let mut out = StoryOutput::default();
    let fail = |at: usize, error: StoryError, partial: StoryOutput| StoryFailure {
        failed_at: at,
        error,
        partial: Box::new(partial),
    };

    if let Err(e) = config.validate() {
        return Err(fail(0, e, out));
    }
    if chunks.is_empty() {
        return Err(fail(0, StoryError::NoChunks, out));
    }

    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let start = resume.as_ref().map_or(0, |r| r.records.len());
    let mut translations: Vec<Option<Result<String, TranslateError>>> = vec![None; chunks.len()];
    let pending: Vec<String> = texts[start.min(texts.len())..].to_vec();
    for (i, r) in services
        .translator
        .translate_all(&pending, &config.language, &LangCode::english(), TRANSLATION_WORKERS)
        .into_iter()
        .enumerate()
    {
        translations[start + i] = Some(r);
    }

    let (first_frame, mut prev) = match resume {
        Some(state) => {
            if state.records.is_empty() || state.records.len() > chunks.len() {
                return Err(fail(0, StoryError::Resume(format!("{} recorded frames", state.records.len())), out));
            }
            if state.region.is_some() != config.mode.has_object() {
                return Err(fail(0, StoryError::Resume("object region does not match mode".into()), out));
            }
            out.records = state.records;
            out.region = state.region;
            out.title_translated = state.title_translated;
            (state.first_frame, state.last_frame)
        }
        None => match opening_frame(config, &chunks[0], translations[0].take(), services, &mut out) {
            Ok((record, frame)) => {
                if let Err(e) = on_frame(&record, &frame) {
                    return Err(fail(0, StoryError::Output(e), out));
                }
                out.records.push(record);
                out.frames.push(frame.clone());
                (frame.clone(), frame)
            }
            Err(e) => return Err(fail(0, e, out)),
        },
    };

    for (i, chunk) in chunks.iter().enumerate().skip(out.records.len()) {
        let translation = translations[i].take().expect("prefetched");
        match next_frame(config, i, chunk, translation, &prev, &first_frame, out.region.as_ref(), services) {
            Ok((record, frame)) => {
                if let Err(e) = on_frame(&record, &frame) {
                    return Err(fail(i, StoryError::Output(e), out));
                }
                out.records.push(record);
                out.frames.push(frame.clone());
                prev = frame;
            }
            Err(e) => return Err(fail(i, e, out)),
        }
    }
    Ok(out)
}

fn opening_frame(
    config: &StoryConfig,
    chunk: &Chunk,
    translation: Option<Result<String, TranslateError>>,
    services: &Services<'_>,
    out: &mut StoryOutput,
) -> Result<(FrameRecord, RasterImage), StoryError> {
    let mut warnings = Vec::new();
    let translated = match translation.expect("prefetched") {
        Ok(t) => Some(t),
        Err(TranslateError::EmptyTranslation(_)) => {
            warnings.push("chunk translated to empty text".to_string());
            None
        }
        Err(e) => return Err(e.into()),
    };
    let prompt = translated.as_deref().map(|t| build_prompt(t, config.context_suffix.as_deref(), None));
    if !config.mode.has_setting() && prompt.is_none() {
        return Err(StoryError::EmptyFirstPrompt);
    }

    let object = if config.mode.has_object() {
        let title = config.title.as_deref().unwrap_or_default();
        let title_translated = translate_one(services.translator, title, config)?;
        let (canvas, region, raw) = init_object(config, &title_translated, services.backend)?;
        out.title_translated = Some(title_translated);
        out.intermediates.object_raw = Some(raw);
        out.intermediates.object_canvas = Some(canvas.clone());
        Some((canvas, region))
    } else {
        None
    };

    let (background, provider_id) = init_background(config, prompt.as_deref(), services.backend)?;
    let frame = match &object {
        Some((canvas, region)) => {
            out.intermediates.background = Some(background.clone());
            composite_over(canvas, region, &background, (0, 0))?
        }
        None => background,
    };
    out.region = object.map(|(_, region)| region);

    let (frame, boxes) = remove_text(frame, services.detector)?;
    let record = FrameRecord {
        index: chunk.index,
        span: chunk.span,
        text: chunk.text.clone(),
        translated,
        prompt: if config.mode.has_setting() { None } else { prompt },
        mask: None,
        file: frame_file_name(chunk.index),
        provider_id,
        postprocess: PostProcess { text_removal: !boxes.is_empty(), text_boxes: boxes, saturation_matched: false },
        warnings,
    };
    Ok((record, frame))
}

#[allow(clippy::too_many_arguments)]
fn next_frame(
    config: &StoryConfig,
    index: usize,
    chunk: &Chunk,
    translation: Result<String, TranslateError>,
    prev: &RasterImage,
    first: &RasterImage,
    region: Option<&ObjectRegion>,
    services: &Services<'_>,
) -> Result<(FrameRecord, RasterImage), StoryError> {
    let translated = match translation {
        Ok(t) => t,
        Err(TranslateError::EmptyTranslation(_)) => {
            let record = FrameRecord {
                index,
                span: chunk.span,
                text: chunk.text.clone(),
                translated: None,
                prompt: None,
                mask: None,
                file: frame_file_name(index),
                provider_id: "carried-over".into(),
                postprocess: PostProcess::default(),
                warnings: vec!["chunk translated to empty text; previous frame repeated".into()],
            };
            return Ok((record, prev.clone()));
        }
        Err(e) => return Err(e.into()),
    };
    let prompt = build_prompt(&translated, config.context_suffix.as_deref(), None);
    let (mask, descriptor) = frame_mask(config, index, region)?;
    let edited = services.backend.edit(prev, &mask, &prompt, stream_seed(descriptor.seed, "edit"))?;
    let (frame, boxes) = remove_text(edited.image, services.detector)?;
    let frame = match_saturation(&frame, first)?;
    let record = FrameRecord {
        index,
        span: chunk.span,
        text: chunk.text.clone(),
        translated: Some(translated),
        prompt: Some(prompt),
        mask: Some(descriptor),
        file: frame_file_name(index),
        provider_id: edited.provider_id,
        postprocess: PostProcess { text_removal: !boxes.is_empty(), text_boxes: boxes, saturation_matched: true },
        warnings: Vec::new(),
    };
    Ok((record, frame))
}
