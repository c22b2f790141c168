//! Run directory layout and the JSON manifest.
//!
//! ```text
//! <out>/frame_0000.png, frame_0001.png, ...
//! <out>/manifest.json
//! <out>/intermediate/      (only when intermediates are kept)
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::image_ops::{BBox, ObjectRegion, RasterImage};
use crate::lang::SourceLang;
use crate::mask::{MaskParams, ProtectedRegion};
use crate::seed::{combine, fnv1a};
use crate::story::{
    run_story_with, FrameRecord, ResumeState, Services, StoryConfig, StoryError, StoryFailure, StoryMode,
};
use crate::text::{Chunk, ChunkingSpec};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INTERMEDIATE_DIR: &str = "intermediate";

/// The config as recorded in a manifest: the setting image by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: StoryMode,
    pub title: Option<String>,
    pub context_suffix: Option<String>,
    pub setting_image: Option<PathBuf>,
    pub chunking: ChunkingSpec,
    pub mask_params: MaskParams,
    pub protected: Vec<ProtectedRegion>,
    pub white_threshold: u8,
    pub object_scale: f64,
    pub anchor: Option<(u32, u32)>,
    pub size: (u32, u32),
    pub language: SourceLang,
}

impl ConfigEcho {
    pub fn new(config: &StoryConfig, setting_image: Option<PathBuf>) -> Self {
        Self {
            mode: config.mode,
            title: config.title.clone(),
            context_suffix: config.context_suffix.clone(),
            setting_image,
            chunking: config.chunking,
            mask_params: config.mask_params,
            protected: config.protected.clone(),
            white_threshold: config.white_threshold,
            object_scale: config.object_scale,
            anchor: config.anchor,
            size: config.size,
            language: config.language.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Failed,
}

/// Object pixel mask as alternating run lengths (see [`ObjectRegion::to_runs`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub width: u32,
    pub height: u32,
    pub bbox: BBox,
    pub runs: Vec<u32>,
}

impl RegionRecord {
    pub fn new(region: &ObjectRegion) -> Self {
        Self { width: region.width(), height: region.height(), bbox: region.bbox(), runs: region.to_runs() }
    }

    pub fn to_region(&self) -> Option<ObjectRegion> {
        ObjectRegion::from_runs(self.width, self.height, &self.runs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub created_at: String,
    pub config: ConfigEcho,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub backend: String,
    pub translator: String,
    pub detector: String,
    pub title_translated: Option<String>,
    pub object_region: Option<RegionRecord>,
    pub chunks: Vec<Chunk>,
    pub frames: Vec<FrameRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, StoryError> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| StoryError::Output(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| StoryError::Output(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), StoryError> {
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| StoryError::Output(e.to_string()))?;
        json.push(b'\n');
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, json).map_err(|e| StoryError::Output(format!("{}: {e}", path.display())))
    }
}

/// Stable identifier of a run: a hash of its config, chunks and seed.
pub fn run_id(echo: &ConfigEcho, chunks: &[Chunk], seed: u64) -> String {
    let config = serde_json::to_vec(echo).expect("config echo serializes");
    let chunks = serde_json::to_vec(chunks).expect("chunks serialize");
    format!("{:016x}", combine(&[fnv1a(&config), fnv1a(&chunks), seed]))
}

/// Everything needed to write one run to disk.
pub struct RunRequest<'a> {
    pub config: &'a StoryConfig,
    pub setting_image_path: Option<PathBuf>,
    pub chunks: &'a [Chunk],
    pub services: Services<'a>,
    pub out_dir: &'a Path,
    pub created_at: String,
    pub keep_intermediate: bool,
    /// Continue a failed run found in `out_dir` instead of starting over.
    pub resume: bool,
}

fn write_png(dir: &Path, name: &str, img: &RasterImage) -> Result<(), String> {
    let path = dir.join(name);
    img.save_png(&path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_resume(req: &RunRequest<'_>, echo: &ConfigEcho) -> Result<Option<ResumeState>, StoryError> {
    if !req.out_dir.join(MANIFEST_FILE).exists() {
        return Ok(None);
    }
    let prior = Manifest::load(req.out_dir)?;
    if prior.config != *echo || prior.seed != req.config.run_seed || prior.chunks != req.chunks {
        return Err(StoryError::Resume("existing manifest was produced by a different run".into()));
    }
    if prior.frames.is_empty() {
        return Ok(None);
    }
    let load = |name: &str| {
        RasterImage::load_png(req.out_dir.join(name)).map_err(|e| StoryError::Resume(format!("{name}: {e}")))
    };
    let first_frame = load(&prior.frames[0].file)?;
    let last_frame = load(&prior.frames[prior.frames.len() - 1].file)?;
    let region = match &prior.object_region {
        Some(r) => Some(r.to_region().ok_or_else(|| StoryError::Resume("object region is malformed".into()))?),
        None => None,
    };
    Ok(Some(ResumeState {
        records: prior.frames,
        first_frame,
        last_frame,
        region,
        title_translated: prior.title_translated,
    }))
}

/// Runs a story and writes frames, manifest and (optionally) intermediates.
///
/// Frames are written as they are produced; on failure the manifest is still
/// written, marked failed at the offending frame index.
pub fn write_run(req: RunRequest<'_>) -> Result<Manifest, StoryFailure> {
    let echo = ConfigEcho::new(req.config, req.setting_image_path.clone());
    let early = |e: StoryError| StoryFailure { failed_at: 0, error: e, partial: Box::default() };
    std::fs::create_dir_all(req.out_dir)
        .map_err(|e| early(StoryError::Output(format!("{}: {e}", req.out_dir.display()))))?;
    let resume = if req.resume { load_resume(&req, &echo).map_err(early)? } else { None };

    let out_dir = req.out_dir;
    let result = run_story_with(req.config, req.chunks, &req.services, resume, &mut |record, frame| {
        write_png(out_dir, &record.file, frame)
    });

    let (output, failure) = match result {
        Ok(output) => (output, None),
        Err(f) => (*f.partial, Some((f.failed_at, f.error))),
    };
    if req.keep_intermediate {
        let dir = out_dir.join(INTERMEDIATE_DIR);
        let written = std::fs::create_dir_all(&dir).map_err(|e| e.to_string()).and_then(|_| {
            let i = &output.intermediates;
            for (name, img) in [
                ("object_raw.png", &i.object_raw),
                ("object_canvas.png", &i.object_canvas),
                ("background.png", &i.background),
            ] {
                if let Some(img) = img {
                    write_png(&dir, name, img)?;
                }
            }
            Ok(())
        });
        if let Err(e) = written {
            log::warn!("could not write intermediates: {e}");
        }
    }

    let manifest = Manifest {
        run_id: run_id(&echo, req.chunks, req.config.run_seed),
        created_at: req.created_at.clone(),
        config: echo,
        seed: req.config.run_seed,
        status: if failure.is_some() { RunStatus::Failed } else { RunStatus::Complete },
        failed_at: failure.as_ref().map(|(i, _)| *i),
        error: failure.as_ref().map(|(_, e)| e.to_string()),
        backend: req.services.backend.name(),
        translator: req.services.translator.client_name(),
        detector: req.services.detector.name(),
        title_translated: output.title_translated.clone(),
        object_region: output.region.as_ref().map(RegionRecord::new),
        chunks: req.chunks.to_vec(),
        frames: output.records.clone(),
    };
    let saved = manifest.save(out_dir);
    match (failure, saved) {
        (Some((failed_at, error)), _) => Err(StoryFailure { failed_at, error, partial: Box::new(output) }),
        (None, Err(e)) => {
            Err(StoryFailure { failed_at: output.records.len().saturating_sub(1), error: e, partial: Box::new(output) })
        }
        (None, Ok(())) => Ok(manifest),
    }
}
