use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use storyframes::backend::{BackendError, BackendResult, GenRequest, ImageBackend, MockBackend};
use storyframes::detect::NullDetector;
use storyframes::image_ops::{hsv_to_rgb, rgb_to_hsv, Hsv, ImageError, RasterImage};
use storyframes::mask::ProtectedRegion;
use storyframes::output::{write_run, Manifest, RunRequest, RunStatus};
use storyframes::story::{init_object, run_story, Services, StoryConfig, StoryError, StoryMode};
use storyframes::text::{prepare_chunks, ChunkMethod, ChunkingSpec};
use storyframes::translate::{MockTranslationClient, Translator};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn translator() -> Translator {
    Translator::new(Arc::new(MockTranslationClient::from_json_file(fixture("spider_table.json")).unwrap()))
}

fn chunks() -> Vec<storyframes::Chunk> {
    let raw = std::fs::read_to_string(fixture("spider_he.txt")).unwrap();
    prepare_chunks(&raw, &ChunkingSpec::new(ChunkMethod::ByLine)).unwrap()
}

fn object_config() -> StoryConfig {
    StoryConfig {
        mode: StoryMode::FreeObject,
        title: Some("העכביש".into()),
        run_seed: 11,
        language: "he".parse().unwrap(),
        ..StoryConfig::default()
    }
}

/// Mock backend that starts failing after `ok` successful calls.
struct Flaky {
    inner: MockBackend,
    ok: usize,
    calls: AtomicUsize,
}

impl ImageBackend for Flaky {
    fn generate(&self, req: &GenRequest) -> Result<BackendResult, BackendError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.ok {
            return Err(BackendError::Provider("service unavailable".into()));
        }
        self.inner.generate(req)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

struct WhiteOnly;

impl ImageBackend for WhiteOnly {
    fn generate(&self, req: &GenRequest) -> Result<BackendResult, BackendError> {
        Ok(BackendResult {
            image: RasterImage::white(req.size.0, req.size.1),
            provider_id: "white".into(),
            latency: Default::default(),
        })
    }

    fn name(&self) -> String {
        "white".into()
    }
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn request<'a>(
    config: &'a StoryConfig,
    chunks: &'a [storyframes::Chunk],
    translator: &'a Translator,
    backend: &'a dyn ImageBackend,
    dir: &'a Path,
    resume: bool,
) -> RunRequest<'a> {
    RunRequest {
        config,
        setting_image_path: None,
        chunks,
        services: Services { translator, backend, detector: &NullDetector },
        out_dir: dir,
        created_at: "1970-01-01T00:00:00Z".into(),
        keep_intermediate: false,
        resume,
    }
}

#[test]
fn object_init_is_reproducible() {
    let config = object_config();
    let (a, region, raw) = init_object(&config, "The spider", &MockBackend::new()).unwrap();
    let (b, _, _) = init_object(&config, "The spider", &MockBackend::new()).unwrap();
    assert_eq!(a, b);
    assert!(region.pixel_count() > 0);
    assert!(region.bbox().area() < raw.pixel_count() as u64);
    let edge = config.mask_params.edge_width;
    let bbox = region.bbox();
    assert!(bbox.min_row >= edge && bbox.min_col >= edge);
}

#[test]
fn white_canvas_has_no_object() {
    let err = init_object(&object_config(), "The spider", &WhiteOnly).unwrap_err();
    assert!(matches!(err, StoryError::Image(ImageError::NoObject)), "{err:?}");
}

#[test]
fn fully_protected_object_keeps_its_pixels() {
    let mut config = object_config();
    config.protected = vec![ProtectedRegion::WHOLE];
    let translator = translator();
    let services = Services { translator: &translator, backend: &MockBackend::new(), detector: &NullDetector };
    let out = run_story(&config, &chunks(), &services).unwrap();
    let region = out.region.unwrap();
    let first = &out.frames[0];
    for frame in &out.frames[1..] {
        for r in 0..first.height() {
            for c in 0..first.width() {
                if !region.contains(r, c) {
                    continue;
                }
                let (p, q) = (first.get(r, c), frame.get(r, c));
                let (a, b) = (rgb_to_hsv([p[0], p[1], p[2]]), rgb_to_hsv([q[0], q[1], q[2]]));
                let rebuilt = hsv_to_rgb(Hsv { h: a.h, s: b.s, v: a.v });
                for k in 0..3 {
                    assert!(rebuilt[k].abs_diff(q[k]) <= 2, "({r},{c}) {p:?} -> {q:?}");
                }
            }
        }
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let config = object_config();
    let chunks = chunks();
    let t = translator();

    let full = tempfile::tempdir().unwrap();
    write_run(request(&config, &chunks, &t, &MockBackend::new(), full.path(), false)).unwrap();

    // object create + gap fill + background + 3 edits succeed, the 4th edit fails
    let flaky = Flaky { inner: MockBackend::new(), ok: 6, calls: AtomicUsize::new(0) };
    let broken = tempfile::tempdir().unwrap();
    let failure = write_run(request(&config, &chunks, &t, &flaky, broken.path(), false)).unwrap_err();
    assert_eq!(failure.failed_at, 4);
    let manifest = Manifest::load(broken.path()).unwrap();
    assert_eq!(manifest.status, RunStatus::Failed);
    assert_eq!(manifest.failed_at, Some(4));
    assert_eq!(manifest.frames.len(), 4);
    assert!(broken.path().join("frame_0003.png").exists());
    assert!(!broken.path().join("frame_0004.png").exists());

    let backend = MockBackend::new();
    let resumed = write_run(request(&config, &chunks, &t, &backend, broken.path(), true)).unwrap();
    assert_eq!(resumed.status, RunStatus::Complete);
    assert_eq!(listing(broken.path()), listing(full.path()));
}

#[test]
fn resume_rejects_a_different_run() {
    let config = object_config();
    let chunks = chunks();
    let t = translator();
    let dir = tempfile::tempdir().unwrap();
    let flaky = Flaky { inner: MockBackend::new(), ok: 4, calls: AtomicUsize::new(0) };
    write_run(request(&config, &chunks, &t, &flaky, dir.path(), false)).unwrap_err();
    let mut other = config.clone();
    other.run_seed += 1;
    let failure = write_run(request(&other, &chunks, &t, &MockBackend::new(), dir.path(), true)).unwrap_err();
    assert!(matches!(failure.error, StoryError::Resume(_)), "{:?}", failure.error);
}

#[test]
fn empty_translation_repeats_previous_frame() {
    let mut table: HashMap<String, String> =
        serde_json::from_slice(&std::fs::read(fixture("spider_table.json")).unwrap()).unwrap();
    table.insert("ירד גשם חזק".into(), String::new());
    let t = Translator::new(Arc::new(MockTranslationClient::new(table)));
    let config = StoryConfig { language: "he".parse().unwrap(), ..StoryConfig::default() };
    let services = Services { translator: &t, backend: &MockBackend::new(), detector: &NullDetector };
    let chunks = chunks();
    let out = run_story(&config, &chunks, &services).unwrap();
    assert_eq!(out.frames.len(), chunks.len());
    assert_eq!(out.frames[1], out.frames[0]);
    assert_eq!(out.records[1].provider_id, "carried-over");
    assert_eq!(out.records[1].warnings.len(), 1);
    assert_ne!(out.frames[2], out.frames[1]);
}

#[test]
fn empty_first_translation_is_an_error_without_a_setting() {
    let mut table = HashMap::new();
    table.insert("א".to_string(), String::new());
    table.insert("ב".to_string(), "b".to_string());
    let t = Translator::new(Arc::new(MockTranslationClient::new(table)));
    let config = StoryConfig { language: "he".parse().unwrap(), ..StoryConfig::default() };
    let services = Services { translator: &t, backend: &MockBackend::new(), detector: &NullDetector };
    let chunks = prepare_chunks("א\nב", &ChunkingSpec::default()).unwrap();
    let failure = run_story(&config, &chunks, &services).unwrap_err();
    assert!(matches!(failure.error, StoryError::EmptyFirstPrompt));
    assert_eq!(failure.failed_at, 0);

    let setting = StoryConfig {
        mode: StoryMode::DefinedSetting,
        setting_image: Some(RasterImage::filled(256, 256, [90, 120, 200, 255])),
        ..config
    };
    let out = run_story(&setting, &chunks, &services).unwrap();
    assert_eq!(out.frames.len(), 2);
    assert_eq!(out.frames[0], RasterImage::filled(256, 256, [90, 120, 200, 255]));
}

#[test]
fn seed_changes_frames() {
    let t = translator();
    let services = Services { translator: &t, backend: &MockBackend::new(), detector: &NullDetector };
    let a = run_story(&object_config(), &chunks(), &services).unwrap();
    let b = run_story(&StoryConfig { run_seed: 12, ..object_config() }, &chunks(), &services).unwrap();
    assert_ne!(a.frames.last(), b.frames.last());
    assert_eq!(
        a.records.iter().map(|r| &r.prompt).collect::<Vec<_>>(),
        b.records.iter().map(|r| &r.prompt).collect::<Vec<_>>()
    );
}

#[test]
fn intermediates_are_written_on_request() {
    let config = object_config();
    let chunks = chunks();
    let t = translator();
    let dir = tempfile::tempdir().unwrap();
    let backend = MockBackend::new();
    let mut req = request(&config, &chunks, &t, &backend, dir.path(), false);
    req.keep_intermediate = true;
    let manifest = write_run(req).unwrap();
    for name in ["object_raw.png", "object_canvas.png", "background.png"] {
        assert!(dir.path().join("intermediate").join(name).exists(), "{name}");
    }
    assert_eq!(manifest.title_translated.as_deref(), Some("The spider"));
    let region = manifest.object_region.unwrap().to_region().unwrap();
    assert!(region.pixel_count() > 0);
    assert_eq!(manifest.frames[1].prompt.as_deref(), Some("It rained hard"));
}
