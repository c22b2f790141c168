//! Illustrate the Hebrew spider story offline and write frames plus manifest.
//!
//!     cargo run --example mock_story [-- out_dir]

use std::sync::Arc;

use storyframes::backend::MockBackend;
use storyframes::detect::NullDetector;
use storyframes::output::{write_run, RunRequest};
use storyframes::story::{Services, StoryConfig, StoryMode};
use storyframes::text::{prepare_chunks, ChunkingSpec};
use storyframes::translate::{MockTranslationClient, Translator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "mock_story".into()));
    let table = serde_json::from_str(include_str!("../tests/fixtures/spider_table.json"))?;
    let translator = Translator::new(Arc::new(MockTranslationClient::new(table)));
    let chunks = prepare_chunks(include_str!("../tests/fixtures/spider_he.txt"), &ChunkingSpec::default())?;
    let config = StoryConfig {
        mode: StoryMode::FreeObject,
        title: Some("העכביש".into()),
        context_suffix: Some("children's book illustration".into()),
        language: "he".parse()?,
        run_seed: 7,
        ..StoryConfig::default()
    };
    let manifest = write_run(RunRequest {
        config: &config,
        setting_image_path: None,
        chunks: &chunks,
        services: Services { translator: &translator, backend: &MockBackend::new(), detector: &NullDetector },
        out_dir: &out,
        created_at: "1970-01-01T00:00:00Z".into(),
        keep_intermediate: true,
        resume: false,
    })?;
    for f in &manifest.frames {
        println!("{}  {}", f.file, f.prompt.as_deref().unwrap_or("-"));
    }
    println!("run {} -> {}", manifest.run_id, out.display());
    Ok(())
}
