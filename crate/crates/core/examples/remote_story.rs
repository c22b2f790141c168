//! Two-line story against the real translation and image services.
//! Needs OPENAI_API_KEY and TRANSLATE_API_KEY.
//!
//!     cargo run --example remote_story [-- out_dir]

use std::sync::Arc;

use storyframes::backend::OpenAiBackend;
use storyframes::detect::NullDetector;
use storyframes::output::{write_run, RunRequest};
use storyframes::story::{Services, StoryConfig};
use storyframes::text::{prepare_chunks, ChunkingSpec};
use storyframes::translate::{RemoteTranslationClient, Translator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::var_os("OPENAI_API_KEY").is_none() || std::env::var_os("TRANSLATE_API_KEY").is_none() {
        eprintln!("set OPENAI_API_KEY and TRANSLATE_API_KEY to run this example");
        return Ok(());
    }
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "remote_story".into()));
    let translator = Translator::new(Arc::new(RemoteTranslationClient::from_env(None)?));
    let backend = OpenAiBackend::from_env(None)?;
    let config =
        StoryConfig { language: "he".parse()?, context_suffix: Some("watercolor".into()), ..StoryConfig::default() };
    let chunks = prepare_chunks("העכביש טיפס על הקיר\nירד גשם חזק", &ChunkingSpec::default())?;
    let manifest = write_run(RunRequest {
        config: &config,
        setting_image_path: None,
        chunks: &chunks,
        services: Services { translator: &translator, backend: &backend, detector: &NullDetector },
        out_dir: &out,
        created_at: chrono::Utc::now().to_rfc3339(),
        keep_intermediate: false,
        resume: false,
    })?;
    println!("{} frames in {}", manifest.frames.len(), out.display());
    Ok(())
}
