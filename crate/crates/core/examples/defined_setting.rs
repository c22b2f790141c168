//! Place a generated object into a fixed scene and carry both through the story.
//!
//!     cargo run --example defined_setting [-- out_dir]

use std::sync::Arc;

use storyframes::backend::MockBackend;
use storyframes::detect::NullDetector;
use storyframes::image_ops::RasterImage;
use storyframes::mask::ProtectedRegion;
use storyframes::story::{run_story, Services, StoryConfig, StoryMode};
use storyframes::text::{prepare_chunks, ChunkingSpec};
use storyframes::translate::{MockTranslationClient, Translator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "defined_setting".into());
    std::fs::create_dir_all(&dir)?;
    let scene = RasterImage::from_fn(256, 256, |r, c| {
        if r < 150 {
            [110, (160 + c / 8) as u8, 230, 255]
        } else {
            [90, (140 - (r - 150) / 2) as u8, 60, 255]
        }
    });
    let config = StoryConfig {
        mode: StoryMode::DefinedSettingAndObject,
        title: Some("a green man".into()),
        setting_image: Some(scene),
        protected: vec![ProtectedRegion::top_fraction(0.25)],
        run_seed: 5,
        ..StoryConfig::default()
    };
    let story = "a green man walks in the park\nhe finds a red ball\nhe throws the ball\na dog runs after it";
    let chunks = prepare_chunks(story, &ChunkingSpec::default())?;
    let translator = Translator::new(Arc::new(MockTranslationClient::identity()));
    let services = Services { translator: &translator, backend: &MockBackend::new(), detector: &NullDetector };
    let out = run_story(&config, &chunks, &services)?;
    for (record, frame) in out.records.iter().zip(&out.frames) {
        frame.save_png(format!("{dir}/{}", record.file))?;
        let editable = record.mask.as_ref().map_or(0, |m| m.editable_pixels);
        println!("{}  editable {:>5}  {}", record.file, editable, record.text);
    }
    Ok(())
}
