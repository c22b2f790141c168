//! Generate an object on white, shrink and place it, fill the border gap,
//! and locate it again.
//!
//!     cargo run --example object_pipeline [-- out_dir]

use storyframes::backend::MockBackend;
use storyframes::story::{init_object, StoryConfig, StoryMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "object_pipeline".into());
    std::fs::create_dir_all(&dir)?;
    let config = StoryConfig {
        mode: StoryMode::FreeObject,
        title: Some("spider".into()),
        run_seed: 3,
        ..StoryConfig::default()
    };
    let (canvas, region, raw) = init_object(&config, "a black spider", &MockBackend::new())?;
    raw.save_png(format!("{dir}/raw.png"))?;
    canvas.save_png(format!("{dir}/canvas.png"))?;
    let b = region.bbox();
    println!(
        "object: {} pixels, bbox rows {}..={} cols {}..={}",
        region.pixel_count(),
        b.min_row,
        b.max_row,
        b.min_col,
        b.max_col
    );
    Ok(())
}
