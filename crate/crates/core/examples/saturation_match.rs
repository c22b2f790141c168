//! Pull a washed-out frame back to the saturation of a reference frame.
//!
//!     cargo run --example saturation_match

use storyframes::image_ops::{match_saturation, mean_saturation, RasterImage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = RasterImage::from_fn(128, 128, |r, c| [200, (60 + r / 2) as u8, (40 + c / 2) as u8, 255]);
    let faded = RasterImage::from_fn(128, 128, |r, c| [210, (150 + r / 4) as u8, (140 + c / 4) as u8, 255]);
    let fixed = match_saturation(&faded, &reference)?;
    println!("reference mean S {:.4}", mean_saturation(&reference));
    println!("faded     mean S {:.4}", mean_saturation(&faded));
    println!("matched   mean S {:.4}", mean_saturation(&fixed));
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir)?;
        faded.save_png(format!("{dir}/faded.png"))?;
        fixed.save_png(format!("{dir}/matched.png"))?;
    }
    Ok(())
}
