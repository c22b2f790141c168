//! Erase detected text boxes by diffusing the surrounding colors inward.
//!
//!     cargo run --example text_removal [-- out_dir]

use storyframes::detect::{detect_clipped, FixtureDetector};
use storyframes::image_ops::{inpaint, RasterImage, TextBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "text_removal".into());
    std::fs::create_dir_all(&dir)?;
    let mut img = RasterImage::from_fn(200, 120, |r, c| [(80 + r / 2) as u8, (120 + c / 4) as u8, 200, 255]);
    let boxes = vec![TextBox::new(20, 90, 90, 14), TextBox::new(150, 10, 40, 10)];
    for b in &boxes {
        for r in b.y..b.y + b.height {
            for c in b.x..b.x + b.width {
                if (c / 3 + r / 2) % 2 == 0 {
                    img.set(r, c, [0, 0, 0, 255]);
                }
            }
        }
    }
    let found = detect_clipped(&FixtureDetector::new(boxes), &img)?;
    let clean = inpaint(&img, &found);
    img.save_png(format!("{dir}/with_text.png"))?;
    clean.save_png(format!("{dir}/clean.png"))?;
    println!("removed {} boxes, wrote {dir}/clean.png", found.len());
    Ok(())
}
