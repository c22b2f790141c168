//! Render every mask recipe as a PNG (white = editable).
//!
//!     cargo run --example mask_catalog [-- out_dir]

use std::path::PathBuf;

use storyframes::image_ops::{extract_object, RasterImage};
use storyframes::mask::{
    center_shape_mask, dotted_mask, edge_mask, object_mutation_mask, random_ellipse_mask, CenterShape, DotPolarity,
    MaskParams, ProtectedRegion,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "mask_catalog".into()));
    std::fs::create_dir_all(&dir)?;
    let (w, h) = (256, 256);

    let blob = RasterImage::from_fn(w, h, |r, c| {
        let (dr, dc) = (r as f64 - 150.0, c as f64 - 128.0);
        if (dr / 60.0).powi(2) + (dc / 45.0).powi(2) <= 1.0 {
            [40, 40, 40, 255]
        } else {
            [255; 4]
        }
    });
    let region = extract_object(&blob, 245)?;
    let params = MaskParams::default();

    let masks = [
        ("edge", edge_mask(w, h, 16)?),
        ("dotted", dotted_mask(w, h, 4, 16, DotPolarity::DotsEditable)?),
        ("dotted_inverse", dotted_mask(w, h, 4, 16, DotPolarity::DotsFixed)?),
        ("center_rect", center_shape_mask(w, h, CenterShape::Rect, 0.5)?),
        ("center_ellipse", center_shape_mask(w, h, CenterShape::Ellipse, 0.5)?),
        ("random_ellipse", random_ellipse_mask(w, h, 42)),
        ("object_mutation", object_mutation_mask(&region, &params, &[], 42)?),
        (
            "object_mutation_head_kept",
            object_mutation_mask(&region, &params, &[ProtectedRegion::top_fraction(0.3)], 42)?,
        ),
    ];
    for (name, mask) in masks {
        let path = dir.join(format!("{name}.png"));
        mask.save_png(&path)?;
        println!("{:<28} {:>6} editable  {}", name, mask.editable_count(), path.display());
    }
    Ok(())
}
