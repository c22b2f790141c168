use image::imageops::{self, FilterType};
use serde::{Deserialize, Serialize};

use super::{ImageError, RasterImage};

/// Per-channel threshold below which a pixel counts as non-white.
pub const DEFAULT_WHITE_THRESHOLD: u8 = 245;

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub min_row: u32,
    pub min_col: u32,
    pub max_row: u32,
    pub max_col: u32,
}

impl BBox {
    pub fn height(&self) -> u32 {
        self.max_row - self.min_row + 1
    }

    pub fn width(&self) -> u32 {
        self.max_col - self.min_col + 1
    }

    pub fn area(&self) -> u64 {
        u64::from(self.height()) * u64::from(self.width())
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.min_row..=self.max_row).contains(&row) && (self.min_col..=self.max_col).contains(&col)
    }

    /// Center as (row, col), in pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.min_row) + f64::from(self.max_row)) / 2.0,
            (f64::from(self.min_col) + f64::from(self.max_col)) / 2.0,
        )
    }
}

/// Pixel mask and tight bounding box of the dominant story object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectRegion {
    width: u32,
    height: u32,
    pixels: Vec<bool>,
    bbox: BBox,
}

impl ObjectRegion {
    /// Builds a region from a row-major pixel mask; `None` if the mask is empty.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<bool>) -> Option<Self> {
        assert_eq!(pixels.len(), width as usize * height as usize, "mask length");
        let mut bbox: Option<BBox> = None;
        for (i, _) in pixels.iter().enumerate().filter(|(_, &p)| p) {
            let row = (i / width as usize) as u32;
            let col = (i % width as usize) as u32;
            bbox = Some(match bbox {
                None => BBox { min_row: row, min_col: col, max_row: row, max_col: col },
                Some(b) => BBox {
                    min_row: b.min_row.min(row),
                    min_col: b.min_col.min(col),
                    max_row: b.max_row.max(row),
                    max_col: b.max_col.max(col),
                },
            });
        }
        bbox.map(|bbox| Self { width, height, pixels, bbox })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        row < self.height && col < self.width && self.pixels[(row * self.width + col) as usize]
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Run lengths of alternating non-object / object pixels in row-major
    /// order, starting with a (possibly zero) non-object run.
    pub fn to_runs(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &p in &self.pixels {
            if p == current {
                len += 1;
            } else {
                runs.push(len);
                current = p;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn from_runs(width: u32, height: u32, runs: &[u32]) -> Option<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        let mut value = false;
        for &len in runs {
            pixels.extend(std::iter::repeat_n(value, len as usize));
            value = !value;
        }
        if pixels.len() != width as usize * height as usize {
            return None;
        }
        Self::from_pixels(width, height, pixels)
    }
}

#[inline]
pub fn is_white(px: [u8; 4], threshold: u8) -> bool {
    px[0].min(px[1]).min(px[2]) >= threshold
}

/// Locates the non-white pixels of an image on a white background.
///
/// The mask is exactly the set of pixels whose smallest RGB channel is below
/// `white_threshold`; interior holes are kept as holes.
pub fn extract_object(image: &RasterImage, white_threshold: u8) -> Result<ObjectRegion, ImageError> {
    let pixels = image.pixels().map(|p| !is_white(p, white_threshold)).collect();
    ObjectRegion::from_pixels(image.width(), image.height(), pixels).ok_or(ImageError::NoObject)
}

/// Size of `(width, height)` after scaling by `scale`.
pub fn scaled_dims(dims: (u32, u32), scale: f64) -> (u32, u32) {
    let s = |d: u32| ((f64::from(d) * scale).round() as u32).max(1);
    (s(dims.0), s(dims.1))
}

/// Bilinearly scales `object_img` and pastes it with its top-left corner at
/// `anchor` (row, col) on a white canvas of the original size.
pub fn resize_reposition(object_img: &RasterImage, scale: f64, anchor: (u32, u32)) -> Result<RasterImage, ImageError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(ImageError::BadScale(scale));
    }
    let (w, h) = object_img.dims();
    let (sw, sh) = scaled_dims((w, h), scale);
    let (row, col) = anchor;
    if u64::from(row) + u64::from(sh) > u64::from(h) || u64::from(col) + u64::from(sw) > u64::from(w) {
        return Err(ImageError::OutOfBounds);
    }
    let scaled = if (sw, sh) == (w, h) {
        object_img.clone()
    } else {
        RasterImage::from_rgba_image(imageops::resize(&object_img.to_rgba_image(), sw, sh, FilterType::Triangle))
    };
    let mut canvas = RasterImage::white(w, h);
    for r in 0..sh {
        for c in 0..sw {
            canvas.set(row + r, col + c, scaled.get(r, c));
        }
    }
    Ok(canvas)
}

/// Top-left anchor that puts the scaled object's bounding-box center at
/// `target` (fractions of height and width), clamped so the scaled image fits.
pub fn placement_anchor(dims: (u32, u32), bbox: BBox, scale: f64, target: (f64, f64)) -> (u32, u32) {
    let (w, h) = dims;
    let (sw, sh) = scaled_dims(dims, scale);
    let (cr, cc) = bbox.center();
    let place = |center: f64, target_frac: f64, full: u32, scaled: u32| {
        let desired = target_frac * f64::from(full) - center * scale;
        desired.round().clamp(0.0, f64::from(full - scaled)) as u32
    };
    (place(cr, target.0, h, sh), place(cc, target.1, w, sw))
}

/// Copies the object's masked pixels onto a copy of `background`, shifted by
/// `offset` (row, col).
pub fn composite_over(
    object: &RasterImage,
    region: &ObjectRegion,
    background: &RasterImage,
    offset: (i64, i64),
) -> Result<RasterImage, ImageError> {
    if object.dims() != (region.width(), region.height()) {
        return Err(ImageError::DimMismatch { left: object.dims(), right: (region.width(), region.height()) });
    }
    let b = region.bbox();
    let top = i64::from(b.min_row) + offset.0;
    let left = i64::from(b.min_col) + offset.1;
    let bottom = i64::from(b.max_row) + offset.0;
    let right = i64::from(b.max_col) + offset.1;
    if top < 0 || left < 0 || bottom >= i64::from(background.height()) || right >= i64::from(background.width()) {
        return Err(ImageError::OutOfBounds);
    }
    let mut out = background.clone();
    for r in b.min_row..=b.max_row {
        for c in b.min_col..=b.max_col {
            if region.contains(r, c) {
                let dr = (i64::from(r) + offset.0) as u32;
                let dc = (i64::from(c) + offset.1) as u32;
                out.set(dr, dc, object.get(r, c));
            }
        }
    }
    Ok(out)
}
