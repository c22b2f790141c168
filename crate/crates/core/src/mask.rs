//! Edit masks: which pixels an edit call may regenerate.
//!
//! `true` in a mask means *editable* (transparent in the edit request);
//! `false` means the pixel is fixed and must come back unchanged.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::image_ops::{ObjectRegion, RasterImage};
use crate::seed;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MaskError {
    #[error("edge width {edge} too large for a {width}x{height} mask")]
    BadDims { width: u32, height: u32, edge: u32 },
    #[error("mask dimensions differ: {left:?} vs {right:?}")]
    DimMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("object region is empty")]
    EmptyObject,
    #[error("mask has no editable pixels")]
    NothingEditable,
    #[error("invalid mask parameter: {0}")]
    BadParam(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    editable: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mask({}x{}, {} editable)", self.width, self.height, self.editable_count())
    }
}

impl Mask {
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut editable = Vec::with_capacity(width as usize * height as usize);
        for row in 0..height {
            for col in 0..width {
                editable.push(f(row, col));
            }
        }
        Self { width, height, editable }
    }

    pub fn all_fixed(width: u32, height: u32) -> Self {
        Self { width, height, editable: vec![false; width as usize * height as usize] }
    }

    pub fn all_editable(width: u32, height: u32) -> Self {
        Self { width, height, editable: vec![true; width as usize * height as usize] }
    }

    /// The object's pixels as an editable set.
    pub fn from_region(region: &ObjectRegion) -> Self {
        Self { width: region.width(), height: region.height(), editable: region.pixels().to_vec() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn is_editable(&self, row: u32, col: u32) -> bool {
        self.editable[(row * self.width + col) as usize]
    }

    pub fn set(&mut self, row: u32, col: u32, editable: bool) {
        self.editable[(row * self.width + col) as usize] = editable;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.editable
    }

    pub fn editable_count(&self) -> usize {
        self.editable.iter().filter(|&&e| e).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.editable.iter().any(|&e| e)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Result<Mask, MaskError> {
        if self.dims() != other.dims() {
            return Err(MaskError::DimMismatch { left: self.dims(), right: other.dims() });
        }
        let editable = self.editable.iter().zip(&other.editable).map(|(&a, &b)| f(a, b)).collect();
        Ok(Mask { width: self.width, height: self.height, editable })
    }

    pub fn union(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.zip_with(other, |a, b| a && b)
    }

    /// Editable in `self` and not in `other`.
    pub fn subtract(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn invert(&self) -> Mask {
        Mask { width: self.width, height: self.height, editable: self.editable.iter().map(|&e| !e).collect() }
    }

    /// Single-channel rendering, 255 = editable.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.editable.iter().map(|&e| if e { 255 } else { 0 }).collect();
        GrayImage::from_raw(self.width, self.height, data).expect("mask length")
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, image::ImageError> {
        let mut out = Cursor::new(Vec::new());
        self.to_gray().write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), image::ImageError> {
        std::fs::write(path, self.encode_png()?).map_err(image::ImageError::IoError)
    }
}

/// Whether lattice dots mark the editable pixels or the fixed anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DotPolarity {
    #[default]
    DotsEditable,
    DotsFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CenterShape {
    Rect,
    Ellipse,
}

pub const DEFAULT_DOT_SPACING: u32 = 4;
pub const DEFAULT_EDGE_WIDTH: u32 = 16;
pub const DEFAULT_OBJECT_DOT_SPACING: u32 = 12;
pub const DEFAULT_MUTATION_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    /// Background lattice spacing in pixels.
    pub dot_spacing: u32,
    /// Width of the always-fixed border.
    pub edge_width: u32,
    /// Sparse lattice inside the object; `None` disables it.
    pub object_dot_spacing: Option<u32>,
    /// Share of the object bounding box re-drawn each frame.
    pub mutation_fraction: f64,
    pub polarity: DotPolarity,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            dot_spacing: DEFAULT_DOT_SPACING,
            edge_width: DEFAULT_EDGE_WIDTH,
            object_dot_spacing: Some(DEFAULT_OBJECT_DOT_SPACING),
            mutation_fraction: DEFAULT_MUTATION_FRACTION,
            polarity: DotPolarity::DotsEditable,
        }
    }
}

impl MaskParams {
    pub fn validate(&self, width: u32, height: u32) -> Result<(), MaskError> {
        if self.dot_spacing == 0 {
            return Err(MaskError::BadParam("dot spacing must be at least 1".into()));
        }
        if self.object_dot_spacing == Some(0) {
            return Err(MaskError::BadParam("object dot spacing must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_fraction) {
            return Err(MaskError::BadParam(format!(
                "mutation fraction must be in [0, 1], got {}",
                self.mutation_fraction
            )));
        }
        check_edge(width, height, self.edge_width)
    }
}

fn check_edge(width: u32, height: u32, edge: u32) -> Result<(), MaskError> {
    if u64::from(edge) * 2 >= u64::from(width.min(height)) {
        return Err(MaskError::BadDims { width, height, edge });
    }
    Ok(())
}

#[inline]
fn in_interior(width: u32, height: u32, edge: u32, row: u32, col: u32) -> bool {
    row >= edge && col >= edge && row < height - edge && col < width - edge
}

/// A rectangle in object-bounding-box fractions, e.g. the top 40% of the
/// object is `{ top: 0, left: 0, bottom: 0.4, right: 1 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtectedRegion {
    pub top: f64,
    pub left: f64,
    pub bottom: f64,
    pub right: f64,
}

impl ProtectedRegion {
    pub const WHOLE: ProtectedRegion = ProtectedRegion { top: 0.0, left: 0.0, bottom: 1.0, right: 1.0 };

    pub fn top_fraction(fraction: f64) -> Self {
        Self { top: 0.0, left: 0.0, bottom: fraction, right: 1.0 }
    }

    pub fn validate(&self) -> Result<(), MaskError> {
        let ok = [self.top, self.left, self.bottom, self.right].iter().all(|v| (0.0..=1.0).contains(v))
            && self.top <= self.bottom
            && self.left <= self.right;
        if ok {
            Ok(())
        } else {
            Err(MaskError::BadParam(format!("protected region out of range: {self:?}")))
        }
    }

    /// Half-open pixel ranges (rows, cols) covered inside `region`'s bbox.
    fn pixel_ranges(&self, region: &ObjectRegion) -> (std::ops::Range<u32>, std::ops::Range<u32>) {
        let b = region.bbox();
        let span = |lo: f64, hi: f64, start: u32, len: u32| {
            let len_f = f64::from(len);
            let a = start + (lo * len_f).floor() as u32;
            let z = start + ((hi * len_f).ceil() as u32).min(len);
            a..z
        };
        (span(self.top, self.bottom, b.min_row, b.height()), span(self.left, self.right, b.min_col, b.width()))
    }
}

/// Fixed border of `edge` pixels, editable interior.
pub fn edge_mask(width: u32, height: u32, edge: u32) -> Result<Mask, MaskError> {
    check_edge(width, height, edge)?;
    Ok(Mask::from_fn(width, height, |r, c| in_interior(width, height, edge, r, c)))
}

/// Regular dot lattice anchored at `(edge, edge)` with a fixed border.
pub fn dotted_mask(width: u32, height: u32, spacing: u32, edge: u32, polarity: DotPolarity) -> Result<Mask, MaskError> {
    if spacing == 0 {
        return Err(MaskError::BadParam("dot spacing must be at least 1".into()));
    }
    check_edge(width, height, edge)?;
    Ok(Mask::from_fn(width, height, |r, c| {
        if !in_interior(width, height, edge, r, c) {
            return false;
        }
        let dot = (r - edge).is_multiple_of(spacing) && (c - edge).is_multiple_of(spacing);
        match polarity {
            DotPolarity::DotsEditable => dot,
            DotPolarity::DotsFixed => !dot,
        }
    }))
}

/// Centered shape spanning `extent` of each dimension.
pub fn center_shape_mask(width: u32, height: u32, shape: CenterShape, extent: f64) -> Result<Mask, MaskError> {
    if !(extent > 0.0 && extent <= 1.0) {
        return Err(MaskError::BadParam(format!("extent must be in (0, 1], got {extent}")));
    }
    Ok(match shape {
        CenterShape::Rect => {
            let eh = (f64::from(height) * extent).round() as u32;
            let ew = (f64::from(width) * extent).round() as u32;
            let top = (height - eh) / 2;
            let left = (width - ew) / 2;
            Mask::from_fn(width, height, |r, c| r >= top && r < top + eh && c >= left && c < left + ew)
        }
        CenterShape::Ellipse => {
            let cr = (f64::from(height) - 1.0) / 2.0;
            let cc = (f64::from(width) - 1.0) / 2.0;
            let ar = f64::from(height) * extent / 2.0;
            let ac = f64::from(width) * extent / 2.0;
            ellipse(width, height, (cr, cc), (ar, ac))
        }
    })
}

fn ellipse(width: u32, height: u32, center: (f64, f64), semi_axes: (f64, f64)) -> Mask {
    Mask::from_fn(width, height, |r, c| {
        let dr = (f64::from(r) - center.0) / semi_axes.0;
        let dc = (f64::from(c) - center.1) / semi_axes.1;
        dr * dr + dc * dc <= 1.0
    })
}

/// One seeded ellipse that lies entirely inside the image, with semi-axes
/// drawn from `[0.1, 0.3] · min(width, height)`.
pub fn random_ellipse_mask(width: u32, height: u32, seed: u64) -> Mask {
    let mut rng = seed::rng(seed);
    let side = f64::from(width.min(height));
    let ar: f64 = rng.random_range(0.1..=0.3) * side;
    let ac: f64 = rng.random_range(0.1..=0.3) * side;
    let cr = rng.random_range(ar..=(f64::from(height) - 1.0 - ar).max(ar));
    let cc = rng.random_range(ac..=(f64::from(width) - 1.0 - ac).max(ac));
    ellipse(width, height, (cr, cc), (ar, ac))
}

/// Draws taken from the seed for one object mutation mask, in draw order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MutationDraws {
    pub rect_top: u32,
    pub rect_left: u32,
    pub rect_height: u32,
    pub rect_width: u32,
    pub dot_phase: (u32, u32),
}

/// Performs the seeded draws behind [`object_mutation_mask`].
pub fn mutation_draws(region: &ObjectRegion, params: &MaskParams, seed: u64) -> MutationDraws {
    let mut rng = seed::rng(seed);
    let b = region.bbox();
    let f = params.mutation_fraction.clamp(0.0, 1.0).sqrt();
    let rect_height = (f64::from(b.height()) * f).floor() as u32;
    let rect_width = (f64::from(b.width()) * f).floor() as u32;
    let rect_top = b.min_row + rng.random_range(0..=b.height() - rect_height);
    let rect_left = b.min_col + rng.random_range(0..=b.width() - rect_width);
    let spacing = params.object_dot_spacing.unwrap_or(1).max(1);
    let dot_phase = (rng.random_range(0..spacing), rng.random_range(0..spacing));
    MutationDraws { rect_top, rect_left, rect_height, rect_width, dot_phase }
}

/// Per-frame editable part of the dominant object: a random rectangle over
/// `mutation_fraction` of its bounding box plus a sparse in-object lattice,
/// both restricted to object pixels, minus every protected region.
pub fn object_mutation_mask(
    region: &ObjectRegion,
    params: &MaskParams,
    protected: &[ProtectedRegion],
    seed: u64,
) -> Result<Mask, MaskError> {
    if region.pixel_count() == 0 {
        return Err(MaskError::EmptyObject);
    }
    for p in protected {
        p.validate()?;
    }
    let d = mutation_draws(region, params, seed);
    let b = region.bbox();
    let mut mask = Mask::all_fixed(region.width(), region.height());
    for r in b.min_row..=b.max_row {
        for c in b.min_col..=b.max_col {
            if !region.contains(r, c) {
                continue;
            }
            let in_rect =
                r >= d.rect_top && r < d.rect_top + d.rect_height && c >= d.rect_left && c < d.rect_left + d.rect_width;
            let on_dot = params
                .object_dot_spacing
                .is_some_and(|s| (r - b.min_row) % s == d.dot_phase.0 % s && (c - b.min_col) % s == d.dot_phase.1 % s);
            if in_rect || on_dot {
                mask.set(r, c, true);
            }
        }
    }
    for p in protected {
        let (rows, cols) = p.pixel_ranges(region);
        for r in rows {
            for c in cols.clone() {
                mask.set(r, c, false);
            }
        }
    }
    Ok(mask)
}

/// Copy of `image` whose alpha is 0 on editable pixels and 255 elsewhere.
pub fn to_edit_alpha(mask: &Mask, image: &RasterImage) -> Result<RasterImage, MaskError> {
    if mask.dims() != image.dims() {
        return Err(MaskError::DimMismatch { left: mask.dims(), right: image.dims() });
    }
    let mut out = image.clone();
    for (px, &e) in out.pixels_mut().zip(mask.as_slice()) {
        px[3] = if e { 0 } else { 255 };
    }
    Ok(out)
}
