//! Hexcone HSV conversion and saturation anchoring.

use super::{ImageError, RasterImage};

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

pub fn rgb_to_hsv(rgb: [u8; 3]) -> Hsv {
    let r = f64::from(rgb[0]) / 255.0;
    let g = f64::from(rgb[1]) / 255.0;
    let b = f64::from(rgb[2]) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;

    let h = if chroma == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / chroma + 2.0)
    } else {
        60.0 * ((r - g) / chroma + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { chroma / max };
    Hsv { h: if h >= 360.0 { h - 360.0 } else { h }, s, v: max }
}

pub fn hsv_to_rgb(hsv: Hsv) -> [u8; 3] {
    let Hsv { h, s, v } = hsv;
    let s = s.clamp(0.0, 1.0);
    let v = v.clamp(0.0, 1.0);
    let chroma = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = chroma * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = v - chroma;
    let q = |c: f64| ((c + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r1), q(g1), q(b1)]
}

/// Mean HSV saturation over every pixel of `image`.
pub fn mean_saturation(image: &RasterImage) -> f64 {
    let n = image.pixel_count();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = image.pixels().map(|p| rgb_to_hsv([p[0], p[1], p[2]]).s).sum();
    total / n as f64
}

/// Rescales the saturation of every pixel of `frame` so that its mean
/// saturation matches that of `reference`. Hue, value and alpha are kept.
pub fn match_saturation(frame: &RasterImage, reference: &RasterImage) -> Result<RasterImage, ImageError> {
    if frame.dims() != reference.dims() {
        return Err(ImageError::DimMismatch { left: frame.dims(), right: reference.dims() });
    }
    let mu_frame = mean_saturation(frame);
    if mu_frame == 0.0 {
        return Ok(frame.clone());
    }
    let scale = mean_saturation(reference) / mu_frame;
    Ok(scale_saturation(frame, scale))
}

/// Multiplies every pixel's saturation by `scale`, clamped to `[0, 1]`.
pub fn scale_saturation(image: &RasterImage, scale: f64) -> RasterImage {
    let mut out = image.clone();
    for px in out.pixels_mut() {
        let hsv = rgb_to_hsv([px[0], px[1], px[2]]);
        if hsv.s == 0.0 {
            continue;
        }
        let rgb = hsv_to_rgb(Hsv { s: (hsv.s * scale).min(1.0), ..hsv });
        px[..3].copy_from_slice(&rgb);
    }
    out
}
