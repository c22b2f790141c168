use std::time::Duration;

use super::{BackendError, BackendResult, GenKind, GenRequest, ImageBackend};
use crate::image_ops::{extract_object, RasterImage, Rgba, DEFAULT_WHITE_THRESHOLD, WHITE};
use crate::seed::{combine, fnv1a};
use crate::translate::WHITE_BACKGROUND;

/// Side of the square blocks in the procedural pattern.
pub const MOCK_BLOCK: u32 = 8;
// Channels stay below this so generated content never reads as white.
const CHANNEL_CAP: u64 = 231;

/// Deterministic offline backend.
///
/// Every generated pixel is a function of (prompt hash, request seed, block
/// row, block column). Prompts asking for a white background get the
/// pattern only inside an ellipse, white elsewhere: a prompt-dependent one
/// when creating, and the one inscribed in the existing non-white content
/// when editing, so an edit continues the object already on the canvas.
#[derive(Debug, Clone, Default)]
pub struct MockBackend;

impl MockBackend {
    pub fn new() -> Self {
        Self
    }

    fn painter(prompt: &str, seed: u64, size: (u32, u32), base: Option<&RasterImage>) -> impl Fn(u32, u32) -> Rgba {
        let prompt_hash = fnv1a(prompt.as_bytes());
        let on_white = prompt.contains(WHITE_BACKGROUND);
        let (w, h) = (f64::from(size.0), f64::from(size.1));
        let shape = combine(&[prompt_hash, seed, 0x0053_4841_5045]);
        let frac = |shift: u32, lo: f64, hi: f64| lo + (hi - lo) * ((shape >> shift) & 0xffff) as f64 / 65535.0;
        let existing = base.filter(|_| on_white).and_then(|b| extract_object(b, DEFAULT_WHITE_THRESHOLD).ok());
        let (center, axes) = match existing {
            Some(region) => {
                let b = region.bbox();
                let (cr, cc) = b.center();
                ((cr + 0.5, cc + 0.5), (f64::from(b.height()) / 2.0, f64::from(b.width()) / 2.0))
            }
            None => (
                (h * frac(0, 0.45, 0.55), w * frac(16, 0.45, 0.55)),
                (h * frac(32, 0.25, 0.4), w * frac(48, 0.25, 0.4)),
            ),
        };
        move |r, c| {
            if on_white {
                let dr = (f64::from(r) + 0.5 - center.0) / axes.0;
                let dc = (f64::from(c) + 0.5 - center.1) / axes.1;
                if dr * dr + dc * dc > 1.0 {
                    return WHITE;
                }
            }
            let v = combine(&[prompt_hash, seed, u64::from(r / MOCK_BLOCK), u64::from(c / MOCK_BLOCK)]);
            let ch = |shift: u32| ((v >> shift) & 0xff) % CHANNEL_CAP;
            [ch(0) as u8, ch(8) as u8, ch(16) as u8, 255]
        }
    }

    fn provider_id(req: &GenRequest) -> String {
        let kind = match req.kind {
            GenKind::Create => "create",
            GenKind::Edit { .. } => "edit",
        };
        format!("mock-{kind}-{:016x}", combine(&[fnv1a(req.prompt.as_bytes()), req.request_seed]))
    }
}

impl ImageBackend for MockBackend {
    fn generate(&self, req: &GenRequest) -> Result<BackendResult, BackendError> {
        let base = match &req.kind {
            GenKind::Edit { base, .. } => Some(base),
            GenKind::Create => None,
        };
        let paint = Self::painter(&req.prompt, req.request_seed, req.size, base);
        let image = match &req.kind {
            GenKind::Create => RasterImage::from_fn(req.size.0, req.size.1, paint),
            GenKind::Edit { base, mask } => {
                let mut out = base.clone();
                for r in 0..req.size.1 {
                    for c in 0..req.size.0 {
                        if mask.is_editable(r, c) {
                            out.set(r, c, paint(r, c));
                        }
                    }
                }
                out
            }
        };
        Ok(BackendResult { image, provider_id: Self::provider_id(req), latency: Duration::ZERO })
    }

    fn name(&self) -> String {
        "mock".into()
    }
}
