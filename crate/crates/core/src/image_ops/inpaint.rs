//! Diffusion fill for detected text boxes.

use serde::{Deserialize, Serialize};

use super::RasterImage;

pub const MAX_ITERATIONS: usize = 500;
/// Stop once no channel moves by this much in one sweep.
pub const CONVERGENCE_STEP: f64 = 1.0;

/// Axis-aligned rectangle; `x`/`y` are the left column and top row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl TextBox {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self { x, y, width, height }
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        row >= self.y && row < self.y + self.height && col >= self.x && col < self.x + self.width
    }

    /// Clips the box to a `width × height` image; `None` if nothing remains.
    pub fn clip(&self, width: u32, height: u32) -> Option<TextBox> {
        let x1 = self.x.saturating_add(self.width).min(width);
        let y1 = self.y.saturating_add(self.height).min(height);
        (self.x < x1 && self.y < y1).then(|| TextBox::new(self.x, self.y, x1 - self.x, y1 - self.y))
    }
}

/// Replaces the pixels inside `boxes` by iterated 4-neighbour averaging of
/// the surrounding pixels. Pixels outside every box are copied unchanged.
///
/// Each connected hole starts at the mean of its known border pixels, so a
/// hole with a uniform surround is filled with exactly that color.
pub fn inpaint(image: &RasterImage, boxes: &[TextBox]) -> RasterImage {
    let (w, h) = image.dims();
    let (wu, hu) = (w as usize, h as usize);
    let mut unknown = vec![false; wu * hu];
    for b in boxes.iter().filter_map(|b| b.clip(w, h)) {
        for r in b.y..b.y + b.height {
            for c in b.x..b.x + b.width {
                unknown[r as usize * wu + c as usize] = true;
            }
        }
    }
    if !unknown.iter().any(|&u| u) {
        return image.clone();
    }

    let mut values: Vec<[f64; 4]> = image.pixels().map(|p| p.map(f64::from)).collect();
    let neighbours = |i: usize| {
        let (r, c) = (i / wu, i % wu);
        let mut out = [usize::MAX; 4];
        if r > 0 {
            out[0] = i - wu;
        }
        if r + 1 < hu {
            out[1] = i + wu;
        }
        if c > 0 {
            out[2] = i - 1;
        }
        if c + 1 < wu {
            out[3] = i + 1;
        }
        out
    };

    // Seed every connected hole with the mean of the known pixels around it.
    let mut seen = vec![false; wu * hu];
    let mut holes: Vec<usize> = Vec::new();
    for start in 0..wu * hu {
        if !unknown[start] || seen[start] {
            continue;
        }
        let mut component = vec![start];
        seen[start] = true;
        let mut border_sum = [0.0f64; 4];
        let mut border_n = 0usize;
        let mut border_seen = std::collections::HashSet::new();
        let mut k = 0;
        while k < component.len() {
            let i = component[k];
            k += 1;
            for j in neighbours(i).into_iter().filter(|&j| j != usize::MAX) {
                if unknown[j] {
                    if !seen[j] {
                        seen[j] = true;
                        component.push(j);
                    }
                } else if border_seen.insert(j) {
                    for ch in 0..4 {
                        border_sum[ch] += values[j][ch];
                    }
                    border_n += 1;
                }
            }
        }
        if border_n == 0 {
            // Hole covers the whole image; there is nothing to diffuse from.
            continue;
        }
        let mean = border_sum.map(|s| s / border_n as f64);
        for &i in &component {
            values[i] = mean;
        }
        holes.extend(component);
    }
    holes.sort_unstable();

    for _ in 0..MAX_ITERATIONS {
        let mut max_change = 0.0f64;
        for &i in &holes {
            let mut sum = [0.0f64; 4];
            let mut n = 0.0;
            for j in neighbours(i).into_iter().filter(|&j| j != usize::MAX) {
                for ch in 0..4 {
                    sum[ch] += values[j][ch];
                }
                n += 1.0;
            }
            for ch in 0..4 {
                let next = sum[ch] / n;
                max_change = max_change.max((next - values[i][ch]).abs());
                values[i][ch] = next;
            }
        }
        if max_change < CONVERGENCE_STEP {
            break;
        }
    }

    let mut out = image.clone();
    for &i in &holes {
        let px = values[i].map(|v| v.round().clamp(0.0, 255.0) as u8);
        out.set((i / wu) as u32, (i % wu) as u32, px);
    }
    out
}
