//! Text detectors feeding the text-removal step.

use std::path::Path;
use std::time::Duration;

use reqwest::blocking::multipart::{Form, Part};
use serde::Deserialize;

use crate::http::{with_retries, RetryPolicy};
use crate::image_ops::{RasterImage, TextBox};

pub const OCR_KEY_ENV: &str = "OCR_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("text detection failed: {0}")]
    Service(String),
    #[error("bad detector fixture: {0}")]
    Fixture(String),
}

pub trait TextDetector: Send + Sync {
    /// Raw boxes as reported; see [`detect_clipped`].
    fn detect(&self, image: &RasterImage) -> Result<Vec<TextBox>, DetectError>;

    fn name(&self) -> String;
}

/// Runs `detector` and clips its boxes to the image, dropping empty ones.
pub fn detect_clipped(detector: &dyn TextDetector, image: &RasterImage) -> Result<Vec<TextBox>, DetectError> {
    Ok(detector.detect(image)?.into_iter().filter_map(|b| b.clip(image.width(), image.height())).collect())
}

/// Never finds text.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullDetector;

impl TextDetector for NullDetector {
    fn detect(&self, _image: &RasterImage) -> Result<Vec<TextBox>, DetectError> {
        Ok(Vec::new())
    }

    fn name(&self) -> String {
        "null".into()
    }
}

/// Reports the same configured boxes for every image.
#[derive(Debug, Clone, Default)]
pub struct FixtureDetector {
    boxes: Vec<TextBox>,
}

impl FixtureDetector {
    pub fn new(boxes: Vec<TextBox>) -> Self {
        Self { boxes }
    }

    /// Reads a JSON array of `{x, y, width, height}` objects.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, DetectError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| DetectError::Fixture(format!("{}: {e}", path.display())))?;
        let boxes =
            serde_json::from_slice(&bytes).map_err(|e| DetectError::Fixture(format!("{}: {e}", path.display())))?;
        Ok(Self { boxes })
    }
}

impl TextDetector for FixtureDetector {
    fn detect(&self, _image: &RasterImage) -> Result<Vec<TextBox>, DetectError> {
        Ok(self.boxes.clone())
    }

    fn name(&self) -> String {
        "fixture".into()
    }
}

/// Client for an OCR service that accepts a PNG upload (multipart field
/// `image`) and answers `{"boxes": [{"x", "y", "width", "height"}, ...]}`.
/// `OCR_API_KEY`, when set, is sent as a bearer token.
pub struct RemoteOcrDetector {
    endpoint: String,
    api_key: Option<String>,
    policy: RetryPolicy,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct OcrResponse {
    boxes: Vec<TextBox>,
}

impl RemoteOcrDetector {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, DetectError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| DetectError::Service(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), api_key, policy: RetryPolicy::default(), http })
    }

    pub fn from_env(endpoint: impl Into<String>) -> Result<Self, DetectError> {
        Self::new(endpoint, std::env::var(OCR_KEY_ENV).ok())
    }

    pub fn with_retry_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }
}

impl TextDetector for RemoteOcrDetector {
    fn detect(&self, image: &RasterImage) -> Result<Vec<TextBox>, DetectError> {
        let png = image.encode_png().map_err(|e| DetectError::Service(e.to_string()))?;
        let resp = with_retries(&self.policy, || {
            let part = Part::bytes(png.clone()).file_name("frame.png").mime_str("image/png")?;
            let mut req = self.http.post(&self.endpoint).multipart(Form::new().part("image", part));
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            req.send()
        })
        .map_err(|f| DetectError::Service(format!("{f:?}")))?;
        let parsed: OcrResponse = resp.json().map_err(|e| DetectError::Service(format!("bad response: {e}")))?;
        Ok(parsed.boxes)
    }

    fn name(&self) -> String {
        "remote-ocr".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_boxes_are_clipped() {
        let d = FixtureDetector::new(vec![TextBox::new(250, 250, 20, 20), TextBox::new(300, 0, 5, 5)]);
        let boxes = detect_clipped(&d, &RasterImage::white(256, 256)).unwrap();
        assert_eq!(boxes, vec![TextBox::new(250, 250, 6, 6)]);
    }

    #[test]
    fn fixture_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("boxes.json");
        std::fs::write(&p, r#"[{"x":1,"y":2,"width":3,"height":4}]"#).unwrap();
        let d = FixtureDetector::from_json_file(&p).unwrap();
        assert_eq!(d.detect(&RasterImage::white(8, 8)).unwrap(), vec![TextBox::new(1, 2, 3, 4)]);
        std::fs::write(&p, "{").unwrap();
        assert!(FixtureDetector::from_json_file(&p).is_err());
    }

    #[test]
    fn null_is_empty() {
        assert!(NullDetector.detect(&RasterImage::white(4, 4)).unwrap().is_empty());
    }
}
