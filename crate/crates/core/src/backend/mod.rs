//! Image-generation backends: create an image from a prompt, or edit the
//! editable pixels of a base image.

mod mock;
mod remote;

use std::time::Duration;

pub use mock::{MockBackend, MOCK_BLOCK};
pub use remote::{OpenAiBackend, DEFAULT_IMAGE_ENDPOINT, DEFAULT_IMAGE_MODEL, OPENAI_KEY_ENV};

use crate::image_ops::RasterImage;
use crate::mask::Mask;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("edit mask has no editable pixels")]
    NothingEditable,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone)]
pub enum GenKind {
    Create,
    Edit { base: RasterImage, mask: Mask },
}

#[derive(Debug, Clone)]
pub struct GenRequest {
    pub kind: GenKind,
    pub prompt: String,
    pub size: (u32, u32),
    /// Only the mock uses this.
    pub request_seed: u64,
}

impl GenRequest {
    pub fn create(prompt: impl Into<String>, size: (u32, u32), request_seed: u64) -> Self {
        Self { kind: GenKind::Create, prompt: prompt.into(), size, request_seed }
    }

    pub fn edit(base: RasterImage, mask: Mask, prompt: impl Into<String>, request_seed: u64) -> Self {
        let size = base.dims();
        Self { kind: GenKind::Edit { base, mask }, prompt: prompt.into(), size, request_seed }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.prompt.trim().is_empty() {
            return Err(BackendError::InvalidRequest("prompt is empty".into()));
        }
        if self.size.0 == 0 || self.size.1 == 0 {
            return Err(BackendError::InvalidRequest(format!("bad size {:?}", self.size)));
        }
        if let GenKind::Edit { base, mask } = &self.kind {
            if base.dims() != self.size || mask.dims() != self.size {
                return Err(BackendError::InvalidRequest(format!(
                    "base {:?} and mask {:?} must match size {:?}",
                    base.dims(),
                    mask.dims(),
                    self.size
                )));
            }
            if mask.is_empty() {
                return Err(BackendError::NothingEditable);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BackendResult {
    pub image: RasterImage,
    pub provider_id: String,
    pub latency: Duration,
}

pub trait ImageBackend: Send + Sync {
    /// Serves a request that has already passed [`GenRequest::validate`].
    fn generate(&self, req: &GenRequest) -> Result<BackendResult, BackendError>;

    fn name(&self) -> String;

    fn create(&self, prompt: &str, size: (u32, u32), request_seed: u64) -> Result<BackendResult, BackendError> {
        self.run(&GenRequest::create(prompt, size, request_seed))
    }

    fn edit(
        &self,
        base: &RasterImage,
        mask: &Mask,
        prompt: &str,
        request_seed: u64,
    ) -> Result<BackendResult, BackendError> {
        self.run(&GenRequest::edit(base.clone(), mask.clone(), prompt, request_seed))
    }

    /// Validates, generates, and checks the size contract.
    fn run(&self, req: &GenRequest) -> Result<BackendResult, BackendError> {
        req.validate()?;
        let out = self.generate(req)?;
        if out.image.dims() != req.size {
            return Err(BackendError::Provider(format!("returned {:?}, requested {:?}", out.image.dims(), req.size)));
        }
        Ok(out)
    }
}

/// Copies every fixed pixel of `base` onto `generated`.
pub fn reimpose_fixed(generated: &mut RasterImage, base: &RasterImage, mask: &Mask) {
    for r in 0..base.height() {
        for c in 0..base.width() {
            if !mask.is_editable(r, c) {
                generated.set(r, c, base.get(r, c));
            }
        }
    }
}
