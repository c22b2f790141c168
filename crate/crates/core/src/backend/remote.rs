use std::time::{Duration, Instant};

use base64::Engine;
use reqwest::blocking::multipart::{Form, Part};
use serde::Deserialize;
use serde_json::json;

use super::{reimpose_fixed, BackendError, BackendResult, GenKind, GenRequest, ImageBackend};
use crate::http::{with_retries, Failure, InFlight, RetryPolicy};
use crate::image_ops::RasterImage;
use crate::mask::to_edit_alpha;

pub const OPENAI_KEY_ENV: &str = "OPENAI_API_KEY";
pub const DEFAULT_IMAGE_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_IMAGE_MODEL: &str = "dall-e-2";
const TIMEOUT: Duration = Duration::from_secs(60);

/// Client for an OpenAI-style images API (`/images/generations` and
/// `/images/edits`). Fixed pixels of an edit are copied back from the base
/// image, whatever the provider returns for them.
pub struct OpenAiBackend {
    endpoint: String,
    api_key: String,
    model: String,
    policy: RetryPolicy,
    gate: InFlight,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ImagesResponse {
    #[serde(default)]
    created: Option<u64>,
    data: Vec<ImageDatum>,
}

#[derive(Deserialize)]
struct ImageDatum {
    b64_json: Option<String>,
    url: Option<String>,
}

impl OpenAiBackend {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Result<Self, BackendError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(TIMEOUT)
            .build()
            .map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: DEFAULT_IMAGE_MODEL.into(),
            policy: RetryPolicy::default(),
            gate: InFlight::new(2),
            http,
        })
    }

    /// Reads the key from `OPENAI_API_KEY`.
    pub fn from_env(endpoint: Option<&str>) -> Result<Self, BackendError> {
        let key =
            std::env::var(OPENAI_KEY_ENV).map_err(|_| BackendError::Auth(format!("{OPENAI_KEY_ENV} is not set")))?;
        Self::new(endpoint.unwrap_or(DEFAULT_IMAGE_ENDPOINT), key)
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    pub fn with_retry_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.gate = InFlight::new(limit);
        self
    }

    fn size_str(size: (u32, u32)) -> String {
        format!("{}x{}", size.0, size.1)
    }

    fn map_failure(f: Failure) -> BackendError {
        match f {
            Failure::Auth(m) => BackendError::Auth(m),
            Failure::RateLimited(m) => BackendError::RateLimited(m),
            Failure::Server(m) | Failure::Client(m) => BackendError::Provider(m),
            Failure::Network(m) => BackendError::Network(m),
        }
    }

    fn decode(&self, resp: reqwest::blocking::Response) -> Result<(RasterImage, Option<u64>), BackendError> {
        let parsed: ImagesResponse = resp.json().map_err(|e| BackendError::Provider(format!("bad response: {e}")))?;
        let datum = parsed.data.into_iter().next().ok_or_else(|| BackendError::Provider("no image returned".into()))?;
        let bytes = match (datum.b64_json, datum.url) {
            (Some(b64), _) => base64::engine::general_purpose::STANDARD
                .decode(b64.as_bytes())
                .map_err(|e| BackendError::Provider(format!("bad base64: {e}")))?,
            (None, Some(url)) => {
                let resp = with_retries(&self.policy, || self.http.get(&url).send()).map_err(Self::map_failure)?;
                resp.bytes().map_err(|e| BackendError::Network(e.to_string()))?.to_vec()
            }
            (None, None) => return Err(BackendError::Provider("image has neither data nor url".into())),
        };
        let image = RasterImage::decode_png(&bytes).map_err(|e| BackendError::Provider(format!("bad image: {e}")))?;
        Ok((image, parsed.created))
    }
}

impl ImageBackend for OpenAiBackend {
    fn generate(&self, req: &GenRequest) -> Result<BackendResult, BackendError> {
        let _permit = self.gate.acquire();
        let started = Instant::now();
        let auth = format!("Bearer {}", self.api_key);
        let size = Self::size_str(req.size);
        let resp = match &req.kind {
            GenKind::Create => {
                let body = json!({
                    "model": self.model,
                    "prompt": req.prompt,
                    "n": 1,
                    "size": size,
                    "response_format": "b64_json",
                });
                let url = format!("{}/images/generations", self.endpoint);
                with_retries(&self.policy, || self.http.post(&url).header("Authorization", &auth).json(&body).send())
            }
            GenKind::Edit { base, mask } => {
                let png = to_edit_alpha(mask, base)
                    .map_err(|e| BackendError::InvalidRequest(e.to_string()))?
                    .encode_png()
                    .map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
                let url = format!("{}/images/edits", self.endpoint);
                with_retries(&self.policy, || {
                    let image = Part::bytes(png.clone()).file_name("image.png").mime_str("image/png")?;
                    let form = Form::new()
                        .part("image", image)
                        .text("prompt", req.prompt.clone())
                        .text("model", self.model.clone())
                        .text("n", "1")
                        .text("size", size.clone())
                        .text("response_format", "b64_json");
                    self.http.post(&url).header("Authorization", &auth).multipart(form).send()
                })
            }
        }
        .map_err(Self::map_failure)?;

        let (mut image, created) = self.decode(resp)?;
        if image.dims() != req.size {
            return Err(BackendError::Provider(format!("returned {:?}, requested {:?}", image.dims(), req.size)));
        }
        if let GenKind::Edit { base, mask } = &req.kind {
            reimpose_fixed(&mut image, base, mask);
        }
        Ok(BackendResult {
            image,
            provider_id: format!("{}:{}", self.model, created.unwrap_or_default()),
            latency: started.elapsed(),
        })
    }

    fn name(&self) -> String {
        format!("openai:{}", self.model)
    }
}
