//! Turn a story, in any language, into a sequence of frames that keep the
//! same setting and the same main object from one frame to the next.
//!
//! The pipeline is: [`text`] (ingest, clean, chunk) → [`translate`] →
//! [`story`] (masks from [`mask`], generation through a [`backend`],
//! post-processing from [`image_ops`] and [`detect`]) → [`output`].
//! Everything runs offline against the mock translator and mock backend.

pub mod backend;
pub mod cli;
pub mod detect;
pub mod http;
pub mod image_ops;
pub mod lang;
pub mod mask;
pub mod output;
pub mod seed;
pub mod story;
pub mod text;
pub mod translate;

pub use backend::{BackendError, GenRequest, ImageBackend, MockBackend, OpenAiBackend};
pub use detect::{FixtureDetector, NullDetector, RemoteOcrDetector, TextDetector};
pub use image_ops::{ObjectRegion, RasterImage, TextBox};
pub use lang::{LangCode, SourceLang};
pub use mask::{Mask, MaskParams, ProtectedRegion};
pub use output::{write_run, Manifest, RunRequest};
pub use story::{run_story, Services, StoryConfig, StoryError, StoryMode, StoryOutput};
pub use text::{prepare_chunks, Chunk, ChunkMethod, ChunkingSpec};
pub use translate::{MockTranslationClient, RemoteTranslationClient, Translator};
