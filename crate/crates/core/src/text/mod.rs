//! Story text acquisition, cleaning and chunking.

mod chunk;
mod clean;
mod ingest;

pub use chunk::{
    chunk, split_units, Chunk, ChunkMethod, ChunkingSpec, UnitKind, DEFAULT_STRIDE, DEFAULT_WINDOW,
    SENTENCE_TERMINATORS,
};
pub use clean::{clean, has_markup_or_url};
pub use ingest::{ingest, visible_text, SourceDescriptor, SourceOrigin, SourceText, FETCH_TIMEOUT, MAX_REDIRECTS};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read text file: {0}")]
    FileUnreadable(String),
    #[error("fetch failed: {0}")]
    FetchFailed(String),
    #[error("source contains no text")]
    EmptySource,
    #[error("nothing left after cleaning")]
    EmptyAfterCleaning,
    #[error("invalid chunking spec: {0}")]
    InvalidSpec(String),
    #[error("no units to chunk")]
    NoUnits,
}

/// Clean → split → chunk in one step.
pub fn prepare_chunks(raw: &str, spec: &ChunkingSpec) -> Result<Vec<Chunk>, IngestError> {
    let cleaned = clean(raw)?;
    let units = split_units(&cleaned, spec.method.unit_kind());
    chunk(&units, spec)
}
