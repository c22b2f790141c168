use serde::{Deserialize, Serialize};

use super::IngestError;

/// Sentence terminators, including the Hebrew sof pasuq.
pub const SENTENCE_TERMINATORS: &[char] = &['.', '!', '?', '\u{05C3}'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Line,
    Sentence,
}

/// Splits cleaned text into lines or sentences. Blank units are dropped.
///
/// Sentences end after a run of terminators or at the end of a line; the
/// terminators stay with their sentence.
pub fn split_units(text: &str, by: UnitKind) -> Vec<String> {
    match by {
        UnitKind::Line => text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect(),
        UnitKind::Sentence => {
            let mut out = Vec::new();
            for line in text.lines() {
                let mut current = String::new();
                let mut chars = line.chars().peekable();
                while let Some(ch) = chars.next() {
                    current.push(ch);
                    if SENTENCE_TERMINATORS.contains(&ch)
                        && !chars.peek().is_some_and(|next| SENTENCE_TERMINATORS.contains(next))
                    {
                        push_unit(&mut out, &current);
                        current.clear();
                    }
                }
                push_unit(&mut out, &current);
            }
            out
        }
    }
}

fn push_unit(out: &mut Vec<String>, s: &str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ChunkMethod {
    ByLine,
    BySentence,
    SentenceWindow,
    LinePairStack,
}

impl ChunkMethod {
    /// Unit kind the method consumes.
    pub fn unit_kind(self) -> UnitKind {
        match self {
            ChunkMethod::ByLine | ChunkMethod::LinePairStack => UnitKind::Line,
            ChunkMethod::BySentence | ChunkMethod::SentenceWindow => UnitKind::Sentence,
        }
    }
}

pub const DEFAULT_WINDOW: usize = 2;
pub const DEFAULT_STRIDE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkingSpec {
    pub method: ChunkMethod,
    /// Sentences per chunk (`SentenceWindow` only).
    pub window: usize,
    /// Sentences to advance between chunks (`SentenceWindow` only).
    pub stride: usize,
}

impl Default for ChunkingSpec {
    fn default() -> Self {
        Self::new(ChunkMethod::ByLine)
    }
}

impl ChunkingSpec {
    pub fn new(method: ChunkMethod) -> Self {
        Self { method, window: DEFAULT_WINDOW, stride: DEFAULT_STRIDE }
    }

    pub fn window(window: usize, stride: usize) -> Self {
        Self { method: ChunkMethod::SentenceWindow, window, stride }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.method == ChunkMethod::SentenceWindow
            && (self.window == 0 || self.stride == 0 || self.stride > self.window)
        {
            return Err(IngestError::InvalidSpec(format!(
                "sentence window needs 1 <= stride <= window, got window={} stride={}",
                self.window, self.stride
            )));
        }
        Ok(())
    }
}

/// One unit of story text driving one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub text: String,
    /// Half-open range of source units `[start, end)`.
    pub span: (usize, usize),
}

/// Groups units into chunks according to `spec`.
pub fn chunk(units: &[String], spec: &ChunkingSpec) -> Result<Vec<Chunk>, IngestError> {
    spec.validate()?;
    if units.is_empty() {
        return Err(IngestError::NoUnits);
    }
    let n = units.len();
    let spans: Vec<(usize, usize)> = match spec.method {
        ChunkMethod::ByLine | ChunkMethod::BySentence => (0..n).map(|i| (i, i + 1)).collect(),
        ChunkMethod::LinePairStack if n == 1 => vec![(0, 1)],
        ChunkMethod::LinePairStack => (0..n - 1).map(|i| (i, i + 2)).collect(),
        ChunkMethod::SentenceWindow => {
            let mut spans = Vec::new();
            let mut start = 0;
            loop {
                let end = (start + spec.window).min(n);
                spans.push((start, end));
                if end == n {
                    break;
                }
                start += spec.stride;
            }
            spans
        }
    };
    let sep = if spec.method == ChunkMethod::LinePairStack { "\n" } else { " " };
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(index, (a, b))| Chunk { index, text: units[a..b].join(sep), span: (a, b) })
        .collect())
}
