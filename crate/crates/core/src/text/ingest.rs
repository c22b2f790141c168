use std::path::{Path, PathBuf};
use std::time::Duration;

use scraper::{Html, Node};
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::lang::LangCode;

pub const FETCH_TIMEOUT: Duration = Duration::from_secs(30);
pub const MAX_REDIRECTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "kebab-case")]
pub enum SourceOrigin {
    InlineString,
    TextFile(PathBuf),
    Url(String),
}

/// Where to read the story from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceDescriptor {
    Inline(String),
    File(PathBuf),
    Url(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceText {
    pub origin: SourceOrigin,
    pub raw: String,
    pub language_hint: Option<LangCode>,
}

pub fn ingest(source: &SourceDescriptor, language_hint: Option<LangCode>) -> Result<SourceText, IngestError> {
    let (origin, raw) = match source {
        SourceDescriptor::Inline(s) => (SourceOrigin::InlineString, s.clone()),
        SourceDescriptor::File(path) => (SourceOrigin::TextFile(path.clone()), read_text_file(path)?),
        SourceDescriptor::Url(url) => (SourceOrigin::Url(url.clone()), fetch_visible_text(url)?),
    };
    if raw.trim().is_empty() {
        return Err(IngestError::EmptySource);
    }
    Ok(SourceText { origin, raw, language_hint })
}

fn read_text_file(path: &Path) -> Result<String, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::FileUnreadable(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| IngestError::FileUnreadable(format!("{}: not UTF-8: {e}", path.display())))?;
    Ok(text.strip_prefix('\u{feff}').map(str::to_string).unwrap_or(text))
}

fn fetch_visible_text(url: &str) -> Result<String, IngestError> {
    let parsed = reqwest::Url::parse(url).map_err(|e| IngestError::FetchFailed(format!("bad url {url}: {e}")))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(IngestError::FetchFailed(format!("unsupported scheme {}", parsed.scheme())));
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(FETCH_TIMEOUT)
        .redirect(reqwest::redirect::Policy::limited(MAX_REDIRECTS))
        .build()
        .map_err(|e| IngestError::FetchFailed(e.to_string()))?;
    let resp = client.get(parsed).send().map_err(|e| IngestError::FetchFailed(e.to_string()))?;
    let status = resp.status();
    if !status.is_success() {
        return Err(IngestError::FetchFailed(format!("HTTP {status}")));
    }
    let is_html = resp
        .headers()
        .get(reqwest::header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_none_or(|ct| ct.contains("html"));
    let body = resp.text().map_err(|e| IngestError::FetchFailed(e.to_string()))?;
    Ok(if is_html { visible_text(&body) } else { body })
}

const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "head", "svg", "iframe"];
const BLOCK: &[&str] = &[
    "p",
    "div",
    "br",
    "li",
    "ul",
    "ol",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "tr",
    "table",
    "section",
    "article",
    "header",
    "footer",
    "blockquote",
    "pre",
    "hr",
    "dd",
    "dt",
    "main",
    "nav",
    "aside",
    "title",
];

/// The human-visible text of an HTML document, one block element per line.
pub fn visible_text(html: &str) -> String {
    let doc = Html::parse_document(html);
    let mut out = String::new();
    walk(doc.tree.root(), &mut out);
    out.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn walk(node: ego_tree::NodeRef<'_, Node>, out: &mut String) {
    match node.value() {
        Node::Text(t) => out.push_str(t),
        Node::Element(e) => {
            let name = e.name();
            if SKIPPED.contains(&name) {
                return;
            }
            let block = BLOCK.contains(&name);
            if block {
                out.push('\n');
            }
            for child in node.children() {
                walk(child, out);
            }
            if block {
                out.push('\n');
            }
        }
        _ => {
            for child in node.children() {
                walk(child, out);
            }
        }
    }
}
