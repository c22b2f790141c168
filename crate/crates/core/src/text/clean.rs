//! Text cleaning: strip markup, entities, URLs, control and symbol
//! characters, and collapse horizontal whitespace while keeping newlines.

use std::sync::LazyLock;

use regex::Regex;
use unicode_general_category::{get_general_category, GeneralCategory};

use super::IngestError;

static BLOCKS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<!--.*?-->|<(script|style)\b[^>]*>.*?</(script|style)\s*>").unwrap());
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</?[A-Za-z!][^<>]*>").unwrap());
static ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(#[0-9]+|#[xX][0-9A-Fa-f]+|[A-Za-z][A-Za-z0-9]*);").unwrap());
static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:(?:https?|ftp)://|www\.)[^\s<>]*").unwrap());
static HSPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\S\n]+").unwrap());

/// True if `s` still contains something that looks like a tag, entity or URL.
pub fn has_markup_or_url(s: &str) -> bool {
    TAG.is_match(s) || ENTITY.is_match(s) || URL.is_match(s)
}

// Punctuation dropped as markup-ish "signs".
const DROPPED_PUNCT: &[char] = &['#', '*', '@', '\\', '/', '_', '|', '~', '^', '`', '[', ']', '{', '}'];

fn keep_char(ch: char) -> bool {
    use GeneralCategory::*;
    if ch == '\n' || ch == ' ' {
        return true;
    }
    match get_general_category(ch) {
        UppercaseLetter | LowercaseLetter | TitlecaseLetter | ModifierLetter | OtherLetter => true,
        NonspacingMark | SpacingMark | EnclosingMark => true,
        DecimalNumber | LetterNumber | OtherNumber => true,
        ConnectorPunctuation | DashPunctuation | OpenPunctuation | ClosePunctuation | InitialPunctuation
        | FinalPunctuation | OtherPunctuation => !DROPPED_PUNCT.contains(&ch),
        CurrencySymbol => true,
        SpaceSeparator => true,
        _ => false,
    }
}

fn single_pass(input: &str) -> String {
    let s = input.replace("\r\n", "\n").replace('\r', "\n");
    let s = BLOCKS.replace_all(&s, " ");
    let s = TAG.replace_all(&s, " ");
    let s = html_escape::decode_html_entities(&s);
    // escaped markup only becomes visible after decoding
    let s = BLOCKS.replace_all(&s, " ");
    let s = TAG.replace_all(&s, " ");
    let s = ENTITY.replace_all(&s, " ");
    let s = URL.replace_all(&s, " ");
    let s: String = s
        .chars()
        .map(|c| if c == '\t' || (c.is_whitespace() && c != '\n') { ' ' } else { c })
        .filter(|&c| keep_char(c))
        .collect();
    let s = HSPACE.replace_all(&s, " ");
    let lines: Vec<&str> = s.split('\n').map(str::trim).collect();
    lines.join("\n").trim_matches('\n').to_string()
}

/// Cleans raw story text. Newlines are kept because they carry line
/// structure; everything else is normalised to single spaces.
///
/// The pass is repeated until it stops changing the text, which makes the
/// function idempotent: every step only removes or shortens content.
pub fn clean(raw: &str) -> Result<String, IngestError> {
    let mut current = single_pass(raw);
    loop {
        let next = single_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    if current.trim().is_empty() {
        return Err(IngestError::EmptyAfterCleaning);
    }
    Ok(current)
}
