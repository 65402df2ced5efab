//! HTML to Markdown conversion.

pub mod dom;
mod render;

use serde::{Deserialize, Serialize};

pub use dom::{parse_html, Dom, Element, Node, MAX_DEPTH};
pub use render::to_markdown;

/// Syntactic class of a Markdown line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Heading(u8),
    ListItem,
    TableRow,
    Blank,
    ParagraphText,
}

impl LineKind {
    /// Classifies a line from its text alone.
    pub fn of(text: &str) -> LineKind {
        if text.is_empty() {
            return LineKind::Blank;
        }
        let hashes = text.bytes().take_while(|&b| b == b'#').count();
        if (1..=6).contains(&hashes) && text.as_bytes().get(hashes) == Some(&b' ') {
            return LineKind::Heading(hashes as u8);
        }
        let body = text.trim_start_matches(' ');
        if body.starts_with("- ") {
            return LineKind::ListItem;
        }
        let digits = body.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 && body[digits..].starts_with(". ") {
            return LineKind::ListItem;
        }
        if text.starts_with('|') {
            return LineKind::TableRow;
        }
        LineKind::ParagraphText
    }

    pub fn is_heading(self) -> bool {
        matches!(self, LineKind::Heading(_))
    }

    /// Stable index for one-hot encodings: heading, list, table, blank, paragraph.
    pub fn slot(self) -> usize {
        match self {
            LineKind::Heading(_) => 0,
            LineKind::ListItem => 1,
            LineKind::TableRow => 2,
            LineKind::Blank => 3,
            LineKind::ParagraphText => 4,
        }
    }
}

/// Backslash-escapes a line of running text that would otherwise read as a
/// heading, list item or table row.
pub fn escape_paragraph(text: &str) -> String {
    if LineKind::of(text) == LineKind::ParagraphText || text.is_empty() {
        return text.to_string();
    }
    let lead = text.len() - text.trim_start_matches(' ').len();
    let body = &text[lead..];
    let digits = body.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        // "12. x" -> "12\. x"
        return format!("{}{}\\{}", &text[..lead], &body[..digits], &body[digits..]);
    }
    format!("{}\\{}", &text[..lead], body)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkdownLine {
    pub text: String,
    pub kind: LineKind,
}

impl MarkdownLine {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let kind = LineKind::of(&text);
        Self { text, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkdownDocument {
    pub url: String,
    pub warc_date: String,
    pub lines: Vec<MarkdownLine>,
}

impl MarkdownDocument {
    /// Splits Markdown text into classified lines, collapsing blank-line runs.
    pub fn from_text(url: impl Into<String>, warc_date: impl Into<String>, text: &str) -> Self {
        let lines = collapse_blank_runs(text.split('\n').map(|l| l.trim_end_matches('\r')))
            .into_iter()
            .map(MarkdownLine::new)
            .collect();
        Self {
            url: url.into(),
            warc_date: warc_date.into(),
            lines,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.lines.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&l.text);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// Limits runs of blank lines to two and trims blank lines at both ends.
pub fn collapse_blank_runs<'a>(lines: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut run = 0;
    for line in lines {
        if line.trim().is_empty() {
            run += 1;
            if run <= 2 && !out.is_empty() {
                out.push(String::new());
            }
        } else {
            run = 0;
            out.push(line.to_string());
        }
    }
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out
}

/// Parses and renders in one step.
pub fn html_to_markdown(html: &str, url: &str, warc_date: &str) -> MarkdownDocument {
    to_markdown(&parse_html(html), url, warc_date)
}
