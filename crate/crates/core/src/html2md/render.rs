//! Markdown rendering of a parsed tree.

use super::dom::{Dom, Element, Node};
use super::{collapse_blank_runs, escape_paragraph, MarkdownDocument, MarkdownLine};

/// Subtrees rendered as nothing.
const MEDIA: &[&str] = &[
    "img", "picture", "svg", "video", "audio", "canvas", "object", "embed", "select", "datalist",
    "head", "template", "script", "style",
];

const BLOCKS: &[&str] = &[
    "address", "article", "aside", "body", "caption", "center", "dd", "details", "dialog", "dir",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "header", "hgroup",
    "html", "legend", "main", "menu", "nav", "p", "section", "summary", "td", "th", "title", "tr",
];

/// Elements that break inline flow.
fn is_block(name: &str) -> bool {
    BLOCKS.contains(&name)
        || matches!(
            name,
            "h1" | "h2" | "h3" | "h4" | "h5" | "h6" | "ul" | "ol" | "li" | "blockquote" | "pre" | "hr" | "br" | "table"
        )
}

fn heading_level(name: &str) -> Option<usize> {
    match name.as_bytes() {
        [b'h', d @ b'1'..=b'6'] => Some((d - b'0') as usize),
        _ => None,
    }
}

fn is_html_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c')
}

/// Appends text with HTML whitespace collapsing.
fn push_collapsed(out: &mut String, text: &str) {
    for c in text.chars() {
        if is_html_space(c) {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
        } else {
            out.push(c);
        }
    }
}

fn has_block_descendant(el: &Element) -> bool {
    el.children.iter().any(|c| match c {
        Node::Element(e) => !MEDIA.contains(&e.name.as_str()) && (is_block(&e.name) || has_block_descendant(e)),
        Node::Text(_) => false,
    })
}

/// Wraps collapsed inline content in `marker`, keeping outer whitespace outside.
fn wrap(inner: &str, marker: &str, out: &mut String) {
    let trimmed = inner.trim_matches(' ');
    if trimmed.is_empty() {
        push_collapsed(out, inner);
        return;
    }
    if inner.starts_with(' ') {
        push_collapsed(out, " ");
    }
    out.push_str(marker);
    out.push_str(trimmed);
    out.push_str(marker);
    if inner.ends_with(' ') {
        out.push(' ');
    }
}

fn emphasis_marker(name: &str) -> Option<&'static str> {
    match name {
        "strong" | "b" => Some("**"),
        "em" | "i" => Some("*"),
        _ => None,
    }
}

/// Single-line rendering: block boundaries become spaces.
fn inline_into(el: &Element, out: &mut String) {
    for c in &el.children {
        match c {
            Node::Text(t) => push_collapsed(out, t),
            Node::Element(e) if MEDIA.contains(&e.name.as_str()) => {}
            Node::Element(e) => {
                if let Some(m) = emphasis_marker(&e.name) {
                    let mut inner = String::new();
                    inline_into(e, &mut inner);
                    wrap(&inner, m, out);
                } else {
                    let block = is_block(&e.name);
                    if block {
                        push_collapsed(out, " ");
                    }
                    inline_into(e, out);
                    if block {
                        push_collapsed(out, " ");
                    }
                }
            }
        }
    }
}

fn inline(el: &Element) -> String {
    let mut s = String::new();
    inline_into(el, &mut s);
    s.trim_matches(' ').to_string()
}

/// Text of a `pre` subtree with line breaks kept.
fn raw_text(el: &Element, out: &mut String) {
    for c in &el.children {
        match c {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) if e.name == "br" => out.push('\n'),
            Node::Element(e) if MEDIA.contains(&e.name.as_str()) => {}
            Node::Element(e) => raw_text(e, out),
        }
    }
}

/// Replaces `<` before an ASCII letter so no tag-like text reaches the output.
fn defang(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '<' && chars.peek().is_some_and(char::is_ascii_alphabetic) {
            out.push_str("&lt;");
        } else {
            out.push(c);
        }
    }
    out
}

struct ListCtx {
    ordered: bool,
    next: usize,
}

#[derive(Default)]
struct Writer {
    lines: Vec<String>,
    cur: String,
    pending_blank: bool,
    quote: usize,
    /// Inside list items and quotes block breaks become plain line breaks.
    tight: usize,
    marker: Option<String>,
    indent: String,
    lists: Vec<ListCtx>,
}

impl Writer {
    fn emit(&mut self, content: &str, plain: bool) {
        let content = defang(content.trim_end());
        if content.trim().is_empty() {
            return;
        }
        if self.pending_blank && !self.lines.is_empty() {
            self.lines.push(String::new());
        }
        self.pending_blank = false;
        let mut line = "> ".repeat(self.quote);
        if let Some(m) = self.marker.take() {
            line.push_str(&m);
            line.push_str(content.trim_start());
        } else {
            line.push_str(&self.indent);
            if plain && self.quote == 0 {
                line.push_str(&escape_paragraph(&content));
            } else {
                line.push_str(&content);
            }
        }
        self.lines.push(line);
    }

    fn finish_line(&mut self) {
        let cur = std::mem::take(&mut self.cur);
        self.emit(&cur, true);
    }

    fn block_break(&mut self) {
        self.finish_line();
        if self.tight == 0 {
            self.pending_blank = true;
        }
    }

    fn hard_break(&mut self) {
        if self.cur.trim().is_empty() {
            self.cur.clear();
            if self.tight == 0 && !self.lines.is_empty() {
                self.pending_blank = false;
                self.lines.push(String::new());
            }
        } else {
            self.finish_line();
        }
    }

    fn text(&mut self, t: &str) {
        push_collapsed(&mut self.cur, t);
        if self.cur == " " {
            self.cur.clear();
        }
    }

    fn children(&mut self, el: &Element) {
        for c in &el.children {
            match c {
                Node::Text(t) => self.text(t),
                Node::Element(e) => self.element(e),
            }
        }
    }

    fn element(&mut self, el: &Element) {
        let name = el.name.as_str();
        if MEDIA.contains(&name) {
            return;
        }
        if let Some(level) = heading_level(name) {
            self.block_break();
            let text = inline(el);
            if !text.is_empty() {
                self.emit(&format!("{} {}", "#".repeat(level), text), false);
            }
            self.block_break();
            return;
        }
        if let Some(m) = emphasis_marker(name) {
            if has_block_descendant(el) {
                self.children(el);
            } else {
                let mut inner = String::new();
                inline_into(el, &mut inner);
                wrap(&inner, m, &mut self.cur);
            }
            return;
        }
        match name {
            "br" => self.hard_break(),
            "hr" => {
                self.block_break();
                self.emit("———", false);
                self.block_break();
            }
            "ul" | "ol" | "menu" | "dir" => {
                self.block_break();
                self.tight += 1;
                self.lists.push(ListCtx {
                    ordered: name == "ol",
                    next: 1,
                });
                self.children(el);
                self.finish_line();
                self.lists.pop();
                self.tight -= 1;
                self.block_break();
            }
            "li" => self.list_item(el),
            "blockquote" => {
                self.block_break();
                self.quote += 1;
                self.tight += 1;
                self.children(el);
                self.finish_line();
                self.tight -= 1;
                self.quote -= 1;
                self.block_break();
            }
            "pre" => {
                self.block_break();
                let mut raw = String::new();
                raw_text(el, &mut raw);
                let lines: Vec<&str> = raw.split('\n').map(str::trim_end).collect();
                let first = lines.iter().position(|l| !l.is_empty());
                let last = lines.iter().rposition(|l| !l.is_empty());
                if let (Some(a), Some(b)) = (first, last) {
                    for l in &lines[a..=b] {
                        if l.is_empty() {
                            self.hard_break();
                        } else {
                            self.emit(l, true);
                        }
                    }
                }
                self.block_break();
            }
            "table" => self.table(el),
            _ if is_block(name) => {
                self.block_break();
                self.children(el);
                self.block_break();
            }
            _ => self.children(el),
        }
    }

    fn list_item(&mut self, el: &Element) {
        self.finish_line();
        let depth = self.lists.len().saturating_sub(1);
        let marker = match self.lists.last_mut() {
            Some(ctx) if ctx.ordered => {
                ctx.next += 1;
                format!("{}. ", ctx.next - 1)
            }
            _ => "- ".to_string(),
        };
        let pad = "  ".repeat(depth);
        let indent = format!("{pad}{}", " ".repeat(marker.len()));
        let saved = std::mem::replace(&mut self.indent, indent);
        self.marker = Some(pad + &marker);
        self.tight += 1;
        self.children(el);
        self.finish_line();
        self.tight -= 1;
        self.marker = None;
        self.indent = saved;
    }

    fn table(&mut self, el: &Element) {
        self.block_break();
        let mut rows = Vec::new();
        let mut captions = Vec::new();
        collect_rows(el, &mut rows, &mut captions);
        for c in captions {
            self.emit(&c, true);
        }
        rows.retain(|r| !r.is_empty());
        let consistent = rows.iter().all(|r| r.len() == rows[0].len());
        for (i, row) in rows.iter().enumerate() {
            self.emit(&format!("| {} |", row.join(" | ")), false);
            if i == 0 && consistent {
                self.emit(&format!("|{}", " --- |".repeat(row.len())), false);
            }
        }
        self.block_break();
    }
}

fn collect_rows(el: &Element, rows: &mut Vec<Vec<String>>, captions: &mut Vec<String>) {
    for c in &el.children {
        let Node::Element(e) = c else { continue };
        match e.name.as_str() {
            "tr" => rows.push(
                e.children
                    .iter()
                    .filter_map(|c| match c {
                        Node::Element(cell) if cell.name == "td" || cell.name == "th" => {
                            Some(inline(cell).replace('|', "\\|"))
                        }
                        _ => None,
                    })
                    .collect(),
            ),
            "caption" => {
                let t = inline(e);
                if !t.is_empty() {
                    captions.push(t);
                }
            }
            "table" => {}
            _ => collect_rows(e, rows, captions),
        }
    }
}

/// Renders a parsed tree as Markdown.
pub fn to_markdown(dom: &Dom, url: &str, warc_date: &str) -> MarkdownDocument {
    let mut w = Writer::default();
    w.children(&dom.root);
    w.finish_line();
    let lines = collapse_blank_runs(w.lines.iter().map(String::as_str))
        .into_iter()
        .map(MarkdownLine::new)
        .collect();
    MarkdownDocument {
        url: url.to_string(),
        warc_date: warc_date.to_string(),
        lines,
    }
}
