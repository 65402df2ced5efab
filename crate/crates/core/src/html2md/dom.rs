//! Tolerant HTML tree builder.
//!
//! Never fails. Handles the common implied end tags (`p`, `li`, table parts,
//! `head`), treats unknown tags as plain containers and throws away the
//! subtrees that carry no page text.

/// Maximum tree depth, root included. Start tags beyond it are ignored and
/// their content goes to the deepest open element.
pub const MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub children: Vec<Node>,
}

impl Element {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            children: Vec::new(),
        }
    }

    fn push_text(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        if let Some(Node::Text(prev)) = self.children.last_mut() {
            prev.push_str(text);
        } else {
            self.children.push(Node::Text(text.to_string()));
        }
    }

    /// Depth of the subtree rooted here (a leaf element has depth 1).
    pub fn depth(&self) -> usize {
        // iterative so that a deep tree cannot overflow the stack here
        let mut max = 0;
        let mut stack = vec![(self, 1usize)];
        while let Some((el, d)) = stack.pop() {
            max = max.max(d);
            for c in &el.children {
                if let Node::Element(e) = c {
                    stack.push((e, d + 1));
                }
            }
        }
        max
    }

    /// Concatenated text of all descendant text nodes.
    pub fn text(&self) -> String {
        let mut out = String::new();
        collect_text(self, &mut out);
        out
    }
}

fn collect_text(el: &Element, out: &mut String) {
    for c in &el.children {
        match c {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => collect_text(e, out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dom {
    pub root: Element,
}

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Content is skipped up to the matching end tag and never parsed.
const RAW_DROPPED: &[&str] = &["script", "style", "iframe", "noscript", "xmp", "noembed", "noframes"];

/// Parsed normally but discarded once closed.
const DROPPED: &[&str] = &["head", "template"];

const HEAD_CONTENT: &[&str] = &["title", "meta", "link", "base", "style", "script", "noscript", "template"];

const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "center", "dd", "details", "dialog", "dir", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "header", "hgroup", "hr", "li", "main", "menu", "nav", "ol", "p", "pre", "section",
    "summary", "table", "ul",
];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

struct Builder {
    stack: Vec<Element>,
    /// How many elements of each name are on the stack.
    open: std::collections::HashMap<String, usize>,
}

impl Builder {
    fn current(&mut self) -> &mut Element {
        self.stack.last_mut().expect("root is never popped")
    }

    fn open_index(&self, name: &str, stop: &[&str]) -> Option<usize> {
        if self.open.get(name).copied().unwrap_or(0) == 0 {
            return None;
        }
        for i in (1..self.stack.len()).rev() {
            let n = self.stack[i].name.as_str();
            if n == name {
                return Some(i);
            }
            if stop.contains(&n) {
                return None;
            }
        }
        None
    }

    fn pop_to(&mut self, index: usize) {
        while self.stack.len() > index {
            let el = self.stack.pop().expect("len > index >= 1");
            if let Some(n) = self.open.get_mut(&el.name) {
                *n -= 1;
            }
            if !DROPPED.contains(&el.name.as_str()) {
                self.current().children.push(Node::Element(el));
            }
        }
    }

    fn close_if_open(&mut self, name: &str, stop: &[&str]) {
        if let Some(i) = self.open_index(name, stop) {
            self.pop_to(i);
        }
    }

    fn start(&mut self, name: &str, self_closing: bool) {
        if self.stack.last().is_some_and(|e| e.name == "head") && !HEAD_CONTENT.contains(&name) {
            let i = self.stack.len() - 1;
            self.pop_to(i);
        }
        if matches!(name, "html" | "body") {
            return;
        }
        if CLOSES_P.contains(&name) {
            self.close_if_open("p", &["table", "td", "th", "button", "blockquote"]);
        }
        match name {
            _ if HEADINGS.contains(&name) => {
                if self.stack.last().is_some_and(|e| HEADINGS.contains(&e.name.as_str())) {
                    let i = self.stack.len() - 1;
                    self.pop_to(i);
                }
            }
            "li" => self.close_if_open("li", &["ul", "ol", "menu", "table", "td", "th"]),
            "dt" | "dd" => {
                self.close_if_open("dt", &["dl", "table"]);
                self.close_if_open("dd", &["dl", "table"]);
            }
            "tr" => {
                for n in ["td", "th", "tr"] {
                    self.close_if_open(n, &["table", "thead", "tbody", "tfoot"]);
                }
            }
            "td" | "th" => {
                for n in ["td", "th"] {
                    self.close_if_open(n, &["tr", "table"]);
                }
            }
            "thead" | "tbody" | "tfoot" => {
                for n in ["td", "th", "tr", "thead", "tbody", "tfoot"] {
                    self.close_if_open(n, &["table"]);
                }
            }
            _ => {}
        }
        if VOID.contains(&name) || self_closing {
            self.current().children.push(Node::Element(Element::new(name)));
        } else if self.stack.len() < MAX_DEPTH {
            *self.open.entry(name.to_string()).or_default() += 1;
            self.stack.push(Element::new(name));
        }
    }

    fn end(&mut self, name: &str) {
        if let Some(i) = self.open_index(name, &[]) {
            self.pop_to(i);
        }
    }
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'-' || b == b':' || b == b'_'
}

/// Finds `needle` (ASCII, lowercase) case-insensitively at or after `from`.
fn find_ci(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || hay.len() < needle.len() {
        return None;
    }
    (from..=hay.len() - needle.len()).find(|&i| hay[i..i + needle.len()].eq_ignore_ascii_case(needle))
}

/// Skips attributes; returns the index just past `>` and whether the tag was `/>`.
fn skip_attributes(b: &[u8], mut i: usize) -> Option<(usize, bool)> {
    let at = |i: usize| b.get(i).copied();
    loop {
        while at(i)?.is_ascii_whitespace() {
            i += 1;
        }
        match at(i)? {
            b'>' => return Some((i + 1, false)),
            b'/' if at(i + 1) == Some(b'>') => return Some((i + 2, true)),
            _ => {}
        }
        let name_start = i;
        while let Some(c) = at(i) {
            if c.is_ascii_whitespace() || c == b'>' || (c == b'=' && i > name_start) {
                break;
            }
            if c == b'/' && at(i + 1) == Some(b'>') {
                break;
            }
            i += 1;
        }
        while at(i)?.is_ascii_whitespace() {
            i += 1;
        }
        if at(i)? != b'=' {
            continue;
        }
        i += 1;
        while at(i)?.is_ascii_whitespace() {
            i += 1;
        }
        match at(i)? {
            q @ (b'"' | b'\'') => {
                i += 1 + b[i + 1..].iter().position(|&c| c == q)? + 1;
            }
            _ => {
                while at(i).is_some_and(|c| !c.is_ascii_whitespace() && c != b'>') {
                    i += 1;
                }
            }
        }
    }
}

/// Parses HTML into a tree. Total: any input yields some tree.
pub fn parse_html(html: &str) -> Dom {
    let b = html.as_bytes();
    let mut builder = Builder {
        stack: vec![Element::new("#root")],
        open: Default::default(),
    };
    let mut i = 0;
    let mut text_start = 0;
    let flush = |builder: &mut Builder, from: usize, to: usize| {
        if from < to {
            let decoded = html_escape::decode_html_entities(&html[from..to]);
            builder.current().push_text(&decoded);
        }
    };
    while i < b.len() {
        if b[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &b[i..];
        if rest.starts_with(b"<!--") {
            flush(&mut builder, text_start, i);
            i = find_ci(b, i + 4, b"-->").map_or(b.len(), |e| e + 3);
            text_start = i;
        } else if rest.len() > 1 && (rest[1] == b'!' || rest[1] == b'?') {
            flush(&mut builder, text_start, i);
            i = b[i..].iter().position(|&c| c == b'>').map_or(b.len(), |e| i + e + 1);
            text_start = i;
        } else if rest.len() > 2 && rest[1] == b'/' && rest[2].is_ascii_alphabetic() {
            flush(&mut builder, text_start, i);
            let name_end = (i + 2..b.len()).find(|&k| !is_name_char(b[k])).unwrap_or(b.len());
            let name = html[i + 2..name_end].to_ascii_lowercase();
            i = b[name_end..].iter().position(|&c| c == b'>').map_or(b.len(), |e| name_end + e + 1);
            text_start = i;
            builder.end(&name);
        } else if rest.len() > 1 && rest[1] == b'/' {
            // bogus end tag such as "</ >"
            flush(&mut builder, text_start, i);
            i = b[i..].iter().position(|&c| c == b'>').map_or(b.len(), |e| i + e + 1);
            text_start = i;
        } else if rest.len() > 1 && rest[1].is_ascii_alphabetic() {
            flush(&mut builder, text_start, i);
            let name_end = (i + 1..b.len()).find(|&k| !is_name_char(b[k])).unwrap_or(b.len());
            let name = html[i + 1..name_end].to_ascii_lowercase();
            let Some((after, self_closing)) = skip_attributes(b, name_end) else {
                // unterminated tag swallows the rest of the input
                i = b.len();
                text_start = i;
                break;
            };
            i = after;
            text_start = i;
            if RAW_DROPPED.contains(&name.as_str()) {
                if !self_closing {
                    let close = format!("</{name}");
                    i = match find_ci(b, i, close.as_bytes()) {
                        Some(e) => b[e..].iter().position(|&c| c == b'>').map_or(b.len(), |k| e + k + 1),
                        None => b.len(),
                    };
                    text_start = i;
                }
                continue;
            }
            builder.start(&name, self_closing && !VOID.contains(&name.as_str()));
        } else {
            // a bare "<" is text
            i += 1;
        }
    }
    flush(&mut builder, text_start, b.len());
    builder.pop_to(1);
    Dom {
        root: builder.stack.pop().expect("root"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(n: &Node) -> &Element {
        match n {
            Node::Element(e) => e,
            Node::Text(t) => panic!("expected element, got text {t:?}"),
        }
    }

    #[test]
    fn unclosed_paragraph() {
        let dom = parse_html("<p>hi");
        assert_eq!(dom.root.children.len(), 1);
        let p = el(&dom.root.children[0]);
        assert_eq!(p.name, "p");
        assert_eq!(p.text(), "hi");
    }

    #[test]
    fn script_dropped() {
        let dom = parse_html("<script>if (a<b) x()</script><p>a</p>");
        assert_eq!(dom.root.children.len(), 1);
        assert_eq!(el(&dom.root.children[0]).text(), "a");
    }

    #[test]
    fn head_dropped_without_end_tag() {
        let dom = parse_html("<html><head><title>T</title><meta charset=utf-8><p>body text");
        assert_eq!(dom.root.text(), "body text");
    }

    #[test]
    fn comments_and_doctype_dropped() {
        let dom = parse_html("<!DOCTYPE html><!-- <p>no</p> --><p>yes</p><!-- open");
        assert_eq!(dom.root.text(), "yes");
    }

    #[test]
    fn sibling_paragraphs_and_list_items_auto_close() {
        let dom = parse_html("<p>a<p>b<ul><li>x<li>y</ul>");
        let names: Vec<_> = dom.root.children.iter().map(|n| el(n).name.as_str()).collect();
        assert_eq!(names, ["p", "p", "ul"]);
        assert_eq!(el(&dom.root.children[2]).children.len(), 2);
    }

    #[test]
    fn quoted_gt_in_attribute() {
        let dom = parse_html(r#"<a title="a > b" href='x>y'>link</a>"#);
        assert_eq!(dom.root.text(), "link");
    }

    #[test]
    fn entities_decoded() {
        assert_eq!(parse_html("<p>&aring;&amp;&#229;&nbsp;</p>").root.text(), "å&å\u{a0}");
    }

    #[test]
    fn bare_less_than_is_text() {
        assert_eq!(parse_html("1 < 2 <= 3").root.text(), "1 < 2 <= 3");
    }

    #[test]
    fn depth_is_capped() {
        let html = "<div>".repeat(5000) + "deep";
        let dom = parse_html(&html);
        assert!(dom.root.depth() <= MAX_DEPTH);
        assert_eq!(dom.root.text(), "deep");
    }

    #[test]
    fn unknown_tags_are_containers() {
        assert_eq!(parse_html("<foo-bar>x<baz>y</baz></foo-bar>").root.text(), "xy");
    }

    #[test]
    fn stray_end_tags_ignored() {
        assert_eq!(parse_html("</div>a</p>b").root.text(), "ab");
    }
}
