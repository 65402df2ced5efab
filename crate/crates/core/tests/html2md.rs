use nordcrawl_core::html2md::{html_to_markdown, parse_html, LineKind, MarkdownDocument, MAX_DEPTH};
use proptest::prelude::*;

fn has_tag_leak(s: &str) -> bool {
    s.as_bytes().windows(2).any(|w| w[0] == b'<' && w[1].is_ascii_alphabetic())
}

fn max_blank_run(doc: &MarkdownDocument) -> usize {
    let mut run = 0;
    let mut max = 0;
    for l in &doc.lines {
        run = if l.text.is_empty() { run + 1 } else { 0 };
        max = max.max(run);
    }
    max
}

fn heading_syntax(text: &str) -> bool {
    let n = text.bytes().take_while(|&b| b == b'#').count();
    (1..=6).contains(&n) && text.as_bytes().get(n) == Some(&b' ')
}

#[test]
fn blog_fixture_golden() {
    let html = include_str!("fixtures/blog.html");
    let expected = include_str!("fixtures/blog.md");
    let doc = html_to_markdown(html, "https://example.se/blog", "2011-12-14T22:10:00Z");
    assert_eq!(doc.to_text(), expected);
    assert!(!has_tag_leak(&doc.to_text()));
}

#[test]
fn deeply_nested_divs_terminate() {
    let mb = format!("{}x", "<div>".repeat((1 << 20) / 5 + 1));
    assert!(mb.len() >= 1 << 20);
    let dom = parse_html(&mb);
    assert!(dom.root.depth() <= MAX_DEPTH);
    assert_eq!(html_to_markdown(&mb, "u", "d").to_text(), "x");
}

fn fragment() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z0-9 #|.*&;<>/=\"'-]{0,12}",
        Just("<p>".to_string()),
        Just("</p>".to_string()),
        Just("<div>".to_string()),
        Just("</div>".to_string()),
        Just("<br>".to_string()),
        Just("<hr>".to_string()),
        Just("<b>".to_string()),
        Just("</b>".to_string()),
        Just("<em>".to_string()),
        Just("</em>".to_string()),
        Just("<ul><li>".to_string()),
        Just("<ol><li>".to_string()),
        Just("<li>".to_string()),
        Just("</ul>".to_string()),
        Just("<blockquote>".to_string()),
        Just("</blockquote>".to_string()),
        Just("<table><tr><td>".to_string()),
        Just("<td>".to_string()),
        Just("<tr>".to_string()),
        Just("</table>".to_string()),
        Just("<h1>".to_string()),
        Just("<h3>".to_string()),
        Just("</h3>".to_string()),
        Just("<pre>".to_string()),
        Just("</pre>".to_string()),
        Just("<script>".to_string()),
        Just("<a href='x'>".to_string()),
        Just("<img src=x>".to_string()),
        Just("&lt;b&gt;".to_string()),
        Just("\n\n\n".to_string()),
        Just("<!-- c -->".to_string()),
    ]
}

fn html_doc() -> impl Strategy<Value = String> {
    prop::collection::vec(fragment(), 0..60).prop_map(|v| v.concat())
}

fn escape(s: &str) -> String {
    html_escape::encode_text(s).into_owned()
}

proptest! {
    #[test]
    fn no_tag_leakage(html in html_doc()) {
        let doc = html_to_markdown(&html, "u", "d");
        for l in &doc.lines {
            prop_assert!(!has_tag_leak(&l.text), "{:?}", l.text);
            prop_assert!(!l.text.contains('\n'));
        }
    }

    #[test]
    fn kinds_agree_with_syntax(html in html_doc()) {
        let doc = html_to_markdown(&html, "u", "d");
        for l in &doc.lines {
            prop_assert_eq!(l.kind, LineKind::of(&l.text));
            prop_assert_eq!(l.kind.is_heading(), heading_syntax(&l.text));
        }
    }

    #[test]
    fn blank_runs_at_most_two(html in html_doc()) {
        let doc = html_to_markdown(&html, "u", "d");
        prop_assert!(max_blank_run(&doc) <= 2);
        prop_assert!(doc.lines.first().is_none_or(|l| !l.text.is_empty()));
    }

    #[test]
    fn deterministic(html in html_doc()) {
        prop_assert_eq!(html_to_markdown(&html, "u", "d"), html_to_markdown(&html, "u", "d"));
    }

    #[test]
    fn plain_paragraphs_are_idempotent(
        paras in prop::collection::vec("[a-zA-Z0-9#|.*&<>-]{1,8}( [a-zA-Z0-9#|.*&<>-]{1,8}){0,6}", 1..6)
    ) {
        let html: String = paras.iter().map(|p| format!("<p>{}</p>", escape(p))).collect();
        let first = html_to_markdown(&html, "u", "d");
        let again: String = first
            .lines
            .iter()
            .filter(|l| !l.text.is_empty())
            .map(|l| format!("<p>{}</p>", escape(&l.text)))
            .collect();
        let second = html_to_markdown(&again, "u", "d");
        prop_assert_eq!(first.to_text(), second.to_text());
        prop_assert_eq!(first.lines.iter().filter(|l| !l.text.is_empty()).count(), paras.len());
    }
}
