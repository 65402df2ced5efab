//! Body decoding: HTTP `Content-Type` charset, then a `<meta>` charset within the
//! first 1024 bytes, then UTF-8. Undecodable bytes become U+FFFD.

use encoding_rs::{Encoding, UTF_8};
use regex::bytes::Regex;
use std::sync::OnceLock;

/// How far into the body `<meta charset>` is looked for.
pub const META_SNIFF_BYTES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub text: String,
    pub encoding: &'static str,
    pub replacements: usize,
}

/// `charset` parameter of a `Content-Type` value, if any.
pub fn charset_from_content_type(content_type: &str) -> Option<&str> {
    content_type.split(';').skip(1).find_map(|param| {
        let (k, v) = param.split_once('=')?;
        k.trim()
            .eq_ignore_ascii_case("charset")
            .then(|| v.trim().trim_matches(|c| c == '"' || c == '\''))
            .filter(|v| !v.is_empty())
    })
}

fn meta_charset_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)<meta\s[^>]*?charset\s*=\s*["']?\s*([A-Za-z0-9_:.\-]+)"#).unwrap()
    })
}

/// Charset declared by a `<meta>` tag near the start of the document.
pub fn sniff_meta_charset(body: &[u8]) -> Option<String> {
    let head = &body[..body.len().min(META_SNIFF_BYTES)];
    meta_charset_re()
        .captures(head)
        .map(|c| String::from_utf8_lossy(&c[1]).into_owned())
}

fn lookup(label: &str) -> Option<&'static Encoding> {
    Encoding::for_label(label.trim().as_bytes())
}

/// Decodes an HTML body using the declared-charset chain.
pub fn decode_body(body: &[u8], content_type: Option<&str>) -> Decoded {
    let encoding = content_type
        .and_then(charset_from_content_type)
        .and_then(lookup)
        .or_else(|| sniff_meta_charset(body).as_deref().and_then(lookup))
        .unwrap_or(UTF_8);
    let (text, used, had_errors) = encoding.decode(body);
    let replacements = if had_errors {
        text.matches('\u{FFFD}').count()
    } else {
        0
    };
    Decoded {
        text: text.into_owned(),
        encoding: used.name(),
        replacements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_type_charset() {
        assert_eq!(charset_from_content_type("text/html; charset=utf-8"), Some("utf-8"));
        assert_eq!(charset_from_content_type("text/html;Charset=\"ISO-8859-1\""), Some("ISO-8859-1"));
        assert_eq!(charset_from_content_type("text/html"), None);
    }

    #[test]
    fn declared_utf8() {
        let d = decode_body("<p>å</p>".as_bytes(), Some("text/html; charset=utf-8"));
        assert_eq!(d.text, "<p>å</p>");
        assert_eq!(d.replacements, 0);
    }

    #[test]
    fn latin1_round_trip() {
        let html = "<html>å</html>";
        let latin1: Vec<u8> = html.chars().map(|c| c as u32 as u8).collect();
        assert_ne!(latin1, html.as_bytes());
        let d = decode_body(&latin1, Some("text/html; charset=iso-8859-1"));
        assert_eq!(d.text, html);
        // Without a declaration the same bytes are not valid UTF-8.
        let undeclared = decode_body(&latin1, None);
        assert_eq!(undeclared.replacements, 1);
    }

    #[test]
    fn meta_charset_used_when_header_silent() {
        let mut body = b"<html><head><meta charset=\"windows-1252\"></head><body>".to_vec();
        body.push(0xF8); // ø
        let d = decode_body(&body, Some("text/html"));
        assert!(d.text.ends_with('ø'));
        let http_equiv = b"<meta http-equiv=\"Content-Type\" content=\"text/html; charset=iso-8859-1\">\xe6";
        assert!(decode_body(http_equiv, None).text.ends_with('æ'));
    }

    #[test]
    fn meta_beyond_sniff_window_ignored() {
        let mut body = vec![b' '; META_SNIFF_BYTES];
        body.extend_from_slice(b"<meta charset=latin1>\xe5");
        let d = decode_body(&body, None);
        assert_eq!(d.encoding, "UTF-8");
        assert_eq!(d.replacements, 1);
    }

    #[test]
    fn header_beats_meta() {
        let body = "<meta charset=iso-8859-1>ö".as_bytes();
        assert_eq!(decode_body(body, Some("text/html; charset=utf-8")).text, "<meta charset=iso-8859-1>ö");
    }
}
