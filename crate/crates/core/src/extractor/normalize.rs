//! Text clean-up applied to extracted documents.

use std::sync::OnceLock;

use unicode_normalization::UnicodeNormalization;

/// Letters whose UTF-8 encoding is commonly mis-decoded in Nordic pages.
const NORDIC: &str = "åäöæøéþðíóúýÅÄÖÆØÉÞÐÍÓÚÝ";

/// Pairs of (mis-decoded form, intended letter). Both Latin-1 and
/// Windows-1252 readings of the UTF-8 bytes are covered.
fn mojibake_table() -> &'static [(String, char)] {
    static TABLE: OnceLock<Vec<(String, char)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::new();
        for c in NORDIC.chars() {
            let mut buf = [0u8; 4];
            let bytes = c.encode_utf8(&mut buf).as_bytes();
            let latin1: String = bytes.iter().map(|&b| b as char).collect();
            let (cp1252, _, _) = encoding_rs::WINDOWS_1252.decode(bytes);
            out.push((latin1.clone(), c));
            if cp1252 != latin1 {
                out.push((cp1252.into_owned(), c));
            }
        }
        out
    })
}

fn repair_mojibake(s: &str) -> String {
    if !s.contains('Ã') {
        return s.to_string();
    }
    let table = mojibake_table();
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('Ã') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        match table.iter().find(|(bad, _)| rest.starts_with(bad.as_str())) {
            Some((bad, good)) => {
                out.push(*good);
                rest = &rest[bad.len()..];
            }
            None => {
                out.push('Ã');
                rest = &rest['Ã'.len_utf8()..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn pass(s: &str) -> String {
    let composed: String = s.nfc().collect();
    repair_mojibake(&composed)
        .chars()
        .filter(|&c| !c.is_control() || c == '\n' || c == '\t')
        .map(|c| if matches!(c, '\u{a0}' | '\u{202f}') { ' ' } else { c })
        .collect()
}

/// NFC, mojibake repair for Nordic letters, control character removal and
/// non-breaking space replacement. Idempotent.
pub fn normalize_text(text: &str) -> String {
    let mut cur = pass(text);
    // Removing a character can expose a new composition or mojibake pair.
    for _ in 0..16 {
        let next = pass(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repairs_every_nordic_letter() {
        for c in NORDIC.chars() {
            let utf8 = c.to_string().into_bytes();
            let latin1: String = utf8.iter().map(|&b| b as char).collect();
            assert_eq!(normalize_text(&latin1), c.to_string(), "{c}");
            let (cp, _, _) = encoding_rs::WINDOWS_1252.decode(&utf8);
            assert_eq!(normalize_text(&cp), c.to_string(), "{c} via cp1252");
        }
        assert_eq!(normalize_text("BrÃ¶d och smÃ¶r"), "Bröd och smör");
    }

    #[test]
    fn controls_and_spaces() {
        assert_eq!(normalize_text("A\u{0}B"), "AB");
        assert_eq!(normalize_text("a\tb\nc\r\u{85}"), "a\tb\nc");
        assert_eq!(normalize_text("10\u{a0}kr"), "10 kr");
        assert_eq!(normalize_text("plain ascii."), "plain ascii.");
    }

    #[test]
    fn composes() {
        assert_eq!(normalize_text("a\u{30a}"), "å");
        assert_eq!(normalize_text("a\u{0}\u{30a}"), "å");
    }

    #[test]
    fn exposed_pair_is_repaired() {
        assert_eq!(normalize_text("Ã\u{1}¥"), "å");
    }
}
