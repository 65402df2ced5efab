//! Email and public IP address replacement.

use std::net::{Ipv4Addr, Ipv6Addr};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

pub const DEFAULT_EMAIL_POOL: [&str; 4] = [
    "email@example.com",
    "kontakt@example.org",
    "info@example.net",
    "fornamn.efternamn@example.com",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiiConfig {
    pub email_pool: Vec<String>,
    /// Also replace public IPv6 addresses.
    pub scrub_ipv6: bool,
}

impl Default for PiiConfig {
    fn default() -> Self {
        Self {
            email_pool: DEFAULT_EMAIL_POOL.iter().map(|s| s.to_string()).collect(),
            scrub_ipv6: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PiiCounts {
    pub emails_replaced: usize,
    pub ips_replaced: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiReport {
    pub doc_id: String,
    #[serde(flatten)]
    pub counts: PiiCounts,
}

fn email_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+").unwrap())
}

fn ipv4_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}\b").unwrap())
}

fn ipv6_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b[0-9a-f]{0,4}(?::[0-9a-f]{0,4}){2,7}\b").unwrap())
}

/// Addresses left alone: private, loopback, link-local, unspecified,
/// broadcast and the documentation ranges used as substitutes.
pub fn is_public_v4(ip: Ipv4Addr) -> bool {
    let [a, b, c, _] = ip.octets();
    !(a == 10
        || (a == 172 && (16..32).contains(&b))
        || (a == 192 && b == 168)
        || a == 127
        || (a == 169 && b == 254)
        || a == 0
        || ip == Ipv4Addr::BROADCAST
        || (a == 192 && b == 0 && c == 2)
        || (a == 198 && b == 51 && c == 100)
        || (a == 203 && b == 0 && c == 113))
}

pub fn is_public_v6(ip: Ipv6Addr) -> bool {
    let s = ip.segments();
    !(ip.is_loopback()
        || ip.is_unspecified()
        || (s[0] & 0xffc0) == 0xfe80
        || (s[0] & 0xfe00) == 0xfc00
        || (s[0] == 0x2001 && s[1] == 0x0db8)
        || ip.to_ipv4_mapped().is_some())
}

fn v4_substitute(original: &str) -> Ipv4Addr {
    let h = xxh3_64(original.as_bytes());
    let host = (h >> 8) % 254 + 1;
    let [a, b, c] = [[192, 0, 2], [198, 51, 100], [203, 0, 113]][(h % 3) as usize];
    Ipv4Addr::new(a, b, c, host as u8)
}

fn v6_substitute(original: &str) -> Ipv6Addr {
    let h = xxh3_64(original.as_bytes());
    Ipv6Addr::new(0x2001, 0x0db8, 0, 0, 0, 0, (h >> 16) as u16, h as u16 | 1)
}

/// A dotted quad inside a longer dotted number (version strings, OIDs)
/// is not an address.
fn inside_longer_number(text: &str, start: usize, end: usize) -> bool {
    let before = &text.as_bytes()[..start];
    let after = &text.as_bytes()[end..];
    (before.len() >= 2 && before[before.len() - 1] == b'.' && before[before.len() - 2].is_ascii_digit())
        || (after.len() >= 2 && after[0] == b'.' && after[1].is_ascii_digit())
}

/// Replaces emails and public IPs. Pool addresses and substitute ranges
/// are fixed points, so scrubbing twice changes nothing.
pub fn scrub_with(input: &str, cfg: &PiiConfig) -> (String, PiiCounts) {
    let mut counts = PiiCounts::default();
    let pool = &cfg.email_pool;
    let mut text = String::with_capacity(input.len());
    let mut last = 0;
    for m in email_re().find_iter(input) {
        let s = m.as_str();
        // "a@b.c@d.e" is not an address
        let chained = input[..m.start()].ends_with('@') || input[m.end()..].starts_with('@');
        if chained || pool.is_empty() || pool.iter().any(|p| p == s) {
            continue;
        }
        text.push_str(&input[last..m.start()]);
        text.push_str(&pool[(xxh3_64(s.as_bytes()) % pool.len() as u64) as usize]);
        last = m.end();
        counts.emails_replaced += 1;
    }
    text.push_str(&input[last..]);
    let src: &str = &text;
    let mut out = String::with_capacity(src.len());
    let mut last = 0;
    for m in ipv4_re().find_iter(src) {
        let Ok(ip) = m.as_str().parse::<Ipv4Addr>() else { continue };
        if !is_public_v4(ip) || inside_longer_number(src, m.start(), m.end()) {
            continue;
        }
        out.push_str(&src[last..m.start()]);
        out.push_str(&v4_substitute(m.as_str()).to_string());
        last = m.end();
        counts.ips_replaced += 1;
    }
    out.push_str(&src[last..]);
    if cfg.scrub_ipv6 {
        let src = std::mem::take(&mut out);
        let mut last = 0;
        for m in ipv6_re().find_iter(&src) {
            let Ok(ip) = m.as_str().parse::<Ipv6Addr>() else { continue };
            let glued = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || ".:@-_".contains(c));
            if !is_public_v6(ip) || glued(src[..m.start()].chars().next_back()) || glued(src[m.end()..].chars().next()) {
                continue;
            }
            out.push_str(&src[last..m.start()]);
            out.push_str(&v6_substitute(m.as_str()).to_string());
            last = m.end();
            counts.ips_replaced += 1;
        }
        out.push_str(&src[last..]);
    }
    (out, counts)
}

pub fn scrub(doc_id: &str, text: &str, cfg: &PiiConfig) -> (String, PiiReport) {
    let (out, counts) = scrub_with(text, cfg);
    (
        out,
        PiiReport {
            doc_id: doc_id.to_string(),
            counts,
        },
    )
}
