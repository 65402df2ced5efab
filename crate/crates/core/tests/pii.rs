use std::net::Ipv4Addr;

use nordcrawl_core::pii::*;
use proptest::prelude::*;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIVATE: [&str; 8] = [
    "10.1.2.3",
    "172.20.0.5",
    "192.168.0.10",
    "127.0.0.1",
    "169.254.10.10",
    "0.0.0.0",
    "255.255.255.255",
    "192.168.100.200",
];

fn piece(rng: &mut ChaCha8Rng) -> String {
    let word = |rng: &mut ChaCha8Rng, n: usize| -> String {
        (0..rng.gen_range(1..=n))
            .map(|_| *b"abcxyz019._+-".choose(rng).unwrap() as char)
            .collect()
    };
    match rng.gen_range(0..9) {
        0 => format!("{}@{}.{}", word(rng, 8), word(rng, 6), ["se", "no", "dk", "is", "com"].choose(rng).unwrap()),
        1 => format!("{}.{}.{}.{}", rng.gen_range(0..300), rng.gen_range(0..256), rng.gen_range(0..256), rng.gen_range(0..256)),
        2 => PRIVATE.choose(rng).unwrap().to_string(),
        3 => DEFAULT_EMAIL_POOL.choose(rng).unwrap().to_string(),
        4 => "198.51.100.7".to_string(),
        5 => ["Hej", "å", "ÖL", "kontakt", "mvh", "@", ".", "1.2", ":"].choose(rng).unwrap().to_string(),
        _ => word(rng, 10),
    }
}

fn fuzz_doc(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    for _ in 0..rng.gen_range(1..40) {
        s.push_str(&piece(rng));
        s.push_str(["", " ", "\n", ", ", ".", "@", "-", "(", ")"].choose(rng).unwrap());
    }
    s
}

#[test]
fn scrub_is_idempotent_on_fuzz_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let cfg = PiiConfig::default();
    let mut replaced = 0;
    for i in 0..1000 {
        let doc = fuzz_doc(&mut rng);
        let (once, c) = scrub_with(&doc, &cfg);
        replaced += c.emails_replaced + c.ips_replaced;
        let (twice, c2) = scrub_with(&once, &cfg);
        assert_eq!(twice, once, "doc {i}: {doc:?}");
        assert_eq!(c2, PiiCounts::default());
    }
    assert!(replaced > 500);
}

#[test]
fn private_ranges_survive_in_context() {
    let cfg = PiiConfig::default();
    for ip in PRIVATE {
        let text = format!("Routern nås på {ip} i nätet.");
        assert_eq!(scrub_with(&text, &cfg).0, text);
    }
}

#[test]
fn substitutes_are_in_documentation_ranges() {
    let cfg = PiiConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let docs = [[192, 0, 2], [198, 51, 100], [203, 0, 113]];
    for _ in 0..200 {
        let ip = Ipv4Addr::new(rng.gen_range(1..=223), rng.gen(), rng.gen(), rng.gen());
        if !is_public_v4(ip) {
            continue;
        }
        let (out, c) = scrub_with(&ip.to_string(), &cfg);
        assert_eq!(c.ips_replaced, 1);
        let sub: Ipv4Addr = out.parse().unwrap();
        assert!(docs.contains(&[sub.octets()[0], sub.octets()[1], sub.octets()[2]]), "{sub}");
    }
}

#[test]
fn repeated_addresses_share_a_substitute() {
    let cfg = PiiConfig::default();
    let (out, c) = scrub_with("a.b@firma.se, 8.8.4.4; a.b@firma.se och 8.8.4.4", &cfg);
    assert_eq!((c.emails_replaced, c.ips_replaced), (2, 2));
    let parts: Vec<&str> = out.split([',', ';']).map(str::trim).collect();
    let tail: Vec<&str> = parts[2].split(" och ").collect();
    assert_eq!(parts[0], tail[0]);
    assert_eq!(parts[1], tail[1]);
}

proptest! {
    #[test]
    fn text_without_matches_is_unchanged(s in "[^@0-9:]{0,200}") {
        prop_assert_eq!(scrub_with(&s, &PiiConfig::default()).0, s);
    }

    #[test]
    fn only_matched_spans_change(prefix in "[a-zåäö ]{0,20}", user in "[a-z]{1,8}", suffix in "[a-zåäö ]{0,20}") {
        let text = format!("{prefix} {user}@exempel.se {suffix}");
        let (out, _) = scrub_with(&text, &PiiConfig::default());
        let expected_prefix = format!("{} ", prefix);
        let expected_suffix = format!(" {}", suffix);
        prop_assert!(out.starts_with(&expected_prefix));
        prop_assert!(out.ends_with(&expected_suffix));
        let middle = &out[prefix.len() + 1..out.len() - suffix.len() - 1];
        prop_assert!(DEFAULT_EMAIL_POOL.contains(&middle));
    }

    #[test]
    fn idempotent_on_arbitrary_text(s in "[a-z0-9@. +_\\-:\n]{0,120}") {
        let cfg = PiiConfig { scrub_ipv6: true, ..Default::default() };
        let once = scrub_with(&s, &cfg).0;
        prop_assert_eq!(scrub_with(&once, &cfg).0, once.clone());
    }
}
