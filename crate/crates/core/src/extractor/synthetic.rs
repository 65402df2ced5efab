//! Generated annotated pages: seed-corpus prose wrapped in menus, banners
//! and footers, with the prose lines labelled as content.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::labels::{DocumentRecord, Example, LineLabelSet};
use crate::html2md::{escape_paragraph, MarkdownDocument};
use crate::selection::{seed_corpus, Language};

struct Phrases {
    menu: &'static [&'static str],
    menu_title: &'static str,
    share: &'static str,
    read_more: &'static str,
    related: &'static str,
    cookie: &'static str,
    rights: &'static str,
    contact: &'static str,
    published: &'static str,
    comments: &'static str,
    login: &'static str,
    months: [&'static str; 12],
}

const SV: Phrases = Phrases {
    menu: &["Hem", "Om oss", "Kontakt", "Nyheter", "Blogg", "Butik", "Evenemang", "Galleri", "Medlemmar", "Arkiv"],
    menu_title: "Meny",
    share: "Dela: Facebook Twitter LinkedIn E-post",
    read_more: "Läs mer »",
    related: "Relaterade inlägg",
    cookie: "Vi använder cookies för att ge dig en bättre upplevelse på webbplatsen. Genom att fortsätta godkänner du detta.",
    rights: "Alla rättigheter förbehållna.",
    contact: "Kontakta oss",
    published: "Publicerad",
    comments: "kommentarer",
    login: "Logga in | Registrera dig",
    months: ["januari", "februari", "mars", "april", "maj", "juni", "juli", "augusti", "september", "oktober", "november", "december"],
};

const DA: Phrases = Phrases {
    menu: &["Forside", "Om os", "Kontakt", "Nyheder", "Blog", "Butik", "Arrangementer", "Galleri", "Medlemmer", "Arkiv"],
    menu_title: "Menu",
    share: "Del: Facebook Twitter LinkedIn E-mail",
    read_more: "Læs mere »",
    related: "Relaterede indlæg",
    cookie: "Vi bruger cookies for at give dig en bedre oplevelse på hjemmesiden. Ved at fortsætte accepterer du dette.",
    rights: "Alle rettigheder forbeholdes.",
    contact: "Kontakt os",
    published: "Udgivet",
    comments: "kommentarer",
    login: "Log ind | Opret bruger",
    months: ["januar", "februar", "marts", "april", "maj", "juni", "juli", "august", "september", "oktober", "november", "december"],
};

const NO: Phrases = Phrases {
    menu: &["Hjem", "Om oss", "Kontakt", "Nyheter", "Blogg", "Butikk", "Arrangementer", "Galleri", "Medlemmer", "Arkiv"],
    menu_title: "Meny",
    share: "Del: Facebook Twitter LinkedIn E-post",
    read_more: "Les mer »",
    related: "Relaterte innlegg",
    cookie: "Vi bruker informasjonskapsler for å gi deg en bedre opplevelse på nettstedet. Ved å fortsette godtar du dette.",
    rights: "Alle rettigheter forbeholdt.",
    contact: "Kontakt oss",
    published: "Publisert",
    comments: "kommentarer",
    login: "Logg inn | Registrer deg",
    months: ["januar", "februar", "mars", "april", "mai", "juni", "juli", "august", "september", "oktober", "november", "desember"],
};

const IS: Phrases = Phrases {
    menu: &["Forsíða", "Um okkur", "Hafa samband", "Fréttir", "Blogg", "Verslun", "Viðburðir", "Myndir", "Félagar", "Safn"],
    menu_title: "Valmynd",
    share: "Deila: Facebook Twitter LinkedIn Tölvupóstur",
    read_more: "Lesa meira »",
    related: "Tengdar færslur",
    cookie: "Við notum vafrakökur til að bæta upplifun þína á vefnum. Með því að halda áfram samþykkir þú það.",
    rights: "Öll réttindi áskilin.",
    contact: "Hafa samband",
    published: "Birt",
    comments: "athugasemdir",
    login: "Innskráning | Nýskráning",
    months: ["janúar", "febrúar", "mars", "apríl", "maí", "júní", "júlí", "ágúst", "september", "október", "nóvember", "desember"],
};

const TLD: [&str; 4] = ["se", "dk", "no", "is"];

fn phrases(lang: Language) -> (&'static Phrases, &'static str) {
    match lang {
        Language::Da => (&DA, TLD[1]),
        Language::No => (&NO, TLD[2]),
        Language::Is => (&IS, TLD[3]),
        _ => (&SV, TLD[0]),
    }
}

fn sentences(lang: Language) -> Vec<&'static str> {
    seed_corpus(lang)
        .lines()
        .flat_map(|p| p.split_inclusive(". "))
        .map(str::trim)
        .filter(|s| s.chars().count() > 15)
        .collect()
}

fn title_from(sentence: &str, rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..7);
    let words: Vec<&str> = sentence.split_whitespace().take(n).collect();
    words.join(" ").trim_end_matches([',', '.', ':']).to_string()
}

struct Page {
    lines: Vec<(String, bool)>,
}

impl Page {
    fn push(&mut self, text: impl Into<String>, keep: bool) {
        self.lines.push((text.into(), keep));
    }

    fn blank(&mut self) {
        if self.lines.last().is_some_and(|l| !l.0.is_empty()) {
            let keep = self.lines.last().unwrap().1;
            self.lines.push((String::new(), keep));
        }
    }
}

fn page(i: usize, rng: &mut ChaCha8Rng, pools: &[(Language, Vec<&'static str>)]) -> (DocumentRecord, LineLabelSet) {
    let (lang, pool) = &pools[rng.gen_range(0..pools.len())];
    let (p, tld) = phrases(*lang);
    let site = format!("{}{}", ["nord", "fjord", "skog", "sjö", "berg", "dal"][rng.gen_range(0..6)], rng.gen_range(1..999));
    let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
    let pick = |r: &mut ChaCha8Rng| pool[r.gen_range(0..pool.len())];
    let mut doc = Page { lines: Vec::new() };

    if r.gen_bool(0.7) {
        doc.push(format!("{} | {}", site, title_from(pick(&mut r), &mut r)), false);
        doc.blank();
    }
    if r.gen_bool(0.3) {
        doc.push(p.login, false);
        doc.blank();
    }
    if r.gen_bool(0.8) {
        if r.gen_bool(0.5) {
            doc.push(format!("## {}", p.menu_title), false);
            doc.blank();
        }
        let mut items = p.menu.to_vec();
        items.shuffle(&mut r);
        for item in &items[..r.gen_range(3..8)] {
            doc.push(format!("- {item}"), false);
        }
        doc.blank();
    }
    if r.gen_bool(0.4) {
        doc.push(format!("{} › {} › {}", p.menu[0], p.menu[3], title_from(pick(&mut r), &mut r)), false);
        doc.blank();
    }
    // cookie notices sit above or below the article
    let cookie = r.gen_bool(0.6).then(|| r.gen_bool(0.5));
    if cookie == Some(true) {
        doc.push(p.cookie, false);
        doc.blank();
    }

    doc.push(format!("# {}", title_from(pick(&mut r), &mut r)), true);
    doc.blank();
    if r.gen_bool(0.5) {
        let (y, m, d) = (r.gen_range(2010..2024), r.gen_range(1..13), r.gen_range(1..29));
        let date = if r.gen_bool(0.5) {
            format!("{y}-{m:02}-{d:02}")
        } else {
            format!("{d} {} {y}", p.months[m - 1])
        };
        doc.push(format!("{} {date}", p.published), false);
        doc.blank();
    }
    for _ in 0..r.gen_range(2..7) {
        match r.gen_range(0..10) {
            0 => {
                doc.push(format!("## {}", title_from(pick(&mut r), &mut r)), true);
                doc.blank();
            }
            1 => {
                for _ in 0..r.gen_range(2..5) {
                    doc.push(format!("- {}", pick(&mut r)), true);
                }
                doc.blank();
            }
            _ => {
                let n = r.gen_range(1..5);
                let para: Vec<&str> = (0..n).map(|_| pick(&mut r)).collect();
                doc.push(escape_paragraph(&para.join(" ")), true);
                doc.blank();
            }
        }
    }

    // some sites end the article with little more than a copyright line
    let minimal = r.gen_bool(0.3);
    if !minimal && r.gen_bool(0.5) {
        doc.push(p.share, false);
        doc.blank();
    }
    if !minimal && r.gen_bool(0.4) {
        doc.push(format!("{} {}", r.gen_range(0..40), p.comments), false);
        doc.blank();
    }
    if r.gen_bool(0.5) {
        doc.push(format!("### {}", p.related), false);
        doc.blank();
        for _ in 0..r.gen_range(2..5) {
            doc.push(format!("- {}", title_from(pick(&mut r), &mut r)), false);
        }
        doc.blank();
        doc.push(p.read_more, false);
        doc.blank();
    }
    if cookie == Some(false) {
        doc.push(p.cookie, false);
        doc.blank();
    }
    if !minimal && r.gen_bool(0.6) {
        doc.push(format!("{}: info@{site}.{tld} | www.{site}.{tld}", p.contact), false);
    }
    doc.push(format!("© {} {site}. {}", r.gen_range(2010..2024), p.rights), false);

    let text: Vec<&str> = doc.lines.iter().map(|l| l.0.as_str()).collect();
    let md = MarkdownDocument::from_text(format!("https://www.{site}.{tld}/{i}"), "2023-06-01T00:00:00Z", &text.join("\n"));
    debug_assert_eq!(md.len(), doc.lines.len());
    let id = format!("synth-{i:05}");
    let mut labels = LineLabelSet::from_keep(&id, md.len(), |j| doc.lines[j].1);
    labels.annotator = "synthetic".into();
    labels.timestamp = "2024-01-01T00:00:00Z".into();
    (DocumentRecord::new(id, &md), labels)
}

/// `n` pages drawn from the Scandinavian seed corpora.
pub fn generate(n: usize, seed: u64) -> Vec<(DocumentRecord, LineLabelSet)> {
    let pools: Vec<(Language, Vec<&'static str>)> =
        Language::SCANDINAVIAN.iter().map(|&l| (l, sentences(l))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| page(i, &mut rng, &pools)).collect()
}

/// Generated pages as training examples.
pub fn examples(n: usize, seed: u64) -> Vec<Example> {
    generate(n, seed)
        .into_iter()
        .map(|(d, labels)| Example { doc: d.document(), labels })
        .collect()
}
