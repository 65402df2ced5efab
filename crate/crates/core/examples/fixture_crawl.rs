//! Writes the ten-page fixture crawl used by the pipeline tests:
//! two WET archives and the two WARC archives they were derived from.
//!
//!     cargo run -p nordcrawl-core --example fixture_crawl -- tests/fixtures/crawl

use std::path::PathBuf;

use nordcrawl_core::archive::gzip::encode_member;
use nordcrawl_core::archive::record::http_response_block;
use nordcrawl_core::archive::{write_wet, WarcRecord, WetRecord};
use nordcrawl_core::html2md::html_to_markdown;

const DATE: &str = "2023-02-03T10:15:00Z";

enum Response {
    Html(String),
    Status(u16, String),
    Pdf,
    Missing,
}

struct Page {
    uri: &'static str,
    response: Response,
    /// WET text; derived from the HTML when `None`.
    wet_text: Option<&'static str>,
}

fn page(site: &str, menu: &[&str], cookie: &str, title: &str, body: &str, aside: &str, footer: &str) -> String {
    let menu: String = menu.iter().map(|m| format!("<li><a href=\"/{m}\">{m}</a></li>")).collect();
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{title} | {site}</title>\
         <script>var tracking = 1;</script></head>\n<body>\n\
         <header><div class=\"logo\">{site}</div><nav><ul>{menu}</ul></nav></header>\n\
         <div class=\"cookie-banner\"><p>{cookie}</p></div>\n\
         <main><article>\n<h1>{title}</h1>\n{body}\n</article>\n\
         <aside>{aside}</aside></main>\n\
         <footer>{footer}</footer>\n</body></html>\n"
    )
}

const SV_MENU: &[&str] = &["Hem", "Nyheter", "Sport", "Kultur", "Debatt"];
const SV_COOKIE: &str = "Vi använder kakor för att ge dig en bättre upplevelse. Genom att surfa vidare godkänner du detta.";
const SV_FOOTER: &str = "<p>© 2023 Mälarbladet AB. Alla rättigheter förbehållna.</p><p>Ansvarig utgivare: Karin Berg</p>";

const SV_ARTICLE: &str = "<p class=\"date\">Publicerad 3 februari 2023</p>\n\
<p>Kommunfullmäktige i Västerås beslutade på torsdagskvällen att bygga om den gamla stadsparken. \
Arbetet börjar redan i april och ska enligt planen vara klart till midsommar nästa år. \
Parken får nya gångvägar, fler bänkar och en lekplats som är anpassad för barn med funktionsnedsättning.</p>\n\
<p>– Det här är en plats som betyder mycket för många invånare, och nu får den äntligen den omsorg den förtjänar, \
säger kommunalrådet Eva Holmström. Hon berättar att förslaget har diskuterats i flera år men att pengarna först nu finns i budgeten.</p>\n\
<h2>Kritik från oppositionen</h2>\n\
<p>Alla är dock inte nöjda. Oppositionen menar att kostnaden på drygt fyrtio miljoner kronor är för hög \
när skolor och äldreboenden samtidigt behöver renoveras. De vill i stället att ombyggnaden delas upp i etapper \
så att en del av pengarna kan användas till annat under de närmaste åren.</p>\n\
<p>Frågor om bygget kan skickas till projektledaren på parken@vasteras-exempel.se. \
Under byggtiden publiceras ritningar och tidsplaner på kommunens server 81.2.69.160, \
medan den interna adressen 192.168.10.4 bara nås från kommunhuset.</p>";

const SV_DUP_ARTICLE: &str = "<p class=\"date\">Uppdaterad 3 februari 2023</p>\n\
<p>Kommunfullmäktige i Västerås beslutade på torsdagskvällen att bygga om den gamla stadsparken. \
Arbetet börjar redan i april och ska enligt planen vara klart till midsommar nästa år. \
Parken får nya gångvägar, fler bänkar och en lekplats som är anpassad för barn med funktionsnedsättning.</p>\n\
<p>– Det här är en plats som betyder mycket för många invånare, och nu får den äntligen den omsorg den förtjänar, \
säger kommunalrådet Eva Holmström. Hon berättar att förslaget har diskuterats i flera år men att pengarna först nu finns i budgeten.</p>\n\
<h2>Kritik från oppositionen</h2>\n\
<p>Alla är dock inte nöjda. Oppositionen menar att kostnaden på drygt fyrtio miljoner kronor är för hög \
när skolor och äldreboenden samtidigt behöver renoveras. De vill i stället att ombyggnaden delas upp i etapper \
så att en del av pengarna kan användas till annat under de närmaste åren.</p>\n\
<p>Frågor om bygget kan skickas till projektledaren på parken@vasteras-exempel.se. \
Under byggtiden publiceras ritningar och tidsplaner på kommunens server 81.2.69.160, \
medan den interna adressen 192.168.10.4 bara nås från kommunhuset.</p>";

const SV_ASIDE: &str = "<h3>Läs också</h3><ul><li><a href=\"/a\">Nya cykelbanor i centrum</a></li>\
<li><a href=\"/b\">Biblioteket förlänger öppettiderna</a></li><li><a href=\"/c\">Så blir vädret i helgen</a></li></ul>";

const DA_MENU: &[&str] = &["Forside", "Opskrifter", "Bagning", "Om mig", "Kontakt"];
const DA_COOKIE: &str = "Vi bruger cookies til at forbedre din oplevelse. Ved at fortsætte accepterer du vores brug af cookies.";
const DA_FOOTER: &str = "<p>© 2023 Mettes Køkken. Alle rettigheder forbeholdes.</p>";
const DA_ARTICLE: &str = "<p class=\"date\">Skrevet 28. januar 2023</p>\n\
<p>Rugbrød er noget af det mest danske, man kan forestille sig, og alligevel er der mange, der aldrig har prøvet at bage det selv. \
Det er ellers ikke svært, når man først har fået styr på surdejen, og resultatet smager langt bedre end det, man køber i supermarkedet.</p>\n\
<h2>Sådan gør du</h2>\n\
<p>Aftenen før blander du surdejen med lunkent vand, groft rugmel og knækkede rugkerner. Dejen skal stå tildækket på køkkenbordet natten over, \
så den kan nå at hæve og udvikle den syrlige smag. Næste morgen rører du salt, solsikkekerner og lidt mere mel i, \
hælder dejen i en smurt form og lader den hæve igen i et par timer.</p>\n\
<p>Brødet bages ved 180 grader i omkring halvanden time. Lad det køle helt af på en rist, før du skærer i det, \
ellers bliver krummen klæg. Pakket ind i et viskestykke kan det holde sig frisk i næsten en uge.</p>";
const DA_ASIDE: &str = "<h3>Populære opskrifter</h3><ul><li>Boller i karry</li><li>Æblekage med makroner</li><li>Frikadeller</li></ul>";

const NO_MENU: &[&str] = &["Hjem", "Turer", "Utstyr", "Kart", "Om oss"];
const NO_COOKIE: &str = "Denne nettsiden bruker informasjonskapsler. Ved å fortsette godtar du bruken av informasjonskapsler.";
const NO_FOOTER: &str = "<p>© 2023 Fjellturer Vest. Alle rettigheter reservert.</p><p>Følg oss på sosiale medier</p>";
const NO_ARTICLE: &str = "<p class=\"date\">Publisert 1. februar 2023</p>\n\
<p>Turen opp til Preikestolen er en av de mest besøkte i hele landet, og det er lett å forstå hvorfor. \
Fra toppen ser man rett ned i Lysefjorden, seks hundre meter under føttene, og på klare dager strekker utsikten seg langt innover fjellene.</p>\n\
<p>Stien starter ved fjellstua og er omtrent fire kilometer lang hver vei. Den er godt merket, men enkelte partier er bratte og steinete, \
så gode sko er nødvendig. De fleste bruker mellom fire og fem timer på hele turen, inkludert en lang pause på platået.</p>\n\
<h2>Når bør man gå?</h2>\n\
<p>Om sommeren kan det være svært mange mennesker på stien midt på dagen. Vi anbefaler derfor å starte tidlig om morgenen eller sent på ettermiddagen. \
Om vinteren ligger det ofte snø og is, og da bør man bare gå sammen med en erfaren guide.</p>";
const NO_ASIDE: &str = "<h3>Andre turer</h3><ul><li>Kjeragbolten</li><li>Trolltunga</li><li>Romsdalseggen</li></ul>";

const IS_MENU: &[&str] = &["Forsíða", "Fréttir", "Íþróttir", "Menning"];
const IS_COOKIE: &str = "Þessi vefur notar vafrakökur. Með því að halda áfram samþykkir þú notkun þeirra.";
const IS_FOOTER: &str = "<p>© 2023 Fréttablað Norðurlands. Öll réttindi áskilin.</p>";
const IS_ARTICLE: &str = "<p class=\"date\">Birt 2. febrúar 2023</p>\n\
<p>Óvenju mikill snjór hefur fallið á Norðurlandi undanfarna daga og hafa margir vegir verið lokaðir. \
Vegagerðin hvetur ökumenn til að kynna sér aðstæður áður en lagt er af stað og að vera ekki á ferðinni að óþörfu.</p>\n\
<p>Á Akureyri hafa skólar verið opnir en foreldrum var bent á að börn ættu að vera vel klædd á leiðinni heim. \
Bæjarstarfsmenn hafa unnið allan sólarhringinn við að ryðja götur og gangstéttir, og segja að ástandið fari batnandi.</p>\n\
<p>Veðurstofan spáir hlýnandi veðri um helgina með rigningu á láglendi, sem gæti valdið vatnavöxtum í ám og lækjum. \
Íbúar eru beðnir um að hreinsa frá niðurföllum til að koma í veg fyrir flóð í kjöllurum.</p>";
const IS_ASIDE: &str = "<h3>Mest lesið</h3><ul><li>Nýr vegur um Vaðlaheiði</li><li>Tónleikar í Hofi</li></ul>";

const EN_ARTICLE: &str = "<p>The city council voted on Thursday evening to renovate the old park in the centre of town. \
Work begins in April and should be finished by the middle of next summer, according to the published plan.</p>\n\
<p>The park will get new paths, more benches and a playground designed for children with disabilities.</p>";

const SV_SHORT: &str = "<p>Sidan uppdateras.</p>";

fn pages() -> Vec<Vec<Page>> {
    vec![
        vec![
            Page {
                uri: "https://www.malarbladet.example/nyheter/stadsparken",
                response: Response::Html(page("Mälarbladet", SV_MENU, SV_COOKIE, "Stadsparken byggs om för fyrtio miljoner", SV_ARTICLE, SV_ASIDE, SV_FOOTER)),
                wet_text: None,
            },
            Page {
                uri: "https://mettes-koekken.example/opskrifter/rugbroed",
                response: Response::Html(page("Mettes Køkken", DA_MENU, DA_COOKIE, "Hjemmebagt rugbrød med surdej", DA_ARTICLE, DA_ASIDE, DA_FOOTER)),
                wet_text: None,
            },
            Page {
                uri: "https://www.citynews.example/park-renovation",
                response: Response::Html(page("City News", &["Home", "News", "Sport"], "We use cookies to improve your experience.", "Old park to be renovated", EN_ARTICLE, "", "<p>© 2023 City News Ltd.</p>")),
                wet_text: None,
            },
            Page {
                uri: "https://fjellturer-vest.example/turer/preikestolen",
                response: Response::Html(page("Fjellturer Vest", NO_MENU, NO_COOKIE, "Preikestolen: slik planlegger du turen", NO_ARTICLE, NO_ASIDE, NO_FOOTER)),
                wet_text: None,
            },
            Page {
                uri: "https://www.malarbladet.example/artikel/12345",
                response: Response::Html(page("Mälarbladet", SV_MENU, SV_COOKIE, "Stadsparken byggs om för fyrtio miljoner", SV_DUP_ARTICLE, SV_ASIDE, SV_FOOTER)),
                wet_text: None,
            },
        ],
        vec![
            Page {
                uri: "https://frettabladid-nordurlands.example/frettir/snjor",
                response: Response::Html(page("Fréttablað Norðurlands", IS_MENU, IS_COOKIE, "Mikill snjór á Norðurlandi", IS_ARTICLE, IS_ASIDE, IS_FOOTER)),
                wet_text: None,
            },
            Page {
                uri: "https://www.malarbladet.example/underhall",
                response: Response::Html(page("Mälarbladet", SV_MENU, SV_COOKIE, "Underhåll", SV_SHORT, "", SV_FOOTER)),
                wet_text: Some("Mälarbladet\nUnderhåll\nSidan uppdateras, vi är snart tillbaka med nyheter från Västerås och hela Mälardalen."),
            },
            Page {
                uri: "https://www.malarbladet.example/nyheter/borttagen",
                response: Response::Status(404, "<html><body><h1>Sidan finns inte</h1></body></html>".into()),
                wet_text: Some("Sidan finns inte. Artikeln du letar efter har tagits bort eller flyttats till en annan adress på webbplatsen."),
            },
            Page {
                uri: "https://www.malarbladet.example/nyheter/saknas",
                response: Response::Missing,
                wet_text: Some("Den här sidan fanns i textarkivet men inte i webbarkivet, så den kan inte hämtas och konverteras."),
            },
            Page {
                uri: "https://mettes-koekken.example/opskrifter/rugbroed.pdf",
                response: Response::Pdf,
                wet_text: Some("Opskrift på rugbrød med surdej til udskrivning. Bland surdej, vand og rugmel, og lad dejen hæve natten over."),
            },
        ],
    ]
}

fn wet_text(p: &Page) -> String {
    if let Some(t) = p.wet_text {
        return t.to_string();
    }
    let Response::Html(html) = &p.response else { unreachable!() };
    html_to_markdown(html, p.uri, DATE)
        .lines
        .iter()
        .map(|l| l.text.trim_start_matches(['#', '-', ' ', '>']).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn main() -> std::io::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "tests/fixtures/crawl".into()));
    std::fs::create_dir_all(root.join("wet"))?;
    std::fs::create_dir_all(root.join("warc"))?;
    for (i, shard) in pages().into_iter().enumerate() {
        let stem = format!("CC-FIXTURE-{i:05}");
        let wet: Vec<WetRecord> = shard
            .iter()
            .map(|p| WetRecord {
                target_uri: p.uri.to_string(),
                warc_date: DATE.to_string(),
                text: wet_text(p),
            })
            .collect();
        std::fs::write(root.join("wet").join(format!("{stem}.warc.wet.gz")), write_wet(&wet))?;

        let mut warc = encode_member(
            &WarcRecord::new("warcinfo", "", DATE, "application/warc-fields", b"software: fixture\r\n".to_vec()).to_bytes(),
        );
        for p in &shard {
            let block = match &p.response {
                Response::Html(html) => http_response_block("text/html; charset=utf-8", html.as_bytes()),
                Response::Pdf => http_response_block("application/pdf", b"%PDF-1.4\n%fixture\n"),
                Response::Status(code, body) => format!(
                    "HTTP/1.1 {code} Not Found\r\nContent-Type: text/html\r\nContent-Length: {}\r\n\r\n{body}",
                    body.len()
                )
                .into_bytes(),
                Response::Missing => continue,
            };
            let request = WarcRecord::new("request", p.uri, DATE, "application/http; msgtype=request", format!("GET / HTTP/1.1\r\nHost: {}\r\n\r\n", p.uri).into_bytes());
            warc.extend(encode_member(&request.to_bytes()));
            let response = WarcRecord::new("response", p.uri, DATE, "application/http; msgtype=response", block);
            warc.extend(encode_member(&response.to_bytes()));
        }
        std::fs::write(root.join("warc").join(format!("{stem}.warc.gz")), warc)?;
    }
    Ok(())
}
