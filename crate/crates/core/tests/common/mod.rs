//! Seeded synthetic report generator with planted ground truth.
//!
//! Every sentence is built from a fixed phrase bank whose only pattern and
//! keyword hits are the features it plants, so the expected feature set of a
//! generated case is known exactly.

#![allow(dead_code)]

use std::collections::BTreeSet;

use casetriage::batcher::MONTHS;
use casetriage::extractor::{FeatureSet, StorageAmount, StorageUnit};
use casetriage::pipeline;
use casetriage::{CaseRecord, Config, Extractor};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Features planted into one generated case.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub month: &'static str,
    pub year: i32,
    pub text: String,
    pub perpetrator_age: Option<u32>,
    pub victim_ages: BTreeSet<u32>,
    pub victim_gender: Option<&'static str>,
    pub victim_count: Option<u32>,
    pub platforms: BTreeSet<String>,
    pub severity: BTreeSet<String>,
    pub topics: BTreeSet<String>,
    pub phrases: BTreeSet<String>,
    pub investigation: BTreeSet<String>,
    pub agencies: BTreeSet<String>,
    pub prosecution: BTreeSet<String>,
    pub images: Option<u64>,
    pub storage: Option<StorageAmount>,
    pub rso: bool,
    pub relationship: String,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

const PLATFORMS: [(&str, &str); 5] = [
    ("Facebook", "facebook"),
    ("Instagram", "instagram"),
    ("Snapchat", "snapchat"),
    ("Discord", "discord"),
    ("WhatsApp", "whatsapp"),
];

const AGENCIES: [(&str, &str); 3] = [("AZICAC", "AZICAC"), ("The FBI", "FBI"), ("Phoenix Police", "Phoenix Police")];

const FILLER: [&str; 4] = [
    "Further details were documented.",
    "Investigators reviewed the evidence.",
    "The matter was referred for review.",
    "Several interviews were conducted.",
];

/// One case narrative starting with a temporal marker.
pub fn planted_case(rng: &mut StdRng, year: i32) -> Planted {
    let month = *MONTHS.choose(rng).unwrap();
    let mut p = Planted {
        month,
        year,
        text: String::new(),
        perpetrator_age: None,
        victim_ages: BTreeSet::new(),
        victim_gender: None,
        victim_count: None,
        platforms: BTreeSet::new(),
        severity: BTreeSet::new(),
        topics: BTreeSet::new(),
        phrases: BTreeSet::new(),
        investigation: BTreeSet::new(),
        agencies: BTreeSet::new(),
        prosecution: BTreeSet::new(),
        images: None,
        storage: None,
        rso: false,
        relationship: "stranger".into(),
    };
    let mut s: Vec<String> = Vec::new();
    s.push(match rng.random_range(0..3) {
        0 => format!("In {month} of {year}, investigators opened a case."),
        1 => format!("In {month} {year}, investigators opened a case."),
        _ => format!("{month} {year}, investigators opened a case."),
    });

    if rng.random_bool(0.6) {
        let age = rng.random_range(19..70);
        p.perpetrator_age = Some(age);
        s.push(format!("A {age}-year-old suspect was identified."));
    }
    if rng.random_bool(0.3) {
        let age = rng.random_range(11..17);
        let (noun, gender) = if rng.random_bool(0.5) { ("girl", "female") } else { ("boy", "male") };
        p.victim_ages.insert(age);
        p.victim_gender = Some(gender);
        s.push(format!("The {age}-year-old {noun} was interviewed."));
    }
    if rng.random_bool(0.5) {
        let n = rng.random_range(2..10);
        p.victim_count = Some(n);
        s.push(format!("{n} victims were identified."));
    }

    let platforms: Vec<_> = PLATFORMS.iter().filter(|_| rng.random_bool(0.3)).collect();
    if !platforms.is_empty() {
        let names: Vec<&str> = platforms.iter().map(|(n, _)| *n).collect();
        s.push(format!("Contact occurred on {}.", names.join(" and ")));
        p.platforms.extend(platforms.iter().map(|(_, t)| t.to_string()));
    }

    if rng.random_bool(0.2) {
        s.push("The victim was an infant.".into());
        p.severity.insert("infant".into());
    }
    if rng.random_bool(0.2) {
        s.push("The victim was a young child.".into());
        p.severity.insert("very_young".into());
    }
    if rng.random_bool(0.2) {
        s.push(format!("The victim was {} years old.", rng.random_range(5..10)));
        p.severity.insert("under_10".into());
    }
    if rng.random_bool(0.3) {
        s.push("The report described sexual assault.".into());
        p.severity.insert("sexual_assault".into());
    }
    if rng.random_bool(0.25) {
        s.push("The suspect produced explicit material.".into());
        p.severity.insert("production".into());
        p.topics.insert("production".into());
    }

    let topic_sentences: [(&str, &str, f64); 6] = [
        ("possession", "The suspect possessed contraband files.", 0.4),
        ("hands_on", "There was physical contact with the victim.", 0.3),
        ("online_digital", "Files were shared over the internet.", 0.4),
        ("international", "Some files came from overseas.", 0.1),
        ("multi_state", "The conduct spanned multiple states.", 0.1),
        ("pornography", "Pornography was recovered.", 0.15),
    ];
    for (topic, sentence, prob) in topic_sentences {
        if rng.random_bool(prob) {
            s.push(sentence.into());
            p.topics.insert(topic.into());
        }
    }
    if rng.random_bool(0.2) {
        let relative = *["father", "mother", "uncle"].choose(rng).unwrap();
        s.push(format!("The suspect was the victim's {relative}."));
        p.topics.insert("family".into());
        p.relationship = relative.into();
    } else if rng.random_bool(0.3) {
        s.push("The suspect was a stranger to the victim.".into());
        p.topics.insert("stranger".into());
    }

    let phrase_sentences: [(&str, &str); 6] = [
        ("dangerous", "Officers considered him dangerous."),
        ("stated", "A witness stated the facts."),
        ("told", "The victim told a counselor."),
        ("continue", "He said he would continue."),
        ("attacked", "He attacked a witness."),
        ("out_of_control", "The situation was out of control."),
    ];
    for (phrase, sentence) in phrase_sentences {
        if rng.random_bool(0.15) {
            s.push(sentence.into());
            p.phrases.insert(phrase.into());
        }
    }

    for (kind, sentence) in [
        ("proactive", "The proactive effort began."),
        ("reactive", "The reactive response began."),
        ("undercover", "An undercover officer participated."),
    ] {
        if rng.random_bool(0.3) {
            s.push(sentence.into());
            p.investigation.insert(kind.into());
        }
    }
    for (text, tag) in AGENCIES {
        if rng.random_bool(0.3) {
            s.push(format!("{text} assisted."));
            p.agencies.insert(tag.into());
        }
    }

    if rng.random_bool(0.35) {
        let n = rng.random_range(1..5000u64);
        p.images = Some(n);
        s.push(format!("Analysts found {} images.", thousands(n)));
    }
    if rng.random_bool(0.2) {
        let (magnitude, unit, label) = if rng.random_bool(0.5) {
            (f64::from(rng.random_range(1..9u32)), StorageUnit::TB, "TB")
        } else {
            (f64::from(rng.random_range(10..900u32)), StorageUnit::GB, "GB")
        };
        p.storage = Some(StorageAmount { magnitude, unit });
        s.push(format!("Devices held {magnitude} {label} of data."));
    }
    if rng.random_bool(0.2) {
        s.push("The suspect was a registered sex offender.".into());
        p.rso = true;
    }
    if rng.random_bool(0.6) {
        s.push("The suspect was arrested.".into());
        p.prosecution.insert("arrested".into());
    }
    if rng.random_bool(0.5) {
        s.push((*FILLER.choose(rng).unwrap()).into());
    }

    // Shuffle everything after the marker sentence.
    let (head, tail) = s.split_at_mut(1);
    for i in (1..tail.len()).rev() {
        let j = rng.random_range(0..=i);
        tail.swap(i, j);
    }
    p.text = std::iter::once(head[0].clone())
        .chain(tail.iter().cloned())
        .collect::<Vec<_>>()
        .join(" ");
    p
}

/// The features the extractor must produce for a planted case.
pub fn expected_features(p: &Planted) -> FeatureSet {
    let mut f = FeatureSet {
        perpetrator_age: p.perpetrator_age,
        registered_sex_offender: p.rso,
        relationship_to_victim: p.relationship.clone(),
        victim_count: p.victim_count,
        victim_ages: p.victim_ages.clone(),
        victim_gender: p.victim_gender.map(String::from),
        platforms: p.platforms.clone(),
        investigation_type: p.investigation.clone(),
        agencies: p.agencies.clone(),
        prosecution: p.prosecution.clone(),
        evidence_images: p.images,
        evidence_storage: p.storage,
        severity_indicators: p.severity.clone(),
        case_topics: p.topics.clone(),
        severity_phrases: p.phrases.clone(),
        ..FeatureSet::default()
    };
    if f.victim_ages.is_empty() {
        f.victim_gender = None;
    }
    // Topic keywords match inside words, so "Snapchat" carries "chat".
    if f.platforms.contains("snapchat") {
        f.case_topics.insert("online_digital".into());
    }
    f
}

/// A report: a marker-free preamble followed by `n` planted cases.
pub fn document(rng: &mut StdRng, n: usize, year: i32) -> (String, Vec<Planted>) {
    let cases: Vec<Planted> = (0..n).map(|_| planted_case(rng, year)).collect();
    let mut text = String::from("Task force annual report.\nSummary of selected investigations.\n\n");
    for (i, c) in cases.iter().enumerate() {
        if i > 0 {
            text.push_str(if rng.random_bool(0.5) { "\n\n" } else { "\n" });
        }
        text.push_str(&c.text);
    }
    text.push('\n');
    (text, cases)
}

/// `n` extracted case records from seeded synthetic reports.
pub fn corpus(seed: u64, n: usize) -> Vec<CaseRecord> {
    let config = Config::default();
    let extractor = Extractor::new(&config).unwrap();
    let mut rng = rng(seed);
    let mut records = Vec::with_capacity(n);
    let mut doc = 0;
    while records.len() < n {
        let want = (n - records.len()).min(12);
        let year = 2011 + (doc % 4);
        let (text, _) = document(&mut rng, want, year);
        let org = if doc % 2 == 0 { "AZICAC" } else { "ICAC" };
        let out = pipeline::process_text(&text, &format!("doc{doc}"), org, year, &extractor, false).unwrap();
        // Distinct ids across documents of the same org and year.
        for mut r in out.records {
            r.case_id = format!("{}_d{doc:03}", r.case_id);
            for s in &mut r.spans {
                s.case_id = r.case_id.clone();
            }
            records.push(r);
        }
        doc += 1;
    }
    records
}

/// A random feature set drawn from the closed vocabularies.
pub fn random_features(rng: &mut StdRng) -> FeatureSet {
    let pick = |rng: &mut StdRng, items: &[&str], p: f64| -> BTreeSet<String> {
        items.iter().filter(|_| rng.random_bool(p)).map(|s| s.to_string()).collect()
    };
    let mut f = FeatureSet {
        platforms: pick(rng, &["facebook", "instagram", "snapchat", "online", "chat"], 0.3),
        case_topics: pick(rng, &["production", "possession", "hands_on", "online_digital", "family", "stranger"], 0.3),
        severity_indicators: pick(rng, &["infant", "very_young", "under_10", "sexual_assault", "production"], 0.25),
        severity_phrases: pick(rng, &["dangerous", "stated", "told"], 0.2),
        investigation_type: pick(rng, &["proactive", "reactive", "undercover"], 0.3),
        agencies: pick(rng, &["AZICAC", "FBI"], 0.3),
        registered_sex_offender: rng.random_bool(0.2),
        ..FeatureSet::default()
    };
    if rng.random_bool(0.5) {
        f.perpetrator_age = Some(rng.random_range(18..70));
    }
    if rng.random_bool(0.4) {
        f.victim_count = Some(rng.random_range(1..8));
    }
    if rng.random_bool(0.3) {
        f.victim_ages.insert(rng.random_range(1..17));
    }
    if rng.random_bool(0.2) {
        f.relationship_to_victim = (*["father", "uncle"].choose(rng).unwrap()).into();
    }
    f
}

pub fn record_with(id: &str, features: FeatureSet) -> CaseRecord {
    CaseRecord {
        case_id: id.into(),
        source_org: "SYN".into(),
        year: 2012,
        month: "June".into(),
        raw_text: format!("In June 2012, synthetic case {id}."),
        features,
        spans: Vec::new(),
        created_at: chrono::Utc::now(),
    }
}

/// Writes a text-layer PDF with one page per entry of `pages`, one text line
/// per input line.
pub fn write_pdf(path: &std::path::Path, pages: &[&str]) {
    use lopdf::content::{Content, Operation};
    use lopdf::{dictionary, Document, Object, Stream};

    let mut doc = Document::with_version("1.5");
    let pages_id = doc.new_object_id();
    let font_id = doc.add_object(dictionary! {
        "Type" => "Font",
        "Subtype" => "Type1",
        "BaseFont" => "Helvetica",
        "Encoding" => "WinAnsiEncoding",
    });
    let resources_id = doc.add_object(dictionary! {
        "Font" => dictionary! { "F1" => font_id },
    });
    let mut kids = Vec::new();
    for page in pages {
        let mut ops = vec![
            Operation::new("BT", vec![]),
            Operation::new("Tf", vec!["F1".into(), 10.into()]),
            Operation::new("TL", vec![12.into()]),
            Operation::new("Td", vec![40.into(), 760.into()]),
        ];
        for line in page.lines() {
            ops.push(Operation::new("Tj", vec![Object::string_literal(line)]));
            ops.push(Operation::new("T*", vec![]));
        }
        ops.push(Operation::new("ET", vec![]));
        let content = Content { operations: ops };
        let content_id = doc.add_object(Stream::new(dictionary! {}, content.encode().unwrap()));
        let page_id = doc.add_object(dictionary! {
            "Type" => "Page",
            "Parent" => pages_id,
            "Contents" => content_id,
        });
        kids.push(page_id.into());
    }
    let count = kids.len() as i64;
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! {
            "Type" => "Pages",
            "Kids" => kids,
            "Count" => count,
            "Resources" => resources_id,
            "MediaBox" => vec![0.into(), 0.into(), 612.into(), 792.into()],
        }),
    );
    let catalog_id = doc.add_object(dictionary! {
        "Type" => "Catalog",
        "Pages" => pages_id,
    });
    doc.trailer.set("Root", catalog_id);
    doc.save(path).unwrap();
}
