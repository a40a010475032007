#![allow(dead_code)]

pub mod corpus;
pub mod oracle;

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use classmark::rdf::{Graph, Term};
use classmark::store::Snapshot;
use rayon::prelude::*;

pub fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample")
}

pub fn sample_snapshot() -> Snapshot {
    Snapshot::load_dir(&sample_dir()).expect("sample data loads")
}

pub fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Calls `f` with every string over `alphabet` of length `0..=max_len`.
pub fn for_each_string(alphabet: &[char], max_len: usize, buf: &mut Vec<char>, f: &mut dyn FnMut(&str)) {
    let s: String = buf.iter().collect();
    f(&s);
    if buf.len() == max_len {
        return;
    }
    for &c in alphabet {
        buf.push(c);
        for_each_string(alphabet, max_len, buf, f);
        buf.pop();
    }
}

/// Every string over `alphabet` up to `max_len` on which `agree` is false,
/// checked in parallel. Returns (strings checked, disagreements).
pub fn disagreements(alphabet: &[char], max_len: u32, agree: impl Fn(&str) -> bool + Sync) -> (u64, Vec<String>) {
    let base = alphabet.len() as u64;
    let mut checked = 0;
    let mut bad = Vec::new();
    for len in 0..=max_len {
        let total = base.pow(len);
        checked += total;
        let mut found: Vec<String> = (0..total)
            .into_par_iter()
            .filter_map(|mut n| {
                let mut s = String::with_capacity(len as usize);
                for _ in 0..len {
                    s.push(alphabet[(n % base) as usize]);
                    n /= base;
                }
                (!agree(&s)).then_some(s)
            })
            .collect();
        bad.append(&mut found);
    }
    (checked, bad)
}

/// Writes ingestion files into a fresh temporary directory.
pub fn fixture_dir(records: &[String], redirects: &[String], alignments: &[String]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().expect("tempdir");
    let write = |name: &str, lines: &[String]| {
        let mut text = lines.join("\n");
        text.push('\n');
        std::fs::write(dir.path().join(name), text).expect("write fixture");
    };
    write("records.jsonl", records);
    write("redirects.jsonl", redirects);
    write("alignments.jsonl", alignments);
    dir
}

pub fn load_lines(
    records: &[String],
    redirects: &[String],
    alignments: &[String],
) -> Result<Snapshot, classmark::store::IngestError> {
    let join = |lines: &[String]| lines.join("\n").into_bytes();
    Snapshot::load_bytes(&join(records), &join(redirects), &join(alignments))
}

/// Minimal record line.
pub fn record(notation: &str, identifier: &str, version: (&str, i64), tier: &str) -> String {
    serde_json::json!({
        "notation": notation,
        "identifier": identifier,
        "caption": { "en": format!("Class {notation}") },
        "introduced_in": { "label": version.0, "ordinal": version.1 },
        "tier": tier,
    })
    .to_string()
}

/// Record line with extra fields merged in.
pub fn record_with(
    notation: &str,
    identifier: &str,
    version: (&str, i64),
    tier: &str,
    extra: serde_json::Value,
) -> String {
    let mut v: serde_json::Value = serde_json::from_str(&record(notation, identifier, version, tier)).unwrap();
    for (k, val) in extra.as_object().expect("object").clone() {
        v[k] = val;
    }
    v.to_string()
}

/// Summary-tier record introduced in MRF93 and cancelled in MRF01.
pub fn deprecated(notation: &str, identifier: &str, replaced_by: &[&str]) -> String {
    record_with(
        notation,
        identifier,
        ("MRF93", 1993),
        "summary",
        serde_json::json!({
            "cancellation_date": "2001-01-15",
            "cancelled_in": { "label": "MRF01", "ordinal": 2001 },
            "replaced_by": replaced_by,
        }),
    )
}

pub fn redirect(from: &str, to: &[&str], since: (&str, i64)) -> String {
    serde_json::json!({ "from": from, "to": to, "since": { "label": since.0, "ordinal": since.1 } }).to_string()
}

/// Triple in a reader-neutral text form: `<iri>`, `_:label`, or
/// `"lexical"@lang` / `"lexical"^^<datatype>` / `"lexical"`.
pub type TextTriple = (String, String, String);

fn literal_text(lexical: &str, lang: Option<&str>, datatype: Option<&str>) -> String {
    match (lang, datatype) {
        (Some(l), _) => format!("{lexical:?}@{l}"),
        (None, Some(dt)) => format!("{lexical:?}^^<{dt}>"),
        (None, None) => format!("{lexical:?}"),
    }
}

/// Renames blank nodes after the subject that links to them, so that two
/// graphs differing only in blank node labels compare equal.
fn canonical_blanks(triples: Vec<TextTriple>) -> BTreeSet<TextTriple> {
    let mut names: HashMap<String, String> = HashMap::new();
    for (s, p, o) in &triples {
        if o.starts_with("_:") && !s.starts_with("_:") {
            names.insert(o.clone(), format!("_:from{s}{p}"));
        }
    }
    let rename = |t: &String| names.get(t).cloned().unwrap_or_else(|| t.clone());
    triples
        .iter()
        .map(|(s, p, o)| (rename(s), p.clone(), rename(o)))
        .collect()
}

pub fn graph_triples(graph: &Graph) -> BTreeSet<TextTriple> {
    let term = |t: &Term| match t {
        Term::Iri(i) => format!("<{i}>"),
        Term::Blank(b) => format!("_:{b}"),
        Term::Literal(l) => literal_text(&l.lexical, l.lang.as_deref(), l.datatype.as_deref()),
    };
    canonical_blanks(
        graph
            .triples()
            .map(|t| (term(&t.subject), format!("<{}>", t.predicate), term(&t.object)))
            .collect(),
    )
}

/// Parses Turtle with an independent reader.
pub fn reparse_turtle(text: &str) -> BTreeSet<TextTriple> {
    const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    let mut out = Vec::new();
    for t in oxttl::TurtleParser::new().for_slice(text.as_bytes()) {
        let t = t.unwrap_or_else(|e| panic!("turtle does not parse: {e}\n{text}"));
        let s = match &t.subject {
            oxrdf::NamedOrBlankNode::NamedNode(n) => format!("<{}>", n.as_str()),
            oxrdf::NamedOrBlankNode::BlankNode(b) => format!("_:{}", b.as_str()),
        };
        let o = match &t.object {
            oxrdf::Term::NamedNode(n) => format!("<{}>", n.as_str()),
            oxrdf::Term::BlankNode(b) => format!("_:{}", b.as_str()),
            oxrdf::Term::Literal(l) => {
                let dt = l.datatype().as_str();
                let dt = (l.language().is_none() && dt != XSD_STRING).then_some(dt);
                literal_text(l.value(), l.language(), dt)
            }
            #[allow(unreachable_patterns)]
            other => panic!("unexpected term {other}"),
        };
        out.push((s, format!("<{}>", t.predicate.as_str()), o));
    }
    canonical_blanks(out)
}

/// Independent percent-encoder: every byte outside `A-Za-z0-9-._~` becomes
/// `%XX` with uppercase hex.
pub fn reference_encode(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn string_leaves<'v>(v: &'v serde_json::Value, out: &mut Vec<&'v str>) {
    match v {
        serde_json::Value::String(s) => out.push(s),
        serde_json::Value::Array(items) => items.iter().for_each(|i| string_leaves(i, out)),
        serde_json::Value::Object(map) => map.values().for_each(|i| string_leaves(i, out)),
        _ => {}
    }
}

/// Names of the record's data elements whose values show up in `body`.
///
/// Free-text and date elements count as leaked when they occur anywhere in a
/// string value; notation-valued elements when a string value equals them.
/// The notation itself is an allowed echo, and so is a broader class that is
/// also the reported open superclass.
pub fn leaked_fields(record: &classmark::store::ConceptRecord, body: &serde_json::Value) -> Vec<&'static str> {
    let mut leaves = Vec::new();
    string_leaves(body, &mut leaves);
    let superclass = body["open_superclass"]["notation"].as_str();
    let contains = |text: &str| leaves.iter().any(|l| l.contains(text));
    let equals = |n: &str| leaves.contains(&n);
    let date = |d: &Option<chrono::NaiveDate>| d.is_some_and(|d| contains(&d.to_string()));
    let opt = |t: &Option<String>| t.as_deref().is_some_and(contains);

    let mut leaked = Vec::new();
    let mut check = |name, hit: bool| {
        if hit {
            leaked.push(name);
        }
    };
    check("identifier", contains(&record.identifier));
    check(
        "broader",
        record
            .broader
            .as_deref()
            .is_some_and(|b| Some(b) != superclass && equals(b)),
    );
    check("caption", record.caption.values().any(|c| contains(c)));
    check("including_note", opt(&record.including_note));
    check("application_note", opt(&record.application_note));
    check("scope_note", opt(&record.scope_note));
    check("examples", record.examples.iter().any(|e| contains(e)));
    check("see_also", record.see_also.iter().any(|n| equals(n)));
    check("revision_history", opt(&record.revision_history));
    check("introduction_date", date(&record.introduction_date));
    check("cancellation_date", date(&record.cancellation_date));
    check("replaced_by", record.replaced_by.iter().any(|n| equals(n)));
    check("last_revision_date", date(&record.last_revision_date));
    leaked
}
