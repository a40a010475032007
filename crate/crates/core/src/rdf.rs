//! SKOS projection of concept records, synthesized expressions and
//! alignments, with deterministic Turtle and JSON writers.
//!
//! Record elements map onto SKOS as follows; names in the right column are
//! scheme sub-elements declared as sub-properties of their SKOS parent.
//!
//! | element             | predicate           | sub-element             |
//! |---------------------|---------------------|-------------------------|
//! | notation            | `skos:notation`     |                         |
//! | class identifier    | `a skos:Concept`    |                         |
//! | broader class       | `skos:broader`      |                         |
//! | caption             | `skos:prefLabel`    |                         |
//! | including note      | `skos:note`         | `udc:includingNote`     |
//! | application note    | `skos:note`         | `udc:applicationNote`   |
//! | scope note          | `skos:scopeNote`    |                         |
//! | examples            | `skos:example`      |                         |
//! | see also reference  | `skos:related`      |                         |
//! | revision history    | `skos:historyNote`  | `udc:revisionHistory`   |
//! | introduction date   | `skos:historyNote`  | `udc:introductionDate`  |
//! | cancellation date   | `skos:historyNote`  | `udc:cancellationDate`  |
//! | replaced by         | `skos:historyNote`  | `udc:replacedBy`        |
//! | last revision date  | `skos:historyNote`  | `udc:lastrevisionDate`  |

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde_json::{json, Map, Value};

use crate::notation::Node;
use crate::resolver::{ConceptUri, InterpretationReport, Resolver};
use crate::store::{Alignment, AlignmentRelation, ConceptRecord, LookupError};

pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Local names of the scheme sub-elements and their SKOS parents.
pub const SUB_ELEMENTS: [(&str, &str); 7] = [
    ("includingNote", "note"),
    ("applicationNote", "note"),
    ("revisionHistory", "historyNote"),
    ("introductionDate", "historyNote"),
    ("cancellationDate", "historyNote"),
    ("replacedBy", "historyNote"),
    ("lastrevisionDate", "historyNote"),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: String,
    pub lang: Option<String>,
    /// Full datatype IRI; `None` for plain and language-tagged strings.
    pub datatype: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Term {
        Term::Iri(s.into())
    }

    pub fn plain(s: impl Into<String>) -> Term {
        Term::Literal(Literal {
            lexical: s.into(),
            lang: None,
            datatype: None,
        })
    }

    pub fn lang(s: impl Into<String>, lang: impl Into<String>) -> Term {
        Term::Literal(Literal {
            lexical: s.into(),
            lang: Some(lang.into()),
            datatype: None,
        })
    }

    pub fn typed(s: impl Into<String>, datatype: impl Into<String>) -> Term {
        Term::Literal(Literal {
            lexical: s.into(),
            lang: None,
            datatype: Some(datatype.into()),
        })
    }

    pub fn date(d: NaiveDate) -> Term {
        Term::typed(d.format("%Y-%m-%d").to_string(), format!("{XSD}date"))
    }
}

impl From<&ConceptUri> for Term {
    fn from(uri: &ConceptUri) -> Term {
        Term::Iri(uri.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

/// Set of triples plus the prefix table used to write them.
#[derive(Debug, Clone)]
pub struct Graph {
    prefixes: Vec<(String, String)>,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.seen == other.seen
    }
}

/// One predicate of a subject with its objects.
type PredicateGroup<'g> = (&'g str, Vec<&'g Term>);
type PredicateGroups<'g> = Vec<PredicateGroup<'g>>;
/// Sort key placing well-known predicates first; see `predicate_key`.
type PredicateKey = (usize, u64, String);

impl Graph {
    /// Empty graph with the fixed prefix table for a scheme whose base URI
    /// is `base` (no trailing slash).
    pub fn new(base: &str) -> Graph {
        let prefixes = [
            ("skos", SKOS.to_string()),
            ("owl", OWL.to_string()),
            ("udc", format!("{base}/schema#")),
            ("rdf", RDF.to_string()),
            ("rdfs", RDFS.to_string()),
            ("xsd", XSD.to_string()),
            ("ns", format!("{base}/")),
        ]
        .into_iter()
        .map(|(p, ns)| (p.to_string(), ns))
        .collect();
        Graph {
            prefixes,
            triples: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn prefixes(&self) -> &[(String, String)] {
        &self.prefixes
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, subject: &Term, predicate: &str, object: &Term) -> bool {
        self.seen.contains(&Triple {
            subject: subject.clone(),
            predicate: predicate.to_string(),
            object: object.clone(),
        })
    }

    /// Adds a triple; duplicates collapse. Panics on a literal subject.
    pub fn insert(&mut self, subject: Term, predicate: impl Into<String>, object: Term) {
        assert!(!matches!(subject, Term::Literal(_)), "literal used as subject");
        let t = Triple {
            subject,
            predicate: predicate.into(),
            object,
        };
        if self.seen.insert(t.clone()) {
            self.triples.push(t);
        }
    }

    pub fn merge(&mut self, other: &Graph) {
        for t in &other.triples {
            self.insert(t.subject.clone(), t.predicate.clone(), t.object.clone());
        }
    }

    fn ns(&self, prefix: &str) -> &str {
        &self.prefixes.iter().find(|(p, _)| p == prefix).expect("fixed prefix").1
    }

    /// Expands a `prefix:local` name against the prefix table.
    pub fn expand(&self, curie: &str) -> String {
        let (prefix, local) = curie.split_once(':').expect("prefixed name");
        format!("{}{}", self.ns(prefix), local)
    }

    fn compact(&self, iri: &str) -> Option<String> {
        self.prefixes.iter().find_map(|(p, ns)| {
            let local = iri.strip_prefix(ns.as_str())?;
            let simple = !local.is_empty()
                && local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && local.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_');
            simple.then(|| format!("{p}:{local}"))
        })
    }

    fn predicate_rank(&self, iri: &str) -> (usize, u64, String) {
        const ORDER: [&str; 26] = [
            "rdf:type",
            "skos:notation",
            "skos:broader",
            "skos:prefLabel",
            "udc:includingNote",
            "udc:applicationNote",
            "skos:scopeNote",
            "skos:example",
            "skos:related",
            "udc:revisionHistory",
            "udc:introductionDate",
            "udc:cancellationDate",
            "udc:replacedBy",
            "udc:lastrevisionDate",
            "owl:sameAs",
            "skos:broadMatch",
            "skos:narrowMatch",
            "skos:relatedMatch",
            "rdfs:subPropertyOf",
            "udc:operator",
            "udc:memberList",
            "udc:nonAuthoritative",
            "skos:note",
            "skos:historyNote",
            "skos:exactMatch",
            "skos:closeMatch",
        ];
        let compact = self.compact(iri).unwrap_or_default();
        if let Some(pos) = ORDER.iter().position(|p| *p == compact) {
            return (pos, 0, String::new());
        }
        // rdf:_1, rdf:_2, ... in numeric order
        if let Some(n) = iri
            .strip_prefix(RDF)
            .and_then(|l| l.strip_prefix('_'))
            .and_then(|n| n.parse::<u64>().ok())
        {
            return (ORDER.len(), n, String::new());
        }
        (ORDER.len() + 1, 0, iri.to_string())
    }

    /// Triples grouped by subject then predicate, in output order.
    fn grouped(&self) -> Vec<(&Term, PredicateGroups<'_>)> {
        let mut subjects: BTreeMap<(u8, &str), BTreeMap<PredicateKey, PredicateGroup>> = BTreeMap::new();
        for t in &self.triples {
            let key = match &t.subject {
                Term::Iri(s) => (0, s.as_str()),
                Term::Blank(b) => (1, b.as_str()),
                Term::Literal(_) => unreachable!("checked on insert"),
            };
            subjects
                .entry(key)
                .or_default()
                .entry(self.predicate_rank(&t.predicate))
                .or_insert_with(|| (t.predicate.as_str(), Vec::new()))
                .1
                .push(&t.object);
        }
        let subject_terms: BTreeMap<(u8, &str), &Term> = self
            .triples
            .iter()
            .map(|t| match &t.subject {
                Term::Iri(s) => ((0, s.as_str()), &t.subject),
                Term::Blank(b) => ((1, b.as_str()), &t.subject),
                Term::Literal(_) => unreachable!(),
            })
            .collect();
        subjects
            .into_iter()
            .map(|(key, preds)| {
                let preds = preds
                    .into_values()
                    .map(|(p, mut objs)| {
                        objs.sort();
                        (p, objs)
                    })
                    .collect();
                (subject_terms[&key], preds)
            })
            .collect()
    }

    fn turtle_iri(&self, iri: &str) -> String {
        self.compact(iri).unwrap_or_else(|| format!("<{iri}>"))
    }

    fn turtle_term(&self, term: &Term) -> String {
        match term {
            Term::Iri(i) => self.turtle_iri(i),
            Term::Blank(b) => format!("_:{b}"),
            Term::Literal(l) => {
                let mut out = String::from("\"");
                for c in l.lexical.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        '\t' => out.push_str("\\t"),
                        c => out.push(c),
                    }
                }
                out.push('"');
                if let Some(lang) = &l.lang {
                    out.push('@');
                    out.push_str(lang);
                } else if let Some(dt) = &l.datatype {
                    out.push_str("^^");
                    out.push_str(&self.turtle_iri(dt));
                }
                out
            }
        }
    }
}

pub fn serialize_turtle(graph: &Graph) -> String {
    let mut out = String::new();
    for (prefix, ns) in graph.prefixes() {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }
    for (subject, preds) in graph.grouped() {
        out.push('\n');
        out.push_str(&graph.turtle_term(subject));
        for (i, (pred, objs)) in preds.iter().enumerate() {
            let pred = if *pred == format!("{RDF}type") {
                "a".to_string()
            } else {
                graph.turtle_iri(pred)
            };
            let objs: Vec<String> = objs.iter().map(|o| graph.turtle_term(o)).collect();
            out.push_str(if i == 0 { " " } else { " ;\n    " });
            out.push_str(&pred);
            out.push(' ');
            out.push_str(&objs.join(", "));
        }
        out.push_str(" .\n");
    }
    out
}

/// One object per subject, keyed by compact predicate names. IRIs appear as
/// `{"@id": ...}`, literals as `{"@value": ...}` with `@language` or `@type`.
pub fn serialize_json(graph: &Graph) -> String {
    let mut doc = Map::new();
    for (subject, preds) in graph.grouped() {
        let key = match subject {
            Term::Iri(i) => i.clone(),
            Term::Blank(b) => format!("_:{b}"),
            Term::Literal(_) => unreachable!(),
        };
        let mut obj = Map::new();
        for (pred, objs) in preds {
            let name = graph.compact(pred).unwrap_or_else(|| pred.to_string());
            let values = objs
                .into_iter()
                .map(|o| match o {
                    Term::Iri(i) => json!({ "@id": i }),
                    Term::Blank(b) => json!({ "@id": format!("_:{b}") }),
                    Term::Literal(l) => {
                        let mut v = Map::new();
                        v.insert("@value".into(), Value::String(l.lexical.clone()));
                        if let Some(lang) = &l.lang {
                            v.insert("@language".into(), Value::String(lang.clone()));
                        }
                        if let Some(dt) = &l.datatype {
                            let dt = graph.compact(dt).unwrap_or_else(|| dt.clone());
                            v.insert("@type".into(), Value::String(dt));
                        }
                        Value::Object(v)
                    }
                })
                .collect();
            obj.insert(name, Value::Array(values));
        }
        doc.insert(key, Value::Object(obj));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values");
    s.push('\n');
    s
}

fn declare_sub_elements(graph: &mut Graph) {
    let sub_property_of = graph.expand("rdfs:subPropertyOf");
    for (local, parent) in SUB_ELEMENTS {
        let s = Term::iri(graph.expand(&format!("udc:{local}")));
        let o = Term::iri(graph.expand(&format!("skos:{parent}")));
        graph.insert(s, sub_property_of.clone(), o);
    }
}

/// Projects one record onto SKOS. Absent optional elements emit nothing.
pub fn concept_to_graph(record: &ConceptRecord, resolver: &Resolver) -> Graph {
    let mut g = Graph::new(resolver.scheme.base());
    let subject = Term::from(&resolver.record_uri(record));
    let p = |g: &Graph, curie: &str| g.expand(curie);
    let link = |notation: &str| resolver.mint_uri(notation).ok().map(|u| Term::from(&u));

    g.insert(subject.clone(), p(&g, "rdf:type"), Term::iri(p(&g, "skos:Concept")));
    g.insert(subject.clone(), p(&g, "skos:notation"), Term::plain(&record.notation));
    if let Some(b) = record.broader.as_deref().and_then(link) {
        g.insert(subject.clone(), p(&g, "skos:broader"), b);
    }
    for (lang, text) in &record.caption {
        g.insert(subject.clone(), p(&g, "skos:prefLabel"), Term::lang(text, lang));
    }
    let notes = [
        ("udc:includingNote", &record.including_note),
        ("udc:applicationNote", &record.application_note),
        ("skos:scopeNote", &record.scope_note),
    ];
    for (pred, value) in notes {
        if let Some(v) = value {
            g.insert(subject.clone(), p(&g, pred), Term::plain(v));
        }
    }
    for ex in &record.examples {
        g.insert(subject.clone(), p(&g, "skos:example"), Term::plain(ex));
    }
    for see in record.see_also.iter().filter_map(|n| link(n)) {
        g.insert(subject.clone(), p(&g, "skos:related"), see);
    }
    if let Some(h) = &record.revision_history {
        g.insert(subject.clone(), p(&g, "udc:revisionHistory"), Term::plain(h));
    }
    let dates = [
        ("udc:introductionDate", record.introduction_date),
        ("udc:cancellationDate", record.cancellation_date),
    ];
    for (pred, date) in dates {
        if let Some(d) = date {
            g.insert(subject.clone(), p(&g, pred), Term::date(d));
        }
    }
    for rep in record.replaced_by.iter().filter_map(|n| link(n)) {
        g.insert(subject.clone(), p(&g, "udc:replacedBy"), rep);
    }
    if let Some(d) = record.last_revision_date {
        g.insert(subject.clone(), p(&g, "udc:lastrevisionDate"), Term::date(d));
    }
    declare_sub_elements(&mut g);
    g
}

/// Operator name recorded on a synthesized-expression node.
pub fn operator_name(node: &Node) -> Option<&'static str> {
    Some(match node {
        Node::Coordination { .. } => "coordination",
        Node::Range { .. } => "range",
        Node::Relation { ordered: false, .. } => "relation",
        Node::Relation { ordered: true, .. } => "ordered-relation",
        Node::Attachment { .. } => "attachment",
        Node::Group { .. } => "group",
        _ => return None,
    })
}

fn children(node: &Node) -> Vec<&Node> {
    match node {
        Node::Attachment { base, auxiliaries } => std::iter::once(base.as_ref()).chain(auxiliaries).collect(),
        Node::Range { low, high } => vec![low, high],
        Node::Relation { members, .. } | Node::Coordination { members } => members.iter().collect(),
        Node::Group { inner, .. } => vec![inner],
        _ => Vec::new(),
    }
}

struct ComposedWriter<'r, 'a> {
    resolver: &'r Resolver<'a>,
    component_uris: std::vec::IntoIter<ConceptUri>,
    emitted: HashSet<String>,
    lists: usize,
}

impl ComposedWriter<'_, '_> {
    fn node(&mut self, g: &mut Graph, node: &Node) -> Term {
        if node.is_component() {
            let uri = self.component_uris.next().expect("one URI per component");
            return Term::from(&uri);
        }
        let uri = self.resolver.scheme.composed(&node.to_notation()).to_string();
        let subject = Term::iri(uri.clone());
        let members: Vec<Term> = children(node).into_iter().map(|c| self.node(g, c)).collect();
        if !self.emitted.insert(uri) {
            return subject;
        }
        let list = Term::Blank(format!("members{}", self.lists));
        self.lists += 1;
        let rdf_type = g.expand("rdf:type");
        g.insert(
            subject.clone(),
            rdf_type.clone(),
            Term::iri(g.expand("udc:SynthesizedExpression")),
        );
        g.insert(
            subject.clone(),
            g.expand("skos:notation"),
            Term::plain(node.to_notation()),
        );
        g.insert(
            subject.clone(),
            g.expand("udc:operator"),
            Term::plain(operator_name(node).expect("interior node")),
        );
        g.insert(subject.clone(), g.expand("udc:memberList"), list.clone());
        g.insert(
            subject.clone(),
            g.expand("udc:nonAuthoritative"),
            Term::typed("true", format!("{XSD}boolean")),
        );
        g.insert(list.clone(), rdf_type, Term::iri(g.expand("rdf:Seq")));
        for (i, m) in members.into_iter().enumerate() {
            g.insert(list.clone(), format!("{RDF}_{}", i + 1), m);
        }
        subject
    }
}

/// Graph for an interpretation: the concept graph of every resolvable
/// component plus, when the report carries a composed URI, one synthesized
/// node per interior tree node with an ordered member list.
pub fn report_to_graph(report: &InterpretationReport, resolver: &Resolver) -> Graph {
    let mut g = Graph::new(resolver.scheme.base());
    let version = Some(report.snapshot_version.label.as_str());
    for c in report.components.iter().filter(|c| c.resolvable) {
        if let Ok(rec) = resolver.snapshot.get(&c.notation, report.tier, version) {
            g.merge(&concept_to_graph(rec, resolver));
        }
    }
    if report.composed_uri.is_some() {
        let uris: Vec<ConceptUri> = report
            .components
            .iter()
            .map(|c| c.uri.clone().expect("resolvable components carry URIs"))
            .collect();
        let mut writer = ComposedWriter {
            resolver,
            component_uris: uris.into_iter(),
            emitted: HashSet::new(),
            lists: 0,
        };
        writer.node(&mut g, &report.tree.root);
    }
    g
}

pub fn alignment_predicate(relation: AlignmentRelation) -> &'static str {
    match relation {
        AlignmentRelation::Identical => "owl:sameAs",
        // the external resource is broader than the local class
        AlignmentRelation::LocalIsNarrower => "skos:broadMatch",
        AlignmentRelation::LocalIsBroader => "skos:narrowMatch",
        AlignmentRelation::Related => "skos:relatedMatch",
    }
}

pub fn alignment_to_graph(alignment: &Alignment, resolver: &Resolver) -> Result<Graph, LookupError> {
    let local = resolver.mint_uri(&alignment.local)?;
    let mut g = Graph::new(resolver.scheme.base());
    let pred = g.expand(alignment_predicate(alignment.relation));
    g.insert(Term::from(&local), pred, Term::iri(alignment.external.clone()));
    Ok(g)
}
