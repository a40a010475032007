//! Response documents. The HTTP service and the command line both go through
//! these functions, so a `lookup` printed offline is byte-identical to the
//! body the service sends for the same snapshot, tier and format.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::rdf::{self, Graph};
use crate::resolver::{InterpretationReport, Resolver, Status};
use crate::store::ConceptRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseFormat {
    Html,
    Turtle,
    Json,
}

impl ResponseFormat {
    pub const ALL: [ResponseFormat; 3] = [ResponseFormat::Html, ResponseFormat::Turtle, ResponseFormat::Json];

    pub fn media_type(self) -> &'static str {
        match self {
            ResponseFormat::Html => "text/html",
            ResponseFormat::Turtle => "text/turtle",
            ResponseFormat::Json => "application/json",
        }
    }

    /// Value for a `Content-Type` header.
    pub fn content_type(self) -> &'static str {
        match self {
            ResponseFormat::Html => "text/html; charset=utf-8",
            ResponseFormat::Turtle => "text/turtle; charset=utf-8",
            ResponseFormat::Json => "application/json",
        }
    }

    /// Short name accepted by the `format` parameter.
    pub fn param(self) -> &'static str {
        match self {
            ResponseFormat::Html => "html",
            ResponseFormat::Turtle => "ttl",
            ResponseFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported format `{0}` (expected html, ttl or json)")]
pub struct UnknownFormat(pub String);

impl FromStr for ResponseFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "html" => Ok(ResponseFormat::Html),
            "ttl" | "turtle" => Ok(ResponseFormat::Turtle),
            "json" => Ok(ResponseFormat::Json),
            _ => Err(UnknownFormat(s.to_string())),
        }
    }
}

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

fn page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n\
         <style>.resolvable{{font-weight:bold;text-decoration:underline}}\
         .deprecated{{color:#a33}}td,th{{padding:0 .6em;text-align:left}}</style>\n\
         </head>\n<body>\n{}</body>\n</html>\n",
        escape_html(title),
        body
    )
}

fn link(uri: &str, text: &str) -> String {
    format!("<a href=\"{}\">{}</a>", escape_html(uri), escape_html(text))
}

fn lookup_html(report: &InterpretationReport) -> String {
    let input = &report.input.normalized;
    let chars: Vec<char> = input.chars().collect();
    let mut body = String::new();
    let _ = writeln!(body, "<h1>{}</h1>", escape_html(input));

    // Input string with resolvable primitives highlighted in place.
    body.push_str("<p class=\"classmark\">");
    let mut pos = 0;
    for c in &report.components {
        let (start, end) = (c.span.start, c.span.end);
        body.push_str(&escape_html(&chars[pos..start].iter().collect::<String>()));
        let text = escape_html(&chars[start..end].iter().collect::<String>());
        if c.resolvable {
            let _ = write!(body, "<span class=\"resolvable\">{text}</span>");
        } else {
            body.push_str(&text);
        }
        pos = end;
    }
    body.push_str(&escape_html(&chars[pos..].iter().collect::<String>()));
    body.push_str("</p>\n");

    let _ = writeln!(
        body,
        "<p>Version {} &middot; tier {}</p>",
        escape_html(&report.snapshot_version.label),
        report.tier
    );
    body.push_str("<table>\n<tr><th>component</th><th>kind</th><th>status</th><th>caption</th><th>notes</th></tr>\n");
    for c in &report.components {
        let name = match &c.uri {
            Some(uri) => link(&uri.to_string(), &c.notation),
            None => escape_html(&c.notation),
        };
        let status = match c.status {
            Status::Valid => "valid",
            Status::Deprecated => "deprecated",
            Status::Unknown => "unknown",
            Status::TierBlocked => "tier-blocked",
        };
        let caption = c
            .caption
            .as_ref()
            .and_then(|m| m.get("en").or_else(|| m.values().next()))
            .map(|s| escape_html(s))
            .unwrap_or_default();
        let mut notes = Vec::new();
        if c.status == Status::Deprecated {
            if c.replaced_by.is_empty() {
                notes.push("withdrawn, no successor".to_string());
            } else {
                let targets: Vec<String> = c
                    .replaced_by
                    .iter()
                    .map(|u| link(&u.to_string(), &u.notation()))
                    .collect();
                notes.push(format!("replaced by {}", targets.join(", ")));
            }
        }
        if let Some(t) = c.required_tier {
            notes.push(format!("requires the {t} tier"));
        }
        if let Some(sup) = &c.open_superclass {
            notes.push(format!("open superclass {}", link(&sup.uri.to_string(), &sup.notation)));
        }
        let class = if c.resolvable { " class=\"resolvable\"" } else { "" };
        let row_class = if c.status == Status::Deprecated {
            " class=\"deprecated\""
        } else {
            ""
        };
        let _ = writeln!(
            body,
            "<tr{row_class}><td{class}>{name}</td><td>{}</td><td>{status}</td><td>{caption}</td><td>{}</td></tr>",
            c.kind,
            notes.join("; ")
        );
    }
    body.push_str("</table>\n");
    if let Some(uri) = &report.composed_uri {
        let _ = writeln!(body, "<p>Composed: {}</p>", link(&uri.to_string(), &uri.to_string()));
    }
    page(input, &body)
}

fn graph_html(title: &str, graph: &Graph) -> String {
    let body = format!(
        "<h1>{}</h1>\n<pre>{}</pre>\n",
        escape_html(title),
        escape_html(&rdf::serialize_turtle(graph))
    );
    page(title, &body)
}

/// Body for an interpretation. JSON is the report itself; Turtle is the
/// report graph (component concepts plus any synthesized nodes).
pub fn render_lookup(report: &InterpretationReport, resolver: &Resolver, format: ResponseFormat) -> String {
    match format {
        ResponseFormat::Json => to_json(report),
        ResponseFormat::Turtle => rdf::serialize_turtle(&rdf::report_to_graph(report, resolver)),
        ResponseFormat::Html => lookup_html(report),
    }
}

/// The graph served when a concept URI is dereferenced: the record's SKOS
/// projection plus its alignments when it is the class currently carrying
/// the notation.
pub fn concept_graph(record: &ConceptRecord, resolver: &Resolver) -> Graph {
    let mut graph = rdf::concept_to_graph(record, resolver);
    let current = resolver
        .snapshot
        .latest_record(&record.notation)
        .is_some_and(|r| r == record);
    if current {
        for a in resolver.snapshot.alignments_for(&record.notation) {
            if let Ok(g) = rdf::alignment_to_graph(a, resolver) {
                graph.merge(&g);
            }
        }
    }
    graph
}

pub fn render_concept(record: &ConceptRecord, resolver: &Resolver, format: ResponseFormat) -> String {
    let graph = concept_graph(record, resolver);
    match format {
        ResponseFormat::Json => rdf::serialize_json(&graph),
        ResponseFormat::Turtle => rdf::serialize_turtle(&graph),
        ResponseFormat::Html => graph_html(&record.notation, &graph),
    }
}
