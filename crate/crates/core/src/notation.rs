//! Classmark grammar: normalization, parsing, serialization and component
//! extraction.
//!
//! Connector precedence, loosest first:
//!
//! ```text
//! expr     := relation ( '+' relation )*
//! relation := range ( (':' | '::') range )*
//! range    := unit ( '/' unit )*
//! unit     := base common-aux*
//! base     := main | common-aux | '[' expr ']'
//! main     := digits [A-Z][A-Za-z]* ['*' suffix] special-aux*
//! ```
//!
//! Every connector is left-associative. Digit runs follow the dot-grouping
//! convention: a dot after every third digit and only there.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Half-open character range in the normalized input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    fn cover(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// A classmark as submitted together with its whitespace-free form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classmark {
    pub raw: String,
    pub normalized: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("parse error at position {position}: expected {expected}, found {}", found_display(.found))]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    /// `None` means end of input.
    pub found: Option<char>,
}

fn found_display(found: &Option<char>) -> String {
    match found {
        Some(c) => format!("'{c}'"),
        None => "end of input".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommonKind {
    Language,
    Ethnic,
    Place,
    Form,
    Time,
    Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialKind {
    Hyphen,
    PointZero,
    Apostrophe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum Node {
    MainNumber {
        digits: String,
        extension: Option<String>,
        /// Text after `*`, without the asterisk.
        suffix: Option<String>,
        span: Span,
    },
    CommonAuxiliary {
        kind: CommonKind,
        /// Includes the delimiters, e.g. `(035)` or `=162.3`.
        body: String,
        span: Span,
    },
    SpecialAuxiliary {
        kind: SpecialKind,
        body: String,
        span: Span,
        attached_to: Box<Node>,
    },
    Attachment {
        base: Box<Node>,
        auxiliaries: Vec<Node>,
    },
    Range {
        low: Box<Node>,
        high: Box<Node>,
    },
    Relation {
        members: Vec<Node>,
        ordered: bool,
    },
    Coordination {
        members: Vec<Node>,
    },
    Group {
        inner: Box<Node>,
        span: Span,
    },
}

impl Node {
    /// Extent of this node in the normalized input.
    pub fn span(&self) -> Span {
        match self {
            Node::MainNumber { span, .. } | Node::CommonAuxiliary { span, .. } | Node::Group { span, .. } => *span,
            Node::SpecialAuxiliary { span, attached_to, .. } => attached_to.span().cover(*span),
            Node::Attachment { base, auxiliaries } => {
                auxiliaries.iter().fold(base.span(), |acc, a| acc.cover(a.span()))
            }
            Node::Range { low, high } => low.span().cover(high.span()),
            Node::Relation { members, .. } | Node::Coordination { members } => members
                .iter()
                .map(Node::span)
                .reduce(Span::cover)
                .unwrap_or(Span::new(0, 0)),
        }
    }

    /// True for the nodes that resolve as a single class: main numbers
    /// (with any special auxiliaries) and common auxiliaries.
    pub fn is_component(&self) -> bool {
        matches!(
            self,
            Node::MainNumber { .. } | Node::CommonAuxiliary { .. } | Node::SpecialAuxiliary { .. }
        )
    }

    fn write_to(&self, out: &mut String) {
        match self {
            Node::MainNumber {
                digits,
                extension,
                suffix,
                ..
            } => {
                out.push_str(digits);
                if let Some(ext) = extension {
                    out.push_str(ext);
                }
                if let Some(sfx) = suffix {
                    out.push('*');
                    out.push_str(sfx);
                }
            }
            Node::CommonAuxiliary { body, .. } => out.push_str(body),
            Node::SpecialAuxiliary { body, attached_to, .. } => {
                attached_to.write_to(out);
                out.push_str(body);
            }
            Node::Attachment { base, auxiliaries } => {
                base.write_to(out);
                for aux in auxiliaries {
                    aux.write_to(out);
                }
            }
            Node::Range { low, high } => {
                low.write_to(out);
                out.push('/');
                high.write_to(out);
            }
            Node::Relation { members, ordered } => {
                let sep = if *ordered { "::" } else { ":" };
                write_joined(out, members, sep);
            }
            Node::Coordination { members } => write_joined(out, members, "+"),
            Node::Group { inner, .. } => {
                out.push('[');
                inner.write_to(out);
                out.push(']');
            }
        }
    }

    /// Canonical text of this subtree.
    pub fn to_notation(&self) -> String {
        let mut out = String::new();
        self.write_to(&mut out);
        out
    }

    /// Notation used to look the component up in a vocabulary: digits and
    /// special auxiliaries only, without alphabetic extension or suffix.
    fn scheme_notation(&self) -> String {
        match self {
            Node::MainNumber { digits, .. } => digits.clone(),
            Node::SpecialAuxiliary { body, attached_to, .. } => {
                let mut base = attached_to.scheme_notation();
                base.push_str(body);
                base
            }
            other => other.to_notation(),
        }
    }

    fn collect_components(&self, out: &mut Vec<Component>) {
        match self {
            Node::MainNumber { .. } | Node::SpecialAuxiliary { .. } => out.push(Component {
                notation: self.scheme_notation(),
                kind: ComponentKind::Main,
                span: self.span(),
            }),
            Node::CommonAuxiliary { kind, body, span } => out.push(Component {
                notation: body.clone(),
                kind: ComponentKind::from(*kind),
                span: *span,
            }),
            Node::Attachment { base, auxiliaries } => {
                base.collect_components(out);
                for aux in auxiliaries {
                    aux.collect_components(out);
                }
            }
            Node::Range { low, high } => {
                low.collect_components(out);
                high.collect_components(out);
            }
            Node::Relation { members, .. } | Node::Coordination { members } => {
                for m in members {
                    m.collect_components(out);
                }
            }
            Node::Group { inner, .. } => inner.collect_components(out),
        }
    }

    /// Character spans of the primitive leaves (main numbers, common
    /// auxiliaries, special-auxiliary bodies), left to right.
    pub fn leaf_spans(&self) -> Vec<Span> {
        let mut out = Vec::new();
        self.collect_leaf_spans(&mut out);
        out
    }

    fn collect_leaf_spans(&self, out: &mut Vec<Span>) {
        match self {
            Node::MainNumber { span, .. } | Node::CommonAuxiliary { span, .. } => out.push(*span),
            Node::SpecialAuxiliary { span, attached_to, .. } => {
                attached_to.collect_leaf_spans(out);
                out.push(*span);
            }
            Node::Attachment { base, auxiliaries } => {
                base.collect_leaf_spans(out);
                for aux in auxiliaries {
                    aux.collect_leaf_spans(out);
                }
            }
            Node::Range { low, high } => {
                low.collect_leaf_spans(out);
                high.collect_leaf_spans(out);
            }
            Node::Relation { members, .. } | Node::Coordination { members } => {
                for m in members {
                    m.collect_leaf_spans(out);
                }
            }
            Node::Group { inner, .. } => inner.collect_leaf_spans(out),
        }
    }
}

fn write_joined(out: &mut String, members: &[Node], sep: &str) {
    for (i, m) in members.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        m.write_to(out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseTree {
    pub root: Node,
}

impl ParseTree {
    pub fn leaves(&self) -> Vec<Component> {
        leaves(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Main,
    LanguageAux,
    EthnicAux,
    PlaceAux,
    FormAux,
    TimeAux,
    PropertyAux,
}

impl From<CommonKind> for ComponentKind {
    fn from(kind: CommonKind) -> Self {
        match kind {
            CommonKind::Language => ComponentKind::LanguageAux,
            CommonKind::Ethnic => ComponentKind::EthnicAux,
            CommonKind::Place => ComponentKind::PlaceAux,
            CommonKind::Form => ComponentKind::FormAux,
            CommonKind::Time => ComponentKind::TimeAux,
            CommonKind::Property => ComponentKind::PropertyAux,
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ComponentKind::Main => "main",
            ComponentKind::LanguageAux => "language-aux",
            ComponentKind::EthnicAux => "ethnic-aux",
            ComponentKind::PlaceAux => "place-aux",
            ComponentKind::FormAux => "form-aux",
            ComponentKind::TimeAux => "time-aux",
            ComponentKind::PropertyAux => "property-aux",
        };
        f.write_str(s)
    }
}

/// One resolvable primitive of a classmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub notation: String,
    pub kind: ComponentKind,
    pub span: Span,
}

/// Strips whitespace outside `"…"` spans.
pub fn normalize(raw: &str) -> Result<Classmark, ParseError> {
    let mut normalized = String::with_capacity(raw.len());
    let mut in_quote = false;
    let mut quote_start = 0;
    for c in raw.chars() {
        if c == '"' {
            if !in_quote {
                quote_start = normalized.chars().count();
            }
            in_quote = !in_quote;
        }
        if in_quote || !c.is_whitespace() {
            normalized.push(c);
        }
    }
    if in_quote {
        return Err(ParseError {
            position: quote_start,
            expected: "closing '\"' for time auxiliary".into(),
            found: None,
        });
    }
    Ok(Classmark {
        raw: raw.to_string(),
        normalized,
    })
}

/// True iff a dot follows every third digit, only there, and the text does
/// not end in a dot.
pub fn check_dot_grouping(digits: &str) -> bool {
    let mut group = 0;
    let mut seen_digit = false;
    let mut chars = digits.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '0'..='9' => {
                if group == 3 {
                    return false;
                }
                group += 1;
                seen_digit = true;
            }
            '.' => {
                if group != 3 || chars.peek().is_none() {
                    return false;
                }
                group = 0;
            }
            _ => return false,
        }
    }
    seen_digit && group > 0
}

pub fn parse(classmark: &Classmark) -> Result<ParseTree, ParseError> {
    parse_str(&classmark.normalized)
}

/// Parses already-normalized text.
pub fn parse_str(normalized: &str) -> Result<ParseTree, ParseError> {
    let mut p = Parser {
        chars: normalized.chars().collect(),
        pos: 0,
    };
    if p.chars.is_empty() {
        return Err(p.error("classmark"));
    }
    let root = p.coordination()?;
    if p.pos != p.chars.len() {
        return Err(p.error("connector or end of input"));
    }
    Ok(ParseTree { root })
}

pub fn serialize(tree: &ParseTree) -> String {
    tree.root.to_notation()
}

pub fn leaves(tree: &ParseTree) -> Vec<Component> {
    let mut out = Vec::new();
    tree.root.collect_components(&mut out);
    out
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

/// End position and final-group length of a scanned digit run.
struct Run {
    end: usize,
    last_group: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            position: self.pos,
            expected: expected.to_string(),
            found: self.peek(),
        }
    }

    fn text(&self, span: Span) -> String {
        self.chars[span.start..span.end].iter().collect()
    }

    fn expect(&mut self, c: char, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn coordination(&mut self) -> Result<Node, ParseError> {
        let first = self.relation()?;
        let mut members = vec![first];
        while self.peek() == Some('+') {
            self.pos += 1;
            members.push(self.relation()?);
        }
        Ok(if members.len() == 1 {
            members.pop().unwrap()
        } else {
            Node::Coordination { members }
        })
    }

    fn relation(&mut self) -> Result<Node, ParseError> {
        let first = self.range()?;
        let mut members = vec![first];
        let mut ordered = false;
        while self.peek() == Some(':') {
            let this_ordered = self.peek_at(1) == Some(':');
            self.pos += if this_ordered { 2 } else { 1 };
            if members.len() >= 2 && this_ordered != ordered {
                let inner = Node::Relation {
                    members: std::mem::take(&mut members),
                    ordered,
                };
                members.push(inner);
            }
            ordered = this_ordered;
            members.push(self.range()?);
        }
        Ok(if members.len() == 1 {
            members.pop().unwrap()
        } else {
            Node::Relation { members, ordered }
        })
    }

    fn range(&mut self) -> Result<Node, ParseError> {
        let mut low = self.unit()?;
        while self.peek() == Some('/') {
            self.pos += 1;
            let high = self.unit()?;
            low = Node::Range {
                low: Box::new(low),
                high: Box::new(high),
            };
        }
        Ok(low)
    }

    fn unit(&mut self) -> Result<Node, ParseError> {
        let base = self.base()?;
        let mut auxiliaries = Vec::new();
        while self.at_common_start() {
            auxiliaries.push(self.common()?);
        }
        Ok(if auxiliaries.is_empty() {
            base
        } else {
            Node::Attachment {
                base: Box::new(base),
                auxiliaries,
            }
        })
    }

    fn at_common_start(&self) -> bool {
        match self.peek() {
            Some('(' | '=' | '"') => true,
            Some('-') => self.peek_at(1) == Some('0'),
            _ => false,
        }
    }

    fn base(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some('[') => {
                let start = self.pos;
                self.pos += 1;
                let inner = self.coordination()?;
                self.expect(']', "']' closing group")?;
                Ok(Node::Group {
                    inner: Box::new(inner),
                    span: Span::new(start, self.pos),
                })
            }
            Some(c) if c.is_ascii_digit() => self.main(),
            _ if self.at_common_start() => self.common(),
            _ => Err(self.error("main number, auxiliary or '['")),
        }
    }

    /// Scans a dot-grouped digit run starting at the cursor. A dot after a
    /// full group continues the run only when a digit follows it.
    fn run(&mut self) -> Result<Run, ParseError> {
        let start = self.pos;
        let mut group = 0;
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    if group == 3 {
                        return Err(self.error("'.' after every third digit"));
                    }
                    group += 1;
                    self.pos += 1;
                }
                Some('.') if group == 3 && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                    group = 0;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if self.pos == start {
            return Err(self.error("digit"));
        }
        Ok(Run {
            end: self.pos,
            last_group: group,
        })
    }

    fn main(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let run = self.run()?;
        let digits = self.text(Span::new(start, run.end));

        let mut extension = None;
        if self.peek().is_some_and(|c| c.is_ascii_uppercase()) {
            let ext_start = self.pos;
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                self.pos += 1;
            }
            extension = Some(self.text(Span::new(ext_start, self.pos)));
        }

        let mut suffix = None;
        if self.peek() == Some('*') {
            self.pos += 1;
            let sfx_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '.') {
                self.pos += 1;
            }
            if self.pos == sfx_start {
                return Err(self.error("non-scheme suffix after '*'"));
            }
            suffix = Some(self.text(Span::new(sfx_start, self.pos)));
        }

        let mut last_group = if extension.is_none() && suffix.is_none() {
            Some(run.last_group)
        } else {
            None
        };
        let mut node = Node::MainNumber {
            digits,
            extension,
            suffix,
            span: Span::new(start, self.pos),
        };

        loop {
            let sp_start = self.pos;
            let kind = match (self.peek(), self.peek_at(1)) {
                (Some('-'), Some('1'..='9')) => SpecialKind::Hyphen,
                (Some('\''), _) => SpecialKind::Apostrophe,
                (Some('.'), next) if last_group.is_some_and(|g| g < 3) => {
                    let digit_follows = self.peek_at(2).is_some_and(|c| c.is_ascii_digit());
                    if next == Some('0') && digit_follows {
                        SpecialKind::PointZero
                    } else {
                        return Err(self.error("'.' only after every third digit"));
                    }
                }
                _ => break,
            };
            // point-zero keeps its leading '0' inside the digit run
            self.pos += 1;
            let run = self.run()?;
            last_group = Some(run.last_group);
            node = Node::SpecialAuxiliary {
                kind,
                body: self.text(Span::new(sp_start, run.end)),
                span: Span::new(sp_start, run.end),
                attached_to: Box::new(node),
            };
        }
        Ok(node)
    }

    fn common(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let kind = match self.peek() {
            Some('=') => {
                self.pos += 1;
                self.run()?;
                CommonKind::Language
            }
            Some('(') => {
                self.pos += 1;
                let kind = match self.peek() {
                    Some('=') => {
                        self.pos += 1;
                        CommonKind::Ethnic
                    }
                    Some('0') => CommonKind::Form,
                    Some('1'..='9') => CommonKind::Place,
                    _ => return Err(self.error("'=' or digit after '('")),
                };
                self.run()?;
                self.expect(')', "')' closing auxiliary")?;
                kind
            }
            Some('"') => {
                self.pos += 1;
                self.time_group()?;
                if self.peek() == Some('/') {
                    self.pos += 1;
                    self.time_group()?;
                }
                self.expect('"', "closing '\"' of time auxiliary")?;
                CommonKind::Time
            }
            Some('-') if self.peek_at(1) == Some('0') => {
                self.pos += 1;
                let run = self.run()?;
                if run.end - start < 3 {
                    return Err(self.error("digit after '-0'"));
                }
                CommonKind::Property
            }
            _ => return Err(self.error("common auxiliary")),
        };
        let span = Span::new(start, self.pos);
        Ok(Node::CommonAuxiliary {
            kind,
            body: self.text(span),
            span,
        })
    }

    fn time_group(&mut self) -> Result<(), ParseError> {
        loop {
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.error("digit in time auxiliary"));
            }
            if self.peek() == Some('.') {
                self.pos += 1;
            } else {
                return Ok(());
            }
        }
    }
}
