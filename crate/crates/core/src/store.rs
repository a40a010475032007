//! Immutable vocabulary snapshots.
//!
//! A [`Snapshot`] is built once from three line-oriented JSON streams
//! (`records.jsonl`, `redirects.jsonl`, `alignments.jsonl`) and never
//! mutated afterwards. Records are keyed on `(notation, introduced_in)` so a
//! notation that was cancelled and later re-used yields two distinct records.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::notation::{self, Node};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const REDIRECTS_FILE: &str = "redirects.jsonl";
pub const ALIGNMENTS_FILE: &str = "alignments.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VersionCode {
    pub label: String,
    pub ordinal: i64,
}

impl fmt::Display for VersionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Access tier of a dataset. Tiers are nested: everything visible at
/// `Summary` is visible at `Abridged`, and everything there at `Full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTier {
    #[default]
    Summary,
    Abridged,
    Full,
}

impl DatasetTier {
    pub const ALL: [DatasetTier; 3] = [DatasetTier::Summary, DatasetTier::Abridged, DatasetTier::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetTier::Summary => "summary",
            DatasetTier::Abridged => "abridged",
            DatasetTier::Full => "full",
        }
    }
}

impl fmt::Display for DatasetTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown tier `{0}` (expected summary, abridged or full)")]
pub struct UnknownTier(pub String);

impl FromStr for DatasetTier {
    type Err = UnknownTier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summary" => Ok(DatasetTier::Summary),
            "abridged" => Ok(DatasetTier::Abridged),
            "full" => Ok(DatasetTier::Full),
            other => Err(UnknownTier(other.to_string())),
        }
    }
}

/// One class in one scheme version. The fourteen published data elements
/// plus version and tier bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptRecord {
    pub notation: String,
    pub identifier: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broader: Option<String>,
    #[serde(default)]
    pub caption: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub including_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub application_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_note: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub see_also: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision_history: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub introduction_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cancellation_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replaced_by: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_revision_date: Option<NaiveDate>,
    pub introduced_in: VersionCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cancelled_in: Option<VersionCode>,
    pub tier: DatasetTier,
}

impl ConceptRecord {
    pub fn is_deprecated(&self) -> bool {
        self.cancellation_date.is_some()
    }

    /// Deprecated as seen from `version`.
    pub fn is_deprecated_at(&self, version: &VersionCode) -> bool {
        self.cancelled_in.as_ref().is_some_and(|c| c.ordinal <= version.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Redirect {
    pub from: String,
    pub to: Vec<String>,
    pub since: VersionCode,
    /// Cancelled without a successor; `to` is empty.
    #[serde(default)]
    pub withdrawn: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentRelation {
    Identical,
    LocalIsNarrower,
    LocalIsBroader,
    Related,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alignment {
    pub local: String,
    pub external: String,
    pub relation: AlignmentRelation,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}:{line}: malformed line: {message}")]
    Malformed {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("empty vocabulary: {RECORDS_FILE} contains no records")]
    EmptyVocabulary,
    #[error("{RECORDS_FILE}:{line}: duplicate record ({notation}, {version}), first seen on line {first_line}")]
    Duplicate {
        notation: String,
        version: String,
        line: usize,
        first_line: usize,
    },
    #[error("{RECORDS_FILE}:{line}: identifier {identifier} already used on line {first_line}")]
    DuplicateIdentifier {
        identifier: String,
        line: usize,
        first_line: usize,
    },
    #[error("{file}:{line}: invalid notation `{notation}`: {reason}")]
    InvalidNotation {
        file: &'static str,
        line: usize,
        notation: String,
        reason: String,
    },
    #[error("version label {label} used with ordinals {first} and {second}")]
    InconsistentVersion { label: String, first: i64, second: i64 },
    #[error("version ordinal {ordinal} used for labels {first} and {second}")]
    AmbiguousOrdinal {
        ordinal: i64,
        first: String,
        second: String,
    },
    #[error("{RECORDS_FILE}:{line}: record {notation}: {reason}")]
    InconsistentRecord {
        line: usize,
        notation: String,
        reason: String,
    },
    #[error(
        "tier violation: {notation} is visible at {tier} but its broader class {ancestor} requires {ancestor_tier}"
    )]
    TierViolation {
        notation: String,
        tier: DatasetTier,
        ancestor: String,
        ancestor_tier: DatasetTier,
    },
    #[error("broader chain cycles: {}", .0.join(" -> "))]
    BroaderCycle(Vec<String>),
    #[error("{REDIRECTS_FILE}:{line}: {reason}")]
    InvalidRedirect { line: usize, reason: String },
    #[error("{ALIGNMENTS_FILE}:{line}: {reason}")]
    InvalidAlignment { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum LookupError {
    #[error("notation {0} not found")]
    NotFound(String),
    #[error("notation {notation} requires the {required} tier")]
    TierBlocked { notation: String, required: DatasetTier },
    #[error("unknown version {0}")]
    UnknownVersion(String),
    #[error("redirect cycle: {}", .0.join(" -> "))]
    RedirectCycle(Vec<String>),
}

/// A reference to a notation that no record in the snapshot carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DanglingRef {
    /// `file:line` of the referring row.
    pub source: String,
    pub field: &'static str,
    pub target: String,
}

/// Non-fatal findings of a load. A clean report is required by `ingest`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub dangling: Vec<DanglingRef>,
    pub redirect_cycles: Vec<Vec<String>>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.dangling.is_empty() && self.redirect_cycles.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    records: Vec<ConceptRecord>,
    /// Record indices per notation, ascending by `introduced_in.ordinal`.
    by_notation: HashMap<String, Vec<usize>>,
    by_identifier: HashMap<String, usize>,
    versions: Vec<VersionCode>,
    redirects: BTreeMap<String, Redirect>,
    alignments: Vec<Alignment>,
    checksum: String,
    report: IntegrityReport,
}

fn checksum_of(parts: [(&str, &[u8]); 3]) -> String {
    let mut hasher = Sha256::new();
    for (name, bytes) in parts {
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_be_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}

fn parse_lines<T: serde::de::DeserializeOwned>(
    file: &'static str,
    bytes: &[u8],
) -> Result<Vec<(usize, T)>, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::Malformed {
        file,
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8".into(),
    })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| IngestError::Malformed {
            file,
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

fn check_notation(file: &'static str, line: usize, notation: &str) -> Result<(), IngestError> {
    let invalid = |reason: String| IngestError::InvalidNotation {
        file,
        line,
        notation: notation.to_string(),
        reason,
    };
    let cm = notation::normalize(notation).map_err(|e| invalid(e.to_string()))?;
    if cm.normalized != notation {
        return Err(invalid("contains whitespace".into()));
    }
    notation::parse(&cm).map_err(|e| invalid(e.to_string()))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
    Ok(buf)
}

impl Snapshot {
    /// Reads the three ingestion files from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Snapshot, IngestError> {
        let records = read_file(&dir.join(RECORDS_FILE))?;
        let redirects = read_file(&dir.join(REDIRECTS_FILE))?;
        let alignments = read_file(&dir.join(ALIGNMENTS_FILE))?;
        Snapshot::load_bytes(&records, &redirects, &alignments)
    }

    pub fn load(
        mut records: impl Read,
        mut redirects: impl Read,
        mut alignments: impl Read,
    ) -> Result<Snapshot, IngestError> {
        let io_err = |path: &str| {
            let path = path.to_string();
            move |source| IngestError::Io { path, source }
        };
        let mut r = Vec::new();
        records.read_to_end(&mut r).map_err(io_err(RECORDS_FILE))?;
        let mut d = Vec::new();
        redirects.read_to_end(&mut d).map_err(io_err(REDIRECTS_FILE))?;
        let mut a = Vec::new();
        alignments.read_to_end(&mut a).map_err(io_err(ALIGNMENTS_FILE))?;
        Snapshot::load_bytes(&r, &d, &a)
    }

    pub fn load_bytes(records: &[u8], redirects: &[u8], alignments: &[u8]) -> Result<Snapshot, IngestError> {
        let checksum = checksum_of([
            (RECORDS_FILE, records),
            (REDIRECTS_FILE, redirects),
            (ALIGNMENTS_FILE, alignments),
        ]);
        let record_rows: Vec<(usize, ConceptRecord)> = parse_lines(RECORDS_FILE, records)?;
        let redirect_rows: Vec<(usize, Redirect)> = parse_lines(REDIRECTS_FILE, redirects)?;
        let alignment_rows: Vec<(usize, Alignment)> = parse_lines(ALIGNMENTS_FILE, alignments)?;
        if record_rows.is_empty() {
            return Err(IngestError::EmptyVocabulary);
        }

        let mut versions = VersionTable::default();
        let mut keys: HashMap<(String, String), usize> = HashMap::new();
        let mut id_lines: HashMap<String, usize> = HashMap::new();
        let mut by_identifier = HashMap::new();
        let mut by_notation: HashMap<String, Vec<usize>> = HashMap::new();
        let mut record_lines = Vec::with_capacity(record_rows.len());
        let mut recs = Vec::with_capacity(record_rows.len());

        for (line, rec) in record_rows {
            check_notation(RECORDS_FILE, line, &rec.notation)?;
            versions.add(&rec.introduced_in)?;
            if let Some(c) = &rec.cancelled_in {
                versions.add(c)?;
            }
            validate_record(line, &rec)?;
            let key = (rec.notation.clone(), rec.introduced_in.label.clone());
            if let Some(&first_line) = keys.get(&key) {
                return Err(IngestError::Duplicate {
                    notation: key.0,
                    version: key.1,
                    line,
                    first_line,
                });
            }
            keys.insert(key, line);
            if let Some(&first_line) = id_lines.get(&rec.identifier) {
                return Err(IngestError::DuplicateIdentifier {
                    identifier: rec.identifier.clone(),
                    line,
                    first_line,
                });
            }
            id_lines.insert(rec.identifier.clone(), line);
            let idx = recs.len();
            by_identifier.insert(rec.identifier.clone(), idx);
            by_notation.entry(rec.notation.clone()).or_default().push(idx);
            record_lines.push(line);
            recs.push(rec);
        }
        for indices in by_notation.values_mut() {
            indices.sort_by_key(|&i| recs[i].introduced_in.ordinal);
        }

        let mut redirect_map = BTreeMap::new();
        for (line, redirect) in &redirect_rows {
            let line = *line;
            check_notation(REDIRECTS_FILE, line, &redirect.from)?;
            versions.add(&redirect.since)?;
            let invalid = |reason: String| IngestError::InvalidRedirect { line, reason };
            if redirect.to.is_empty() != redirect.withdrawn {
                return Err(invalid(if redirect.withdrawn {
                    format!("{} is flagged withdrawn but lists replacements", redirect.from)
                } else {
                    format!("{} has no replacement and is not flagged withdrawn", redirect.from)
                }));
            }
            let deprecated = by_notation
                .get(&redirect.from)
                .is_some_and(|ix| ix.iter().any(|&i| recs[i].is_deprecated()));
            if !deprecated {
                return Err(invalid(format!(
                    "{} is not a deprecated class in the snapshot",
                    redirect.from
                )));
            }
            if redirect_map.insert(redirect.from.clone(), redirect.clone()).is_some() {
                return Err(invalid(format!("second redirect for {}", redirect.from)));
            }
        }

        for (line, alignment) in &alignment_rows {
            let line = *line;
            check_notation(ALIGNMENTS_FILE, line, &alignment.local)?;
            let absolute = url::Url::parse(&alignment.external).is_ok();
            if !absolute {
                return Err(IngestError::InvalidAlignment {
                    line,
                    reason: format!("external `{}` is not an absolute URI", alignment.external),
                });
            }
        }

        let snapshot = Snapshot {
            records: recs,
            by_notation,
            by_identifier,
            versions: versions.into_sorted(),
            redirects: redirect_map,
            alignments: alignment_rows.iter().map(|(_, a)| a.clone()).collect(),
            checksum,
            report: IntegrityReport::default(),
        };
        snapshot.check_broader_chains()?;
        snapshot.check_tier_nesting()?;
        let report = snapshot.integrity_report(&record_lines, &redirect_rows, &alignment_rows);
        Ok(Snapshot { report, ..snapshot })
    }

    fn check_broader_chains(&self) -> Result<(), IngestError> {
        for notation in self.by_notation.keys() {
            let mut seen = vec![notation.clone()];
            let mut current = notation.clone();
            while let Some(next) = self.broader_of(&current) {
                if let Some(pos) = seen.iter().position(|n| *n == next) {
                    let mut cycle = seen[pos..].to_vec();
                    cycle.push(next);
                    return Err(IngestError::BroaderCycle(cycle));
                }
                seen.push(next.clone());
                current = next;
            }
        }
        Ok(())
    }

    /// An open record never sits below a licensed one, so the open tiers form
    /// an upward-closed part of the hierarchy.
    fn check_tier_nesting(&self) -> Result<(), IngestError> {
        let mut notations: Vec<&String> = self.by_notation.keys().collect();
        notations.sort();
        for notation in notations {
            let rec = self.latest_record(notation).expect("indexed notation");
            for ancestor in self.ancestors(notation) {
                if let Some(up) = self.latest_record(&ancestor) {
                    if up.tier > rec.tier {
                        return Err(IngestError::TierViolation {
                            notation: notation.clone(),
                            tier: rec.tier,
                            ancestor,
                            ancestor_tier: up.tier,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn integrity_report(
        &self,
        record_lines: &[usize],
        redirects: &[(usize, Redirect)],
        alignments: &[(usize, Alignment)],
    ) -> IntegrityReport {
        let mut report = IntegrityReport::default();
        let mut check = |source: String, field: &'static str, target: &str| {
            if !self.by_notation.contains_key(target) {
                report.dangling.push(DanglingRef {
                    source,
                    field,
                    target: target.to_string(),
                });
            }
        };
        for (rec, line) in self.records.iter().zip(record_lines) {
            let src = || format!("{RECORDS_FILE}:{line}");
            if let Some(b) = &rec.broader {
                check(src(), "broader", b);
            }
            for t in &rec.see_also {
                check(src(), "see_also", t);
            }
            for t in &rec.replaced_by {
                check(src(), "replaced_by", t);
            }
        }
        for (line, r) in redirects {
            for t in &r.to {
                check(format!("{REDIRECTS_FILE}:{line}"), "to", t);
            }
        }
        for (line, a) in alignments {
            check(format!("{ALIGNMENTS_FILE}:{line}"), "local", &a.local);
        }
        // The same cycle is met from each of its members; keep one rotation.
        let rotation = |cycle: &[String]| {
            let ring = &cycle[..cycle.len() - 1];
            let start = (0..ring.len()).min_by_key(|&i| &ring[i]).unwrap_or(0);
            [&ring[start..], &ring[..start]].concat()
        };
        let mut seen = Vec::new();
        for from in self.redirects.keys() {
            if let Err(LookupError::RedirectCycle(cycle)) = self.resolve_redirects(from) {
                let key = rotation(&cycle);
                if !seen.contains(&key) {
                    seen.push(key);
                    report.redirect_cycles.push(cycle);
                }
            }
        }
        report
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn report(&self) -> &IntegrityReport {
        &self.report
    }

    pub fn records(&self) -> &[ConceptRecord] {
        &self.records
    }

    pub fn redirects(&self) -> impl Iterator<Item = &Redirect> {
        self.redirects.values()
    }

    pub fn alignments(&self) -> &[Alignment] {
        &self.alignments
    }

    pub fn alignments_for<'a>(&'a self, notation: &'a str) -> impl Iterator<Item = &'a Alignment> {
        self.alignments.iter().filter(move |a| a.local == notation)
    }

    /// All versions, oldest first.
    pub fn versions(&self) -> &[VersionCode] {
        &self.versions
    }

    pub fn latest_version(&self) -> &VersionCode {
        self.versions.last().expect("a loaded snapshot has versions")
    }

    pub fn version(&self, label: &str) -> Option<&VersionCode> {
        self.versions.iter().find(|v| v.label == label)
    }

    /// Records visible at `tier`, in load order.
    pub fn visible(&self, tier: DatasetTier) -> impl Iterator<Item = &ConceptRecord> {
        self.records.iter().filter(move |r| r.tier <= tier)
    }

    pub fn by_identifier(&self, identifier: &str) -> Option<&ConceptRecord> {
        self.by_identifier.get(identifier).map(|&i| &self.records[i])
    }

    /// The record keyed exactly by `(notation, introduced_in)`.
    pub fn record(&self, notation: &str, introduced_in: &str) -> Option<&ConceptRecord> {
        self.by_notation
            .get(notation)?
            .iter()
            .map(|&i| &self.records[i])
            .find(|r| r.introduced_in.label == introduced_in)
    }

    /// The record for `notation` in force at `version`: the one with the
    /// latest introduction not after it. Ignores tiers.
    pub fn record_at(&self, notation: &str, version: &VersionCode) -> Option<&ConceptRecord> {
        self.by_notation
            .get(notation)?
            .iter()
            .rev()
            .map(|&i| &self.records[i])
            .find(|r| r.introduced_in.ordinal <= version.ordinal)
    }

    pub fn latest_record(&self, notation: &str) -> Option<&ConceptRecord> {
        self.record_at(notation, self.latest_version())
    }

    pub fn contains(&self, notation: &str) -> bool {
        self.by_notation.contains_key(notation)
    }

    /// Looks a notation up at a tier and version (default: latest).
    pub fn get(&self, notation: &str, tier: DatasetTier, version: Option<&str>) -> Result<&ConceptRecord, LookupError> {
        let version = match version {
            Some(label) => self
                .version(label)
                .ok_or_else(|| LookupError::UnknownVersion(label.to_string()))?,
            None => self.latest_version(),
        };
        let rec = self
            .record_at(notation, version)
            .ok_or_else(|| LookupError::NotFound(notation.to_string()))?;
        if rec.tier > tier {
            return Err(LookupError::TierBlocked {
                notation: notation.to_string(),
                required: rec.tier,
            });
        }
        Ok(rec)
    }

    pub fn earliest_version(&self, notation: &str) -> Result<&VersionCode, LookupError> {
        self.by_notation
            .get(notation)
            .and_then(|ix| ix.first())
            .map(|&i| &self.records[i].introduced_in)
            .ok_or_else(|| LookupError::NotFound(notation.to_string()))
    }

    fn deprecated_now(&self, notation: &str) -> bool {
        match self.latest_record(notation) {
            Some(rec) => rec.is_deprecated(),
            None => self.redirects.contains_key(notation),
        }
    }

    /// Follows the deprecation concordance to the set of current notations.
    /// Fan-out is preserved in first-seen order; an empty result means the
    /// class was withdrawn without a successor.
    pub fn resolve_redirects(&self, notation: &str) -> Result<Vec<String>, LookupError> {
        if !self.contains(notation) && !self.redirects.contains_key(notation) {
            return Err(LookupError::NotFound(notation.to_string()));
        }
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk_redirects(notation, &mut path, &mut out)?;
        Ok(out)
    }

    fn walk_redirects(&self, notation: &str, path: &mut Vec<String>, out: &mut Vec<String>) -> Result<(), LookupError> {
        if let Some(pos) = path.iter().position(|n| n == notation) {
            let mut cycle = path[pos..].to_vec();
            cycle.push(notation.to_string());
            return Err(LookupError::RedirectCycle(cycle));
        }
        if !self.deprecated_now(notation) {
            if !out.iter().any(|n| n == notation) {
                out.push(notation.to_string());
            }
            return Ok(());
        }
        let targets: &[String] = match self.redirects.get(notation) {
            Some(r) => &r.to,
            None => self
                .latest_record(notation)
                .map(|r| r.replaced_by.as_slice())
                .unwrap_or_default(),
        };
        path.push(notation.to_string());
        for t in targets {
            self.walk_redirects(t, path, out)?;
        }
        path.pop();
        Ok(())
    }

    /// Explicit `broader` of the record in force, else notational truncation.
    pub fn broader_of(&self, notation: &str) -> Option<String> {
        if let Some(b) = self.latest_record(notation).and_then(|r| r.broader.clone()) {
            return Some(b);
        }
        truncate_notation(notation)
    }

    fn ancestors(&self, notation: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut current = notation.to_string();
        while let Some(next) = self.broader_of(&current) {
            if next == notation || out.contains(&next) {
                break;
            }
            out.push(next.clone());
            current = next;
        }
        out
    }

    /// First class on the broader chain, starting with `notation` itself,
    /// that is visible at the summary tier.
    pub fn nearest_open_superclass(&self, notation: &str) -> Option<String> {
        std::iter::once(notation.to_string())
            .chain(self.ancestors(notation))
            .find(|n| self.get(n, DatasetTier::Summary, None).is_ok())
    }
}

#[derive(Default)]
struct VersionTable {
    by_label: HashMap<String, i64>,
    by_ordinal: HashMap<i64, String>,
}

impl VersionTable {
    fn add(&mut self, v: &VersionCode) -> Result<(), IngestError> {
        if let Some(&ord) = self.by_label.get(&v.label) {
            if ord != v.ordinal {
                return Err(IngestError::InconsistentVersion {
                    label: v.label.clone(),
                    first: ord,
                    second: v.ordinal,
                });
            }
        }
        if let Some(label) = self.by_ordinal.get(&v.ordinal) {
            if *label != v.label {
                return Err(IngestError::AmbiguousOrdinal {
                    ordinal: v.ordinal,
                    first: label.clone(),
                    second: v.label.clone(),
                });
            }
        }
        self.by_label.insert(v.label.clone(), v.ordinal);
        self.by_ordinal.insert(v.ordinal, v.label.clone());
        Ok(())
    }

    fn into_sorted(self) -> Vec<VersionCode> {
        let mut out: Vec<VersionCode> = self
            .by_label
            .into_iter()
            .map(|(label, ordinal)| VersionCode { label, ordinal })
            .collect();
        out.sort_by_key(|v| v.ordinal);
        out
    }
}

fn validate_record(line: usize, rec: &ConceptRecord) -> Result<(), IngestError> {
    let bad = |reason: &str| {
        Err(IngestError::InconsistentRecord {
            line,
            notation: rec.notation.clone(),
            reason: reason.to_string(),
        })
    };
    if rec.identifier.trim().is_empty() {
        return bad("empty identifier");
    }
    if rec.cancellation_date.is_some() != rec.cancelled_in.is_some() {
        return bad("cancellation_date and cancelled_in must be given together");
    }
    if !rec.replaced_by.is_empty() && !rec.is_deprecated() {
        return bad("replaced_by on a record that is not cancelled");
    }
    if let Some(c) = &rec.cancelled_in {
        if c.ordinal <= rec.introduced_in.ordinal {
            return bad("cancelled_in must come after introduced_in");
        }
    }
    if rec.broader.as_deref() == Some(rec.notation.as_str()) {
        return bad("record is its own broader class");
    }
    Ok(())
}

/// Notational parent: drops the final digit of the last digit run (inside
/// auxiliary delimiters), then any separator left dangling. Attachments drop
/// their last auxiliary. `None` at a top class or for other compounds.
pub fn truncate_notation(notation: &str) -> Option<String> {
    let tree = notation::parse_str(notation).ok()?;
    match &tree.root {
        Node::Attachment { base, auxiliaries } => {
            let mut out = base.to_notation();
            for aux in &auxiliaries[..auxiliaries.len() - 1] {
                out.push_str(&aux.to_notation());
            }
            Some(out)
        }
        Node::MainNumber {
            digits,
            extension,
            suffix,
            ..
        } if extension.is_some() || suffix.is_some() => Some(digits.clone()),
        Node::MainNumber { .. } | Node::SpecialAuxiliary { .. } | Node::CommonAuxiliary { .. } => {
            truncate_component(&tree.root.to_notation())
        }
        _ => None,
    }
}

fn truncate_component(text: &str) -> Option<String> {
    let closing = match text.chars().last()? {
        c @ (')' | '"') if text.len() > 1 => Some(c),
        _ => None,
    };
    let body_end = text.len() - closing.map_or(0, char::len_utf8);
    let prefix_len = text.char_indices().find(|(_, c)| c.is_ascii_digit()).map(|(i, _)| i)?;
    let prefix = &text[..prefix_len];
    let mut core: String = text[prefix_len..body_end].to_string();
    loop {
        core.pop()?;
        while core.ends_with(|c: char| !c.is_ascii_digit()) {
            core.pop();
        }
        if core.is_empty() {
            return None;
        }
        let mut candidate = format!("{prefix}{core}");
        if let Some(c) = closing {
            candidate.push(c);
        }
        if let Ok(t) = notation::parse_str(&candidate) {
            if t.root.is_component() {
                return Some(candidate);
            }
        }
    }
}
