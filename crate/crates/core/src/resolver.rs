//! Interpretation of classmarks against a snapshot, and the URI scheme.
//!
//! Concept URIs have the shape `{base}/{version}/{encoded-notation}` where
//! `version` is the release in which the class was introduced. Synthesized
//! expressions live under the reserved `composed` segment instead.

use std::collections::BTreeMap;
use std::fmt;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::notation::{self, Classmark, ComponentKind, ParseError, ParseTree, Span};
use crate::store::{ConceptRecord, DatasetTier, LookupError, Snapshot, VersionCode};

pub const DEFAULT_BASE_URI: &str = "https://udcdata.info";

/// Path segment reserved for synthesized expressions. Never a version label.
pub const COMPOSED_SEGMENT: &str = "composed";

/// Everything except RFC 3986 unreserved characters.
const PATH_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

/// Percent-encodes a notation for use as one URI path segment. Hex digits
/// are uppercase.
pub fn encode_notation(notation: &str) -> String {
    utf8_percent_encode(notation, PATH_SEGMENT).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("percent-decoded segment is not UTF-8")]
pub struct DecodeError;

/// Inverse of [`encode_notation`]; accepts either hex case.
pub fn decode_notation(encoded: &str) -> Result<String, DecodeError> {
    percent_decode_str(encoded)
        .decode_utf8()
        .map(|s| s.into_owned())
        .map_err(|_| DecodeError)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("base URI `{0}` is not an absolute http(s) URI")]
pub struct InvalidBaseUri(pub String);

/// The configured URI namespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UriScheme {
    base: String,
    path_prefix: String,
}

impl Default for UriScheme {
    fn default() -> Self {
        UriScheme::new(DEFAULT_BASE_URI).expect("default base URI is valid")
    }
}

impl UriScheme {
    pub fn new(base: &str) -> Result<Self, InvalidBaseUri> {
        let trimmed = base.trim_end_matches('/');
        let parsed = url::Url::parse(trimmed).map_err(|_| InvalidBaseUri(base.to_string()))?;
        if !matches!(parsed.scheme(), "http" | "https") || parsed.cannot_be_a_base() {
            return Err(InvalidBaseUri(base.to_string()));
        }
        Ok(UriScheme {
            base: trimmed.to_string(),
            path_prefix: parsed.path().trim_end_matches('/').to_string(),
        })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Path component of the base, without trailing slash (often empty).
    pub fn path_prefix(&self) -> &str {
        &self.path_prefix
    }

    /// Namespace of the scheme-specific RDF vocabulary.
    pub fn schema_namespace(&self) -> String {
        format!("{}/schema#", self.base)
    }

    pub fn concept(&self, version: &str, notation: &str) -> ConceptUri {
        ConceptUri {
            base: self.base.clone(),
            version: version.to_string(),
            encoded_notation: encode_notation(notation),
        }
    }

    pub fn composed(&self, classmark: &str) -> ConceptUri {
        self.concept(COMPOSED_SEGMENT, classmark)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptUri {
    pub base: String,
    pub version: String,
    pub encoded_notation: String,
}

impl ConceptUri {
    /// `/{version}/{encoded}` relative to the base.
    pub fn path(&self) -> String {
        format!("/{}/{}", self.version, self.encoded_notation)
    }

    pub fn notation(&self) -> String {
        decode_notation(&self.encoded_notation).expect("minted from UTF-8 text")
    }

    pub fn is_composed(&self) -> bool {
        self.version == COMPOSED_SEGMENT
    }
}

impl fmt::Display for ConceptUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.base, self.version, self.encoded_notation)
    }
}

impl Serialize for ConceptUri {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Valid,
    Deprecated,
    Unknown,
    TierBlocked,
}

/// Pointer to an open class offered in place of a blocked or unknown one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuperclassRef {
    pub notation: String,
    pub uri: ConceptUri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentStatus {
    pub notation: String,
    pub kind: ComponentKind,
    pub span: Span,
    pub status: Status,
    /// Valid and deprecated components resolve to a class.
    pub resolvable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uri: Option<ConceptUri>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub replaced_by: Vec<ConceptUri>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caption: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_tier: Option<DatasetTier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_superclass: Option<SuperclassRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterpretationReport {
    pub input: Classmark,
    pub tree: ParseTree,
    pub components: Vec<ComponentStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed_uri: Option<ConceptUri>,
    pub snapshot_version: VersionCode,
    pub tier: DatasetTier,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpretError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lookup(#[from] LookupError),
}

/// Stateless view pairing a snapshot with a URI scheme.
#[derive(Clone, Copy)]
pub struct Resolver<'a> {
    pub snapshot: &'a Snapshot,
    pub scheme: &'a UriScheme,
}

impl<'a> Resolver<'a> {
    pub fn new(snapshot: &'a Snapshot, scheme: &'a UriScheme) -> Self {
        Resolver { snapshot, scheme }
    }

    pub fn record_uri(&self, record: &ConceptRecord) -> ConceptUri {
        self.scheme.concept(&record.introduced_in.label, &record.notation)
    }

    /// URI of the class currently carrying `notation`. Its version segment is
    /// the release that introduced it; for a notation never re-used this is
    /// the earliest version the notation appears in.
    pub fn mint_uri(&self, notation: &str) -> Result<ConceptUri, LookupError> {
        self.snapshot
            .latest_record(notation)
            .map(|r| self.record_uri(r))
            .ok_or_else(|| LookupError::NotFound(notation.to_string()))
    }

    /// New-style URI for a legacy numeric record identifier. Deprecated
    /// records map to themselves, not to their replacements.
    pub fn legacy_lookup(&self, identifier: &str) -> Result<ConceptUri, LookupError> {
        self.snapshot
            .by_identifier(identifier)
            .map(|r| self.record_uri(r))
            .ok_or_else(|| LookupError::NotFound(identifier.to_string()))
    }

    pub fn open_superclass(&self, notation: &str) -> Option<SuperclassRef> {
        let sup = self.snapshot.nearest_open_superclass(notation)?;
        let uri = self.mint_uri(&sup).ok()?;
        Some(SuperclassRef { notation: sup, uri })
    }

    pub fn interpret(
        &self,
        classmark: &str,
        tier: DatasetTier,
        version: Option<&str>,
    ) -> Result<InterpretationReport, InterpretError> {
        let input = notation::normalize(classmark)?;
        let tree = notation::parse(&input)?;
        let at = match version {
            Some(label) => self
                .snapshot
                .version(label)
                .ok_or_else(|| LookupError::UnknownVersion(label.to_string()))?
                .clone(),
            None => self.snapshot.latest_version().clone(),
        };

        let mut components = Vec::new();
        for leaf in tree.leaves() {
            components.push(self.component_status(leaf, tier, &at)?);
        }
        let composed_uri = (components.len() >= 2 && components.iter().all(|c| c.resolvable))
            .then(|| self.scheme.composed(&input.normalized));
        Ok(InterpretationReport {
            input,
            tree,
            components,
            composed_uri,
            snapshot_version: at,
            tier,
        })
    }

    fn component_status(
        &self,
        leaf: notation::Component,
        tier: DatasetTier,
        at: &VersionCode,
    ) -> Result<ComponentStatus, LookupError> {
        let mut status = ComponentStatus {
            notation: leaf.notation,
            kind: leaf.kind,
            span: leaf.span,
            status: Status::Unknown,
            resolvable: false,
            uri: None,
            replaced_by: Vec::new(),
            caption: None,
            required_tier: None,
            open_superclass: None,
        };
        match self.snapshot.get(&status.notation, tier, Some(&at.label)) {
            Ok(record) => {
                status.resolvable = true;
                status.uri = Some(self.record_uri(record));
                status.caption = Some(record.caption.clone());
                if record.is_deprecated_at(at) {
                    status.status = Status::Deprecated;
                    status.replaced_by = self
                        .snapshot
                        .resolve_redirects(&status.notation)?
                        .iter()
                        .filter_map(|n| self.mint_uri(n).ok())
                        .collect();
                } else {
                    status.status = Status::Valid;
                }
            }
            Err(LookupError::TierBlocked { required, .. }) => {
                status.status = Status::TierBlocked;
                status.required_tier = Some(required);
                status.open_superclass = self.open_superclass(&status.notation);
            }
            Err(LookupError::NotFound(_)) => {
                status.open_superclass = self.open_superclass(&status.notation);
            }
            Err(other) => return Err(other),
        }
        Ok(status)
    }
}
