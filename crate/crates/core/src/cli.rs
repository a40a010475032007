//! Operator command line: `ingest`, `parse`, `lookup`, `mint`, `serve`.
//!
//! Exit codes: 0 success (including "unknown" answers, which are data),
//! 1 usage, 2 data or integrity errors, 3 runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::archive::{self, ArchiveError, Ingested};
use crate::notation::{self, Node, ParseError};
use crate::render::{self, ResponseFormat};
use crate::resolver::{InterpretError, Resolver, UriScheme, DEFAULT_BASE_URI};
use crate::service::{self, Config, ServeError};
use crate::store::{DatasetTier, LookupError, Snapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "classmark",
    version,
    about = "Classification notation parser, resolver and look-up service"
)]
struct Cli {
    /// Base URI that concept URIs are minted under.
    #[arg(long, global = true, default_value = DEFAULT_BASE_URI)]
    base_uri: String,
    /// Snapshot archive directory (as written by `ingest --out`).
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    /// Output format for `lookup`: html, ttl or json.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate ingestion files and optionally write a snapshot archive.
    Ingest {
        /// Directory holding records.jsonl, redirects.jsonl and alignments.jsonl.
        input: PathBuf,
        /// Where to write the archive.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the parse tree of a classmark.
    Parse { classmark: String },
    /// Interpret a classmark; prints what the service would return.
    Lookup {
        classmark: String,
        #[arg(long, default_value = "summary")]
        tier: String,
        /// Version label to interpret against (default: latest).
        #[arg(long)]
        version: Option<String>,
    },
    /// Print the URI of each notation.
    Mint {
        #[arg(required = true)]
        notations: Vec<String>,
    },
    /// Run the HTTP service.
    Serve {
        /// TOML configuration file.
        config: PathBuf,
    },
}

/// Runs the command line against explicit output streams and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_RUNTIME,
            message: message.to_string(),
        }
    }
}

impl From<ArchiveError> for Failure {
    fn from(e: ArchiveError) -> Failure {
        match e {
            ArchiveError::Io { .. } => Failure::runtime(e),
            _ => Failure::data(e),
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::runtime(e)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let scheme = UriScheme::new(&cli.base_uri).map_err(|e| Failure::usage(e.to_string()))?;
    let format: ResponseFormat = cli
        .format
        .parse()
        .map_err(|e: render::UnknownFormat| Failure::usage(e.to_string()))?;
    match cli.command {
        Command::Ingest { input, out: dest } => ingest(&input, dest.as_deref(), out, err),
        Command::Parse { classmark } => parse(&classmark, out, err),
        Command::Lookup {
            classmark,
            tier,
            version,
        } => {
            let tier: DatasetTier = tier
                .parse()
                .map_err(|e: crate::store::UnknownTier| Failure::usage(e.to_string()))?;
            let snapshot = open_snapshot(cli.snapshot.as_deref())?;
            let resolver = Resolver::new(&snapshot, &scheme);
            match resolver.interpret(&classmark, tier, version.as_deref()) {
                Ok(report) => {
                    out.write_all(render::render_lookup(&report, &resolver, format).as_bytes())
                        .map_err(io)?;
                    Ok(EXIT_OK)
                }
                Err(InterpretError::Parse(e)) => {
                    print_parse_error(&classmark, &e, err).map_err(io)?;
                    Ok(EXIT_DATA)
                }
                Err(InterpretError::Lookup(e)) => Err(Failure::data(e)),
            }
        }
        Command::Mint { notations } => {
            let snapshot = open_snapshot(cli.snapshot.as_deref())?;
            let resolver = Resolver::new(&snapshot, &scheme);
            let mut code = EXIT_OK;
            for n in &notations {
                match resolver.mint_uri(n) {
                    Ok(uri) => writeln!(out, "{n}\t{uri}").map_err(io)?,
                    Err(e @ LookupError::NotFound(_)) => {
                        writeln!(err, "{e}").map_err(io)?;
                        code = EXIT_DATA;
                    }
                    Err(e) => return Err(Failure::data(e)),
                }
            }
            Ok(code)
        }
        Command::Serve { config } => serve(&config, &cli.base_uri, cli.snapshot.as_deref()),
    }
}

fn open_snapshot(path: Option<&Path>) -> Result<Snapshot, Failure> {
    let path = path.ok_or_else(|| Failure::usage("this command needs --snapshot <DIR>"))?;
    Ok(archive::open(path)?)
}

fn ingest(input: &Path, dest: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let ingested = Ingested::read(input)?;
    let snapshot = &ingested.snapshot;
    let report = snapshot.report();
    writeln!(
        out,
        "{} records, {} redirects, {} alignments",
        snapshot.records().len(),
        snapshot.redirects().count(),
        snapshot.alignments().len()
    )
    .map_err(io)?;
    let versions: Vec<&str> = snapshot.versions().iter().map(|v| v.label.as_str()).collect();
    writeln!(out, "versions: {}", versions.join(", ")).map_err(io)?;
    writeln!(out, "checksum: {}", snapshot.checksum()).map_err(io)?;
    if !report.is_clean() {
        for d in &report.dangling {
            writeln!(err, "{}: {} refers to unknown notation {}", d.source, d.field, d.target).map_err(io)?;
        }
        for cycle in &report.redirect_cycles {
            writeln!(err, "redirect cycle: {}", cycle.join(" -> ")).map_err(io)?;
        }
        writeln!(err, "integrity check failed; no archive written").map_err(io)?;
        return Ok(EXIT_DATA);
    }
    if let Some(dest) = dest {
        ingested.write(dest)?;
        writeln!(out, "archive written to {}", dest.display()).map_err(io)?;
    }
    Ok(EXIT_OK)
}

fn parse(classmark: &str, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let result = notation::normalize(classmark).and_then(|cm| notation::parse(&cm).map(|t| (cm, t)));
    let (cm, tree) = match result {
        Ok(ok) => ok,
        Err(e) => {
            print_parse_error(classmark, &e, err).map_err(io)?;
            return Ok(EXIT_DATA);
        }
    };
    writeln!(out, "{}", cm.normalized).map_err(io)?;
    write_tree(&tree.root, "", "", out).map_err(io)?;
    writeln!(out, "components:").map_err(io)?;
    for leaf in tree.leaves() {
        writeln!(
            out,
            "  {:<14} {:<13} {}..{}",
            leaf.notation,
            leaf.kind.to_string(),
            leaf.span.start,
            leaf.span.end
        )
        .map_err(io)?;
    }
    Ok(EXIT_OK)
}

/// Error message followed by the input with a caret under the position.
fn print_parse_error(raw: &str, e: &ParseError, err: &mut dyn Write) -> std::io::Result<()> {
    let shown = match notation::normalize(raw) {
        Ok(cm) => cm.normalized,
        // Positions before an unterminated quote are unaffected by the
        // whitespace inside it.
        Err(_) => raw.chars().filter(|c| !c.is_whitespace()).collect(),
    };
    writeln!(err, "error: {e}")?;
    writeln!(err, "  {shown}")?;
    writeln!(err, "  {}^", " ".repeat(e.position))
}

fn label(node: &Node) -> String {
    let span = node.span();
    let at = format!("[{}..{})", span.start, span.end);
    match node {
        Node::Coordination { .. } => "coordination (+)".into(),
        Node::Relation { ordered: false, .. } => "relation (:)".into(),
        Node::Relation { ordered: true, .. } => "ordered relation (::)".into(),
        Node::Range { .. } => "range (/)".into(),
        Node::Attachment { .. } => "attachment".into(),
        Node::Group { .. } => format!("group [] {at}"),
        leaf => {
            let c = &notation::leaves(&notation::ParseTree { root: leaf.clone() })[0];
            format!("{} {} {at}", c.kind, c.notation)
        }
    }
}

fn write_tree(node: &Node, first: &str, rest: &str, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{first}{}", label(node))?;
    let children: Vec<&Node> = match node {
        Node::Coordination { members } | Node::Relation { members, .. } => members.iter().collect(),
        Node::Range { low, high } => vec![low, high],
        Node::Attachment { base, auxiliaries } => std::iter::once(base.as_ref()).chain(auxiliaries).collect(),
        Node::Group { inner, .. } => vec![inner],
        _ => Vec::new(),
    };
    for (i, child) in children.iter().enumerate() {
        let last = i + 1 == children.len();
        let (branch, indent) = if last { ("└─ ", "   ") } else { ("├─ ", "│  ") };
        write_tree(child, &format!("{rest}{branch}"), &format!("{rest}{indent}"), out)?;
    }
    Ok(())
}

fn serve(config_path: &Path, base_uri: &str, snapshot: Option<&Path>) -> Result<i32, Failure> {
    let mut config = Config::load(config_path).map_err(|e| match e {
        service::ConfigError::Io { .. } => Failure::runtime(e),
        _ => Failure::data(e),
    })?;
    // Explicit flags override the file.
    if base_uri != DEFAULT_BASE_URI {
        config.scheme = UriScheme::new(base_uri).map_err(|e| Failure::usage(e.to_string()))?;
    }
    if let Some(s) = snapshot {
        config.snapshot = s.to_path_buf();
    }
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    runtime.block_on(service::serve(config)).map_err(|e| match e {
        ServeError::Archive(a) => Failure::from(a),
        ServeError::Config(c) => Failure::data(c),
        other => Failure::runtime(other),
    })?;
    Ok(EXIT_OK)
}
