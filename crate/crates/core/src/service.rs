//! HTTP look-up service.
//!
//! Routes:
//!
//! * `GET /lookup?classmark=…` interprets a classmark;
//! * `GET /{version}/{notation}` dereferences a concept URI, and
//!   `GET /composed/{classmark}` a synthesized expression;
//! * `GET /{digits}` answers a legacy record URI with a permanent redirect;
//! * `GET /healthz` reports liveness and the loaded snapshot;
//! * anything else is served from the optional static asset directory.
//!
//! Every handler reads the snapshot once at request start, so a concurrent
//! [`Service::swap_snapshot`] never mixes two snapshots in one response.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwap;
use axum::body::Body;
use axum::extract::{Path as UrlPath, RawQuery, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use percent_encoding::percent_decode_str;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;
use tower::ServiceExt;
use tower_http::services::ServeDir;

use crate::archive::{self, ArchiveError};
use crate::render::{self, ResponseFormat};
use crate::resolver::{InterpretError, InvalidBaseUri, Resolver, UriScheme, COMPOSED_SEGMENT, DEFAULT_BASE_URI};
use crate::store::{DatasetTier, LookupError, Snapshot};

// ---------------------------------------------------------------------------
// Negotiation

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct NotAcceptable(pub String);

/// Picks the response format. An explicit `format` parameter wins; otherwise
/// the `Accept` header is matched with q-values, the most specific matching
/// range deciding each format's weight; with neither the answer is JSON.
pub fn negotiate(accept: Option<&str>, format_param: Option<&str>) -> Result<ResponseFormat, NotAcceptable> {
    if let Some(p) = format_param {
        return p
            .parse()
            .map_err(|e: render::UnknownFormat| NotAcceptable(e.to_string()));
    }
    let Some(accept) = accept.map(str::trim).filter(|a| !a.is_empty()) else {
        return Ok(ResponseFormat::Json);
    };

    struct Range<'a> {
        kind: &'a str,
        sub: &'a str,
        q: f32,
    }
    let ranges: Vec<Range> = accept
        .split(',')
        .filter_map(|item| {
            let mut parts = item.split(';').map(str::trim);
            let (kind, sub) = parts.next()?.split_once('/')?;
            let mut q = 1.0;
            for param in parts {
                if let Some((k, v)) = param.split_once('=') {
                    if k.trim().eq_ignore_ascii_case("q") {
                        q = v.trim().parse().unwrap_or(0.0);
                    }
                }
            }
            Some(Range {
                kind: kind.trim(),
                sub: sub.trim(),
                q,
            })
        })
        .collect();

    // Server preference breaks ties, e.g. `*/*` or `text/*`.
    const PREFERENCE: [ResponseFormat; 3] = [ResponseFormat::Json, ResponseFormat::Html, ResponseFormat::Turtle];
    let mut best: Option<(f32, usize, ResponseFormat)> = None;
    for (rank, format) in PREFERENCE.into_iter().enumerate() {
        let (kind, sub) = format.media_type().split_once('/').expect("media type");
        let weight = ranges
            .iter()
            .filter_map(|r| {
                let specificity = if r.kind.eq_ignore_ascii_case(kind) && r.sub.eq_ignore_ascii_case(sub) {
                    2
                } else if r.kind.eq_ignore_ascii_case(kind) && r.sub == "*" {
                    1
                } else if r.kind == "*" && r.sub == "*" {
                    0
                } else {
                    return None;
                };
                Some((specificity, r.q))
            })
            .max_by_key(|(specificity, _)| *specificity)
            .map(|(_, q)| q);
        if let Some(q) = weight.filter(|q| *q > 0.0) {
            let better = match best {
                None => true,
                Some((bq, brank, _)) => q > bq || (q == bq && rank < brank),
            };
            if better {
                best = Some((q, rank, format));
            }
        }
    }
    best.map(|(_, _, f)| f).ok_or_else(|| {
        NotAcceptable(format!(
            "none of text/html, text/turtle, application/json is acceptable for `{accept}`"
        ))
    })
}

// ---------------------------------------------------------------------------
// Authorization

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyEntry {
    pub id: String,
    pub key: String,
    pub tier: String,
}

/// Key → (key id, maximum tier).
#[derive(Debug, Clone, Default)]
pub struct KeyTable {
    keys: HashMap<String, (String, DatasetTier)>,
}

impl KeyTable {
    pub fn new(entries: &[KeyEntry]) -> Result<KeyTable, ConfigError> {
        let mut keys = HashMap::new();
        for (index, e) in entries.iter().enumerate() {
            let bad = |reason: String| ConfigError::BadKey {
                index: index + 1,
                id: e.id.clone(),
                reason,
            };
            if e.id.trim().is_empty() {
                return Err(bad("empty id".into()));
            }
            if e.key.trim().is_empty() {
                return Err(bad("empty key".into()));
            }
            let tier: DatasetTier = e
                .tier
                .parse()
                .map_err(|err: crate::store::UnknownTier| bad(err.to_string()))?;
            if keys.insert(e.key.clone(), (e.id.clone(), tier)).is_some() {
                return Err(bad("key already assigned to another entry".into()));
            }
        }
        Ok(KeyTable { keys })
    }

    pub fn with_key(mut self, id: &str, key: &str, tier: DatasetTier) -> KeyTable {
        self.keys.insert(key.to_string(), (id.to_string(), tier));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessGrant {
    /// Tier the request is answered at: the requested tier, or the key's
    /// maximum when none was requested.
    pub tier: DatasetTier,
    pub key_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Denial {
    pub requested: DatasetTier,
    pub granted: DatasetTier,
}

/// Unknown and absent keys both get the open summary tier.
pub fn authorize(
    keys: &KeyTable,
    presented: Option<&str>,
    requested: Option<DatasetTier>,
) -> Result<AccessGrant, Denial> {
    let (key_id, max) = match presented.and_then(|k| keys.keys.get(k)) {
        Some((id, tier)) => (Some(id.clone()), *tier),
        None => (None, DatasetTier::Summary),
    };
    let tier = requested.unwrap_or(max);
    if tier > max {
        return Err(Denial {
            requested: tier,
            granted: max,
        });
    }
    Ok(AccessGrant { tier, key_id })
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Toml(#[from] toml::de::Error),
    /// `index` counts entries from 1, in file order.
    #[error("invalid key entry #{index} (id `{id}`): {reason}")]
    BadKey { index: usize, id: String, reason: String },
    #[error(transparent)]
    BaseUri(#[from] InvalidBaseUri),
    #[error("invalid bind address `{0}`")]
    Bind(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_base")]
    base_uri: String,
    #[serde(default = "default_bind")]
    bind: String,
    snapshot: PathBuf,
    static_dir: Option<PathBuf>,
    #[serde(default)]
    keys: Vec<KeyEntry>,
}

fn default_base() -> String {
    DEFAULT_BASE_URI.to_string()
}

fn default_bind() -> String {
    "127.0.0.1:8080".to_string()
}

/// Validated service configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub scheme: UriScheme,
    pub bind: SocketAddr,
    pub snapshot: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub keys: KeyTable,
}

impl Config {
    /// Parses TOML; relative paths are resolved against `root`.
    pub fn from_toml(text: &str, root: &Path) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        Ok(Config {
            scheme: UriScheme::new(&raw.base_uri)?,
            bind: raw.bind.parse().map_err(|_| ConfigError::Bind(raw.bind.clone()))?,
            snapshot: root.join(raw.snapshot),
            static_dir: raw.static_dir.map(|d| root.join(d)),
            keys: KeyTable::new(&raw.keys)?,
        })
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

// ---------------------------------------------------------------------------
// Service

struct AppState {
    snapshot: ArcSwap<Snapshot>,
    scheme: UriScheme,
    keys: KeyTable,
    static_dir: Option<PathBuf>,
}

/// Cheaply cloneable handle; clones share the snapshot slot.
#[derive(Clone)]
pub struct Service {
    state: Arc<AppState>,
}

/// Per-request facts picked up by the logging middleware.
#[derive(Debug, Clone, Copy, Default)]
struct RequestLog {
    format: Option<ResponseFormat>,
    tier: Option<DatasetTier>,
}

impl Service {
    pub fn new(snapshot: Snapshot, scheme: UriScheme, keys: KeyTable) -> Service {
        Service {
            state: Arc::new(AppState {
                snapshot: ArcSwap::from_pointee(snapshot),
                scheme,
                keys,
                static_dir: None,
            }),
        }
    }

    pub fn from_config(config: &Config) -> Result<Service, ArchiveError> {
        let snapshot = archive::open(&config.snapshot)?;
        Ok(Service::new(snapshot, config.scheme.clone(), config.keys.clone())
            .with_static_dir(config.static_dir.clone()))
    }

    /// Serves files from `dir` for paths no route claims, with `/` mapped to
    /// `index.html`. Call before cloning the handle.
    pub fn with_static_dir(self, dir: Option<PathBuf>) -> Service {
        let state =
            Arc::try_unwrap(self.state).unwrap_or_else(|_| panic!("with_static_dir called on a shared service handle"));
        Service {
            state: Arc::new(AppState {
                static_dir: dir,
                ..state
            }),
        }
    }

    /// Atomically publishes a new snapshot. Requests already running keep the
    /// snapshot they started with.
    pub fn swap_snapshot(&self, snapshot: Snapshot) {
        self.state.snapshot.store(Arc::new(snapshot));
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.state.snapshot.load_full()
    }

    pub fn scheme(&self) -> &UriScheme {
        &self.state.scheme
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/lookup", get(lookup))
            .route("/healthz", get(healthz))
            .route("/{version}/{notation}", get(concept))
            .fallback(fallback)
            .with_state(self.state.clone())
            .layer(middleware::from_fn(log_request))
    }
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let response = next.run(req).await;
    let info = response.extensions().get::<RequestLog>().copied().unwrap_or_default();
    tracing::info!(
        target: "classmark::access",
        "{} {} {} format={} tier={}",
        method,
        path,
        response.status().as_u16(),
        info.format.map(|f| f.param()).unwrap_or("-"),
        info.tier.map(|t| t.as_str()).unwrap_or("-"),
    );
    response
}

/// Query parameters, percent-decoded without form semantics so that a `+`
/// in a classmark stays a `+`.
fn query_params(raw: Option<&str>) -> HashMap<String, String> {
    raw.unwrap_or_default()
        .split('&')
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
            let decode = |s: &str| percent_decode_str(s).decode_utf8_lossy().into_owned();
            (decode(k), decode(v))
        })
        .collect()
}

fn error_response(status: StatusCode, body: Value, log: RequestLog) -> Response {
    let mut response = (status, Json(body)).into_response();
    response.extensions_mut().insert(log);
    response
}

fn document(format: ResponseFormat, tier: DatasetTier, body: String) -> Response {
    let mut response = Response::new(Body::from(body));
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(format.content_type()));
    headers.insert(header::VARY, HeaderValue::from_static("Accept"));
    response.extensions_mut().insert(RequestLog {
        format: Some(format),
        tier: Some(tier),
    });
    response
}

/// Format, tier and parameters for a request, or the error response.
struct RequestContext {
    format: ResponseFormat,
    tier: DatasetTier,
    params: HashMap<String, String>,
}

impl RequestContext {
    // The error is the finished response; it is built once per failed request.
    #[allow(clippy::result_large_err)]
    fn new(state: &AppState, headers: &HeaderMap, raw_query: Option<&str>) -> Result<RequestContext, Response> {
        let params = query_params(raw_query);
        let accept = headers.get(header::ACCEPT).and_then(|v| v.to_str().ok());
        let format = negotiate(accept, params.get("format").map(String::as_str)).map_err(|e| {
            error_response(
                StatusCode::NOT_ACCEPTABLE,
                json!({ "error": e.0 }),
                RequestLog::default(),
            )
        })?;
        let requested = match params.get("tier") {
            Some(t) => Some(t.parse::<DatasetTier>().map_err(|e| {
                error_response(
                    StatusCode::BAD_REQUEST,
                    json!({ "error": e.to_string() }),
                    RequestLog {
                        format: Some(format),
                        tier: None,
                    },
                )
            })?),
            None => None,
        };
        let bearer = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim);
        let key = bearer.or(params.get("key").map(String::as_str));
        let grant = authorize(&state.keys, key, requested).map_err(|d| {
            error_response(
                StatusCode::FORBIDDEN,
                json!({
                    "error": format!("the {} tier requires a key; this request is limited to {}", d.requested, d.granted),
                    "required_tier": d.requested,
                }),
                RequestLog { format: Some(format), tier: Some(d.requested) },
            )
        })?;
        Ok(RequestContext {
            format,
            tier: grant.tier,
            params,
        })
    }

    fn log(&self) -> RequestLog {
        RequestLog {
            format: Some(self.format),
            tier: Some(self.tier),
        }
    }
}

fn interpret_response(state: &AppState, ctx: &RequestContext, classmark: &str) -> Response {
    let snapshot = state.snapshot.load_full();
    let resolver = Resolver::new(&snapshot, &state.scheme);
    let version = ctx.params.get("version").map(String::as_str);
    match resolver.interpret(classmark, ctx.tier, version) {
        Ok(report) => document(
            ctx.format,
            ctx.tier,
            render::render_lookup(&report, &resolver, ctx.format),
        ),
        Err(InterpretError::Parse(e)) => error_response(
            StatusCode::BAD_REQUEST,
            json!({ "error": e.to_string(), "position": e.position, "expected": e.expected }),
            ctx.log(),
        ),
        Err(InterpretError::Lookup(e @ LookupError::UnknownVersion(_))) => {
            error_response(StatusCode::NOT_FOUND, json!({ "error": e.to_string() }), ctx.log())
        }
        Err(InterpretError::Lookup(e)) => error_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({ "error": e.to_string() }),
            ctx.log(),
        ),
    }
}

async fn lookup(State(state): State<Arc<AppState>>, headers: HeaderMap, RawQuery(query): RawQuery) -> Response {
    let ctx = match RequestContext::new(&state, &headers, query.as_deref()) {
        Ok(ctx) => ctx,
        Err(response) => return response,
    };
    match ctx.params.get("classmark") {
        Some(classmark) => interpret_response(&state, &ctx, &classmark.clone()),
        None => error_response(
            StatusCode::BAD_REQUEST,
            json!({ "error": "missing `classmark` parameter", "position": 0, "expected": "a classmark" }),
            ctx.log(),
        ),
    }
}

async fn concept(
    State(state): State<Arc<AppState>>,
    UrlPath((version, notation)): UrlPath<(String, String)>,
    headers: HeaderMap,
    RawQuery(query): RawQuery,
) -> Response {
    let ctx = match RequestContext::new(&state, &headers, query.as_deref()) {
        Ok(ctx) => ctx,
        Err(response) => return response,
    };
    if version == COMPOSED_SEGMENT {
        return interpret_response(&state, &ctx, &notation);
    }
    let snapshot = state.snapshot.load_full();
    let resolver = Resolver::new(&snapshot, &state.scheme);
    let not_found = |what: String| error_response(StatusCode::NOT_FOUND, json!({ "error": what }), ctx.log());

    let Some(at) = snapshot.version(&version) else {
        return not_found(format!("unknown version {version}"));
    };
    let record = match snapshot.record(&notation, &version) {
        Some(r) => r,
        None => {
            // A notation in force at this version but introduced earlier:
            // point at its canonical URI.
            return match snapshot.record_at(&notation, at) {
                Some(r) => {
                    let target = format!("{}{}", state.scheme.path_prefix(), resolver.record_uri(r).path());
                    redirect(&target, ctx.log())
                }
                None => not_found(format!("no class {notation} in version {version}")),
            };
        }
    };
    if record.tier > ctx.tier {
        let mut body = json!({
            "error": format!("{notation} is not available at the {} tier; a key for the {} tier is required", ctx.tier, record.tier),
            "notation": notation,
            "required_tier": record.tier,
        });
        if let Some(sup) = resolver.open_superclass(&notation) {
            body["open_superclass"] = json!({ "notation": sup.notation, "uri": sup.uri });
        }
        return error_response(StatusCode::FORBIDDEN, body, ctx.log());
    }
    document(
        ctx.format,
        ctx.tier,
        render::render_concept(record, &resolver, ctx.format),
    )
}

fn redirect(location: &str, log: RequestLog) -> Response {
    let mut response = StatusCode::MOVED_PERMANENTLY.into_response();
    match HeaderValue::from_str(location) {
        Ok(v) => {
            response.headers_mut().insert(header::LOCATION, v);
        }
        Err(_) => *response.status_mut() = StatusCode::INTERNAL_SERVER_ERROR,
    }
    response.extensions_mut().insert(log);
    response
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    let snapshot = state.snapshot.load_full();
    Json(json!({
        "status": "ok",
        "checksum": snapshot.checksum(),
        "latest_version": snapshot.latest_version().label,
        "records": snapshot.records().len(),
    }))
    .into_response()
}

/// Legacy numeric URIs, then static assets.
async fn fallback(State(state): State<Arc<AppState>>, req: Request) -> Response {
    let path = req.uri().path();
    let segment = path.strip_prefix('/').unwrap_or(path);
    if !segment.is_empty() && segment.bytes().all(|b| b.is_ascii_digit()) {
        let snapshot = state.snapshot.load_full();
        let resolver = Resolver::new(&snapshot, &state.scheme);
        return match resolver.legacy_lookup(segment) {
            Ok(uri) => redirect(
                &format!("{}{}", state.scheme.path_prefix(), uri.path()),
                RequestLog::default(),
            ),
            Err(e) => error_response(
                StatusCode::NOT_FOUND,
                json!({ "error": e.to_string() }),
                RequestLog::default(),
            ),
        };
    }
    if let Some(dir) = &state.static_dir {
        if matches!(*req.method(), Method::GET | Method::HEAD) {
            return match ServeDir::new(dir).oneshot(req).await {
                Ok(response) => response.map(Body::new),
                Err(never) => match never {},
            };
        }
    }
    error_response(
        StatusCode::NOT_FOUND,
        json!({ "error": format!("no resource at {path}") }),
        RequestLog::default(),
    )
}

// ---------------------------------------------------------------------------
// Running

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
    tracing::info!("shutdown signal received, draining connections");
}

/// Reloads the snapshot from `path` on SIGHUP. A snapshot that fails to load
/// is logged and the current one kept.
#[cfg(unix)]
fn spawn_reload(service: Service, path: PathBuf) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else {
            return;
        };
        while hup.recv().await.is_some() {
            let p = path.clone();
            match tokio::task::spawn_blocking(move || archive::open(&p)).await {
                Ok(Ok(snapshot)) => {
                    tracing::info!(checksum = snapshot.checksum(), "snapshot reloaded");
                    service.swap_snapshot(snapshot);
                }
                Ok(Err(e)) => tracing::error!("snapshot reload failed: {e}"),
                Err(e) => tracing::error!("snapshot reload task failed: {e}"),
            }
        }
    });
}

/// Binds, serves until SIGINT/SIGTERM and drains in-flight requests.
pub async fn serve(config: Config) -> Result<(), ServeError> {
    let service = Service::from_config(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.bind,
            source,
        })?;
    #[cfg(unix)]
    spawn_reload(service.clone(), config.snapshot.clone());
    tracing::info!(
        "ready on http://{} (base {}, snapshot {})",
        listener.local_addr()?,
        config.scheme.base(),
        service.snapshot().checksum()
    );
    axum::serve(listener, service.router())
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}
