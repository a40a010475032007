//! Tiered access: without a key, licensed classes answer 403 with only a
//! pointer to the nearest open superclass. Requests go straight to the
//! router, no socket involved.

use axum::body::{to_bytes, Body};
use axum::http::{header, Request};
use classmark::resolver::UriScheme;
use classmark::service::{KeyTable, Service};
use classmark::store::{DatasetTier, Snapshot};
use tower::ServiceExt;

async fn show(app: &axum::Router, request: Request<Body>) {
    let line = format!("{} {}", request.method(), request.uri());
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let body = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    let body = String::from_utf8_lossy(&body);
    println!(
        "{line}\n  -> {status}\n  {}\n",
        body.lines().take(6).collect::<Vec<_>>().join("\n  ")
    );
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snapshot = Snapshot::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample").as_ref())?;
    let keys = KeyTable::default().with_key("library", "demo-key", DatasetTier::Full);
    let app = Service::new(snapshot, UriScheme::default(), keys).router();

    show(&app, Request::get("/MRF93/621.039").body(Body::empty())?).await;
    show(
        &app,
        Request::get("/MRF93/621.039")
            .header(header::AUTHORIZATION, "Bearer demo-key")
            .body(Body::empty())?,
    )
    .await;
    // Look-ups never fail on tier: blocked components are marked instead.
    show(&app, Request::get("/lookup?classmark=621.039:004").body(Body::empty())?).await;
    show(
        &app,
        Request::get("/lookup?classmark=004&tier=full").body(Body::empty())?,
    )
    .await;
    Ok(())
}
