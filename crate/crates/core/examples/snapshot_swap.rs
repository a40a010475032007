//! Ingest the sample files into a checksummed archive, serve it, and swap in
//! a new snapshot while the service keeps answering.

use axum::body::{to_bytes, Body};
use axum::http::Request;
use classmark::archive::{self, Ingested};
use classmark::resolver::UriScheme;
use classmark::service::{KeyTable, Service};
use classmark::store::Snapshot;
use tower::ServiceExt;

async fn health(app: &axum::Router) -> String {
    let response = app
        .clone()
        .oneshot(Request::get("/healthz").body(Body::empty()).unwrap())
        .await
        .unwrap();
    String::from_utf8_lossy(&to_bytes(response.into_body(), usize::MAX).await.unwrap()).into_owned()
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = tempfile::tempdir()?;
    let sample = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

    let ingested = Ingested::read(sample.as_ref())?;
    let manifest = ingested.write(&work.path().join("v1"))?;
    println!(
        "archive v1: {} records, checksum {}",
        manifest.counts.records, manifest.checksum
    );

    let service = Service::new(
        archive::open(&work.path().join("v1"))?,
        UriScheme::default(),
        KeyTable::default(),
    );
    let app = service.router();
    println!("serving:  {}", health(&app).await);

    // A smaller vocabulary, e.g. an emergency rollback build.
    let records = std::fs::read_to_string(format!("{sample}/records.jsonl"))?;
    let kept: Vec<&str> = records.lines().filter(|l| !l.contains("\"tier\":\"full\"")).collect();
    let next = Snapshot::load_bytes(kept.join("\n").as_bytes(), b"", b"")?;
    service.swap_snapshot(next);
    println!("swapped:  {}", health(&app).await);

    // Loading the same bytes again always gives the same checksum.
    let again = archive::open(&work.path().join("v1"))?;
    println!("reload of v1 matches: {}", again.checksum() == manifest.checksum);
    Ok(())
}
