//! Run the HTTP service over the sample vocabulary.
//!
//! ```text
//! cargo run --example serve_sample            # listens on 127.0.0.1:8080
//! curl -H 'Accept: text/turtle' localhost:8080/MRF93/%3D162.3
//! curl -i localhost:8080/068288
//! curl 'localhost:8080/lookup?classmark=681.3(035)&key=library-demo-key&tier=full'
//! ```
//!
//! Stop with Ctrl-C; send SIGHUP to reload the snapshot from disk.

use std::path::Path;

use classmark::service::{serve, Config};

const CONFIG: &str = r#"
base_uri = "https://udcdata.info"
bind = "127.0.0.1:8080"
snapshot = "data/sample"

[[keys]]
id = "library"
key = "library-demo-key"
tier = "full"
"#;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = Config::from_toml(CONFIG, Path::new(env!("CARGO_MANIFEST_DIR")))?;
    if let Some(bind) = std::env::args().nth(1) {
        config.bind = bind.parse()?;
    }
    tracing_subscriber::fmt().with_env_filter("info").init();
    serve(config).await?;
    Ok(())
}
