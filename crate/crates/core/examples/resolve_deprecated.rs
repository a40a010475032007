//! Interpret a classmark against the sample vocabulary: a cancelled class
//! is reported as deprecated together with the classes replacing it.

use classmark::resolver::{Resolver, UriScheme};
use classmark::store::{DatasetTier, Snapshot};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snapshot = Snapshot::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample").as_ref())?;
    let scheme = UriScheme::default();
    let resolver = Resolver::new(&snapshot, &scheme);

    let report = resolver.interpret("681.3(035)", DatasetTier::Full, None)?;
    println!("{} against {}", report.input.normalized, report.snapshot_version.label);
    for c in &report.components {
        let uri = c.uri.as_ref().map(ToString::to_string).unwrap_or_else(|| "-".into());
        println!("  {:<8} {:<11} {uri}", c.notation, format!("{:?}", c.status));
        for r in &c.replaced_by {
            println!("           replaced by {r}");
        }
    }
    if let Some(uri) = &report.composed_uri {
        println!("  composed: {uri}");
    }

    // The same class was valid when it was introduced.
    let then = resolver.interpret("681.3", DatasetTier::Full, Some("MRF93"))?;
    println!("681.3 in MRF93: {:?}", then.components[0].status);

    // Redirects can chain; resolution follows them to classes in force.
    println!("681.31 now lives at {:?}", snapshot.resolve_redirects("681.31")?);
    Ok(())
}
