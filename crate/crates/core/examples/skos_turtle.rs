//! Render a concept as SKOS in Turtle and in the JSON projection, and a
//! synthesized classmark as a composed node.

use classmark::rdf::{report_to_graph, serialize_turtle};
use classmark::render::{render_concept, ResponseFormat};
use classmark::resolver::{Resolver, UriScheme};
use classmark::store::{DatasetTier, Snapshot};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snapshot = Snapshot::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample").as_ref())?;
    let scheme = UriScheme::default();
    let resolver = Resolver::new(&snapshot, &scheme);

    let czech = snapshot.get("=162.3", DatasetTier::Summary, None)?;
    println!("{}", render_concept(czech, &resolver, ResponseFormat::Turtle));
    println!("{}", render_concept(czech, &resolver, ResponseFormat::Json));

    let report = resolver.interpret("311:[622+669]", DatasetTier::Summary, None)?;
    let graph = report_to_graph(&report, &resolver);
    println!("{}", serialize_turtle(&graph));
    Ok(())
}
