//! Concordance links to external vocabularies, as RDF.

use classmark::rdf::{alignment_to_graph, serialize_turtle, Graph};
use classmark::render::{render_concept, ResponseFormat};
use classmark::resolver::{Resolver, UriScheme};
use classmark::store::{DatasetTier, Snapshot};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snapshot = Snapshot::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample").as_ref())?;
    let scheme = UriScheme::default();
    let resolver = Resolver::new(&snapshot, &scheme);

    let mut all = Graph::new(scheme.base());
    for a in snapshot.alignments() {
        println!("{} {:?} {}", a.local, a.relation, a.external);
        all.merge(&alignment_to_graph(a, &resolver)?);
    }
    println!("\n{}", serialize_turtle(&all));

    // Dereferencing an aligned class carries its links along.
    let art = snapshot.get("7", DatasetTier::Summary, None)?;
    println!("{}", render_concept(art, &resolver, ResponseFormat::Turtle));
    Ok(())
}
