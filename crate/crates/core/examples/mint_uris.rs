//! Mint persistent concept URIs, percent-encode notations, and follow legacy
//! numeric identifiers.

use classmark::resolver::{decode_notation, encode_notation, Resolver, UriScheme};
use classmark::store::Snapshot;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snapshot = Snapshot::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample").as_ref())?;
    let scheme = UriScheme::default();
    let resolver = Resolver::new(&snapshot, &scheme);

    for notation in ["=162.3", "004", "(035)", "621.039.6", "999.999"] {
        match resolver.mint_uri(notation) {
            Ok(uri) => println!("{notation:<10} {uri}"),
            Err(e) => println!("{notation:<10} ({e})"),
        }
    }

    let encoded = encode_notation("311:[622+669]");
    println!("\nencode(311:[622+669]) = {encoded}");
    println!("decode({encoded}) = {}", decode_notation(&encoded)?);

    println!("\nlegacy 068288 -> {}", resolver.legacy_lookup("068288")?);

    // Another deployment only changes the base.
    let local = UriScheme::new("http://localhost:8080/kos")?;
    println!("local base: {}", Resolver::new(&snapshot, &local).mint_uri("=162.3")?);
    Ok(())
}
