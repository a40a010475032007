//! Parse classmarks into syntax trees and list their resolvable components.
//!
//! ```text
//! cargo run --example parse_classmark -- '681.3 (035)' '311:[622+669]'
//! ```

use classmark::notation::{normalize, parse, serialize};

fn main() {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = ["681.3 (035)", "311:[622+669]", "94(4)\"19\"=162", "592/599", "68.13"]
            .map(String::from)
            .to_vec();
    }
    for raw in &inputs {
        println!("{raw:?}");
        let tree = match normalize(raw).and_then(|cm| parse(&cm)) {
            Ok(tree) => tree,
            Err(e) => {
                // Positions count characters of the whitespace-free form.
                println!("  error: {e}\n");
                continue;
            }
        };
        println!("  normalized: {}", serialize(&tree));
        println!("  tree:       {:?}", tree.root);
        for c in tree.leaves() {
            println!(
                "  {:<10} {:<13} chars {}..{}",
                c.notation,
                c.kind.to_string(),
                c.span.start,
                c.span.end
            );
        }
        println!();
    }
}
