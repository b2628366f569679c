//! Writes a planted affiliation benchmark as `edges.txt` and `truth.txt`.
//!
//! ```text
//! cargo run --example planted_dataset -- out/ 150 3 42
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use kromfac::eval::{agm_generate, planted_affiliation, PlantedSpec};
use kromfac::graph::write_edge_list;

fn main() -> kromfac::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "planted".into()));
    let nodes = args.next().map_or(150, |s| s.parse().expect("node count"));
    let communities = args.next().map_or(3, |s| s.parse().expect("community count"));
    let seed = args.next().map_or(42, |s| s.parse().expect("seed"));

    let spec = PlantedSpec {
        nodes,
        communities,
        ..PlantedSpec::default()
    };
    let f = planted_affiliation(&spec, seed)?;
    let (g, truth) = agm_generate(&f, seed.wrapping_add(1))?;

    fs::create_dir_all(&dir)?;
    write_edge_list(&g, None, BufWriter::new(File::create(dir.join("edges.txt"))?))?;
    truth.write(None, BufWriter::new(File::create(dir.join("truth.txt"))?))?;
    println!(
        "{} nodes, {} edges, {} communities -> {}",
        g.node_count(),
        g.edge_count(),
        truth.len(),
        dir.display()
    );
    Ok(())
}
