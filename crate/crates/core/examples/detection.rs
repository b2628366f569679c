//! Affiliation-model community detection and the hard decision.
//!
//! ```text
//! cargo run --release --example detection
//! ```

use kromfac::community::{commun_det, default_delta, hard_decision, DetectConfig};
use kromfac::eval::{agm_generate, nmi, planted_affiliation, PlantedSpec};
use kromfac::Graph;

fn main() -> kromfac::Result<()> {
    // two disjoint 4-cliques
    let mut edges = Vec::new();
    for base in [0, 4] {
        for u in base..base + 4 {
            for v in u + 1..base + 4 {
                edges.push((u, v));
            }
        }
    }
    let (cliques, _) = Graph::from_edges(8, edges)?;
    let det = commun_det(&cliques, 2, &DetectConfig::default())?;
    let cover = hard_decision(&det.f, default_delta(&cliques)?)?;
    println!("two cliques -> {:?} (loss {:.3}, {} passes)", cover.communities, det.loss, det.trace.len());

    // overlapping planted communities
    let spec = PlantedSpec {
        nodes: 120,
        communities: 3,
        overlap: 0.15,
        strength: 0.8,
    };
    let (g, truth) = agm_generate(&planted_affiliation(&spec, 1)?, 2)?;
    let det = commun_det(&g, 3, &DetectConfig { seed: 3, ..DetectConfig::default() })?;
    let delta = default_delta(&g)?;
    let found = hard_decision(&det.f, delta)?;
    println!(
        "planted: delta {delta:.3}, sizes {:?} vs truth {:?}, NMI {:.3}",
        found.communities.iter().map(Vec::len).collect::<Vec<_>>(),
        truth.communities.iter().map(Vec::len).collect::<Vec<_>>(),
        nmi(&found, &truth)?
    );
    Ok(())
}
