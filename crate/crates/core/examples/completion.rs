//! Deletes nodes from a graph, infers the missing part with the Kronecker
//! model and ranks the recovered nodes by degree.
//!
//! ```text
//! cargo run --release --example completion
//! ```

use kromfac::eval::{agm_generate, planted_affiliation, rn_sample, PlantedSpec, SampleSpec, Strategy};
use kromfac::pipeline::{complete, rank};
use kromfac::KromfacConfig;

fn main() -> kromfac::Result<()> {
    let f = planted_affiliation(&PlantedSpec::default(), 5)?;
    let (g, _) = agm_generate(&f, 6)?;
    let (observed, kept) = rn_sample(&g, &SampleSpec::new(Strategy::Rn, 7))?;
    let missing = g.node_count() - kept.len();
    println!(
        "complete graph {} nodes / {} edges, observed {} / {}",
        g.node_count(),
        g.edge_count(),
        observed.node_count(),
        observed.edge_count()
    );

    let cfg = KromfacConfig::new(missing, 3, 8);
    let completion = complete(&observed, &cfg)?;
    let rg = &completion.recovered;
    println!(
        "recovered {} nodes: {} observed-missing edges, {} missing-missing edges",
        rg.missing_count(),
        rg.z1().len(),
        rg.z2().len()
    );
    if let Some(fit) = &completion.fit {
        println!("fitted theta {:?}", fit.model.theta_rows());
    }

    let ranking = rank(&completion, &cfg)?;
    println!("epsilon {:.1}: {} influential nodes", ranking.epsilon, ranking.h());
    for &u in ranking.order.iter().take(5) {
        println!("  node {u} degree {}", ranking.centrality[&u]);
    }
    Ok(())
}
