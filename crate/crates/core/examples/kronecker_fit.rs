//! Samples a graph from a known parameter matrix and fits it back.
//!
//! ```text
//! cargo run --release --example kronecker_fit
//! ```

use kromfac::kron::{default_theta_init, kron_generate, kronem_fit, EmConfig, KroneckerModel};

fn main() -> kromfac::Result<()> {
    let truth = KroneckerModel::new(vec![vec![0.9, 0.5], vec![0.5, 0.3]], 8)?;
    let g = kron_generate(&truth, 256, 1)?;
    println!("sampled {} nodes, {} edges", g.node_count(), g.edge_count());

    let cfg = EmConfig {
        seed: 2,
        ..EmConfig::default()
    };
    let fit = kronem_fit(&g, 0, 2, &default_theta_init(2, 3), &cfg)?;

    println!("true theta   {:?}", truth.theta_rows());
    println!("fitted theta {:?}", fit.model.theta_rows());
    println!("(rows and columns may come out swapped: digit relabeling leaves the model unchanged)");
    let trace = &fit.loglik_trace;
    println!(
        "log-likelihood {:.2} -> {:.2} over {} EM iterations, swap acceptance {:.2}",
        trace[0],
        trace[trace.len() - 1],
        trace.len(),
        fit.acceptance_rate
    );
    Ok(())
}
